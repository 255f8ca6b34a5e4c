//! Bounded enumeration of system moves.

use serde::{Deserialize, Serialize};

use super::{StoreUpdate, SystemConfig, SystemMove};
use crate::lang::ResolvedModule;
use crate::nominal::{fresh_avoiding, fresh_many, Name, NameSet, Sort};
use crate::store::{Store, StoreValue};
use crate::syntax::Value;

/// Finite bounds on what the system may do in one move, plus exploration
/// depth and the fuel for internal runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveBudget {
    pub ints: Vec<i64>,
    pub fresh_locs: usize,
    pub width: usize,
    pub depth: usize,
    pub fuel: usize,
}

impl Default for MoveBudget {
    fn default() -> Self {
        MoveBudget { ints: vec![0], fresh_locs: 1, width: 1, depth: 4, fuel: 10_000 }
    }
}

/// What the system knows and may target at a system configuration.
#[derive(Clone, Debug)]
pub struct SystemView {
    /// Names fresh locations and continuations must avoid.
    pub used: NameSet,
    pub public: NameSet,
    /// The store restricted to public locations.
    pub visible: Store,
    pub call_targets: Vec<Name>,
    pub ret_targets: Vec<Name>,
}

impl SystemView {
    pub fn of(sc: &SystemConfig, m: &ResolvedModule) -> SystemView {
        SystemView {
            used: sc.used.clone(),
            public: sc.public.clone(),
            visible: sc.visible_store(),
            call_targets: sc
                .public
                .functions()
                .iter()
                .copied()
                .filter(|f| m.defs.contains_key(f))
                .collect(),
            ret_targets: sc.return_targets(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Atom {
    Int(i64),
    Known(Name),
    Fresh(usize),
}

struct Gen<'a> {
    atoms: Vec<Atom>,
    fresh: &'a [Name],
    width: usize,
}

impl Gen<'_> {
    fn resolve(&self, a: Atom) -> Value {
        match a {
            Atom::Int(n) => Value::Int(n),
            Atom::Known(n) => Value::Name(n),
            Atom::Fresh(i) => Value::Name(self.fresh[i]),
        }
    }

    /// Atoms allowed when `introduced` fresh names are already in use: fresh
    /// names must appear in canonical order, so only the next one is new.
    fn choices(&self, introduced: usize) -> impl Iterator<Item = (Atom, usize)> + '_ {
        self.atoms.iter().filter_map(move |&a| match a {
            Atom::Fresh(i) if i < introduced => Some((a, introduced)),
            Atom::Fresh(i) if i == introduced => Some((a, introduced + 1)),
            Atom::Fresh(_) => None,
            _ => Some((a, introduced)),
        })
    }

    fn values(&self, introduced: usize) -> Vec<(Value, usize)> {
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<Atom>, usize)> = vec![(Vec::new(), introduced)];
        while let Some((seq, intro)) = stack.pop() {
            let v = Value::tuple(seq.iter().map(|a| self.resolve(*a)));
            if seq.len() <= self.width {
                out.push((v, intro));
            }
            if seq.len() < self.width {
                for (a, next) in self.choices(intro) {
                    let mut s = seq.clone();
                    s.push(a);
                    stack.push((s, next));
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Assignments of an atom (or the current value) to each public
    /// location, in key order.
    fn stores(&self, visible: &Store, introduced: usize) -> Vec<(StoreUpdate, usize)> {
        let mut acc: Vec<(StoreUpdate, usize)> = vec![(StoreUpdate::new(), introduced)];
        for (a, current) in visible.locs() {
            let mut next = Vec::new();
            for (partial, intro) in &acc {
                let mut seen = Vec::new();
                let mut push = |v: StoreValue, i: usize, seen: &mut Vec<StoreValue>| {
                    if !seen.contains(&v) {
                        seen.push(v);
                        let mut p = partial.clone();
                        p.insert(*a, v);
                        next.push((p, i));
                    }
                };
                push(*current, *intro, &mut seen);
                for (atom, i) in self.choices(*intro) {
                    let v = StoreValue::from_value(&self.resolve(atom)).expect("atoms are storable");
                    push(v, i, &mut seen);
                }
            }
            acc = next;
        }
        acc
    }

    /// Binds every introduced fresh location, possibly introducing more.
    fn bind_fresh(&self, base: StoreUpdate, introduced: usize) -> Vec<StoreUpdate> {
        let mut out = Vec::new();
        let mut stack = vec![(base, 0usize, introduced)];
        while let Some((store, bound, intro)) = stack.pop() {
            if bound == intro {
                out.push(store);
                continue;
            }
            for (atom, i) in self.choices(intro) {
                let v = StoreValue::from_value(&self.resolve(atom)).expect("atoms are storable");
                let mut s = store.clone();
                s.insert(self.fresh[bound], v);
                stack.push((s, bound + 1, i));
            }
        }
        out.sort();
        out
    }
}

/// All moves the system can make from `view` within the budget, up to the
/// choice of fresh names.
pub fn enumerate_moves(view: &SystemView, b: &MoveBudget) -> Vec<SystemMove> {
    let fresh = fresh_many(Sort::Location, &view.used, b.fresh_locs);
    let mut atoms: Vec<Atom> = b.ints.iter().map(|n| Atom::Int(*n)).collect();
    atoms.dedup();
    atoms.extend(
        view.public
            .iter()
            .filter(|n| n.is_loc() || n.is_func())
            .map(|n| Atom::Known(*n)),
    );
    atoms.extend((0..fresh.len()).map(Atom::Fresh));
    let gen = Gen { atoms, fresh: &fresh, width: b.width };

    let mut payloads: Vec<(Value, StoreUpdate)> = Vec::new();
    for (v, intro) in gen.values(0) {
        for (store, intro2) in gen.stores(&view.visible, intro) {
            for full in gen.bind_fresh(store, intro2) {
                payloads.push((v.clone(), full));
            }
        }
    }

    let mut moves = Vec::new();
    if !view.call_targets.is_empty() {
        let k = fresh_avoiding(Sort::Continuation, &view.used, &NameSet::new());
        for f in &view.call_targets {
            for (v, s) in &payloads {
                moves.push(SystemMove::Call { f: *f, arg: v.clone(), k, store: s.clone() });
            }
        }
    }
    for k in &view.ret_targets {
        for (v, s) in &payloads {
            moves.push(SystemMove::Ret { value: v.clone(), k: *k, store: s.clone() });
        }
    }
    moves
}

pub fn enumerate_system_moves(sc: &SystemConfig, m: &ResolvedModule, b: &MoveBudget) -> Vec<SystemMove> {
    enumerate_moves(&SystemView::of(sc, m), b)
}
