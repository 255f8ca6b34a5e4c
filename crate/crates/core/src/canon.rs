//! Canonical representatives of states up to renaming of unpinned names.
//!
//! Names are discovered by walking the state in an order that depends only
//! on its shape and on the pinned names; the i-th discovered name of a sort
//! is then renamed to the i-th index of that sort not taken by a pinned name.

use std::collections::VecDeque;

use crate::nominal::{Name, NameSet, Nominal, Permutation, Sort};
use crate::sls::{Label, SlsState};
use crate::store::{Lookup, Store};

/// States that can be put in canonical form.
pub trait Canonicalize: Nominal + Sized {
    /// Visits the names of the state's control part in structural order.
    fn roots(&self, visit: &mut dyn FnMut(Name));
    /// Stores whose bindings are followed from discovered names.
    fn stores(&self) -> Vec<&Store>;
    /// Name sets consulted for names occurring nowhere else, most
    /// significant first.
    fn name_sets(&self) -> Vec<&NameSet>;
}

impl Canonicalize for SlsState {
    fn roots(&self, visit: &mut dyn FnMut(Name)) {
        if let SlsState::Program(c) = self {
            c.control.visit_names(visit);
            for fr in &c.frames {
                fr.visit_names(visit);
            }
            visit(c.ret);
        }
    }

    fn stores(&self) -> Vec<&Store> {
        self.store().into_iter().collect()
    }

    fn name_sets(&self) -> Vec<&NameSet> {
        match self {
            SlsState::System(c) => vec![&c.public, &c.used],
            SlsState::Program(c) => vec![&c.public, &c.used],
            SlsState::Halted(_) => Vec::new(),
        }
    }
}

impl Canonicalize for Label {
    fn roots(&self, visit: &mut dyn FnMut(Name)) {
        self.action.visit_names(visit);
    }

    fn stores(&self) -> Vec<&Store> {
        vec![&self.store]
    }

    fn name_sets(&self) -> Vec<&NameSet> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm<T> {
    pub value: T,
    /// `value = witness · original`.
    pub witness: Permutation,
}

struct Discovery<'a> {
    pinned: &'a NameSet,
    stores: Vec<&'a Store>,
    seen: NameSet,
    order: Vec<Name>,
    queue: VecDeque<Name>,
}

impl Discovery<'_> {
    fn visit(&mut self, n: Name) {
        if self.pinned.contains(&n) || !self.seen.insert(n) {
            return;
        }
        self.order.push(n);
        self.queue.push_back(n);
    }

    fn drain(&mut self) {
        while let Some(n) = self.queue.pop_front() {
            let stores = self.stores.clone();
            for s in stores {
                match s.get(n) {
                    Lookup::Data(v) => v.visit_names(&mut |m| self.visit(m)),
                    Lookup::Cont(susp) => susp.visit_names(&mut |m| self.visit(m)),
                    Lookup::Absent => {}
                }
            }
        }
    }

    fn render_name(&self, n: Name) -> String {
        if self.pinned.contains(&n) {
            n.to_string()
        } else if let Some(i) = self.order.iter().position(|m| *m == n) {
            format!("#{i}")
        } else {
            format!("?{}", n.sort.prefix())
        }
    }

    /// A rendering of a binding that does not depend on undiscovered names.
    fn shape(&self, store_index: usize, key: Name) -> String {
        let s = self.stores[store_index];
        let mut names = Vec::new();
        let body = match s.get(key) {
            Lookup::Data(v) => {
                v.visit_names(&mut |m| names.push(m));
                v.to_string()
            }
            Lookup::Cont(susp) => {
                susp.visit_names(&mut |m| names.push(m));
                format!("{}", crate::syntax::DisplayFrames(&susp.frames))
            }
            Lookup::Absent => String::new(),
        };
        let mut body = replace_names(&body, &|n| self.render_name(n));
        body.push('|');
        for n in names {
            body.push_str(&self.render_name(n));
            body.push(',');
        }
        format!("{store_index}:{}:{body}", key.sort.prefix())
    }

    /// Discovers unreachable bindings, smallest shape first.
    fn garbage(&mut self) {
        loop {
            let mut best: Option<(String, Name)> = None;
            for (i, s) in self.stores.iter().enumerate() {
                for key in s.domain().iter() {
                    if self.seen.contains(key) || self.pinned.contains(key) {
                        continue;
                    }
                    let shape = self.shape(i, *key);
                    if best.as_ref().is_none_or(|(b, bn)| (&shape, key) < (b, bn)) {
                        best = Some((shape, *key));
                    }
                }
            }
            match best {
                Some((_, key)) => {
                    self.visit(key);
                    self.drain();
                }
                None => return,
            }
        }
    }
}

/// Replaces every name token (`l3`, `f0`, `k7`) in `text` via `f`.
fn replace_names(text: &str, f: &dyn Fn(Name) -> String) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let boundary = i == 0 || !(chars[i - 1].is_alphanumeric() || chars[i - 1] == '_');
        if boundary && matches!(c, 'l' | 'f' | 'k') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let ends = j == chars.len() || !(chars[j].is_alphanumeric() || chars[j] == '_');
            if j > i + 1 && ends {
                let tok: String = chars[i..j].iter().collect();
                if let Ok(n) = tok.parse::<Name>() {
                    out.push_str(&f(n));
                    i = j;
                    continue;
                }
            }
        }
        out.push(c);
        i += 1;
    }
    out
}

/// The order in which unpinned names of `x` are renumbered.
pub fn discovery_order<T: Canonicalize>(x: &T, pinned: &NameSet) -> Vec<Name> {
    let mut d = Discovery { pinned, stores: x.stores(), seen: NameSet::new(), order: Vec::new(), queue: VecDeque::new() };
    x.roots(&mut |n| d.visit(n));
    d.queue.extend(pinned.iter().copied());
    d.drain();
    d.garbage();
    for set in x.name_sets() {
        for n in set.iter() {
            d.visit(*n);
        }
    }
    let mut rest = NameSet::new();
    x.visit_names(&mut |n| {
        rest.insert(n);
    });
    for n in rest.iter() {
        d.visit(*n);
    }
    d.order
}

/// The permutation sending `order` to the least indices free of `pinned`.
pub fn renumbering(order: &[Name], pinned: &NameSet) -> Permutation {
    let mut next = [0u32; 3];
    let slot = |s: Sort| match s {
        Sort::Location => 0,
        Sort::Function => 1,
        Sort::Continuation => 2,
    };
    let mut pairs = Vec::with_capacity(order.len());
    for &n in order {
        let i = slot(n.sort);
        while pinned.contains(&Name::new(n.sort, next[i])) {
            next[i] += 1;
        }
        pairs.push((n, Name::new(n.sort, next[i])));
        next[i] += 1;
    }
    Permutation::from_injection(pairs).expect("sort-preserving injection")
}

pub fn canonicalize<T: Canonicalize>(x: &T, pinned: &NameSet) -> CanonicalForm<T> {
    let witness = renumbering(&discovery_order(x, pinned), pinned);
    CanonicalForm { value: x.permute(&witness), witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_module;
    use crate::sls::{initial_config, replay, SystemMove};
    use crate::store::StoreValue;
    use crate::syntax::Value;

    const PROT: &str = "export prot; import read;
decl prot() { local s, k, x; s = new(); k = new(); x = read(); if (*x == *k) then *s else *k }";

    fn mid_attack_state() -> SlsState {
        let m = load_module(PROT).unwrap();
        let script = vec![SystemMove::Call {
            f: Name::func(0),
            arg: Value::unit(),
            k: Name::cont(0),
            store: Default::default(),
        }];
        replay(&m, &script, 1000).unwrap().last_state().unwrap().clone()
    }

    #[test]
    fn private_swap_has_same_canonical_form() {
        let st = mid_attack_state();
        let pinned = st.public();
        let pi = Permutation::swap(Name::loc(0), Name::loc(3)).unwrap();
        let a = canonicalize(&st, &pinned);
        let b = canonicalize(&st.permute(&pi), &pinned);
        assert_eq!(a.value, b.value);
        assert_eq!(st.permute(&a.witness), a.value);
    }

    #[test]
    fn moving_a_public_name_changes_canonical_form() {
        let st = mid_attack_state();
        let pinned = st.public();
        let pi = Permutation::swap(Name::cont(1), Name::cont(5)).unwrap();
        assert_ne!(canonicalize(&st, &pinned).value, canonicalize(&st.permute(&pi), &pinned.permute(&pi)).value);
    }

    #[test]
    fn garbage_cells_are_ordered_by_shape() {
        let mut s = crate::sls::SystemConfig { used: NameSet::new(), public: NameSet::new(), store: Store::new() };
        s.store.set_loc(Name::loc(4), StoreValue::Name(Name::loc(9)));
        s.store.set_loc(Name::loc(9), StoreValue::Int(1));
        s.used.extend([Name::loc(4), Name::loc(9)]);
        let st = SlsState::System(s);
        let c = canonicalize(&st, &NameSet::new());
        let SlsState::System(cs) = &c.value else { panic!() };
        assert_eq!(cs.store.to_string(), "l0=1, l1=l0");
        let swapped = st.permute(&Permutation::swap(Name::loc(4), Name::loc(9)).unwrap());
        assert_eq!(canonicalize(&swapped, &NameSet::new()).value, c.value);
    }

    #[test]
    fn initial_state_is_already_canonical() {
        let m = load_module(PROT).unwrap();
        let st = SlsState::System(initial_config(&m));
        let c = canonicalize(&st, &NameSet::new());
        assert_eq!(c.value, st);
    }

    #[test]
    fn name_tokens_are_replaced() {
        let out = replace_names("l3 + f10 (k2, x) kl1", &|n| format!("<{n}>"));
        assert_eq!(out, "<l3> + <f10> (<k2>, x) kl1");
    }
}
