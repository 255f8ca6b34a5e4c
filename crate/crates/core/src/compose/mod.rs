//! Semantic composition of two modules.
//!
//! A composite state pairs the configurations of both modules with the names
//! shared with the outside system and an auxiliary store holding the current
//! values of the public locations. Calls and returns between the two
//! modules are silent; everything else is observed by the outside system.

use std::fmt;

use thiserror::Error;

use crate::canon::Canonicalize;
use crate::lang::{LangError, ResolvedModule};
use crate::lts::{explore_with, ExploreLimits, Lts, Succ};
use crate::machine::{run_to_boundary, StepResult};
use crate::nominal::{Name, NameSet, Nominal, Permutation};
use crate::sls::{
    apply_system_move, emit_boundary, enumerate_moves, initial_config, Action, Dir, Halt, Label, MoveBudget,
    SlsState, StoreUpdate, SystemConfig, SystemMove, SystemView,
};
use crate::store::Store;
use crate::syntax::Value;

mod check;
mod translate;

pub use check::{check_composition, check_state_lemma, CompositionReport, LemmaClause, PropItem, TallyReport};
pub use translate::{internal_conts, translate_r, TranslateError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeState {
    pub left: SlsState,
    pub right: SlsState,
    /// Names communicated between either module and the outside system.
    pub shared: NameSet,
    /// Continuation names of `shared` introduced by the outside system.
    pub sys_conts: NameSet,
    /// Location bindings only.
    pub aux: Store,
}

impl CompositeState {
    pub fn side(&self, i: usize) -> &SlsState {
        if i == 0 { &self.left } else { &self.right }
    }

    fn side_mut(&mut self, i: usize) -> &mut SlsState {
        if i == 0 { &mut self.left } else { &mut self.right }
    }

    /// The index of the side running a program, if any.
    pub fn program_side(&self) -> Option<usize> {
        (0..2).find(|&i| self.side(i).is_program())
    }

    pub fn is_halted(&self) -> bool {
        matches!(self.left, SlsState::Halted(_)) || matches!(self.right, SlsState::Halted(_))
    }

    /// Continuation names of `shared` introduced by one of the modules.
    pub fn program_conts(&self) -> NameSet {
        self.shared.continuations().difference(&self.sys_conts)
    }
}

impl Nominal for CompositeState {
    fn permute(&self, pi: &Permutation) -> Self {
        CompositeState {
            left: self.left.permute(pi),
            right: self.right.permute(pi),
            shared: self.shared.permute(pi),
            sys_conts: self.sys_conts.permute(pi),
            aux: self.aux.permute(pi),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.left.visit_names(f);
        self.right.visit_names(f);
        self.shared.visit_names(f);
        self.sys_conts.visit_names(f);
        self.aux.visit_names(f);
    }
}

impl Canonicalize for CompositeState {
    fn roots(&self, visit: &mut dyn FnMut(Name)) {
        self.left.roots(visit);
        self.right.roots(visit);
    }

    fn stores(&self) -> Vec<&Store> {
        let mut out = vec![&self.aux];
        out.extend(self.left.store());
        out.extend(self.right.store());
        out
    }

    fn name_sets(&self) -> Vec<&NameSet> {
        let mut out = vec![&self.shared, &self.sys_conts];
        out.extend(self.left.name_sets());
        out.extend(self.right.name_sets());
        out
    }
}

impl fmt::Display for CompositeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ∥[{} ; S {} ; {{{}}}] {}", self.left, self.shared, self.sys_conts, self.aux, self.right)
    }
}

/// Deliberate engine defects, used to test that the checks notice them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// Choose the continuation name of a program call without avoiding the
    /// names of the other module.
    pub skip_call_freshness: bool,
    /// Disclose only the names of the value in a program update, without
    /// closing over the auxiliary store.
    pub skip_update_closure: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("both modules export {0}")]
    ExportClash(Name),
    #[error("private name {0} belongs to both modules")]
    PrivateNameClash(Name),
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// A violated precondition of an outside update.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UpdateViolation {
    #[error("shared location {loc} is not bound by the update")]
    MissingSharedLocation { loc: Name },
    #[error("the update changes {loc}, which the outside system does not know")]
    PrivateAuxChanged { loc: Name },
    #[error("the update mentions private name {name}")]
    GuessedPrivateName { name: Name },
}

/// Knowledge update after a module speaks to the outside system: the names
/// reachable from the value and the shared names through the updated
/// auxiliary store become shared, and so does `k`.
pub fn program_update(
    shared: &NameSet,
    aux: &Store,
    v: &Value,
    k: Option<Name>,
    s: &Store,
    closure: bool,
) -> (NameSet, Store) {
    let aux2 = aux.update(&s.loc_part());
    let mut seed = shared.clone();
    seed.extend(v.support());
    let mut out = if closure { aux2.closure_locs(&seed) } else { seed };
    out.extend(k);
    (out, aux2)
}

/// Knowledge update after the outside system speaks to a module. `private`
/// are the names of either module not shared with the outside.
pub fn system_update(
    shared: &NameSet,
    aux: &Store,
    private: &NameSet,
    v: &Value,
    k: Option<Name>,
    s: &Store,
) -> Result<(NameSet, Store), Vec<UpdateViolation>> {
    let mut errors = Vec::new();
    for (a, val) in aux.locs() {
        match s.locs().get(a) {
            None if shared.contains(a) => errors.push(UpdateViolation::MissingSharedLocation { loc: *a }),
            Some(w) if !shared.contains(a) && w != val => errors.push(UpdateViolation::PrivateAuxChanged { loc: *a }),
            None if !shared.contains(a) => errors.push(UpdateViolation::PrivateAuxChanged { loc: *a }),
            _ => {}
        }
    }
    let mut mentioned = v.support();
    mentioned.extend(s.drop_names(private).support());
    for n in mentioned.intersection(private).iter() {
        errors.push(UpdateViolation::GuessedPrivateName { name: *n });
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut out = shared.union(&mentioned);
    out.extend(k);
    Ok((out, aux.update(&s.loc_part())))
}

fn move_with_store(mv: &SystemMove, store: StoreUpdate) -> SystemMove {
    match mv {
        SystemMove::Call { f, arg, k, .. } => SystemMove::Call { f: *f, arg: arg.clone(), k: *k, store },
        SystemMove::Ret { value, k, .. } => SystemMove::Ret { value: value.clone(), k: *k, store },
    }
}

/// The composite of two modules resolved with a shared resolver.
#[derive(Clone, Debug)]
pub struct Composite<'a> {
    pub modules: [&'a ResolvedModule; 2],
    pub budget: MoveBudget,
    pub faults: Faults,
}

impl<'a> Composite<'a> {
    pub fn new(m1: &'a ResolvedModule, m2: &'a ResolvedModule, budget: MoveBudget) -> Result<Self, ComposeError> {
        if let Some(n) = m1.exports.intersection(&m2.exports).iter().next() {
            return Err(ComposeError::ExportClash(*n));
        }
        if let Some(n) = m1.private().intersection(&m2.static_names()).iter().next() {
            return Err(ComposeError::PrivateNameClash(*n));
        }
        if let Some(n) = m2.private().intersection(&m1.static_names()).iter().next() {
            return Err(ComposeError::PrivateNameClash(*n));
        }
        Ok(Composite { modules: [m1, m2], budget, faults: Faults::default() })
    }

    pub fn with_faults(mut self, faults: Faults) -> Self {
        self.faults = faults;
        self
    }

    pub fn init(&self) -> CompositeState {
        let [m1, m2] = self.modules;
        let (c1, c2) = (initial_config(m1), initial_config(m2));
        let shared = m1.interface().union(&m2.interface());
        let aux = c1.visible_store().update(&c2.visible_store());
        CompositeState { left: SlsState::System(c1), right: SlsState::System(c2), shared, sys_conts: NameSet::new(), aux }
    }

    /// Names kept fixed when canonicalizing composite states.
    pub fn pinned(&self, cs: &CompositeState) -> NameSet {
        cs.shared.union(&self.modules[0].static_names()).union(&self.modules[1].static_names())
    }

    /// Names of both modules not shared with the outside system.
    pub fn private_names(cs: &CompositeState) -> NameSet {
        cs.left.used().union(&cs.right.used()).difference(&cs.shared)
    }

    /// What the outside system knows and may target on side `i`.
    pub fn outside_view(&self, cs: &CompositeState, i: usize) -> SystemView {
        let j = 1 - i;
        let other = cs.side(j).used();
        let mine = cs.side(i).store();
        SystemView {
            used: cs.left.used().union(&cs.right.used()),
            public: cs.shared.clone(),
            visible: cs.aux.keep(&cs.shared.locations()),
            call_targets: cs.shared.functions().iter().copied().filter(|f| self.modules[i].defs.contains_key(f)).collect(),
            ret_targets: cs
                .program_conts()
                .iter()
                .copied()
                .filter(|k| mine.is_some_and(|s| s.cont(*k).is_some()) && !other.contains(k))
                .collect(),
        }
    }

    pub fn successors(&self, cs: &CompositeState) -> Vec<Succ<CompositeState>> {
        if cs.is_halted() {
            return Vec::new();
        }
        match cs.program_side() {
            Some(i) => self.program_successors(cs, i),
            None => (0..2).flat_map(|i| self.system_successors(cs, i)).collect(),
        }
    }

    /// A running side either takes its internal steps, collapsed into one
    /// silent edge, or stands at a boundary and speaks.
    fn program_successors(&self, cs: &CompositeState, i: usize) -> Vec<Succ<CompositeState>> {
        let j = 1 - i;
        let SlsState::Program(c) = cs.side(i) else { unreachable!() };
        let SlsState::System(sc_j) = cs.side(j) else { return Vec::new() };
        let avoid = sc_j.used.clone();
        let run = run_to_boundary(c, self.modules[i], self.budget.fuel, &avoid);
        let halt = match &run.result {
            None => Some(Halt::Divergent),
            Some(StepResult::Crash(cr)) => Some(Halt::Crash(cr.clone())),
            _ => None,
        };
        if run.steps > 0 || halt.is_some() {
            let mut next = cs.clone();
            *next.side_mut(i) = match halt {
                Some(h) => SlsState::Halted(h),
                None => SlsState::Program(run.config),
            };
            return vec![Succ { label: None, mv: None, target: next }];
        }
        let k_avoid = if self.faults.skip_call_freshness { NameSet::new() } else { avoid };
        let r = run.result.expect("boundary");
        let Some((label, sc_i)) = emit_boundary(c, &r, &k_avoid) else { return Vec::new() };
        let handled_by_other = match &label.action {
            Action::Call { f, .. } => self.modules[j].defs.contains_key(f),
            Action::Ret { k, .. } => sc_j.store.cont(*k).is_some(),
        };
        if handled_by_other {
            self.cross(cs, i, &label, sc_i).into_iter().collect()
        } else {
            vec![self.program_speaks(cs, i, &label, sc_i)]
        }
    }

    /// A call or return between the modules: side `j` receives the label
    /// with the whole updated auxiliary store.
    fn cross(&self, cs: &CompositeState, i: usize, label: &Label, sc_i: SystemConfig) -> Option<Succ<CompositeState>> {
        let j = 1 - i;
        let SlsState::System(sc_j) = cs.side(j) else { return None };
        let aux = cs.aux.update(&label.store);
        let mv = move_with_store(&SystemMove::from_label(label), aux.locs().clone());
        let p = apply_system_move(sc_j, &mv, self.modules[j]).ok()?;
        let mut next = cs.clone();
        *next.side_mut(i) = SlsState::System(sc_i);
        *next.side_mut(j) = SlsState::Program(p);
        next.aux = aux;
        Some(Succ { label: None, mv: None, target: next })
    }

    /// A call or return to the outside system.
    fn program_speaks(&self, cs: &CompositeState, i: usize, label: &Label, sc_i: SystemConfig) -> Succ<CompositeState> {
        let (v, k) = match &label.action {
            Action::Call { arg, k, .. } => (arg, Some(*k)),
            Action::Ret { value, .. } => (value, None),
        };
        let (shared, aux) = program_update(&cs.shared, &cs.aux, v, k, &label.store, !self.faults.skip_update_closure);
        let out = Label { dir: Dir::PS, action: label.action.clone(), store: aux.keep(&shared.locations()) };
        let mut next = cs.clone();
        *next.side_mut(i) = SlsState::System(sc_i);
        next.shared = shared;
        next.aux = aux;
        Succ { label: Some(out), mv: None, target: next }
    }

    /// Moves of the outside system into side `i`, enumerated under budget.
    fn system_successors(&self, cs: &CompositeState, i: usize) -> Vec<Succ<CompositeState>> {
        let SlsState::System(sc_i) = cs.side(i) else { return Vec::new() };
        let view = self.outside_view(cs, i);
        let private = Self::private_names(cs);
        enumerate_moves(&view, &self.budget)
            .into_iter()
            .filter_map(|mv| {
                let patch = Store::from_locs(mv.store().iter().map(|(a, v)| (*a, *v)));
                let s = cs.aux.update(&patch);
                let (v, k) = match &mv {
                    SystemMove::Call { arg, k, .. } => (arg, Some(*k)),
                    SystemMove::Ret { value, .. } => (value, None),
                };
                let (shared, aux) = system_update(&cs.shared, &cs.aux, &private, v, k, &s).ok()?;
                let p = apply_system_move(sc_i, &move_with_store(&mv, s.locs().clone()), self.modules[i]).ok()?;
                let label = Label { dir: Dir::SP, action: mv.action(), store: s.keep(&shared.locations()) };
                let mut next = cs.clone();
                *next.side_mut(i) = SlsState::Program(p);
                next.shared = shared;
                if let Some(k) = k {
                    next.sys_conts.insert(k);
                }
                next.aux = aux;
                Some(Succ { label: Some(label), mv: Some(mv), target: next })
            })
            .collect()
    }

    /// The composite LTS, explored to `budget.depth` labels.
    pub fn explore(&self) -> Lts<CompositeState> {
        let limits = ExploreLimits { depth: self.budget.depth, max_tau_run: 256, max_nodes: 1_000_000 };
        explore_with(self.init(), limits, |cs| self.pinned(cs), |cs| self.successors(cs))
    }
}

/// The shared names of a composite state.
pub fn composite_public(cs: &CompositeState) -> NameSet {
    cs.shared.clone()
}
