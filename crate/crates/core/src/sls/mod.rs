//! System-level semantics: the labelled transitions at the boundary between
//! a module and the system around it.

mod enumerate;
mod replay;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use enumerate::{enumerate_moves, enumerate_system_moves, MoveBudget, SystemView};
pub use replay::{replay, ReplayError, ReplayErrorKind, Trace};

use crate::lang::ResolvedModule;
use crate::machine::{run_to_boundary, Crash, ProgramConfig, StepResult};
use crate::nominal::{fresh_avoiding, Name, NameSet, Nominal, Permutation, Sort};
use crate::store::{Store, StoreValue, Suspended};
use crate::syntax::{Exp, Frame, Value};

/// `⟨⟨N | P ⊢ s⟩⟩`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemConfig {
    pub used: NameSet,
    pub public: NameSet,
    pub store: Store,
}

impl SystemConfig {
    /// The part of the store the system can see.
    pub fn visible_store(&self) -> Store {
        self.store.loc_part().keep(&self.public.locations())
    }

    /// Stored continuations the system may return to.
    pub fn return_targets(&self) -> Vec<Name> {
        self.store.conts().keys().copied().filter(|k| self.public.contains(k)).collect()
    }
}

impl Nominal for SystemConfig {
    fn permute(&self, pi: &Permutation) -> Self {
        SystemConfig { used: self.used.permute(pi), public: self.public.permute(pi), store: self.store.permute(pi) }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.used.visit_names(f);
        self.public.visit_names(f);
        self.store.visit_names(f);
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨⟨{} | {} ⊢ {{{}}}⟩⟩", self.used, self.public, self.store)
    }
}

/// Why a program stopped producing labels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Halt {
    Crash(Crash),
    Divergent,
}

impl fmt::Display for Halt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Halt::Crash(c) => write!(f, "crash: {c}"),
            Halt::Divergent => write!(f, "divergent (fuel exhausted)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlsState {
    System(SystemConfig),
    Program(ProgramConfig),
    Halted(Halt),
}

impl SlsState {
    pub fn public(&self) -> NameSet {
        match self {
            SlsState::System(c) => c.public.clone(),
            SlsState::Program(c) => c.public.clone(),
            SlsState::Halted(_) => NameSet::new(),
        }
    }

    pub fn used(&self) -> NameSet {
        match self {
            SlsState::System(c) => c.used.clone(),
            SlsState::Program(c) => c.used.clone(),
            SlsState::Halted(_) => NameSet::new(),
        }
    }

    pub fn store(&self) -> Option<&Store> {
        match self {
            SlsState::System(c) => Some(&c.store),
            SlsState::Program(c) => Some(&c.store),
            SlsState::Halted(_) => None,
        }
    }

    pub fn is_system(&self) -> bool {
        matches!(self, SlsState::System(_))
    }

    pub fn is_program(&self) -> bool {
        matches!(self, SlsState::Program(_))
    }
}

impl Nominal for SlsState {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            SlsState::System(c) => SlsState::System(c.permute(pi)),
            SlsState::Program(c) => SlsState::Program(c.permute(pi)),
            SlsState::Halted(h) => SlsState::Halted(h.clone()),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        match self {
            SlsState::System(c) => c.visit_names(f),
            SlsState::Program(c) => c.visit_names(f),
            SlsState::Halted(_) => {}
        }
    }
}

impl fmt::Display for SlsState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlsState::System(c) => write!(f, "{c}"),
            SlsState::Program(c) => write!(f, "{c}"),
            SlsState::Halted(h) => write!(f, "halted ({h})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    /// Program to system.
    PS,
    /// System to program.
    SP,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::PS => "P->S",
            Dir::SP => "S->P",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Call { f: Name, arg: Value, k: Name },
    Ret { value: Value, k: Name },
}

impl Action {
    pub fn k(&self) -> Name {
        match self {
            Action::Call { k, .. } | Action::Ret { k, .. } => *k,
        }
    }

    pub fn value(&self) -> &Value {
        match self {
            Action::Call { arg, .. } => arg,
            Action::Ret { value, .. } => value,
        }
    }

    pub fn is_call(&self) -> bool {
        matches!(self, Action::Call { .. })
    }
}

impl Nominal for Action {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Action::Call { f, arg, k } => Action::Call { f: pi.apply(*f), arg: arg.permute(pi), k: pi.apply(*k) },
            Action::Ret { value, k } => Action::Ret { value: value.permute(pi), k: pi.apply(*k) },
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        match self {
            Action::Call { f: g, arg, k } => {
                f(*g);
                arg.visit_names(f);
                f(*k);
            }
            Action::Ret { value, k } => {
                value.visit_names(f);
                f(*k);
            }
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Call { f: g, arg, k } => write!(f, "call {g} {arg}, {k}"),
            Action::Ret { value, k } => write!(f, "ret {value}, {k}"),
        }
    }
}

/// An observable transition: direction, action and the visible store
/// (location bindings only).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub dir: Dir,
    pub action: Action,
    pub store: Store,
}

impl Nominal for Label {
    fn permute(&self, pi: &Permutation) -> Self {
        Label { dir: self.dir, action: self.action.permute(pi), store: self.store.permute(pi) }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.action.visit_names(f);
        self.store.visit_names(f);
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} / {{{}}}", self.dir, self.action, self.store)
    }
}

/// Store update proposed by the system. Keys are arbitrary names so that
/// ill-formed updates can be represented and rejected.
pub type StoreUpdate = BTreeMap<Name, StoreValue>;

/// A move of the system: the S→P half of a label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SystemMove {
    Call { f: Name, arg: Value, k: Name, store: StoreUpdate },
    Ret { value: Value, k: Name, store: StoreUpdate },
}

impl SystemMove {
    pub fn action(&self) -> Action {
        match self {
            SystemMove::Call { f, arg, k, .. } => Action::Call { f: *f, arg: arg.clone(), k: *k },
            SystemMove::Ret { value, k, .. } => Action::Ret { value: value.clone(), k: *k },
        }
    }

    pub fn store(&self) -> &StoreUpdate {
        match self {
            SystemMove::Call { store, .. } | SystemMove::Ret { store, .. } => store,
        }
    }

    pub fn k(&self) -> Name {
        self.action().k()
    }

    /// The label this move produces. Only location bindings are kept.
    pub fn label(&self) -> Label {
        let store = Store::from_locs(self.store().iter().filter(|(a, _)| a.is_loc()).map(|(a, v)| (*a, *v)));
        Label { dir: Dir::SP, action: self.action(), store }
    }

    /// Reads a move back off an S→P label.
    pub fn from_label(l: &Label) -> SystemMove {
        let store = l.store.locs().clone();
        match &l.action {
            Action::Call { f, arg, k } => SystemMove::Call { f: *f, arg: arg.clone(), k: *k, store },
            Action::Ret { value, k } => SystemMove::Ret { value: value.clone(), k: *k, store },
        }
    }
}

impl Nominal for SystemMove {
    fn permute(&self, pi: &Permutation) -> Self {
        let st = |s: &StoreUpdate| s.iter().map(|(a, v)| (pi.apply(*a), v.permute(pi))).collect();
        match self {
            SystemMove::Call { f, arg, k, store } => {
                SystemMove::Call { f: pi.apply(*f), arg: arg.permute(pi), k: pi.apply(*k), store: st(store) }
            }
            SystemMove::Ret { value, k, store } => {
                SystemMove::Ret { value: value.permute(pi), k: pi.apply(*k), store: st(store) }
            }
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.action().visit_names(f);
        for (a, v) in self.store() {
            f(*a);
            v.visit_names(f);
        }
    }
}

impl fmt::Display for SystemMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A system move rejected by the side conditions of the S→P rules.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("{name} is used by the program but was never disclosed; the system cannot guess private names")]
    GuessedPrivateName { name: Name },
    #[error("{k} is not a stored continuation; the system can only return to continuations the program handed out")]
    UnknownContinuation { k: Name },
    #[error("the update writes {loc}, a private location; the private part of the store cannot be modified by the system")]
    PrivateStoreTampering { loc: Name },
    #[error("the update omits public location {loc}; every location the system knows must be present in its store")]
    MissingPublicFrame { loc: Name },
    #[error("the update binds continuation {k}; continuations are never stored by the system")]
    ContinuationInStore { k: Name },
    #[error("{f} is not defined by the module; the system can only call functions the module provides")]
    UndefinedFunction { f: Name },
    #[error("{k} is already bound in the store; a call must carry a new continuation")]
    StaleContinuation { k: Name },
    #[error("{loc} is passed as a fresh location but has no binding in the update")]
    FreshLocationUnbound { loc: Name },
    #[error("{name} has the wrong sort for its position")]
    WrongSort { name: Name },
}

impl MoveError {
    /// The variant name, as a stable tag for clients.
    pub fn kind(&self) -> &'static str {
        match self {
            MoveError::GuessedPrivateName { .. } => "GuessedPrivateName",
            MoveError::UnknownContinuation { .. } => "UnknownContinuation",
            MoveError::PrivateStoreTampering { .. } => "PrivateStoreTampering",
            MoveError::MissingPublicFrame { .. } => "MissingPublicFrame",
            MoveError::ContinuationInStore { .. } => "ContinuationInStore",
            MoveError::UndefinedFunction { .. } => "UndefinedFunction",
            MoveError::StaleContinuation { .. } => "StaleContinuation",
            MoveError::FreshLocationUnbound { .. } => "FreshLocationUnbound",
            MoveError::WrongSort { .. } => "WrongSort",
        }
    }
}

/// `S⁰_M`: the initial configuration.
pub fn initial_config(m: &ResolvedModule) -> SystemConfig {
    SystemConfig {
        used: m.exports.union(&m.imports).union(&m.declared),
        public: m.interface(),
        store: m.init_store.clone(),
    }
}

/// The P→S transition from a configuration stopped at a boundary. The new
/// continuation name avoids `used` and `avoid`.
pub fn emit_boundary(c: &ProgramConfig, r: &StepResult, avoid: &NameSet) -> Option<(Label, SystemConfig)> {
    match r {
        StepResult::NeedsSystemCall { f, arg, frames, ret } => {
            let k2 = fresh_avoiding(Sort::Continuation, &c.used, avoid);
            Some(emit_call(c, *f, arg, frames, *ret, k2))
        }
        StepResult::NeedsSystemReturn { value, ret } => {
            let mut seed = c.public.clone();
            seed.extend(value.support());
            let public = c.store.closure_locs(&seed);
            let label = Label {
                dir: Dir::PS,
                action: Action::Ret { value: value.clone(), k: *ret },
                store: c.store.loc_part().keep(&public.locations()),
            };
            Some((label, SystemConfig { used: c.used.clone(), public, store: c.store.clone() }))
        }
        _ => None,
    }
}

/// P→S call with a given continuation name `k2`.
pub fn emit_call(
    c: &ProgramConfig,
    f: Name,
    arg: &Value,
    frames: &[Frame],
    ret: Name,
    k2: Name,
) -> (Label, SystemConfig) {
    let mut seed = c.public.clone();
    seed.extend(arg.support());
    let mut public = c.store.closure_locs(&seed);
    let label = Label {
        dir: Dir::PS,
        action: Action::Call { f, arg: arg.clone(), k: k2 },
        store: c.store.loc_part().keep(&public.locations()),
    };
    public.insert(k2);
    let mut used = c.used.clone();
    used.insert(k2);
    let mut store = c.store.clone();
    store.set_cont(k2, Suspended { frames: frames.to_vec(), ret });
    (label, SystemConfig { used, public, store })
}

fn update_names(store: &StoreUpdate) -> NameSet {
    let mut out = NameSet::new();
    for (a, v) in store {
        out.insert(*a);
        out.extend(v.support());
    }
    out
}

/// Checks the side conditions of the S→P rules and builds the program
/// configuration the move leads to.
pub fn apply_system_move(sc: &SystemConfig, mv: &SystemMove, m: &ResolvedModule) -> Result<ProgramConfig, MoveError> {
    let update = mv.store();
    let (value, k) = match mv {
        SystemMove::Call { f, arg, k, .. } => {
            if !f.is_func() {
                return Err(MoveError::WrongSort { name: *f });
            }
            (arg, *k)
        }
        SystemMove::Ret { value, k, .. } => (value, *k),
    };
    if !k.is_cont() {
        return Err(MoveError::WrongSort { name: k });
    }
    for a in update.keys() {
        if a.is_cont() {
            return Err(MoveError::ContinuationInStore { k: *a });
        }
        if !a.is_loc() {
            return Err(MoveError::WrongSort { name: *a });
        }
    }
    let private = sc.used.difference(&sc.public);
    if let Some(a) = update.keys().find(|a| private.contains(a)) {
        return Err(MoveError::PrivateStoreTampering { loc: *a });
    }
    let mut mentioned = value.support();
    mentioned.extend(update_names(update));
    if let SystemMove::Call { f, .. } = mv {
        mentioned.insert(*f);
    }
    if let Some(n) = mentioned.intersection(&private).iter().next() {
        return Err(MoveError::GuessedPrivateName { name: *n });
    }
    let frames_ret = match mv {
        SystemMove::Ret { .. } => match sc.store.cont(k) {
            Some(susp) => Some(susp.clone()),
            None => return Err(MoveError::UnknownContinuation { k }),
        },
        SystemMove::Call { f, .. } => {
            if !matches!(m.lookup_def(*f), Ok(Some(_))) {
                return Err(MoveError::UndefinedFunction { f: *f });
            }
            if sc.store.contains(k) {
                return Err(MoveError::StaleContinuation { k });
            }
            None
        }
    };
    let update_support = update_names(update);
    if let Some(a) = value.support().locations().iter().find(|a| !update_support.contains(a)) {
        return Err(MoveError::FreshLocationUnbound { loc: *a });
    }
    if let Some(a) = sc.visible_store().locs().keys().find(|a| !update.contains_key(a)) {
        return Err(MoveError::MissingPublicFrame { loc: *a });
    }

    let mut disclosed = value.support();
    disclosed.extend(update_support);
    let patch = Store::from_locs(update.iter().map(|(a, v)| (*a, *v)));
    let store = sc.store.update(&patch);
    Ok(match frames_ret {
        Some(susp) => ProgramConfig {
            used: sc.used.union(&disclosed),
            public: sc.public.union(&disclosed),
            store,
            frames: susp.frames,
            control: Exp::Val(value.clone()),
            ret: susp.ret,
        },
        None => {
            let SystemMove::Call { f, .. } = mv else { unreachable!() };
            disclosed.insert(k);
            ProgramConfig {
                used: sc.used.union(&disclosed),
                public: sc.public.union(&disclosed),
                store,
                frames: vec![Frame::CallArg(Value::Name(*f))],
                control: Exp::Val(value.clone()),
                ret: k,
            }
        }
    })
}

/// Outcome of letting the program run after it received control.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramTurn {
    /// The configuration at the boundary (or where it stopped).
    pub at_boundary: ProgramConfig,
    pub steps: usize,
    /// The P→S label and the resulting system configuration, or why the
    /// program stopped.
    pub outcome: Result<(Label, SystemConfig), Halt>,
}

impl ProgramTurn {
    pub fn next_state(&self) -> SlsState {
        match &self.outcome {
            Ok((_, sc)) => SlsState::System(sc.clone()),
            Err(h) => SlsState::Halted(h.clone()),
        }
    }
}

/// Runs internal steps and then the P→S rule.
pub fn program_turn(c: &ProgramConfig, m: &ResolvedModule, fuel: usize, avoid: &NameSet) -> ProgramTurn {
    let run = run_to_boundary(c, m, fuel, avoid);
    let outcome = match &run.result {
        None => Err(Halt::Divergent),
        Some(StepResult::Crash(cr)) => Err(Halt::Crash(cr.clone())),
        Some(r) => Ok(emit_boundary(&run.config, r, avoid).expect("boundary result")),
    };
    ProgramTurn { at_boundary: run.config, steps: run.steps, outcome }
}

#[cfg(test)]
mod tests;
