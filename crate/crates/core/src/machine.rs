//! The frame-stack abstract machine: deterministic internal steps and
//! detection of the points where control leaves the module.

use std::fmt;

use serde::Serialize;

use crate::lang::ResolvedModule;
use crate::nominal::{fresh_avoiding, Name, NameSet, Nominal, Permutation, Sort};
use crate::store::{Store, StoreValue};
use crate::syntax::{DisplayFrames, Exp, Frame, FrameStack, Op, Value};

/// `⟨N | P ⊢ s, t, e, k⟩`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgramConfig {
    pub used: NameSet,
    pub public: NameSet,
    pub store: Store,
    pub frames: FrameStack,
    pub control: Exp,
    pub ret: Name,
}

impl ProgramConfig {
    /// The control as a value, if it is one.
    pub fn value(&self) -> Option<&Value> {
        self.control.as_value()
    }
}

impl Nominal for ProgramConfig {
    fn permute(&self, pi: &Permutation) -> Self {
        ProgramConfig {
            used: self.used.permute(pi),
            public: self.public.permute(pi),
            store: self.store.permute(pi),
            frames: self.frames.permute(pi),
            control: self.control.permute(pi),
            ret: pi.apply(self.ret),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.used.visit_names(f);
        self.public.visit_names(f);
        self.store.visit_names(f);
        self.frames.visit_names(f);
        self.control.visit_names(f);
        f(self.ret);
    }
}

impl fmt::Display for ProgramConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "⟨{} | {} ⊢ {{{}}} ; {} ; {} ; {}⟩",
            self.used,
            self.public,
            self.store,
            DisplayFrames(&self.frames),
            self.control,
            self.ret
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Crash {
    /// Dereference or assignment of a location with no binding.
    DerefUnbound { loc: Name },
    /// Dereference or assignment through something that is not a location.
    NotALocation { value: String },
    /// Operator applied to values outside its domain.
    BadOperands { detail: String },
    /// Call of a value that is not a function name.
    CallNonFunction { value: String },
    /// Argument tuple width does not match the parameter list.
    ArityMismatch { function: Name, expected: usize, got: usize },
    /// An unbound variable reached the control.
    FreeVariable { var: String },
    /// A `local` declaration outside a sequence.
    StrayLocal,
}

impl fmt::Display for Crash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crash::DerefUnbound { loc } => write!(f, "location {loc} is unbound"),
            Crash::NotALocation { value } => write!(f, "{value} is not a location"),
            Crash::BadOperands { detail } => write!(f, "bad operands: {detail}"),
            Crash::CallNonFunction { value } => write!(f, "{value} is not a function"),
            Crash::ArityMismatch { function, expected, got } => {
                write!(f, "{function} expects {expected} argument(s), got {got}")
            }
            Crash::FreeVariable { var } => write!(f, "free variable {var}"),
            Crash::StrayLocal => write!(f, "local declaration outside a sequence"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Internal(ProgramConfig),
    /// Control is a value under `f(□)` and `f` is not defined by the module.
    NeedsSystemCall { f: Name, arg: Value, frames: FrameStack, ret: Name },
    /// Control is a value and the frame stack is empty.
    NeedsSystemReturn { value: Value, ret: Name },
    Crash(Crash),
}

impl StepResult {
    pub fn is_boundary(&self) -> bool {
        matches!(self, StepResult::NeedsSystemCall { .. } | StepResult::NeedsSystemReturn { .. })
    }
}

fn bad(detail: String) -> StepResult {
    StepResult::Crash(Crash::BadOperands { detail })
}

fn arith(op: Op, a: &Value, b: &Value) -> Result<Value, String> {
    match op {
        Op::Add | Op::Sub | Op::Lt => match (a, b) {
            (Value::Int(x), Value::Int(y)) => Ok(Value::Int(match op {
                Op::Add => x.wrapping_add(*y),
                Op::Sub => x.wrapping_sub(*y),
                _ => (x < y) as i64,
            })),
            _ => Err(format!("{a} {} {b}", op.symbol())),
        },
        Op::Eq => match (a, b) {
            (Value::Tuple(_), _) | (_, Value::Tuple(_)) => Err(format!("{a} == {b}")),
            _ => Ok(Value::Int((a == b) as i64)),
        },
        Op::Assign | Op::Seq => unreachable!("not an arithmetic operator"),
    }
}

/// Binds the formal parameters of `f` to the argument tuple.
fn bind_args(f: Name, params: &[crate::syntax::Var], body: &Exp, arg: &Value) -> Result<Exp, Crash> {
    let values: Vec<Value> = match params.len() {
        0 if arg.is_unit() => Vec::new(),
        1 => vec![arg.clone()],
        n if n >= 2 && arg.width() == n => arg.components(),
        n => return Err(Crash::ArityMismatch { function: f, expected: n, got: arg.width() }),
    };
    Ok(body.subst(&|x| params.iter().position(|p| p.id == x.id).map(|i| values[i].clone())))
}

/// One machine step. Fresh locations avoid `used` and `avoid`.
pub fn step(c: &ProgramConfig, m: &ResolvedModule, avoid: &NameSet) -> StepResult {
    let mut next = c.clone();
    let Some(v) = c.control.as_value() else {
        match &c.control {
            Exp::Val(_) => unreachable!(),
            Exp::Var(x) => return StepResult::Crash(Crash::FreeVariable { var: x.to_string() }),
            Exp::Deref(e) => {
                next.frames.push(Frame::Deref);
                next.control = (**e).clone();
            }
            Exp::Bin(op, a, b) => {
                next.frames.push(Frame::OpLeft(*op, (**b).clone()));
                next.control = (**a).clone();
            }
            Exp::If(g, t, e) => {
                next.frames.push(Frame::If((**t).clone(), (**e).clone()));
                next.control = (**g).clone();
            }
            Exp::Call(g, a) => {
                next.frames.push(Frame::CallFn((**a).clone()));
                next.control = (**g).clone();
            }
            Exp::Tuple(a, b) => {
                next.frames.push(Frame::TupleLeft((**b).clone()));
                next.control = (**a).clone();
            }
            Exp::New => {
                let a = fresh_avoiding(Sort::Location, &c.used, avoid);
                next.used.insert(a);
                next.store.set_loc(a, StoreValue::Int(0));
                next.control = Exp::name(a);
            }
            Exp::Local(x) => match next.frames.pop() {
                Some(Frame::OpLeft(Op::Seq, body)) => {
                    let a = fresh_avoiding(Sort::Location, &c.used, avoid);
                    next.used.insert(a);
                    next.store.set_loc(a, StoreValue::Int(0));
                    next.control = body.subst_one(x, &Value::Name(a));
                }
                _ => return StepResult::Crash(Crash::StrayLocal),
            },
        }
        return StepResult::Internal(next);
    };

    let Some(top) = next.frames.pop() else {
        return StepResult::NeedsSystemReturn { value: v.clone(), ret: c.ret };
    };
    match top {
        Frame::If(t, e) => match v {
            Value::Int(0) => next.control = e,
            Value::Int(_) => next.control = t,
            other => return bad(format!("branch on {other}")),
        },
        Frame::OpLeft(op, e) => {
            next.frames.push(Frame::OpRight(op, v.clone()));
            next.control = e;
        }
        Frame::OpRight(Op::Seq, _) => next.control = Exp::Val(v.clone()),
        Frame::OpRight(Op::Assign, target) => {
            let a = match target {
                Value::Name(a) if a.is_loc() => a,
                other => return StepResult::Crash(Crash::NotALocation { value: other.to_string() }),
            };
            if c.store.loc(a).is_none() {
                return StepResult::Crash(Crash::DerefUnbound { loc: a });
            }
            match StoreValue::from_value(v) {
                Some(sv) => next.store.set_loc(a, sv),
                None => return bad(format!("cannot store {v}")),
            }
            next.control = Exp::unit();
        }
        Frame::OpRight(op, lhs) => match arith(op, &lhs, v) {
            Ok(r) => next.control = Exp::Val(r),
            Err(detail) => return bad(detail),
        },
        Frame::Deref => {
            let a = match v {
                Value::Name(a) if a.is_loc() => *a,
                other => return StepResult::Crash(Crash::NotALocation { value: other.to_string() }),
            };
            match c.store.loc(a) {
                Some(sv) => next.control = Exp::Val(sv.to_value()),
                None => return StepResult::Crash(Crash::DerefUnbound { loc: a }),
            }
        }
        Frame::CallFn(arg) => {
            next.frames.push(Frame::CallArg(v.clone()));
            next.control = arg;
        }
        Frame::CallArg(fv) => {
            let f = match fv {
                Value::Name(f) if f.is_func() => f,
                other => return StepResult::Crash(Crash::CallNonFunction { value: other.to_string() }),
            };
            match m.defs.get(&f) {
                Some(def) => match bind_args(f, &def.params, &def.body, v) {
                    Ok(body) => next.control = body,
                    Err(crash) => return StepResult::Crash(crash),
                },
                None => {
                    return StepResult::NeedsSystemCall { f, arg: v.clone(), frames: next.frames, ret: c.ret };
                }
            }
        }
        Frame::TupleLeft(e) => {
            next.frames.push(Frame::TupleRight(v.clone()));
            next.control = e;
        }
        Frame::TupleRight(a) => next.control = Exp::Val(Value::pair(a, v.clone())),
    }
    StepResult::Internal(next)
}

/// Outcome of running to the next boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    /// The last configuration reached.
    pub config: ProgramConfig,
    /// The non-internal result at `config`, or `None` when fuel ran out.
    pub result: Option<StepResult>,
    pub steps: usize,
}

impl Run {
    pub fn is_divergent(&self) -> bool {
        self.result.is_none()
    }
}

/// Steps until a boundary or crash, at most `fuel` internal steps.
pub fn run_to_boundary(c: &ProgramConfig, m: &ResolvedModule, fuel: usize, avoid: &NameSet) -> Run {
    run_traced(c, m, fuel, avoid, &mut |_| {})
}

/// As [`run_to_boundary`], calling `on_step` with every configuration reached
/// by an internal step.
pub fn run_traced(
    c: &ProgramConfig,
    m: &ResolvedModule,
    fuel: usize,
    avoid: &NameSet,
    on_step: &mut dyn FnMut(&ProgramConfig),
) -> Run {
    let mut cur = c.clone();
    for steps in 0..=fuel {
        match step(&cur, m, avoid) {
            StepResult::Internal(next) => {
                if steps == fuel {
                    break;
                }
                on_step(&next);
                cur = next;
            }
            other => return Run { config: cur, result: Some(other), steps },
        }
    }
    Run { config: cur, result: None, steps: fuel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_module;

    fn config(m: &ResolvedModule, frames: FrameStack, control: Exp) -> ProgramConfig {
        let mut used = m.static_names();
        used.insert(Name::cont(0));
        ProgramConfig {
            used,
            public: m.interface(),
            store: m.init_store.clone(),
            frames,
            control,
            ret: Name::cont(0),
        }
    }

    fn internal(r: StepResult) -> ProgramConfig {
        match r {
            StepResult::Internal(c) => c,
            other => panic!("expected internal step, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_guard_takes_then_branch() {
        let m = load_module("").unwrap();
        let c = config(&m, vec![Frame::If(Exp::int(1), Exp::int(2))], Exp::int(5));
        assert_eq!(internal(step(&c, &m, &NameSet::new())).control, Exp::int(1));
        let c = config(&m, vec![Frame::If(Exp::int(1), Exp::int(2))], Exp::int(0));
        assert_eq!(internal(step(&c, &m, &NameSet::new())).control, Exp::int(2));
    }

    #[test]
    fn assignment_updates_store() {
        let m = load_module("decl a;").unwrap();
        let a = Name::loc(0);
        let c = config(&m, vec![Frame::OpRight(Op::Assign, Value::Name(a))], Exp::int(7));
        let n = internal(step(&c, &m, &NameSet::new()));
        assert_eq!(n.store.loc(a), Some(StoreValue::Int(7)));
        assert_eq!(n.control, Exp::unit());
    }

    #[test]
    fn new_allocates_least_fresh() {
        let m = load_module("decl a;").unwrap();
        let c = config(&m, vec![], Exp::New);
        let n = internal(step(&c, &m, &NameSet::new()));
        assert_eq!(n.control, Exp::name(Name::loc(1)));
        assert!(n.used.contains(&Name::loc(1)));
        assert_eq!(n.store.loc(Name::loc(1)), Some(StoreValue::Int(0)));
        let avoided = internal(step(&c, &m, &NameSet::from([Name::loc(1)])));
        assert_eq!(avoided.control, Exp::name(Name::loc(2)));
    }

    #[test]
    fn undefined_function_needs_system_call() {
        let m = load_module("import read;").unwrap();
        let read = Name::func(0);
        let c = config(&m, vec![Frame::Deref, Frame::CallArg(Value::Name(read))], Exp::unit());
        assert_eq!(
            step(&c, &m, &NameSet::new()),
            StepResult::NeedsSystemCall { f: read, arg: Value::unit(), frames: vec![Frame::Deref], ret: Name::cont(0) }
        );
    }

    #[test]
    fn value_with_empty_stack_returns() {
        let m = load_module("").unwrap();
        let c = config(&m, vec![], Exp::int(0));
        let run = run_to_boundary(&c, &m, 10, &NameSet::new());
        assert_eq!(run.steps, 0);
        assert_eq!(run.result, Some(StepResult::NeedsSystemReturn { value: Value::Int(0), ret: Name::cont(0) }));
    }

    #[test]
    fn crashes() {
        let m = load_module("decl a;").unwrap();
        let none = NameSet::new();
        let c = config(&m, vec![Frame::Deref], Exp::int(3));
        assert!(matches!(step(&c, &m, &none), StepResult::Crash(Crash::NotALocation { .. })));
        let c = config(&m, vec![Frame::Deref], Exp::name(Name::loc(9)));
        assert!(matches!(step(&c, &m, &none), StepResult::Crash(Crash::DerefUnbound { .. })));
        let c = config(&m, vec![Frame::If(Exp::int(1), Exp::int(2))], Exp::name(Name::loc(0)));
        assert!(matches!(step(&c, &m, &none), StepResult::Crash(Crash::BadOperands { .. })));
        let c = config(&m, vec![Frame::CallArg(Value::Int(4))], Exp::unit());
        assert!(matches!(step(&c, &m, &none), StepResult::Crash(Crash::CallNonFunction { .. })));
    }

    #[test]
    fn self_call_diverges() {
        let m = load_module("export f; decl f() { f(); 0 }").unwrap();
        let c = config(&m, vec![], Exp::call(Exp::name(Name::func(0)), Exp::unit()));
        assert!(run_to_boundary(&c, &m, 200, &NameSet::new()).is_divergent());
    }

    #[test]
    fn multi_argument_call_binds_pointwise() {
        let m = load_module("export f; decl f(a, b) { a - b }").unwrap();
        let arg = Exp::tuple(Exp::int(5), Exp::int(3));
        let c = config(&m, vec![], Exp::call(Exp::name(Name::func(0)), arg));
        let run = run_to_boundary(&c, &m, 100, &NameSet::new());
        assert_eq!(run.result, Some(StepResult::NeedsSystemReturn { value: Value::Int(2), ret: Name::cont(0) }));
        let c = config(&m, vec![], Exp::call(Exp::name(Name::func(0)), Exp::int(1)));
        let run = run_to_boundary(&c, &m, 100, &NameSet::new());
        assert!(matches!(run.result, Some(StepResult::Crash(Crash::ArityMismatch { .. }))));
    }
}
