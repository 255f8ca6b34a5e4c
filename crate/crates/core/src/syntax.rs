//! Runtime syntax: values, closed expressions and evaluation frames.

use std::fmt;
use std::sync::Arc;

use crate::nominal::{Name, Nominal, Permutation};

/// A value: an integer, a name, or a flattened tuple.
///
/// Tuples are kept in normal form: no nested tuples, never of width one.
/// The empty tuple is the unit `()`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Name(Name),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn unit() -> Value {
        Value::Tuple(Vec::new())
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Value::Tuple(v) if v.is_empty())
    }

    /// Builds a tuple identified up to associativity and unit.
    pub fn tuple<I: IntoIterator<Item = Value>>(items: I) -> Value {
        let mut flat = Vec::new();
        for item in items {
            match item {
                Value::Tuple(inner) => flat.extend(inner),
                atom => flat.push(atom),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Value::Tuple(flat)
        }
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::tuple([a, b])
    }

    /// Components of the value seen as a tuple: `()` has none, an atom one.
    pub fn components(&self) -> Vec<Value> {
        match self {
            Value::Tuple(items) => items.clone(),
            atom => vec![atom.clone()],
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Value::Tuple(items) => items.len(),
            _ => 1,
        }
    }

    pub fn as_name(&self) -> Option<Name> {
        match self {
            Value::Name(n) => Some(*n),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<Name> for Value {
    fn from(n: Name) -> Self {
        Value::Name(n)
    }
}

impl Nominal for Value {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Value::Int(n) => Value::Int(*n),
            Value::Name(a) => Value::Name(pi.apply(*a)),
            Value::Tuple(items) => Value::Tuple(items.iter().map(|v| v.permute(pi)).collect()),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        match self {
            Value::Int(_) => {}
            Value::Name(a) => f(*a),
            Value::Tuple(items) => items.iter().for_each(|v| v.visit_names(f)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Name(a) => write!(f, "{a}"),
            Value::Tuple(items) => {
                write!(f, "(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A bound variable of a function body (parameter or `local`).
///
/// `id` is unique within the enclosing function; `name` only serves display.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub id: u32,
    pub name: Arc<str>,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Binary operators; `=` and `;` share the left-to-right frame rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Assign,
    Seq,
    Add,
    Sub,
    Eq,
    Lt,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Assign => "=",
            Op::Seq => ";",
            Op::Add => "+",
            Op::Sub => "-",
            Op::Eq => "==",
            Op::Lt => "<",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exp {
    Val(Value),
    Var(Var),
    Deref(Box<Exp>),
    Bin(Op, Box<Exp>, Box<Exp>),
    If(Box<Exp>, Box<Exp>, Box<Exp>),
    /// Function position and a single (tuple) argument.
    Call(Box<Exp>, Box<Exp>),
    Tuple(Box<Exp>, Box<Exp>),
    New,
    Local(Var),
}

impl Exp {
    pub fn unit() -> Exp {
        Exp::Val(Value::unit())
    }
    pub fn int(n: i64) -> Exp {
        Exp::Val(Value::Int(n))
    }
    pub fn name(a: Name) -> Exp {
        Exp::Val(Value::Name(a))
    }
    pub fn bin(op: Op, a: Exp, b: Exp) -> Exp {
        Exp::Bin(op, Box::new(a), Box::new(b))
    }
    pub fn seq(a: Exp, b: Exp) -> Exp {
        Exp::bin(Op::Seq, a, b)
    }
    pub fn deref(e: Exp) -> Exp {
        Exp::Deref(Box::new(e))
    }
    pub fn call(f: Exp, arg: Exp) -> Exp {
        Exp::Call(Box::new(f), Box::new(arg))
    }
    pub fn tuple(a: Exp, b: Exp) -> Exp {
        Exp::Tuple(Box::new(a), Box::new(b))
    }
    pub fn cond(c: Exp, t: Exp, e: Exp) -> Exp {
        Exp::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Exp::Val(v) => Some(v),
            _ => None,
        }
    }

    /// Capture-free substitution of values for variables (ids are unique per
    /// function, so no binder can shadow).
    pub fn subst(&self, sub: &dyn Fn(&Var) -> Option<Value>) -> Exp {
        match self {
            Exp::Val(v) => Exp::Val(v.clone()),
            Exp::Var(x) => match sub(x) {
                Some(v) => Exp::Val(v),
                None => Exp::Var(x.clone()),
            },
            Exp::Deref(e) => Exp::deref(e.subst(sub)),
            Exp::Bin(op, a, b) => Exp::bin(*op, a.subst(sub), b.subst(sub)),
            Exp::If(c, t, e) => Exp::cond(c.subst(sub), t.subst(sub), e.subst(sub)),
            Exp::Call(f, a) => Exp::call(f.subst(sub), a.subst(sub)),
            Exp::Tuple(a, b) => Exp::tuple(a.subst(sub), b.subst(sub)),
            Exp::New => Exp::New,
            Exp::Local(x) => Exp::Local(x.clone()),
        }
    }

    pub fn subst_one(&self, var: &Var, v: &Value) -> Exp {
        self.subst(&|x: &Var| (x.id == var.id).then(|| v.clone()))
    }

    /// Variables occurring free (not under their own `local` binder).
    pub fn free_vars(&self, out: &mut Vec<Var>) {
        match self {
            Exp::Val(_) | Exp::New | Exp::Local(_) => {}
            Exp::Var(x) => out.push(x.clone()),
            Exp::Deref(e) => e.free_vars(out),
            Exp::Bin(Op::Seq, a, b) => {
                let mut inner = Vec::new();
                b.free_vars(&mut inner);
                if let Exp::Local(x) = a.as_ref() {
                    inner.retain(|y| y.id != x.id);
                } else {
                    a.free_vars(out);
                }
                out.extend(inner);
            }
            Exp::Bin(_, a, b) | Exp::Call(a, b) | Exp::Tuple(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Exp::If(c, t, e) => {
                c.free_vars(out);
                t.free_vars(out);
                e.free_vars(out);
            }
        }
    }
}

impl Nominal for Exp {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Exp::Val(v) => Exp::Val(v.permute(pi)),
            Exp::Var(x) => Exp::Var(x.clone()),
            Exp::Deref(e) => Exp::deref(e.permute(pi)),
            Exp::Bin(op, a, b) => Exp::bin(*op, a.permute(pi), b.permute(pi)),
            Exp::If(c, t, e) => Exp::cond(c.permute(pi), t.permute(pi), e.permute(pi)),
            Exp::Call(f, a) => Exp::call(f.permute(pi), a.permute(pi)),
            Exp::Tuple(a, b) => Exp::tuple(a.permute(pi), b.permute(pi)),
            Exp::New => Exp::New,
            Exp::Local(x) => Exp::Local(x.clone()),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        match self {
            Exp::Val(v) => v.visit_names(f),
            Exp::Var(_) | Exp::New | Exp::Local(_) => {}
            Exp::Deref(e) => e.visit_names(f),
            Exp::Bin(_, a, b) | Exp::Call(a, b) | Exp::Tuple(a, b) => {
                a.visit_names(f);
                b.visit_names(f);
            }
            Exp::If(c, t, e) => {
                c.visit_names(f);
                t.visit_names(f);
                e.visit_names(f);
            }
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::Val(v) => write!(f, "{v}"),
            Exp::Var(x) => write!(f, "{x}"),
            Exp::Deref(e) => write!(f, "*{}", Paren(e)),
            Exp::Bin(Op::Seq, a, b) => write!(f, "{a}; {b}"),
            Exp::Bin(op, a, b) => write!(f, "{} {} {}", Paren(a), op.symbol(), Paren(b)),
            Exp::If(c, t, e) => write!(f, "if ({c}) then {{{t}}} else {{{e}}}"),
            Exp::Call(g, a) => match a.as_ref() {
                Exp::Val(v) if v.is_unit() => write!(f, "{}()", Paren(g)),
                Exp::Tuple(..) | Exp::Val(Value::Tuple(_)) => write!(f, "{}{a}", Paren(g)),
                _ => write!(f, "{}({a})", Paren(g)),
            },
            Exp::Tuple(a, b) => write!(f, "({a}, {b})"),
            Exp::New => write!(f, "new()"),
            Exp::Local(x) => write!(f, "local {x}"),
        }
    }
}

struct Paren<'a>(&'a Exp);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Exp::Bin(..) | Exp::If(..) | Exp::Local(_) => write!(f, "({})", self.0),
            e => write!(f, "{e}"),
        }
    }
}

/// One evaluation context with a single hole.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Frame {
    /// `if (□) then {e1} else {e2}`
    If(Exp, Exp),
    /// `□ op e`
    OpLeft(Op, Exp),
    /// `v op □`
    OpRight(Op, Value),
    /// `*□`
    Deref,
    /// `□ e`
    CallFn(Exp),
    /// `v □`
    CallArg(Value),
    /// `(□, e)`
    TupleLeft(Exp),
    /// `(v, □)`
    TupleRight(Value),
}

/// A frame stack; the last element is the innermost frame.
pub type FrameStack = Vec<Frame>;

impl Frame {
    /// Plugs an expression into the hole.
    pub fn plug(&self, e: Exp) -> Exp {
        match self {
            Frame::If(t, f) => Exp::cond(e, t.clone(), f.clone()),
            Frame::OpLeft(op, r) => Exp::bin(*op, e, r.clone()),
            Frame::OpRight(op, v) => Exp::bin(*op, Exp::Val(v.clone()), e),
            Frame::Deref => Exp::deref(e),
            Frame::CallFn(a) => Exp::call(e, a.clone()),
            Frame::CallArg(v) => Exp::call(Exp::Val(v.clone()), e),
            Frame::TupleLeft(r) => Exp::tuple(e, r.clone()),
            Frame::TupleRight(v) => Exp::tuple(Exp::Val(v.clone()), e),
        }
    }
}

/// Rebuilds the whole term `t[e]` from a frame stack.
pub fn plug_stack(frames: &[Frame], e: Exp) -> Exp {
    frames.iter().rev().fold(e, |acc, fr| fr.plug(acc))
}

impl Nominal for Frame {
    fn permute(&self, pi: &Permutation) -> Self {
        match self {
            Frame::If(t, e) => Frame::If(t.permute(pi), e.permute(pi)),
            Frame::OpLeft(op, e) => Frame::OpLeft(*op, e.permute(pi)),
            Frame::OpRight(op, v) => Frame::OpRight(*op, v.permute(pi)),
            Frame::Deref => Frame::Deref,
            Frame::CallFn(e) => Frame::CallFn(e.permute(pi)),
            Frame::CallArg(v) => Frame::CallArg(v.permute(pi)),
            Frame::TupleLeft(e) => Frame::TupleLeft(e.permute(pi)),
            Frame::TupleRight(v) => Frame::TupleRight(v.permute(pi)),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        match self {
            Frame::If(t, e) => {
                t.visit_names(f);
                e.visit_names(f);
            }
            Frame::OpLeft(_, e) | Frame::CallFn(e) | Frame::TupleLeft(e) => e.visit_names(f),
            Frame::OpRight(_, v) | Frame::CallArg(v) | Frame::TupleRight(v) => v.visit_names(f),
            Frame::Deref => {}
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frame::If(t, e) => write!(f, "if (□) then {{{t}}} else {{{e}}}"),
            Frame::OpLeft(Op::Seq, e) => write!(f, "□; {e}"),
            Frame::OpLeft(op, e) => write!(f, "□ {} {}", op.symbol(), Paren(e)),
            Frame::OpRight(Op::Seq, v) => write!(f, "{v}; □"),
            Frame::OpRight(op, v) => write!(f, "{v} {} □", op.symbol()),
            Frame::Deref => write!(f, "*□"),
            Frame::CallFn(a) => write!(f, "□({a})"),
            Frame::CallArg(v) => write!(f, "{v}(□)"),
            Frame::TupleLeft(e) => write!(f, "(□, {e})"),
            Frame::TupleRight(v) => write!(f, "({v}, □)"),
        }
    }
}

/// Renders a frame stack outermost first, joined by `∘`; `-` when empty.
pub struct DisplayFrames<'a>(pub &'a [Frame]);

impl fmt::Display for DisplayFrames<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for (i, fr) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ∘ ")?;
            }
            write!(f, "({fr})")?;
        }
        Ok(())
    }
}
