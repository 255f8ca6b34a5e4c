//! Surface syntax of modules, as written in `.slc` files.

use std::fmt;

use crate::syntax::Op;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An identifier with the position of this occurrence. Equality ignores the
/// position.
#[derive(Clone, Debug, Eq)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), pos: Pos::default() }
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExp {
    Int(i64),
    Ident(Ident),
    Unit,
    Deref(Box<SExp>),
    /// Assignment and the arithmetic/logic operators (never `;`).
    Bin(Op, Box<SExp>, Box<SExp>),
    If(Box<SExp>, Box<SExp>, Box<SExp>),
    Call(Box<SExp>, Vec<SExp>),
    Tuple(Vec<SExp>),
    New,
    /// A braced statement block; its value is that of the last item.
    Block(Vec<SExp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDecl {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub locals: Vec<Ident>,
    pub body: Vec<SExp>,
    pub result: SExp,
    /// Whether the result was written with `return`.
    pub explicit_return: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Var { name: Ident, init: i64 },
    Func(FuncDecl),
}

impl Decl {
    pub fn name(&self) -> &Ident {
        match self {
            Decl::Var { name, .. } => name,
            Decl::Func(f) => &f.name,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceModule {
    pub exports: Vec<Ident>,
    pub imports: Vec<Ident>,
    pub decls: Vec<Decl>,
}

impl SourceModule {
    pub fn declared(&self) -> impl Iterator<Item = &Ident> {
        self.decls.iter().map(Decl::name)
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.declared().any(|d| d.name == name)
    }

    pub fn is_exported(&self, name: &str) -> bool {
        self.exports.iter().any(|d| d.name == name)
    }

    pub fn func(&self, name: &str) -> Option<&FuncDecl> {
        self.decls.iter().find_map(|d| match d {
            Decl::Func(f) if f.name.name == name => Some(f),
            _ => None,
        })
    }

    /// Every identifier spelled anywhere in the module.
    pub fn all_identifiers(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        out.extend(self.exports.iter().map(|i| i.name.clone()));
        out.extend(self.imports.iter().map(|i| i.name.clone()));
        for d in &self.decls {
            out.push(d.name().name.clone());
            if let Decl::Func(f) = d {
                out.extend(f.params.iter().chain(&f.locals).map(|i| i.name.clone()));
                for e in f.body.iter().chain(std::iter::once(&f.result)) {
                    e.identifiers(&mut out);
                }
            }
        }
        out
    }
}

impl SExp {
    pub fn identifiers(&self, out: &mut Vec<String>) {
        self.walk(&mut |e| {
            if let SExp::Ident(i) = e {
                out.push(i.name.clone());
            }
        });
    }

    fn walk(&self, f: &mut dyn FnMut(&SExp)) {
        f(self);
        match self {
            SExp::Int(_) | SExp::Ident(_) | SExp::Unit | SExp::New => {}
            SExp::Deref(e) => e.walk(f),
            SExp::Bin(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            SExp::If(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            SExp::Call(g, args) => {
                g.walk(f);
                args.iter().for_each(|a| a.walk(f));
            }
            SExp::Tuple(items) | SExp::Block(items) => items.iter().for_each(|a| a.walk(f)),
        }
    }

    /// Renames free identifiers according to `rename`.
    pub fn rename(&self, rename: &dyn Fn(&str) -> Option<String>) -> SExp {
        match self {
            SExp::Ident(i) => match rename(&i.name) {
                Some(n) => SExp::Ident(Ident { name: n, pos: i.pos }),
                None => self.clone(),
            },
            SExp::Int(_) | SExp::Unit | SExp::New => self.clone(),
            SExp::Deref(e) => SExp::Deref(Box::new(e.rename(rename))),
            SExp::Bin(op, a, b) => SExp::Bin(*op, Box::new(a.rename(rename)), Box::new(b.rename(rename))),
            SExp::If(c, t, e) => SExp::If(Box::new(c.rename(rename)), Box::new(t.rename(rename)), Box::new(e.rename(rename))),
            SExp::Call(g, args) => SExp::Call(Box::new(g.rename(rename)), args.iter().map(|a| a.rename(rename)).collect()),
            SExp::Tuple(items) => SExp::Tuple(items.iter().map(|a| a.rename(rename)).collect()),
            SExp::Block(items) => SExp::Block(items.iter().map(|a| a.rename(rename)).collect()),
        }
    }
}

fn binding_power(e: &SExp) -> u8 {
    match e {
        SExp::Bin(Op::Assign, ..) => 1,
        SExp::Bin(Op::Eq | Op::Lt, ..) => 2,
        SExp::Bin(..) => 3,
        SExp::If(..) => 0,
        _ => 9,
    }
}

struct AtLeast<'a>(&'a SExp, u8);

impl fmt::Display for AtLeast<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if binding_power(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn comma_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExp::Int(n) => write!(f, "{n}"),
            SExp::Ident(i) => write!(f, "{i}"),
            SExp::Unit => write!(f, "()"),
            SExp::Deref(e) => write!(f, "*{}", AtLeast(e, 9)),
            SExp::Bin(Op::Assign, a, b) => write!(f, "{} = {}", AtLeast(a, 2), AtLeast(b, 1)),
            SExp::Bin(op, a, b) => {
                let p = binding_power(self);
                write!(f, "{} {} {}", AtLeast(a, p), op.symbol(), AtLeast(b, p + 1))
            }
            SExp::If(c, t, e) => write!(f, "if ({c}) then {} else {}", Branch(t), Branch(e)),
            SExp::Call(g, args) => {
                write!(f, "{}(", AtLeast(g, 9))?;
                comma_list(f, args)?;
                write!(f, ")")
            }
            SExp::Tuple(items) => {
                write!(f, "(")?;
                comma_list(f, items)?;
                write!(f, ")")
            }
            SExp::New => write!(f, "new()"),
            SExp::Block(_) => write!(f, "{}", AsBlock(self)),
        }
    }
}

struct Branch<'a>(&'a SExp);

impl fmt::Display for Branch<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SExp::Block(_) => write!(f, "{}", AsBlock(self.0)),
            e => write!(f, "{}", AtLeast(e, 2)),
        }
    }
}

struct AsBlock<'a>(&'a SExp);

impl fmt::Display for AsBlock<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: &[SExp] = match self.0 {
            SExp::Block(items) => items,
            other => std::slice::from_ref(other),
        };
        write!(f, "{{")?;
        for (i, it) in items.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{it}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for SourceModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exports.is_empty() {
            write!(f, "export ")?;
            comma_list(f, &self.exports)?;
            writeln!(f, ";")?;
        }
        if !self.imports.is_empty() {
            write!(f, "import ")?;
            comma_list(f, &self.imports)?;
            writeln!(f, ";")?;
        }
        for d in &self.decls {
            match d {
                Decl::Var { name, init } => writeln!(f, "decl {name} = {init};")?,
                Decl::Func(func) => {
                    write!(f, "decl {}(", func.name)?;
                    comma_list(f, &func.params)?;
                    write!(f, ") {{")?;
                    if !func.locals.is_empty() {
                        write!(f, " local ")?;
                        comma_list(f, &func.locals)?;
                        write!(f, ";")?;
                    }
                    for s in &func.body {
                        write!(f, " {s};")?;
                    }
                    if func.explicit_return {
                        writeln!(f, " return {}; }}", func.result)?;
                    } else {
                        writeln!(f, " {} }}", func.result)?;
                    }
                }
            }
        }
        Ok(())
    }
}
