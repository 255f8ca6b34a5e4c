//! Scope checking and translation of surface modules to the core calculus.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::ast::{Decl, FuncDecl, Ident, SExp, SourceModule};
use super::LangError;
use crate::nominal::{fresh, Name, NameSet, Nominal, Permutation, Sort};
use crate::store::{Store, StoreValue};
use crate::syntax::{Exp, Op, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncDef {
    pub params: Vec<Var>,
    pub body: Exp,
}

impl Nominal for FuncDef {
    fn permute(&self, pi: &Permutation) -> Self {
        FuncDef { params: self.params.clone(), body: self.body.permute(pi) }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        self.body.visit_names(f)
    }
}

/// A module whose identifiers have been replaced by names.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ResolvedModule {
    pub exports: NameSet,
    pub imports: NameSet,
    pub declared: NameSet,
    pub init_store: Store,
    pub defs: BTreeMap<Name, FuncDef>,
    /// Source identifier of each module-level name, for display.
    pub symbols: BTreeMap<Name, String>,
}

impl ResolvedModule {
    /// Exported and imported names: the module's public interface.
    pub fn interface(&self) -> NameSet {
        self.exports.union(&self.imports)
    }

    pub fn private(&self) -> NameSet {
        self.declared.difference(&self.exports)
    }

    pub fn static_names(&self) -> NameSet {
        self.declared.union(&self.imports)
    }

    /// The definition of `f`, `None` if `f` is a function name the module
    /// does not define (an import or an outside function).
    pub fn lookup_def(&self, f: Name) -> Result<Option<&FuncDef>, LangError> {
        if !f.is_func() {
            return Err(LangError::NotAFunctionName(f));
        }
        Ok(self.defs.get(&f))
    }

    /// Exported functions: the ones the outside may call.
    pub fn exported_functions(&self) -> impl Iterator<Item = Name> + '_ {
        self.exports.iter().copied().filter(|n| n.is_func() && self.defs.contains_key(n))
    }

    pub fn symbol(&self, n: Name) -> Option<&str> {
        self.symbols.get(&n).map(String::as_str)
    }
}

impl Nominal for ResolvedModule {
    fn permute(&self, pi: &Permutation) -> Self {
        ResolvedModule {
            exports: self.exports.permute(pi),
            imports: self.imports.permute(pi),
            declared: self.declared.permute(pi),
            init_store: self.init_store.permute(pi),
            defs: self.defs.iter().map(|(k, d)| (pi.apply(*k), d.permute(pi))).collect(),
            symbols: self.symbols.iter().map(|(k, s)| (pi.apply(*k), s.clone())).collect(),
        }
    }

    fn visit_names(&self, f: &mut dyn FnMut(Name)) {
        for n in self.exports.iter().chain(self.imports.iter()).chain(self.declared.iter()) {
            f(*n);
        }
        self.init_store.visit_names(f);
        for d in self.defs.values() {
            d.visit_names(f);
        }
    }
}

/// Allocates names for modules. Modules resolved by the same resolver share
/// public identifiers and have disjoint private names.
#[derive(Clone, Debug, Default)]
pub struct Resolver {
    public: BTreeMap<String, Name>,
    used: NameSet,
}

impl Resolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn public_name(&mut self, id: &Ident, sort: Sort) -> Result<Name, LangError> {
        if let Some(&n) = self.public.get(&id.name) {
            if n.sort != sort {
                return Err(LangError::SortClash { name: id.name.clone(), pos: id.pos });
            }
            return Ok(n);
        }
        let n = fresh(sort, &self.used);
        self.used.insert(n);
        self.public.insert(id.name.clone(), n);
        Ok(n)
    }

    fn private_name(&mut self, sort: Sort) -> Name {
        let n = fresh(sort, &self.used);
        self.used.insert(n);
        n
    }

    pub fn resolve(&mut self, m: &SourceModule) -> Result<ResolvedModule, LangError> {
        check_module(m)?;
        let sort_of = |name: &str| match m.decls.iter().find(|d| d.name().name == name) {
            Some(Decl::Var { .. }) => Sort::Location,
            _ => Sort::Function,
        };
        let mut env: HashMap<String, Name> = HashMap::new();
        let mut out = ResolvedModule::default();
        for id in &m.exports {
            let n = self.public_name(id, sort_of(&id.name))?;
            env.insert(id.name.clone(), n);
            out.exports.insert(n);
        }
        for id in &m.imports {
            let n = self.public_name(id, Sort::Function)?;
            env.insert(id.name.clone(), n);
            out.imports.insert(n);
        }
        for d in &m.decls {
            let id = d.name();
            let n = match env.get(&id.name) {
                Some(&n) => n,
                None => {
                    let sort = if matches!(d, Decl::Var { .. }) { Sort::Location } else { Sort::Function };
                    let n = self.private_name(sort);
                    env.insert(id.name.clone(), n);
                    n
                }
            };
            out.declared.insert(n);
            if let Decl::Var { init, .. } = d {
                out.init_store.set_loc(n, StoreValue::Int(*init));
            }
        }
        for (ident, n) in &env {
            out.symbols.insert(*n, ident.clone());
        }
        for d in &m.decls {
            if let Decl::Func(f) = d {
                out.defs.insert(env[&f.name.name], lower_function(f, &env)?);
            }
        }
        Ok(out)
    }
}

fn check_module(m: &SourceModule) -> Result<(), LangError> {
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for d in &m.decls {
        let id = d.name();
        if seen.insert(&id.name, ()).is_some() {
            return Err(LangError::DuplicateDeclaration { name: id.name.clone(), pos: id.pos });
        }
        if let Decl::Func(f) = d {
            let mut scope: HashMap<&str, ()> = HashMap::new();
            for p in f.params.iter().chain(&f.locals) {
                if scope.insert(&p.name, ()).is_some() {
                    return Err(LangError::DuplicateDeclaration { name: p.name.clone(), pos: p.pos });
                }
            }
        }
    }
    for id in &m.exports {
        if !m.is_declared(&id.name) {
            return Err(LangError::ExportUndeclared { name: id.name.clone(), pos: id.pos });
        }
    }
    for id in &m.imports {
        if m.is_declared(&id.name) {
            return Err(LangError::ImportDeclared { name: id.name.clone(), pos: id.pos });
        }
    }
    Ok(())
}

struct Lowering<'a> {
    module: &'a HashMap<String, Name>,
    vars: HashMap<String, Var>,
}

impl Lowering<'_> {
    fn exp(&self, e: &SExp) -> Result<Exp, LangError> {
        Ok(match e {
            SExp::Int(n) => Exp::int(*n),
            SExp::Unit => Exp::unit(),
            SExp::Ident(id) => {
                if let Some(v) = self.vars.get(&id.name) {
                    Exp::Var(v.clone())
                } else if let Some(&n) = self.module.get(&id.name) {
                    Exp::name(n)
                } else {
                    return Err(LangError::UnboundIdentifier { name: id.name.clone(), pos: id.pos });
                }
            }
            SExp::Deref(e) => Exp::deref(self.exp(e)?),
            SExp::Bin(op, a, b) => Exp::bin(*op, self.exp(a)?, self.exp(b)?),
            SExp::If(c, t, e) => Exp::cond(self.exp(c)?, self.exp(t)?, self.exp(e)?),
            SExp::Call(g, args) => {
                let arg = match args.len() {
                    0 => Exp::unit(),
                    1 => self.exp(&args[0])?,
                    _ => self.tuple(args)?,
                };
                Exp::call(self.exp(g)?, arg)
            }
            SExp::Tuple(items) => self.tuple(items)?,
            SExp::New => Exp::New,
            SExp::Block(items) => self.seq(items, None)?,
        })
    }

    fn tuple(&self, items: &[SExp]) -> Result<Exp, LangError> {
        let mut it = items.iter().rev();
        let mut acc = self.exp(it.next().expect("nonempty tuple"))?;
        for e in it {
            acc = Exp::tuple(self.exp(e)?, acc);
        }
        Ok(acc)
    }

    fn seq(&self, items: &[SExp], result: Option<&SExp>) -> Result<Exp, LangError> {
        let mut all: Vec<&SExp> = items.iter().collect();
        all.extend(result);
        let mut it = all.into_iter().rev();
        let mut acc = match it.next() {
            Some(e) => self.exp(e)?,
            None => return Ok(Exp::unit()),
        };
        for e in it {
            acc = Exp::seq(self.exp(e)?, acc);
        }
        Ok(acc)
    }
}

fn lower_function(f: &FuncDecl, module: &HashMap<String, Name>) -> Result<FuncDef, LangError> {
    let mut vars = HashMap::new();
    let mut params = Vec::new();
    let mut locals = Vec::new();
    for (i, id) in f.params.iter().chain(&f.locals).enumerate() {
        let v = Var { id: i as u32, name: Arc::from(id.name.as_str()) };
        vars.insert(id.name.clone(), v.clone());
        if i < f.params.len() {
            params.push(v);
        } else {
            locals.push(v);
        }
    }
    let low = Lowering { module, vars };
    let mut body = low.seq(&f.body, Some(&f.result))?;
    for v in locals.into_iter().rev() {
        body = Exp::bin(Op::Seq, Exp::Local(v), body);
    }
    Ok(FuncDef { params, body })
}

/// Links two resolved modules sharing a resolver: the union of their
/// definitions, with imports satisfied by the other side removed.
pub fn link(m1: &ResolvedModule, m2: &ResolvedModule) -> Result<ResolvedModule, LangError> {
    if let Some(n) = m1.exports.intersection(&m2.exports).iter().next() {
        return Err(LangError::ExportClash(*n));
    }
    let clash = m1.private().intersection(&m2.declared.union(&m2.imports)).union(
        &m2.private().intersection(&m1.declared.union(&m1.imports)),
    );
    if let Some(n) = clash.iter().next() {
        return Err(LangError::PrivateNameClash(*n));
    }
    let exports = m1.exports.union(&m2.exports);
    let mut symbols = m1.symbols.clone();
    symbols.extend(m2.symbols.iter().map(|(k, v)| (*k, v.clone())));
    let mut defs = m1.defs.clone();
    defs.extend(m2.defs.iter().map(|(k, v)| (*k, v.clone())));
    Ok(ResolvedModule {
        imports: m1.imports.union(&m2.imports).difference(&exports),
        declared: m1.declared.union(&m2.declared),
        init_store: m1.init_store.union_disjoint(&m2.init_store),
        exports,
        defs,
        symbols,
    })
}
