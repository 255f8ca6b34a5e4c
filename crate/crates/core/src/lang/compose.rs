//! Source-level module composition.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Decl, FuncDecl, Ident, SourceModule};
use super::LangError;

fn module_level(m: &SourceModule) -> BTreeSet<String> {
    m.exports
        .iter()
        .chain(&m.imports)
        .chain(m.declared())
        .map(|i| i.name.clone())
        .collect()
}

fn rename_module(m: &SourceModule, map: &BTreeMap<String, String>) -> SourceModule {
    let ren_id = |i: &Ident| Ident { name: map.get(&i.name).cloned().unwrap_or_else(|| i.name.clone()), pos: i.pos };
    let decls = m
        .decls
        .iter()
        .map(|d| match d {
            Decl::Var { name, init } => Decl::Var { name: ren_id(name), init: *init },
            Decl::Func(f) => {
                let bound: BTreeSet<&str> = f.params.iter().chain(&f.locals).map(|i| i.name.as_str()).collect();
                let rename = |s: &str| if bound.contains(s) { None } else { map.get(s).cloned() };
                Decl::Func(FuncDecl {
                    name: ren_id(&f.name),
                    params: f.params.clone(),
                    locals: f.locals.clone(),
                    body: f.body.iter().map(|e| e.rename(&rename)).collect(),
                    result: f.result.rename(&rename),
                    explicit_return: f.explicit_return,
                })
            }
        })
        .collect();
    SourceModule { exports: m.exports.clone(), imports: m.imports.clone(), decls }
}

/// Composes two modules into one: private identifiers that clash are
/// renamed apart, and imports provided by the other module are dropped.
pub fn syntactic_compose(m1: &SourceModule, m2: &SourceModule) -> Result<SourceModule, LangError> {
    if let Some(id) = m1.exports.iter().find(|i| m2.is_exported(&i.name)) {
        return Err(LangError::ExportClashIdent(id.name.clone()));
    }
    let top1 = module_level(m1);
    let mut taken: BTreeSet<String> = m1.all_identifiers().into_iter().chain(m2.all_identifiers()).collect();
    let mut fresh_for = |base: &str| {
        let mut i = 1;
        loop {
            let candidate = format!("{base}_{i}");
            if taken.insert(candidate.clone()) {
                return candidate;
            }
            i += 1;
        }
    };
    let mut plan = |m: &SourceModule, clashes: &BTreeSet<String>| {
        let mut map = BTreeMap::new();
        for d in m.declared() {
            if !m.is_exported(&d.name) && clashes.contains(&d.name) {
                map.insert(d.name.clone(), fresh_for(&d.name));
            }
        }
        map
    };
    // The first module's privates only move out of the way of the second
    // module's interface; remaining clashes are resolved on the second side.
    let public2: BTreeSet<String> = m2.exports.iter().chain(&m2.imports).map(|i| i.name.clone()).collect();
    let map1 = plan(m1, &public2);
    let top1: BTreeSet<String> = top1.into_iter().filter(|n| !map1.contains_key(n)).collect();
    let map2 = plan(m2, &top1);
    let r1 = rename_module(m1, &map1);
    let r2 = rename_module(m2, &map2);

    let exports: Vec<Ident> = r1.exports.iter().chain(&r2.exports).cloned().collect();
    let mut imports: Vec<Ident> = Vec::new();
    for i in r1.imports.iter().chain(&r2.imports) {
        if !exports.contains(i) && !imports.contains(i) {
            imports.push(i.clone());
        }
    }
    let decls = r1.decls.into_iter().chain(r2.decls).collect();
    Ok(SourceModule { exports, imports, decls })
}
