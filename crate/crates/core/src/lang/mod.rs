//! The module language: surface syntax, parser, name resolution and
//! composition.

pub mod ast;
mod compose;
mod parse;
mod resolve;

use thiserror::Error;

pub use ast::{Decl, FuncDecl, Ident, Pos, SExp, SourceModule};
pub use compose::syntactic_compose;
pub use parse::{parse_exp, parse_module};
pub use resolve::{link, FuncDef, ResolvedModule, Resolver};

use crate::nominal::Name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: `{name}` is declared twice")]
    DuplicateDeclaration { name: String, pos: Pos },
    #[error("{pos}: `{name}` is exported but not declared")]
    ExportUndeclared { name: String, pos: Pos },
    #[error("{pos}: `{name}` is both imported and declared")]
    ImportDeclared { name: String, pos: Pos },
    #[error("{pos}: unbound identifier `{name}`")]
    UnboundIdentifier { name: String, pos: Pos },
    #[error("{pos}: `{name}` is used as a variable by one module and as a function by another")]
    SortClash { name: String, pos: Pos },
    #[error("both modules export `{0}`")]
    ExportClashIdent(String),
    #[error("both modules export {0}")]
    ExportClash(Name),
    #[error("private name {0} occurs in both modules")]
    PrivateNameClash(Name),
    #[error("{0} is not a function name")]
    NotAFunctionName(Name),
}

impl LangError {
    /// Source position, for errors tied to one.
    pub fn pos(&self) -> Option<Pos> {
        match self {
            LangError::Syntax { pos, .. }
            | LangError::DuplicateDeclaration { pos, .. }
            | LangError::ExportUndeclared { pos, .. }
            | LangError::ImportDeclared { pos, .. }
            | LangError::UnboundIdentifier { pos, .. }
            | LangError::SortClash { pos, .. } => Some(*pos),
            _ => None,
        }
    }
}

/// Parses and resolves a single module with a fresh resolver.
pub fn load_module(src: &str) -> Result<ResolvedModule, LangError> {
    Resolver::new().resolve(&parse_module(src)?)
}

/// Parses and resolves two modules with a shared resolver, so identifiers
/// public in both get the same name.
pub fn load_pair(src1: &str, src2: &str) -> Result<(ResolvedModule, ResolvedModule), LangError> {
    let (a, b) = (parse_module(src1)?, parse_module(src2)?);
    let mut r = Resolver::new();
    Ok((r.resolve(&a)?, r.resolve(&b)?))
}
