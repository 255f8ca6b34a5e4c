//! Nominal games for modules with private state: an executable model of a
//! frame-stack language, its system-level semantics, composition, and
//! bisimulation checking.

pub mod lang;
pub mod nominal;
pub mod store;
pub mod syntax;
pub mod machine;
pub mod sls;
pub mod canon;
pub mod lts;
pub mod bisim;
pub mod compose;
pub mod wire;
pub mod session;
pub mod fixtures;
pub mod cli;
