//! Parses a module, calls one of its exports, and prints every machine
//! configuration up to the first boundary.
//!
//!     cargo run --example parse_and_run -- [file.slc] [function]

use sysgame::lang::load_module;
use sysgame::machine::run_traced;
use sysgame::nominal::{Name, NameSet};
use sysgame::sls::{apply_system_move, initial_config, StoreUpdate, SystemMove};
use sysgame::syntax::Value;

fn main() {
    let mut args = std::env::args().skip(1);
    let src = match args.next() {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => sysgame::fixtures::EQ1.to_string(),
    };
    let m = load_module(&src).unwrap_or_else(|e| panic!("{e}"));
    let wanted = args.next();
    let f = m
        .symbols
        .iter()
        .find(|(n, s)| m.exports.contains(n) && wanted.as_deref().is_none_or(|w| w == s.as_str()))
        .map(|(n, _)| *n)
        .expect("no such exported function");

    let mv = SystemMove::Call { f, arg: Value::unit(), k: Name::cont(0), store: StoreUpdate::new() };
    let start = apply_system_move(&initial_config(&m), &mv, &m).unwrap_or_else(|e| panic!("{e}"));
    println!("   0  {start}");
    let mut n = 0;
    let run = run_traced(&start, &m, 1000, &NameSet::new(), &mut |c| {
        n += 1;
        println!("{n:>4}  {c}");
    });
    match run.result {
        Some(r) if r.is_boundary() => println!("reached the module boundary after {} steps", run.steps),
        Some(r) => println!("stopped after {} steps: {r:?}", run.steps),
        None => println!("out of fuel after {} steps", run.steps),
    }
}
