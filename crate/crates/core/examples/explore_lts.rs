//! Explores the labelled transition system of a module and prints a few
//! statistics per depth.
//!
//!     cargo run --release --example explore_lts -- [file.slc] [depth]

use sysgame::lang::load_module;
use sysgame::lts::explore;
use sysgame::sls::MoveBudget;

fn main() {
    let mut args = std::env::args().skip(1);
    let src = match args.next() {
        Some(path) => std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")),
        None => sysgame::fixtures::PROT.to_string(),
    };
    let max: usize = args.next().map_or(5, |d| d.parse().expect("depth"));
    let m = load_module(&src).unwrap_or_else(|e| panic!("{e}"));
    println!("depth  states  labelled  max public");
    for depth in 1..=max {
        let b = MoveBudget { ints: vec![0, 1], fresh_locs: 1, width: 2, depth, fuel: 10_000 };
        let lts = explore(&m, &b);
        let public = lts.nodes.iter().map(|n| n.state.public().len()).max().unwrap_or(0);
        println!("{depth:>5}  {:>6}  {:>8}  {public:>10}", lts.nodes.len(), lts.labelled_edges().count());
    }
}
