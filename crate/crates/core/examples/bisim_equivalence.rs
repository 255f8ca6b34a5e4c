//! Checks the bundled module pairs for bounded bisimilarity ; a verdict that
//! separates the modules carries the distinguishing traces of both sides.

use sysgame::bisim::bisimilar;
use sysgame::fixtures::{EQ1, EQ2, EQ3, PROT, PROT_VARIANT};
use sysgame::lang::load_module;
use sysgame::sls::MoveBudget;

fn main() {
    let b = MoveBudget { ints: vec![0, 1], fresh_locs: 1, width: 2, depth: 6, fuel: 10_000 };
    let pairs = [("eq1", EQ1, "eq2", EQ2), ("eq2", EQ2, "eq3", EQ3), ("prot", PROT, "variant", PROT_VARIANT)];
    for (n1, s1, n2, s2) in pairs {
        let (m1, m2) = (load_module(s1).unwrap(), load_module(s2).unwrap());
        let started = std::time::Instant::now();
        let v = bisimilar(&m1, &m2, &b).unwrap();
        println!("{n1} vs {n2}: {v} ({:.2?})", started.elapsed());
    }
}
