//! Composes two modules, checks the composite invariants on every reachable
//! state and compares the composite against the syntactically linked module.
//! A second run switches on an engine fault to show the checks catching it.

use sysgame::compose::{check_composition, Composite, Faults};
use sysgame::fixtures::pairs;
use sysgame::lang::load_pair;

fn main() {
    let fg = pairs().into_iter().find(|p| p.name == "fg").unwrap();
    let (m1, m2) = load_pair(fg.left, fg.right).unwrap();
    for faults in [Faults::default(), Faults { skip_call_freshness: true, ..Faults::default() }] {
        let comp = Composite::new(&m1, &m2, fg.budget.clone()).unwrap().with_faults(faults);
        let report = check_composition(&comp).unwrap();
        println!("{faults:?}\n{report}\n");
    }
}
