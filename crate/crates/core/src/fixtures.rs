//! Bundled example modules and the move script of the secrecy attack.

use crate::sls::MoveBudget;

macro_rules! fixture {
    ($name:ident, $file:literal) => {
        pub const $name: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $file));
    };
}

fixture!(PROT, "prot.slc");
fixture!(PROT_VARIANT, "prot_variant.slc");
fixture!(EQ1, "eq1.slc");
fixture!(EQ2, "eq2.slc");
fixture!(EQ3, "eq3.slc");
fixture!(FG_M1, "fg_m1.slc");
fixture!(FG_M2, "fg_m2.slc");
fixture!(DISCLOSE_MK, "disclose_mk.slc");
fixture!(CALLS_MK, "calls_mk.slc");
fixture!(ATTACK, "attack.jsonl");

/// Every bundled module, by file stem.
pub const MODULES: &[(&str, &str)] = &[
    ("prot", PROT),
    ("prot_variant", PROT_VARIANT),
    ("eq1", EQ1),
    ("eq2", EQ2),
    ("eq3", EQ3),
    ("fg_m1", FG_M1),
    ("fg_m2", FG_M2),
    ("disclose_mk", DISCLOSE_MK),
    ("calls_mk", CALLS_MK),
];

/// Two modules meant to be composed, with a budget that explores their
/// composite to depth 6 in about a second.
#[derive(Clone, Debug)]
pub struct Pair {
    pub name: &'static str,
    pub left: &'static str,
    pub right: &'static str,
    pub budget: MoveBudget,
}

/// Composable pairs among the bundled modules.
pub fn pairs() -> Vec<Pair> {
    let wide = MoveBudget { ints: vec![0, 1], fresh_locs: 1, width: 2, depth: 6, fuel: 10_000 };
    // mk discloses a location through another; fresh locations make the
    // composite too large to hold at depth 6
    let narrow = MoveBudget { ints: vec![0], fresh_locs: 0, width: 1, depth: 6, fuel: 10_000 };
    vec![
        Pair { name: "fg", left: FG_M1, right: FG_M2, budget: wide.clone() },
        Pair { name: "eq2-g", left: EQ2, right: FG_M2, budget: wide.clone() },
        Pair { name: "eq3-g", left: EQ3, right: FG_M2, budget: wide },
        Pair { name: "mk", left: CALLS_MK, right: DISCLOSE_MK, budget: narrow },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads() {
        for (name, src) in MODULES {
            crate::lang::load_module(src).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert_eq!(crate::wire::parse_script(ATTACK).unwrap().len(), 3);
    }
}
