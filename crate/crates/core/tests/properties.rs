mod support;

use support::*;

fn ok(c: Check) {
    match c {
        Ok(summary) => println!("{summary}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn store_algebra_laws() {
    ok(store_laws(500));
}

#[test]
fn steps_and_exploration_are_equivariant() {
    ok(equivariance(200));
}

#[test]
fn explored_edges_respect_what_the_system_knows() {
    let all = explored(5);
    ok(epistemic_soundness(&all));
    ok(private_store_immunity(&all));
}

#[test]
fn explored_traces_round_trip_through_jsonl() {
    ok(jsonl_round_trip(&explored(5)));
}

#[test]
fn local_and_module_x_stay_private() {
    ok(locals_stay_private(sysgame::fixtures::EQ1, 6));
    ok(locals_stay_private(sysgame::fixtures::EQ2, 6));
}

#[test]
fn prot_leaks_its_secret_location() {
    // the same check fails where the attack applies
    let e = locals_stay_private(sysgame::fixtures::PROT, 6).unwrap_err();
    assert!(e.contains("public after"), "{e}");
}
