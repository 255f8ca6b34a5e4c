use super::*;
use crate::lang::load_module;
use crate::store::StoreValue;

const PROT: &str = "export prot; import read;
decl prot() { local s, k, x;
  s = new(); k = new(); x = read();
  if (*x == *k) then *s else *k }";

fn l(i: u32) -> Name {
    Name::loc(i)
}
fn k(i: u32) -> Name {
    Name::cont(i)
}

fn upd(pairs: &[(Name, i64)]) -> StoreUpdate {
    pairs.iter().map(|(a, v)| (*a, StoreValue::Int(*v))).collect()
}

fn attack_script() -> Vec<SystemMove> {
    vec![
        SystemMove::Call { f: Name::func(0), arg: Value::unit(), k: k(0), store: upd(&[]) },
        SystemMove::Ret { value: Value::Name(l(5)), k: k(1), store: upd(&[(l(5), 0)]) },
        SystemMove::Ret { value: Value::Name(l(4)), k: k(1), store: upd(&[(l(4), 0), (l(5), 0)]) },
    ]
}

#[test]
fn initial_configurations() {
    let m = load_module(PROT).unwrap();
    let sc = initial_config(&m);
    assert_eq!(sc.used, NameSet::from([Name::func(0), Name::func(1)]));
    assert_eq!(sc.public, sc.used);
    assert!(sc.store.is_empty());

    let m = load_module("export f; decl x = 3; decl f() { *x }").unwrap();
    let sc = initial_config(&m);
    assert_eq!(sc.used, NameSet::from([Name::func(0), l(0)]));
    assert_eq!(sc.public, NameSet::from([Name::func(0)]));
    assert_eq!(sc.store.to_string(), "l0=3");

    let sc = initial_config(&load_module("").unwrap());
    assert!(sc.used.is_empty() && sc.store.is_empty());
}

#[test]
fn attack_replay_leaks_secret_last() {
    let m = load_module(PROT).unwrap();
    let trace = replay(&m, &attack_script(), 1000).unwrap();
    let rendered: Vec<String> = trace.labels.iter().map(|l| l.to_string()).collect();
    assert_eq!(
        rendered,
        vec![
            "S->P call f0 (), k0 / {}",
            "P->S call f1 (), k1 / {}",
            "S->P ret l5, k1 / {l5=0}",
            "P->S ret l4, k0 / {l4=0, l5=0}",
            "S->P ret l4, k1 / {l4=0, l5=0}",
            "P->S ret l3, k0 / {l3=0, l4=0, l5=0}",
        ]
    );
    for (i, st) in trace.states.iter().enumerate() {
        assert_eq!(st.public().contains(&l(3)), i == 5, "state {i}");
    }
    assert!(trace.states[3].public().contains(&l(4)));
}

#[test]
fn guessing_the_secret_early_is_rejected() {
    let m = load_module(PROT).unwrap();
    let mut script = attack_script();
    script[2] = SystemMove::Ret { value: Value::Name(l(3)), k: k(1), store: upd(&[(l(4), 0), (l(5), 0)]) };
    let err = replay(&m, &script, 1000).unwrap_err();
    assert_eq!(err.kind, ReplayErrorKind::Move { index: 2, error: MoveError::GuessedPrivateName { name: l(3) } });
    assert_eq!(err.prefix.labels.len(), 4);
}

#[test]
fn stale_private_name_in_second_move() {
    let m = load_module(PROT).unwrap();
    let script = vec![
        attack_script()[0].clone(),
        SystemMove::Ret { value: Value::Name(l(0)), k: k(1), store: upd(&[(l(0), 0)]) },
    ];
    let err = replay(&m, &script, 1000).unwrap_err();
    assert_eq!(err.prefix.labels.len(), 2);
    assert_eq!(err.kind, ReplayErrorKind::Move { index: 1, error: MoveError::PrivateStoreTampering { loc: l(0) } });
}

#[test]
fn empty_script_gives_empty_trace() {
    let m = load_module(PROT).unwrap();
    assert_eq!(replay(&m, &[], 10).unwrap(), Trace::default());
}

#[test]
fn move_side_conditions() {
    let m = load_module("export f; decl x = 1; decl f(p) { p }").unwrap();
    let sc = initial_config(&m);
    let f = Name::func(0);
    let call = |arg: Value, kk: Name, store: StoreUpdate| SystemMove::Call { f, arg, k: kk, store };
    assert!(apply_system_move(&sc, &call(Value::Int(3), k(0), upd(&[])), &m).is_ok());
    assert_eq!(
        apply_system_move(&sc, &call(Value::Name(l(0)), k(0), upd(&[])), &m),
        Err(MoveError::GuessedPrivateName { name: l(0) })
    );
    assert_eq!(
        apply_system_move(&sc, &call(Value::Name(l(1)), k(0), upd(&[])), &m),
        Err(MoveError::FreshLocationUnbound { loc: l(1) })
    );
    assert!(apply_system_move(&sc, &call(Value::Name(l(1)), k(0), upd(&[(l(1), 5)])), &m).is_ok());
    let mut bad = upd(&[]);
    bad.insert(k(3), StoreValue::Int(0));
    assert_eq!(apply_system_move(&sc, &call(Value::unit(), k(0), bad), &m), Err(MoveError::ContinuationInStore { k: k(3) }));
    let ret = SystemMove::Ret { value: Value::Int(0), k: k(0), store: upd(&[]) };
    assert_eq!(apply_system_move(&sc, &ret, &m), Err(MoveError::UnknownContinuation { k: k(0) }));
    let undefined = SystemMove::Call { f: Name::func(4), arg: Value::unit(), k: k(0), store: upd(&[]) };
    assert_eq!(apply_system_move(&sc, &undefined, &m), Err(MoveError::UndefinedFunction { f: Name::func(4) }));
}

#[test]
fn missing_public_location_rejected() {
    let m = load_module("export f, x; decl x = 1; decl f() { x }").unwrap();
    let sc = initial_config(&m);
    let x = m.exports.locations().iter().next().copied().unwrap();
    let mv = SystemMove::Call { f: Name::func(0), arg: Value::unit(), k: k(0), store: upd(&[]) };
    assert_eq!(apply_system_move(&sc, &mv, &m), Err(MoveError::MissingPublicFrame { loc: x }));
}

#[test]
fn enumerated_moves_are_valid_and_exhaustive() {
    let m = load_module("export f, x; decl x = 1; decl f(p) { p }").unwrap();
    let sc = initial_config(&m);
    let b = MoveBudget { ints: vec![0], fresh_locs: 1, width: 1, depth: 1, fuel: 100 };
    let moves = enumerate_system_moves(&sc, &m, &b);
    for mv in &moves {
        apply_system_move(&sc, mv, &m).unwrap_or_else(|e| panic!("{mv}: {e}"));
    }
    // Brute force: every argument in {(), 0, f, x, l1} combined with every
    // value for x in {1 (kept), 0, f, x, l1}, binding l1 when it occurs.
    let x = l(0);
    let f = Name::func(0);
    let fresh = l(1);
    let atoms = [
        Value::unit(),
        Value::Int(0),
        Value::Name(f),
        Value::Name(x),
        Value::Name(fresh),
    ];
    let mut expected = Vec::new();
    for arg in &atoms {
        for xv in atoms.iter().skip(1).chain(std::iter::once(&Value::Int(1))) {
            let mut store = StoreUpdate::new();
            store.insert(x, StoreValue::from_value(xv).unwrap());
            let uses_fresh = arg.support().contains(&fresh) || xv.support().contains(&fresh);
            if uses_fresh {
                for fv in atoms.iter().skip(1) {
                    let mut s = store.clone();
                    s.insert(fresh, StoreValue::from_value(fv).unwrap());
                    expected.push(SystemMove::Call { f, arg: arg.clone(), k: k(0), store: s });
                }
            } else {
                expected.push(SystemMove::Call { f, arg: arg.clone(), k: k(0), store });
            }
        }
    }
    let mut got = moves.clone();
    got.sort();
    expected.sort();
    assert_eq!(got, expected);
}

#[test]
fn zero_budget_without_targets_is_empty() {
    let m = load_module("decl x;").unwrap();
    let b = MoveBudget { ints: vec![], fresh_locs: 0, width: 0, depth: 0, fuel: 1 };
    assert!(enumerate_system_moves(&initial_config(&m), &m, &b).is_empty());
}

#[test]
fn stored_continuation_is_a_return_target() {
    let m = load_module(PROT).unwrap();
    let trace = replay(&m, &attack_script()[..1], 1000).unwrap();
    let SlsState::System(sc) = trace.last_state().unwrap() else { panic!() };
    let b = MoveBudget { ints: vec![0], fresh_locs: 1, width: 1, depth: 1, fuel: 100 };
    let moves = enumerate_system_moves(sc, &m, &b);
    assert!(moves.iter().any(|m| matches!(m, SystemMove::Ret { k: kk, .. } if *kk == k(1))));
    assert!(moves.iter().all(|mv| apply_system_move(sc, mv, &m).is_ok()));
}
