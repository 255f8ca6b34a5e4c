use super::*;
use crate::sls::StoreUpdate;
use crate::store::StoreValue;
use crate::syntax::Value;

const PROT: &str = "export prot; import read;
    decl prot() { local s, k, x; s = new(); k = new(); x = read(); if (*x == *k) then *s else *k }";

fn l(i: u32) -> Name {
    Name::loc(i)
}

fn k(i: u32) -> Name {
    Name::cont(i)
}

fn upd(b: &[(Name, i64)]) -> StoreUpdate {
    b.iter().map(|(a, v)| (*a, StoreValue::Int(*v))).collect()
}

fn call_prot() -> SystemMove {
    SystemMove::Call { f: Name::func(0), arg: Value::unit(), k: k(0), store: upd(&[]) }
}

#[test]
fn first_menu_offers_the_call_to_prot() {
    let s = Session::new(PROT).unwrap();
    assert!(s.menu().contains(&call_prot()));
    let v = s.view();
    assert_eq!(v["turn"], "system");
    assert_eq!(v["publicNames"], json!(["f0", "f1"]));
    assert_eq!(v["visibleStore"], json!({}));
    assert_eq!(v["storedContinuations"], json!([]));
}

#[test]
fn empty_module_has_empty_menu() {
    let s = Session::new("").unwrap();
    assert!(s.menu().is_empty());
    assert_eq!(s.view()["menu"], json!([]));
}

#[test]
fn malformed_source_is_a_source_error() {
    let e = Session::new("export f; decl f( {").unwrap_err();
    let SessionError::Source(le) = e else { panic!("{e}") };
    assert!(le.pos().is_some());
}

#[test]
fn learned_name_replays_to_the_leak() {
    let mut s = Session::new(PROT).unwrap();
    s.apply(&call_prot()).unwrap();
    let read_node = s.cursor;
    assert_eq!(s.view()["storedContinuations"], json!([{"k": "k0", "polarity": "system"}, {"k": "k1", "polarity": "program"}]));

    // branch A: answer the read with a fresh location
    let a = s.apply(&SystemMove::Ret { value: Value::Name(l(5)), k: k(1), store: upd(&[(l(5), 0)]) }).unwrap();
    assert_eq!(s.view()["disclosures"], json!(["l4", "l5"]));

    // the name learned in A is still private at the read node
    s.navigate(read_node).unwrap();
    let fake = SystemMove::Ret { value: Value::Name(l(4)), k: k(1), store: upd(&[(l(4), 0), (l(5), 0)]) };
    let guess = SystemMove::Ret { value: Value::Name(l(4)), k: k(1), store: upd(&[(l(5), 0)]) };
    let err = s.apply(&guess).unwrap_err();
    assert!(matches!(err, SessionError::Move(MoveError::GuessedPrivateName { name }) if name == l(4)), "{err:?}");
    assert!(matches!(s.apply(&fake), Err(SessionError::Move(MoveError::PrivateStoreTampering { .. }))));
    assert!(err.to_string().contains("cannot guess private names"));

    // a sibling branch at the read node, then the second return after A
    s.apply(&SystemMove::Ret { value: Value::Int(0), k: k(1), store: upd(&[]) }).unwrap();
    s.navigate(a).unwrap();
    s.apply(&fake).unwrap();
    let v = s.view();
    assert_eq!(v["disclosures"], json!(["l3"]));
    assert_eq!(v["lastLabels"][1]["value"], "l3");
    assert_eq!(s.nodes[read_node].children.len(), 2);
    assert!(s.verify().ok);
}

#[test]
fn unknown_continuation_is_explained() {
    let mut s = Session::new(PROT).unwrap();
    let err = s.apply(&SystemMove::Ret { value: Value::Int(0), k: k(0), store: upd(&[]) }).unwrap_err();
    let SessionError::Move(me) = &err else { panic!("{err}") };
    assert_eq!(me.kind(), "UnknownContinuation");
    assert!(err.to_string().contains("only return to continuations"));
}

#[test]
fn moves_outside_the_menu_are_accepted_when_valid() {
    let mut s = Session::new("export f; decl f(p) { return p; }").unwrap();
    let mv = SystemMove::Call { f: Name::func(0), arg: Value::Int(12345), k: k(7), store: upd(&[]) };
    assert!(!s.menu().contains(&mv));
    s.apply(&mv).unwrap();
    assert_eq!(s.view()["lastLabels"][1]["value"], 12345);
}

#[test]
fn sinks_refuse_moves_and_root_navigation_restores_the_start() {
    let mut s = Session::new("export f; decl f() { return *0; }").unwrap();
    let start = s.view();
    s.apply(&SystemMove::Call { f: Name::func(0), arg: Value::unit(), k: k(0), store: upd(&[]) }).unwrap();
    assert_eq!(s.view()["turn"], "halted");
    assert!(s.current().is_sink());
    let err = s.apply(&SystemMove::Call { f: Name::func(0), arg: Value::unit(), k: k(1), store: upd(&[]) });
    assert!(matches!(err, Err(SessionError::NotSystemTurn(1))));
    s.navigate(0).unwrap();
    let back = s.view();
    assert_eq!(back["menu"], start["menu"]);
    assert_eq!(back["publicNames"], start["publicNames"]);
    assert!(matches!(s.navigate(9), Err(SessionError::UnknownNode(9))));
    assert!(s.verify().ok);
}

#[test]
fn repeating_a_move_reuses_the_branch() {
    let mut s = Session::new(PROT).unwrap();
    s.apply(&call_prot()).unwrap();
    s.navigate(0).unwrap();
    s.apply(&call_prot()).unwrap();
    assert_eq!(s.nodes.len(), 2);
}

#[test]
fn snapshot_restores_the_cursor_path() {
    let mut s = Session::new(PROT).unwrap();
    s.apply(&call_prot()).unwrap();
    s.apply(&SystemMove::Ret { value: Value::Name(l(5)), k: k(1), store: upd(&[(l(5), 0)]) }).unwrap();
    let r = Session::restore(&s.snapshot()).unwrap();
    assert_eq!(r.export(), s.export());
    assert_eq!(r.view()["publicNames"], s.view()["publicNames"]);
    assert_eq!(s.export().lines().count(), 2);
}

#[test]
fn views_never_mention_private_names() {
    let mut s = Session::new(PROT).unwrap();
    s.apply(&call_prot()).unwrap();
    // l3 and l4 are allocated but not disclosed yet
    let text = s.view().to_string();
    assert!(!text.contains("\"l3\"") && !text.contains("\"l4\""));
}
