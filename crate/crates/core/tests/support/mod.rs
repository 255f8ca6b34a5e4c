//! Checks shared by the property tests and the acceptance runner. Each
//! returns a one-line summary on success and the first counterexample on
//! failure.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use sysgame::canon::canonicalize;
use sysgame::fixtures::{self, MODULES};
use sysgame::lang::{load_module, ResolvedModule};
use sysgame::lts::{explore, Lts};
use sysgame::nominal::{Name, NameSet, Nominal, Permutation};
use sysgame::sls::{
    apply_system_move, enumerate_system_moves, program_turn, replay, Dir, MoveBudget, MoveError, SlsState,
    StoreUpdate, SystemMove,
};
use sysgame::store::{Store, StoreValue, Suspended};
use sysgame::syntax::Value;
use sysgame::wire::{format_script, parse_script, TraceLog, TraceStyle};

pub type Check = Result<String, String>;

/// Seed for every randomized suite; `SYSGAME_SEED` overrides it.
pub fn seed() -> u64 {
    std::env::var("SYSGAME_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0x5eed)
}

pub fn runner(cases: u32) -> TestRunner {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed().to_le_bytes());
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Check
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map(|()| format!("{cases} cases, seed {:#x}", seed())).map_err(|e| e.to_string())
}

/// Budget used for exploring single fixtures.
pub fn fixture_budget(depth: usize) -> MoveBudget {
    MoveBudget { ints: vec![0, 1], fresh_locs: 1, width: 2, depth, fuel: 10_000 }
}

/// `fixture_budget`, narrowed for disclose_mk: once it discloses two
/// locations the wide budget yields millions of store patches per state.
pub fn budget_for(name: &str, depth: usize) -> MoveBudget {
    match name {
        "disclose_mk" => MoveBudget { fresh_locs: 0, width: 1, ..fixture_budget(depth) },
        _ => fixture_budget(depth),
    }
}

pub fn loaded() -> Vec<(&'static str, ResolvedModule)> {
    MODULES.iter().map(|(n, s)| (*n, load_module(s).expect("fixture loads"))).collect()
}

// ---- store algebra ----

fn arb_store_value() -> impl Strategy<Value = StoreValue> {
    prop_oneof![
        (-2i64..3).prop_map(StoreValue::Int),
        (0u32..8).prop_map(|i| StoreValue::Name(Name::loc(i))),
        (0u32..3).prop_map(|i| StoreValue::Name(Name::func(i))),
    ]
}

pub fn arb_store() -> impl Strategy<Value = Store> {
    let locs = prop::collection::btree_map((0u32..8).prop_map(Name::loc), arb_store_value(), 0..8);
    let conts = prop::collection::btree_map(0u32..4, 0u32..4, 0..3);
    (locs, conts).prop_map(|(locs, conts)| {
        let mut s = Store::from_locs(locs);
        for (k, r) in conts {
            s.set_cont(Name::cont(k), Suspended { frames: Vec::new(), ret: Name::cont(r + 4) });
        }
        s
    })
}

pub fn arb_names() -> impl Strategy<Value = NameSet> {
    prop::collection::btree_set(
        prop_oneof![(0u32..8).prop_map(Name::loc), (0u32..3).prop_map(Name::func), (0u32..8).prop_map(Name::cont)],
        0..5,
    )
    .prop_map(|s| {
        let mut out = NameSet::new();
        out.extend(s);
        out
    })
}

fn lookup(s: &Store, a: Name) -> (Option<StoreValue>, Option<Suspended>) {
    (s.loc(a), s.cont(a).cloned())
}

pub fn store_laws(cases: u32) -> Check {
    run(cases, (arb_store(), arb_store(), arb_names(), arb_names()), |(s, t, x, y)| {
        let cx = s.closure(&x);
        prop_assert!(x.is_subset(&cx), "closure is extensive");
        prop_assert_eq!(s.closure(&cx), cx.clone(), "closure is idempotent");
        prop_assert!(cx.is_subset(&s.closure(&x.union(&y))), "closure is monotone");
        let lx = s.closure_locs(&x);
        prop_assert_eq!(s.closure_locs(&lx), lx.clone(), "location closure is idempotent");
        prop_assert!(lx.is_subset(&s.closure_locs(&x.union(&y))), "location closure is monotone");

        let (kept, dropped) = (s.keep(&x), s.drop_names(&x));
        prop_assert!(kept.domain().is_disjoint(&dropped.domain()), "restriction parts overlap");
        prop_assert_eq!(kept.domain().union(&dropped.domain()), s.domain());
        prop_assert_eq!(kept.union_disjoint(&dropped), s.clone(), "restriction parts do not rebuild the store");
        prop_assert!(kept.domain().is_subset(&x));

        let u = s.update(&t);
        prop_assert_eq!(u.domain(), s.domain().union(&t.domain()));
        for a in u.domain().iter() {
            let expect = if t.contains(*a) { lookup(&t, *a) } else { lookup(&s, *a) };
            prop_assert_eq!(lookup(&u, *a), expect, "update at {}", a);
        }
        prop_assert!(t.is_substore_of(&u), "update keeps every binding of the patch");
        prop_assert!(s.extends(&u));
        Ok(())
    })
}

// ---- equivariance ----

fn arb_perm() -> impl Strategy<Value = Permutation> {
    let shuffled = |n: u32| Just((0..n).collect::<Vec<u32>>()).prop_shuffle();
    (shuffled(10), shuffled(4), shuffled(10)).prop_map(|(l, f, k)| {
        let pairs = (0..10).map(|i| (Name::loc(i), Name::loc(l[i as usize])))
            .chain((0..4).map(|i| (Name::func(i), Name::func(f[i as usize]))))
            .chain((0..10).map(|i| (Name::cont(i), Name::cont(k[i as usize]))));
        Permutation::from_injection(pairs).expect("bijection")
    })
}

fn arb_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        (0i64..2).prop_map(Value::Int),
        (0u32..8).prop_map(|i| Value::Name(Name::loc(i))),
        (0u32..3).prop_map(|i| Value::Name(Name::func(i))),
        Just(Value::unit()),
    ]
}

/// Arbitrary moves, most of them invalid somewhere.
fn arb_move() -> impl Strategy<Value = SystemMove> {
    let update = || {
        prop::collection::btree_map((0u32..8).prop_map(Name::loc), arb_store_value(), 0..3)
            .prop_map(|m| m.into_iter().collect::<StoreUpdate>())
    };
    prop_oneof![
        (0u32..3, arb_value(), 0u32..6, update())
            .prop_map(|(f, arg, k, store)| SystemMove::Call { f: Name::func(f), arg, k: Name::cont(k), store }),
        (arb_value(), 0u32..6, update()).prop_map(|(value, k, store)| SystemMove::Ret { value, k: Name::cont(k), store }),
    ]
}

struct SystemStates {
    name: &'static str,
    module: ResolvedModule,
    states: Vec<sysgame::sls::SystemConfig>,
    counts: (usize, usize),
}

fn system_states(depth: usize) -> Vec<SystemStates> {
    loaded()
        .into_iter()
        .map(|(name, module)| {
            let lts = explore(&module, &budget_for(name, depth));
            let states = lts
                .nodes
                .iter()
                .filter_map(|n| match &n.state {
                    SlsState::System(sc) => Some(sc.clone()),
                    _ => None,
                })
                .collect();
            let counts = (lts.nodes.len(), lts.labelled_edges().count());
            SystemStates { name, module, states, counts }
        })
        .collect()
}

/// Equal up to renaming of names outside `pinned`.
fn same_up_to_fresh(a: &SlsState, la: Option<&sysgame::sls::Label>, b: &SlsState, lb: Option<&sysgame::sls::Label>, pinned: &NameSet) -> bool {
    let (ca, cb) = (canonicalize(a, pinned), canonicalize(b, pinned));
    ca.value == cb.value && la.map(|l| l.permute(&ca.witness)) == lb.map(|l| l.permute(&cb.witness))
}

pub fn equivariance(cases: u32) -> Check {
    const DEPTH: usize = 3;
    let pool = system_states(DEPTH);
    let n = pool.len();
    let strategy = (0..n, any::<prop::sample::Index>(), any::<prop::sample::Index>(), any::<bool>(), arb_move(), arb_perm());
    run(cases, strategy, |(fi, si, mi, from_menu, random_mv, pi)| {
        let fx = &pool[fi];
        let sc = &fx.states[si.index(fx.states.len())];
        let m = &fx.module;
        let menu = enumerate_system_moves(sc, m, &budget_for(fx.name, DEPTH));
        let mv = if from_menu && !menu.is_empty() { menu[mi.index(menu.len())].clone() } else { random_mv };
        let (sc2, mv2, m2) = (sc.permute(&pi), mv.permute(&pi), m.permute(&pi));

        let before = apply_system_move(sc, &mv, m);
        let after = apply_system_move(&sc2, &mv2, &m2);
        match (&before, &after) {
            (Ok(p), Ok(p2)) => prop_assert_eq!(&p.permute(&pi), p2, "{}: S->P step", fx.name),
            (Err(e), Err(e2)) => prop_assert_eq!(e.kind(), e2.kind(), "{}: rejection", fx.name),
            _ => prop_assert!(false, "{}: {:?} vs {:?}", fx.name, before.is_ok(), after.is_ok()),
        }

        if let (Ok(p), Ok(p2)) = (before, after) {
            let fuel = 10_000;
            let t = program_turn(&p, m, fuel, &NameSet::new());
            let t2 = program_turn(&p2, &m2, fuel, &NameSet::new());
            let mut pinned = p2.support();
            pinned.extend(m2.static_names().iter().copied());
            match (&t.outcome, &t2.outcome) {
                (Ok((l, s)), Ok((l2, s2))) => prop_assert!(
                    same_up_to_fresh(&SlsState::System(s.permute(&pi)), Some(&l.permute(&pi)), &SlsState::System(s2.clone()), Some(l2), &pinned),
                    "{}: P->S step", fx.name
                ),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "{}: one side halted", fx.name),
            }
        }

        let lts2 = explore(&m2, &budget_for(fx.name, DEPTH));
        prop_assert_eq!((lts2.nodes.len(), lts2.labelled_edges().count()), fx.counts, "{}: explored sizes", fx.name);
        Ok(())
    })
}

// ---- edge properties on explored fixtures ----

pub struct Explored {
    pub name: &'static str,
    pub module: ResolvedModule,
    pub lts: Lts<SlsState>,
}

pub fn explored(depth: usize) -> Vec<Explored> {
    loaded()
        .into_iter()
        .map(|(name, module)| {
            let lts = explore(&module, &budget_for(name, depth));
            Explored { name, module, lts }
        })
        .collect()
}

/// S→P moves mention only public or fresh names, and P→S labels mention
/// only names that are public afterwards with exactly the visible store.
pub fn epistemic_soundness(all: &[Explored]) -> Check {
    let mut edges = 0;
    for Explored { name, module, lts } in all {
        for e in &lts.edges {
            let Some(label) = &e.label else { continue };
            edges += 1;
            let from = &lts.nodes[e.from].state;
            match (label.dir, from) {
                (Dir::SP, SlsState::System(sc)) => {
                    let mv = e.mv.as_ref().ok_or(format!("{name}: S->P edge without a move"))?;
                    for a in mv.support().iter() {
                        if !sc.public.contains(a) && sc.used.contains(a) {
                            return Err(format!("{name}: move {mv} mentions private {a}"));
                        }
                    }
                    apply_system_move(sc, mv, module).map_err(|err| format!("{name}: menu move {mv} rejected: {err}"))?;
                }
                (Dir::PS, SlsState::Program(_)) => {
                    let SlsState::System(to) = &lts.nodes[e.to].state else {
                        return Err(format!("{name}: P->S edge into a non-system state"));
                    };
                    let l = label.permute(&e.renaming);
                    if !l.support().is_subset(&to.public) {
                        return Err(format!("{name}: label {l} mentions names outside {}", to.public));
                    }
                    if l.store != to.visible_store() {
                        return Err(format!("{name}: label store of {l} is not the visible store"));
                    }
                }
                _ => return Err(format!("{name}: label {label} leaves the wrong kind of state")),
            }
        }
    }
    Ok(format!("{edges} labelled edges on {} fixtures", all.len()))
}

/// S→P moves never change private locations or stored continuations, and
/// a move writing a private location is rejected.
pub fn private_store_immunity(all: &[Explored]) -> Check {
    let (mut edges, mut tampered) = (0, 0);
    for Explored { name, module, lts } in all {
        for e in &lts.edges {
            let (Some(mv), SlsState::System(sc)) = (&e.mv, &lts.nodes[e.from].state) else { continue };
            edges += 1;
            let p = apply_system_move(sc, mv, module).map_err(|err| format!("{name}: {err}"))?;
            let private = sc.used.difference(&sc.public);
            for a in private.locations().iter() {
                if p.store.loc(*a) != sc.store.loc(*a) {
                    return Err(format!("{name}: {mv} changed private {a}"));
                }
            }
            for (k, susp) in sc.store.conts() {
                if p.store.cont(*k) != Some(susp) {
                    return Err(format!("{name}: {mv} changed stored continuation {k}"));
                }
            }
            if let Some(a) = private.locations().iter().find(|a| sc.store.loc(**a).is_some()) {
                tampered += 1;
                let mut bad = mv.clone();
                let (SystemMove::Call { store, .. } | SystemMove::Ret { store, .. }) = &mut bad;
                store.insert(*a, StoreValue::Int(42));
                match apply_system_move(sc, &bad, module) {
                    Err(MoveError::PrivateStoreTampering { loc }) if loc == *a => {}
                    other => return Err(format!("{name}: tampering with {a} gave {other:?}")),
                }
            }
        }
    }
    Ok(format!("{edges} S->P edges, {tampered} tampering attempts rejected"))
}

/// Every explored path's trace and script survive JSONL formatting.
pub fn jsonl_round_trip(all: &[Explored]) -> Check {
    let mut traces = 0;
    for Explored { name, lts, .. } in all {
        for (i, path) in lts.paths().into_iter().enumerate() {
            let log = TraceLog { labels: lts.raw_labels(&path).into_iter().flatten().collect(), halt: None };
            let text = log.format(TraceStyle::Jsonl);
            let back = TraceLog::parse_jsonl(&text).map_err(|e| format!("{name}: {e}"))?;
            if back != log {
                return Err(format!("{name}: trace to node {i} changed in the round trip"));
            }
            let script = lts.raw_script(&path);
            if parse_script(&format_script(&script)).map_err(|e| e.to_string())? != script
                || parse_script(&text).map_err(|e| e.to_string())? != script
            {
                return Err(format!("{name}: script to node {i} changed in the round trip"));
            }
            traces += 1;
        }
    }
    Ok(format!("{traces} traces"))
}

/// Locations the module allocates or declares privately never become
/// public: along every explored path, public locations are ones the
/// system's moves mention.
pub fn locals_stay_private(source: &str, depth: usize) -> Check {
    let m = load_module(source).map_err(|e| e.to_string())?;
    let b = fixture_budget(depth);
    let lts = explore(&m, &b);
    let mut states = 0;
    for path in lts.paths() {
        let script = lts.raw_script(&path);
        let mut mentioned = NameSet::new();
        for mv in &script {
            mentioned.extend(mv.support().iter().copied());
        }
        let trace = replay(&m, &script, b.fuel).map_err(|e| e.to_string())?;
        for st in &trace.states {
            let leaked = st.public().locations().difference(&mentioned);
            if !leaked.is_empty() {
                return Err(format!("{leaked} public after {}", format_script(&script)));
            }
            states += 1;
        }
    }
    Ok(format!("{states} states on {} paths", lts.nodes.len()))
}

pub fn prot_modules() -> (ResolvedModule, ResolvedModule) {
    (load_module(fixtures::PROT).unwrap(), load_module(fixtures::PROT_VARIANT).unwrap())
}
