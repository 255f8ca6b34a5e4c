//! Invariants of reachable composite states and agreement with the linked
//! module, checked on an explored composite LTS.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::{translate_r, internal_conts, ComposeError, Composite, CompositeState};
use crate::bisim::{weak_bisimilar, Verdict};
use crate::lang::{link, ResolvedModule};
use crate::lts::{explore, Edge, Lts};
use crate::machine::{run_traced, run_to_boundary, step, ProgramConfig, StepResult};
use crate::nominal::{NameSet, Nominal};
use crate::sls::{apply_system_move, emit_boundary, enumerate_system_moves, Label, SlsState, SystemMove};

/// Clauses of the reachable-state invariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaClause {
    PrivatesDisjoint,
    PublicOutsideShared,
    SharedCovered,
    AuxDomain,
    ContDomainsDisjoint,
    ContDomainsNotSystem,
    InternalConts,
    StoresAgreeAfterProgram,
    NotBothPrograms,
    PassiveStoreAgrees,
}

impl LemmaClause {
    pub const ALL: [LemmaClause; 10] = [
        LemmaClause::PrivatesDisjoint,
        LemmaClause::PublicOutsideShared,
        LemmaClause::SharedCovered,
        LemmaClause::AuxDomain,
        LemmaClause::ContDomainsDisjoint,
        LemmaClause::ContDomainsNotSystem,
        LemmaClause::InternalConts,
        LemmaClause::StoresAgreeAfterProgram,
        LemmaClause::NotBothPrograms,
        LemmaClause::PassiveStoreAgrees,
    ];

    pub fn description(self) -> &'static str {
        match self {
            LemmaClause::PrivatesDisjoint => "(N1 \\ P1) ∩ N2 = N1 ∩ (N2 \\ P2) = ∅",
            LemmaClause::PublicOutsideShared => "P1 \\ shared = P2 \\ shared",
            LemmaClause::SharedCovered => "shared non-function names ⊆ ν(aux) ∪ conts(P1 ∪ P2) ⊆ P1 ∪ P2",
            LemmaClause::AuxDomain => "dom(aux) = locations(P1 ∪ P2)",
            LemmaClause::ContDomainsDisjoint => "stored continuations of the two sides are disjoint",
            LemmaClause::ContDomainsNotSystem => "no stored continuation was introduced by the outside",
            LemmaClause::InternalConts => "conts(P1 ∩ P2) \\ system conts = conts(P1 ∪ P2) \\ shared",
            LemmaClause::StoresAgreeAfterProgram => "after a module speaks, aux agrees with both stores on their public parts",
            LemmaClause::NotBothPrograms => "at most one side runs a program",
            LemmaClause::PassiveStoreAgrees => "aux agrees with the waiting side on locations only it has public",
        }
    }
}

impl fmt::Display for LemmaClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.description())
    }
}

/// Agreement properties between composite edges and the linked module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropItem {
    /// A silent cross-module step leaves the translation unchanged.
    SilentPreserves,
    /// An internal step of one side is a step of the translation.
    InternalCommutes,
    /// Without silent steps, every internal step of the translation is
    /// matched.
    InternalReflected,
    /// A labelled edge is a labelled edge of the translation.
    LabelCommutes,
    /// Without silent steps, every labelled edge of the translation whose
    /// label avoids the internal continuations is matched.
    LabelReflected,
    /// The translation is defined.
    Translation,
}

impl PropItem {
    pub const ALL: [PropItem; 6] = [
        PropItem::SilentPreserves,
        PropItem::InternalCommutes,
        PropItem::InternalReflected,
        PropItem::LabelCommutes,
        PropItem::LabelReflected,
        PropItem::Translation,
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TallyReport {
    pub checked: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl TallyReport {
    pub fn holds(&self) -> bool {
        self.failed == 0
    }

    fn record(&mut self, outcome: Result<(), String>) {
        self.checked += 1;
        if let Err(msg) = outcome {
            self.failed += 1;
            self.first_failure.get_or_insert(msg);
        }
    }

    fn merge(&mut self, other: TallyReport) {
        self.checked += other.checked;
        self.failed += other.failed;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionReport {
    pub states: usize,
    pub edges: usize,
    pub truncated: bool,
    pub lemma: BTreeMap<LemmaClause, TallyReport>,
    pub items: BTreeMap<PropItem, TallyReport>,
    /// Composite LTS against the linked module.
    pub bisim: Verdict,
}

impl CompositionReport {
    pub fn lemma_holds(&self) -> bool {
        self.lemma.values().all(TallyReport::holds)
    }

    pub fn items_hold(&self) -> bool {
        self.items.values().all(TallyReport::holds)
    }

    pub fn holds(&self) -> bool {
        self.lemma_holds() && self.items_hold() && self.bisim.is_bisimilar()
    }
}

impl fmt::Display for CompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} states, {} edges{}", self.states, self.edges, if self.truncated { " (truncated)" } else { "" })?;
        let line = |f: &mut fmt::Formatter<'_>, name: String, t: &TallyReport| -> fmt::Result {
            let status = if t.holds() { "ok" } else { "FAIL" };
            writeln!(f, "  {status:4} {name}: {} checked, {} failed", t.checked, t.failed)?;
            if let Some(m) = &t.first_failure {
                for l in m.lines() {
                    writeln!(f, "         {l}")?;
                }
            }
            Ok(())
        };
        writeln!(f, "state invariants:")?;
        for (c, t) in &self.lemma {
            line(f, c.to_string(), t)?;
        }
        writeln!(f, "agreement with the linked module:")?;
        for (i, t) in &self.items {
            line(f, format!("{i:?}"), t)?;
        }
        write!(f, "composite vs linked: {}", self.bisim)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

/// The clauses that depend on a single state.
pub fn check_state_lemma(cs: &CompositeState) -> Vec<(LemmaClause, Result<(), String>)> {
    if cs.is_halted() {
        return Vec::new();
    }
    let (n1, n2) = (cs.left.used(), cs.right.used());
    let (p1, p2) = (cs.left.public(), cs.right.public());
    let p_all = p1.union(&p2);
    let (s1, s2) = (cs.left.store().expect("live"), cs.right.store().expect("live"));
    let dom_k1: NameSet = s1.conts().keys().copied().collect();
    let dom_k2: NameSet = s2.conts().keys().copied().collect();
    let mut out = Vec::new();
    let leak = n1.difference(&p1).intersection(&n2).union(&n1.intersection(&n2.difference(&p2)));
    out.push((LemmaClause::PrivatesDisjoint, ensure(leak.is_empty(), || format!("shared private names {leak}"))));
    let (o1, o2) = (p1.difference(&cs.shared), p2.difference(&cs.shared));
    out.push((LemmaClause::PublicOutsideShared, ensure(o1 == o2, || format!("{o1} vs {o2}"))));
    let covered = cs.aux.support().union(&p_all.continuations());
    let uncovered = cs.shared.difference(&cs.shared.functions()).difference(&covered);
    let outside = covered.difference(&p_all);
    out.push((
        LemmaClause::SharedCovered,
        ensure(uncovered.is_empty() && outside.is_empty(), || format!("uncovered {uncovered}, not public {outside}")),
    ));
    let dom_aux: NameSet = cs.aux.locs().keys().copied().collect();
    out.push((
        LemmaClause::AuxDomain,
        ensure(dom_aux == p_all.locations(), || format!("dom(aux) = {dom_aux}, public locations {}", p_all.locations())),
    ));
    let both = dom_k1.intersection(&dom_k2);
    out.push((LemmaClause::ContDomainsDisjoint, ensure(both.is_empty(), || format!("stored on both sides: {both}"))));
    let sys = dom_k1.union(&dom_k2).intersection(&cs.sys_conts);
    out.push((LemmaClause::ContDomainsNotSystem, ensure(sys.is_empty(), || format!("stored outside continuations {sys}"))));
    let lhs = p1.intersection(&p2).continuations().difference(&cs.sys_conts);
    let rhs = p_all.continuations().difference(&cs.shared);
    out.push((LemmaClause::InternalConts, ensure(lhs == rhs, || format!("{lhs} vs {rhs}"))));
    let programs = cs.left.is_program() as usize + cs.right.is_program() as usize;
    out.push((LemmaClause::NotBothPrograms, ensure(programs < 2, || "both sides run programs".into())));
    if let Some(i) = cs.program_side() {
        let j = 1 - i;
        let only_j = cs.side(j).public().difference(&cs.side(i).public());
        let part = cs.aux.keep(&only_j);
        let sj = cs.side(j).store().expect("live");
        out.push((LemmaClause::PassiveStoreAgrees, ensure(part.is_substore_of(sj), || format!("aux {{{part}}} vs {{{sj}}}"))));
    }
    out
}

/// The clause about states reached when side `i` speaks to the outside.
fn check_after_program(i: usize, cs: &CompositeState) -> Result<(), String> {
    let j = 1 - i;
    let (pi, pj) = (cs.side(i).public(), cs.side(j).public());
    let (si, sj) = (cs.side(i).store().expect("live"), cs.side(j).store().expect("live"));
    let a = cs.aux.keep(&pi);
    let b = cs.aux.keep(&pj.difference(&pi));
    ensure(a.is_substore_of(si) && b.is_substore_of(sj), || format!("aux {{{}}} vs stores {{{si}}} / {{{sj}}}", cs.aux))
}

#[derive(Default)]
struct Tally {
    lemma: BTreeMap<LemmaClause, TallyReport>,
    items: BTreeMap<PropItem, TallyReport>,
}

impl Tally {
    fn lemma(&mut self, c: LemmaClause, r: Result<(), String>) {
        self.lemma.entry(c).or_default().record(r);
    }

    fn item(&mut self, i: PropItem, r: Result<(), String>) {
        self.items.entry(i).or_default().record(r);
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (c, t) in other.lemma {
            self.lemma.entry(c).or_default().merge(t);
        }
        for (i, t) in other.items {
            self.items.entry(i).or_default().merge(t);
        }
        self
    }
}

struct Checker<'a> {
    comp: &'a Composite<'a>,
    linked: &'a ResolvedModule,
    lts: &'a Lts<CompositeState>,
}

fn with_side(cs: &CompositeState, i: usize, st: SlsState) -> CompositeState {
    let mut out = cs.clone();
    if i == 0 { out.left = st } else { out.right = st }
    out
}

fn mismatch(what: &str, src: &CompositeState, got: &dyn fmt::Display, want: &dyn fmt::Display) -> String {
    format!("{what}\n  from {src}\n  linked: {got}\n  composite: {want}")
}

impl Checker<'_> {
    /// The edge target in the names of the edge source.
    fn raw_target(&self, e: &Edge) -> CompositeState {
        self.lts.nodes[e.to].state.permute(&e.renaming.inverse())
    }

    fn node(&self, n: usize) -> Tally {
        let mut t = Tally::default();
        let cs = &self.lts.nodes[n].state;
        for (c, r) in check_state_lemma(cs) {
            t.lemma(c, r);
        }
        if cs.is_halted() {
            return t;
        }
        let r_src = match translate_r(cs) {
            Ok(r) => {
                t.item(PropItem::Translation, Ok(()));
                r
            }
            Err(e) => {
                t.item(PropItem::Translation, Err(format!("{e} at {cs}")));
                return t;
            }
        };
        let k_internal = internal_conts(cs);
        let edges: Vec<&Edge> = self.lts.out_edges(n).collect();
        let has_silent = edges.iter().any(|e| e.label.is_none());
        for e in &edges {
            let tgt = self.raw_target(e);
            let r_tgt = match translate_r(&tgt) {
                Ok(r) => r,
                Err(err) => {
                    t.item(PropItem::Translation, Err(format!("{err} at {tgt}")));
                    continue;
                }
            };
            match (&e.label, cs.program_side()) {
                (None, Some(i)) if tgt.side(i).is_program() || tgt.is_halted() => {
                    self.internal_run(&mut t, cs, i, &tgt, &k_internal);
                }
                (None, _) => t.item(
                    PropItem::SilentPreserves,
                    ensure(r_src == r_tgt, || mismatch("silent step changes the translation", cs, &r_src, &r_tgt)),
                ),
                (Some(label), program) => {
                    let outcome = self.linked_label(&r_src, label, &k_internal);
                    t.item(
                        PropItem::LabelCommutes,
                        match outcome {
                            Ok((l, y)) => ensure(&l == label && y == r_tgt, || {
                                mismatch(&format!("label {label}"), cs, &format!("{l} → {y}"), &r_tgt)
                            }),
                            Err(msg) => Err(mismatch(&format!("label {label}"), cs, &msg, &r_tgt)),
                        },
                    );
                    if let Some(i) = program {
                        t.lemma(LemmaClause::StoresAgreeAfterProgram, check_after_program(i, &tgt));
                    }
                }
            }
        }
        if !has_silent {
            self.reflected(&mut t, cs, &r_src, &edges, &k_internal);
        }
        t
    }

    /// The linked module's transition with `label` from `r`.
    fn linked_label(&self, r: &SlsState, label: &Label, k_internal: &NameSet) -> Result<(Label, SlsState), String> {
        match r {
            SlsState::System(sc) => {
                let p = apply_system_move(sc, &SystemMove::from_label(label), self.linked).map_err(|e| e.to_string())?;
                Ok((label.clone(), SlsState::Program(p)))
            }
            SlsState::Program(c) => self.linked_speaks(c, k_internal),
            SlsState::Halted(h) => Err(format!("linked module halted: {h}")),
        }
    }

    /// The label the linked module emits from a program configuration that
    /// stands at a boundary.
    fn linked_speaks(&self, c: &ProgramConfig, k_internal: &NameSet) -> Result<(Label, SlsState), String> {
        let run = run_to_boundary(c, self.linked, self.comp.budget.fuel, k_internal);
        if run.steps > 0 {
            return Err(format!("linked module takes {} internal steps first", run.steps));
        }
        let r = run.result.ok_or("linked module diverges")?;
        let (l, sc) = emit_boundary(c, &r, k_internal).ok_or_else(|| format!("linked module does not speak: {r:?}"))?;
        Ok((l, SlsState::System(sc)))
    }

    /// Replays the collapsed internal run step by step against the linked
    /// module.
    fn internal_run(&self, t: &mut Tally, cs: &CompositeState, i: usize, tgt: &CompositeState, k_internal: &NameSet) {
        let SlsState::Program(c) = cs.side(i) else { unreachable!() };
        let avoid = cs.side(1 - i).used();
        let mut configs: Vec<ProgramConfig> = vec![c.clone()];
        let run = run_traced(c, self.comp.modules[i], self.comp.budget.fuel, &avoid, &mut |x| configs.push(x.clone()));
        let mut result = Ok(());
        for w in configs.windows(2) {
            let before = translate_r(&with_side(cs, i, SlsState::Program(w[0].clone())));
            let after = translate_r(&with_side(cs, i, SlsState::Program(w[1].clone())));
            let (Ok(SlsState::Program(rb)), Ok(ra)) = (before, after) else {
                result = Err(format!("untranslatable internal step from {cs}"));
                break;
            };
            match step(&rb, self.linked, k_internal) {
                StepResult::Internal(next) if SlsState::Program(next.clone()) == ra => {}
                other => {
                    result = Err(mismatch("internal step", cs, &format!("{other:?}"), &ra));
                    break;
                }
            }
        }
        if result.is_ok() {
            if let (Some(StepResult::Crash(cr)), Ok(SlsState::Program(rl))) =
                (&run.result, translate_r(&with_side(cs, i, SlsState::Program(run.config.clone()))))
            {
                let linked = step(&rl, self.linked, k_internal);
                result = ensure(linked == StepResult::Crash(cr.clone()), || {
                    mismatch("crash", cs, &format!("{linked:?}"), &format!("{cr}"))
                });
            }
        }
        let expected = match &run.result {
            None => tgt.side(i).clone(),
            Some(StepResult::Crash(_)) => tgt.side(i).clone(),
            _ => SlsState::Program(run.config.clone()),
        };
        if result.is_ok() && &expected != tgt.side(i) {
            result = Err(format!("collapsed run does not reach its target from {cs}"));
        }
        t.item(PropItem::InternalCommutes, result);
    }

    /// Without silent steps, the composite matches what the linked module
    /// can do from the translation.
    fn reflected(&self, t: &mut Tally, cs: &CompositeState, r_src: &SlsState, edges: &[&Edge], k_internal: &NameSet) {
        let matches = |label: &Label, y: &SlsState| {
            edges.iter().any(|e| {
                e.label.as_ref() == Some(label) && translate_r(&self.raw_target(e)).is_ok_and(|r| &r == y)
            })
        };
        match r_src {
            SlsState::Program(c) => {
                let internal = matches!(step(c, self.linked, k_internal), StepResult::Internal(_));
                t.item(PropItem::InternalReflected, ensure(!internal, || format!("linked module steps internally from R({cs})")));
                if let Ok((l, y)) = self.linked_speaks(c, k_internal) {
                    if l.support().is_disjoint(k_internal) {
                        t.item(PropItem::LabelReflected, ensure(matches(&l, &y), || mismatch("unmatched label", cs, &l, &"none")));
                    }
                }
            }
            SlsState::System(sc) => {
                for mv in enumerate_system_moves(sc, self.linked, &self.comp.budget) {
                    if !mv.support().is_disjoint(k_internal) {
                        continue;
                    }
                    let Ok(p) = apply_system_move(sc, &mv, self.linked) else { continue };
                    let l = mv.label();
                    t.item(
                        PropItem::LabelReflected,
                        ensure(matches(&l, &SlsState::Program(p)), || mismatch("unmatched move", cs, &l, &"none")),
                    );
                }
            }
            SlsState::Halted(_) => {}
        }
    }
}

/// Explores the composite, checks every reachable state and edge, and
/// compares the composite LTS with the linked module.
pub fn check_composition(comp: &Composite) -> Result<CompositionReport, ComposeError> {
    let linked = link(comp.modules[0], comp.modules[1])?;
    let lts = comp.explore();
    let checker = Checker { comp, linked: &linked, lts: &lts };
    let tally = (0..lts.nodes.len())
        .into_par_iter()
        .filter(|&n| lts.nodes[n].expanded)
        .map(|n| checker.node(n))
        .reduce(Tally::default, Tally::merge);
    let mut lemma = tally.lemma;
    for c in LemmaClause::ALL {
        lemma.entry(c).or_default();
    }
    let mut items = tally.items;
    for i in PropItem::ALL {
        items.entry(i).or_default();
    }
    let linked_lts = explore(&linked, &comp.budget);
    let bisim = weak_bisimilar(&lts, &|cs: &CompositeState| cs.shared.clone(), &linked_lts, &|s: &SlsState| s.public(), comp.budget.depth)
        .expect("composite and linked module share their interface");
    Ok(CompositionReport { states: lts.nodes.len(), edges: lts.edges.len(), truncated: lts.truncated, lemma, items, bisim })
}
