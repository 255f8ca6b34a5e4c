//! Bounded bisimulation up to renaming of private names.
//!
//! States are compared along the internally-collapsed LTS: internal steps
//! are absorbed and only labels are matched. Labels match when they are
//! equal after renaming through the current correspondence `ρ` between the
//! public names of the two sides, extended by a bijection on the names the
//! labels introduce.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::canon::{canonicalize, CanonicalForm};
use crate::lang::{syntactic_compose, LangError, ResolvedModule, Resolver, SourceModule};
use crate::lts::{explore, Lts};
use crate::nominal::{fresh_avoiding, Name, NameSet, Nominal, Permutation};
use crate::sls::{
    apply_system_move, initial_config, program_turn, Label, MoveBudget, SlsState, SystemMove,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// A bounded distinguishing run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// The side whose last label has no match.
    pub side: Side,
    /// Labels of the left run, in raw names.
    pub left: Vec<Label>,
    /// Labels of the right run, in raw names; one shorter than the
    /// distinguishing side when the final label is unmatched.
    pub right: Vec<Label>,
    /// System moves that drive `side` along its run, in raw names.
    pub script: Vec<SystemMove>,
}

impl Witness {
    pub fn labels(&self, side: Side) -> &[Label] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    BisimilarUpTo(usize),
    Distinguished(Witness),
}

impl Verdict {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self, Verdict::BisimilarUpTo(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Distinguished(w) => Some(w),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::BisimilarUpTo(d) => write!(f, "bisimilar up to depth {d}"),
            Verdict::Distinguished(w) => {
                writeln!(f, "distinguished after {} label(s); unmatched move on the {} side", w.labels(w.side).len(), w.side)?;
                for (side, labels) in [(Side::Left, &w.left), (Side::Right, &w.right)] {
                    writeln!(f, "{side}:")?;
                    for l in labels {
                        writeln!(f, "  {l}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("public interfaces differ: {left} vs {right}")]
    PublicInterfaceMismatch { left: NameSet, right: NameSet },
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// Correspondence between public names of the two sides.
pub type Rho = BTreeMap<Name, Name>;

fn rho_permutation(rho: &Rho) -> Permutation {
    Permutation::from_injection(rho.iter().map(|(a, b)| (*a, *b))).expect("ρ is a sort-preserving bijection")
}

/// Matches `l1` (left names) against `l2` (right names) under `rho`, which
/// must cover the left public names; `public2` are the right public names.
/// Returns `rho` extended with the names the labels introduce.
pub fn match_labels(l1: &Label, l2: &Label, rho: &Rho, public2: &NameSet) -> Option<Rho> {
    let c1 = canonicalize(&l1.permute(&rho_permutation(rho)), public2);
    let c2 = canonicalize(l2, public2);
    (c1.value == c2.value).then(|| extend_rho(l1, rho, &c1, &c2))
}

fn extend_rho(l1: &Label, rho: &Rho, c1: &CanonicalForm<Label>, c2: &CanonicalForm<Label>) -> Rho {
    let back = c2.witness.inverse();
    let to_moved = rho_permutation(rho);
    let mut out = rho.clone();
    l1.visit_names(&mut |n| {
        if !rho.contains_key(&n) {
            out.insert(n, back.apply(c1.witness.apply(to_moved.apply(n))));
        }
    });
    out
}

/// `(label, target, edges)` reachable by τ* followed by one label.
type WeakSucc = (Label, usize, Vec<usize>);

fn weak_successors<S>(lts: &Lts<S>, x: usize) -> Vec<WeakSucc> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(x, Vec::new())];
    let mut seen = vec![x];
    while let Some((n, path)) = stack.pop() {
        for &e in &lts.nodes[n].out {
            let edge = &lts.edges[e];
            let mut p = path.clone();
            p.push(e);
            match &edge.label {
                Some(l) => out.push((l.clone(), edge.to, p)),
                None => {
                    if !seen.contains(&edge.to) {
                        seen.push(edge.to);
                        stack.push((edge.to, p));
                    }
                }
            }
        }
    }
    out
}

/// Weak successors of a node with their labels in canonical form, indexed
/// by that form.
struct Succs {
    list: Vec<WeakSucc>,
    canon: Vec<CanonicalForm<Label>>,
    index: HashMap<Label, Vec<usize>>,
    public: NameSet,
}

#[derive(Clone)]
struct Failure {
    side: Side,
    left: Vec<usize>,
    right: Vec<usize>,
}

type MemoKey = (usize, usize, Vec<(Name, Name)>, usize);

/// Both graphs with every state reduced to its public names.
struct Checker<'a> {
    lts: [&'a Lts<NameSet>; 2],
    succs: [HashMap<usize, Arc<Succs>>; 2],
    memo: HashMap<MemoKey, Result<(), Failure>>,
}

impl Checker<'_> {
    fn succs(&mut self, side: usize, x: usize) -> Arc<Succs> {
        let lts = self.lts[side];
        self.succs[side]
            .entry(x)
            .or_insert_with(|| {
                let public = lts.nodes[x].state.clone();
                let list = weak_successors(lts, x);
                let canon: Vec<_> = list.iter().map(|(l, _, _)| canonicalize(l, &public)).collect();
                let mut index: HashMap<Label, Vec<usize>> = HashMap::new();
                for (i, c) in canon.iter().enumerate() {
                    index.entry(c.value.clone()).or_default().push(i);
                }
                Arc::new(Succs { list, canon, index, public })
            })
            .clone()
    }

    /// One simulation step: every weak move of `x` on `side` is matched by
    /// a weak move of `y` on the other side.
    fn simulate(&mut self, side: usize, x: usize, y: usize, rho: &Rho, r: usize) -> Result<(), Failure> {
        let other = 1 - side;
        let xs = self.succs(side, x);
        let ys = self.succs(other, y);
        let to_y = rho_permutation(rho);
        for (l1, x2, p1) in xs.list.iter() {
            let c1 = canonicalize(&l1.permute(&to_y), &ys.public);
            let mut last: Option<Failure> = None;
            let mut matched = false;
            for &j in ys.index.get(&c1.value).map(Vec::as_slice).unwrap_or_default() {
                let (_, y2, p2) = &ys.list[j];
                let rho2 = extend_rho(l1, rho, &c1, &ys.canon[j]);
                let res = if side == 0 {
                    self.check(*x2, *y2, &rho2, r - 1)
                } else {
                    self.check(*y2, *x2, &invert(&rho2), r - 1)
                };
                match res {
                    Ok(()) => {
                        matched = true;
                        break;
                    }
                    Err(mut f) => {
                        let (pl, pr) = if side == 0 { (p1, p2) } else { (p2, p1) };
                        f.left.splice(0..0, pl.iter().copied());
                        f.right.splice(0..0, pr.iter().copied());
                        last = Some(f);
                    }
                }
            }
            if !matched {
                return Err(last.unwrap_or_else(|| {
                    if side == 0 {
                        Failure { side: Side::Left, left: p1.clone(), right: Vec::new() }
                    } else {
                        Failure { side: Side::Right, left: Vec::new(), right: p1.clone() }
                    }
                }));
            }
        }
        Ok(())
    }

    fn check(&mut self, x: usize, y: usize, rho: &Rho, r: usize) -> Result<(), Failure> {
        if r == 0 {
            return Ok(());
        }
        let key = (x, y, rho.iter().map(|(a, b)| (*a, *b)).collect::<Vec<_>>(), r);
        if let Some(res) = self.memo.get(&key) {
            return res.clone();
        }
        let res = self.simulate(0, x, y, rho, r).and_then(|()| self.simulate(1, y, x, &invert(rho), r));
        self.memo.insert(key, res.clone());
        res
    }
}

fn invert(rho: &Rho) -> Rho {
    rho.iter().map(|(a, b)| (*b, *a)).collect()
}

/// Bounded bisimilarity of two explored LTSs whose initial states have the
/// same public names. Returns the shortest distinguishing run if any.
pub fn bisimilar_lts<S>(
    left: &Lts<S>,
    right: &Lts<S>,
    public: &dyn Fn(&S) -> NameSet,
    depth: usize,
) -> Result<Verdict, BisimError> {
    weak_bisimilar(left, public, right, public, depth)
}

/// Weak bisimilarity of LTSs over possibly different state types: silent
/// edges are absorbed before each label.
pub fn weak_bisimilar<A, B>(
    left: &Lts<A>,
    public_left: &dyn Fn(&A) -> NameSet,
    right: &Lts<B>,
    public_right: &dyn Fn(&B) -> NameSet,
    depth: usize,
) -> Result<Verdict, BisimError> {
    let l = left.map_states(public_left);
    let r = right.map_states(public_right);
    let p1 = l.nodes[l.initial].state.clone();
    let p2 = r.nodes[r.initial].state.clone();
    if p1 != p2 {
        return Err(BisimError::PublicInterfaceMismatch { left: p1, right: p2 });
    }
    let rho: Rho = p1.iter().map(|n| (*n, *n)).collect();
    let mut checker = Checker { lts: [&l, &r], succs: [HashMap::new(), HashMap::new()], memo: HashMap::new() };
    for d in 1..=depth {
        if let Err(f) = checker.check(l.initial, r.initial, &rho, d) {
            let script = if f.side == Side::Left { l.raw_script(&f.left) } else { r.raw_script(&f.right) };
            return Ok(Verdict::Distinguished(Witness {
                side: f.side,
                left: l.raw_labels(&f.left).into_iter().flatten().collect(),
                right: r.raw_labels(&f.right).into_iter().flatten().collect(),
                script,
            }));
        }
    }
    Ok(Verdict::BisimilarUpTo(depth))
}

/// Bounded bisimilarity of two modules resolved with a shared resolver.
pub fn bisimilar(m1: &ResolvedModule, m2: &ResolvedModule, b: &MoveBudget) -> Result<Verdict, BisimError> {
    if m1.interface() != m2.interface() {
        return Err(BisimError::PublicInterfaceMismatch { left: m1.interface(), right: m2.interface() });
    }
    let (l1, l2) = rayon::join(|| explore(m1, b), || explore(m2, b));
    bisimilar_lts(&l1, &l2, &|s: &SlsState| s.public(), b.depth)
}

/// Result of running one script against two modules side by side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Differential {
    /// Both sides produced matching labels throughout.
    Same { left: Vec<Label>, right: Vec<Label> },
    /// The sides differ after `left`/`right` labels; `reason` says how.
    Differs { left: Vec<Label>, right: Vec<Label>, reason: String },
}

impl Differential {
    pub fn differs(&self) -> bool {
        matches!(self, Differential::Differs { .. })
    }
}

/// Translates a move of one side into the names of the other: known names
/// through `rho`, new names to names fresh on the other side.
fn translate_move(mv: &SystemMove, rho: &Rho, used_other: &NameSet) -> SystemMove {
    let mut map = rho.clone();
    let mut taken = used_other.clone();
    taken.extend(rho.values().copied());
    mv.visit_names(&mut |n| {
        map.entry(n).or_insert_with(|| {
            let m = fresh_avoiding(n.sort, &taken, &NameSet::new());
            taken.insert(m);
            m
        });
    });
    mv.permute(&rho_permutation(&map))
}

/// Drives `script` (in the names of `side`) on both modules, translating
/// each system move to the other side, and compares what the programs do.
pub fn differential_replay(
    m1: &ResolvedModule,
    m2: &ResolvedModule,
    script: &[SystemMove],
    side: Side,
    fuel: usize,
) -> Differential {
    let (ma, mb) = if side == Side::Left { (m1, m2) } else { (m2, m1) };
    let mut sa = initial_config(ma);
    let mut sb = initial_config(mb);
    let mut rho: Rho = sa.public.iter().map(|n| (*n, *n)).collect();
    let mut la: Vec<Label> = Vec::new();
    let mut lb: Vec<Label> = Vec::new();
    let finish = |la: Vec<Label>, lb: Vec<Label>, reason: Option<String>| {
        let (left, right) = if side == Side::Left { (la, lb) } else { (lb, la) };
        match reason {
            None => Differential::Same { left, right },
            Some(reason) => Differential::Differs { left, right, reason },
        }
    };
    let none = NameSet::new();
    for mv in script {
        let pa = match apply_system_move(&sa, mv, ma) {
            Ok(p) => p,
            Err(_) => return finish(la, lb, None),
        };
        let mvb = translate_move(mv, &rho, &sb.used);
        la.push(mv.label());
        let pb = match apply_system_move(&sb, &mvb, mb) {
            Ok(p) => p,
            Err(e) => return finish(la, lb, Some(format!("move {mv} is rejected on the {} side: {e}", side.other()))),
        };
        lb.push(mvb.label());
        rho = match match_labels(&mv.label(), &mvb.label(), &rho, &sb.public) {
            Some(r) => r,
            None => return finish(la, lb, Some("translated move does not match".into())),
        };
        let ta = program_turn(&pa, ma, fuel, &none);
        let tb = program_turn(&pb, mb, fuel, &none);
        match (ta.outcome, tb.outcome) {
            (Ok((a, sa2)), Ok((b, sb2))) => {
                let public_b = sb2.public.clone();
                la.push(a.clone());
                lb.push(b.clone());
                match match_labels(&a, &b, &rho, &public_b) {
                    Some(r) => rho = r,
                    None => return finish(la, lb, Some("the programs answer with different labels".into())),
                }
                sa = sa2;
                sb = sb2;
            }
            (Err(_), Err(_)) => return finish(la, lb, None),
            (Ok((a, _)), Err(h)) => {
                la.push(a);
                return finish(la, lb, Some(format!("the {} side stops ({h})", side.other())));
            }
            (Err(h), Ok((b, _))) => {
                lb.push(b);
                return finish(la, lb, Some(format!("the {side} side stops ({h})")));
            }
        }
    }
    finish(la, lb, None)
}

/// Hypothesis and conclusion of the congruence property for one context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceReport {
    pub hypothesis: Verdict,
    /// `None` when the hypothesis failed and the conclusion was skipped.
    pub conclusion: Option<Verdict>,
}

impl CongruenceReport {
    /// Fails only when the hypothesis holds and the conclusion does not.
    pub fn holds(&self) -> bool {
        !self.hypothesis.is_bisimilar() || self.conclusion.as_ref().is_some_and(Verdict::is_bisimilar)
    }
}

/// Checks that composing two bisimilar modules with the same context gives
/// bisimilar modules.
pub fn check_congruence(
    m1: &SourceModule,
    m2: &SourceModule,
    ctx: &SourceModule,
    b: &MoveBudget,
) -> Result<CongruenceReport, BisimError> {
    let mut r = Resolver::new();
    let (a, c) = (r.resolve(m1)?, r.resolve(m2)?);
    let hypothesis = bisimilar(&a, &c, b)?;
    if !hypothesis.is_bisimilar() {
        return Ok(CongruenceReport { hypothesis, conclusion: None });
    }
    let mut r = Resolver::new();
    let a = r.resolve(&syntactic_compose(m1, ctx)?)?;
    let c = r.resolve(&syntactic_compose(m2, ctx)?)?;
    let conclusion = bisimilar(&a, &c, b)?;
    Ok(CongruenceReport { hypothesis, conclusion: Some(conclusion) })
}
