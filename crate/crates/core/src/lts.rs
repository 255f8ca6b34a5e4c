//! Finite, depth-bounded labelled transition systems over canonical states.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use crate::canon::{canonicalize, Canonicalize};
use crate::lang::ResolvedModule;
use crate::nominal::{NameSet, Nominal, Permutation};
use crate::sls::{
    apply_system_move, enumerate_system_moves, initial_config, program_turn, Label, MoveBudget, SlsState,
    SystemMove,
};

#[derive(Clone, Debug)]
pub struct Node<S> {
    pub state: S,
    /// Number of labels on the shortest path from the initial state.
    pub depth: usize,
    /// τ-edges since the last label on that path.
    pub tau_run: usize,
    pub out: Vec<usize>,
    pub expanded: bool,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// `None` for a silent step.
    pub label: Option<Label>,
    /// The system move behind an S→P label.
    pub mv: Option<SystemMove>,
    /// Sends the raw successor to the canonical target state.
    pub renaming: Permutation,
}

#[derive(Clone, Debug)]
pub struct Lts<S> {
    pub nodes: Vec<Node<S>>,
    pub edges: Vec<Edge>,
    pub initial: usize,
    /// Set when exploration stopped at a node or τ-run limit.
    pub truncated: bool,
}

/// A raw successor produced by a transition function.
pub struct Succ<S> {
    pub label: Option<Label>,
    pub mv: Option<SystemMove>,
    pub target: S,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreLimits {
    pub depth: usize,
    pub max_tau_run: usize,
    pub max_nodes: usize,
}

impl<S> Lts<S> {
    /// The same graph with every state replaced by `f(state)`.
    pub fn map_states<T>(&self, f: impl Fn(&S) -> T) -> Lts<T> {
        Lts {
            nodes: self
                .nodes
                .iter()
                .map(|n| Node { state: f(&n.state), depth: n.depth, tau_run: n.tau_run, out: n.out.clone(), expanded: n.expanded })
                .collect(),
            edges: self.edges.clone(),
            initial: self.initial,
            truncated: self.truncated,
        }
    }

    pub fn out_edges(&self, n: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.nodes[n].out.iter().map(move |e| &self.edges[*e])
    }

    pub fn labelled_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(|e| e.label.is_some())
    }

    /// Edge indices from the initial state to `n` along a shortest path.
    pub fn path_to(&self, n: usize) -> Vec<usize> {
        Self::walk_back(&self.bfs_parents(Some(n)), &self.edges, n)
    }

    /// `path_to` for every node, from one breadth-first search.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let parent = self.bfs_parents(None);
        (0..self.nodes.len()).map(|n| Self::walk_back(&parent, &self.edges, n)).collect()
    }

    fn bfs_parents(&self, stop_at: Option<usize>) -> Vec<Option<usize>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = std::collections::VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(x) = queue.pop_front() {
            if Some(x) == stop_at {
                break;
            }
            for &e in &self.nodes[x].out {
                let t = self.edges[e].to;
                if !seen[t] {
                    seen[t] = true;
                    parent[t] = Some(e);
                    queue.push_back(t);
                }
            }
        }
        parent
    }

    fn walk_back(parent: &[Option<usize>], edges: &[Edge], n: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = n;
        while let Some(e) = parent[cur] {
            path.push(e);
            cur = edges[e].from;
        }
        path.reverse();
        path
    }

    /// Labels along a path of edges, renamed into the namespace of the
    /// initial state (the raw names an actual run would produce).
    pub fn raw_labels(&self, path: &[usize]) -> Vec<Option<Label>> {
        let mut to_raw = Permutation::identity();
        let mut out = Vec::with_capacity(path.len());
        for &e in path {
            let edge = &self.edges[e];
            out.push(edge.label.as_ref().map(|l| l.permute(&to_raw)));
            to_raw = to_raw.compose(&edge.renaming.inverse());
        }
        out
    }

    /// The system moves along a path, in raw names.
    pub fn raw_script(&self, path: &[usize]) -> Vec<SystemMove> {
        let mut to_raw = Permutation::identity();
        let mut out = Vec::new();
        for &e in path {
            let edge = &self.edges[e];
            if let Some(mv) = &edge.mv {
                out.push(mv.permute(&to_raw));
            }
            to_raw = to_raw.compose(&edge.renaming.inverse());
        }
        out
    }
}

/// Breadth-first exploration from `init`, identifying states equal up to
/// renaming of names outside `pinned(state)`.
pub fn explore_with<S, P, F>(init: S, limits: ExploreLimits, pinned: P, succ: F) -> Lts<S>
where
    S: Canonicalize + Clone + Eq + Hash + Send + Sync,
    P: Fn(&S) -> NameSet + Sync,
    F: Fn(&S) -> Vec<Succ<S>> + Sync,
{
    let first = canonicalize(&init, &pinned(&init));
    let mut lts = Lts {
        nodes: vec![Node { state: first.value.clone(), depth: 0, tau_run: 0, out: Vec::new(), expanded: false }],
        edges: Vec::new(),
        initial: 0,
        truncated: false,
    };
    let mut index: HashMap<S, usize> = HashMap::from([(first.value, 0)]);
    // Silent successors are expanded at the current depth before any node
    // one label further away, so every node gets its least depth.
    let mut frontier = vec![0usize];
    let mut deeper = Vec::new();
    while !frontier.is_empty() {
        let work: Vec<(usize, Vec<(Option<Label>, Option<SystemMove>, S, Permutation)>)> = frontier
            .par_iter()
            .map(|&n| {
                let st = &lts.nodes[n].state;
                let list = succ(st)
                    .into_iter()
                    .map(|s| {
                        let c = canonicalize(&s.target, &pinned(&s.target));
                        (s.label, s.mv, c.value, c.witness)
                    })
                    .collect();
                (n, list)
            })
            .collect();
        let mut same = Vec::new();
        for (n, list) in work {
            lts.nodes[n].expanded = true;
            let (depth, tau_run) = (lts.nodes[n].depth, lts.nodes[n].tau_run);
            for (label, mv, target, renaming) in list {
                let silent = label.is_none();
                let (d, t) = if silent { (depth, tau_run + 1) } else { (depth + 1, 0) };
                let to = match index.get(&target) {
                    Some(&i) => {
                        let node = &mut lts.nodes[i];
                        if d < node.depth && !node.expanded {
                            node.depth = d;
                            node.tau_run = t;
                            deeper.retain(|&x| x != i);
                            if t <= limits.max_tau_run && d < limits.depth {
                                same.push(i);
                            }
                        }
                        i
                    }
                    None => {
                        if lts.nodes.len() >= limits.max_nodes {
                            lts.truncated = true;
                            continue;
                        }
                        let i = lts.nodes.len();
                        lts.nodes.push(Node { state: target.clone(), depth: d, tau_run: t, out: Vec::new(), expanded: false });
                        index.insert(target, i);
                        if t > limits.max_tau_run {
                            lts.truncated = true;
                        } else if d < limits.depth {
                            if silent { same.push(i) } else { deeper.push(i) }
                        }
                        i
                    }
                };
                let e = lts.edges.len();
                lts.edges.push(Edge { from: n, to, label, mv, renaming });
                lts.nodes[n].out.push(e);
            }
        }
        frontier = if same.is_empty() { std::mem::take(&mut deeper) } else { same };
    }
    lts
}

/// Names kept fixed when canonicalizing states of `m`.
pub fn module_pinned(m: &ResolvedModule, st: &SlsState) -> NameSet {
    st.public().union(&m.static_names())
}

/// Successors of a single-module state: system moves lead to the program
/// stopped at its next boundary; a program at a boundary emits its label.
pub fn sls_successors(m: &ResolvedModule, b: &MoveBudget, st: &SlsState) -> Vec<Succ<SlsState>> {
    let none = NameSet::new();
    match st {
        SlsState::System(sc) => enumerate_system_moves(sc, m, b)
            .into_iter()
            .filter_map(|mv| {
                let prog = apply_system_move(sc, &mv, m).ok()?;
                let turn = program_turn(&prog, m, b.fuel, &none);
                let target = match turn.outcome {
                    Ok(_) => SlsState::Program(turn.at_boundary),
                    Err(h) => SlsState::Halted(h),
                };
                Some(Succ { label: Some(mv.label()), mv: Some(mv), target })
            })
            .collect(),
        SlsState::Program(c) => match program_turn(c, m, b.fuel, &none).outcome {
            Ok((label, sc)) => vec![Succ { label: Some(label), mv: None, target: SlsState::System(sc) }],
            Err(_) => Vec::new(),
        },
        SlsState::Halted(_) => Vec::new(),
    }
}

/// The LTS of a module, explored to `b.depth` labels.
pub fn explore(m: &ResolvedModule, b: &MoveBudget) -> Lts<SlsState> {
    let limits = ExploreLimits { depth: b.depth, max_tau_run: 0, max_nodes: usize::MAX };
    explore_with(
        SlsState::System(initial_config(m)),
        limits,
        |st| module_pinned(m, st),
        |st| sls_successors(m, b, st),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load_module;
    use crate::syntax::Value;

    #[test]
    fn constant_function_lts() {
        let m = load_module("export f; decl f() { return 7; }").unwrap();
        let b = MoveBudget { ints: vec![0], fresh_locs: 0, width: 1, depth: 2, fuel: 100 };
        let lts = explore(&m, &b);
        // Moves: call f with (), 0 or f. Only () avoids an arity crash.
        let first: Vec<_> = lts.out_edges(lts.initial).collect();
        assert_eq!(first.len(), 3);
        let live: Vec<_> = first.iter().filter(|e| lts.nodes[e.to].state.is_program()).collect();
        assert_eq!(live.len(), 1);
        let ret: Vec<_> = lts.out_edges(live[0].to).collect();
        assert_eq!(ret.len(), 1);
        let l = ret[0].label.as_ref().unwrap();
        assert_eq!(l.action, crate::sls::Action::Ret { value: Value::Int(7), k: crate::nominal::Name::cont(0) });
    }

    #[test]
    fn empty_module_has_single_state() {
        let m = load_module("").unwrap();
        let lts = explore(&m, &MoveBudget::default());
        assert_eq!(lts.nodes.len(), 1);
        assert!(lts.edges.is_empty());
    }

    #[test]
    fn raw_script_replays_every_edge() {
        let m = load_module(
            "export prot; import read;
             decl prot() { local s, k, x; s = new(); k = new(); x = read(); if (*x == *k) then *s else *k }",
        )
        .unwrap();
        let b = MoveBudget { ints: vec![0], fresh_locs: 1, width: 1, depth: 4, fuel: 1000 };
        let lts = explore(&m, &b);
        for (i, node) in lts.nodes.iter().enumerate() {
            if node.depth == 0 {
                continue;
            }
            let path = lts.path_to(i);
            let script = lts.raw_script(&path);
            let trace = crate::sls::replay(&m, &script, b.fuel).expect("script replays");
            let expected: Vec<Label> = lts.raw_labels(&path).into_iter().flatten().collect();
            assert_eq!(trace.labels[..expected.len()], expected[..]);
        }
    }
}
