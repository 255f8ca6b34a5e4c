//! Interactive play against a module: the caller acts as the system one
//! move at a time, over a history tree that can be branched at any node.

pub mod http;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::lang::{load_module, LangError, ResolvedModule};
use crate::nominal::{Name, NameSet};
use crate::sls::{
    apply_system_move, enumerate_system_moves, initial_config, program_turn, replay, Label, MoveBudget, MoveError,
    SlsState, SystemMove,
};
use crate::wire::{label_to_json, move_from_json, move_to_json, parse_script, store_to_json, WireError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Source(#[from] LangError),
    #[error(transparent)]
    Move(#[from] MoveError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("node {0} is a sink; the program has stopped and no move can follow")]
    NotSystemTurn(usize),
    #[error("no node {0} in the history")]
    UnknownNode(usize),
    #[error("no session {0}")]
    UnknownSession(String),
    #[error("snapshot has no source line")]
    MissingSource,
}

#[derive(Clone, Debug)]
pub struct HistoryNode {
    pub parent: Option<usize>,
    /// The move leading here from the parent.
    pub mv: Option<SystemMove>,
    /// The S→P label of `mv` and, unless the program stopped, its answer.
    pub labels: Vec<Label>,
    /// A system configuration or a halted program.
    pub state: SlsState,
    /// Names the system knows at this node.
    pub public: NameSet,
    pub children: Vec<usize>,
}

impl HistoryNode {
    pub fn is_sink(&self) -> bool {
        !self.state.is_system()
    }
}

#[derive(Clone, Debug)]
pub struct Session {
    pub source: String,
    pub module: ResolvedModule,
    pub budget: MoveBudget,
    pub nodes: Vec<HistoryNode>,
    pub cursor: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeCheck {
    pub node: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub nodes: Vec<NodeCheck>,
}

impl Session {
    pub fn new(source: &str) -> Result<Session, SessionError> {
        Session::with_budget(source, MoveBudget::default())
    }

    pub fn with_budget(source: &str, budget: MoveBudget) -> Result<Session, SessionError> {
        let module = load_module(source)?;
        let init = initial_config(&module);
        let root = HistoryNode {
            parent: None,
            mv: None,
            labels: Vec::new(),
            public: init.public.clone(),
            state: SlsState::System(init),
            children: Vec::new(),
        };
        Ok(Session { source: source.to_string(), module, budget, nodes: vec![root], cursor: 0 })
    }

    pub fn current(&self) -> &HistoryNode {
        &self.nodes[self.cursor]
    }

    /// Suggested moves at the cursor; empty at a sink.
    pub fn menu(&self) -> Vec<SystemMove> {
        match &self.current().state {
            SlsState::System(sc) => enumerate_system_moves(sc, &self.module, &self.budget),
            _ => Vec::new(),
        }
    }

    /// Plays `mv` at the cursor and moves the cursor to the result. Any move
    /// the S→P rules accept is allowed, whether or not the menu lists it.
    pub fn apply(&mut self, mv: &SystemMove) -> Result<usize, SessionError> {
        let here = self.cursor;
        let SlsState::System(sc) = &self.nodes[here].state else {
            return Err(SessionError::NotSystemTurn(here));
        };
        if let Some(&child) = self.nodes[here].children.iter().find(|&&c| self.nodes[c].mv.as_ref() == Some(mv)) {
            self.cursor = child;
            return Ok(child);
        }
        let prog = apply_system_move(sc, mv, &self.module)?;
        let turn = program_turn(&prog, &self.module, self.budget.fuel, &NameSet::new());
        let mut labels = vec![mv.label()];
        let public = match &turn.outcome {
            Ok((l, next)) => {
                labels.push(l.clone());
                next.public.clone()
            }
            Err(_) => prog.public.clone(),
        };
        let id = self.nodes.len();
        self.nodes.push(HistoryNode {
            parent: Some(here),
            mv: Some(mv.clone()),
            labels,
            state: turn.next_state(),
            public,
            children: Vec::new(),
        });
        self.nodes[here].children.push(id);
        self.cursor = id;
        Ok(id)
    }

    pub fn navigate(&mut self, node: usize) -> Result<(), SessionError> {
        if node >= self.nodes.len() {
            return Err(SessionError::UnknownNode(node));
        }
        self.cursor = node;
        Ok(())
    }

    /// Moves from the root to `node`.
    pub fn move_path(&self, node: usize) -> Vec<SystemMove> {
        let mut out = Vec::new();
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[cur].mv.clone().expect("non-root node has a move"));
            cur = p;
        }
        out.reverse();
        out
    }

    /// Replays every node's move path from scratch and compares labels and
    /// the resulting state.
    pub fn verify(&self) -> VerifyReport {
        let nodes: Vec<NodeCheck> = (0..self.nodes.len())
            .map(|i| {
                let problem = self.verify_node(i).err();
                NodeCheck { node: i, ok: problem.is_none(), problem }
            })
            .collect();
        VerifyReport { ok: nodes.iter().all(|c| c.ok), nodes }
    }

    fn verify_node(&self, i: usize) -> Result<(), String> {
        let trace = replay(&self.module, &self.move_path(i), self.budget.fuel).map_err(|e| e.to_string())?;
        let n = &self.nodes[i];
        let tail = &trace.labels[trace.labels.len() - n.labels.len()..];
        if tail != n.labels.as_slice() {
            return Err("labels differ on replay".into());
        }
        let last = trace.last_state().cloned().unwrap_or_else(|| SlsState::System(initial_config(&self.module)));
        if last != n.state {
            return Err("state differs on replay".into());
        }
        Ok(())
    }

    /// The move log from the root to the cursor, one JSON move per line.
    pub fn export(&self) -> String {
        crate::wire::format_script(&self.move_path(self.cursor))
    }

    /// Source and move log in one file: the first line holds the source.
    pub fn snapshot(&self) -> String {
        format!("{}\n{}", json!({ "source": self.source }), self.export())
    }

    pub fn restore(text: &str) -> Result<Session, SessionError> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let head: Json = serde_json::from_str(first).map_err(|_| SessionError::MissingSource)?;
        let source = head.get("source").and_then(Json::as_str).ok_or(SessionError::MissingSource)?;
        let mut s = Session::new(source)?;
        for mv in parse_script(rest)? {
            s.apply(&mv)?;
        }
        Ok(s)
    }

    /// The JSON view at the cursor. It mentions only names the system has
    /// been shown.
    pub fn view(&self) -> Json {
        let node = self.current();
        let (turn, halt, visible, conts) = match &node.state {
            SlsState::System(sc) => {
                let conts: Vec<Json> = node
                    .public
                    .continuations()
                    .iter()
                    .map(|k| {
                        // continuations the program handed out are stored;
                        // the rest were issued by the system
                        let polarity = if sc.store.cont(*k).is_some() { "program" } else { "system" };
                        json!({ "k": k.to_string(), "polarity": polarity })
                    })
                    .collect();
                ("system", Json::Null, store_to_json(&sc.visible_store()), conts)
            }
            SlsState::Halted(h) => ("halted", json!(h.to_string()), json!({}), Vec::new()),
            SlsState::Program(_) => unreachable!("history nodes are never mid-run"),
        };
        let disclosures = match node.parent {
            Some(p) => node.public.difference(&self.nodes[p].public),
            None => NameSet::new(),
        };
        json!({
            "node": self.cursor,
            "turn": turn,
            "halt": halt,
            "publicNames": names_json(&node.public),
            "visibleStore": visible,
            "storedContinuations": conts,
            "lastLabels": node.labels.iter().map(label_to_json).collect::<Vec<_>>(),
            "menu": self.menu().iter().map(move_to_json).collect::<Vec<_>>(),
            "historyTree": self.history_json(),
            "disclosures": names_json(&disclosures),
        })
    }

    fn history_json(&self) -> Json {
        let nodes: Vec<Json> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                json!({
                    "id": i,
                    "parent": n.parent,
                    "move": n.mv.as_ref().map(move_to_json),
                    "labels": n.labels.iter().map(label_to_json).collect::<Vec<_>>(),
                    "sink": n.is_sink(),
                    "children": n.children,
                })
            })
            .collect();
        json!({ "root": 0, "cursor": self.cursor, "nodes": nodes })
    }
}

fn names_json(s: &NameSet) -> Json {
    Json::Array(s.iter().map(|n: &Name| json!(n.to_string())).collect())
}

/// Parses a move from its JSON form.
pub fn parse_move(j: &Json) -> Result<SystemMove, SessionError> {
    Ok(move_from_json(j)?)
}

/// In-memory sessions. Each session has its own lock, so one writer per
/// session and any number of readers.
#[derive(Default)]
pub struct Sessions {
    map: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    next: AtomicU64,
}

impl Sessions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, s: Session) -> String {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        let id = format!("s{n:x}");
        self.map.write().expect("session map").insert(id.clone(), Arc::new(RwLock::new(s)));
        id
    }

    pub fn get(&self, id: &str) -> Result<Arc<RwLock<Session>>, SessionError> {
        self.map.read().expect("session map").get(id).cloned().ok_or_else(|| SessionError::UnknownSession(id.into()))
    }
}

#[cfg(test)]
mod tests;
