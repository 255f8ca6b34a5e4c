//! Driving a module with a script of system moves.

use std::fmt;

use thiserror::Error;

use super::{apply_system_move, initial_config, program_turn, Halt, Label, MoveError, SlsState, SystemMove};
use crate::lang::ResolvedModule;
use crate::nominal::NameSet;

/// The labels produced by a replay and the state after each of them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub labels: Vec<Label>,
    /// `states[i]` is the state reached by `labels[i]`.
    pub states: Vec<SlsState>,
}

impl Trace {
    pub fn last_state(&self) -> Option<&SlsState> {
        self.states.last()
    }

    pub fn halted(&self) -> Option<&Halt> {
        match self.states.last() {
            Some(SlsState::Halted(h)) => Some(h),
            _ => None,
        }
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            writeln!(f, "{l}")?;
        }
        if let Some(h) = self.halted() {
            writeln!(f, "{h}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReplayErrorKind {
    #[error("move {index} rejected: {error}")]
    Move { index: usize, error: MoveError },
    #[error("move {index} given while the program is not waiting for the system")]
    ScriptAtWrongTurn { index: usize },
}

/// A replay stopped by an invalid move, with the trace up to that point.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct ReplayError {
    pub kind: ReplayErrorKind,
    pub prefix: Trace,
}

/// Feeds `script` to the module from its initial configuration. Each move
/// is followed by the program's run up to its next label.
pub fn replay(m: &ResolvedModule, script: &[SystemMove], fuel: usize) -> Result<Trace, ReplayError> {
    let mut trace = Trace::default();
    let mut state = SlsState::System(initial_config(m));
    for (index, mv) in script.iter().enumerate() {
        let SlsState::System(sc) = &state else {
            return Err(ReplayError { kind: ReplayErrorKind::ScriptAtWrongTurn { index }, prefix: trace });
        };
        let prog = match apply_system_move(sc, mv, m) {
            Ok(p) => p,
            Err(error) => return Err(ReplayError { kind: ReplayErrorKind::Move { index, error }, prefix: trace }),
        };
        trace.labels.push(mv.label());
        trace.states.push(SlsState::Program(prog.clone()));
        let turn = program_turn(&prog, m, fuel, &NameSet::new());
        state = turn.next_state();
        match turn.outcome {
            Ok((label, _)) => {
                trace.labels.push(label);
                trace.states.push(state.clone());
            }
            Err(_) => {
                *trace.states.last_mut().expect("just pushed") = state.clone();
            }
        }
    }
    Ok(trace)
}
