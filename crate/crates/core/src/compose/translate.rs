//! From composite states to states of the linked module.

use thiserror::Error;

use super::CompositeState;
use crate::machine::ProgramConfig;
use crate::nominal::{Name, NameSet};
use crate::sls::{SlsState, SystemConfig};
use crate::store::{Store, Suspended};
use crate::syntax::FrameStack;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("internal continuation {k} has no stored frames")]
    BrokenContinuationChain { k: Name },
}

/// Continuation names passed between the two modules and never seen by the
/// outside system. They vanish in the linked module, where the
/// corresponding calls happen without the call-return mechanism.
pub fn internal_conts(cs: &CompositeState) -> NameSet {
    cs.left.public().intersection(&cs.right.public()).continuations().difference(&cs.sys_conts)
}

/// Follows stored frames back through internal continuations until an
/// external continuation is reached.
fn stitch(
    stores: [&Store; 2],
    k_internal: &NameSet,
    frames: &FrameStack,
    ret: Name,
) -> Result<(FrameStack, Name), TranslateError> {
    let mut frames = frames.clone();
    let mut k = ret;
    let mut seen = NameSet::new();
    while k_internal.contains(&k) {
        if !seen.insert(k) {
            return Err(TranslateError::BrokenContinuationChain { k });
        }
        let Some(susp) = stores.iter().find_map(|s| s.cont(k)) else {
            return Err(TranslateError::BrokenContinuationChain { k });
        };
        let mut outer = susp.frames.clone();
        outer.extend(frames);
        frames = outer;
        k = susp.ret;
    }
    Ok((frames, k))
}

/// `s` with every stored continuation extended to its external one.
fn stitched_store(s: &Store, stores: [&Store; 2], k_internal: &NameSet) -> Result<Store, TranslateError> {
    let mut out = s.clone();
    for (k, susp) in s.conts() {
        let (frames, ret) = stitch(stores, k_internal, &susp.frames, susp.ret)?;
        out.set_cont(*k, Suspended { frames, ret });
    }
    Ok(out)
}

/// The state of the linked module corresponding to a composite state.
pub fn translate_r(cs: &CompositeState) -> Result<SlsState, TranslateError> {
    for side in [&cs.left, &cs.right] {
        if let SlsState::Halted(h) = side {
            return Ok(SlsState::Halted(h.clone()));
        }
    }
    let k_internal = internal_conts(cs);
    let (s1, s2) = (cs.left.store().expect("live"), cs.right.store().expect("live"));
    let stores = [s1, s2];
    let hat1 = stitched_store(s1, stores, &k_internal)?;
    let hat2 = stitched_store(s2, stores, &k_internal)?;
    let used = cs.left.used().union(&cs.right.used()).difference(&k_internal);
    let public = cs.shared.clone();
    Ok(match (&cs.left, &cs.right) {
        (SlsState::System(_), SlsState::System(_)) => {
            let common = cs.aux.keep(&cs.left.public().intersection(&cs.right.public()));
            let store = hat1.update(&common).update(&hat2.update(&common)).drop_names(&k_internal);
            SlsState::System(SystemConfig { used, public, store })
        }
        (SlsState::Program(c), SlsState::System(_)) => translate_program(c, &hat2, &hat1, stores, &k_internal, used, public)?,
        (SlsState::System(_), SlsState::Program(c)) => translate_program(c, &hat1, &hat2, stores, &k_internal, used, public)?,
        _ => unreachable!("at most one side runs a program"),
    })
}

/// The program side holds the more recent values.
fn translate_program(
    c: &ProgramConfig,
    hat_system: &Store,
    hat_program: &Store,
    stores: [&Store; 2],
    k_internal: &NameSet,
    used: NameSet,
    public: NameSet,
) -> Result<SlsState, TranslateError> {
    let (frames, ret) = stitch(stores, k_internal, &c.frames, c.ret)?;
    Ok(SlsState::Program(ProgramConfig {
        used,
        public,
        store: hat_system.update(hat_program).drop_names(k_internal),
        frames,
        control: c.control.clone(),
        ret,
    }))
}
