use std::any::Any;
use std::sync::Arc;

use crate::scene::AgentState;

use super::PredictError;

/// Predictor-private payload carried along a branch.
pub type BranchCache = Arc<dyn Any + Send + Sync>;

/// Opaque branch handle. Derived from the branch contents, so identical
/// extension sequences produce identical ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchId(pub u64);

struct Frame {
    states: Vec<AgentState>,
    parent: Option<Arc<Frame>>,
}

impl Drop for Frame {
    // Unlink iteratively; the default recursive drop overflows on long branches.
    fn drop(&mut self) {
        let mut next = self.parent.take();
        while let Some(arc) = next {
            match Arc::try_unwrap(arc) {
                Ok(mut frame) => next = frame.parent.take(),
                Err(_) => break,
            }
        }
    }
}

/// Joint history of every agent from scenario start to the branch tip.
///
/// Frames are shared between a parent and all of its children, so extending a
/// branch costs one frame regardless of how long the history already is and
/// never touches the parent.
#[derive(Clone)]
pub struct BranchContext {
    id: BranchId,
    tip: Arc<Frame>,
    len: usize,
    cache: BranchCache,
}

impl std::fmt::Debug for BranchContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BranchContext")
            .field("id", &self.id)
            .field("len", &self.len)
            .field("agents", &self.tip.states.len())
            .finish()
    }
}

fn mix(mut h: u64, v: u64) -> u64 {
    // FNV-1a over the 8 bytes of v
    for b in v.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn frame_hash(seed: u64, states: &[AgentState]) -> u64 {
    states.iter().fold(seed, |h, s| {
        [s.x, s.y, s.vx, s.vy, s.heading]
            .iter()
            .fold(h, |h, v| mix(h, v.to_bits()))
    })
}

impl BranchContext {
    /// Builds a root context from time-ordered frames (each frame holds every
    /// agent, ego first).
    pub fn from_frames(frames: Vec<Vec<AgentState>>, cache: BranchCache) -> Self {
        assert!(!frames.is_empty(), "a branch needs at least one frame");
        let n = frames[0].len();
        let mut id = 0xcbf2_9ce4_8422_2325u64;
        let mut tip: Option<Arc<Frame>> = None;
        let len = frames.len();
        for states in frames {
            assert_eq!(states.len(), n, "every frame must hold all agents");
            id = frame_hash(id, &states);
            tip = Some(Arc::new(Frame { states, parent: tip }));
        }
        Self {
            id: BranchId(id),
            tip: tip.expect("non-empty"),
            len,
            cache,
        }
    }

    /// Child context one step longer. `self` is left untouched.
    pub fn child(&self, new_states: &[AgentState], cache: BranchCache) -> Result<Self, PredictError> {
        if new_states.len() != self.num_agents() {
            return Err(PredictError::AgentCountMismatch {
                expected: self.num_agents(),
                got: new_states.len(),
            });
        }
        Ok(Self {
            id: BranchId(frame_hash(mix(self.id.0, self.len as u64), new_states)),
            tip: Arc::new(Frame {
                states: new_states.to_vec(),
                parent: Some(self.tip.clone()),
            }),
            len: self.len + 1,
            cache,
        })
    }

    pub fn id(&self) -> BranchId {
        self.id
    }

    /// Number of frames in the history.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_agents(&self) -> usize {
        self.tip.states.len()
    }

    /// Latest joint state, ego first.
    pub fn tip(&self) -> &[AgentState] {
        &self.tip.states
    }

    /// Frames from the tip backwards.
    pub fn frames_back(&self) -> impl Iterator<Item = &[AgentState]> {
        let mut cur = Some(&self.tip);
        std::iter::from_fn(move || {
            let f = cur?;
            cur = f.parent.as_ref();
            Some(f.states.as_slice())
        })
    }

    /// Full history of one agent, oldest first. Walks the whole branch.
    pub fn agent_history(&self, agent: usize) -> Vec<AgentState> {
        let mut out: Vec<AgentState> = self.frames_back().map(|f| f[agent]).collect();
        out.reverse();
        out
    }

    pub fn cache(&self) -> &BranchCache {
        &self.cache
    }

    pub fn cache_as<T: 'static>(&self) -> Option<&T> {
        self.cache.downcast_ref::<T>()
    }
}
