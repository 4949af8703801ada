//! Probabilistic execution of the monitors over distribution-valued inputs.
//!
//! Every monitor's reachable state space is finite, so it can be flattened
//! into an explicit automaton ([`finitize`]) whose states are
//! (location, counters, just-fired) tuples. A [`BeliefState`] is a
//! probability distribution over those states: each input distribution over
//! the 9 symbols pushes belief mass through the transition table, and the
//! mass flowing into just-fired states is the probability that the pattern
//! completed at this window. When that mass reaches the detection threshold,
//! the machine reports and its belief resets to the initial state.
//!
//! With one-hot inputs this reduces exactly to deterministic monitor
//! execution, for any threshold in (0, 1].

mod automaton;
mod belief;

pub use automaton::{finitize, finitize_capped, AutomatonDump, ExplicitAutomaton, DEFAULT_STATE_CAP};
pub use belief::{detect_prob, one_hot, propagate, AutomatonSet, BeliefState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("e{ce}: reachable state enumeration exceeded cap {cap} (mis-specified clamp?)")]
    StateExplosion { ce: u8, cap: usize },
    #[error("window {window}: input distribution not normalized (sum = {sum})")]
    NotNormalized { window: usize, sum: f64 },
    #[error("invalid detection threshold {0} (need 0 < threshold <= 1)")]
    BadThreshold(f64),
}
