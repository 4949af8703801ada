//! Belief-state propagation over explicit automata and the probabilistic
//! detector ensemble.

use super::automaton::{finitize, ExplicitAutomaton};
use super::ProbError;
use crate::event::{AtomicEvent, CeLabel, WindowSpec, AE_COUNT};
use crate::trace::{validate_dist, ProbTrace};

/// Probability distribution over one automaton's states.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    weights: Vec<f64>,
}

impl BeliefState {
    /// Point mass on the automaton's initial state.
    pub fn new(automaton: &ExplicitAutomaton) -> BeliefState {
        let mut weights = vec![0.0; automaton.n_states()];
        weights[automaton.initial() as usize] = 1.0;
        BeliefState { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Advances one window. Returns `(fired, p_accept)` where `p_accept` is
    /// the mass that flowed into accepting states on this input; when it
    /// reaches `threshold` the machine reports and the belief collapses onto
    /// the accepting mass, renormalized.
    ///
    /// The collapse target is the post-report state of the underlying rule —
    /// behaviorally the initial state for every monitor except the
    /// unclean-meal one, whose rule stays in its meal session on report.
    /// Collapsing there (rather than to the literal initial state) is what
    /// makes one-hot execution agree with the deterministic monitors exactly.
    pub fn step(
        &mut self,
        automaton: &ExplicitAutomaton,
        dist: &[f64; AE_COUNT],
        threshold: f64,
        window: usize,
    ) -> Result<(bool, f64), ProbError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(ProbError::BadThreshold(threshold));
        }
        validate_dist(dist).map_err(|sum| ProbError::NotNormalized { window, sum })?;
        let (next, p_accept) = propagate(automaton, &self.weights, dist);
        if p_accept >= threshold {
            for (s, w) in self.weights.iter_mut().enumerate() {
                *w = if automaton.is_accepting(s as u32) {
                    next[s] / p_accept
                } else {
                    0.0
                };
            }
            Ok((true, p_accept))
        } else {
            self.weights = next;
            Ok((false, p_accept))
        }
    }
}

/// One linear propagation step: pushes `weights` through the transition
/// table under the input distribution. Returns the next weights (before any
/// threshold reset) and the accepting mass. Linear in `weights`.
pub fn propagate(
    automaton: &ExplicitAutomaton,
    weights: &[f64],
    dist: &[f64; AE_COUNT],
) -> (Vec<f64>, f64) {
    let mut next = vec![0.0; weights.len()];
    for (s, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = &automaton.transitions()[s];
        for (a, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[row[a] as usize] += w * p;
        }
    }
    let p_accept = next
        .iter()
        .enumerate()
        .filter(|(s, _)| automaton.is_accepting(*s as u32))
        .map(|(_, w)| w)
        .sum();
    (next, p_accept)
}

/// The ten automata for `e1..e10`, shared and immutable; construct once and
/// reuse across traces and threads.
#[derive(Debug, Clone)]
pub struct AutomatonSet {
    window: WindowSpec,
    automata: Vec<ExplicitAutomaton>,
}

impl AutomatonSet {
    pub fn new(window: WindowSpec) -> Result<AutomatonSet, ProbError> {
        let automata = CeLabel::positives()
            .map(|ce| finitize(ce, window))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AutomatonSet { window, automata })
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn automata(&self) -> &[ExplicitAutomaton] {
        &self.automata
    }

    pub fn automaton(&self, ce: CeLabel) -> Option<&ExplicitAutomaton> {
        self.automata.iter().find(|a| a.ce() == ce)
    }

    /// Runs all ten belief machines in lockstep over the probabilistic trace
    /// and emits one label per window: `e0` when nothing reports, otherwise
    /// the reporting class. Simultaneous reports resolve to the highest
    /// accepting mass, ties to the lowest class id; only reporting machines
    /// reset.
    pub fn detect(&self, ptrace: &ProbTrace, threshold: f64) -> Result<Vec<CeLabel>, ProbError> {
        let mut beliefs: Vec<BeliefState> =
            self.automata.iter().map(BeliefState::new).collect();
        let mut out = Vec::with_capacity(ptrace.len());
        for (t, dist) in ptrace.dists.iter().enumerate() {
            let mut best: Option<(CeLabel, f64)> = None;
            for (a, b) in self.automata.iter().zip(beliefs.iter_mut()) {
                let (fired, p_accept) = b.step(a, dist, threshold, t)?;
                if fired {
                    let better = match best {
                        None => true,
                        Some((_, bp)) => p_accept > bp,
                    };
                    if better {
                        best = Some((a.ce(), p_accept));
                    }
                }
            }
            out.push(best.map_or(CeLabel::E0, |(ce, _)| ce));
        }
        Ok(out)
    }
}

/// One-shot convenience over [`AutomatonSet::detect`].
pub fn detect_prob(ptrace: &ProbTrace, threshold: f64) -> Result<Vec<CeLabel>, ProbError> {
    AutomatonSet::new(ptrace.window)?.detect(ptrace, threshold)
}

/// Encodes a symbol trace as one-hot distributions.
pub fn one_hot(events: &[AtomicEvent]) -> Vec<[f64; AE_COUNT]> {
    events
        .iter()
        .map(|&x| {
            let mut d = [0.0; AE_COUNT];
            d[x.code() as usize] = 1.0;
            d
        })
        .collect()
}
