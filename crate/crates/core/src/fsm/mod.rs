//! Deterministic extended finite-state monitors, one per complex-event class,
//! plus the ensemble labeler that produces online labels.
//!
//! Each monitor is a small mutable machine: a control location plus at most
//! two bounded tick counters. Rule durations are stored in seconds and
//! converted to window ticks at construction (ceiling division), so the same
//! rules run at any window size. Counters are clamped one past their
//! threshold, which keeps every monitor's reachable state space finite; the
//! per-monitor counts are checked by exhaustive enumeration in
//! [`crate::probfsm::finitize`].
//!
//! A monitor fires at the window where its pattern is first satisfied and
//! resets whatever its rule resets on report. The window index of the
//! earliest contributing atomic event is tracked as the *anchor* and reported
//! alongside each completion; anchors never influence transitions or firing.

mod catalogue;
mod monitors;

pub use catalogue::{catalogue, CounterDescriptor, MonitorDescriptor, ThresholdDescriptor};

use crate::event::{AtomicEvent, CeLabel, WindowSpec};
use crate::trace::{Completion, ConceptTrace, LabeledTrace};
use thiserror::Error;

/// Result of one monitor step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorOutput {
    pub ce: CeLabel,
    pub fired: bool,
    /// Earliest contributing window; `Some` exactly when `fired`.
    pub anchor: Option<usize>,
}

/// One extended finite-state monitor.
///
/// `location` and `counters` are the behavioral state; `anchor` and
/// `prev_was_key` are span bookkeeping only. `fired_flag` marks the step
/// right after a report so that flattening to an explicit automaton can give
/// firing transitions a distinguished target state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monitor {
    ce: CeLabel,
    window: WindowSpec,
    /// Primary / secondary tick thresholds (see [`catalogue`] for names).
    ta: u32,
    tb: u32,
    location: u8,
    counters: [u32; 2],
    fired_flag: bool,
    anchor: Option<usize>,
    prev_was_key: bool,
}

impl Monitor {
    /// Monitor for `ce` (`e1..e10`) in its initial state.
    pub fn new(ce: CeLabel, window: WindowSpec) -> Monitor {
        assert!(ce.is_event(), "no monitor for the default label e0");
        let (ta, tb) = monitors::thresholds(ce, window);
        Monitor {
            ce,
            window,
            ta,
            tb,
            location: 0,
            counters: [0, 0],
            fired_flag: false,
            anchor: None,
            prev_was_key: false,
        }
    }

    pub fn ce(&self) -> CeLabel {
        self.ce
    }

    pub fn location(&self) -> u8 {
        self.location
    }

    pub fn counters(&self) -> &[u32; 2] {
        &self.counters
    }

    /// Behavioral state packed into one integer: location, both counters, and
    /// the just-fired flag. Two monitors with equal keys behave identically
    /// on all future inputs.
    pub fn behavior_key(&self) -> u64 {
        debug_assert!(self.counters[0] < 256 && self.counters[1] < 256);
        self.location as u64
            | (self.counters[0] as u64) << 8
            | (self.counters[1] as u64) << 16
            | (self.fired_flag as u64) << 24
    }

    /// True on the step right after a report.
    pub fn just_fired(&self) -> bool {
        self.fired_flag
    }

    /// Back to the initial state.
    pub fn reset(&mut self) {
        self.location = 0;
        self.counters = [0, 0];
        self.fired_flag = false;
        self.anchor = None;
        self.prev_was_key = false;
    }

    /// Advances one window. `t` is the current window index (increments by 1
    /// per call); it is used only for anchor bookkeeping, never for firing.
    pub fn step(&mut self, x: AtomicEvent, t: usize) -> MonitorOutput {
        self.fired_flag = false;
        let fire_anchor = monitors::step(self, x, t);
        self.fired_flag = fire_anchor.is_some();
        MonitorOutput {
            ce: self.ce,
            fired: self.fired_flag,
            anchor: fire_anchor,
        }
    }
}

/// Labeling failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("window {window}: monitors {ces:?} completed simultaneously")]
    SimultaneousCompletion { window: usize, ces: Vec<CeLabel> },
    #[error("prefix length {t} out of range for trace of {len} windows")]
    PrefixOutOfRange { t: usize, len: usize },
}

/// All ten monitors advanced in lockstep.
#[derive(Debug, Clone)]
pub struct MonitorEnsemble {
    monitors: Vec<Monitor>,
}

impl MonitorEnsemble {
    pub fn new(window: WindowSpec) -> MonitorEnsemble {
        MonitorEnsemble {
            monitors: CeLabel::positives().map(|ce| Monitor::new(ce, window)).collect(),
        }
    }

    pub fn reset(&mut self) {
        for m in &mut self.monitors {
            m.reset();
        }
    }

    /// Steps every monitor; returns the completions fired at this window.
    pub fn step(&mut self, x: AtomicEvent, t: usize) -> Vec<Completion> {
        let mut fired = Vec::new();
        for m in &mut self.monitors {
            let out = m.step(x, t);
            if out.fired {
                fired.push(Completion {
                    window: t,
                    ce: out.ce,
                    anchor: out.anchor.expect("fired output carries an anchor"),
                });
            }
        }
        fired
    }
}

/// Runs all ten monitors over the trace and emits one label per window:
/// `e0` when no monitor fires, the firing class when exactly one does.
///
/// Two monitors completing at the same window is an error; the dataset
/// builder discards such samples, while [`label_trace_multi`] keeps the full
/// sets instead.
pub fn label_trace(trace: &ConceptTrace) -> Result<LabeledTrace, LabelError> {
    if trace.is_empty() {
        return Err(LabelError::EmptyTrace);
    }
    let mut ensemble = MonitorEnsemble::new(trace.window);
    let mut labels = Vec::with_capacity(trace.len());
    let mut completions = Vec::new();
    for (t, &x) in trace.events.iter().enumerate() {
        let fired = ensemble.step(x, t);
        match fired.len() {
            0 => labels.push(CeLabel::E0),
            1 => {
                labels.push(fired[0].ce);
                completions.push(fired[0]);
            }
            _ => {
                return Err(LabelError::SimultaneousCompletion {
                    window: t,
                    ces: fired.iter().map(|c| c.ce).collect(),
                })
            }
        }
    }
    Ok(LabeledTrace {
        trace: trace.clone(),
        labels,
        completions,
    })
}

/// Multi-label view: the set of classes completing at each window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiLabels {
    pub sets: Vec<Vec<CeLabel>>,
    pub completions: Vec<Completion>,
}

/// Like [`label_trace`] but keeps every completion at windows where several
/// monitors fire at once.
pub fn label_trace_multi(trace: &ConceptTrace) -> Result<MultiLabels, LabelError> {
    if trace.is_empty() {
        return Err(LabelError::EmptyTrace);
    }
    let mut ensemble = MonitorEnsemble::new(trace.window);
    let mut sets = Vec::with_capacity(trace.len());
    let mut completions = Vec::new();
    for (t, &x) in trace.events.iter().enumerate() {
        let fired = ensemble.step(x, t);
        sets.push(fired.iter().map(|c| c.ce).collect());
        completions.extend(fired);
    }
    Ok(MultiLabels { sets, completions })
}

/// Detector variant of [`label_trace`] for noisy inputs: one label per
/// window, with simultaneous completions resolved to the lowest class id
/// instead of raising an error (mirroring the probabilistic detector's
/// tie-break at accepting mass 1).
pub fn detect_symbols(events: &[AtomicEvent], window: WindowSpec) -> Vec<CeLabel> {
    let mut ensemble = MonitorEnsemble::new(window);
    events
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            ensemble
                .step(x, t)
                .iter()
                .map(|c| c.ce)
                .min()
                .unwrap_or(CeLabel::E0)
        })
        .collect()
}

/// Labels of the first `t` windows, computed by truncating then labeling.
///
/// Because every monitor is causal, this always equals the first `t` labels
/// of the full labeling; tests assert exactly that.
pub fn prefix_labels(trace: &ConceptTrace, t: usize) -> Result<Vec<CeLabel>, LabelError> {
    if t == 0 || t > trace.len() {
        return Err(LabelError::PrefixOutOfRange {
            t,
            len: trace.len(),
        });
    }
    let prefix = ConceptTrace {
        id: trace.id.clone(),
        window: trace.window,
        events: trace.events[..t].to_vec(),
        seed: trace.seed,
        generator_tag: trace.generator_tag.clone(),
    };
    Ok(label_trace(&prefix)?.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::AtomicEvent::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn trace(events: Vec<AtomicEvent>) -> ConceptTrace {
        ConceptTrace {
            id: "t".into(),
            window: WindowSpec::default(),
            events,
            seed: 0,
            generator_tag: "test".into(),
        }
    }

    fn random_trace(rng: &mut ChaCha8Rng, len: usize) -> ConceptTrace {
        trace(
            (0..len)
                .map(|_| AtomicEvent::from_code(rng.gen_range(0..9)).unwrap())
                .collect(),
        )
    }

    #[test]
    fn all_sit_is_all_e0() {
        let labeled = label_trace(&trace(vec![Sit; 60])).unwrap();
        assert!(labeled.labels.iter().all(|&l| l == CeLabel::E0));
        assert!(labeled.completions.is_empty());
    }

    #[test]
    fn all_walk_never_fires() {
        let labeled = label_trace(&trace(vec![Walk; 60])).unwrap();
        assert!(labeled.completions.is_empty());
    }

    #[test]
    fn restroom_then_meal_scenario() {
        // Restroom use with no handwash, then eating later: a single unclean
        // meal violation at the eating window, e0 everywhere else.
        let events = vec![Sit, FlushToilet, Walk, Walk, Eat];
        let labeled = label_trace(&trace(events)).unwrap();
        let e2 = CeLabel::new(2).unwrap();
        assert_eq!(labeled.labels[4], e2);
        for t in 0..4 {
            assert_eq!(labeled.labels[t], CeLabel::E0);
        }
        assert_eq!(
            labeled.completions,
            vec![Completion {
                window: 4,
                ce: e2,
                anchor: 4
            }]
        );
    }

    #[test]
    fn adequate_brushing_fires_e7_not_e3() {
        let mut events = vec![BrushTeeth; 24];
        events.extend([Walk, Walk, Walk]);
        let labeled = label_trace(&trace(events)).unwrap();
        let e7 = CeLabel::new(7).unwrap();
        assert_eq!(labeled.labels[23], e7);
        assert_eq!(labeled.completions.len(), 1);
        assert_eq!(labeled.completions[0].anchor, 0);
        // inadequate-brushing never fires: total was exactly 2 minutes
        assert!(!labeled.labels.iter().any(|&l| l == CeLabel::new(3).unwrap()));
    }

    #[test]
    fn prefix_equals_full_labeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let tr = random_trace(&mut rng, 60);
            let Ok(full) = label_trace(&tr) else {
                continue; // simultaneous completion: labeler rejects, fine here
            };
            let t = rng.gen_range(1..=tr.len());
            if let Ok(prefix) = prefix_labels(&tr, t) {
                assert_eq!(prefix, full.labels[..t]);
            }
        }
    }

    #[test]
    fn prefix_bounds() {
        let tr = trace(vec![Sit; 5]);
        assert!(matches!(
            prefix_labels(&tr, 0),
            Err(LabelError::PrefixOutOfRange { .. })
        ));
        assert!(matches!(
            prefix_labels(&tr, 6),
            Err(LabelError::PrefixOutOfRange { .. })
        ));
        assert_eq!(prefix_labels(&tr, 5).unwrap(), label_trace(&tr).unwrap().labels);
        assert_eq!(prefix_labels(&tr, 1).unwrap().len(), 1);
    }

    #[test]
    fn labeling_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tr = random_trace(&mut rng, 120);
        let a = label_trace(&tr);
        let b = label_trace(&tr);
        assert_eq!(a, b);
    }

    #[test]
    fn multi_label_keeps_all_completions() {
        // e1 and e10 can complete on the same click window: four clicks after
        // sitting, a toilet flush (a don't-care for the click counter), then a
        // fifth click that is also the first work event after the restroom.
        let events = vec![
            Sit, ClickMouse, ClickMouse, ClickMouse, ClickMouse, FlushToilet, ClickMouse,
        ];
        let err = label_trace(&trace(events.clone())).unwrap_err();
        match err {
            LabelError::SimultaneousCompletion { window, ces } => {
                assert_eq!(window, 6);
                assert_eq!(ces, vec![CeLabel::new(1).unwrap(), CeLabel::new(10).unwrap()]);
            }
            other => panic!("expected simultaneous completion, got {other:?}"),
        }
        let multi = label_trace_multi(&trace(events)).unwrap();
        assert_eq!(multi.sets[6].len(), 2);
        assert_eq!(multi.completions.len(), 2);
    }

    #[test]
    fn completions_are_causal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let tr = random_trace(&mut rng, 80);
            if let Ok(labeled) = label_trace(&tr) {
                for c in &labeled.completions {
                    assert!(c.anchor <= c.window);
                    assert_eq!(labeled.labels[c.window], c.ce);
                }
            }
        }
    }

    #[test]
    fn counters_respect_clamps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let window = WindowSpec::default();
        for ce in CeLabel::positives() {
            let clamps: Vec<u32> = catalogue(window)
                .into_iter()
                .find(|d| d.ce == ce.id())
                .unwrap()
                .counters
                .iter()
                .map(|c| c.clamp)
                .collect();
            let mut m = Monitor::new(ce, window);
            for t in 0..5000 {
                let x = AtomicEvent::from_code(rng.gen_range(0..9)).unwrap();
                m.step(x, t);
                for (i, &clamp) in clamps.iter().enumerate() {
                    assert!(
                        m.counters()[i] <= clamp,
                        "{ce}: counter {i} = {} exceeds clamp {clamp}",
                        m.counters()[i]
                    );
                }
            }
        }
    }
}
