//! Online detection quality: window-level F1 per class with macro
//! aggregates, a focal-loss reference scorer, and noise-degradation curves
//! comparing the symbolic detectors.

use crate::event::{CeLabel, CE_COUNT};
use crate::fsm::detect_symbols;
use crate::parallel;
use crate::probfsm::{AutomatonSet, ProbError};
use crate::simulator::{corrupt, mix_seed, SimError};
use crate::trace::{validate_dist, LabeledTrace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction set has {pred} traces, truth has {truth}")]
    TraceCountMismatch { pred: usize, truth: usize },
    #[error("trace {index}: prediction length {pred} != truth length {truth}")]
    LengthMismatch {
        index: usize,
        pred: usize,
        truth: usize,
    },
    #[error("trace {index} window {window}: class distribution not normalized (sum = {sum})")]
    NotNormalized {
        index: usize,
        window: usize,
        sum: f64,
    },
    #[error("invalid focal parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// What to do with classes absent from both prediction and truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentClassPolicy {
    /// Leave the class out of the macro averages (default).
    #[default]
    Exclude,
    /// Score it 0.
    Zero,
    /// Score it 1.
    One,
}

/// Window-level evaluation report. Counting is pooled over all traces within
/// each class; `f1_all` / `f1_pos` are unweighted means over the per-class
/// scores (all classes / positive classes). A class with support or
/// predictions but no true positives scores 0; a class absent from both
/// sides follows the configured policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub windows: u64,
    /// `confusion[truth][pred]` counts.
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
    pub predicted: Vec<u64>,
    /// Per-class F1; `None` marks classes excluded under the absent-class
    /// policy.
    pub per_class_f1: Vec<Option<f64>>,
    pub f1_all: f64,
    pub f1_pos: f64,
    pub absent_policy: AbsentClassPolicy,
}

impl EvalReport {
    /// CSV with the aggregate columns first, then one per class.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["All".to_string(), "Pos.".to_string()];
        header.extend((0..CE_COUNT).map(|i| format!("e{i}")));
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "-".to_string(),
        };
        let mut row = vec![format!("{:.4}", self.f1_all), format!("{:.4}", self.f1_pos)];
        row.extend(self.per_class_f1.iter().map(|&v| fmt(v)));
        format!("{}\n{}\n", header.join(","), row.join(","))
    }
}

/// Pooled window-level multiclass F1 over aligned prediction/truth label
/// sequences.
pub fn f1_report(
    preds: &[Vec<CeLabel>],
    truths: &[Vec<CeLabel>],
    policy: AbsentClassPolicy,
) -> Result<EvalReport, EvalError> {
    if preds.len() != truths.len() {
        return Err(EvalError::TraceCountMismatch {
            pred: preds.len(),
            truth: truths.len(),
        });
    }
    let mut confusion = vec![vec![0u64; CE_COUNT]; CE_COUNT];
    let mut windows = 0u64;
    for (index, (p, t)) in preds.iter().zip(truths).enumerate() {
        if p.len() != t.len() {
            return Err(EvalError::LengthMismatch {
                index,
                pred: p.len(),
                truth: t.len(),
            });
        }
        for (&pl, &tl) in p.iter().zip(t) {
            confusion[tl.index()][pl.index()] += 1;
            windows += 1;
        }
    }
    Ok(report_from_confusion(confusion, windows, policy))
}

fn report_from_confusion(
    confusion: Vec<Vec<u64>>,
    windows: u64,
    policy: AbsentClassPolicy,
) -> EvalReport {
    let support: Vec<u64> = confusion.iter().map(|row| row.iter().sum()).collect();
    let predicted: Vec<u64> = (0..CE_COUNT)
        .map(|c| confusion.iter().map(|row| row[c]).sum())
        .collect();
    let per_class_f1: Vec<Option<f64>> = (0..CE_COUNT)
        .map(|c| {
            let tp = confusion[c][c];
            let sup = support[c];
            let pre = predicted[c];
            if sup == 0 && pre == 0 {
                return match policy {
                    AbsentClassPolicy::Exclude => None,
                    AbsentClassPolicy::Zero => Some(0.0),
                    AbsentClassPolicy::One => Some(1.0),
                };
            }
            if tp == 0 {
                return Some(0.0);
            }
            // harmonic mean of precision and recall in its reduced form
            let false_pos = pre - tp;
            let false_neg = sup - tp;
            Some(2.0 * tp as f64 / (2 * tp + false_pos + false_neg) as f64)
        })
        .collect();
    let mean = |scores: &mut dyn Iterator<Item = f64>| -> f64 {
        let collected: Vec<f64> = scores.collect();
        if collected.is_empty() {
            0.0
        } else {
            collected.iter().sum::<f64>() / collected.len() as f64
        }
    };
    let f1_all = mean(&mut per_class_f1.iter().filter_map(|&v| v));
    let f1_pos = mean(&mut per_class_f1[1..].iter().filter_map(|&v| v));
    EvalReport {
        windows,
        confusion,
        support,
        predicted,
        per_class_f1,
        f1_all,
        f1_pos,
        absent_policy: policy,
    }
}

/// Focal-loss weights: a focusing exponent and per-class weights. Defaults:
/// gamma 2, weight 0.005 for the default class and 0.25 for every positive
/// class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub gamma: f64,
    pub alpha: Vec<f64>,
}

impl Default for FocalParams {
    fn default() -> Self {
        let mut alpha = vec![0.25; CE_COUNT];
        alpha[0] = 0.005;
        FocalParams { gamma: 2.0, alpha }
    }
}

impl FocalParams {
    fn validate(&self) -> Result<(), EvalError> {
        if !(self.gamma >= 0.0) {
            return Err(EvalError::BadParams(format!("gamma {} < 0", self.gamma)));
        }
        if self.alpha.len() != CE_COUNT {
            return Err(EvalError::BadParams(format!(
                "alpha has {} entries, expected {CE_COUNT}",
                self.alpha.len()
            )));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(EvalError::BadParams("alpha weights must be > 0".into()));
        }
        Ok(())
    }
}

/// Focal loss summed over all windows of all traces:
/// `alpha_y * (1 - p_y)^gamma * (-ln p_y)`, natural log, returned as a
/// nonnegative magnitude. A true-class probability of exactly 0 yields
/// `+inf` instead of an error.
pub fn focal_loss(
    probs: &[Vec<Vec<f64>>],
    truths: &[Vec<CeLabel>],
    params: &FocalParams,
) -> Result<f64, EvalError> {
    params.validate()?;
    if probs.len() != truths.len() {
        return Err(EvalError::TraceCountMismatch {
            pred: probs.len(),
            truth: truths.len(),
        });
    }
    let mut total = 0.0f64;
    for (index, (rows, labels)) in probs.iter().zip(truths).enumerate() {
        if rows.len() != labels.len() {
            return Err(EvalError::LengthMismatch {
                index,
                pred: rows.len(),
                truth: labels.len(),
            });
        }
        for (window, (row, &y)) in rows.iter().zip(labels).enumerate() {
            if row.len() != CE_COUNT {
                return Err(EvalError::NotNormalized {
                    index,
                    window,
                    sum: f64::NAN,
                });
            }
            validate_dist(row).map_err(|sum| EvalError::NotNormalized { index, window, sum })?;
            let p = row[y.index()];
            if p == 0.0 {
                return Ok(f64::INFINITY);
            }
            total += params.alpha[y.index()] * (1.0 - p).powf(params.gamma) * -p.ln();
        }
    }
    Ok(total)
}

/// One noise level of the degradation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub noise: f64,
    /// Deterministic ensemble on the sampled hard predictions.
    pub f1_pos_argmax: f64,
    pub f1_all_argmax: f64,
    /// Belief-state detector on the class distributions.
    pub f1_pos_belief: f64,
    pub f1_all_belief: f64,
}

/// Corrupts every trace at each noise level and scores both detectors
/// against the stored labels.
pub fn degradation_curve(
    dataset: &[LabeledTrace],
    noise_levels: &[f64],
    threshold: f64,
    seed: u64,
) -> Result<Vec<CurvePoint>, EvalError> {
    let truths: Vec<Vec<CeLabel>> = dataset.iter().map(|l| l.labels.clone()).collect();
    let mut out = Vec::with_capacity(noise_levels.len());
    for (level_idx, &noise) in noise_levels.iter().enumerate() {
        let accuracy = 1.0 - noise;
        let window = match dataset.first() {
            Some(l) => l.trace.window,
            None => Default::default(),
        };
        let set = AutomatonSet::new(window)?;
        let per_trace: Vec<Result<(Vec<CeLabel>, Vec<CeLabel>), EvalError>> =
            parallel::map_indices(dataset.len(), |i| {
                let labeled = &dataset[i];
                let corrupt_seed = mix_seed(mix_seed(seed, level_idx as u64), i as u64);
                let (prob, noisy) = corrupt(&labeled.trace, accuracy, None, corrupt_seed)?;
                let argmax = detect_symbols(&noisy.events, noisy.window);
                let belief = set.detect(&prob, threshold)?;
                Ok((argmax, belief))
            });
        let mut argmax_preds = Vec::with_capacity(dataset.len());
        let mut belief_preds = Vec::with_capacity(dataset.len());
        for r in per_trace {
            let (a, b) = r?;
            argmax_preds.push(a);
            belief_preds.push(b);
        }
        let argmax_report = f1_report(&argmax_preds, &truths, AbsentClassPolicy::Exclude)?;
        let belief_report = f1_report(&belief_preds, &truths, AbsentClassPolicy::Exclude)?;
        out.push(CurvePoint {
            noise,
            f1_pos_argmax: argmax_report.f1_pos,
            f1_all_argmax: argmax_report.f1_all,
            f1_pos_belief: belief_report.f1_pos,
            f1_all_belief: belief_report.f1_all,
        });
    }
    Ok(out)
}

/// CSV rendering of a degradation curve.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out =
        String::from("noise,f1_pos_argmax,f1_all_argmax,f1_pos_belief,f1_all_belief\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{:.4}\n",
            p.noise, p.f1_pos_argmax, p.f1_all_argmax, p.f1_pos_belief, p.f1_all_belief
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn l(id: u8) -> CeLabel {
        CeLabel::new(id).unwrap()
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let truths = vec![vec![l(0), l(0), l(3), l(0), l(6)], vec![l(0), l(2)]];
        let report = f1_report(&truths, &truths, AbsentClassPolicy::Exclude).unwrap();
        assert_eq!(report.f1_all, 1.0);
        assert_eq!(report.f1_pos, 1.0);
        for (i, f1) in report.per_class_f1.iter().enumerate() {
            match i {
                0 | 2 | 3 | 6 => assert_eq!(*f1, Some(1.0)),
                _ => assert_eq!(*f1, None),
            }
        }
    }

    #[test]
    fn all_default_predictor_scores_zero_on_positives() {
        let truths = vec![vec![l(0), l(4), l(0), l(9)]];
        let preds = vec![vec![l(0); 4]];
        let report = f1_report(&preds, &truths, AbsentClassPolicy::Exclude).unwrap();
        assert_eq!(report.f1_pos, 0.0);
        assert!(report.f1_all > 0.0); // e0 still scores
    }

    #[test]
    fn matches_brute_force_confusion_oracle() {
        // Independent oracle: count TP/FP/FN per class directly over the
        // flattened pairs and recompute the harmonic mean.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n_traces = rng.gen_range(1..4);
            let mut preds = Vec::new();
            let mut truths = Vec::new();
            for _ in 0..n_traces {
                let len = rng.gen_range(1..=20);
                preds.push((0..len).map(|_| l(rng.gen_range(0..11))).collect::<Vec<_>>());
                truths.push((0..len).map(|_| l(rng.gen_range(0..11))).collect::<Vec<_>>());
            }
            let report = f1_report(&preds, &truths, AbsentClassPolicy::Zero).unwrap();

            let flat_p: Vec<CeLabel> = preds.iter().flatten().copied().collect();
            let flat_t: Vec<CeLabel> = truths.iter().flatten().copied().collect();
            for c in 0..CE_COUNT {
                let tp = flat_p
                    .iter()
                    .zip(&flat_t)
                    .filter(|(p, t)| p.index() == c && t.index() == c)
                    .count() as f64;
                let fp = flat_p
                    .iter()
                    .zip(&flat_t)
                    .filter(|(p, t)| p.index() == c && t.index() != c)
                    .count() as f64;
                let fne = flat_p
                    .iter()
                    .zip(&flat_t)
                    .filter(|(p, t)| p.index() != c && t.index() == c)
                    .count() as f64;
                let expected = if tp + fp + fne == 0.0 {
                    0.0 // policy Zero
                } else if tp == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (2.0 * tp + fp + fne)
                };
                let got = report.per_class_f1[c].unwrap();
                assert_eq!(got, expected, "class {c}");
            }
        }
    }

    #[test]
    fn permutation_invariance() {
        let preds = vec![vec![l(0), l(1)], vec![l(2), l(0)], vec![l(0); 3]];
        let truths = vec![vec![l(1), l(1)], vec![l(2), l(2)], vec![l(0); 3]];
        let a = f1_report(&preds, &truths, AbsentClassPolicy::Exclude).unwrap();
        let perm = [2usize, 0, 1];
        let preds2: Vec<_> = perm.iter().map(|&i| preds[i].clone()).collect();
        let truths2: Vec<_> = perm.iter().map(|&i| truths[i].clone()).collect();
        let b = f1_report(&preds2, &truths2, AbsentClassPolicy::Exclude).unwrap();
        assert_eq!(a.f1_all, b.f1_all);
        assert_eq!(a.f1_pos, b.f1_pos);
        assert_eq!(a.per_class_f1, b.per_class_f1);
    }

    #[test]
    fn confusion_counts_sum_to_windows() {
        let preds = vec![vec![l(0), l(1), l(5)]];
        let truths = vec![vec![l(1), l(1), l(0)]];
        let r = f1_report(&preds, &truths, AbsentClassPolicy::Exclude).unwrap();
        let total: u64 = r.confusion.iter().flatten().sum();
        assert_eq!(total, r.windows);
        assert_eq!(r.windows, 3);
    }

    #[test]
    fn length_mismatch_errors() {
        let e = f1_report(
            &[vec![l(0)]],
            &[vec![l(0), l(0)]],
            AbsentClassPolicy::Exclude,
        )
        .unwrap_err();
        assert!(matches!(e, EvalError::LengthMismatch { .. }));
    }

    fn one_hot_row(c: usize, p: f64) -> Vec<f64> {
        let mut row = vec![(1.0 - p) / (CE_COUNT as f64 - 1.0); CE_COUNT];
        row[c] = p;
        row
    }

    #[test]
    fn focal_loss_single_window_reference_value() {
        // alpha_e0 * (1 - 0.9)^2 * (-ln 0.9)
        let probs = vec![vec![one_hot_row(0, 0.9)]];
        let truths = vec![vec![l(0)]];
        let loss = focal_loss(&probs, &truths, &FocalParams::default()).unwrap();
        let oracle = 0.005 * 0.1f64 * 0.1 * -(0.9f64.ln());
        assert!((loss - oracle).abs() / oracle < 1e-12);
        assert!((loss - 5.268025782891314e-6).abs() / loss < 1e-12);
    }

    #[test]
    fn focal_loss_zero_at_full_confidence() {
        let probs = vec![vec![one_hot_row(3, 1.0), one_hot_row(0, 1.0)]];
        let truths = vec![vec![l(3), l(0)]];
        let loss = focal_loss(&probs, &truths, &FocalParams::default()).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn focal_loss_reduces_to_cross_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let params = FocalParams {
            gamma: 0.0,
            alpha: vec![1.0; CE_COUNT],
        };
        for _ in 0..50 {
            let len = rng.gen_range(1..10);
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..len {
                let mut row: Vec<f64> = (0..CE_COUNT).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= s);
                let drift: f64 = row.iter().sum();
                row[0] += 1.0 - drift;
                labels.push(l(rng.gen_range(0..11)));
                rows.push(row);
            }
            let ce: f64 = rows
                .iter()
                .zip(&labels)
                .map(|(row, y)| -row[y.index()].ln())
                .sum();
            let loss = focal_loss(&[rows], &[labels], &params).unwrap();
            assert!((loss - ce).abs() / ce.max(1e-300) < 1e-12);
        }
    }

    #[test]
    fn focal_loss_probability_zero_is_infinite() {
        let mut row = vec![0.0; CE_COUNT];
        row[1] = 1.0;
        let probs = vec![vec![row]];
        let truths = vec![vec![l(0)]]; // true class has probability 0
        let loss = focal_loss(&probs, &truths, &FocalParams::default()).unwrap();
        assert!(loss.is_infinite());
    }

    #[test]
    fn focal_loss_rejects_unnormalized() {
        let probs = vec![vec![vec![0.5; CE_COUNT]]];
        let truths = vec![vec![l(0)]];
        assert!(matches!(
            focal_loss(&probs, &truths, &FocalParams::default()),
            Err(EvalError::NotNormalized { .. })
        ));
    }
}
