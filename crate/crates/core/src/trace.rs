//! Trace containers and their JSONL wire format.
//!
//! One JSON object per line:
//!
//! ```text
//! {"id": "...", "window_s": 5, "ae": ["walk", ...], "ce": [0, ...], "seed": 42, "gen": "..."}
//! ```
//!
//! A probabilistic record replaces `"ae"` with `"p"`, a list of 9-float
//! distributions. `"ce"` is present only on labeled records; `"ce_multi"`
//! carries the optional multi-label view.

use crate::event::{AtomicEvent, CeLabel, WindowSpec, AE_COUNT};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// Tolerance for "sums to 1" checks on probability vectors.
pub const DIST_TOLERANCE: f64 = 1e-9;

/// A finite sequence of atomic events at fixed window duration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptTrace {
    pub id: String,
    pub window: WindowSpec,
    pub events: Vec<AtomicEvent>,
    pub seed: u64,
    pub generator_tag: String,
}

impl ConceptTrace {
    /// Trace length in windows.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// One complex-event completion: the monitor for `ce` fired at `window`, and
/// the earliest contributing atomic event sits at `anchor` (`anchor <= window`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub window: usize,
    pub ce: CeLabel,
    pub anchor: usize,
}

impl Completion {
    /// Temporal span in windows, `[anchor, window]` inclusive.
    pub fn span(&self) -> usize {
        self.window - self.anchor + 1
    }
}

/// A concept trace plus its per-window online labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTrace {
    pub trace: ConceptTrace,
    pub labels: Vec<CeLabel>,
    pub completions: Vec<Completion>,
}

/// Per-window probability distributions over the 9 atomic events.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTrace {
    pub id: String,
    pub window: WindowSpec,
    pub dists: Vec<[f64; AE_COUNT]>,
}

impl ProbTrace {
    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    /// Checks that every row is nonnegative and sums to 1 within tolerance.
    pub fn validate(&self) -> Result<(), TraceError> {
        for (t, d) in self.dists.iter().enumerate() {
            validate_dist(d).map_err(|sum| TraceError::NotNormalized {
                id: self.id.clone(),
                window: t,
                sum,
            })?;
        }
        Ok(())
    }
}

/// Returns `Err(sum)` when the vector is negative somewhere or its sum is off
/// by more than [`DIST_TOLERANCE`].
pub fn validate_dist(d: &[f64]) -> Result<(), f64> {
    let mut sum = 0.0;
    for &x in d {
        if !(x >= 0.0) {
            return Err(f64::NAN);
        }
        sum += x;
    }
    if (sum - 1.0).abs() > DIST_TOLERANCE {
        return Err(sum);
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace {id} window {window}: distribution not normalized (sum = {sum})")]
    NotNormalized { id: String, window: usize, sum: f64 },
    #[error("record {id}: field {field} has length {got}, expected {expected}")]
    LengthMismatch {
        id: String,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("record {id}: missing field {field}")]
    MissingField { id: String, field: &'static str },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One JSONL record. Payload fields are optional so the same schema serves
/// symbol traces, labeled traces, probabilistic traces, and predictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    pub window_s: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ae: Option<Vec<AtomicEvent>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce_multi: Option<Vec<Vec<u8>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen: Option<String>,
}

impl TraceRecord {
    pub fn from_concept(trace: &ConceptTrace) -> TraceRecord {
        TraceRecord {
            id: trace.id.clone(),
            window_s: trace.window.window_seconds,
            ae: Some(trace.events.clone()),
            seed: Some(trace.seed),
            gen: Some(trace.generator_tag.clone()),
            ..TraceRecord::default()
        }
    }

    pub fn from_labeled(labeled: &LabeledTrace) -> TraceRecord {
        let mut rec = TraceRecord::from_concept(&labeled.trace);
        rec.ce = Some(labeled.labels.iter().map(|l| l.id()).collect());
        rec
    }

    pub fn from_prob(prob: &ProbTrace) -> TraceRecord {
        TraceRecord {
            id: prob.id.clone(),
            window_s: prob.window.window_seconds,
            p: Some(prob.dists.iter().map(|d| d.to_vec()).collect()),
            ..TraceRecord::default()
        }
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec::new(self.window_s)
    }

    pub fn to_concept(&self) -> Result<ConceptTrace, TraceError> {
        let events = self.ae.clone().ok_or(TraceError::MissingField {
            id: self.id.clone(),
            field: "ae",
        })?;
        Ok(ConceptTrace {
            id: self.id.clone(),
            window: self.window(),
            events,
            seed: self.seed.unwrap_or(0),
            generator_tag: self.gen.clone().unwrap_or_default(),
        })
    }

    pub fn to_labeled(&self) -> Result<(ConceptTrace, Vec<CeLabel>), TraceError> {
        let trace = self.to_concept()?;
        let labels = self.labels()?;
        if labels.len() != trace.len() {
            return Err(TraceError::LengthMismatch {
                id: self.id.clone(),
                field: "ce",
                got: labels.len(),
                expected: trace.len(),
            });
        }
        Ok((trace, labels))
    }

    /// The `ce` field parsed into labels.
    pub fn labels(&self) -> Result<Vec<CeLabel>, TraceError> {
        let raw = self.ce.as_ref().ok_or(TraceError::MissingField {
            id: self.id.clone(),
            field: "ce",
        })?;
        raw.iter()
            .map(|&c| {
                CeLabel::new(c).ok_or(TraceError::MissingField {
                    id: self.id.clone(),
                    field: "ce (label out of range)",
                })
            })
            .collect()
    }

    pub fn to_prob(&self) -> Result<ProbTrace, TraceError> {
        let rows = self.p.as_ref().ok_or(TraceError::MissingField {
            id: self.id.clone(),
            field: "p",
        })?;
        let mut dists = Vec::with_capacity(rows.len());
        for (t, row) in rows.iter().enumerate() {
            if row.len() != AE_COUNT {
                return Err(TraceError::LengthMismatch {
                    id: self.id.clone(),
                    field: "p",
                    got: row.len(),
                    expected: AE_COUNT,
                });
            }
            let mut d = [0.0; AE_COUNT];
            d.copy_from_slice(row);
            validate_dist(&d).map_err(|sum| TraceError::NotNormalized {
                id: self.id.clone(),
                window: t,
                sum,
            })?;
            dists.push(d);
        }
        Ok(ProbTrace {
            id: self.id.clone(),
            window: self.window(),
            dists,
        })
    }
}

/// Writes one record per line.
pub fn write_jsonl<W: Write>(mut w: W, records: &[TraceRecord]) -> Result<(), TraceError> {
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|source| TraceError::Json { line: 0, source })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes a single record followed by a newline.
pub fn write_record<W: Write>(mut w: W, rec: &TraceRecord) -> Result<(), TraceError> {
    serde_json::to_writer(&mut w, rec).map_err(|source| TraceError::Json { line: 0, source })?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Reads records eagerly. For streaming, use [`record_lines`].
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<TraceRecord>, TraceError> {
    record_lines(r).collect()
}

/// Line-by-line record iterator; memory use is independent of file size.
pub fn record_lines<R: BufRead>(r: R) -> impl Iterator<Item = Result<TraceRecord, TraceError>> {
    r.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(TraceError::Io(e))),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(
            serde_json::from_str(&l).map_err(|source| TraceError::Json { line: i + 1, source }),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace_strategy() -> impl Strategy<Value = ConceptTrace> {
        (
            "[a-z0-9]{1,8}",
            prop::collection::vec(0u8..9, 1..80),
            any::<u64>(),
        )
            .prop_map(|(id, codes, seed)| ConceptTrace {
                id,
                window: WindowSpec::default(),
                events: codes
                    .into_iter()
                    .map(|c| AtomicEvent::from_code(c).unwrap())
                    .collect(),
                seed,
                generator_tag: "test".to_string(),
            })
    }

    proptest! {
        #[test]
        fn concept_roundtrip(trace in trace_strategy()) {
            let rec = TraceRecord::from_concept(&trace);
            let json = serde_json::to_string(&rec).unwrap();
            let back: TraceRecord = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back.to_concept().unwrap(), trace);
        }

        #[test]
        fn prob_roundtrip(rows in prop::collection::vec(
            prop::collection::vec(0.0f64..1.0, AE_COUNT), 1..20))
        {
            // normalize rows so validation passes
            let dists: Vec<[f64; AE_COUNT]> = rows.iter().map(|r| {
                let s: f64 = r.iter().sum::<f64>().max(1e-12);
                let mut d = [0.0; AE_COUNT];
                for (i, x) in r.iter().enumerate() { d[i] = x / s; }
                // push residual into the largest entry to land within 1e-9
                let total: f64 = d.iter().sum();
                let argmax = (0..AE_COUNT).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
                d[argmax] += 1.0 - total;
                d
            }).collect();
            let prob = ProbTrace { id: "p".into(), window: WindowSpec::default(), dists };
            prob.validate().unwrap();
            let rec = TraceRecord::from_prob(&prob);
            let json = serde_json::to_string(&rec).unwrap();
            let back: TraceRecord = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back.to_prob().unwrap(), prob);
        }
    }

    #[test]
    fn labeled_roundtrip_and_schema() {
        let trace = ConceptTrace {
            id: "t1".into(),
            window: WindowSpec::default(),
            events: vec![AtomicEvent::Walk, AtomicEvent::Eat],
            seed: 7,
            generator_tag: "g".into(),
        };
        let labeled = LabeledTrace {
            trace: trace.clone(),
            labels: vec![CeLabel::E0, CeLabel::new(2).unwrap()],
            completions: vec![Completion {
                window: 1,
                ce: CeLabel::new(2).unwrap(),
                anchor: 1,
            }],
        };
        let rec = TraceRecord::from_labeled(&labeled);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"id":"t1","window_s":5,"ae":["walk","eat"],"ce":[0,2],"seed":7,"gen":"g"}"#
        );
        let back: TraceRecord = serde_json::from_str(&json).unwrap();
        let (t2, l2) = back.to_labeled().unwrap();
        assert_eq!(t2, trace);
        assert_eq!(l2, labeled.labels);
    }

    #[test]
    fn rejects_bad_distribution() {
        let rec = TraceRecord {
            id: "x".into(),
            window_s: 5,
            p: Some(vec![vec![0.5; AE_COUNT]]),
            ..TraceRecord::default()
        };
        assert!(matches!(
            rec.to_prob(),
            Err(TraceError::NotNormalized { .. })
        ));
    }

    #[test]
    fn jsonl_read_write() {
        let recs: Vec<TraceRecord> = (0..3)
            .map(|i| TraceRecord {
                id: format!("t{i}"),
                window_s: 5,
                ae: Some(vec![AtomicEvent::Sit]),
                seed: Some(i),
                gen: Some("g".into()),
                ..TraceRecord::default()
            })
            .collect();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &recs).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, recs);
    }
}
