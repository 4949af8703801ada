//! Dataset construction and statistics.
//!
//! `build` generates traces from a config, labels each with the monitor
//! ensemble, and discards (and regenerates) the rare samples where two
//! classes complete at the same window, keeping every remaining sample
//! single-label. Regeneration derives a fresh seed from (sample seed,
//! attempt), so builds are reproducible despite the filtering.
//!
//! `stats` mirrors the dataset analysis tables: per-class occurrence rates,
//! the fraction of samples with no event at all, temporal span distributions,
//! and pairwise/per-class overlap statistics over [anchor, completion]
//! intervals.

use crate::event::{CeLabel, CE_COUNT};
use crate::fsm::{label_trace, LabelError};
use crate::parallel;
use crate::simulator::{generate, mix_seed, GeneratorConfig, SimError};
use crate::trace::{Completion, LabeledTrace, TraceRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test5,
    Test15,
    Test30,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test5 => "test5",
            Split::Test15 => "test15",
            Split::Test30 => "test30",
        };
        f.write_str(s)
    }
}

/// Declares a dataset build: how many traces, from which config, under which
/// base seed. Wall-clock metadata lives in the run record written next to
/// the outputs, keeping dataset files byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub split: Split,
    pub count: usize,
    pub config_id: String,
    pub seed_base: u64,
    pub window_s: u32,
    /// Trace duration in seconds.
    pub duration_s: u64,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("manifest: count must be > 0")]
    EmptyCount,
    #[error("manifest window_s {manifest} does not match config window_seconds {config}")]
    WindowMismatch { manifest: u32, config: u32 },
    #[error(
        "discard rate {rate:.4} exceeds 0.05 ({discarded}/{attempts} attempts rejected): \
         pathological config"
    )]
    DiscardRateExceeded {
        rate: f64,
        discarded: usize,
        attempts: usize,
    },
    #[error("sample {index}: no collision-free trace after {attempts} attempts")]
    AttemptsExhausted { index: usize, attempts: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("labeling failed: {0}")]
    Label(LabelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A finished build: the labeled samples plus the discard accounting.
#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub samples: Vec<LabeledTrace>,
    pub discarded: usize,
    pub attempts: usize,
}

impl BuildOutput {
    /// Fraction of generation attempts rejected for simultaneous completions.
    pub fn discard_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.discarded as f64 / self.attempts as f64
        }
    }
}

const MAX_ATTEMPTS_PER_SAMPLE: u64 = 64;

/// Generates and labels `manifest.count` traces.
pub fn build(
    manifest: &DatasetManifest,
    config: &GeneratorConfig,
) -> Result<BuildOutput, DatasetError> {
    if manifest.count == 0 {
        return Err(DatasetError::EmptyCount);
    }
    if manifest.window_s != config.window_seconds {
        return Err(DatasetError::WindowMismatch {
            manifest: manifest.window_s,
            config: config.window_seconds,
        });
    }
    config.validate()?;

    let results = parallel::map_indices(manifest.count, |i| build_sample(manifest, config, i));
    let mut samples = Vec::with_capacity(manifest.count);
    let mut discarded = 0;
    let mut attempts = 0;
    for r in results {
        let (labeled, tries) = r?;
        attempts += tries;
        discarded += tries - 1;
        samples.push(labeled);
    }
    let out = BuildOutput {
        samples,
        discarded,
        attempts,
    };
    if out.discard_rate() > 0.05 {
        return Err(DatasetError::DiscardRateExceeded {
            rate: out.discard_rate(),
            discarded,
            attempts,
        });
    }
    Ok(out)
}

fn build_sample(
    manifest: &DatasetManifest,
    config: &GeneratorConfig,
    index: usize,
) -> Result<(LabeledTrace, usize), DatasetError> {
    let sample_seed = mix_seed(manifest.seed_base, index as u64);
    for attempt in 0..MAX_ATTEMPTS_PER_SAMPLE {
        let seed = if attempt == 0 {
            sample_seed
        } else {
            mix_seed(sample_seed, attempt)
        };
        let mut trace = generate(config, manifest.duration_s, seed)?;
        trace.id = format!("{}-{:06}", manifest.name, index);
        match label_trace(&trace) {
            Ok(labeled) => return Ok((labeled, attempt as usize + 1)),
            Err(LabelError::SimultaneousCompletion { .. }) => continue,
            Err(e) => return Err(DatasetError::Label(e)),
        }
    }
    Err(DatasetError::AttemptsExhausted {
        index,
        attempts: MAX_ATTEMPTS_PER_SAMPLE as usize,
    })
}

/// Writes `traces.jsonl` and `manifest.json` into `dir`.
pub fn write_dataset(
    dir: &Path,
    manifest: &DatasetManifest,
    output: &BuildOutput,
) -> Result<(), DatasetError> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("traces.jsonl"))?);
    for labeled in &output.samples {
        crate::trace::write_record(&mut w, &TraceRecord::from_labeled(labeled))?;
    }
    w.flush()?;
    let manifest_json = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join("manifest.json"), manifest_json + "\n")?;
    Ok(())
}

/// Reads a labeled dataset back; accepts a dataset directory or a JSONL file.
pub fn read_labeled(path: &Path) -> Result<Vec<LabeledTrace>, DatasetError> {
    let file = if path.is_dir() {
        path.join("traces.jsonl")
    } else {
        path.to_path_buf()
    };
    let reader = std::io::BufReader::new(fs::File::open(file)?);
    let mut out = Vec::new();
    for rec in crate::trace::record_lines(reader) {
        let rec = rec?;
        let (trace, labels) = rec.to_labeled()?;
        // Completions are not stored in the wire format; relabeling is
        // deterministic and recovers anchors exactly.
        let relabeled = label_trace(&trace).map_err(DatasetError::Label)?;
        debug_assert_eq!(relabeled.labels, labels);
        out.push(relabeled);
    }
    Ok(out)
}

/// Per-class overlap summary over the samples containing the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeOverlapStats {
    pub ce: u8,
    /// Percent of samples containing this class where one of its instances
    /// overlaps an instance of another class.
    pub pct_overlap: f64,
    /// Fewest / most distinct other classes overlapping it in one sample.
    pub min_types: u32,
    pub max_types: u32,
    /// Most other-class instances overlapping it in one sample.
    pub max_instances: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub samples: usize,
    /// Fraction of samples containing each class at least once; index 0 is
    /// the default label and is 1.0 by definition.
    pub occurrence: Vec<f64>,
    /// Fraction of samples with no completion at all.
    pub only_e0: f64,
    /// Temporal spans (windows, completion - anchor + 1) per class; index 0
    /// is empty.
    pub spans: Vec<Vec<usize>>,
    /// `overlap[i][j]`: samples containing an e_i and an e_j instance whose
    /// spans intersect (distinct instances when i == j). Symmetric; row and
    /// column 0 are zero.
    pub overlap: Vec<Vec<u64>>,
    pub per_ce: Vec<CeOverlapStats>,
}

fn intervals_intersect(a: &Completion, b: &Completion) -> bool {
    a.anchor <= b.window && b.anchor <= a.window
}

/// Computes dataset statistics from labeled samples.
pub fn stats(samples: &[LabeledTrace]) -> DatasetStats {
    let n = samples.len();
    let mut contains = vec![0u64; CE_COUNT];
    let mut only_e0 = 0u64;
    let mut spans: Vec<Vec<usize>> = vec![Vec::new(); CE_COUNT];
    let mut overlap = vec![vec![0u64; CE_COUNT]; CE_COUNT];
    // per-class accumulators over samples containing the class
    let mut overlapped_samples = vec![0u64; CE_COUNT];
    let mut min_types = vec![u32::MAX; CE_COUNT];
    let mut max_types = vec![0u32; CE_COUNT];
    let mut max_instances = vec![0u32; CE_COUNT];

    for labeled in samples {
        let completions = &labeled.completions;
        if completions.is_empty() {
            only_e0 += 1;
        }
        let mut present = [false; CE_COUNT];
        for c in completions {
            present[c.ce.index()] = true;
            spans[c.ce.index()].push(c.span());
        }
        for (i, p) in present.iter().enumerate() {
            if *p {
                contains[i] += 1;
            }
        }
        // pairwise overlap per sample
        let mut pair_seen = [[false; CE_COUNT]; CE_COUNT];
        for (ai, a) in completions.iter().enumerate() {
            for (bi, b) in completions.iter().enumerate() {
                if ai == bi || !intervals_intersect(a, b) {
                    continue;
                }
                pair_seen[a.ce.index()][b.ce.index()] = true;
            }
        }
        for i in 1..CE_COUNT {
            for j in 1..CE_COUNT {
                if pair_seen[i][j] {
                    overlap[i][j] += 1;
                }
            }
        }
        // per-class view: which other classes / how many other instances
        // touch this class's instances in this sample
        for i in 1..CE_COUNT {
            if !present[i] {
                continue;
            }
            let mut types: BTreeSet<u8> = BTreeSet::new();
            let mut instances: BTreeSet<usize> = BTreeSet::new();
            for (ai, a) in completions.iter().enumerate() {
                if a.ce.index() != i {
                    continue;
                }
                for (bi, b) in completions.iter().enumerate() {
                    if bi == ai || b.ce.index() == i || !intervals_intersect(a, b) {
                        continue;
                    }
                    types.insert(b.ce.id());
                    instances.insert(bi);
                }
            }
            if !types.is_empty() {
                overlapped_samples[i] += 1;
            }
            min_types[i] = min_types[i].min(types.len() as u32);
            max_types[i] = max_types[i].max(types.len() as u32);
            max_instances[i] = max_instances[i].max(instances.len() as u32);
        }
    }

    let frac = |count: u64| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let mut occurrence: Vec<f64> = contains.iter().map(|&c| frac(c)).collect();
    occurrence[0] = 1.0;

    let per_ce = (1..CE_COUNT)
        .map(|i| CeOverlapStats {
            ce: i as u8,
            pct_overlap: if contains[i] == 0 {
                0.0
            } else {
                100.0 * overlapped_samples[i] as f64 / contains[i] as f64
            },
            min_types: if contains[i] == 0 { 0 } else { min_types[i] },
            max_types: max_types[i],
            max_instances: max_instances[i],
        })
        .collect();

    DatasetStats {
        samples: n,
        occurrence,
        only_e0: frac(only_e0),
        spans,
        overlap,
        per_ce,
    }
}

impl DatasetStats {
    /// One-row CSV of occurrence percentages (e0..e10 plus "only e0").
    pub fn occurrence_csv(&self) -> String {
        let mut header: Vec<String> = (0..CE_COUNT).map(|i| format!("e{i}")).collect();
        header.push("only_e0".into());
        let mut row: Vec<String> = self
            .occurrence
            .iter()
            .map(|f| format!("{:.1}", f * 100.0))
            .collect();
        row.push(format!("{:.1}", self.only_e0 * 100.0));
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    /// Per-class overlap table (percent overlapping, min/max types, max
    /// instances).
    pub fn overlap_csv(&self) -> String {
        let mut out = String::from("ce,pct_overlap,min_types,max_types,max_instances\n");
        for s in &self.per_ce {
            out.push_str(&format!(
                "e{},{:.1},{},{},{}\n",
                s.ce, s.pct_overlap, s.min_types, s.max_types, s.max_instances
            ));
        }
        out
    }

    pub fn median_span(&self, ce: CeLabel) -> Option<f64> {
        let mut spans = self.spans[ce.index()].clone();
        if spans.is_empty() {
            return None;
        }
        spans.sort_unstable();
        let n = spans.len();
        Some(if n % 2 == 1 {
            spans[n / 2] as f64
        } else {
            (spans[n / 2 - 1] + spans[n / 2]) as f64 / 2.0
        })
    }
}
