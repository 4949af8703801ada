//! Synthetic noisy-classifier channel.
//!
//! Stands in for a window-level activity classifier of a given accuracy: the
//! probabilistic output places `accuracy` mass on the true symbol and spreads
//! the rest uniformly over the other eight (or uses a caller-supplied
//! confusion matrix row), while the symbol output is a draw from that row —
//! the hard prediction the classifier would emit.

use super::SimError;
use crate::event::{AtomicEvent, AE_COUNT};
use crate::trace::{ConceptTrace, ProbTrace};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Corrupts a trace. Returns the per-window class distributions and the
/// sampled hard predictions, both aligned with the input.
pub fn corrupt(
    trace: &ConceptTrace,
    accuracy: f64,
    confusion: Option<&[[f64; AE_COUNT]; AE_COUNT]>,
    seed: u64,
) -> Result<(ProbTrace, ConceptTrace), SimError> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(SimError::InvalidMatrix(format!(
            "accuracy {accuracy} outside [0, 1]"
        )));
    }
    if let Some(m) = confusion {
        for (i, row) in m.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(SimError::InvalidMatrix(format!("row {i} has negative mass")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidMatrix(format!("row {i} sums to {sum}")));
            }
        }
    }

    let rows: Vec<[f64; AE_COUNT]> = match confusion {
        Some(m) => m.to_vec(),
        None => default_confusion(accuracy).to_vec(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dists = Vec::with_capacity(trace.len());
    let mut symbols = Vec::with_capacity(trace.len());
    for &x in &trace.events {
        let row = rows[x.code() as usize];
        dists.push(row);
        symbols.push(sample_row(&mut rng, &row));
    }

    let prob = ProbTrace {
        id: trace.id.clone(),
        window: trace.window,
        dists,
    };
    let noisy = ConceptTrace {
        id: trace.id.clone(),
        window: trace.window,
        events: symbols,
        seed: trace.seed,
        generator_tag: trace.generator_tag.clone(),
    };
    Ok((prob, noisy))
}

/// The default channel: `accuracy` on the diagonal, the remainder uniform
/// over the other eight symbols.
pub fn default_confusion(accuracy: f64) -> [[f64; AE_COUNT]; AE_COUNT] {
    let off = (1.0 - accuracy) / (AE_COUNT as f64 - 1.0);
    let mut m = [[off; AE_COUNT]; AE_COUNT];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = accuracy;
    }
    m
}

fn sample_row(rng: &mut ChaCha8Rng, row: &[f64; AE_COUNT]) -> AtomicEvent {
    let mut draw = rng.gen::<f64>();
    let mut last = 0u8;
    for (i, &p) in row.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i as u8;
        if draw < p {
            break;
        }
        draw -= p;
    }
    AtomicEvent::from_code(last).expect("row index in range")
}
