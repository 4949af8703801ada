//! Complex-event trace toolkit.
//!
//! This crate provides the symbolic substrate for online complex-event
//! detection over activity traces:
//!
//! - [`event`]: the 9-symbol atomic-event vocabulary, complex-event labels
//!   `e0..e10`, and window/time semantics.
//! - [`trace`]: concept traces, labeled traces, probabilistic traces, and
//!   their JSONL wire format.
//! - [`fsm`]: one deterministic extended finite-state monitor per complex
//!   event class, plus the ensemble labeler that produces online labels.
//! - [`probfsm`]: explicit finite automata flattened from the monitors and
//!   belief-state execution over distribution-valued inputs.
//! - [`simulator`]: config-driven stochastic trace generators and a
//!   noisy-classifier corruption channel.
//! - [`dataset`]: dataset builder and statistics (occurrence rates, temporal
//!   spans, overlap matrices).
//! - [`eval`]: per-class and aggregate F1, a focal-loss reference scorer, and
//!   noise-degradation curves.
//!
//! Batch operations are data-parallel across traces via `rayon` when the
//! `parallel` feature (default) is enabled; with it disabled every entry
//! point falls back to an equivalent sequential implementation. Output
//! ordering is identical in both modes.

pub mod dataset;
pub mod eval;
pub mod event;
pub mod fsm;
pub mod parallel;
pub mod probfsm;
pub mod simulator;
pub mod trace;

pub use event::{AtomicEvent, CeLabel, ParseSymbolError, WindowSpec, AE_COUNT, CE_COUNT};
pub use trace::{Completion, ConceptTrace, LabeledTrace, ProbTrace};
