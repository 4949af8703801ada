//! Flattening a monitor into an explicit finite automaton by breadth-first
//! enumeration of its reachable behavioral states.

use super::ProbError;
use crate::event::{AtomicEvent, CeLabel, WindowSpec, AE_COUNT};
use crate::fsm::Monitor;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

/// Default cap on reachable states; exceeding it signals a counter clamp
/// that no longer bounds the state space.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// A monitor flattened to an explicit automaton. Transitions are total over
/// states x 9 symbols; accepting states are exactly those entered by a
/// firing transition.
#[derive(Debug, Clone)]
pub struct ExplicitAutomaton {
    ce: CeLabel,
    window: WindowSpec,
    initial: u32,
    transitions: Vec<[u32; AE_COUNT]>,
    accepting: Vec<bool>,
    labels: Vec<String>,
}

impl ExplicitAutomaton {
    pub fn ce(&self) -> CeLabel {
        self.ce
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn n_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    pub fn is_accepting(&self, state: u32) -> bool {
        self.accepting[state as usize]
    }

    /// Successor state; entering an accepting state means the pattern
    /// completed on this input.
    #[inline]
    pub fn step(&self, state: u32, x: AtomicEvent) -> u32 {
        self.transitions[state as usize][x.code() as usize]
    }

    pub fn transitions(&self) -> &[[u32; AE_COUNT]] {
        &self.transitions
    }

    pub fn accepting_states(&self) -> Vec<u32> {
        (0..self.n_states() as u32)
            .filter(|&s| self.accepting[s as usize])
            .collect()
    }

    /// Serializable dump: dense integer transition table plus state labels.
    pub fn dump(&self) -> AutomatonDump {
        AutomatonDump {
            ce: self.ce.id(),
            window_s: self.window.window_seconds,
            states: self.n_states(),
            initial: self.initial,
            accepting: self.accepting_states(),
            transitions: self.transitions.iter().map(|row| row.to_vec()).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// JSON form of an [`ExplicitAutomaton`].
#[derive(Debug, Clone, Serialize)]
pub struct AutomatonDump {
    pub ce: u8,
    pub window_s: u32,
    pub states: usize,
    pub initial: u32,
    pub accepting: Vec<u32>,
    pub transitions: Vec<Vec<u32>>,
    pub labels: Vec<String>,
}

/// Flattens the monitor for `ce` with the default state cap.
pub fn finitize(ce: CeLabel, window: WindowSpec) -> Result<ExplicitAutomaton, ProbError> {
    finitize_capped(ce, window, DEFAULT_STATE_CAP)
}

/// Breadth-first reachable-state enumeration from the initial monitor state.
pub fn finitize_capped(
    ce: CeLabel,
    window: WindowSpec,
    cap: usize,
) -> Result<ExplicitAutomaton, ProbError> {
    struct Bfs {
        ce: u8,
        cap: usize,
        ids: HashMap<u64, u32>,
        queue: VecDeque<(Monitor, u32)>,
        transitions: Vec<[u32; AE_COUNT]>,
        accepting: Vec<bool>,
        labels: Vec<String>,
    }

    impl Bfs {
        fn intern(&mut self, m: &Monitor) -> Result<u32, ProbError> {
            let key = m.behavior_key();
            if let Some(&id) = self.ids.get(&key) {
                return Ok(id);
            }
            if self.transitions.len() >= self.cap {
                return Err(ProbError::StateExplosion { ce: self.ce, cap: self.cap });
            }
            let id = self.transitions.len() as u32;
            self.ids.insert(key, id);
            self.transitions.push([0; AE_COUNT]);
            self.accepting.push(m.just_fired());
            self.labels.push(format!(
                "loc={} c0={} c1={}{}",
                m.location(),
                m.counters()[0],
                m.counters()[1],
                if m.just_fired() { " fired" } else { "" }
            ));
            self.queue.push_back((m.clone(), id));
            Ok(id)
        }
    }

    let mut bfs = Bfs {
        ce: ce.id(),
        cap,
        ids: HashMap::new(),
        queue: VecDeque::new(),
        transitions: Vec::new(),
        accepting: Vec::new(),
        labels: Vec::new(),
    };
    let init_id = bfs.intern(&Monitor::new(ce, window))?;
    while let Some((state, from)) = bfs.queue.pop_front() {
        for x in AtomicEvent::ALL {
            let mut next = state.clone();
            let out = next.step(x, 0);
            let to = bfs.intern(&next)?;
            bfs.transitions[from as usize][x.code() as usize] = to;
            debug_assert_eq!(out.fired, bfs.accepting[to as usize]);
        }
    }
    let Bfs {
        transitions,
        accepting,
        labels,
        ..
    } = bfs;

    Ok(ExplicitAutomaton {
        ce,
        window,
        initial: init_id,
        transitions,
        accepting,
        labels,
    })
}
