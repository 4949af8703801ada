//! Transition functions for the ten complex-event monitors.
//!
//! Conventions shared by every rule:
//! - thresholds written in seconds become window ticks via ceiling division;
//! - counters saturate at `threshold + 1` (larger values are behaviorally
//!   indistinguishable);
//! - a step returns `Some(anchor)` exactly when the pattern completes at the
//!   current window, after applying whatever reset the rule performs on
//!   report.

use super::Monitor;
use crate::event::AtomicEvent::{self, *};
use crate::event::{CeLabel, WindowSpec};

/// Seconds-valued rule constants.
pub(super) const E1_WASH_S: u32 = 20;
pub(super) const E2_WASH_S: u32 = 20;
pub(super) const E2_STALE_S: u32 = 120;
pub(super) const E3_TOTAL_S: u32 = 120;
pub(super) const E3_GRACE_S: u32 = 10;
pub(super) const E6_RUN_S: u32 = 30;
pub(super) const E7_TOTAL_S: u32 = 120;
pub(super) const E8_REST_S: u32 = 180;
pub(super) const E9_HORIZON_S: u32 = 60;
/// Count-valued rule constants.
pub(super) const E9_SESSIONS: u32 = 3;
pub(super) const E10_CLICKS: u32 = 5;

/// Primary and secondary tick thresholds per monitor.
pub(super) fn thresholds(ce: CeLabel, window: WindowSpec) -> (u32, u32) {
    let t = |s: u32| window.ticks(s as u64) as u32;
    match ce.id() {
        1 => (t(E1_WASH_S), 0),
        2 => (t(E2_WASH_S), t(E2_STALE_S)),
        3 => (t(E3_TOTAL_S), t(E3_GRACE_S)),
        4 | 5 => (0, 0),
        6 => (t(E6_RUN_S), 0),
        7 => (t(E7_TOTAL_S), 0),
        8 => (t(E8_REST_S), 0),
        9 => (t(E9_HORIZON_S), E9_SESSIONS),
        10 => (E10_CLICKS, 0),
        _ => unreachable!("no monitor for e0"),
    }
}

#[inline]
fn bump(c: &mut u32, clamp: u32) {
    *c = (*c + 1).min(clamp);
}

pub(super) fn step(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let ce = m.ce.id();
    let fired = match ce {
        1 => e1(m, x, t),
        2 => e2(m, x, t),
        3 => e3(m, x, t),
        4 => e4(m, x, t),
        5 => e5(m, x, t),
        6 => e6(m, x, t),
        7 => e7(m, x, t),
        8 => e8(m, x, t),
        9 => e9(m, x, t),
        10 => e10(m, x, t),
        _ => unreachable!(),
    };
    // Relaxed-sequence monitors track whether the previous window extended a
    // run of their anchor symbol; used only for anchor placement.
    m.prev_was_key = match ce {
        4 => x == BrushTeeth,
        5 => x == Sit,
        _ => false,
    };
    fired
}

fn clear(m: &mut Monitor) {
    m.location = 0;
    m.counters = [0, 0];
    m.anchor = None;
}

/// Working (click or type) without 20 s of consecutive handwashing after
/// using the restroom. Locations: 0 idle, 1 after restroom use.
fn e1(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let need = m.ta;
    match m.location {
        0 => {
            if x == FlushToilet {
                m.location = 1;
                m.counters[0] = 0;
                m.anchor = Some(t);
            }
            None
        }
        _ => match x {
            Wash => {
                bump(&mut m.counters[0], need + 1);
                if m.counters[0] >= need {
                    clear(m); // washed enough, protocol satisfied
                }
                None
            }
            ClickMouse | Type => {
                let violation = m.counters[0] < need;
                let anchor = m.anchor.unwrap_or(t);
                clear(m);
                violation.then_some(anchor)
            }
            _ => {
                m.counters[0] = 0; // wash run interrupted
                None
            }
        },
    }
}

/// A meal session (eat/drink) starting without a 20 s consecutive handwash in
/// the last 2 minutes. Locations: 0 unclean, 1 washing, 2 clean hands,
/// 3 meal session. counters: [wash_count, time_since_wash].
fn e2(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let need = m.ta;
    let stale = m.tb;
    let is_meal = x == Eat || x == Drink;
    let touches = matches!(x, BrushTeeth | ClickMouse | FlushToilet | Type);
    match m.location {
        0 => {
            m.counters[0] = 0;
            if x == Wash {
                m.location = 1;
                m.counters[0] = 1;
                m.anchor = Some(t);
                None
            } else if is_meal {
                m.location = 3;
                m.counters[1] = 0;
                m.anchor = None;
                Some(t)
            } else {
                None
            }
        }
        1 => {
            if x == Wash {
                bump(&mut m.counters[0], need + 1);
                if m.counters[0] >= need {
                    m.location = 2;
                    m.counters[1] = 0;
                    m.anchor = None;
                }
                None
            } else if is_meal {
                let anchor = m.anchor.unwrap_or(t);
                m.location = 3;
                m.counters = [0, 0];
                m.anchor = None;
                Some(anchor)
            } else {
                clear(m);
                None
            }
        }
        2 => {
            if is_meal {
                m.location = 3;
            } else if touches {
                clear(m); // touched something, hands no longer clean
            } else if x == Wash {
                m.counters[1] = 0;
            } else {
                bump(&mut m.counters[1], stale + 1);
            }
            if m.counters[1] > stale {
                clear(m); // last wash too long ago
            }
            None
        }
        _ => {
            // 3: meal session; the staleness timer is paused
            if is_meal || x == Sit {
                // session continues
            } else if touches {
                clear(m);
            } else if x == Wash {
                m.counters[1] = 0;
                if m.counters[0] >= need {
                    m.location = 2;
                } else {
                    m.location = 1;
                    m.anchor = Some(t);
                }
            } else if m.counters[0] >= need {
                // session over; resume the clean-hands timer
                bump(&mut m.counters[1], stale + 1);
                m.location = 2;
            } else {
                clear(m);
            }
            None
        }
    }
}

/// Brushing that totals less than 2 minutes once it stops for more than the
/// 10 s grace period. Locations: 0 idle, 1 brushing, 2 paused.
/// counters: [brush_counter, time_since_brush].
fn e3(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let total = m.ta;
    let grace = m.tb;
    match m.location {
        0 => {
            if x == BrushTeeth {
                m.location = 1;
                m.counters[0] = 1;
                m.anchor = Some(t);
            }
            None
        }
        1 => {
            if x == BrushTeeth {
                bump(&mut m.counters[0], total + 1);
            } else {
                m.location = 2;
                bump(&mut m.counters[1], grace + 1);
            }
            None
        }
        _ => {
            if x == BrushTeeth {
                m.location = 1;
                bump(&mut m.counters[0], total + 1);
                m.counters[1] = 0;
                None
            } else {
                bump(&mut m.counters[1], grace + 1);
                let accumulated = m.counters[0];
                if m.counters[1] > grace {
                    let anchor = m.anchor.unwrap_or(t);
                    clear(m);
                    (accumulated < total).then_some(anchor)
                } else {
                    None
                }
            }
        }
    }
}

/// Routine sequence: brush, then eat and drink in either order, with only
/// non-key events in between. Repeats of the element just matched are
/// absorbed; an earlier key event restarts the match at itself.
/// Locations: 0 idle, 1 brush seen, 2 brush+eat, 3 brush+drink.
fn e4(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    match (m.location, x) {
        (0, BrushTeeth) => {
            m.location = 1;
            m.anchor = Some(t);
            None
        }
        (1, Eat) => {
            m.location = 2;
            None
        }
        (1, Drink) => {
            m.location = 3;
            None
        }
        (1, BrushTeeth) => {
            if !m.prev_was_key {
                m.anchor = Some(t); // broken run: only the newest brush can match
            }
            None
        }
        (2, Drink) | (3, Eat) => {
            let anchor = m.anchor.unwrap_or(t);
            clear(m);
            Some(anchor)
        }
        (2, BrushTeeth) | (3, BrushTeeth) => {
            m.location = 1;
            m.anchor = Some(t);
            None
        }
        // (2, Eat) / (3, Drink) absorb; everything else is a don't-care
        _ => None,
    }
}

/// Start working and then take a break: sit, then type/click, then walk.
/// Between sit and typing only {brush, drink, eat, flush, wash} may appear;
/// after typing starts, sit is also a don't-care. Walking before any typing
/// cancels the match. Locations: 0 idle, 1 seated, 2 working.
fn e5(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    match (m.location, x) {
        (0, Sit) => {
            m.location = 1;
            m.anchor = Some(t);
            None
        }
        (1, Type) | (1, ClickMouse) => {
            m.location = 2;
            None
        }
        (1, Sit) => {
            if !m.prev_was_key {
                m.anchor = Some(t);
            }
            None
        }
        (1, Walk) => {
            clear(m);
            None
        }
        (2, Walk) => {
            let anchor = m.anchor.unwrap_or(t);
            clear(m);
            Some(anchor)
        }
        _ => None,
    }
}

/// Washing for 30 s consecutively. The anchor tracks the start of the
/// unbroken wash streak, so back-to-back completions inside one long streak
/// report spans of 6, 12, 18, ... windows.
fn e6(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let run = m.ta;
    if x == Wash {
        if m.anchor.is_none() {
            m.anchor = Some(t);
        }
        bump(&mut m.counters[0], run + 1);
        if m.counters[0] >= run {
            m.counters[0] = 0;
            return m.anchor.or(Some(t));
        }
        None
    } else {
        m.counters[0] = 0;
        m.anchor = None;
        None
    }
}

/// Brushing totalling 2 minutes; the timer pauses while brushing stops and
/// resumes when it restarts. Reported once the total is reached, then reset.
fn e7(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let total = m.ta;
    if x == BrushTeeth {
        if m.counters[0] == 0 {
            m.anchor = Some(t);
        }
        bump(&mut m.counters[0], total + 1);
        if m.counters[0] >= total {
            let anchor = m.anchor.unwrap_or(t);
            clear(m);
            return Some(anchor);
        }
    }
    None
}

/// Post-meal rest: work (click/type) starting at least 3 minutes after the
/// last eat. Eating again restarts the clock; working earlier cancels the
/// pending pattern without a report. Locations: 0 idle, 1 resting.
fn e8(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let rest = m.ta;
    match m.location {
        0 => {
            if x == Eat {
                m.location = 1;
                m.counters[0] = 0;
                m.anchor = Some(t);
            }
            None
        }
        _ => {
            if x == Eat {
                m.counters[0] = 0;
                None
            } else if x == ClickMouse || x == Type {
                let rested = m.counters[0] >= rest;
                let anchor = m.anchor.unwrap_or(t);
                clear(m);
                rested.then_some(anchor)
            } else {
                bump(&mut m.counters[0], rest + 1);
                None
            }
        }
    }
}

/// At least 3 typing sessions (start, stop) within 60 s of the first
/// session's start. All session state clears on report or when the clock
/// runs out. Locations: 0 idle, 1 typing, 2 between sessions.
/// counters: [elapsed, sessions_done].
fn e9(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let horizon = m.ta;
    let need = m.tb;
    if m.location != 0 {
        bump(&mut m.counters[0], horizon + 1);
        if m.counters[0] >= horizon {
            clear(m); // clock expired before the third session completed
        }
    }
    match m.location {
        0 => {
            if x == Type {
                m.location = 1;
                m.counters = [0, 0];
                m.anchor = Some(t);
            }
            None
        }
        1 => {
            if x != Type {
                bump(&mut m.counters[1], need + 1);
                if m.counters[1] >= need {
                    let anchor = m.anchor.unwrap_or(t);
                    clear(m);
                    return Some(anchor);
                }
                m.location = 2;
            }
            None
        }
        _ => {
            if x == Type {
                m.location = 1;
            }
            None
        }
    }
}

/// Focused work start: armed by sitting, reported at exactly the 5th mouse
/// click before any walking. Walking disarms and clears. Locations:
/// 0 disarmed, 1 armed. counters: [click_count].
fn e10(m: &mut Monitor, x: AtomicEvent, t: usize) -> Option<usize> {
    let clicks = m.ta;
    match m.location {
        0 => {
            if x == Sit {
                m.location = 1;
                m.counters[0] = 0;
                m.anchor = Some(t);
            }
            None
        }
        _ => match x {
            ClickMouse => {
                bump(&mut m.counters[0], clicks + 1);
                if m.counters[0] >= clicks {
                    let anchor = m.anchor.unwrap_or(t);
                    clear(m);
                    return Some(anchor);
                }
                None
            }
            Walk => {
                clear(m);
                None
            }
            _ => None,
        },
    }
}
