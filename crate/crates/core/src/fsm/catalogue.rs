//! Machine-readable description of every monitor: locations, counters,
//! clamps, and thresholds in both seconds and ticks. Consumed by docs, the
//! CLI `catalogue` subcommand, and external verifiers of the automaton dumps.

use super::monitors;
use crate::event::{CeLabel, WindowSpec};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CounterDescriptor {
    pub name: &'static str,
    /// Counters saturate at this value.
    pub clamp: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdDescriptor {
    pub name: &'static str,
    /// Present for duration thresholds; absent for plain counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<u32>,
    /// Value the monitor actually compares against (ticks, or a count).
    pub ticks: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorDescriptor {
    pub ce: u8,
    pub name: &'static str,
    pub rule: &'static str,
    pub locations: Vec<&'static str>,
    pub counters: Vec<CounterDescriptor>,
    pub thresholds: Vec<ThresholdDescriptor>,
}

/// Descriptions of all ten monitors for the given window size.
pub fn catalogue(window: WindowSpec) -> Vec<MonitorDescriptor> {
    CeLabel::positives().map(|ce| describe(ce, window)).collect()
}

fn describe(ce: CeLabel, window: WindowSpec) -> MonitorDescriptor {
    let (ta, tb) = monitors::thresholds(ce, window);
    let dur = |name, seconds, ticks| ThresholdDescriptor {
        name,
        seconds: Some(seconds),
        ticks,
    };
    let count = |name, ticks| ThresholdDescriptor {
        name,
        seconds: None,
        ticks,
    };
    match ce.id() {
        1 => MonitorDescriptor {
            ce: 1,
            name: "workspace_sanitary_violation",
            rule: "working (click or type) without 20 s of consecutive handwashing after using the restroom",
            locations: vec!["idle", "after_restroom"],
            counters: vec![CounterDescriptor { name: "wash_counter", clamp: ta + 1 }],
            thresholds: vec![dur("wash", monitors::E1_WASH_S, ta)],
        },
        2 => MonitorDescriptor {
            ce: 2,
            name: "unwashed_meal",
            rule: "a meal session starting without a 20 s consecutive handwash within the previous 2 minutes",
            locations: vec!["unclean", "washing", "clean_hands", "meal_session"],
            counters: vec![
                CounterDescriptor { name: "wash_count", clamp: ta + 1 },
                CounterDescriptor { name: "time_since_wash", clamp: tb + 1 },
            ],
            thresholds: vec![
                dur("wash", monitors::E2_WASH_S, ta),
                dur("stale", monitors::E2_STALE_S, tb),
            ],
        },
        3 => MonitorDescriptor {
            ce: 3,
            name: "inadequate_brushing",
            rule: "brushing totalling less than 2 minutes once stopped for more than a 10 s grace period",
            locations: vec!["idle", "brushing", "paused"],
            counters: vec![
                CounterDescriptor { name: "brush_counter", clamp: ta + 1 },
                CounterDescriptor { name: "time_since_brush", clamp: tb + 1 },
            ],
            thresholds: vec![
                dur("brush_total", monitors::E3_TOTAL_S, ta),
                dur("grace", monitors::E3_GRACE_S, tb),
            ],
        },
        4 => MonitorDescriptor {
            ce: 4,
            name: "routine_sequence",
            rule: "brush, then eat and drink in either order, with only non-key events between",
            locations: vec!["idle", "brush_seen", "brush_eat_seen", "brush_drink_seen"],
            counters: vec![],
            thresholds: vec![],
        },
        5 => MonitorDescriptor {
            ce: 5,
            name: "work_then_break",
            rule: "sit, then type or click, then walk, with the allowed don't-cares between",
            locations: vec!["idle", "seated", "working"],
            counters: vec![],
            thresholds: vec![],
        },
        6 => MonitorDescriptor {
            ce: 6,
            name: "sufficient_washing",
            rule: "washing lasting 30 s consecutively",
            locations: vec!["counting"],
            counters: vec![CounterDescriptor { name: "wash_run", clamp: ta + 1 }],
            thresholds: vec![dur("run", monitors::E6_RUN_S, ta)],
        },
        7 => MonitorDescriptor {
            ce: 7,
            name: "adequate_brushing",
            rule: "brushing totalling 2 minutes, with the timer paused during interruptions",
            locations: vec!["counting"],
            counters: vec![CounterDescriptor { name: "brush_total", clamp: ta + 1 }],
            thresholds: vec![dur("total", monitors::E7_TOTAL_S, ta)],
        },
        8 => MonitorDescriptor {
            ce: 8,
            name: "post_meal_rest",
            rule: "work starting at least 3 minutes after the last eat",
            locations: vec!["idle", "resting"],
            counters: vec![CounterDescriptor { name: "time_since_eat", clamp: ta + 1 }],
            thresholds: vec![dur("rest", monitors::E8_REST_S, ta)],
        },
        9 => MonitorDescriptor {
            ce: 9,
            name: "active_typing",
            rule: "at least 3 typing sessions within 60 s of the first session's start",
            locations: vec!["idle", "typing", "between_sessions"],
            counters: vec![
                CounterDescriptor { name: "elapsed", clamp: ta + 1 },
                CounterDescriptor { name: "sessions_done", clamp: tb + 1 },
            ],
            thresholds: vec![
                dur("horizon", monitors::E9_HORIZON_S, ta),
                count("sessions", tb),
            ],
        },
        10 => MonitorDescriptor {
            ce: 10,
            name: "focused_work_start",
            rule: "exactly 5 mouse clicks after sitting and before walking",
            locations: vec!["disarmed", "armed"],
            counters: vec![CounterDescriptor { name: "click_count", clamp: ta + 1 }],
            thresholds: vec![count("clicks", ta)],
        },
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_covers_all_positive_classes() {
        let cat = catalogue(WindowSpec::default());
        assert_eq!(cat.len(), 10);
        let ids: Vec<u8> = cat.iter().map(|d| d.ce).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<u8>>());
        // tick conversion at the default 5 s window
        let e2 = &cat[1];
        assert_eq!(e2.thresholds[0].ticks, 4);
        assert_eq!(e2.thresholds[1].ticks, 24);
        let json = serde_json::to_string(&cat).unwrap();
        assert!(json.contains("\"time_since_wash\""));
    }
}
