//! Cross-module invariants that don't belong to a single unit.

use cetrace::event::{AtomicEvent, CeLabel, WindowSpec};
use cetrace::fsm::{label_trace, label_trace_multi, Monitor, MonitorEnsemble};
use cetrace::probfsm::{AutomatonSet, BeliefState, ExplicitAutomaton};
use cetrace::simulator::{generate, mix_seed, GeneratorConfig};
use cetrace::trace::{ConceptTrace, LabeledTrace, ProbTrace};

const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");
const OFFICE_CONFIG: &str = include_str!("../../../configs/variants/v01_office_day.toml");

const VARIANTS: [&str; 10] = [
    include_str!("../../../configs/variants/v01_office_day.toml"),
    include_str!("../../../configs/variants/v02_meal_hygiene.toml"),
    include_str!("../../../configs/variants/v03_brushing_routine.toml"),
    include_str!("../../../configs/variants/v04_morning_routine.toml"),
    include_str!("../../../configs/variants/v05_desk_day.toml"),
    include_str!("../../../configs/variants/v06_wash_focus.toml"),
    include_str!("../../../configs/variants/v07_long_brush.toml"),
    include_str!("../../../configs/variants/v08_lunch_rest.toml"),
    include_str!("../../../configs/variants/v09_typing_bursts.toml"),
    include_str!("../../../configs/variants/v10_click_work.toml"),
];

#[test]
fn core_types_are_send_and_sync() {
    fn check<T: Send + Sync>() {}
    check::<AtomicEvent>();
    check::<CeLabel>();
    check::<WindowSpec>();
    check::<ConceptTrace>();
    check::<LabeledTrace>();
    check::<ProbTrace>();
    check::<Monitor>();
    check::<MonitorEnsemble>();
    check::<ExplicitAutomaton>();
    check::<AutomatonSet>();
    check::<BeliefState>();
    check::<GeneratorConfig>();
}

#[test]
fn online_labels_are_sparse() {
    // On default 5-minute traces the non-default label fraction stays below
    // 10% in expectation.
    let config = GeneratorConfig::from_toml(DEFAULT_CONFIG).unwrap();
    let mut positive = 0usize;
    let mut windows = 0usize;
    let mut seed = 0u64;
    let mut labeled_count = 0;
    while labeled_count < 300 {
        let trace = generate(&config, 300, mix_seed(777, seed)).unwrap();
        seed += 1;
        let Ok(labeled) = label_trace(&trace) else {
            continue;
        };
        labeled_count += 1;
        positive += labeled.labels.iter().filter(|l| l.is_event()).count();
        windows += labeled.labels.len();
    }
    let fraction = positive as f64 / windows as f64;
    assert!(
        fraction < 0.10,
        "positive-label fraction {fraction:.4} is not sparse"
    );
}

#[test]
fn office_config_stays_in_its_vocabulary() {
    // The six-activity office config only ever emits its own six symbols,
    // noise included.
    let config = GeneratorConfig::from_toml(OFFICE_CONFIG).unwrap();
    let vocab = config.vocabulary();
    assert_eq!(vocab.len(), 6);
    assert!(!vocab.contains(&AtomicEvent::Eat));
    for seed in 0..50 {
        let trace = generate(&config, 300, seed).unwrap();
        assert_eq!(trace.len(), 60);
        for x in &trace.events {
            assert!(vocab.contains(x), "symbol {x} outside the config vocabulary");
        }
    }
}

#[test]
fn variant_suite_reaches_every_class() {
    // 200 traces from each of the ten shipped configs: every positive class
    // appears in at least 1% of the 2,000 traces.
    let mut present = [0usize; 11];
    let mut total = 0usize;
    for (i, text) in VARIANTS.iter().enumerate() {
        let config = GeneratorConfig::from_toml(text).expect("variant config parses");
        for k in 0..200u64 {
            let trace = generate(&config, 300, mix_seed(99, i as u64 * 1000 + k)).unwrap();
            let multi = label_trace_multi(&trace).unwrap();
            let mut seen = [false; 11];
            for c in &multi.completions {
                seen[c.ce.index()] = true;
            }
            for (slot, s) in present.iter_mut().zip(seen) {
                *slot += s as usize;
            }
            total += 1;
        }
    }
    for ce in 1..11 {
        let pct = 100.0 * present[ce] as f64 / total as f64;
        assert!(
            pct >= 1.0,
            "e{ce} appears in only {pct:.2}% of the {total}-trace suite"
        );
    }
}

#[test]
fn reachable_state_counts_are_stable() {
    // Frozen per-monitor reachable state counts at the default window; a
    // change here means monitor semantics changed.
    let window = WindowSpec::default();
    let counts: Vec<(u8, usize)> = CeLabel::positives()
        .map(|ce| {
            (
                ce.id(),
                cetrace::probfsm::finitize(ce, window).unwrap().n_states(),
            )
        })
        .collect();
    let expected: Vec<(u8, usize)> = vec![
        (1, 6),
        (2, 58),
        (3, 77),
        (4, 5),
        (5, 4),
        (6, 7),
        (7, 25),
        (8, 40),
        (9, 52),
        (10, 7),
    ];
    assert_eq!(counts, expected);
}
