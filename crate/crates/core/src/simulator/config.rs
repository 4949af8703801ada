//! Generator config schema (TOML) and validation.

use super::SimError;
use crate::event::AtomicEvent;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Current config schema version.
pub const CONFIG_VERSION: u32 = 1;

fn default_noise() -> f64 {
    0.02
}

fn default_window() -> u32 {
    5
}

/// One timed step of an activity pattern. `opt` makes the step probabilistic
/// (included with the given probability); absent means always included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub ae: AtomicEvent,
    /// Duration range in seconds, inclusive.
    pub dur_s: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt: Option<f64>,
}

/// A named activity: a sequence of steps emitted in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityConfig {
    pub name: String,
    pub steps: Vec<StepConfig>,
}

/// A semantic group of related activities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfig {
    /// Session duration range in seconds, inclusive.
    pub duration_s: [u32; 2],
    pub activities: Vec<ActivityConfig>,
    /// Weighted successor activities, keyed by the current activity. An
    /// activity with no row (or an all-zero row) falls back to a uniform
    /// choice over the group's activities.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub transitions: BTreeMap<String, BTreeMap<String, f64>>,
    /// Activities whose selection weight drops to zero after their first use
    /// within a group session.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub once_only: Vec<String>,
}

/// Keeps a target group from going missing: once `max_windows_without`
/// windows elapse outside the group, the next session is forced into it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeConfig {
    pub group: String,
    pub max_windows_without: u32,
}

/// A complete generator description. Maps are ordered (BTreeMap) so that
/// sampling visits entries in a platform-independent order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub version: u32,
    pub name: String,
    #[serde(default = "default_window")]
    pub window_seconds: u32,
    /// Per-window probability of replacing the symbol with a uniformly
    /// random other symbol from this config's vocabulary.
    #[serde(default = "default_noise")]
    pub noise_rate: f64,
    pub initial_groups: BTreeMap<String, f64>,
    /// Weighted successor groups; a group with no row falls back to the
    /// initial distribution.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub group_transitions: BTreeMap<String, BTreeMap<String, f64>>,
    pub groups: BTreeMap<String, GroupConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<GuaranteeConfig>,
}

impl GeneratorConfig {
    pub fn from_toml(text: &str) -> Result<GeneratorConfig, SimError> {
        let config: GeneratorConfig =
            toml::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Every symbol any activity step can emit.
    pub fn vocabulary(&self) -> BTreeSet<AtomicEvent> {
        self.groups
            .values()
            .flat_map(|g| g.activities.iter())
            .flat_map(|a| a.steps.iter())
            .map(|s| s.ae)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.name.is_empty() {
            return bad("config name is empty".into());
        }
        if self.window_seconds == 0 {
            return bad("window_seconds must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return bad(format!("noise_rate {} outside [0, 1]", self.noise_rate));
        }
        if self.groups.is_empty() {
            return bad("no groups defined".into());
        }
        check_weights("initial_groups", &self.initial_groups, |g| {
            self.groups.contains_key(g)
        })?;
        for (from, row) in &self.group_transitions {
            if !self.groups.contains_key(from) {
                return bad(format!("group_transitions references unknown group {from:?}"));
            }
            check_weights(&format!("group_transitions.{from}"), row, |g| {
                self.groups.contains_key(g)
            })?;
        }
        for (name, group) in &self.groups {
            if group.activities.is_empty() {
                return bad(format!("group {name:?} has no activities"));
            }
            if group.duration_s[0] == 0 || group.duration_s[0] > group.duration_s[1] {
                return bad(format!("group {name:?}: bad duration range {:?}", group.duration_s));
            }
            let mut names = BTreeSet::new();
            for act in &group.activities {
                if !names.insert(act.name.as_str()) {
                    return bad(format!("group {name:?}: duplicate activity {:?}", act.name));
                }
                if act.steps.is_empty() {
                    return bad(format!("activity {:?} has no steps", act.name));
                }
                for step in &act.steps {
                    if step.dur_s[0] == 0 || step.dur_s[0] > step.dur_s[1] {
                        return bad(format!(
                            "activity {:?}: bad step duration {:?}",
                            act.name, step.dur_s
                        ));
                    }
                    if let Some(p) = step.opt {
                        if !(0.0..=1.0).contains(&p) {
                            return bad(format!("activity {:?}: opt {p} outside [0, 1]", act.name));
                        }
                    }
                }
            }
            for once in &group.once_only {
                if !names.contains(once.as_str()) {
                    return bad(format!("group {name:?}: once_only references unknown {once:?}"));
                }
            }
            for (from, row) in &group.transitions {
                if !names.contains(from.as_str()) {
                    return bad(format!("group {name:?}: transition from unknown {from:?}"));
                }
                for (to, w) in row {
                    if !names.contains(to.as_str()) {
                        return bad(format!("group {name:?}: transition to unknown {to:?}"));
                    }
                    if !w.is_finite() || *w < 0.0 {
                        return bad(format!("group {name:?}: weight {w} for {to:?}"));
                    }
                }
            }
        }
        if let Some(g) = &self.guarantee {
            if !self.groups.contains_key(&g.group) {
                return bad(format!("guarantee references unknown group {:?}", g.group));
            }
            if g.max_windows_without == 0 {
                return bad("guarantee.max_windows_without must be >= 1".into());
            }
        }
        Ok(())
    }

    /// Scales temporal structure for out-of-distribution trace lengths:
    /// group session durations, the guarantee horizon, and the durations of
    /// non-threshold-bearing activity steps are multiplied by `factor`.
    /// Steps emitting the threshold-bearing symbols keep their durations —
    /// wash and brush feed duration thresholds, and mouse clicks feed a
    /// count threshold — so every rule stays satisfiable at any factor.
    pub fn stretch(&self, factor: f64) -> GeneratorConfig {
        assert!(factor >= 1.0, "stretch factor must be >= 1");
        let scale = |s: u32| -> u32 { ((s as f64) * factor).round().max(1.0) as u32 };
        let keeps_duration = |ae: AtomicEvent| {
            matches!(
                ae,
                AtomicEvent::Wash | AtomicEvent::BrushTeeth | AtomicEvent::ClickMouse
            )
        };
        let mut out = self.clone();
        for group in out.groups.values_mut() {
            group.duration_s = [scale(group.duration_s[0]), scale(group.duration_s[1])];
            for act in &mut group.activities {
                for step in &mut act.steps {
                    if !keeps_duration(step.ae) {
                        step.dur_s = [scale(step.dur_s[0]), scale(step.dur_s[1])];
                    }
                }
            }
        }
        if let Some(g) = &mut out.guarantee {
            g.max_windows_without = scale(g.max_windows_without);
        }
        out
    }
}

fn check_weights<F: Fn(&str) -> bool>(
    context: &str,
    weights: &BTreeMap<String, f64>,
    known: F,
) -> Result<(), SimError> {
    if weights.is_empty() {
        return Err(SimError::InvalidConfig(format!("{context}: empty weight map")));
    }
    let mut total = 0.0;
    for (name, w) in weights {
        if !known(name) {
            return Err(SimError::InvalidConfig(format!(
                "{context}: unknown group {name:?}"
            )));
        }
        if !w.is_finite() || *w < 0.0 {
            return Err(SimError::InvalidConfig(format!("{context}: weight {w} for {name:?}")));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(SimError::InvalidConfig(format!(
            "{context}: weights sum to {total}, cannot normalize"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"
            version = 1
            name = "mini"

            [initial_groups]
            idle = 1.0

            [groups.idle]
            duration_s = [10, 30]
            [[groups.idle.activities]]
            name = "stroll"
            steps = [{ ae = "walk", dur_s = [5, 15] }]
        "#
    }

    #[test]
    fn parses_minimal_config() {
        let c = GeneratorConfig::from_toml(minimal()).unwrap();
        assert_eq!(c.noise_rate, 0.02);
        assert_eq!(c.window_seconds, 5);
        assert_eq!(c.vocabulary().len(), 1);
    }

    #[test]
    fn rejects_unknown_references() {
        let broken = minimal().replace("idle = 1.0", "elsewhere = 1.0");
        assert!(matches!(
            GeneratorConfig::from_toml(&broken),
            Err(SimError::InvalidConfig(_))
        ));
    }

    #[test]
    fn rejects_non_normalizable_weights() {
        let broken = minimal().replace("idle = 1.0", "idle = 0.0");
        let err = GeneratorConfig::from_toml(&broken).unwrap_err();
        assert!(err.to_string().contains("cannot normalize"));
    }

    #[test]
    fn stretch_identity_at_factor_one() {
        let c = GeneratorConfig::from_toml(minimal()).unwrap();
        assert_eq!(c.stretch(1.0), c);
    }

    #[test]
    fn stretch_scales_groups_but_not_key_steps() {
        let text = r#"
            version = 1
            name = "s"
            [initial_groups]
            g = 1.0
            [groups.g]
            duration_s = [10, 30]
            [[groups.g.activities]]
            name = "w"
            steps = [{ ae = "wash", dur_s = [10, 30] }, { ae = "walk", dur_s = [10, 20] }]
        "#;
        let c = GeneratorConfig::from_toml(text).unwrap();
        let s = c.stretch(3.0);
        let g = &s.groups["g"];
        assert_eq!(g.duration_s, [30, 90]);
        assert_eq!(g.activities[0].steps[0].dur_s, [10, 30]); // wash keeps its range
        assert_eq!(g.activities[0].steps[1].dur_s, [30, 60]); // walk scales
    }

    #[test]
    fn toml_roundtrip() {
        let c = GeneratorConfig::from_toml(minimal()).unwrap();
        let back = GeneratorConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
