//! Atomic-event vocabulary, complex-event labels, and window time semantics.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Number of atomic-event symbols.
pub const AE_COUNT: usize = 9;

/// Number of complex-event classes including the default `e0`.
pub const CE_COUNT: usize = 11;

/// A short-duration, low-level activity symbol observed once per window.
///
/// The integer encoding `0..=8` in declaration order is stable and is used
/// in every file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum AtomicEvent {
    Walk = 0,
    Sit = 1,
    BrushTeeth = 2,
    ClickMouse = 3,
    Drink = 4,
    Eat = 5,
    Type = 6,
    FlushToilet = 7,
    Wash = 8,
}

/// Unknown atomic-event name.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown atomic event symbol: {0:?}")]
pub struct ParseSymbolError(pub String);

impl AtomicEvent {
    /// All symbols in encoding order.
    pub const ALL: [AtomicEvent; AE_COUNT] = [
        AtomicEvent::Walk,
        AtomicEvent::Sit,
        AtomicEvent::BrushTeeth,
        AtomicEvent::ClickMouse,
        AtomicEvent::Drink,
        AtomicEvent::Eat,
        AtomicEvent::Type,
        AtomicEvent::FlushToilet,
        AtomicEvent::Wash,
    ];

    /// Stable integer code, `0..=8`.
    #[inline]
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Inverse of [`AtomicEvent::code`].
    #[inline]
    pub fn from_code(code: u8) -> Option<AtomicEvent> {
        Self::ALL.get(code as usize).copied()
    }

    /// Canonical lowercase name used in file formats.
    pub fn name(self) -> &'static str {
        match self {
            AtomicEvent::Walk => "walk",
            AtomicEvent::Sit => "sit",
            AtomicEvent::BrushTeeth => "brush_teeth",
            AtomicEvent::ClickMouse => "click_mouse",
            AtomicEvent::Drink => "drink",
            AtomicEvent::Eat => "eat",
            AtomicEvent::Type => "type",
            AtomicEvent::FlushToilet => "flush_toilet",
            AtomicEvent::Wash => "wash",
        }
    }

    /// Case-sensitive exact match on the 9 canonical names.
    pub fn parse(text: &str) -> Result<AtomicEvent, ParseSymbolError> {
        match text {
            "walk" => Ok(AtomicEvent::Walk),
            "sit" => Ok(AtomicEvent::Sit),
            "brush_teeth" => Ok(AtomicEvent::BrushTeeth),
            "click_mouse" => Ok(AtomicEvent::ClickMouse),
            "drink" => Ok(AtomicEvent::Drink),
            "eat" => Ok(AtomicEvent::Eat),
            "type" => Ok(AtomicEvent::Type),
            "flush_toilet" => Ok(AtomicEvent::FlushToilet),
            "wash" => Ok(AtomicEvent::Wash),
            other => Err(ParseSymbolError(other.to_string())),
        }
    }
}

impl fmt::Display for AtomicEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AtomicEvent {
    type Err = ParseSymbolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AtomicEvent::parse(s)
    }
}

impl Serialize for AtomicEvent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AtomicEvent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        AtomicEvent::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A complex-event class label. `e0` is the unique "no event" label; `e1..e10`
/// are the positive classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CeLabel(u8);

impl CeLabel {
    pub const E0: CeLabel = CeLabel(0);

    /// Construct from the class id `0..=10`.
    pub fn new(id: u8) -> Option<CeLabel> {
        (id < CE_COUNT as u8).then_some(CeLabel(id))
    }

    /// The ten positive classes `e1..e10`, in order.
    pub fn positives() -> impl Iterator<Item = CeLabel> {
        (1..CE_COUNT as u8).map(CeLabel)
    }

    /// All eleven classes `e0..e10`, in order.
    pub fn all() -> impl Iterator<Item = CeLabel> {
        (0..CE_COUNT as u8).map(CeLabel)
    }

    #[inline]
    pub fn id(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// True for `e1..e10`.
    #[inline]
    pub fn is_event(self) -> bool {
        self.0 != 0
    }
}

impl fmt::Display for CeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl std::str::FromStr for CeLabel {
    type Err = String;

    /// Accepts `"e3"` or a bare id `"3"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix('e').unwrap_or(s);
        digits
            .parse::<u8>()
            .ok()
            .and_then(CeLabel::new)
            .ok_or_else(|| format!("invalid complex event label: {s:?} (expected e0..e10)"))
    }
}

/// Fixed, non-overlapping window size used to discretize time.
///
/// Rule durations are written in seconds and converted to whole windows
/// ("ticks") by ceiling division, so an "at least N seconds" rule stays an
/// at-least rule after discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_seconds: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { window_seconds: 5 }
    }
}

impl WindowSpec {
    pub fn new(window_seconds: u32) -> WindowSpec {
        assert!(window_seconds >= 1, "window_seconds must be >= 1");
        WindowSpec { window_seconds }
    }

    /// Number of whole windows covering `seconds`: `ceil(seconds / window_seconds)`.
    #[inline]
    pub fn ticks(&self, seconds: u64) -> u64 {
        seconds.div_ceil(self.window_seconds as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_canonical_names() {
        assert_eq!(AtomicEvent::parse("wash").unwrap(), AtomicEvent::Wash);
        assert_eq!(
            AtomicEvent::parse("flush_toilet").unwrap(),
            AtomicEvent::FlushToilet
        );
        assert_eq!(
            AtomicEvent::parse("run"),
            Err(ParseSymbolError("run".to_string()))
        );
        // case-sensitive, no trimming
        assert!(AtomicEvent::parse("Wash").is_err());
        assert!(AtomicEvent::parse(" wash").is_err());
    }

    #[test]
    fn encoding_is_frozen() {
        // Golden table; these codes appear in files and must never change.
        let golden = [
            ("walk", 0u8),
            ("sit", 1),
            ("brush_teeth", 2),
            ("click_mouse", 3),
            ("drink", 4),
            ("eat", 5),
            ("type", 6),
            ("flush_toilet", 7),
            ("wash", 8),
        ];
        for (name, code) in golden {
            let ae = AtomicEvent::parse(name).unwrap();
            assert_eq!(ae.code(), code, "code drift for {name}");
            assert_eq!(AtomicEvent::from_code(code), Some(ae));
            assert_eq!(ae.name(), name);
        }
        assert_eq!(AtomicEvent::from_code(9), None);
    }

    #[test]
    fn ticks_ceiling() {
        let w = WindowSpec::default();
        assert_eq!(w.ticks(20), 4);
        assert_eq!(w.ticks(120), 24);
        assert_eq!(w.ticks(12), 3);
        assert_eq!(w.ticks(0), 0);
        assert_eq!(w.ticks(1), 1);
    }

    #[test]
    fn ticks_monotone() {
        let w = WindowSpec::new(5);
        let mut prev = 0;
        for s in 0..500 {
            let t = w.ticks(s);
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn ce_label_bounds() {
        assert!(CeLabel::new(10).is_some());
        assert!(CeLabel::new(11).is_none());
        assert_eq!("e7".parse::<CeLabel>().unwrap(), CeLabel::new(7).unwrap());
        assert_eq!("4".parse::<CeLabel>().unwrap(), CeLabel::new(4).unwrap());
        assert!("e11".parse::<CeLabel>().is_err());
        assert!(!CeLabel::E0.is_event());
        assert!(CeLabel::new(1).unwrap().is_event());
        assert_eq!(CeLabel::positives().count(), 10);
        assert_eq!(CeLabel::all().count(), 11);
    }
}
