//! Deviation-banded grading of indicator readings.
//!
//! A reading resolves to a percent deviation `δ = 100 (X - Y) / Y` from its
//! standard value. Each (indicator, variant) rubric partitions a contiguous
//! conforming region of δ into up to four level bands; anything outside every
//! band is nonconforming and scores zero.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradingError {
    #[error("standard value is zero for indicator {indicator_id}")]
    ZeroStandard { indicator_id: String },
    #[error("no rubric for indicator {indicator_id}{}", variant_suffix(.variant))]
    MissingRubric { indicator_id: String, variant: Option<String> },
    #[error("score map must satisfy a > b > c > d > 0, got ({a}, {b}, {c}, {d})")]
    InvalidScoreMap { a: f64, b: f64, c: f64, d: f64 },
    #[error("rubric {rubric}: {reason}")]
    InvalidRubric { rubric: String, reason: String },
    #[error("duplicate indicator id {0}")]
    DuplicateIndicator(String),
    #[error("rubric references unknown indicator {0}")]
    UnknownIndicator(String),
}

fn variant_suffix(variant: &Option<String>) -> String {
    variant.as_ref().map(|v| format!(" (variant {v})")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Excellent,
    Good,
    Qualified,
    BasicQualified,
    Nonconforming,
}

impl Level {
    pub const CONFORMING: [Level; 4] =
        [Level::Excellent, Level::Good, Level::Qualified, Level::BasicQualified];

    pub fn is_conforming(self) -> bool {
        self != Level::Nonconforming
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Excellent => "Excellent",
            Level::Good => "Good",
            Level::Qualified => "Qualified",
            Level::BasicQualified => "Basic Qualified",
            Level::Nonconforming => "Nonconforming",
        })
    }
}

/// Scores for the four conforming levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScoreMap", into = "RawScoreMap")]
pub struct LevelScoreMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct RawScoreMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl TryFrom<RawScoreMap> for LevelScoreMap {
    type Error = GradingError;

    fn try_from(r: RawScoreMap) -> Result<Self, Self::Error> {
        Self::new(r.a, r.b, r.c, r.d)
    }
}

impl From<LevelScoreMap> for RawScoreMap {
    fn from(m: LevelScoreMap) -> Self {
        RawScoreMap { a: m.a, b: m.b, c: m.c, d: m.d }
    }
}

impl Default for LevelScoreMap {
    fn default() -> Self {
        Self { a: 100.0, b: 85.0, c: 75.0, d: 60.0 }
    }
}

impl LevelScoreMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, GradingError> {
        if a > b && b > c && c > d && d > 0.0 && a.is_finite() {
            Ok(Self { a, b, c, d })
        } else {
            Err(GradingError::InvalidScoreMap { a, b, c, d })
        }
    }

    pub fn score(&self, level: Level) -> f64 {
        match level {
            Level::Excellent => self.a,
            Level::Good => self.b,
            Level::Qualified => self.c,
            Level::BasicQualified => self.d,
            Level::Nonconforming => 0.0,
        }
    }

    pub fn max_score(&self) -> f64 {
        self.a
    }
}

/// One level's interval over δ. A missing bound is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub level: Level,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub min_inclusive: bool,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub max_inclusive: bool,
}

impl Band {
    pub fn new(level: Level, min: Option<(f64, bool)>, max: Option<(f64, bool)>) -> Self {
        Self {
            level,
            min: min.map(|m| m.0),
            min_inclusive: min.is_some_and(|m| m.1),
            max: max.map(|m| m.0),
            max_inclusive: max.is_some_and(|m| m.1),
        }
    }

    pub fn contains(&self, delta: f64) -> bool {
        let above = match self.min {
            None => true,
            Some(lo) if self.min_inclusive => delta >= lo,
            Some(lo) => delta > lo,
        };
        let below = match self.max {
            None => true,
            Some(hi) if self.max_inclusive => delta <= hi,
            Some(hi) => delta < hi,
        };
        above && below
    }

    fn lower_key(&self) -> f64 {
        self.min.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingRubric {
    pub indicator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub bands: Vec<Band>,
}

impl GradingRubric {
    pub fn new(
        indicator_id: impl Into<String>,
        variant: Option<&str>,
        bands: Vec<Band>,
    ) -> Result<Self, GradingError> {
        let rubric =
            Self { indicator_id: indicator_id.into(), variant: variant.map(str::to_string), bands };
        rubric.validate()?;
        Ok(rubric)
    }

    fn label(&self) -> String {
        format!("{}{}", self.indicator_id, variant_suffix(&self.variant))
    }

    /// Checks that the bands use distinct conforming levels and tile one
    /// contiguous region: sorted by lower bound, each band's upper bound is
    /// the next band's lower bound with exactly one side inclusive.
    pub fn validate(&self) -> Result<(), GradingError> {
        let invalid = |reason: String| GradingError::InvalidRubric { rubric: self.label(), reason };
        if self.bands.is_empty() || self.bands.len() > 4 {
            return Err(invalid(format!("expected 1 to 4 bands, found {}", self.bands.len())));
        }
        let mut seen = BTreeSet::new();
        for band in &self.bands {
            if band.level == Level::Nonconforming {
                return Err(invalid("nonconforming is not a band level".into()));
            }
            if !seen.insert(band.level) {
                return Err(invalid(format!("level {} appears more than once", band.level)));
            }
            let finite = |b: Option<f64>| b.is_none_or(f64::is_finite);
            if !finite(band.min) || !finite(band.max) {
                return Err(invalid(format!("band {} has a non-finite bound", band.level)));
            }
            if let (Some(lo), Some(hi)) = (band.min, band.max) {
                let empty = lo > hi || (lo == hi && !(band.min_inclusive && band.max_inclusive));
                if empty {
                    return Err(invalid(format!("band {} is empty", band.level)));
                }
            }
        }
        let mut sorted: Vec<&Band> = self.bands.iter().collect();
        sorted.sort_by(|x, y| x.lower_key().total_cmp(&y.lower_key()));
        for pair in sorted.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            match (lo.max, hi.min) {
                (Some(a), Some(b)) if a == b => {
                    if lo.max_inclusive == hi.min_inclusive {
                        let what = if lo.max_inclusive { "overlap" } else { "gap" };
                        return Err(invalid(format!(
                            "bands {} and {} {what} at {a}",
                            lo.level, hi.level
                        )));
                    }
                }
                (Some(a), Some(b)) if a < b => {
                    return Err(invalid(format!(
                        "gap between bands {} and {} over ({a}, {b})",
                        lo.level, hi.level
                    )));
                }
                _ => {
                    return Err(invalid(format!("bands {} and {} overlap", lo.level, hi.level)));
                }
            }
        }
        Ok(())
    }

    pub fn level_for(&self, delta: f64) -> Level {
        self.bands
            .iter()
            .find(|b| b.contains(delta))
            .map_or(Level::Nonconforming, |b| b.level)
    }

    /// Union of the bands as `(min, min_inclusive, max, max_inclusive)`.
    pub fn conforming_region(&self) -> (Option<f64>, bool, Option<f64>, bool) {
        let first = self.bands.iter().min_by(|x, y| x.lower_key().total_cmp(&y.lower_key()));
        let last = self
            .bands
            .iter()
            .max_by(|x, y| x.max.unwrap_or(f64::INFINITY).total_cmp(&y.max.unwrap_or(f64::INFINITY)));
        let (first, last) = (first.expect("non-empty"), last.expect("non-empty"));
        (first.min, first.min_inclusive, last.max, last.max_inclusive)
    }

    pub fn band(&self, level: Level) -> Option<&Band> {
        self.bands.iter().find(|b| b.level == level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub id: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub unit: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variant_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReadingValue {
    Deviation { deviation_pct: f64 },
    Measured { measured: f64, standard: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReading {
    pub indicator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(flatten)]
    pub value: ReadingValue,
}

impl IndicatorReading {
    pub fn deviation(indicator_id: &str, variant: Option<&str>, deviation_pct: f64) -> Self {
        Self {
            indicator_id: indicator_id.to_string(),
            variant: variant.map(str::to_string),
            value: ReadingValue::Deviation { deviation_pct },
        }
    }

    pub fn measured(indicator_id: &str, variant: Option<&str>, measured: f64, standard: f64) -> Self {
        Self {
            indicator_id: indicator_id.to_string(),
            variant: variant.map(str::to_string),
            value: ReadingValue::Measured { measured, standard },
        }
    }

    pub fn resolve_deviation(&self) -> Result<f64, GradingError> {
        match self.value {
            ReadingValue::Deviation { deviation_pct } => Ok(deviation_pct),
            ReadingValue::Measured { measured, standard } => deviation(measured, standard)
                .map_err(|_| GradingError::ZeroStandard { indicator_id: self.indicator_id.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedReading {
    pub indicator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub deviation: f64,
    pub level: Level,
    pub score: f64,
}

/// Percent deviation of a measurement from its standard value.
pub fn deviation(measured: f64, standard: f64) -> Result<f64, GradingError> {
    if standard == 0.0 {
        return Err(GradingError::ZeroStandard { indicator_id: String::new() });
    }
    Ok(100.0 * (measured - standard) / standard)
}

pub fn classify(
    reading: &IndicatorReading,
    rubric: &GradingRubric,
    score_map: &LevelScoreMap,
) -> Result<GradedReading, GradingError> {
    if reading.indicator_id != rubric.indicator_id || reading.variant != rubric.variant {
        return Err(GradingError::MissingRubric {
            indicator_id: reading.indicator_id.clone(),
            variant: reading.variant.clone(),
        });
    }
    let delta = reading.resolve_deviation()?;
    let level = rubric.level_for(delta);
    Ok(GradedReading {
        indicator_id: reading.indicator_id.clone(),
        variant: reading.variant.clone(),
        deviation: delta,
        level,
        score: score_map.score(level),
    })
}

/// Indicators, their rubrics and the score map, validated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRubricSet", into = "RawRubricSet")]
pub struct RubricSet {
    id: String,
    indicators: Vec<IndicatorSpec>,
    rubrics: Vec<GradingRubric>,
    score_map: LevelScoreMap,
}

#[derive(Serialize, Deserialize)]
struct RawRubricSet {
    id: String,
    #[serde(default)]
    score_map: Option<LevelScoreMap>,
    indicators: Vec<IndicatorSpec>,
    rubrics: Vec<GradingRubric>,
}

impl TryFrom<RawRubricSet> for RubricSet {
    type Error = GradingError;

    fn try_from(r: RawRubricSet) -> Result<Self, Self::Error> {
        Self::new(r.id, r.indicators, r.rubrics, r.score_map.unwrap_or_default())
    }
}

impl From<RubricSet> for RawRubricSet {
    fn from(s: RubricSet) -> Self {
        RawRubricSet {
            id: s.id,
            score_map: Some(s.score_map),
            indicators: s.indicators,
            rubrics: s.rubrics,
        }
    }
}

impl RubricSet {
    /// Every indicator needs one rubric per variant key, or a single
    /// variant-less rubric when it has no variants.
    pub fn new(
        id: impl Into<String>,
        indicators: Vec<IndicatorSpec>,
        rubrics: Vec<GradingRubric>,
        score_map: LevelScoreMap,
    ) -> Result<Self, GradingError> {
        let id = id.into();
        let mut ids = BTreeSet::new();
        for spec in &indicators {
            if !ids.insert(spec.id.as_str()) {
                return Err(GradingError::DuplicateIndicator(spec.id.clone()));
            }
        }
        let mut keys = BTreeSet::new();
        for rubric in &rubrics {
            rubric.validate()?;
            let Some(spec) = indicators.iter().find(|s| s.id == rubric.indicator_id) else {
                return Err(GradingError::UnknownIndicator(rubric.indicator_id.clone()));
            };
            let variant_ok = match &rubric.variant {
                None => spec.variant_keys.is_empty(),
                Some(v) => spec.variant_keys.contains(v),
            };
            if !variant_ok {
                return Err(GradingError::InvalidRubric {
                    rubric: rubric.label(),
                    reason: "variant not declared by the indicator".into(),
                });
            }
            if !keys.insert((rubric.indicator_id.as_str(), rubric.variant.as_deref())) {
                return Err(GradingError::InvalidRubric {
                    rubric: rubric.label(),
                    reason: "defined more than once".into(),
                });
            }
        }
        for spec in &indicators {
            let wanted: Vec<Option<&str>> = if spec.variant_keys.is_empty() {
                vec![None]
            } else {
                spec.variant_keys.iter().map(|v| Some(v.as_str())).collect()
            };
            for variant in wanted {
                if !keys.contains(&(spec.id.as_str(), variant)) {
                    return Err(GradingError::MissingRubric {
                        indicator_id: spec.id.clone(),
                        variant: variant.map(str::to_string),
                    });
                }
            }
        }
        Ok(Self { id, indicators, rubrics, score_map })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn indicators(&self) -> &[IndicatorSpec] {
        &self.indicators
    }

    pub fn indicator_ids(&self) -> Vec<String> {
        self.indicators.iter().map(|s| s.id.clone()).collect()
    }

    pub fn indicator(&self, id: &str) -> Option<&IndicatorSpec> {
        self.indicators.iter().find(|s| s.id == id)
    }

    pub fn rubrics(&self) -> &[GradingRubric] {
        &self.rubrics
    }

    pub fn score_map(&self) -> &LevelScoreMap {
        &self.score_map
    }

    pub fn with_score_map(mut self, score_map: LevelScoreMap) -> Self {
        self.score_map = score_map;
        self
    }

    pub fn rubric(&self, indicator_id: &str, variant: Option<&str>) -> Result<&GradingRubric, GradingError> {
        self.rubrics
            .iter()
            .find(|r| r.indicator_id == indicator_id && r.variant.as_deref() == variant)
            .ok_or_else(|| GradingError::MissingRubric {
                indicator_id: indicator_id.to_string(),
                variant: variant.map(str::to_string),
            })
    }

    /// Splits a batch-file reading key into indicator id and variant:
    /// either an exact indicator id or `<indicator>_<variant>`.
    pub fn resolve_key<'a>(&'a self, key: &str) -> Option<(&'a str, Option<&'a str>)> {
        if let Some(spec) = self.indicator(key) {
            return Some((&spec.id, None));
        }
        self.indicators.iter().find_map(|spec| {
            let rest = key.strip_prefix(spec.id.as_str())?.strip_prefix('_')?;
            let v = spec.variant_keys.iter().find(|v| v.as_str() == rest)?;
            Some((spec.id.as_str(), Some(v.as_str())))
        })
    }

    pub fn classify(&self, reading: &IndicatorReading) -> Result<GradedReading, GradingError> {
        let rubric = self.rubric(&reading.indicator_id, reading.variant.as_deref())?;
        classify(reading, rubric, &self.score_map)
    }
}

pub const DC_RESISTANCE: &str = "dc_resistance";
pub const INSULATION_MIN: &str = "insulation_min";
pub const INSULATION_AVG: &str = "insulation_avg";
pub const SHEATH_MIN: &str = "sheath_min";

/// Low-voltage power cable rubric with the default (100, 85, 75, 60) scores.
///
/// Conductor DC resistance has a copper (`cu`) variant and aluminum /
/// aluminum-alloy (`al`, `al_alloy`) variants sharing one band set.
pub fn builtin_cable_rubric() -> RubricSet {
    use Level::*;

    let resistance = |e: f64, g: f64, q: f64| {
        vec![
            Band::new(Excellent, None, Some((e, true))),
            Band::new(Good, Some((e, false)), Some((g, true))),
            Band::new(Qualified, Some((g, false)), Some((q, true))),
            Band::new(BasicQualified, Some((q, false)), Some((0.0, true))),
        ]
    };
    let thickness = |e: f64, g: f64, q: f64| {
        vec![
            Band::new(Excellent, Some((e, true)), None),
            Band::new(Good, Some((g, true)), Some((e, false))),
            Band::new(Qualified, Some((q, true)), Some((g, false))),
            Band::new(BasicQualified, Some((0.0, true)), Some((q, false))),
        ]
    };
    let spec = |id: &str, name: &str, unit: &str, variants: &[&str]| IndicatorSpec {
        id: id.to_string(),
        display_name: name.to_string(),
        unit: unit.to_string(),
        variant_keys: variants.iter().map(|v| v.to_string()).collect(),
    };

    let indicators = vec![
        spec(DC_RESISTANCE, "conductor DC resistance at 20 °C", "ohm/km", &["cu", "al", "al_alloy"]),
        spec(INSULATION_MIN, "minimum insulation thickness", "mm", &[]),
        spec(INSULATION_AVG, "average insulation thickness", "mm", &[]),
        spec(SHEATH_MIN, "minimum sheath thickness", "mm", &[]),
    ];
    let rubric = |id: &str, variant: Option<&str>, bands| GradingRubric {
        indicator_id: id.to_string(),
        variant: variant.map(str::to_string),
        bands,
    };
    let rubrics = vec![
        rubric(DC_RESISTANCE, Some("cu"), resistance(-5.0, -3.0, -1.0)),
        rubric(DC_RESISTANCE, Some("al"), resistance(-7.0, -4.0, -1.0)),
        rubric(DC_RESISTANCE, Some("al_alloy"), resistance(-7.0, -4.0, -1.0)),
        rubric(INSULATION_MIN, None, thickness(25.0, 15.0, 5.0)),
        rubric(INSULATION_AVG, None, thickness(25.0, 15.0, 5.0)),
        rubric(SHEATH_MIN, None, thickness(50.0, 30.0, 15.0)),
    ];
    RubricSet::new("builtin:lv-power-cable", indicators, rubrics, LevelScoreMap::default())
        .expect("built-in rubric is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grade(set: &RubricSet, id: &str, variant: Option<&str>, delta: f64) -> GradedReading {
        set.classify(&IndicatorReading::deviation(id, variant, delta)).unwrap()
    }

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(deviation(1.25, 1.0).unwrap(), 25.0);
        assert!((deviation(0.976, 1.0).unwrap() + 2.4).abs() < 1e-12);
        assert!(matches!(deviation(1.0, 0.0), Err(GradingError::ZeroStandard { .. })));
    }

    #[test]
    fn classify_examples() {
        let set = builtin_cable_rubric();
        let g = grade(&set, DC_RESISTANCE, Some("cu"), -2.4);
        assert_eq!((g.level, g.score), (Level::Qualified, 75.0));
        let g = grade(&set, SHEATH_MIN, None, 61.1);
        assert_eq!((g.level, g.score), (Level::Excellent, 100.0));
        let g = grade(&set, DC_RESISTANCE, Some("cu"), -5.0);
        assert_eq!((g.level, g.score), (Level::Excellent, 100.0));
        let g = grade(&set, INSULATION_AVG, None, -0.1);
        assert_eq!((g.level, g.score), (Level::Nonconforming, 0.0));
        assert_eq!(grade(&set, DC_RESISTANCE, Some("al"), -4.0).level, Level::Good);
        let g = grade(&set, SHEATH_MIN, None, 38.3);
        assert_eq!((g.level, g.score), (Level::Good, 85.0));
        assert_eq!(grade(&set, INSULATION_AVG, None, 25.0).level, Level::Excellent);
        assert_eq!(grade(&set, DC_RESISTANCE, Some("cu"), 1.5).level, Level::Nonconforming);
    }

    #[test]
    fn measured_reading_goes_through_deviation() {
        let set = builtin_cable_rubric();
        let r = IndicatorReading::measured(DC_RESISTANCE, Some("cu"), 0.976, 1.0);
        let g = set.classify(&r).unwrap();
        assert!((g.deviation + 2.4).abs() < 1e-12);
        assert_eq!(g.level, Level::Qualified);
        let zero = IndicatorReading::measured(SHEATH_MIN, None, 1.0, 0.0);
        assert_eq!(
            set.classify(&zero),
            Err(GradingError::ZeroStandard { indicator_id: SHEATH_MIN.into() })
        );
    }

    #[test]
    fn missing_rubric() {
        let set = builtin_cable_rubric();
        let r = IndicatorReading::deviation(DC_RESISTANCE, None, -2.0);
        assert!(matches!(set.classify(&r), Err(GradingError::MissingRubric { .. })));
        let r = IndicatorReading::deviation("conductor_twist", None, 0.0);
        assert!(matches!(set.classify(&r), Err(GradingError::MissingRubric { .. })));
        let rubric = set.rubric(SHEATH_MIN, None).unwrap();
        let wrong = IndicatorReading::deviation(INSULATION_MIN, None, 3.0);
        assert!(classify(&wrong, rubric, set.score_map()).is_err());
    }

    #[test]
    fn score_map_ordering_enforced() {
        assert!(LevelScoreMap::new(100.0, 85.0, 75.0, 60.0).is_ok());
        assert!(LevelScoreMap::new(100.0, 85.0, 85.0, 60.0).is_err());
        assert!(LevelScoreMap::new(4.0, 3.0, 2.0, 0.0).is_err());
        assert!(serde_json::from_str::<LevelScoreMap>(r#"{"a":1,"b":2,"c":3,"d":4}"#).is_err());
    }

    #[test]
    fn rubric_validation_catches_gaps_and_overlaps() {
        use Level::*;
        let gap = GradingRubric::new(
            "x",
            None,
            vec![
                Band::new(Excellent, Some((10.0, true)), None),
                Band::new(Good, Some((0.0, true)), Some((9.0, false))),
            ],
        );
        assert!(matches!(gap, Err(GradingError::InvalidRubric { .. })));
        let touching_gap = GradingRubric::new(
            "x",
            None,
            vec![
                Band::new(Excellent, Some((10.0, false)), None),
                Band::new(Good, Some((0.0, true)), Some((10.0, false))),
            ],
        );
        assert!(touching_gap.unwrap_err().to_string().contains("gap"));
        let overlap = GradingRubric::new(
            "x",
            None,
            vec![
                Band::new(Excellent, Some((10.0, true)), None),
                Band::new(Good, Some((0.0, true)), Some((10.0, true))),
            ],
        );
        assert!(overlap.unwrap_err().to_string().contains("overlap"));
        let dup = GradingRubric::new(
            "x",
            None,
            vec![
                Band::new(Good, Some((10.0, true)), None),
                Band::new(Good, Some((0.0, true)), Some((10.0, false))),
            ],
        );
        assert!(dup.is_err());
        let nested = GradingRubric::new(
            "x",
            None,
            vec![
                Band::new(Excellent, None, None),
                Band::new(Good, Some((0.0, true)), Some((10.0, false))),
            ],
        );
        assert!(nested.is_err());
        for r in builtin_cable_rubric().rubrics() {
            assert!(r.validate().is_ok());
        }
    }

    #[test]
    fn rubric_set_requires_every_variant() {
        let full = builtin_cable_rubric();
        let mut rubrics = full.rubrics().to_vec();
        rubrics.retain(|r| r.variant.as_deref() != Some("al_alloy"));
        let err = RubricSet::new("t", full.indicators().to_vec(), rubrics, LevelScoreMap::default());
        assert!(matches!(err, Err(GradingError::MissingRubric { .. })));

        let mut indicators = full.indicators().to_vec();
        indicators.push(indicators[1].clone());
        let err = RubricSet::new("t", indicators, full.rubrics().to_vec(), LevelScoreMap::default());
        assert!(matches!(err, Err(GradingError::DuplicateIndicator(_))));
    }

    #[test]
    fn key_resolution() {
        let set = builtin_cable_rubric();
        assert_eq!(set.resolve_key("dc_resistance_cu"), Some((DC_RESISTANCE, Some("cu"))));
        assert_eq!(set.resolve_key("dc_resistance_al_alloy"), Some((DC_RESISTANCE, Some("al_alloy"))));
        assert_eq!(set.resolve_key("sheath_min"), Some((SHEATH_MIN, None)));
        assert_eq!(set.resolve_key("dc_resistance_fe"), None);
        assert_eq!(set.resolve_key("sheath_min_cu"), None);
    }

    #[test]
    fn conforming_region_spans_bands() {
        let set = builtin_cable_rubric();
        let cu = set.rubric(DC_RESISTANCE, Some("cu")).unwrap();
        assert_eq!(cu.conforming_region(), (None, false, Some(0.0), true));
        let sheath = set.rubric(SHEATH_MIN, None).unwrap();
        assert_eq!(sheath.conforming_region(), (Some(0.0), true, None, false));
    }

    #[test]
    fn rubric_set_json_round_trip() {
        let set = builtin_cable_rubric();
        let text = serde_json::to_string(&set).unwrap();
        let back: RubricSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);
    }
}
