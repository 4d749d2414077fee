//! Conformance-gated weighted quality scores and sampling plans.
//!
//! `M = J · Σ W_i G_i`, where `J` drops to zero as soon as one reading is
//! nonconforming. Items are ranked by ascending `M` and the first `k` are
//! sent for testing, so nonconforming items (`M = 0`) are always selected
//! first.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ahp::WeightVector;
use crate::grading::{GradedReading, GradingError, IndicatorReading, Level, RubricSet};

/// Tolerance on `Σ W_i = 1` for id-keyed weights read from files.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("item {item_id}: missing reading for indicator {indicator_id}")]
    MissingReading { item_id: String, indicator_id: String },
    #[error("item {item_id}: more than one reading for indicator {indicator_id}")]
    DuplicateReading { item_id: String, indicator_id: String },
    #[error("item {item_id}: reading for unknown indicator {indicator_id}")]
    UnknownIndicator { item_id: String, indicator_id: String },
    #[error("item {item_id}: {source}")]
    Grading { item_id: String, source: GradingError },
    #[error("duplicate item id {0}")]
    DuplicateItemId(String),
    #[error("weights do not match the rubric indicators: {0}")]
    WeightMismatch(String),
    #[error("{} item(s) failed: {}", .0.len(), join(.0))]
    Batch(Vec<ScoringError>),
}

fn join(errors: &[ScoringError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorWeight {
    pub indicator_id: String,
    pub weight: f64,
}

/// Weights keyed by indicator id. Scoring never pairs weights with
/// readings by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<IndicatorWeight>", into = "Vec<IndicatorWeight>")]
pub struct IndicatorWeights {
    entries: Vec<IndicatorWeight>,
}

impl IndicatorWeights {
    pub fn new(ids: &[String], weights: &WeightVector) -> Result<Self, ScoringError> {
        if ids.len() != weights.len() {
            return Err(ScoringError::WeightMismatch(format!(
                "{} ids for {} weights",
                ids.len(),
                weights.len()
            )));
        }
        let entries = ids
            .iter()
            .zip(weights.as_slice())
            .map(|(id, &weight)| IndicatorWeight { indicator_id: id.clone(), weight })
            .collect();
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<IndicatorWeight>) -> Result<Self, ScoringError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.indicator_id.as_str()) {
                return Err(ScoringError::WeightMismatch(format!(
                    "indicator {} listed twice",
                    e.indicator_id
                )));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(ScoringError::WeightMismatch(format!(
                    "weight {} for {} is negative or not finite",
                    e.weight, e.indicator_id
                )));
            }
        }
        let sum: f64 = entries.iter().map(|e| e.weight).sum();
        if entries.is_empty() || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ScoringError::WeightMismatch(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { entries })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self, ScoringError> {
        Self::from_entries(
            pairs
                .into_iter()
                .map(|(id, weight)| IndicatorWeight { indicator_id: id.into(), weight })
                .collect(),
        )
    }

    pub fn uniform(ids: &[String]) -> Result<Self, ScoringError> {
        Self::new(ids, &WeightVector::uniform(ids.len()))
    }

    pub fn get(&self, indicator_id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.indicator_id == indicator_id).map(|e| e.weight)
    }

    pub fn entries(&self) -> &[IndicatorWeight] {
        &self.entries
    }

    /// Checks that the weights name exactly the rubric's indicators.
    pub fn check_against(&self, rubrics: &RubricSet) -> Result<(), ScoringError> {
        let ours: BTreeSet<&str> = self.entries.iter().map(|e| e.indicator_id.as_str()).collect();
        let theirs: BTreeSet<&str> = rubrics.indicators().iter().map(|s| s.id.as_str()).collect();
        if ours == theirs {
            return Ok(());
        }
        let missing: Vec<&str> = theirs.difference(&ours).copied().collect();
        let extra: Vec<&str> = ours.difference(&theirs).copied().collect();
        Err(ScoringError::WeightMismatch(format!(
            "missing weights for [{}], weights for unknown indicators [{}]",
            missing.join(", "),
            extra.join(", ")
        )))
    }
}

impl TryFrom<Vec<IndicatorWeight>> for IndicatorWeights {
    type Error = ScoringError;

    fn try_from(v: Vec<IndicatorWeight>) -> Result<Self, Self::Error> {
        Self::from_entries(v)
    }
}

impl From<IndicatorWeights> for Vec<IndicatorWeight> {
    fn from(w: IndicatorWeights) -> Self {
        w.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionItem {
    pub item_id: String,
    pub readings: Vec<IndicatorReading>,
}

fn round_3dp<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((value * 1000.0).round() / 1000.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub item_id: String,
    pub graded: Vec<GradedReading>,
    pub j_flag: u8,
    /// Full precision in memory; written to three decimals.
    #[serde(serialize_with = "round_3dp")]
    pub m_score: f64,
}

/// Computes `J` and `M` for already-graded readings.
///
/// The sum runs in the order of `graded`; each weight is looked up by the
/// reading's indicator id.
pub fn weighted_score(
    item_id: &str,
    graded: Vec<GradedReading>,
    weights: &IndicatorWeights,
) -> Result<QualityScore, ScoringError> {
    let mut total = 0.0;
    for g in &graded {
        let w = weights.get(&g.indicator_id).ok_or_else(|| {
            ScoringError::WeightMismatch(format!("no weight for indicator {}", g.indicator_id))
        })?;
        total += w * g.score;
    }
    let j_flag = u8::from(graded.iter().all(|g| g.level.is_conforming()));
    Ok(QualityScore {
        item_id: item_id.to_string(),
        graded,
        j_flag,
        m_score: if j_flag == 1 { total } else { 0.0 },
    })
}

/// Grades one reading per rubric indicator, in rubric order.
pub fn grade_item(item: &InspectionItem, rubrics: &RubricSet) -> Result<Vec<GradedReading>, ScoringError> {
    let mut seen = BTreeSet::new();
    for r in &item.readings {
        if rubrics.indicator(&r.indicator_id).is_none() {
            return Err(ScoringError::UnknownIndicator {
                item_id: item.item_id.clone(),
                indicator_id: r.indicator_id.clone(),
            });
        }
        if !seen.insert(r.indicator_id.as_str()) {
            return Err(ScoringError::DuplicateReading {
                item_id: item.item_id.clone(),
                indicator_id: r.indicator_id.clone(),
            });
        }
    }
    rubrics
        .indicators()
        .iter()
        .map(|spec| {
            let reading = item.readings.iter().find(|r| r.indicator_id == spec.id).ok_or_else(|| {
                ScoringError::MissingReading {
                    item_id: item.item_id.clone(),
                    indicator_id: spec.id.clone(),
                }
            })?;
            rubrics
                .classify(reading)
                .map_err(|source| ScoringError::Grading { item_id: item.item_id.clone(), source })
        })
        .collect()
}

pub fn score_item(
    item: &InspectionItem,
    weights: &IndicatorWeights,
    rubrics: &RubricSet,
) -> Result<QualityScore, ScoringError> {
    weights.check_against(rubrics)?;
    let graded = grade_item(item, rubrics)?;
    weighted_score(&item.item_id, graded, weights)
}

/// Scores every item, preserving input order. Per-item failures are
/// collected into one [`ScoringError::Batch`].
pub fn score_batch(
    items: &[InspectionItem],
    weights: &IndicatorWeights,
    rubrics: &RubricSet,
) -> Result<Vec<QualityScore>, ScoringError> {
    weights.check_against(rubrics)?;
    let mut ids = BTreeSet::new();
    for item in items {
        if !ids.insert(item.item_id.as_str()) {
            return Err(ScoringError::DuplicateItemId(item.item_id.clone()));
        }
    }
    let mut scores = Vec::with_capacity(items.len());
    let mut errors = Vec::new();
    for item in items {
        match grade_item(item, rubrics).and_then(|g| weighted_score(&item.item_id, g, weights)) {
            Ok(s) => scores.push(s),
            Err(e) => errors.push(e),
        }
    }
    if errors.is_empty() {
        Ok(scores)
    } else {
        Err(ScoringError::Batch(errors))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    AhpAscending,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "round_opt_3dp")]
    pub m_score: Option<f64>,
}

fn round_opt_3dp<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match value {
        Some(v) => round_3dp(v, s),
        None => s.serialize_none(),
    }
}

/// Ranking of a whole batch with the first `k` items selected.
///
/// For [`Strategy::AhpAscending`] the ranking is ascending in `M` with ties
/// broken by ascending item id (byte order). For [`Strategy::Random`] it is
/// the shuffled draw order and carries no scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub strategy: Strategy,
    pub k: usize,
    pub ranking: Vec<RankedItem>,
    pub selected: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn clamp_warning(k: usize, n: usize) -> Vec<String> {
    if k > n {
        vec![format!("requested k = {k} exceeds batch size {n}; selecting all {n} items")]
    } else {
        Vec::new()
    }
}

pub fn rank_and_select(scores: &[QualityScore], k: usize) -> SamplingPlan {
    let mut order: Vec<&QualityScore> = scores.iter().collect();
    order.sort_by(|x, y| {
        x.m_score
            .partial_cmp(&y.m_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.item_id.cmp(&y.item_id))
    });
    let ranking: Vec<RankedItem> = order
        .iter()
        .map(|s| RankedItem { item_id: s.item_id.clone(), m_score: Some(s.m_score) })
        .collect();
    let take = k.min(ranking.len());
    SamplingPlan {
        strategy: Strategy::AhpAscending,
        k,
        selected: ranking[..take].iter().map(|r| r.item_id.clone()).collect(),
        ranking,
        seed: None,
        warnings: clamp_warning(k, scores.len()),
    }
}

/// Uniform sample without replacement by a partial Fisher-Yates shuffle
/// over a ChaCha8 stream seeded with `seed`.
pub fn random_sample(item_ids: &[String], k: usize, seed: u64) -> SamplingPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_sample_with(item_ids, k, &mut rng, Some(seed))
}

pub(crate) fn random_sample_with<R: Rng>(
    item_ids: &[String],
    k: usize,
    rng: &mut R,
    seed: Option<u64>,
) -> SamplingPlan {
    let mut ids = item_ids.to_vec();
    let n = ids.len();
    let take = k.min(n);
    for i in 0..take {
        let j = rng.random_range(i..n);
        ids.swap(i, j);
    }
    SamplingPlan {
        strategy: Strategy::Random,
        k,
        selected: ids[..take].to_vec(),
        ranking: ids.into_iter().map(|item_id| RankedItem { item_id, m_score: None }).collect(),
        seed,
        warnings: clamp_warning(k, n),
    }
}

/// Graded reading with a caller-chosen level and score, for replaying
/// reference grading tables.
pub fn preset_reading(indicator_id: &str, deviation: f64, level: Level, score: f64) -> GradedReading {
    GradedReading {
        indicator_id: indicator_id.to_string(),
        variant: None,
        deviation,
        level,
        score,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::{builtin_cable_rubric, DC_RESISTANCE, INSULATION_AVG, INSULATION_MIN, SHEATH_MIN};

    const IDS: [&str; 4] = [DC_RESISTANCE, INSULATION_MIN, INSULATION_AVG, SHEATH_MIN];

    fn table_weights() -> IndicatorWeights {
        IndicatorWeights::from_pairs(IDS.into_iter().zip([0.321, 0.214, 0.222, 0.243])).unwrap()
    }

    fn item(id: &str, deltas: [f64; 4]) -> InspectionItem {
        InspectionItem {
            item_id: id.to_string(),
            readings: vec![
                IndicatorReading::deviation(DC_RESISTANCE, Some("cu"), deltas[0]),
                IndicatorReading::deviation(INSULATION_MIN, None, deltas[1]),
                IndicatorReading::deviation(INSULATION_AVG, None, deltas[2]),
                IndicatorReading::deviation(SHEATH_MIN, None, deltas[3]),
            ],
        }
    }

    fn preset(scores: [(Level, f64); 4]) -> Vec<GradedReading> {
        IDS.iter().zip(scores).map(|(id, (l, s))| preset_reading(id, 0.0, l, s)).collect()
    }

    #[test]
    fn table_rows_one_and_eight() {
        use Level::*;
        let w = table_weights();
        let row1 = weighted_score("1", preset([(Qualified, 75.0), (Qualified, 75.0), (Qualified, 75.0), (Good, 85.0)]), &w).unwrap();
        assert!((row1.m_score - 77.43).abs() < 1e-9);
        let row8 = weighted_score("8", preset([(Excellent, 100.0), (Excellent, 100.0), (Excellent, 100.0), (Qualified, 75.0)]), &w).unwrap();
        assert!((row8.m_score - 93.925).abs() < 1e-9);
        assert_eq!(row8.j_flag, 1);
    }

    #[test]
    fn all_excellent_scores_max() {
        let s = score_item(&item("a", [-6.0, 30.0, 30.0, 55.0]), &table_weights(), &builtin_cable_rubric()).unwrap();
        assert!((s.m_score - 100.0).abs() < 1e-9);
    }

    #[test]
    fn one_nonconforming_reading_zeroes_score() {
        let s = score_item(&item("a", [-6.0, 30.0, 30.0, -1.0]), &table_weights(), &builtin_cable_rubric()).unwrap();
        assert_eq!(s.j_flag, 0);
        assert_eq!(s.m_score, 0.0);
        assert_eq!(s.graded[3].level, Level::Nonconforming);
    }

    #[test]
    fn item_errors() {
        let rubrics = builtin_cable_rubric();
        let w = table_weights();
        let mut missing = item("a", [-2.0, 10.0, 10.0, 20.0]);
        missing.readings.pop();
        assert!(matches!(score_item(&missing, &w, &rubrics), Err(ScoringError::MissingReading { .. })));
        let mut dup = item("a", [-2.0, 10.0, 10.0, 20.0]);
        dup.readings.push(IndicatorReading::deviation(SHEATH_MIN, None, 1.0));
        assert!(matches!(score_item(&dup, &w, &rubrics), Err(ScoringError::DuplicateReading { .. })));
        let mut bare = item("a", [-2.0, 10.0, 10.0, 20.0]);
        bare.readings[0].variant = None;
        assert!(matches!(score_item(&bare, &w, &rubrics), Err(ScoringError::Grading { .. })));
        let three = IndicatorWeights::from_pairs([(DC_RESISTANCE, 0.5), (SHEATH_MIN, 0.5)]).unwrap();
        assert!(matches!(
            score_item(&item("a", [-2.0, 10.0, 10.0, 20.0]), &three, &rubrics),
            Err(ScoringError::WeightMismatch(_))
        ));
    }

    #[test]
    fn batch_preserves_order_and_aggregates_errors() {
        let rubrics = builtin_cable_rubric();
        let w = table_weights();
        assert!(score_batch(&[], &w, &rubrics).unwrap().is_empty());
        let items = vec![item("b", [-2.0, 10.0, 10.0, 20.0]), item("a", [-6.0, 30.0, 30.0, 55.0])];
        let scores = score_batch(&items, &w, &rubrics).unwrap();
        assert_eq!(scores[0].item_id, "b");
        assert_eq!(scores[1], score_item(&items[1], &w, &rubrics).unwrap());

        let dup = vec![items[0].clone(), items[0].clone()];
        assert_eq!(score_batch(&dup, &w, &rubrics), Err(ScoringError::DuplicateItemId("b".into())));

        let mut bad1 = items[0].clone();
        bad1.readings.pop();
        let mut bad2 = items[1].clone();
        bad2.readings.remove(0);
        let err = score_batch(&[bad1, bad2], &w, &rubrics).unwrap_err();
        let ScoringError::Batch(list) = err else { panic!() };
        assert_eq!(list.len(), 2);
        assert!(list[1].to_string().starts_with("item a"));
    }

    fn qs(id: &str, m: f64) -> QualityScore {
        QualityScore { item_id: id.into(), graded: vec![], j_flag: u8::from(m > 0.0), m_score: m }
    }

    #[test]
    fn ranking_and_ties() {
        let scores = vec![qs("c", 80.0), qs("b", 70.0), qs("a", 80.0), qs("d", 0.0)];
        let plan = rank_and_select(&scores, 2);
        assert_eq!(plan.selected, vec!["d", "b"]);
        let order: Vec<&str> = plan.ranking.iter().map(|r| r.item_id.as_str()).collect();
        assert_eq!(order, vec!["d", "b", "a", "c"]);
        assert!(plan.warnings.is_empty());

        let none = rank_and_select(&scores, 0);
        assert!(none.selected.is_empty());
        assert_eq!(none.ranking.len(), 4);

        let all = rank_and_select(&scores, 9);
        assert_eq!(all.selected.len(), 4);
        assert_eq!(all.warnings.len(), 1);
    }

    #[test]
    fn random_sample_is_deterministic() {
        let ids: Vec<String> = (1..=20).map(|i| i.to_string()).collect();
        let a = random_sample(&ids, 5, 7);
        let b = random_sample(&ids, 5, 7);
        assert_eq!(a, b);
        assert_eq!(a.selected.len(), 5);
        assert_eq!(a.seed, Some(7));
        let set: BTreeSet<&String> = a.selected.iter().collect();
        assert_eq!(set.len(), 5);
        assert!(random_sample(&ids, 0, 7).selected.is_empty());
        let full = random_sample(&ids, 20, 3);
        let mut sorted = full.selected.clone();
        sorted.sort_by_key(|s| s.parse::<u32>().unwrap());
        assert_eq!(sorted, ids);
        assert_eq!(random_sample(&ids, 25, 3).selected.len(), 20);
    }

    #[test]
    fn scores_serialize_to_three_decimals() {
        let s = qs("x", 77.430_000_000_1);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["m_score"], serde_json::json!(77.43));
    }

    #[test]
    fn weights_reject_bad_sums() {
        assert!(IndicatorWeights::from_pairs([("a", 0.5), ("b", 0.6)]).is_err());
        assert!(IndicatorWeights::from_pairs([("a", 0.5), ("a", 0.5)]).is_err());
        assert!(IndicatorWeights::from_pairs([("a", 1.5), ("b", -0.5)]).is_err());
    }
}
