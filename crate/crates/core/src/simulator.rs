//! Synthetic batches with planted bad items, used to compare worst-first
//! AHP sampling against uniform random sampling.
//!
//! Good items draw every reading from the Good or Excellent band. A planted
//! item has `tainted_indicators` readings pushed into the lowest conforming
//! band (`Marginal`) or just outside the conforming region (`Defective`).
//! Every draw is rejection-checked against the rubric, so the intended
//! level holds exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grading::{GradingRubric, IndicatorReading, Level, RubricSet};
use crate::scoring::{
    random_sample_with, rank_and_select, score_batch, IndicatorWeights, InspectionItem, ScoringError,
    Strategy,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("could not draw a {level} deviation for {indicator_id}")]
    DrawFailed { indicator_id: String, level: Level },
    #[error("simulation csv line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedRegime {
    /// Lowest conforming band; the item still has `J = 1`.
    #[default]
    Marginal,
    /// Outside the conforming region; the item gets `J = 0`.
    Defective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Width of the interval sampled inside an unbounded band.
    pub open_band_span: f64,
    /// How far past the conforming region defective readings may fall.
    pub defect_span: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { open_band_span: 20.0, defect_span: 5.0 }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchGenSpec {
    pub batch_size: usize,
    pub planted_bad: usize,
    #[serde(default)]
    pub regime: PlantedRegime,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub tainted_indicators: usize,
    #[serde(default)]
    pub default_noise: NoiseSpec,
    /// Per-indicator overrides of `default_noise`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub noise: BTreeMap<String, NoiseSpec>,
    /// Variant per indicator; defaults to the indicator's first variant key.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variants: BTreeMap<String, String>,
}

impl BatchGenSpec {
    pub fn new(batch_size: usize, planted_bad: usize, regime: PlantedRegime, seed: u64) -> Self {
        Self {
            batch_size,
            planted_bad,
            regime,
            seed,
            tainted_indicators: 1,
            default_noise: NoiseSpec::default(),
            noise: BTreeMap::new(),
            variants: BTreeMap::new(),
        }
    }

    fn validate(&self, rubrics: &RubricSet) -> Result<(), SimError> {
        if self.planted_bad > self.batch_size {
            return Err(SimError::InvalidSpec(format!(
                "planted_bad {} exceeds batch_size {}",
                self.planted_bad, self.batch_size
            )));
        }
        let n = rubrics.indicators().len();
        if self.tainted_indicators == 0 || self.tainted_indicators > n {
            return Err(SimError::InvalidSpec(format!("tainted_indicators must be in 1..={n}")));
        }
        for noise in std::iter::once(&self.default_noise).chain(self.noise.values()) {
            let ok = |v: f64| v.is_finite() && v > 0.0;
            if !ok(noise.open_band_span) || !ok(noise.defect_span) {
                return Err(SimError::InvalidSpec("noise spans must be positive".into()));
            }
        }
        for (id, variant) in &self.variants {
            rubrics
                .rubric(id, Some(variant))
                .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        }
        Ok(())
    }

    fn noise_for(&self, id: &str) -> NoiseSpec {
        self.noise.get(id).copied().unwrap_or(self.default_noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedBatch {
    pub items: Vec<InspectionItem>,
    /// Ground truth, parallel to `items`.
    pub planted: Vec<bool>,
}

impl GeneratedBatch {
    pub fn planted_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().zip(&self.planted).filter(|(_, &p)| p).map(|(i, _)| i.item_id.as_str())
    }
}

/// Generates one batch from `spec.seed`.
pub fn generate_batch(spec: &BatchGenSpec, rubrics: &RubricSet) -> Result<GeneratedBatch, SimError> {
    spec.validate(rubrics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate_with(spec, rubrics, &mut rng)
}

fn draw_in_band<R: Rng>(
    rubric: &GradingRubric,
    level: Level,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<f64, SimError> {
    let fail = || SimError::DrawFailed { indicator_id: rubric.indicator_id.clone(), level };
    let (lo, hi) = if level == Level::Nonconforming {
        let (min, _, max, _) = rubric.conforming_region();
        let mut sides = Vec::with_capacity(2);
        if let Some(m) = max {
            sides.push((m, m + noise.defect_span));
        }
        if let Some(m) = min {
            sides.push((m - noise.defect_span, m));
        }
        if sides.is_empty() {
            return Err(fail());
        }
        sides[rng.random_range(0..sides.len())]
    } else {
        let band = rubric.band(level).ok_or_else(fail)?;
        match (band.min, band.max) {
            (Some(a), Some(b)) => (a, b),
            (None, Some(b)) => (b - noise.open_band_span, b),
            (Some(a), None) => (a, a + noise.open_band_span),
            (None, None) => (-noise.open_band_span, noise.open_band_span),
        }
    };
    for _ in 0..64 {
        let delta = rng.random_range(lo..=hi);
        if rubric.level_for(delta) == level {
            return Ok(delta);
        }
    }
    Err(fail())
}

fn generate_with<R: Rng>(
    spec: &BatchGenSpec,
    rubrics: &RubricSet,
    rng: &mut R,
) -> Result<GeneratedBatch, SimError> {
    let n = spec.batch_size;
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..spec.planted_bad {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut planted = vec![false; n];
    for &idx in &order[..spec.planted_bad] {
        planted[idx] = true;
    }

    let indicators = rubrics.indicators();
    let width = n.to_string().len();
    let bad_level = match spec.regime {
        PlantedRegime::Marginal => Level::BasicQualified,
        PlantedRegime::Defective => Level::Nonconforming,
    };
    let mut items = Vec::with_capacity(n);
    for (idx, &is_bad) in planted.iter().enumerate() {
        let mut tainted = vec![false; indicators.len()];
        if is_bad {
            let mut pick: Vec<usize> = (0..indicators.len()).collect();
            for i in 0..spec.tainted_indicators {
                let j = rng.random_range(i..pick.len());
                pick.swap(i, j);
                tainted[pick[i]] = true;
            }
        }
        let mut readings = Vec::with_capacity(indicators.len());
        for (ind, ind_spec) in indicators.iter().enumerate() {
            let variant = spec
                .variants
                .get(&ind_spec.id)
                .map(String::as_str)
                .or(ind_spec.variant_keys.first().map(String::as_str));
            let rubric = rubrics.rubric(&ind_spec.id, variant).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
            let level = if tainted[ind] {
                bad_level
            } else if rng.random_bool(0.5) {
                Level::Excellent
            } else {
                Level::Good
            };
            let delta = draw_in_band(rubric, level, spec.noise_for(&ind_spec.id), rng)?;
            readings.push(IndicatorReading::deviation(&ind_spec.id, variant, delta));
        }
        items.push(InspectionItem { item_id: format!("item-{:0width$}", idx + 1), readings });
    }
    Ok(GeneratedBatch { items, planted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub strategy: Strategy,
    pub k: usize,
    pub captured_bad: usize,
    /// `captured_bad / planted_bad`; 1 when nothing was planted.
    pub capture_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub trials: u64,
    pub seed: u64,
    pub k: usize,
    pub batch_size: usize,
    pub planted_bad: usize,
    pub regime: PlantedRegime,
    pub ahp_mean_capture: f64,
    pub random_mean_capture: f64,
    /// Trials where AHP captured more / fewer / the same number of planted items.
    pub ahp_better: u64,
    pub random_better: u64,
    pub ties: u64,
    pub sign_test_p_one_sided: f64,
    pub sign_test_p_two_sided: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub results: Vec<TrialResult>,
    pub summary: ComparisonSummary,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `trials` paired trials. Trial `t` draws its batch from ChaCha
/// stream `2t` and its random sample from stream `2t + 1` of `seed`
/// (`spec.seed` is not used), so any trial can be replayed on its own.
pub fn run_comparison(
    spec: &BatchGenSpec,
    weights: &IndicatorWeights,
    rubrics: &RubricSet,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<Comparison, SimError> {
    if trials == 0 {
        return Err(SimError::InvalidSpec("trials must be at least 1".into()));
    }
    spec.validate(rubrics)?;
    weights.check_against(rubrics)?;

    let rate = |captured: usize| {
        if spec.planted_bad == 0 {
            1.0
        } else {
            captured as f64 / spec.planted_bad as f64
        }
    };
    let mut results = Vec::with_capacity(2 * trials as usize);
    let (mut ahp_better, mut random_better, mut ties) = (0u64, 0u64, 0u64);
    let (mut ahp_sum, mut random_sum) = (0.0, 0.0);
    for t in 0..trials {
        let batch = generate_with(spec, rubrics, &mut stream_rng(seed, 2 * t))?;
        let scores = score_batch(&batch.items, weights, rubrics)?;
        let ahp_plan = rank_and_select(&scores, k);
        let ids: Vec<String> = batch.items.iter().map(|i| i.item_id.clone()).collect();
        let random_plan = random_sample_with(&ids, k, &mut stream_rng(seed, 2 * t + 1), None);

        let captured = |selected: &[String]| {
            selected
                .iter()
                .filter(|id| batch.planted_ids().any(|p| p == id.as_str()))
                .count()
        };
        let ahp = captured(&ahp_plan.selected);
        let random = captured(&random_plan.selected);
        match ahp.cmp(&random) {
            std::cmp::Ordering::Greater => ahp_better += 1,
            std::cmp::Ordering::Less => random_better += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
        ahp_sum += rate(ahp);
        random_sum += rate(random);
        for (strategy, n) in [(Strategy::AhpAscending, ahp), (Strategy::Random, random)] {
            results.push(TrialResult { trial: t, strategy, k, captured_bad: n, capture_rate: rate(n) });
        }
    }
    let (one_sided, two_sided) = sign_test(ahp_better, random_better);
    let summary = ComparisonSummary {
        trials,
        seed,
        k,
        batch_size: spec.batch_size,
        planted_bad: spec.planted_bad,
        regime: spec.regime,
        ahp_mean_capture: ahp_sum / trials as f64,
        random_mean_capture: random_sum / trials as f64,
        ahp_better,
        random_better,
        ties,
        sign_test_p_one_sided: one_sided,
        sign_test_p_two_sided: two_sided,
    };
    Ok(Comparison { results, summary })
}

/// Exact sign test over non-tied pairs: `P(X >= positive)` for
/// `X ~ Binomial(positive + negative, 1/2)`, and the two-sided value.
pub fn sign_test(positive: u64, negative: u64) -> (f64, f64) {
    let n = positive + negative;
    if n == 0 {
        return (1.0, 1.0);
    }
    let upper_tail = |from: u64| -> f64 {
        // ln C(n, i) built incrementally, tail summed with log-sum-exp.
        let ln_half_n = n as f64 * 0.5f64.ln();
        let mut ln_c = 0.0;
        let mut terms = Vec::new();
        for i in 0..=n {
            if i >= from {
                terms.push(ln_c + ln_half_n);
            }
            if i < n {
                ln_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
            }
        }
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp().min(1.0)
    };
    let one_sided = upper_tail(positive);
    let two_sided = (2.0 * upper_tail(positive.max(negative))).min(1.0);
    (one_sided, two_sided)
}

pub const SIMULATION_HEADER: &str = "trial,strategy,k,captured,capture_rate";
const FOOTER_PREFIX: &str = "# summary ";

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::AhpAscending => "ahp_ascending",
        Strategy::Random => "random",
    }
}

/// Per-trial CSV followed by a `# summary {json}` footer line.
pub fn write_simulation_csv<W: Write>(out: &mut W, c: &Comparison) -> std::io::Result<()> {
    writeln!(out, "{SIMULATION_HEADER}")?;
    for r in &c.results {
        writeln!(out, "{},{},{},{},{}", r.trial, strategy_name(r.strategy), r.k, r.captured_bad, r.capture_rate)?;
    }
    let footer = serde_json::to_string(&c.summary).expect("summary serializes");
    writeln!(out, "{FOOTER_PREFIX}{footer}")
}

pub fn read_simulation_csv<R: BufRead>(input: R) -> Result<Comparison, SimError> {
    let mut results = Vec::new();
    let mut summary = None;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let err = |reason: String| SimError::Parse { line: lineno, reason };
        let line = line.map_err(|e| err(e.to_string()))?;
        if idx == 0 {
            if line != SIMULATION_HEADER {
                return Err(err(format!("expected header {SIMULATION_HEADER:?}")));
            }
            continue;
        }
        if let Some(json) = line.strip_prefix(FOOTER_PREFIX) {
            summary = Some(serde_json::from_str(json).map_err(|e| err(e.to_string()))?);
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", f.len())));
        }
        let strategy = match f[1] {
            "ahp_ascending" => Strategy::AhpAscending,
            "random" => Strategy::Random,
            other => return Err(err(format!("unknown strategy {other:?}"))),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        results.push(TrialResult {
            trial: f[0].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            strategy,
            k: f[2].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            captured_bad: f[3].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            capture_rate: num(f[4])?,
        });
    }
    let summary = summary.ok_or(SimError::Parse { line: 0, reason: "missing summary footer".into() })?;
    Ok(Comparison { results, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::builtin_cable_rubric;
    use crate::scoring::score_item;

    fn weights() -> IndicatorWeights {
        let ids = builtin_cable_rubric().indicator_ids();
        IndicatorWeights::from_pairs(ids.into_iter().zip([0.321, 0.214, 0.222, 0.243])).unwrap()
    }

    #[test]
    fn no_planted_items_all_score_at_least_good() {
        let rubrics = builtin_cable_rubric();
        let b = generate_batch(&BatchGenSpec::new(50, 0, PlantedRegime::Marginal, 3), &rubrics).unwrap();
        assert!(b.planted.iter().all(|p| !p));
        for item in &b.items {
            let s = score_item(item, &weights(), &rubrics).unwrap();
            assert_eq!(s.j_flag, 1);
            assert!(s.graded.iter().all(|g| g.score >= rubrics.score_map().score(Level::Qualified)));
        }
    }

    #[test]
    fn all_planted_carry_a_low_reading() {
        let rubrics = builtin_cable_rubric();
        for regime in [PlantedRegime::Marginal, PlantedRegime::Defective] {
            let b = generate_batch(&BatchGenSpec::new(30, 30, regime, 5), &rubrics).unwrap();
            for item in &b.items {
                let s = score_item(item, &weights(), &rubrics).unwrap();
                let low = s.graded.iter().filter(|g| matches!(g.level, Level::BasicQualified | Level::Nonconforming));
                assert!(low.count() >= 1);
                assert_eq!(s.j_flag == 0, regime == PlantedRegime::Defective);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let rubrics = builtin_cable_rubric();
        let spec = BatchGenSpec::new(20, 4, PlantedRegime::Marginal, 11);
        assert_eq!(generate_batch(&spec, &rubrics).unwrap(), generate_batch(&spec, &rubrics).unwrap());
        let other = BatchGenSpec { seed: 12, ..spec.clone() };
        assert_ne!(generate_batch(&spec, &rubrics).unwrap(), generate_batch(&other, &rubrics).unwrap());
    }

    #[test]
    fn spec_validation() {
        let rubrics = builtin_cable_rubric();
        assert!(generate_batch(&BatchGenSpec::new(5, 6, PlantedRegime::Marginal, 0), &rubrics).is_err());
        let mut spec = BatchGenSpec::new(5, 1, PlantedRegime::Marginal, 0);
        spec.tainted_indicators = 5;
        assert!(generate_batch(&spec, &rubrics).is_err());
        let mut spec = BatchGenSpec::new(5, 1, PlantedRegime::Marginal, 0);
        spec.variants.insert("dc_resistance".into(), "fe".into());
        assert!(generate_batch(&spec, &rubrics).is_err());
        spec.variants.insert("dc_resistance".into(), "al".into());
        let b = generate_batch(&spec, &rubrics).unwrap();
        assert_eq!(b.items[0].readings[0].variant.as_deref(), Some("al"));
    }

    #[test]
    fn defective_with_enough_quota_is_always_caught() {
        let rubrics = builtin_cable_rubric();
        let spec = BatchGenSpec::new(20, 3, PlantedRegime::Defective, 0);
        let c = run_comparison(&spec, &weights(), &rubrics, 3, 50, 8).unwrap();
        assert!(c.results.iter().filter(|r| r.strategy == Strategy::AhpAscending).all(|r| r.capture_rate == 1.0));
        let full = run_comparison(&spec, &weights(), &rubrics, 20, 10, 8).unwrap();
        assert!(full.results.iter().all(|r| r.capture_rate == 1.0));
        assert_eq!(full.summary.ties, 10);
    }

    #[test]
    fn sign_test_values() {
        assert_eq!(sign_test(0, 0), (1.0, 1.0));
        // 8 of 10: P(X >= 8) = 56/1024
        let (one, two) = sign_test(8, 2);
        assert!((one - 56.0 / 1024.0).abs() < 1e-12);
        assert!((two - 112.0 / 1024.0).abs() < 1e-12);
        assert!((sign_test(0, 3).0 - 1.0).abs() < 1e-12);
        assert!(sign_test(900, 10).1 < 1e-200);
    }

    #[test]
    fn csv_round_trip() {
        let rubrics = builtin_cable_rubric();
        let spec = BatchGenSpec::new(10, 2, PlantedRegime::Marginal, 0);
        let c = run_comparison(&spec, &weights(), &rubrics, 2, 5, 1).unwrap();
        let mut buf = Vec::new();
        write_simulation_csv(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("trial,strategy,k,captured,capture_rate\n0,ahp_ascending,2,"));
        assert_eq!(read_simulation_csv(buf.as_slice()).unwrap(), c);
    }
}
