use std::io::Write;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CliError, CommonArgs, RiArgs, SampleArgs, ScoreArgs, SimulateArgs, StrategyArg, WeightInputArgs, WeightsArgs};
use crate::ahp::{
    build_matrix_from_rates, check_consistency, derive_weights, monte_carlo_ri, random_index, ComparisonMatrix,
    ConsistencyReport, RandomIndexTable, WeightMethod,
};
use crate::data_io::{
    append_history, compute_rates, file_digest, load_batch, load_history, load_matrix, load_rubric, read_report,
    read_weights, write_atomic, write_json, InputDigest, MethodWeights, Provenance, ResultReport, WeightsReport,
    WeightsSource,
};
use crate::grading::{builtin_cable_rubric, RubricSet};
use crate::scoring::{random_sample, rank_and_select, score_batch, IndicatorWeights, QualityScore, SamplingPlan};
use crate::simulator::{run_comparison, write_simulation_csv, BatchGenSpec};

fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::from_timestamp(secs, 0));
    pinned.unwrap_or_else(Utc::now).to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn fresh_seed() -> u64 {
    let seed = rand::rng().random();
    eprintln!("note: no seed given, using generated seed {seed}");
    seed
}

fn digest(role: &str, path: &Path) -> Result<InputDigest, CliError> {
    Ok(InputDigest { role: role.into(), path: path.display().to_string(), sha256: file_digest(path)? })
}

fn run_id(input: &InputDigest) -> String {
    input.sha256[..12].to_string()
}

fn load_rubrics(common: &CommonArgs) -> Result<(RubricSet, Option<InputDigest>), CliError> {
    match &common.rubric {
        Some(path) => {
            let d = digest("rubric", path)?;
            Ok((load_rubric(path)?, Some(d)))
        }
        None => Ok((builtin_cable_rubric(), None)),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(write_json(value, path)?),
        None => {
            let text = serde_json::to_string_pretty(value).expect("output types serialize");
            println!("{text}");
            Ok(())
        }
    }
}

struct Base<'a> {
    command: &'a str,
    common: &'a CommonArgs,
    rubrics: &'a RubricSet,
}

impl Base<'_> {
    fn provenance(
        &self,
        run_id: String,
        inputs: Vec<InputDigest>,
        weights_source: &str,
        seed: Option<(u64, bool)>,
    ) -> Provenance {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            run_id,
            rubric_id: self.rubrics.id().to_string(),
            inputs,
            weights_source: weights_source.to_string(),
            seed: seed.map(|s| s.0),
            seed_generated: seed.is_some_and(|s| s.1),
            cr_threshold: self.common.cr_threshold,
            smoothing_floor: self.common.smoothing_floor,
            timestamp: timestamp(),
        }
    }
}

struct Derived {
    ids: Vec<String>,
    matrix: ComparisonMatrix,
    source: WeightsSource,
}

fn from_history(path: &Path, rubrics: &RubricSet, floor: f64) -> Result<Derived, CliError> {
    let records = load_history(path)?;
    let ids = rubrics.indicator_ids();
    let rates = compute_rates(&records, &ids)?;
    let matrix = build_matrix_from_rates(&rates, floor)?;
    let source = WeightsSource::History {
        rates: rates.rates().to_vec(),
        sample_counts: rates.sample_counts().to_vec(),
        smoothing_floor: floor,
    };
    Ok(Derived { ids, matrix, source })
}

fn from_matrix(path: &Path, rubrics: &RubricSet) -> Result<Derived, CliError> {
    let manual = load_matrix(path)?;
    let mut given = manual.indicators.clone();
    let mut expected = rubrics.indicator_ids();
    given.sort();
    expected.sort();
    if given != expected {
        return Err(CliError::Input(format!(
            "{}: matrix indicators {:?} do not match rubric indicators {:?}",
            path.display(),
            manual.indicators,
            rubrics.indicator_ids()
        )));
    }
    Ok(Derived { ids: manual.indicators.clone(), matrix: manual.to_matrix()?, source: WeightsSource::Matrix })
}

fn all_methods(m: &ComparisonMatrix) -> Result<Vec<MethodWeights>, CliError> {
    WeightMethod::ALL
        .iter()
        .map(|&method| Ok(MethodWeights { method, weights: derive_weights(m, method)?.into_inner() }))
        .collect()
}

fn select(ids: &[String], methods: &[MethodWeights], method: WeightMethod) -> Result<IndicatorWeights, CliError> {
    let chosen = methods.iter().find(|m| m.method == method).expect("every method is computed");
    let pairs = ids.iter().cloned().zip(chosen.weights.iter().copied());
    Ok(IndicatorWeights::from_pairs(pairs)?)
}

pub(super) fn weights(a: WeightsArgs) -> Result<(), CliError> {
    let (rubrics, rubric_digest) = load_rubrics(&a.common)?;
    let base = Base { command: "weights", common: &a.common, rubrics: &rubrics };
    let (input, derived, kind) = match (&a.history, &a.matrix) {
        (Some(p), _) => (digest("history", p)?, from_history(p, &rubrics, a.common.smoothing_floor)?, "history"),
        (None, Some(p)) => (digest("matrix", p)?, from_matrix(p, &rubrics)?, "matrix"),
        (None, None) => return Err(CliError::Input("weights needs --history or --matrix".into())),
    };
    let consistency = check_consistency(&derived.matrix, &RandomIndexTable::default(), a.common.cr_threshold)?;
    let methods = all_methods(&derived.matrix)?;
    let method = WeightMethod::from(a.method);
    let weights = select(&derived.ids, &methods, method)?;

    let run = run_id(&input);
    let inputs = std::iter::once(input).chain(rubric_digest).collect();
    let report = WeightsReport {
        method,
        weights,
        methods,
        matrix: derived.matrix.to_rows(),
        consistency: consistency.clone(),
        source: derived.source,
        provenance: base.provenance(run, inputs, kind, None),
    };
    emit_json(&report, a.common.out.as_deref())?;
    if kind == "matrix" && !consistency.pass {
        return Err(CliError::Gate(format!(
            "judgment matrix fails the consistency test: CR = {:.4} is not below {}",
            consistency.cr, consistency.threshold
        )));
    }
    Ok(())
}

struct ResolvedWeights {
    weights: IndicatorWeights,
    consistency: Option<ConsistencyReport>,
    source: &'static str,
    inputs: Vec<InputDigest>,
}

/// A weights file whose recorded CR is not below the current threshold is
/// refused.
fn gated_weights_file(path: &Path, rubrics: &RubricSet, threshold: f64) -> Result<WeightsReport, CliError> {
    let report = read_weights(path)?;
    if !(report.consistency.cr < threshold) {
        return Err(CliError::Gate(format!(
            "{}: weights failed the consistency test (CR = {:.4}, threshold {threshold}); refusing to use them",
            path.display(),
            report.consistency.cr
        )));
    }
    report.weights.check_against(rubrics)?;
    Ok(report)
}

fn resolve_weights(w: &WeightInputArgs, base: &Base) -> Result<ResolvedWeights, CliError> {
    if let Some(path) = &w.weights {
        let d = digest("weights", path)?;
        let report = gated_weights_file(path, base.rubrics, base.common.cr_threshold)?;
        return Ok(ResolvedWeights {
            weights: report.weights,
            consistency: Some(report.consistency),
            source: "weights_file",
            inputs: vec![d],
        });
    }
    if let Some(path) = &w.history {
        let d = digest("history", path)?;
        let derived = from_history(path, base.rubrics, base.common.smoothing_floor)?;
        let consistency =
            check_consistency(&derived.matrix, &RandomIndexTable::default(), base.common.cr_threshold)?;
        let methods = all_methods(&derived.matrix)?;
        return Ok(ResolvedWeights {
            weights: select(&derived.ids, &methods, w.method.into())?,
            consistency: Some(consistency),
            source: "history",
            inputs: vec![d],
        });
    }
    Err(CliError::Input(format!("{} needs --weights or --history", base.command)))
}

struct Scored {
    scores: Vec<QualityScore>,
    weights: ResolvedWeights,
    run_id: String,
    inputs: Vec<InputDigest>,
}

fn score_from_batch(batch: &Path, w: &WeightInputArgs, base: &Base) -> Result<Scored, CliError> {
    let batch_digest = digest("batch", batch)?;
    let items = load_batch(batch, base.rubrics)?;
    let mut weights = resolve_weights(w, base)?;
    let scores = score_batch(&items, &weights.weights, base.rubrics)?;
    let run_id = run_id(&batch_digest);
    let mut inputs = vec![batch_digest];
    inputs.append(&mut weights.inputs);
    Ok(Scored { scores, weights, run_id, inputs })
}

fn warn(plan: &Option<SamplingPlan>) {
    for w in plan.iter().flat_map(|p| &p.warnings) {
        eprintln!("warning: {w}");
    }
}

pub(super) fn score(a: ScoreArgs) -> Result<(), CliError> {
    let (rubrics, rubric_digest) = load_rubrics(&a.common)?;
    let base = Base { command: "score", common: &a.common, rubrics: &rubrics };
    let mut s = score_from_batch(&a.batch, &a.weights, &base)?;
    s.inputs.extend(rubric_digest);
    let plan = a.k.map(|k| rank_and_select(&s.scores, k));
    warn(&plan);
    let report = ResultReport {
        provenance: base.provenance(s.run_id, s.inputs, s.weights.source, None),
        weights: s.weights.weights,
        consistency: s.weights.consistency,
        scores: s.scores,
        plan,
    };
    emit_json(&report, a.common.out.as_deref())?;
    if let Some(history) = &a.append_history {
        let rows = append_history(&report, history)?;
        eprintln!("appended {} row(s) to {}", rows.len(), history.display());
    }
    Ok(())
}

pub(super) fn sample(a: SampleArgs) -> Result<(), CliError> {
    let (rubrics, rubric_digest) = load_rubrics(&a.common)?;
    let base = Base { command: "sample", common: &a.common, rubrics: &rubrics };
    let (scores, weights, consistency, source, run, mut inputs, rubric_id) = match (&a.report, &a.batch) {
        (Some(path), _) => {
            let d = digest("report", path)?;
            let r = read_report(path)?;
            let p = r.provenance;
            (r.scores, r.weights, r.consistency, p.weights_source, p.run_id, vec![d], Some(p.rubric_id))
        }
        (None, Some(batch)) => {
            let s = score_from_batch(batch, &a.weights, &base)?;
            let w = s.weights;
            (s.scores, w.weights, w.consistency, w.source.to_string(), s.run_id, s.inputs, None)
        }
        (None, None) => return Err(CliError::Input("sample needs --report or --batch".into())),
    };
    inputs.extend(rubric_digest);

    let (plan, seed) = match a.strategy {
        StrategyArg::Ahp => (rank_and_select(&scores, a.k), None),
        StrategyArg::Random => {
            let (seed, generated) = match a.seed {
                Some(s) => (s, false),
                None => (fresh_seed(), true),
            };
            let ids: Vec<String> = scores.iter().map(|s| s.item_id.clone()).collect();
            (random_sample(&ids, a.k, seed), Some((seed, generated)))
        }
    };
    let plan = Some(plan);
    warn(&plan);
    let mut provenance = base.provenance(run, inputs, &source, seed);
    if let Some(id) = rubric_id {
        provenance.rubric_id = id;
    }
    let report = ResultReport { weights, consistency, scores, plan, provenance };
    emit_json(&report, a.common.out.as_deref())
}

/// Config file for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub batch: BatchGenSpec,
    pub k: usize,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub(super) fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let (rubrics, _) = load_rubrics(&a.common)?;
    let bytes = std::fs::read(&a.config).map_err(|e| CliError::Io(format!("{}: {e}", a.config.display())))?;
    let config: SimulateConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.config.display())))?;
    let weights = match &a.weights {
        Some(path) => gated_weights_file(path, &rubrics, a.common.cr_threshold)?.weights,
        None => IndicatorWeights::uniform(&rubrics.indicator_ids())?,
    };
    let seed = match a.seed.or(config.seed) {
        Some(s) => s,
        None => fresh_seed(),
    };
    let comparison = run_comparison(&config.batch, &weights, &rubrics, config.k, config.trials, seed)?;
    let mut buf = Vec::new();
    write_simulation_csv(&mut buf, &comparison).expect("in-memory write");
    match &a.common.out {
        Some(path) => write_atomic(path, &buf)?,
        None => std::io::stdout().write_all(&buf).map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RiOutput {
    n: usize,
    trials: u64,
    seed: u64,
    seed_generated: bool,
    ri: f64,
    skipped: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_ri: Option<f64>,
}

pub(super) fn ri(a: RiArgs) -> Result<(), CliError> {
    let (seed, seed_generated) = match a.seed {
        Some(s) => (s, false),
        None => (fresh_seed(), true),
    };
    let mc = monte_carlo_ri(a.n, a.trials, seed)?;
    let out = RiOutput {
        n: mc.n,
        trials: mc.trials,
        seed,
        seed_generated,
        ri: mc.ri,
        skipped: mc.skipped,
        table_ri: random_index(a.n).ok(),
    };
    emit_json(&out, a.out.as_deref())
}
