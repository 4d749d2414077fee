//! JSON documents: weight derivations, scored/sampled result reports and
//! hand-authored judgment matrices.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::{json_error, read_file, write_atomic, DataError};
use crate::ahp::{parse_judgment, ComparisonMatrix, ConsistencyReport, WeightMethod};
use crate::scoring::{IndicatorWeights, QualityScore, SamplingPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command. `timestamp` is the only field
/// that changes between identical invocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub command: String,
    pub run_id: String,
    pub rubric_id: String,
    pub inputs: Vec<InputDigest>,
    pub weights_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub seed_generated: bool,
    pub cr_threshold: f64,
    pub smoothing_floor: f64,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub weights: IndicatorWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport>,
    pub scores: Vec<QualityScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodWeights {
    pub method: WeightMethod,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightsSource {
    History { rates: Vec<f64>, sample_counts: Vec<u64>, smoothing_floor: f64 },
    Matrix,
}

/// Output of weight derivation: the selected weights plus every method's
/// result, the judgment matrix and its consistency test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub method: WeightMethod,
    pub weights: IndicatorWeights,
    pub methods: Vec<MethodWeights>,
    pub matrix: Vec<Vec<f64>>,
    pub consistency: ConsistencyReport,
    pub source: WeightsSource,
    pub provenance: Provenance,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), DataError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_report(report: &ResultReport, path: &Path) -> Result<(), DataError> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<ResultReport, DataError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(path, e))
}

pub fn read_weights(path: &Path) -> Result<WeightsReport, DataError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(path, e))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawJudgment {
    Number(f64),
    Text(String),
}

fn judgment_rows<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
    let raw: Vec<Vec<RawJudgment>> = Vec::deserialize(d)?;
    raw.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|j| match j {
                    RawJudgment::Number(v) => Ok(v),
                    RawJudgment::Text(t) => parse_judgment(&t).map_err(serde::de::Error::custom),
                })
                .collect()
        })
        .collect()
}

/// Hand-authored judgment matrix. Entries may be numbers or fractions
/// such as `"1/3"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ManualMatrix {
    pub indicators: Vec<String>,
    #[serde(deserialize_with = "judgment_rows")]
    pub matrix: Vec<Vec<f64>>,
}

impl ManualMatrix {
    pub fn to_matrix(&self) -> Result<ComparisonMatrix, DataError> {
        if self.indicators.len() != self.matrix.len() {
            return Err(DataError::Ahp(crate::ahp::AhpError::LengthMismatch {
                expected: self.indicators.len(),
                found: self.matrix.len(),
            }));
        }
        Ok(ComparisonMatrix::new(self.matrix.clone())?)
    }
}

pub fn load_matrix(path: &Path) -> Result<ManualMatrix, DataError> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| json_error(path, e))
}
