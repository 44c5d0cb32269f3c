//! The audit report document and its JSON schema.

use std::collections::BTreeMap;

use msef_core::stats::{BlandAltmanResult, Coefficient, CorrMatrix, DistributionSummary, F1Report, PolyFit, ShapiroWilk, StatsError};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const REPORT_FILE: &str = "report.json";
pub const SCHEMA_FILE: &str = "report.schema.json";

/// A statistic, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Stat<T> {
    Ok { value: T },
    Omitted { reason: String },
}

impl<T> Stat<T> {
    pub fn omitted(reason: impl Into<String>) -> Self {
        Self::Omitted { reason: reason.into() }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Self::Ok { value } => Some(value),
            Self::Omitted { .. } => None,
        }
    }
}

impl<T> From<Result<T, StatsError>> for Stat<T> {
    fn from(r: Result<T, StatsError>) -> Self {
        match r {
            Ok(value) => Self::Ok { value },
            Err(e) => Self::omitted(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub images: usize,
    pub surveyed_images: usize,
    pub predicted_images: usize,
    pub predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionF1 {
    pub n: usize,
    /// Tertile cuts of the reference scores, applied to both series.
    pub cuts: (f64, f64),
    pub report: F1Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub n: usize,
    /// Share of rounded scores that match exactly.
    pub exact: f64,
    /// Share of rounded scores within the tolerance.
    pub fuzzy: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsTable {
    pub response: String,
    pub n: usize,
    pub df: usize,
    pub r2: f64,
    pub sigma2: f64,
    pub coefficients: Vec<Coefficient<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub response: String,
    pub predictor: String,
    pub n: usize,
    pub linear: PolyFit<f64>,
    pub quadratic: PolyFit<f64>,
    pub vertex: Option<f64>,
    pub r2_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRangeSummary {
    pub n: usize,
    pub rate: f64,
    pub tolerance: f64,
    pub offending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: String,
    pub seed: u64,
    /// SHA-256 of every consumed file, keyed by path relative to the run
    /// directory.
    pub inputs: BTreeMap<String, String>,
    pub counts: Counts,
    pub classification: BTreeMap<String, Stat<DimensionF1>>,
    pub macro_f1: Stat<f64>,
    pub agreement: Stat<Agreement>,
    pub bland_altman: BTreeMap<String, Stat<BlandAltmanResult<f64>>>,
    pub ols: Stat<OlsTable>,
    pub polynomial: Stat<Polynomial>,
    pub correlations: BTreeMap<String, Stat<CorrMatrix<f64>>>,
    pub out_of_range: Stat<OutOfRangeSummary>,
    pub distributions: BTreeMap<String, Stat<DistributionSummary<f64>>>,
    pub normality: Stat<ShapiroWilk>,
    pub figures: Vec<String>,
    pub tables: Vec<String>,
    pub omitted_figures: BTreeMap<String, String>,
}

/// JSON Schema (draft 2020-12) for [`EvalReport`].
pub fn schema() -> serde_json::Value {
    use serde_json::json;
    let stat = |inner: &str| {
        json!({
            "oneOf": [
                {"type": "object", "required": ["status", "value"], "additionalProperties": false,
                 "properties": {"status": {"const": "ok"}, "value": {"$ref": format!("#/$defs/{inner}")}}},
                {"type": "object", "required": ["status", "reason"], "additionalProperties": false,
                 "properties": {"status": {"const": "omitted"}, "reason": {"type": "string"}}}
            ]
        })
    };
    let map_of = |inner: &str| json!({"type": "object", "additionalProperties": stat(inner)});
    let num = json!({"type": "number"});
    let num_or_null = json!({"type": ["number", "null"]});
    let count = json!({"type": "integer", "minimum": 0});
    let metrics = json!({"type": "object", "required": ["precision", "recall", "f1"],
        "properties": {"precision": num, "recall": num, "f1": num}});
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": format!("https://msef.invalid/report/{SCHEMA_VERSION}"),
        "title": "Street evaluation audit report",
        "type": "object",
        "additionalProperties": false,
        "required": ["schema_version", "seed", "inputs", "counts", "classification", "macro_f1", "agreement",
                     "bland_altman", "ols", "polynomial", "correlations", "out_of_range", "distributions",
                     "normality", "figures", "tables", "omitted_figures"],
        "properties": {
            "schema_version": {"const": SCHEMA_VERSION},
            "seed": count,
            "inputs": {"type": "object", "minProperties": 1,
                       "additionalProperties": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
            "counts": {"type": "object", "required": ["images", "surveyed_images", "predicted_images", "predictions"],
                       "additionalProperties": count},
            "classification": map_of("dimension_f1"),
            "macro_f1": stat("unit"),
            "agreement": stat("agreement"),
            "bland_altman": map_of("bland_altman"),
            "ols": stat("ols"),
            "polynomial": stat("polynomial"),
            "correlations": map_of("correlation"),
            "out_of_range": stat("out_of_range"),
            "distributions": map_of("distribution"),
            "normality": stat("shapiro_wilk"),
            "figures": {"type": "array", "items": {"type": "string"}},
            "tables": {"type": "array", "items": {"type": "string"}},
            "omitted_figures": {"type": "object", "additionalProperties": {"type": "string"}}
        },
        "$defs": {
            "unit": {"type": "number", "minimum": 0, "maximum": 1},
            "metrics": metrics,
            "dimension_f1": {"type": "object", "required": ["n", "cuts", "report"], "properties": {
                "n": count,
                "cuts": {"type": "array", "items": num, "minItems": 2, "maxItems": 2},
                "report": {"type": "object", "required": ["per_class", "macro_avg"], "properties": {
                    "per_class": {"type": "array", "items": {"$ref": "#/$defs/metrics"}},
                    "macro_avg": {"$ref": "#/$defs/metrics"}}}}},
            "agreement": {"type": "object", "required": ["n", "exact", "fuzzy", "tolerance"], "properties": {
                "n": count, "exact": {"$ref": "#/$defs/unit"}, "fuzzy": {"$ref": "#/$defs/unit"}, "tolerance": num}},
            "bland_altman": {"type": "object", "required": ["n", "bias", "sd", "lower", "upper", "outliers"], "properties": {
                "n": count, "bias": num, "sd": num, "lower": num, "upper": num,
                "outliers": {"type": "array", "items": count}}},
            "coefficient": {"type": "object", "required": ["name", "beta", "se", "t", "p", "ci_lo", "ci_hi"], "properties": {
                "name": {"type": "string"}, "beta": num, "se": num, "t": num_or_null, "p": num,
                "ci_lo": num, "ci_hi": num}},
            "ols": {"type": "object", "required": ["response", "n", "df", "r2", "sigma2", "coefficients"], "properties": {
                "response": {"type": "string"}, "n": count, "df": count, "r2": num, "sigma2": num,
                "coefficients": {"type": "array", "items": {"$ref": "#/$defs/coefficient"}}}},
            "poly_fit": {"type": "object", "required": ["coefficients", "r2"], "properties": {
                "coefficients": {"type": "array", "items": num}, "r2": num}},
            "polynomial": {"type": "object", "required": ["response", "predictor", "n", "linear", "quadratic", "vertex", "r2_gain"], "properties": {
                "response": {"type": "string"}, "predictor": {"type": "string"}, "n": count,
                "linear": {"$ref": "#/$defs/poly_fit"}, "quadratic": {"$ref": "#/$defs/poly_fit"},
                "vertex": num_or_null, "r2_gain": num}},
            "correlation": {"type": "object", "required": ["method", "names", "values"], "properties": {
                "method": {"enum": ["pearson", "spearman"]},
                "names": {"type": "array", "items": {"type": "string"}},
                "values": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": -1, "maximum": 1}}}}},
            "out_of_range": {"type": "object", "required": ["n", "rate", "tolerance", "offending"], "properties": {
                "n": count, "rate": {"$ref": "#/$defs/unit"}, "tolerance": num, "offending": count}},
            "distribution": {"type": "object", "required": ["n", "q1", "median", "q3", "iqr", "min", "max"], "properties": {
                "n": count, "q1": num, "median": num, "q3": num, "iqr": num, "min": num, "max": num}},
            "shapiro_wilk": {"type": "object", "required": ["n", "w", "p"], "properties": {
                "n": count, "w": {"$ref": "#/$defs/unit"}, "p": {"$ref": "#/$defs/unit"}}}
        }
    })
}
