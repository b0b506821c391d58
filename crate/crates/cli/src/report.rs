//! Machine-readable run reports.

use serde::{Deserialize, Serialize};

/// Finite floats as JSON numbers; `inf`, `-inf` and `nan` as strings.
pub mod real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(de::Error::custom(format!("expected a number, got {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictLabel {
    Solvable,
    Unsolvable,
    Inconclusive,
}

impl From<glaeser_core::Status> for VerdictLabel {
    fn from(s: glaeser_core::Status) -> Self {
        match s {
            glaeser_core::Status::Solvable => VerdictLabel::Solvable,
            glaeser_core::Status::Unsolvable => VerdictLabel::Unsolvable,
            glaeser_core::Status::Inconclusive => VerdictLabel::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeInfo {
    pub m: usize,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleResidual {
    pub delta: f64,
    pub points_resolved: usize,
    pub tuples: usize,
    #[serde(with = "real")]
    pub max_min_q: f64,
    #[serde(with = "real")]
    pub max_mean_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinitenessSummary {
    /// Largest `M_S` found.
    #[serde(with = "real")]
    pub sup_m: f64,
    /// Point indices of the maximizing subset.
    pub subset: Vec<usize>,
    pub subset_points: Vec<Vec<f64>>,
    /// Flat witness jet vectors, one per subset point; empty when infeasible.
    pub witness: Vec<Vec<f64>>,
    pub k_sharp: usize,
    pub examined: usize,
    pub exhaustive: bool,
    pub kkt_residual: f64,
    #[serde(with = "real")]
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    pub shape: ShapeInfo,
    pub points: usize,
    pub verdict: Option<VerdictLabel>,
    pub iterations: Option<usize>,
    pub reached_fixpoint: Option<bool>,
    /// Round cap `2 · dim + 1`.
    pub bound: Option<usize>,
    /// Fiber dimension per round and point, `-1` for empty.
    pub dims_per_round: Vec<Vec<i64>>,
    pub scale_residuals: Vec<ScaleResidual>,
    pub first_empty_point: Option<Vec<f64>>,
    pub first_empty_index: Option<usize>,
    pub finiteness: Option<FinitenessSummary>,
    /// Wall time, only with `--timing` so that reports stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
