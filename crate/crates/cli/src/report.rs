//! Machine-readable audit reports.

use std::io::Write;
use std::path::Path;

use canary_audit::{
    CosineNull, EpsilonEstimate, EpsilonLowerBound, EstimateStatus, FederatedConfig, FittedMoments, GaussianSumInstance,
    NormalityDiagnostic,
};
use serde::{Deserialize, Serialize};

/// Non-finite floats as the strings `"inf"`, `"-inf"` and `"nan"`; JSON has
/// no literal for them.
pub mod num {
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
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, \"inf\", \"-inf\" or \"nan\", got {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonField {
    #[serde(with = "num")]
    pub value: f64,
    /// The estimate is `+∞`; `status` says why.
    pub saturated: bool,
    pub status: EstimateStatus,
}

impl From<&EpsilonEstimate<f64>> for EpsilonField {
    fn from(e: &EpsilonEstimate<f64>) -> Self {
        Self { value: e.epsilon, saturated: !e.epsilon.is_finite(), status: e.status }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Moments {
    #[serde(with = "num")]
    pub mean: f64,
    #[serde(with = "num")]
    pub std: f64,
}

impl From<FittedMoments<f64>> for Moments {
    fn from(m: FittedMoments<f64>) -> Self {
        Self { mean: m.mean, std: m.std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundField {
    #[serde(with = "num")]
    pub value: f64,
    pub confidence: f64,
    /// `+∞` when no finite threshold beats the trivial bound of 0.
    #[serde(with = "num")]
    pub threshold_used: f64,
    pub fpr: f64,
    pub fnr_upper: f64,
    /// Observed samples behind the bound.
    pub samples: usize,
}

impl LowerBoundField {
    pub fn new(lb: &EpsilonLowerBound<f64>, samples: usize) -> Self {
        Self {
            value: lb.value,
            confidence: lb.confidence,
            threshold_used: lb.threshold_used,
            fpr: lb.rates.fpr,
            fnr_upper: lb.rates.fnr_upper,
            samples,
        }
    }
}

/// What the observed cosines are compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NullModelField {
    /// `N(0, 1/d)`.
    Gaussian { dim: usize },
    /// Exact beta-based cosine law.
    Exact { dim: usize },
    /// Fitted to the max-over-rounds cosines of unobserved canaries.
    EmpiricalUnobserved { samples: usize },
}

impl From<CosineNull> for NullModelField {
    fn from(n: CosineNull) -> Self {
        match n {
            CosineNull::Gaussian { dim } => Self::Gaussian { dim },
            CosineNull::Exact { dim } => Self::Exact { dim },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalityField {
    pub ad_statistic: f64,
    pub reject_1pct: bool,
    pub reject_15pct: bool,
    pub samples: usize,
}

impl NormalityField {
    pub fn new(d: &NormalityDiagnostic, samples: usize) -> Self {
        Self { ad_statistic: d.ad_statistic, reject_1pct: d.reject_1pct, reject_15pct: d.reject_15pct, samples }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigEcho {
    Federated(FederatedConfig<f64>),
    GaussianSum(GaussianSumInstance<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    pub observed: usize,
    pub unobserved: usize,
}

/// One audit's results. Estimates are empirical, not certified bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub toolkit_version: String,
    pub command: String,
    /// Resolved configuration of run 0; run `i` used `seed + i`.
    pub config_echo: ConfigEcho,
    /// Independent runs pooled into this report.
    pub runs: usize,
    pub delta: f64,
    pub sample_counts: SampleCounts,
    pub epsilon_estimate: EpsilonField,
    pub epsilon_all_iterates: Option<EpsilonField>,
    pub epsilon_lower_bound: LowerBoundField,
    pub epsilon_lower_bound_all_iterates: Option<LowerBoundField>,
    pub fitted_observed: Moments,
    pub fitted_unobserved: Option<Moments>,
    pub null_model: NullModelField,
    pub null_model_all_iterates: Option<NullModelField>,
    /// Absent when there are too few observed samples for the test.
    pub normality: Option<NormalityField>,
    pub runtime_seconds: f64,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Wrap(#[serde(with = "num")] f64);

    #[test]
    fn non_finite_numbers_round_trip_as_strings() {
        for v in [f64::INFINITY, f64::NEG_INFINITY, 1.5, -0.0, 1e-300] {
            let s = serde_json::to_string(&Wrap(v)).unwrap();
            assert_eq!(serde_json::from_str::<Wrap>(&s).unwrap(), Wrap(v));
        }
        assert_eq!(serde_json::to_string(&Wrap(f64::INFINITY)).unwrap(), "\"inf\"");
        assert!(serde_json::from_str::<Wrap>("\"infinity\"").is_err());
        let nan: Wrap = serde_json::from_str("\"nan\"").unwrap();
        assert!(nan.0.is_nan());
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
