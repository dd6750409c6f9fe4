//! Job documents: the human-writable description of one verification.
//!
//! Documents are TOML; text whose first non-blank character is `{` is read
//! as JSON.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::parse::parse_poly;
use crate::hs::{default_resolution, HsJob, Tolerances};
use crate::quadrature::PolydiskRule;
use crate::series::VectorSymbol;
use crate::spaces::{OperatorKind, SourceSpace, SpaceKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    Composition,
    RadialCompDiff,
    OneVarDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: OperatorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSpec {
    pub radial: usize,
    pub angular: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Structured,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDocument {
    pub space: SpaceSpec,
    pub operator: OperatorSpec,
    pub m: usize,
    pub phi: Vec<String>,
    pub psi: String,
    pub truncation: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl JobDocument {
    /// Reads a TOML or JSON document.
    pub fn from_text(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("job documents serialize to TOML")
    }

    pub fn operator_kind(&self) -> Result<OperatorKind> {
        match (self.operator.kind, self.operator.t) {
            (OperatorName::Composition, None) => Ok(OperatorKind::Composition),
            (OperatorName::OneVarDerivative, None) => Ok(OperatorKind::OneVarDerivative),
            (OperatorName::RadialCompDiff, Some(t)) => Ok(OperatorKind::RadialCompDiff { t }),
            (OperatorName::RadialCompDiff, None) => {
                Err(Error::Validation("radial_comp_diff requires operator.t".into()))
            }
            (kind, Some(_)) => Err(Error::Validation(format!(
                "operator.t is only meaningful for radial_comp_diff, not {}",
                serde_json::to_string(&kind).expect("enum serializes")
            ))),
        }
    }

    /// Validates the document and builds the job.
    pub fn to_job(&self) -> Result<HsJob> {
        let source = SourceSpace::new(self.space.kind, self.space.n, self.space.alpha)?;
        let operator = self.operator_kind()?;
        let beta = source.target_beta()?;
        if self.m == 0 {
            return Err(Error::Validation("m must be at least 1".into()));
        }
        if self.phi.len() != self.space.n {
            return Err(Error::Validation(format!(
                "phi lists {} components but space.n = {}",
                self.phi.len(),
                self.space.n
            )));
        }
        let components = self
            .phi
            .iter()
            .enumerate()
            .map(|(i, text)| {
                parse_poly(text, self.m).map_err(|source| Error::Expression {
                    field: format!("phi[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let psi = parse_poly(&self.psi, self.m).map_err(|source| Error::Expression {
            field: "psi".into(),
            source,
        })?;
        let (radial, angular) = match self.quad {
            Some(q) => (q.radial, q.angular),
            None => default_resolution(self.m),
        };
        let rule = PolydiskRule::build(self.m, beta, radial, angular)?;
        HsJob::new(
            source,
            operator,
            VectorSymbol::new(components)?,
            psi,
            self.truncation,
            rule,
            self.tolerances.unwrap_or_default(),
        )
    }

    /// The document describing `job`; `load_job` of its serialization
    /// rebuilds an identical job.
    pub fn echo(job: &HsJob, format: Option<OutputFormat>) -> Self {
        let source = job.source();
        let (kind, t) = match job.operator() {
            OperatorKind::Composition => (OperatorName::Composition, None),
            OperatorKind::RadialCompDiff { t } => (OperatorName::RadialCompDiff, Some(t)),
            OperatorKind::OneVarDerivative => (OperatorName::OneVarDerivative, None),
        };
        let axis = job.rule().axis();
        Self {
            space: SpaceSpec {
                kind: source.kind(),
                n: source.n(),
                alpha: source.alpha(),
            },
            operator: OperatorSpec { kind, t },
            m: job.phi().num_vars(),
            phi: job.phi().components().iter().map(ToString::to_string).collect(),
            psi: job.psi().to_string(),
            truncation: job.truncation(),
            quad: Some(QuadSpec {
                radial: axis.radial_count(),
                angular: axis.angular_count(),
            }),
            tolerances: Some(job.tolerances()),
            format,
        }
    }
}

/// Parses and validates a job document.
pub fn load_job(bytes: &[u8]) -> Result<HsJob> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Schema(format!("document is not UTF-8: {e}")))?;
    JobDocument::from_text(text)?.to_job()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
m = 1
phi = ["0.5*z"]
psi = "1"
truncation = 40

[space]
kind = "bergman_ball"
n = 1
alpha = 0.0

[operator]
kind = "composition"
"#;

    #[test]
    fn minimal_document() {
        let job = load_job(MINIMAL.as_bytes()).unwrap();
        assert_eq!(job.rule().beta(), 0.0);
        assert_eq!(job.source(), SourceSpace::bergman_ball(1, 0.0).unwrap());
        assert_eq!(job.operator(), OperatorKind::Composition);
        assert_eq!(job.rule().axis().radial_count(), 64);
    }

    #[test]
    fn json_document() {
        let json = r#"{"space": {"kind": "hardy_ball", "n": 2}, "operator": {"kind": "radial_comp_diff", "t": 1.0},
            "m": 1, "phi": ["0.5*z", "0.25*z^2"], "psi": "1 + z", "truncation": 20, "quad": {"radial": 16, "angular": 32}}"#;
        let job = load_job(json.as_bytes()).unwrap();
        assert_eq!(job.rule().beta(), 0.0);
        assert_eq!(job.rule().axis().angular_count(), 32);
    }

    #[test]
    fn validation_errors() {
        let hardy1 = MINIMAL.replace("kind = \"bergman_ball\"", "kind = \"hardy_ball\"").replace("alpha = 0.0", "");
        assert!(matches!(load_job(hardy1.as_bytes()), Err(Error::InvalidWeight(_))));

        let neg_t = MINIMAL.replace("kind = \"composition\"", "kind = \"radial_comp_diff\"\nt = -1.0");
        assert!(matches!(load_job(neg_t.as_bytes()), Err(Error::Validation(_))));

        let poly = MINIMAL
            .replace("kind = \"bergman_ball\"", "kind = \"bergman_polydisk\"")
            .replace("kind = \"composition\"", "kind = \"radial_comp_diff\"\nt = 1.0");
        let err = load_job(poly.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no such theorem in scope"), "{err}");

        let bad_expr = MINIMAL.replace("0.5*z", "0.5*z2");
        assert!(matches!(load_job(bad_expr.as_bytes()), Err(Error::Expression { .. })));

        let missing = MINIMAL.replace("truncation = 40", "");
        assert!(matches!(load_job(missing.as_bytes()), Err(Error::Schema(_))));

        let unknown = MINIMAL.replace("m = 1", "m = 1\ncolour = 3");
        assert!(matches!(load_job(unknown.as_bytes()), Err(Error::Schema(_))));
    }

    #[test]
    fn echo_round_trip() {
        let job = load_job(MINIMAL.as_bytes()).unwrap();
        let doc = JobDocument::echo(&job, None);
        assert_eq!(load_job(doc.to_toml().as_bytes()).unwrap(), job);
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(load_job(json.as_bytes()).unwrap(), job);
    }
}
