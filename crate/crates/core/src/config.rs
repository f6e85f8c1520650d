//! Metric selection by JSON config.
//!
//! `{"family": "round"|"ellipsoid"|"perturbed"|"quartic", "params": {...}}`

use crate::error::{Error, Result};
use crate::metric::{Bump, FinslerMetric};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EllipsoidParams {
    a: f64,
    b: f64,
    c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbedParams {
    epsilon: f64,
    bump: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuarticParams {
    epsilon: f64,
}

impl MetricConfig {
    pub fn round() -> Self {
        Self { family: "round".into(), params: serde_json::Value::Null }
    }

    pub fn build(&self) -> Result<FinslerMetric> {
        let params = if self.params.is_null() {
            serde_json::json!({})
        } else {
            self.params.clone()
        };
        match self.family.as_str() {
            "round" => Ok(FinslerMetric::round()),
            "ellipsoid" => {
                let p: EllipsoidParams = serde_json::from_value(params).map_err(|e| {
                    Error::Config(format!("ellipsoid params need fields a, b, c: {e}"))
                })?;
                FinslerMetric::ellipsoid(p.a, p.b, p.c)
            }
            "perturbed" => {
                let p: PerturbedParams = serde_json::from_value(params).map_err(|e| {
                    Error::Config(format!("perturbed params need fields epsilon, bump: {e}"))
                })?;
                let bump = Bump::by_name(&p.bump).ok_or_else(|| {
                    Error::Config(format!(
                        "unknown bump field \"{}\" (try \"z2\" or \"xyz\")",
                        p.bump
                    ))
                })?;
                FinslerMetric::perturbed_riemannian(p.epsilon, bump)
            }
            "quartic" => {
                let p: QuarticParams = serde_json::from_value(params).map_err(|e| {
                    Error::Config(format!("quartic params need field epsilon: {e}"))
                })?;
                FinslerMetric::quartic(p.epsilon)
            }
            other => Err(Error::Config(format!(
                "unknown metric family \"{other}\" (expected round, ellipsoid, perturbed, or quartic)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_each_family() {
        let cases = [
            r#"{"family": "round"}"#,
            r#"{"family": "ellipsoid", "params": {"a": 1.0, "b": 1.1, "c": 1.2}}"#,
            r#"{"family": "perturbed", "params": {"epsilon": 0.1, "bump": "z2"}}"#,
            r#"{"family": "quartic", "params": {"epsilon": 0.05}}"#,
        ];
        for c in cases {
            let cfg: MetricConfig = serde_json::from_str(c).unwrap();
            cfg.build().unwrap();
        }
    }

    #[test]
    fn errors_name_the_field() {
        let cfg: MetricConfig =
            serde_json::from_str(r#"{"family": "ellipsoid", "params": {"a": 1.0}}"#).unwrap();
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains('b'), "message should name the missing field: {err}");

        let cfg: MetricConfig = serde_json::from_str(
            r#"{"family": "perturbed", "params": {"epsilon": 0.1, "bump": "nope"}}"#,
        )
        .unwrap();
        let err = cfg.build().unwrap_err().to_string();
        assert!(err.contains("bump"), "{err}");
    }
}
