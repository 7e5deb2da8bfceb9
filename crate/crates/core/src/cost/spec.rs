use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{constant_cost, radial_cost, sinr_cost, CostError, CostModel, SinrParams};

/// A textual cost-model selector: `radial:<scale>`, `sinr:<alpha>,<a>,<b>`
/// or `const:<kappa>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelSpec {
    Radial { scale: f64 },
    Sinr { alpha: f64, a: f64, b: f64 },
    Constant { kappa: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<CostModel, CostError> {
        match *self {
            ModelSpec::Radial { scale } => radial_cost(scale),
            ModelSpec::Sinr { alpha, a, b } => Ok(sinr_cost(SinrParams::new(alpha, a, b)?)),
            ModelSpec::Constant { kappa } => constant_cost(kappa),
        }
    }
}

fn number(spec: &str, field: &str, s: &str) -> Result<f64, CostError> {
    let v: f64 = s.trim().parse().map_err(|_| CostError::Parse {
        spec: spec.to_string(),
        reason: format!("{field} is not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(CostError::Parse {
            spec: spec.to_string(),
            reason: format!("{field} must be finite"),
        });
    }
    Ok(v)
}

impl FromStr for ModelSpec {
    type Err = CostError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| CostError::Parse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (family, args) = spec
            .trim()
            .split_once(':')
            .ok_or_else(|| err("expected <family>:<parameters>"))?;
        let parsed = match family {
            "radial" => ModelSpec::Radial {
                scale: number(spec, "scale", args)?,
            },
            "const" => ModelSpec::Constant {
                kappa: number(spec, "kappa", args)?,
            },
            "sinr" => {
                let parts: Vec<&str> = args.split(',').collect();
                let [alpha, a, b] = parts[..] else {
                    return Err(err("sinr takes exactly three parameters alpha,a,b"));
                };
                ModelSpec::Sinr {
                    alpha: number(spec, "alpha", alpha)?,
                    a: number(spec, "a", a)?,
                    b: number(spec, "b", b)?,
                }
            }
            _ => return Err(err("unknown family; expected radial, sinr or const")),
        };
        parsed.build()?;
        Ok(parsed)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Radial { scale } => write!(f, "radial:{scale}"),
            ModelSpec::Sinr { alpha, a, b } => write!(f, "sinr:{alpha},{a},{b}"),
            ModelSpec::Constant { kappa } => write!(f, "const:{kappa}"),
        }
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = CostError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.to_string()
    }
}
