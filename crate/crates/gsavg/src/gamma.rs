//! Transforms applied to scaled squared distances inside the block
//! dissimilarity.
//!
//! Every transform is continuous, monotonically increasing on the
//! nonnegative half-line, and satisfies gamma(0) = 0. The three admissible
//! kinds additionally have a non-constant completely monotone derivative,
//! which is what makes the per-block energy distance separate distributions;
//! that property is mathematical, not something a finite test can certify,
//! so it is recorded as a hard-coded flag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distance transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gamma {
    /// gamma(t) = 1 - e^(-t). Bounded; the recommended default.
    #[serde(rename = "exp")]
    ExpSaturate,
    /// gamma(t) = sqrt(t) / 2.
    #[serde(rename = "sqrt")]
    SqrtHalf,
    /// gamma(t) = ln(1 + t).
    #[serde(rename = "log")]
    Log1p,
    /// gamma(t) = t. Not admissible for separation theory; with singleton
    /// blocks it reproduces the plain scaled squared Euclidean distance, so
    /// it exists to realize the SAVG-equivalence reduction.
    #[serde(rename = "identity")]
    Identity,
}

impl Gamma {
    pub const ALL: [Gamma; 4] = [
        Gamma::ExpSaturate,
        Gamma::SqrtHalf,
        Gamma::Log1p,
        Gamma::Identity,
    ];

    /// Evaluate the transform at `t >= 0`.
    ///
    /// `t = +inf` is accepted: `ExpSaturate` saturates at 1, the unbounded
    /// kinds return `+inf`.
    pub fn eval(self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::NanInput);
        }
        if t < 0.0 {
            return Err(Error::NegativeInput(t));
        }
        Ok(self.apply(t))
    }

    /// Unchecked evaluation; callers guarantee `t >= 0`.
    #[inline]
    pub(crate) fn apply(self, t: f64) -> f64 {
        match self {
            // -expm1(-t) = 1 - e^(-t) without cancellation near 0.
            Gamma::ExpSaturate => -(-t).exp_m1(),
            Gamma::SqrtHalf => t.sqrt() / 2.0,
            Gamma::Log1p => t.ln_1p(),
            Gamma::Identity => t,
        }
    }

    /// True only for transforms with bounded range (`ExpSaturate`).
    pub fn is_bounded(self) -> bool {
        matches!(self, Gamma::ExpSaturate)
    }

    /// Whether the transform has a non-constant completely monotone
    /// derivative, the condition under which a positive block-level energy
    /// distance is guaranteed whenever block distributions differ.
    pub fn is_admissible(self) -> bool {
        !matches!(self, Gamma::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Gamma::ExpSaturate => "exp",
            Gamma::SqrtHalf => "sqrt",
            Gamma::Log1p => "log",
            Gamma::Identity => "identity",
        }
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp" | "exp_saturate" => Ok(Gamma::ExpSaturate),
            "sqrt" | "sqrt_half" => Ok(Gamma::SqrtHalf),
            "log" | "log1p" => Ok(Gamma::Log1p),
            "identity" | "id" => Ok(Gamma::Identity),
            other => Err(Error::InvalidParameter(format!(
                "unknown gamma {other:?}; expected one of exp, sqrt, log, identity"
            ))),
        }
    }
}
