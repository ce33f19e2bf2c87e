//! Analytic parameter bundle shared by the norm and multiplier routines.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Exponents describing which scale of spaces a computation runs in.
///
/// The scaling condition `p·(r + t) < n` is enforced at construction: it is
/// what keeps the cube-supremum norms finite and the extremal construction
/// meaningful. The stronger condition `r + t < 1` is only needed by the
/// kernel-weighted functionals and is checked where those are requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceParams {
    /// Dimension of the torus; 1 or 2.
    pub n: usize,
    /// Auxiliary smoothness offset, `t >= 0`.
    pub t: f64,
    /// Primary smoothness, `r > 0`.
    pub r: f64,
    /// Integrability exponent, `1 < p < infinity`.
    pub p: f64,
    /// Logarithmic weight exponent, `tau >= 0`.
    pub tau: f64,
}

impl SpaceParams {
    pub fn new(n: usize, t: f64, r: f64, p: f64, tau: f64) -> Result<Self, Error> {
        let params = SpaceParams { n, t, r, p, tau };
        params.validate()?;
        Ok(params)
    }

    /// Re-checks every invariant; used after deserializing configurations.
    pub fn validate(&self) -> Result<(), Error> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {}", self.n)));
        }
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(Error::invalid(format!("r must be positive and finite, got {}", self.r)));
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(Error::invalid(format!("t must be nonnegative and finite, got {}", self.t)));
        }
        if !self.p.is_finite() || self.p <= 1.0 {
            return Err(Error::invalid(format!("p must lie in (1, inf), got {}", self.p)));
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::invalid(format!("tau must be nonnegative, got {}", self.tau)));
        }
        if self.p * (self.r + self.t) >= self.n as f64 {
            return Err(Error::invalid(format!(
                "scaling condition p(r+t) < n violated: {} * {} >= {}",
                self.p,
                self.r + self.t,
                self.n
            )));
        }
        Ok(())
    }

    /// The positive margin `n - p(r+t)` left by the scaling condition.
    pub fn scaling_gap(&self) -> f64 {
        self.n as f64 - self.p * (self.r + self.t)
    }

    /// Conjugate exponent `p' = p/(p-1)`.
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}
