//! Orthonormal periodized wavelet analysis and synthesis on the torus.
//!
//! Two families are supported. The compactly supported family is computed
//! from its defining equations at runtime (moment orders 1 through 10; order
//! 1 is the Haar pair) and transforms by periodized filter banks. The
//! band-limited family transforms by smooth frequency masks applied level by
//! level. Both give orthonormal bases of every dyadic grid, so analysis is
//! unitary up to a fixed volume normalization: coefficients are discrete L²
//! inner products against basis functions of unit discrete L² norm, and the
//! sum of squared coefficients equals the mean-square grid norm.

mod daubechies;
mod meyer;
mod transform;

pub use daubechies::{daubechies_filter, FilterPair};
pub use meyer::{meyer_filterbank, LevelMasks};
pub use transform::{
    forward_dwt, inverse_dwt, scaling_coefficients, synthesize_basis_function,
    synthesize_scaling_function, vanishing_moment_residual,
};
pub(crate) use transform::synthesize;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Wavelet family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletFamily {
    /// Compactly supported orthonormal filters with a prescribed number of
    /// vanishing moments.
    Daubechies,
    /// Band-limited orthonormal masks with a smooth polynomial transition.
    DiscreteMeyer,
}

/// Choice of wavelet basis: family plus, for the compactly supported family,
/// the vanishing-moment order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    /// Vanishing-moment order; required for `Daubechies`, absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

impl WaveletSpec {
    pub fn daubechies(m: u32) -> Self {
        WaveletSpec { family: WaveletFamily::Daubechies, m: Some(m) }
    }

    /// Order-1 compactly supported basis.
    pub fn haar() -> Self {
        Self::daubechies(1)
    }

    pub fn discrete_meyer() -> Self {
        WaveletSpec { family: WaveletFamily::DiscreteMeyer, m: None }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.family {
            WaveletFamily::Daubechies => match self.m {
                Some(m) if (1..=10).contains(&m) => Ok(()),
                Some(m) => Err(Error::invalid(format!(
                    "moment order {m} unsupported (1 through 10)"
                ))),
                None => Err(Error::invalid("moment order required for this family")),
            },
            WaveletFamily::DiscreteMeyer => {
                if self.m.is_some() {
                    Err(Error::invalid("the band-limited family takes no moment order"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Vanishing-moment order, when the family has one.
    pub fn moment_order(&self) -> Option<u32> {
        match self.family {
            WaveletFamily::Daubechies => self.m,
            WaveletFamily::DiscreteMeyer => None,
        }
    }

    /// Smallest exponent `M` with the mother wavelet supported in an
    /// interval of `2^M` unit cells per axis (filter length minus one);
    /// `None` for the band-limited family, which has global support.
    pub fn support_exponent(&self) -> Option<u32> {
        self.moment_order().map(|m| {
            let support = 2 * m - 1;
            support.next_power_of_two().trailing_zeros()
        })
    }

    /// Smallest admissible grid resolution: the filter must fit on the grid
    /// (`2^J >= 2m`), and the band-limited masks need room for their
    /// transition band.
    pub fn min_resolution(&self) -> u32 {
        match self.family {
            WaveletFamily::Daubechies => {
                let m = self.m.unwrap_or(1);
                let len = 2 * m;
                len.next_power_of_two().trailing_zeros().max(1)
            }
            WaveletFamily::DiscreteMeyer => 3,
        }
    }

    /// Coarsest level at which a single basis function fits in half the
    /// torus without wrapping around (used when a well-defined position
    /// variable is needed).
    pub(crate) fn anchor_level(&self) -> u32 {
        match self.family {
            WaveletFamily::Daubechies => {
                let m = self.m.unwrap_or(1);
                let need = 2 * (2 * m - 1);
                (need as u64).next_power_of_two().trailing_zeros()
            }
            WaveletFamily::DiscreteMeyer => 2,
        }
    }
}
