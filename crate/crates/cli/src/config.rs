//! Run-configuration file: one JSON document drives every subcommand.

use serde::{Deserialize, Serialize};
use waveletspace::params::SpaceParams;
use waveletspace::wavelet::WaveletSpec;

use crate::CliError;

/// Top-level configuration. Unknown keys are rejected at every nesting
/// level, and emission preserves exactly the parsed content, so
/// `parse ∘ emit ∘ parse = parse`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Analytic parameters `(n, t, r, p, τ)` shared by all commands.
    pub params: SpaceParams,
    /// Wavelet family used wherever a transform is taken.
    pub wavelet: WaveletSpec,
    /// Grid/transform resolution: grids carry `2^(Jn)` cells.
    #[serde(rename = "J")]
    pub resolution: u32,
    /// Seed for every randomized choice; overridden by `--seed`.
    pub seed: u64,
    /// Extremal-construction block (the `counterexample` command).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractal: Option<FractalBlock>,
    /// Solver defaults (the `solve` command; flags override).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
    /// Multiplier-bound test dictionary (optional `solve` diagnostics).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<DictionaryBlock>,
}

/// Parameters of the nested Cantor-type construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractalBlock {
    /// Number of construction stages `S`.
    pub depth: usize,
    /// Logarithmic bump exponent `δ > 0` of the companion weight.
    pub delta: f64,
    /// Minimum per-stage refinement depth.
    pub v_floor: u32,
}

/// Solver defaults; every field optional, command-line flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

/// Seed override for the multiplier-bound test dictionary. When this block
/// is present, `solve` additionally reports a multiplier-norm lower bound
/// for the potential, probed against the seeded dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses and validates a configuration document.
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("run configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params
            .validate()
            .map_err(|e| CliError::Input(format!("run configuration: {e}")))?;
        self.wavelet
            .validate()
            .map_err(|e| CliError::Input(format!("run configuration: {e}")))?;
        if self.resolution == 0 || self.resolution > 30 {
            return Err(CliError::Input(format!(
                "run configuration: resolution J must lie in 1..=30, got {}",
                self.resolution
            )));
        }
        if let Some(fractal) = &self.fractal {
            if fractal.depth == 0 {
                return Err(CliError::Input(
                    "run configuration: fractal depth must be at least 1".into(),
                ));
            }
            if !(fractal.delta > 0.0) || !fractal.delta.is_finite() {
                return Err(CliError::Input(format!(
                    "run configuration: fractal delta must be positive and finite, got {}",
                    fractal.delta
                )));
            }
        }
        if let Some(solver) = &self.solver {
            for (name, value) in [("t", solver.t), ("r", solver.r), ("tol", solver.tol)] {
                if let Some(v) = value {
                    if !v.is_finite() {
                        return Err(CliError::Input(format!(
                            "run configuration: solver {name} must be finite, got {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON emission.
    #[cfg(test)]
    fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run configuration serializes")
    }
}
