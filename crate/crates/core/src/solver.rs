//! Fixed-point solver for `(I + (-Δ)^{r/2} + V) f = g` on the torus grid.
//!
//! The fractional operators are Fourier multipliers on the discrete
//! frequency grid: `I + (-Δ)^{s/2}` acts as `1 + |2πm|^s` over symmetrized
//! integer frequencies `m` (each index folded into `(-N/2, N/2]`; the
//! multiplier is real and even, so real input gives real output and
//! inversion is always well-posed — the symbol is at least 1).
//!
//! Writing `T = [I+(-Δ)^{t/2}][I+(-Δ)^{r/2}]` and substituting `f = T^{-1}
//! f̃` turns the equation into `(I + S) f̃ = g̃` with `g̃ = [I+(-Δ)^{t/2}] g`
//! and `S = [I+(-Δ)^{t/2}] V T^{-1}`. When `S` is a contraction on the grid
//! the Neumann series converges, and the fixed-point form `f̃ ← g̃ - S f̃`
//! computes it with one apply per step. Contraction is certified by a
//! seeded power iteration on `S` — an operational stand-in for the
//! unquantified smallness hypothesis the theory places on `V`, which may
//! itself be a rough (unbounded) grid function.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::Error;
use crate::grid::GridFunction;
use crate::rng::SplitMix64;

/// Power-iteration length and seed used by the solver's contraction gate.
const GATE_ITERS: usize = 20;
const GATE_SEED: u64 = 0x5EED_CAFE;

/// Outcome of a Neumann-series solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// The computed solution `f` on the input grid.
    pub solution: GridFunction,
    /// Fixed-point steps taken.
    pub iterations: usize,
    /// Ratios of consecutive iterate differences
    /// `‖f̃_{m+1} - f̃_m‖ / ‖f̃_m - f̃_{m-1}‖` — geometric decay at rate
    /// ≈ ‖S‖ when the series contracts.
    pub contraction_estimates: Vec<f64>,
    /// Independent relative residual `‖(I+(-Δ)^{r/2})f + Vf - g‖₂ / ‖g‖₂`.
    pub residual: f64,
    /// Whether the fixed-point iteration reached its stopping criterion
    /// within the budget and the independently recomputed residual met the
    /// tolerance. The per-step ratios themselves may oscillate above 1 for
    /// non-normal `S` (only their running products must decay), so they do
    /// not enter this flag.
    pub converged: bool,
}

fn check_order(s: f64) -> Result<(), Error> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!(
            "multiplier order must be nonnegative and finite, got {s}"
        )));
    }
    Ok(())
}

fn check_same_grid(a: &GridFunction, b: &GridFunction, what: &str) -> Result<(), Error> {
    if a.n() != b.n() || a.resolution() != b.resolution() {
        return Err(Error::invalid(format!(
            "{what} must share the grid: {}d at {} vs {}d at {}",
            a.n(),
            a.resolution(),
            b.n(),
            b.resolution()
        )));
    }
    Ok(())
}

/// Index `m` of an `N`-point transform folded to the symmetric range;
/// returns its absolute value (the Nyquist bin is its own conjugate, so
/// only the magnitude ever matters).
fn folded_magnitude(m: usize, points: usize) -> f64 {
    if 2 * m <= points {
        m as f64
    } else {
        (points - m) as f64
    }
}

/// In-place forward (`direction = +1`) or unnormalized inverse FFT along
/// both axes of the row-major buffer.
fn fft_grid(data: &mut [Complex64], n: usize, side: usize, forward: bool) {
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(side)
    } else {
        planner.plan_fft_inverse(side)
    };
    if n == 1 {
        fft.process(data);
        return;
    }
    for row in data.chunks_exact_mut(side) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); side];
    for c in 0..side {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = data[r * side + c];
        }
        fft.process(&mut column);
        for (r, &value) in column.iter().enumerate() {
            data[r * side + c] = value;
        }
    }
}

/// Applies `I + (-Δ)^{s/2}` (or its inverse) as the Fourier multiplier
/// `1 + |2πm|^s` over symmetrized integer frequencies.
pub fn bessel_apply(f: &GridFunction, s: f64, inverse: bool) -> Result<GridFunction, Error> {
    check_order(s)?;
    let n = f.n();
    let side = f.side();
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_grid(&mut data, n, side, true);
    for (idx, value) in data.iter_mut().enumerate() {
        let magnitude = if n == 1 {
            folded_magnitude(idx, side)
        } else {
            let m0 = folded_magnitude(idx / side, side);
            let m1 = folded_magnitude(idx % side, side);
            (m0 * m0 + m1 * m1).sqrt()
        };
        let multiplier = 1.0 + (2.0 * PI * magnitude).powf(s);
        if inverse {
            *value /= multiplier;
        } else {
            *value *= multiplier;
        }
    }
    fft_grid(&mut data, n, side, false);
    let scale = 1.0 / data.len() as f64;
    let values = data.iter().map(|c| c.re * scale).collect();
    GridFunction::from_values(n, f.resolution(), values)
}

/// The conjugated potential operator
/// `S = [I+(-Δ)^{t/2}] · V · [I+(-Δ)^{r/2}]^{-1} [I+(-Δ)^{t/2}]^{-1}`
/// applied to `f`.
pub fn apply_s(
    v: &GridFunction,
    f: &GridFunction,
    t: f64,
    r: f64,
) -> Result<GridFunction, Error> {
    check_same_grid(v, f, "potential and argument")?;
    let lifted = bessel_apply(&bessel_apply(f, t, true)?, r, true)?;
    bessel_apply(&v.pointwise_mul(&lifted), t, false)
}

/// Seeded power iteration estimating the `L²` operator norm of `S` on the
/// grid: iterates `x ← Sx / ‖Sx‖` from a random start and returns the last
/// amplification factor `‖Sx‖/‖x‖`. Deterministic given the seed.
pub fn spectral_radius_estimate(
    v: &GridFunction,
    t: f64,
    r: f64,
    iters: usize,
    seed: u64,
) -> Result<f64, Error> {
    check_order(t)?;
    check_order(r)?;
    if iters < 10 {
        return Err(Error::invalid(format!(
            "power iteration needs at least 10 steps, got {iters}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let start: Vec<f64> = (0..v.len()).map(|_| rng.next_signed()).collect();
    let mut x = GridFunction::from_values(v.n(), v.resolution(), start)?;
    let norm = x.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    x = x.scale(norm.recip());
    let mut ratio = 0.0;
    for _ in 0..iters {
        let next = apply_s(v, &x, t, r)?;
        let amplification = next.l2_norm();
        if amplification == 0.0 {
            return Ok(0.0);
        }
        ratio = amplification; // ‖x‖ is 1 by the running normalization.
        x = next.scale(amplification.recip());
    }
    Ok(ratio)
}

/// Relative `L²` residual of the equation:
/// `‖(I+(-Δ)^{r/2})f + Vf - g‖₂ / ‖g‖₂` (absolute when `g = 0`).
pub fn residual(
    f: &GridFunction,
    v: &GridFunction,
    g: &GridFunction,
    r: f64,
) -> Result<f64, Error> {
    check_same_grid(f, v, "solution and potential")?;
    check_same_grid(f, g, "solution and data")?;
    let lhs = bessel_apply(f, r, false)?
        .add(&v.pointwise_mul(f))
        .sub(g);
    let numerator = lhs.l2_norm();
    let denominator = g.l2_norm();
    if denominator == 0.0 {
        Ok(numerator)
    } else {
        Ok(numerator / denominator)
    }
}

/// The fixed-point loop, parameterized by the starting iterate (in the
/// transformed `f̃` variable). The public entry starts from `g̃`, the first
/// Neumann term; the unique-fixed-point property is exercised by starting
/// elsewhere.
fn iterate_from(
    start: GridFunction,
    v: &GridFunction,
    g: &GridFunction,
    t: f64,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport, Error> {
    let g_lift = bessel_apply(g, t, false)?;
    let stop = 0.1 * tol * g_lift.l2_norm();
    let mut current = start;
    let mut previous_diff: Option<f64> = None;
    let mut estimates = Vec::new();
    let mut iterations = 0;
    let mut reached_stop = false;
    for step in 1..=max_iter {
        let next = g_lift.sub(&apply_s(v, &current, t, r)?);
        let diff = next.sub(&current).l2_norm();
        if let Some(previous) = previous_diff {
            if previous > 0.0 {
                estimates.push(diff / previous);
            }
        }
        current = next;
        iterations = step;
        if diff <= stop {
            reached_stop = true;
            break;
        }
        previous_diff = Some(diff);
    }
    let solution = bessel_apply(&bessel_apply(&current, t, true)?, r, true)?;
    let residual = residual(&solution, v, g, r)?;
    let converged = reached_stop && residual <= tol;
    Ok(SolveReport {
        solution,
        iterations,
        contraction_estimates: estimates,
        residual,
        converged,
    })
}

/// Solves `(I + (-Δ)^{r/2} + V) f = g` by the Neumann fixed-point
/// iteration `f̃ ← g̃ - S f̃`, refusing outright when the power-iteration
/// estimate of `‖S‖` is not below 1. Non-convergence within `max_iter` is
/// not an error: the report comes back with `converged = false`.
pub fn neumann_solve(
    v: &GridFunction,
    g: &GridFunction,
    t: f64,
    r: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport, Error> {
    check_same_grid(v, g, "potential and data")?;
    check_order(t)?;
    check_order(r)?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::invalid("iteration budget must be at least 1"));
    }
    let estimate = spectral_radius_estimate(v, t, r, GATE_ITERS, GATE_SEED)?;
    if !(estimate < 1.0) {
        return Err(Error::NotContractive { estimate });
    }
    let start = bessel_apply(g, t, false)?;
    iterate_from(start, v, g, t, r, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CoefficientField;
    use crate::fractal;
    use crate::params::SpaceParams;
    use crate::wavelet::{inverse_dwt, WaveletSpec};

    fn random_field(n: usize, j: u32, seed: u64) -> GridFunction {
        let mut rng = SplitMix64::new(seed);
        let len = 1usize << (j as usize * n);
        GridFunction::from_values(n, j, (0..len).map(|_| rng.next_signed()).collect()).unwrap()
    }

    fn smooth_rhs(j: u32) -> GridFunction {
        GridFunction::from_fn(1, j, |x| 1.0 + 0.4 * (2.0 * PI * x[0]).cos()).unwrap()
    }

    #[test]
    fn constants_pass_through_the_multiplier() {
        for n in [1usize, 2] {
            let f = GridFunction::ones(n, 5).unwrap().scale(2.5);
            let out = bessel_apply(&f, 0.7, false).unwrap();
            for &v in out.values() {
                assert!((v - 2.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_modes_scale_by_the_symbol() {
        let f = GridFunction::from_fn(1, 8, |x| (2.0 * PI * 3.0 * x[0]).cos()).unwrap();
        let s = 0.6;
        let symbol = 1.0 + (2.0 * PI * 3.0).powf(s);
        let out = bessel_apply(&f, s, false).unwrap();
        let diff = out.sub(&f.scale(symbol)).sup_norm();
        assert!(diff <= 1e-12 * symbol, "off by {diff}");

        let f2 = GridFunction::from_fn(2, 6, |x| {
            (2.0 * PI * (2.0 * x[0] + 5.0 * x[1])).cos()
        })
        .unwrap();
        let symbol2 = 1.0 + (2.0 * PI * 29.0f64.sqrt()).powf(s);
        let out2 = bessel_apply(&f2, s, false).unwrap();
        let diff2 = out2.sub(&f2.scale(symbol2)).sup_norm();
        assert!(diff2 <= 1e-12 * symbol2, "off by {diff2}");
    }

    #[test]
    fn inverse_round_trips() {
        for n in [1usize, 2] {
            let f = random_field(n, if n == 1 { 8 } else { 5 }, 7);
            let there = bessel_apply(&f, 0.8, false).unwrap();
            let back = bessel_apply(&there, 0.8, true).unwrap();
            assert!(back.sub(&f).sup_norm() <= 1e-12);
            let inv_first = bessel_apply(&bessel_apply(&f, 0.8, true).unwrap(), 0.8, false)
                .unwrap();
            assert!(inv_first.sub(&f).sup_norm() <= 1e-12);
        }
    }

    #[test]
    fn conjugated_operator_collapses_for_unit_potential_at_t_zero() {
        let f = random_field(1, 8, 11);
        let v = GridFunction::ones(1, 8).unwrap();
        let direct = bessel_apply(&f, 0.3, true).unwrap();
        let via_s = apply_s(&v, &f, 0.0, 0.3).unwrap();
        assert!(via_s.sub(&direct).sup_norm() <= 1e-12);
    }

    #[test]
    fn conjugated_operator_is_linear_and_kills_zero_potential() {
        let f1 = random_field(1, 7, 3);
        let f2 = random_field(1, 7, 4);
        let v = GridFunction::from_fn(1, 7, |x| 0.5 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let zero = GridFunction::zeros(1, 7).unwrap();
        assert_eq!(apply_s(&zero, &f1, 0.2, 0.3).unwrap().sup_norm(), 0.0);
        let combined = apply_s(&v, &f1.scale(2.0).add(&f2.scale(-3.0)), 0.2, 0.3).unwrap();
        let separate = apply_s(&v, &f1, 0.2, 0.3)
            .unwrap()
            .scale(2.0)
            .add(&apply_s(&v, &f2, 0.2, 0.3).unwrap().scale(-3.0));
        assert!(combined.sub(&separate).sup_norm() <= 1e-12);
    }

    #[test]
    fn spectral_estimate_is_zero_for_zero_potential_and_scales_linearly() {
        let zero = GridFunction::zeros(1, 7).unwrap();
        assert_eq!(spectral_radius_estimate(&zero, 0.2, 0.3, 12, 1).unwrap(), 0.0);
        let v = GridFunction::from_fn(1, 7, |x| 0.4 + 0.3 * (2.0 * PI * x[0]).sin()).unwrap();
        let base = spectral_radius_estimate(&v, 0.2, 0.3, 15, 9).unwrap();
        let tripled = spectral_radius_estimate(&v.scale(3.0), 0.2, 0.3, 15, 9).unwrap();
        assert!((tripled - 3.0 * base).abs() <= 1e-8 * tripled);
    }

    #[test]
    fn spectral_estimate_of_unit_potential_reaches_the_multiplier_maximum() {
        // t = 0, V ≡ 1: S is the inverse multiplier, whose largest value 1
        // sits at frequency zero.
        let v = GridFunction::ones(1, 8).unwrap();
        let estimate = spectral_radius_estimate(&v, 0.0, 0.3, 40, 5).unwrap();
        assert!((estimate - 1.0).abs() <= 1e-6, "estimate {estimate}");
    }

    #[test]
    fn zero_potential_solves_in_one_step_to_the_closed_form() {
        let g = smooth_rhs(8);
        let v = GridFunction::zeros(1, 8).unwrap();
        let report = neumann_solve(&v, &g, 0.2, 0.3, 1e-12, 50).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(report.residual <= 1e-12);
        let closed = bessel_apply(&g, 0.3, true).unwrap();
        assert!(report.solution.sub(&closed).sup_norm() <= 1e-12);
    }

    #[test]
    fn bump_potential_contracts_at_its_spectral_rate() {
        let bump = GridFunction::from_fn(1, 10, |x| {
            0.5 + 0.5 * (2.0 * PI * x[0]).cos()
        })
        .unwrap();
        let base = spectral_radius_estimate(&bump, 0.2, 0.3, 25, 2).unwrap();
        let v = bump.scale(0.3 / base);
        let g = smooth_rhs(10);
        let report = neumann_solve(&v, &g, 0.2, 0.3, 1e-11, 200).unwrap();
        assert!(report.converged);
        assert!(report.residual <= 1e-10);
        for &ratio in &report.contraction_estimates {
            assert!(
                (0.2..=0.4).contains(&ratio),
                "ratio {ratio} outside the expected band"
            );
        }
    }

    #[test]
    fn expanding_potential_is_refused() {
        let v = GridFunction::ones(1, 7).unwrap().scale(2.0);
        let g = smooth_rhs(7);
        match neumann_solve(&v, &g, 0.0, 0.3, 1e-10, 50) {
            Err(Error::NotContractive { estimate }) => {
                assert!(estimate > 1.5, "estimate {estimate}")
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn distinct_starting_iterates_reach_the_same_fixed_point() {
        let v = GridFunction::from_fn(1, 8, |x| 0.2 + 0.1 * (2.0 * PI * x[0]).sin()).unwrap();
        let g = smooth_rhs(8);
        let tol = 1e-11;
        let from_data =
            iterate_from(bessel_apply(&g, 0.2, false).unwrap(), &v, &g, 0.2, 0.3, tol, 200)
                .unwrap();
        let from_zero =
            iterate_from(GridFunction::zeros(1, 8).unwrap(), &v, &g, 0.2, 0.3, tol, 200)
                .unwrap();
        assert!(from_data.converged && from_zero.converged);
        let gap = from_data.solution.sub(&from_zero.solution).l2_norm();
        assert!(gap <= 10.0 * tol, "solutions differ by {gap}");
    }

    #[test]
    fn residual_grows_linearly_in_a_perturbation() {
        let v = GridFunction::from_fn(1, 8, |x| 0.2 + 0.1 * (2.0 * PI * x[0]).cos()).unwrap();
        let g = smooth_rhs(8);
        let report = neumann_solve(&v, &g, 0.2, 0.3, 1e-11, 200).unwrap();
        let noise = random_field(1, 8, 21);
        let at = |eta: f64| {
            residual(&report.solution.add(&noise.scale(eta)), &v, &g, 0.3).unwrap()
        };
        let small = at(1e-6);
        let doubled = at(2e-6);
        assert!((doubled / small - 2.0).abs() <= 0.2, "slope ratio {}", doubled / small);
        assert_eq!(residual(&GridFunction::zeros(1, 8).unwrap(), &v.scale(0.0), &GridFunction::zeros(1, 8).unwrap(), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn rough_potential_from_the_fractal_field_still_converges() {
        // V is a truncated fractal coefficient field synthesized to the
        // grid — spiky, nothing like a bounded smooth multiplier — scaled
        // so the operator estimate sits at 0.5.
        let params = SpaceParams::new(1, 0.0, 0.25, 2.0, 0.5).unwrap();
        let config = fractal::build_sequences(&params, 2, 8, 0.1).unwrap();
        let sparse = fractal::build_f(&config, 1, 10).unwrap();
        let mut field = CoefficientField::empty(1, 10).unwrap();
        for idx in CoefficientField::full_index_set(1, 10) {
            field.set(idx, 0.0).unwrap();
        }
        for (idx, &value) in sparse.iter() {
            field.set(idx.clone(), value).unwrap();
        }
        let rough = inverse_dwt(&field, &WaveletSpec::haar()).unwrap();
        let base = spectral_radius_estimate(&rough, 0.2, 0.3, 25, 3).unwrap();
        let v = rough.scale(0.5 / base);
        let g = smooth_rhs(10);
        let report = neumann_solve(&v, &g, 0.2, 0.3, 1e-9, 300).unwrap();
        assert!(report.converged, "residual {}", report.residual);
        assert!(report.residual <= 1e-8);
        // The per-step ratios oscillate (the conjugated operator is far
        // from normal for a spiky potential); contraction shows up in the
        // two-step products instead.
        let ratios = &report.contraction_estimates;
        assert!(ratios.len() >= 4);
        for pair in ratios.windows(2) {
            let two_step = pair[0] * pair[1];
            assert!(two_step < 0.5, "two-step factor {two_step}");
        }
    }
}
