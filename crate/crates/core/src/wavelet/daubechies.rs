//! Compactly supported orthonormal filters computed from their defining
//! equations.
//!
//! The order-`m` low-pass filter has `2m` taps and satisfies three groups of
//! constraints: unit energy, double-shift orthogonality, and `m` vanishing
//! moments of its mirror. A starting guess comes from spectral factorization
//! of the half-band polynomial (root finding by simultaneous iteration), and
//! a Newton solve on the full constraint system then polishes the taps to
//! machine precision, so no transcribed tables are involved.

use std::f64::consts::SQRT_2;

use rustfft::num_complex::Complex64;

use crate::error::Error;

/// An orthonormal analysis pair: low-pass taps and their quadrature mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl FilterPair {
    /// Derives the high-pass as the alternating-sign reversal of the
    /// low-pass, `g[i] = (-1)^i h[L-1-i]`.
    fn from_lowpass(lowpass: Vec<f64>) -> FilterPair {
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - i]
            })
            .collect();
        FilterPair { lowpass, highpass }
    }

    /// Tap count (`2m` for moment order `m`).
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Largest residual of the double-shift orthogonality relations,
    /// `|sum_k h[k] h[k+2l] - delta_l|` over `l = 0, 1, ...`.
    pub fn orthogonality_residual(&self) -> f64 {
        let h = &self.lowpass;
        let mut worst = 0.0f64;
        for l in 0..h.len() / 2 {
            let mut acc = 0.0;
            for k in 0..h.len() - 2 * l {
                acc += h[k] * h[k + 2 * l];
            }
            let target = if l == 0 { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
        worst
    }
}

/// Computes the order-`m` minimal-phase orthonormal filter pair.
///
/// Orders 1 through 10 are supported; order 1 is the exact Haar pair
/// `(1/sqrt2, 1/sqrt2)`.
pub fn daubechies_filter(m: u32) -> Result<FilterPair, Error> {
    if !(1..=10).contains(&m) {
        return Err(Error::invalid(format!("moment order {m} unsupported (1 through 10)")));
    }
    if m == 1 {
        let s = 1.0 / SQRT_2;
        return Ok(FilterPair::from_lowpass(vec![s, s]));
    }
    let m = m as usize;
    let mut taps = spectral_factor_start(m);
    newton_polish(&mut taps, m)?;
    // Canonical orientation: minimal phase concentrates energy at the front.
    if taps[0].abs() < taps[taps.len() - 1].abs() {
        taps.reverse();
    }
    Ok(FilterPair::from_lowpass(taps))
}

/// Starting guess by spectral factorization of the half-band polynomial
/// `P(y) = sum_{k<m} C(m-1+k, k) y^k`: each root `y` of `P` yields a
/// quadratic `z^2 - (2-4y) z + 1` whose root inside the unit circle is kept,
/// and the product of the kept factors times `((1+z)/2)^m` gives the
/// low-pass symbol.
fn spectral_factor_start(m: usize) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..m).map(|k| binomial(m - 1 + k, k)).collect();
    let roots_y = simultaneous_roots(&coeffs);

    let mut quadratic_roots: Vec<Complex64> = Vec::with_capacity(roots_y.len());
    for y in roots_y {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - Complex64::new(4.0, 0.0)).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        quadratic_roots.push(if z1.norm() <= z2.norm() { z1 } else { z2 });
    }

    // Expand prod (X - z_i); conjugate pairs make the result real.
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for z in quadratic_roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += *c;
            next[i] -= *c * z;
        }
        poly = next;
    }
    let mut real_poly: Vec<f64> = poly.iter().map(|c| c.re).collect();

    // Multiply by (1 + X)^m.
    for _ in 0..m {
        let mut next = vec![0.0; real_poly.len() + 1];
        for (i, c) in real_poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c;
        }
        real_poly = next;
    }

    // Normalize the tap sum to sqrt2.
    let total: f64 = real_poly.iter().sum();
    let scale = SQRT_2 / total;
    real_poly.iter().map(|c| c * scale).collect()
}

/// All complex roots of a real polynomial by Durand-Kerner simultaneous
/// iteration. Coefficients are in ascending order.
fn simultaneous_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + Complex64::new(c, 0.0);
        }
        acc
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
}

/// Newton iteration on the square constraint system
/// (energy, double-shift orthogonality, alternating moments).
fn newton_polish(taps: &mut [f64], m: usize) -> Result<(), Error> {
    let len = 2 * m;
    debug_assert_eq!(taps.len(), len);
    // Moment rows are rescaled by (len-1)^alpha to keep the system
    // well-conditioned at higher orders.
    let moment_scale: Vec<f64> = (0..m).map(|a| ((len - 1) as f64).powi(a as i32)).collect();

    for _ in 0..60 {
        let mut residual = vec![0.0; len];
        // Energy.
        residual[0] = taps.iter().map(|h| h * h).sum::<f64>() - 1.0;
        // Double-shift orthogonality, l = 1..m-1.
        for l in 1..m {
            let mut acc = 0.0;
            for k in 0..len - 2 * l {
                acc += taps[k] * taps[k + 2 * l];
            }
            residual[l] = acc;
        }
        // Alternating moments, alpha = 0..m-1.
        for alpha in 0..m {
            let mut acc = 0.0;
            for (i, h) in taps.iter().enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * (i as f64).powi(alpha as i32) * h;
            }
            residual[m + alpha] = acc / moment_scale[alpha];
        }

        let worst = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        if worst < 1e-15 {
            return Ok(());
        }

        let mut jacobian = vec![vec![0.0; len]; len];
        for i in 0..len {
            jacobian[0][i] = 2.0 * taps[i];
        }
        for l in 1..m {
            for i in 0..len {
                let mut d = 0.0;
                if i + 2 * l < len {
                    d += taps[i + 2 * l];
                }
                if i >= 2 * l {
                    d += taps[i - 2 * l];
                }
                jacobian[l][i] = d;
            }
        }
        for alpha in 0..m {
            for i in 0..len {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                jacobian[m + alpha][i] = sign * (i as f64).powi(alpha as i32) / moment_scale[alpha];
            }
        }

        let step = solve_dense(&mut jacobian, &residual)?;
        for (h, s) in taps.iter_mut().zip(&step) {
            *h -= s;
        }
    }
    // Converged iterations return early; landing here means the start was
    // bad enough that Newton stalled.
    Err(Error::invalid(format!("filter computation did not converge at order {m}")))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(a: &mut [Vec<f64>], b: &[f64]) -> Result<Vec<f64>, Error> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::invalid("singular system in filter computation"));
        }
        a.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_exact() {
        let pair = daubechies_filter(1).unwrap();
        let s = 1.0 / SQRT_2;
        assert_eq!(pair.lowpass, vec![s, s]);
        assert_eq!(pair.highpass, vec![s, -s]);
    }

    #[test]
    fn order_two_matches_the_closed_form() {
        // The order-2 taps solve the system in radicals:
        // (1±sqrt3)/(4 sqrt2) outside, (3±sqrt3)/(4 sqrt2) inside.
        let s3 = 3.0f64.sqrt();
        let d = 4.0 * SQRT_2;
        let expected = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        let pair = daubechies_filter(2).unwrap();
        for (tap, want) in pair.lowpass.iter().zip(expected) {
            assert!((tap - want).abs() <= 1e-12, "tap {tap} vs {want}");
        }
    }

    #[test]
    fn tap_sums_are_sqrt_two() {
        for m in 1..=10 {
            let pair = daubechies_filter(m).unwrap();
            assert_eq!(pair.len(), 2 * m as usize);
            let total: f64 = pair.lowpass.iter().sum();
            assert!((total - SQRT_2).abs() <= 1e-12, "order {m}: sum {total}");
            let high: f64 = pair.highpass.iter().sum();
            assert!(high.abs() <= 1e-12, "order {m}: high-pass sum {high}");
        }
    }

    #[test]
    fn double_shift_orthogonality_to_machine_precision() {
        for m in 1..=10 {
            let pair = daubechies_filter(m).unwrap();
            assert!(
                pair.orthogonality_residual() <= 1e-12,
                "order {m}: residual {}",
                pair.orthogonality_residual()
            );
            // Cross-orthogonality with the mirror at every even shift.
            for l in 0..pair.len() / 2 {
                let mut acc = 0.0;
                for k in 0..pair.len() - 2 * l {
                    acc += pair.lowpass[k] * pair.highpass[k + 2 * l];
                }
                assert!(acc.abs() <= 1e-12, "order {m}, shift {l}: cross {acc}");
            }
        }
    }

    #[test]
    fn highpass_moments_vanish_below_the_order() {
        for m in 1..=10u32 {
            let pair = daubechies_filter(m).unwrap();
            for alpha in 0..m {
                let mut acc = 0.0;
                let mut scale = 0.0;
                for (i, g) in pair.highpass.iter().enumerate() {
                    let w = (i as f64).powi(alpha as i32);
                    acc += w * g;
                    scale += w.abs() * g.abs();
                }
                let rel = acc.abs() / scale.max(1.0);
                assert!(rel <= 1e-10, "order {m}, moment {alpha}: relative {rel}");
            }
        }
    }

    #[test]
    fn unsupported_orders_are_rejected() {
        assert!(daubechies_filter(0).is_err());
        assert!(daubechies_filter(11).is_err());
    }

    #[test]
    fn recomputation_is_bit_identical() {
        for m in [2, 5, 10] {
            let a = daubechies_filter(m).unwrap();
            let b = daubechies_filter(m).unwrap();
            assert_eq!(a.lowpass, b.lowpass);
        }
    }
}
