//! Band-limited orthonormal masks with a smooth polynomial transition.
//!
//! Each pyramid level halves a block of size `2M` into low and high bands of
//! size `M` directly in frequency. The low mask is 1 on `|xi| <= M/3`, falls
//! smoothly to 0 across `M/3 <= |xi| <= 2M/3` through the classical
//! quartic transition, and vanishes beyond; the high mask is its modulated
//! alias-shift. For every paired bin `(b, b+M)` the resulting 2x2 matrix is
//! exactly unitary, so the level map preserves energy and reconstructs
//! perfectly; at block size 2 the masks degenerate to the Haar butterfly.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::Error;

/// Frequency masks for one pyramid level acting on blocks of size
/// `2 * half`.
#[derive(Debug, Clone)]
pub struct LevelMasks {
    /// Output band size `M`; the level consumes blocks of size `2M`.
    pub half: usize,
    /// Low-band mask per input bin (real, even in signed frequency).
    pub lambda: Vec<f64>,
    /// High-band mask per input bin (complex; modulated alias of `lambda`).
    pub mu: Vec<Complex64>,
}

/// The classical quartic transition polynomial: 0 at 0, 1 at 1, with two
/// flat derivatives at both ends.
fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Low-band profile at signed frequency `s` for band size `m`.
fn low_profile(s: f64, m: f64) -> f64 {
    let a = s.abs();
    if 3.0 * a <= m {
        1.0
    } else if 3.0 * a >= 2.0 * m {
        0.0
    } else {
        (0.5 * PI * transition(3.0 * a / m - 1.0)).cos()
    }
}

/// Signed representative of bin `xi` of a size-`2m` spectrum, in `[-m, m)`.
fn signed_bin(xi: usize, m: usize) -> f64 {
    if xi < m {
        xi as f64
    } else {
        xi as f64 - 2.0 * m as f64
    }
}

impl LevelMasks {
    /// Masks for one level with output band size `half`.
    pub fn new(half: usize) -> LevelMasks {
        let m = half;
        let size = 2 * m;
        let mf = m as f64;
        let lambda: Vec<f64> = (0..size).map(|xi| low_profile(signed_bin(xi, m), mf)).collect();
        let mu: Vec<Complex64> = (0..size)
            .map(|xi| {
                let phase = Complex64::from_polar(1.0, -PI * xi as f64 / mf);
                -phase * lambda[(xi + m) % size]
            })
            .collect();
        LevelMasks { half: m, lambda, mu }
    }

    /// Largest deviation of the pointwise energy partition
    /// `|lambda|^2 + |mu|^2 = 1` over all bins.
    pub fn energy_partition_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (l, u) in self.lambda.iter().zip(&self.mu) {
            worst = worst.max((l * l + u.norm_sqr() - 1.0).abs());
        }
        worst
    }

    /// Largest deviation from unitarity of the paired-bin 2x2 matrices
    /// `[[lambda(b), lambda(b+M)], [mu(b), mu(b+M)]]`.
    pub fn unitarity_residual(&self) -> f64 {
        let m = self.half;
        let mut worst = 0.0f64;
        for b in 0..m {
            let l1 = Complex64::new(self.lambda[b], 0.0);
            let l2 = Complex64::new(self.lambda[b + m], 0.0);
            let u1 = self.mu[b];
            let u2 = self.mu[b + m];
            let row1 = (l1.norm_sqr() + l2.norm_sqr() - 1.0).abs();
            let row2 = (u1.norm_sqr() + u2.norm_sqr() - 1.0).abs();
            let cross = (l1 * u1.conj() + l2 * u2.conj()).norm();
            worst = worst.max(row1).max(row2).max(cross);
        }
        worst
    }
}

/// Masks for every level of a full pyramid on a grid of resolution `J`:
/// entry `l` (for `l = 0..J`) handles the split from block size `2^(J-l)`
/// down to `2^(J-l-1)`.
pub fn meyer_filterbank(resolution: u32) -> Result<Vec<LevelMasks>, Error> {
    if resolution < 3 {
        return Err(Error::invalid(format!(
            "resolution {resolution} too small for the transition band (need at least 3)"
        )));
    }
    let mut levels = Vec::with_capacity(resolution as usize);
    for l in 0..resolution {
        let half = 1usize << (resolution - l - 1);
        levels.push(LevelMasks::new(half));
    }
    Ok(levels)
}
