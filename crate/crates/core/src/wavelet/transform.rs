//! Pyramid analysis/synthesis and basis-function synthesis.
//!
//! The forward transform runs a decimated pyramid from the grid resolution
//! down to a single scaling entry; in dimension 2 each level is one 1-D pass
//! along every row followed by one along every column, so the basis is the
//! level-wise tensor product of the 1-D bases. The pyramid itself is unitary
//! in the plain Euclidean sense; a final `2^(-Jn/2)` rescale converts to the
//! volume-weighted convention in which every synthesized basis function has
//! unit discrete L² norm and the coefficient sum of squares equals the
//! mean-square grid norm.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::daubechies::{daubechies_filter, FilterPair};
use super::meyer::LevelMasks;
use super::{WaveletFamily, WaveletSpec};
use crate::dyadic::WaveletIndex;
use crate::error::Error;
use crate::field::{expected_complete_len, CoefficientField};
use crate::grid::GridFunction;

/// One-family split/merge engine for a transform run.
struct Pipeline {
    kind: Kind,
}

enum Kind {
    Filter(FilterPair),
    Banded {
        planner: FftPlanner<f64>,
        masks: BTreeMap<usize, LevelMasks>,
    },
}

impl Pipeline {
    fn new(spec: &WaveletSpec) -> Result<Pipeline, Error> {
        spec.validate()?;
        let kind = match spec.family {
            WaveletFamily::Daubechies => {
                Kind::Filter(daubechies_filter(spec.m.expect("validated"))?)
            }
            WaveletFamily::DiscreteMeyer => Kind::Banded {
                planner: FftPlanner::new(),
                masks: BTreeMap::new(),
            },
        };
        Ok(Pipeline { kind })
    }

    /// One decimation step: a block of even size to (low, high) halves.
    fn split(&mut self, data: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &mut self.kind {
            Kind::Filter(pair) => split_filter(data, pair),
            Kind::Banded { planner, masks } => {
                let half = data.len() / 2;
                let masks = masks.entry(half).or_insert_with(|| LevelMasks::new(half));
                split_banded(data, masks, planner)
            }
        }
    }

    /// Exact inverse of [`split`](Self::split).
    fn merge(&mut self, low: &[f64], high: &[f64]) -> Vec<f64> {
        match &mut self.kind {
            Kind::Filter(pair) => merge_filter(low, high, pair),
            Kind::Banded { planner, masks } => {
                let half = low.len();
                let masks = masks.entry(half).or_insert_with(|| LevelMasks::new(half));
                merge_banded(low, high, masks, planner)
            }
        }
    }
}

/// Periodized decimated convolution. For blocks shorter than the filter the
/// wrap-around sums fold the taps, which preserves exact orthogonality.
fn split_filter(data: &[f64], pair: &FilterPair) -> (Vec<f64>, Vec<f64>) {
    let size = data.len();
    debug_assert!(size % 2 == 0);
    let half = size / 2;
    let mut low = vec![0.0; half];
    let mut high = vec![0.0; half];
    for k in 0..half {
        let mut s = 0.0;
        let mut d = 0.0;
        for (i, (&h, &g)) in pair.lowpass.iter().zip(&pair.highpass).enumerate() {
            let v = data[(2 * k + i) % size];
            s += h * v;
            d += g * v;
        }
        low[k] = s;
        high[k] = d;
    }
    (low, high)
}

/// Adjoint of [`split_filter`]; orthogonality makes the adjoint the inverse.
fn merge_filter(low: &[f64], high: &[f64], pair: &FilterPair) -> Vec<f64> {
    let half = low.len();
    let size = 2 * half;
    let mut out = vec![0.0; size];
    for k in 0..half {
        for (i, (&h, &g)) in pair.lowpass.iter().zip(&pair.highpass).enumerate() {
            out[(2 * k + i) % size] += h * low[k] + g * high[k];
        }
    }
    out
}

/// Frequency-domain decimation: paired spectrum bins `(b, b+M)` pass through
/// the unitary 2x2 mask matrix, then each band returns to sample space.
fn split_banded(
    data: &[f64],
    masks: &LevelMasks,
    planner: &mut FftPlanner<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let size = data.len();
    let half = masks.half;
    debug_assert_eq!(size, 2 * half);
    let mut spectrum: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(size).process(&mut spectrum);

    let mut low_spec = vec![Complex64::default(); half];
    let mut high_spec = vec![Complex64::default(); half];
    for b in 0..half {
        let x1 = spectrum[b];
        let x2 = spectrum[b + half];
        low_spec[b] = (masks.lambda[b] * x1 + masks.lambda[b + half] * x2) * FRAC_1_SQRT_2;
        high_spec[b] = (masks.mu[b] * x1 + masks.mu[b + half] * x2) * FRAC_1_SQRT_2;
    }
    planner.plan_fft_inverse(half).process(&mut low_spec);
    planner.plan_fft_inverse(half).process(&mut high_spec);
    // Conjugate symmetry of the masks keeps the outputs real.
    let scale = 1.0 / half as f64;
    let low = low_spec.iter().map(|c| c.re * scale).collect();
    let high = high_spec.iter().map(|c| c.re * scale).collect();
    (low, high)
}

/// Inverse of [`split_banded`]: the conjugate-transpose mask matrices.
fn merge_banded(
    low: &[f64],
    high: &[f64],
    masks: &LevelMasks,
    planner: &mut FftPlanner<f64>,
) -> Vec<f64> {
    let half = masks.half;
    let size = 2 * half;
    debug_assert_eq!(low.len(), half);
    let mut low_spec: Vec<Complex64> = low.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut high_spec: Vec<Complex64> = high.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(half).process(&mut low_spec);
    planner.plan_fft_forward(half).process(&mut high_spec);

    let sqrt2 = std::f64::consts::SQRT_2;
    let mut spectrum = vec![Complex64::default(); size];
    for b in 0..half {
        let s = low_spec[b];
        let d = high_spec[b];
        spectrum[b] = (masks.lambda[b] * s + masks.mu[b].conj() * d) * sqrt2;
        spectrum[b + half] = (masks.lambda[b + half] * s + masks.mu[b + half].conj() * d) * sqrt2;
    }
    planner.plan_fft_inverse(size).process(&mut spectrum);
    let scale = 1.0 / size as f64;
    spectrum.iter().map(|c| c.re * scale).collect()
}

/// One 2-D pyramid level: splits a row-major `size x size` block into four
/// quadrants indexed by type bits (bit 0 = detail along axis 0, bit 1 =
/// detail along axis 1).
fn split2d(pipe: &mut Pipeline, data: &[f64], size: usize) -> [Vec<f64>; 4] {
    let half = size / 2;
    // Axis-1 pass: each row.
    let mut low1 = vec![0.0; size * half];
    let mut high1 = vec![0.0; size * half];
    for r in 0..size {
        let (s, d) = pipe.split(&data[r * size..(r + 1) * size]);
        low1[r * half..(r + 1) * half].copy_from_slice(&s);
        high1[r * half..(r + 1) * half].copy_from_slice(&d);
    }
    // Axis-0 pass: each column of both halves.
    let mut out = [
        vec![0.0; half * half],
        vec![0.0; half * half],
        vec![0.0; half * half],
        vec![0.0; half * half],
    ];
    let mut col = vec![0.0; size];
    for (bit1, src) in [(0usize, &low1), (0b10, &high1)] {
        for c in 0..half {
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = src[r * half + c];
            }
            let (s, d) = pipe.split(&col);
            for u in 0..half {
                out[bit1][u * half + c] = s[u];
                out[bit1 | 1][u * half + c] = d[u];
            }
        }
    }
    out
}

/// Inverse of [`split2d`] (quadrants in type-bit order).
fn merge2d(pipe: &mut Pipeline, quads: [&[f64]; 4], half: usize) -> Vec<f64> {
    let size = 2 * half;
    let mut low1 = vec![0.0; size * half];
    let mut high1 = vec![0.0; size * half];
    let mut s_col = vec![0.0; half];
    let mut d_col = vec![0.0; half];
    for (bit1, dst) in [(0usize, &mut low1), (0b10, &mut high1)] {
        for c in 0..half {
            for u in 0..half {
                s_col[u] = quads[bit1][u * half + c];
                d_col[u] = quads[bit1 | 1][u * half + c];
            }
            let merged = pipe.merge(&s_col, &d_col);
            for (r, v) in merged.iter().enumerate() {
                dst[r * half + c] = *v;
            }
        }
    }
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        let merged = pipe.merge(&low1[r * half..(r + 1) * half], &high1[r * half..(r + 1) * half]);
        out[r * size..(r + 1) * size].copy_from_slice(&merged);
    }
    out
}

fn volume_scale(n: usize, resolution: u32) -> f64 {
    ((1u64 << (resolution as usize * n)) as f64).sqrt()
}

fn check_resolution(spec: &WaveletSpec, resolution: u32) -> Result<(), Error> {
    if resolution < spec.min_resolution() {
        return Err(Error::invalid(format!(
            "resolution {resolution} too small for this basis (need at least {})",
            spec.min_resolution()
        )));
    }
    Ok(())
}

/// Full decimated transform of a grid function down to level 0. The output
/// holds exactly `2^(Jn)` entries: one scaling coefficient and all detail
/// blocks, each the discrete L² inner product with the corresponding basis
/// function.
pub fn forward_dwt(f: &GridFunction, spec: &WaveletSpec) -> Result<CoefficientField, Error> {
    spec.validate()?;
    check_resolution(spec, f.resolution())?;
    let n = f.n();
    let resolution = f.resolution();
    let mut pipe = Pipeline::new(spec)?;
    let mut field = CoefficientField::empty(n, resolution)?;
    let scale = 1.0 / volume_scale(n, resolution);

    if n == 1 {
        let mut approx = f.values().to_vec();
        let mut level = resolution;
        while level > 0 {
            let (s, d) = pipe.split(&approx);
            level -= 1;
            for (k, &v) in d.iter().enumerate() {
                field.set(WaveletIndex::new(1, level, [k as u64, 0]), v * scale)?;
            }
            approx = s;
        }
        field.set(WaveletIndex::new(0, 0, [0, 0]), approx[0] * scale)?;
    } else {
        let mut approx = f.values().to_vec();
        let mut level = resolution;
        while level > 0 {
            let size = 1usize << level;
            let mut quads = split2d(&mut pipe, &approx, size);
            level -= 1;
            let half = 1usize << level;
            for eps in 1..4usize {
                for u in 0..half {
                    for v in 0..half {
                        field.set(
                            WaveletIndex::new(eps as u8, level, [u as u64, v as u64]),
                            quads[eps][u * half + v] * scale,
                        )?;
                    }
                }
            }
            approx = std::mem::take(&mut quads[0]);
        }
        field.set(WaveletIndex::new(0, 0, [0, 0]), approx[0] * scale)?;
    }
    Ok(field)
}

/// Synthesis accepting sparse fields: absent entries read as zero.
pub(crate) fn synthesize(c: &CoefficientField, spec: &WaveletSpec) -> Result<GridFunction, Error> {
    spec.validate()?;
    check_resolution(spec, c.levels())?;
    let n = c.n();
    let resolution = c.levels();
    let mut pipe = Pipeline::new(spec)?;
    let scale = volume_scale(n, resolution);

    if n == 1 {
        let mut approx = vec![c.get(&WaveletIndex::new(0, 0, [0, 0])) * scale];
        for level in 0..resolution {
            let half = 1usize << level;
            let mut detail = vec![0.0; half];
            for (k, slot) in detail.iter_mut().enumerate() {
                *slot = c.get(&WaveletIndex::new(1, level, [k as u64, 0])) * scale;
            }
            approx = pipe.merge(&approx, &detail);
        }
        GridFunction::from_values(1, resolution, approx)
    } else {
        let mut approx = vec![c.get(&WaveletIndex::new(0, 0, [0, 0])) * scale];
        for level in 0..resolution {
            let half = 1usize << level;
            let mut quads = [
                std::mem::take(&mut approx),
                vec![0.0; half * half],
                vec![0.0; half * half],
                vec![0.0; half * half],
            ];
            for eps in 1..4usize {
                for u in 0..half {
                    for v in 0..half {
                        quads[eps][u * half + v] =
                            c.get(&WaveletIndex::new(eps as u8, level, [u as u64, v as u64]))
                                * scale;
                    }
                }
            }
            approx = merge2d(
                &mut pipe,
                [&quads[0], &quads[1], &quads[2], &quads[3]],
                half,
            );
        }
        GridFunction::from_values(2, resolution, approx)
    }
}

/// Exact inverse of [`forward_dwt`]. The field must be complete.
pub fn inverse_dwt(c: &CoefficientField, spec: &WaveletSpec) -> Result<GridFunction, Error> {
    if !c.is_complete() {
        return Err(Error::invalid(format!(
            "incomplete field: {} of {} entries",
            c.len(),
            expected_complete_len(c.n(), c.levels())
        )));
    }
    synthesize(c, spec)
}

/// Synthesizes the single basis function at `idx` on a resolution-`J` grid:
/// the inverse transform of the delta field. Unit discrete L² norm.
pub fn synthesize_basis_function(
    n: usize,
    resolution: u32,
    idx: WaveletIndex,
    spec: &WaveletSpec,
) -> Result<GridFunction, Error> {
    let mut field = CoefficientField::empty(n, resolution)?;
    field.set(idx, 1.0)?;
    synthesize(&field, spec)
}

/// Synthesizes the level-`level` scaling function at translation `k` on a
/// resolution-`J` grid (partial inverse pyramid with all details zero). Unit
/// discrete L² norm.
pub fn synthesize_scaling_function(
    n: usize,
    resolution: u32,
    level: u32,
    k: [u64; 2],
    spec: &WaveletSpec,
) -> Result<GridFunction, Error> {
    spec.validate()?;
    check_resolution(spec, resolution)?;
    if level > resolution {
        return Err(Error::invalid(format!(
            "scaling level {level} exceeds resolution {resolution}"
        )));
    }
    let side = 1u64 << level;
    for axis in 0..n {
        if k[axis] >= side {
            return Err(Error::invalid(format!(
                "translation {} out of range at level {level}",
                k[axis]
            )));
        }
    }
    let mut pipe = Pipeline::new(spec)?;
    let count = 1usize << (level as usize * n);
    let mut approx = vec![0.0; count];
    let pos = if n == 1 {
        k[0] as usize
    } else {
        (k[0] as usize) * side as usize + k[1] as usize
    };
    approx[pos] = volume_scale(n, resolution);

    if n == 1 {
        for l in level..resolution {
            let zeros = vec![0.0; 1usize << l];
            approx = pipe.merge(&approx, &zeros);
        }
        GridFunction::from_values(1, resolution, approx)
    } else {
        for l in level..resolution {
            let half = 1usize << l;
            let zeros = vec![0.0; half * half];
            approx = merge2d(&mut pipe, [&approx, &zeros, &zeros, &zeros], half);
        }
        GridFunction::from_values(2, resolution, approx)
    }
}

/// Inner products of `f` with every level-`level` scaling function, row-major
/// over the translation index (a partial forward pyramid).
pub fn scaling_coefficients(
    f: &GridFunction,
    spec: &WaveletSpec,
    level: u32,
) -> Result<Vec<f64>, Error> {
    spec.validate()?;
    check_resolution(spec, f.resolution())?;
    let resolution = f.resolution();
    if level > resolution {
        return Err(Error::invalid(format!(
            "scaling level {level} exceeds resolution {resolution}"
        )));
    }
    let n = f.n();
    let mut pipe = Pipeline::new(spec)?;
    let scale = 1.0 / volume_scale(n, resolution);
    let mut approx = f.values().to_vec();
    if n == 1 {
        for _ in level..resolution {
            let (s, _) = pipe.split(&approx);
            approx = s;
        }
    } else {
        let mut l = resolution;
        while l > level {
            let size = 1usize << l;
            let mut quads = split2d(&mut pipe, &approx, size);
            approx = std::mem::take(&mut quads[0]);
            l -= 1;
        }
    }
    Ok(approx.iter().map(|v| v * scale).collect())
}

fn signed_offset(cell: u64, base: u64, side: u64) -> i64 {
    let d = (cell + side - base) % side;
    if d >= side / 2 {
        d as i64 - side as i64
    } else {
        d as i64
    }
}

/// Discrete quadrature of `x^alpha` against each wavelet type, maximized
/// over types: `max_{eps != 0} |2^(-Jn) sum_x x^alpha Phi^eps(x)|`.
///
/// The basis function is taken at the coarsest level where it occupies at
/// most half the torus, and the position variable is measured from the peak
/// of `|Phi|` with wrap-around (so the polynomial weight is unambiguous).
/// For the compactly supported family with `alpha` componentwise below the
/// moment order the value is zero up to rounding; for other inputs the value
/// is still returned but nothing is claimed about its size.
pub fn vanishing_moment_residual(
    spec: &WaveletSpec,
    n: usize,
    resolution: u32,
    alpha: [u32; 2],
) -> Result<f64, Error> {
    spec.validate()?;
    if n != 1 && n != 2 {
        return Err(Error::invalid(format!("dimension must be 1 or 2, got {n}")));
    }
    check_resolution(spec, resolution)?;
    let anchor = spec.anchor_level();
    if resolution <= anchor {
        return Err(Error::invalid(format!(
            "resolution {resolution} too small to anchor the moment quadrature (need more than {anchor})"
        )));
    }
    let side = 1u64 << resolution;
    let h = 1.0 / side as f64;
    let mut worst = 0.0f64;
    for eps in 1..(1u8 << n) {
        let atom = synthesize_basis_function(n, resolution, WaveletIndex::new(eps, anchor, [0, 0]), spec)?;
        let values = atom.values();
        let mut base_idx = 0usize;
        let mut best = -1.0f64;
        for (i, v) in values.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                base_idx = i;
            }
        }
        let base = atom.cell_of_index(base_idx);
        let mut acc = 0.0;
        for (i, v) in values.iter().enumerate() {
            let cell = atom.cell_of_index(i);
            let mut w = 1.0;
            for axis in 0..n {
                let rel = signed_offset(cell[axis], base[axis], side) as f64 * h;
                w *= rel.powi(alpha[axis] as i32);
            }
            acc += w * v;
        }
        worst = worst.max((acc / values.len() as f64).abs());
    }
    Ok(worst)
}
