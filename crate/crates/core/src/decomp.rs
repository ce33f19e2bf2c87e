//! Multiscale projections and the exact splitting of pointwise products.
//!
//! The smooth projection `P_j` keeps the scaling block and every detail
//! level below `j`; the band `Q_j = P_{j+1} - P_j` keeps level `j` alone.
//! On a grid of resolution `J` the projections saturate (`P_J f = f`), so
//! the telescoping identity
//!
//! ```text
//! f g = P_N f P_N g
//!     + sum_{j=N}^{J-1} ( Q_j f Q_j g + P_j f Q_j g + Q_j f P_j g )
//! ```
//!
//! is a finite, exact rearrangement of the product — no tails are dropped,
//! and [`product_decompose`] reconstructs `f g` to rounding error. The
//! rough-times-smooth term can be unrolled once more into near-diagonal
//! bands plus a shifted remainder; on a finite grid that unrolling leaves a
//! boundary term at the coarse end, which [`HighLowRefinement`] carries
//! explicitly so its parts still sum exactly.
//!
//! [`interaction_coefficient`] measures how two synthesized basis functions
//! overlap on the grid, and [`apply_almost_diagonal`] pushes a sparse matrix
//! of such couplings through a coefficient field.

use std::collections::BTreeMap;

use crate::dyadic::WaveletIndex;
use crate::error::Error;
use crate::field::CoefficientField;
use crate::grid::GridFunction;
use crate::wavelet::{forward_dwt, synthesize, synthesize_basis_function, WaveletSpec};

/// Which half of the resolution-of-identity a projection keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    /// `P_j`: the scaling block plus all detail levels strictly below `j`.
    Smooth,
    /// `Q_j`: the detail level `j` alone (`P_{j+1} - P_j`).
    Detail,
}

/// Synthesizes the smooth projection `P_level` or the band `Q_level` of a
/// coefficient field.
///
/// `level` may run up to the transform depth `J`: `P_J` reproduces the full
/// synthesis, and `Q_J` is the zero function because the field has no detail
/// beyond its depth.
pub fn project(
    c: &CoefficientField,
    level: u32,
    kind: ProjectionKind,
    spec: &WaveletSpec,
) -> Result<GridFunction, Error> {
    if level > c.levels() {
        return Err(Error::invalid(format!(
            "projection level {level} exceeds the transform depth {}",
            c.levels()
        )));
    }
    let kept = match kind {
        ProjectionKind::Smooth => c.filter(|idx, _| idx.eps == 0 || idx.j < level),
        ProjectionKind::Detail => c.filter(|idx, _| idx.eps != 0 && idx.j == level),
    };
    synthesize(&kept, spec)
}

/// The rough-times-smooth term unrolled into near-diagonal bands.
///
/// Writing `N` for the shift, the infinite-scale identity
/// `sum_j Q_j f P_j g = sum_j sum_{t=1}^{N} Q_{j+t} f Q_j g + sum_j Q_{j+N} f P_j g`
/// acquires one extra term on a finite grid: the levels `N <= j < 2N` of the
/// left side never appear on the right because their partners would need
/// detail below the base. That remainder collapses to
/// `(P_{min(2N, J)} f - P_N f) P_N g` and is kept here as `boundary`, so
/// `near_diagonal + shifted_low + boundary` equals the rough-times-smooth
/// term to rounding error.
#[derive(Debug, Clone)]
pub struct HighLowRefinement {
    /// `sum_{j} sum_{t=1}^{N} Q_{j+t} f Q_j g` — detail of `f` at most `N`
    /// levels finer than detail of `g`.
    pub near_diagonal: GridFunction,
    /// `sum_{j} Q_{j+N} f P_j g` — the remaining genuinely unbalanced part.
    pub shifted_low: GridFunction,
    /// `(P_{min(2N, J)} f - P_N f) P_N g` — the coarse-end closure of the
    /// unrolling on a finite grid.
    pub boundary: GridFunction,
}

impl HighLowRefinement {
    /// Sum of the three parts; equals [`ProductTerms::high_low`] to rounding
    /// error.
    pub fn total(&self) -> GridFunction {
        self.near_diagonal.add(&self.shifted_low).add(&self.boundary)
    }
}

/// The four-way splitting of a pointwise product `f g`.
///
/// `base + diagonal + low_high + high_low` reconstructs the grid product
/// exactly up to rounding (the module invariant checks `1e-10`).
#[derive(Debug, Clone)]
pub struct ProductTerms {
    /// `sum_j Q_j f Q_j g` — both factors rough at the same level.
    pub diagonal: GridFunction,
    /// `sum_j P_j f Q_j g` — smooth `f` against rough `g`.
    pub low_high: GridFunction,
    /// `sum_j Q_j f P_j g` — rough `f` against smooth `g`.
    pub high_low: GridFunction,
    /// `P_N f P_N g` — both factors at the base resolution.
    pub base: GridFunction,
    /// The base level `N`; all sums run over `N <= j < J`.
    pub shift: u32,
    /// The near-diagonal unrolling of `high_low`.
    pub refinement: HighLowRefinement,
}

impl ProductTerms {
    /// Sum of the four terms; equals the pointwise product to rounding
    /// error.
    pub fn total(&self) -> GridFunction {
        self.diagonal.add(&self.low_high).add(&self.high_low).add(&self.base)
    }
}

/// Splits the pointwise product of two grid functions across scales.
///
/// Both factors must live on the same grid, and the base level must satisfy
/// `1 <= shift <= J - 1` so that at least one detail level participates.
pub fn product_decompose(
    f: &GridFunction,
    g: &GridFunction,
    shift: u32,
    spec: &WaveletSpec,
) -> Result<ProductTerms, Error> {
    if f.n() != g.n() || f.resolution() != g.resolution() {
        return Err(Error::invalid(format!(
            "product factors must share one grid, got {}d at {} levels vs {}d at {} levels",
            f.n(),
            f.resolution(),
            g.n(),
            g.resolution()
        )));
    }
    let levels = f.resolution();
    if shift == 0 || shift >= levels {
        return Err(Error::invalid(format!(
            "base level must lie in 1..{levels}, got {shift}"
        )));
    }
    let n = f.n();
    let cf = forward_dwt(f, spec)?;
    let cg = forward_dwt(g, spec)?;

    // Bands Q_j for shift <= j < J and smooth parts P_j for shift <= j <= J,
    // the latter built incrementally from P_{j+1} = P_j + Q_j.
    let bands = |c: &CoefficientField| -> Result<Vec<GridFunction>, Error> {
        (shift..levels).map(|j| project(c, j, ProjectionKind::Detail, spec)).collect()
    };
    let smooths = |c: &CoefficientField, q: &[GridFunction]| -> Result<Vec<GridFunction>, Error> {
        let mut p = vec![project(c, shift, ProjectionKind::Smooth, spec)?];
        for band in q {
            p.push(p.last().unwrap().add(band));
        }
        Ok(p)
    };
    let qf = bands(&cf)?;
    let qg = bands(&cg)?;
    let pf = smooths(&cf, &qf)?;
    let pg = smooths(&cg, &qg)?;

    let count = (levels - shift) as usize;
    let mut diagonal = GridFunction::zeros(n, levels)?;
    let mut low_high = GridFunction::zeros(n, levels)?;
    let mut high_low = GridFunction::zeros(n, levels)?;
    for i in 0..count {
        diagonal = diagonal.add(&qf[i].pointwise_mul(&qg[i]));
        low_high = low_high.add(&pf[i].pointwise_mul(&qg[i]));
        high_low = high_low.add(&qf[i].pointwise_mul(&pg[i]));
    }
    let base = pf[0].pointwise_mul(&pg[0]);

    let mut near_diagonal = GridFunction::zeros(n, levels)?;
    let mut shifted_low = GridFunction::zeros(n, levels)?;
    for i in 0..count {
        for t in 1..=shift as usize {
            if i + t >= count {
                break;
            }
            near_diagonal = near_diagonal.add(&qf[i + t].pointwise_mul(&qg[i]));
        }
        if i + (shift as usize) < count {
            shifted_low = shifted_low.add(&qf[i + shift as usize].pointwise_mul(&pg[i]));
        }
    }
    let top = (2 * shift).min(levels);
    let boundary = pf[(top - shift) as usize].sub(&pf[0]).pointwise_mul(&pg[0]);

    Ok(ProductTerms {
        diagonal,
        low_high,
        high_low,
        base,
        shift,
        refinement: HighLowRefinement { near_diagonal, shifted_low, boundary },
    })
}

/// Grid inner product of two synthesized basis functions.
///
/// For a single orthonormal family this reproduces the Kronecker delta to
/// rounding error; callers probing products or cross-family couplings build
/// the functions themselves and take [`GridFunction::l2_inner`] directly.
pub fn interaction_coefficient(
    n: usize,
    resolution: u32,
    idx1: WaveletIndex,
    idx2: WaveletIndex,
    spec: &WaveletSpec,
) -> Result<f64, Error> {
    idx1.validate(n, resolution)?;
    idx2.validate(n, resolution)?;
    let a = synthesize_basis_function(n, resolution, idx1, spec)?;
    let b = synthesize_basis_function(n, resolution, idx2, spec)?;
    Ok(a.l2_inner(&b))
}

/// Applies a sparse coupling matrix to a coefficient field:
/// `out[row] = sum_col entries[(row, col)] * c[col]`.
///
/// Keys must be valid indices for the field's dimension and depth; terms
/// whose product vanishes leave no entry behind, so the output stays as
/// sparse as the data allows.
pub fn apply_almost_diagonal(
    entries: &BTreeMap<(WaveletIndex, WaveletIndex), f64>,
    c: &CoefficientField,
) -> Result<CoefficientField, Error> {
    let mut out = CoefficientField::empty(c.n(), c.levels())?;
    for (&(row, col), &a) in entries {
        row.validate(c.n(), c.levels())?;
        col.validate(c.n(), c.levels())?;
        let term = a * c.get(&col);
        if term == 0.0 {
            continue;
        }
        let sum = out.get(&row) + term;
        out.set(row, sum)?;
    }
    Ok(out)
}
