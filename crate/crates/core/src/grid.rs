//! Sampled functions on the dyadic grid of the unit torus.
//!
//! A `GridFunction` holds one `f64` per cell of the uniform grid with `2^j`
//! cells per axis, in row-major order (`idx = m0 * 2^j + m1` in dimension 2).
//! Inner products and norms are Riemann sums — each sample carries the cell
//! volume `2^-jn` — so they approximate the integrals on the torus and agree
//! exactly with them for functions that are constant on grid cells.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A real-valued function sampled on the dyadic grid at resolution `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    n: usize,
    j: u32,
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function from row-major samples; the length must be
    /// `2^(j*n)`.
    pub fn from_values(n: usize, j: u32, values: Vec<f64>) -> Result<Self, Error> {
        if n != 1 && n != 2 {
            return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {n}")));
        }
        if j > 30 {
            return Err(Error::invalid(format!("grid resolution {j} out of range")));
        }
        let expected = 1usize << (j as usize * n);
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} samples for dimension {n} at resolution {j}, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {pos}")));
        }
        Ok(GridFunction { n, j, values })
    }

    /// The zero function.
    pub fn zeros(n: usize, j: u32) -> Result<Self, Error> {
        Self::from_values(n, j, vec![0.0; checked_len(n, j)?])
    }

    /// The constant-one function.
    pub fn ones(n: usize, j: u32) -> Result<Self, Error> {
        Self::from_values(n, j, vec![1.0; checked_len(n, j)?])
    }

    /// Samples `f` at the grid points `m * 2^-j` (the cells' lower corners).
    pub fn from_fn(n: usize, j: u32, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Self, Error> {
        let len = checked_len(n, j)?;
        let side = 1usize << j;
        let h = 1.0 / side as f64;
        let mut values = Vec::with_capacity(len);
        if n == 1 {
            for m in 0..side {
                values.push(f([m as f64 * h, 0.0]));
            }
        } else {
            for m0 in 0..side {
                let x0 = m0 as f64 * h;
                for m1 in 0..side {
                    values.push(f([x0, m1 as f64 * h]));
                }
            }
        }
        GridFunction::from_values(n, j, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    /// Cells per axis, `2^j`.
    pub fn side(&self) -> usize {
        1 << self.j
    }

    /// Total sample count `2^(jn)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cell volume `2^-jn`.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Row-major index of the cell `m`.
    pub fn cell_index(&self, m: [u64; 2]) -> usize {
        if self.n == 1 {
            m[0] as usize
        } else {
            (m[0] as usize) * self.side() + m[1] as usize
        }
    }

    /// Inverse of [`cell_index`](Self::cell_index).
    pub fn cell_of_index(&self, idx: usize) -> [u64; 2] {
        if self.n == 1 {
            [idx as u64, 0]
        } else {
            let side = self.side();
            [(idx / side) as u64, (idx % side) as u64]
        }
    }

    pub fn value_at(&self, m: [u64; 2]) -> f64 {
        self.values[self.cell_index(m)]
    }

    /// Riemann inner product `2^-jn * sum f g`, approximating the integral
    /// over the torus.
    pub fn l2_inner(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.j, other.j, "resolution mismatch");
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a * b;
        }
        acc * self.cell_volume()
    }

    /// Riemann `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    /// Riemann `L^p` norm, `(2^-jn * sum |f|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for v in &self.values {
            acc += v.abs().powf(p);
        }
        (acc * self.cell_volume()).powf(1.0 / p)
    }

    /// Supremum of `|f|` over the grid.
    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for v in &self.values {
            best = best.max(v.abs());
        }
        best
    }

    /// Mean value (integral over the torus).
    pub fn mean(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.values {
            acc += v;
        }
        acc * self.cell_volume()
    }

    /// Pointwise product.
    pub fn pointwise_mul(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.j, other.j, "resolution mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        GridFunction { n: self.n, j: self.j, values }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.j, other.j, "resolution mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        GridFunction { n: self.n, j: self.j, values }
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.n, other.n, "dimension mismatch");
        assert_eq!(self.j, other.j, "resolution mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        GridFunction { n: self.n, j: self.j, values }
    }

    /// Scalar multiple.
    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            n: self.n,
            j: self.j,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

fn checked_len(n: usize, j: u32) -> Result<usize, Error> {
    if n != 1 && n != 2 {
        return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {n}")));
    }
    if j > 30 {
        return Err(Error::invalid(format!("grid resolution {j} out of range")));
    }
    Ok(1usize << (j as usize * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_checks() {
        assert!(GridFunction::from_values(1, 3, vec![0.0; 8]).is_ok());
        assert!(GridFunction::from_values(1, 3, vec![0.0; 9]).is_err());
        assert!(GridFunction::from_values(2, 3, vec![0.0; 64]).is_ok());
        assert!(GridFunction::from_values(2, 3, vec![0.0; 8]).is_err());
        assert!(GridFunction::from_values(3, 3, vec![0.0; 8]).is_err());
        assert!(GridFunction::from_values(1, 1, vec![0.0, f64::NAN]).is_err());
        assert!(GridFunction::from_values(1, 1, vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn constant_one_has_unit_norm_and_mean() {
        for n in [1, 2] {
            let f = GridFunction::ones(n, 4).unwrap();
            assert_eq!(f.l2_norm(), 1.0);
            assert_eq!(f.mean(), 1.0);
            assert_eq!(f.lp_norm(3.0), 1.0);
        }
    }

    #[test]
    fn row_major_indexing_round_trips() {
        let f = GridFunction::zeros(2, 3).unwrap();
        for idx in 0..f.len() {
            assert_eq!(f.cell_index(f.cell_of_index(idx)), idx);
        }
        assert_eq!(f.cell_index([2, 5]), 2 * 8 + 5);
    }

    #[test]
    fn riemann_inner_product_matches_hand_sum() {
        let f = GridFunction::from_values(1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = GridFunction::from_values(1, 2, vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        // (4 + 6 + 6 + 4) / 4 = 5
        assert_eq!(f.l2_inner(&g), 5.0);
        assert_eq!(f.mean(), 2.5);
        assert_eq!(f.sup_norm(), 4.0);
    }

    #[test]
    fn sampling_uses_lower_corner_grid_points() {
        let f = GridFunction::from_fn(1, 2, |x| x[0]).unwrap();
        assert_eq!(f.values(), &[0.0, 0.25, 0.5, 0.75]);
        let g = GridFunction::from_fn(2, 1, |x| 10.0 * x[0] + x[1]).unwrap();
        // Row-major: (0,0), (0,0.5), (0.5,0), (0.5,0.5).
        assert_eq!(g.values(), &[0.0, 0.5, 5.0, 5.5]);
    }

    #[test]
    fn arithmetic_is_pointwise() {
        let f = GridFunction::from_values(1, 1, vec![1.0, -2.0]).unwrap();
        let g = GridFunction::from_values(1, 1, vec![3.0, 5.0]).unwrap();
        assert_eq!(f.add(&g).values(), &[4.0, 3.0]);
        assert_eq!(f.sub(&g).values(), &[-2.0, -7.0]);
        assert_eq!(f.pointwise_mul(&g).values(), &[3.0, -10.0]);
        assert_eq!(f.scale(-1.5).values(), &[-1.5, 3.0]);
    }
}
