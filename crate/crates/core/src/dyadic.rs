//! Dyadic cubes and basis indices on the unit torus.
//!
//! All geometry here is exact integer arithmetic: a cube is `(j, k)` with
//! `0 <= k_i < 2^j`, standing for the half-open box `prod_i [k_i 2^-j,
//! (k_i+1) 2^-j)`. Grid cells at resolution `J` are the level-`J` cubes, so
//! membership questions reduce to shifts and comparisons.

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Half-open dyadic cube on the `n`-torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    /// Dimension (1 or 2). Unused axes keep `k = 0`.
    pub n: usize,
    /// Level: side length is `2^-j`.
    pub j: u32,
    /// Corner index per axis, `0 <= k_i < 2^j`.
    pub k: [u64; 2],
}

impl DyadicCube {
    pub fn new(n: usize, j: u32, k: [u64; 2]) -> Result<Self, Error> {
        if n != 1 && n != 2 {
            return Err(Error::invalid(format!("cube dimension must be 1 or 2, got {n}")));
        }
        if j >= 63 {
            return Err(Error::invalid(format!("cube level {j} out of range")));
        }
        let side = 1u64 << j;
        for axis in 0..n {
            if k[axis] >= side {
                return Err(Error::invalid(format!(
                    "cube index {} out of range at level {j} (axis {axis})",
                    k[axis]
                )));
            }
        }
        if n == 1 && k[1] != 0 {
            return Err(Error::invalid("one-dimensional cube carries a second index"));
        }
        Ok(DyadicCube { n, j, k })
    }

    /// The whole torus.
    pub fn root(n: usize) -> Self {
        DyadicCube { n, j: 0, k: [0, 0] }
    }

    /// Side length `2^-j`.
    pub fn side(&self) -> f64 {
        (0.5f64).powi(self.j as i32)
    }

    /// Volume `2^-jn`.
    pub fn volume(&self) -> f64 {
        (0.5f64).powi((self.j as usize * self.n) as i32)
    }

    /// Lower corner coordinates in `[0,1)^n`.
    pub fn corner(&self) -> [f64; 2] {
        let s = self.side();
        [self.k[0] as f64 * s, self.k[1] as f64 * s]
    }

    /// Center coordinates.
    pub fn center(&self) -> [f64; 2] {
        let s = self.side();
        let mut c = [0.0, 0.0];
        for axis in 0..self.n {
            c[axis] = (self.k[axis] as f64 + 0.5) * s;
        }
        c
    }

    /// Parent cube one level up; the root is its own parent.
    pub fn parent(&self) -> DyadicCube {
        if self.j == 0 {
            return *self;
        }
        DyadicCube {
            n: self.n,
            j: self.j - 1,
            k: [self.k[0] >> 1, if self.n == 2 { self.k[1] >> 1 } else { 0 }],
        }
    }

    /// The `2^n` children one level down.
    pub fn children(&self) -> Vec<DyadicCube> {
        let mut out = Vec::with_capacity(1 << self.n);
        for bits in 0..(1u64 << self.n) {
            let mut k = [self.k[0] << 1, self.k[1] << 1];
            k[0] |= bits & 1;
            if self.n == 2 {
                k[1] |= (bits >> 1) & 1;
            } else {
                k[1] = 0;
            }
            out.push(DyadicCube { n: self.n, j: self.j + 1, k });
        }
        out
    }

    /// Ancestor at `level <= j`.
    pub fn ancestor(&self, level: u32) -> DyadicCube {
        assert!(level <= self.j, "ancestor level must not exceed the cube level");
        let shift = self.j - level;
        DyadicCube {
            n: self.n,
            j: level,
            k: [self.k[0] >> shift, if self.n == 2 { self.k[1] >> shift } else { 0 }],
        }
    }

    /// Whether `other` is contained in `self` (as point sets; equality counts).
    pub fn contains(&self, other: &DyadicCube) -> bool {
        debug_assert_eq!(self.n, other.n);
        other.j >= self.j && other.ancestor(self.j).k == self.k
    }

    /// Exact membership of the grid cell `m` at resolution `res >= j`.
    pub fn contains_cell(&self, res: u32, m: [u64; 2]) -> bool {
        debug_assert!(res >= self.j);
        let shift = res - self.j;
        (0..self.n).all(|axis| (m[axis] >> shift) == self.k[axis])
    }
}

/// Exact indicator of the half-open cube at a grid cell: the cells at
/// resolution `res` tile the torus, so for fixed level the indicators over
/// all `k` form a partition of unity.
pub fn indicator(cube: &DyadicCube, res: u32, m: [u64; 2]) -> f64 {
    if cube.contains_cell(res, m) {
        1.0
    } else {
        0.0
    }
}

/// Indicator of the enlarged cube: `multiple` adjacent level-`j` cubes per
/// axis (the original plus `floor((multiple-1)/2)` neighbors below and
/// `ceil((multiple-1)/2)` above, wrapping around the torus). `multiple = 1`
/// recovers [`indicator`].
pub fn enlarged_indicator(cube: &DyadicCube, multiple: u64, res: u32, m: [u64; 2]) -> f64 {
    debug_assert!(multiple >= 1);
    let side = 1u64 << cube.j;
    let lo = (multiple - 1) / 2;
    let shift = res - cube.j;
    for axis in 0..cube.n {
        let cell = m[axis] >> shift;
        // Offset of the cell from the enlarged block's lowest cube, mod 2^j.
        let offset = (cell + side - (cube.k[axis] + side - (lo % side)) % side) % side;
        if offset >= multiple.min(side) {
            return 0.0;
        }
    }
    1.0
}

/// Index of one basis function: type bits, level, translation.
///
/// `eps` has one bit per axis (bit 0 = first axis); a set bit means the
/// oscillating factor sits on that axis. `eps == 0` occurs only at `j == 0`
/// (the scaling block); every deeper level carries at least one set bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub j: u32,
    pub eps: u8,
    pub k: [u64; 2],
}

impl WaveletIndex {
    pub fn new(eps: u8, j: u32, k: [u64; 2]) -> Self {
        WaveletIndex { j, eps, k }
    }

    /// Validates the index against a dimension and a level budget
    /// (`levels = J` means detail levels `0..J`).
    pub fn validate(&self, n: usize, levels: u32) -> Result<(), Error> {
        if self.eps >= (1 << n) {
            return Err(Error::invalid(format!(
                "type bits {:#b} out of range in dimension {n}",
                self.eps
            )));
        }
        if self.eps == 0 && self.j != 0 {
            return Err(Error::invalid(format!(
                "scaling entries exist only at level 0, got level {}",
                self.j
            )));
        }
        if self.eps != 0 && self.j >= levels {
            return Err(Error::invalid(format!(
                "level {} out of range for a transform with {levels} detail levels",
                self.j
            )));
        }
        let side = 1u64 << self.j;
        for axis in 0..n {
            if self.k[axis] >= side {
                return Err(Error::invalid(format!(
                    "translation {} out of range at level {} (axis {axis})",
                    self.k[axis], self.j
                )));
            }
        }
        if n == 1 && self.k[1] != 0 {
            return Err(Error::invalid("one-dimensional index carries a second translation"));
        }
        Ok(())
    }

    /// The dyadic cube this entry lives on.
    pub fn cube(&self, n: usize) -> DyadicCube {
        DyadicCube { n, j: self.j, k: self.k }
    }
}

/// Row-major index of the translation `k` on the level-`level` lattice.
pub(crate) fn lattice_pos(n: usize, level: u32, k: [u64; 2]) -> usize {
    if n == 1 {
        k[0] as usize
    } else {
        ((k[0] << level) + k[1]) as usize
    }
}

/// Inverse of [`lattice_pos`].
pub(crate) fn cube_at(n: usize, level: u32, pos: usize) -> DyadicCube {
    let k = if n == 1 {
        [pos as u64, 0]
    } else {
        let side = 1usize << level;
        [(pos / side) as u64, (pos % side) as u64]
    };
    DyadicCube { n, j: level, k }
}

/// Index of the level-`level` ancestor of the cell `pos` on the level-`fine`
/// lattice.
pub(crate) fn ancestor_pos(n: usize, fine: u32, pos: usize, level: u32) -> usize {
    let shift = fine - level;
    if n == 1 {
        pos >> shift
    } else {
        let fine_side = 1usize << fine;
        let (z0, z1) = (pos / fine_side, pos % fine_side);
        ((z0 >> shift) << level) + (z1 >> shift)
    }
}
