//! Combination atoms: splitting a coefficient field along the level sets of
//! its square function.
//!
//! [`atom_decompose`] cuts a field into pieces `g_v` whose square functions
//! are uniformly small relative to a dyadic amplitude `2^v`. The assignment
//! is by cube minima: an entry joins the deepest level set
//! `E_v = { S_r > 2^v }` that contains its whole home cube. Two facts come
//! for free from this choice and are asserted as invariants, not trusted:
//! the entry lists of the atoms partition the field exactly, and each
//! atom's own square function never exceeds `2^(v+1)` anywhere (take the
//! finest atom cube at a point; all the atom's other cubes at that point
//! contain it, and the assignment rule plants a point inside it where the
//! full square function is already below `2^(v+1)`). The total level-set
//! mass `sum_v 2^(pv) |E_v|` is controlled by the `p`-th power of the
//! square function's integral, a discrete Chebyshev bound the decomposition
//! reports alongside the atoms.
//!
//! [`peel_cover`] organizes a set of dyadic cubes into generations of
//! maximal cubes (coarsest remaining level first), and the two check
//! routines measure how a synthesized atom interacts with the generations:
//! [`scaling_bound_check`] normalizes its scaling coefficients inside each
//! generation, and [`localized_product_check`] compares localized product
//! norms against the profile the generation level predicts.

use std::collections::BTreeSet;

use crate::dyadic::{ancestor_pos, lattice_pos, DyadicCube};
use crate::error::Error;
use crate::field::CoefficientField;
use crate::numeric::{pow2, power_of_two, ppow, proot};
use crate::params::SpaceParams;
use crate::spaces::{square_function, CubeValue, NormReport};
use crate::wavelet::{forward_dwt, scaling_coefficients, synthesize, WaveletSpec};

/// One piece of a level-set decomposition: entries whose square function is
/// pinned between consecutive dyadic amplitudes.
#[derive(Debug, Clone)]
pub struct CombinationAtom {
    /// Level-set index; the atom's amplitude bound is `lambda = 2^v`.
    pub v: u32,
    /// Finest-level cells covering the support of the atom's square
    /// function: the cells of the level set `E_v`, plus (for the `v = 0`
    /// residual) the home cubes of entries too shallow for any level set.
    pub support: Vec<DyadicCube>,
    /// The entries assigned to this atom.
    pub coeffs: CoefficientField,
}

impl CombinationAtom {
    /// The amplitude bound `2^v`.
    pub fn lambda(&self) -> f64 {
        power_of_two(self.v as i32)
    }

    /// Total volume of the support cells.
    pub fn support_measure(&self) -> f64 {
        let n = self.coeffs.n();
        let levels = self.coeffs.levels();
        self.support.len() as f64 * power_of_two(-((levels as usize * n) as i32))
    }
}

/// The full output of [`atom_decompose`]: the atoms plus the level-set mass
/// bound they certify.
#[derive(Debug, Clone)]
pub struct AtomDecomposition {
    /// Atoms indexed by `v`, from the residual `v = 0` up to the deepest
    /// nonempty level set; `atoms[v].v == v`.
    pub atoms: Vec<CombinationAtom>,
    /// `sum_v 2^(pv) |E_v|` over the level sets `E_v = { S_r > 2^v }`.
    pub chebyshev_sum: f64,
    /// `(2^p / (2^p - 1)) * integral of S_r^p` — the bound the sum obeys.
    pub chebyshev_bound: f64,
}

/// Splits a coefficient field into combination atoms along the level sets
/// of its square function `S_r`.
pub fn atom_decompose(
    c: &CoefficientField,
    r: f64,
    p: f64,
) -> Result<AtomDecomposition, Error> {
    if !p.is_finite() || p <= 1.0 {
        return Err(Error::invalid(format!(
            "integrability exponent must lie in (1, inf), got {p}"
        )));
    }
    let n = c.n();
    let levels = c.levels();
    let s = square_function(c, r)?;
    let cell_volume = s.cell_volume();

    // Minimum of the square function over every dyadic cube, bottom-up.
    let mut mins: Vec<Vec<f64>> = Vec::with_capacity(levels as usize + 1);
    mins.push(s.values().to_vec());
    for l in (0..levels).rev() {
        let fine = mins.last().unwrap();
        let mut coarse = vec![f64::INFINITY; 1 << (l as usize * n)];
        for (pos, &value) in fine.iter().enumerate() {
            let parent = ancestor_pos(n, l + 1, pos, l);
            if value < coarse[parent] {
                coarse[parent] = value;
            }
        }
        mins.push(coarse);
    }
    mins.reverse(); // mins[l] is now the level-l table.

    // Deepest nonempty level set.
    let top = s.sup_norm();
    let v_max = if top > 1.0 { ((top.log2().ceil() as i64) - 1).max(0) as u32 } else { 0 };

    let mut atoms = Vec::with_capacity(v_max as usize + 1);
    for v in 0..=v_max {
        let threshold = power_of_two(v as i32);
        let support: Vec<DyadicCube> = s
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &value)| value > threshold)
            .map(|(i, _)| DyadicCube { n, j: levels, k: s.cell_of_index(i) })
            .collect();
        atoms.push(CombinationAtom {
            v,
            support,
            coeffs: CoefficientField::empty(n, levels)?,
        });
    }

    // Assignment by cube minima: the deepest v with min(S_r over the home
    // cube) > 2^v, clamped into the residual when even E_0 misses the cube.
    let mut stragglers: BTreeSet<DyadicCube> = BTreeSet::new();
    for (idx, &value) in c.iter() {
        let (level, pos) = if idx.eps == 0 {
            (0, 0)
        } else {
            (idx.j, lattice_pos(n, idx.j, idx.k))
        };
        let m = mins[level as usize][pos];
        let v = if m > 1.0 { ((m.log2().ceil() as i64) - 1).max(0) as u32 } else { 0 };
        debug_assert!(v <= v_max);
        if v == 0 && m <= 1.0 {
            // Residual entry: its home cube is not inside any level set, so
            // the support must pick its cells up explicitly.
            let cube = DyadicCube { n, j: level, k: if idx.eps == 0 { [0, 0] } else { idx.k } };
            let shift = levels - level;
            let side = 1u64 << shift;
            for a in 0..side {
                let second = if n == 2 { side } else { 1 };
                for b in 0..second {
                    let cell = [(cube.k[0] << shift) + a, (cube.k[1] << shift) + b];
                    stragglers.insert(DyadicCube { n, j: levels, k: cell });
                }
            }
        }
        atoms[v as usize].coeffs.set(*idx, value)?;
    }
    if !stragglers.is_empty() {
        let mut cells: BTreeSet<DyadicCube> = atoms[0].support.iter().cloned().collect();
        cells.extend(stragglers);
        atoms[0].support = cells.into_iter().collect();
    }

    // Level-set mass against the integral of S_r^p.
    let mut chebyshev_sum = 0.0;
    for v in 0..=v_max {
        let threshold = power_of_two(v as i32);
        let measure =
            s.values().iter().filter(|&&value| value > threshold).count() as f64 * cell_volume;
        chebyshev_sum += ppow(threshold, p) * measure;
    }
    let integral: f64 = s.values().iter().map(|&value| ppow(value, p) * cell_volume).sum();
    let geometric = ppow(2.0, p) / (ppow(2.0, p) - 1.0);
    Ok(AtomDecomposition { atoms, chebyshev_sum, chebyshev_bound: geometric * integral })
}

/// One generation of a peeled cube cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelGeneration {
    /// Common level of this generation's cubes.
    pub level: u32,
    /// The maximal cubes extracted in this round, sorted.
    pub cubes: Vec<DyadicCube>,
    /// What remained of the input after this round.
    pub residual: Vec<DyadicCube>,
}

/// A cube cover peeled into generations of maximal cubes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelHierarchy {
    pub generations: Vec<PeelGeneration>,
}

/// Peels a set of dyadic cubes into generations: extract the coarsest
/// remaining cubes (they are maximal — nothing left can contain them, and
/// distinct cubes of one level are disjoint), set them aside, repeat.
pub fn peel_cover(cubes: &[DyadicCube]) -> Result<PeelHierarchy, Error> {
    let Some(first) = cubes.first() else {
        return Err(Error::invalid("peeling needs at least one cube"));
    };
    let n = first.n;
    if cubes.iter().any(|q| q.n != n) {
        return Err(Error::invalid("peeling needs cubes of one dimension"));
    }
    let mut remaining: BTreeSet<DyadicCube> = cubes.iter().cloned().collect();
    let mut generations = Vec::new();
    while let Some(level) = remaining.iter().map(|q| q.j).min() {
        let batch: Vec<DyadicCube> =
            remaining.iter().filter(|q| q.j == level).cloned().collect();
        for q in &batch {
            remaining.remove(q);
        }
        generations.push(PeelGeneration {
            level,
            cubes: batch,
            residual: remaining.iter().cloned().collect(),
        });
    }
    Ok(PeelHierarchy { generations })
}

/// Sup of an atom's normalized scaling coefficients inside one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationBound {
    /// The generation's level.
    pub level: u32,
    /// Sup of `|<g, scaling function>| * 2^(nj/2) * 2^((t+r) level) / 2^v`
    /// over cubes inside the generation's cubes.
    pub bound: f64,
}

/// Output of [`scaling_bound_check`]: the fitted constant and its
/// per-generation breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingBoundReport {
    /// The largest per-generation bound.
    pub constant: f64,
    pub per_generation: Vec<GenerationBound>,
}

/// Measures how an atom's scaling coefficients scale against the levels of
/// a peeled cover: for each generation at level `j_s` and each dyadic cube
/// `Q_{j,k}` of level `j >= j_s` inside a generation cube, the quantity
/// `|<g, scaling function at (j,k)>| * 2^(nj/2) * 2^((t+r) j_s) * 2^-v`
/// should stay of one size if the atom really lives at amplitude `2^v`.
pub fn scaling_bound_check(
    atom: &CombinationAtom,
    hierarchy: &PeelHierarchy,
    params: &SpaceParams,
    spec: &WaveletSpec,
) -> Result<ScalingBoundReport, Error> {
    let n = atom.coeffs.n();
    let levels = atom.coeffs.levels();
    if params.n != n {
        return Err(Error::invalid(format!(
            "parameter dimension {} does not match the atom dimension {n}",
            params.n
        )));
    }
    for generation in &hierarchy.generations {
        if generation.level > levels || generation.cubes.iter().any(|q| q.n != n) {
            return Err(Error::invalid("peeled cover does not fit the atom's grid"));
        }
    }
    let g = synthesize(&atom.coeffs, spec)?;
    let smooth = params.t + params.r;
    let normalizer = power_of_two(-(atom.v as i32));

    // Scaling coefficients of the atom at every level, computed lazily.
    let mut tables: Vec<Option<Vec<f64>>> = vec![None; levels as usize + 1];
    let mut table = |level: u32| -> Result<Vec<f64>, Error> {
        if tables[level as usize].is_none() {
            tables[level as usize] = Some(scaling_coefficients(&g, spec, level)?);
        }
        Ok(tables[level as usize].clone().unwrap())
    };

    let mut per_generation = Vec::new();
    let mut constant = 0.0f64;
    for generation in &hierarchy.generations {
        let gen_level = generation.level;
        let members: BTreeSet<usize> = generation
            .cubes
            .iter()
            .map(|q| lattice_pos(n, gen_level, q.k))
            .collect();
        let level_weight = pow2(gen_level as f64 * smooth) * normalizer;
        let mut sup = 0.0f64;
        for j in gen_level..=levels {
            let coeffs = table(j)?;
            let amplitude = pow2(j as f64 * n as f64 / 2.0) * level_weight;
            for (pos, &a) in coeffs.iter().enumerate() {
                if members.contains(&ancestor_pos(n, j, pos, gen_level)) {
                    let value = a.abs() * amplitude;
                    if value > sup {
                        sup = value;
                    }
                }
            }
        }
        per_generation.push(GenerationBound { level: gen_level, bound: sup });
        if sup > constant {
            constant = sup;
        }
    }
    Ok(ScalingBoundReport { constant, per_generation })
}

/// Compares localized norms of a pointwise product `f * g` (with `g` a
/// synthesized atom) against the profile a peeled cover predicts: on a
/// generation cube `Q` at level `j_s`, the localized norm is measured
/// against `(1 + j_s)^-tau * 2^v * |Q|^(1/p)`. Returns the per-cube ratio
/// table with the supremum as the value.
pub fn localized_product_check(
    f: &CoefficientField,
    atom: &CombinationAtom,
    hierarchy: &PeelHierarchy,
    params: &SpaceParams,
    spec: &WaveletSpec,
) -> Result<NormReport, Error> {
    let n = atom.coeffs.n();
    let levels = atom.coeffs.levels();
    if f.n() != n || f.levels() != levels {
        return Err(Error::invalid("factor and atom must share one grid"));
    }
    if params.n != n {
        return Err(Error::invalid(format!(
            "parameter dimension {} does not match the atom dimension {n}",
            params.n
        )));
    }
    if !params.p.is_finite() || params.p <= 1.0 {
        return Err(Error::invalid(format!(
            "integrability exponent must lie in (1, inf), got {}",
            params.p
        )));
    }
    for generation in &hierarchy.generations {
        if generation.level > levels || generation.cubes.iter().any(|q| q.n != n) {
            return Err(Error::invalid("peeled cover does not fit the atom's grid"));
        }
    }
    let product = synthesize(f, spec)?.pointwise_mul(&synthesize(&atom.coeffs, spec)?);
    let coeffs = forward_dwt(&product, spec)?;
    let s = square_function(&coeffs, params.t)?;
    let cell_volume = s.cell_volume();

    let mut table = Vec::new();
    let mut witness = None;
    let mut best = 0.0f64;
    for generation in &hierarchy.generations {
        let profile = (1.0 + generation.level as f64).powf(-params.tau)
            * power_of_two(atom.v as i32);
        for q in &generation.cubes {
            let mut integral = 0.0;
            for (i, &value) in s.values().iter().enumerate() {
                if q.contains_cell(levels, s.cell_of_index(i)) {
                    integral += ppow(value, params.p) * cell_volume;
                }
            }
            let local = proot(integral, params.p);
            let ratio = local / (profile * proot(q.volume(), params.p));
            table.push(CubeValue { cube: *q, value: ratio });
            if ratio > best {
                best = ratio;
                witness = Some(*q);
            }
        }
    }
    Ok(NormReport { value: best, witness, table: Some(table) })
}
