use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{EnergyLevel, TrigPotential};

/// Default bound on the number of top-dimensional cells (= vertices) of a
/// grid.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 27;

/// Vertices closer than this to the level count as ties and are included.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Subcomplex of the canonical cubical decomposition of `T^n` on a periodic
/// grid.
///
/// A `d`-cell is a base vertex `v` plus a set of `d` axes (a bit mask); it
/// spans `v + Σ_{i∈S} t_i e_i`, `t ∈ [0,1]^d`, with indices taken modulo the
/// grid shape. Cells of one dimension are numbered `v · C(n,d) + rank(mask)`
/// so that faces of nearby cells get nearby numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCubicalComplex {
    shape: Vec<usize>,
    strides: Vec<usize>,
    masks: Vec<Vec<u32>>,
    mask_rank: Vec<usize>,
    occupancy: Vec<FixedBitSet>,
}

impl PeriodicCubicalComplex {
    pub fn empty(shape: &[usize]) -> Result<Self> {
        Self::empty_with_budget(shape, DEFAULT_CELL_BUDGET)
    }

    pub fn empty_with_budget(shape: &[usize], budget: u64) -> Result<Self> {
        let n = shape.len();
        if n == 0 || n > crate::model::MAX_DIMENSION || shape.iter().any(|&r| r < 8) {
            return Err(Error::InvalidResolution(shape.to_vec()));
        }
        let cells = shape
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))
            .unwrap_or(u64::MAX);
        if cells > budget {
            return Err(Error::BudgetExceeded { cells, budget });
        }
        let mut strides = Vec::with_capacity(n);
        let mut s = 1;
        for &r in shape {
            strides.push(s);
            s *= r;
        }
        let mut masks = vec![Vec::new(); n + 1];
        for mask in 0u32..(1 << n) {
            masks[mask.count_ones() as usize].push(mask);
        }
        let mut mask_rank = vec![0; 1 << n];
        for list in &masks {
            for (r, &m) in list.iter().enumerate() {
                mask_rank[m as usize] = r;
            }
        }
        let occupancy = masks
            .iter()
            .map(|list| FixedBitSet::with_capacity(list.len() * s))
            .collect();
        Ok(Self {
            shape: shape.to_vec(),
            strides,
            masks,
            mask_rank,
            occupancy,
        })
    }

    /// The whole torus.
    pub fn full(shape: &[usize]) -> Result<Self> {
        let mut c = Self::empty(shape)?;
        for occ in &mut c.occupancy {
            occ.insert_range(..);
        }
        Ok(c)
    }

    /// Full subcomplex on a set of active vertices: a cell is present iff all
    /// of its vertices are.
    pub fn from_vertices(shape: &[usize], active: &FixedBitSet, budget: u64) -> Result<Self> {
        let mut c = Self::empty_with_budget(shape, budget)?;
        let nv = c.vertex_count();
        if active.len() != nv {
            return Err(Error::InvalidArgument(format!(
                "vertex set has {} entries, grid has {nv}",
                active.len()
            )));
        }
        c.occupancy[0] = active.clone();
        for d in 1..=c.dim() {
            let per = c.masks[d].len();
            let found: Vec<usize> = {
                let grid = &c;
                let lower = &grid.occupancy[d - 1];
                (0..nv)
                    .into_par_iter()
                    .flat_map_iter(|v| {
                        grid.masks[d].iter().enumerate().filter_map(move |(r, &mask)| {
                            // present iff the two opposite facets across the
                            // highest axis are present
                            let top = 31 - mask.leading_zeros() as usize;
                            let facet = mask & !(1 << top);
                            let back = grid.cell_id(d - 1, v, facet);
                            let front = grid.cell_id(d - 1, grid.shift(v, top), facet);
                            (lower.contains(back) && lower.contains(front)).then_some(v * per + r)
                        })
                    })
                    .collect()
            };
            for id in found {
                c.occupancy[d].insert(id);
            }
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn vertex_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Number of `d`-cells of the full torus grid, `C(n,d) · Π r_i`.
    pub fn capacity(&self, d: usize) -> usize {
        self.masks[d].len() * self.vertex_count()
    }

    pub fn occupancy(&self, d: usize) -> &FixedBitSet {
        &self.occupancy[d]
    }

    pub fn contains(&self, d: usize, id: usize) -> bool {
        self.occupancy[d].contains(id)
    }

    pub fn cell_counts(&self) -> Vec<usize> {
        self.occupancy.iter().map(|o| o.count_ones(..)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cell_counts()
            .iter()
            .enumerate()
            .map(|(d, &c)| if d % 2 == 0 { c as i64 } else { -(c as i64) })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy[0].is_clear()
    }

    pub(crate) fn cell_id(&self, d: usize, v: usize, mask: u32) -> usize {
        v * self.masks[d].len() + self.mask_rank[mask as usize]
    }

    pub(crate) fn decode(&self, d: usize, id: usize) -> (usize, u32) {
        let per = self.masks[d].len();
        (id / per, self.masks[d][id % per])
    }

    pub fn vertex_coords(&self, mut v: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&r| {
                let c = v % r;
                v /= r;
                c
            })
            .collect()
    }

    pub fn vertex_index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .zip(&self.shape)
            .map(|((&c, &s), &r)| (c % r) * s)
            .sum()
    }

    /// `v + e_axis` with periodic wrap.
    pub(crate) fn shift(&self, v: usize, axis: usize) -> usize {
        let r = self.shape[axis];
        let s = self.strides[axis];
        let c = (v / s) % r;
        if c + 1 == r {
            v - c * s
        } else {
            v + s
        }
    }

    /// Oriented facets of a `d`-cell: `∂(v, S) = Σ_j (−1)^j [(v + e_{a_j}, S∖a_j) − (v, S∖a_j)]`
    /// with `a_0 < a_1 < …` the axes of `S`.
    pub fn boundary(&self, d: usize, id: usize) -> Vec<(usize, i8)> {
        let (v, mask) = self.decode(d, id);
        let mut out = Vec::with_capacity(2 * d);
        let mut j = 0;
        for axis in 0..self.dim() {
            if mask & (1 << axis) == 0 {
                continue;
            }
            let facet = mask & !(1 << axis);
            let sign: i8 = if j % 2 == 0 { 1 } else { -1 };
            out.push((self.cell_id(d - 1, self.shift(v, axis), facet), sign));
            out.push((self.cell_id(d - 1, v, facet), -sign));
            j += 1;
        }
        out
    }

    /// Every facet of every present cell is present.
    pub fn validate_closure(&self) -> Result<()> {
        for d in 1..=self.dim() {
            for id in self.occupancy[d].ones() {
                if self.boundary(d, id).iter().any(|&(f, _)| !self.contains(d - 1, f)) {
                    return Err(Error::ClosureViolation { dim: d, cell: id });
                }
            }
        }
        Ok(())
    }

    /// Bitwise inclusion, dimension by dimension.
    pub fn is_subcomplex_of(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self
                .occupancy
                .iter()
                .zip(&other.occupancy)
                .all(|(a, b)| a.is_subset(b))
    }

    /// Set a cell without touching its faces. Used to build arbitrary (possibly
    /// non-closed) test inputs.
    pub fn insert_raw(&mut self, d: usize, id: usize) {
        self.occupancy[d].insert(id);
    }

    /// Tile the complex `m_i` times along axis `i` on the refined grid.
    pub fn tile(&self, copies: &[usize], budget: u64) -> Result<Self> {
        if copies.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: copies.len(),
            });
        }
        if copies.contains(&0) {
            return Err(Error::InvalidArgument("gluing copies must be ≥ 1".into()));
        }
        let shape: Vec<usize> = self.shape.iter().zip(copies).map(|(r, m)| r * m).collect();
        let mut out = Self::empty_with_budget(&shape, budget)?;
        let nv = out.vertex_count();
        for d in 0..=self.dim() {
            let per = self.masks[d].len();
            let ids: Vec<usize> = {
                let target = &out;
                (0..nv)
                    .into_par_iter()
                    .flat_map_iter(|v| {
                        let src = self.vertex_index(&target.vertex_coords(v));
                        (0..per).filter_map(move |r| {
                            self.contains(d, src * per + r).then_some(v * per + r)
                        })
                    })
                    .collect()
            };
            for id in ids {
                out.occupancy[d].insert(id);
            }
        }
        Ok(out)
    }
}

/// Result of rasterizing a sublevel set.
#[derive(Debug, Clone, PartialEq)]
pub struct Rasterization {
    pub complex: PeriodicCubicalComplex,
    /// Vertices with `|U − E| < 1e-12`; resolved as included.
    pub ties: usize,
}

impl Rasterization {
    pub fn degenerate_level(&self) -> bool {
        self.ties > 0
    }
}

/// Grid coordinate `2π · i / r`.
pub fn grid_angle(i: usize, r: usize) -> f64 {
    (i as f64 / r as f64) * TAU
}

/// Full subcomplex on the vertices where `U ≤ E`.
pub fn rasterize_sublevel(
    potential: &TrigPotential,
    energy: EnergyLevel,
    shape: &[usize],
    budget: u64,
) -> Result<Rasterization> {
    if shape.len() != potential.dim() {
        return Err(Error::DimensionMismatch {
            expected: potential.dim(),
            found: shape.len(),
        });
    }
    let grid = PeriodicCubicalComplex::empty_with_budget(shape, budget)?;
    let values = vertex_values(potential, &grid);
    let e = energy.value();
    let mut active = FixedBitSet::with_capacity(values.len());
    let mut ties = 0;
    for (v, &u) in values.iter().enumerate() {
        if (u - e).abs() < TIE_TOLERANCE {
            ties += 1;
            active.insert(v);
        } else if u <= e {
            active.insert(v);
        }
    }
    Ok(Rasterization {
        complex: PeriodicCubicalComplex::from_vertices(shape, &active, budget)?,
        ties,
    })
}

/// `U` at every grid vertex, in vertex order.
pub fn vertex_values(potential: &TrigPotential, grid: &PeriodicCubicalComplex) -> Vec<f64> {
    let shape = grid.shape().to_vec();
    (0..grid.vertex_count())
        .into_par_iter()
        .map(|v| {
            let mut rest = v;
            let x: Vec<f64> = shape
                .iter()
                .map(|&r| {
                    let i = rest % r;
                    rest /= r;
                    grid_angle(i, r)
                })
                .collect();
            potential.eval(&x).expect("dimension checked")
        })
        .collect()
}
