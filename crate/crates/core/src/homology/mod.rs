//! Homology of domains of possible motions `{U ≤ E}` on periodic cubical grids.

mod complex;
mod reduce;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EnergyLevel, TrigPotential};

pub use complex::{
    grid_angle, rasterize_sublevel, vertex_values, PeriodicCubicalComplex, Rasterization,
    DEFAULT_CELL_BUDGET, TIE_TOLERANCE,
};
pub use reduce::{boundary_ranks, Field};

/// Betti numbers `β_0 … β_n` over a prime field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiVector {
    pub betti: Vec<usize>,
    pub field: Field,
}

impl BettiVector {
    pub fn euler_characteristic(&self) -> i64 {
        self.betti
            .iter()
            .enumerate()
            .map(|(d, &b)| if d % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }

    pub fn get(&self, d: usize) -> usize {
        self.betti.get(d).copied().unwrap_or(0)
    }
}

/// `β_d = #d-cells − rank ∂_d − rank ∂_{d+1}`.
pub fn betti(complex: &PeriodicCubicalComplex, field: Field) -> Result<BettiVector> {
    complex.validate_closure()?;
    let counts = complex.cell_counts();
    let ranks = boundary_ranks(complex, field);
    let n = complex.dim();
    let betti = (0..=n)
        .map(|d| counts[d] - ranks[d] - if d < n { ranks[d + 1] } else { 0 })
        .collect();
    let out = BettiVector { betti, field };
    debug_assert_eq!(out.euler_characteristic(), complex.euler_characteristic());
    Ok(out)
}

/// Number of connected components from a union-find over vertices and edges.
pub fn component_count(complex: &PeriodicCubicalComplex) -> usize {
    let nv = complex.vertex_count();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for e in complex.occupancy(1).ones() {
        let ends: Vec<usize> = complex.boundary(1, e).iter().map(|&(v, _)| v).collect();
        let (a, b) = (find(&mut parent, ends[0]), find(&mut parent, ends[1]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    complex
        .occupancy(0)
        .ones()
        .filter(|&v| find(&mut parent, v) == v)
        .count()
}

/// Copies per axis used to glue blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingSpec {
    copies: Vec<usize>,
}

impl GluingSpec {
    pub fn new(copies: Vec<usize>) -> Result<Self> {
        if copies.is_empty() || copies.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "gluing copies must be positive, got {copies:?}"
            )));
        }
        Ok(Self { copies })
    }

    pub fn copies(&self) -> &[usize] {
        &self.copies
    }

    pub fn blocks(&self) -> usize {
        self.copies.iter().product()
    }
}

/// Potential of the glued building: wave vectors multiplied by `m`.
pub fn glue(potential: &TrigPotential, spec: &GluingSpec) -> Result<TrigPotential> {
    let m: Vec<i64> = spec.copies.iter().map(|&c| c as i64).collect();
    potential.scale_waves(&m)
}

/// Combinatorial gluing: the occupancy tiled `m_i` times along axis `i`.
pub fn glue_complex(
    complex: &PeriodicCubicalComplex,
    spec: &GluingSpec,
    budget: u64,
) -> Result<PeriodicCubicalComplex> {
    complex.tile(&spec.copies, budget)
}

/// One row of an energy scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub energy: f64,
    pub betti: BettiVector,
    pub cells: Vec<usize>,
    pub components: usize,
    pub ties: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BettiScan {
    pub resolution: Vec<usize>,
    pub field: Field,
    pub rows: Vec<ScanRow>,
    /// Every complex is a subcomplex of the next one.
    pub nested: bool,
}

/// Betti numbers of `{U ≤ E}` for a sorted list of energies.
pub fn betti_scan(
    potential: &TrigPotential,
    energies: &[f64],
    shape: &[usize],
    field: Field,
    budget: u64,
) -> Result<BettiScan> {
    if energies.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("energy list must be sorted".into()));
    }
    let results: Vec<Result<(ScanRow, PeriodicCubicalComplex)>> = energies
        .par_iter()
        .map(|&e| {
            let start = Instant::now();
            let r = rasterize_sublevel(potential, EnergyLevel::new(e)?, shape, budget)?;
            let b = betti(&r.complex, field)?;
            let row = ScanRow {
                energy: e,
                cells: r.complex.cell_counts(),
                components: component_count(&r.complex),
                betti: b,
                ties: r.ties,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            Ok((row, r.complex))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut nested = true;
    let mut prev: Option<PeriodicCubicalComplex> = None;
    for res in results {
        let (row, complex) = res?;
        if let Some(p) = &prev {
            nested &= p.is_subcomplex_of(&complex);
        }
        prev = Some(complex);
        rows.push(row);
    }
    Ok(BettiScan {
        resolution: shape.to_vec(),
        field,
        rows,
        nested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigTerm;

    fn cos_sum(k: i64, n: usize) -> TrigPotential {
        TrigPotential::cosine_sum(1.0, &vec![k; n]).unwrap()
    }

    fn sub(u: &TrigPotential, e: f64, r: usize) -> PeriodicCubicalComplex {
        rasterize_sublevel(u, EnergyLevel::new(e).unwrap(), &vec![r; u.dim()], DEFAULT_CELL_BUDGET)
            .unwrap()
            .complex
    }

    fn check(c: &PeriodicCubicalComplex, expected: &[usize]) {
        for field in [Field::GF2, Field::GF3] {
            let b = betti(c, field).unwrap();
            assert_eq!(b.betti, expected, "{field}");
            assert_eq!(b.euler_characteristic(), c.euler_characteristic());
        }
        assert_eq!(component_count(c), expected[0]);
    }

    #[test]
    fn full_torus_counts_and_homology() {
        let u = cos_sum(1, 2);
        let c = sub(&u, 3.0, 16);
        assert_eq!(c.cell_counts(), vec![256, 512, 256]);
        check(&c, &[1, 2, 1]);
        let t3 = PeriodicCubicalComplex::full(&[8, 8, 8]).unwrap();
        assert_eq!(t3.cell_counts(), vec![512, 1536, 1536, 512]);
        check(&t3, &[1, 3, 3, 1]);
    }

    #[test]
    fn empty_below_minimum() {
        let c = sub(&cos_sum(1, 2), -3.0, 16);
        assert!(c.is_empty());
        assert_eq!(c.cell_counts(), vec![0, 0, 0]);
        check(&c, &[0, 0, 0]);
    }

    #[test]
    fn disk_below_first_saddle() {
        let c = sub(&cos_sum(1, 2), -1.0, 64);
        assert_eq!(c.euler_characteristic(), 1);
        check(&c, &[1, 0, 0]);
        // centred on (π, π)
        assert!(c.contains(0, c.vertex_index(&[32, 32])));
        assert!(!c.contains(0, 0));
    }

    #[test]
    fn torus_minus_disks() {
        for k in 1..=4 {
            let c = sub(&cos_sum(k, 2), 0.5, 64);
            let k2 = (k * k) as usize;
            assert_eq!(c.euler_characteristic(), -(k2 as i64));
            check(&c, &[1, k2 + 1, 0]);
        }
    }

    #[test]
    fn three_torus_graph_retracts() {
        let c = sub(&cos_sum(1, 3), 0.0, 32);
        check(&c, &[1, 3, 0, 0]);
        for r in [32, 48] {
            let c = sub(&cos_sum(2, 3), 0.0, r);
            assert_eq!(c.euler_characteristic(), -16);
            check(&c, &[1, 17, 0, 0]);
        }
    }

    #[test]
    fn one_dimensional_arcs() {
        // cos 3x ≤ 0 is three arcs
        let c = sub(&cos_sum(3, 1), 0.0 + 1e-6, 60);
        check(&c, &[3, 0]);
    }

    #[test]
    fn non_closed_input_is_rejected() {
        let mut c = PeriodicCubicalComplex::empty(&[8, 8]).unwrap();
        c.insert_raw(1, 0);
        assert!(matches!(
            betti(&c, Field::GF2),
            Err(Error::ClosureViolation { dim: 1, .. })
        ));
    }

    #[test]
    fn gluing_matches_tiling() {
        let u = cos_sum(1, 2);
        let g = glue(&u, &GluingSpec::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(g, cos_sum(2, 2));
        let g31 = glue(&u, &GluingSpec::new(vec![3, 1]).unwrap()).unwrap();
        let expected = TrigPotential::new(
            2,
            vec![TrigTerm::cos(1.0, vec![3, 0]), TrigTerm::cos(1.0, vec![0, 1])],
        )
        .unwrap();
        assert_eq!(g31, expected);
        assert_eq!(glue(&u, &GluingSpec::new(vec![1, 1]).unwrap()).unwrap(), u);

        let base = sub(&u, 0.5, 64);
        let same = glue_complex(&base, &GluingSpec::new(vec![1, 1]).unwrap(), DEFAULT_CELL_BUDGET)
            .unwrap();
        assert_eq!(same, base);
        for m in [vec![2usize, 2], vec![3, 1]] {
            let spec = GluingSpec::new(m.clone()).unwrap();
            let tiled = glue_complex(&base, &spec, DEFAULT_CELL_BUDGET).unwrap();
            assert_eq!(tiled.cell_counts()[2], base.cell_counts()[2] * spec.blocks());
            let shape: Vec<usize> = m.iter().map(|mi| 64 * mi).collect();
            let analytic = rasterize_sublevel(
                &glue(&u, &spec).unwrap(),
                EnergyLevel::new(0.5).unwrap(),
                &shape,
                DEFAULT_CELL_BUDGET,
            )
            .unwrap()
            .complex;
            // same grid values, so the complexes coincide bit for bit
            assert_eq!(analytic, tiled);
            let b = betti(&tiled, Field::GF2).unwrap();
            assert_eq!(b, betti(&analytic, Field::GF2).unwrap());
            assert_eq!(b.get(1), spec.blocks() + 1);
        }
    }

    #[test]
    fn scan_is_nested_and_follows_morse_windows() {
        let u = cos_sum(1, 2);
        let s = betti_scan(&u, &[-2.5, -1.0, 0.5, 2.5], &[64, 64], Field::GF2, DEFAULT_CELL_BUDGET)
            .unwrap();
        assert!(s.nested);
        let b: Vec<Vec<usize>> = s.rows.iter().map(|r| r.betti.betti.clone()).collect();
        assert_eq!(b, vec![vec![0, 0, 0], vec![1, 0, 0], vec![1, 2, 0], vec![1, 2, 1]]);
        assert!(betti_scan(&u, &[1.0, 0.0], &[16, 16], Field::GF2, DEFAULT_CELL_BUDGET).is_err());
    }

    #[test]
    fn budget_and_resolution_errors() {
        assert!(matches!(
            PeriodicCubicalComplex::empty_with_budget(&[64, 64], 1000),
            Err(Error::BudgetExceeded { cells: 4096, budget: 1000 })
        ));
        assert!(matches!(
            PeriodicCubicalComplex::empty(&[4, 16]),
            Err(Error::InvalidResolution(_))
        ));
    }

    #[test]
    fn ties_are_counted_and_included() {
        // cos x + cos y = 0 on a grid containing x = π/2
        let r = rasterize_sublevel(&cos_sum(1, 2), EnergyLevel::new(0.0).unwrap(), &[16, 16], DEFAULT_CELL_BUDGET)
            .unwrap();
        assert!(r.degenerate_level());
        assert!(r.complex.contains(0, r.complex.vertex_index(&[4, 4])));
    }
}
