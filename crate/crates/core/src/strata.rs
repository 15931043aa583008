//! Momentum-map stratification of separable systems.
//!
//! For a separable system every integral `F_i = ½ y_i²/G_ii + V_i(x_i)` lives
//! on its own cylinder `(x_i mod 2π, y_i)`, and a layer `{F = c}` is the
//! product of the factor level sets `{F_i = c_i}`. Each factor level set is a
//! finite union of circles, isolated critical points and open separatrix
//! branches, which we call lines. Products of these give the strata
//! `T^a × R^b` of a layer, and the critical values of each factor cut the
//! momentum space into a finite cell complex.
//!
//! The census of a factor level is combinatorial: between two consecutive
//! critical points `V_i` is monotone, so the sign pattern of `V_i − c` at the
//! critical points determines every component, including the kind of its
//! endpoints (regular turning points or critical points).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{NaturalSystem, PhasePoint};
use crate::observables::{rank_df, separable_integrals, Observable, DEFAULT_RANK_TOL};
use crate::trig1d::{CriticalPoint, TrigPolynomial1d, Wave1d};

/// One separable factor `F_i = ½ y²/G_ii + V_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPortrait {
    pub index: usize,
    pub mass: f64,
    pub potential: TrigPolynomial1d,
    critical_points: Vec<CriticalPoint>,
    critical_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Circle,
    Point,
    Line,
    /// A whole circle of critical points; only appears for factors without
    /// potential (free rotors) at their minimum level.
    CriticalCircle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LayerComponent {
    pub kind: ComponentKind,
    pub multiplicity: usize,
}

/// How a factor moves on a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Oscillation,
    Rotation,
    Separatrix,
    Equilibrium,
}

/// A component together with a point on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSample {
    pub kind: ComponentKind,
    pub motion: Motion,
    pub x: f64,
    pub y: f64,
}

impl FactorPortrait {
    pub fn new(index: usize, mass: f64, potential: TrigPolynomial1d) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMetric(format!("factor mass must be positive, got {mass}")));
        }
        let critical_points = potential.critical_points();
        let mut critical_values: Vec<f64> = critical_points.iter().map(|p| p.value).collect();
        critical_values.sort_by(f64::total_cmp);
        critical_values.dedup();
        Ok(Self {
            index,
            mass,
            potential,
            critical_points,
            critical_values,
        })
    }

    /// `F = ½ y²/G + a cos(k x)`.
    pub fn cosine(index: usize, wave: i64, amplitude: f64, mass: f64) -> Result<Self> {
        Self::new(
            index,
            mass,
            TrigPolynomial1d::new(vec![Wave1d {
                amplitude,
                wave,
                kind: crate::model::TrigKind::Cos,
            }]),
        )
    }

    /// Portraits of every factor of a separable system.
    pub fn of_system(system: &NaturalSystem) -> Result<Vec<Self>> {
        if !system.model.is_diagonal() {
            return Err(Error::NonDiagonalMetric);
        }
        let (factors, constant) = system.potential.separate()?;
        factors
            .into_iter()
            .enumerate()
            .map(|(i, mut v)| {
                if i == 0 && constant != 0.0 {
                    v.terms.push(Wave1d {
                        amplitude: constant,
                        wave: 0,
                        kind: crate::model::TrigKind::Cos,
                    });
                }
                Self::new(i, system.model.metric()[(i, i)], v)
            })
            .collect()
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical_points
    }

    /// Sorted, deduplicated values of `F_i` at points where `dF_i = 0`.
    pub fn critical_values(&self) -> &[f64] {
        &self.critical_values
    }

    /// A factor with constant potential has no isolated critical points.
    pub fn is_degenerate(&self) -> bool {
        self.critical_points.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.potential.extrema().0
    }

    pub fn max_value(&self) -> f64 {
        self.potential.extrema().1
    }

    /// Single-wave parameters `(k, a)` when the factor has a closed-form
    /// pendulum portrait.
    pub fn pendulum(&self) -> Option<(i64, f64)> {
        self.potential.single_wave().map(|w| (w.wave, w.amplitude.abs()))
    }

    fn momentum_at(&self, c: f64, x: f64) -> f64 {
        (2.0 * self.mass * (c - self.potential.eval(x))).max(0.0).sqrt()
    }

    /// Components of `{F_i = c}` with a sample point on each.
    pub fn level_components(&self, c: f64) -> Vec<ComponentSample> {
        if self.is_degenerate() {
            let v0 = self.potential.eval(0.0);
            return if c < v0 {
                Vec::new()
            } else if c == v0 {
                vec![ComponentSample {
                    kind: ComponentKind::CriticalCircle,
                    motion: Motion::Equilibrium,
                    x: 0.0,
                    y: 0.0,
                }]
            } else {
                let y = self.momentum_at(c, 0.0);
                [y, -y]
                    .into_iter()
                    .map(|y| ComponentSample {
                        kind: ComponentKind::Circle,
                        motion: Motion::Rotation,
                        x: 0.0,
                        y,
                    })
                    .collect()
            };
        }

        let crit = &self.critical_points;
        let m = crit.len();
        let sign = |v: f64| -> i8 {
            if v < c {
                -1
            } else if v > c {
                1
            } else {
                0
            }
        };
        let s: Vec<i8> = crit.iter().map(|p| sign(p.value)).collect();

        #[derive(Clone, Copy)]
        enum Node {
            Crit(usize),
            Crossing,
        }
        let mut nodes = Vec::with_capacity(2 * m);
        for j in 0..m {
            nodes.push(Node::Crit(j));
            if i16::from(s[j]) * i16::from(s[(j + 1) % m]) < 0 {
                nodes.push(Node::Crossing);
            }
        }
        let is_boundary = |node: &Node| match *node {
            Node::Crit(j) => s[j] == 0,
            Node::Crossing => true,
        };

        let mut out = Vec::new();
        for (j, p) in crit.iter().enumerate() {
            if s[j] == 0 {
                out.push(ComponentSample {
                    kind: ComponentKind::Point,
                    motion: Motion::Equilibrium,
                    x: p.x,
                    y: 0.0,
                });
            }
        }

        let boundary: Vec<usize> = (0..nodes.len()).filter(|&i| is_boundary(&nodes[i])).collect();
        if boundary.is_empty() {
            if s.iter().all(|&v| v < 0) {
                // below the level everywhere: two rotation branches
                let y = self.momentum_at(c, 0.0);
                for y in [y, -y] {
                    out.push(ComponentSample {
                        kind: ComponentKind::Circle,
                        motion: Motion::Rotation,
                        x: 0.0,
                        y,
                    });
                }
            }
            return out;
        }

        let len = nodes.len();
        for (t, &start) in boundary.iter().enumerate() {
            let end = boundary[(t + 1) % boundary.len()];
            // interior nodes of the arc start → end (cyclic); they are all
            // critical points with nonzero sign, and they share one sign
            let mut lowest: Option<usize> = None;
            let mut i = (start + 1) % len;
            while i != end {
                if let Node::Crit(j) = nodes[i] {
                    if lowest.is_none_or(|l| crit[j].value < crit[l].value) {
                        lowest = Some(j);
                    }
                }
                i = (i + 1) % len;
            }
            let Some(well) = lowest else { continue };
            if s[well] > 0 {
                continue;
            }
            let regular = |node: Node| matches!(node, Node::Crossing);
            let x = crit[well].x;
            let y = self.momentum_at(c, x);
            match (regular(nodes[start]), regular(nodes[end])) {
                (true, true) => out.push(ComponentSample {
                    kind: ComponentKind::Circle,
                    motion: Motion::Oscillation,
                    x,
                    y,
                }),
                (true, false) | (false, true) => out.push(ComponentSample {
                    kind: ComponentKind::Line,
                    motion: Motion::Separatrix,
                    x,
                    y,
                }),
                (false, false) => {
                    for y in [y, -y] {
                        out.push(ComponentSample {
                            kind: ComponentKind::Line,
                            motion: Motion::Separatrix,
                            x,
                            y,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Census of `{½ y²/G + V(x) = c}`: component kinds with multiplicities.
/// Below the minimum the level is empty.
pub fn classify_factor_level(factor: &FactorPortrait, c: f64) -> Vec<LayerComponent> {
    census(&factor.level_components(c))
}

fn census(samples: &[ComponentSample]) -> Vec<LayerComponent> {
    let mut counts: BTreeMap<ComponentKind, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(s.kind).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(kind, multiplicity)| LayerComponent { kind, multiplicity })
        .collect()
}

/// Stratum diffeomorphism type `T^a × R^b` and how many strata of that type a
/// layer has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StratumSignature {
    pub torus_rank: usize,
    pub line_rank: usize,
    pub count: usize,
}

impl StratumSignature {
    pub fn dim(&self) -> usize {
        self.torus_rank + self.line_rank
    }
}

/// One-dimensional cell of a factor's momentum axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FactorCell {
    Value { at: f64 },
    Interval { lo: f64, hi: Option<f64> },
}

impl FactorCell {
    fn is_interval(&self) -> bool {
        matches!(self, FactorCell::Interval { .. })
    }

    fn representative(&self) -> f64 {
        match *self {
            FactorCell::Value { at } => at,
            FactorCell::Interval { lo, hi: Some(hi) } => 0.5 * (lo + hi),
            FactorCell::Interval { lo, hi: None } => lo + lo.abs().max(1.0),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            FactorCell::Value { at } => at,
            FactorCell::Interval { lo, hi } => {
                let hi = hi.unwrap_or(lo + 10.0 * lo.abs().max(1.0));
                let t: f64 = rng.gen_range(0.02..0.98);
                lo + t * (hi - lo)
            }
        }
    }
}

fn factor_cells(f: &FactorPortrait) -> Vec<FactorCell> {
    if f.is_degenerate() {
        let v0 = f.potential.eval(0.0);
        return vec![FactorCell::Value { at: v0 }, FactorCell::Interval { lo: v0, hi: None }];
    }
    let cv = f.critical_values();
    let mut cells = Vec::with_capacity(2 * cv.len());
    for (i, &v) in cv.iter().enumerate() {
        cells.push(FactorCell::Value { at: v });
        cells.push(FactorCell::Interval {
            lo: v,
            hi: cv.get(i + 1).copied(),
        });
    }
    cells
}

/// A cell of the momentum-value complex: a product of factor cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumCell {
    pub index: usize,
    pub factors: Vec<FactorCell>,
    pub dim: usize,
    pub representative: Vec<f64>,
    pub census: Vec<Vec<LayerComponent>>,
    pub layer: Vec<StratumSignature>,
}

impl MomentumCell {
    pub fn is_regular(&self, n: usize) -> bool {
        self.dim == n
    }
}

/// Layer description of `{F = c}` from the per-factor census.
pub fn layer_signatures(census: &[Vec<LayerComponent>]) -> Vec<StratumSignature> {
    let mut acc: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut partial: Vec<(usize, usize, usize)> = vec![(0, 0, 1)];
    for factor in census {
        let mut next = Vec::new();
        for &(a, b, count) in &partial {
            for comp in factor {
                let (da, db) = match comp.kind {
                    ComponentKind::Circle | ComponentKind::CriticalCircle => (1, 0),
                    ComponentKind::Line => (0, 1),
                    ComponentKind::Point => (0, 0),
                };
                next.push((a + da, b + db, count * comp.multiplicity));
            }
        }
        partial = next;
    }
    for (a, b, count) in partial {
        *acc.entry((a, b)).or_default() += count;
    }
    let mut out: Vec<StratumSignature> = acc
        .into_iter()
        .map(|((a, b), count)| StratumSignature {
            torus_rank: a,
            line_rank: b,
            count,
        })
        .collect();
    out.sort_by(|p, q| q.dim().cmp(&p.dim()).then(q.torus_rank.cmp(&p.torus_rank)));
    out
}

/// Finite cell complex `C` in momentum space for a separable system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumCellComplex {
    pub n: usize,
    pub critical_values: Vec<Vec<f64>>,
    pub cells: Vec<MomentumCell>,
    #[serde(skip)]
    pub portraits: Vec<FactorPortrait>,
}

impl MomentumCellComplex {
    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n + 1];
        for c in &self.cells {
            counts[c.dim] += 1;
        }
        counts
    }

    pub fn cell(&self, index: usize) -> Option<&MomentumCell> {
        self.cells.get(index)
    }

    /// The cell containing momentum value `c`, if `c` is in the image.
    pub fn locate(&self, c: &[f64]) -> Option<&MomentumCell> {
        self.cells.iter().find(|cell| {
            cell.factors.iter().zip(c).all(|(fc, &v)| match *fc {
                FactorCell::Value { at } => v == at,
                FactorCell::Interval { lo, hi } => v > lo && hi.is_none_or(|h| v < h),
            })
        })
    }

    /// Whether the Liouville tori of a regular cell project to non-trivial
    /// cycles on every factor.
    pub fn torus_triviality(&self, index: usize) -> Result<TorusClass> {
        let cell = self.cells.get(index).ok_or(Error::NotRegularCell(index))?;
        if !cell.is_regular(self.n) {
            return Err(Error::NotRegularCell(index));
        }
        Ok(torus_class(&self.portraits, &cell.representative))
    }
}

/// Triviality of a Liouville torus with its per-factor cycle classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorusClass {
    pub nontrivial: bool,
    /// Class in `π₁(T^n) = ℤ^n` of the projection of each factor cycle
    /// (upper branch for rotations; zero for oscillations).
    pub factor_classes: Vec<Vec<i64>>,
    pub motions: Vec<Motion>,
}

/// Classify the regular torus over momentum value `c`.
pub fn torus_class(portraits: &[FactorPortrait], c: &[f64]) -> TorusClass {
    let n = portraits.len();
    let motions: Vec<Motion> = portraits
        .iter()
        .zip(c)
        .map(|(f, &ci)| {
            if f.is_degenerate() || ci > f.max_value() {
                Motion::Rotation
            } else {
                Motion::Oscillation
            }
        })
        .collect();
    let factor_classes = motions
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut v = vec![0; n];
            if *m == Motion::Rotation {
                v[i] = 1;
            }
            v
        })
        .collect();
    TorusClass {
        nontrivial: motions.iter().all(|m| *m == Motion::Rotation),
        factor_classes,
        motions,
    }
}

/// Enumerate the cells of `C`: products of per-factor critical singletons and
/// open intervals, restricted to the image of the momentum map.
pub fn build_cell_complex(system: &NaturalSystem) -> Result<MomentumCellComplex> {
    let portraits = FactorPortrait::of_system(system)?;
    Ok(complex_from_portraits(portraits))
}

pub fn complex_from_portraits(portraits: Vec<FactorPortrait>) -> MomentumCellComplex {
    let n = portraits.len();
    let per_factor: Vec<Vec<FactorCell>> = portraits.iter().map(factor_cells).collect();
    let total: usize = per_factor.iter().map(Vec::len).product();
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut rest = index;
        let mut factors = Vec::with_capacity(n);
        // first factor varies slowest
        let mut idx = vec![0; n];
        for i in (0..n).rev() {
            idx[i] = rest % per_factor[i].len();
            rest /= per_factor[i].len();
        }
        for i in 0..n {
            factors.push(per_factor[i][idx[i]]);
        }
        let representative: Vec<f64> = factors.iter().map(FactorCell::representative).collect();
        let census: Vec<Vec<LayerComponent>> = portraits
            .iter()
            .zip(&representative)
            .map(|(f, &c)| classify_factor_level(f, c))
            .collect();
        cells.push(MomentumCell {
            index,
            dim: factors.iter().filter(|f| f.is_interval()).count(),
            factors,
            layer: layer_signatures(&census),
            representative,
            census,
        });
    }
    MomentumCellComplex {
        n,
        critical_values: portraits.iter().map(|p| p.critical_values().to_vec()).collect(),
        cells,
        portraits,
    }
}

/// Critical values of `U = Σ V_i` for a separable potential: all sums of
/// factor critical values.
pub fn potential_critical_values(portraits: &[FactorPortrait]) -> Vec<f64> {
    let mut sums = vec![0.0];
    for f in portraits {
        let values: Vec<f64> = if f.is_degenerate() {
            vec![f.potential.eval(0.0)]
        } else {
            f.critical_values().to_vec()
        };
        sums = sums
            .iter()
            .flat_map(|s| values.iter().map(move |v| s + v))
            .collect();
    }
    sums.sort_by(f64::total_cmp);
    sums.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    sums
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCheck {
    pub cell: usize,
    pub torus_rank: usize,
    pub line_rank: usize,
    pub expected: usize,
    pub observed: Vec<usize>,
}

impl RankCheck {
    pub fn passed(&self) -> bool {
        self.observed.iter().all(|&r| r == self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusCheck {
    pub cell: usize,
    pub samples: usize,
    pub stable: bool,
}

/// Result of checking the three non-degeneracy clauses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub cells: usize,
    pub finite: bool,
    pub rank_checks: Vec<RankCheck>,
    pub census_checks: Vec<CensusCheck>,
    pub degenerate_factors: Vec<usize>,
    pub stratum_dims: Vec<usize>,
    pub verdict: Verdict,
}

impl NondegeneracyReport {
    pub fn rank_ok(&self) -> bool {
        self.rank_checks.iter().all(RankCheck::passed)
    }

    pub fn census_ok(&self) -> bool {
        self.census_checks.iter().all(|c| c.stable)
    }
}

pub const NONDEGENERACY_SEED: u64 = 0x5eed_0001;

/// Check finiteness, the stratum-wise rank condition at analytically placed
/// sample points, and constancy of the layer census within each cell.
pub fn verify_nondegeneracy(system: &NaturalSystem, samples_per_stratum: usize) -> Result<NondegeneracyReport> {
    let integrals = separable_integrals(&system.model, &system.potential)?;
    let complex = build_cell_complex(system)?;
    verify_complex(&complex, &integrals, samples_per_stratum, NONDEGENERACY_SEED)
}

pub fn verify_complex(
    complex: &MomentumCellComplex,
    integrals: &[Observable],
    samples_per_stratum: usize,
    seed: u64,
) -> Result<NondegeneracyReport> {
    let samples = samples_per_stratum.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rank_checks = Vec::new();
    let mut census_checks = Vec::new();
    let mut dims = std::collections::BTreeSet::new();

    for cell in &complex.cells {
        let levels: Vec<Vec<f64>> = std::iter::once(cell.representative.clone())
            .chain((1..samples).map(|_| cell.factors.iter().map(|f| f.sample(&mut rng)).collect()))
            .collect();

        let stable = levels.iter().all(|c| {
            let census: Vec<Vec<LayerComponent>> = complex
                .portraits
                .iter()
                .zip(c)
                .map(|(f, &ci)| classify_factor_level(f, ci))
                .collect();
            census == cell.census
        });
        census_checks.push(CensusCheck {
            cell: cell.index,
            samples: levels.len(),
            stable,
        });

        for sig in &cell.layer {
            let mut observed = Vec::with_capacity(samples);
            for (s, c) in levels.iter().enumerate() {
                let p = stratum_point(&complex.portraits, c, sig, s)?;
                observed.push(rank_df(integrals, &p, DEFAULT_RANK_TOL)?);
            }
            dims.insert(sig.dim());
            rank_checks.push(RankCheck {
                cell: cell.index,
                torus_rank: sig.torus_rank,
                line_rank: sig.line_rank,
                expected: sig.dim(),
                observed,
            });
        }
    }

    let degenerate_factors: Vec<usize> = complex
        .portraits
        .iter()
        .filter(|f| f.is_degenerate())
        .map(|f| f.index)
        .collect();
    let mut report = NondegeneracyReport {
        cells: complex.cells.len(),
        finite: true,
        rank_checks,
        census_checks,
        degenerate_factors,
        stratum_dims: dims.into_iter().rev().collect(),
        verdict: Verdict::Pass,
    };
    report.verdict = if !report.degenerate_factors.is_empty() {
        Verdict::Degenerate
    } else if report.rank_ok() && report.census_ok() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// A phase point on a stratum with the given signature in the layer over
/// `c`. The `variant` index cycles through matching component combinations
/// and momentum branches.
pub fn stratum_point(
    portraits: &[FactorPortrait],
    c: &[f64],
    signature: &StratumSignature,
    variant: usize,
) -> Result<PhasePoint> {
    let components: Vec<Vec<ComponentSample>> = portraits
        .iter()
        .zip(c)
        .map(|(f, &ci)| f.level_components(ci))
        .collect();
    let mut matches = Vec::new();
    let mut choice = vec![0usize; components.len()];
    loop {
        let (mut a, mut b) = (0, 0);
        for (comps, &j) in components.iter().zip(&choice) {
            match comps.get(j).map(|s| s.kind) {
                Some(ComponentKind::Circle | ComponentKind::CriticalCircle) => a += 1,
                Some(ComponentKind::Line) => b += 1,
                _ => {}
            }
        }
        if components.iter().all(|c| !c.is_empty())
            && a == signature.torus_rank
            && b == signature.line_rank
        {
            matches.push(choice.clone());
        }
        // odometer over component choices
        let mut i = 0;
        loop {
            if i == choice.len() {
                break;
            }
            choice[i] += 1;
            if choice[i] < components[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            break;
        }
    }
    if matches.is_empty() {
        return Err(Error::SampleFailure(format!(
            "no stratum T^{} x R^{} over c = {c:?}",
            signature.torus_rank, signature.line_rank
        )));
    }
    let pick = &matches[variant % matches.len()];
    let (x, y): (Vec<f64>, Vec<f64>) = components
        .iter()
        .zip(pick)
        .map(|(comps, &j)| (comps[j].x, comps[j].y))
        .unzip();
    PhasePoint::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TorusModel;
    use crate::model::TrigPotential;

    fn kinds(v: &[LayerComponent]) -> Vec<(ComponentKind, usize)> {
        v.iter().map(|c| (c.kind, c.multiplicity)).collect()
    }

    /// Contouring oracle: mark the squares of an `nx × ny` grid on the
    /// cylinder `[0, 2π) × [-Y, Y]` where `F − c` changes sign (or vanishes)
    /// and return the Euler characteristic and component count of the union
    /// of the closed marked squares.
    fn contour_oracle(f: &FactorPortrait, c: f64, nx: usize, ny: usize) -> (i64, usize) {
        use std::collections::HashSet;
        let lo = f.min_value();
        let ymax = (2.0 * f.mass * (c - lo).max(0.0)).sqrt() * 1.05 + 0.1;
        let xs: Vec<f64> = (0..nx).map(|i| std::f64::consts::TAU * i as f64 / nx as f64).collect();
        let ys: Vec<f64> = (0..=ny).map(|j| -ymax + 2.0 * ymax * j as f64 / ny as f64).collect();
        let g = |i: usize, j: usize| {
            let x = xs[i % nx];
            0.5 * ys[j] * ys[j] / f.mass + f.potential.eval(x) - c
        };
        let mut marked = HashSet::new();
        for i in 0..nx {
            for j in 0..ny {
                let v = [g(i, j), g(i + 1, j), g(i, j + 1), g(i + 1, j + 1)];
                let mn = v.iter().copied().fold(f64::INFINITY, f64::min);
                let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if mn <= 0.0 && mx >= 0.0 {
                    marked.insert((i, j));
                }
            }
        }
        let mut verts = HashSet::new();
        let mut edges = HashSet::new();
        for &(i, j) in &marked {
            let i1 = (i + 1) % nx;
            for v in [(i, j), (i1, j), (i, j + 1), (i1, j + 1)] {
                verts.insert(v);
            }
            edges.insert((i, j, 0u8));
            edges.insert((i, j + 1, 0));
            edges.insert((i, j, 1));
            edges.insert((i1, j, 1));
        }
        let chi = verts.len() as i64 - edges.len() as i64 + marked.len() as i64;
        // components of squares touching at a vertex
        let cells: Vec<(usize, usize)> = marked.iter().copied().collect();
        let index: std::collections::HashMap<(usize, usize), usize> =
            cells.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut parent: Vec<usize> = (0..cells.len()).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for (k, &(i, j)) in cells.iter().enumerate() {
            for di in [nx - 1, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let jj = j as i64 + dj;
                    if jj < 0 {
                        continue;
                    }
                    if let Some(&o) = index.get(&((i + di) % nx, jj as usize)) {
                        let (ra, rb) = (find(&mut parent, k), find(&mut parent, o));
                        parent[ra] = rb;
                    }
                }
            }
        }
        let comps = (0..cells.len()).filter(|&k| find(&mut parent, k) == k).count();
        (chi, comps)
    }

    fn census_chi(v: &[LayerComponent]) -> i64 {
        v.iter()
            .map(|c| match c.kind {
                ComponentKind::Point => c.multiplicity as i64,
                ComponentKind::Line => -(c.multiplicity as i64),
                _ => 0,
            })
            .sum()
    }

    #[test]
    fn pendulum_level_census() {
        use ComponentKind::*;
        let f = FactorPortrait::cosine(0, 1, 1.0, 1.0).unwrap();
        assert_eq!(kinds(&classify_factor_level(&f, 0.0)), vec![(Circle, 1)]);
        assert_eq!(kinds(&classify_factor_level(&f, 2.0)), vec![(Circle, 2)]);
        assert_eq!(kinds(&classify_factor_level(&f, 1.0)), vec![(Point, 1), (Line, 2)]);
        assert!(classify_factor_level(&f, -1.5).is_empty());
        let f3 = FactorPortrait::cosine(0, 3, 1.0, 1.0).unwrap();
        assert_eq!(kinds(&classify_factor_level(&f3, -1.0)), vec![(Point, 3)]);
        assert_eq!(kinds(&classify_factor_level(&f3, 1.0)), vec![(Point, 3), (Line, 6)]);
        assert_eq!(kinds(&classify_factor_level(&f3, 0.2)), vec![(Circle, 3)]);
    }

    #[test]
    fn census_matches_contouring_oracle() {
        // 504 is divisible by 2k for k ≤ 4, so wells and saddles sit on grid
        // vertices; ≈ 512² resolution
        for k in 1..=4 {
            let f = FactorPortrait::cosine(0, k, 1.0, 1.0).unwrap();
            for c in [-1.0, -0.5, 0.3, 1.0, 1.7, 4.0] {
                let census = classify_factor_level(&f, c);
                let (chi, comps) = contour_oracle(&f, c, 504, 504);
                assert_eq!(chi, census_chi(&census), "k={k} c={c} census={census:?}");
                if census.iter().all(|x| x.kind != ComponentKind::Line) {
                    let total: usize = census.iter().map(|x| x.multiplicity).sum();
                    assert_eq!(comps, total, "k={k} c={c}");
                } else {
                    // separatrix graph: one connected figure
                    assert_eq!(comps, 1, "k={k} c={c}");
                }
            }
        }
    }

    #[test]
    fn two_term_factor_census() {
        use ComponentKind::*;
        // V = cos x + 0.5 cos 2x: maxima 1.5 (x=0) and -0.5 (x=π), minima
        // -0.75 at cos x = -1/2
        let v = TrigPolynomial1d::new(vec![
            Wave1d { amplitude: 1.0, wave: 1, kind: crate::model::TrigKind::Cos },
            Wave1d { amplitude: 0.5, wave: 2, kind: crate::model::TrigKind::Cos },
        ]);
        let f = FactorPortrait::new(0, 1.0, v).unwrap();
        assert_eq!(f.critical_values().len(), 3);
        assert_eq!(kinds(&classify_factor_level(&f, -0.6)), vec![(Circle, 2)]);
        assert_eq!(kinds(&classify_factor_level(&f, 1.0)), vec![(Circle, 1)]);
        assert_eq!(kinds(&classify_factor_level(&f, 2.0)), vec![(Circle, 2)]);
        let at_saddle = classify_factor_level(&f, f.critical_values()[1]);
        assert_eq!(kinds(&at_saddle), vec![(Point, 1), (Line, 2)]);
        for c in [-0.6, -0.5, 1.0, 1.5, 2.0] {
            let (chi, _) = contour_oracle(&f, c, 504, 504);
            assert_eq!(chi, census_chi(&classify_factor_level(&f, c)), "c={c}");
        }
    }

    #[test]
    fn cell_complex_counts() {
        let sys = NaturalSystem::cosine_family(&[1]).unwrap();
        let c = build_cell_complex(&sys).unwrap();
        assert_eq!(c.count_by_dim(), vec![2, 2]);

        let sys = NaturalSystem::cosine_family(&[1, 1]).unwrap();
        let c = build_cell_complex(&sys).unwrap();
        assert_eq!(c.count_by_dim(), vec![4, 8, 4]);
        let regular = c.locate(&[0.0, 0.5]).unwrap();
        assert_eq!(
            regular.layer,
            vec![StratumSignature { torus_rank: 2, line_rank: 0, count: 1 }]
        );
        for cell in c.cells.iter().filter(|cell| cell.dim == 2) {
            assert_eq!(cell.layer.len(), 1);
            assert_eq!(cell.layer[0].torus_rank, 2);
        }
        assert!(c.locate(&[-1.5, 0.0]).is_none());

        let coupled = NaturalSystem::new(
            TorusModel::identity(2).unwrap(),
            TrigPotential::new(2, vec![crate::model::TrigTerm::cos(1.0, vec![1, 1])]).unwrap(),
        )
        .unwrap();
        assert!(matches!(build_cell_complex(&coupled), Err(Error::NonSeparable { .. })));
    }

    #[test]
    fn nondegeneracy_examples() {
        let sys = NaturalSystem::cosine_family(&[1, 1]).unwrap();
        let r = verify_nondegeneracy(&sys, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert_eq!(r.stratum_dims, vec![2, 1, 0]);

        let sys = NaturalSystem::cosine_family(&[2, 1, 1]).unwrap();
        let r = verify_nondegeneracy(&sys, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.stratum_dims, vec![3, 2, 1, 0]);

        let free = NaturalSystem::new(
            TorusModel::identity(2).unwrap(),
            TrigPotential::cosine_sum(1.0, &[0, 1]).unwrap(),
        )
        .unwrap();
        let r = verify_nondegeneracy(&free, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert_eq!(r.degenerate_factors, vec![0]);
    }

    #[test]
    fn torus_triviality_examples() {
        let sys = NaturalSystem::cosine_family(&[1, 1]).unwrap();
        let c = build_cell_complex(&sys).unwrap();
        let both = c.locate(&[2.0, 3.0]).unwrap().index;
        let t = c.torus_triviality(both).unwrap();
        assert!(t.nontrivial);
        assert_eq!(t.factor_classes, vec![vec![1, 0], vec![0, 1]]);

        let osc = c.locate(&[0.0, 3.0]).unwrap().index;
        let t = c.torus_triviality(osc).unwrap();
        assert!(!t.nontrivial);
        assert_eq!(t.factor_classes[0], vec![0, 0]);

        let mixed = c.locate(&[2.0, 0.0]).unwrap().index;
        assert!(!c.torus_triviality(mixed).unwrap().nontrivial);

        let lower = c.locate(&[1.0, 0.0]).unwrap().index;
        assert!(matches!(c.torus_triviality(lower), Err(Error::NotRegularCell(_))));
    }

    #[test]
    fn potential_critical_values_are_factor_sums() {
        let sys = NaturalSystem::cosine_family(&[1, 3]).unwrap();
        let p = FactorPortrait::of_system(&sys).unwrap();
        assert_eq!(potential_critical_values(&p), vec![-2.0, 0.0, 2.0]);
        let sys = NaturalSystem::cosine_family(&[1, 1, 1]).unwrap();
        let p = FactorPortrait::of_system(&sys).unwrap();
        assert_eq!(potential_critical_values(&p), vec![-3.0, -1.0, 1.0, 3.0]);
    }
}
