//! Configuration torus, constant metric, trigonometric potentials and phase
//! points.
//!
//! Coordinates are 2π-periodic angles. Every operation reduces angles to
//! `[0, 2π)` before doing anything else, so shifting a coordinate by a
//! representable multiple of 2π never changes an output bit.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trig1d::{TrigPolynomial1d, Wave1d};

pub const MAX_DIMENSION: usize = 6;

/// Reduce an angle to `[0, 2π)` by exact remainder.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid may round a tiny negative input up to exactly 2π.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Flat torus `T^n` with a constant symmetric positive-definite metric.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusModel {
    n: usize,
    metric: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl TorusModel {
    pub fn new(metric: DMatrix<f64>) -> Result<Self> {
        let n = metric.nrows();
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(n));
        }
        if metric.ncols() != n {
            return Err(Error::InvalidMetric(format!(
                "metric must be square, got {}x{}",
                n,
                metric.ncols()
            )));
        }
        if metric.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMetric("non-finite entry".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if metric[(i, j)] != metric[(j, i)] {
                    return Err(Error::InvalidMetric(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("not positive definite".into()))?;
        let inverse = if is_diagonal(&metric) {
            // keep g^ii = 1 / g_ii bit-exact for diagonal metrics
            DMatrix::from_diagonal(&metric.diagonal().map(|g| 1.0 / g))
        } else {
            let inv = chol.inverse();
            (&inv + inv.transpose()) * 0.5
        };
        Ok(Self { n, metric, inverse })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn is_diagonal(&self) -> bool {
        is_diagonal(&self.metric)
    }

    /// `y ↦ G⁻¹ y`, the velocity belonging to a covector.
    pub fn raise(&self, y: &[f64]) -> Vec<f64> {
        mat_vec(&self.inverse, y)
    }

    /// `v ↦ G v`.
    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.metric, v)
    }

    /// `vᵀ G v`.
    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        quad_form(&self.metric, v)
    }

    /// `yᵀ G⁻¹ y`.
    pub fn co_norm_sq(&self, y: &[f64]) -> f64 {
        quad_form(&self.inverse, y)
    }

    /// `½ yᵀ G⁻¹ y + U(x)`; with an empty potential this is the geodesic
    /// Hamiltonian.
    pub fn hamiltonian(&self, potential: &TrigPotential, p: &PhasePoint) -> Result<f64> {
        check_dim(self.n, p.dim())?;
        check_dim(self.n, potential.dim())?;
        Ok(0.5 * self.co_norm_sq(&p.y) + potential.eval(&p.x)?)
    }

    /// Legendre transform `y_i = g_ij ẋ^j`.
    pub fn legendre(&self, x: &[f64], xdot: &[f64]) -> Result<PhasePoint> {
        check_dim(self.n, x.len())?;
        check_dim(self.n, xdot.len())?;
        PhasePoint::new(x.to_vec(), self.lower(xdot))
    }

    /// Inverse Legendre transform, `ẋ = G⁻¹ y`.
    pub fn velocity(&self, p: &PhasePoint) -> Result<Vec<f64>> {
        check_dim(self.n, p.dim())?;
        Ok(self.raise(&p.y))
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

fn quad_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += v[i] * m[(i, j)] * v[j];
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Cos,
    Sin,
}

impl TrigKind {
    pub fn apply(self, phase: f64) -> f64 {
        match self {
            TrigKind::Cos => phase.cos(),
            TrigKind::Sin => phase.sin(),
        }
    }
}

/// Canonicalize a wave vector so that its first nonzero entry is positive.
/// Returns the sign picked up by the trigonometric factor (`cos` is even,
/// `sin` is odd).
pub fn canonical_wave(wave: &mut [i64], kind: TrigKind) -> f64 {
    match wave.iter().find(|&&k| k != 0) {
        Some(&k) if k < 0 => {
            wave.iter_mut().for_each(|k| *k = -*k);
            match kind {
                TrigKind::Cos => 1.0,
                TrigKind::Sin => -1.0,
            }
        }
        _ => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub wave: Vec<i64>,
    pub kind: TrigKind,
}

impl TrigTerm {
    pub fn cos(amplitude: f64, wave: Vec<i64>) -> Self {
        Self {
            amplitude,
            wave,
            kind: TrigKind::Cos,
        }
    }

    pub fn sin(amplitude: f64, wave: Vec<i64>) -> Self {
        Self {
            amplitude,
            wave,
            kind: TrigKind::Sin,
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.wave
            .cmp(&other.wave)
            .then(self.kind.cmp(&other.kind))
    }

    /// Index of the only coordinate this term depends on, `None` for constant
    /// terms, `Err` when it couples coordinates.
    pub fn support(&self) -> Result<Option<usize>> {
        let mut nz = self.wave.iter().enumerate().filter(|(_, &k)| k != 0);
        match (nz.next(), nz.next()) {
            (None, _) => Ok(None),
            (Some((i, _)), None) => Ok(Some(i)),
            _ => Err(Error::NonSeparable {
                wave: self.wave.clone(),
            }),
        }
    }
}

/// Finite sum of `amplitude · trig(wave · x)` terms on the 2π-periodic torus.
///
/// Terms are kept canonical: wave vectors have a positive first nonzero
/// entry, no two terms share a `(wave, kind)` key, and terms are sorted by
/// that key. Evaluation accumulates left to right in that order, so it does
/// not depend on the order the terms were supplied in.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPotential {
    n: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPotential {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn new(n: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        let mut canon = Vec::with_capacity(terms.len());
        for mut t in terms {
            check_dim(n, t.wave.len())?;
            if !t.amplitude.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "non-finite amplitude for wave {:?}",
                    t.wave
                )));
            }
            let sign = canonical_wave(&mut t.wave, t.kind);
            t.amplitude *= sign;
            let is_zero_wave = t.wave.iter().all(|&k| k == 0);
            if is_zero_wave && t.kind == TrigKind::Sin {
                // sin(0) vanishes identically
                continue;
            }
            canon.push(t);
        }
        // order duplicates by amplitude too, so merged sums are order-free
        canon.sort_by(|a, b| a.key_cmp(b).then(a.amplitude.total_cmp(&b.amplitude)));
        let mut merged: Vec<TrigTerm> = Vec::with_capacity(canon.len());
        for t in canon {
            match merged.last_mut() {
                Some(last) if last.key_cmp(&t) == Ordering::Equal => last.amplitude += t.amplitude,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.amplitude != 0.0);
        Ok(Self { n, terms: merged })
    }

    /// `Σ_i amplitude · cos(k_i x_i)`, the separable family used for domains of
    /// possible motions.
    pub fn cosine_sum(amplitude: f64, waves: &[i64]) -> Result<Self> {
        let n = waves.len();
        let terms = waves
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let mut wave = vec![0; n];
                wave[i] = k;
                TrigTerm::cos(amplitude, wave)
            })
            .collect();
        Self::new(n, terms)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn phase(wave: &[i64], x: &[f64]) -> f64 {
        wave.iter()
            .zip(x)
            .map(|(&k, &xi)| k as f64 * reduce_angle(xi))
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.n, x.len())?;
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.amplitude * t.kind.apply(Self::phase(&t.wave, x));
        }
        Ok(acc)
    }

    /// `∇U(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut g = vec![0.0; self.n];
        self.gradient_into(x, &mut g);
        Ok(g)
    }

    /// `∇U(x)` written into `g`; both slices must have length `n`.
    pub fn gradient_into(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|gi| *gi = 0.0);
        for t in &self.terms {
            let phase = Self::phase(&t.wave, x);
            let d = match t.kind {
                TrigKind::Cos => -t.amplitude * phase.sin(),
                TrigKind::Sin => t.amplitude * phase.cos(),
            };
            for (gi, &k) in g.iter_mut().zip(&t.wave) {
                *gi += d * k as f64;
            }
        }
    }

    /// Multiply every wave vector componentwise by `m`.
    pub fn scale_waves(&self, m: &[i64]) -> Result<Self> {
        check_dim(self.n, m.len())?;
        if m.iter().any(|&mi| mi < 1) {
            return Err(Error::InvalidArgument(format!(
                "wave scaling factors must be positive, got {m:?}"
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| TrigTerm {
                amplitude: t.amplitude,
                wave: t.wave.iter().zip(m).map(|(k, mi)| k * mi).collect(),
                kind: t.kind,
            })
            .collect();
        Self::new(self.n, terms)
    }

    /// Split into per-coordinate 1D potentials plus a constant, or fail with
    /// `NonSeparable` when a term couples coordinates.
    pub fn separate(&self) -> Result<(Vec<TrigPolynomial1d>, f64)> {
        let mut factors = vec![TrigPolynomial1d::default(); self.n];
        let mut constant = 0.0;
        for t in &self.terms {
            match t.support()? {
                None => constant += t.amplitude,
                Some(i) => factors[i].terms.push(Wave1d {
                    amplitude: t.amplitude,
                    wave: t.wave[i],
                    kind: t.kind,
                }),
            }
        }
        Ok((factors, constant))
    }

    pub fn is_separable(&self) -> bool {
        self.terms.iter().all(|t| t.support().is_ok())
    }

    /// `(min U, max U)` over the torus.
    ///
    /// Exact up to root isolation for separable potentials. Otherwise a grid
    /// search refined by projected gradient steps; the result is then a
    /// best-found estimate.
    pub fn extrema(&self) -> (f64, f64) {
        if self.terms.is_empty() {
            return (0.0, 0.0);
        }
        if let Ok((factors, constant)) = self.separate() {
            return factors.iter().fold((constant, constant), |(lo, hi), f| {
                let (a, b) = f.extrema();
                (lo + a, hi + b)
            });
        }
        self.search_extrema()
    }

    fn search_extrema(&self) -> (f64, f64) {
        let kmax = self
            .terms
            .iter()
            .flat_map(|t| t.wave.iter().map(|k| k.unsigned_abs()))
            .max()
            .unwrap_or(1)
            .max(1) as usize;
        let budget: usize = 1 << 20;
        let per_axis = ((budget as f64).powf(1.0 / self.n as f64) as usize)
            .max(8)
            .min(32 * kmax);
        let total = per_axis.pow(self.n as u32);
        let point = |mut idx: usize| -> Vec<f64> {
            (0..self.n)
                .map(|_| {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    TAU * i as f64 / per_axis as f64
                })
                .collect()
        };
        let (mut lo_x, mut hi_x) = (point(0), point(0));
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for idx in 0..total {
            let x = point(idx);
            let u = self.eval(&x).expect("dimension checked");
            if u < lo {
                lo = u;
                lo_x = x.clone();
            }
            if u > hi {
                hi = u;
                hi_x = x;
            }
        }
        (self.polish(lo_x, -1.0), self.polish(hi_x, 1.0))
    }

    fn polish(&self, mut x: Vec<f64>, sign: f64) -> f64 {
        let mut best = sign * self.eval(&x).expect("dimension checked");
        let mut step = 0.1;
        while step > 1e-14 {
            let g = self.gradient(&x).expect("dimension checked");
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + sign * step * gi).collect();
            let v = sign * self.eval(&trial).expect("dimension checked");
            if v > best {
                best = v;
                x = trial;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        sign * best
    }
}

/// Point `(x, y)` of the cotangent bundle `T*T^n`; `x` is always reduced to
/// `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        Ok(Self {
            x: x.into_iter().map(reduce_angle).collect(),
            y,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Total energy value `E`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyLevel(f64);

impl EnergyLevel {
    pub fn new(e: f64) -> Result<Self> {
        if e.is_finite() {
            Ok(Self(e))
        } else {
            Err(Error::InvalidArgument(format!("energy must be finite, got {e}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Conformal factor `E − U(x)` of the Jacobi metric. Negative outside the
/// domain of possible motions.
pub fn jacobi_factor(potential: &TrigPotential, energy: EnergyLevel, x: &[f64]) -> Result<f64> {
    Ok(energy.value() - potential.eval(x)?)
}

/// `U(x) ≤ E`.
pub fn in_domain(potential: &TrigPotential, energy: EnergyLevel, x: &[f64]) -> Result<bool> {
    Ok(potential.eval(x)? <= energy.value())
}

// ---------------------------------------------------------------------------
// JSON system specification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Diag(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

/// On-disk description of a natural system on `T^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dimension: usize,
    pub metric: MetricSpec,
    #[serde(default)]
    pub potential: Vec<TrigTerm>,
}

/// A validated system: metric plus potential of matching dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSystem {
    pub model: TorusModel,
    pub potential: TrigPotential,
}

impl NaturalSystem {
    pub fn new(model: TorusModel, potential: TrigPotential) -> Result<Self> {
        check_dim(model.dim(), potential.dim())?;
        Ok(Self { model, potential })
    }

    /// Identity metric and `Σ cos(k_i x_i)`.
    pub fn cosine_family(waves: &[i64]) -> Result<Self> {
        Self::new(
            TorusModel::identity(waves.len())?,
            TrigPotential::cosine_sum(1.0, waves)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        let n = spec.dimension;
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(n));
        }
        let metric = match &spec.metric {
            MetricSpec::Diag(d) => {
                check_dim(n, d.len())?;
                DMatrix::from_diagonal(&DVector::from_column_slice(d))
            }
            MetricSpec::Full(rows) => {
                check_dim(n, rows.len())?;
                for row in rows {
                    check_dim(n, row.len())?;
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
        };
        let model = TorusModel::new(metric)?;
        let potential = TrigPotential::new(n, spec.potential.clone())?;
        Self::new(model, potential)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SystemSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn to_spec(&self) -> SystemSpec {
        let g = self.model.metric();
        let metric = if self.model.is_diagonal() {
            MetricSpec::Diag(g.diagonal().iter().copied().collect())
        } else {
            MetricSpec::Full(
                (0..g.nrows())
                    .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
                    .collect(),
            )
        };
        SystemSpec {
            dimension: self.dim(),
            metric,
            potential: self.potential.terms().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn two_cos() -> TrigPotential {
        TrigPotential::cosine_sum(1.0, &[1, 1]).unwrap()
    }

    #[test]
    fn potential_examples() {
        let u = two_cos();
        assert_eq!(u.eval(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(u.eval(&[PI, PI]).unwrap(), -2.0);
        for n in 1..=6 {
            let u = TrigPotential::cosine_sum(1.0, &vec![1; n]).unwrap();
            let mut x = vec![0.0; n];
            x[0] = PI;
            assert_eq!(u.eval(&x).unwrap(), n as f64 - 2.0);
        }
        assert!(matches!(
            u.eval(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn hamiltonian_examples() {
        let id = TorusModel::identity(2).unwrap();
        let zero = TrigPotential::zero(2);
        let p = PhasePoint::new(vec![0.3, 1.7], vec![1.0, 0.0]).unwrap();
        assert_eq!(id.hamiltonian(&zero, &p).unwrap(), 0.5);

        let g = TorusModel::diagonal(&[4.0, 1.0]).unwrap();
        let p = PhasePoint::new(vec![0.0, 0.0], vec![2.0, 0.0]).unwrap();
        assert_eq!(g.hamiltonian(&zero, &p).unwrap(), 0.5);

        let p = PhasePoint::new(vec![PI, PI], vec![0.0, 0.0]).unwrap();
        assert_eq!(id.hamiltonian(&two_cos(), &p).unwrap(), -2.0);
    }

    #[test]
    fn legendre_examples() {
        let id = TorusModel::identity(2).unwrap();
        assert_eq!(id.legendre(&[0.0, 0.0], &[1.0, 2.0]).unwrap().y(), &[1.0, 2.0]);
        let g = TorusModel::diagonal(&[2.0, 3.0]).unwrap();
        assert_eq!(g.legendre(&[0.0, 0.0], &[1.0, 1.0]).unwrap().y(), &[2.0, 3.0]);
    }

    #[test]
    fn jacobi_and_domain_examples() {
        let e = |v| EnergyLevel::new(v).unwrap();
        assert_eq!(jacobi_factor(&TrigPotential::zero(2), e(1.0), &[0.4, 0.1]).unwrap(), 1.0);
        assert_eq!(jacobi_factor(&two_cos(), e(3.0), &[0.0, 0.0]).unwrap(), 1.0);
        let u3 = TrigPotential::cosine_sum(1.0, &[1, 1, 1]).unwrap();
        assert_eq!(jacobi_factor(&u3, e(0.0), &[PI, 0.0, 0.0]).unwrap(), -1.0);

        assert!(in_domain(&two_cos(), e(-1.0), &[PI, PI]).unwrap());
        assert!(!in_domain(&two_cos(), e(-1.0), &[0.0, 0.0]).unwrap());
    }

    #[test]
    fn coordinate_axes_lie_outside_domain_below_face_value() {
        // On an axis every coordinate but one is 0, so U ≥ n − 2 > n − 3.
        for n in 2..=6 {
            let u = TrigPotential::cosine_sum(1.0, &vec![1; n]).unwrap();
            let e = EnergyLevel::new(n as f64 - 3.0).unwrap();
            for axis in 0..n {
                for s in 0..1000 {
                    let mut x = vec![0.0; n];
                    x[axis] = -PI + TAU * s as f64 / 1000.0;
                    assert!(!in_domain(&u, e, &x).unwrap());
                }
            }
        }
    }

    #[test]
    fn canonicalization_merges_and_normalizes() {
        let u = TrigPotential::new(
            2,
            vec![
                TrigTerm::cos(1.0, vec![-1, 2]),
                TrigTerm::sin(2.0, vec![0, -3]),
                TrigTerm::cos(0.5, vec![1, -2]),
                TrigTerm::sin(1.0, vec![0, 0]),
                TrigTerm::cos(0.5, vec![1, -2]),
            ],
        )
        .unwrap();
        assert_eq!(
            u.terms(),
            &[TrigTerm::sin(-2.0, vec![0, 3]), TrigTerm::cos(2.0, vec![1, -2])]
        );
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(TorusModel::identity(7), Err(Error::UnsupportedDimension(7))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        assert!(matches!(TorusModel::new(asym), Err(Error::InvalidMetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(TorusModel::new(indef), Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn spec_json_roundtrip_and_rejection() {
        let text = r#"{"dimension": 2, "metric": {"diag": [1.0, 2.0]},
            "potential": [{"amplitude": 1.0, "wave": [1, 0], "kind": "cos"},
                          {"amplitude": 0.5, "wave": [0, 2], "kind": "sin"}]}"#;
        let sys = NaturalSystem::from_json(text).unwrap();
        assert_eq!(sys.dim(), 2);
        let again = NaturalSystem::from_spec(&sys.to_spec()).unwrap();
        assert_eq!(sys, again);

        let unknown = r#"{"dimension": 1, "metric": {"diag": [1.0]}, "extra": 1}"#;
        assert!(matches!(NaturalSystem::from_json(unknown), Err(Error::Json(_))));
        let bad_dim = r#"{"dimension": 2, "metric": {"diag": [1.0]}}"#;
        assert!(matches!(
            NaturalSystem::from_json(bad_dim),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad_wave = r#"{"dimension": 1, "metric": {"full": [[1.0]]},
            "potential": [{"amplitude": 1.0, "wave": [1, 0], "kind": "cos"}]}"#;
        assert!(matches!(
            NaturalSystem::from_json(bad_wave),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn extrema_of_separable_and_coupled_potentials() {
        assert_eq!(two_cos().extrema(), (-2.0, 2.0));
        let coupled = TrigPotential::new(2, vec![TrigTerm::cos(1.0, vec![1, 1])]).unwrap();
        let (lo, hi) = coupled.extrema();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    fn dyadic_angle() -> impl Strategy<Value = f64> {
        // multiples of 2^-30 in this range keep x + 2π exactly representable
        (-(1i64 << 31)..(3i64 << 29)).prop_map(|k| k as f64 / (1u64 << 30) as f64)
    }

    fn random_potential(n: usize) -> impl Strategy<Value = Vec<TrigTerm>> {
        prop::collection::vec(
            (
                -2.0f64..2.0,
                prop::collection::vec(-3i64..=3, n),
                prop::bool::ANY,
            )
                .prop_map(|(a, wave, s)| TrigTerm {
                    amplitude: a,
                    wave,
                    kind: if s { TrigKind::Sin } else { TrigKind::Cos },
                }),
            0..6,
        )
    }

    proptest! {
        #[test]
        fn evaluation_is_exactly_periodic(
            terms in random_potential(3),
            x in prop::collection::vec(dyadic_angle(), 3),
            axis in 0usize..3,
        ) {
            let u = TrigPotential::new(3, terms).unwrap();
            let mut shifted = x.clone();
            shifted[axis] += TAU;
            prop_assert_eq!(u.eval(&x).unwrap().to_bits(), u.eval(&shifted).unwrap().to_bits());
            let model = TorusModel::diagonal(&[1.0, 2.0, 0.5]).unwrap();
            let y = vec![0.3, -1.0, 2.0];
            let h0 = model.hamiltonian(&u, &PhasePoint::new(x.clone(), y.clone()).unwrap()).unwrap();
            let h1 = model.hamiltonian(&u, &PhasePoint::new(shifted, y).unwrap()).unwrap();
            prop_assert_eq!(h0.to_bits(), h1.to_bits());
        }

        #[test]
        fn evaluation_ignores_term_order(
            terms in random_potential(2),
            x in prop::collection::vec(-10.0f64..10.0, 2),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = terms.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = TrigPotential::new(2, terms).unwrap();
            let b = TrigPotential::new(2, shuffled).unwrap();
            prop_assert_eq!(a.eval(&x).unwrap().to_bits(), b.eval(&x).unwrap().to_bits());
        }

        #[test]
        fn hamiltonian_dominates_potential(
            terms in random_potential(2),
            x in prop::collection::vec(-10.0f64..10.0, 2),
            y in prop::collection::vec(-5.0f64..5.0, 2),
        ) {
            let u = TrigPotential::new(2, terms).unwrap();
            let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
            let model = TorusModel::new(g).unwrap();
            let p = PhasePoint::new(x.clone(), y.clone()).unwrap();
            let h = model.hamiltonian(&u, &p).unwrap();
            let ux = u.eval(&x).unwrap();
            if y.iter().all(|&v| v == 0.0) {
                prop_assert_eq!(h, ux);
            } else {
                prop_assert!(h > ux);
            }
        }

        #[test]
        fn legendre_round_trip(xdot in prop::collection::vec(-10.0f64..10.0, 3)) {
            let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
            let model = TorusModel::new(g).unwrap();
            let p = model.legendre(&[0.0; 3], &xdot).unwrap();
            let back = model.velocity(&p).unwrap();
            for (a, b) in back.iter().zip(&xdot) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
