//! Shortest closed geodesics in a free homotopy class, for the flat metric
//! and for the Jacobi metric `(E − U)·G` above the potential maximum.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TorusModel, TrigPotential};

pub const DEFAULT_MARGIN: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_SEED: u64 = 0x6e0d_e51c;
/// Weight of the spacing regularizer relative to `√(E − min U)`. It stays on
/// for the whole descent: the bare midpoint sum rewards a few long segments
/// whose midpoints sit near the top of the potential, and a loop collapsed
/// onto one such segment only costs more than an honest one when
/// `weight · (N − 1) ≥ 1`.
pub const SPACING_WEIGHT: f64 = 1.0;
/// A loop counts as converged when `max|∇| < CONVERGENCE_TOL · length / N`.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Element of `π₁(T^n) = Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomotopyClass {
    m: Vec<i64>,
}

impl HomotopyClass {
    pub fn new(m: Vec<i64>) -> Result<Self> {
        if m.is_empty() || m.len() > crate::model::MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(m.len()));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.m
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|&v| v == 0)
    }

    pub fn is_primitive(&self) -> bool {
        self.m.iter().fold(0, |g, &v| num_integer::gcd(g, v)) == 1
    }

    /// `k·α`.
    pub fn scaled(&self, k: i64) -> Self {
        Self {
            m: self.m.iter().map(|v| v * k).collect(),
        }
    }

    /// `2π·m` as a real displacement.
    pub fn displacement(&self) -> Vec<f64> {
        self.m.iter().map(|&v| TAU * v as f64).collect()
    }
}

impl std::str::FromStr for HomotopyClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let m = s
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|e| format!("bad class entry {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(m).map_err(|e| e.to_string())
    }
}

/// `2π·√(mᵀ G m)`: straight lines are shortest on a flat torus.
pub fn flat_minimal_length(model: &TorusModel, class: &HomotopyClass) -> Result<f64> {
    if class.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: class.dim(),
        });
    }
    if class.is_zero() {
        return Err(Error::ZeroClass);
    }
    Ok(model.norm_sq(&class.displacement()).sqrt())
}

/// Closed polygon `q_0 … q_{N−1}` in the lift, closed by `q_N = q_0 + 2π·m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteLoop {
    n: usize,
    points: Vec<f64>,
    class: HomotopyClass,
}

impl DiscreteLoop {
    pub fn new(points: Vec<f64>, class: HomotopyClass) -> Result<Self> {
        let n = class.dim();
        if points.is_empty() || !points.len().is_multiple_of(n) || points.len() / n < 3 {
            return Err(Error::InvalidArgument(format!(
                "a loop needs at least 3 points of dimension {n}"
            )));
        }
        Ok(Self { n, points, class })
    }

    /// Uniformly sampled straight line from `base`.
    pub fn straight(base: &[f64], class: &HomotopyClass, segments: usize) -> Result<Self> {
        let shift = class.displacement();
        let points = (0..segments)
            .flat_map(|j| {
                let s = j as f64 / segments as f64;
                base.iter().zip(&shift).map(move |(b, d)| b + s * d).collect::<Vec<_>>()
            })
            .collect();
        Self::new(points, class.clone())
    }

    pub fn segments(&self) -> usize {
        self.points.len() / self.n
    }

    pub fn class(&self) -> &HomotopyClass {
        &self.class
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Point `j`, with `j = N` giving the translated start.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let nseg = self.segments();
        let base = &self.points[(j % nseg) * self.n..(j % nseg + 1) * self.n];
        if j == nseg {
            base.iter().zip(self.class.displacement()).map(|(b, d)| b + d).collect()
        } else {
            base.to_vec()
        }
    }

    /// `q_N − q_0`, equal to `2π·m` by construction.
    pub fn closing_displacement(&self) -> Vec<f64> {
        let end = self.point(self.segments());
        end.iter().zip(self.point(0)).map(|(a, b)| a - b).collect()
    }
}

/// Discrete Jacobi length functional with its gradient.
pub struct JacobiFunctional<'a> {
    model: &'a TorusModel,
    potential: &'a TrigPotential,
    energy: f64,
    class: HomotopyClass,
    spacing_weight: f64,
}

impl<'a> JacobiFunctional<'a> {
    pub fn new(
        model: &'a TorusModel,
        potential: &'a TrigPotential,
        energy: f64,
        class: HomotopyClass,
    ) -> Self {
        Self {
            model,
            potential,
            energy,
            class,
            spacing_weight: 0.0,
        }
    }

    pub fn with_spacing_weight(mut self, w: f64) -> Self {
        self.spacing_weight = w;
        self
    }

    /// `Σ_j √(E − U(q_{j+½})) · |q_{j+1} − q_j|_G` (midpoint rule).
    pub fn length(&self, points: &[f64]) -> f64 {
        self.evaluate(points, None).0
    }

    /// Length plus regularizer.
    pub fn cost(&self, points: &[f64]) -> f64 {
        let (l, r) = self.evaluate(points, None);
        l + r
    }

    /// Length plus regularizer, and their gradient with respect to the
    /// points.
    pub fn value_and_gradient(&self, points: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; points.len()];
        let (len, reg) = self.evaluate(points, Some(&mut g));
        (len + reg, g)
    }

    fn evaluate(&self, points: &[f64], mut grad: Option<&mut Vec<f64>>) -> (f64, f64) {
        let n = self.class.dim();
        let nseg = points.len() / n;
        let shift = self.class.displacement();
        let metric = self.model.metric();
        let mut delta = vec![0.0; n];
        let mut mid = vec![0.0; n];
        let mut gdelta = vec![0.0; n];
        let mut grad_u = vec![0.0; n];
        let mut seg_len = vec![0.0; nseg];
        let mut length = 0.0;
        for j in 0..nseg {
            let a = &points[j * n..(j + 1) * n];
            let k = (j + 1) % nseg;
            let wrap = if j + 1 == nseg { 1.0 } else { 0.0 };
            for i in 0..n {
                let b = points[k * n + i] + wrap * shift[i];
                delta[i] = b - a[i];
                mid[i] = 0.5 * (a[i] + b);
            }
            for (i, gd) in gdelta.iter_mut().enumerate() {
                *gd = (0..n).map(|l| metric[(i, l)] * delta[l]).sum();
            }
            let s = delta.iter().zip(&gdelta).map(|(d, g)| d * g).sum::<f64>().sqrt();
            let phi = (self.energy - self.potential.eval(&mid).expect("dimension checked"))
                .max(0.0)
                .sqrt();
            seg_len[j] = s;
            length += phi * s;
            if let Some(g) = grad.as_deref_mut() {
                self.potential.gradient_into(&mid, &mut grad_u);
                for i in 0..n {
                    // ∂φ/∂mid = −∇U / (2φ); each endpoint moves mid by ½
                    let dphi = if phi > 0.0 { -grad_u[i] / (2.0 * phi) } else { 0.0 };
                    let tangential = if s > 0.0 { phi * gdelta[i] / s } else { 0.0 };
                    g[j * n + i] += 0.5 * s * dphi - tangential;
                    g[k * n + i] += 0.5 * s * dphi + tangential;
                }
            }
        }
        let w = self.spacing_weight;
        if w == 0.0 {
            return (length, 0.0);
        }
        // w·(N·Σs² − (Σs)²)/Σs vanishes iff the flat segment lengths are equal
        let s1: f64 = seg_len.iter().sum();
        let s2: f64 = seg_len.iter().map(|s| s * s).sum();
        let nf = nseg as f64;
        let reg = w * (nf * s2 / s1 - s1);
        if let Some(g) = grad {
            for j in 0..nseg {
                let s = seg_len[j];
                if s == 0.0 {
                    continue;
                }
                let dr = w * (2.0 * nf * s / s1 - nf * s2 / (s1 * s1) - 1.0);
                let a = &points[j * n..(j + 1) * n];
                let k = (j + 1) % nseg;
                let wrap = if j + 1 == nseg { 1.0 } else { 0.0 };
                for i in 0..n {
                    delta[i] = points[k * n + i] + wrap * shift[i] - a[i];
                }
                for i in 0..n {
                    let gd: f64 = (0..n).map(|l| metric[(i, l)] * delta[l]).sum();
                    g[j * n + i] -= dr * gd / s;
                    g[k * n + i] += dr * gd / s;
                }
            }
        }
        (length, reg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub segments: usize,
    pub restarts: usize,
    pub seed: u64,
    pub margin: f64,
    pub max_iters: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            segments: 256,
            restarts: DEFAULT_RESTARTS,
            seed: DEFAULT_SEED,
            margin: DEFAULT_MARGIN,
            max_iters: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicSearchResult {
    #[serde(rename = "loop")]
    pub path: DiscreteLoop,
    pub length: f64,
    pub converged: bool,
    /// Max-norm of the length gradient at the returned loop.
    pub gradient_norm: f64,
    pub restarts: usize,
    pub best_restart: usize,
    pub seed: u64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Inverse of the cyclic second difference (plus a small shift) applied to
/// each coordinate of the loop; close to the inverse Hessian of the length
/// up to a scalar.
struct LaplacePreconditioner {
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    eigen: Vec<f64>,
}

impl LaplacePreconditioner {
    fn new(segments: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        let nf = segments as f64;
        let eigen = (0..segments)
            .map(|k| 2.0 - 2.0 * (TAU * k as f64 / nf).cos() + 1.0 / (nf * nf))
            .collect();
        Self {
            dim,
            forward: planner.plan_fft_forward(segments),
            inverse: planner.plan_fft_inverse(segments),
            eigen,
        }
    }

    fn apply(&self, v: &mut [f64]) {
        let segments = self.eigen.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); segments];
        for i in 0..self.dim {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(v[j * self.dim + i], 0.0);
            }
            self.forward.process(&mut buf);
            for (b, e) in buf.iter_mut().zip(&self.eigen) {
                *b /= e * segments as f64;
            }
            self.inverse.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                v[j * self.dim + i] = b.re;
            }
        }
    }
}

/// Preconditioned L-BFGS with a backtracking line search. Steps are accepted
/// on the Armijo condition, or on the approximate Wolfe condition once value
/// differences reach roundoff. Stops when `max|∇f| < rel_tol · f / N`, the
/// line search fails, or after `max_iters` iterations.
fn minimize(f: &JacobiFunctional<'_>, mut x: Vec<f64>, max_iters: u64, rel_tol: f64) -> Vec<f64> {
    const MEMORY: usize = 10;
    let dim = f.class.dim();
    let segments = x.len() / dim;
    let precond = LaplacePreconditioner::new(segments, dim);
    let (mut fx, mut g) = f.value_and_gradient(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut alphas = Vec::with_capacity(MEMORY);
    for _ in 0..max_iters {
        if max_abs(&g) < rel_tol * fx / segments as f64 {
            break;
        }
        let mut d = g.clone();
        alphas.clear();
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        precond.apply(&mut d);
        let gamma = match history.back() {
            Some((s, y, _)) => {
                let mut py = y.clone();
                precond.apply(&mut py);
                dot(s, y) / dot(y, &py)
            }
            // first step moves no point by more than 0.1 rad
            None => 0.1 / max_abs(&d),
        };
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        d.iter_mut().for_each(|di| *di = -*di);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d.copy_from_slice(&g);
            precond.apply(&mut d);
            let scale = -0.1 / max_abs(&d);
            d.iter_mut().for_each(|di| *di *= scale);
            slope = dot(&g, &d);
        }
        let roundoff = 1e-12 * fx.abs();
        let mut t = 1.0;
        let (trial, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (f_new, g_new) = f.value_and_gradient(&trial);
            let armijo = f_new <= fx + 1e-4 * t * slope;
            let approx_wolfe = f_new <= fx + roundoff && {
                let slope_new = dot(&g_new, &d);
                slope_new >= 0.9 * slope && slope_new <= -0.9 * slope
            };
            if armijo || approx_wolfe {
                break (trial, f_new, g_new);
            }
            t *= 0.5;
            if t < 1e-12 {
                return x;
            }
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = trial;
        fx = f_new;
        g = g_new;
    }
    x
}

fn perturbed_start(
    class: &HomotopyClass,
    segments: usize,
    restart: usize,
    seed: u64,
) -> Result<DiscreteLoop> {
    let n = class.dim();
    if restart == 0 {
        return DiscreteLoop::straight(&vec![0.0; n], class, segments);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
    let base: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
    let mut start = DiscreteLoop::straight(&base, class, segments)?;
    // a few low Fourier modes per coordinate; they vanish at both ends so the
    // class is unchanged
    let modes: Vec<(usize, f64, usize)> = (0..3)
        .flat_map(|_| {
            let axis = rng.gen_range(0..n);
            let freq = rng.gen_range(1..=3);
            let amp = rng.gen_range(-0.5..0.5);
            [(axis, amp, freq)]
        })
        .collect();
    for j in 0..segments {
        let s = j as f64 / segments as f64;
        for &(axis, amp, freq) in &modes {
            start.points[j * n + axis] += amp * (PI * freq as f64 * s).sin().powi(2);
        }
    }
    Ok(start)
}

/// Best closed loop in class `m` for the Jacobi metric at energy `E`.
pub fn jacobi_minimal_geodesic(
    model: &TorusModel,
    potential: &TrigPotential,
    energy: f64,
    class: &HomotopyClass,
    options: SearchOptions,
) -> Result<GeodesicSearchResult> {
    let n = model.dim();
    if class.dim() != n || potential.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: class.dim(),
        });
    }
    if class.is_zero() {
        return Err(Error::ZeroClass);
    }
    let threshold = potential.extrema().1 + options.margin;
    if !(energy > threshold) {
        return Err(Error::DegenerateEnergy { energy, threshold });
    }
    if options.segments < 3 || options.restarts == 0 {
        return Err(Error::InvalidArgument(
            "need at least 3 segments and 1 restart".into(),
        ));
    }
    let weight = SPACING_WEIGHT * (energy - potential.extrema().0).sqrt();
    let runs: Vec<Result<(Vec<f64>, f64)>> = (0..options.restarts)
        .into_par_iter()
        .map(|r| {
            let start = perturbed_start(class, options.segments, r, options.seed)?;
            let f = JacobiFunctional::new(model, potential, energy, class.clone())
                .with_spacing_weight(weight);
            let p = minimize(&f, start.points, options.max_iters, 0.5 * CONVERGENCE_TOL);
            let len = f.length(&p);
            Ok((p, len))
        })
        .collect();
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let (p, len) = run?;
        if best.as_ref().is_none_or(|(_, _, l)| len < *l) {
            best = Some((r, p, len));
        }
    }
    let (best_restart, points, length) = best.expect("at least one restart");
    let f = JacobiFunctional::new(model, potential, energy, class.clone())
        .with_spacing_weight(weight);
    let gradient_norm = f
        .value_and_gradient(&points)
        .1
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(GeodesicSearchResult {
        path: DiscreteLoop::new(points, class.clone())?,
        length,
        converged: gradient_norm < CONVERGENCE_TOL * length / options.segments as f64,
        gradient_norm,
        restarts: options.restarts,
        best_restart,
        seed: options.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DkRow {
    pub k: usize,
    pub segments: usize,
    pub length: f64,
    pub d_k: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DkScan {
    pub class: HomotopyClass,
    pub energy: f64,
    pub rows: Vec<DkRow>,
    pub argmin: usize,
}

impl DkScan {
    /// `L_{(j+k)α} ≤ L_{jα} + L_{kα} + tol` for all scanned pairs.
    pub fn subadditive(&self, tol: f64) -> bool {
        let len = |k: usize| self.rows.iter().find(|r| r.k == k).map(|r| r.length);
        self.rows.iter().all(|a| {
            self.rows.iter().all(|b| match len(a.k + b.k) {
                Some(l) => l <= a.length + b.length + tol,
                None => true,
            })
        })
    }
}

/// `d_k = L_{kα}/k` for `k = 1..=k_max`, with the segment count scaled by `k`.
pub fn d_k_scan(
    model: &TorusModel,
    potential: &TrigPotential,
    energy: f64,
    alpha: &HomotopyClass,
    k_max: usize,
    options: SearchOptions,
) -> Result<DkScan> {
    if !alpha.is_primitive() {
        return Err(Error::InvalidArgument(format!(
            "class {:?} is not primitive",
            alpha.entries()
        )));
    }
    if !(1..=8).contains(&k_max) {
        return Err(Error::InvalidArgument(format!("k_max must be in 1..=8, got {k_max}")));
    }
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let opts = SearchOptions {
            segments: options.segments * k,
            ..options
        };
        let res = jacobi_minimal_geodesic(model, potential, energy, &alpha.scaled(k as i64), opts)?;
        rows.push(DkRow {
            k,
            segments: opts.segments,
            length: res.length,
            d_k: res.length / k as f64,
            converged: res.converged,
        });
    }
    let argmin = rows
        .iter()
        .min_by(|a, b| a.d_k.total_cmp(&b.d_k))
        .map(|r| r.k)
        .unwrap_or(1);
    Ok(DkScan {
        class: alpha.clone(),
        energy,
        rows,
        argmin,
    })
}
