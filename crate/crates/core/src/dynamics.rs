//! Symplectic integration of natural systems and exact periods of separable
//! factors.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduce_angle, PhasePoint, TorusModel, TrigPotential};
use crate::observables::{separable_integrals, CompiledObservable, Observable};
use crate::strata::{FactorPortrait, Motion};
use crate::trig1d::CriticalKind;

/// Default confinement tolerance.
pub const CONFINEMENT_TOL: f64 = 1e-6;

/// Weight of the outer kicks of the minimum-error splitting.
const MIN_ERROR_LAMBDA: f64 = 0.193_183_327_503_783_6;

/// Second-order splitting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Kick λh, drift h/2, kick (1−2λ)h, drift h/2, kick λh.
    #[default]
    MinimumError,
    /// Kick h/2, drift h, kick h/2.
    Verlet,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minimum-error" | "min-error" => Ok(Self::MinimumError),
            "verlet" | "leapfrog" => Ok(Self::Verlet),
            _ => Err(format!("unknown method {s:?}; use minimum-error or verlet")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MinimumError => "minimum-error",
            Self::Verlet => "verlet",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrateOptions {
    pub method: Method,
    /// Record every `stride`-th step (the last step is always recorded).
    pub stride: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            method: Method::default(),
            stride: 1,
        }
    }
}

/// Sampled orbit. Angles are stored unwrapped (as a lift to `R^n`), so
/// winding numbers can be read off directly.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    n: usize,
    dt: f64,
    method: Method,
    times: Vec<f64>,
    lifts: Vec<f64>,
    momenta: Vec<f64>,
    energies: Vec<f64>,
    integrals: Vec<f64>,
    n_integrals: usize,
}

impl PhaseTrajectory {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn lift(&self, i: usize) -> &[f64] {
        &self.lifts[i * self.n..(i + 1) * self.n]
    }

    pub fn momentum(&self, i: usize) -> &[f64] {
        &self.momenta[i * self.n..(i + 1) * self.n]
    }

    pub fn point(&self, i: usize) -> PhasePoint {
        PhasePoint::new(self.lift(i).to_vec(), self.momentum(i).to_vec())
            .expect("stored samples have matching dimensions")
    }

    pub fn last(&self) -> PhasePoint {
        self.point(self.len() - 1)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Values of the separable integrals at sample `i` (empty when the
    /// system is not separable).
    pub fn integrals(&self, i: usize) -> &[f64] {
        &self.integrals[i * self.n_integrals..(i + 1) * self.n_integrals]
    }

    pub fn integral_count(&self) -> usize {
        self.n_integrals
    }

    /// `max_t |H(t) − H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.energies[0];
        self.energies.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max)
    }

    /// `max_{i,t} |F_i(t) − F_i(0)|` over the recorded integrals.
    pub fn recorded_integral_drift(&self) -> f64 {
        let first = self.integrals(0).to_vec();
        (0..self.len())
            .flat_map(|s| {
                self.integrals(s)
                    .iter()
                    .zip(&first)
                    .map(|(f, f0)| (f - f0).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Net number of turns around each circle factor.
    pub fn winding_numbers(&self) -> Vec<i64> {
        let first = self.lift(0);
        let last = self.lift(self.len() - 1);
        first
            .iter()
            .zip(last)
            .map(|(a, b)| ((b / TAU).floor() - (a / TAU).floor()) as i64)
            .collect()
    }

    /// Mean angular velocity of each coordinate: least-squares slope of the
    /// unwrapped angle over the final 80% of the samples.
    pub fn winding_frequency(&self) -> Vec<f64> {
        let start = self.len() / 5;
        let ts = &self.times[start..];
        let m = ts.len() as f64;
        let t_mean = ts.iter().sum::<f64>() / m;
        let var: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
        (0..self.n)
            .map(|i| {
                let xs: Vec<f64> = (start..self.len()).map(|s| self.lift(s)[i]).collect();
                let x_mean = xs.iter().sum::<f64>() / m;
                let cov: f64 = ts.iter().zip(&xs).map(|(t, x)| (t - t_mean) * (x - x_mean)).sum();
                cov / var
            })
            .collect()
    }
}

struct Stepper<'a> {
    model: &'a TorusModel,
    potential: &'a TrigPotential,
    diag: Option<Vec<f64>>,
    grad: Vec<f64>,
}

impl Stepper<'_> {
    fn kick(&mut self, x: &[f64], y: &mut [f64], h: f64) {
        self.potential.gradient_into(x, &mut self.grad);
        for (yi, gi) in y.iter_mut().zip(&self.grad) {
            *yi -= h * gi;
        }
    }

    fn drift(&self, x: &mut [f64], y: &[f64], h: f64) {
        match &self.diag {
            Some(inv) => {
                for ((xi, yi), gi) in x.iter_mut().zip(y).zip(inv) {
                    *xi += h * gi * yi;
                }
            }
            None => {
                let inv = self.model.inverse_metric();
                for (i, xi) in x.iter_mut().enumerate() {
                    let v: f64 = (0..y.len()).map(|j| inv[(i, j)] * y[j]).sum();
                    *xi += h * v;
                }
            }
        }
    }

    fn step(&mut self, method: Method, x: &mut [f64], y: &mut [f64], h: f64) {
        match method {
            Method::Verlet => {
                self.kick(x, y, 0.5 * h);
                self.drift(x, y, h);
                self.kick(x, y, 0.5 * h);
            }
            Method::MinimumError => {
                self.kick(x, y, MIN_ERROR_LAMBDA * h);
                self.drift(x, y, 0.5 * h);
                self.kick(x, y, (1.0 - 2.0 * MIN_ERROR_LAMBDA) * h);
                self.drift(x, y, 0.5 * h);
                self.kick(x, y, MIN_ERROR_LAMBDA * h);
            }
        }
    }
}

/// Integrate Hamilton's equations with the default splitting, recording
/// every step.
pub fn integrate(
    model: &TorusModel,
    potential: &TrigPotential,
    p0: &PhasePoint,
    dt: f64,
    steps: usize,
) -> Result<PhaseTrajectory> {
    integrate_with(model, potential, p0, dt, steps, IntegrateOptions::default())
}

pub fn integrate_with(
    model: &TorusModel,
    potential: &TrigPotential,
    p0: &PhasePoint,
    dt: f64,
    steps: usize,
    options: IntegrateOptions,
) -> Result<PhaseTrajectory> {
    let n = model.dim();
    if potential.dim() != n || p0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if potential.dim() != n { potential.dim() } else { p0.dim() },
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if steps == 0 || options.stride == 0 {
        return Err(Error::InvalidArgument("steps and stride must be at least 1".into()));
    }
    let integrals: Vec<CompiledObservable> = if model.is_diagonal() && potential.is_separable() {
        separable_integrals(model, potential)?
            .iter()
            .map(Observable::compile)
            .collect()
    } else {
        Vec::new()
    };
    let samples = steps / options.stride + 2;
    let mut traj = PhaseTrajectory {
        n,
        dt,
        method: options.method,
        times: Vec::with_capacity(samples),
        lifts: Vec::with_capacity(samples * n),
        momenta: Vec::with_capacity(samples * n),
        energies: Vec::with_capacity(samples),
        integrals: Vec::with_capacity(samples * integrals.len()),
        n_integrals: integrals.len(),
    };
    let mut stepper = Stepper {
        model,
        potential,
        diag: model
            .is_diagonal()
            .then(|| (0..n).map(|i| model.inverse_metric()[(i, i)]).collect()),
        grad: vec![0.0; n],
    };
    let mut x = p0.x().to_vec();
    let mut y = p0.y().to_vec();
    let mut reduced = vec![0.0; n];
    let mut record = |step: usize, x: &[f64], y: &[f64], traj: &mut PhaseTrajectory| {
        for (r, xi) in reduced.iter_mut().zip(x) {
            *r = reduce_angle(*xi);
        }
        traj.times.push(step as f64 * dt);
        traj.lifts.extend_from_slice(x);
        traj.momenta.extend_from_slice(y);
        let h = 0.5 * model.co_norm_sq(y) + potential.eval(&reduced).expect("dimension checked");
        traj.energies.push(h);
        traj.integrals
            .extend(integrals.iter().map(|f| f.eval(&reduced, y)));
    };
    record(0, &x, &y, &mut traj);
    for step in 1..=steps {
        stepper.step(options.method, &mut x, &mut y, dt);
        if step % options.stride == 0 || step == steps {
            record(step, &x, &y, &mut traj);
        }
    }
    Ok(traj)
}

/// Confinement of a trajectory to the domain of possible motions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfinementReport {
    pub energy: f64,
    pub tolerance: f64,
    /// `max_t U(x(t)) − E`.
    pub max_excursion: f64,
    pub violations: usize,
    pub passed: bool,
}

pub fn check_confinement(
    traj: &PhaseTrajectory,
    potential: &TrigPotential,
    energy: f64,
) -> Result<ConfinementReport> {
    check_confinement_with(traj, potential, energy, CONFINEMENT_TOL)
}

pub fn check_confinement_with(
    traj: &PhaseTrajectory,
    potential: &TrigPotential,
    energy: f64,
    tolerance: f64,
) -> Result<ConfinementReport> {
    let mut max_excursion = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..traj.len() {
        let e = potential.eval(traj.lift(i))? - energy;
        max_excursion = max_excursion.max(e);
        if e > tolerance {
            violations += 1;
        }
    }
    Ok(ConfinementReport {
        energy,
        tolerance,
        max_excursion,
        violations,
        passed: violations == 0,
    })
}

/// `max_{i,t} |F_i(t) − F_i(0)|` for arbitrary observables.
pub fn integral_drift(traj: &PhaseTrajectory, integrals: &[Observable]) -> Result<f64> {
    let compiled: Vec<CompiledObservable> = integrals.iter().map(Observable::compile).collect();
    if let Some(f) = compiled.iter().find(|f| f.dim() != traj.dim()) {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: f.dim(),
        });
    }
    let mut x = vec![0.0; traj.dim()];
    let mut eval_all = |i: usize| -> Vec<f64> {
        for (r, xi) in x.iter_mut().zip(traj.lift(i)) {
            *r = reduce_angle(*xi);
        }
        compiled.iter().map(|f| f.eval(&x, traj.momentum(i))).collect()
    };
    let first = eval_all(0);
    let mut drift: f64 = 0.0;
    for i in 1..traj.len() {
        for (f, f0) in eval_all(i).iter().zip(&first) {
            drift = drift.max((f - f0).abs());
        }
    }
    Ok(drift)
}

const PERIOD_TOL: f64 = 1e-13;

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::integrate(f, a, b, PERIOD_TOL).integral
}

/// `∫_0^{2π} f` for smooth periodic `f`; the trapezoid rule converges
/// geometrically here, so the grid is doubled until it stops changing.
fn periodic_trapezoid(f: impl Fn(f64) -> f64) -> f64 {
    let mut n = 64usize;
    let mut sum: f64 = (0..n).map(|i| f(TAU * i as f64 / n as f64)).sum();
    let mut prev = sum * TAU / n as f64;
    while n < (1 << 22) {
        sum += (0..n).map(|i| f(TAU * (i as f64 + 0.5) / n as f64)).sum::<f64>();
        n *= 2;
        let next = sum * TAU / n as f64;
        if (next - prev).abs() <= 1e-15 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// Separatrix test with a relative tolerance.
fn is_separatrix(portrait: &FactorPortrait, c: f64) -> bool {
    portrait
        .critical_points()
        .iter()
        .filter(|p| p.kind != CriticalKind::Minimum)
        .any(|p| (p.value - c).abs() <= 1e-12 * p.value.abs().max(1.0))
}

/// Period of the motion of factor `F_i = ½y²/G_ii + V_i(x)` on its level `c`.
///
/// Oscillations use the well around the global minimum; see
/// [`factor_period_near`] to pick another well.
pub fn factor_period(portrait: &FactorPortrait, c: f64) -> Result<f64> {
    let x0 = portrait
        .critical_points()
        .iter()
        .filter(|p| p.kind == CriticalKind::Minimum)
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .map(|p| p.x)
        .unwrap_or(0.0);
    factor_period_near(portrait, c, x0)
}

/// Period of the orbit through the well containing `x0` (oscillation), or
/// the time to advance `2π` (rotation).
pub fn factor_period_near(portrait: &FactorPortrait, c: f64, x0: f64) -> Result<f64> {
    let v = &portrait.potential;
    let m = portrait.mass;
    let (lo, hi) = portrait.potential.extrema();
    if c <= lo {
        return Err(Error::BelowMinimum { level: c, min: lo });
    }
    if is_separatrix(portrait, c) {
        return Err(Error::SeparatrixEnergy { level: c });
    }
    let speed_inv = |x: f64| {
        let g = c - v.eval(x);
        if g > 0.0 {
            (m / (2.0 * g)).sqrt()
        } else {
            0.0
        }
    };
    if c > hi {
        return Ok(periodic_trapezoid(speed_inv));
    }
    if v.eval(x0) >= c {
        return Err(Error::InvalidArgument(format!(
            "level {c} does not reach the point {x0}"
        )));
    }
    let a = turning_point(portrait, c, x0, -1.0);
    let b = turning_point(portrait, c, x0, 1.0);
    let half = 0.5 * (b - a);
    // x = mid + half·sin θ removes the inverse square roots at both ends;
    // c − V(x) is measured from the nearer turning point as V(e) − V(x) with
    // e − x = 2·half·sin²(π/4 ∓ θ/2), which keeps full relative accuracy
    let integrand = |th: f64| {
        let g = if th >= 0.0 {
            let d = 2.0 * half * (0.25 * PI - 0.5 * th).sin().powi(2);
            v.drop_from(b, d)
        } else {
            let d = -2.0 * half * (0.25 * PI + 0.5 * th).sin().powi(2);
            v.drop_from(a, d)
        };
        if g > 0.0 {
            half * th.cos() * (m / (2.0 * g)).sqrt()
        } else {
            0.0
        }
    };
    Ok(2.0 * quad(integrand, -FRAC_PI_2, FRAC_PI_2))
}

/// First point from `x0` in direction `dir` where `V = c`.
fn turning_point(portrait: &FactorPortrait, c: f64, x0: f64, dir: f64) -> f64 {
    let v = &portrait.potential;
    let h = TAU / (256.0 * portrait.potential.max_wave().max(1) as f64);
    let mut inner = x0;
    let mut outer = x0 + dir * h;
    while v.eval(outer) < c {
        inner = outer;
        outer += dir * h;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if v.eval(mid) < c {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    inner
}

/// Angular frequencies of the factor motions on a torus of the momentum map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyVector {
    /// `2π / T_i`, signed by the momentum for rotations.
    pub omega: Vec<f64>,
    pub motions: Vec<Motion>,
}

impl FrequencyVector {
    pub fn all_rotational(&self) -> bool {
        self.motions.iter().all(|m| *m == Motion::Rotation)
    }
}

/// Frequencies on the level `c`; `signs[i]` orients rotation factors.
pub fn frequency_vector(
    portraits: &[FactorPortrait],
    c: &[f64],
    signs: &[f64],
) -> Result<FrequencyVector> {
    if c.len() != portraits.len() || signs.len() != portraits.len() {
        return Err(Error::DimensionMismatch {
            expected: portraits.len(),
            found: c.len().min(signs.len()),
        });
    }
    let mut omega = Vec::with_capacity(c.len());
    let mut motions = Vec::with_capacity(c.len());
    for ((p, &ci), &s) in portraits.iter().zip(c).zip(signs) {
        let t = factor_period(p, ci)?;
        if ci > p.max_value() {
            omega.push(TAU / t * if s < 0.0 { -1.0 } else { 1.0 });
            motions.push(Motion::Rotation);
        } else {
            omega.push(TAU / t);
            motions.push(Motion::Oscillation);
        }
    }
    Ok(FrequencyVector { omega, motions })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearityReport {
    /// `|ω₁ ∧ ω₂| / (|ω₁| |ω₂|)`.
    pub deviation: f64,
    /// Both tori rotational and both classes multiples of one primitive class.
    pub precondition_met: bool,
    pub common_class: Option<Vec<i64>>,
    pub collinear: bool,
    /// Collinear whenever the precondition holds.
    pub passed: bool,
}

/// Primitive class and multiplier: `m = q · α`, with the first non-zero entry
/// of `α` positive.
pub fn primitive_part(m: &[i64]) -> Option<(Vec<i64>, i64)> {
    let g = m.iter().fold(0i64, |g, &v| num_integer::gcd(g, v));
    if g == 0 {
        return None;
    }
    let first = *m.iter().find(|&&v| v != 0)?;
    let q = if first < 0 { -g } else { g };
    Some((m.iter().map(|v| v / q).collect(), q))
}

pub fn collinearity_check(
    w1: &FrequencyVector,
    class1: &[i64],
    w2: &FrequencyVector,
    class2: &[i64],
    tol: f64,
) -> Result<CollinearityReport> {
    if w1.omega.len() != w2.omega.len() || class1.len() != class2.len() {
        return Err(Error::DimensionMismatch {
            expected: w1.omega.len(),
            found: w2.omega.len(),
        });
    }
    let dot: f64 = w1.omega.iter().zip(&w2.omega).map(|(a, b)| a * b).sum();
    let n1: f64 = w1.omega.iter().map(|a| a * a).sum();
    let n2: f64 = w2.omega.iter().map(|a| a * a).sum();
    let deviation = if n1 == 0.0 || n2 == 0.0 {
        0.0
    } else {
        ((n1 * n2 - dot * dot).max(0.0)).sqrt() / (n1 * n2).sqrt()
    };
    let common_class = match (primitive_part(class1), primitive_part(class2)) {
        (Some((a, _)), Some((b, _))) if a == b => Some(a),
        _ => None,
    };
    let precondition_met = common_class.is_some() && w1.all_rotational() && w2.all_rotational();
    let collinear = deviation < tol;
    Ok(CollinearityReport {
        deviation,
        precondition_met,
        common_class,
        collinear,
        passed: !precondition_met || collinear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NaturalSystem;

    /// Complete elliptic integral of the first kind `K(κ)` via the
    /// arithmetic-geometric mean.
    fn elliptic_k(kappa: f64) -> f64 {
        let (mut a, mut b) = (1.0f64, (1.0 - kappa * kappa).sqrt());
        for _ in 0..40 {
            let an = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = an;
        }
        PI / (2.0 * a)
    }

    /// Pendulum `½y²/m + a cos(kx)` periods from elliptic integrals.
    fn pendulum_period(k: f64, a: f64, m: f64, c: f64) -> f64 {
        let omega = k * (a / m).sqrt();
        let kappa2 = 0.5 * (1.0 + c / a);
        if kappa2 < 1.0 {
            4.0 * elliptic_k(kappa2.sqrt()) / omega
        } else {
            let kappa = kappa2.sqrt();
            k * 2.0 * elliptic_k(1.0 / kappa) / (omega * kappa)
        }
    }

    fn example(n: usize) -> NaturalSystem {
        NaturalSystem::cosine_family(&vec![1; n]).unwrap()
    }

    #[test]
    fn free_motion_is_exact() {
        let model = TorusModel::diagonal(&[1.0, 4.0]).unwrap();
        let u = TrigPotential::zero(2);
        let p0 = PhasePoint::new(vec![0.5, 1.0], vec![0.25, 2.0]).unwrap();
        let traj = integrate(&model, &u, &p0, 0.125, 64).unwrap();
        let last = traj.lift(traj.len() - 1);
        assert_eq!(last, &[0.5 + 8.0 * 0.25, 1.0 + 8.0 * 0.5]);
        assert_eq!(traj.energy_drift(), 0.0);
        assert_eq!(traj.recorded_integral_drift(), 0.0);
        let rep = check_confinement(&traj, &u, traj.energies()[0]).unwrap();
        assert!(rep.passed && rep.max_excursion <= 0.0);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let sys = example(1);
        let p0 = PhasePoint::new(vec![PI], vec![0.0]).unwrap();
        let traj = integrate(&sys.model, &sys.potential, &p0, 1e-2, 10_000).unwrap();
        // sin π ≠ 0 in floating point
        assert!((traj.last().x()[0] - PI).abs() < 1e-12);
        assert!(traj.last().y()[0].abs() < 1e-12);
    }

    #[test]
    fn reversible() {
        let sys = example(2);
        for method in [Method::MinimumError, Method::Verlet] {
            let opts = IntegrateOptions { method, stride: 1000 };
            let p0 = PhasePoint::new(vec![PI / 2.0, PI], vec![0.1, 0.0]).unwrap();
            let fwd = integrate_with(&sys.model, &sys.potential, &p0, 1e-3, 100_000, opts).unwrap();
            let end = fwd.last();
            let back_start =
                PhasePoint::new(end.x().to_vec(), end.y().iter().map(|v| -v).collect()).unwrap();
            let back =
                integrate_with(&sys.model, &sys.potential, &back_start, 1e-3, 100_000, opts).unwrap();
            let p = back.last();
            for i in 0..2 {
                let dx = (p.x()[i] - p0.x()[i] + PI).rem_euclid(TAU) - PI;
                assert!(dx.abs() < 1e-10, "{method}: {dx}");
                assert!((p.y()[i] + p0.y()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_order_convergence() {
        let sys = example(2);
        let p0 = PhasePoint::new(vec![PI / 2.0, PI], vec![0.1, 0.0]).unwrap();
        let drift = |dt: f64| {
            let steps = (40.0 / dt) as usize;
            integrate(&sys.model, &sys.potential, &p0, dt, steps)
                .unwrap()
                .energy_drift()
        };
        let (d4, d2, d1) = (drift(4e-3), drift(2e-3), drift(1e-3));
        for r in [d4 / d2, d2 / d1] {
            assert!((r - 4.0).abs() < 0.8, "ratio {r}");
        }
    }

    #[test]
    fn oscillation_turning_points_respected() {
        let sys = example(1);
        // c = −0.5: turning points where cos x = −0.5
        let p0 = PhasePoint::new(vec![PI], vec![1.0]).unwrap();
        let traj = integrate(&sys.model, &sys.potential, &p0, 1e-3, 20_000).unwrap();
        let c = traj.energies()[0];
        assert!((c + 0.5).abs() < 1e-15);
        let turn = c.acos();
        let reach = (0..traj.len())
            .map(|i| (traj.lift(i)[0] - PI).abs())
            .fold(0.0, f64::max);
        assert!(reach <= PI - turn + 1e-6, "{reach} vs {}", PI - turn);
        assert!(reach > PI - turn - 1e-3);
        assert!(check_confinement(&traj, &sys.potential, c).unwrap().passed);
    }

    #[test]
    fn periods_match_elliptic_integrals() {
        for (k, a, m) in [(1, 1.0, 1.0), (2, 1.0, 1.0), (3, 0.5, 2.0)] {
            let f = FactorPortrait::cosine(0, k, a, m).unwrap();
            for c in [-0.9 * a, -0.3 * a, 0.4 * a, 0.95 * a, 1.2 * a, 3.0 * a, 10.0] {
                let t = factor_period(&f, c).unwrap();
                let oracle = pendulum_period(k as f64, a, m, c);
                assert!(((t - oracle) / oracle).abs() < 1e-9, "k={k} c={c}: {t} vs {oracle}");
            }
        }
    }

    #[test]
    fn harmonic_limits() {
        for (k, a, m) in [(1, 1.0, 1.0), (2, 1.0, 1.0), (3, 2.0, 0.5)] {
            let f = FactorPortrait::cosine(0, k, a, m).unwrap();
            let t = factor_period(&f, -a + 1e-3).unwrap();
            let harmonic = TAU / (k as f64 * (a / m).sqrt());
            assert!((t - harmonic).abs() < 1e-2, "{t} vs {harmonic}");
        }
    }

    #[test]
    fn period_errors_and_monotonicity() {
        let f = FactorPortrait::cosine(0, 1, 1.0, 1.0).unwrap();
        assert!(matches!(factor_period(&f, 1.0), Err(Error::SeparatrixEnergy { .. })));
        assert!(matches!(factor_period(&f, -1.5), Err(Error::BelowMinimum { .. })));
        let rot: Vec<f64> = (0..20).map(|i| 1.05 + 0.5 * i as f64).collect();
        let ts: Vec<f64> = rot.iter().map(|&c| factor_period(&f, c).unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
        let osc: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
        let ts: Vec<f64> = osc.iter().map(|&c| factor_period(&f, c).unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        let near = |c: f64| factor_period(&f, c).unwrap();
        assert!(near(1.0 - 1e-8) > 3.0 * near(0.0));
        assert!(near(1.0 + 1e-8) > 3.0 * near(2.0));
    }

    #[test]
    fn multi_term_factor_period() {
        // cos x + 0.5 cos 2x has two wells; the deeper one sits at x = 2π/3
        let v = crate::trig1d::TrigPolynomial1d::new(vec![
            crate::trig1d::Wave1d { amplitude: 1.0, wave: 1, kind: crate::model::TrigKind::Cos },
            crate::trig1d::Wave1d { amplitude: 0.5, wave: 2, kind: crate::model::TrigKind::Cos },
        ]);
        let f = FactorPortrait::new(0, 1.0, v).unwrap();
        let c = -0.7;
        let t = factor_period(&f, c).unwrap();
        // harmonic estimate V'' = −cos x − 2 cos 2x = 1.5 at x = 2π/3
        let harmonic = TAU / 1.5f64.sqrt();
        assert!(t > harmonic && t < 1.1 * harmonic, "{t} vs {harmonic}");
        // simulated half period: time for y to change sign twice
        let model = TorusModel::identity(1).unwrap();
        let u = TrigPotential::new(
            1,
            vec![
                crate::model::TrigTerm::cos(1.0, vec![1]),
                crate::model::TrigTerm::cos(0.5, vec![2]),
            ],
        )
        .unwrap();
        let x0 = 2.0 * PI / 3.0;
        let y0 = (2.0 * (c - u.eval(&[x0]).unwrap())).sqrt();
        let p0 = PhasePoint::new(vec![x0], vec![y0]).unwrap();
        let dt = 1e-4;
        let traj = integrate(&model, &u, &p0, dt, (3.0 * t / dt) as usize).unwrap();
        let crossings: Vec<f64> = (1..traj.len())
            .filter(|&i| traj.momentum(i - 1)[0] > 0.0 && traj.momentum(i)[0] <= 0.0)
            .map(|i| traj.times()[i])
            .collect();
        let measured = crossings[1] - crossings[0];
        assert!((measured - t).abs() < 2e-4, "{measured} vs {t}");
    }

    #[test]
    fn simulated_winding_matches_quadrature() {
        let sys = example(1);
        let f = FactorPortrait::cosine(0, 1, 1.0, 1.0).unwrap();
        let c: f64 = 10.0;
        let y0 = (2.0 * (c - 1.0)).sqrt();
        let p0 = PhasePoint::new(vec![0.0], vec![y0]).unwrap();
        let opts = IntegrateOptions { method: Method::MinimumError, stride: 10 };
        let traj = integrate_with(&sys.model, &sys.potential, &p0, 1e-3, 2_000_000, opts).unwrap();
        let w = traj.winding_frequency()[0];
        let t = factor_period(&f, c).unwrap();
        assert!(((TAU / w - t) / t).abs() < 1e-6, "{} vs {t}", TAU / w);
        assert!((t - TAU / (2.0 * c).sqrt()).abs() / t < 0.1);
    }

    #[test]
    fn collinearity_of_free_tori() {
        let portraits = [
            FactorPortrait::new(0, 1.0, Default::default()).unwrap(),
            FactorPortrait::new(1, 1.0, Default::default()).unwrap(),
        ];
        let w = |y: [f64; 2]| {
            frequency_vector(&portraits, &[0.5 * y[0] * y[0], 0.5 * y[1] * y[1]], &y).unwrap()
        };
        let same = collinearity_check(&w([1.0, 1.0]), &[1, 1], &w([1.0, 1.0]), &[1, 1], 1e-9).unwrap();
        assert_eq!(same.deviation, 0.0);
        let r = collinearity_check(&w([1.0, 1.0]), &[1, 1], &w([2.0, 2.0]), &[1, 1], 1e-9).unwrap();
        assert!(r.precondition_met && r.collinear && r.passed);
        let w11 = w([1.0, 1.0]);
        assert!((w11.omega[0] - 1.0).abs() < 1e-9);
        let r = collinearity_check(&w11, &[1, 1], &w([1.0, 2.0]), &[1, 2], 1e-9).unwrap();
        assert!(!r.precondition_met && !r.collinear && r.passed);
        assert_eq!(primitive_part(&[-2, 4]), Some((vec![1, -2], -2)));
        assert_eq!(primitive_part(&[0, 0]), None);
    }

    #[test]
    fn integral_drift_matches_recorded() {
        let sys = example(2);
        let p0 = PhasePoint::new(vec![PI / 2.0, PI], vec![0.1, 0.0]).unwrap();
        let traj = integrate(&sys.model, &sys.potential, &p0, 1e-2, 5000).unwrap();
        let fs = separable_integrals(&sys.model, &sys.potential).unwrap();
        let d = integral_drift(&traj, &fs).unwrap();
        assert_eq!(d, traj.recorded_integral_drift());
        assert!(d > 0.0 && d < 1e-4);
    }
}
