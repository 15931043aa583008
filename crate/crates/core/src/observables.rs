//! Exact algebra of phase-space observables.
//!
//! An [`Observable`] is a finite sum `Σ c · y^α · trig(k·x)` with exact
//! rational coefficients. Products are normalized with the product-to-sum
//! identities, so the set of such sums is closed under `+`, `·`, `∂/∂x_i`,
//! `∂/∂y_i` and hence under the Poisson bracket. Zero is the empty term list,
//! which makes "the bracket vanishes" a decidable, exact statement.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{canonical_wave, PhasePoint, TorusModel, TrigKind, TrigPotential};

pub type Coeff = BigRational;

/// Exact rational of a finite float (every `f64` is a dyadic rational).
pub fn exact(v: f64) -> Result<Coeff> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::InvalidArgument(format!("cannot represent {v} exactly")))
}

fn half() -> Coeff {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// Sort key of a monomial `y^α · trig(k·x)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub ypow: Vec<u32>,
    pub wave: Vec<i64>,
    pub kind: TrigKind,
}

/// Exact phase-space observable in canonical form.
#[derive(Clone, PartialEq, Eq)]
pub struct Observable {
    n: usize,
    terms: BTreeMap<TermKey, Coeff>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable[n={}] {}", self.n, self)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (key, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &p) in key.ypow.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·y{}", i + 1)?,
                    _ => write!(f, "·y{}^{}", i + 1, p)?,
                }
            }
            if key.wave.iter().any(|&k| k != 0) {
                let name = match key.kind {
                    TrigKind::Cos => "cos",
                    TrigKind::Sin => "sin",
                };
                write!(f, "·{name}(")?;
                let mut first = true;
                for (i, &k) in key.wave.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, "{}", if k > 0 { "+" } else { "" })?;
                    }
                    first = false;
                    match k {
                        1 => write!(f, "x{}", i + 1)?,
                        -1 => write!(f, "-x{}", i + 1)?,
                        _ => write!(f, "{k}x{}", i + 1)?,
                    }
                }
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}

impl Observable {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Coeff) -> Self {
        let mut o = Self::zero(n);
        o.add_term(vec![0; n], vec![0; n], TrigKind::Cos, c);
        o
    }

    /// The coordinate function `y_i`.
    pub fn momentum(n: usize, i: usize) -> Self {
        let mut ypow = vec![0; n];
        ypow[i] = 1;
        let mut o = Self::zero(n);
        o.add_term(ypow, vec![0; n], TrigKind::Cos, Coeff::one());
        o
    }

    /// A single monomial `c · y^α · trig(k·x)`.
    pub fn monomial(c: Coeff, ypow: Vec<u32>, wave: Vec<i64>, kind: TrigKind) -> Result<Self> {
        let n = ypow.len();
        if wave.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: wave.len(),
            });
        }
        let mut o = Self::zero(n);
        o.add_term(ypow, wave, kind, c);
        Ok(o)
    }

    pub fn from_potential(u: &TrigPotential) -> Result<Self> {
        let n = u.dim();
        let mut o = Self::zero(n);
        for t in u.terms() {
            o.add_term(vec![0; n], t.wave.clone(), t.kind, exact(t.amplitude)?);
        }
        Ok(o)
    }

    /// Kinetic energy `½ yᵀ G⁻¹ y` with the inverse metric computed exactly
    /// from the (dyadic) metric entries.
    pub fn kinetic(model: &TorusModel) -> Result<Self> {
        let n = model.dim();
        let g = model.metric();
        let exact_g: Vec<Vec<Coeff>> = (0..n)
            .map(|i| (0..n).map(|j| exact(g[(i, j)])).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let inv = rational_inverse(exact_g)
            .ok_or_else(|| Error::InvalidMetric("singular metric".into()))?;
        let mut o = Self::zero(n);
        for (i, row) in inv.iter().enumerate() {
            for (j, gij) in row.iter().enumerate() {
                let mut ypow = vec![0; n];
                ypow[i] += 1;
                ypow[j] += 1;
                o.add_term(ypow, vec![0; n], TrigKind::Cos, gij * half());
            }
        }
        Ok(o)
    }

    /// `H = ½ yᵀ G⁻¹ y + U(x)` as an exact observable.
    pub fn hamiltonian(model: &TorusModel, u: &TrigPotential) -> Result<Self> {
        check_dim(model.dim(), u.dim())?;
        Ok(&Self::kinetic(model)? + &Self::from_potential(u)?)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Coeff)> {
        self.terms.iter()
    }

    fn add_term(&mut self, ypow: Vec<u32>, mut wave: Vec<i64>, kind: TrigKind, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let sign = canonical_wave(&mut wave, kind);
        if kind == TrigKind::Sin && wave.iter().all(|&k| k == 0) {
            return;
        }
        let c = if sign < 0.0 { -c } else { c };
        let key = TermKey { ypow, wave, kind };
        match self.terms.get_mut(&key) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    /// Re-insert every term; a no-op on a value that is already canonical.
    pub fn canonicalize(&self) -> Self {
        let mut o = Self::zero(self.n);
        for (k, c) in &self.terms {
            o.add_term(k.ypow.clone(), k.wave.clone(), k.kind, c.clone());
        }
        o
    }

    pub fn scale(&self, s: &Coeff) -> Self {
        let mut o = Self::zero(self.n);
        for (k, c) in &self.terms {
            o.add_term(k.ypow.clone(), k.wave.clone(), k.kind, c * s);
        }
        o
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.n, other.n)?;
        Ok(self + other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.n, other.n)?;
        Ok(self * other)
    }

    /// `∂/∂x_i`.
    pub fn dx(&self, i: usize) -> Self {
        let mut o = Self::zero(self.n);
        for (key, c) in &self.terms {
            let k = key.wave[i];
            if k == 0 {
                continue;
            }
            let kc = c * Coeff::from_integer(BigInt::from(k));
            match key.kind {
                TrigKind::Cos => o.add_term(key.ypow.clone(), key.wave.clone(), TrigKind::Sin, -kc),
                TrigKind::Sin => o.add_term(key.ypow.clone(), key.wave.clone(), TrigKind::Cos, kc),
            }
        }
        o
    }

    /// `∂/∂y_i`.
    pub fn dy(&self, i: usize) -> Self {
        let mut o = Self::zero(self.n);
        for (key, c) in &self.terms {
            let p = key.ypow[i];
            if p == 0 {
                continue;
            }
            let mut ypow = key.ypow.clone();
            ypow[i] -= 1;
            o.add_term(
                ypow,
                key.wave.clone(),
                key.kind,
                c * Coeff::from_integer(BigInt::from(p)),
            );
        }
        o
    }

    /// Evaluate at a phase point. Each term is rounded to `f64` and the sum is
    /// accumulated with Neumaier compensation in canonical order.
    pub fn eval(&self, p: &PhasePoint) -> Result<f64> {
        check_dim(self.n, p.dim())?;
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (key, c) in &self.terms {
            let cf = c.to_f64().unwrap_or(f64::NAN);
            let mono: f64 = key
                .ypow
                .iter()
                .zip(p.y())
                .map(|(&e, &y)| y.powi(e as i32))
                .product();
            let phase: f64 = key.wave.iter().zip(p.x()).map(|(&k, &x)| k as f64 * x).sum();
            let v = cf * mono * key.kind.apply(phase);
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        Ok(sum + comp)
    }

    /// Float snapshot for repeated evaluation on long trajectories.
    pub fn compile(&self) -> CompiledObservable {
        CompiledObservable {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (c.to_f64().unwrap_or(f64::NAN), k.clone()))
                .collect(),
        }
    }

    /// Exact value at a point with angles `x_i = q_i · π/2` and rational
    /// momenta, where every trigonometric factor is 0 or ±1.
    pub fn eval_exact(&self, quarter_turns: &[i64], y: &[Coeff]) -> Result<Coeff> {
        check_dim(self.n, quarter_turns.len())?;
        check_dim(self.n, y.len())?;
        let mut acc = Coeff::zero();
        for (key, c) in &self.terms {
            let q: i64 = key.wave.iter().zip(quarter_turns).map(|(k, q)| k * q).sum();
            let trig = match (key.kind, q.rem_euclid(4)) {
                (TrigKind::Cos, 0) => 1,
                (TrigKind::Cos, 2) => -1,
                (TrigKind::Sin, 1) => 1,
                (TrigKind::Sin, 3) => -1,
                _ => 0,
            };
            if trig == 0 {
                continue;
            }
            let mut term = c.clone();
            for (&e, yi) in key.ypow.iter().zip(y) {
                for _ in 0..e {
                    term *= yi;
                }
            }
            if trig < 0 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        Ok(acc)
    }

    /// Symbolic gradient `(∂_x F, ∂_y F)` as 2n observables.
    pub fn gradient(&self) -> Vec<Observable> {
        (0..self.n)
            .map(|i| self.dx(i))
            .chain((0..self.n).map(|i| self.dy(i)))
            .collect()
    }
}

/// An [`Observable`] with coefficients rounded to `f64`, evaluated on raw
/// coordinate slices with the same summation order as [`Observable::eval`].
#[derive(Debug, Clone)]
pub struct CompiledObservable {
    n: usize,
    terms: Vec<(f64, TermKey)>,
}

impl CompiledObservable {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (cf, key) in &self.terms {
            let mono: f64 = key
                .ypow
                .iter()
                .zip(y)
                .map(|(&e, &y)| y.powi(e as i32))
                .product();
            let phase: f64 = key.wave.iter().zip(x).map(|(&k, &x)| k as f64 * x).sum();
            let v = cf * mono * key.kind.apply(phase);
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl std::ops::Add for &Observable {
    type Output = Observable;

    fn add(self, other: &Observable) -> Observable {
        assert_eq!(self.n, other.n, "observable dimension mismatch");
        let mut o = self.clone();
        for (k, c) in &other.terms {
            o.add_term(k.ypow.clone(), k.wave.clone(), k.kind, c.clone());
        }
        o
    }
}

impl std::ops::Sub for &Observable {
    type Output = Observable;

    fn sub(self, other: &Observable) -> Observable {
        self + &(-other)
    }
}

impl std::ops::Neg for &Observable {
    type Output = Observable;

    fn neg(self) -> Observable {
        self.scale(&-Coeff::one())
    }
}

impl std::ops::Mul for &Observable {
    type Output = Observable;

    fn mul(self, other: &Observable) -> Observable {
        assert_eq!(self.n, other.n, "observable dimension mismatch");
        let mut o = Observable::zero(self.n);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let ypow: Vec<u32> = ka.ypow.iter().zip(&kb.ypow).map(|(a, b)| a + b).collect();
                let sum: Vec<i64> = ka.wave.iter().zip(&kb.wave).map(|(a, b)| a + b).collect();
                let diff: Vec<i64> = ka.wave.iter().zip(&kb.wave).map(|(a, b)| a - b).collect();
                let c = ca * cb * half();
                use TrigKind::{Cos, Sin};
                // (kind of a−b term, sign), (kind of a+b term, sign)
                let ((kd, sd), (ks, ss)) = match (ka.kind, kb.kind) {
                    (Cos, Cos) => ((Cos, 1), (Cos, 1)),
                    (Sin, Sin) => ((Cos, 1), (Cos, -1)),
                    (Sin, Cos) => ((Sin, 1), (Sin, 1)),
                    (Cos, Sin) => ((Sin, -1), (Sin, 1)),
                };
                let signed = |s: i32| if s < 0 { -c.clone() } else { c.clone() };
                o.add_term(ypow.clone(), diff, kd, signed(sd));
                o.add_term(ypow, sum, ks, signed(ss));
            }
        }
        o
    }
}

/// `{f, g} = Σ_i ∂_{y_i} f · ∂_{x_i} g − ∂_{y_i} g · ∂_{x_i} f`.
pub fn poisson_bracket(f: &Observable, g: &Observable) -> Result<Observable> {
    check_dim(f.n, g.n)?;
    let mut out = Observable::zero(f.n);
    for i in 0..f.n {
        let a = &f.dy(i) * &g.dx(i);
        let b = &g.dy(i) * &f.dx(i);
        out = &out + &(&a - &b);
    }
    Ok(out)
}

/// First integrals `F_i = ½ y_i² / G_ii + U_i(x_i)` of a separable system.
/// Constant potential terms are attached to `F_1`, so `Σ F_i = H` exactly.
pub fn separable_integrals(model: &TorusModel, u: &TrigPotential) -> Result<Vec<Observable>> {
    let n = model.dim();
    check_dim(n, u.dim())?;
    if !model.is_diagonal() {
        return Err(Error::NonDiagonalMetric);
    }
    let mut integrals: Vec<Observable> = (0..n)
        .map(|i| {
            let mut ypow = vec![0; n];
            ypow[i] = 2;
            let inv = Coeff::one() / exact(model.metric()[(i, i)])?;
            Observable::monomial(inv * half(), ypow, vec![0; n], TrigKind::Cos)
        })
        .collect::<Result<_>>()?;
    for t in u.terms() {
        let slot = t.support()?.unwrap_or(0);
        let mut o = Observable::zero(n);
        o.add_term(vec![0; n], t.wave.clone(), t.kind, exact(t.amplitude)?);
        integrals[slot] = &integrals[slot] + &o;
    }
    Ok(integrals)
}

/// Value `c = (c_1, …, c_n)` of the momentum map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumValue(pub Vec<f64>);

pub fn momentum_map_eval(integrals: &[Observable], p: &PhasePoint) -> Result<MomentumValue> {
    integrals
        .iter()
        .map(|f| f.eval(p))
        .collect::<Result<Vec<_>>>()
        .map(MomentumValue)
}

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Jacobian of the momentum map at `p`: one row per integral, columns
/// `(∂_x, ∂_y)`.
pub fn momentum_jacobian(integrals: &[Observable], p: &PhasePoint) -> Result<DMatrix<f64>> {
    let n = p.dim();
    let mut m = DMatrix::zeros(integrals.len(), 2 * n);
    for (r, f) in integrals.iter().enumerate() {
        for (c, df) in f.gradient().iter().enumerate() {
            m[(r, c)] = df.eval(p)?;
        }
    }
    Ok(m)
}

/// Numerical rank of `dF` at `p`.
///
/// Singular values at or below `tol · s` count as zero, where `s` is the
/// larger of `σ_max` and the coefficient scale of the integrals. The floor
/// keeps points where every gradient entry is rounding noise (e.g. `sin π`)
/// at rank 0.
pub fn rank_df(integrals: &[Observable], p: &PhasePoint, tol: f64) -> Result<usize> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("rank tolerance must be positive, got {tol}")));
    }
    if integrals.is_empty() {
        return Ok(0);
    }
    let m = momentum_jacobian(integrals, p)?;
    let sv = m.svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let scale = smax.max(coefficient_scale(integrals));
    if scale == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * scale).count())
}

/// Largest `|c| · max(1, |k|_∞)` over all terms: a bound on the size of a
/// gradient entry at unit momenta.
fn coefficient_scale(integrals: &[Observable]) -> f64 {
    integrals
        .iter()
        .flat_map(|f| f.terms.iter())
        .map(|(key, c)| {
            let k = key.wave.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0).max(1);
            c.to_f64().unwrap_or(0.0).abs() * k as f64
        })
        .fold(0.0, f64::max)
}

/// Exact rank of `dF` at `x = q·π/2` with rational momenta.
pub fn rank_df_exact(integrals: &[Observable], quarter_turns: &[i64], y: &[Coeff]) -> Result<usize> {
    let rows = integrals
        .iter()
        .map(|f| {
            f.gradient()
                .iter()
                .map(|df| df.eval_exact(quarter_turns, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rational_rank(rows))
}

/// Rank of a dense rational matrix by Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<Coeff>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &pivot;
                for c in col..ncols {
                    let delta = &f * &rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn rational_inverse(mut a: Vec<Vec<Coeff>>) -> Option<Vec<Vec<Coeff>>> {
    let n = a.len();
    let mut inv: Vec<Vec<Coeff>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Coeff::one() } else { Coeff::zero() }).collect())
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        inv.swap(col, p);
        let pivot = a[col][col].clone();
        for c in 0..n {
            a[col][c] = &a[col][c] / &pivot;
            inv[col][c] = &inv[col][c] / &pivot;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let da = &f * &a[col][c];
                    let di = &f * &inv[col][c];
                    a[r][c] -= da;
                    inv[r][c] -= di;
                }
            }
        }
    }
    Some(inv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketEntry {
    /// Indices of the bracketed integrals; `None` stands for the Hamiltonian.
    pub left: Option<usize>,
    pub right: usize,
    pub bracket: Observable,
}

/// Outcome of an involutivity check.
#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionReport {
    pub entries: Vec<BracketEntry>,
    pub passed: bool,
}

impl InvolutionReport {
    pub fn failures(&self) -> impl Iterator<Item = &BracketEntry> {
        self.entries.iter().filter(|e| !e.bracket.is_zero())
    }
}

/// All pairwise brackets `{F_i, F_j}` (`i < j`) and, when `h` is given, every
/// `{H, F_i}`. Passes iff all of them are symbolically zero.
pub fn involution_report(integrals: &[Observable], h: Option<&Observable>) -> Result<InvolutionReport> {
    let mut entries = Vec::new();
    for i in 0..integrals.len() {
        for j in i + 1..integrals.len() {
            entries.push(BracketEntry {
                left: Some(i),
                right: j,
                bracket: poisson_bracket(&integrals[i], &integrals[j])?,
            });
        }
    }
    if let Some(h) = h {
        for (i, f) in integrals.iter().enumerate() {
            entries.push(BracketEntry {
                left: None,
                right: i,
                bracket: poisson_bracket(h, f)?,
            });
        }
    }
    let passed = entries.iter().all(|e| e.bracket.is_zero());
    Ok(InvolutionReport { entries, passed })
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    amplitude: serde_json::Value,
    ypow: Vec<u32>,
    wave: Vec<i64>,
    kind: TrigKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableJson {
    dimension: usize,
    terms: Vec<TermJson>,
}

/// Numbers when the coefficient is exactly a finite `f64`, else a `"p/q"`
/// string.
fn coeff_to_json(c: &Coeff) -> serde_json::Value {
    if let Some(f) = c.to_f64() {
        if f.is_finite() && exact(f).ok().as_ref() == Some(c) {
            if let Some(num) = serde_json::Number::from_f64(f) {
                return serde_json::Value::Number(num);
            }
        }
    }
    serde_json::Value::String(c.to_string())
}

fn coeff_from_json(v: &serde_json::Value) -> Result<Coeff> {
    match v {
        serde_json::Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(Coeff::from_integer(BigInt::from(i)))
            } else {
                exact(num.as_f64().unwrap_or(f64::NAN))
            }
        }
        serde_json::Value::String(s) => s
            .parse::<BigRational>()
            .map_err(|e| Error::InvalidArgument(format!("bad rational {s:?}: {e}"))),
        other => Err(Error::InvalidArgument(format!("bad coefficient {other}"))),
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObservableJson {
            dimension: self.n,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| TermJson {
                    amplitude: coeff_to_json(c),
                    ypow: k.ypow.clone(),
                    wave: k.wave.clone(),
                    kind: k.kind,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ObservableJson::deserialize(d)?;
        let mut o = Observable::zero(raw.dimension);
        for t in raw.terms {
            if t.ypow.len() != raw.dimension || t.wave.len() != raw.dimension {
                return Err(D::Error::custom("term length does not match dimension"));
            }
            let c = coeff_from_json(&t.amplitude).map_err(D::Error::custom)?;
            o.add_term(t.ypow, t.wave, t.kind, c);
        }
        Ok(o)
    }
}
