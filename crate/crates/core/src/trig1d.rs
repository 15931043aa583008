//! One-dimensional trigonometric polynomials on the circle `[0, 2π)`.
//!
//! These are the per-coordinate potentials of separable systems. Besides
//! evaluation they provide derivative root isolation, which is the basis of
//! the critical-value machinery in [`crate::strata`] and of the potential
//! extrema used by the Jacobi-metric code.

use std::f64::consts::{PI, TAU};

use crate::model::TrigKind;

/// A single term `amplitude · trig(wave · x)` with `wave ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave1d {
    pub amplitude: f64,
    pub wave: i64,
    pub kind: TrigKind,
}

/// Sum of [`Wave1d`] terms in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial1d {
    pub terms: Vec<Wave1d>,
}

/// Kind of a critical point of a 1D potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriticalKind {
    Minimum,
    Maximum,
    /// Degenerate critical point where the derivative does not change sign.
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x: f64,
    pub value: f64,
    pub kind: CriticalKind,
}

const ROOT_TOL: f64 = 1e-12;

impl TrigPolynomial1d {
    pub fn new(terms: Vec<Wave1d>) -> Self {
        Self { terms }
    }

    /// True when every term is constant (no wave number), i.e. the factor is a
    /// free rotor.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.wave == 0 || t.amplitude == 0.0)
    }

    pub fn max_wave(&self) -> i64 {
        self.terms.iter().map(|t| t.wave).max().unwrap_or(0)
    }

    /// The single non-constant term, when there is exactly one.
    pub fn single_wave(&self) -> Option<Wave1d> {
        let mut it = self.terms.iter().filter(|t| t.wave != 0 && t.amplitude != 0.0);
        let first = it.next().copied();
        if it.next().is_some() {
            None
        } else {
            first
        }
    }

    pub fn constant_part(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.wave == 0 && t.kind == TrigKind::Cos)
            .map(|t| t.amplitude)
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase = t.wave as f64 * x;
                t.amplitude
                    * match t.kind {
                        TrigKind::Cos => phase.cos(),
                        TrigKind::Sin => phase.sin(),
                    }
            })
            .sum()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k = t.wave as f64;
                let phase = k * x;
                t.amplitude
                    * k
                    * match t.kind {
                        TrigKind::Cos => -phase.sin(),
                        TrigKind::Sin => phase.cos(),
                    }
            })
            .sum()
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k = t.wave as f64;
                let phase = k * x;
                -t.amplitude
                    * k
                    * k
                    * match t.kind {
                        TrigKind::Cos => phase.cos(),
                        TrigKind::Sin => phase.sin(),
                    }
            })
            .sum()
    }

    /// `V(e) − V(e − d)` without cancellation for small `d`, via
    /// sum-to-product identities.
    pub fn drop_from(&self, e: f64, d: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k = t.wave as f64;
                let outer = 0.5 * k * (2.0 * e - d);
                let s = (0.5 * k * d).sin();
                2.0 * t.amplitude
                    * s
                    * match t.kind {
                        TrigKind::Cos => -outer.sin(),
                        TrigKind::Sin => outer.cos(),
                    }
            })
            .sum()
    }

    /// Critical points on `[0, 2π)` sorted by position.
    ///
    /// A single wave `a·cos(kx + φ)` is handled in closed form (critical
    /// values are exactly `±|a|` plus the constant part). Everything else goes
    /// through derivative sign-change isolation on a fine grid and bisection to
    /// `1e-12`. Constant polynomials have no isolated critical points and
    /// return an empty list.
    pub fn critical_points(&self) -> Vec<CriticalPoint> {
        if self.is_constant() {
            return Vec::new();
        }
        if let Some(w) = self.single_wave() {
            return self.single_wave_critical_points(w);
        }
        self.numeric_critical_points()
    }

    fn single_wave_critical_points(&self, w: Wave1d) -> Vec<CriticalPoint> {
        let base = self.constant_part();
        let k = w.wave;
        // a·cos(kx) has extrema at x = jπ/k with value a·(-1)^j; a·sin(kx) at
        // x = (j + 1/2)π/k with value a·(-1)^j.
        let offset = match w.kind {
            TrigKind::Cos => 0.0,
            TrigKind::Sin => 0.5,
        };
        (0..2 * k)
            .map(|j| {
                let x = (j as f64 + offset) * PI / k as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let value = base + w.amplitude * sign;
                let is_max = (w.amplitude * sign) > 0.0;
                CriticalPoint {
                    x,
                    value,
                    kind: if is_max {
                        CriticalKind::Maximum
                    } else {
                        CriticalKind::Minimum
                    },
                }
            })
            .collect()
    }

    fn numeric_critical_points(&self) -> Vec<CriticalPoint> {
        let samples = (256 * self.max_wave().max(1)) as usize;
        let grid = |i: usize| TAU * (i as f64) / samples as f64;
        let mut roots = Vec::new();
        let mut prev_x = grid(0);
        let mut prev_d = self.derivative(prev_x);
        for i in 1..=samples {
            let x = grid(i);
            let d = self.derivative(x);
            if prev_d == 0.0 {
                roots.push(prev_x);
            } else if prev_d * d < 0.0 {
                roots.push(self.bisect(prev_x, x, prev_d));
            }
            prev_x = x;
            prev_d = d;
        }
        let mut points: Vec<CriticalPoint> = roots
            .into_iter()
            .map(|x| if x >= TAU { x - TAU } else { x })
            .map(|x| {
                let h = 1e-5;
                let left = self.derivative(x - h);
                let right = self.derivative(x + h);
                let kind = if left < 0.0 && right > 0.0 {
                    CriticalKind::Minimum
                } else if left > 0.0 && right < 0.0 {
                    CriticalKind::Maximum
                } else {
                    CriticalKind::Inflection
                };
                CriticalPoint {
                    x,
                    value: self.eval(x),
                    kind,
                }
            })
            .collect();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        points.dedup_by(|a, b| (a.x - b.x).abs() < 1e-9 || (TAU - (a.x - b.x).abs()) < 1e-9);
        points
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, mut d_lo: f64) -> f64 {
        while hi - lo > ROOT_TOL {
            let mid = 0.5 * (lo + hi);
            let d_mid = self.derivative(mid);
            if d_mid == 0.0 {
                return mid;
            }
            if d_lo * d_mid < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                d_lo = d_mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Sorted, deduplicated critical values.
    pub fn critical_values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.critical_points().iter().map(|p| p.value).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// `(min, max)` over the circle.
    pub fn extrema(&self) -> (f64, f64) {
        let values = self.critical_values();
        match (values.first(), values.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => {
                let c = self.eval(0.0);
                (c, c)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_wave(amplitude: f64, wave: i64) -> Wave1d {
        Wave1d {
            amplitude,
            wave,
            kind: TrigKind::Cos,
        }
    }

    #[test]
    fn single_cosine_critical_points_closed_form() {
        let p = TrigPolynomial1d::new(vec![cos_wave(1.0, 3)]);
        let pts = p.critical_points();
        assert_eq!(pts.len(), 6);
        assert_eq!(
            pts.iter().filter(|c| c.kind == CriticalKind::Minimum).count(),
            3
        );
        assert_eq!(p.critical_values(), vec![-1.0, 1.0]);
    }

    #[test]
    fn numeric_path_agrees_with_closed_form() {
        let p = TrigPolynomial1d::new(vec![cos_wave(1.0, 2)]);
        let numeric = p.numeric_critical_points();
        let closed = p.critical_points();
        assert_eq!(numeric.len(), closed.len());
        for (a, b) in numeric.iter().zip(&closed) {
            assert!((a.x - b.x).abs() < 1e-10, "{a:?} vs {b:?}");
            assert_eq!(a.kind, b.kind);
        }
    }

    #[test]
    fn two_term_factor_has_four_critical_points() {
        // cos x + 0.5 cos 2x: derivative -sin x (1 + 2 cos x) vanishes at
        // 0, π and where cos x = -1/2.
        let p = TrigPolynomial1d::new(vec![cos_wave(1.0, 1), cos_wave(0.5, 2)]);
        let pts = p.critical_points();
        assert_eq!(pts.len(), 4);
        let xs: Vec<f64> = pts.iter().map(|c| c.x).collect();
        let expected = [0.0, 2.0 * PI / 3.0, PI, 4.0 * PI / 3.0];
        for (x, e) in xs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-10, "{xs:?}");
        }
        let (lo, hi) = p.extrema();
        assert!((hi - 1.5).abs() < 1e-12);
        assert!((lo - (-0.75)).abs() < 1e-12);
    }

    #[test]
    fn drop_matches_direct_difference() {
        let p = TrigPolynomial1d::new(vec![
            cos_wave(1.0, 1),
            Wave1d { amplitude: -0.3, wave: 3, kind: TrigKind::Sin },
        ]);
        for (e, d) in [(0.3, 0.1), (2.0, -0.7), (5.0, 1.5)] {
            assert!((p.drop_from(e, d) - (p.eval(e) - p.eval(e - d))).abs() < 1e-14);
        }
        assert_eq!(p.drop_from(1.0, 0.0), 0.0);
    }

    #[test]
    fn constant_polynomial_has_no_critical_points() {
        let p = TrigPolynomial1d::new(vec![cos_wave(2.0, 0)]);
        assert!(p.is_constant());
        assert!(p.critical_points().is_empty());
        assert_eq!(p.extrema(), (2.0, 2.0));
    }
}
