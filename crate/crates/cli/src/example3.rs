//! Verification battery for `U = Σ cos(k x_i)` on `T^n`.
//!
//! For each `k`: exact involutivity of the separable integrals, the
//! non-degeneracy checks of the momentum map, and Betti numbers of `{U ≤ E}`
//! across the Morse windows of `U`. The windows come from sums of factor
//! critical values, so nothing here is tied to unit amplitudes.

use serde::Serialize;

use liouville::homology::{
    betti, betti_scan, rasterize_sublevel, vertex_values, Field, PeriodicCubicalComplex, ScanRow,
    TIE_TOLERANCE,
};
use liouville::model::{EnergyLevel, NaturalSystem, TrigPotential, TrigTerm};
use liouville::observables::{involution_report, separable_integrals, Observable};
use liouville::strata::{
    build_cell_complex, potential_critical_values, verify_complex, FactorPortrait, Verdict,
};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct BatteryConfig {
    pub n: usize,
    pub ks: Vec<i64>,
    pub resolution: usize,
    pub field: Field,
    pub seed: u64,
    pub samples: usize,
    /// Energies to test; empty means one per Morse window plus one below
    /// and one above the range of `U`.
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub budget: u64,
}

impl BatteryConfig {
    pub fn validate(&mut self) -> CliResult<()> {
        if !(2..=3).contains(&self.n) {
            return Err(CliError::Config(format!("n must be 2 or 3, got {}", self.n)));
        }
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 1) {
            return Err(CliError::Config(format!("k values must be positive, got {:?}", self.ks)));
        }
        self.ks.sort_unstable();
        self.ks.dedup();
        if self.resolution < 8 {
            return Err(CliError::Config(format!("resolution must be at least 8, got {}", self.resolution)));
        }
        if self.energies.iter().any(|e| !e.is_finite()) {
            return Err(CliError::Config("energies must be finite".into()));
        }
        self.energies.sort_by(f64::total_cmp);
        self.energies.dedup();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// Nothing to test (for example an empty domain); not a failure.
    Guard,
    /// Reported for reference only.
    Info,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Guard => "GUARD",
            Status::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub k: Option<i64>,
    pub status: Status,
    pub detail: String,
}

/// Open energy interval between consecutive critical values of `U`.
#[derive(Debug, Clone, Serialize)]
pub struct Window {
    pub label: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub k: i64,
    pub energy: f64,
    pub window: String,
    pub betti: Vec<usize>,
    pub cells: Vec<usize>,
    pub components: usize,
    pub ties: usize,
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Betti numbers at the levels `n − 2` and `n − 3` for both orientations of
/// the domain.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub k: i64,
    pub level: String,
    pub energy: f64,
    pub sublevel: Vec<usize>,
    pub superlevel: Vec<usize>,
    pub sublevel_ties: usize,
    pub superlevel_ties: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KSummary {
    pub k: i64,
    pub brackets_zero: bool,
    pub sum_is_hamiltonian: bool,
    pub nondegeneracy: Verdict,
    pub momentum_cells: usize,
    pub stratum_dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub config: BatteryConfig,
    pub critical_values: Vec<f64>,
    pub windows: Vec<Window>,
    pub systems: Vec<KSummary>,
    pub rows: Vec<EnergyRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn windows(critical: &[f64]) -> Vec<Window> {
    let mut out = vec![Window {
        label: "below".into(),
        lo: None,
        hi: critical.first().copied(),
    }];
    for (i, pair) in critical.windows(2).enumerate() {
        out.push(Window {
            label: format!("W{i}"),
            lo: Some(pair[0]),
            hi: Some(pair[1]),
        });
    }
    out.push(Window {
        label: "above".into(),
        lo: critical.last().copied(),
        hi: None,
    });
    out
}

fn classify(energy: f64, critical: &[f64], windows: &[Window]) -> String {
    if critical.iter().any(|&c| (c - energy).abs() <= 1e-12 * (1.0 + c.abs())) {
        return "critical".into();
    }
    windows
        .iter()
        .find(|w| w.lo.is_none_or(|lo| energy > lo) && w.hi.is_none_or(|hi| energy < hi))
        .map(|w| w.label.clone())
        .unwrap_or_else(|| "critical".into())
}

/// One energy per window: the midpoint, or the nearest of a few fixed
/// offsets from it when the midpoint coincides with a grid value of `U`.
fn default_energies(critical: &[f64], grid_values: &[f64]) -> Vec<f64> {
    let tie_free = |e: f64| grid_values.iter().all(|&u| (u - e).abs() >= TIE_TOLERANCE);
    let pick = |lo: f64, hi: f64| {
        [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65]
            .iter()
            .map(|t| lo + t * (hi - lo))
            .find(|&e| tie_free(e))
            .unwrap_or(0.5 * (lo + hi))
    };
    let (lo, hi) = (critical[0], critical[critical.len() - 1]);
    let mut out = vec![pick(lo - 1.0, lo)];
    out.extend(critical.windows(2).map(|w| pick(w[0], w[1])));
    out.push(pick(hi, hi + 1.0));
    out
}

fn negated(u: &TrigPotential) -> CliResult<TrigPotential> {
    let terms = u
        .terms()
        .iter()
        .map(|t| TrigTerm {
            amplitude: -t.amplitude,
            ..t.clone()
        })
        .collect();
    Ok(TrigPotential::new(u.dim(), terms)?)
}

fn fmt_vec<T: std::fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

/// `Σ (−1)^d x_d`.
pub fn euler_of_cells(cells: &[usize]) -> i64 {
    cells
        .iter()
        .enumerate()
        .map(|(d, &c)| if d % 2 == 0 { c as i64 } else { -(c as i64) })
        .sum()
}

fn euler_of_betti(b: &[usize]) -> i64 {
    euler_of_cells(b)
}

pub fn run_battery(config: &BatteryConfig) -> CliResult<BatteryReport> {
    let n = config.n;
    let shape = vec![config.resolution; n];
    let mut checks = Vec::new();
    let mut systems = Vec::new();
    let mut rows = Vec::new();
    let mut thresholds = Vec::new();
    let mut report_critical = Vec::new();
    let mut report_windows = Vec::new();
    let mut mid_beta1: Vec<(i64, Option<usize>)> = Vec::new();

    for &k in &config.ks {
        let system = NaturalSystem::cosine_family(&vec![k; n])?;
        let (model, u) = (&system.model, &system.potential);

        let integrals = separable_integrals(model, u)?;
        let h = Observable::hamiltonian(model, u)?;
        let involution = involution_report(&integrals, Some(&h))?;
        let sum = integrals
            .iter()
            .try_fold(Observable::zero(n), |acc, f| acc.checked_add(f))?;
        let sum_is_h = sum.canonicalize() == h.canonicalize();
        checks.push(Check {
            name: "involution".into(),
            k: Some(k),
            status: if involution.passed && sum_is_h { Status::Pass } else { Status::Fail },
            detail: format!(
                "{} brackets, {} nonzero; sum of integrals equals H: {sum_is_h}",
                involution.entries.len(),
                involution.failures().count()
            ),
        });

        let complex = build_cell_complex(&system)?;
        let nondeg = verify_complex(&complex, &integrals, config.samples, config.seed)?;
        checks.push(Check {
            name: "nondegeneracy".into(),
            k: Some(k),
            status: if nondeg.verdict == Verdict::Pass { Status::Pass } else { Status::Fail },
            detail: format!(
                "{} cells, {} rank checks, {} census checks, stratum dims {:?}, verdict {:?}",
                nondeg.cells,
                nondeg.rank_checks.len(),
                nondeg.census_checks.len(),
                nondeg.stratum_dims,
                nondeg.verdict
            ),
        });
        systems.push(KSummary {
            k,
            brackets_zero: involution.passed,
            sum_is_hamiltonian: sum_is_h,
            nondegeneracy: nondeg.verdict,
            momentum_cells: nondeg.cells,
            stratum_dims: nondeg.stratum_dims.clone(),
        });

        let portraits = FactorPortrait::of_system(&system)?;
        let critical = potential_critical_values(&portraits);
        let wins = windows(&critical);
        let energies = if config.energies.is_empty() {
            let grid = PeriodicCubicalComplex::empty_with_budget(&shape, config.budget)?;
            default_energies(&critical, &vertex_values(u, &grid))
        } else {
            config.energies.clone()
        };
        let scan = betti_scan(u, &energies, &shape, config.field, config.budget)?;
        let wells = (k as usize).pow(n as u32);
        let mut euler_ok = true;
        let mut first_mid = None;
        for row in &scan.rows {
            let label = classify(row.energy, &critical, &wins);
            let b = &row.betti.betti;
            euler_ok &= euler_of_cells(&row.cells) == euler_of_betti(b);
            let check = |name: &str, ok: bool, detail: String| Check {
                name: name.into(),
                k: Some(k),
                status: if ok { Status::Pass } else { Status::Fail },
                detail,
            };
            let shown = format!("E={} beta={}", row.energy, fmt_vec(b));
            match label.as_str() {
                "below" => {
                    let empty = b.iter().all(|&x| x == 0);
                    checks.push(Check {
                        name: "empty-domain guard".into(),
                        k: Some(k),
                        status: if empty { Status::Guard } else { Status::Fail },
                        detail: format!("{shown}; {{U <= E}} is empty below min U"),
                    });
                }
                "W0" => {
                    let ok = b[0] == wells && b[1..].iter().all(|&x| x == 0) && row.components == wells;
                    checks.push(check(
                        "bottom window",
                        ok,
                        format!("{shown}, union-find components {}; expect beta_0 = k^n = {wells}", row.components),
                    ));
                }
                "W1" => {
                    let expect = (n - 1) * wells + 1;
                    let ok = b[0] == 1 && b[1] == expect;
                    checks.push(check(
                        "mid window",
                        ok,
                        format!("{shown}; expect beta_0 = 1, beta_1 = (n-1)k^n+1 = {expect}"),
                    ));
                    if first_mid.is_none() {
                        first_mid = Some(b[1]);
                    }
                }
                "above" => {
                    let ok = (0..=n).all(|d| b[d] == binomial(n, d));
                    checks.push(check("full torus", ok, format!("{shown}; expect beta_d = C(n,d)")));
                }
                _ => checks.push(Check {
                    name: format!("window {label}"),
                    k: Some(k),
                    status: Status::Info,
                    detail: format!("{shown}, grid ties {}", row.ties),
                }),
            }
            rows.push(energy_row(k, label, row));
        }
        checks.push(Check {
            name: "euler identity".into(),
            k: Some(k),
            status: if euler_ok { Status::Pass } else { Status::Fail },
            detail: format!("{} complexes", scan.rows.len()),
        });
        mid_beta1.push((k, first_mid));

        let minus_u = negated(u)?;
        for (level, e) in [("n-2", n as f64 - 2.0), ("n-3", n as f64 - 3.0)] {
            let sub = rasterize_sublevel(u, EnergyLevel::new(e)?, &shape, config.budget)?;
            let sup = rasterize_sublevel(&minus_u, EnergyLevel::new(-e)?, &shape, config.budget)?;
            thresholds.push(ThresholdRow {
                k,
                level: level.into(),
                energy: e,
                sublevel: betti(&sub.complex, config.field)?.betti,
                superlevel: betti(&sup.complex, config.field)?.betti,
                sublevel_ties: sub.ties,
                superlevel_ties: sup.ties,
            });
        }

        if report_critical.is_empty() {
            report_critical = critical;
            report_windows = wins;
        }
    }

    let growth = if mid_beta1.len() < 2 {
        Check {
            name: "beta_1 growth".into(),
            k: None,
            status: Status::Info,
            detail: "needs at least two k values".into(),
        }
    } else if mid_beta1.iter().any(|(_, b)| b.is_none()) {
        Check {
            name: "beta_1 growth".into(),
            k: None,
            status: Status::Info,
            detail: "no tested energy in window W1 for some k".into(),
        }
    } else {
        let values: Vec<usize> = mid_beta1.iter().map(|(_, b)| b.unwrap()).collect();
        let ok = values.windows(2).all(|w| w[0] < w[1]);
        Check {
            name: "beta_1 growth".into(),
            k: None,
            status: if ok { Status::Pass } else { Status::Fail },
            detail: format!("beta_1 in W1 for k = {:?}: {:?}", config.ks, values),
        }
    };
    checks.push(growth);

    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(BatteryReport {
        config: config.clone(),
        critical_values: report_critical,
        windows: report_windows,
        systems,
        rows,
        thresholds,
        checks,
        passed,
    })
}

fn energy_row(k: i64, window: String, row: &ScanRow) -> EnergyRow {
    EnergyRow {
        k,
        energy: row.energy,
        window,
        betti: row.betti.betti.clone(),
        cells: row.cells.clone(),
        components: row.components,
        ties: row.ties,
        wall_ms: row.wall_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_and_classification() {
        let critical = vec![-2.0, 0.0, 2.0];
        let w = windows(&critical);
        assert_eq!(w.len(), 4);
        assert_eq!(classify(-3.0, &critical, &w), "below");
        assert_eq!(classify(-1.0, &critical, &w), "W0");
        assert_eq!(classify(0.5, &critical, &w), "W1");
        assert_eq!(classify(0.0, &critical, &w), "critical");
        assert_eq!(classify(2.5, &critical, &w), "above");
        assert_eq!(default_energies(&critical, &[]), vec![-2.5, -1.0, 1.0, 2.5]);
        assert_eq!(default_energies(&critical, &[-1.0, 1.0]), vec![-2.5, -1.1, 0.9, 2.5]);
    }

    #[test]
    fn binomials() {
        assert_eq!((0..=3).map(|d| binomial(3, d)).collect::<Vec<_>>(), vec![1, 3, 3, 1]);
    }
}
