use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use liouville::dynamics::{check_confinement, integrate_with, IntegrateOptions};
use liouville::geodesics::{d_k_scan, flat_minimal_length, jacobi_minimal_geodesic, SearchOptions};
use liouville::homology::{
    betti, betti_scan, component_count, glue, glue_complex, grid_angle, rasterize_sublevel,
    vertex_values, BettiVector, Field, GluingSpec,
};
use liouville::model::{EnergyLevel, NaturalSystem, PhasePoint, SystemSpec, TrigPotential};
use liouville::observables::separable_integrals;
use liouville::strata::{build_cell_complex, verify_complex, FactorCell, Verdict};

use crate::args::{
    BettiArgs, Cli, Command, GeodesicArgs, GlueArgs, GridArgs, ScanArgs, SimulateArgs, StrataArgs,
    VerifyArgs,
};
use crate::example3::{euler_of_cells, run_battery, BatteryConfig, Status};
use crate::output::{resolution_label, scan_header, RunDir};
use crate::{cell_budget, load_system, svg, CliError, CliResult, Outcome};

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    if cli.threads > 0 {
        // a second call in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let out = cli.out.as_path();
    match &cli.command {
        Command::Betti(a) => betti_cmd(out, &cli.command, a),
        Command::Scan(a) => scan_cmd(out, &cli.command, a),
        Command::Strata(a) => strata_cmd(out, &cli.command, a),
        Command::Simulate(a) => simulate_cmd(out, &cli.command, a),
        Command::Geodesic(a) => geodesic_cmd(out, &cli.command, a),
        Command::Glue(a) => glue_cmd(out, &cli.command, a),
        Command::VerifyExample3(a) => verify_cmd(out, &cli.command, a),
    }
}

/// Everything that determines a run's outputs.
#[derive(Serialize)]
struct HashInput<'a> {
    command: &'a Command,
    system: Option<&'a SystemSpec>,
}

fn run_dir(out: &Path, command: &Command, system: Option<&SystemSpec>) -> CliResult<RunDir> {
    RunDir::create(out, command.name(), &HashInput { command, system })
}

fn finish(dir: RunDir, passed: bool, summary: Vec<String>) -> Outcome {
    let (dir, files) = dir.into_files();
    Outcome {
        passed,
        dir,
        files,
        summary,
    }
}

fn grid_shape(grid: &GridArgs, n: usize) -> CliResult<Vec<usize>> {
    let shape = match grid.resolution.len() {
        1 => vec![grid.resolution[0]; n],
        len if len == n => grid.resolution.clone(),
        len => {
            return Err(CliError::Config(format!(
                "--resolution needs 1 or {n} values, got {len}"
            )))
        }
    };
    if shape.iter().any(|&r| r < 8) {
        return Err(CliError::Config(format!("resolution must be at least 8 per axis, got {shape:?}")));
    }
    Ok(shape)
}

fn warn_ties(energy: f64, ties: usize) {
    if ties > 0 {
        eprintln!(
            "warning: E = {energy} is a degenerate level on this grid: {ties} vertices have |U - E| < 1e-12 and are counted as inside"
        );
    }
}

fn scan_record(energy: f64, b: &BettiVector, cells: &[usize], field: Field, shape: &[usize], wall_ms: f64) -> Vec<String> {
    let mut r = vec![energy.to_string()];
    r.extend(b.betti.iter().map(|x| x.to_string()));
    r.extend(cells.iter().map(|x| x.to_string()));
    r.push(String::from(field));
    r.push(resolution_label(shape));
    r.push(format!("{wall_ms:.3}"));
    r
}

#[derive(Serialize)]
struct LevelJson {
    energy: f64,
    betti: Vec<usize>,
    cells: Vec<usize>,
    euler_characteristic: i64,
    components: usize,
    ties: usize,
}

fn betti_cmd(out: &Path, command: &Command, a: &BettiArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    let n = system.dim();
    let shape = grid_shape(&a.grid, n)?;
    let budget = cell_budget()?;
    let energy = EnergyLevel::new(a.energy)?;
    let mut dir = run_dir(out, command, Some(&spec))?;

    let start = Instant::now();
    let r = rasterize_sublevel(&system.potential, energy, &shape, budget)?;
    let b = betti(&r.complex, a.grid.field)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    warn_ties(a.energy, r.ties);
    let cells = r.complex.cell_counts();

    dir.write_csv(
        "betti.csv",
        &scan_header(n),
        &[scan_record(a.energy, &b, &cells, a.grid.field, &shape, wall_ms)],
    )?;
    dir.write_json(
        "betti.json",
        &serde_json::json!({
            "system": spec,
            "field": a.grid.field,
            "resolution": shape,
            "level": LevelJson {
                energy: a.energy,
                euler_characteristic: r.complex.euler_characteristic(),
                components: component_count(&r.complex),
                betti: b.betti.clone(),
                cells,
                ties: r.ties,
            },
        }),
    )?;
    if a.svg && n == 2 {
        let values = vertex_values(&system.potential, &r.complex);
        let inside: Vec<bool> = (0..r.complex.vertex_count())
            .map(|v| r.complex.contains(0, v))
            .collect();
        let title = format!("{{U <= {}}}, beta = {:?}", a.energy, b.betti);
        dir.write_text("domain.svg", &svg::domain_raster(&title, [shape[0], shape[1]], &values, &inside))?;
    }
    let summary = vec![format!("E = {}: beta = {:?} over {}", a.energy, b.betti, a.grid.field)];
    Ok(finish(dir, true, summary))
}

fn scan_energies(a: &ScanArgs) -> CliResult<Vec<f64>> {
    let mut energies = if a.energies.is_empty() {
        if a.count == 0 || !(a.from <= a.to) {
            return Err(CliError::Config(format!(
                "need --count > 0 and --from <= --to, got {} {} {}",
                a.count, a.from, a.to
            )));
        }
        if a.count == 1 {
            vec![a.from]
        } else {
            (0..a.count)
                .map(|i| a.from + (a.to - a.from) * i as f64 / (a.count - 1) as f64)
                .collect()
        }
    } else {
        a.energies.clone()
    };
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(CliError::Config("energies must be finite".into()));
    }
    energies.sort_by(f64::total_cmp);
    energies.dedup();
    Ok(energies)
}

fn scan_cmd(out: &Path, command: &Command, a: &ScanArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    let n = system.dim();
    let shape = grid_shape(&a.grid, n)?;
    let budget = cell_budget()?;
    let energies = scan_energies(a)?;
    let mut dir = run_dir(out, command, Some(&spec))?;

    let scan = betti_scan(&system.potential, &energies, &shape, a.grid.field, budget)?;
    let records: Vec<Vec<String>> = scan
        .rows
        .iter()
        .map(|r| scan_record(r.energy, &r.betti, &r.cells, a.grid.field, &shape, r.wall_ms))
        .collect();
    for r in &scan.rows {
        warn_ties(r.energy, r.ties);
    }
    dir.write_csv("scan.csv", &scan_header(n), &records)?;
    let levels: Vec<LevelJson> = scan
        .rows
        .iter()
        .map(|r| LevelJson {
            energy: r.energy,
            betti: r.betti.betti.clone(),
            euler_characteristic: euler_of_cells(&r.cells),
            cells: r.cells.clone(),
            components: r.components,
            ties: r.ties,
        })
        .collect();
    dir.write_json(
        "scan.json",
        &serde_json::json!({
            "system": spec,
            "field": a.grid.field,
            "resolution": shape,
            "nested": scan.nested,
            "levels": levels,
        }),
    )?;
    if a.svg {
        let rows: Vec<(f64, Vec<usize>)> = scan.rows.iter().map(|r| (r.energy, r.betti.betti.clone())).collect();
        dir.write_text("betti.svg", &svg::betti_steps("Betti numbers of {U <= E}", &rows))?;
    }
    let summary = scan
        .rows
        .iter()
        .map(|r| format!("E = {}: beta = {:?}", r.energy, r.betti.betti))
        .collect();
    Ok(finish(dir, true, summary))
}

fn strata_cmd(out: &Path, command: &Command, a: &StrataArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    if a.samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    let complex = build_cell_complex(&system)?;
    let integrals = separable_integrals(&system.model, &system.potential)?;
    let report = verify_complex(&complex, &integrals, a.samples, a.seed)?;
    let mut dir = run_dir(out, command, Some(&spec))?;

    let n = system.dim();
    let mut header = vec!["cell".to_string(), "dim".to_string()];
    header.extend((1..=n).map(|i| format!("c_{i}")));
    header.extend(["factor_cells", "layer", "regular"].map(String::from));
    let rows: Vec<Vec<String>> = complex
        .cells
        .iter()
        .map(|cell| {
            let mut r = vec![cell.index.to_string(), cell.dim.to_string()];
            r.extend(cell.representative.iter().map(|c| c.to_string()));
            let factors: Vec<String> = cell
                .factors
                .iter()
                .map(|f| match *f {
                    FactorCell::Value { at } => format!("{{{at}}}"),
                    FactorCell::Interval { lo, hi: Some(hi) } => format!("({lo},{hi})"),
                    FactorCell::Interval { lo, hi: None } => format!("({lo},inf)"),
                })
                .collect();
            r.push(factors.join(" x "));
            let layer: Vec<String> = cell
                .layer
                .iter()
                .map(|s| format!("{}*T^{}xR^{}", s.count, s.torus_rank, s.line_rank))
                .collect();
            r.push(layer.join(" + "));
            r.push(cell.is_regular(n).to_string());
            r
        })
        .collect();
    dir.write_csv("strata.csv", &header, &rows)?;
    dir.write_json(
        "strata.json",
        &serde_json::json!({
            "system": spec,
            "cells_by_dim": complex.count_by_dim(),
            "complex": complex,
            "nondegeneracy": report,
        }),
    )?;
    let summary = vec![
        format!("cells by dimension: {:?}", complex.count_by_dim()),
        format!(
            "non-degeneracy: {:?} (rank checks ok: {}, census stable: {})",
            report.verdict,
            report.rank_ok(),
            report.census_ok()
        ),
    ];
    Ok(finish(dir, report.verdict != Verdict::Fail, summary))
}

fn parse_p0(text: &str, n: usize) -> CliResult<PhasePoint> {
    let parse = |part: &str| -> CliResult<Vec<f64>> {
        part.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Config(format!("bad --p0 entry {t:?}: {e}")))
            })
            .collect()
    };
    let (x, y) = text
        .split_once(';')
        .ok_or_else(|| CliError::Config(format!("--p0 must look like \"x1,..,xn;y1,..,yn\", got {text:?}")))?;
    let (x, y) = (parse(x)?, parse(y)?);
    if x.len() != n || y.len() != n {
        return Err(CliError::Config(format!(
            "--p0 needs {n} positions and {n} momenta, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(PhasePoint::new(x, y)?)
}

fn simulate_cmd(out: &Path, command: &Command, a: &SimulateArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    let n = system.dim();
    let p0 = parse_p0(&a.p0, n)?;
    if !(a.dt > 0.0 && a.dt.is_finite()) || a.steps == 0 || a.stride == 0 {
        return Err(CliError::Config("--dt must be positive and --steps, --stride at least 1".into()));
    }
    let NaturalSystem { model, potential } = &system;
    let options = IntegrateOptions {
        method: a.method,
        stride: a.stride,
    };
    let traj = integrate_with(model, potential, &p0, a.dt, a.steps, options)?;
    let energy = traj.energies()[0];
    let confinement = check_confinement(&traj, potential, energy)?;
    let mut dir = run_dir(out, command, Some(&spec))?;

    let m = traj.integral_count();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("y{i}")));
    header.push("H".into());
    header.extend((1..=m).map(|i| format!("F_{i}")));
    let rows: Vec<Vec<String>> = (0..traj.len())
        .map(|i| {
            let p = traj.point(i);
            let mut r = vec![traj.times()[i].to_string()];
            r.extend(p.x().iter().map(|v| v.to_string()));
            r.extend(p.y().iter().map(|v| v.to_string()));
            r.push(traj.energies()[i].to_string());
            r.extend(traj.integrals(i).iter().map(|v| v.to_string()));
            r
        })
        .collect();
    dir.write_csv("trajectory.csv", &header, &rows)?;
    dir.write_json(
        "simulate.json",
        &serde_json::json!({
            "system": spec,
            "method": a.method,
            "dt": a.dt,
            "steps": a.steps,
            "stride": a.stride,
            "energy": energy,
            "energy_drift": traj.energy_drift(),
            "integral_drift": if m > 0 { Some(traj.recorded_integral_drift()) } else { None },
            "winding_numbers": traj.winding_numbers(),
            "confinement": confinement,
        }),
    )?;
    let mut summary = vec![
        format!("H(0) = {energy}, max |H - H(0)| = {:e}", traj.energy_drift()),
        format!(
            "confinement: max U - E = {:e}, violations {}",
            confinement.max_excursion, confinement.violations
        ),
    ];
    if m > 0 {
        summary.push(format!("max |F_i - F_i(0)| = {:e}", traj.recorded_integral_drift()));
    }
    Ok(finish(dir, confinement.passed, summary))
}

fn geodesic_cmd(out: &Path, command: &Command, a: &GeodesicArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    let n = system.dim();
    if a.class.dim() != n {
        return Err(CliError::Config(format!(
            "--class has {} entries for a system of dimension {n}",
            a.class.dim()
        )));
    }
    if !(1..=8).contains(&a.k_max) {
        return Err(CliError::Config(format!("--k-max must be in 1..=8, got {}", a.k_max)));
    }
    let NaturalSystem { model, potential } = &system;
    let options = SearchOptions {
        segments: a.segments,
        restarts: a.restarts,
        seed: a.seed,
        ..Default::default()
    };
    let res = jacobi_minimal_geodesic(model, potential, a.energy, &a.class, options)?;
    let scan = if a.k_max > 1 {
        Some(d_k_scan(model, potential, a.energy, &a.class, a.k_max, options)?)
    } else {
        None
    };
    let mut dir = run_dir(out, command, Some(&spec))?;

    let flat = flat_minimal_length(model, &a.class)?;
    let (u_min, u_max) = potential.extrema();
    let mut header = vec!["j".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let path = &res.path;
    let rows: Vec<Vec<String>> = (0..=path.segments())
        .map(|j| {
            let mut r = vec![j.to_string()];
            r.extend(path.point(j).iter().map(|v| v.to_string()));
            r
        })
        .collect();
    dir.write_csv("loop.csv", &header, &rows)?;
    dir.write_json(
        "geodesic.json",
        &serde_json::json!({
            "system": spec,
            "class": a.class,
            "energy": a.energy,
            "segments": a.segments,
            "length": res.length,
            "flat_length": flat,
            "lower_bound": (a.energy - u_max).sqrt() * flat,
            "upper_bound": (a.energy - u_min).sqrt() * flat,
            "converged": res.converged,
            "gradient_norm": res.gradient_norm,
            "restarts": res.restarts,
            "best_restart": res.best_restart,
            "seed": res.seed,
            "d_k": scan,
        }),
    )?;
    if a.svg && n == 2 {
        let r = 128;
        let values = grid_values(potential, r)?;
        let points: Vec<[f64; 2]> = (0..=path.segments())
            .map(|j| {
                let p = path.point(j);
                [p[0], p[1]]
            })
            .collect();
        let title = format!("class {:?}, E = {}, L = {:.6}", a.class.entries(), a.energy, res.length);
        dir.write_text("loop.svg", &svg::loop_overlay(&title, [r, r], &values, &points))?;
    }
    let mut summary = vec![format!(
        "class {:?}: length {} (flat {flat}), converged {}",
        a.class.entries(),
        res.length,
        res.converged
    )];
    if let Some(s) = &scan {
        for row in &s.rows {
            summary.push(format!("k = {}: L = {}, d_k = {}", row.k, row.length, row.d_k));
        }
    }
    Ok(finish(dir, res.converged, summary))
}

/// `U` on an `r × r` grid, first axis fastest.
fn grid_values(potential: &TrigPotential, r: usize) -> CliResult<Vec<f64>> {
    let mut out = Vec::with_capacity(r * r);
    for j in 0..r {
        for i in 0..r {
            out.push(potential.eval(&[grid_angle(i, r), grid_angle(j, r)])?);
        }
    }
    Ok(out)
}

fn glue_cmd(out: &Path, command: &Command, a: &GlueArgs) -> CliResult<Outcome> {
    let (spec, system) = load_system(&a.system)?;
    let n = system.dim();
    let shape = grid_shape(&a.grid, n)?;
    if a.copies.len() != n {
        return Err(CliError::Config(format!("--copies needs {n} values, got {}", a.copies.len())));
    }
    let gluing = GluingSpec::new(a.copies.clone())?;
    let budget = cell_budget()?;
    let glued = glue(&system.potential, &gluing)?;
    let refined: Vec<usize> = shape.iter().zip(&a.copies).map(|(r, m)| r * m).collect();
    let mut energies = a.energies.clone();
    energies.sort_by(f64::total_cmp);
    energies.dedup();

    let mut rows = Vec::new();
    let mut levels = Vec::new();
    let mut all_match = true;
    for &e in &energies {
        let level = EnergyLevel::new(e)?;
        let analytic = rasterize_sublevel(&glued, level, &refined, budget)?;
        let block = rasterize_sublevel(&system.potential, level, &shape, budget)?;
        let tiled = glue_complex(&block.complex, &gluing, budget)?;
        let b_analytic = betti(&analytic.complex, a.grid.field)?;
        let b_tiled = betti(&tiled, a.grid.field)?;
        warn_ties(e, analytic.ties.max(block.ties));
        let same = b_analytic == b_tiled && analytic.complex == tiled;
        all_match &= b_analytic == b_tiled;
        let mut r = vec![e.to_string()];
        r.extend(b_analytic.betti.iter().map(|x| x.to_string()));
        r.extend(b_tiled.betti.iter().map(|x| x.to_string()));
        r.push(gluing.blocks().to_string());
        r.push((b_analytic == b_tiled).to_string());
        rows.push(r);
        levels.push(serde_json::json!({
            "energy": e,
            "analytic": b_analytic.betti,
            "glued": b_tiled.betti,
            "block": betti(&block.complex, a.grid.field)?.betti,
            "identical_complexes": same,
        }));
    }
    let mut dir = run_dir(out, command, Some(&spec))?;
    let mut header = vec!["E".to_string()];
    header.extend((0..=n).map(|d| format!("analytic_beta_{d}")));
    header.extend((0..=n).map(|d| format!("glued_beta_{d}")));
    header.extend(["blocks", "match"].map(String::from));
    dir.write_csv("glue.csv", &header, &rows)?;
    dir.write_json(
        "glue.json",
        &serde_json::json!({
            "system": spec,
            "copies": a.copies,
            "field": a.grid.field,
            "resolution": shape,
            "levels": levels,
        }),
    )?;
    let summary = rows
        .iter()
        .map(|r| format!("E = {}: match {}", r[0], r[r.len() - 1]))
        .collect();
    Ok(finish(dir, all_match, summary))
}

fn verify_cmd(out: &Path, command: &Command, a: &VerifyArgs) -> CliResult<Outcome> {
    let mut config = BatteryConfig {
        n: a.n as usize,
        ks: a.k.clone(),
        resolution: a.resolution,
        field: a.field,
        seed: a.seed,
        samples: a.samples.max(1),
        energies: a.energies.clone(),
        budget: cell_budget()?,
    };
    config.validate()?;
    let report = run_battery(&config)?;
    let mut dir = run_dir(out, command, None)?;

    dir.write_json("report.json", &report)?;
    let check_rows: Vec<Vec<String>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.status.to_string(),
                c.name.clone(),
                c.k.map(|k| k.to_string()).unwrap_or_default(),
                c.detail.clone(),
            ]
        })
        .collect();
    dir.write_csv(
        "checks.csv",
        &["status", "check", "k", "detail"].map(String::from),
        &check_rows,
    )?;
    let shape = vec![config.resolution; config.n];
    for &k in &config.ks {
        let records: Vec<Vec<String>> = report
            .rows
            .iter()
            .filter(|r| r.k == k)
            .map(|r| {
                let b = BettiVector {
                    betti: r.betti.clone(),
                    field: config.field,
                };
                scan_record(r.energy, &b, &r.cells, config.field, &shape, r.wall_ms)
            })
            .collect();
        dir.write_csv(&format!("scan-k{k}.csv"), &scan_header(config.n), &records)?;
        if a.svg {
            let rows: Vec<(f64, Vec<usize>)> = report
                .rows
                .iter()
                .filter(|r| r.k == k)
                .map(|r| (r.energy, r.betti.clone()))
                .collect();
            let title = format!("n = {}, k = {k}", config.n);
            dir.write_text(&format!("betti-k{k}.svg"), &svg::betti_steps(&title, &rows))?;
        }
    }
    for r in &report.rows {
        warn_ties(r.energy, r.ties);
    }

    let mut summary: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            let k = c.k.map(|k| format!(" k={k}")).unwrap_or_default();
            format!("{:<5} {}{k}: {}", c.status.to_string(), c.name, c.detail)
        })
        .collect();
    for t in &report.thresholds {
        summary.push(format!(
            "INFO  level {} (E = {}) k={}: {{U <= E}} beta={:?} ties {}, {{U >= E}} beta={:?} ties {}",
            t.level, t.energy, t.k, t.sublevel, t.sublevel_ties, t.superlevel, t.superlevel_ties
        ));
    }
    let fails = report.checks.iter().filter(|c| c.status == Status::Fail).count();
    summary.push(if report.passed {
        "battery: PASS".to_string()
    } else {
        format!("battery: FAIL ({fails} failing checks)")
    });
    Ok(finish(dir, report.passed, summary))
}
