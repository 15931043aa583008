use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use liouville::dynamics::Method;
use liouville::geodesics::{HomotopyClass, DEFAULT_RESTARTS, DEFAULT_SEED};
use liouville::homology::Field;
use liouville::strata::NONDEGENERACY_SEED;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Integrability, strata, homology and geodesics of natural systems on flat tori")]
pub struct Cli {
    /// Output directory. Each run writes into `<out>/<command>-<config hash>/`.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for parallel scans (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Betti numbers of {U ≤ E} at one energy.
    Betti(BettiArgs),
    /// Betti numbers of {U ≤ E} over a list of energies.
    Scan(ScanArgs),
    /// Momentum-map cell complex and the non-degeneracy checks.
    Strata(StrataArgs),
    /// Integrate the equations of motion.
    Simulate(SimulateArgs),
    /// Shortest closed Jacobi geodesic in a homotopy class.
    Geodesic(GeodesicArgs),
    /// Compare analytic and combinatorial gluing of blocks.
    Glue(GlueArgs),
    /// Run the verification battery on Σ cos(k x_i).
    #[command(name = "verify-example3")]
    VerifyExample3(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Betti(_) => "betti",
            Command::Scan(_) => "scan",
            Command::Strata(_) => "strata",
            Command::Simulate(_) => "simulate",
            Command::Geodesic(_) => "geodesic",
            Command::Glue(_) => "glue",
            Command::VerifyExample3(_) => "verify-example3",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SystemArgs {
    /// System specification file (JSON); overrides --system.
    #[arg(long)]
    #[serde(skip)]
    pub spec: Option<PathBuf>,

    /// Bundled system: example3-n2, example3-n3, example3-n2-k2, flat-t2,
    /// anisotropic-n2 or coupled-n2.
    #[arg(long, default_value = "example3-n2")]
    #[serde(skip)]
    pub system: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Grid points per axis; one value is used for every axis.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub resolution: Vec<usize>,

    /// Coefficient field (gf2, gf3 or another prime below 2^15).
    #[arg(long, default_value = "gf2")]
    pub field: Field,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BettiArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Energy level E.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: f64,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Also write an SVG raster of the domain (n = 2 only).
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Comma-separated energies; when absent, --from/--to/--count is used.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energies: Vec<f64>,

    /// Lowest energy of the uniform range.
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub from: f64,

    /// Highest energy of the uniform range.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub to: f64,

    /// Number of energies in the uniform range.
    #[arg(long, default_value_t = 25)]
    pub count: usize,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Also write an SVG step plot of β(E).
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StrataArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Sample points per cell for the rank and census checks.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,

    /// Seed for the sample points.
    #[arg(long, default_value_t = NONDEGENERACY_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Initial point as "x1,x2,...;y1,y2,...".
    #[arg(long, allow_hyphen_values = true)]
    pub p0: String,

    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,

    /// Number of steps.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,

    /// Write every stride-th step to the CSV.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,

    /// Splitting scheme: minimum-error or verlet.
    #[arg(long, default_value = "minimum-error")]
    pub method: Method,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeodesicArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Homotopy class m as comma-separated integers.
    #[arg(long, allow_hyphen_values = true)]
    pub class: HomotopyClass,

    /// Energy E; must exceed max U.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: f64,

    /// Loop segments.
    #[arg(long = "N", default_value_t = 1024)]
    pub segments: usize,

    /// Optimizer starts (the first is the straight line).
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,

    /// Seed for the perturbed starts.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Also scan d_k = L(kα)/k for k = 1..=k_max (requires a primitive class).
    #[arg(long, default_value_t = 1)]
    pub k_max: usize,

    /// Also write an SVG of the loop over the potential (n = 2 only).
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlueArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub system: SystemArgs,

    /// Copies per axis, e.g. 2,2.
    #[arg(long, value_delimiter = ',', required = true)]
    pub copies: Vec<usize>,

    /// Comma-separated energies.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,0.5,2.5")]
    pub energies: Vec<f64>,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Torus dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n: u8,

    /// Wave numbers k; the system for each is Σ cos(k x_i).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<i64>,

    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,

    /// Coefficient field.
    #[arg(long, default_value = "gf2")]
    pub field: Field,

    /// Seed for the non-degeneracy sample points.
    #[arg(long, default_value_t = NONDEGENERACY_SEED)]
    pub seed: u64,

    /// Sample points per momentum cell.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,

    /// Energies to test instead of the Morse-window midpoints.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energies: Vec<f64>,

    /// Also write an SVG step plot of β(E) per k.
    #[arg(long)]
    pub svg: bool,
}
