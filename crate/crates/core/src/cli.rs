//! Command-line front end: argument parsing and the command implementations.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::billiard::{BilliardMap, Orientation, PhasePoint};
use crate::curve::{presets, ConvexCurve, CurveShape, CurveSpec};
use crate::error::{Error, Result};
use crate::generating::{derivative_table, twist_scan, TwistScan};
use crate::geometry::PlanePoint;
use crate::io::{conjugate_csv, derivative_csv, fmt_f64, orbit_csv, portrait_csv, to_json};
use crate::jacobi::{conjugate_scan, ConjugateRow};
use crate::quadrature::DEFAULT_PHI_NODES;
use crate::rigidity::{rigidity_report, ConjugateSummary, ReportSettings, DEFAULT_T_MAX, EQUALITY_TOL, SANTALO_REL_TOL};
use crate::verify::{run_suite, Fault, VerifySettings, VerifySummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Verify,
    Rigidity,
    Portrait,
    TwistScan,
    ConjugateScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    Ccw,
    Cw,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Ccw => Orientation::Ccw,
            OrientationArg::Cw => Orientation::Cw,
        }
    }
}

/// Outer billiard laboratory: orbits, generating-function checks, Jacobi
/// fields and the integral rigidity report.
#[derive(Debug, Clone, Parser)]
#[command(name = "outer-billiard", version)]
pub struct RunConfig {
    /// Curve JSON file, or `preset:circle`, `preset:ellipse`, `preset:fourier`.
    #[arg(long)]
    pub curve: String,
    #[arg(long, value_enum)]
    pub cmd: Command,
    /// Orbit seed in the plane.
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
    pub seed: Option<Vec<f64>>,
    /// Orbit length (simulate, portrait).
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Angle nodes for quadratures and scans (power of two, at least 64).
    #[arg(long, default_value_t = DEFAULT_PHI_NODES)]
    pub phi_grid: usize,
    /// Chord-parameter nodes for the twist scan (power of two, at least 64).
    #[arg(long, default_value_t = 256)]
    pub t_grid: usize,
    /// Truncation of the chord parameter (analytic tails beyond it).
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub t_max: f64,
    /// Santalo point tolerance relative to the curve diameter.
    #[arg(long, default_value_t = SANTALO_REL_TOL)]
    pub tol: f64,
    /// Tolerance for classifying an inequality as an equality.
    #[arg(long, default_value_t = EQUALITY_TOL)]
    pub equality_tol: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum, default_value_t = OrientationArg::Ccw)]
    pub orientation: OrientationArg,
    /// Append a conjugate-point scan to the rigidity report.
    #[arg(long)]
    pub conjugate_scan: bool,
    /// Seeds per axis of the conjugate-point scan grid.
    #[arg(long, default_value_t = 40)]
    pub scan_grid: usize,
    /// Largest chord parameter of the conjugate-point scan.
    #[arg(long, default_value_t = 3.0)]
    pub scan_t_max: f64,
    /// Iterations per seed in the conjugate-point scan.
    #[arg(long, default_value_t = 10_000)]
    pub n_max: usize,
    /// Portrait seeds along the ray at angle zero.
    #[arg(long, default_value_t = 16)]
    pub portrait_seeds: usize,
    #[arg(long, hide = true)]
    pub fault_s12_sign_flip: bool,
}

/// What a command produced: the text to write and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let grid_ok = |n: usize| n >= 64 && n.is_power_of_two();
        if !grid_ok(self.phi_grid) {
            return Err(Error::Config(format!("--phi-grid must be a power of two >= 64, got {}", self.phi_grid)));
        }
        if !grid_ok(self.t_grid) {
            return Err(Error::Config(format!("--t-grid must be a power of two >= 64, got {}", self.t_grid)));
        }
        for (name, v) in [("--tol", self.tol), ("--equality-tol", self.equality_tol), ("--scan-t-max", self.scan_t_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_max >= 10.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("--t-max must be at least 10, got {}", self.t_max)));
        }
        if self.workers == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        if self.scan_grid == 0 {
            return Err(Error::Config("--scan-grid must be positive".into()));
        }
        Ok(())
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

pub fn load_curve(source: &str) -> Result<ConvexCurve> {
    if let Some(name) = source.strip_prefix("preset:") {
        return match name {
            "circle" => Ok(presets::unit_circle()),
            "ellipse" => Ok(presets::ellipse_2_1()),
            "fourier" => Ok(presets::trefoil_005()),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        };
    }
    let text = std::fs::read_to_string(source)?;
    Ok(CurveSpec::from_json(&text)?.build()?)
}

/// Loads the curve and runs one command on a dedicated worker pool.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let curve = load_curve(&config.curve)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(config, &curve))
}

fn dispatch(config: &RunConfig, curve: &ConvexCurve) -> Result<Outcome> {
    let ok = |text: String| Ok(Outcome { text, exit_code: 0 });
    match config.cmd {
        Command::Simulate => ok(simulate(config, curve)?),
        Command::Portrait => ok(portrait(config, curve)?),
        Command::Verify => {
            let summary = verify(config, curve);
            let exit_code = if summary.passed { 0 } else { 1 };
            Ok(Outcome { text: json(&summary)?, exit_code })
        }
        Command::Rigidity => ok(rigidity(config, curve)?),
        Command::TwistScan => ok(twist(config, curve)?),
        Command::ConjugateScan => {
            let rows = scan(config, curve)?;
            match config.format_or(Format::Json) {
                Format::Csv => ok(conjugate_csv(&rows)),
                Format::Json => ok(json(&rows)?),
            }
        }
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    to_json(value).map_err(|e| Error::Config(e.to_string()))
}

fn seed_point(config: &RunConfig, curve: &ConvexCurve) -> Result<PhasePoint> {
    let seed = match config.seed.as_deref() {
        Some([x, y]) => PlanePoint::new(*x, *y),
        Some(_) => return Err(Error::Config("--seed takes two numbers".into())),
        None => return Err(Error::Config("--seed X Y is required".into())),
    };
    PhasePoint::from_cartesian(curve, seed).map_err(|e| Error::Config(format!("invalid seed: {e}")))
}

#[derive(Serialize)]
struct OrbitRow {
    n: usize,
    x: f64,
    y: f64,
    p: f64,
    phi: f64,
}

fn simulate(config: &RunConfig, curve: &ConvexCurve) -> Result<String> {
    let seed = seed_point(config, curve)?;
    let map = BilliardMap::with_orientation(curve, config.orientation.into());
    let orbit = map.orbit(&seed, config.steps)?;
    let mut text = match config.format_or(Format::Csv) {
        Format::Json => {
            let rows: Vec<OrbitRow> = orbit
                .iter()
                .enumerate()
                .map(|(n, a)| OrbitRow { n, x: a.cartesian.x, y: a.cartesian.y, p: a.p, phi: a.phi })
                .collect();
            return json(&rows);
        }
        Format::Csv => orbit_csv(&orbit),
    };
    if let CurveShape::Ellipse { a, b } = curve.shape() {
        // Orbits of an ellipse stay on one homothetic ellipse.
        let level = |pt: &PhasePoint| {
            let d = pt.cartesian - curve.origin();
            (d.x / a).powi(2) + (d.y / b).powi(2)
        };
        let base = level(&orbit[0]);
        let spread = orbit.iter().map(|pt| (level(pt) - base).abs() / base).fold(0.0, f64::max);
        let _ = writeln!(
            text,
            "# homothetic ellipse invariant x^2/a^2+y^2/b^2: initial {} max relative deviation {}",
            fmt_f64(base),
            fmt_f64(spread)
        );
    }
    Ok(text)
}

fn portrait(config: &RunConfig, curve: &ConvexCurve) -> Result<String> {
    let map = BilliardMap::with_orientation(curve, config.orientation.into());
    let mut orbits = Vec::with_capacity(config.portrait_seeds);
    for j in 1..=config.portrait_seeds {
        let t = config.scan_t_max * j as f64 / config.portrait_seeds as f64;
        let seed = PhasePoint::from_chord(curve, 0.0, t)?;
        orbits.push(map.orbit(&seed, config.steps)?);
    }
    match config.format_or(Format::Csv) {
        Format::Csv => Ok(portrait_csv(&orbits)),
        Format::Json => {
            let rows: Vec<Vec<OrbitRow>> = orbits
                .iter()
                .map(|o| {
                    o.iter()
                        .enumerate()
                        .map(|(n, a)| OrbitRow { n, x: a.cartesian.x, y: a.cartesian.y, p: a.p, phi: a.phi })
                        .collect()
                })
                .collect();
            json(&rows)
        }
    }
}

fn verify(config: &RunConfig, curve: &ConvexCurve) -> VerifySummary {
    let settings = VerifySettings {
        phi_grid: 256,
        t_grid: config.t_grid,
        fault: config.fault_s12_sign_flip.then_some(Fault::S12SignFlip),
        ..Default::default()
    };
    run_suite(curve, &settings)
}

#[derive(Serialize)]
struct TwistReport {
    scan: TwistScan,
    twist_holds: bool,
}

fn twist(config: &RunConfig, curve: &ConvexCurve) -> Result<String> {
    // The quadrature default of 2048 angle nodes is far finer than a scan needs.
    let phi_grid = config.phi_grid.min(256);
    let t_max = config.t_max.min(20.0);
    match config.format_or(Format::Json) {
        Format::Csv => Ok(derivative_csv(&derivative_table(curve, phi_grid, config.t_grid, t_max))),
        Format::Json => {
            let scan = twist_scan(curve, phi_grid, config.t_grid, t_max);
            json(&TwistReport { twist_holds: scan.max_s12 < 0.0, scan })
        }
    }
}

fn scan(config: &RunConfig, curve: &ConvexCurve) -> Result<Vec<ConjugateRow>> {
    Ok(conjugate_scan(curve, config.scan_grid, config.scan_grid, config.scan_t_max, config.n_max)?)
}

fn rigidity(config: &RunConfig, curve: &ConvexCurve) -> Result<String> {
    let settings = ReportSettings {
        phi_grid: config.phi_grid,
        t_max: config.t_max,
        santalo_tol: config.tol,
        equality_tol: config.equality_tol,
        ..Default::default()
    };
    let (mut report, centred) = rigidity_report(curve, &settings)?;
    if config.conjugate_scan {
        let rows = scan(config, &centred)?;
        report.conjugate_scan =
            Some(ConjugateSummary::from_rows(&rows, config.scan_grid, config.scan_grid, config.scan_t_max, config.n_max));
    }
    debug_assert!(report.bs_product <= PI * PI + 1e-6);
    json(&report)
}
