//! `anisostable` command-line front end. Every run writes its outputs and a
//! `manifest.json` into `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anisostable::catalog::{run_catalog, Budget};
use anisostable::geometry::Point;
use anisostable::kato::{classify, gamma_estimate, ClassifyConfig};
use anisostable::lab::{green_ratio_test, harnack_test, oracle_closure, ClosureConfig, GreenConfig, HarnackConfig};
use anisostable::potential::{check_continuity, profile_directions, require_transient, ProfileConfig};
use anisostable::{DensityGrid, Error, ExponentEvaluator, PotentialProfile, Simulator, SimulatorConfig, StableModel};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "anisostable", version, about = "Anisotropic α-stable processes: exponent, densities, potentials, regularity checks and simulation")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunArgs {
    /// Seed for every random stream of the run.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// quick: 10⁴ paths, 32 directions, short Kato scans. full: 2·10⁵
    /// paths, 256 directions, full scans.
    #[arg(long, value_enum, default_value_t = BudgetArg::Quick)]
    budget: BudgetArg,
    /// Tolerance: normalization for `density --check` (default 1e-2),
    /// relative quadrature tolerance for `potential` (default 1e-8) and
    /// for the Kato scans of `classify` (default 1e-6).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Model description (JSON: dim, alpha, spectral measure).
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimArgs {
    /// Simulator settings as JSON; fields not given keep their defaults.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    /// Paths per start point (overrides the budget).
    #[arg(long)]
    paths: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum BudgetArg {
    Quick,
    Full,
}

impl BudgetArg {
    fn budget(self) -> Budget {
        match self {
            BudgetArg::Quick => Budget::Quick,
            BudgetArg::Full => Budget::Full,
        }
    }
    fn paths(self) -> usize {
        match self {
            BudgetArg::Quick => 10_000,
            BudgetArg::Full => 200_000,
        }
    }
    fn directions(self) -> usize {
        match self {
            BudgetArg::Quick => 32,
            BudgetArg::Full => 256,
        }
    }
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
enum Cmd {
    /// Φ(θ) on a direction grid (exponent.csv, exponent.json).
    Exponent {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        directions: Option<usize>,
    },
    /// p₁ on a lattice (density.csv); `--check` tests normalization.
    Density {
        #[command(flatten)]
        m: ModelArgs,
        /// Half-width of the lattice (default 8 for d ≤ 2, 2 for d = 3).
        #[arg(long)]
        extent: Option<f64>,
        /// Lattice spacing (default 0.05, 0.1, 0.25 for d = 1, 2, 3).
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        check: bool,
    },
    /// Potential V(θ) on the sphere (potential.csv) and its continuity
    /// verdict (potential.json).
    Potential {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        directions: Option<usize>,
    },
    /// γ-measure and relative Kato classification (classify.json).
    Classify {
        #[command(flatten)]
        m: ModelArgs,
    },
    /// Exit positions and times from the unit ball (exits.csv, simulate.json).
    Simulate {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Start point, comma separated.
        #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
        x: Point,
    },
    /// Harmonic-measure ratios between two start points (harnack.json, harnack.csv).
    Harnack {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
        x1: Point,
        #[arg(long, default_value = "0.5,0,0", value_parser = parse_point)]
        x2: Point,
    },
    /// Simulated Green function against the reference shape (green.json, green.csv).
    Green {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
        x: Point,
    },
    /// Exit distribution three ways: simulation, jump integral of the Green
    /// field, closed form (poisson.json, poisson.csv).
    Poisson {
        #[command(flatten)]
        m: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "0,0,0", value_parser = parse_point)]
        x: Point,
    },
    /// Bundled examples against their expected verdicts (catalog.md, catalog.json).
    Catalog {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.is_empty() || v.len() > 3 {
        return Err(format!("expected 1 to 3 coordinates, got {}", v.len()));
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(&v);
    Ok(p)
}

#[derive(Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    argv: Vec<String>,
    config: &'a Cmd,
    seed: u64,
    version: &'static str,
    model_checksum: Option<String>,
    wall_seconds: f64,
    outputs: Vec<OutputFile>,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Io(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

/// Files written by a command, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    model_checksum: Option<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            model_checksum: None,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let p = self.path(name);
        std::fs::write(p, body)?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let body = serde_json::to_string_pretty(value).map_err(Error::from)?;
        self.text(name, &body)
    }
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn load_model(m: &ModelArgs, out: &mut Outputs) -> Result<StableModel, Failure> {
    let model = StableModel::load(&m.model).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", m.model.display())),
        Error::Json(j) => Failure::Usage(format!("malformed model JSON in {}: {j}", m.model.display())),
        other => Failure::from(other),
    })?;
    out.model_checksum = Some(model.checksum());
    Ok(model)
}

fn sim_config(s: &SimArgs, run: &RunArgs) -> Result<SimulatorConfig, Failure> {
    let mut cfg = match &s.sim_config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            let base = serde_json::to_value(SimulatorConfig::default()).map_err(Error::from)?;
            let patch: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
            let mut merged = base;
            if let (Some(m), Some(p)) = (merged.as_object_mut(), patch.as_object()) {
                for (k, v) in p {
                    m.insert(k.clone(), v.clone());
                }
            } else {
                return Err(Failure::Usage("simulator config must be a JSON object".into()));
            }
            serde_json::from_value(merged).map_err(Error::from)?
        }
        None => SimulatorConfig::default(),
    };
    cfg.seed = run.seed;
    cfg.paths = s.paths.unwrap_or(if s.sim_config.is_some() { cfg.paths } else { run.budget.paths() });
    cfg.validate()?;
    Ok(cfg)
}

fn truncate(p: &Point, d: usize) -> Vec<f64> {
    p[..d].to_vec()
}

fn execute(cmd: &Cmd, out: &mut Outputs) -> Result<(), Failure> {
    match cmd {
        Cmd::Exponent { m, directions } => {
            let model = load_model(m, out)?;
            let eval = ExponentEvaluator::new(&model)?;
            let dirs = profile_directions(model.dim(), directions.unwrap_or(m.run.budget.directions()));
            let d = model.dim();
            let mut csv = String::from(&["x1", "x2", "x3"][..d].join(","));
            csv.push_str(",phi\n");
            let mut phis = Vec::with_capacity(dirs.len());
            for t in &dirs {
                let v = eval.phi_dir(t);
                phis.push(v);
                let c: Vec<String> = t[..d].iter().map(|x| x.to_string()).collect();
                csv.push_str(&format!("{},{}\n", c.join(","), v));
            }
            out.text("exponent.csv", &csv)?;
            let (lo, hi) = eval.phi_extremes();
            out.json(
                "exponent.json",
                &serde_json::json!({
                    "checksum": model.checksum(),
                    "d": d,
                    "alpha": model.alpha(),
                    "phi_constant": eval.phi_constant(),
                    "directions": dirs.len(),
                    "phi_min": lo,
                    "phi_max": hi,
                }),
            )?;
        }
        Cmd::Density { m, extent, spacing, check } => {
            let model = load_model(m, out)?;
            let d = model.dim();
            let eval = ExponentEvaluator::new(&model)?;
            let extent = extent.unwrap_or(if d <= 2 { 8.0 } else { 2.0 });
            let spacing = spacing.unwrap_or([0.05, 0.1, 0.25][d - 1]);
            if !(extent > 0.0 && spacing > 0.0) {
                return Err(Failure::Usage("extent and spacing must be positive".into()));
            }
            let grid = DensityGrid::build_cached(&eval, extent, spacing)?;
            let p = out.path("density.csv");
            grid.write_csv(p)?;
            let (ball, tail) = grid.normalization(model.total_mass());
            let tol = m.run.tol.unwrap_or(1e-2);
            let total = ball + tail;
            out.json(
                "density.json",
                &serde_json::json!({
                    "checksum": model.checksum(),
                    "extent": grid.extent,
                    "spacing": grid.spacing,
                    "points": grid.len(),
                    "mass_in_ball": ball,
                    "tail_estimate": tail,
                    "total": total,
                    "tol": tol,
                }),
            )?;
            if *check && (total - 1.0).abs() > tol {
                return Err(Failure::Numerical(format!(
                    "density normalization {total:.6} (ball {ball:.6} + tail {tail:.6}) is outside 1 ± {tol}"
                )));
            }
        }
        Cmd::Potential { m, directions } => {
            let model = load_model(m, out)?;
            require_transient(&model)?;
            let eval = ExponentEvaluator::new(&model)?;
            let n = directions.unwrap_or(m.run.budget.directions());
            let cfg = ProfileConfig {
                rel_tol: m.run.tol.unwrap_or(ProfileConfig::default().rel_tol),
                ..Default::default()
            };
            let d = model.dim();
            let fine = PotentialProfile::compute(&eval, profile_directions(d, n), cfg)?;
            fine.write_csv(out.path("potential.csv"))?;
            let gamma = gamma_estimate(&model.levy())?;
            let continuity = match d {
                2 => Some(check_continuity(&fine, &fine, gamma.gamma)),
                3 => {
                    let coarse = PotentialProfile::compute(&eval, profile_directions(d, (n / 4).max(8)), cfg)?;
                    Some(check_continuity(&coarse, &fine, gamma.gamma))
                }
                _ => None,
            };
            out.json(
                "potential.json",
                &serde_json::json!({
                    "checksum": model.checksum(),
                    "directions": n,
                    "min_value": fine.min_value(),
                    "divergent": fine.divergent().len(),
                    "vmass_unit_ball": fine.vmass_unit_ball_by_average(),
                    "gamma": gamma.gamma,
                    "continuity": continuity,
                }),
            )?;
        }
        Cmd::Classify { m } => {
            let model = load_model(m, out)?;
            let mut cfg = match m.run.budget {
                BudgetArg::Quick => ClassifyConfig::quick(),
                BudgetArg::Full => ClassifyConfig::default(),
            };
            if let Some(t) = m.run.tol {
                cfg.rk.rel_tol = t;
            }
            let report = classify(&model, &cfg)?;
            out.text("classify.json", &report.to_json())?;
        }
        Cmd::Simulate { m, sim, x } => {
            let model = load_model(m, out)?;
            let cfg = sim_config(sim, &m.run)?;
            let s = Simulator::new(&model, cfg)?;
            let batch = s.run(x);
            batch.write_csv(out.path("exits.csv"))?;
            if batch.occupation.is_some() {
                batch.write_occupation(out.path("occupation.csv"))?;
            }
            let (tau, tau_se) = batch.mean_exit_time();
            out.json(
                "simulate.json",
                &serde_json::json!({
                    "checksum": batch.checksum,
                    "x0": truncate(x, model.dim()),
                    "config": batch.config,
                    "paths": batch.paths.len(),
                    "censored": batch.censored_fraction(),
                    "mean_exit_time": tau,
                    "mean_exit_time_se": tau_se,
                }),
            )?;
        }
        Cmd::Harnack { m, sim, x1, x2 } => {
            let model = load_model(m, out)?;
            let cfg = HarnackConfig {
                x1: *x1,
                x2: *x2,
                sim: sim_config(sim, &m.run)?,
                ..Default::default()
            };
            let report = harnack_test(&model, &cfg)?;
            out.text("harnack.json", &report.to_json()?)?;
            report.write_csv(out.path("harnack.csv"))?;
        }
        Cmd::Green { m, sim, x } => {
            let model = load_model(m, out)?;
            let mut cfg = GreenConfig {
                x: *x,
                ..Default::default()
            };
            let base = cfg.sim.lattice;
            cfg.sim = sim_config(sim, &m.run)?;
            if cfg.sim.lattice == 0 {
                cfg.sim.lattice = base;
            }
            let report = green_ratio_test(&model, &cfg)?;
            out.text("green.json", &report.to_json()?)?;
            report.write_csv(out.path("green.csv"))?;
        }
        Cmd::Poisson { m, sim, x } => {
            let model = load_model(m, out)?;
            let mut cfg = ClosureConfig {
                x: *x,
                ..Default::default()
            };
            let base = cfg.sim.clone();
            let mut s = sim_config(sim, &m.run)?;
            if sim.sim_config.is_none() {
                s = SimulatorConfig {
                    seed: s.seed,
                    paths: s.paths,
                    ..base
                };
            }
            cfg.sim = s;
            let report = oracle_closure(&model, &cfg)?;
            out.text("poisson.json", &report.to_json()?)?;
            report.write_csv(out.path("poisson.csv"))?;
        }
        Cmd::Catalog { run } => {
            let table = run_catalog(run.budget.budget(), run.seed)?;
            out.text("catalog.md", &table.to_markdown())?;
            out.text("catalog.json", &table.to_json())?;
            let bad = table.mismatches();
            if !bad.is_empty() {
                return Err(Failure::Mismatch(format!("expected verdicts not reproduced: {}", bad.join(", "))));
            }
        }
    }
    Ok(())
}

fn run_args(cmd: &Cmd) -> &RunArgs {
    match cmd {
        Cmd::Exponent { m, .. }
        | Cmd::Density { m, .. }
        | Cmd::Potential { m, .. }
        | Cmd::Classify { m }
        | Cmd::Simulate { m, .. }
        | Cmd::Harnack { m, .. }
        | Cmd::Green { m, .. }
        | Cmd::Poisson { m, .. } => &m.run,
        Cmd::Catalog { run } => run,
    }
}

fn name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Exponent { .. } => "exponent",
        Cmd::Density { .. } => "density",
        Cmd::Potential { .. } => "potential",
        Cmd::Classify { .. } => "classify",
        Cmd::Simulate { .. } => "simulate",
        Cmd::Harnack { .. } => "harnack",
        Cmd::Green { .. } => "green",
        Cmd::Poisson { .. } => "poisson",
        Cmd::Catalog { .. } => "catalog",
    }
}

fn write_manifest(cmd: &Cmd, out: &Outputs, started: Instant) -> std::io::Result<()> {
    let mut outputs = Vec::new();
    for f in &out.files {
        outputs.push(OutputFile {
            path: f.clone(),
            sha256: sha256_file(&out.dir.join(f))?,
        });
    }
    let manifest = Manifest {
        subcommand: name(cmd),
        argv: std::env::args().collect(),
        config: cmd,
        seed: run_args(cmd).seed,
        version: env!("CARGO_PKG_VERSION"),
        model_checksum: out.model_checksum.clone(),
        wall_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(out.dir.join("manifest.json"), body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let started = Instant::now();
    let result = Outputs::new(&run_args(&cli.cmd).out).and_then(|mut out| {
        let r = execute(&cli.cmd, &mut out);
        // outputs of a failed verdict are still worth keeping
        if matches!(r, Ok(()) | Err(Failure::Mismatch(_))) {
            write_manifest(&cli.cmd, &out, started)?;
        }
        r
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch(msg)) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
