//! The `lrgas` command-line front end.
//!
//! Settings come from an optional plain-text config file with `[section]`
//! headers and `key=value` lines; command-line flags override file values.
//!
//! ```text
//! [potential]
//! kind=power_plateau
//! r=0.5
//! M=10
//!
//! [grid]
//! m=256
//!
//! [window]
//! rho=0.23
//! dxi=0.02
//! delta=0.01
//! ```
//!
//! Exit codes: 0 success, 1 internal error, 2 infeasible or unconverged,
//! 3 configuration or usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::ensemble::{enumerate_entropy, mcmc_sample_with, EnsembleWindow, McmcOptions};
use crate::error::{Error, Result};
use crate::format::{round_sig, sig};
use crate::functional::{density_n, entropy_h, xi as xi_of, OccupancyProfile};
use crate::lattice::{energy_density, particle_density, LatticeConfig};
use crate::potential::{key_values, Potential, PotentialKind};
use crate::solver::{Solver, SolverOptions};
use crate::transition::{feasibility_probe, scan_transition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_UNCONVERGED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "lrgas", version, about = "Microcanonical lattice gases with long-range pair interactions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Config file with [section] headers and key=value lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for CSV/JSON outputs.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Random seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Number of grid cells m.
    #[arg(long, global = true, value_name = "M")]
    pub grid: Option<usize>,
    /// Power-law exponent r of the plateau potential.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Plateau height M of the plateau potential.
    #[arg(long, global = true)]
    pub plateau: Option<f64>,
    /// Use the constant potential ψ ≡ J instead.
    #[arg(long, global = true, value_name = "J")]
    pub constant: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct WindowArgs {
    /// Target energy density ξ.
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Target energy as an offset from the curve λρ².
    #[arg(long, allow_negative_numbers = true, conflicts_with = "xi")]
    pub dxi: Option<f64>,
    /// Target particle density ρ.
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the integrated interaction λ.
    Lambda,
    /// Maximize the entropy at (ξ, ρ).
    Solve {
        #[command(flatten)]
        target: WindowArgs,
        /// Also report every seed's candidate.
        #[arg(long)]
        all: bool,
    },
    /// Scan the entropy across the curve ξ = λρ².
    Scan {
        /// Particle density ρ.
        #[arg(long)]
        rho: Option<f64>,
        /// Comma-separated positive offsets.
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Swap-move Monte Carlo in the microcanonical window.
    Sample {
        /// Number of lattice sites.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        target: WindowArgs,
        /// Half-width of the energy window.
        #[arg(long)]
        delta: Option<f64>,
        /// Proposals per chain.
        #[arg(long)]
        steps: Option<usize>,
        /// Independent chains.
        #[arg(long)]
        chains: Option<usize>,
        /// Average raw samples without aligning their peaks.
        #[arg(long)]
        no_align: bool,
        /// Start chains from the rounded solver optimizer.
        #[arg(long)]
        from_optimizer: bool,
    },
    /// Count window configurations exhaustively.
    Enumerate {
        /// Number of lattice sites.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        target: WindowArgs,
        /// Half-width of the energy window.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Energies of the three window profiles at density ρ.
    Feasibility {
        /// Particle density ρ.
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Evaluate a profile CSV or a lattice configuration.
    Eval {
        /// Profile CSV with a cell_center,value header.
        #[arg(long, value_name = "CSV")]
        profile: Option<PathBuf>,
        /// Lattice file: "d n" on the first line, then the 0/1 occupancy.
        #[arg(long, value_name = "PATH")]
        lattice: Option<PathBuf>,
    },
}

/// Parsed `[section]` / `key=value` file.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    sections: BTreeMap<String, Vec<(usize, String, String)>>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("potential", &["kind", "r", "M", "J", "samples", "periodic", "d"]),
    ("grid", &["m"]),
    ("solver", &["constraint_tol", "el_tol", "max_newton", "noise_floor", "damping"]),
    ("window", &["xi", "dxi", "rho", "delta"]),
    ("sample", &["n", "steps", "chains", "burn_in", "smoothing", "align", "from_optimizer"]),
    ("enumerate", &["n"]),
    ("scan", &["rho", "deltas"]),
    ("run", &["out", "workers", "seed"]),
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Vec<(usize, String, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        let mut pending: Vec<(usize, &str)> = Vec::new();
        let flush = |sections: &mut BTreeMap<String, Vec<(usize, String, String)>>,
                     current: &Option<String>,
                     pending: &mut Vec<(usize, &str)>|
         -> Result<()> {
            let pairs = key_values(pending.drain(..))?;
            if pairs.is_empty() {
                return Ok(());
            }
            let Some(name) = current else {
                return Err(Error::Config { line: pairs[0].0, message: "key outside of any [section]".into() });
            };
            let allowed = KNOWN.iter().find(|(s, _)| s == name).map(|(_, k)| *k).unwrap_or(&[]);
            for (line, key, _) in &pairs {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::Config { line: *line, message: format!("unknown key `{key}` in [{name}]") });
                }
            }
            sections.entry(name.clone()).or_default().extend(pairs);
            Ok(())
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if let Some(rest) = trimmed.strip_prefix('[') {
                flush(&mut sections, &current, &mut pending)?;
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .ok_or_else(|| Error::Config { line, message: format!("malformed section header `{trimmed}`") })?;
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config { line, message: format!("unknown section [{name}]") });
                }
                current = Some(name.to_string());
            } else {
                pending.push((line, raw));
            }
        }
        flush(&mut sections, &current, &mut pending)?;
        Ok(ConfigFile { sections })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&(usize, String, String)> {
        self.sections.get(section)?.iter().rev().find(|(_, k, _)| k == key)
    }

    fn get<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some((line, _, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config { line: *line, message: format!("[{section}] {key}: cannot parse `{v}`") }),
        }
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.entry(section, key).map(|(l, _, v)| (*l, v.as_str()))
    }

    fn potential(&self) -> Result<Option<Potential>> {
        match self.sections.get("potential") {
            None => Ok(None),
            Some(pairs) => Potential::from_pairs(pairs).map(Some),
        }
    }
}

/// Settings after merging defaults, the config file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: Potential,
    pub grid: usize,
    pub solver: SolverOptions,
    pub xi: Option<f64>,
    pub dxi: Option<f64>,
    pub rho: Option<f64>,
    pub delta: f64,
    pub n: Option<usize>,
    pub steps: usize,
    pub chains: usize,
    pub burn_in: f64,
    pub smoothing: Option<usize>,
    pub align: bool,
    pub from_optimizer: bool,
    pub deltas: Vec<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: u64,
}

fn cfg_err(message: impl Into<String>) -> Error {
    Error::Config { line: 0, message: message.into() }
}

fn parse_deltas(text: &str, line: usize) -> Result<Vec<f64>> {
    let ds: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config { line, message: format!("bad delta `{s}`") }))
        .collect::<Result<_>>()?;
    if ds.is_empty() {
        return Err(Error::Config { line, message: "delta list is empty".into() });
    }
    if ds.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config { line, message: "deltas must be positive".into() });
    }
    Ok(ds)
}

impl RunConfig {
    pub fn build(file: &ConfigFile, common: &Common) -> Result<Self> {
        let mut potential = file.potential()?.unwrap_or_else(|| Potential::power_plateau(0.5, 10.0).expect("valid"));
        if let Some(j) = common.constant {
            potential = Potential::constant(j, 1).map_err(|e| cfg_err(e.to_string()))?;
        } else if common.r.is_some() || common.plateau.is_some() {
            let (r0, m0) = match potential.kind {
                PotentialKind::PowerLawPlateau { r, plateau } => (r, plateau),
                _ => (0.5, 10.0),
            };
            let kind = PotentialKind::PowerLawPlateau { r: common.r.unwrap_or(r0), plateau: common.plateau.unwrap_or(m0) };
            potential = Potential::new(kind, potential.periodic, 1).map_err(|e| cfg_err(e.to_string()))?;
        }
        let defaults = SolverOptions::default();
        let solver = SolverOptions {
            constraint_tol: file.get("solver", "constraint_tol")?.unwrap_or(defaults.constraint_tol),
            el_tol: file.get("solver", "el_tol")?.unwrap_or(defaults.el_tol),
            max_newton: file.get("solver", "max_newton")?.unwrap_or(defaults.max_newton),
            noise_floor: file.get("solver", "noise_floor")?.unwrap_or(defaults.noise_floor),
            damping: file.get("solver", "damping")?.unwrap_or(defaults.damping),
            ..defaults
        };
        for (name, v) in [
            ("constraint_tol", solver.constraint_tol),
            ("el_tol", solver.el_tol),
            ("noise_floor", solver.noise_floor),
            ("damping", solver.damping),
        ] {
            if !(v > 0.0) {
                return Err(cfg_err(format!("[solver] {name} must be positive")));
            }
        }
        let grid = common.grid.or(file.get("grid", "m")?).unwrap_or(256);
        if grid < 2 {
            return Err(cfg_err("grid m must be at least 2"));
        }
        let deltas = match file.raw("scan", "deltas") {
            Some((line, text)) => parse_deltas(text, line)?,
            None => vec![0.005, 0.01, 0.02],
        };
        let delta: f64 = file.get("window", "delta")?.unwrap_or(0.01);
        let out = common.out.clone().or(file.get::<String>("run", "out")?.map(PathBuf::from));
        let workers = common.workers.or(file.get("run", "workers")?);
        if workers == Some(0) {
            return Err(cfg_err("workers must be at least 1"));
        }
        Ok(RunConfig {
            potential,
            grid,
            solver,
            xi: file.get("window", "xi")?,
            dxi: file.get("window", "dxi")?,
            rho: file.get("window", "rho")?.or(file.get("scan", "rho")?),
            delta,
            n: file.get("sample", "n")?.or(file.get("enumerate", "n")?),
            steps: file.get("sample", "steps")?.unwrap_or(1_000_000),
            chains: file.get("sample", "chains")?.unwrap_or(4),
            burn_in: file.get("sample", "burn_in")?.unwrap_or(0.2),
            smoothing: file.get("sample", "smoothing")?,
            align: file.get("sample", "align")?.unwrap_or(true),
            from_optimizer: file.get("sample", "from_optimizer")?.unwrap_or(false),
            deltas,
            out,
            workers,
            seed: common.seed.or(file.get("run", "seed")?).unwrap_or(0),
        })
    }

    fn apply_window(&mut self, w: &WindowArgs) {
        if w.xi.is_some() {
            self.xi = w.xi;
            self.dxi = None;
        }
        if w.dxi.is_some() {
            self.dxi = w.dxi;
            self.xi = None;
        }
        if w.rho.is_some() {
            self.rho = w.rho;
        }
    }

    fn require_rho(&self) -> Result<f64> {
        self.rho.ok_or_else(|| cfg_err("missing ρ (--rho or [window] rho)"))
    }

    /// Target energy: explicit ξ, or λρ² + dξ.
    fn target_xi(&self, rho: f64) -> Result<f64> {
        match (self.xi, self.dxi) {
            (Some(x), _) => Ok(x),
            (None, Some(d)) => Ok(self.potential.lambda()? * rho * rho + d),
            (None, None) => Err(cfg_err("missing ξ (--xi, --dxi or [window] xi/dxi)")),
        }
    }
}

/// Outcome of a command: printable text and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn meta(command: &str, cfg: &RunConfig) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "seed": cfg.seed,
        "grid": cfg.grid,
        "potential": cfg.potential.to_config_block(),
    })
}

/// Rounds every number to 12 significant digits; non-finite numbers are
/// already null.
fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => json!(round_sig(x)),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

fn document(command: &str, cfg: &RunConfig, result: Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "meta": meta(command, cfg),
        "result": rounded(result),
    });
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

fn write_out(cfg: &RunConfig, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)
            .map_err(|e| cfg_err(format!("output directory {} not writable: {e}", dir.display())))?;
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn cmd_lambda(cfg: &RunConfig) -> Result<Outcome> {
    let lambda = cfg.potential.lambda()?;
    let mut csv = format!("quantity,value\nlambda,{}\n", sig(lambda));
    let quad = (cfg.potential.dimension == 1).then(|| cfg.potential.lambda_quadrature_1d());
    if let Some(q) = quad {
        csv.push_str(&format!("lambda_quadrature,{}\n", sig(q)));
    }
    write_out(cfg, "lambda.csv", &csv)?;
    write_out(cfg, "lambda.json", &document("lambda", cfg, json!({ "lambda": lambda, "lambda_quadrature": quad })))?;
    Ok(Outcome { stdout: format!("{}\n", sig(lambda)), code: EXIT_OK })
}

fn cmd_solve(cfg: &RunConfig, all: bool) -> Result<Outcome> {
    let rho = cfg.require_rho()?;
    let xi = cfg.target_xi(rho)?;
    let solver = Solver::with_options(
        Solver::for_potential(&cfg.potential, cfg.grid)?.kernel().clone(),
        cfg.solver.clone(),
    );
    let candidates = solver.solve_all(xi, rho, None)?;
    let best = crate::solver::select_best(candidates.clone());
    let mut result = serde_json::to_value(&best)?;
    result["target"] = json!({ "xi": xi, "rho": rho });
    if all {
        result["candidates"] = serde_json::to_value(&candidates)?;
    }
    let doc = document("solve", cfg, result);
    write_out(cfg, "solve.json", &doc)?;
    write_out(cfg, "profile.csv", &best.profile.to_csv_string())?;
    Ok(Outcome { stdout: doc, code: if best.converged { EXIT_OK } else { EXIT_UNCONVERGED } })
}

fn cmd_scan(cfg: &RunConfig) -> Result<Outcome> {
    let rho = cfg.require_rho()?;
    let scan = scan_transition(&cfg.potential, rho, &cfg.deltas, cfg.grid)?;
    let mut summary = scan.summary_json();
    summary["points"] = serde_json::to_value(&scan.points)?;
    let doc = document("scan", cfg, summary);
    write_out(cfg, "scan.csv", &scan.to_csv_string())?;
    write_out(cfg, "scan.json", &doc)?;
    let ok = scan.points.iter().all(|p| p.converged);
    Ok(Outcome { stdout: doc, code: if ok { EXIT_OK } else { EXIT_UNCONVERGED } })
}

fn cmd_sample(cfg: &RunConfig) -> Result<Outcome> {
    let rho = cfg.require_rho()?;
    let xi = cfg.target_xi(rho)?;
    let n = cfg.n.ok_or_else(|| cfg_err("missing lattice size (--n or [sample] n)"))?;
    let window = EnsembleWindow::new(xi, rho, cfg.delta).map_err(|e| cfg_err(e.to_string()))?;
    let init = if cfg.from_optimizer {
        let m = cfg.grid.min(n);
        let solver = Solver::with_options(Solver::for_potential(&cfg.potential, m)?.kernel().clone(), cfg.solver.clone());
        Some(solver.solve(xi, rho, None)?.profile)
    } else {
        None
    };
    let opts = McmcOptions { burn_in: cfg.burn_in, align: cfg.align, smoothing: cfg.smoothing, init, ..McmcOptions::default() };
    let stats = match mcmc_sample_with(n, &cfg.potential, &window, cfg.steps, cfg.chains, cfg.seed, &opts) {
        Err(e @ Error::Initialization { .. }) => {
            let doc = document("sample", cfg, json!({ "error": e.to_string() }));
            write_out(cfg, "sample.json", &doc)?;
            return Ok(Outcome { stdout: doc, code: EXIT_UNCONVERGED });
        }
        other => other?,
    };
    for w in &stats.warnings {
        eprintln!("warning: {w}");
    }
    let doc = document("sample", cfg, serde_json::to_value(&stats)?);
    write_out(cfg, "sample.json", &doc)?;
    write_out(cfg, "sample_profile.csv", &stats.mean_profile.to_csv_string())?;
    Ok(Outcome { stdout: doc, code: EXIT_OK })
}

fn cmd_enumerate(cfg: &RunConfig) -> Result<Outcome> {
    let rho = cfg.require_rho()?;
    let xi = cfg.target_xi(rho)?;
    let n = cfg.n.ok_or_else(|| cfg_err("missing lattice size (--n or [enumerate] n)"))?;
    let window = EnsembleWindow::new(xi, rho, cfg.delta).map_err(|e| cfg_err(e.to_string()))?;
    let record = enumerate_entropy(n, &cfg.potential, &window)?;
    let csv = record.to_csv_string();
    write_out(cfg, "enumerate.csv", &csv)?;
    write_out(cfg, "enumerate.json", &document("enumerate", cfg, serde_json::to_value(&record)?))?;
    Ok(Outcome { stdout: csv, code: EXIT_OK })
}

fn cmd_feasibility(cfg: &RunConfig) -> Result<Outcome> {
    let rho = cfg.require_rho()?;
    let rep = feasibility_probe(&cfg.potential, rho)?;
    let mut csv = String::from("profile,closed_form,grid\n");
    for (name, (a, b)) in ["packed", "constant", "split"].iter().zip([rep.xi1, rep.xi2, rep.xi3].iter().zip(rep.grid)) {
        csv.push_str(&format!("{name},{},{}\n", sig(*a), sig(b)));
    }
    write_out(cfg, "feasibility.csv", &csv)?;
    write_out(cfg, "feasibility.json", &document("feasibility", cfg, serde_json::to_value(&rep)?))?;
    let mut text = format!(
        "xi1 {}\nxi2 {}\nxi3 {}\ninterior {}\n",
        sig(rep.xi1),
        sig(rep.xi2),
        sig(rep.xi3),
        rep.ordered
    );
    if let Some(f) = &rep.failure {
        text.push_str(&format!("note {f}\n"));
    }
    Ok(Outcome { stdout: text, code: if rep.ordered { EXIT_OK } else { EXIT_UNCONVERGED } })
}

fn cmd_eval(cfg: &RunConfig, profile: Option<&Path>, lattice: Option<&Path>) -> Result<Outcome> {
    let result = match (profile, lattice) {
        (Some(p), None) => {
            let file = fs::File::open(p).map_err(|e| cfg_err(format!("cannot open {}: {e}", p.display())))?;
            let f = OccupancyProfile::read_csv(std::io::BufReader::new(file))?;
            let k = cfg.potential.cell_kernel(f.m())?;
            let h = entropy_h(&f);
            json!({ "m": f.m(), "H": h, "S": -h, "xi": xi_of(&f, &k)?, "N": density_n(&f) })
        }
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?;
            let c: LatticeConfig = text.parse()?;
            json!({
                "d": c.d(),
                "n": c.n(),
                "energy_density": energy_density(&c, &cfg.potential)?,
                "particle_density": particle_density(&c),
            })
        }
        _ => return Err(cfg_err("eval needs exactly one of --profile or --lattice")),
    };
    let doc = document("eval", cfg, result);
    write_out(cfg, "eval.json", &doc)?;
    Ok(Outcome { stdout: doc, code: EXIT_OK })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::Parse(_)
        | Error::Precondition(_)
        | Error::Unsupported(_)
        | Error::InvalidPotential(_)
        | Error::Domain { .. }
        | Error::EnumerationTooLarge { .. } => EXIT_CONFIG,
        Error::Initialization { .. } => EXIT_UNCONVERGED,
        _ => EXIT_INTERNAL,
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let mut cfg = RunConfig::build(&file, &cli.common)?;
    if let Some(w) = cfg.workers {
        // fails harmlessly if a pool already exists in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match &cli.command {
        Command::Lambda => cmd_lambda(&cfg),
        Command::Solve { target, all } => {
            cfg.apply_window(target);
            cmd_solve(&cfg, *all)
        }
        Command::Scan { rho, deltas } => {
            if let Some(r) = rho {
                cfg.rho = Some(*r);
            }
            if let Some(d) = deltas {
                cfg.deltas = parse_deltas(d, 0)?;
            }
            cmd_scan(&cfg)
        }
        Command::Sample { n, target, delta, steps, chains, no_align, from_optimizer } => {
            cfg.apply_window(target);
            cfg.n = n.or(cfg.n);
            cfg.delta = delta.unwrap_or(cfg.delta);
            cfg.steps = steps.unwrap_or(cfg.steps);
            cfg.chains = chains.unwrap_or(cfg.chains);
            cfg.align &= !no_align;
            cfg.from_optimizer |= from_optimizer;
            cmd_sample(&cfg)
        }
        Command::Enumerate { n, target, delta } => {
            cfg.apply_window(target);
            cfg.n = n.or(cfg.n);
            cfg.delta = delta.unwrap_or(cfg.delta);
            cmd_enumerate(&cfg)
        }
        Command::Feasibility { rho } => {
            if let Some(r) = rho {
                cfg.rho = Some(*r);
            }
            cmd_feasibility(&cfg)
        }
        Command::Eval { profile, lattice } => cmd_eval(&cfg, profile.as_deref(), lattice.as_deref()),
    }
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sections_and_line_numbers() {
        let text = "# experiment\n[potential]\nkind=power_plateau\nr=0.5\nM=4\n\n[grid]\nm=64\n[window]\nrho=0.2\n";
        let file = ConfigFile::parse(text).unwrap();
        let common = Cli::parse_from(["lrgas", "lambda"]).common;
        let cfg = RunConfig::build(&file, &common).unwrap();
        assert_eq!(cfg.grid, 64);
        assert_eq!(cfg.rho, Some(0.2));
        assert!((cfg.potential.lambda().unwrap() - 4.0).abs() < 1e-12);

        let err = ConfigFile::parse("[grid]\nm=64\n[bogus]\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        let err = ConfigFile::parse("[grid]\nsize=64\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = ConfigFile::parse("m=64\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        let file = ConfigFile::parse("[grid]\n\nm=abc\n").unwrap();
        assert!(matches!(RunConfig::build(&file, &common), Err(Error::Config { line: 3, .. })));
        let file = ConfigFile::parse("[potential]\nkind=power_plateau\nr=1.5\nM=1\n").unwrap();
        assert!(RunConfig::build(&file, &common).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("[grid]\nm=64\n[run]\nseed=5\n").unwrap();
        let common = Cli::parse_from(["lrgas", "--grid", "32", "--plateau", "4", "lambda"]).common;
        let cfg = RunConfig::build(&file, &common).unwrap();
        assert_eq!(cfg.grid, 32);
        assert_eq!(cfg.seed, 5);
        assert!((cfg.potential.lambda().unwrap() - 4.0).abs() < 1e-12);
        let common = Cli::parse_from(["lrgas", "lambda", "--constant", "3"]).common;
        assert_eq!(RunConfig::build(&file, &common).unwrap().potential.lambda().unwrap(), 3.0);
    }

    #[test]
    fn delta_lists() {
        assert_eq!(parse_deltas("0.005, 0.01,0.02", 0).unwrap(), vec![0.005, 0.01, 0.02]);
        assert!(parse_deltas("", 4).is_err());
        assert!(parse_deltas("0.01,-0.1", 4).is_err());
    }

    #[test]
    fn numbers_rounded_in_documents() {
        let v = rounded(json!({ "a": 0.1 + 0.2, "b": [1.0 / 3.0], "c": 7 }));
        assert_eq!(v["a"], json!(0.3));
        assert_eq!(v["b"][0], json!(0.333333333333));
        assert_eq!(v["c"], json!(7));
    }
}
