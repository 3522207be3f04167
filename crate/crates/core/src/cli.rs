//! Command-line front end: configuration loading, run directories and JSON
//! reports.
//!
//! Every subcommand parses and validates its whole configuration before
//! computing anything, and writes files only once the computation is done.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::charspec::{double_root_speed, real_roots, speed_bounds, CharParams};
use crate::dns::{measure_speed, simulate, SimFile};
use crate::error::{Error, Result};
use crate::greens::apply_A;
use crate::lattice::{lattice_lambda, shift_match, Kernel, LatticeModel};
use crate::nonlinearity::{NonlinearitySpec, SpecFile};
use crate::profile::Profile;
use crate::solver::{solve_front, Numerics};
use crate::speedscan::{classify, estimate_cstar_with, ScanOptions, SpeedScanReport};

/// Exit code for an unknown subcommand.
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "wavefront", version, about = "Traveling wavefronts of delayed monostable reaction-diffusion equations")]
struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// No diagnostics on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Spec file or run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the hypotheses on g.
    ValidateG {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Accept nondecreasing g (lattice runs).
        #[arg(long)]
        relaxed: bool,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
    },
    /// Positive roots of the characteristic function at g'(0) = p.
    CharRoots {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        p: f64,
    },
    /// c_# and the upper bound for c_* of a spec.
    SpeedBounds {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Solve for the front at speed c.
    SolveFront {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        h: Option<f64>,
        /// Converged front at a slower speed (CSV) for continuation.
        #[arg(long)]
        seed: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Apply the Green's kernel operator once to a profile.
    #[command(name = "apply-A")]
    ApplyA {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        profile: PathBuf,
        /// Speed (default: the one stored with the profile).
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the minimal speed and classify the critical front.
    MinSpeed {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Skip the spreading-speed estimator.
        #[arg(long)]
        no_dns: bool,
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Classify at a known c_*, taken from --c-star or from the last
    /// min-speed report in the run directory.
    Classify {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        c_star: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Direct simulation from a simulation file.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Level tracked for the speed estimate (relative to kappa).
        #[arg(long, default_value_t = 0.5)]
        level: f64,
    },
    /// gamma_sharp, lambda and its multiplicity for a lattice model.
    LatticeChar {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Shift aligning two profiles.
    ShiftMatch {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

/// Run configuration. A bare spec file is accepted in its place.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default)]
    pub numerics: NumericsFile,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub spec: SpecFile,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    /// Lattice coupling.
    #[serde(default, rename = "D")]
    pub d: Option<f64>,
    /// Lattice kernel.
    #[serde(default)]
    pub beta: Option<Kernel>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsFile {
    pub step: Option<f64>,
    pub tail_level: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub run_dir: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)?;
        let cfg = if value.get("problem").is_some() {
            serde_json::from_value(value)?
        } else {
            let spec: SpecFile = serde_json::from_value(value)?;
            RunConfig {
                problem: Problem { spec, h: None, c: None, d: None, beta: None },
                numerics: NumericsFile::default(),
                outputs: Outputs::default(),
            }
        };
        cfg.numerics()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::from_file(self.problem.spec.clone())
    }

    pub fn numerics(&self) -> Result<Numerics> {
        let d = Numerics::default();
        let n = &self.numerics;
        let num = Numerics {
            step: n.step.unwrap_or(d.step),
            tail_level: n.tail_level.unwrap_or(d.tail_level),
            tol: n.tol.unwrap_or(d.tol),
            max_iter: n.max_iter.unwrap_or(d.max_iter),
            ..d
        };
        if !(num.step > 0.0 && num.tail_level > 0.0 && num.tail_level < 1.0 && num.tol > 0.0 && num.max_iter > 0) {
            return Err(Error::config("numerics: step, tail_level, tol and max_iter must be positive (tail_level < 1)"));
        }
        Ok(num)
    }

    /// `h` from the flag, else from the config.
    pub fn delay(&self, flag: Option<f64>) -> Result<f64> {
        let h = flag.or(self.problem.h).ok_or_else(|| Error::config("no delay given (--h or problem.h)"))?;
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::config(format!("delay must be nonnegative, got {h}")));
        }
        Ok(h)
    }
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    quiet: bool,
}

impl Ctx<'_> {
    fn emit(&mut self, v: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(v)?;
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Reports go to `out`.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        // only the first call in a process can size the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let mut ctx = Ctx { out, quiet: cli.quiet };
    match run(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            if !ctx.quiet {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

fn run(cmd: Command, ctx: &mut Ctx) -> Result<i32> {
    match cmd {
        Command::ValidateG { cfg, relaxed, samples } => {
            let spec = RunConfig::load(&cfg.config)?.spec()?;
            let report = if relaxed { spec.validate_h_relaxed(samples)? } else { spec.validate_h(samples)? };
            ctx.emit(&report)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::CharRoots { c, h, p } => {
            let params = CharParams::new(c, h, p)?;
            let (c_sharp, _) = double_root_speed(h, p)?;
            let roots = real_roots(&params)
                .ok_or_else(|| Error::domain(format!("no real roots at c = {c} below c_# = {c_sharp}")))?;
            ctx.emit(&json!({
                "c_sharp": c_sharp,
                "c_star_upper": c_sharp,
                "lambda1": roots.lambda1,
                "lambda2": roots.lambda2,
                "degenerate": roots.degenerate,
            }))?;
            Ok(0)
        }
        Command::SpeedBounds { cfg, h } => {
            let rc = RunConfig::load(&cfg.config)?;
            let (spec, h) = (rc.spec()?, rc.delay(h)?);
            let b = speed_bounds(&spec, h)?;
            ctx.emit(&json!({
                "c_sharp": b.c_sharp,
                "c_star_upper": b.c_star_upper,
                "lambda1": b.lambda_sharp,
                "lambda2": b.lambda_sharp,
                "degenerate": true,
            }))?;
            Ok(0)
        }
        Command::SolveFront { cfg, c, h, seed, out, run_dir } => {
            let rc = RunConfig::load(&cfg.config)?;
            let (spec, h, num) = (rc.spec()?, rc.delay(h)?, rc.numerics()?);
            let seed = seed.map(Profile::read_csv).transpose()?;
            let run_dir = run_dir.or(rc.outputs.run_dir.clone());
            let r = solve_front(&spec, c, h, &num, seed.as_ref())?;
            let report = json!({
                "c": c,
                "h": h,
                "converged": r.report.converged,
                "iterations": r.report.iterations,
                "residual": r.report.final_residual,
                "bracket_gap": finite_or_null(r.report.bracket_gap),
                "decay": r.decay.map(|d| json!({"rate": d.rate, "degree": d.poly_degree, "r_squared": d.r_squared})),
                "strategy": r.strategy,
                "note": r.report.note,
            });
            if let Some(path) = &out {
                r.profile.write_csv(path)?;
            }
            if let Some(dir) = &run_dir {
                let rd = RunDir::open(dir, &rc)?;
                rd.write_json("solve_front", &report)?;
                r.profile.write_csv(rd.fresh("front", "csv"))?;
            }
            ctx.emit(&report)?;
            Ok(if r.report.converged { 0 } else { 2 })
        }
        Command::ApplyA { cfg, profile, c, h, out } => {
            let spec = RunConfig::load(&cfg.config)?.spec()?;
            let phi = Profile::read_csv(&profile)?;
            let (c, h) = (c.unwrap_or(phi.c()), h.unwrap_or(phi.h()));
            let next = apply_A(&phi, &spec, c, h)?;
            let change = phi.values().iter().zip(next.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if let Some(path) = &out {
                next.write_csv(path)?;
            }
            ctx.emit(&json!({ "c": c, "h": h, "nodes": phi.len(), "sup_change": change }))?;
            Ok(0)
        }
        Command::MinSpeed { cfg, h, tol, no_dns, run_dir } => {
            let rc = RunConfig::load(&cfg.config)?;
            let (spec, h, num) = (rc.spec()?, rc.delay(h)?, rc.numerics()?);
            let run_dir = run_dir.or(rc.outputs.run_dir.clone());
            let rd = run_dir.as_ref().map(|d| RunDir::open(d, &rc)).transpose()?;
            ctx.note(&format!("bisecting the existence predicate for h = {h}"));
            let report = estimate_cstar_with(&spec, h, tol, &ScanOptions { num, dns: !no_dns })?;
            if let Some(rd) = &rd {
                rd.write_json("min_speed", &report)?;
            }
            ctx.emit(&report)?;
            Ok(0)
        }
        Command::Classify { cfg, h, c_star, tol, run_dir } => {
            let rc = RunConfig::load(&cfg.config)?;
            let (spec, h, num) = (rc.spec()?, rc.delay(h)?, rc.numerics()?);
            let run_dir = run_dir.or(rc.outputs.run_dir.clone());
            let c_star = match (c_star, &run_dir) {
                (Some(c), _) => c,
                (None, Some(dir)) => {
                    let cached: SpeedScanReport = RunDir::latest_json(dir, "min_speed")?;
                    ctx.note(&format!("using c_star = {} from {}", cached.c_star, dir.display()));
                    cached.c_star
                }
                (None, None) => {
                    ctx.note("no cached c_star: running the existence bisection");
                    estimate_cstar_with(&spec, h, tol, &ScanOptions { num, dns: false })?.c_star
                }
            };
            let (classification, evidence, notes) = classify(&spec, h, c_star, tol, &num)?;
            let report = json!({
                "c_star": c_star,
                "classification": classification,
                "evidence": evidence,
                "notes": notes,
            });
            if let Some(dir) = &run_dir {
                RunDir::open(dir, &rc)?.write_json("classify", &report)?;
            }
            ctx.emit(&report)?;
            Ok(0)
        }
        Command::Simulate { cfg, snapshot_every, out, level } => {
            let text = std::fs::read_to_string(&cfg.config)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", cfg.config.display())))?;
            let file: SimFile = serde_json::from_str(&text)?;
            let mut sim = file.into_config()?;
            if let Some(k) = snapshot_every {
                sim.record_every = k.max(1);
            }
            let traj = simulate(&sim)?;
            let kappa = traj.kappa;
            let speed = measure_speed(&traj, level * kappa);
            let files = traj.write_snapshots(&out)?;
            let report = match speed {
                Ok(s) => json!({
                    "snapshots": files.len(),
                    "level": s.level,
                    "speed": s.speed,
                    "stderr": s.stderr,
                    "fit_from": s.fit_from,
                    "boundary_margin": s.boundary_margin,
                    "note": s.note,
                }),
                Err(e) => json!({ "snapshots": files.len(), "speed": null, "note": e.to_string() }),
            };
            std::fs::write(out.join("speed.json"), serde_json::to_string_pretty(&report)?)?;
            ctx.emit(&report)?;
            Ok(0)
        }
        Command::LatticeChar { cfg, c } => {
            let rc = RunConfig::load(&cfg.config)?;
            let spec = rc.spec()?;
            let p = &rc.problem;
            let c = c.or(p.c).ok_or_else(|| Error::config("no speed given (--c or problem.c)"))?;
            let model = LatticeModel::new(
                p.d.unwrap_or(1.0),
                p.beta.clone().unwrap_or_else(Kernel::delta),
                rc.delay(None).unwrap_or(0.0),
                spec,
                c,
            )?;
            ctx.emit(&lattice_lambda(&model)?)?;
            Ok(0)
        }
        Command::ShiftMatch { a, b } => {
            let (a, b) = (Profile::read_csv(&a)?, Profile::read_csv(&b)?);
            ctx.emit(&shift_match(&a, &b)?)?;
            Ok(0)
        }
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Append-only run directory: a copy of the configuration plus numbered
/// reports and arrays.
struct RunDir {
    dir: PathBuf,
}

impl RunDir {
    fn open(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let rd = RunDir { dir: dir.to_path_buf() };
        let copy = dir.join("config.json");
        if !copy.exists() {
            std::fs::write(&copy, serde_json::to_string_pretty(cfg)?)?;
        }
        Ok(rd)
    }

    /// `stem.ext`, or `stem.N.ext` with the first free `N`.
    fn fresh(&self, stem: &str, ext: &str) -> PathBuf {
        let first = self.dir.join(format!("{stem}.{ext}"));
        if !first.exists() {
            return first;
        }
        (1..).map(|n| self.dir.join(format!("{stem}.{n}.{ext}"))).find(|p| !p.exists()).unwrap()
    }

    fn write_json(&self, stem: &str, v: &impl Serialize) -> Result<PathBuf> {
        let path = self.fresh(stem, "json");
        std::fs::write(&path, serde_json::to_string_pretty(v)?)?;
        Ok(path)
    }

    fn latest_json<T: for<'de> Deserialize<'de>>(dir: &Path, stem: &str) -> Result<T> {
        let mut path = dir.join(format!("{stem}.json"));
        if !path.exists() {
            return Err(Error::config(format!("no {stem}.json in {}", dir.display())));
        }
        for n in 1.. {
            let next = dir.join(format!("{stem}.{n}.json"));
            if !next.exists() {
                break;
            }
            path = next;
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
