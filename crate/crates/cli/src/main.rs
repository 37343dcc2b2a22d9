//! `twoaxis`: plan, certify and cross-check two-axis rotation decompositions.

mod target;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use twoaxis::config::{make_config, AxisConfig};
use twoaxis::oracle::{graph_search, word_descent, OracleResult};
use twoaxis::par;
use twoaxis::patterns::catalog;
use twoaxis::plan_json::{plan_from_json, plan_to_json, to_string_precise};
use twoaxis::pmp::{check_plan, PmpReport};
use twoaxis::rotations::{quat_distance, quat_exp, Quat, Vec3};
use twoaxis::solver::{plan, realize, segments_cost, SolverError};

use target::{parse_quat, parse_vec3, TargetSpec};

/// Realization residual a certified plan must meet.
const VERIFY_RESIDUAL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "twoaxis", version, about = "Minimum-cost rotations about two fixed axes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal decomposition of one target, as Plan JSON.
    Plan(PlanArgs),
    /// Certify a Plan JSON file.
    Verify(VerifyArgs),
    /// Cost along a one-parameter family of rotations about a fixed axis, as CSV.
    Sweep(SweepArgs),
    /// The optimal pattern catalog for an axis configuration.
    Patterns(AxisArgs),
    /// Brute-force cost estimate.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct AxisArgs {
    /// Angle between the axes, radians unless --degrees.
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Cost of a unit turn about the second axis.
    #[arg(long)]
    kappa: f64,
    /// Read every input angle in degrees.
    #[arg(long)]
    degrees: bool,
}

#[derive(Args)]
struct TargetArgs {
    /// quat:a,b,c,d | axis-angle:x,y,z:angle | matrix:<9 row-major> | euler:X=..,Y=..,Z=..
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    /// Quaternion mapping the caller's coordinates to canonical ones.
    #[arg(long, allow_hyphen_values = true)]
    frame: Option<String>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    axes: AxisArgs,
    #[command(flatten)]
    target: TargetArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    axes: AxisArgs,
    /// Rotation axis x,y,z
    #[arg(long, allow_hyphen_values = true)]
    axis: String,
    /// First angle of the sweep
    #[arg(long, allow_hyphen_values = true)]
    t_min: f64,
    /// Last angle of the sweep
    #[arg(long, allow_hyphen_values = true)]
    t_max: f64,
    /// Number of rows, endpoints included
    #[arg(long)]
    steps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Uniform-cost search over a quantized rotation grid.
    Graph,
    /// Local optimization of every short control word.
    Descent,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    axes: AxisArgs,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, value_enum, default_value = "descent")]
    method: Method,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0.02)]
    quant: f64,
    #[arg(long, default_value_t = 4)]
    max_segments: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
}

/// Axis configuration after folding α > π/2 onto π − α.
struct Setup {
    cfg: AxisConfig,
    /// Set when Y was replaced by −Y; targets are then conjugated by a half
    /// turn about X.
    reflected: bool,
}

impl Setup {
    fn new(args: &AxisArgs) -> Result<Setup> {
        let alpha = if args.degrees { args.alpha.to_radians() } else { args.alpha };
        let reflected = alpha > FRAC_PI_2 && alpha < PI;
        let cfg = make_config(if reflected { PI - alpha } else { alpha }, args.kappa)?;
        if reflected {
            eprintln!(
                "note: alpha > pi/2, planning with Y -> -Y (alpha = {}); targets are conjugated by a half turn about X",
                cfg.alpha
            );
        }
        Ok(Setup { cfg, reflected })
    }

    fn canonical(&self, q: Quat) -> Quat {
        if self.reflected {
            let h = quat_exp(Vec3::E1 * FRAC_PI_2);
            h * q * h.conj()
        } else {
            q
        }
    }

    fn target(&self, args: &TargetArgs, degrees: bool) -> Result<Quat> {
        let mut q = TargetSpec::parse(&args.target, degrees)?.to_quat()?;
        if let Some(f) = &args.frame {
            let f = parse_quat(f).context("--frame")?;
            q = f * q * f.conj();
        }
        Ok(self.canonical(q))
    }
}

/// Writes one line to stdout. A closed pipe is not an error.
fn say(line: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => say(text),
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<ExitCode> {
    let setup = Setup::new(&args.axes)?;
    let q = setup.target(&args.target, args.axes.degrees)?;
    match plan(&setup.cfg, q) {
        Ok(p) => {
            emit(&plan_to_json(&p)?, args.target.json_out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ SolverError::Incomplete(_)) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    residual: f64,
    residual_pass: bool,
    recomputed_cost: f64,
    pmp: PmpReport,
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let p = plan_from_json(&text)?;
    let cfg = make_config(p.alpha, p.kappa)?;
    if !p.target.is_unit(1e-9) {
        bail!("plan target is not a unit quaternion");
    }
    let residual = quat_distance(realize(&cfg, &p.segments), p.target);
    let pmp = check_plan(&cfg, &p);
    let residual_pass = residual <= VERIFY_RESIDUAL;
    let report = VerifyReport {
        pass: residual_pass && pmp.pass,
        residual,
        residual_pass,
        recomputed_cost: segments_cost(&cfg, &p.segments),
        pmp,
    };
    emit(&to_string_precise(&report)?, args.json_out.as_ref())?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

/// Known optimum for α = π/2, κ = 1 about Z.
fn example_cost(t: f64) -> f64 {
    let mut t = t.abs().rem_euclid(2.0 * PI);
    if t > PI {
        t = 2.0 * PI - t;
    }
    // cos t1 = 1/(c + s) and cos t2 = c - s, both with sine sqrt(sin t)
    let (s, c) = (0.5 * t).sin_cos();
    let r = t.sin().max(0.0).sqrt();
    let t1 = r.atan();
    let t2 = r.atan2(c - s);
    (2.0 * (t1 + t2)).min(PI + t)
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let setup = Setup::new(&args.axes)?;
    let axis = parse_vec3(&args.axis)?.normalized().context("zero sweep axis")?;
    if args.steps == 0 {
        bail!("--steps must be positive");
    }
    let scale = if args.axes.degrees { PI / 180.0 } else { 1.0 };
    let (lo, hi) = (args.t_min * scale, args.t_max * scale);
    let closed = !setup.reflected
        && (setup.cfg.alpha - FRAC_PI_2).abs() < 1e-12
        && (setup.cfg.kappa - 1.0).abs() < 1e-12
        && (axis.z - 1.0).abs() < 1e-12;
    say("t,planner_cost,pattern_id,closed_form_cost")?;
    for i in 0..args.steps {
        let t = if args.steps == 1 { lo } else { lo + (hi - lo) * i as f64 / (args.steps - 1) as f64 };
        let q = setup.canonical(quat_exp(axis * (0.5 * t)));
        let p = match plan(&setup.cfg, q) {
            Ok(p) => p,
            Err(e @ SolverError::Incomplete(_)) => {
                eprintln!("error at t = {t}: {e}");
                return Ok(ExitCode::from(2));
            }
            Err(e) => return Err(e.into()),
        };
        let cf = if closed { example_cost(t).to_string() } else { String::new() };
        say(&format!("{t},{},{},{cf}", p.total_cost, p.pattern_label()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_patterns(args: &AxisArgs) -> Result<ExitCode> {
    let setup = Setup::new(args)?;
    say(&format!("regime: {:?}", setup.cfg.regime))?;
    say(&format!("{:<5} {:<52} {:<10} constraints", "id", "word", "orbit"))?;
    for p in catalog(&setup.cfg) {
        say(&format!("{:<5} {:<52} {:<10} {}", p.id.as_str(), p.word(), p.orbit.notation(), p.constraint_label()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: &OracleArgs) -> Result<ExitCode> {
    let setup = Setup::new(&args.axes)?;
    let q = setup.target(&args.target, args.axes.degrees)?;
    let r: OracleResult = match args.method {
        Method::Graph => graph_search(&setup.cfg, q, args.delta, args.quant)?,
        Method::Descent => word_descent(&setup.cfg, q, args.max_segments, args.restarts)?,
    };
    emit(&to_string_precise(&r)?, args.target.json_out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Ok(n) = std::env::var("TWOAXIS_THREADS") {
        let n: usize = n.trim().parse().context("TWOAXIS_THREADS must be a positive integer")?;
        par::set_thread_count(n);
    }
    match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Patterns(a) => cmd_patterns(a),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
