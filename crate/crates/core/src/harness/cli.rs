//! The `reorder-line` command line. Exit status is 0 on success, 1 when a
//! verification fails and 2 on bad usage or unreadable input.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use crate::bounds::{
    eta_grid, verify_f_bound, verify_induction_steps, verify_tau_dominated, BoundTable, Grid,
    VerifyReport,
};
use crate::genesis::{build_instance, separation_params, MAX_ELL};
use crate::model::{replay_schedule, validate_instance, Schedule};
use crate::optsolve::{SolveError, SolveLimits, Solver};
use crate::policies::{simulate, PolicyId};

use super::experiment::{csv_string, run_separation, SeparationConfig, DEFAULT_ELL_LIMIT};
use super::format::{
    instance_to_json, read_instance, read_schedule, report_to_json, schedule_to_json, write_atomic,
};
use super::svg::render_svg;
use super::{is_open_unit, parse_rational, RationalParseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "reorder-line", version, about = "Reordering buffers on a line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an adversarial instance.
    Gen(GenArgs),
    /// Run an online policy on an instance.
    Simulate(SimulateArgs),
    /// Solve an instance exactly.
    Solve(SolveArgs),
    /// Recurrence tables and grid verifications.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Batch experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Draw an instance, optionally with a trajectory, as SVG.
    Render(RenderArgs),
}

fn rational_arg(text: &str) -> Result<BigRational, RationalParseError> {
    parse_rational(text)
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Construction depth.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=MAX_ELL as i64),
          required_unless_present = "theorem1", conflicts_with = "theorem1")]
    ell: Option<u32>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    phases: u32,
    /// Packet size.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..),
          conflicts_with = "theorem1")]
    beta: u32,
    /// Number of sites (default `2^ell + 1`, or `n` with --theorem1).
    #[arg(long)]
    n_sites: Option<usize>,
    /// Derive the construction from a target buffer `k`, line size `n` and gap `delta`.
    #[arg(long, requires_all = ["k", "n", "delta"])]
    theorem1: bool,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    /// Rational, e.g. 1/2.
    #[arg(long, value_parser = rational_arg)]
    delta: Option<BigRational>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    policy: PolicyId,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    capacity: usize,
    /// Report file (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    capacity: usize,
    #[arg(long, default_value_t = SolveLimits::default().max_states)]
    max_states: usize,
    #[arg(long, default_value_t = SolveLimits::default().max_seconds)]
    max_seconds: f64,
    /// Guide the search with the farthest-pending-site estimate.
    #[arg(long)]
    heuristic: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long, default_value_t = 16)]
    p_max: u32,
    #[arg(long, default_value_t = 16)]
    q_max: u32,
    #[arg(long, default_value_t = 10)]
    r_max: u32,
    /// Comma-separated rationals (default 1/20, 2/20, ..., 19/20).
    #[arg(long, value_delimiter = ',', value_parser = rational_arg)]
    eta: Vec<BigRational>,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Also write every failing point as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl GridArgs {
    fn grid(&self) -> Grid {
        let etas = if self.eta.is_empty() {
            eta_grid(20)
        } else {
            self.eta.clone()
        };
        Grid::new(self.p_max, self.q_max, self.r_max, etas, self.tolerance)
    }
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Print the recurrence table as CSV (p,q,r,t_hat).
    TTable {
        #[arg(long, default_value_t = 8)]
        p_max: u32,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=crate::bounds::MAX_RANK as i64))]
        q_max: u32,
        #[arg(long, default_value_t = 4)]
        r_max: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check that the recurrence dominates the closed form.
    VerifyTau {
        #[command(flatten)]
        grid: GridArgs,
        /// Multiply the closed form before comparing.
        #[arg(long, value_parser = rational_arg)]
        tau_scale: Option<BigRational>,
    },
    /// Check both induction-step relations of the closed form.
    VerifySteps {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check `max_r f(r) <= a` per eta.
    VerifyF {
        #[arg(long, default_value_t = 64)]
        r_max: u32,
        #[arg(long, value_delimiter = ',', value_parser = rational_arg)]
        eta: Vec<BigRational>,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Basic trajectory against smaller-buffer optima, as CSV.
    Separation {
        #[arg(long, default_value_t = DEFAULT_ELL_LIMIT, value_parser = clap::value_parser!(u32).range(1..=MAX_ELL as i64))]
        ell_max: u32,
        /// Comma-separated phase counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        phases: Vec<u32>,
        /// Allow `ell_max` above the default limit.
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = SolveLimits::default().max_states)]
        max_states: usize,
        #[arg(long, default_value_t = SolveLimits::default().max_seconds)]
        max_seconds: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also draw every configuration into this directory.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, conflicts_with = "policy")]
    schedule: Option<PathBuf>,
    /// Draw this policy's trajectory.
    #[arg(long, requires = "capacity")]
    policy: Option<PolicyId>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

/// A failure and the exit status it maps to.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

type Outcome = Result<i32, Failure>;

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(usage),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_checked(path: &Path) -> Result<crate::model::Instance, Failure> {
    let instance = read_instance(path).map_err(usage)?;
    let report = validate_instance(&instance);
    if !report.passed() {
        return Err(usage(format!(
            "invalid instance {}:\n{report}",
            path.display()
        )));
    }
    Ok(instance)
}

fn gen(args: GenArgs) -> Outcome {
    let instance = if args.theorem1 {
        let (k, n) = (args.k.expect("required"), args.n.expect("required"));
        let delta = args.delta.expect("required");
        if n < 3 {
            return Err(usage("--n must be at least 3"));
        }
        if !is_open_unit(&delta) {
            return Err(usage("--delta must lie strictly between 0 and 1"));
        }
        let params = separation_params(k, n, &delta);
        if params.is_degenerate() {
            return Err(usage(format!(
                "k={k} is below 4/delta with k >= log2(n-1); no construction is needed"
            )));
        }
        if params.ell == 0 {
            return Err(usage("k must be at least 1"));
        }
        let beta = u32::try_from(params.beta).map_err(|_| usage("packet size too large"))?;
        let n_sites = args.n_sites.unwrap_or(n as usize);
        let mut instance = build_instance(params.ell, args.phases, beta, n_sites).map_err(usage)?;
        instance.meta.separation = Some(params.header(k, n, &delta));
        eprintln!(
            "ell={} beta={} epsilon={} ({:?})",
            params.ell,
            params.beta,
            super::format_rational(&params.epsilon),
            params.regime
        );
        instance
    } else {
        let ell = args.ell.expect("required");
        let n_sites = args.n_sites.unwrap_or((1usize << ell) + 1);
        build_instance(ell, args.phases, args.beta, n_sites).map_err(usage)?
    };
    write_atomic(&args.output, instance_to_json(&instance).as_bytes()).map_err(usage)?;
    Ok(EXIT_OK)
}

fn write_schedule(path: Option<&Path>, schedule: &Schedule) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, schedule_to_json(schedule).as_bytes()).map_err(usage),
        None => Ok(()),
    }
}

fn run_simulate(args: SimulateArgs) -> Outcome {
    let instance = load_checked(&args.instance)?;
    let (schedule, report) = simulate(args.policy, &instance, args.capacity).map_err(usage)?;
    write_schedule(args.schedule_out.as_deref(), &schedule)?;
    emit(
        args.output.as_deref(),
        &report_to_json(args.policy.name(), args.capacity, None, &report),
    )?;
    Ok(EXIT_OK)
}

fn solve(args: SolveArgs) -> Outcome {
    let instance = load_checked(&args.instance)?;
    let limits = SolveLimits {
        max_states: args.max_states,
        max_seconds: args.max_seconds,
    };
    let solver = Solver::new(limits).with_heuristic(args.heuristic);
    match solver.solve(&instance, args.capacity) {
        Ok(solution) => {
            write_schedule(args.schedule_out.as_deref(), &solution.schedule)?;
            emit(
                args.output.as_deref(),
                &report_to_json("opt", args.capacity, Some(true), &solution.report),
            )?;
            Ok(EXIT_OK)
        }
        Err(e @ SolveError::ResourceExceeded { .. }) => Err(Failure {
            code: EXIT_VERIFY,
            message: e.to_string(),
        }),
        Err(e) => Err(usage(e)),
    }
}

/// `family,p,q,r,eta,margin`, one row per failing point.
pub fn failures_csv(reports: &[VerifyReport]) -> String {
    let mut text = String::from("family,p,q,r,eta,margin\n");
    for report in reports {
        for f in &report.failures {
            text.push_str(&format!(
                "\"{}\",{},{},{},{},{:e}\n",
                f.family,
                super::format_rational(&f.p),
                f.q,
                f.r,
                super::format_rational(&f.eta),
                f.margin
            ));
        }
    }
    text
}

fn print_reports(reports: &[VerifyReport], csv: Option<&Path>) -> Result<i32, Failure> {
    if let Some(path) = csv {
        write_atomic(path, failures_csv(reports).as_bytes()).map_err(usage)?;
    }
    let mut code = EXIT_OK;
    for report in reports {
        println!("{report}");
        for f in report.failures.iter().take(10) {
            println!(
                "  p={} q={} r={} eta={} margin={:.6e}",
                f.p, f.q, f.r, f.eta, f.margin
            );
        }
        if !report.passed() {
            code = EXIT_VERIFY;
        }
    }
    Ok(code)
}

fn bounds(command: BoundsCommand) -> Outcome {
    match command {
        BoundsCommand::TTable {
            p_max,
            q_max,
            r_max,
            output,
        } => {
            let mut table = BoundTable::new();
            let mut text = String::from("p,q,r,t_hat\n");
            for q in 1..=q_max {
                for p in 0..=p_max {
                    for r in 0..=r_max {
                        text.push_str(&format!("{p},{q},{r},{}\n", table.t_hat(p, q, r)));
                    }
                }
            }
            emit(output.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        BoundsCommand::VerifyTau { grid, tau_scale } => {
            let scale = tau_scale.unwrap_or_else(|| BigRational::from_integer(1.into()));
            let mut table = BoundTable::new();
            let report = verify_tau_dominated(&grid.grid(), &scale, &mut table).map_err(usage)?;
            print_reports(&[report], grid.report.as_deref())
        }
        BoundsCommand::VerifySteps { grid } => {
            let reports = verify_induction_steps(&grid.grid()).map_err(usage)?;
            print_reports(&reports, grid.report.as_deref())
        }
        BoundsCommand::VerifyF {
            r_max,
            eta,
            tolerance,
            report,
        } => {
            let etas = if eta.is_empty() { eta_grid(20) } else { eta };
            let verified = verify_f_bound(r_max, &etas, tolerance).map_err(usage)?;
            print_reports(&[verified], report.as_deref())
        }
    }
}

fn experiment(command: ExperimentCommand) -> Outcome {
    let ExperimentCommand::Separation {
        ell_max,
        phases,
        force,
        max_states,
        max_seconds,
        output,
        svg_dir,
    } = command;
    if ell_max > DEFAULT_ELL_LIMIT && !force {
        return Err(usage(format!(
            "--ell-max above {DEFAULT_ELL_LIMIT} needs --force (exact solving grows quickly)"
        )));
    }
    if phases.is_empty() || phases.contains(&0) {
        return Err(usage("--phases needs positive counts"));
    }
    let config = SeparationConfig {
        ell_max,
        phases,
        limits: SolveLimits {
            max_states,
            max_seconds,
        },
    };
    let runs = run_separation(&config).map_err(usage)?;
    if let Some(dir) = svg_dir {
        fs::create_dir_all(&dir).map_err(usage)?;
        for run in &runs {
            let row = &run.row;
            let name = format!(
                "ell{}_p{}_b{}_{}.svg",
                row.ell, row.phases, row.buffer, row.method
            );
            let svg = render_svg(&run.instance, run.schedule.as_ref());
            write_atomic(&dir.join(name), svg.as_bytes()).map_err(usage)?;
        }
    }
    let rows: Vec<_> = runs.into_iter().map(|r| r.row).collect();
    emit(output.as_deref(), &csv_string(&rows))?;
    Ok(EXIT_OK)
}

fn render(args: RenderArgs) -> Outcome {
    let instance = load_checked(&args.instance)?;
    let schedule = match (args.schedule, args.policy) {
        (Some(path), _) => {
            let schedule = read_schedule(&path).map_err(usage)?;
            replay_schedule(&instance, &schedule).map_err(usage)?;
            Some(schedule)
        }
        (None, Some(policy)) => {
            let capacity = args.capacity.expect("required with --policy");
            Some(simulate(policy, &instance, capacity).map_err(usage)?.0)
        }
        (None, None) => None,
    };
    let svg = render_svg(&instance, schedule.as_ref());
    write_atomic(&args.output, svg.as_bytes()).map_err(usage)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Solve(a) => solve(a),
        Command::Bounds(c) => bounds(c),
        Command::Experiment(c) => experiment(c),
        Command::Render(a) => render(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
