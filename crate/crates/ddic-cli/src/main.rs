//! Command-line front end. Subcommands: structural condition checks,
//! input-symmetry groups, capacity-region curves, degradedness solving,
//! outer-bound estimates, and Monte-Carlo decoding runs.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 a checked condition or
//! constraint fails.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddic::capacity::{
    capacity_region, default_simplex_res, eta, lower_convex_envelope, tau, trace_f,
    OuterSolver, RegionOptions, DEFAULT_SEED,
};
use ddic::conditions::check_all;
use ddic::degradation::find_degrading_channel;
use ddic::fixtures::{make_dadic, make_erasure_example, make_example3};
use ddic::io::{
    load_channel_spec, load_family, report_to_json, write_outer_csv, write_region_csv,
    write_sim_csv, OuterRow, SimRow,
};
use ddic::mcsim::{simulate_point, SimConfig};
use ddic::symmetry::input_symmetry_group;
use ddic::{Ddic, ProbVector};

#[derive(Parser)]
#[command(name = "ddic", version, about = "Degraded interference channel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the structural conditions and print a JSON report.
    Check(CheckArgs),
    /// Print the input symmetry group of the degrading stage.
    Group(GroupArgs),
    /// Trace the capacity-region boundary to CSV.
    Region(RegionArgs),
    /// Solve for a degrading channel between two families.
    Degrade(DegradeArgs),
    /// Monte-Carlo decoding runs at a rate pair.
    Sim(SimArgs),
    /// Estimate the auxiliary-variable outer bound on a c-grid.
    Outer(OuterArgs),
}

/// Channel source shared by most subcommands: a JSON spec file or a
/// built-in example. Example parameters are always explicit.
#[derive(Args)]
struct InputArgs {
    /// Path to a JSON channel spec.
    #[arg(value_name = "SPEC", conflicts_with = "example")]
    spec: Option<PathBuf>,
    /// Built-in example family: 1 additive, 2 flip-then-erase, 3 ternary.
    #[arg(long, value_name = "N")]
    example: Option<u8>,
    /// Example 1: common alphabet size.
    #[arg(long, requires = "example")]
    s: Option<usize>,
    /// Example 1: front-end noise distribution, comma-separated.
    #[arg(long, value_delimiter = ',', requires = "example")]
    p1: Option<Vec<f64>>,
    /// Example 1: degrading-stage noise distribution, comma-separated.
    #[arg(long, value_delimiter = ',', requires = "example")]
    p2: Option<Vec<f64>>,
    /// Example 2: flip probability of the front end.
    #[arg(long, requires = "example")]
    p: Option<f64>,
    /// Example 2: erasure probability of the degrading stage.
    #[arg(long, requires = "example")]
    alpha: Option<f64>,
    /// Example 3: three front-end entries summing to 1.
    #[arg(long, value_delimiter = ',', requires = "example")]
    abc: Option<Vec<f64>>,
    /// Example 3: three degrading-stage entries summing to 1/2.
    #[arg(long = "def", value_name = "DEF", value_delimiter = ',', requires = "example")]
    def_params: Option<Vec<f64>>,
}

impl InputArgs {
    fn build(&self) -> Result<Ddic, CmdError> {
        if let Some(path) = &self.spec {
            return Ok(load_channel_spec(path)?);
        }
        match self.example {
            Some(1) => {
                let s = self.s.ok_or_else(|| usage("example 1 needs --s"))?;
                let p1 = self.dist(&self.p1, "example 1 needs --p1")?;
                let p2 = self.dist(&self.p2, "example 1 needs --p2")?;
                Ok(make_dadic(s, &p1, &p2)?)
            }
            Some(2) => {
                let p = self.p.ok_or_else(|| usage("example 2 needs --p"))?;
                let alpha = self.alpha.ok_or_else(|| usage("example 2 needs --alpha"))?;
                Ok(make_erasure_example(p, alpha)?)
            }
            Some(3) => {
                let abc = triple(&self.abc, "example 3 needs --abc with 3 values")?;
                let def = triple(&self.def_params, "example 3 needs --def with 3 values")?;
                Ok(make_example3(abc, def)?)
            }
            Some(n) => Err(usage(&format!("unknown example {n}; use 1, 2, or 3"))),
            None => Err(usage("provide a spec file or --example N")),
        }
    }

    fn dist(&self, v: &Option<Vec<f64>>, msg: &str) -> Result<ProbVector, CmdError> {
        let v = v.as_ref().ok_or_else(|| usage(msg))?;
        Ok(ProbVector::new(v.clone())?)
    }
}

fn triple(v: &Option<Vec<f64>>, msg: &str) -> Result<[f64; 3], CmdError> {
    v.as_ref()
        .and_then(|v| <[f64; 3]>::try_from(v.as_slice()).ok())
        .ok_or_else(|| usage(msg))
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Override the coverage-test resolution for the hull condition.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct GroupArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Barycentric grid subdivisions (default picked by |X1|).
    #[arg(long)]
    simplex_res: Option<usize>,
    /// Number of c-bins for the trace.
    #[arg(long, default_value_t = 200)]
    bins: usize,
    /// Uniform c-samples merged with the envelope vertices.
    #[arg(long, default_value_t = 101)]
    c_grid: usize,
    /// Decimal places in the CSV.
    #[arg(long, default_value_t = 12)]
    decimals: usize,
    /// Recorded in the CSV metadata; the sweep itself is deterministic.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DegradeArgs {
    /// JSON family file for the front end (any spec file works).
    #[arg(value_name = "FAM1")]
    fam1: PathBuf,
    /// JSON family file for the degraded side.
    #[arg(value_name = "FAM2")]
    fam2: PathBuf,
    /// Decimal places when printing the recovered matrix.
    #[arg(long, default_value_t = 12)]
    decimals: usize,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Rate for message 1, bits per symbol.
    #[arg(long)]
    r1: f64,
    /// Rate for message 2, bits per symbol.
    #[arg(long)]
    r2: f64,
    /// Blocklengths to simulate.
    #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10000)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Codebook-1 distribution; defaults to the trace minimizer at
    /// c = R1 + eta, which is the scheme's operating point.
    #[arg(long, value_delimiter = ',')]
    px1: Option<Vec<f64>>,
    #[arg(long, default_value_t = 12)]
    decimals: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OuterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of uniform c-samples across the attainable range.
    #[arg(long, default_value_t = 21)]
    grid: usize,
    /// Random restarts per c (on top of the structured start).
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Barycentric grid subdivisions (default picked by |X1|).
    #[arg(long)]
    simplex_res: Option<usize>,
    /// Number of c-bins for the trace.
    #[arg(long, default_value_t = 200)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    decimals: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command failure with the exit code it maps to. Condition and
/// constraint failures exit 2; everything else is a usage or I/O error
/// and exits 1.
#[derive(Debug)]
enum CmdError {
    Cli(String),
    Lib(ddic::Error),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Cli(_) => 1,
            CmdError::Lib(e) => match e {
                ddic::Error::Precondition(_)
                | ddic::Error::ConstraintNotMet { .. }
                | ddic::Error::NotOutputEntropyMaximal { .. } => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Cli(msg) => write!(f, "{msg}"),
            CmdError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<ddic::Error> for CmdError {
    fn from(e: ddic::Error) -> Self {
        CmdError::Lib(e)
    }
}

fn usage(msg: &str) -> CmdError {
    CmdError::Cli(msg.to_string())
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CmdError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CmdError::Cli(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CmdError::Cli(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CmdError> {
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Group(args) => cmd_group(args),
        Command::Region(args) => cmd_region(args),
        Command::Degrade(args) => cmd_degrade(args),
        Command::Sim(args) => cmd_sim(args),
        Command::Outer(args) => cmd_outer(args),
    }
}

fn cmd_check(args: CheckArgs) -> Result<u8, CmdError> {
    let d = args.input.build()?;
    let report = match args.resolution {
        None => check_all(&d)?,
        Some(res) => {
            let mut report = check_all(&d)?;
            // Re-run the hull coverage at the requested resolution when
            // the group is available.
            if let Some(group) = report.group.clone() {
                report.cond5 = ddic::conditions::CondResult::Checked(
                    ddic::conditions::check_condition5(&d, &group, res)?,
                );
            }
            report
        }
    };
    let mut text = serde_json::to_string_pretty(&report_to_json(&report))
        .expect("report serializes");
    text.push('\n');
    emit(&None, text.as_bytes())?;
    Ok(if report.all_passed() { 0 } else { 2 })
}

fn cmd_group(args: GroupArgs) -> Result<u8, CmdError> {
    let d = args.input.build()?;
    let group = input_symmetry_group(d.t_prime())?;
    let mut text = format!(
        "order: {}\ntransitive: {}\n",
        group.order(),
        group.is_transitive()
    );
    for g in group.members() {
        text.push_str(&g.cycle_notation());
        text.push('\n');
    }
    emit(&None, text.as_bytes())?;
    Ok(0)
}

fn cmd_region(args: RegionArgs) -> Result<u8, CmdError> {
    let d = args.input.build()?;
    let opts = RegionOptions {
        simplex_res: args.simplex_res,
        bins: args.bins,
        c_grid: args.c_grid,
    };
    let region = capacity_region(&d, &opts)?;
    let mut buf = Vec::new();
    write_region_csv(&mut buf, &region, args.decimals, args.seed)?;
    emit(&args.out, &buf)?;
    Ok(0)
}

fn cmd_degrade(args: DegradeArgs) -> Result<u8, CmdError> {
    let fam1 = load_family(&args.fam1)?;
    let fam2 = load_family(&args.fam2)?;
    let result = find_degrading_channel(&fam1, &fam2)?;
    if result.feasible {
        let t_prime = result.t_prime.as_ref().expect("present when feasible");
        let mut text = format!("feasible, residual {:e}\n", result.residual);
        for i in 0..t_prime.n_out() {
            let row: Vec<String> = t_prime
                .row(i)
                .iter()
                .map(|x| format!("{:.*}", args.decimals, x))
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        emit(&None, text.as_bytes())?;
        Ok(0)
    } else {
        let verdict = if result.ambiguous { "ambiguous" } else { "infeasible" };
        emit(
            &None,
            format!("{verdict}, residual {:e}\n", result.residual).as_bytes(),
        )?;
        Ok(2)
    }
}

fn cmd_sim(args: SimArgs) -> Result<u8, CmdError> {
    let d = args.input.build()?;
    if args.n.is_empty() {
        return Err(usage("--n needs at least one blocklength"));
    }
    let px1 = match &args.px1 {
        Some(v) => ProbVector::new(v.clone())?,
        None => default_px1(&d, args.r1)?,
    };
    let px2 = ProbVector::uniform(d.x2_size());
    let mut rows = Vec::with_capacity(args.n.len());
    let mut template = None;
    for &n in &args.n {
        let cfg = SimConfig {
            n,
            r1: args.r1,
            r2: args.r2,
            trials: args.trials,
            seed: args.seed,
            px1: px1.clone(),
            px2: px2.clone(),
        };
        let result = simulate_point(&d, &cfg)?;
        rows.push(SimRow { n, r1: args.r1, r2: args.r2, result });
        template.get_or_insert(cfg);
    }
    let mut buf = Vec::new();
    write_sim_csv(&mut buf, &rows, &template.expect("n nonempty"), args.decimals)?;
    emit(&args.out, &buf)?;
    Ok(0)
}

/// The scheme generates codebook 1 from the trace minimizer at
/// c = R1 + eta; that needs the structural conditions to hold.
fn default_px1(d: &Ddic, r1: f64) -> Result<ProbVector, CmdError> {
    let report = check_all(d)?;
    if !report.all_passed() {
        return Err(CmdError::Lib(ddic::Error::Precondition(
            "default --px1 needs the structural conditions; pass --px1 explicitly".into(),
        )));
    }
    let x2_tilde = report.x2_tilde.expect("present when all conditions pass");
    let res = default_simplex_res(d.x1_size());
    let trace = trace_f(d, x2_tilde, res, 200)?;
    let c = (trace.eta + r1).clamp(trace.eta, trace.c_max);
    Ok(ProbVector::new(trace.minimizer_near(c).minimizer.clone())?)
}

fn cmd_outer(args: OuterArgs) -> Result<u8, CmdError> {
    let d = args.input.build()?;
    if args.grid < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    let report = check_all(&d)?;
    if !report.all_passed() {
        return Err(CmdError::Lib(ddic::Error::Precondition(
            "structural conditions fail; the bound comparison does not apply".into(),
        )));
    }
    let x2_tilde = report.x2_tilde.expect("present when all conditions pass");
    let res = args
        .simplex_res
        .unwrap_or_else(|| default_simplex_res(d.x1_size()));
    let solver = OuterSolver::new(&d, x2_tilde, res, args.bins)?;
    let envelope = lower_convex_envelope(solver.trace())?;
    let tau_val = tau(d.t_prime())?;
    let eta_val = eta(&d)?;
    let (lo, hi) = (solver.trace().eta, solver.trace().c_max);
    let mut rows = Vec::with_capacity(args.grid);
    for k in 0..args.grid {
        let c = lo + (hi - lo) * k as f64 / (args.grid - 1) as f64;
        let est = solver.estimate(c, args.restarts, args.seed)?;
        let bound = tau_val - envelope.eval(c)?;
        rows.push(OuterRow {
            c,
            t_hat: est.t_hat,
            bound,
            slack: bound - est.t_hat,
        });
    }
    let mut buf = Vec::new();
    write_outer_csv(
        &mut buf,
        &rows,
        eta_val,
        tau_val,
        args.restarts,
        args.decimals,
        args.seed,
    )?;
    emit(&args.out, &buf)?;
    Ok(0)
}
