//! Command orchestration behind the `hydrofp` binary. Each command writes to
//! the supplied streams and returns a process exit code, so it can be driven
//! from tests without spawning a process.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::document::{write_trace_csv, ContractionDoc, SolutionDocument};
use crate::format::NetworkFile;
use crate::jacobian::{contraction_report, ContractionReport};
use crate::newton::{newton_solve, FullState, NewtonOptions};
use crate::solver::{low_flow_warnings, solve_system, InitialFlow, SolveResult, SolverConfig, System};
use crate::units::gpm_to_cfs;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_NOT_CONTRACTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hydrofp", version, about = "Steady-state pipe network hydraulics by fixed-point iteration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for flows and heads.
    Solve(SolveArgs),
    /// Solve (or load a solution) and test the map for local contraction.
    Analyze(AnalyzeArgs),
    /// Parse and validate a network file.
    Validate { network: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Method {
    #[default]
    Fp,
    Newton,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    /// Stopping tolerance on ‖q − T(q)‖∞, GPM.
    #[arg(long, allow_negative_numbers = true)]
    pub tol_gpm: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Initial flow: a scalar GPM value, or `@FILE` with one GPM value per pipe.
    #[arg(long, allow_hyphen_values = true)]
    pub init_gpm: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, value_enum, default_value_t = Method::Fp)]
    pub method: Method,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the solution document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a contraction block to the solution.
    #[arg(long)]
    pub analyze: bool,
    /// Print a rounded table to stderr.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnalyzeArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Analyse the flows of a previous `solve --out` document instead of solving.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Write the contraction block as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Solve(args) => run_solve(&args, stdout, stderr),
        Command::Analyze(args) => run_analyze(&args, stdout, stderr),
        Command::Validate { network } => run_validate(&network, stdout, stderr),
    }
}

fn fail(stderr: &mut dyn Write, message: impl std::fmt::Display) -> i32 {
    let _ = writeln!(stderr, "error: {message}");
    EXIT_INPUT
}

fn load(path: &Path) -> Result<NetworkFile, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    NetworkFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_init(value: &str) -> Result<InitialFlow, String> {
    if let Some(path) = value.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        let flows = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("{path}: bad flow value `{t}`")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InitialFlow::PerPipe(flows))
    } else {
        value
            .parse::<f64>()
            .map(InitialFlow::Uniform)
            .map_err(|_| format!("--init-gpm: expected a number or @FILE, found `{value}`"))
    }
}

/// Defaults, then file options, then flags.
fn config_for(file: &NetworkFile, flags: &SolverFlags) -> Result<SolverConfig, String> {
    let mut config = SolverConfig::default();
    file.options.apply(&mut config);
    if let Some(tol) = flags.tol_gpm {
        config.tolerance_gpm = tol;
    }
    if let Some(max) = flags.max_iter {
        config.max_iterations = max;
    }
    if let Some(init) = &flags.init_gpm {
        config.initial_flow = parse_init(init)?;
    }
    config.validate().map_err(|e| e.to_string())?;
    config
        .initial_flows_cfs(file.network.pipe_count())
        .map_err(|e| format!("--init-gpm: {e}"))?;
    Ok(config)
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn newton_result(system: &System, config: &SolverConfig) -> crate::Result<SolveResult> {
    let start = FullState {
        q: config.initial_flows_cfs(system.pipe_count())?,
        h: DVector::repeat(system.node_count(), system.reservoir_head()),
    };
    let r = newton_solve(system, &start, &NewtonOptions::default())?;
    let final_step = system
        .apply_map(&r.state.q)
        .map(|t| crate::units::cfs_to_gpm((t - &r.state.q).amax()))
        .unwrap_or(f64::NAN);
    Ok(SolveResult {
        reservoir_intake_gpm: system.reservoir_intake_gpm(&r.state.q),
        residuals: system.residuals(&r.state.q, &r.state.h),
        warnings: low_flow_warnings(system, &r.state.q, &config.fluid),
        flows_cfs: r.state.q,
        heads_ft: r.state.h,
        iterations: r.iterations,
        converged: r.converged,
        final_step_gpm: final_step,
        trace: Vec::new(),
        floor_activations: 0,
    })
}

fn analysis_error(e: Error) -> String {
    match e {
        Error::NearZeroFlow { pipe, flow } => format!(
            "cannot analyse: pipe {pipe} carries |q| = {:e} GPM, at or below the flow floor; \
             the Jacobian of the map is undefined at zero flow",
            crate::units::cfs_to_gpm(flow.abs())
        ),
        other => other.to_string(),
    }
}

pub fn run_solve(args: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let file = match load(&args.network) {
        Ok(f) => f,
        Err(e) => return fail(stderr, e),
    };
    let config = match config_for(&file, &args.solver) {
        Ok(c) => c,
        Err(e) => return fail(stderr, e),
    };
    let system = match System::with_flow_floor(&file.network, config.flow_floor_cfs) {
        Ok(s) => s,
        Err(e) => return fail(stderr, e),
    };
    let result = match args.method {
        Method::Fp => solve_system(&system, &config),
        Method::Newton => newton_result(&system, &config),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return fail(stderr, e),
    };

    let report = if args.analyze && result.converged {
        match contraction_report(&system, &result.flows_cfs, Some(&result.trace)) {
            Ok(r) => Some(r),
            Err(e) => {
                let _ = writeln!(stderr, "warning: {}", analysis_error(e));
                None
            }
        }
    } else {
        None
    };

    let doc = SolutionDocument::from_result(&result, report.as_ref());
    if let Some(path) = &args.trace {
        let mut buf = Vec::new();
        let _ = write_trace_csv(&mut buf, &result.trace);
        if let Err(e) = fs::write(path, buf) {
            return fail(stderr, format!("{}: {e}", path.display()));
        }
    }
    if let Err(e) = emit(args.out.as_deref(), &doc.to_json(), stdout) {
        return fail(stderr, e);
    }
    if args.table {
        let _ = doc.write_table(stderr);
    }
    if result.converged {
        EXIT_OK
    } else {
        let _ = writeln!(
            stderr,
            "not converged after {} iterations (last step {:e} GPM)",
            result.iterations, result.final_step_gpm
        );
        EXIT_NOT_CONVERGED
    }
}

fn report_lines(report: &ContractionReport) -> String {
    let mut s = format!(
        "rho={:.4}\nalpha={:.4}\nlocal_contraction={}\n",
        report.spectral_radius, report.rate_estimate, report.is_local_contraction
    );
    if let Some(r) = report.empirical_ratio {
        s.push_str(&format!("empirical_ratio={r:.4}\n"));
    }
    s.push_str(&format!(
        "fixed_point_residual_gpm={:e}\n",
        report.fixed_point_residual_gpm
    ));
    s
}

pub fn run_analyze(args: &AnalyzeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let file = match load(&args.network) {
        Ok(f) => f,
        Err(e) => return fail(stderr, e),
    };
    let config = match config_for(&file, &args.solver) {
        Ok(c) => c,
        Err(e) => return fail(stderr, e),
    };
    let system = match System::with_flow_floor(&file.network, config.flow_floor_cfs) {
        Ok(s) => s,
        Err(e) => return fail(stderr, e),
    };

    let (flows, trace) = match &args.solution {
        Some(path) => {
            let doc = match fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|t| SolutionDocument::from_json(&t).map_err(|e| e.to_string()))
            {
                Ok(d) => d,
                Err(e) => return fail(stderr, format!("{}: {e}", path.display())),
            };
            if doc.flows_gpm.len() != system.pipe_count() {
                return fail(
                    stderr,
                    format!(
                        "{}: {} flows for {} pipes",
                        path.display(),
                        doc.flows_gpm.len(),
                        system.pipe_count()
                    ),
                );
            }
            let q = DVector::from_iterator(doc.flows_gpm.len(), doc.flows_gpm.iter().map(|&x| gpm_to_cfs(x)));
            (q, None)
        }
        None => match solve_system(&system, &config) {
            Ok(r) if r.converged => (r.flows_cfs, Some(r.trace)),
            Ok(r) => {
                let _ = writeln!(
                    stderr,
                    "not converged after {} iterations; nothing to analyse",
                    r.iterations
                );
                return EXIT_NOT_CONVERGED;
            }
            Err(e) => return fail(stderr, e),
        },
    };

    let report = match contraction_report(&system, &flows, trace.as_deref()) {
        Ok(r) => r,
        Err(e) => return fail(stderr, analysis_error(e)),
    };
    let _ = stdout.write_all(report_lines(&report).as_bytes());
    if let Some(path) = &args.out {
        let mut text = serde_json::to_string_pretty(&ContractionDoc::from(&report)).expect("serializes");
        text.push('\n');
        if let Err(e) = fs::write(path, text) {
            return fail(stderr, format!("{}: {e}", path.display()));
        }
    }
    if report.is_local_contraction {
        EXIT_OK
    } else {
        EXIT_NOT_CONTRACTION
    }
}

pub fn run_validate(path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match load(path) {
        Ok(file) => {
            let _ = writeln!(
                stdout,
                "ok: {} junctions, {} pipes, {} loops, total demand {} GPM",
                file.network.node_count(),
                file.network.pipe_count(),
                file.network.loop_count(),
                file.network.total_demand_gpm()
            );
            EXIT_OK
        }
        Err(e) => fail(stderr, e),
    }
}
