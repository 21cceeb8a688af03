//! `otmpc`: transport solves, single episodes, benchmarks and comparisons.
//!
//! Exit codes: 0 success, 1 user or configuration error, 2 numeric
//! non-convergence, 3 internal fault.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use otmpc::bench::{
    compare_controllers, run_benchmark, run_trial_with, schema_help, write_outputs, BenchmarkConfig, Capture,
    ControllerKind, EnvironmentKind,
};
use otmpc::transport::{eot_objective, sinkhorn, CostMatrix, SinkhornConfig, Simplex};
use otmpc::{Error, Matrix};

#[derive(Parser, Debug)]
#[command(name = "otmpc", version, about = "Entropic transport MPC: solver, episodes and benchmarks")]
struct Cli {
    /// Benchmark configuration file (TOML with [environment], [controller], [harness]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set controller.beta=0.5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Root seed (replaces harness.base_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (replaces harness.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stream per-cycle diagnostics as JSON lines on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Worker threads (replaces harness.workers; 0 uses every core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one entropic transport problem from a JSON file {cost, q?, p?}.
    Transport {
        input: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Row marginal L1 exit threshold.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
    },
    /// Run one seeded episode and write its trajectory.
    Episode {
        /// Trial index within the configured seed stream.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Run a benchmark and write records.jsonl, summary.json and summary.txt.
    Bench,
    /// Run --config and --baseline on the same seeds and report paired outcomes.
    Compare {
        /// Configuration of the second controller.
        #[arg(long)]
        baseline: PathBuf,
    },
    /// Run OT-MPC and MPPI on the symmetric obstacle toy and dump both episodes.
    DemoBimodal,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransportInput {
    cost: Vec<Vec<f64>>,
    q: Option<Vec<f64>>,
    p: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct TransportOutput {
    coupling: Matrix<f64>,
    objective: f64,
    epsilon: f64,
    iterations: usize,
    row_marginal_error: f64,
    col_marginal_error: f64,
    converged: bool,
    log_domain: bool,
}

enum Failure {
    User(String),
    NotConverged,
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io { .. }
            | Error::Serde(_)
            | Error::Dimension { .. }
            | Error::Domain(_)
            | Error::NotSimplex(_) => Failure::User(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::User(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli, path: Option<&Path>) -> Result<BenchmarkConfig, Failure> {
    let mut cfg = BenchmarkConfig::load(path, &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.harness.base_seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.harness.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.harness.output_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn emit_diagnostic(label: &str, step: usize, diag: &impl Serialize) {
    let line = serde_json::json!({ "controller": label, "step": step, "diagnostics": diag });
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn cmd_transport(cli: &Cli, input: &Path, epsilon: f64, tol: f64, max_iterations: usize) -> CliResult {
    let text = fs::read_to_string(input).map_err(|e| Failure::User(format!("{}: {e}", input.display())))?;
    let parsed: TransportInput =
        serde_json::from_str(&text).map_err(|e| Failure::User(format!("{}: {e}", input.display())))?;
    let cost = CostMatrix::new(Matrix::from_rows(&parsed.cost)?)?;
    let (n, m) = cost.shape();
    let q = match parsed.q {
        Some(q) => Simplex::new(q)?,
        None => Simplex::uniform(n)?,
    };
    let p = match parsed.p {
        Some(p) => Simplex::new(p)?,
        None => Simplex::uniform(m)?,
    };
    let cfg = SinkhornConfig::new(epsilon)
        .with_tolerance(tol)
        .with_max_iterations(max_iterations);
    let coupling = sinkhorn(&cost, &q, &p, &cfg)?;
    let objective = eot_objective(&cost, coupling.plan(), epsilon)?;
    let out = TransportOutput {
        coupling: coupling.plan().clone(),
        objective,
        epsilon,
        iterations: coupling.iterations_used,
        row_marginal_error: coupling.row_marginal_error,
        col_marginal_error: coupling.col_marginal_error,
        converged: coupling.converged,
        log_domain: coupling.log_domain,
    };
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from(".")).join("coupling.json");
    write_file(&path, &(serde_json::to_string_pretty(&out).map_err(|e| Failure::Internal(e.to_string()))? + "\n"))?;
    println!("objective {objective:.12e}");
    println!("iterations {}", out.iterations);
    println!("row_marginal_error {:.3e}", out.row_marginal_error);
    println!("col_marginal_error {:.3e}", out.col_marginal_error);
    println!("converged {}", out.converged);
    println!("coupling written to {}", path.display());
    if out.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

fn cmd_episode(cli: &Cli, index: usize) -> CliResult {
    let cfg = load_config(cli, cli.config.as_deref())?;
    let label = cfg.controller.kind.as_str();
    let capture = Capture {
        trajectory: true,
        candidates: false,
    };
    let verbose = cli.verbose;
    let (record, traj) = run_trial_with(&cfg, index, capture, &mut |step, d| {
        if verbose {
            emit_diagnostic(label, step, d);
        }
    });
    let dir = PathBuf::from(&cfg.harness.output_dir);
    let record_json = serde_json::to_string(&record).map_err(|e| Failure::Internal(e.to_string()))?;
    write_file(&dir.join("record.json"), &(record_json.clone() + "\n"))?;
    if let Some(t) = traj {
        let text = serde_json::to_string(&t).map_err(|e| Failure::Internal(e.to_string()))?;
        write_file(&dir.join("trajectory.json"), &text)?;
    }
    println!("{record_json}");
    Ok(())
}

fn cmd_bench(cli: &Cli) -> CliResult {
    let cfg = load_config(cli, cli.config.as_deref())?;
    let result = run_benchmark(&cfg)?;
    if cli.verbose {
        for r in &result.records {
            let _ = writeln!(std::io::stderr(), "{}", serde_json::to_string(r).unwrap_or_default());
        }
    }
    write_outputs(Path::new(&cfg.harness.output_dir), &cfg, &result)?;
    print!("{}", result.summary.to_text());
    Ok(())
}

fn cmd_compare(cli: &Cli, baseline: &Path) -> CliResult {
    let a = load_config(cli, cli.config.as_deref())?;
    let b = load_config(cli, Some(baseline))?;
    let (report, ra, rb) = compare_controllers(&a, &b)?;
    let dir = PathBuf::from(&a.harness.output_dir);
    write_outputs(&dir.join(format!("a_{}", a.controller.kind.as_str())), &a, &ra)?;
    write_outputs(&dir.join(format!("b_{}", b.controller.kind.as_str())), &b, &rb)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Internal(e.to_string()))?;
    write_file(&dir.join("comparison.json"), &(json + "\n"))?;
    write_file(&dir.join("comparison.txt"), &report.to_text())?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_demo_bimodal(cli: &Cli) -> CliResult {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("otmpc-demo"));
    for kind in [ControllerKind::Otmpc, ControllerKind::Mppi] {
        let mut cfg = BenchmarkConfig::defaults(EnvironmentKind::Bimodal, kind);
        if let Some(seed) = cli.seed {
            cfg.harness.base_seed = seed;
        }
        let label = kind.as_str();
        let verbose = cli.verbose;
        let capture = Capture {
            trajectory: true,
            candidates: true,
        };
        let (record, traj) = run_trial_with(&cfg, 0, capture, &mut |step, d| {
            if verbose {
                emit_diagnostic(label, step, d);
            }
        });
        let traj = traj.ok_or_else(|| Failure::Internal("bimodal toy produced no trajectory".into()))?;
        let text = serde_json::to_string(&traj).map_err(|e| Failure::Internal(e.to_string()))?;
        write_file(&out.join(format!("{label}_trajectory.json")), &text)?;
        println!(
            "{label}: {:?} after {} steps, final goal distance {:.3} m",
            record.outcome,
            record.steps_taken,
            record.final_goal_distance.unwrap_or(f64::NAN)
        );
    }
    println!("dumps written to {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Transport {
            input,
            epsilon,
            tol,
            max_iterations,
        } => cmd_transport(cli, input, *epsilon, *tol, *max_iterations),
        Command::Episode { index } => cmd_episode(cli, *index),
        Command::Bench => cmd_bench(cli),
        Command::Compare { baseline } => cmd_compare(cli, baseline),
        Command::DemoBimodal => cmd_demo_bimodal(cli),
    }
}

fn main() -> ExitCode {
    let command = Cli::command().after_long_help(schema_help());
    let cli = match command
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged) => {
            eprintln!("error: solver hit the iteration cap before converging");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
