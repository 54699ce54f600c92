use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use confinv::canon::reduce;
use confinv::io::{parse, print, ParseError};
use confinv::numeric::TorusMetric;
use confinv::relations::RELATION_SPACE_VERSION;
use confinv::solver::{
    enumerate_basis, gauss_bonnet_sphere, gauss_bonnet_torus, invariance_kernel, reconstruct_from, SampleConfig,
    SolverError,
};
use confinv::variation::{conformal_image, Truncated};

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "confinv", version, about = "Complete contractions, conformal variations and invariance checks")]
struct Cli {
    /// Directory for JSON reports (default: $CONFINV_OUT_DIR, then the current directory).
    #[arg(long, global = true, env = "CONFINV_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical form of a scalar expression.
    Canon {
        expr: String,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// The degree-Z part of the conformal variation of a weight -n expression.
    Vary {
        expr: String,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        n: usize,
        /// Keep only terms of length at most L and print the truncation marker.
        #[arg(long)]
        max_length: Option<usize>,
    },
    /// Kernel of integrated conformal invariance over the W/P basis.
    Kernel {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        b_min: usize,
    },
    /// Kernel generator compared with the Schouten part of the Pfaffian.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Gauss-Bonnet normalization of the Pfaffian on a sphere or a torus.
    CheckGb {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Topology::Torus)]
        topology: Topology,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Verification tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Quadrature points per active torus coordinate (even).
    #[arg(long)]
    grid: Option<usize>,
    /// Number of (metric, φ) samples; default three per basis entry.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Topology {
    Torus,
    Sphere,
}

/// Everything that determines a report; hashed to name the report file.
#[derive(Serialize, Debug)]
struct RunConfig {
    command: &'static str,
    n: usize,
    seed: u64,
    tol: f64,
    grid: Option<usize>,
    trials: Option<usize>,
    b_min: Option<usize>,
    topology: Option<Topology>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    relation_space: &'static str,
    config: &'a RunConfig,
    pass: bool,
    result: &'a T,
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write_report<T: Serialize>(dir: &PathBuf, config: &RunConfig, pass: bool, result: &T) -> Result<PathBuf, String> {
    let config_text = serde_json::to_string(config).map_err(|e| e.to_string())?;
    let digest = Sha256::digest(config_text.as_bytes());
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let report = Report {
        tool: "confinv",
        version: env!("CARGO_PKG_VERSION"),
        relation_space: RELATION_SPACE_VERSION,
        config,
        pass,
        result,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(format!("{}-{hash}.json", config.command));
    std::fs::write(&path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}

fn parse_error_code(e: &ParseError) -> u8 {
    match e {
        ParseError::Syntax { .. } => EXIT_PARSE,
        ParseError::Term { .. } | ParseError::Unbalanced { .. } => EXIT_VALIDATION,
    }
}

fn solver_error_code(e: &SolverError) -> u8 {
    match e {
        SolverError::KernelDimension { .. } | SolverError::Rationalization { .. } => EXIT_VERIFICATION,
        _ => EXIT_VALIDATION,
    }
}

fn sample_config(run: &RunArgs) -> SampleConfig {
    let mut config = SampleConfig::for_dimension(run.n);
    config.seed = run.seed;
    if let Some(g) = run.grid {
        config.grid = g;
    }
    if let Some(t) = run.trials {
        config.trials = t;
    }
    if let Some(t) = run.tol {
        config.verify_tol = t;
    }
    config
}

fn check_run_args(run: &RunArgs) -> Result<(), (u8, String)> {
    if run.n < 2 || run.n % 2 == 1 {
        return Err((EXIT_VALIDATION, format!("dimension {} must be even", run.n)));
    }
    if let Some(g) = run.grid {
        if g < 2 || g % 2 == 1 {
            return Err((EXIT_VALIDATION, format!("grid size {g} must be even")));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let dir = out_dir(&cli.out);
    match cli.command {
        Command::Canon { expr, n } => {
            let lc = parse(&expr).map_err(|e| (parse_error_code(&e), e.to_string()))?;
            println!("{}", print(&reduce(&lc, n)));
            Ok(())
        }
        Command::Vary {
            expr,
            order,
            n,
            max_length,
        } => {
            let lc = parse(&expr).map_err(|e| (parse_error_code(&e), e.to_string()))?;
            if order == 0 {
                return Err((EXIT_VALIDATION, "order must be at least 1".into()));
            }
            let result = conformal_image(&lc, order, n).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let part = result.order(order);
            let shown = match max_length {
                Some(l) => Truncated::modulo_length(&part, l + 1),
                None => Truncated::exact(part),
            };
            println!("{shown}");
            Ok(())
        }
        Command::Kernel { run, b_min } => {
            check_run_args(&run)?;
            let config = sample_config(&run);
            let basis = enumerate_basis(run.n, b_min).map_err(|e| (solver_error_code(&e), e.to_string()))?;
            let report = invariance_kernel(&basis, &config).map_err(|e| (solver_error_code(&e), e.to_string()))?;
            let pass = report.verified() && !report.ill_conditioned;
            let run_config = RunConfig {
                command: "kernel",
                n: run.n,
                seed: run.seed,
                tol: config.verify_tol,
                grid: Some(config.grid),
                trials: run.trials,
                b_min: Some(b_min),
                topology: None,
            };
            let path = write_report(&dir, &run_config, pass, &report).map_err(|e| (1, e))?;
            println!("basis: {}", basis.len());
            for entry in &basis.entries {
                println!("  {}", entry.text);
            }
            println!("kernel dimension: {}", report.dimension);
            for v in &report.kernel {
                let coeffs: Vec<String> = v.coefficients.iter().map(|c| c.to_string()).collect();
                println!("  [{}] fresh residual {:.3e}", coeffs.join(", "), v.fresh_residual);
            }
            println!("verified: {pass}");
            println!("report: {}", path.display());
            if pass {
                Ok(())
            } else {
                Err((EXIT_VERIFICATION, "kernel verification failed".into()))
            }
        }
        Command::Reconstruct { run } => {
            check_run_args(&run)?;
            let config = sample_config(&run);
            let basis = enumerate_basis(run.n, 1).map_err(|e| (solver_error_code(&e), e.to_string()))?;
            let rec = reconstruct_from(&basis, &config).map_err(|e| (solver_error_code(&e), e.to_string()))?;
            let pass = rec.matches && rec.kernel.verified();
            let run_config = RunConfig {
                command: "reconstruct",
                n: run.n,
                seed: run.seed,
                tol: config.verify_tol,
                grid: Some(config.grid),
                trials: run.trials,
                b_min: Some(1),
                topology: None,
            };
            let path = write_report(&dir, &run_config, pass, &rec).map_err(|e| (1, e))?;
            println!("C = {}", rec.constant);
            println!("{:<40} {:>12} {:>12}", "term", "kernel", "C * bar");
            for row in &rec.table {
                println!("{:<40} {:>12} {:>12}", row.term, row.kernel.to_string(), row.scaled_bar.to_string());
            }
            println!("matches: {}", rec.matches);
            println!("report: {}", path.display());
            if pass {
                Ok(())
            } else {
                Err((EXIT_VERIFICATION, "reconstruction does not match".into()))
            }
        }
        Command::CheckGb { run, topology } => {
            check_run_args(&run)?;
            let tol = run.tol.unwrap_or(match topology {
                Topology::Sphere => 1e-10,
                Topology::Torus => 1e-6,
            });
            let report = match topology {
                Topology::Sphere => gauss_bonnet_sphere(run.n, tol),
                Topology::Torus => {
                    use rand::SeedableRng;
                    let grid = run.grid.unwrap_or(if run.n <= 4 { 16 } else { 8 });
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(run.seed);
                    let metric = TorusMetric::random(run.n, run.n.min(4), 2, 3, 0.05, &mut rng);
                    gauss_bonnet_torus(run.n, &metric, grid, tol)
                }
            }
            .map_err(|e| (solver_error_code(&e), e.to_string()))?;
            let run_config = RunConfig {
                command: "check-gb",
                n: run.n,
                seed: run.seed,
                tol,
                grid: run.grid,
                trials: None,
                b_min: None,
                topology: Some(topology),
            };
            let path = write_report(&dir, &run_config, report.pass, &report).map_err(|e| (1, e))?;
            println!("integral: {:.12e}", report.integral);
            println!("expected: {:.12e}", report.expected);
            println!("error: {:.3e} (tolerance {:.1e})", report.error, report.tolerance);
            println!("pass: {}", report.pass);
            println!("report: {}", path.display());
            if report.pass {
                Ok(())
            } else {
                Err((EXIT_VERIFICATION, "Gauss-Bonnet check failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
