use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use usd_reduce::generate::{random_problem, Shape};
use usd_reduce::io::{read_povm, read_problem, NStateTraceJson, PovmFile, ProblemFile, TraceJson};
use usd_reduce::multistate::nstate_reduce;
use usd_reduce::oracle::{solve_optimal_usd, OracleConfig, OracleResiduals, RestartSummary};
use usd_reduce::problem::{validate_problem, DiscriminationProblem, Tolerances, UsdReport};
use usd_reduce::reduction::reduce_to_standard_form;
use usd_reduce::sample::sample_measurement;
use usd_reduce::solve::{solve_problem, FinalSolution};
use usd_reduce::Error;

#[derive(Parser)]
#[command(
    name = "usd",
    version,
    about = "Optimal unambiguous discrimination of two density matrices"
)]
struct Cli {
    /// Relative eigenvalue threshold for supports and ranks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Principal-cosine threshold for intersections and orthogonality.
    #[arg(long, global = true, default_value_t = 1e-8)]
    angle_tol: f64,
    /// Machine-readable output.
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// Human-readable output (default).
    #[arg(long, global = true)]
    text: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check priors, positivity, traces and the rank inequality.
    Validate { file: PathBuf },
    /// Reduce to the standard form and print every step.
    Reduce { file: PathBuf },
    /// Reduce, solve the standard form and lift the optimal measurement.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Write the optimal measurement as a POVM file.
        #[arg(long)]
        povm_out: Option<PathBuf>,
    },
    /// Run the numerical oracle on the problem as given, without reduction.
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        povm_out: Option<PathBuf>,
    },
    /// Generate a random problem with the given support shape.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long, num_args = 2, value_names = ["R1", "R2"])]
        ranks: Vec<usize>,
        /// Dimension of the support intersection.
        #[arg(long, default_value_t = 0)]
        common: usize,
        /// Overlapping, non-shared directions; defaults to all of the
        /// smaller remainder.
        #[arg(long)]
        general: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a measurement and compare the failure rate with the exact one.
    Sample {
        file: PathBuf,
        povm: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct OracleArgs {
    /// JSON oracle configuration; missing fields take their defaults.
    #[arg(long)]
    oracle_config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 2,
            Error::NotConverged { .. } | Error::ConvergenceFailure => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let tol = Tolerances {
        rank: cli.tol,
        angle: cli.angle_tol,
        ..Tolerances::default()
    };
    match &cli.command {
        Command::Validate { file } => cmd_validate(cli, file, &tol),
        Command::Reduce { file } => cmd_reduce(cli, file, &tol),
        Command::Solve {
            file,
            oracle,
            povm_out,
        } => cmd_solve(cli, file, &tol, oracle, povm_out.as_deref()),
        Command::Oracle {
            file,
            oracle,
            povm_out,
        } => cmd_oracle(cli, file, &tol, oracle, povm_out.as_deref()),
        Command::Gen {
            dim,
            ranks,
            common,
            general,
            seed,
            out,
        } => cmd_gen(*dim, ranks, *common, *general, *seed, out.as_deref()),
        Command::Sample {
            file,
            povm,
            trials,
            seed,
        } => cmd_sample(cli, file, povm, *trials, *seed),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn label(p: &DiscriminationProblem, tol: &Tolerances) -> String {
    p.case_label(tol)
        .map(|l| l.to_string())
        .unwrap_or_else(|_| "?".into())
}

fn cmd_validate(cli: &Cli, file: &Path, tol: &Tolerances) -> CmdResult {
    let p = read_problem(file)?;
    let report = validate_problem(&p, tol);
    if cli.json {
        #[derive(Serialize)]
        struct Out<'a> {
            valid: bool,
            num_states: usize,
            ambient_dim: usize,
            case: String,
            checks: &'a [usd_reduce::problem::Check],
            warnings: &'a [String],
        }
        print_json(&Out {
            valid: report.is_valid(),
            num_states: p.num_states(),
            ambient_dim: p.ambient_dim(),
            case: label(&p, tol),
            checks: &report.checks,
            warnings: &report.warnings,
        });
    } else {
        println!(
            "{} states in C^{}, case {}",
            p.num_states(),
            p.ambient_dim(),
            label(&p, tol)
        );
        for c in &report.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            println!("  [{mark}] {}: {}", c.name, c.detail);
        }
        for w in &report.warnings {
            println!("  warning: {w}");
        }
        println!(
            "{}",
            if report.is_valid() {
                "valid"
            } else {
                "invalid"
            }
        );
    }
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn cmd_reduce(cli: &Cli, file: &Path, tol: &Tolerances) -> CmdResult {
    let p = read_problem(file)?;
    if p.num_states() > 2 {
        let red = nstate_reduce(&p, tol)?;
        if cli.json {
            print_json(&NStateTraceJson::from(&red));
        } else {
            println!(
                "{} states in C^{}, joint support {}",
                p.num_states(),
                p.ambient_dim(),
                red.support.dim()
            );
            for (k, s) in red.steps.iter().enumerate() {
                println!(
                    "  step {}: {:?}, removed dim {}, retained dim {}, q = {} + {} q'",
                    k + 1,
                    s.kind,
                    s.removed.dim(),
                    s.retained.dim(),
                    s.q_offset,
                    s.q_scale
                );
            }
            println!(
                "fixed point after {} passes: dimension {}, Q = {} + {} Q'",
                red.passes,
                red.final_problem.ambient_dim(),
                red.compose_failure(0.0),
                red.compose_failure(1.0) - red.compose_failure(0.0)
            );
        }
        return Ok(0);
    }
    let trace = reduce_to_standard_form(&p, tol)?;
    let view = TraceJson::from_trace(&trace)?;
    if cli.json {
        print_json(&view);
    } else {
        println!(
            "input case {}, joint support dimension {}",
            view.original_label,
            trace.support.dim()
        );
        for (k, s) in view.steps.iter().enumerate() {
            let removed: Vec<String> = s.removed.iter().map(|r| r.dim.to_string()).collect();
            println!(
                "  step {}: {:?} {} -> {} (removed {}), N1 = {}, N2 = {}, q = {} + {} q'",
                k + 1,
                s.kind,
                s.input_dim,
                s.output_dim,
                removed.join(" + "),
                s.n1,
                s.n2,
                s.q_offset,
                s.q_scale
            );
        }
        if trace.final_problem.ambient_dim() == 0 {
            println!(
                "standard form: empty, Q_opt = {}",
                trace.compose_failure(0.0)
            );
        } else {
            println!("standard form {}", view.final_label);
        }
    }
    Ok(0)
}

fn oracle_config(args: &OracleArgs, tol: &Tolerances) -> Result<OracleConfig, Failure> {
    let mut cfg = match &args.oracle_config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", path.display()),
            })?;
            serde_json::from_str::<OracleConfig>(&text).map_err(|e| Failure {
                code: 2,
                message: format!("oracle config: {e}"),
            })?
        }
        None => OracleConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.tolerances.rank = tol.rank;
    cfg.tolerances.angle = tol.angle;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_solve(
    cli: &Cli,
    file: &Path,
    tol: &Tolerances,
    args: &OracleArgs,
    povm_out: Option<&Path>,
) -> CmdResult {
    let p = read_problem(file)?;
    let cfg = oracle_config(args, tol)?;
    let s = solve_problem(&p, &cfg)?;
    if let Some(path) = povm_out {
        write_file(path, &PovmFile::from_povm(&s.povm).to_json())?;
    }
    let input_case = label(&p, tol);
    let standard_case = if s.trace.final_problem.ambient_dim() == 0 {
        "empty".to_string()
    } else {
        label(&s.trace.final_problem, tol)
    };
    if cli.json {
        #[derive(Serialize)]
        struct Out<'a> {
            q_opt: f64,
            q_lifted: f64,
            q_final: f64,
            input_case: String,
            standard_form_case: String,
            solution: &'a FinalSolution,
            usd: &'a UsdReport,
            povm: PovmFile,
            trace: TraceJson,
        }
        print_json(&Out {
            q_opt: s.q_opt,
            q_lifted: s.q_lifted,
            q_final: s.q_final,
            input_case,
            standard_form_case: standard_case,
            solution: &s.solution,
            usd: &s.usd,
            povm: PovmFile::from_povm(&s.povm),
            trace: TraceJson::from_trace(&s.trace)?,
        });
    } else {
        println!("input case {input_case}, standard form {standard_case}");
        println!("reduction steps: {}", s.trace.steps.len());
        match &s.solution {
            FinalSolution::Empty => println!("standard form is empty"),
            FinalSolution::ClosedForm { regime, overlap } => {
                println!(
                    "pure pair, overlap {overlap}, regime {regime}, Q' = {}",
                    s.q_final
                )
            }
            FinalSolution::Oracle { residuals, .. } => {
                println!("oracle Q' = {}, duality gap {:e}", s.q_final, residuals.gap)
            }
        }
        println!("Q_opt = {}", s.q_opt);
        println!(
            "lifted measurement: Q = {}, unambiguous: {}",
            s.q_lifted, s.usd.is_usd
        );
        println!(
            "residuals: misidentification {:e}, min eigenvalue {:e}, completeness {:e}",
            s.usd.max_misidentification, s.usd.min_eigenvalue, s.usd.completeness_residual
        );
    }
    Ok(if s.usd.is_usd { 0 } else { 1 })
}

fn cmd_oracle(
    cli: &Cli,
    file: &Path,
    tol: &Tolerances,
    args: &OracleArgs,
    povm_out: Option<&Path>,
) -> CmdResult {
    let p = read_problem(file)?;
    let report = validate_problem(&p, tol);
    if !report.is_valid() {
        let msg: Vec<String> = report
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(Error::InvalidProblem(msg.join("; ")).into());
    }
    let cfg = oracle_config(args, tol)?;
    let r = solve_optimal_usd(&p, &cfg)?;
    if let Some(path) = povm_out {
        write_file(path, &PovmFile::from_povm(&r.povm).to_json())?;
    }
    if cli.json {
        #[derive(Serialize)]
        struct Out<'a> {
            q_opt: f64,
            converged: bool,
            best_restart: usize,
            residuals: &'a OracleResiduals,
            restarts: &'a [RestartSummary],
            povm: PovmFile,
            config: &'a OracleConfig,
        }
        print_json(&Out {
            q_opt: r.q_opt,
            converged: r.converged,
            best_restart: r.best_restart,
            residuals: &r.residuals,
            restarts: &r.restarts,
            povm: PovmFile::from_povm(&r.povm),
            config: &cfg,
        });
    } else {
        println!("case {}", label(&p, tol));
        println!(
            "Q_opt = {} (best of {} restarts: #{})",
            r.q_opt,
            r.restarts.len(),
            r.best_restart
        );
        println!(
            "converged: {}, duality gap {:e}, lower bound {}",
            r.converged, r.residuals.gap, r.residuals.q_lower_bound
        );
        println!(
            "residuals: misidentification {:e}, min eigenvalue {:e}, cap violation {:e}",
            r.residuals.max_misidentification,
            r.residuals.min_eigenvalue,
            r.residuals.cap_violation
        );
    }
    Ok(if r.converged { 0 } else { 3 })
}

fn cmd_gen(
    dim: usize,
    ranks: &[usize],
    common: usize,
    general: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let (r1, r2) = (ranks[0], ranks[1]);
    let shape = match general {
        Some(g) => Shape::new(dim, r1, r2, common, g)?,
        None => Shape::generic(dim, r1, r2, common)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_problem(&shape, &mut rng);
    let metadata = BTreeMap::from([
        ("generator".to_string(), "usd gen".to_string()),
        ("seed".to_string(), seed.to_string()),
        ("ranks".to_string(), format!("{r1} {r2}")),
        ("common".to_string(), common.to_string()),
        ("general".to_string(), shape.general.to_string()),
    ]);
    let text = ProblemFile::from_problem(&p, metadata).to_json();
    match out {
        Some(path) => write_file(path, &text)?,
        None => println!("{text}"),
    }
    Ok(0)
}

fn cmd_sample(cli: &Cli, file: &Path, povm: &Path, trials: u64, seed: u64) -> CmdResult {
    let p = read_problem(file)?;
    let m = read_povm(povm)?;
    let r = sample_measurement(&p, &m, trials, seed)?;
    if cli.json {
        print_json(&r);
    } else {
        println!("{} trials, seed {}", r.trials, r.seed);
        for (i, row) in r.counts.iter().enumerate() {
            println!("  state {}: {:?}", i + 1, row);
        }
        println!(
            "empirical Q = {}, exact Q = {}, standard error {:e}, within 4 sigma: {}",
            r.empirical_q, r.analytic_q, r.standard_error, r.within_4_sigma
        );
        println!("misidentifications: {}", r.misidentification_count);
    }
    Ok(0)
}
