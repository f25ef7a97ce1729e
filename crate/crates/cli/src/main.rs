use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ep_core::exact::{
    dp_dist_oracle, exact_dist_kn, falling_moment_kn, falling_moment_krn, gfc_oracle_check, raw_moment_kn,
    raw_moment_krn, ORACLE_MAX_N,
};
use ep_core::io::{
    header_line, round_sig, write_distribution_csv, write_result_csv, write_result_json, write_trajectories_csv,
    write_trajectories_jsonl, PROB_DIGITS, SCHEMA_VERSION,
};
use ep_core::stats::{
    estimate_alpha, run_experiment, simulate_many, version_string, workers_from_env, ExperimentConfig, ExperimentKind,
    ExperimentResult,
};
use ep_core::{Error, ModelParams};

const AFTER_HELP: &str = "\
ENVIRONMENT:
  EP_WORKERS   worker threads for simulation commands (default: all available cores).
               Results are identical for every worker count.

EXIT STATUS:
  0  success
  1  invalid input (parameters must satisfy α∈[0,1), θ>−α) or I/O failure
  2  a verification command ran but its acceptance check failed";

/// Exact computation, simulation and verification for the two-parameter
/// (α, θ) Chinese restaurant process.
#[derive(Parser, Debug)]
#[command(name = "ep", version, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct Model {
    /// Discount α ∈ [0, 1)
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Strength θ > −α
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
}

impl Model {
    fn params(&self) -> Result<ModelParams, Error> {
        ModelParams::new(self.alpha, self.theta)
    }
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

impl Output {
    fn open(&self) -> Result<Box<dyn Write>, Error> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

#[derive(Args, Debug)]
struct Run {
    /// Number of independent trajectories
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Single checkpoint (shorthand for --checkpoints N)
    #[arg(long, conflicts_with = "checkpoints")]
    n: Option<u64>,
    /// Strictly increasing checkpoints a,b,c
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
}

impl Run {
    fn checkpoints(&self) -> Result<Vec<u64>, Error> {
        match (self.n, self.checkpoints.is_empty()) {
            (Some(n), _) => Ok(vec![n]),
            (None, false) => Ok(self.checkpoints.clone()),
            (None, true) => Err(Error::Domain("one of --n or --checkpoints is required".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MomentTarget {
    /// E[K_n^p] and E[K_{r,n}^p] against the exact moment formulas
    Kn,
    /// E[Ŝ^p] against the moments of the limit S
    Limit,
    /// E[K_n Ŝ] and E[K_{r,n} Ŝ] against the cross-moment formulas
    Cross,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact law of the number of blocks K_n (generalized factorial coefficients).
    ///
    /// Writes the probability mass function P(K_n = k), k = 1..n.
    ExactDist {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact moments of K_n or K_{r,n} (closed-form moment formulas).
    ///
    /// Raw moments by default, falling-factorial moments with --falling.
    Moments {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: u64,
        /// Moment order
        #[arg(long, default_value_t = 1)]
        p: u64,
        /// Block size r: moments of K_{r,n} instead of K_n
        #[arg(long)]
        r: Option<u64>,
        #[arg(long)]
        falling: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate the sequential construction and record K_n, K_{r,n} and the
    /// martingales M_n, M_{r,n} with their quadratic variations at checkpoints.
    ///
    /// --format json writes one JSON object per line.
    Sample {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        run: Run,
        /// Size classes to track, e.g. 1,2,3
        #[arg(long, value_delimiter = ',')]
        r: Vec<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Central limit theorems: without --r, the mixed-normal limit of
    /// n^{α/2}(K_n/n^α − S) and its self-normalised form; with --r, the
    /// self-normalised CLT for K_{r,n} centred by its compensator.
    ///
    /// Compares against the standard normal by Kolmogorov-Smirnov and the
    /// mixed variance against E[S].
    VerifyClt {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        run: Run,
        #[arg(long)]
        r: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo moments against exact formulas: E[K_n^p], E[K_{r,n}^p],
    /// the limit moments E[S^p], or the cross-moments E[K_n S], E[K_{r,n} S].
    VerifyMoments {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        run: Run,
        #[arg(long, value_enum, default_value = "kn")]
        target: MomentTarget,
        /// Moment orders, e.g. 1,2
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        p: Vec<u32>,
        /// Size classes, e.g. 1,2
        #[arg(long, value_delimiter = ',', default_value = "1")]
        r: Vec<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Law of the iterated logarithm for K_n: the running maximum of
    /// (K_m − m^α S)² / (2 m^α log log m) against S.
    Lil {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        run: Run,
        #[command(flatten)]
        output: Output,
    },
    /// Consistency of the discount estimator α̂ = K_{1,n}/K_n.
    EstimateAlpha {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Check the floating-point coefficient recursion against exact rational
    /// arithmetic, and the closed-form law of K_n against its forward recursion.
    OracleCheck {
        #[arg(long, default_value_t = ORACLE_MAX_N)]
        nmax: u64,
    },
}

enum Status {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Status, Error> {
    match command {
        Command::ExactDist { model, n, output } => {
            let params = model.params()?;
            let dist = exact_dist_kn(&params, n)?;
            let mut w = output.open()?;
            match output.format {
                Format::Csv => write_distribution_csv(&mut w, &dist, &params)?,
                Format::Json => {
                    let doc = serde_json::json!({
                        "schema": "distribution",
                        "schema_version": SCHEMA_VERSION,
                        "version": version_string(),
                        "alpha": params.alpha(),
                        "theta": params.theta(),
                        "n": n,
                        "probabilities": dist.probabilities,
                    });
                    serde_json::to_writer_pretty(&mut w, &doc)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(Status::Ok)
        }
        Command::Moments {
            model,
            n,
            p,
            r,
            falling,
            output,
        } => {
            let params = model.params()?;
            let (quantity, value) = match (r, falling) {
                (None, false) => ("raw_moment_kn", raw_moment_kn(&params, n, p)?),
                (None, true) => {
                    let m = falling_moment_kn(&params, n, p)?;
                    if m.flagged {
                        eprintln!("warning: {:.1} digits lost to cancellation", m.digits_lost);
                    }
                    ("falling_moment_kn", m.value)
                }
                (Some(r), false) => ("raw_moment_krn", raw_moment_krn(&params, n, r, p)?),
                (Some(r), true) => ("falling_moment_krn", falling_moment_krn(&params, n, r, p)?),
            };
            let mut w = output.open()?;
            match output.format {
                Format::Csv => {
                    writeln!(w, "{}", header_line("moment", Some(&params), None))?;
                    writeln!(w, "quantity,n,r,p,value")?;
                    let r = r.map_or(String::new(), |r| r.to_string());
                    writeln!(w, "{quantity},{n},{r},{p},{value:?}")?;
                }
                Format::Json => {
                    let doc = serde_json::json!({
                        "schema": "moment",
                        "schema_version": SCHEMA_VERSION,
                        "version": version_string(),
                        "alpha": params.alpha(),
                        "theta": params.theta(),
                        "quantity": quantity, "n": n, "r": r, "p": p, "value": value,
                    });
                    serde_json::to_writer_pretty(&mut w, &doc)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(Status::Ok)
        }
        Command::Sample { model, run, r, output } => {
            let params = model.params()?;
            let checkpoints = run.checkpoints()?;
            let records = simulate_many(params, &checkpoints, &r, run.trials, run.seed, workers_from_env())?;
            let mut w = output.open()?;
            match output.format {
                Format::Csv => write_trajectories_csv(&mut w, &records, &params, run.seed)?,
                Format::Json => write_trajectories_jsonl(&mut w, &records, &params, run.seed)?,
            }
            w.flush()?;
            Ok(Status::Ok)
        }
        Command::VerifyClt { model, run, r, output } => {
            let params = model.params()?;
            let cfg = match r {
                Some(r) => experiment(params, ExperimentKind::CltKrn, &run)?.with_tracked(vec![r]),
                None => experiment(params, ExperimentKind::CltKn, &run)?,
            };
            report(&cfg, &output)
        }
        Command::VerifyMoments {
            model,
            run,
            target,
            p,
            r,
            output,
        } => {
            let params = model.params()?;
            let kind = match target {
                MomentTarget::Kn => ExperimentKind::Moments,
                MomentTarget::Limit => ExperimentKind::ShatMoments,
                MomentTarget::Cross => ExperimentKind::CrossMoments,
            };
            let cfg = experiment(params, kind, &run)?.with_orders(p).with_tracked(r);
            report(&cfg, &output)
        }
        Command::Lil { model, run, output } => {
            let params = model.params()?;
            let cfg = experiment(params, ExperimentKind::Lil, &run)?;
            report(&cfg, &output)
        }
        Command::EstimateAlpha {
            model,
            n,
            trials,
            seed,
            output,
        } => {
            let params = model.params()?;
            let est = estimate_alpha(params, n, trials, seed, workers_from_env())?;
            let mean = est.iter().map(|e| e.alpha_hat).sum::<f64>() / est.len().max(1) as f64;
            eprintln!(
                "mean α̂ over {} trajectories at n = {n}: {mean:.5} (α = {})",
                est.len(),
                params.alpha()
            );
            let mut w = output.open()?;
            match output.format {
                Format::Csv => {
                    writeln!(w, "{}", header_line("alpha_estimate", Some(&params), Some(seed)))?;
                    writeln!(w, "trajectory_id,n,K,K_1,alpha_hat")?;
                    for e in &est {
                        writeln!(w, "{},{},{},{},{}", e.trajectory_id, e.n, e.k, e.k1, e.alpha_hat)?;
                    }
                }
                Format::Json => {
                    let doc = serde_json::json!({
                        "schema": "alpha_estimate",
                        "schema_version": SCHEMA_VERSION,
                        "version": version_string(),
                        "alpha": params.alpha(),
                        "theta": params.theta(),
                        "seed": seed,
                        "mean_alpha_hat": mean,
                        "estimates": est,
                    });
                    serde_json::to_writer_pretty(&mut w, &doc)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(Status::Ok)
        }
        Command::OracleCheck { nmax } => {
            let gfc = gfc_oracle_check(nmax, &[(1, 4), (1, 2), (3, 4)])?;
            let mut law = 0.0f64;
            for params in ModelParams::grid() {
                for n in 1..=nmax {
                    law = law.max(exact_dist_kn(&params, n)?.max_abs_diff(&dp_dist_oracle(&params, n)?));
                }
            }
            let ok = gfc <= 1e-12 && law <= 1e-10;
            println!(
                "gfc recursion vs exact rationals (n ≤ {nmax}): max relative error {}",
                round_sig(gfc, 3)
            );
            println!(
                "closed-form law vs forward recursion (n ≤ {nmax}): max abs difference {}",
                round_sig(law, 3)
            );
            println!("{}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { Status::Ok } else { Status::VerificationFailed })
        }
    }
}

fn experiment(params: ModelParams, kind: ExperimentKind, run: &Run) -> Result<ExperimentConfig, Error> {
    Ok(ExperimentConfig::new(
        params,
        kind,
        run.trials,
        run.checkpoints()?,
        run.seed,
    ))
}

fn report(cfg: &ExperimentConfig, output: &Output) -> Result<Status, Error> {
    let result = run_experiment(cfg)?;
    summarize(&result);
    let mut w = output.open()?;
    match output.format {
        Format::Csv => write_result_csv(&mut w, &result)?,
        Format::Json => write_result_json(&mut w, &result)?,
    }
    w.flush()?;
    Ok(if result.passed() {
        Status::Ok
    } else {
        Status::VerificationFailed
    })
}

fn summarize(result: &ExperimentResult) {
    for row in &result.rows {
        let verdict = match row.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let r = row.r.map_or(String::new(), |r| format!(" r={r}"));
        eprintln!(
            "{verdict:4} {}{r} n={}: estimate {} ({})",
            row.quantity,
            row.n,
            round_sig(row.estimate, PROB_DIGITS.min(6)),
            row.criterion
        );
    }
}
