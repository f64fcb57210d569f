//! Command-line front end: solve problems from schema files, evaluate proximal
//! operators, run second-order diagnostics, and execute the benchmark suite.
//!
//! Exit codes: 0 on success, 2 when a solve or benchmark assertion fails,
//! 1 on any other error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use almkit::alm::{alm_solve, AlmConfig, PenaltyRule, RunReport, RunStatus};
use almkit::diagnostics::{fit_error_bound_constant, growth_probe, sosc_probe, SoscVerdict};
use almkit::harness::{builtin, builtin_suite, load_outer_str, load_problem_str, run_benchmark};
use almkit::problem::{CompositeProblem, PrimalDualPoint};

#[derive(Parser)]
#[command(
    name = "almkit",
    version,
    about = "Augmented Lagrangian solver for piecewise linear-quadratic composite problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyKind {
    Fixed,
    Geometric,
    Vrule,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on a problem file (or a builtin id prefixed with "builtin:").
    Solve {
        problem: String,
        /// Initial penalty parameter ρ₀.
        #[arg(long, default_value_t = 10.0)]
        rho0: f64,
        /// Penalty update rule.
        #[arg(long, value_enum, default_value_t = PenaltyKind::Vrule)]
        penalty: PenaltyKind,
        /// Growth factor for the geometric and V rules.
        #[arg(long, default_value_t = 10.0)]
        r: f64,
        /// Sufficient-decrease threshold θ_V for the V rule.
        #[arg(long, default_value_t = 0.5)]
        theta_v: f64,
        /// Inner-tolerance exponent α in ε_k = R_k^α.
        #[arg(long, default_value_t = 1.5)]
        alpha: f64,
        /// Stopping tolerance on the KKT residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_outer: usize,
        /// Seed for stochastic subroutines; the solve path itself is deterministic.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Write the per-iteration log as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Primal start as a comma-separated list (default: a Θ-feasible witness).
        #[arg(long)]
        start: Option<String>,
    },
    /// Evaluate prox_{rg}(z) for an outer function loaded from a schema file.
    Prox {
        #[arg(long)]
        g: PathBuf,
        /// Input point as a comma-separated list.
        #[arg(long)]
        z: String,
        #[arg(long)]
        r: f64,
    },
    /// Second-order diagnostics at a candidate primal-dual pair.
    Diagnose {
        problem: String,
        /// Candidate x̄ as a comma-separated list.
        #[arg(long)]
        x: String,
        /// Candidate λ̄ as a comma-separated list.
        #[arg(long)]
        lambda: String,
        /// Run the SOSC probe.
        #[arg(long)]
        sosc: bool,
        /// Run the quadratic-growth probe.
        #[arg(long)]
        growth: bool,
        #[arg(long, default_value_t = 100.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        /// Fit the KKT error-bound constant.
        #[arg(long)]
        errorbound: bool,
        #[arg(long, default_value_t = 1e-2)]
        radius: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run a benchmark suite and report assertion outcomes.
    Bench {
        #[arg(long, default_value = "builtin")]
        suite: String,
        /// Run entries on separate threads.
        #[arg(long)]
        parallel: bool,
        /// Directory for per-entry CSV iteration logs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number {:?}", t.trim()))
        })
        .collect::<Result<_>>()?;
    Ok(DVector::from_vec(vals))
}

fn load_problem(spec: &str) -> Result<CompositeProblem> {
    if let Some(id) = spec.strip_prefix("builtin:") {
        return Ok(builtin(id)?);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec))?;
    Ok(load_problem_str(&text)?)
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.12e}", x)).collect();
    parts.join(", ")
}

fn print_report(report: &RunReport) {
    println!("status:          {:?}", report.status);
    println!("outer iterations: {}", report.records.len());
    println!("final residual:  {:.6e}", report.final_residual);
    println!("x:               [{}]", fmt_vec(&report.final_point.x));
    println!("lambda:          [{}]", fmt_vec(&report.final_point.lambda));
    if let Some(q) = report.q_factor {
        println!("q-factor:        {:.6e}", q);
    }
    if let Some(s) = report.superlinear {
        println!("superlinear:     {}", s);
    }
    if let Some(k) = report.kappa_hat {
        println!("kappa-hat:       {:.6e}", k);
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Solve {
            problem,
            rho0,
            penalty,
            r,
            theta_v,
            alpha,
            tol,
            max_outer,
            seed: _,
            csv,
            start,
        } => {
            let p = load_problem(&problem)?;
            let rule = match penalty {
                PenaltyKind::Fixed => PenaltyRule::Fixed,
                PenaltyKind::Geometric => PenaltyRule::Geometric { factor: r },
                PenaltyKind::Vrule => PenaltyRule::VRule { theta_v, factor: r },
            };
            let cfg = AlmConfig {
                rho0,
                rule,
                tol_exponent: alpha,
                stop_tol: tol,
                max_outer,
                ..AlmConfig::default()
            };
            let x0 = match start {
                Some(text) => parse_vector(&text)?,
                None => p.theta.witness().clone(),
            };
            let start = PrimalDualPoint::new(x0, DVector::zeros(p.dim_m()));
            let report = alm_solve(&p, &start, &cfg)?;
            print_report(&report);
            if let Some(path) = csv {
                let mut file = fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(&mut file)?;
                println!("csv:             {}", path.display());
            }
            Ok(if report.status == RunStatus::KktReached {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Prox { g, z, r } => {
            let text =
                fs::read_to_string(&g).with_context(|| format!("reading {}", g.display()))?;
            let g = load_outer_str(&text)?;
            let z = parse_vector(&z)?;
            let p = g.prox(&z, r)?;
            println!("[{}]", fmt_vec(&p));
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose {
            problem,
            x,
            lambda,
            sosc,
            growth,
            rho,
            gamma,
            errorbound,
            radius,
            samples,
            seed,
        } => {
            let p = load_problem(&problem)?;
            let x = parse_vector(&x)?;
            let lambda = parse_vector(&lambda)?;
            let mut failed = false;
            if !(sosc || growth || errorbound) {
                anyhow::bail!("choose at least one of --sosc, --growth, --errorbound");
            }
            if sosc {
                let report = sosc_probe(&p, &x, &lambda, samples, seed)?;
                println!("sosc verdict:    {:?}", report.verdict);
                println!("min curvature:   {:.6e}", report.min_value_estimate);
                println!("samples:         {}", report.samples_used);
                for piece in &report.pieces {
                    println!(
                        "  piece {}: lineality_min={:?} sampled_min={:?} samples={}",
                        piece.piece, piece.lineality_min, piece.sampled_min, piece.samples
                    );
                }
                if let Some(w) = &report.witness {
                    println!("  witness:       [{}]", fmt_vec(w));
                }
                failed |= report.verdict == SoscVerdict::Fails;
            }
            if growth {
                let report = growth_probe(&p, &x, &lambda, rho, gamma, samples, seed)?;
                println!("growth rho:      {:.6e}", report.rho);
                println!("growth gamma:    {:.6e}", report.gamma);
                println!("ell-hat:         {:.6e}", report.ell_hat);
                println!("violations:      {}", report.violations);
                println!("samples:         {}", report.samples_used);
                failed |= report.violations > 0;
            }
            if errorbound {
                let kappa = fit_error_bound_constant(&p, &x, &lambda, radius, samples, seed)?;
                println!("kappa-hat:       {:.6e}", kappa);
            }
            Ok(if failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Bench {
            suite,
            parallel,
            out,
        } => {
            if suite != "builtin" {
                anyhow::bail!("unknown suite {:?}; available: builtin", suite);
            }
            let outcomes = run_benchmark(&builtin_suite(), parallel);
            if let Some(dir) = &out {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let mut all_passed = true;
            for outcome in &outcomes {
                let mark = if outcome.passed { "pass" } else { "FAIL" };
                println!("[{}] {} ({})", mark, outcome.label, outcome.id);
                for (name, ok) in &outcome.assertion_results {
                    println!("    {} {}", if *ok { "pass" } else { "FAIL" }, name);
                }
                if let Some(err) = &outcome.error {
                    println!("    error: {}", err);
                }
                if let (Some(dir), Some(report)) = (&out, &outcome.report) {
                    let path = dir.join(format!("{}.csv", outcome.label));
                    let mut file = fs::File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    report.write_csv(&mut file)?;
                }
                all_passed &= outcome.passed;
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::FAILURE
        }
    }
}
