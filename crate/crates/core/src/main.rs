use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use amtraj::am::{default_initial_guess, optimize_with, rate_report, Termination};
use amtraj::error::Error;
use amtraj::instances::{seeded_instances, InstanceConfig};
use amtraj::io::{emit_report, export_trajectory, load_problem};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "amtraj", version, about = "Piecewise-polynomial trajectories by alternating minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file, writing the trajectory CSV and the report.
    Solve {
        problem: PathBuf,
        /// Trajectory CSV output (stdout if omitted and no report path is given).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// JSON report output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Sample interval of the exported trajectory.
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Highest derivative order exported.
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        /// Override the iteration limit K.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Override the stopping tolerance.
        #[arg(long)]
        delta: Option<f64>,
        /// Print the human-readable report to stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Validate a problem file without solving it.
    Check { problem: PathBuf },
    /// Run the convergence checks on seeded random instances.
    Rate {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_segments: usize,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    if e.is_validation() || matches!(e, Error::Io(_)) {
        ExitCode::from(EXIT_VALIDATION)
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn main() -> ExitCode {
    // Usage errors are input failures too; clap would exit with 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve {
            problem,
            trajectory,
            report,
            dt,
            max_order,
            max_iterations,
            delta,
            verbose,
        } => solve(problem, trajectory, report, dt, max_order, max_iterations, delta, verbose),
        Command::Check { problem } => check(problem),
        Command::Rate {
            instances,
            seed,
            max_segments,
            max_iterations,
        } => rate(instances, seed, max_segments, max_iterations),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve(
    path: PathBuf,
    trajectory: Option<PathBuf>,
    report_path: Option<PathBuf>,
    dt: f64,
    max_order: usize,
    max_iterations: Option<usize>,
    delta: Option<f64>,
    verbose: bool,
) -> Result<ExitCode, Error> {
    if !(dt > 0.0 && dt.is_finite()) {
        eprintln!("error: --dt must be a positive number, got {dt}");
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }
    let loaded = load_problem(&path)?;
    let spec = &loaded.spec;
    if max_order > spec.degree {
        eprintln!("error: --max-order {max_order} exceeds the polynomial degree {}", spec.degree);
        return Ok(ExitCode::from(EXIT_VALIDATION));
    }
    let d_p0 = loaded.initial_guess.resolve(spec)?;
    let k = max_iterations.unwrap_or(spec.settings.max_iterations);
    let delta = delta.or(spec.settings.delta);
    let result = optimize_with(spec, &d_p0, k, delta)?;

    let report = emit_report(&result);
    if verbose {
        eprint!("{}", report.to_text());
    }
    if let Some(p) = &report_path {
        fs::write(p, report.to_json())?;
    }
    if result.termination != Termination::Degenerate {
        let csv = export_trajectory(&result, dt, max_order)?.to_csv();
        match &trajectory {
            Some(p) => fs::write(p, csv)?,
            None if report_path.is_none() => print!("{csv}"),
            None => {}
        }
    }

    match result.termination {
        Termination::Degenerate => {
            eprintln!(
                "error: degenerate segment {}: no interior duration minimizer",
                result.degenerate_segment.unwrap_or_default()
            );
            Ok(ExitCode::from(EXIT_NUMERICAL))
        }
        Termination::MaxIterations => {
            eprintln!("warning: iteration limit {k} reached before the tolerance");
            Ok(ExitCode::SUCCESS)
        }
        Termination::ToleranceMet => Ok(ExitCode::SUCCESS),
    }
}

fn check(path: PathBuf) -> Result<ExitCode, Error> {
    let loaded = load_problem(&path)?;
    for n in loaded.spec.validate()? {
        println!("notice: {n}");
    }
    println!(
        "ok: {} segments, degree {}, {} free rows",
        loaded.spec.segments(),
        loaded.spec.degree,
        loaded.initial_guess.resolve(&loaded.spec)?.nrows()
    );
    Ok(ExitCode::SUCCESS)
}

fn rate(
    count: usize,
    seed: u64,
    max_segments: usize,
    max_iterations: Option<usize>,
) -> Result<ExitCode, Error> {
    let cfg = InstanceConfig {
        max_segments: max_segments.max(2),
        ..InstanceConfig::default()
    };
    let mut failures = 0;
    let mut degenerate = 0;
    println!("instance,segments,degree,iterates,termination,J0,J_final,M_c,decrease,monotone,prefix,envelope");
    for (i, spec) in seeded_instances(seed, count, &cfg).iter().enumerate() {
        let d_p0 = default_initial_guess(spec)?;
        let k = max_iterations.unwrap_or(spec.settings.max_iterations);
        let result = match optimize_with(spec, &d_p0, k, None) {
            Ok(r) => r,
            Err(e) => {
                println!("{i},{},{},0,error,,,,,,,", spec.segments(), spec.degree);
                eprintln!("instance {i}: {e}");
                failures += 1;
                continue;
            }
        };
        if result.termination == Termination::Degenerate {
            degenerate += 1;
        }
        if result.records.len() < 2 {
            println!(
                "{i},{},{},1,{},{:e},{:e},,n/a,n/a,n/a,n/a",
                spec.segments(),
                spec.degree,
                result.termination.as_str(),
                result.final_cost(),
                result.final_cost()
            );
            continue;
        }
        let rep = rate_report(&result.records)?;
        let flag = |ok: bool| if ok { "pass" } else { "FAIL" };
        let decrease = rep.decrease_violations.is_empty();
        let monotone = rep.monotonicity_violations.is_empty();
        let prefix = rep.prefix.iter().all(|p| p.passed);
        let envelope = if rep.envelope.applicable {
            flag(rep.envelope.passed)
        } else {
            "n/a"
        };
        if !(decrease && monotone && prefix) {
            failures += 1;
        }
        println!(
            "{i},{},{},{},{},{:e},{:e},{:e},{},{},{},{}",
            spec.segments(),
            spec.degree,
            result.records.len(),
            result.termination.as_str(),
            result.records[0].cost,
            result.final_cost(),
            rep.m_c,
            flag(decrease),
            flag(monotone),
            flag(prefix),
            envelope
        );
    }
    eprintln!("{count} instances, {failures} with violations, {degenerate} degenerate");
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    })
}
