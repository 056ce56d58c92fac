//! Command-line driver for the chain predictor-corrector experiments.
//!
//! Each subcommand runs one experiment, writes its result tables (CSV by
//! default), a JSON summary, and a manifest recording every configuration
//! value that influenced the run. Reruns with the same manifest reproduce
//! the outputs bitwise.
//!
//! Exit codes: 0 on success, 1 on failed checks or I/O trouble, 2 on
//! solver failures (non-convergence, instability), 3 on domain or
//! configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chainpc::cauchy_born::CbError;
use chainpc::corrector::CorrectorError;
use chainpc::experiments::{self, ExperimentConfig, ExperimentError};
use chainpc::force::{rescale, test2_profile, ExternalForce, TEST2_SUPPORT};
use chainpc::optimize::TraceRow;
use chainpc::{PotentialParams, SolverConfig};

#[derive(Parser)]
#[command(
    name = "chainpc",
    about = "Cauchy-Born predictor with a surface corrector on a 1D EAM chain",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Free bonds of the truncated chain.
    #[arg(long, global = true, default_value_t = 1000)]
    n: usize,

    /// Residual tolerance of the descent solver.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Tolerance of reference atomistic solves.
    #[arg(long = "ref-tol", global = true, default_value_t = 1e-12)]
    ref_tol: f64,

    /// Iteration cap of the descent solver.
    #[arg(long = "max-iter", global = true, default_value_t = 200_000)]
    max_iter: usize,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Potential parameter file (key = value); built-in copper otherwise.
    #[arg(long, global = true)]
    potential: Option<PathBuf>,

    /// Format of the result tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Test 1: zero-force ground state, its decay, and the corrector-only
    /// approximation error over a layer sweep.
    GroundState {
        /// Comma-separated corrector layer widths.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14"
        )]
        l_widths: Vec<usize>,
        /// Dump the reference solve's iteration trace to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Corrector truncation study: distance of the layer-L solution to a
    /// wide reference layer.
    #[command(name = "converge-L", alias = "converge-l")]
    ConvergeL {
        /// Background strain of the corrector problem.
        #[arg(long, default_value_t = 0.0)]
        f0: f64,
        /// Layer width of the reference solution.
        #[arg(long, default_value_t = 40)]
        ref_width: usize,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "2,3,4,5,6,7,8,9,10,11,12"
        )]
        l_widths: Vec<usize>,
    },
    /// Test 2: long-wavelength rescaled force; first-order convergence in
    /// the scaling factor.
    LongWavelength {
        /// Comma-separated scaling factors (defaults to 2^-1 .. 2^-6).
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Test 3: fixed concentrated force; non-vanishing error and the
    /// improvement over the bare predictor.
    FixedForce {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1,2,3,4,5,6,8,10,12,14,16,20"
        )]
        l_widths: Vec<usize>,
    },
    /// Derivative, symmetry and identity checks of the potential and the
    /// three energies.
    Check,
    /// Error-budget diagnostics: per-bond dual field and strain for one
    /// force, plus budget scaling over a lambda sweep.
    ErrorBudget {
        /// Force samples: a CSV path or `builtin:test2`.
        #[arg(long, default_value = "builtin:test2")]
        force: String,
        /// Scaling factor applied to the builtin profile.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Sweep factors for the scaling slopes.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.5,0.25,0.125,0.0625,0.03125"
        )]
        lambdas: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("cannot load potential: {0}")]
    Potential(#[from] chainpc::potential::ConfigError),
    #[error("cannot load force: {0}")]
    Force(#[from] chainpc::force::ForceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Experiment(e) => match e {
                ExperimentError::Solve(_) => 2,
                ExperimentError::Cb(CbError::Solve(_)) => 2,
                ExperimentError::Corrector(CorrectorError::NotConverged(_)) => 2,
                ExperimentError::Corrector(CorrectorError::Unstable { .. }) => 2,
                _ => 3,
            },
            CliError::Potential(_) | CliError::Force(_) => 3,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let params = match &cli.potential {
        Some(path) => PotentialParams::load(path)?,
        None => PotentialParams::copper(),
    };
    let config = ExperimentConfig {
        params,
        n_bonds: cli.n,
        solver: SolverConfig {
            grad_tol: cli.tol,
            max_iter: cli.max_iter,
            ..SolverConfig::default()
        },
        reference_tol: cli.ref_tol,
    };
    fs::create_dir_all(&cli.out)?;

    match &cli.command {
        Command::GroundState { l_widths, trace } => ground_state(cli, &config, l_widths, trace),
        Command::ConvergeL {
            f0,
            ref_width,
            l_widths,
        } => converge_l(cli, &config, *f0, *ref_width, l_widths),
        Command::LongWavelength { lambdas } => {
            let lams = lambdas
                .clone()
                .unwrap_or_else(|| (1..=6).map(|k| 0.5f64.powi(k)).collect());
            long_wavelength(cli, &config, &lams)
        }
        Command::FixedForce { l_widths } => fixed_force(cli, &config, l_widths),
        Command::Check => check(cli, &config),
        Command::ErrorBudget {
            force,
            lambda,
            lambdas,
        } => error_budget(cli, &config, force, *lambda, lambdas),
    }
}

fn ground_state(
    cli: &Cli,
    config: &ExperimentConfig,
    l_widths: &[usize],
    trace: &Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    // optional iteration trace of the reference solve
    if let Some(path) = trace {
        let mut rows: Vec<TraceRow> = Vec::new();
        let zero = ExternalForce::zero();
        chainpc::atomistic::solve_observed(
            &config.params,
            &zero,
            config.n_bonds,
            None,
            &config.reference_solver(),
            &mut |row| rows.push(row),
        )
        .map_err(ExperimentError::from)?;
        let body: Vec<String> = rows
            .iter()
            .map(|r| {
                format!(
                    "{},{:.17e},{:.17e},{:.6e}",
                    r.iteration, r.energy, r.grad_norm, r.step
                )
            })
            .collect();
        write_text(path, &table("iteration,energy,grad_norm,step", &body))?;
    }

    let result = experiments::run_ground_state(config, l_widths)?;

    let profile: Vec<String> = displacement_rows(&result.ground_state);
    write_table(cli, "ground-state-profile", "site,u,strain", &profile)?;

    let errors: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{},{:.12e}", r.layer_width, r.error))
        .collect();
    write_table(cli, "ground-state-errors", "layer_width,error", &errors)?;

    let summary = serde_json::json!({
        "pure_cb_error": result.pure_cb_error,
        "decay_fit": result.decay_fit,
        "analytic_ratio": result.analytic_ratio,
        "convergence_ratio": result.convergence_ratio,
        "reference_report": result.reference_report,
        "rows": result.rows,
    });
    write_json(cli, "ground-state", &summary)?;
    write_manifest(
        cli,
        config,
        "ground-state",
        serde_json::json!({"l_widths": l_widths}),
    )?;
    println!(
        "ground state: |u'| = {:.6e}, fitted mu = {:.6} (analytic {:.6}), e(L) ratio {:?}",
        result.pure_cb_error,
        result.decay_fit.mu,
        result.analytic_ratio.abs(),
        result.convergence_ratio
    );
    Ok(ExitCode::SUCCESS)
}

fn converge_l(
    cli: &Cli,
    config: &ExperimentConfig,
    f0: f64,
    ref_width: usize,
    l_widths: &[usize],
) -> Result<ExitCode, CliError> {
    let result = experiments::run_truncation(config, f0, ref_width, l_widths)?;
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{},{:.12e}", r.layer_width, r.distance))
        .collect();
    write_table(cli, "converge-L", "layer_width,distance", &rows)?;
    let profile: Vec<String> = result
        .reference
        .strains()
        .iter()
        .enumerate()
        .map(|(l, s)| format!("{l},{s:.17e}"))
        .collect();
    write_table(cli, "converge-L-reference", "bond,q_strain", &profile)?;
    let summary = serde_json::json!({
        "f0": f0,
        "reference_width": result.reference_width,
        "mu_fit": result.mu_fit,
        "ratio": result.ratio,
        "reference_report": result.reference_report,
        "rows": result.rows,
    });
    write_json(cli, "converge-L", &summary)?;
    write_manifest(
        cli,
        config,
        "converge-L",
        serde_json::json!({"f0": f0, "ref_width": ref_width, "l_widths": l_widths}),
    )?;
    println!(
        "corrector truncation: mu_q = {:.6}, distance ratio {:?}",
        result.mu_fit.mu, result.ratio
    );
    Ok(ExitCode::SUCCESS)
}

fn long_wavelength(
    cli: &Cli,
    config: &ExperimentConfig,
    lambdas: &[f64],
) -> Result<ExitCode, CliError> {
    let result = experiments::run_long_wavelength(config, lambdas)?;
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| {
            format!(
                "{:.10e},{},{:.10e},{:.10e},{:.12e}",
                r.lambda, r.layer_width, r.f0, r.dual_norm, r.error
            )
        })
        .collect();
    write_table(
        cli,
        "long-wavelength",
        "lambda,layer_width,f0,dual_norm,error",
        &rows,
    )?;
    let summary = serde_json::json!({
        "slope": result.slope,
        "rows": result.rows,
    });
    write_json(cli, "long-wavelength", &summary)?;
    write_manifest(
        cli,
        config,
        "long-wavelength",
        serde_json::json!({"lambdas": lambdas}),
    )?;
    println!("long wavelength: log-log slope {:?}", result.slope);
    Ok(ExitCode::SUCCESS)
}

fn fixed_force(
    cli: &Cli,
    config: &ExperimentConfig,
    l_widths: &[usize],
) -> Result<ExitCode, CliError> {
    let result = experiments::run_fixed_force(config, l_widths)?;
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{},{:.12e},{:.6}", r.layer_width, r.error, r.improvement))
        .collect();
    write_table(cli, "fixed-force", "layer_width,error,improvement", &rows)?;

    // strain profiles of the three solutions; the displayed corrector
    // layer is 5 when present, else the widest
    let display = result
        .rows
        .iter()
        .find(|r| r.layer_width == 5)
        .or_else(|| result.rows.last());
    let profile_rows: Vec<String> = (0..40.min(config.n_bonds))
        .map(|l| {
            let q = display
                .and_then(|r| r.q_strains.get(l).copied())
                .unwrap_or(0.0);
            format!(
                "{l},{:.12e},{:.12e},{:.12e}",
                result.u_atomistic.strain_at(l),
                result.u_cb.strain_at(l),
                result.u_cb.strain_at(l) + q,
            )
        })
        .collect();
    write_table(
        cli,
        "fixed-force-profiles",
        "bond,atomistic_strain,cb_strain,pc_strain",
        &profile_rows,
    )?;
    let display = display.map(|r| r.layer_width);

    let summary = serde_json::json!({
        "f0": result.f0,
        "pure_cb_error": result.pure_cb_error,
        "rows": result.rows,
        "displayed_layer": display,
        "reference_report": result.reference_report,
    });
    write_json(cli, "fixed-force", &summary)?;
    write_manifest(
        cli,
        config,
        "fixed-force",
        serde_json::json!({"l_widths": l_widths}),
    )?;
    let best = result.rows.iter().find(|r| r.layer_width == 5);
    println!(
        "fixed force: pure CB error {:.6e}, improvement at L=5: {:?}",
        result.pure_cb_error,
        best.map(|r| r.improvement)
    );
    Ok(ExitCode::SUCCESS)
}

fn check(cli: &Cli, config: &ExperimentConfig) -> Result<ExitCode, CliError> {
    let report = experiments::run_potential_check(&config.params)?;
    let rows: Vec<String> = report
        .entries
        .iter()
        .map(|e| {
            format!(
                "{},{:.6e},{:.6e},{}",
                e.name, e.measured, e.threshold, e.passed
            )
        })
        .collect();
    write_table(cli, "check", "check,measured,threshold,passed", &rows)?;
    write_json(cli, "check", &serde_json::json!(report))?;
    write_manifest(cli, config, "check", serde_json::json!({}))?;
    for entry in &report.entries {
        println!(
            "{} {}: {:.3e} (threshold {:.1e})",
            if entry.passed { "PASS" } else { "FAIL" },
            entry.name,
            entry.measured,
            entry.threshold
        );
    }
    if report.passed {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} of {} checks failed",
            report.failures().count(),
            report.entries.len()
        );
        Ok(ExitCode::from(1))
    }
}

fn error_budget(
    cli: &Cli,
    config: &ExperimentConfig,
    force_spec: &str,
    lambda: f64,
    lambdas: &[f64],
) -> Result<ExitCode, CliError> {
    let force = match force_spec {
        "builtin:test2" => {
            rescale(test2_profile, TEST2_SUPPORT, lambda).map_err(ExperimentError::from)?
        }
        path => ExternalForce::load_csv(Path::new(path))?,
    };
    let u_cb = chainpc::cauchy_born::solve_semianalytic(&config.params, &force, config.n_bonds)
        .map_err(ExperimentError::from)?;
    let budget = chainpc::cauchy_born::error_budget(&u_cb, &force);
    let f0 = chainpc::cauchy_born::surface_strain_f0(&config.params, &u_cb, Some(&force))
        .map_err(ExperimentError::from)?;

    let support = force.support_end().map_or(4, |m| m + 4);
    let bonds: Vec<String> = (0..support.min(config.n_bonds))
        .map(|l| {
            let gt = force.gtilde(l as f64 + 0.5).unwrap_or(0.0);
            format!("{l},{:.12e},{:.12e}", u_cb.strain_at(l), gt)
        })
        .collect();
    write_table(cli, "error-budget-bonds", "bond,strain,gtilde", &bonds)?;

    let sweep = experiments::run_budget_sweep(config, lambdas)?;
    let rows: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| {
            format!(
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.lambda,
                r.f0,
                r.budget.f_at_0,
                r.budget.df_l2,
                r.budget.f_l4_sq,
                r.budget.d2u_at_0,
                r.budget.d2u_l4_sq,
                r.budget.d3u_l2
            )
        })
        .collect();
    write_table(
        cli,
        "error-budget-sweep",
        "lambda,f0,f_at_0,df_l2,f_l4_sq,d2u_at_0,d2u_l4_sq,d3u_l2",
        &rows,
    )?;

    let summary = serde_json::json!({
        "force": force_spec,
        "lambda": lambda,
        "f0": f0,
        "budget": budget,
        "sweep": sweep,
    });
    write_json(cli, "error-budget", &summary)?;
    write_manifest(
        cli,
        config,
        "error-budget",
        serde_json::json!({"force": force_spec, "lambda": lambda, "lambdas": lambdas}),
    )?;
    println!(
        "budget: |f(0)| = {:.4e}, |grad f| = {:.4e}, slopes {:?}/{:?}/{:?}",
        budget.f_at_0, budget.df_l2, sweep.slope_f0, sweep.slope_df, sweep.slope_f4
    );
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------------
// output helpers
// ----------------------------------------------------------------------

fn displacement_rows(u: &chainpc::Displacement) -> Vec<String> {
    let sites = u.displacements();
    sites
        .iter()
        .enumerate()
        .map(|(l, ul)| format!("{l},{:.17e},{:.17e}", ul, u.strain_at(l)))
        .collect()
}

fn table(header: &str, rows: &[String]) -> String {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    text
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)?;
    Ok(())
}

fn write_table(cli: &Cli, stem: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
    match cli.format {
        Format::Csv => write_text(&cli.out.join(format!("{stem}.csv")), &table(header, rows)),
        Format::Json => {
            let cols: Vec<&str> = header.split(',').collect();
            let objects: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (key, value) in cols.iter().zip(row.split(',')) {
                        let parsed = value
                            .parse::<f64>()
                            .map(serde_json::Value::from)
                            .unwrap_or_else(|_| serde_json::Value::from(value));
                        obj.insert((*key).to_string(), parsed);
                    }
                    serde_json::Value::Object(obj)
                })
                .collect();
            write_text(
                &cli.out.join(format!("{stem}.json")),
                &serde_json::to_string_pretty(&objects)?,
            )
        }
    }
}

fn write_json(cli: &Cli, stem: &str, value: &serde_json::Value) -> Result<(), CliError> {
    write_text(
        &cli.out.join(format!("{stem}-summary.json")),
        &serde_json::to_string_pretty(value)?,
    )
}

fn write_manifest(
    cli: &Cli,
    config: &ExperimentConfig,
    command: &str,
    arguments: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "command": command,
        "config": config,
        "arguments": arguments,
        "format": match cli.format { Format::Csv => "csv", Format::Json => "json" },
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_text(
        &cli.out.join(format!("{command}-manifest.json")),
        &serde_json::to_string_pretty(&manifest)?,
    )
}
