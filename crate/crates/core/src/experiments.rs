//! The numerical experiments: surface ground state, long-wavelength
//! forces, a fixed concentrated force, corrector truncation, budget
//! sweeps, and the derivative check suite.
//!
//! Every experiment is a pure function of its configuration, so rerunning
//! with the same inputs reproduces the outputs bitwise. Reference
//! atomistic solutions are computed on the same truncated chain with the
//! same descent solver at a tighter tolerance; all reported errors are l2
//! norms of strain differences (never displacements).

use thiserror::Error;

use crate::atomistic;
use crate::cauchy_born::{self, BudgetTerms, CbError};
use crate::chain::Displacement;
use crate::corrector::{self, CorrectorError, CorrectorReport, CorrectorState};
use crate::decay::{fit_decay, least_squares_line, DecayFit, FitError, DEFAULT_FIT_RANGE};
use crate::force::{rescale, test2_profile, ExternalForce, ForceError, TEST2_SUPPORT};
use crate::optimize::{fd_check, SolveError, SolveReport, SolverConfig};
use crate::potential::{PotentialError, PotentialParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Domain(#[from] PotentialError),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Cb(#[from] CbError),
    #[error(transparent)]
    Corrector(#[from] CorrectorError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("corrector layer ({layer}) does not fit the chain ({n_bonds} bonds)")]
    SizeMismatch { layer: usize, n_bonds: usize },
}

/// Shared experiment configuration.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ExperimentConfig {
    pub params: PotentialParams,
    /// Free bonds of the truncated chain.
    pub n_bonds: usize,
    pub solver: SolverConfig,
    /// Tolerance of the reference atomistic solves.
    pub reference_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: PotentialParams::copper(),
            n_bonds: 1000,
            solver: SolverConfig::default(),
            reference_tol: 1e-12,
        }
    }
}

impl ExperimentConfig {
    pub fn reference_solver(&self) -> SolverConfig {
        self.solver.with_tol(self.reference_tol)
    }
}

/// Strain-wise sum of predictor and corrector: the predictor-corrector
/// displacement on the predictor's chain.
pub fn assemble_pc(
    u_cb: &Displacement,
    q: &CorrectorState,
) -> Result<Displacement, ExperimentError> {
    if q.layer_width() > u_cb.n_bonds() {
        return Err(ExperimentError::SizeMismatch {
            layer: q.layer_width(),
            n_bonds: u_cb.n_bonds(),
        });
    }
    let strains = (0..u_cb.n_bonds())
        .map(|l| u_cb.strain_at(l) + q.strain_at(l))
        .collect();
    Ok(Displacement::from_strains(strains))
}

/// Boundary-layer size rule for the long-wavelength sweep:
/// `L = 3 + ceil(log_{10/9}(1/lambda))`.
pub fn layer_rule(lambda: f64) -> usize {
    let log = (1.0 / lambda).ln() / (10.0f64 / 9.0).ln();
    3 + log.ceil().max(0.0) as usize
}

/// Fit `ln y = a + s ln x`; returns the slope `s` over entries with
/// positive `y`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        if *x > 0.0 && *y > 0.0 {
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    if lx.len() < 2 {
        return None;
    }
    Some(least_squares_line(&lx, &ly).0)
}

// ---------------------------------------------------------------------
// Test 1: ground state (f = 0)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct GroundStateRow {
    pub layer_width: usize,
    /// `|(u_gr)' - (u_pc)'|_{l2}`; the predictor is zero here.
    pub error: f64,
    pub corrector: CorrectorReport,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub ground_state: Displacement,
    pub reference_report: SolveReport,
    /// Error of the bare predictor, `|(u_gr)'|_{l2}`.
    pub pure_cb_error: f64,
    pub decay_fit: DecayFit,
    /// Analytic decay ratio of the linearized recursion (signed).
    pub analytic_ratio: f64,
    pub rows: Vec<GroundStateRow>,
    /// Fitted ratio of `e(L)` over rows above the solver floor.
    pub convergence_ratio: Option<f64>,
}

/// Rows of `e(L)` below this are considered saturated by solver
/// tolerance and excluded from ratio fits.
pub const ERROR_FLOOR: f64 = 1e-8;

pub fn run_ground_state(
    config: &ExperimentConfig,
    layer_widths: &[usize],
) -> Result<GroundStateResult, ExperimentError> {
    let zero = ExternalForce::zero();
    let (u_gr, reference_report) = atomistic::solve(
        &config.params,
        &zero,
        config.n_bonds,
        None,
        &config.reference_solver(),
    )?;
    let pure_cb_error = u_gr.strain_norm();
    let decay_fit = fit_decay(u_gr.strains(), DEFAULT_FIT_RANGE)?;
    let analytic_ratio = atomistic::decay_ratio(&config.params).map_err(|e| match e {
        atomistic::StabilityError::Domain(d) => ExperimentError::Domain(d),
        other => ExperimentError::Corrector(CorrectorError::Unstable {
            f0: 0.0,
            detail: other.to_string(),
        }),
    })?;

    let predictor = Displacement::zero(config.n_bonds);
    let mut rows = Vec::with_capacity(layer_widths.len());
    let mut widths: Vec<usize> = layer_widths.to_vec();
    widths.sort_unstable();
    let mut warm: Option<CorrectorState> = None;
    for &layer in &widths {
        let (q, report) =
            corrector::solve_corrector(&config.params, layer, 0.0, &config.solver, warm.as_ref())?;
        let u_pc = assemble_pc(&predictor, &q)?;
        rows.push(GroundStateRow {
            layer_width: layer,
            error: u_gr.strain_distance(&u_pc),
            corrector: report,
        });
        warm = Some(q);
    }
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.error > ERROR_FLOOR)
        .map(|r| r.layer_width as f64)
        .collect();
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| r.error > ERROR_FLOOR)
        .map(|r| r.error.ln())
        .collect();
    let convergence_ratio = if xs.len() >= 3 {
        Some(least_squares_line(&xs, &ys).0.exp())
    } else {
        None
    };
    Ok(GroundStateResult {
        ground_state: u_gr,
        reference_report,
        pure_cb_error,
        decay_fit,
        analytic_ratio,
        rows,
        convergence_ratio,
    })
}

// ---------------------------------------------------------------------
// Test 2: long-wavelength limit
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct LongWavelengthRow {
    pub lambda: f64,
    pub layer_width: usize,
    pub f0: f64,
    pub dual_norm: f64,
    /// `|(u_a)' - (u_pc)'|_{l2}` against the warm-started reference.
    pub error: f64,
    pub budget: BudgetTerms,
    pub predictor_report: SolveReport,
    pub corrector: CorrectorReport,
    pub reference_report: SolveReport,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LongWavelengthResult {
    pub rows: Vec<LongWavelengthRow>,
    /// Least-squares slope of `ln error` against `ln lambda`.
    pub slope: Option<f64>,
}

/// One long-wavelength solve: predictor, corrector at the rule's layer
/// size, then the warm-started atomistic reference.
pub fn run_long_wavelength_at(
    config: &ExperimentConfig,
    lambda: f64,
) -> Result<LongWavelengthRow, ExperimentError> {
    let force = rescale(test2_profile, TEST2_SUPPORT, lambda)?;
    let (u_cb, predictor_report) =
        cauchy_born::solve(&config.params, &force, config.n_bonds, &config.solver)?;
    let f0 = cauchy_born::surface_strain_f0(&config.params, &u_cb, Some(&force))?;
    let layer_width = layer_rule(lambda);
    let (q, corrector_report) =
        corrector::solve_corrector(&config.params, layer_width, f0, &config.solver, None)?;
    let u_pc = assemble_pc(&u_cb, &q)?;
    let (u_a, reference_report) = atomistic::solve(
        &config.params,
        &force,
        config.n_bonds,
        Some(&u_pc),
        &config.reference_solver(),
    )?;
    Ok(LongWavelengthRow {
        lambda,
        layer_width,
        f0,
        dual_norm: force.dual_norm(),
        error: u_a.strain_distance(&u_pc),
        budget: cauchy_born::error_budget(&u_cb, &force),
        predictor_report,
        corrector: corrector_report,
        reference_report,
    })
}

pub fn run_long_wavelength(
    config: &ExperimentConfig,
    lambdas: &[f64],
) -> Result<LongWavelengthResult, ExperimentError> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        rows.push(run_long_wavelength_at(config, lambda)?);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let slope = log_log_slope(&xs, &ys);
    Ok(LongWavelengthResult { rows, slope })
}

// ---------------------------------------------------------------------
// Test 3: fixed concentrated force
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct FixedForceRow {
    pub layer_width: usize,
    pub error: f64,
    /// Pure Cauchy-Born error divided by this row's error.
    pub improvement: f64,
    pub corrector: CorrectorReport,
    /// The corrector strains, for profile exports.
    pub q_strains: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FixedForceResult {
    pub f0: f64,
    /// `|(u_a)' - (u_cb)'|_{l2}`.
    pub pure_cb_error: f64,
    pub rows: Vec<FixedForceRow>,
    pub u_atomistic: Displacement,
    pub u_cb: Displacement,
    pub reference_report: SolveReport,
}

pub fn run_fixed_force(
    config: &ExperimentConfig,
    layer_widths: &[usize],
) -> Result<FixedForceResult, ExperimentError> {
    let force = rescale(test2_profile, TEST2_SUPPORT, 1.0)?;
    let (u_cb, _) = cauchy_born::solve(&config.params, &force, config.n_bonds, &config.solver)?;
    let f0 = cauchy_born::surface_strain_f0(&config.params, &u_cb, Some(&force))?;

    let mut widths: Vec<usize> = layer_widths.to_vec();
    widths.sort_unstable();
    let mut correctors = Vec::with_capacity(widths.len());
    let mut warm: Option<CorrectorState> = None;
    for &layer in &widths {
        let (q, report) =
            corrector::solve_corrector(&config.params, layer, f0, &config.solver, warm.as_ref())?;
        correctors.push((q.clone(), report));
        warm = Some(q);
    }

    // reference warm-started from the widest predictor-corrector state
    let best_pc = match correctors.last() {
        Some((q, _)) => assemble_pc(&u_cb, q)?,
        None => u_cb.clone(),
    };
    let (u_a, reference_report) = atomistic::solve(
        &config.params,
        &force,
        config.n_bonds,
        Some(&best_pc),
        &config.reference_solver(),
    )?;
    let pure_cb_error = u_a.strain_distance(&u_cb);

    let mut rows = Vec::with_capacity(correctors.len());
    for (q, report) in correctors {
        let u_pc = assemble_pc(&u_cb, &q)?;
        let error = u_a.strain_distance(&u_pc);
        rows.push(FixedForceRow {
            layer_width: q.layer_width(),
            error,
            improvement: pure_cb_error / error,
            corrector: report,
            q_strains: q.strains().to_vec(),
        });
    }
    Ok(FixedForceResult {
        f0,
        pure_cb_error,
        rows,
        u_atomistic: u_a,
        u_cb,
        reference_report,
    })
}

// ---------------------------------------------------------------------
// Corrector truncation study
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct TruncationRow {
    pub layer_width: usize,
    /// `|q'_ref - q'_L|_{l2}` against the widest layer's solution.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct TruncationResult {
    pub reference_width: usize,
    pub mu_fit: DecayFit,
    pub rows: Vec<TruncationRow>,
    /// Fitted geometric ratio of the distances.
    pub ratio: Option<f64>,
    pub reference: CorrectorState,
    /// Solve report of the reference layer (stability bound included).
    pub reference_report: CorrectorReport,
}

pub fn run_truncation(
    config: &ExperimentConfig,
    f0: f64,
    reference_width: usize,
    layer_widths: &[usize],
) -> Result<TruncationResult, ExperimentError> {
    let (q_ref, reference_report) =
        corrector::solve_corrector(&config.params, reference_width, f0, &config.solver, None)?;
    let mu_fit = corrector::fit_mu_q(&q_ref)?;
    let mut widths: Vec<usize> = layer_widths.to_vec();
    widths.sort_unstable();
    let mut rows = Vec::with_capacity(widths.len());
    let mut warm: Option<CorrectorState> = None;
    for &layer in &widths {
        let (q, _) =
            corrector::solve_corrector(&config.params, layer, f0, &config.solver, warm.as_ref())?;
        rows.push(TruncationRow {
            layer_width: layer,
            distance: q_ref
                .as_displacement()
                .strain_distance(&q.as_displacement()),
        });
        warm = Some(q);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.layer_width as f64).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.distance.max(f64::MIN_POSITIVE).ln())
        .collect();
    let ratio = if rows.len() >= 3 {
        Some(least_squares_line(&xs, &ys).0.exp())
    } else {
        None
    };
    Ok(TruncationResult {
        reference_width,
        mu_fit,
        rows,
        ratio,
        reference: q_ref,
        reference_report,
    })
}

// ---------------------------------------------------------------------
// Error-budget sweep
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct BudgetRow {
    pub lambda: f64,
    pub f0: f64,
    pub budget: BudgetTerms,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BudgetSweepResult {
    pub rows: Vec<BudgetRow>,
    /// Log-log slopes in lambda of |f(0)|, |grad f|_{L2}, |f|_{L4}^2.
    pub slope_f0: Option<f64>,
    pub slope_df: Option<f64>,
    pub slope_f4: Option<f64>,
}

/// Budget terms of the long-wavelength predictor across `lambdas`. The
/// predictor strains come from the pointwise stress inversion, which
/// matches the descent minimizer to far below the budget magnitudes.
pub fn run_budget_sweep(
    config: &ExperimentConfig,
    lambdas: &[f64],
) -> Result<BudgetSweepResult, ExperimentError> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let force = rescale(test2_profile, TEST2_SUPPORT, lambda)?;
        let u_cb = cauchy_born::solve_semianalytic(&config.params, &force, config.n_bonds)?;
        let f0 = cauchy_born::surface_strain_f0(&config.params, &u_cb, Some(&force))?;
        rows.push(BudgetRow {
            lambda,
            f0,
            budget: cauchy_born::error_budget(&u_cb, &force),
        });
    }
    let lams: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let slope_of = |get: &dyn Fn(&BudgetRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(get).collect();
        log_log_slope(&lams, &ys)
    };
    Ok(BudgetSweepResult {
        slope_f0: slope_of(&|r| r.budget.f_at_0),
        slope_df: slope_of(&|r| r.budget.df_l2),
        slope_f4: slope_of(&|r| r.budget.f_l4_sq),
        rows,
    })
}

// ---------------------------------------------------------------------
// Derivative and identity check suite
// ---------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
    pub passed: bool,
}

impl CheckReport {
    fn push(&mut self, name: impl Into<String>, measured: f64, threshold: f64) {
        let passed = measured.is_finite() && measured < threshold;
        self.passed &= passed;
        self.entries.push(CheckEntry {
            name: name.into(),
            measured,
            threshold,
            passed,
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Deterministic generator for the random states of the check suite
/// (splitmix64).
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * unit
    }
}

/// Guarded relative error between `analytic` and `fd`.
fn guarded_rel_err(analytic: f64, fd: f64) -> f64 {
    let diff = (analytic - fd).abs();
    if diff < 1e-8 {
        0.0
    } else {
        diff / analytic.abs()
    }
}

/// Worst guarded mismatch between an analytic derivative and a central
/// difference of `f` over 50 strains in [-0.3, 0.3].
pub(crate) fn scan_derivative(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let s = -0.3 + 0.6 * (i as f64) / 49.0;
        let fd = (f(s + h) - f(s - h)) / (2.0 * h);
        worst = worst.max(guarded_rel_err(df(s), fd));
    }
    worst
}

/// Run the full derivative, symmetry and identity suite.
pub fn run_potential_check(params: &PotentialParams) -> Result<CheckReport, ExperimentError> {
    let p = *params;
    let mut report = CheckReport {
        entries: Vec::new(),
        passed: true,
    };
    let h = 1e-6;
    use crate::potential::Deriv;

    // scalar functions: first derivatives against value differences,
    // second against first-derivative differences
    report.push(
        "pair_phi first derivative",
        scan_derivative(
            &|s| p.pair_phi(1.0 + s, Deriv::Value),
            &|s| p.pair_phi(1.0 + s, Deriv::First),
            h,
        ),
        1e-6,
    );
    report.push(
        "pair_phi second derivative",
        scan_derivative(
            &|s| p.pair_phi(1.0 + s, Deriv::First),
            &|s| p.pair_phi(1.0 + s, Deriv::Second),
            h,
        ),
        1e-5,
    );
    report.push(
        "elec_rho first derivative",
        scan_derivative(
            &|s| p.elec_rho(1.0 + s, Deriv::Value),
            &|s| p.elec_rho(1.0 + s, Deriv::First),
            h,
        ),
        1e-6,
    );
    report.push(
        "elec_rho second derivative",
        scan_derivative(
            &|s| p.elec_rho(1.0 + s, Deriv::First),
            &|s| p.elec_rho(1.0 + s, Deriv::Second),
            h,
        ),
        1e-5,
    );
    report.push(
        "embed_psi first derivative",
        scan_derivative(
            &|s| p.embed_psi(2.0 + s, Deriv::Value).unwrap(),
            &|s| p.embed_psi(2.0 + s, Deriv::First).unwrap(),
            h,
        ),
        1e-6,
    );
    report.push(
        "embed_psi second derivative",
        scan_derivative(
            &|s| p.embed_psi(2.0 + s, Deriv::First).unwrap(),
            &|s| p.embed_psi(2.0 + s, Deriv::Second).unwrap(),
            h,
        ),
        1e-5,
    );
    report.push(
        "site_surf first derivative",
        scan_derivative(
            &|s| p.site_surf(s).unwrap().value,
            &|s| p.site_surf(s).unwrap().grad,
            h,
        ),
        1e-6,
    );
    report.push(
        "site_surf second derivative",
        scan_derivative(
            &|s| p.site_surf(s).unwrap().grad,
            &|s| p.site_surf(s).unwrap().hess,
            h,
        ),
        1e-5,
    );
    report.push(
        "cb_density first derivative",
        scan_derivative(
            &|s| p.cb_density(s, Deriv::Value).unwrap(),
            &|s| p.cb_density(s, Deriv::First).unwrap(),
            h,
        ),
        1e-6,
    );
    report.push(
        "cb_density second derivative",
        scan_derivative(
            &|s| p.cb_density(s, Deriv::First).unwrap(),
            &|s| p.cb_density(s, Deriv::Second).unwrap(),
            h,
        ),
        1e-5,
    );

    // site_bulk partials on random pairs
    let mut rng = SplitMix64(0x5eed);
    let mut worst_g = 0.0f64;
    let mut worst_h = 0.0f64;
    let mut worst_sym = 0.0f64;
    for _ in 0..50 {
        let r = rng.uniform(-0.3, 0.3);
        let s = rng.uniform(-0.3, 0.3);
        let ev = p.site_bulk(r, s)?;
        let fd1 = (p.site_bulk(r + h, s)?.value - p.site_bulk(r - h, s)?.value) / (2.0 * h);
        let fd2 = (p.site_bulk(r, s + h)?.value - p.site_bulk(r, s - h)?.value) / (2.0 * h);
        worst_g = worst_g
            .max(guarded_rel_err(ev.grad[0], fd1))
            .max(guarded_rel_err(ev.grad[1], fd2));
        let fd11 = (p.site_bulk(r + h, s)?.grad[0] - p.site_bulk(r - h, s)?.grad[0]) / (2.0 * h);
        let fd12 = (p.site_bulk(r, s + h)?.grad[0] - p.site_bulk(r, s - h)?.grad[0]) / (2.0 * h);
        let fd22 = (p.site_bulk(r, s + h)?.grad[1] - p.site_bulk(r, s - h)?.grad[1]) / (2.0 * h);
        worst_h = worst_h
            .max(guarded_rel_err(ev.hess[0], fd11))
            .max(guarded_rel_err(ev.hess[1], fd12))
            .max(guarded_rel_err(ev.hess[2], fd22));
        let swapped = p.site_bulk(s, r)?;
        worst_sym = worst_sym
            .max((ev.value - swapped.value).abs())
            .max((ev.grad[0] - swapped.grad[1]).abs())
            .max((ev.hess[0] - swapped.hess[2]).abs());
    }
    report.push("site_bulk gradient", worst_g, 1e-6);
    report.push("site_bulk hessian", worst_h, 1e-5);
    report.push("site_bulk argument-swap symmetry", worst_sym, 1e-15);

    // identities
    let mut worst_w = 0.0f64;
    let mut worst_dw = 0.0f64;
    for i in 0..50 {
        let f = -0.3 + 0.6 * (i as f64) / 49.0;
        let ev = p.site_bulk(f, f)?;
        let (w, dw, _) = p.cb_all(f)?;
        worst_w = worst_w.max((w - ev.value).abs());
        worst_dw = worst_dw.max((dw - (ev.grad[0] + ev.grad[1])).abs());
    }
    report.push("W(F) = V(F, F)", worst_w, 1e-12);
    report.push("dW = d1 V + d2 V", worst_dw, 1e-12);
    report.push(
        "bulk equilibrium dW(0)",
        p.cb_density(0.0, Deriv::First)?.abs(),
        1e-9,
    );

    // energy objectives against the finite-difference harness
    let force = rescale(test2_profile, TEST2_SUPPORT, 0.5)?;
    let n = 24;
    let atom = atomistic::AtomisticObjective::new(&p, &force, n)?;
    let cb = cauchy_born::CbObjective::new(&p, &force, n)?;
    let corr = corrector::CorrectorObjective::new(&p, 0.005, n)?;
    let mut worst_atom = 0.0f64;
    let mut worst_cb = 0.0f64;
    let mut worst_corr = 0.0f64;
    for _ in 0..6 {
        let x: Vec<f64> = (0..n).map(|_| rng.uniform(-0.04, 0.04)).collect();
        worst_atom = worst_atom.max(fd_check(&atom, &x, h).map_err(SolveError::from)?);
        worst_cb = worst_cb.max(fd_check(&cb, &x, h).map_err(SolveError::from)?);
        worst_corr = worst_corr.max(fd_check(&corr, &x, h).map_err(SolveError::from)?);
    }
    report.push("atomistic energy gradient", worst_atom, 1e-6);
    report.push("cauchy-born energy gradient", worst_cb, 1e-6);
    report.push("corrector energy gradient", worst_corr, 1e-6);

    // Hessian matvecs against residual differences
    let strains: Vec<f64> = (0..n).map(|_| rng.uniform(-0.03, 0.03)).collect();
    let dir: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let u = Displacement::from_strains(strains.clone());
    let ha = atomistic::hessian(&p, &u)?;
    let zero = ExternalForce::zero();
    let hess_err = {
        let plus: Vec<f64> = strains.iter().zip(&dir).map(|(s, d)| s + h * d).collect();
        let minus: Vec<f64> = strains.iter().zip(&dir).map(|(s, d)| s - h * d).collect();
        let rp = atomistic::residual(&p, &Displacement::from_strains(plus), &zero)?;
        let rm = atomistic::residual(&p, &Displacement::from_strains(minus), &zero)?;
        let mut hv = vec![0.0; n];
        ha.matvec(&dir, &mut hv);
        let mut worst = 0.0f64;
        let scale = hv.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for l in 0..n {
            let fd = (rp[l] - rm[l]) / (2.0 * h);
            worst = worst.max((fd - hv[l]).abs() / scale);
        }
        worst
    };
    report.push("atomistic hessian matvec", hess_err, 1e-5);

    Ok(report)
}
