//! Steepest descent with a backtracking line search.
//!
//! The descent direction is the negative residual; a trial step is twice
//! the last accepted one (capped so no strain moves more than `max_step`)
//! and is halved until accepted. Acceptance is the Armijo condition
//!
//! ```text
//! E(x - t r) <= E(x) - c t |r|^2
//! ```
//!
//! as long as the predicted decrease `c t |r|^2` is resolvable in f64.
//! Close to a minimizer the true decrease falls below the rounding noise
//! of the energy sum and the comparison degenerates to a coin flip on
//! stale rounding errors, so once the predicted decrease drops under the
//! noise scale of the two energy evaluations the test switches to a
//! derivative form in the spirit of approximate-Wolfe line searches: the
//! energy must not rise beyond noise and the step must not overshoot the
//! directional minimum, `<r(x - t r), r> >= -sigma |r|^2`. Directional
//! derivatives stay fully resolvable there, which is what lets the solver
//! grind down to residual norms near 1e-12 on chains of a thousand bonds.
//!
//! Energy evaluators report a magnitude `scale` alongside the value: the
//! sum of absolute values of the terms *before* cancellation. The noise
//! scale of a comparison is `32 eps (scale_a + scale_b)`.
//!
//! Everything is deterministic: the same inputs produce bitwise identical
//! iterates.

use thiserror::Error;

use crate::potential::PotentialError;

/// Energy value plus the magnitude of what was summed to get it.
#[derive(Debug, Clone, Copy)]
pub struct EnergyEval {
    pub value: f64,
    /// Sum of |term| over the evaluation, pre-cancellation.
    pub scale: f64,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Domain(#[from] PotentialError),
}

/// An objective over a strain vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn energy(&self, x: &[f64]) -> Result<EnergyEval, EvalError>;
    /// Energy plus the residual (gradient in strain coordinates).
    fn energy_and_residual(&self, x: &[f64], residual: &mut [f64])
        -> Result<EnergyEval, EvalError>;
}

/// Tuning knobs for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverConfig {
    /// Stop when the residual l2-norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// First trial step of the first iteration.
    pub step_init: f64,
    /// Cap on the max-norm strain change of a single trial step. Keeps the
    /// iterates from hopping over energy barriers (bond fracture).
    pub max_step: f64,
    /// Abort when any strain magnitude passes this; the chain has left the
    /// physical neighbourhood and no bounded minimizer is ahead.
    pub strain_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iter: 200_000,
            armijo_c: 1e-4,
            shrink: 0.5,
            step_init: 1.0,
            max_step: 0.1,
            strain_limit: 0.75,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(self, grad_tol: f64) -> Self {
        Self { grad_tol, ..self }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.grad_tol > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.step_init > 0.0
            && self.max_step > 0.0
            && self.strain_limit > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolveError::BadConfig)
        }
    }
}

/// Outcome of a minimization run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Final objective value (renormalized energy minus the force term).
    pub final_energy: f64,
    pub converged: bool,
    /// Rejected trial steps over the whole run.
    pub line_search_failures: usize,
}

/// One accepted iterate, for trace dumps.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration")]
    BadConfig,
    #[error(
        "line search stalled at iteration {iteration} (|r| = {grad_norm:.3e}, step {step:.3e})"
    )]
    Stall {
        iteration: usize,
        grad_norm: f64,
        step: f64,
    },
    #[error("no convergence in {max_iter} iterations (|r| = {grad_norm:.3e}, tol {grad_tol:.3e})")]
    MaxIterations {
        max_iter: usize,
        grad_norm: f64,
        grad_tol: f64,
    },
    #[error(
        "strain limit exceeded at iteration {iteration} (|x|_inf = {max_strain:.3e}); \
             the descent left the physical basin"
    )]
    StrainLimit { iteration: usize, max_strain: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

const MIN_STEP: f64 = 1e-16;
const NOISE_ULPS: f64 = 32.0;
/// Overshoot bound of the derivative-based acceptance.
const SIGMA: f64 = 0.9;

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A non-finite residual must never masquerade as convergence
/// (`NaN > tol` is false).
fn checked_norm(v: &[f64]) -> Result<f64, SolveError> {
    let n = norm(v);
    if n.is_finite() {
        Ok(n)
    } else {
        Err(SolveError::Eval(EvalError::Domain(
            PotentialError::NonFinite {
                context: "residual evaluation",
            },
        )))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimize `objective` from `x0` by steepest descent with backtracking.
pub fn minimize(
    objective: &dyn Objective,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    minimize_observed(objective, x0, config, &mut |_| {})
}

/// Like [`minimize`], calling `observer` after every accepted step.
pub fn minimize_observed(
    objective: &dyn Objective,
    x0: &[f64],
    config: &SolverConfig,
    observer: &mut dyn FnMut(TraceRow),
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    config.validate()?;
    assert_eq!(x0.len(), objective.dim());
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut residual = vec![0.0; n];
    let mut e = objective.energy_and_residual(&x, &mut residual)?;
    if !e.value.is_finite() {
        return Err(SolveError::Eval(EvalError::Domain(
            PotentialError::NonFinite {
                context: "objective at initial point",
            },
        )));
    }
    let mut grad_norm = checked_norm(&residual)?;
    observer(TraceRow {
        iteration: 0,
        energy: e.value,
        grad_norm,
        step: 0.0,
    });
    let mut step = config.step_init;
    let mut failures = 0usize;
    let mut iterations = 0usize;

    let mut xn = vec![0.0; n];
    let mut rn = vec![0.0; n];

    while grad_norm > config.grad_tol {
        if iterations >= config.max_iter {
            return Err(SolveError::MaxIterations {
                max_iter: config.max_iter,
                grad_norm,
                grad_tol: config.grad_tol,
            });
        }
        let nr2 = grad_norm * grad_norm;
        let r_inf = max_abs(&residual);
        let mut t = (2.0 * step).min(config.max_step / r_inf);
        loop {
            for i in 0..n {
                xn[i] = x[i] - t * residual[i];
            }
            let probe = objective.energy(&xn)?;
            let mut accepted = None;
            let mut grad_ready = false;
            if probe.value.is_finite() && probe.scale.is_finite() {
                let noise = NOISE_ULPS * f64::EPSILON * (e.scale + probe.scale);
                let predicted = config.armijo_c * t * nr2;
                if predicted >= noise {
                    if probe.value <= e.value - predicted {
                        accepted = Some(probe);
                    }
                } else {
                    // below f64 resolution of the energy; judge the step by
                    // the slope at the trial point instead
                    let e2 = objective.energy_and_residual(&xn, &mut rn)?;
                    let slope: f64 = rn.iter().zip(&residual).map(|(a, b)| a * b).sum();
                    if probe.value <= e.value + noise && slope >= -SIGMA * nr2 {
                        accepted = Some(e2);
                        grad_ready = true;
                    }
                }
            }
            match accepted {
                Some(at_step) => {
                    let max_strain = max_abs(&xn);
                    if max_strain > config.strain_limit {
                        return Err(SolveError::StrainLimit {
                            iteration: iterations,
                            max_strain,
                        });
                    }
                    std::mem::swap(&mut x, &mut xn);
                    e = at_step;
                    step = t;
                    if grad_ready {
                        std::mem::swap(&mut residual, &mut rn);
                    } else {
                        objective.energy_and_residual(&x, &mut residual)?;
                    }
                    grad_norm = checked_norm(&residual)?;
                    break;
                }
                None => {
                    failures += 1;
                    t *= config.shrink;
                    if t < MIN_STEP {
                        return Err(SolveError::Stall {
                            iteration: iterations,
                            grad_norm,
                            step: t,
                        });
                    }
                }
            }
        }
        iterations += 1;
        observer(TraceRow {
            iteration: iterations,
            energy: e.value,
            grad_norm,
            step,
        });
    }

    Ok((
        x,
        SolveReport {
            iterations,
            final_grad_norm: grad_norm,
            final_energy: e.value,
            converged: true,
            line_search_failures: failures,
        },
    ))
}

/// Maximum guarded relative error between the analytic residual and a
/// central finite difference of the energy, coordinate by coordinate.
/// Differences below `1e-8` in absolute value count as zero error.
pub fn fd_check(objective: &dyn Objective, x: &[f64], h: f64) -> Result<f64, EvalError> {
    assert!(h > 0.0);
    let n = objective.dim();
    let mut residual = vec![0.0; n];
    objective.energy_and_residual(x, &mut residual)?;
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..n {
        let xi = xp[i];
        xp[i] = xi + h;
        let plus = objective.energy(&xp)?.value;
        xp[i] = xi - h;
        let minus = objective.energy(&xp)?.value;
        xp[i] = xi;
        let fd = (plus - minus) / (2.0 * h);
        let diff = (fd - residual[i]).abs();
        let err = if diff < 1e-8 {
            0.0
        } else {
            diff / residual[i].abs()
        };
        worst = worst.max(err);
    }
    Ok(worst)
}
