//! The truncated atomistic chain: energy, first and second variations,
//! ground-state solves, and the analytic decay rate of the boundary
//! layer.
//!
//! The chain carries `N` free bond strains; strains past the truncation
//! are exactly zero (clamped far field). The energy of a displacement is
//!
//! ```text
//! E(u) = V_surf(u'_0) + sum_{j=1..N} V(u'_{j-1}, u'_j)
//! ```
//!
//! where the term `j = N` couples the last free bond to the clamped
//! region. Raw sums grow linearly in `N` because `V(0,0) != 0` for the
//! EAM site energy; the renormalized energy subtracts `V(0,0)` from every
//! bulk term so ground-state energies stay O(1) and the minimizers are
//! untouched.

use thiserror::Error;

use crate::chain::Displacement;
use crate::force::ExternalForce;
use crate::optimize::{
    minimize_observed, EnergyEval, EvalError, Objective, SolveError, SolveReport, SolverConfig,
    TraceRow,
};
use crate::potential::{PotentialError, PotentialParams};
use crate::tridiag::SymTridiag;

/// Raw and renormalized energy of one displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub raw: f64,
    /// Raw minus `n_bonds * V(0,0)`.
    pub renormalized: f64,
}

/// Total energy of the truncated chain (no force term).
pub fn energy(
    params: &PotentialParams,
    u: &Displacement,
) -> Result<EnergyBreakdown, PotentialError> {
    let n = u.n_bonds();
    let v00 = params.site_bulk(0.0, 0.0)?.value;
    let mut renormalized = params.site_surf(u.strain_at(0))?.value;
    for j in 1..=n {
        renormalized += params.site_bulk(u.strain_at(j - 1), u.strain_at(j))?.value - v00;
    }
    Ok(EnergyBreakdown {
        raw: renormalized + n as f64 * v00,
        renormalized,
    })
}

/// Residual (first variation minus the force) per bond:
/// `r_l = d2 V(u'_{l-1}, u'_l) + d1 V(u'_l, u'_{l+1}) - g_l`,
/// with the surface term on bond 0.
pub fn residual(
    params: &PotentialParams,
    u: &Displacement,
    force: &ExternalForce,
) -> Result<Vec<f64>, PotentialError> {
    let n = u.n_bonds();
    let mut r = vec![0.0; n];
    if n == 0 {
        return Ok(r);
    }
    for (l, rl) in r.iter_mut().enumerate() {
        *rl = -force.g_at(l);
    }
    r[0] += params.site_surf(u.strain_at(0))?.grad;
    for j in 1..=n {
        let ev = params.site_bulk(u.strain_at(j - 1), u.strain_at(j))?;
        r[j - 1] += ev.grad[0];
        if j < n {
            r[j] += ev.grad[1];
        }
    }
    Ok(r)
}

/// Second variation as a symmetric tridiagonal operator on strain space.
pub fn hessian(params: &PotentialParams, u: &Displacement) -> Result<SymTridiag, PotentialError> {
    let n = u.n_bonds();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    if n == 0 {
        return Ok(SymTridiag::new(diag, off));
    }
    diag[0] = params.site_surf(u.strain_at(0))?.hess;
    for j in 1..=n {
        let ev = params.site_bulk(u.strain_at(j - 1), u.strain_at(j))?;
        diag[j - 1] += ev.hess[0];
        if j < n {
            diag[j] += ev.hess[2];
            off[j - 1] = ev.hess[1];
        }
    }
    Ok(SymTridiag::new(diag, off))
}

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(
        "linearized bond recursion is not stable: a = {a}, b = {b}, \
         discriminant {discriminant} <= 0"
    )]
    Violated { a: f64, b: f64, discriminant: f64 },
    #[error(transparent)]
    Domain(#[from] PotentialError),
}

/// Root of `b x^2 + a x + b = 0` with `|x| < 1`; the decay ratio of the
/// homogeneous strain recursion. Returns 0 when the bonds decouple
/// (`b = 0`).
pub fn decay_ratio_from_coeffs(a: f64, b: f64) -> Result<f64, StabilityError> {
    if b == 0.0 {
        return Ok(0.0);
    }
    let discriminant = a * a - 4.0 * b * b;
    if discriminant <= 0.0 {
        return Err(StabilityError::Violated { a, b, discriminant });
    }
    // q-form of the quadratic formula: no cancellation for either root
    let q = -0.5 * (a + a.signum() * discriminant.sqrt());
    let r1 = q / b;
    let r2 = b / q;
    Ok(if r1.abs() < 1.0 { r1 } else { r2 })
}

/// Analytic decay ratio `lambda` of the ground-state boundary layer:
/// the stable root of the strain recursion linearized at zero strain.
/// Its sign predicts the alternating strain pattern when negative.
pub fn decay_ratio(params: &PotentialParams) -> Result<f64, StabilityError> {
    decay_ratio_at(params, 0.0)
}

/// Decay ratio of the recursion linearized at homogeneous strain `f0`
/// (the far field of a corrector problem).
pub fn decay_ratio_at(params: &PotentialParams, f0: f64) -> Result<f64, StabilityError> {
    let ev = params.site_bulk(f0, f0)?;
    let a = ev.hess[0] + ev.hess[2];
    let b = ev.hess[1];
    decay_ratio_from_coeffs(a, b)
}

/// The atomistic minimization problem `E(u) - <f, u>` over `N` free
/// strains, exposed to the shared solver.
pub struct AtomisticObjective<'a> {
    params: &'a PotentialParams,
    force: &'a ExternalForce,
    n_bonds: usize,
    v00: f64,
}

impl<'a> AtomisticObjective<'a> {
    pub fn new(
        params: &'a PotentialParams,
        force: &'a ExternalForce,
        n_bonds: usize,
    ) -> Result<Self, PotentialError> {
        Ok(Self {
            params,
            force,
            n_bonds,
            v00: params.site_bulk(0.0, 0.0)?.value,
        })
    }

    fn strain(x: &[f64], l: usize) -> f64 {
        x.get(l).copied().unwrap_or(0.0)
    }
}

impl Objective for AtomisticObjective<'_> {
    fn dim(&self) -> usize {
        self.n_bonds
    }

    fn energy(&self, x: &[f64]) -> Result<EnergyEval, EvalError> {
        let surf = self.params.site_surf(Self::strain(x, 0))?;
        let mut value = surf.value;
        let mut scale = surf.value.abs();
        for j in 1..=self.n_bonds {
            let v = self
                .params
                .site_bulk(Self::strain(x, j - 1), Self::strain(x, j))?
                .value;
            value += v - self.v00;
            scale += v.abs() + self.v00.abs();
        }
        for (l, s) in x.iter().enumerate() {
            let work = self.force.g_at(l) * s;
            value -= work;
            scale += work.abs();
        }
        Ok(EnergyEval { value, scale })
    }

    fn energy_and_residual(
        &self,
        x: &[f64],
        residual: &mut [f64],
    ) -> Result<EnergyEval, EvalError> {
        let n = self.n_bonds;
        let surf = self.params.site_surf(Self::strain(x, 0))?;
        let mut value = surf.value;
        let mut scale = surf.value.abs();
        for (l, rl) in residual.iter_mut().enumerate() {
            *rl = -self.force.g_at(l);
        }
        if n > 0 {
            residual[0] += surf.grad;
        }
        for j in 1..=n {
            let ev = self
                .params
                .site_bulk(Self::strain(x, j - 1), Self::strain(x, j))?;
            value += ev.value - self.v00;
            scale += ev.value.abs() + self.v00.abs();
            residual[j - 1] += ev.grad[0];
            if j < n {
                residual[j] += ev.grad[1];
            }
        }
        for (l, s) in x.iter().enumerate() {
            let work = self.force.g_at(l) * s;
            value -= work;
            scale += work.abs();
        }
        Ok(EnergyEval { value, scale })
    }
}

/// Minimize the atomistic energy under `force`, starting from `initial`
/// (or zero).
pub fn solve(
    params: &PotentialParams,
    force: &ExternalForce,
    n_bonds: usize,
    initial: Option<&Displacement>,
    config: &SolverConfig,
) -> Result<(Displacement, SolveReport), SolveError> {
    solve_observed(params, force, n_bonds, initial, config, &mut |_| {})
}

/// [`solve`] with an iteration observer for trace dumps.
pub fn solve_observed(
    params: &PotentialParams,
    force: &ExternalForce,
    n_bonds: usize,
    initial: Option<&Displacement>,
    config: &SolverConfig,
    observer: &mut dyn FnMut(TraceRow),
) -> Result<(Displacement, SolveReport), SolveError> {
    let objective = AtomisticObjective::new(params, force, n_bonds).map_err(EvalError::Domain)?;
    let mut x0 = vec![0.0; n_bonds];
    if let Some(u) = initial {
        for (l, x) in x0.iter_mut().enumerate() {
            *x = u.strain_at(l);
        }
    }
    let (x, report) = minimize_observed(&objective, &x0, config, observer)?;
    Ok((Displacement::from_strains(x), report))
}
