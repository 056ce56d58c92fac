//! The surface corrector: a compactly supported strain field on the
//! boundary layer `[0, L)` that repairs the predictor near the surface.
//!
//! Against a homogeneous background strain `F0` (the predictor's boundary
//! value, the only coupling between the two stages), the corrector
//! minimizes the excess energy
//!
//! ```text
//! E(q; F0) = V_surf(F0 + q'_0) - W(F0) - q'_0 dW(F0)
//!          + sum_{j=1..L} [ V(F0 + q'_{j-1}, F0 + q'_j)
//!                           - W(F0) - q'_j dW(F0) ]
//! ```
//!
//! Terms past `j = L` vanish identically (both strains equal `F0` and
//! `V(F, F) - W(F)` cancels bitwise), so the sum is finite without any
//! tail tolerance. At `F0 = 0` the functional coincides, up to the
//! constant `W(0)`, with the renormalized atomistic energy on the same
//! space: the zero-force ground state doubles as a cross-solver oracle.
//!
//! Existence holds only for small `|F0|`: under enough tension the linear
//! term pulls the layer over the fracture barrier and no bounded
//! minimizer exists. The solver reports that escape (and any indefinite
//! Hessian at the solution) as a distinct instability error, and the
//! report carries the smallest Hessian eigenvalue that certifies the
//! minimum.

use thiserror::Error;

use crate::chain::Displacement;
use crate::decay::{fit_decay, DecayFit, FitError, DEFAULT_FIT_RANGE};
use crate::optimize::{
    minimize, EnergyEval, EvalError, Objective, SolveError, SolveReport, SolverConfig,
};
use crate::potential::{PotentialError, PotentialParams};
use crate::tridiag::SymTridiag;

/// Corrector strain field on a boundary layer, together with the
/// background strain it corrects against.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorState {
    f0: f64,
    strains: Vec<f64>,
}

impl CorrectorState {
    pub fn new(f0: f64, strains: Vec<f64>) -> Self {
        assert!(f0.is_finite(), "background strain must be finite");
        assert!(
            strains.iter().all(|s| s.is_finite()),
            "corrector strains must be finite"
        );
        Self { f0, strains }
    }

    pub fn zero(f0: f64, layer_width: usize) -> Self {
        Self::new(f0, vec![0.0; layer_width])
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn layer_width(&self) -> usize {
        self.strains.len()
    }

    pub fn strains(&self) -> &[f64] {
        &self.strains
    }

    /// `q'_l`, zero at and beyond the layer edge.
    pub fn strain_at(&self, l: usize) -> f64 {
        self.strains.get(l).copied().unwrap_or(0.0)
    }

    /// View the corrector as a displacement field on the chain.
    pub fn as_displacement(&self) -> Displacement {
        Displacement::from_strains(self.strains.clone())
    }
}

#[derive(Debug, Error)]
pub enum CorrectorError {
    #[error(transparent)]
    Domain(#[from] PotentialError),
    #[error("corrector solve failed: {0}")]
    NotConverged(SolveError),
    #[error("corrector problem unstable at F0 = {f0:.6e}: {detail}")]
    Unstable { f0: f64, detail: String },
}

#[derive(Debug, Error)]
#[error("truncation width {requested} exceeds layer width {layer_width}")]
pub struct TruncateError {
    pub requested: usize,
    pub layer_width: usize,
}

/// Corrector energy `E(q; F0)`; see the module docs.
pub fn corrector_energy(
    params: &PotentialParams,
    q: &CorrectorState,
) -> Result<f64, PotentialError> {
    let (w0, dw0, _) = params.cb_all(q.f0)?;
    let width = q.layer_width();
    let mut e = params.site_surf(q.f0 + q.strain_at(0))?.value - w0 - q.strain_at(0) * dw0;
    for j in 1..=width {
        e += params
            .site_bulk(q.f0 + q.strain_at(j - 1), q.f0 + q.strain_at(j))?
            .value
            - w0
            - q.strain_at(j) * dw0;
    }
    Ok(e)
}

/// First variation of the corrector energy on the layer's bonds.
pub fn corrector_residual(
    params: &PotentialParams,
    q: &CorrectorState,
) -> Result<Vec<f64>, PotentialError> {
    let width = q.layer_width();
    let (_, dw0, _) = params.cb_all(q.f0)?;
    let mut r = vec![-dw0; width];
    if width == 0 {
        return Ok(r);
    }
    r[0] += params.site_surf(q.f0 + q.strain_at(0))?.grad;
    for j in 1..=width {
        let ev = params.site_bulk(q.f0 + q.strain_at(j - 1), q.f0 + q.strain_at(j))?;
        r[j - 1] += ev.grad[0];
        if j < width {
            r[j] += ev.grad[1];
        }
    }
    Ok(r)
}

/// Second variation of the corrector energy restricted to the layer.
pub fn corrector_hessian(
    params: &PotentialParams,
    q: &CorrectorState,
) -> Result<SymTridiag, PotentialError> {
    let width = q.layer_width();
    let mut diag = vec![0.0; width];
    let mut off = vec![0.0; width.saturating_sub(1)];
    if width == 0 {
        return Ok(SymTridiag::new(diag, off));
    }
    diag[0] = params.site_surf(q.f0 + q.strain_at(0))?.hess;
    for j in 1..=width {
        let ev = params.site_bulk(q.f0 + q.strain_at(j - 1), q.f0 + q.strain_at(j))?;
        diag[j - 1] += ev.hess[0];
        if j < width {
            diag[j] += ev.hess[2];
            off[j - 1] = ev.hess[1];
        }
    }
    Ok(SymTridiag::new(diag, off))
}

/// The corrector problem as seen by the shared solver.
pub struct CorrectorObjective<'a> {
    params: &'a PotentialParams,
    f0: f64,
    layer_width: usize,
    w0: f64,
    dw0: f64,
}

impl<'a> CorrectorObjective<'a> {
    pub fn new(
        params: &'a PotentialParams,
        f0: f64,
        layer_width: usize,
    ) -> Result<Self, PotentialError> {
        let (w0, dw0, _) = params.cb_all(f0)?;
        Ok(Self {
            params,
            f0,
            layer_width,
            w0,
            dw0,
        })
    }

    fn strain(&self, x: &[f64], l: usize) -> f64 {
        self.f0 + x.get(l).copied().unwrap_or(0.0)
    }
}

impl Objective for CorrectorObjective<'_> {
    fn dim(&self) -> usize {
        self.layer_width
    }

    fn energy(&self, x: &[f64]) -> Result<EnergyEval, EvalError> {
        let surf = self.params.site_surf(self.strain(x, 0))?;
        let mut value = surf.value - self.w0 - x.first().copied().unwrap_or(0.0) * self.dw0;
        let mut scale = surf.value.abs() + self.w0.abs();
        for j in 1..=self.layer_width {
            let v = self
                .params
                .site_bulk(self.strain(x, j - 1), self.strain(x, j))?
                .value;
            let work = x.get(j).copied().unwrap_or(0.0) * self.dw0;
            value += v - self.w0 - work;
            scale += v.abs() + self.w0.abs() + work.abs();
        }
        Ok(EnergyEval { value, scale })
    }

    fn energy_and_residual(
        &self,
        x: &[f64],
        residual: &mut [f64],
    ) -> Result<EnergyEval, EvalError> {
        let width = self.layer_width;
        let surf = self.params.site_surf(self.strain(x, 0))?;
        let mut value = surf.value - self.w0 - x.first().copied().unwrap_or(0.0) * self.dw0;
        let mut scale = surf.value.abs() + self.w0.abs();
        for rl in residual.iter_mut() {
            *rl = -self.dw0;
        }
        if width > 0 {
            residual[0] += surf.grad;
        }
        for j in 1..=width {
            let ev = self
                .params
                .site_bulk(self.strain(x, j - 1), self.strain(x, j))?;
            let work = x.get(j).copied().unwrap_or(0.0) * self.dw0;
            value += ev.value - self.w0 - work;
            scale += ev.value.abs() + self.w0.abs() + work.abs();
            residual[j - 1] += ev.grad[0];
            if j < width {
                residual[j] += ev.grad[1];
            }
        }
        Ok(EnergyEval { value, scale })
    }
}

/// Corrector solve outcome: the shared solver's report plus the smallest
/// Hessian eigenvalue at the minimizer (the stability certificate).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CorrectorReport {
    pub solve: SolveReport,
    pub hessian_min_eig: f64,
    pub f0: f64,
    pub layer_width: usize,
}

/// Solve the corrector problem on `[0, L)` against background strain
/// `f0`, optionally warm-started from a previous layer's solution.
///
/// A descent that escapes toward bond fracture (possible when `f0` pulls
/// under tension) and an indefinite Hessian at the solution are both
/// reported as [`CorrectorError::Unstable`]; plain non-convergence keeps
/// the solver's own diagnostics.
pub fn solve_corrector(
    params: &PotentialParams,
    layer_width: usize,
    f0: f64,
    config: &SolverConfig,
    warm_start: Option<&CorrectorState>,
) -> Result<(CorrectorState, CorrectorReport), CorrectorError> {
    let objective = CorrectorObjective::new(params, f0, layer_width)?;
    let mut x0 = vec![0.0; layer_width];
    if let Some(w) = warm_start {
        for (l, x) in x0.iter_mut().enumerate() {
            *x = w.strain_at(l);
        }
    }
    let (x, solve) = match minimize(&objective, &x0, config) {
        Ok(ok) => ok,
        Err(SolveError::StrainLimit {
            iteration,
            max_strain,
        }) => {
            return Err(CorrectorError::Unstable {
                f0,
                detail: format!(
                    "descent escaped the surface basin at iteration {iteration} \
                     (|q'|_inf = {max_strain:.3e}); no bounded minimizer"
                ),
            })
        }
        Err(e @ SolveError::Eval(_)) => {
            return Err(CorrectorError::NotConverged(e));
        }
        Err(other) => return Err(CorrectorError::NotConverged(other)),
    };
    let state = CorrectorState::new(f0, x);
    let min_eig = if layer_width > 0 {
        corrector_hessian(params, &state)?.smallest_eigenvalue()
    } else {
        f64::INFINITY
    };
    if min_eig <= 0.0 {
        return Err(CorrectorError::Unstable {
            f0,
            detail: format!("Hessian at the minimizer is not positive (min eig {min_eig:.3e})"),
        });
    }
    Ok((
        state,
        CorrectorReport {
            solve,
            hessian_min_eig: min_eig,
            f0,
            layer_width,
        },
    ))
}

/// Truncate a corrector to a narrower layer: strains copied on
/// `[0, width)`, zero beyond.
pub fn truncate(q: &CorrectorState, width: usize) -> Result<CorrectorState, TruncateError> {
    if width > q.layer_width() {
        return Err(TruncateError {
            requested: width,
            layer_width: q.layer_width(),
        });
    }
    Ok(CorrectorState::new(q.f0, q.strains[..width].to_vec()))
}

/// Fit the exponential decay ratio of the corrector strains.
pub fn fit_mu_q(q: &CorrectorState) -> Result<DecayFit, FitError> {
    let end = DEFAULT_FIT_RANGE.end.min(q.layer_width().saturating_sub(1));
    fit_decay(q.strains(), DEFAULT_FIT_RANGE.start..end)
}
