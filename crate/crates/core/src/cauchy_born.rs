//! The Cauchy-Born predictor: lattice minimization of the local energy
//! density, the semi-analytic inversion of the stress function, the
//! boundary strain `F0`, the averaging projector onto bond strains, and
//! the diagnostic error-budget norms.
//!
//! The discretized Cauchy-Born energy `sum_l W(u'_l)` decouples bond by
//! bond once the force is written in dual form, so the minimizer solves
//! `dW(u'_l) = g_l` per bond. That gives two independent routes to the
//! same strains: the shared steepest-descent solver on the coupled sum,
//! and a scalar Newton inversion of `dW` with bisection fallback. The
//! tests hold the two routes against each other.
//!
//! Inversion happens on the window `[-G, G]` where `d2W > d2W(0) / 2`,
//! found by a grid scan; on that window `dW` is strictly increasing and
//! `(dW)^{-1}` is well defined. Forces whose dual field leaves
//! `dW([-G, G])` are rejected as out of range.

use thiserror::Error;

use crate::chain::Displacement;
use crate::force::{ExternalForce, ForceError};
use crate::optimize::{
    minimize, EnergyEval, EvalError, Objective, SolveError, SolveReport, SolverConfig,
};
use crate::potential::{PotentialError, PotentialParams};
use crate::tridiag::SymTridiag;

#[derive(Debug, Error)]
pub enum CbError {
    #[error(transparent)]
    Domain(#[from] PotentialError),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(
        "dual field value {target:.6e} outside the invertible stress range \
         [{lo:.6e}, {hi:.6e}]"
    )]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("stress function has no stable window around zero strain")]
    NoWindow,
}

/// Scan step for the monotonicity window of `dW`.
const WINDOW_SCAN_STEP: f64 = 1e-3;
/// Farthest strain probed by the window scan.
const WINDOW_SCAN_MAX: f64 = 2.0;
/// Relative Newton tolerance on the inverted strain.
const NEWTON_TOL: f64 = 1e-14;

/// Inverts the stress function `dW` on its monotonicity window.
#[derive(Debug, Clone)]
pub struct StressInverter {
    params: PotentialParams,
    window: f64,
    stress_lo: f64,
    stress_hi: f64,
    curvature0: f64,
}

impl StressInverter {
    /// Find the largest symmetric window `[-G, G]` (on a grid of step
    /// 1e-3) where `d2W > d2W(0) / 2`, and cache the stress range on it.
    pub fn new(params: &PotentialParams) -> Result<Self, CbError> {
        let (_, _, curvature0) = params.cb_all(0.0)?;
        if curvature0.is_nan() || curvature0 <= 0.0 {
            return Err(CbError::NoWindow);
        }
        let half = 0.5 * curvature0;
        let mut steps = 0usize;
        loop {
            let f = (steps + 1) as f64 * WINDOW_SCAN_STEP;
            if f > WINDOW_SCAN_MAX {
                break;
            }
            let up = params.cb_density(f, crate::potential::Deriv::Second)?;
            let down = params.cb_density(-f, crate::potential::Deriv::Second)?;
            if up.is_nan() || down.is_nan() || up <= half || down <= half {
                break;
            }
            steps += 1;
        }
        if steps == 0 {
            return Err(CbError::NoWindow);
        }
        let window = steps as f64 * WINDOW_SCAN_STEP;
        let (_, stress_lo, _) = params.cb_all(-window)?;
        let (_, stress_hi, _) = params.cb_all(window)?;
        Ok(Self {
            params: *params,
            window,
            stress_lo,
            stress_hi,
            curvature0,
        })
    }

    /// Half-width `G` of the strain window.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// Invertible stress range `dW([-G, G])`.
    pub fn stress_range(&self) -> (f64, f64) {
        (self.stress_lo, self.stress_hi)
    }

    /// Solve `dW(F) = target` for `F` in `[-G, G]` by Newton iteration
    /// with a maintained bisection bracket.
    pub fn invert(&self, target: f64) -> Result<f64, CbError> {
        if target.is_nan() || target < self.stress_lo || target > self.stress_hi {
            return Err(CbError::OutOfRange {
                target,
                lo: self.stress_lo,
                hi: self.stress_hi,
            });
        }
        let mut lo = -self.window;
        let mut hi = self.window;
        let mut f = (target / self.curvature0).clamp(lo, hi);
        for _ in 0..200 {
            let (_, stress, curvature) = self.params.cb_all(f)?;
            let residual = stress - target;
            if residual == 0.0 {
                return Ok(f);
            }
            if residual > 0.0 {
                hi = f;
            } else {
                lo = f;
            }
            let newton = f - residual / curvature;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - f).abs() <= NEWTON_TOL * (1.0 + f.abs()) {
                return Ok(next);
            }
            f = next;
        }
        Ok(f)
    }
}

/// Raw and renormalized Cauchy-Born energy `sum_l W(u'_l)`.
pub fn cb_energy(
    params: &PotentialParams,
    u: &Displacement,
) -> Result<crate::atomistic::EnergyBreakdown, PotentialError> {
    let w0 = params.cb_density(0.0, crate::potential::Deriv::Value)?;
    let mut renormalized = 0.0;
    for l in 0..u.n_bonds() {
        renormalized += params.cb_density(u.strain_at(l), crate::potential::Deriv::Value)? - w0;
    }
    Ok(crate::atomistic::EnergyBreakdown {
        raw: renormalized + u.n_bonds() as f64 * w0,
        renormalized,
    })
}

/// Cauchy-Born residual per bond: `dW(u'_l) - g_l`.
pub fn cb_residual(
    params: &PotentialParams,
    u: &Displacement,
    force: &ExternalForce,
) -> Result<Vec<f64>, PotentialError> {
    (0..u.n_bonds())
        .map(|l| {
            Ok(params.cb_density(u.strain_at(l), crate::potential::Deriv::First)? - force.g_at(l))
        })
        .collect()
}

/// The (diagonal) Cauchy-Born Hessian on strain space.
pub fn cb_hessian(
    params: &PotentialParams,
    u: &Displacement,
) -> Result<SymTridiag, PotentialError> {
    let n = u.n_bonds();
    let mut diag = vec![0.0; n];
    for (l, d) in diag.iter_mut().enumerate() {
        *d = params.cb_density(u.strain_at(l), crate::potential::Deriv::Second)?;
    }
    Ok(SymTridiag::new(diag, vec![0.0; n.saturating_sub(1)]))
}

/// The discretized Cauchy-Born problem for the shared solver.
pub struct CbObjective<'a> {
    params: &'a PotentialParams,
    force: &'a ExternalForce,
    n_bonds: usize,
    w0: f64,
}

impl<'a> CbObjective<'a> {
    pub fn new(
        params: &'a PotentialParams,
        force: &'a ExternalForce,
        n_bonds: usize,
    ) -> Result<Self, PotentialError> {
        Ok(Self {
            params,
            force,
            n_bonds,
            w0: params.cb_density(0.0, crate::potential::Deriv::Value)?,
        })
    }
}

impl Objective for CbObjective<'_> {
    fn dim(&self) -> usize {
        self.n_bonds
    }

    fn energy(&self, x: &[f64]) -> Result<EnergyEval, EvalError> {
        let mut value = 0.0;
        let mut scale = 0.0;
        for (l, s) in x.iter().enumerate() {
            let w = self.params.cb_density(*s, crate::potential::Deriv::Value)?;
            let work = self.force.g_at(l) * s;
            value += w - self.w0 - work;
            scale += w.abs() + self.w0.abs() + work.abs();
        }
        Ok(EnergyEval { value, scale })
    }

    fn energy_and_residual(
        &self,
        x: &[f64],
        residual: &mut [f64],
    ) -> Result<EnergyEval, EvalError> {
        let mut value = 0.0;
        let mut scale = 0.0;
        for (l, s) in x.iter().enumerate() {
            let (w, dw, _) = self.params.cb_all(*s)?;
            let g = self.force.g_at(l);
            let work = g * s;
            value += w - self.w0 - work;
            scale += w.abs() + self.w0.abs() + work.abs();
            residual[l] = dw - g;
        }
        Ok(EnergyEval { value, scale })
    }
}

/// Gate a force against the invertible stress range; the coupled solve and
/// the pointwise inversion both need the dual field inside it.
fn check_force_range(inverter: &StressInverter, force: &ExternalForce) -> Result<(), CbError> {
    let mut sup = 0.0f64;
    for l in 0..=force.support_end().map_or(0, |m| m + 1) {
        sup = sup.max(force.g_at(l).abs());
    }
    let (lo, hi) = inverter.stress_range();
    let limit = hi.min(-lo);
    if sup > limit {
        return Err(CbError::OutOfRange {
            target: sup,
            lo,
            hi,
        });
    }
    Ok(())
}

/// Minimize the discretized Cauchy-Born energy with the shared descent
/// solver.
pub fn solve(
    params: &PotentialParams,
    force: &ExternalForce,
    n_bonds: usize,
    config: &SolverConfig,
) -> Result<(Displacement, SolveReport), CbError> {
    let inverter = StressInverter::new(params)?;
    check_force_range(&inverter, force)?;
    let objective = CbObjective::new(params, force, n_bonds)?;
    let x0 = vec![0.0; n_bonds];
    let (x, report) = minimize(&objective, &x0, config)?;
    Ok((Displacement::from_strains(x), report))
}

/// The independent route to the lattice Cauchy-Born minimizer: invert the
/// stress function bond by bond at the discrete dual field,
/// `u'_l = (dW)^{-1}(g_l)`.
pub fn solve_semianalytic(
    params: &PotentialParams,
    force: &ExternalForce,
    n_bonds: usize,
) -> Result<Displacement, CbError> {
    let inverter = StressInverter::new(params)?;
    let mut strains = vec![0.0; n_bonds];
    let support = force.support_end().map_or(0, |m| m + 2).min(n_bonds);
    for (l, s) in strains.iter_mut().enumerate().take(support) {
        *s = inverter.invert(force.g_at(l))?;
    }
    Ok(Displacement::from_strains(strains))
}

/// Continuum strain of the Cauchy-Born solution at position `x`:
/// `(dW)^{-1}(gt(x))`.
pub fn continuum_strain_at(
    inverter: &StressInverter,
    force: &ExternalForce,
    x: f64,
) -> Result<f64, CbError> {
    inverter.invert(force.gtilde(x)?)
}

/// Boundary strain `F0` of the predictor: the continuum strain at the
/// surface when the force is known, else the first stored bond strain.
pub fn surface_strain_f0(
    params: &PotentialParams,
    u_cb: &Displacement,
    force: Option<&ExternalForce>,
) -> Result<f64, CbError> {
    match force {
        Some(f) => {
            let inverter = StressInverter::new(params)?;
            continuum_strain_at(&inverter, f, 0.0)
        }
        None => Ok(u_cb.strain_at(0)),
    }
}

/// 5-point Gauss-Legendre nodes and weights on [0, 1].
const GL_NODES: [(f64, f64); 5] = [
    (0.5 - 0.453_089_922_969_332, 0.118_463_442_528_094_54),
    (0.5 - 0.269_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_44),
    (0.5 + 0.269_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.5 + 0.453_089_922_969_332, 0.118_463_442_528_094_54),
];

/// Project a continuum strain field onto bond strains by per-interval
/// averaging: `(P u)'_l = integral_l^{l+1} grad_u`. Gauss-Legendre
/// quadrature, exact for polynomials through degree 9.
pub fn project_strain_field(grad_u: impl Fn(f64) -> f64, n_bonds: usize) -> Displacement {
    let strains = (0..n_bonds)
        .map(|l| {
            GL_NODES
                .iter()
                .map(|(node, weight)| weight * grad_u(l as f64 + node))
                .sum()
        })
        .collect();
    Displacement::from_strains(strains)
}

/// The projector restricted to lattice displacements is the identity:
/// bond averages of the piecewise-affine interpolant reproduce the bond
/// strains.
pub fn project_lattice(u: &Displacement) -> Displacement {
    u.clone()
}

/// Diagnostic norms entering the predictor-corrector error estimate.
/// Discrete surrogates on unit spacing: differences of bond strains for
/// the displacement terms, sample differences for the force terms.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BudgetTerms {
    /// |d2 u(0)|: first strain difference at the surface.
    pub d2u_at_0: f64,
    /// ||d2 u||_{L4}^2.
    pub d2u_l4_sq: f64,
    /// ||d3 u||_{L2}.
    pub d3u_l2: f64,
    /// ||grad f||_{L2} of the piecewise-affine interpolant.
    pub df_l2: f64,
    /// |f(0)|.
    pub f_at_0: f64,
    /// ||f||_{L4}^2 on the lattice samples.
    pub f_l4_sq: f64,
}

impl BudgetTerms {
    /// Surface part of the error estimate, `|d2 u(0)|` alone.
    pub fn surface_term(&self) -> f64 {
        self.d2u_at_0
    }

    /// The force-only form of the estimate (without the layer term):
    /// `|f(0)| + ||f||_{L4}^2 + ||grad f||_{L2}`.
    pub fn force_only_sum(&self) -> f64 {
        self.f_at_0 + self.f_l4_sq + self.df_l2
    }
}

/// Compute the budget terms for a predictor solution and its force.
pub fn error_budget(u_cb: &Displacement, force: &ExternalForce) -> BudgetTerms {
    let n = u_cb.n_bonds();
    let mut d2_sup0 = 0.0;
    let mut d2_l4 = 0.0;
    let mut d3_l2 = 0.0;
    for l in 0..n {
        let d2 = u_cb.strain_at(l + 1) - u_cb.strain_at(l);
        if l == 0 {
            d2_sup0 = d2.abs();
        }
        d2_l4 += d2.powi(4);
        if l >= 1 {
            let d3 = u_cb.strain_at(l + 1) - 2.0 * u_cb.strain_at(l) + u_cb.strain_at(l - 1);
            d3_l2 += d3 * d3;
        }
    }
    let support = force.support_end().map_or(0, |m| m + 1);
    let mut df_l2 = 0.0;
    let mut f_l4 = 0.0;
    for l in 0..=support {
        let df = force.at(l + 1) - force.at(l);
        df_l2 += df * df;
        f_l4 += force.at(l).powi(4);
    }
    BudgetTerms {
        d2u_at_0: d2_sup0,
        d2u_l4_sq: d2_l4.sqrt(),
        d3u_l2: d3_l2.sqrt(),
        df_l2: df_l2.sqrt(),
        f_at_0: force.at(0).abs(),
        f_l4_sq: f_l4.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::{rescale, test2_profile, TEST2_SUPPORT};
    use crate::optimize::fd_check;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cu() -> PotentialParams {
        PotentialParams::copper()
    }

    #[test]
    fn window_and_range_sane() {
        let inv = StressInverter::new(&cu()).unwrap();
        assert!(
            inv.window() > 0.005 && inv.window() < 0.1,
            "G = {}",
            inv.window()
        );
        let (lo, hi) = inv.stress_range();
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn inversion_roundtrip() {
        let p = cu();
        let inv = StressInverter::new(&p).unwrap();
        let g = inv.window();
        let mut f = -g;
        while f <= g {
            let stress = p.cb_density(f, crate::potential::Deriv::First).unwrap();
            if stress >= inv.stress_range().0 && stress <= inv.stress_range().1 {
                let back = inv.invert(stress).unwrap();
                assert_abs_diff_eq!(back, f, epsilon = 1e-12);
            }
            f += g / 7.0;
        }
    }

    #[test]
    fn inversion_of_zero_stress_is_zero_strain() {
        let inv = StressInverter::new(&cu()).unwrap();
        assert_abs_diff_eq!(inv.invert(0.0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inversion_linearization() {
        // strain ~ target / d2W(0) for tiny targets
        let p = cu();
        let inv = StressInverter::new(&p).unwrap();
        let curvature = p.cb_density(0.0, crate::potential::Deriv::Second).unwrap();
        for &t in &[1e-4, -1e-4, 5e-5] {
            let f = inv.invert(t).unwrap();
            assert_relative_eq!(f, t / curvature, max_relative = 1e-2);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let inv = StressInverter::new(&cu()).unwrap();
        let (_, hi) = inv.stress_range();
        assert!(matches!(
            inv.invert(hi * 2.0),
            Err(CbError::OutOfRange { .. })
        ));
    }

    #[test]
    fn oversized_force_rejected_before_solving() {
        // the dual field must stay inside the invertible stress range
        let p = cu();
        let huge = ExternalForce::from_samples(vec![0.0, 100.0]).unwrap();
        assert!(matches!(
            solve(&p, &huge, 16, &SolverConfig::default()),
            Err(CbError::OutOfRange { .. })
        ));
        assert!(matches!(
            solve_semianalytic(&p, &huge, 16),
            Err(CbError::OutOfRange { .. })
        ));
    }

    #[test]
    fn zero_force_minimizer_is_zero() {
        let p = cu();
        let (u, report) = solve(&p, &ExternalForce::zero(), 50, &SolverConfig::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(u.strains(), vec![0.0; 50].as_slice());
        let e = cb_energy(&p, &u).unwrap();
        assert_eq!(e.renormalized, 0.0);
    }

    #[test]
    fn single_strained_bond_energy() {
        let p = cu();
        let mut strains = vec![0.0; 8];
        strains[0] = 0.04;
        let u = Displacement::from_strains(strains);
        let e = cb_energy(&p, &u).unwrap();
        let w0 = p.cb_density(0.0, crate::potential::Deriv::Value).unwrap();
        let w = p.cb_density(0.04, crate::potential::Deriv::Value).unwrap();
        assert_relative_eq!(e.raw, w + 7.0 * w0, max_relative = 1e-12);
        assert_relative_eq!(e.renormalized, w - w0, max_relative = 1e-10);
    }

    #[test]
    fn descent_and_inversion_agree() {
        let p = cu();
        let force = rescale(test2_profile, TEST2_SUPPORT, 0.25).unwrap();
        let n = 64;
        let (ua, _) = solve(&p, &force, n, &SolverConfig::default()).unwrap();
        let ub = solve_semianalytic(&p, &force, n).unwrap();
        let linf = ua
            .strains()
            .iter()
            .zip(ub.strains())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(linf <= 1e-8, "routes differ by {linf}");
    }

    #[test]
    fn strain_sign_follows_dual_field() {
        let p = cu();
        let force = rescale(test2_profile, TEST2_SUPPORT, 0.25).unwrap();
        let u = solve_semianalytic(&p, &force, 32).unwrap();
        for l in 0..20 {
            let g = force.g_at(l);
            if g.abs() > 1e-6 {
                assert_eq!(u.strain_at(l).signum(), g.signum(), "bond {l}");
            }
        }
    }

    #[test]
    fn cb_objective_matches_finite_differences() {
        let p = cu();
        let force = rescale(test2_profile, TEST2_SUPPORT, 0.5).unwrap();
        let obj = CbObjective::new(&p, &force, 12).unwrap();
        let x: Vec<f64> = (0..12)
            .map(|l| 0.002 * ((l * 7 % 5) as f64 - 2.0) + 0.0005)
            .collect();
        let err = fd_check(&obj, &x, 1e-6).unwrap();
        assert!(err < 1e-6, "fd error {err}");
    }

    #[test]
    fn f0_zero_without_force() {
        let p = cu();
        let u = Displacement::zero(10);
        assert_eq!(surface_strain_f0(&p, &u, None).unwrap(), 0.0);
        let f0 = surface_strain_f0(&p, &u, Some(&ExternalForce::zero())).unwrap();
        assert_abs_diff_eq!(f0, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn f0_bounded_by_dual_norm_trend() {
        // |F0| shrinks monotonically with the force amplitude
        let p = cu();
        let mut last = f64::INFINITY;
        for &lam in &[1.0, 0.5, 0.25, 0.125] {
            let force = rescale(|x| lam * test2_profile(x), TEST2_SUPPORT, 1.0).unwrap();
            let f0 = surface_strain_f0(&p, &Displacement::zero(4), Some(&force))
                .unwrap()
                .abs();
            assert!(f0 < last);
            last = f0;
        }
    }

    #[test]
    fn projector_reproduces_polynomial_fields() {
        // affine displacement: constant strain
        let proj = project_strain_field(|_| 0.37, 6);
        for l in 0..6 {
            assert_relative_eq!(proj.strain_at(l), 0.37, max_relative = 1e-15);
        }
        // u = x^2 / 2: strain x, bond average l + 1/2
        let proj = project_strain_field(|x| x, 3);
        assert_relative_eq!(proj.strain_at(0), 0.5, max_relative = 1e-14);
        assert_relative_eq!(proj.strain_at(2), 2.5, max_relative = 1e-14);
    }

    #[test]
    fn projector_is_identity_on_lattice_fields() {
        let u = Displacement::from_strains(vec![0.1, -0.2, 0.05]);
        assert_eq!(project_lattice(&u), u);
    }

    #[test]
    fn budget_zero_for_zero_force() {
        let b = error_budget(&Displacement::zero(16), &ExternalForce::zero());
        assert_eq!(b.d2u_at_0, 0.0);
        assert_eq!(b.force_only_sum(), 0.0);
    }

    #[test]
    fn budget_force_terms_scale() {
        // |f(0)| ~ lambda, |grad f|_{L2} and |f|_{L4}^2 ~ lambda^{3/2}
        let lams = [0.25, 0.125, 0.0625, 0.03125];
        let mut rows = Vec::new();
        for &lam in &lams {
            let force = rescale(test2_profile, TEST2_SUPPORT, lam).unwrap();
            rows.push(error_budget(&Displacement::zero(4), &force));
        }
        let slope = |get: &dyn Fn(&BudgetTerms) -> f64| {
            let xs: Vec<f64> = lams.iter().map(|l| l.ln()).collect();
            let ys: Vec<f64> = rows.iter().map(|r| get(r).ln()).collect();
            crate::decay::least_squares_line(&xs, &ys).0
        };
        let s_f0 = slope(&|r| r.f_at_0);
        let s_df = slope(&|r| r.df_l2);
        let s_f4 = slope(&|r| r.f_l4_sq);
        assert!((s_f0 - 1.0).abs() < 0.05, "f(0) slope {s_f0}");
        assert!((s_df - 1.5).abs() < 0.15, "df slope {s_df}");
        assert!((s_f4 - 1.5).abs() < 0.15, "f4 slope {s_f4}");
    }

    #[test]
    fn budget_second_difference_definition() {
        let u = Displacement::from_strains(vec![0.1, 0.3, 0.2]);
        let b = error_budget(&u, &ExternalForce::zero());
        assert_abs_diff_eq!(b.d2u_at_0, 0.2, epsilon = 1e-15);
    }
}
