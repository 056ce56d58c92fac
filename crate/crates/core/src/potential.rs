//! EAM site energies for a nearest-neighbour chain.
//!
//! A site carries one or two bond strains. The bulk site energy is
//!
//! ```text
//! V(r, s) = phi(1+r)/2 + phi(1+s)/2 + psi(rho(1+r) + rho(1+s))
//! ```
//!
//! and the surface atom, which has a single neighbour, gets
//!
//! ```text
//! V_surf(s) = phi(1+s)/2 + psi(rho(1+s))
//! ```
//!
//! with pair potential `phi`, electron density `rho`, and embedding energy
//! `psi`. Evaluating the bulk energy at a homogeneous strain gives the
//! Cauchy-Born energy density `W(F) = V(F, F)`, written here as
//! `phi(1+F) + psi(2 rho(1+F))` so that `V(F, F) - W(F)` cancels bitwise.
//!
//! All first and second derivatives are closed-form; finite differences
//! appear only in the test suite as oracles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Derivative order selector for the scalar potential functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Value,
    First,
    Second,
}

/// Parameters of the exponential EAM model:
///
/// ```text
/// phi(r) = phi_e exp(-gamma (r/r_e - 1))
/// rho(r) = f_e   exp(-beta  (r/r_e - 1))
/// psi(p) = -E_c [1 - (alpha/beta) ln(p/rho_e)] (p/rho_e)^(alpha/beta)
///          - phi_e (p/rho_e)^(gamma/beta)
/// ```
///
/// The default instance is the copper parameter set; with it the bulk
/// equilibrium strain is exactly zero (`d/dF W(0) = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub phi_e: f64,
    pub f_e: f64,
    pub e_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho_e: f64,
    pub r_e: f64,
    pub gamma: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self::copper()
    }
}

/// Value, gradient and (symmetric) Hessian of the two-strain site energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteEval {
    pub value: f64,
    /// `(d1 V, d2 V)`
    pub grad: [f64; 2],
    /// `(d11 V, d12 V, d22 V)`; symmetric by construction.
    pub hess: [f64; 3],
}

/// Value and derivatives of the one-strain surface site energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfEval {
    pub value: f64,
    pub grad: f64,
    pub hess: f64,
}

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("embedding function undefined for non-positive density {rho}")]
    NonPositiveDensity { rho: f64 },
    #[error("non-finite value produced by {context}")]
    NonFinite { context: &'static str },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read potential file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown parameter {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate parameter {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid number for {key:?}: {value:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("missing parameter {key:?}")]
    MissingKey { key: String },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

const KEYS: [&str; 8] = [
    "phi_e", "f_e", "E_c", "alpha", "beta", "rho_e", "r_e", "gamma",
];

impl PotentialParams {
    /// Copper EAM parameters.
    pub fn copper() -> Self {
        Self {
            phi_e: 10.6,
            f_e: 1.0,
            e_c: 3.54,
            alpha: 21.0,
            beta: 6.0,
            rho_e: 2.0,
            r_e: 1.0,
            gamma: 8.0,
        }
    }

    /// Check the structural invariants (finite, `beta != 0`, `rho_e > 0`,
    /// `r_e > 0`).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("phi_e", self.phi_e),
            ("f_e", self.f_e),
            ("E_c", self.e_c),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("rho_e", self.rho_e),
            ("r_e", self.r_e),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!("{name} is not finite")));
            }
        }
        if self.beta == 0.0 {
            return Err(ConfigError::Invalid("beta must be nonzero".into()));
        }
        if self.rho_e <= 0.0 {
            return Err(ConfigError::Invalid("rho_e must be positive".into()));
        }
        if self.r_e <= 0.0 {
            return Err(ConfigError::Invalid("r_e must be positive".into()));
        }
        Ok(())
    }

    /// Parse a key-value potential file. Exactly the eight parameter names
    /// are accepted; unknown or missing keys are errors. `#` starts a
    /// comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen: [Option<f64>; 8] = [None; 8];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ConfigError::Malformed {
                    line,
                    text: raw.to_string(),
                })?;
            let key = key.trim();
            let value = value.trim();
            let slot =
                KEYS.iter()
                    .position(|k| *k == key)
                    .ok_or_else(|| ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })?;
            if seen[slot].is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            seen[slot] = Some(parsed);
        }
        for (slot, key) in KEYS.iter().enumerate() {
            if seen[slot].is_none() {
                return Err(ConfigError::MissingKey {
                    key: (*key).to_string(),
                });
            }
        }
        let params = Self {
            phi_e: seen[0].unwrap(),
            f_e: seen[1].unwrap(),
            e_c: seen[2].unwrap(),
            alpha: seen[3].unwrap(),
            beta: seen[4].unwrap(),
            rho_e: seen[5].unwrap(),
            r_e: seen[6].unwrap(),
            gamma: seen[7].unwrap(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Load a potential file from disk.
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// `phi` and its first two derivatives; the exponential is evaluated
    /// once.
    #[inline]
    pub fn phi_all(&self, r: f64) -> (f64, f64, f64) {
        let v = self.phi_e * (-self.gamma * (r / self.r_e - 1.0)).exp();
        let c = -self.gamma / self.r_e;
        (v, c * v, c * c * v)
    }

    /// `rho` and its first two derivatives.
    #[inline]
    pub fn rho_all(&self, r: f64) -> (f64, f64, f64) {
        let v = self.f_e * (-self.beta * (r / self.r_e - 1.0)).exp();
        let c = -self.beta / self.r_e;
        (v, c * v, c * c * v)
    }

    /// `psi` and its first two derivatives. The logarithm restricts the
    /// domain to positive densities.
    #[inline]
    pub fn psi_all(&self, rho: f64) -> Result<(f64, f64, f64), PotentialError> {
        if rho.is_nan() || rho <= 0.0 {
            return Err(PotentialError::NonPositiveDensity { rho });
        }
        let c1 = self.alpha / self.beta;
        let c2 = self.gamma / self.beta;
        let x = rho / self.rho_e;
        let ln_x = x.ln();
        let p2 = x.powf(c1 - 2.0);
        let p1 = p2 * x;
        let p0 = p1 * x;
        let q2 = x.powf(c2 - 2.0);
        let q1 = q2 * x;
        let q0 = q1 * x;
        let v = -self.e_c * (1.0 - c1 * ln_x) * p0 - self.phi_e * q0;
        let d = (self.e_c * c1 * c1 * p1 * ln_x - self.phi_e * c2 * q1) / self.rho_e;
        let dd = (self.e_c * c1 * c1 * ((c1 - 1.0) * p2 * ln_x + p2)
            - self.phi_e * c2 * (c2 - 1.0) * q2)
            / (self.rho_e * self.rho_e);
        Ok((v, d, dd))
    }

    /// Pair potential `phi` or one of its derivatives.
    pub fn pair_phi(&self, r: f64, order: Deriv) -> f64 {
        let (v, d, dd) = self.phi_all(r);
        match order {
            Deriv::Value => v,
            Deriv::First => d,
            Deriv::Second => dd,
        }
    }

    /// Electron density `rho` or one of its derivatives.
    pub fn elec_rho(&self, r: f64, order: Deriv) -> f64 {
        let (v, d, dd) = self.rho_all(r);
        match order {
            Deriv::Value => v,
            Deriv::First => d,
            Deriv::Second => dd,
        }
    }

    /// Embedding energy `psi` or one of its derivatives.
    pub fn embed_psi(&self, rho: f64, order: Deriv) -> Result<f64, PotentialError> {
        let (v, d, dd) = self.psi_all(rho)?;
        Ok(match order {
            Deriv::Value => v,
            Deriv::First => d,
            Deriv::Second => dd,
        })
    }

    /// Bulk site energy `V(r, s)` with gradient and Hessian.
    pub fn site_bulk(&self, r: f64, s: f64) -> Result<SiteEval, PotentialError> {
        let (phi_r, dphi_r, ddphi_r) = self.phi_all(1.0 + r);
        let (phi_s, dphi_s, ddphi_s) = self.phi_all(1.0 + s);
        let (rho_r, drho_r, ddrho_r) = self.rho_all(1.0 + r);
        let (rho_s, drho_s, ddrho_s) = self.rho_all(1.0 + s);
        let (psi, dpsi, ddpsi) = self.psi_all(rho_r + rho_s)?;

        let value = 0.5 * phi_r + 0.5 * phi_s + psi;
        if !value.is_finite() {
            return Err(PotentialError::NonFinite {
                context: "bulk site energy",
            });
        }
        Ok(SiteEval {
            value,
            grad: [0.5 * dphi_r + dpsi * drho_r, 0.5 * dphi_s + dpsi * drho_s],
            hess: [
                0.5 * ddphi_r + ddpsi * drho_r * drho_r + dpsi * ddrho_r,
                ddpsi * drho_r * drho_s,
                0.5 * ddphi_s + ddpsi * drho_s * drho_s + dpsi * ddrho_s,
            ],
        })
    }

    /// Surface site energy `V_surf(s)` with derivatives.
    pub fn site_surf(&self, s: f64) -> Result<SurfEval, PotentialError> {
        let (phi, dphi, ddphi) = self.phi_all(1.0 + s);
        let (rho, drho, ddrho) = self.rho_all(1.0 + s);
        let (psi, dpsi, ddpsi) = self.psi_all(rho)?;
        let value = 0.5 * phi + psi;
        if !value.is_finite() {
            return Err(PotentialError::NonFinite {
                context: "surface site energy",
            });
        }
        Ok(SurfEval {
            value,
            grad: 0.5 * dphi + dpsi * drho,
            hess: 0.5 * ddphi + ddpsi * drho * drho + dpsi * ddrho,
        })
    }

    /// Cauchy-Born energy density `W(F) = V(F, F)` or one of its
    /// derivatives. The two half pair terms are folded into a single
    /// `phi(1+F)`, and the density sum into `2 rho(1+F)`, both exact, so
    /// `V(F, F) - W(F)` cancels to the last bit.
    pub fn cb_density(&self, f: f64, order: Deriv) -> Result<f64, PotentialError> {
        let (w, dw, ddw) = self.cb_all(f)?;
        Ok(match order {
            Deriv::Value => w,
            Deriv::First => dw,
            Deriv::Second => ddw,
        })
    }

    /// `W`, `dW/dF` and `d2W/dF2` in one call.
    pub fn cb_all(&self, f: f64) -> Result<(f64, f64, f64), PotentialError> {
        let (phi, dphi, ddphi) = self.phi_all(1.0 + f);
        let (rho, drho, ddrho) = self.rho_all(1.0 + f);
        let (psi, dpsi, ddpsi) = self.psi_all(2.0 * rho)?;
        Ok((
            phi + psi,
            dphi + 2.0 * drho * dpsi,
            ddphi + 2.0 * ddrho * dpsi + 4.0 * drho * drho * ddpsi,
        ))
    }
}
