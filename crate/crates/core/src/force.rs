//! External forces on the chain and their dual fields.
//!
//! A force is a finite list of per-site samples `f_0 .. f_M` with an
//! implicit zero tail. Because displacements are pinned at the surface
//! (`u_0 = 0`), the force acts on strains through the discrete dual field
//!
//! ```text
//! g_l = sum_{k > l} f_k,          <f, u> = <g, u'>
//! ```
//!
//! and through the continuous dual field of the piecewise-affine
//! interpolant,
//!
//! ```text
//! gt(x) = integral_x^inf f(s) ds,
//! ```
//!
//! which is piecewise quadratic and evaluated here in closed form. For a
//! compactly supported force the two are tied together exactly:
//! `gt(l + 1/2) - g_l = (f_l - f_{l+1}) / 8`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForceError {
    #[error("dual field is defined on x >= 0, got {x}")]
    NegativePosition { x: f64 },
    #[error("rescaling factor must lie in (0, 1], got {lambda}")]
    BadLambda { lambda: f64 },
    #[error("force samples must be finite (sample {index} is {value})")]
    NonFinite { index: usize, value: f64 },
    #[error("cannot read force file: {0}")]
    Io(#[from] std::io::Error),
    #[error("force file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A compactly supported external force and its discrete dual field.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForce {
    samples: Vec<f64>,
    g: Vec<f64>,
    /// Integral of the interpolant over `[l, inf)` for `l = 0 ..= len`.
    suffix_integrals: Vec<f64>,
}

impl ExternalForce {
    /// Build a force from site samples. Trailing exact zeros are dropped;
    /// `g` is accumulated backwards so each tail sum is exact up to
    /// rounding. An empty list is the zero force.
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self, ForceError> {
        for (index, &value) in samples.iter().enumerate() {
            if !value.is_finite() {
                return Err(ForceError::NonFinite { index, value });
            }
        }
        while samples.last() == Some(&0.0) {
            samples.pop();
        }
        let n = samples.len();
        let mut g = vec![0.0; n];
        for l in (0..n.saturating_sub(1)).rev() {
            g[l] = g[l + 1] + samples[l + 1];
        }
        // suffix_integrals[l] = integral over [l, inf) of the interpolant;
        // each cell contributes the trapezoid (f_m + f_{m+1}) / 2.
        let mut suffix_integrals = vec![0.0; n + 1];
        for l in (0..n).rev() {
            let next = if l + 1 < n { samples[l + 1] } else { 0.0 };
            suffix_integrals[l] = suffix_integrals[l + 1] + 0.5 * (samples[l] + next);
        }
        Ok(Self {
            samples,
            g,
            suffix_integrals,
        })
    }

    pub fn zero() -> Self {
        Self::from_samples(Vec::new()).unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the last stored sample, or `None` for the zero force.
    pub fn support_end(&self) -> Option<usize> {
        self.samples.len().checked_sub(1)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `f_l`, zero beyond the stored support.
    pub fn at(&self, l: usize) -> f64 {
        self.samples.get(l).copied().unwrap_or(0.0)
    }

    /// `g_l`, zero beyond the stored support.
    pub fn g_at(&self, l: usize) -> f64 {
        self.g.get(l).copied().unwrap_or(0.0)
    }

    /// The dual norm `|f|_{U*} = |g|_{l2}`.
    pub fn dual_norm(&self) -> f64 {
        self.g.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `gt(x)`: the exact integral of the piecewise-affine interpolant over
    /// `[x, inf)`. Zero for `x` past the support, an error for `x < 0`.
    pub fn gtilde(&self, x: f64) -> Result<f64, ForceError> {
        if x.is_nan() || x < 0.0 {
            return Err(ForceError::NegativePosition { x });
        }
        let n = self.samples.len();
        if x >= n as f64 {
            return Ok(0.0);
        }
        let k = x.floor() as usize;
        let fk = self.at(k);
        let fk1 = self.at(k + 1);
        let t = x - k as f64;
        // remaining piece of cell [k, k+1]: f affine in t
        let partial = fk * (1.0 - t) + (fk1 - fk) * (1.0 - t * t) * 0.5;
        Ok(partial + self.suffix_integrals[k + 1])
    }

    /// `<f, u> = sum f_l u_l` for a displacement given by its strains
    /// (`u_0 = 0`, `u_l` by prefix sums). Equals `<g, u'>` by summation by
    /// parts; the strain form is what the solvers use.
    pub fn pair_with_strains(&self, strains: &[f64]) -> f64 {
        strains
            .iter()
            .enumerate()
            .map(|(l, s)| self.g_at(l) * s)
            .sum()
    }

    /// Parse a two-column CSV `index,value`. A header line is allowed.
    /// Missing indices default to zero; indices must be unique.
    pub fn from_csv(text: &str) -> Result<Self, ForceError> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (num, raw) in text.lines().enumerate() {
            let line = num + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let mut cols = s.split(',');
            let a = cols.next().unwrap_or("").trim();
            let b = cols.next().unwrap_or("").trim().to_string();
            if cols.next().is_some() {
                return Err(ForceError::Parse {
                    line,
                    message: "expected two columns".into(),
                });
            }
            let index: usize = match a.parse() {
                Ok(i) => i,
                // tolerate a single header row
                Err(_) if line == 1 => continue,
                Err(_) => {
                    return Err(ForceError::Parse {
                        line,
                        message: format!("bad index {a:?}"),
                    })
                }
            };
            let value: f64 = b.parse().map_err(|_| ForceError::Parse {
                line,
                message: format!("bad value {b:?}"),
            })?;
            if entries.iter().any(|(i, _)| *i == index) {
                return Err(ForceError::Parse {
                    line,
                    message: format!("duplicate index {index}"),
                });
            }
            entries.push((index, value));
        }
        let len = entries.iter().map(|(i, _)| i + 1).max().unwrap_or(0);
        let mut samples = vec![0.0; len];
        for (i, v) in entries {
            samples[i] = v;
        }
        Self::from_samples(samples)
    }

    pub fn load_csv(path: &std::path::Path) -> Result<Self, ForceError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Long-wavelength sampling `f_l = lambda fhat(lambda l)` of a profile
/// supported on `[0, support)`.
pub fn rescale(
    fhat: impl Fn(f64) -> f64,
    support: f64,
    lambda: f64,
) -> Result<ExternalForce, ForceError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(ForceError::BadLambda { lambda });
    }
    let last = (support / lambda).ceil() as usize;
    let samples = (0..=last)
        .map(|l| lambda * fhat(lambda * l as f64))
        .collect();
    ExternalForce::from_samples(samples)
}

/// The oscillatory test profile `cos(3 pi x / 8)` on `[0, 4)`.
pub fn test2_profile(x: f64) -> f64 {
    if (0.0..4.0).contains(&x) {
        (3.0 * std::f64::consts::PI * x / 8.0).cos()
    } else {
        0.0
    }
}

/// Support width of [`test2_profile`].
pub const TEST2_SUPPORT: f64 = 4.0;
