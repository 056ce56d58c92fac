//! Symmetric tridiagonal operators on strain space.
//!
//! Second variations of all three energies reduce to this form. The
//! smallest eigenvalue is found by bisection on the Sturm sequence (the
//! inertia count of `T - x I` from the LDL^T recurrence), which is exact
//! to the bisection width for any size and needs no dense storage.

/// Symmetric tridiagonal matrix stored as its two bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            off.len() + 1 == diag.len() || (diag.is_empty() && off.is_empty()),
            "band lengths {} / {} inconsistent",
            diag.len(),
            off.len()
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `y = T x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// `x^T T x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(x.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
            if i + 1 < n {
                acc += 2.0 * self.off[i] * x[i] * x[i + 1];
            }
        }
        acc
    }

    /// Number of eigenvalues strictly below `x`, from the signs of the
    /// LDL^T pivots of `T - x I`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 0.0f64;
        for i in 0..self.dim() {
            let e2 = if i > 0 {
                let e = self.off[i - 1];
                e * e
            } else {
                0.0
            };
            // guard exact zero pivots; the standard tiny-shift trick
            let denom = if q == 0.0 { f64::MIN_POSITIVE } else { q };
            q = (self.diag[i] - x) - if i > 0 { e2 / denom } else { 0.0 };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Smallest eigenvalue by Sturm bisection, to absolute accuracy about
    /// `4 eps |bound|`. Deterministic; identical inputs give identical
    /// output bits.
    pub fn smallest_eigenvalue(&self) -> f64 {
        let n = self.dim();
        assert!(n > 0, "empty matrix has no eigenvalues");
        // Gershgorin bounds
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.off[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - radius);
            hi = hi.max(self.diag[i] + radius);
        }
        if lo == hi {
            return lo;
        }
        let scale = lo.abs().max(hi.abs());
        let tol = 4.0 * f64::EPSILON * scale;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn one_by_one() {
        let t = SymTridiag::new(vec![3.5], vec![]);
        assert_eq!(t.smallest_eigenvalue(), 3.5);
    }

    #[test]
    fn two_by_two_analytic() {
        // eigenvalues (a+c)/2 +- sqrt(((a-c)/2)^2 + b^2)
        let (a, b, c) = (2.0, -1.5, 5.0);
        let t = SymTridiag::new(vec![a, c], vec![b]);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        assert_relative_eq!(t.smallest_eigenvalue(), mean - rad, max_relative = 1e-13);
    }

    /// Constant tridiagonal (Toeplitz) spectrum: `d + 2 e cos(k pi / (n+1))`.
    #[test]
    fn toeplitz_spectrum_oracle() {
        for &(n, d, e) in &[(5usize, 4.0, 1.0), (50, 865.37, 347.885), (173, -2.0, 0.7)] {
            let t = SymTridiag::new(vec![d; n], vec![e; n - 1]);
            let exact = (1..=n)
                .map(|k| d + 2.0 * e * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(t.smallest_eigenvalue(), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn matvec_and_quadratic_form_agree() {
        let t = SymTridiag::new(vec![2.0, 3.0, 1.0, 4.0], vec![0.5, -1.0, 0.25]);
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut y = [0.0; 4];
        t.matvec(&x, &mut y);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(dot, t.quadratic_form(&x), epsilon = 1e-12);
    }

    #[test]
    fn indefinite_matrix_detected() {
        let t = SymTridiag::new(vec![1.0, 1.0], vec![2.0]);
        assert!(t.smallest_eigenvalue() < 0.0);
        assert_eq!(t.count_below(0.0), 1);
    }
}
