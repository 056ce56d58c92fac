//! Lattice displacements on the truncated chain.
//!
//! A displacement lives in the gauge `u_0 = 0` and is stored by its bond
//! strains `u'_0 .. u'_{N-1}`; strains past the truncation are exactly
//! zero. Site displacements are recovered by prefix sums. All error norms
//! in this crate compare strain vectors (never displacements), so the
//! comparison is gauge-free by construction.

/// Displacement of the truncated chain, stored as bond strains.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    strains: Vec<f64>,
}

impl Displacement {
    /// Wrap a strain vector. All entries must be finite.
    pub fn from_strains(strains: Vec<f64>) -> Self {
        assert!(
            strains.iter().all(|s| s.is_finite()),
            "displacement strains must be finite"
        );
        Self { strains }
    }

    /// The zero displacement on `n_bonds` bonds.
    pub fn zero(n_bonds: usize) -> Self {
        Self {
            strains: vec![0.0; n_bonds],
        }
    }

    pub fn n_bonds(&self) -> usize {
        self.strains.len()
    }

    pub fn strains(&self) -> &[f64] {
        &self.strains
    }

    pub fn into_strains(self) -> Vec<f64> {
        self.strains
    }

    /// `u'_l`, zero beyond the truncation.
    pub fn strain_at(&self, l: usize) -> f64 {
        self.strains.get(l).copied().unwrap_or(0.0)
    }

    /// Site displacements `u_0 .. u_N` by prefix sums (`u_0 = 0`).
    pub fn displacements(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.strains.len() + 1);
        let mut acc = 0.0;
        u.push(acc);
        for s in &self.strains {
            acc += s;
            u.push(acc);
        }
        u
    }

    /// Rebuild from site displacements; inverse of [`displacements`]
    /// up to rounding (exactly when the strains were produced by it).
    pub fn from_displacements(u: &[f64]) -> Self {
        let strains = u.windows(2).map(|w| w[1] - w[0]).collect();
        Self::from_strains(strains)
    }

    /// l2 distance between two strain fields, the shorter one padded with
    /// zeros.
    pub fn strain_distance(&self, other: &Displacement) -> f64 {
        strain_l2_distance(&self.strains, &other.strains)
    }

    pub fn strain_norm(&self) -> f64 {
        crate::optimize::norm(&self.strains)
    }
}

/// l2 norm of the difference of two strain vectors with zero padding.
pub fn strain_l2_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let mut acc = 0.0;
    for l in 0..n {
        let d = a.get(l).copied().unwrap_or(0.0) - b.get(l).copied().unwrap_or(0.0);
        acc += d * d;
    }
    acc.sqrt()
}
