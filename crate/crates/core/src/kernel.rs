//! The singular kernel |x−y|^{−(N+2s)} and its normalization.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Kernel data. The operator is `normalization · PV∫ (u(x)−u(y)) K(x,y) dy`
/// and the discrete bilinear form is `normalization/2` times the Gagliardo
/// pairing, so that `⟨u,v⟩ = ∫ v (−Δ)^s u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dim: usize,
    pub s: f64,
    pub normalization: f64,
}

impl KernelSpec {
    /// Kernel with the standard constant C(N,s), under which
    /// `(−Δ)^s (1−|x|²)_+^s` is an explicit constant.
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        Self::with_normalization(dim, s, standard_constant(dim, s))
    }

    /// Kernel with unit normalization.
    pub fn unit(dim: usize, s: f64) -> Result<Self> {
        Self::with_normalization(dim, s, 1.0)
    }

    pub fn with_normalization(dim: usize, s: f64, normalization: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("s must lie in (0,1), got {s}")));
        }
        if !(normalization > 0.0 && normalization.is_finite()) {
            return Err(invalid("normalization", "must be positive and finite"));
        }
        Ok(Self {
            dim,
            s,
            normalization,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        r.powf(-(self.dim as f64 + 2.0 * self.s))
    }
}

/// C(N,s) = s 4^s Γ((N+2s)/2) / (π^{N/2} Γ(1−s)).
pub fn standard_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    s * 4f64.powf(s) * libm::tgamma(0.5 * (n + 2.0 * s))
        / (std::f64::consts::PI.powf(0.5 * n) * libm::tgamma(1.0 - s))
}

/// Surface measure of the unit sphere in ℝ^N.
pub fn sphere_measure(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(0.5 * n) / libm::tgamma(0.5 * n)
}

/// The torsion function of the ball B_R, the solution of (−Δ)^s u = 1 with
/// zero exterior data, is `torsion_constant(N,s) (R²−|x|²)_+^s`.
pub fn torsion_constant(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    libm::tgamma(0.5 * n)
        / (4f64.powf(s) * libm::tgamma(1.0 + s) * libm::tgamma(0.5 * n + s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_constant_values() {
        // C(1,1/2) = 1/π, C(2,1/2) = 1/(2π)
        assert!((standard_constant(1, 0.5) - 1.0 / PI).abs() < 1e-15);
        assert!((standard_constant(2, 0.5) - 0.5 / PI).abs() < 1e-15);
        assert!((sphere_measure(1) - 2.0).abs() < 1e-15);
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn torsion_constants() {
        assert!((torsion_constant(1, 0.5) - 1.0).abs() < 1e-14);
        assert!((torsion_constant(2, 0.5) - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelSpec::new(1, 1.0).is_err());
        assert!(KernelSpec::new(4, 0.5).is_err());
        assert!(KernelSpec::with_normalization(1, 0.5, -1.0).is_err());
    }
}
