//! Nodal functions on a mesh, truncation, and the norms used throughout.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, FracError, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::Estimate;

/// Nodal values of a continuous piecewise-linear function, extended by zero
/// outside the domain.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

/// `sgn(t) min(|t|, k)`.
pub fn truncate(t: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(invalid("k", format!("truncation level must be positive, got {k}")));
    }
    Ok(t.clamp(-k, k))
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(invalid(
                "values",
                format!("expected {} nodal values, got {}", mesh.num_nodes(), values.len()),
            ));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn(&Point) -> f64) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            values: mesh.nodes.iter().map(f).collect(),
        }
    }

    /// Nodal interpolant of `f` at interior nodes with zero boundary values.
    pub fn interior_from_fn(mesh: &Arc<Mesh>, f: impl Fn(&Point) -> f64) -> Self {
        let mut values = vec![0.0; mesh.num_nodes()];
        for &n in mesh.interior_nodes() {
            values[n] = f(&mesh.nodes[n]);
        }
        Self {
            mesh: Arc::clone(mesh),
            values,
        }
    }

    /// Lifts a vector over interior degrees of freedom to all nodes.
    pub fn from_interior(mesh: &Arc<Mesh>, interior: &[f64]) -> Result<Self> {
        if interior.len() != mesh.num_dofs() {
            return Err(invalid(
                "interior",
                format!("expected {} interior values, got {}", mesh.num_dofs(), interior.len()),
            ));
        }
        let mut values = vec![0.0; mesh.num_nodes()];
        for (&n, &v) in mesh.interior_nodes().iter().zip(interior) {
            values[n] = v;
        }
        Ok(Self {
            mesh: Arc::clone(mesh),
            values,
        })
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.mesh.interior_nodes().iter().map(|&n| self.values[n]).collect()
    }

    pub fn same_mesh(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    pub fn check_same_mesh(&self, other: &Self) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(FracError::MeshMismatch)
        }
    }

    /// Fails with the first boundary node carrying a nonzero value.
    pub fn check_in_x(&self) -> Result<()> {
        for (i, (&b, &v)) in self.mesh.boundary.iter().zip(&self.values).enumerate() {
            if b && v != 0.0 {
                return Err(FracError::NonzeroBoundary { node: i, value: v });
            }
        }
        Ok(())
    }

    pub fn in_x(&self) -> bool {
        self.check_in_x().is_ok()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn truncate(&self, k: f64) -> Result<Self> {
        truncate(0.0, k)?;
        Ok(self.map(|v| v.clamp(-k, k)))
    }

    /// Nodal positive and negative parts, `u = u₊ − u₋`.
    pub fn pos_neg_parts(&self) -> (Self, Self) {
        (self.map(|v| v.max(0.0)), self.map(|v| (-v).max(0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the piecewise-linear interpolant at `x`; zero outside the mesh.
    pub fn eval(&self, x: &Point) -> f64 {
        match self.mesh.locate(x) {
            None => 0.0,
            Some((e, l)) => {
                let el = &self.mesh.elements[e];
                el.iter().zip(l.iter()).map(|(&n, &w)| w * self.values[n]).sum()
            }
        }
    }

    /// Values at the element quadrature points, paired with weights, for the
    /// composite rule used by the L^p norms.
    fn element_samples(&self, higher: bool) -> Vec<(f64, f64)> {
        let mesh = &self.mesh;
        let mut out = Vec::new();
        for (e, el) in mesh.elements.iter().enumerate() {
            let meas = mesh.element_measure(e);
            if el.len() == 2 {
                let (u0, u1) = (self.values[el[0]], self.values[el[1]]);
                let rule: &[(f64, f64)] = if higher { &GAUSS3_01 } else { &GAUSS2_01 };
                for &(t, w) in rule {
                    out.push((u0 + t * (u1 - u0), w * meas));
                }
            } else {
                let u = [self.values[el[0]], self.values[el[1]], self.values[el[2]]];
                let rule: &[([f64; 3], f64)] = if higher { &TRI6 } else { &TRI3 };
                for (l, w) in rule {
                    let v = l[0] * u[0] + l[1] * u[1] + l[2] * u[2];
                    out.push((v, w * meas));
                }
            }
        }
        out
    }

    fn lp_from_samples(samples: &[(f64, f64)], p: f64) -> f64 {
        let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.0.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = samples.iter().map(|&(v, w)| w * (v.abs() / scale).powf(p)).sum();
        scale * sum.powf(1.0 / p)
    }

    /// Composite-quadrature approximation of ‖u‖_p; `p = ∞` gives the max
    /// nodal modulus.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_norm_estimate(p)?.value)
    }

    /// ‖u‖_p together with the difference to a higher-order rule.
    pub fn lp_norm_estimate(&self, p: f64) -> Result<Estimate> {
        if !(p >= 1.0) {
            return Err(invalid("p", format!("p must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(Estimate {
                value: self.max_abs(),
                error: 0.0,
            });
        }
        let value = Self::lp_from_samples(&self.element_samples(false), p);
        let check = Self::lp_from_samples(&self.element_samples(true), p);
        Ok(Estimate {
            value,
            error: (value - check).abs(),
        })
    }

    /// (value, weight) pairs of the composite rule behind the L^p norms.
    pub fn quadrature_samples(&self) -> Vec<(f64, f64)> {
        self.element_samples(false)
    }

    /// `∫_Ω g(u(x)) dx` by the composite rule.
    pub fn integrate_with(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.element_samples(false).iter().map(|&(v, w)| w * g(v)).sum()
    }

    /// max over interior nodes of |u|/δ^s.
    pub fn weighted_sup_norm(&self) -> Result<f64> {
        self.check_in_x()?;
        Ok(self.quotients().into_iter().fold(0.0, |m, (_, q)| m.max(q.abs())))
    }

    /// Interior nodes paired with the quotient u/δ^s.
    pub fn quotients(&self) -> Vec<(usize, f64)> {
        let s = self.mesh.domain.s;
        let delta = self.mesh.delta();
        self.mesh
            .interior_nodes()
            .iter()
            .filter(|&&n| delta[n] > 0.0)
            .map(|&n| (n, self.values[n] / delta[n].powf(s)))
            .collect()
    }

    /// Weighted sup norm plus the discrete α-Hölder seminorm of u/δ^s over
    /// interior node pairs.
    pub fn weighted_holder_norm(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("alpha must lie in (0,1), got {alpha}")));
        }
        let sup = self.weighted_sup_norm()?;
        let q = self.quotients();
        let nodes = &self.mesh.nodes;
        let semi = (0..q.len())
            .into_par_iter()
            .map(|i| {
                let (ni, qi) = q[i];
                let mut m: f64 = 0.0;
                for &(nj, qj) in &q[i + 1..] {
                    let d = crate::geometry::dist(&nodes[ni], &nodes[nj]);
                    m = m.max((qi - qj).abs() / d.powf(alpha));
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        Ok(sup + semi)
    }
}

/// Default Hölder exponent min(s, 1−s)/2.
pub fn default_alpha(s: f64) -> f64 {
    0.5 * s.min(1.0 - s)
}

const GAUSS2_01: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];
const GAUSS3_01: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];
// Barycentric points with weights normalized to unit element measure.
const TRI3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];
const TRI6: [([f64; 3], f64); 6] = [
    ([0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771], 0.109_951_743_655_322),
    ([0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459], 0.109_951_743_655_322),
    ([0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965], 0.223_381_589_678_011),
    ([0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070], 0.223_381_589_678_011),
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::mesh::build_mesh;
    use proptest::prelude::*;

    fn interval_mesh(a: f64, b: f64, s: f64, n: usize) -> Arc<Mesh> {
        Arc::new(build_mesh(&Domain::interval(a, b, s).unwrap(), n).unwrap())
    }

    #[test]
    fn truncate_examples() {
        assert_eq!(truncate(-3.0, 2.0).unwrap(), -2.0);
        assert_eq!(truncate(0.5, 2.0).unwrap(), 0.5);
        assert_eq!(truncate(7.0, 7.0).unwrap(), 7.0);
        assert!(truncate(1.0, 0.0).is_err());
    }

    #[test]
    fn lp_examples() {
        let m = interval_mesh(0.0, 1.0, 0.5, 16);
        assert_eq!(GridFunction::zeros(&m).lp_norm(3.0).unwrap(), 0.0);
        let one = GridFunction::from_fn(&m, |_| 1.0);
        assert!((one.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-14);
        let x = GridFunction::from_fn(&m, |p| p[0]);
        assert!((x.lp_norm(2.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(x.lp_norm(f64::INFINITY).unwrap(), 1.0);
        assert!(x.lp_norm(0.5).is_err());
    }

    #[test]
    fn weighted_sup_of_half_power() {
        let m = interval_mesh(-1.0, 1.0, 0.5, 64);
        let u = GridFunction::from_fn(&m, |p| (1.0 - p[0] * p[0]).max(0.0).sqrt());
        let w = u.weighted_sup_norm().unwrap();
        let xmax: f64 = 1.0 - 2.0 / 64.0;
        assert!((w - (1.0 + xmax).sqrt()).abs() < 1e-12);
        assert!(w < 2f64.sqrt());
        let bad = GridFunction::from_fn(&m, |_| 1.0);
        assert!(matches!(bad.weighted_sup_norm(), Err(FracError::NonzeroBoundary { .. })));
    }

    #[test]
    fn holder_norm_of_constant_quotient() {
        let m = interval_mesh(-1.0, 1.0, 0.5, 32);
        let delta = m.delta().to_vec();
        let u = GridFunction::new(Arc::clone(&m), delta.iter().map(|d| 3.0 * d.sqrt()).collect()).unwrap();
        assert!((u.weighted_holder_norm(0.25).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(GridFunction::zeros(&m).weighted_holder_norm(0.25).unwrap(), 0.0);
        assert!(u.weighted_holder_norm(1.0).is_err());
    }

    #[test]
    fn holder_norm_matches_dense_oracle() {
        // quotient (1+|x|)^{1/2}; the seminorm on a dense sample is the oracle
        let oracle = {
            let n = 4000;
            let xs: Vec<f64> = (1..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
            let q: Vec<f64> = xs.iter().map(|x| (1.0 + x.abs()).sqrt()).collect();
            let mut m: f64 = 0.0;
            for i in 0..xs.len() {
                for j in i + 1..xs.len() {
                    m = m.max((q[i] - q[j]).abs() / (xs[j] - xs[i]).powf(0.25));
                }
            }
            2f64.sqrt() + m
        };
        let mut last = 0.0;
        for n in [64, 256, 1024] {
            let m = interval_mesh(-1.0, 1.0, 0.5, n);
            let u = GridFunction::from_fn(&m, |p| (1.0 - p[0] * p[0]).max(0.0).sqrt());
            last = u.weighted_holder_norm(0.25).unwrap();
            assert!(last.is_finite());
        }
        assert!((last - oracle).abs() / oracle < 0.01, "{last} vs {oracle}");
    }

    #[test]
    fn pos_neg_examples() {
        let m = interval_mesh(-1.0, 1.0, 0.5, 8);
        let (p, n) = GridFunction::from_fn(&m, |_| -1.0).pos_neg_parts();
        assert!(p.values.iter().all(|&v| v == 0.0) && n.values.iter().all(|&v| v == 1.0));
        let x = GridFunction::from_fn(&m, |p| p[0]);
        let (p, n) = x.pos_neg_parts();
        for i in 0..x.values.len() {
            assert_eq!(p.values[i], x.values[i].max(0.0));
            assert_eq!(n.values[i], (-x.values[i]).max(0.0));
        }
    }

    #[test]
    fn eval_interpolates_and_vanishes_outside() {
        let m = interval_mesh(-1.0, 1.0, 0.5, 8);
        let x = GridFunction::from_fn(&m, |p| p[0] * 2.0);
        assert!((x.eval(&[0.3, 0.0]) - 0.6).abs() < 1e-14);
        assert_eq!(x.eval(&[1.3, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn truncate_properties(t in -100.0f64..100.0, u in -100.0f64..100.0, k in 0.01f64..50.0) {
            let a = truncate(t, k).unwrap();
            prop_assert_eq!(truncate(-t, k).unwrap(), -a);
            if t <= u { prop_assert!(a <= truncate(u, k).unwrap()); }
            prop_assert_eq!(a.abs(), t.abs().min(k));
        }

        #[test]
        fn lp_norm_properties(vals in proptest::collection::vec(-5.0f64..5.0, 17), c in -3.0f64..3.0,
                              p in 1.0f64..6.0, dr in 0.0f64..6.0) {
            let m = interval_mesh(0.0, 2.0, 0.5, 16);
            let u = GridFunction::new(Arc::clone(&m), vals).unwrap();
            let nu = u.lp_norm(p).unwrap();
            let ncu = u.scale(c).lp_norm(p).unwrap();
            prop_assert!((ncu - c.abs() * nu).abs() <= 1e-12 * (1.0 + nu));
            let r = p + dr;
            let omega: f64 = 2.0;
            let nr = u.lp_norm(r).unwrap();
            prop_assert!(nu <= omega.powf(1.0 / p - 1.0 / r) * nr * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn pos_neg_reconstructs(vals in proptest::collection::vec(-5.0f64..5.0, 9)) {
            let m = interval_mesh(-1.0, 1.0, 0.5, 8);
            let u = GridFunction::new(Arc::clone(&m), vals).unwrap();
            let (p, n) = u.pos_neg_parts();
            for i in 0..9 {
                prop_assert!(p.values[i] >= 0.0 && n.values[i] >= 0.0);
                prop_assert_eq!(p.values[i] - n.values[i], u.values[i]);
            }
        }

        #[test]
        fn weighted_sup_homogeneous(vals in proptest::collection::vec(-5.0f64..5.0, 7), c in -4.0f64..4.0) {
            let m = interval_mesh(-1.0, 1.0, 0.3, 8);
            let u = GridFunction::from_interior(&m, &vals).unwrap();
            let a = u.weighted_sup_norm().unwrap();
            let b = u.scale(c).weighted_sup_norm().unwrap();
            prop_assert!((b - c.abs() * a).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
