//! Executable checks of the maximum principles, the barrier, the Hopf
//! quotient, boundary regularity and local boundedness.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::assemble_matrices;
use crate::error::{invalid, FracError, Result};
use crate::form::StiffnessForm;
use crate::geometry::{dist, Domain, DomainKind, Point};
use crate::grid::GridFunction;
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::pointwise::tail_grid;
use crate::quadrature::GaussLegendre;
use crate::variational::{OrderCertificate, Role};

#[derive(Debug, Clone, Serialize)]
pub struct PrincipleVerdict {
    pub pass: bool,
    pub worst_node: Option<usize>,
    pub margin: f64,
    pub context: String,
}

/// Checks u ≥ 0 nodally for a certified supersolution with nonnegative load.
pub fn wmp_check(u: &GridFunction, cert: &OrderCertificate) -> Result<PrincipleVerdict> {
    if cert.role != Role::Super || !cert.pass {
        return Err(FracError::InvalidCertificate("not a passing supersolution certificate".into()));
    }
    if cert.load_nonnegative != Some(true) {
        return Err(FracError::InvalidCertificate("load is not certified nonnegative".into()));
    }
    if !cert.certifies(u) {
        return Err(FracError::InvalidCertificate("certificate was issued for a different function".into()));
    }
    let tol = 1e-9 * cert.load_sup.unwrap_or(0.0);
    let (node, min) = u
        .mesh
        .interior_nodes()
        .iter()
        .fold((None, f64::INFINITY), |acc, &i| if u.values[i] < acc.1 { (Some(i), u.values[i]) } else { acc });
    Ok(PrincipleVerdict {
        pass: min >= -tol,
        worst_node: node,
        margin: min,
        context: format!("min interior nodal value, tolerance {tol:e}"),
    })
}

/// Checks strict positivity at every interior node.
pub fn smp_check(u: &GridFunction) -> Result<PrincipleVerdict> {
    if u.max_abs() == 0.0 {
        return Err(invalid("u", "the zero function is excluded"));
    }
    let (node, min) = u
        .mesh
        .interior_nodes()
        .iter()
        .fold((None, f64::INFINITY), |acc, &i| if u.values[i] < acc.1 { (Some(i), u.values[i]) } else { acc });
    Ok(PrincipleVerdict {
        pass: min > 0.0,
        worst_node: node,
        margin: min,
        context: "min interior nodal value".into(),
    })
}

/// Minimum of u/δ^s over interior nodes and the node attaining it.
pub fn hopf_quotient(u: &GridFunction) -> Result<(f64, usize)> {
    if u.max_abs() == 0.0 {
        return Err(invalid("u", "the zero function is excluded"));
    }
    if let Some((i, &v)) = u.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(invalid("u", format!("negative value {v:e} at node {i}")));
    }
    u.quotients()
        .into_iter()
        .fold(None, |acc: Option<(f64, usize)>, (n, q)| match acc {
            Some((m, _)) if m <= q => acc,
            _ => Some((q, n)),
        })
        .ok_or_else(|| invalid("u", "mesh has no interior nodes"))
}

/// ‖u‖_{α,δ} / ‖f‖∞.
pub fn regularity_ratio(u: &GridFunction, f: &GridFunction, alpha: f64) -> Result<f64> {
    let fs = f.max_abs();
    if fs == 0.0 {
        return Err(invalid("f", "right-hand side must be nonzero"));
    }
    Ok(u.weighted_holder_norm(alpha)? / fs)
}

/// Piecewise-constant ±1 data on `cells` seeded cells along the first
/// coordinate of the domain's bounding box.
pub fn random_sign_cells(mesh: &Arc<Mesh>, cells: usize, rng: &mut ChaCha8Rng) -> GridFunction {
    let signs: Vec<f64> = (0..cells).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let (lo, width) = match mesh.domain.kind {
        DomainKind::Interval { a, b } => (a, b - a),
        DomainKind::Disk { center, radius } => (center[0] - radius, 2.0 * radius),
    };
    GridFunction::from_fn(mesh, |p| {
        let k = (((p[0] - lo) / width) * cells as f64).floor().clamp(0.0, cells as f64 - 1.0) as usize;
        signs[k]
    })
}

/// Regularity ratios of `count` solves with seeded ±1 data, in instance order.
pub fn regularity_sweep(form: &StiffnessForm, count: usize, seed: u64, alpha: f64) -> Result<Vec<f64>> {
    let chol = form.a.clone().cholesky().ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<GridFunction> = (0..count).map(|_| random_sign_cells(&form.mesh, 8, &mut rng)).collect();
    data.par_iter()
        .map(|f| {
            let u = form.to_grid(&chol.solve(&form.load(f)?));
            regularity_ratio(&u, f, alpha)
        })
        .collect()
}

/// Seeded nonnegative nodal data: a mix of smooth bumps, sparse spikes and
/// uniform noise.
pub fn random_nonnegative(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> GridFunction {
    let kind = rng.random_range(0..3);
    match kind {
        0 => {
            let c = mesh.nodes[rng.random_range(0..mesh.num_nodes())];
            let w = rng.random_range(0.05..0.5) * mesh.domain.length_scale();
            let amp = rng.random_range(0.1..10.0);
            GridFunction::from_fn(mesh, |p| amp * (-(dist(p, &c) / w).powi(2)).exp())
        }
        1 => {
            let mut v = vec![0.0; mesh.num_nodes()];
            for _ in 0..rng.random_range(1..5) {
                v[rng.random_range(0..mesh.num_nodes())] = rng.random_range(0.0..100.0);
            }
            GridFunction::new(Arc::clone(mesh), v).expect("sized to the mesh")
        }
        _ => {
            let v = (0..mesh.num_nodes()).map(|_| rng.random_range(0.0..1.0)).collect();
            GridFunction::new(Arc::clone(mesh), v).expect("sized to the mesh")
        }
    }
}

/// Solves `count` seeded nonnegative-load problems and checks each with the
/// weak maximum principle. Verdicts are returned in instance order.
pub fn wmp_sweep(form: &StiffnessForm, count: usize, seed: u64) -> Result<Vec<PrincipleVerdict>> {
    let chol = form.a.clone().cholesky().ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loads: Vec<GridFunction> = (0..count).map(|_| random_nonnegative(&form.mesh, &mut rng)).collect();
    loads
        .par_iter()
        .map(|g| {
            let u = form.to_grid(&chol.solve(&form.load(g)?));
            let cert = crate::variational::supersolution_certificate(form, &u, g)?;
            wmp_check(&u, &cert)
        })
        .collect()
}

/// Solution of the exterior-data problem on the annulus r < |x| < R with
/// data 1 on the inner ball, together with the fitted barrier constant.
#[derive(Debug, Clone)]
pub struct Barrier {
    pub phi: GridFunction,
    /// Largest c with φ ≥ c(R−|x|)^s at all annulus nodes.
    pub c: f64,
    pub worst_node: usize,
}

/// One-dimensional barrier: the annulus is the pair of intervals r < |x| < R.
pub fn barrier(r: f64, big_r: f64, s: f64, resolution: usize) -> Result<Barrier> {
    if !(r > 0.0 && r < big_r) {
        return Err(invalid("r", format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    if resolution < 2 {
        return Err(invalid("resolution", "need at least two elements across the annulus"));
    }
    let domain = Domain::interval(-big_r, big_r, s)?;
    let h = (big_r - r) / resolution as f64;
    let inner = ((2.0 * r / h).ceil() as usize).max(2);
    let mut xs = Vec::new();
    for i in 0..resolution {
        xs.push(-big_r + h * i as f64);
    }
    for i in 0..inner {
        xs.push(-r + 2.0 * r * i as f64 / inner as f64);
    }
    for i in 0..=resolution {
        xs.push(r + h * i as f64);
    }
    *xs.last_mut().expect("nonempty") = big_r;
    let mesh = Arc::new(Mesh::interval_from_nodes(&domain, &xs)?);
    let kernel = KernelSpec::new(1, s)?;
    let (a, _) = assemble_matrices(&mesh, &kernel)?;
    let interior = mesh.interior_nodes();
    let fixed: Vec<bool> = interior.iter().map(|&n| mesh.nodes[n][0].abs() <= r * (1.0 + 1e-12)).collect();
    let free: Vec<usize> = (0..interior.len()).filter(|&i| !fixed[i]).collect();
    let pinned: Vec<usize> = (0..interior.len()).filter(|&i| fixed[i]).collect();
    let a_uu = DMatrix::from_fn(free.len(), free.len(), |i, j| a[(free[i], free[j])]);
    let rhs = DVector::from_fn(free.len(), |i, _| -pinned.iter().map(|&j| a[(free[i], j)]).sum::<f64>());
    let w = a_uu
        .cholesky()
        .ok_or(FracError::NotPositiveDefinite("annulus stiffness block"))?
        .solve(&rhs);
    let mut values = vec![0.0; mesh.num_nodes()];
    for &j in &pinned {
        values[interior[j]] = 1.0;
    }
    for (k, &i) in free.iter().enumerate() {
        values[interior[i]] = w[k];
    }
    let phi = GridFunction::new(Arc::clone(&mesh), values)?;
    let (worst_node, c) = free
        .iter()
        .map(|&i| {
            let n = interior[i];
            (n, phi.values[n] / (big_r - mesh.nodes[n][0].abs()).powf(s))
        })
        .fold((0, f64::INFINITY), |acc, (n, q)| if q < acc.1 { (n, q) } else { acc });
    if !(c > 0.0) {
        return Err(FracError::CheckFailed(format!("barrier constant {c:e} is not positive")));
    }
    Ok(Barrier { phi, c, worst_node })
}

/// Terms of the local boundedness estimate and the constant they imply.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalBound {
    pub lhs: f64,
    pub tail: f64,
    pub l2_average: f64,
    pub implied_constant: f64,
}

/// (⨍_{B_r(x0)} ((u−k)₊)²)^{1/2} by quadrature of the interpolant.
fn ball_average_sq(u: &GridFunction, x0: &Point, r: f64, k: f64) -> f64 {
    let v = |p: &Point| (u.eval(p) - k).max(0.0).powi(2);
    let gl = GaussLegendre::new(8);
    if u.mesh.dim() == 1 {
        let (a, b) = (x0[0] - r, x0[0] + r);
        let mut cuts: Vec<f64> = u.mesh.nodes.iter().map(|p| p[0]).filter(|&x| x > a && x < b).collect();
        cuts.insert(0, a);
        cuts.push(b);
        let total: f64 = cuts.windows(2).map(|w| gl.integrate(w[0], w[1], |x| v(&[x, 0.0]))).sum();
        (total / (2.0 * r)).sqrt()
    } else {
        let radial = ((r / u.mesh.h).ceil() as usize).clamp(2, 64);
        let angular = 4 * radial;
        let mut total = 0.0;
        for i in 0..radial {
            let (r0, r1) = (r * i as f64 / radial as f64, r * (i + 1) as f64 / radial as f64);
            for (rho, wr) in gl.mapped(r0, r1) {
                for j in 0..angular {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / angular as f64;
                    let p = [x0[0] + rho * th.cos(), x0[1] + rho * th.sin()];
                    total += wr * rho * v(&p) * 2.0 * std::f64::consts::PI / angular as f64;
                }
            }
        }
        (total / (std::f64::consts::PI * r * r)).sqrt()
    }
}

/// Evaluates sup_{B_{r/2}} u − k − Tail((u−k)₊; x0, r/2) against the averaged
/// L² term. `region` is where u is a subsolution; it must contain B_r(x0).
pub fn local_bound_check(u: &GridFunction, x0: &Point, r: f64, k: f64, kernel: &KernelSpec, region: &Domain) -> Result<LocalBound> {
    if !(r > 0.0) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    let d = region.boundary_distance(x0)?;
    if d < r * (1.0 - 1e-12) {
        return Err(invalid("r", format!("ball of radius {r} leaves the region (distance {d})")));
    }
    let lhs = u
        .mesh
        .nodes
        .iter()
        .zip(&u.values)
        .filter(|(p, _)| dist(p, x0) <= 0.5 * r)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let lhs = if lhs.is_finite() { lhs } else { u.eval(x0) };
    let shifted = u.map(|v| (v - k).max(0.0));
    let tail = if shifted.max_abs() == 0.0 {
        0.0
    } else {
        tail_grid(&shifted, x0, 0.5 * r, kernel)?.value
    };
    let l2_average = ball_average_sq(u, x0, r, k);
    let numerator = lhs - k - tail;
    let implied_constant = if numerator <= 0.0 {
        0.0
    } else if l2_average == 0.0 {
        f64::INFINITY
    } else {
        numerator / l2_average
    };
    Ok(LocalBound {
        lhs,
        tail,
        l2_average,
        implied_constant,
    })
}

/// Implied constants over seeded one-dimensional instances: solutions of
/// Au = Mg with g ≥ 0 vanishing on B_r(x0), so u is a subsolution there.
pub fn local_bound_survey(form: &StiffnessForm, count: usize, seed: u64) -> Result<Vec<LocalBound>> {
    let DomainKind::Interval { a, b } = form.mesh.domain.kind else {
        return Err(invalid("form", "the survey runs on interval domains"));
    };
    let s = form.mesh.domain.s;
    let chol = form.a.clone().cholesky().ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = b - a;
    let mut jobs = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.random_range(0.1..0.25) * len;
        let x0 = rng.random_range(a + r..b - r);
        let mut g = random_nonnegative(&form.mesh, &mut rng).values;
        for (v, p) in g.iter_mut().zip(&form.mesh.nodes) {
            if (p[0] - x0).abs() <= r {
                *v = 0.0;
            }
        }
        let kfrac = rng.random_range(0.0..0.5);
        jobs.push((x0, r, g, kfrac));
    }
    jobs.into_par_iter()
        .map(|(x0, r, g, kfrac)| {
            let g = GridFunction::new(Arc::clone(&form.mesh), g)?;
            let u = form.to_grid(&chol.solve(&form.load(&g)?));
            let k = kfrac * u.max_abs();
            let region = Domain::interval(x0 - r, x0 + r, s)?;
            local_bound_check(&u, &[x0, 0.0], r, k, &form.kernel, &region)
        })
        .collect()
}

/// Empirical quantile by linear interpolation on the sorted finite values.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, t) = (pos.floor() as usize, pos.fract());
    Some(if i + 1 < v.len() { v[i] * (1.0 - t) + v[i + 1] * t } else { v[i] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::assemble_form;
    use crate::mesh::build_mesh;
    use crate::variational::supersolution_certificate;

    fn form_1d(n: usize, s: f64) -> StiffnessForm {
        let mesh = Arc::new(build_mesh(&Domain::interval(-1.0, 1.0, s).unwrap(), n).unwrap());
        assemble_form(&mesh, &KernelSpec::new(1, s).unwrap()).unwrap()
    }

    fn torsion(f: &StiffnessForm) -> (GridFunction, GridFunction) {
        let one = GridFunction::from_fn(&f.mesh, |_| 1.0);
        (f.solve_load(&one).unwrap(), one)
    }

    #[test]
    fn wmp_and_smp_on_torsion() {
        let f = form_1d(32, 0.5);
        let (u, one) = torsion(&f);
        let cert = supersolution_certificate(&f, &u, &one).unwrap();
        assert!(wmp_check(&u, &cert).unwrap().pass);
        let v = smp_check(&u).unwrap();
        assert!(v.pass && v.margin > 0.0);

        let neg = u.scale(-1.0);
        let cert = supersolution_certificate(&f, &neg, &one.scale(-1.0)).unwrap();
        assert!(matches!(wmp_check(&neg, &cert), Err(FracError::InvalidCertificate(_))));
        assert!(smp_check(&GridFunction::zeros(&f.mesh)).is_err());
    }

    #[test]
    fn wmp_sweep_has_no_violations() {
        let f = form_1d(32, 0.3);
        let verdicts = wmp_sweep(&f, 40, 7).unwrap();
        assert!(verdicts.iter().all(|v| v.pass));
    }

    #[test]
    fn smp_with_half_supported_load() {
        let f = form_1d(40, 0.5);
        let g = GridFunction::from_fn(&f.mesh, |p| if p[0] > 0.0 { 1.0 } else { 0.0 });
        let u = f.solve_load(&g).unwrap();
        assert!(smp_check(&u).unwrap().pass);
    }

    #[test]
    fn hopf_quotient_examples() {
        let f = form_1d(128, 0.5);
        let (u, _) = torsion(&f);
        let (q, n) = hopf_quotient(&u).unwrap();
        assert!((q - 1.0).abs() < 0.05, "{q}");
        assert!(f.mesh.nodes[n][0].abs() < 0.2);
        let (q2, _) = hopf_quotient(&u.scale(3.0)).unwrap();
        assert!((q2 - 3.0 * q).abs() < 1e-12);
        assert!(hopf_quotient(&u.scale(-1.0)).is_err());
    }

    #[test]
    fn regularity_ratio_examples() {
        let f = form_1d(64, 0.5);
        let (u, one) = torsion(&f);
        let sup = u.weighted_sup_norm().unwrap();
        assert!((sup - 2f64.sqrt()).abs() < 0.1, "{sup}");
        let r1 = regularity_ratio(&u, &one, 0.1).unwrap();
        let r2 = regularity_ratio(&u.scale(2.5), &one.scale(2.5), 0.1).unwrap();
        assert!((r1 - r2).abs() < 1e-12 * r1);
        assert!(regularity_ratio(&u, &GridFunction::zeros(&f.mesh), 0.1).is_err());
    }

    #[test]
    fn barrier_examples() {
        let b = barrier(1.0, 2.0, 0.5, 16).unwrap();
        let mesh = &b.phi.mesh;
        for (p, v) in mesh.nodes.iter().zip(&b.phi.values) {
            if p[0].abs() <= 1.0 {
                assert_eq!(*v, 1.0);
            }
            assert!(*v >= 0.0);
        }
        let fine = barrier(1.0, 2.0, 0.5, 32).unwrap();
        let ratio = fine.c / b.c;
        assert!(ratio > 0.9 && ratio < 1.1, "{ratio}");
        assert!(barrier(2.0, 1.0, 0.5, 8).is_err());
    }

    #[test]
    fn local_bound_examples() {
        let f = form_1d(32, 0.5);
        let region = Domain::interval(-0.5, 0.5, 0.5).unwrap();
        let c = GridFunction::from_fn(&f.mesh, |_| 0.7);
        let lb = local_bound_check(&c, &[0.0, 0.0], 0.4, 0.7, &f.kernel, &region).unwrap();
        assert_eq!(lb.implied_constant, 0.0);
        let (u, _) = torsion(&f);
        let lb = local_bound_check(&u, &[0.0, 0.0], 0.4, 2.0, &f.kernel, &region).unwrap();
        assert_eq!(lb.implied_constant, 0.0);
        assert!(local_bound_check(&u, &[0.3, 0.0], 0.4, 0.0, &f.kernel, &region).is_err());

        let b = barrier(0.5, 2.0, 0.5, 24).unwrap();
        let annulus = Domain::interval(0.5, 2.0, 0.5).unwrap();
        let k = KernelSpec::new(1, 0.5).unwrap();
        let lb = local_bound_check(&b.phi, &[1.25, 0.0], 0.5, 0.1, &k, &annulus).unwrap();
        assert!(lb.implied_constant.is_finite());
    }

    #[test]
    fn survey_and_percentile() {
        let f = form_1d(32, 0.5);
        let out = local_bound_survey(&f, 20, 3).unwrap();
        let c: Vec<f64> = out.iter().map(|l| l.implied_constant).collect();
        assert!(c.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(percentile(&c, 0.95).unwrap().is_finite());
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 0.5), Some(2.0));
    }
}
