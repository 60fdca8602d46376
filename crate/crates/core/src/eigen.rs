//! Smallest generalized eigenpairs of (A, M).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, FracError, Result};
use crate::form::StiffnessForm;
use crate::grid::GridFunction;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// M-normalized eigenfunction.
    pub function: GridFunction,
    /// ‖Aφ − λMφ‖ / (λ ‖Mφ‖).
    pub residual: f64,
}

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 1000;

/// Solves the small dense generalized problem `K v = λ G v`, ascending.
fn small_generalized(k: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or(FracError::NotPositiveDefinite("projected mass matrix"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(FracError::NotPositiveDefinite("projected mass matrix"))?;
    let mut c = &linv * k * linv.transpose();
    c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(eig.eigenvectors.nrows(), order.len());
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    let vecs = linv.transpose() * vecs;
    Ok((vals, vecs))
}

/// The `count` smallest eigenpairs by block inverse iteration with
/// Rayleigh–Ritz projection.
pub fn eigenpairs(form: &StiffnessForm, count: usize) -> Result<Vec<EigenPair>> {
    let n = form.dofs();
    if count == 0 || count >= n {
        return Err(invalid(
            "count",
            format!("need 1 <= count < {n} interior nodes, got {count}"),
        ));
    }
    let block = (2 * count).max(count + 8).min(n);
    let chol = form
        .a
        .clone()
        .cholesky()
        .ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
    // deterministic start: low-frequency sines plus a smooth ramp
    let mut x = DMatrix::from_fn(n, block, |i, j| {
        let t = (i as f64 + 1.0) / (n as f64 + 1.0);
        (std::f64::consts::PI * (j as f64 + 1.0) * t).sin() + 1e-3 * ((i * (j + 3)) % 7) as f64
    });
    let mut residuals = vec![f64::INFINITY; count];
    for _ in 0..MAX_ITER {
        let y = chol.solve(&(&form.m * &x));
        let ay = &form.a * &y;
        let my = &form.m * &y;
        let kr = y.transpose() * &ay;
        let gr = y.transpose() * &my;
        let (vals, vecs) = small_generalized(&(0.5 * (&kr + kr.transpose())), &(0.5 * (&gr + gr.transpose())))?;
        x = &y * &vecs;
        let ax = &ay * &vecs;
        let mx = &my * &vecs;
        for k in 0..count {
            let r = ax.column(k) - vals[k] * mx.column(k);
            residuals[k] = r.norm() / (vals[k].abs() * mx.column(k).norm());
        }
        if residuals.iter().all(|&r| r <= TOL) {
            return Ok(finish(form, &x, &vals, &residuals, count));
        }
    }
    Err(FracError::EigenNonConvergence {
        iterations: MAX_ITER,
        residuals,
    })
}

fn finish(form: &StiffnessForm, x: &DMatrix<f64>, vals: &DVector<f64>, residuals: &[f64], count: usize) -> Vec<EigenPair> {
    (0..count)
        .map(|k| {
            let mut v = x.column(k).into_owned();
            let mn = v.dot(&(&form.m * &v)).sqrt();
            v /= mn;
            let flip = if k == 0 {
                v.sum() < 0.0
            } else {
                let imax = v.iamax();
                v[imax] < 0.0
            };
            if flip {
                v = -v;
            }
            EigenPair {
                value: vals[k],
                function: form.to_grid(&v),
                residual: residuals[k],
            }
        })
        .collect()
}

/// All generalized eigenvalues by dense reduction; the reference used to
/// validate the iterative solver.
pub fn dense_eigenvalues(form: &StiffnessForm) -> Result<Vec<f64>> {
    let (vals, _) = small_generalized(&form.a, &form.m)?;
    Ok(vals.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{apply_form, assemble_form, seminorm};
    use crate::geometry::Domain;
    use crate::kernel::KernelSpec;
    use crate::mesh::build_mesh;
    use std::sync::Arc;

    fn form(n: usize, s: f64) -> StiffnessForm {
        let mesh = Arc::new(build_mesh(&Domain::interval(-1.0, 1.0, s).unwrap(), n).unwrap());
        assemble_form(&mesh, &KernelSpec::new(1, s).unwrap()).unwrap()
    }

    #[test]
    fn matches_dense_reference() {
        let f = form(48, 0.5);
        let pairs = eigenpairs(&f, 4).unwrap();
        let dense = dense_eigenvalues(&f).unwrap();
        for (p, d) in pairs.iter().zip(&dense) {
            assert!((p.value - d).abs() < 1e-9 * d, "{} vs {d}", p.value);
        }
        assert!(pairs.windows(2).all(|w| w[0].value < w[1].value));
    }

    #[test]
    fn rayleigh_identities_and_sign() {
        let f = form(64, 0.5);
        let pairs = eigenpairs(&f, 2).unwrap();
        let p1 = &pairs[0];
        assert!(p1.value > 0.0);
        assert!(p1.function.values.iter().sum::<f64>() > 0.0);
        let e = apply_form(&f, &p1.function, &p1.function).unwrap();
        assert!((e - p1.value).abs() < 1e-9 * p1.value);
        assert!((seminorm(&f, &p1.function).unwrap() - p1.value.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn first_eigenvalue_range_and_refinement() {
        let l: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| eigenpairs(&form(n, 0.5), 2).unwrap()[0].value)
            .collect();
        // Richardson extrapolation from the observed convergence order
        let rate = (l[0] - l[1]) / (l[1] - l[2]);
        let limit = l[2] - (l[1] - l[2]) / (rate - 1.0);
        assert!(limit > 1.0 && limit < 1.3, "{l:?} -> {limit}");
        assert!((l[2] - limit).abs() / limit < 0.01);
    }

    #[test]
    fn rejects_bad_count() {
        let f = form(8, 0.5);
        assert!(eigenpairs(&f, 0).is_err());
        assert!(eigenpairs(&f, 7).is_err());
    }
}
