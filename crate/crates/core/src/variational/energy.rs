//! Φ(u) = ½uᵀAu − ∫F(x,u) with its gradient and Hessian.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{FracError, Result};
use crate::form::StiffnessForm;
use crate::geometry::Point;
use crate::grid::GridFunction;
use crate::quadrature::{triangle_rule, GaussLegendre};

use super::nonlinearity::Nonlinearity;

/// Quadrature point with the interior-node basis values that live there.
#[derive(Debug, Clone)]
struct QuadPoint {
    x: Point,
    weight: f64,
    basis: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct EnergyFunctional<'a> {
    pub form: &'a StiffnessForm,
    pub nl: Nonlinearity,
    points: Vec<QuadPoint>,
    chol: Cholesky<f64, Dyn>,
}

impl<'a> EnergyFunctional<'a> {
    pub fn new(form: &'a StiffnessForm, nl: Nonlinearity) -> Result<Self> {
        let mesh = &form.mesh;
        let mut points = Vec::new();
        if mesh.dim() == 1 {
            // exact for the quadratic terms of linear nonlinearities
            let gl = GaussLegendre::new(3);
            for (e, el) in mesh.elements.iter().enumerate() {
                let h = mesh.element_measure(e);
                for (xi, w) in gl.mapped(0.0, 1.0) {
                    let basis = [(el[0], 1.0 - xi), (el[1], xi)]
                        .iter()
                        .filter_map(|&(n, v)| mesh.dof(n).map(|d| (d, v)))
                        .collect();
                    points.push(QuadPoint {
                        x: mesh.map_point(e, xi, 0.0),
                        weight: w * h,
                        basis,
                    });
                }
            }
        } else {
            let rule = triangle_rule(3);
            for (e, el) in mesh.elements.iter().enumerate() {
                let area = mesh.element_measure(e);
                for p in &rule {
                    let lam = [1.0 - p.xi - p.eta, p.xi, p.eta];
                    let basis = (0..3).filter_map(|k| mesh.dof(el[k]).map(|d| (d, lam[k]))).collect();
                    points.push(QuadPoint {
                        x: mesh.map_point(e, p.xi, p.eta),
                        weight: 2.0 * p.weight * area,
                        basis,
                    });
                }
            }
        }
        let chol = form
            .a
            .clone()
            .cholesky()
            .ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
        Ok(Self { form, nl, points, chol })
    }

    fn value_at(q: &QuadPoint, c: &DVector<f64>) -> f64 {
        q.basis.iter().map(|&(d, v)| v * c[d]).sum()
    }

    fn checked(q: &QuadPoint, t: f64, v: f64) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FracError::NonFiniteNonlinearity { location: q.x, t })
        }
    }

    pub fn energy_vec(&self, c: &DVector<f64>) -> Result<f64> {
        let mut integral = 0.0;
        for q in &self.points {
            let t = Self::value_at(q, c);
            integral += q.weight * Self::checked(q, t, self.nl.primitive(&q.x, t))?;
        }
        Ok(0.5 * c.dot(&(&self.form.a * c)) - integral)
    }

    /// b(u)_i = ∫ f(x,u) φ_i.
    pub fn load_vec(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let mut b = DVector::zeros(self.form.dofs());
        for q in &self.points {
            let t = Self::value_at(q, c);
            let v = Self::checked(q, t, self.nl.f(&q.x, t))?;
            for &(d, phi) in &q.basis {
                b[d] += q.weight * v * phi;
            }
        }
        Ok(b)
    }

    /// Au − b(u).
    pub fn gradient_vec(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.form.a * c - self.load_vec(c)?)
    }

    /// A − ∫ f_t(x,u) φ_i φ_j.
    pub fn hessian_vec(&self, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut h = self.form.a.clone();
        for q in &self.points {
            let t = Self::value_at(q, c);
            let d = Self::checked(q, t, self.nl.df(&q.x, t))?;
            if d == 0.0 {
                continue;
            }
            for &(i, pi) in &q.basis {
                for &(j, pj) in &q.basis {
                    h[(i, j)] -= q.weight * d * pi * pj;
                }
            }
        }
        Ok(h)
    }

    /// A⁻¹ v.
    pub fn riesz(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// √(rᵀA⁻¹r), the norm of a residual as a functional on X.
    pub fn dual_norm(&self, r: &DVector<f64>) -> f64 {
        r.dot(&self.riesz(r)).max(0.0).sqrt()
    }

    pub fn x_norm(&self, c: &DVector<f64>) -> f64 {
        c.dot(&(&self.form.a * c)).max(0.0).sqrt()
    }

    pub fn energy(&self, u: &GridFunction) -> Result<f64> {
        self.energy_vec(&self.form.coefficients(u)?)
    }

    /// The nodal residual Au − Mf(·,u), zero at boundary nodes.
    pub fn gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        let g = self.gradient_vec(&self.form.coefficients(u)?)?;
        Ok(self.form.to_grid(&g))
    }

    /// Dual norm of the weak-form residual at u.
    pub fn residual_norm(&self, u: &GridFunction) -> Result<f64> {
        let g = self.gradient_vec(&self.form.coefficients(u)?)?;
        Ok(self.dual_norm(&g))
    }
}
