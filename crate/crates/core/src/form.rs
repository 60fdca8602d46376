//! The discrete Gagliardo inner product.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assembly::assemble_matrices;
use crate::error::{FracError, Result};
use crate::grid::GridFunction;
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;

/// Stiffness and mass matrices over the interior nodes of a mesh.
#[derive(Debug, Clone)]
pub struct StiffnessForm {
    pub mesh: Arc<Mesh>,
    pub kernel: KernelSpec,
    pub a: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

#[derive(Serialize)]
struct DenseExport<'a> {
    dofs: usize,
    interior_nodes: &'a [usize],
    kernel: &'a KernelSpec,
    stiffness: Vec<Vec<f64>>,
    mass: Vec<Vec<f64>>,
}

pub fn assemble_form(mesh: &Arc<Mesh>, kernel: &KernelSpec) -> Result<StiffnessForm> {
    let (a, m) = assemble_matrices(mesh, kernel)?;
    Ok(StiffnessForm {
        mesh: Arc::clone(mesh),
        kernel: *kernel,
        a,
        m,
    })
}

impl StiffnessForm {
    pub fn dofs(&self) -> usize {
        self.a.nrows()
    }

    /// Interior values of `u` as a vector, after checking mesh and boundary.
    pub fn coefficients(&self, u: &GridFunction) -> Result<DVector<f64>> {
        if !(Arc::ptr_eq(&u.mesh, &self.mesh) || *u.mesh == *self.mesh) {
            return Err(FracError::MeshMismatch);
        }
        u.check_in_x()?;
        Ok(DVector::from_vec(u.interior_values()))
    }

    pub fn to_grid(&self, v: &DVector<f64>) -> GridFunction {
        GridFunction::from_interior(&self.mesh, v.as_slice()).expect("vector sized to the form")
    }

    /// Load vector ∫ g φ_i for the interpolant of nodal data g, boundary
    /// values included; equals `M g` when g vanishes on the boundary.
    pub fn load(&self, g: &GridFunction) -> Result<DVector<f64>> {
        if !(Arc::ptr_eq(&g.mesh, &self.mesh) || *g.mesh == *self.mesh) {
            return Err(FracError::MeshMismatch);
        }
        let mesh = &self.mesh;
        let mut b = DVector::zeros(self.dofs());
        for (e, el) in mesh.elements.iter().enumerate() {
            let k = el.len();
            let base = mesh.element_measure(e) / ((k * (k + 1)) as f64);
            for p in 0..k {
                let Some(i) = mesh.dof(el[p]) else { continue };
                for q in 0..k {
                    b[i] += if p == q { 2.0 } else { 1.0 } * base * g.values[el[q]];
                }
            }
        }
        Ok(b)
    }

    /// Solves `A u = rhs` by Cholesky.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let chol = self
            .a
            .clone()
            .cholesky()
            .ok_or(FracError::NotPositiveDefinite("stiffness matrix"))?;
        Ok(chol.solve(rhs))
    }

    /// Solves `(−Δ)^s u = g` with zero exterior data, `g` given nodally.
    pub fn solve_load(&self, g: &GridFunction) -> Result<GridFunction> {
        let rhs = self.load(g)?;
        Ok(self.to_grid(&self.solve(&rhs)?))
    }

    pub fn to_dense_json(&self) -> String {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        serde_json::to_string(&DenseExport {
            dofs: self.dofs(),
            interior_nodes: self.mesh.interior_nodes(),
            kernel: &self.kernel,
            stiffness: rows(&self.a),
            mass: rows(&self.m),
        })
        .expect("dense export serializes")
    }

    /// Nonzero stiffness entries as `row col value` lines.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        for j in 0..self.a.ncols() {
            for i in 0..self.a.nrows() {
                let v = self.a[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:.17e}").expect("writing to a string");
                }
            }
        }
        out
    }
}

/// ⟨u, v⟩ = uᵀ A v.
pub fn apply_form(form: &StiffnessForm, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let cu = form.coefficients(u)?;
    let cv = form.coefficients(v)?;
    Ok(cu.dot(&(&form.a * cv)))
}

/// √(uᵀ A u).
pub fn seminorm(form: &StiffnessForm, u: &GridFunction) -> Result<f64> {
    let q = apply_form(form, u, u)?;
    let scale = form.a.amax() * form.coefficients(u)?.norm_squared();
    if q < -1e-12 * scale {
        return Err(FracError::NegativeEnergy(q));
    }
    Ok(q.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::mesh::build_mesh;

    fn form_1d(n: usize, s: f64) -> StiffnessForm {
        let mesh = Arc::new(build_mesh(&Domain::interval(-1.0, 1.0, s).unwrap(), n).unwrap());
        assemble_form(&mesh, &KernelSpec::new(1, s).unwrap()).unwrap()
    }

    #[test]
    fn zero_vector_has_zero_energy_and_symmetry_is_exact() {
        let f = form_1d(16, 0.5);
        let z = GridFunction::zeros(&f.mesh);
        assert_eq!(seminorm(&f, &z).unwrap(), 0.0);
        assert_eq!((&f.a - f.a.transpose()).amax(), 0.0);
    }

    #[test]
    fn torsion_energy_identity() {
        // ⟨u,u⟩ = ∫ u for the interpolant of the torsion function
        let f = form_1d(64, 0.5);
        let u = GridFunction::interior_from_fn(&f.mesh, |p| (1.0 - p[0] * p[0]).max(0.0).sqrt());
        let e = apply_form(&f, &u, &u).unwrap();
        let want = std::f64::consts::FRAC_PI_2;
        assert!((e - want).abs() / want < 0.05, "{e}");
    }

    #[test]
    fn mesh_mismatch_and_boundary_are_rejected() {
        let f = form_1d(8, 0.5);
        let g = form_1d(10, 0.5);
        let u = GridFunction::zeros(&g.mesh);
        assert!(matches!(apply_form(&f, &u, &u), Err(FracError::MeshMismatch)));
        let v = GridFunction::from_fn(&f.mesh, |_| 1.0);
        assert!(matches!(apply_form(&f, &v, &v), Err(FracError::NonzeroBoundary { .. })));
    }

    #[test]
    fn triplet_export_is_complete() {
        let f = form_1d(4, 0.5);
        assert_eq!(f.to_triplets().lines().count(), 9);
        let json: serde_json::Value = serde_json::from_str(&f.to_dense_json()).unwrap();
        assert_eq!(json["dofs"], 3);
    }
}
