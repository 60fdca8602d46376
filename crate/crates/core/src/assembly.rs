//! Assembly of the P1 Gagliardo stiffness and mass matrices.
//!
//! With hats extended by zero, the double integral over ℝ^N×ℝ^N splits into
//! the Ω×Ω part and twice the interaction with the complement, which reduces
//! to `∫_Ω φᵢφⱼ κ` with κ(x) = ∫_{ℝ^N∖Ω} |x−y|^{−N−2s} dy.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{FracError, Result};
use crate::geometry::DomainKind;
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::quadrature::GaussLegendre;

mod disk;

/// Contribution of one element pair, over local nodes.
pub(crate) struct LocalBlock {
    pub nodes: Vec<usize>,
    pub vals: Vec<f64>,
    pub pair: (usize, usize),
}

impl LocalBlock {
    fn new(nodes: Vec<usize>, pair: (usize, usize)) -> Self {
        let n = nodes.len();
        Self {
            nodes,
            vals: vec![0.0; n * n],
            pair,
        }
    }

    fn add(&mut self, p: usize, q: usize, v: f64) {
        let n = self.nodes.len();
        self.vals[p * n + q] += v;
    }
}

/// Returns the stiffness `A` (already scaled by the kernel normalization) and
/// the consistent mass matrix `M`, both over interior dofs.
pub fn assemble_matrices(mesh: &Mesh, kernel: &KernelSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if kernel.dim != mesh.dim() {
        return Err(crate::error::invalid(
            "kernel",
            format!("kernel dimension {} differs from mesh dimension {}", kernel.dim, mesh.dim()),
        ));
    }
    let mut a = match mesh.domain.kind {
        DomainKind::Interval { a, b } => {
            let ctx = IntervalContext::new(mesh, kernel.s, a, b);
            accumulate(mesh, |e, f| ctx.block(e, f))?
        }
        DomainKind::Disk { .. } => {
            let ctx = disk::DiskContext::new(mesh, kernel.s);
            accumulate(mesh, |e, f| ctx.block(e, f))?
        }
    };
    a *= kernel.normalization;
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok((a, mass_matrix(mesh)))
}

/// Sums the blocks of all unordered element pairs `e <= f`. Pairs are split
/// into a fixed number of chunks, each reduced into its own matrix, and the
/// chunk matrices are added in order so the result does not depend on the
/// thread count.
fn accumulate<F>(mesh: &Mesh, block: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize, usize) -> LocalBlock + Sync,
{
    let n = mesh.num_dofs();
    let ne = mesh.elements.len();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let budget = 512usize << 20;
    let chunks = (budget / (n * n * 8).max(1)).clamp(1, 32).min(ne);
    let total_pairs = ne * (ne + 1) / 2;
    // element ranges with balanced pair counts
    let mut bounds = vec![0usize];
    let mut acc = 0usize;
    for e in 0..ne {
        acc += ne - e;
        if acc * chunks >= total_pairs * bounds.len() && bounds.len() < chunks {
            bounds.push(e + 1);
        }
    }
    if *bounds.last().unwrap() != ne {
        bounds.push(ne);
    }
    let parts: Vec<Result<DMatrix<f64>>> = bounds
        .windows(2)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|w| {
            let mut m = DMatrix::zeros(n, n);
            for e in w[0]..w[1] {
                let row: Vec<LocalBlock> = (e..ne).into_par_iter().map(|f| block(e, f)).collect();
                for blk in &row {
                    scatter(mesh, blk, &mut m)?;
                }
            }
            Ok(m)
        })
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for p in parts {
        a += p?;
    }
    Ok(a)
}

fn scatter(mesh: &Mesh, blk: &LocalBlock, m: &mut DMatrix<f64>) -> Result<()> {
    let k = blk.nodes.len();
    for p in 0..k {
        let Some(i) = mesh.dof(blk.nodes[p]) else { continue };
        for q in 0..k {
            let Some(j) = mesh.dof(blk.nodes[q]) else { continue };
            let v = blk.vals[p * k + q];
            if !v.is_finite() {
                return Err(FracError::NonFiniteEntry {
                    row: i,
                    col: j,
                    elem_a: blk.pair.0,
                    elem_b: blk.pair.1,
                });
            }
            m[(i, j)] += v;
        }
    }
    Ok(())
}

pub fn mass_matrix(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.num_dofs();
    let mut m = DMatrix::zeros(n, n);
    for (e, el) in mesh.elements.iter().enumerate() {
        let meas = mesh.element_measure(e);
        let k = el.len();
        // P1 mass: meas/((k)(k+1)) (1 + δ_pq)
        let base = meas / ((k * (k + 1)) as f64);
        for p in 0..k {
            let Some(i) = mesh.dof(el[p]) else { continue };
            for q in 0..k {
                let Some(j) = mesh.dof(el[q]) else { continue };
                m[(i, j)] += if p == q { 2.0 * base } else { base };
            }
        }
    }
    m
}

/// Point count for the regular tensor rule on separated pairs.
fn far_points(gap: f64, size: f64) -> usize {
    let ratio = gap / size;
    if ratio < 0.5 {
        16
    } else if ratio < 1.5 {
        10
    } else if ratio < 4.0 {
        6
    } else {
        4
    }
}

// Blocks hold unscaled integrals: half the Ω×Ω double integral over the
// ordered pairs, plus the complement term on the diagonal pairs.
struct IntervalContext {
    x: Vec<f64>,
    s: f64,
    a: f64,
    b: f64,
    g8: GaussLegendre,
    g20: GaussLegendre,
    far: [GaussLegendre; 4],
}

impl IntervalContext {
    fn new(mesh: &Mesh, s: f64, a: f64, b: f64) -> Self {
        Self {
            x: mesh.nodes.iter().map(|p| p[0]).collect(),
            s,
            a,
            b,
            g8: GaussLegendre::new(8),
            g20: GaussLegendre::new(20),
            far: [4, 6, 10, 16].map(GaussLegendre::new),
        }
    }

    fn block(&self, e: usize, f: usize) -> LocalBlock {
        if e == f {
            let mut blk = self.self_block(e);
            self.add_complement(e, &mut blk);
            blk
        } else if f == e + 1 {
            self.touching_block(e, f)
        } else {
            self.separated_block(e, f)
        }
    }

    fn self_block(&self, e: usize) -> LocalBlock {
        let (x, s) = (&self.x, self.s);
        let h = x[e + 1] - x[e];
        let mut blk = LocalBlock::new(vec![e, e + 1], (e, e));
        let g = [-1.0 / h, 1.0 / h];
        // ∫_E∫_E |x−y|^{1−2s}
        let c = 2.0 * h.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s));
        for p in 0..2 {
            for q in 0..2 {
                blk.add(p, q, 0.5 * g[p] * g[q] * c);
            }
        }
        blk
    }

    /// Elements sharing the node `x[f]`: with x = x₁ − h_E α, y = x₁ + h_F β
    /// and a Duffy split of the unit square the radial factor integrates in
    /// closed form to 1/(3−2s).
    fn touching_block(&self, e: usize, f: usize) -> LocalBlock {
        let (x, s) = (&self.x, self.s);
        let sigma = 1.0 + 2.0 * s;
        let (he, hf) = (x[e + 1] - x[e], x[f + 1] - x[f]);
        let mut blk = LocalBlock::new(vec![e, e + 1, e + 2], (e, f));
        for (w, wt) in self.g20.mapped(0.0, 1.0) {
            let k1 = (he + hf * w).powf(-sigma);
            let k2 = (he * w + hf).powf(-sigma);
            for p in 0..3 {
                let v = unit3(p);
                let d1p = (v[0] - v[1]) - w * (v[2] - v[1]);
                let d2p = w * (v[0] - v[1]) - (v[2] - v[1]);
                for q in 0..3 {
                    let u = unit3(q);
                    let d1q = (u[0] - u[1]) - w * (u[2] - u[1]);
                    let d2q = w * (u[0] - u[1]) - (u[2] - u[1]);
                    blk.add(p, q, wt * (d1p * d1q * k1 + d2p * d2q * k2));
                }
            }
        }
        // the two orderings of the pair contribute equally, cancelling the ½
        let scale = he * hf / (3.0 - 2.0 * s);
        for v in blk.vals.iter_mut() {
            *v *= scale;
        }
        blk
    }

    fn separated_block(&self, e: usize, f: usize) -> LocalBlock {
        let x = &self.x;
        let sigma = 1.0 + 2.0 * self.s;
        let (he, hf) = (x[e + 1] - x[e], x[f + 1] - x[f]);
        let gap = x[f] - x[e + 1];
        let gl = match far_points(gap, he.max(hf)) {
            4 => &self.far[0],
            6 => &self.far[1],
            10 => &self.far[2],
            _ => &self.far[3],
        };
        let mut blk = LocalBlock::new(vec![e, e + 1, f, f + 1], (e, f));
        for (xi, wx) in gl.mapped(0.0, 1.0) {
            let px = x[e] + he * xi;
            for (eta, wy) in gl.mapped(0.0, 1.0) {
                let py = x[f] + hf * eta;
                let k = (py - px).powf(-sigma) * wx * wy * he * hf;
                let d = [1.0 - xi, xi, -(1.0 - eta), -eta];
                for p in 0..4 {
                    for q in 0..4 {
                        blk.add(p, q, d[p] * d[q] * k);
                    }
                }
            }
        }
        blk
    }

    /// ∫_E φ_p φ_q κ with κ(x) = ((x−a)^{−2s} + (b−x)^{−2s})/(2s); the
    /// singular power on an element touching the boundary is integrated
    /// exactly against the single interior hat.
    fn add_complement(&self, e: usize, blk: &mut LocalBlock) {
        let (x, s) = (&self.x, self.s);
        let (x0, x1) = (x[e], x[e + 1]);
        let h = x1 - x0;
        let left_exact = e == 0;
        let right_exact = e + 2 == x.len();
        for (xi, w) in self.g8.mapped(0.0, 1.0) {
            let px = x0 + h * xi;
            let mut k = 0.0;
            if !left_exact {
                k += (px - self.a).powf(-2.0 * s);
            }
            if !right_exact {
                k += (self.b - px).powf(-2.0 * s);
            }
            let psi = [1.0 - xi, xi];
            for p in 0..2 {
                for q in 0..2 {
                    blk.add(p, q, w * h * psi[p] * psi[q] * k / (2.0 * s));
                }
            }
        }
        let exact = h.powf(1.0 - 2.0 * s) / (3.0 - 2.0 * s) / (2.0 * s);
        if left_exact {
            blk.add(1, 1, exact);
        }
        if right_exact {
            blk.add(0, 0, exact);
        }
    }
}

fn unit3(p: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[p] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::mesh::build_mesh;
    use crate::quadrature::adaptive;

    /// Brute-force oracle for one entry of the Ω×Ω part plus complement
    /// term in 1D, by nested adaptive quadrature of the hat functions.
    fn oracle_entry(x: &[f64], i: usize, j: usize, s: f64) -> f64 {
        let hat = |k: usize, t: f64| -> f64 {
            if t <= x[k - 1] || t >= x[k + 1] {
                0.0
            } else if t <= x[k] {
                (t - x[k - 1]) / (x[k] - x[k - 1])
            } else {
                (x[k + 1] - t) / (x[k + 1] - x[k])
            }
        };
        let (a, b) = (x[0], x[x.len() - 1]);
        let sigma = 1.0 + 2.0 * s;
        let mut total = 0.0;
        // integrate over every element pair, splitting at the diagonal
        for e in 0..x.len() - 1 {
            for f in 0..x.len() - 1 {
                let inner = |px: f64| -> f64 {
                    let g = |py: f64| {
                        let d = (hat(i, px) - hat(i, py)) * (hat(j, px) - hat(j, py));
                        if d == 0.0 {
                            0.0
                        } else {
                            d * (px - py).abs().powf(-sigma)
                        }
                    };
                    if e == f {
                        adaptive(g, x[f], px, 1e-13, 1e-11, 2000).unwrap().value
                            + adaptive(g, px, x[f + 1], 1e-13, 1e-11, 2000).unwrap().value
                    } else {
                        adaptive(g, x[f], x[f + 1], 1e-13, 1e-11, 2000).unwrap().value
                    }
                };
                total += adaptive(inner, x[e], x[e + 1], 1e-12, 1e-10, 2000).unwrap().value;
            }
        }
        let comp = adaptive(
            |t| hat(i, t) * hat(j, t) * ((t - a).powf(-2.0 * s) + (b - t).powf(-2.0 * s)) / (2.0 * s),
            a,
            b,
            1e-13,
            1e-11,
            2000,
        )
        .unwrap()
        .value;
        0.5 * total + comp
    }

    #[test]
    fn interval_entries_match_brute_force() {
        for &s in &[0.25, 0.5] {
            let d = Domain::interval(-1.0, 1.0, s).unwrap();
            let mesh = build_mesh(&d, 8).unwrap();
            let k = KernelSpec::unit(1, s).unwrap();
            let (a, _) = assemble_matrices(&mesh, &k).unwrap();
            let x: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
            for &(i, j) in &[(1, 1), (4, 4), (1, 2), (3, 4), (2, 5), (1, 7)] {
                let want = oracle_entry(&x, i, j, s);
                let got = a[(i - 1, j - 1)];
                assert!(
                    (got - want).abs() <= 1e-6 * want.abs().max(1e-3),
                    "s={s} ({i},{j}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn mass_matrix_sums_to_hat_integrals() {
        let d = Domain::interval(0.0, 1.0, 0.5).unwrap();
        let mesh = build_mesh(&d, 4).unwrap();
        let m = mass_matrix(&mesh);
        // Σ_j M_ij = ∫ φ_i (1 − boundary hats) ; interior rows away from the boundary give h
        assert!((m.row(1).sum() - 0.25).abs() < 1e-15);
    }
}
