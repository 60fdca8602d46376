//! Free, ball-constrained and Newton solvers for the discrete problem.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, FracError, Result};
use crate::geometry::critical_exponent;
use crate::grid::GridFunction;

use super::energy::EnergyFunctional;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    /// Relative gradient size below which Newton steps are tried.
    pub newton_switch: f64,
    /// Tolerance on a positive ball multiplier.
    pub mu_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_abs: 1e-9,
            tol_rel: 1e-10,
            max_iter: 10_000,
            newton_switch: 1e-2,
            mu_tol: 1e-6,
        }
    }
}

impl SolveOptions {
    fn converged(&self, grad_norm: f64, energy: f64) -> bool {
        grad_norm <= self.tol_abs || grad_norm <= self.tol_rel * (1.0 + energy.abs())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: GridFunction,
    pub energy: f64,
    /// Dual norm of the stationarity residual of the problem that was solved.
    pub grad_norm: f64,
    pub mu: Option<f64>,
    pub c_multiplier: Option<f64>,
    pub iterations: usize,
    /// Dual norm of Au − Mf(·,u) for the functional's nonlinearity.
    pub residual: f64,
    pub status: SolveStatus,
    /// Growth exponent equals the critical exponent.
    pub critical: bool,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    energy: f64,
    grad_norm: f64,
    mu: Option<f64>,
    c_multiplier: Option<f64>,
    iterations: usize,
    status: SolveStatus,
    residual: f64,
    critical: bool,
    solution_node_values: &'a [f64],
}

impl SolveReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ReportJson {
            energy: self.energy,
            grad_norm: self.grad_norm,
            mu: self.mu,
            c_multiplier: self.c_multiplier,
            iterations: self.iterations,
            status: self.status,
            residual: self.residual,
            critical: self.critical,
            solution_node_values: &self.solution.values,
        })
        .expect("report serializes")
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

fn is_critical(e: &EnergyFunctional<'_>) -> bool {
    let d = &e.form.mesh.domain;
    critical_exponent(d.dim(), d.s).is_some_and(|c| (e.nl.q - c).abs() <= 1e-12 * c)
}

fn report(
    e: &EnergyFunctional<'_>,
    c: &DVector<f64>,
    grad_norm: f64,
    iterations: usize,
    status: SolveStatus,
    mu: Option<f64>,
) -> Result<SolveReport> {
    let energy = e.energy_vec(c).unwrap_or(f64::NEG_INFINITY);
    let residual = e.gradient_vec(c).map(|g| e.dual_norm(&g)).unwrap_or(f64::INFINITY);
    Ok(SolveReport {
        solution: e.form.to_grid(c),
        energy,
        grad_norm,
        mu,
        c_multiplier: mu.map(|m| 1.0 / (1.0 - m)),
        iterations,
        residual,
        status,
        critical: is_critical(e),
    })
}

/// Tries a full Newton step when the Hessian is positive definite; accepted
/// if it reduces the gradient norm.
fn newton_step(e: &EnergyFunctional<'_>, c: &DVector<f64>, g: &DVector<f64>, gn: f64) -> Option<DVector<f64>> {
    let h = e.hessian_vec(c).ok()?;
    let chol = h.cholesky()?;
    let trial = c - chol.solve(g);
    let gt = e.gradient_vec(&trial).ok()?;
    (e.dual_norm(&gt) < gn).then_some(trial)
}

/// Descent to a stationary point of Φ: A⁻¹-preconditioned gradient steps
/// with Armijo backtracking, switching to Newton near stationarity.
pub fn minimize_free(e: &EnergyFunctional<'_>, init: &GridFunction, opts: &SolveOptions) -> Result<SolveReport> {
    let mut c = e.form.coefficients(init)?;
    let mut phi = e.energy_vec(&c)?;
    let (phi0, norm0) = (phi, e.x_norm(&c));
    let mut gn = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = e.gradient_vec(&c)?;
        let p = -e.riesz(&g);
        let slope = g.dot(&p);
        gn = (-slope).max(0.0).sqrt();
        if opts.converged(gn, phi) {
            return report(e, &c, gn, it, SolveStatus::Converged, None);
        }
        if gn <= opts.newton_switch * (1.0 + phi.abs()) {
            if let Some(next) = newton_step(e, &c, &g, gn) {
                c = next;
                phi = e.energy_vec(&c)?;
                continue;
            }
        }
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &c + alpha * &p;
            if let Ok(v) = e.energy_vec(&trial) {
                if v <= phi + 1e-4 * alpha * slope {
                    c = trial;
                    phi = v;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            // rounding floor of the energy reached before the gradient test
            return report(e, &c, gn, it, SolveStatus::MaxIter, None);
        }
        let unbounded = phi < phi0 - 1e12 * (1.0 + phi0.abs()) || e.x_norm(&c) > 1e10 * (1.0 + norm0);
        if unbounded {
            return report(e, &c, gn, it + 1, SolveStatus::Diverged, None);
        }
    }
    report(e, &c, gn, opts.max_iter, SolveStatus::MaxIter, None)
}

/// Multiplier μ with Au − b(u) ≈ μAu, by least squares in the dual norm,
/// and the remaining stationarity residual.
fn ball_stationarity(e: &EnergyFunctional<'_>, c: &DVector<f64>, g: &DVector<f64>, on_boundary: bool) -> (f64, f64) {
    if !on_boundary {
        return (0.0, e.dual_norm(g));
    }
    let ac = &e.form.a * c;
    let mu = g.dot(c) / c.dot(&ac);
    let r = g - mu * ac;
    (mu, e.dual_norm(&r))
}

/// Newton step on the stationarity system: the free equation in the
/// interior, or the bordered system for (c, μ) with cᵀAc = eps² on the
/// sphere. Accepted if it stays in the ball and reduces the stationarity.
fn ball_newton(
    e: &EnergyFunctional<'_>,
    c: &DVector<f64>,
    g: &DVector<f64>,
    mu: f64,
    on_boundary: bool,
    eps: f64,
    stat: f64,
) -> Option<DVector<f64>> {
    let h = e.hessian_vec(c).ok()?;
    let trial = if on_boundary {
        let n = c.len();
        let ac = &e.form.a * c;
        let mut k = DMatrix::zeros(n + 1, n + 1);
        k.view_mut((0, 0), (n, n)).copy_from(&(h - mu * &e.form.a));
        k.view_mut((0, n), (n, 1)).copy_from(&(-&ac));
        k.view_mut((n, 0), (1, n)).copy_from(&ac.transpose());
        let mut rhs = DVector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-(g - mu * &ac)));
        rhs[n] = 0.5 * (eps * eps - c.dot(&ac));
        let d = k.lu().solve(&rhs)?;
        let t = c + d.rows(0, n);
        let norm = e.x_norm(&t);
        t * (eps / norm)
    } else {
        let t = c - h.cholesky()?.solve(g);
        if e.x_norm(&t) > eps {
            return None;
        }
        t
    };
    let gt = e.gradient_vec(&trial).ok()?;
    let (_, st) = ball_stationarity(e, &trial, &gt, on_boundary);
    (st < stat).then_some(trial)
}

/// Minimizes Φ over the X-norm ball of radius `eps` by projected descent in
/// the A-metric; the projection is the exact radial scaling.
pub fn minimize_ball(e: &EnergyFunctional<'_>, eps: f64, init: &GridFunction, opts: &SolveOptions) -> Result<SolveReport> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid("eps", format!("ball radius must be positive, got {eps}")));
    }
    let project = |v: DVector<f64>| {
        let n = e.x_norm(&v);
        if n > eps {
            v * (eps / n)
        } else {
            v
        }
    };
    let mut c = project(e.form.coefficients(init)?);
    let mut phi = e.energy_vec(&c)?;
    let mut last = (0.0, f64::INFINITY);
    for it in 0..opts.max_iter {
        let g = e.gradient_vec(&c)?;
        let on_boundary = e.x_norm(&c) >= eps * (1.0 - 1e-9);
        let (mu, stat) = ball_stationarity(e, &c, &g, on_boundary);
        last = (mu, stat);
        if opts.converged(stat, phi) && mu <= opts.mu_tol {
            return report(e, &c, stat, it, SolveStatus::Converged, Some(mu.min(0.0)));
        }
        if stat <= opts.newton_switch * (1.0 + phi.abs()) {
            if let Some(next) = ball_newton(e, &c, &g, mu, on_boundary, eps, stat) {
                c = next;
                phi = e.energy_vec(&c)?;
                continue;
            }
        }
        let p = -e.riesz(&g);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = project(&c + alpha * &p);
            let step = &trial - &c;
            if let Ok(v) = e.energy_vec(&trial) {
                let sq = step.dot(&(&e.form.a * &step));
                if v <= phi - 1e-4 / alpha * sq && sq > 0.0 {
                    c = trial;
                    phi = v;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (mu, stat) = last;
    if mu > opts.mu_tol {
        return Err(FracError::PositiveMultiplier { mu, tol: opts.mu_tol });
    }
    report(e, &c, stat, opts.max_iter, SolveStatus::MaxIter, Some(mu.min(0.0)))
}

/// Newton step on the nodes not held at a bound, accepted if it reduces
/// the projected-gradient stationarity.
#[allow(clippy::too_many_arguments)]
fn projected_newton(
    e: &EnergyFunctional<'_>,
    c: &DVector<f64>,
    g: &DVector<f64>,
    c0: &DVector<f64>,
    width: &DVector<f64>,
    project: &dyn Fn(DVector<f64>) -> DVector<f64>,
    diag: &DVector<f64>,
    stat: f64,
) -> Option<DVector<f64>> {
    let free: Vec<usize> = (0..c.len())
        .filter(|&i| {
            let at_lo = c[i] <= c0[i] - width[i] && g[i] > 0.0;
            let at_hi = c[i] >= c0[i] + width[i] && g[i] < 0.0;
            !(at_lo || at_hi)
        })
        .collect();
    if free.is_empty() {
        return None;
    }
    let h = e.hessian_vec(c).ok()?;
    let hf = h.select_rows(&free).select_columns(&free);
    let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
    let d = hf.cholesky()?.solve(&gf);
    let mut trial = c.clone();
    for (k, &i) in free.iter().enumerate() {
        trial[i] -= d[k];
    }
    let trial = project(trial);
    let gt = e.gradient_vec(&trial).ok()?;
    let pg = project(&trial - gt.component_div(diag)) - &trial;
    (pg.component_mul(diag).dot(&pg).sqrt() < stat).then_some(trial)
}

/// Minimizes Φ over the weighted sup-norm ball {|u − center| ≤ ρδ^s
/// nodally} by projected gradient steps in the diagonal metric of A, where
/// the box projection is exact.
pub fn minimize_delta_ball(
    e: &EnergyFunctional<'_>,
    center: &GridFunction,
    rho: f64,
    init: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid("rho", format!("ball radius must be positive, got {rho}")));
    }
    let mesh = &e.form.mesh;
    let s = mesh.domain.s;
    let c0 = e.form.coefficients(center)?;
    let width: DVector<f64> = DVector::from_iterator(
        c0.len(),
        mesh.interior_nodes().iter().map(|&n| rho * mesh.delta()[n].powf(s)),
    );
    let project = |v: DVector<f64>| {
        DVector::from_iterator(
            v.len(),
            v.iter().enumerate().map(|(i, &x)| x.clamp(c0[i] - width[i], c0[i] + width[i])),
        )
    };
    let diag = e.form.a.diagonal();
    let mut c = project(e.form.coefficients(init)?);
    let mut phi = e.energy_vec(&c)?;
    let mut alpha = 1.0f64;
    let mut stat = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = e.gradient_vec(&c)?;
        let p = -g.component_div(&diag);
        // projected-gradient stationarity in the diagonal metric
        let pg = project(&c + &p) - &c;
        stat = pg.component_mul(&diag).dot(&pg).sqrt();
        if opts.converged(stat, phi) {
            return report(e, &c, stat, it, SolveStatus::Converged, None);
        }
        if stat <= opts.newton_switch * (1.0 + phi.abs()) {
            if let Some(next) = projected_newton(e, &c, &g, &c0, &width, &project, &diag, stat) {
                c = next;
                phi = e.energy_vec(&c)?;
                continue;
            }
        }
        alpha = (2.0 * alpha).min(1e3);
        let mut moved = false;
        for _ in 0..80 {
            let trial = project(&c + alpha * &p);
            let step = &trial - &c;
            let sq = step.component_mul(&diag).dot(&step);
            if let Ok(v) = e.energy_vec(&trial) {
                if sq > 0.0 && v <= phi - 1e-4 / alpha * sq {
                    c = trial;
                    phi = v;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            return report(e, &c, stat, it, SolveStatus::MaxIter, None);
        }
    }
    report(e, &c, stat, opts.max_iter, SolveStatus::MaxIter, None)
}

/// Jacobian eigenvalue ratio below which Newton reports resonance.
const SINGULAR_RATIO: f64 = 1e-10;

/// Damped Newton iteration on Au = Mf(·,u).
pub fn solve_semilinear(e: &EnergyFunctional<'_>, init: &GridFunction, opts: &SolveOptions) -> Result<SolveReport> {
    let mut c = e.form.coefficients(init)?;
    let max_newton = opts.max_iter.min(500);
    let mut rn = f64::INFINITY;
    for it in 0..max_newton {
        let r = e.gradient_vec(&c)?;
        rn = e.dual_norm(&r);
        let phi = e.energy_vec(&c).unwrap_or(0.0);
        if opts.converged(rn, phi) {
            return report(e, &c, rn, it, SolveStatus::Converged, None);
        }
        let j = e.hessian_vec(&c)?;
        let ev = j.clone().symmetric_eigenvalues();
        let (lo, hi) = ev
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        let ratio = lo / hi;
        if ratio < SINGULAR_RATIO {
            return Err(FracError::SingularJacobian { iteration: it, ratio });
        }
        let p = j.lu().solve(&(-&r)).ok_or(FracError::SingularJacobian { iteration: it, ratio })?;
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-10 {
            let trial = &c + alpha * &p;
            if let Ok(gt) = e.gradient_vec(&trial) {
                if e.dual_norm(&gt) <= (1.0 - 1e-4 * alpha) * rn {
                    c = trial;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            return report(e, &c, rn, it, SolveStatus::MaxIter, None);
        }
    }
    report(e, &c, rn, max_newton, SolveStatus::MaxIter, None)
}
