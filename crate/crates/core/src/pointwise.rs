//! Pointwise evaluation of (−Δ)^s and of the nonlocal tail.

use crate::error::{invalid, FracError, Result};
use crate::geometry::Point;
use crate::grid::GridFunction;
use crate::kernel::KernelSpec;
use crate::quadrature::{adaptive, semi_infinite, tanh_sinh, Estimate, GaussLegendre};

/// Known nonsmooth loci of the integrand, used to split radial integrals.
#[derive(Debug, Clone)]
pub struct FlapOptions {
    pub tol: f64,
    /// 1D break points (kinks, support ends).
    pub breakpoints: Vec<f64>,
    /// 2D circles `(center, radius)` across which u is nonsmooth.
    pub circles: Vec<(Point, f64)>,
    /// Angular Gauss points in 2D.
    pub angular_points: usize,
}

impl Default for FlapOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            breakpoints: Vec::new(),
            circles: Vec::new(),
            angular_points: 48,
        }
    }
}

fn check_point(kernel: &KernelSpec, x: &Point) -> Result<()> {
    if kernel.dim > 2 {
        return Err(invalid("kernel", "pointwise evaluation supports N = 1, 2"));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(invalid("x", "point must be finite"));
    }
    Ok(())
}

/// Distances along the line `x + t e` (both directions) at which it meets
/// the break set.
fn line_breaks(x: &Point, e: &[f64; 2], opts: &FlapOptions, dim: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if dim == 1 {
        for &b in &opts.breakpoints {
            out.push((b - x[0]).abs());
        }
    } else {
        for (c, r) in &opts.circles {
            let d = [x[0] - c[0], x[1] - c[1]];
            let b = d[0] * e[0] + d[1] * e[1];
            let c0 = d[0] * d[0] + d[1] * d[1] - r * r;
            let disc = b * b - c0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                out.push((-b + sq).abs());
                out.push((-b - sq).abs());
            }
        }
    }
    out.retain(|t| *t > 0.0 && t.is_finite());
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `∫_0^∞ g(r) r^{−1−2s} dr` for the symmetric second difference
/// `g(r) = 2u(x) − u(x+re) − u(x−re)`, with a Taylor compensated inner ball.
fn radial_pv(
    u: &dyn Fn(&Point) -> f64,
    x: &Point,
    e: [f64; 2],
    s: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Estimate> {
    let ux = u(x);
    let at = |r: f64| -> Point { [x[0] + r * e[0], x[1] + r * e[1]] };
    let g = |r: f64| 2.0 * ux - u(&at(r)) - u(&at(-r));
    let nearest = breaks.first().copied().unwrap_or(f64::INFINITY);
    let eps = (1e-3f64).min(0.25 * nearest);
    // second directional derivative by Richardson-extrapolated differences
    let d2 = |h: f64| -g(h) / (h * h);
    let (c1, c2, c3) = (d2(eps), d2(0.5 * eps), d2(0.25 * eps));
    let coarse = (4.0 * c2 - c1) / 3.0;
    let upp = (4.0 * c3 - c2) / 3.0;
    let inner_factor = eps.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let inner = -upp * inner_factor;
    let mut error = (upp - coarse).abs() * inner_factor;
    if !inner.is_finite() {
        return Err(FracError::QuadratureFailure {
            value: inner,
            error: f64::INFINITY,
            tol,
        });
    }
    let sigma = 1.0 + 2.0 * s;
    let mut edges = vec![eps];
    edges.extend(breaks.iter().copied().filter(|&b| b > eps));
    let mut value = inner;
    for w in edges.windows(2) {
        let est = tanh_sinh(|r| g(r) * r.powf(-sigma), w[0], w[1], 0.1 * tol)?;
        value += est.value;
        error += est.error;
    }
    let last = *edges.last().expect("nonempty");
    let est = semi_infinite(|r| g(r) * r.powf(-sigma), last, 0.1 * tol)?;
    value += est.value;
    error += est.error;
    Ok(Estimate { value, error })
}

/// Principal-value evaluation of (−Δ)^s u(x), returned with an error
/// estimate. `u` must be defined on all of ℝ^N and smooth near `x`.
pub fn pointwise_flap(
    u: &dyn Fn(&Point) -> f64,
    x: &Point,
    kernel: &KernelSpec,
    opts: &FlapOptions,
) -> Result<Estimate> {
    check_point(kernel, x)?;
    let s = kernel.s;
    let c = kernel.normalization;
    let est = if kernel.dim == 1 {
        let e = [1.0, 0.0];
        radial_pv(u, x, e, s, &line_breaks(x, &e, opts, 1), opts.tol)?
    } else {
        let angular = |n: usize| -> Result<Estimate> {
            let gl = GaussLegendre::new(n);
            let mut value = 0.0;
            let mut error = 0.0;
            for (th, w) in gl.mapped(0.0, std::f64::consts::PI) {
                let e = [th.cos(), th.sin()];
                let r = radial_pv(u, x, e, s, &line_breaks(x, &e, opts, 2), opts.tol)?;
                value += w * r.value;
                error += w * r.error;
            }
            Ok(Estimate { value, error })
        };
        let fine = angular(opts.angular_points)?;
        let coarse = angular((2 * opts.angular_points) / 3)?;
        Estimate {
            value: fine.value,
            error: fine.error + (fine.value - coarse.value).abs(),
        }
    };
    let out = Estimate {
        value: c * est.value,
        error: c * est.error,
    };
    if !(out.error <= opts.tol.max(1e-9 * out.value.abs())) {
        return Err(FracError::QuadratureFailure {
            value: out.value,
            error: out.error,
            tol: opts.tol,
        });
    }
    Ok(out)
}

/// Options for the tail integral of a callable.
#[derive(Debug, Clone)]
pub struct TailOptions {
    pub tol: f64,
    /// u vanishes beyond this distance from x0, if known.
    pub support_radius: Option<f64>,
    /// Distances from x0 across which |u| is nonsmooth.
    pub radial_breaks: Vec<f64>,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            support_radius: None,
            radial_breaks: Vec::new(),
        }
    }
}

/// Tail(u; x0, r) = r^{2s} ∫_{ℝ^N∖B_r(x0)} |u(x)| |x−x0|^{−N−2s} dx.
pub fn tail(
    u: &dyn Fn(&Point) -> f64,
    x0: &Point,
    r: f64,
    kernel: &KernelSpec,
    opts: &TailOptions,
) -> Result<Estimate> {
    check_point(kernel, x0)?;
    if !(r > 0.0) {
        return Err(invalid("r", format!("radius must be positive, got {r}")));
    }
    let s = kernel.s;
    let sigma = 1.0 + 2.0 * s;
    let radial = |e: [f64; 2]| -> Result<Estimate> {
        let h = |rho: f64| {
            let p = [x0[0] + rho * e[0], x0[1] + rho * e[1]];
            u(&p).abs() * rho.powf(-sigma)
        };
        let mut edges = vec![r];
        edges.extend(opts.radial_breaks.iter().copied().filter(|&b| b > r));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        if let Some(sr) = opts.support_radius {
            edges.retain(|&b| b < sr);
            if sr > r {
                edges.push(sr);
            }
        }
        let mut value = 0.0;
        let mut error = 0.0;
        for w in edges.windows(2) {
            let est = adaptive(h, w[0], w[1], 0.1 * opts.tol, 1e-12, 4000)?;
            value += est.value;
            error += est.error;
        }
        if opts.support_radius.is_none() {
            let est = semi_infinite(h, *edges.last().expect("nonempty"), 0.1 * opts.tol)?;
            value += est.value;
            error += est.error;
        }
        Ok(Estimate { value, error })
    };
    let est = if kernel.dim == 1 {
        let a = radial([1.0, 0.0])?;
        let b = radial([-1.0, 0.0])?;
        Estimate {
            value: a.value + b.value,
            error: a.error + b.error,
        }
    } else {
        let gl = GaussLegendre::new(64);
        let mut value = 0.0;
        let mut error = 0.0;
        for (th, w) in gl.mapped(0.0, 2.0 * std::f64::consts::PI) {
            let e = radial([th.cos(), th.sin()])?;
            value += w * e.value;
            error += w * e.error;
        }
        Estimate { value, error }
    };
    let scale = r.powf(2.0 * s);
    Ok(Estimate {
        value: scale * est.value,
        error: scale * est.error,
    })
}

/// Tail of a grid function, which vanishes outside the meshed domain.
pub fn tail_grid(u: &GridFunction, x0: &Point, r: f64, kernel: &KernelSpec) -> Result<Estimate> {
    let mesh = &u.mesh;
    let support = mesh
        .nodes
        .iter()
        .map(|p| crate::geometry::dist(p, x0))
        .fold(0.0, f64::max);
    let mut breaks = Vec::new();
    if mesh.dim() == 1 {
        breaks.extend(mesh.nodes.iter().map(|p| (p[0] - x0[0]).abs()));
        // zero crossings of u inside elements
        for el in &mesh.elements {
            let (a, b) = (u.values[el[0]], u.values[el[1]]);
            if a * b < 0.0 {
                let t = a / (a - b);
                let (xa, xb) = (mesh.nodes[el[0]][0], mesh.nodes[el[1]][0]);
                breaks.push((xa + t * (xb - xa) - x0[0]).abs());
            }
        }
    }
    let opts = TailOptions {
        tol: 1e-9,
        support_radius: Some(support * (1.0 + 1e-12)),
        radial_breaks: breaks,
    };
    tail(&|p| u.eval(p), x0, r, kernel, &opts)
}
