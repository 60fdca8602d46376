//! Quadrature rules: Gauss–Legendre on intervals, collapsed Gauss rules on the
//! reference triangle, adaptive Gauss–Kronrod and tanh–sinh integration.

use std::f64::consts::PI;

use crate::error::{FracError, Result};

/// A value together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Newton iteration on P_n starting from the Chebyshev-like guess
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + hw * x, hw * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature point on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle with `n*n`
/// points; weights sum to 1/2.
pub fn triangle_rule(n: usize) -> Vec<TrianglePoint> {
    let g = GaussLegendre::new(n);
    let mut pts = Vec::with_capacity(n * n);
    for (u, wu) in g.mapped(0.0, 1.0) {
        for (v, wv) in g.mapped(0.0, 1.0) {
            pts.push(TrianglePoint {
                xi: u,
                eta: v * (1.0 - u),
                weight: wu * wv * (1.0 - u),
            });
        }
    }
    pts
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let value = resk * hw;
    let err = ((resk - resg) * hw).abs();
    (value, err)
}

/// Globally adaptive Gauss–Kronrod integration on a finite interval.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if !total.is_finite() {
            return Err(FracError::QuadratureFailure {
                value: total,
                error: f64::INFINITY,
                tol,
            });
        }
        if err <= tol {
            return Ok(Estimate {
                value: total,
                error: err,
            });
        }
        if intervals.len() >= max_intervals {
            return Err(FracError::QuadratureFailure {
                value: total,
                error: err,
                tol,
            });
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty interval list");
        let (l, r, _, _) = intervals.swap_remove(idx);
        let m = 0.5 * (l + r);
        let (v1, e1) = gk15(&mut f, l, m);
        let (v2, e2) = gk15(&mut f, m, r);
        intervals.push((l, m, v1, e1));
        intervals.push((m, r, v2, e2));
    }
}

/// Tanh–sinh (double exponential) integration on a finite interval. Robust
/// for integrable endpoint singularities; the integrand is never evaluated at
/// the endpoints themselves.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let hw = 0.5 * (b - a);
    let t_max = 4.5;
    let mut eval = |t: f64| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cu * cu);
        // distance to the nearer endpoint, computed without cancellation
        let d = hw * (-u.abs()).exp() / cu;
        if d <= 0.0 || !w.is_finite() {
            return 0.0;
        }
        let x = if u < 0.0 { a + d } else { b - d };
        if x <= a.min(b) || x >= a.max(b) {
            return 0.0;
        }
        let fx = f(x);
        hw * w * fx
    };
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        if err <= tol.max(1e-15 * estimate.abs()) && h < 0.5 {
            return Ok(Estimate {
                value: estimate,
                error: err,
            });
        }
    }
    Err(FracError::QuadratureFailure {
        value: estimate,
        error: f64::INFINITY,
        tol,
    })
}

/// `∫_a^∞ f(x) dx`. For `a > 0` the map `x = a/t` sends algebraic decay to an
/// endpoint singularity at `t = 0`, which tanh–sinh resolves; otherwise
/// `x = a + t/(1−t)` is used.
pub fn semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> Result<Estimate> {
    if a > 0.0 {
        return tanh_sinh(|t| a * f(a / t) / (t * t), 0.0, 1.0, tol);
    }
    tanh_sinh(
        |t| {
            let om = 1.0 - t;
            f(a + t / om) / (om * om)
        },
        0.0,
        1.0,
        tol,
    )
}
