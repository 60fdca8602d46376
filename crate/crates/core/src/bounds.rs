//! Bookkeeping for the L^∞ bootstrap: the elementary inequality, the
//! exponent ladder, the smallness level, the norm cascade, and the Talenti
//! family of the critical case.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, FracError, Result};
use crate::geometry::{critical_exponent, dist, Domain, DomainKind, Point};
use crate::grid::GridFunction;
use crate::kernel::{sphere_measure, KernelSpec};
use crate::pointwise::{pointwise_flap, FlapOptions};
use crate::quadrature::{adaptive, semi_infinite, Estimate};

/// t|t|_k^{e} with |t|_k = min(|t|, k).
fn trunc_pow(t: f64, k: f64, e: f64) -> f64 {
    t * t.abs().min(k).powf(e)
}

fn check_rk(r: f64, k: f64) -> Result<()> {
    if !(r >= 2.0) {
        return Err(invalid("r", format!("need r >= 2, got {r}")));
    }
    if !(k > 0.0) {
        return Err(invalid("k", format!("need k > 0, got {k}")));
    }
    Ok(())
}

/// Both sides of (a−b)(a|a|_k^{r−2} − b|b|_k^{r−2}) ≥ 4(r−1)/r² (a|a|_k^{r/2−1} − b|b|_k^{r/2−1})².
pub fn elementary_inequality_sides(a: f64, b: f64, r: f64, k: f64) -> Result<(f64, f64)> {
    check_rk(r, k)?;
    let lhs = (a - b) * (trunc_pow(a, k, r - 2.0) - trunc_pow(b, k, r - 2.0));
    let d = trunc_pow(a, k, 0.5 * r - 1.0) - trunc_pow(b, k, 0.5 * r - 1.0);
    let rhs = 4.0 * (r - 1.0) / (r * r) * d * d;
    Ok((lhs, rhs))
}

/// LHS − RHS of the elementary inequality.
pub fn elementary_inequality_gap(a: f64, b: f64, r: f64, k: f64) -> Result<f64> {
    let (l, rr) = elementary_inequality_sides(a, b, r, k)?;
    Ok(l - rr)
}

/// The gap after rescaling (a, b, k) so that max(|a|, |b|) = 1. Both sides
/// are homogeneous of degree r, so the sign is unchanged while the values
/// stay O(1) and rounding stays at machine precision.
pub fn elementary_inequality_normalized_gap(a: f64, b: f64, r: f64, k: f64) -> Result<f64> {
    check_rk(r, k)?;
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        return Ok(0.0);
    }
    elementary_inequality_gap(a / m, b / m, r, k / m)
}

/// Exact ladder data, when the inputs are converted to rationals.
#[derive(Debug, Clone)]
pub struct ExactLadder {
    pub gamma_sq: BigRational,
    pub mu0: BigRational,
    pub exponents: Vec<BigRational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoserLadder {
    pub gamma: f64,
    pub gamma_sq: f64,
    pub mu0: f64,
    pub mu: f64,
    pub q: f64,
    pub exponents: Vec<f64>,
    pub diverges: bool,
    #[serde(skip)]
    pub exact: ExactLadder,
}

fn rational(x: f64, name: &'static str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| invalid(name, format!("{x} is not finite")))
}

/// γ² = 2*_s/2 = N/(N−2s) as an exact rational.
fn gamma_sq_exact(dim: usize, s: f64) -> Result<BigRational> {
    let n = BigRational::from_integer(BigInt::from(dim));
    let two_s = rational(2.0 * s, "s")?;
    if two_s >= n {
        return Err(invalid("s", format!("the ladder needs N > 2s (N = {dim}, s = {s})")));
    }
    Ok(&n / (&n - two_s))
}

/// r₀ = μ, r_{n+1} = γ²r_n + 2 − q, in exact rational arithmetic on the
/// binary values of the inputs.
pub fn moser_ladder(q: f64, dim: usize, s: f64, mu: f64, n_max: usize) -> Result<MoserLadder> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("s must lie in (0,1), got {s}")));
    }
    let g2 = gamma_sq_exact(dim, s)?;
    let qr = rational(q, "q")?;
    let mur = rational(mu, "mu")?;
    let two = BigRational::from_integer(BigInt::from(2));
    let mu0 = (&qr - &two) / (&g2 - BigRational::one());
    let mut exponents = Vec::with_capacity(n_max + 1);
    let mut r = mur.clone();
    exponents.push(r.clone());
    for _ in 0..n_max {
        r = &g2 * &r + &two - &qr;
        exponents.push(r.clone());
    }
    let to_f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
    let gamma_sq = to_f(&g2);
    Ok(MoserLadder {
        gamma: gamma_sq.sqrt(),
        gamma_sq,
        mu0: to_f(&mu0),
        mu,
        q,
        exponents: exponents.iter().map(to_f).collect(),
        diverges: mur > mu0,
        exact: ExactLadder {
            gamma_sq: g2,
            mu0,
            exponents,
        },
    })
}

/// μ₀ = (q−2)/(γ²−1) in floating point.
pub fn ladder_fixed_point(q: f64, dim: usize, s: f64) -> Result<f64> {
    let c = critical_exponent(dim, s).ok_or_else(|| invalid("s", "the ladder needs N > 2s"))?;
    Ok((q - 2.0) / (0.5 * c - 1.0))
}

/// Start μ = 2*_s + 2 − q of the subcritical bootstrap.
pub fn subcritical_start(q: f64, dim: usize, s: f64) -> Result<f64> {
    let c = critical_exponent(dim, s).ok_or_else(|| invalid("s", "the ladder needs N > 2s"))?;
    Ok(c + 2.0 - q)
}

/// Start μ = q(q+1)/2 + 2 − q of the critical bootstrap.
pub fn critical_start(q: f64) -> f64 {
    q * (q + 1.0) / 2.0 + 2.0 - q
}

/// Exact counterpart of [`critical_start`].
pub fn critical_start_exact(q: &BigRational) -> BigRational {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    q * (q + &one) / &two + &two - q
}

fn superlevel_integral(samples: &[(f64, f64)], q: f64, level: f64) -> f64 {
    samples
        .iter()
        .filter(|(v, _)| v.abs() > level)
        .map(|(v, w)| w * v.abs().powf(q))
        .sum()
}

/// Smallest level K₀ with (∫_{|u|>K₀} |u|^q)^{1−2/q} ≤ σ. The integral uses
/// the composite rule of the grid norms, so it only changes at the sampled
/// values of |u|; K₀ is found by bisection over those values and 0.
pub fn tail_smallness_level(u: &GridFunction, q: f64, sigma: f64) -> Result<f64> {
    if !(q > 2.0) {
        return Err(invalid("q", format!("need q > 2, got {q}")));
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma", format!("need sigma > 0, got {sigma}")));
    }
    let samples = u.quadrature_samples();
    let ok = |k: f64| superlevel_integral(&samples, q, k).powf(1.0 - 2.0 / q) <= sigma;
    let mut levels: Vec<f64> = samples.iter().map(|(v, _)| v.abs()).collect();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if ok(levels[0]) {
        return Ok(levels[0]);
    }
    // the top level always passes: nothing lies strictly above it
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(levels[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(levels[hi])
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeRung {
    pub exponent: f64,
    pub norm: f64,
    /// Constant H_r = ‖u‖_{γ²r}^r / ‖u‖_{γr}^{r−1} for r = γ^{n−1}.
    pub constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CascadeReport {
    pub gamma: f64,
    pub rungs: Vec<CascadeRung>,
    /// Smallest H making every evaluated rung of the recursion hold.
    pub bound: f64,
    pub sup: f64,
    pub dominates: bool,
}

/// Evaluates the L^{γⁿ} cascade on u until the exponent exceeds 10³. With
/// v = u/H the recursion ‖v‖_{γ^{n+1}} ≤ ‖v‖_{γⁿ}^{1−γ^{1−n}} bounds every
/// ‖v‖_{γⁿ} by 1, so the bound on ‖u‖∞ is the instance constant H itself.
pub fn sup_bound_cascade(u: &GridFunction, q: f64, dim: usize, s: f64) -> Result<CascadeReport> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("need q >= 1, got {q}")));
    }
    let c = critical_exponent(dim, s).ok_or_else(|| invalid("s", "the cascade needs N > 2s"))?;
    let gamma = (0.5 * c).sqrt();
    let sup = u.max_abs();
    if sup == 0.0 {
        return Ok(CascadeReport {
            gamma,
            rungs: Vec::new(),
            bound: 0.0,
            sup,
            dominates: true,
        });
    }
    // first n with r = γ^{n−1} ≥ 2
    let mut n = 1 + (2f64.ln() / gamma.ln()).ceil() as i32;
    let norm = |p: f64, rung: usize| -> Result<f64> {
        let v = u.lp_norm(p)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(FracError::NonFiniteNorm { rung, exponent: p })
        }
    };
    let mut rungs = Vec::new();
    let mut bound: f64 = 0.0;
    loop {
        let r = gamma.powi(n - 1);
        let (p1, p2) = (gamma * r, gamma * gamma * r);
        let rung = rungs.len();
        let (n1, n2) = (norm(p1, rung)?, norm(p2, rung)?);
        // H_r = n2 · (n2/n1)^{r−1}, in logs
        let h = (n2.ln() + (r - 1.0) * (n2.ln() - n1.ln())).exp();
        if !h.is_finite() {
            return Err(FracError::NonFiniteNorm { rung, exponent: p2 });
        }
        bound = bound.max(h);
        rungs.push(CascadeRung {
            exponent: p2,
            norm: n2,
            constant: h,
        });
        if p2 > 1e3 {
            break;
        }
        n += 1;
    }
    Ok(CascadeReport {
        gamma,
        rungs,
        bound,
        sup,
        dominates: bound >= sup * (1.0 - 1e-9),
    })
}

/// 𝒯_{ε,z}(x) = (ε/(ε²+|x−z|²))^{(N−2s)/2}.
pub fn talenti_eval(eps: f64, z: &Point, dim: usize, s: f64, x: &Point) -> f64 {
    let d = dist(x, z);
    (eps / (eps * eps + d * d)).powf(0.5 * (dim as f64 - 2.0 * s))
}

#[derive(Debug, Clone, Serialize)]
pub struct TalentiFit {
    pub gamma: f64,
    /// Probe point, (−Δ)^s𝒯 / 𝒯^{(N+2s)/(N−2s)} there, and its error bound.
    pub probes: Vec<(Point, f64, f64)>,
    /// (max − min)/mean of the probe ratios.
    pub spread: f64,
}

fn check_talenti(eps: f64, dim: usize, s: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("need eps > 0, got {eps}")));
    }
    if !(s > 0.0 && s < 1.0) || dim as f64 <= 2.0 * s || dim > 2 {
        return Err(invalid("s", format!("need N in {{1,2}}, N > 2s, s in (0,1); got N = {dim}, s = {s}")));
    }
    Ok(())
}

/// Fits Γ with (−Δ)^s(Γ𝒯) = (Γ𝒯)^{(N+2s)/(N−2s)} at each probe and checks
/// that the fitted constant agrees across probes to 1%.
pub fn talenti_fit_gamma(eps: f64, z: &Point, dim: usize, s: f64, probes: &[Point]) -> Result<TalentiFit> {
    check_talenti(eps, dim, s)?;
    if probes.len() < 2 {
        return Err(invalid("probes", "need at least two probe points"));
    }
    let kernel = KernelSpec::new(dim, s)?;
    let p = (dim as f64 + 2.0 * s) / (dim as f64 - 2.0 * s);
    let t = |x: &Point| talenti_eval(eps, z, dim, s, x);
    let opts = FlapOptions {
        tol: 1e-9,
        ..FlapOptions::default()
    };
    let mut out = Vec::with_capacity(probes.len());
    for x in probes {
        let lap = pointwise_flap(&t, x, &kernel, &opts)?;
        let denom = t(x).powf(p);
        out.push((*x, lap.value / denom, lap.error / denom));
    }
    let ratios: Vec<f64> = out.iter().map(|o| o.1).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = (hi - lo) / mean.abs();
    if !(mean > 0.0) || spread > 1e-2 {
        return Err(FracError::CheckFailed(format!("Talenti ratio not constant: spread {spread:e}, mean {mean}")));
    }
    Ok(TalentiFit {
        gamma: mean.powf(1.0 / (p - 1.0)),
        probes: out,
        spread,
    })
}

/// ‖𝒯_{ε,z}‖_{2*_s} over the ball B_R(z), or over ℝ^N when `radius` is
/// `None`, by radial quadrature.
pub fn talenti_critical_norm(eps: f64, dim: usize, s: f64, radius: Option<f64>) -> Result<Estimate> {
    check_talenti(eps, dim, s)?;
    let c = critical_exponent(dim, s).expect("checked N > 2s");
    let n = dim as f64;
    // 𝒯^{2*} = (ε/(ε²+ρ²))^N, independent of s
    let f = |rho: f64| sphere_measure(dim) * rho.powf(n - 1.0) * (eps / (eps * eps + rho * rho)).powf(n);
    let tol = 1e-13;
    let int = match radius {
        Some(r) if r > 0.0 => adaptive(f, 0.0, r, tol, tol, 2000)?,
        Some(r) => return Err(invalid("radius", format!("need a positive radius, got {r}"))),
        None => {
            let near = adaptive(f, 0.0, eps, tol, tol, 2000)?;
            let far = semi_infinite(f, eps, tol)?;
            Estimate {
                value: near.value + far.value,
                error: near.error + far.error,
            }
        }
    };
    let value = int.value.powf(1.0 / c);
    Ok(Estimate {
        value,
        error: value * int.error / (c * int.value),
    })
}

/// ∫_Ω 𝒯^{2*} for the truncation of 𝒯_{ε,z} to Ω.
fn talenti_mass_on_domain(eps: f64, z: &Point, domain: &Domain) -> Result<Estimate> {
    let dim = domain.dim();
    let f1 = |x: f64| eps / (eps * eps + (x - z[0]).powi(2));
    match domain.kind {
        DomainKind::Interval { a, b } => {
            let l = adaptive(f1, a, z[0], 1e-13, 1e-13, 2000)?;
            let r = adaptive(f1, z[0], b, 1e-13, 1e-13, 2000)?;
            Ok(Estimate {
                value: l.value + r.value,
                error: l.error + r.error,
            })
        }
        DomainKind::Disk { center, radius } => {
            if dist(&center, z) > 1e-12 * radius {
                return Err(invalid("z", "the disk table needs z at the centre"));
            }
            let n = talenti_critical_norm(eps, dim, domain.s, Some(radius))?;
            let c = critical_exponent(dim, domain.s).expect("2D has N > 2s");
            Ok(Estimate {
                value: n.value.powf(c),
                error: c * n.error * n.value.powf(c - 1.0),
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRow {
    pub eps: f64,
    pub sup: f64,
    pub critical_norm: f64,
    pub ratio: f64,
}

/// Sup norm and critical norm over Ω of truncated Talenti functions centred
/// at z, along a decreasing ε sequence.
pub fn critical_blowup_demo(domain: &Domain, z: &Point, eps: &[f64]) -> Result<Vec<BlowupRow>> {
    let (dim, s) = (domain.dim(), domain.s);
    if !domain.contains_open(z) {
        return Err(FracError::OutsideDomain { point: *z });
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("eps", "the sequence must decrease strictly"));
    }
    let c = critical_exponent(dim, s).ok_or_else(|| invalid("s", "need N > 2s"))?;
    eps.iter()
        .map(|&e| {
            check_talenti(e, dim, s)?;
            let sup = talenti_eval(e, z, dim, s, z);
            let critical_norm = talenti_mass_on_domain(e, z, domain)?.value.powf(1.0 / c);
            Ok(BlowupRow {
                eps: e,
                sup,
                critical_norm,
                ratio: sup / critical_norm,
            })
        })
        .collect()
}

/// Ratio test used by the ladder fuzz: runs the recursion in floating point
/// far enough to tell growth from decay without using μ₀.
pub fn ladder_escapes(q: f64, dim: usize, s: f64, mu: f64) -> Option<bool> {
    let c = critical_exponent(dim, s)?;
    let g2 = 0.5 * c;
    let mut r = mu;
    let mut prev = mu;
    for _ in 0..10_000 {
        r = g2 * r + 2.0 - q;
        if r > 1e12 {
            return Some(true);
        }
        if r < -1e12 {
            return Some(false);
        }
        if r == prev {
            return Some(false);
        }
        prev = r;
    }
    None
}

/// Whether every exponent of the exact ladder equals the start value.
pub fn ladder_is_constant(l: &MoserLadder) -> bool {
    l.exact.exponents.iter().all(|e| *e == l.exact.exponents[0])
}

/// Whether the exact ladder is strictly increasing.
pub fn ladder_is_increasing(l: &MoserLadder) -> bool {
    l.exact.exponents.windows(2).all(|w| w[1] > w[0])
}

/// Distance of the last exact exponent from μ₀, or zero for an empty ladder.
pub fn ladder_offset(l: &MoserLadder) -> BigRational {
    l.exact
        .exponents
        .last()
        .map(|e| e - &l.exact.mu0)
        .unwrap_or_else(BigRational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn elementary_inequality_examples() {
        assert_eq!(elementary_inequality_sides(1.0, 0.0, 2.0, 1.0).unwrap(), (1.0, 1.0));
        let (l, r) = elementary_inequality_sides(2.0, 1.0, 4.0, 10.0).unwrap();
        assert!((l - 7.0).abs() < 1e-14 && (r - 6.75).abs() < 1e-14);
        assert!((elementary_inequality_gap(2.0, 1.0, 4.0, 10.0).unwrap() - 0.25).abs() < 1e-14);
        let (l, r) = elementary_inequality_sides(2.0, 1.0, 4.0, 1.5).unwrap();
        assert!((l - 3.5).abs() < 1e-14 && (r - 3.0).abs() < 1e-14);
        assert!(elementary_inequality_gap(1.0, 0.0, 1.5, 1.0).is_err());
        assert!(elementary_inequality_gap(1.0, 0.0, 2.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn elementary_inequality_holds(a in -1e3f64..1e3, b in -1e3f64..1e3, r in 2.0f64..50.0, k in 1e-3f64..1e3) {
            prop_assert!(elementary_inequality_normalized_gap(a, b, r, k).unwrap() >= -1e-12);
        }

        #[test]
        fn elementary_inequality_is_equality_at_two(a in -1e3f64..1e3, b in -1e3f64..1e3, k in 1e-3f64..1e3) {
            prop_assert!(elementary_inequality_normalized_gap(a, b, 2.0, k).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn ladder_divergence_matches_recursion(q in 2.0f64..6.0, s in 0.05f64..0.95, mu in -10.0f64..20.0, dim in 1usize..4) {
            prop_assume!(dim as f64 > 2.0 * s);
            let l = moser_ladder(q, dim, s, mu, 12).unwrap();
            if let Some(esc) = ladder_escapes(q, dim, s, mu) {
                prop_assert_eq!(esc, l.diverges);
            }
            for w in l.exponents.windows(2) {
                let step = l.gamma_sq * w[0] + 2.0 - q;
                prop_assert!((w[1] - step).abs() <= 1e-9 * (1.0 + step.abs()));
            }
        }

        #[test]
        fn lp_norms_normalized_are_monotone(vals in proptest::collection::vec(-5.0f64..5.0, 7), p in 1.0f64..20.0) {
            let mesh = Arc::new(build_mesh(&Domain::interval(0.0, 3.0, 0.5).unwrap(), 8).unwrap());
            let mut v = vec![0.0; 9];
            v[1..8].copy_from_slice(&vals);
            let u = GridFunction::new(mesh, v).unwrap();
            let a = u.lp_norm(p).unwrap() / 3f64.powf(1.0 / p);
            let b = u.lp_norm(p + 1.0).unwrap() / 3f64.powf(1.0 / (p + 1.0));
            prop_assert!(b >= a * (1.0 - 1e-12));
        }
    }

    #[test]
    fn ladder_examples() {
        let fixed = moser_ladder(3.0, 3, 0.75, 1.0, 5).unwrap();
        assert_eq!(fixed.mu0, 1.0);
        assert!(!fixed.diverges && ladder_is_constant(&fixed));
        assert_eq!(fixed.exponents, vec![1.0; 6]);

        let sub = moser_ladder(3.0, 3, 0.75, subcritical_start(3.0, 3, 0.75).unwrap(), 3).unwrap();
        assert_eq!(sub.exponents, vec![3.0, 5.0, 9.0, 17.0]);
        assert!(sub.diverges && ladder_is_increasing(&sub));

        let crit = moser_ladder(4.0, 3, 0.75, critical_start(4.0), 2).unwrap();
        assert_eq!(crit.exponents, vec![8.0, 14.0, 26.0]);
        assert_eq!(crit.mu0, 2.0);
        let q = BigRational::from_integer(BigInt::from(4));
        assert_eq!(critical_start_exact(&q), BigRational::from_integer(BigInt::from(8)));

        let below = moser_ladder(3.0, 3, 0.75, 0.5, 6).unwrap();
        assert!(!below.diverges);
        assert!(below.exponents.windows(2).all(|w| w[1] < w[0] && w[1] < below.mu0));
        assert!(moser_ladder(3.0, 1, 0.75, 1.0, 3).is_err());
    }

    fn torsion_grid(n: usize) -> GridFunction {
        let mesh = Arc::new(build_mesh(&Domain::interval(-1.0, 1.0, 0.5).unwrap(), n).unwrap());
        GridFunction::from_fn(&mesh, |p| (1.0 - p[0] * p[0]).max(0.0).sqrt())
    }

    #[test]
    fn smallness_level_examples() {
        let u = torsion_grid(64);
        let zero = u.scale(0.0);
        assert_eq!(tail_smallness_level(&zero, 4.0, 1e-3).unwrap(), 0.0);
        assert_eq!(tail_smallness_level(&u, 4.0, 10.0).unwrap(), 0.0);
        let k = tail_smallness_level(&u, 4.0, 1e-3).unwrap();
        assert!(k > 0.0 && k < u.max_abs(), "{k}");
        // oracle: the defining inequality holds at K₀ and fails just below
        let samples = u.quadrature_samples();
        assert!(superlevel_integral(&samples, 4.0, k).powf(0.5) <= 1e-3);
        let below = samples.iter().map(|v| v.0.abs()).filter(|v| *v < k).fold(0.0, f64::max);
        assert!(superlevel_integral(&samples, 4.0, below).powf(0.5) > 1e-3);
        let mut last = f64::INFINITY;
        for sigma in [1e-4, 1e-3, 1e-2, 1e-1] {
            let k = tail_smallness_level(&u, 4.0, sigma).unwrap();
            assert!(k <= last);
            last = k;
        }
    }

    #[test]
    fn cascade_examples() {
        // disk torsion for s = 1/2, where the ladder has γ² = 2
        let disk = Domain::disk([0.0, 0.0], 1.0, 0.5).unwrap();
        let mesh = Arc::new(build_mesh(&disk, 16).unwrap());
        let u = GridFunction::interior_from_fn(&mesh, |p| {
            2.0 / std::f64::consts::PI * (1.0 - p[0] * p[0] - p[1] * p[1]).max(0.0).sqrt()
        });
        let c = sup_bound_cascade(&u, 2.0, 2, 0.5).unwrap();
        assert!(c.dominates && c.bound < 3.0 * c.sup, "{}", c.bound);
        assert!(c.rungs.last().unwrap().exponent > 1e3);

        let mesh = Arc::new(build_mesh(&Domain::interval(0.0, 1.0, 0.5).unwrap(), 16).unwrap());
        let one = GridFunction::from_fn(&mesh, |_| 1.0);
        let c = sup_bound_cascade(&one, 2.0, 1, 0.25).unwrap();
        assert!((c.bound - 1.0).abs() < 1e-9);
        let zero = GridFunction::zeros(&mesh);
        assert_eq!(sup_bound_cascade(&zero, 2.0, 1, 0.25).unwrap().bound, 0.0);
    }

    #[test]
    fn talenti_values() {
        let z = [0.0, 0.0];
        assert_eq!(talenti_eval(1.0, &z, 1, 0.25, &z), 1.0);
        for eps in [0.5, 1.0, 2.0, 0.25] {
            let v = talenti_eval(eps, &z, 1, 0.25, &z);
            assert_eq!(v, eps.powf(-0.25));
        }
    }

    #[test]
    fn talenti_critical_norm_is_scale_free() {
        for dim in [1, 2] {
            let want = std::f64::consts::PI.powf(1.0 / critical_exponent(dim, 0.25).unwrap());
            for eps in [0.5, 1.0, 2.0] {
                let n = talenti_critical_norm(eps, dim, 0.25, None).unwrap();
                assert!((n.value - want).abs() < 1e-10, "{dim} {eps} {}", n.value);
            }
        }
    }

    #[test]
    fn talenti_gamma_fit_is_constant() {
        let probes: Vec<Point> = [0.0, 0.3, 0.7, 1.5, 3.0].iter().map(|&x| [x, 0.0]).collect();
        let fit = talenti_fit_gamma(1.0, &[0.0, 0.0], 1, 0.25, &probes).unwrap();
        assert!(fit.spread < 1e-2, "{}", fit.spread);
        // 2^{2s}Γ((N+2s)/2)/Γ((N−2s)/2) in the standard normalization
        let want = (2f64.powf(0.5) * libm::tgamma(0.75) / libm::tgamma(0.25)).powf(0.5);
        assert!((fit.gamma - want).abs() < 1e-3 * want, "{} vs {want}", fit.gamma);
    }

    #[test]
    fn blowup_table() {
        let d = Domain::interval(-1.0, 1.0, 0.25).unwrap();
        let eps = [0.5, 0.25, 0.125, 0.0625];
        let rows = critical_blowup_demo(&d, &[0.0, 0.0], &eps).unwrap();
        for r in &rows {
            assert_eq!(r.sup, r.eps.powf(-0.25));
        }
        for w in rows.windows(2) {
            assert!(w[1].critical_norm > w[0].critical_norm);
            assert!(w[1].ratio > w[0].ratio);
        }
        let c = critical_exponent(1, 0.25).unwrap();
        for r in &rows {
            // closed form 2 arctan(1/ε)
            let want = (2.0 * (1.0 / r.eps).atan()).powf(1.0 / c);
            assert!((r.critical_norm - want).abs() < 1e-10);
            assert!(r.critical_norm < std::f64::consts::PI.powf(1.0 / c));
        }
        let disk = Domain::disk([0.0, 0.0], 1.0, 0.5).unwrap();
        let rows = critical_blowup_demo(&disk, &[0.0, 0.0], &[0.5, 0.25]).unwrap();
        let c2 = critical_exponent(2, 0.5).unwrap();
        for r in &rows {
            let want = (std::f64::consts::PI / (1.0 + r.eps * r.eps)).powf(1.0 / c2);
            assert!((r.critical_norm - want).abs() < 1e-10);
        }
        assert!(critical_blowup_demo(&d, &[0.0, 0.0], &[0.1, 0.2]).is_err());
    }
}
