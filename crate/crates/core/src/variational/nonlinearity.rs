//! Nonlinearities f(x,t) with primitives and growth data, and their
//! truncations.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, FracError, Result};
use crate::geometry::{critical_exponent, Point};
use crate::grid::{truncate, GridFunction};

type Func = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;

/// f(x,t), its primitive F(x,t) = ∫₀ᵗ f(x,τ)dτ, an optional t-derivative and
/// the growth data |f| ≤ a(1+|t|^{q−1}).
#[derive(Clone)]
pub struct Nonlinearity {
    pub name: String,
    f: Func,
    big_f: Func,
    df: Option<Func>,
    pub a: f64,
    pub q: f64,
    pub monotone: bool,
    pub sign: bool,
    pub autonomous: bool,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("q", &self.q)
            .field("monotone", &self.monotone)
            .field("sign", &self.sign)
            .field("autonomous", &self.autonomous)
            .finish()
    }
}

impl Nonlinearity {
    /// General constructor; `q` must lie in `[1, ∞)` and `a > 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        big_f: impl Fn(&Point, f64) -> f64 + Send + Sync + 'static,
        df: Option<Func>,
        a: f64,
        q: f64,
        monotone: bool,
        autonomous: bool,
    ) -> Result<Self> {
        if !(a > 0.0) {
            return Err(invalid("a", format!("growth constant must be positive, got {a}")));
        }
        if !(q >= 1.0) {
            return Err(invalid("q", format!("growth exponent must be >= 1, got {q}")));
        }
        let mut nl = Self {
            name: name.into(),
            f: Arc::new(f),
            big_f: Arc::new(big_f),
            df,
            a,
            q,
            monotone,
            sign: false,
            autonomous,
        };
        nl.sign = nl.sampled_sign();
        Ok(nl)
    }

    fn sampled_sign(&self) -> bool {
        let x = [0.0, 0.0];
        (-40..=40).all(|k| {
            let t = k as f64 * 0.25;
            self.f(&x, t) * t >= 0.0
        })
    }

    pub fn f(&self, x: &Point, t: f64) -> f64 {
        (self.f)(x, t)
    }

    pub fn primitive(&self, x: &Point, t: f64) -> f64 {
        (self.big_f)(x, t)
    }

    /// ∂f/∂t, by central differences when no derivative was supplied.
    pub fn df(&self, x: &Point, t: f64) -> f64 {
        match &self.df {
            Some(d) => d(x, t),
            None => {
                let h = 1e-6 * (1.0 + t.abs());
                (self.f(x, t + h) - self.f(x, t - h)) / (2.0 * h)
            }
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0, |_, _| 0.0, Some(Arc::new(|_, _| 0.0)), 1.0, 1.0, true, true)
            .expect("valid")
    }

    /// f ≡ c.
    pub fn constant(c: f64) -> Self {
        Self::new(
            format!("constant({c})"),
            move |_, _| c,
            move |_, t| c * t,
            Some(Arc::new(|_, _| 0.0)),
            c.abs().max(f64::MIN_POSITIVE),
            1.0,
            true,
            true,
        )
        .expect("valid")
    }

    /// f(x,t) = g(x), t-independent.
    pub fn load(g: GridFunction) -> Self {
        let bound = g.max_abs().max(f64::MIN_POSITIVE);
        let g1 = g.clone();
        Self::new(
            "load",
            move |x, _| g.eval(x),
            move |x, t| g1.eval(x) * t,
            Some(Arc::new(|_, _| 0.0)),
            bound,
            1.0,
            true,
            false,
        )
        .expect("valid")
    }

    /// f(t) = λt + c.
    pub fn affine(lambda: f64, c: f64) -> Self {
        Self::new(
            format!("affine({lambda},{c})"),
            move |_, t| lambda * t + c,
            move |_, t| 0.5 * lambda * t * t + c * t,
            Some(Arc::new(move |_, _| lambda)),
            lambda.abs().max(c.abs()).max(f64::MIN_POSITIVE),
            2.0,
            lambda >= 0.0,
            true,
        )
        .expect("valid")
    }

    pub fn linear(lambda: f64) -> Self {
        let mut nl = Self::affine(lambda, 0.0);
        nl.name = format!("linear({lambda})");
        nl
    }

    /// f(t) = t|t|^{p−2}, growth q = p.
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(invalid("p", format!("power must be >= 1, got {p}")));
        }
        Self::new(
            format!("power({p})"),
            move |_, t| t * t.abs().powf(p - 2.0),
            move |_, t| t.abs().powf(p) / p,
            Some(Arc::new(move |_, t| (p - 1.0) * t.abs().powf(p - 2.0))),
            1.0,
            p,
            true,
            true,
        )
    }

    /// f(t) = λ arctan(t) + c, bounded and monotone for λ >= 0.
    pub fn arctan(lambda: f64, c: f64) -> Self {
        Self::new(
            format!("arctan({lambda},{c})"),
            move |_, t| lambda * t.atan() + c,
            move |_, t| lambda * (t * t.atan() - 0.5 * t.mul_add(t, 1.0).ln()) + c * t,
            Some(Arc::new(move |_, t| lambda / (1.0 + t * t))),
            (lambda.abs() * std::f64::consts::FRAC_PI_2 + c.abs()).max(f64::MIN_POSITIVE),
            1.0,
            lambda >= 0.0,
            true,
        )
        .expect("valid")
    }

    /// f(t) = eᵗ with the declared (and false) growth data a = 1, q = 2.
    pub fn exponential() -> Self {
        Self::new(
            "exp",
            |_, t| t.exp(),
            |_, t| t.exp_m1(),
            Some(Arc::new(|_, t| t.exp())),
            1.0,
            2.0,
            true,
            true,
        )
        .expect("valid")
    }

    pub fn with_growth(mut self, a: f64, q: f64) -> Result<Self> {
        if !(a > 0.0) || !(q >= 1.0) {
            return Err(invalid("growth", format!("need a > 0 and q >= 1, got ({a}, {q})")));
        }
        self.a = a;
        self.q = q;
        Ok(self)
    }

    /// Largest deviation between F and a quadrature of f on sampled t.
    pub fn primitive_defect(&self, x: &Point, t_max: f64) -> f64 {
        self.primitive_defect_with_breaks(x, t_max, &[])
    }

    /// As [`Self::primitive_defect`], splitting the quadrature at the given
    /// kinks of f(x,·).
    pub fn primitive_defect_with_breaks(&self, x: &Point, t_max: f64, breaks: &[f64]) -> f64 {
        let gl = crate::quadrature::GaussLegendre::new(20);
        let mut worst: f64 = 0.0;
        for k in -8..=8 {
            let t = t_max * k as f64 / 8.0;
            let (lo, hi) = (t.min(0.0), t.max(0.0));
            let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
            cuts.push(lo);
            cuts.push(hi);
            cuts.sort_by(f64::total_cmp);
            let mut int = 0.0;
            for w in cuts.windows(2) {
                let pieces = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
                let step = (w[1] - w[0]) / pieces as f64;
                for j in 0..pieces {
                    let a = w[0] + step * j as f64;
                    int += gl.integrate(a, a + step, |tau| self.f(x, tau));
                }
            }
            if t < 0.0 {
                int = -int;
            }
            worst = worst.max((int - self.primitive(x, t)).abs() / (1.0 + int.abs()));
        }
        worst
    }
}

/// Level truncation f_k(x,t) = f(x, t_k) with the primitive continued
/// linearly outside [−k, k].
pub fn truncate_nonlinearity_level(nl: &Nonlinearity, k: f64) -> Result<Nonlinearity> {
    truncate(0.0, k)?;
    let (f, big_f, d) = (nl.clone(), nl.clone(), nl.clone());
    let a = nl.a * (1.0 + k.powf(nl.q - 1.0));
    let mut out = Nonlinearity::new(
        format!("{}|level {k}", nl.name),
        move |x, t| f.f(x, t.clamp(-k, k)),
        move |x, t| {
            if t > k {
                big_f.primitive(x, k) + big_f.f(x, k) * (t - k)
            } else if t < -k {
                big_f.primitive(x, -k) + big_f.f(x, -k) * (t + k)
            } else {
                big_f.primitive(x, t)
            }
        },
        Some(Arc::new(move |x, t| if t.abs() < k { d.df(x, t) } else { 0.0 })),
        a,
        1.0,
        nl.monotone,
        nl.autonomous,
    )?;
    out.sign = nl.sign;
    Ok(out)
}

/// Which half-line a sign truncation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPart {
    Positive,
    Negative,
}

/// f₊(x,t) = f(x, t₊) or f₋(x,t) = f(x, −t₋).
pub fn truncate_nonlinearity_sign(nl: &Nonlinearity, part: SignPart) -> Nonlinearity {
    let (f, big_f, d) = (nl.clone(), nl.clone(), nl.clone());
    let keep = move |t: f64| match part {
        SignPart::Positive => t >= 0.0,
        SignPart::Negative => t <= 0.0,
    };
    let mut out = Nonlinearity::new(
        format!("{}|{:?}", nl.name, part),
        move |x, t| {
            let tt = match part {
                SignPart::Positive => t.max(0.0),
                SignPart::Negative => t.min(0.0),
            };
            f.f(x, tt)
        },
        move |x, t| if keep(t) { big_f.primitive(x, t) } else { big_f.f(x, 0.0) * t },
        Some(Arc::new(move |x, t| if keep(t) { d.df(x, t) } else { 0.0 })),
        nl.a,
        nl.q,
        nl.monotone,
        nl.autonomous,
    )
    .expect("parameters already validated");
    out.sign = nl.sign;
    out
}

/// f̃(x,t) = f(x, clamp(t, lower(x), upper(x))), with primitive
/// G(x,t) − G(x,0) where G continues F linearly outside the order interval.
pub fn truncate_nonlinearity_order(
    nl: &Nonlinearity,
    lower: &GridFunction,
    upper: &GridFunction,
) -> Result<Nonlinearity> {
    lower.check_same_mesh(upper)?;
    for (i, (&l, &u)) in lower.values.iter().zip(&upper.values).enumerate() {
        if l > u {
            return Err(FracError::OrderViolation {
                node: i,
                lower: l,
                upper: u,
            });
        }
    }
    let bounds = Arc::new((lower.clone(), upper.clone()));
    let (b1, b2, b3) = (Arc::clone(&bounds), Arc::clone(&bounds), bounds);
    let (f, big_f, d) = (nl.clone(), nl.clone(), nl.clone());
    let g = move |x: &Point, t: f64, l: f64, u: f64| -> f64 {
        if t < l {
            big_f.primitive(x, l) + big_f.f(x, l) * (t - l)
        } else if t > u {
            big_f.primitive(x, u) + big_f.f(x, u) * (t - u)
        } else {
            big_f.primitive(x, t)
        }
    };
    let bound = lower.max_abs().max(upper.max_abs());
    let a = nl.a * (1.0 + bound.powf(nl.q - 1.0));
    Nonlinearity::new(
        format!("{}|order", nl.name),
        move |x, t| {
            let (l, u) = (b1.0.eval(x), b1.1.eval(x));
            f.f(x, t.clamp(l, u))
        },
        move |x, t| {
            let (l, u) = (b2.0.eval(x), b2.1.eval(x));
            g(x, t, l, u) - g(x, 0.0, l, u)
        },
        Some(Arc::new(move |x, t| {
            let (l, u) = (b3.0.eval(x), b3.1.eval(x));
            if t > l && t < u {
                d.df(x, t)
            } else {
                0.0
            }
        })),
        a,
        1.0,
        nl.monotone,
        false,
    )
}

/// Growth regime relative to the fractional critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRegime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub pass: bool,
    pub samples: usize,
    /// Largest value of |f| − a(1+|t|^{q−1}) seen.
    pub max_violation: f64,
    pub witness: Option<(Point, f64)>,
    pub regime: GrowthRegime,
    pub t_max: f64,
}

/// Samples (x, t) over `region × [−t_max, t_max]` (log-uniform in |t|) and
/// checks |f(x,t)| ≤ a(1+|t|^{q−1}).
pub fn growth_check(
    nl: &Nonlinearity,
    dim: usize,
    s: f64,
    region: ([f64; 2], [f64; 2]),
    t_max: f64,
    samples: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if samples == 0 || !(t_max > 1e-3) {
        return Err(invalid("samples", "need samples > 0 and t_max > 1e-3"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut fail_witness = None;
    let mut fail_worst = f64::NEG_INFINITY;
    for i in 0..samples {
        let mut x = [0.0, 0.0];
        for k in 0..dim.min(2) {
            x[k] = if hi[k] > lo[k] { rng.random_range(lo[k]..hi[k]) } else { lo[k] };
        }
        let mag = if i < 2 {
            t_max
        } else {
            (rng.random_range((1e-3f64).ln()..t_max.ln())).exp()
        };
        let t = if i % 2 == 0 { mag } else { -mag };
        let v = nl.f(&x, t);
        let bound = nl.a * (1.0 + t.abs().powf(nl.q - 1.0));
        let excess = if v.is_finite() { v.abs() - bound } else { f64::INFINITY };
        if excess > worst {
            worst = excess;
            witness = Some((x, t));
        }
        let tol = 1e-12 * bound;
        if excess > tol && excess >= fail_worst {
            fail_worst = excess;
            fail_witness = Some((x, t));
        }
    }
    let regime = match critical_exponent(dim, s) {
        None => GrowthRegime::Subcritical,
        Some(c) if (nl.q - c).abs() <= 1e-12 * c => GrowthRegime::Critical,
        Some(c) if nl.q < c => GrowthRegime::Subcritical,
        Some(_) => GrowthRegime::Supercritical,
    };
    let pass = fail_witness.is_none();
    Ok(GrowthReport {
        pass,
        samples,
        max_violation: worst,
        witness: if pass { witness } else { fail_witness },
        regime,
        t_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BOX: ([f64; 2], [f64; 2]) = ([-1.0, 0.0], [1.0, 0.0]);

    #[test]
    fn growth_examples() {
        let r = growth_check(&Nonlinearity::linear(1.0), 1, 0.5, BOX, 1e3, 2000, 1).unwrap();
        assert!(r.pass);
        let cube = Nonlinearity::power(4.0).unwrap();
        let r = growth_check(&cube, 3, 0.75, ([-1.0, -1.0], [1.0, 1.0]), 1e3, 2000, 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.regime, GrowthRegime::Critical);
        let r = growth_check(&Nonlinearity::exponential(), 1, 0.5, BOX, 1e3, 2000, 3).unwrap();
        assert!(!r.pass);
        assert!(r.witness.unwrap().1 > 100.0);
    }

    #[test]
    fn primitives_match_quadrature() {
        let x = [0.1, 0.0];
        for nl in [
            Nonlinearity::arctan(2.0, 1.0),
            Nonlinearity::affine(1.5, -0.5),
            Nonlinearity::power(3.0).unwrap(),
            Nonlinearity::exponential(),
        ] {
            assert!(nl.primitive_defect(&x, 3.0) < 1e-12, "{}", nl.name);
            assert_eq!(nl.primitive(&x, 0.0), 0.0);
        }
    }

    #[test]
    fn level_truncation_examples() {
        let cube = Nonlinearity::power(4.0).unwrap();
        let fk = truncate_nonlinearity_level(&cube, 2.0).unwrap();
        let x = [0.0, 0.0];
        assert_eq!(fk.f(&x, 5.0), 8.0);
        assert_eq!(fk.f(&x, -1.5), cube.f(&x, -1.5));
        assert!(fk.primitive_defect_with_breaks(&x, 6.0, &[-2.0, 2.0]) < 1e-12);
        assert_eq!(fk.q, 1.0);
        assert!(truncate_nonlinearity_level(&cube, 0.0).is_err());
    }

    #[test]
    fn sign_truncation_examples() {
        let x = [0.0, 0.0];
        let nl = Nonlinearity::arctan(1.0, 0.5);
        let p = truncate_nonlinearity_sign(&nl, SignPart::Positive);
        assert_eq!(p.f(&x, -2.0), nl.f(&x, 0.0));
        assert_eq!(p.f(&x, 2.0), nl.f(&x, 2.0));
        let m = truncate_nonlinearity_sign(&Nonlinearity::linear(1.0), SignPart::Negative);
        assert_eq!(m.f(&x, 3.0), 0.0);
        assert_eq!(m.f(&x, -3.0), -3.0);
        assert!(p.primitive_defect_with_breaks(&x, 4.0, &[0.0]) < 1e-12);
        assert!(m.primitive_defect_with_breaks(&x, 4.0, &[0.0]) < 1e-12);
    }

    proptest! {
        #[test]
        fn order_truncation_bounds(t in -20.0f64..20.0, lo in -3.0f64..0.0, width in 0.0f64..3.0) {
            use crate::geometry::Domain;
            use crate::mesh::build_mesh;
            let mesh = Arc::new(build_mesh(&Domain::interval(0.0, 1.0, 0.5).unwrap(), 4).unwrap());
            let l = GridFunction::from_fn(&mesh, |_| lo);
            let u = GridFunction::from_fn(&mesh, |_| lo + width);
            let nl = Nonlinearity::arctan(1.0, 1.0);
            let ft = truncate_nonlinearity_order(&nl, &l, &u).unwrap();
            let x = [0.3, 0.0];
            let cap = nl.f(&x, lo).abs().max(nl.f(&x, lo + width).abs());
            prop_assert!(ft.f(&x, t).abs() <= cap + 1e-15);
            prop_assert!(ft.f(&x, t) <= ft.f(&x, t + 0.1) + 1e-15);
            // the bounds are interpolated, so compare up to rounding
            if t > lo + 1e-12 && t < lo + width - 1e-12 {
                prop_assert!((ft.f(&x, t) - nl.f(&x, t)).abs() < 1e-14);
            }
            if t > lo + width {
                prop_assert!((ft.f(&x, t) - nl.f(&x, lo + width)).abs() < 1e-14);
            }
            prop_assert!(ft.primitive_defect_with_breaks(&x, 20.0, &[lo, lo + width]) < 1e-12);
        }
    }
}
