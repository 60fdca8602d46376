use std::sync::Arc;

use fraclab_core::eigen::eigenpairs;
use fraclab_core::principles::{hopf_quotient, smp_check};
use fraclab_core::variational::{
    minimize_ball, minimize_delta_ball, minimize_free, solve_semilinear, truncate_nonlinearity_level,
    truncate_nonlinearity_sign, EnergyFunctional, Nonlinearity, SignPart, SolveOptions,
};
use fraclab_core::{assemble_form, build_mesh, Domain, GridFunction, KernelSpec, StiffnessForm};
use proptest::prelude::*;

fn form(n: usize, s: f64) -> StiffnessForm {
    let mesh = Arc::new(build_mesh(&Domain::interval(-1.0, 1.0, s).unwrap(), n).unwrap());
    assemble_form(&mesh, &KernelSpec::new(1, s).unwrap()).unwrap()
}

fn bump(f: &StiffnessForm) -> GridFunction {
    GridFunction::interior_from_fn(&f.mesh, |p| (1.0 - p[0] * p[0]) * (1.0 + 0.3 * p[0]))
}

#[test]
fn level_truncated_energy_tends_to_the_full_energy() {
    let f = form(32, 0.5);
    let nl = Nonlinearity::power(3.0).unwrap();
    let full = EnergyFunctional::new(&f, nl.clone()).unwrap();
    let u = bump(&f).scale(2.0);
    let target = full.energy(&u).unwrap();
    let mut gaps = Vec::new();
    for k in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let e = EnergyFunctional::new(&f, truncate_nonlinearity_level(&nl, k).unwrap()).unwrap();
        gaps.push((e.energy(&u).unwrap() - target).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    // the truncation is inactive once k exceeds sup |u|
    assert!(*gaps.last().unwrap() < 1e-12, "{gaps:?}");
}

#[test]
fn ball_multiplier_is_never_positive() {
    let f = form(32, 0.5);
    let lam = eigenpairs(&f, 1).unwrap()[0].value;
    let opts = SolveOptions::default();
    for factor in [0.5, 1.5, 3.0] {
        let e = EnergyFunctional::new(&f, Nonlinearity::affine(factor * lam, 0.3)).unwrap();
        for eps in [0.1, 1.0, 10.0] {
            let r = minimize_ball(&e, eps, &bump(&f), &opts).unwrap();
            let mu = r.mu.unwrap();
            assert!(r.converged() && mu <= 0.0, "factor {factor}, eps {eps}: {mu} {:?} {} {}", r.status, r.grad_norm, r.iterations);
            assert!((r.c_multiplier.unwrap() - 1.0 / (1.0 - mu)).abs() < 1e-12);
        }
    }
}

#[test]
fn solvers_agree_on_a_convex_problem() {
    let f = form(48, 0.4);
    let nl = Nonlinearity::arctan(0.5, 1.0);
    let e = EnergyFunctional::new(&f, nl).unwrap();
    let opts = SolveOptions::default();
    let zero = GridFunction::zeros(&f.mesh);
    let a = minimize_free(&e, &zero, &opts).unwrap();
    let b = solve_semilinear(&e, &zero, &opts).unwrap();
    let c = minimize_delta_ball(&e, &a.solution, 0.2, &zero, &opts).unwrap();
    for other in [&b.solution, &c.solution] {
        let d = a.solution.values.iter().zip(&other.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-7, "{d}");
    }
}

#[test]
fn sign_truncated_minimizers_have_strict_signs() {
    let f = form(64, 0.5);
    let nl = Nonlinearity::arctan(4.0, 0.0);
    let opts = SolveOptions::default();
    let t = f.solve_load(&GridFunction::from_fn(&f.mesh, |_| 1.0)).unwrap();
    let ep = EnergyFunctional::new(&f, truncate_nonlinearity_sign(&nl, SignPart::Positive)).unwrap();
    let en = EnergyFunctional::new(&f, truncate_nonlinearity_sign(&nl, SignPart::Negative)).unwrap();
    let up = minimize_free(&ep, &t, &opts).unwrap().solution;
    let un = minimize_free(&en, &t.scale(-1.0), &opts).unwrap().solution;
    assert!(smp_check(&up).unwrap().pass);
    assert!(smp_check(&un.scale(-1.0)).unwrap().pass);
    assert!(hopf_quotient(&up).unwrap().0 > 0.0);
    // f is odd, so the two minimizers mirror each other
    let d = up.values.iter().zip(&un.values).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-8, "{d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta_ball_minimizer_stays_in_the_box(rho in 0.01f64..1.0, c in -2.0f64..2.0) {
        let f = form(24, 0.5);
        let e = EnergyFunctional::new(&f, Nonlinearity::constant(c)).unwrap();
        let zero = GridFunction::zeros(&f.mesh);
        let r = minimize_delta_ball(&e, &zero, rho, &zero, &SolveOptions::default()).unwrap();
        for &n in f.mesh.interior_nodes() {
            prop_assert!(r.solution.values[n].abs() <= rho * f.mesh.delta()[n].sqrt() * (1.0 + 1e-12));
        }
        prop_assert!(r.energy <= 1e-15);
    }
}
