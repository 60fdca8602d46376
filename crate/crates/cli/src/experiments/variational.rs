//! Nonlinear studies: ordered pairs, ball minimizers and sign truncations.

use fraclab_core::principles::{hopf_quotient, smp_check};
use fraclab_core::variational::{
    minimize_delta_ball, minimize_free, subsupersolution_solve, truncate_nonlinearity_sign, EnergyFunctional,
    Nonlinearity, OrderedPair, SignPart, SolveOptions,
};
use fraclab_core::{GridFunction, StiffnessForm};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{discrete_torsion, fmt, form_for, profile, Output, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, StageExt};
use crate::plot::{PlotStyle, Series};
use crate::runner::timed;

fn nonlinearity(cfg: &ExperimentConfig) -> CliResult<Nonlinearity> {
    Ok(cfg
        .nonlinearity()?
        .or_else(|| cfg.experiment.default_nonlinearity().and_then(|s| s.build().ok()))
        .expect("experiment has a default nonlinearity"))
}

fn profile_plot(out: &mut Output, name: &str, title: &str, funcs: &[(&str, &GridFunction)]) -> CliResult<()> {
    let series: Vec<Series> = funcs
        .iter()
        .filter_map(|(label, u)| profile(u).map(|(x, v)| Series::new(*label, x, v)))
        .collect();
    if series.is_empty() {
        return Ok(());
    }
    out.plot(
        name,
        &series,
        PlotStyle {
            title: title.into(),
            x_label: "x".into(),
            y_label: "u".into(),
            log_x: false,
            log_y: false,
        },
    )
}

pub fn subsuper_demo(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let nl = nonlinearity(cfg)?;
    let opts = SolveOptions::default();
    let mut table = Table::new(
        "subsuper",
        &["resolution", "sub_certified", "super_certified", "margin_lower", "margin_upper", "residual", "iterations", "u_max"],
    );
    let mut last = None;
    for &res in &cfg.resolutions {
        let (form, pair) = timed(out, format!("pair resolution {res}"), || -> CliResult<_> {
            let form = form_for(cfg, res)?;
            let upper = discrete_torsion(&form)?.scale(3.0);
            let pair = OrderedPair::new(&form, &nl, GridFunction::zeros(&form.mesh), upper)
                .stage(|| format!("ordered pair at resolution {res}"))?;
            Ok((form, pair))
        })?;
        out.check(
            format!("0 and 3·torsion certified as sub/supersolution at resolution {res}"),
            pair.certified(),
            format!(
                "sub worst {}, super worst {}",
                fmt(pair.lower_cert.worst_value),
                fmt(pair.upper_cert.worst_value)
            ),
        );
        if !pair.certified() {
            continue;
        }
        let o = timed(out, format!("solve resolution {res}"), || {
            subsupersolution_solve(&form, &nl, &pair, &opts).stage(|| format!("ordered-pair solve at resolution {res}"))
        })?;
        table.push(vec![
            res.to_string(),
            pair.lower_cert.pass.to_string(),
            pair.upper_cert.pass.to_string(),
            fmt(o.margin.lower),
            fmt(o.margin.upper),
            fmt(o.original_residual),
            o.report.iterations.to_string(),
            fmt(o.report.solution.max_abs()),
        ]);
        out.check(
            format!("strict sandwich at resolution {res}"),
            o.margin.strict(),
            format!("margins {} / {}", fmt(o.margin.lower), fmt(o.margin.upper)),
        );
        out.check(
            format!("original residual ≤ 1e-8 at resolution {res}"),
            o.original_residual <= 1e-8,
            fmt(o.original_residual),
        );
        last = Some((pair, o.report.solution));
    }
    out.tables.push(table);
    if let Some((pair, u)) = last {
        profile_plot(out, "subsuper_profile", "ordered pair and solution", &[
            ("lower", &pair.lower),
            ("solution", &u),
            ("upper", &pair.upper),
        ])?;
    }
    Ok(())
}

/// Random interior coefficient vector with unit energy norm. Every second
/// and third sample is smoothed by one or two Riesz maps, which weights the
/// low modes that carry descent directions at saddles.
fn unit_direction(e: &EnergyFunctional<'_>, n: usize, k: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        for _ in 0..k % 3 {
            v = e.riesz(&v);
        }
        let norm = e.x_norm(&v);
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Weighted box half-widths ρδ^s at the interior nodes.
fn box_width(form: &StiffnessForm, rho: f64) -> Vec<f64> {
    let s = form.mesh.domain.s;
    form.mesh.interior_nodes().iter().map(|&n| rho * form.mesh.delta()[n].powf(s)).collect()
}

pub fn ball_minimizer_probe(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let nl = nonlinearity(cfg)?;
    let opts = SolveOptions::default();
    let samples = cfg.instances();
    let mut cand_t = Table::new(
        "delta_ball_candidates",
        &["resolution", "candidate", "rho", "energy", "box_margin", "interior", "residual", "status"],
    );
    let mut probe_t = Table::new("x_ball_probes", &["resolution", "candidate", "radius", "min_energy_change"]);
    let mut plot_series = Vec::new();
    for &res in &cfg.resolutions {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(res as u64));
        let form = timed(out, format!("assembly resolution {res}"), || form_for(cfg, res))?;
        let e = EnergyFunctional::new(&form, nl.clone()).stage(|| format!("energy at resolution {res}"))?;
        let t = discrete_torsion(&form)?;
        let free = timed(out, format!("free minimization resolution {res}"), || {
            minimize_free(&e, &t, &opts).stage(|| format!("free minimization at resolution {res}"))
        })?;
        let u_free = free.solution;
        let wsup = u_free.weighted_sup_norm().stage(|| "weighted sup norm".into())?;
        let rho = cfg.params.delta_radius.unwrap_or(0.1 * wsup.max(1e-3));
        let width = box_width(&form, rho);
        let interior = form.mesh.interior_nodes().to_vec();

        // a shifted box that still contains the free minimizer, and a box
        // around the trivial function
        let mut shifted = u_free.clone();
        for (k, &n) in interior.iter().enumerate() {
            shifted.values[n] += 0.5 * width[k] * rng.random_range(-1.0..1.0);
        }
        let zero = GridFunction::zeros(&form.mesh);
        let mut kick = zero.clone();
        for (k, &n) in interior.iter().enumerate() {
            kick.values[n] = 0.5 * width[k] * rng.random_range(-1.0..1.0);
        }
        // the trivial function is critical, so its box search starts off it
        let centres = [("shifted", shifted.clone(), shifted), ("trivial", zero, kick)];
        for (label, centre, init) in centres {
            let r = timed(out, format!("{label} ball resolution {res}"), || {
                minimize_delta_ball(&e, &centre, rho, &init, &opts).stage(|| format!("{label} ball minimization at resolution {res}"))
            })?;
            let margin = interior
                .iter()
                .enumerate()
                .map(|(k, &n)| (width[k] - (r.solution.values[n] - centre.values[n]).abs()) / width[k])
                .fold(f64::INFINITY, f64::min);
            let inside = r.converged() && margin > 1e-6;
            cand_t.push(vec![
                res.to_string(),
                label.into(),
                fmt(rho),
                fmt(r.energy),
                fmt(margin),
                inside.to_string(),
                fmt(r.residual),
                format!("{:?}", r.status),
            ]);
            if label == "shifted" {
                out.check(
                    format!("shifted ball minimizer is interior at resolution {res}"),
                    inside,
                    format!("relative box margin {}", fmt(margin)),
                );
                out.check(
                    format!("interior ball minimizer solves the equation at resolution {res}"),
                    r.residual <= 1e-8,
                    fmt(r.residual),
                );
            }
            let c = form.coefficients(&r.solution).stage(|| "coefficients".into())?;
            let phi = r.energy;
            let base = e.x_norm(&c).max(1e-3);
            let r0 = cfg.params.probe_radius.unwrap_or(0.1 * base);
            let mut changes = Vec::new();
            let mut radii = Vec::new();
            for j in 0..5 {
                let radius = r0 * 0.5f64.powi(j);
                let mut min_change = f64::INFINITY;
                for k in 0..samples {
                    let v = unit_direction(&e, c.len(), k, &mut rng);
                    let val = e.energy_vec(&(&c + radius * v)).stage(|| "perturbed energy".into())?;
                    min_change = min_change.min(val - phi);
                }
                probe_t.push(vec![res.to_string(), label.into(), fmt(radius), fmt(min_change)]);
                changes.push(min_change);
                radii.push(radius);
            }
            if inside {
                let tol = 1e-9 * (1.0 + phi.abs());
                let worst = changes.iter().copied().fold(f64::INFINITY, f64::min);
                out.check(
                    format!("no energy decrease on energy-norm balls around the {label} minimizer at resolution {res}"),
                    worst >= -tol,
                    format!("min change {} over 5 radii × {samples} samples, tolerance {}", fmt(worst), fmt(tol)),
                );
            }
            if label == "shifted" && changes.iter().all(|c| *c > 0.0) {
                plot_series.push(Series::new(format!("resolution {res}"), radii, changes));
            }
        }
    }
    out.tables.push(cand_t);
    out.tables.push(probe_t);
    if !plot_series.is_empty() {
        out.plot(
            "x_ball_probe",
            &plot_series,
            PlotStyle {
                title: "smallest energy change on energy-norm spheres".into(),
                x_label: "radius".into(),
                y_label: "min Φ(u+v) - Φ(u)".into(),
                log_x: true,
                log_y: true,
            },
        )?;
    }
    Ok(())
}

pub fn sign_truncation(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let nl = nonlinearity(cfg)?;
    let opts = SolveOptions::default();
    let mut table = Table::new(
        "sign_truncation",
        &["resolution", "part", "energy", "min", "max", "min_hopf_quotient", "residual", "status"],
    );
    let mut last = None;
    for &res in &cfg.resolutions {
        let form = timed(out, format!("assembly resolution {res}"), || form_for(cfg, res))?;
        let t = discrete_torsion(&form)?;
        let original = EnergyFunctional::new(&form, nl.clone()).stage(|| "energy".into())?;
        let mut parts = Vec::new();
        for (part, sign, label) in [(SignPart::Positive, 1.0, "positive"), (SignPart::Negative, -1.0, "negative")] {
            let e = EnergyFunctional::new(&form, truncate_nonlinearity_sign(&nl, part)).stage(|| "truncated energy".into())?;
            let r = timed(out, format!("{label} minimization resolution {res}"), || {
                minimize_free(&e, &t.scale(sign), &opts).stage(|| format!("{label} truncated minimization at resolution {res}"))
            })?;
            let u = &r.solution;
            // orient so the expected sign is positive
            let v = u.scale(sign);
            let (min, max) = v.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let residual = original.residual_norm(u).stage(|| "original residual".into())?;
            out.check(format!("{label} minimizer converged at resolution {res}"), r.converged(), format!("{:?}", r.status));
            let nontrivial = max > 1e-8;
            out.check(format!("{label} minimizer is nontrivial at resolution {res}"), nontrivial, format!("sup {}", fmt(max)));
            let tol = 1e-9 * max.max(1.0);
            out.check(
                format!("{label} minimizer has the expected sign at resolution {res}"),
                min >= -tol,
                format!("worst oriented value {}", fmt(min)),
            );
            let mut quotient = f64::NAN;
            if nontrivial && min >= -tol {
                let clean = v.map(|x| x.max(0.0));
                let strict = smp_check(&clean).stage(|| format!("{label} strict sign"))?;
                out.check(
                    format!("{label} minimizer has strict interior sign at resolution {res}"),
                    strict.pass,
                    format!("{} {}", strict.context, fmt(strict.margin)),
                );
                quotient = hopf_quotient(&clean).stage(|| format!("{label} Hopf quotient"))?.0;
                out.check(
                    format!("{label} minimizer has positive boundary quotient at resolution {res}"),
                    quotient > 0.0,
                    fmt(quotient),
                );
            }
            out.check(
                format!("{label} minimizer solves the original equation at resolution {res}"),
                residual <= 1e-8,
                fmt(residual),
            );
            table.push(vec![
                res.to_string(),
                label.into(),
                fmt(r.energy),
                fmt(sign * if sign > 0.0 { min } else { max }),
                fmt(sign * if sign > 0.0 { max } else { min }),
                fmt(quotient),
                fmt(residual),
                format!("{:?}", r.status),
            ]);
            parts.push(r.solution);
        }
        last = Some(parts);
    }
    out.tables.push(table);
    if let Some(parts) = last {
        profile_plot(out, "sign_truncation_profile", "sign-truncated minimizers", &[
            ("u+", &parts[0]),
            ("u-", &parts[1]),
        ])?;
    }
    Ok(())
}
