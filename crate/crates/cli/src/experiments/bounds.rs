//! Exponent ladder and Talenti bubble studies.

use fraclab_core::bounds::{
    critical_blowup_demo, critical_start, ladder_escapes, ladder_fixed_point, ladder_is_constant, ladder_is_increasing,
    ladder_offset, moser_ladder as ladder, subcritical_start, talenti_critical_norm, talenti_fit_gamma, MoserLadder,
};
use fraclab_core::{critical_exponent, FracError, Point};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{centre_radius, fmt, Output, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, StageExt};
use crate::plot::{PlotStyle, Series};
use crate::runner::timed;

/// Exact consistency of one ladder: divergence iff μ > μ₀, growth iff
/// divergence, constancy iff μ = μ₀.
fn ladder_consistent(l: &MoserLadder) -> bool {
    let offset = ladder_offset(l);
    let constant = ladder_is_constant(l);
    let increasing = ladder_is_increasing(l);
    if offset.is_zero() {
        constant && !l.diverges
    } else {
        !constant && increasing == l.diverges
    }
}

pub fn moser_ladder(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let dim = cfg.ladder_dim();
    let s = cfg.s;
    let q = cfg.params.ladder_q.unwrap_or(3.0);
    let steps = cfg.params.ladder_steps.unwrap_or(8);
    let mu0 = ladder_fixed_point(q, dim, s).stage(|| "ladder fixed point".into())?;
    let mut starts = vec![("fixed point", mu0)];
    if let Some(mu) = cfg.params.ladder_mu {
        starts.insert(0, ("configured", mu));
    }
    starts.push(("subcritical start", subcritical_start(q, dim, s).stage(|| "subcritical start".into())?));
    if critical_exponent(dim, s).is_some_and(|c| c == q) {
        starts.push(("critical start", critical_start(q)));
    }
    let mut table = Table::new("moser_ladder", &["label", "start", "n", "exponent", "diverges"]);
    let mut series = Vec::new();
    for (label, mu) in &starts {
        let l = ladder(q, dim, s, *mu, steps).stage(|| format!("{label} ladder"))?;
        for (n, r) in l.exponents.iter().enumerate() {
            table.push(vec![label.to_string(), fmt(*mu), n.to_string(), fmt(*r), l.diverges.to_string()]);
        }
        out.check(
            format!("{label} ladder: exact divergence iff μ > μ₀"),
            ladder_consistent(&l),
            format!("μ = {}, μ₀ = {}, γ² = {}", fmt(*mu), fmt(l.mu0), fmt(l.gamma_sq)),
        );
        if *label == "fixed point" && ladder_offset(&l).is_zero() {
            out.check("ladder from μ₀ is constant", ladder_is_constant(&l), fmt(l.mu0));
        }
        let xs: Vec<f64> = (0..l.exponents.len()).map(|n| n as f64).collect();
        series.push(Series::new(format!("{label} μ = {}", fmt(*mu)), xs, l.exponents.clone()));
    }
    out.tables.push(table);

    let n = cfg.instances();
    let mut fuzz = Table::new("ladder_fuzz", &["dim", "s", "q", "mu", "mu0", "exact_diverges", "float_escapes"]);
    let mut agree = 0;
    timed(out, "ladder fuzz", || -> CliResult<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..n {
            let dim = rng.random_range(1..=4usize);
            let s = rng.random_range(0.05..0.95f64);
            if dim as f64 <= 2.0 * s {
                // one-dimensional tuples need s < 1/2
                fuzz_row(&mut rng, 1, 0.5 * s, &mut fuzz, &mut agree)?;
            } else {
                fuzz_row(&mut rng, dim, s, &mut fuzz, &mut agree)?;
            }
        }
        Ok(())
    })?;
    out.tables.push(fuzz);
    out.check(
        "random tuples: exact divergence matches the floating-point recursion",
        agree == n,
        format!("{agree} of {n} agree"),
    );

    let log = series.iter().all(|s| s.y.iter().all(|v| *v > 0.0));
    out.plot(
        "ladder_growth",
        &series,
        PlotStyle {
            title: format!("exponent ladder N = {dim}, s = {s}, q = {q}"),
            x_label: "n".into(),
            y_label: "r_n".into(),
            log_x: false,
            log_y: log,
        },
    )
}

fn fuzz_row(rng: &mut ChaCha8Rng, dim: usize, s: f64, t: &mut Table, agree: &mut usize) -> CliResult<()> {
    let q = rng.random_range(2.0..8.0f64);
    let mu0 = ladder_fixed_point(q, dim, s).stage(|| "fuzz fixed point".into())?;
    // keep a margin from μ₀ so the floating-point recursion separates cleanly
    let gap = rng.random_range(1e-3..10.0f64);
    let mu = if rng.random_bool(0.5) { mu0 + gap } else { mu0 - gap };
    let l = ladder(q, dim, s, mu, 4).stage(|| "fuzz ladder".into())?;
    let esc = ladder_escapes(q, dim, s, mu);
    if esc == Some(l.diverges) && ladder_consistent(&l) {
        *agree += 1;
    }
    t.push(vec![
        dim.to_string(),
        fmt(s),
        fmt(q),
        fmt(mu),
        fmt(l.mu0),
        l.diverges.to_string(),
        esc.map_or("undecided".into(), |b| b.to_string()),
    ]);
    Ok(())
}

fn probes(z: &Point, dim: usize) -> Vec<Point> {
    let radii = [0.1, 0.35, 0.8, 1.5, 3.0];
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if dim == 1 {
                [z[0] + if i % 2 == 0 { r } else { -r }, 0.0]
            } else {
                let th = 0.7 * i as f64;
                [z[0] + r * th.cos(), z[1] + r * th.sin()]
            }
        })
        .collect()
}

pub fn talenti_blowup(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let domain = cfg.domain()?;
    let (dim, s) = (domain.dim(), cfg.s);
    let (z, _) = centre_radius(&cfg.domain);

    let fit = timed(out, "gamma fit", || talenti_fit_gamma(1.0, &z, dim, s, &probes(&z, dim)));
    match fit {
        Ok(fit) => {
            let mut t = Table::new("talenti_fit", &["x", "y", "ratio", "error"]);
            for (p, r, e) in &fit.probes {
                t.push(vec![fmt(p[0]), fmt(p[1]), fmt(*r), fmt(*e)]);
            }
            out.tables.push(t);
            out.json.push((
                "talenti_gamma".into(),
                serde_json::json!({ "gamma": fit.gamma, "spread": fit.spread, "probes": fit.probes.len() }),
            ));
            out.check("fitted ratio constant across probes (1%)", fit.spread <= 1e-2, format!("spread {}", fmt(fit.spread)));
        }
        Err(FracError::CheckFailed(msg)) => out.check("fitted ratio constant across probes (1%)", false, msg),
        Err(e) => return Err(e).stage(|| "Talenti fit".into()),
    }

    let eps = cfg.params.talenti_eps.clone().unwrap_or(vec![0.5, 1.0, 2.0]);
    let mut t = Table::new("talenti_norms", &["eps", "critical_norm", "error"]);
    let mut norms = Vec::new();
    timed(out, "critical norms", || -> CliResult<()> {
        for &e in &eps {
            let n = talenti_critical_norm(e, dim, s, None).stage(|| format!("critical norm at ε = {e}"))?;
            t.push(vec![fmt(e), fmt(n.value), fmt(n.error)]);
            norms.push(n.value);
        }
        Ok(())
    })?;
    out.tables.push(t);
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    out.check(
        "critical norm independent of ε (1e-4)",
        (hi - lo) <= 1e-4 * lo,
        format!("range [{}, {}]", fmt(lo), fmt(hi)),
    );

    let blow = cfg.params.blowup_eps.clone().unwrap_or(vec![0.5, 0.25, 0.125, 0.0625, 0.03125]);
    let rows = timed(out, "blow-up table", || critical_blowup_demo(&domain, &z, &blow)).stage(|| "blow-up table".into())?;
    let mut t = Table::new("talenti_blowup", &["eps", "sup", "critical_norm", "ratio"]);
    let power = -0.5 * (dim as f64 - 2.0 * s);
    let mut exact = true;
    for r in &rows {
        t.push(vec![fmt(r.eps), fmt(r.sup), fmt(r.critical_norm), fmt(r.ratio)]);
        exact &= r.sup == r.eps.powf(power);
    }
    out.tables.push(t);
    out.check("sup norm equals ε^{-(N-2s)/2}", exact, format!("{} scales", rows.len()));
    let whole = norms.iter().copied().fold(0.0, f64::max);
    let bounded = rows.iter().all(|r| r.critical_norm <= whole * (1.0 + 1e-4));
    out.check("critical norm on Ω bounded by the whole-space norm", bounded, fmt(whole));
    out.plot(
        "talenti_blowup",
        &[
            Series::new("sup", rows.iter().map(|r| r.eps).collect(), rows.iter().map(|r| r.sup).collect()),
            Series::new("critical norm on Ω", rows.iter().map(|r| r.eps).collect(), rows.iter().map(|r| r.critical_norm).collect()),
        ],
        PlotStyle {
            title: "Talenti blow-up".into(),
            x_label: "ε".into(),
            y_label: "norm".into(),
            log_x: true,
            log_y: true,
        },
    )
}
