//! Maximum principle sweep, barrier and regularity studies.

use fraclab_core::grid::default_alpha;
use fraclab_core::principles::{barrier, local_bound_survey, percentile, regularity_sweep as sweep, wmp_sweep as sweep_wmp};
use serde_json::json;

use super::{fmt, form_for, profile, Output, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, StageExt};
use crate::plot::{PlotStyle, Series};
use crate::runner::timed;

/// Per-resolution seed so every level draws its own instances.
fn level_seed(cfg: &ExperimentConfig, res: usize) -> u64 {
    cfg.seed.wrapping_mul(1_000_003).wrapping_add(res as u64)
}

pub fn wmp_sweep(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let n = cfg.instances();
    let mut table = Table::new("wmp_verdicts", &["resolution", "instance", "min_value", "pass"]);
    let mut summary = Vec::new();
    for &res in &cfg.resolutions {
        let verdicts = timed(out, format!("sweep resolution {res}"), || -> CliResult<_> {
            let form = form_for(cfg, res)?;
            sweep_wmp(&form, n, level_seed(cfg, res)).stage(|| format!("maximum principle sweep at resolution {res}"))
        })?;
        for (i, v) in verdicts.iter().enumerate() {
            table.push(vec![res.to_string(), i.to_string(), fmt(v.margin), v.pass.to_string()]);
        }
        let violations = verdicts.iter().filter(|v| !v.pass).count();
        let margins: Vec<f64> = verdicts.iter().map(|v| v.margin).collect();
        summary.push(json!({
            "resolution": res,
            "instances": n,
            "violations": violations,
            "min_value": margins.iter().copied().fold(f64::INFINITY, f64::min),
            "median_min_value": percentile(&margins, 0.5),
        }));
        out.check(
            format!("no maximum principle violations at resolution {res}"),
            violations == 0,
            format!("{violations} of {n} instances below tolerance"),
        );
    }
    out.tables.push(table);
    out.json.push(("wmp_summary".into(), json!({ "levels": summary })));
    Ok(())
}

pub fn barrier_check(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let (r, big_r) = cfg.barrier_radii();
    let mut table = Table::new("barrier", &["resolution", "c", "x_at_min"]);
    let mut cs = Vec::new();
    let mut last = None;
    for &res in &cfg.resolutions {
        let b = timed(out, format!("barrier resolution {res}"), || {
            barrier(r, big_r, cfg.s, res).stage(|| format!("barrier at resolution {res}"))
        })?;
        table.push(vec![res.to_string(), fmt(b.c), fmt(b.phi.mesh.nodes[b.worst_node][0])]);
        out.check(format!("barrier constant positive at resolution {res}"), b.c > 0.0, fmt(b.c));
        cs.push(b.c);
        last = Some(b);
    }
    out.tables.push(table);
    for (w, res) in cs.windows(2).zip(cfg.resolutions.windows(2)) {
        let ratio = w[1] / w[0];
        out.check(
            format!("barrier constant stable from {} to {} (factor 2)", res[0], res[1]),
            (0.5..=2.0).contains(&ratio),
            format!("ratio {}", fmt(ratio)),
        );
    }
    let b = last.expect("at least one resolution");
    let (xs, vs) = profile(&b.phi).expect("barrier meshes are one-dimensional");
    let (xs, vs): (Vec<f64>, Vec<f64>) = xs.into_iter().zip(vs).filter(|(x, _)| *x >= 0.0).unzip();
    let fit: Vec<f64> = xs.iter().map(|x| b.c * (big_r - x).max(0.0).powf(cfg.s)).collect();
    out.plot(
        "barrier_profile",
        &[Series::new("φ", xs.clone(), vs), Series::new("c(R-|x|)^s", xs, fit)],
        PlotStyle {
            title: "annulus barrier".into(),
            x_label: "x".into(),
            y_label: "value".into(),
            log_x: false,
            log_y: false,
        },
    )
}

pub fn regularity_sweep(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let n = cfg.instances();
    let alpha = cfg.params.alpha.unwrap_or(default_alpha(cfg.s));
    let one_d = cfg.domain()?.dim() == 1;
    let mut ratios_t = Table::new("regularity_ratios", &["resolution", "instance", "ratio"]);
    let mut summary_t = Table::new("regularity_summary", &["resolution", "alpha", "max_ratio", "median_ratio"]);
    let mut local_t = Table::new("local_bounds", &["resolution", "instance", "lhs", "tail", "l2_average", "implied_constant"]);
    let mut local_summary = Vec::new();
    let mut maxima = Vec::new();
    for &res in &cfg.resolutions {
        let seed = level_seed(cfg, res);
        let (ratios, local) = timed(out, format!("sweep resolution {res}"), || -> CliResult<_> {
            let form = form_for(cfg, res)?;
            let ratios = sweep(&form, n, seed, alpha).stage(|| format!("regularity sweep at resolution {res}"))?;
            let local = if one_d {
                Some(local_bound_survey(&form, n, seed).stage(|| format!("local boundedness survey at resolution {res}"))?)
            } else {
                None
            };
            Ok((ratios, local))
        })?;
        for (i, r) in ratios.iter().enumerate() {
            ratios_t.push(vec![res.to_string(), i.to_string(), fmt(*r)]);
        }
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let median = percentile(&ratios, 0.5).unwrap_or(f64::NAN);
        summary_t.push(vec![res.to_string(), fmt(alpha), fmt(max), fmt(median)]);
        maxima.push(max);
        if let Some(local) = local {
            for (i, l) in local.iter().enumerate() {
                local_t.push(vec![
                    res.to_string(),
                    i.to_string(),
                    fmt(l.lhs),
                    fmt(l.tail),
                    fmt(l.l2_average),
                    fmt(l.implied_constant),
                ]);
            }
            let constants: Vec<f64> = local.iter().map(|l| l.implied_constant).collect();
            local_summary.push(json!({
                "resolution": res,
                "p95_implied_constant": percentile(&constants, 0.95),
                "max_implied_constant": constants.iter().copied().fold(0.0, f64::max),
            }));
        }
    }
    out.tables.push(ratios_t);
    out.tables.push(summary_t);
    if one_d {
        out.tables.push(local_t);
        out.json.push(("local_bound_summary".into(), json!({ "levels": local_summary })));
    }
    if maxima.len() > 1 {
        let (lo, hi) = maxima.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / lo;
        out.check(
            "max regularity ratio varies less than 25% across resolutions",
            spread < 0.25,
            format!("relative spread {}", fmt(spread)),
        );
    }
    let xs: Vec<f64> = cfg.resolutions.iter().map(|&r| r as f64).collect();
    out.plot(
        "regularity_max_ratio",
        &[Series::new("max ‖u‖_{α,δ}/‖f‖∞", xs, maxima)],
        PlotStyle {
            title: "weighted Hölder ratio".into(),
            x_label: "resolution".into(),
            y_label: "ratio".into(),
            log_x: true,
            log_y: false,
        },
    )
}
