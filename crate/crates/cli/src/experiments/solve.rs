//! Linear solves: torsion convergence, spectrum and the boundary quotient.

use fraclab_core::eigen::eigenpairs;
use fraclab_core::principles::{hopf_quotient, smp_check};
use fraclab_core::kernel::torsion_constant;

use super::{centre_radius, discrete_torsion, exact_torsion, fmt, form_for, profile, strictly_decreasing, Output, Table};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, StageExt};
use crate::plot::{PlotStyle, Series};
use crate::runner::timed;

pub fn torsion_convergence(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let (centre, _) = centre_radius(&cfg.domain);
    let exact_centre = exact_torsion(cfg, &centre);
    let mut table = Table::new(
        "torsion_convergence",
        &["resolution", "h", "dofs", "u_centre", "exact_centre", "centre_error", "max_nodal_error"],
    );
    let (mut hs, mut centre_err, mut nodal_err) = (Vec::new(), Vec::new(), Vec::new());
    let mut finest = None;
    for &res in &cfg.resolutions {
        let u = timed(out, format!("solve resolution {res}"), || -> CliResult<_> {
            discrete_torsion(&form_for(cfg, res)?)
        })?;
        let uc = u.eval(&centre);
        let ce = (uc - exact_centre).abs();
        let ne = u
            .mesh
            .nodes
            .iter()
            .zip(&u.values)
            .map(|(p, v)| (v - exact_torsion(cfg, p)).abs())
            .fold(0.0, f64::max);
        table.push(vec![
            res.to_string(),
            fmt(u.mesh.h),
            u.mesh.num_dofs().to_string(),
            fmt(uc),
            fmt(exact_centre),
            fmt(ce),
            fmt(ne),
        ]);
        hs.push(u.mesh.h);
        centre_err.push(ce);
        nodal_err.push(ne);
        finest = Some((uc, u));
    }
    out.tables.push(table);
    let (uc, u) = finest.expect("at least one resolution");
    if let Some((xs, vs)) = profile(&u) {
        let mut t = Table::new("torsion_profile", &["x", "u", "exact"]);
        for (x, v) in xs.iter().zip(&vs) {
            t.push(vec![fmt(*x), fmt(*v), fmt(exact_torsion(cfg, &[*x, 0.0]))]);
        }
        out.tables.push(t);
    }
    if cfg.resolutions.len() > 1 {
        out.check("centre error decreases", strictly_decreasing(&centre_err), format!("{centre_err:?}"));
        out.check("max nodal error decreases", strictly_decreasing(&nodal_err), format!("{nodal_err:?}"));
    }
    let rel = (uc - exact_centre).abs() / exact_centre;
    out.check("centre value within 2% at the finest resolution", rel <= 0.02, format!("relative error {rel:e}"));
    let positive: Vec<f64> = centre_err.iter().chain(&nodal_err).copied().filter(|e| *e > 0.0).collect();
    if positive.len() == 2 * hs.len() {
        out.plot(
            "torsion_errors",
            &[
                Series::new("centre error", hs.clone(), centre_err),
                Series::new("max nodal error", hs, nodal_err),
            ],
            PlotStyle {
                title: "torsion errors".into(),
                x_label: "h".into(),
                y_label: "error".into(),
                log_x: true,
                log_y: true,
            },
        )?;
    }
    Ok(())
}

pub fn eigen_spectrum(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let count = cfg.params.eigen_count.unwrap_or(4);
    let mut table = Table::new("eigen_spectrum", &["resolution", "index", "eigenvalue", "residual"]);
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); count];
    let mut first = Vec::new();
    for &res in &cfg.resolutions {
        let pairs = timed(out, format!("eigenpairs resolution {res}"), || -> CliResult<_> {
            let form = form_for(cfg, res)?;
            eigenpairs(&form, count).stage(|| format!("eigenpairs at resolution {res}"))
        })?;
        for (k, p) in pairs.iter().enumerate() {
            table.push(vec![res.to_string(), (k + 1).to_string(), fmt(p.value), fmt(p.residual)]);
            series[k].push(p.value);
        }
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        out.check(
            format!("eigenvalues ascending at resolution {res}"),
            values.windows(2).all(|w| w[0] <= w[1]),
            format!("{values:?}"),
        );
        let phi = &pairs[0].function;
        let sign = if phi.values.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let v = smp_check(&phi.scale(sign)).stage(|| format!("first eigenfunction at resolution {res}"))?;
        out.check(
            format!("first eigenfunction has one sign at resolution {res}"),
            v.pass,
            format!("{} {}", v.context, fmt(v.margin)),
        );
        first.push(values[0]);
    }
    out.tables.push(table);
    // uniform interval meshes are nested when each resolution divides the next
    let nested = cfg.domain().map(|d| d.dim() == 1).unwrap_or(false)
        && cfg.resolutions.windows(2).all(|w| w[1] > w[0] && w[1] % w[0] == 0);
    if nested && first.len() > 1 {
        out.check("first eigenvalue decreases on nested meshes", strictly_decreasing(&first), format!("{first:?}"));
    }
    let xs: Vec<f64> = cfg.resolutions.iter().map(|&r| r as f64).collect();
    let series: Vec<Series> = series
        .into_iter()
        .enumerate()
        .map(|(k, v)| Series::new(format!("λ_{}", k + 1), xs.clone(), v))
        .collect();
    out.plot(
        "eigen_spectrum",
        &series,
        PlotStyle {
            title: "smallest eigenvalues".into(),
            x_label: "resolution".into(),
            y_label: "eigenvalue".into(),
            log_x: true,
            log_y: false,
        },
    )
}

pub fn hopf_study(cfg: &ExperimentConfig, out: &mut Output) -> CliResult<()> {
    let domain = cfg.domain()?;
    let (_, r) = centre_radius(&cfg.domain);
    // u/δ^s = κ(R + |x − c|)^s, smallest at the centre
    let exact = torsion_constant(domain.dim(), cfg.s) * r.powf(cfg.s);
    let mut table = Table::new("hopf_quotients", &["resolution", "min_quotient", "x_at_min", "y_at_min", "exact_min"]);
    let mut mins = Vec::new();
    let mut profiles = Vec::new();
    for &res in &cfg.resolutions {
        let u = timed(out, format!("solve resolution {res}"), || -> CliResult<_> {
            discrete_torsion(&form_for(cfg, res)?)
        })?;
        let (q, node) = hopf_quotient(&u).stage(|| format!("Hopf quotient at resolution {res}"))?;
        let p = u.mesh.nodes[node];
        table.push(vec![res.to_string(), fmt(q), fmt(p[0]), fmt(p[1]), fmt(exact)]);
        mins.push(q);
        let (cx, _) = centre_radius(&cfg.domain);
        let mut prof: Vec<(f64, f64)> = u
            .quotients()
            .into_iter()
            .map(|(n, q)| {
                let x = u.mesh.nodes[n];
                ((x[0] - cx[0]).hypot(x[1] - cx[1]), q)
            })
            .collect();
        prof.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        profiles.push((res, prof));
    }
    out.tables.push(table);
    let (res, prof) = profiles.last().expect("at least one resolution");
    let mut t = Table::new("hopf_profile", &["distance_to_centre", "quotient"]);
    for (d, q) in prof {
        t.push(vec![fmt(*d), fmt(*q)]);
    }
    out.tables.push(t);
    let rel = (mins.last().expect("nonempty") - exact).abs() / exact;
    out.check(
        format!("min quotient within 5% of the closed form at resolution {res}"),
        rel <= 0.05,
        format!("relative deviation {rel:e}"),
    );
    if mins.len() > 1 {
        let (lo, hi) = mins.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / lo;
        out.check("min quotient stable under refinement (25%)", spread < 0.25, format!("relative spread {spread:e}"));
    }
    let series: Vec<Series> = profiles
        .into_iter()
        .map(|(res, prof)| {
            let (d, q): (Vec<f64>, Vec<f64>) = prof.into_iter().unzip();
            Series::new(format!("resolution {res}"), d, q)
        })
        .collect();
    out.plot(
        "hopf_profile",
        &series,
        PlotStyle {
            title: "boundary quotient u/δ^s".into(),
            x_label: "distance to centre".into(),
            y_label: "u/δ^s".into(),
            log_x: false,
            log_y: false,
        },
    )
}
