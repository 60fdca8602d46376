//! The named studies. Each returns its tables, plots and checks in memory;
//! the runner writes them.

mod bounds;
mod principles;
mod solve;
mod variational;

use std::sync::Arc;

use fraclab_core::kernel::torsion_constant;
use fraclab_core::{assemble_form, build_mesh, DomainKind, GridFunction, KernelSpec, Point, StiffnessForm};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliResult, StageExt};
use crate::plot::{emit_plot, PlotStyle, Series};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub plots: Vec<(String, String)>,
    pub json: Vec<(String, serde_json::Value)>,
    pub checks: Vec<Check>,
    pub stages: Vec<(String, f64)>,
}

impl Output {
    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn plot(&mut self, name: &str, series: &[Series], style: PlotStyle) -> CliResult<()> {
        let svg = emit_plot(series, &style)?;
        self.plots.push((format!("{name}.svg"), svg));
        Ok(())
    }

    /// Artifact file names and contents, in a fixed order.
    pub fn files(&self) -> CliResult<Vec<(String, Vec<u8>)>> {
        let mut files = Vec::new();
        for t in &self.tables {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.header)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            files.push((format!("{}.csv", t.name), bytes));
        }
        for (name, v) in &self.json {
            let text = serde_json::to_string_pretty(v).expect("summary serializes") + "\n";
            files.push((format!("{name}.json"), text.into_bytes()));
        }
        for (name, svg) in &self.plots {
            files.push((name.clone(), svg.clone().into_bytes()));
        }
        Ok(files)
    }
}

/// Shortest round-trip decimal, in exponent form outside [1e-4, 1e6).
pub fn fmt(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn form_for(cfg: &ExperimentConfig, res: usize) -> CliResult<StiffnessForm> {
    let domain = cfg.domain()?;
    let mesh = Arc::new(build_mesh(&domain, res).stage(|| format!("mesh at resolution {res}"))?);
    let kernel = KernelSpec::new(domain.dim(), domain.s).stage(|| "kernel".into())?;
    assemble_form(&mesh, &kernel).stage(|| format!("assembly at resolution {res}"))
}

/// Centre and half-width of the configured domain.
pub(crate) fn centre_radius(kind: &DomainKind) -> (Point, f64) {
    match *kind {
        DomainKind::Interval { a, b } => ([0.5 * (a + b), 0.0], 0.5 * (b - a)),
        DomainKind::Disk { center, radius } => (center, radius),
    }
}

/// Closed-form torsion function κ(R² − |x − c|²)_+^s of the domain.
pub(crate) fn exact_torsion(cfg: &ExperimentConfig, x: &Point) -> f64 {
    let (c, r) = centre_radius(&cfg.domain);
    let dim = if matches!(cfg.domain, DomainKind::Interval { .. }) { 1 } else { 2 };
    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    torsion_constant(dim, cfg.s) * (r * r - d2).max(0.0).powf(cfg.s)
}

pub(crate) fn discrete_torsion(form: &StiffnessForm) -> CliResult<GridFunction> {
    let res = form.mesh.num_nodes();
    form.solve_load(&GridFunction::from_fn(&form.mesh, |_| 1.0))
        .stage(|| format!("torsion solve on {res} nodes"))
}

/// Nodes of a one-dimensional function in coordinate order, or `None` on
/// a disk.
pub(crate) fn profile(u: &GridFunction) -> Option<(Vec<f64>, Vec<f64>)> {
    if u.mesh.dim() != 1 {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = u.mesh.nodes.iter().zip(&u.values).map(|(p, &v)| (p[0], v)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(pts.into_iter().unzip())
}

/// Whether each entry is strictly below the previous one.
pub(crate) fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<Output> {
    let mut out = Output::default();
    match cfg.experiment {
        Experiment::TorsionConvergence => solve::torsion_convergence(cfg, &mut out)?,
        Experiment::EigenSpectrum => solve::eigen_spectrum(cfg, &mut out)?,
        Experiment::HopfStudy => solve::hopf_study(cfg, &mut out)?,
        Experiment::WmpSweep => principles::wmp_sweep(cfg, &mut out)?,
        Experiment::BarrierCheck => principles::barrier_check(cfg, &mut out)?,
        Experiment::RegularitySweep => principles::regularity_sweep(cfg, &mut out)?,
        Experiment::MoserLadder => bounds::moser_ladder(cfg, &mut out)?,
        Experiment::TalentiBlowup => bounds::talenti_blowup(cfg, &mut out)?,
        Experiment::SubsuperDemo => variational::subsuper_demo(cfg, &mut out)?,
        Experiment::BallMinimizerProbe => variational::ball_minimizer_probe(cfg, &mut out)?,
        Experiment::SignTruncationMinimizers => variational::sign_truncation(cfg, &mut out)?,
    }
    Ok(out)
}
