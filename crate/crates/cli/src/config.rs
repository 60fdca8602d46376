//! Experiment configuration: parsing, defaults and validation.

use std::path::PathBuf;

use fraclab_core::variational::Nonlinearity;
use fraclab_core::{critical_exponent, Domain, DomainKind};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TorsionConvergence,
    EigenSpectrum,
    WmpSweep,
    HopfStudy,
    BarrierCheck,
    RegularitySweep,
    MoserLadder,
    TalentiBlowup,
    SubsuperDemo,
    BallMinimizerProbe,
    SignTruncationMinimizers,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::TorsionConvergence,
        Experiment::EigenSpectrum,
        Experiment::WmpSweep,
        Experiment::HopfStudy,
        Experiment::BarrierCheck,
        Experiment::RegularitySweep,
        Experiment::MoserLadder,
        Experiment::TalentiBlowup,
        Experiment::SubsuperDemo,
        Experiment::BallMinimizerProbe,
        Experiment::SignTruncationMinimizers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TorsionConvergence => "torsion-convergence",
            Experiment::EigenSpectrum => "eigen-spectrum",
            Experiment::WmpSweep => "wmp-sweep",
            Experiment::HopfStudy => "hopf-study",
            Experiment::BarrierCheck => "barrier-check",
            Experiment::RegularitySweep => "regularity-sweep",
            Experiment::MoserLadder => "moser-ladder",
            Experiment::TalentiBlowup => "talenti-blowup",
            Experiment::SubsuperDemo => "subsuper-demo",
            Experiment::BallMinimizerProbe => "ball-minimizer-probe",
            Experiment::SignTruncationMinimizers => "sign-truncation-minimizers",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::TorsionConvergence => "solve (-Δ)^s u = 1 and compare with the closed-form torsion function",
            Experiment::EigenSpectrum => "smallest Dirichlet eigenvalues and their refinement behaviour",
            Experiment::WmpSweep => "weak maximum principle over random nonnegative loads",
            Experiment::HopfStudy => "boundary quotient u/δ^s of the torsion function",
            Experiment::BarrierCheck => "annulus barrier constant c with φ ≥ c(R-|x|)^s",
            Experiment::RegularitySweep => "weighted Hölder ratios ‖u‖_{α,δ}/‖f‖∞ and local boundedness constants",
            Experiment::MoserLadder => "exponent ladder r_{n+1} = γ²r_n + 2 - q and its divergence threshold",
            Experiment::TalentiBlowup => "Talenti bubbles: fitted constant, critical norms and sup blow-up",
            Experiment::SubsuperDemo => "solution trapped between an ordered sub/supersolution pair",
            Experiment::BallMinimizerProbe => "weighted sup-norm ball minimizers probed by energy-norm perturbations",
            Experiment::SignTruncationMinimizers => "positive and negative solutions from sign-truncated energies",
        }
    }

    pub fn uses_nonlinearity(self) -> bool {
        matches!(
            self,
            Experiment::SubsuperDemo | Experiment::BallMinimizerProbe | Experiment::SignTruncationMinimizers
        )
    }

    pub fn default_nonlinearity(self) -> Option<NonlinearitySpec> {
        let spec = |name: &str, params: &[f64]| NonlinearitySpec {
            name: name.into(),
            params: params.to_vec(),
        };
        match self {
            Experiment::SubsuperDemo => Some(spec("arctan", &[1.0, 1.0])),
            Experiment::BallMinimizerProbe | Experiment::SignTruncationMinimizers => Some(spec("arctan", &[4.0, 0.0])),
            _ => None,
        }
    }

    /// Experiments whose resolutions refine a mesh of the configured domain.
    fn meshes_domain(self) -> bool {
        !matches!(self, Experiment::MoserLadder | Experiment::TalentiBlowup | Experiment::BarrierCheck)
    }

    fn default_instances(self) -> usize {
        match self {
            Experiment::WmpSweep => 200,
            Experiment::RegularitySweep => 50,
            Experiment::MoserLadder => 100,
            Experiment::BallMinimizerProbe => 40,
            _ => 0,
        }
    }
}

/// Nonlinearity by name with positional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

const NONLINEARITIES: &str = "zero[], constant[c], linear[λ], affine[λ, c], power[p], arctan[λ, c], exponential[]";

impl NonlinearitySpec {
    pub fn build(&self) -> CliResult<Nonlinearity> {
        let p = &self.params;
        let arity = |n: usize| {
            if p.len() == n {
                Ok(())
            } else {
                Err(config_err(
                    "nonlinearity.params",
                    format!("`{}` takes {n} parameters, got {}", self.name, p.len()),
                ))
            }
        };
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(config_err(format!("nonlinearity.params[{i}]"), "parameters must be finite"));
        }
        let nl = match self.name.as_str() {
            "zero" => arity(0).map(|_| Nonlinearity::zero())?,
            "constant" => arity(1).map(|_| Nonlinearity::constant(p[0]))?,
            "linear" => arity(1).map(|_| Nonlinearity::linear(p[0]))?,
            "affine" => arity(2).map(|_| Nonlinearity::affine(p[0], p[1]))?,
            "power" => {
                arity(1)?;
                Nonlinearity::power(p[0]).map_err(|e| config_err("nonlinearity.params[0]", e.to_string()))?
            }
            "arctan" => arity(2).map(|_| Nonlinearity::arctan(p[0], p[1]))?,
            "exponential" => arity(0).map(|_| Nonlinearity::exponential())?,
            other => {
                return Err(config_err(
                    "nonlinearity.name",
                    format!("unknown nonlinearity `{other}`; expected one of {NONLINEARITIES}"),
                ))
            }
        };
        Ok(nl)
    }
}

/// Experiment-specific knobs; unset fields take per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Random instances per resolution (sweeps, ladder fuzz, perturbation probes).
    pub instances: Option<usize>,
    /// Number of eigenpairs.
    pub eigen_count: Option<usize>,
    /// Hölder exponent of the regularity norm.
    pub alpha: Option<f64>,
    /// Barrier radii r < R.
    pub barrier_r: Option<f64>,
    pub barrier_big_r: Option<f64>,
    /// Ladder dimension N, growth q, start μ and number of steps.
    pub ladder_dim: Option<usize>,
    pub ladder_q: Option<f64>,
    pub ladder_mu: Option<f64>,
    pub ladder_steps: Option<usize>,
    /// Scales for the critical-norm comparison.
    pub talenti_eps: Option<Vec<f64>>,
    /// Decreasing scales for the blow-up table.
    pub blowup_eps: Option<Vec<f64>>,
    /// Radius ρ of the weighted sup-norm ball.
    pub delta_radius: Option<f64>,
    /// Largest energy-norm perturbation radius; four halvings follow.
    pub probe_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

fn default_domain() -> DomainKind {
    DomainKind::Interval { a: -1.0, b: 1.0 }
}

fn default_s() -> f64 {
    0.5
}

fn default_resolutions() -> Vec<usize> {
    vec![32, 64, 128]
}

/// Dense two-dimensional assembly is quadratic in the node count; this keeps
/// a disk run to minutes.
pub const MAX_DISK_RESOLUTION: usize = 24;

/// Parses and validates a JSON config, filling defaults.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path.is_empty() { ".".into() } else { path }, e.into_inner().to_string())
    })?;
    if cfg.nonlinearity.is_none() {
        cfg.nonlinearity = cfg.experiment.default_nonlinearity();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn positive(path: &str, v: Option<f64>) -> CliResult<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(config_err(path, format!("must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn domain(&self) -> CliResult<Domain> {
        let d = match self.domain {
            DomainKind::Interval { a, b } => Domain::interval(a, b, self.s),
            DomainKind::Disk { center, radius } => Domain::disk(center, radius, self.s),
        };
        d.map_err(|e| config_err("domain", e.to_string()))
    }

    pub fn instances(&self) -> usize {
        self.params.instances.unwrap_or(self.experiment.default_instances())
    }

    pub fn nonlinearity(&self) -> CliResult<Option<Nonlinearity>> {
        self.nonlinearity.as_ref().map(NonlinearitySpec::build).transpose()
    }

    pub fn validate(&self) -> CliResult<()> {
        let exp = self.experiment;
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(config_err("s", format!("s must lie in (0,1), got {}", self.s)));
        }
        let domain = self.domain()?;
        if self.resolutions.is_empty() {
            return Err(config_err("resolutions", "need at least one resolution"));
        }
        for (i, &r) in self.resolutions.iter().enumerate() {
            if r < 2 {
                return Err(config_err(format!("resolutions[{i}]"), format!("must be >= 2, got {r}")));
            }
            if exp.meshes_domain() && domain.dim() == 2 && r > MAX_DISK_RESOLUTION {
                return Err(config_err(
                    format!("resolutions[{i}]"),
                    format!("disk resolution {r} exceeds {MAX_DISK_RESOLUTION}"),
                ));
            }
        }
        if self.nonlinearity.is_some() && !exp.uses_nonlinearity() {
            return Err(config_err("nonlinearity", format!("`{}` takes no nonlinearity", exp.name())));
        }
        self.nonlinearity()?;
        let p = &self.params;
        if matches!(exp, Experiment::WmpSweep | Experiment::RegularitySweep | Experiment::MoserLadder | Experiment::BallMinimizerProbe)
            && self.instances() == 0
        {
            return Err(config_err("params.instances", "must be at least 1"));
        }
        if let Some(k) = p.eigen_count {
            if k == 0 {
                return Err(config_err("params.eigen_count", "must be at least 1"));
            }
            let smallest = *self.resolutions.iter().min().expect("nonempty");
            if domain.dim() == 1 && k + 1 >= smallest {
                return Err(config_err("params.eigen_count", format!("{k} eigenpairs need more than {} elements", k + 1)));
            }
        }
        if let Some(a) = p.alpha {
            if !(a > 0.0 && a < self.s.min(1.0 - self.s)) {
                return Err(config_err("params.alpha", format!("need 0 < α < min(s, 1-s), got {a}")));
            }
        }
        positive("params.barrier_r", p.barrier_r)?;
        positive("params.barrier_big_r", p.barrier_big_r)?;
        let (r, big_r) = self.barrier_radii();
        if !(r < big_r) {
            return Err(config_err("params.barrier_r", format!("need r < R, got r = {r}, R = {big_r}")));
        }
        positive("params.delta_radius", p.delta_radius)?;
        positive("params.probe_radius", p.probe_radius)?;
        if let Some(q) = p.ladder_q {
            if !(q >= 2.0 && q.is_finite()) {
                return Err(config_err("params.ladder_q", format!("need q >= 2, got {q}")));
            }
        }
        if let Some(mu) = p.ladder_mu {
            if !mu.is_finite() {
                return Err(config_err("params.ladder_mu", "must be finite"));
            }
        }
        if exp == Experiment::MoserLadder {
            let n = self.ladder_dim();
            if n == 0 || n as f64 <= 2.0 * self.s {
                return Err(config_err("params.ladder_dim", format!("the ladder needs N > 2s, got N = {n}, s = {}", self.s)));
            }
        }
        for (key, list) in [("params.talenti_eps", &p.talenti_eps), ("params.blowup_eps", &p.blowup_eps)] {
            if let Some(l) = list {
                if l.is_empty() {
                    return Err(config_err(key, "need at least one scale"));
                }
                if let Some(i) = l.iter().position(|e| !(*e > 0.0 && e.is_finite())) {
                    return Err(config_err(format!("{key}[{i}]"), "scales must be positive and finite"));
                }
            }
        }
        if exp == Experiment::TalentiBlowup && critical_exponent(domain.dim(), self.s).is_none() {
            return Err(config_err(
                "s",
                format!("talenti-blowup needs N > 2s, got N = {}, s = {}", domain.dim(), self.s),
            ));
        }
        Ok(())
    }

    pub fn barrier_radii(&self) -> (f64, f64) {
        (self.params.barrier_r.unwrap_or(1.0), self.params.barrier_big_r.unwrap_or(2.0))
    }

    pub fn ladder_dim(&self) -> usize {
        self.params.ladder_dim.unwrap_or(3)
    }
}

/// Rejects unknown names with the full list, as `list` prints them.
pub fn experiment_by_name(name: &str) -> CliResult<Experiment> {
    Experiment::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        CliError::Config {
            path: "experiment".into(),
            message: format!("unknown experiment `{name}`; valid names: {}", names.join(", ")),
        }
    })
}
