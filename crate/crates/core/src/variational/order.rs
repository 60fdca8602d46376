//! Sub/supersolution certificates and the ordered-pair solver.

use serde::Serialize;

use crate::error::{FracError, Result};
use crate::form::StiffnessForm;
use crate::grid::GridFunction;

use super::energy::EnergyFunctional;
use super::nonlinearity::{truncate_nonlinearity_order, Nonlinearity};
use super::solvers::{minimize_free, SolveOptions, SolveReport, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sub,
    Super,
}

/// Outcome of testing r = Au − Mf(·,u) against nonnegative nodal directions.
#[derive(Debug, Clone, Serialize)]
pub struct OrderCertificate {
    pub role: Role,
    pub pass: bool,
    /// Interior node with the most adverse residual component.
    pub worst_node: Option<usize>,
    pub worst_value: f64,
    pub tolerance: f64,
    pub is_solution: bool,
    /// Sign of the load, when the certificate was issued for a t-independent
    /// right-hand side.
    pub load_nonnegative: Option<bool>,
    /// ‖rhs‖∞ for such a load.
    pub load_sup: Option<f64>,
    #[serde(skip)]
    pub(crate) fingerprint: Vec<u64>,
}

impl OrderCertificate {
    /// Whether the certificate was issued for exactly these nodal values.
    pub fn certifies(&self, u: &GridFunction) -> bool {
        self.fingerprint.len() == u.values.len() && self.fingerprint.iter().zip(&u.values).all(|(a, b)| *a == b.to_bits())
    }
}

fn certify(e: &EnergyFunctional<'_>, u: &GridFunction, role: Role) -> Result<OrderCertificate> {
    let c = e.form.coefficients(u)?;
    let au = &e.form.a * &c;
    let b = e.load_vec(&c)?;
    let r = &au - &b;
    let tolerance = 1e-9 * (1.0 + au.amax() + b.amax());
    let interior = e.form.mesh.interior_nodes();
    let (worst_dof, worst_value) = match role {
        Role::Sub => r.iter().enumerate().fold((None, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (Some(i), v) } else { acc }),
        Role::Super => r.iter().enumerate().fold((None, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (Some(i), v) } else { acc }),
    };
    let pass = match role {
        Role::Sub => worst_value <= tolerance,
        Role::Super => worst_value >= -tolerance,
    };
    Ok(OrderCertificate {
        role,
        pass,
        worst_node: worst_dof.map(|d| interior[d]),
        worst_value: if worst_dof.is_some() { worst_value } else { 0.0 },
        tolerance,
        is_solution: r.amax() <= tolerance,
        load_nonnegative: None,
        load_sup: None,
        fingerprint: u.values.iter().map(|v| v.to_bits()).collect(),
    })
}

pub fn check_order_residuals(form: &StiffnessForm, nl: &Nonlinearity, u: &GridFunction, role: Role) -> Result<OrderCertificate> {
    let e = EnergyFunctional::new(form, nl.clone())?;
    certify(&e, u, role)
}

/// Supersolution certificate for the linear problem with nodal load `rhs`.
pub fn supersolution_certificate(form: &StiffnessForm, u: &GridFunction, rhs: &GridFunction) -> Result<OrderCertificate> {
    u.check_same_mesh(rhs)?;
    let mut cert = check_order_residuals(form, &Nonlinearity::load(rhs.clone()), u, Role::Super)?;
    cert.load_nonnegative = Some(rhs.values.iter().all(|&v| v >= 0.0));
    cert.load_sup = Some(rhs.max_abs());
    Ok(cert)
}

/// Nodally ordered sub/supersolution candidates with their certificates.
#[derive(Debug, Clone)]
pub struct OrderedPair {
    pub lower: GridFunction,
    pub upper: GridFunction,
    pub lower_cert: OrderCertificate,
    pub upper_cert: OrderCertificate,
}

impl OrderedPair {
    pub fn new(form: &StiffnessForm, nl: &Nonlinearity, lower: GridFunction, upper: GridFunction) -> Result<Self> {
        lower.check_same_mesh(&upper)?;
        for (i, (&l, &u)) in lower.values.iter().zip(&upper.values).enumerate() {
            if l > u {
                return Err(FracError::OrderViolation { node: i, lower: l, upper: u });
            }
        }
        let e = EnergyFunctional::new(form, nl.clone())?;
        Ok(Self {
            lower_cert: certify(&e, &lower, Role::Sub)?,
            upper_cert: certify(&e, &upper, Role::Super)?,
            lower,
            upper,
        })
    }

    pub fn certified(&self) -> bool {
        self.lower_cert.pass && self.upper_cert.pass
    }
}

/// Smallest interior gaps u₀ − lower and upper − u₀.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichMargin {
    pub lower: f64,
    pub upper: f64,
}

impl SandwichMargin {
    pub fn strict(&self) -> bool {
        self.lower > 0.0 && self.upper > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct SubsuperOutcome {
    pub report: SolveReport,
    pub margin: SandwichMargin,
    /// Dual norm of the residual of the original equation at u₀.
    pub original_residual: f64,
}

/// Minimizes the order-truncated energy and verifies the sandwich and the
/// original equation at the minimizer.
pub fn subsupersolution_solve(form: &StiffnessForm, nl: &Nonlinearity, pair: &OrderedPair, opts: &SolveOptions) -> Result<SubsuperOutcome> {
    if !nl.monotone {
        return Err(FracError::InvalidCertificate(format!("nonlinearity `{}` is not flagged monotone", nl.name)));
    }
    if !pair.certified() {
        return Err(FracError::InvalidCertificate(format!(
            "sub certificate pass = {}, super certificate pass = {}",
            pair.lower_cert.pass, pair.upper_cert.pass
        )));
    }
    if !pair.lower_cert.certifies(&pair.lower) || !pair.upper_cert.certifies(&pair.upper) {
        return Err(FracError::InvalidCertificate("certificates do not match the pair".into()));
    }
    let truncated = truncate_nonlinearity_order(nl, &pair.lower, &pair.upper)?;
    let et = EnergyFunctional::new(form, truncated)?;
    let init = GridFunction::new(
        form.mesh.clone(),
        pair.lower.values.iter().zip(&pair.upper.values).map(|(l, u)| 0.0f64.clamp(*l, *u)).collect(),
    )?;
    let report = minimize_free(&et, &init, opts)?;
    if report.status != SolveStatus::Converged {
        return Err(FracError::SolveFailed(format!("truncated energy: status {:?}", report.status)));
    }
    let u0 = &report.solution;
    let scale = pair.lower.max_abs().max(pair.upper.max_abs()).max(1.0);
    let tol = 1e-9 * scale;
    let mut margin = SandwichMargin {
        lower: f64::INFINITY,
        upper: f64::INFINITY,
    };
    for &i in form.mesh.interior_nodes() {
        let (l, v, u) = (pair.lower.values[i], u0.values[i], pair.upper.values[i]);
        if v < l - tol || v > u + tol {
            return Err(FracError::SandwichViolation { node: i, value: v, lower: l, upper: u });
        }
        margin.lower = margin.lower.min(v - l);
        margin.upper = margin.upper.min(u - v);
    }
    let original = EnergyFunctional::new(form, nl.clone())?;
    let original_residual = original.residual_norm(u0)?;
    Ok(SubsuperOutcome {
        report,
        margin,
        original_residual,
    })
}
