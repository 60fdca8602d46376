//! Energy functionals, their truncations, and the solvers built on them.

mod energy;
mod nonlinearity;
mod order;
mod solvers;

pub use energy::EnergyFunctional;
pub use nonlinearity::{
    growth_check, truncate_nonlinearity_level, truncate_nonlinearity_order, truncate_nonlinearity_sign, GrowthRegime,
    GrowthReport, Nonlinearity, SignPart,
};
pub use order::{
    check_order_residuals, subsupersolution_solve, supersolution_certificate, OrderCertificate, OrderedPair, Role,
    SandwichMargin, SubsuperOutcome,
};
pub use solvers::{minimize_ball, minimize_delta_ball, minimize_free, solve_semilinear, SolveOptions, SolveReport, SolveStatus};
