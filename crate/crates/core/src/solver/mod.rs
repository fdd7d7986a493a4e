//! Periodic solutions by Picard iteration on the Duhamel period map.

mod picard;
mod quadrature;

pub use picard::{
    contraction_estimate, dealiased_cubic, equation_residual, picard_step, solve_periodic,
    split_residuals, PeriodicSolveReport, SolveError, SolveOptions,
};
pub use quadrature::{
    duhamel_all, duhamel_integral, linear_period_map, periodic_initial_data, phi1, phi2,
    StepCoefficients, TimeQuadrature,
};
