//! Time-dependent experiments: the prey–predator collision of two Dirac
//! populations, forward heat flow with and without cubic absorption, the
//! explicit ill-posed heat families, and first-order Godunov schemes built on
//! the jump relations of [`crate::riemann`].

pub mod godunov;
pub mod heat;
pub mod prey_predator;

pub use godunov::{
    godunov_scalar, godunov_system, riemann_cells, shock_position_eoc, Boundary, ScalarEvolution, SystemEvolution,
    SystemWaves, UniformGrid,
};
pub use heat::{
    backward_heat_series, delta_vanishing_check, family_report, heat_kernel_pairing, illposed_family, simulate_heat,
    sine_coefficients, DeltaVanishingReport, FamilyRow, HeatProblem, HeatRun,
};
pub use prey_predator::{
    beta, prey_mass_after, simulate_prey_predator, BetaReport, PreyPredatorProblem, PreyPredatorRun,
};
