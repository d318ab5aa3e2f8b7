//! Solver and existence-hypothesis verifier for fuzzy fractional differential
//! variational inequalities with integral boundary conditions.

pub mod config;
pub mod expr;
pub mod frac;
pub mod hypothesis;
pub mod fuzzy;
pub mod mild;
pub mod special;
pub mod vi;

pub use expr::{ExprError, Expression};
pub use frac::{caputo_residual, frac_integral, trapezoid_integral, FracError, FracIntegrator, GridFunction, UniformGrid};
pub use fuzzy::{fuzzy_metric, hausdorff, FuzzyBoxField, FuzzyError, FuzzyNumber, Interval, IntervalBox};
pub use special::{gamma, kernel_moment, SpecialError};
pub use vi::{solve_vi, vi_residual, AffineOperator, FeasibleSet, ViError, ViInstance, ViOptions, ViSolution};
pub use mild::{
    control_map, nearest_selection, phi_part, picard_solve, psi_part, selection_map, solve_band, BandRun, Diagnostics, MildError, MildOperator,
    ProblemSpec, SelectionPolicy, SolutionBundle, SolverConfig,
};
pub use hypothesis::{
    check_coercivity, compute_delta, compute_eta_s, compute_rho, estimate_constants, verify, BoundConstants, ClaimedBounds, HypothesisError,
    HypothesisReport, SamplingDomain,
};
pub use config::{load_with_overrides, ConfigError, Problem, ProblemConfig, EXAMPLE_CONFIG};
