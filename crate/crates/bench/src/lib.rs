//! Shared fixtures for the benchmarks.

use fracvi::{GridFunction, Problem, ProblemConfig, UniformGrid};

/// The built-in example on a grid of `intervals` intervals.
pub fn example_problem(intervals: usize) -> Problem {
    let mut config = ProblemConfig::example();
    config.solver.intervals = intervals;
    config.build().expect("built-in example builds")
}

/// A smooth scalar grid function on `[0, t_end]`.
pub fn smooth_function(t_end: f64, intervals: usize) -> GridFunction {
    let grid = UniformGrid::new(t_end, intervals).expect("valid grid");
    GridFunction::from_fn(grid, 1, |t| vec![(2.0 * t).sin() + t * t]).expect("finite values")
}
