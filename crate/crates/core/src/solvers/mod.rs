//! Sparse factorization, generalized eigenproblems and time stepping.

pub mod eigen;
pub mod factor;
pub mod integrate;

pub use eigen::{default_shift, eigenmodes, relative_residual, ModeSet};
pub use factor::{solve_spd, FactorizedOperator};
pub use integrate::{
    simulate, step_count, step_midpoint, MidpointStepper, NewmarkStepper, StepState, Trajectory,
    TrajectoryPoint,
};
