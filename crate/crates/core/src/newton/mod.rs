//! The beta family of complex Monge-Ampere equations, solved by damped Newton with continuation.

mod archive;
pub mod krylov;
mod solver;
mod system;

pub use solver::{
    continuation_sweep, default_schedule, doubling_schedule, solve_beta, BetaSolution,
    ConvergenceRecord, MaxPrincipleBox, NewtonOptions, SweepResult,
};
pub use archive::{read_sweep_dir, write_sweep_dir, SWEEP_MANIFEST};
pub use system::{density_residual, ma_residual};
