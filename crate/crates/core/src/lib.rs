//! Level-m approximations of the N-point Sierpinski gasket, their
//! renormalized energies, nonlinear Robin boundary terms and the
//! backward-Euler subgradient flow they generate.

pub mod energy;
pub mod error;
pub mod export;
pub mod flow;
pub mod gasket;
pub mod measure;
pub mod numeric;
pub mod robin;
pub mod verify;

pub use energy::{
    energy_profile, harmonic_extend, harmonic_function, renormalization, EnergyForm, ExtensionRule,
};
pub use error::{GasketError, Result};
pub use flow::{
    backward_euler_step, evolve, normal_derivative, poisson_solve, BackwardEuler, EvolveError,
    FlowConfig, PoissonSolution, StepDiagnostics, Trajectory,
};
pub use gasket::{
    build_level, embed, restrict, GasketGraph, GraphTag, VertexAddress, VertexFunction,
};
pub use measure::{vertex_measure, MeasureWeights, VertexMeasure};
pub use robin::{eval_wb, BoundaryFunctional, Interval, RobinSpec};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
