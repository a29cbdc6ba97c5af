//! Collocation solvers for implicitly linear homogeneous Volterra integral
//! equations
//!
//! ```text
//! z(t) = G( ∫₀ᵗ K(t, s) z(s) ds ),    y = V z,
//! ```
//!
//! where `G` is a non-Lipschitz nonlinearity with `G(0) = 0`, so the zero
//! function is always a solution and the interesting object is a
//! *nontrivial* collocation solution. Each collocation step reduces to
//! finding nonzero fixed points of a scalar map `y ↦ G(α + β y)`; the solver
//! always selects the smallest one (the nondivergent branch).
//!
//! The numerical core is generic over the floating point type through
//! [`Scalar`]. The aliases at the crate root fix it to `f64`, which is what
//! the CLI and the reproduction commands use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fixedpoint;
pub mod kernel;
pub mod mesh;
pub mod nonlinearity;
pub mod params;
pub mod postprocess;
pub mod problem;
pub mod quadrature;
pub mod scalar;
pub mod solution;
pub mod solver;

pub use analysis::{
    classify_existence, nondivergence_probe, ExistenceCategory, ExistenceReport, FiredRule,
    NondivergenceDiagnostic, ProbeVerdict, Rule,
};
pub use error::{Error, Result};
pub use fixedpoint::{
    min_nonzero_fixed_point, scan_fixed_points, FixedPointOutcome, FixedPointQuery,
    FixedPointStatus,
};
pub use kernel::{KernelForm, KernelSpec};
pub use mesh::Mesh;
pub use nonlinearity::{NonlinearitySpec, RatioProperties};
pub use params::{CaseKind, CollocationParameters};
pub use postprocess::{
    apply_volterra, convergence_sweep, parameter_grid, relative_error, CaseTag, Optimum, PowerLaw,
    SweepResult, SweepRow,
};
pub use problem::{make_problem, CollocationProblem, SolverOptions};
pub use quadrature::{lag_weights, lagrange_basis, step_weights, QuadratureRule, WeightCache};
pub use scalar::Scalar;
pub use solution::{evaluate_solution, CollocationSolution, StepDiagnostics};
pub use solver::{
    equation_residuals, lag_term, solve, solve_general_m, solve_step_case1, solve_step_case2,
    StepState,
};

/// Double precision kernel.
pub type Kernel = KernelSpec<f64>;
/// Double precision nonlinearity.
pub type Nonlinearity = NonlinearitySpec<f64>;
/// Double precision mesh.
pub type Mesh64 = Mesh<f64>;
/// Double precision collocation parameters.
pub type Params = CollocationParameters<f64>;
/// Double precision problem.
pub type Problem = CollocationProblem<f64>;
/// Double precision solution.
pub type Solution = CollocationSolution<f64>;
/// Double precision solver options.
pub type Options = SolverOptions<f64>;
