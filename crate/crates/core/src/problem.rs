use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::nonlinearity::NonlinearitySpec;
use crate::params::CollocationParameters;
use crate::scalar::Scalar;

/// Knobs for quadrature and the scalar fixed-point engine.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions<T> {
    /// Gauss–Legendre nodes per weight integral.
    pub quad_nodes: usize,
    /// Relative tolerance on fixed-point residuals.
    pub root_tol: T,
    /// First point of the geometric root scan.
    pub scan_floor: T,
    /// The scan stops at `scan_cap_factor · max(1, G(α))`.
    pub scan_cap_factor: T,
    pub scan_ratio: T,
    /// Subdivisions of each ratio cell; raise to resolve close root pairs.
    pub scan_refinement: usize,
    /// Damping of the general-m iteration.
    pub damping: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            quad_nodes: 16,
            root_tol: T::lit(1e-12),
            scan_floor: T::lit(1e-300).max(T::min_positive_value()),
            scan_cap_factor: T::lit(1e12),
            scan_ratio: T::lit(2.0),
            scan_refinement: 1,
            damping: T::lit(0.5),
            max_iterations: 10_000,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.quad_nodes == 0 {
            return bad("quadrature needs at least one node");
        }
        if !(self.root_tol > T::zero()) {
            return bad("root tolerance must be positive");
        }
        if !(self.scan_floor > T::zero()) || !(self.scan_cap_factor > self.scan_floor) {
            return bad("need 0 < scan floor < scan cap");
        }
        if !(self.scan_ratio > T::one()) || self.scan_refinement == 0 {
            return bad("scan ratio must exceed 1 and refinement be >= 1");
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return bad("damping must lie in (0, 1]");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CollocationProblem<T> {
    pub kernel: KernelSpec<T>,
    pub nonlinearity: NonlinearitySpec<T>,
    pub mesh: Mesh<T>,
    pub params: CollocationParameters<T>,
    pub options: SolverOptions<T>,
}

/// Validates and assembles a problem. Rejects `m = 1` with `c₁ = 0`, where
/// only the zero function solves the collocation equations.
pub fn make_problem<T: Scalar>(
    kernel: KernelSpec<T>,
    nonlinearity: NonlinearitySpec<T>,
    mesh: Mesh<T>,
    params: CollocationParameters<T>,
    options: SolverOptions<T>,
) -> Result<CollocationProblem<T>> {
    if params.is_trivial_only() {
        return Err(Error::InvalidParams(
            "m = 1 with c1 = 0 has only the trivial collocation solution".into(),
        ));
    }
    options.validate()?;
    Ok(CollocationProblem {
        kernel,
        nonlinearity,
        mesh,
        params,
        options,
    })
}

impl<T: Scalar> CollocationProblem<T> {
    pub fn m(&self) -> usize {
        self.params.m()
    }

    /// `t_{n,i} = tₙ + cᵢ hₙ` (`i` zero-based).
    #[inline]
    pub fn collocation_point(&self, n: usize, i: usize) -> T {
        self.mesh.t(n) + self.params.c()[i] * self.mesh.h(n)
    }

    /// Same problem on another mesh.
    pub fn with_mesh(&self, mesh: Mesh<T>) -> Self {
        Self {
            mesh,
            ..self.clone()
        }
    }

    pub fn with_params(&self, params: CollocationParameters<T>) -> Result<Self> {
        make_problem(
            self.kernel.clone(),
            self.nonlinearity.clone(),
            self.mesh.clone(),
            params,
            self.options.clone(),
        )
    }
}
