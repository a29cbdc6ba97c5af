use crate::error::Result;
use crate::mesh::Mesh;
use crate::params::CollocationParameters;
use crate::quadrature::lagrange_basis;
use crate::scalar::Scalar;

/// What the step solver saw when it picked a step's coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics<T> {
    /// Sign changes of `G(α + βy) − y` found by the root scan (1 for the
    /// iterative general-m path).
    pub roots_detected: usize,
    /// Residual of the accepted fixed point.
    pub residual: T,
    /// The smallest nonzero fixed point was selected.
    pub nondivergent: bool,
}

/// The coefficient table `Z[n][i] = z_h(t_{n,i})` of a collocation solution.
#[derive(Debug, Clone)]
pub struct CollocationSolution<T> {
    pub mesh: Mesh<T>,
    pub params: CollocationParameters<T>,
    pub coefficients: Vec<Vec<T>>,
    pub diagnostics: Vec<StepDiagnostics<T>>,
}

impl<T: Scalar> CollocationSolution<T> {
    #[inline]
    pub fn z(&self, n: usize, i: usize) -> T {
        self.coefficients[n][i]
    }

    /// `Σⱼ Lⱼ(v) Z[n][j]` for `v ∈ [0, 1]`. At `v = cᵢ` this is exactly
    /// `Z[n][i]`; with `c₁ = 0` it is the only way to reach `t_{n,1}` since
    /// `tₙ` itself belongs to `σₙ₋₁`.
    pub fn evaluate_on_step(&self, n: usize, v: T) -> T {
        let c = self.params.c();
        let snap = T::lit(4.0) * T::epsilon();
        if let Some(i) = c.iter().position(|&ci| (v - ci).abs() <= snap * ci.max(T::one())) {
            return self.coefficients[n][i];
        }
        (0..c.len())
            .map(|j| lagrange_basis(&self.params, j, v) * self.coefficients[n][j])
            .sum()
    }

    /// `z_h(t)` for `t ∈ (0, T]`.
    pub fn evaluate(&self, t: T) -> Result<T> {
        let (n, v) = self.mesh.locate(t)?;
        Ok(self.evaluate_on_step(n, v))
    }
}

pub fn evaluate_solution<T: Scalar>(sol: &CollocationSolution<T>, t: T) -> Result<T> {
    sol.evaluate(t)
}
