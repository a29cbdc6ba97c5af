//! Marching the collocation solution across the mesh.
//!
//! Case 1 (`m = 1`, `c₁ > 0`) and case 2 (`m = 2`, `c₁ = 0`) reduce every step
//! to one scalar fixed-point problem `y = G(α + β y)`, solved with the
//! smallest-root policy. Other parameter sets go through a damped fixed-point
//! iteration that carries no existence guarantee.

use crate::error::{Error, Result};
use crate::fixedpoint::{min_nonzero_fixed_point, FixedPointOutcome, FixedPointQuery};
use crate::params::CaseKind;
use crate::problem::CollocationProblem;
use crate::quadrature::{lag_weights, WeightCache};
use crate::scalar::Scalar;
use crate::solution::{CollocationSolution, StepDiagnostics};

#[derive(Debug, Clone, PartialEq)]
pub struct StepState<T> {
    pub n: usize,
    /// `Fₙ(t_{n,i})`.
    pub lag: Vec<T>,
    pub coefficients: Vec<T>,
    pub diagnostics: StepDiagnostics<T>,
}

/// `Fₙ(t_{n,i}) = Σ_{l<n} h_l Σⱼ Bₙˡ(i,j) Z_{l,j}`, straight from the weight
/// integrals.
pub fn lag_term<T: Scalar>(
    problem: &CollocationProblem<T>,
    prefix: &[Vec<T>],
    n: usize,
    i: usize,
) -> Result<T> {
    let mut acc = T::zero();
    for (l, z) in prefix.iter().enumerate().take(n) {
        let hl = problem.mesh.h(l);
        for (j, &zj) in z.iter().enumerate() {
            acc = acc + hl * lag_weights(problem, n, l, i, j)? * zj;
        }
    }
    Ok(acc)
}

pub fn solve_step_case1<T: Scalar>(
    problem: &CollocationProblem<T>,
    prefix: &[Vec<T>],
    n: usize,
) -> Result<StepState<T>> {
    Stepper::new(problem).case1(prefix, n)
}

pub fn solve_step_case2<T: Scalar>(
    problem: &CollocationProblem<T>,
    prefix: &[Vec<T>],
    n: usize,
) -> Result<StepState<T>> {
    Stepper::new(problem).case2(prefix, n)
}

/// Experimental: damped iteration on the full `m`-dimensional step system.
pub fn solve_general_m<T: Scalar>(
    problem: &CollocationProblem<T>,
    prefix: &[Vec<T>],
    n: usize,
) -> Result<StepState<T>> {
    Stepper::new(problem).general(prefix, n)
}

pub fn solve<T: Scalar>(problem: &CollocationProblem<T>) -> Result<CollocationSolution<T>> {
    let mut stepper = Stepper::new(problem);
    let steps = problem.mesh.steps();
    let mut coefficients: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut diagnostics = Vec::with_capacity(steps);
    for n in 0..steps {
        let state = stepper.step(&coefficients, n)?;
        coefficients.push(state.coefficients);
        diagnostics.push(state.diagnostics);
    }
    Ok(CollocationSolution {
        mesh: problem.mesh.clone(),
        params: problem.params.clone(),
        coefficients,
        diagnostics,
    })
}

/// Relative residuals `|Z_{n,i} − G(Fₙ(t_{n,i}) + hₙ Σⱼ Bₙ(i,j) Z_{n,j})|` of a
/// coefficient table, with every weight recomputed from its integral.
pub fn equation_residuals<T: Scalar>(
    problem: &CollocationProblem<T>,
    coefficients: &[Vec<T>],
) -> Result<Vec<Vec<T>>> {
    let m = problem.m();
    if coefficients.len() != problem.mesh.steps() || coefficients.iter().any(|z| z.len() != m) {
        return Err(Error::InvalidParams(
            "coefficient table does not match the problem shape".into(),
        ));
    }
    let mut cache = WeightCache::uncached(problem);
    let mut out = Vec::with_capacity(coefficients.len());
    for (n, z) in coefficients.iter().enumerate() {
        let lag = cache.lag_terms(problem, coefficients, n)?;
        let b = cache.step_weights(problem, n)?;
        let h = problem.mesh.h(n);
        let row = (0..m)
            .map(|i| {
                let arg = lag[i] + h * (0..m).map(|j| b[i * m + j] * z[j]).sum::<T>();
                relative_gap(z[i], problem.nonlinearity.eval(arg))
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
fn relative_gap<T: Scalar>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else if !b.is_finite() {
        T::infinity()
    } else {
        (a - b).abs() / scale
    }
}

enum SeedResult<T> {
    Converged(Vec<T>),
    Trivial,
    Negative,
    NotConverged,
}

pub(crate) struct Stepper<'p, T> {
    problem: &'p CollocationProblem<T>,
    cache: WeightCache<T>,
}

impl<'p, T: Scalar> Stepper<'p, T> {
    pub(crate) fn new(problem: &'p CollocationProblem<T>) -> Self {
        Self {
            problem,
            cache: WeightCache::new(problem),
        }
    }

    pub(crate) fn step(&mut self, prefix: &[Vec<T>], n: usize) -> Result<StepState<T>> {
        match self.problem.params.case() {
            CaseKind::One => self.case1(prefix, n),
            CaseKind::Two => self.case2(prefix, n),
            CaseKind::General => self.general(prefix, n),
        }
    }

    fn check_prefix(&self, prefix: &[Vec<T>], n: usize) -> Result<()> {
        if n >= self.problem.mesh.steps() || prefix.len() < n {
            return Err(Error::InvalidParams(format!(
                "step {n} needs {n} prior steps on a mesh of {} steps, got {}",
                self.problem.mesh.steps(),
                prefix.len()
            )));
        }
        Ok(())
    }

    fn expect_case(&self, case: CaseKind) -> Result<()> {
        if self.problem.params.case() != case {
            return Err(Error::InvalidParams(format!(
                "parameters {:?} are not {case:?}",
                self.problem.params.c()
            )));
        }
        Ok(())
    }

    fn query(&self, alpha: T, beta: T) -> FixedPointQuery<'p, T> {
        FixedPointQuery::with_options(
            self.problem.nonlinearity.as_fn(),
            alpha,
            beta,
            &self.problem.options,
        )
    }

    /// The step-0 scalar query, `(α, β)`, along with any coefficients fixed
    /// before it (case 2's `Z₀,₁ = G(0)`).
    pub(crate) fn first_step_outcome(&mut self) -> Result<FixedPointOutcome<T>> {
        let h = self.problem.mesh.h(0);
        let b = self.cache.step_weights(self.problem, 0)?;
        match self.problem.params.case() {
            CaseKind::One => min_nonzero_fixed_point(&self.query(T::zero(), h * b[0])),
            CaseKind::Two => {
                let z1 = self.problem.nonlinearity.eval(T::zero());
                min_nonzero_fixed_point(&self.query(h * b[2] * z1, h * b[3]))
            }
            CaseKind::General => Err(Error::InvalidParams(
                "first-step query exists only for cases 1 and 2".into(),
            )),
        }
    }

    fn accept(&self, outcome: FixedPointOutcome<T>, n: usize) -> Result<(T, StepDiagnostics<T>)> {
        match outcome.y_star {
            Some(y) => Ok((
                y,
                StepDiagnostics {
                    roots_detected: outcome.roots_detected,
                    residual: outcome.residual.unwrap_or(T::zero()) / y,
                    nondivergent: true,
                },
            )),
            None if n == 0 => Err(Error::NoNontrivialSolution { step: 0 }),
            None => Err(Error::StepDivergence { step: n }),
        }
    }

    pub(crate) fn case1(&mut self, prefix: &[Vec<T>], n: usize) -> Result<StepState<T>> {
        self.expect_case(CaseKind::One)?;
        self.check_prefix(prefix, n)?;
        let lag = self.cache.lag_terms(self.problem, prefix, n)?;
        let b = self.cache.step_weights(self.problem, n)?;
        let beta = self.problem.mesh.h(n) * b[0];
        // n = 0: α = 0 exactly, and the zero root is excluded by the scan
        let outcome = min_nonzero_fixed_point(&self.query(lag[0], beta))?;
        let (z, diagnostics) = self.accept(outcome, n)?;
        Ok(StepState {
            n,
            lag,
            coefficients: vec![z],
            diagnostics,
        })
    }

    pub(crate) fn case2(&mut self, prefix: &[Vec<T>], n: usize) -> Result<StepState<T>> {
        self.expect_case(CaseKind::Two)?;
        self.check_prefix(prefix, n)?;
        let g = &self.problem.nonlinearity;
        let lag = self.cache.lag_terms(self.problem, prefix, n)?;
        let b = self.cache.step_weights(self.problem, n)?;
        let h = self.problem.mesh.h(n);
        let z1 = g.eval(lag[0]);
        if !z1.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                y: lag[0].to_f64().unwrap_or(f64::NAN),
            });
        }
        let alpha = lag[1] + h * b[2] * z1;
        let outcome = min_nonzero_fixed_point(&self.query(alpha, h * b[3]))?;
        let (z2, diagnostics) = self.accept(outcome, n)?;
        Ok(StepState {
            n,
            lag,
            coefficients: vec![z1, z2],
            diagnostics,
        })
    }

    pub(crate) fn general(&mut self, prefix: &[Vec<T>], n: usize) -> Result<StepState<T>> {
        self.check_prefix(prefix, n)?;
        let lag = self.cache.lag_terms(self.problem, prefix, n)?;
        let b = self.cache.step_weights(self.problem, n)?;
        let m = self.problem.m();

        let mut seeds: Vec<Vec<T>> = Vec::new();
        if n > 0 {
            seeds.push(prefix[n - 1].clone());
        }
        // 16 log-spaced scalars in [1e-12, 1e2]
        for k in 0..16 {
            let e = T::lit(-12.0) + T::lit(14.0) * T::from_usize_lossy(k) / T::lit(15.0);
            seeds.push(vec![T::lit(10.0).powf(e); m]);
        }

        let mut first_failure = None;
        for seed in seeds {
            match self.damped(&lag, &b, n, seed) {
                SeedResult::Converged(z) => {
                    let residual = self.step_residual(&lag, &b, n, &z);
                    return Ok(StepState {
                        n,
                        lag,
                        coefficients: z,
                        diagnostics: StepDiagnostics {
                            roots_detected: 1,
                            residual,
                            nondivergent: false,
                        },
                    });
                }
                other => {
                    first_failure.get_or_insert(other);
                }
            }
        }
        Err(match (n, first_failure) {
            (0, _) => Error::NoNontrivialSolution { step: 0 },
            (_, Some(SeedResult::Negative)) => Error::NegativeArgument { step: n },
            _ => Error::NonConvergence { step: n },
        })
    }

    fn arguments(&self, lag: &[T], b: &[T], n: usize, z: &[T]) -> Vec<T> {
        let m = z.len();
        let h = self.problem.mesh.h(n);
        (0..m)
            .map(|i| lag[i] + h * (0..m).map(|j| b[i * m + j] * z[j]).sum::<T>())
            .collect()
    }

    fn step_residual(&self, lag: &[T], b: &[T], n: usize, z: &[T]) -> T {
        let g = &self.problem.nonlinearity;
        self.arguments(lag, b, n, z)
            .into_iter()
            .zip(z)
            .map(|(a, &zi)| relative_gap(zi, g.eval(a)))
            .fold(T::zero(), T::max)
    }

    fn damped(&self, lag: &[T], b: &[T], n: usize, mut z: Vec<T>) -> SeedResult<T> {
        let opts = &self.problem.options;
        let g = &self.problem.nonlinearity;
        let omega = opts.damping;
        for _ in 0..opts.max_iterations {
            let args = self.arguments(lag, b, n, &z);
            if args.iter().any(|&a| a < T::zero()) {
                return SeedResult::Negative;
            }
            let next: Vec<T> = args.iter().map(|&a| g.eval(a)).collect();
            if next.iter().any(|v| !v.is_finite()) {
                return SeedResult::NotConverged;
            }
            let scale = next.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            let diff = next
                .iter()
                .zip(&z)
                .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
            if diff <= opts.root_tol * scale {
                return if scale == T::zero() {
                    SeedResult::Trivial
                } else {
                    SeedResult::Converged(next)
                };
            }
            for (zi, ni) in z.iter_mut().zip(&next) {
                *zi = (T::one() - omega) * *zi + omega * *ni;
            }
        }
        SeedResult::NotConverged
    }
}
