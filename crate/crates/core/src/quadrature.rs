//! Gauss–Legendre rules, the Lagrange basis of the collocation space and the
//! weight integrals
//!
//! ```text
//! Bₙ(i,j)  = ∫₀^{cᵢ} K(t_{n,i}, tₙ + s hₙ) Lⱼ(s) ds
//! Bₙˡ(i,j) = ∫₀¹    K(t_{n,i}, t_l + s h_l) Lⱼ(s) ds
//! ```
//!
//! All indices are zero-based. Rule nodes are interior, so kernel profiles
//! are never evaluated at a zero lag.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::Result;
use crate::kernel::{checked_value, KernelForm};
use crate::params::CollocationParameters;
use crate::problem::CollocationProblem;
use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn gauss_legendre(q: usize) -> Self {
        assert!(q > 0, "quadrature needs at least one node");
        let mut nodes = vec![0.0f64; q];
        let mut weights = vec![0.0f64; q];
        let qf = q as f64;
        // roots are symmetric; Newton on P_q from the Tricomi initial guess
        for i in 0..q.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[q - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[q - 1 - i] = 0.5 * w;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫₀¹ f`.
    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `∫ₐᵇ f`.
    pub fn integrate_on<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let len = b - a;
        len * self.integrate(|x| f(a + len * x))
    }
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `Lⱼ(v) = Π_{k≠j} (v − c_k)/(cⱼ − c_k)`; identically 1 when `m = 1`.
pub fn lagrange_basis<T: Scalar>(params: &CollocationParameters<T>, j: usize, v: T) -> T {
    let c = params.c();
    c.iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .fold(T::one(), |acc, (_, &ck)| acc * (v - ck) / (c[j] - ck))
}

/// `Bₙ(i,j)` as an `m × m` table.
pub fn step_weights<T: Scalar>(problem: &CollocationProblem<T>, n: usize) -> Result<Vec<Vec<T>>> {
    let mut cache = WeightCache::new(problem);
    let flat = cache.step_weights(problem, n)?;
    let m = problem.m();
    Ok(flat.chunks(m).map(|row| row.to_vec()).collect())
}

/// `Bₙˡ(i,j)` for `l < n`.
pub fn lag_weights<T: Scalar>(
    problem: &CollocationProblem<T>,
    n: usize,
    l: usize,
    i: usize,
    j: usize,
) -> Result<T> {
    let rule = QuadratureRule::gauss_legendre(problem.options.quad_nodes);
    let basis: Vec<T> = rule
        .nodes()
        .iter()
        .map(|&x| lagrange_basis(&problem.params, j, x))
        .collect();
    lag_integral(problem, &rule, &basis, 1, 0, n, l, i)
}

/// `∫₀¹ K(t_{n,i}, t_l + x h_l) Lⱼ(x) dx` with the basis values
/// `basis[r * stride + j]` at the rule nodes.
#[allow(clippy::too_many_arguments)]
fn lag_integral<T: Scalar>(
    problem: &CollocationProblem<T>,
    rule: &QuadratureRule<T>,
    basis: &[T],
    stride: usize,
    j: usize,
    n: usize,
    l: usize,
    i: usize,
) -> Result<T> {
    let mesh = &problem.mesh;
    let (tn, hn, tl, hl) = (mesh.t(n), mesh.h(n), mesh.t(l), mesh.h(l));
    let ci = problem.params.c()[i];
    let t = tn + ci * hn;
    let mut acc = T::zero();
    for (r, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
        let s = tl + x * hl;
        let value = match problem.kernel.form() {
            KernelForm::Convolution(k) => k((tn - tl) + ci * hn - x * hl),
            KernelForm::General(k) => k(t, s),
        };
        acc = acc + w * checked_value(t, s, value)? * basis[r * stride + j];
    }
    Ok(acc)
}

/// Per-solve weight storage. Step weights of convolution kernels depend only
/// on `hₙ` and are keyed by it; on uniform meshes lag weights depend only on
/// `n − l` and are stored by that offset.
#[derive(Debug, Clone)]
pub struct WeightCache<T> {
    rule: QuadratureRule<T>,
    m: usize,
    /// `Lⱼ(x_r)` at `[r * m + j]`.
    lag_basis: Vec<T>,
    /// `Lⱼ(cᵢ x_r)` at `[(i * q + r) * m + j]`.
    step_basis: Vec<T>,
    step_by_h: HashMap<u64, Vec<T>>,
    lag_by_offset: Vec<Vec<T>>,
    offsets_enabled: bool,
    step_caching: bool,
}

impl<T: Scalar> WeightCache<T> {
    pub fn new(problem: &CollocationProblem<T>) -> Self {
        let mut cache = Self::uncached(problem);
        cache.offsets_enabled = problem.kernel.is_convolution() && problem.mesh.is_uniform();
        cache.step_caching = problem.kernel.is_convolution();
        cache
    }

    /// Every weight recomputed from its defining integral on each request.
    pub fn uncached(problem: &CollocationProblem<T>) -> Self {
        let rule = QuadratureRule::gauss_legendre(problem.options.quad_nodes);
        let params = &problem.params;
        let m = params.m();
        let q = rule.len();
        let mut lag_basis = Vec::with_capacity(q * m);
        for &x in rule.nodes() {
            for j in 0..m {
                lag_basis.push(lagrange_basis(params, j, x));
            }
        }
        let mut step_basis = Vec::with_capacity(m * q * m);
        for &ci in params.c() {
            for &x in rule.nodes() {
                for j in 0..m {
                    step_basis.push(lagrange_basis(params, j, ci * x));
                }
            }
        }
        Self {
            rule,
            m,
            lag_basis,
            step_basis,
            step_by_h: HashMap::new(),
            lag_by_offset: Vec::new(),
            offsets_enabled: false,
            step_caching: false,
        }
    }

    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
    }

    /// Flattened `Bₙ(i,j)` at `[i * m + j]`.
    pub fn step_weights(&mut self, problem: &CollocationProblem<T>, n: usize) -> Result<Vec<T>> {
        let hn = problem.mesh.h(n);
        let convolution = self.step_caching;
        if convolution {
            if let Some(w) = self.step_by_h.get(&hn.cache_key()) {
                return Ok(w.clone());
            }
        }
        let m = self.m;
        let q = self.rule.len();
        let tn = problem.mesh.t(n);
        let mut out = vec![T::zero(); m * m];
        for (i, &ci) in problem.params.c().iter().enumerate() {
            let t = tn + ci * hn;
            for (r, (&x, &w)) in self.rule.nodes().iter().zip(self.rule.weights()).enumerate() {
                let s = tn + ci * x * hn;
                let value = match problem.kernel.form() {
                    KernelForm::Convolution(k) => k(ci * (T::one() - x) * hn),
                    KernelForm::General(k) => k(t, s),
                };
                let kv = checked_value(t, s, value)? * w * ci;
                for j in 0..m {
                    out[i * m + j] = out[i * m + j] + kv * self.step_basis[(i * q + r) * m + j];
                }
            }
        }
        if convolution {
            self.step_by_h.insert(hn.cache_key(), out.clone());
        }
        Ok(out)
    }

    /// Flattened `Bₙˡ(i,j)` at `[i * m + j]`.
    pub fn lag_block(&mut self, problem: &CollocationProblem<T>, n: usize, l: usize) -> Result<Vec<T>> {
        if self.offsets_enabled {
            self.fill_offsets(problem, n - l)?;
            return Ok(self.lag_by_offset[n - l].clone());
        }
        self.compute_lag_block(problem, n, l)
    }

    fn compute_lag_block(&self, problem: &CollocationProblem<T>, n: usize, l: usize) -> Result<Vec<T>> {
        let m = self.m;
        let mut out = vec![T::zero(); m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = lag_integral(problem, &self.rule, &self.lag_basis, m, j, n, l, i)?;
            }
        }
        Ok(out)
    }

    fn fill_offsets(&mut self, problem: &CollocationProblem<T>, up_to: usize) -> Result<()> {
        if self.lag_by_offset.is_empty() {
            // offset 0 is never a lag
            self.lag_by_offset.push(Vec::new());
        }
        while self.lag_by_offset.len() <= up_to {
            let d = self.lag_by_offset.len();
            let block = self.compute_lag_block(problem, d, 0)?;
            self.lag_by_offset.push(block);
        }
        Ok(())
    }

    /// Lag terms `Fₙ(t_{n,i}) = Σ_l h_l Σⱼ Bₙˡ(i,j) Z_{l,j}` for every `i`.
    pub fn lag_terms(
        &mut self,
        problem: &CollocationProblem<T>,
        prefix: &[Vec<T>],
        n: usize,
    ) -> Result<Vec<T>> {
        let m = self.m;
        let mut out = vec![T::zero(); m];
        if n == 0 {
            return Ok(out);
        }
        if self.offsets_enabled {
            self.fill_offsets(problem, n)?;
            let h = problem.mesh.h(0);
            for (l, z) in prefix.iter().enumerate().take(n) {
                let block = &self.lag_by_offset[n - l];
                for i in 0..m {
                    let mut acc = T::zero();
                    for j in 0..m {
                        acc = acc + block[i * m + j] * z[j];
                    }
                    out[i] = out[i] + h * acc;
                }
            }
        } else {
            for (l, z) in prefix.iter().enumerate().take(n) {
                let block = self.compute_lag_block(problem, n, l)?;
                let hl = problem.mesh.h(l);
                for i in 0..m {
                    let mut acc = T::zero();
                    for j in 0..m {
                        acc = acc + block[i * m + j] * z[j];
                    }
                    out[i] = out[i] + hl * acc;
                }
            }
        }
        Ok(out)
    }
}
