//! Recovering `y_h = V z_h`, error norms against a reference solution, and
//! `(h, c)` sweeps.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{checked_value, KernelForm};
use crate::mesh::Mesh;
use crate::params::CollocationParameters;
use crate::problem::CollocationProblem;
use crate::quadrature::{lagrange_basis, QuadratureRule};
use crate::scalar::Scalar;
use crate::solution::CollocationSolution;
use crate::solver::solve;

/// `y_h(t) = ∫₀ᵗ K(t, s) z_h(s) ds`, subinterval by subinterval.
pub fn apply_volterra<T: Scalar>(
    problem: &CollocationProblem<T>,
    sol: &CollocationSolution<T>,
    t: T,
) -> Result<T> {
    let rule = QuadratureRule::gauss_legendre(problem.options.quad_nodes);
    volterra_with_rule(problem, sol, &rule, t)
}

fn volterra_with_rule<T: Scalar>(
    problem: &CollocationProblem<T>,
    sol: &CollocationSolution<T>,
    rule: &QuadratureRule<T>,
    t: T,
) -> Result<T> {
    let mesh = &sol.mesh;
    let end = mesh.end();
    if !(t >= T::zero()) || t > end {
        return Err(Error::OutOfDomain {
            t: t.to_f64().unwrap_or(f64::NAN),
            end: end.to_f64().unwrap_or(f64::NAN),
        });
    }
    let params = &sol.params;
    let m = params.m();
    let mut total = T::zero();
    for l in 0..mesh.steps() {
        let (tl, hl) = (mesh.t(l), mesh.h(l));
        if tl >= t {
            break;
        }
        let z = &sol.coefficients[l];
        let full = mesh.t(l + 1) <= t;
        // fraction of σ_l covered
        let w = if full { T::one() } else { (t - tl) / hl };
        let mut acc = T::zero();
        for (&x, &wq) in rule.nodes().iter().zip(rule.weights()) {
            let v = w * x;
            let s = tl + v * hl;
            let value = match problem.kernel.form() {
                KernelForm::Convolution(k) if full => k((t - tl) - v * hl),
                KernelForm::Convolution(k) => k(w * hl * (T::one() - x)),
                KernelForm::General(k) => k(t, s),
            };
            let zh: T = (0..m).map(|j| lagrange_basis(params, j, v) * z[j]).sum();
            acc = acc + wq * checked_value(t, s, value)? * zh;
        }
        total = total + hl * w * acc;
    }
    Ok(total)
}

/// `y_h` at `t_p + x_r h_p` for every subinterval `p` and rule node `x_r`,
/// `p`-major. Convolution kernels on uniform meshes reuse weights that depend
/// only on `p − l`.
fn volterra_at_nodes<T: Scalar>(
    problem: &CollocationProblem<T>,
    sol: &CollocationSolution<T>,
    rule: &QuadratureRule<T>,
) -> Result<Vec<T>> {
    let mesh = &sol.mesh;
    let steps = mesh.steps();
    let q = rule.len();
    let k = match problem.kernel.form() {
        KernelForm::Convolution(k) if mesh.is_uniform() => k,
        _ => {
            let mut out = Vec::with_capacity(steps * q);
            for p in 0..steps {
                for &x in rule.nodes() {
                    out.push(volterra_with_rule(problem, sol, rule, mesh.t(p) + x * mesh.h(p))?);
                }
            }
            return Ok(out);
        }
    };
    let params = &sol.params;
    let m = params.m();
    let h = mesh.h(0);
    let basis: Vec<T> = rule
        .nodes()
        .iter()
        .flat_map(|&x| (0..m).map(move |j| lagrange_basis(params, j, x)))
        .collect();
    let check = |u: T, v: T| checked_value(u, T::zero(), v);

    // partial[r][j] = x_r ∫₀¹ k(x_r (1 − x) h) Lⱼ(x_r x) dx
    let mut partial = vec![T::zero(); q * m];
    for (r, &xr) in rule.nodes().iter().enumerate() {
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let u = xr * (T::one() - x) * h;
            let kv = check(u, k(u))? * w * xr;
            for j in 0..m {
                partial[r * m + j] = partial[r * m + j] + kv * lagrange_basis(params, j, xr * x);
            }
        }
    }
    // full[d][r][j] = ∫₀¹ k((d + x_r − x) h) Lⱼ(x) dx, d = p − l >= 1
    let mut full = vec![T::zero(); steps * q * m];
    for d in 1..steps {
        let df = T::from_usize_lossy(d);
        for (r, &xr) in rule.nodes().iter().enumerate() {
            for (s, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                let u = (df + xr - x) * h;
                let kv = check(u, k(u))? * w;
                let base = (d * q + r) * m;
                for j in 0..m {
                    full[base + j] = full[base + j] + kv * basis[s * m + j];
                }
            }
        }
    }
    let z = &sol.coefficients;
    let mut out = vec![T::zero(); steps * q];
    for p in 0..steps {
        for r in 0..q {
            let mut acc: T = (0..m).map(|j| partial[r * m + j] * z[p][j]).sum();
            for (l, zl) in z.iter().enumerate().take(p) {
                let base = ((p - l) * q + r) * m;
                for j in 0..m {
                    acc = acc + full[base + j] * zl[j];
                }
            }
            out[p * q + r] = h * acc;
        }
    }
    Ok(out)
}

/// `∫_I |y_h − y| / ∫_I y` with composite Gauss–Legendre on the solution mesh.
pub fn relative_error<T: Scalar, F>(
    problem: &CollocationProblem<T>,
    sol: &CollocationSolution<T>,
    reference: F,
) -> Result<T>
where
    F: Fn(T) -> T,
{
    let rule = QuadratureRule::gauss_legendre(problem.options.quad_nodes);
    let values = volterra_at_nodes(problem, sol, &rule)?;
    let mesh = &sol.mesh;
    let q = rule.len();
    let (mut num, mut den) = (T::zero(), T::zero());
    for p in 0..mesh.steps() {
        let (tp, hp) = (mesh.t(p), mesh.h(p));
        for (r, (&x, &w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
            let y = reference(tp + x * hp);
            num = num + hp * w * (values[p * q + r] - y).abs();
            den = den + hp * w * y;
        }
    }
    if !(den > T::zero()) {
        return Err(Error::DegenerateReference);
    }
    Ok(num / den)
}

/// The two scalar-reducible parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// `m = 1`, the swept value is `c₁`.
    One,
    /// `m = 2`, `c₁ = 0`, the swept value is `c₂`.
    Two,
}

impl CaseTag {
    pub fn m(self) -> usize {
        match self {
            CaseTag::One => 1,
            CaseTag::Two => 2,
        }
    }

    pub fn params<T: Scalar>(self, c: T) -> Result<CollocationParameters<T>> {
        match self {
            CaseTag::One => CollocationParameters::case_one(c),
            CaseTag::Two => CollocationParameters::case_two(c),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CaseTag::One => "1",
            CaseTag::Two => "2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub case: CaseTag,
    pub m: usize,
    pub h: T,
    pub c: T,
    /// The step error when the solve failed.
    pub result: Result<T, Error>,
    pub runtime: Duration,
}

impl<T: Scalar> SweepRow<T> {
    pub fn error_value(&self) -> Option<T> {
        self.result.as_ref().ok().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum<T> {
    pub h: T,
    pub min_c: T,
    pub min_error: T,
    pub max_c: T,
    pub max_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub case: CaseTag,
    pub hs: Vec<T>,
    /// Sorted by `(h, c)`, whatever the completion order.
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Scalar> SweepResult<T> {
    pub fn rows_for(&self, h: T) -> impl Iterator<Item = &SweepRow<T>> {
        self.rows.iter().filter(move |r| r.h == h)
    }

    /// Grid argmin and argmax of the relative error for one `h`.
    pub fn optimum(&self, h: T) -> Option<Optimum<T>> {
        let mut best: Option<Optimum<T>> = None;
        for row in self.rows_for(h) {
            let Some(e) = row.error_value() else { continue };
            let o = best.get_or_insert(Optimum {
                h,
                min_c: row.c,
                min_error: e,
                max_c: row.c,
                max_error: e,
            });
            if e < o.min_error {
                o.min_error = e;
                o.min_c = row.c;
            }
            if e > o.max_error {
                o.max_error = e;
                o.max_c = row.c;
            }
        }
        best
    }

    pub fn optima(&self) -> Vec<Optimum<T>> {
        self.hs.iter().filter_map(|&h| self.optimum(h)).collect()
    }

    /// `error(hₖ) / error(hₖ₊₁)` at a fixed `c` for consecutive entries of the
    /// `h` list.
    pub fn ratios_at(&self, c: T) -> Vec<Option<T>> {
        let at = |h: T| {
            self.rows_for(h)
                .find(|r| (r.c - c).abs() <= T::lit(1e-12))
                .and_then(|r| r.error_value())
        };
        self.hs
            .windows(2)
            .map(|w| match (at(w[0]), at(w[1])) {
                (Some(a), Some(b)) if b > T::zero() => Some(a / b),
                _ => None,
            })
            .collect()
    }

    /// Ratios of the per-`h` minimum and maximum errors between consecutive
    /// `h` values, as `(min ratio, max ratio)`.
    pub fn optimum_ratios(&self) -> Vec<(T, T)> {
        self.optima()
            .windows(2)
            .map(|w| (w[0].min_error / w[1].min_error, w[0].max_error / w[1].max_error))
            .collect()
    }
}

/// One solve and one relative error per `(h, c)` pair, in parallel. Failed
/// solves are recorded in their row and the sweep continues.
pub fn convergence_sweep<T: Scalar, F>(
    base: &CollocationProblem<T>,
    hs: &[T],
    cs: &[T],
    case: CaseTag,
    reference: F,
) -> Result<SweepResult<T>>
where
    F: Fn(T) -> T + Sync,
{
    let end = base.mesh.end();
    let meshes = hs
        .iter()
        .map(|&h| Mesh::with_step(end, h))
        .collect::<Result<Vec<_>>>()?;
    let params = cs
        .iter()
        .map(|&c| case.params(c))
        .collect::<Result<Vec<_>>>()?;
    if case == CaseTag::One && params.iter().any(|p| p.is_trivial_only()) {
        return Err(Error::InvalidParams("case 1 needs c1 > 0".into()));
    }

    let jobs: Vec<(usize, usize)> = (0..hs.len())
        .flat_map(|a| (0..cs.len()).map(move |b| (a, b)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(a, b)| {
            let started = Instant::now();
            let problem = CollocationProblem {
                mesh: meshes[a].clone(),
                params: params[b].clone(),
                ..base.clone()
            };
            let result = solve(&problem).and_then(|sol| relative_error(&problem, &sol, &reference));
            SweepRow {
                case,
                m: case.m(),
                h: hs[a],
                c: cs[b],
                result,
                runtime: started.elapsed(),
            }
        })
        .collect::<Vec<_>>();
    let mut rows = rows;
    rows.sort_by(|a, b| a.h.partial_cmp(&b.h).unwrap().then(a.c.partial_cmp(&b.c).unwrap()));
    Ok(SweepResult {
        case,
        hs: hs.to_vec(),
        rows,
    })
}

/// The nontrivial solution `y(t) = λ t^γ` of `y = ∫₀ᵗ (t − s)^a y(s)^{1/b} ds`,
/// with `γ = (a + 1) b / (b − 1)` and `λ = B(a + 1, γ/b + 1)^{b/(b−1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw<T> {
    pub scale: T,
    pub exponent: T,
    root: T,
}

impl<T: Scalar> PowerLaw<T> {
    pub fn for_power_pair(a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) || !(b > T::one()) {
            return Err(Error::InvalidParams("power pair needs a > 0 and b > 1".into()));
        }
        let (af, bf) = (a.to_f64().unwrap(), b.to_f64().unwrap());
        let gamma = (af + 1.0) * bf / (bf - 1.0);
        let p = af + 1.0;
        let q = gamma / bf + 1.0;
        let ln_beta = libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(p + q);
        Ok(Self {
            scale: T::lit((ln_beta * bf / (bf - 1.0)).exp()),
            exponent: T::lit(gamma),
            root: b,
        })
    }

    /// `y(t)`.
    pub fn eval(&self, t: T) -> T {
        self.scale * t.powf(self.exponent)
    }

    /// `z(t) = y(t)^{1/b}`.
    pub fn density(&self, t: T) -> T {
        self.eval(t).powf(self.root.recip())
    }
}

/// `c_min, c_min + step, …` up to `c_max` inclusive, built by index so the
/// grid does not drift.
pub fn parameter_grid<T: Scalar>(c_min: T, c_max: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(c_max >= c_min) {
        return Err(Error::InvalidParams("bad parameter grid".into()));
    }
    let count = ((c_max - c_min) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=count)
        .map(|k| c_min + step * T::from_usize_lossy(k))
        .map(|c| c.min(c_max))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::problem::{make_problem, SolverOptions};
    use crate::solution::StepDiagnostics;

    fn base(kernel: KernelSpec<f64>, steps: usize, c: Vec<f64>) -> CollocationProblem<f64> {
        make_problem(
            kernel,
            NonlinearitySpec::power_root(2.0).unwrap(),
            Mesh::uniform(1.0, steps).unwrap(),
            CollocationParameters::new(c).unwrap(),
            SolverOptions::default(),
        )
        .unwrap()
    }

    fn injected(problem: &CollocationProblem<f64>, z: impl Fn(f64) -> f64) -> CollocationSolution<f64> {
        let mesh = problem.mesh.clone();
        let params = problem.params.clone();
        let coefficients = (0..mesh.steps())
            .map(|n| {
                params
                    .c()
                    .iter()
                    .map(|&ci| z(mesh.t(n) + ci * mesh.h(n)))
                    .collect()
            })
            .collect();
        CollocationSolution {
            diagnostics: vec![
                StepDiagnostics {
                    roots_detected: 1,
                    residual: 0.0,
                    nondivergent: true
                };
                mesh.steps()
            ],
            mesh,
            params,
            coefficients,
        }
    }

    #[test]
    fn volterra_at_zero_is_zero() {
        let p = base(KernelSpec::power_convolution(1.0).unwrap(), 4, vec![0.5]);
        let s = injected(&p, |_| 1.0);
        assert_eq!(apply_volterra(&p, &s, 0.0).unwrap(), 0.0);
        assert!(apply_volterra(&p, &s, 1.1).is_err());
    }

    #[test]
    fn constant_kernel_and_density_give_identity() {
        let p = base(KernelSpec::constant(1.0), 8, vec![0.5]);
        let s = injected(&p, |_| 1.0);
        for t in [0.05, 0.125, 0.3, 1.0] {
            assert!((apply_volterra(&p, &s, t).unwrap() - t).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_density_reproduces_exact_solution() {
        // z = t²/12 is exactly representable with three parameters
        let p = base(KernelSpec::power_convolution(1.0).unwrap(), 10, vec![0.1, 0.5, 0.9]);
        let s = injected(&p, |t| t * t / 12.0);
        for t in [0.5f64, 1.0, 0.37] {
            let want = t.powi(4) / 144.0;
            assert!(((apply_volterra(&p, &s, t).unwrap() - want) / want).abs() < 1e-13);
        }
        assert!(relative_error(&p, &s, |t| t.powi(4) / 144.0).unwrap() < 1e-12);
    }

    #[test]
    fn cached_node_values_match_direct_evaluation() {
        for c in [vec![0.3], vec![0.0, 0.45]] {
            let p = base(KernelSpec::power_convolution(1.5).unwrap(), 9, c);
            let sol = solve(&p).unwrap();
            let rule = QuadratureRule::gauss_legendre(16);
            let cached = volterra_at_nodes(&p, &sol, &rule).unwrap();
            for n in [0usize, 4, 8] {
                for r in [0usize, 7, 15] {
                    let t = p.mesh.t(n) + rule.nodes()[r] * p.mesh.h(n);
                    let direct = apply_volterra(&p, &sol, t).unwrap();
                    assert!((cached[n * 16 + r] - direct).abs() <= 1e-13 * direct.abs());
                }
            }
        }
    }

    #[test]
    fn zero_error_for_exact_reference_and_degenerate_reference() {
        let p = base(KernelSpec::constant(1.0), 5, vec![0.5]);
        let s = injected(&p, |_| 1.0);
        assert!(relative_error(&p, &s, |t| t).unwrap() < 1e-14);
        assert_eq!(
            relative_error(&p, &s, |_| 0.0).unwrap_err(),
            Error::DegenerateReference
        );
    }

    #[test]
    fn single_pair_sweep_matches_direct_solve() {
        let p = base(KernelSpec::power_convolution(1.0).unwrap(), 10, vec![0.5]);
        let exact = |t: f64| t.powi(4) / 144.0;
        let sweep = convergence_sweep(&p, &[0.05], &[0.3], CaseTag::One, exact).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        let q = p
            .with_mesh(Mesh::with_step(1.0, 0.05).unwrap())
            .with_params(CollocationParameters::case_one(0.3).unwrap())
            .unwrap();
        let direct = relative_error(&q, &solve(&q).unwrap(), exact).unwrap();
        assert_eq!(sweep.rows[0].error_value().unwrap(), direct);
    }

    #[test]
    fn failed_rows_are_recorded() {
        let mut p = base(KernelSpec::power_convolution(1.0).unwrap(), 10, vec![0.5]);
        p.nonlinearity = NonlinearitySpec::power(1.0).unwrap();
        let sweep = convergence_sweep(&p, &[0.1], &[0.2, 0.5], CaseTag::One, |t| t).unwrap();
        assert!(sweep
            .rows
            .iter()
            .all(|r| r.result == Err(Error::NoNontrivialSolution { step: 0 })));
        assert!(sweep.optimum(0.1).is_none());
    }

    #[test]
    fn power_law_closed_forms() {
        let sq = PowerLaw::for_power_pair(1.0f64, 2.0).unwrap();
        assert!((sq.eval(0.5) - 0.5f64.powi(4) / 144.0).abs() < 1e-16);
        let cube = PowerLaw::for_power_pair(1.0f64, 3.0).unwrap();
        assert!((cube.density(0.7) - 0.7 / 6f64.sqrt()).abs() < 1e-14);
        // a = 2, b = 2: γ = 6, λ = B(3, 4)² = (1/60)²
        let quad = PowerLaw::for_power_pair(2.0f64, 2.0).unwrap();
        assert!((quad.scale - 1.0 / 3600.0).abs() < 1e-16);
        assert!(PowerLaw::for_power_pair(1.0f64, 1.0).is_err());
    }

    #[test]
    fn power_law_satisfies_the_integral_equation() {
        // non-integer exponents, checked by fine composite quadrature
        let (a, b) = (0.5f64, 2.5);
        let law = PowerLaw::for_power_pair(a, b).unwrap();
        let rule = QuadratureRule::gauss_legendre(16);
        let t = 0.8;
        let pieces = 400;
        let mut v = 0.0;
        for k in 0..pieces {
            let (lo, hi) = (t * k as f64 / pieces as f64, t * (k + 1) as f64 / pieces as f64);
            v += rule.integrate_on(lo, hi, |s| (t - s).powf(a) * law.density(s));
        }
        assert!((v - law.eval(t)).abs() < 1e-7 * law.eval(t));
    }

    #[test]
    fn grid_is_inclusive_and_drift_free() {
        let g: Vec<f64> = parameter_grid(0.01, 1.0, 0.001).unwrap();
        assert_eq!(g.len(), 991);
        assert_eq!(g[0], 0.01);
        assert!((g[990] - 1.0).abs() < 1e-15);
        assert!((g[158] - 0.168).abs() < 1e-15);
    }
}
