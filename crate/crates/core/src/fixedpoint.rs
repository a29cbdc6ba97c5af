//! Nonzero fixed points of `y ↦ G(α + β y)`.
//!
//! Roots of `f(y) = G(α + β y) − y` are bracketed on a geometric grid and
//! refined by bisection down to adjacent floats. Every positive root satisfies
//! `y = G(α + β y) >= G(α)`, so for `α > 0` the grid starts at `G(α)` instead
//! of the scan floor. Roots where `f` touches zero without changing sign are
//! not detected.

use crate::error::{Error, Result};
use crate::problem::SolverOptions;
use crate::scalar::Scalar;

#[derive(Clone, Copy)]
pub struct FixedPointQuery<'a, T> {
    pub g: &'a dyn Fn(T) -> T,
    pub alpha: T,
    pub beta: T,
    pub scan_floor: T,
    /// `None` means `1e12 · max(1, G(α))`.
    pub scan_cap: Option<T>,
    pub scan_ratio: T,
    pub refinement: usize,
    pub tol: T,
}

impl<'a, T: Scalar> FixedPointQuery<'a, T> {
    pub fn new(g: &'a dyn Fn(T) -> T, alpha: T, beta: T) -> Self {
        Self::with_options(g, alpha, beta, &SolverOptions::default())
    }

    pub fn with_options(g: &'a dyn Fn(T) -> T, alpha: T, beta: T, opts: &SolverOptions<T>) -> Self {
        Self {
            g,
            alpha,
            beta,
            scan_floor: opts.scan_floor,
            scan_cap: Some(opts.scan_cap_factor * T::one().max(g(alpha))),
            scan_ratio: opts.scan_ratio,
            refinement: opts.scan_refinement,
            tol: opts.root_tol,
        }
    }

    pub fn cap(&self) -> T {
        self.scan_cap
            .unwrap_or_else(|| T::lit(1e12) * T::one().max((self.g)(self.alpha)))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.scan_floor > T::zero()) || !(self.scan_floor < self.cap()) {
            return Err(Error::InvalidParams("need 0 < scan floor < scan cap".into()));
        }
        if !(self.scan_ratio > T::one()) || self.refinement == 0 {
            return Err(Error::InvalidParams("scan ratio must exceed 1".into()));
        }
        Ok(())
    }

    #[inline]
    fn f(&self, y: T) -> Result<T> {
        let v = (self.g)(self.alpha + self.beta * y);
        if !v.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                y: y.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(v - y)
    }

    fn residual(&self, y: T) -> T {
        ((self.g)(self.alpha + self.beta * y) - y).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointStatus {
    Found,
    /// `f` is negative somewhere but never changes sign on the grid.
    NoneInBracket,
    /// `f > 0` all the way to the cap: any root lies beyond it.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOutcome<T> {
    pub status: FixedPointStatus,
    /// Smallest root when found.
    pub y_star: Option<T>,
    pub residual: Option<T>,
    pub roots_detected: usize,
}

impl<T: Scalar> FixedPointOutcome<T> {
    pub fn is_found(&self) -> bool {
        self.status == FixedPointStatus::Found
    }
}

struct Scan<T> {
    roots: Vec<T>,
    any_negative: bool,
}

fn scan<T: Scalar>(query: &FixedPointQuery<'_, T>) -> Result<Scan<T>> {
    query.validate()?;
    let cap = query.cap();
    let mut lower = query.scan_floor;
    if query.alpha > T::zero() {
        lower = lower.max((query.g)(query.alpha));
    }
    let ratio = query
        .scan_ratio
        .powf(T::one() / T::from_usize_lossy(query.refinement));

    let mut roots = Vec::new();
    let mut any_negative = false;
    let mut y = lower;
    let mut fy = query.f(y)?;
    loop {
        if fy < T::zero() {
            any_negative = true;
        }
        if fy == T::zero() {
            roots.push(y);
        }
        if y >= cap {
            break;
        }
        let next = (y * ratio).min(cap);
        let fnext = query.f(next)?;
        if (fy < T::zero() && fnext > T::zero()) || (fy > T::zero() && fnext < T::zero()) {
            let root = bisect(query, y, fy, next)?;
            if query.residual(root) <= query.tol * (T::one() + root) {
                roots.push(root);
            }
        }
        y = next;
        fy = fnext;
    }
    Ok(Scan {
        roots,
        any_negative,
    })
}

/// Bisection on a sign-change bracket until the midpoint is no longer strictly
/// inside, then the endpoint with the smaller residual.
fn bisect<T: Scalar>(query: &FixedPointQuery<'_, T>, mut a: T, fa: T, mut b: T) -> Result<T> {
    let left_positive = fa > T::zero();
    for _ in 0..2100 {
        let mid = a + (b - a) * T::lit(0.5);
        if !(mid > a && mid < b) {
            break;
        }
        let fm = query.f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == left_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(if query.residual(a) <= query.residual(b) { a } else { b })
}

/// The smallest nonzero fixed point on the scan grid.
///
/// With `α = 0` the trivial root is excluded because the grid starts strictly
/// above zero; when `G(y)/y` is unbounded near zero, `f` is positive there.
pub fn min_nonzero_fixed_point<T: Scalar>(query: &FixedPointQuery<'_, T>) -> Result<FixedPointOutcome<T>> {
    let s = scan(query)?;
    Ok(match s.roots.first() {
        Some(&y) => FixedPointOutcome {
            status: FixedPointStatus::Found,
            y_star: Some(y),
            residual: Some(query.residual(y)),
            roots_detected: s.roots.len(),
        },
        None => FixedPointOutcome {
            status: if s.any_negative {
                FixedPointStatus::NoneInBracket
            } else {
                FixedPointStatus::Diverged
            },
            y_star: None,
            residual: None,
            roots_detected: 0,
        },
    })
}

/// Every bracketed root in `(0, cap]`, ascending.
pub fn scan_fixed_points<T: Scalar>(query: &FixedPointQuery<'_, T>) -> Result<Vec<T>> {
    Ok(scan(query)?.roots)
}

/// Plain iteration `y ← G(α + β y)` from `start`. Returns the final iterate and
/// the number of steps once successive iterates agree to `tol` relative.
pub fn iterate_fixed_point<T: Scalar>(
    query: &FixedPointQuery<'_, T>,
    start: T,
    tol: T,
    max_iter: usize,
) -> Option<(T, usize)> {
    let mut y = start;
    for k in 1..=max_iter {
        let next = (query.g)(query.alpha + query.beta * y);
        if !next.is_finite() {
            return None;
        }
        if (next - y).abs() <= tol * next.abs() {
            return Some((next, k));
        }
        y = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sqrt(y: f64) -> f64 {
        y.sqrt()
    }

    #[test]
    fn sqrt_alpha_zero() {
        let out = min_nonzero_fixed_point(&FixedPointQuery::new(&sqrt, 0.0, 0.5)).unwrap();
        assert_eq!(out.status, FixedPointStatus::Found);
        assert!((out.y_star.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(out.roots_detected, 1);
    }

    #[test]
    fn sqrt_quadratic_oracle() {
        // y² − y − 0.75 = 0
        let out = min_nonzero_fixed_point(&FixedPointQuery::new(&sqrt, 0.75, 1.0)).unwrap();
        assert!((out.y_star.unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn small_beta_converges_to_g_alpha() {
        let (a, b): (f64, f64) = (4.0, 1e-8);
        let want = (b + (b * b + 4.0 * a).sqrt()) / 2.0;
        let y = min_nonzero_fixed_point(&FixedPointQuery::new(&sqrt, a, b))
            .unwrap()
            .y_star
            .unwrap();
        assert!((y - want).abs() < 1e-14);
        assert!((y - 2.0).abs() < 1e-6);
    }

    #[test]
    fn square_root_escapes_as_beta_shrinks() {
        let sq = |y: f64| y * y;
        let y = min_nonzero_fixed_point(&FixedPointQuery::new(&sq, 0.0, 0.1))
            .unwrap()
            .y_star
            .unwrap();
        assert!((y - 100.0).abs() < 1e-10);
        let mut previous = y;
        for beta in [1e-2, 1e-3, 1e-4] {
            let y = min_nonzero_fixed_point(&FixedPointQuery::new(&sq, 0.0, beta))
                .unwrap()
                .y_star
                .unwrap();
            assert!(((y - 1.0 / (beta * beta)) / y).abs() < 1e-12);
            assert!(y > previous);
            previous = y;
        }
        let out = min_nonzero_fixed_point(&FixedPointQuery::new(&sq, 0.0, 1e-7)).unwrap();
        assert_eq!(out.status, FixedPointStatus::NoneInBracket);
    }

    #[test]
    fn linear_map_has_no_nonzero_root() {
        let id = |y: f64| y;
        let q = FixedPointQuery::new(&id, 0.0, 0.5);
        assert!(scan_fixed_points(&q).unwrap().is_empty());
        assert_eq!(
            min_nonzero_fixed_point(&q).unwrap().status,
            FixedPointStatus::NoneInBracket
        );
    }

    #[test]
    fn positive_to_the_cap_is_diverged() {
        // 2βy > y for every y: roots only at 0
        let double = |y: f64| 4.0 * y;
        let out = min_nonzero_fixed_point(&FixedPointQuery::new(&double, 0.0, 1.0)).unwrap();
        assert_eq!(out.status, FixedPointStatus::Diverged);
    }

    #[test]
    fn two_roots_and_the_larger_recedes() {
        let g = |y: f64| y.sqrt() + y * y / 1000.0;
        let mut previous_large = 0.0;
        for beta in [0.1, 0.01] {
            let roots = scan_fixed_points(&FixedPointQuery::new(&g, 0.0, beta)).unwrap();
            assert!(roots.len() >= 2, "beta={beta}: {roots:?}");
            let large = *roots.last().unwrap();
            assert!(large > previous_large);
            previous_large = large;
            // smallest root close to the pure square-root answer β
            assert!((roots[0] - beta).abs() < 1e-2 * beta);
        }
    }

    #[test]
    fn non_finite_nonlinearity_is_an_error() {
        let g = |y: f64| if y > 1.0 { f64::NAN } else { y.sqrt() };
        let q = FixedPointQuery::new(&g, 0.0, 100.0);
        assert!(matches!(
            min_nonzero_fixed_point(&q),
            Err(Error::NonFiniteEvaluation { .. })
        ));
    }

    #[test]
    fn invalid_queries_rejected() {
        assert!(min_nonzero_fixed_point(&FixedPointQuery::new(&sqrt, 0.0, 0.0)).is_err());
        assert!(min_nonzero_fixed_point(&FixedPointQuery::new(&sqrt, -1.0, 1.0)).is_err());
    }

    #[test]
    fn attractor_reconverges() {
        for (a, b) in [(0.0, 0.5), (0.3, 2.0), (4.0, 1e-3)] {
            let q = FixedPointQuery::new(&sqrt, a, b);
            let y = min_nonzero_fixed_point(&q).unwrap().y_star.unwrap();
            let (back, iters) = iterate_fixed_point(&q, 1.5 * y, 1e-14, 200).unwrap();
            assert!((back - y).abs() <= 1e-10 * y.max(1.0));
            assert!(iters <= 200);
        }
    }

    proptest! {
        #[test]
        fn residual_bound_and_minimality(
            alpha in prop_oneof![Just(0.0), 1e-9f64..1e3],
            log_beta in -6.0f64..6.0,
            b in 2.0f64..6.0,
        ) {
            let beta = 10f64.powf(log_beta);
            let g = move |y: f64| y.powf(1.0 / b);
            let q = FixedPointQuery::new(&g, alpha, beta);
            let out = min_nonzero_fixed_point(&q).unwrap();
            prop_assert_eq!(out.status, FixedPointStatus::Found);
            let y = out.y_star.unwrap();
            prop_assert!(y > 0.0);
            prop_assert!(out.residual.unwrap() <= 1e-12 * (1.0 + y));
            let all = scan_fixed_points(&q).unwrap();
            prop_assert!(all.iter().all(|&r| y <= r));
        }
    }
}
