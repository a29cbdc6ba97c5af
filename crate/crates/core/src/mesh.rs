use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `0 = t₀ < t₁ < … < t_N = T`, with subintervals `σₙ = (tₙ, tₙ₊₁]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    points: Vec<T>,
    uniform: bool,
}

impl<T: Scalar> Mesh<T> {
    /// `N` equal subintervals of `[0, end]`.
    pub fn uniform(end: T, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParams("mesh needs N >= 1".into()));
        }
        if !(end > T::zero()) || !end.is_finite() {
            return Err(Error::InvalidParams(format!("mesh end must be > 0, got {end}")));
        }
        let n = T::from_usize_lossy(steps);
        let mut points: Vec<T> = (0..=steps)
            .map(|k| end * T::from_usize_lossy(k) / n)
            .collect();
        points[steps] = end;
        Ok(Self {
            points,
            uniform: true,
        })
    }

    /// Uniform mesh with step `h`; `end / h` must be (close to) an integer.
    pub fn with_step(end: T, h: T) -> Result<Self> {
        if !(h > T::zero()) {
            return Err(Error::InvalidParams(format!("mesh step must be > 0, got {h}")));
        }
        let ratio = end / h;
        let steps = ratio.round();
        if steps < T::one() || (ratio - steps).abs() > T::lit(1e-6) * steps {
            return Err(Error::InvalidParams(format!(
                "step {h} does not divide interval length {end}"
            )));
        }
        Self::uniform(end, steps.to_usize().unwrap_or(0))
    }

    pub fn from_points(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParams("mesh needs N >= 1".into()));
        }
        if points[0] != T::zero() {
            return Err(Error::InvalidParams("mesh must start at 0".into()));
        }
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams(
                "mesh points must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            points,
            uniform: false,
        })
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Number of subintervals `N`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn end(&self) -> T {
        self.points[self.steps()]
    }

    #[inline]
    pub fn t(&self, n: usize) -> T {
        self.points[n]
    }

    /// `hₙ = tₙ₊₁ − tₙ`.
    #[inline]
    pub fn h(&self, n: usize) -> T {
        self.points[n + 1] - self.points[n]
    }

    /// `h = max hₙ`.
    pub fn stepsize(&self) -> T {
        (0..self.steps())
            .map(|n| self.h(n))
            .fold(T::zero(), T::max)
    }

    /// Built by [`Mesh::uniform`] / [`Mesh::with_step`].
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `(n, v)` with `t ∈ σₙ` and `t = tₙ + v hₙ`, `v ∈ (0, 1]`.
    pub fn locate(&self, t: T) -> Result<(usize, T)> {
        let end = self.end();
        if !(t > T::zero()) || t > end {
            return Err(Error::OutOfDomain {
                t: t.to_f64().unwrap_or(f64::NAN),
                end: end.to_f64().unwrap_or(f64::NAN),
            });
        }
        // first index with point >= t, minus one
        let idx = self.points.partition_point(|&p| p < t);
        let n = idx - 1;
        Ok((n, (t - self.points[n]) / self.h(n)))
    }

    /// The mesh shifted right by `h₀` with a new first subinterval of length
    /// `h₀` prepended.
    pub fn prepend_step(&self, h0: T) -> Self {
        let mut points = Vec::with_capacity(self.points.len() + 1);
        points.push(T::zero());
        points.extend(self.points.iter().map(|&p| p + h0));
        let uniform = self.uniform && (self.h(0) - h0).abs() <= T::epsilon() * h0 * T::lit(8.0);
        Self { points, uniform }
    }
}
