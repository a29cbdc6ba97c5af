use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type NonlinearityFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Declared behavior of the ratio `G(y)/y`. These are asymptotic statements
/// that cannot be decided from point samples, so they are trusted as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RatioProperties {
    pub unbounded_near_zero: bool,
    /// `G(y)/y` unbounded as `y → +∞`.
    pub unbounded_at_infinity: bool,
    /// Bounded on `(t, +∞)` for every `t > 0`.
    pub bounded_away_from_zero: bool,
    pub strictly_decreasing: bool,
    /// There are `yₙ → +∞` with `G(yₙ)/yₙ → 0`.
    pub vanishing_sequence: bool,
    /// `G(α + y)/y` strictly decreasing near zero for every `α >= 0`.
    pub well_behaved: bool,
}

impl RatioProperties {
    /// Unbounded somewhere on `(0, +∞)`.
    pub fn unbounded(&self) -> bool {
        self.unbounded_near_zero || self.unbounded_at_infinity
    }
}

/// The nonlinearity `G: [0, ∞) → [0, ∞)`, continuous and strictly increasing
/// with `G(0) = 0`.
#[derive(Clone)]
pub struct NonlinearitySpec<T> {
    g: NonlinearityFn<T>,
    pub properties: RatioProperties,
    name: String,
}

impl<T: Scalar> NonlinearitySpec<T> {
    pub fn custom<F>(g: F, properties: RatioProperties) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            g: Arc::new(g),
            properties,
            name: "custom".into(),
        }
    }

    /// `G(y) = y^{1/b}` with `b > 1`.
    pub fn power_root(b: T) -> Result<Self> {
        if !(b > T::one()) || !b.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power_root needs b > 1, got {b}"
            )));
        }
        let mut g = Self::power(b.recip())?;
        g.name = format!("power_root(b={b})");
        Ok(g)
    }

    /// `G(y) = y^p`, `p > 0`, with the ratio properties that follow from `p`.
    pub fn power(p: T) -> Result<Self> {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("power needs p > 0, got {p}")));
        }
        let sublinear = p < T::one();
        let g: NonlinearityFn<T> = if p == T::lit(0.5) {
            Arc::new(|y: T| y.sqrt())
        } else if p == T::one() {
            Arc::new(|y: T| y)
        } else {
            Arc::new(move |y: T| y.powf(p))
        };
        let properties = RatioProperties {
            unbounded_near_zero: sublinear,
            unbounded_at_infinity: p > T::one(),
            bounded_away_from_zero: p <= T::one(),
            strictly_decreasing: sublinear,
            vanishing_sequence: sublinear,
            well_behaved: sublinear,
        };
        Ok(Self {
            g,
            properties,
            name: format!("power(p={p})"),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, y: T) -> T {
        (self.g)(y)
    }

    pub fn as_fn(&self) -> &(dyn Fn(T) -> T + Send + Sync) {
        &*self.g
    }

    /// `G(0) = 0`, positivity and strict monotonicity on a log grid over
    /// `[y_min, y_max]`.
    pub fn spot_check(&self, y_min: T, y_max: T, samples: usize) -> Result<()> {
        if self.eval(T::zero()) != T::zero() {
            return Err(Error::InvalidParams("G(0) must be 0".into()));
        }
        let samples = samples.max(2);
        let ratio = (y_max / y_min).ln() / T::from_usize_lossy(samples - 1);
        let mut previous = T::zero();
        for k in 0..samples {
            let y = y_min * (ratio * T::from_usize_lossy(k)).exp();
            let g = self.eval(y);
            if !g.is_finite() || !(g > previous) {
                return Err(Error::InvalidParams(format!(
                    "G not positive and strictly increasing at y = {y}"
                )));
            }
            previous = g;
        }
        Ok(())
    }
}

impl<T> fmt::Debug for NonlinearitySpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("name", &self.name)
            .field("properties", &self.properties)
            .finish()
    }
}
