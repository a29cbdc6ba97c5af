use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type ProfileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type KernelFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// How the kernel is evaluated.
#[derive(Clone)]
pub enum KernelForm<T> {
    /// `K(t, s) = k(t - s)`.
    Convolution(ProfileFn<T>),
    /// Arbitrary `K(t, s)` on `0 <= s <= t`.
    General(KernelFn<T>),
}

/// A nonnegative Volterra kernel plus the structural property the existence
/// classifier relies on.
#[derive(Clone)]
pub struct KernelSpec<T> {
    form: KernelForm<T>,
    /// `K(t, s) <= K(t', s)` for all `0 <= s <= t < t'`.
    pub monotone_in_t: bool,
    name: String,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn convolution<F>(profile: F, monotone_in_t: bool) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            form: KernelForm::Convolution(Arc::new(profile)),
            monotone_in_t,
            name: "convolution".into(),
        }
    }

    pub fn general<F>(kernel: F, monotone_in_t: bool) -> Self
    where
        F: Fn(T, T) -> T + Send + Sync + 'static,
    {
        Self {
            form: KernelForm::General(Arc::new(kernel)),
            monotone_in_t,
            name: "general".into(),
        }
    }

    /// `k(u) = u^a`, `a > 0`. Increasing in `u`, hence monotone in `t`.
    pub fn power_convolution(a: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidParams(format!(
                "power_convolution needs a > 0, got {a}"
            )));
        }
        let profile: ProfileFn<T> = if a == T::one() {
            Arc::new(|u: T| u)
        } else {
            Arc::new(move |u: T| u.powf(a))
        };
        Ok(Self {
            form: KernelForm::Convolution(profile),
            monotone_in_t: true,
            name: format!("power_convolution(a={a})"),
        })
    }

    /// `K ≡ value` (a convolution kernel with constant profile).
    pub fn constant(value: T) -> Self {
        Self {
            form: KernelForm::Convolution(Arc::new(move |_| value)),
            monotone_in_t: true,
            name: format!("constant({value})"),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> &KernelForm<T> {
        &self.form
    }

    pub fn is_convolution(&self) -> bool {
        matches!(self.form, KernelForm::Convolution(_))
    }

    /// `K(t, s)`, zero above the diagonal.
    pub fn eval(&self, t: T, s: T) -> T {
        if s > t {
            return T::zero();
        }
        match &self.form {
            KernelForm::Convolution(k) => k(t - s),
            KernelForm::General(k) => k(t, s),
        }
    }

    /// Evaluates the convolution profile at lag `u`, or `None` for a general
    /// kernel.
    pub fn profile(&self, u: T) -> Option<T> {
        match &self.form {
            KernelForm::Convolution(k) => Some(k(u)),
            KernelForm::General(_) => None,
        }
    }

    /// Sampling spot checks of the kernel assumptions on `[0, t_max]`. Passing is
    /// evidence, not proof.
    pub fn spot_check(&self, t_max: T, samples: usize) -> Result<()> {
        let samples = samples.max(2);
        let grid: Vec<T> = (1..=samples)
            .map(|k| t_max * T::from_usize_lossy(k) / T::from_usize_lossy(samples))
            .collect();
        for &t in &grid {
            for &s in grid.iter().filter(|&&s| s <= t) {
                let v = self.eval(t, s);
                if !v.is_finite() || v < T::zero() {
                    return Err(kernel_err(t, s, v));
                }
            }
            let above = self.eval(t, t + t_max);
            if above != T::zero() {
                return Err(kernel_err(t, t + t_max, above));
            }
        }
        if self.monotone_in_t {
            for (a, &t) in grid.iter().enumerate() {
                for &t2 in &grid[a + 1..] {
                    for &s in grid.iter().filter(|&&s| s <= t) {
                        if self.eval(t, s) > self.eval(t2, s) {
                            return Err(Error::InvalidParams(format!(
                                "kernel declared monotone in t but K({t}, {s}) > K({t2}, {s})"
                            )));
                        }
                    }
                }
            }
        }
        // t ↦ ∫₀ᵗ K(t, s) ds strictly increasing, midpoint rule on a fine grid.
        let mut previous = T::zero();
        for &t in &grid {
            let pieces = 64;
            let dt = t / T::from_usize_lossy(pieces);
            let half = T::lit(0.5);
            let integral: T = (0..pieces)
                .map(|k| self.eval(t, (T::from_usize_lossy(k) + half) * dt) * dt)
                .sum();
            if !(integral > previous) {
                return Err(Error::InvalidParams(format!(
                    "∫₀ᵗ K(t, s) ds not strictly increasing at t = {t}"
                )));
            }
            previous = integral;
        }
        Ok(())
    }
}

fn kernel_err<T: Scalar>(t: T, s: T, v: T) -> Error {
    Error::KernelEvaluation {
        t: t.to_f64().unwrap_or(f64::NAN),
        s: s.to_f64().unwrap_or(f64::NAN),
        value: v.to_f64().unwrap_or(f64::NAN),
    }
}

pub(crate) fn checked_value<T: Scalar>(t: T, s: T, v: T) -> Result<T> {
    if v.is_finite() && v >= T::zero() {
        Ok(v)
    } else {
        Err(kernel_err(t, s, v))
    }
}

impl<T> fmt::Debug for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("monotone_in_t", &self.monotone_in_t)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_above_diagonal() {
        let k = KernelSpec::<f64>::power_convolution(1.0).unwrap();
        assert_eq!(k.eval(0.3, 0.5), 0.0);
        assert_eq!(k.eval(0.5, 0.3), 0.2);
    }

    #[test]
    fn power_convolution_rejects_nonpositive_exponent() {
        assert!(KernelSpec::<f64>::power_convolution(0.0).is_err());
        assert!(KernelSpec::<f64>::power_convolution(-1.0).is_err());
    }

    #[test]
    fn builtin_kernels_pass_spot_checks() {
        for a in [0.5, 1.0, 2.0] {
            KernelSpec::<f64>::power_convolution(a)
                .unwrap()
                .spot_check(2.0, 12)
                .unwrap();
        }
        KernelSpec::<f64>::constant(1.0).spot_check(1.0, 8).unwrap();
    }

    #[test]
    fn spot_check_catches_false_monotonicity() {
        // decreasing profile declared monotone
        let k = KernelSpec::<f64>::convolution(|u| (-u).exp(), true);
        assert!(k.spot_check(1.0, 8).is_err());
        let k = KernelSpec::<f64>::general(|_, _| -1.0, false);
        assert!(matches!(
            k.spot_check(1.0, 4),
            Err(Error::KernelEvaluation { .. })
        ));
    }
}
