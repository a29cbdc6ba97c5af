use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The two parameter families where a step reduces to one scalar equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// `m = 1`, `c₁ > 0`.
    One,
    /// `m = 2`, `c₁ = 0`.
    Two,
    /// Everything else, including the degenerate `m = 1, c₁ = 0`.
    General,
}

/// `0 <= c₁ < … < c_m <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationParameters<T> {
    c: Vec<T>,
}

impl<T: Scalar> CollocationParameters<T> {
    pub fn new(c: Vec<T>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidParams("need at least one parameter".into()));
        }
        if c.iter().any(|&ci| !(ci >= T::zero() && ci <= T::one())) {
            return Err(Error::InvalidParams(format!(
                "collocation parameters must lie in [0, 1]: {c:?}"
            )));
        }
        if c.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams(format!(
                "collocation parameters must be strictly increasing: {c:?}"
            )));
        }
        Ok(Self { c })
    }

    pub fn case_one(c1: T) -> Result<Self> {
        Self::new(vec![c1])
    }

    pub fn case_two(c2: T) -> Result<Self> {
        Self::new(vec![T::zero(), c2])
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn case(&self) -> CaseKind {
        match self.c.as_slice() {
            [c1] if *c1 > T::zero() => CaseKind::One,
            [c1, _] if *c1 == T::zero() => CaseKind::Two,
            _ => CaseKind::General,
        }
    }

    /// `m = 1` with `c₁ = 0` only admits the zero solution.
    pub fn is_trivial_only(&self) -> bool {
        matches!(self.c.as_slice(), [c1] if *c1 == T::zero())
    }
}
