//! Existence, uniqueness and nondivergence classification from declared
//! kernel and nonlinearity properties, plus an empirical probe of the first
//! step as the mesh is refined.
//!
//! Only the two scalar-reducible families are classified (`m = 1, c₁ > 0` and
//! `m = 2, c₁ = 0`). Everything else reports `Unknown`, except `m = 1, c₁ = 0`
//! which only admits the zero solution.

use std::fmt;

use crate::error::{Error, Result};
use crate::fixedpoint::FixedPointStatus;
use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::nonlinearity::NonlinearitySpec;
use crate::params::{CaseKind, CollocationParameters};
use crate::problem::CollocationProblem;
use crate::scalar::Scalar;
use crate::solver::Stepper;

/// Ordered from weakest to strongest guarantee; `NoNontrivial` and `Unknown`
/// sit outside the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceCategory {
    NoNontrivial,
    Unknown,
    NearZero,
    FineMeshes,
    Unconditional,
}

impl ExistenceCategory {
    fn rank(self) -> u8 {
        match self {
            ExistenceCategory::NoNontrivial | ExistenceCategory::Unknown => 0,
            ExistenceCategory::NearZero => 1,
            ExistenceCategory::FineMeshes => 2,
            ExistenceCategory::Unconditional => 3,
        }
    }

    /// `Unconditional ⇒ FineMeshes ⇒ NearZero`.
    pub fn implies(self, other: ExistenceCategory) -> bool {
        self == other || (other.rank() > 0 && self.rank() >= other.rank())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExistenceCategory::NoNontrivial => "no_nontrivial",
            ExistenceCategory::Unknown => "unknown",
            ExistenceCategory::NearZero => "near_zero",
            ExistenceCategory::FineMeshes => "fine_meshes",
            ExistenceCategory::Unconditional => "unconditional",
        }
    }
}

impl fmt::Display for ExistenceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// `m = 1, c₁ = 0`: the zero function is the only collocation solution.
    TrivialOnly,
    /// Monotone kernel: existence near zero iff `G(y)/y` is unbounded.
    MonotoneKernelCharacterization,
    /// Ratio unbounded near zero and bounded away from zero: existence near
    /// zero, and for fine meshes when the kernel is a convolution.
    BoundedAwayExistence,
    /// Ratio unbounded near zero with a vanishing sequence at infinity:
    /// unconditional existence.
    VanishingSequenceExistence,
    /// Strictly decreasing ratio: at most one nontrivial solution.
    DecreasingRatioUniqueness,
    /// Nondivergent existence iff the ratio is unbounded near zero;
    /// a well-behaved `G` upgrades it to nondivergent uniqueness.
    NondivergenceCharacterization,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::TrivialOnly => "trivial_only",
            Rule::MonotoneKernelCharacterization => "monotone_kernel_characterization",
            Rule::BoundedAwayExistence => "bounded_away_existence",
            Rule::VanishingSequenceExistence => "vanishing_sequence_existence",
            Rule::DecreasingRatioUniqueness => "decreasing_ratio_uniqueness",
            Rule::NondivergenceCharacterization => "nondivergence_characterization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiredRule {
    pub rule: Rule,
    pub hypotheses: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExistenceReport {
    pub category: ExistenceCategory,
    pub uniqueness: Option<bool>,
    pub nondivergent_existence: Option<bool>,
    pub nondivergent_uniqueness: Option<bool>,
    pub rules: Vec<FiredRule>,
}

impl ExistenceReport {
    pub fn fired(&self, rule: Rule) -> bool {
        self.rules.iter().any(|r| r.rule == rule)
    }

    /// Key/value rows in a fixed order.
    pub fn rows(&self) -> Vec<(String, String)> {
        let tri = |v: Option<bool>| match v {
            Some(true) => "true".to_string(),
            Some(false) => "false".to_string(),
            None => "unknown".to_string(),
        };
        let mut rows = vec![
            ("category".to_string(), self.category.to_string()),
            ("uniqueness".to_string(), tri(self.uniqueness)),
            ("nondivergent_existence".to_string(), tri(self.nondivergent_existence)),
            ("nondivergent_uniqueness".to_string(), tri(self.nondivergent_uniqueness)),
        ];
        for r in &self.rules {
            rows.push((format!("rule.{}", r.rule.as_str()), r.hypotheses.clone()));
        }
        rows
    }
}

/// A pure function of the declared properties.
pub fn classify_existence<T: Scalar>(
    kernel: &KernelSpec<T>,
    nonlinearity: &NonlinearitySpec<T>,
    params: &CollocationParameters<T>,
) -> ExistenceReport {
    let mut report = ExistenceReport {
        category: ExistenceCategory::Unknown,
        uniqueness: None,
        nondivergent_existence: None,
        nondivergent_uniqueness: None,
        rules: Vec::new(),
    };
    if params.is_trivial_only() {
        report.category = ExistenceCategory::NoNontrivial;
        report.uniqueness = Some(true);
        report.rules.push(FiredRule {
            rule: Rule::TrivialOnly,
            hypotheses: "m=1; c1=0".into(),
        });
        return report;
    }
    let case = params.case();
    if case == CaseKind::General {
        return report;
    }

    let p = nonlinearity.properties;
    let monotone = kernel.monotone_in_t;
    let convolution = kernel.is_convolution();
    let case_tag = if case == CaseKind::One { "case 1" } else { "case 2" };
    // case 2 side condition: c₂ = 1 or a monotone kernel
    let side_ok = match case {
        CaseKind::Two => monotone || params.c()[1] == T::one(),
        _ => true,
    };
    let side_text = match case {
        CaseKind::Two if params.c()[1] == T::one() => "; c2=1",
        CaseKind::Two => "; kernel monotone in t",
        _ => "",
    };

    let mut best: Option<ExistenceCategory> = None;
    let mut raise = |cat: ExistenceCategory| {
        best = Some(match best {
            Some(b) if b.rank() >= cat.rank() => b,
            _ => cat,
        });
    };
    let mut no_existence = false;

    if monotone {
        let unbounded = p.unbounded();
        report.rules.push(FiredRule {
            rule: Rule::MonotoneKernelCharacterization,
            hypotheses: format!(
                "{case_tag}; kernel monotone in t; ratio {}",
                if unbounded { "unbounded" } else { "bounded" }
            ),
        });
        if unbounded {
            raise(ExistenceCategory::NearZero);
        } else {
            no_existence = true;
        }
    }

    let bounded_away = p.unbounded_near_zero && p.bounded_away_from_zero && side_ok;
    if bounded_away {
        let cat = if convolution {
            ExistenceCategory::FineMeshes
        } else {
            ExistenceCategory::NearZero
        };
        report.rules.push(FiredRule {
            rule: Rule::BoundedAwayExistence,
            hypotheses: format!(
                "{case_tag}; ratio unbounded near zero; ratio bounded away from zero{side_text}{}",
                if convolution { "; convolution kernel" } else { "" }
            ),
        });
        raise(cat);
    }

    let vanishing = p.unbounded_near_zero && p.vanishing_sequence && side_ok;
    if vanishing {
        report.rules.push(FiredRule {
            rule: Rule::VanishingSequenceExistence,
            hypotheses: format!(
                "{case_tag}; ratio unbounded near zero; vanishing ratio sequence{side_text}"
            ),
        });
        raise(ExistenceCategory::Unconditional);
    }

    if (bounded_away || vanishing) && p.strictly_decreasing {
        report.rules.push(FiredRule {
            rule: Rule::DecreasingRatioUniqueness,
            hypotheses: format!("{case_tag}; ratio strictly decreasing"),
        });
        report.uniqueness = Some(true);
    }

    report.category = match best {
        Some(c) => c,
        None if no_existence => ExistenceCategory::NoNontrivial,
        None => ExistenceCategory::Unknown,
    };

    if report.category.implies(ExistenceCategory::NearZero) {
        let nd = p.unbounded_near_zero;
        report.nondivergent_existence = Some(nd);
        report.nondivergent_uniqueness = if nd && p.well_behaved {
            Some(true)
        } else if !nd {
            Some(false)
        } else {
            None
        };
        report.rules.push(FiredRule {
            rule: Rule::NondivergenceCharacterization,
            hypotheses: format!(
                "{case_tag}; existence; ratio {} near zero{}",
                if nd { "unbounded" } else { "bounded" },
                if nd && p.well_behaved { "; well-behaved G" } else { "" }
            ),
        });
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    Bounded,
    Diverging,
    Inconclusive,
}

impl fmt::Display for ProbeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeVerdict::Bounded => "bounded",
            ProbeVerdict::Diverging => "diverging",
            ProbeVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondivergenceDiagnostic<T> {
    /// `(h₀, max_i Z₀,ᵢ)`; `None` where the first step has no nontrivial
    /// solution within the scan range.
    pub points: Vec<(T, Option<T>)>,
    pub verdict: ProbeVerdict,
}

/// Solves only the first step for each `h₀` of a strictly decreasing schedule
/// and judges whether the selected coefficient stays bounded.
pub fn nondivergence_probe<T: Scalar>(
    problem: &CollocationProblem<T>,
    schedule: &[T],
) -> Result<NondivergenceDiagnostic<T>> {
    if problem.params.case() == CaseKind::General {
        return Err(Error::InvalidParams(
            "nondivergence probe needs case 1 or case 2 parameters".into(),
        ));
    }
    if schedule.iter().any(|&h| !(h > T::zero()))
        || schedule.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::InvalidParams(
            "probe schedule must be positive and strictly decreasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(schedule.len());
    for &h0 in schedule {
        let one_step = problem.with_mesh(Mesh::from_points(vec![T::zero(), h0])?);
        let outcome = Stepper::new(&one_step).first_step_outcome()?;
        let value = match outcome.status {
            FixedPointStatus::Found => outcome.y_star,
            _ => None,
        };
        points.push((h0, value));
    }
    let verdict = judge(&points);
    Ok(NondivergenceDiagnostic { points, verdict })
}

/// Bounded iff the last value is at most 10× the median of the last three and
/// the values do not grow monotonically by factors above 2.
fn judge<T: Scalar>(points: &[(T, Option<T>)]) -> ProbeVerdict {
    let values: Vec<T> = points.iter().filter_map(|p| p.1).collect();
    let failures = points.len() - values.len();
    if values.is_empty() || 2 * failures > points.len() {
        return ProbeVerdict::Inconclusive;
    }
    let mut tail: Vec<T> = values.iter().rev().take(3).copied().collect();
    tail.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = tail[tail.len() / 2];
    let last = *values.last().unwrap_or(&T::zero());
    let exploding =
        values.len() >= 2 && values.windows(2).all(|w| w[1] > T::lit(2.0) * w[0]);
    if last <= T::lit(10.0) * median && !exploding {
        ProbeVerdict::Bounded
    } else {
        ProbeVerdict::Diverging
    }
}
