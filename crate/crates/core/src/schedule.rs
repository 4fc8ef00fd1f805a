//! Nonsummable step-size sequences `αₖ` and their admissibility thresholds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::ObjectiveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Power,
}

/// Which step-size bound a procedure relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `sup αₖ < 2/L`: forward descent stays monotone.
    Stability,
    /// `sup αₖ < 1/L`: the implicit steps are contractions.
    Prox,
}

/// `αₖ = c` (constant) or `αₖ = c / (k + 1)^p` with `p ∈ [0, 1]` (power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    kind: ScheduleKind,
    c: f64,
    p: f64,
}

impl StepSchedule {
    pub fn constant(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self {
            kind: ScheduleKind::Constant,
            c,
            p: 0.0,
        })
    }

    /// Summable exponents `p > 1` are rejected.
    pub fn power(c: f64, p: f64) -> Result<Self> {
        check_c(c)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "schedule.p",
                reason: format!("p = {p} must lie in [0, 1] so that the steps are nonsummable"),
            });
        }
        Ok(Self {
            kind: ScheduleKind::Power,
            c,
            p,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sup_alpha(&self) -> f64 {
        self.c
    }

    pub fn is_constant(&self) -> bool {
        self.kind == ScheduleKind::Constant || self.p == 0.0
    }

    /// Same family with `c` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self.kind {
            ScheduleKind::Constant => Self::constant(self.c * factor),
            ScheduleKind::Power => Self::power(self.c * factor, self.p),
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.c,
            ScheduleKind::Power => self.c / ((k + 1) as f64).powf(self.p),
        }
    }

    /// `Σ_{k < K} αₖ`.
    pub fn partial_sum(&self, horizon: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.c * horizon as f64,
            ScheduleKind::Power => (0..horizon).map(|k| self.alpha(k)).sum(),
        }
    }

    /// A horizon `K` whose partial sum exceeds `bound`, from the integral
    /// comparison `Σ_{k<K} (k+1)^{-p} ≥ ∫_1^{K+1} s^{-p} ds`.
    pub fn horizon_exceeding(&self, bound: f64) -> usize {
        let target = bound.max(0.0) / self.c;
        let k = if self.is_constant() {
            target.floor() + 1.0
        } else if self.p < 1.0 {
            ((1.0 - self.p) * target + 1.0)
                .powf(1.0 / (1.0 - self.p))
                .ceil()
        } else {
            target.exp().ceil()
        };
        k.max(1.0) as usize
    }

    pub fn admissible(&self, f: &ObjectiveFunction, regime: Regime) -> bool {
        let lip = f.lipschitz();
        match regime {
            Regime::Stability => self.sup_alpha() * lip < 2.0,
            Regime::Prox => self.sup_alpha() * lip < 1.0,
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "schedule.c",
            reason: format!("c = {c} must be positive"),
        });
    }
    Ok(())
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScheduleKind::Constant => write!(f, "constant:{}", self.c),
            ScheduleKind::Power => write!(f, "power:{}:{}", self.c, self.p),
        }
    }
}

/// Parses `constant:C` or `power:C:P`.
impl FromStr for StepSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |name: &'static str, v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter {
                    name,
                    reason: format!("`{v}` is not a number"),
                })
        };
        match parts.as_slice() {
            ["constant", c] => Self::constant(num("schedule.c", c)?),
            ["power", c, p] => Self::power(num("schedule.c", c)?, num("schedule.p", p)?),
            _ => Err(Error::InvalidParameter {
                name: "schedule",
                reason: format!("`{s}` is not `constant:C` or `power:C:P`"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(StepSchedule::constant(0.5).unwrap().alpha(7), 0.5);
        let s = StepSchedule::power(1.0, 1.0).unwrap();
        assert_eq!((s.alpha(0), s.alpha(1)), (1.0, 0.5));
        assert_eq!(StepSchedule::power(2.0, 0.5).unwrap().alpha(3), 1.0);
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(StepSchedule::constant(0.5).unwrap().partial_sum(4), 2.0);
        let s = StepSchedule::power(1.0, 1.0).unwrap();
        assert!((s.partial_sum(3) - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.partial_sum(0), 0.0);
        assert_eq!(StepSchedule::constant(3.0).unwrap().partial_sum(0), 0.0);
    }

    #[test]
    fn admissibility_thresholds() {
        let unit = ObjectiveFunction::quad(&[1.0]).unwrap();
        let big = StepSchedule::constant(1.5).unwrap();
        assert!(big.admissible(&unit, Regime::Stability));
        assert!(!big.admissible(&unit, Regime::Prox));
        let small = StepSchedule::constant(0.5).unwrap();
        assert!(small.admissible(&unit, Regime::Stability));
        assert!(small.admissible(&unit, Regime::Prox));
        let two = ObjectiveFunction::quad(&[2.0]).unwrap();
        assert!(!StepSchedule::power(0.6, 1.0)
            .unwrap()
            .admissible(&two, Regime::Prox));
    }

    #[test]
    fn rejects_summable_and_nonpositive() {
        assert!(StepSchedule::power(1.0, 1.5).is_err());
        assert!(StepSchedule::power(1.0, -0.1).is_err());
        assert!(StepSchedule::constant(0.0).is_err());
        assert!(StepSchedule::constant(f64::NAN).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["constant:0.5", "power:1:0.5", "power:0.25:1"] {
            let sched: StepSchedule = s.parse().unwrap();
            assert_eq!(sched.to_string().parse::<StepSchedule>().unwrap(), sched);
        }
        assert!("linear:1".parse::<StepSchedule>().is_err());
        assert!("power:1".parse::<StepSchedule>().is_err());
        assert!("constant:x".parse::<StepSchedule>().is_err());
    }

    #[test]
    fn bounded_by_sup_on_sampled_indices() {
        let s = StepSchedule::power(0.7, 0.3).unwrap();
        for k in (0..=1_000_000).step_by(997) {
            assert!(s.alpha(k) <= s.sup_alpha());
        }
    }

    proptest! {
        #[test]
        fn monotone_and_positive(c in 1e-3f64..10.0, p in 0.0f64..=1.0, k in 0usize..100_000) {
            let s = StepSchedule::power(c, p).unwrap();
            prop_assert!(s.alpha(k) > 0.0);
            prop_assert!(s.alpha(k + 1) <= s.alpha(k));
            prop_assert!(s.alpha(k) <= s.sup_alpha());
        }

        #[test]
        fn partial_sums_unbounded(c in 0.2f64..2.0, p in 0.0f64..=1.0, bound in 0.0f64..2.0) {
            for s in [StepSchedule::power(c, p).unwrap(), StepSchedule::constant(c).unwrap()] {
                let k = s.horizon_exceeding(bound);
                prop_assert!(s.partial_sum(k) > bound, "{} K={} sum={}", s, k, s.partial_sum(k));
                prop_assert!(s.partial_sum(k + 1) > s.partial_sum(k));
            }
        }
    }
}
