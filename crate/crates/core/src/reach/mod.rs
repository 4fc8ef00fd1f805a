//! Reachability procedures: build an initial point whose forward dynamics
//! converge to a designated critical point, plus the stability probe that
//! supplies the escape radius and the edge-of-stability experiment.

mod bound;
mod continuous;
mod discrete;
mod eos;
mod general;
mod probe;

pub use bound::{ball_lattice, grad_lower_bound, max_on_ball, BallMaxima, GradLowerBound};
pub use continuous::reach_continuous;
pub use discrete::{escape_discrete, reach_discrete, Escape};
pub use eos::{edge_of_stability, EosReport, Verdict};
pub use general::{level_crossing, reach_general, GeneralMode};
pub use probe::{
    probe_starts, stability_probe, start_contained, ProbeMode, ProbeSettings, StabilityEstimate,
};

use serde::{Deserialize, Serialize};

use crate::descent::{classify_limit, GdOptions, LimitKind, Trajectory};
use crate::error::{Error, Result};
use crate::flow::FlowSettings;
use crate::landscape::{CriticalKind, ObjectiveFunction, Point};
use crate::reverse::ReverseOrbit;
use crate::sampling::{axis_directions, Lcg64};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachStatus {
    Success,
    NoEscape,
    NoConverge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReversePart {
    Orbit(ReverseOrbit),
    Flow(Trajectory),
}

/// Outcome of one reachability run.
///
/// `x0`, `reverse_part` and `forward_part` are absent when no escape was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachReport {
    pub target: Point,
    pub x0: Option<Point>,
    pub reverse_part: Option<ReversePart>,
    pub forward_part: Option<Trajectory>,
    /// Distance from the forward limit (or stall / level-crossing point) to the target.
    pub final_distance: f64,
    /// Radius of the escape ball actually used.
    pub delta_used: f64,
    pub seed_radius: f64,
    pub ascent_seed: Option<Point>,
    pub status: ReachStatus,
    /// Schedule of the final forward replay, after any step-size shrinking.
    pub schedule_used: Option<StepSchedule>,
    /// Largest gap between the forward replay and the reverse orbit.
    pub replay_deviation: Option<f64>,
}

impl ReachReport {
    pub(crate) fn no_escape(target: &Point, delta_used: f64, seed_radius: f64) -> Self {
        Self {
            target: target.clone(),
            x0: None,
            reverse_part: None,
            forward_part: None,
            final_distance: f64::INFINITY,
            delta_used,
            seed_radius,
            ascent_seed: None,
            status: ReachStatus::NoEscape,
            schedule_used: None,
            replay_deviation: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == ReachStatus::Success
    }
}

/// Tolerances and budgets shared by the reach procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachParams {
    /// The constructed start must lie in `B_ε(target)`.
    pub epsilon: f64,
    /// Escape radius. When absent it comes from [`stability_probe`] (minimum
    /// targets) or defaults to `epsilon / 2` (saddle targets).
    pub delta: Option<f64>,
    /// Ball radius handed to the stability probe; defaults to `epsilon`.
    pub probe_epsilon: Option<f64>,
    pub seed_radius: f64,
    pub tol: f64,
    pub gd: GdOptions,
    pub flow: FlowSettings,
    pub kbar_max: usize,
    pub n_probe_samples: usize,
    pub bisection_steps: usize,
    /// Quasi-random ascent directions tried besides the coordinate axes.
    pub n_seed_directions: usize,
    pub seed: u64,
}

impl Default for ReachParams {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            delta: None,
            probe_epsilon: None,
            seed_radius: 1e-3,
            tol: 1e-4,
            gd: GdOptions::default(),
            flow: FlowSettings::default(),
            kbar_max: 1 << 20,
            n_probe_samples: 16,
            bisection_steps: 10,
            n_seed_directions: 32,
            seed: 0,
        }
    }
}

impl ReachParams {
    pub fn probe_settings(&self) -> ProbeSettings {
        ProbeSettings {
            n_samples: self.n_probe_samples,
            bisection_steps: self.bisection_steps,
            seed: self.seed,
            gd: self.gd,
            flow: self.flow,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} must be positive"),
                })
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("seed_radius", self.seed_radius)?;
        positive("tol", self.tol)?;
        if let Some(d) = self.delta {
            positive("delta", d)?;
        }
        Ok(())
    }
}

/// Strictness floor for ascent seeds: `f(a) > f(target) + 1e-12·(1 + |f(target)|)`.
pub fn ascent_floor(f_target: f64) -> f64 {
    f_target + 1e-12 * (1.0 + f_target.abs())
}

/// Candidate seeds on the sphere of radius `radius` around `target` that
/// strictly increase `f`, scanning the 2n axis directions and then
/// `n_random` quasi-random directions (or the reverse order).
pub fn ascent_seeds(
    f: &ObjectiveFunction,
    target: &Point,
    radius: f64,
    n_random: usize,
    seed: u64,
    axes_first: bool,
) -> Vec<Point> {
    let mut rng = Lcg64::new(seed);
    let random: Vec<Point> = (0..n_random).map(|_| rng.direction(target.len())).collect();
    let axes = axis_directions(target.len());
    let dirs: Vec<Point> = if axes_first {
        axes.into_iter().chain(random).collect()
    } else {
        random.into_iter().chain(axes).collect()
    };
    let floor = ascent_floor(f.value(target));
    dirs.into_iter()
        .map(|d| target + d * radius)
        .filter(|a| f.bounds().contains(a) && f.value(a) > floor)
        .collect()
}

/// Checks that `target` is a local minimum, first against the catalog and
/// then by [`classify_limit`].
pub(crate) fn require_kind(
    f: &ObjectiveFunction,
    target: &Point,
    want: CriticalKind,
    gtol: f64,
) -> Result<()> {
    f.check_dim(target)?;
    if let Some(c) = f.find_critical(target, 1e-8) {
        if c.kind == want {
            return Ok(());
        }
        return Err(Error::Precondition(format!(
            "target is cataloged as {}, expected {want}",
            c.kind
        )));
    }
    let tol = gtol.max(1e-12);
    let got = classify_limit(f, target, tol.max(1e-8)).kind;
    let expected = match want {
        CriticalKind::LocalMin => LimitKind::LocalMin,
        CriticalKind::LocalMax => LimitKind::LocalMax,
        CriticalKind::Saddle => LimitKind::Saddle,
    };
    if got == expected {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "target classifies as {got:?}, expected {want}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::make_builtin;
    use nalgebra::DVector;

    #[test]
    fn seeds_increase_f() {
        let h = make_builtin("himmelblau", &[]).unwrap();
        let t = h.critical_points()[0].point.clone();
        let seeds = ascent_seeds(&h, &t, 1e-3, 8, 0, true);
        assert_eq!(seeds.len(), 12);
        assert_eq!(seeds[0], &t + DVector::from_vec(vec![1e-3, 0.0]));
        for a in seeds {
            assert!(h.value(&a) > h.value(&t));
            assert!(((&a - &t).norm() - 1e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn saddle_seeds_skip_descending_directions() {
        let s = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        let origin = DVector::zeros(2);
        let seeds = ascent_seeds(&s, &origin, 0.1, 0, 0, true);
        // Only ±e1 raise x² − y².
        assert_eq!(seeds.len(), 2);
        assert!(seeds.iter().all(|a| a[1] == 0.0));
    }

    #[test]
    fn kind_checks() {
        let dw = make_builtin("double_well", &[]).unwrap();
        assert!(require_kind(
            &dw,
            &DVector::from_vec(vec![1.0]),
            CriticalKind::LocalMin,
            1e-10
        )
        .is_ok());
        assert!(require_kind(
            &dw,
            &DVector::from_vec(vec![0.0]),
            CriticalKind::LocalMin,
            1e-10
        )
        .is_err());
        assert!(require_kind(
            &dw,
            &DVector::from_vec(vec![0.5]),
            CriticalKind::LocalMin,
            1e-10
        )
        .is_err());
    }
}
