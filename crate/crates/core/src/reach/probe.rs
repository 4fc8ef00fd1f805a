use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::require_kind;
use crate::descent::{run_gd, Direction, GdOptions, TerminalStatus};
use crate::error::{Error, Result};
use crate::flow::{integrate, FlowSettings};
use crate::landscape::{CriticalKind, ObjectiveFunction, Point};
use crate::sampling::{axis_directions, Lcg64};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    /// Quasi-random starts per tested sphere, on top of the 2n axis points.
    pub n_samples: usize,
    pub bisection_steps: usize,
    pub seed: u64,
    pub gd: GdOptions,
    pub flow: FlowSettings,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            n_samples: 16,
            bisection_steps: 10,
            seed: 0,
            gd: GdOptions::default(),
            flow: FlowSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestedRadius {
    pub radius: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEstimate {
    pub epsilon: f64,
    /// Largest tested radius whose starts all stayed in `B_ε` and converged (0 if none).
    pub delta_hat: f64,
    /// Total number of trajectories run.
    pub samples: usize,
    /// Starts that escaped `B_ε` or failed to converge, over all tested radii.
    pub failures: Vec<Point>,
    pub tested: Vec<TestedRadius>,
}

/// Starts on the sphere of radius `radius`: the 2n axis points followed by
/// `n_samples` quasi-random points from the seeded generator.
pub fn probe_starts(target: &Point, radius: f64, n_samples: usize, seed: u64) -> Vec<Point> {
    let mut rng = Lcg64::new(seed);
    let mut dirs = axis_directions(target.len());
    dirs.extend((0..n_samples).map(|_| rng.direction(target.len())));
    dirs.into_iter().map(|d| target + d * radius).collect()
}

/// Whether the trajectory from `x0` stays in the closed `ε`-ball and converges.
pub fn start_contained(
    f: &ObjectiveFunction,
    target: &Point,
    epsilon: f64,
    x0: &Point,
    mode: ProbeMode,
    s: &StepSchedule,
    settings: &ProbeSettings,
) -> Result<bool> {
    let traj = match mode {
        ProbeMode::Discrete => run_gd(f, x0, s, &settings.gd)?,
        ProbeMode::Continuous => integrate(f, x0, Direction::Forward, &settings.flow)?,
    };
    let inside = traj
        .states
        .iter()
        .all(|st| (&st.x - target).norm() <= epsilon * (1.0 + 1e-12));
    Ok(inside && traj.status == TerminalStatus::Converged)
}

/// Estimates the stability radius `δ(ε)` of a local minimum.
///
/// Tests `δ = ε` first; if any start fails, bisects on `(0, ε)`.
/// `s` is ignored in continuous mode.
pub fn stability_probe(
    f: &ObjectiveFunction,
    target: &Point,
    epsilon: f64,
    s: &StepSchedule,
    mode: ProbeMode,
    settings: &ProbeSettings,
) -> Result<StabilityEstimate> {
    require_kind(f, target, CriticalKind::LocalMin, settings.gd.gtol)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: "must be positive".into(),
        });
    }
    if !f.bounds().contains_ball(target, epsilon) {
        return Err(Error::Precondition(format!(
            "ball of radius {epsilon} around the target leaves the box"
        )));
    }
    let test = |radius: f64| -> Result<Vec<Point>> {
        let starts = probe_starts(target, radius, settings.n_samples, settings.seed);
        let verdicts: Vec<Result<bool>> = starts
            .par_iter()
            .map(|x0| start_contained(f, target, epsilon, x0, mode, s, settings))
            .collect();
        let mut failed = Vec::new();
        for (x0, v) in starts.into_iter().zip(verdicts) {
            if !v? {
                failed.push(x0);
            }
        }
        Ok(failed)
    };
    let per_radius = 2 * target.len() + settings.n_samples;
    let mut tested = Vec::new();
    let mut failures = test(epsilon)?;
    tested.push(TestedRadius {
        radius: epsilon,
        failures: failures.len(),
    });
    let mut delta_hat = epsilon;
    if !failures.is_empty() {
        let (mut lo, mut hi) = (0.0, epsilon);
        delta_hat = 0.0;
        for _ in 0..settings.bisection_steps {
            let mid = 0.5 * (lo + hi);
            let failed = test(mid)?;
            tested.push(TestedRadius {
                radius: mid,
                failures: failed.len(),
            });
            if failed.is_empty() {
                delta_hat = mid;
                lo = mid;
            } else {
                hi = mid;
                failures.extend(failed);
            }
        }
    }
    Ok(StabilityEstimate {
        epsilon,
        delta_hat,
        samples: tested.len() * per_radius,
        failures,
        tested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::make_builtin;
    use nalgebra::DVector;

    fn p(xs: &[f64]) -> Point {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn quadratic_is_stable_at_every_radius() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.5).unwrap();
        for mode in [ProbeMode::Discrete, ProbeMode::Continuous] {
            let est =
                stability_probe(&q, &p(&[0.0]), 1.0, &s, mode, &ProbeSettings::default()).unwrap();
            assert_eq!(est.delta_hat, 1.0);
            assert!(est.failures.is_empty());
            assert_eq!(est.tested.len(), 1);
        }
    }

    #[test]
    fn wide_ball_on_the_double_well_needs_bisection() {
        // ε = 1.5 around +1 reaches the maximum at 0; starts there never move.
        let dw = make_builtin("double_well", &[2.5]).unwrap();
        let s = StepSchedule::constant(0.01).unwrap();
        let est = stability_probe(
            &dw,
            &p(&[1.0]),
            1.5,
            &s,
            ProbeMode::Discrete,
            &ProbeSettings::default(),
        )
        .unwrap();
        assert!(est.delta_hat > 0.0 && est.delta_hat < 1.5);
        assert!(est.delta_hat >= 0.9, "{}", est.delta_hat);
        assert!(!est.failures.is_empty());
        // Every start on a reported radius stays contained when re-run.
        for x0 in probe_starts(&p(&[1.0]), est.delta_hat, 16, 0) {
            assert!(start_contained(
                &dw,
                &p(&[1.0]),
                1.5,
                &x0,
                ProbeMode::Discrete,
                &s,
                &ProbeSettings::default()
            )
            .unwrap());
        }
    }

    #[test]
    fn rejects_bad_targets() {
        let dw = make_builtin("double_well", &[]).unwrap();
        let s = StepSchedule::constant(0.01).unwrap();
        let set = ProbeSettings::default();
        assert!(stability_probe(&dw, &p(&[0.0]), 0.5, &s, ProbeMode::Discrete, &set).is_err());
        assert!(stability_probe(&dw, &p(&[1.0]), 0.6, &s, ProbeMode::Discrete, &set).is_err());
    }

    #[test]
    fn deterministic() {
        let h = make_builtin("himmelblau", &[]).unwrap();
        let t = h.critical_points()[0].point.clone();
        let s = StepSchedule::constant(0.5 / h.lipschitz()).unwrap();
        let set = ProbeSettings {
            n_samples: 4,
            ..Default::default()
        };
        let a = stability_probe(&h, &t, 0.3, &s, ProbeMode::Discrete, &set).unwrap();
        let b = stability_probe(&h, &t, 0.3, &s, ProbeMode::Discrete, &set).unwrap();
        assert_eq!(a, b);
    }
}
