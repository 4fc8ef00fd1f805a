use serde::{Deserialize, Serialize};

use super::{
    ascent_floor, ascent_seeds, discrete::escape_discrete, require_kind, Escape, ReachParams,
    ReachReport, ReachStatus, ReversePart,
};
use crate::descent::{run_gd, Direction, GdOptions, TerminalStatus, Trajectory};
use crate::error::{Error, Result};
use crate::flow::{integrate_minnorm, sphere_exit};
use crate::landscape::{cap, CriticalKind, ObjectiveFunction, Point};
use crate::schedule::{Regime, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralMode {
    Continuous,
    Discrete,
}

/// Point where `f` first drops to `level` along the recorded descent states,
/// located by bisection on the segment between the bracketing states.
pub fn level_crossing(f: &ObjectiveFunction, traj: &Trajectory, level: f64) -> Option<Point> {
    let k = traj.states.iter().position(|s| s.f_value <= level)?;
    if k == 0 {
        return Some(traj.states[0].x.clone());
    }
    let (a, b) = (&traj.states[k - 1].x, &traj.states[k].x);
    let at = |t: f64| a + (b - a) * t;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f.value(&at(mid)) > level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Some(at(hi))
}

/// Reach toward a saddle. The escape is the same as for minima (reverse flow
/// or implicit ascent steps out of `B_ρ`, with `ρ = min(δ, ε)` and `δ`
/// defaulting to `ε/2`). The forward phase then descends until `f` reaches
/// `f(target)`: in continuous mode by the min-norm flow of
/// `max(f, f(target))`, which stalls there, and in discrete mode by descent
/// stopped at the level crossing. `final_distance` is the distance from the
/// stall or crossing point to the target.
///
/// Seeds scan quasi-random directions before the coordinate axes; the first
/// seed whose escape succeeds determines the report.
pub fn reach_general(
    f: &ObjectiveFunction,
    target: &Point,
    mode: GeneralMode,
    s: Option<&StepSchedule>,
    params: &ReachParams,
) -> Result<ReachReport> {
    params.validate()?;
    require_kind(f, target, CriticalKind::Saddle, params.gd.gtol)?;
    let sched = match mode {
        GeneralMode::Continuous => {
            params.flow.validate(f.lipschitz())?;
            None
        }
        GeneralMode::Discrete => {
            let s =
                s.ok_or_else(|| Error::Precondition("discrete mode needs a step schedule".into()))?;
            if !s.admissible(f, Regime::Prox) {
                return Err(Error::StepTooLarge {
                    step: s.sup_alpha(),
                    bound: 1.0 / f.lipschitz(),
                });
            }
            Some(*s)
        }
    };
    let rho = params
        .delta
        .unwrap_or(0.5 * params.epsilon)
        .min(params.epsilon);
    if !(params.seed_radius < rho) {
        return Err(Error::Precondition(format!(
            "seed radius {} must be below the escape radius {rho}",
            params.seed_radius
        )));
    }
    let level = f.value(target);
    let seeds = ascent_seeds(
        f,
        target,
        params.seed_radius,
        params.n_seed_directions,
        params.seed,
        false,
    );
    for seed in &seeds {
        let (x0, reverse_part, replay_deviation) = match &sched {
            None => match sphere_exit(f, seed, Direction::Reverse, target, rho, &params.flow) {
                Ok(e) => (e.point, ReversePart::Flow(e.trajectory), None),
                Err(Error::LeftBox { .. } | Error::NoCrossing { .. }) => continue,
                Err(e) => return Err(e),
            },
            Some(s) => match escape_discrete(f, target, seed, s, rho, params.kbar_max)? {
                Escape::Exited(o) => {
                    let dev = o.replay_deviation(f);
                    (o.start().clone(), ReversePart::Orbit(o), Some(dev))
                }
                Escape::Budget | Escape::LeftBox => continue,
            },
        };
        if !(f.value(&x0) > ascent_floor(level)) {
            continue;
        }
        let (forward, end) = match &sched {
            None => {
                let g = cap(f, level);
                let traj = integrate_minnorm(&g, &x0, &params.flow)?;
                let end = (traj.status == TerminalStatus::Converged).then(|| traj.last().x.clone());
                (traj, end)
            }
            Some(s) => {
                let opts = GdOptions {
                    stop_at_level: Some(level),
                    ..params.gd
                };
                let traj = run_gd(f, &x0, s, &opts)?;
                let end = if traj.status == TerminalStatus::LevelReached {
                    level_crossing(f, &traj, level)
                } else {
                    None
                };
                (traj, end)
            }
        };
        let final_distance = end.as_ref().map_or(f64::INFINITY, |e| (e - target).norm());
        let status = if final_distance <= params.tol {
            ReachStatus::Success
        } else {
            ReachStatus::NoConverge
        };
        let report = ReachReport {
            target: target.clone(),
            x0: Some(x0),
            reverse_part: Some(reverse_part),
            forward_part: Some(forward),
            final_distance,
            delta_used: rho,
            seed_radius: params.seed_radius,
            ascent_seed: Some(seed.clone()),
            status,
            schedule_used: sched,
            replay_deviation,
        };
        return Ok(report);
    }
    Ok(ReachReport::no_escape(target, rho, params.seed_radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::make_builtin;
    use nalgebra::DVector;

    fn saddle_params(r: f64) -> ReachParams {
        ReachParams {
            epsilon: 1.0,
            delta: Some(0.5),
            seed_radius: r,
            tol: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn distances_shrink_with_the_seed_radius() {
        let f = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        let origin = DVector::zeros(2);
        let s = StepSchedule::constant(0.25).unwrap();
        for mode in [GeneralMode::Continuous, GeneralMode::Discrete] {
            let d: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&r| {
                    reach_general(&f, &origin, mode, Some(&s), &saddle_params(r))
                        .unwrap()
                        .final_distance
                })
                .collect();
            assert!(d[0] > d[1] && d[1] > d[2], "{mode:?} {d:?}");
            assert!(d[2] <= 1e-2);
        }
    }

    #[test]
    fn continuous_distance_matches_the_hyperbola() {
        // Reverse flow from (r cosθ, r sinθ) exits B_δ near the x axis at
        // (≈δ, r²sinθcosθ/δ); forward descent then meets x = |y| at
        // |x| = r·sqrt(sinθ cosθ).
        let f = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        let origin = DVector::zeros(2);
        let r = 1e-2;
        let rep = reach_general(
            &f,
            &origin,
            GeneralMode::Continuous,
            None,
            &saddle_params(r),
        )
        .unwrap();
        let a = rep.ascent_seed.unwrap();
        let (c, s) = (a[0].abs() / r, a[1].abs() / r);
        let expected = 2f64.sqrt() * r * (s * c).sqrt();
        assert!(
            (rep.final_distance - expected).abs() <= 0.05 * expected + 1e-5,
            "{} {expected}",
            rep.final_distance
        );
    }

    #[test]
    fn himmelblau_saddle() {
        let h = make_builtin("himmelblau", &[]).unwrap();
        let t = h
            .critical_points()
            .iter()
            .find(|c| c.kind == CriticalKind::Saddle)
            .unwrap()
            .point
            .clone();
        let params = ReachParams {
            epsilon: 0.2,
            seed_radius: 1e-4,
            tol: 1e-2,
            ..Default::default()
        };
        let flow = crate::flow::FlowSettings {
            h: 0.1 / h.lipschitz(),
            t_max: 50.0,
            ..Default::default()
        };
        let rep = reach_general(
            &h,
            &t,
            GeneralMode::Continuous,
            None,
            &ReachParams { flow, ..params },
        )
        .unwrap();
        assert!(rep.succeeded(), "{}", rep.final_distance);
    }

    #[test]
    fn rejects_minima_and_missing_schedule() {
        let f = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        let q = make_builtin("quad", &[1.0, 1.0]).unwrap();
        let origin = DVector::zeros(2);
        assert!(reach_general(
            &q,
            &origin,
            GeneralMode::Continuous,
            None,
            &saddle_params(0.1)
        )
        .is_err());
        assert!(reach_general(
            &f,
            &origin,
            GeneralMode::Discrete,
            None,
            &saddle_params(0.1)
        )
        .is_err());
    }
}
