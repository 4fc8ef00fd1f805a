use super::{
    ascent_seeds, max_on_ball, probe::stability_probe, require_kind, ProbeMode, ReachParams,
    ReachReport, ReachStatus, ReversePart,
};
use crate::descent::{run_gd, TerminalStatus};
use crate::error::{Error, Result};
use crate::landscape::{CriticalKind, ObjectiveFunction, Point};
use crate::reverse::{ascent_prox, reverse_orbit, OrbitStatus, ReverseOrbit};
use crate::schedule::{Regime, StepSchedule};

/// Result of pushing an ascent seed backwards out of a ball.
#[derive(Debug, Clone, PartialEq)]
pub enum Escape {
    /// Reverse orbit whose start `x_0` is the first point outside the ball.
    Exited(ReverseOrbit),
    /// `kbar_max` implicit steps never left the ball.
    Budget,
    /// An implicit step left the operating box.
    LeftBox,
}

/// Runs implicit ascent steps from `seed` until the orbit start leaves
/// `B_radius(center)`.
///
/// A constant schedule is extended one step at a time. Other schedules depend
/// on the step index, so the horizon `k̄` is found by doubling and then
/// binary search for the smallest `k̄` whose orbit start lies outside the ball.
pub fn escape_discrete(
    f: &ObjectiveFunction,
    center: &Point,
    seed: &Point,
    s: &StepSchedule,
    radius: f64,
    kbar_max: usize,
) -> Result<Escape> {
    let outside = |x: &Point| (x - center).norm() >= radius;
    if s.is_constant() {
        let a = s.c();
        let mut backward = vec![seed.clone()];
        for _ in 0..kbar_max {
            let y = match ascent_prox(f, backward.last().unwrap(), a) {
                Ok(y) => y,
                Err(Error::LeftBox { .. }) => return Ok(Escape::LeftBox),
                Err(e) => return Err(e),
            };
            let done = outside(&y);
            backward.push(y);
            if done {
                backward.reverse();
                let n = backward.len() - 1;
                return Ok(Escape::Exited(ReverseOrbit::assemble(
                    f,
                    backward,
                    0,
                    vec![a; n],
                    OrbitStatus::Complete,
                )));
            }
        }
        return Ok(Escape::Budget);
    }
    let exits =
        |orbit: &ReverseOrbit| orbit.status == OrbitStatus::LeftBox || outside(orbit.start());
    let mut hi = 1;
    loop {
        if exits(&reverse_orbit(f, seed, s, hi)?) {
            break;
        }
        if hi >= kbar_max {
            return Ok(Escape::Budget);
        }
        hi = (hi * 2).min(kbar_max);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if exits(&reverse_orbit(f, seed, s, mid)?) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let orbit = reverse_orbit(f, seed, s, hi)?;
    if orbit.status == OrbitStatus::LeftBox {
        return Ok(Escape::LeftBox);
    }
    Ok(Escape::Exited(orbit))
}

const MAX_ADJUSTMENTS: usize = 16;

/// Constructs `x0` near a local minimum whose descent trajectory under `s`
/// converges to it, by reversing descent from a nearby ascent seed.
///
/// The escape ball has radius `ρ = min(δ, ε)`. When the orbit start overshoots
/// the escape guarantee `δ + 2ᾱ/(1 − Lᾱ)·max|∇f|`, the schedule is halved; when it
/// leaves `B_ε`, `ρ` is reduced by the overshoot. Seeds are tried in order
/// (axes first) until one produces an escape that stays in the box.
pub fn reach_discrete(
    f: &ObjectiveFunction,
    target: &Point,
    s: &StepSchedule,
    params: &ReachParams,
) -> Result<ReachReport> {
    params.validate()?;
    require_kind(f, target, CriticalKind::LocalMin, params.gd.gtol)?;
    if !s.admissible(f, Regime::Prox) {
        return Err(Error::StepTooLarge {
            step: s.sup_alpha(),
            bound: 1.0 / f.lipschitz(),
        });
    }
    let delta = match params.delta {
        Some(d) => d,
        None => {
            let eps = params.probe_epsilon.unwrap_or(params.epsilon);
            stability_probe(
                f,
                target,
                eps,
                s,
                ProbeMode::Discrete,
                &params.probe_settings(),
            )?
            .delta_hat
        }
    };
    let rho0 = delta.min(params.epsilon);
    if !(params.seed_radius < rho0) {
        return Err(Error::Precondition(format!(
            "seed radius {} must be below the escape radius {rho0}",
            params.seed_radius
        )));
    }
    let grad_max = max_on_ball(f, target, delta, 201).grad_max;
    let seeds = ascent_seeds(
        f,
        target,
        params.seed_radius,
        params.n_seed_directions,
        params.seed,
        true,
    );
    let mut fallback = ReachReport::no_escape(target, rho0, params.seed_radius);
    for seed in &seeds {
        let mut sched = *s;
        let mut rho = rho0;
        for _ in 0..MAX_ADJUSTMENTS {
            let orbit = match escape_discrete(f, target, seed, &sched, rho, params.kbar_max)? {
                Escape::Exited(o) => o,
                Escape::Budget | Escape::LeftBox => break,
            };
            let x0 = orbit.start().clone();
            let dist = (&x0 - target).norm();
            let a = sched.sup_alpha();
            let guarantee = delta + 2.0 * a / (1.0 - f.lipschitz() * a) * grad_max;
            if dist > guarantee {
                sched = sched.scaled(0.5)?;
                continue;
            }
            if dist > params.epsilon {
                rho -= 1.5 * (dist - params.epsilon);
                if rho <= params.seed_radius {
                    break;
                }
                continue;
            }
            let forward = run_gd(f, &x0, &sched, &params.gd)?;
            let last = forward.last().x.clone();
            let final_distance = (&last - target).norm();
            let status =
                if forward.status == TerminalStatus::Converged && final_distance <= params.tol {
                    ReachStatus::Success
                } else {
                    ReachStatus::NoConverge
                };
            let report = ReachReport {
                target: target.clone(),
                x0: Some(x0),
                replay_deviation: Some(orbit.replay_deviation(f)),
                reverse_part: Some(ReversePart::Orbit(orbit)),
                forward_part: Some(forward),
                final_distance,
                delta_used: rho,
                seed_radius: params.seed_radius,
                ascent_seed: Some(seed.clone()),
                status,
                schedule_used: Some(sched),
            };
            if status == ReachStatus::Success {
                return Ok(report);
            }
            fallback = report;
            break;
        }
    }
    Ok(fallback)
}
