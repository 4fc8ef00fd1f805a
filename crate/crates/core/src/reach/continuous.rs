use super::{
    ascent_seeds, probe::stability_probe, require_kind, ProbeMode, ReachParams, ReachReport,
    ReachStatus, ReversePart,
};
use crate::descent::{Direction, TerminalStatus};
use crate::error::{Error, Result};
use crate::flow::{integrate, sphere_exit};
use crate::landscape::{CriticalKind, ObjectiveFunction, Point};
use crate::schedule::StepSchedule;

/// Continuous-time reach: integrate the reverse flow from an ascent seed until
/// it leaves `B_ρ(target)` with `ρ = min(δ, ε)`, then follow the forward flow
/// from the exit point.
pub fn reach_continuous(
    f: &ObjectiveFunction,
    target: &Point,
    params: &ReachParams,
) -> Result<ReachReport> {
    params.validate()?;
    params.flow.validate(f.lipschitz())?;
    require_kind(f, target, CriticalKind::LocalMin, params.gd.gtol)?;
    let delta = match params.delta {
        Some(d) => d,
        None => {
            let eps = params.probe_epsilon.unwrap_or(params.epsilon);
            // The schedule is unused by the continuous probe.
            let unused = StepSchedule::constant(1.0 / f.lipschitz().max(1.0))?;
            stability_probe(
                f,
                target,
                eps,
                &unused,
                ProbeMode::Continuous,
                &params.probe_settings(),
            )?
            .delta_hat
        }
    };
    let rho = delta.min(params.epsilon);
    if !(params.seed_radius < rho) {
        return Err(Error::Precondition(format!(
            "seed radius {} must be below the escape radius {rho}",
            params.seed_radius
        )));
    }
    let seeds = ascent_seeds(
        f,
        target,
        params.seed_radius,
        params.n_seed_directions,
        params.seed,
        true,
    );
    let mut fallback = ReachReport::no_escape(target, rho, params.seed_radius);
    for seed in &seeds {
        let exit = match sphere_exit(f, seed, Direction::Reverse, target, rho, &params.flow) {
            Ok(e) => e,
            Err(Error::LeftBox { .. } | Error::NoCrossing { .. }) => continue,
            Err(e) => return Err(e),
        };
        let forward = integrate(f, &exit.point, Direction::Forward, &params.flow)?;
        let final_distance = (&forward.last().x - target).norm();
        let status = if forward.status == TerminalStatus::Converged && final_distance <= params.tol
        {
            ReachStatus::Success
        } else {
            ReachStatus::NoConverge
        };
        let report = ReachReport {
            target: target.clone(),
            x0: Some(exit.point.clone()),
            reverse_part: Some(ReversePart::Flow(exit.trajectory)),
            forward_part: Some(forward),
            final_distance,
            delta_used: rho,
            seed_radius: params.seed_radius,
            ascent_seed: Some(seed.clone()),
            status,
            schedule_used: None,
            replay_deviation: None,
        };
        if status == ReachStatus::Success {
            return Ok(report);
        }
        fallback = report;
    }
    Ok(fallback)
}
