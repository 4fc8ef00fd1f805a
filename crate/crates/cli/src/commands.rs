//! Subcommand bodies. Each returns `Ok(true)` on success and `Ok(false)` on a
//! procedure failure status.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use basinreach::descent::Direction;
use basinreach::io::{write_orbit_csv, write_trajectory_csv};
use basinreach::landscape::BUILTIN_NAMES;
use basinreach::reach::{ReachParams, ReversePart, StabilityEstimate};
use basinreach::reverse::prox_certificates;
use basinreach::sampling::Lcg64;
use basinreach::{
    classify_limit, edge_of_stability, integrate, make_builtin, prox, reach_continuous,
    reach_discrete, reach_general, run_gd, stability_probe, FlowSettings, GdOptions, GeneralMode,
    ObjectiveFunction, Point, ProbeMode, ReachStatus, TerminalStatus, Trajectory,
};
use serde_json::{json, Value};

use crate::config::{FlowDirection, Mode, Procedure, Resolved, RunConfig};
use crate::CliError;

type Outcome = Result<bool, CliError>;

fn coords(p: &Point) -> Vec<f64> {
    p.iter().copied().collect()
}

fn core<T>(r: basinreach::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

/// Output directory with the resolved config already written.
struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(config: &RunConfig) -> Result<Self, CliError> {
        let dir = PathBuf::from(&config.output_dir);
        fs::create_dir_all(&dir)?;
        let out = Self { dir };
        out.json(
            "config.json",
            &serde_json::to_value(config).expect("config serializes"),
        )?;
        Ok(out)
    }

    fn json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn report(&self, name: &str, value: &Value) -> Result<(), CliError> {
        self.json(name, value)?;
        println!(
            "{}",
            serde_json::to_string_pretty(value).expect("report serializes")
        );
        Ok(())
    }

    fn trajectory(&self, name: &str, traj: &Trajectory) -> Result<String, CliError> {
        let file = BufWriter::new(File::create(self.dir.join(name))?);
        write_trajectory_csv(traj, file)
            .map_err(|e| CliError::failure(format!("writing {name}: {e}")))?;
        Ok(name.to_string())
    }
}

fn flow_settings(c: &RunConfig) -> FlowSettings {
    FlowSettings {
        h: c.h,
        t_max: c.t_max,
        gtol: c.gtol,
        event_refine_tol: c.event_refine_tol,
    }
}

fn gd_options(c: &RunConfig) -> GdOptions {
    GdOptions {
        gtol: c.gtol,
        max_iter: c.max_iter,
        ..GdOptions::default()
    }
}

fn reach_params(c: &RunConfig) -> ReachParams {
    ReachParams {
        epsilon: c.epsilon,
        delta: c.delta,
        probe_epsilon: c.probe_epsilon,
        seed_radius: c.seed_radius,
        tol: c.tol,
        gd: gd_options(c),
        flow: flow_settings(c),
        kbar_max: c.kbar_max,
        n_probe_samples: c.n_samples,
        seed: c.seed,
        ..ReachParams::default()
    }
}

fn catalog_entry(f: &ObjectiveFunction) -> Value {
    json!({
        "name": f.name(),
        "params": f.params(),
        "dim": f.dim(),
        "lipschitz": f.lipschitz(),
        "bounds": { "lower": f.bounds().lower, "upper": f.bounds().upper },
        "critical_points": f.critical_points().iter().map(|c| json!({
            "point": coords(&c.point),
            "kind": c.kind,
            "f_value": c.f_value,
        })).collect::<Vec<_>>(),
    })
}

pub fn bench_list(as_json: bool) -> Outcome {
    // quad has no parameter-free form; list it with λ = (1).
    let fs: Vec<ObjectiveFunction> = BUILTIN_NAMES
        .iter()
        .map(|&n| core(make_builtin(n, if n == "quad" { &[1.0] } else { &[] })))
        .collect::<Result<_, _>>()?;
    if as_json {
        let v: Vec<Value> = fs.iter().map(catalog_entry).collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&v).expect("catalog serializes")
        );
        return Ok(true);
    }
    for f in &fs {
        println!(
            "{}  params={:?}  dim={}  L={}  box={:?}..{:?}",
            f.name(),
            f.params(),
            f.dim(),
            f.lipschitz(),
            f.bounds().lower,
            f.bounds().upper
        );
        println!("  {:<4} {:<10} {:<44} {}", "#", "kind", "point", "f");
        for (i, c) in f.critical_points().iter().enumerate() {
            println!(
                "  {:<4} {:<10} {:<44} {:.6e}",
                i,
                c.kind.to_string(),
                format!("{:?}", coords(&c.point)),
                c.f_value
            );
        }
    }
    Ok(true)
}

pub fn run(config: RunConfig) -> Outcome {
    let r = Resolved::new(config, &[Procedure::Gd, Procedure::Flow])?;
    let c = &r.config;
    let x0 = r.x0();
    let traj = match r.procedure {
        Procedure::Gd => core(run_gd(&r.f, &x0, &r.schedule, &gd_options(c)))?,
        _ => {
            let dir = match c.direction {
                FlowDirection::Forward => Direction::Forward,
                FlowDirection::Reverse => Direction::Reverse,
            };
            core(integrate(&r.f, &x0, dir, &flow_settings(c)))?
        }
    };
    let out = Output::create(c)?;
    let csv = out.trajectory("trajectory.csv", &traj)?;
    let last = traj.last();
    let limit_kind = traj
        .limit
        .as_ref()
        .map(|x| classify_limit(&r.f, x, c.gtol.max(1e-8)).kind);
    let ok = match traj.status {
        TerminalStatus::Converged => true,
        TerminalStatus::BudgetExhausted => {
            c.direction == FlowDirection::Reverse && r.procedure == Procedure::Flow
        }
        _ => false,
    };
    out.report(
        "summary.json",
        &json!({
            "function": c.function,
            "procedure": r.procedure,
            "x0": coords(&x0),
            "status": traj.status,
            "steps": last.k,
            "final_t": last.t,
            "final_point": coords(&last.x),
            "final_f": last.f_value,
            "final_gnorm": last.grad_norm,
            "limit_kind": limit_kind,
            "descent_violations": traj.descent_violations(&r.f),
            "trajectory_csv_path": csv,
        }),
    )?;
    Ok(ok)
}

pub fn reach(config: RunConfig) -> Outcome {
    let r = Resolved::new(config, &[Procedure::Reach, Procedure::ReachGeneral])?;
    let c = &r.config;
    let target = r.target();
    let params = reach_params(c);
    let report = match (r.procedure, c.mode) {
        (Procedure::Reach, Mode::Discrete) => {
            core(reach_discrete(&r.f, &target, &r.schedule, &params))?
        }
        (Procedure::Reach, Mode::Continuous) => core(reach_continuous(&r.f, &target, &params))?,
        (_, Mode::Discrete) => core(reach_general(
            &r.f,
            &target,
            GeneralMode::Discrete,
            Some(&r.schedule),
            &params,
        ))?,
        (_, Mode::Continuous) => core(reach_general(
            &r.f,
            &target,
            GeneralMode::Continuous,
            None,
            &params,
        ))?,
    };
    let out = Output::create(c)?;
    let forward_csv = match &report.forward_part {
        Some(t) => Some(out.trajectory("forward.csv", t)?),
        None => None,
    };
    let reverse_csv = match &report.reverse_part {
        Some(ReversePart::Flow(t)) => Some(out.trajectory("reverse.csv", t)?),
        Some(ReversePart::Orbit(o)) => {
            let file = BufWriter::new(File::create(out.dir.join("reverse.csv"))?);
            write_orbit_csv(o, &r.f, file)
                .map_err(|e| CliError::failure(format!("writing reverse.csv: {e}")))?;
            Some("reverse.csv".to_string())
        }
        None => None,
    };
    let kbar = match &report.reverse_part {
        Some(ReversePart::Orbit(o)) => Some(o.kbar()),
        _ => None,
    };
    out.report(
        "report.json",
        &json!({
            "target": coords(&report.target),
            "x0": report.x0.as_ref().map(coords),
            "delta_used": report.delta_used,
            "seed_radius": report.seed_radius,
            "final_distance": report.final_distance,
            "status": report.status,
            "forward_csv_path": forward_csv,
            "reverse_csv_path": reverse_csv,
            "diagnostics": {
                "procedure": r.procedure,
                "mode": c.mode,
                "ascent_seed": report.ascent_seed.as_ref().map(coords),
                "schedule": report.schedule_used.map(|s| s.to_string()),
                "kbar": kbar,
                "replay_deviation": report.replay_deviation,
                "forward_status": report.forward_part.as_ref().map(|t| t.status),
                "descent_violations": report.forward_part.as_ref().map(|t| t.descent_violations(&r.f)),
            },
        }),
    )?;
    Ok(report.status == ReachStatus::Success)
}

fn probe_json(est: &StabilityEstimate, target: &Point, mode: Mode) -> Value {
    json!({
        "target": coords(target),
        "mode": mode,
        "epsilon": est.epsilon,
        "delta_hat": est.delta_hat,
        "samples": est.samples,
        "failures": est.failures.iter().map(coords).collect::<Vec<_>>(),
        "tested": est.tested,
    })
}

pub fn probe(config: RunConfig) -> Outcome {
    let r = Resolved::new(config, &[Procedure::Probe])?;
    let c = &r.config;
    let target = r.target();
    let params = reach_params(c);
    let mode = match c.mode {
        Mode::Discrete => ProbeMode::Discrete,
        Mode::Continuous => ProbeMode::Continuous,
    };
    let epsilon = c.probe_epsilon.unwrap_or(c.epsilon);
    let est = core(stability_probe(
        &r.f,
        &target,
        epsilon,
        &r.schedule,
        mode,
        &params.probe_settings(),
    ))?;
    let out = Output::create(c)?;
    out.report("probe.json", &probe_json(&est, &target, c.mode))?;
    Ok(est.delta_hat > 0.0)
}

pub fn eos(config: RunConfig) -> Outcome {
    let r = Resolved::new(config, &[Procedure::Eos])?;
    let c = &r.config;
    let alpha = c.alpha.expect("alpha is resolved");
    let x0 = r.x0();
    let rep = edge_of_stability(&r.f, alpha, &x0).map_err(|e| match e {
        basinreach::Error::Precondition(m) => CliError::config("function", m),
        other => CliError::from_core(other),
    })?;
    let out = Output::create(c)?;
    let csv = out.trajectory("trajectory.csv", &rep.trajectory)?;
    out.report(
        "eos.json",
        &json!({
            "function": c.function,
            "alpha": rep.alpha,
            "x0": coords(&x0),
            "verdict": rep.verdict,
            "spectral_radius": rep.spectral_radius,
            "effective_radius": rep.effective_radius,
            "stability_threshold": rep.stability_threshold,
            "simulated": rep.simulated,
            "agrees": rep.agrees,
            "trajectory_csv_path": csv,
        }),
    )?;
    Ok(true)
}

pub fn check(config: RunConfig) -> Outcome {
    let r = Resolved::new(config, &[Procedure::ProxCheck])?;
    let c = &r.config;
    let f = &r.f;
    let mut rng = Lcg64::new(c.seed);
    let lambda_max = 0.9 / f.lipschitz();
    let (mut identity_failures, mut decrease_failures, mut step_failures, mut errors) =
        (0, 0, 0, 0);
    let mut max_residual: f64 = 0.0;
    for _ in 0..c.n_checks {
        let x = rng.point_in(&f.bounds().lower, &f.bounds().upper);
        let lambda = rng.uniform() * lambda_max;
        let xp = match prox(f, &x, lambda) {
            Ok(p) => p,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let residual = (&xp - (&x - f.gradient(&xp) * lambda)).norm();
        max_residual = max_residual.max(residual);
        if residual > 1e-10 * (1.0 + x.norm()) {
            identity_failures += 1;
        }
        let cert = prox_certificates(f, &x, lambda, &xp);
        decrease_failures += usize::from(!cert.dec_ok);
        step_failures += usize::from(!cert.step_ok);
    }
    let passed = identity_failures + decrease_failures + step_failures + errors == 0;
    let out = Output::create(c)?;
    out.report(
        "prox_check.json",
        &json!({
            "function": c.function,
            "samples": c.n_checks,
            "lambda_max": lambda_max,
            "max_identity_residual": max_residual,
            "identity_failures": identity_failures,
            "decrease_failures": decrease_failures,
            "step_failures": step_failures,
            "solver_errors": errors,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}
