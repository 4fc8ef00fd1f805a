use serde::{Deserialize, Serialize};

use crate::descent::{run_gd, GdOptions, TerminalStatus, Trajectory};
use crate::error::{Error, Result};
use crate::landscape::{ObjectiveFunction, Point};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Neutral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EosReport {
    pub alpha: f64,
    pub verdict: Verdict,
    /// `max_i |1 − αλᵢ|` over all eigenvalues.
    pub spectral_radius: f64,
    /// The same maximum restricted to coordinates where `x0` is nonzero.
    pub effective_radius: f64,
    /// `2/λ_max`.
    pub stability_threshold: f64,
    pub simulated: Verdict,
    pub agrees: bool,
    pub trajectory: Trajectory,
}

pub const EOS_ITERATIONS: usize = 1000;

/// Predicts the fate of constant-step descent on a diagonal quadratic from the
/// iteration matrix `I − αΛ`, and checks it against 1000 unguarded iterations.
pub fn edge_of_stability(f: &ObjectiveFunction, alpha: f64, x0: &Point) -> Result<EosReport> {
    let eigs = match f.quadratic_coeffs() {
        Some(c) if c.iter().all(|&l| l > 0.0) => c.to_vec(),
        _ => {
            return Err(Error::Precondition(
                "edge-of-stability needs a positive definite diagonal quadratic".into(),
            ))
        }
    };
    f.check_dim(x0)?;
    let factor = |l: f64| (1.0 - alpha * l).abs();
    let spectral_radius = eigs.iter().map(|&l| factor(l)).fold(0.0, f64::max);
    let effective_radius = eigs
        .iter()
        .zip(x0.iter())
        .filter(|(_, &x)| x != 0.0)
        .map(|(&l, _)| factor(l))
        .fold(0.0, f64::max);
    let verdict = if effective_radius < 1.0 {
        Verdict::Converges
    } else if effective_radius > 1.0 {
        Verdict::Diverges
    } else {
        Verdict::Neutral
    };
    let opts = GdOptions {
        gtol: 0.0,
        max_iter: EOS_ITERATIONS,
        allow_unsafe: true,
        stop_at_level: None,
    };
    let trajectory = run_gd(f, x0, &StepSchedule::constant(alpha)?, &opts)?;
    let simulated = if trajectory.status == TerminalStatus::Diverged {
        Verdict::Diverges
    } else {
        let start = x0.norm();
        let end = trajectory.last().x.norm();
        if end <= 0.5 * start {
            Verdict::Converges
        } else if end >= 2.0 * start {
            Verdict::Diverges
        } else if start == 0.0 {
            Verdict::Converges
        } else {
            Verdict::Neutral
        }
    };
    let stability_threshold = 2.0 / eigs.iter().cloned().fold(0.0, f64::max);
    Ok(EosReport {
        alpha,
        verdict,
        spectral_radius,
        effective_radius,
        stability_threshold,
        simulated,
        agrees: simulated == verdict,
        trajectory,
    })
}
