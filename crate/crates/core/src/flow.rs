//! Continuous-time gradient dynamics.
//!
//! Smooth flows `ẋ = ∓∇f(x)` are integrated with fixed-step classical RK4.
//! The min-norm Clarke flow of a [`MaxFunction`] uses explicit Euler, since its
//! field jumps across activity boundaries.

use crate::descent::{Direction, Dynamics, State, TerminalStatus, Trajectory};
use crate::error::{Error, Result};
use crate::landscape::{
    clarke_generators, min_norm_element, MaxFunction, ObjectiveFunction, Point,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings {
    pub h: f64,
    pub t_max: f64,
    pub gtol: f64,
    pub event_refine_tol: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            h: 1e-3,
            t_max: 100.0,
            gtol: 1e-10,
            event_refine_tol: 1e-12,
        }
    }
}

impl FlowSettings {
    /// Checks `h ≤ 0.1/L` and `event_refine_tol < h`.
    pub fn validate(&self, lipschitz: f64) -> Result<()> {
        if !(self.h > 0.0) || self.h * lipschitz > 0.1 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!(
                    "h = {} must be positive and at most 0.1/L = {}",
                    self.h,
                    0.1 / lipschitz
                ),
            });
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                reason: "must be positive".into(),
            });
        }
        if !(self.event_refine_tol > 0.0 && self.event_refine_tol < self.h) {
            return Err(Error::InvalidParameter {
                name: "event_refine_tol",
                reason: format!("must lie in (0, h = {})", self.h),
            });
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        ((self.t_max / self.h).round() as usize).max(1)
    }
}

/// `ψ(s) = coeff · s^exponent`, concave and increasing on `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesingularizationModel {
    coeff: f64,
    exponent: f64,
}

impl DesingularizationModel {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0) || !coeff.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coeff",
                reason: "must be positive".into(),
            });
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "exponent",
                reason: "must lie in (0, 1]".into(),
            });
        }
        Ok(Self { coeff, exponent })
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.coeff * s.max(0.0).powf(self.exponent)
    }
}

fn signed_gradient(f: &ObjectiveFunction, x: &Point, direction: Direction) -> Point {
    match direction {
        Direction::Forward => -f.gradient(x),
        Direction::Reverse => f.gradient(x),
    }
}

fn rk4_step(f: &ObjectiveFunction, x: &Point, h: f64, direction: Direction) -> Point {
    let k1 = signed_gradient(f, x, direction);
    let k2 = signed_gradient(f, &(x + &k1 * (h / 2.0)), direction);
    let k3 = signed_gradient(f, &(x + &k2 * (h / 2.0)), direction);
    let k4 = signed_gradient(f, &(x + &k3 * h), direction);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates the forward or reverse gradient flow from `x0`.
pub fn integrate(
    f: &ObjectiveFunction,
    x0: &Point,
    direction: Direction,
    settings: &FlowSettings,
) -> Result<Trajectory> {
    f.check_dim(x0)?;
    settings.validate(f.lipschitz())?;
    if !f.bounds().contains(x0) {
        return Err(Error::LeftBox { point: x0.clone() });
    }
    let h = settings.h;
    let n_steps = settings.steps();
    let mut x = x0.clone();
    let mut states = vec![State::new(f, 0, 0.0, x.clone())];
    let mut k = 0;
    let status = loop {
        if direction == Direction::Forward && states[k].grad_norm < settings.gtol {
            break TerminalStatus::Converged;
        }
        if k == n_steps {
            break TerminalStatus::BudgetExhausted;
        }
        let next = rk4_step(f, &x, h, direction);
        if !f.bounds().contains(&next) {
            break TerminalStatus::LeftBox;
        }
        x = next;
        k += 1;
        states.push(State::new(f, k, k as f64 * h, x.clone()));
    };
    let limit = (status == TerminalStatus::Converged).then(|| x.clone());
    Ok(Trajectory {
        states,
        status,
        limit,
        alphas: Vec::new(),
        dynamics: Dynamics::Flow { h, direction },
    })
}

/// Explicit Euler on `ẋ = −m(x)` where `m(x)` is the minimum-norm element of
/// the Clarke generators. The run stalls (status `Converged`) once `|m| < gtol`.
pub fn integrate_minnorm(
    g: &MaxFunction,
    x0: &Point,
    settings: &FlowSettings,
) -> Result<Trajectory> {
    if x0.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: x0.len(),
        });
    }
    settings.validate(g.lipschitz())?;
    if !g.bounds().contains(x0) {
        return Err(Error::LeftBox { point: x0.clone() });
    }
    let h = settings.h;
    let n_steps = settings.steps();
    let state = |k: usize, x: &Point, m: &Point| State {
        k,
        t: k as f64 * h,
        x: x.clone(),
        f_value: g.value(x),
        grad_norm: m.norm(),
    };
    let mut x = x0.clone();
    let mut m = min_norm_element(&clarke_generators(g, &x));
    let mut states = vec![state(0, &x, &m)];
    let mut k = 0;
    let status = loop {
        if m.norm() < settings.gtol {
            break TerminalStatus::Converged;
        }
        if k == n_steps {
            break TerminalStatus::BudgetExhausted;
        }
        let next = &x - &m * h;
        if !g.bounds().contains(&next) {
            break TerminalStatus::LeftBox;
        }
        x = next;
        k += 1;
        m = min_norm_element(&clarke_generators(g, &x));
        states.push(state(k, &x, &m));
    };
    let limit = (status == TerminalStatus::Converged).then(|| x.clone());
    Ok(Trajectory {
        states,
        status,
        limit,
        alphas: Vec::new(),
        dynamics: Dynamics::MinNormFlow { h },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereExit {
    pub t_exit: f64,
    pub point: Point,
    /// Recorded states up to and including the crossing point.
    pub trajectory: Trajectory,
}

/// Integrates until `|x(t) − center| ≥ delta`, then bisects the last step to
/// place the crossing on the sphere to within `1e-8·delta`.
pub fn sphere_exit(
    f: &ObjectiveFunction,
    x0: &Point,
    direction: Direction,
    center: &Point,
    delta: f64,
    settings: &FlowSettings,
) -> Result<SphereExit> {
    f.check_dim(x0)?;
    f.check_dim(center)?;
    settings.validate(f.lipschitz())?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "must be positive".into(),
        });
    }
    if (x0 - center).norm() >= delta {
        return Err(Error::Precondition(format!(
            "start lies outside the open ball of radius {delta}"
        )));
    }
    if !f.bounds().contains(x0) {
        return Err(Error::LeftBox { point: x0.clone() });
    }
    let h = settings.h;
    let n_steps = settings.steps();
    let radius = |p: &Point| (p - center).norm();
    let mut x = x0.clone();
    let mut states = vec![State::new(f, 0, 0.0, x.clone())];
    for k in 0..n_steps {
        let next = rk4_step(f, &x, h, direction);
        if radius(&next) >= delta {
            let t0 = k as f64 * h;
            let (tau, b) = refine_crossing(
                f,
                &x,
                direction,
                center,
                delta,
                h,
                settings.event_refine_tol,
            );
            if !f.bounds().contains(&b) {
                return Err(Error::LeftBox { point: b });
            }
            states.push(State::new(f, k + 1, t0 + tau, b.clone()));
            let trajectory = Trajectory {
                states,
                status: TerminalStatus::Converged,
                limit: Some(b.clone()),
                alphas: Vec::new(),
                dynamics: Dynamics::Flow { h, direction },
            };
            return Ok(SphereExit {
                t_exit: t0 + tau,
                point: b,
                trajectory,
            });
        }
        if !f.bounds().contains(&next) {
            return Err(Error::LeftBox { point: next });
        }
        if direction == Direction::Forward && f.gradient(&next).norm() < settings.gtol {
            break;
        }
        x = next;
        states.push(State::new(f, k + 1, (k + 1) as f64 * h, x.clone()));
    }
    Err(Error::NoCrossing {
        t_max: settings.t_max,
    })
}

fn refine_crossing(
    f: &ObjectiveFunction,
    from: &Point,
    direction: Direction,
    center: &Point,
    delta: f64,
    h: f64,
    time_tol: f64,
) -> (f64, Point) {
    let miss = |p: &Point| ((p - center).norm() - delta).abs();
    let (mut lo, mut hi) = (0.0, h);
    let mut best = (h, rk4_step(f, from, h, direction));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = rk4_step(f, from, mid, direction);
        if miss(&p) < miss(&best.1) {
            best = (mid, p.clone());
        }
        if (&p - center).norm() >= delta {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= time_tol && miss(&best.1) <= 1e-8 * delta {
            break;
        }
    }
    let end = rk4_step(f, from, hi, direction);
    if miss(&end) <= miss(&best.1) {
        best = (hi, end);
    }
    best
}

/// Polygonal length `Σ |x_{k+1} − x_k|` of the recorded states.
pub fn path_length(traj: &Trajectory) -> f64 {
    traj.states
        .windows(2)
        .map(|w| (&w[1].x - &w[0].x).norm())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Compares the path length against `ψ(f(first) − f(last))`.
pub fn check_length_bound(
    traj: &Trajectory,
    model: &DesingularizationModel,
    f: &ObjectiveFunction,
) -> LengthBound {
    let lhs = path_length(traj);
    let drop = f.value(&traj.first().x) - f.value(&traj.last().x);
    let rhs = model.psi(drop);
    LengthBound {
        lhs,
        rhs,
        ok: lhs <= rhs * (1.0 + 1e-6) + 1e-9,
    }
}
