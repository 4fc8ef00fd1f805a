//! Forward explicit gradient descent and the trajectory record shared with
//! the continuous-time integrators.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{ObjectiveFunction, Point};
use crate::sampling::{axis_directions, Lcg64};
use crate::schedule::{Regime, StepSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Iteration index (discrete) or step index (flows).
    pub k: usize,
    /// Elapsed time: `Σ_{j<k} αⱼ` for descent, `k·h` for flows.
    pub t: f64,
    pub x: Point,
    pub f_value: f64,
    pub grad_norm: f64,
}

impl State {
    pub fn new(f: &ObjectiveFunction, k: usize, t: f64, x: Point) -> Self {
        Self {
            k,
            t,
            f_value: f.value(&x),
            grad_norm: f.gradient(&x).norm(),
            x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    BudgetExhausted,
    LeftBox,
    Diverged,
    /// The run was stopped on reaching a prescribed level of `f`.
    LevelReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Descent,
    Flow { h: f64, direction: Direction },
    MinNormFlow { h: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub status: TerminalStatus,
    pub limit: Option<Point>,
    /// Step sizes used between consecutive states (descent only).
    pub alphas: Vec<f64>,
    pub dynamics: Dynamics,
}

impl Trajectory {
    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Number of consecutive-state pairs breaking the invariants of the
    /// producing dynamics: the explicit recurrence, monotone `f` when
    /// `αL < 2`, and the descent-lemma decrease when `αL < 1`. Forward flows
    /// must not increase `f`, reverse flows must not decrease it.
    pub fn descent_violations(&self, f: &ObjectiveFunction) -> usize {
        let lip = f.lipschitz();
        let mut bad = 0;
        for (i, pair) in self.states.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let slack = 1e-12 * (1.0 + a.f_value.abs());
            let ok = match self.dynamics {
                Dynamics::Descent => {
                    let alpha = self.alphas[i];
                    let g = f.gradient(&a.x);
                    let predicted = &a.x - &g * alpha;
                    let mut ok = (&b.x - predicted).norm() <= 1e-12 * (1.0 + a.x.norm());
                    if alpha * lip < 2.0 {
                        ok &= b.f_value <= a.f_value + slack;
                    }
                    if alpha * lip < 1.0 {
                        let drop = alpha * (1.0 - lip * alpha / 2.0) * g.norm_squared();
                        ok &= b.f_value <= a.f_value - drop + slack;
                    }
                    ok
                }
                Dynamics::Flow {
                    direction: Direction::Reverse,
                    ..
                } => b.f_value >= a.f_value - slack,
                Dynamics::Flow { .. } | Dynamics::MinNormFlow { .. } => {
                    b.f_value <= a.f_value + slack
                }
            };
            if !ok {
                bad += 1;
            }
        }
        bad
    }
}

/// One explicit step `x − a∇f(x)`; the result must stay in the box.
pub fn gd_step(f: &ObjectiveFunction, x: &Point, a: f64) -> Result<Point> {
    f.check_dim(x)?;
    if !f.bounds().contains(x) {
        return Err(Error::LeftBox { point: x.clone() });
    }
    let bound = 2.0 / f.lipschitz();
    if !(a > 0.0) || a >= bound {
        return Err(Error::StepTooLarge { step: a, bound });
    }
    let next = x - f.gradient(x) * a;
    if !f.bounds().contains(&next) {
        return Err(Error::LeftBox { point: next });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    pub gtol: f64,
    pub max_iter: usize,
    /// Allows `sup α ≥ 2/L`. Box exits are then ignored and only divergence,
    /// `|x| > 10³·(1 + box diameter)`, ends the run early.
    pub allow_unsafe: bool,
    /// Stop as soon as `f(xₖ) ≤ level` (after the initial state).
    pub stop_at_level: Option<f64>,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            gtol: 1e-10,
            max_iter: 1_000_000,
            allow_unsafe: false,
            stop_at_level: None,
        }
    }
}

impl GdOptions {
    pub fn with_gtol(mut self, gtol: f64) -> Self {
        self.gtol = gtol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Runs `x_{k+1} = x_k − α_k ∇f(x_k)` from `x0`, recording every state.
pub fn run_gd(
    f: &ObjectiveFunction,
    x0: &Point,
    s: &StepSchedule,
    opts: &GdOptions,
) -> Result<Trajectory> {
    f.check_dim(x0)?;
    if !opts.allow_unsafe && !s.admissible(f, Regime::Stability) {
        return Err(Error::StepTooLarge {
            step: s.sup_alpha(),
            bound: 2.0 / f.lipschitz(),
        });
    }
    if !f.bounds().contains(x0) {
        return Err(Error::LeftBox { point: x0.clone() });
    }
    let blowup = 1e3 * (1.0 + f.bounds().diameter());
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut states = vec![State::new(f, 0, 0.0, x.clone())];
    let mut alphas = Vec::new();
    let mut k = 0;
    let status = loop {
        let g = f.gradient(&x);
        if g.norm() < opts.gtol {
            break TerminalStatus::Converged;
        }
        if k > 0 {
            if let Some(level) = opts.stop_at_level {
                if states[k].f_value <= level {
                    break TerminalStatus::LevelReached;
                }
            }
        }
        if k == opts.max_iter {
            break TerminalStatus::BudgetExhausted;
        }
        let a = s.alpha(k);
        let next = &x - g * a;
        if opts.allow_unsafe {
            if next.norm() > blowup || next.iter().any(|v| !v.is_finite()) {
                break TerminalStatus::Diverged;
            }
        } else if !f.bounds().contains(&next) {
            break TerminalStatus::LeftBox;
        }
        x = next;
        t += a;
        k += 1;
        alphas.push(a);
        states.push(State::new(f, k, t, x.clone()));
    };
    let limit = (status == TerminalStatus::Converged).then(|| x.clone());
    Ok(Trajectory {
        states,
        status,
        limit,
        alphas,
        dynamics: Dynamics::Descent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    LocalMin,
    Saddle,
    LocalMax,
    NonStationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub kind: LimitKind,
    /// Set when the verdict rests on sampling alone (no Hessian available).
    pub low_confidence: bool,
}

/// Classifies `x` by gradient size and Hessian eigenvalue signs; eigenvalues
/// within `tol` of zero are resolved by sampling `f` on a sphere of radius `√tol`.
pub fn classify_limit(f: &ObjectiveFunction, x: &Point, tol: f64) -> Classification {
    if f.gradient(x).norm() >= tol {
        return Classification {
            kind: LimitKind::NonStationary,
            low_confidence: false,
        };
    }
    let Some(h) = f.hessian(x) else {
        return Classification {
            kind: sample_sphere(f, x, tol.sqrt()),
            low_confidence: true,
        };
    };
    let eig = SymmetricEigen::new(h).eigenvalues;
    let kind = if eig.iter().any(|e| e.abs() <= tol) {
        sample_sphere(f, x, tol.sqrt())
    } else if eig.iter().all(|&e| e > 0.0) {
        LimitKind::LocalMin
    } else if eig.iter().all(|&e| e < 0.0) {
        LimitKind::LocalMax
    } else {
        LimitKind::Saddle
    };
    Classification {
        kind,
        low_confidence: false,
    }
}

fn sample_sphere(f: &ObjectiveFunction, x: &Point, radius: f64) -> LimitKind {
    let fx = f.value(x);
    let noise = 4.0 * f64::EPSILON * (1.0 + fx.abs());
    let mut rng = Lcg64::new(0);
    let mut dirs = axis_directions(x.len());
    dirs.extend((0..32).map(|_| rng.direction(x.len())));
    let (mut up, mut down) = (false, false);
    for d in dirs {
        let diff = f.value(&(x + d * radius)) - fx;
        up |= diff > noise;
        down |= diff < -noise;
    }
    match (up, down) {
        (_, false) => LimitKind::LocalMin,
        (false, true) => LimitKind::LocalMax,
        (true, true) => LimitKind::Saddle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{make_builtin, OperatingBox};
    use nalgebra::DVector;

    fn p(xs: &[f64]) -> Point {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn gd_step_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        assert_eq!(gd_step(&q, &p(&[1.0]), 0.5).unwrap(), p(&[0.5]));
        assert_eq!(gd_step(&q, &p(&[0.0]), 1.3).unwrap(), p(&[0.0]));
        let h = make_builtin("himmelblau", &[]).unwrap();
        assert_eq!(gd_step(&h, &p(&[3.0, 2.0]), 0.005).unwrap(), p(&[3.0, 2.0]));
    }

    #[test]
    fn gd_step_errors() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        assert!(matches!(
            gd_step(&q, &p(&[1.0]), 2.0),
            Err(Error::StepTooLarge { .. })
        ));
        let saddle = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        match gd_step(&saddle, &p(&[0.0, 9.5]), 0.2) {
            Err(Error::LeftBox { point }) => assert!((point[1] - 13.3).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn geometric_decay_on_quadratic() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.5).unwrap();
        let traj = run_gd(&q, &p(&[1.0]), &s, &GdOptions::default().with_gtol(1e-8)).unwrap();
        assert_eq!(traj.status, TerminalStatus::Converged);
        for st in &traj.states {
            assert_eq!(st.x[0], 0.5f64.powi(st.k as i32));
        }
        assert!(traj.limit.as_ref().unwrap().norm() < 1e-8);
        assert_eq!(traj.descent_violations(&q), 0);
    }

    #[test]
    fn critical_start_converges_immediately() {
        let dw = make_builtin("double_well", &[]).unwrap();
        let s = StepSchedule::constant(0.05).unwrap();
        let traj = run_gd(&dw, &p(&[0.0]), &s, &GdOptions::default()).unwrap();
        assert_eq!(traj.status, TerminalStatus::Converged);
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.limit.unwrap(), p(&[0.0]));
    }

    #[test]
    fn double_well_from_point_three() {
        let dw = make_builtin("double_well", &[]).unwrap();
        let s = StepSchedule::constant(0.05).unwrap();
        let traj = run_gd(&dw, &p(&[0.3]), &s, &GdOptions::default()).unwrap();
        assert_eq!(traj.status, TerminalStatus::Converged);
        assert!((traj.limit.as_ref().unwrap()[0] - 1.0).abs() < 1e-6);
        assert!(traj.states.iter().all(|st| st.x[0] > 0.0));
        assert_eq!(traj.descent_violations(&dw), 0);
    }

    #[test]
    fn run_gd_budget_and_box() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.1).unwrap();
        let traj = run_gd(&q, &p(&[1.0]), &s, &GdOptions::default().with_max_iter(5)).unwrap();
        assert_eq!(traj.status, TerminalStatus::BudgetExhausted);
        assert_eq!(traj.states.len(), 6);
        assert!(traj.limit.is_none());

        let saddle = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        let traj = run_gd(
            &saddle,
            &p(&[0.0, 1.0]),
            &StepSchedule::constant(0.2).unwrap(),
            &GdOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.status, TerminalStatus::LeftBox);
        assert!(traj.states.iter().all(|st| saddle.bounds().contains(&st.x)));
    }

    #[test]
    fn run_gd_rejects_inadmissible() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(2.5).unwrap();
        assert!(matches!(
            run_gd(&q, &p(&[1.0]), &s, &GdOptions::default()),
            Err(Error::StepTooLarge { .. })
        ));
        let opts = GdOptions {
            allow_unsafe: true,
            max_iter: 10_000,
            ..GdOptions::default()
        };
        let traj = run_gd(&q, &p(&[1.0]), &s, &opts).unwrap();
        assert_eq!(traj.status, TerminalStatus::Diverged);
    }

    #[test]
    fn classification_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        assert_eq!(
            classify_limit(&q, &p(&[0.0]), 1e-8).kind,
            LimitKind::LocalMin
        );
        let dw = make_builtin("double_well", &[]).unwrap();
        assert_eq!(
            classify_limit(&dw, &p(&[0.0]), 1e-8).kind,
            LimitKind::LocalMax
        );
        assert_eq!(
            classify_limit(&dw, &p(&[0.5]), 1e-8).kind,
            LimitKind::NonStationary
        );
        let saddle = make_builtin("quadform", &[2.0, -2.0]).unwrap();
        assert_eq!(
            classify_limit(&saddle, &p(&[0.0, 0.0]), 1e-8).kind,
            LimitKind::Saddle
        );
    }

    #[test]
    fn flat_hessian_resolved_by_sampling() {
        let flat = ObjectiveFunction::constant(3.0, OperatingBox::cube(2, 1.0));
        let c = classify_limit(&flat, &p(&[0.0, 0.0]), 1e-8);
        assert_eq!(c.kind, LimitKind::LocalMin);
        assert!(!c.low_confidence);
    }

    #[test]
    fn limits_of_random_starts_are_stationary() {
        let funcs = [
            make_builtin("quad", &[1.0, 3.0]).unwrap(),
            make_builtin("double_well", &[]).unwrap(),
            make_builtin("himmelblau", &[]).unwrap(),
        ];
        for f in &funcs {
            let s = StepSchedule::constant(0.5 / f.lipschitz()).unwrap();
            let mut rng = Lcg64::new(17);
            let mut converged = 0;
            for _ in 0..100 {
                let x0 = rng.point_in(&f.bounds().lower, &f.bounds().upper);
                let traj = run_gd(f, &x0, &s, &GdOptions::default()).unwrap();
                assert_eq!(traj.descent_violations(f), 0, "{}", f.name());
                if traj.status == TerminalStatus::Converged {
                    converged += 1;
                    let limit = traj.limit.unwrap();
                    assert!(f.gradient(&limit).norm() < 1e-10);
                    let kind = classify_limit(f, &limit, 1e-8).kind;
                    assert_ne!(kind, LimitKind::NonStationary);
                    assert!(
                        f.find_critical(&limit, 1e-6).is_some(),
                        "{} {limit:?}",
                        f.name()
                    );
                }
            }
            assert!(converged >= 90, "{}: {converged}", f.name());
        }
    }

    #[test]
    fn deterministic() {
        let h = make_builtin("himmelblau", &[]).unwrap();
        let s = StepSchedule::power(1e-3, 0.5).unwrap();
        let x0 = p(&[0.5, -0.5]);
        let a = run_gd(&h, &x0, &s, &GdOptions::default().with_max_iter(5000)).unwrap();
        let b = run_gd(&h, &x0, &s, &GdOptions::default().with_max_iter(5000)).unwrap();
        assert_eq!(a, b);
    }
}
