//! Exact reverse dynamics of gradient descent.
//!
//! For `λ < 1/L` the maps `y ↦ x − λ∇f(y)` and `y ↦ x + λ∇f(y)` are
//! contractions with factor `λL`. Their fixed points are the proximal point
//! (minimizer of `f(y) + |y − x|²/(2λ)`) and the implicit ascent point
//! (maximizer of `f(y) − |y − x|²/(2λ)`). The latter is the exact preimage of
//! `x` under one explicit gradient step of size `λ`.

use crate::error::{Error, Result};
use crate::landscape::{ObjectiveFunction, Point};
use crate::schedule::{Regime, StepSchedule};

/// Relative tolerance on successive Picard iterates.
pub const FIXED_POINT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `y = x − λ∇f(y)` (proximal point).
    Descent,
    /// `y = x + λ∇f(y)` (implicit ascent).
    Ascent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub point: Point,
    pub iterations: usize,
}

/// Solves the implicit step by Picard iteration started at `anchor`.
pub fn implicit_step(
    f: &ObjectiveFunction,
    anchor: &Point,
    lambda: f64,
    sense: Sense,
) -> Result<FixedPoint> {
    f.check_dim(anchor)?;
    let lip = f.lipschitz();
    if !(lambda > 0.0) || lambda * lip >= 1.0 {
        return Err(Error::StepTooLarge {
            step: lambda,
            bound: 1.0 / lip,
        });
    }
    if !f.bounds().contains(anchor) {
        return Err(Error::LeftBox {
            point: anchor.clone(),
        });
    }
    let sign = match sense {
        Sense::Descent => -lambda,
        Sense::Ascent => lambda,
    };
    let tol = FIXED_POINT_TOL * (1.0 + anchor.norm());
    let rate = lambda * lip;
    let max_iter = if rate > 0.0 {
        (FIXED_POINT_TOL.ln() / rate.ln()).ceil() as usize + 200
    } else {
        3
    };
    let mut y = anchor.clone();
    for iterations in 1..=max_iter {
        let next = anchor + f.gradient(&y) * sign;
        if !f.bounds().contains(&next) {
            return Err(Error::LeftBox { point: next });
        }
        let moved = (&next - &y).norm();
        y = next;
        if moved <= tol {
            return Ok(FixedPoint {
                point: y,
                iterations,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
    })
}

/// Proximal point `argmin_y f(y) + |y − x|²/(2λ)`.
pub fn prox(f: &ObjectiveFunction, x: &Point, lambda: f64) -> Result<Point> {
    implicit_step(f, x, lambda, Sense::Descent).map(|fp| fp.point)
}

/// Preimage of `xnext` under one gradient step of size `a`.
pub fn ascent_prox(f: &ObjectiveFunction, xnext: &Point, a: f64) -> Result<Point> {
    implicit_step(f, xnext, a, Sense::Ascent).map(|fp| fp.point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProxCertificates {
    /// `f(x) − f(x⁺) ≥ (λ/2)|∇f(x⁺)|²`
    pub dec_ok: bool,
    /// `|x⁺ − x| ≤ 2λ/(1 − Lλ)·|∇f(x)|`
    pub step_ok: bool,
}

impl ProxCertificates {
    pub fn all(&self) -> bool {
        self.dec_ok && self.step_ok
    }
}

pub fn prox_certificates(
    f: &ObjectiveFunction,
    x: &Point,
    lambda: f64,
    xplus: &Point,
) -> ProxCertificates {
    let slack = 1e-9 * (1.0 + f.value(x).abs());
    let decrease = f.value(x) - f.value(xplus);
    let dec_ok = decrease >= lambda / 2.0 * f.gradient(xplus).norm_squared() - slack;
    let bound = 2.0 * lambda / (1.0 - f.lipschitz() * lambda) * f.gradient(x).norm();
    let step_ok = (xplus - x).norm() <= bound + slack;
    ProxCertificates { dec_ok, step_ok }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitStatus {
    Complete,
    /// An implicit step left the box; only the tail ending at the anchor was built.
    LeftBox,
}

/// Points `x_j, …, x_k̄` with `x_k̄ = anchor` and `x_{k+1} = x_k − α_k∇f(x_k)`.
/// `first_index` is `j` (zero for a complete orbit).
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseOrbit {
    pub points: Vec<Point>,
    pub first_index: usize,
    pub anchor: Point,
    /// `α_j, …, α_{k̄−1}`, aligned with consecutive pairs of `points`.
    pub alphas: Vec<f64>,
    pub forward_residuals: Vec<f64>,
    pub status: OrbitStatus,
}

impl ReverseOrbit {
    /// Assembles an orbit from points in forward order and the step sizes
    /// between them, computing the forward residuals.
    pub fn assemble(
        f: &ObjectiveFunction,
        points: Vec<Point>,
        first_index: usize,
        alphas: Vec<f64>,
        status: OrbitStatus,
    ) -> Self {
        debug_assert_eq!(points.len(), alphas.len() + 1);
        let forward_residuals = points
            .windows(2)
            .zip(&alphas)
            .map(|(w, &a)| (&w[1] - (&w[0] - f.gradient(&w[0]) * a)).norm())
            .collect();
        let anchor = points.last().expect("orbit contains the anchor").clone();
        Self {
            points,
            first_index,
            anchor,
            alphas,
            forward_residuals,
            status,
        }
    }

    pub fn kbar(&self) -> usize {
        self.first_index + self.alphas.len()
    }

    /// Step indices consumed, in construction order `k̄−1, …, j`.
    pub fn steps_used(&self) -> Vec<usize> {
        (self.first_index..self.kbar()).rev().collect()
    }

    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    /// Whether every forward residual is within `1e-10·(1 + |x_k|)`.
    pub fn certified(&self) -> bool {
        self.forward_residuals
            .iter()
            .zip(&self.points)
            .all(|(r, x)| *r <= 1e-10 * (1.0 + x.norm()))
    }

    /// Count of steps violating `f(x_k) ≥ f(x_{k+1}) + (α_k/2)|∇f(x_{k+1})|² − 1e-9`.
    pub fn ascent_violations(&self, f: &ObjectiveFunction) -> usize {
        self.points
            .windows(2)
            .zip(&self.alphas)
            .filter(|(w, &a)| {
                f.value(&w[0]) < f.value(&w[1]) + a / 2.0 * f.gradient(&w[1]).norm_squared() - 1e-9
            })
            .count()
    }

    /// Largest distance between the orbit and the explicit forward replay from its start.
    pub fn replay_deviation(&self, f: &ObjectiveFunction) -> f64 {
        let mut x = self.points[0].clone();
        let mut worst: f64 = 0.0;
        for (p, &a) in self.points[1..].iter().zip(&self.alphas) {
            x = &x - f.gradient(&x) * a;
            worst = worst.max((&x - p).norm());
        }
        worst
    }
}

/// Builds `x_k = ascent_prox(f, x_{k+1}, α_k)` for `k = k̄−1` down to 0 from `x_k̄ = a`.
///
/// Leaving the box part way returns the partial orbit with [`OrbitStatus::LeftBox`].
pub fn reverse_orbit(
    f: &ObjectiveFunction,
    a: &Point,
    s: &StepSchedule,
    kbar: usize,
) -> Result<ReverseOrbit> {
    f.check_dim(a)?;
    if !s.admissible(f, Regime::Prox) {
        return Err(Error::StepTooLarge {
            step: s.sup_alpha(),
            bound: 1.0 / f.lipschitz(),
        });
    }
    if !f.bounds().contains(a) {
        return Err(Error::LeftBox { point: a.clone() });
    }
    let mut backward = vec![a.clone()];
    let mut alphas = Vec::with_capacity(kbar);
    let mut status = OrbitStatus::Complete;
    for k in (0..kbar).rev() {
        let alpha = s.alpha(k);
        match ascent_prox(f, backward.last().unwrap(), alpha) {
            Ok(y) => {
                backward.push(y);
                alphas.push(alpha);
            }
            Err(Error::LeftBox { .. }) => {
                status = OrbitStatus::LeftBox;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    backward.reverse();
    alphas.reverse();
    let first_index = kbar - alphas.len();
    Ok(ReverseOrbit::assemble(
        f,
        backward,
        first_index,
        alphas,
        status,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::gd_step;
    use crate::landscape::make_builtin;
    use crate::sampling::Lcg64;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn p(xs: &[f64]) -> Point {
        DVector::from_column_slice(xs)
    }

    fn builtins() -> Vec<ObjectiveFunction> {
        vec![
            make_builtin("quad", &[1.0, 4.0]).unwrap(),
            make_builtin("double_well", &[]).unwrap(),
            make_builtin("himmelblau", &[]).unwrap(),
        ]
    }

    #[test]
    fn prox_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        // Closed form y = x / (1 + λ).
        assert!((prox(&q, &p(&[1.5]), 0.5).unwrap()[0] - 1.0).abs() < 1e-13);
        assert_eq!(prox(&q, &p(&[0.0]), 0.9).unwrap(), p(&[0.0]));
        let h = make_builtin("himmelblau", &[]).unwrap();
        for c in h.critical_points() {
            let y = prox(&h, &c.point, 0.5 / h.lipschitz()).unwrap();
            assert!((&y - &c.point).norm() < 1e-12);
        }
    }

    #[test]
    fn prox_rejects_large_lambda() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        assert!(matches!(
            prox(&q, &p(&[1.0]), 1.0),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(matches!(
            ascent_prox(&q, &p(&[1.0]), 1.2),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn ascent_prox_leaving_box() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        // Preimage is 9.5 / 0.1 = 95, far outside [-10, 10].
        assert!(matches!(
            ascent_prox(&q, &p(&[9.5]), 0.9),
            Err(Error::LeftBox { .. })
        ));
    }

    #[test]
    fn certificates_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let c = prox_certificates(&q, &p(&[1.5]), 0.5, &p(&[1.0]));
        assert!(c.dec_ok && c.step_ok);
        let c = prox_certificates(&q, &p(&[0.0]), 0.5, &p(&[0.0]));
        assert!(c.all());
        // A point that is not the prox output breaks the decrease inequality.
        let c = prox_certificates(&q, &p(&[1.0]), 0.5, &p(&[1.5]));
        assert!(!c.dec_ok);
    }

    #[test]
    fn double_well_certificate_sweep() {
        let dw = make_builtin("double_well", &[]).unwrap();
        let mut rng = Lcg64::new(99);
        for _ in 0..1000 {
            let x = rng.point_in(&dw.bounds().lower, &dw.bounds().upper);
            let lambda = 0.9 * rng.uniform() / dw.lipschitz();
            match prox(&dw, &x, lambda) {
                Ok(y) => assert!(prox_certificates(&dw, &x, lambda, &y).all()),
                Err(Error::LeftBox { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn ascent_prox_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let y = ascent_prox(&q, &p(&[0.5]), 0.5).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert_eq!(gd_step(&q, &p(&[1.0]), 0.5).unwrap(), p(&[0.5]));
        let dw = make_builtin("double_well", &[]).unwrap();
        assert_eq!(ascent_prox(&dw, &p(&[1.0]), 0.02).unwrap(), p(&[1.0]));
    }

    #[test]
    fn reverse_orbit_examples() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.5).unwrap();
        let orbit = reverse_orbit(&q, &p(&[0.1]), &s, 3).unwrap();
        let xs: Vec<f64> = orbit.points.iter().map(|x| x[0]).collect();
        for (got, want) in xs.iter().zip([0.8, 0.4, 0.2, 0.1]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(orbit.steps_used(), vec![2, 1, 0]);
        assert!(orbit.certified());

        let single = reverse_orbit(&q, &p(&[0.1]), &s, 0).unwrap();
        assert_eq!(single.points, vec![p(&[0.1])]);

        let dw = make_builtin("double_well", &[]).unwrap();
        let still = reverse_orbit(
            &dw,
            &p(&[-1.0]),
            &StepSchedule::power(0.02, 0.5).unwrap(),
            5,
        )
        .unwrap();
        assert!(still.points.iter().all(|x| *x == p(&[-1.0])));
    }

    #[test]
    fn partial_orbit_on_box_exit() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.5).unwrap();
        let orbit = reverse_orbit(&q, &p(&[1.0]), &s, 10).unwrap();
        assert_eq!(orbit.status, OrbitStatus::LeftBox);
        // 1, 2, 4, 8 fit in [-10, 10]; 16 does not.
        assert_eq!(orbit.points.len(), 4);
        assert_eq!(orbit.first_index, 7);
        assert_eq!(orbit.kbar(), 10);
    }

    #[test]
    fn power_schedule_alignment() {
        let h = make_builtin("himmelblau", &[]).unwrap();
        let s = StepSchedule::power(0.5 / h.lipschitz(), 0.5).unwrap();
        let a = p(&[3.01, 2.0]);
        let orbit = reverse_orbit(&h, &a, &s, 200).unwrap();
        assert_eq!(orbit.status, OrbitStatus::Complete);
        assert!(orbit.certified());
        assert_eq!(orbit.ascent_violations(&h), 0);
        for (k, &alpha) in orbit.alphas.iter().enumerate() {
            assert_eq!(alpha, s.alpha(k));
        }
        assert!(orbit.replay_deviation(&h) < 1e-10);
    }

    #[test]
    fn iteration_count_bound() {
        let mut rng = Lcg64::new(8);
        for f in builtins() {
            for _ in 0..200 {
                let x = rng.point_in(&f.bounds().lower, &f.bounds().upper);
                let a = 0.9 * rng.uniform() / f.lipschitz();
                let bound = FIXED_POINT_TOL.ln() / (a * f.lipschitz()).ln() + 2.0;
                for sense in [Sense::Ascent, Sense::Descent] {
                    if let Ok(fp) = implicit_step(&f, &x, a, sense) {
                        assert!(
                            fp.iterations as f64 <= bound,
                            "{} {} > {bound}",
                            f.name(),
                            fp.iterations
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn round_trip(which in 0usize..3, u in 0.0f64..1.0, v in 0.0f64..1.0, frac in 0.01f64..0.9) {
            let f = &builtins()[which];
            let b = f.bounds();
            let x = DVector::from_fn(f.dim(), |i, _| {
                let t = if i == 0 { u } else { v };
                b.lower[i] + t * (b.upper[i] - b.lower[i])
            });
            let a = frac / f.lipschitz();
            let tol = 1e-10 * (1.0 + x.norm());
            if let Ok(y) = ascent_prox(f, &x, a) {
                let back = &y - f.gradient(&y) * a;
                prop_assert!((back - &x).norm() <= tol);
            }
            let fwd = &x - f.gradient(&x) * a;
            if b.contains(&fwd) {
                if let Ok(y) = ascent_prox(f, &fwd, a) {
                    prop_assert!((y - &x).norm() <= tol);
                }
            }
            if let Ok(y) = prox(f, &x, a) {
                prop_assert!((&y - (&x - f.gradient(&y) * a)).norm() <= tol);
            }
        }
    }
}
