use nalgebra::{DMatrix, DVector};

use super::{ObjectiveFunction, OperatingBox, Point};
use crate::error::{Error, Result};

/// Pointwise maximum of smooth pieces sharing one operating box.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxFunction {
    pieces: Vec<ObjectiveFunction>,
    activity_tol: Option<f64>,
}

impl MaxFunction {
    pub fn new(pieces: Vec<ObjectiveFunction>) -> Result<Self> {
        let first = pieces.first().ok_or_else(|| Error::InvalidParameter {
            name: "pieces",
            reason: "empty".into(),
        })?;
        for p in &pieces[1..] {
            if p.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: p.dim(),
                });
            }
            if p.bounds() != first.bounds() {
                return Err(Error::InvalidParameter {
                    name: "pieces",
                    reason: "all pieces must share one operating box".into(),
                });
            }
        }
        Ok(Self {
            pieces,
            activity_tol: None,
        })
    }

    /// Fixes the activity tolerance instead of the default `1e-9·(1 + |value(x)|)`.
    pub fn with_activity_tol(mut self, tol: f64) -> Self {
        self.activity_tol = Some(tol);
        self
    }

    pub fn pieces(&self) -> &[ObjectiveFunction] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn bounds(&self) -> &OperatingBox {
        self.pieces[0].bounds()
    }

    pub fn lipschitz(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.lipschitz())
            .fold(0.0, f64::max)
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn activity_tol_at(&self, value: f64) -> f64 {
        self.activity_tol.unwrap_or(1e-9 * (1.0 + value.abs()))
    }
}

/// `max{f, level}`: `f` is the first piece, the constant the second.
pub fn cap(f: &ObjectiveFunction, level: f64) -> MaxFunction {
    let constant = ObjectiveFunction::constant(level, f.bounds().clone());
    MaxFunction {
        pieces: vec![f.clone(), constant],
        activity_tol: None,
    }
}

/// Gradients of the pieces within the activity tolerance of the max, in piece order.
pub fn clarke_generators(g: &MaxFunction, x: &Point) -> Vec<Point> {
    let values: Vec<f64> = g.pieces.iter().map(|p| p.value(x)).collect();
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = g.activity_tol_at(top);
    g.pieces
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v >= top - tol)
        .map(|(p, _)| p.gradient(x))
        .collect()
}

/// Minimum-norm point of the convex hull of `generators`, by Wolfe's
/// active-set algorithm on the probability simplex.
///
/// # Panics
///
/// Panics on an empty generator list.
pub fn min_norm_element(generators: &[Point]) -> Point {
    assert!(
        !generators.is_empty(),
        "min_norm_element needs at least one generator"
    );
    if generators.len() == 1 {
        return generators[0].clone();
    }
    let scale = generators
        .iter()
        .map(|g| g.norm_squared())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return generators[0].clone();
    }
    let gap_tol = 1e-14 * scale;
    let weight_tol = 1e-14;

    let start = (0..generators.len())
        .min_by(|&i, &j| {
            generators[i]
                .norm_squared()
                .total_cmp(&generators[j].norm_squared())
        })
        .unwrap();
    let mut active = vec![start];
    let mut weights = vec![1.0];
    let mut x = generators[start].clone();

    for _ in 0..(50 * generators.len() + 50) {
        let (j, best) = generators
            .iter()
            .enumerate()
            .map(|(i, g)| (i, x.dot(g)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if x.norm_squared() - best <= gap_tol || active.contains(&j) {
            break;
        }
        active.push(j);
        weights.push(0.0);

        loop {
            let Some(v) = affine_minimizer(generators, &active) else {
                // Affinely dependent corral: drop the point just added.
                active.pop();
                weights.pop();
                return combine(generators, &active, &weights);
            };
            if v.iter().all(|&vi| vi > weight_tol) {
                weights = v;
                x = combine(generators, &active, &weights);
                break;
            }
            let theta = weights
                .iter()
                .zip(&v)
                .filter(|(_, &vi)| vi <= weight_tol)
                .map(|(&wi, &vi)| if wi - vi > 0.0 { wi / (wi - vi) } else { 0.0 })
                .fold(1.0, f64::min);
            for (wi, vi) in weights.iter_mut().zip(&v) {
                *wi = theta * vi + (1.0 - theta) * *wi;
            }
            let mut k = 0;
            while k < active.len() {
                if weights[k] <= weight_tol {
                    active.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combine(generators, &active, &weights);
            if active.len() == 1 {
                break;
            }
        }
    }
    x
}

fn combine(generators: &[Point], active: &[usize], weights: &[f64]) -> Point {
    let mut x = DVector::zeros(generators[0].len());
    for (&i, &w) in active.iter().zip(weights) {
        x.axpy(w, &generators[i], 1.0);
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of the active set.
fn affine_minimizer(generators: &[Point], active: &[usize]) -> Option<Vec<f64>> {
    let m = active.len();
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            kkt[(a, b)] = generators[i].dot(&generators[j]);
        }
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let v: Vec<f64> = sol.iter().take(m).cloned().collect();
    if v.iter().any(|w| !w.is_finite()) {
        return None;
    }
    Some(v)
}
