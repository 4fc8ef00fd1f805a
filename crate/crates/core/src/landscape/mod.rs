//! Benchmark objectives with exact derivatives, declared Lipschitz data and
//! critical-point catalogs, plus pointwise maxima of smooth pieces.

mod builtin;
mod maxfn;

pub use builtin::{make_builtin, newton_critical_point, BUILTIN_NAMES};
pub use maxfn::{cap, clarke_generators, min_norm_element, MaxFunction};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    LocalMin,
    LocalMax,
    Saddle,
}

impl std::fmt::Display for CriticalKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriticalKind::LocalMin => "local_min",
            CriticalKind::LocalMax => "local_max",
            CriticalKind::Saddle => "saddle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub point: Point,
    pub kind: CriticalKind,
    pub f_value: f64,
}

/// Axis-aligned box on which the declared Lipschitz constant is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl OperatingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: "every lower bound must be below its upper bound".into(),
            });
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Whether the closed ball `B(center, radius)` lies inside the box.
    pub fn contains_ball(&self, center: &Point, radius: f64) -> bool {
        center
            .iter()
            .enumerate()
            .all(|(i, &c)| c - radius >= self.lower[i] && c + radius <= self.upper[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Model {
    /// `½ Σ cᵢ (xᵢ − sᵢ)²`
    Quadratic {
        coeffs: Vec<f64>,
        center: Vec<f64>,
    },
    /// `(x² − 1)²`
    DoubleWell,
    /// `(x² + y − 11)² + (x + y² − 7)²`
    Himmelblau,
    /// `⟨w, x⟩ + offset`
    Affine {
        weights: Vec<f64>,
        offset: f64,
    },
    Constant {
        value: f64,
    },
}

/// A smooth objective together with the data every certificate relies on:
/// the operating box, a gradient Lipschitz constant valid on it, and the
/// known critical points.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveFunction {
    name: String,
    params: Vec<f64>,
    pub(crate) model: Model,
    lipschitz: f64,
    bounds: OperatingBox,
    critical_points: Vec<CriticalPoint>,
}

impl ObjectiveFunction {
    pub(crate) fn from_parts(
        name: impl Into<String>,
        params: Vec<f64>,
        model: Model,
        lipschitz: f64,
        bounds: OperatingBox,
        critical: Vec<(Point, CriticalKind)>,
    ) -> Self {
        let mut f = Self {
            name: name.into(),
            params,
            model,
            lipschitz,
            bounds,
            critical_points: Vec::new(),
        };
        f.critical_points = critical
            .into_iter()
            .map(|(point, kind)| CriticalPoint {
                f_value: f.value(&point),
                point,
                kind,
            })
            .collect();
        f
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bounds(&self) -> &OperatingBox {
        &self.bounds
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical_points
    }

    /// Diagonal coefficients when the objective is `½ Σ cᵢ xᵢ²`.
    pub fn quadratic_coeffs(&self) -> Option<&[f64]> {
        match &self.model {
            Model::Quadratic { coeffs, center } if center.iter().all(|&s| s == 0.0) => Some(coeffs),
            _ => None,
        }
    }

    /// Catalog entry within `tol` of `x`, if any.
    pub fn find_critical(&self, x: &Point, tol: f64) -> Option<&CriticalPoint> {
        self.critical_points
            .iter()
            .find(|c| (&c.point - x).norm() <= tol)
    }

    pub fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &Point) -> f64 {
        match &self.model {
            Model::Quadratic { coeffs, center } => {
                0.5 * coeffs
                    .iter()
                    .zip(center)
                    .zip(x.iter())
                    .map(|((c, s), v)| c * (v - s) * (v - s))
                    .sum::<f64>()
            }
            Model::DoubleWell => {
                let s = x[0] * x[0] - 1.0;
                s * s
            }
            Model::Himmelblau => {
                let (a, b) = himmelblau_residuals(x[0], x[1]);
                a * a + b * b
            }
            Model::Affine { weights, offset } => {
                weights
                    .iter()
                    .zip(x.iter())
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + offset
            }
            Model::Constant { value } => *value,
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        match &self.model {
            Model::Quadratic { coeffs, center } => {
                DVector::from_fn(x.len(), |i, _| coeffs[i] * (x[i] - center[i]))
            }
            Model::DoubleWell => DVector::from_element(1, 4.0 * x[0] * (x[0] * x[0] - 1.0)),
            Model::Himmelblau => {
                let (px, py) = (x[0], x[1]);
                let (a, b) = himmelblau_residuals(px, py);
                DVector::from_vec(vec![4.0 * px * a + 2.0 * b, 2.0 * a + 4.0 * py * b])
            }
            Model::Affine { weights, .. } => DVector::from_column_slice(weights),
            Model::Constant { .. } => DVector::zeros(x.len()),
        }
    }

    pub fn hessian(&self, x: &Point) -> Option<DMatrix<f64>> {
        let n = x.len();
        Some(match &self.model {
            Model::Quadratic { coeffs, .. } => {
                DMatrix::from_diagonal(&DVector::from_column_slice(coeffs))
            }
            Model::DoubleWell => DMatrix::from_element(1, 1, 12.0 * x[0] * x[0] - 4.0),
            Model::Himmelblau => {
                let (px, py) = (x[0], x[1]);
                let off = 4.0 * px + 4.0 * py;
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        12.0 * px * px + 4.0 * py - 42.0,
                        off,
                        off,
                        12.0 * py * py + 4.0 * px - 26.0,
                    ],
                )
            }
            Model::Affine { .. } | Model::Constant { .. } => DMatrix::zeros(n, n),
        })
    }
}

fn himmelblau_residuals(x: f64, y: f64) -> (f64, f64) {
    (x * x + y - 11.0, x + y * y - 7.0)
}
