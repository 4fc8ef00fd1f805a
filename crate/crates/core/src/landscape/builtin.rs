use nalgebra::DVector;

use super::{CriticalKind, Model, ObjectiveFunction, OperatingBox, Point};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 3] = ["quad", "double_well", "himmelblau"];

const QUAD_HALF_WIDTH: f64 = 10.0;
const DOUBLE_WELL_DEFAULT_B: f64 = 1.5;
const HIMMELBLAU_HALF_WIDTH: f64 = 5.0;

// Refined to |∇f| ~ 1e-13 by Newton's method on ∇f; see the regeneration test.
const HIMMELBLAU_MINIMA: [[f64; 2]; 4] = [
    [3.0, 2.0],
    [-2.805_118_086_952_744_8, 3.131_312_518_250_573],
    [-3.779_310_253_377_747, -3.283_185_991_286_169_4],
    [3.584_428_340_330_491_7, -1.848_126_526_964_403_6],
];
const HIMMELBLAU_MAXIMUM: [f64; 2] = [-0.270_844_590_667_347_6, -0.923_038_556_479_981_5];
const HIMMELBLAU_SADDLES: [[f64; 2]; 4] = [
    [3.385_154_183_607_021, 0.073_851_879_837_749_29],
    [0.086_677_504_555_396_35, 2.884_254_701_174_776],
    [-3.073_025_750_764_389_6, -0.081_353_044_287_967_51],
    [-0.127_961_346_730_680_07, -1.953_714_980_244_576_4],
];

/// Builds one of the catalog objectives by name.
///
/// * `quad` takes the eigenvalues `λ₁..λₙ` of `½ Σ λᵢ xᵢ²` (all positive).
/// * `double_well` optionally takes the box half-width `b ≥ 1` (default 1.5).
/// * `himmelblau` takes no parameters.
/// * `quadform` is the signed-coefficient variant of `quad` (e.g. `x² − y²`
///   is `quadform` with `(2, −2)`); it is not listed in [`BUILTIN_NAMES`].
pub fn make_builtin(name: &str, params: &[f64]) -> Result<ObjectiveFunction> {
    match name {
        "quad" => ObjectiveFunction::quad(params),
        "double_well" => match params {
            [] => ObjectiveFunction::double_well(DOUBLE_WELL_DEFAULT_B),
            [b] => ObjectiveFunction::double_well(*b),
            _ => Err(Error::InvalidParameter {
                name: "double_well",
                reason: format!("expected at most one parameter (b), got {}", params.len()),
            }),
        },
        "himmelblau" => {
            if params.is_empty() {
                Ok(ObjectiveFunction::himmelblau())
            } else {
                Err(Error::InvalidParameter {
                    name: "himmelblau",
                    reason: "takes no parameters".into(),
                })
            }
        }
        "quadform" => ObjectiveFunction::quadform(params),
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

impl ObjectiveFunction {
    /// `½ Σ λᵢ xᵢ²` on `[-10, 10]^n`, with `L = max λᵢ`.
    pub fn quad(eigenvalues: &[f64]) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter {
                name: "quad",
                reason: "needs at least one eigenvalue".into(),
            });
        }
        if let Some(bad) = eigenvalues.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "quad",
                reason: format!(
                    "eigenvalue {bad} is not positive; the origin would not be a minimum"
                ),
            });
        }
        let n = eigenvalues.len();
        let lip = eigenvalues.iter().cloned().fold(0.0, f64::max);
        Ok(Self::from_parts(
            "quad",
            eigenvalues.to_vec(),
            Model::Quadratic {
                coeffs: eigenvalues.to_vec(),
                center: vec![0.0; n],
            },
            lip,
            OperatingBox::cube(n, QUAD_HALF_WIDTH),
            vec![(DVector::zeros(n), CriticalKind::LocalMin)],
        ))
    }

    /// `½ Σ cᵢ xᵢ²` with nonzero coefficients of either sign, on `[-10, 10]^n`.
    pub fn quadform(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| *c == 0.0 || !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "quadform",
                reason: "coefficients must be finite and nonzero".into(),
            });
        }
        let n = coeffs.len();
        let kind = if coeffs.iter().all(|&c| c > 0.0) {
            CriticalKind::LocalMin
        } else if coeffs.iter().all(|&c| c < 0.0) {
            CriticalKind::LocalMax
        } else {
            CriticalKind::Saddle
        };
        let lip = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
        Ok(Self::from_parts(
            "quadform",
            coeffs.to_vec(),
            Model::Quadratic {
                coeffs: coeffs.to_vec(),
                center: vec![0.0; n],
            },
            lip,
            OperatingBox::cube(n, QUAD_HALF_WIDTH),
            vec![(DVector::zeros(n), kind)],
        ))
    }

    /// `(x² − 1)²` on `[-b, b]`, where `|f''| ≤ 12b² − 4`.
    pub fn double_well(b: f64) -> Result<Self> {
        if !(b >= 1.0) || !b.is_finite() {
            return Err(Error::InvalidParameter {
                name: "double_well",
                reason: format!("box half-width b = {b} must be at least 1"),
            });
        }
        let pt = |v: f64| DVector::from_element(1, v);
        Ok(Self::from_parts(
            "double_well",
            vec![b],
            Model::DoubleWell,
            12.0 * b * b - 4.0,
            OperatingBox::cube(1, b),
            vec![
                (pt(-1.0), CriticalKind::LocalMin),
                (pt(0.0), CriticalKind::LocalMax),
                (pt(1.0), CriticalKind::LocalMin),
            ],
        ))
    }

    /// Himmelblau's function on `[-5, 5]²`.
    ///
    /// The Hessian entries `12x² + 4y − 42`, `4x + 4y`, `12y² + 4x − 26` have no
    /// interior stationary points, and the spectral norm peaks at the corner
    /// `(5, 5)` where it equals `286 + √1664 ≈ 326.79`.
    pub fn himmelblau() -> Self {
        let pt = |p: [f64; 2]| DVector::from_column_slice(&p);
        let mut critical: Vec<(Point, CriticalKind)> = HIMMELBLAU_MINIMA
            .iter()
            .map(|&p| (pt(p), CriticalKind::LocalMin))
            .collect();
        critical.push((pt(HIMMELBLAU_MAXIMUM), CriticalKind::LocalMax));
        critical.extend(
            HIMMELBLAU_SADDLES
                .iter()
                .map(|&p| (pt(p), CriticalKind::Saddle)),
        );
        Self::from_parts(
            "himmelblau",
            Vec::new(),
            Model::Himmelblau,
            himmelblau_lipschitz(),
            OperatingBox::cube(2, HIMMELBLAU_HALF_WIDTH),
            critical,
        )
    }

    /// `½ Σ cᵢ (xᵢ − centerᵢ)²` on `bounds`, with `L = max |cᵢ|`. No catalog.
    pub fn shifted_quadratic(coeffs: &[f64], center: &[f64], bounds: OperatingBox) -> Result<Self> {
        if coeffs.len() != bounds.dim() || center.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                got: coeffs.len().min(center.len()),
            });
        }
        let mut params = coeffs.to_vec();
        params.extend_from_slice(center);
        Ok(Self::from_parts(
            "shifted_quadratic",
            params,
            Model::Quadratic {
                coeffs: coeffs.to_vec(),
                center: center.to_vec(),
            },
            coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max),
            bounds,
            Vec::new(),
        ))
    }

    /// `⟨weights, x⟩ + offset` on `bounds`. Its gradient is constant, so `L = 0`.
    pub fn affine(weights: &[f64], offset: f64, bounds: OperatingBox) -> Result<Self> {
        if weights.len() != bounds.dim() {
            return Err(Error::DimensionMismatch {
                expected: bounds.dim(),
                got: weights.len(),
            });
        }
        let mut params = weights.to_vec();
        params.push(offset);
        Ok(Self::from_parts(
            "affine",
            params,
            Model::Affine {
                weights: weights.to_vec(),
                offset,
            },
            0.0,
            bounds,
            Vec::new(),
        ))
    }

    pub fn constant(value: f64, bounds: OperatingBox) -> Self {
        Self::from_parts(
            "constant",
            vec![value],
            Model::Constant { value },
            0.0,
            bounds,
            Vec::new(),
        )
    }
}

pub(crate) fn himmelblau_lipschitz() -> f64 {
    286.0 + 1664f64.sqrt()
}

/// Newton's method on `∇f = 0` from `start`, stopping once the Newton step is
/// below `1e-12·(1 + |x|)`.
pub fn newton_critical_point(f: &ObjectiveFunction, start: &Point) -> Result<Point> {
    f.check_dim(start)?;
    let mut x = start.clone();
    for _ in 0..100 {
        let h = f
            .hessian(&x)
            .ok_or_else(|| Error::Precondition("Newton needs a Hessian".into()))?;
        let step = h.lu().solve(&f.gradient(&x)).ok_or_else(|| {
            Error::Precondition("singular Hessian during Newton refinement".into())
        })?;
        x -= &step;
        if step.norm() <= 1e-12 * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { iterations: 100 })
}
