use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::landscape::{ObjectiveFunction, Point};

/// Points of the `n_grid`-per-axis lattice on the cube around `center` that
/// fall in the closed ball of radius `radius`. Coordinates are
/// `center + radius·(2i/(n_grid − 1) − 1)`, so the center and the ball's axis
/// extremes are lattice points when `n_grid` is odd.
pub fn ball_lattice(center: &Point, radius: f64, n_grid: usize) -> Vec<Point> {
    let n = n_grid.max(2);
    let dim = center.len();
    let offsets: Vec<f64> = (0..n)
        .map(|i| radius * (2.0 * i as f64 / (n - 1) as f64 - 1.0))
        .collect();
    let total = n.pow(dim as u32);
    let mut out = Vec::new();
    for flat in 0..total {
        let mut idx = flat;
        let offset = DVector::from_fn(dim, |_, _| {
            let o = offsets[idx % n];
            idx /= n;
            o
        });
        if offset.norm() <= radius {
            out.push(center + offset);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradLowerBound {
    pub level: f64,
    pub region_radius: f64,
    pub zeta: f64,
}

/// Minimum of `|∇f|` over the lattice points of `B_delta(target)` where `f ≥ level`.
pub fn grad_lower_bound(
    f: &ObjectiveFunction,
    target: &Point,
    delta: f64,
    level: f64,
    n_grid: usize,
) -> Result<GradLowerBound> {
    f.check_dim(target)?;
    if !(level > f.value(target)) {
        return Err(Error::Precondition("level must exceed f(target)".into()));
    }
    let zeta = ball_lattice(target, delta, n_grid)
        .into_iter()
        .filter(|x| f.value(x) >= level)
        .map(|x| f.gradient(&x).norm())
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.min(g)))
        })
        .ok_or(Error::EmptyRegion)?;
    Ok(GradLowerBound {
        level,
        region_radius: delta,
        zeta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMaxima {
    pub f_max: f64,
    pub grad_max: f64,
}

/// Lattice maxima of `f` and `|∇f|` on the closed ball.
pub fn max_on_ball(
    f: &ObjectiveFunction,
    center: &Point,
    radius: f64,
    n_grid: usize,
) -> BallMaxima {
    ball_lattice(center, radius, n_grid).iter().fold(
        BallMaxima {
            f_max: f64::NEG_INFINITY,
            grad_max: 0.0,
        },
        |acc, x| BallMaxima {
            f_max: acc.f_max.max(f.value(x)),
            grad_max: acc.grad_max.max(f.gradient(x).norm()),
        },
    )
}
