//! Seeded quasi-random directions.
//!
//! The generator is the 64-bit linear congruential recurrence
//! `state <- state * 6364136223846793005 + 1442695040888963407 (mod 2^64)`.
//! Each uniform in (0, 1) is taken from the top 53 bits of the new state,
//! `(bits + 0.5) / 2^53`, and Gaussian pairs come from the Box–Muller transform
//! `r = sqrt(-2 ln u1)`, `(r cos 2πu2, r sin 2πu2)`. A direction is a vector of
//! such Gaussians normalized to unit length.

use nalgebra::DVector;

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
    spare: Option<f64>,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform sample in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn direction(&mut self, dim: usize) -> DVector<f64> {
        loop {
            let v = DVector::from_fn(dim, |_, _| self.gaussian());
            let n = v.norm();
            if n > 1e-300 {
                return v / n;
            }
        }
    }

    /// Uniform point in the axis-aligned box `[lower, upper]`.
    pub fn point_in(&mut self, lower: &[f64], upper: &[f64]) -> DVector<f64> {
        DVector::from_fn(lower.len(), |i, _| {
            lower[i] + (upper[i] - lower[i]) * self.uniform()
        })
    }
}

/// The 2n signed coordinate directions `+e1, -e1, +e2, -e2, ...`.
pub fn axis_directions(dim: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = DVector::zeros(dim);
            e[i] = sign;
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Lcg64::new(7);
        let mut b = Lcg64::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn first_state_matches_recurrence() {
        let mut g = Lcg64::new(0);
        assert_eq!(g.next_u64(), INCREMENT);
        assert_eq!(
            g.next_u64(),
            INCREMENT.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT)
        );
    }

    #[test]
    fn directions_are_unit() {
        let mut g = Lcg64::new(42);
        for dim in 1..5 {
            for _ in 0..50 {
                assert!((g.direction(dim).norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn uniform_moments() {
        let mut g = Lcg64::new(3);
        let n = 20000;
        let xs: Vec<f64> = (0..n).map(|_| g.uniform()).collect();
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        let zs: Vec<f64> = (0..n).map(|_| g.gaussian()).collect();
        let var = zs.iter().map(|z| z * z).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn axes() {
        let dirs = axis_directions(2);
        assert_eq!(dirs.len(), 4);
        assert_eq!(dirs[0].as_slice(), &[1.0, 0.0]);
        assert_eq!(dirs[1].as_slice(), &[-1.0, 0.0]);
        assert_eq!(dirs[3].as_slice(), &[0.0, -1.0]);
    }
}
