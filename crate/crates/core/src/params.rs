//! Physical constants and planar coordinate helpers.
//!
//! Every formula in the crate is written in terms of the forcing speed `c0`,
//! the front angle `alpha` and the derived quantities `c = c0 / sin(alpha)`,
//! `b = c0 cos(alpha)` and `cot(alpha)`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the travelling-graph problem `z = -c t + phi(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub c0: f64,
    pub c: f64,
    pub b: f64,
    pub cot_alpha: f64,
    pub sin_alpha: f64,
    pub cos_alpha: f64,
    /// Ambient dimension `N`; profiles live on `R^{N-1}`.
    pub dim: usize,
}

impl Params {
    pub fn new(alpha: f64, c0: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= FRAC_PI_2 + 1e-15) {
            return Err(Error::Domain(format!("alpha = {alpha} not in (0, pi/2]")));
        }
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::Domain(format!("c0 = {c0} must be positive")));
        }
        if dim < 2 {
            return Err(Error::Domain(format!("dimension N = {dim} must be >= 2")));
        }
        let alpha = alpha.min(FRAC_PI_2);
        let (sin_alpha, mut cos_alpha) = alpha.sin_cos();
        // cos(pi/2) is 6e-17 in floating point; the planar case must be exact
        if alpha == FRAC_PI_2 {
            cos_alpha = 0.0;
        }
        Ok(Params {
            alpha,
            c0,
            c: c0 / sin_alpha,
            b: c0 * cos_alpha,
            cot_alpha: cos_alpha / sin_alpha,
            sin_alpha,
            cos_alpha,
            dim,
        })
    }

    /// `2 / (c0 sin alpha)`, the Hopf-Cole prefactor.
    #[inline]
    pub fn log_scale(&self) -> f64 {
        2.0 / (self.c0 * self.sin_alpha)
    }

    /// Dimension of the graph's base space `R^{N-1}`.
    #[inline]
    pub fn base_dim(&self) -> usize {
        self.dim - 1
    }

    /// Planar fronts: `alpha = pi/2`, so `cot alpha = 0`.
    #[inline]
    pub fn is_planar(&self) -> bool {
        self.cos_alpha == 0.0
    }

    /// Plane offset `-(2/(c0 sin alpha)) ln lambda` attached to an atom of mass `lambda`.
    #[inline]
    pub fn gamma_from_weight(&self, lambda: f64) -> f64 {
        -self.log_scale() * lambda.ln()
    }

    /// Inverse of [`Params::gamma_from_weight`].
    #[inline]
    pub fn weight_from_gamma(&self, gamma: f64) -> f64 {
        (-gamma / self.log_scale()).exp()
    }
}

/// Polar coordinates `(r, theta)` with `theta` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

/// Reduce an angle to `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

pub fn to_polar(x: [f64; 2]) -> PolarPoint {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return PolarPoint { r: 0.0, theta: 0.0 };
    }
    PolarPoint {
        r,
        theta: normalize_angle(x[1].atan2(x[0])),
    }
}

pub fn from_polar(p: PolarPoint) -> [f64; 2] {
    let (s, c) = p.theta.sin_cos();
    [p.r * c, p.r * s]
}

/// Unit vector at angle `theta`.
#[inline]
pub fn direction(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}

/// True when `theta` lies in the open angular interval `(lo, hi)`, taken modulo `2 pi`.
/// `hi` may exceed `2 pi` (e.g. `theta_{k+1} = 2 pi + theta_1`).
pub fn angle_in_open(theta: f64, lo: f64, hi: f64) -> bool {
    let t = lo + (theta - lo).rem_euclid(TAU);
    t > lo && t < hi
}

/// Same as [`angle_in_open`] with closed ends.
pub fn angle_in_closed(theta: f64, lo: f64, hi: f64) -> bool {
    let t = lo + (theta - lo).rem_euclid(TAU);
    (t >= lo && t <= hi) || (hi - lo >= TAU)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn make_params_examples() {
        let p = Params::new(FRAC_PI_2, 1.0, 3).unwrap();
        assert_eq!(p.c, 1.0);
        assert_eq!(p.cot_alpha, 0.0);
        assert_eq!(p.b, 0.0);
        assert!(p.is_planar());

        let p = Params::new(FRAC_PI_4, 1.0, 3).unwrap();
        assert!(close(p.c, 2f64.sqrt(), 1e-15));
        assert!(close(p.cot_alpha, 1.0, 1e-15));
        assert!(close(p.b, 2f64.sqrt() / 2.0, 1e-15));

        let p = Params::new(FRAC_PI_6, 2.0, 3).unwrap();
        assert!(close(p.c, 4.0, 1e-15));
        assert!(close(p.cot_alpha, 3f64.sqrt(), 1e-15));
        assert!(close(p.b, 3f64.sqrt(), 1e-15));
    }

    #[test]
    fn make_params_rejects_bad_input() {
        assert!(Params::new(0.0, 1.0, 3).is_err());
        assert!(Params::new(2.0, 1.0, 3).is_err());
        assert!(Params::new(1.0, 0.0, 3).is_err());
        assert!(Params::new(1.0, -1.0, 3).is_err());
        assert!(Params::new(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn polar_examples() {
        assert_eq!(to_polar([1.0, 0.0]), PolarPoint { r: 1.0, theta: 0.0 });
        let p = to_polar([0.0, -2.0]);
        assert_eq!(p.r, 2.0);
        assert!(close(p.theta, 3.0 * PI / 2.0, 1e-15));
        assert_eq!(to_polar([0.0, 0.0]), PolarPoint { r: 0.0, theta: 0.0 });
    }

    #[test]
    fn angle_intervals() {
        assert!(angle_in_open(0.1, 0.0, 1.0));
        assert!(!angle_in_open(0.0, 0.0, 1.0));
        assert!(angle_in_open(0.1, 5.0, TAU + 0.5));
        assert!(!angle_in_open(4.0, 5.0, TAU + 0.5));
        assert!(angle_in_closed(5.0, 5.0, TAU + 0.5));
    }

    #[test]
    fn random_params_consistency() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let alpha = rng.random_range(1e-3..FRAC_PI_2);
            let c0 = rng.random_range(1e-2..10.0);
            let p = Params::new(alpha, c0, 3).unwrap();
            assert!(close(p.c * p.sin_alpha, c0, 1e-13));
            let ratio = p.c / c0;
            let rhs = ratio * ratio - 1.0;
            assert!((p.cot_alpha.powi(2) - rhs).abs() <= 1e-13 * rhs.max(1.0));
        }
    }

    proptest::proptest! {
        #[test]
        fn polar_round_trip(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let back = from_polar(to_polar([x, y]));
            let scale = 1e-12 * (1.0 + x.hypot(y));
            proptest::prop_assert!((back[0] - x).abs() <= scale);
            proptest::prop_assert!((back[1] - y).abs() <= scale);
        }
    }
}
