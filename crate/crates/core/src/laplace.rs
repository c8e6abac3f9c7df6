//! Uniform Laplace asymptotics of
//! `F(x) = λ1 e^{(br/2)cos(θ1-θx)} + λ2 e^{(br/2)cos(θ2-θx)} + ∫_{θ1}^{θ2} e^{(br/2)cos(θ-θx)} f(θ) dθ/2π`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::params::{to_polar, Params};
use crate::quadrature::{integrate_scalar, QuadOptions};

/// Exponent beyond which `e^{br/2}` is considered to overflow.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

/// `g(θ) = sign(θ) sqrt(2b(1 - cos θ))` on `[-π, π]`, clamped to `±2 sqrt(b)` outside.
pub fn g_map(params: &Params, theta: f64) -> f64 {
    let sb = params.b.sqrt();
    if theta >= PI {
        2.0 * sb
    } else if theta <= -PI {
        -2.0 * sb
    } else {
        // 2 sin^2(θ/2) = 1 - cos θ, and sin keeps the sign
        2.0 * sb * (0.5 * theta).sin()
    }
}

/// Inverse of [`g_map`] on `[-π, π]`.
pub fn g_inverse(params: &Params, t: f64) -> Result<f64> {
    let top = 2.0 * params.b.sqrt();
    if !(t.abs() <= top) {
        return Err(Error::Domain(format!("|t| = {} exceeds 2 sqrt(b) = {top}", t.abs())));
    }
    if top == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * (t / top).clamp(-1.0, 1.0).asin())
}

// ∫_a^b e^{-u^2/4} du / (2π), with tails taken through erfc
fn gaussian_mass(a: f64, b: f64) -> f64 {
    let (a2, b2) = (0.5 * a, 0.5 * b);
    let diff = if a2 >= 0.0 {
        libm::erfc(a2) - libm::erfc(b2)
    } else if b2 <= 0.0 {
        libm::erfc(-b2) - libm::erfc(-a2)
    } else {
        libm::erf(b2) - libm::erf(a2)
    };
    diff / (2.0 * PI.sqrt())
}

/// `N0 = ∫_{√r g(θ1-θx)}^{√r g(θ2-θx)} e^{-u^2/4} du / 2π`.
pub fn n_zero(params: &Params, theta1: f64, theta2: f64, theta_x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("N0 needs r > 0, got {r}")));
    }
    let s = r.sqrt();
    Ok(gaussian_mass(
        s * g_map(params, theta1 - theta_x),
        s * g_map(params, theta2 - theta_x),
    ))
}

/// Atom weights at both ends of a sector plus a density on it.
pub struct SectorIntegral {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub params: Params,
}

impl fmt::Debug for SectorIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorIntegral")
            .field("theta1", &self.theta1)
            .field("theta2", &self.theta2)
            .field("lambda1", &self.lambda1)
            .field("lambda2", &self.lambda2)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// Contributions of a sector integral, all multiplied by `e^{-br/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParts {
    pub atoms: f64,
    pub integral: f64,
    /// `br/2`, the removed exponent.
    pub exponent: f64,
}

impl ScaledParts {
    pub fn total(&self) -> f64 {
        self.atoms + self.integral
    }
}

/// Leading term and the empirical remainder `r |F - leading| e^{-br/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub direct: ScaledParts,
    /// Leading term times `e^{-br/2}`.
    pub leading_scaled: f64,
    pub remainder: f64,
}

impl Asymptotics {
    /// Unscaled `F`, or `+inf` when it does not fit in a double.
    pub fn f_direct(&self) -> f64 {
        self.direct.total() * self.direct.exponent.exp()
    }

    pub fn f_leading(&self) -> f64 {
        self.leading_scaled * self.direct.exponent.exp()
    }
}

impl SectorIntegral {
    /// Density `f ≡ 1`.
    pub fn new(params: Params, theta1: f64, theta2: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        Self::with_density(params, theta1, theta2, lambda1, lambda2, |_| 1.0)
    }

    pub fn with_density<F>(
        params: Params,
        theta1: f64,
        theta2: f64,
        lambda1: f64,
        lambda2: f64,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(theta1 < theta2) || !(theta2 - theta1 <= TAU) {
            return Err(Error::Domain(format!(
                "sector ({theta1}, {theta2}) must satisfy θ1 < θ2 <= θ1 + 2π"
            )));
        }
        if !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::Domain("atom weights must be finite".into()));
        }
        Ok(SectorIntegral {
            theta1,
            theta2,
            lambda1,
            lambda2,
            density: Box::new(f),
            params,
        })
    }

    pub fn density(&self, theta: f64) -> f64 {
        (self.density)(theta)
    }

    /// Sector-local angle of `x`: the representative of `θx` in `[θ1, θ1 + 2π)`.
    pub fn local_angle(&self, x: &[f64]) -> (f64, f64) {
        let p = to_polar([x[0], x[1]]);
        let t = self.theta1 + (p.theta - self.theta1).rem_euclid(TAU);
        (p.r, t)
    }

    /// All terms of `F` multiplied by `e^{-br/2}`.
    pub fn scaled_parts(&self, r: f64, theta_x: f64) -> Result<ScaledParts> {
        let z = 0.5 * self.params.b * r;
        let atoms = self.lambda1 * (z * ((self.theta1 - theta_x).cos() - 1.0)).exp()
            + self.lambda2 * (z * ((self.theta2 - theta_x).cos() - 1.0)).exp();
        let opts = QuadOptions {
            rel_tol: 1e-13,
            ..QuadOptions::default()
        };
        let integral = integrate_scalar(
            |t| (z * ((t - theta_x).cos() - 1.0)).exp() * (self.density)(t),
            self.theta1,
            self.theta2,
            &[theta_x],
            opts,
        )? / TAU;
        Ok(ScaledParts {
            atoms,
            integral,
            exponent: z,
        })
    }

    /// The diagnostic split `F = I1 + I2 + I3` of the integral part, with `I2`
    /// over `|θ - θx| < δ` and `I1`, `I3` on either side; all scaled by `e^{-br/2}`.
    pub fn split(&self, r: f64, theta_x: f64, delta: f64) -> Result<[f64; 3]> {
        let z = 0.5 * self.params.b * r;
        let f = |t: f64| (z * ((t - theta_x).cos() - 1.0)).exp() * (self.density)(t) / TAU;
        let lo = (theta_x - delta).clamp(self.theta1, self.theta2);
        let hi = (theta_x + delta).clamp(self.theta1, self.theta2);
        let opts = QuadOptions {
            rel_tol: 1e-13,
            ..QuadOptions::default()
        };
        Ok([
            integrate_scalar(f, self.theta1, lo, &[], opts)?,
            integrate_scalar(f, lo, hi, &[theta_x], opts)?,
            integrate_scalar(f, hi, self.theta2, &[], opts)?,
        ])
    }
}

/// `F(x)` by direct quadrature; fails with `Overflow` once `br/2 > 700`.
pub fn f_direct(si: &SectorIntegral, x: &[f64]) -> Result<f64> {
    let (r, t) = si.local_angle(x);
    let parts = si.scaled_parts(r, t)?;
    if parts.exponent > OVERFLOW_EXPONENT {
        return Err(Error::Overflow(parts.exponent));
    }
    Ok(parts.total() * parts.exponent.exp())
}

/// `ln F(x)` by direct quadrature with the exponent `br/2` factored out.
pub fn f_direct_log(si: &SectorIntegral, x: &[f64]) -> Result<f64> {
    let (r, t) = si.local_angle(x);
    let parts = si.scaled_parts(r, t)?;
    let s = parts.total();
    if !(s > 0.0) {
        return Err(Error::Domain(format!("F = {s} is not positive; no logarithm")));
    }
    Ok(parts.exponent + s.ln())
}

/// Leading term `atoms + e^{br/2} f(θx) N0 / sqrt(br)` against the direct value.
pub fn f_asymptotic(si: &SectorIntegral, x: &[f64]) -> Result<Asymptotics> {
    let (r, t) = si.local_angle(x);
    asymptotics_at(si, r, t)
}

/// As [`f_asymptotic`] with polar coordinates given, `θx` in `[θ1, θ2]`.
pub fn asymptotics_at(si: &SectorIntegral, r: f64, theta_x: f64) -> Result<Asymptotics> {
    if !(r > 1.0) {
        return Err(Error::Domain(format!("asymptotics need r > 1, got {r}")));
    }
    if !(si.theta1..=si.theta2).contains(&theta_x) {
        return Err(Error::Domain(format!(
            "θx = {theta_x} outside [{}, {}]",
            si.theta1, si.theta2
        )));
    }
    let br = si.params.b * r;
    if !(br > 0.0) {
        return Err(Error::Domain("asymptotics need b > 0".into()));
    }
    let direct = si.scaled_parts(r, theta_x)?;
    let n0 = n_zero(&si.params, si.theta1, si.theta2, theta_x, r)?;
    let gauss = si.density(theta_x) * n0 / br.sqrt();
    Ok(Asymptotics {
        direct,
        leading_scaled: direct.atoms + gauss,
        // the atoms enter both sides identically
        remainder: r * (direct.integral - gauss).abs(),
    })
}

/// CSV rows `r,theta_x,F_direct,F_leading,R_empirical` on a grid of radii and
/// equispaced angles in `[θ1, θ2]`.
pub fn write_diagnostics<W: Write>(
    si: &SectorIntegral,
    radii: &[f64],
    n_angles: usize,
    mut w: W,
) -> Result<()> {
    writeln!(w, "r,theta_x,F_direct,F_leading,R_empirical")?;
    for &r in radii {
        for t in sector_angles(si, n_angles) {
            let a = asymptotics_at(si, r, t)?;
            writeln!(w, "{},{},{},{},{}", r, t, a.f_direct(), a.f_leading(), a.remainder)?;
        }
    }
    Ok(())
}

/// `n` equispaced angles from `θ1` to `θ2` inclusive.
pub fn sector_angles(si: &SectorIntegral, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (si.theta1 + si.theta2)],
        _ => (0..n)
            .map(|i| si.theta1 + (si.theta2 - si.theta1) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    // c0 = √2, α = π/4 gives b = 1
    fn unit_b() -> Params {
        Params::new(FRAC_PI_4, 2f64.sqrt(), 3).unwrap()
    }

    #[test]
    fn g_examples() {
        let p = unit_b();
        assert!((p.b - 1.0).abs() < 1e-15);
        assert_eq!(g_map(&p, 0.0), 0.0);
        let h = 1e-6;
        let d = (g_map(&p, h) - g_map(&p, -h)) / (2.0 * h);
        assert!((d - p.b.sqrt()).abs() < 1e-9);
        assert!((g_map(&p, PI) - 2.0 * p.b.sqrt()).abs() < 1e-15);
        assert!((g_map(&p, -PI) + 2.0 * p.b.sqrt()).abs() < 1e-15);
        assert_eq!(g_map(&p, 5.0), 2.0 * p.b.sqrt());
        assert!((g_inverse(&p, g_map(&p, 0.7)).unwrap() - 0.7).abs() < 1e-12);
        assert!(g_inverse(&p, 2.1).is_err());
        for t in [0.1, 1.0, 2.5, 3.1] {
            assert_eq!(g_map(&p, -t), -g_map(&p, t));
        }
    }

    #[test]
    fn g_matches_definition() {
        let p = unit_b();
        for t in [-3.0, -1.0, 0.3, 2.0] {
            let def = f64::signum(t) * (2.0 * p.b * (1.0 - f64::cos(t))).sqrt();
            assert!((g_map(&p, t) - def).abs() < 1e-14);
        }
    }

    #[test]
    fn n_zero_limits() {
        let p = unit_b();
        let full = n_zero(&p, -1.0, 1.0, 0.0, 1e6).unwrap();
        assert!((full - 1.0 / PI.sqrt()).abs() < 1e-13);
        let half = n_zero(&p, 0.0, 1.0, 0.0, 1e6).unwrap();
        assert!((half - 0.5 / PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn n_zero_matches_quadrature() {
        let p = unit_b();
        let r: f64 = 100.0;
        let a = r.sqrt() * g_map(&p, -FRAC_PI_4);
        let b = r.sqrt() * g_map(&p, FRAC_PI_4);
        let oracle = integrate_scalar(
            |u| (-u * u / 4.0).exp() / TAU,
            a,
            b,
            &[0.0],
            QuadOptions {
                rel_tol: 1e-15,
                ..Default::default()
            },
        )
        .unwrap();
        let v = n_zero(&p, 0.0, FRAC_PI_2, FRAC_PI_4, r).unwrap();
        assert!((v - oracle).abs() < 1e-12);
    }

    #[test]
    fn direct_examples() {
        let p = unit_b();
        let si = SectorIntegral::new(p, 0.0, FRAC_PI_2, 0.3, 0.4).unwrap();
        let v = f_direct(&si, &[0.0, 0.0]).unwrap();
        assert!((v - (0.7 + 0.25)).abs() < 1e-14);
        let full = SectorIntegral::new(p, 0.0, TAU, 0.0, 0.0).unwrap();
        assert!((f_direct(&full, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
        let far = SectorIntegral::new(p, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(f_direct(&far, &[2000.0, 0.0]), Err(Error::Overflow(_))));
        assert!(f_direct_log(&far, &[2000.0, 0.0]).unwrap().is_finite());
    }

    #[test]
    fn full_circle_is_bessel() {
        // ∫ e^{z cos θ} dθ/2π = I0(z); compare with the power series
        let p = unit_b();
        let si = SectorIntegral::new(p, 0.0, TAU, 0.0, 0.0).unwrap();
        let z: f64 = 5.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= (z / 2.0).powi(2) / (k * k) as f64;
            sum += term;
        }
        let v = f_direct(&si, &[2.0 * z / p.b, 0.0]).unwrap();
        assert!((v - sum).abs() < 1e-12 * sum);
    }

    #[test]
    fn zero_density_gives_zero() {
        let p = unit_b();
        let si = SectorIntegral::with_density(p, 0.0, 1.0, 0.0, 0.0, |_| 0.0).unwrap();
        let a = asymptotics_at(&si, 10.0, 0.5).unwrap();
        assert_eq!(a.direct.total(), 0.0);
        assert_eq!(a.leading_scaled, 0.0);
    }

    #[test]
    fn split_adds_up() {
        let p = unit_b();
        let si = SectorIntegral::new(p, 0.0, FRAC_PI_2, 0.0, 0.0).unwrap();
        let parts = si.scaled_parts(50.0, 0.6).unwrap();
        let s = si.split(50.0, 0.6, 0.3).unwrap();
        assert!((s.iter().sum::<f64>() - parts.integral).abs() < 1e-13 * parts.integral);
    }

    #[test]
    fn remainder_scaled_by_r() {
        let p = unit_b();
        let si = SectorIntegral::new(p, 0.0, FRAC_PI_2, 1.0, 1.0).unwrap();
        let a = asymptotics_at(&si, 50.0, FRAC_PI_4).unwrap();
        let direct = a.f_direct();
        let lead = a.f_leading();
        let r_emp = 50.0 * (direct - lead).abs() * (-a.direct.exponent).exp();
        assert!((a.remainder - r_emp).abs() < 1e-6 * a.remainder.max(1e-3));
    }
}
