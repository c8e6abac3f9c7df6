//! Radially symmetric travelling graphs `phi_c(|x|)`.
//!
//! The slope `v = phi_c'` solves `v' = (1+v^2)(c0 sqrt(1+v^2) - c - v/r)` with
//! `v(0) = 0`. The profile is stored with `phi_c(0) = 0` and shifted on demand.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::ode::{dopri5, StepControl};
use crate::params::Params;

/// Default starting radius of the integration.
pub const R_START: f64 = 1e-6;

/// The profile is always integrated at least this far.
pub const MIN_COVERED_RADIUS: f64 = 400.0;

#[derive(Debug, Clone)]
pub struct ConeProfile {
    params: Params,
    r: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
    phi: Vec<f64>,
    c_raw: f64,
    c_err: f64,
    tol: f64,
}

/// Asymptotic constant with its extrapolation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeConstant {
    pub value: f64,
    pub error: f64,
}

/// Explicit lower bound `v0(r) = -(c^2-c0^2) / (c/r + c0 sqrt(1/r^2 + c^2 - c0^2))`.
pub fn v0_bracket(params: &Params, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("v0 needs r > 0, got {r}")));
    }
    let (c, c0) = (params.c, params.c0);
    let d = (c * c - c0 * c0).max(0.0);
    if d == 0.0 {
        return Ok(0.0);
    }
    if r.is_infinite() {
        return Ok(-d.sqrt() / c0);
    }
    Ok(-d / (c / r + c0 * (1.0 / (r * r) + d).sqrt()))
}

fn rhs(params: &Params, r: f64, v: f64) -> f64 {
    let q = 1.0 + v * v;
    q * (params.c0 * q.sqrt() - params.c - v / r)
}

/// `C0 = ln(pi c0 cos a) / (c0 sin a)`, the constant matching `mu = dθ/2π`.
pub fn c_zero(params: &Params) -> Result<f64> {
    if params.is_planar() {
        return Err(Error::Domain("no cone normalisation at alpha = pi/2".into()));
    }
    Ok((PI * params.c0 * params.cos_alpha).ln() / (params.c0 * params.sin_alpha))
}

/// Integrate the slope equation to `max(r_max, 400)` with local tolerance `tol`.
pub fn solve_cone(params: &Params, r_max: f64, tol: f64) -> Result<ConeProfile> {
    solve_cone_from(params, r_max, tol, R_START)
}

/// As [`solve_cone`] with an explicit starting radius for the series start.
pub fn solve_cone_from(params: &Params, r_max: f64, tol: f64, r0: f64) -> Result<ConeProfile> {
    if !(r_max >= 10.0) || !r_max.is_finite() {
        return Err(Error::Domain(format!("r_max = {r_max} must be at least 10")));
    }
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::Domain(format!("tol = {tol} outside [1e-13, 1e-6]")));
    }
    if !(r0 > 0.0 && r0 < 1e-2) {
        return Err(Error::Domain(format!("start radius {r0} outside (0, 1e-2)")));
    }
    let r_end = r_max.max(MIN_COVERED_RADIUS);
    let p = *params;
    if p.is_planar() {
        let n = r_end.ceil() as usize + 1;
        let r: Vec<f64> = (0..n).map(|i| (i as f64).min(r_end)).collect();
        return Ok(ConeProfile {
            params: p,
            v: vec![0.0; n],
            dv: vec![0.0; n],
            phi: vec![0.0; n],
            r,
            c_raw: 0.0,
            c_err: 0.0,
            tol,
        });
    }

    let a = 0.5 * (p.c0 - p.c);
    let mut r = vec![0.0, r0];
    let mut v = vec![0.0, a * r0];
    let mut dv = vec![a, rhs(&p, r0, a * r0)];
    let mut phi = vec![0.0, 0.5 * a * r0 * r0];
    let ctl = StepControl {
        atol: [tol, tol],
        rtol: [tol, tol],
        h_init: r0,
        h_max: 0.5,
        h_min: 1e-15,
        max_steps: 10_000_000,
    };
    dopri5(
        |t, y| [rhs(&p, t, y[0]), y[0]],
        r0,
        [a * r0, 0.5 * a * r0 * r0],
        r_end,
        ctl,
        |t, y| {
            let lower = v0_bracket(&p, t)?;
            if y[0] < lower - 10.0 * tol || y[0] > 10.0 * tol {
                return Err(Error::BracketViolation {
                    r: t,
                    v: y[0],
                    lower,
                    upper: 0.0,
                });
            }
            r.push(t);
            v.push(y[0]);
            dv.push(rhs(&p, t, y[0]));
            phi.push(y[1]);
            Ok(())
        },
    )?;
    let mut prof = ConeProfile {
        params: p,
        r,
        v,
        dv,
        phi,
        c_raw: f64::NAN,
        c_err: f64::NAN,
        tol,
    };
    let cc = prof.extrapolate_constant(prof.r_max())?;
    prof.c_raw = cc.value;
    prof.c_err = cc.error;
    Ok(prof)
}

impl ConeProfile {
    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    pub fn phi_values(&self) -> &[f64] {
        &self.phi
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("profile has nodes")
    }

    /// Asymptotic constant of the `phi_c(0) = 0` baseline.
    pub fn c_raw(&self) -> f64 {
        self.c_raw
    }

    fn locate(&self, r: f64) -> Result<usize> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radius {r} must be nonnegative")));
        }
        if r > self.r_max() {
            return Err(Error::OutOfRange {
                r,
                r_max: self.r_max(),
            });
        }
        let i = self.r.partition_point(|&t| t <= r);
        Ok(i.clamp(1, self.r.len() - 1) - 1)
    }

    fn hermite(&self, i: usize, r: f64, y: &[f64], dy: &[f64]) -> f64 {
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1]
    }

    /// `phi_c(r)` in the `phi_c(0) = 0` baseline.
    pub fn phi_raw(&self, r: f64) -> Result<f64> {
        let i = self.locate(r)?;
        Ok(self.hermite(i, r, &self.phi, &self.v))
    }

    /// `v(r) = phi_c'(r)`.
    pub fn slope(&self, r: f64) -> Result<f64> {
        let i = self.locate(r)?;
        Ok(self.hermite(i, r, &self.v, &self.dv))
    }

    /// `phi_c'' (r)` from the slope equation.
    pub fn curvature(&self, r: f64) -> Result<f64> {
        let v = self.slope(r)?;
        if r == 0.0 {
            return Ok(0.5 * (self.params.c0 - self.params.c));
        }
        Ok(rhs(&self.params, r, v))
    }

    /// `E(r) = phi_c(r) + cot a r - ln r/(c0 sin a) - (2 - 3 sin^2 a)/(c0^2 sin 2a r)`.
    pub fn constant_estimate(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        let s = p.sin_alpha;
        let first = 1.0 / (p.c0 * s);
        let second = (2.0 - 3.0 * s * s) / (p.c0 * p.c0 * 2.0 * s * p.cos_alpha);
        Ok(self.phi_raw(r)? + p.cot_alpha * r - first * r.ln() - second / r)
    }

    fn extrapolate_constant(&self, big_r: f64) -> Result<ConeConstant> {
        if self.params.is_planar() {
            return Ok(ConeConstant {
                value: 0.0,
                error: 0.0,
            });
        }
        if big_r < 200.0 {
            return Err(Error::Domain(format!(
                "cone constant needs r_max >= 200, got {big_r}"
            )));
        }
        // remainder is O(1/r^2): eliminate it between r/2 and r
        let rich = |r: f64| -> Result<f64> {
            let e1 = self.constant_estimate(0.5 * r)?;
            let e2 = self.constant_estimate(r)?;
            Ok((4.0 * e2 - e1) / 3.0)
        };
        let coarse = rich(0.5 * big_r)?;
        let fine = rich(big_r)?;
        let error = (fine - coarse).abs();
        if error > 1e-4 {
            return Err(Error::PoorConvergence(error));
        }
        Ok(ConeConstant { value: fine, error })
    }

    /// Shift that brings the asymptotic constant to `target_c`.
    pub fn shift_for(&self, target_c: f64) -> f64 {
        target_c - self.c_raw
    }

    /// `phi_c(r)` normalised so that its asymptotic constant equals `target_c`.
    pub fn eval_phi_c(&self, r: f64, target_c: f64) -> Result<f64> {
        Ok(self.phi_raw(r)? + self.shift_for(target_c))
    }

    /// Angle `theta_bar(r)` at which the plane through `phi_c(0)` with normal
    /// slope `cot a` meets the cone on the circle of radius `r`.
    pub fn theta_bar(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("theta_bar needs r > 0, got {r}")));
        }
        if self.params.is_planar() {
            return Err(Error::Domain("theta_bar undefined at alpha = pi/2".into()));
        }
        let arg = self.phi_raw(r)? / (-r * self.params.cot_alpha);
        if !(-1e-10..=1.0 + 1e-10).contains(&arg) {
            return Err(Error::Domain(format!(
                "arccos argument {arg} outside [0, 1] at r = {r}"
            )));
        }
        Ok(arg.clamp(0.0, 1.0).acos())
    }

    /// CSV with header `r,v,phi_c` (baseline `phi_c(0) = 0`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,v,phi_c")?;
        for i in 0..self.r.len() {
            writeln!(w, "{},{},{}", self.r[i], self.v[i], self.phi[i])?;
        }
        Ok(())
    }
}

/// Richardson estimate of the asymptotic constant using radii up to `big_r`.
pub fn cone_constant(profile: &ConeProfile) -> Result<ConeConstant> {
    profile.extrapolate_constant(profile.r_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn p(alpha: f64) -> Params {
        Params::new(alpha, 1.0, 3).unwrap()
    }

    // classical RK4 on v alone, equal steps in ln r
    fn rk4_oracle(params: &Params, r_end: f64, n: usize) -> f64 {
        let r0 = 1e-7;
        let a = 0.5 * (params.c0 - params.c);
        let mut v = a * r0;
        let mut s = r0.ln();
        let ds = (r_end.ln() - s) / n as f64;
        // dv/ds = r f(r, v)
        let g = |s: f64, v: f64| {
            let r = s.exp();
            r * rhs(params, r, v)
        };
        for _ in 0..n {
            let k1 = g(s, v);
            let k2 = g(s + 0.5 * ds, v + 0.5 * ds * k1);
            let k3 = g(s + 0.5 * ds, v + 0.5 * ds * k2);
            let k4 = g(s + ds, v + ds * k3);
            v += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += ds;
        }
        v
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(v0_bracket(&p(FRAC_PI_2), 3.0).unwrap(), 0.0);
        let q = p(FRAC_PI_4);
        let v = v0_bracket(&q, 1.0).unwrap();
        assert!((v + 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((v0_bracket(&q, 1e12).unwrap() + 1.0).abs() < 1e-10);
        assert!((v0_bracket(&q, f64::INFINITY).unwrap() + 1.0).abs() < 1e-14);
        assert!(v0_bracket(&q, 0.0).is_err());
    }

    #[test]
    fn planar_profile_is_zero() {
        let prof = solve_cone(&p(FRAC_PI_2), 50.0, 1e-10).unwrap();
        assert!(prof.v_values().iter().all(|&v| v == 0.0));
        assert_eq!(prof.eval_phi_c(37.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_rk4_oracle_at_ten() {
        let q = p(FRAC_PI_4);
        let prof = solve_cone(&q, 400.0, 1e-11).unwrap();
        let oracle = rk4_oracle(&q, 10.0, 400_000);
        assert!((prof.slope(10.0).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn series_start_insensitive() {
        let q = p(FRAC_PI_6);
        let a = solve_cone_from(&q, 400.0, 1e-12, 1e-6).unwrap();
        let b = solve_cone_from(&q, 400.0, 1e-12, 5e-7).unwrap();
        assert!((a.slope(1.0).unwrap() - b.slope(1.0).unwrap()).abs() < 1e-10);
        assert!((a.v_values()[1] - 0.5 * (q.c0 - q.c) * 1e-6).abs() < 1e-8);
    }

    #[test]
    fn slope_is_monotone_and_bracketed() {
        for alpha in [FRAC_PI_6, FRAC_PI_4, 1.2] {
            let q = p(alpha);
            let tol = 1e-10;
            let prof = solve_cone(&q, 400.0, tol).unwrap();
            let (r, v) = (prof.r_grid(), prof.v_values());
            for i in 1..r.len() {
                assert!(v[i] <= v[i - 1] + 1e-12);
                assert!(v[i] <= 10.0 * tol);
                assert!(v[i] >= v0_bracket(&q, r[i]).unwrap() - 10.0 * tol);
            }
            let vmax = *v.last().unwrap();
            assert!((vmax + q.cot_alpha).abs() <= 2.0 / (q.c0 * q.sin_alpha * prof.r_max()));
        }
    }

    #[test]
    fn constant_is_stable() {
        let q = p(FRAC_PI_4);
        let prof = solve_cone(&q, 400.0, 1e-12).unwrap();
        let c = cone_constant(&prof).unwrap();
        assert!(c.error < 1e-4);
        assert!((prof.eval_phi_c(0.0, prof.c_raw()).unwrap()).abs() < 1e-15);
        let e200 = prof.constant_estimate(200.0).unwrap();
        let e400 = prof.constant_estimate(400.0).unwrap();
        assert!((e200 - e400).abs() < 1e-4);
    }

    #[test]
    fn theta_bar_limits() {
        let q = p(FRAC_PI_4);
        let prof = solve_cone(&q, 400.0, 1e-12).unwrap();
        assert!((prof.theta_bar(1e-4).unwrap() - FRAC_PI_2).abs() < 1e-3);
        let mut prev = prof.theta_bar(1.0).unwrap();
        for i in 2..=400 {
            let t = prof.theta_bar(i as f64).unwrap();
            assert!(t <= prev + 1e-12);
            assert!(t > 0.0 && t < FRAC_PI_2);
            prev = t;
        }
    }

    #[test]
    fn theta_bar_matches_bisection() {
        let q = p(FRAC_PI_4);
        let prof = solve_cone(&q, 400.0, 1e-12).unwrap();
        let r = 50.0;
        let target = prof.phi_raw(r).unwrap();
        // plane through the origin value with unit normal at angle 0
        let plane = |t: f64| -q.cot_alpha * r * t.cos();
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if plane(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((prof.theta_bar(r).unwrap() - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn out_of_range() {
        let prof = solve_cone(&p(FRAC_PI_4), 10.0, 1e-10).unwrap();
        assert!(prof.r_max() >= 400.0);
        assert!(matches!(prof.phi_raw(1e4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn csv_has_header() {
        let prof = solve_cone(&p(FRAC_PI_4), 10.0, 1e-8).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("r,v,phi_c\n0,0,0\n"));
        assert_eq!(s.lines().count(), prof.r_grid().len() + 1);
    }
}
