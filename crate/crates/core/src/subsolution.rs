//! Hopf-Cole sub-solutions.
//!
//! For a nonnegative finite measure `mu` on the sphere `S^{N-2}`,
//!
//! ```text
//! phi_*(x) = -(2 / (c0 sin a)) ln  ∫ exp((b/2) x·nu) dmu(nu),     b = c0 cos a
//! ```
//!
//! solves the viscous eikonal equation
//! `-Δphi = (c0 sin a / 2)(cot² a - |Dphi|²)` exactly, is concave with
//! `|Dphi| <= cot a`, and is therefore a sub-solution of the travelling-graph
//! equation.
//!
//! All exponential integrals are evaluated with the largest exponent over the
//! support factored out, so `|x|` up to `1e4` stays finite. Second moments are
//! accumulated relative to the dominant direction, which keeps the covariance
//! (and so the Hessian) free of cancellation when the measure concentrates.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{Jet, ScalarField, SmoothField};
use crate::params::{angle_in_closed, direction, dot, norm, to_polar, Params};
use crate::quadrature::{integrate, QuadOptions};

/// Point mass on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub nu: Vec<f64>,
    pub mass: f64,
}

/// Constant-density arc `weight · 1_{(lo, hi)} dθ` on `S^1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSegment {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

impl ArcSegment {
    pub fn mass(&self) -> f64 {
        self.weight * (self.hi - self.lo)
    }
}

/// Nonnegative measure on `S^{N-2}`: Dirac atoms plus (for `N = 3`) arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    arcs: Vec<ArcSegment>,
}

const SAME_DIRECTION: f64 = 1e-12;

impl SphereMeasure {
    /// Empty measure on `S^{N-2}`. Must receive mass before use.
    pub fn empty(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("dimension N = {dim} must be >= 2")));
        }
        Ok(SphereMeasure {
            dim,
            atoms: Vec::new(),
            arcs: Vec::new(),
        })
    }

    pub fn new(dim: usize, atoms: Vec<Atom>, arcs: Vec<ArcSegment>) -> Result<Self> {
        let mut m = SphereMeasure::empty(dim)?;
        for a in atoms {
            m.add_atom(&a.nu, a.mass)?;
        }
        for a in arcs {
            m.add_arc(a.lo, a.hi, a.weight)?;
        }
        m.validate()?;
        Ok(m)
    }

    /// Atoms on the circle (`N = 3`) given as `(angle, mass)` pairs.
    pub fn from_angles(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut m = SphereMeasure::empty(3)?;
        for &(theta, mass) in atoms {
            m.add_atom(&direction(theta), mass)?;
        }
        m.validate()?;
        Ok(m)
    }

    /// `weight · dθ` on the whole circle.
    pub fn uniform_circle(weight: f64) -> Result<Self> {
        let mut m = SphereMeasure::empty(3)?;
        m.add_arc(0.0, TAU, weight)?;
        Ok(m)
    }

    /// Add a point mass, merging with an existing atom in the same direction.
    pub fn add_atom(&mut self, nu: &[f64], mass: f64) -> Result<()> {
        if nu.len() != self.dim - 1 {
            return Err(Error::Domain(format!(
                "atom direction has {} components, expected {}",
                nu.len(),
                self.dim - 1
            )));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!("atom mass {mass} must be positive")));
        }
        let n = norm(nu);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("atom direction must be nonzero".into()));
        }
        let unit: Vec<f64> = nu.iter().map(|v| v / n).collect();
        if let Some(existing) = self.atoms.iter_mut().find(|a| {
            a.nu.iter()
                .zip(&unit)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
                < SAME_DIRECTION
        }) {
            existing.mass += mass;
        } else {
            self.atoms.push(Atom { nu: unit, mass });
        }
        Ok(())
    }

    pub fn add_arc(&mut self, lo: f64, hi: f64, weight: f64) -> Result<()> {
        if self.dim != 3 {
            return Err(Error::Domain("arcs are only defined on S^1 (N = 3)".into()));
        }
        if !(hi > lo) || hi - lo > TAU + 1e-12 {
            return Err(Error::Domain(format!(
                "arc endpoints must satisfy lo < hi <= lo + 2 pi, got ({lo}, {hi})"
            )));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Domain(format!("arc density {weight} must be positive")));
        }
        self.arcs.push(ArcSegment { lo, hi, weight });
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let m = self.total_mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("total mass {m} must be in (0, inf)")));
        }
        Ok(())
    }

    /// `mu + eps Σ_j (δ_{e_j} + δ_{-e_j})`, the regularisation that makes the
    /// matching infimum of planes epi-pointed.
    pub fn regularized(&self, eps: f64) -> Result<Self> {
        let mut m = self.clone();
        let d = self.dim - 1;
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[j] = sign;
                m.add_atom(&e, eps)?;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn arcs(&self) -> &[ArcSegment] {
        &self.arcs
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>()
            + self.arcs.iter().map(ArcSegment::mass).sum::<f64>()
    }

    /// Mass of the atom at angle `theta` (`N = 3`), zero if none.
    pub fn atom_mass_at(&self, theta: f64) -> f64 {
        let d = direction(theta);
        self.atoms
            .iter()
            .filter(|a| ((a.nu[0] - d[0]).powi(2) + (a.nu[1] - d[1]).powi(2)).sqrt() < 1e-9)
            .map(|a| a.mass)
            .sum()
    }
}

/// Normalised moments of `exp((b/2) x·nu) dmu` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBundle {
    /// `ln F_1(x)`, computed with the maximal exponent factored out.
    pub log_f1: f64,
    /// `F_nu / F_1`, the mean direction under the tilted measure.
    pub ratio_fnu: DVector<f64>,
    /// `F_{nu⊗nu} / F_1`.
    pub ratio_fnunu: DMatrix<f64>,
    /// `F_{nu⊗nu}/F_1 - (F_nu/F_1)⊗(F_nu/F_1)`, accumulated without cancellation.
    pub covariance: DMatrix<f64>,
}

fn arc_peak(arc: &ArcSegment, r: f64, theta_x: f64) -> (f64, f64) {
    // angle in [lo, hi] closest to theta_x, and r cos of the gap there
    if r == 0.0 {
        return (arc.lo, 0.0);
    }
    if angle_in_closed(theta_x, arc.lo, arc.hi) {
        let t = arc.lo + (theta_x - arc.lo).rem_euclid(TAU);
        let t = if t > arc.hi { arc.hi } else { t };
        return (t, r);
    }
    let clo = (arc.lo - theta_x).cos();
    let chi = (arc.hi - theta_x).cos();
    if clo >= chi {
        (arc.lo, r * clo)
    } else {
        (arc.hi, r * chi)
    }
}

/// Tilted moments of `mu` at `x`.
pub fn moments(mu: &SphereMeasure, params: &Params, x: &[f64]) -> Result<MomentBundle> {
    moments_with(mu, params, x, QuadOptions::default())
}

pub fn moments_with(
    mu: &SphereMeasure,
    params: &Params,
    x: &[f64],
    quad: QuadOptions,
) -> Result<MomentBundle> {
    let d = mu.dim - 1;
    if x.len() != d {
        return Err(Error::Domain(format!(
            "point has {} coordinates, expected {d}",
            x.len()
        )));
    }
    let half_b = 0.5 * params.b;

    // dominant support point
    let mut s_max = f64::NEG_INFINITY;
    let mut reference = vec![0.0; d];
    for a in &mu.atoms {
        let s = dot(x, &a.nu);
        if s > s_max {
            s_max = s;
            reference.copy_from_slice(&a.nu);
        }
    }
    let polar = if d == 2 {
        Some(to_polar([x[0], x[1]]))
    } else {
        None
    };
    let mut arc_peaks = Vec::with_capacity(mu.arcs.len());
    for arc in &mu.arcs {
        let p = polar.expect("arcs imply N = 3");
        let (t, s) = arc_peak(arc, p.r, p.theta);
        arc_peaks.push(t);
        if s > s_max {
            s_max = s;
            reference.copy_from_slice(&direction(t));
        }
    }

    let mut s0 = 0.0;
    let mut s1 = DVector::<f64>::zeros(d);
    let mut s2 = DMatrix::<f64>::zeros(d, d);
    for a in &mu.atoms {
        let w = a.mass * (half_b * (dot(x, &a.nu) - s_max)).exp();
        s0 += w;
        for i in 0..d {
            let di = a.nu[i] - reference[i];
            s1[i] += w * di;
            for j in 0..=i {
                s2[(i, j)] += w * di * (a.nu[j] - reference[j]);
            }
        }
    }
    if !mu.arcs.is_empty() {
        let p = polar.expect("arcs imply N = 3");
        let (r0, r1) = (reference[0], reference[1]);
        for (arc, &peak) in mu.arcs.iter().zip(&arc_peaks) {
            let integrand = |t: f64| {
                let (st, ct) = t.sin_cos();
                let w = arc.weight * (half_b * (p.r * (t - p.theta).cos() - s_max)).exp();
                let d0 = ct - r0;
                let d1 = st - r1;
                [w, w * d0, w * d1, w * d0 * d0, w * d1 * d0, w * d1 * d1]
            };
            let v = integrate(integrand, arc.lo, arc.hi, &[peak], quad)?;
            s0 += v[0];
            s1[0] += v[1];
            s1[1] += v[2];
            s2[(0, 0)] += v[3];
            s2[(1, 0)] += v[4];
            s2[(1, 1)] += v[5];
        }
    }
    for i in 0..d {
        for j in 0..i {
            s2[(j, i)] = s2[(i, j)];
        }
    }

    let mean_offset = &s1 / s0;
    let covariance = &s2 / s0 - &mean_offset * mean_offset.transpose();
    let ratio_fnu = DVector::from_column_slice(&reference) + &mean_offset;
    let ratio_fnunu = &covariance + &ratio_fnu * ratio_fnu.transpose();
    Ok(MomentBundle {
        log_f1: half_b * s_max + s0.ln(),
        ratio_fnu,
        ratio_fnunu,
        covariance,
    })
}

fn hessian_scale(params: &Params) -> f64 {
    params.c0 * params.cos_alpha * params.cos_alpha / (2.0 * params.sin_alpha)
}

pub fn eval_phi_star(mu: &SphereMeasure, params: &Params, x: &[f64]) -> Result<f64> {
    Ok(-params.log_scale() * moments(mu, params, x)?.log_f1)
}

pub fn grad_phi_star(mu: &SphereMeasure, params: &Params, x: &[f64]) -> Result<DVector<f64>> {
    Ok(moments(mu, params, x)?.ratio_fnu * -params.cot_alpha)
}

pub fn hess_phi_star(mu: &SphereMeasure, params: &Params, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(moments(mu, params, x)?.covariance * -hessian_scale(params))
}

fn jet_from_moments(m: &MomentBundle, params: &Params) -> Jet {
    Jet {
        value: -params.log_scale() * m.log_f1,
        gradient: &m.ratio_fnu * -params.cot_alpha,
        hessian: &m.covariance * -hessian_scale(params),
    }
}

/// `-Δphi_* - (c0 sin a / 2)(cot² a - |Dphi_*|²)`, identically zero up to rounding.
pub fn viscous_eikonal_residual(mu: &SphereMeasure, params: &Params, x: &[f64]) -> Result<f64> {
    let jet = jet_from_moments(&moments(mu, params, x)?, params);
    Ok(viscous_eikonal_residual_of(&jet, params))
}

pub fn viscous_eikonal_residual_of(jet: &Jet, params: &Params) -> f64 {
    let lap = jet.hessian.trace();
    let g2 = jet.gradient.norm_squared();
    -lap - 0.5 * params.c0 * params.sin_alpha * (params.cot_alpha.powi(2) - g2)
}

/// The travelling-graph operator
/// `-div(Dphi/√(1+|Dphi|²)) + c0 - c/√(1+|Dphi|²)` in non-divergence form.
pub fn mcm_operator(jet: &Jet, params: &Params) -> f64 {
    mcm_operator_raw(&jet.gradient, &jet.hessian, params)
}

pub(crate) fn mcm_operator_raw(g: &DVector<f64>, h: &DMatrix<f64>, params: &Params) -> f64 {
    let q = 1.0 + g.norm_squared();
    let s = q.sqrt().recip();
    let hgg = (g.transpose() * h * g)[(0, 0)];
    -h.trace() * s + hgg * s * s * s + params.c0 - params.c * s
}

/// Operator value of a smooth field at `x`.
pub fn mcm_operator_at<F: SmoothField + ?Sized>(field: &F, params: &Params, x: &[f64]) -> Result<f64> {
    Ok(mcm_operator(&field.jet(x)?, params))
}

/// A measure bound to parameters: the sub-solution `phi_*` as a field.
#[derive(Debug, Clone)]
pub struct SubSolution {
    pub measure: SphereMeasure,
    pub params: Params,
}

impl SubSolution {
    pub fn new(measure: SphereMeasure, params: Params) -> Result<Self> {
        if measure.dim() != params.dim {
            return Err(Error::Domain(format!(
                "measure lives on S^{} but params have N = {}",
                measure.dim() - 2,
                params.dim
            )));
        }
        Ok(SubSolution { measure, params })
    }

    pub fn moments(&self, x: &[f64]) -> Result<MomentBundle> {
        moments(&self.measure, &self.params, x)
    }
}

impl ScalarField for SubSolution {
    fn value(&self, x: &[f64]) -> Result<f64> {
        eval_phi_star(&self.measure, &self.params, x)
    }
}

impl SmoothField for SubSolution {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        Ok(jet_from_moments(&self.moments(x)?, &self.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn p45() -> Params {
        Params::new(FRAC_PI_4, 1.0, 3).unwrap()
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(SphereMeasure::from_angles(&[(0.0, 0.0)]).is_err());
        assert!(SphereMeasure::from_angles(&[(0.0, -1.0)]).is_err());
        assert!(SphereMeasure::from_angles(&[]).is_err());
        let mut m = SphereMeasure::empty(4).unwrap();
        assert!(m.add_arc(0.0, 1.0, 1.0).is_err());
        let mut m = SphereMeasure::empty(3).unwrap();
        assert!(m.add_arc(1.0, 0.5, 1.0).is_err());
        assert!(m.add_arc(0.0, 7.0, 1.0).is_err());
    }

    #[test]
    fn atoms_merge() {
        let m = SphereMeasure::from_angles(&[(0.0, 1.0), (TAU, 2.0), (PI, 1.0)]).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert!((m.atom_mass_at(0.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_atom_moments() {
        let p = p45();
        let m = SphereMeasure::from_angles(&[(0.0, 2.5)]).unwrap();
        let r = 7.0;
        let mb = moments(&m, &p, &[r, 0.0]).unwrap();
        assert!((mb.log_f1 - (0.5 * p.b * r + 2.5f64.ln())).abs() < 1e-14);
        assert!((mb.ratio_fnu[0] - 1.0).abs() < 1e-15);
        assert!(mb.ratio_fnu[1].abs() < 1e-15);
    }

    #[test]
    fn uniform_circle_at_origin() {
        let p = p45();
        let m = SphereMeasure::uniform_circle(1.0).unwrap();
        let mb = moments(&m, &p, &[0.0, 0.0]).unwrap();
        assert!((mb.log_f1 - TAU.ln()).abs() < 1e-13);
        assert!(mb.ratio_fnu.norm() < 1e-13);
        let g = grad_phi_star(&m, &p, &[0.0, 0.0]).unwrap();
        assert!(g.norm() < 1e-13);
    }

    #[test]
    fn two_atoms_mean_direction() {
        let p = p45();
        let m = SphereMeasure::from_angles(&[(0.0, 1.0), (FRAC_PI_2, 1.0)]).unwrap();
        let mb = moments(&m, &p, &[5.0, 0.0]).unwrap();
        // direct two-term summation
        let w0 = (0.5 * p.b * 5.0f64).exp();
        let w1 = 1.0;
        assert!((mb.ratio_fnu[0] - w0 / (w0 + w1)).abs() < 1e-15);
        assert!((mb.ratio_fnu[1] - w1 / (w0 + w1)).abs() < 1e-15);
        assert!((mb.log_f1 - (w0 + w1).ln()).abs() < 1e-14);
    }

    #[test]
    fn single_atom_is_plane() {
        let p = Params::new(0.6, 1.3, 3).unwrap();
        let theta = 2.1;
        let nu = direction(theta);
        let m = SphereMeasure::from_angles(&[(theta, 1.0)]).unwrap();
        let s = SubSolution::new(m.clone(), p).unwrap();
        for x in [[0.3, -4.0], [100.0, 20.0], [-1e4, 3e3]] {
            let v = eval_phi_star(&m, &p, &x).unwrap();
            let plane = -p.cot_alpha * dot(&x, &nu);
            assert!((v - plane).abs() <= 1e-12 * (1.0 + plane.abs()));
            let jet = s.jet(&x).unwrap();
            assert!((jet.gradient[0] + p.cot_alpha * nu[0]).abs() < 1e-15);
            assert!(jet.hessian.norm() < 1e-15);
            assert!(viscous_eikonal_residual(&m, &p, &x).unwrap().abs() < 1e-15);
            assert!(mcm_operator(&jet, &p).abs() < 1e-14);
        }
    }

    #[test]
    fn probability_measure_at_origin_is_zero() {
        let p = p45();
        let m = SphereMeasure::from_angles(&[(0.1, 0.25), (2.0, 0.5), (4.0, 0.25)]).unwrap();
        assert!(eval_phi_star(&m, &p, &[0.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn overflow_safe_far_away() {
        let p = p45();
        let m = SphereMeasure::from_angles(&[(0.0, 1.0), (2.0, 1.0)]).unwrap();
        let v = eval_phi_star(&m, &p, &[1e4, 0.0]).unwrap();
        assert!(v.is_finite());
        assert!((v + p.cot_alpha * 1e4).abs() < 1e-8);
        let mut arc = SphereMeasure::empty(3).unwrap();
        arc.add_arc(0.0, 1.0, 1.0).unwrap();
        let v = eval_phi_star(&arc, &p, &[0.0, 1e4]).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn arc_moments_match_closed_form_at_origin() {
        let p = p45();
        let mut m = SphereMeasure::empty(3).unwrap();
        m.add_arc(0.0, FRAC_PI_2, 1.0).unwrap();
        let mb = moments(&m, &p, &[0.0, 0.0]).unwrap();
        assert!((mb.log_f1 - FRAC_PI_2.ln()).abs() < 1e-14);
        // mean of (cos, sin) over a quarter circle
        let mean = 1.0 / FRAC_PI_2;
        assert!((mb.ratio_fnu[0] - mean).abs() < 1e-14);
        assert!((mb.ratio_fnu[1] - mean).abs() < 1e-14);
        // E[cos^2] = 1/2
        assert!((mb.ratio_fnunu[(0, 0)] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn regularized_adds_axis_atoms() {
        let m = SphereMeasure::from_angles(&[(0.0, 1.0)]).unwrap();
        let r = m.regularized(1e-3).unwrap();
        assert_eq!(r.atoms().len(), 4);
        assert!((r.total_mass() - 1.004).abs() < 1e-15);
    }
}
