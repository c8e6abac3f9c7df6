//! Explicit super-solutions: infima of planes, the two-plane edge, the arc
//! glued from an edge and a cone, and the global `N = 3` assembly.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cone::ConeProfile;
use crate::eikonal::{build_measure_n3, eval_inf_planes, EdgeSet, PlaneSpec, ProfileN3};
use crate::error::{Error, Result};
use crate::field::{Jet, ScalarField, SmoothField};
use crate::params::{angle_in_open, direction, normalize_angle, to_polar, Params};
use crate::subsolution::SubSolution;

fn plane(params: &Params, theta: f64, lambda: f64, x: &[f64]) -> f64 {
    let nu = direction(theta);
    -params.cot_alpha * (x[0] * nu[0] + x[1] * nu[1]) + params.gamma_from_weight(lambda)
}

/// `min(p1, p2)` with `p_i(x) = -cot a x·nu_i - (2/(c0 sin a)) ln lambda_i`.
pub fn eval_edge(params: &Params, theta1: f64, theta2: f64, lambda1: f64, lambda2: f64, x: &[f64]) -> f64 {
    plane(params, theta1, lambda1, x).min(plane(params, theta2, lambda2, x))
}

/// Infimum of the planes of a weighted spec.
pub fn eval_planes_inf(spec: &PlaneSpec, x: &[f64]) -> f64 {
    eval_inf_planes(spec, x).0
}

/// Radial field `phi_c(|x|) + offset` with analytic derivatives.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub profile: Arc<ConeProfile>,
    /// Value at the origin.
    pub offset: f64,
}

impl ConeField {
    pub fn radial(&self, r: f64) -> Result<f64> {
        Ok(self.profile.phi_raw(r)? + self.offset)
    }
}

impl ScalarField for ConeField {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.radial((x[0] * x[0] + x[1] * x[1]).sqrt())
    }
}

impl SmoothField for ConeField {
    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let value = self.radial(r)?;
        let second = self.profile.curvature(r)?;
        if r == 0.0 {
            return Ok(Jet {
                value,
                gradient: DVector::zeros(2),
                hessian: DMatrix::identity(2, 2) * second,
            });
        }
        let v = self.profile.slope(r)?;
        let e = DVector::from_vec(vec![x[0] / r, x[1] / r]);
        let radial = &e * e.transpose();
        let tangential = DMatrix::identity(2, 2) - &radial;
        Ok(Jet {
            value,
            gradient: &e * v,
            hessian: radial * second + tangential * (v / r),
        })
    }
}

/// Two planes with normals at `theta1`, `theta2` and equal weight `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePiece {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: f64,
    pub params: Params,
}

impl ScalarField for EdgePiece {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(eval_edge(&self.params, self.theta1, self.theta2, self.lambda, self.lambda, x))
    }
}

/// Edge between `theta1` and `theta2` replaced by a cone inside the sector.
#[derive(Debug, Clone)]
pub struct ArcPiece {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: f64,
    cone: ConeField,
}

impl ArcPiece {
    /// The cone is shifted so that `phi_c(0) = -(2/(c0 sin a)) ln lambda`.
    pub fn new(theta1: f64, theta2: f64, lambda: f64, profile: Arc<ConeProfile>) -> Result<Self> {
        if !(theta1 < theta2) || !(theta2 <= theta1 + TAU) {
            return Err(Error::Domain(format!(
                "arc ({theta1}, {theta2}) must satisfy θ1 < θ2 <= θ1 + 2π"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
        }
        let offset = profile.params().gamma_from_weight(lambda);
        Ok(ArcPiece {
            theta1,
            theta2,
            lambda,
            cone: ConeField { profile, offset },
        })
    }

    pub fn params(&self) -> &Params {
        self.cone.profile.params()
    }

    pub fn cone(&self) -> &ConeField {
        &self.cone
    }

    pub fn edge(&self) -> EdgePiece {
        EdgePiece {
            theta1: self.theta1,
            theta2: self.theta2,
            lambda: self.lambda,
            params: *self.params(),
        }
    }

    /// Whether `x` lies in the open sector where the cone may be active.
    pub fn in_sector(&self, x: &[f64]) -> bool {
        let p = to_polar([x[0], x[1]]);
        p.r > 0.0 && angle_in_open(p.theta, self.theta1, self.theta2)
    }
}

/// Arc super-solution: the fixed value at the origin, the edge outside
/// `(theta1, theta2)` and `min(phi_c, phi_e)` inside.
pub fn eval_arc(piece: &ArcPiece, x: &[f64]) -> Result<f64> {
    let p = to_polar([x[0], x[1]]);
    if p.r == 0.0 {
        return Ok(piece.cone.offset);
    }
    let edge = eval_edge(piece.params(), piece.theta1, piece.theta2, piece.lambda, piece.lambda, x);
    if angle_in_open(p.theta, piece.theta1, piece.theta2) {
        Ok(piece.cone.radial(p.r)?.min(edge))
    } else {
        Ok(edge)
    }
}

impl ScalarField for ArcPiece {
    fn value(&self, x: &[f64]) -> Result<f64> {
        eval_arc(self, x)
    }
}

#[derive(Debug, Clone)]
pub enum Piece {
    Edge(EdgePiece),
    Arc(ArcPiece),
}

impl ScalarField for Piece {
    fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Piece::Edge(e) => e.value(x),
            Piece::Arc(a) => a.value(x),
        }
    }
}

/// Points on which the global shift is calibrated: `radii × n_angles` polar nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSample {
    pub radii: Vec<f64>,
    pub n_angles: usize,
}

impl ShiftSample {
    /// Radii `0, 0.25, ..., 4` then geometric up to `r_out`.
    pub fn standard(r_out: f64) -> Self {
        let mut radii: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
        let mut r = 4.0;
        while r < r_out {
            r = (r * 1.1).min(r_out);
            radii.push(r);
        }
        ShiftSample {
            radii,
            n_angles: 720,
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut pts = Vec::with_capacity(self.radii.len() * self.n_angles);
        for &r in &self.radii {
            if r == 0.0 {
                pts.push([0.0, 0.0]);
                continue;
            }
            for j in 0..self.n_angles {
                let d = direction(TAU * j as f64 / self.n_angles as f64);
                pts.push([r * d[0], r * d[1]]);
            }
        }
        pts
    }
}

/// Margin added on top of the sampled supremum when fixing the global shift.
pub const SHIFT_MARGIN: f64 = 1e-6;

/// Global super-solution `phi^* = inf_i phi_i + C` for an angular profile.
#[derive(Debug, Clone)]
pub struct GlobalSuperN3 {
    profile: ProfileN3,
    lambda0: f64,
    pieces: Vec<Piece>,
    plane_path: Option<PlaneSpec>,
    shift: f64,
    sub: SubSolution,
}

/// Build the sector pieces (arc where `sigma = 1`, edge otherwise, atom masses
/// `2 lambda0`), then raise the infimum by the smallest sampled constant that
/// puts it above the matching sub-solution.
pub fn assemble_global_n3(
    cone: Arc<ConeProfile>,
    profile: &ProfileN3,
    lambda0: f64,
    sample: &ShiftSample,
) -> Result<GlobalSuperN3> {
    let k = profile.k();
    if k < 2 {
        return Err(Error::Domain("global assembly needs k >= 2".into()));
    }
    let params = *profile.params();
    let measure = build_measure_n3(profile, lambda0)?;
    let sub = SubSolution::new(measure, params)?;
    let lambda = 2.0 * lambda0;
    let mut pieces = Vec::with_capacity(k);
    for i in 0..k {
        let (lo, hi) = profile.sector(i);
        pieces.push(if profile.sigma()[i] {
            Piece::Arc(ArcPiece::new(lo, hi, lambda, cone.clone())?)
        } else {
            Piece::Edge(EdgePiece {
                theta1: lo,
                theta2: hi,
                lambda,
                params,
            })
        });
    }
    let plane_path = if k == 2 && !profile.sigma()[0] && !profile.sigma()[1] {
        let a = profile.angles();
        Some(PlaneSpec::from_weights(
            params,
            &[(direction(a[0]).to_vec(), lambda), (direction(a[1]).to_vec(), lambda)],
        )?)
    } else {
        None
    };
    let mut global = GlobalSuperN3 {
        profile: profile.clone(),
        lambda0,
        pieces,
        plane_path,
        shift: 0.0,
        sub,
    };
    let mut sup = f64::NEG_INFINITY;
    for x in sample.points() {
        let d = global.sub.value(&x)? - global.unshifted(&x)?;
        sup = sup.max(d);
    }
    global.shift = sup.max(0.0) + SHIFT_MARGIN;
    Ok(global)
}

impl GlobalSuperN3 {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn profile(&self) -> &ProfileN3 {
        &self.profile
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// The sub-solution of the matching measure.
    pub fn subsolution(&self) -> &SubSolution {
        &self.sub
    }

    pub fn uses_plane_path(&self) -> bool {
        self.plane_path.is_some()
    }

    /// Index of the sector `[theta_i, theta_{i+1})` containing `x`.
    pub fn sector_of(&self, x: &[f64]) -> usize {
        self.profile.locate(to_polar([x[0], x[1]]).theta).0
    }

    /// `inf_i phi_i(x)` before the shift.
    pub fn unshifted(&self, x: &[f64]) -> Result<f64> {
        if let Some(spec) = &self.plane_path {
            return Ok(eval_planes_inf(spec, x));
        }
        let mut best = f64::INFINITY;
        for p in &self.pieces {
            best = best.min(p.value(x)?);
        }
        Ok(best)
    }

    /// Piece `i` plus the shift.
    pub fn piece_value(&self, i: usize, x: &[f64]) -> Result<f64> {
        Ok(self.pieces[i].value(x)? + self.shift)
    }
}

impl ScalarField for GlobalSuperN3 {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.unshifted(x)? + self.shift)
    }
}

/// Summary of `high - low` over a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub min_gap: f64,
    pub max_gap: f64,
    /// Most negative gap and its point, if any gap is negative.
    pub worst_violation: Option<([f64; 2], f64)>,
    /// `(dist(x, E_inf), gap)` when an edge set was supplied.
    pub decay: Vec<(f64, f64)>,
}

impl SandwichReport {
    /// Largest gap among samples at edge distance at least `l`.
    pub fn max_gap_beyond(&self, l: f64) -> Option<f64> {
        self.decay
            .iter()
            .filter(|(d, _)| *d >= l)
            .map(|(_, g)| *g)
            .reduce(f64::max)
    }
}

pub fn sandwich_report<L, H>(
    low: &L,
    high: &H,
    samples: &[[f64; 2]],
    edges: Option<&EdgeSet>,
) -> Result<SandwichReport>
where
    L: ScalarField + ?Sized,
    H: ScalarField + ?Sized,
{
    let mut min_gap = f64::INFINITY;
    let mut max_gap = f64::NEG_INFINITY;
    let mut worst: Option<([f64; 2], f64)> = None;
    let mut decay = Vec::new();
    for x in samples {
        let gap = high.value(x)? - low.value(x)?;
        min_gap = min_gap.min(gap);
        max_gap = max_gap.max(gap);
        if gap < 0.0 && worst.is_none_or(|(_, g)| gap < g) {
            worst = Some((*x, gap));
        }
        if let Some(e) = edges {
            decay.push((e.distance(x), gap));
        }
    }
    Ok(SandwichReport {
        min_gap,
        max_gap,
        worst_violation: worst,
        decay,
    })
}

/// Jump of the one-sided directional derivatives `D+ - D-` of `field` at `x`
/// along the unit vector `n`; nonpositive at a concave kink.
pub fn kink_jump<F: ScalarField + ?Sized>(field: &F, x: &[f64; 2], n: &[f64; 2], h: f64) -> Result<f64> {
    let at = |s: f64| field.value(&[x[0] + s * n[0], x[1] + s * n[1]]);
    let f0 = at(0.0)?;
    let plus = (at(h)? - f0) / h;
    let minus = (f0 - at(-h)?) / h;
    Ok(plus - minus)
}

/// CSV `x1,x2,value` of a field over a set of points.
pub fn write_field_csv<F: ScalarField + ?Sized, W: Write>(field: &F, points: &[[f64; 2]], mut w: W) -> Result<()> {
    writeln!(w, "x1,x2,value")?;
    for x in points {
        writeln!(w, "{},{},{}", x[0], x[1], field.value(x)?)?;
    }
    Ok(())
}

/// Unit normal to the bisector of `theta1` and `theta2`, pointing toward `theta1`.
pub fn bisector_normal(theta1: f64, theta2: f64) -> [f64; 2] {
    let a = direction(normalize_angle(theta1));
    let b = direction(normalize_angle(theta2));
    let d = [a[0] - b[0], a[1] - b[1]];
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    [d[0] / n, d[1] / n]
}
