//! Viscosity solutions of the eikonal equation `|Dphi| = cot a` as infima of
//! affine forms, the `N = 3` angular profile with finitely many gradient jumps,
//! and dyadic covers of compact direction sets.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::params::{direction, dot, norm, normalize_angle, Params};
use crate::subsolution::SphereMeasure;

/// One affine form `-cot a · x·nu + gamma`. `gamma = +inf` disables it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneEntry {
    pub nu: Vec<f64>,
    pub gamma: f64,
}

/// Finite family of planes whose infimum solves the eikonal equation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSpec {
    entries: Vec<PlaneEntry>,
    params: Params,
}

impl PlaneSpec {
    /// Directions are normalised; at least one `gamma` must be finite.
    pub fn new(params: Params, entries: Vec<PlaneEntry>) -> Result<Self> {
        let d = params.base_dim();
        let mut out = Vec::with_capacity(entries.len());
        for e in entries {
            if e.nu.len() != d {
                return Err(Error::Domain(format!(
                    "direction has {} components, expected {d}",
                    e.nu.len()
                )));
            }
            if e.gamma.is_nan() || e.gamma == f64::NEG_INFINITY {
                return Err(Error::Domain(format!("invalid offset {}", e.gamma)));
            }
            let n = norm(&e.nu);
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Domain("plane direction must be nonzero".into()));
            }
            out.push(PlaneEntry {
                nu: e.nu.iter().map(|v| v / n).collect(),
                gamma: e.gamma,
            });
        }
        if !out.iter().any(|e| e.gamma.is_finite()) {
            return Err(Error::DegenerateSpec(
                "at least one plane needs a finite offset".into(),
            ));
        }
        Ok(PlaneSpec {
            entries: out,
            params,
        })
    }

    /// Planes in the plane (`N = 3`) given by `(angle, gamma)`.
    pub fn from_angles(params: Params, entries: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            params,
            entries
                .iter()
                .map(|&(t, gamma)| PlaneEntry {
                    nu: direction(t).to_vec(),
                    gamma,
                })
                .collect(),
        )
    }

    /// Planes `-cot a x·nu_i - (2/(c0 sin a)) ln lambda_i` from weights.
    pub fn from_weights(params: Params, entries: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut planes = Vec::with_capacity(entries.len());
        for (nu, lambda) in entries {
            if !(*lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::Domain(format!("weight {lambda} must be positive")));
            }
            planes.push(PlaneEntry {
                nu: nu.clone(),
                gamma: params.gamma_from_weight(*lambda),
            });
        }
        Self::new(params, planes)
    }

    /// `k` equispaced directions starting at `theta0`, all with the same weight.
    pub fn equispaced(params: Params, k: usize, theta0: f64, lambda: f64) -> Result<Self> {
        let entries: Vec<(Vec<f64>, f64)> = (0..k)
            .map(|i| (direction(theta0 + TAU * i as f64 / k as f64).to_vec(), lambda))
            .collect();
        Self::from_weights(params, &entries)
    }

    pub fn entries(&self) -> &[PlaneEntry] {
        &self.entries
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same directions with every offset set to zero: the 1-homogeneous profile.
    pub fn homogeneous(&self) -> PlaneSpec {
        PlaneSpec {
            entries: self
                .entries
                .iter()
                .filter(|e| e.gamma.is_finite())
                .map(|e| PlaneEntry {
                    nu: e.nu.clone(),
                    gamma: 0.0,
                })
                .collect(),
            params: self.params,
        }
    }

    /// Atoms `lambda_i delta_{nu_i}` with `gamma_i = -(2/(c0 sin a)) ln lambda_i`.
    pub fn matched_measure(&self) -> Result<SphereMeasure> {
        let mut m = SphereMeasure::empty(self.params.dim)?;
        for e in self.entries.iter().filter(|e| e.gamma.is_finite()) {
            m.add_atom(&e.nu, self.params.weight_from_gamma(e.gamma))?;
        }
        Ok(m)
    }

    /// Distinct directions among the finite entries.
    pub fn distinct_directions(&self) -> Vec<Vec<f64>> {
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for e in self.entries.iter().filter(|e| e.gamma.is_finite()) {
            if !dirs.iter().any(|d| dist(d, &e.nu) < 1e-12) {
                dirs.push(e.nu.clone());
            }
        }
        dirs
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// `min_i (-cot a · x·nu_i + gamma_i)` and the smallest index attaining it.
pub fn eval_inf_planes(spec: &PlaneSpec, x: &[f64]) -> (f64, usize) {
    let cot = spec.params.cot_alpha;
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, e) in spec.entries.iter().enumerate() {
        if !e.gamma.is_finite() {
            continue;
        }
        let v = -cot * dot(x, &e.nu) + e.gamma;
        if v < best {
            best = v;
            arg = i;
        }
    }
    (best, arg)
}

impl ScalarField for PlaneSpec {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(eval_inf_planes(self, x).0)
    }
}

/// Hyperplanes `(nu_i - nu_j)^⊥` that carry the edges of a finite spec.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    directions: Vec<Vec<f64>>,
    /// Normals `nu_i - nu_j` for `i < j`.
    pub normals: Vec<Vec<f64>>,
    /// `min |nu - nu'|` over distinct pairs.
    pub delta: f64,
}

impl EdgeSet {
    pub fn from_spec(spec: &PlaneSpec) -> Result<Self> {
        if spec.entries.iter().any(|e| !e.gamma.is_finite()) {
            return Err(Error::DegenerateSpec(
                "edge set needs all offsets finite".into(),
            ));
        }
        let directions = spec.distinct_directions();
        if directions.len() < 2 {
            return Err(Error::DegenerateSpec(
                "fewer than 2 distinct directions: no edges".into(),
            ));
        }
        let mut normals = Vec::new();
        let mut delta = f64::INFINITY;
        for i in 0..directions.len() {
            for j in i + 1..directions.len() {
                let n: Vec<f64> = directions[i]
                    .iter()
                    .zip(&directions[j])
                    .map(|(a, b)| a - b)
                    .collect();
                delta = delta.min(norm(&n));
                normals.push(n);
            }
        }
        Ok(EdgeSet {
            directions,
            normals,
            delta,
        })
    }

    /// Distance from `x` to the set where `max_nu x·nu` is attained twice.
    ///
    /// With `i0` the maximising direction, `x` sits inside the polyhedral cone
    /// `K_{i0} = ∩_j {x·(nu_{i0} - nu_j) >= 0}`; its distance to the boundary is
    /// the smallest distance to the hyperplanes `(nu_{i0} - nu_j)^⊥`.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut i0 = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, d) in self.directions.iter().enumerate() {
            let s = dot(x, d);
            if s > best {
                best = s;
                i0 = i;
            }
        }
        let top = &self.directions[i0];
        self.directions
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i0)
            .map(|(_, d)| {
                let n: Vec<f64> = top.iter().zip(d).map(|(a, b)| a - b).collect();
                (dot(x, &n) / norm(&n)).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `dist(x, E_inf)` for a finite spec with at least two distinct directions.
pub fn edge_distance(spec: &PlaneSpec, x: &[f64]) -> Result<f64> {
    Ok(EdgeSet::from_spec(spec)?.distance(x))
}

/// Angular profile `psi_inf` of a 1-homogeneous eikonal solution on `R^2`
/// with finitely many gradient jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileN3 {
    angles: Vec<f64>,
    sigma: Vec<bool>,
    params: Params,
}

impl ProfileN3 {
    /// `angles` strictly increasing in `[0, 2 pi)`; `sigma[i]` marks the sector
    /// `[theta_i, theta_{i+1}]` as flat (`psi = -cot a`). Adjacent flat sectors
    /// are rejected when `k >= 2`.
    pub fn new(params: Params, angles: Vec<f64>, sigma: Vec<bool>) -> Result<Self> {
        if params.dim != 3 {
            return Err(Error::Domain("angular profiles require N = 3".into()));
        }
        let k = angles.len();
        if k == 0 || sigma.len() != k {
            return Err(Error::Domain(format!(
                "need k >= 1 angles and as many flags (got {} and {})",
                k,
                sigma.len()
            )));
        }
        if angles.iter().any(|t| !(0.0..TAU).contains(t)) {
            return Err(Error::Domain("angles must lie in [0, 2 pi)".into()));
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("angles must be strictly increasing".into()));
        }
        if k >= 2 {
            for i in 0..k {
                if sigma[i] && sigma[(i + 1) % k] {
                    return Err(Error::Domain(format!(
                        "adjacent flat sectors at indices {i} and {}",
                        (i + 1) % k
                    )));
                }
            }
        }
        Ok(ProfileN3 {
            angles,
            sigma,
            params,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn sigma(&self) -> &[bool] {
        &self.sigma
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn k(&self) -> usize {
        self.angles.len()
    }

    /// Sector bounds `(theta_i, theta_{i+1})` with `theta_{k+1} = 2 pi + theta_1`.
    pub fn sector(&self, i: usize) -> (f64, f64) {
        let k = self.k();
        let lo = self.angles[i];
        let hi = if i + 1 < k {
            self.angles[i + 1]
        } else {
            self.angles[0] + TAU
        };
        (lo, hi)
    }

    /// Index of the sector containing `theta` and `theta` lifted into it.
    pub fn locate(&self, theta: f64) -> (usize, f64) {
        let first = self.angles[0];
        let t = first + (theta - first).rem_euclid(TAU);
        let k = self.k();
        // sectors are [theta_i, theta_{i+1}); the last one wraps
        let i = match self.angles.iter().rposition(|&a| a <= t) {
            Some(i) => i,
            None => k - 1,
        };
        (i, t)
    }
}

pub fn eval_psi(profile: &ProfileN3, theta: f64) -> f64 {
    let cot = profile.params.cot_alpha;
    let (i, t) = profile.locate(theta);
    if profile.sigma[i] {
        return -cot;
    }
    let (lo, hi) = profile.sector(i);
    if t <= 0.5 * (lo + hi) {
        -cot * (t - lo).cos()
    } else {
        -cot * (t - hi).cos()
    }
}

impl ScalarField for ProfileN3 {
    /// `r psi_inf(theta_x)`.
    fn value(&self, x: &[f64]) -> Result<f64> {
        let p = crate::params::to_polar([x[0], x[1]]);
        Ok(p.r * eval_psi(self, p.theta))
    }
}

/// Measure whose Hopf-Cole transform has asymptotics `r psi_inf(theta)`:
/// flat sectors carry `1_{(theta_i, theta_{i+1})} dθ`, every sector adds
/// `lambda0` at both ends.
pub fn build_measure_n3(profile: &ProfileN3, lambda0: f64) -> Result<SphereMeasure> {
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::Domain(format!("lambda0 = {lambda0} must be positive")));
    }
    let mut m = SphereMeasure::empty(3)?;
    let k = profile.k();
    if k == 1 && profile.sigma[0] {
        let lo = profile.angles[0];
        m.add_arc(lo, lo + TAU, 1.0)?;
        return Ok(m);
    }
    for i in 0..k {
        let (lo, hi) = profile.sector(i);
        if profile.sigma[i] {
            m.add_arc(lo, hi, 1.0)?;
        }
        m.add_atom(&direction(lo), lambda0)?;
        m.add_atom(&direction(normalize_angle(hi)), lambda0)?;
    }
    Ok(m)
}

/// A compact subset of the unit sphere in `R^{d}`, queried through distances.
pub trait DirectionSet {
    fn base_dim(&self) -> usize;
    /// Euclidean distance from `p` to the set.
    fn distance(&self, p: &[f64]) -> f64;
    /// A point of the set closest to `p`.
    fn nearest(&self, p: &[f64]) -> Vec<f64>;
}

/// Finitely many unit vectors.
#[derive(Debug, Clone)]
pub struct FiniteDirections(pub Vec<Vec<f64>>);

impl DirectionSet for FiniteDirections {
    fn base_dim(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }
    fn distance(&self, p: &[f64]) -> f64 {
        self.0.iter().map(|d| dist(d, p)).fold(f64::INFINITY, f64::min)
    }
    fn nearest(&self, p: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .min_by(|a, b| dist(a, p).total_cmp(&dist(b, p)))
            .cloned()
            .unwrap_or_default()
    }
}

/// The whole sphere `S^{d-1}`.
#[derive(Debug, Clone, Copy)]
pub struct WholeSphere(pub usize);

impl DirectionSet for WholeSphere {
    fn base_dim(&self) -> usize {
        self.0
    }
    fn distance(&self, p: &[f64]) -> f64 {
        (norm(p) - 1.0).abs()
    }
    fn nearest(&self, p: &[f64]) -> Vec<f64> {
        let n = norm(p);
        if n == 0.0 {
            let mut e = vec![0.0; self.0];
            e[0] = 1.0;
            e
        } else {
            p.iter().map(|v| v / n).collect()
        }
    }
}

/// Union of closed arcs `[lo, hi]` of the unit circle.
#[derive(Debug, Clone)]
pub struct CircleArcs(pub Vec<(f64, f64)>);

impl DirectionSet for CircleArcs {
    fn base_dim(&self) -> usize {
        2
    }
    fn distance(&self, p: &[f64]) -> f64 {
        dist(&self.nearest(p), p)
    }
    fn nearest(&self, p: &[f64]) -> Vec<f64> {
        let r = norm(p);
        if r > 0.0 {
            let theta = p[1].atan2(p[0]);
            if self
                .0
                .iter()
                .any(|&(lo, hi)| crate::params::angle_in_closed(theta, lo, hi))
            {
                return vec![p[0] / r, p[1] / r];
            }
        }
        let mut best = Vec::new();
        let mut best_d = f64::INFINITY;
        for &(lo, hi) in &self.0 {
            for t in [lo, hi] {
                let q = direction(t);
                let d = dist(&q, p);
                if d < best_d {
                    best_d = d;
                    best = q.to_vec();
                }
            }
        }
        best
    }
}

pub const MAX_COVER_DEPTH: usize = 24;

/// Dyadic cube decomposition of a compact direction set.
///
/// Starting from `[-1, 1]^d`, every retained cube is split into `2^d` children
/// and a child is kept when its centre lies within half a diagonal of the set.
/// One representative of the set (the point nearest to the cube centre) is
/// returned per retained cube and level, so every point of the set lies within
/// `sqrt(d) 2^{1-depth}` of some representative.
pub fn cover_compact<S: DirectionSet + ?Sized>(set: &S, depth: usize) -> Result<Vec<Vec<f64>>> {
    if depth > MAX_COVER_DEPTH {
        return Err(Error::Domain(format!(
            "depth {depth} exceeds {MAX_COVER_DEPTH}"
        )));
    }
    let d = set.base_dim();
    if d == 0 {
        return Err(Error::EmptySet);
    }
    let sqrt_d = (d as f64).sqrt();
    let center0 = vec![0.0; d];
    if set.distance(&center0) > sqrt_d {
        return Err(Error::EmptySet);
    }
    let mut reps = vec![set.nearest(&center0)];
    let mut level = vec![center0];
    let mut width = 2.0;
    for _ in 1..=depth {
        let child_w = 0.5 * width;
        let half_diag = 0.5 * child_w * sqrt_d;
        let mut next = Vec::new();
        for c in &level {
            for corner in 0..(1usize << d) {
                let child: Vec<f64> = (0..d)
                    .map(|i| {
                        let sign = if corner >> i & 1 == 1 { 1.0 } else { -1.0 };
                        c[i] + sign * 0.25 * width
                    })
                    .collect();
                if set.distance(&child) <= half_diag {
                    reps.push(set.nearest(&child));
                    next.push(child);
                }
            }
        }
        level = next;
        width = child_w;
    }
    Ok(reps)
}
