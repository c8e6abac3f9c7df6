//! Damped Newton solver for the profile equation
//! `F(Dphi, D^2 phi) = -tr M / q + M(p, p) / q^3 + c0 - c / q = 0`, `q = sqrt(1 + |p|^2)`,
//! discretised by central differences on a uniform grid with Dirichlet data.

use crate::eikonal::{EdgeSet, PlaneSpec};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridField, Rect};
use crate::params::Params;
use crate::sparse::{self, CsrBuilder, CsrMatrix, KrylovOptions};
use crate::subsolution::{SphereMeasure, SubSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Target for the max-norm of the discrete residual.
    pub residual_tol: f64,
    /// First trial step length.
    pub initial_step: f64,
    /// Step reduction per rejected trial.
    pub backtrack: f64,
    /// Trials before a step is taken regardless.
    pub max_backtracks: usize,
    /// One extra full step after convergence with a tight linear solve.
    pub polish: bool,
    /// Initial diagonal shift `sigma` of the pseudo-transient iteration
    /// `(J + sigma I) delta = -G`; zero gives plain damped Newton.
    pub initial_shift: f64,
    pub max_linear_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 50,
            residual_tol: 1e-10,
            initial_step: 1.0,
            backtrack: 0.5,
            max_backtracks: 20,
            polish: true,
            initial_shift: 10.0,
            max_linear_iters: 5000,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol >= 1e-12) {
            return Err(Error::Domain(format!(
                "residual_tol = {} below 1e-12",
                self.residual_tol
            )));
        }
        for (name, v) in [("initial_step", self.initial_step), ("backtrack", self.backtrack)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Domain(format!("{name} = {v} outside (0, 1]")));
            }
        }
        if !(self.initial_shift >= 0.0) || !self.initial_shift.is_finite() {
            return Err(Error::Domain(format!("initial_shift = {} must be >= 0", self.initial_shift)));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Growth of the residual norm beyond which a pseudo-time step is rejected.
const BLOWUP: f64 = 2.0;

/// One Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub residual_max: f64,
    pub residual_l2: f64,
    pub step: f64,
    pub linear_iters: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: GridField,
    /// Residual before the first step, then after each step.
    pub history: Vec<IterationRecord>,
    pub residual_max: f64,
}

impl Solution {
    /// Newton steps taken, the polishing step included.
    pub fn iterations(&self) -> usize {
        self.history.len().saturating_sub(1)
    }
}

/// First and second central differences at an interior node.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    p: [f64; 2],
    m11: f64,
    m22: f64,
    m12: f64,
}

fn stencil(g: &GridField, i: usize, j: usize) -> Stencil {
    let h = g.h();
    let u = |di: isize, dj: isize| g.get((i as isize + di) as usize, (j as isize + dj) as usize);
    let c = u(0, 0);
    Stencil {
        p: [(u(1, 0) - u(-1, 0)) / (2.0 * h), (u(0, 1) - u(0, -1)) / (2.0 * h)],
        m11: (u(1, 0) - 2.0 * c + u(-1, 0)) / (h * h),
        m22: (u(0, 1) - 2.0 * c + u(0, -1)) / (h * h),
        m12: (u(1, 1) - u(-1, 1) - u(1, -1) + u(-1, -1)) / (4.0 * h * h),
    }
}

fn operator(s: &Stencil, params: &Params) -> f64 {
    let [p1, p2] = s.p;
    let q2 = 1.0 + p1 * p1 + p2 * p2;
    let inv = 1.0 / q2.sqrt();
    let inv3 = inv / q2;
    let quad = p1 * p1 * s.m11 + 2.0 * p1 * p2 * s.m12 + p2 * p2 * s.m22;
    -(s.m11 + s.m22) * inv + quad * inv3 + params.c0 - params.c * inv
}

/// `sqrt(1 + |p|^2) F`: same zeros as the operator, with coefficients that stay
/// bounded away from zero for steep data. Newton runs on this form.
fn scaled_operator(s: &Stencil, params: &Params) -> f64 {
    let [p1, p2] = s.p;
    let q2 = 1.0 + p1 * p1 + p2 * p2;
    let quad = p1 * p1 * s.m11 + 2.0 * p1 * p2 * s.m12 + p2 * p2 * s.m22;
    -(s.m11 + s.m22) + quad / q2 + params.c0 * q2.sqrt() - params.c
}

/// Partial derivatives of [`scaled_operator`] in `(p1, p2, M11, M22, M12)`.
fn scaled_gradient(s: &Stencil, params: &Params) -> [f64; 5] {
    let [p1, p2] = s.p;
    let q2 = 1.0 + p1 * p1 + p2 * p2;
    let q = q2.sqrt();
    let mp = [s.m11 * p1 + s.m12 * p2, s.m12 * p1 + s.m22 * p2];
    let quad = p1 * mp[0] + p2 * mp[1];
    let dp = |pa: f64, mpa: f64| 2.0 * mpa / q2 - 2.0 * pa * quad / (q2 * q2) + params.c0 * pa / q;
    [
        dp(p1, mp[0]),
        dp(p2, mp[1]),
        -1.0 + p1 * p1 / q2,
        -1.0 + p2 * p2 / q2,
        2.0 * p1 * p2 / q2,
    ]
}

/// Discrete residual at every interior node; boundary entries are zero.
pub fn residual_field(field: &GridField, params: &Params) -> Result<GridField> {
    if field.nx() < 5 || field.ny() < 5 {
        return Err(Error::Domain("residual needs at least 3 x 3 interior nodes".into()));
    }
    let mut out = field.clone();
    out.values_mut().iter_mut().for_each(|v| *v = 0.0);
    for (i, j) in field.interior() {
        out.set(i, j, operator(&stencil(field, i, j), params));
    }
    Ok(out)
}

fn interior_residual(field: &GridField, params: &Params) -> Vec<f64> {
    field
        .interior()
        .map(|(i, j)| operator(&stencil(field, i, j), params))
        .collect()
}

fn interior_scaled(field: &GridField, params: &Params) -> Vec<f64> {
    field
        .interior()
        .map(|(i, j)| scaled_operator(&stencil(field, i, j), params))
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact Jacobian of the scaled discrete residual with respect to interior values.
fn jacobian(field: &GridField, params: &Params, shift: f64) -> Result<CsrMatrix> {
    let (nx, ny) = (field.nx(), field.ny());
    let (mx, my) = (nx - 2, ny - 2);
    let h = field.h();
    let (ih, ih2) = (1.0 / (2.0 * h), 1.0 / (h * h));
    let mut b = CsrBuilder::new(mx * my, 9 * mx * my);
    for (i, j) in field.interior() {
        let d = scaled_gradient(&stencil(field, i, j), params);
        let (dp1, dp2, d11, d22, d12) = (d[0], d[1], d[2], d[3], d[4]);
        let cross = d12 * 0.25 * ih2;
        // neighbours in increasing unknown index: rows j-1, j, j+1
        let entries: [(isize, isize, f64); 9] = [
            (-1, -1, cross),
            (0, -1, d22 * ih2 - dp2 * ih),
            (1, -1, -cross),
            (-1, 0, d11 * ih2 - dp1 * ih),
            (0, 0, -2.0 * (d11 + d22) * ih2 + shift),
            (1, 0, d11 * ih2 + dp1 * ih),
            (-1, 1, -cross),
            (0, 1, d22 * ih2 + dp2 * ih),
            (1, 1, cross),
        ];
        for (di, dj, v) in entries {
            let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
            if field.is_boundary(ii, jj) {
                continue;
            }
            b.push((jj - 1) * mx + (ii - 1), v);
        }
        b.end_row();
    }
    b.build()
}

fn add_step(field: &GridField, delta: &[f64], t: f64) -> GridField {
    let mut out = field.clone();
    let mx = field.nx() - 2;
    for (k, (i, j)) in field.interior().enumerate() {
        debug_assert_eq!(k, (j - 1) * mx + (i - 1));
        out.set(i, j, field.get(i, j) + t * delta[k]);
    }
    out
}

/// Solve on `domain` with spacing `h`, rim values from `boundary` and interior
/// start from `initial`.
pub fn solve_dirichlet<B, I>(
    domain: Rect,
    h: f64,
    boundary: &B,
    initial: &I,
    params: &Params,
    opts: &NewtonOptions,
) -> Result<Solution>
where
    B: ScalarField + ?Sized,
    I: ScalarField + ?Sized,
{
    opts.validate()?;
    if params.dim != 3 {
        return Err(Error::Domain("the grid solver handles N = 3 only".into()));
    }
    let mut field = GridField::from_field(domain, h, initial)?;
    for j in 0..field.ny() {
        for i in 0..field.nx() {
            if field.is_boundary(i, j) {
                let v = boundary.value(&field.point(i, j))?;
                field.set(i, j, v);
            }
        }
    }
    solve_field(field, params, opts)
}

/// Newton iteration starting from a prepared field whose rim holds the data.
pub fn solve_field(mut field: GridField, params: &Params, opts: &NewtonOptions) -> Result<Solution> {
    opts.validate()?;
    if field.nx() < 5 || field.ny() < 5 {
        return Err(Error::Domain("solver needs at least 3 x 3 interior nodes".into()));
    }
    let mut res = interior_scaled(&field, params);
    let mut merit = l2_norm(&res);
    let plain = interior_residual(&field, params);
    let mut rmax = max_norm(&plain);
    let mut history = vec![IterationRecord {
        residual_max: rmax,
        residual_l2: l2_norm(&plain),
        step: 0.0,
        linear_iters: 0,
    }];
    let mut polishing = false;
    let mut iters = 0;
    let mut shift = opts.initial_shift;
    loop {
        if rmax <= opts.residual_tol && (polishing || !opts.polish) {
            break;
        }
        if rmax <= opts.residual_tol {
            polishing = true;
        }
        if iters >= opts.max_iters {
            return Err(Error::NonConvergence {
                iters,
                residual: rmax,
            });
        }
        iters += 1;
        let jac = jacobian(&field, params, if polishing { 0.0 } else { shift })?;
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let lin_tol = if polishing {
            1e-14 * (rhs.len() as f64).sqrt()
        } else {
            (0.05 * opts.residual_tol).max(1e-6 * merit)
        };
        let mut delta = vec![0.0; rhs.len()];
        let stats = sparse::solve(
            &jac,
            &rhs,
            &mut delta,
            &KrylovOptions {
                abs_tol: lin_tol,
                max_iters: opts.max_linear_iters,
                restart: 60,
            },
        );
        let stats = match stats {
            Ok(s) => s,
            // the tight polishing solve may stall at roundoff; keep the converged field
            Err(_) if polishing => break,
            Err(e) => return Err(e),
        };

        let transient = shift > 0.0 && !polishing;
        let mut t = opts.initial_step;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = add_step(&field, &delta, t);
            let tres = interior_scaled(&trial, params);
            let tm = l2_norm(&tres);
            // pseudo-time steps are taken whole unless the residual more than doubles
            let ok = if transient { tm < BLOWUP * merit } else { tm < merit };
            if tm.is_finite() && ok {
                accepted = Some((trial, tres, tm));
                break;
            }
            if transient {
                break;
            }
            t *= opts.backtrack;
        }
        let Some((trial, tres, tm)) = accepted else {
            if polishing {
                break;
            }
            shift = (4.0 * shift).max(opts.initial_shift).max(1e-3);
            continue;
        };
        if transient {
            // switched evolution relaxation: the shift follows the residual
            let ratio = tm / merit;
            shift *= if ratio < 1.0 { ratio.min(0.5) } else { ratio };
            if shift < 1e-10 {
                shift = 0.0;
            }
        }
        let plain = interior_residual(&trial, params);
        let trial_max = max_norm(&plain);
        if polishing && trial_max > rmax {
            break;
        }
        field = trial;
        res = tres;
        merit = tm;
        rmax = trial_max;
        history.push(IterationRecord {
            residual_max: rmax,
            residual_l2: l2_norm(&plain),
            step: t,
            linear_iters: stats.iterations,
        });
        if polishing {
            break;
        }
    }
    Ok(Solution {
        field,
        history,
        residual_max: rmax,
    })
}

/// Largest eigenvalue of the discrete Hessian over interior nodes.
pub fn concavity_probe(field: &GridField) -> Result<f64> {
    if field.nx() < 7 || field.ny() < 7 {
        return Err(Error::Domain("concavity probe needs at least 5 x 5 interior nodes".into()));
    }
    let mut top = f64::NEG_INFINITY;
    for (i, j) in field.interior() {
        let s = stencil(field, i, j);
        let mean = 0.5 * (s.m11 + s.m22);
        let half = 0.5 * (s.m11 - s.m22);
        top = top.max(mean + half.hypot(s.m12));
    }
    Ok(top)
}

/// Largest central-difference gradient norm over interior nodes at least
/// `margin` away from the rim. Kinked boundary data leaves a one-cell layer
/// with steeper slopes next to the rim.
pub fn max_gradient(field: &GridField, margin: f64) -> f64 {
    field
        .interior()
        .filter(|&(i, j)| field.rim_distance(i, j) >= margin - 1e-9 * field.h())
        .map(|(i, j)| {
            let p = stencil(field, i, j).p;
            p[0].hypot(p[1])
        })
        .fold(0.0, f64::max)
}

/// Max-norm residual of `f` sampled at the nodes.
pub fn sampled_residual_max<F: ScalarField + ?Sized>(domain: Rect, h: f64, f: &F, params: &Params) -> Result<f64> {
    let g = GridField::from_field(domain, h, f)?;
    Ok(max_norm(&interior_residual(&g, params)))
}

/// Outcome of checking `phi_* - tol <= phi_h <= phi^* + tol` on interior nodes.
#[derive(Debug, Clone)]
pub struct SandwichCheck {
    /// `min (phi_h - phi_*)`.
    pub lower_margin: f64,
    /// `min (phi^* - phi_h)`.
    pub upper_margin: f64,
    /// `min (phi_h - phi^*)`, to compare with `-2 ln k / (c0 sin a)`.
    pub min_below_super: f64,
    /// `(l, max |phi_h - phi^*|` over nodes with `dist(x, E_inf) >= l)`.
    pub decay: Vec<(f64, f64)>,
    /// Largest gap at edge distance at most 1.
    pub near_edge_gap: f64,
    /// `(band start, max |phi_h - phi_*|)` per unit band of distance to the rim.
    pub rim_profile: Vec<(f64, f64)>,
}

/// Edge distances at which the decay table is reported.
pub const DECAY_LEVELS: [f64; 6] = [0.0, 1.0, 2.0, 5.0, 10.0, 15.0];

pub fn verify_sandwich(field: &GridField, mu: &SphereMeasure, spec: &PlaneSpec, tol: f64) -> Result<SandwichCheck> {
    let params = *spec.params();
    let sub = SubSolution::new(mu.clone(), params)?;
    let edges = EdgeSet::from_spec(spec).ok();
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut min_below_super = f64::INFINITY;
    let mut decay: Vec<(f64, f64)> = DECAY_LEVELS.iter().map(|&l| (l, 0.0)).collect();
    let mut near_edge_gap = 0.0f64;
    let bands = (field.nx().min(field.ny()) / 2) as f64 * field.h();
    let mut rim_profile: Vec<(f64, f64)> = (0..bands.ceil() as usize).map(|b| (b as f64, 0.0)).collect();
    for (i, j) in field.interior() {
        let x = field.point(i, j);
        let v = field.get(i, j);
        let low = sub.value(&x)?;
        let high = spec.value(&x)?;
        if v < low - tol || v > high + tol {
            return Err(Error::SandwichViolation {
                x: x[0],
                y: x[1],
                value: v,
                lower: low,
                upper: high,
            });
        }
        lower_margin = lower_margin.min(v - low);
        upper_margin = upper_margin.min(high - v);
        min_below_super = min_below_super.min(v - high);
        let gap = (v - high).abs();
        if let Some(e) = &edges {
            let d = e.distance(&x);
            for (l, m) in decay.iter_mut() {
                if d >= *l {
                    *m = m.max(gap);
                }
            }
            if d <= 1.0 {
                near_edge_gap = near_edge_gap.max(gap);
            }
        }
        let band = field.rim_distance(i, j).floor() as usize;
        if let Some(slot) = rim_profile.get_mut(band) {
            slot.1 = slot.1.max((v - low).abs());
        }
    }
    if edges.is_none() {
        decay.clear();
    }
    Ok(SandwichCheck {
        lower_margin,
        upper_margin,
        min_below_super,
        decay,
        near_edge_gap,
        rim_profile,
    })
}
