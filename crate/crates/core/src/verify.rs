//! Numerical checks of sub-solutions, cone profiles, sector asymptotics and
//! grid solutions, grouped into suites that report measured margins.

use std::f64::consts::{FRAC_1_PI, TAU};
use std::fmt;
use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{c_zero, solve_cone, ConeProfile};
use crate::config::RunConfig;
use crate::eikonal::PlaneSpec;
use crate::error::{Error, Result};
use crate::field::{FnField, ScalarField, SmoothField};
use crate::grid::Rect;
use crate::laplace::{asymptotics_at, sector_angles, SectorIntegral};
use crate::params::{direction, Params};
use crate::solver::{solve_dirichlet, verify_sandwich, NewtonOptions, SandwichCheck};
use crate::subsolution::{mcm_operator, viscous_eikonal_residual_of, ArcSegment, Atom, SphereMeasure, SubSolution};

/// One measured quantity compared against a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            relation: "<=",
            bound,
            pass: measured <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            relation: ">=",
            bound,
            pass: measured >= bound,
        }
    }

    /// `|measured - target| <= tol`.
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            relation: "~",
            bound: target,
            pass: (measured - target).abs() <= tol,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.relation,
            self.bound
        )
    }
}

/// Checks of one suite plus free-form table lines.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for n in &self.notes {
            writeln!(w, "# {n}")?;
        }
        for c in &self.checks {
            writeln!(w, "{c}")?;
        }
        Ok(())
    }
}

/// Between 1 and 8 atoms and up to 2 arcs on the circle, masses spread over
/// three decades.
pub fn random_measure<R: Rng>(rng: &mut R) -> Result<SphereMeasure> {
    let n_atoms = rng.random_range(1..=8);
    let n_arcs = rng.random_range(0..=2);
    let atoms = (0..n_atoms)
        .map(|_| Atom {
            nu: direction(rng.random_range(0.0..TAU)).to_vec(),
            mass: 10f64.powf(rng.random_range(-2.0..1.0)),
        })
        .collect();
    let arcs = (0..n_arcs)
        .map(|_| {
            let lo = rng.random_range(0.0..TAU);
            ArcSegment {
                lo,
                hi: lo + rng.random_range(0.05..TAU),
                weight: 10f64.powf(rng.random_range(-2.0..1.0)),
            }
        })
        .collect();
    SphereMeasure::new(3, atoms, arcs)
}

/// Uniform point in the disc of the given radius.
pub fn random_point<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let u = direction(rng.random_range(0.0..TAU));
    [r * u[0], r * u[1]]
}

/// Worst values of the sub-solution inequalities over a random sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsolutionMetrics {
    /// `max |D phi_*| - cot a`.
    pub gradient_excess: f64,
    pub max_eigenvalue: f64,
    pub max_eikonal_residual: f64,
    pub max_operator: f64,
    pub samples: usize,
}

pub fn subsolution_metrics(
    params: &Params,
    seed: u64,
    n_measures: usize,
    n_points: usize,
    radius: f64,
) -> Result<SubsolutionMetrics> {
    if params.dim != 3 {
        return Err(Error::Domain("random measures live on the circle (N = 3)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = SubsolutionMetrics {
        gradient_excess: f64::NEG_INFINITY,
        max_eigenvalue: f64::NEG_INFINITY,
        max_eikonal_residual: 0.0,
        max_operator: f64::NEG_INFINITY,
        samples: 0,
    };
    for _ in 0..n_measures {
        let sub = SubSolution::new(random_measure(&mut rng)?, *params)?;
        for _ in 0..n_points {
            let x = random_point(&mut rng, radius);
            let jet = sub.jet(&x)?;
            let h = &jet.hessian;
            let top = 0.5 * (h[(0, 0)] + h[(1, 1)]) + (0.5 * (h[(0, 0)] - h[(1, 1)])).hypot(h[(0, 1)]);
            m.gradient_excess = m.gradient_excess.max(jet.gradient.norm() - params.cot_alpha);
            m.max_eigenvalue = m.max_eigenvalue.max(top);
            m.max_eikonal_residual = m.max_eikonal_residual.max(viscous_eikonal_residual_of(&jet, params).abs());
            m.max_operator = m.max_operator.max(mcm_operator(&jet, params));
            m.samples += 1;
        }
    }
    Ok(m)
}

/// Coefficients of `ln r` and `1/r` in `phi_c + cot(a) r` fitted by least
/// squares against `{ln r, 1, 1/r, 1/r^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeFit {
    pub ln_coef: f64,
    pub ln_expected: f64,
    pub inv_coef: f64,
    pub inv_expected: f64,
}

pub fn cone_fit(profile: &ConeProfile, r_lo: f64, r_hi: f64) -> Result<ConeFit> {
    let p = profile.params();
    if !(r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::Domain(format!("fit range [{r_lo}, {r_hi}] is empty")));
    }
    let n = 400;
    let radii = log_spaced(r_lo, r_hi, n);
    // columns scaled to unit size on the range
    let scale = [r_hi.ln(), 1.0, 1.0 / r_lo, 1.0 / (r_lo * r_lo)];
    let mut a = DMatrix::zeros(n, 4);
    let mut y = DVector::zeros(n);
    for (i, &r) in radii.iter().enumerate() {
        let basis = [r.ln(), 1.0, 1.0 / r, 1.0 / (r * r)];
        for j in 0..4 {
            a[(i, j)] = basis[j] / scale[j];
        }
        y[i] = profile.phi_raw(r)? + p.cot_alpha * r;
    }
    let coef = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    Ok(ConeFit {
        ln_coef: coef[0] / scale[0],
        ln_expected: 1.0 / (p.c0 * p.sin_alpha),
        inv_coef: coef[2] / scale[2],
        inv_expected: (2.0 - 3.0 * p.sin_alpha * p.sin_alpha) / (p.c0 * p.c0 * (2.0 * p.alpha).sin()),
    })
}

/// Comparison of the cone (asymptotic constant `C0`) with the sub-solution of
/// the uniform probability measure on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeMatching {
    /// Log-log slope of `|phi_c - phi_*|` against `r`.
    pub slope: f64,
    /// `min (phi_c - phi_*)` over `r` in `[0, r_hi]`.
    pub min_gap: f64,
    /// `max |phi_c - phi_*| sqrt(r)` over the first and second halves of the
    /// fit range (log scale).
    pub scaled_lo: f64,
    pub scaled_hi: f64,
}

pub fn cone_matching(profile: &ConeProfile, r_lo: f64, r_hi: f64) -> Result<ConeMatching> {
    let p = *profile.params();
    let c0 = c_zero(&p)?;
    let sub = SubSolution::new(SphereMeasure::uniform_circle(0.5 * FRAC_1_PI)?, p)?;
    let gap = |r: f64| -> Result<f64> { Ok(profile.eval_phi_c(r, c0)? - sub.value(&[r, 0.0])?) };
    let mut min_gap = f64::INFINITY;
    let steps = (4.0 * r_hi).ceil() as usize;
    for i in 0..=steps {
        min_gap = min_gap.min(gap(r_hi * i as f64 / steps as f64)?);
    }
    let n = 60;
    let radii = log_spaced(r_lo, r_hi, n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mid = (r_lo * r_hi).sqrt();
    let (mut scaled_lo, mut scaled_hi) = (0.0f64, 0.0f64);
    for &r in &radii {
        let g = gap(r)?.abs();
        xs.push(r.ln());
        ys.push(g.ln());
        let s = g * r.sqrt();
        if r <= mid {
            scaled_lo = scaled_lo.max(s);
        } else {
            scaled_hi = scaled_hi.max(s);
        }
    }
    Ok(ConeMatching {
        slope: regression_slope(&xs, &ys),
        min_gap,
        scaled_lo,
        scaled_hi,
    })
}

/// `K(r) = r^2 |cos theta_bar(r) - (1 - ln r/(c0 cos a r) + (phi_c(0) - C)/(r cot a))|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBarFit {
    pub radii: Vec<f64>,
    pub k: Vec<f64>,
    /// `max |K - mean K| / mean K`.
    pub spread: f64,
}

pub fn theta_bar_constants(profile: &ConeProfile, radii: &[f64]) -> Result<ThetaBarFit> {
    let p = profile.params();
    if radii.is_empty() {
        return Err(Error::Domain("no radii given".into()));
    }
    // baseline phi_c(0) = 0, so phi_c(0) - C = -C_raw
    let c = profile.c_raw();
    let mut k = Vec::with_capacity(radii.len());
    for &r in radii {
        let approx = 1.0 - r.ln() / (p.c0 * p.cos_alpha * r) - c / (r * p.cot_alpha);
        k.push(r * r * (profile.theta_bar(r)?.cos() - approx).abs());
    }
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    let spread = k.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max);
    Ok(ThetaBarFit {
        radii: radii.to_vec(),
        k,
        spread,
    })
}

/// Empirical remainders `r |F - leading| e^{-br/2}` maximised over angles.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceTable {
    pub radii: Vec<f64>,
    pub max_remainder: Vec<f64>,
    /// Largest ratio between consecutive maxima.
    pub worst_growth: f64,
    /// Log-log slope of `max |F - leading| e^{-br/2}` against `r`.
    pub slope: f64,
}

pub fn laplace_remainders(si: &SectorIntegral, radii: &[f64], n_angles: usize) -> Result<LaplaceTable> {
    if radii.len() < 2 {
        return Err(Error::Domain("need at least two radii".into()));
    }
    let mut max_remainder = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut m = 0.0f64;
        for t in sector_angles(si, n_angles) {
            m = m.max(asymptotics_at(si, r, t)?.remainder);
        }
        max_remainder.push(m);
    }
    let worst_growth = max_remainder
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = radii.iter().zip(&max_remainder).map(|(r, m)| (m / r).ln()).collect();
    Ok(LaplaceTable {
        radii: radii.to_vec(),
        max_remainder,
        worst_growth,
        slope: regression_slope(&xs, &ys),
    })
}

/// Solve with `k` equispaced planes of weight `1/k` and compare the field with
/// both bounds.
#[derive(Debug, Clone)]
pub struct SandwichRun {
    pub k: usize,
    pub iterations: usize,
    pub residual: f64,
    pub check: SandwichCheck,
    /// `-2 ln k / (c0 sin a)`.
    pub gap_bound: f64,
    /// Max difference with the solve started from `(phi_* + phi^*)/2`.
    pub uniqueness_diff: Option<f64>,
    pub seconds: f64,
}

pub fn sandwich_run(
    params: &Params,
    k: usize,
    half_width: f64,
    h: f64,
    opts: &NewtonOptions,
    uniqueness: bool,
) -> Result<SandwichRun> {
    let start = Instant::now();
    let spec = PlaneSpec::equispaced(*params, k, 0.0, 1.0 / k as f64)?;
    let mu = spec.matched_measure()?;
    let sub = SubSolution::new(mu.clone(), *params)?;
    let domain = Rect::square(half_width)?;
    let sol = solve_dirichlet(domain, h, &spec, &sub, params, opts)?;
    let check = verify_sandwich(&sol.field, &mu, &spec, f64::INFINITY)?;
    let uniqueness_diff = if uniqueness {
        let avg = FnField(|x: &[f64]| 0.5 * (sub.value(x).unwrap_or(f64::NAN) + spec.value(x).unwrap_or(f64::NAN)));
        let other = solve_dirichlet(domain, h, &spec, &avg, params, opts)?;
        Some(sol.field.max_diff(&other.field)?)
    } else {
        None
    };
    Ok(SandwichRun {
        k,
        iterations: sol.iterations(),
        residual: sol.residual_max,
        check,
        gap_bound: -2.0 * (k as f64).ln() / (params.c0 * params.sin_alpha),
        uniqueness_diff,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Whether `values` never increases by more than `slack`.
pub fn nonincreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn suite_subsolution(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.params()?;
    let v = &cfg.verify;
    let m = subsolution_metrics(&p, v.seed, v.n_measures, v.n_points, v.radius)?;
    let mut r = Report::default();
    r.notes.push(format!(
        "{} measures x {} points, |x| <= {}, seed {}",
        v.n_measures, v.n_points, v.radius, v.seed
    ));
    r.checks.push(Check::at_most("gradient |D phi_*| - cot a", m.gradient_excess, 1e-12));
    r.checks.push(Check::at_most("concavity max eigenvalue", m.max_eigenvalue, 1e-12));
    r.checks.push(Check::at_most("viscous eikonal residual", m.max_eikonal_residual, 1e-8));
    r.checks.push(Check::at_most("operator sign", m.max_operator, 1e-10));
    Ok(r)
}

pub fn suite_cone(cfg: &RunConfig) -> Result<Report> {
    let v = &cfg.verify;
    let base = cfg.params()?;
    let r_max = cfg.cone.r_max.max(v.fit_range[1]).max(v.match_range[1]);
    let mut r = Report::default();
    for &alpha in &v.alphas {
        let p = Params::new(alpha, base.c0, base.dim)?;
        let prof = solve_cone(&p, r_max, cfg.cone.tol)?;
        let fit = cone_fit(&prof, v.fit_range[0], v.fit_range[1])?;
        r.checks.push(Check::within(
            format!("ln r coefficient, alpha {alpha:.6}"),
            fit.ln_coef,
            fit.ln_expected,
            0.01 * fit.ln_expected.abs(),
        ));
        r.checks.push(Check::within(
            format!("1/r coefficient, alpha {alpha:.6}"),
            fit.inv_coef,
            fit.inv_expected,
            0.05 * fit.inv_expected.abs(),
        ));
    }
    let prof = solve_cone(&base, r_max, cfg.cone.tol)?;
    let m = cone_matching(&prof, v.match_range[0], v.match_range[1])?;
    r.checks.push(Check::within("log-log slope of |phi_c - phi_*|", m.slope, -0.5, 0.1));
    r.checks.push(Check::at_least("min (phi_c - phi_*)", m.min_gap, 0.0));
    r.notes.push(format!(
        "max |phi_c - phi_*| sqrt(r): {:.6e} on the lower half, {:.6e} on the upper half",
        m.scaled_lo, m.scaled_hi
    ));
    r.checks.push(Check::at_most("sqrt(r)-scaled gap, upper half", m.scaled_hi, m.scaled_lo));
    let tb = theta_bar_constants(&prof, &v.theta_bar_radii)?;
    for (rr, k) in tb.radii.iter().zip(&tb.k) {
        r.notes.push(format!("theta_bar r = {rr}: K = {k:.6e}"));
    }
    r.checks.push(Check::at_most("theta_bar K relative spread", tb.spread, 0.2));
    Ok(r)
}

pub fn suite_laplace(cfg: &RunConfig) -> Result<Report> {
    let l = &cfg.laplace;
    let si = SectorIntegral::new(cfg.params()?, l.theta1, l.theta2, l.lambda1, l.lambda2)?;
    let t = laplace_remainders(&si, &l.radii, l.n_angles)?;
    let mut r = Report::default();
    r.notes.push("r, max |R| over angles".into());
    for (rr, m) in t.radii.iter().zip(&t.max_remainder) {
        r.notes.push(format!("{rr}, {m:.6e}"));
    }
    r.checks.push(Check::at_most("growth of max |R| between radii", t.worst_growth, 1.5));
    r.checks.push(Check::at_most("log-log slope of |F - leading| e^(-br/2)", t.slope, -0.9));
    Ok(r)
}

pub fn suite_sandwich(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.params()?;
    let s = &cfg.solve;
    let opts = s.newton_options();
    let tol = 10.0 * s.h * s.h;
    let mut r = Report::default();
    for &k in &cfg.verify.k {
        let run = sandwich_run(&p, k, s.half_width, s.h, &opts, cfg.verify.uniqueness)?;
        let c = &run.check;
        r.notes.push(format!(
            "k = {k}: {} iterations, residual {:.3e}, {:.1} s",
            run.iterations, run.residual, run.seconds
        ));
        r.notes.push(format!(
            "k = {k}: min (phi_h - phi^*) = {:.6} vs gap bound -2 ln k/(c0 sin a) = {:.6}",
            c.min_below_super, run.gap_bound
        ));
        r.checks.push(Check::at_most(format!("k = {k} residual"), run.residual, opts.residual_tol));
        r.checks.push(Check::at_least(format!("k = {k} phi_h - phi_*"), c.lower_margin, -tol));
        r.checks.push(Check::at_least(format!("k = {k} phi^* - phi_h"), c.upper_margin, -tol));
        r.checks.push(Check::at_least(
            format!("k = {k} min (phi_h - phi^*)"),
            c.min_below_super,
            run.gap_bound - tol,
        ));
        let levels: Vec<f64> = c
            .decay
            .iter()
            .filter(|(l, _)| [2.0, 5.0, 10.0, 15.0].contains(l))
            .map(|(_, g)| *g)
            .collect();
        r.notes.push(format!("k = {k}: max gap at edge distance >= 2, 5, 10, 15: {levels:?}"));
        let worst_rise = levels.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        r.checks.push(Check::at_most(format!("k = {k} decay rise"), worst_rise, 0.0));
        if let Some(d) = run.uniqueness_diff {
            r.checks.push(Check::at_most(format!("k = {k} uniqueness probe"), d, 1e-9));
        }
    }
    Ok(r)
}
