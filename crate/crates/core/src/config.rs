//! Run configuration read from TOML.
//!
//! Every section is optional and every key has a default except where a
//! section only makes sense with data (plane angles, measure atoms). Unknown
//! keys are rejected. Angles are in radians.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI, TAU};
use std::path::Path;

use serde::Deserialize;

use crate::eikonal::{build_measure_n3, PlaneEntry, PlaneSpec, ProfileN3};
use crate::error::{Error, Result};
use crate::params::{direction, Params};
use crate::solver::NewtonOptions;
use crate::subsolution::{ArcSegment, Atom, SphereMeasure};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub planes: Option<PlanesConfig>,
    pub measure: Option<MeasureConfig>,
    pub profile: Option<ProfileConfig>,
    pub cone: ConeConfig,
    pub arc: Option<ArcConfig>,
    pub sample: SampleConfig,
    pub solve: SolveConfig,
    pub verify: VerifyConfig,
    pub laplace: LaplaceConfig,
    pub figures: FiguresConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub c0: f64,
    /// Ambient dimension `N`.
    pub dim: usize,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            alpha: FRAC_PI_4,
            c0: 1.0,
            dim: 3,
        }
    }
}

/// Planes `-cot(a) x.nu_i + gamma_i`. Directions come from exactly one of
/// `angles` (N = 3), `normals` or `equispaced`; offsets from `gammas` or
/// `weights` (`gamma = -(2/(c0 sin a)) ln weight`).
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanesConfig {
    pub angles: Option<Vec<f64>>,
    pub normals: Option<Vec<Vec<f64>>>,
    pub equispaced: Option<usize>,
    pub theta0: f64,
    pub gammas: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    /// Common weight for `equispaced`; defaults to `1/k`.
    pub lambda: Option<f64>,
}

/// A measure on the sphere. `from_planes` and `from_profile` derive it from
/// the other sections; otherwise it is assembled from the listed pieces.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    /// `[[theta, mass], ...]`, N = 3.
    pub atoms: Vec<[f64; 2]>,
    pub atom_vectors: Vec<Vec<f64>>,
    pub atom_masses: Vec<f64>,
    /// `[[lo, hi], ...]` with unit density, or `[[lo, hi, weight], ...]`.
    pub arcs: Vec<Vec<f64>>,
    /// Density of a full-circle arc.
    pub uniform: Option<f64>,
    pub from_planes: bool,
    pub from_profile: bool,
    /// Adds `eps` at `+-e_j`.
    pub regularize: Option<f64>,
}

/// Angular profile for N = 3: `angles` increasing in `[a_0, a_0 + 2 pi)`,
/// `sigma[i]` is 1 when sector `i` is an arc.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub angles: Vec<f64>,
    pub sigma: Vec<u8>,
    pub lambda0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeConfig {
    pub r_max: f64,
    pub tol: f64,
    /// Asymptotic constant of the emitted profile; `C0` when absent.
    pub target_c: Option<f64>,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            r_max: 1000.0,
            tol: 1e-10,
            target_c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcConfig {
    pub theta1: f64,
    pub theta2: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Grid,
    Points,
    Polar,
}

/// Evaluation points. `grid`: `nx * ny` nodes of the rectangle, x fastest.
/// `polar`: `n_angles` equispaced angles on each radius. `points`: as listed.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub kind: SampleKind,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub n_angles: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            kind: SampleKind::Grid,
            x_min: -10.0,
            x_max: 10.0,
            y_min: -10.0,
            y_max: 10.0,
            nx: 101,
            ny: 101,
            points: Vec::new(),
            radii: Vec::new(),
            n_angles: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    Sub,
    Average,
    Super,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub half_width: f64,
    pub h: f64,
    pub initial: InitialGuess,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub initial_shift: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        let d = NewtonOptions::default();
        SolveConfig {
            half_width: 20.0,
            h: 0.1,
            initial: InitialGuess::Sub,
            max_iters: d.max_iters,
            residual_tol: d.residual_tol,
            initial_shift: d.initial_shift,
        }
    }
}

impl SolveConfig {
    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            initial_shift: self.initial_shift,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub n_measures: usize,
    pub n_points: usize,
    pub radius: f64,
    pub alphas: Vec<f64>,
    pub fit_range: [f64; 2],
    pub match_range: [f64; 2],
    pub theta_bar_radii: Vec<f64>,
    pub k: Vec<usize>,
    pub uniqueness: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            n_measures: 100,
            n_points: 100,
            radius: 50.0,
            alphas: vec![FRAC_PI_6, FRAC_PI_4, FRAC_PI_3],
            fit_range: [100.0, 1000.0],
            match_range: [100.0, 400.0],
            theta_bar_radii: vec![50.0, 100.0, 200.0],
            k: vec![2, 3],
            uniqueness: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaplaceConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub radii: Vec<f64>,
    pub n_angles: usize,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        LaplaceConfig {
            theta1: 0.0,
            theta2: FRAC_PI_2,
            lambda1: 1.0,
            lambda2: 1.0,
            radii: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            n_angles: 64,
        }
    }
}

/// Arc surfaces for three sector widths and the `I_r` curves.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiguresConfig {
    /// Sector widths `theta2 - theta1`, centred on angle 0.
    pub widths: Vec<f64>,
    pub lambda: f64,
    pub half_width: f64,
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        FiguresConfig {
            widths: vec![2.0 * PI / 3.0, PI, 4.0 * PI / 3.0],
            lambda: 1.0,
            half_width: 10.0,
            n: 81,
            r_min: 0.05,
            r_max: 50.0,
            n_radii: 200,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(self.params.alpha, self.params.c0, self.params.dim)
    }

    pub fn plane_spec(&self) -> Result<PlaneSpec> {
        let cfg = self
            .planes
            .as_ref()
            .ok_or_else(|| Error::Config("missing [planes] section".into()))?;
        cfg.build(self.params()?)
    }

    pub fn profile(&self) -> Result<ProfileN3> {
        let cfg = self
            .profile
            .as_ref()
            .ok_or_else(|| Error::Config("missing [profile] section".into()))?;
        let sigma = cfg
            .sigma
            .iter()
            .map(|&s| match s {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::Config(format!("sigma entries must be 0 or 1, got {s}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ProfileN3::new(self.params()?, cfg.angles.clone(), sigma)
    }

    /// `lambda0` of the profile section, default 1.
    pub fn lambda0(&self) -> f64 {
        self.profile.as_ref().and_then(|p| p.lambda0).unwrap_or(1.0)
    }

    pub fn measure(&self) -> Result<SphereMeasure> {
        let cfg = self
            .measure
            .as_ref()
            .ok_or_else(|| Error::Config("missing [measure] section".into()))?;
        let params = self.params()?;
        let base = if cfg.from_planes {
            self.plane_spec()?.matched_measure()?
        } else if cfg.from_profile {
            build_measure_n3(&self.profile()?, self.lambda0())?
        } else {
            cfg.assemble(params.dim)?
        };
        match cfg.regularize {
            Some(eps) => base.regularized(eps),
            None => Ok(base),
        }
    }

    pub fn arc(&self) -> Result<&ArcConfig> {
        self.arc
            .as_ref()
            .ok_or_else(|| Error::Config("missing [arc] section".into()))
    }

    /// Sample points of dimension `dim - 1`.
    pub fn sample_points(&self) -> Result<Vec<Vec<f64>>> {
        let s = &self.sample;
        let d = self.params.dim.saturating_sub(1);
        match s.kind {
            SampleKind::Points => {
                if let Some(p) = s.points.iter().find(|p| p.len() != d) {
                    return Err(Error::Config(format!("sample point {p:?} must have {d} coordinates")));
                }
                Ok(s.points.clone())
            }
            SampleKind::Grid | SampleKind::Polar if d != 2 => {
                Err(Error::Config("grid and polar samples need dim = 3".into()))
            }
            SampleKind::Grid => {
                if s.nx < 2 || s.ny < 2 || !(s.x_min < s.x_max) || !(s.y_min < s.y_max) {
                    return Err(Error::Config("grid sample needs nx, ny >= 2 and a proper rectangle".into()));
                }
                Ok(grid_points(s.x_min, s.x_max, s.nx, s.y_min, s.y_max, s.ny))
            }
            SampleKind::Polar => {
                if s.radii.is_empty() || s.n_angles == 0 || s.radii.iter().any(|r| !(*r >= 0.0)) {
                    return Err(Error::Config("polar sample needs nonnegative radii and n_angles >= 1".into()));
                }
                let mut pts = Vec::new();
                for &r in &s.radii {
                    for j in 0..s.n_angles {
                        let u = direction(TAU * j as f64 / s.n_angles as f64);
                        pts.push(vec![r * u[0], r * u[1]]);
                    }
                }
                Ok(pts)
            }
        }
    }
}

/// `nx * ny` points of a rectangle, x fastest.
pub fn grid_points(x_min: f64, x_max: f64, nx: usize, y_min: f64, y_max: f64, ny: usize) -> Vec<Vec<f64>> {
    let at = |lo: f64, hi: f64, n: usize, i: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            pts.push(vec![at(x_min, x_max, nx, i), at(y_min, y_max, ny, j)]);
        }
    }
    pts
}

impl PlanesConfig {
    pub fn build(&self, params: Params) -> Result<PlaneSpec> {
        let sources = [self.angles.is_some(), self.normals.is_some(), self.equispaced.is_some()];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::Config(
                "[planes] needs exactly one of angles, normals, equispaced".into(),
            ));
        }
        if let Some(k) = self.equispaced {
            if self.gammas.is_some() || self.weights.is_some() {
                return Err(Error::Config("equispaced planes take lambda, not gammas or weights".into()));
            }
            if k == 0 {
                return Err(Error::Config("equispaced needs k >= 1".into()));
            }
            let lambda = self.lambda.unwrap_or(1.0 / k as f64);
            return PlaneSpec::equispaced(params, k, self.theta0, lambda);
        }
        let normals: Vec<Vec<f64>> = match (&self.angles, &self.normals) {
            (Some(a), _) => {
                if params.dim != 3 {
                    return Err(Error::Config("plane angles need dim = 3; use normals".into()));
                }
                a.iter().map(|&t| direction(t).to_vec()).collect()
            }
            (_, Some(n)) => n.clone(),
            _ => unreachable!(),
        };
        let offsets = match (&self.gammas, &self.weights) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("[planes] takes gammas or weights, not both".into()));
            }
            (g, w) => g.as_ref().or(w.as_ref()),
        };
        if let Some(o) = offsets.filter(|o| o.len() != normals.len()) {
            return Err(Error::Config(format!(
                "{} plane directions but {} offsets",
                normals.len(),
                o.len()
            )));
        }
        if let Some(w) = &self.weights {
            let entries: Vec<(Vec<f64>, f64)> = normals.into_iter().zip(w.iter().copied()).collect();
            return PlaneSpec::from_weights(params, &entries);
        }
        let gammas = self.gammas.clone().unwrap_or_else(|| vec![0.0; normals.len()]);
        let entries = normals
            .into_iter()
            .zip(gammas)
            .map(|(nu, gamma)| PlaneEntry { nu, gamma })
            .collect();
        PlaneSpec::new(params, entries)
    }
}

impl MeasureConfig {
    fn assemble(&self, dim: usize) -> Result<SphereMeasure> {
        let mut atoms = Vec::new();
        if !self.atoms.is_empty() && dim != 3 {
            return Err(Error::Config("angle atoms need dim = 3; use atom_vectors".into()));
        }
        for &[theta, mass] in &self.atoms {
            atoms.push(Atom {
                nu: direction(theta).to_vec(),
                mass,
            });
        }
        if self.atom_vectors.len() != self.atom_masses.len() {
            return Err(Error::Config(format!(
                "{} atom_vectors but {} atom_masses",
                self.atom_vectors.len(),
                self.atom_masses.len()
            )));
        }
        for (nu, &mass) in self.atom_vectors.iter().zip(&self.atom_masses) {
            atoms.push(Atom { nu: nu.clone(), mass });
        }
        let mut arcs = Vec::new();
        for a in &self.arcs {
            let weight = match a.len() {
                2 => 1.0,
                3 => a[2],
                _ => return Err(Error::Config(format!("arc {a:?} must be [lo, hi] or [lo, hi, weight]"))),
            };
            arcs.push(ArcSegment {
                lo: a[0],
                hi: a[1],
                weight,
            });
        }
        if let Some(w) = self.uniform {
            arcs.push(ArcSegment {
                lo: 0.0,
                hi: TAU,
                weight: w,
            });
        }
        SphereMeasure::new(dim, atoms, arcs)
    }
}
