//! Travelling graphs `z = -ct + phi(x)` of the forced mean curvature motion
//! `V_n = -c0 + kappa`: Hopf-Cole sub-solutions, plane and arc super-solutions,
//! radially symmetric cone profiles, Laplace asymptotics of sector integrals
//! and a Newton solver for the quasilinear elliptic profile equation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod params;
pub mod quadrature;
pub mod ode;
pub mod field;
pub mod subsolution;
pub mod eikonal;
pub mod cone;
pub mod laplace;
pub mod supersolution;
pub mod sparse;
pub mod grid;
pub mod solver;
pub mod config;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FnField, Jet, ScalarField, SmoothField};
pub use params::{direction, from_polar, normalize_angle, to_polar, Params, PolarPoint};
pub use subsolution::{
    eval_phi_star, grad_phi_star, hess_phi_star, mcm_operator, mcm_operator_at, moments,
    viscous_eikonal_residual, ArcSegment, Atom, MomentBundle, SphereMeasure, SubSolution,
};
pub use eikonal::{
    build_measure_n3, cover_compact, edge_distance, eval_inf_planes, eval_psi, CircleArcs,
    DirectionSet, EdgeSet, FiniteDirections, PlaneEntry, PlaneSpec, ProfileN3, WholeSphere,
};
pub use cone::{c_zero, cone_constant, solve_cone, v0_bracket, ConeConstant, ConeProfile};
pub use laplace::{f_asymptotic, f_direct, f_direct_log, g_inverse, g_map, n_zero, SectorIntegral};
pub use supersolution::{
    assemble_global_n3, eval_arc, eval_edge, eval_planes_inf, sandwich_report, ArcPiece,
    ConeField, EdgePiece, GlobalSuperN3, Piece, SandwichReport, ShiftSample,
};
pub use grid::{GridField, Rect};
pub use solver::{
    concavity_probe, residual_field, solve_dirichlet, verify_sandwich, NewtonOptions,
    SandwichCheck, Solution,
};
pub use config::RunConfig;
