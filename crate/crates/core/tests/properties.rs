use std::f64::consts::{FRAC_PI_2, PI, TAU};

use mcflow_core::laplace::{g_map, n_zero};
use mcflow_core::{
    direction, eval_inf_planes, grad_phi_star, hess_phi_star, solve_cone, v0_bracket, ArcSegment, Atom, Params,
    PlaneSpec, ScalarField, SphereMeasure, SubSolution,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = Params> {
    (0.2f64..1.5, 0.3f64..3.0).prop_map(|(a, c0)| Params::new(a, c0, 3).unwrap())
}

fn point(r: f64) -> impl Strategy<Value = [f64; 2]> {
    (-r..r, -r..r).prop_map(|(a, b)| [a, b])
}

fn angles(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..TAU, 1..=max)
}

fn homogeneous_spec() -> impl Strategy<Value = PlaneSpec> {
    (params(), angles(8)).prop_map(|(p, a)| {
        let e: Vec<(f64, f64)> = a.iter().map(|&t| (t, 0.0)).collect();
        PlaneSpec::from_angles(p, &e).unwrap()
    })
}

fn measure() -> impl Strategy<Value = SphereMeasure> {
    (
        prop::collection::vec((0.0..TAU, -2.0f64..1.0), 1..=6),
        prop::collection::vec((0.0..TAU, 0.05..TAU, -2.0f64..1.0), 0..=2),
    )
        .prop_map(|(atoms, arcs)| {
            let atoms = atoms
                .into_iter()
                .map(|(t, m)| Atom {
                    nu: direction(t).to_vec(),
                    mass: 10f64.powf(m),
                })
                .collect();
            let arcs = arcs
                .into_iter()
                .map(|(lo, len, w)| ArcSegment {
                    lo,
                    hi: lo + len,
                    weight: 10f64.powf(w),
                })
                .collect();
            SphereMeasure::new(3, atoms, arcs).unwrap()
        })
}

proptest! {
    #[test]
    fn planes_are_one_homogeneous(spec in homogeneous_spec(), x in point(50.0), lambda in 0.01f64..100.0) {
        let a = eval_inf_planes(&spec, &[lambda * x[0], lambda * x[1]]).0;
        let b = lambda * eval_inf_planes(&spec, &x).0;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn planes_are_cot_lipschitz(spec in homogeneous_spec(), x in point(50.0), y in point(50.0)) {
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        let gap = (eval_inf_planes(&spec, &x).0 - eval_inf_planes(&spec, &y).0).abs();
        prop_assert!(gap <= spec.params().cot_alpha * d + 1e-12);
    }

    #[test]
    fn planes_are_concave(spec in homogeneous_spec(), x in point(50.0), y in point(50.0)) {
        let m = [(x[0] + y[0]) / 2.0, (x[1] + y[1]) / 2.0];
        let f = |z: &[f64]| eval_inf_planes(&spec, z).0;
        prop_assert!(f(&m) >= 0.5 * (f(&x) + f(&y)) - 1e-12);
    }

    #[test]
    fn subsolution_gradient_bound_and_concavity(p in params(), mu in measure(), x in point(50.0)) {
        let g = grad_phi_star(&mu, &p, &x).unwrap();
        prop_assert!(g.norm() <= p.cot_alpha + 1e-12);
        let h = hess_phi_star(&mu, &p, &x).unwrap();
        let top = 0.5 * (h[(0, 0)] + h[(1, 1)]) + (0.5 * (h[(0, 0)] - h[(1, 1)])).hypot(h[(0, 1)]);
        prop_assert!(top <= 1e-12);
    }

    #[test]
    fn subsolution_derivatives_match_differences(p in params(), mu in measure(), x in point(20.0)) {
        let sub = SubSolution::new(mu.clone(), p).unwrap();
        let h = 1e-5;
        let f = |a: f64, b: f64| sub.value(&[a, b]).unwrap();
        let g = grad_phi_star(&mu, &p, &x).unwrap();
        let fd = [
            (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h),
            (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h),
        ];
        prop_assert!((g[0] - fd[0]).abs() <= 1e-6 && (g[1] - fd[1]).abs() <= 1e-6);
        let hs = hess_phi_star(&mu, &p, &x).unwrap();
        let gx = |a: f64, b: f64| grad_phi_star(&mu, &p, &[a, b]).unwrap();
        let d1 = (gx(x[0] + h, x[1]) - gx(x[0] - h, x[1])) / (2.0 * h);
        let d2 = (gx(x[0], x[1] + h) - gx(x[0], x[1] - h)) / (2.0 * h);
        prop_assert!((hs[(0, 0)] - d1[0]).abs() <= 1e-6);
        prop_assert!((hs[(1, 0)] - d1[1]).abs() <= 1e-6);
        prop_assert!((hs[(1, 1)] - d2[1]).abs() <= 1e-6);
    }

    #[test]
    fn subsolution_lies_above_planes_of_probability_atoms(p in params(), a in angles(6), x in point(50.0)) {
        let k = a.len() as f64;
        let mu = SphereMeasure::from_angles(&a.iter().map(|&t| (t, 1.0 / k)).collect::<Vec<_>>()).unwrap();
        let planes = PlaneSpec::from_angles(p, &a.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>()).unwrap();
        let sub = SubSolution::new(mu, p).unwrap().value(&x).unwrap();
        prop_assert!(sub >= eval_inf_planes(&planes, &x).0 - 1e-10);
    }

    #[test]
    fn unit_atoms_stay_within_log_k_of_planes(p in params(), a in angles(6), x in point(50.0)) {
        let mu = SphereMeasure::from_angles(&a.iter().map(|&t| (t, 1.0)).collect::<Vec<_>>()).unwrap();
        let planes = PlaneSpec::from_angles(p, &a.iter().map(|&t| (t, 0.0)).collect::<Vec<_>>()).unwrap();
        let k = a.len() as f64;
        let sub = SubSolution::new(mu, p).unwrap().value(&x).unwrap();
        let top = eval_inf_planes(&planes, &x).0;
        prop_assert!(sub <= top + 1e-10);
        prop_assert!(sub >= top - 2.0 * k.ln() / (p.c0 * p.sin_alpha) - 1e-10);
    }

    #[test]
    fn g_is_odd_and_n_zero_bounded(p in params(), t in -PI..PI, t1 in -1.5f64..0.0, w in 0.1f64..3.0, r in 1.0f64..500.0) {
        prop_assert_eq!(g_map(&p, -t), -g_map(&p, t));
        let n0 = n_zero(&p, t1, t1 + w, t1 + 0.5 * w, r).unwrap();
        prop_assert!((0.0..=1.0 / PI.sqrt() + 1e-13).contains(&n0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cone_slope_is_monotone_and_bracketed(alpha in 0.3f64..1.4) {
        let p = Params::new(alpha, 1.0, 3).unwrap();
        let tol = 1e-10;
        let prof = solve_cone(&p, 400.0, tol).unwrap();
        let (r, v) = (prof.r_grid(), prof.v_values());
        for i in 1..r.len() {
            prop_assert!(v[i] <= v[i - 1] + 1e-12);
            prop_assert!(v[i] <= 10.0 * tol);
            prop_assert!(v[i] >= v0_bracket(&p, r[i]).unwrap() - 10.0 * tol);
            prop_assert!(v[i] >= -p.cot_alpha - 10.0 * tol);
        }
    }
}

#[test]
fn planar_limit_of_bracket() {
    let p = Params::new(FRAC_PI_2, 1.0, 3).unwrap();
    for r in [0.1, 1.0, 100.0] {
        assert_eq!(v0_bracket(&p, r).unwrap(), 0.0);
    }
}
