//! Globally adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default panel budget for adaptive refinement.
pub const DEFAULT_MAX_PANELS: usize = 10_000;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<const K: usize, F: Fn(f64) -> [f64; K]>(f: &F, a: f64, b: f64) -> Panel<K> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; K];
    let mut gauss = [0.0; K];
    let fc = f(center);
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut error = 0.0f64;
    for k in 0..K {
        kron[k] *= half;
        gauss[k] *= half;
        error = error.max((kron[k] - gauss[k]).abs());
    }
    Panel {
        a,
        b,
        value: kron,
        error,
    }
}

/// Integrate `f` over `[a, b]` split first at the given interior `breaks`.
///
/// The error target is `max(abs_tol, rel_tol * |I_0|)` where `I_0` is the first
/// component; the remaining components are assumed to be dominated by it.
pub fn integrate<const K: usize, F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    if a == b {
        return Ok([0.0; K]);
    }
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);

    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        }
    }
    let mut panels = heap.len();
    loop {
        let mut total = [0.0; K];
        let mut err = 0.0;
        for p in heap.iter() {
            for (t, v) in total.iter_mut().zip(&p.value) {
                *t += v;
            }
            err += p.error;
        }
        let target = opts.abs_tol.max(opts.rel_tol * total[0].abs());
        if err <= target {
            return Ok(total);
        }
        if panels >= opts.max_panels {
            return Err(Error::QuadratureFailure {
                panels,
                estimate: err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval below floating-point resolution; accept what we have
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        panels += 1;
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    integrate(|t| [f(t)], a, b, breaks, opts).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_exact() {
        let v = integrate_scalar(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], QuadOptions::default())
            .unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_gaussian() {
        // sharp peak forces refinement
        let s = 1e-3;
        let v = integrate_scalar(
            |x| (-(x - 0.3) * (x - 0.3) / (2.0 * s * s)).exp(),
            0.0,
            1.0,
            &[],
            QuadOptions::default(),
        )
        .unwrap();
        let exact = s * (2.0 * PI).sqrt();
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn budget_exhaustion_reports_failure() {
        let opts = QuadOptions {
            max_panels: 3,
            ..Default::default()
        };
        let r = integrate_scalar(|x| x.abs().sqrt(), -1.0, 1.0, &[], opts);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn vector_components() {
        let v = integrate(|t| [1.0, t.cos(), t.sin()], 0.0, PI / 2.0, &[], QuadOptions::default())
            .unwrap();
        assert!((v[0] - PI / 2.0).abs() < 1e-14);
        assert!((v[1] - 1.0).abs() < 1e-14);
        assert!((v[2] - 1.0).abs() < 1e-14);
    }
}
