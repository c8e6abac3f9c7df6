//! Dormand-Prince 5(4) embedded Runge-Kutta pair with step-size control.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Absolute tolerance per component.
    pub atol: [f64; 2],
    /// Relative tolerance per component.
    pub rtol: [f64; 2],
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

/// One accepted step: `(t, y)` at its end.
pub type Sample = (f64, [f64; 2]);

/// Integrate the 2-component system `y' = f(t, y)` from `t0` to `t_end`,
/// calling `on_step` after every accepted step. The closure may abort the
/// integration by returning an error.
pub fn dopri5<F, S>(
    f: F,
    t0: f64,
    y0: [f64; 2],
    t_end: f64,
    ctl: StepControl,
    mut on_step: S,
) -> Result<()>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
    S: FnMut(f64, &[f64; 2]) -> Result<()>,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = ctl.h_init.min(ctl.h_max);
    let mut k1 = f(t, &y);
    let mut steps = 0usize;

    let comb = |y: &[f64; 2], h: f64, terms: &[(f64, &[f64; 2])]| {
        let mut out = *y;
        for (a, k) in terms {
            out[0] += h * a * k[0];
            out[1] += h * a * k[1];
        }
        out
    };

    while t < t_end {
        if steps >= ctl.max_steps || h < ctl.h_min {
            return Err(Error::IntegrationFailure { r: t, step: h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(t + C2 * h, &comb(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &comb(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = comb(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..2 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.atol[i] + ctl.rtol[i] * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        steps += 1;

        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7; // FSAL
            on_step(t, &y)?;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(ctl.h_max);
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
        }
    }
    Ok(())
}
