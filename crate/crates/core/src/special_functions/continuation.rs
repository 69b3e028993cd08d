//! Analytic continuation along the negative axis by local Taylor steps of the
//! hypergeometric equation
//! `x(1 - x) F'' + [c - (2s + 1) x] F' - (s² + t²) F = 0`,
//! whose coefficients are real for conjugate `a, b`. Both solutions grow like
//! `|x|^(-s)` as `x -> -inf`, so marching loses no accuracy to dominance.

use super::HypergeometricInput;
use crate::error::{Error, Result};

/// Largest step as a fraction of the distance to the singular point `x = 0`.
const MAX_STEP_FRACTION: f64 = 0.5;
const MAX_TAYLOR_TERMS: usize = 400;

/// Marches `(F, F')` from `(x_start, f, df)` to `x_target < x_start < 0`.
/// Returns the value and derivative at the target plus the number of steps.
pub(crate) fn march(
    inp: &HypergeometricInput,
    x_start: f64,
    f: f64,
    df: f64,
    x_target: f64,
) -> Result<(f64, f64, usize)> {
    debug_assert!(x_target < x_start && x_start < 0.0);
    let (c, ab) = (inp.c, inp.ab());
    let q1 = -(2.0 * inp.s + 1.0);
    // Local oscillation rate in ln|x| is about t; keep t |delta / x| near 1.5.
    let fraction = MAX_STEP_FRACTION.min(1.5 / (inp.t + 1.0));
    let (mut x, mut f, mut df) = (x_start, f, df);
    let mut steps = 0usize;
    while x > x_target {
        let delta = (x_target - x).max(x * fraction);
        let p0 = x * (1.0 - x);
        let p1 = 1.0 - 2.0 * x;
        let q0 = c - (2.0 * inp.s + 1.0) * x;
        // e_k = c_k delta^k for the Taylor coefficients c_k about x.
        let (mut e0, mut e1) = (f, df * delta);
        let mut value = e0 + e1;
        let mut slope = e1;
        let mut quiet = 0;
        let mut k = 0usize;
        loop {
            let kf = k as f64;
            let e2 = -((p1 * kf * (kf + 1.0) + q0 * (kf + 1.0)) * e1 * delta
                + (-kf * (kf - 1.0) + q1 * kf - ab) * e0 * delta * delta)
                / (p0 * (kf + 2.0) * (kf + 1.0));
            value += e2;
            slope += (kf + 2.0) * e2;
            let small = e2.abs() * (kf + 3.0) <= 1e-17 * (value.abs() + slope.abs());
            quiet = if small { quiet + 1 } else { 0 };
            if quiet >= 2 && k >= 4 {
                break;
            }
            e0 = e1;
            e1 = e2;
            k += 1;
            if k > MAX_TAYLOR_TERMS || !value.is_finite() {
                return Err(Error::Numeric(format!(
                    "Taylor continuation stalled at x = {x} (step {delta})"
                )));
            }
        }
        x += delta;
        f = value;
        df = slope / delta;
        steps += 1;
    }
    Ok((f, df, steps))
}
