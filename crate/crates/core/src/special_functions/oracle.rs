//! Slow reference evaluation in extended precision, used to check the engine.
//!
//! Every step, including the prefactor `(1 - x)^(-a)` and its phase, runs in
//! big-float arithmetic; nothing is shared with the production summation.

use dashu_float::FBig;

use super::HypergeometricInput;
use crate::error::{Error, Result, SeriesDiagnostics};

type Big = FBig;

const MAX_ORACLE_TERMS: usize = 2_000_000;

fn lift(v: f64, bits: usize) -> Big {
    Big::try_from(v).expect("finite").with_precision(bits).value()
}

fn approx(v: &Big) -> f64 {
    v.to_f64().value()
}

/// `atan(1/m)` by its alternating series.
fn atan_inv(m: u32, bits: usize) -> Big {
    let one = lift(1.0, bits);
    let mb = lift(f64::from(m), bits);
    let m2 = &mb * &mb;
    let mut power = &one / &mb;
    let mut sum = power.clone();
    let stop = (-(bits as f64) - 8.0).exp2();
    let mut k = 1u32;
    loop {
        power = &power / &m2;
        let term = &power / lift(f64::from(2 * k + 1), bits);
        if k % 2 == 1 {
            sum = &sum - &term;
        } else {
            sum = &sum + &term;
        }
        if approx(&term).abs() < stop {
            return sum;
        }
        k += 1;
    }
}

/// Machin's formula `pi = 16 atan(1/5) - 4 atan(1/239)`.
fn pi(bits: usize) -> Big {
    lift(16.0, bits) * atan_inv(5, bits) - lift(4.0, bits) * atan_inv(239, bits)
}

fn sin_cos(theta: &Big, bits: usize) -> (Big, Big) {
    let two_pi = lift(2.0, bits) * pi(bits);
    let turns = (approx(theta) / approx(&two_pi)).round();
    let r = theta - lift(turns, bits) * &two_pi;
    let one = lift(1.0, bits);
    let r2 = &r * &r;
    let mut sin = r.clone();
    let mut cos = one.clone();
    let mut term_s = r.clone();
    let mut term_c = one;
    let stop = (-(bits as f64) - 8.0).exp2();
    let mut n = 1u32;
    loop {
        // term_c: (-1)^n r^(2n) / (2n)!, term_s: (-1)^n r^(2n+1) / (2n+1)!
        term_c = -(&term_c * &r2) / lift(f64::from((2 * n - 1) * (2 * n)), bits);
        term_s = -(&term_s * &r2) / lift(f64::from((2 * n) * (2 * n + 1)), bits);
        cos = &cos + &term_c;
        sin = &sin + &term_s;
        if approx(&term_c).abs().max(approx(&term_s).abs()) < stop {
            return (sin, cos);
        }
        n += 1;
    }
}

/// Peak of `ln |term_k|` of the mapped series, found in the log domain.
fn log_peak(a: (f64, f64), d: (f64, f64), c: f64, z: f64) -> f64 {
    let mut log_term = 0.0f64;
    let mut peak = 0.0f64;
    for k in 0..MAX_ORACLE_TERMS {
        let kf = k as f64;
        let ratio = (a.0 + kf).hypot(a.1) * (d.0 + kf).hypot(d.1) * z / ((c + kf) * (kf + 1.0));
        if ratio == 0.0 {
            break;
        }
        log_term += ratio.ln();
        peak = peak.max(log_term);
        if ratio < 1.0 && log_term < peak - 60.0 {
            break;
        }
    }
    peak
}

/// Sums `2F1` after the Pfaff map `x -> x / (x - 1)` in extended precision.
///
/// Terms are dropped once they fall below `10^-precision_digits` relative to
/// the partial sum. The working precision adds enough bits on top of the
/// requested digits to absorb the cancellation of the mapped series.
pub fn series_oracle(input: &HypergeometricInput, precision_digits: u32) -> Result<f64> {
    if !(1..=60).contains(&precision_digits) {
        return Err(Error::InvalidParameter(format!(
            "precision_digits = {precision_digits} must lie in 1..=60"
        )));
    }
    if input.x > 0.0 {
        return Err(Error::Domain(format!(
            "mapped argument x/(x-1) leaves [0, 1) for x = {}",
            input.x
        )));
    }
    if input.x == 0.0 {
        return Ok(1.0);
    }
    let (a, d) = if input.imaginary_t {
        ((input.s + input.t, 0.0), (input.c - input.s + input.t, 0.0))
    } else {
        ((input.s, -input.t), (input.c - input.s, -input.t))
    };
    let z_f = input.x / (input.x - 1.0);
    let digit_bits = (f64::from(precision_digits) * std::f64::consts::LOG2_10).ceil() as usize;
    let peak_bits = (log_peak(a, d, input.c, z_f) / std::f64::consts::LN_2).ceil() as usize;
    let mut bits = digit_bits + peak_bits + 64;

    loop {
        let one = lift(1.0, bits);
        let xb = lift(input.x, bits);
        let z = &xb / (&xb - &one);
        let c = lift(input.c, bits);
        let (ar, ai) = (lift(a.0, bits), lift(a.1, bits));
        let (dr, di) = (lift(d.0, bits), lift(d.1, bits));
        let stop = 10f64.powi(-(precision_digits as i32)) * 1e-3;

        let mut re = one.clone();
        let mut im = lift(0.0, bits);
        let mut sum_re = one.clone();
        let mut sum_im = lift(0.0, bits);
        let mut peak = 1.0f64;
        let mut k = 0usize;
        loop {
            let kb = lift(k as f64, bits);
            let ak_re = &ar + &kb;
            let dk_re = &dr + &kb;
            let num_re = &ak_re * &dk_re - &ai * &di;
            let num_im = &ak_re * &di + &ai * &dk_re;
            let scale = &z / ((&c + &kb) * (&kb + &one));
            let next_re = (&re * &num_re - &im * &num_im) * &scale;
            let next_im = (&re * &num_im + &im * &num_re) * &scale;
            re = next_re;
            im = next_im;
            sum_re = &sum_re + &re;
            sum_im = &sum_im + &im;
            k += 1;
            let mag = approx(&re).hypot(approx(&im));
            peak = peak.max(mag);
            let past_peak = (k as f64) > input.t + input.s.abs() + input.c + 2.0;
            let sum_mag = approx(&sum_re).hypot(approx(&sum_im));
            if past_peak && (mag == 0.0 || mag < stop * sum_mag * (1.0 - z_f)) {
                break;
            }
            if k > MAX_ORACLE_TERMS {
                return Err(Error::Convergence {
                    message: "oracle series exceeded its term cap".into(),
                    diagnostics: SeriesDiagnostics {
                        terms: k,
                        last_term: mag,
                        partial_sum: sum_mag,
                        precision_bits: bits,
                    },
                });
            }
        }

        // (1 - x)^(-a) = exp(-a ln(1 - x)) = exp(-ar L) (cos(-ai L) + i sin(-ai L)).
        let log1mx = (&one - &xb).ln();
        let modulus = (-(&ar * &log1mx)).exp();
        let theta = -(&ai * &log1mx);
        let (sin, cos) = sin_cos(&theta, bits);
        let value = modulus * (cos * &sum_re - sin * &sum_im);
        let v = approx(&value);

        // Re-check that the working precision covered the observed cancellation.
        let lost = if v == 0.0 {
            0.0
        } else {
            (peak * approx(&(-(&ar * &log1mx)).exp()) / v.abs()).log2().max(0.0)
        };
        let needed = digit_bits + lost.ceil() as usize + 16;
        if bits >= needed || v == 0.0 {
            return Ok(v);
        }
        bits = needed + 32;
    }
}
