use dashu_float::FBig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HypergeometricInput;
use crate::error::{Error, Result, SeriesDiagnostics};

/// Summation route.
///
/// `Direct` sums the series in `x` itself (needs `|x| < 1`). `Pfaff` first maps
/// `x -> x / (x - 1) in [0, 1)` via
/// `F(a, b; c; x) = (1 - x)^(-a) F(a, c - b; c; x / (x - 1))` and keeps the real part.
/// `Continuation` starts from the direct series at `x = -1/2` and integrates
/// the differential equation outwards by Taylor steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Direct,
    Pfaff,
    Continuation,
}

/// Starting point of the continuation route.
pub(crate) const CONTINUATION_START: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub route: Route,
    pub terms: usize,
    /// Mantissa bits of the pass that produced `value`; 53 means plain f64.
    pub precision_bits: usize,
    /// `log2(max |term| / |value|)`, the number of bits lost to cancellation.
    pub cancellation_bits: f64,
}

pub(crate) const MAX_TERMS: usize = 1_000_000;
const MAX_BITS: usize = 16_384;
/// Relative accuracy the f64 pass must certify before it is trusted.
const CERTIFY_REL: f64 = 1e-14;
const GUARD_BITS: usize = 24;

type Big = FBig;

fn big(v: f64, bits: usize) -> Big {
    Big::try_from(v)
        .expect("finite series coefficient")
        .with_precision(bits)
        .value()
}

fn to_f64(v: &Big) -> f64 {
    v.to_f64().value()
}

/// Real/imaginary split of the Pfaff-mapped parameters `a` and `d = c - b`.
#[derive(Clone, Copy)]
struct PfaffParams {
    ar: f64,
    ai: f64,
    dr: f64,
    di: f64,
}

impl PfaffParams {
    fn new(inp: &HypergeometricInput) -> Self {
        if inp.imaginary_t {
            Self {
                ar: inp.s + inp.t,
                ai: 0.0,
                dr: inp.c - inp.s + inp.t,
                di: 0.0,
            }
        } else {
            Self {
                ar: inp.s,
                ai: -inp.t,
                dr: inp.c - inp.s,
                di: -inp.t,
            }
        }
    }
}

struct Pass {
    /// Series sum; the imaginary part is zero on the direct route.
    sum: Complex64,
    max_abs: f64,
    terms: usize,
    overflow: bool,
}

/// Index past which `(s + k)² + t²` can no longer change sign or peak.
fn guard_index(inp: &HypergeometricInput) -> usize {
    (inp.t + inp.s.abs() + inp.c + 2.0).ceil() as usize
}

fn tail_small(term_abs: f64, ratio_abs: f64, z_abs: f64, scale: f64, tol: f64) -> bool {
    if term_abs == 0.0 {
        return true;
    }
    let q = ratio_abs.max(z_abs);
    q < 1.0 && term_abs * q / (1.0 - q) <= tol * scale
}

fn non_convergence(route: Route, terms: usize, last: f64, sum: f64, bits: usize) -> Error {
    Error::Convergence {
        message: format!("{route:?} hypergeometric series exceeded {MAX_TERMS} terms"),
        diagnostics: SeriesDiagnostics {
            terms,
            last_term: last,
            partial_sum: sum,
            precision_bits: bits,
        },
    }
}

fn direct_f64(inp: &HypergeometricInput) -> Result<Pass> {
    let (s, c, x, t2) = (inp.s, inp.c, inp.x, inp.t_squared());
    let guard = guard_index(inp);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut max_abs = 1.0f64;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let ratio = ((s + kf) * (s + kf) + t2) * x / ((c + kf) * (kf + 1.0));
        term *= ratio;
        sum += term;
        k += 1;
        if !term.is_finite() {
            return Ok(Pass {
                sum: Complex64::new(sum, 0.0),
                max_abs: f64::INFINITY,
                terms: k,
                overflow: true,
            });
        }
        max_abs = max_abs.max(term.abs());
        if k >= guard && tail_small(term.abs(), ratio.abs(), x.abs(), sum.abs(), 1e-17) {
            break;
        }
        if k > MAX_TERMS {
            return Err(non_convergence(Route::Direct, k, term, sum, 53));
        }
    }
    Ok(Pass {
        sum: Complex64::new(sum, 0.0),
        max_abs,
        terms: k,
        overflow: false,
    })
}

fn pfaff_argument(x: f64) -> f64 {
    x / (x - 1.0)
}

fn pfaff_f64(inp: &HypergeometricInput) -> Result<Pass> {
    let p = PfaffParams::new(inp);
    let c = inp.c;
    let z = pfaff_argument(inp.x);
    let guard = guard_index(inp);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_abs = 1.0f64;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let a = Complex64::new(p.ar + kf, p.ai);
        let d = Complex64::new(p.dr + kf, p.di);
        let ratio = a * d * (z / ((c + kf) * (kf + 1.0)));
        term *= ratio;
        sum += term;
        k += 1;
        let term_abs = term.norm();
        if !term_abs.is_finite() {
            return Ok(Pass {
                sum,
                max_abs: f64::INFINITY,
                terms: k,
                overflow: true,
            });
        }
        max_abs = max_abs.max(term_abs);
        if k >= guard && tail_small(term_abs, ratio.norm(), z, sum.norm(), 1e-17) {
            break;
        }
        if k > MAX_TERMS {
            return Err(non_convergence(Route::Pfaff, k, term_abs, sum.norm(), 53));
        }
    }
    Ok(Pass {
        sum,
        max_abs,
        terms: k,
        overflow: false,
    })
}

fn direct_big(inp: &HypergeometricInput, bits: usize) -> Result<Pass> {
    let guard = guard_index(inp);
    let s = big(inp.s, bits);
    let c = big(inp.c, bits);
    let x = big(inp.x, bits);
    let t = big(inp.t, bits);
    let t2 = if inp.imaginary_t { -(&t * &t) } else { &t * &t };
    let one = big(1.0, bits);
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut max_abs = 1.0f64;
    let mut kb = big(0.0, bits);
    let mut k = 0usize;
    loop {
        let sk = &s + &kb;
        let num = &sk * &sk + &t2;
        let den = (&c + &kb) * (&kb + &one);
        term = &term * &num * &x / &den;
        sum = &sum + &term;
        k += 1;
        kb = &kb + &one;
        let term_abs = to_f64(&term).abs();
        max_abs = max_abs.max(term_abs);
        if k >= guard {
            let ratio = (to_f64(&num) * inp.x / to_f64(&den)).abs();
            if tail_small(term_abs, ratio, inp.x.abs(), to_f64(&sum).abs(), 1e-18) {
                break;
            }
        }
        if k > MAX_TERMS {
            return Err(non_convergence(Route::Direct, k, term_abs, to_f64(&sum), bits));
        }
    }
    Ok(Pass {
        sum: Complex64::new(to_f64(&sum), 0.0),
        max_abs,
        terms: k,
        overflow: false,
    })
}

fn pfaff_big(inp: &HypergeometricInput, bits: usize) -> Result<Pass> {
    let p = PfaffParams::new(inp);
    let guard = guard_index(inp);
    let zf = pfaff_argument(inp.x);
    let one = big(1.0, bits);
    let xb = big(inp.x, bits);
    let z = &xb / (&xb - &one);
    let c = big(inp.c, bits);
    let (ar, ai, dr, di) = (big(p.ar, bits), big(p.ai, bits), big(p.dr, bits), big(p.di, bits));
    let ai_di = &ai * &di;
    let mut re = one.clone();
    let mut im = big(0.0, bits);
    let mut sum_re = one.clone();
    let mut sum_im = big(0.0, bits);
    let mut max_abs = 1.0f64;
    let mut kb = big(0.0, bits);
    let mut k = 0usize;
    loop {
        let ak = &ar + &kb;
        let dk = &dr + &kb;
        let pr = &ak * &dk - &ai_di;
        let pi = &ak * &di + &ai * &dk;
        let scale = &z / ((&c + &kb) * (&kb + &one));
        let new_re = (&re * &pr - &im * &pi) * &scale;
        let new_im = (&re * &pi + &im * &pr) * &scale;
        re = new_re;
        im = new_im;
        sum_re = &sum_re + &re;
        sum_im = &sum_im + &im;
        k += 1;
        kb = &kb + &one;
        let term_abs = to_f64(&re).hypot(to_f64(&im));
        max_abs = max_abs.max(term_abs);
        if k >= guard {
            let ratio = to_f64(&pr).hypot(to_f64(&pi)) * to_f64(&scale).abs();
            let sum_abs = to_f64(&sum_re).hypot(to_f64(&sum_im));
            if tail_small(term_abs, ratio, zf, sum_abs, 1e-18) {
                break;
            }
        }
        if k > MAX_TERMS {
            return Err(non_convergence(Route::Pfaff, k, term_abs, to_f64(&sum_re), bits));
        }
    }
    Ok(Pass {
        sum: Complex64::new(to_f64(&sum_re), to_f64(&sum_im)),
        max_abs,
        terms: k,
        overflow: false,
    })
}

/// `(value, |prefactor|)` assembled from a pass.
fn assemble(inp: &HypergeometricInput, route: Route, pass: &Pass) -> (f64, f64) {
    match route {
        Route::Direct | Route::Continuation => (pass.sum.re, 1.0),
        Route::Pfaff => {
            let p = PfaffParams::new(inp);
            let log1p = (-inp.x).ln_1p();
            let modulus = (-p.ar * log1p).exp();
            let theta = -p.ai * log1p;
            let (sin, cos) = theta.sin_cos();
            (modulus * (cos * pass.sum.re - sin * pass.sum.im), modulus)
        }
    }
}

fn estimated_terms(z_abs: f64) -> f64 {
    if z_abs <= 0.0 {
        1.0
    } else {
        (1e-18f64).ln() / z_abs.ln()
    }
}

pub(crate) fn evaluate(inp: &HypergeometricInput, route: Route) -> Result<Evaluation> {
    if route == Route::Continuation && inp.x < CONTINUATION_START {
        return continued(inp);
    }
    let route = if route == Route::Continuation { Route::Direct } else { route };
    if inp.x == 0.0 {
        return Ok(Evaluation {
            value: 1.0,
            route,
            terms: 0,
            precision_bits: 53,
            cancellation_bits: 0.0,
        });
    }
    let z_abs = match route {
        Route::Direct | Route::Continuation => {
            if inp.x <= -1.0 {
                return Err(Error::Domain(format!(
                    "direct series needs |x| < 1, got x = {}",
                    inp.x
                )));
            }
            inp.x.abs()
        }
        Route::Pfaff => pfaff_argument(inp.x),
    };
    if estimated_terms(z_abs) > MAX_TERMS as f64 {
        return Err(non_convergence(route, 0, f64::NAN, f64::NAN, 53));
    }

    let pass = match route {
        Route::Direct | Route::Continuation => direct_f64(inp)?,
        Route::Pfaff => pfaff_f64(inp)?,
    };
    let (value, modulus) = assemble(inp, route, &pass);
    let mut cancellation = if pass.overflow {
        f64::INFINITY
    } else {
        (pass.max_abs * modulus / value.abs()).log2()
    };
    let est = 2.0 * f64::EPSILON * (pass.terms as f64).sqrt() * cancellation.exp2();
    if est <= CERTIFY_REL {
        return Ok(Evaluation {
            value,
            route,
            terms: pass.terms,
            precision_bits: 53,
            cancellation_bits: cancellation.max(0.0),
        });
    }

    // The f64 pass cannot resolve the cancellation; retry with enough bits.
    let mut bits = if cancellation.is_finite() {
        64 + GUARD_BITS + cancellation.max(0.0).ceil() as usize
    } else {
        // Overflow in f64 means terms beyond 1e308; start generously.
        1100 + GUARD_BITS
    };
    loop {
        let pass = match route {
            Route::Direct | Route::Continuation => direct_big(inp, bits)?,
            Route::Pfaff => pfaff_big(inp, bits)?,
        };
        let (value, modulus) = assemble(inp, route, &pass);
        cancellation = (pass.max_abs * modulus / value.abs()).log2().max(0.0);
        let needed = 53 + GUARD_BITS + cancellation.ceil() as usize;
        if value == 0.0 || !cancellation.is_finite() {
            // Exact zero of the function; nothing further to certify.
            if bits >= MAX_BITS / 4 {
                return Ok(Evaluation {
                    value,
                    route,
                    terms: pass.terms,
                    precision_bits: bits,
                    cancellation_bits: f64::INFINITY,
                });
            }
            bits *= 2;
            continue;
        }
        if bits >= needed {
            return Ok(Evaluation {
                value,
                route,
                terms: pass.terms,
                precision_bits: bits,
                cancellation_bits: cancellation,
            });
        }
        bits = needed + 32;
        if bits > MAX_BITS {
            return Err(Error::Numeric(format!(
                "hypergeometric series needs more than {MAX_BITS} bits (cancellation {cancellation:.0} bits)"
            )));
        }
    }
}

fn continued(inp: &HypergeometricInput) -> Result<Evaluation> {
    let start = inp.with_x(CONTINUATION_START)?;
    let f0 = evaluate(&start, Route::Direct)?;
    let ab = inp.ab();
    let df0 = if ab == 0.0 {
        0.0
    } else {
        ab / inp.c * evaluate(&start.shifted(), Route::Direct)?.value
    };
    let (value, _, steps) = super::continuation::march(inp, CONTINUATION_START, f0.value, df0, inp.x)?;
    Ok(Evaluation {
        value,
        route: Route::Continuation,
        terms: f0.terms + steps,
        precision_bits: f0.precision_bits,
        cancellation_bits: f0.cancellation_bits,
    })
}
