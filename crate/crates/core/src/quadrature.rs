//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..(m + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_m(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = mf * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let center = f(mid);
    let mut k = center * WGK[7];
    let mut g = center * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        k += pair * WGK[j];
        if j % 2 == 1 {
            g += pair * WG[j / 2];
        }
    }
    (k * half, ((k - g) * half).norm())
}

/// Integrates a complex integrand over `[a, b]` to absolute accuracy
/// `max(abs_tol, rel_tol |I|)` by bisecting the worst G7/K15 panel.
pub fn integrate_adaptive<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    const MAX_PANELS: usize = 20_000;
    let (v, e) = kronrod(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numeric(format!(
                "adaptive quadrature stalled at error {err:e} after {MAX_PANELS} panels"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&mut f, lo, m);
        let (v2, e2) = kronrod(&mut f, m, hi);
        panels.push((lo, m, v1, e1));
        panels.push((m, hi, v2, e2));
    }
}
