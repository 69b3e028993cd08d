use hyptev::radial_tev::{
    asymptotic_m, asymptotic_model, derivative_v, determinant, farfield_decay_check,
    find_eigenvalues, helmholtz_to_schrodinger, solution_v, solution_v_derivative, solution_w,
    RadialProblem,
};
use hyptev::special_functions::{gauss_2f1, series_oracle, HypergeometricInput};
use num_complex::Complex64;
use proptest::prelude::*;

fn reference() -> RadialProblem {
    RadialProblem::new(2, 1.0, 0.5, 1).unwrap()
}

/// Integrates `rho (rho + 1) u'' + (n rho + n/2) u' + (s² + t²) u = 0` from a
/// short power-series start near the regular singular point with RK4.
fn shoot(n: usize, t_sq: f64, rho_end: f64) -> f64 {
    let s = 0.5 * (n as f64 - 1.0);
    let c = 0.5 * n as f64;
    let start: f64 = 1e-3;
    let (mut u, mut du) = (0.0, 0.0);
    let mut a = 1.0;
    for k in 0..12 {
        let kf = k as f64;
        u += a * start.powi(k);
        if k > 0 {
            du += kf * a * start.powi(k - 1);
        }
        a *= -((s + kf) * (s + kf) + t_sq) / ((c + kf) * (kf + 1.0));
    }
    let nf = n as f64;
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [y[1], -((nf * r + 0.5 * nf) * y[1] + (s * s + t_sq) * y[0]) / (r * (r + 1.0))]
    };
    let steps = 20_000;
    let h = (rho_end - start) / steps as f64;
    let mut y = [u, du];
    let mut r = start;
    for _ in 0..steps {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    y[0]
}

#[test]
fn solutions_match_ode_shooting() {
    let p = reference();
    let v = solution_v(&p, 1.0, 1.0).unwrap();
    let w = solution_w(&p, 1.0, 1.0).unwrap();
    assert!((v - shoot(2, 0.5, 1.0)).abs() < 1e-6, "v = {v}");
    assert!((w - shoot(2, 1.0, 1.0)).abs() < 1e-6, "w = {w}");
    let q = RadialProblem::new(3, 1.0, -1.0, 1).unwrap();
    assert!((solution_v(&q, 4.0, 2.5).unwrap() - shoot(3, 8.0, 2.5)).abs() < 1e-6);
}

#[test]
fn derivative_matches_differences() {
    let p = reference();
    let cap = p.cap();
    let h = 1e-5;
    let fd = (solution_v(&p, 10.0, cap + h).unwrap() - solution_v(&p, 10.0, cap - h).unwrap()) / (2.0 * h);
    let exact = derivative_v(&p, 10.0).unwrap();
    assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{fd} vs {exact}");
}

/// Complex-arithmetic series for `F(s - it, s + it; c; x)`, `|x| < 1`.
fn complex_series(s: f64, t: f64, c: f64, x: f64) -> Complex64 {
    let (a, b) = (Complex64::new(s, -t), Complex64::new(s, t));
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..4000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) * x / ((c + kf) * (kf + 1.0));
        sum += term;
        if term.norm() < 1e-20 && kf > t {
            break;
        }
    }
    sum
}

#[test]
fn determinant_is_real() {
    let p = reference();
    let cap = p.cap();
    for &l in &[3.0, 40.0, 150.0] {
        let (tv, tw) = ((0.5 * l as f64).sqrt(), (l as f64).sqrt());
        let fv = complex_series(0.5, tv, 1.0, -cap);
        let fw = complex_series(0.5, tw, 1.0, -cap);
        let gv = complex_series(1.5, tv, 2.0, -cap) * (0.25 + tv * tv);
        let gw = complex_series(1.5, tw, 2.0, -cap) * (0.25 + tw * tw);
        let shadow = fv * gw - fw * gv;
        let d = determinant(&p, l).unwrap();
        assert!(shadow.im.abs() < 1e-10 * d.scale(), "Im = {}", shadow.im);
        assert!((shadow.re - d.det_value).abs() < 1e-10 * d.scale());
    }
}

#[test]
fn root_bracketed_between_one_and_two_thousand() {
    let p = reference();
    let a = determinant(&p, 1.0).unwrap().det_value;
    let b = determinant(&p, 2000.0).unwrap().det_value;
    let list = find_eigenvalues(&p, 2000.0, 10.0).unwrap();
    assert!(a.signum() != b.signum() || !list.roots.is_empty());
}

#[test]
fn eigenvalues_exist_and_are_stable() {
    let p = reference();
    let coarse = find_eigenvalues(&p, 2000.0, 5.0).unwrap();
    let fine = find_eigenvalues(&p, 2000.0, 2.5).unwrap();
    assert!(coarse.roots.len() >= 3, "{:?}", coarse.lambdas());
    assert_eq!(coarse.roots.len(), fine.roots.len());
    assert!(!coarse.coarse_grid);
    for (a, b) in coarse.roots.iter().zip(&fine.roots) {
        assert!((a.lambda - b.lambda).abs() < 1e-8 * a.lambda);
        assert!(a.residual < 1e-8, "{a:?}");
    }
    assert!(coarse.lambdas().windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn root_count_follows_the_sine_factor() {
    let p = reference();
    let list = find_eigenvalues(&p, 2000.0, 5.0).unwrap();
    let predicted = p.dominant_zero_count(2000.0);
    assert!((list.roots.len() as f64 - predicted.floor()).abs() <= 1.0, "{predicted}");
}

#[test]
fn model_zeros_track_determinant_roots() {
    // Each root lies next to a zero of M, within a fraction of the sine-factor period.
    let p = reference();
    let list = find_eigenvalues(&p, 2000.0, 5.0).unwrap();
    for r in &list.roots {
        let k = r.lambda.sqrt();
        let window = 2.0;
        let mut prev = asymptotic_m(2, 1.0, 0.5, (k - window).powi(2));
        let mut found = false;
        for j in 1..=400 {
            let kk = k - window + 2.0 * window * j as f64 / 400.0;
            let m = asymptotic_model(&p, kk * kk);
            if m.signum() != prev.signum() {
                found = true;
            }
            prev = m;
        }
        assert!(found, "no model zero within sqrt(lambda) ± {window} of {}", r.lambda);
    }
}

#[test]
fn flavour_identity_at_roots() {
    let p = reference();
    for r in find_eigenvalues(&p, 2000.0, 5.0).unwrap().roots {
        let c = helmholtz_to_schrodinger(&p, r.lambda).unwrap();
        assert!(c.difference() <= 1e-12 * c.helmholtz_det.abs().max(1e-300) || c.difference() == 0.0);
        let d = determinant(&c.schrodinger, r.lambda).unwrap();
        assert!(d.relative().abs() < 1e-8);
    }
}

#[test]
fn far_field_is_bounded() {
    for n in 2..=3 {
        for &l in &[1.0, 5.0, 20.0] {
            let p = RadialProblem::new(n, 1.0, 0.5, 1).unwrap();
            let rep = farfield_decay_check(&p, l, 10.0, 1e3, 60).unwrap();
            assert!(rep.slope <= 0.05, "n={n} lambda={l}: slope {}", rep.slope);
            assert!(rep.weighted.iter().all(|v| v.is_finite() && *v >= 0.0));
            assert!(rep.envelope.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }
    let p = reference();
    let short = farfield_decay_check(&p, 5.0, 1.0, 1e3, 200).unwrap();
    let long = farfield_decay_check(&p, 5.0, 1.0, 2e3, 220).unwrap();
    assert!(long.sup_weighted <= 1.1 * short.sup_weighted);
}

#[test]
fn engine_holds_beyond_default_envelope() {
    // Large-t values at the ball radius, against the independent oracle.
    let cap = reference().cap();
    for &t in &[70.0, 140.0, 200.0] {
        for &(s, c) in &[(0.5, 1.0), (1.5, 2.0)] {
            let inp = HypergeometricInput::new(s, t, c, -cap).unwrap();
            let v = gauss_2f1(&inp).unwrap();
            let o = series_oracle(&inp, 25).unwrap();
            assert!((v - o).abs() < 1e-10 * o.abs(), "t={t}: {v} vs {o}");
        }
    }
}

#[test]
fn schrodinger_flavour_below_threshold() {
    // nu = 0 with lambda < V0 uses the imaginary-t continuation.
    let p = RadialProblem::new(2, 1.0, 3.0, 0).unwrap();
    let v = solution_v(&p, 1.0, 0.8).unwrap();
    assert!((v - shoot(2, -2.0, 0.8)).abs() < 1e-6);
    let dv = solution_v_derivative(&p, 1.0, 0.8).unwrap();
    let h = 1e-5;
    let fd = (solution_v(&p, 1.0, 0.8 + h).unwrap() - solution_v(&p, 1.0, 0.8 - h).unwrap()) / (2.0 * h);
    assert!((dv - fd).abs() < 1e-6 * dv.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flavour_identity_everywhere(l in 0.01f64..2000.0, v0 in -3.0f64..0.99, n in 2usize..5) {
        prop_assume!(v0.abs() > 1e-3);
        let p = RadialProblem::new(n, 0.8, v0, 1).unwrap();
        let c = helmholtz_to_schrodinger(&p, l).unwrap();
        prop_assert!(c.difference() <= 1e-12 * c.helmholtz_det.abs());
    }

    #[test]
    fn model_is_bounded(l in 0.0f64..1e6, v0 in -5.0f64..0.999) {
        let q = (1.0 - v0).sqrt();
        let m = asymptotic_m(3, 1.3, v0, l).abs();
        prop_assert!(m <= (1.0 - q).abs() + 1.0 + q + 1e-12);
        if v0 >= 0.0 {
            prop_assert!(m <= 2.0 + (1.0 - q).abs());
        }
    }

    #[test]
    fn solutions_start_at_one(l in 0.01f64..1e3, v0 in -3.0f64..0.99) {
        prop_assume!(v0.abs() > 1e-3);
        let p = RadialProblem::new(2, 1.0, v0, 1).unwrap();
        prop_assert_eq!(solution_v(&p, l, 0.0).unwrap(), 1.0);
        prop_assert_eq!(solution_w(&p, l, 0.0).unwrap(), 1.0);
    }
}
