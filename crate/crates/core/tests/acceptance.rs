//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fail.

use std::f64::consts::PI;

use hyptev::corner_laplace::{
    harmonic_basis, laplace_orthant_closed_form, leading_term_check, nonvanishing_scan,
    sample_admissible, ConeSpec, FitOptions, HomogeneousPolynomial,
};
use hyptev::operators::{
    conjugation_residual, greens_identity_residual, greens_identity_terms, Bump,
    ConformalFactorField, Gaussian, Grid, Model, Polynomial, SmoothFunction,
};
use hyptev::quadrature::integrate_adaptive;
use hyptev::radial_tev::{
    asymptotic_model, determinant, farfield_decay_check, find_eigenvalues, find_eigenvalues_within,
    helmholtz_to_schrodinger, RadialProblem,
};
use hyptev::special_functions::{gauss_2f1, gauss_2f1_derivative, series_oracle, HypergeometricInput};
use hyptev::spectral_curves::{assemble, crossings, crossings_vs_determinant};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = hyptev::Result<(bool, String)>;

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
}

fn reference() -> RadialProblem {
    RadialProblem::new(2, 1.0, 0.5, 1).unwrap()
}

fn random_functions(rng: &mut ChaCha8Rng, center: &[f64]) -> Vec<Box<dyn SmoothFunction>> {
    let n = center.len();
    let gaussian = |rng: &mut ChaCha8Rng| Gaussian {
        center: center.iter().map(|c| c + rng.gen_range(-0.1..0.1)).collect(),
        width: rng.gen_range(0.2..0.5),
        amplitude: rng.gen_range(0.5..2.0),
    };
    let mut terms = Vec::new();
    for k in 0..5u32.pow(n as u32) {
        let e: Vec<u32> = (0..n).map(|j| (k / 5u32.pow(j as u32)) % 5).collect();
        if e.iter().sum::<u32>() <= 4 {
            terms.push((rng.gen_range(-1.0..1.0), e));
        }
    }
    vec![Box::new(gaussian(rng)), Box::new(Polynomial { terms }), Box::new(gaussian(rng))]
}

fn conjugation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::INFINITY;
    for n in 2..=3 {
        let mut lo = vec![-0.25; n];
        let mut hi = vec![0.25; n];
        lo[n - 1] = 0.75;
        hi[n - 1] = 1.25;
        let mut up = vec![0.0; n];
        up[n - 1] = 1.0;
        let cases = [
            (ConformalFactorField::half_space(), Model::HalfSpace, lo, hi, up),
            (ConformalFactorField::ball(), Model::Ball, vec![-0.2; n], vec![0.2; n], vec![0.0; n]),
        ];
        for (k, model, lo, hi, center) in &cases {
            for f in random_functions(&mut rng, center) {
                let res = [17, 33, 65]
                    .iter()
                    .map(|&p| conjugation_residual(k, f.as_ref(), &Grid::new(*model, lo.clone(), hi.clone(), p)?))
                    .collect::<hyptev::Result<Vec<f64>>>()?;
                for w in res.windows(2) {
                    worst = worst.min(w[0] / w[1]);
                }
            }
        }
    }
    Ok((worst >= 3.5, format!("min refinement ratio {worst:.3} over 12 cases (need >= 3.5)")))
}

fn green() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    let mut worst = 0.0f64;
    for n in 2..=3 {
        let mut c = vec![0.0; n];
        c[n - 1] = 1.0;
        for _ in 0..3 {
            let fs = random_functions(&mut rng, &c);
            let (u, v) = (fs[0].as_ref(), fs[1].as_ref());
            let scale = greens_identity_terms(u, v, &c, 0.3, 32)?.boundary.abs().max(1.0);
            let res = [2, 4, 8, 16]
                .iter()
                .map(|&m| greens_identity_residual(u, v, &c, 0.3, m))
                .collect::<hyptev::Result<Vec<f64>>>()?;
            ok &= res[0] > res[2] && res[1] > res[3] && res[3] < 1e-10 * scale;
            worst = worst.max(res[3] / scale);
        }
    }
    let u = Gaussian { center: vec![0.1, 1.0], width: 0.3, amplitude: 1.0 };
    let same = greens_identity_terms(&u, &u, &[0.0, 1.0], 0.3, 8)?;
    let cancel = same.volume.abs().max(same.boundary.abs());
    ok &= cancel < 1e-14;
    let bump = Bump { center: vec![0.05, 1.0], radius: 0.2 };
    let v = Gaussian { center: vec![0.3, 0.3], width: 0.7, amplitude: 1.0 };
    let compact = greens_identity_terms(&bump, &v, &[0.0, 1.0], 0.3, 256)?;
    ok &= compact.boundary == 0.0 && compact.volume.abs() < 1e-7;
    Ok((
        ok,
        format!(
            "refined residual {worst:.2e} (rel), u = v terms {cancel:.1e}, compact support volume {:.1e}",
            compact.volume.abs()
        ),
    ))
}

fn roots_exist() -> Outcome {
    let p = reference();
    let coarse = find_eigenvalues(&p, 2000.0, 5.0)?;
    let fine = find_eigenvalues(&p, 2000.0, 2.5)?;
    let drift = coarse
        .roots
        .iter()
        .zip(&fine.roots)
        .map(|(a, b)| (a.lambda - b.lambda).abs() / a.lambda)
        .fold(0.0, f64::max);
    let ok = coarse.roots.len() >= 3 && coarse.roots.len() == fine.roots.len() && drift < 1e-8;
    Ok((ok, format!("{} roots {:?}, step-halving drift {drift:.1e}", coarse.roots.len(), coarse.lambdas())))
}

fn asymptotics() -> Outcome {
    let p = reference();
    let lambda_max = 40000.0;
    let list = find_eigenvalues_within(&p, lambda_max, 20.0, p.t_max(lambda_max).ceil() + 1.0)?;
    let scaled: Vec<(f64, f64)> = list
        .roots
        .iter()
        .filter(|r| r.lambda >= 400.0)
        .map(|r| (r.lambda, asymptotic_model(&p, r.lambda).abs() * r.lambda.sqrt()))
        .collect();
    let sup = |limit: f64| scaled.iter().filter(|(l, _)| *l <= limit).map(|(_, v)| *v).fold(0.0, f64::max);
    let (short, long) = (sup(1e4), sup(lambda_max));
    let ok = short > 0.0 && (long - short).abs() <= 0.2 * short;
    Ok((ok, format!("sup |M| sqrt(lambda): {short:.4} up to 1e4, {long:.4} up to 4e4 ({} roots)", scaled.len())))
}

fn curves_match_roots() -> Outcome {
    let p = reference();
    let roots = find_eigenvalues(&p, 2000.0, 5.0)?;
    let mut gaps = Vec::new();
    for m in [400, 800] {
        let d = assemble(&p, m)?;
        let found = crossings(&d, &p, 1.0, 2000.0, 5.0)?;
        let rep = crossings_vs_determinant(&found, &roots, 1e-2);
        let mut first: Vec<(f64, f64)> = rep.matched.iter().map(|(r, _, g)| (*r, *g)).collect();
        first.sort_by(|a, b| a.0.total_cmp(&b.0));
        first.truncate(3);
        gaps.push(first.iter().map(|x| x.1).collect::<Vec<f64>>());
    }
    let ok = gaps.iter().all(|g| g.len() == 3 && g.iter().all(|x| *x < 1e-2))
        && gaps[0].iter().zip(&gaps[1]).all(|(a, b)| b < a);
    Ok((ok, format!("relative gaps m=400 [{}], m=800 [{}]", list(&gaps[0]), list(&gaps[1]))))
}

fn positivity() -> Outcome {
    let s = RadialProblem::new(2, 1.0, 0.5, 0)?;
    let d = assemble(&s, 400)?;
    let mut mins = Vec::new();
    for l in [-10.0, -1.0, 0.0] {
        mins.push(d.lowest_curves(&s, l, 1)?[0]);
    }
    let h = RadialProblem::new(2, 1.0, -0.5, 1)?;
    let dh = assemble(&h, 400)?;
    let found = crossings(&dh, &h, -100.0, -1e-9, 0.5)?;
    let ok = mins.iter().all(|m| *m > 0.0) && found.is_empty();
    Ok((ok, format!("nu=0 lowest curve [{}]; nu=1 V0<0 crossings on [-100, 0): {}", list(&mins), found.len())))
}

fn flavour() -> Outcome {
    let p = reference();
    let mut lambdas: Vec<f64> = (0..60).map(|k| 0.01 * 200000f64.powf(k as f64 / 59.0)).collect();
    lambdas.extend(find_eigenvalues(&p, 2000.0, 5.0)?.lambdas());
    let mut worst = 0.0f64;
    for l in lambdas {
        let c = helmholtz_to_schrodinger(&p, l)?;
        let scale = determinant(&p, l)?.scale();
        worst = worst.max(c.difference() / scale);
    }
    Ok((worst <= 1e-12, format!("max |D_helmholtz - D_schrodinger| / scale = {worst:.1e} over 60 samples and roots")))
}

fn random_input(rng: &mut ChaCha8Rng, t_max: f64, rho_max: f64) -> HypergeometricInput {
    let s = rng.gen_range(0.25..3.0);
    let t = rng.gen_range(0.0..t_max);
    let c = rng.gen_range(0.5..3.5);
    let rho = 10f64.powf(rng.gen_range(-3.0..rho_max.log10()));
    HypergeometricInput::new(s, t, c, -rho).unwrap()
}

fn hypergeometric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut oracle = 0.0f64;
    for _ in 0..50 {
        let inp = random_input(&mut rng, 50.0, 1e3);
        let reference = series_oracle(&inp, 30)?;
        oracle = oracle.max((gauss_2f1(&inp)? - reference).abs() / reference.abs());
    }
    let mut contiguous = 0.0f64;
    for _ in 0..40 {
        let s = rng.gen_range(0.25..3.0);
        let t = rng.gen_range(0.0..30.0);
        let c = rng.gen_range(1.5..4.0);
        let z = -10f64.powf(rng.gen_range(-2.0..2.5));
        let f = |cc: f64| gauss_2f1(&HypergeometricInput::new(s, t, cc, z)?);
        let (fm, f0, fp) = (f(c - 1.0)?, f(c)?, f(c + 1.0)?);
        let t1 = c * (c - 1.0) * (z - 1.0) * fm;
        let t2 = c * (c - 1.0 - (2.0 * c - 2.0 * s - 1.0) * z) * f0;
        let t3 = ((c - s) * (c - s) + t * t) * z * fp;
        let scale = t1.abs().max(t2.abs()).max(t3.abs());
        contiguous = contiguous.max((t1 + t2 + t3).abs() / scale);
    }
    let mut derivative = 0.0f64;
    for _ in 0..30 {
        let inp = random_input(&mut rng, 20.0, 50.0);
        let h = 1e-5 * inp.x.abs().max(1.0);
        let at = |x: f64| gauss_2f1(&inp.with_x(x)?);
        let up = h.min(inp.x.abs());
        let fd = (at(inp.x + up)? - at(inp.x - h)?) / (h + up);
        let exact = gauss_2f1_derivative(&inp)?;
        let scale = exact.abs().max(at(inp.x)?.abs() / inp.x.abs().max(1.0));
        derivative = derivative.max((fd - exact).abs() / scale);
    }
    let ok = oracle < 1e-10 && contiguous < 1e-8 && derivative < 1e-6;
    Ok((ok, format!("oracle {oracle:.1e}, contiguous {contiguous:.1e}, derivative {derivative:.1e}")))
}

fn orthant_rho(n: usize) -> Vec<Complex64> {
    let c = Complex64::new;
    if n == 2 {
        vec![c(-0.5, 0.5), c(-0.5, -0.5)]
    } else {
        let a = -1.0 / 3f64.sqrt();
        let s = 1.0 / 2f64.sqrt();
        vec![c(a * s, s * s), c(a * s, -s * s), c(a * s, 0.0)]
    }
}

fn orthant_quadrature(p: &HomogeneousPolynomial, rho: &[Complex64]) -> Complex64 {
    let d = p.degree as i32;
    let fact: f64 = (1..=d + rho.len() as i32 - 1).map(f64::from).product();
    if rho.len() == 2 {
        // Exact radial integral, quarter circle of directions.
        return integrate_adaptive(
            |phi| {
                let e = [phi.cos(), phi.sin()];
                let q = rho[0] * e[0] + rho[1] * e[1];
                (-q).powi(-d - 2) * fact * p.evaluate(&e)
            },
            0.0, 0.5 * PI, 1e-300, 1e-12,
        )
        .unwrap();
    }
    integrate_adaptive(
        |theta| {
            integrate_adaptive(
                |phi| {
                    let e = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                    let q: Complex64 = rho.iter().zip(&e).map(|(r, x)| r * x).sum();
                    (-q).powi(-d - 3) * fact * p.evaluate(&e) * theta.sin()
                },
                0.0, 0.5 * PI, 1e-300, 1e-12,
            )
            .unwrap()
        },
        0.0, 0.5 * PI, 1e-300, 1e-12,
    )
    .unwrap()
}

fn corner() -> Outcome {
    let mut quad = 0.0f64;
    let mut scaling = 0.0f64;
    for n in 2..=3 {
        let rho = orthant_rho(n);
        let dir = sample_admissible(&ConeSpec::orthant(n)?, 1, 3).remove(0);
        for d in 0..=4u32 {
            for p in harmonic_basis(n, d)? {
                let exact = laplace_orthant_closed_form(&p, &rho)?;
                let q = orthant_quadrature(&p, &rho);
                quad = quad.max((exact - q).norm() / exact.norm().max(p.norm()));
                let a = laplace_orthant_closed_form(&p, &dir.rho0)?;
                for s in [0.3, 2.0, 7.5] {
                    let scaled: Vec<Complex64> = dir.rho0.iter().map(|r| r * s).collect();
                    let b = laplace_orthant_closed_form(&p, &scaled)?;
                    let expected = a * f64::powi(s, -(d as i32) - n as i32);
                    scaling = scaling.max((b - expected).norm() / expected.norm());
                }
            }
        }
    }
    let cones = [
        ConeSpec::sector(0.0, PI / 3.0)?,
        ConeSpec::sector(0.0, PI / 2.0)?,
        ConeSpec::sector(0.0, 2.0 * PI / 3.0)?,
        ConeSpec::orthant(2)?,
    ];
    let mut weakest = f64::INFINITY;
    let mut witnessed = 0;
    for cone in &cones {
        for d in 0..=4 {
            for p in harmonic_basis(2, d)? {
                let rep = nonvanishing_scan(&p, cone, 100, 7)?;
                weakest = weakest.min(rep.relative_max());
                if rep.relative_max() > 1e-6 {
                    witnessed += 1;
                }
            }
        }
    }
    let ok = quad < 1e-8 && scaling < 1e-13 && weakest > 1e-6;
    Ok((
        ok,
        format!(
            "closed form vs quadrature {quad:.1e}, scaling law {scaling:.1e}, {witnessed}/36 scans witnessed (weakest {weakest:.2e})"
        ),
    ))
}

fn far_field() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for n in 2..=3 {
        for l in [1.0, 5.0, 20.0] {
            let p = RadialProblem::new(n, 1.0, 0.5, 1)?;
            worst = worst.max(farfield_decay_check(&p, l, 10.0, 1e3, 60)?.slope);
        }
    }
    Ok((worst <= 0.05, format!("max log-log slope {worst:.4} (need <= 0.05)")))
}

fn leading_term() -> Outcome {
    let cubic = HomogeneousPolynomial::from_terms(2, 3, &[(1.0, vec![3, 0]), (-3.0, vec![1, 2])])?;
    let quadratic =
        HomogeneousPolynomial::from_terms(3, 2, &[(1.0, vec![2, 0, 0]), (-1.0, vec![0, 0, 2]), (3.0, vec![1, 1, 0])])?;
    let mut ok = true;
    let mut lines = Vec::new();
    for (p, x0) in [(&cubic, vec![0.2, 1.1]), (&quadratic, vec![0.3, -0.2, 1.0])] {
        for eps in [1e-2, 1e-4] {
            let f = |x: &[f64]| {
                let y: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
                p.evaluate(&y) + eps * y.iter().map(|v| v.sin()).product::<f64>() * (y[0] + y[1]).sin()
            };
            let lt = leading_term_check(&f, &x0, FitOptions::default())?;
            ok &= lt.degree == p.degree && lt.defect < 10.0 * eps;
            lines.push(format!("n={} N={} eps={eps:.0e} defect {:.1e}", p.n, lt.degree, lt.defect));
        }
    }
    Ok((ok, lines.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("conjugation identity", conjugation),
        ("Green identity", green),
        ("radial eigenvalues", roots_exist),
        ("asymptotic model", asymptotics),
        ("curves vs determinant", curves_match_roots),
        ("positivity", positivity),
        ("flavour identity", flavour),
        ("hypergeometric engine", hypergeometric),
        ("corner transforms", corner),
        ("far-field decay", far_field),
        ("harmonic leading term", leading_term),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("criterion {:>2} {}: {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
