//! Harmonic homogeneous polynomials and their Laplace transforms over cones.
//!
//! For a cone `C` and a complex direction `rho0` with `rho0 · rho0 = 0` whose
//! real part points out of `C`, the transform is `∫_C exp(rho0 · x) P(x) dx`.
//! Orthants use the factorized closed form; planar sectors reduce to an
//! angular integral after the exact radial integration.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

/// Exponent vectors of total degree `degree` in `n` variables, lexicographically descending.
pub fn monomials(n: usize, degree: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials(n - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// A homogeneous polynomial with coefficients in [`monomials`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPolynomial {
    pub n: usize,
    pub degree: u32,
    pub coefficients: Vec<f64>,
}

impl HomogeneousPolynomial {
    pub fn new(n: usize, degree: u32, coefficients: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let expected = monomials(n, degree).len();
        if coefficients.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} in {n} variables has {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(Self { n, degree, coefficients })
    }

    pub fn zero(n: usize, degree: u32) -> Self {
        let len = monomials(n, degree).len();
        Self { n, degree, coefficients: vec![0.0; len] }
    }

    /// Builds from `(coefficient, exponent)` pairs; repeated exponents add up.
    pub fn from_terms(n: usize, degree: u32, terms: &[(f64, Vec<u32>)]) -> Result<Self> {
        let mut p = Self::zero(n, degree);
        let exps = p.exponents();
        for (c, e) in terms {
            let i = exps.iter().position(|x| x == e).ok_or_else(|| {
                Error::InvalidParameter(format!("exponent {e:?} is not of degree {degree} in {n} variables"))
            })?;
            p.coefficients[i] += c;
        }
        Ok(p)
    }

    pub fn exponents(&self) -> Vec<Vec<u32>> {
        monomials(self.n, self.degree)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        // Walks the monomials in storage order, carrying partial products.
        fn walk(x: &[f64], left: u32, prefix: f64, coeffs: &[f64], next: &mut usize) -> f64 {
            if x.len() == 1 {
                let v = coeffs[*next] * prefix * x[0].powi(left as i32);
                *next += 1;
                return v;
            }
            (0..=left)
                .rev()
                .map(|k| walk(&x[1..], left - k, prefix * x[0].powi(k as i32), coeffs, next))
                .sum()
        }
        let mut next = 0;
        walk(&x[..self.n], self.degree, 1.0, &self.coefficients, &mut next)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    /// `Δ P`, of degree `degree - 2` (the zero constant when `degree < 2`).
    pub fn laplacian(&self) -> Self {
        if self.degree < 2 {
            return Self::zero(self.n, 0);
        }
        let mut out = Self::zero(self.n, self.degree - 2);
        let target = out.exponents();
        for (e, c) in self.exponents().iter().zip(&self.coefficients) {
            for j in 0..self.n {
                if e[j] >= 2 {
                    let mut d = e.clone();
                    d[j] -= 2;
                    let i = target.iter().position(|x| *x == d).expect("lower monomial");
                    out.coefficients[i] += c * f64::from(e[j] * (e[j] - 1));
                }
            }
        }
        out
    }

    /// Exact check of `Δ P = 0` in integer arithmetic; false if any
    /// coefficient is not an integer.
    pub fn is_exactly_harmonic(&self) -> bool {
        if self.coefficients.iter().any(|c| c.fract() != 0.0 || c.abs() > 1e15) {
            return false;
        }
        if self.degree < 2 {
            return true;
        }
        let target = monomials(self.n, self.degree - 2);
        let mut acc = vec![0i128; target.len()];
        for (e, c) in self.exponents().iter().zip(&self.coefficients) {
            for j in 0..self.n {
                if e[j] >= 2 {
                    let mut d = e.clone();
                    d[j] -= 2;
                    let i = target.iter().position(|x| *x == d).expect("lower monomial");
                    acc[i] += *c as i128 * i128::from(e[j] * (e[j] - 1));
                }
            }
        }
        acc.iter().all(|v| *v == 0)
    }

    /// `x -> P(M x)` for a square matrix `M` given by rows.
    pub fn compose_linear(&self, m: &[Vec<f64>]) -> Self {
        let n = self.n;
        let mut out = Self::zero(n, self.degree);
        let target = out.exponents();
        for (e, c) in self.exponents().iter().zip(&self.coefficients) {
            if *c == 0.0 {
                continue;
            }
            // Expand Π_j (Σ_k m[j][k] y_k)^{e_j} term by term.
            let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; n], *c)];
            for j in 0..n {
                for _ in 0..e[j] {
                    let mut next = Vec::with_capacity(terms.len() * n);
                    for (exp, v) in &terms {
                        for k in 0..n {
                            if m[j][k] != 0.0 {
                                let mut x = exp.clone();
                                x[k] += 1;
                                next.push((x, v * m[j][k]));
                            }
                        }
                    }
                    terms = next;
                }
            }
            for (exp, v) in terms {
                let i = target.iter().position(|x| *x == exp).expect("same degree");
                out.coefficients[i] += v;
            }
        }
        out
    }

    /// `a P + b Q`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.n != other.n || self.degree != other.degree {
            return Err(Error::InvalidParameter("polynomials of different shape".into()));
        }
        Ok(Self {
            n: self.n,
            degree: self.degree,
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(p, q)| a * p + b * q)
                .collect(),
        })
    }
}

/// Basis of the harmonic homogeneous polynomials of degree `degree` in `n`
/// variables, with integer coefficients.
///
/// In the plane this is `Re (x + iy)^N, Im (x + iy)^N`; otherwise the rational
/// null space of the Laplacian on the coefficient space.
pub fn harmonic_basis(n: usize, degree: u32) -> Result<Vec<HomogeneousPolynomial>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 2")));
    }
    let basis = if n == 2 {
        planar_basis(degree)
    } else {
        null_space_basis(n, degree)
    };
    debug_assert!(basis.iter().all(HomogeneousPolynomial::is_exactly_harmonic));
    Ok(basis)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

fn planar_basis(degree: u32) -> Vec<HomogeneousPolynomial> {
    if degree == 0 {
        return vec![HomogeneousPolynomial { n: 2, degree: 0, coefficients: vec![1.0] }];
    }
    // Coefficient of x^{N-k} y^k in (x + iy)^N is C(N, k) i^k.
    let mut re = HomogeneousPolynomial::zero(2, degree);
    let mut im = HomogeneousPolynomial::zero(2, degree);
    for k in 0..=degree {
        let c = binomial(degree, k).round();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            re.coefficients[k as usize] = sign * c;
        } else {
            im.coefficients[k as usize] = sign * c;
        }
    }
    vec![re, im]
}

type Q = Ratio<i128>;

fn null_space_basis(n: usize, degree: u32) -> Vec<HomogeneousPolynomial> {
    let cols = monomials(n, degree);
    if degree < 2 {
        return (0..cols.len())
            .map(|i| {
                let mut p = HomogeneousPolynomial::zero(n, degree);
                p.coefficients[i] = 1.0;
                p
            })
            .collect();
    }
    let rows = monomials(n, degree - 2);
    let mut a = vec![vec![Q::zero(); cols.len()]; rows.len()];
    for (c, e) in cols.iter().enumerate() {
        for j in 0..n {
            if e[j] >= 2 {
                let mut d = e.clone();
                d[j] -= 2;
                let r = rows.iter().position(|x| *x == d).expect("lower monomial");
                a[r][c] += Q::from_integer(i128::from(e[j] * (e[j] - 1)));
            }
        }
    }
    // Reduced row echelon form.
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols.len() {
        let Some(p) = (row..rows.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = Q::one() / a[row][col];
        for v in a[row].iter_mut() {
            *v *= inv;
        }
        for r in 0..rows.len() {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col];
                for k in 0..cols.len() {
                    let sub = f * a[row][k];
                    a[r][k] -= sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols.len()).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols.len()];
            v[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f];
            }
            let lcm = v.iter().fold(1i128, |l, q| num_integer_lcm(l, *q.denom()));
            let ints: Vec<i128> = v.iter().map(|q| (q * Q::from_integer(lcm)).to_integer()).collect();
            let g = ints.iter().fold(0i128, |g, x| num_integer_gcd(g, x.abs()));
            HomogeneousPolynomial {
                n,
                degree,
                coefficients: ints.iter().map(|x| (x / g.max(1)) as f64).collect(),
            }
        })
        .collect()
}

fn num_integer_gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        num_integer_gcd(b, a % b)
    }
}

fn num_integer_lcm(a: i128, b: i128) -> i128 {
    (a / num_integer_gcd(a, b) * b).abs()
}

/// A convex cone with vertex at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConeSpec {
    /// Planar sector between the rays at angles `theta1 < theta2`.
    Sector { theta1: f64, theta2: f64 },
    /// Image of the positive orthant under an orthogonal matrix, given by rows.
    Orthant { rotation: Vec<Vec<f64>> },
}

impl ConeSpec {
    pub fn sector(theta1: f64, theta2: f64) -> Result<Self> {
        let opening = theta2 - theta1;
        if !(opening > 0.0 && opening < PI) {
            return Err(Error::InvalidParameter(format!("sector opening {opening} not in (0, pi)")));
        }
        Ok(ConeSpec::Sector { theta1, theta2 })
    }

    pub fn orthant(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension {n} < 2")));
        }
        Self::rotated_orthant((0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect())
    }

    pub fn rotated_orthant(rotation: Vec<Vec<f64>>) -> Result<Self> {
        let n = rotation.len();
        if n < 2 || rotation.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("rotation must be square of size >= 2".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("rotation is not orthogonal".into()));
                }
            }
        }
        Ok(ConeSpec::Orthant { rotation })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeSpec::Sector { .. } => 2,
            ConeSpec::Orthant { rotation } => rotation.len(),
        }
    }

    /// Unit vectors spanning the cone.
    pub fn generators(&self) -> Vec<Vec<f64>> {
        match self {
            ConeSpec::Sector { theta1, theta2 } => {
                vec![vec![theta1.cos(), theta1.sin()], vec![theta2.cos(), theta2.sin()]]
            }
            ConeSpec::Orthant { rotation } => {
                let n = rotation.len();
                (0..n).map(|j| (0..n).map(|i| rotation[i][j]).collect()).collect()
            }
        }
    }
}

fn dot(rho: &[Complex64], x: &[f64]) -> Complex64 {
    rho.iter().zip(x).map(|(r, xi)| r * xi).sum()
}

/// A direction `rho0` together with the margin `gamma` in
/// `Re rho0 · x <= -gamma |x|` on the cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleDirection {
    pub rho0: Vec<Complex64>,
    pub gamma: f64,
}

impl AdmissibleDirection {
    /// Validates `rho0` against the cone generators.
    pub fn new(cone: &ConeSpec, rho0: Vec<Complex64>) -> Result<Self> {
        let gamma = margin(cone, &rho0)?;
        if gamma <= 0.0 {
            return Err(Error::Domain(format!("direction is not admissible: margin {gamma}")));
        }
        Ok(Self { rho0, gamma })
    }

    pub fn isotropy_defect(&self) -> f64 {
        self.rho0.iter().map(|r| r * r).sum::<Complex64>().norm()
    }

    pub fn norm(&self) -> f64 {
        self.rho0.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `min_g (-Re rho0 · g)` over the generators; positive iff admissible.
pub fn margin(cone: &ConeSpec, rho0: &[Complex64]) -> Result<f64> {
    if rho0.len() != cone.dim() {
        return Err(Error::InvalidParameter(format!(
            "direction has {} components, cone has dimension {}",
            rho0.len(),
            cone.dim()
        )));
    }
    Ok(cone
        .generators()
        .iter()
        .map(|g| -dot(rho0, g).re)
        .fold(f64::INFINITY, f64::min))
}

/// Draws `count` admissible isotropic unit directions `(a + i b) / sqrt 2`
/// with `a, b` orthonormal and `a` pointing out of the cone.
pub fn sample_admissible(cone: &ConeSpec, count: usize, seed: u64) -> Vec<AdmissibleDirection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cone.dim();
    (0..count)
        .map(|_| {
            let a: Vec<f64> = match cone {
                ConeSpec::Sector { theta1, theta2 } => {
                    // cos(phi - theta) < 0 at both rays for phi in (theta2 + pi/2, theta1 + 3pi/2).
                    let (lo, hi) = (theta2 + 0.5 * PI, theta1 + 1.5 * PI);
                    let pad = 0.05 * (hi - lo);
                    let phi = rng.gen_range(lo + pad..hi - pad);
                    vec![phi.cos(), phi.sin()]
                }
                ConeSpec::Orthant { rotation } => {
                    let z: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.05..1.0)).collect();
                    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (0..n).map(|i| (0..n).map(|j| rotation[i][j] * z[j] / norm).sum()).collect()
                }
            };
            let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let a: Vec<f64> = a.iter().map(|v| v / norm_a).collect();
            let b: Vec<f64> = if n == 2 {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                vec![-sign * a[1], sign * a[0]]
            } else {
                loop {
                    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    // Two Gram-Schmidt passes keep a · b at rounding level.
                    for _ in 0..2 {
                        let proj: f64 = b.iter().zip(&a).map(|(x, y)| x * y).sum();
                        for (bi, ai) in b.iter_mut().zip(&a) {
                            *bi -= proj * ai;
                        }
                    }
                    let norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.1 {
                        break b.iter().map(|v| v / norm).collect();
                    }
                }
            };
            let rho0: Vec<Complex64> = a
                .iter()
                .zip(&b)
                .map(|(x, y)| Complex64::new(*x, *y) * std::f64::consts::FRAC_1_SQRT_2)
                .collect();
            let direction = AdmissibleDirection::new(cone, rho0);
            assert!(direction.is_ok(), "sampler produced an inadmissible direction");
            direction.expect("checked above")
        })
        .collect()
}

/// `∫_{[0, ∞)^n} exp(rho0 · x) P(x) dx = Σ_α c_α Π_j α_j! / (-rho0_j)^{α_j + 1}`.
pub fn laplace_orthant_closed_form(p: &HomogeneousPolynomial, rho0: &[Complex64]) -> Result<Complex64> {
    if rho0.len() != p.n {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    if let Some(j) = rho0.iter().position(|r| !(r.re < 0.0)) {
        return Err(Error::Domain(format!("Re rho0[{j}] = {} is not negative", rho0[j].re)));
    }
    Ok(p.exponents()
        .iter()
        .zip(&p.coefficients)
        .filter(|(_, c)| **c != 0.0)
        .map(|(e, c)| {
            e.iter()
                .zip(rho0)
                .map(|(&k, r)| factorial(k) / (-r).powi(k as i32 + 1))
                .product::<Complex64>()
                * c
        })
        .sum())
}

/// Orthant transform for a rotated orthant `{R y : y >= 0}`.
pub fn laplace_orthant(p: &HomogeneousPolynomial, rho0: &[Complex64], rotation: &[Vec<f64>]) -> Result<Complex64> {
    let n = p.n;
    let rotated: Vec<Complex64> = (0..n).map(|j| (0..n).map(|i| rho0[i] * rotation[i][j]).sum()).collect();
    laplace_orthant_closed_form(&p.compose_linear(rotation), &rotated)
}

/// Planar sector transform `(N + 1)! ∫ P(e_theta) (-rho0 · e_theta)^{-N-2} dtheta`.
pub fn laplace_sector(p: &HomogeneousPolynomial, rho0: &[Complex64], theta1: f64, theta2: f64) -> Result<Complex64> {
    if p.n != 2 || rho0.len() != 2 {
        return Err(Error::InvalidParameter("sector transforms are planar".into()));
    }
    let cone = ConeSpec::sector(theta1, theta2)?;
    let gamma = margin(&cone, rho0)?;
    if gamma <= 0.0 {
        return Err(Error::Domain(format!("direction is not admissible on the sector: margin {gamma}")));
    }
    let power = -(p.degree as i32) - 2;
    let scale = factorial(p.degree + 1);
    integrate_adaptive(
        |theta| {
            let e = [theta.cos(), theta.sin()];
            (-dot(rho0, &e)).powi(power) * p.evaluate(&e) * scale
        },
        theta1,
        theta2,
        1e-300,
        1e-13,
    )
}

/// Transform over any supported cone.
pub fn laplace_transform(p: &HomogeneousPolynomial, rho0: &[Complex64], cone: &ConeSpec) -> Result<Complex64> {
    match cone {
        ConeSpec::Sector { theta1, theta2 } => laplace_sector(p, rho0, *theta1, *theta2),
        ConeSpec::Orthant { rotation } => laplace_orthant(p, rho0, rotation),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub polynomial: HomogeneousPolynomial,
    pub cone: ConeSpec,
    pub samples: usize,
    pub seed: u64,
    pub coefficient_norm: f64,
    pub max_abs: f64,
    pub min_abs: f64,
    /// Direction attaining `max_abs` and its transform value.
    pub witness: AdmissibleDirection,
    pub witness_value: Complex64,
}

impl ScanReport {
    /// `max |L| / |P|`.
    pub fn relative_max(&self) -> f64 {
        self.max_abs / self.coefficient_norm
    }
}

/// Evaluates the transform at `samples` seeded admissible directions.
pub fn nonvanishing_scan(p: &HomogeneousPolynomial, cone: &ConeSpec, samples: usize, seed: u64) -> Result<ScanReport> {
    if p.is_zero() {
        return Err(Error::InvalidParameter("polynomial is zero".into()));
    }
    if p.n != cone.dim() {
        return Err(Error::InvalidParameter("polynomial and cone dimensions differ".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let directions = sample_admissible(cone, samples, seed);
    let values = directions
        .par_iter()
        .map(|d| laplace_transform(p, &d.rho0, cone))
        .collect::<Result<Vec<_>>>()?;
    let (best, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonempty");
    Ok(ScanReport {
        polynomial: p.clone(),
        cone: cone.clone(),
        samples,
        seed,
        coefficient_norm: p.norm(),
        max_abs: values[best].norm(),
        min_abs: values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min),
        witness: directions[best].clone(),
        witness_value: values[best],
    })
}

/// Parameters of the shrinking-stencil Taylor fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Half-width of the largest stencil; the others are `r/2` and `r/4`.
    pub radius: f64,
    /// Total degree of the fitted Taylor polynomial.
    pub fit_degree: u32,
    pub points_per_axis: usize,
    /// Homogeneous parts with coefficient norm below this are treated as zero.
    pub tolerance: f64,
    /// Allowed relative change of a part's norm between `r/2` and `r/4`.
    pub stability: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            radius: 0.2,
            fit_degree: 4,
            points_per_axis: 7,
            tolerance: 1e-8,
            stability: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerm {
    pub degree: u32,
    /// Lowest nonvanishing homogeneous part from the smallest stencil.
    pub polynomial: HomogeneousPolynomial,
    /// Coefficient norm of its Laplacian.
    pub defect: f64,
    /// `norms[k][j]`: norm of the degree-`k` part at stencil `j`.
    pub norms: Vec<[f64; 3]>,
}

/// Finds the lowest-order homogeneous part of the Taylor expansion of `f` at `x0`.
pub fn leading_term_check(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x0: &[f64],
    options: FitOptions,
) -> Result<LeadingTerm> {
    let n = x0.len();
    if n < 2 || options.points_per_axis < 2 || !(options.radius > 0.0) {
        return Err(Error::InvalidParameter("bad fit configuration".into()));
    }
    let degrees: Vec<Vec<Vec<u32>>> = (0..=options.fit_degree).map(|k| monomials(n, k)).collect();
    let unknowns: usize = degrees.iter().map(Vec::len).sum();
    let k = options.points_per_axis;
    let total = k.pow(n as u32);
    if total < unknowns {
        return Err(Error::IllConditioned(format!("{total} samples for {unknowns} coefficients")));
    }
    let stencil: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let i = idx % k;
                    idx /= k;
                    -1.0 + 2.0 * i as f64 / (k - 1) as f64
                })
                .collect()
        })
        .collect();
    let design = DMatrix::from_fn(total, unknowns, |row, col| {
        let mut c = col;
        for exps in &degrees {
            if c < exps.len() {
                return exps[c].iter().zip(&stencil[row]).map(|(&e, x)| x.powi(e as i32)).product();
            }
            c -= exps.len();
        }
        unreachable!()
    });
    let svd = design.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if smin <= 1e-12 * smax {
        return Err(Error::IllConditioned(format!("design matrix condition {:e}", smax / smin)));
    }
    let fits: Vec<Vec<HomogeneousPolynomial>> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&shrink| {
            let r = options.radius * shrink;
            let rhs = DVector::from_iterator(
                total,
                stencil.iter().map(|xi| {
                    let x: Vec<f64> = x0.iter().zip(xi).map(|(a, b)| a + r * b).collect();
                    f(&x)
                }),
            );
            let sol = svd.solve(&rhs, 0.0).expect("svd with both factors");
            let mut offset = 0;
            degrees
                .iter()
                .enumerate()
                .map(|(deg, exps)| {
                    let scale = r.powi(deg as i32);
                    let coefficients = (0..exps.len()).map(|i| sol[offset + i] / scale).collect();
                    offset += exps.len();
                    HomogeneousPolynomial { n, degree: deg as u32, coefficients }
                })
                .collect()
        })
        .collect();
    let norms: Vec<[f64; 3]> = (0..degrees.len())
        .map(|d| [fits[0][d].norm(), fits[1][d].norm(), fits[2][d].norm()])
        .collect();
    let found = norms.iter().position(|nm| {
        nm[2] > options.tolerance && (nm[1] - nm[2]).abs() <= options.stability * nm[2]
    });
    let Some(degree) = found else {
        return Err(Error::Numeric(format!(
            "no stable nonvanishing part up to degree {}",
            options.fit_degree
        )));
    };
    let polynomial = fits[2][degree].clone();
    Ok(LeadingTerm {
        degree: degree as u32,
        defect: polynomial.laplacian().norm(),
        polynomial,
        norms,
    })
}
