//! Radial transmission eigenvalues of a constant potential on a hyperbolic ball.
//!
//! Inside the ball `rho < P` the perturbed and free radial equations
//! `(H_0 + lambda^nu V0 - lambda) v = 0` and `(H_0 - lambda) w = 0` have the
//! regular solutions `v = F(s - i t_v, s + i t_v; n/2; -rho)` and
//! `w = F(s - i t_w, s + i t_w; n/2; -rho)` with `s = (n - 1)/2`,
//! `t_w² = lambda` and `t_v² = lambda - lambda^nu V0`. Matching values and
//! derivatives at `rho = P` gives a 2x2 system whose determinant vanishes
//! exactly at the radial transmission eigenvalues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cap_radius;
use crate::special_functions::{gauss_2f1, HypergeometricInput, DEFAULT_T_ENVELOPE};

/// A constant potential `V0` on the ball of hyperbolic radius `radius` in `H^n`.
///
/// `nu = 1` is the Helmholtz flavour (potential enters as `lambda V0`), which
/// needs `V0 < 1`; `nu = 0` is the Schrödinger flavour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub n: usize,
    pub radius: f64,
    pub v0: f64,
    pub nu: u8,
}

impl RadialProblem {
    pub fn new(n: usize, radius: f64, v0: f64, nu: u8) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension n = {n} must be at least 2")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius R = {radius} must be positive")));
        }
        if nu > 1 {
            return Err(Error::InvalidParameter(format!("nu = {nu} must be 0 or 1")));
        }
        if !v0.is_finite() || v0 == 0.0 {
            return Err(Error::InvalidParameter(format!("V0 = {v0} must be finite and nonzero")));
        }
        if nu == 1 && v0 >= 1.0 {
            return Err(Error::InvalidParameter(format!("Helmholtz flavour needs V0 < 1, got {v0}")));
        }
        Ok(Self { n, radius, v0, nu })
    }

    /// Algebraic radius `P = (cosh R - 1) / 2` of the ball.
    pub fn cap(&self) -> f64 {
        cap_radius(self.radius).expect("radius validated")
    }

    fn s(&self) -> f64 {
        0.5 * (self.n as f64 - 1.0)
    }

    fn c(&self) -> f64 {
        0.5 * self.n as f64
    }

    /// `t_v² = lambda - lambda^nu V0`; negative values continue to imaginary `t`.
    pub fn t_squared_v(&self, lambda: f64) -> f64 {
        if self.nu == 1 {
            lambda * (1.0 - self.v0)
        } else {
            lambda - self.v0
        }
    }

    /// Largest `t` parameter met at energy `lambda`.
    pub fn t_max(&self, lambda: f64) -> f64 {
        self.t_squared_v(lambda).abs().sqrt().max(lambda.abs().sqrt())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be nonnegative")));
    }
    Ok(())
}

/// `F(s - it, s + it; n/2; -rho)` for signed `t²`.
fn radial(n: usize, t_sq: f64, rho: f64) -> Result<f64> {
    let s = 0.5 * (n as f64 - 1.0);
    gauss_2f1(&HypergeometricInput::from_t_squared(s, t_sq, 0.5 * n as f64, -rho)?)
}

/// `d/drho` of [`radial`]: `-((s² + t²) / (n/2)) F(s + 1 -/+ it; n/2 + 1; -rho)`.
fn radial_derivative(n: usize, t_sq: f64, rho: f64) -> Result<f64> {
    let s = 0.5 * (n as f64 - 1.0);
    let c = 0.5 * n as f64;
    let g = gauss_2f1(&HypergeometricInput::from_t_squared(s + 1.0, t_sq, c + 1.0, -rho)?)?;
    Ok(-(s * s + t_sq) / c * g)
}

pub fn solution_v(prob: &RadialProblem, lambda: f64, rho: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    radial(prob.n, prob.t_squared_v(lambda), rho)
}

pub fn solution_w(prob: &RadialProblem, lambda: f64, rho: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    radial(prob.n, lambda, rho)
}

/// `v'(rho)`.
pub fn solution_v_derivative(prob: &RadialProblem, lambda: f64, rho: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    radial_derivative(prob.n, prob.t_squared_v(lambda), rho)
}

/// `w'(rho)`.
pub fn solution_w_derivative(prob: &RadialProblem, lambda: f64, rho: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_rho(rho)?;
    radial_derivative(prob.n, lambda, rho)
}

/// `v'(P)` at the boundary of the ball.
pub fn derivative_v(prob: &RadialProblem, lambda: f64) -> Result<f64> {
    solution_v_derivative(prob, lambda, prob.cap())
}

/// `w'(P)` at the boundary of the ball.
pub fn derivative_w(prob: &RadialProblem, lambda: f64) -> Result<f64> {
    solution_w_derivative(prob, lambda, prob.cap())
}

/// Determinant of the matching system at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterminantSample {
    pub lambda: f64,
    pub det_value: f64,
    /// `(F_v, F_w, c_v G_v, c_w G_w)` at `rho = P`.
    pub components: [f64; 4],
}

impl DeterminantSample {
    /// Magnitude of the two products that cancel at a root.
    pub fn scale(&self) -> f64 {
        let [fv, fw, gv, gw] = self.components;
        (fv * gw).abs() + (fw * gv).abs()
    }

    pub fn relative(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.det_value / s
        }
    }
}

/// `F_v c_w G_w - F_w c_v G_v` for a ball of algebraic radius `cap`, where
/// `G = F(s + 1 -/+ it; n/2 + 1; -P)` and `c = s² + t²`. The factor `2/n` and
/// the overall sign of the derivative rows are dropped.
pub fn matching_determinant(n: usize, cap: f64, t_sq_v: f64, t_sq_w: f64) -> Result<DeterminantSample> {
    let s = 0.5 * (n as f64 - 1.0);
    let c = 0.5 * n as f64;
    let shifted = |t_sq: f64| {
        gauss_2f1(&HypergeometricInput::from_t_squared(s + 1.0, t_sq, c + 1.0, -cap)?)
    };
    let fv = radial(n, t_sq_v, cap)?;
    let fw = radial(n, t_sq_w, cap)?;
    let gv = (s * s + t_sq_v) * shifted(t_sq_v)?;
    let gw = (s * s + t_sq_w) * shifted(t_sq_w)?;
    Ok(DeterminantSample {
        lambda: t_sq_w,
        det_value: fv * gw - fw * gv,
        components: [fv, fw, gv, gw],
    })
}

pub fn determinant(prob: &RadialProblem, lambda: f64) -> Result<DeterminantSample> {
    check_lambda(lambda)?;
    matching_determinant(prob.n, prob.cap(), prob.t_squared_v(lambda), lambda)
}

/// One refined root of the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub index: usize,
    pub lambda: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// `|det(lambda)|` relative to the magnitude of its two products.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueList {
    pub problem: RadialProblem,
    pub lambda_max: f64,
    pub scan_step: f64,
    pub roots: Vec<Root>,
    /// Set when two roots lie within two scan steps, so a pair may have been missed.
    pub coarse_grid: bool,
}

impl EigenvalueList {
    pub fn lambdas(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda,sqrt_lambda,det_residual\n");
        for r in &self.roots {
            out.push_str(&format!(
                "{},{:.15e},{:.15e},{:.3e}\n",
                r.index,
                r.lambda,
                r.lambda.sqrt(),
                r.residual
            ));
        }
        out
    }
}

/// Sign changes of the determinant on the grid `scan_step, 2 scan_step, ...,
/// lambda_max`, each refined by bisection.
pub fn find_eigenvalues(prob: &RadialProblem, lambda_max: f64, scan_step: f64) -> Result<EigenvalueList> {
    find_eigenvalues_within(prob, lambda_max, scan_step, DEFAULT_T_ENVELOPE)
}

/// As [`find_eigenvalues`] with an explicit bound on the hypergeometric `t`.
pub fn find_eigenvalues_within(
    prob: &RadialProblem,
    lambda_max: f64,
    scan_step: f64,
    t_envelope: f64,
) -> Result<EigenvalueList> {
    check_lambda(lambda_max)?;
    if !(scan_step > 0.0 && scan_step < lambda_max) {
        return Err(Error::InvalidParameter(format!(
            "scan step {scan_step} must lie in (0, lambda_max)"
        )));
    }
    let t = prob.t_max(lambda_max);
    if t > t_envelope {
        return Err(Error::Domain(format!(
            "lambda_max = {lambda_max} needs t = {t:.2} beyond the validated envelope {t_envelope}"
        )));
    }
    let steps = (lambda_max / scan_step).floor() as usize;
    let grid: Vec<f64> = (1..=steps).map(|j| j as f64 * scan_step).collect();
    let values = grid
        .par_iter()
        .map(|&l| determinant(prob, l).map(|d| d.det_value))
        .collect::<Result<Vec<f64>>>()?;

    let brackets: Vec<(f64, f64, f64)> = (1..grid.len())
        .filter(|&j| values[j - 1].signum() != values[j].signum() || values[j] == 0.0)
        .filter(|&j| values[j - 1] != 0.0)
        .map(|j| (grid[j - 1], grid[j], values[j - 1]))
        .collect();
    let mut roots = brackets
        .par_iter()
        .map(|&(a, b, fa)| bisect(prob, a, b, fa))
        .collect::<Result<Vec<Root>>>()?;
    for (i, r) in roots.iter_mut().enumerate() {
        r.index = i + 1;
    }
    let coarse_grid = roots.windows(2).any(|w| w[1].lambda - w[0].lambda < 2.0 * scan_step);
    Ok(EigenvalueList {
        problem: *prob,
        lambda_max,
        scan_step,
        roots,
        coarse_grid,
    })
}

fn bisect(prob: &RadialProblem, mut a: f64, mut b: f64, mut fa: f64) -> Result<Root> {
    let bracket = (a, b);
    let mut iterations = 0;
    let mut best = determinant(prob, b)?;
    while iterations < 200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) <= 1e-14 * m {
            break;
        }
        let d = determinant(prob, m)?;
        iterations += 1;
        if d.det_value == 0.0 {
            a = m;
            b = m;
            best = d;
            break;
        }
        if d.det_value.signum() == fa.signum() {
            a = m;
            fa = d.det_value;
        } else {
            b = m;
        }
        best = d;
    }
    let lambda = 0.5 * (a + b);
    let at = determinant(prob, lambda).unwrap_or(best);
    Ok(Root {
        index: 0,
        lambda,
        bracket,
        iterations,
        residual: at.relative().abs(),
    })
}

/// `M(lambda) = (1 - q) cos(R(sqrt(lambda) + q sqrt(lambda)) - n pi / 2)
///            + (1 + q) sin(R(sqrt(lambda) - q sqrt(lambda)))` with `q = sqrt(1 - V0)`,
/// the oscillating factor of the large-energy determinant in the Helmholtz flavour.
pub fn asymptotic_m(n: usize, radius: f64, v0: f64, lambda: f64) -> f64 {
    let q = (1.0 - v0).sqrt();
    let k = lambda.sqrt();
    let kv = (lambda - lambda * v0).sqrt();
    (1.0 - q) * (radius * (k + kv) - 0.5 * n as f64 * std::f64::consts::PI).cos()
        + (1.0 + q) * (radius * (k - kv)).sin()
}

pub fn asymptotic_model(prob: &RadialProblem, lambda: f64) -> f64 {
    asymptotic_m(prob.n, prob.radius, prob.v0, lambda)
}

/// A Helmholtz energy restated as a Schrödinger problem with potential `lambda0 V0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlavorCheck {
    pub schrodinger: RadialProblem,
    pub helmholtz_det: f64,
    pub schrodinger_det: f64,
}

impl FlavorCheck {
    pub fn difference(&self) -> f64 {
        (self.helmholtz_det - self.schrodinger_det).abs()
    }
}

pub fn helmholtz_to_schrodinger(prob: &RadialProblem, lambda0: f64) -> Result<FlavorCheck> {
    if prob.nu != 1 {
        return Err(Error::InvalidParameter("expected a Helmholtz (nu = 1) problem".into()));
    }
    check_lambda(lambda0)?;
    let schrodinger = RadialProblem::new(prob.n, prob.radius, lambda0 * prob.v0, 0)?;
    Ok(FlavorCheck {
        schrodinger,
        helmholtz_det: determinant(prob, lambda0)?.det_value,
        schrodinger_det: determinant(&schrodinger, lambda0)?.det_value,
    })
}

/// Far-field behaviour of `w` on a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    pub rho: Vec<f64>,
    /// `|w(rho)|² rho^(n-1)`.
    pub weighted: Vec<f64>,
    /// `rho^(n-1) [w² + (s w + rho w')² / t²]`, the amplitude of the oscillation.
    pub envelope: Vec<f64>,
    pub sup_weighted: f64,
    /// Least-squares slope of `ln envelope` against `ln rho`.
    pub slope: f64,
}

/// Samples `w` on `points` log-spaced radii in `[rho_min, rho_max]` and fits the
/// log–log slope of the envelope of `|w|² rho^(n-1)`.
pub fn farfield_decay_check(
    prob: &RadialProblem,
    lambda: f64,
    rho_min: f64,
    rho_max: f64,
    points: usize,
) -> Result<FarFieldReport> {
    check_lambda(lambda)?;
    if !(rho_min > 0.0 && rho_max > rho_min) || points < 2 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < rho_min < rho_max and at least 2 points (got {rho_min}, {rho_max}, {points})"
        )));
    }
    let n = prob.n;
    let s = prob.s();
    let t = lambda.sqrt();
    let (l0, l1) = (rho_min.ln(), rho_max.ln());
    let rho: Vec<f64> = (0..points)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let pairs = rho
        .par_iter()
        .map(|&r| Ok((solution_w(prob, lambda, r)?, solution_w_derivative(prob, lambda, r)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let weight = |r: f64| r.powf(n as f64 - 1.0);
    let weighted: Vec<f64> = rho.iter().zip(&pairs).map(|(r, (w, _))| w * w * weight(*r)).collect();
    let envelope: Vec<f64> = rho
        .iter()
        .zip(&pairs)
        .map(|(r, (w, dw))| {
            let phase = s * w + r * dw;
            weight(*r) * (w * w + phase * phase / (t * t))
        })
        .collect();
    let xs: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|e| e.ln()).collect();
    Ok(FarFieldReport {
        sup_weighted: weighted.iter().cloned().fold(0.0, f64::max),
        slope: fit_slope(&xs, &ys),
        rho,
        weighted,
        envelope,
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

impl RadialProblem {
    /// Sine-factor root count `R sqrt(Lambda) (1 - sqrt(1 - V0)) / pi` below `Lambda`.
    pub fn dominant_zero_count(&self, lambda: f64) -> f64 {
        self.radius * lambda.sqrt() * (1.0 - (1.0 - self.v0).sqrt()).abs() / std::f64::consts::PI
    }

    pub fn s_parameter(&self) -> f64 {
        self.s()
    }

    pub fn c_parameter(&self) -> f64 {
        self.c()
    }
}
