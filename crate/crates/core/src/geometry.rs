//! Models of hyperbolic space.
//!
//! Points live either in the upper half-space `{x_n > 0}` or in the open unit
//! ball. Both carry metric `|dx|² / K²` with conformal factor `K = x_n` and
//! `K = (1 - |y|²) / 2` respectively; [`metric_factor`] returns the reciprocal
//! convention used by the operators (`x_n` and `2 / (1 - |y|²)`).
//!
//! Radial problems use the algebraic radius `rho`, tied to geodesic distance by
//! `cosh r = 2 rho + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    x_prime: Vec<f64>,
    x_n: f64,
}

impl HalfSpacePoint {
    pub fn new(x_prime: Vec<f64>, x_n: f64) -> Result<Self> {
        if !(x_n > 0.0) || !x_n.is_finite() {
            return Err(Error::InvalidPoint(format!("height x_n = {x_n} must be positive")));
        }
        if x_prime.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint("non-finite horizontal coordinate".into()));
        }
        Ok(Self { x_prime, x_n })
    }

    /// Builds a point from all `n` coordinates, the last one being the height.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((&x_n, rest)) => Self::new(rest.to_vec(), x_n),
            None => Err(Error::InvalidPoint("empty coordinate vector".into())),
        }
    }

    /// The point `<0, ..., 0, 1>` of `H^n`.
    pub fn origin(n: usize) -> Self {
        Self {
            x_prime: vec![0.0; n.saturating_sub(1)],
            x_n: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x_prime.len() + 1
    }

    pub fn x_prime(&self) -> &[f64] {
        &self.x_prime
    }

    pub fn height(&self) -> f64 {
        self.x_n
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.x_prime.clone();
        c.push(self.x_n);
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    y: Vec<f64>,
}

impl BallPoint {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidPoint("empty coordinate vector".into()));
        }
        let norm2 = norm_sq(&y);
        if !(norm2 < 1.0) {
            return Err(Error::InvalidPoint(format!(
                "|y| = {} must be below 1",
                norm2.sqrt()
            )));
        }
        Ok(Self { y })
    }

    pub fn origin(n: usize) -> Self {
        Self { y: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.y
    }
}

/// A point in either model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelPoint {
    HalfSpace(HalfSpacePoint),
    Ball(BallPoint),
}

/// Geodesic distance `r` paired with the algebraic radius `rho = (cosh r - 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCoordinate {
    pub r: f64,
    pub rho: f64,
}

impl RadialCoordinate {
    pub fn from_r(r: f64) -> Result<Self> {
        Ok(Self { r, rho: rho_of_r(r)? })
    }

    pub fn from_rho(rho: f64) -> Result<Self> {
        Ok(Self { r: r_of_rho(rho)?, rho })
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidPoint(format!(
            "dimension mismatch: {a} vs {b}"
        )));
    }
    Ok(())
}

/// `arcosh` with the argument clamped to `[1, inf)` to absorb rounding.
fn arcosh_guarded(arg: f64) -> f64 {
    arg.max(1.0).acosh()
}

/// `d(p, q) = arcosh(1 + |p - q|² / (2 p_n q_n))`.
pub fn distance_half_space(p: &HalfSpacePoint, q: &HalfSpacePoint) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let d2 = dist_sq(&p.coords(), &q.coords());
    if d2 == 0.0 {
        return Ok(0.0);
    }
    // For small separations acosh(1 + e) loses digits; 2 asinh(sqrt(e / 2)) does not.
    let e = d2 / (2.0 * p.x_n * q.x_n);
    Ok(if e < 1e-4 {
        2.0 * (0.5 * e).sqrt().asinh()
    } else {
        arcosh_guarded(1.0 + e)
    })
}

/// `d(a, b) = arcosh(1 + 2 |a - b|² / ((1 - |a|²)(1 - |b|²)))`.
pub fn distance_ball(a: &BallPoint, b: &BallPoint) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let d2 = dist_sq(&a.y, &b.y);
    if d2 == 0.0 {
        return Ok(0.0);
    }
    let e = 2.0 * d2 / ((1.0 - norm_sq(&a.y)) * (1.0 - norm_sq(&b.y)));
    Ok(if e < 1e-4 {
        2.0 * (0.5 * e).sqrt().asinh()
    } else {
        arcosh_guarded(1.0 + e)
    })
}

/// Isometry from the ball to the half-space sending the centre to `<0, ..., 0, 1>`:
/// `x = (2 y', 1 - |y|²) / (|y'|² + (1 - y_n)²)`.
pub fn ball_to_half_space(b: &BallPoint) -> Result<HalfSpacePoint> {
    let n = b.dim();
    let y = &b.y;
    let (y_n, y_prime) = (y[n - 1], &y[..n - 1]);
    let denom = norm_sq(y_prime) + (1.0 - y_n) * (1.0 - y_n);
    let x_prime = y_prime.iter().map(|v| 2.0 * v / denom).collect();
    HalfSpacePoint::new(x_prime, (1.0 - norm_sq(y)) / denom)
}

/// Inverse of [`ball_to_half_space`]: `y = (2 x', |x|² - 1) / (|x'|² + (x_n + 1)²)`.
pub fn half_space_to_ball(p: &HalfSpacePoint) -> Result<BallPoint> {
    let x_n = p.x_n;
    let denom = norm_sq(&p.x_prime) + (x_n + 1.0) * (x_n + 1.0);
    let mut y: Vec<f64> = p.x_prime.iter().map(|v| 2.0 * v / denom).collect();
    y.push((norm_sq(&p.x_prime) + x_n * x_n - 1.0) / denom);
    BallPoint::new(y)
}

/// Conformal factor `K`: `x_n` in the half-space, `2 / (1 - |y|²)` in the ball.
pub fn metric_factor(point: &ModelPoint) -> f64 {
    match point {
        ModelPoint::HalfSpace(p) => p.x_n,
        ModelPoint::Ball(b) => 2.0 / (1.0 - norm_sq(&b.y)),
    }
}

pub fn rho_of_r(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius r = {r} must be nonnegative")));
    }
    let s = (0.5 * r).sinh();
    Ok(s * s)
}

pub fn r_of_rho(rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be nonnegative")));
    }
    Ok(2.0 * rho.sqrt().asinh())
}

/// Algebraic radius `P = (cosh R - 1) / 2` of a ball of hyperbolic radius `R`.
pub fn cap_radius(radius: f64) -> Result<f64> {
    rho_of_r(radius)
}

/// Radial volume weight `(rho (rho + 1))^((n - 2) / 2)`, the polar density
/// `sinh^(n-1) r dr` expressed in `rho` with the sphere area dropped.
pub fn radial_weight(n: usize, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension n = {n} must be at least 2")));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be nonnegative")));
    }
    Ok(weight_unchecked(n, rho))
}

pub(crate) fn weight_unchecked(n: usize, rho: f64) -> f64 {
    match n {
        2 => 1.0,
        4 => rho * (rho + 1.0),
        _ => (rho * (rho + 1.0)).powf(0.5 * (n as f64 - 2.0)),
    }
}

/// Sturm–Liouville flux coefficient `rho (rho + 1) w_n(rho)`.
pub(crate) fn flux_coefficient(n: usize, rho: f64) -> f64 {
    rho * (rho + 1.0) * weight_unchecked(n, rho)
}
