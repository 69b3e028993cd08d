//! The free operator `H_0 = -x_n² Δ + (n - 2) x_n ∂_n - (n - 1)² / 4` on the
//! half-space, its conformal form `H_K = -K² Δ + (n - 2) K ∇K·∇ - (n - 1)² / 4`,
//! and numerical checks of the identities they satisfy.
//!
//! Functions under test implement [`SmoothFunction`], which carries exact
//! gradients and Laplacians. Discrete operators act on [`ScalarField`]s sampled
//! on regular grids with second-order central differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::flux_coefficient;
use crate::quadrature::gauss_legendre;

/// A twice-differentiable function on a region of `R^n` with exact derivatives.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn laplacian(&self, x: &[f64]) -> f64;
}

/// Coordinate model a grid lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    HalfSpace,
    Ball,
}

/// Regular tensor grid over a box, with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    model: Model,
    lower: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
}

impl Grid {
    /// Grid with `points` nodes per axis spanning `[lower, upper]`.
    pub fn new(model: Model, lower: Vec<f64>, upper: Vec<f64>, points: usize) -> Result<Self> {
        let n = lower.len();
        if n < 2 || upper.len() != n {
            return Err(Error::InvalidParameter(format!(
                "box corners must share a dimension of at least 2 (got {} and {})",
                n,
                upper.len()
            )));
        }
        if points < 2 {
            return Err(Error::GridTooSmall { required: 2, actual: points });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("box must have lower < upper on every axis".into()));
        }
        match model {
            Model::HalfSpace if !(lower[n - 1] > 0.0) => {
                return Err(Error::InvalidPoint(format!(
                    "grid reaches height {} <= 0",
                    lower[n - 1]
                )));
            }
            Model::Ball => {
                let far: f64 = lower
                    .iter()
                    .zip(&upper)
                    .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                    .sum();
                if far >= 1.0 {
                    return Err(Error::InvalidPoint("grid box leaves the unit ball".into()));
                }
            }
            _ => {}
        }
        let spacing = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l) / (points - 1) as f64)
            .collect();
        Ok(Self {
            model,
            lower,
            spacing,
            shape: vec![points; n],
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim() - 1).rev() {
            strides[a] = strides[a + 1] * self.shape[a + 1];
        }
        strides
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.shape[a];
            flat /= self.shape[a];
        }
        idx
    }

    /// Coordinates of node `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lower[a] + i as f64 * self.spacing[a])
            .collect()
    }

    /// Same nodes with one layer removed from every face.
    pub fn interior(&self) -> Result<Self> {
        self.require_stencil()?;
        Ok(Self {
            model: self.model,
            lower: self.lower.iter().zip(&self.spacing).map(|(l, h)| l + h).collect(),
            spacing: self.spacing.clone(),
            shape: self.shape.iter().map(|s| s - 2).collect(),
        })
    }

    fn require_stencil(&self) -> Result<()> {
        match self.shape.iter().min() {
            Some(&m) if m < 3 => Err(Error::GridTooSmall { required: 3, actual: m }),
            _ => Ok(()),
        }
    }

    /// Flat indices of nodes with a full central stencil, in order.
    fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&f| {
                self.multi_index(f)
                    .iter()
                    .zip(&self.shape)
                    .all(|(&i, &s)| i > 0 && i + 1 < s)
            })
            .collect()
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid: grid.clone(), values }
    }

    /// Largest deviation from `f` over the nodes.
    pub fn max_deviation(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - f(&self.grid.point(i))).abs())
            .fold(0.0, f64::max)
    }

    /// Central-difference gradient and Laplacian at an interior node.
    fn differences(&self, flat: usize, strides: &[usize]) -> (Vec<f64>, f64) {
        let v = &self.values;
        let mut grad = Vec::with_capacity(strides.len());
        let mut lap = 0.0;
        for (a, &s) in strides.iter().enumerate() {
            let h = self.grid.spacing[a];
            let (lo, mid, hi) = (v[flat - s], v[flat], v[flat + s]);
            grad.push((hi - lo) / (2.0 * h));
            lap += (hi - 2.0 * mid + lo) / (h * h);
        }
        (grad, lap)
    }
}

fn spectral_shift(n: usize) -> f64 {
    let s = 0.5 * (n as f64 - 1.0);
    s * s
}

/// Discrete `H_0 f` on the interior sub-grid of a half-space field.
pub fn apply_h0(field: &ScalarField) -> Result<ScalarField> {
    let grid = &field.grid;
    if grid.model != Model::HalfSpace {
        return Err(Error::InvalidParameter("H_0 acts on half-space fields".into()));
    }
    let interior = grid.interior()?;
    let n = grid.dim();
    let strides = grid.strides();
    let shift = spectral_shift(n);
    let values = grid
        .interior_nodes()
        .into_iter()
        .map(|flat| {
            let x_n = grid.point(flat)[n - 1];
            let (grad, lap) = field.differences(flat, &strides);
            -x_n * x_n * lap + (n as f64 - 2.0) * x_n * grad[n - 1] - shift * field.values[flat]
        })
        .collect();
    Ok(ScalarField { grid: interior, values })
}

/// Exact `H_0 f(x)` from the derivatives of `f`.
pub fn h0_exact(f: &dyn SmoothFunction, x: &[f64]) -> f64 {
    let n = x.len();
    let x_n = x[n - 1];
    -x_n * x_n * f.laplacian(x) + (n as f64 - 2.0) * x_n * f.gradient(x)[n - 1]
        - spectral_shift(n) * f.value(x)
}

/// A positive conformal factor `K` with exact derivatives.
pub struct ConformalFactorField {
    inner: Box<dyn SmoothFunction>,
}

impl std::fmt::Debug for ConformalFactorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ConformalFactorField")
    }
}

impl ConformalFactorField {
    pub fn new(k: impl SmoothFunction + 'static) -> Self {
        Self { inner: Box::new(k) }
    }

    /// `K = x_n`.
    pub fn half_space() -> Self {
        Self::new(Height)
    }

    /// `K = 2 / (1 - |y|²)`.
    pub fn ball() -> Self {
        Self::new(BallFactor)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Constant(c))
    }

    fn positive_at(&self, x: &[f64]) -> Result<f64> {
        let k = self.inner.value(x);
        if !(k > 0.0) {
            return Err(Error::Domain(format!("conformal factor K = {k} at {x:?} is not positive")));
        }
        Ok(k)
    }
}

impl SmoothFunction for ConformalFactorField {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x)
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.inner.laplacian(x)
    }
}

struct Height;

impl SmoothFunction for Height {
    fn value(&self, x: &[f64]) -> f64 {
        x[x.len() - 1]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[x.len() - 1] = 1.0;
        g
    }

    fn laplacian(&self, _: &[f64]) -> f64 {
        0.0
    }
}

struct BallFactor;

impl SmoothFunction for BallFactor {
    fn value(&self, x: &[f64]) -> f64 {
        2.0 / (1.0 - norm_sq(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = 1.0 - norm_sq(x);
        x.iter().map(|xi| 4.0 * xi / (d * d)).collect()
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        // ∂_i (4 x_i / d²) = 4 / d² + 16 x_i² / d³.
        let d = 1.0 - norm_sq(x);
        4.0 * x.len() as f64 / (d * d) + 16.0 * norm_sq(x) / (d * d * d)
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constant(pub f64);

impl SmoothFunction for Constant {
    fn value(&self, _: &[f64]) -> f64 {
        self.0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn laplacian(&self, _: &[f64]) -> f64 {
        0.0
    }
}

/// `amplitude · exp(-|x - center|² / width²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl SmoothFunction for Gaussian {
    fn value(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.amplitude * (-d2 / (self.width * self.width)).exp()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.value(x);
        let w2 = self.width * self.width;
        x.iter().zip(&self.center).map(|(a, c)| -2.0 * (a - c) / w2 * g).collect()
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let w2 = self.width * self.width;
        self.value(x) * (4.0 * d2 / (w2 * w2) - 2.0 * x.len() as f64 / w2)
    }
}

/// Smooth bump `exp(-1 / (1 - |x - center|² / radius²))`, zero outside the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Bump {
    fn s(&self, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        d2 / (self.radius * self.radius)
    }

    /// `phi(s) = exp(-1 / (1 - s))` and its first two derivatives.
    fn profile(s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 / (1.0 - s);
        let phi = (-q).exp();
        let d1 = -phi * q * q;
        let d2 = phi * (q.powi(4) - 2.0 * q.powi(3));
        (phi, d1, d2)
    }
}

impl SmoothFunction for Bump {
    fn value(&self, x: &[f64]) -> f64 {
        Self::profile(self.s(x)).0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, d1, _) = Self::profile(self.s(x));
        let r2 = self.radius * self.radius;
        x.iter().zip(&self.center).map(|(a, c)| d1 * 2.0 * (a - c) / r2).collect()
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        let (_, d1, d2) = Self::profile(s);
        let r2 = self.radius * self.radius;
        d2 * 4.0 * s / r2 + d1 * 2.0 * x.len() as f64 / r2
    }
}

/// Sum of monomials `c · Π x_j^{e_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<(f64, Vec<u32>)>,
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(v, &p)| v.powi(p as i32)).product()
}

impl SmoothFunction for Polynomial {
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * monomial(x, e)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|j| {
                self.terms
                    .iter()
                    .filter(|(_, e)| e[j] > 0)
                    .map(|(c, e)| {
                        let mut d = e.clone();
                        d[j] -= 1;
                        c * f64::from(e[j]) * monomial(x, &d)
                    })
                    .sum()
            })
            .collect()
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, e) in &self.terms {
            for j in 0..x.len() {
                if e[j] >= 2 {
                    let mut d = e.clone();
                    d[j] -= 2;
                    total += c * f64::from(e[j] * (e[j] - 1)) * monomial(x, &d);
                }
            }
        }
        total
    }
}

/// Zeroth-order coefficient of the conjugated operator,
/// `[(n - 2)(n |∇K|² - 2 K ΔK) - (n - 1)²] / (4 K²)`.
pub fn conjugated_potential(k: &ConformalFactorField, point: &[f64]) -> Result<f64> {
    let n = point.len() as f64;
    let kv = k.positive_at(point)?;
    let grad_sq = norm_sq(&k.gradient(point));
    let lap = k.laplacian(point);
    Ok(((n - 2.0) * (n * grad_sq - 2.0 * kv * lap) - (n - 1.0) * (n - 1.0)) / (4.0 * kv * kv))
}

/// Max-norm gap between `K^{-(n+2)/2} H_K (K^{(n-2)/2} f)`, with `H_K` applied by
/// central differences, and the exact `-Δf + V_K f`, over interior nodes.
pub fn conjugation_residual(
    k: &ConformalFactorField,
    f: &dyn SmoothFunction,
    grid: &Grid,
) -> Result<f64> {
    grid.require_stencil()?;
    let n = grid.dim();
    let half = 0.5 * (n as f64 - 2.0);
    let mut lifted = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        lifted.push(k.positive_at(&x)?.powf(half) * f.value(&x));
    }
    let field = ScalarField { grid: grid.clone(), values: lifted };
    let strides = grid.strides();
    let shift = spectral_shift(n);
    let mut worst = 0.0f64;
    for flat in grid.interior_nodes() {
        let x = grid.point(flat);
        let kv = k.value(&x);
        let grad_k = k.gradient(&x);
        let (grad, lap) = field.differences(flat, &strides);
        let drift: f64 = grad_k.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let hk = -kv * kv * lap + (n as f64 - 2.0) * kv * drift - shift * field.values[flat];
        let lhs = kv.powf(-0.5 * (n as f64 + 2.0)) * hk;
        let rhs = -f.laplacian(&x) + conjugated_potential(k, &x)? * f.value(&x);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Both sides of the integration-by-parts formula for `H_0` on a Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenTerms {
    /// `∫_B (u H_0 v - v H_0 u) dμ` with `dμ = x_n^{-n} dx`.
    pub volume: f64,
    /// `∫_∂B (v ∂_ν u - u ∂_ν v) dσ` with `∂_ν = x_n ∂_N`, `dσ = x_n^{-(n-1)} dS`.
    pub boundary: f64,
}

impl GreenTerms {
    pub fn residual(&self) -> f64 {
        (self.volume - self.boundary).abs()
    }
}

/// Tensor rule over the unit sphere `S^{n-1}`: directions and weights.
fn sphere_rule(n: usize, resolution: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let tau = std::f64::consts::TAU;
    let m = 2 * resolution;
    let phis: Vec<f64> = (0..m).map(|j| tau * j as f64 / m as f64).collect();
    let dphi = tau / m as f64;
    match n {
        2 => Ok(phis.iter().map(|&p| (vec![p.cos(), p.sin()], dphi)).collect()),
        3 => {
            let (zs, ws) = gauss_legendre(resolution);
            let mut rule = Vec::with_capacity(m * resolution);
            for (z, wz) in zs.iter().zip(&ws) {
                let s = (1.0 - z * z).sqrt();
                for &p in &phis {
                    rule.push((vec![s * p.cos(), s * p.sin(), *z], wz * dphi));
                }
            }
            Ok(rule)
        }
        _ => Err(Error::InvalidParameter(format!(
            "ball quadrature is implemented for n = 2, 3, not {n}"
        ))),
    }
}

/// Evaluates both sides of the Green identity on the Euclidean ball
/// `|x - center| < radius` using Gauss–Legendre in the radius (and polar
/// angle) and the trapezoid rule in azimuth, `resolution` nodes per direction.
pub fn greens_identity_terms(
    u: &dyn SmoothFunction,
    v: &dyn SmoothFunction,
    center: &[f64],
    radius: f64,
    resolution: usize,
) -> Result<GreenTerms> {
    let n = center.len();
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be positive")));
    }
    if !(center[n - 1] - radius > 0.0) {
        return Err(Error::Domain(format!(
            "ball of radius {radius} about height {} meets the boundary x_n = 0",
            center[n - 1]
        )));
    }
    if resolution < 1 {
        return Err(Error::GridTooSmall { required: 1, actual: resolution });
    }
    let sphere = sphere_rule(n, resolution)?;
    let (rs, wr) = gauss_legendre(resolution);
    let at = |dir: &[f64], r: f64| -> Vec<f64> {
        center.iter().zip(dir).map(|(c, d)| c + r * d).collect()
    };

    let mut volume = 0.0;
    for (t, wt) in rs.iter().zip(&wr) {
        let r = 0.5 * radius * (t + 1.0);
        let jac = 0.5 * radius * wt * r.powi(n as i32 - 1);
        for (dir, wd) in &sphere {
            let x = at(dir, r);
            let x_n = x[n - 1];
            let integrand = u.value(&x) * h0_exact(v, &x) - v.value(&x) * h0_exact(u, &x);
            volume += jac * wd * integrand * x_n.powi(-(n as i32));
        }
    }

    let mut boundary = 0.0;
    for (dir, wd) in &sphere {
        let x = at(dir, radius);
        let x_n = x[n - 1];
        let du: f64 = u.gradient(&x).iter().zip(dir).map(|(g, d)| g * d).sum();
        let dv: f64 = v.gradient(&x).iter().zip(dir).map(|(g, d)| g * d).sum();
        let flux = x_n * (v.value(&x) * du - u.value(&x) * dv);
        boundary += wd * radius.powi(n as i32 - 1) * flux * x_n.powi(1 - n as i32);
    }
    Ok(GreenTerms { volume, boundary })
}

/// `|∫_B (u H_0 v - v H_0 u) dμ - ∫_∂B (v ∂_ν u - u ∂_ν v) dσ|`.
pub fn greens_identity_residual(
    u: &dyn SmoothFunction,
    v: &dyn SmoothFunction,
    center: &[f64],
    radius: f64,
    resolution: usize,
) -> Result<f64> {
    Ok(greens_identity_terms(u, v, center, radius, resolution)?.residual())
}

/// Coefficients `(p2, p1, p0)` of the radial form
/// `H_0 = p2 ∂²_rho + p1 ∂_rho + p0 = -rho(rho+1) ∂²_rho - (n rho + n/2) ∂_rho - (n-1)²/4`.
pub fn radial_h0_coefficients(n: usize, rho: f64) -> (f64, f64, f64) {
    let nf = n as f64;
    (-rho * (rho + 1.0), -(nf * rho + 0.5 * nf), -spectral_shift(n))
}

/// Radial `H_0` applied to a function given by its value and first two derivatives.
pub fn apply_radial_h0(n: usize, rho: f64, f: f64, df: f64, d2f: f64) -> f64 {
    let (p2, p1, p0) = radial_h0_coefficients(n, rho);
    p2 * d2f + p1 * df + p0 * f
}

/// Algebraic radius `rho = |x - e_n|² / (4 x_n)` about `<0, ..., 0, 1>`.
pub fn rho_about_unit_height(x: &[f64]) -> f64 {
    let n = x.len();
    let d2: f64 = x
        .iter()
        .enumerate()
        .map(|(j, v)| if j + 1 == n { (v - 1.0) * (v - 1.0) } else { v * v })
        .sum();
    d2 / (4.0 * x[n - 1])
}

/// First-order radial coefficient recovered from the Sturm–Liouville flux
/// `(rho (rho + 1) w_n)' / w_n` by central differences; equals `n rho + n / 2`.
pub fn sturm_liouville_drift(n: usize, rho: f64, h: f64) -> f64 {
    let dflux = (flux_coefficient(n, rho + h) - flux_coefficient(n, rho - h)) / (2.0 * h);
    dflux / crate::geometry::weight_unchecked(n, rho)
}
