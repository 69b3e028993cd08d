//! Eigencurves of the fourth-order quadratic-form family on radial functions.
//!
//! The radial `H_0` is discretized by finite volumes on nodes equally spaced
//! in geodesic radius, `rho_i = sinh²(i h / 2)` with `h = R / m`, in the
//! weighted inner product `<u, v> = Σ W_i u_i v_i` where
//! `W_i` integrates the radial weight over the dual cell of node `i`. The
//! unknowns are `u_0 .. u_{m-1}` with `u_m = u(P) = 0`. The clamped condition
//! `u'(P) = 0` enters through the ghost value `u_{m+1} = u_{m-1}`, even in `r`, which
//! gives `(L u)_m` at the boundary node; its half cell closes the quadrature.
//!
//! For an energy `lambda` the form
//! `Q(u) = |(L - lambda) u|²_W / |V0| + lambda^nu sign(V0) <u, (L - lambda) u>_W`
//! is a symmetric matrix `T_lambda`; its generalized eigenvalues against the
//! mass matrix are the curves `mu_l(lambda)`, and transmission eigenvalues are
//! the energies where one of them crosses zero.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{flux_coefficient, weight_unchecked};
use crate::quadrature::gauss_legendre;
use crate::radial_tev::{EigenvalueList, RadialProblem};

/// Symmetric band matrix storing `lower[d][i] = A[i + d][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    size: usize,
    lower: Vec<Vec<f64>>,
}

impl SymmetricBand {
    pub fn zeros(size: usize, half_bandwidth: usize) -> Self {
        Self {
            size,
            lower: (0..=half_bandwidth).map(|d| vec![0.0; size.saturating_sub(d)]).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half_bandwidth(&self) -> usize {
        self.lower.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.half_bandwidth() {
            0.0
        } else {
            self.lower[d][lo]
        }
    }

    /// Adds `v` to `A[i][j]` (and by symmetry `A[j][i]`).
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.lower[hi - lo][lo] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    /// Number of negative eigenvalues of `A - shift · diag(mass)`, from the
    /// signs of the pivots of an `LDL^T` factorization (Sylvester's law).
    pub fn negative_count(&self, shift: f64, mass: &[f64]) -> usize {
        let b = self.half_bandwidth();
        let n = self.size;
        let mut l = vec![vec![0.0; b + 1]; n];
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        let tiny = f64::MIN_POSITIVE.sqrt();
        for j in 0..n {
            let mut pivot = self.get(j, j) - shift * mass[j];
            for k in j.saturating_sub(b)..j {
                let ljk = l[j][j - k];
                pivot -= ljk * ljk * d[k];
            }
            if pivot == 0.0 {
                pivot = tiny;
            }
            d[j] = pivot;
            if pivot < 0.0 {
                negatives += 1;
            }
            for i in j + 1..(j + b + 1).min(n) {
                let mut a = self.get(i, j);
                for k in i.saturating_sub(b)..j {
                    a -= l[i][i - k] * l[j][j - k] * d[k];
                }
                l[i][i - j] = a / pivot;
            }
        }
        negatives
    }
}

/// Finite-volume model of the radial `H_0` on `[0, P]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDiscretization {
    pub n: usize,
    pub cap: f64,
    pub m: usize,
    /// Step in geodesic radius.
    pub h: f64,
    /// `rho_0 .. rho_m`.
    pub nodes: Vec<f64>,
    /// `rho_{i+1} - rho_i` for `i = 0 .. m` (the last one reaches the ghost node).
    pub gaps: Vec<f64>,
    /// Dual-cell integrals of the weight for nodes `0 .. m-1`.
    pub weights: Vec<f64>,
    /// `rho (rho + 1) w_n(rho)` at the cell faces `rho_{i + 1/2}`, `i = 0 .. m`.
    pub flux: Vec<f64>,
    /// Weight integral over `[P - h/2, P]`.
    pub boundary_weight: f64,
    /// `(L u)_m = boundary_coefficient · u_{m-1}` under the ghost reflection.
    pub boundary_coefficient: f64,
    shift: f64,
}

pub const MIN_GRID: usize = 50;

pub fn assemble(prob: &RadialProblem, m: usize) -> Result<RadialDiscretization> {
    if m < MIN_GRID {
        return Err(Error::GridTooSmall { required: MIN_GRID, actual: m });
    }
    let n = prob.n;
    let cap = prob.cap();
    let h = prob.radius / m as f64;
    let at = |k: f64| (0.5 * k * h).sinh().powi(2);
    let nodes: Vec<f64> = (0..=m).map(|i| at(i as f64)).collect();
    let faces: Vec<f64> = (0..=m).map(|i| at(i as f64 + 0.5)).collect();
    let ghost = at(m as f64 + 1.0);
    let gaps: Vec<f64> = (0..=m)
        .map(|i| if i < m { nodes[i + 1] - nodes[i] } else { ghost - nodes[m] })
        .collect();
    let (gx, gw) = gauss_legendre(8);
    let cell = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        gx.iter().zip(&gw).map(|(x, w)| w * half * weight_unchecked(n, mid + half * x)).sum()
    };
    let weights = (0..m)
        .map(|i| cell(if i == 0 { 0.0 } else { faces[i - 1] }, faces[i]))
        .collect();
    let flux: Vec<f64> = faces.iter().map(|&f| flux_coefficient(n, f)).collect();
    let boundary_coefficient =
        -(flux[m - 1] / gaps[m - 1] + flux[m] / gaps[m]) / cell(faces[m - 1], faces[m]);
    let s = 0.5 * (n as f64 - 1.0);
    Ok(RadialDiscretization {
        n,
        cap,
        m,
        h,
        nodes,
        gaps,
        weights,
        boundary_weight: cell(faces[m - 1], cap),
        flux,
        boundary_coefficient,
        shift: s * s,
    })
}

impl RadialDiscretization {
    /// Tridiagonal entries `(sub, diag, sup)` of row `i` of `L`.
    fn l_row(&self, i: usize) -> (f64, f64, f64) {
        let right = self.flux[i] / (self.gaps[i] * self.weights[i]);
        let left = if i == 0 { 0.0 } else { self.flux[i - 1] / (self.gaps[i - 1] * self.weights[i]) };
        (-left, left + right - self.shift, -right)
    }

    /// `(L u)_i` for `i = 0 .. m-1` from a full vector `u_0 .. u_m`.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.m + 1, "expected values at all m + 1 nodes");
        (0..self.m)
            .map(|i| {
                let (a, b, c) = self.l_row(i);
                let left = if i == 0 { 0.0 } else { a * u[i - 1] };
                left + b * u[i] + c * u[i + 1]
            })
            .collect()
    }

    /// `L` with the Dirichlet condition `u_m = 0`, as a dense `m x m` matrix.
    pub fn l_matrix(&self) -> DMatrix<f64> {
        let m = self.m;
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            let (a, b, c) = self.l_row(i);
            if i > 0 {
                out[(i, i - 1)] = a;
            }
            out[(i, i)] = b;
            if i + 1 < m {
                out[(i, i + 1)] = c;
            }
        }
        out
    }

    /// Smallest eigenvalue of the Dirichlet `L`, self-adjoint in the `W` product.
    pub fn min_eigenvalue_l(&self) -> f64 {
        let m = self.m;
        let l = self.l_matrix();
        let sym = DMatrix::from_fn(m, m, |i, j| {
            l[(i, j)] * self.weights[i].sqrt() / self.weights[j].sqrt()
        });
        let sym = 0.5 * (&sym + sym.transpose());
        SymmetricEigen::new(sym).eigenvalues.min()
    }

    fn lambda_power(prob: &RadialProblem, lambda: f64) -> f64 {
        if prob.nu == 1 {
            lambda
        } else {
            1.0
        }
    }

    /// `T_lambda` on the unknowns `u_0 .. u_{m-1}`.
    pub fn t_lambda(&self, prob: &RadialProblem, lambda: f64) -> SymmetricBand {
        let m = self.m;
        let mut t = SymmetricBand::zeros(m, 2);
        let inv_v = 1.0 / prob.v0.abs();
        let coupling = Self::lambda_power(prob, lambda) * prob.v0.signum();
        for k in 0..m {
            let (a, b, c) = self.l_row(k);
            let row = [(k.wrapping_sub(1), a), (k, b - lambda), (k + 1, c)];
            let wk = self.weights[k];
            for &(i, ai) in &row {
                if i >= m {
                    continue;
                }
                // Row k of W(L - lambda), symmetric by construction.
                if i <= k {
                    t.add(k, i, coupling * wk * ai);
                }
                for &(j, aj) in &row {
                    if j < m && j <= i {
                        t.add(i, j, inv_v * ai * wk * aj);
                    }
                }
            }
        }
        // Boundary node: u_m = 0, so only the squared term contributes.
        let b = self.boundary_coefficient;
        t.add(m - 1, m - 1, inv_v * self.boundary_weight * b * b);
        t
    }

    /// Diagonal of the mass matrix on the unknowns.
    pub fn mass(&self) -> Vec<f64> {
        self.weights.clone()
    }

    /// Appends the boundary value `u_m = 0`.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut u = free.to_vec();
        u.push(0.0);
        u
    }

    /// Generalized eigenvalues of `(T_lambda, mass)`, ascending.
    pub fn curve_values(&self, prob: &RadialProblem, lambda: f64) -> Result<Vec<f64>> {
        let t = self.t_lambda(prob, lambda).to_dense();
        let mass = self.mass();
        let r = mass.len();
        let scaled = DMatrix::from_fn(r, r, |i, j| t[(i, j)] / (mass[i] * mass[j]).sqrt());
        let eig = SymmetricEigen::try_new(scaled, 1e-14, 10_000).ok_or_else(|| {
            Error::Numeric(format!("symmetric eigensolver did not converge at lambda = {lambda}"))
        })?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// Lowest `count` curves at `lambda`, by bisection on the banded inertia
    /// count inside the Gershgorin interval of the mass-scaled matrix.
    pub fn lowest_curves(&self, prob: &RadialProblem, lambda: f64, count: usize) -> Result<Vec<f64>> {
        let t = self.t_lambda(prob, lambda);
        let mass = self.mass();
        let r = mass.len();
        let b = t.half_bandwidth();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..r {
            let centre = t.get(i, i) / mass[i];
            let radius: f64 = (i.saturating_sub(b)..(i + b + 1).min(r))
                .filter(|&j| j != i)
                .map(|j| t.get(i, j).abs() / (mass[i] * mass[j]).sqrt())
                .sum();
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Numeric(format!("non-finite form at lambda = {lambda}")));
        }
        Ok((1..=count.min(r))
            .map(|k| {
                let (mut a, mut z) = (lo, hi);
                for _ in 0..300 {
                    let mid = 0.5 * (a + z);
                    if mid <= a || mid >= z || z - a <= 1e-15 * (a.abs() + z.abs()) {
                        break;
                    }
                    if t.negative_count(mid, &mass) >= k {
                        z = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + z)
            })
            .collect())
    }

    /// Number of negative curves `mu_l(lambda)`.
    pub fn negative_curves(&self, prob: &RadialProblem, lambda: f64) -> usize {
        self.t_lambda(prob, lambda).negative_count(0.0, &self.mass())
    }
}

/// `T_lambda` as a dense symmetric matrix on the free unknowns.
pub fn t_lambda_matrix(disc: &RadialDiscretization, prob: &RadialProblem, lambda: f64) -> DMatrix<f64> {
    disc.t_lambda(prob, lambda).to_dense()
}

/// An energy where the number of negative curves changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lambda: f64,
    pub bracket: (f64, f64),
    /// Number of curves changing sign inside the bracket.
    pub multiplicity: usize,
}

/// Scans `[lo, hi]` in steps of `step` and refines every change in the number
/// of negative curves by bisection to relative width `1e-12`.
pub fn crossings(
    disc: &RadialDiscretization,
    prob: &RadialProblem,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<Vec<Crossing>> {
    if !(hi > lo) || !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("bad scan range [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step).ceil() as usize;
    let grid: Vec<f64> = (0..=count).map(|j| (lo + j as f64 * step).min(hi)).collect();
    let negatives: Vec<usize> = grid.par_iter().map(|&l| disc.negative_curves(prob, l)).collect();
    Ok((1..grid.len())
        .filter(|&j| negatives[j] != negatives[j - 1])
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| refine(disc, prob, grid[j - 1], grid[j], negatives[j - 1], negatives[j]))
        .collect())
}

fn refine(
    disc: &RadialDiscretization,
    prob: &RadialProblem,
    mut a: f64,
    mut b: f64,
    count_a: usize,
    count_b: usize,
) -> Crossing {
    let bracket = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= 1e-12 * mid.abs().max(1.0) || mid <= a || mid >= b {
            break;
        }
        if disc.negative_curves(prob, mid) == count_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Crossing {
        lambda: 0.5 * (a + b),
        bracket,
        multiplicity: count_a.abs_diff(count_b),
    }
}

/// Lowest curves `mu_l(lambda_j)` on a grid of energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigencurveTable {
    pub lambdas: Vec<f64>,
    /// `mu[j][l]`, sorted ascending for each `j`.
    pub mu: Vec<Vec<f64>>,
    /// Energies where the eigensolver failed; their rows are empty.
    pub incomplete: Vec<f64>,
    pub crossings: Vec<Crossing>,
}

impl EigencurveTable {
    pub fn to_csv(&self) -> String {
        let width = self.mu.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::from("lambda");
        for l in 1..=width {
            out.push_str(&format!(",mu_{l}"));
        }
        out.push('\n');
        for (lambda, row) in self.lambdas.iter().zip(&self.mu) {
            out.push_str(&format!("{lambda:.15e}"));
            for v in row {
                out.push_str(&format!(",{v:.15e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn eigencurves(
    disc: &RadialDiscretization,
    prob: &RadialProblem,
    lambdas: &[f64],
    count: usize,
) -> Result<EigencurveTable> {
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("energy grid must be strictly increasing".into()));
    }
    let solved: Vec<(Result<Vec<f64>>, usize)> = lambdas
        .par_iter()
        .map(|&l| (disc.lowest_curves(prob, l, count), disc.negative_curves(prob, l)))
        .collect();
    let mut mu = Vec::with_capacity(lambdas.len());
    let mut incomplete = Vec::new();
    for (&l, (values, _)) in lambdas.iter().zip(&solved) {
        match values {
            Ok(v) => mu.push(v.clone()),
            Err(e) if e.is_numeric() => {
                incomplete.push(l);
                mu.push(Vec::new());
            }
            Err(e) => return Err(e.clone()),
        }
    }
    let crossings = (1..lambdas.len())
        .filter(|&j| solved[j].1 != solved[j - 1].1)
        .map(|j| refine(disc, prob, lambdas[j - 1], lambdas[j], solved[j - 1].1, solved[j].1))
        .collect();
    Ok(EigencurveTable {
        lambdas: lambdas.to_vec(),
        mu,
        incomplete,
        crossings,
    })
}

/// Determinant roots paired with curve crossings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    /// `(determinant root, crossing, relative gap)`.
    pub matched: Vec<(f64, f64, f64)>,
    pub unmatched_roots: Vec<f64>,
    pub unmatched_crossings: Vec<f64>,
}

impl CrossingReport {
    pub fn worst_gap(&self) -> f64 {
        self.matched.iter().map(|m| m.2).fold(0.0, f64::max)
    }
}

/// Pairs each determinant root with the nearest unused crossing whose relative
/// distance is below `tolerance`.
pub fn crossings_vs_determinant(
    found: &[Crossing],
    roots: &EigenvalueList,
    tolerance: f64,
) -> CrossingReport {
    let mut used = vec![false; found.len()];
    let mut matched = Vec::new();
    let mut unmatched_roots = Vec::new();
    for r in &roots.roots {
        let best = found
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, c)| (i, (c.lambda - r.lambda).abs() / r.lambda))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, gap)) if gap < tolerance => {
                used[i] = true;
                matched.push((r.lambda, found[i].lambda, gap));
            }
            _ => unmatched_roots.push(r.lambda),
        }
    }
    let unmatched_crossings = found
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(c, _)| c.lambda)
        .collect();
    CrossingReport {
        matched,
        unmatched_roots,
        unmatched_crossings,
    }
}

/// Weighted norm of `(L + lambda^nu V0 - lambda)(L - lambda) u / V0` over nodes
/// `2 .. m-2`, plus the one-sided defect `|u'(P)|`.
///
/// `u` holds values at all nodes `0 .. m`; a nonzero `u_m` is rejected.
pub fn fourth_order_residual(
    disc: &RadialDiscretization,
    prob: &RadialProblem,
    lambda: f64,
    u: &[f64],
) -> Result<f64> {
    let m = disc.m;
    if u.len() != m + 1 {
        return Err(Error::InvalidParameter(format!(
            "expected {} nodal values, got {}",
            m + 1,
            u.len()
        )));
    }
    let scale = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if u[m].abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!("u(P) = {:e} violates the boundary condition", u[m])));
    }
    let first = disc.apply_l(u);
    let mut y: Vec<f64> = first
        .iter()
        .zip(u)
        .map(|(lu, ui)| (lu - lambda * ui) / prob.v0)
        .collect();
    y.push(0.0);
    let second = disc.apply_l(&y);
    let shift = RadialDiscretization::lambda_power(prob, lambda) * prob.v0 - lambda;
    let interior: f64 = (2..m - 1)
        .map(|i| {
            let z = second[i] + shift * y[i];
            disc.weights[i] * z * z
        })
        .sum();
    // One-sided in r, then d rho / d r = sinh(R) / 2.
    let radius = disc.h * m as f64;
    let slope = (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * disc.h) / (0.5 * radius.sinh());
    Ok(interior.sqrt() + slope.abs())
}
