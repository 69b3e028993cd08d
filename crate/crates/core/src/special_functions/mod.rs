//! Gauss hypergeometric function for conjugate parameter pairs on the
//! negative real axis.
//!
//! Radial eigenfunctions of the free operator are `2F1(s - it, s + it; c; -rho)`.
//! With conjugate `a, b` the series has real coefficients
//! `((s + k)² + t²) / ((c + k)(k + 1))`, so the value is real by construction.
//! For large `t` the series cancels catastrophically (terms of size up to
//! `e^(pi t)` sum to an `O(1)` value), so summation falls back to big-float
//! arithmetic whenever the f64 pass cannot certify its relative error.
//!
//! Route by argument: direct series for `|x| <= 1/2`, Pfaff-mapped series up to
//! `|x| = 4`, and Taylor continuation of the differential equation beyond.

mod continuation;
mod oracle;
mod series;

pub use oracle::series_oracle;
pub use series::{Evaluation, Route};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beyond `|x| = PFAFF_LIMIT` the mapped series converges too slowly and the
/// value is continued along the differential equation instead.
pub const PFAFF_LIMIT: f64 = 4.0;

/// Upper end of `t` where the engine is validated against the oracle.
pub const DEFAULT_T_ENVELOPE: f64 = 50.0;

/// Parameters of `2F1(s - it, s + it; c; x)`.
///
/// `imaginary_t` selects the analytic continuation `t -> i t`, giving the real
/// parameter pair `s + t, s - t`. It serves the negative-energy extension only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeometricInput {
    pub s: f64,
    pub t: f64,
    pub c: f64,
    pub x: f64,
    pub imaginary_t: bool,
}

impl HypergeometricInput {
    pub fn new(s: f64, t: f64, c: f64, x: f64) -> Result<Self> {
        let input = Self {
            s,
            t,
            c,
            x,
            imaginary_t: false,
        };
        input.validate()?;
        Ok(input)
    }

    /// Builds the input from `t²`, continuing to imaginary `t` when `t² < 0`.
    pub fn from_t_squared(s: f64, t_squared: f64, c: f64, x: f64) -> Result<Self> {
        let input = Self {
            s,
            t: t_squared.abs().sqrt(),
            c,
            x,
            imaginary_t: t_squared < 0.0,
        };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.t.is_finite() && self.c.is_finite() && self.x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite hypergeometric parameter".into()));
        }
        if self.t < 0.0 {
            return Err(Error::InvalidParameter(format!("t = {} must be nonnegative", self.t)));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c = {} must be positive (nonpositive integers are poles)",
                self.c
            )));
        }
        if self.x > 0.0 {
            return Err(Error::Domain(format!("argument x = {} must be nonpositive", self.x)));
        }
        Ok(())
    }

    /// Signed `t²`; negative under the imaginary continuation.
    pub fn t_squared(&self) -> f64 {
        if self.imaginary_t {
            -self.t * self.t
        } else {
            self.t * self.t
        }
    }

    /// The product `ab = s² + t²`.
    pub fn ab(&self) -> f64 {
        self.s * self.s + self.t_squared()
    }

    /// Parameters `(a + 1, b + 1; c + 1)` of the derivative.
    pub fn shifted(&self) -> Self {
        Self {
            s: self.s + 1.0,
            c: self.c + 1.0,
            ..*self
        }
    }

    pub fn with_x(&self, x: f64) -> Result<Self> {
        let input = Self { x, ..*self };
        input.validate()?;
        Ok(input)
    }
}

/// Real value of `2F1(s - it, s + it; c; x)` for `x <= 0`.
pub fn gauss_2f1(input: &HypergeometricInput) -> Result<f64> {
    Ok(gauss_2f1_detailed(input)?.value)
}

/// As [`gauss_2f1`], also reporting the route, term count and precision used.
pub fn gauss_2f1_detailed(input: &HypergeometricInput) -> Result<Evaluation> {
    input.validate()?;
    let route = if input.x >= -0.5 {
        Route::Direct
    } else if input.x >= -PFAFF_LIMIT {
        Route::Pfaff
    } else {
        Route::Continuation
    };
    series::evaluate(input, route)
}

/// Evaluates along a forced route. `Route::Direct` requires `|x| < 1`.
pub fn gauss_2f1_with_route(input: &HypergeometricInput, route: Route) -> Result<f64> {
    input.validate()?;
    Ok(series::evaluate(input, route)?.value)
}

/// `d/dx 2F1(a, b; c; x) = (ab / c) 2F1(a + 1, b + 1; c + 1; x)` with `ab = s² + t²`.
pub fn gauss_2f1_derivative(input: &HypergeometricInput) -> Result<f64> {
    input.validate()?;
    let ab = input.ab();
    if ab == 0.0 {
        return Ok(0.0);
    }
    Ok(ab / input.c * gauss_2f1(&input.shifted())?)
}
