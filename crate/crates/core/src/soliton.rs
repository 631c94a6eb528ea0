//! Lorentzian solitary-wave profiles `A / (1 + B^2 (x - x0)^2)`.
//!
//! Two parameterizations are provided. [`soliton`] samples the classical
//! form `4c / (1 + c^2 x^2)` travelling at speed `c`. [`certified_soliton`]
//! samples the member `(A, s) = (-2B, -B)` of the family, which solves the
//! integrated profile equation `H Q' + Q^2 - s Q = 0` for the flux
//! `d/dx(H u_x + u^2)` integrated by this crate. Both report their residual
//! through [`profile_residual`]; neither is adjusted to fit the other.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{deriv, hilbert, Field, Grid};

/// Residual threshold below which a profile counts as validated.
pub const VALIDATION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub amplitude: f64,
    pub scale: f64,
    pub center: f64,
    pub speed: f64,
}

impl SolitonParams {
    pub fn value(&self, x: f64) -> f64 {
        let y = self.scale * (x - self.center);
        self.amplitude / (1.0 + y * y)
    }

    pub fn profile(&self, grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid, |x| self.value(x))
    }

    /// The same wave after travelling for time `t`.
    pub fn translated(&self, t: f64) -> SolitonParams {
        SolitonParams {
            center: self.center + self.speed * t,
            ..*self
        }
    }
}

fn check_width(scale: f64, grid: &Grid) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale {scale} must be > 0")));
    }
    let limit = grid.length() / 20.0;
    if 1.0 / scale > limit {
        return Err(Error::ProfileTooWide { scale, limit });
    }
    Ok(())
}

/// `4c / (1 + c^2 (x - x0)^2)` with speed `c`.
pub fn soliton(c: f64, x0: f64, grid: &Arc<Grid>) -> Result<(Field, SolitonParams)> {
    check_width(c, grid)?;
    let p = SolitonParams {
        amplitude: 4.0 * c,
        scale: c,
        center: x0,
        speed: c,
    };
    Ok((p.profile(grid), p))
}

/// `-2B / (1 + B^2 (x - x0)^2)` with speed `-B`.
pub fn certified_soliton(scale: f64, x0: f64, grid: &Arc<Grid>) -> Result<(Field, SolitonParams)> {
    check_width(scale, grid)?;
    let p = SolitonParams {
        amplitude: -2.0 * scale,
        scale,
        center: x0,
        speed: -scale,
    };
    Ok((p.profile(grid), p))
}

/// `|| H Q' + Q^2 - s Q ||_2 / || Q ||_2` for the sampled profile; zero for
/// the zero profile.
pub fn profile_residual(p: &SolitonParams, grid: &Arc<Grid>) -> f64 {
    let q = p.profile(grid);
    let norm = q.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let hq = hilbert(&deriv(&q));
    let r = hq
        .zip_with(&q, |h, v| h + v * v - p.speed * v)
        .expect("same grid");
    r.l2_norm() / norm
}

pub fn is_validated(p: &SolitonParams, grid: &Arc<Grid>) -> bool {
    profile_residual(p, grid) <= VALIDATION_TOL
}
