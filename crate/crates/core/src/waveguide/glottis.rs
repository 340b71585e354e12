//! Aerodynamic coupling at the glottis.

use super::PhysicalConstants;
use crate::error::{Error, Result};

/// Pressure recovery coefficient `k_e = 2 (a/A_e)(1 − a/A_e)`.
#[inline]
pub fn pressure_recovery(area: f64, supra_area: f64) -> f64 {
    let r = area / supra_area;
    2.0 * r * (1.0 - r)
}

/// Effective tract area `(1/A_e + 1/A_s)^-1`.
#[inline]
pub fn effective_area(supra_area: f64, sub_area: f64) -> f64 {
    1.0 / (1.0 / supra_area + 1.0 / sub_area)
}

/// Quasi-steady glottal flow (cm³/s) through an opening of `area` cm² driven
/// by the subglottal forward wave `f_s` and the supraglottal backward wave `b_e`.
///
/// For `Δp = f_s − b_e ≥ 0` the root continuous at `Δp = 0` is taken; reverse
/// pressure gives the mirrored flow `u(−Δp) = −u(Δp)`.
pub fn glottal_flow(
    area: f64,
    f_s: f64,
    b_e: f64,
    consts: &PhysicalConstants,
    supra_area: f64,
    sub_area: f64,
) -> Result<f64> {
    if !(area.is_finite() && f_s.is_finite() && b_e.is_finite()) {
        return Err(Error::Simulation {
            sample: 0,
            reason: format!("non-finite glottal input (a={area}, f_s={f_s}, b_e={b_e})"),
        });
    }
    if area <= 0.0 {
        return Ok(0.0);
    }
    let dp = f_s - b_e;
    let ke = pressure_recovery(area, supra_area);
    let one_minus_ke = 1.0 - ke;
    let b = area / effective_area(supra_area, sub_area);
    let x = 4.0 * one_minus_ke * dp.abs() / (consts.c * consts.c * consts.rho);
    // −b + sqrt(b² + x), rationalized to avoid cancellation.
    let root = x / (b + (b * b + x).sqrt());
    let u = area * consts.c / one_minus_ke * root;
    Ok(if dp < 0.0 { -u } else { u })
}

/// Pressure drop implied by a flow `u` through `area`: the balance solved by
/// [`glottal_flow`] for non-negative flow.
pub fn pressure_balance(
    area: f64,
    u: f64,
    consts: &PhysicalConstants,
    supra_area: f64,
    sub_area: f64,
) -> f64 {
    let ke = pressure_recovery(area, supra_area);
    let a_star = effective_area(supra_area, sub_area);
    consts.rho * (1.0 - ke) * u * u / (4.0 * area * area) + consts.rho * consts.c * u / (2.0 * a_star)
}

/// Outgoing waves `(f_e, b_s)` at the glottis for total flow `u_g`.
#[inline]
pub fn glottis_scatter(
    u_g: f64,
    f_s: f64,
    b_e: f64,
    consts: &PhysicalConstants,
    supra_area: f64,
    sub_area: f64,
) -> (f64, f64) {
    let rc = consts.rho * consts.c;
    (b_e + rc / supra_area * u_g, f_s - rc / sub_area * u_g)
}
