//! Exponential-affine moments of the CIR variance,
//! `E[exp(a V_T + b int_0^T V dt)] = exp(A(T) + C(T) V_0)` with
//!
//! ```text
//! C' = b - kappa C + sigma^2 C^2 / 2,   C(0) = a
//! A' = kappa theta C,                   A(0) = 0
//! ```
//!
//! integrated in time-to-maturity by an adaptive Dormand–Prince pair.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::HestonParams;

/// Explosion is declared once `|C|` passes this.
pub const EXPLOSION_THRESHOLD: f64 = 1e8;
pub const DEFAULT_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMomentQuery {
    /// Coefficient on `V_T`.
    pub a: f64,
    /// Coefficient on `int_0^T V dt`.
    pub b: f64,
}

fn rhs(p: &HestonParams, a_b: f64, y: [f64; 2]) -> [f64; 2] {
    let c = y[1];
    [p.kappa * p.theta * c, a_b - p.kappa * c + 0.5 * p.sigma * p.sigma * c * c]
}

// Dormand–Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: [f64; 2], h: f64, terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Returns `(A(T), C(T))`.
pub fn solve_riccati(params: &HestonParams, q: AffineMomentQuery, rtol: f64) -> Result<(f64, f64)> {
    if !(rtol > 0.0) {
        return Err(invalid("rtol", "must be positive"));
    }
    if !q.a.is_finite() || !q.b.is_finite() {
        return Err(Error::NonFinite("affine query".into()));
    }
    let horizon = params.horizon;
    let atol = rtol * 1e-2;
    let f = |y: [f64; 2]| rhs(params, q.b, y);
    let mut t = 0.0;
    let mut y = [0.0, q.a];
    let mut h = horizon / 100.0;
    let mut k1 = f(y);
    let mut steps = 0usize;
    while t < horizon {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::Invariant("Riccati integrator made no progress".into()));
        }
        h = h.min(horizon - t);
        let k2 = f(axpy(y, h, &[(A21, k1)]));
        let k3 = f(axpy(y, h, &[(A31, k1), (A32, k2)]));
        let k4 = f(axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = f(axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = f(axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y5 = axpy(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = f(y5);
        let err_terms = [(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)];
        let mut err: f64 = 0.0;
        for j in 0..2 {
            let e: f64 = err_terms.iter().map(|(c, k)| c * k[j]).sum::<f64>() * h;
            let scale = atol + rtol * y[j].abs().max(y5[j].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() || y5[1].abs() > EXPLOSION_THRESHOLD {
            if h < 1e-14 * horizon.max(1.0) || y5[1].abs() > EXPLOSION_THRESHOLD {
                return Err(Error::MomentExplosion {
                    t: t + h,
                    threshold: EXPLOSION_THRESHOLD,
                });
            }
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k7;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok((y[0], y[1]))
}

/// `E[exp(a V_T + b int V dt)]` under the CIR dynamics of `params`.
pub fn affine_exponential_moment(params: &HestonParams, q: AffineMomentQuery, rtol: f64) -> Result<f64> {
    params.validate()?;
    if q.a == 0.0 && q.b == 0.0 {
        return Ok(1.0);
    }
    let (a, c) = solve_riccati(params, q, rtol)?;
    Ok((a + c * params.v0).exp())
}

/// Closed-form CIR bond price `E[exp(-r int_0^T V dt)]`, `r >= 0`.
pub fn cir_bond_price(params: &HestonParams, r: f64) -> Result<f64> {
    params.validate()?;
    if !(r >= 0.0) {
        return Err(invalid("r", format!("bond rate must be non-negative, got {r}")));
    }
    let (k, s, t) = (params.kappa, params.sigma, params.horizon);
    let g = (k * k + 2.0 * s * s * r).sqrt();
    let em1 = (g * t).exp_m1();
    let den = (g + k) * em1 + 2.0 * g;
    let c = 2.0 * em1 / den;
    let log_a = 2.0 * k * params.theta / (s * s) * ((2.0 * g).ln() + 0.5 * (k + g) * t - den.ln());
    Ok((log_a - r * c * params.v0).exp())
}

/// `E[(Z_T)^q]` for the minimal martingale density
/// `Z = E(-mu sqrt(V) . (sqrt(1-rho^2) B + rho W))`, reduced to an affine
/// moment through `int sqrt(V) dB = (V_T - V_0 - kappa theta T + kappa int V dt) / sigma`.
pub fn mmm_power_moment(params: &HestonParams, q: f64, rtol: f64) -> Result<f64> {
    let c = (1.0 - params.rho * params.rho).sqrt();
    let (mu, k, s) = (params.mu, params.kappa, params.sigma);
    let a = -q * mu * c / s;
    let b = -q * mu * c * k / s - 0.5 * q * mu * mu + 0.5 * q * q * mu * mu * params.rho * params.rho;
    let factor = (q * mu * c * (params.v0 + k * params.theta * params.horizon) / s).exp();
    Ok(factor * affine_exponential_moment(params, AffineMomentQuery { a, b }, rtol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HestonParams {
        HestonParams::new(0.5, 2.0, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_query_is_one() {
        let m = affine_exponential_moment(&params(), AffineMomentQuery { a: 0.0, b: 0.0 }, DEFAULT_RTOL).unwrap();
        assert_eq!(m, 1.0);
    }

    #[test]
    fn pure_terminal_moment_matches_mean_for_small_a() {
        // d/da E[e^{a V_T}] at 0 equals E[V_T]
        let p = params();
        let h = 1e-5;
        let up = affine_exponential_moment(&p, AffineMomentQuery { a: h, b: 0.0 }, 1e-12).unwrap();
        let dn = affine_exponential_moment(&p, AffineMomentQuery { a: -h, b: 0.0 }, 1e-12).unwrap();
        assert!(((up - dn) / (2.0 * h) - p.mean_variance(1.0)).abs() < 1e-6);
    }

    #[test]
    fn bond_at_zero_rate_is_one() {
        assert!((cir_bond_price(&params(), 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn explosion_detected() {
        let r = affine_exponential_moment(&params(), AffineMomentQuery { a: 5.0, b: 5.0 }, DEFAULT_RTOL);
        assert!(matches!(r, Err(Error::MomentExplosion { .. })));
    }

    #[test]
    fn zero_drift_density_moment_is_one() {
        let p = HestonParams::new(0.0, 2.0, 1.0, 1.0, 1.0, 0.4, 1.0).unwrap();
        assert!((mmm_power_moment(&p, -1.0, DEFAULT_RTOL).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_moment_of_density_is_one() {
        for rho in [0.0, 0.3, -0.6] {
            let p = params().with_rho(rho).unwrap();
            assert!((mmm_power_moment(&p, 1.0, DEFAULT_RTOL).unwrap() - 1.0).abs() < 1e-8);
        }
    }
}
