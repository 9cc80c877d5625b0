//! Reference values computed without the library's numerics.

#![allow(dead_code)]

/// Closed-form `E[exp(a V_T + b int_0^T V dt)]` for the CIR process
/// `dV = kappa (theta - V) dt + sigma sqrt(V) dW`, from the explicit
/// solution of the constant-coefficient Riccati equation. `None` when the
/// moment blows up before `T` or the roots are complex.
pub fn affine_moment(kappa: f64, theta: f64, sigma: f64, v0: f64, t: f64, a: f64, b: f64) -> Option<f64> {
    let s2 = sigma * sigma;
    let disc = kappa * kappa - 2.0 * s2 * b;
    if disc < 0.0 {
        return None;
    }
    let d = disc.sqrt();
    let r_lo = (kappa - d) / s2;
    let u0 = a - r_lo;
    if u0 == 0.0 {
        return Some((kappa * theta * r_lo * t + r_lo * v0).exp());
    }
    if d == 0.0 {
        // double root: 1/u linear in t
        let w = 1.0 / u0 - 0.5 * s2 * t;
        if w <= 0.0 {
            return None;
        }
        let c = r_lo + 1.0 / w;
        let int_inv_w = -(2.0 / s2) * (w * u0).ln();
        return Some((kappa * theta * (r_lo * t + int_inv_w) + c * v0).exp());
    }
    let big_d = 2.0 * d / s2;
    let k = 1.0 / u0 - 1.0 / big_d;
    let g0 = 1.0 + big_d * k;
    let gt = 1.0 + big_d * k * (d * t).exp();
    if g0 * gt <= 0.0 {
        return None;
    }
    let w_t = gt / big_d;
    let c = r_lo + 1.0 / w_t;
    let int_inv_w = big_d * (t - (gt / g0).ln() / d);
    Some((kappa * theta * (r_lo * t + int_inv_w) + c * v0).exp())
}

/// Textbook CIR zero-coupon bond `E[exp(-r int_0^T V dt)]`.
pub fn cir_bond(kappa: f64, theta: f64, sigma: f64, v0: f64, t: f64, r: f64) -> f64 {
    let h = (kappa * kappa + 2.0 * sigma * sigma * r).sqrt();
    let e = (h * t).exp();
    let den = 2.0 * h + (kappa + h) * (e - 1.0);
    let a = (2.0 * h * ((kappa + h) * t / 2.0).exp() / den).powf(2.0 * kappa * theta / (sigma * sigma));
    let bb = 2.0 * (e - 1.0) / den;
    a * (-bb * r * v0).exp()
}

pub fn cir_mean(kappa: f64, theta: f64, v0: f64, t: f64) -> f64 {
    theta + (v0 - theta) * (-kappa * t).exp()
}

/// `E[g(m + s G)]` by composite Simpson on `[-12, 12]` standard deviations.
pub fn gaussian_expectation(g: impl Fn(f64) -> f64, m: f64, s: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    let f = |z: f64| g(m + s * z) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Maximum of a concave `g` on `[lo, hi]`: dense grid, then ternary
/// refinement around the best grid point.
pub fn grid_max(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 0..=n {
        let v = g(lo + i as f64 * h);
        if v > best.0 {
            best = (v, i);
        }
    }
    let mut a = lo + best.1.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best.1 + 1) as f64 * h).min(hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) < g(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    best.0.max(g(0.5 * (a + b))).max(g(lo)).max(g(hi))
}

/// `-e^{-1/2}` and `-(1 + e^{-1})/2`: exponential utility of the digital
/// claim replicated at price 1/2, and of the claim held unhedged.
pub fn degenerate_values() -> (f64, f64) {
    let finite = -(-0.5f64).exp();
    let limit = -0.5 * (1.0 + (-1.0f64).exp());
    (finite, limit)
}
