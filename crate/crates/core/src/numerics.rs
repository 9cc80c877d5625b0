//! Small numerical helpers shared across modules.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a concave function on `[lo, hi]`: coarse scan, then golden
/// section inside the best cell. Returns `(argmax, max)`.
pub fn maximize_concave(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const SCAN: usize = 400;
    let h = (hi - lo) / SCAN as f64;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..=SCAN {
        let v = f(lo + i as f64 * h);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = lo + best.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best + 1) as f64 * h).min(hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    // the scan node can beat the refined interior point when the max sits on an edge
    let edge = lo + best as f64 * h;
    if best_val > v {
        (edge, best_val)
    } else {
        (x, v)
    }
}

/// Maximizes a concave function on `[lo, ∞)`, doubling the search window
/// until the maximizer is interior.
pub fn maximize_concave_right_open(f: impl Fn(f64) -> f64, lo: f64, tol: f64) -> (f64, f64) {
    let mut width = 1.0;
    loop {
        let hi = lo + width;
        let (x, v) = maximize_concave(&f, lo, hi, tol);
        if hi - x > 0.01 * width || width > 1e12 {
            return (x, v);
        }
        width *= 4.0;
    }
}

/// Maximizes a concave function on the whole line by expanding a symmetric
/// window around `center`.
pub fn maximize_concave_line(f: impl Fn(f64) -> f64, center: f64, tol: f64) -> (f64, f64) {
    let mut width = 1.0;
    loop {
        let lo = center - width;
        let hi = center + width;
        let (x, v) = maximize_concave(&f, lo, hi, tol);
        let interior = x - lo > 0.01 * width && hi - x > 0.01 * width;
        if interior || width > 1e12 {
            return (x, v);
        }
        width *= 4.0;
    }
}

/// Gauss–Hermite nodes and weights for expectations against N(0, 1),
/// via the Golub–Welsch eigenproblem.
pub fn gauss_hermite_normal(order: usize) -> (Vec<f64>, Vec<f64>) {
    use nalgebra::DMatrix;
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for i in 1..order {
        let off = (i as f64).sqrt();
        jacobi[(i, i - 1)] = off;
        jacobi[(i - 1, i)] = off;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `E[g(mean + sd * G)]` for standard normal `G`.
pub fn normal_expectation(g: impl Fn(f64) -> f64, mean: f64, sd: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_hermite_normal(order);
    nodes
        .iter()
        .zip(&weights)
        .map(|(z, w)| w * g(mean + sd * z))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = maximize_concave(|x| -(x - 0.3).powi(2) + 2.0, -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn edge_maximum() {
        let (x, v) = maximize_concave(|x| -x, 1.0, 3.0, 1e-10);
        assert_eq!(x, 1.0);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn right_open_expands() {
        let (x, _) = maximize_concave_right_open(|x| -(x - 250.0).powi(2), 0.0, 1e-9);
        assert!((x - 250.0).abs() < 1e-6);
    }

    #[test]
    fn gauss_hermite_moments() {
        let (n, w) = gauss_hermite_normal(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = n.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = n.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-11);
    }
}
