//! Monte Carlo estimates.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Monte Carlo mean with its standard error.
///
/// A sample set containing `-inf` produces a `-inf` mean with zero standard
/// error: the estimate is exactly `-inf`, not noisy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub confidence: f64,
}

impl Estimate {
    pub fn exact(value: f64, paths: usize) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            paths,
            confidence: 0.95,
        }
    }

    /// Summation is sequential in index order, so the result depends only on
    /// the sample values and their order.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                paths: 0,
                confidence: 0.95,
            };
        }
        if samples.iter().any(|x| *x == f64::NEG_INFINITY) {
            return Self::exact(f64::NEG_INFINITY, n);
        }
        if samples.iter().all(|x| *x == samples[0]) {
            return Self::exact(samples[0], n);
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            paths: n,
            confidence: 0.95,
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        let half = Z95 * self.stderr;
        (self.mean - half, self.mean + half)
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        (self.stderr * self.stderr + other.stderr * other.stderr).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.mean.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        let (lo, hi) = e.ci();
        assert!((hi - lo - 2.0 * Z95 * e.stderr).abs() < 1e-15);
    }

    #[test]
    fn neg_infinity_propagates() {
        let e = Estimate::from_samples(&[1.0, f64::NEG_INFINITY, 3.0]);
        assert_eq!(e.mean, f64::NEG_INFINITY);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.paths, 3);
    }

    #[test]
    fn constant_samples_have_zero_stderr() {
        let e = Estimate::from_samples(&[0.5; 10]);
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.stderr, 0.0);
    }
}
