//! Monte Carlo upper bounds on dual value functions.
//!
//! The baseline density is the minimal martingale density `Z` carried by a
//! bundle. Perturbed densities `Z E(L)` use `L = nu . W_perp` with
//! `W_perp = sqrt(1-rho^2) W - rho B`, which is orthogonal to the price
//! martingale, and `nu` piecewise constant in time times the state basis
//! `{1, V, B}`. `E(L)` is stopped at the cap `C`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::market::PathBundle;
use crate::numerics;
use crate::optim::{nelder_mead, CoefficientBox};
use crate::stats::Estimate;
use crate::utility::{ClaimSpec, ConjugatePair, Domain};

/// Number of state basis functions per time bucket.
pub const STATE_BASIS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCandidate {
    buckets: usize,
    /// `buckets x {1, V, B}`, bucket-major.
    coeffs: Vec<f64>,
    cap: f64,
}

impl DualCandidate {
    pub fn new(buckets: usize, coeffs: Vec<f64>, cap: f64) -> Result<Self> {
        if buckets == 0 {
            return Err(invalid("buckets", "need at least one bucket"));
        }
        if coeffs.len() != buckets * STATE_BASIS {
            return Err(Error::LengthMismatch {
                expected: buckets * STATE_BASIS,
                found: coeffs.len(),
            });
        }
        if !(cap >= 1.0) || !cap.is_finite() {
            return Err(invalid("cap", format!("must be finite and at least 1, got {cap}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("dual candidate coefficients".into()));
        }
        Ok(Self { buckets, coeffs, cap })
    }

    pub fn zero(buckets: usize, cap: f64) -> Result<Self> {
        Self::new(buckets, vec![0.0; buckets * STATE_BASIS], cap)
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    fn nu(&self, bucket: usize, v: f64, b: f64) -> f64 {
        let c = &self.coeffs[bucket * STATE_BASIS..(bucket + 1) * STATE_BASIS];
        c[0] + c[1] * v + c[2] * b
    }

    /// `log E(L)` along one path, stopped at `log C`.
    pub fn log_exponential_path(&self, bundle: &PathBundle, path: usize) -> Vec<f64> {
        let grid = bundle.grid;
        let steps = grid.steps();
        let dt = grid.dt();
        let rho = bundle.params.rho;
        let c = (1.0 - rho * rho).sqrt();
        let log_cap = self.cap.ln();
        let (b, w, v) = (bundle.b.row(path), bundle.w.row(path), bundle.v.row(path));
        let mut out = vec![0.0; steps + 1];
        let mut frozen = false;
        for k in 0..steps {
            if frozen {
                out[k + 1] = out[k];
                continue;
            }
            let bucket = (k * self.buckets) / steps;
            let nu = self.nu(bucket, v[k], b[k]);
            let d_perp = c * (w[k + 1] - w[k]) - rho * (b[k + 1] - b[k]);
            let next = out[k] + nu * d_perp - 0.5 * nu * nu * dt;
            if next >= log_cap {
                out[k + 1] = log_cap;
                frozen = true;
            } else {
                out[k + 1] = next;
            }
        }
        out
    }

    fn log_terminal(&self, bundle: &PathBundle, path: usize) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        *self.log_exponential_path(bundle, path).last().expect("nonempty path")
    }
}

/// Per-path dual objective at densities `y Z_T`:
/// `V_c(y Z_T, f)` for halfline utilities with a claim,
/// `V(y Z_T) + y Z_T f` otherwise.
pub fn dual_objective_samples(
    y: f64,
    pair: &ConjugatePair,
    claim: Option<&ClaimSpec>,
    densities: &[f64],
    claim_drivers: &[f64],
) -> Result<Vec<f64>> {
    if !(y > 0.0) {
        return Err(Error::NonPositive(y));
    }
    if claim.is_some() && claim_drivers.len() != densities.len() {
        return Err(Error::LengthMismatch {
            expected: densities.len(),
            found: claim_drivers.len(),
        });
    }
    let halfline = pair.utility().domain() == Domain::PositiveHalfline;
    let samples: Vec<f64> = densities
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let yz = y * z;
            match claim {
                None => pair.conjugate_unchecked(yz),
                Some(c) => {
                    let f = c.eval(claim_drivers[i]);
                    if halfline {
                        pair.constrained_conjugate_unchecked(yz, f, c.phi_min())
                    } else {
                        pair.conjugate_unchecked(yz) + yz * f
                    }
                }
            }
        })
        .collect();
    if let Some(i) = samples.iter().position(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
        return Err(Error::NonFinite(format!("dual sample at path {i}")));
    }
    Ok(samples)
}

fn claim_drivers(claim: Option<&ClaimSpec>, bundle: &PathBundle) -> Vec<f64> {
    match claim {
        None => Vec::new(),
        Some(c) => {
            let view = bundle.view();
            (0..bundle.paths()).map(|i| view.driver_terminal(c.driver(), i)).collect()
        }
    }
}

/// Upper bound on `v(y)` from the single density `Z_T`.
pub fn dual_bound_mmm(y: f64, pair: &ConjugatePair, claim: Option<&ClaimSpec>, bundle: &PathBundle) -> Result<Estimate> {
    let z = bundle.terminal_densities();
    let drivers = claim_drivers(claim, bundle);
    let s = dual_objective_samples(y, pair, claim, &z, &drivers)?;
    if s.iter().all(|v| *v == s[0]) {
        return Ok(Estimate::exact(s[0], s.len()));
    }
    Ok(Estimate::from_samples(&s))
}

/// Upper bound on `v(y)` from the density `Z_T E(L)_T`.
pub fn dual_bound_perturbed(
    y: f64,
    pair: &ConjugatePair,
    claim: Option<&ClaimSpec>,
    bundle: &PathBundle,
    candidate: &DualCandidate,
) -> Result<Estimate> {
    if candidate.is_zero() {
        return dual_bound_mmm(y, pair, claim, bundle);
    }
    let log_cap = candidate.cap.ln();
    let logs: Vec<f64> = (0..bundle.paths())
        .into_par_iter()
        .map(|i| candidate.log_terminal(bundle, i))
        .collect();
    if let Some(l) = logs.iter().find(|l| **l > log_cap) {
        return Err(Error::Invariant(format!("stopped exponential {} exceeds cap {}", l.exp(), candidate.cap)));
    }
    let z: Vec<f64> = bundle
        .log_z
        .terminals()
        .iter()
        .zip(&logs)
        .map(|(lz, ll)| (lz + ll).exp())
        .collect();
    let drivers = claim_drivers(claim, bundle);
    let s = dual_objective_samples(y, pair, claim, &z, &drivers)?;
    Ok(Estimate::from_samples(&s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualOptimum {
    pub candidate: DualCandidate,
    pub estimate: Estimate,
    pub evaluations: usize,
}

/// Nelder–Mead over the candidate coefficients inside `family`, all
/// evaluations sharing the bundle. The box dimension fixes the bucket
/// count. The search starts from `nu = 0` clamped into the box.
pub fn minimize_dual(
    y: f64,
    pair: &ConjugatePair,
    claim: Option<&ClaimSpec>,
    bundle: &PathBundle,
    family: &CoefficientBox,
    cap: f64,
    budget: usize,
) -> Result<DualOptimum> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    let dim = family.dim();
    if dim == 0 || dim % STATE_BASIS != 0 {
        return Err(invalid("family", format!("box dimension {dim} is not a multiple of {STATE_BASIS}")));
    }
    let buckets = dim / STATE_BASIS;
    DualCandidate::zero(buckets, cap)?;
    let objective = |c: &[f64]| {
        DualCandidate::new(buckets, c.to_vec(), cap)
            .and_then(|cand| dual_bound_perturbed(y, pair, claim, bundle, &cand))
            .map(|e| e.mean)
            .unwrap_or(f64::NAN)
    };
    let report = nelder_mead(objective, &vec![0.0; dim], family, budget)?;
    let candidate = DualCandidate::new(buckets, report.point, cap)?;
    let estimate = dual_bound_perturbed(y, pair, claim, bundle, &candidate)?;
    Ok(DualOptimum {
        candidate,
        estimate,
        evaluations: report.evaluations,
    })
}

/// `E[phi(B_T - B_{T'} + x)]`, the conditional claim value under the
/// measure that kills the drift of `B` on `[0, T']`. Small values over
/// `x` and `T' -> T` show the subreplication price sinking to `phi_min`.
pub fn subreplication_estimate(claim: &ClaimSpec, shift: f64, handoff: f64, bundle: &PathBundle) -> Result<Estimate> {
    let horizon = bundle.grid.horizon();
    if !(handoff > 0.0 && handoff < horizon) {
        return Err(Error::Handoff { handoff, horizon });
    }
    if bundle.params.rho == 0.0 {
        return Err(Error::RequiresNonzeroRho);
    }
    let k = bundle.grid.index_of(handoff)?;
    if claim.is_constant() {
        return Ok(Estimate::exact(claim.phi_min(), bundle.paths()));
    }
    let samples: Vec<f64> = (0..bundle.paths())
        .map(|i| {
            let b = bundle.b.row(i);
            claim.eval(b[bundle.grid.steps()] - b[k] + shift)
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Gauss–Hermite value of `E[phi(sqrt(T - T') G + x)]`.
pub fn subreplication_quadrature(claim: &ClaimSpec, shift: f64, gap: f64, order: usize) -> f64 {
    numerics::normal_expectation(|z| claim.eval(z), shift, gap.sqrt(), order)
}
