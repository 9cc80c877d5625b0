//! Kunita–Watanabe projection of an orthogonal integrand `nu . B` onto the
//! martingale part `M^n = sigma^n . B` of a varying market:
//!
//! ```text
//! H^n = nu . sigma^n / |sigma^n|^2   where |sigma^n| != 0, else 0
//! L^n = (nu - H^n sigma^n) . B
//! ```
//!
//! Everything is node-wise on the grid, with predictable brackets
//! `d<X> = |integrand|^2 dt` on the left nodes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{simulate_general_market, GeneralPaths, MarketFamily, MarketIndex, PathBundle, TimeGrid};
use crate::rng::RandomStream;
use crate::stats::Estimate;

/// Orthogonality tolerance for the limiting driver.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    /// `H^n` per left node.
    pub h: Vec<f64>,
    /// `L^n` increments.
    pub l_increments: Vec<f64>,
    /// `M^n` increments.
    pub m_increments: Vec<f64>,
    /// `<H^n . M^n>_T`.
    pub energy: f64,
    /// `<L^n>_T`.
    pub residual_energy: f64,
    /// `<nu . B>_T`.
    pub total_energy: f64,
    /// Largest `|(nu - H^n sigma^n) . sigma^n|` over cells with `|sigma^n| != 0`.
    pub orthogonality_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projection along one path. `nu` and `sigma` hold `steps x d` values
/// (node-major), `db` holds `steps x d` Brownian increments.
pub fn kw_decompose(nu: &[f64], sigma: &[f64], db: &[f64], d: usize, dt: f64) -> Result<ProjectionResult> {
    if d == 0 || nu.len() % d != 0 {
        return Err(Error::LengthMismatch {
            expected: d,
            found: nu.len(),
        });
    }
    for other in [sigma.len(), db.len()] {
        if other != nu.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                found: other,
            });
        }
    }
    let steps = nu.len() / d;
    let mut out = ProjectionResult {
        h: Vec::with_capacity(steps),
        l_increments: Vec::with_capacity(steps),
        m_increments: Vec::with_capacity(steps),
        energy: 0.0,
        residual_energy: 0.0,
        total_energy: 0.0,
        orthogonality_residual: 0.0,
    };
    let mut resid = vec![0.0; d];
    for k in 0..steps {
        let (n, s, b) = (&nu[k * d..(k + 1) * d], &sigma[k * d..(k + 1) * d], &db[k * d..(k + 1) * d]);
        let s2 = dot(s, s);
        let h = if s2 != 0.0 { dot(n, s) / s2 } else { 0.0 };
        for j in 0..d {
            resid[j] = n[j] - h * s[j];
        }
        if s2 != 0.0 {
            out.orthogonality_residual = out.orthogonality_residual.max(dot(&resid, s).abs());
        }
        out.h.push(h);
        out.l_increments.push(dot(&resid, b));
        out.m_increments.push(dot(s, b));
        out.energy += h * h * s2 * dt;
        out.residual_energy += dot(&resid, &resid) * dt;
        out.total_energy += dot(n, n) * dt;
    }
    Ok(out)
}

/// Integrand `nu(t, B_t)` of the orthogonal martingale being projected.
pub trait Integrand: Sync {
    fn eval(&self, t: f64, b: &[f64], out: &mut [f64]);
}

impl<F: Fn(f64, &[f64], &mut [f64]) + Sync> Integrand for F {
    fn eval(&self, t: f64, b: &[f64], out: &mut [f64]) {
        self(t, b, out)
    }
}

/// Unit vector `e_j` in every state.
#[derive(Debug, Clone, Copy)]
pub struct ConstantIntegrand<const D: usize>(pub [f64; D]);

impl<const D: usize> Integrand for ConstantIntegrand<D> {
    fn eval(&self, _t: f64, _b: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KwRow {
    pub n: MarketIndex,
    /// `E[<H^n . M^n>_T]`.
    pub energy: Estimate,
    pub zero_cell_fraction: f64,
    /// Worst per-node orthogonality residual over all paths.
    pub orthogonality_residual: f64,
    /// Worst `|<nu . B>_T - <L^n>_T - <H^n . M^n>_T|` over all paths.
    pub pythagoras_residual: f64,
}

fn node_arrays(
    family: &dyn MarketFamily,
    n: MarketIndex,
    nu: &dyn Integrand,
    market: &GeneralPaths,
    path: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = market.dim();
    let grid = market.grid;
    let steps = grid.steps();
    let mut nus = vec![0.0; steps * d];
    let mut sig = vec![0.0; steps * d];
    let mut db = vec![0.0; steps * d];
    let mut state = vec![0.0; d];
    for k in 0..steps {
        for j in 0..d {
            let row = market.b[j].row(path);
            state[j] = row[k];
            db[k * d + j] = row[k + 1] - row[k];
        }
        let t = grid.time(k);
        family.sigma(n, t, &state, &mut sig[k * d..(k + 1) * d]);
        nu.eval(t, &state, &mut nus[k * d..(k + 1) * d]);
    }
    (nus, sig, db)
}

/// Checks `|nu . sigma^inf| < 1e-10` at every left node of every path.
pub fn check_orthogonal(family: &dyn MarketFamily, nu: &dyn Integrand, market: &GeneralPaths) -> Result<()> {
    let d = market.dim();
    let worst = (0..market.paths())
        .into_par_iter()
        .map(|i| {
            let (nus, sig, _) = node_arrays(family, MarketIndex::Infinity, nu, market, i);
            nus.chunks(d).zip(sig.chunks(d)).map(|(a, b)| dot(a, b).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if worst >= ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(worst));
    }
    Ok(())
}

/// Energies `E[<H^n . M^n>_T]` for each index in `ns`, on drivers shared
/// across indices.
pub fn kw_convergence_diag(
    family: &dyn MarketFamily,
    nu: &dyn Integrand,
    grid: &TimeGrid,
    stream: &RandomStream,
    paths: usize,
    ns: &[MarketIndex],
) -> Result<Vec<KwRow>> {
    if ns.is_empty() {
        return Err(Error::Empty("market index list"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    let mut checked = false;
    for &n in ns {
        let market = simulate_general_market(family, n, grid, stream, paths)?;
        if !checked {
            check_orthogonal(family, nu, &market)?;
            checked = true;
        }
        let d = market.dim();
        let per_path: Vec<(f64, f64, f64, usize)> = (0..paths)
            .into_par_iter()
            .map(|i| {
                let (nus, sig, db) = node_arrays(family, n, nu, &market, i);
                let zeros = sig.chunks(d).filter(|s| dot(s, s) == 0.0).count();
                let p = kw_decompose(&nus, &sig, &db, d, grid.dt()).expect("conformant arrays");
                let pyth = (p.total_energy - p.residual_energy - p.energy).abs();
                (p.energy, p.orthogonality_residual, pyth, zeros)
            })
            .collect();
        let energies: Vec<f64> = per_path.iter().map(|r| r.0).collect();
        let energy = if energies.iter().all(|e| *e == energies[0]) {
            Estimate::exact(energies[0], paths)
        } else {
            Estimate::from_samples(&energies)
        };
        let zeros: usize = per_path.iter().map(|r| r.3).sum();
        rows.push(KwRow {
            n,
            energy,
            zero_cell_fraction: zeros as f64 / (paths * grid.steps()) as f64,
            orthogonality_residual: per_path.iter().map(|r| r.1).fold(0.0, f64::max),
            pythagoras_residual: per_path.iter().map(|r| r.2).fold(0.0, f64::max),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroCells {
    pub zero: usize,
    pub total: usize,
    pub fraction: f64,
}

impl ZeroCells {
    fn new(zero: usize, total: usize) -> Self {
        Self {
            zero,
            total,
            fraction: zero as f64 / total as f64,
        }
    }
}

/// Exact count of `(node, path)` cells with `sigma^n = 0` over the left
/// nodes of the grid.
pub fn nondegeneracy_check(family: &dyn MarketFamily, n: MarketIndex, market: &GeneralPaths) -> ZeroCells {
    let d = market.dim();
    let steps = market.grid.steps();
    let zero: usize = (0..market.paths())
        .into_par_iter()
        .map(|i| {
            let mut state = vec![0.0; d];
            let mut sig = vec![0.0; d];
            (0..steps)
                .filter(|&k| {
                    for j in 0..d {
                        state[j] = market.b[j].row(i)[k];
                    }
                    family.sigma(n, market.grid.time(k), &state, &mut sig);
                    dot(&sig, &sig) == 0.0
                })
                .count()
        })
        .sum();
    ZeroCells::new(zero, market.paths() * steps)
}

/// Cells where the price volatility `sqrt(V)` of a stochastic-volatility
/// bundle vanishes.
pub fn heston_zero_cells(bundle: &PathBundle) -> ZeroCells {
    let steps = bundle.grid.steps();
    let zero = (0..bundle.paths())
        .map(|i| bundle.v.row(i)[..steps].iter().filter(|v| **v == 0.0).count())
        .sum();
    ZeroCells::new(zero, bundle.paths() * steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DegenerateFamily, HalfWindowFamily, VanishingComponentFamily};

    #[test]
    fn two_dimensional_formula() {
        let n = 5.0;
        let r = kw_decompose(&[0.0, 1.0], &[1.0, 1.0 / n], &[0.3, -0.2], 2, 0.1).unwrap();
        assert_eq!(r.h[0], (1.0 / n) / (1.0 + 1.0 / (n * n)));
    }

    #[test]
    fn parallel_integrand_is_fully_projected() {
        let r = kw_decompose(&[2.0, 4.0], &[1.0, 2.0], &[0.5, 0.1], 2, 0.1).unwrap();
        assert_eq!(r.h[0], 2.0);
        assert_eq!(r.l_increments[0], 0.0);
    }

    #[test]
    fn zero_sigma_uses_indicator() {
        let r = kw_decompose(&[1.0], &[0.0], &[0.4], 1, 0.1).unwrap();
        assert_eq!(r.h[0], 0.0);
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn degenerate_energy_is_horizon() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let nu = ConstantIntegrand([1.0]);
        let rows = kw_convergence_diag(
            &DegenerateFamily,
            &nu,
            &g,
            &RandomStream::new(1),
            50,
            &[MarketIndex::Finite(1), MarketIndex::Finite(10), MarketIndex::Finite(100)],
        )
        .unwrap();
        for r in rows {
            assert!((r.energy.mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_orthogonal_integrand_rejected() {
        let g = TimeGrid::new(1.0, 8).unwrap();
        let nu = ConstantIntegrand([1.0, 0.0]);
        let r = kw_convergence_diag(
            &VanishingComponentFamily::default(),
            &nu,
            &g,
            &RandomStream::new(1),
            5,
            &[MarketIndex::Finite(1)],
        );
        assert!(matches!(r, Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn zero_cell_fractions() {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let s = RandomStream::new(2);
        let m = simulate_general_market(&DegenerateFamily, MarketIndex::Infinity, &g, &s, 10).unwrap();
        assert_eq!(nondegeneracy_check(&DegenerateFamily, MarketIndex::Infinity, &m).fraction, 1.0);
        let hw = HalfWindowFamily { horizon: 1.0 };
        let m = simulate_general_market(&hw, MarketIndex::Finite(1), &g, &s, 10).unwrap();
        assert_eq!(nondegeneracy_check(&hw, MarketIndex::Finite(1), &m).fraction, 0.5);
    }
}
