//! Stochastic-volatility markets
//!
//! ```text
//! dS = mu V dt + sqrt(V) (sqrt(1 - rho^2) dB + rho dW),   S_0 = 0
//! dV = kappa (theta - V) dt + sigma sqrt(V) dB
//! ```
//!
//! discretized with full-truncation Euler: the negative part of the raw
//! variance state is zeroed inside drift and diffusion, and the stored `V`
//! is the truncated value. All increments are taken as differences of the
//! stored Brownian nodes, so every derived quantity can be recomputed from
//! a bundle bit-for-bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MarketView, PathArray, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::rng::{Channel, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub mu: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub v0: f64,
    pub rho: f64,
    pub horizon: f64,
}

impl HestonParams {
    pub fn new(mu: f64, kappa: f64, theta: f64, sigma: f64, v0: f64, rho: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            mu,
            kappa,
            theta,
            sigma,
            v0,
            rho,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma", self.sigma),
            ("v0", self.v0),
            ("horizon", self.horizon),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::InvalidRho(self.rho));
        }
        let lhs = 2.0 * self.kappa * self.theta;
        let rhs = self.sigma * self.sigma;
        if lhs < rhs {
            return Err(Error::Feller { lhs, rhs });
        }
        Ok(())
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        let mut p = *self;
        p.rho = rho;
        p.validate()?;
        Ok(p)
    }

    /// `E[V_t] = theta + (V_0 - theta) e^{-kappa t}`.
    pub fn mean_variance(&self, t: f64) -> f64 {
        self.theta + (self.v0 - self.theta) * (-self.kappa * t).exp()
    }

    /// `E[int_0^t V ds]`.
    pub fn mean_integrated_variance(&self, t: f64) -> f64 {
        self.theta * t + (self.v0 - self.theta) * (1.0 - (-self.kappa * t).exp()) / self.kappa
    }
}

/// Paths of `B`, `W`, `V`, `S^rho` and `log Z^rho` on a grid.
///
/// `Z^rho = E(-mu sqrt(V) . B^rho)` with `B^rho = sqrt(1-rho^2) B + rho W`
/// is the minimal martingale density of `S^rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub params: HestonParams,
    pub grid: TimeGrid,
    pub seed: u64,
    pub b: PathArray,
    pub w: PathArray,
    pub v: PathArray,
    pub s: PathArray,
    pub log_z: PathArray,
}

impl PathBundle {
    pub fn paths(&self) -> usize {
        self.b.paths()
    }

    pub fn view(&self) -> MarketView<'_> {
        MarketView {
            grid: self.grid,
            s: &self.s,
            b: &self.b,
            w: Some(&self.w),
            v: Some(&self.v),
            log_z: &self.log_z,
        }
    }

    pub fn terminal_densities(&self) -> Vec<f64> {
        self.log_z.terminals().into_iter().map(f64::exp).collect()
    }
}

struct StepInputs {
    db: f64,
    dw: f64,
}

/// One Euler step of the coupled system. Returns the next raw variance
/// state plus the increments of `S` and `log Z`.
#[inline]
fn euler_step(p: &HestonParams, dt: f64, v_raw: f64, inc: &StepInputs) -> (f64, f64, f64, f64) {
    let c = (1.0 - p.rho * p.rho).sqrt();
    let v = v_raw.max(0.0);
    let sv = v.sqrt();
    let v_next = v_raw + p.kappa * (p.theta - v) * dt + p.sigma * sv * inc.db;
    let db_rho = c * inc.db + p.rho * inc.dw;
    let ds = p.mu * v * dt + sv * db_rho;
    let integrand = -p.mu * sv;
    let dlog_z = integrand * db_rho - 0.5 * integrand * integrand * dt;
    (v_next, v, ds, dlog_z)
}

fn check_counts(grid: &TimeGrid, paths: usize) -> Result<()> {
    if paths == 0 {
        return Err(invalid("paths", "need at least one path"));
    }
    if grid.steps() == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    Ok(())
}

/// Brownian node values for one path and channel, built by cumulative sums.
fn brownian_row(stream: &RandomStream, path: usize, channel: Channel, component: u64, grid: &TimeGrid, out: &mut [f64]) {
    let mut g = stream.generator(path as u64, channel, component);
    let sq = grid.dt().sqrt();
    out[0] = 0.0;
    for k in 0..grid.steps() {
        out[k + 1] = out[k] + g.increment(sq);
    }
}

pub(crate) fn fill_brownian(stream: &RandomStream, channel: Channel, component: u64, grid: &TimeGrid, arr: &mut PathArray) {
    let nodes = grid.nodes();
    arr.as_mut_slice()
        .par_chunks_mut(nodes)
        .enumerate()
        .for_each(|(i, row)| brownian_row(stream, i, channel, component, grid, row));
}

/// CIR variance paths by full-truncation Euler, driven by the `B` channel.
pub fn simulate_cir(params: &HestonParams, grid: &TimeGrid, stream: &RandomStream, paths: usize) -> Result<PathArray> {
    params.validate()?;
    check_counts(grid, paths)?;
    let nodes = grid.nodes();
    let dt = grid.dt();
    let mut v = PathArray::zeros(paths, nodes);
    v.as_mut_slice()
        .par_chunks_mut(nodes)
        .enumerate()
        .for_each_init(
            || vec![0.0; nodes],
            |b, (i, row)| {
                brownian_row(stream, i, Channel::B, 0, grid, b);
                let mut raw = params.v0;
                row[0] = params.v0;
                for k in 0..grid.steps() {
                    let inc = StepInputs {
                        db: b[k + 1] - b[k],
                        dw: 0.0,
                    };
                    raw = euler_step(params, dt, raw, &inc).0;
                    row[k + 1] = raw.max(0.0);
                }
            },
        );
    Ok(v)
}

/// Full bundle for one correlation. Bundles generated from the same stream
/// share `B`, `W` and `V` across every `rho`.
pub fn simulate_heston_market(
    params: &HestonParams,
    grid: &TimeGrid,
    stream: &RandomStream,
    paths: usize,
) -> Result<PathBundle> {
    params.validate()?;
    check_counts(grid, paths)?;
    let nodes = grid.nodes();
    let dt = grid.dt();
    let mut b = PathArray::zeros(paths, nodes);
    let mut w = PathArray::zeros(paths, nodes);
    let mut v = PathArray::zeros(paths, nodes);
    let mut s = PathArray::zeros(paths, nodes);
    let mut log_z = PathArray::zeros(paths, nodes);
    b.as_mut_slice()
        .par_chunks_mut(nodes)
        .zip(w.as_mut_slice().par_chunks_mut(nodes))
        .zip(v.as_mut_slice().par_chunks_mut(nodes))
        .zip(s.as_mut_slice().par_chunks_mut(nodes))
        .zip(log_z.as_mut_slice().par_chunks_mut(nodes))
        .enumerate()
        .for_each(|(i, ((((b, w), v), s), lz))| {
            brownian_row(stream, i, Channel::B, 0, grid, b);
            brownian_row(stream, i, Channel::W, 0, grid, w);
            let mut raw = params.v0;
            v[0] = params.v0;
            s[0] = 0.0;
            lz[0] = 0.0;
            for k in 0..grid.steps() {
                let inc = StepInputs {
                    db: b[k + 1] - b[k],
                    dw: w[k + 1] - w[k],
                };
                let (next, _, ds, dlz) = euler_step(params, dt, raw, &inc);
                raw = next;
                v[k + 1] = raw.max(0.0);
                s[k + 1] = s[k] + ds;
                lz[k + 1] = lz[k] + dlz;
            }
        });
    Ok(PathBundle {
        params: *params,
        grid: *grid,
        seed: stream.seed(),
        b,
        w,
        v,
        s,
        log_z,
    })
}

/// Terminal summaries of a Heston ensemble, computed without storing paths.
/// Numbers agree bit-for-bit with the corresponding bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct HestonTerminals {
    pub b_t: Vec<f64>,
    pub w_t: Vec<f64>,
    pub v_t: Vec<f64>,
    /// Left-endpoint `sum V_k dt`.
    pub int_v: Vec<f64>,
    pub s_t: Vec<f64>,
    pub log_z_t: Vec<f64>,
    /// Realized `sum (dS)^2`.
    pub qv_s: Vec<f64>,
}

impl HestonTerminals {
    pub fn paths(&self) -> usize {
        self.b_t.len()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.log_z_t.iter().map(|l| l.exp()).collect()
    }
}

pub fn heston_terminals(
    params: &HestonParams,
    grid: &TimeGrid,
    stream: &RandomStream,
    paths: usize,
) -> Result<HestonTerminals> {
    params.validate()?;
    check_counts(grid, paths)?;
    let nodes = grid.nodes();
    let dt = grid.dt();
    let rows: Vec<[f64; 7]> = (0..paths)
        .into_par_iter()
        .map_init(
            || (vec![0.0; nodes], vec![0.0; nodes]),
            |(b, w), i| {
                brownian_row(stream, i, Channel::B, 0, grid, b);
                brownian_row(stream, i, Channel::W, 0, grid, w);
                let (mut raw, mut s, mut lz, mut int_v, mut qv) = (params.v0, 0.0, 0.0, 0.0, 0.0);
                for k in 0..grid.steps() {
                    let inc = StepInputs {
                        db: b[k + 1] - b[k],
                        dw: w[k + 1] - w[k],
                    };
                    let (next, v_used, ds, dlz) = euler_step(params, dt, raw, &inc);
                    raw = next;
                    int_v += v_used * dt;
                    qv += ds * ds;
                    s += ds;
                    lz += dlz;
                }
                [b[grid.steps()], w[grid.steps()], raw.max(0.0), int_v, s, lz, qv]
            },
        )
        .collect();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    Ok(HestonTerminals {
        b_t: col(0),
        w_t: col(1),
        v_t: col(2),
        int_v: col(3),
        s_t: col(4),
        log_z_t: col(5),
        qv_s: col(6),
    })
}

/// `log E(theta . M)` on the grid: increments `theta_k dM_k - theta_k^2 d<M>_k / 2`.
pub fn log_stochastic_exponential(integrand: &[f64], increments: &[f64], qv_increments: &[f64]) -> Result<Vec<f64>> {
    if increments.len() != integrand.len() {
        return Err(Error::LengthMismatch {
            expected: integrand.len(),
            found: increments.len(),
        });
    }
    if qv_increments.len() != integrand.len() {
        return Err(Error::LengthMismatch {
            expected: integrand.len(),
            found: qv_increments.len(),
        });
    }
    let mut out = Vec::with_capacity(integrand.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for ((th, dm), dq) in integrand.iter().zip(increments).zip(qv_increments) {
        acc += th * dm - 0.5 * th * th * dq;
        out.push(acc);
    }
    Ok(out)
}

/// Discrete stochastic exponential, built in log space so it is strictly
/// positive.
pub fn stochastic_exponential(integrand: &[f64], increments: &[f64], qv_increments: &[f64]) -> Result<Vec<f64>> {
    Ok(log_stochastic_exponential(integrand, increments, qv_increments)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Terminal minimal martingale densities `Z_T = E(-mu sqrt(V) . B^rho)_T`,
/// recomputed from the bundle's `B`, `W` and `V`.
pub fn minimal_martingale_density(bundle: &PathBundle, params: &HestonParams) -> Result<Vec<f64>> {
    let nodes = bundle.grid.nodes();
    if bundle.v.nodes() != nodes {
        return Err(Error::LengthMismatch {
            expected: nodes,
            found: bundle.v.nodes(),
        });
    }
    let dt = bundle.grid.dt();
    let c = (1.0 - params.rho * params.rho).sqrt();
    (0..bundle.paths())
        .into_par_iter()
        .map(|i| {
            let (b, w, v) = (bundle.b.row(i), bundle.w.row(i), bundle.v.row(i));
            let steps = nodes - 1;
            let integrand: Vec<f64> = v[..steps].iter().map(|v| -params.mu * v.sqrt()).collect();
            let inc: Vec<f64> = (0..steps)
                .map(|k| c * (b[k + 1] - b[k]) + params.rho * (w[k + 1] - w[k]))
                .collect();
            let qv = vec![dt; steps];
            let path = log_stochastic_exponential(&integrand, &inc, &qv)?;
            Ok(path[steps].exp())
        })
        .collect()
}
