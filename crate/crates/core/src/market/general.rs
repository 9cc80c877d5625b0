//! General Brownian markets `dS^n = lambda^n |sigma^n|^2 dt + sigma^n . dB`
//! driven by a d-dimensional Brownian motion, for a sequence of indices
//! `n = 1, 2, ...` and a limit `n = inf`.

use rayon::prelude::*;

use super::heston::fill_brownian;
use super::{MarketView, PathArray, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::rng::{Channel, RandomStream};

/// Member of a market sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarketIndex {
    Finite(u32),
    Infinity,
}

impl MarketIndex {
    /// `1/n`, zero at infinity.
    pub fn reciprocal(&self) -> f64 {
        match self {
            MarketIndex::Finite(n) => 1.0 / *n as f64,
            MarketIndex::Infinity => 0.0,
        }
    }
}

impl serde::Serialize for MarketIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::fmt::Display for MarketIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MarketIndex::Finite(n) => write!(f, "{n}"),
            MarketIndex::Infinity => write!(f, "inf"),
        }
    }
}

/// Coefficients `sigma^n(t, B_t)` and `lambda^n(t, B_t)` for every member of
/// a market sequence. The state is the current value of the d-dimensional
/// driver.
pub trait MarketFamily: Sync {
    fn dim(&self) -> usize;
    fn sigma(&self, n: MarketIndex, t: f64, b: &[f64], out: &mut [f64]);
    fn lambda(&self, n: MarketIndex, t: f64, b: &[f64]) -> f64;
}

/// `sigma^n = 1/n`, `lambda^n = 0`, `d = 1`, so `S^n = B/n` and `S^inf = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegenerateFamily;

impl MarketFamily for DegenerateFamily {
    fn dim(&self) -> usize {
        1
    }

    fn sigma(&self, n: MarketIndex, _t: f64, _b: &[f64], out: &mut [f64]) {
        out[0] = n.reciprocal();
    }

    fn lambda(&self, _n: MarketIndex, _t: f64, _b: &[f64]) -> f64 {
        0.0
    }
}

/// Constant one-dimensional coefficients, the same for every index.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFamily {
    pub sigma: f64,
    pub lambda: f64,
}

impl MarketFamily for ConstantFamily {
    fn dim(&self) -> usize {
        1
    }

    fn sigma(&self, _n: MarketIndex, _t: f64, _b: &[f64], out: &mut [f64]) {
        out[0] = self.sigma;
    }

    fn lambda(&self, _n: MarketIndex, _t: f64, _b: &[f64]) -> f64 {
        self.lambda
    }
}

/// Two-dimensional nondegenerate family whose second component vanishes in
/// the limit:
///
/// ```text
/// sigma^n   = (1 + sin(B^1)/2, c (1 + cos(B^2)/2) / n)
/// sigma^inf = (1 + sin(B^1)/2, 0)
/// ```
#[derive(Debug, Clone, Copy)]
pub struct VanishingComponentFamily {
    pub scale: f64,
    pub lambda: f64,
}

impl Default for VanishingComponentFamily {
    fn default() -> Self {
        Self {
            scale: 1.0,
            lambda: 0.5,
        }
    }
}

impl MarketFamily for VanishingComponentFamily {
    fn dim(&self) -> usize {
        2
    }

    fn sigma(&self, n: MarketIndex, _t: f64, b: &[f64], out: &mut [f64]) {
        out[0] = 1.0 + 0.5 * b[0].sin();
        out[1] = self.scale * (1.0 + 0.5 * b[1].cos()) * n.reciprocal();
    }

    fn lambda(&self, _n: MarketIndex, _t: f64, _b: &[f64]) -> f64 {
        self.lambda
    }
}

/// `sigma = 1{t < T/2}` in one dimension.
#[derive(Debug, Clone, Copy)]
pub struct HalfWindowFamily {
    pub horizon: f64,
}

impl MarketFamily for HalfWindowFamily {
    fn dim(&self) -> usize {
        1
    }

    fn sigma(&self, _n: MarketIndex, t: f64, _b: &[f64], out: &mut [f64]) {
        out[0] = if t < 0.5 * self.horizon { 1.0 } else { 0.0 };
    }

    fn lambda(&self, _n: MarketIndex, _t: f64, _b: &[f64]) -> f64 {
        0.0
    }
}

/// Driver, price, martingale part and minimal martingale density of one
/// market member. `log_z` is `log E(-lambda . M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPaths {
    pub index: MarketIndex,
    pub grid: TimeGrid,
    pub seed: u64,
    pub b: Vec<PathArray>,
    pub s: PathArray,
    pub m: PathArray,
    pub log_z: PathArray,
}

impl GeneralPaths {
    pub fn paths(&self) -> usize {
        self.s.paths()
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// View for the primal engine; the first driver component plays `B`.
    pub fn view(&self) -> MarketView<'_> {
        MarketView {
            grid: self.grid,
            s: &self.s,
            b: &self.b[0],
            w: self.b.get(1),
            v: None,
            log_z: &self.log_z,
        }
    }
}

/// Driver components: the first uses the `B` channel, further components
/// the extra channels. Markets built from the same stream share drivers
/// across all indices.
pub(crate) fn simulate_drivers(dim: usize, grid: &TimeGrid, stream: &RandomStream, paths: usize) -> Vec<PathArray> {
    (0..dim)
        .map(|i| {
            let mut arr = PathArray::zeros(paths, grid.nodes());
            let (channel, component) = if i == 0 {
                (Channel::B, 0)
            } else {
                (Channel::Extra, (i - 1) as u64)
            };
            fill_brownian(stream, channel, component, grid, &mut arr);
            arr
        })
        .collect()
}

pub fn simulate_general_market(
    family: &dyn MarketFamily,
    index: MarketIndex,
    grid: &TimeGrid,
    stream: &RandomStream,
    paths: usize,
) -> Result<GeneralPaths> {
    if paths == 0 {
        return Err(invalid("paths", "need at least one path"));
    }
    let d = family.dim();
    if d == 0 {
        return Err(invalid("dim", "driver dimension must be positive"));
    }
    let b = simulate_drivers(d, grid, stream, paths);
    let nodes = grid.nodes();
    let dt = grid.dt();
    let rows: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>)>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut s = vec![0.0; nodes];
            let mut m = vec![0.0; nodes];
            let mut lz = vec![0.0; nodes];
            let mut state = vec![0.0; d];
            let mut sig = vec![0.0; d];
            for k in 0..grid.steps() {
                for (j, comp) in b.iter().enumerate() {
                    state[j] = comp.row(i)[k];
                }
                let t = grid.time(k);
                family.sigma(index, t, &state, &mut sig);
                let lam = family.lambda(index, t, &state);
                let mut dm = 0.0;
                let mut norm2 = 0.0;
                for (j, comp) in b.iter().enumerate() {
                    let row = comp.row(i);
                    dm += sig[j] * (row[k + 1] - row[k]);
                    norm2 += sig[j] * sig[j];
                }
                if !dm.is_finite() || !lam.is_finite() {
                    return Err(Error::NonFinite(format!("market coefficients at node {k}")));
                }
                s[k + 1] = s[k] + lam * norm2 * dt + dm;
                m[k + 1] = m[k] + dm;
                lz[k + 1] = lz[k] - lam * dm - 0.5 * lam * lam * norm2 * dt;
            }
            Ok((s, m, lz))
        })
        .collect();
    let mut s = PathArray::zeros(paths, nodes);
    let mut m = PathArray::zeros(paths, nodes);
    let mut log_z = PathArray::zeros(paths, nodes);
    for (i, r) in rows.into_iter().enumerate() {
        let (rs, rm, rz) = r?;
        s.row_mut(i).copy_from_slice(&rs);
        m.row_mut(i).copy_from_slice(&rm);
        log_z.row_mut(i).copy_from_slice(&rz);
    }
    Ok(GeneralPaths {
        index,
        grid: *grid,
        seed: stream.seed(),
        b,
        s,
        m,
        log_z,
    })
}
