//! Path generation for the stochastic-volatility family `S^rho`, general
//! d-dimensional Brownian markets `S^n`, and distances between them.

mod cache;
mod distance;
mod general;
mod heston;

pub use cache::{read_bundle, write_bundle, write_terminals_csv, CACHE_MAGIC, CACHE_VERSION};
pub use distance::{semimartingale_distance, AdversaryRule, DEFAULT_ADVERSARIES};
pub use general::{
    simulate_general_market, ConstantFamily, DegenerateFamily, GeneralPaths, HalfWindowFamily,
    MarketFamily, MarketIndex, VanishingComponentFamily,
};
pub use heston::{
    heston_terminals, log_stochastic_exponential, minimal_martingale_density, simulate_cir,
    simulate_heston_market, stochastic_exponential, HestonParams, HestonTerminals, PathBundle,
};

use crate::error::{invalid, Error, Result};

/// Uniform grid `0 = t_0 < ... < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon", format!("must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(invalid("steps", "need at least one step"));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Index of the node at time `t`, which must coincide with a node.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.steps as f64 || (k * self.dt() - t).abs() > 1e-9 * self.horizon {
            return Err(Error::NotOnGrid(t));
        }
        Ok(k as usize)
    }
}

/// Per-path values on every grid node, path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathArray {
    nodes: usize,
    data: Vec<f64>,
}

impl PathArray {
    pub fn zeros(paths: usize, nodes: usize) -> Self {
        Self {
            nodes,
            data: vec![0.0; paths * nodes],
        }
    }

    pub fn from_vec(nodes: usize, data: Vec<f64>) -> Result<Self> {
        if nodes == 0 || data.len() % nodes != 0 {
            return Err(Error::LengthMismatch {
                expected: nodes,
                found: data.len(),
            });
        }
        Ok(Self { nodes, data })
    }

    pub fn paths(&self) -> usize {
        self.data.len() / self.nodes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn row(&self, path: usize) -> &[f64] {
        &self.data[path * self.nodes..(path + 1) * self.nodes]
    }

    #[inline]
    pub fn row_mut(&mut self, path: usize) -> &mut [f64] {
        &mut self.data[path * self.nodes..(path + 1) * self.nodes]
    }

    pub fn terminal(&self, path: usize) -> f64 {
        self.data[(path + 1) * self.nodes - 1]
    }

    pub fn terminals(&self) -> Vec<f64> {
        (0..self.paths()).map(|i| self.terminal(i)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Read-only view of a tradable market used by the primal engine.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub grid: TimeGrid,
    pub s: &'a PathArray,
    pub b: &'a PathArray,
    pub w: Option<&'a PathArray>,
    pub v: Option<&'a PathArray>,
    pub log_z: &'a PathArray,
}

impl MarketView<'_> {
    pub fn paths(&self) -> usize {
        self.s.paths()
    }

    /// Terminal value of the Brownian driver a claim is written on.
    pub fn driver_terminal(&self, driver: crate::utility::Driver, path: usize) -> f64 {
        match driver {
            crate::utility::Driver::B => self.b.terminal(path),
            crate::utility::Driver::W => self
                .w
                .expect("claim written on W needs a market carrying W")
                .terminal(path),
        }
    }
}
