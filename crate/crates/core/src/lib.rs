//! Monte Carlo laboratory for utility maximization with random endowment in
//! families of Brownian markets: path simulation, primal and dual bounds,
//! indifference prices and Kunita–Watanabe diagnostics.

pub mod config;
pub mod dual;
pub mod error;
pub mod experiment;
pub mod indifference;
pub mod kw;
pub mod market;
pub mod numerics;
pub mod optim;
pub mod primal;
pub mod report;
pub mod riccati;
pub mod rng;
pub mod stats;
pub mod utility;

pub use error::{Error, Result};

pub use config::{validate_config, ExperimentConfig, ExperimentKind, Violation};
pub use experiment::{run_experiment, Overrides};
pub use market::{HestonParams, MarketIndex, MarketView, PathArray, PathBundle, TimeGrid};
pub use report::RunManifest;
pub use rng::RandomStream;
pub use stats::Estimate;
pub use utility::{ClaimSpec, ConjugatePair, UtilitySpec};
