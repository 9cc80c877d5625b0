//! Versioned TOML experiment configuration and its validator.
//!
//! ```toml
//! schema_version = 1
//! kind = "degenerate"
//! seed = 42
//! paths = 10000
//! steps = 256
//! ```
//!
//! Every section has defaults, so the example above is a complete config.
//! Counts are read as signed integers so that a negative value reaches the
//! validator instead of failing in the parser.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{HestonParams, MarketIndex};
use crate::primal::{HedgeBasis, HedgeFeatures, STRATEGY_DIM};
use crate::utility::{ClaimSpec, ConjugatePair, Driver, UtilitySpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sweep,
    Degenerate,
    Kw,
    Subreplication,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Degenerate => "degenerate",
            ExperimentKind::Kw => "kw",
            ExperimentKind::Subreplication => "subreplication",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    pub mu: f64,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub v0: f64,
    pub rho: f64,
    pub horizon: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        Self {
            mu: 0.5,
            kappa: 2.0,
            theta: 1.0,
            sigma: 1.0,
            v0: 1.0,
            rho: 0.0,
            horizon: 1.0,
        }
    }
}

impl MarketSection {
    pub fn params(&self) -> Result<HestonParams> {
        HestonParams::new(self.mu, self.kappa, self.theta, self.sigma, self.v0, self.rho, self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKindName {
    Power,
    Log,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilitySection {
    pub kind: UtilityKindName,
    /// Power exponent.
    pub p: f64,
    /// Exponential risk aversion.
    pub alpha: f64,
}

impl Default for UtilitySection {
    fn default() -> Self {
        Self {
            kind: UtilityKindName::Power,
            p: 0.5,
            alpha: 1.0,
        }
    }
}

impl UtilitySection {
    pub fn spec(&self) -> Result<UtilitySpec> {
        match self.kind {
            UtilityKindName::Power => UtilitySpec::power(self.p),
            UtilityKindName::Log => Ok(UtilitySpec::log()),
            UtilityKindName::Exponential => UtilitySpec::exponential(self.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimKindName {
    Zero,
    Constant,
    Logistic,
    Digital,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaimSection {
    pub kind: ClaimKindName,
    pub value: f64,
    pub slope: f64,
    pub knots: i64,
    pub threshold: f64,
    /// Two-column `z,phi` table, relative to the config file.
    pub file: Option<String>,
    /// `"B"` or `"W"`.
    pub driver: String,
}

impl Default for ClaimSection {
    fn default() -> Self {
        Self {
            kind: ClaimKindName::Logistic,
            value: 0.0,
            slope: -2.0,
            knots: 401,
            threshold: 0.0,
            file: None,
            driver: "B".into(),
        }
    }
}

impl ClaimSection {
    pub fn spec(&self, base_dir: &Path) -> Result<ClaimSpec> {
        let claim = match self.kind {
            ClaimKindName::Zero => ClaimSpec::zero(),
            ClaimKindName::Constant => ClaimSpec::constant(self.value)?,
            ClaimKindName::Logistic => ClaimSpec::logistic(self.slope, usize::try_from(self.knots).unwrap_or(0))?,
            ClaimKindName::Digital => ClaimSpec::digital(self.threshold)?,
            ClaimKindName::Table => {
                let file = self.file.as_deref().ok_or_else(|| Error::Parse {
                    what: "claim".into(),
                    reason: "table claim needs `file`".into(),
                })?;
                ClaimSpec::load(&base_dir.join(file))?
            }
        };
        let driver = match self.driver.as_str() {
            "W" => Driver::W,
            _ => Driver::B,
        };
        Ok(claim.on_driver(driver))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: Vec<f64>,
    pub budget: i64,
    pub with_prices: bool,
    pub train_margin: f64,
    pub start: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub degree_b: i64,
    pub degree_v: i64,
    pub buckets: i64,
    pub tolerance: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            x: vec![0.2],
            y: (0..40).map(|i| 0.3 + 0.05 * i as f64).collect(),
            rho: vec![0.4, 0.2, 0.1, 0.05],
            budget: 80,
            with_prices: true,
            train_margin: 0.1,
            start: vec![-1.0, 1.0, 0.0, 0.0, 0.0],
            lower: vec![-2.0, 0.0, -1.0, -1.0, -1.0],
            upper: vec![0.0, 4.0, 1.0, 1.0, 1.0],
            degree_b: 2,
            degree_v: 2,
            buckets: 8,
            tolerance: 1e-3,
        }
    }
}

/// Market index written as an integer or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IndexEntry {
    Finite(i64),
    Named(String),
}

impl IndexEntry {
    pub fn index(&self) -> Option<MarketIndex> {
        match self {
            IndexEntry::Finite(n) if *n >= 1 => u32::try_from(*n).ok().map(MarketIndex::Finite),
            IndexEntry::Named(s) if s == "inf" => Some(MarketIndex::Infinity),
            _ => None,
        }
    }
}

fn default_ns() -> Vec<IndexEntry> {
    vec![
        IndexEntry::Finite(1),
        IndexEntry::Finite(2),
        IndexEntry::Finite(4),
        IndexEntry::Finite(8),
        IndexEntry::Named("inf".into()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegenerateSection {
    pub ns: Vec<IndexEntry>,
    pub alpha: f64,
    pub x: f64,
    pub budget: i64,
    pub degree_b: i64,
    pub buckets: i64,
    pub weight_range: [f64; 2],
}

impl Default for DegenerateSection {
    fn default() -> Self {
        Self {
            ns: default_ns(),
            alpha: 1.0,
            x: 0.0,
            budget: 40,
            degree_b: 6,
            buckets: 8,
            weight_range: [-2.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KwFamilyName {
    Vanishing,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KwSection {
    pub family: KwFamilyName,
    pub ns: Vec<IndexEntry>,
    pub scale: f64,
}

impl Default for KwSection {
    fn default() -> Self {
        Self {
            family: KwFamilyName::Vanishing,
            ns: [1, 10, 100].into_iter().map(IndexEntry::Finite).collect(),
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubreplicationSection {
    /// `T - T'`; must put `T'` on the grid.
    pub gap: f64,
    pub shift_min: f64,
    pub shift_max: f64,
    pub shift_count: i64,
    pub quadrature_order: i64,
}

impl Default for SubreplicationSection {
    fn default() -> Self {
        Self {
            gap: 0.01,
            shift_min: 0.0,
            shift_max: 4.0,
            shift_count: 41,
            quadrature_order: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub rtol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            a: vec![-0.5, 0.0, 0.3],
            b: vec![-0.5, 0.0, 0.3],
            rtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: i64,
    #[serde(default = "default_steps")]
    pub steps: i64,
    #[serde(default)]
    pub market: MarketSection,
    #[serde(default)]
    pub utility: UtilitySection,
    #[serde(default)]
    pub claim: ClaimSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub degenerate: DegenerateSection,
    #[serde(default)]
    pub kw: KwSection,
    #[serde(default)]
    pub subreplication: SubreplicationSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

fn default_seed() -> u64 {
    42
}

fn default_paths() -> i64 {
    10_000
}

fn default_steps() -> i64 {
    256
}

impl ExperimentConfig {
    pub fn minimal(kind: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            seed: default_seed(),
            paths: default_paths(),
            steps: default_steps(),
            market: MarketSection::default(),
            utility: UtilitySection::default(),
            claim: ClaimSection::default(),
            sweep: SweepSection::default(),
            degenerate: DegenerateSection::default(),
            kw: KwSection::default(),
            subreplication: SubreplicationSection::default(),
            oracle: OracleSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "config".into(),
            reason: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn paths_usize(&self) -> usize {
        usize::try_from(self.paths).unwrap_or(0)
    }

    pub fn steps_usize(&self) -> usize {
        usize::try_from(self.steps).unwrap_or(0)
    }

    pub fn pair(&self) -> Result<ConjugatePair> {
        Ok(ConjugatePair::new(self.utility.spec()?))
    }

    pub fn sweep_basis(&self) -> HedgeBasis {
        HedgeBasis {
            degree_b: self.sweep.degree_b.max(0) as usize,
            degree_v: self.sweep.degree_v.max(0) as usize,
            buckets: self.sweep.buckets.max(1) as usize,
            features: HedgeFeatures::Polynomial,
        }
    }

    pub fn degenerate_basis(&self) -> HedgeBasis {
        HedgeBasis {
            degree_b: self.degenerate.degree_b.max(0) as usize,
            degree_v: 0,
            buckets: self.degenerate.buckets.max(1) as usize,
            features: HedgeFeatures::ScaledPolynomial,
        }
    }
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field: &str, reason: impl Into<String>) {
        self.0.push(Violation {
            field: field.into(),
            reason: reason.into(),
        });
    }

    fn positive(&mut self, field: &str, v: i64) {
        if v <= 0 {
            self.push(field, format!("must be positive, got {v}"));
        }
    }

    fn rho(&mut self, field: &str, rho: f64) {
        if !(rho > -1.0 && rho < 1.0) {
            self.push(field, "rho must lie in (-1, 1)");
        }
    }
}

/// Lists every violation in `cfg`; an empty list means the config is valid.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut c = Collector(Vec::new());
    if cfg.schema_version != SCHEMA_VERSION {
        c.push(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
        );
    }
    c.positive("paths", cfg.paths);
    c.positive("steps", cfg.steps);

    let m = &cfg.market;
    for (name, v) in [
        ("kappa", m.kappa),
        ("theta", m.theta),
        ("sigma", m.sigma),
        ("v0", m.v0),
        ("horizon", m.horizon),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            c.push(&format!("market.{name}"), format!("must be positive, got {v}"));
        }
    }
    if !m.mu.is_finite() {
        c.push("market.mu", "must be finite");
    }
    c.rho("market.rho", m.rho);
    if 2.0 * m.kappa * m.theta < m.sigma * m.sigma {
        c.push(
            "market",
            format!(
                "Feller condition violated: 2*kappa*theta = {} < sigma^2 = {}",
                2.0 * m.kappa * m.theta,
                m.sigma * m.sigma
            ),
        );
    }
    if let Err(e) = cfg.utility.spec() {
        c.push("utility", e.to_string());
    }
    if cfg.claim.kind == ClaimKindName::Table && cfg.claim.file.is_none() {
        c.push("claim.file", "table claim needs a file");
    }
    if cfg.claim.kind == ClaimKindName::Logistic {
        if cfg.claim.knots < 2 {
            c.push("claim.knots", "need at least 2 knots");
        }
        if !(cfg.claim.slope.is_finite() && cfg.claim.slope != 0.0) {
            c.push("claim.slope", "must be finite and nonzero");
        }
    }
    if !matches!(cfg.claim.driver.as_str(), "B" | "W") {
        c.push("claim.driver", "must be \"B\" or \"W\"");
    }

    match cfg.kind {
        ExperimentKind::Sweep => {
            let s = &cfg.sweep;
            if s.x.is_empty() {
                c.push("sweep.x", "must not be empty");
            }
            if s.y.is_empty() {
                c.push("sweep.y", "must not be empty");
            }
            if s.y.iter().any(|y| !(*y > 0.0)) {
                c.push("sweep.y", "dual variables must be positive");
            }
            for rho in &s.rho {
                c.rho("sweep.rho", *rho);
            }
            c.positive("sweep.budget", s.budget);
            c.positive("sweep.buckets", s.buckets);
            for (name, v) in [("sweep.start", &s.start), ("sweep.lower", &s.lower), ("sweep.upper", &s.upper)] {
                if v.len() != STRATEGY_DIM {
                    c.push(name, format!("needs {STRATEGY_DIM} entries, got {}", v.len()));
                }
            }
            if s.lower.len() == STRATEGY_DIM && s.upper.len() == STRATEGY_DIM && s.lower.iter().zip(&s.upper).any(|(l, u)| l > u) {
                c.push("sweep.lower", "lower bound exceeds upper bound");
            }
            if !(s.train_margin >= 0.0) {
                c.push("sweep.train_margin", "must be non-negative");
            }
            if !(s.tolerance > 0.0) {
                c.push("sweep.tolerance", "must be positive");
            }
        }
        ExperimentKind::Degenerate => {
            let d = &cfg.degenerate;
            index_list(&mut c, "degenerate.ns", &d.ns);
            if !(d.alpha > 0.0) {
                c.push("degenerate.alpha", "must be positive");
            }
            c.positive("degenerate.budget", d.budget);
            c.positive("degenerate.buckets", d.buckets);
            if d.weight_range[0] > d.weight_range[1] {
                c.push("degenerate.weight_range", "lower end exceeds upper end");
            }
        }
        ExperimentKind::Kw => {
            index_list(&mut c, "kw.ns", &cfg.kw.ns);
            if !(cfg.kw.scale > 0.0) {
                c.push("kw.scale", "must be positive");
            }
        }
        ExperimentKind::Subreplication => {
            let s = &cfg.subreplication;
            if !(s.gap > 0.0 && s.gap < m.horizon) {
                c.push("subreplication.gap", "must lie strictly inside (0, horizon)");
            } else if cfg.steps > 0 {
                let k = (m.horizon - s.gap) / m.horizon * cfg.steps as f64;
                if (k - k.round()).abs() > 1e-9 {
                    c.push("subreplication.gap", "horizon - gap must be a grid node");
                }
            }
            if m.rho == 0.0 {
                c.push("market.rho", "subreplication needs rho != 0");
            }
            c.positive("subreplication.shift_count", s.shift_count);
            c.positive("subreplication.quadrature_order", s.quadrature_order);
            if s.shift_min > s.shift_max {
                c.push("subreplication.shift_min", "exceeds shift_max");
            }
        }
        ExperimentKind::OracleCheck => {
            if cfg.oracle.a.is_empty() || cfg.oracle.b.is_empty() {
                c.push("oracle", "query grid must not be empty");
            }
            if !(cfg.oracle.rtol > 0.0) {
                c.push("oracle.rtol", "must be positive");
            }
        }
    }
    c.0
}

fn index_list(c: &mut Collector, field: &str, ns: &[IndexEntry]) {
    if ns.is_empty() {
        c.push(field, "must not be empty");
    }
    for n in ns {
        if n.index().is_none() {
            c.push(field, format!("entries must be positive integers or \"inf\", got {n:?}"));
        }
    }
}
