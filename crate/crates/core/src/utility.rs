//! Utility functions, their Fenchel conjugates, and bounded claims.
//!
//! Utilities are evaluated on the extended reals: outside the domain of a
//! positive-halfline utility the value is `-inf`, and Monte Carlo averages
//! propagate it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    PositiveHalfline,
    WholeLine,
}

/// Tabulated utility given by knots of its marginal.
///
/// `U'` is linear between knots and decays (grows) exponentially beyond the
/// last (first) knot with a rate matching the adjacent segment, so `U` is
/// C¹, strictly increasing and strictly concave everywhere on its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedUtility {
    knots: Vec<f64>,
    marginals: Vec<f64>,
    /// `U` at each knot.
    levels: Vec<f64>,
    left_scale: f64,
    right_scale: f64,
}

impl TabulatedUtility {
    fn new(knots: Vec<f64>, marginals: Vec<f64>, base: f64) -> Result<Self> {
        if knots.len() < 2 || knots.len() != marginals.len() {
            return Err(invalid("tabulated", "need at least two (knot, marginal) pairs"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated", "knots must be strictly increasing"));
        }
        if marginals.windows(2).any(|w| w[1] >= w[0]) || marginals.iter().any(|m| *m <= 0.0) {
            return Err(invalid(
                "tabulated",
                "marginals must be positive and strictly decreasing",
            ));
        }
        let mut levels = vec![base];
        for i in 0..knots.len() - 1 {
            let h = knots[i + 1] - knots[i];
            levels.push(levels[i] + 0.5 * h * (marginals[i] + marginals[i + 1]));
        }
        let n = knots.len() - 1;
        let slope_first = (marginals[0] - marginals[1]) / (knots[1] - knots[0]);
        let slope_last = (marginals[n - 1] - marginals[n]) / (knots[n] - knots[n - 1]);
        Ok(Self {
            left_scale: marginals[0] / slope_first,
            right_scale: marginals[n] / slope_last,
            knots,
            marginals,
            levels,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let i = self.knots.partition_point(|k| *k <= x);
        i.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len() - 1;
        if x < self.knots[0] {
            let s = self.left_scale;
            return self.levels[0] - self.marginals[0] * s * (((self.knots[0] - x) / s).exp() - 1.0);
        }
        if x > self.knots[n] {
            let s = self.right_scale;
            return self.levels[n] + self.marginals[n] * s * (1.0 - (-(x - self.knots[n]) / s).exp());
        }
        let i = self.segment(x);
        let h = self.knots[i + 1] - self.knots[i];
        let k = (self.marginals[i + 1] - self.marginals[i]) / h;
        let d = x - self.knots[i];
        self.levels[i] + self.marginals[i] * d + 0.5 * k * d * d
    }

    fn marginal(&self, x: f64) -> f64 {
        let n = self.knots.len() - 1;
        if x < self.knots[0] {
            return self.marginals[0] * ((self.knots[0] - x) / self.left_scale).exp();
        }
        if x > self.knots[n] {
            return self.marginals[n] * (-(x - self.knots[n]) / self.right_scale).exp();
        }
        let i = self.segment(x);
        let t = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.marginals[i] + t * (self.marginals[i + 1] - self.marginals[i])
    }

    /// Unconstrained inverse of the marginal (whole-line extension).
    fn inverse_marginal(&self, y: f64) -> f64 {
        let n = self.knots.len() - 1;
        if y > self.marginals[0] {
            return self.knots[0] - self.left_scale * (y / self.marginals[0]).ln();
        }
        if y < self.marginals[n] {
            return self.knots[n] + self.right_scale * (self.marginals[n] / y).ln();
        }
        // marginals are decreasing: find i with m[i] >= y >= m[i+1]
        let i = self
            .marginals
            .partition_point(|m| *m >= y)
            .saturating_sub(1)
            .min(n - 1);
        let (m0, m1) = (self.marginals[i], self.marginals[i + 1]);
        self.knots[i] + (m0 - y) / (m0 - m1) * (self.knots[i + 1] - self.knots[i])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityKind {
    /// `x^p / p`, with `p = 0` meaning `log x`.
    Power { p: f64 },
    /// `-exp(-alpha x)`.
    Exponential { alpha: f64 },
    Tabulated(TabulatedUtility),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    kind: UtilityKind,
    domain: Domain,
}

impl UtilitySpec {
    pub fn power(p: f64) -> Result<Self> {
        if !(p < 1.0) || !p.is_finite() {
            return Err(invalid("p", format!("power utility needs p < 1, got {p}")));
        }
        Ok(Self {
            kind: UtilityKind::Power { p },
            domain: Domain::PositiveHalfline,
        })
    }

    pub fn log() -> Self {
        Self {
            kind: UtilityKind::Power { p: 0.0 },
            domain: Domain::PositiveHalfline,
        }
    }

    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self {
            kind: UtilityKind::Exponential { alpha },
            domain: Domain::WholeLine,
        })
    }

    /// Tabulated utility from marginal knots; `base` is `U(knots[0])`.
    /// A positive-halfline table must start at 0.
    pub fn tabulated(knots: Vec<f64>, marginals: Vec<f64>, base: f64, domain: Domain) -> Result<Self> {
        if domain == Domain::PositiveHalfline && knots.first() != Some(&0.0) {
            return Err(invalid("tabulated", "positive-halfline table must start at 0"));
        }
        Ok(Self {
            kind: UtilityKind::Tabulated(TabulatedUtility::new(knots, marginals, base)?),
            domain,
        })
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    fn lower_edge(&self) -> f64 {
        match self.domain {
            Domain::PositiveHalfline => 0.0,
            Domain::WholeLine => f64::NEG_INFINITY,
        }
    }

    /// `U(x)`, `-inf` outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lower_edge() || x.is_nan() {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            UtilityKind::Power { p } if *p == 0.0 => x.ln(),
            UtilityKind::Power { p } => x.powf(*p) / p,
            UtilityKind::Exponential { alpha } => -(-alpha * x).exp(),
            UtilityKind::Tabulated(t) => t.eval(x),
        }
    }

    /// `U'(x)`; `+inf` at the left edge of a power utility.
    pub fn marginal(&self, x: f64) -> f64 {
        match &self.kind {
            UtilityKind::Power { p } => x.powf(p - 1.0),
            UtilityKind::Exponential { alpha } => alpha * (-alpha * x).exp(),
            UtilityKind::Tabulated(t) => t.marginal(x),
        }
    }

    /// `I(y) = (U')^{-1}(y)`, clamped to the domain edge when `y` exceeds the
    /// marginal at the edge.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        match &self.kind {
            UtilityKind::Power { p } => y.powf(1.0 / (p - 1.0)),
            UtilityKind::Exponential { alpha } => -(y / alpha).ln() / alpha,
            UtilityKind::Tabulated(t) => t.inverse_marginal(y).max(self.lower_edge()),
        }
    }
}

/// A utility together with its Fenchel conjugate `V(y) = sup_x {U(x) - xy}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePair {
    utility: UtilitySpec,
}

impl ConjugatePair {
    pub fn new(utility: UtilitySpec) -> Self {
        Self { utility }
    }

    pub fn utility(&self) -> &UtilitySpec {
        &self.utility
    }

    /// `V(y)`. Closed forms for power, log and exponential; golden-section
    /// maximization for tabulated utilities.
    pub fn conjugate(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NonPositive(y));
        }
        Ok(self.conjugate_unchecked(y))
    }

    pub(crate) fn conjugate_unchecked(&self, y: f64) -> f64 {
        match &self.utility.kind {
            UtilityKind::Power { p } if *p == 0.0 => -y.ln() - 1.0,
            UtilityKind::Power { p } => (1.0 - p) / p * y.powf(p / (p - 1.0)),
            UtilityKind::Exponential { alpha } => y / alpha * ((y / alpha).ln() - 1.0),
            UtilityKind::Tabulated(t) => {
                let u = &self.utility;
                let g = |x: f64| u.eval(x) - x * y;
                let (_, v) = match u.domain {
                    Domain::PositiveHalfline => numerics::maximize_concave_right_open(g, 0.0, 1e-8),
                    Domain::WholeLine => numerics::maximize_concave_line(g, t.knots[0], 1e-8),
                };
                v
            }
        }
    }

    /// `V'(y) = -I(y)`.
    pub fn conjugate_derivative(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NonPositive(y));
        }
        Ok(match &self.utility.kind {
            UtilityKind::Power { p } if *p == 0.0 => -1.0 / y,
            UtilityKind::Exponential { alpha } => (y / alpha).ln() / alpha,
            _ => -self.utility.inverse_marginal(y),
        })
    }

    /// `V_c(y, z) = sup_{x > -phi_min} {U(x + z) - xy}` in closed form:
    /// the unconstrained maximizer when it is feasible, the boundary
    /// `x = -phi_min` otherwise.
    pub fn constrained_conjugate(&self, y: f64, z: f64, phi_min: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::NonPositive(y));
        }
        if z < phi_min {
            return Err(Error::BelowPhiMin { z, phi_min });
        }
        Ok(self.constrained_conjugate_unchecked(y, z, phi_min))
    }

    pub(crate) fn constrained_conjugate_unchecked(&self, y: f64, z: f64, phi_min: f64) -> f64 {
        let u = &self.utility;
        if y < u.marginal(z - phi_min) {
            self.conjugate_unchecked(y) + y * z
        } else {
            u.eval(z - phi_min) + y * phi_min
        }
    }
}

/// Empirical asymptotic elasticities over the outermost probe decade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticElasticity {
    /// `limsup_{x→∞} x U'(x) / U(x)`, must be `< 1`.
    pub ae_plus: f64,
    /// `liminf_{x→-∞} x U'(x) / U(x)`, must be `> 1`; whole-line only.
    pub ae_minus: Option<f64>,
    pub plus_ok: bool,
    pub minus_ok: Option<bool>,
}

const AE_REACH: f64 = 1e6;

/// `x U'(x) / U(x)`. Whole-line utilities are shifted so that `U(0) = 1`,
/// the normalization under which the conditions are stated.
fn elasticity_ratio(spec: &UtilitySpec, x: f64) -> f64 {
    match (&spec.kind, spec.domain) {
        (UtilityKind::Exponential { alpha }, _) => {
            // shifted U = 2 - e^{-ax}; ratio = a x / (2 e^{ax} - 1), stable both ways
            alpha * x / (2.0 * (alpha * x).exp() - 1.0)
        }
        (_, Domain::WholeLine) => {
            let shift = 1.0 - spec.eval(0.0);
            x * spec.marginal(x) / (spec.eval(x) + shift)
        }
        (_, Domain::PositiveHalfline) => x * spec.marginal(x) / spec.eval(x),
    }
}

/// Probes `x U'(x)/U(x)` on the outermost decade of a positive geometric
/// grid (mirrored for the left tail of whole-line utilities).
pub fn asymptotic_elasticity(spec: &UtilitySpec, probe: &[f64]) -> Result<AsymptoticElasticity> {
    let reach = probe.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if reach < AE_REACH {
        return Err(Error::ProbeTooShort {
            reached: reach,
            required: AE_REACH,
        });
    }
    let tail: Vec<f64> = probe
        .iter()
        .map(|x| x.abs())
        .filter(|x| *x >= reach / 10.0)
        .collect();
    let ae_plus = tail
        .iter()
        .map(|x| elasticity_ratio(spec, *x))
        .fold(f64::NEG_INFINITY, f64::max);
    let ae_minus = (spec.domain == Domain::WholeLine).then(|| {
        tail.iter()
            .map(|x| elasticity_ratio(spec, -x))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(AsymptoticElasticity {
        ae_plus,
        ae_minus,
        plus_ok: ae_plus < 1.0,
        minus_ok: ae_minus.map(|m| m > 1.0),
    })
}

/// Geometric probe grid `10^0 .. 10^decades` with `per_decade` points.
pub fn geometric_probe(decades: u32, per_decade: u32) -> Vec<f64> {
    (0..=decades * per_decade)
        .map(|i| 10f64.powf(i as f64 / per_decade as f64))
        .collect()
}

/// Residuals of the two exponential-utility identities
/// `V'(cy) = V'(y) + log(c)/alpha` and
/// `V(y) + yc = y (V'(y e^{alpha c}) - 1/alpha)`.
///
/// The first identity needs `c > 0`; its residual is NaN otherwise.
pub fn exp_identity_check(alpha: f64, y: f64, c: f64) -> (f64, f64) {
    let v = |y: f64| y / alpha * ((y / alpha).ln() - 1.0);
    let dv = |y: f64| (y / alpha).ln() / alpha;
    let r1 = if c > 0.0 {
        dv(c * y) - dv(y) - c.ln() / alpha
    } else {
        f64::NAN
    };
    let r2 = v(y) + y * c - y * (dv(y * (alpha * c).exp()) - 1.0 / alpha);
    (r1, r2)
}

/// Which Brownian driver a claim is written on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Driver {
    #[default]
    B,
    W,
}

/// A bounded claim `f = phi(X_T)` with `phi` tabulated: linear between
/// knots, constant outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSpec {
    knots: Vec<f64>,
    values: Vec<f64>,
    phi_min: f64,
    phi_max: f64,
    driver: Driver,
}

impl ClaimSpec {
    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(invalid("claim", "need matching non-empty knots and values"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("claim", "knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("claim", "knots and values must be finite"));
        }
        let phi_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let phi_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            knots,
            values,
            phi_min,
            phi_max,
            driver: Driver::B,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::tabulated(vec![0.0], vec![c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0).expect("zero claim")
    }

    /// `1 / (1 + exp(-slope z))` sampled on `[-40/|slope|, 40/|slope|]`.
    /// A negative slope gives a claim paying off for low `z`.
    pub fn logistic(slope: f64, knots: usize) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() || knots < 2 {
            return Err(invalid("claim", "logistic needs a finite nonzero slope and >= 2 knots"));
        }
        let half = 40.0 / slope.abs();
        Self::from_fn(|z| 1.0 / (1.0 + (-slope * z).exp()), -half, half, knots)
    }

    /// Indicator of `z >= threshold`, as a ramp of width `1e-12`.
    pub fn digital(threshold: f64) -> Result<Self> {
        let eps = 1e-12 * threshold.abs().max(1.0);
        Self::tabulated(vec![threshold - eps, threshold], vec![0.0, 1.0])
    }

    pub fn from_fn(phi: impl Fn(f64) -> f64, lo: f64, hi: f64, knots: usize) -> Result<Self> {
        let h = (hi - lo) / (knots - 1) as f64;
        let xs: Vec<f64> = (0..knots).map(|i| lo + i as f64 * h).collect();
        let ys = xs.iter().map(|x| phi(*x)).collect();
        Self::tabulated(xs, ys)
    }

    /// Two-column `knot value` text; `#` starts a comment, commas or
    /// whitespace separate columns.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let bad = |reason: String| Error::Parse {
                what: "claim table".into(),
                reason: format!("line {}: {reason}", lineno + 1),
            };
            if cols.len() != 2 {
                return Err(bad(format!("expected 2 columns, found {}", cols.len())));
            }
            let k: f64 = cols[0].parse().map_err(|e| bad(format!("{e}")))?;
            let v: f64 = cols[1].parse().map_err(|e| bad(format!("{e}")))?;
            knots.push(k);
            values.push(v);
        }
        Self::tabulated(knots, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }

    pub fn on_driver(mut self, driver: Driver) -> Self {
        self.driver = driver;
        self
    }

    pub fn driver(&self) -> Driver {
        self.driver
    }

    pub fn phi_min(&self) -> f64 {
        self.phi_min
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    pub fn is_constant(&self) -> bool {
        self.phi_min == self.phi_max
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, z: f64) -> f64 {
        let n = self.knots.len();
        if z <= self.knots[0] {
            return self.values[0];
        }
        if z >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.knots.partition_point(|k| *k <= z) - 1;
        let t = (z - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}
