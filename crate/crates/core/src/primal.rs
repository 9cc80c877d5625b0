//! Monte Carlo lower bounds on primal value functions.
//!
//! Strategies are finite-dimensional. Holdings at node `k` are
//!
//! ```text
//! H_k = a h_k + pi (x + X_k - a P_k) + c0 + cV V_k + cB B_k
//! ```
//!
//! where `h` is a fitted hedge of the claim, `P = x_hat + (h . S)` its
//! replicating portfolio and `X` the strategy's own gains. With `a = -1`
//! the claim is sold forward and `pi` invests the resulting total wealth.
//! Holdings are clipped to `[-bound, bound]`, and wealth is stopped at a
//! barrier: at the first crossing it is set to the barrier and frozen, the
//! discrete counterpart of stopping a continuous path at its hitting time.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::{MarketView, PathArray, PathBundle};
use crate::optim::{nelder_mead, CoefficientBox};
use crate::stats::Estimate;
use crate::utility::{ClaimSpec, ConjugatePair, Domain};

/// Number of free strategy coefficients `[a, pi, c0, cV, cB]`.
pub const STRATEGY_DIM: usize = 5;

const Z_CLIP: f64 = 4.0;
const CHUNK: usize = 1024;

/// Regression features of the hedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeFeatures {
    /// Monomials `B^i V^j`.
    #[default]
    Polynomial,
    /// `z^i V^j / sqrt(T - t)` with `z = B / sqrt(T - t)` clipped to
    /// `[-4, 4]`; suited to claims with kinks or jumps in `B_T`.
    ScaledPolynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HedgeBasis {
    pub degree_b: usize,
    pub degree_v: usize,
    pub buckets: usize,
    #[serde(default)]
    pub features: HedgeFeatures,
}

impl Default for HedgeBasis {
    fn default() -> Self {
        Self {
            degree_b: 2,
            degree_v: 2,
            buckets: 8,
            features: HedgeFeatures::Polynomial,
        }
    }
}

impl HedgeBasis {
    fn per_bucket(&self, has_v: bool) -> usize {
        (self.degree_b + 1) * if has_v { self.degree_v + 1 } else { 1 }
    }
}

/// A fitted hedge: per-bucket coefficients on the basis features.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeRule {
    pub basis: HedgeBasis,
    pub horizon: f64,
    pub has_v: bool,
    /// Regression-implied price `x_hat`.
    pub price: f64,
    /// `buckets x features`, bucket-major.
    pub coeffs: Vec<f64>,
}

fn features(basis: &HedgeBasis, has_v: bool, t: f64, horizon: f64, b: f64, v: f64, out: &mut Vec<f64>) {
    out.clear();
    let (x, scale) = match basis.features {
        HedgeFeatures::Polynomial => (b, 1.0),
        HedgeFeatures::ScaledPolynomial => {
            let tau = (horizon - t).max(f64::MIN_POSITIVE).sqrt();
            ((b / tau).clamp(-Z_CLIP, Z_CLIP), 1.0 / tau)
        }
    };
    let dv = if has_v { basis.degree_v } else { 0 };
    let mut xi = scale;
    for _ in 0..=basis.degree_b {
        let mut term = xi;
        for _ in 0..=dv {
            out.push(term);
            term *= v;
        }
        xi *= x;
    }
}

impl HedgeRule {
    pub fn zero(basis: HedgeBasis, horizon: f64, has_v: bool, price: f64) -> Self {
        Self {
            basis,
            horizon,
            has_v,
            price,
            coeffs: vec![0.0; basis.buckets * basis.per_bucket(has_v)],
        }
    }

    fn bucket(&self, k: usize, steps: usize) -> usize {
        (k * self.basis.buckets) / steps
    }

    /// Holding at node `k` of a grid with `steps` steps.
    pub fn holding(&self, k: usize, steps: usize, b: f64, v: f64, scratch: &mut Vec<f64>) -> f64 {
        let t = self.horizon * k as f64 / steps as f64;
        features(&self.basis, self.has_v, t, self.horizon, b, v, scratch);
        let m = scratch.len();
        let j = self.bucket(k, steps);
        scratch.iter().zip(&self.coeffs[j * m..(j + 1) * m]).map(|(f, c)| f * c).sum()
    }
}

/// Replication quality of a hedge on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub price: f64,
    /// Sample mean and standard error of `x_hat + (h . S)_T - f`.
    pub residual: Estimate,
    pub residual_sd: f64,
    pub rank: usize,
    pub columns: usize,
}

fn state_v(view: &MarketView<'_>, i: usize, k: usize) -> f64 {
    view.v.map_or(0.0, |v| v.row(i)[k])
}

fn claim_values(claim: &ClaimSpec, view: &MarketView<'_>) -> Vec<f64> {
    (0..view.paths()).map(|i| claim.eval(view.driver_terminal(claim.driver(), i))).collect()
}

/// Least-squares hedge on any market view: fits
/// `f ~ x_hat + sum_j sum_m beta_jm sum_{k in bucket j} phi_m(t_k, state_k) dS_k`
/// jointly over all buckets. A rank-deficient design is solved on its
/// numerical column space, which drops the redundant directions, and a
/// warning is logged.
pub fn lsmc_hedge_view(claim: &ClaimSpec, view: &MarketView<'_>, basis: HedgeBasis) -> Result<(HedgeRule, ResidualReport)> {
    if basis.buckets == 0 {
        return Err(invalid("buckets", "need at least one bucket"));
    }
    let grid = view.grid;
    let steps = grid.steps();
    let horizon = grid.horizon();
    let has_v = view.v.is_some();
    let per = basis.per_bucket(has_v);
    let cols = 1 + basis.buckets * per;
    let f = claim_values(claim, view);
    let paths = view.paths();

    if claim.is_constant() {
        let rule = HedgeRule::zero(basis, horizon, has_v, claim.phi_min());
        let report = residual_report(&rule, claim, view, 1, cols);
        return Ok((rule, report));
    }

    let template = HedgeRule::zero(basis, horizon, has_v, 0.0);
    let row = |i: usize, out: &mut Vec<f64>, scratch: &mut Vec<f64>| {
        out.clear();
        out.resize(cols, 0.0);
        out[0] = 1.0;
        let (b, s) = (view.b.row(i), view.s.row(i));
        for k in 0..steps {
            features(&basis, has_v, grid.time(k), horizon, b[k], state_v(view, i, k), scratch);
            let j = template.bucket(k, steps);
            let ds = s[k + 1] - s[k];
            for (m, phi) in scratch.iter().enumerate() {
                out[1 + j * per + m] += phi * ds;
            }
        }
    };

    // normal equations, merged chunk by chunk in index order
    let partials: Vec<(DMatrix<f64>, DVector<f64>)> = (0..paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut xtx = DMatrix::<f64>::zeros(cols, cols);
            let mut xty = DVector::<f64>::zeros(cols);
            let (mut r, mut scratch) = (Vec::new(), Vec::new());
            for i in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                row(i, &mut r, &mut scratch);
                let rv = DVector::from_column_slice(&r);
                xtx.ger(1.0, &rv, &rv, 1.0);
                xty.axpy(f[i], &rv, 1.0);
            }
            (xtx, xty)
        })
        .collect();
    let mut xtx = DMatrix::<f64>::zeros(cols, cols);
    let mut xty = DVector::<f64>::zeros(cols);
    for (a, b) in partials {
        xtx += a;
        xty += b;
    }

    // column scaling, then an eigen pseudo-inverse
    let scale: Vec<f64> = (0..cols)
        .map(|j| {
            let d = xtx[(j, j)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut a = xtx.clone();
    for i in 0..cols {
        for j in 0..cols {
            a[(i, j)] *= scale[i] * scale[j];
        }
    }
    let rhs = DVector::from_iterator(cols, (0..cols).map(|i| xty[i] * scale[i]));
    let eig = a.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = top * 1e-11;
    let mut sol = DVector::<f64>::zeros(cols);
    let mut rank = 0;
    for (idx, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > tol {
            rank += 1;
            let u = eig.eigenvectors.column(idx);
            sol.axpy(u.dot(&rhs) / lambda, &u, 1.0);
        }
    }
    if rank < cols {
        log::warn!("hedge regression has rank {rank} of {cols}; redundant basis directions dropped");
    }
    let beta: Vec<f64> = (0..cols).map(|j| sol[j] * scale[j]).collect();
    let rule = HedgeRule {
        basis,
        horizon,
        has_v,
        price: beta[0],
        coeffs: beta[1..].to_vec(),
    };
    let report = residual_report(&rule, claim, view, rank, cols);
    Ok((rule, report))
}

/// Hedge fitted on a `rho = 0` bundle, where claims on `B` are replicable.
pub fn lsmc_hedge(claim: &ClaimSpec, bundle: &PathBundle, basis: HedgeBasis) -> Result<(HedgeRule, ResidualReport)> {
    if bundle.params.rho != 0.0 {
        return Err(Error::RequiresZeroRho(bundle.params.rho));
    }
    lsmc_hedge_view(claim, &bundle.view(), basis)
}

/// Per-path `x_hat + (h . S)_T - f`.
pub fn hedge_residuals(rule: &HedgeRule, claim: &ClaimSpec, view: &MarketView<'_>) -> Vec<f64> {
    let steps = view.grid.steps();
    (0..view.paths())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let (b, s) = (view.b.row(i), view.s.row(i));
            let mut p = rule.price;
            for k in 0..steps {
                p += rule.holding(k, steps, b[k], state_v(view, i, k), scratch) * (s[k + 1] - s[k]);
            }
            p - claim.eval(view.driver_terminal(claim.driver(), i))
        })
        .collect()
}

fn residual_report(rule: &HedgeRule, claim: &ClaimSpec, view: &MarketView<'_>, rank: usize, columns: usize) -> ResidualReport {
    let r = hedge_residuals(rule, claim, view);
    let residual = if r.iter().all(|v| *v == 0.0) {
        Estimate::exact(0.0, r.len())
    } else {
        Estimate::from_samples(&r)
    };
    ResidualReport {
        price: rule.price,
        residual,
        residual_sd: residual.stderr * (r.len() as f64).sqrt(),
        rank,
        columns,
    }
}

/// A strategy in the parametrized family, with its admissibility data.
#[derive(Debug, Clone, Serialize)]
pub struct StrategySpec {
    #[serde(skip)]
    pub hedge: Option<Arc<HedgeRule>>,
    /// `[a, pi, c0, cV, cB]`.
    pub params: [f64; STRATEGY_DIM],
    /// Admissibility constant `K`.
    pub floor: f64,
    /// Slack `delta` below `-K`.
    pub slack: f64,
    /// Magnitude bound on holdings.
    pub bound: f64,
    /// Amount subtracted from terminal wealth before `U` is applied. A
    /// training device that keeps fitted strategies away from the edge of
    /// the domain; reported bounds use zero.
    pub margin: f64,
}

impl PartialEq for StrategySpec {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.floor == other.floor
            && self.slack == other.slack
            && self.bound == other.bound
            && self.margin == other.margin
            && self.hedge.as_deref() == other.hedge.as_deref()
    }
}

impl Default for StrategySpec {
    fn default() -> Self {
        Self {
            hedge: None,
            params: [0.0; STRATEGY_DIM],
            floor: 1e3,
            slack: 1e-3,
            bound: 1e3,
            margin: 0.0,
        }
    }
}

impl StrategySpec {
    pub fn constant(c: f64) -> Self {
        Self {
            params: [0.0, 0.0, c, 0.0, 0.0],
            ..Self::default()
        }
    }

    pub fn with_params(&self, params: [f64; STRATEGY_DIM]) -> Self {
        Self { params, ..self.clone() }
    }

    pub fn with_margin(&self, margin: f64) -> Self {
        Self { margin, ..self.clone() }
    }

    pub fn with_hedge(mut self, hedge: HedgeRule) -> Self {
        self.hedge = Some(Arc::new(hedge));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0) || !(self.slack > 0.0) || !(self.bound > 0.0) {
            return Err(invalid("strategy", "floor, slack and bound must be positive"));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(invalid("margin", "must be finite and non-negative"));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("strategy coefficients".into()));
        }
        Ok(())
    }

    /// `-K - delta`.
    pub fn floor_level(&self) -> f64 {
        -self.floor - self.slack
    }
}

struct PathRun {
    terminal: f64,
    stopped: bool,
}

/// Runs one path. `barrier = None` disables stopping. When `out` is given
/// the full wealth path is written to it.
fn run_path(
    spec: &StrategySpec,
    view: &MarketView<'_>,
    i: usize,
    x: f64,
    barrier: Option<f64>,
    mut out: Option<&mut [f64]>,
    scratch: &mut Vec<f64>,
) -> PathRun {
    let steps = view.grid.steps();
    let [a, pi, c0, cv, cb] = spec.params;
    let (b, s) = (view.b.row(i), view.s.row(i));
    let mut wealth = 0.0;
    let mut port = spec.hedge.as_ref().map_or(0.0, |h| h.price);
    let mut stopped = false;
    if let Some(o) = out.as_deref_mut() {
        o[0] = 0.0;
    }
    for k in 0..steps {
        if stopped {
            if let Some(o) = out.as_deref_mut() {
                o[k + 1] = wealth;
            }
            continue;
        }
        let v = state_v(view, i, k);
        let h = spec.hedge.as_ref().map_or(0.0, |r| r.holding(k, steps, b[k], v, scratch));
        let mut hold = c0 + cv * v + cb * b[k];
        if a != 0.0 {
            hold += a * h;
        }
        if pi != 0.0 {
            hold += pi * (x + wealth - a * port);
        }
        let hold = hold.clamp(-spec.bound, spec.bound);
        let ds = s[k + 1] - s[k];
        let next = wealth + hold * ds;
        port += h * ds;
        match barrier {
            Some(level) if next < level => {
                wealth = level;
                stopped = true;
            }
            _ => wealth = next,
        }
        if let Some(o) = out.as_deref_mut() {
            o[k + 1] = wealth;
        }
    }
    PathRun {
        terminal: wealth,
        stopped,
    }
}

/// Left-endpoint gains `sum H_k dS_k` for given holdings.
pub fn wealth_process(holdings: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    if s.len() != holdings.len() + 1 {
        return Err(Error::LengthMismatch {
            expected: holdings.len() + 1,
            found: s.len(),
        });
    }
    let mut out = Vec::with_capacity(s.len());
    let mut x = 0.0;
    out.push(x);
    for (k, h) in holdings.iter().enumerate() {
        x += h * (s[k + 1] - s[k]);
        out.push(x);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnforcedWealth {
    pub wealth: PathArray,
    pub stopped: Vec<bool>,
    pub stopped_fraction: f64,
}

/// Wealth paths of `spec` after holdings truncation and stopping at
/// `-K - delta`.
pub fn enforce_admissibility(spec: &StrategySpec, view: &MarketView<'_>, x: f64) -> Result<EnforcedWealth> {
    spec.validate()?;
    let nodes = view.grid.nodes();
    let mut wealth = PathArray::zeros(view.paths(), nodes);
    let level = spec.floor_level();
    let stopped: Vec<bool> = wealth
        .as_mut_slice()
        .par_chunks_mut(nodes)
        .enumerate()
        .map_init(Vec::new, |scratch, (i, row)| run_path(spec, view, i, x, Some(level), Some(row), scratch).stopped)
        .collect();
    let n = stopped.iter().filter(|s| **s).count();
    Ok(EnforcedWealth {
        wealth,
        stopped_fraction: n as f64 / stopped.len() as f64,
        stopped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalResult {
    pub estimate: Estimate,
    /// Paths with a `-inf` utility after enforcement.
    pub violations: usize,
    /// Halfline utilities: paths where `x + X_T + f < 0` without stopping.
    pub raw_violations: usize,
    pub stopped_fraction: f64,
    pub strategy: StrategySpec,
}

/// Wealth barrier for `X`:
/// halfline constrained `-x - phi_min`;
/// halfline unconstrained `max(-K - delta, -x - phi_max)`;
/// whole line `-K - delta`, raised to `-x - phi_min` when constrained.
pub fn wealth_barrier(x: f64, spec: &StrategySpec, pair: &ConjugatePair, claim: Option<&ClaimSpec>, constrained: bool) -> f64 {
    let (lo, hi) = claim.map_or((0.0, 0.0), |c| (c.phi_min(), c.phi_max()));
    let base = spec.floor_level();
    match (pair.utility().domain(), constrained) {
        (Domain::PositiveHalfline, true) => -x - lo,
        (Domain::PositiveHalfline, false) => base.max(-x - hi),
        (Domain::WholeLine, true) => base.max(-x - lo),
        (Domain::WholeLine, false) => base,
    }
}

struct Evaluated {
    samples: Vec<f64>,
    stopped: usize,
}

fn evaluate(
    x: f64,
    spec: &StrategySpec,
    pair: &ConjugatePair,
    claim_vals: Option<&[f64]>,
    view: &MarketView<'_>,
    barrier: Option<f64>,
) -> Evaluated {
    let u = pair.utility();
    let runs: Vec<(f64, bool)> = (0..view.paths())
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let r = run_path(spec, view, i, x, barrier, None, scratch);
            let endowment = match claim_vals {
                Some(f) => x + f[i],
                None => x,
            };
            (u.eval(endowment + r.terminal - spec.margin), r.stopped)
        })
        .collect();
    let stopped = runs.iter().filter(|r| r.1).count();
    Evaluated {
        samples: runs.into_iter().map(|r| r.0).collect(),
        stopped,
    }
}

fn estimate(samples: &[f64]) -> Estimate {
    if samples.iter().all(|v| *v == samples[0]) {
        Estimate::exact(samples[0], samples.len())
    } else {
        Estimate::from_samples(samples)
    }
}

/// Lower bound on `u(x)` (or `u_c(x)` when `constrained`) from one strategy.
pub fn primal_bound(
    x: f64,
    spec: &StrategySpec,
    pair: &ConjugatePair,
    claim: Option<&ClaimSpec>,
    view: &MarketView<'_>,
    constrained: bool,
) -> Result<PrimalResult> {
    spec.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("initial capital".into()));
    }
    let halfline = pair.utility().domain() == Domain::PositiveHalfline;
    let phi_min = claim.map_or(0.0, |c| c.phi_min());
    if halfline && constrained && x + phi_min < 0.0 {
        return Err(invalid("x", format!("x + phi_min = {} is negative; constrained set is empty", x + phi_min)));
    }
    let vals = claim.map(|c| claim_values(c, view));
    let barrier = wealth_barrier(x, spec, pair, claim, constrained);
    let ev = evaluate(x, spec, pair, vals.as_deref(), view, Some(barrier));
    let violations = ev.samples.iter().filter(|s| **s == f64::NEG_INFINITY).count();
    let raw_violations = if halfline {
        let raw = evaluate(x, spec, pair, vals.as_deref(), view, None);
        raw.samples.iter().filter(|s| **s == f64::NEG_INFINITY).count()
    } else {
        0
    };
    Ok(PrimalResult {
        estimate: estimate(&ev.samples),
        violations,
        raw_violations,
        stopped_fraction: ev.stopped as f64 / view.paths() as f64,
        strategy: spec.clone(),
    })
}

/// Nelder–Mead over `[a, pi, c0, cV, cB]` inside `family`, all evaluations
/// on the same paths. `template` supplies the hedge, the admissibility data
/// and the starting point, which is clamped into the box.
#[allow(clippy::too_many_arguments)]
pub fn optimize_primal(
    x: f64,
    pair: &ConjugatePair,
    claim: Option<&ClaimSpec>,
    view: &MarketView<'_>,
    template: &StrategySpec,
    family: &CoefficientBox,
    budget: usize,
    constrained: bool,
) -> Result<PrimalResult> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if family.dim() != STRATEGY_DIM {
        return Err(Error::LengthMismatch {
            expected: STRATEGY_DIM,
            found: family.dim(),
        });
    }
    template.validate()?;
    let vals = claim.map(|c| claim_values(c, view));
    let barrier = wealth_barrier(x, template, pair, claim, constrained);
    let objective = |p: &[f64]| {
        let mut params = [0.0; STRATEGY_DIM];
        params.copy_from_slice(p);
        let spec = template.with_params(params);
        let ev = evaluate(x, &spec, pair, vals.as_deref(), view, Some(barrier));
        -estimate(&ev.samples).mean
    };
    let report = nelder_mead(objective, &template.params, family, budget)?;
    let mut params = [0.0; STRATEGY_DIM];
    params.copy_from_slice(&report.point);
    primal_bound(x, &template.with_params(params), pair, claim, view, constrained)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate_general_market, simulate_heston_market, DegenerateFamily, HestonParams, MarketIndex, TimeGrid};
    use crate::rng::RandomStream;
    use crate::utility::UtilitySpec;

    fn bundle(rho: f64, paths: usize) -> PathBundle {
        let p = HestonParams::new(0.5, 2.0, 1.0, 1.0, 1.0, rho, 1.0).unwrap();
        simulate_heston_market(&p, &TimeGrid::new(1.0, 32).unwrap(), &RandomStream::new(8), paths).unwrap()
    }

    #[test]
    fn wealth_process_basics() {
        let s = [0.0, 0.5, 0.2, 1.1];
        assert_eq!(wealth_process(&[0.0; 3], &s).unwrap(), vec![0.0; 4]);
        assert_eq!(*wealth_process(&[1.0; 3], &s).unwrap().last().unwrap(), 1.1);
        assert!(wealth_process(&[1.0; 2], &s).is_err());
    }

    #[test]
    fn zero_strategy_gives_exact_utility() {
        let pair = ConjugatePair::new(UtilitySpec::power(0.5).unwrap());
        let b = bundle(0.0, 100);
        let r = primal_bound(4.0, &StrategySpec::default(), &pair, None, &b.view(), true).unwrap();
        assert_eq!(r.estimate.mean, 4.0);
        assert_eq!(r.estimate.stderr, 0.0);
    }

    #[test]
    fn floor_is_exact_after_enforcement() {
        let b = bundle(0.2, 300);
        let spec = StrategySpec {
            floor: 0.5,
            slack: 0.01,
            ..StrategySpec::constant(-5.0)
        };
        let e = enforce_admissibility(&spec, &b.view(), 0.0).unwrap();
        assert!(e.wealth.as_slice().iter().all(|w| *w >= spec.floor_level()));
        assert!(e.stopped_fraction > 0.5);
        let calm = enforce_admissibility(&StrategySpec::constant(0.0), &b.view(), 0.0).unwrap();
        assert_eq!(calm.stopped_fraction, 0.0);
    }

    #[test]
    fn constrained_power_has_no_violations() {
        let pair = ConjugatePair::new(UtilitySpec::power(0.5).unwrap());
        let b = bundle(0.3, 400);
        let claim = ClaimSpec::logistic(2.0, 201).unwrap();
        let r = primal_bound(0.1, &StrategySpec::constant(3.0), &pair, Some(&claim), &b.view(), true).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.estimate.is_finite());
    }

    #[test]
    fn constant_claim_hedge_is_trivial() {
        let b = bundle(0.0, 200);
        let c = ClaimSpec::constant(0.3).unwrap();
        let (rule, rep) = lsmc_hedge(&c, &b, HedgeBasis::default()).unwrap();
        assert!(rule.coeffs.iter().all(|v| *v == 0.0));
        assert_eq!(rep.price, 0.3);
        assert_eq!(rep.residual_sd, 0.0);
        assert!(matches!(lsmc_hedge(&c, &bundle(0.3, 10), HedgeBasis::default()), Err(Error::RequiresZeroRho(_))));
    }

    #[test]
    fn digital_hedge_in_scaled_market() {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let m = simulate_general_market(&DegenerateFamily, MarketIndex::Finite(4), &g, &RandomStream::new(3), 4000).unwrap();
        let claim = ClaimSpec::digital(0.0).unwrap();
        let basis = HedgeBasis {
            degree_b: 6,
            degree_v: 0,
            buckets: 8,
            features: HedgeFeatures::ScaledPolynomial,
        };
        let (_, rep) = lsmc_hedge_view(&claim, &m.view(), basis).unwrap();
        assert!((rep.price - 0.5).abs() < 0.03);
        assert!(rep.residual_sd < 0.25);
    }

    #[test]
    fn phi_zero_modes_coincide() {
        let pair = ConjugatePair::new(UtilitySpec::power(0.5).unwrap());
        let b = bundle(0.0, 300);
        let z = ClaimSpec::zero();
        let spec = StrategySpec::default().with_params([0.0, 1.2, 0.1, 0.0, 0.0]);
        let a = primal_bound(0.5, &spec, &pair, Some(&z), &b.view(), true).unwrap();
        let c = primal_bound(0.5, &spec, &pair, Some(&z), &b.view(), false).unwrap();
        assert_eq!(a.estimate, c.estimate);
    }
}
