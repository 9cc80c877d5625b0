//! Indifference prices and the convergence experiments built on them.
//!
//! The price `p` solves `w(x + p) = u(x)`, where `u` carries the claim and
//! `w` does not. Both sides are Monte Carlo lower bounds from the same
//! paths and the same optimizer budget, so the bisection runs on a
//! deterministic function of `p`.

use serde::Serialize;

use crate::dual::dual_bound_mmm;
use crate::error::{invalid, Error, Result};
use crate::market::{
    simulate_general_market, simulate_heston_market, DegenerateFamily, HestonParams, MarketIndex, MarketView, TimeGrid,
};
use crate::optim::CoefficientBox;
use crate::primal::{lsmc_hedge, lsmc_hedge_view, optimize_primal, primal_bound, HedgeBasis, StrategySpec, STRATEGY_DIM};
use crate::rng::RandomStream;
use crate::stats::{Estimate, Z95};
use crate::utility::{ClaimSpec, ConjugatePair, UtilitySpec};

/// Substream tags. Optimization and evaluation use independent paths so
/// reported bounds are not inflated by in-sample fitting.
pub const TRAIN_TAG: u64 = 1;
pub const EVAL_TAG: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BisectionSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub p: f64,
    pub bracket_width: f64,
    /// `w_hat(x + p)`.
    pub w_estimate: Estimate,
    /// `u_hat(x)`.
    pub u_estimate: Estimate,
    /// Delta-method standard error of `p`.
    pub stderr: f64,
    pub iterations: usize,
    /// Stopped because both bracket images were inside the combined CI.
    pub noise_floor: bool,
    /// Set when `[phi_min, phi_max]` shows no sign change.
    pub diagnosis: Option<String>,
}

/// Bisection for `w(x + p) = u_hat` on `[lo, hi]`. `w` must be increasing.
pub fn solve_price(
    u_hat: Estimate,
    x: f64,
    lo: f64,
    hi: f64,
    w: impl Fn(f64) -> Result<Estimate>,
    settings: &BisectionSettings,
) -> Result<PriceResult> {
    if !(settings.tolerance > 0.0) || settings.max_iterations == 0 {
        return Err(invalid("bisection", "tolerance and iteration cap must be positive"));
    }
    let g = |p: f64| -> Result<(f64, Estimate)> {
        let e = w(x + p)?;
        Ok((e.mean - u_hat.mean, e))
    };
    let within = |d: f64, e: &Estimate| d.abs() <= Z95 * e.combined_se(&u_hat);
    let range = hi - lo;
    let (mut lo, mut hi) = (lo, hi);
    let (mut g_lo, mut e_lo) = g(lo)?;
    let (mut g_hi, mut e_hi) = g(hi)?;
    let finish = |p: f64, width: f64, e: Estimate, iterations: usize, noise_floor: bool, diagnosis: Option<String>| -> Result<PriceResult> {
        let h = (0.05 * range).max(1e-6);
        let up = w(x + p + h)?;
        let dn = w(x + p - h)?;
        let slope = (up.mean - dn.mean) / (2.0 * h);
        let stderr = if slope > 0.0 && slope.is_finite() {
            e.combined_se(&u_hat) / slope
        } else {
            f64::INFINITY
        };
        Ok(PriceResult {
            p,
            bracket_width: width,
            w_estimate: e,
            u_estimate: u_hat,
            stderr,
            iterations,
            noise_floor,
            diagnosis,
        })
    };
    if g_lo > 0.0 && !within(g_lo, &e_lo) {
        return finish(lo, range, e_lo, 0, false, Some(format!("w(x + phi_min) exceeds u(x) by {g_lo:.3e}")));
    }
    if g_hi < 0.0 && !within(g_hi, &e_hi) {
        return finish(hi, range, e_hi, 0, false, Some(format!("w(x + phi_max) falls short of u(x) by {:.3e}", -g_hi)));
    }
    let mut iterations = 0;
    let mut noise_floor = false;
    while hi - lo > settings.tolerance && iterations < settings.max_iterations {
        if within(g_lo, &e_lo) && within(g_hi, &e_hi) {
            noise_floor = true;
            break;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (gm, em) = g(mid)?;
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
            e_lo = em;
        } else {
            hi = mid;
            g_hi = gm;
            e_hi = em;
        }
    }
    let p = 0.5 * (lo + hi);
    let (_, e) = g(p)?;
    finish(p, hi - lo, e, iterations, noise_floor, None)
}

/// Optimizer settings shared by both sides of a price solve.
#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    pub family: CoefficientBox,
    pub budget: usize,
    /// Hedge, admissibility data and starting point for the claim side.
    pub template: StrategySpec,
    /// Same for the claim-free side; normally without a hedge.
    pub plain_template: StrategySpec,
}

impl OptimizerSettings {
    /// The single strategy `H = 0`.
    pub fn zero_budget() -> Self {
        Self {
            family: CoefficientBox::singleton(vec![0.0; STRATEGY_DIM]),
            budget: 1,
            template: StrategySpec::default(),
            plain_template: StrategySpec::default(),
        }
    }
}

/// `p(x)` in the market `view`. Constant claims return their value.
pub fn indifference_price(
    x: f64,
    claim: &ClaimSpec,
    pair: &ConjugatePair,
    view: &MarketView<'_>,
    opt: &OptimizerSettings,
    constrained: bool,
    settings: &BisectionSettings,
) -> Result<PriceResult> {
    if claim.is_constant() {
        let c = claim.phi_min();
        let u = optimize_primal(x, pair, Some(claim), view, &opt.plain_template, &opt.family, opt.budget, constrained)?;
        let w = optimize_primal(x + c, pair, None, view, &opt.plain_template, &opt.family, opt.budget, constrained)?;
        return Ok(PriceResult {
            p: c,
            bracket_width: 0.0,
            w_estimate: w.estimate,
            u_estimate: u.estimate,
            stderr: 0.0,
            iterations: 0,
            noise_floor: false,
            diagnosis: None,
        });
    }
    let u = optimize_primal(x, pair, Some(claim), view, &opt.template, &opt.family, opt.budget, constrained)?;
    if !u.estimate.is_finite() {
        return Err(Error::NonFinite(format!("u_hat({x}) = {}", u.estimate.mean)));
    }
    let w = |z: f64| -> Result<Estimate> {
        Ok(optimize_primal(z, pair, None, view, &opt.plain_template, &opt.family, opt.budget, constrained)?.estimate)
    };
    solve_price(u.estimate, x, claim.phi_min(), claim.phi_max(), w, settings)
}

/// Everything a correlation sweep needs.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: HestonParams,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub claim: ClaimSpec,
    pub pair: ConjugatePair,
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub family: CoefficientBox,
    pub budget: usize,
    pub hedge_basis: HedgeBasis,
    /// Starting point `[a, pi, c0, cV, cB]` for the claim side.
    pub start: [f64; STRATEGY_DIM],
    pub bisection: BisectionSettings,
    pub with_prices: bool,
    /// Margin used when fitting unconstrained strategies on training
    /// paths; see [`StrategySpec::margin`].
    pub train_margin: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for &r in &self.rho_values {
            if !(r > -1.0 && r < 1.0) {
                return Err(Error::InvalidRho(r));
            }
        }
        if self.x_values.is_empty() || self.y_values.is_empty() || self.rho_values.is_empty() {
            return Err(Error::Empty("sweep grid"));
        }
        if self.y_values.iter().any(|y| !(*y > 0.0)) {
            return Err(invalid("y_values", "must be positive"));
        }
        if self.paths == 0 || self.steps == 0 {
            return Err(invalid("ensemble", "paths and steps must be positive"));
        }
        if self.budget == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub rho: f64,
    pub u_constrained: Estimate,
    pub u_unconstrained: Estimate,
    /// Unconstrained at `rho = 0`, constrained otherwise.
    pub u_hat: Estimate,
    pub violations: usize,
    pub stopped_fraction: f64,
    pub dual_y: f64,
    /// `E[V_c(y Z_T, f)] + x y` at the selected `y`.
    pub dual_cap: Estimate,
    pub price: Option<PriceResult>,
    /// `p_hat(x, 0) - p_hat(x, rho)` and its standard error.
    pub price_gap: Option<(f64, f64)>,
}

fn primal_pair(
    cfg: &SweepConfig,
    x: f64,
    template: &StrategySpec,
    claim: Option<&ClaimSpec>,
    train: &MarketView<'_>,
    eval: &MarketView<'_>,
    constrained: bool,
) -> Result<crate::primal::PrimalResult> {
    let margin = if constrained { 0.0 } else { cfg.train_margin };
    let fit = optimize_primal(x, &cfg.pair, claim, train, &template.with_margin(margin), &cfg.family, cfg.budget, constrained)?;
    primal_bound(x, &fit.strategy.with_margin(0.0), &cfg.pair, claim, eval, constrained)
}

/// Bounds and prices over `x_values x rho_values`. `rho = 0` is always
/// evaluated so gaps can be reported. The hedge is fitted once in the
/// `rho = 0` market and reused as a state-based rule everywhere.
pub fn rho_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let grid = TimeGrid::new(cfg.params.horizon, cfg.steps)?;
    let stream = RandomStream::new(cfg.seed);
    let (train_s, eval_s) = (stream.substream(TRAIN_TAG), stream.substream(EVAL_TAG));
    let zero = cfg.params.with_rho(0.0)?;
    let hedge_bundle = simulate_heston_market(&zero, &grid, &train_s, cfg.paths)?;
    let (rule, _) = lsmc_hedge(&cfg.claim, &hedge_bundle, cfg.hedge_basis)?;
    drop(hedge_bundle);
    let template = StrategySpec::default().with_hedge(rule).with_params(cfg.start);
    let plain = StrategySpec::default().with_params([0.0, cfg.start[1], 0.0, 0.0, 0.0]);
    let opt = OptimizerSettings {
        family: cfg.family.clone(),
        budget: cfg.budget,
        template: template.clone(),
        plain_template: plain,
    };

    let mut rhos = vec![0.0];
    rhos.extend(cfg.rho_values.iter().copied().filter(|r| *r != 0.0));
    let mut rows = Vec::new();
    let mut base_prices: Vec<Option<PriceResult>> = vec![None; cfg.x_values.len()];
    for &rho in &rhos {
        let p = cfg.params.with_rho(rho)?;
        let train = simulate_heston_market(&p, &grid, &train_s, cfg.paths)?;
        let eval = simulate_heston_market(&p, &grid, &eval_s, cfg.paths)?;
        let (tv, ev) = (train.view(), eval.view());
        for (xi, &x) in cfg.x_values.iter().enumerate() {
            let uc = primal_pair(cfg, x, &template, Some(&cfg.claim), &tv, &ev, true)?;
            let uu = primal_pair(cfg, x, &template, Some(&cfg.claim), &tv, &ev, false)?;
            let chosen = if rho == 0.0 { &uu } else { &uc };

            let mut best = (f64::INFINITY, cfg.y_values[0]);
            for &y in &cfg.y_values {
                let e = dual_bound_mmm(y, &cfg.pair, Some(&cfg.claim), &train)?;
                if e.mean + x * y < best.0 {
                    best = (e.mean + x * y, y);
                }
            }
            let y = best.1;
            let mut cap = dual_bound_mmm(y, &cfg.pair, Some(&cfg.claim), &eval)?;
            cap.mean += x * y;

            let price = if cfg.with_prices {
                Some(indifference_price(x, &cfg.claim, &cfg.pair, &ev, &opt, rho != 0.0, &cfg.bisection)?)
            } else {
                None
            };
            if rho == 0.0 {
                base_prices[xi] = price.clone();
            }
            let price_gap = match (&base_prices[xi], &price) {
                (Some(b), Some(p)) => Some((b.p - p.p, (b.stderr * b.stderr + p.stderr * p.stderr).sqrt())),
                _ => None,
            };
            log::info!("sweep x = {x}, rho = {rho}: u_hat = {:.6}, cap = {:.6}", chosen.estimate.mean, cap.mean);
            rows.push(SweepRow {
                x,
                rho,
                u_constrained: uc.estimate,
                u_unconstrained: uu.estimate,
                u_hat: chosen.estimate,
                violations: chosen.violations,
                stopped_fraction: chosen.stopped_fraction,
                dual_y: y,
                dual_cap: cap,
                price,
                price_gap,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateRow {
    pub n: MarketIndex,
    /// `U(x + 1/2)` for finite `n`, `E[U(x + f)]` at infinity.
    pub analytic: f64,
    pub analytic_limit: f64,
    pub estimate: Estimate,
    pub hedge_weight: f64,
    pub hedge_residual_sd: f64,
}

#[derive(Debug, Clone)]
pub struct DegenerateSettings {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub basis: HedgeBasis,
    pub budget: usize,
    /// Range searched for the hedge weight `a`.
    pub weight_range: (f64, f64),
}

/// Example with `S^n = B/n`, `S^inf = 0` and `f = 1{B_T >= 0}` under
/// exponential utility. Every finite market replicates `f` at price 1/2;
/// the limit market cannot trade at all.
pub fn degenerate_example(ns: &[MarketIndex], alpha: f64, x: f64, settings: &DegenerateSettings) -> Result<Vec<DegenerateRow>> {
    let utility = UtilitySpec::exponential(alpha)?;
    let pair = ConjugatePair::new(utility.clone());
    let claim = ClaimSpec::digital(0.0)?;
    let grid = TimeGrid::new(1.0, settings.steps)?;
    let stream = RandomStream::new(settings.seed);
    let (train_s, eval_s) = (stream.substream(TRAIN_TAG), stream.substream(EVAL_TAG));
    let finite = utility.eval(x + 0.5);
    let limit = 0.5 * (utility.eval(x) + utility.eval(x + 1.0));
    let (lo, hi) = settings.weight_range;
    let family = CoefficientBox::new(vec![lo, 0.0, 0.0, 0.0, 0.0], vec![hi, 0.0, 0.0, 0.0, 0.0])?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let eval = simulate_general_market(&DegenerateFamily, n, &grid, &eval_s, settings.paths)?;
        let row = match n {
            MarketIndex::Infinity => {
                let r = primal_bound(x, &StrategySpec::default(), &pair, Some(&claim), &eval.view(), false)?;
                DegenerateRow {
                    n,
                    analytic: limit,
                    analytic_limit: limit,
                    estimate: r.estimate,
                    hedge_weight: 0.0,
                    hedge_residual_sd: f64::NAN,
                }
            }
            MarketIndex::Finite(_) => {
                let train = simulate_general_market(&DegenerateFamily, n, &grid, &train_s, settings.paths)?;
                let (rule, rep) = lsmc_hedge_view(&claim, &train.view(), settings.basis)?;
                let start = [(-1.0f64).clamp(lo, hi), 0.0, 0.0, 0.0, 0.0];
                let template = StrategySpec::default().with_hedge(rule).with_params(start);
                let fit = optimize_primal(x, &pair, Some(&claim), &train.view(), &template, &family, settings.budget, false)?;
                let r = primal_bound(x, &fit.strategy, &pair, Some(&claim), &eval.view(), false)?;
                DegenerateRow {
                    n,
                    analytic: finite,
                    analytic_limit: limit,
                    estimate: r.estimate,
                    hedge_weight: fit.strategy.params[0],
                    hedge_residual_sd: rep.residual_sd,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
