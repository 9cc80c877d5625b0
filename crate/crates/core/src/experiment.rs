//! Experiment dispatch: config in, CSV tables and a manifest out.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::{validate_config, ExperimentConfig, ExperimentKind, KwFamilyName};
use crate::dual::{subreplication_estimate, subreplication_quadrature};
use crate::error::{Error, Result};
use crate::indifference::{degenerate_example, rho_sweep, BisectionSettings, DegenerateSettings, SweepConfig};
use crate::kw::{kw_convergence_diag, ConstantIntegrand, Integrand};
use crate::market::{
    heston_terminals, simulate_heston_market, DegenerateFamily, MarketFamily, MarketIndex, TimeGrid,
    VanishingComponentFamily,
};
use crate::optim::CoefficientBox;
use crate::report::{blob_hash, fmt_f64, fmt_opt, write_manifest, write_table, CsvTable, OutputFile, RowMeta, RunManifest, WallClock};
use crate::riccati::{affine_exponential_moment, cir_bond_price, AffineMomentQuery};
use crate::rng::RandomStream;
use crate::stats::Estimate;

/// Scalar overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<i64>,
    pub steps: Option<i64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(p) = self.paths {
            cfg.paths = p;
        }
        if let Some(n) = self.steps {
            cfg.steps = n;
        }
    }
}

/// Named tables produced by one experiment.
pub type Tables = Vec<(&'static str, CsvTable)>;

/// Runs the experiment without touching the filesystem, except for table
/// claims which are read relative to `base_dir`.
pub fn compute_tables(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Tables> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        // surface the most specific model error when there is one
        cfg.market.params()?;
        return Err(Error::Config(violations));
    }
    let meta = RowMeta {
        seed: cfg.seed,
        paths: cfg.paths_usize(),
        steps: cfg.steps_usize(),
    };
    match cfg.kind {
        ExperimentKind::Sweep => sweep(cfg, base_dir, meta),
        ExperimentKind::Degenerate => degenerate(cfg, meta),
        ExperimentKind::Kw => kw(cfg, meta),
        ExperimentKind::Subreplication => subreplication(cfg, base_dir, meta),
        ExperimentKind::OracleCheck => oracle(cfg, meta),
    }
}

/// Runs `cfg`, writes every table and `manifest.json` into `out_dir`.
/// `config_text` is the raw input, hashed into the manifest.
pub fn run_experiment(cfg: &ExperimentConfig, config_text: &str, base_dir: &Path, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let tables = compute_tables(cfg, base_dir)?;
    std::fs::create_dir_all(out_dir)?;
    let outputs: Vec<OutputFile> = tables
        .iter()
        .map(|(name, t)| write_table(out_dir, name, t))
        .collect::<Result<_>>()?;
    let manifest = RunManifest {
        kind: cfg.kind.name().to_string(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        config_blob: blob_hash(config_text.as_bytes()),
        outputs,
        wall_clock: WallClock {
            started_unix,
            elapsed_seconds: started.elapsed().as_secs_f64(),
            workers: rayon::current_num_threads(),
        },
    };
    write_manifest(out_dir, &manifest)?;
    Ok(manifest)
}

fn indices(entries: &[crate::config::IndexEntry]) -> Vec<MarketIndex> {
    entries.iter().filter_map(|e| e.index()).collect()
}

fn sweep(cfg: &ExperimentConfig, base_dir: &Path, meta: RowMeta) -> Result<Tables> {
    let s = &cfg.sweep;
    let mut start = [0.0; 5];
    start.copy_from_slice(&s.start);
    let sc = SweepConfig {
        params: cfg.market.params()?,
        x_values: s.x.clone(),
        y_values: s.y.clone(),
        rho_values: s.rho.clone(),
        claim: cfg.claim.spec(base_dir)?,
        pair: cfg.pair()?,
        paths: meta.paths,
        steps: meta.steps,
        seed: cfg.seed,
        family: CoefficientBox::new(s.lower.clone(), s.upper.clone())?,
        budget: s.budget as usize,
        hedge_basis: cfg.sweep_basis(),
        start,
        bisection: BisectionSettings {
            tolerance: s.tolerance,
            ..BisectionSettings::default()
        },
        with_prices: s.with_prices,
        train_margin: s.train_margin,
    };
    let rows = rho_sweep(&sc)?;
    let mut t = CsvTable::new(
        &[
            "x",
            "rho",
            "u_hat",
            "u_hat_se",
            "u_constrained",
            "u_constrained_se",
            "u_unconstrained",
            "u_unconstrained_se",
            "violations",
            "stopped_fraction",
            "dual_y",
            "dual_cap",
            "dual_cap_se",
            "price",
            "price_se",
            "price_gap",
            "price_gap_se",
        ],
        meta,
    );
    for r in rows {
        t.push(vec![
            fmt_f64(r.x),
            fmt_f64(r.rho),
            fmt_f64(r.u_hat.mean),
            fmt_f64(r.u_hat.stderr),
            fmt_f64(r.u_constrained.mean),
            fmt_f64(r.u_constrained.stderr),
            fmt_f64(r.u_unconstrained.mean),
            fmt_f64(r.u_unconstrained.stderr),
            r.violations.to_string(),
            fmt_f64(r.stopped_fraction),
            fmt_f64(r.dual_y),
            fmt_f64(r.dual_cap.mean),
            fmt_f64(r.dual_cap.stderr),
            fmt_opt(r.price.as_ref().map(|p| p.p)),
            fmt_opt(r.price.as_ref().map(|p| p.stderr)),
            fmt_opt(r.price_gap.map(|g| g.0)),
            fmt_opt(r.price_gap.map(|g| g.1)),
        ]);
    }
    Ok(vec![("sweep.csv", t)])
}

fn degenerate(cfg: &ExperimentConfig, meta: RowMeta) -> Result<Tables> {
    let d = &cfg.degenerate;
    let settings = DegenerateSettings {
        paths: meta.paths,
        steps: meta.steps,
        seed: cfg.seed,
        basis: cfg.degenerate_basis(),
        budget: d.budget as usize,
        weight_range: (d.weight_range[0], d.weight_range[1]),
    };
    let rows = degenerate_example(&indices(&d.ns), d.alpha, d.x, &settings)?;
    let mut bounds = CsvTable::new(
        &["n", "analytic", "estimate", "stderr", "hedge_weight", "hedge_residual_sd"],
        meta,
    );
    for r in &rows {
        bounds.push(vec![
            r.n.to_string(),
            fmt_f64(r.analytic),
            fmt_f64(r.estimate.mean),
            fmt_f64(r.estimate.stderr),
            fmt_f64(r.hedge_weight),
            fmt_f64(r.hedge_residual_sd),
        ]);
    }
    let limit = rows.iter().find(|r| r.n == MarketIndex::Infinity).map(|r| r.estimate);
    let mut gap = CsvTable::new(&["n", "gap_analytic", "gap_estimate", "gap_se"], meta);
    for r in rows.iter().filter(|r| r.n != MarketIndex::Infinity) {
        gap.push(vec![
            r.n.to_string(),
            fmt_f64(r.analytic - r.analytic_limit),
            fmt_opt(limit.map(|l| r.estimate.mean - l.mean)),
            fmt_opt(limit.map(|l| r.estimate.combined_se(&l))),
        ]);
    }
    Ok(vec![("degenerate_bounds.csv", bounds), ("degenerate_gap.csv", gap)])
}

fn kw(cfg: &ExperimentConfig, meta: RowMeta) -> Result<Tables> {
    let grid = TimeGrid::new(cfg.market.horizon, meta.steps)?;
    let stream = RandomStream::new(cfg.seed);
    let vanishing = VanishingComponentFamily {
        scale: cfg.kw.scale,
        ..VanishingComponentFamily::default()
    };
    let (family, nu): (&dyn MarketFamily, &dyn Integrand) = match cfg.kw.family {
        KwFamilyName::Vanishing => (&vanishing, &ConstantIntegrand([0.0, 1.0])),
        KwFamilyName::Degenerate => (&DegenerateFamily, &ConstantIntegrand([1.0])),
    };
    let rows = kw_convergence_diag(family, nu, &grid, &stream, meta.paths, &indices(&cfg.kw.ns))?;
    let mut t = CsvTable::new(
        &["n", "energy", "stderr", "zero_cell_fraction", "orthogonality_residual", "pythagoras_residual"],
        meta,
    );
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            fmt_f64(r.energy.mean),
            fmt_f64(r.energy.stderr),
            fmt_f64(r.zero_cell_fraction),
            fmt_f64(r.orthogonality_residual),
            fmt_f64(r.pythagoras_residual),
        ]);
    }
    Ok(vec![("kw.csv", t)])
}

fn subreplication(cfg: &ExperimentConfig, base_dir: &Path, meta: RowMeta) -> Result<Tables> {
    let s = &cfg.subreplication;
    let params = cfg.market.params()?;
    let claim = cfg.claim.spec(base_dir)?;
    let grid = TimeGrid::new(params.horizon, meta.steps)?;
    let bundle = simulate_heston_market(&params, &grid, &RandomStream::new(cfg.seed), meta.paths)?;
    let handoff = params.horizon - s.gap;
    let count = s.shift_count as usize;
    let mut t = CsvTable::new(&["shift", "estimate", "stderr", "quadrature", "phi_min"], meta);
    for i in 0..count {
        let shift = if count == 1 {
            s.shift_min
        } else {
            s.shift_min + (s.shift_max - s.shift_min) * i as f64 / (count - 1) as f64
        };
        let e = subreplication_estimate(&claim, shift, handoff, &bundle)?;
        let q = subreplication_quadrature(&claim, shift, s.gap, s.quadrature_order as usize);
        t.push(vec![fmt_f64(shift), fmt_f64(e.mean), fmt_f64(e.stderr), fmt_f64(q), fmt_f64(claim.phi_min())]);
    }
    Ok(vec![("subreplication.csv", t)])
}

fn oracle(cfg: &ExperimentConfig, meta: RowMeta) -> Result<Tables> {
    let params = cfg.market.params()?;
    let grid = TimeGrid::new(params.horizon, meta.steps)?;
    let term = heston_terminals(&params, &grid, &RandomStream::new(cfg.seed), meta.paths)?;
    let mut t = CsvTable::new(&["a", "b", "riccati", "closed_form", "mc", "mc_se", "z_score"], meta);
    for &a in &cfg.oracle.a {
        for &b in &cfg.oracle.b {
            let exact = affine_exponential_moment(&params, AffineMomentQuery { a, b }, cfg.oracle.rtol)?;
            let closed = if a == 0.0 && b <= 0.0 { Some(cir_bond_price(&params, -b)?) } else { None };
            let samples: Vec<f64> = term.v_t.iter().zip(&term.int_v).map(|(v, i)| (a * v + b * i).exp()).collect();
            let mc = if samples.iter().all(|s| *s == samples[0]) {
                Estimate::exact(samples[0], samples.len())
            } else {
                Estimate::from_samples(&samples)
            };
            let z = if mc.stderr > 0.0 { (mc.mean - exact) / mc.stderr } else { 0.0 };
            t.push(vec![
                fmt_f64(a),
                fmt_f64(b),
                fmt_f64(exact),
                fmt_opt(closed),
                fmt_f64(mc.mean),
                fmt_f64(mc.stderr),
                fmt_f64(z),
            ]);
        }
    }
    Ok(vec![("oracle.csv", t)])
}
