//! Experiment runners behind the command-line tool.
//!
//! Every drop is identified by `(seed, K, drop index)`. Its pathlosses, the
//! random baseline's supports and the fading draws come from fixed
//! substreams of that identity, so any single drop can be recomputed in
//! isolation and rows never depend on scheduling. Fading is shared by all
//! methods and sparsities of a drop.

mod config;
mod table;

use rayon::prelude::*;

use crate::allocator::{greedy_partition_state, GreedyOptions, Method};
use crate::detequiv::{certificate, det_emi, solve_fixed_point, SolverOptions};
use crate::model::{make_drop, RandomStream, Scenario, SpreadingMatrix};
use crate::montecarlo::{epsilon_stats, mc_emi, EpsilonStats};
use crate::{Error, Result};

pub use config::{
    ExperimentConfig, ExperimentKind, FAST_DROPS, FAST_TRIALS, FULL_DROPS, FULL_TRIALS,
};
pub use table::{
    write_allocation, write_epsilon, write_results, write_summary, AllocationRow, ResultRow,
    SummaryRow,
};

const DROP_LABEL: u64 = 0x6472_6f70; // "drop"
const SCENARIO_LABEL: u64 = 0x7363_656e; // "scen"
const RANDOM_LABEL: u64 = 0x7261_6e64; // "rand"
const FADING_LABEL: u64 = 0x6661_6465; // "fade"
const EPSILON_LABEL: u64 = 0x0065_7073; // "eps"

/// Stream identifying one drop of a run.
pub fn drop_stream(seed: u64, ues: usize, drop: u64) -> RandomStream {
    RandomStream::new(seed)
        .substream(DROP_LABEL)
        .substream(ues as u64)
        .substream(drop)
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        max_iter: cfg.max_iter,
        ..SolverOptions::default()
    }
}

/// Pathlosses depend on `(seed, K, drop)` only, so sweeps over `d` reuse
/// the same UEs.
pub fn drop_scenario(cfg: &ExperimentConfig, ues: usize, d: usize, drop: u64) -> Result<Scenario> {
    make_drop(
        cfg.subchannels,
        ues,
        d,
        drop_stream(cfg.seed, ues, drop).substream(SCENARIO_LABEL),
    )
}

fn build_matrix(method: Method, scn: &Scenario, stream: RandomStream, d: usize) -> Result<SpreadingMatrix> {
    method.build(scn, stream.substream(RANDOM_LABEL).substream(d as u64))
}

/// All configured methods on one scenario.
pub fn evaluate_scenario(
    cfg: &ExperimentConfig,
    scn: &Scenario,
    stream: RandomStream,
    drop: u64,
) -> Result<Vec<ResultRow>> {
    let opts = solver(cfg);
    let d = scn.sparsity(0);
    cfg.methods
        .iter()
        .map(|&method| {
            let v = build_matrix(method, scn, stream, d)?;
            let fp = solve_fixed_point(scn, &v, &opts)?;
            let det = det_emi(scn, &v, &fp)?;
            let cert = certificate(scn, &v, opts.tol)?;
            let mc = if cfg.monte_carlo {
                Some(mc_emi(scn, &v, cfg.fading_trials, stream.substream(FADING_LABEL))?)
            } else {
                None
            };
            Ok(ResultRow {
                method,
                subchannels: scn.subchannels(),
                ues: scn.num_ues(),
                d,
                drop,
                det_emi: det,
                mc_emi: mc.map(|m| m.mean),
                mc_stderr: mc.map(|m| m.stderr),
                eta_max: cert.eta_max(),
                eta_min: cert.eta_min(),
                kkt_residual_max: cert.max_relative_residual(scn),
            })
        })
        .collect()
}

/// Every `(K, d, drop)` combination of the configuration, one row per method,
/// sorted by `(K, d, drop, method)`.
pub fn run_drops(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, u64)> = cfg
        .ues
        .iter()
        .flat_map(|&k| {
            cfg.sparsity
                .iter()
                .flat_map(move |&d| (0..cfg.drops).map(move |drop| (k, d, drop)))
        })
        .collect();
    let mut rows: Vec<ResultRow> = tasks
        .par_iter()
        .map(|&(k, d, drop)| {
            let scn = drop_scenario(cfg, k, d, drop)?;
            evaluate_scenario(cfg, &scn, drop_stream(cfg.seed, k, drop), drop)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.ues, r.d, r.drop, r.method));
    Ok(rows)
}

/// Rates versus the number of UEs.
pub fn run_sweep_k(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_drops(cfg)
}

/// Rates versus sparsity; the summary's `sparsity_gain` column holds
/// `mc_emi - det_emi`.
pub fn run_sweep_d(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_drops(cfg)
}

/// Evaluates the configured scenario file, or random drops when none is set.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match &cfg.scenario {
        Some(path) => {
            let scn = Scenario::load(path)?;
            let stream = RandomStream::new(cfg.seed).substream(SCENARIO_LABEL);
            evaluate_scenario(cfg, &scn, stream, 0)
        }
        None => run_drops(cfg),
    }
}

fn single_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    match &cfg.scenario {
        Some(path) => Scenario::load(path),
        None => {
            let (Some(&k), Some(&d)) = (cfg.ues.first(), cfg.sparsity.first()) else {
                return Err(Error::Config("offending keys: K, d (need one value each)".into()));
            };
            drop_scenario(cfg, k, d, 0)
        }
    }
}

/// Spreading matrix of the first configured method on one scenario.
pub fn run_allocate(cfg: &ExperimentConfig) -> Result<(Scenario, SpreadingMatrix)> {
    cfg.validate()?;
    let scn = single_scenario(cfg)?;
    let method = cfg.methods[0];
    let stream = drop_stream(cfg.seed, scn.num_ues(), 0);
    let v = build_matrix(method, &scn, stream, scn.sparsity(0))?;
    Ok((scn, v))
}

/// Greedy allocation of one drop as `(f, k, v, β_k, η_f)` rows, for
/// heat-map plotting.
pub fn visualize_allocation(cfg: &ExperimentConfig) -> Result<Vec<AllocationRow>> {
    cfg.validate()?;
    let scn = single_scenario(cfg)?;
    let state = greedy_partition_state(&scn, &GreedyOptions::default())?;
    let cert = certificate(&scn, state.assignment(), solver(cfg).tol)?;
    let mut rows: Vec<AllocationRow> = state
        .assignment()
        .nonzeros()
        .map(|(f, k, v)| AllocationRow {
            subchannel: f,
            ue: k,
            power: v,
            beta: cert.beta[k],
            eta: cert.eta[f],
        })
        .collect();
    rows.sort_by_key(|r| (r.subchannel, r.ue));
    Ok(rows)
}

/// Residual statistics per sparsity on one drop with `K = cfg.ues[0]`,
/// sharing fading across sparsities.
pub fn run_epsilon(cfg: &ExperimentConfig) -> Result<Vec<EpsilonStats>> {
    cfg.validate()?;
    let scn = single_scenario(cfg)?;
    let rng = RandomStream::new(cfg.seed).substream(EPSILON_LABEL);
    cfg.sparsity
        .iter()
        .map(|&d| epsilon_stats(&scn, d, cfg.matrices, cfg.fading_trials, rng))
        .collect()
}

/// Drop averages per `(K, d, method)`. Gains over random spreading are
/// ratios of drop-averaged rates (Monte-Carlo when available).
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, usize, Method)> = rows.iter().map(|r| (r.ues, r.d, r.method)).collect();
    keys.sort();
    keys.dedup();
    let mut summary: Vec<SummaryRow> = keys
        .into_iter()
        .map(|(k, d, method)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.ues == k && r.d == d && r.method == method)
                .collect();
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let mc_emi = group
                .iter()
                .map(|r| r.mc_emi)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / n);
            let det_emi = mean(&|r| r.det_emi);
            SummaryRow {
                method,
                subchannels: group[0].subchannels,
                ues: k,
                d,
                drops: group.len(),
                det_emi,
                mc_emi,
                sparsity_gain: mc_emi.map(|m| m - det_emi),
                gain_over_random: None,
                kkt_residual_max: group.iter().map(|r| r.kkt_residual_max).fold(0.0, f64::max),
            }
        })
        .collect();
    let rate = |s: &SummaryRow| s.mc_emi.unwrap_or(s.det_emi);
    let baselines: Vec<(usize, usize, f64)> = summary
        .iter()
        .filter(|s| s.method == Method::Random)
        .map(|s| (s.ues, s.d, rate(s)))
        .collect();
    for s in &mut summary {
        if let Some(&(_, _, base)) = baselines.iter().find(|b| b.0 == s.ues && b.1 == s.d) {
            s.gain_over_random = Some(rate(s) / base - 1.0);
        }
    }
    summary
}
