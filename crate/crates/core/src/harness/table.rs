use std::io::Write;

use crate::allocator::Method;
use crate::model::units::RateUnit;
use crate::montecarlo::EpsilonStats;
use crate::Result;

/// One method on one drop. Rates are in nats; conversion happens on output.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub subchannels: usize,
    pub ues: usize,
    pub d: usize,
    pub drop: u64,
    pub det_emi: f64,
    pub mc_emi: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub eta_max: f64,
    pub eta_min: f64,
    pub kkt_residual_max: f64,
}

/// Drop averages of one `(method, K, d)` group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub subchannels: usize,
    pub ues: usize,
    pub d: usize,
    pub drops: usize,
    pub det_emi: f64,
    pub mc_emi: Option<f64>,
    /// `mc_emi - det_emi`.
    pub sparsity_gain: Option<f64>,
    /// Relative gain over random spreading at the same `(K, d)`.
    pub gain_over_random: Option<f64>,
    pub kkt_residual_max: f64,
}

/// One nonzero of an allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationRow {
    pub subchannel: usize,
    pub ue: usize,
    pub power: f64,
    pub beta: f64,
    pub eta: f64,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Per-drop rows with header
/// `method,F,K,d,drop_seed,det_emi_<u>,mc_emi_<u>,mc_stderr_<u>,eta_max,eta_min,kkt_residual_max`.
/// Monte-Carlo fields are empty when it was disabled.
pub fn write_results<W: Write>(rows: &[ResultRow], unit: RateUnit, out: W) -> Result<()> {
    let u = unit.suffix();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method".to_string(),
        "F".into(),
        "K".into(),
        "d".into(),
        "drop_seed".into(),
        format!("det_emi_{u}"),
        format!("mc_emi_{u}"),
        format!("mc_stderr_{u}"),
        "eta_max".into(),
        "eta_min".into(),
        "kkt_residual_max".into(),
    ])?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.subchannels.to_string(),
            r.ues.to_string(),
            r.d.to_string(),
            r.drop.to_string(),
            num(unit.convert(r.det_emi)),
            opt(r.mc_emi.map(|x| unit.convert(x))),
            opt(r.mc_stderr.map(|x| unit.convert(x))),
            num(r.eta_max),
            num(r.eta_min),
            num(r.kkt_residual_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], unit: RateUnit, out: W) -> Result<()> {
    let u = unit.suffix();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method".to_string(),
        "F".into(),
        "K".into(),
        "d".into(),
        "drops".into(),
        format!("det_emi_{u}"),
        format!("mc_emi_{u}"),
        format!("sparsity_gain_{u}"),
        "gain_over_random".into(),
        "kkt_residual_max".into(),
    ])?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.subchannels.to_string(),
            r.ues.to_string(),
            r.d.to_string(),
            r.drops.to_string(),
            num(unit.convert(r.det_emi)),
            opt(r.mc_emi.map(|x| unit.convert(x))),
            opt(r.sparsity_gain.map(|x| unit.convert(x))),
            opt(r.gain_over_random),
            num(r.kkt_residual_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_allocation<W: Write>(rows: &[AllocationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["f", "k", "v", "beta", "eta_f"])?;
    for r in rows {
        w.write_record([
            r.subchannel.to_string(),
            r.ue.to_string(),
            num(r.power),
            num(r.beta),
            num(r.eta),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Epsilon statistics; the variance is scaled by the square of the unit factor.
pub fn write_epsilon<W: Write>(rows: &[EpsilonStats], unit: RateUnit, out: W) -> Result<()> {
    let u = unit.suffix();
    let scale = unit.convert(1.0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "d".to_string(),
        format!("mean_eps_{u}"),
        format!("var_eps_{u}2"),
        format!("mean_stderr_{u}"),
        format!("mean_mc_{u}"),
        format!("mean_det_{u}"),
        "matrices".into(),
        "trials".into(),
    ])?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            num(unit.convert(r.mean_eps)),
            num(r.var_eps * scale * scale),
            num(unit.convert(r.mean_stderr)),
            num(unit.convert(r.mean_mc)),
            num(unit.convert(r.mean_det)),
            r.samples.to_string(),
            r.trials_per_matrix.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
