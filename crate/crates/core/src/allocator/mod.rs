//! Spreading-matrix construction.
//!
//! Optimal codes spend every UE's full budget and give every sub-channel the
//! same weighted load `η_f = Σ_k β_k v[f,k]`. With each UE's power split into
//! `d_k` equal fragments worth `β_k P_k / d_k`, building a sparse optimum is
//! a multiway number-partitioning problem; [`greedy_partition`] solves it
//! with the largest-first heuristic. The dense, regular and random
//! constructions are the reference schemes.

mod brute;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;

use crate::detequiv::{beta_weights, r_star_for};
use crate::model::{RandomStream, Scenario, SpreadingMatrix};
use crate::{Error, Result};

pub use brute::{brute_force_partition, MAX_BRUTE_FRAGMENTS, MAX_BRUTE_SUBCHANNELS};

/// One of the `d_k` equal power fragments of a UE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fragment {
    pub ue: usize,
    /// Contribution `β_k P_k / d_k` to the load of the sub-channel it lands on.
    pub value: f64,
    /// Power `P_k / d_k` in W.
    pub power: f64,
}

/// Fragments of every UE in `scn`, given the UE weights `beta`.
pub fn fragments(scn: &Scenario, beta: &[f64]) -> Vec<Fragment> {
    (0..scn.num_ues())
        .flat_map(|k| {
            let d = scn.sparsity(k);
            let power = scn.power(k) / d as f64;
            let frag = Fragment {
                ue: k,
                value: beta[k] * power,
                power,
            };
            std::iter::repeat_n(frag, d)
        })
        .collect()
}

/// Per-UE fragment groups `(value, power, count)`, indexed by UE.
fn group_fragments(fragments: &[Fragment], subchannels: usize) -> Result<Vec<(f64, f64, usize)>> {
    let ues = fragments.iter().map(|fr| fr.ue + 1).max().unwrap_or(0);
    let mut groups: Vec<Option<(f64, f64, usize)>> = vec![None; ues];
    for fr in fragments {
        if !(fr.value.is_finite() && fr.value >= 0.0 && fr.power.is_finite() && fr.power > 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "fragment of UE {} has value {} and power {}",
                fr.ue, fr.value, fr.power
            )));
        }
        match &mut groups[fr.ue] {
            slot @ None => *slot = Some((fr.value, fr.power, 1)),
            Some((value, power, count)) => {
                if *value != fr.value || *power != fr.power {
                    return Err(Error::InvalidMatrix(format!(
                        "UE {} has fragments of unequal size",
                        fr.ue
                    )));
                }
                *count += 1;
            }
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(k, g)| match g {
            Some(g) if g.2 > subchannels => Err(Error::InvalidMatrix(format!(
                "UE {k} has {} fragments but only {subchannels} sub-channels",
                g.2
            ))),
            Some(g) => Ok(g),
            None => Ok((0.0, 0.0, 0)),
        })
        .collect()
}

/// Assignment under construction.
#[derive(Clone, Debug)]
pub struct PartitionState {
    eta: Vec<f64>,
    assignment: SpreadingMatrix,
    remaining: Vec<usize>,
    /// `β_k`, i.e. load added per watt of UE `k`.
    weight: Vec<f64>,
}

impl PartitionState {
    fn new(groups: &[(f64, f64, usize)], subchannels: usize) -> Self {
        Self {
            eta: vec![0.0; subchannels],
            assignment: SpreadingMatrix::zeros(subchannels, groups.len()),
            remaining: groups.iter().map(|g| g.2).collect(),
            weight: groups
                .iter()
                .map(|&(value, power, _)| if power > 0.0 { value / power } else { 0.0 })
                .collect(),
        }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn assignment(&self) -> &SpreadingMatrix {
        &self.assignment
    }

    pub fn into_assignment(self) -> SpreadingMatrix {
        self.assignment
    }

    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ_k β_k v[f,k]` recomputed from the assignment.
    pub fn recomputed_eta(&self) -> Vec<f64> {
        let mut eta = vec![0.0; self.eta.len()];
        for (f, k, v) in self.assignment.nonzeros() {
            eta[f] += self.weight[k] * v;
        }
        eta
    }

    fn place(&mut self, ue: usize, f: usize, power: f64, value: f64) {
        debug_assert!(self.assignment.get(f, ue) == 0.0);
        self.assignment
            .set(f, ue, power)
            .expect("placement stays inside the matrix");
        self.eta[f] += value;
        self.remaining[ue] -= 1;
    }

    fn shift(&mut self, ue: usize, from: usize, to: usize, power: f64, value: f64) {
        self.assignment.set(from, ue, 0.0).expect("in range");
        self.assignment.set(to, ue, power).expect("in range");
        self.eta[from] -= value;
        self.eta[to] += value;
    }

    /// Moves single fragments from the most to the least loaded sub-channel
    /// while that lowers the larger of the two loads. Each move strictly
    /// lowers `Σ η_f²`, so this terminates.
    fn rebalance(&mut self) {
        loop {
            let (hi, lo) = (argmax(&self.eta), argmin(&self.eta));
            let gap = self.eta[hi] - self.eta[lo];
            let mut best: Option<(usize, f64, f64)> = None;
            for k in 0..self.assignment.cols() {
                let p = self.assignment.get(hi, k);
                if p == 0.0 || self.assignment.get(lo, k) > 0.0 {
                    continue;
                }
                let value = self.weight[k] * p;
                if value > 0.0 && value < gap {
                    let imbalance = (gap - 2.0 * value).abs();
                    if best.is_none_or(|(_, _, b)| imbalance < b) {
                        best = Some((k, p, imbalance));
                    }
                }
            }
            match best {
                Some((k, p, _)) => {
                    let value = self.weight[k] * p;
                    self.shift(k, hi, lo, p, value);
                }
                None => break,
            }
        }
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// Largest-fragment-first greedy over `subchannels` bins.
///
/// UEs are visited in decreasing fragment value (ties: lower index first).
/// Each fragment goes to the least loaded sub-channel the UE does not use
/// yet (ties: lower index), so a UE with `d` fragments ends up on exactly
/// `d` distinct sub-channels.
pub fn greedy_fragments(fragments: &[Fragment], subchannels: usize) -> Result<PartitionState> {
    if subchannels == 0 {
        return Err(Error::InvalidScenario("need at least one sub-channel".into()));
    }
    let groups = group_fragments(fragments, subchannels)?;
    let mut state = PartitionState::new(&groups, subchannels);

    let mut order: Vec<usize> = (0..groups.len()).filter(|&k| groups[k].2 > 0).collect();
    order.sort_by(|&a, &b| groups[b].0.total_cmp(&groups[a].0));

    for k in order {
        let (value, power, count) = groups[k];
        for _ in 0..count {
            let mut best: Option<usize> = None;
            for f in 0..subchannels {
                if state.assignment.get(f, k) > 0.0 {
                    continue;
                }
                if best.is_none_or(|b| state.eta[f] < state.eta[b]) {
                    best = Some(f);
                }
            }
            let f = best.expect("count <= subchannels leaves a free sub-channel");
            state.place(k, f, power, value);
        }
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GreedyOptions {
    /// Run the single-fragment rebalancing pass after the greedy sweep.
    pub rebalance: bool,
}

/// Greedy partition state for `scn`, with `β_k` computed at `r*`.
pub fn greedy_partition_state(scn: &Scenario, opts: &GreedyOptions) -> Result<PartitionState> {
    let loads: Vec<(f64, f64)> = (0..scn.num_ues()).map(|k| (scn.gain(k), scn.power(k))).collect();
    let r_star = r_star_for(&loads, scn.subchannels(), scn.noise_power(), 0.0);
    let beta = beta_weights(scn, r_star);
    let mut state = greedy_fragments(&fragments(scn, &beta), scn.subchannels())?;
    if opts.rebalance {
        state.rebalance();
    }
    Ok(state)
}

/// Sparse spreading matrix with every column holding exactly `d_k` entries
/// of `P_k / d_k`, placed so that the weighted sub-channel loads are as even
/// as the greedy heuristic gets them.
pub fn greedy_partition(scn: &Scenario) -> Result<SpreadingMatrix> {
    greedy_partition_with(scn, &GreedyOptions::default())
}

pub fn greedy_partition_with(scn: &Scenario, opts: &GreedyOptions) -> Result<SpreadingMatrix> {
    let budget = (0..scn.num_ues()).map(|k| scn.sparsity(k)).collect();
    greedy_partition_state(scn, opts)?
        .into_assignment()
        .with_sparsity(budget)
}

/// `v[f,k] = P_k / F` everywhere.
pub fn dense_spreading(scn: &Scenario) -> SpreadingMatrix {
    let f = scn.subchannels();
    let columns: Vec<Vec<f64>> = (0..scn.num_ues())
        .map(|k| vec![scn.power(k) / f as f64; f])
        .collect();
    SpreadingMatrix::from_columns(f, &columns).expect("budgets are positive")
}

/// Round-robin regular spreading: the `K d` (UE, slot) pairs, UE-major, go
/// to sub-channel `i mod F`. Each sub-channel then hosts exactly `d K / F`
/// UEs, and a UE's `d <= F` consecutive slots never repeat a sub-channel.
pub fn regular_spreading(scn: &Scenario) -> Result<SpreadingMatrix> {
    let f = scn.subchannels();
    let k = scn.num_ues();
    let d = scn.sparsity(0);
    if (0..k).any(|j| scn.sparsity(j) != d) {
        return Err(Error::NotRegular("the same sparsity for every UE".into()));
    }
    if !(d * k).is_multiple_of(f) {
        return Err(Error::NotRegular(format!(
            "d K divisible by F (d = {d}, K = {k}, F = {f})"
        )));
    }
    let mut v = SpreadingMatrix::zeros(f, k);
    for ue in 0..k {
        let p = scn.power(ue) / d as f64;
        for slot in 0..d {
            v.set((ue * d + slot) % f, ue, p)?;
        }
    }
    v.with_sparsity(vec![d; k])
}

/// Each UE picks `d_k` distinct sub-channels uniformly at random.
pub fn random_spreading(scn: &Scenario, rng: RandomStream) -> SpreadingMatrix {
    let f = scn.subchannels();
    let mut rng = rng.rng();
    let mut v = SpreadingMatrix::zeros(f, scn.num_ues());
    for k in 0..scn.num_ues() {
        let d = scn.sparsity(k);
        let p = scn.power(k) / d as f64;
        for row in index::sample(&mut rng, f, d) {
            v.set(row, k, p).expect("sampled rows are in range");
        }
    }
    let budget = (0..scn.num_ues()).map(|k| scn.sparsity(k)).collect();
    v.with_sparsity(budget).expect("exactly d_k rows per column")
}

/// Spreading schemes compared in experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Greedy,
    Regular,
    Random,
    Dense,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Greedy, Method::Regular, Method::Random, Method::Dense];

    pub fn name(self) -> &'static str {
        match self {
            Method::Greedy => "greedy",
            Method::Regular => "regular",
            Method::Random => "random",
            Method::Dense => "dense",
        }
    }

    /// `rng` is only consumed by [`Method::Random`].
    pub fn build(self, scn: &Scenario, rng: RandomStream) -> Result<SpreadingMatrix> {
        match self {
            Method::Greedy => greedy_partition(scn),
            Method::Regular => regular_spreading(scn),
            Method::Random => Ok(random_spreading(scn, rng)),
            Method::Dense => Ok(dense_spreading(scn)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?} (expected greedy, regular, random or dense)"
                ))
            })
    }
}
