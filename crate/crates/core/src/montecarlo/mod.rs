//! Exact ergodic mutual information by simulation.
//!
//! `J(V) = (1/F) E ln det(I + HHᴴ/σ²)` over Rayleigh fading. The Gram matrix
//! is formed on the smaller side, `I_F + HHᴴ/σ²` when `F <= K` and
//! `I_K + HᴴH/σ²` otherwise; both have the same determinant.
//!
//! Trial `t` always draws its fading from substream `t` of the stream it is
//! given, and trial results are reduced with [`ExactSum`], so estimates are
//! bit-identical under any thread count and split into runs.

mod logdet;
mod sum;

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::allocator::random_spreading;
use crate::detequiv::{det_emi_solved, SolverOptions};
use crate::model::{sample_fading, ChannelMatrix, RandomStream, Scenario, SpreadingMatrix};
use crate::{Error, Result};

pub use logdet::{logdet_hermitian, HERMITIAN_TOL};
pub use sum::ExactSum;

/// Stream label for the fading draws of [`epsilon_stats`].
pub const FADING_LABEL: u64 = 0x6661_6469_6e67; // "fading"
/// Stream label for the random matrices of [`epsilon_stats`].
pub const MATRIX_LABEL: u64 = 0x6d61_7472_6978; // "matrix"

/// Sample mean of the per-trial normalised log-det.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    /// Nats per sub-channel use.
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
}

impl MCEstimate {
    fn from_sums(sum: ExactSum, sum_sq: ExactSum, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                mean: 0.0,
                stderr: 0.0,
                trials,
                sum,
                sum_sq,
            };
        }
        let n = trials as f64;
        let mean = sum.value() / n;
        let stderr = if trials > 1 {
            let var = ((sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            trials,
            sum,
            sum_sq,
        }
    }

    fn from_values(values: &[f64]) -> Self {
        let (mut s, mut s2) = (ExactSum::default(), ExactSum::default());
        for &x in values {
            s.add(x);
            s2.add(x * x);
        }
        Self::from_sums(s, s2, values.len() as u64)
    }

    /// Estimate over the union of two disjoint trial sets.
    pub fn pool(&self, other: &Self) -> Self {
        Self::from_sums(
            self.sum.merge(other.sum),
            self.sum_sq.merge(other.sum_sq),
            self.trials + other.trials,
        )
    }
}

/// Per-matrix precomputation for fast trials: the Gram side, and for every
/// group (a UE column when `F <= K`, a sub-channel row otherwise) its
/// nonzero entries as `(gram index, fading index, sqrt(a²_k v[f,k] / σ²))`.
struct GramKernel {
    dim: usize,
    subchannels: usize,
    conjugate: bool,
    groups: Vec<Vec<(usize, usize, f64)>>,
}

impl GramKernel {
    fn new(scn: &Scenario, v: &SpreadingMatrix) -> Result<Self> {
        v.check_conforms(scn)?;
        let (nf, nk) = (v.rows(), v.cols());
        let sigma2 = scn.noise_power();
        let scale = |f: usize, k: usize| (scn.gain(k) * v.get(f, k) / sigma2).sqrt();
        let kernel = if nf <= nk {
            let groups = (0..nk)
                .map(|k| v.support(k).map(|f| (f, k * nf + f, scale(f, k))).collect())
                .collect();
            Self {
                dim: nf,
                subchannels: nf,
                conjugate: false,
                groups,
            }
        } else {
            let groups = (0..nf)
                .map(|f| {
                    (0..nk)
                        .filter(|&k| v.get(f, k) > 0.0)
                        .map(|k| (k, k * nf + f, scale(f, k)))
                        .collect()
                })
                .collect();
            Self {
                dim: nk,
                subchannels: nf,
                conjugate: true,
                groups,
            }
        };
        Ok(kernel)
    }

    /// `(1/F) ln det(I + Gram)` for one fading draw. `work` is scratch space.
    fn normalized_logdet(&self, fading: &ChannelMatrix, work: &mut Vec<Complex64>, x: &mut Vec<(usize, Complex64)>) -> Result<f64> {
        let n = self.dim;
        let g = fading.as_slice();
        work.clear();
        work.resize(n * n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            work[i * n + i] = Complex64::new(1.0, 0.0);
        }
        for group in &self.groups {
            x.clear();
            x.extend(group.iter().map(|&(idx, gi, s)| {
                let h = g[gi] * s;
                (idx, if self.conjugate { h.conj() } else { h })
            }));
            // Entries are sorted by gram index, so (a >= b) fills the lower triangle.
            for (a, &(i, xi)) in x.iter().enumerate() {
                let row = &mut work[i * n..(i + 1) * n];
                for &(j, xj) in &x[..=a] {
                    row[j] += xi * xj.conj();
                }
            }
        }
        Ok(logdet::cholesky_logdet_lower(n, work)? / self.subchannels as f64)
    }
}

type Scratch = (Vec<Complex64>, Vec<(usize, Complex64)>);

thread_local! {
    static SCRATCH: std::cell::RefCell<Scratch> =
        const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
}

fn with_scratch<T>(f: impl FnOnce(&mut Vec<Complex64>, &mut Vec<(usize, Complex64)>) -> T) -> T {
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (work, x) = &mut *guard;
        f(work, x)
    })
}

/// `(1/F) ln det(I + HHᴴ/σ²)` for one channel realisation.
pub fn normalized_logdet(scn: &Scenario, v: &SpreadingMatrix, fading: &ChannelMatrix) -> Result<f64> {
    if fading.rows() != v.rows() || fading.cols() != v.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} fading", v.rows(), v.cols()),
            actual: format!("{}x{}", fading.rows(), fading.cols()),
        });
    }
    let kernel = GramKernel::new(scn, v)?;
    with_scratch(|work, x| kernel.normalized_logdet(fading, work, x))
}

#[derive(Clone, Copy, Default)]
struct Moments {
    sum: ExactSum,
    sum_sq: ExactSum,
    n: u64,
}

impl Moments {
    fn push(mut self, x: f64) -> Self {
        self.sum.add(x);
        self.sum_sq.add(x * x);
        self.n += 1;
        self
    }

    fn merge(self, o: Self) -> Self {
        Self {
            sum: self.sum.merge(o.sum),
            sum_sq: self.sum_sq.merge(o.sum_sq),
            n: self.n + o.n,
        }
    }
}

/// Monte-Carlo EMI over trials `0..trials`.
pub fn mc_emi(scn: &Scenario, v: &SpreadingMatrix, trials: u64, rng: RandomStream) -> Result<MCEstimate> {
    if trials == 0 {
        return Err(Error::Config("need at least one fading trial".into()));
    }
    mc_emi_range(scn, v, 0..trials, rng)
}

/// Monte-Carlo EMI over an arbitrary block of trial indices; trial `t` uses
/// `rng.substream(t)`. Disjoint blocks can be combined with
/// [`MCEstimate::pool`].
pub fn mc_emi_range(
    scn: &Scenario,
    v: &SpreadingMatrix,
    trials: Range<u64>,
    rng: RandomStream,
) -> Result<MCEstimate> {
    let kernel = GramKernel::new(scn, v)?;
    let (nf, nk) = (v.rows(), v.cols());
    let m = trials
        .into_par_iter()
        .map(|t| {
            let fading = sample_fading(nf, nk, rng.substream(t));
            with_scratch(|work, x| kernel.normalized_logdet(&fading, work, x))
                .map(|x| Moments::default().push(x))
        })
        .try_reduce(Moments::default, |a, b| Ok(a.merge(b)))?;
    Ok(MCEstimate::from_sums(m.sum, m.sum_sq, m.n))
}

/// Residual `ε = J - J̄` over random sparse spreading matrices of one
/// sparsity.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonStats {
    pub d: usize,
    /// Mean of ε over matrices, nats.
    pub mean_eps: f64,
    /// Sample variance of ε over matrices.
    pub var_eps: f64,
    /// Standard error of `mean_eps` from the fading noise. Every matrix sees
    /// the same draws, so this is the spread of the per-trial cross-matrix
    /// average, not an independent-errors combination.
    pub mean_stderr: f64,
    /// Mean Monte-Carlo EMI over matrices.
    pub mean_mc: f64,
    /// Mean deterministic EMI over matrices.
    pub mean_det: f64,
    pub samples: usize,
    pub trials_per_matrix: u64,
}

/// Draws `n_matrices` random spreading matrices with sparsity `d` and
/// measures `ε` on each against common fading (trial `t` of every matrix
/// uses the same draw). Matrices come from `rng.substream(MATRIX_LABEL)`,
/// fading from `rng.substream(FADING_LABEL)`, so calls with the same `rng`
/// and different `d` share their fading too.
pub fn epsilon_stats(
    scn: &Scenario,
    d: usize,
    n_matrices: usize,
    trials_per_matrix: u64,
    rng: RandomStream,
) -> Result<EpsilonStats> {
    if n_matrices < 2 {
        return Err(Error::Config("epsilon statistics need at least two matrices".into()));
    }
    if trials_per_matrix < 2 {
        return Err(Error::Config("epsilon statistics need at least two trials".into()));
    }
    let scn_d = scn.with_sparsity(d)?;
    let matrix_root = rng.substream(MATRIX_LABEL);
    let fading_root = rng.substream(FADING_LABEL);
    let opts = SolverOptions::default();

    let matrices: Vec<SpreadingMatrix> = (0..n_matrices as u64)
        .map(|i| random_spreading(&scn_d, matrix_root.substream(i)))
        .collect();
    let dets: Vec<f64> = matrices
        .par_iter()
        .map(|v| det_emi_solved(&scn_d, v, &opts))
        .collect::<Result<_>>()?;
    let kernels: Vec<GramKernel> = matrices
        .iter()
        .map(|v| GramKernel::new(&scn_d, v))
        .collect::<Result<_>>()?;

    let (nf, nk) = (scn.subchannels(), scn.num_ues());
    let per_trial: Vec<Vec<f64>> = (0..trials_per_matrix)
        .into_par_iter()
        .map(|t| {
            let fading = sample_fading(nf, nk, fading_root.substream(t));
            with_scratch(|work, x| {
                kernels
                    .iter()
                    .map(|k| k.normalized_logdet(&fading, work, x))
                    .collect::<Result<Vec<f64>>>()
            })
        })
        .collect::<Result<_>>()?;

    let mut per_matrix = vec![ExactSum::default(); n_matrices];
    let mut cross_matrix = Vec::with_capacity(per_trial.len());
    for row in &per_trial {
        let mut s = ExactSum::default();
        for (acc, &x) in per_matrix.iter_mut().zip(row) {
            acc.add(x);
            s.add(x);
        }
        cross_matrix.push(s.value() / n_matrices as f64);
    }
    let t = trials_per_matrix as f64;
    let mc: Vec<f64> = per_matrix.iter().map(|s| s.value() / t).collect();
    let eps: Vec<f64> = mc.iter().zip(&dets).map(|(j, jb)| j - jb).collect();

    let m = n_matrices as f64;
    let mean_eps = eps.iter().sum::<f64>() / m;
    let var_eps = eps.iter().map(|e| (e - mean_eps).powi(2)).sum::<f64>() / (m - 1.0);
    let mean_stderr = MCEstimate::from_values(&cross_matrix).stderr;
    Ok(EpsilonStats {
        d,
        mean_eps,
        var_eps,
        mean_stderr,
        mean_mc: mc.iter().sum::<f64>() / m,
        mean_det: dets.iter().sum::<f64>() / m,
        samples: n_matrices,
        trials_per_matrix,
    })
}
