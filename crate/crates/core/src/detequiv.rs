//! Deterministic equivalent of the ergodic mutual information.
//!
//! For a spreading matrix `V` write `c[f,k] = a²_k v[f,k] / σ²`. The large
//! system approximation is built from the solution of the coupled fixed point
//!
//! ```text
//! r_f  = 1 / (1 + Σ_k c[f,k] r̃_k)
//! r̃_k = 1 / (1 + Σ_f c[f,k] r_f)
//! ```
//!
//! and any power-constrained maximiser has `r_f = r*` on every sub-channel,
//! with `r*` a scalar that does not depend on `V` at all. The
//! [`OptimalityCertificate`] measures how far a given `V` is from that
//! condition.

use crate::model::{Scenario, SpreadingMatrix};
use crate::{Error, Result};

/// Iteration controls for [`solve_fixed_point`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Absolute bound on the largest update in the final sweep.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight kept on the previous iterate, in `[0, 1)`. Zero is the plain
    /// alternating map.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            damping: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointSolution {
    pub r: Vec<f64>,
    pub r_tilde: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
}

/// Nonzero couplings `(f, k, c[f,k])`.
fn couplings(scn: &Scenario, v: &SpreadingMatrix) -> Vec<(usize, usize, f64)> {
    let sigma2 = scn.noise_power();
    v.nonzeros()
        .map(|(f, k, p)| (f, k, scn.gain(k) * p / sigma2))
        .collect()
}

/// Alternating (Gauss-Seidel) iteration started from `r̃ = 1`.
pub fn solve_fixed_point(
    scn: &Scenario,
    v: &SpreadingMatrix,
    opts: &SolverOptions,
) -> Result<FixedPointSolution> {
    v.check_conforms(scn)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::Config(format!("damping must lie in [0, 1), got {}", opts.damping)));
    }
    let c = couplings(scn, v);
    let (nf, nk) = (v.rows(), v.cols());
    let mut r = vec![1.0; nf];
    let mut r_tilde = vec![1.0; nk];
    let mut acc_f = vec![0.0; nf];
    let mut acc_k = vec![0.0; nk];
    let keep = opts.damping;

    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        acc_f.fill(0.0);
        for &(f, k, cfk) in &c {
            acc_f[f] += cfk * r_tilde[k];
        }
        let mut delta: f64 = 0.0;
        for (rf, &s) in r.iter_mut().zip(&acc_f) {
            let next = keep * *rf + (1.0 - keep) / (1.0 + s);
            delta = delta.max((next - *rf).abs());
            *rf = next;
        }

        acc_k.fill(0.0);
        for &(f, k, cfk) in &c {
            acc_k[k] += cfk * r[f];
        }
        for (rk, &s) in r_tilde.iter_mut().zip(&acc_k) {
            let next = keep * *rk + (1.0 - keep) / (1.0 + s);
            delta = delta.max((next - *rk).abs());
            *rk = next;
        }

        residual = delta;
        if delta < opts.tol {
            return Ok(FixedPointSolution {
                r,
                r_tilde,
                iterations: iter,
                final_residual: delta,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Deterministic EMI in nats per sub-channel use, evaluated at a solved
/// fixed point.
pub fn det_emi(scn: &Scenario, v: &SpreadingMatrix, fp: &FixedPointSolution) -> Result<f64> {
    v.check_conforms(scn)?;
    if fp.r.len() != v.rows() || fp.r_tilde.len() != v.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("fixed point of size ({}, {})", v.rows(), v.cols()),
            actual: format!("({}, {})", fp.r.len(), fp.r_tilde.len()),
        });
    }
    let c = couplings(scn, v);
    let mut per_ue = vec![0.0; v.cols()];
    let mut per_sub = vec![0.0; v.rows()];
    let mut cross = 0.0;
    for &(f, k, cfk) in &c {
        per_ue[k] += cfk * fp.r[f];
        per_sub[f] += cfk * fp.r_tilde[k];
        cross += cfk * fp.r[f] * fp.r_tilde[k];
    }
    let logs: f64 = per_ue.iter().chain(&per_sub).map(|x| x.ln_1p()).sum();
    Ok((logs - cross) / v.rows() as f64)
}

/// Solves the fixed point and evaluates the deterministic EMI in one go.
pub fn det_emi_solved(scn: &Scenario, v: &SpreadingMatrix, opts: &SolverOptions) -> Result<f64> {
    let fp = solve_fixed_point(scn, v, opts)?;
    det_emi(scn, v, &fp)
}

/// Root of `r = (1 + (1/F) Σ_k P_k a²_k / (σ² + P_k a²_k r))^{-1}` on (0, 1].
///
/// `loads` holds `(a²_k, P_k)`. The right-hand side is increasing in `r`, so
/// `g(r) = r - rhs(r)` is negative near zero and nonnegative at one, and
/// bisection brackets the unique root. Stops once the bracket is narrower
/// than `tol * hi` or cannot be split further.
pub fn r_star_for(loads: &[(f64, f64)], subchannels: usize, noise_power: f64, tol: f64) -> f64 {
    let f = subchannels as f64;
    let rhs = |r: f64| {
        let s: f64 = loads
            .iter()
            .map(|&(gain, power)| power * gain / (noise_power + power * gain * r))
            .sum();
        1.0 / (1.0 + s / f)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if 1.0 - rhs(1.0) <= 0.0 {
        return 1.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        if mid - rhs(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn loads(scn: &Scenario) -> Vec<(f64, f64)> {
    (0..scn.num_ues()).map(|k| (scn.gain(k), scn.power(k))).collect()
}

/// Common sub-channel value `r*` attained by every maximiser of the
/// deterministic EMI.
pub fn solve_r_star(scn: &Scenario, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    Ok(r_star_for(&loads(scn), scn.subchannels(), scn.noise_power(), tol))
}

/// UE weights `β_k = a²_k / (σ² + P_k a²_k r*)`.
pub fn beta_weights(scn: &Scenario, r_star: f64) -> Vec<f64> {
    let sigma2 = scn.noise_power();
    (0..scn.num_ues())
        .map(|k| scn.gain(k) / (sigma2 + scn.power(k) * scn.gain(k) * r_star))
        .collect()
}

/// Optimality quantities for a candidate spreading matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityCertificate {
    pub r_star: f64,
    pub r_tilde_star: Vec<f64>,
    pub beta: Vec<f64>,
    /// Weighted sub-channel loads `η_f = Σ_k β_k v[f,k]`.
    pub eta: Vec<f64>,
    /// `η_f - (1/r* - 1)`.
    pub subchannel_residuals: Vec<f64>,
    /// `Σ_f v[f,k] - P_k`.
    pub power_residuals: Vec<f64>,
}

impl OptimalityCertificate {
    /// Balance target `1/r* - 1` shared by every sub-channel.
    pub fn target_load(&self) -> f64 {
        1.0 / self.r_star - 1.0
    }

    pub fn max_subchannel_residual(&self) -> f64 {
        self.subchannel_residuals.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_power_residual(&self) -> f64 {
        self.power_residuals.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest residual relative to its target: sub-channel residuals over
    /// `1/r* - 1`, power residuals over `P_k`.
    pub fn max_relative_residual(&self, scn: &Scenario) -> f64 {
        let target = self.target_load();
        let sub = self.max_subchannel_residual() / target;
        let pow = self
            .power_residuals
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (k, x)| m.max(x.abs() / scn.power(k)));
        sub.max(pow)
    }

    pub fn eta_max(&self) -> f64 {
        self.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn eta_min(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximal deterministic EMI, which only depends on `r*` and `r̃*`:
    /// `-(1/F) Σ_k ln r̃*_k - ln r* - (r* / (σ² F)) Σ_k P_k a²_k r̃*_k`.
    pub fn optimal_det_emi(&self, scn: &Scenario) -> f64 {
        let f = scn.subchannels() as f64;
        let sigma2 = scn.noise_power();
        let log_sum: f64 = self.r_tilde_star.iter().map(|x| x.ln()).sum();
        let weighted: f64 = self
            .r_tilde_star
            .iter()
            .enumerate()
            .map(|(k, rt)| scn.power(k) * scn.gain(k) * rt)
            .sum();
        -log_sum / f - self.r_star.ln() - self.r_star * weighted / (sigma2 * f)
    }
}

/// Evaluates the optimality conditions for `v`: full power on every UE and
/// equal weighted load `1/r* - 1` on every sub-channel. `r*` is resolved to
/// the last representable bit whatever `tol` says, since the sub-channel
/// target `1/r* - 1` amplifies its error by `1/r*²`.
pub fn certificate(scn: &Scenario, v: &SpreadingMatrix, tol: f64) -> Result<OptimalityCertificate> {
    v.check_conforms(scn)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let r_star = r_star_for(&loads(scn), scn.subchannels(), scn.noise_power(), 0.0);
    let sigma2 = scn.noise_power();
    let r_tilde_star = (0..scn.num_ues())
        .map(|k| sigma2 / (sigma2 + scn.power(k) * scn.gain(k) * r_star))
        .collect();
    let beta = beta_weights(scn, r_star);
    let mut eta = vec![0.0; scn.subchannels()];
    for (f, k, p) in v.nonzeros() {
        eta[f] += beta[k] * p;
    }
    let target = 1.0 / r_star - 1.0;
    let subchannel_residuals = eta.iter().map(|e| e - target).collect();
    let power_residuals = (0..scn.num_ues())
        .map(|k| v.column_power(k) - scn.power(k))
        .collect();
    Ok(OptimalityCertificate {
        r_star,
        r_tilde_star,
        beta,
        eta,
        subchannel_residuals,
        power_residuals,
    })
}
