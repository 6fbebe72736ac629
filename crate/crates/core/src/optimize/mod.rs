//! Throughput maximisation over the transmission probability and sum-rate
//! maximisation over the SINR threshold.

mod capacity;
mod search;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hol::p_saturated;
use crate::receivers::{check_channel, success_curve, Receiver, ReceiverModel, SuccessCurve};
use crate::specfun::{lambert_w0, log_binomial, CompensatedSum};

pub use capacity::ergodic_sum_capacity;
use search::{bisect, maximize_log};

/// Lower end of every threshold search.
pub const MU_SEARCH_MIN: f64 = 1e-3;
/// Upper end of threshold searches before scaling with `rho`.
pub const MU_SEARCH_MAX: f64 = 1e4;
/// Relative tolerance on optimal thresholds.
pub const MU_REL_TOL: f64 = 1e-8;
const PRESCAN_POINTS: usize = 200;

/// Which side of the threshold `mu_0` the optimum sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `mu >= mu_0`: interior optimal transmission probability.
    High,
    /// `mu < mu_0`: every node transmits every slot.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub receiver: ReceiverModel,
    pub n: usize,
    pub rho: f64,
    pub mu_star: f64,
    pub q0_star: f64,
    /// Maximum throughput in packets per slot.
    pub lambda_max: f64,
    /// `lambda_max * log2(1 + mu_star)` in bits/s/Hz.
    pub sum_rate: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDiagnostics {
    /// Threshold below which throughput peaks at `q0 = 1`. `None` when the
    /// optimum is interior for every threshold, as for the collision model.
    pub mu_0: Option<f64>,
    /// SNR at which the two branch optima cross; only computed on request.
    pub rho_0: Option<f64>,
}

/// Throughput `n q0 p` in packets per slot.
pub fn throughput(n: usize, q0: f64, curve: &SuccessCurve) -> Result<f64> {
    Ok(n as f64 * q0 * p_saturated(n, q0, curve)?.value())
}

/// Derivative of [`throughput`] with respect to `q0`, on the closed interval
/// `[0, 1]`.
pub fn throughput_derivative(n: usize, q0: f64, curve: &SuccessCurve) -> Result<f64> {
    if n == 0 || curve.len() != n {
        return Err(Error::domain(format!(
            "curve has {} entries, network has {n} nodes",
            curve.len()
        )));
    }
    if !(0.0..=1.0).contains(&q0) {
        return Err(Error::domain(format!("q0 = {q0} not in [0, 1]")));
    }
    let nf = n as f64;
    let (ln_q, ln_rest) = (q0.ln(), (-q0).ln_1p());
    let pow = |ln: f64, k: usize| if k == 0 { 0.0 } else { k as f64 * ln };
    let mut acc = CompensatedSum::new();
    for (i, r) in curve.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let ln_c = log_binomial(n as u64 - 1, i as u64)?;
        let term = if i == n - 1 {
            // (1 + i - n q) / (1 - q) = n for the last term
            nf * (ln_c + pow(ln_q, i)).exp()
        } else {
            (1.0 + i as f64 - nf * q0) * (ln_c + pow(ln_q, i) + pow(ln_rest, n - 2 - i)).exp()
        };
        acc.add(r * term);
    }
    Ok(nf * acc.value())
}

fn residual(n: usize, mu: f64, rho: f64, receiver: &dyn Receiver) -> Result<f64> {
    receiver.check_analytic_range(n, mu)?;
    let last = receiver.success_probability(n - 1, mu, rho)?.value();
    let prev = receiver.success_probability(n - 2, mu, rho)?.value();
    Ok(n as f64 * last - (n - 1) as f64 * prev)
}

/// Threshold `mu_0` where `n r_{n-1} = (n-1) r_{n-2}`, i.e. where the
/// throughput slope at `q0 = 1` changes sign.
pub fn mu_zero(n: usize, rho: f64, receiver: &dyn Receiver) -> Result<ThresholdDiagnostics> {
    if n < 2 {
        return Err(Error::domain("mu_0 needs n >= 2"));
    }
    check_channel(1.0, rho)?;
    let g = |mu: f64| residual(n, mu, rho, receiver);
    let (mut lo, mut hi) = (1e-4, 10.0);
    // Below every root the residual is positive; a receiver that never
    // gains from full contention has no threshold.
    let mut g_lo = g(lo)?;
    while g_lo <= 0.0 && lo > 1e-12 {
        lo *= 0.1;
        g_lo = g(lo)?;
    }
    if g_lo <= 0.0 {
        return Ok(ThresholdDiagnostics::default());
    }
    while g(hi)? > 0.0 {
        hi *= 10.0;
        if hi > 1e12 {
            return Err(Error::BracketFailure { what: "mu_0", lo, hi });
        }
    }
    let mu_0 = bisect(g, lo, hi, 1e-15, 1e-12, true, "mu_0")?;
    Ok(ThresholdDiagnostics {
        mu_0: Some(mu_0),
        rho_0: None,
    })
}

/// Maximum throughput over `q0` for a prebuilt curve, with the maximiser.
pub fn lambda_max_for_curve(n: usize, curve: &SuccessCurve) -> Result<(f64, f64)> {
    if n == 1 {
        return Ok((curve.get(0), 1.0));
    }
    // A non-positive slope at q0 = 1 is the same test as mu >= mu_0.
    let slope_at_one = throughput_derivative(n, 1.0, curve)?;
    if slope_at_one > 0.0 {
        return Ok((n as f64 * curve.get(n - 1), 1.0));
    }
    let mut hi = 1.0;
    if slope_at_one == 0.0 {
        // Flat at q0 = 1 (e.g. no receiver success with n - 1 interferers):
        // take the largest 1 - 2^-k where the slope is strictly negative.
        let flat_until = (1..=60)
            .rev()
            .map(|k| 1.0 - 0.5f64.powi(k))
            .map(|q| Ok((q, throughput_derivative(n, q, curve)?)))
            .collect::<Result<Vec<_>>>()?;
        match flat_until.into_iter().find(|&(_, d)| d < 0.0) {
            Some((q, _)) => hi = q,
            None => return Ok((n as f64 * curve.get(n - 1), 1.0)),
        }
    }
    let q = bisect(
        |q| throughput_derivative(n, q, curve),
        f64::MIN_POSITIVE,
        hi,
        1e-15,
        0.0,
        false,
        "optimal q0",
    )?;
    Ok((throughput(n, q, curve)?, q))
}

/// Maximum throughput over `q0` at threshold `mu`: `(lambda_max, q0_star)`.
pub fn lambda_max(n: usize, rho: f64, mu: f64, receiver: &dyn Receiver) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::domain("lambda_max needs n >= 2"));
    }
    let curve = success_curve(n, mu, rho, receiver)?;
    lambda_max_for_curve(n, &curve)
}

/// `lambda_max(mu) * log2(1 + mu)`.
pub fn sum_rate(n: usize, rho: f64, mu: f64, receiver: &dyn Receiver) -> Result<f64> {
    Ok(lambda_max(n, rho, mu, receiver)?.0 * mu.ln_1p() / LN_2)
}

/// Outer threshold bracket for a given SNR. The optimum grows roughly like
/// `rho / ln rho`, so the top end scales with `rho`.
pub fn mu_search_range(rho: f64) -> (f64, f64) {
    (MU_SEARCH_MIN, MU_SEARCH_MAX.max(10.0 * rho))
}

#[derive(Debug, Clone, Copy)]
struct BranchOptimum {
    mu: f64,
    rate: f64,
}

fn branch_optima(
    n: usize,
    rho: f64,
    receiver: &dyn Receiver,
    mu_0: Option<f64>,
) -> Result<(Option<BranchOptimum>, Option<BranchOptimum>)> {
    let (lo, hi) = mu_search_range(rho);
    let solve = |a: f64, b: f64| -> Result<BranchOptimum> {
        let peak = maximize_log(|mu| sum_rate(n, rho, mu, receiver), a, b, PRESCAN_POINTS, MU_REL_TOL)?;
        Ok(BranchOptimum {
            mu: peak.x,
            rate: peak.value,
        })
    };
    match mu_0 {
        None => Ok((Some(solve(lo, hi)?), None)),
        Some(m0) => {
            let high = (m0 < hi).then(|| solve(m0.max(lo), hi)).transpose()?;
            // The low branch is open at mu_0; stay a hair below it.
            let top = (m0 * (1.0 - 1e-12)).min(hi);
            let low = (top > lo).then(|| solve(lo, top)).transpose()?;
            Ok((high, low))
        }
    }
}

fn operating_point(n: usize, rho: f64, receiver: &dyn Receiver, mu: f64, branch: Branch) -> Result<OperatingPoint> {
    let (lambda, q0) = lambda_max(n, rho, mu, receiver)?;
    Ok(OperatingPoint {
        receiver: receiver.model(),
        n,
        rho,
        mu_star: mu,
        q0_star: q0,
        lambda_max: lambda,
        sum_rate: lambda * mu.ln_1p() / LN_2,
        branch,
    })
}

/// Maximum sum rate over the threshold and transmission probability.
pub fn sum_rate_max(n: usize, rho: f64, receiver: &dyn Receiver) -> Result<(OperatingPoint, ThresholdDiagnostics)> {
    let diag = mu_zero(n, rho, receiver)?;
    let (high, low) = branch_optima(n, rho, receiver, diag.mu_0)?;
    let (best, branch) = match (high, low) {
        (Some(h), Some(l)) if l.rate > h.rate => (l, Branch::Low),
        (Some(h), _) => (h, Branch::High),
        (None, Some(l)) => (l, Branch::Low),
        (None, None) => {
            return Err(Error::BracketFailure {
                what: "sum-rate optimum",
                lo: 0.0,
                hi: 0.0,
            })
        }
    };
    Ok((operating_point(n, rho, receiver, best.mu, branch)?, diag))
}

/// Like [`sum_rate_max`], also locating the crossover SNR `rho_0`.
pub fn sum_rate_max_full(
    n: usize,
    rho: f64,
    receiver: &dyn Receiver,
) -> Result<(OperatingPoint, ThresholdDiagnostics)> {
    let (op, mut diag) = sum_rate_max(n, rho, receiver)?;
    if diag.mu_0.is_some() {
        diag.rho_0 = Some(rho_zero(n, receiver)?);
    }
    Ok((op, diag))
}

/// Difference between the best high-branch and best low-branch sum rates.
pub fn branch_gap(n: usize, rho: f64, receiver: &dyn Receiver) -> Result<f64> {
    let diag = mu_zero(n, rho, receiver)?;
    match branch_optima(n, rho, receiver, diag.mu_0)? {
        (Some(h), Some(l)) => Ok(h.rate - l.rate),
        _ => Err(Error::BracketFailure {
            what: "branch gap",
            lo: rho,
            hi: rho,
        }),
    }
}

/// SNR above which the interior-`q0` branch gives the larger sum rate.
pub fn rho_zero(n: usize, receiver: &dyn Receiver) -> Result<f64> {
    let gap = |rho: f64| branch_gap(n, rho, receiver);
    let (mut lo, mut hi) = (0.1, 10.0);
    while gap(lo)? > 0.0 {
        lo *= 0.1;
        if lo < 1e-6 {
            return Err(Error::BracketFailure { what: "rho_0", lo, hi });
        }
    }
    while gap(hi)? < 0.0 {
        hi *= 10.0;
        if hi > 1e8 {
            return Err(Error::BracketFailure { what: "rho_0", lo, hi });
        }
    }
    bisect(gap, lo, hi, 1e-10, 1e-9, true, "rho_0")
}

/// Closed-form optimum of the collision receiver as `n` grows:
/// `mu* = e^{W(rho)} - 1`, `q0* = 1/n`.
pub fn collision_optimum(n: usize, rho: f64) -> Result<OperatingPoint> {
    if n == 0 {
        return Err(Error::domain("collision optimum needs n >= 1"));
    }
    check_channel(1.0, rho)?;
    let w = lambert_w0(rho)?;
    let mu = w.exp_m1();
    let lambda = (-1.0 - mu / rho).exp();
    Ok(OperatingPoint {
        receiver: ReceiverModel::Collision,
        n,
        rho,
        mu_star: mu,
        q0_star: 1.0 / n as f64,
        lambda_max: lambda,
        sum_rate: lambda * w / LN_2,
        branch: Branch::High,
    })
}

#[cfg(test)]
mod tests;
