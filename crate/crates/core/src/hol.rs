//! Head-of-line packet chain and the saturated-network success probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::receivers::SuccessCurve;
use crate::specfun::{log_binomial, CompensatedSum, Probability};

/// Network parameters on a linear scale. `q[j]` is the transmission
/// probability in backoff phase `j`; the last phase is the cutoff `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n: usize,
    pub rho: f64,
    pub mu: f64,
    pub q: Vec<f64>,
}

impl NetworkConfig {
    pub fn new(n: usize, rho: f64, mu: f64, q: Vec<f64>) -> Result<Self> {
        let cfg = NetworkConfig { n, rho, mu, q };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every phase transmits with `q0`; the cutoff is irrelevant then.
    pub fn uniform(n: usize, rho: f64, mu: f64, q0: f64) -> Result<Self> {
        Self::new(n, rho, mu, vec![q0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.rho.is_nan() || self.rho <= 0.0 {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {}", self.mu)));
        }
        if self.q.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one transmission probability".into(),
            ));
        }
        if let Some(bad) = self.q.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "transmission probability {bad} not in (0, 1]"
            )));
        }
        Ok(())
    }

    /// Cutoff phase `K`.
    pub fn cutoff(&self) -> usize {
        self.q.len() - 1
    }

    /// `q0` when all phases share it.
    pub fn uniform_q0(&self) -> Result<f64> {
        let q0 = self.q[0];
        if self.q.iter().any(|&q| q != q0) {
            return Err(Error::InvalidConfig(
                "this analysis needs the same transmission probability in every phase".into(),
            ));
        }
        Ok(q0)
    }
}

/// Stationary law of one node's HOL chain: the service state `T` plus the
/// backoff phases `0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolStationary {
    pub pi_t: Probability,
    pub pi: Vec<Probability>,
    pub p: Probability,
}

impl HolStationary {
    pub fn total(&self) -> f64 {
        self.pi_t.value() + self.pi.iter().map(|x| x.value()).sum::<f64>()
    }
}

/// Stationary distribution for per-attempt success probability `p` and
/// per-phase transmission probabilities `q` (length `k + 1`).
pub fn stationary_distribution(p: Probability, q: &[f64], k: usize) -> Result<HolStationary> {
    let pv = p.value();
    if pv == 0.0 {
        return Err(Error::DegenerateChain);
    }
    if q.len() != k + 1 {
        return Err(Error::domain(format!(
            "expected {} phase probabilities, got {}",
            k + 1,
            q.len()
        )));
    }
    if let Some(bad) = q.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::domain(format!("transmission probability {bad} not in (0, 1]")));
    }
    let fail = 1.0 - pv;
    // Unnormalised weights relative to pi_T.
    let mut weights = Vec::with_capacity(k + 1);
    if k == 0 {
        weights.push((1.0 - pv * q[0]) / (pv * q[0]));
    } else {
        weights.push((1.0 - q[0]) / q[0]);
        for (j, &qj) in q.iter().enumerate().take(k).skip(1) {
            weights.push(fail.powi(j as i32) / qj);
        }
        weights.push(fail.powi(k as i32) / (pv * q[k]));
    }
    let mut denom = CompensatedSum::new();
    for (j, &qj) in q.iter().enumerate().take(k) {
        denom.add(fail.powi(j as i32) / qj);
    }
    denom.add(fail.powi(k as i32) / (pv * q[k]));
    let pi_t = 1.0 / denom.value();
    Ok(HolStationary {
        pi_t: Probability::new(pi_t)?,
        pi: weights
            .into_iter()
            .map(|w| Probability::new(w * pi_t))
            .collect::<Result<_>>()?,
        p,
    })
}

#[inline]
fn ln_pow(base_ln: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * base_ln
    }
}

/// `sum_i C(n-1, i) r_i (1-x)^{n-1-i} x^i`: the success probability of a
/// tagged packet when each of the other `n - 1` nodes transmits with
/// probability `x`. Terms are formed in log space.
pub(crate) fn binomial_mixture(n: usize, x: f64, curve: &SuccessCurve) -> f64 {
    let others = n - 1;
    let (ln_x, ln_y) = (x.ln(), (-x).ln_1p());
    let mut acc = CompensatedSum::new();
    for (i, r) in curve.iter().enumerate().take(n) {
        if r == 0.0 {
            continue;
        }
        let ln_w = log_binomial(others as u64, i as u64).unwrap_or(f64::NEG_INFINITY)
            + ln_pow(ln_y, others - i)
            + ln_pow(ln_x, i);
        acc.add(r * ln_w.exp());
    }
    acc.value()
}

fn check_curve(n: usize, curve: &SuccessCurve) -> Result<()> {
    if n == 0 || curve.len() != n {
        return Err(Error::domain(format!(
            "curve has {} entries, network has {n} nodes",
            curve.len()
        )));
    }
    Ok(())
}

/// Steady-state per-attempt success probability with every node using
/// transmission probability `q0`.
pub fn p_saturated(n: usize, q0: f64, curve: &SuccessCurve) -> Result<Probability> {
    check_curve(n, curve)?;
    if !(q0 > 0.0 && q0 <= 1.0) {
        return Err(Error::domain(format!("q0 = {q0} not in (0, 1]")));
    }
    Probability::new(binomial_mixture(n, q0, curve))
}

/// Right-hand side of the fixed-point equation for `p`: the success
/// probability seen by a node when every node transmits with probability
/// `pi_t / p`.
pub fn fixed_point_rhs(n: usize, pi_t: f64, p: f64, curve: &SuccessCurve) -> Result<f64> {
    check_curve(n, curve)?;
    if p.is_nan() || p <= 0.0 {
        return Err(Error::DegenerateChain);
    }
    let tau = pi_t / p;
    if !(0.0..=1.0 + 1e-12).contains(&tau) {
        return Err(Error::domain(format!("transmission rate pi_T/p = {tau} not in [0, 1]")));
    }
    Ok(binomial_mixture(n, tau.min(1.0), curve))
}
