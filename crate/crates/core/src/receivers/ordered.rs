use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::receivers::{check_channel, Receiver, ReceiverModel};
use crate::rng::OrderStream;
use crate::sim::SlotOutcome;
use crate::specfun::{binomial, log_binomial, upper_gamma_ladder, CompensatedSum, Probability};

/// Largest `n` for which the ordered-SIC curve is built analytically when
/// `mu < 1`. Above it the alternating sums are unreliable in double precision.
pub const DEFAULT_ORDERED_CEILING: usize = 25;

/// Estimated absolute error above which a layer probability is refused.
pub const PRECISION_LIMIT: f64 = 1e-6;

// Distance from an integer at which 1/mu is treated as that integer.
const SEAM_TOLERANCE: f64 = 1e-12;

// Rounding error of the alternating sum, in units of eps * sum(|terms|).
// Checked against 50-digit evaluations for n <= 40 over mu in [1e-3, 2] and
// rho in [0.1, 1e6]; 8 never under-estimated.
const ERROR_SCALE: f64 = 8.0;
const ERROR_FLOOR: f64 = 1e-14;

/// Probability that the packet decoded at iteration `l` of ordered SIC
/// clears the threshold, given `i + 1` packets in the slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeLayerProb {
    pub i: usize,
    pub l: usize,
    pub value: Probability,
    /// Estimated absolute rounding error of `value`.
    pub abs_error: f64,
}

fn inverse_threshold(mu: f64) -> f64 {
    let a = 1.0 / mu;
    let nearest = a.round();
    if nearest >= 1.0 && (a - nearest).abs() <= SEAM_TOLERANCE {
        nearest
    } else {
        a
    }
}

// `(l + k) * C(i+1, l) * ... ` style coefficients multiply very large and very
// small factors; fall back to logs only when the product overflows.
fn signed_term(coef: f64, ln_coef: impl Fn() -> f64, rest: f64, k: usize) -> f64 {
    let mag = if coef.is_finite() {
        coef * rest
    } else {
        (ln_coef() + rest.ln()).exp()
    };
    if k.is_multiple_of(2) {
        mag
    } else {
        -mag
    }
}

/// Raw layer probability and its error estimate.
fn layer(i: usize, l: usize, mu: f64, rho: f64, ladder: &mut Vec<f64>) -> (f64, f64) {
    let n = i + 1;
    let m = n - l;
    let a = inverse_threshold(mu);
    let lf = l as f64;
    // (i+1)! / ((i+1-l)! (l-1)!) = l * C(i+1, l)
    let pre = lf * binomial(n as u64, l as u64);
    let ln_pre = || lf.ln() + log_binomial(n as u64, l as u64).unwrap_or(f64::INFINITY);
    let mut acc = CompensatedSum::new();

    if lf <= n as f64 - a {
        // Only the k < 1/mu terms survive the indicator in the integrand.
        let kmax = (a.ceil() as usize - 1).min(m);
        for k in 0..=kmax {
            let kf = k as f64;
            let decay = (-(lf + kf) / (rho * (a - kf))).exp();
            let ratio = (a - kf) / (a + lf);
            let rest = decay * ratio.powi(m as i32) / (kf + lf);
            let coef = pre * binomial(m as u64, k as u64);
            let ln_coef = || ln_pre() + log_binomial(m as u64, k as u64).unwrap_or(0.0);
            acc.add(signed_term(coef, ln_coef, rest, k));
        }
    } else {
        // The incomplete-gamma terms in (i+1)/(rho (1/mu - m)) are a
        // polynomial of degree < m in k and vanish under the m-th
        // difference, so only the terms in k remain. Writing
        // 1/(k+l) - sum_s w_s P(1+s, t) as r^m/(k+l) + sum_s w_s Q(1+s, t)
        // keeps every bracket positive.
        for k in 0..=m {
            let kf = k as f64;
            let decay = (-(lf + kf) / (rho * (a - kf))).exp();
            let ratio = (a - kf) / (a + lf);
            let t = (m - k) as f64 * (a + lf) / (rho * (a - m as f64) * (a - kf));
            let mut bracket = ratio.powi(m as i32) / (kf + lf);
            if m > 0 {
                upper_gamma_ladder(m - 1, t, ladder);
                let mut weight = 1.0 / (a + lf);
                for q in ladder.iter() {
                    bracket += weight * q;
                    weight *= ratio;
                }
            }
            let coef = pre * binomial(m as u64, k as u64);
            let ln_coef = || ln_pre() + log_binomial(m as u64, k as u64).unwrap_or(0.0);
            acc.add(signed_term(coef, ln_coef, decay * bracket, k));
        }
    }
    let err = ERROR_SCALE * f64::EPSILON * acc.magnitude() + ERROR_FLOOR;
    (acc.value(), err)
}

fn check_layer(i: usize, l: usize) -> Result<()> {
    if l == 0 || l > i + 1 {
        return Err(Error::domain(format!("layer l = {l} outside 1..={}", i + 1)));
    }
    Ok(())
}

fn finish_layer(i: usize, l: usize, value: f64, abs_error: f64) -> Result<DecodeLayerProb> {
    if abs_error.is_nan() || abs_error > PRECISION_LIMIT || !value.is_finite() {
        return Err(Error::PrecisionLoss { i, l, value, abs_error });
    }
    Ok(DecodeLayerProb {
        i,
        l,
        value: Probability::with_slack(value, abs_error)?,
        abs_error,
    })
}

/// Probability that the `l`-th strongest of `i + 1` i.i.d. unit-mean
/// exponential powers (scaled by `rho`, unit noise) has SINR at least `mu`
/// against the weaker ones.
pub fn y_ordered(i: usize, l: usize, mu: f64, rho: f64) -> Result<DecodeLayerProb> {
    check_channel(mu, rho)?;
    check_layer(i, l)?;
    let (value, err) = layer(i, l, mu, rho, &mut Vec::new());
    finish_layer(i, l, value, err)
}

/// Single-term form of [`y_ordered`], valid for `mu >= 1`.
pub fn y_ordered_closed_form(i: usize, l: usize, mu: f64, rho: f64) -> Result<Probability> {
    check_channel(mu, rho)?;
    check_layer(i, l)?;
    if mu < 1.0 {
        return Err(Error::domain(format!("closed form needs mu >= 1, got {mu}")));
    }
    let m = (i + 1 - l) as f64;
    let lf = l as f64;
    let ln = log_binomial(i as u64 + 1, l as u64)? - lf * mu / rho - m * (lf * mu).ln_1p();
    Probability::new(ln.exp())
}

fn ordered_with(i: usize, mu: f64, rho: f64, ladder: &mut Vec<f64>) -> Result<Probability> {
    let n = i + 1;
    let mut prefix = 1.0;
    let mut total = 0.0;
    for l in 1..=n {
        let (value, err) = layer(i, l, mu, rho, ladder);
        let y = finish_layer(i, l, value, err)?.value.value();
        prefix *= y;
        if prefix == 0.0 {
            break;
        }
        total += prefix;
    }
    Probability::new(total / n as f64)
}

/// Ordered-SIC `r_i`: the mean, over decode depths `m`, of the product of the
/// first `m` layer probabilities.
pub fn r_ordered(i: usize, mu: f64, rho: f64) -> Result<Probability> {
    check_channel(mu, rho)?;
    ordered_with(i, mu, rho, &mut Vec::new())
}

#[derive(Debug, Clone, Copy)]
pub struct OrderedSic {
    pub ceiling: usize,
}

impl Default for OrderedSic {
    fn default() -> Self {
        OrderedSic {
            ceiling: DEFAULT_ORDERED_CEILING,
        }
    }
}

impl Receiver for OrderedSic {
    fn model(&self) -> ReceiverModel {
        ReceiverModel::OrderedSic
    }

    fn success_probability(&self, i: usize, mu: f64, rho: f64) -> Result<Probability> {
        r_ordered(i, mu, rho)
    }

    fn check_analytic_range(&self, n: usize, mu: f64) -> Result<()> {
        if n > self.ceiling && mu < 1.0 {
            return Err(Error::AnalyticRange {
                receiver: "ordered-sic",
                n,
                ceiling: self.ceiling,
                mu,
            });
        }
        Ok(())
    }

    fn curve_values(&self, n: usize, mu: f64, rho: f64) -> Result<Vec<Probability>> {
        check_channel(mu, rho)?;
        let mut ladder = Vec::new();
        (0..n).map(|i| ordered_with(i, mu, rho, &mut ladder)).collect()
    }

    fn decode(&self, powers: &[f64], noise: f64, mu: f64, _: &mut OrderStream, out: &mut SlotOutcome) {
        out.reset(powers.len());
        let (mut order, mut tail) = out.take_buffers();
        order.extend(0..powers.len());
        order.sort_by(|&x, &y| powers[y].total_cmp(&powers[x]).then(x.cmp(&y)));
        // tail[j] = sum of the powers weaker than the j-th strongest
        tail.resize(powers.len() + 1, 0.0);
        for j in (0..powers.len()).rev() {
            tail[j] = tail[j + 1] + powers[order[j]];
        }
        for (j, &idx) in order.iter().enumerate() {
            if powers[idx] >= mu * (tail[j + 1] + noise) {
                out.mark(idx);
            } else {
                break;
            }
        }
        out.restore_buffers(order, tail);
    }
}
