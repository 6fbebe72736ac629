//! Special functions used by the closed-form receiver models.
//!
//! Everything here is a pure function of its arguments. The incomplete gamma
//! routines only handle integer shape parameters, which is all the
//! order-statistic formulas need.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this close outside `[0, 1]` are clamped rather than rejected.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        Self::with_slack(value, PROBABILITY_SLACK)
    }

    /// Like [`Probability::new`] but clamps anything within `slack` of the
    /// unit interval. Used where the caller carries its own error estimate.
    pub fn with_slack(value: f64, slack: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain(format!("probability {value} is not finite")));
        }
        let slack = slack.max(PROBABILITY_SLACK);
        if value < -slack || value > 1.0 + slack {
            return Err(Error::domain(format!("probability {value} outside [0, 1]")));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Neumaier-compensated running sum that also tracks the total magnitude of
/// the terms, so callers can bound the cancellation error of the result.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    magnitude: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sum of `|term|` over everything added so far.
    #[inline]
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `ln(e^{-t} t^k / k!)`, the log of a Poisson(t) mass at `k`.
fn ln_poisson_term(k: u64, t: f64) -> f64 {
    if k == 0 {
        -t
    } else {
        -t + k as f64 * t.ln() - ln_factorial(k)
    }
}

/// Regularized upper incomplete gamma `Q(s, t)` for integer `s >= 1`:
/// `Q(s, t) = e^{-t} * sum_{k < s} t^k / k!`.
pub fn regularized_gamma_q(s: u32, t: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::domain("regularized_gamma_q needs s >= 1"));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("regularized_gamma_q needs t >= 0, got {t}")));
    }
    Ok(gamma_q_unchecked(s, t))
}

pub(crate) fn gamma_q_unchecked(s: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    if t < s as f64 {
        return 1.0 - poisson_tail(s, t);
    }
    let mut acc = CompensatedSum::new();
    if t <= 700.0 {
        let mut term = (-t).exp();
        acc.add(term);
        for k in 1..s {
            term *= t / k as f64;
            acc.add(term);
        }
    } else {
        for k in 0..s {
            acc.add(ln_poisson_term(k as u64, t).exp());
        }
    }
    acc.value().clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma `P(s, t) = 1 - Q(s, t)`, computed
/// without forming the difference when `Q` is close to one.
pub fn regularized_gamma_p(s: u32, t: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::domain("regularized_gamma_p needs s >= 1"));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::domain(format!("regularized_gamma_p needs t >= 0, got {t}")));
    }
    Ok(gamma_p_unchecked(s, t))
}

pub(crate) fn gamma_p_unchecked(s: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if t >= s as f64 {
        return 1.0 - gamma_q_unchecked(s, t);
    }
    poisson_tail(s, t)
}

fn poisson_tail(s: u32, t: f64) -> f64 {
    // Tail of the Poisson(t) series from k = s; terms shrink geometrically
    // because t < s.
    let mut term = ln_poisson_term(s as u64, t).exp();
    if term == 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    let mut k = s as f64;
    for _ in 0..10_000 {
        acc.add(term);
        k += 1.0;
        term *= t / k;
        if term <= acc.value() * 1e-18 {
            break;
        }
    }
    acc.value().clamp(0.0, 1.0)
}

/// `Q(1 + s, t)` for `s = 0..=max_s` by accumulating Poisson terms upward.
pub(crate) fn upper_gamma_ladder(max_s: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize(max_s + 1, 1.0);
    if t == 0.0 {
        return;
    }
    let mut acc = CompensatedSum::new();
    if t <= 700.0 {
        let mut term = (-t).exp();
        for (s, slot) in out.iter_mut().enumerate() {
            if s > 0 {
                term *= t / s as f64;
            }
            acc.add(term);
            *slot = acc.value().clamp(0.0, 1.0);
        }
    } else {
        for (s, slot) in out.iter_mut().enumerate() {
            acc.add(ln_poisson_term(s as u64, t).exp());
            *slot = acc.value().clamp(0.0, 1.0);
        }
    }
}

/// Principal branch of the Lambert W function: the `w >= -1` solving
/// `w * e^w = x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    const BRANCH_POINT: f64 = -1.0 / E;
    if x.is_nan() {
        return Err(Error::domain("lambert_w0 of NaN"));
    }
    if x < BRANCH_POINT {
        if x >= BRANCH_POINT - 4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::domain(format!("lambert_w0 needs x >= -1/e, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_w0(x);
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        let next = (w - step).max(-1.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            return Ok(next);
        }
        w = next;
    }
    Ok(bisect_w0(x))
}

fn initial_w0(x: f64) -> f64 {
    if x < -0.25 {
        // Expansion about the branch point in p = sqrt(2(ex + 1)).
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x.abs() <= 0.25 {
        x * (1.0 - x * (1.0 - 1.5 * x))
    } else if x <= E {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

fn bisect_w0(x: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0_f64, x.ln().max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < x {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// ln(m!) - (m ln m - m + ln(2 pi m)/2) for m = 0..=15.
const STIRLING_ERROR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_3,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_093,
    0.016_644_691_189_821_193,
    0.013_876_128_823_070_748,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_096,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_87,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_53,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_847_5,
    0.005_554_733_551_962_801,
];

fn stirling_error(m: u64) -> f64 {
    if m < STIRLING_ERROR.len() as u64 {
        return STIRLING_ERROR[m as usize];
    }
    let x = m as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// `ln(m!)`.
pub fn ln_factorial(m: u64) -> f64 {
    if m <= 20 {
        let f: u64 = (1..=m).product();
        return (f as f64).ln();
    }
    let x = m as f64;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + stirling_error(m)
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    let mut c: u128 = 1;
    for j in 1..=k as u128 {
        c = c * (n as u128 - k as u128 + j) / j;
    }
    c
}

/// `C(n, k)` as a double: correctly rounded for `n <= 120`, via
/// [`log_binomial`] beyond. Zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 120 {
        return binomial_u128(n, k) as f64;
    }
    log_binomial(n, k).map(f64::exp).unwrap_or(0.0)
}

/// `ln C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("log_binomial needs k <= n, got ({n}, {k})")));
    }
    let k = k.min(n - k);
    if k == 0 {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok((n as f64).ln());
    }
    if n <= 120 {
        return Ok((binomial_u128(n, k) as f64).ln());
    }
    // Stirling form with the large pieces recombined so nothing cancels:
    // n ln n - k ln k - (n-k) ln(n-k) = k ln(n/k) - (n-k) ln(1 - k/n).
    let (nf, kf) = (n as f64, k as f64);
    let rest = nf - kf;
    let main = kf * (nf / kf).ln() - rest * (-kf / nf).ln_1p();
    let half_log = 0.5 * (nf / (2.0 * PI * kf * rest)).ln();
    let corr = stirling_error(n) - stirling_error(k) - stirling_error(n - k);
    Ok(main + half_log + corr)
}
