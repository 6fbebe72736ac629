use serde::{Deserialize, Serialize};

/// A Monte Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// `(value - mean) / se`; infinite when the estimate has no spread but
    /// disagrees.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = value - self.mean;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.se
        }
    }
}

/// Conditional success estimate for one concurrency level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RHat {
    pub mean: f64,
    pub se: f64,
    /// Slots with exactly `i + 1` transmitters.
    pub samples: u64,
}

/// Aggregated results of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub receiver: String,
    pub slots: u64,
    /// Decoded packets per slot.
    pub throughput: Estimate,
    /// Decoded packets per transmitted packet.
    pub p_hat: Estimate,
    /// Throughput times `log2(1 + mu)`, in bits/s/Hz.
    pub sum_rate: Estimate,
    /// Entry `i` estimates `r_i`; `None` when no slot had `i + 1` transmitters.
    pub r_hat: Vec<Option<RHat>>,
    pub transmissions: u64,
    pub decoded: u64,
}

/// Integer sufficient statistics, so merging partial runs is exact and the
/// result does not depend on how slots were split across threads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Tally {
    pub slots: u64,
    pub d: u64,
    pub d2: u128,
    pub t: u64,
    pub t2: u128,
    pub dt: u128,
    /// Indexed by transmitter count: (slots, sum d, sum d^2).
    pub by_count: Vec<(u64, u64, u64)>,
}

impl Tally {
    pub fn new(n: usize) -> Self {
        Tally {
            by_count: vec![(0, 0, 0); n + 1],
            ..Default::default()
        }
    }

    #[inline]
    pub fn record(&mut self, transmitters: usize, decoded: usize) {
        let (t, d) = (transmitters as u64, decoded as u64);
        self.slots += 1;
        self.d += d;
        self.d2 += (d * d) as u128;
        self.t += t;
        self.t2 += (t * t) as u128;
        self.dt += (d * t) as u128;
        let e = &mut self.by_count[transmitters];
        e.0 += 1;
        e.1 += d;
        e.2 += d * d;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.slots += other.slots;
        self.d += other.d;
        self.d2 += other.d2;
        self.t += other.t;
        self.t2 += other.t2;
        self.dt += other.dt;
        for (a, b) in self.by_count.iter_mut().zip(&other.by_count) {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        }
    }

    pub fn finish(&self, receiver: &str, mu: f64) -> SimStats {
        let throughput = mean_and_se(self.slots, self.d as u128, self.d2);
        let bits = mu.ln_1p() / std::f64::consts::LN_2;
        SimStats {
            receiver: receiver.to_string(),
            slots: self.slots,
            throughput,
            p_hat: self.ratio(),
            sum_rate: Estimate {
                mean: throughput.mean * bits,
                se: throughput.se * bits,
            },
            r_hat: self.by_count[1..]
                .iter()
                .enumerate()
                .map(|(i, &(c, sd, sd2))| {
                    (c > 0).then(|| {
                        let e = mean_and_se(c, sd as u128, sd2 as u128);
                        let k = (i + 1) as f64;
                        RHat {
                            mean: e.mean / k,
                            se: e.se / k,
                            samples: c,
                        }
                    })
                })
                .collect(),
            transmissions: self.t,
            decoded: self.d,
        }
    }

    // Ratio estimator sum(d)/sum(t) with a delta-method standard error.
    fn ratio(&self) -> Estimate {
        if self.t == 0 {
            return Estimate {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let n = self.slots as f64;
        let r = self.d as f64 / self.t as f64;
        let t_bar = self.t as f64 / n;
        let resid = self.d2 as f64 - 2.0 * r * self.dt as f64 + r * r * self.t2 as f64;
        let var = (resid / (n - 1.0)).max(0.0);
        Estimate {
            mean: r,
            se: (var / n).sqrt() / t_bar,
        }
    }
}

/// Sample mean and standard error from integer sums; the variance numerator
/// `n * sum(x^2) - sum(x)^2` is formed exactly.
pub(crate) fn mean_and_se(n: u64, sum: u128, sum_sq: u128) -> Estimate {
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n == 1 {
        return Estimate { mean, se: f64::NAN };
    }
    let numer = (n as u128 * sum_sq).saturating_sub(sum * sum);
    let var = numer as f64 / (nf * (nf - 1.0));
    Estimate {
        mean,
        se: (var / nf).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_match_textbook() {
        // samples 1, 2, 3, 4
        let e = mean_and_se(4, 10, 30);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.se - sd / 2.0).abs() < 1e-15);
        assert!(mean_and_se(1, 3, 9).se.is_nan());
    }

    #[test]
    fn merge_is_exact() {
        let mut a = Tally::new(4);
        let mut b = Tally::new(4);
        let mut whole = Tally::new(4);
        for (k, (t, d)) in [(0, 0), (1, 1), (3, 2), (2, 0), (3, 3)].into_iter().enumerate() {
            if k % 2 == 0 { &mut a } else { &mut b }.record(t, d);
            whole.record(t, d);
        }
        a.merge(&b);
        assert_eq!(a, whole);
        let s = whole.finish("x", 1.0);
        assert_eq!(s.throughput.mean, 6.0 / 5.0);
        assert_eq!(s.p_hat.mean, 6.0 / 9.0);
        assert_eq!(s.sum_rate.mean, 6.0 / 5.0);
        assert!(s.r_hat[3].is_none());
        let r2 = s.r_hat[2].unwrap();
        assert_eq!((r2.mean, r2.samples), (5.0 / 6.0, 2));
    }

    #[test]
    fn z_score_handles_zero_spread() {
        let e = Estimate { mean: 1.0, se: 0.0 };
        assert_eq!(e.z_score(1.0), 0.0);
        assert!(e.z_score(0.5).is_infinite());
    }
}
