use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::receivers::{check_channel, r_capture, Receiver, ReceiverModel};
use crate::rng::OrderStream;
use crate::sim::SlotOutcome;
use crate::specfun::Probability;

/// Lower bound on unordered-SIC `r_i` built from the capture probability:
/// `((1 + mu r_i^C)^{i+1} - 1) / ((i + 1) mu)`.
pub fn r_unordered_lb(i: usize, mu: f64, rho: f64) -> Result<Probability> {
    let rc = r_capture(i, mu, rho)?.value();
    let n = (i + 1) as f64;
    Probability::new((n * (mu * rc).ln_1p()).exp_m1() / (n * mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnorderedMode {
    /// Visit packets once in random order; failures are not retried.
    #[default]
    SinglePass,
    /// Repeat passes over the undecoded packets until a pass decodes nothing.
    MultiPass,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UnorderedSic {
    pub mode: UnorderedMode,
}

impl UnorderedSic {
    pub fn new(mode: UnorderedMode) -> Self {
        UnorderedSic { mode }
    }
}

impl Receiver for UnorderedSic {
    fn model(&self) -> ReceiverModel {
        ReceiverModel::UnorderedSic
    }

    fn name(&self) -> &str {
        match self.mode {
            UnorderedMode::SinglePass => "unordered-sic",
            UnorderedMode::MultiPass => "unordered-sic-multipass",
        }
    }

    fn success_probability(&self, i: usize, mu: f64, rho: f64) -> Result<Probability> {
        check_channel(mu, rho)?;
        r_unordered_lb(i, mu, rho)
    }

    fn decode(&self, powers: &[f64], noise: f64, mu: f64, order: &mut OrderStream, out: &mut SlotOutcome) {
        out.reset(powers.len());
        let (mut visit, tail) = out.take_buffers();
        visit.extend(0..powers.len());
        order.shuffle(&mut visit);
        decode_in_order(powers, noise, mu, &visit, self.mode, out);
        out.restore_buffers(visit, tail);
    }
}

/// Unordered SIC over a fixed visiting order. Split out so tests can pin the
/// order.
pub(crate) fn decode_in_order(
    powers: &[f64],
    noise: f64,
    mu: f64,
    visit: &[usize],
    mode: UnorderedMode,
    out: &mut SlotOutcome,
) {
    let mut residual: f64 = powers.iter().sum();
    loop {
        let mut progressed = false;
        for &idx in visit {
            if out.per_packet[idx].success {
                continue;
            }
            let p = powers[idx];
            if p >= mu * ((residual - p).max(0.0) + noise) {
                out.mark(idx);
                residual -= p;
                progressed = true;
            }
        }
        if mode == UnorderedMode::SinglePass || !progressed || out.decoded == powers.len() {
            break;
        }
    }
}
