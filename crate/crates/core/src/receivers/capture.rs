use crate::error::Result;
use crate::receivers::{check_channel, Receiver, ReceiverModel};
use crate::rng::OrderStream;
use crate::sim::SlotOutcome;
use crate::specfun::Probability;

/// Each packet decoded on its own, everything else counted as noise:
/// `r_i = e^{-mu/rho} / (1 + mu)^i`.
pub fn r_capture(i: usize, mu: f64, rho: f64) -> Result<Probability> {
    check_channel(mu, rho)?;
    Probability::new((-mu / rho - i as f64 * mu.ln_1p()).exp())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Capture;

impl Receiver for Capture {
    fn model(&self) -> ReceiverModel {
        ReceiverModel::Capture
    }

    fn success_probability(&self, i: usize, mu: f64, rho: f64) -> Result<Probability> {
        r_capture(i, mu, rho)
    }

    fn decode(&self, powers: &[f64], noise: f64, mu: f64, _: &mut OrderStream, out: &mut SlotOutcome) {
        out.reset(powers.len());
        let total: f64 = powers.iter().sum();
        for (j, &p) in powers.iter().enumerate() {
            let interference = (total - p).max(0.0);
            if p >= mu * (interference + noise) {
                out.mark(j);
            }
        }
    }
}
