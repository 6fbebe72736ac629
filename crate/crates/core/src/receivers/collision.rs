use crate::error::Result;
use crate::receivers::{check_channel, Receiver, ReceiverModel};
use crate::rng::OrderStream;
use crate::sim::SlotOutcome;
use crate::specfun::Probability;

/// Success only for a lone transmitter that clears the threshold.
pub fn r_collision(i: usize, mu: f64, rho: f64) -> Result<Probability> {
    check_channel(mu, rho)?;
    if i > 0 {
        return Ok(Probability::ZERO);
    }
    Probability::new((-mu / rho).exp())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Collision;

impl Receiver for Collision {
    fn model(&self) -> ReceiverModel {
        ReceiverModel::Collision
    }

    fn success_probability(&self, i: usize, mu: f64, rho: f64) -> Result<Probability> {
        r_collision(i, mu, rho)
    }

    fn decode(&self, powers: &[f64], noise: f64, mu: f64, _: &mut OrderStream, out: &mut SlotOutcome) {
        out.reset(powers.len());
        if powers.len() == 1 && powers[0] >= mu * noise {
            out.mark(0);
        }
    }
}
