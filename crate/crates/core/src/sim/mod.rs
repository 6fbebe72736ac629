//! Monte Carlo simulation of a saturated slotted Aloha network.
//!
//! Noise power is 1 and a transmitted packet arrives with power
//! `rho * |h|^2`, `|h|^2` unit-mean exponential, drawn fresh every slot.
//! Every draw comes from a counter-based generator addressed by slot and
//! node, so results are bit-identical for any number of worker threads.

mod stats;

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hol::NetworkConfig;
use crate::receivers::{Receiver, ReceiverModel};
use crate::rng::{exponential, unit_closed_open, CounterRng, OrderStream, Purpose};

use stats::{mean_and_se, Tally};
pub use stats::{Estimate, RHat, SimStats};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketOutcome {
    pub success: bool,
    /// Position in the decoding sequence, when decoded.
    pub decoded_at: Option<usize>,
}

/// What happened in one slot. `per_packet` follows the order of the
/// received powers.
#[derive(Debug, Clone, Default)]
pub struct SlotOutcome {
    pub transmitters: usize,
    pub decoded: usize,
    pub per_packet: Vec<PacketOutcome>,
    order_buf: Vec<usize>,
    power_buf: Vec<f64>,
}

impl PartialEq for SlotOutcome {
    fn eq(&self, other: &Self) -> bool {
        self.transmitters == other.transmitters && self.decoded == other.decoded && self.per_packet == other.per_packet
    }
}

impl SlotOutcome {
    /// Clears the outcome for a slot with `transmitters` packets.
    pub fn reset(&mut self, transmitters: usize) {
        self.transmitters = transmitters;
        self.decoded = 0;
        self.per_packet.clear();
        self.per_packet.resize(transmitters, PacketOutcome::default());
    }

    /// Records packet `j` as decoded next.
    pub fn mark(&mut self, j: usize) {
        let slot = &mut self.per_packet[j];
        if !slot.success {
            slot.success = true;
            slot.decoded_at = Some(self.decoded);
            self.decoded += 1;
        }
    }

    /// Scratch buffers for decoders, handed out empty.
    pub(crate) fn take_buffers(&mut self) -> (Vec<usize>, Vec<f64>) {
        let mut order = std::mem::take(&mut self.order_buf);
        let mut powers = std::mem::take(&mut self.power_buf);
        order.clear();
        powers.clear();
        (order, powers)
    }

    pub(crate) fn restore_buffers(&mut self, order: Vec<usize>, powers: Vec<f64>) {
        self.order_buf = order;
        self.power_buf = powers;
    }
}

/// Applies the default decoding rule of `receiver` to one slot.
pub fn decode_slot(
    received_powers: &[f64],
    noise: f64,
    mu: f64,
    receiver: ReceiverModel,
    order: &mut OrderStream,
) -> SlotOutcome {
    let mut out = SlotOutcome::default();
    receiver.receiver().decode(received_powers, noise, mu, order, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    /// Slots handed to a worker at a time.
    pub chunk_slots: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            workers: 0,
            chunk_slots: 1 << 16,
        }
    }
}

impl SimOptions {
    fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}

/// Runs `work` over `0..total` in chunks on a scoped thread pool and merges
/// the partial results. Callers must make `merge` order-insensitive.
fn parallel_fold<A: Send>(
    total: u64,
    opts: &SimOptions,
    init: impl Fn() -> A + Sync,
    work: impl Fn(&mut A, Range<u64>) + Sync,
    merge: impl Fn(&mut A, A),
) -> A {
    let chunk = opts.chunk_slots.max(1);
    let chunks = total.div_ceil(chunk);
    let workers = (opts.worker_count() as u64).min(chunks).max(1) as usize;
    let next = AtomicU64::new(0);
    let run = || {
        let mut acc = init();
        loop {
            let c = next.fetch_add(1, Ordering::Relaxed);
            if c >= chunks {
                break;
            }
            let start = c * chunk;
            work(&mut acc, start..(start + chunk).min(total));
        }
        acc
    };
    if workers == 1 {
        return run();
    }
    let parts = Mutex::new(Vec::with_capacity(workers));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                let acc = run();
                parts.lock().unwrap().push(acc);
            });
        }
    });
    let mut parts = parts.into_inner().unwrap().into_iter();
    let mut acc = parts.next().unwrap_or_else(&init);
    for p in parts {
        merge(&mut acc, p);
    }
    acc
}

fn check_run(config: &NetworkConfig, slots: u64) -> Result<f64> {
    config.validate()?;
    if slots == 0 {
        return Err(Error::InvalidConfig("need at least one slot".into()));
    }
    config.uniform_q0()
}

/// Draws the received powers of slot `slot`: node `j` transmits when its
/// first uniform falls below `q0` and fades with its second.
#[inline]
fn draw_slot(rng: &CounterRng, slot: u64, n: usize, q0: f64, rho: f64, powers: &mut Vec<f64>) {
    powers.clear();
    for node in 0..n as u64 {
        let b = rng.block(slot, node, Purpose::Node, 0);
        if unit_closed_open(b[0]) < q0 {
            powers.push(rho * exponential(b[1]));
        }
    }
}

/// Simulates several receivers on the same fades and transmit decisions.
pub fn simulate_paired(
    config: &NetworkConfig,
    receivers: &[&dyn Receiver],
    slots: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<SimStats>> {
    let q0 = check_run(config, slots)?;
    let (n, rho, mu) = (config.n, config.rho, config.mu);
    let rng = CounterRng::new(seed);
    let tallies = parallel_fold(
        slots,
        opts,
        || vec![Tally::new(n); receivers.len()],
        |acc, range| {
            let mut powers = Vec::with_capacity(n);
            let mut out = SlotOutcome::default();
            for slot in range {
                draw_slot(&rng, slot, n, q0, rho, &mut powers);
                for (r, tally) in receivers.iter().zip(acc.iter_mut()) {
                    let mut order = rng.stream(slot, Purpose::Order);
                    r.decode(&powers, 1.0, mu, &mut order, &mut out);
                    tally.record(out.transmitters, out.decoded);
                }
            }
        },
        |acc, other| {
            for (a, b) in acc.iter_mut().zip(&other) {
                a.merge(b);
            }
        },
    );
    Ok(tallies
        .iter()
        .zip(receivers)
        .map(|(t, r)| t.finish(r.name(), mu))
        .collect())
}

pub fn simulate_with(
    config: &NetworkConfig,
    receiver: &dyn Receiver,
    slots: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimStats> {
    Ok(simulate_paired(config, &[receiver], slots, seed, opts)?.remove(0))
}

/// Simulates `slots` slots with default options.
pub fn simulate(config: &NetworkConfig, receiver: &dyn Receiver, slots: u64, seed: u64) -> Result<SimStats> {
    simulate_with(config, receiver, slots, seed, &SimOptions::default())
}

/// Fills `out` with `k` unit-mean exponentials for sample `sample`.
fn draw_exponentials(rng: &CounterRng, sample: u64, k: usize, out: &mut Vec<f64>) {
    out.clear();
    for block in 0..k.div_ceil(4) as u64 {
        let b = rng.block(sample, block, Purpose::Sample, 0);
        for &bits in &b {
            if out.len() < k {
                out.push(exponential(bits));
            }
        }
    }
}

/// Monte Carlo estimate of the probability that the `l`-th strongest of
/// `i + 1` unit-mean exponential powers has SINR at least `mu` against the
/// weaker ones plus noise `1/rho`.
pub fn estimate_y(
    i: usize,
    l: usize,
    mu: f64,
    rho: f64,
    samples: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Estimate> {
    if l == 0 || l > i + 1 {
        return Err(Error::domain(format!("layer l = {l} outside 1..={}", i + 1)));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("need at least one sample".into()));
    }
    crate::receivers::check_channel(mu, rho)?;
    let rng = CounterRng::new(seed);
    let noise = 1.0 / rho;
    let hits = parallel_fold(
        samples,
        opts,
        || 0u64,
        |acc, range| {
            let mut x = Vec::with_capacity(i + 1);
            for s in range {
                draw_exponentials(&rng, s, i + 1, &mut x);
                x.sort_by(|a, b| b.total_cmp(a));
                let weaker: f64 = x[l..].iter().sum();
                if x[l - 1] >= mu * (weaker + noise) {
                    *acc += 1;
                }
            }
        },
        |a, b| *a += b,
    );
    Ok(mean_and_se(samples, hits as u128, hits as u128))
}

/// Monte Carlo `r_0..r_{n-1}` for any receiver: for each `i`, `samples`
/// slots with exactly `i + 1` packets, scoring the decoded fraction.
pub fn estimate_r_curve(
    n: usize,
    mu: f64,
    rho: f64,
    receiver: &dyn Receiver,
    samples: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<RHat>> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidConfig("need n >= 1 and at least one sample".into()));
    }
    crate::receivers::check_channel(mu, rho)?;
    (0..n)
        .map(|i| {
            let rng = CounterRng::with_stream(seed, i as u64 + 1);
            let (sum, sum_sq) = parallel_fold(
                samples,
                opts,
                || (0u128, 0u128),
                |acc, range| {
                    let mut powers = Vec::with_capacity(i + 1);
                    let mut out = SlotOutcome::default();
                    for s in range {
                        draw_exponentials(&rng, s, i + 1, &mut powers);
                        powers.iter_mut().for_each(|p| *p *= rho);
                        let mut order = rng.stream(s, Purpose::Order);
                        receiver.decode(&powers, 1.0, mu, &mut order, &mut out);
                        let d = out.decoded as u128;
                        acc.0 += d;
                        acc.1 += d * d;
                    }
                },
                |a, b| {
                    a.0 += b.0;
                    a.1 += b.1;
                },
            );
            let e = mean_and_se(samples, sum, sum_sq);
            let k = (i + 1) as f64;
            Ok(RHat {
                mean: e.mean / k,
                se: e.se / k,
                samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
