//! Counter-based random numbers (Philox 4x64, 10 rounds).
//!
//! Every draw is a pure function of `(key, counter)`, so a simulation can be
//! split across threads in any way and still produce the same numbers.

const M0: u64 = 0xD2E7_470E_E14C_6C93;
const M1: u64 = 0xCA5A_8263_9512_1157;
const W0: u64 = 0x9E37_79B9_7F4A_7C15;
const W1: u64 = 0xBB67_AE85_84CA_A73B;

#[inline(always)]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = a as u128 * b as u128;
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block.
#[inline]
pub fn philox4x64(counter: [u64; 4], key: [u64; 2]) -> [u64; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Maps 64 random bits to a uniform double in `(0, 1]`.
#[inline]
pub fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Maps 64 random bits to a uniform double in `[0, 1)`.
#[inline]
pub fn unit_closed_open(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unit-mean exponential variate from 64 random bits.
#[inline]
pub fn exponential(bits: u64) -> f64 {
    -unit_open_closed(bits).ln()
}

/// Stream tags kept in the third counter word so that different uses of the
/// same `(slot, index)` never share a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Node = 1,
    Order = 2,
    Sample = 3,
}

/// Keyed generator addressed by `(slot, index, purpose, block)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u64; 2],
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent generator for the same seed, e.g. one per experiment arm.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        CounterRng { key: [seed, stream] }
    }

    #[inline]
    pub fn block(&self, slot: u64, index: u64, purpose: Purpose, block: u64) -> [u64; 4] {
        philox4x64([slot, index, purpose as u64, block], self.key)
    }

    /// A sequential stream for one `(slot, purpose)`, e.g. the visiting order
    /// of an unordered-SIC receiver.
    pub fn stream(&self, slot: u64, purpose: Purpose) -> OrderStream {
        OrderStream {
            rng: *self,
            slot,
            purpose,
            block: 0,
            buf: [0; 4],
            used: 4,
        }
    }
}

/// Sequential draws from consecutive counter blocks.
#[derive(Debug, Clone)]
pub struct OrderStream {
    rng: CounterRng,
    slot: u64,
    purpose: Purpose,
    block: u64,
    buf: [u64; 4],
    used: usize,
}

impl OrderStream {
    pub fn next_u64(&mut self) -> u64 {
        if self.used == 4 {
            self.buf = self.rng.block(self.slot, 0, self.purpose, self.block);
            self.block += 1;
            self.used = 0;
        }
        let x = self.buf[self.used];
        self.used += 1;
        x
    }

    /// Uniform integer in `0..bound` by Lemire's multiply-and-reject method.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let (hi, lo) = mulhilo(self.next_u64(), bound);
            if lo >= threshold {
                return hi;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
