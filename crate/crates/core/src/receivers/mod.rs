//! Conditional success probabilities `r_i` and the matching per-slot decoders.
//!
//! Each receiver model is a [`Receiver`] strategy. The analytic side gives
//! `r_i`, the probability that a tagged packet is decoded when `i` other
//! packets are on the air; the decoding side applies the same rule to one
//! slot of received powers so the simulator can check the analysis.

mod capture;
mod collision;
mod ordered;
mod unordered;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::OrderStream;
use crate::sim::SlotOutcome;
use crate::specfun::Probability;

pub use capture::{r_capture, Capture};
pub use collision::{r_collision, Collision};
pub use ordered::{
    r_ordered, y_ordered, y_ordered_closed_form, DecodeLayerProb, OrderedSic, DEFAULT_ORDERED_CEILING, PRECISION_LIMIT,
};
pub use unordered::{r_unordered_lb, UnorderedMode, UnorderedSic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverModel {
    Collision,
    Capture,
    OrderedSic,
    UnorderedSic,
}

impl ReceiverModel {
    pub const ALL: [ReceiverModel; 4] = [
        ReceiverModel::Collision,
        ReceiverModel::Capture,
        ReceiverModel::OrderedSic,
        ReceiverModel::UnorderedSic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverModel::Collision => "collision",
            ReceiverModel::Capture => "capture",
            ReceiverModel::OrderedSic => "ordered-sic",
            ReceiverModel::UnorderedSic => "unordered-sic",
        }
    }

    /// The default strategy for this model.
    pub fn receiver(self) -> Arc<dyn Receiver> {
        match self {
            ReceiverModel::Collision => Arc::new(Collision),
            ReceiverModel::Capture => Arc::new(Capture),
            ReceiverModel::OrderedSic => Arc::new(OrderedSic::default()),
            ReceiverModel::UnorderedSic => Arc::new(UnorderedSic::default()),
        }
    }
}

impl fmt::Display for ReceiverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "collision" => Ok(ReceiverModel::Collision),
            "capture" => Ok(ReceiverModel::Capture),
            "ordered-sic" | "ordered" | "os" => Ok(ReceiverModel::OrderedSic),
            "unordered-sic" | "unordered" | "ns" => Ok(ReceiverModel::UnorderedSic),
            _ => Err(Error::UnknownReceiver(s.to_string())),
        }
    }
}

/// A receiver model: analytic `r_i` plus the slot-level decoding rule.
pub trait Receiver: Send + Sync + fmt::Debug {
    fn model(&self) -> ReceiverModel;

    /// Registry name; defaults to the model name.
    fn name(&self) -> &str {
        self.model().name()
    }

    /// `r_i` at threshold `mu` and mean SNR `rho` (both linear).
    fn success_probability(&self, i: usize, mu: f64, rho: f64) -> Result<Probability>;

    /// Refuses `(n, mu)` combinations whose closed forms cannot be trusted.
    fn check_analytic_range(&self, _n: usize, _mu: f64) -> Result<()> {
        Ok(())
    }

    /// `r_0..r_{n-1}`. Override when entries share work.
    fn curve_values(&self, n: usize, mu: f64, rho: f64) -> Result<Vec<Probability>> {
        (0..n).map(|i| self.success_probability(i, mu, rho)).collect()
    }

    /// Decodes one slot. `powers` are received powers, `order` supplies any
    /// randomness the rule needs. Results go into `out`, which is reset here.
    fn decode(&self, powers: &[f64], noise: f64, mu: f64, order: &mut OrderStream, out: &mut SlotOutcome);
}

pub(crate) fn check_channel(mu: f64, rho: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("threshold mu must be positive, got {mu}")));
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::domain(format!("mean SNR rho must be positive, got {rho}")));
    }
    Ok(())
}

/// Receivers addressable by name.
#[derive(Debug, Clone, Default)]
pub struct ReceiverRegistry {
    entries: BTreeMap<String, Arc<dyn Receiver>>,
}

impl ReceiverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four models plus the multi-pass unordered variant.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        for model in ReceiverModel::ALL {
            reg.register(model.receiver());
        }
        reg.register(Arc::new(UnorderedSic::new(UnorderedMode::MultiPass)));
        reg
    }

    /// Adds or replaces the entry under `receiver.name()`.
    pub fn register(&mut self, receiver: Arc<dyn Receiver>) {
        self.entries.insert(receiver.name().to_string(), receiver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Receiver>> {
        if let Some(r) = self.entries.get(name) {
            return Ok(r.clone());
        }
        let model: ReceiverModel = name.parse()?;
        self.entries
            .get(model.name())
            .cloned()
            .ok_or_else(|| Error::UnknownReceiver(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Receiver>> {
        self.entries.values()
    }
}

/// `r_0..r_{n-1}` for one receiver at one `(mu, rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub receiver: ReceiverModel,
    pub mu: f64,
    pub rho: f64,
    pub values: Vec<Probability>,
}

impl SuccessCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i].value()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|p| p.value())
    }

    /// Wraps externally obtained values, e.g. Monte Carlo estimates.
    pub fn from_values(receiver: ReceiverModel, mu: f64, rho: f64, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(Probability::new).collect::<Result<Vec<_>>>()?;
        Ok(SuccessCurve {
            receiver,
            mu,
            rho,
            values,
        })
    }
}

pub fn success_curve(n: usize, mu: f64, rho: f64, receiver: &dyn Receiver) -> Result<SuccessCurve> {
    if n == 0 {
        return Err(Error::domain("success curve needs n >= 1"));
    }
    check_channel(mu, rho)?;
    receiver.check_analytic_range(n, mu)?;
    Ok(SuccessCurve {
        receiver: receiver.model(),
        mu,
        rho,
        values: receiver.curve_values(n, mu, rho)?,
    })
}
