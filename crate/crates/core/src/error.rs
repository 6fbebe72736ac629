use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The alternating sums behind y_i^(l) lost too many digits to trust.
    #[error(
        "precision loss evaluating y(i={i}, l={l}): value {value:.6e} has estimated absolute error {abs_error:.3e}"
    )]
    PrecisionLoss {
        i: usize,
        l: usize,
        value: f64,
        abs_error: f64,
    },

    #[error(
        "analytic range exceeded for {receiver}: n = {n} > ceiling {ceiling} at mu = {mu}; \
         use the Monte Carlo estimator (`simulate --estimate-ri`)"
    )]
    AnalyticRange {
        receiver: &'static str,
        n: usize,
        ceiling: usize,
        mu: f64,
    },

    #[error("degenerate chain: success probability is zero, no stationary service")]
    DegenerateChain,

    #[error("no sign change for {what} over [{lo:e}, {hi:e}]")]
    BracketFailure { what: &'static str, lo: f64, hi: f64 },

    #[error("unknown receiver `{0}`")]
    UnknownReceiver(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for the errors that mean "the closed forms cannot be trusted
    /// here", as opposed to a caller mistake.
    pub fn is_analytic_range(&self) -> bool {
        matches!(self, Error::AnalyticRange { .. } | Error::PrecisionLoss { .. })
    }
}
