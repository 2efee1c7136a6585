//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input fell outside the mathematical domain of an operation.
    #[error("{name} must be {requirement}, got {value}")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// D(p || q) diverges: p puts mass where q has none.
    #[error("relative entropy is infinite: p = {p} has mass where q = {q} has none")]
    InfiniteDivergence { p: f64, q: f64 },

    /// Symbol energy below the supported cutoff; the bound is 0/0-degenerate there.
    #[error("symbol energy n_s = {n_s:e} is below the supported cutoff {cutoff:e}")]
    SignalTooSmall { n_s: f64, cutoff: f64 },

    /// No integer format order within the search cap reaches the minimum
    /// symbol energy at this signal level.
    #[error("no format order in [1, {cap}] reaches symbol energy {cutoff:e} at n_a = {n_a:e}")]
    NoFeasibleOrder { n_a: f64, cap: u64, cutoff: f64 },

    /// The exact mutual-information sum refuses orders above its cap.
    #[error("format order M = {order_m} exceeds the exact-oracle cap {cap}")]
    InfeasibleOrder { order_m: u64, cap: u64 },

    /// A variable-bandwidth design asked for more bandwidth than the hardware cap.
    #[error("required bandwidth {required_hz:e} Hz exceeds the cap {cap_hz:e} Hz")]
    BandwidthCap { required_hz: f64, cap_hz: f64 },

    /// Two routes that must agree to working precision did not.
    #[error("internal consistency check failed ({what}): {a} vs {b}")]
    Inconsistent { what: &'static str, a: f64, b: f64 },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, requirement: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            requirement,
        }
    }
}

/// Validates that `value` is finite and non-negative.
pub(crate) fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::domain(name, value, "finite and >= 0"));
    }
    Ok(())
}

/// Validates that `value` is finite and strictly positive.
pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::domain(name, value, "finite and > 0"));
    }
    Ok(())
}
