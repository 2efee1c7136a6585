//! Photon information efficiency of a Geiger-type photon-counting link.
//!
//! The channel model: each symbol occupies M time slots, the transmitter
//! puts its entire symbol energy n_s = M * n_a into one slot, and a
//! click/no-click detector watches every slot. With background counts n_b
//! per slot, the click probabilities are
//!
//!   p_c = 1 - exp(-n_s - n_b)   (signal slot)
//!   p_b = 1 - exp(-n_b)         (background-only slot)
//!
//! The information carried per detected signal photon is bounded below by
//!
//!   PIE >= D(p_c || p_c/M + (1 - 1/M) p_b) / n_s      [bits/photon]
//!
//! where D is the binary relative entropy. Letting M grow at fixed n_s
//! drives the mixture toward p_b and yields the vanishing-signal limit
//! D(p_c || p_b)/n_s, whose optimum over n_s admits the closed-form
//! Lambert-W approximation
//!
//!   PIE* ~ { W(2/n_b) - 2 + 1/W(2/n_b) } log2 e        (n_a << n_b << 1)
//!
//! The coherent-detection benchmark 2 log2(e) / (1 + n_b) sits alongside
//! for comparison.

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::math::{binary_relative_entropy, lambert_w0, Probability};

/// Smallest symbol energy accepted by the bound evaluators.
///
/// Below this the quotient D/n_s is a 0/0 form dominated by rounding; the
/// optimizer never queries beneath it.
pub const SYMBOL_ENERGY_CUTOFF: f64 = 1e-12;

/// Detected mean photon numbers per slot: signal `n_a`, background `n_b`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperatingPoint {
    pub n_a: f64,
    pub n_b: f64,
}

impl OperatingPoint {
    pub fn new(n_a: f64, n_b: f64) -> Result<Self> {
        let point = OperatingPoint { n_a, n_b };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("n_a", self.n_a)?;
        check_nonneg("n_b", self.n_b)
    }
}

/// An M-ary orthogonal format together with its per-symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModulationFormat {
    pub order_m: u64,
    pub n_s: f64,
}

impl ModulationFormat {
    pub fn new(order_m: u64, n_s: f64) -> Result<Self> {
        if order_m < 1 {
            return Err(Error::domain("order_m", order_m as f64, ">= 1"));
        }
        if !n_s.is_finite() || n_s < SYMBOL_ENERGY_CUTOFF {
            return Err(Error::SignalTooSmall {
                n_s,
                cutoff: SYMBOL_ENERGY_CUTOFF,
            });
        }
        Ok(ModulationFormat { order_m, n_s })
    }

    /// Format of order M paired with a point, so that n_s = M * n_a.
    pub fn from_point(order_m: u64, point: &OperatingPoint) -> Result<Self> {
        point.validate()?;
        ModulationFormat::new(order_m, order_m as f64 * point.n_a)
    }
}

/// Click probabilities (p_c, p_b) for symbol energy `n_s` and background `n_b`.
pub fn photocount_probabilities(n_s: f64, n_b: f64) -> Result<(Probability, Probability)> {
    check_nonneg("n_s", n_s)?;
    check_nonneg("n_b", n_b)?;
    let p_c = Probability::from_neg_exp(n_s + n_b)?;
    let p_b = Probability::from_neg_exp(n_b)?;
    Ok((p_c, p_b))
}

/// Relative-entropy lower bound on PIE, in bits per detected signal photon.
///
/// Accepts the standalone triple (n_s, n_b, M); callers holding an
/// [`OperatingPoint`] pass n_s = M * n_a (see [`pie_bound_at`]). Returns 0
/// for M = 1: a single slot carries no timing information, and the mixture
/// collapses onto p_c exactly.
pub fn pie_bound(n_s: f64, n_b: f64, order_m: u64) -> Result<f64> {
    if order_m < 1 {
        return Err(Error::domain("order_m", order_m as f64, ">= 1"));
    }
    if !n_s.is_finite() || n_s < SYMBOL_ENERGY_CUTOFF {
        return Err(Error::SignalTooSmall {
            n_s,
            cutoff: SYMBOL_ENERGY_CUTOFF,
        });
    }
    let (p_c, p_b) = photocount_probabilities(n_s, n_b)?;
    let mixture = Probability::mix(p_c, p_b, 1.0 / order_m as f64)?;
    Ok(binary_relative_entropy(p_c, mixture)? / n_s)
}

/// [`pie_bound`] evaluated at a point: n_s = M * n_a.
pub fn pie_bound_at(point: &OperatingPoint, order_m: u64) -> Result<f64> {
    point.validate()?;
    pie_bound(order_m as f64 * point.n_a, point.n_b, order_m)
}

/// The M -> infinity limit of [`pie_bound`] at fixed n_s: D(p_c || p_b)/n_s.
///
/// n_b = 0 with positive n_s makes the divergence infinite (a noiseless
/// detector distinguishes the signal slot perfectly) and is surfaced as the
/// typed infinite-divergence error.
pub fn pie_bound_vanishing_signal(n_s: f64, n_b: f64) -> Result<f64> {
    if !n_s.is_finite() || n_s < SYMBOL_ENERGY_CUTOFF {
        return Err(Error::SignalTooSmall {
            n_s,
            cutoff: SYMBOL_ENERGY_CUTOFF,
        });
    }
    let (p_c, p_b) = photocount_probabilities(n_s, n_b)?;
    Ok(binary_relative_entropy(p_c, p_b)? / n_s)
}

/// Closed-form Lambert-W approximation to the optimized vanishing-signal PIE.
///
/// PIE* ~ { W(2/n_b) - 2 + 1/W(2/n_b) } log2 e. The bracket w + 1/w - 2 is
/// nonnegative for every w > 0, with its root at w = 1, i.e. n_b = 2/e; past
/// that point the formula loses monotonicity and no longer tracks the
/// numerical optimum (see [`approx_domain_exceeded`]).
pub fn pie_approx_lambert(n_b: f64) -> Result<f64> {
    check_positive("n_b", n_b)?;
    let w = lambert_w0(2.0 / n_b)?;
    Ok((w - 2.0 + 1.0 / w) * std::f64::consts::LOG2_E)
}

/// True when n_b lies outside the validity domain of [`pie_approx_lambert`].
///
/// The approximation is derived for n_b << 1; its bracket bottoms out at
/// n_b = 2/e and rises again beyond, so anything past that root is reported
/// as out of domain.
pub fn approx_domain_exceeded(n_b: f64) -> bool {
    n_b >= 2.0 / std::f64::consts::E
}

/// Shot-noise-limited coherent-detection benchmark 2 log2(e) / (1 + n_b).
pub fn coherent_detection_limit(n_b: f64) -> Result<f64> {
    check_nonneg("n_b", n_b)?;
    Ok(2.0 * std::f64::consts::LOG2_E / (1.0 + n_b))
}

/// Noiseless single-photon ceiling log2(M) bits per photon.
pub fn noiseless_pie(order_m: u64) -> Result<f64> {
    if order_m < 1 {
        return Err(Error::domain("order_m", order_m as f64, ">= 1"));
    }
    Ok((order_m as f64).log2())
}

// ----------------------------------------------------------------
// Tests
// ----------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn photocount_frozen_values() {
        // Reference: 1 - e^-1.0001 and 1 - e^-1e-4 at 50 digits.
        let (p_c, p_b) = photocount_probabilities(1.0, 1e-4).unwrap();
        assert!(
            approx_eq(p_c.value(), 0.6321573449333389, 1e-14),
            "p_c(1, 1e-4): got {}",
            p_c.value()
        );
        assert!(
            (p_b.value() - 9.99950001666625e-5).abs() <= 1e-18,
            "p_b(1e-4): got {:e}",
            p_b.value()
        );
    }

    #[test]
    fn photocount_orders_probabilities() {
        // p_c >= p_b for every admissible pair.
        for &n_s in &[0.0, 1e-9, 1e-3, 0.5, 3.0, 50.0] {
            for &n_b in &[0.0, 1e-8, 1e-2, 1.0, 20.0] {
                let (p_c, p_b) = photocount_probabilities(n_s, n_b).unwrap();
                assert!(
                    p_c.value() >= p_b.value(),
                    "p_c < p_b at n_s={n_s}, n_b={n_b}"
                );
            }
        }
    }

    #[test]
    fn pie_bound_frozen_value() {
        // n_a = 2^-10, n_b = 1e-4, M = 1024 => n_s = 1. Reference value from
        // a 50-digit evaluation of D(p_c || p_c/M + (1-1/M) p_b) / n_s.
        let pie = pie_bound(1.0, 1e-4, 1024).unwrap();
        assert!(
            approx_eq(pie, 5.654427024694048, 1e-12),
            "pie_bound(1, 1e-4, 1024): expected 5.654427024694048, got {pie}"
        );
        let point = OperatingPoint::new(2f64.powi(-10), 1e-4).unwrap();
        let via_point = pie_bound_at(&point, 1024).unwrap();
        assert_eq!(
            pie.to_bits(),
            via_point.to_bits(),
            "triple and point parameterizations must agree bit-for-bit"
        );
    }

    #[test]
    fn pie_bound_degenerate_orders() {
        assert_eq!(
            pie_bound(1.0, 1e-4, 1).unwrap(),
            0.0,
            "M = 1 carries no info"
        );
        assert!(pie_bound(1.0, 1e-4, 0).is_err());
        match pie_bound(1e-13, 1e-4, 4) {
            Err(Error::SignalTooSmall { .. }) => {}
            other => panic!("expected SignalTooSmall below cutoff, got {other:?}"),
        }
    }

    #[test]
    fn vanishing_signal_frozen_values_and_errors() {
        let v = pie_bound_vanishing_signal(1.0, 1e-4).unwrap();
        assert!(
            approx_eq(v, 7.451022434984379, 1e-12),
            "vanishing(1, 1e-4): got {v}"
        );
        let v = pie_bound_vanishing_signal(1.0, 1e-3).unwrap();
        assert!(
            approx_eq(v, 5.355485551823066, 1e-12),
            "vanishing(1, 1e-3): got {v}"
        );
        match pie_bound_vanishing_signal(1.0, 0.0) {
            Err(Error::InfiniteDivergence { .. }) => {}
            other => panic!("n_b = 0 must be an infinite divergence, got {other:?}"),
        }
        assert!(pie_bound_vanishing_signal(1e-13, 1e-3).is_err());
    }

    #[test]
    fn bound_converges_monotonically_to_vanishing_limit() {
        // Fixed (n_s, n_b): pie_bound(2^k) is non-decreasing with limit
        // pie_bound_vanishing_signal; the gap closes below 1e-3 relative by
        // M = 1e6 * p_c/p_b (measured 1.7e-7 there).
        let (n_s, n_b) = (1.0, 1e-3);
        let limit = pie_bound_vanishing_signal(n_s, n_b).unwrap();
        let mut prev = -1.0;
        for k in 0..=20 {
            let v = pie_bound(n_s, n_b, 1u64 << k).unwrap();
            assert!(
                v >= prev,
                "pie_bound must be non-decreasing in M: M=2^{k} gave {v} after {prev}"
            );
            assert!(v <= limit * (1.0 + 1e-12), "bound exceeded its own limit");
            prev = v;
        }
        let (p_c, p_b) = photocount_probabilities(n_s, n_b).unwrap();
        let big = (1e6 * p_c.value() / p_b.value()).ceil() as u64;
        let v = pie_bound(n_s, n_b, big).unwrap();
        assert!(
            (limit - v) / limit < 1e-3,
            "gap at M = {big}: {} (limit {limit})",
            limit - v
        );
    }

    #[test]
    fn pie_decreases_with_noise() {
        for &(lo, hi) in &[(1e-6, 1e-4), (1e-4, 1e-2), (1e-2, 1.0)] {
            let a = pie_bound(0.5, lo, 256).unwrap();
            let b = pie_bound(0.5, hi, 256).unwrap();
            assert!(
                a > b,
                "pie_bound must fall as n_b rises: {a} !> {b} at {lo}->{hi}"
            );
            let a = pie_bound_vanishing_signal(0.5, lo).unwrap();
            let b = pie_bound_vanishing_signal(0.5, hi).unwrap();
            assert!(a > b, "vanishing bound must fall as n_b rises");
        }
    }

    #[test]
    fn lambert_approx_frozen_values() {
        // W(2000) = 5.8367315 gives the classic 5.78 bits/photon at n_b = 1e-3.
        let v = pie_approx_lambert(1e-3).unwrap();
        assert!(
            approx_eq(v, 5.782408660885066, 1e-12),
            "approx(1e-3): expected 5.782408660885066, got {v}"
        );
        // W(20) = 2.2050033 puts the n_b = 0.1 value at 0.9500 bits/photon.
        let v = pie_approx_lambert(1e-1).unwrap();
        assert!(
            approx_eq(v, 0.950039705149620, 1e-12),
            "approx(0.1): expected 0.950039705149620, got {v}"
        );
        // The bracket w - 2 + 1/w has its root at w = 1, i.e. n_b = 2/e.
        let v = pie_approx_lambert(2.0 / std::f64::consts::E).unwrap();
        assert!(v.abs() < 1e-12, "approx(2/e) must vanish: got {v}");
        assert!(!approx_domain_exceeded(0.1));
        assert!(approx_domain_exceeded(2.0 / std::f64::consts::E));
        assert!(approx_domain_exceeded(2.0));
        assert!(pie_approx_lambert(0.0).is_err());
        assert!(pie_approx_lambert(-1.0).is_err());
    }

    #[test]
    fn approx_bracket_is_never_negative() {
        // w + 1/w >= 2 for all w > 0 (AM-GM), so the approximation is
        // non-negative everywhere, including far outside its domain.
        for i in 0..400 {
            let n_b = 10f64.powf(-8.0 + 10.0 * (i as f64) / 399.0);
            let v = pie_approx_lambert(n_b).unwrap();
            assert!(v >= -1e-15, "approx({n_b:e}) went negative: {v}");
        }
    }

    #[test]
    fn coherent_limit_values() {
        let v = coherent_detection_limit(0.0).unwrap();
        assert!(
            approx_eq(v, 2.885390081777927, 1e-14),
            "coherent(0) = 2 log2 e: got {v}"
        );
        assert!(approx_eq(
            coherent_detection_limit(1.0).unwrap(),
            std::f64::consts::LOG2_E,
            1e-14
        ));
        assert!(approx_eq(
            coherent_detection_limit(9.0).unwrap(),
            0.288539008177793,
            1e-14
        ));
        assert!(coherent_detection_limit(-0.5).is_err());
    }

    #[test]
    fn noiseless_ceiling() {
        assert!((noiseless_pie(1024).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(noiseless_pie(1).unwrap(), 0.0);
        assert!(noiseless_pie(0).is_err());
    }

    #[test]
    fn noiseless_recovery_bound() {
        // n_b ~ 0: pie_bound rises with M and stays under log2(M) * p_c/n_s.
        let (n_s, n_b) = (1e-6, 1e-12);
        let (p_c, _) = photocount_probabilities(n_s, n_b).unwrap();
        let ceiling_scale = p_c.value() / n_s;
        let mut prev = 0.0;
        for k in 1..=20 {
            let m = 1u64 << k;
            let v = pie_bound(n_s, n_b, m).unwrap();
            assert!(v > prev, "must increase with M at 2^{k}");
            let ceiling = (m as f64).log2() * ceiling_scale;
            assert!(
                v <= ceiling,
                "pie_bound {v} above noiseless ceiling {ceiling} at M = 2^{k}"
            );
            prev = v;
        }
    }

    #[test]
    fn operating_point_and_format_validation() {
        assert!(OperatingPoint::new(-1e-3, 0.0).is_err());
        assert!(OperatingPoint::new(0.0, f64::NAN).is_err());
        assert!(OperatingPoint::new(0.0, 0.0).is_ok());
        assert!(ModulationFormat::new(0, 1.0).is_err());
        assert!(ModulationFormat::new(4, 1e-13).is_err());
        let point = OperatingPoint::new(2e-3, 1e-4).unwrap();
        let fmt = ModulationFormat::from_point(256, &point).unwrap();
        assert_eq!(fmt.n_s, 256.0 * 2e-3);
    }
}
