//! Scalar special functions and probability arithmetic.
//!
//! Everything downstream reduces to three primitives: the principal branch
//! of the Lambert W function, the binary relative entropy
//! D(p||q) = p log2(p/q) + (1-p) log2((1-p)/(1-q)), and probabilities of the
//! form 1 - exp(-mu) evaluated without cancellation. Probabilities carry
//! their complement explicitly so that expressions near 0 and near 1 stay
//! at full relative precision.

use crate::error::{check_nonneg, Error, Result};

/// Relative tolerance targeted by [`lambert_w0`]: |w e^w - x| <= TOL * x.
pub const LAMBERT_TOLERANCE: f64 = 1e-12;

// ----------------------------------------------------------------
// Lambert W, principal branch
// ----------------------------------------------------------------

/// Principal branch W0 of the Lambert W function for x >= 0.
///
/// Solves w e^w = x by Halley iteration from a regime-dependent initial
/// guess: the series w ~ x(1 - x) below 0.5, ln(1 + x) in the transition
/// band, and ln x - ln ln x + ln ln x / ln x above. Convergence is cubic;
/// five iterations reach machine precision everywhere on the domain.
pub fn lambert_w0(x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    // w = x is already within eps of the root when x^2 is below rounding.
    if x < 1e-16 {
        return Ok(x);
    }

    let mut w = if x < 0.5 {
        x * (1.0 - x)
    } else if x < 3.0 {
        x.ln_1p()
    } else {
        let l = x.ln();
        let ll = l.ln();
        l - ll + ll / l
    };

    for _ in 0..20 {
        let ew = w.exp();
        let f = w * ew - x;
        // Converge well past the advertised tolerance; the residual is
        // relative to x so small arguments are held to the same standard.
        if f.abs() <= 1e-14 * x {
            break;
        }
        // Halley step for f(w) = w e^w - x.
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// Leading asymptotic expansion W0(x) ~ ln x - ln ln x, valid for x > e.
pub fn lambert_w0_asymptotic(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= std::f64::consts::E {
        return Err(Error::domain("x", x, "finite and > e"));
    }
    let l = x.ln();
    Ok(l - l.ln())
}

// ----------------------------------------------------------------
// Probabilities with explicit complements
// ----------------------------------------------------------------

/// A probability stored together with its complement.
///
/// Both halves are kept at full relative precision, which is what makes
/// divergences well conditioned when the underlying rates push p toward
/// 0 (complement ~ 1) or toward 1 (complement ~ e^-mu, far below the
/// resolution of 1 - p in f64).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    value: f64,
    complement: f64,
}

impl Probability {
    pub const ZERO: Probability = Probability {
        value: 0.0,
        complement: 1.0,
    };
    pub const ONE: Probability = Probability {
        value: 1.0,
        complement: 0.0,
    };

    /// Probability from a plain value in [0, 1].
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::domain("probability", value, "within [0, 1]"));
        }
        Ok(Probability {
            value,
            complement: 1.0 - value,
        })
    }

    /// The click probability 1 - exp(-mu) of a Poisson process with mean mu.
    ///
    /// Value and complement are computed as -expm1(-mu) and exp(-mu), so both
    /// are exact to rounding even for mu down to 1e-300 or up past 700.
    pub fn from_neg_exp(mu: f64) -> Result<Self> {
        check_nonneg("mu", mu)?;
        Ok(Probability {
            value: -(-mu).exp_m1(),
            complement: (-mu).exp(),
        })
    }

    /// Convex mixture w * a + (1 - w) * b, mixing complements alongside.
    ///
    /// Complements mix with the same weights, so no cancellation occurs at
    /// either end of the interval. With w = 1 the result is bit-identical
    /// to `a`.
    pub fn mix(a: Probability, b: Probability, w: f64) -> Result<Self> {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::domain("mixture weight", w, "within [0, 1]"));
        }
        Ok(Probability {
            value: w * a.value + (1.0 - w) * b.value,
            complement: w * a.complement + (1.0 - w) * b.complement,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn complement(&self) -> f64 {
        self.complement
    }

    /// ln of the value, routed through whichever half is well conditioned.
    pub fn ln(&self) -> f64 {
        if self.value <= 0.5 {
            self.value.ln()
        } else {
            (-self.complement).ln_1p()
        }
    }

    /// ln of the complement.
    pub fn ln_complement(&self) -> f64 {
        if self.complement <= 0.5 {
            self.complement.ln()
        } else {
            (-self.value).ln_1p()
        }
    }
}

// ----------------------------------------------------------------
// Binary relative entropy
// ----------------------------------------------------------------

/// ln(num/den) given num = den + delta, accurate on both sides of 1.
///
/// Near-unity ratios go through ln_1p of the increment so the leading
/// digits of num and den never collide inside a logarithm; distant ratios
/// take the ratio first, keeping |ln| small no matter how tiny the halves
/// are in absolute terms.
fn ln_ratio(num: f64, delta: f64, den: f64) -> f64 {
    let r = delta / den;
    if r.abs() <= 0.5 {
        r.ln_1p()
    } else {
        (num / den).ln()
    }
}

/// Binary relative entropy D(p || q) in bits.
///
/// The two log terms cancel to second order when p ~ q, so both are built
/// from one shared difference delta = p - q, itself taken through whichever
/// halves of the operands are below 1/2. That keeps the result accurate in
/// the chi-square regime D ~ delta^2 where independent logarithms would
/// drown it in rounding noise.
///
/// Zero-mass terms follow the usual convention 0 log 0 = 0; mass in p
/// where q has none is the typed error [`Error::InfiniteDivergence`].
pub fn binary_relative_entropy(p: Probability, q: Probability) -> Result<f64> {
    if p.value() > 0.0 && q.value() == 0.0 {
        return Err(Error::InfiniteDivergence {
            p: p.value(),
            q: q.value(),
        });
    }
    if p.complement() > 0.0 && q.complement() == 0.0 {
        return Err(Error::InfiniteDivergence {
            p: p.value(),
            q: q.value(),
        });
    }
    let delta = if p.value() <= 0.5 || q.value() <= 0.5 {
        p.value() - q.value()
    } else {
        q.complement() - p.complement()
    };
    let mut nats = 0.0;
    if p.value() > 0.0 {
        nats += p.value() * ln_ratio(p.value(), delta, q.value());
    }
    if p.complement() > 0.0 {
        nats += p.complement() * ln_ratio(p.complement(), -delta, q.complement());
    }
    // Gibbs' inequality: the true divergence is nonnegative; rounding of
    // the two canceling terms can land a hair below zero when p ~ q.
    Ok(nats.max(0.0) * std::f64::consts::LOG2_E)
}

// ----------------------------------------------------------------
// Tests
// ----------------------------------------------------------------
