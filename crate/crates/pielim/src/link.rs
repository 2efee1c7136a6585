//! Deep-space link budgets on top of the optimized photon bound.
//!
//! A diffraction-limited free-space link concentrates transmit power onto
//! the receive aperture with efficiency eta_ch = (pi D_tx D_rx f_c / (4 c
//! r))^2 (reported as-is, with a flag, when the far-field formula exceeds
//! 1), so the detected signal flux per slot of duration 1/B is
//!
//! ```text
//! n_a = eta_rx eta_ch P_tx / (B h f_c)
//! ```
//!
//! and the bit rate at the optimized format order is B n_a PIE*. Range
//! enters the arithmetic exactly once, as a final division, so doubling r
//! divides eta_ch, n_a, and the rate by exactly 4 in floating point as well
//! as on paper — a property the tests pin down bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, Error, Result};
use crate::model::OperatingPoint;
use crate::optimize::optimize_format_order_capped;

/// Planck constant, J s (2019 SI exact value).
pub const PLANCK: f64 = 6.62607015e-34;

/// Speed of light in vacuum, m/s (SI exact value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One astronomical unit, m (IAU 2012 definition).
pub const ASTRONOMICAL_UNIT_M: f64 = 1.495_978_707e11;

/// Physical description of one direct-detection downlink.
///
/// Field names double as the serialized keys, with units spelled out in the
/// suffix. Carrier frequency is stored directly; convert a wavelength with
/// [`wavelength_to_frequency`] first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Average transmit power, W.
    pub p_tx_w: f64,
    /// Transmit aperture diameter, m.
    pub d_tx_m: f64,
    /// Receive aperture diameter, m.
    pub d_rx_m: f64,
    /// Carrier frequency, Hz.
    pub f_c_hz: f64,
    /// Transmitter-receiver distance, m.
    pub range_m: f64,
    /// Receiver end-to-end efficiency (optics times detector), in (0, 1].
    pub eta_rx: f64,
    /// Slot bandwidth, Hz; slots last 1/B.
    pub bandwidth_hz: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 6] = [
            ("p_tx_w", self.p_tx_w),
            ("d_tx_m", self.d_tx_m),
            ("d_rx_m", self.d_rx_m),
            ("f_c_hz", self.f_c_hz),
            ("range_m", self.range_m),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::domain(name, value, "finite and positive"));
            }
        }
        if !self.eta_rx.is_finite() || self.eta_rx <= 0.0 || self.eta_rx > 1.0 {
            return Err(Error::domain("eta_rx", self.eta_rx, "within (0, 1]"));
        }
        Ok(())
    }
}

/// Converts a vacuum wavelength in meters to a carrier frequency in Hz.
pub fn wavelength_to_frequency(wavelength_m: f64) -> Result<f64> {
    if !wavelength_m.is_finite() || wavelength_m <= 0.0 {
        return Err(Error::domain(
            "wavelength_m",
            wavelength_m,
            "finite and positive",
        ));
    }
    Ok(SPEED_OF_LIGHT / wavelength_m)
}

/// Far-field power transfer efficiency and a near-field flag.
///
/// A value above 1 means the apertures are too close for the diffraction
/// formula; it is reported as-is with the flag raised rather than clamped,
/// so misuse stays visible.
///
/// Range participates only in the final division, which keeps power-of-two
/// range scalings exact in floating point.
pub fn channel_transmission(geometry: &LinkGeometry) -> Result<(f64, bool)> {
    geometry.validate()?;
    let focusing = std::f64::consts::PI * geometry.d_tx_m * geometry.d_rx_m * geometry.f_c_hz
        / (4.0 * SPEED_OF_LIGHT);
    let eta_ch = (focusing / geometry.range_m).powi(2);
    Ok((eta_ch, eta_ch > 1.0))
}

/// Detected signal photons per slot for a given transfer efficiency.
pub fn detected_signal_photons(geometry: &LinkGeometry, eta_ch: f64) -> f64 {
    geometry.eta_rx * eta_ch * geometry.p_tx_w / (geometry.bandwidth_hz * PLANCK * geometry.f_c_hz)
}

/// Slot duration that loads `n_s` detected photons onto one pulse.
pub fn optimal_symbol_duration(geometry: &LinkGeometry, n_s: f64, eta_ch: f64) -> f64 {
    n_s * PLANCK * geometry.f_c_hz / (geometry.eta_rx * eta_ch * geometry.p_tx_w)
}

/// Full budget at one geometry: flux, optimized format, and bit rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkAnalysis {
    /// Free-space power transfer efficiency, straight from the far-field
    /// formula even when it exceeds 1.
    pub eta_ch: f64,
    /// True when eta_ch came out above 1: the apertures are inside each
    /// other's near field and the diffraction formula does not apply.
    pub near_field: bool,
    /// Detected signal photons per slot.
    pub n_a: f64,
    /// Background photons per slot.
    pub n_b: f64,
    /// Optimized bound, bits per detected signal photon.
    pub pie_star: f64,
    /// Optimal format order.
    pub m_star: u64,
    /// Detected photons per pulse at the optimum.
    pub n_s_star: f64,
    /// Symbol (frame) duration at the optimum, s.
    pub t_s_star: f64,
    /// Data rate at the optimum, bits/s.
    pub rate_bps: f64,
    /// Background photons detected per frame: m_star * n_b.
    pub background_counts_per_frame: f64,
    /// Carried over from the order optimization.
    pub converged: bool,
}

/// Evaluates the budget and maximizes the rate over the format order.
///
/// The rate is recomputed through the closed form
/// pie eta_rx P_tx pi^2 D_tx^2 D_rx^2 f_c / (16 h c^2 r^2) as an internal
/// consistency check; disagreement beyond 1e-12 relative reports
/// [`Error::Inconsistent`] rather than returning a silently wrong budget.
pub fn information_rate(
    geometry: &LinkGeometry,
    n_b: f64,
    m_cap: Option<u64>,
) -> Result<LinkAnalysis> {
    check_nonneg("n_b", n_b)?;
    let (eta_ch, near_field) = channel_transmission(geometry)?;
    let n_a = detected_signal_photons(geometry, eta_ch);

    let point = OperatingPoint::new(n_a, n_b)?;
    let opt = optimize_format_order_capped(&point, m_cap)?;

    let rate_bps = geometry.bandwidth_hz * n_a * opt.pie_star;
    {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let aperture_gain =
            pi2 * geometry.d_tx_m * geometry.d_tx_m * geometry.d_rx_m * geometry.d_rx_m
                / (16.0 * PLANCK * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
        let closed_form =
            opt.pie_star * geometry.eta_rx * geometry.p_tx_w * geometry.f_c_hz * aperture_gain
                / (geometry.range_m * geometry.range_m);
        let scale = rate_bps.abs().max(closed_form.abs()).max(f64::MIN_POSITIVE);
        if ((rate_bps - closed_form) / scale).abs() > 1e-12 {
            return Err(Error::Inconsistent {
                what: "information rate (slot form vs closed form)",
                a: rate_bps,
                b: closed_form,
            });
        }
    }

    Ok(LinkAnalysis {
        eta_ch,
        near_field,
        n_a,
        n_b,
        pie_star: opt.pie_star,
        m_star: opt.m_star,
        n_s_star: opt.n_s_star,
        t_s_star: optimal_symbol_duration(geometry, opt.n_s_star, eta_ch),
        rate_bps,
        background_counts_per_frame: opt.m_star as f64 * n_b,
        converged: opt.converged,
    })
}

/// Re-plans the link for a new range by scaling the slot bandwidth so the
/// detected flux per slot stays at `n_a_target`.
///
/// The operating point — and with it M*, PIE*, and n_s* — is preserved
/// exactly; only the clock slows, so the rate falls with the free-space
/// loss alone (r^-2). An optional hardware bandwidth cap turns an
/// unrealizable plan into [`Error::BandwidthCap`].
pub fn design_variable_bandwidth(
    geometry: &LinkGeometry,
    n_a_target: f64,
    n_b: f64,
    range_new_m: f64,
    bandwidth_cap_hz: Option<f64>,
) -> Result<(LinkGeometry, LinkAnalysis)> {
    if !n_a_target.is_finite() || n_a_target <= 0.0 {
        return Err(Error::domain(
            "n_a_target",
            n_a_target,
            "finite and positive",
        ));
    }
    let mut scaled = *geometry;
    scaled.range_m = range_new_m;
    let (eta_ch, _) = channel_transmission(&scaled)?;
    let bandwidth =
        eta_ch * (geometry.eta_rx * geometry.p_tx_w / (n_a_target * PLANCK * geometry.f_c_hz));
    if let Some(cap) = bandwidth_cap_hz {
        if bandwidth > cap {
            return Err(Error::BandwidthCap {
                required_hz: bandwidth,
                cap_hz: cap,
            });
        }
    }
    scaled.bandwidth_hz = bandwidth;
    let analysis = information_rate(&scaled, n_b, None)?;
    Ok((scaled, analysis))
}

// ----------------------------------------------------------------
// Tests
// ----------------------------------------------------------------
