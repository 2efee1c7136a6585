//! Scenario files and the small parsers behind the CLI flags.
//!
//! A scenario is a JSON document with every physical quantity carrying its
//! unit in the key name (`range_m`, `p_tx_w`, `bandwidth_hz`, ...), because
//! silent unit mismatches are the classic way to wreck a link budget. The
//! carrier may be given either as `f_c_hz` or as `wavelength_m`, never both.
//! Unknown keys are rejected so a typo cannot quietly fall back to a default.

use pielim::{log_spaced, wavelength_to_frequency, LinkGeometry, ASTRONOMICAL_UNIT_M};
use serde::{Deserialize, Serialize};
use std::path::Path;

// ----------------------------------------------------------------
// Scenario document
// ----------------------------------------------------------------

/// Top-level scenario document. Every section is optional; each subcommand
/// checks for the pieces it needs and names what is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Link hardware and geometry (used by `link`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
    /// Background photons per slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<f64>,
    /// Signal axis for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_a_axis: Option<AxisSpec>,
    /// Background axis for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b_axis: Option<AxisSpec>,
    /// Optional hardware limit on the format order search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_cap: Option<u64>,
    /// Preferred output rendering; the `--json` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

/// Output rendering selectable from inside a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Human,
    Json,
}

/// Serialized form of a link geometry. Identical to [`LinkGeometry`] except
/// that the carrier may be written as a wavelength instead of a frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Average transmit power, W.
    pub p_tx_w: f64,
    /// Transmit aperture diameter, m.
    pub d_tx_m: f64,
    /// Receive aperture diameter, m.
    pub d_rx_m: f64,
    /// Carrier frequency, Hz (exclusive with `wavelength_m`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_c_hz: Option<f64>,
    /// Vacuum carrier wavelength, m (exclusive with `f_c_hz`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
    /// Transmitter-receiver distance, m.
    pub range_m: f64,
    /// Receiver end-to-end efficiency, in (0, 1].
    pub eta_rx: f64,
    /// Slot bandwidth, Hz.
    pub bandwidth_hz: f64,
}

impl GeometrySpec {
    /// Resolves the carrier and validates every field, returning a ready
    /// [`LinkGeometry`]. All failures are worded as user errors.
    pub fn resolve(&self) -> Result<LinkGeometry, String> {
        let f_c_hz = match (self.f_c_hz, self.wavelength_m) {
            (Some(f), None) => f,
            (None, Some(lambda)) => wavelength_to_frequency(lambda).map_err(|e| e.to_string())?,
            (Some(_), Some(_)) => {
                return Err(
                    "geometry specifies both f_c_hz and wavelength_m; keep exactly one".into(),
                )
            }
            (None, None) => {
                return Err("geometry needs a carrier: set either f_c_hz or wavelength_m".into())
            }
        };
        let geometry = LinkGeometry {
            p_tx_w: self.p_tx_w,
            d_tx_m: self.d_tx_m,
            d_rx_m: self.d_rx_m,
            f_c_hz,
            range_m: self.range_m,
            eta_rx: self.eta_rx,
            bandwidth_hz: self.bandwidth_hz,
        };
        geometry.validate().map_err(|e| e.to_string())?;
        Ok(geometry)
    }
}

/// Reads and parses a scenario file, turning I/O and schema problems into
/// messages that name the file and the offending field.
pub fn load_scenario(path: &Path) -> Result<ScenarioFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read scenario {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid scenario {}: {e}", path.display()))
}

// ----------------------------------------------------------------
// Axes
// ----------------------------------------------------------------

/// A sweep axis, written either as an explicit value list or as a log-spaced
/// range description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    /// Explicit strictly increasing values.
    Values(Vec<f64>),
    /// `points` log-spaced values from `start` to `stop` inclusive.
    Log {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl AxisSpec {
    pub fn resolve(&self, name: &str) -> Result<Vec<f64>, String> {
        let axis = match self {
            AxisSpec::Values(values) => values.clone(),
            AxisSpec::Log {
                start,
                stop,
                points,
            } => log_spaced(*start, *stop, *points).map_err(|e| format!("{name}: {e}"))?,
        };
        validate_axis(name, &axis)?;
        Ok(axis)
    }
}

/// Checks an axis is non-empty, finite, positive, and strictly increasing.
/// Runs before any computation so a bad axis never produces partial output.
pub fn validate_axis(name: &str, axis: &[f64]) -> Result<(), String> {
    if axis.is_empty() {
        return Err(format!("{name} is empty"));
    }
    for &v in axis {
        if !v.is_finite() || v <= 0.0 {
            return Err(format!("{name} values must be finite and > 0, got {v}"));
        }
    }
    for pair in axis.windows(2) {
        if pair[1] <= pair[0] {
            return Err(format!(
                "{name} must be strictly increasing, got {} after {}",
                pair[1], pair[0]
            ));
        }
    }
    Ok(())
}

/// Parses an axis flag. Two spellings are accepted:
/// a log-range `start:stop:points` (e.g. `1e-8:1:50`), or a comma-separated
/// value list (e.g. `1e-3,1e-2,0.1`; a single value makes a one-point axis).
pub fn parse_axis_arg(name: &str, text: &str) -> Result<Vec<f64>, String> {
    let axis = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("{name}: expected start:stop:points, got {text:?}"));
        }
        let start = parse_f64(name, parts[0])?;
        let stop = parse_f64(name, parts[1])?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("{name}: point count {:?} is not an integer", parts[2]))?;
        log_spaced(start, stop, points).map_err(|e| format!("{name}: {e}"))?
    } else {
        text.split(',')
            .map(|tok| parse_f64(name, tok))
            .collect::<Result<Vec<f64>, String>>()?
    };
    validate_axis(name, &axis)?;
    Ok(axis)
}

fn parse_f64(name: &str, token: &str) -> Result<f64, String> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("{name}: {token:?} is not a number"))
}

// ----------------------------------------------------------------
// Range units
// ----------------------------------------------------------------

/// Parses one range value with an optional unit suffix: `m` (default),
/// `km`, or `AU` (1 AU = 1.495978707e11 m). Examples: `1AU`, `2e11m`,
/// `150e6km`, `3.84e8`.
pub fn parse_range_value(token: &str) -> Result<f64, String> {
    let t = token.trim();
    let (number, scale) = if let Some(p) = t.strip_suffix("AU").or_else(|| t.strip_suffix("au")) {
        (p, ASTRONOMICAL_UNIT_M)
    } else if let Some(p) = t.strip_suffix("km") {
        (p, 1e3)
    } else if let Some(p) = t.strip_suffix('m') {
        (p, 1.0)
    } else {
        (t, 1.0)
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("range {token:?} is not a number with optional unit m/km/AU"))?;
    let meters = value * scale;
    if !meters.is_finite() || meters <= 0.0 {
        return Err(format!("range must be finite and > 0, got {token:?}"));
    }
    Ok(meters)
}

/// Parses a comma-separated list of ranges, e.g. `1AU,2AU,4AU`.
pub fn parse_range_list(text: &str) -> Result<Vec<f64>, String> {
    let ranges: Vec<f64> = text
        .split(',')
        .map(parse_range_value)
        .collect::<Result<_, _>>()?;
    if ranges.is_empty() {
        return Err("range list is empty".into());
    }
    Ok(ranges)
}

// ----------------------------------------------------------------
// Tests
// ----------------------------------------------------------------
