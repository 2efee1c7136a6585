//! Photon information efficiency (PIE) limits of photon-counting optical
//! links under background noise.
//!
//! A pulse-position-style format spreads each symbol over M slots and puts
//! its energy into one of them; a Geiger-mode detector reports a click per
//! slot. This crate computes a tight lower bound on the information carried
//! per detected signal photon at a given operating point, optimizes the
//! format order, certifies the bound against the channel's exact mutual
//! information, and turns the result into deep-space link budgets.
//!
//! - [`model`]: click statistics, the reduction bound, its vanishing-signal
//!   limit, a closed-form Lambert-W approximation, and the coherent-detection
//!   reference.
//! - [`optimize`]: certified integer optimization of the format order,
//!   the vanishing-signal optimum, and parallel grid sweeps.
//! - [`oracle`]: exact mutual information of the M-slot photocount channel
//!   and bound certification.
//! - [`link`]: free-space geometry, detected flux, rate optimization, and
//!   variable-bandwidth range scaling.
//! - [`math`]: Lambert W, complement-carrying probabilities, and binary
//!   relative entropy.
//!
//! All quantities are dimensionless photon counts per slot unless a name
//! says otherwise; information is in bits.

pub mod error;
pub mod link;
pub mod math;
pub mod model;
pub mod optimize;
pub mod oracle;

pub use error::{Error, Result};
pub use link::{
    channel_transmission, design_variable_bandwidth, information_rate, wavelength_to_frequency,
    LinkAnalysis, LinkGeometry, ASTRONOMICAL_UNIT_M, PLANCK, SPEED_OF_LIGHT,
};
pub use math::{binary_relative_entropy, lambert_w0, lambert_w0_asymptotic, Probability};
pub use model::{
    approx_domain_exceeded, coherent_detection_limit, noiseless_pie, photocount_probabilities,
    pie_approx_lambert, pie_bound, pie_bound_at, pie_bound_vanishing_signal, ModulationFormat,
    OperatingPoint,
};
pub use optimize::{
    log_spaced, optimize_format_order, optimize_format_order_capped, optimize_vanishing_signal,
    sweep, LimitResult, PieResult, SweepGrid,
};
pub use oracle::{certify_bound, exact_mutual_information, Certification, ChannelSpec};
