//! Link-level simulation and closed-form BER analysis of binary media-based
//! modulation (open- and closed-loop) against SISO, MRC and Alamouti BPSK
//! baselines over Rayleigh fading.

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod engine;
pub mod schemes;

pub use channel::{ChannelPair, ComplexSample, RngStream, Snr};
pub use engine::{BerCurve, BerPoint, SimConfig};
pub use schemes::{SchemeId, WeightPair};
