//! Fading and noise sampling.
//!
//! Both mirror states see independent circularly-symmetric complex Gaussian
//! channels with unit variance (Rayleigh magnitude). Receiver noise is complex
//! Gaussian with total variance `N0 = 1 / snr`, split evenly between the real
//! and imaginary parts.
//!
//! Gaussian variates come from the ziggurat sampler in `rand_distr`
//! ([`StandardNormal`]) driven by a ChaCha8 generator. Every [`RngStream`] is
//! addressed by a `(seed, stream_id)` pair: the seed keys the generator and the
//! stream id selects one of ChaCha's 2^64 disjoint streams, so substreams never
//! overlap and can be consumed in any order.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

/// Complex baseband amplitude.
pub type ComplexSample = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("SNR must be positive and finite, got {0}")]
    NonPositiveSnr(f64),
    #[error("dB value must be finite, got {0}")]
    NonFiniteDb(f64),
}

/// Channel realizations seen through the two mirror states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub h0: ComplexSample,
    pub h1: ComplexSample,
}

impl ChannelPair {
    pub fn new(h0: ComplexSample, h1: ComplexSample) -> Self {
        Self { h0, h1 }
    }

    /// Shorthand for two real-valued channels.
    pub fn real(h0: f64, h1: f64) -> Self {
        Self::new(ComplexSample::new(h0, 0.0), ComplexSample::new(h1, 0.0))
    }

    /// `|h0|^2 + |h1|^2`
    pub fn total_gain(&self) -> f64 {
        self.h0.norm_sqr() + self.h1.norm_sqr()
    }
}

/// Signal-to-noise ratio for a unit-power transmitter, `snr = 1 / N0`.
///
/// Always strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr {
    linear: f64,
}

impl Snr {
    pub fn from_linear(linear: f64) -> Result<Self, ChannelError> {
        if linear > 0.0 && linear.is_finite() {
            Ok(Self { linear })
        } else {
            Err(ChannelError::NonPositiveSnr(linear))
        }
    }

    pub fn from_db(db: f64) -> Result<Self, ChannelError> {
        if !db.is_finite() {
            return Err(ChannelError::NonFiniteDb(db));
        }
        Self::from_linear(db_to_linear(db))
    }

    pub fn linear(self) -> f64 {
        self.linear
    }

    pub fn db(self) -> f64 {
        10.0 * self.linear.log10()
    }

    /// Noise variance `N0`.
    pub fn noise_variance(self) -> f64 {
        1.0 / self.linear
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> Result<f64, ChannelError> {
    if linear > 0.0 {
        Ok(10.0 * linear.log10())
    } else {
        Err(ChannelError::NonPositiveSnr(linear))
    }
}

/// A reproducible random substream.
///
/// Equal `(seed, stream_id)` pairs yield bit-identical sequences. A stream is
/// owned by exactly one worker; it is `Send` but deliberately not shared.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform random bit.
    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u32() >> 31) as u8
    }

    /// Circularly-symmetric complex Gaussian with the given total variance.
    pub fn complex_gaussian(&mut self, variance: f64) -> ComplexSample {
        let scale = (0.5 * variance).sqrt();
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        ComplexSample::new(scale * re, scale * im)
    }

    /// Unit-variance complex Gaussian, i.e. one Rayleigh fading coefficient.
    pub fn rayleigh(&mut self) -> ComplexSample {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        ComplexSample::new(FRAC_1_SQRT_2 * re, FRAC_1_SQRT_2 * im)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws an independent Rayleigh pair `(h0, h1)`, each `CN(0, 1)`.
pub fn sample_channel_pair(rng: &mut RngStream) -> ChannelPair {
    let h0 = rng.rayleigh();
    let h1 = rng.rayleigh();
    ChannelPair { h0, h1 }
}

/// Draws receiver noise `z ~ CN(0, 1/snr)`.
pub fn sample_noise(rng: &mut RngStream, snr: Snr) -> ComplexSample {
    rng.complex_gaussian(snr.noise_variance())
}
