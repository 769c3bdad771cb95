//! Monte Carlo BER estimation.
//!
//! Each `(scheme, snr)` point is simulated in fixed-size chunks. Chunk `k`
//! draws from its own substream keyed by `(seed, scheme, snr index, k)`, and
//! chunk results are accumulated in index order until the error target or the
//! trial budget is reached. Chunks may be evaluated speculatively in parallel;
//! anything past the stopping chunk is discarded, so the result never depends
//! on how many workers ran.

use crate::analytic::{self, AnalyticError, FitWindow};
use crate::channel::{sample_channel_pair, ComplexSample, RngStream, Snr};
use crate::schemes::{self, SchemeId, WeightPair};
use rayon::prelude::*;
use thiserror::Error;

pub const DEFAULT_MIN_ERRORS: u64 = 500;
pub const DEFAULT_MAX_TRIALS: u64 = 100_000_000;
pub const DEFAULT_CHUNK_SIZE: u64 = 100_000;
/// Confidence level of the reported Wilson intervals.
pub const CI_LEVEL: f64 = 0.99;

const SCHEME_SHIFT: u32 = 56;
const SNR_SHIFT: u32 = 40;
const MAX_SNR_POINTS: usize = 1 << (SCHEME_SHIFT - SNR_SHIFT);
const MAX_CHUNKS: u64 = 1 << SNR_SHIFT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("{0} is not a closed-loop MBM scheme")]
    NotClosedLoop(SchemeId),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Snr(#[from] crate::channel::ChannelError),
}

/// Sweep definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub schemes: Vec<SchemeId>,
    pub snr_grid_db: Vec<f64>,
    pub seed: u64,
    pub min_errors: u64,
    pub max_trials: u64,
    pub chunk_size: u64,
}

impl SimConfig {
    pub fn new(schemes: Vec<SchemeId>, snr_grid_db: Vec<f64>, seed: u64) -> Self {
        Self {
            schemes,
            snr_grid_db,
            seed,
            min_errors: DEFAULT_MIN_ERRORS,
            max_trials: DEFAULT_MAX_TRIALS,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.schemes.is_empty() {
            return bad("no schemes selected");
        }
        if self.snr_grid_db.is_empty() {
            return bad("empty SNR grid");
        }
        if self.snr_grid_db.len() > MAX_SNR_POINTS {
            return bad("too many SNR points");
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return bad("SNR grid contains a non-finite value");
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return bad("SNR grid must be strictly increasing");
        }
        if self.min_errors < 1 {
            return bad("min_errors must be at least 1");
        }
        if self.chunk_size < 1 {
            return bad("chunk_size must be at least 1");
        }
        if self.max_trials < self.chunk_size {
            return bad("max_trials must be at least chunk_size");
        }
        if self.max_trials.div_ceil(self.chunk_size) > MAX_CHUNKS {
            return bad("max_trials / chunk_size exceeds the substream space");
        }
        Ok(())
    }
}

/// Simulated BER at one SNR with its 99% Wilson interval and the closed-form
/// reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub scheme: SchemeId,
    pub errors: u64,
    pub trials: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic: f64,
}

impl BerPoint {
    pub fn analytic_within_ci(&self) -> bool {
        self.ci_low <= self.analytic && self.analytic <= self.ci_high
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub scheme: SchemeId,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// Diversity order fitted to the simulated BER.
    pub fn diversity_order(&self, window: FitWindow) -> Result<f64, AnalyticError> {
        analytic::estimate_diversity_order(self.points.iter().map(|p| (p.snr_db, p.ber)), window)
    }
}

/// Standard normal quantile, by bisection on `Φ(x) = erfc(-x/√2)/2`.
fn normal_quantile(p: f64) -> f64 {
    let cdf = |x: f64| 0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2);
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_ci(errors: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1, "wilson_ci needs at least one trial");
    assert!(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    let z = normal_quantile(0.5 + 0.5 * confidence);
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2n = z * z / n;
    let center = (p + 0.5 * z2n) / (1.0 + z2n);
    let half = z * (p * (1.0 - p) / n + 0.25 * z2n / n).sqrt() / (1.0 + z2n);
    let lo = if errors == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if errors == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    (lo, hi)
}

/// Substream id of chunk 0 for a `(scheme, snr index)` point.
pub fn point_stream_id(scheme: SchemeId, snr_index: usize) -> u64 {
    ((scheme.index() as u64) << SCHEME_SHIFT) | ((snr_index as u64) << SNR_SHIFT)
}

fn count_errors(trials: u64, rng: &mut RngStream, mut link: impl FnMut(u8, &mut RngStream) -> u8) -> u64 {
    let mut errors = 0u64;
    for _ in 0..trials {
        let bit = rng.bit();
        errors += u64::from(link(bit, rng) != bit);
    }
    errors
}

/// Counts bit errors over `trials` independent channel uses.
fn run_chunk(scheme: SchemeId, snr: Snr, trials: u64, rng: &mut RngStream) -> u64 {
    let n0 = snr.noise_variance();
    match scheme {
        SchemeId::SisoBpsk => count_errors(trials, rng, |bit, rng| {
            let h = rng.rayleigh();
            schemes::siso_bpsk_transceive(bit, h, rng.complex_gaussian(n0))
        }),
        SchemeId::MrcBpsk => count_errors(trials, rng, |bit, rng| {
            let ch = sample_channel_pair(rng);
            schemes::mrc_bpsk_transceive(bit, &ch, rng.complex_gaussian(n0))
        }),
        SchemeId::OpenLoopBmbm => count_errors(trials, rng, |bit, rng| {
            let ch = sample_channel_pair(rng);
            schemes::transceive_mbm(bit, &ch, &WeightPair::IDENTITY, rng.complex_gaussian(n0))
        }),
        SchemeId::ClosedLoopBmbm => count_errors(trials, rng, |bit, rng| {
            let ch = sample_channel_pair(rng);
            let w = schemes::cl_optimal_weights(&ch).weights;
            schemes::transceive_mbm(bit, &ch, &w, rng.complex_gaussian(n0))
        }),
        SchemeId::ClosedLoopUnitAmpBmbm => count_errors(trials, rng, |bit, rng| {
            let ch = sample_channel_pair(rng);
            let w = schemes::cl_unitamp_weights(&ch).weights;
            schemes::transceive_mbm(bit, &ch, &w, rng.complex_gaussian(n0))
        }),
        SchemeId::AlamoutiBpsk => {
            // One block carries two bits over a shared channel; both are scored.
            let (mut errors, mut done) = (0u64, 0u64);
            while done < trials {
                let bits = [rng.bit(), rng.bit()];
                let ch = sample_channel_pair(rng);
                let z = [rng.complex_gaussian(n0), rng.complex_gaussian(n0)];
                let out = schemes::alamouti_block_transceive(bits, &ch, z);
                errors += u64::from(out[0] != bits[0]);
                done += 1;
                if done < trials {
                    errors += u64::from(out[1] != bits[1]);
                    done += 1;
                }
            }
            errors
        }
    }
}

/// Simulates one `(scheme, snr)` point. Chunk `k` uses substream
/// `stream.stream_id() + k` under `stream.seed()`.
pub fn run_point(scheme: SchemeId, snr: Snr, cfg: &SimConfig, stream: &RngStream) -> BerPoint {
    let n_chunks = cfg.max_trials.div_ceil(cfg.chunk_size);
    let chunk_len = |k: u64| cfg.chunk_size.min(cfg.max_trials - k * cfg.chunk_size);
    let wave = rayon::current_num_threads().max(1) as u64;

    let (mut errors, mut trials) = (0u64, 0u64);
    let mut next = 0u64;
    'outer: while next < n_chunks {
        let end = (next + wave).min(n_chunks);
        let results: Vec<(u64, u64)> = (next..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = RngStream::new(stream.seed(), stream.stream_id() + k);
                let len = chunk_len(k);
                (run_chunk(scheme, snr, len, &mut rng), len)
            })
            .collect();
        for (e, t) in results {
            errors += e;
            trials += t;
            if errors >= cfg.min_errors {
                break 'outer;
            }
        }
        next = end;
    }

    let (ci_low, ci_high) = wilson_ci(errors, trials, CI_LEVEL);
    BerPoint {
        snr_db: snr.db(),
        scheme,
        errors,
        trials,
        ber: errors as f64 / trials as f64,
        ci_low,
        ci_high,
        analytic: analytic::ber_exact(scheme, snr),
    }
}

/// Runs every configured scheme over the SNR grid on the current rayon pool.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerCurve>, EngineError> {
    cfg.validate()?;
    let snrs = cfg
        .snr_grid_db
        .iter()
        .map(|&db| Snr::from_db(db))
        .collect::<Result<Vec<_>, _>>()?;
    let curves = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let points = snrs
                .iter()
                .zip(&cfg.snr_grid_db)
                .enumerate()
                .map(|(i, (&snr, &db))| {
                    let stream = RngStream::new(cfg.seed, point_stream_id(scheme, i));
                    BerPoint {
                        snr_db: db,
                        ..run_point(scheme, snr, cfg, &stream)
                    }
                })
                .collect();
            BerCurve { scheme, points }
        })
        .collect();
    Ok(curves)
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(cfg: &SimConfig, workers: usize) -> Result<Vec<BerCurve>, EngineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    pool.install(|| run_sweep(cfg))
}

/// Average weight power `E[|w|^2]` over `n` channel draws with equiprobable
/// bits, for an arbitrary weight rule.
pub fn mean_weight_power(
    n: u64,
    stream: &mut RngStream,
    weights: impl Fn(&crate::channel::ChannelPair) -> WeightPair,
) -> f64 {
    let mut acc = 0.0;
    for _ in 0..n {
        let ch = sample_channel_pair(stream);
        let w = weights(&ch);
        let chosen: ComplexSample = if stream.bit() == 0 { w.w0 } else { w.w1 };
        acc += chosen.norm_sqr();
    }
    acc / n as f64
}

/// Average weight power of a closed-loop MBM scheme.
pub fn empirical_weight_power(scheme: SchemeId, n: u64, stream: &mut RngStream) -> Result<f64, EngineError> {
    match scheme {
        SchemeId::ClosedLoopBmbm => Ok(mean_weight_power(n, stream, |ch| {
            schemes::cl_optimal_weights(ch).weights
        })),
        SchemeId::ClosedLoopUnitAmpBmbm => Ok(mean_weight_power(n, stream, |ch| {
            schemes::cl_unitamp_weights(ch).weights
        })),
        other => Err(EngineError::NotClosedLoop(other)),
    }
}
