//! Transmit mappings, received constellations and detectors.
//!
//! Binary MBM carries one bit per channel use by selecting which of two
//! mirror states the (weighted) signal passes through, so the received
//! constellation is `{w0·h0, w1·h1}`. The BPSK baselines (SISO, MRC-precoded
//! and Alamouti-coded over two antennas) are implemented alongside so that
//! every scheme can be driven through the same simulation engine.

use crate::channel::{ChannelPair, ComplexSample};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown scheme `{0}` (expected one of siso, mrc, alamouti, ol-bmbm, cl-bmbm, cl-unitamp, all)")]
pub struct UnknownScheme(pub String);

/// The six transmission schemes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    SisoBpsk,
    MrcBpsk,
    AlamoutiBpsk,
    OpenLoopBmbm,
    ClosedLoopBmbm,
    ClosedLoopUnitAmpBmbm,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::SisoBpsk,
        SchemeId::MrcBpsk,
        SchemeId::AlamoutiBpsk,
        SchemeId::OpenLoopBmbm,
        SchemeId::ClosedLoopBmbm,
        SchemeId::ClosedLoopUnitAmpBmbm,
    ];

    /// Stable ordinal, used to derive random substreams.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::SisoBpsk => "siso",
            SchemeId::MrcBpsk => "mrc",
            SchemeId::AlamoutiBpsk => "alamouti",
            SchemeId::OpenLoopBmbm => "ol-bmbm",
            SchemeId::ClosedLoopBmbm => "cl-bmbm",
            SchemeId::ClosedLoopUnitAmpBmbm => "cl-unitamp",
        }
    }

    pub fn diversity_order(self) -> u32 {
        match self {
            SchemeId::SisoBpsk | SchemeId::OpenLoopBmbm => 1,
            _ => 2,
        }
    }

    pub fn rf_chains(self) -> u32 {
        match self {
            SchemeId::MrcBpsk | SchemeId::AlamoutiBpsk => 2,
            _ => 1,
        }
    }

    pub fn uses_feedback(self) -> bool {
        matches!(
            self,
            SchemeId::MrcBpsk | SchemeId::ClosedLoopBmbm | SchemeId::ClosedLoopUnitAmpBmbm
        )
    }

    pub fn is_closed_loop_mbm(self) -> bool {
        matches!(
            self,
            SchemeId::ClosedLoopBmbm | SchemeId::ClosedLoopUnitAmpBmbm
        )
    }

    /// Parses a comma-separated list, where `all` expands to every scheme.
    /// The result is in canonical order without duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<SchemeId>, UnknownScheme> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok.eq_ignore_ascii_case("all") {
                out.extend(SchemeId::ALL);
            } else {
                out.push(tok.parse()?);
            }
        }
        if out.is_empty() {
            return Err(UnknownScheme(s.to_string()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownScheme(s.to_string()))
    }
}

/// Multiplicative transmit weights applied before the mirror, one per state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    pub w0: ComplexSample,
    pub w1: ComplexSample,
}

impl WeightPair {
    /// Open-loop operation: both weights equal one.
    pub const IDENTITY: WeightPair = WeightPair {
        w0: ComplexSample::new(1.0, 0.0),
        w1: ComplexSample::new(1.0, 0.0),
    };

    pub fn new(w0: ComplexSample, w1: ComplexSample) -> Self {
        Self { w0, w1 }
    }

    /// `|w0|^2 + |w1|^2`; at most 2 for an admissible pair.
    pub fn power(&self) -> f64 {
        self.w0.norm_sqr() + self.w1.norm_sqr()
    }

    pub fn satisfies_power_constraint(&self) -> bool {
        self.power() <= 2.0 + 1e-9
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.w0 * k, self.w1 * k)
    }

    pub fn constellation(&self, ch: &ChannelPair) -> ConstellationPair {
        ConstellationPair {
            s0: self.w0 * ch.h0,
            s1: self.w1 * ch.h1,
        }
    }
}

/// Weights together with a flag marking a zero-gain channel state, where the
/// closed-form expressions are undefined and a fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightChoice {
    pub weights: WeightPair,
    pub degenerate: bool,
}

/// Received points for bit 0 and bit 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationPair {
    pub s0: ComplexSample,
    pub s1: ComplexSample,
}

impl ConstellationPair {
    pub fn distance(&self) -> f64 {
        (self.s1 - self.s0).norm()
    }
}

/// Open-loop constellation: the two channel realizations themselves.
pub fn ol_constellation(ch: &ChannelPair) -> ConstellationPair {
    WeightPair::IDENTITY.constellation(ch)
}

/// Distance-maximizing weights under `|w0|^2 + |w1|^2 <= 2`.
///
/// Amplitudes are proportional to the channel gains and the phase of `w1`
/// rotates `s1` onto the ray opposite `s0`, so the received distance becomes
/// `sqrt(2) * sqrt(|h0|^2 + |h1|^2)`.
pub fn cl_optimal_weights(ch: &ChannelPair) -> WeightChoice {
    let g0 = ch.h0.norm();
    let g1 = ch.h1.norm();
    let total = ch.total_gain().sqrt();
    if total == 0.0 {
        return WeightChoice {
            weights: WeightPair::new(ComplexSample::new(SQRT_2, 0.0), ComplexSample::new(0.0, 0.0)),
            degenerate: true,
        };
    }
    if g0 == 0.0 {
        // All power on state 1, rotated onto the negative real axis.
        let w1 = -SQRT_2 * ch.h1.conj() / g1;
        return WeightChoice {
            weights: WeightPair::new(ComplexSample::new(0.0, 0.0), w1),
            degenerate: true,
        };
    }
    let w0 = ComplexSample::new(SQRT_2 * g0 / total, 0.0);
    let w1 = -SQRT_2 * ch.h0 * ch.h1.conj() / (g0 * total);
    WeightChoice {
        weights: WeightPair::new(w0, w1),
        degenerate: g1 == 0.0,
    }
}

/// Phase-only weights: `w0 = 1` and `w1` co-phases `s1` opposite `s0`,
/// giving received distance `|h0| + |h1|`.
pub fn cl_unitamp_weights(ch: &ChannelPair) -> WeightChoice {
    let g0 = ch.h0.norm();
    let g1 = ch.h1.norm();
    let w0 = ComplexSample::new(1.0, 0.0);
    if g0 == 0.0 || g1 == 0.0 {
        return WeightChoice {
            weights: WeightPair::new(w0, ComplexSample::new(-1.0, 0.0)),
            degenerate: true,
        };
    }
    let w1 = -ch.h0 * ch.h1.conj() / (g0 * g1);
    WeightChoice {
        weights: WeightPair::new(w0, w1),
        degenerate: false,
    }
}

/// Minimum-distance (ML) decision between `w0·h0` and `w1·h1`.
/// Ties resolve to bit 0.
pub fn ml_detect_mbm(y: ComplexSample, ch: &ChannelPair, w: &WeightPair) -> u8 {
    let d0 = (y - w.w0 * ch.h0).norm_sqr();
    let d1 = (y - w.w1 * ch.h1).norm_sqr();
    u8::from(d1 < d0)
}

/// One MBM channel use: the mirror state selected by `bit` shapes the
/// weighted signal, noise is added and the receiver runs ML detection.
pub fn transceive_mbm(bit: u8, ch: &ChannelPair, w: &WeightPair, z: ComplexSample) -> u8 {
    let s = if bit == 0 { w.w0 * ch.h0 } else { w.w1 * ch.h1 };
    ml_detect_mbm(s + z, ch, w)
}

#[inline]
fn bpsk(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn slice(stat: f64) -> u8 {
    u8::from(stat < 0.0)
}

/// Single-antenna BPSK with coherent detection.
pub fn siso_bpsk_transceive(bit: u8, h: ComplexSample, z: ComplexSample) -> u8 {
    let y = h * bpsk(bit) + z;
    slice((h.conj() * y).re)
}

/// BPSK over two RF chains with MRC transmit precoding `w_i = h_i^† / ‖h‖`.
/// Total transmit power is one. Both channels zero decodes to bit 0.
pub fn mrc_bpsk_transceive(bit: u8, ch: &ChannelPair, z: ComplexSample) -> u8 {
    let norm = ch.total_gain().sqrt();
    if norm == 0.0 {
        return 0;
    }
    let w0 = ch.h0.conj() / norm;
    let w1 = ch.h1.conj() / norm;
    let y = (ch.h0 * w0 + ch.h1 * w1) * bpsk(bit) + z;
    slice(y.re)
}

/// Full two-period Alamouti block over two antennas with per-antenna scaling
/// `1/sqrt(2)`. `z` holds the receiver noise of the two symbol periods.
///
/// After linear combining and normalization by `‖h‖`, each symbol sees
/// `sqrt(‖h‖^2 / 2) · x_i` plus noise with the same statistics as `z`.
pub fn alamouti_block_transceive(
    bits: [u8; 2],
    ch: &ChannelPair,
    z: [ComplexSample; 2],
) -> [u8; 2] {
    let x0 = ComplexSample::new(bpsk(bits[0]), 0.0);
    let x1 = ComplexSample::new(bpsk(bits[1]), 0.0);
    let (h0, h1) = (ch.h0, ch.h1);

    let r0 = (h0 * x0 + h1 * x1) * FRAC_1_SQRT_2 + z[0];
    let r1 = (-h0 * x1.conj() + h1 * x0.conj()) * FRAC_1_SQRT_2 + z[1];

    let [y0, y1] = alamouti_combine([r0, r1], ch);
    [slice(y0.re), slice(y1.re)]
}

/// Alamouti linear combiner, normalized by `‖h‖` so the noise on each output
/// keeps the per-period variance. Returns zeros when both channels vanish.
pub fn alamouti_combine(r: [ComplexSample; 2], ch: &ChannelPair) -> [ComplexSample; 2] {
    let norm = ch.total_gain().sqrt();
    if norm == 0.0 {
        return [ComplexSample::new(0.0, 0.0); 2];
    }
    let (h0, h1) = (ch.h0, ch.h1);
    [
        (h0.conj() * r[0] + h1 * r[1].conj()) / norm,
        (h1.conj() * r[0] - h0 * r[1].conj()) / norm,
    ]
}

/// Post-combining scalar model of the Alamouti block, `y = sqrt(‖h‖^2/2)·x + z`.
pub fn alamouti_scalar_transceive(bit: u8, ch: &ChannelPair, z: ComplexSample) -> u8 {
    let y = (0.5 * ch.total_gain()).sqrt() * bpsk(bit) + z;
    slice(y.re)
}

/// Distance between the two received constellation points of a scheme.
pub fn effective_distance(scheme: SchemeId, ch: &ChannelPair) -> f64 {
    let g0 = ch.h0.norm();
    let g1 = ch.h1.norm();
    let total = ch.total_gain();
    match scheme {
        SchemeId::SisoBpsk => 2.0 * g0,
        SchemeId::MrcBpsk => 2.0 * total.sqrt(),
        // sqrt(2·total), written in the same form as the closed loop
        SchemeId::AlamoutiBpsk => SQRT_2 * total.sqrt(),
        SchemeId::OpenLoopBmbm => (ch.h1 - ch.h0).norm(),
        SchemeId::ClosedLoopBmbm => SQRT_2 * total.sqrt(),
        SchemeId::ClosedLoopUnitAmpBmbm => g0 + g1,
    }
}
