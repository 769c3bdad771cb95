//! Closed-form BER over i.i.d. unit-variance Rayleigh fading.
//!
//! Every expression of the form `1 - sqrt(snr / (c + snr))` is evaluated as
//! `(c / (c + snr)) / (1 + sqrt(snr / (c + snr)))`, which is algebraically
//! identical but keeps full relative precision at very high SNR.
//!
//! The diversity-2 schemes (MRC, Alamouti, both closed loops with optimal
//! weights) share the two-branch maximal-ratio law
//! `¼(1 − μ)²(2 + μ)` with `μ = sqrt(γ/(1+γ))`, where `γ` is the per-branch
//! SNR: `γ = snr` for MRC and `γ = snr/2` for the others.

use crate::channel::Snr;
use crate::schemes::SchemeId;
use std::str::FromStr;
use thiserror::Error;

/// Upper bound on the target BER accepted by [`snr_gap_unitamp_vs_optimal`].
pub const GAP_TARGET_MAX: f64 = 3.0 / 8.0;

/// Bisection stops once the bracket on `log10(snr)` is narrower than this.
pub const LOG_SNR_TOL: f64 = 1e-6;

const LOG_SNR_BRACKET: (f64, f64) = (-15.0, 15.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("target BER {target} outside the supported range (0, {ceiling})")]
    TargetOutOfRange { target: f64, ceiling: f64 },
    #[error("diversity fit needs at least 3 points with BER > 0 inside [{lo_db}, {hi_db}] dB, found {found}")]
    InsufficientPoints { lo_db: f64, hi_db: f64, found: usize },
    #[error("invalid fit window `{0}` (expected lo:hi in dB with lo < hi)")]
    InvalidWindow(String),
}

/// One row of the scheme comparison table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerFormulaResult {
    pub exact: f64,
    pub high_snr_approx: f64,
    pub diversity_order: u32,
}

/// `sqrt(snr / (c + snr))` and the cancellation-free `1 - sqrt(snr / (c + snr))`.
fn ratio_terms(c: f64, snr: f64) -> (f64, f64) {
    let m = (snr / (c + snr)).sqrt();
    let one_minus = (c / (c + snr)) / (1.0 + m);
    (m, one_minus)
}

fn diversity1(c: f64, snr: f64) -> f64 {
    0.5 * ratio_terms(c, snr).1
}

fn diversity2(c: f64, snr: f64) -> f64 {
    let (m, one_minus) = ratio_terms(c, snr);
    0.25 * one_minus * one_minus * (2.0 + m)
}

/// Single-antenna BPSK: `½(1 − sqrt(snr/(1+snr)))`.
pub fn ber_siso(snr: Snr) -> f64 {
    diversity1(1.0, snr.linear())
}

/// Open-loop binary MBM: `½(1 − sqrt(snr/(2+snr)))`, i.e. BPSK at half the SNR.
pub fn ber_ol_bmbm(snr: Snr) -> f64 {
    diversity1(2.0, snr.linear())
}

/// Closed-loop binary MBM with optimal complex weights: two-branch MRC at
/// half the SNR.
pub fn ber_cl_bmbm(snr: Snr) -> f64 {
    diversity2(2.0, snr.linear())
}

/// Alamouti-coded BPSK with unit total power; the same law as [`ber_cl_bmbm`].
pub fn ber_alamouti(snr: Snr) -> f64 {
    diversity2(2.0, snr.linear())
}

/// MRC-precoded BPSK over two transmit chains.
pub fn ber_mrc(snr: Snr) -> f64 {
    diversity2(1.0, snr.linear())
}

/// Closed-loop binary MBM with unit-amplitude weights:
/// `½(1 − sqrt(snr(snr+4))/(snr+2))`.
pub fn ber_cl_unitamp(snr: Snr) -> f64 {
    let s = snr.linear();
    // sqrt(s(s+4))/(s+2) = sqrt(1 - u) with u = 4/(s+2)^2
    let u = 4.0 / ((s + 2.0) * (s + 2.0));
    0.5 * u / (1.0 + (1.0 - u).sqrt())
}

pub fn ber_exact(scheme: SchemeId, snr: Snr) -> f64 {
    match scheme {
        SchemeId::SisoBpsk => ber_siso(snr),
        SchemeId::MrcBpsk => ber_mrc(snr),
        SchemeId::AlamoutiBpsk => ber_alamouti(snr),
        SchemeId::OpenLoopBmbm => ber_ol_bmbm(snr),
        SchemeId::ClosedLoopBmbm => ber_cl_bmbm(snr),
        SchemeId::ClosedLoopUnitAmpBmbm => ber_cl_unitamp(snr),
    }
}

/// Leading high-SNR term of each scheme's BER.
pub fn high_snr_approx(scheme: SchemeId, snr: Snr) -> f64 {
    let s = snr.linear();
    match scheme {
        SchemeId::SisoBpsk => 1.0 / (4.0 * s),
        SchemeId::MrcBpsk => 3.0 / (16.0 * s * s),
        SchemeId::AlamoutiBpsk | SchemeId::ClosedLoopBmbm => 3.0 / (4.0 * s * s),
        SchemeId::OpenLoopBmbm => 1.0 / (2.0 * s),
        SchemeId::ClosedLoopUnitAmpBmbm => 1.0 / (s * s),
    }
}

pub fn evaluate(scheme: SchemeId, snr: Snr) -> BerFormulaResult {
    BerFormulaResult {
        exact: ber_exact(scheme, snr),
        high_snr_approx: high_snr_approx(scheme, snr),
        diversity_order: scheme.diversity_order(),
    }
}

/// Inverts a strictly decreasing BER law by bisection on `log10(snr)`.
pub fn invert_ber(ber: impl Fn(Snr) -> f64, target: f64) -> Result<Snr, AnalyticError> {
    let out_of_range = AnalyticError::TargetOutOfRange { target, ceiling: 0.5 };
    if !(target > 0.0 && target < 0.5) {
        return Err(out_of_range);
    }
    let eval = |log_snr: f64| ber(Snr::from_linear(10f64.powf(log_snr)).expect("finite bracket"));
    let (mut lo, mut hi) = LOG_SNR_BRACKET;
    if eval(lo) < target || eval(hi) > target {
        return Err(out_of_range);
    }
    while hi - lo > LOG_SNR_TOL {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Snr::from_linear(10f64.powf(0.5 * (lo + hi))).expect("finite bracket"))
}

/// SNR at which `scheme` reaches `target` BER.
pub fn snr_for_ber(scheme: SchemeId, target: f64) -> Result<Snr, AnalyticError> {
    invert_ber(|s| ber_exact(scheme, s), target)
}

/// Operating points of the optimal-weight and unit-amplitude closed loops at
/// a common BER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGap {
    /// SNR needed with optimal complex weights.
    pub optimal: Snr,
    /// SNR needed with unit-amplitude weights.
    pub unit_amplitude: Snr,
}

impl SnrGap {
    pub fn db(&self) -> f64 {
        self.unit_amplitude.db() - self.optimal.db()
    }
}

/// Extra SNR the unit-amplitude closed loop needs to match the optimal
/// closed loop at `target_ber`. Tends to `10·log10(1/sqrt(0.75))` dB.
pub fn snr_gap_unitamp_vs_optimal(target_ber: f64) -> Result<SnrGap, AnalyticError> {
    if !(target_ber > 0.0 && target_ber < GAP_TARGET_MAX) {
        return Err(AnalyticError::TargetOutOfRange {
            target: target_ber,
            ceiling: GAP_TARGET_MAX,
        });
    }
    let optimal = snr_for_ber(SchemeId::ClosedLoopBmbm, target_ber)?;
    let unit_amplitude = snr_for_ber(SchemeId::ClosedLoopUnitAmpBmbm, target_ber)?;
    Ok(SnrGap {
        optimal,
        unit_amplitude,
    })
}

/// SNR range in dB for diversity-order fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub lo_db: f64,
    pub hi_db: f64,
}

impl FitWindow {
    pub fn new(lo_db: f64, hi_db: f64) -> Result<Self, AnalyticError> {
        if lo_db.is_finite() && hi_db.is_finite() && lo_db < hi_db {
            Ok(Self { lo_db, hi_db })
        } else {
            Err(AnalyticError::InvalidWindow(format!("{lo_db}:{hi_db}")))
        }
    }

    pub fn contains(&self, db: f64) -> bool {
        db >= self.lo_db - 1e-9 && db <= self.hi_db + 1e-9
    }
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            lo_db: 20.0,
            hi_db: 40.0,
        }
    }
}

impl FromStr for FitWindow {
    type Err = AnalyticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalyticError::InvalidWindow(s.to_string());
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi).map_err(|_| bad())
    }
}

/// Negated least-squares slope of `log10(ber)` against `log10(snr)` over the
/// `(snr_db, ber)` samples that fall inside `window`.
pub fn estimate_diversity_order(
    samples: impl IntoIterator<Item = (f64, f64)>,
    window: FitWindow,
) -> Result<f64, AnalyticError> {
    let pts: Vec<(f64, f64)> = samples
        .into_iter()
        .filter(|&(db, ber)| window.contains(db) && ber > 0.0)
        .map(|(db, ber)| (db / 10.0, ber.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(AnalyticError::InsufficientPoints {
            lo_db: window.lo_db,
            hi_db: window.hi_db,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snr(x: f64) -> Snr {
        Snr::from_linear(x).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn siso_values() {
        assert!((ber_siso(snr(1e-12)) - 0.5).abs() < 1e-6);
        assert!((ber_siso(snr(1.0)) - 0.146_446_609_406_726_2).abs() < 1e-12);
        let p = ber_siso(snr(100.0));
        assert!((p - 2.481_404_895_005_4e-3).abs() < 1e-15);
        assert!(rel(high_snr_approx(SchemeId::SisoBpsk, snr(100.0)), p) < 0.01);
    }

    #[test]
    fn open_loop_values() {
        assert!((ber_ol_bmbm(snr(2.0)) - ber_siso(snr(1.0))).abs() < 1e-15);
        assert!((ber_ol_bmbm(snr(1e-12)) - 0.5).abs() < 1e-6);
        let p = ber_ol_bmbm(snr(100.0));
        assert!((p - 4.926e-3).abs() < 1e-6);
        assert!(rel(high_snr_approx(SchemeId::OpenLoopBmbm, snr(100.0)), p) < 0.02);
    }

    #[test]
    fn closed_loop_values() {
        assert!((ber_cl_bmbm(snr(10.0)) - 5.528_246_696_725_03e-3).abs() < 1e-15);
        assert!((ber_cl_bmbm(snr(1e-14)) - 0.5).abs() < 1e-6);
        let p = ber_cl_bmbm(snr(100.0));
        assert!(rel(high_snr_approx(SchemeId::ClosedLoopBmbm, snr(100.0)), p) < 0.05);
    }

    #[test]
    fn alamouti_values() {
        let mut rng = crate::channel::RngStream::new(0, 0);
        for _ in 0..50 {
            let u: f64 = rand::Rng::random(&mut rng);
            let s = snr(10f64.powf(-2.0 + 6.0 * u));
            assert_eq!(ber_alamouti(s), ber_cl_bmbm(s));
        }
        assert!((ber_alamouti(snr(10.0)) - 5.528_246_696_725_03e-3).abs() < 1e-15);
        assert!(ber_alamouti(snr(1e300)) < 1e-300);
    }

    #[test]
    fn mrc_values() {
        let mut rng = crate::channel::RngStream::new(1, 0);
        for _ in 0..50 {
            let u: f64 = rand::Rng::random(&mut rng);
            let s = 10f64.powf(-2.0 + 6.0 * u);
            assert!(rel(ber_mrc(snr(s)), ber_cl_bmbm(snr(2.0 * s))) < 1e-12);
        }
        let p = ber_mrc(snr(100.0));
        assert!(rel(high_snr_approx(SchemeId::MrcBpsk, snr(100.0)), p) < 0.05);
        assert!((ber_mrc(snr(1e-14)) - 0.5).abs() < 1e-6);
        assert!((ber_mrc(snr(10.0)) - 1.599_101_076_167_65e-3).abs() < 1e-15);
    }

    #[test]
    fn unitamp_values() {
        let want = 0.5 * (1.0 - 140f64.sqrt() / 12.0);
        assert!(rel(ber_cl_unitamp(snr(10.0)), want) < 1e-12);
        assert!((ber_cl_unitamp(snr(10.0)) - 6.994e-3).abs() < 1e-6);
        assert!((ber_cl_unitamp(snr(1e-12)) - 0.5).abs() < 1e-6);
        let p = ber_cl_unitamp(snr(100.0));
        assert!(rel(high_snr_approx(SchemeId::ClosedLoopUnitAmpBmbm, snr(100.0)), p) < 0.05);
    }

    #[test]
    fn high_snr_table_values() {
        assert!((high_snr_approx(SchemeId::OpenLoopBmbm, snr(1000.0)) - 5e-4).abs() < 1e-18);
        assert!((high_snr_approx(SchemeId::ClosedLoopBmbm, snr(1000.0)) - 7.5e-7).abs() < 1e-20);
        for s in SchemeId::ALL {
            let r = evaluate(s, snr(1e4));
            assert!(rel(r.high_snr_approx, r.exact) < 1e-2, "{s}");
        }
    }

    #[test]
    fn stable_at_extreme_snr() {
        // naive evaluation cancels to 0 here
        let s = snr(1e12);
        for scheme in SchemeId::ALL {
            let r = evaluate(scheme, s);
            assert!(r.exact > 0.0);
            assert!(rel(r.exact, r.high_snr_approx) < 1e-6, "{scheme}");
        }
    }

    #[test]
    fn monotone_and_ordered_on_dense_grid() {
        let grid: Vec<f64> = (0..=1800).map(|i| -30.0 + 0.05 * i as f64).collect();
        for scheme in SchemeId::ALL {
            let vals: Vec<f64> = grid.iter().map(|&db| ber_exact(scheme, Snr::from_db(db).unwrap())).collect();
            for w in vals.windows(2) {
                assert!(w[1] < w[0], "{scheme} not strictly decreasing");
            }
            assert!(vals.iter().all(|&p| p > 0.0 && p <= 0.5));
        }
        for &db in &grid {
            let s = Snr::from_db(db).unwrap();
            assert!(ber_cl_bmbm(s) <= ber_cl_unitamp(s));
            let doubled = Snr::from_linear(2.0 * s.linear()).unwrap();
            assert!(rel(ber_mrc(s), ber_cl_bmbm(doubled)) < 1e-12);
        }
    }

    #[test]
    fn taylor_consistency() {
        for scheme in SchemeId::ALL {
            for db in [40.0, 45.0, 50.0, 60.0, 80.0] {
                let r = evaluate(scheme, Snr::from_db(db).unwrap());
                let q = r.exact / r.high_snr_approx;
                assert!((0.9..=1.1).contains(&q), "{scheme} {db}: {q}");
            }
        }
    }

    #[test]
    fn snr_gap() {
        let exact = 10.0 * (1.0 / 0.75f64.sqrt()).log10();
        let g6 = snr_gap_unitamp_vs_optimal(1e-6).unwrap();
        assert!((g6.db() - 0.625).abs() < 0.01, "{}", g6.db());
        assert!((ber_cl_bmbm(g6.optimal) - 1e-6).abs() < 1e-10);
        assert!((ber_cl_unitamp(g6.unit_amplitude) - 1e-6).abs() < 1e-10);
        let g4 = snr_gap_unitamp_vs_optimal(1e-4).unwrap().db();
        assert!((g4 - 0.625).abs() < 0.05, "{g4}");
        let g8 = snr_gap_unitamp_vs_optimal(1e-8).unwrap().db();
        let g2 = snr_gap_unitamp_vs_optimal(1e-2).unwrap().db();
        assert!((g8 - exact).abs() < (g2 - exact).abs());
        let g3 = snr_gap_unitamp_vs_optimal(1e-3).unwrap().db();
        assert!((g3 - exact).abs() > (g6.db() - exact).abs());
    }

    #[test]
    fn snr_gap_domain() {
        for bad in [0.0, -1e-3, 0.375, 0.4, 1.0, f64::NAN] {
            assert!(snr_gap_unitamp_vs_optimal(bad).is_err(), "{bad}");
        }
    }

    fn exact_curve(scheme: SchemeId) -> Vec<(f64, f64)> {
        (0..=20)
            .map(|i| {
                let db = 20.0 + i as f64;
                (db, ber_exact(scheme, Snr::from_db(db).unwrap()))
            })
            .collect()
    }

    #[test]
    fn diversity_of_exact_curves() {
        let w = FitWindow::default();
        let ol = estimate_diversity_order(exact_curve(SchemeId::OpenLoopBmbm), w).unwrap();
        assert!((ol - 1.0).abs() < 0.03, "{ol}");
        let cl = estimate_diversity_order(exact_curve(SchemeId::ClosedLoopBmbm), w).unwrap();
        assert!((cl - 2.0).abs() < 0.05, "{cl}");
        let cubic = (0..10).map(|i| {
            let db = 20.0 + 2.0 * i as f64;
            (db, 0.3 / 10f64.powf(db / 10.0).powi(3))
        });
        let d = estimate_diversity_order(cubic, w).unwrap();
        assert!((d - 3.0).abs() < 1e-6);
    }

    #[test]
    fn diversity_needs_points() {
        let w = FitWindow::default();
        let few = vec![(20.0, 1e-3), (25.0, 1e-4), (30.0, 0.0), (50.0, 1e-9)];
        assert!(matches!(
            estimate_diversity_order(few, w),
            Err(AnalyticError::InsufficientPoints { found: 2, .. })
        ));
    }

    #[test]
    fn fit_window_parsing() {
        assert_eq!("10:25".parse::<FitWindow>().unwrap(), FitWindow::new(10.0, 25.0).unwrap());
        assert!("25:10".parse::<FitWindow>().is_err());
        assert!("abc".parse::<FitWindow>().is_err());
    }

    proptest! {
        #[test]
        fn range_invariant(db in -60.0f64..120.0) {
            let s = Snr::from_db(db).unwrap();
            for scheme in SchemeId::ALL {
                let p = ber_exact(scheme, s);
                prop_assert!(p > 0.0 && p <= 0.5);
            }
        }
    }
}
