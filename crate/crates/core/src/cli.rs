//! Command-line front end: `sweep`, `analytic`, `gap` and `compare`.
//!
//! Simulation CSV columns (schema `bmbm-ber/1`):
//! `snr_db,scheme,ber_sim,ber_analytic,high_snr_approx,errors,trials,ci_low,ci_high`.
//! Closed-form CSV columns: `snr_db,scheme,ber_analytic,high_snr_approx`.
//! Floats are written in scientific notation with 12 significant digits.

use crate::analytic::{self, AnalyticError, FitWindow};
use crate::channel::Snr;
use crate::engine::{self, BerCurve, EngineError, SimConfig};
use crate::schemes::SchemeId;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

pub const SIM_HEADER: [&str; 9] = [
    "snr_db",
    "scheme",
    "ber_sim",
    "ber_analytic",
    "high_snr_approx",
    "errors",
    "trials",
    "ci_low",
    "ci_high",
];
pub const ANALYTIC_HEADER: [&str; 4] = ["snr_db", "scheme", "ber_analytic", "high_snr_approx"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid SNR grid `{0}` (expected start:step:stop in dB with step > 0 and start <= stop)")]
    BadGrid(String),
    #[error(transparent)]
    Scheme(#[from] crate::schemes::UnknownScheme),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("malformed CSV at row {row}: {reason}")]
    Csv { row: usize, reason: String },
    #[error("{0}")]
    Io(#[from] io::Error),
}

/// `start:step:stop` grid in dB, endpoints inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

impl FromStr for SnrGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CliError::BadGrid(s.to_string());
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(bad());
        };
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || start > stop {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(bad());
        }
        // Points are computed from the index so the grid carries no
        // accumulated rounding error.
        Ok(SnrGrid((0..n).map(|i| start + i as f64 * step).collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeList(pub Vec<SchemeId>);

impl FromStr for SchemeList {
    type Err = crate::schemes::UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::parse_list(s).map(SchemeList)
    }
}

#[derive(Debug, Parser)]
#[command(name = "bmbm", version, about = "Binary media-based modulation BER simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo BER sweep, written as CSV.
    Sweep(SweepArgs),
    /// Closed-form BER and high-SNR approximations on a grid.
    Analytic(AnalyticArgs),
    /// SNR gap between unit-amplitude and optimal closed-loop weights.
    Gap(GapArgs),
    /// Check a sweep or analytic CSV: CI agreement, diversity fits, horizontal gaps.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated schemes: siso, mrc, alamouti, ol-bmbm, cl-bmbm, cl-unitamp, all.
    #[arg(long, default_value = "all", value_parser = parse_schemes)]
    pub schemes: SchemeList,
    /// SNR grid start:step:stop in dB.
    #[arg(long = "snr-db", default_value = "0:2:20", value_parser = parse_grid)]
    pub snr_db: SnrGrid,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "min-errors", default_value_t = engine::DEFAULT_MIN_ERRORS)]
    pub min_errors: u64,
    #[arg(long = "max-trials", default_value_t = engine::DEFAULT_MAX_TRIALS)]
    pub max_trials: u64,
    #[arg(long = "chunk-size", default_value_t = engine::DEFAULT_CHUNK_SIZE)]
    pub chunk_size: u64,
    /// Worker threads (0 = all cores). Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV path.
    #[arg(long, default_value = "ber_sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long, default_value = "all", value_parser = parse_schemes)]
    pub schemes: SchemeList,
    #[arg(long = "snr-db", default_value = "0:1:40", value_parser = parse_grid)]
    pub snr_db: SnrGrid,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the scheme comparison table.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    #[arg(long = "target-ber", default_value_t = 1e-6)]
    pub target_ber: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// CSV written by `sweep` or `analytic`.
    pub input: PathBuf,
    /// BER level for horizontal (SNR) gaps between curves.
    #[arg(long = "ber-level", default_value_t = 5e-3)]
    pub ber_level: f64,
    /// Diversity fit window lo:hi in dB.
    #[arg(long = "fit-window", value_parser = parse_window)]
    pub fit_window: Option<FitWindow>,
}

fn parse_grid(s: &str) -> Result<SnrGrid, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_schemes(s: &str) -> Result<SchemeList, String> {
    s.parse().map_err(|e: crate::schemes::UnknownScheme| e.to_string())
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    s.parse().map_err(|e: AnalyticError| e.to_string())
}

/// Scientific notation with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_csv_file(path: &Path, body: &str) -> Result<(), CliError> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(wrap)?;
    f.write_all(body.as_bytes()).map_err(wrap)?;
    f.flush().map_err(wrap)
}

/// Serializes sweep results, one row per `(scheme, snr)`.
pub fn sweep_csv(curves: &[BerCurve]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SIM_HEADER).expect("in-memory write");
    for curve in curves {
        for p in &curve.points {
            let approx = analytic::high_snr_approx(p.scheme, Snr::from_db(p.snr_db).expect("validated grid"));
            w.write_record([
                fmt_float(p.snr_db),
                p.scheme.name().to_string(),
                fmt_float(p.ber),
                fmt_float(p.analytic),
                fmt_float(approx),
                p.errors.to_string(),
                p.trials.to_string(),
                fmt_float(p.ci_low),
                fmt_float(p.ci_high),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn analytic_csv(schemes: &[SchemeId], grid: &[f64]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ANALYTIC_HEADER).expect("in-memory write");
    for &scheme in schemes {
        for &db in grid {
            let snr = Snr::from_db(db)?;
            w.write_record([
                fmt_float(db),
                scheme.name().to_string(),
                fmt_float(analytic::ber_exact(scheme, snr)),
                fmt_float(analytic::high_snr_approx(scheme, snr)),
            ])
            .expect("in-memory write");
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output"))
}

pub fn run_sweep_cmd(args: &SweepArgs, out: &mut impl Write) -> Result<(), CliError> {
    let cfg = SimConfig {
        schemes: args.schemes.0.clone(),
        snr_grid_db: args.snr_db.0.clone(),
        seed: args.seed,
        min_errors: args.min_errors,
        max_trials: args.max_trials,
        chunk_size: args.chunk_size,
    };
    let curves = if args.workers == 0 {
        engine::run_sweep(&cfg)?
    } else {
        engine::run_sweep_with_workers(&cfg, args.workers)?
    };
    write_csv_file(&args.out, &sweep_csv(&curves))?;

    let rows: usize = curves.iter().map(|c| c.points.len()).sum();
    let inside: usize = curves
        .iter()
        .flat_map(|c| &c.points)
        .filter(|p| p.analytic_within_ci())
        .count();
    writeln!(out, "wrote {rows} rows to {}", args.out.display())?;
    writeln!(
        out,
        "{:<11} {:>8} {:>12} {:>12} {:>8} {:>12}  in-CI",
        "scheme", "snr_db", "ber_sim", "ber_exact", "errors", "trials"
    )?;
    for p in curves.iter().flat_map(|c| &c.points) {
        writeln!(
            out,
            "{:<11} {:>8.2} {:>12.4e} {:>12.4e} {:>8} {:>12}  {}",
            p.scheme.name(),
            p.snr_db,
            p.ber,
            p.analytic,
            p.errors,
            p.trials,
            if p.analytic_within_ci() { "yes" } else { "NO" }
        )?;
    }
    writeln!(out, "{inside}/{rows} points have the closed form inside the 99% CI")?;
    Ok(())
}

/// Fixed-width rendering of the scheme comparison table.
pub fn comparison_table() -> String {
    let formula = |s: SchemeId| match s {
        SchemeId::SisoBpsk => "1/2 (1 - sqrt(snr/(1+snr)))",
        SchemeId::MrcBpsk => "1/4 (1-m1)^2 (2+m1), m1 = sqrt(snr/(1+snr))",
        SchemeId::AlamoutiBpsk | SchemeId::ClosedLoopBmbm => {
            "1/4 (1-m2)^2 (2+m2), m2 = sqrt(snr/(2+snr))"
        }
        SchemeId::OpenLoopBmbm => "1/2 (1 - sqrt(snr/(2+snr)))",
        SchemeId::ClosedLoopUnitAmpBmbm => "1/2 (1 - sqrt(snr(snr+4))/(snr+2))",
    };
    let approx = |s: SchemeId| match s {
        SchemeId::SisoBpsk => "1/(4 snr)",
        SchemeId::MrcBpsk => "3/(16 snr^2)",
        SchemeId::AlamoutiBpsk | SchemeId::ClosedLoopBmbm => "3/(4 snr^2)",
        SchemeId::OpenLoopBmbm => "1/(2 snr)",
        SchemeId::ClosedLoopUnitAmpBmbm => "1/snr^2",
    };
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<11} {:>9} {:>9} {:<46} {:<13} {:>9}",
        "scheme", "rf_chains", "feedback", "ber", "high_snr", "diversity"
    );
    for s in SchemeId::ALL {
        let _ = writeln!(
            t,
            "{:<11} {:>9} {:>9} {:<46} {:<13} {:>9}",
            s.name(),
            s.rf_chains(),
            if s.uses_feedback() { "yes" } else { "no" },
            formula(s),
            approx(s),
            s.diversity_order()
        );
    }
    t
}

pub fn run_analytic_cmd(args: &AnalyticArgs, out: &mut impl Write) -> Result<(), CliError> {
    let body = analytic_csv(&args.schemes.0, &args.snr_db.0)?;
    match &args.out {
        Some(path) => {
            write_csv_file(path, &body)?;
            writeln!(
                out,
                "wrote {} rows to {}",
                args.schemes.0.len() * args.snr_db.0.len(),
                path.display()
            )?;
        }
        None => out.write_all(body.as_bytes())?,
    }
    if args.table {
        out.write_all(comparison_table().as_bytes())?;
    }
    Ok(())
}

pub fn run_gap_cmd(args: &GapArgs, out: &mut impl Write) -> Result<(), CliError> {
    let gap = analytic::snr_gap_unitamp_vs_optimal(args.target_ber)?;
    writeln!(out, "target_ber        {:e}", args.target_ber)?;
    writeln!(out, "snr_optimal_db    {:.6}", gap.optimal.db())?;
    writeln!(out, "snr_unitamp_db    {:.6}", gap.unit_amplitude.db())?;
    writeln!(out, "gap_db            {:.6}", gap.db())?;
    Ok(())
}

/// One parsed CSV row. Simulation columns are absent for closed-form files.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub snr_db: f64,
    pub scheme: SchemeId,
    pub ber_analytic: f64,
    pub high_snr_approx: f64,
    pub sim: Option<SimColumns>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimColumns {
    pub ber_sim: f64,
    pub errors: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SimColumns {
    /// Distance from the simulated BER to `reference`, in units of the CI
    /// half-width on that side. Values up to 1 lie inside the interval.
    pub fn ci_units(&self, reference: f64) -> f64 {
        let (dist, half) = if reference >= self.ber_sim {
            (reference - self.ber_sim, self.ci_high - self.ber_sim)
        } else {
            (self.ber_sim - reference, self.ber_sim - self.ci_low)
        };
        if dist == 0.0 {
            0.0
        } else if half > 0.0 {
            dist / half
        } else {
            f64::INFINITY
        }
    }
}

/// Parses a CSV written by `sweep` or `analytic`. Row numbers in errors count
/// the header as row 1.
pub fn parse_records(input: impl Read) -> Result<Vec<Record>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Csv {
            row: 1,
            reason: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let is_sim = if header == SIM_HEADER {
        true
    } else if header == ANALYTIC_HEADER {
        false
    } else {
        return Err(CliError::Csv {
            row: 1,
            reason: format!("unrecognized header `{}`", header.join(",")),
        });
    };

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let bad = |reason: String| CliError::Csv { row, reason };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |name: &str| -> Result<&str, CliError> {
            let idx = header.iter().position(|h| h == name).expect("known header");
            rec.get(idx).ok_or_else(|| bad(format!("missing `{name}`")))
        };
        let float = |name: &str| -> Result<f64, CliError> {
            let v = field(name)?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("`{name}` is not a finite number: `{v}`")))
        };
        let int = |name: &str| -> Result<u64, CliError> {
            let v = field(name)?;
            v.parse::<u64>()
                .map_err(|_| bad(format!("`{name}` is not a count: `{v}`")))
        };
        let scheme: SchemeId = field("scheme")?.parse().map_err(|e: crate::schemes::UnknownScheme| bad(e.to_string()))?;
        let sim = if is_sim {
            let cols = SimColumns {
                ber_sim: float("ber_sim")?,
                errors: int("errors")?,
                trials: int("trials")?,
                ci_low: float("ci_low")?,
                ci_high: float("ci_high")?,
            };
            if cols.trials == 0 || cols.errors > cols.trials {
                return Err(bad("errors/trials inconsistent".into()));
            }
            Some(cols)
        } else {
            None
        };
        records.push(Record {
            snr_db: float("snr_db")?,
            scheme,
            ber_analytic: float("ber_analytic")?,
            high_snr_approx: float("high_snr_approx")?,
            sim,
        });
    }
    if records.is_empty() {
        return Err(CliError::Csv {
            row: 2,
            reason: "no data rows".into(),
        });
    }
    Ok(records)
}

/// SNR (dB) where a curve first crosses `level`, interpolating `log10(ber)`
/// linearly in dB between grid points.
pub fn crossing_db(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let target = level.log10();
    curve.windows(2).find_map(|w| {
        let ((x0, b0), (x1, b1)) = (w[0], w[1]);
        if b0 <= 0.0 || b1 <= 0.0 {
            return None;
        }
        let (y0, y1) = (b0.log10(), b1.log10());
        if (y0 - target) * (y1 - target) <= 0.0 && y0 != y1 {
            Some(x0 + (target - y0) * (x1 - x0) / (y1 - y0))
        } else {
            None
        }
    })
}

/// Findings extracted from a CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: usize,
    /// Rows whose closed form lies inside the simulated CI (simulation files only).
    pub within_ci: Option<usize>,
    /// Fitted diversity order per scheme, from the simulated column when present.
    pub diversity: BTreeMap<SchemeId, Result<f64, AnalyticError>>,
    /// Crossing SNR per scheme at the requested BER level (closed-form column).
    pub crossings: BTreeMap<SchemeId, f64>,
    pub sim_crossings: BTreeMap<SchemeId, f64>,
}

impl Comparison {
    /// Horizontal gap `b - a` in dB, closed-form column.
    pub fn gap_db(&self, a: SchemeId, b: SchemeId) -> Option<f64> {
        Some(self.crossings.get(&b)? - self.crossings.get(&a)?)
    }
}

pub fn compare_records(records: &[Record], ber_level: f64, window: FitWindow) -> Comparison {
    let mut by_scheme: BTreeMap<SchemeId, Vec<&Record>> = BTreeMap::new();
    for r in records {
        by_scheme.entry(r.scheme).or_default().push(r);
    }
    let mut diversity = BTreeMap::new();
    let mut crossings = BTreeMap::new();
    let mut sim_crossings = BTreeMap::new();
    for (&scheme, rows) in by_scheme.iter_mut() {
        rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        let analytic: Vec<(f64, f64)> = rows.iter().map(|r| (r.snr_db, r.ber_analytic)).collect();
        let simulated: Option<Vec<(f64, f64)>> = rows
            .iter()
            .map(|r| r.sim.map(|s| (r.snr_db, s.ber_sim)))
            .collect();
        let fit_source = simulated.clone().unwrap_or_else(|| analytic.clone());
        diversity.insert(scheme, analytic::estimate_diversity_order(fit_source, window));
        if let Some(x) = crossing_db(&analytic, ber_level) {
            crossings.insert(scheme, x);
        }
        if let Some(x) = simulated.and_then(|s| crossing_db(&s, ber_level)) {
            sim_crossings.insert(scheme, x);
        }
    }
    let within_ci = records
        .iter()
        .map(|r| r.sim.map(|s| s.ci_units(r.ber_analytic) <= 1.0))
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.into_iter().filter(|&b| b).count());
    Comparison {
        rows: records.len(),
        within_ci,
        diversity,
        crossings,
        sim_crossings,
    }
}

pub fn run_compare_cmd(args: &CompareArgs, out: &mut impl Write) -> Result<(), CliError> {
    if !(args.ber_level > 0.0 && args.ber_level < 1.0) {
        return Err(CliError::Analytic(AnalyticError::TargetOutOfRange {
            target: args.ber_level,
            ceiling: 1.0,
        }));
    }
    let file = File::open(&args.input).map_err(|source| CliError::Read {
        path: args.input.clone(),
        source,
    })?;
    let records = parse_records(io::BufReader::new(file))?;
    let is_sim = records[0].sim.is_some();
    let window = args.fit_window.unwrap_or(if is_sim {
        FitWindow { lo_db: 10.0, hi_db: 25.0 }
    } else {
        FitWindow::default()
    });
    let cmp = compare_records(&records, args.ber_level, window);

    if is_sim {
        writeln!(out, "per-point deviation |ber_sim - ber_analytic| in CI half-widths:")?;
        for r in &records {
            let s = r.sim.expect("simulation file");
            let units = s.ci_units(r.ber_analytic);
            writeln!(
                out,
                "  {:<11} {:>8.2} dB  {:>8.3}  {}",
                r.scheme.name(),
                r.snr_db,
                units,
                if units <= 1.0 { "within CI" } else { "OUTSIDE CI" }
            )?;
        }
        writeln!(out, "{}/{} points within CI", cmp.within_ci.unwrap_or(0), cmp.rows)?;
    }

    writeln!(
        out,
        "diversity order fits over [{}, {}] dB ({}):",
        window.lo_db,
        window.hi_db,
        if is_sim { "simulated" } else { "closed form" }
    )?;
    for (scheme, fit) in &cmp.diversity {
        match fit {
            Ok(d) => writeln!(out, "  {:<11} {:.3} (expected {})", scheme.name(), d, scheme.diversity_order())?,
            Err(e) => writeln!(out, "  {:<11} n/a: {e}", scheme.name())?,
        }
    }

    writeln!(out, "SNR at BER {:e}:", args.ber_level)?;
    for (scheme, x) in &cmp.crossings {
        match cmp.sim_crossings.get(scheme) {
            Some(s) => writeln!(out, "  {:<11} {:.3} dB (simulated {:.3} dB)", scheme.name(), x, s)?,
            None => writeln!(out, "  {:<11} {:.3} dB", scheme.name(), x)?,
        }
    }
    let pairs = [
        (SchemeId::ClosedLoopBmbm, SchemeId::OpenLoopBmbm, "ol-bmbm vs cl-bmbm"),
        (SchemeId::SisoBpsk, SchemeId::OpenLoopBmbm, "ol-bmbm vs siso"),
        (SchemeId::ClosedLoopBmbm, SchemeId::ClosedLoopUnitAmpBmbm, "cl-unitamp vs cl-bmbm"),
    ];
    for (a, b, label) in pairs {
        match cmp.gap_db(a, b) {
            Some(g) => writeln!(out, "gap {label}: {g:.3} dB")?,
            None => writeln!(out, "gap {label}: n/a (level not crossed on the grid)")?,
        }
    }
    Ok(())
}

/// Dispatches a parsed command line. Reports go to `out`.
pub fn run(cli: &Cli, out: &mut impl Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Sweep(a) => run_sweep_cmd(a, out),
        Command::Analytic(a) => run_analytic_cmd(a, out),
        Command::Gap(a) => run_gap_cmd(a, out),
        Command::Compare(a) => run_compare_cmd(a, out),
    }
}
