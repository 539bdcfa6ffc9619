//! Seeded Monte Carlo sampling of the shock process and of its
//! stochastically equivalent constructions, plus estimators for ruin
//! probability, ruin time, and deficit at ruin.
//!
//! Determinism contract: every path draws from its own counter-derived
//! substream indexed by `(seed, stream, path)`, and per-thread results
//! merge through exact integer counters, so output is bit-identical for a
//! given `(model, config)` regardless of how many threads run the paths.

use std::fmt;

use serde::Serialize;

use crate::aggregate;
use crate::counting;
use crate::model::{ClaimLaw, ModelSpec};
use crate::pmf::Pmf;
use crate::ruin::{self, ThinningCheck};
use crate::stats::{chi_square_test, Chi2Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidConfig(String),
    /// The independent-claims construction needs a product shock law.
    NonProductShockLaw,
    TableTooLarge { cells: usize, cap: usize },
    AnalyticUnavailable(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidConfig(msg) => write!(f, "invalid simulation config: {msg}"),
            SimError::NonProductShockLaw => {
                write!(f, "independent-claims construction requires a product shock law")
            }
            SimError::TableTooLarge { cells, cap } => {
                write!(f, "empirical table needs {cells} cells, cap is {cap}")
            }
            SimError::AnalyticUnavailable(msg) => {
                write!(f, "analytic reference unavailable: {msg}")
            }
        }
    }
}

impl std::error::Error for SimError {}

// ── Counter-derived RNG ─────────────────────────────────────────────────────

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// SplitMix64 stream whose initial state is a hash of `(seed, stream,
/// path)`; one instance per simulated path.
#[derive(Debug, Clone)]
pub struct PathRng {
    state: u64,
}

impl PathRng {
    pub fn for_path(seed: u64, stream: u64, path: u64) -> PathRng {
        let a = mix64(seed ^ GOLDEN.wrapping_mul(stream.wrapping_add(1)));
        let b = mix64(a ^ GOLDEN.wrapping_mul(path).wrapping_add(0x6a09_e667_f3bc_c909));
        PathRng { state: b }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

// ── Configuration and summary types ─────────────────────────────────────────

/// Seeds and sizes of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_paths: u64,
    pub horizon: u32,
    /// Initial capital for ruin experiments.
    pub u: u64,
}

impl SimConfig {
    pub fn new(seed: u64, n_paths: u64, horizon: u32, u: u64) -> Result<SimConfig, SimError> {
        if n_paths < 1 {
            return Err(SimError::InvalidConfig("n_paths must be at least 1".into()));
        }
        Ok(SimConfig { seed, n_paths, horizon, u })
    }
}

/// A single scalar estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistic {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n: u64,
}

/// Empirical joint table of integer pairs, stored as raw counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalTable {
    pub name: String,
    pub n: u64,
    pub counts: Vec<Vec<u64>>,
}

impl EmpiricalTable {
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.counts[i][j] as f64 / self.n as f64
    }
}

/// Empirical histogram over `offset, offset+1, ...` with an overflow bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub name: String,
    pub offset: i64,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub n: u64,
}

/// Distance diagnostics between an empirical law and a reference law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub tv_distance: f64,
    /// Crude sampling-noise yardstick `4 sqrt(cells) / sqrt(n)`.
    pub tv_bound: f64,
    pub max_abs_z: f64,
    pub cells: usize,
    pub chi_square: Option<Chi2Result>,
    /// Per-cell standardized deviations `(phat - p)/se(p)`; zero where the
    /// expected count is too small for the normal scale to mean anything.
    pub z_scores: Option<Vec<Vec<f64>>>,
}

/// Everything a simulation experiment reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub experiment: String,
    pub config: SimConfig,
    pub statistics: Vec<Statistic>,
    pub tables: Vec<EmpiricalTable>,
    pub histograms: Vec<Histogram>,
    pub comparisons: Vec<Comparison>,
}

// ── Parallel fold over paths ────────────────────────────────────────────────

fn effective_threads(requested: usize, n_paths: u64) -> usize {
    let available = if requested == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        requested
    };
    available.max(1).min(n_paths.max(1) as usize)
}

/// Fold `body` over path indices `0..n_paths` on `threads` threads
/// (0 = auto). Accumulators must merge commutatively for the result to be
/// thread-count independent; all accumulators in this module are integer
/// counters, which merge exactly.
fn run_paths<Acc, Make, Body>(n_paths: u64, threads: usize, make: Make, body: Body) -> Vec<Acc>
where
    Acc: Send,
    Make: Fn() -> Acc + Sync,
    Body: Fn(u64, &mut Acc) + Sync,
{
    let threads = effective_threads(threads, n_paths);
    let chunk = n_paths.div_ceil(threads as u64);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let make = &make;
                let body = &body;
                scope.spawn(move || {
                    let lo = t as u64 * chunk;
                    let hi = ((t as u64 + 1) * chunk).min(n_paths);
                    let mut acc = make();
                    for path in lo..hi {
                        body(path, &mut acc);
                    }
                    acc
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

// ── Samplers ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
struct ClaimSampler {
    values: Vec<u64>,
    cum: Vec<f64>,
}

impl ClaimSampler {
    fn new(law: &ClaimLaw) -> ClaimSampler {
        let mut cum = Vec::new();
        let mut acc = 0.0;
        let mut values = Vec::new();
        for (k, w) in law.pairs() {
            acc += w;
            values.push(k);
            cum.push(acc);
        }
        ClaimSampler { values, cum }
    }

    fn draw(&self, rng: &mut PathRng) -> u64 {
        let u = rng.next_f64();
        for (i, &c) in self.cum.iter().enumerate() {
            if u < c {
                return self.values[i];
            }
        }
        *self.values.last().expect("claim law is non-empty")
    }
}

#[derive(Debug, Clone)]
struct PairSampler {
    pairs: Vec<(u64, u64)>,
    cum: Vec<f64>,
}

impl PairSampler {
    fn new(model: &ModelSpec) -> PairSampler {
        let mut cum = Vec::new();
        let mut acc = 0.0;
        let mut pairs = Vec::new();
        for (k3, k4, w) in model.shock_joint().atoms() {
            acc += w;
            pairs.push((k3, k4));
            cum.push(acc);
        }
        PairSampler { pairs, cum }
    }

    fn draw(&self, rng: &mut PathRng) -> (u64, u64) {
        let u = rng.next_f64();
        for (i, &c) in self.cum.iter().enumerate() {
            if u < c {
                return self.pairs[i];
            }
        }
        *self.pairs.last().expect("shock law is non-empty")
    }
}

/// One period of the shock process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Quiet,
    Type1,
    Type2,
    Shock,
}

#[derive(Debug, Clone)]
struct PeriodSampler {
    c_quiet: f64,
    c_type1: f64,
    c_type2: f64,
}

impl PeriodSampler {
    fn new(model: &ModelSpec) -> PeriodSampler {
        let s = model.shock();
        PeriodSampler {
            c_quiet: 1.0 - s.p(),
            c_type1: 1.0 - s.p() + s.p1(),
            c_type2: 1.0 - s.p() + s.p1() + s.p2(),
        }
    }

    fn draw(&self, rng: &mut PathRng) -> Outcome {
        let u = rng.next_f64();
        if u < self.c_quiet {
            Outcome::Quiet
        } else if u < self.c_type1 {
            Outcome::Type1
        } else if u < self.c_type2 {
            Outcome::Type2
        } else {
            Outcome::Shock
        }
    }

    /// Conditional event type given that an event happened: categorical
    /// over (type1, type2, shock) with weights (p1, p2, p0)/p.
    fn draw_event_kind(&self, rng: &mut PathRng, p: f64) -> Outcome {
        let u = rng.next_f64() * p;
        let p1 = self.c_type1 - self.c_quiet;
        let p2 = self.c_type2 - self.c_type1;
        if u < p1 {
            Outcome::Type1
        } else if u < p1 + p2 {
            Outcome::Type2
        } else {
            Outcome::Shock
        }
    }
}

fn mean_statistic(name: &str, sum: f64, sum_sq: f64, n: u64) -> Statistic {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    Statistic { name: name.into(), estimate: mean, std_error: (var / nf).sqrt(), n }
}

/// Expected count below which the per-cell normal z-score is meaningless
/// (single observations in a near-empty cell are Poisson, not normal).
const Z_SCORE_MIN_EXPECTED: f64 = 10.0;

fn compare_table(name: &str, empirical: &EmpiricalTable, exact: &[Vec<f64>], with_chi2: bool) -> Comparison {
    let n = empirical.n as f64;
    let mut tv = 0.0;
    let mut max_z = 0.0f64;
    let mut cells = 0usize;
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut z_scores = vec![vec![0.0; exact.first().map_or(0, |r| r.len())]; exact.len()];
    for (i, row) in exact.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let count = empirical.counts.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0);
            let phat = count as f64 / n;
            tv += (phat - p).abs();
            if p * n >= Z_SCORE_MIN_EXPECTED && p < 1.0 {
                let se = (p * (1.0 - p) / n).sqrt();
                let z = (phat - p) / se;
                z_scores[i][j] = z;
                max_z = max_z.max(z.abs());
                cells += 1;
            }
            observed.push(count);
            expected.push(p);
        }
    }
    let chi_square =
        if with_chi2 { Some(chi_square_test(&observed, &expected, empirical.n, 5.0)) } else { None };
    Comparison {
        name: name.into(),
        tv_distance: 0.5 * tv,
        tv_bound: 4.0 * (cells.max(1) as f64).sqrt() / n.sqrt(),
        max_abs_z: max_z,
        cells,
        chi_square,
        z_scores: Some(z_scores),
    }
}

fn compare_histogram(name: &str, hist: &Histogram, exact: &Pmf, with_chi2: bool) -> Comparison {
    let n = hist.n as f64;
    let mut tv = 0.0;
    let mut max_z = 0.0f64;
    let mut cells = 0usize;
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    for (i, &count) in hist.counts.iter().enumerate() {
        let k = hist.offset + i as i64;
        let p = exact.prob(k);
        let phat = count as f64 / n;
        tv += (phat - p).abs();
        if p * n >= Z_SCORE_MIN_EXPECTED && p < 1.0 {
            let se = (p * (1.0 - p) / n).sqrt();
            max_z = max_z.max((phat - p).abs() / se);
            cells += 1;
        }
        observed.push(count);
        expected.push(p);
    }
    // overflow bucket carries the reference law's unstored tail
    let tail = (1.0 - exact.total_mass()).max(0.0)
        + exact.iter().filter(|&(k, _)| k >= hist.offset + hist.counts.len() as i64).map(|(_, w)| w).sum::<f64>()
        + exact.iter().filter(|&(k, _)| k < hist.offset).map(|(_, w)| w).sum::<f64>();
    tv += (hist.overflow as f64 / n - tail).abs();
    observed.push(hist.overflow);
    expected.push(tail);
    let chi_square =
        if with_chi2 { Some(chi_square_test(&observed, &expected, hist.n, 5.0)) } else { None };
    Comparison {
        name: name.into(),
        tv_distance: 0.5 * tv,
        tv_bound: 4.0 * (cells.max(1) as f64).sqrt() / n.sqrt(),
        max_abs_z: max_z,
        cells,
        chi_square,
        z_scores: None,
    }
}

// ── Experiment: moments of the direct process ───────────────────────────────

const TABLE_CELL_CAP: usize = 1 << 20;
const S_HIST_CAP: usize = 1 << 16;

struct MomentsAcc {
    n: u64,
    sum_m1: u64,
    sum_m2: u64,
    sum_m1_sq: u64,
    sum_m2_sq: u64,
    sum_m1m2: u64,
    sum_m1m2_sq: u128,
    sum_s1: u64,
    sum_s2: u64,
    sum_s1_sq: u128,
    sum_s2_sq: u128,
    sum_s1s2: u128,
    sum_s1s2_sq: u128,
    sum_s_quad: u128,
    counts_table: Vec<Vec<u64>>,
    s_hist: Vec<u64>,
    s_overflow: u64,
}

impl MomentsAcc {
    fn merge(mut self, other: MomentsAcc) -> MomentsAcc {
        self.n += other.n;
        self.sum_m1 += other.sum_m1;
        self.sum_m2 += other.sum_m2;
        self.sum_m1_sq += other.sum_m1_sq;
        self.sum_m2_sq += other.sum_m2_sq;
        self.sum_m1m2 += other.sum_m1m2;
        self.sum_m1m2_sq += other.sum_m1m2_sq;
        self.sum_s1 += other.sum_s1;
        self.sum_s2 += other.sum_s2;
        self.sum_s1_sq += other.sum_s1_sq;
        self.sum_s2_sq += other.sum_s2_sq;
        self.sum_s1s2 += other.sum_s1s2;
        self.sum_s1s2_sq += other.sum_s1s2_sq;
        self.sum_s_quad += other.sum_s_quad;
        for (a, b) in self.counts_table.iter_mut().zip(other.counts_table) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.s_hist.iter_mut().zip(other.s_hist) {
            *x += y;
        }
        self.s_overflow += other.s_overflow;
        self
    }
}

/// Sample the direct shock process over `cfg.horizon` periods and report
/// count/claim moment estimates, the empirical `(M1, M2)` table, and the
/// histogram of the combined total `S`.
pub fn sample_paths(model: &ModelSpec, cfg: &SimConfig, threads: usize) -> SimSummary {
    let t = cfg.horizon as usize;
    let period = PeriodSampler::new(model);
    let claims1 = ClaimSampler::new(model.law1());
    let claims2 = ClaimSampler::new(model.law2());
    let pair = PairSampler::new(model);
    let table_dim = if (t + 1) * (t + 1) <= TABLE_CELL_CAP { t + 1 } else { 0 };
    let hist_len = ((t * model.max_event_claim() as usize) + 1).min(S_HIST_CAP);

    let accs = run_paths(
        cfg.n_paths,
        threads,
        || MomentsAcc {
            n: 0,
            sum_m1: 0,
            sum_m2: 0,
            sum_m1_sq: 0,
            sum_m2_sq: 0,
            sum_m1m2: 0,
            sum_m1m2_sq: 0,
            sum_s1: 0,
            sum_s2: 0,
            sum_s1_sq: 0,
            sum_s2_sq: 0,
            sum_s1s2: 0,
            sum_s1s2_sq: 0,
            sum_s_quad: 0,
            counts_table: vec![vec![0u64; table_dim]; table_dim],
            s_hist: vec![0u64; hist_len],
            s_overflow: 0,
        },
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_DIRECT, path);
            let (mut m1, mut m2, mut s1, mut s2) = (0u64, 0u64, 0u64, 0u64);
            for _ in 0..t {
                match period.draw(&mut rng) {
                    Outcome::Quiet => {}
                    Outcome::Type1 => {
                        m1 += 1;
                        s1 += claims1.draw(&mut rng);
                    }
                    Outcome::Type2 => {
                        m2 += 1;
                        s2 += claims2.draw(&mut rng);
                    }
                    Outcome::Shock => {
                        m1 += 1;
                        m2 += 1;
                        let (y3, y4) = pair.draw(&mut rng);
                        s1 += y3;
                        s2 += y4;
                    }
                }
            }
            acc.n += 1;
            acc.sum_m1 += m1;
            acc.sum_m2 += m2;
            acc.sum_m1_sq += m1 * m1;
            acc.sum_m2_sq += m2 * m2;
            acc.sum_m1m2 += m1 * m2;
            acc.sum_m1m2_sq += (m1 * m2) as u128 * (m1 * m2) as u128;
            acc.sum_s1 += s1;
            acc.sum_s2 += s2;
            acc.sum_s1_sq += (s1 as u128) * (s1 as u128);
            acc.sum_s2_sq += (s2 as u128) * (s2 as u128);
            acc.sum_s1s2 += (s1 as u128) * (s2 as u128);
            acc.sum_s1s2_sq += (s1 as u128) * (s1 as u128) * (s2 as u128) * (s2 as u128);
            let s = s1 + s2;
            acc.sum_s_quad += (s as u128) * (s as u128) * (s as u128) * (s as u128);
            if table_dim > 0 {
                acc.counts_table[m1 as usize][m2 as usize] += 1;
            }
            if (s as usize) < hist_len {
                acc.s_hist[s as usize] += 1;
            } else {
                acc.s_overflow += 1;
            }
        },
    );
    let acc = accs.into_iter().reduce(MomentsAcc::merge).expect("at least one thread");

    let n = acc.n;
    let sum_s: u64 = acc.sum_s1 + acc.sum_s2;
    let sum_s_sq: u128 = acc.sum_s1_sq + acc.sum_s2_sq + 2 * acc.sum_s1s2;
    let mut statistics = vec![
        mean_statistic("mean_m1", acc.sum_m1 as f64, acc.sum_m1_sq as f64, n),
        mean_statistic("mean_m2", acc.sum_m2 as f64, acc.sum_m2_sq as f64, n),
        mean_statistic("mean_m1m2", acc.sum_m1m2 as f64, acc.sum_m1m2_sq as f64, n),
        mean_statistic("mean_s1", acc.sum_s1 as f64, acc.sum_s1_sq as f64, n),
        mean_statistic("mean_s2", acc.sum_s2 as f64, acc.sum_s2_sq as f64, n),
        mean_statistic("mean_s1s2", acc.sum_s1s2 as f64, acc.sum_s1s2_sq as f64, n),
        mean_statistic("mean_s", sum_s as f64, sum_s_sq as f64, n),
        mean_statistic("mean_s_sq", sum_s_sq as f64, acc.sum_s_quad as f64, n),
    ];
    // reserve at the horizon: u + t - S, same spread as S
    let mean_s = statistics[6].estimate;
    let se_s = statistics[6].std_error;
    statistics.push(Statistic {
        name: "mean_reserve".into(),
        estimate: cfg.u as f64 + t as f64 - mean_s,
        std_error: se_s,
        n,
    });
    let mut tables = Vec::new();
    if table_dim > 0 {
        tables.push(EmpiricalTable { name: "counts_direct".into(), n, counts: acc.counts_table });
    }
    let histograms = vec![Histogram {
        name: "total_claims".into(),
        offset: 0,
        counts: acc.s_hist,
        overflow: acc.s_overflow,
        n,
    }];
    SimSummary {
        experiment: "moments".into(),
        config: *cfg,
        statistics,
        tables,
        histograms,
        comparisons: Vec::new(),
    }
}

// stream tags; one construction, one stream
const STREAM_DIRECT: u64 = 1;
const STREAM_COUNTS_THINNED: u64 = 2;
const STREAM_CLAIMS_DIRECT: u64 = 3;
const STREAM_CLAIMS_TYPE_I: u64 = 4;
const STREAM_CLAIMS_INDEP: u64 = 5;
const STREAM_RUIN: u64 = 6;
const STREAM_THIN_LEFT: u64 = 7;
const STREAM_THIN_RIGHT: u64 = 8;

// ── Experiment: equivalence of the constructions ────────────────────────────

struct TableAcc {
    n: u64,
    counts: Vec<Vec<u64>>,
}

impl TableAcc {
    fn new(rows: usize, cols: usize) -> TableAcc {
        TableAcc { n: 0, counts: vec![vec![0u64; cols]; rows] }
    }

    fn merge(mut self, other: TableAcc) -> TableAcc {
        self.n += other.n;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }

    fn into_table(self, name: &str) -> EmpiricalTable {
        EmpiricalTable { name: name.into(), n: self.n, counts: self.counts }
    }
}

fn empirical_tv(a: &EmpiricalTable, b: &EmpiricalTable) -> f64 {
    let mut tv = 0.0;
    for (ra, rb) in a.counts.iter().zip(&b.counts) {
        for (&ca, &cb) in ra.iter().zip(rb) {
            tv += (ca as f64 / a.n as f64 - cb as f64 / b.n as f64).abs();
        }
    }
    0.5 * tv
}

/// Simulate the direct pair processes against their equivalent
/// single-stream constructions and compare all empirical tables to the
/// exact laws.
///
/// Counts: `(M1, M2)` (one multinomial outcome per period) against
/// `(A1, A2)` (a Bernoulli event indicator thinning a categorical event
/// type). Claims: `(S1, S2)` against `(S3, S4)` built the same two ways,
/// and, when the shock pair law factorizes, the construction `(S5, S6)`
/// that attaches one independent claim per counted event. Each
/// construction draws from its own stream.
pub fn equivalence_report(
    model: &ModelSpec,
    t: usize,
    cfg: &SimConfig,
    include_independent: bool,
    threads: usize,
) -> Result<SimSummary, SimError> {
    if include_independent && !model.shock_joint().is_product_law(1e-12) {
        return Err(SimError::NonProductShockLaw);
    }
    let counts_law = counting::joint_pmf(model, t)
        .map_err(|e| SimError::AnalyticUnavailable(e.to_string()))?;
    let claims_law = aggregate::bivariate_claim_pmf(model, t)
        .map_err(|e| SimError::AnalyticUnavailable(e.to_string()))?;
    let (rows, cols) = claims_law.dims();
    if rows * cols > TABLE_CELL_CAP {
        return Err(SimError::TableTooLarge { cells: rows * cols, cap: TABLE_CELL_CAP });
    }

    let period = PeriodSampler::new(model);
    let claims1 = ClaimSampler::new(model.law1());
    let claims2 = ClaimSampler::new(model.law2());
    let pair = PairSampler::new(model);
    let marginal3 = ClaimSampler::new(&model.shock_joint().marginal3());
    let marginal4 = ClaimSampler::new(&model.shock_joint().marginal4());
    let p = model.shock().p();

    // (M1, M2): one categorical draw per period
    let counts_direct = run_paths(
        cfg.n_paths,
        threads,
        || TableAcc::new(t + 1, t + 1),
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_DIRECT, path);
            let (mut m1, mut m2) = (0usize, 0usize);
            for _ in 0..t {
                match period.draw(&mut rng) {
                    Outcome::Quiet => {}
                    Outcome::Type1 => m1 += 1,
                    Outcome::Type2 => m2 += 1,
                    Outcome::Shock => {
                        m1 += 1;
                        m2 += 1;
                    }
                }
            }
            acc.n += 1;
            acc.counts[m1][m2] += 1;
        },
    )
    .into_iter()
    .reduce(TableAcc::merge)
    .expect("at least one thread")
    .into_table("counts_direct");

    // (A1, A2): Bernoulli event indicator, then the event kind
    let counts_thinned = run_paths(
        cfg.n_paths,
        threads,
        || TableAcc::new(t + 1, t + 1),
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_COUNTS_THINNED, path);
            let (mut a1, mut a2) = (0usize, 0usize);
            for _ in 0..t {
                if rng.next_f64() < p {
                    match period.draw_event_kind(&mut rng, p) {
                        Outcome::Type1 => a1 += 1,
                        Outcome::Type2 => a2 += 1,
                        Outcome::Shock => {
                            a1 += 1;
                            a2 += 1;
                        }
                        Outcome::Quiet => unreachable!("event kind is never quiet"),
                    }
                }
            }
            acc.n += 1;
            acc.counts[a1][a2] += 1;
        },
    )
    .into_iter()
    .reduce(TableAcc::merge)
    .expect("at least one thread")
    .into_table("counts_thinned");

    // (S1, S2): claims attached to the direct multinomial outcomes
    let claims_direct = run_paths(
        cfg.n_paths,
        threads,
        || TableAcc::new(rows, cols),
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_CLAIMS_DIRECT, path);
            let (mut s1, mut s2) = (0usize, 0usize);
            for _ in 0..t {
                match period.draw(&mut rng) {
                    Outcome::Quiet => {}
                    Outcome::Type1 => s1 += claims1.draw(&mut rng) as usize,
                    Outcome::Type2 => s2 += claims2.draw(&mut rng) as usize,
                    Outcome::Shock => {
                        let (y3, y4) = pair.draw(&mut rng);
                        s1 += y3 as usize;
                        s2 += y4 as usize;
                    }
                }
            }
            acc.n += 1;
            acc.counts[s1][s2] += 1;
        },
    )
    .into_iter()
    .reduce(TableAcc::merge)
    .expect("at least one thread")
    .into_table("claims_direct");

    // (S3, S4): Bernoulli indicator, event kind, then the claim
    let claims_type_i = run_paths(
        cfg.n_paths,
        threads,
        || TableAcc::new(rows, cols),
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_CLAIMS_TYPE_I, path);
            let (mut s3, mut s4) = (0usize, 0usize);
            for _ in 0..t {
                if rng.next_f64() < p {
                    match period.draw_event_kind(&mut rng, p) {
                        Outcome::Type1 => s3 += claims1.draw(&mut rng) as usize,
                        Outcome::Type2 => s4 += claims2.draw(&mut rng) as usize,
                        Outcome::Shock => {
                            let (y3, y4) = pair.draw(&mut rng);
                            s3 += y3 as usize;
                            s4 += y4 as usize;
                        }
                        Outcome::Quiet => unreachable!("event kind is never quiet"),
                    }
                }
            }
            acc.n += 1;
            acc.counts[s3][s4] += 1;
        },
    )
    .into_iter()
    .reduce(TableAcc::merge)
    .expect("at least one thread")
    .into_table("claims_type_i");

    let mut tables = vec![counts_direct, counts_thinned, claims_direct, claims_type_i];

    // (S5, S6): claims attached to the counting pair, each counted event
    // paying exactly one of its two possible claim kinds (the shock share
    // of the count picks the shock claim). Per line this reproduces the
    // marginal total-claim process exactly; the joint law is NOT
    // reproducible from the counting pair alone, so the joint distance is
    // reported as a diagnostic only.
    if include_independent {
        let share1 = model.shock().p0() / (model.shock().p0() + model.shock().p1());
        let share2 = model.shock().p0() / (model.shock().p0() + model.shock().p2());
        let claims_indep = run_paths(
            cfg.n_paths,
            threads,
            || TableAcc::new(rows, cols),
            |path, acc| {
                let mut rng = PathRng::for_path(cfg.seed, STREAM_CLAIMS_INDEP, path);
                let (mut m1, mut m2) = (0usize, 0usize);
                for _ in 0..t {
                    match period.draw(&mut rng) {
                        Outcome::Quiet => {}
                        Outcome::Type1 => m1 += 1,
                        Outcome::Type2 => m2 += 1,
                        Outcome::Shock => {
                            m1 += 1;
                            m2 += 1;
                        }
                    }
                }
                let mut s5 = 0usize;
                for _ in 0..m1 {
                    s5 += if rng.next_f64() < share1 {
                        marginal3.draw(&mut rng) as usize
                    } else {
                        claims1.draw(&mut rng) as usize
                    };
                }
                let mut s6 = 0usize;
                for _ in 0..m2 {
                    s6 += if rng.next_f64() < share2 {
                        marginal4.draw(&mut rng) as usize
                    } else {
                        claims2.draw(&mut rng) as usize
                    };
                }
                acc.n += 1;
                acc.counts[s5][s6] += 1;
            },
        )
        .into_iter()
        .reduce(TableAcc::merge)
        .expect("at least one thread")
        .into_table("claims_independent");
        tables.push(claims_indep);
    }

    let mut comparisons = vec![
        compare_table("counts_direct_vs_exact", &tables[0], counts_law.table(), true),
        compare_table("counts_thinned_vs_exact", &tables[1], counts_law.table(), true),
        compare_table("claims_direct_vs_exact", &tables[2], claims_law.table(), true),
        compare_table("claims_type_i_vs_exact", &tables[3], claims_law.table(), true),
    ];
    if include_independent {
        // marginal processes match exactly; checked per line
        let mut exact_m1 = Pmf::point_mass(0);
        let mut exact_m2 = Pmf::point_mass(0);
        let step1 = aggregate::per_period_marginal_claim_law(model, counting::Margin::First);
        let step2 = aggregate::per_period_marginal_claim_law(model, counting::Margin::Second);
        for _ in 0..t {
            exact_m1 = exact_m1.convolve(&step1);
            exact_m2 = exact_m2.convolve(&step2);
        }
        let indep = &tables[4];
        let row_counts: Vec<u64> = indep.counts.iter().map(|r| r.iter().sum()).collect();
        let mut col_counts = vec![0u64; cols];
        for row in &indep.counts {
            for (j, &c) in row.iter().enumerate() {
                col_counts[j] += c;
            }
        }
        let hist1 = Histogram {
            name: "claims_independent_line1".into(),
            offset: 0,
            counts: row_counts,
            overflow: 0,
            n: indep.n,
        };
        let hist2 = Histogram {
            name: "claims_independent_line2".into(),
            offset: 0,
            counts: col_counts,
            overflow: 0,
            n: indep.n,
        };
        comparisons.push(compare_histogram("claims_independent_line1_vs_exact", &hist1, &exact_m1, true));
        comparisons.push(compare_histogram("claims_independent_line2_vs_exact", &hist2, &exact_m2, true));
        comparisons.push(compare_table(
            "claims_independent_joint_vs_exact_diagnostic",
            &tables[4],
            claims_law.table(),
            false,
        ));
    }
    comparisons.push(Comparison {
        name: "counts_direct_vs_thinned".into(),
        tv_distance: empirical_tv(&tables[0], &tables[1]),
        tv_bound: 4.0 * (((t + 1) * (t + 1)) as f64).sqrt() / (cfg.n_paths as f64).sqrt(),
        max_abs_z: 0.0,
        cells: (t + 1) * (t + 1),
        chi_square: None,
        z_scores: None,
    });
    comparisons.push(Comparison {
        name: "claims_direct_vs_type_i".into(),
        tv_distance: empirical_tv(&tables[2], &tables[3]),
        tv_bound: 4.0 * ((rows * cols) as f64).sqrt() / (cfg.n_paths as f64).sqrt(),
        max_abs_z: 0.0,
        cells: rows * cols,
        chi_square: None,
        z_scores: None,
    });

    Ok(SimSummary {
        experiment: "equivalence".into(),
        config: *cfg,
        statistics: Vec::new(),
        tables,
        histograms: Vec::new(),
        comparisons,
    })
}

// ── Experiment: ruin, ruin time, deficit ────────────────────────────────────

const RESERVE_HIST_LEN: usize = 4096;
const TAU_HIST_CAP: usize = 1 << 16;
const DEFICIT_HIST_CAP: usize = 1 << 16;

struct RuinAcc {
    n: u64,
    ruins: u64,
    sum_tau: u64,
    sum_tau_sq: u128,
    sum_deficit: u64,
    sum_deficit_sq: u128,
    deficit_hist: Vec<u64>,
    deficit_overflow: u64,
    tau_hist: Vec<u64>,
    tau_overflow: u64,
    terminal_reserve: Vec<u64>,
}

impl RuinAcc {
    fn merge(mut self, other: RuinAcc) -> RuinAcc {
        self.n += other.n;
        self.ruins += other.ruins;
        self.sum_tau += other.sum_tau;
        self.sum_tau_sq += other.sum_tau_sq;
        self.sum_deficit += other.sum_deficit;
        self.sum_deficit_sq += other.sum_deficit_sq;
        for (a, b) in self.deficit_hist.iter_mut().zip(other.deficit_hist) {
            *a += b;
        }
        self.deficit_overflow += other.deficit_overflow;
        for (a, b) in self.tau_hist.iter_mut().zip(other.tau_hist) {
            *a += b;
        }
        self.tau_overflow += other.tau_overflow;
        for (a, b) in self.terminal_reserve.iter_mut().zip(other.terminal_reserve) {
            *a += b;
        }
        self
    }
}

/// Estimate the finite-horizon ruin probability from `cfg.u`, the
/// conditional ruin time and deficit laws, and (when the Lundberg
/// exponent exists) a bound on the ruin mass beyond the horizon.
///
/// The estimate is always the finite-horizon quantity `psi(u, T)`; the
/// horizon travels with the output rather than being silently dropped.
pub fn estimate_ruin(model: &ModelSpec, cfg: &SimConfig, threads: usize) -> Result<SimSummary, SimError> {
    if cfg.horizon < 1 {
        return Err(SimError::InvalidConfig("ruin estimation needs a horizon of at least 1".into()));
    }
    let period = PeriodSampler::new(model);
    let claims1 = ClaimSampler::new(model.law1());
    let claims2 = ClaimSampler::new(model.law2());
    let pair = PairSampler::new(model);
    let horizon = cfg.horizon as u64;
    let max_deficit = ((model.max_event_claim() - 1).max(1) as usize).min(DEFICIT_HIST_CAP);
    let tau_len = (cfg.horizon as usize + 1).min(TAU_HIST_CAP);

    let accs = run_paths(
        cfg.n_paths,
        threads,
        || RuinAcc {
            n: 0,
            ruins: 0,
            sum_tau: 0,
            sum_tau_sq: 0,
            sum_deficit: 0,
            sum_deficit_sq: 0,
            deficit_hist: vec![0u64; max_deficit],
            deficit_overflow: 0,
            tau_hist: vec![0u64; tau_len],
            tau_overflow: 0,
            terminal_reserve: vec![0u64; RESERVE_HIST_LEN],
        },
        |path, acc| {
            let mut rng = PathRng::for_path(cfg.seed, STREAM_RUIN, path);
            let mut reserve = cfg.u as i64;
            let mut ruin: Option<(u64, i64)> = None;
            for step in 1..=horizon {
                let claim = match period.draw(&mut rng) {
                    Outcome::Quiet => 0,
                    Outcome::Type1 => claims1.draw(&mut rng),
                    Outcome::Type2 => claims2.draw(&mut rng),
                    Outcome::Shock => {
                        let (y3, y4) = pair.draw(&mut rng);
                        y3 + y4
                    }
                };
                reserve += 1 - claim as i64;
                if reserve < 0 {
                    ruin = Some((step, -reserve));
                    break;
                }
            }
            acc.n += 1;
            match ruin {
                Some((tau, deficit)) => {
                    acc.ruins += 1;
                    acc.sum_tau += tau;
                    acc.sum_tau_sq += (tau as u128) * (tau as u128);
                    acc.sum_deficit += deficit as u64;
                    acc.sum_deficit_sq += (deficit as u128) * (deficit as u128);
                    if (deficit as usize) <= max_deficit {
                        acc.deficit_hist[deficit as usize - 1] += 1;
                    } else {
                        acc.deficit_overflow += 1;
                    }
                    if (tau as usize) < tau_len {
                        acc.tau_hist[tau as usize] += 1;
                    } else {
                        acc.tau_overflow += 1;
                    }
                }
                None => {
                    let slot = (reserve as usize).min(RESERVE_HIST_LEN - 1);
                    acc.terminal_reserve[slot] += 1;
                }
            }
        },
    );
    let acc = accs.into_iter().reduce(RuinAcc::merge).expect("at least one thread");

    let n = acc.n as f64;
    let psi_hat = acc.ruins as f64 / n;
    let mut statistics = vec![Statistic {
        name: "psi_hat_finite_horizon".into(),
        estimate: psi_hat,
        std_error: (psi_hat * (1.0 - psi_hat) / n).sqrt(),
        n: acc.n,
    }];
    if acc.ruins > 0 {
        statistics.push(mean_statistic(
            "mean_ruin_time_given_ruin",
            acc.sum_tau as f64,
            acc.sum_tau_sq as f64,
            acc.ruins,
        ));
        statistics.push(mean_statistic(
            "mean_deficit_given_ruin",
            acc.sum_deficit as f64,
            acc.sum_deficit_sq as f64,
            acc.ruins,
        ));
    }
    if let Ok(Some(adj)) = ruin::adjustment_coefficient(model) {
        // ruin beyond the horizon needs the walk to climb from the
        // terminal reserve, bounded by the Lundberg tail at each level
        let bound: f64 = acc
            .terminal_reserve
            .iter()
            .enumerate()
            .map(|(r, &count)| count as f64 * adj.z_star.powi(-(r as i32)))
            .sum::<f64>()
            / n;
        statistics.push(Statistic {
            name: "residual_ruin_bound".into(),
            estimate: bound,
            std_error: 0.0,
            n: acc.n - acc.ruins,
        });
    }

    let histograms = vec![
        Histogram {
            name: "deficit_given_ruin".into(),
            offset: 1,
            counts: acc.deficit_hist,
            overflow: acc.deficit_overflow,
            n: acc.ruins,
        },
        Histogram {
            name: "ruin_time_given_ruin".into(),
            offset: 0,
            counts: acc.tau_hist,
            overflow: acc.tau_overflow,
            n: acc.ruins,
        },
    ];

    Ok(SimSummary {
        experiment: "ruin".into(),
        config: *cfg,
        statistics,
        tables: Vec::new(),
        histograms,
        comparisons: Vec::new(),
    })
}

// ── Experiment: thinning equivalence by sampling ────────────────────────────

struct HistAcc {
    n: u64,
    counts: Vec<u64>,
    overflow: u64,
}

impl HistAcc {
    fn merge(mut self, other: HistAcc) -> HistAcc {
        self.n += other.n;
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        self
    }
}

fn draw_geometric(rng: &mut PathRng, continuation: f64) -> u64 {
    if continuation <= 0.0 {
        return 0;
    }
    // inverse transform on the survival function q^{k+1}
    let u = rng.next_f64();
    ((1.0 - u).ln() / continuation.ln()).floor().max(0.0) as u64
}

/// Sample both compound-geometric constructions and compare each
/// histogram to its exact law (and the two exact laws to each other).
pub fn thinning_mc_check(
    xlaw: &Pmf,
    p_g: f64,
    c: f64,
    cfg: &SimConfig,
    threads: usize,
) -> Result<(SimSummary, ThinningCheck), SimError> {
    let k_max = 1023u64;
    let exact = ruin::thinning_equivalence(xlaw, p_g, c, k_max)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let sampler = ClaimSampler::new(
        // xlaw is strictly positive with unit mass, re-expressed as pairs
        &crate::model::ClaimLaw::new(
            &xlaw.iter().filter(|&(_, w)| w > 0.0).map(|(k, w)| (k as u64, w)).collect::<Vec<_>>(),
        )
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?,
    );
    let hist_len = k_max as usize + 1;
    let thinning_prob = exact.thinning_prob;

    let run = |stream: u64, thinned: bool| {
        run_paths(
            cfg.n_paths,
            threads,
            || HistAcc { n: 0, counts: vec![0u64; hist_len], overflow: 0 },
            |path, acc| {
                let mut rng = PathRng::for_path(cfg.seed, stream, path);
                let continuation = if thinned { c * p_g } else { p_g };
                let k = draw_geometric(&mut rng, continuation);
                let mut total = 0u64;
                for _ in 0..k {
                    if thinned {
                        if rng.next_f64() < thinning_prob {
                            total += sampler.draw(&mut rng);
                        }
                    } else {
                        total += sampler.draw(&mut rng);
                    }
                }
                acc.n += 1;
                if (total as usize) < hist_len {
                    acc.counts[total as usize] += 1;
                } else {
                    acc.overflow += 1;
                }
            },
        )
        .into_iter()
        .reduce(HistAcc::merge)
        .expect("at least one thread")
    };

    let left = run(STREAM_THIN_LEFT, true);
    let right = run(STREAM_THIN_RIGHT, false);
    let histograms = vec![
        Histogram {
            name: "thinned_compound".into(),
            offset: 0,
            counts: left.counts,
            overflow: left.overflow,
            n: left.n,
        },
        Histogram {
            name: "plain_compound".into(),
            offset: 0,
            counts: right.counts,
            overflow: right.overflow,
            n: right.n,
        },
    ];
    let comparisons = vec![
        compare_histogram("thinned_vs_exact", &histograms[0], &exact.pmf_left, true),
        compare_histogram("plain_vs_exact", &histograms[1], &exact.pmf_right, true),
        Comparison {
            name: "exact_left_vs_exact_right".into(),
            tv_distance: exact.pmf_left.tv_distance(&exact.pmf_right),
            tv_bound: 0.0,
            max_abs_z: 0.0,
            cells: hist_len,
            chi_square: None,
            z_scores: None,
        },
    ];
    let statistics = vec![Statistic {
        name: "max_abs_diff_exact".into(),
        estimate: exact.max_abs_diff,
        std_error: 0.0,
        n: cfg.n_paths,
    }];
    Ok((
        SimSummary {
            experiment: "thinning".into(),
            config: *cfg,
            statistics,
            tables: Vec::new(),
            histograms,
            comparisons,
        },
        exact,
    ))
}
