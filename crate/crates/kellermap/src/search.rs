//! Randomized and constructive search over cubic Keller specs.
//!
//! Every trial analyzes one sampled coefficient matrix; unit-Jacobian specs
//! are run through the difference-sequence detector, and a spec that fails
//! to vanish within bounds is flagged as an anomaly. For dimensions 2 and 3
//! a nonzero anomaly count contradicts the verified case analysis and means
//! an engine bug; the records exist so that any such event is loud and
//! reproducible. Trials are deterministic functions of (strategy, count,
//! seed, bounds); only wall-clock fields vary between runs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::keller::{
    build_cubic_map, r211_spec, r212_spec, rank1_spec, rank1_spec_n2, CaseTag, CubicKellerSpec,
    KellerError, SpecJson,
};
use crate::linalg::RationalMatrix;
use crate::map::{default_degree_cap, detect_polynomial_inverse};
use crate::rat::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Uniform small-integer matrices filtered by the unit-Jacobian check.
    DenseRandom,
    /// Rank-at-most-1 constructions satisfying the constraint by design.
    Rank1,
    /// Rank-2 constructions alternating the two normal forms.
    Rank2,
    /// Strictly triangular dependency structure (unitriangular Jacobian).
    Triangular,
    /// Cycles through all applicable strategies.
    Mixed,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::DenseRandom => "dense_random",
            Strategy::Rank1 => "rank1",
            Strategy::Rank2 => "rank2",
            Strategy::Triangular => "triangular",
            Strategy::Mixed => "mixed",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug)]
pub enum SearchError {
    UnsupportedDimension { n: usize },
    StrategyUnavailable { strategy: Strategy, n: usize },
    Keller(KellerError),
    Io(std::io::Error),
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::UnsupportedDimension { n } => {
                write!(f, "campaigns support n in {{2, 3, 4}}, got {n}")
            }
            SearchError::StrategyUnavailable { strategy, n } => {
                write!(f, "strategy {strategy} is not available at n = {n}")
            }
            SearchError::Keller(e) => write!(f, "{e}"),
            SearchError::Io(e) => write!(f, "log write failed: {e}"),
        }
    }
}

impl std::error::Error for SearchError {}

impl From<KellerError> for SearchError {
    fn from(e: KellerError) -> Self {
        SearchError::Keller(e)
    }
}

impl From<std::io::Error> for SearchError {
    fn from(e: std::io::Error) -> Self {
        SearchError::Io(e)
    }
}

/// Campaign configuration. `entry_range` bounds sampled integers; small
/// entries keep coefficient growth tame while still covering every branch.
#[derive(Debug, Clone)]
pub struct CampaignParams {
    pub n: usize,
    pub strategy: Strategy,
    pub count: usize,
    pub seed: u64,
    pub max_m: usize,
    pub degree_cap: Option<u64>,
    pub entry_range: (i64, i64),
}

impl CampaignParams {
    pub fn new(n: usize, strategy: Strategy, count: usize, seed: u64) -> Self {
        CampaignParams {
            n,
            strategy,
            count,
            seed,
            max_m: 8,
            degree_cap: None,
            entry_range: (-3, 3),
        }
    }
}

/// Persisted outcome of one trial.
#[derive(Serialize, Deserialize)]
pub struct TrialRecord {
    /// Per-trial sub-seed; replaying a single trial needs only this.
    pub seed: u64,
    pub strategy: Strategy,
    pub spec: SpecJson,
    pub is_keller: bool,
    pub case_tag: CaseTag,
    pub vanishing_index: Option<usize>,
    pub bound_exceeded: bool,
    pub degree_cap_hit: bool,
    pub max_degree_seen: u64,
    /// A unit-Jacobian spec that failed to vanish within bounds.
    pub anomaly: bool,
    pub wall_ms: u64,
}

fn sample_int(rng: &mut ChaCha8Rng, range: (i64, i64)) -> Rational {
    Rational::from_integer(rng.gen_range(range.0..=range.1))
}

fn sample_nonzero(rng: &mut ChaCha8Rng, range: (i64, i64)) -> Rational {
    loop {
        let v = sample_int(rng, range);
        if !v.is_zero() {
            return v;
        }
    }
}

fn dense_random_spec(rng: &mut ChaCha8Rng, n: usize, range: (i64, i64)) -> CubicKellerSpec {
    let rows: Vec<Vec<Rational>> = (0..n)
        .map(|_| (0..n).map(|_| sample_int(rng, range)).collect())
        .collect();
    CubicKellerSpec::analyze(RationalMatrix::from_rows(rows).unwrap())
        .expect("square matrix within supported dimensions")
}

fn rank1_random_spec(rng: &mut ChaCha8Rng, n: usize, range: (i64, i64)) -> CubicKellerSpec {
    if n == 2 {
        rank1_spec_n2(sample_int(rng, range), sample_int(rng, range))
    } else {
        rank1_spec(
            sample_int(rng, range),
            sample_int(rng, range),
            sample_int(rng, range),
            sample_int(rng, range),
        )
    }
}

fn rank2_random_spec(rng: &mut ChaCha8Rng, index: usize, range: (i64, i64)) -> CubicKellerSpec {
    if index % 2 == 0 {
        // No-feedback form; needs s != 0 and p + l^3 q != 0 for rank 2.
        loop {
            let p = sample_int(rng, range);
            let q = sample_int(rng, range);
            let s = sample_nonzero(rng, range);
            let l = sample_int(rng, range);
            if p.add(&l.pow(3).mul(&q)).is_zero() {
                continue;
            }
            return r211_spec(p, q, s, l);
        }
    } else {
        // Feedback form; t, b, l nonzero pins the feedback sub-case.
        let t = sample_nonzero(rng, range);
        let b = sample_nonzero(rng, range);
        let s = sample_int(rng, range);
        let l = sample_nonzero(rng, range);
        r212_spec(t, b, s, l)
    }
}

fn triangular_random_spec(rng: &mut ChaCha8Rng, n: usize, range: (i64, i64)) -> CubicKellerSpec {
    // Entries below the diagonal only: x A_i involves x_j with j > i, so the
    // Jacobian is unitriangular.
    let mut m = RationalMatrix::zero(n, n);
    for r in 0..n {
        for c in 0..r {
            m.set(r, c, sample_int(rng, range));
        }
    }
    CubicKellerSpec::analyze(m).expect("square matrix")
}

fn spec_for_trial(
    strategy: Strategy,
    n: usize,
    index: usize,
    rng: &mut ChaCha8Rng,
    range: (i64, i64),
) -> CubicKellerSpec {
    match strategy {
        Strategy::DenseRandom => dense_random_spec(rng, n, range),
        Strategy::Rank1 => rank1_random_spec(rng, n, range),
        Strategy::Rank2 => rank2_random_spec(rng, index, range),
        Strategy::Triangular => triangular_random_spec(rng, n, range),
        Strategy::Mixed => {
            let rotation: &[Strategy] = if n == 3 {
                &[
                    Strategy::DenseRandom,
                    Strategy::Rank1,
                    Strategy::Rank2,
                    Strategy::Triangular,
                ]
            } else {
                &[Strategy::DenseRandom, Strategy::Rank1, Strategy::Triangular]
            };
            spec_for_trial(rotation[index % rotation.len()], n, index, rng, range)
        }
    }
}

/// Deterministic stream of candidate specs for a strategy. Constructive
/// strategies yield unit-Jacobian specs by design; `dense_random` yields raw
/// samples whose flag is recorded per trial.
pub fn sample_keller_candidates(
    n: usize,
    strategy: Strategy,
    count: usize,
    seed: u64,
    entry_range: (i64, i64),
) -> Result<Vec<CubicKellerSpec>, SearchError> {
    check_strategy(n, strategy)?;
    let seeds = trial_seeds(seed, count);
    Ok(seeds
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            spec_for_trial(strategy, n, i, &mut rng, entry_range)
        })
        .collect())
}

fn check_strategy(n: usize, strategy: Strategy) -> Result<(), SearchError> {
    if !(2..=4).contains(&n) {
        return Err(SearchError::UnsupportedDimension { n });
    }
    if strategy == Strategy::Rank2 && n != 3 {
        return Err(SearchError::StrategyUnavailable { strategy, n });
    }
    Ok(())
}

fn trial_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| master.next_u64()).collect()
}

/// Aggregate view of a finished campaign.
pub struct Summary {
    pub total: usize,
    pub keller_count: usize,
    pub anomalies: usize,
    /// (case tag, vanishing index) -> count over unit-Jacobian trials.
    pub histogram: BTreeMap<(CaseTag, Option<usize>), usize>,
}

impl Summary {
    fn from_records(records: &[TrialRecord]) -> Summary {
        let mut histogram = BTreeMap::new();
        let mut keller_count = 0;
        let mut anomalies = 0;
        for r in records {
            if r.is_keller {
                keller_count += 1;
                *histogram
                    .entry((r.case_tag, r.vanishing_index))
                    .or_insert(0) += 1;
            }
            if r.anomaly {
                anomalies += 1;
            }
        }
        Summary {
            total: records.len(),
            keller_count,
            anomalies,
            histogram,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let hist: Vec<serde_json::Value> = self
            .histogram
            .iter()
            .map(|((case, m), count)| {
                serde_json::json!({
                    "case": case.to_string(),
                    "vanishing_index": m,
                    "count": count,
                })
            })
            .collect();
        serde_json::json!({
            "total": self.total,
            "keller": self.keller_count,
            "anomalies": self.anomalies,
            "histogram": hist,
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<16} {:>6}",
            "case", "vanishing_index", "count"
        )?;
        for ((case, m), count) in &self.histogram {
            let m_str = match m {
                Some(m) => m.to_string(),
                None => "-".to_string(),
            };
            writeln!(f, "{:<12} {:<16} {:>6}", case.to_string(), m_str, count)?;
        }
        write!(
            f,
            "total: {} trials, {} with unit Jacobian, {} anomalies",
            self.total, self.keller_count, self.anomalies
        )
    }
}

pub struct Campaign {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn run_trial(
    params: &CampaignParams,
    index: usize,
    trial_seed: u64,
) -> TrialRecord {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let spec = spec_for_trial(params.strategy, params.n, index, &mut rng, params.entry_range);
    let cap = params
        .degree_cap
        .unwrap_or_else(|| default_degree_cap(params.n));
    let mut vanishing_index = None;
    let mut bound_exceeded = false;
    let mut degree_cap_hit = false;
    let mut max_degree_seen = 1;
    if spec.is_keller() {
        let phi = build_cubic_map(&spec);
        let report = detect_polynomial_inverse(&phi, params.max_m, cap)
            .expect("cubic specs always have identity linear part");
        vanishing_index = report.vanishing_index;
        bound_exceeded = report.bound_exceeded;
        degree_cap_hit = report.degree_cap_hit;
        max_degree_seen = report.max_degree_seen();
    }
    let anomaly = spec.is_keller() && (bound_exceeded || degree_cap_hit);
    TrialRecord {
        seed: trial_seed,
        strategy: params.strategy,
        spec: SpecJson::from_spec(&spec),
        is_keller: spec.is_keller(),
        case_tag: spec.case_tag(),
        vanishing_index,
        bound_exceeded,
        degree_cap_hit,
        max_degree_seen,
        anomaly,
        wall_ms: start.elapsed().as_millis() as u64,
    }
}

/// Runs a campaign, optionally appending one JSON line per record to
/// `log_path`. Log write failures abort the campaign rather than drop data.
pub fn run_campaign(
    params: &CampaignParams,
    log_path: Option<&Path>,
) -> Result<Campaign, SearchError> {
    check_strategy(params.n, params.strategy)?;
    let seeds = trial_seeds(params.seed, params.count);
    let records: Vec<TrialRecord> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| run_trial(params, i, s))
        .collect();
    if let Some(path) = log_path {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = BufWriter::new(file);
        for r in &records {
            let line = serde_json::to_string(r).expect("record serialization cannot fail");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    let summary = Summary::from_records(&records);
    Ok(Campaign { records, summary })
}

/// Parses a JSONL record log back into memory.
pub fn read_log(text: &str) -> Result<Vec<TrialRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
