//! Seeded Monte Carlo benchmark harness.
//!
//! For every run a fresh simulated instance is generated, every configured
//! selector runs over the whole `M` grid, and the results land in a long
//!-format record table. Two protocol rules from the benchmark apply:
//!
//! * Fallback: when a selector reports `NotFound` at some `M`, one
//!   uniformly random unselected sensor is added to the same selector's
//!   `M-1` result.
//! * Drop rule: when the fallback chain is broken (no usable `M-1`
//!   result), that `M` is dropped for every method in the run, so
//!   aggregates always compare methods on identical cells.
//!
//! Aggregation is descriptive: per-cell means with standard errors, fail
//! rates against the exhaustive baseline, and a pairwise mean-difference
//! table (no mixed-effects modeling). Exported CSV uses shortest
//! round-trip float formatting so a replay with the same seeds is
//! byte-identical; wall times are captured but written as 0 unless timing
//! output is enabled, keeping replays reproducible by default.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    backward_elimination, exhaustive, forward_selection, random_baseline, EXHAUSTIVE_CAP,
};
use crate::error::{Error, Result};
use crate::gs_select::{gs_select, GsConfig, GsVariant, SelectStatus, SelectionResult};
use crate::linalg::{reduce_pair, solve_gevd, CovariancePair};
use crate::simkit::{derive_seed, simulate_pair, SceneConfig};
use crate::stecs::{stecs_select, StecsConfig};

/// A selection method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gs,
    GsDiag,
    Be,
    Fs,
    Stecs,
    Exhaustive,
    Random,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gs,
        Method::GsDiag,
        Method::Be,
        Method::Fs,
        Method::Stecs,
        Method::Exhaustive,
        Method::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gs => "gs",
            Method::GsDiag => "gs-diag",
            Method::Be => "be",
            Method::Fs => "fs",
            Method::Stecs => "stecs",
            Method::Exhaustive => "exhaustive",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

/// Benchmark configuration; serializable as versioned JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Schema version; currently 1.
    pub version: u32,
    pub c: usize,
    pub l: usize,
    pub k: usize,
    /// Selection budgets, ascending.
    pub m_grid: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// A method fails a cell when exhaustive beats it by more than this.
    #[serde(default = "default_fail_threshold")]
    pub fail_threshold_db: f64,
    /// Fixed source counts; `None` randomizes in [1, 2C] per run.
    #[serde(default)]
    pub n1: Option<usize>,
    #[serde(default)]
    pub n2: Option<usize>,
    /// Samples per class stream.
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_random_draws")]
    pub random_draws: usize,
    /// Write measured wall times instead of zeros.
    #[serde(default)]
    pub timing: bool,
}

fn default_fail_threshold() -> f64 {
    10.0
}

fn default_t() -> usize {
    10_000
}

fn default_random_draws() -> usize {
    1000
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::InvalidConfig(format!(
                "unsupported config version {}",
                self.version
            )));
        }
        if self.runs < 1 {
            return Err(Error::InvalidConfig("need at least one run".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("need at least one method".into()));
        }
        if self.m_grid.is_empty() || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "m_grid must be non-empty and strictly ascending".into(),
            ));
        }
        for &m in &self.m_grid {
            if m < self.k || m > self.c {
                return Err(Error::InvalidConfig(format!(
                    "budget M={m} must satisfy K={} <= M <= C={}",
                    self.k, self.c
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    /// `M-1` result extended by a random sensor after a NotFound.
    Fallback,
    /// Removed for all methods by the drop rule.
    Dropped,
    /// Selector returned an error or panicked.
    Error,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Fallback => "fallback",
            CellStatus::Dropped => "dropped",
            CellStatus::Error => "error",
        }
    }

    /// Whether the cell contributes to aggregates.
    pub fn survives(&self) -> bool {
        matches!(self, CellStatus::Ok | CellStatus::Fallback)
    }
}

/// One (run, method, M) cell.
#[derive(Debug, Clone)]
pub struct Record {
    pub run: usize,
    pub seed: u64,
    pub method: Method,
    pub m: usize,
    /// NaN for dropped/error cells.
    pub grq_db: f64,
    pub status: CellStatus,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub method: Method,
    pub m: usize,
    pub mean_db: f64,
    /// Standard error of the mean: sample std / sqrt(n).
    pub sem_db: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub records: Vec<Record>,
}

fn run_method(
    method: Method,
    pair: &CovariancePair,
    m: usize,
    config: &BenchConfig,
    cell_seed: u64,
) -> Result<SelectionResult> {
    match method {
        Method::Gs => gs_select(pair, m, &GsConfig::for_variant(GsVariant::FullBlocks)),
        Method::GsDiag => gs_select(pair, m, &GsConfig::for_variant(GsVariant::DiagBlocksOnly)),
        Method::Be => backward_elimination(pair, m).map(|(r, _)| r),
        Method::Fs => forward_selection(pair, m).map(|(r, _)| r),
        Method::Stecs => stecs_select(pair, m, &StecsConfig::default()),
        Method::Exhaustive => exhaustive(pair, m, EXHAUSTIVE_CAP),
        Method::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
            let grq = random_baseline(pair, m, config.random_draws, false, &mut rng)?;
            // The random baseline reports an average, not a single set.
            Ok(SelectionResult {
                sensors: Vec::new(),
                solution: None,
                mu_final: None,
                trace_of_search: Vec::new(),
                status: SelectStatus::Converged,
                fallback_used: false,
            })
            .map(|mut r: SelectionResult| {
                r.trace_of_search.push((grq, m));
                r
            })
        }
    }
}

/// Run the full protocol with one worker. Record order is deterministic:
/// runs are seeded independently (`derive_seed(config.seed, run)`) and
/// concatenated in run order.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchmarkReport> {
    run_benchmark_threads(config, 1)
}

/// Run the protocol with up to `threads` OS threads, one run per task.
/// Output is identical to the single-threaded runner because every run
/// owns an independent seed and records are reassembled in run order.
pub fn run_benchmark_threads(config: &BenchConfig, threads: usize) -> Result<BenchmarkReport> {
    config.validate()?;
    let records = if threads <= 1 {
        let mut records = Vec::new();
        for run in 0..config.runs {
            records.extend(execute_run(config, run)?);
        }
        records
    } else {
        let mut per_run: Vec<Option<Vec<Record>>> = (0..config.runs).map(|_| None).collect();
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::new();
            for chunk_start in 0..threads.min(config.runs) {
                let stride = threads.min(config.runs);
                handles.push(scope.spawn(move || -> Result<Vec<(usize, Vec<Record>)>> {
                    let mut out = Vec::new();
                    let mut run = chunk_start;
                    while run < config.runs {
                        out.push((run, execute_run(config, run)?));
                        run += stride;
                    }
                    Ok(out)
                }));
            }
            for handle in handles {
                let batch = handle.join().expect("benchmark worker panicked")?;
                for (run, recs) in batch {
                    per_run[run] = Some(recs);
                }
            }
            Ok(())
        })?;
        per_run
            .into_iter()
            .flat_map(|r| r.expect("every run produced records"))
            .collect()
    };

    Ok(BenchmarkReport {
        config: config.clone(),
        records,
    })
}

/// Execute all methods over the `M` grid for one run.
fn execute_run(config: &BenchConfig, run: usize) -> Result<Vec<Record>> {
    {
        let instance_seed = derive_seed(config.seed, run as u64);
        let mut scene_cfg = SceneConfig::new(config.c, config.l);
        scene_cfg.n1 = config.n1;
        scene_cfg.n2 = config.n2;
        scene_cfg.t = config.t;
        let (_, pair) = simulate_pair(&scene_cfg, config.k, instance_seed)?;
        let mut fallback_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(instance_seed, 0xFA11_BACC));

        let mut run_records = Vec::new();
        let mut dropped_ms: BTreeSet<usize> = BTreeSet::new();

        for &method in &config.methods {
            // Last usable sensor set of this method, for the fallback chain.
            let mut last: Option<Vec<usize>> = None;
            for &m in &config.m_grid {
                let cell_seed = derive_seed(instance_seed, 0x4000 + m as u64);
                let started = Instant::now();
                let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    run_method(method, &pair, m, config, cell_seed)
                }));
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;

                let record = match outcome {
                    Err(_) => {
                        log::error!("{method} panicked (run {run}, M={m})");
                        last = None;
                        Record {
                            run,
                            seed: instance_seed,
                            method,
                            m,
                            grq_db: f64::NAN,
                            status: CellStatus::Error,
                            wall_ms,
                        }
                    }
                    Ok(Err(e)) => {
                        log::error!("{method} failed (run {run}, M={m}): {e}");
                        last = None;
                        Record {
                            run,
                            seed: instance_seed,
                            method,
                            m,
                            grq_db: f64::NAN,
                            status: CellStatus::Error,
                            wall_ms,
                        }
                    }
                    Ok(Ok(res)) => match (res.status, method) {
                        (SelectStatus::Converged, Method::Random) => Record {
                            run,
                            seed: instance_seed,
                            method,
                            m,
                            grq_db: res.trace_of_search[0].0,
                            status: CellStatus::Ok,
                            wall_ms,
                        },
                        (SelectStatus::Converged, _) => {
                            last = Some(res.sensors.clone());
                            Record {
                                run,
                                seed: instance_seed,
                                method,
                                m,
                                grq_db: res.grq_db().expect("converged result has a solution"),
                                status: CellStatus::Ok,
                                wall_ms,
                            }
                        }
                        (SelectStatus::NotFound, _) => {
                            match apply_fallback(&pair, &last, m, &mut fallback_rng)? {
                                Some((sensors, grq)) => {
                                    last = Some(sensors);
                                    Record {
                                        run,
                                        seed: instance_seed,
                                        method,
                                        m,
                                        grq_db: grq,
                                        status: CellStatus::Fallback,
                                        wall_ms,
                                    }
                                }
                                None => {
                                    dropped_ms.insert(m);
                                    last = None;
                                    Record {
                                        run,
                                        seed: instance_seed,
                                        method,
                                        m,
                                        grq_db: f64::NAN,
                                        status: CellStatus::Dropped,
                                        wall_ms,
                                    }
                                }
                            }
                        }
                    },
                };
                run_records.push(record);
            }
        }

        // Drop rule: a broken fallback chain at some M removes that M for
        // every method of this run.
        for rec in &mut run_records {
            if dropped_ms.contains(&rec.m) && rec.status.survives() {
                rec.status = CellStatus::Dropped;
                rec.grq_db = f64::NAN;
            }
        }
        Ok(run_records)
    }
}

/// Extend the method's `M-1` set by one random unselected sensor; `None`
/// when the chain is broken.
fn apply_fallback(
    pair: &CovariancePair,
    last: &Option<Vec<usize>>,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Vec<usize>, f64)>> {
    let Some(prev) = last else {
        return Ok(None);
    };
    if prev.len() + 1 != m {
        return Ok(None);
    }
    let pool: Vec<usize> = (0..pair.dims.c).filter(|s| !prev.contains(s)).collect();
    let Some(&extra) = pool.choose(rng) else {
        return Ok(None);
    };
    let mut sensors = prev.clone();
    sensors.push(extra);
    sensors.sort_unstable();
    let reduced = reduce_pair(pair, &sensors)?;
    let grq = solve_gevd(&reduced, pair.dims.k)?.grq_db;
    Ok(Some((sensors, grq)))
}

/// Mean and standard error per (method, M) over surviving cells.
pub fn summarize(report: &BenchmarkReport) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &method in &report.config.methods {
        for &m in &report.config.m_grid {
            let vals: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.method == method && r.m == m && r.status.survives())
                .map(|r| r.grq_db)
                .collect();
            let n = vals.len();
            if n == 0 {
                continue;
            }
            let mean = vals.iter().sum::<f64>() / n as f64;
            let sem = if n > 1 {
                let var =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                method,
                m,
                mean_db: mean,
                sem_db: sem,
                n,
            });
        }
    }
    rows
}

/// Fraction of cells in `m_subset` where the exhaustive baseline beats the
/// method by more than the configured threshold. Only cells where both
/// records survive are counted.
pub fn fail_rate(report: &BenchmarkReport, method: Method, m_subset: &[usize]) -> Result<f64> {
    if m_subset.is_empty() {
        return Err(Error::InvalidConfig("empty M subset".into()));
    }
    if !report.config.methods.contains(&Method::Exhaustive) {
        return Err(Error::InvalidConfig(
            "fail rate needs the exhaustive baseline in the report".into(),
        ));
    }
    let mut total = 0usize;
    let mut failed = 0usize;
    for run in 0..report.config.runs {
        for &m in m_subset {
            let find = |meth: Method| {
                report
                    .records
                    .iter()
                    .find(|r| r.run == run && r.m == m && r.method == meth)
            };
            let (Some(exh), Some(rec)) = (find(Method::Exhaustive), find(method)) else {
                continue;
            };
            if !(exh.status.survives() && rec.status.survives()) {
                continue;
            }
            total += 1;
            if exh.grq_db - rec.grq_db > report.config.fail_threshold_db {
                failed += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InvalidConfig(
            "no surviving cells for the requested method/M subset".into(),
        ));
    }
    Ok(failed as f64 / total as f64)
}

/// Pairwise mean GRQ differences `row - column` over cells where both
/// methods survive. Descriptive only.
pub fn pairwise_differences(report: &BenchmarkReport) -> Vec<(Method, Method, f64, usize)> {
    let methods = &report.config.methods;
    let mut out = Vec::new();
    for &a in methods {
        for &b in methods {
            if a >= b {
                continue;
            }
            let mut acc = 0.0;
            let mut n = 0usize;
            for run in 0..report.config.runs {
                for &m in &report.config.m_grid {
                    let find = |meth: Method| {
                        report.records.iter().find(|r| {
                            r.run == run && r.m == m && r.method == meth && r.status.survives()
                        })
                    };
                    if let (Some(ra), Some(rb)) = (find(a), find(b)) {
                        acc += ra.grq_db - rb.grq_db;
                        n += 1;
                    }
                }
            }
            if n > 0 {
                out.push((a, b, acc / n as f64, n));
            }
        }
    }
    out
}

pub const RECORDS_HEADER: &str = "run,seed,method,M,grq_db,status,wall_ms";
pub const SUMMARY_HEADER: &str = "method,M,mean_db,sem_db,n";
pub const FAILRATES_HEADER: &str = "method,fail_rate,n_cells";
pub const PAIRWISE_HEADER: &str = "method_a,method_b,mean_diff_db,n_cells";

pub fn records_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in &report.records {
        let wall = if report.config.timing { r.wall_ms } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.run,
            r.seed,
            r.method,
            r.m,
            r.grq_db,
            r.status.as_str(),
            wall
        ));
    }
    out
}

pub fn summary_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in summarize(report) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.method, row.m, row.mean_db, row.sem_db, row.n
        ));
    }
    out
}

pub fn failrates_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(FAILRATES_HEADER);
    out.push('\n');
    if !report.config.methods.contains(&Method::Exhaustive) {
        return out;
    }
    for &method in &report.config.methods {
        if let Ok(rate) = fail_rate(report, method, &report.config.m_grid) {
            let n = report
                .records
                .iter()
                .filter(|r| r.method == method && r.status.survives())
                .count();
            out.push_str(&format!("{method},{rate},{n}\n"));
        }
    }
    out
}

pub fn pairwise_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(PAIRWISE_HEADER);
    out.push('\n');
    for (a, b, diff, n) in pairwise_differences(report) {
        out.push_str(&format!("{a},{b},{diff},{n}\n"));
    }
    out
}

/// Per-method plot data: `M,mean_db,sem_db` rows.
pub fn plot_csv(report: &BenchmarkReport, method: Method) -> String {
    let mut out = String::from("M,mean_db,sem_db\n");
    for row in summarize(report) {
        if row.method == method {
            out.push_str(&format!("{},{},{}\n", row.m, row.mean_db, row.sem_db));
        }
    }
    out
}

/// Write all CSV artifacts into a directory: `records.csv`, `summary.csv`,
/// `failrates.csv`, `pairwise.csv`, and one `plot_<method>.csv` per method.
pub fn export(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    if report.records.is_empty() {
        return Err(Error::InvalidConfig("cannot export an empty report".into()));
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.csv"), records_csv(report))?;
    std::fs::write(dir.join("summary.csv"), summary_csv(report))?;
    std::fs::write(dir.join("failrates.csv"), failrates_csv(report))?;
    std::fs::write(dir.join("pairwise.csv"), pairwise_csv(report))?;
    for &method in &report.config.methods {
        std::fs::write(
            dir.join(format!("plot_{method}.csv")),
            plot_csv(report, method),
        )?;
    }
    Ok(())
}

/// Parse a `records.csv` produced by [`records_csv`] back into records.
pub fn parse_records_csv(text: &str, config: &BenchConfig) -> Result<BenchmarkReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header != RECORDS_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse(format!("row {i}: expected 7 fields")));
        }
        let status = match parts[5] {
            "ok" => CellStatus::Ok,
            "fallback" => CellStatus::Fallback,
            "dropped" => CellStatus::Dropped,
            "error" => CellStatus::Error,
            other => return Err(Error::Parse(format!("row {i}: bad status {other:?}"))),
        };
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
        records.push(Record {
            run: parts[0].parse().map_err(|e| Error::Parse(format!("{e}")))?,
            seed: parts[1].parse().map_err(|e| Error::Parse(format!("{e}")))?,
            method: parts[2].parse()?,
            m: parts[3].parse().map_err(|e| Error::Parse(format!("{e}")))?,
            grq_db: parse_f(parts[4])?,
            status,
            wall_ms: parse_f(parts[6])?,
        });
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        records,
    })
}
