//! Benchmark harness: generate seeded instances, run both planners, emit one
//! CSV row per run and summarize the table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::generators::{generate, GenError, GenSpec, Mode, Scenario, DEFAULT_REGION};
use crate::par::{map, with_threads, Algorithm, Execution};
use crate::planner::{solve, solve_greedy, PlanResult, PlannerConfig};
use crate::scene::Instance;

pub const CSV_HEADER: &str = "scenario,mode,n,seed,algorithm,status,cost,buffers,time_ms,expanded,bans";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub mode: String,
    pub n: usize,
    pub seed: u64,
    pub algorithm: String,
    pub status: String,
    pub cost: Option<usize>,
    pub buffers: Option<usize>,
    pub time_ms: f64,
    pub expanded: u64,
    pub bans: u64,
}

impl BenchRow {
    pub fn new(spec: &GenSpec, n: usize, alg: Algorithm, res: &PlanResult) -> Self {
        Self {
            scenario: spec.scenario.as_str().to_string(),
            mode: spec.mode.as_str().to_string(),
            n,
            seed: spec.seed,
            algorithm: alg.as_str().to_string(),
            status: res.status.as_str().to_string(),
            cost: res.cost(),
            buffers: res.buffers(),
            time_ms: (res.stats.time_ms * 1e3).round() / 1e3,
            expanded: res.stats.expanded,
            bans: res.stats.bans,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == "optimal" || self.status == "success"
    }
}

/// Whether planners screen stability. `Auto` screens random piles only:
/// layered pyramids cannot produce unstable intermediate arrangements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StabilityMode {
    #[default]
    Auto,
    On,
    Off,
}

impl std::str::FromStr for StabilityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(StabilityMode::Auto),
            "on" => Ok(StabilityMode::On),
            "off" => Ok(StabilityMode::Off),
            other => Err(format!("unknown stability mode '{other}' (expected auto, on or off)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    /// Layer counts for pyramids, object counts for random piles.
    pub sizes: Vec<usize>,
    pub trials: u64,
    /// Trial `t` uses seed `base_seed + t`.
    pub base_seed: u64,
    pub region: f64,
    pub stability: StabilityMode,
    pub planner: PlannerConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub exec: Execution,
}

impl BenchConfig {
    pub fn new(scenario: Scenario, mode: Mode, sizes: Vec<usize>, trials: u64) -> Self {
        Self {
            scenario,
            mode,
            sizes,
            trials,
            base_seed: 0,
            region: DEFAULT_REGION,
            stability: StabilityMode::Auto,
            planner: PlannerConfig { time_limit: Duration::from_secs(300), ..PlannerConfig::default() },
            jobs: 1,
            exec: Execution::default(),
        }
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let enable_stability = match self.stability {
            StabilityMode::Auto => self.scenario == Scenario::RandomPile,
            StabilityMode::On => true,
            StabilityMode::Off => false,
        };
        PlannerConfig { enable_stability, ..self.planner.clone() }
    }

    pub fn specs(&self) -> Vec<GenSpec> {
        self.sizes
            .iter()
            .flat_map(|&size| {
                (0..self.trials).map(move |t| GenSpec {
                    scenario: self.scenario,
                    size,
                    mode: self.mode,
                    seed: self.base_seed + t,
                    region: self.region,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub spec: GenSpec,
    pub instance: Instance,
    pub optimal: PlanResult,
    pub greedy: PlanResult,
}

impl CaseOutcome {
    pub fn rows(&self) -> [BenchRow; 2] {
        let n = self.instance.n();
        [
            BenchRow::new(&self.spec, n, Algorithm::Optimal, &self.optimal),
            BenchRow::new(&self.spec, n, Algorithm::Greedy, &self.greedy),
        ]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("generating {scenario} size {size} seed {seed}: {source}")]
    Generate { scenario: Scenario, size: usize, seed: u64, source: GenError },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Generates the instance of `spec` and runs both planners on it.
pub fn run_case(spec: &GenSpec, cfg: &PlannerConfig) -> Result<CaseOutcome, BenchError> {
    let wrap = |source| BenchError::Generate { scenario: spec.scenario, size: spec.size, seed: spec.seed, source };
    let instance = generate(spec).map_err(wrap)?;
    let optimal = solve(&instance, cfg).map_err(|e| wrap(e.into()))?;
    let greedy = solve_greedy(&instance, cfg).map_err(|e| wrap(e.into()))?;
    Ok(CaseOutcome { spec: *spec, instance, optimal, greedy })
}

/// Runs every (size, trial) case and hands outcomes to `sink` in generation order,
/// one size at a time. Instances that cannot be generated are logged and
/// skipped.
pub fn run_bench<F>(cfg: &BenchConfig, mut sink: F) -> Result<usize, BenchError>
where
    F: FnMut(&CaseOutcome) -> Result<(), BenchError>,
{
    let planner = cfg.planner_config();
    let mut done = 0;
    for &size in &cfg.sizes {
        let specs: Vec<GenSpec> = cfg.specs().into_iter().filter(|s| s.size == size).collect();
        let outcomes = with_threads(cfg.jobs, || map(cfg.exec, &specs, |s| run_case(s, &planner)));
        for outcome in outcomes {
            match outcome {
                Ok(case) => {
                    sink(&case)?;
                    done += 1;
                }
                Err(e @ BenchError::Generate { .. }) => log::warn!("skipping case: {e}"),
                Err(e) => return Err(e),
            }
        }
        log::info!("{} size {size}: {} cases done", cfg.scenario, specs.len());
    }
    Ok(done)
}

/// CSV writer for bench rows. The header is written only when `header` is set,
/// so runs can append to an existing table.
pub fn csv_writer<W: io::Write>(w: W, header: bool) -> Result<csv::Writer<W>, BenchError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    if header {
        out.write_record(CSV_HEADER.split(','))?;
    }
    Ok(out)
}

pub fn read_rows<R: io::Read>(r: R) -> Result<Vec<BenchRow>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub scenario: String,
    pub mode: String,
    pub n: usize,
    pub instances: usize,
    pub optimal_success: f64,
    pub greedy_success: f64,
    /// Mean greedy/optimal buffer ratio over instances both solved with at
    /// least one optimal buffer.
    pub ratio_mean: Option<f64>,
    pub ratio_instances: usize,
    /// Instances both solved where the optimal plan used no buffer.
    pub zero_buffer_instances: usize,
    pub optimal_time_all_ms: f64,
    pub optimal_time_solved_ms: Option<f64>,
    pub greedy_time_all_ms: f64,
    pub greedy_time_solved_ms: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Per (scenario, mode, n) metrics. Rows are paired by seed; a seed
/// missing one algorithm counts toward that algorithm's rates only.
pub fn summarize(rows: &[BenchRow]) -> Vec<GroupSummary> {
    type Pair<'a> = (Option<&'a BenchRow>, Option<&'a BenchRow>);
    let mut groups: BTreeMap<(String, String, usize), BTreeMap<u64, Pair>> = BTreeMap::new();
    for r in rows {
        let slot = groups.entry((r.scenario.clone(), r.mode.clone(), r.n)).or_default().entry(r.seed).or_default();
        match r.algorithm.as_str() {
            "greedy" => slot.1 = Some(r),
            _ => slot.0 = Some(r),
        }
    }
    groups
        .into_iter()
        .map(|((scenario, mode, n), seeds)| {
            let opt: Vec<&BenchRow> = seeds.values().filter_map(|p| p.0).collect();
            let gr: Vec<&BenchRow> = seeds.values().filter_map(|p| p.1).collect();
            let rate = |v: &[&BenchRow]| {
                if v.is_empty() {
                    0.0
                } else {
                    v.iter().filter(|r| r.succeeded()).count() as f64 / v.len() as f64
                }
            };
            let both: Vec<(usize, usize)> = seeds
                .values()
                .filter_map(|p| match p {
                    (Some(o), Some(g)) if o.succeeded() && g.succeeded() => Some((o.buffers?, g.buffers?)),
                    _ => None,
                })
                .collect();
            let ratios: Vec<f64> = both.iter().filter(|(o, _)| *o > 0).map(|&(o, g)| g as f64 / o as f64).collect();
            GroupSummary {
                scenario,
                mode,
                n,
                instances: seeds.len(),
                optimal_success: rate(&opt),
                greedy_success: rate(&gr),
                ratio_mean: mean(ratios.iter().copied()),
                ratio_instances: ratios.len(),
                zero_buffer_instances: both.len() - ratios.len(),
                optimal_time_all_ms: mean(opt.iter().map(|r| r.time_ms)).unwrap_or(0.0),
                optimal_time_solved_ms: mean(opt.iter().filter(|r| r.succeeded()).map(|r| r.time_ms)),
                greedy_time_all_ms: mean(gr.iter().map(|r| r.time_ms)).unwrap_or(0.0),
                greedy_time_solved_ms: mean(gr.iter().filter(|r| r.succeeded()).map(|r| r.time_ms)),
            }
        })
        .collect()
}

/// Fixed-width text rendering of [`summarize`] output.
pub fn summary_table(groups: &[GroupSummary]) -> String {
    let opt = |x: Option<f64>, prec: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<9} {:>4} {:>5} {:>7} {:>7} {:>7} {:>6} {:>5} {:>11} {:>11} {:>11} {:>11}",
        "scenario", "mode", "n", "cases", "opt_ok", "grd_ok", "ratio", "ratio#", "zero",
        "opt_ms_all", "opt_ms_ok", "grd_ms_all", "grd_ms_ok"
    );
    for g in groups {
        let _ = writeln!(
            s,
            "{:<10} {:<9} {:>4} {:>5} {:>7.3} {:>7.3} {:>7} {:>6} {:>5} {:>11.3} {:>11} {:>11.3} {:>11}",
            g.scenario,
            g.mode,
            g.n,
            g.instances,
            g.optimal_success,
            g.greedy_success,
            opt(g.ratio_mean, 3),
            g.ratio_instances,
            g.zero_buffer_instances,
            g.optimal_time_all_ms,
            opt(g.optimal_time_solved_ms, 3),
            g.greedy_time_all_ms,
            opt(g.greedy_time_solved_ms, 3),
        );
    }
    s
}
