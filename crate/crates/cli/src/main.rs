use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mort_core::bench::{self, BenchConfig, StabilityMode};
use mort_core::generators::{generate, GenSpec, Mode, Scenario, DEFAULT_REGION};
use mort_core::par::{self, Algorithm, Execution};
use mort_core::planner::{PlanStatus, PlannerConfig};
use mort_core::scene::{self, Instance, SceneError};
use mort_core::stability::StabilityConfig;

#[derive(Parser)]
#[command(name = "mort", version, about = "Optimal multi-layer tabletop rearrangement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    Gen(GenArgs),
    /// Plan a rearrangement.
    Solve(SolveArgs),
    /// Replay a plan and screen every intermediate arrangement.
    Check(CheckArgs),
    /// Run both planners over generated instances and write CSV rows.
    Bench(BenchArgs),
    /// Summarize a results table.
    Summary(SummaryArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Pyramid layer count.
    #[arg(long, required_if_eq_any([("scenario", "pyramid2d"), ("scenario", "pyramid3d")]))]
    layers: Option<usize>,
    /// Random pile object count.
    #[arg(long, required_if_eq("scenario", "random"))]
    n: Option<usize>,
    #[arg(long, default_value = "in-place")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side of the square spawn region for random piles.
    #[arg(long, default_value_t = DEFAULT_REGION)]
    region: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlannerArgs {
    /// Time limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Friction coefficient override.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    no_stability: bool,
}

impl PlannerArgs {
    fn config(&self) -> anyhow::Result<PlannerConfig> {
        if !(self.time_limit >= 0.0 && self.time_limit.is_finite()) {
            bail!("--time-limit must be a non-negative number of seconds");
        }
        if self.mu.is_some_and(|m| !(m >= 0.0)) {
            bail!("--mu must be non-negative");
        }
        Ok(PlannerConfig {
            time_limit: Duration::from_secs_f64(self.time_limit),
            enable_stability: !self.no_stability,
            mu: self.mu,
            ..PlannerConfig::default()
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "sipp")]
    alg: Algorithm,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Seed for tie-breaking among equally good search states.
    #[arg(long)]
    tie_seed: Option<u64>,
    /// Plan file to write; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    instance: PathBuf,
    plan: PathBuf,
    #[arg(long)]
    mu: Option<f64>,
    /// Only replay the plan.
    #[arg(long)]
    no_stability: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Sizes as a list (3,4,5) or an inclusive range (3..6): layers for
    /// pyramids, objects for random piles.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 30)]
    trials: u64,
    #[arg(long, default_value = "in-place")]
    mode: Mode,
    /// Seed of the first trial; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REGION)]
    region: f64,
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long)]
    mu: Option<f64>,
    /// auto screens random piles only.
    #[arg(long, default_value = "auto")]
    stability: StabilityMode,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Results table; rows are appended when it exists.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    results: PathBuf,
    #[arg(long)]
    json: bool,
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = e.downcast_ref::<SceneError>().map_or(1, SceneError::code);
        Exit(code, e)
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance, Exit> {
    let bytes = read(path)?;
    scene::load_instance(&bytes).map_err(|e| Exit(e.code(), anyhow::Error::new(e).context(path.display().to_string())))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn parse_sizes(s: &str) -> anyhow::Result<Vec<usize>> {
    let sizes: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        bail!("sizes must be positive");
    }
    Ok(sizes)
}

fn gen(args: GenArgs) -> Result<u8, Exit> {
    let size = match args.scenario {
        Scenario::Pyramid2d | Scenario::Pyramid3d => args.layers,
        Scenario::RandomPile => args.n,
    }
    .context("missing size")?;
    let spec = GenSpec { scenario: args.scenario, size, mode: args.mode, seed: args.seed, region: args.region };
    let inst = generate(&spec)?;
    write_out(args.output.as_deref(), &scene::save_instance(&inst))?;
    log::info!("generated {} {} with {} objects", spec.scenario, spec.mode, inst.n());
    Ok(0)
}

fn solve(args: SolveArgs) -> Result<u8, Exit> {
    let cfg = PlannerConfig { tie_break_seed: args.tie_seed, ..args.planner.config().map_err(|e| Exit(2, e))? };
    let inst = load_instance(&args.instance)?;
    let res = par::run(args.alg, &inst, &cfg)?;
    write_out(args.output.as_deref(), &scene::save_plan(&res.to_document()))?;
    let mut line = format!(
        "{} {}: expanded {} bans {} checks {} in {:.3} ms",
        args.alg.as_str(),
        res.status,
        res.stats.expanded,
        res.stats.bans,
        res.stats.stability_checks,
        res.stats.time_ms
    );
    if let Some(plan) = &res.plan {
        line += &format!("; cost {} with {} buffered", plan.cost(), plan.buffer_count());
    }
    if let Some(f) = &res.failure {
        line += &format!("; failed at action {} (objects {:?})", f.action, f.objects);
    }
    eprintln!("{line}");
    Ok(match res.status {
        PlanStatus::Optimal | PlanStatus::Solved => 0,
        PlanStatus::Infeasible => 3,
        PlanStatus::Timeout => 4,
        PlanStatus::Unstable => 5,
        PlanStatus::Blocked => 6,
    })
}

fn check(args: CheckArgs) -> Result<u8, Exit> {
    let inst = load_instance(&args.instance)?;
    let doc = scene::load_plan(&read(&args.plan)?).map_err(|e| Exit(1, e.into()))?;
    let cfg = StabilityConfig { mu: args.mu, ..StabilityConfig::default() };
    let stability = (!args.no_stability).then_some(&cfg);
    match par::check_plan(&inst, &doc.plan, stability, Execution::default()) {
        Ok(()) => {
            println!("valid: {} actions, {} buffered", doc.plan.cost(), doc.plan.buffer_count());
            Ok(0)
        }
        Err(v) => {
            println!("invalid: {v}");
            Ok(1)
        }
    }
}

fn bench_cmd(args: BenchArgs) -> Result<u8, Exit> {
    let usage = |e: anyhow::Error| Exit(2, e);
    let sizes = parse_sizes(&args.sizes).map_err(usage)?;
    let planner = PlannerArgs { time_limit: args.time_limit, mu: args.mu, no_stability: false }.config().map_err(usage)?;
    let mut cfg = BenchConfig::new(args.scenario, args.mode, sizes, args.trials);
    cfg.base_seed = args.seed;
    cfg.region = args.region;
    cfg.stability = args.stability;
    cfg.planner = planner;
    cfg.jobs = args.jobs;

    let (sink, header): (Box<dyn Write>, bool) = match &args.output {
        Some(p) => {
            let fresh = fs::metadata(p).map_or(true, |m| m.len() == 0);
            let f = fs::OpenOptions::new().create(true).append(true).open(p)
                .with_context(|| format!("opening {}", p.display()))?;
            (Box::new(f), fresh)
        }
        None => (Box::new(io::stdout()), true),
    };
    run_bench(&cfg, bench::csv_writer(sink, header)?, args.output.as_deref())
}

fn run_bench(cfg: &BenchConfig, mut out: csv::Writer<Box<dyn Write>>, path: Option<&Path>) -> Result<u8, Exit> {
    let mut rows = Vec::new();
    bench::run_bench(cfg, |case| {
        for row in case.rows() {
            out.serialize(&row)?;
            rows.push(row);
        }
        out.flush()?;
        Ok(())
    })?;
    let table = bench::summary_table(&bench::summarize(&rows));
    match path {
        Some(p) => {
            println!("{} rows appended to {}", rows.len(), p.display());
            print!("{table}");
        }
        None => eprint!("{table}"),
    }
    Ok(0)
}

fn summary(args: SummaryArgs) -> Result<u8, Exit> {
    let rows = bench::read_rows(&read(&args.results)?[..]).context("parsing results table")?;
    let groups = bench::summarize(&rows);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&groups)?);
    } else {
        print!("{}", bench::summary_table(&groups));
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MORT_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Summary(a) => summary(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
