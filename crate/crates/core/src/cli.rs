//! `swarmchem` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    compare_groups, harvest_to_text, run_ensemble, BehaviorVector, BootstrapConfig, EnsembleSpec, FeatureRegistry,
    FrameRecorder, HarvestTracker,
};
use crate::analytics::diversity::{reports_to_csv, reports_to_toml, vectors_to_csv};
use crate::engine::{run, save_snapshot, state_hash, FnObserver, Observer, World, WorldConfig};
use crate::evolution::{CompetitionRule, EnvironmentSchedule};
use crate::io::{exit_code, load_config, read_log, RecordMode, ReplayRecorder, RunConfig};
use crate::morphogenesis::SwarmClass;
use crate::recipe::{parse_recipe, serialize_recipe, MutationConfig, RecipeSampler};
use crate::rng::{seeded, Stream};
use crate::service::SessionRegistry;

#[derive(Debug, Parser)]
#[command(name = "swarmchem", version, about = "Heterogeneous swarm chemistry simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// System class: homogeneous, heterogeneous, rediff or infoshare.
    #[arg(long, global = true)]
    pub class: Option<SwarmClass>,
    /// Competition rule: faster, slower, behind or majority.
    #[arg(long, global = true)]
    pub compete: Option<CompetitionRule>,
    /// Mutation rate for transmitted recipes.
    #[arg(long, global = true)]
    pub mutation_rate: Option<f64>,
    /// Environment perturbation schedule (TOML).
    #[arg(long, global = true)]
    pub env_schedule: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run one simulation.
    Run(RunArgs),
    /// Run with recipe transmission (majority rule unless --compete is given).
    Evolve(RunArgs),
    /// Ensemble of random-recipe runs per class, with diversity statistics.
    Batch(BatchArgs),
    /// Behavior vectors and diversity from replay logs or vector files.
    Analyze(AnalyzeArgs),
    /// Extract persistent objects from a replay log.
    Harvest(LogArgs),
    /// Verify a replay log.
    Replay(LogArgs),
    /// Start the session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Recipe file, used when no config is given.
    #[arg(long)]
    pub recipe: Option<PathBuf>,
    /// Number of steps (overrides the config).
    #[arg(long)]
    pub steps: Option<u64>,
    /// Record hashes only instead of full frames.
    #[arg(long)]
    pub header_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    #[arg(long, default_value_t = 500)]
    pub runs: usize,
    #[arg(long, default_value_t = 300)]
    pub particles: u32,
    #[arg(long, default_value_t = 2000)]
    pub steps: u64,
    /// Classes to run (comma separated); all four by default.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<SwarmClass>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 250)]
    pub subsample: usize,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Replay logs or vector files written by `batch`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Subsample size per replicate; defaults to half of each group.
    #[arg(long)]
    pub subsample: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct LogArgs {
    pub log: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit_code::CONFIG,
            CliError::Runtime(_) => exit_code::RUNTIME,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// One behavior vector with its group label, as stored in vector files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledVector {
    pub group: String,
    pub run: usize,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

fn apply_overrides(world: &mut WorldConfig, g: &GlobalArgs) -> Result<(), CliError> {
    if let Some(s) = g.seed {
        world.seed = s;
    }
    if let Some(c) = g.class {
        world.class = c;
    }
    if let Some(c) = g.compete {
        world.competition = Some(c);
    }
    if let Some(r) = g.mutation_rate {
        world.mutation = MutationConfig::with_rate(r);
    }
    if let Some(path) = &g.env_schedule {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        world.environment = EnvironmentSchedule::parse(&text).map_err(config_err)?.perturbation;
    }
    let problems = world.problems();
    if !problems.is_empty() {
        let lines: Vec<String> = problems.iter().map(|(p, m)| format!("world.{p}: {m}")).collect();
        return Err(CliError::Config(lines.join("\n")));
    }
    Ok(())
}

fn resolve_config(g: &GlobalArgs, args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = match (&g.config, &args.recipe) {
        (Some(path), _) => load_config(path).map_err(config_err)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            RunConfig::single(WorldConfig::default(), parse_recipe(&text).map_err(config_err)?)
        }
        (None, None) => {
            let mut rng = seeded(g.seed.unwrap_or(0), Stream::Spawn);
            RunConfig::single(WorldConfig::default(), RecipeSampler::default().recipe(300, &mut rng))
        }
    };
    apply_overrides(&mut config.world, g)?;
    if let Some(n) = args.steps {
        config.n_steps = n;
    }
    Ok(config)
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
}

fn cmd_run(g: &GlobalArgs, args: &RunArgs, evolve: bool) -> Result<(), CliError> {
    let mut config = resolve_config(g, args)?;
    if evolve && config.world.competition.is_none() {
        config.world.competition = Some(CompetitionRule::Majority);
    }
    let out = config.output.dir.clone().unwrap_or_else(|| g.out.clone());
    create_out(&out)?;
    let mode = if args.header_only { RecordMode::Header } else { config.output.record_mode };
    let log_path = config.output.replay_log.clone().unwrap_or_else(|| out.join("replay.jsonl"));
    let log = fs::File::create(&log_path).map_err(|e| runtime_err(format!("{}: {e}", log_path.display())))?;

    let mut world = config.build_world().map_err(config_err)?;
    let mut recorder = ReplayRecorder::start(BufWriter::new(log), &config, mode, &world).map_err(runtime_err)?;
    let mut harvester = config.observers.harvest.map(HarvestTracker::new);
    let mut frames = FrameRecorder::new(config.observers.frame_interval.max(1), 0);
    let record_frames = config.observers.frame_interval > 0;
    let mut census: Vec<(u64, usize)> = vec![(0, world.distinct_recipes().len())];
    let census_interval = config.observers.hash_interval.max(1);
    let mut census_obs = FnObserver(|w: &World, _: &crate::engine::StepReport| {
        if evolve && w.step_count() % census_interval == 0 {
            census.push((w.step_count(), w.distinct_recipes().len()));
        }
        Ok(())
    });
    {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut recorder, &mut census_obs];
        if let Some(h) = harvester.as_mut() {
            observers.push(h);
        }
        if record_frames {
            observers.push(&mut frames);
        }
        run(&mut world, config.n_steps, &mut observers).map_err(runtime_err)?;
    }
    recorder.finish(&world).map_err(runtime_err)?;
    write_file(&out.join("final.snap"), save_snapshot(&world))?;
    if let Some(h) = harvester {
        write_file(&out.join("harvest.txt"), harvest_to_text(&run_id(&config), &h.harvested()))?;
    }
    if evolve {
        let mut text = String::new();
        for r in world.distinct_recipes() {
            let carriers = world.particles().iter().filter(|p| *p.recipe == *r).count();
            text.push_str(&format!("# carriers {carriers}\n{}\n", serialize_recipe(&r)));
        }
        write_file(&out.join("recipes.txt"), text)?;
        let csv: String = std::iter::once("step,distinct_recipes\n".to_string())
            .chain(census.iter().map(|(s, n)| format!("{s},{n}\n")))
            .collect();
        write_file(&out.join("census.csv"), csv)?;
    }
    if record_frames {
        let lines: Vec<String> = frames
            .frames
            .iter()
            .map(|f| serde_json::json!({"step": f.step, "positions": f.positions, "types": f.type_ids}).to_string())
            .collect();
        write_file(&out.join("frames.jsonl"), lines.join("\n") + "\n")?;
    }
    let c = world.counters();
    println!(
        "steps {} particles {} types {} recipes {} collisions {} transmissions {} hash {:016x}",
        world.step_count(),
        world.len(),
        world.type_histogram().iter().filter(|&&n| n > 0).count(),
        world.distinct_recipes().len(),
        c.collisions,
        c.transmissions,
        state_hash(&world)
    );
    Ok(())
}

fn run_id(config: &RunConfig) -> String {
    format!("seed{}-{}", config.world.seed, config.world.class.name())
}

fn cmd_batch(g: &GlobalArgs, args: &BatchArgs) -> Result<(), CliError> {
    let mut world = match &g.config {
        Some(p) => load_config(p).map_err(config_err)?.world,
        None => WorldConfig::default(),
    };
    apply_overrides(&mut world, g)?;
    let classes = if args.classes.is_empty() { SwarmClass::ALL.to_vec() } else { args.classes.clone() };
    let spec = EnsembleSpec { runs: args.runs, particles: args.particles, steps: args.steps, world, ..Default::default() };
    let seed = g.seed.unwrap_or(spec.world.seed);
    create_out(&g.out)?;
    let mut groups = Vec::new();
    let mut lines = String::new();
    for class in classes {
        eprintln!("batch: {} runs of {}", spec.runs, class.name());
        let vs = run_ensemble(&spec, class, seed).map_err(runtime_err)?;
        let names: Vec<&str> = spec.registry.names();
        write_file(&g.out.join(format!("vectors-{}.csv", class.name())), vectors_to_csv(&names, &vs))?;
        for (run, v) in vs.iter().enumerate() {
            let lv = LabeledVector {
                group: class.name().into(),
                run,
                names: names.iter().map(|s| s.to_string()).collect(),
                values: v.values.clone(),
            };
            lines.push_str(&serde_json::to_string(&lv).expect("vector serializes"));
            lines.push('\n');
        }
        groups.push((class.name().to_string(), vs));
    }
    write_file(&g.out.join("vectors.jsonl"), lines)?;
    let subsample = args.subsample.min(args.runs);
    report_diversity(&g.out, &groups, args.replicates, subsample, seed)
}

fn report_diversity(
    out: &Path,
    groups: &[(String, Vec<BehaviorVector>)],
    replicates: usize,
    subsample: usize,
    seed: u64,
) -> Result<(), CliError> {
    if groups.iter().map(|(_, v)| v.len()).sum::<usize>() < 2 {
        return Err(runtime_err("diversity needs at least two behavior vectors"));
    }
    let cfg = BootstrapConfig { replicates, subsample, ..Default::default() };
    let dists = compare_groups(groups, &cfg, seed).map_err(runtime_err)?;
    let mut csv = String::new();
    let mut toml_text = String::new();
    println!("{:<14} {:>12} {:>14} {:>12}", "group", "coverage", "mean_pairwise", "entropy");
    for (label, d) in &dists {
        let [c, m, e] = d.medians();
        println!("{label:<14} {c:>12.3} {m:>14.5} {e:>12.4}");
        let part = reports_to_csv(label, &d.reports);
        if csv.is_empty() {
            csv.push_str(&part);
        } else {
            csv.push_str(part.split_once('\n').map(|x| x.1).unwrap_or(""));
        }
        toml_text.push_str(&format!("# group {label}\n{}\n", reports_to_toml(&d.reports)));
    }
    write_file(&out.join("diversity.csv"), csv)?;
    write_file(&out.join("diversity.toml"), toml_text)
}

fn cmd_analyze(g: &GlobalArgs, args: &AnalyzeArgs) -> Result<(), CliError> {
    let registry = FeatureRegistry::default();
    let mut groups: Vec<(String, Vec<BehaviorVector>)> = Vec::new();
    let mut add = |label: String, v: BehaviorVector| match groups.iter_mut().find(|(l, _)| *l == label) {
        Some((_, vs)) => vs.push(v),
        None => groups.push((label, vec![v])),
    };
    let names: std::sync::Arc<[&'static str]> = registry.names().into();
    for path in &args.inputs {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let first = text.lines().next().unwrap_or("");
        if first.contains("\"kind\":\"header\"") {
            let log = read_log(text.as_bytes()).map_err(runtime_err)?;
            let mut world = log.config.build_world().map_err(config_err)?;
            let v = crate::analytics::run_and_measure(&mut world, log.end.0, &log.config.observers.analytics, &registry)
                .map_err(runtime_err)?;
            add(log.config.world.class.name().to_string(), v);
        } else {
            for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let lv: LabeledVector = serde_json::from_str(line)
                    .map_err(|e| config_err(format!("{}:{}: {e}", path.display(), k + 1)))?;
                if lv.values.len() != names.len() {
                    return Err(config_err(format!("{}:{}: expected {} values", path.display(), k + 1, names.len())));
                }
                add(lv.group, BehaviorVector { values: lv.values, names: names.clone() });
            }
        }
    }
    create_out(&g.out)?;
    let smallest = groups.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
    let subsample = args.subsample.unwrap_or((smallest / 2).max(2)).min(smallest);
    for (label, vs) in &groups {
        write_file(&g.out.join(format!("analyze-{label}.csv")), vectors_to_csv(&registry.names(), vs))?;
    }
    report_diversity(&g.out, &groups, args.replicates, subsample, g.seed.unwrap_or(0))
}

fn cmd_harvest(g: &GlobalArgs, args: &LogArgs) -> Result<(), CliError> {
    let log = read_log(BufReader::new(open(&args.log)?)).map_err(runtime_err)?;
    let config = log.config.observers.harvest.unwrap_or_default();
    let mut world = log.config.build_world().map_err(config_err)?;
    let mut tracker = HarvestTracker::new(config);
    tracker.observe(&world);
    run(&mut world, log.end.0, &mut [&mut tracker]).map_err(runtime_err)?;
    let objects = tracker.harvested();
    create_out(&g.out)?;
    write_file(&g.out.join("harvest.txt"), harvest_to_text(&run_id(&log.config), &objects))?;
    println!("harvested {} objects", objects.len());
    Ok(())
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn cmd_replay(args: &LogArgs) -> Result<(), CliError> {
    let log = read_log(BufReader::new(open(&args.log)?)).map_err(runtime_err)?;
    let outcome = log.replay().map_err(runtime_err)?;
    println!(
        "verified {} hashes through step {} (final {:016x})",
        outcome.hashes.len(),
        outcome.world.step_count(),
        state_hash(&outcome.world)
    );
    Ok(())
}

fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(runtime_err)?;
    rt.block_on(crate::service::http::serve(args.addr, SessionRegistry::new())).map_err(runtime_err)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(runtime_err)?;
    }
    match &cli.command {
        Cmd::Run(a) => cmd_run(&cli.global, a, false),
        Cmd::Evolve(a) => cmd_run(&cli.global, a, true),
        Cmd::Batch(a) => cmd_batch(&cli.global, a),
        Cmd::Analyze(a) => cmd_analyze(&cli.global, a),
        Cmd::Harvest(a) => cmd_harvest(&cli.global, a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::Serve(a) => cmd_serve(a),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main() -> i32 {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit_code::CONFIG } else { exit_code::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => exit_code::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
