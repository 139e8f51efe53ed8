mod render;

use clap::{Args, Parser, Subcommand};
use pack_core::{generate_sliced_instance, Instance, PackingResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use selfplay::{evaluate, run_training, solve_one, Solver, TrainConfig};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rrpack",
    about = "Strip packing with ranked-reward self-play: instance generation, training, solving, evaluation, RU/DU scenarios, and rendering",
    disable_version_flag = true
)]
struct Cli {
    /// Print artifact and checkpoint schema versions.
    #[arg(long, short = 'V')]
    version: bool,
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a directory of sliced packing instances plus a manifest.
    Generate(GenerateArgs),
    /// Run the self-play training loop, writing a run directory.
    Train(TrainArgs),
    /// Evaluate a solver over a directory of instances.
    Eval(EvalArgs),
    /// Solve one instance and emit the packing as JSON.
    Solve(SolveArgs),
    /// Generate a synthetic RU/DU region file.
    Region(RegionArgs),
    /// Sample per-DU request instances from a region and report mean
    /// reward and utilization.
    Scenario(ScenarioArgs),
    /// Render a packing result as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 10)]
    n_items: usize,
    /// Bin width W*.
    #[arg(long, default_value_t = 15)]
    width: usize,
    /// Minimum sliced height H*.
    #[arg(long, default_value_t = 2)]
    h_min: usize,
    /// Maximum sliced height H*.
    #[arg(long, default_value_t = 15)]
    h_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON training config; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the published full-scale preset instead of desk scale.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    simulations: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint (.bin) for the selfplay solver.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory of instance JSON files.
    #[arg(long)]
    instances: PathBuf,
    /// selfplay | rollout | hvraa | lego | random | exact
    #[arg(long)]
    solver: String,
    /// Report JSON path; a per-instance CSV lands next to it.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 64)]
    simulations: u32,
    /// Virtual bin height H'; defaults to the checkpoint config or 15.
    #[arg(long)]
    h_prime: Option<usize>,
    /// Score optimality against the exact solver instead of the lower bound.
    #[arg(long)]
    exact_optimal: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    /// exact | hvraa | lego | random | selfplay
    #[arg(long)]
    solver: String,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    h_prime: Option<usize>,
    #[arg(long, default_value_t = 64)]
    simulations: u32,
    #[arg(long, default_value_t = 50_000_000)]
    node_limit: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 100)]
    sites: usize,
    #[arg(long, default_value_t = 10)]
    dus: usize,
    #[arg(long, default_value_t = 14.0)]
    extent_x: f64,
    #[arg(long, default_value_t = 13.0)]
    extent_y: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Region JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the sites table as CSV.
    #[arg(long)]
    sites_csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long, default_value_t = oran_scenario::PEAK_HOUR)]
    hour: usize,
    /// DU ids to evaluate (repeatable); all DUs when omitted.
    #[arg(long)]
    du: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value = "hvraa")]
    solver: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    simulations: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    /// Packing result JSON (from `solve`).
    #[arg(long)]
    packing: PathBuf,
    /// The instance the packing was produced from (for item widths).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Missing(PathBuf),
    Io(std::io::Error),
    CheckpointVersion(String),
    UnknownSolver(String),
    InvalidArgs(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Missing(_) | CliError::Io(_) => 2,
            CliError::CheckpointVersion(_) => 3,
            CliError::UnknownSolver(_) => 4,
            CliError::InvalidArgs(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Missing(p) => write!(f, "missing file: {}", p.display()),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::CheckpointVersion(m) => write!(f, "incompatible checkpoint: {m}"),
            CliError::UnknownSolver(s) => write!(
                f,
                "unknown solver '{s}' (expected selfplay, rollout, hvraa, lego, random, or exact)"
            ),
            CliError::InvalidArgs(m) => write!(f, "invalid arguments: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::InvalidArgs(format!("bad JSON: {e}"))
    }
}

impl From<selfplay::SelfplayError> for CliError {
    fn from(e: selfplay::SelfplayError) -> Self {
        match e {
            selfplay::SelfplayError::Net(net) => net.into(),
            selfplay::SelfplayError::InvalidConfig(m) => CliError::InvalidArgs(m),
            selfplay::SelfplayError::Io(io) => CliError::Io(io),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<nnet::NnetError> for CliError {
    fn from(e: nnet::NnetError) -> Self {
        match e {
            nnet::NnetError::VersionMismatch { .. } | nnet::NnetError::BadCheckpoint(_) => {
                CliError::CheckpointVersion(e.to_string())
            }
            nnet::NnetError::Io(io) => CliError::Io(io),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<pack_core::PackError> for CliError {
    fn from(e: pack_core::PackError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<oran_scenario::ScenarioError> for CliError {
    fn from(e: oran_scenario::ScenarioError) -> Self {
        match e {
            oran_scenario::ScenarioError::Io(io) => CliError::Io(io),
            oran_scenario::ScenarioError::NotEnoughSites { .. }
            | oran_scenario::ScenarioError::BadHour(_) => CliError::InvalidArgs(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        println!(
            "rrpack {} (instance/report schema 1, checkpoint schema {})",
            env!("CARGO_PKG_VERSION"),
            nnet::CHECKPOINT_VERSION
        );
        return ExitCode::SUCCESS;
    }
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let Some(command) = cli.command else {
        eprintln!("no command given; see --help");
        return ExitCode::from(5);
    };
    match run(command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Region(args) => cmd_region(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::Render(args) => cmd_render(args),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_existing(path: &Path) -> Result<Vec<u8>, CliError> {
    if !path.exists() {
        return Err(CliError::Missing(path.to_path_buf()));
    }
    Ok(std::fs::read(path)?)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    count: usize,
    n_items: usize,
    width: usize,
    h_min: usize,
    h_max: usize,
    seed: u64,
    files: Vec<String>,
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    if args.width < 1 || args.n_items < 1 {
        return Err(CliError::InvalidArgs(
            "--width and --n-items must be >= 1".into(),
        ));
    }
    if args.h_min < 1 || args.h_min > args.h_max {
        return Err(CliError::InvalidArgs(
            "need 1 <= --h-min <= --h-max".into(),
        ));
    }
    if args.n_items > args.width * args.h_min {
        return Err(CliError::InvalidArgs(format!(
            "{} items cannot come from slicing a {}x{} bin",
            args.n_items, args.width, args.h_min
        )));
    }
    std::fs::create_dir_all(&args.out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let plan: Vec<(String, usize, u64)> = (0..args.count)
        .map(|i| {
            (
                format!("instance_{i:05}.json"),
                rng.gen_range(args.h_min..=args.h_max),
                rng.gen(),
            )
        })
        .collect();
    plan.par_iter()
        .try_for_each(|(name, h_star, seed)| -> Result<(), CliError> {
            let instance = generate_sliced_instance(args.width, *h_star, args.n_items, *seed)?;
            write_atomic(
                &args.out.join(name),
                &serde_json::to_vec_pretty(&instance)?,
            )
        })?;
    let manifest = Manifest {
        count: args.count,
        n_items: args.n_items,
        width: args.width,
        h_min: args.h_min,
        h_max: args.h_max,
        seed: args.seed,
        files: plan.into_iter().map(|(name, _, _)| name).collect(),
    };
    write_atomic(
        &args.out.join("manifest.json"),
        &serde_json::to_vec_pretty(&manifest)?,
    )?;
    println!("wrote {} instances to {}", args.count, args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let mut config = if args.paper_scale {
        TrainConfig::paper_scale()
    } else {
        TrainConfig::default()
    };
    if let Some(path) = &args.config {
        config = serde_json::from_slice(&read_existing(path)?)?;
    }
    if let Some(v) = args.iterations {
        config.iterations = v;
    }
    if let Some(v) = args.episodes {
        config.episodes_per_iteration = v;
    }
    if let Some(v) = args.simulations {
        config.mcts_simulations = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    let outcome = run_training(&config, Some(&args.out))?;
    let last = outcome.metrics.last().expect("at least one iteration");
    println!(
        "trained {} iterations: mean reward {:.3}, optimality ratio {:.3}, threshold {:.3}",
        config.iterations, last.mean_reward, last.optimality_ratio, outcome.threshold
    );
    println!("run directory: {}", args.out.display());
    println!(
        "selected model: {} (best iteration by mean self-play reward)",
        args.out.join("checkpoints/model.bin").display()
    );
    Ok(())
}

fn load_instances(dir: &Path) -> Result<Vec<Instance>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Missing(dir.to_path_buf()));
    }
    let manifest_path = dir.join("manifest.json");
    let files: Vec<PathBuf> = if manifest_path.exists() {
        let manifest: Manifest = serde_json::from_slice(&std::fs::read(manifest_path)?)?;
        manifest.files.iter().map(|f| dir.join(f)).collect()
    } else {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        files
    };
    files
        .iter()
        .map(|path| Ok(serde_json::from_slice(&read_existing(path)?)?))
        .collect()
}

struct LoadedModel {
    params: nnet::ModelParams,
    config: Option<TrainConfig>,
}

fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    if !path.exists() {
        return Err(CliError::Missing(path.to_path_buf()));
    }
    let (params, meta) = selfplay::load_checkpoint(path)?;
    Ok(LoadedModel {
        params,
        config: meta.map(|m| m.config),
    })
}

/// Builds the solver named on the command line, loading the model when one
/// is needed. Returns the loaded model alongside so the borrow lives long
/// enough.
fn build_solver<'a>(
    name: &str,
    model: &'a Option<LoadedModel>,
    simulations: u32,
    seed: u64,
    node_limit: u64,
) -> Result<Solver<'a>, CliError> {
    match name {
        "selfplay" | "net" => {
            let model = model.as_ref().ok_or_else(|| {
                CliError::InvalidArgs("the selfplay solver needs --model".into())
            })?;
            Ok(Solver::SelfPlay {
                params: &model.params,
                simulations,
            })
        }
        "rollout" => Ok(Solver::Rollout { simulations }),
        "hvraa" => Ok(Solver::Hvraa),
        "lego" => Ok(Solver::Lego),
        "random" => Ok(Solver::Random { seed }),
        "exact" => Ok(Solver::Exact { node_limit }),
        other => Err(CliError::UnknownSolver(other.to_string())),
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let model = args.model.as_deref().map(load_model).transpose()?;
    let solver = build_solver(&args.solver, &model, args.simulations, args.seed, 50_000_000)?;
    let h_prime = args
        .h_prime
        .or_else(|| {
            model
                .as_ref()
                .and_then(|m| m.config.as_ref())
                .map(|c| c.h_prime)
        })
        .unwrap_or(15);
    let instances = load_instances(&args.instances)?;
    let report = evaluate(&solver, &instances, h_prime, false, args.exact_optimal)?;
    write_atomic(&args.report, &serde_json::to_vec_pretty(&report)?)?;
    write_atomic(
        &args.report.with_extension("csv"),
        report.to_csv().as_bytes(),
    )?;
    println!(
        "{}: {} instances, mean reward {:.3} (std {:.3}), optimality ratio {:.3}, dead {}",
        report.solver, report.instances, report.mean_reward, report.reward_std,
        report.optimality_ratio, report.dead_count
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let model = args.model.as_deref().map(load_model).transpose()?;
    let solver = build_solver(
        &args.solver,
        &model,
        args.simulations,
        args.seed,
        args.node_limit,
    )?;
    let instance: Instance = serde_json::from_slice(&read_existing(&args.instance)?)?;
    // Stacking every item is always feasible, so the summed heights make a
    // safe default ceiling.
    let h_prime = args
        .h_prime
        .unwrap_or_else(|| instance.items.iter().map(|it| it.h).sum());
    let state = solve_one(&solver, &instance, 0, h_prime, false)?;
    let result = PackingResult::from_state(&state)?;
    let json = serde_json::to_vec_pretty(&result)?;
    match &args.out {
        Some(path) => write_atomic(path, &json)?,
        None => println!("{}", String::from_utf8_lossy(&json)),
    }
    Ok(())
}

fn cmd_region(args: RegionArgs) -> Result<(), CliError> {
    let region = oran_scenario::generate_synthetic_region(
        args.sites,
        args.dus,
        (args.extent_x, args.extent_y),
        args.seed,
    )?;
    write_atomic(&args.out, &serde_json::to_vec_pretty(&region)?)?;
    if let Some(csv_path) = &args.sites_csv {
        write_atomic(
            csv_path,
            oran_scenario::sites_to_csv(&region.sites, true).as_bytes(),
        )?;
    }
    println!(
        "region with {} sites and {} DUs written to {}",
        region.sites.len(),
        region.dus.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ScenarioRow {
    du: usize,
    solver: String,
    samples: usize,
    mean_reward: f64,
    mean_utilization: Option<f64>,
    dead_count: usize,
}

#[derive(Serialize)]
struct ScenarioReport {
    hour: usize,
    seed: u64,
    rows: Vec<ScenarioRow>,
}

fn cmd_scenario(args: ScenarioArgs) -> Result<(), CliError> {
    let region: oran_scenario::Region =
        serde_json::from_slice(&read_existing(&args.region)?)?;
    let model = args.model.as_deref().map(load_model).transpose()?;
    let solver = build_solver(&args.solver, &model, args.simulations, args.seed, 50_000_000)?;
    let selected: Vec<&oran_scenario::DUSite> = if args.du.is_empty() {
        region.dus.iter().collect()
    } else {
        args.du
            .iter()
            .map(|id| {
                region
                    .dus
                    .iter()
                    .find(|du| du.id == *id)
                    .ok_or_else(|| CliError::InvalidArgs(format!("no DU with id {id}")))
            })
            .collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    let mut table = String::from("du  solver    r_mean  U_mean  dead\n");
    for du in selected {
        let instances: Vec<Instance> = (0..args.samples)
            .map(|j| {
                oran_scenario::sample_requests(
                    du,
                    &region.sites,
                    args.hour,
                    args.seed + du.id as u64 * 10_000 + j as u64,
                )
            })
            .collect::<Result<_, _>>()?;
        let report = evaluate(&solver, &instances, du.capacity, false, false)?;
        writeln!(
            table,
            "{:<3} {:<9} {:.3}   {}   {}",
            du.id,
            report.solver,
            report.mean_reward,
            report
                .mean_utilization
                .map_or_else(|| "-    ".to_string(), |u| format!("{u:.3}")),
            report.dead_count
        )
        .expect("string write");
        rows.push(ScenarioRow {
            du: du.id,
            solver: report.solver,
            samples: args.samples,
            mean_reward: report.mean_reward,
            mean_utilization: report.mean_utilization,
            dead_count: report.dead_count,
        });
    }
    print!("{table}");
    if let Some(path) = &args.report {
        let report = ScenarioReport {
            hour: args.hour,
            seed: args.seed,
            rows,
        };
        write_atomic(path, &serde_json::to_vec_pretty(&report)?)?;
    }
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    let result: PackingResult = serde_json::from_slice(&read_existing(&args.packing)?)?;
    let instance: Instance = serde_json::from_slice(&read_existing(&args.instance)?)?;
    for placement in &result.placements {
        if placement.item >= instance.items.len() {
            return Err(CliError::InvalidArgs(format!(
                "packing references item {} but the instance has {}",
                placement.item,
                instance.items.len()
            )));
        }
    }
    let svg = render::render_svg(&result, &instance);
    write_atomic(&args.out, svg.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}
