use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cdos::explorer::{explore, ExploreError, Method, Termination};
use cdos::harness::{
    run_fov_sweep, run_zone_experiment, summary_csv, sweep_csv, trials_csv, ExperimentConfig,
    HarnessError, SweepAxis,
};
use cdos::mission::{run_mission, MissionConfig, MissionError};
use cdos::render::render_maps;
use cdos::world::{load_map, load_zones, sample_zone_points, Cell, GridWorld};

#[derive(Parser)]
#[command(name = "cdos", version, about = "Curiosity-driven object search simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single exploration run on one map.
    Explore(ExploreArgs),
    /// Zone experiment over every configured map.
    Zones {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zone experiments over a list of camera or IR fields of view.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vary: SweepAxis,
        /// Field-of-view values in degrees.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full mission: landing, search, grab and retraction.
    Mission(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    map: PathBuf,
    /// Experiment config supplying sensor and model parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "cdos")]
    method: Method,
    /// Camera field of view in degrees; defaults to the config's first value.
    #[arg(long)]
    alpha: Option<f64>,
    /// IR field of view in degrees; defaults to the config's first value.
    #[arg(long)]
    beta: Option<f64>,
    /// Target cell as `x,y`, replacing any `T` in the map.
    #[arg(long, value_parser = parse_cell)]
    target: Option<Cell>,
    /// Zone file; with `--zone`, the target is drawn from that zone using `--seed`.
    #[arg(long, requires = "zone")]
    zones: Option<PathBuf>,
    #[arg(long, requires = "zones")]
    zone: Option<u8>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; without it a JSON summary is printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Write occupancy, object and combined maps in this format (ascii or pgm).
    #[arg(long)]
    render: Option<String>,
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Cell::new(p(x)?, p(y)?))
}

enum Failure {
    Config(String),
    Invariant(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e.exit_code() {
            2 => Failure::Invariant(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::Invariant(_) => Failure::Invariant(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<MissionError> for Failure {
    fn from(e: MissionError) -> Self {
        match e {
            MissionError::Explore(inner) => inner.into(),
            MissionError::Tether(_) => Failure::Config(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    io(dir, std::fs::create_dir_all(dir))?;
    let path = dir.join(name);
    io(&path, std::fs::write(&path, bytes))
}

fn read(path: &Path) -> Result<String, Failure> {
    io(path, std::fs::read_to_string(path))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn prepare(args: &RunArgs) -> Result<(GridWorld, ExperimentConfig, f64, f64), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let mut world = load_map(&read(&args.map)?)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.map.display())))?;
    let mut target = args.target.or(world.target);
    if let (Some(zpath), Some(zid)) = (&args.zones, args.zone) {
        let zones = load_zones(&read(zpath)?, &world)
            .map_err(|e| Failure::Config(format!("{}: {e}", zpath.display())))?;
        let zone = zones
            .iter()
            .find(|z| z.id == zid)
            .ok_or_else(|| Failure::Config(format!("zone {zid} not in {}", zpath.display())))?;
        let cells = sample_zone_points(zone, 1, args.seed)
            .map_err(|e| Failure::Config(e.to_string()))?;
        target = cells.first().copied();
    }
    world = world
        .with_target(target)
        .ok_or_else(|| Failure::Config("target must be a free cell inside the map".into()))?;
    let alpha = args.alpha.unwrap_or(cfg.alpha_deg[0]);
    let beta = args.beta.unwrap_or(cfg.beta_deg[0]);
    Ok((world, cfg, alpha, beta))
}

#[derive(Serialize)]
struct RunSummary {
    method: Method,
    alpha_deg: f64,
    beta_deg: f64,
    target: Option<Cell>,
    found: bool,
    target_estimate: Option<Cell>,
    detection_conf: Option<f64>,
    delta_t: f64,
    path_length: f64,
    steps: usize,
    termination: Termination,
}

fn cmd_explore(args: &ExploreArgs) -> Result<(), Failure> {
    let run = &args.run;
    let (world, cfg, alpha, beta) = prepare(run)?;
    let format = args.render.as_deref();
    if let Some(f) = format {
        f.parse::<cdos::render::Format>()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let result = explore(&world, &cfg.explorer_config(alpha, beta), run.method)?;
    let summary = RunSummary {
        method: run.method,
        alpha_deg: alpha,
        beta_deg: beta,
        target: world.target,
        found: result.found,
        target_estimate: result.target_estimate,
        detection_conf: result.detection_conf,
        delta_t: result.delta_t,
        path_length: result.path_length,
        steps: result.step_log.len(),
        termination: result.termination,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    match &run.out {
        Some(dir) => {
            write(dir, "summary.json", json.as_bytes())?;
            write(dir, "steps.jsonl", result.step_log_jsonl().as_bytes())?;
            if let Some(f) = format {
                let maps = render_maps(&result, f).map_err(|e| Failure::Config(e.to_string()))?;
                for (name, bytes) in maps.artifacts() {
                    write(dir, &name, bytes)?;
                }
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_zones(config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let exp = run_zone_experiment(&cfg)?;
    write(out, "trials.csv", &trials_csv(&exp.records)?)?;
    write(out, "summary.csv", &summary_csv(&exp.summary)?)?;
    Ok(())
}

fn cmd_sweep(config: &Path, axis: SweepAxis, values: &[f64], out: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let sweep = run_fov_sweep(&cfg, axis, values)?;
    write(out, "trials.csv", &trials_csv(&sweep.experiment.records)?)?;
    write(out, "summary.csv", &summary_csv(&sweep.experiment.summary)?)?;
    write(out, "sweep.csv", &sweep_csv(&sweep.table)?)?;
    Ok(())
}

fn cmd_mission(args: &RunArgs) -> Result<(), Failure> {
    let (world, cfg, alpha, beta) = prepare(args)?;
    let mcfg = MissionConfig {
        tether: cfg.tether(),
        d_min: cfg.d_min,
        method: args.method,
    };
    let trace = run_mission(&world, &cfg.explorer_config(alpha, beta), &mcfg)?;
    let log = trace.to_jsonl();
    match &args.out {
        Some(dir) => write(dir, "mission.jsonl", log.as_bytes()),
        None => {
            print!("{log}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // usage errors are config errors; code 2 is reserved for invariant violations
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Explore(a) => cmd_explore(a),
        Command::Zones { config, out } => cmd_zones(config, out),
        Command::Sweep {
            config,
            vary,
            values,
            out,
        } => cmd_sweep(config, *vary, values, out),
        Command::Mission(a) => cmd_mission(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("invariant violated: {m}");
            ExitCode::from(2)
        }
    }
}
