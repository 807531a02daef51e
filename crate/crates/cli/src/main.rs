//! `voxhash` command-line harness: log replay with timing statistics,
//! map-sharing relay simulation, synthetic log generation and PLY export.
//!
//! Every command prints one JSON object on stdout. Exit status is 0 on
//! success, 1 on runtime failures (I/O, corrupt logs) and 2 on usage or
//! configuration errors.

mod params;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use voxhash::io::{export_ply, open_point_log, write_point_log, PlyMode, PointLogReader};
use voxhash::share::ShareLogWriter;
use voxhash::sim::{ChannelSpec, Relay, RelaySpec, SimSpec, Simulation};
use voxhash::{logit_of, MapConfig, MapState, ParamUpdate, SensorFrame, UpdateStats};

use params::ParamsFile;

#[derive(Parser)]
#[command(name = "voxhash", version, about = "Hash-based voxel occupancy mapping harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a frame log or simulated flight through the mapper and report
    /// counts and per-phase timings.
    Replay(ReplayArgs),
    /// Relay newly occupied voxels from a sender map to a receiver over a
    /// simulated lossy link.
    ShareSim(ShareArgs),
    /// Simulate a flight and write its frame log.
    Gen(GenArgs),
    /// Map an input and write the occupied or inflated voxels as PLY.
    Export(ExportArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Point log (VXPCLOG1).
    #[arg(long, group = "input")]
    log: Option<PathBuf>,
    /// Simulation spec file.
    #[arg(long, group = "input")]
    scene: Option<PathBuf>,
    /// Built-in simulation: relay, sparse or room.
    #[arg(long, group = "input")]
    preset: Option<String>,
    /// Stop after this many frames.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Voxel edge length, meters.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    res: f64,
    /// Grid origin as x,y,z.
    #[arg(long, value_parser = parse_point, default_value = "0,0,0")]
    origin: [f64; 3],
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_INIT)]
    p_init: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_HIT)]
    p_hit: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_MISS)]
    p_miss: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_MIN)]
    p_min: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_MAX)]
    p_max: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_OCC)]
    p_occ: f64,
    #[arg(long, default_value_t = voxhash::config::DEFAULT_P_FREE)]
    p_free: f64,
    /// Input range, meters or inf.
    #[arg(long, value_parser = parse_range, default_value = "inf")]
    d_in: f64,
    /// Inflation update range, meters or inf.
    #[arg(long, value_parser = parse_range, default_value = "inf")]
    d_inf: f64,
    /// Obstacle inflation radius, meters.
    #[arg(long, default_value_t = 0.2)]
    r_obs: f64,
    /// Retained voxel budget, count or inf.
    #[arg(long, value_parser = parse_limit, default_value = "inf")]
    n_lim: Limit,
    /// Outbox size in frames.
    #[arg(long, default_value_t = voxhash::config::DEFAULT_RING_CAPACITY)]
    ring_capacity: usize,
    /// Parameter file; overrides the flags above and may schedule changes.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    map: MapArgs,
    /// Also write a PLY of the final map.
    #[arg(long, value_enum)]
    export: Option<ExportMode>,
    /// PLY path for --export.
    #[arg(long, default_value = "map.ply")]
    ply: PathBuf,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ShareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    map: MapArgs,
    /// Long-run fraction of ticks the link is down, 0 to 1.
    #[arg(long, default_value_t = 0.0)]
    loss_rate: f64,
    /// Mean outage length in frames.
    #[arg(long, default_value_t = 5.0)]
    mean_burst: f64,
    /// Forced outage as START:LEN in frames; repeatable.
    #[arg(long, value_parser = parse_outage)]
    outage: Vec<(u64, u64)>,
    #[arg(long, default_value_t = 0)]
    channel_seed: u64,
    /// Save every transmitted frame to a VXMLOG1 file.
    #[arg(long)]
    wire_log: Option<PathBuf>,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Simulation spec file.
    #[arg(long, group = "spec")]
    scene: Option<PathBuf>,
    /// Built-in simulation: relay, sparse or room.
    #[arg(long, group = "spec")]
    preset: Option<String>,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the frame count.
    #[arg(long)]
    frames: Option<usize>,
    /// Override rays per frame.
    #[arg(long)]
    rays: Option<usize>,
    /// Override the generated obstacle fill fraction.
    #[arg(long)]
    fill: Option<f64>,
    /// Output point log.
    #[arg(long)]
    out: PathBuf,
    /// Also write the resolved spec, which regenerates the same log.
    #[arg(long)]
    spec_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, value_enum, default_value = "occupied")]
    mode: ExportMode,
    /// PLY output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportMode {
    Occupied,
    Inflated,
}

impl From<ExportMode> for PlyMode {
    fn from(m: ExportMode) -> Self {
        match m {
            ExportMode::Occupied => PlyMode::Occupied,
            ExportMode::Inflated => PlyMode::Inflated,
        }
    }
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected x,y,z".to_string())
}

fn parse_range(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|e: std::num::ParseFloatError| e.to_string()),
    }
}

/// Count or unbounded.
#[derive(Clone, Copy, Debug)]
struct Limit(Option<usize>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    match s {
        "inf" | "none" => Ok(Limit(None)),
        _ => s.parse().map(|n| Limit(Some(n))).map_err(|e: std::num::ParseIntError| e.to_string()),
    }
}

fn parse_outage(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:LEN")?;
    Ok((a.parse().map_err(|_| "bad START")?, b.parse().map_err(|_| "bad LEN")?))
}

/// Failure class, mapped to the exit status.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

impl MapArgs {
    /// Flags, then the static part of the params file.
    fn resolve(&self) -> Result<(MapConfig, ParamsFile)> {
        let params = match &self.params {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ParamsFile::parse(&text)?
            }
            None => ParamsFile::default(),
        };
        let mut cfg = MapConfig {
            res: self.res,
            origin: self.origin,
            p_init: self.p_init,
            l_hit: logit_of(self.p_hit).context("--p-hit")?,
            l_miss: logit_of(self.p_miss).context("--p-miss")?,
            l_min: logit_of(self.p_min).context("--p-min")?,
            l_max: logit_of(self.p_max).context("--p-max")?,
            l_occ_th: logit_of(self.p_occ).context("--p-occ")?,
            l_free_th: logit_of(self.p_free).context("--p-free")?,
            d_in: self.d_in,
            d_inf: self.d_inf,
            r_obs: self.r_obs,
            n_lim: self.n_lim.0,
            ring_capacity: self.ring_capacity,
        };
        let mut update = ParamUpdate::default();
        for (k, v) in &params.fixed {
            update.set(k, v)?;
        }
        cfg.res = update.res.unwrap_or(cfg.res);
        cfg.origin = update.origin.unwrap_or(cfg.origin);
        let cfg = cfg.merged(&update)?;
        Ok((cfg, params))
    }
}

enum Source {
    Log(PointLogReader<BufReader<fs::File>>),
    Sim(Simulation, usize),
}

impl Source {
    fn open(input: &InputArgs) -> Result<(Self, String), Failure> {
        if let Some(path) = &input.log {
            let r = open_point_log(path).with_context(|| format!("opening {}", path.display())).runtime()?;
            return Ok((Source::Log(r), path.display().to_string()));
        }
        let (spec, name) = load_spec(input.scene.as_deref(), input.preset.as_deref()).usage()?;
        let sim = spec.build().usage()?;
        Ok((Source::Sim(sim, 0), name))
    }

    fn next(&mut self) -> Option<Result<SensorFrame>> {
        match self {
            Source::Log(r) => r.next().map(|f| f.map_err(anyhow::Error::from)),
            Source::Sim(sim, i) => {
                let f = (*i < sim.len()).then(|| sim.frame(*i));
                *i += 1;
                f.map(Ok)
            }
        }
    }

    fn dropped(&self) -> usize {
        match self {
            Source::Log(r) => r.dropped_nonfinite(),
            Source::Sim(..) => 0,
        }
    }
}

fn load_spec(scene: Option<&Path>, preset: Option<&str>) -> Result<(SimSpec, String)> {
    match (scene, preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok((SimSpec::parse(&text)?, p.display().to_string()))
        }
        (None, Some(name)) => {
            let spec = SimSpec::preset(name).ok_or_else(|| anyhow!("unknown preset {name:?} (relay, sparse, room)"))?;
            Ok((spec, format!("preset:{name}")))
        }
        (None, None) => Err(anyhow!("one of --log, --scene or --preset is required")),
    }
}

fn apply_due(map: &mut MapState, params: &ParamsFile, frame: usize) -> Result<usize, Failure> {
    let due = params.due(frame);
    for u in &due {
        map.update_params(u).with_context(|| format!("parameter change at frame {frame}")).usage()?;
    }
    Ok(due.len())
}

#[derive(Serialize, Default)]
struct Summary {
    mean: f64,
    p50: f64,
    p95: f64,
    p99: f64,
    max: f64,
}

fn summarize(mut v: Vec<f64>) -> Summary {
    if v.is_empty() {
        return Summary::default();
    }
    v.sort_by(f64::total_cmp);
    let at = |q: f64| v[((v.len() - 1) as f64 * q).round() as usize];
    Summary { mean: v.iter().sum::<f64>() / v.len() as f64, p50: at(0.5), p95: at(0.95), p99: at(0.99), max: v[v.len() - 1] }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs the input through a map and collects the per-frame stats.
fn replay_into(input: &InputArgs, map_args: &MapArgs) -> Result<(MapState, Vec<UpdateStats>, serde_json::Value), Failure> {
    let (cfg, params) = map_args.resolve().usage()?;
    let (mut src, name) = Source::open(input)?;
    let mut map = MapState::new(cfg).usage()?;
    let mut stats = Vec::new();
    let (mut changes, mut max_mem, mut inflated) = (0, 0, Vec::new());
    while input.frames.is_none_or(|n| stats.len() < n) {
        let Some(frame) = src.next() else { break };
        let frame = frame.runtime()?;
        changes += apply_due(&mut map, &params, stats.len())?;
        let s = map.update(&frame).with_context(|| format!("frame {}", stats.len())).runtime()?;
        max_mem = max_mem.max(map.memory_estimate());
        inflated.push(map.inflated_count() as f64);
        stats.push(s);
    }
    let sum = |f: fn(&UpdateStats) -> usize| stats.iter().map(f).sum::<usize>();
    let col = |f: fn(&UpdateStats) -> f64| mean(&stats.iter().map(f).collect::<Vec<_>>());
    let report = json!({
        "source": name,
        "frames": stats.len(),
        "points_in": sum(|s| s.n_points_in),
        "points_dropped_range": sum(|s| s.n_points_dropped_range),
        "points_dropped_nonfinite": sum(|s| s.n_points_dropped_nonfinite) + src.dropped(),
        "n_occ": map.occupied_count(),
        "n_inf": mean(&inflated),
        "n_inf_final": map.inflated_count(),
        "n_records": map.record_count(),
        "n_history": map.history_len(),
        "n_deleted": sum(|s| s.n_deleted),
        "n_evicted": sum(|s| s.n_evicted),
        "memory_bytes_max": max_mem,
        "t_tot_ms": summarize(stats.iter().map(|s| s.t_total_ms).collect()),
        "t_input_ms": col(|s| s.t_input_ms),
        "t_occ_ms": col(|s| s.t_occ_ms),
        "t_inf_ms": col(|s| s.t_inf_ms),
        "t_m_ms": col(|s| s.t_ret_ms),
        "param_changes": changes,
    });
    Ok((map, stats, report))
}

fn emit(mut report: serde_json::Value, command: &str, path: Option<&Path>) -> Result<(), Failure> {
    report["command"] = json!(command);
    let line = serde_json::to_string(&report).runtime()?;
    println!("{line}");
    if let Some(p) = path {
        fs::write(p, format!("{line}\n")).with_context(|| format!("writing {}", p.display())).runtime()?;
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<(), Failure> {
    let (map, _, mut report) = replay_into(&args.input, &args.map)?;
    if let Some(mode) = args.export {
        let n = export_ply(&map, &args.ply, mode.into()).with_context(|| format!("writing {}", args.ply.display())).runtime()?;
        report["export"] = json!({ "path": args.ply.display().to_string(), "vertices": n });
    }
    emit(report, "replay", args.report.as_deref())
}

fn share_sim(args: ShareArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.loss_rate) || args.mean_burst < 1.0 {
        return Err(Failure::Usage(anyhow!("--loss-rate must be in [0, 1] and --mean-burst at least 1")));
    }
    let (cfg, params) = args.map.resolve().usage()?;
    let (mut src, name) = Source::open(&args.input)?;
    let channel = ChannelSpec { loss_rate: args.loss_rate, mean_burst: args.mean_burst, seed: args.channel_seed, outages: args.outage };
    let mut relay = Relay::new(RelaySpec::new(cfg, channel)).usage()?;
    let mut wire = match &args.wire_log {
        Some(p) => Some(ShareLogWriter::new(std::io::BufWriter::new(fs::File::create(p).runtime()?)).runtime()?),
        None => None,
    };
    let mut n = 0;
    while args.input.frames.is_none_or(|lim| n < lim) {
        let Some(frame) = src.next() else { break };
        let frame = frame.runtime()?;
        for u in params.due(n) {
            relay.update_sender_params(u).with_context(|| format!("parameter change at frame {n}")).usage()?;
        }
        let sent = relay.step(&frame).with_context(|| format!("frame {n}")).runtime()?;
        if let Some(w) = wire.as_mut() {
            for bytes in &sent {
                w.write_encoded(bytes).runtime()?;
            }
        }
        n += 1;
    }
    if let Some(w) = wire {
        w.finish().runtime()?;
    }
    let mut report = serde_json::to_value(relay.report()).runtime()?;
    report["source"] = json!(name);
    emit(report, "share-sim", args.report.as_deref())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let (mut spec, _) = load_spec(args.scene.as_deref(), args.preset.as_deref()).usage()?;
    if let Some(s) = args.seed {
        spec.scene.seed = s;
    }
    if let Some(f) = args.frames {
        spec.trajectory.frames = Some(f);
    }
    if let Some(r) = args.rays {
        spec.sensor.rays_per_frame = r;
    }
    if let Some(f) = args.fill {
        spec.scene.fill = f;
    }
    let sim = spec.build().usage()?;
    let frames: Vec<SensorFrame> = sim.frames().collect();
    write_point_log(&args.out, &frames).with_context(|| format!("writing {}", args.out.display())).runtime()?;
    if let Some(p) = &args.spec_out {
        fs::write(p, spec.to_text()).with_context(|| format!("writing {}", p.display())).runtime()?;
    }
    let points: usize = frames.iter().map(|f| f.points.len()).sum();
    let report = json!({
        "frames": frames.len(),
        "points": points,
        "mean_points": if frames.is_empty() { 0.0 } else { points as f64 / frames.len() as f64 },
        "obstacles": sim.scene.obstacles.len(),
        "fill": sim.scene.fill_fraction(0.1),
        "out": args.out.display().to_string(),
    });
    emit(report, "gen", None)
}

fn export(args: ExportArgs) -> Result<(), Failure> {
    let (map, _, report) = replay_into(&args.input, &args.map)?;
    let n = export_ply(&map, &args.out, args.mode.into()).with_context(|| format!("writing {}", args.out.display())).runtime()?;
    let out = json!({
        "source": report["source"],
        "frames": report["frames"],
        "n_occ": map.occupied_count(),
        "n_inf": map.inflated_count(),
        "vertices": n,
        "out": args.out.display().to_string(),
    });
    emit(out, "export", None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Replay(a) => replay(a),
        Command::ShareSim(a) => share_sim(a),
        Command::Gen(a) => gen(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
