mod config;
mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use smrgrid::datacenter::{
    build_profile, build_profile_for_peak, load_machine_events, load_tasks, synthetic_week_trace, utilization,
    LoadProfile, BIN_SECONDS,
};
use smrgrid::dynamics::SimConfig;
use smrgrid::grid::{build_ybus, parse_case, CaseFormat, NetworkCase};
use smrgrid::powerflow::{solve, write_snapshot_csv};
use smrgrid::scenario::{
    compare_with_runs, extract_metrics, random_contingencies, run_events, snapshot_sweep, CompareOptions,
    ContingencySpec, Snapshot, StabilityMetrics,
};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] smrgrid::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("base case power flow did not converge")]
    NotConverged,
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::NotConverged => "not_converged",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Datacenter load with an integrated SMR and battery on a transmission grid.
#[derive(Debug, Parser)]
#[command(name = "smrgrid", version)]
struct Cli {
    /// Run configuration (JSON); built-in defaults when omitted.
    #[arg(long, global = true, env = "SMRGRID_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true, env = "SMRGRID_OUT")]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, env = "SMRGRID_SEED")]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true, env = "SMRGRID_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the 5-minute datacenter load profile.
    Profile,
    /// Solve the base case and sweep every profile bin.
    Powerflow,
    /// Simulate one contingency at one snapshot.
    Transient {
        /// Profile bin; defaults to the config value or the peak bin.
        #[arg(long)]
        snapshot: Option<usize>,
        /// Repeat at half the step and report the final state difference.
        #[arg(long)]
        dt_halving: bool,
    },
    /// Paired grid-only versus IES contingency study.
    Compare,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io { path: cfg.out.clone(), source: e })?;

    match cli.cmd {
        Command::Profile => cmd_profile(&cfg),
        Command::Powerflow => cmd_powerflow(&cfg),
        Command::Transient { snapshot, dt_halving } => {
            cmd_transient(&cfg, snapshot.or(cfg.transient.snapshot), dt_halving || cfg.transient.dt_halving)
        }
        Command::Compare => cmd_compare(&cfg, cli.jobs),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(smrgrid::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn load_case(cfg: &RunConfig) -> Result<NetworkCase> {
    Ok(parse_case(&cfg.case, CaseFormat::from_path(&cfg.case)?)?)
}

fn load_profile(cfg: &RunConfig) -> Result<Option<LoadProfile>> {
    let Some(p) = &cfg.profile else { return Ok(None) };
    if let Some(path) = &p.prebuilt {
        let f = File::open(path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        return Ok(Some(LoadProfile::read_csv(f, &path.display().to_string())?));
    }
    let trace = match (&p.tasks, &p.machine_events) {
        (Some(t), Some(m)) => utilization(&load_tasks(t)?, &load_machine_events(m)?, p.t0_s, p.t1_s)?,
        _ => {
            let (tasks, events) = synthetic_week_trace(cfg.seed, p.synthetic_machines);
            let t1 = smrgrid::datacenter::BINS_PER_WEEK as f64 * BIN_SECONDS;
            utilization(&tasks, &events, 0.0, t1)?
        }
    };
    let ambient = [p.ambient];
    let profile = match p.peak_total_mw {
        Some(target) => build_profile_for_peak(&trace, &p.it, &p.chiller, &ambient, target)?.1,
        None => build_profile(&trace, &p.it, &p.chiller, &ambient)?,
    };
    Ok(Some(profile))
}

fn require_profile(cfg: &RunConfig) -> Result<LoadProfile> {
    load_profile(cfg)?.ok_or_else(|| CliError::Config("this command needs a profile section".into()))
}

#[derive(Serialize)]
struct ProfileSummary {
    n_bins: usize,
    bin_seconds: f64,
    peak_total_mw: f64,
    peak_bin: usize,
    mean_total_mw: f64,
    min_total_mw: f64,
    peak_it_mw: f64,
    max_chillers: u32,
}

fn peak_bin(profile: &LoadProfile) -> usize {
    let totals = profile.totals();
    (0..totals.len()).fold(0, |best, k| if totals[k] > totals[best] { k } else { best })
}

fn cmd_profile(cfg: &RunConfig) -> Result<()> {
    let profile = require_profile(cfg)?;
    profile.write_csv(create(&cfg.out.join("profile.csv"))?)?;
    let totals = profile.totals();
    let n = totals.len();
    let summary = ProfileSummary {
        n_bins: n,
        bin_seconds: BIN_SECONDS,
        peak_total_mw: profile.peak_total(),
        peak_bin: peak_bin(&profile),
        mean_total_mw: totals.iter().sum::<f64>() / n as f64,
        min_total_mw: totals.iter().copied().fold(f64::INFINITY, f64::min),
        peak_it_mw: profile.p_it.iter().copied().fold(0.0, f64::max),
        max_chillers: profile.n_ch.iter().copied().max().unwrap_or(0),
    };
    write_json(&cfg.out.join("profile_summary.json"), &summary)
}

fn cmd_powerflow(cfg: &RunConfig) -> Result<()> {
    let case = load_case(cfg)?;
    let sol = solve(&case, &build_ybus(&case), &cfg.powerflow)?;
    write_snapshot_csv(create(&cfg.out.join("powerflow_base.csv"))?, [(0.0, &sol)])?;
    if !sol.converged {
        return Err(CliError::NotConverged);
    }
    if let Some(profile) = load_profile(cfg)? {
        let sweep = snapshot_sweep(&case, &profile, &cfg.configuration, &cfg.powerflow)?;
        let label = cfg.configuration.kind.label();
        sweep.write_csv(create(&cfg.out.join(format!("sweep_{label}.csv")))?)?;
        let summary = serde_json::json!({
            "config": label,
            "dc_bus": sweep.dc_bus,
            "n_bins": sweep.n_bins,
            "n_converged": sweep.n_converged,
            "n_failed": sweep.n_failed,
        });
        write_json(&cfg.out.join(format!("sweep_{label}_summary.json")), &summary)?;
    }
    Ok(())
}

fn snapshot_for(cfg: &RunConfig, bin: Option<usize>) -> Result<Snapshot> {
    match load_profile(cfg)? {
        Some(profile) => {
            let k = bin.unwrap_or_else(|| peak_bin(&profile));
            Ok(Snapshot::from_profile(&profile, k)?)
        }
        None if bin.is_some() => Err(CliError::Config("--snapshot given but no profile is configured".into())),
        None => Ok(Snapshot { index: 0, timestamp_s: 0.0, p_mw: 0.0, q_cool_mwth: 0.0 }),
    }
}

#[derive(Serialize)]
struct TransientMetrics {
    config: &'static str,
    snapshot: Snapshot,
    contingency: ContingencySpec,
    metrics: StabilityMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_halving_max_state_diff: Option<f64>,
}

fn cmd_transient(cfg: &RunConfig, bin: Option<usize>, dt_halving: bool) -> Result<()> {
    let case = load_case(cfg)?;
    let snap = snapshot_for(cfg, bin)?;
    let spec = match &cfg.transient.contingency {
        Some(s) => s.clone(),
        None => random_contingencies(1, cfg.seed, 3).remove(0),
    };
    let conf = cfg.configuration.as_kind(cfg.transient.config);
    let events = spec.resolve(&case, conf.dc_bus)?;
    let run = run_events(&case, &snap, &conf, &events, &cfg.sim, &cfg.powerflow)?;
    let metrics = extract_metrics(&run.result, conf.dc_bus, spec.t_apply, &cfg.compare.bands)?;

    let diff = if dt_halving {
        let half = SimConfig { dt: cfg.sim.dt / 2.0, ..cfg.sim };
        let fine = run_events(&case, &snap, &conf, &events, &half, &cfg.powerflow)?;
        Some(run.result.final_states.max_abs_difference(&fine.result.final_states))
    } else {
        None
    };

    run.result.write_csv(create(&cfg.out.join("transient.csv"))?)?;
    write_json(&cfg.out.join("events.json"), &run.result.event_log)?;
    write_json(
        &cfg.out.join("metrics.json"),
        &TransientMetrics {
            config: conf.kind.label(),
            snapshot: snap,
            contingency: spec,
            metrics,
            dt_halving_max_state_diff: diff,
        },
    )?;
    write_text(&cfg.out.join("transient.gp"), &plot::transient_script("transient.csv", conf.dc_bus, "transient.png"))
}

fn cmd_compare(cfg: &RunConfig, jobs: usize) -> Result<()> {
    let case = load_case(cfg)?;
    let profile = require_profile(cfg)?;
    let specs = if cfg.compare.contingencies.is_empty() {
        random_contingencies(cfg.compare.random.count, cfg.seed, cfg.compare.random.hops)
    } else {
        cfg.compare.contingencies.clone()
    };
    let opts = CompareOptions {
        snapshots: cfg.compare.snapshots.clone(),
        bands: cfg.compare.bands,
        powerflow: cfg.powerflow,
        jobs,
    };
    let (report, runs) = compare_with_runs(&case, &profile, &cfg.configuration, &specs, &cfg.sim, &opts)?;
    write_text(&cfg.out.join("compare_report.json"), &report.to_json()?)?;
    write_text(&cfg.out.join("compare_summary.txt"), &report.summary_table())?;
    if cfg.compare.write_series {
        for r in &runs {
            r.result.write_csv(create(&cfg.out.join(format!("{}.csv", r.name)))?)?;
        }
        let pairs: Vec<(String, String, String)> = report
            .pairs
            .iter()
            .filter(|p| p.error.is_none())
            .map(|p| {
                let id = &p.scenario_id;
                (id.clone(), format!("{id}_grid_only.csv"), format!("{id}_with_ies.csv"))
            })
            .collect();
        write_text(&cfg.out.join("compare.gp"), &plot::compare_script(&pairs, report.dc_bus))?;
    }
    Ok(())
}
