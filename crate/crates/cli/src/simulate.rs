use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qubit_purification::integrator::{
    run_ensemble, Backend, BoundaryPolicy, EnsembleSnapshot, SimConfig,
};
use qubit_purification::Rate;
use serde::{Deserialize, Serialize};

use crate::args::SimulateArgs;
use crate::error::{CliError, Outcome};
use crate::io::{rate, SampleFile};

pub const CONFIG_ECHO: &str = "config.toml";
pub const MANIFEST: &str = "manifest.json";

/// Simulation parameters as read from a TOML file. Every field may be
/// omitted and supplied by flags instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub eta: Option<f64>,
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub n_traj: Option<usize>,
    pub master_seed: Option<u64>,
    pub backend: Option<Backend>,
    pub snapshot_times: Option<Vec<f64>>,
    /// Alternative to `snapshot_times`, in units of `1/η`.
    pub snapshot_eta_t: Option<Vec<f64>>,
    pub boundary_policy: Option<BoundaryPolicy>,
    pub initial_q: Option<f64>,
}

/// Record of one `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SimConfig,
    pub tool_version: String,
    pub timestamp: String,
    pub threads: Option<usize>,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
    pub warnings: Vec<String>,
}

pub fn read_sim_file(path: &Path) -> Result<SimFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::read(path, e))
}

/// Merges the config file (if any) with the flags, flags taking precedence.
pub fn resolve_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let file = match &args.config {
        Some(p) => read_sim_file(p)?,
        None => SimFile::default(),
    };
    let eta = rate(args.eta.or(file.eta).unwrap_or(1.0))?;
    let dt = args.dt.or(file.dt).unwrap_or(1e-3);
    let n_traj = args
        .traj
        .or(file.n_traj)
        .ok_or_else(|| CliError::Config("number of trajectories not given (--traj)".into()))?;

    let flag_times = match (&args.snapshots, &args.snapshots_etat) {
        (Some(t), _) => Some(t.clone()),
        (None, Some(s)) => Some(to_times(s, eta)),
        (None, None) => None,
    };
    let file_times = match (&file.snapshot_times, &file.snapshot_eta_t) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "config gives both snapshot_times and snapshot_eta_t".into(),
            ))
        }
        (Some(t), None) => Some(t.clone()),
        (None, Some(s)) => Some(to_times(s, eta)),
        (None, None) => None,
    };
    let times = flag_times.or(file_times);

    let n_steps = match (args.steps.or(file.n_steps), &times) {
        (Some(n), _) => n,
        (None, Some(ts)) if !ts.is_empty() && dt > 0.0 => {
            (ts.iter().copied().fold(0.0, f64::max) / dt).round() as usize
        }
        _ => {
            return Err(CliError::Config(
                "number of steps not given (--steps)".into(),
            ))
        }
    };
    let snapshot_times = times.unwrap_or_else(|| vec![n_steps as f64 * dt]);
    if snapshot_times.is_empty() {
        return Err(CliError::Config("empty snapshot list".into()));
    }

    let config = SimConfig {
        eta,
        dt,
        n_steps,
        n_traj,
        master_seed: args.seed.or(file.master_seed).unwrap_or(0),
        backend: args
            .backend
            .or(file.backend)
            .unwrap_or(Backend::LangevinState),
        snapshot_times,
        boundary_policy: args.boundary.or(file.boundary_policy).unwrap_or_default(),
        initial_q: args.initial_q.or(file.initial_q),
    };
    config.validate()?;
    Ok(config)
}

fn to_times(eta_t: &[f64], eta: Rate) -> Vec<f64> {
    eta_t.iter().map(|s| s / eta.get()).collect()
}

/// Runs the ensemble, on a dedicated pool when `threads` is given.
pub fn run_with_threads(
    config: &SimConfig,
    threads: Option<usize>,
) -> Result<Vec<EnsembleSnapshot>, CliError> {
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(|| run_ensemble(config))?)
        }
        None => Ok(run_ensemble(config)?),
    }
}

pub fn snapshot_file_name(index: usize, time: f64) -> String {
    format!("snapshot_{index:03}_t{time}.csv")
}

/// Sample file for one snapshot; `langevin_Q` values are stored as `q = tanh Q`.
pub fn snapshot_file(config: &SimConfig, snap: &EnsembleSnapshot) -> SampleFile {
    let eta = config.eta.get();
    let mut metadata = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        metadata.insert(k.to_string(), v);
    };
    put("backend", snap.backend.name().to_string());
    put("dt", config.dt.to_string());
    put("eta", eta.to_string());
    put("eta_t", (eta * snap.time).to_string());
    put("excursion_count", snap.excursion_count.to_string());
    put("n_traj", snap.len().to_string());
    put("seed", config.master_seed.to_string());
    put("step", snap.step.to_string());
    put("t", snap.time.to_string());
    SampleFile {
        metadata,
        values: snap.state_values(),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let config = resolve_config(args)?;
    let warnings = config.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let start = Instant::now();
    let snapshots = run_with_threads(&config, args.threads)?;

    let out = &args.out;
    fs::create_dir_all(out).map_err(|e| CliError::write(out, e))?;
    let mut outputs = Vec::with_capacity(snapshots.len() + 2);
    for (i, snap) in snapshots.iter().enumerate() {
        let path = out.join(snapshot_file_name(i, snap.time));
        snapshot_file(&config, snap).write(&path)?;
        outputs.push(path);
    }

    let echo = out.join(CONFIG_ECHO);
    let text = toml::to_string(&echo_of(&config)).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&echo, text).map_err(|e| CliError::write(&echo, e))?;
    outputs.push(echo);

    let manifest_path = out.join(MANIFEST);
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        config,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        threads: args.threads,
        outputs,
        duration_seconds: start.elapsed().as_secs_f64(),
        warnings,
    };
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&manifest_path, json + "\n").map_err(|e| CliError::write(&manifest_path, e))?;

    for p in &manifest.outputs {
        println!("{}", p.display());
    }
    Ok(Outcome::Pass)
}

/// The resolved configuration in config-file form.
pub fn echo_of(config: &SimConfig) -> SimFile {
    SimFile {
        eta: Some(config.eta.get()),
        dt: Some(config.dt),
        n_steps: Some(config.n_steps),
        n_traj: Some(config.n_traj),
        master_seed: Some(config.master_seed),
        backend: Some(config.backend),
        snapshot_times: Some(config.snapshot_times.clone()),
        snapshot_eta_t: None,
        boundary_policy: Some(config.boundary_policy),
        initial_q: config.initial_q,
    }
}
