//! Euler–Maruyama ensembles for the monitored qubit.
//!
//! Two equivalent Itô equations are integrated:
//!
//! ```text
//! dq = (1 - q²) dW                 (multiplicative noise, `langevin_q`)
//! dQ = η tanh Q dt + dW            (additive noise, `langevin_Q`, Q = atanh q)
//! ```
//!
//! with `⟨dW⟩ = 0`, `dW² = η dt`. The collisional protocol is available as a
//! third backend. Trajectories run in parallel, each with its own random
//! stream, so results are bit-identical for any number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collisional::Collider;
use crate::error::{Error, Result};
use crate::rng::{gen_increment, trajectory_rng, WienerIncrement};
use crate::state::{odd_atanh, Rate, StateCoord};

/// Largest `η dt` considered stable; larger steps only trigger a warning.
pub const STABILITY_LIMIT: f64 = 0.1;
/// Reporting cap for `|Q|`; `tanh` saturates exactly beyond it.
pub const TRANSFORMED_CAP: f64 = 700.0;
/// Snapshot times must sit within this fraction of a step from the grid.
const SNAPSHOT_ALIGNMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "langevin_q")]
    LangevinState,
    #[serde(rename = "langevin_Q")]
    LangevinTransformed,
    #[serde(rename = "collisional")]
    Collisional,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::LangevinState => "langevin_q",
            Backend::LangevinTransformed => "langevin_Q",
            Backend::Collisional => "collisional",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "langevin_q" => Ok(Backend::LangevinState),
            "langevin_Q" => Ok(Backend::LangevinTransformed),
            "collisional" => Ok(Backend::Collisional),
            other => Err(Error::InvalidConfig(format!(
                "unknown backend '{other}' (expected langevin_q, langevin_Q or collisional)"
            ))),
        }
    }
}

/// What happens when a `q` trajectory leaves `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Count the excursion, leave the value untouched.
    #[default]
    RecordOnly,
    /// Count the excursion and clamp back into `[-1, 1]`.
    Clamp,
}

impl FromStr for BoundaryPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "record_only" => Ok(BoundaryPolicy::RecordOnly),
            "clamp" => Ok(BoundaryPolicy::Clamp),
            other => Err(Error::InvalidConfig(format!(
                "unknown boundary policy '{other}' (expected record_only or clamp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eta: Rate,
    pub dt: f64,
    pub n_steps: usize,
    pub n_traj: usize,
    pub master_seed: u64,
    pub backend: Backend,
    /// Physical times (not `ηt`) at which to record the ensemble.
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub boundary_policy: BoundaryPolicy,
    /// Starting state; the maximally mixed state `q = 0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_q: Option<f64>,
}

impl SimConfig {
    /// Checks the invariants and maps each snapshot time to its step index.
    pub fn snapshot_steps(&self) -> Result<Vec<usize>> {
        fn bad<T>(msg: String) -> Result<T> {
            Err(Error::InvalidConfig(msg))
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.n_traj == 0 {
            return bad("at least one trajectory is required".into());
        }
        if let Some(q0) = self.initial_q {
            StateCoord::new(q0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            if self.backend == Backend::LangevinTransformed && q0.abs() >= 1.0 {
                return bad("langevin_Q cannot start from a pure state".into());
            }
        }
        let t_max = self.n_steps as f64 * self.dt;
        self.snapshot_times
            .iter()
            .map(|&t| {
                if !(t.is_finite() && t >= 0.0) {
                    return bad(format!("snapshot time {t} is not a non-negative number"));
                }
                let n = (t / self.dt).round();
                if (t / self.dt - n).abs() > SNAPSHOT_ALIGNMENT {
                    return bad(format!(
                        "snapshot time {t} is not a multiple of dt = {}",
                        self.dt
                    ));
                }
                let n = n as usize;
                if n > self.n_steps {
                    return bad(format!("snapshot time {t} exceeds n_steps·dt = {t_max}"));
                }
                Ok(n)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.snapshot_steps().map(|_| ())
    }

    /// Non-fatal diagnostics about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let h = self.eta.get() * self.dt;
        if h > STABILITY_LIMIT {
            vec![format!(
                "η·dt = {h} exceeds {STABILITY_LIMIT}; expect boundary excursions"
            )]
        } else {
            Vec::new()
        }
    }

    fn initial_state(&self) -> f64 {
        self.initial_q.unwrap_or(0.0)
    }
}

/// Coordinate stored in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    /// `q ∈ [-1, 1]`
    State,
    /// `Q = atanh q`, capped at ±[`TRANSFORMED_CAP`]
    Transformed,
}

/// Values of every trajectory at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSnapshot {
    pub time: f64,
    pub step: usize,
    pub backend: Backend,
    pub coordinate: Coordinate,
    pub values: Vec<f64>,
    /// Trajectories that left `[-1, 1]` at or before this step (`q` backend).
    pub excursion_count: usize,
}

impl EnsembleSnapshot {
    /// Values mapped to the state coordinate `q`.
    pub fn state_values(&self) -> Vec<f64> {
        match self.coordinate {
            Coordinate::State => self.values.clone(),
            Coordinate::Transformed => self.values.iter().map(|x| x.tanh()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `q + (1 - q²) dW`, unclamped.
#[inline]
pub fn em_step_state(q: f64, dw: WienerIncrement) -> f64 {
    q + (1.0 - q * q) * dw.get()
}

/// `Q + η tanh Q dt + dW`.
#[inline]
pub fn em_step_transformed(big_q: f64, eta: Rate, dt: f64, dw: WienerIncrement) -> f64 {
    big_q + eta.get() * big_q.tanh() * dt + dw.get()
}

struct TrajectoryRecord {
    values: Vec<f64>,
    first_excursion: Option<usize>,
}

/// Steps one trajectory through every step in `0..=last`, calling `record`
/// when the step matches the next entry of `sorted_steps`.
fn run_one(
    config: &SimConfig,
    collider: Option<&Collider>,
    sorted_steps: &[usize],
    index: usize,
) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(config.master_seed, index as u64);
    let last = sorted_steps.last().copied().unwrap_or(0);
    let mut values = Vec::with_capacity(sorted_steps.len());
    let mut first_excursion = None;
    let mut next = 0;
    let fail = |step| Error::IntegrationFailure {
        trajectory: index,
        step,
    };

    let mut record = |step: usize, value: f64, values: &mut Vec<f64>| {
        while next < sorted_steps.len() && sorted_steps[next] == step {
            values.push(value);
            next += 1;
        }
    };

    match config.backend {
        Backend::LangevinState => {
            let mut q = config.initial_state();
            record(0, q, &mut values);
            for step in 1..=last {
                q = em_step_state(q, gen_increment(&mut rng, config.eta, config.dt));
                if !q.is_finite() {
                    return Err(fail(step));
                }
                if q.abs() > 1.0 {
                    first_excursion.get_or_insert(step);
                    if config.boundary_policy == BoundaryPolicy::Clamp {
                        q = q.clamp(-1.0, 1.0);
                    }
                }
                record(step, q, &mut values);
            }
        }
        Backend::LangevinTransformed => {
            let mut big_q = odd_atanh(config.initial_state());
            record(0, big_q, &mut values);
            for step in 1..=last {
                let dw = gen_increment(&mut rng, config.eta, config.dt);
                big_q = em_step_transformed(big_q, config.eta, config.dt, dw);
                if !big_q.is_finite() {
                    return Err(fail(step));
                }
                record(
                    step,
                    big_q.clamp(-TRANSFORMED_CAP, TRANSFORMED_CAP),
                    &mut values,
                );
            }
        }
        Backend::Collisional => {
            let collider = collider.expect("collider is built for the collisional backend");
            let start = StateCoord::new(config.initial_state())?;
            let mut rho = crate::state::DensityMatrix::from_state(start);
            record(0, start.get(), &mut values);
            for step in 1..=last {
                let u: f64 = rng.random();
                rho = collider.step(&rho, u)?.0;
                record(step, rho.state_coord()?.get(), &mut values);
            }
        }
    }

    Ok(TrajectoryRecord {
        values,
        first_excursion,
    })
}

/// Runs `n_traj` independent trajectories and records the ensemble at each
/// requested snapshot time, in request order.
pub fn run_ensemble(config: &SimConfig) -> Result<Vec<EnsembleSnapshot>> {
    let steps = config.snapshot_steps()?;
    let mut sorted = steps.clone();
    sorted.sort_unstable();
    sorted.dedup();

    let collider = match config.backend {
        Backend::Collisional => Some(Collider::for_rate(config.eta, config.dt)?),
        _ => None,
    };

    let results: Vec<Result<TrajectoryRecord>> = (0..config.n_traj)
        .into_par_iter()
        .map(|i| run_one(config, collider.as_ref(), &sorted, i))
        .collect();
    // first failure by trajectory index, independent of scheduling
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;

    let coordinate = match config.backend {
        Backend::LangevinTransformed => Coordinate::Transformed,
        _ => Coordinate::State,
    };
    let count_excursions = config.backend == Backend::LangevinState;

    Ok(steps
        .iter()
        .zip(&config.snapshot_times)
        .map(|(&step, &time)| {
            let slot = sorted
                .binary_search(&step)
                .expect("step is in the sorted list");
            let values = records.iter().map(|r| r.values[slot]).collect();
            let excursion_count = if count_excursions {
                records
                    .iter()
                    .filter(|r| r.first_excursion.is_some_and(|s| s <= step))
                    .count()
            } else {
                0
            };
            EnsembleSnapshot {
                time,
                step,
                backend: config.backend,
                coordinate,
                values,
                excursion_count,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(backend: Backend, n_traj: usize, n_steps: usize, snaps: &[f64]) -> SimConfig {
        SimConfig {
            eta: Rate::new(1.0).unwrap(),
            dt: 1e-3,
            n_steps,
            n_traj,
            master_seed: 7,
            backend,
            snapshot_times: snaps.to_vec(),
            boundary_policy: BoundaryPolicy::RecordOnly,
            initial_q: None,
        }
    }

    #[test]
    fn em_step_examples() {
        assert_eq!(em_step_state(0.0, WienerIncrement(0.1)), 0.1);
        assert_eq!(em_step_state(1.0, WienerIncrement(0.7)), 1.0);
        assert!((em_step_state(0.5, WienerIncrement(0.2)) - 0.65).abs() < 1e-15);

        let eta = Rate::new(1.0).unwrap();
        assert_eq!(
            em_step_transformed(0.0, eta, 1e-3, WienerIncrement(0.0)),
            0.0
        );
        // 2 + 0.001·tanh 2 = 2.00096402758007581688 (mpmath)
        let v = em_step_transformed(2.0, eta, 1e-3, WienerIncrement(0.0));
        assert!((v - 2.000_964_027_580_075_8).abs() < 1e-15);
        let w = em_step_transformed(-1.0, eta, 1e-3, WienerIncrement(0.0));
        assert!(w < -1.0);
        assert_eq!(
            w,
            -em_step_transformed(1.0, eta, 1e-3, WienerIncrement(0.0))
        );
    }

    #[test]
    fn degenerate_run() {
        let snaps = run_ensemble(&config(Backend::LangevinState, 1, 0, &[0.0])).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].values, vec![0.0]);
        assert_eq!(snaps[0].time, 0.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(config(Backend::LangevinState, 0, 10, &[])
            .validate()
            .is_err());
        let mut c = config(Backend::LangevinState, 1, 10, &[0.011]);
        assert!(c.validate().is_err());
        c.snapshot_times = vec![0.0105];
        assert!(c.validate().is_err());
        c.snapshot_times = vec![0.01];
        assert!(c.validate().is_ok());
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut pure_q = config(Backend::LangevinTransformed, 1, 10, &[]);
        pure_q.initial_q = Some(1.0);
        assert!(pure_q.validate().is_err());
    }

    #[test]
    fn stability_warning() {
        let mut c = config(Backend::LangevinState, 1, 10, &[]);
        assert!(c.warnings().is_empty());
        c.dt = 0.2;
        assert_eq!(c.warnings().len(), 1);
    }

    #[test]
    fn snapshots_follow_request_order() {
        let c = config(Backend::LangevinState, 50, 300, &[0.3, 0.1, 0.3, 0.0]);
        let snaps = run_ensemble(&c).unwrap();
        let steps: Vec<usize> = snaps.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![300, 100, 300, 0]);
        assert_eq!(snaps[0].values, snaps[2].values);
        assert!(snaps.iter().all(|s| s.len() == 50));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        for backend in [
            Backend::LangevinState,
            Backend::LangevinTransformed,
            Backend::Collisional,
        ] {
            let c = config(backend, 64, 200, &[0.05, 0.2]);
            let run = |threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| run_ensemble(&c).unwrap())
            };
            assert_eq!(run(1), run(4), "{backend}");
        }
    }

    #[test]
    fn large_steps_fail_or_are_clamped() {
        let mut c = config(Backend::LangevinState, 200, 2000, &[20.0]);
        c.dt = 0.01;
        c.eta = Rate::new(50.0).unwrap();
        match run_ensemble(&c) {
            Err(Error::IntegrationFailure { .. }) => {}
            Ok(s) => assert!(s[0].excursion_count > 0),
            Err(e) => panic!("unexpected error {e}"),
        }
        c.boundary_policy = BoundaryPolicy::Clamp;
        let s = run_ensemble(&c).unwrap();
        assert!(s[0].excursion_count > 0);
        assert!(s[0].values.iter().all(|q| q.abs() <= 1.0));
    }

    #[test]
    fn transformed_backend_reports_q_via_tanh() {
        let c = config(Backend::LangevinTransformed, 10, 100, &[0.1]);
        let s = &run_ensemble(&c).unwrap()[0];
        assert_eq!(s.coordinate, Coordinate::Transformed);
        assert_eq!(s.excursion_count, 0);
        for (q, big_q) in s.state_values().iter().zip(&s.values) {
            assert_eq!(*q, big_q.tanh());
        }
    }

    #[test]
    fn initial_state_override() {
        let mut c = config(Backend::Collisional, 5, 50, &[0.05]);
        c.initial_q = Some(1.0);
        let s = run_ensemble(&c).unwrap();
        assert!(s[0].values.iter().all(|&q| (q - 1.0).abs() < 1e-12));
    }

    #[test]
    fn names_parse() {
        for b in [
            Backend::LangevinState,
            Backend::LangevinTransformed,
            Backend::Collisional,
        ] {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
        }
        assert!("euler".parse::<Backend>().is_err());
        assert_eq!(
            "clamp".parse::<BoundaryPolicy>().unwrap(),
            BoundaryPolicy::Clamp
        );
    }
}
