//! Deterministic per-trajectory random streams.
//!
//! Every trajectory owns an independent ChaCha8 stream keyed by
//! `(master_seed, trajectory_index)`: the key is expanded from the master seed
//! with `SeedableRng::seed_from_u64` and the trajectory index selects the
//! ChaCha stream. Results therefore do not depend on how trajectories are
//! scheduled across worker threads.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat). Both
//! the stream layout and the sampler are pinned by the crate versions in
//! `Cargo.lock`; changing either changes every sampled trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::state::Rate;

pub type TrajectoryRng = ChaCha8Rng;

pub fn trajectory_rng(master_seed: u64, trajectory_index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory_index);
    rng
}

/// Gaussian Wiener increment with mean 0 and variance `η Δt`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WienerIncrement(pub f64);

impl WienerIncrement {
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

#[inline]
pub fn gen_increment<R: Rng + ?Sized>(rng: &mut R, eta: Rate, dt: f64) -> WienerIncrement {
    let z: f64 = rng.sample(StandardNormal);
    WienerIncrement((eta.get() * dt).sqrt() * z)
}
