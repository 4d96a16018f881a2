//! Collisional monitoring protocol.
//!
//! Each collision couples the system qubit to a fresh ancilla prepared in
//! `|φ⟩ = (|0⟩ - i|1⟩)/√2` through
//!
//! ```text
//! U = Z_S(θ) U_CNOT(θ),   U_CNOT(θ) = cos θ - i sin θ CNOT,   Z_S(θ) = e^{iθσ_z/2} ⊗ 1
//! ```
//!
//! with the system as CNOT control and the ancilla as target. The ancilla is
//! then measured in the computational basis and discarded. Joint states are
//! ordered system ⊗ ancilla, so basis index `2s + a` labels `|s⟩|a⟩`.
//! With `θ = √(η dt)` the sequence of collisions converges to `dq = (1 - q²) dW`.

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::rng::trajectory_rng;
use crate::state::{DensityMatrix, Rate, StateCoord};

/// Branches with probability below this cannot be renormalized.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Probe qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaState(Vector2<Complex64>);

impl AncillaState {
    pub fn amplitudes(&self) -> &Vector2<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn projector(&self) -> Matrix2<Complex64> {
        self.0 * self.0.adjoint()
    }
}

/// `|φ⟩ = (|0⟩ - i|1⟩)/√2`.
pub fn make_ancilla() -> AncillaState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    AncillaState(Vector2::new(
        Complex64::new(s, 0.0),
        Complex64::new(0.0, -s),
    ))
}

/// Joint system–ancilla unitary for one collision.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionUnitary {
    matrix: Matrix4<Complex64>,
    theta: f64,
}

impl CollisionUnitary {
    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix4::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// CNOT with the system (first factor) as control.
pub fn cnot() -> Matrix4<Complex64> {
    Matrix4::new(
        ONE, ZERO, ZERO, ZERO, //
        ZERO, ONE, ZERO, ZERO, //
        ZERO, ZERO, ZERO, ONE, //
        ZERO, ZERO, ONE, ZERO,
    )
}

/// `cos θ · I₄ - i sin θ · CNOT`.
pub fn weak_cnot(theta: f64) -> Matrix4<Complex64> {
    let (s, c) = theta.sin_cos();
    Matrix4::identity() * Complex64::new(c, 0.0) - cnot() * Complex64::new(0.0, s)
}

/// `e^{iθσ_z/2} ⊗ 1`.
pub fn phase_correction(theta: f64) -> Matrix4<Complex64> {
    let plus = Complex64::from_polar(1.0, 0.5 * theta);
    let minus = plus.conj();
    Matrix4::from_diagonal(&nalgebra::Vector4::new(plus, plus, minus, minus))
}

pub fn make_unitary(theta: f64) -> CollisionUnitary {
    CollisionUnitary {
        matrix: phase_correction(theta) * weak_cnot(theta),
        theta,
    }
}

/// Result of the projective ancilla measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub bit: u8,
    /// Born probability of the selected branch.
    pub probability: f64,
    /// Born probabilities of both branches, `[p₀, p₁]`.
    pub branches: [f64; 2],
}

/// A collision with fixed coupling angle, ready to be applied repeatedly.
#[derive(Debug, Clone)]
pub struct Collider {
    unitary: CollisionUnitary,
    unitary_adj: Matrix4<Complex64>,
    ancilla: Matrix2<Complex64>,
}

impl Collider {
    pub fn new(theta: f64) -> Self {
        let unitary = make_unitary(theta);
        let unitary_adj = unitary.matrix.adjoint();
        Collider {
            unitary,
            unitary_adj,
            ancilla: make_ancilla().projector(),
        }
    }

    /// Collider for measurement rate `η` and time step `dt`, `θ = √(η dt)`.
    pub fn for_rate(eta: Rate, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return domain(format!("time step must be positive, got {dt}"));
        }
        Ok(Self::new((eta.get() * dt).sqrt()))
    }

    pub fn unitary(&self) -> &CollisionUnitary {
        &self.unitary
    }

    /// Unnormalized system blocks `(1 ⊗ ⟨k|) U (ρ ⊗ |φ⟩⟨φ|) U† (1 ⊗ |k⟩)`.
    pub fn branches(&self, rho: &DensityMatrix) -> [Matrix2<Complex64>; 2] {
        let joint = rho.matrix().kronecker(&self.ancilla);
        let evolved = self.unitary.matrix * joint * self.unitary_adj;
        let block = |k: usize| Matrix2::from_fn(|i, j| evolved[(2 * i + k, 2 * j + k)]);
        [block(0), block(1)]
    }

    /// One collision followed by ancilla measurement; outcome 0 is selected
    /// when `u < p₀`.
    pub fn step(&self, rho: &DensityMatrix, u: f64) -> Result<(DensityMatrix, Outcome)> {
        let blocks = self.branches(rho);
        let p = [blocks[0].trace().re, blocks[1].trace().re];
        let bit = if u < p[0] { 0 } else { 1 };
        let prob = p[bit];
        if prob < MIN_BRANCH_PROBABILITY {
            return Err(Error::DegenerateBranch { probability: prob });
        }
        let post = DensityMatrix::new(blocks[bit] / Complex64::new(prob, 0.0))?;
        Ok((
            post,
            Outcome {
                bit: bit as u8,
                probability: prob,
                branches: p,
            },
        ))
    }
}

/// Single collision with a freshly built unitary. Use [`Collider`] when
/// stepping repeatedly.
pub fn collision_step(rho: &DensityMatrix, theta: f64, u: f64) -> Result<(DensityMatrix, Outcome)> {
    Collider::new(theta).step(rho, u)
}

/// Drives one trajectory with uniforms drawn from `rng`. Returns `q` before
/// the first collision and after each of the `n_steps` collisions.
pub fn run_with_rng<R: Rng + ?Sized>(
    collider: &Collider,
    initial: StateCoord,
    n_steps: usize,
    rng: &mut R,
) -> Result<Vec<StateCoord>> {
    let mut rho = DensityMatrix::from_state(initial);
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(rho.state_coord()?);
    for _ in 0..n_steps {
        let u: f64 = rng.random();
        rho = collider.step(&rho, u)?.0;
        out.push(rho.state_coord()?);
    }
    Ok(out)
}

/// Collisional trajectory with `θ = √(η dt)` started from `initial`
/// (the maximally mixed state when `None`). The random stream is
/// `trajectory_rng(seed, 0)`.
pub fn run_collisional_trajectory(
    eta: Rate,
    dt: f64,
    n_steps: usize,
    seed: u64,
    initial: Option<StateCoord>,
) -> Result<Vec<StateCoord>> {
    let collider = Collider::for_rate(eta, dt)?;
    let mut rng = trajectory_rng(seed, 0);
    run_with_rng(
        &collider,
        initial.unwrap_or(StateCoord::MIXED),
        n_steps,
        &mut rng,
    )
}
