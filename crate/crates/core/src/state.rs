//! State representations of the monitored qubit and conversions between them.
//!
//! The measurement basis is fixed to the computational basis `{|0⟩, |1⟩}`
//! with `σ_z = diag(1, -1)`, so a state without coherences is fully described
//! by `q = ρ₀₀ - ρ₁₁`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance for identities that hold in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Largest off-diagonal magnitude still accepted as a diagonal state.
pub const COHERENCE_TOL: f64 = 1e-9;

/// Measurement rate `η` (units of 1/time).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Rate(f64);

impl Rate {
    pub fn new(eta: f64) -> Result<Self> {
        if eta.is_finite() && eta > 0.0 {
            Ok(Rate(eta))
        } else {
            domain(format!(
                "measurement rate must be positive and finite, got {eta}"
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Rate {
    type Error = Error;
    fn try_from(eta: f64) -> Result<Self> {
        Rate::new(eta)
    }
}

impl From<Rate> for f64 {
    fn from(r: Rate) -> f64 {
        r.0
    }
}

/// Bloch-z coordinate `q ∈ [-1, 1]` of a diagonal qubit state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StateCoord(f64);

impl StateCoord {
    pub const MIXED: StateCoord = StateCoord(0.0);

    pub fn new(q: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&q) {
            Ok(StateCoord(q))
        } else {
            domain(format!("state coordinate must lie in [-1, 1], got {q}"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `Q = atanh q`. Fails at the pure states, where `Q` is infinite.
    pub fn to_transformed(self) -> Result<TransformedCoord> {
        if self.0.abs() >= 1.0 {
            return domain(format!("atanh undefined for |q| >= 1 (q = {})", self.0));
        }
        TransformedCoord::new(odd_atanh(self.0))
    }

    /// Purity `τ = tr ρ² = (1 + q²)/2`.
    pub fn purity(self) -> Purity {
        Purity(0.5 * (1.0 + self.0 * self.0))
    }
}

/// Unbounded coordinate `Q = atanh q`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransformedCoord(f64);

impl TransformedCoord {
    pub fn new(big_q: f64) -> Result<Self> {
        if big_q.is_finite() {
            Ok(TransformedCoord(big_q))
        } else {
            domain(format!(
                "transformed coordinate must be finite, got {big_q}"
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn to_state(self) -> StateCoord {
        StateCoord(self.0.tanh())
    }
}

/// Purity `τ ∈ [1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Purity(f64);

impl Purity {
    pub fn new(tau: f64) -> Result<Self> {
        if (0.5..=1.0).contains(&tau) {
            Ok(Purity(tau))
        } else {
            domain(format!("purity must lie in [1/2, 1], got {tau}"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// `atanh` evaluated on `|x|` so that it is exactly odd in floating point.
#[inline]
pub fn odd_atanh(x: f64) -> f64 {
    x.signum() * x.abs().atanh()
}

/// Free-function form of [`StateCoord::purity`].
pub fn purity_of(q: StateCoord) -> Purity {
    q.purity()
}

/// Hermitian, unit-trace, positive semidefinite 2x2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

impl DensityMatrix {
    /// Validates the density-matrix invariants to [`EXACT_TOL`].
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > EXACT_TOL {
            return domain(format!("matrix is not Hermitian (deviation {herm:e})"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > EXACT_TOL || tr.im.abs() > EXACT_TOL {
            return domain(format!("trace must be 1, got {tr}"));
        }
        let (lo, _) = hermitian_eigenvalues(&m);
        if lo < -EXACT_TOL {
            return domain(format!(
                "matrix is not positive semidefinite (eigenvalue {lo:e})"
            ));
        }
        Ok(DensityMatrix(m))
    }

    /// `ρ(q) = (1 + q σ_z)/2`.
    pub fn from_state(q: StateCoord) -> Self {
        let q = q.get();
        DensityMatrix(Matrix2::new(
            Complex64::new(0.5 * (1.0 + q), 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5 * (1.0 - q), 0.0),
        ))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_state(StateCoord::MIXED)
    }

    /// Recovers `q = ρ₀₀ - ρ₁₁`, rejecting states with coherences above
    /// [`COHERENCE_TOL`].
    pub fn state_coord(&self) -> Result<StateCoord> {
        let off = self.0[(0, 1)].norm().max(self.0[(1, 0)].norm());
        if off > COHERENCE_TOL {
            return Err(Error::CoherenceLeak {
                magnitude: off,
                tolerance: COHERENCE_TOL,
            });
        }
        let q = self.0[(0, 0)].re - self.0[(1, 1)].re;
        // roundoff can push a pure state a hair outside [-1, 1]
        StateCoord::new(q.clamp(-1.0, 1.0))
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        hermitian_eigenvalues(&self.0)
    }
}

/// Eigenvalues `(low, high)` of a Hermitian 2x2 matrix.
fn hermitian_eigenvalues(m: &Matrix2<Complex64>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - r, mean + r)
}
