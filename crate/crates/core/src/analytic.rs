//! Exact distributions of the monitored qubit started from the maximally
//! mixed state.
//!
//! With `Q = atanh q` the dynamics is `dQ = η tanh Q dt + dW`, whose
//! transition density from `Q = 0` is
//!
//! ```text
//! P_Q(Q, t) = (2πηt)^{-1/2} exp(-Q²/(2ηt) + ln cosh Q - ηt/2).
//! ```
//!
//! The effective rate `Ω = Q/t`, the state coordinate `q = tanh(Ωt)` and the
//! purity `τ = (1 + q²)/2` follow by change of variables. Every density is
//! assembled in log space and exponentiated once, so no intermediate
//! `cosh` overflows.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::state::Rate;

/// Number of envelope widths kept on each side of the peaks when truncating
/// the infinite integration domains.
pub const TRUNCATION_WIDTHS: f64 = 12.0;

/// `ln cosh x` without overflow: `|x| + ln(1 + e^{-2|x|}) - ln 2`.
#[inline]
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        domain(format!("time must be positive and finite, got {t}"))
    }
}

/// `ln(1 - q²)` accurate near `|q| = 1`.
#[inline]
fn ln_one_minus_sq(q: f64) -> f64 {
    (-q).ln_1p() + q.ln_1p()
}

fn ln_transformed_density(big_q: f64, t: f64, eta: f64) -> f64 {
    let s = eta * t;
    -0.5 * (2.0 * PI * s).ln() - big_q * big_q / (2.0 * s) + log_cosh(big_q) - 0.5 * s
}

fn ln_rate_density(omega: f64, t: f64, eta: f64) -> f64 {
    0.5 * (t / (2.0 * PI * eta)).ln() - omega * omega * t / (2.0 * eta) + log_cosh(omega * t)
        - 0.5 * eta * t
}

/// `ln P_q` given `A = atanh q` and `ln(1 - q²)`, using
/// `ln cosh(atanh q) = -½ ln(1 - q²)`.
fn ln_state_density_parts(atanh_q: f64, ln_jacobian: f64, t: f64, eta: f64) -> f64 {
    let s = eta * t;
    -0.5 * (2.0 * PI * s).ln()
        - ln_jacobian
        - atanh_q * atanh_q / (2.0 * s)
        - 0.5 * ln_jacobian
        - 0.5 * s
}

/// `ln P_τ` given `r = √(2τ - 1)`, `A = atanh r` and `ln(1 - τ)`.
fn ln_purity_density_parts(
    ln_r: f64,
    atanh_r: f64,
    ln_one_minus_tau: f64,
    t: f64,
    eta: f64,
) -> f64 {
    let s = eta * t;
    -0.5 * s
        - 0.5 * (2.0 * PI * s).ln()
        - ln_one_minus_tau
        - ln_r
        - atanh_r * atanh_r / (2.0 * s)
        - 0.5 * (LN_2 + ln_one_minus_tau)
}

/// Density of `Q = atanh q` at time `t`.
pub fn transformed_density(big_q: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    Ok(ln_transformed_density(big_q, t, eta.get()).exp())
}

/// Density of the effective rate `Ω = Q(t)/t`.
pub fn rate_density(omega: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    Ok(ln_rate_density(omega, t, eta.get()).exp())
}

/// Density of the state coordinate `q` on `(-1, 1)`.
pub fn state_density(q: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    if q.is_nan() || q.abs() >= 1.0 {
        return domain(format!("state density needs |q| < 1, got {q}"));
    }
    let a = q.abs();
    Ok(ln_state_density_parts(a.atanh(), ln_one_minus_sq(a), t, eta.get()).exp())
}

/// [`state_density`] evaluated at `q = tanh Q`, stable where `tanh Q`
/// rounds to ±1.
pub fn state_density_at_transformed(big_q: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    Ok(ln_state_density_parts(big_q, -2.0 * log_cosh(big_q), t, eta.get()).exp())
}

/// Density of the purity `τ` on `(1/2, 1)`.
pub fn purity_density(tau: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    if !(tau > 0.5 && tau < 1.0) {
        return domain(format!("purity density needs 1/2 < τ < 1, got {tau}"));
    }
    let r = (2.0 * tau - 1.0).sqrt();
    Ok(ln_purity_density_parts(r.ln(), r.atanh(), (1.0 - tau).ln(), t, eta.get()).exp())
}

/// [`purity_density`] evaluated at `τ = (1 + tanh²Q)/2`, stable where the
/// purity rounds to 1.
pub fn purity_density_at_transformed(big_q: f64, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    let a = big_q.abs();
    if a == 0.0 {
        return domain("purity density is singular at τ = 1/2");
    }
    let ln_r = a.tanh().ln();
    let ln_one_minus_tau = -2.0 * log_cosh(a) - LN_2;
    Ok(ln_purity_density_parts(ln_r, a, ln_one_minus_tau, t, eta.get()).exp())
}

/// Action of the straight path `Q(t') = Ωt'`: `S = Ω²t/(2η) - ln cosh(Ωt)`.
pub fn action(omega: f64, t: f64, eta: Rate) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    Ok(omega * omega * t / (2.0 * eta.get()) - log_cosh(omega * t))
}

/// Which of the four exact densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityKind {
    #[serde(rename = "P_Q")]
    Transformed,
    #[serde(rename = "P_Omega")]
    Rate,
    #[serde(rename = "P_q")]
    State,
    #[serde(rename = "P_tau")]
    Purity,
}

impl DensityKind {
    pub const ALL: [DensityKind; 4] = [
        DensityKind::Transformed,
        DensityKind::Rate,
        DensityKind::State,
        DensityKind::Purity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DensityKind::Transformed => "P_Q",
            DensityKind::Rate => "P_Omega",
            DensityKind::State => "P_q",
            DensityKind::Purity => "P_tau",
        }
    }

    pub fn eval(self, x: f64, t: f64, eta: Rate) -> Result<f64> {
        match self {
            DensityKind::Transformed => transformed_density(x, t, eta),
            DensityKind::Rate => rate_density(x, t, eta),
            DensityKind::State => state_density(x, t, eta),
            DensityKind::Purity => purity_density(x, t, eta),
        }
    }

    /// Open interval on which the density is defined.
    pub fn domain(self) -> (f64, f64) {
        match self {
            DensityKind::Transformed | DensityKind::Rate => (f64::NEG_INFINITY, f64::INFINITY),
            DensityKind::State => (-1.0, 1.0),
            DensityKind::Purity => (0.5, 1.0),
        }
    }

    pub fn contains(self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        match self {
            DensityKind::Transformed | DensityKind::Rate => x.is_finite(),
            _ => x > lo && x < hi,
        }
    }

    /// Grid range used when none is requested: the truncation domain for
    /// `Q` and `Ω`, slightly inset bounds for the compact variables.
    pub fn default_range(self, t: f64, eta: Rate) -> (f64, f64) {
        match self {
            DensityKind::Transformed => {
                let l = transformed_cutoff(t, eta);
                (-l, l)
            }
            DensityKind::Rate => {
                let l = rate_cutoff(t, eta);
                (-l, l)
            }
            DensityKind::State => (-0.999, 0.999),
            DensityKind::Purity => (0.5005, 0.9995),
        }
    }
}

impl fmt::Display for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P_Q" => Ok(DensityKind::Transformed),
            "P_Omega" => Ok(DensityKind::Rate),
            "P_q" => Ok(DensityKind::State),
            "P_tau" => Ok(DensityKind::Purity),
            other => Err(Error::InvalidConfig(format!(
                "unknown density '{other}' (expected P_Q, P_Omega, P_q or P_tau)"
            ))),
        }
    }
}

/// Sampled density with the parameters it was evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub which: DensityKind,
    pub eta: Rate,
    pub time: f64,
    pub points: Vec<(f64, f64)>,
}

impl DensityCurve {
    pub fn sample(which: DensityKind, eta: Rate, t: f64, xs: &[f64]) -> Result<Self> {
        let points = xs
            .iter()
            .map(|&x| which.eval(x, t, eta).map(|p| (x, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityCurve {
            which,
            eta,
            time: t,
            points,
        })
    }

    /// Trapezoidal mass over the sampled points.
    pub fn trapezoid_mass(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }

    /// Indices of interior local maxima (strictly greater than both neighbours).
    pub fn local_maxima(&self) -> Vec<usize> {
        (1..self.points.len().saturating_sub(1))
            .filter(|&i| {
                let p = self.points[i].1;
                p > self.points[i - 1].1 && p > self.points[i + 1].1
            })
            .collect()
    }
}

/// `ηt + 12√(ηt)`: half-width of the truncated `Q` domain.
pub fn transformed_cutoff(t: f64, eta: Rate) -> f64 {
    let s = eta.get() * t;
    s + TRUNCATION_WIDTHS * s.sqrt()
}

/// `η + 12√(η/t)`: half-width of the truncated `Ω` domain.
pub fn rate_cutoff(t: f64, eta: Rate) -> f64 {
    let e = eta.get();
    e + TRUNCATION_WIDTHS * (e / t).sqrt()
}

/// Integrates `f` over `[-cut, cut]`, splitting at the origin and at `±peak`.
fn integrate_symmetric_domain<F: Fn(f64) -> f64>(f: F, cut: f64, peak: f64) -> Result<f64> {
    let opts = QuadOptions::default();
    let mut nodes = vec![-cut, 0.0, cut];
    if peak > 0.0 && peak < cut {
        nodes.extend([-peak, peak]);
    }
    nodes.sort_by(f64::total_cmp);
    nodes
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], &opts).map(|r| r.value))
        .sum()
}

fn integrate_positive_half<F: Fn(f64) -> f64>(f: F, cut: f64, peak: f64) -> Result<f64> {
    let opts = QuadOptions::default();
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [peak, cut] {
        if hi > lo && hi <= cut {
            total += integrate(&f, lo, hi, &opts)?.value;
            lo = hi;
        }
    }
    Ok(total)
}

/// Total mass of a density over its truncated support.
///
/// `P_q` and `P_τ` are integrated by pushing forward from `Ω` through
/// `q = tanh(Ωt)` and `τ = (1 + tanh²(Ωt))/2`; the `P_τ` integral folds the
/// two signs of `Ω`. Both endpoint singularities of `P_τ` are thereby removed.
pub fn normalization(which: DensityKind, t: f64, eta: Rate) -> Result<f64> {
    check_time(t)?;
    let e = eta.get();
    let cut = rate_cutoff(t, eta);
    // shared evaluation failures are impossible past check_time
    let ok = |r: Result<f64>| r.unwrap_or(f64::NAN);
    match which {
        DensityKind::Transformed => integrate_symmetric_domain(
            |x| ok(transformed_density(x, t, eta)),
            transformed_cutoff(t, eta),
            e * t,
        ),
        DensityKind::Rate => integrate_symmetric_domain(|w| ok(rate_density(w, t, eta)), cut, e),
        DensityKind::State => integrate_symmetric_domain(
            |w| {
                let big_q = w * t;
                // dq/dΩ = t (1 - q²) = t sech²(Ωt)
                let jac = t * (-2.0 * log_cosh(big_q)).exp();
                ok(state_density_at_transformed(big_q, t, eta)) * jac
            },
            cut,
            e,
        ),
        DensityKind::Purity => integrate_positive_half(
            |w| {
                let big_q = w * t;
                if big_q == 0.0 {
                    return 0.0;
                }
                // dτ/dΩ = t q (1 - q²)
                let jac = t * big_q.tanh() * (-2.0 * log_cosh(big_q)).exp();
                ok(purity_density_at_transformed(big_q, t, eta)) * jac
            },
            cut,
            e,
        ),
    }
}

/// `⟨f(Ωt)⟩` under `P_Ω(·, t)` for an even function `f`.
fn rate_expectation_even<F: Fn(f64) -> f64>(f: F, t: f64, eta: Rate) -> Result<f64> {
    let half = integrate_positive_half(
        |w| rate_density(w, t, eta).unwrap_or(f64::NAN) * f(w * t),
        rate_cutoff(t, eta),
        eta.get(),
    )?;
    Ok(2.0 * half)
}

/// Mean purity `⟨τ⟩ = 1/2 + ½∫ P_Ω(Ω, t) tanh²(Ωt) dΩ`.
pub fn mean_purity(t: f64, eta: Rate) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.5);
    }
    let sq = rate_expectation_even(|x| x.tanh().powi(2), t, eta)?;
    Ok(0.5 + 0.5 * sq)
}

/// `⟨q²⟩ = ∫ q² P_q dq`, integrated in `Q` against `P_Q`.
pub fn state_second_moment(t: f64, eta: Rate) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    integrate_symmetric_domain(
        |x| transformed_density(x, t, eta).unwrap_or(f64::NAN) * x.tanh().powi(2),
        transformed_cutoff(t, eta),
        eta.get() * t,
    )
}

/// `⟨τ²⟩`, needed for the standard error of an empirical mean purity.
pub fn purity_second_moment(t: f64, eta: Rate) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.25);
    }
    rate_expectation_even(|x| (0.5 * (1.0 + x.tanh().powi(2))).powi(2), t, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub omega: f64,
    pub kind: ExtremumKind,
}

/// Stationary points of `S(Ω, t)` in `Ω`, sorted by `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub time: f64,
    pub eta: Rate,
    pub extrema: Vec<Extremum>,
    /// `ηt > 1`: the origin is a maximum flanked by two minima.
    pub threshold_flag: bool,
}

impl ExtremaReport {
    /// Positive nonzero root `Ω*`, if the threshold has been crossed.
    pub fn positive_root(&self) -> Option<f64> {
        self.extrema.iter().map(|e| e.omega).find(|&w| w > 0.0)
    }
}

/// Lower end of the bisection bracket, in units of `η`.
pub const ROOT_BRACKET_FLOOR: f64 = 1e-15;
pub const ROOT_MAX_ITER: usize = 200;

/// Solves `Ω/η = tanh(Ωt)` by bisection on `(εη, η]`.
pub fn extremal_roots(t: f64, eta: Rate) -> Result<ExtremaReport> {
    check_time(t)?;
    let e = eta.get();
    let s = e * t;
    if s <= 1.0 {
        return Ok(ExtremaReport {
            time: t,
            eta,
            extrema: vec![Extremum {
                omega: 0.0,
                kind: ExtremumKind::Min,
            }],
            threshold_flag: false,
        });
    }

    // g(x) = x - tanh(x ηt), x = Ω/η: negative just above 0, non-negative at 1
    let g = |x: f64| x - (x * s).tanh();
    let mut lo = ROOT_BRACKET_FLOOR;
    let mut hi = 1.0;
    if g(lo) < 0.0 {
        for _ in 0..ROOT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        hi = lo;
    }
    let root = if g(lo).abs() < g(hi).abs() { lo } else { hi } * e;

    Ok(ExtremaReport {
        time: t,
        eta,
        extrema: vec![
            Extremum {
                omega: -root,
                kind: ExtremumKind::Min,
            },
            Extremum {
                omega: 0.0,
                kind: ExtremumKind::Max,
            },
            Extremum {
                omega: root,
                kind: ExtremumKind::Min,
            },
        ],
        threshold_flag: true,
    })
}

/// Closed-form Fokker–Planck terms divided by `P_Q(Q, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FokkerPlanckTerms {
    /// `∂ₜP_Q / P_Q`
    pub time_derivative: f64,
    /// `-η ∂_Q[tanh Q P_Q] / P_Q`
    pub drift: f64,
    /// `(η/2) ∂²_Q P_Q / P_Q`
    pub diffusion: f64,
}

impl FokkerPlanckTerms {
    pub fn residual(&self) -> f64 {
        self.time_derivative - (self.drift + self.diffusion)
    }
}

pub fn fokker_planck_terms(big_q: f64, t: f64, eta: Rate) -> Result<FokkerPlanckTerms> {
    check_time(t)?;
    let e = eta.get();
    let q2 = big_q * big_q;
    let qt = big_q * big_q.tanh();
    Ok(FokkerPlanckTerms {
        time_derivative: q2 / (2.0 * e * t * t) - 1.0 / (2.0 * t) - 0.5 * e,
        drift: qt / t - e,
        diffusion: -qt / t + 0.5 * e - 1.0 / (2.0 * t) + q2 / (2.0 * e * t * t),
    })
}

/// `(∂ₜP_Q - drift - diffusion) / P_Q` from the closed-form terms.
pub fn fokker_planck_residual(big_q: f64, t: f64, eta: Rate) -> Result<f64> {
    fokker_planck_terms(big_q, t, eta).map(|f| f.residual())
}
