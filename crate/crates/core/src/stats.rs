//! Empirical-versus-analytic comparison of trajectory ensembles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, transformed_cutoff, DensityKind};
use crate::error::{Error, Result};
use crate::integrator::{Coordinate, EnsembleSnapshot};
use crate::quadrature::{integrate, QuadOptions};
use crate::state::{odd_atanh, Rate};

/// Points in the tabulated analytic CDF.
pub const CDF_TABLE_POINTS: usize = 4096;
pub const STATE_BINS: usize = 101;
pub const PURITY_BINS: usize = 100;

/// Counts over half-open bins `[e_i, e_{i+1})`; the last bin also takes its
/// right edge. Samples outside the edges are counted, never binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `counts / (N · width)`, with `N` including out-of-range samples.
    pub normalized_density: Vec<f64>,
    pub below: u64,
    pub above: u64,
    /// NaN samples.
    pub non_finite: u64,
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidConfig(
            "a histogram needs at least two edges".into(),
        ));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "histogram edges must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + w * i as f64 })
        .collect()
}

/// Default edges for a density: 101 bins on `[-1, 1]` for `q`, 100 bins on
/// `[1/2, 1]` for `τ`, 101 bins over the truncated domain for `Q` and `Ω`.
pub fn default_edges(which: DensityKind, t: f64, eta: Rate) -> Vec<f64> {
    match which {
        DensityKind::State => uniform_edges(-1.0, 1.0, STATE_BINS),
        DensityKind::Purity => uniform_edges(0.5, 1.0, PURITY_BINS),
        _ => {
            let (lo, hi) = if t > 0.0 {
                which.default_range(t, eta)
            } else {
                (-1.0, 1.0)
            };
            uniform_edges(lo, hi, STATE_BINS)
        }
    }
}

pub fn build_histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    check_edges(edges)?;
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let mut h = Histogram {
        edges: edges.to_vec(),
        counts: vec![0; bins],
        normalized_density: Vec::new(),
        below: 0,
        above: 0,
        non_finite: 0,
    };
    for &x in samples {
        if x.is_nan() {
            h.non_finite += 1;
        } else if x < lo {
            h.below += 1;
        } else if x > hi {
            h.above += 1;
        } else {
            // number of edges ≤ x, minus one, gives the half-open bin
            let i = edges
                .partition_point(|&e| e <= x)
                .saturating_sub(1)
                .min(bins - 1);
            h.counts[i] += 1;
        }
    }
    h.refresh_density();
    Ok(h)
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.out_of_range()
    }

    pub fn out_of_range(&self) -> u64 {
        self.below + self.above + self.non_finite
    }

    pub fn in_range_fraction(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            self.counts.iter().sum::<u64>() as f64 / n as f64
        }
    }

    fn refresh_density(&mut self) {
        let n = self.total() as f64;
        self.normalized_density = self
            .counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| {
                if n > 0.0 {
                    c as f64 / (n * (w[1] - w[0]))
                } else {
                    0.0
                }
            })
            .collect();
    }

    /// Combines two histograms over identical edges.
    pub fn merge(&self, other: &Histogram) -> Result<Histogram> {
        if self.edges != other.edges {
            return Err(Error::InvalidConfig(
                "cannot merge histograms with different edges".into(),
            ));
        }
        let mut h = Histogram {
            edges: self.edges.clone(),
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(a, b)| a + b)
                .collect(),
            normalized_density: Vec::new(),
            below: self.below + other.below,
            above: self.above + other.above,
            non_finite: self.non_finite + other.non_finite,
        };
        h.refresh_density();
        Ok(h)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Analytic CDF of one of the exact densities at fixed `(η, t)`.
///
/// The CDF of `Q` is tabulated once on [`CDF_TABLE_POINTS`] nodes spanning
/// the truncated domain and linearly interpolated; the other variables are
/// monotone maps of `Q`, so their CDFs are read off the same table.
#[derive(Debug, Clone)]
pub struct AnalyticCdf {
    which: DensityKind,
    eta: Rate,
    time: f64,
    // None at t = 0, where the distribution is a point mass at Q = 0
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl AnalyticCdf {
    pub fn new(which: DensityKind, t: f64, eta: Rate) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        let table = if t == 0.0 {
            None
        } else {
            Some(tabulate(t, eta)?)
        };
        Ok(AnalyticCdf {
            which,
            eta,
            time: t,
            table,
        })
    }

    pub fn which(&self) -> DensityKind {
        self.which
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn eta(&self) -> Rate {
        self.eta
    }

    /// CDF of `Q` at `x`.
    fn transformed_cdf(&self, x: f64) -> f64 {
        let Some((nodes, cum)) = &self.table else {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        };
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= nodes[0] {
            return 0.0;
        }
        if x >= nodes[nodes.len() - 1] {
            return 1.0;
        }
        let i = nodes.partition_point(|&n| n <= x) - 1;
        let f = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        cum[i] + f * (cum[i + 1] - cum[i])
    }

    /// Inverse of the tabulated `Q` CDF.
    fn transformed_quantile(&self, u: f64) -> f64 {
        let Some((nodes, cum)) = &self.table else {
            return 0.0;
        };
        let u = u.clamp(0.0, 1.0);
        let i = cum.partition_point(|&c| c < u).clamp(1, cum.len() - 1);
        let (c0, c1) = (cum[i - 1], cum[i]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        nodes[i - 1] + f * (nodes[i] - nodes[i - 1])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.which {
            DensityKind::Transformed => self.transformed_cdf(x),
            DensityKind::Rate => self.transformed_cdf(x * self.time),
            DensityKind::State => {
                if x >= 1.0 {
                    1.0
                } else if x <= -1.0 {
                    0.0
                } else {
                    self.transformed_cdf(odd_atanh(x))
                }
            }
            DensityKind::Purity => {
                if x < 0.5 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    let a = (2.0 * x - 1.0).sqrt().atanh();
                    (2.0 * self.transformed_cdf(a) - 1.0).max(0.0)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self.which {
            DensityKind::Transformed => self.transformed_quantile(u),
            DensityKind::Rate => self.transformed_quantile(u) / self.time,
            DensityKind::State => self.transformed_quantile(u).tanh(),
            DensityKind::Purity => {
                // |Q| has CDF 2F(a) - 1
                let a = self.transformed_quantile(0.5 * (1.0 + u)).max(0.0);
                0.5 * (1.0 + a.tanh().powi(2))
            }
        }
    }

    /// Inverse-CDF sampling from the tabulated distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.quantile(rng.random::<f64>())).collect()
    }
}

fn tabulate(t: f64, eta: Rate) -> Result<(Vec<f64>, Vec<f64>)> {
    let cut = transformed_cutoff(t, eta);
    let nodes = uniform_edges(-cut, cut, CDF_TABLE_POINTS - 1);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        ..QuadOptions::default()
    };
    let mut cum = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in nodes.windows(2) {
        acc += integrate(
            |x| analytic::transformed_density(x, t, eta).unwrap_or(f64::NAN),
            w[0],
            w[1],
            &opts,
        )?
        .value;
        cum.push(acc.min(1.0));
    }
    Ok((nodes, cum))
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig(
            "KS distance needs at least one sample".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        // the left limit matters only where the CDF has an atom
        let below = cdf(x.next_down());
        d = d.max((i + 1) as f64 / n - cdf(x)).max(below - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig(
            "KS distance needs non-empty samples".into(),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() {
            a[i]
        } else {
            b[j]
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample KS critical value `√(-ln(α/2)/2) / √n`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// `Σ |empirical bin mass - analytic bin mass|`, including the mass outside
/// the edges, so the result lies in `[0, 2]`.
pub fn l1_distance(hist: &Histogram, cdf: &AnalyticCdf) -> f64 {
    let n = hist.total();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let f: Vec<f64> = hist.edges.iter().map(|&e| cdf.cdf(e)).collect();
    let inside: f64 = hist
        .counts
        .iter()
        .zip(f.windows(2))
        .map(|(&c, w)| (c as f64 / n - (w[1] - w[0])).abs())
        .sum();
    let below = (hist.below as f64 / n - f[0]).abs();
    let above = ((hist.above + hist.non_finite) as f64 / n - (1.0 - f[f.len() - 1])).abs();
    inside + below + above
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub name: String,
    pub empirical: f64,
    pub analytic: f64,
    pub stderr: f64,
}

impl MomentRow {
    /// `|empirical - analytic| ≤ k · stderr`.
    pub fn within(&self, k: f64) -> bool {
        (self.empirical - self.analytic).abs() <= k * self.stderr
    }

    pub fn z_score(&self) -> f64 {
        let diff = self.empirical - self.analytic;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub time: f64,
    pub eta: Rate,
    pub backend: String,
    pub which: DensityKind,
    pub ks_statistic: f64,
    pub l1_distance: f64,
    pub n_samples: usize,
    /// Samples outside the histogram edges (or non-finite).
    pub out_of_range: u64,
    pub moment_table: Vec<MomentRow>,
}

impl ComparisonReport {
    pub fn moment(&self, name: &str) -> Option<&MomentRow> {
        self.moment_table.iter().find(|m| m.name == name)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Moments of `q` and `τ` with standard errors next to their analytic values.
pub fn moment_table(q_values: &[f64], t: f64, eta: Rate) -> Result<Vec<MomentRow>> {
    if q_values.is_empty() {
        return Err(Error::InvalidConfig("empty snapshot".into()));
    }
    let n = q_values.len() as f64;
    let (mean_q, se_q) = mean_and_stderr(q_values);
    let taus: Vec<f64> = q_values.iter().map(|q| 0.5 * (1.0 + q * q)).collect();
    let (mean_tau, se_tau) = mean_and_stderr(&taus);

    let m2 = q_values.iter().map(|q| (q - mean_q).powi(2)).sum::<f64>() / n;
    let m4 = q_values.iter().map(|q| (q - mean_q).powi(4)).sum::<f64>() / n;
    let var_q = if n > 1.0 { m2 * n / (n - 1.0) } else { 0.0 };
    let se_var = ((m4 - m2 * m2).max(0.0) / n).sqrt();

    Ok(vec![
        MomentRow {
            name: "mean_q".into(),
            empirical: mean_q,
            analytic: 0.0,
            stderr: se_q,
        },
        MomentRow {
            name: "mean_tau".into(),
            empirical: mean_tau,
            analytic: analytic::mean_purity(t, eta)?,
            stderr: se_tau,
        },
        MomentRow {
            name: "var_q".into(),
            empirical: var_q,
            analytic: analytic::state_second_moment(t, eta)?,
            stderr: se_var,
        },
    ])
}

/// Snapshot values expressed in the variable of `which`.
pub fn values_for(snapshot: &EnsembleSnapshot, which: DensityKind) -> Vec<f64> {
    let q = || snapshot.state_values();
    let big_q = || match snapshot.coordinate {
        Coordinate::Transformed => snapshot.values.clone(),
        Coordinate::State => snapshot.values.iter().map(|&x| odd_atanh(x)).collect(),
    };
    match which {
        DensityKind::State => q(),
        DensityKind::Purity => q().iter().map(|x| 0.5 * (1.0 + x * x)).collect(),
        DensityKind::Transformed => big_q(),
        DensityKind::Rate => big_q().iter().map(|x| x / snapshot.time).collect(),
    }
}

/// KS and L1 distances of a snapshot against the density `which`, plus the
/// moment table.
pub fn compare_snapshot(
    snapshot: &EnsembleSnapshot,
    eta: Rate,
    which: DensityKind,
) -> Result<ComparisonReport> {
    if snapshot.is_empty() {
        return Err(Error::InvalidConfig("empty snapshot".into()));
    }
    let t = snapshot.time;
    let cdf = AnalyticCdf::new(which, t, eta)?;
    let xs = values_for(snapshot, which);
    let ks = ks_distance(&xs, |x| cdf.cdf(x))?;
    let hist = build_histogram(&xs, &default_edges(which, t, eta))?;
    Ok(ComparisonReport {
        time: t,
        eta,
        backend: snapshot.backend.name().to_string(),
        which,
        ks_statistic: ks,
        l1_distance: l1_distance(&hist, &cdf),
        n_samples: snapshot.len(),
        out_of_range: hist.out_of_range(),
        moment_table: moment_table(&snapshot.state_values(), t, eta)?,
    })
}

/// [`compare_snapshot`] against the density of `q`.
pub fn moment_report(snapshot: &EnsembleSnapshot, eta: Rate) -> Result<ComparisonReport> {
    compare_snapshot(snapshot, eta, DensityKind::State)
}
