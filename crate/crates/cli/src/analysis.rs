use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qubit_purification::analytic::{
    extremal_roots, fokker_planck_residual, mean_purity, DensityCurve, ExtremaReport, ExtremumKind,
};
use qubit_purification::stats::mean_and_stderr;
use qubit_purification::Rate;
use serde::{Deserialize, Serialize};

use crate::args::{DensityArgs, FpCheckArgs, MeanPurityArgs, RootsArgs};
use crate::error::{CliError, Outcome};
use crate::io::{cell, parse_grid, rate, same_value, write_all, SampleFile};

/// Largest accepted Fokker-Planck residual.
pub const FP_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_GRID_POINTS: usize = 601;

pub fn density_curve(args: &DensityArgs) -> Result<DensityCurve, CliError> {
    let eta = rate(args.eta)?;
    let t = args.time.resolve(eta);
    if !(t.is_finite() && t > 0.0) {
        return Err(CliError::Config(format!(
            "time must be positive, got t = {t}"
        )));
    }
    let xs = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => {
            let (lo, hi) = args.which.default_range(t, eta);
            parse_grid(&format!("{lo}:{hi}:{DEFAULT_GRID_POINTS}"))?
        }
    };
    if let Some(x) = xs.iter().find(|&&x| !args.which.contains(x)) {
        let (lo, hi) = args.which.domain();
        return Err(CliError::Config(format!(
            "grid point {x} lies outside the domain ({lo}, {hi}) of {}",
            args.which
        )));
    }
    Ok(DensityCurve::sample(args.which, eta, t, &xs)?)
}

pub fn cmd_density(args: &DensityArgs) -> Result<Outcome, CliError> {
    let curve = density_curve(args)?;
    let eta = curve.eta.get();
    let mut text = String::new();
    let _ = writeln!(text, "# which={}", curve.which);
    let _ = writeln!(text, "# eta={eta}");
    let _ = writeln!(text, "# t={}", curve.time);
    let _ = writeln!(text, "# eta_t={}", eta * curve.time);
    text.push_str("x,density\n");
    for (x, p) in &curve.points {
        let _ = writeln!(text, "{x},{p}");
    }
    write_all(args.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpReport {
    pub eta: f64,
    pub q_points: usize,
    pub t_points: usize,
    /// Largest `|∂ₜP - drift - diffusion| / P` on the grid.
    pub max_relative_residual: f64,
    pub worst_q: f64,
    pub worst_t: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn fp_check(eta: Rate, qs: &[f64], ts: &[f64]) -> Result<FpReport, CliError> {
    if let Some(t) = ts.iter().find(|&&t| t.is_nan() || t <= 0.0) {
        return Err(CliError::Config(format!(
            "t-grid must be positive, found {t}"
        )));
    }
    let mut worst = (0.0, qs[0], ts[0]);
    for &t in ts {
        for &q in qs {
            let r = fokker_planck_residual(q, t, eta)?.abs();
            if r > worst.0 || r.is_nan() {
                worst = (r, q, t);
            }
        }
    }
    Ok(FpReport {
        eta: eta.get(),
        q_points: qs.len(),
        t_points: ts.len(),
        max_relative_residual: worst.0,
        worst_q: worst.1,
        worst_t: worst.2,
        tolerance: FP_TOLERANCE,
        pass: worst.0 < FP_TOLERANCE,
    })
}

pub fn cmd_fp_check(args: &FpCheckArgs) -> Result<Outcome, CliError> {
    let report = fp_check(
        rate(args.eta)?,
        &parse_grid(&args.q_grid)?,
        &parse_grid(&args.t_grid)?,
    )?;
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_all(args.out.as_deref(), &(json + "\n"))?;
    Ok(if report.pass {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}

pub const ROOTS_HEADER: &str =
    "eta_t,inv_eta_t,n_extrema,omega_minus,omega_zero,omega_plus,zero_kind,above_threshold";

pub fn roots_row(r: &ExtremaReport) -> String {
    let s = r.eta.get() * r.time;
    let zero = r.extrema.iter().find(|e| e.omega == 0.0);
    let kind = match zero.map(|e| e.kind) {
        Some(ExtremumKind::Min) => "min",
        Some(ExtremumKind::Max) => "max",
        None => "",
    };
    let plus = r.positive_root();
    format!(
        "{s},{},{},{},0,{},{kind},{}",
        1.0 / s,
        r.extrema.len(),
        cell(plus.map(|w| -w)),
        cell(plus),
        r.threshold_flag
    )
}

pub fn cmd_roots(args: &RootsArgs) -> Result<Outcome, CliError> {
    let eta = rate(args.eta)?;
    let mut text = format!("# eta={}\n{ROOTS_HEADER}\n", eta.get());
    for t in args.times.resolve(eta)? {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!(
                "times must be positive, got t = {t}"
            )));
        }
        text.push_str(&roots_row(&extremal_roots(t, eta)?));
        text.push('\n');
    }
    write_all(args.out.as_deref(), &text)?;
    Ok(Outcome::Pass)
}

/// Monte Carlo mean purity from one sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct McPurity {
    pub time: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Reads every `.csv` sample file in `dir`, in name order.
pub fn read_samples_dir(dir: &Path, eta: Rate) -> Result<Vec<McPurity>, CliError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CliError::read(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::read(dir, "no .csv sample files"));
    }
    paths
        .iter()
        .map(|p| {
            let f = SampleFile::read(p)?;
            if let Some(e) = f.number("eta")? {
                if !same_value(e, eta.get()) {
                    return Err(CliError::Config(format!(
                        "{} has eta={e}, expected {}",
                        p.display(),
                        eta.get()
                    )));
                }
            }
            let time = f
                .number("t")?
                .ok_or_else(|| CliError::read(p, "metadata has no t"))?;
            let taus: Vec<f64> = f.values.iter().map(|q| 0.5 * (1.0 + q * q)).collect();
            let (mean, stderr) = mean_and_stderr(&taus);
            Ok(McPurity {
                time,
                mean,
                stderr,
                n: taus.len(),
            })
        })
        .collect()
}

pub fn mean_purity_table(
    eta: Rate,
    times: &[f64],
    mc: Option<&[McPurity]>,
) -> Result<String, CliError> {
    let mut text = format!("# eta={}\neta_t,t,mean_purity", eta.get());
    if mc.is_some() {
        text.push_str(",mc_mean_tau,mc_stderr,n_samples,z_score");
    }
    text.push('\n');
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Config(format!(
                "times must be non-negative, got t = {t}"
            )));
        }
        let tau = mean_purity(t, eta)?;
        let _ = write!(text, "{},{t},{tau}", eta.get() * t);
        if let Some(mc) = mc {
            match mc.iter().find(|m| same_value(m.time, t)) {
                Some(m) => {
                    let z = if m.mean == tau {
                        0.0
                    } else {
                        (m.mean - tau) / m.stderr
                    };
                    let _ = write!(text, ",{},{},{},{z}", m.mean, m.stderr, m.n);
                }
                None => text.push_str(",,,,"),
            }
        }
        text.push('\n');
    }
    Ok(text)
}

pub fn cmd_mean_purity(args: &MeanPurityArgs) -> Result<Outcome, CliError> {
    let eta = rate(args.eta)?;
    let mc = args
        .samples_dir
        .as_deref()
        .map(|d| read_samples_dir(d, eta))
        .transpose()?;
    let times = match (&mc, args.times.is_empty()) {
        (Some(mc), true) => {
            let mut ts: Vec<f64> = mc.iter().map(|m| m.time).collect();
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts
        }
        _ => args.times.resolve(eta)?,
    };
    write_all(
        args.out.as_deref(),
        &mean_purity_table(eta, &times, mc.as_deref())?,
    )?;
    Ok(Outcome::Pass)
}
