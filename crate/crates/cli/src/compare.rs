use qubit_purification::integrator::{Backend, Coordinate, EnsembleSnapshot};
use qubit_purification::stats::{compare_snapshot, ComparisonReport};

use crate::args::CompareArgs;
use crate::error::{CliError, Outcome};
use crate::io::{rate, same_value, write_all, SampleFile};

/// Reads `args.samples`, checks its metadata against the flags and compares
/// it with the requested density.
pub fn compare_file(args: &CompareArgs) -> Result<ComparisonReport, CliError> {
    let file = SampleFile::read(&args.samples)?;
    let file_eta = file.number("eta")?;
    let eta = match (args.eta, file_eta) {
        (Some(a), Some(b)) if !same_value(a, b) => {
            return Err(CliError::Config(format!(
                "--eta {a} does not match the file's eta={b}"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(CliError::Config(
                "eta missing from file metadata; pass --eta".into(),
            ))
        }
    };
    let eta = rate(eta)?;

    let flag_t = match (args.t, args.etat) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(s / eta.get()),
        (None, None) => None,
    };
    let t = match (flag_t, file.number("t")?) {
        (Some(a), Some(b)) if !same_value(a, b) => {
            return Err(CliError::Config(format!(
                "requested t={a} does not match the file's t={b}"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(CliError::Config(
                "t missing from file metadata; pass --t".into(),
            ))
        }
    };

    let backend = match file.metadata.get("backend") {
        Some(b) => b.parse::<Backend>()?,
        None => Backend::LangevinState,
    };
    if args.threshold.is_nan() || args.threshold <= 0.0 {
        return Err(CliError::Config(format!(
            "threshold must be positive, got {}",
            args.threshold
        )));
    }
    let snapshot = EnsembleSnapshot {
        time: t,
        step: 0,
        backend,
        coordinate: Coordinate::State,
        values: file.values,
        excursion_count: 0,
    };
    Ok(compare_snapshot(&snapshot, eta, args.which)?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let report = compare_file(args)?;
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_all(args.out.as_deref(), &(json + "\n"))?;
    let pass = report.ks_statistic < args.threshold;
    eprintln!(
        "{}: KS = {:.5} ({} threshold {})",
        args.which,
        report.ks_statistic,
        if pass { "below" } else { "not below" },
        args.threshold
    );
    Ok(if pass {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}
