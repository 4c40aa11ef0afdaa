//! Subcommand implementations. Every output file is written to a temporary
//! name in its final directory and renamed into place, so a failed run
//! leaves no partial files behind.

use std::fs;
use std::path::{Path, PathBuf};

use rovctl_core::sim::{run_scenario, Metrics, SimRecord};

use crate::config::{dump, resolve, Resolved};
use crate::error::CliError;

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let target = dir.join(name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, &target)?;
    Ok(target)
}

fn render_csv(record: &SimRecord) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    record.write_csv(&mut buf)?;
    Ok(buf)
}

fn metrics_report(record: &SimRecord) -> String {
    let m = &record.metrics;
    format!(
        "rows = {}\nrms_error = {}\nmax_abs_error = {}\nvelocity_overshoot = {}\n\
         limit_cycle_amplitude = {}\nann_faults = {}\n",
        record.rows.len(),
        m.rms_error,
        m.max_abs_error,
        m.velocity_overshoot,
        m.limit_cycle_amplitude,
        record.ann_faults
    )
}

fn write_run_outputs(record: &SimRecord, out_dir: &Path) -> Result<(), CliError> {
    write_atomic(out_dir, "trace.csv", &render_csv(record)?)?;
    write_atomic(out_dir, "metrics.txt", metrics_report(record).as_bytes())?;
    if record.ann_weights.is_some() {
        let mut buf = Vec::new();
        record.write_weights_csv(&mut buf)?;
        write_atomic(out_dir, "weights.csv", &buf)?;
    }
    Ok(())
}

/// `run`: one scenario, `trace.csv` + `metrics.txt` (+ `weights.csv` when
/// the compensator is active).
pub fn run(resolved: &Resolved, out_dir: &Path) -> Result<(), CliError> {
    let record = run_scenario(&resolved.config)?;
    write_run_outputs(&record, out_dir)?;
    print!("{}", metrics_report(&record));
    println!("wrote {}", out_dir.join("trace.csv").display());
    Ok(())
}

fn ratio_label(on: f64, off: f64) -> String {
    if off == 0.0 {
        "n/a".to_string()
    } else {
        format!("{:.6}", on / off)
    }
}

fn comparison_report(on: &Metrics, off: &Metrics) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<22} {:>14} {:>14} {:>14}\n",
        "metric", "ann_on", "ann_off", "ratio_on_off"
    ));
    for (name, a, b) in [
        ("rms_error", on.rms_error, off.rms_error),
        ("max_abs_error", on.max_abs_error, off.max_abs_error),
        (
            "velocity_overshoot",
            on.velocity_overshoot,
            off.velocity_overshoot,
        ),
        (
            "limit_cycle_amplitude",
            on.limit_cycle_amplitude,
            off.limit_cycle_amplitude,
        ),
    ] {
        out.push_str(&format!(
            "{:<22} {:>14.6} {:>14.6} {:>14}\n",
            name,
            a,
            b,
            ratio_label(a, b)
        ));
    }
    out
}

/// `compare`: the same scenario with and without compensation (same seeds),
/// both traces plus a side-by-side metric table with on/off ratios.
pub fn compare(resolved: &Resolved, out_dir: &Path) -> Result<(), CliError> {
    let cfg_on = resolved.with_ann();
    let cfg_off = resolved.without_ann();
    let (on, off) = std::thread::scope(|scope| {
        let on = scope.spawn(|| run_scenario(&cfg_on));
        let off = scope.spawn(|| run_scenario(&cfg_off));
        (on.join(), off.join())
    });
    let on = on.map_err(|_| CliError::Io("compensated run panicked".into()))??;
    let off = off.map_err(|_| CliError::Io("uncompensated run panicked".into()))??;

    write_atomic(out_dir, "trace_ann_on.csv", &render_csv(&on)?)?;
    write_atomic(out_dir, "trace_ann_off.csv", &render_csv(&off)?)?;
    let report = comparison_report(&on.metrics, &off.metrics);
    write_atomic(out_dir, "comparison.txt", report.as_bytes())?;
    print!("{report}");
    println!("wrote {}", out_dir.join("comparison.txt").display());
    Ok(())
}

/// `sweep`: re-resolve and run the scenario once per value of one key,
/// members in parallel, one run directory per value plus a summary table.
pub fn sweep(
    file_entries: &[(String, String)],
    overrides: &[(String, String)],
    seed_flag: Option<u64>,
    no_ann: bool,
    key: &str,
    values: &[String],
    out_dir: &Path,
) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep: no values given".into()));
    }
    // resolve all members first so a bad value fails before anything runs
    let mut members = Vec::new();
    for value in values {
        let mut with_value = overrides.to_vec();
        with_value.push((key.to_string(), value.clone()));
        let resolved = resolve(file_entries, &with_value, seed_flag, no_ann)
            .map_err(|err| CliError::Config(format!("{key} = {value}: {err}")))?;
        members.push((value.clone(), resolved));
    }

    let results: Vec<Result<SimRecord, rovctl_core::Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = members
            .iter()
            .map(|(_, resolved)| scope.spawn(|| run_scenario(&resolved.config)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(rovctl_core::Error::InvalidConfig(
                        "sweep member panicked".into(),
                    ))
                })
            })
            .collect()
    });

    let mut table = format!(
        "{:<20} {:>14} {:>14} {:>18} {:>21}\n",
        key, "rms_error", "max_abs_error", "velocity_overshoot", "limit_cycle_amplitude"
    );
    for (i, ((value, _), result)) in members.iter().zip(results).enumerate() {
        let record = result?;
        let dir = out_dir.join(format!("run_{i}"));
        write_run_outputs(&record, &dir)?;
        let m = &record.metrics;
        table.push_str(&format!(
            "{:<20} {:>14.6} {:>14.6} {:>18.6} {:>21.6}\n",
            value, m.rms_error, m.max_abs_error, m.velocity_overshoot, m.limit_cycle_amplitude
        ));
    }
    write_atomic(out_dir, "sweep.txt", table.as_bytes())?;
    print!("{table}");
    println!("wrote {}", out_dir.join("sweep.txt").display());
    Ok(())
}

/// `validate`: echo the fully resolved configuration without running.
pub fn validate(resolved: &Resolved) -> Result<(), CliError> {
    print!("{}", dump(resolved));
    Ok(())
}
