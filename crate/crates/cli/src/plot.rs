//! Tidy long-format plot data from finished run directories: one
//! observation per row, labeled columns, consumable by any plotting tool.

use mckv_core::csv_io;
use mckv_core::diagnostics::holder_fit_from_snapshots;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::manifest::{load_and_verify, Manifest};
use crate::pipelines::CliError;

pub const KINDS: [&str; 4] = [
    "density-evolution",
    "holder-fit",
    "convergence",
    "stability-ratio",
];

pub fn emit_plot_data(run_dir: &Path, kind: &str) -> Result<Vec<PathBuf>, CliError> {
    let manifest = load_and_verify(run_dir)?;
    match kind {
        "density-evolution" => density_evolution(run_dir, &manifest),
        "holder-fit" => holder_fit(run_dir, &manifest),
        "convergence" => convergence(run_dir, &manifest),
        "stability-ratio" => stability_ratio(run_dir, &manifest),
        other => Err(CliError::Validation(format!(
            "unknown plot kind {other:?}; expected one of {KINDS:?}"
        ))),
    }
}

fn require_command(manifest: &Manifest, expected: &str) -> Result<(), CliError> {
    if manifest.command != expected {
        return Err(CliError::Validation(format!(
            "plot kind needs a {expected:?} run, found {:?}",
            manifest.command
        )));
    }
    Ok(())
}

fn density_evolution(run_dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>, CliError> {
    require_command(manifest, "fp-solve")?;
    let mut rows = String::from("t,x,density\n");
    let mut found = 0usize;
    for entry in &manifest.files {
        let Some(stamp) = entry
            .path
            .strip_prefix("density_t")
            .and_then(|s| s.strip_suffix(".csv"))
        else {
            continue;
        };
        let t: f64 = stamp
            .parse()
            .map_err(|e| CliError::Validation(format!("bad density file name: {e}")))?;
        let text = std::fs::read_to_string(run_dir.join(&entry.path))
            .map_err(|e| CliError::Validation(format!("missing upstream artifact: {e}")))?;
        let grid = csv_io::grid_from_csv(&text)?;
        let centers = grid.centers_1d();
        for (i, v) in grid.values().iter().enumerate() {
            let _ = writeln!(rows, "{t},{},{v}", centers[i]);
        }
        found += 1;
    }
    if found == 0 {
        return Err(CliError::Validation(
            "no density snapshots in this run directory".into(),
        ));
    }
    write_plot(run_dir, "plot_density_evolution.csv", &rows)
}

fn holder_fit(run_dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>, CliError> {
    require_command(manifest, "simulate")?;
    let text = std::fs::read_to_string(run_dir.join("snapshots.csv"))
        .map_err(|e| CliError::Validation(format!("missing upstream artifact: {e}")))?;
    let snaps = csv_io::snapshots_from_csv(&text)?;
    let sim = manifest
        .config
        .sim
        .as_ref()
        .ok_or_else(|| CliError::Validation("manifest lacks [sim]".into()))?;
    let report = holder_fit_from_snapshots(&snaps, sim.t_horizon, sim.p, "plot-data rebuild")?;
    let mut rows = match report.exponent_fit {
        Some(slope) => format!(
            "# slope={slope}; intercept={}; pass={}\n",
            report.fitted_constant.ln(),
            report.pass
        ),
        None => String::from("# degenerate fit\n"),
    };
    rows.push_str("log_gap,log_wp\n");
    for (g, w) in &report.series {
        let _ = writeln!(rows, "{g},{w}");
    }
    let json_path = run_dir.join("holder_fit_report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serialize fit report: {e}")))?;
    std::fs::write(&json_path, json)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", json_path.display())))?;
    let mut files = write_plot(run_dir, "plot_holder_fit.csv", &rows)?;
    files.push(json_path);
    Ok(files)
}

fn convergence(run_dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>, CliError> {
    require_command(manifest, "converge")?;
    let text = std::fs::read_to_string(run_dir.join("convergence_report.json"))
        .map_err(|e| CliError::Validation(format!("missing upstream artifact: {e}")))?;
    let report: mckv_core::stability::ConvergenceReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad convergence report: {e}")))?;
    let mut rows = String::from("n_pair,sup_wp,mc_noise_floor\n");
    for (pair, d) in report.n_values.windows(2).zip(&report.cauchy_distances) {
        let _ = writeln!(
            rows,
            "{}->{},{d},{}",
            pair[0], pair[1], report.mc_noise_floor
        );
    }
    write_plot(run_dir, "plot_convergence.csv", &rows)
}

fn stability_ratio(run_dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>, CliError> {
    require_command(manifest, "stability")?;
    let text = std::fs::read_to_string(run_dir.join("stability_report.json"))
        .map_err(|e| CliError::Validation(format!("missing upstream artifact: {e}")))?;
    let report: mckv_core::stability::StabilityReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad stability report: {e}")))?;
    let mut rows = format!(
        "# lambda_bound={}; initial_wtv={}\n",
        report.lambda_bound, report.initial_wtv
    );
    rows.push_str("t,route,wtv\n");
    for p in &report.series {
        let _ = writeln!(rows, "{},fp,{}", p.t, p.wtv_fp);
        let _ = writeln!(rows, "{},particle,{}", p.t, p.wtv_particle);
    }
    write_plot(run_dir, "plot_stability_ratio.csv", &rows)
}

fn write_plot(run_dir: &Path, name: &str, rows: &str) -> Result<Vec<PathBuf>, CliError> {
    let path = run_dir.join(name);
    std::fs::write(&path, rows)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(vec![path])
}
