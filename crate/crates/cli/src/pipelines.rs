//! Command pipelines: validate, execute, persist, manifest.

use mckv_core::coefficients::{check_assumptions, scenario_with, TupleSampler};
use mckv_core::csv_io;
use mckv_core::fokker_planck::{solve_nonlinear_fp_with, FpOptions};
use mckv_core::particle::simulate;
use mckv_core::stability::{
    mollifier_convergence_study, stability_experiment, VERDICT_INCONCLUSIVE,
};
use mckv_core::transport::oracle_selftest;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::config::ExperimentConfig;
use crate::manifest::RunWriter;

/// CLI-level error with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// exit 1: config or input validation
    Validation(String),
    /// exit 2: runtime abort (non-finite state, solver failure, io)
    Runtime(String),
    /// exit 3: study completed but the signal is noise-dominated
    Inconclusive(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Inconclusive(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
            CliError::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::Inconclusive(m) => m,
        }
    }

    pub fn to_error_json(&self) -> String {
        serde_json::json!({
            "error": {
                "code": self.exit_code(),
                "kind": self.kind(),
                "message": self.message(),
            }
        })
        .to_string()
    }
}

impl From<mckv_core::Error> for CliError {
    fn from(e: mckv_core::Error) -> Self {
        use mckv_core::Error as E;
        match e {
            E::NonFiniteState { .. }
            | E::NonFiniteCoefficient { .. }
            | E::NegativeDensity { .. }
            | E::LpStalled { .. }
            | E::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub summary: String,
}

/// Resolve the output directory: flag > `MCKV_OUTPUT_DIR` > config.
fn resolve_output_dir(config: &ExperimentConfig, flag: Option<&Path>) -> std::path::PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Ok(dir) = std::env::var("MCKV_OUTPUT_DIR") {
        if !dir.is_empty() {
            return dir.into();
        }
    }
    config.output.dir.clone()
}

pub fn run(command: &str, config_path: &Path, output_flag: Option<&Path>) -> Result<Outcome, CliError> {
    let config = ExperimentConfig::load(config_path)?;
    if config.command != command {
        return Err(CliError::Validation(format!(
            "config declares command {:?} but {:?} was invoked",
            config.command, command
        )));
    }
    let out_dir = resolve_output_dir(&config, output_flag);
    let started = Instant::now();
    let result = dispatch(command, &config, &out_dir, started);
    if let Err(e) = &result {
        // best-effort machine-readable error artifact
        let _ = std::fs::create_dir_all(&out_dir);
        let _ = std::fs::write(out_dir.join("error.json"), e.to_error_json());
    }
    result
}

fn dispatch(
    command: &str,
    config: &ExperimentConfig,
    out_dir: &Path,
    started: Instant,
) -> Result<Outcome, CliError> {
    let mut writer = RunWriter::new(out_dir)?;
    let wants_csv = config.output.formats.iter().any(|f| f == "csv");
    let summary = match command {
        "simulate" => run_simulate(config, &mut writer, wants_csv)?,
        "fp-solve" => run_fp_solve(config, &mut writer, wants_csv)?,
        "converge" => run_converge(config, &mut writer, wants_csv)?,
        "stability" => run_stability(config, &mut writer, wants_csv)?,
        "check-assumptions" => run_check(config, &mut writer)?,
        "transport-selftest" => run_selftest(config, &mut writer)?,
        other => return Err(CliError::Validation(format!("unknown command {other:?}"))),
    };
    let manifest = writer.finalize(command, config, started.elapsed().as_millis())?;
    // converge reports a noise-dominated study through the exit code after
    // all artifacts (including the manifest) are on disk
    if command == "converge" && summary.contains(VERDICT_INCONCLUSIVE) {
        return Err(CliError::Inconclusive(summary));
    }
    Ok(Outcome {
        summary: format!("{summary}; manifest {}", manifest.manifest_hash),
    })
}

fn sim_section(config: &ExperimentConfig) -> Result<&mckv_core::particle::SimConfig, CliError> {
    config
        .sim
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [sim] section".into()))
}

fn run_simulate(
    config: &ExperimentConfig,
    writer: &mut RunWriter,
    wants_csv: bool,
) -> Result<String, CliError> {
    let cs = scenario_with(&config.scenario)?;
    let l_nu = config.initial_density()?;
    let sim = sim_section(config)?;
    let smoke = check_assumptions(&cs, &TupleSampler::seeded(sim.seed), 200)?;
    writer.write_json("assumption_report.json", &smoke)?;
    if !smoke.all_pass && !config.allow_failed_assumptions {
        return Err(CliError::Validation(format!(
            "scenario {:?} fails its declared conditions; set allow_failed_assumptions \
             to run anyway",
            cs.name
        )));
    }
    let store = simulate(sim, &cs, &l_nu)?;
    if wants_csv {
        writer.write("snapshots.csv", csv_io::snapshots_to_csv(&store).as_bytes())?;
    }
    writer.write_json("run_metadata.json", store.metadata())?;
    Ok(format!(
        "simulate: {} particles, {} snapshots, store {}",
        sim.n_particles,
        store.snapshots().len(),
        store.content_hash()
    ))
}

fn run_fp_solve(
    config: &ExperimentConfig,
    writer: &mut RunWriter,
    wants_csv: bool,
) -> Result<String, CliError> {
    let cs = scenario_with(&config.scenario)?;
    let l_nu = config.initial_density()?;
    let fp = config
        .fp
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [fp] section".into()))?;
    let opts = FpOptions {
        store_stride: fp.store_stride,
        max_sweeps: fp.max_sweeps,
        ..Default::default()
    };
    let sol = solve_nonlinear_fp_with(&cs, &l_nu, fp.t_horizon, fp.dt, &opts)?;
    let times: Vec<f64> = sol.states.iter().map(|s| s.time).collect();
    if wants_csv {
        for state in &sol.states {
            let name = format!("density_t{:.6}.csv", state.time);
            writer.write(&name, csv_io::grid_to_csv(&state.density).as_bytes())?;
        }
    }
    writer.write_json(
        "fp_summary.json",
        &serde_json::json!({
            "times": times,
            "max_mass_error": sol.max_mass_error,
            "cells": l_nu.len(),
            "dt": fp.dt,
        }),
    )?;
    Ok(format!(
        "fp-solve: {} stored states, mass error {:.3e}",
        sol.states.len(),
        sol.max_mass_error
    ))
}

fn run_converge(
    config: &ExperimentConfig,
    writer: &mut RunWriter,
    wants_csv: bool,
) -> Result<String, CliError> {
    let cs = scenario_with(&config.scenario)?;
    let l_nu = config.initial_density()?;
    let sim = sim_section(config)?;
    let study = config
        .study
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [study] section".into()))?;
    if study.n_list.len() < 3 {
        return Err(CliError::Validation(
            "study.n_list needs at least three indices".into(),
        ));
    }
    let report = mollifier_convergence_study(&cs, &l_nu, sim, &study.n_list)?;
    writer.write_json("convergence_report.json", &report)?;
    if wants_csv {
        let mut csv = String::from("n_low,n_high,sup_wp,mc_noise_floor\n");
        for (pair, d) in report.n_values.windows(2).zip(&report.cauchy_distances) {
            let _ = writeln!(csv, "{},{},{},{}", pair[0], pair[1], d, report.mc_noise_floor);
        }
        writer.write("convergence_series.csv", csv.as_bytes())?;
    }
    Ok(format!(
        "converge: n = {:?}, distances = {:?}, noise = {:.3e}, verdict = {}",
        report.n_values, report.cauchy_distances, report.mc_noise_floor, report.verdict
    ))
}

fn run_stability(
    config: &ExperimentConfig,
    writer: &mut RunWriter,
    wants_csv: bool,
) -> Result<String, CliError> {
    let cs = scenario_with(&config.scenario)?;
    let sim = sim_section(config)?;
    let study = config
        .study
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [study] section".into()))?;
    let translate = study.translate.unwrap_or(0.1);
    let fp_dt = study
        .fp_dt
        .ok_or_else(|| CliError::Validation("study.fp_dt is required for stability".into()))?;
    let l_nu1 = config.initial_density()?;
    let l_nu2 = config
        .initial
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [initial] section".into()))?
        .build_translated(translate)
        .map_err(CliError::Validation)?;
    let report = stability_experiment(&cs, &l_nu1, &l_nu2, sim, fp_dt)?;
    writer.write_json("stability_report.json", &report)?;
    if wants_csv {
        let mut csv = String::from("t,wtv_fp,wtv_particle\n");
        for p in &report.series {
            let _ = writeln!(csv, "{},{},{}", p.t, p.wtv_fp, p.wtv_particle);
        }
        writer.write("stability_series.csv", csv.as_bytes())?;
    }
    Ok(format!(
        "stability: initial wtv {:.4}, sup wtv {:.4} (fp) / {:.4} (particle), bound {:.2}",
        report.initial_wtv, report.sup_wtv_fp, report.sup_wtv_particle, report.lambda_bound
    ))
}

fn run_check(config: &ExperimentConfig, writer: &mut RunWriter) -> Result<String, CliError> {
    let cs = scenario_with(&config.scenario)?;
    let check = config
        .check
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing [check] section".into()))?;
    if check.samples == 0 {
        return Err(CliError::Validation("check.samples must be >= 1".into()));
    }
    let report = check_assumptions(&cs, &TupleSampler::seeded(check.seed), check.samples)?;
    writer.write_json("assumption_report.json", &report)?;
    Ok(format!(
        "check-assumptions: {} over {} samples: {}",
        cs.name,
        check.samples,
        if report.all_pass { "pass" } else { "FAIL" }
    ))
}

fn run_selftest(config: &ExperimentConfig, writer: &mut RunWriter) -> Result<String, CliError> {
    let seed = config.check.as_ref().map(|c| c.seed).unwrap_or(0);
    let pairs = config.check.as_ref().map(|c| c.samples).unwrap_or(200);
    let report = oracle_selftest(seed, pairs)?;
    writer.write_json("transport_selftest.json", &report)?;
    if !report.pass {
        return Err(CliError::Runtime(format!(
            "transport selftest failed: {report:?}"
        )));
    }
    Ok(format!(
        "transport-selftest: {} pairs, max route gap {:.2e}",
        report.pairs, report.max_quantile_lp_gap
    ))
}
