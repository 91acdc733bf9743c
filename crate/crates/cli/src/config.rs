//! Experiment configuration: a single TOML file with sections, schema
//! validated with explicit positions on parse errors. All randomness flows
//! from the one seed in `[sim]`; the only environment override is
//! `MCKV_OUTPUT_DIR` for the output directory.

use mckv_core::coefficients::ScenarioSpec;
use mckv_core::grid::GridDensity;
use mckv_core::particle::SimConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::pipelines::CliError;

pub const COMMANDS: [&str; 6] = [
    "simulate",
    "fp-solve",
    "converge",
    "stability",
    "check-assumptions",
    "transport-selftest",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// one of the six commands; must match the invoked subcommand
    pub command: String,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub fp: Option<FpSection>,
    #[serde(default)]
    pub study: Option<StudySection>,
    #[serde(default)]
    pub check: Option<CheckSection>,
    /// accept scenarios that fail the sampled assumption smoke check
    /// (degenerate diffusion demos)
    #[serde(default)]
    pub allow_failed_assumptions: bool,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSection {
    /// `gaussian` (mean/std) or `uniform` (a/b)
    pub kind: String,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub std: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    pub grid: GridSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSection {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpSection {
    pub t_horizon: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub store_stride: usize,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

fn default_stride() -> usize {
    1
}

fn default_sweeps() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySection {
    /// mollifier indices for `converge`
    #[serde(default)]
    pub n_list: Vec<u32>,
    /// initial-law translation for `stability`
    #[serde(default)]
    pub translate: Option<f64>,
    /// solver step for the deterministic route of `stability`
    #[serde(default)]
    pub fp_dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSection {
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(CliError::Validation(format!(
                "unknown command {:?}; expected one of {:?}",
                self.command, COMMANDS
            )));
        }
        // the scenario must resolve
        mckv_core::coefficients::scenario_with(&self.scenario)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        for fmt in &self.output.formats {
            if fmt != "csv" && fmt != "json" {
                return Err(CliError::Validation(format!("unknown format {fmt:?}")));
            }
        }
        if let Some(init) = &self.initial {
            init.build().map_err(CliError::Validation)?;
        }
        if let Some(fp) = &self.fp {
            if !(fp.dt > 0.0) || !(fp.t_horizon > 0.0) {
                return Err(CliError::Validation(
                    "fp.dt and fp.t_horizon must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn initial_density(&self) -> Result<GridDensity, CliError> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| CliError::Validation("missing [initial] section".into()))?;
        init.build().map_err(CliError::Validation)
    }
}

impl InitialSection {
    /// The same density translated by `shift` (same grid).
    pub fn build_translated(&self, shift: f64) -> Result<GridDensity, String> {
        let mut moved = self.clone();
        match self.kind.as_str() {
            "gaussian" => moved.mean = Some(self.mean.unwrap_or(0.0) + shift),
            "uniform" => {
                moved.a = Some(self.a.ok_or("uniform initial needs `a`")? + shift);
                moved.b = Some(self.b.ok_or("uniform initial needs `b`")? + shift);
            }
            other => return Err(format!("unknown initial kind {other:?}")),
        }
        moved.build()
    }

    fn build(&self) -> Result<GridDensity, String> {
        let g = &self.grid;
        if !(g.hi > g.lo) || g.cells == 0 {
            return Err("initial.grid needs hi > lo and cells > 0".into());
        }
        match self.kind.as_str() {
            "gaussian" => {
                let mean = self.mean.unwrap_or(0.0);
                let std = self.std.unwrap_or(1.0);
                GridDensity::gaussian_1d(g.lo, g.hi, g.cells, mean, std)
                    .map_err(|e| e.to_string())
            }
            "uniform" => {
                let a = self.a.ok_or("uniform initial needs `a`")?;
                let b = self.b.ok_or("uniform initial needs `b`")?;
                GridDensity::uniform_1d(g.lo, g.hi, g.cells, a, b).map_err(|e| e.to_string())
            }
            other => Err(format!("unknown initial kind {other:?}")),
        }
    }
}
