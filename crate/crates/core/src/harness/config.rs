//! Run configuration: JSON file format plus resolution into concrete runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anneal::{
    run_annealed, run_preannealed_static, run_static, AnnealSchedule, MeasurementWindows,
    RunMode, RunReport,
};
use crate::error::{Error, Result};
use crate::instance::{random_instance, SharedInstance, SpinGlassInstance};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// Load an instance JSON file; its couplings are authoritative.
    File { path: PathBuf },
    /// Generate the ±J realization from `(n, seed)`.
    Generate { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub omega_in: f64,
    pub total_steps: u64,
    #[serde(default = "default_cutoff")]
    pub cutoff_fraction: f64,
}

fn default_cutoff() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StaticParams {
    pub omega: f64,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PreannealParams {
    pub omega_in: f64,
    pub omega_target: f64,
    pub ramp_steps: u64,
    pub measure_steps: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Number of disorder realizations.
    pub instances: usize,
    /// Base seed; per-cell instance and run seeds derive from it.
    pub seed_base: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
}

fn default_reps() -> usize {
    1
}

/// One experiment: a mode plus the parameters it needs. Unused sections may
/// be omitted; unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSource>,
    /// Chain length; defaults to 20 plackets per spin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plackets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleParams>,
    #[serde(rename = "static", default, skip_serializing_if = "Option::is_none")]
    pub static_params: Option<StaticParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preanneal: Option<PreannealParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleParams>,
    #[serde(default)]
    pub windows: MeasurementWindows,
    /// Required for single runs; ensembles derive their own cell seeds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_seed: Option<u64>,
    /// Attach exhaustive oracle energies to ensembles up to this size.
    #[serde(default = "default_oracle_max_n")]
    pub oracle_max_n: usize,
}

fn default_oracle_max_n() -> usize {
    20
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Minimal skeleton for building configs programmatically or from flags.
    pub fn new(mode: RunMode) -> Self {
        ExperimentConfig {
            mode,
            instance: None,
            plackets: None,
            schedule: None,
            static_params: None,
            preanneal: None,
            ensemble: None,
            windows: MeasurementWindows::default(),
            run_seed: None,
            oracle_max_n: default_oracle_max_n(),
        }
    }

    pub fn resolve_instance(&self) -> Result<(SharedInstance, u64)> {
        match &self.instance {
            None => Err(Error::InvalidConfig(
                "no instance given: supply a file or (n, seed)".into(),
            )),
            Some(InstanceSource::File { path }) => {
                let inst = SpinGlassInstance::load(path)?;
                let seed = inst.seed();
                Ok((std::sync::Arc::new(inst), seed))
            }
            Some(InstanceSource::Generate { n, seed }) => {
                Ok((std::sync::Arc::new(random_instance(*n, *seed)?), *seed))
            }
        }
    }

    pub fn plackets_for(&self, n_spins: usize) -> usize {
        self.plackets.unwrap_or(20 * n_spins)
    }

    /// Mode-specific parameter checks shared by single runs and ensembles.
    pub fn mode_params_check(&self) -> Result<()> {
        match self.mode {
            RunMode::Anneal => {
                let s = self
                    .schedule
                    .ok_or_else(|| Error::InvalidConfig("anneal mode needs a schedule".into()))?;
                AnnealSchedule::new(s.omega_in, s.total_steps, s.cutoff_fraction)?;
            }
            RunMode::Static => {
                let s = self.static_params.ok_or_else(|| {
                    Error::InvalidConfig("static mode needs static parameters".into())
                })?;
                if !(s.omega.is_finite() && s.omega > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "static mode requires omega > 0 (got {})",
                        s.omega
                    )));
                }
            }
            RunMode::Preanneal => {
                let p = self.preanneal.ok_or_else(|| {
                    Error::InvalidConfig("preanneal mode needs preanneal parameters".into())
                })?;
                if !(p.omega_target > 0.0 && p.omega_in >= p.omega_target) {
                    return Err(Error::InvalidConfig(format!(
                        "preanneal ramp must go from omega_in >= omega_target > 0 (got {} -> {})",
                        p.omega_in, p.omega_target
                    )));
                }
            }
        }
        Ok(())
    }

    /// Execute a single run of the configured mode on `instance`.
    pub fn run_on(
        &self,
        instance: &SharedInstance,
        run_seed: u64,
    ) -> Result<RunReport> {
        self.mode_params_check()?;
        let plackets = self.plackets_for(instance.n_spins());
        match self.mode {
            RunMode::Anneal => {
                let s = self.schedule.expect("checked above");
                let schedule = AnnealSchedule::new(s.omega_in, s.total_steps, s.cutoff_fraction)?;
                run_annealed(instance, plackets, &schedule, run_seed, self.windows)
            }
            RunMode::Static => {
                let s = self.static_params.expect("checked above");
                run_static(
                    instance,
                    plackets,
                    s.omega,
                    s.steps,
                    s.burn_in,
                    run_seed,
                    self.windows,
                )
            }
            RunMode::Preanneal => {
                let p = self.preanneal.expect("checked above");
                run_preannealed_static(
                    instance,
                    plackets,
                    p.omega_in,
                    p.omega_target,
                    p.ramp_steps,
                    p.measure_steps,
                    run_seed,
                    self.windows,
                )
            }
        }
    }

    /// Execute the single run described by this config. All seeds must be
    /// explicit: a missing `run_seed` is an error, never an entropy source.
    pub fn run_single(&self) -> Result<(RunReport, u64)> {
        let run_seed = self.run_seed.ok_or_else(|| {
            Error::InvalidConfig("run_seed must be explicit for single runs".into())
        })?;
        let (instance, instance_seed) = self.resolve_instance()?;
        Ok((self.run_on(&instance, run_seed)?, instance_seed))
    }
}
