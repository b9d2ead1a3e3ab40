//! Disorder-ensemble driver: a grid of (instance, repetition) cells, each
//! fully deterministic from its derived seed, run concurrently and merged
//! in config order.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::{EnsembleParams, ExperimentConfig, InstanceSource};
use crate::harness::{instance_seed, run_seed};
use crate::instance::{intensive_density, random_instance, SharedInstance, SpinGlassInstance};
use crate::oracle::exhaustive_ground_state_with_cap;

/// One ensemble cell. On failure only `error` is populated.
#[derive(Debug, Clone)]
pub struct CellRecord {
    pub instance_index: usize,
    pub instance_seed: u64,
    pub rep: usize,
    pub run_seed: u64,
    pub final_energy: Option<i64>,
    pub final_density: Option<f64>,
    pub oracle_energy: Option<i64>,
    pub success: Option<bool>,
    pub mean_density: Option<f64>,
    pub stderr: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub n_spins: usize,
    pub cells: Vec<CellRecord>,
    /// Fraction of successful cells among those with an oracle energy.
    pub success_rate: Option<f64>,
    pub mean_final_density: Option<f64>,
    pub mean_oracle_density: Option<f64>,
    pub failures: usize,
}

pub fn ensemble_run(config: &ExperimentConfig) -> Result<EnsembleSummary> {
    let params: EnsembleParams = config
        .ensemble
        .ok_or_else(|| Error::InvalidConfig("ensemble mode needs an ensemble section".into()))?;
    if params.instances == 0 || params.repetitions == 0 {
        return Err(Error::EmptyEnsemble {
            instances: params.instances,
            repetitions: params.repetitions,
        });
    }
    config.mode_params_check()?;

    // Build the disorder realizations up front. Generated ensembles derive
    // one instance per index from the seed base; a file-backed ensemble is a
    // repetition study of that single instance.
    let instances: Vec<(SharedInstance, u64)> = match &config.instance {
        Some(InstanceSource::Generate { n, .. }) => (0..params.instances)
            .map(|i| {
                let seed = instance_seed(params.seed_base, i);
                Ok((std::sync::Arc::new(random_instance(*n, seed)?), seed))
            })
            .collect::<Result<_>>()?,
        Some(InstanceSource::File { path }) => {
            if params.instances != 1 {
                return Err(Error::InvalidConfig(
                    "a file-backed ensemble supports exactly one instance; \
                     use a generate source for disorder averages"
                        .into(),
                ));
            }
            let inst = SpinGlassInstance::load(path)?;
            let seed = inst.seed();
            vec![(std::sync::Arc::new(inst), seed)]
        }
        None => {
            return Err(Error::InvalidConfig(
                "ensemble needs an instance source".into(),
            ))
        }
    };
    let n_spins = instances[0].0.n_spins();

    let oracles: Vec<Option<i64>> = instances
        .par_iter()
        .map(|(inst, _)| {
            if inst.n_spins() <= config.oracle_max_n {
                exhaustive_ground_state_with_cap(inst, config.oracle_max_n)
                    .ok()
                    .map(|r| r.energy)
            } else {
                None
            }
        })
        .collect();

    let cell_ids: Vec<(usize, usize)> = (0..params.instances)
        .flat_map(|i| (0..params.repetitions).map(move |rep| (i, rep)))
        .collect();

    let cells: Vec<CellRecord> = cell_ids
        .par_iter()
        .map(|&(i, rep)| {
            let (inst, inst_seed) = &instances[i];
            let seed = run_seed(params.seed_base, i, rep);
            let mut record = CellRecord {
                instance_index: i,
                instance_seed: *inst_seed,
                rep,
                run_seed: seed,
                final_energy: None,
                final_density: None,
                oracle_energy: oracles[i],
                success: None,
                mean_density: None,
                stderr: None,
                error: None,
            };
            match config.run_on(inst, seed) {
                Ok(report) => {
                    record.final_energy = Some(report.final_raw_energy);
                    record.final_density = Some(report.final_energy_density);
                    record.mean_density = Some(report.measured_mean_density);
                    record.stderr = Some(report.measured_stderr);
                    record.success = oracles[i].map(|o| report.final_raw_energy == o);
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect();

    let failures = cells.iter().filter(|c| c.error.is_some()).count();
    let finals: Vec<f64> = cells.iter().filter_map(|c| c.final_density).collect();
    let mean_final_density = if finals.is_empty() {
        None
    } else {
        Some(finals.iter().sum::<f64>() / finals.len() as f64)
    };
    let with_oracle: Vec<&CellRecord> =
        cells.iter().filter(|c| c.success.is_some()).collect();
    let success_rate = if with_oracle.is_empty() {
        None
    } else {
        Some(
            with_oracle.iter().filter(|c| c.success == Some(true)).count() as f64
                / with_oracle.len() as f64,
        )
    };
    let oracle_densities: Vec<f64> = cells
        .iter()
        .filter_map(|c| c.oracle_energy.map(|e| intensive_density(e, n_spins)))
        .collect();
    let mean_oracle_density = if oracle_densities.is_empty() {
        None
    } else {
        Some(oracle_densities.iter().sum::<f64>() / oracle_densities.len() as f64)
    };

    Ok(EnsembleSummary {
        n_spins,
        cells,
        success_rate,
        mean_final_density,
        mean_oracle_density,
        failures,
    })
}

/// Summary CSV, one row per cell in config order.
pub fn write_summary_csv(summary: &EnsembleSummary, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "instance_seed,rep,final_energy,oracle_energy,success,mean_density,stderr"
    )?;
    for cell in &summary.cells {
        let opt_i = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell.instance_seed,
            cell.rep,
            opt_i(cell.final_energy),
            opt_i(cell.oracle_energy),
            cell.success.map(|s| if s { "1" } else { "0" }).unwrap_or(""),
            opt_f(cell.mean_density),
            opt_f(cell.stderr),
        )?;
    }
    Ok(())
}
