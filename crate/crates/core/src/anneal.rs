//! Annealing schedules and the three run modes: annealed-to-zero, static
//! transverse field, and pre-annealed static.
//!
//! The transverse field is updated once per Monte Carlo step, before the
//! `L` placket visits, and held fixed within the step.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{init_chain, series_stats, MeasurementRecord, StepStats};
use crate::error::{Error, Result};
use crate::instance::{intensive_density, SharedInstance, SpinConfiguration};
use crate::transfer::TransferOperator;

/// Short/long trajectory averaging windows, in Monte Carlo steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasurementWindows {
    pub short: u64,
    pub long: u64,
}

impl Default for MeasurementWindows {
    fn default() -> Self {
        MeasurementWindows { short: 500, long: 10_000 }
    }
}

/// Linear ramp of the transverse field, zero on the tail of the run:
/// `omega(t) = omega_in * (1 - t / (cutoff_fraction * total_steps))`,
/// clamped at zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub omega_in: f64,
    pub total_steps: u64,
    pub cutoff_fraction: f64,
}

impl AnnealSchedule {
    pub fn new(omega_in: f64, total_steps: u64, cutoff_fraction: f64) -> Result<Self> {
        if !(omega_in.is_finite() && omega_in > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "initial transverse field must be positive (got {omega_in})"
            )));
        }
        if total_steps == 0 {
            return Err(Error::InvalidConfig("schedule needs at least one step".into()));
        }
        if !(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff fraction must lie in (0, 1] (got {cutoff_fraction})"
            )));
        }
        Ok(AnnealSchedule { omega_in, total_steps, cutoff_fraction })
    }

    /// The standard ramp reaching zero at 95% of the budget.
    pub fn linear(omega_in: f64, total_steps: u64) -> Result<Self> {
        Self::new(omega_in, total_steps, 0.95)
    }

    /// Field strength at step `t`; non-increasing in `t`, exactly zero for
    /// `t >= cutoff_fraction * total_steps`.
    pub fn omega_at(&self, t: u64) -> Result<f64> {
        if t > self.total_steps {
            return Err(Error::StepOutOfRange { step: t, total_steps: self.total_steps });
        }
        let ramp = self.cutoff_fraction * self.total_steps as f64;
        let omega = self.omega_in * (1.0 - t as f64 / ramp);
        Ok(omega.max(0.0))
    }

    /// First step at which the field is exactly zero.
    pub fn zero_from(&self) -> u64 {
        (self.cutoff_fraction * self.total_steps as f64).ceil() as u64
    }
}

/// Which run mode produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Anneal,
    Static,
    Preanneal,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunMode::Anneal => "anneal",
            RunMode::Static => "static",
            RunMode::Preanneal => "preanneal",
        })
    }
}

/// Everything a single run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub n_spins: usize,
    pub plackets: usize,
    pub seed: u64,
    pub total_steps: u64,
    /// Trajectory averaged over the short window.
    pub trajectory_short: Vec<MeasurementRecord>,
    /// Trajectory averaged over the long window.
    pub trajectory_long: Vec<MeasurementRecord>,
    /// Lowest-energy placket at the end of the run.
    pub final_configuration: SpinConfiguration,
    pub final_raw_energy: i64,
    pub final_energy_density: f64,
    /// Mean intensive energy over the measured phase (post-burn-in for the
    /// static modes, the zero-field tail for annealing).
    pub measured_mean_density: f64,
    /// Batch-means standard error of `measured_mean_density`.
    pub measured_stderr: f64,
    pub measured_steps: u64,
    pub stats: StepStats,
    pub wall_seconds: f64,
}

struct WindowAccumulator {
    width: u64,
    sum: f64,
    stats: StepStats,
    filled: u64,
    records: Vec<MeasurementRecord>,
}

impl WindowAccumulator {
    fn new(width: u64) -> Self {
        WindowAccumulator {
            width: width.max(1),
            sum: 0.0,
            stats: StepStats::default(),
            filled: 0,
            records: Vec::new(),
        }
    }

    fn push(&mut self, step: u64, omega: f64, density: f64, stats: StepStats) {
        self.sum += density;
        self.stats.accumulate(stats);
        self.filled += 1;
        if self.filled == self.width {
            self.records.push(MeasurementRecord {
                step: step + 1,
                omega,
                energy_density: self.sum / self.filled as f64,
                accept_rate: self.stats.accept_rate(),
            });
            self.sum = 0.0;
            self.stats = StepStats::default();
            self.filled = 0;
        }
    }

    fn finish(mut self, step: u64, omega: f64) -> Vec<MeasurementRecord> {
        if self.filled > 0 {
            self.records.push(MeasurementRecord {
                step: step + 1,
                omega,
                energy_density: self.sum / self.filled as f64,
                accept_rate: self.stats.accept_rate(),
            });
        }
        self.records
    }
}

/// Shared engine: run `total_steps` Monte Carlo steps with the field given
/// by `omega_of_step`, measuring from step `measure_from` onwards.
fn run_chain(
    mode: RunMode,
    instance: &SharedInstance,
    plackets: usize,
    total_steps: u64,
    measure_from: u64,
    omega_of_step: impl Fn(u64) -> f64,
    windows: MeasurementWindows,
    seed: u64,
) -> Result<RunReport> {
    if total_steps == 0 {
        return Err(Error::InvalidConfig("run needs at least one step".into()));
    }
    let start = Instant::now();
    let n = instance.n_spins();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // Initial configuration: seeded uniform draw, redrawn in the measure-zero
    // case C - E = 0 where the uniform chain would carry no weight.
    let shift = instance.pair_count();
    let c0 = loop {
        let c = SpinConfiguration::random(n, &mut rng);
        if shift - crate::instance::classical_energy(instance, &c)?.raw > 0 {
            break c;
        }
    };
    let mut chain = init_chain(instance, c0, plackets)?;

    let mut short_acc = WindowAccumulator::new(windows.short);
    let mut long_acc = WindowAccumulator::new(windows.long);
    let mut totals = StepStats::default();
    let mut measured = Vec::with_capacity((total_steps - measure_from.min(total_steps)) as usize);
    let mut last_omega = 0.0;

    for t in 0..total_steps {
        let omega = omega_of_step(t);
        last_omega = omega;
        let op = TransferOperator::new(instance.clone(), omega)?;
        let stats = chain.mc_step(&op, &mut rng);
        totals.accumulate(stats);
        let density = chain.mean_energy_density();
        short_acc.push(t, omega, density, stats);
        long_acc.push(t, omega, density, stats);
        if t >= measure_from {
            measured.push(density);
        }
    }

    let (mean, stderr) = series_stats(&measured);
    let (_, final_configuration, final_raw_energy) = chain.min_energy_placket();
    Ok(RunReport {
        mode,
        n_spins: n,
        plackets,
        seed,
        total_steps,
        trajectory_short: short_acc.finish(total_steps - 1, last_omega),
        trajectory_long: long_acc.finish(total_steps - 1, last_omega),
        final_configuration,
        final_raw_energy,
        final_energy_density: intensive_density(final_raw_energy, n),
        measured_mean_density: mean,
        measured_stderr: stderr,
        measured_steps: measured.len() as u64,
        stats: totals,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Anneal the field to zero along `schedule`, then read out the
/// lowest-energy placket. The measured phase is the zero-field tail.
pub fn run_annealed(
    instance: &SharedInstance,
    plackets: usize,
    schedule: &AnnealSchedule,
    seed: u64,
    windows: MeasurementWindows,
) -> Result<RunReport> {
    let total = schedule.total_steps;
    let measure_from = schedule.zero_from().min(total.saturating_sub(1));
    let sched = *schedule;
    run_chain(
        RunMode::Anneal,
        instance,
        plackets,
        total,
        measure_from,
        move |t| sched.omega_at(t).expect("t < total_steps by construction"),
        windows,
        seed,
    )
}

/// Sample at fixed field strength; after `burn_in` steps the chain-averaged
/// energy estimates the classical-energy expectation over the dominant
/// eigenstate at that field.
pub fn run_static(
    instance: &SharedInstance,
    plackets: usize,
    omega: f64,
    steps: u64,
    burn_in: u64,
    seed: u64,
    windows: MeasurementWindows,
) -> Result<RunReport> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "static sampling requires a positive transverse field (got {omega})"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("static run needs measured steps".into()));
    }
    run_chain(
        RunMode::Static,
        instance,
        plackets,
        burn_in + steps,
        burn_in,
        move |_| omega,
        windows,
        seed,
    )
}

/// Ramp the field linearly from `omega_in` down to `omega_target` over
/// `ramp_steps`, then hold it fixed for `measure_steps` of sampling. With
/// `omega_in == omega_target` this is `run_static` with the ramp as burn-in,
/// identical stream and all.
pub fn run_preannealed_static(
    instance: &SharedInstance,
    plackets: usize,
    omega_in: f64,
    omega_target: f64,
    ramp_steps: u64,
    measure_steps: u64,
    seed: u64,
    windows: MeasurementWindows,
) -> Result<RunReport> {
    if !(omega_target.is_finite() && omega_target > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "pre-annealed sampling requires a positive target field (got {omega_target})"
        )));
    }
    if !(omega_in.is_finite() && omega_in >= omega_target) {
        return Err(Error::InvalidConfig(format!(
            "pre-anneal ramp must start at or above the target ({omega_in} < {omega_target})"
        )));
    }
    if measure_steps == 0 {
        return Err(Error::InvalidConfig("pre-annealed run needs measured steps".into()));
    }
    run_chain(
        RunMode::Preanneal,
        instance,
        plackets,
        ramp_steps + measure_steps,
        ramp_steps,
        move |t| {
            if t >= ramp_steps {
                omega_target
            } else {
                omega_in + (omega_target - omega_in) * t as f64 / ramp_steps as f64
            }
        },
        windows,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_instance;
    use crate::oracle;
    use std::sync::Arc;

    #[test]
    fn schedule_endpoints() {
        let s = AnnealSchedule::linear(5.0, 1_000_000).unwrap();
        assert_eq!(s.omega_at(0).unwrap(), 5.0);
        assert_eq!(s.omega_at(950_000).unwrap(), 0.0);
        assert_eq!(s.omega_at(1_000_000).unwrap(), 0.0);
        let mid = s.omega_at(475_000).unwrap();
        assert!((mid - 2.5).abs() < 1e-12);
        assert!(matches!(
            s.omega_at(1_000_001),
            Err(Error::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn schedule_is_non_increasing_with_zero_tail() {
        let s = AnnealSchedule::new(3.0, 10_000, 0.8).unwrap();
        let mut prev = f64::INFINITY;
        for t in 0..=10_000 {
            let w = s.omega_at(t).unwrap();
            assert!(w <= prev && w >= 0.0);
            if t >= 8000 {
                assert_eq!(w, 0.0);
            }
            prev = w;
        }
        assert_eq!(s.zero_from(), 8000);
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::new(0.0, 100, 0.95).is_err());
        assert!(AnnealSchedule::new(1.0, 0, 0.95).is_err());
        assert!(AnnealSchedule::new(1.0, 100, 0.0).is_err());
        assert!(AnnealSchedule::new(1.0, 100, 1.1).is_err());
        assert!(AnnealSchedule::new(1.0, 100, 1.0).is_ok());
    }

    #[test]
    fn annealed_smoke_run_respects_oracle_bound() {
        let inst = Arc::new(random_instance(6, 77).unwrap());
        let schedule = AnnealSchedule::linear(2.0, 2000).unwrap();
        let report = run_annealed(&inst, 30, &schedule, 1, MeasurementWindows::default()).unwrap();
        let gs = oracle::exhaustive_ground_state(&inst).unwrap();
        assert!(report.final_raw_energy >= gs.energy);
        let check = crate::instance::classical_energy(&inst, &report.final_configuration)
            .unwrap()
            .raw;
        assert_eq!(check, report.final_raw_energy);
        assert_eq!(report.stats.visits, 2000 * 30);
    }

    #[test]
    fn high_field_expectation_tends_to_zero() {
        // omega far above the exchange scale: the dominant eigenstate tends
        // to the uniform superposition, whose mean classical energy is zero
        // (second-order correction -C/(2 omega))
        let n = 6;
        let inst = Arc::new(random_instance(n, 3).unwrap());
        let op = crate::transfer::TransferOperator::new(inst.clone(), 50.0).unwrap();
        let result =
            oracle::dominant_eigenpair(&op, oracle::PowerSettings::default()).unwrap();
        assert!(
            result.classical_expectation.abs() < 0.25,
            "high-field expectation {}",
            result.classical_expectation
        );
        let low = crate::transfer::TransferOperator::new(inst.clone(), 0.5).unwrap();
        let low_result =
            oracle::dominant_eigenpair(&low, oracle::PowerSettings::default()).unwrap();
        assert!(low_result.classical_expectation.abs() > result.classical_expectation.abs());
    }

    #[test]
    fn static_two_spin_matches_reachable_class_expectation() {
        // The N=2 instance is the zero-diagonal edge case: the antialigned
        // configurations sit at E = +C, and a single chain samples the exact
        // weights conditioned on its ergodic class. Both classes share the
        // same mean energy by Z2 symmetry.
        let n = 2;
        let plackets = 6;
        let inst = Arc::new(crate::instance::SpinGlassInstance::ferromagnet(n).unwrap());
        let op = crate::transfer::TransferOperator::new(inst.clone(), 1.0).unwrap();
        let dist = oracle::reachable_chain_distribution(
            &op,
            SpinConfiguration::all_up(n),
            plackets,
        )
        .unwrap();
        let energy_of = |bits: u64| {
            crate::instance::classical_energy(
                &inst,
                &SpinConfiguration::from_bits(bits, n),
            )
            .unwrap()
            .raw as f64
        };
        let exact_raw: f64 = dist
            .iter()
            .map(|(&key, &p)| {
                let mean: f64 = (0..plackets)
                    .map(|lambda| energy_of((key >> (lambda * n)) & 0b11))
                    .sum::<f64>()
                    / plackets as f64;
                p * mean
            })
            .sum();

        let report = run_static(
            &inst,
            plackets,
            1.0,
            40_000,
            4_000,
            11,
            MeasurementWindows::default(),
        )
        .unwrap();
        let raw_mean = report.measured_mean_density * (n as f64).powf(1.5);
        let raw_stderr = report.measured_stderr * (n as f64).powf(1.5);
        assert!(
            (raw_mean - exact_raw).abs() < 5.0 * raw_stderr.max(2e-3),
            "raw mean {raw_mean} vs class-exact {exact_raw} (stderr {raw_stderr})"
        );
    }

    #[test]
    fn preanneal_with_equal_fields_reduces_to_static() {
        let inst = Arc::new(random_instance(5, 21).unwrap());
        let windows = MeasurementWindows { short: 100, long: 1000 };
        let a = run_static(&inst, 20, 1.5, 3000, 500, 17, windows).unwrap();
        let b =
            run_preannealed_static(&inst, 20, 1.5, 1.5, 500, 3000, 17, windows).unwrap();
        assert_eq!(a.final_configuration, b.final_configuration);
        assert_eq!(a.final_raw_energy, b.final_raw_energy);
        assert_eq!(a.measured_mean_density, b.measured_mean_density);
        assert_eq!(a.stats.accepted, b.stats.accepted);
    }

    #[test]
    fn run_reports_are_deterministic() {
        let inst = Arc::new(random_instance(5, 21).unwrap());
        let schedule = AnnealSchedule::linear(2.0, 1000).unwrap();
        let a = run_annealed(&inst, 10, &schedule, 5, MeasurementWindows::default()).unwrap();
        let b = run_annealed(&inst, 10, &schedule, 5, MeasurementWindows::default()).unwrap();
        assert_eq!(a.final_configuration, b.final_configuration);
        assert_eq!(a.measured_mean_density, b.measured_mean_density);
        assert_eq!(a.stats.accepted, b.stats.accepted);
    }

    #[test]
    fn static_rejects_zero_field() {
        let inst = Arc::new(random_instance(4, 1).unwrap());
        assert!(run_static(&inst, 10, 0.0, 100, 10, 1, MeasurementWindows::default()).is_err());
    }
}
