use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::json;

use ztqmc::anneal::RunMode;
use ztqmc::harness::config::{
    ExperimentConfig, InstanceSource, PreannealParams, ScheduleParams, StaticParams,
};
use ztqmc::harness::ensemble::{ensemble_run, write_summary_csv};
use ztqmc::harness::validate;
use ztqmc::harness::{
    write_dos_csv, write_flip_path_csv, write_greedy_csv, write_run_artifacts,
};
use ztqmc::instance::{random_instance, SpinConfiguration, SpinGlassInstance};
use ztqmc::oracle::{self, PowerSettings};
use ztqmc::transfer::TransferOperator;
use ztqmc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ztqmc",
    version,
    about = "Zero-temperature transfer-matrix quantum Monte Carlo for the \
             infinite-range ±J transverse-field Ising spin glass"
)]
struct Cli {
    /// Worker threads for ensembles and oracles (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ±J disorder realization and write its JSON file
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output instance file
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Density of states, flip-path profile, and greedy-downhill probes
    Landscape(LandscapeArgs),
    /// Anneal the transverse field linearly to zero
    Anneal(RunArgs),
    /// Sample at a fixed transverse field
    Static(RunArgs),
    /// Anneal down to a target field, then sample there
    Preanneal(RunArgs),
    /// Dominant eigenpair of the transfer operator by power iteration
    Eigen(EigenArgs),
    /// Run a disorder ensemble and write the summary CSV
    Ensemble(EnsembleArgs),
    /// Run the property suite and print one pass/fail line per criterion
    Validate {
        /// Include the long-running reference-constant check
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON file (alternative to --n/--seed)
    #[arg(long, conflicts_with_all = ["n", "seed"])]
    instance: Option<PathBuf>,
    #[arg(long, requires = "seed")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    seed: Option<u64>,
}

impl InstanceArgs {
    fn source(&self) -> Option<InstanceSource> {
        match (&self.instance, self.n, self.seed) {
            (Some(path), _, _) => Some(InstanceSource::File { path: path.clone() }),
            (None, Some(n), Some(seed)) => Some(InstanceSource::Generate { n, seed }),
            _ => None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; the flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Chain length L (default: 20 plackets per spin)
    #[arg(long)]
    plackets: Option<usize>,
    /// Initial transverse field (anneal, preanneal)
    #[arg(long)]
    omega_in: Option<f64>,
    /// Total steps (anneal) or measured steps (static, preanneal)
    #[arg(long)]
    steps: Option<u64>,
    /// Fraction of the budget after which the field is exactly zero
    #[arg(long)]
    cutoff: Option<f64>,
    /// Fixed field (static) or target field (preanneal)
    #[arg(long)]
    omega: Option<f64>,
    /// Unmeasured steps before sampling (static)
    #[arg(long)]
    burn_in: Option<u64>,
    /// Ramp length before sampling (preanneal)
    #[arg(long)]
    ramp_steps: Option<u64>,
    /// Markov-chain seed (required here or in the config)
    #[arg(long)]
    run_seed: Option<u64>,
    #[arg(long)]
    short_window: Option<u64>,
    #[arg(long)]
    long_window: Option<u64>,
    /// Output directory for report.json and the trajectory CSVs
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EigenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_iter: u64,
    /// Output JSON file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 50)]
    starts: usize,
    #[arg(long, default_value_t = 1_000_000)]
    moves: u64,
    #[arg(long, default_value_t = 1)]
    greedy_seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Experiment config JSON with mode, parameters, and ensemble section
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long)]
    plackets: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("ztqmc: could not size the worker pool: {e}");
            std::process::exit(2);
        }
    }
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("ztqmc: {e}");
            std::process::exit(2);
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Gen { n, seed, out } => {
            let inst = random_instance(n, seed)?;
            inst.save(&out)?;
            println!(
                "wrote n = {n}, seed = {seed} ({} couplings) to {}",
                inst.couplings().len(),
                out.display()
            );
            Ok(0)
        }
        Command::Landscape(args) => landscape(args),
        Command::Anneal(args) => single_run(RunMode::Anneal, args),
        Command::Static(args) => single_run(RunMode::Static, args),
        Command::Preanneal(args) => single_run(RunMode::Preanneal, args),
        Command::Eigen(args) => eigen(args),
        Command::Ensemble(args) => ensemble(args),
        Command::Validate { full } => {
            let mut results = validate::mandatory();
            if full {
                results.push(validate::criterion_10_reference_constant());
            }
            let mut failed = 0;
            for result in &results {
                println!("{}", result.line());
                if !result.passed {
                    failed += 1;
                }
            }
            println!(
                "{} of {} criteria passed",
                results.len() - failed,
                results.len()
            );
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

/// Merge CLI flags over an optional config file into one experiment config.
fn build_config(mode: RunMode, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let config = ExperimentConfig::load(path)?;
            if config.mode != mode {
                return Err(Error::InvalidConfig(format!(
                    "config file is for mode '{}', invoked as '{mode}'",
                    config.mode
                )));
            }
            config
        }
        None => ExperimentConfig::new(mode),
    };
    if let Some(source) = args.instance.source() {
        config.instance = Some(source);
    }
    if args.plackets.is_some() {
        config.plackets = args.plackets;
    }
    if args.run_seed.is_some() {
        config.run_seed = args.run_seed;
    }
    if let Some(w) = args.short_window {
        config.windows.short = w;
    }
    if let Some(w) = args.long_window {
        config.windows.long = w;
    }
    match mode {
        RunMode::Anneal => {
            let mut s = config.schedule.unwrap_or(ScheduleParams {
                omega_in: 0.0,
                total_steps: 0,
                cutoff_fraction: 0.95,
            });
            if let Some(v) = args.omega_in {
                s.omega_in = v;
            }
            if let Some(v) = args.steps {
                s.total_steps = v;
            }
            if let Some(v) = args.cutoff {
                s.cutoff_fraction = v;
            }
            config.schedule = Some(s);
        }
        RunMode::Static => {
            let mut s = config.static_params.unwrap_or(StaticParams {
                omega: 0.0,
                steps: 0,
                burn_in: 0,
            });
            if let Some(v) = args.omega {
                s.omega = v;
            }
            if let Some(v) = args.steps {
                s.steps = v;
            }
            if let Some(v) = args.burn_in {
                s.burn_in = v;
            }
            config.static_params = Some(s);
        }
        RunMode::Preanneal => {
            let mut p = config.preanneal.unwrap_or(PreannealParams {
                omega_in: 0.0,
                omega_target: 0.0,
                ramp_steps: 0,
                measure_steps: 0,
            });
            if let Some(v) = args.omega_in {
                p.omega_in = v;
            }
            if let Some(v) = args.omega {
                p.omega_target = v;
            }
            if let Some(v) = args.ramp_steps {
                p.ramp_steps = v;
            }
            if let Some(v) = args.steps {
                p.measure_steps = v;
            }
            config.preanneal = Some(p);
        }
    }
    Ok(config)
}

fn single_run(mode: RunMode, args: RunArgs) -> Result<i32> {
    let config = build_config(mode, &args)?;
    let (report, instance_seed) = config.run_single()?;
    let (instance, _) = config.resolve_instance()?;
    let oracle_energy = if instance.n_spins() <= config.oracle_max_n {
        oracle::exhaustive_ground_state_with_cap(&instance, config.oracle_max_n)
            .ok()
            .map(|r| r.energy)
    } else {
        None
    };
    write_run_artifacts(&report, instance_seed, oracle_energy, &args.out)?;
    println!(
        "{mode}: n = {}, L = {}, {} steps in {:.2}s",
        report.n_spins, report.plackets, report.total_steps, report.wall_seconds
    );
    println!(
        "final energy {} (density {:.6}), measured mean {:.6} ± {:.6}, acceptance {:.4}",
        report.final_raw_energy,
        report.final_energy_density,
        report.measured_mean_density,
        report.measured_stderr,
        report.stats.accept_rate()
    );
    if let Some(gs) = oracle_energy {
        println!(
            "exhaustive ground state {gs}: {}",
            if report.final_raw_energy == gs { "reached" } else { "not reached" }
        );
    }
    println!("artifacts in {}", args.out.display());
    Ok(0)
}

fn eigen(args: EigenArgs) -> Result<i32> {
    let source = args
        .instance
        .source()
        .ok_or_else(|| Error::InvalidConfig("eigen needs --instance or --n/--seed".into()))?;
    let instance = match source {
        InstanceSource::File { path } => Arc::new(SpinGlassInstance::load(&path)?),
        InstanceSource::Generate { n, seed } => Arc::new(random_instance(n, seed)?),
    };
    let op = TransferOperator::new(instance.clone(), args.omega)?;
    let settings = PowerSettings {
        tol: args.tol,
        max_iter: args.max_iter,
        ..PowerSettings::default()
    };
    let result = oracle::dominant_eigenpair(&op, settings)?;
    let payload = json!({
        "n": instance.n_spins(),
        "omega": args.omega,
        "theta1": result.theta1,
        "theta2": result.theta2,
        "classical_expectation": result.classical_expectation,
        "intensive_expectation": result.intensive_expectation,
        "ground_energy_of_h_tot": op.shift() as f64 - result.theta1,
        "iterations": result.iterations,
    });
    let text = serde_json::to_string_pretty(&payload)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote spectral result to {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(0)
}

fn landscape(args: LandscapeArgs) -> Result<i32> {
    let source = args
        .instance
        .source()
        .ok_or_else(|| Error::InvalidConfig("landscape needs --instance or --n/--seed".into()))?;
    let instance = match source {
        InstanceSource::File { path } => SpinGlassInstance::load(&path)?,
        InstanceSource::Generate { n, seed } => random_instance(n, seed)?,
    };
    let n = instance.n_spins();
    std::fs::create_dir_all(&args.out)?;

    let ground = oracle::exhaustive_ground_state(&instance).ok();
    if let Some(gs) = &ground {
        println!(
            "exhaustive ground state: {} (density {:.6}, degeneracy {})",
            gs.energy, gs.energy_density, gs.degeneracy
        );
    } else {
        println!("exhaustive ground state skipped (n = {n} above cap)");
    }

    let dos = oracle::density_of_states(&instance).ok();
    if let Some(dos) = &dos {
        write_dos_csv(dos, &args.out.join("dos.csv"))?;
        println!(
            "density of states: peak count {} vs ground count {}",
            dos.max_count(),
            dos.ground_count()
        );
    } else {
        println!("density of states skipped (n = {n} above cap)");
    }

    let profile = oracle::flip_path_profile(&instance);
    write_flip_path_csv(&profile, &args.out.join("flip_path.csv"))?;
    let path_min = profile.iter().min().expect("profile is non-empty");
    println!("flip-path minimum: {path_min}");

    let mut rng = ChaCha12Rng::seed_from_u64(args.greedy_seed);
    let starts: Vec<SpinConfiguration> = (0..args.starts)
        .map(|_| SpinConfiguration::random(n, &mut rng))
        .collect();
    let reports: Vec<oracle::GreedyReport> = starts
        .par_iter()
        .enumerate()
        .map(|(s, start)| {
            oracle::greedy_downhill(
                &instance,
                *start,
                args.moves,
                ztqmc::harness::derive_seed(args.greedy_seed, 1, s as u64),
            )
            .expect("positive move budget")
        })
        .collect();
    write_greedy_csv(&reports, &args.out.join("greedy.csv"))?;
    if let Some(gs) = &ground {
        let reached = reports.iter().filter(|r| r.final_energy == gs.energy).count();
        println!(
            "greedy downhill: {reached} of {} starts reached the ground state",
            reports.len()
        );
    }

    let summary = json!({
        "n": n,
        "instance_seed": instance.seed(),
        "ground_energy": ground.as_ref().map(|g| g.energy),
        "ground_degeneracy": ground.as_ref().map(|g| g.degeneracy),
        "dos_peak_count": dos.as_ref().map(|d| d.max_count()),
        "dos_ground_count": dos.as_ref().map(|d| d.ground_count()),
        "flip_path_min": path_min,
        "greedy_starts": args.starts,
        "greedy_reached_ground": ground.as_ref().map(|g| {
            reports.iter().filter(|r| r.final_energy == g.energy).count()
        }),
    });
    std::fs::write(
        args.out.join("landscape.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!("artifacts in {}", args.out.display());
    Ok(0)
}

fn ensemble(args: EnsembleArgs) -> Result<i32> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(ens) = config.ensemble.as_mut() {
        if let Some(v) = args.instances {
            ens.instances = v;
        }
        if let Some(v) = args.repetitions {
            ens.repetitions = v;
        }
        if let Some(v) = args.seed_base {
            ens.seed_base = v;
        }
    }
    if args.plackets.is_some() {
        config.plackets = args.plackets;
    }
    let summary = ensemble_run(&config)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("summary.csv");
    write_summary_csv(&summary, &path)?;
    println!(
        "{} cells ({} failures), mean final density {:?}, success rate {:?}",
        summary.cells.len(),
        summary.failures,
        summary.mean_final_density,
        summary.success_rate
    );
    println!("summary in {}", path.display());
    Ok(0)
}
