use rayon::prelude::*;
use std::sync::Arc;
use ztqmc::anneal::{run_annealed, AnnealSchedule, MeasurementWindows};
use ztqmc::harness::derive_seed;
use ztqmc::instance::random_instance;
use ztqmc::oracle::exhaustive_ground_state;

#[test]
#[ignore]
fn anneal_success_sweep() {
    let n = 10;
    let plackets = 200;
    for (omega_in, steps) in [
        (2.0f64, 200_000u64),
        (1.5, 200_000),
        (1.0, 200_000),
        (3.0, 200_000),
        (2.0, 500_000),
    ] {
        let successes: u32 = (0..100u64)
            .into_par_iter()
            .map(|i| {
                let inst = Arc::new(random_instance(n, 300 + i).unwrap());
                let gs = exhaustive_ground_state(&inst).unwrap().energy;
                let schedule = AnnealSchedule::linear(omega_in, steps).unwrap();
                let report = run_annealed(
                    &inst,
                    plackets,
                    &schedule,
                    derive_seed(600, i, 0),
                    MeasurementWindows::default(),
                )
                .unwrap();
                u32::from(report.final_raw_energy == gs)
            })
            .sum();
        eprintln!(
            "omega_in={omega_in} T={steps}: success {}/100",
            successes
        );
    }
}

#[test]
#[ignore]
fn greedy_typicality_scan() {
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use ztqmc::instance::SpinConfiguration;
    use ztqmc::oracle::{density_of_states, flip_path_profile, greedy_downhill};

    for seed in 4240..4260u64 {
        let inst = random_instance(20, seed).unwrap();
        let gs = exhaustive_ground_state(&inst).unwrap();
        let dos = density_of_states(&inst).unwrap();
        let profile = flip_path_profile(&inst);
        let path_min = *profile.iter().min().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8888);
        let starts: Vec<SpinConfiguration> =
            (0..50).map(|_| SpinConfiguration::random(20, &mut rng)).collect();
        let reached: u32 = starts
            .par_iter()
            .enumerate()
            .map(|(s, start)| {
                let r = greedy_downhill(&inst, *start, 1_000_000, derive_seed(8, s as u64, 0))
                    .unwrap();
                u32::from(r.final_energy == gs.energy)
            })
            .sum();
        eprintln!(
            "seed {seed}: greedy {reached}/50, degeneracy {}, dos ratio {:.0}, path_min {} vs gs {}",
            gs.degeneracy,
            dos.max_count() as f64 / dos.ground_count() as f64,
            path_min,
            gs.energy
        );
    }
}
