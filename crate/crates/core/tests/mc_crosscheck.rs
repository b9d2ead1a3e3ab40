//! Monte Carlo against exact enumeration on desk-scale fixtures.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use ztqmc::chain::init_chain;
use ztqmc::instance::{classical_energy, random_instance, SpinConfiguration, SpinGlassInstance};
use ztqmc::oracle;
use ztqmc::transfer::TransferOperator;

/// Empirical placket marginal of the N=2, L=6 chain against the exact
/// marginal of its reachable class, total variation below 0.01 at 10^6
/// steps. (The N=2 instance has zero-diagonal configurations, so a single
/// chain samples the product weights conditioned on its ergodic class.)
#[test]
fn placket_marginal_matches_exact_enumeration() {
    let n = 2;
    let plackets = 6;
    let inst = Arc::new(SpinGlassInstance::ferromagnet(n).unwrap());
    let op = TransferOperator::new(inst.clone(), 1.0).unwrap();
    let c0 = SpinConfiguration::all_up(n);

    let dist = oracle::reachable_chain_distribution(&op, c0, plackets).unwrap();
    let mut exact = vec![0.0f64; 1 << n];
    for (&key, &p) in &dist {
        for lambda in 0..plackets {
            exact[((key >> (lambda * n)) & 0b11) as usize] += p / plackets as f64;
        }
    }

    let mut chain = init_chain(&inst, c0, plackets).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let steps = 1_000_000u64;
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..steps {
        chain.mc_step(&op, &mut rng);
        for lambda in 0..plackets {
            counts[chain.placket(lambda).bits() as usize] += 1;
        }
    }
    let total = (steps * plackets as u64) as f64;
    let tv: f64 = exact
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p - c as f64 / total).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.01, "placket-marginal TV {tv}");
}

/// Every state reached from a uniform chain at fixed positive field keeps a
/// finite log weight.
#[test]
fn weight_positivity_is_preserved() {
    let n = 5;
    let inst = Arc::new(random_instance(n, 31).unwrap());
    let op = TransferOperator::new(inst.clone(), 1.1).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let mut chain = init_chain(&inst, SpinConfiguration::all_up(n), 12).unwrap();
    for step in 0..5_000 {
        chain.mc_step(&op, &mut rng);
        if step % 100 == 0 {
            assert!(chain.log_weight(&op) > f64::NEG_INFINITY, "step {step}");
        }
    }
    chain.check_consistency().unwrap();
}

/// The empirical chain-state distribution of a frustrated N=3 fixture
/// matches its reachable-class weights (a case with zero diagonals away
/// from the ground states and nontrivial class structure).
#[test]
fn frustrated_triangle_stationarity() {
    let n = 3;
    let plackets = 3;
    // force a frustrated triangle: J = (+1, +1, -1)
    let inst = Arc::new(SpinGlassInstance::from_couplings(n, vec![1, 1, -1], 0).unwrap());
    let op = TransferOperator::new(inst.clone(), 0.8).unwrap();
    let c0 = (0..(1u64 << n))
        .map(|bits| SpinConfiguration::from_bits(bits, n))
        .find(|c| inst.pair_count() - classical_energy(&inst, c).unwrap().raw > 0)
        .unwrap();
    let exact = oracle::reachable_chain_distribution(&op, c0, plackets).unwrap();

    let mut chain = init_chain(&inst, c0, plackets).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(55);
    let steps = 400_000u64;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for _ in 0..steps {
        chain.mc_step(&op, &mut rng);
        *counts.entry(chain.packed_state()).or_insert(0) += 1;
    }
    for key in counts.keys() {
        assert!(exact.contains_key(key), "chain left its ergodic class");
    }
    let tv: f64 = exact
        .iter()
        .map(|(key, p)| {
            let q = counts.get(key).map_or(0.0, |&c| c as f64 / steps as f64);
            (p - q).abs()
        })
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.02, "chain-state TV {tv}");
}
