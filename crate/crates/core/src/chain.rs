//! The uniform chain of `L` plackets with periodic boundaries and its
//! restricted single-spin-flip Markov dynamics.
//!
//! A chain state carries weight `prod_lambda W(mu_lambda, mu_{lambda+1})`
//! around the ring. A single-spin flip at placket `lambda` touches exactly
//! the two bonds incident to it, so the Metropolis ratio reduces to four
//! transfer-matrix elements, all O(1) given the cached placket energies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{classical_energy, flip_delta, SharedInstance, SpinConfiguration};
use crate::transfer::TransferOperator;

/// A ring of `L` classical spin clusters with cached exchange energies.
#[derive(Debug, Clone)]
pub struct PlacketChain {
    instance: SharedInstance,
    plackets: Vec<SpinConfiguration>,
    energies: Vec<i64>,
    energy_sum: i64,
}

/// One proposed elementary move: flip `spin` in placket `placket`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveProposal {
    pub placket: usize,
    pub spin: usize,
}

/// Counters for one Monte Carlo step (or an accumulation of steps).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub visits: u64,
    pub allowed: u64,
    pub accepted: u64,
}

impl StepStats {
    pub fn accumulate(&mut self, other: StepStats) {
        self.visits += other.visits;
        self.allowed += other.allowed;
        self.accepted += other.accepted;
    }

    pub fn accept_rate(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.accepted as f64 / self.visits as f64
        }
    }
}

/// One trajectory sample: chain-averaged intensive energy at a given step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step: u64,
    pub omega: f64,
    pub energy_density: f64,
    pub accept_rate: f64,
}

/// Start from `L` copies of one configuration; the adjacency invariant
/// (neighboring plackets at Hamming distance 0 or 1) holds trivially.
pub fn init_chain(
    instance: &SharedInstance,
    c0: SpinConfiguration,
    len: usize,
) -> Result<PlacketChain> {
    if len < 2 {
        return Err(Error::ChainTooShort(len));
    }
    let e0 = classical_energy(instance, &c0)?.raw;
    Ok(PlacketChain {
        instance: instance.clone(),
        plackets: vec![c0; len],
        energies: vec![e0; len],
        energy_sum: e0 * len as i64,
    })
}

impl PlacketChain {
    /// Build a chain from explicit placket configurations, enforcing the
    /// ring adjacency invariant (Hamming distance <= 1 between neighbors).
    pub fn from_plackets(
        instance: &SharedInstance,
        plackets: Vec<SpinConfiguration>,
    ) -> Result<Self> {
        if plackets.len() < 2 {
            return Err(Error::ChainTooShort(plackets.len()));
        }
        let len = plackets.len();
        let mut energies = Vec::with_capacity(len);
        let mut energy_sum = 0i64;
        for (lambda, p) in plackets.iter().enumerate() {
            let d = p.hamming(&plackets[(lambda + 1) % len]);
            if d > 1 {
                return Err(Error::InvalidConfig(format!(
                    "plackets {lambda} and {} differ at {d} spins",
                    (lambda + 1) % len
                )));
            }
            let e = classical_energy(instance, p)?.raw;
            energies.push(e);
            energy_sum += e;
        }
        Ok(PlacketChain {
            instance: instance.clone(),
            plackets,
            energies,
            energy_sum,
        })
    }

    pub fn len(&self) -> usize {
        self.plackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plackets.is_empty()
    }

    pub fn n_spins(&self) -> usize {
        self.instance.n_spins()
    }

    pub fn instance(&self) -> &SharedInstance {
        &self.instance
    }

    pub fn placket(&self, lambda: usize) -> &SpinConfiguration {
        &self.plackets[lambda]
    }

    pub fn plackets(&self) -> &[SpinConfiguration] {
        &self.plackets
    }

    /// Cached exchange energy of placket `lambda`.
    pub fn energy(&self, lambda: usize) -> i64 {
        self.energies[lambda]
    }

    /// Mean raw exchange energy over the `L` plackets.
    pub fn mean_raw_energy(&self) -> f64 {
        self.energy_sum as f64 / self.len() as f64
    }

    /// Mean intensive energy density over the `L` plackets.
    pub fn mean_energy_density(&self) -> f64 {
        self.mean_raw_energy() / (self.n_spins() as f64).powf(1.5)
    }

    /// The lowest-energy placket: `(index, configuration, raw energy)`.
    /// This is the final-state readout of an annealing run.
    pub fn min_energy_placket(&self) -> (usize, SpinConfiguration, i64) {
        let (idx, &e) = self
            .energies
            .iter()
            .enumerate()
            .min_by_key(|&(_, &e)| e)
            .expect("chain has at least two plackets");
        (idx, self.plackets[idx], e)
    }

    /// A move is allowed when each ring neighbor either equals the visited
    /// placket or differs from it exactly at the flipped spin. Allowed moves
    /// are exactly those whose post-move bonds stay at Hamming distance <= 1
    /// (the bond weights can still vanish through a zero diagonal; the
    /// acceptance ratio handles that case by rejecting).
    pub fn is_allowed(&self, mv: MoveProposal) -> bool {
        let len = self.len();
        let cur = self.plackets[mv.placket];
        let new = cur.flipped(mv.spin);
        let left = self.plackets[(mv.placket + len - 1) % len];
        let right = self.plackets[(mv.placket + 1) % len];
        (left == cur || left == new) && (right == cur || right == new)
    }

    /// Metropolis ratio for an allowed move: the product of the two post-move
    /// bonds over the two pre-move bonds. All other factors of the chain
    /// weight cancel. For `L = 2` both ring bonds touch the visited placket,
    /// and the left/right factors coincide, squaring the ratio as they must.
    ///
    /// At fixed `omega > 0` the denominator is positive on every reachable
    /// chain (zero-weight targets are never accepted); this is asserted. The
    /// one legal zero-denominator case is the annealing endgame: when the
    /// schedule reaches `omega = 0` with leftover off-diagonal bonds, the
    /// current state has zero weight under the new operator, and the move is
    /// resolved by its numerator (infinite for wall-collapsing moves into
    /// weight-positive states, zero otherwise).
    pub fn acceptance_ratio(&self, op: &TransferOperator, mv: MoveProposal) -> f64 {
        self.ratio_and_delta(op, mv).0
    }

    fn ratio_and_delta(&self, op: &TransferOperator, mv: MoveProposal) -> (f64, i64) {
        debug_assert!(std::sync::Arc::ptr_eq(&self.instance, op.instance()));
        debug_assert!(self.is_allowed(mv));
        let len = self.len();
        let cur = self.plackets[mv.placket];
        let new = cur.flipped(mv.spin);
        let delta = flip_delta(&self.instance, &cur, mv.spin)
            .expect("move indices are validated by the caller");
        let e_old = self.energies[mv.placket];
        let e_new = e_old + delta;
        let shift = op.shift() as f64;
        let omega = op.omega();

        // Bond against one neighbor before and after the flip: a neighbor
        // equal to the current placket sits on the diagonal now and moves to
        // an off-diagonal omega bond, and vice versa.
        let bond_pair = |neigh: SpinConfiguration| -> (f64, f64) {
            if neigh == cur {
                (shift - e_old as f64, omega)
            } else {
                debug_assert!(neigh == new);
                (omega, shift - e_new as f64)
            }
        };
        let (pre_l, post_l) = bond_pair(self.plackets[(mv.placket + len - 1) % len]);
        let (pre_r, post_r) = bond_pair(self.plackets[(mv.placket + 1) % len]);
        let numerator = post_l * post_r;
        let denominator = pre_l * pre_r;
        if denominator <= 0.0 {
            assert!(
                omega == 0.0,
                "zero-weight chain state at omega = {omega}: bonds ({pre_l}, {pre_r}) at placket {}",
                mv.placket
            );
            let ratio = if numerator > 0.0 { f64::INFINITY } else { 0.0 };
            return (ratio, delta);
        }
        (numerator / denominator, delta)
    }

    fn apply(&mut self, mv: MoveProposal, delta: i64) {
        self.plackets[mv.placket] = self.plackets[mv.placket].flipped(mv.spin);
        self.energies[mv.placket] += delta;
        self.energy_sum += delta;
    }

    /// One Monte Carlo step: `L` visits, each drawing a placket and a spin
    /// uniformly (with replacement). Disallowed proposals count as completed
    /// visits; allowed ones are accepted with probability `min(1, ratio)`.
    pub fn mc_step<R: Rng>(&mut self, op: &TransferOperator, rng: &mut R) -> StepStats {
        let len = self.len();
        let n = self.n_spins();
        let mut stats = StepStats::default();
        for _ in 0..len {
            stats.visits += 1;
            let mv = MoveProposal {
                placket: rng.gen_range(0..len),
                spin: rng.gen_range(0..n),
            };
            if !self.is_allowed(mv) {
                continue;
            }
            stats.allowed += 1;
            let (ratio, delta) = self.ratio_and_delta(op, mv);
            if ratio >= 1.0 || rng.gen::<f64>() < ratio {
                self.apply(mv, delta);
                stats.accepted += 1;
            }
        }
        stats
    }

    /// Instantaneous trajectory sample.
    pub fn measure(&self, step: u64, omega: f64, accept_rate: f64) -> MeasurementRecord {
        MeasurementRecord {
            step,
            omega,
            energy_density: self.mean_energy_density(),
            accept_rate,
        }
    }

    /// Log weight of the chain state: the sum of log bond elements around
    /// the ring, or negative infinity for a zero-weight state. Used by
    /// oracles and tests only; elements are recomputed from scratch.
    pub fn log_weight(&self, op: &TransferOperator) -> f64 {
        let len = self.len();
        let mut sum = 0.0;
        for lambda in 0..len {
            let w = op
                .w_element(&self.plackets[lambda], &self.plackets[(lambda + 1) % len])
                .expect("chain plackets are sized for the instance");
            if w <= 0.0 {
                return f64::NEG_INFINITY;
            }
            sum += w.ln();
        }
        sum
    }

    /// Verify cached energies, the running sum, and the ring adjacency
    /// invariant against a recomputation from scratch.
    pub fn check_consistency(&self) -> Result<()> {
        let len = self.len();
        let mut sum = 0i64;
        for lambda in 0..len {
            let e = classical_energy(&self.instance, &self.plackets[lambda])?.raw;
            if e != self.energies[lambda] {
                return Err(Error::InvalidConfig(format!(
                    "cached energy {} at placket {lambda} differs from recomputed {e}",
                    self.energies[lambda]
                )));
            }
            sum += e;
            let d = self.plackets[lambda].hamming(&self.plackets[(lambda + 1) % len]);
            if d > 1 {
                return Err(Error::InvalidConfig(format!(
                    "plackets {lambda} and {} differ at {d} spins",
                    (lambda + 1) % len
                )));
            }
        }
        if sum != self.energy_sum {
            return Err(Error::InvalidConfig(format!(
                "energy sum cache {} differs from recomputed {sum}",
                self.energy_sum
            )));
        }
        Ok(())
    }

    /// Pack the chain state into a single key (`n_spins * len <= 64` bits).
    /// Only meant for desk-scale exact cross-checks.
    pub fn packed_state(&self) -> u64 {
        let n = self.n_spins();
        assert!(n * self.len() <= 64, "chain state does not fit in 64 bits");
        self.plackets
            .iter()
            .enumerate()
            .fold(0u64, |acc, (lambda, p)| acc | (p.bits() << (lambda * n)))
    }
}

/// Mean and a standard error honest under autocorrelation: batch means over
/// a geometric ladder of batch sizes, keeping the largest estimate (batch
/// means underestimate the error until the batches exceed the correlation
/// time, so the ladder picks up the plateau).
pub fn series_stats(series: &[f64]) -> (f64, f64) {
    let mut mean = f64::NAN;
    let mut stderr = f64::NAN;
    for n_batches in [50usize, 25, 10] {
        let (m, e) = batch_stats(series, n_batches);
        mean = m;
        if !e.is_finite() || stderr.is_nan() || e > stderr {
            stderr = e;
        }
    }
    (mean, stderr)
}

/// Aggregate a measured series into a mean and a batch-means standard error
/// (`n_batches` batches; falls back to the naive standard error when the
/// series is shorter than twice the batch count).
pub fn batch_stats(series: &[f64], n_batches: usize) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    if n < 2 * n_batches {
        let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let batch = n / n_batches;
    let used = batch * n_batches;
    let means: Vec<f64> = series[..used]
        .chunks(batch)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let m = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (mean, (var / n_batches as f64).sqrt())
}
