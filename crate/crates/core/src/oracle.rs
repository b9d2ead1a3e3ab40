//! Exact references: exhaustive classical search, density of states,
//! landscape probes, dominant-eigenpair extraction, and exact chain
//! enumeration. Everything here is independent of the Monte Carlo path it
//! is used to check.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{
    classical_energy, energy_table, flip_delta, intensive_density, SpinConfiguration,
    SpinGlassInstance,
};
use crate::transfer::TransferOperator;

/// Exhaustive search enumerates `2^(N-1)` configurations.
pub const EXHAUSTIVE_CAP: usize = 28;
/// The density of states enumerates all `2^N` configurations.
pub const DOS_CAP: usize = 24;
/// Power iteration holds two `2^N` vectors in memory.
pub const POWER_CAP: usize = 20;
/// Dense diagonalization of the full `2^N x 2^N` operator.
pub const DENSE_CAP: usize = 6;
/// Dense full diagonalization is attached to spectral results up to here.
pub const THETA2_CAP: usize = 4;

const REPRESENTATIVE_CAP: usize = 1000;

/// Exact classical ground state of one disorder realization.
#[derive(Debug, Clone)]
pub struct GroundStateReport {
    /// Minimum of the exchange energy over all `2^N` configurations.
    pub energy: i64,
    pub energy_density: f64,
    /// Ground configurations with the first spin fixed up, at most
    /// [`REPRESENTATIVE_CAP`] of them (the count is always exact).
    pub representatives: Vec<SpinConfiguration>,
    /// Number of ground configurations over both Z2 sectors (always even).
    pub degeneracy: u64,
}

/// Exact histogram of configuration counts per energy level.
#[derive(Debug, Clone)]
pub struct DensityOfStates {
    counts: BTreeMap<i64, u64>,
    n_spins: usize,
}

impl DensityOfStates {
    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn ground_energy(&self) -> i64 {
        *self.counts.keys().next().expect("histogram is never empty")
    }

    pub fn ground_count(&self) -> u64 {
        *self.counts.values().next().expect("histogram is never empty")
    }

    /// Largest level count (the mid-spectrum entropy peak).
    pub fn max_count(&self) -> u64 {
        *self.counts.values().max().expect("histogram is never empty")
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }
}

/// Trace of a strict-downhill single-spin-flip walk.
#[derive(Debug, Clone)]
pub struct GreedyReport {
    /// Energy at the start and after each accepted move (strictly decreasing).
    pub trace: Vec<i64>,
    /// Proposals consumed before certification or exhaustion of the budget.
    pub moves_used: u64,
    /// Whether the final state was certified as a local minimum (no single
    /// flip decreases the energy).
    pub local_minimum: bool,
    pub final_configuration: SpinConfiguration,
    pub final_energy: i64,
}

/// Dominant eigenpair of the transfer operator.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Dominant eigenvalue of `W`; the ground energy of `H_tot` is `C - theta1`.
    pub theta1: f64,
    /// Normalized non-negative amplitudes over basis states, indexed by bits.
    pub amplitudes: Vec<f64>,
    /// `sum_k amplitudes[k]^2 * E_k`, the classical-energy expectation.
    pub classical_expectation: f64,
    pub intensive_expectation: f64,
    /// Subdominant eigenvalue magnitude from dense diagonalization (tiny N only).
    pub theta2: Option<f64>,
    pub iterations: u64,
}

/// Convergence controls for [`dominant_eigenpair`].
///
/// Convergence requires the relative eigenvalue change to stay below `tol`
/// for 10 consecutive iterations AND the relative residual `|Wv - theta v|
/// / theta` to drop below `residual_tol` (the eigenvalue stabilizes long
/// before the amplitudes do, and the classical expectation is first-order
/// in the amplitude error). Near-degenerate dominant pairs can leave the
/// residual stuck at the splitting scale; a 500-iteration stagnation of the
/// residual together with a stable eigenvalue is accepted as converged.
#[derive(Debug, Clone, Copy)]
pub struct PowerSettings {
    pub tol: f64,
    pub residual_tol: f64,
    pub max_iter: u64,
}

impl Default for PowerSettings {
    fn default() -> Self {
        PowerSettings {
            tol: 1e-12,
            residual_tol: 1e-13,
            max_iter: 2_000_000,
        }
    }
}

/// Exact placket marginal of the length-`L` chain against the squared
/// dominant amplitudes, both from dense arithmetic.
#[derive(Debug, Clone)]
pub struct MarginalReport {
    pub chain_len: usize,
    /// `P(mu = k) = (W^L)_kk / trace(W^L)`, indexed by bits.
    pub marginal: Vec<f64>,
    /// Squared dominant-eigenvector amplitudes, indexed by bits.
    pub gamma_sq: Vec<f64>,
    /// `max_k |P(mu = k) - gamma_k^2|`.
    pub max_deviation: f64,
    pub theta1: f64,
    /// Subdominant eigenvalue magnitude.
    pub theta2: f64,
}

impl MarginalReport {
    /// Expected per-`ΔL = 2` decay factor of the deviation.
    pub fn theta_ratio_sq(&self) -> f64 {
        (self.theta2 / self.theta1).powi(2)
    }
}

fn cap_error(what: &'static str, n: usize, cap: usize, states: f64) -> Error {
    Error::CapExceeded {
        what,
        n,
        cap,
        cost: format!("{states:.2e}"),
    }
}

/// Exact minimum of the exchange energy over all `2^N` configurations.
///
/// Enumerates the half-space with the first spin fixed up in Gray-code
/// order with incremental O(N) updates, range-partitioned across workers;
/// the Z2 mirror doubles the degeneracy. The result is independent of the
/// partitioning.
pub fn exhaustive_ground_state(inst: &SpinGlassInstance) -> Result<GroundStateReport> {
    exhaustive_ground_state_with_cap(inst, EXHAUSTIVE_CAP)
}

pub fn exhaustive_ground_state_with_cap(
    inst: &SpinGlassInstance,
    cap: usize,
) -> Result<GroundStateReport> {
    let n = inst.n_spins();
    if n > cap {
        return Err(cap_error(
            "exhaustive search",
            n,
            cap,
            2f64.powi(n as i32 - 1),
        ));
    }
    let half: u64 = 1 << (n - 1);
    let workers = rayon::current_num_threads().max(1);
    let chunks = (workers * 8).min(half as usize).max(1) as u64;
    let span = half.div_ceil(chunks);

    struct Chunk {
        min_energy: i64,
        count: u64,
        reps: Vec<u64>,
    }

    let results: Vec<Chunk> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * span;
            let end = ((chunk + 1) * span).min(half);
            let mut out = Chunk {
                min_energy: i64::MAX,
                count: 0,
                reps: Vec::new(),
            };
            if start >= end {
                return out;
            }
            // spin 0 fixed up; free spins 1..n follow the Gray code of f
            let gray = start ^ (start >> 1);
            let mut config = SpinConfiguration::from_bits((gray << 1) | 1, n);
            let mut energy = classical_energy(inst, &config)
                .expect("configuration built for this instance")
                .raw;
            let record = |energy: i64, bits: u64, out: &mut Chunk| {
                if energy < out.min_energy {
                    out.min_energy = energy;
                    out.count = 1;
                    out.reps.clear();
                    out.reps.push(bits);
                } else if energy == out.min_energy {
                    out.count += 1;
                    if out.reps.len() < REPRESENTATIVE_CAP {
                        out.reps.push(bits);
                    }
                }
            };
            record(energy, config.bits(), &mut out);
            for f in (start + 1)..end {
                let spin = f.trailing_zeros() as usize + 1;
                energy += flip_delta(inst, &config, spin)
                    .expect("spin index < n by Gray-code construction");
                config = config.flipped(spin);
                record(energy, config.bits(), &mut out);
            }
            out
        })
        .collect();

    let min_energy = results
        .iter()
        .filter(|c| c.count > 0)
        .map(|c| c.min_energy)
        .min()
        .expect("at least one chunk is non-empty");
    let mut representatives = Vec::new();
    let mut half_count = 0u64;
    for chunk in &results {
        if chunk.count > 0 && chunk.min_energy == min_energy {
            half_count += chunk.count;
            for &bits in &chunk.reps {
                if representatives.len() < REPRESENTATIVE_CAP {
                    representatives.push(SpinConfiguration::from_bits(bits, n));
                }
            }
        }
    }
    Ok(GroundStateReport {
        energy: min_energy,
        energy_density: intensive_density(min_energy, n),
        representatives,
        degeneracy: 2 * half_count,
    })
}

/// Exact histogram over all `2^N` configurations (Gray-code sweep).
pub fn density_of_states(inst: &SpinGlassInstance) -> Result<DensityOfStates> {
    let n = inst.n_spins();
    if n > DOS_CAP {
        return Err(cap_error("density of states", n, DOS_CAP, 2f64.powi(n as i32)));
    }
    let c = inst.pair_count();
    // energies live on the parity lattice -C..=C with spacing 2
    let mut slots = vec![0u64; c as usize + 1];
    let mut config = SpinConfiguration::all_down(n);
    let mut energy = classical_energy(inst, &config)?.raw;
    slots[((energy + c) / 2) as usize] += 1;
    for t in 1..(1u64 << n) {
        let spin = t.trailing_zeros() as usize;
        energy += flip_delta(inst, &config, spin)?;
        config = config.flipped(spin);
        slots[((energy + c) / 2) as usize] += 1;
    }
    let counts = slots
        .into_iter()
        .enumerate()
        .filter(|&(_, count)| count > 0)
        .map(|(slot, count)| (2 * slot as i64 - c, count))
        .collect();
    Ok(DensityOfStates { counts, n_spins: n })
}

/// Energies along the deterministic path that flips spins one by one in
/// index order, from all-up to all-down. `N + 1` entries; the endpoints
/// coincide by Z2 symmetry.
pub fn flip_path_profile(inst: &SpinGlassInstance) -> Vec<i64> {
    let n = inst.n_spins();
    let mut config = SpinConfiguration::all_up(n);
    let mut energy = classical_energy(inst, &config)
        .expect("all-up is sized for the instance")
        .raw;
    let mut profile = Vec::with_capacity(n + 1);
    profile.push(energy);
    for i in 0..n {
        energy += flip_delta(inst, &config, i).expect("index in range");
        config = config.flipped(i);
        profile.push(energy);
    }
    profile
}

/// No single flip decreases the energy.
pub fn is_local_minimum(inst: &SpinGlassInstance, c: &SpinConfiguration) -> Result<bool> {
    for i in 0..inst.n_spins() {
        if flip_delta(inst, c, i)? < 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strict-downhill walk: flip a random spin, accept only if the energy
/// decreases. Stops early once the state is certified as a local minimum
/// (later proposals could not change it).
pub fn greedy_downhill(
    inst: &SpinGlassInstance,
    start: SpinConfiguration,
    max_moves: u64,
    seed: u64,
) -> Result<GreedyReport> {
    if max_moves == 0 {
        return Err(Error::InvalidConfig("greedy walk needs at least one move".into()));
    }
    let n = inst.n_spins();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut config = start;
    let mut energy = classical_energy(inst, &config)?.raw;
    let mut trace = vec![energy];
    let mut local_minimum = is_local_minimum(inst, &config)?;
    let mut moves_used = 0u64;
    while !local_minimum && moves_used < max_moves {
        moves_used += 1;
        let i = rng.gen_range(0..n);
        let delta = flip_delta(inst, &config, i)?;
        if delta < 0 {
            config = config.flipped(i);
            energy += delta;
            trace.push(energy);
            local_minimum = is_local_minimum(inst, &config)?;
        }
    }
    Ok(GreedyReport {
        trace,
        moves_used,
        local_minimum,
        final_configuration: config,
        final_energy: energy,
    })
}

/// Dominant eigenpair of `W` by power iteration on the implicit row action.
///
/// The start vector is the uniform superposition: strictly positive (hence
/// overlapping the Perron vector) and exactly Z2-symmetric. The iteration
/// preserves that symmetry bit-for-bit, so convergence is governed by the
/// gap within the symmetric sector and never by the exponentially small
/// tunneling splitting to the antisymmetric partner of the ground state.
pub fn dominant_eigenpair(
    op: &TransferOperator,
    settings: PowerSettings,
) -> Result<SpectralResult> {
    let n = op.n_spins();
    if n > POWER_CAP {
        return Err(cap_error("power iteration", n, POWER_CAP, 2f64.powi(n as i32)));
    }
    if op.omega() == 0.0 {
        return Err(Error::DegenerateDominant);
    }
    let energies = energy_table(op.instance())?;
    let dim = 1usize << n;
    let shift = op.shift() as f64;
    let omega = op.omega();

    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut w = vec![0.0f64; dim];
    let mut prev_theta = f64::NAN;
    let mut stable = 0u32;
    let mut best_residual = f64::INFINITY;
    let mut stagnant = 0u32;

    for iteration in 1..=settings.max_iter {
        // w = W v
        for (k, wk) in w.iter_mut().enumerate() {
            let mut acc = (shift - energies[k] as f64) * v[k];
            let mut hop = 0.0;
            for i in 0..n {
                hop += v[k ^ (1 << i)];
            }
            acc += omega * hop;
            *wk = acc;
        }
        // v is normalized, so the Rayleigh quotient is a plain dot product;
        // the residual norm is accumulated component-wise (the shortcut
        // sqrt(|Wv|^2 - theta^2) cancels catastrophically near convergence)
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let residual = v
            .iter()
            .zip(&w)
            .map(|(&vk, &wk)| (wk - theta * vk).powi(2))
            .sum::<f64>()
            .sqrt();

        if (theta - prev_theta).abs() <= settings.tol * theta.abs() {
            stable += 1;
        } else {
            stable = 0;
        }
        prev_theta = theta;
        if residual < best_residual * (1.0 - 1e-3) {
            best_residual = residual;
            stagnant = 0;
        } else {
            stagnant += 1;
        }

        let norm = ww.sqrt();
        for (vk, wk) in v.iter_mut().zip(&w) {
            *vk = wk / norm;
        }

        if stable >= 10 && (residual <= settings.residual_tol * theta || stagnant >= 500) {
            let norm_check: f64 = v.iter().map(|x| x * x).sum();
            debug_assert!((norm_check - 1.0).abs() < 1e-10);
            let classical_expectation: f64 = v
                .iter()
                .zip(&energies)
                .map(|(a, &e)| a * a * e as f64)
                .sum();
            let theta2 = if n <= THETA2_CAP {
                let (thetas, _) = dense_spectrum(op)?;
                Some(thetas[1].abs())
            } else {
                None
            };
            return Ok(SpectralResult {
                theta1: theta,
                amplitudes: v,
                classical_expectation,
                intensive_expectation: classical_expectation / (n as f64).powf(1.5),
                theta2,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_iter,
        residual: best_residual / prev_theta.abs().max(f64::MIN_POSITIVE),
    })
}

/// Materialize `W` for dense oracles (tiny N only).
pub fn dense_w_matrix(op: &TransferOperator) -> Result<DMatrix<f64>> {
    let n = op.n_spins();
    if n > DENSE_CAP {
        return Err(cap_error("dense operator", n, DENSE_CAP, 4f64.powi(n as i32)));
    }
    let energies = energy_table(op.instance())?;
    let dim = 1usize << n;
    let shift = op.shift() as f64;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        m[(k, k)] = shift - energies[k] as f64;
        for i in 0..n {
            m[(k, k ^ (1 << i))] = op.omega();
        }
    }
    Ok(m)
}

/// Full spectrum of the dense operator, sorted by eigenvalue magnitude
/// (descending), with matching eigenvector columns.
pub fn dense_spectrum(op: &TransferOperator) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = dense_w_matrix(op)?;
    let dim = m.nrows();
    let eigen = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .abs()
            .partial_cmp(&eigen.eigenvalues[a].abs())
            .expect("eigenvalues are finite")
    });
    let thetas: Vec<f64> = order.iter().map(|&i| eigen.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eigen.eigenvectors.column(i));
    }
    Ok((thetas, vectors))
}

/// Exact placket marginal `P(mu = k) = (W^L)_kk / trace(W^L)` of the
/// length-`L` chain, compared against the squared dominant amplitudes.
pub fn exact_chain_marginal(op: &TransferOperator, chain_len: usize) -> Result<MarginalReport> {
    if chain_len < 2 {
        return Err(Error::ChainTooShort(chain_len));
    }
    if op.omega() == 0.0 {
        return Err(Error::DegenerateDominant);
    }
    let w = dense_w_matrix(op)?;
    let dim = w.nrows();
    let mut power = w.clone();
    for _ in 1..chain_len {
        power = &power * &w;
    }
    let trace: f64 = (0..dim).map(|k| power[(k, k)]).sum();
    let marginal: Vec<f64> = (0..dim).map(|k| power[(k, k)] / trace).collect();

    let (thetas, vectors) = dense_spectrum(op)?;
    let gamma_sq: Vec<f64> = (0..dim).map(|k| vectors[(k, 0)].powi(2)).collect();
    let max_deviation = marginal
        .iter()
        .zip(&gamma_sq)
        .map(|(m, g)| (m - g).abs())
        .fold(0.0f64, f64::max);
    Ok(MarginalReport {
        chain_len,
        marginal,
        gamma_sq,
        max_deviation,
        theta1: thetas[0],
        theta2: thetas[1].abs(),
    })
}

/// Every weight-positive chain state of a length-`L` ring with its Eq.-style
/// product weight, enumerated by depth-first search pruned to bonds with
/// nonzero elements. Keys are placket bit patterns in ring order.
pub fn chain_state_weights(
    op: &TransferOperator,
    chain_len: usize,
) -> Result<Vec<(Vec<u64>, f64)>> {
    let n = op.n_spins();
    if n > 4 || chain_len > 12 {
        return Err(cap_error(
            "chain-state enumeration",
            n,
            4,
            ((1u64 << n) as f64) * ((n + 1) as f64).powi(chain_len as i32 - 1),
        ));
    }
    if chain_len < 2 {
        return Err(Error::ChainTooShort(chain_len));
    }
    let dim = 1u64 << n;
    let element = |a: u64, b: u64| -> f64 {
        op.w_element(
            &SpinConfiguration::from_bits(a, n),
            &SpinConfiguration::from_bits(b, n),
        )
        .expect("bits fit the instance")
    };
    // adjacency restricted to nonzero elements (prunes zero diagonals too)
    let neighbors: Vec<Vec<u64>> = (0..dim)
        .map(|a| (0..dim).filter(|&b| element(a, b) > 0.0).collect())
        .collect();

    let mut states = Vec::new();
    let mut path = Vec::with_capacity(chain_len);
    fn extend(
        path: &mut Vec<u64>,
        weight: f64,
        chain_len: usize,
        neighbors: &[Vec<u64>],
        element: &dyn Fn(u64, u64) -> f64,
        states: &mut Vec<(Vec<u64>, f64)>,
    ) {
        if path.len() == chain_len {
            let closing = element(path[chain_len - 1], path[0]);
            if closing > 0.0 {
                states.push((path.clone(), weight * closing));
            }
            return;
        }
        let last = *path.last().expect("path starts non-empty");
        for &next in &neighbors[last as usize] {
            path.push(next);
            extend(path, weight * element(last, next), chain_len, neighbors, element, states);
            path.pop();
        }
    }
    for first in 0..dim {
        path.push(first);
        extend(&mut path, 1.0, chain_len, &neighbors, &element, &mut states);
        path.pop();
    }
    Ok(states)
}

/// Pack a ring of placket bit patterns into the key format of
/// [`crate::chain::PlacketChain::packed_state`].
pub fn pack_chain_state(plackets: &[u64], n_spins: usize) -> u64 {
    assert!(n_spins * plackets.len() <= 64);
    plackets
        .iter()
        .enumerate()
        .fold(0u64, |acc, (lambda, &bits)| acc | (bits << (lambda * n_spins)))
}

/// Exact stationary distribution of the restricted Markov process started
/// from a uniform chain of `c0`: breadth-first search over accepted-move
/// reachability, with the product weights normalized over the reachable
/// class. For instances with configurations at `E = +C` the move graph can
/// split into symmetric ergodic classes, so the reachable class rather than
/// the full state space is the correct reference for a single chain.
pub fn reachable_chain_distribution(
    op: &TransferOperator,
    c0: SpinConfiguration,
    chain_len: usize,
) -> Result<HashMap<u64, f64>> {
    let n = op.n_spins();
    if n * chain_len > 64 {
        return Err(cap_error(
            "reachable-chain enumeration",
            n,
            64 / chain_len.max(1),
            2f64.powi((n * chain_len) as i32),
        ));
    }
    if chain_len < 2 {
        return Err(Error::ChainTooShort(chain_len));
    }
    let element = |a: u64, b: u64| -> f64 {
        op.w_element(
            &SpinConfiguration::from_bits(a, n),
            &SpinConfiguration::from_bits(b, n),
        )
        .expect("bits fit the instance")
    };
    let start = vec![c0.bits(); chain_len];
    if element(start[0], start[0]) <= 0.0 {
        return Err(Error::InvalidConfig(
            "uniform start chain has zero weight (C - E = 0)".into(),
        ));
    }
    let weight_of = |state: &[u64]| -> f64 {
        (0..chain_len)
            .map(|lambda| element(state[lambda], state[(lambda + 1) % chain_len]))
            .product()
    };

    let mut seen: HashMap<u64, f64> = HashMap::new();
    seen.insert(pack_chain_state(&start, n), weight_of(&start));
    let mut queue = VecDeque::from([start]);
    while let Some(state) = queue.pop_front() {
        for lambda in 0..chain_len {
            for spin in 0..n {
                let cur = state[lambda];
                let new = cur ^ (1 << spin);
                let left = state[(lambda + chain_len - 1) % chain_len];
                let right = state[(lambda + 1) % chain_len];
                // the restricted-move rule, then nonzero post-move bonds
                if !((left == cur || left == new) && (right == cur || right == new)) {
                    continue;
                }
                if element(left, new) <= 0.0 || element(new, right) <= 0.0 {
                    continue;
                }
                let mut next = state.clone();
                next[lambda] = new;
                let key = pack_chain_state(&next, n);
                if !seen.contains_key(&key) {
                    let w = weight_of(&next);
                    debug_assert!(w > 0.0);
                    seen.insert(key, w);
                    queue.push_back(next);
                }
            }
        }
    }
    let total: f64 = seen.values().sum();
    for w in seen.values_mut() {
        *w /= total;
    }
    Ok(seen)
}
