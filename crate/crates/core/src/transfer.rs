//! Implicit evaluation of the shifted operator `W = C·I - H_tot`, where
//! `H_tot` couples the classical exchange term to a transverse field of
//! strength `omega` and `C = N(N-1)/2`.
//!
//! In the classical basis, `W` has diagonal `C - E_k >= 0` and off-diagonal
//! `omega` between configurations one spin flip apart, zero otherwise. `W`
//! is never materialized: consumers evaluate single elements, so dimension
//! `2^N` never enters unless an oracle asks for it.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::instance::{classical_energy, energy_table, SharedInstance, SpinConfiguration};

/// Enumerating all `2^N` diagonal elements in [`TransferOperator::validate`].
pub const VALIDATE_CAP: usize = 12;

/// The transfer operator of the placket chain, evaluated element-wise.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    instance: SharedInstance,
    omega: f64,
    shift: i64,
}

impl TransferOperator {
    /// `omega = 0` is legal for element evaluation (the annealer reaches it)
    /// but spectral oracles reject it: the dominant eigenvalue degenerates.
    pub fn new(instance: SharedInstance, omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "transverse field must be finite and non-negative (got {omega})"
            )));
        }
        let shift = instance.pair_count();
        Ok(TransferOperator { instance, omega, shift })
    }

    pub fn instance(&self) -> &SharedInstance {
        &self.instance
    }

    pub fn n_spins(&self) -> usize {
        self.instance.n_spins()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `C = N(N-1)/2`, exactly.
    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// Diagonal element `C - E_k` (non-negative for every configuration).
    pub fn diagonal(&self, k: &SpinConfiguration) -> Result<f64> {
        let e = classical_energy(&self.instance, k)?.raw;
        Ok((self.shift - e) as f64)
    }

    /// Matrix element between two basis configurations:
    /// `C - E_k` on the diagonal, `omega` at Hamming distance 1, else 0.
    pub fn w_element(&self, k: &SpinConfiguration, l: &SpinConfiguration) -> Result<f64> {
        if k.n_spins() != self.instance.n_spins() || l.n_spins() != self.instance.n_spins() {
            return Err(Error::DimensionMismatch {
                expected: self.instance.n_spins(),
                got: if k.n_spins() != self.instance.n_spins() {
                    k.n_spins()
                } else {
                    l.n_spins()
                },
            });
        }
        Ok(match k.hamming(l) {
            0 => (self.shift - classical_energy(&self.instance, k)?.raw) as f64,
            1 => self.omega,
            _ => 0.0,
        })
    }

    /// Exhaustively confirm the Perron-Frobenius preconditions at desk scale:
    /// non-negativity of all `2^N` diagonal elements, symmetry on sampled
    /// pairs, and irreducibility via connectivity of the single-flip graph.
    ///
    /// `omega = 0` is reported as reducible (the off-diagonals vanish and
    /// every configuration becomes a closed subspace), not as an error.
    pub fn validate(&self) -> Result<ValidityReport> {
        let n = self.instance.n_spins();
        if n > VALIDATE_CAP {
            return Err(Error::CapExceeded {
                what: "transfer-operator validation",
                n,
                cap: VALIDATE_CAP,
                cost: format!("2^{n}"),
            });
        }
        let dim: u64 = 1 << n;
        let energies = energy_table(&self.instance)?;

        let mut min_diagonal = f64::INFINITY;
        let mut max_diagonal = f64::NEG_INFINITY;
        for &e in &energies {
            let d = (self.shift - e) as f64;
            min_diagonal = min_diagonal.min(d);
            max_diagonal = max_diagonal.max(d);
        }

        // symmetry spot checks on a deterministic sample of pairs
        let mut rng = ChaCha12Rng::seed_from_u64(self.instance.seed() ^ 0x57AB);
        let mut symmetry_ok = true;
        let pairs = 1000usize;
        for t in 0..pairs {
            let k = SpinConfiguration::from_bits(rng.gen_range(0..dim), n);
            let l = match t % 3 {
                0 => k,
                1 => k.flipped(rng.gen_range(0..n)),
                _ => SpinConfiguration::from_bits(rng.gen_range(0..dim), n),
            };
            if self.w_element(&k, &l)? != self.w_element(&l, &k)? {
                symmetry_ok = false;
            }
        }

        // irreducibility: breadth-first search over single-flip edges, which
        // carry weight omega; the walk covers the full hypercube iff omega > 0
        let irreducible = if self.omega > 0.0 {
            let mut seen = vec![false; dim as usize];
            let mut queue = VecDeque::from([0u64]);
            seen[0] = true;
            let mut visited = 1u64;
            while let Some(k) = queue.pop_front() {
                for i in 0..n {
                    let l = k ^ (1 << i);
                    if !seen[l as usize] {
                        seen[l as usize] = true;
                        visited += 1;
                        queue.push_back(l);
                    }
                }
            }
            visited == dim
        } else {
            false
        };

        Ok(ValidityReport {
            omega: self.omega,
            states_checked: dim,
            min_diagonal,
            max_diagonal,
            nonnegative: min_diagonal >= 0.0,
            symmetry_ok,
            symmetry_pairs_checked: pairs,
            irreducible,
        })
    }
}

/// Outcome of [`TransferOperator::validate`].
#[derive(Debug, Clone)]
pub struct ValidityReport {
    pub omega: f64,
    pub states_checked: u64,
    pub min_diagonal: f64,
    pub max_diagonal: f64,
    pub nonnegative: bool,
    pub symmetry_ok: bool,
    pub symmetry_pairs_checked: usize,
    pub irreducible: bool,
}

impl ValidityReport {
    /// All Perron-Frobenius preconditions hold.
    pub fn all_ok(&self) -> bool {
        self.nonnegative && self.symmetry_ok && self.irreducible
    }
}
