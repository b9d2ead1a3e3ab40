//! Disorder realizations of the infinite-range ±J Ising cluster and exact
//! integer energy arithmetic.
//!
//! A realization is the upper-triangular table of couplings `J_ij ∈ {-1,+1}`
//! for `1 <= i < j <= N`. The classical energy of a spin configuration `s`
//! is `-sum_{i<j} J_ij s_i s_j`, kept in exact signed integers; division by
//! `N^(3/2)` (the intensive density) happens only at reporting boundaries.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Configurations are packed into a `u64`, which caps the system size.
pub const MAX_SPINS: usize = 63;

/// Memory cap for [`energy_table`]: the table has `2^N` entries.
pub const ENERGY_TABLE_CAP: usize = 26;

/// One ±J disorder realization: `N` spins, all pairs coupled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinGlassInstance {
    n_spins: usize,
    /// Row-major over `i < j`, each entry -1 or +1.
    couplings: Vec<i8>,
    /// Seed that generated `couplings` (provenance; couplings are authoritative).
    seed: u64,
}

/// An N-bit classical Ising configuration. Bit `i` encodes spin `i`:
/// bit 0 maps to spin -1, bit 1 to spin +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    bits: u64,
    n_spins: usize,
}

/// A classical energy in units of J, with its intensive density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    /// Exact value of the exchange energy.
    pub raw: i64,
    /// `raw / N^(3/2)`.
    pub intensive: f64,
}

impl EnergyValue {
    pub fn new(raw: i64, n_spins: usize) -> Self {
        EnergyValue {
            raw,
            intensive: intensive_density(raw, n_spins),
        }
    }
}

/// Scale a raw exchange energy to the intensive density `raw / N^(3/2)`.
pub fn intensive_density(raw: i64, n_spins: usize) -> f64 {
    raw as f64 / (n_spins as f64).powf(1.5)
}

/// Draw a disorder realization with every coupling independently ±1.
///
/// The generator is pinned for reproducibility: a `ChaCha12Rng` seeded via
/// `seed_from_u64(seed)` emits one 32-bit word per coupling in row-major
/// order over `i < j`; the low bit selects +1 (set) or -1 (clear). Changing
/// this scheme is a breaking format change.
pub fn random_instance(n: usize, seed: u64) -> Result<SpinGlassInstance> {
    if !(2..=MAX_SPINS).contains(&n) {
        return Err(Error::InvalidSize { got: n, max: MAX_SPINS });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pairs = n * (n - 1) / 2;
    let couplings = (0..pairs)
        .map(|_| if rng.next_u32() & 1 == 1 { 1i8 } else { -1i8 })
        .collect();
    Ok(SpinGlassInstance { n_spins: n, couplings, seed })
}

impl SpinGlassInstance {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of coupled pairs, `C = N(N-1)/2`. Also the spectral shift of
    /// the transfer operator and the maximum `|energy|`.
    pub fn pair_count(&self) -> i64 {
        (self.n_spins * (self.n_spins - 1) / 2) as i64
    }

    /// Coupling between distinct spins `i` and `j` (order irrelevant).
    pub fn coupling(&self, i: usize, j: usize) -> i64 {
        debug_assert!(i != j && i < self.n_spins && j < self.n_spins);
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // row-major upper triangle: rows 0..a fully before (a, b)
        let idx = a * (2 * self.n_spins - a - 1) / 2 + (b - a - 1);
        self.couplings[idx] as i64
    }

    pub fn couplings(&self) -> &[i8] {
        &self.couplings
    }

    /// Build an instance from an explicit coupling table (row-major over
    /// `i < j`). `seed` is recorded as provenance only.
    pub fn from_couplings(n: usize, couplings: Vec<i8>, seed: u64) -> Result<Self> {
        if !(2..=MAX_SPINS).contains(&n) {
            return Err(Error::InvalidSize { got: n, max: MAX_SPINS });
        }
        if couplings.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidInstanceFile(format!(
                "expected {} couplings for n = {n}, found {}",
                n * (n - 1) / 2,
                couplings.len()
            )));
        }
        if couplings.iter().any(|&j| j != 1 && j != -1) {
            return Err(Error::InvalidInstanceFile("couplings must be ±1".into()));
        }
        Ok(SpinGlassInstance { n_spins: n, couplings, seed })
    }

    /// All couplings +1: the unfrustrated reference instance.
    pub fn ferromagnet(n: usize) -> Result<Self> {
        Self::from_couplings(n, vec![1; n * (n - 1) / 2], 0)
    }

    fn check_config(&self, c: &SpinConfiguration) -> Result<()> {
        if c.n_spins != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                got: c.n_spins,
            });
        }
        Ok(())
    }

    /// Serialize as the instance JSON interchange object.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            n: self.n_spins,
            seed: self.seed,
            couplings: self.couplings.iter().map(|&j| j as i64).collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    /// Parse and validate the instance JSON interchange object. The
    /// couplings field is authoritative; `(n, seed)` is provenance.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstanceFile(e.to_string()))?;
        if !(2..=MAX_SPINS).contains(&file.n) {
            return Err(Error::InvalidInstanceFile(format!(
                "n = {} outside supported range 2..={MAX_SPINS}",
                file.n
            )));
        }
        let pairs = file.n * (file.n - 1) / 2;
        if file.couplings.len() != pairs {
            return Err(Error::InvalidInstanceFile(format!(
                "expected {pairs} couplings for n = {}, found {}",
                file.n,
                file.couplings.len()
            )));
        }
        let couplings = file
            .couplings
            .iter()
            .map(|&j| match j {
                1 => Ok(1i8),
                -1 => Ok(-1i8),
                other => Err(Error::InvalidInstanceFile(format!(
                    "coupling {other} is not ±1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpinGlassInstance {
            n_spins: file.n,
            couplings,
            seed: file.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    seed: u64,
    couplings: Vec<i64>,
}

impl SpinConfiguration {
    pub fn from_bits(bits: u64, n_spins: usize) -> Self {
        debug_assert!(n_spins >= 1 && n_spins <= MAX_SPINS);
        SpinConfiguration {
            bits: bits & mask(n_spins),
            n_spins,
        }
    }

    pub fn all_up(n_spins: usize) -> Self {
        Self::from_bits(mask(n_spins), n_spins)
    }

    pub fn all_down(n_spins: usize) -> Self {
        Self::from_bits(0, n_spins)
    }

    pub fn random<R: Rng>(n_spins: usize, rng: &mut R) -> Self {
        Self::from_bits(rng.gen::<u64>(), n_spins)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Spin value at site `i`, as ±1.
    #[inline]
    pub fn spin(&self, i: usize) -> i64 {
        debug_assert!(i < self.n_spins);
        ((self.bits >> i) & 1) as i64 * 2 - 1
    }

    /// Copy with spin `i` flipped.
    #[inline]
    pub fn flipped(&self, i: usize) -> Self {
        debug_assert!(i < self.n_spins);
        SpinConfiguration {
            bits: self.bits ^ (1 << i),
            n_spins: self.n_spins,
        }
    }

    /// Number of spins on which the two configurations differ.
    #[inline]
    pub fn hamming(&self, other: &Self) -> u32 {
        debug_assert_eq!(self.n_spins, other.n_spins);
        (self.bits ^ other.bits).count_ones()
    }
}

impl std::fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n_spins {
            f.write_str(if (self.bits >> i) & 1 == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

#[inline]
fn mask(n_spins: usize) -> u64 {
    u64::MAX >> (64 - n_spins)
}

/// Exact classical exchange energy `-sum_{i<j} J_ij s_i s_j`.
pub fn classical_energy(inst: &SpinGlassInstance, c: &SpinConfiguration) -> Result<EnergyValue> {
    inst.check_config(c)?;
    let n = inst.n_spins;
    let mut sum = 0i64;
    let mut idx = 0usize;
    for i in 0..n {
        let si = c.spin(i);
        for j in (i + 1)..n {
            sum += inst.couplings[idx] as i64 * si * c.spin(j);
            idx += 1;
        }
    }
    Ok(EnergyValue::new(-sum, n))
}

/// Exact energy change from flipping spin `i`:
/// `2 s_i sum_{j != i} J_ij s_j`. O(N) instead of a full recomputation.
///
/// This is the Monte Carlo hot path: couplings to `j > i` sit in one
/// contiguous slice, couplings to `j < i` are reached by walking the row
/// offsets instead of recomputing triangular indices.
pub fn flip_delta(inst: &SpinGlassInstance, c: &SpinConfiguration, i: usize) -> Result<i64> {
    inst.check_config(c)?;
    let n = inst.n_spins;
    if i >= n {
        return Err(Error::SpinIndexOutOfRange { index: i, n_spins: n });
    }
    let couplings = &inst.couplings;
    let mut field = 0i64;
    // j < i: entry (j, i) lives at row_start(j) + (i - j - 1)
    let mut row_start = 0usize;
    for j in 0..i {
        field += couplings[row_start + i - j - 1] as i64 * c.spin(j);
        row_start += n - 1 - j;
    }
    // j > i: row i is contiguous
    for (offset, &coupling) in couplings[row_start..row_start + (n - 1 - i)]
        .iter()
        .enumerate()
    {
        field += coupling as i64 * c.spin(i + 1 + offset);
    }
    Ok(2 * c.spin(i) * field)
}

/// All spins negated. The classical energy is invariant under this Z2 map.
pub fn global_flip(c: &SpinConfiguration) -> SpinConfiguration {
    SpinConfiguration {
        bits: !c.bits & mask(c.n_spins),
        n_spins: c.n_spins,
    }
}

/// Classical energies of every configuration, indexed by the bit pattern.
///
/// Filled by a Gray-code sweep with incremental flip deltas, O(N) per state.
/// Capped by memory: the table has `2^N` entries.
pub fn energy_table(inst: &SpinGlassInstance) -> Result<Vec<i64>> {
    let n = inst.n_spins;
    if n > ENERGY_TABLE_CAP {
        return Err(Error::CapExceeded {
            what: "energy table",
            n,
            cap: ENERGY_TABLE_CAP,
            cost: format!("2^{n} = {:.2e}", (1u64 << n) as f64),
        });
    }
    let dim = 1usize << n;
    let mut table = vec![0i64; dim];
    let mut config = SpinConfiguration::all_down(n);
    let mut energy = classical_energy(inst, &config)?.raw;
    table[0] = energy;
    for t in 1..dim as u64 {
        // Binary-reflected Gray code: g(t) differs from g(t-1) at bit tz(t).
        let bit = t.trailing_zeros() as usize;
        energy += flip_delta(inst, &config, bit)?;
        config = config.flipped(bit);
        table[config.bits() as usize] = energy;
    }
    Ok(table)
}

/// Convenience alias used across modules: instances are immutable and shared.
pub type SharedInstance = Arc<SpinGlassInstance>;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_sizes_below_two() {
        assert!(matches!(
            random_instance(0, 1),
            Err(Error::InvalidSize { .. })
        ));
        assert!(matches!(
            random_instance(1, 1),
            Err(Error::InvalidSize { .. })
        ));
        assert!(random_instance(2, 1).is_ok());
    }

    #[test]
    fn pair_counts() {
        let inst = random_instance(2, 7).unwrap();
        assert_eq!(inst.couplings().len(), 1);
        assert!(inst.couplings()[0] == 1 || inst.couplings()[0] == -1);
        let inst = random_instance(30, 7).unwrap();
        assert_eq!(inst.couplings().len(), 435);
        assert_eq!(inst.pair_count(), 435);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_instance(17, 12345).unwrap();
        let b = random_instance(17, 12345).unwrap();
        assert_eq!(a, b);
        let c = random_instance(17, 12346).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn two_spin_energies() {
        // J12 = +1: aligned spins satisfy the bond.
        let inst = ferromagnet(2);
        let up = SpinConfiguration::all_up(2);
        assert_eq!(classical_energy(&inst, &up).unwrap().raw, -1);
        let mixed = SpinConfiguration::from_bits(0b01, 2);
        assert_eq!(classical_energy(&inst, &mixed).unwrap().raw, 1);
    }

    #[test]
    fn ferromagnet_ground_energy() {
        for n in [3, 5, 10] {
            let inst = ferromagnet(n);
            let up = SpinConfiguration::all_up(n);
            assert_eq!(
                classical_energy(&inst, &up).unwrap().raw,
                -inst.pair_count()
            );
        }
    }

    #[test]
    fn fixed_instance_matches_term_by_term_oracle() {
        let inst = random_instance(4, 99).unwrap();
        for bits in 0..16u64 {
            let c = SpinConfiguration::from_bits(bits, 4);
            // independent oracle: explicit loop over the 6 bond terms
            let mut e = 0i64;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    e -= inst.coupling(i, j) * c.spin(i) * c.spin(j);
                }
            }
            assert_eq!(classical_energy(&inst, &c).unwrap().raw, e);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let inst = random_instance(4, 1).unwrap();
        let c = SpinConfiguration::all_up(5);
        assert!(matches!(
            classical_energy(&inst, &c),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            flip_delta(&inst, &c, 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn flip_index_out_of_range() {
        let inst = random_instance(4, 1).unwrap();
        let c = SpinConfiguration::all_up(4);
        assert!(matches!(
            flip_delta(&inst, &c, 4),
            Err(Error::SpinIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn two_spin_flip_delta() {
        let inst = ferromagnet(2);
        let up = SpinConfiguration::all_up(2);
        assert_eq!(flip_delta(&inst, &up, 0).unwrap(), 2);
    }

    #[test]
    fn global_flip_examples() {
        let up = SpinConfiguration::all_up(5);
        assert_eq!(global_flip(&up), SpinConfiguration::all_down(5));
        assert_eq!(global_flip(&global_flip(&up)), up);
    }

    #[test]
    fn parity_invariant_exhaustive() {
        // raw ≡ N(N-1)/2 (mod 2): the energy is a sum of C terms, each ±1.
        for n in [2, 3, 5, 8, 12] {
            let inst = random_instance(n, 3 + n as u64).unwrap();
            let c_parity = inst.pair_count().rem_euclid(2);
            for bits in 0..(1u64 << n) {
                let c = SpinConfiguration::from_bits(bits, n);
                let e = classical_energy(&inst, &c).unwrap().raw;
                assert_eq!(e.rem_euclid(2), c_parity);
                assert!(e.abs() <= inst.pair_count());
            }
        }
    }

    #[test]
    fn energy_table_matches_direct_evaluation() {
        let inst = random_instance(8, 21).unwrap();
        let table = energy_table(&inst).unwrap();
        for bits in 0..(1u64 << 8) {
            let c = SpinConfiguration::from_bits(bits, 8);
            assert_eq!(table[bits as usize], classical_energy(&inst, &c).unwrap().raw);
        }
    }

    #[test]
    fn intensive_scaling() {
        // unfrustrated ground state density is -(N-1)/(2 sqrt(N))
        let n = 30usize;
        let d = intensive_density(-435, n);
        let expected = -(n as f64 - 1.0) / (2.0 * (n as f64).sqrt());
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let inst = random_instance(6, 42).unwrap();
        let text = inst.to_json();
        let back = SpinGlassInstance::from_json(&text).unwrap();
        assert_eq!(inst, back);

        assert!(SpinGlassInstance::from_json("{}").is_err());
        // wrong coupling count
        let bad = r#"{"n": 3, "seed": 0, "couplings": [1, -1]}"#;
        assert!(matches!(
            SpinGlassInstance::from_json(bad),
            Err(Error::InvalidInstanceFile(_))
        ));
        // entry out of alphabet
        let bad = r#"{"n": 3, "seed": 0, "couplings": [1, -1, 2]}"#;
        assert!(matches!(
            SpinGlassInstance::from_json(bad),
            Err(Error::InvalidInstanceFile(_))
        ));
    }

    fn ferromagnet(n: usize) -> SpinGlassInstance {
        SpinGlassInstance::ferromagnet(n).unwrap()
    }

    proptest! {
        #[test]
        fn flip_delta_matches_full_recomputation(
            n in 2usize..12,
            seed in 0u64..1000,
            bits in 0u64..4096,
            idx in 0usize..12,
        ) {
            let inst = random_instance(n, seed).unwrap();
            let c = SpinConfiguration::from_bits(bits, n);
            let i = idx % n;
            let delta = flip_delta(&inst, &c, i).unwrap();
            let before = classical_energy(&inst, &c).unwrap().raw;
            let after = classical_energy(&inst, &c.flipped(i)).unwrap().raw;
            prop_assert_eq!(delta, after - before);
            // involution: flipping back cancels exactly
            let back = flip_delta(&inst, &c.flipped(i), i).unwrap();
            prop_assert_eq!(delta + back, 0);
        }

        #[test]
        fn z2_symmetry(n in 2usize..12, seed in 0u64..1000, bits in 0u64..4096) {
            let inst = random_instance(n, seed).unwrap();
            let c = SpinConfiguration::from_bits(bits, n);
            let e = classical_energy(&inst, &c).unwrap().raw;
            let e_flipped = classical_energy(&inst, &global_flip(&c)).unwrap().raw;
            prop_assert_eq!(e, e_flipped);
        }
    }
}
