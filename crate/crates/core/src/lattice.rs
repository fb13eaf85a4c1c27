//! Finite lattice configurations and their densities.

use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functional::OccupancyProfile;
use crate::potential::Potential;

/// Default bound on `n^d`.
pub const DEFAULT_SITE_CAP: usize = 1 << 26;

/// Largest `n` accepted by [`riemann_discrepancy`].
pub const MAX_DISCREPANCY_N: usize = 4096;

/// Occupancy `η: {1..n}^d → {0, 1}`, stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct LatticeConfig {
    d: usize,
    n: usize,
    occupancy: BitVec,
}

impl LatticeConfig {
    pub fn new(d: usize, n: usize, occupancy: BitVec) -> Result<Self> {
        Self::with_cap(d, n, occupancy, DEFAULT_SITE_CAP)
    }

    pub fn with_cap(d: usize, n: usize, occupancy: BitVec, cap: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::Precondition("lattice needs d ≥ 1 and n ≥ 1".into()));
        }
        let sites = site_count(d, n).filter(|&s| s <= cap).ok_or_else(|| {
            Error::Precondition(format!("{n}^{d} sites exceed the cap of {cap}"))
        })?;
        if occupancy.len() != sites {
            return Err(Error::DimensionMismatch { expected: sites, found: occupancy.len() });
        }
        Ok(LatticeConfig { d, n, occupancy })
    }

    /// One-dimensional configuration from 0/1 values.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parse(format!("occupancy must be 0 or 1, got {b}")));
        }
        Self::new(1, bits.len(), bits.iter().map(|&b| b == 1).collect())
    }

    pub fn empty(d: usize, n: usize) -> Result<Self> {
        let sites = site_count(d, n).ok_or_else(|| Error::Precondition("lattice too large".into()))?;
        Self::new(d, n, bitvec![0; sites])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupancy(&self) -> &BitSlice {
        &self.occupancy
    }

    pub fn is_occupied(&self, site: usize) -> bool {
        self.occupancy[site]
    }

    pub fn set(&mut self, site: usize, occupied: bool) {
        self.occupancy.set(site, occupied);
    }

    pub fn particles(&self) -> usize {
        self.occupancy.count_ones()
    }

    /// Torus translation by `k` sites (one dimension).
    pub fn translated(&self, k: usize) -> Self {
        let n = self.sites();
        let mut occ = bitvec![0; n];
        for i in self.occupancy.iter_ones() {
            occ.set((i + k) % n, true);
        }
        LatticeConfig { d: self.d, n: self.n, occupancy: occ }
    }

    fn coords(&self, site: usize, out: &mut [usize]) {
        let mut s = site;
        for c in out.iter_mut().rev() {
            *c = s % self.n;
            s /= self.n;
        }
    }
}

fn site_count(d: usize, n: usize) -> Option<usize> {
    (0..d).try_fold(1usize, |acc, _| acc.checked_mul(n))
}

impl fmt::Debug for LatticeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeConfig({self})")
    }
}

/// Header line `d n` followed by the 0/1 string.
impl fmt::Display for LatticeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.d, self.n)?;
        for b in self.occupancy.iter() {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for LatticeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing `d n` header".into()))?;
        let mut it = header.split_whitespace().map(str::parse::<usize>);
        let (d, n) = match (it.next(), it.next(), it.next()) {
            (Some(Ok(d)), Some(Ok(n)), None) => (d, n),
            _ => return Err(Error::Parse(format!("bad header `{header}`"))),
        };
        let mut occ = BitVec::new();
        for line in lines {
            for ch in line.chars() {
                match ch {
                    '0' => occ.push(false),
                    '1' => occ.push(true),
                    c if c.is_whitespace() => {}
                    c => return Err(Error::Parse(format!("unexpected character `{c}` in occupancy string"))),
                }
            }
        }
        LatticeConfig::new(d, n, occ)
    }
}

/// `N_n(η) = n^(-d) Σ_I η(I)`.
pub fn particle_density(cfg: &LatticeConfig) -> f64 {
    cfg.particles() as f64 / cfg.sites() as f64
}

/// `ψ(n^(-1) |I - J|)` for lattice displacement `k` in one dimension.
pub(crate) fn pair_table_1d(pot: &Potential, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let steps = if pot.periodic { k.min(n - k) } else { k };
            pot.eval(steps as f64 / n as f64)
        })
        .collect()
}

/// `E_n(η) = n^(-2d) Σ_{I,J} η(I) η(J) ψ(n^(-1)|I - J|)` over ordered pairs,
/// diagonal included.
pub fn energy_density(cfg: &LatticeConfig, pot: &Potential) -> Result<f64> {
    if pot.dimension != cfg.d {
        return Err(Error::DimensionMismatch { expected: cfg.d, found: pot.dimension });
    }
    let n = cfg.n;
    let occupied: Vec<usize> = cfg.occupancy.iter_ones().collect();
    let row_sums: Vec<f64> = if cfg.d == 1 {
        let table = pair_table_1d(pot, n)?;
        occupied
            .par_iter()
            .map(|&i| {
                occupied
                    .iter()
                    .map(|&j| if pot.periodic { table[(j + n - i) % n] } else { table[i.abs_diff(j)] })
                    .sum()
            })
            .collect()
    } else {
        let axis: Vec<f64> = (0..n)
            .map(|k| {
                let steps = if pot.periodic { k.min(n - k) } else { k } as f64;
                steps * steps
            })
            .collect();
        occupied
            .par_iter()
            .map(|&i| -> Result<f64> {
                let mut ci = vec![0; cfg.d];
                let mut cj = vec![0; cfg.d];
                cfg.coords(i, &mut ci);
                let mut acc = 0.0;
                for &j in &occupied {
                    cfg.coords(j, &mut cj);
                    let sq: f64 = ci.iter().zip(&cj).map(|(a, b)| axis[a.abs_diff(*b)]).sum();
                    acc += pot.eval(sq.sqrt() / n as f64)?;
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?
    };
    let total: f64 = row_sums.iter().sum();
    Ok(total / (cfg.sites() as f64).powi(2))
}

/// Step profile `f^η` block-averaged onto `m` cells (one dimension).
pub fn profile(cfg: &LatticeConfig, m: usize) -> Result<OccupancyProfile> {
    if cfg.d != 1 {
        return Err(Error::Unsupported("profiles exist only in one dimension".into()));
    }
    let n = cfg.n;
    let values: Vec<f64> = if m == n || n.is_multiple_of(m) {
        let b = n / m;
        (0..m).map(|c| (c * b..(c + 1) * b).filter(|&s| cfg.occupancy[s]).count() as f64 / b as f64).collect()
    } else if m.is_multiple_of(n) {
        let b = m / n;
        (0..m).map(|c| if cfg.occupancy[c / b] { 1.0 } else { 0.0 }).collect()
    } else {
        return Err(Error::Precondition(format!("profile grid {m} incompatible with lattice size {n}")));
    };
    OccupancyProfile::new(values, true)
}

/// `n^(-2) Σ_{I,J} |ψ(n^(-1)|I - J|) - n² φ^{I,J}|`, the worst-case gap
/// between lattice energy and the continuum energy of `f^η`.
pub fn riemann_discrepancy(n: usize, pot: &Potential) -> Result<f64> {
    if pot.dimension != 1 {
        return Err(Error::Unsupported("discrepancy is computed in one dimension".into()));
    }
    if !(2..=MAX_DISCREPANCY_N).contains(&n) {
        return Err(Error::Precondition(format!("discrepancy needs 2 ≤ n ≤ {MAX_DISCREPANCY_N}, got {n}")));
    }
    let cells = pot.kernel_offsets(n);
    let point = pair_table_1d(pot, n)?;
    let nf = n as f64;
    let sum = if pot.periodic {
        // every row sees each offset once
        point.iter().zip(&cells).map(|(p, c)| (p - c).abs()).sum::<f64>() * nf
    } else {
        (0..n)
            .map(|k| {
                let mult = if k == 0 { nf } else { 2.0 * (n - k) as f64 };
                mult * (point[k] - cells[k]).abs()
            })
            .sum::<f64>()
    };
    Ok(sum / (nf * nf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{density_n, xi};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a2() -> Potential {
        Potential::power_plateau(0.5, 10.0).unwrap()
    }

    fn random_config(rng: &mut ChaCha8Rng, n: usize, p: f64) -> LatticeConfig {
        let bits: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(p))).collect();
        LatticeConfig::from_bits(&bits).unwrap()
    }

    #[test]
    fn particle_density_examples() {
        assert_eq!(particle_density(&LatticeConfig::empty(1, 7).unwrap()), 0.0);
        assert_eq!(particle_density(&LatticeConfig::from_bits(&[1, 1, 0, 1, 0]).unwrap()), 0.6);
        assert_eq!(particle_density(&LatticeConfig::from_bits(&[1; 9]).unwrap()), 1.0);
    }

    #[test]
    fn energy_two_cross_pairs() {
        // ψ ≡ 1 except ψ(0) = 0
        let pot = Potential::tabulated(vec![(0.0, 0.0), (1e-9, 1.0), (0.5, 1.0)], true, 1).unwrap();
        let cfg = LatticeConfig::from_bits(&[1, 1, 0, 0]).unwrap();
        assert_abs_diff_eq!(energy_density(&cfg, &pot).unwrap(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn single_particle_has_no_energy() {
        let mut cfg = LatticeConfig::empty(1, 10).unwrap();
        cfg.set(4, true);
        assert_eq!(energy_density(&cfg, &a2()).unwrap(), 0.0);
    }

    #[test]
    fn alternating_matches_brute_force() {
        let n = 8;
        let cfg = LatticeConfig::from_bits(&[1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        let pot = a2();
        // reference: plain double loop with explicit torus distance
        let mut reference = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i % 2 == 0 && j % 2 == 0 {
                    let k = (i as i64 - j as i64).unsigned_abs() as usize;
                    let t = k.min(n - k) as f64 / n as f64;
                    reference += if t == 0.0 { 0.0 } else if t < 0.25 { t.powf(-0.5) } else { 10.0 };
                }
            }
        }
        reference /= (n * n) as f64;
        assert_abs_diff_eq!(energy_density(&cfg, &pot).unwrap(), reference, epsilon = 1e-14);
        // 4 particles at spacing 2/8: each sees two at 1/4, one at 1/2 → 16·30/64... all plateau
        assert_abs_diff_eq!(reference, 4.0 * 3.0 * 10.0 / 64.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_potential_counts_self_pairs() {
        let pot = Potential::constant(2.0, 1).unwrap();
        let cfg = LatticeConfig::from_bits(&[1, 0, 1, 1]).unwrap();
        // n^-2 J (Σ η)^2
        assert_abs_diff_eq!(energy_density(&cfg, &pot).unwrap(), 2.0 * 9.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn two_dimensional_energy() {
        let pot = Potential::constant(1.0, 2).unwrap();
        let mut cfg = LatticeConfig::empty(2, 3).unwrap();
        cfg.set(0, true);
        cfg.set(8, true);
        assert_abs_diff_eq!(energy_density(&cfg, &pot).unwrap(), 4.0 / 81.0, epsilon = 1e-15);
        let lin = Potential::tabulated(vec![(0.0, 0.0), (1.5, 1.5)], false, 2).unwrap();
        // sites (0,0) and (2,2): distance √8/3, two ordered pairs
        let expect = 2.0 * (8f64).sqrt() / 3.0 / 81.0;
        assert_abs_diff_eq!(energy_density(&cfg, &lin).unwrap(), expect, epsilon = 1e-14);
        let torus = Potential::tabulated(vec![(0.0, 0.0), (1.5, 1.5)], true, 2).unwrap();
        // on the 3-torus the displacement (2,2) wraps to (1,1)
        let expect = 2.0 * (2f64).sqrt() / 3.0 / 81.0;
        assert_abs_diff_eq!(energy_density(&cfg, &torus).unwrap(), expect, epsilon = 1e-14);
        assert!(energy_density(&cfg, &a2()).is_err());
    }

    #[test]
    fn profile_examples() {
        let cfg = LatticeConfig::from_bits(&[1, 1, 0, 0]).unwrap();
        assert_eq!(profile(&cfg, 4).unwrap().values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(profile(&cfg, 2).unwrap().values(), &[1.0, 0.0]);
        assert_eq!(profile(&cfg, 8).unwrap().values(), &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let cfg = LatticeConfig::from_bits(&[1, 0, 1, 0]).unwrap();
        assert_eq!(profile(&cfg, 2).unwrap().values(), &[0.5, 0.5]);
        assert!(profile(&cfg, 3).is_err());
    }

    #[test]
    fn serialization_roundtrip() {
        let cfg = LatticeConfig::from_bits(&[1, 1, 0, 1, 0]).unwrap();
        let text = cfg.to_string();
        assert_eq!(text, "1 5\n11010");
        assert_eq!(text.parse::<LatticeConfig>().unwrap(), cfg);
        assert!("1 5\n1102".parse::<LatticeConfig>().is_err());
        assert!("1 5\n1101".parse::<LatticeConfig>().is_err());
    }

    #[test]
    fn cap_is_enforced() {
        assert!(LatticeConfig::with_cap(2, 10, bitvec![0; 100], 64).is_err());
    }

    #[test]
    fn discrepancy_examples() {
        let flat = Potential::constant(3.0, 1).unwrap();
        assert!(riemann_discrepancy(64, &flat).unwrap() < 1e-12);
        let pot = a2();
        let vals: Vec<f64> = [32, 64, 128, 256].iter().map(|&n| riemann_discrepancy(n, &pot).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0], "{vals:?}");
        }
        // diagonal cells alone contribute n^-2 Σ_I n² φ^{I,I}
        let n = 64;
        let diag = pot.cell_kernel(n).unwrap().get(0, 0) / n as f64;
        assert!(riemann_discrepancy(n, &pot).unwrap() >= diag);
        assert!(riemann_discrepancy(1, &pot).is_err());
        assert!(riemann_discrepancy(8192, &pot).is_err());
    }

    #[test]
    fn lattice_energy_within_discrepancy_of_continuum() {
        let n = 64;
        let pot = a2();
        let k = pot.cell_kernel(n).unwrap();
        let bound = riemann_discrepancy(n, &pot).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..100 {
            let cfg = random_config(&mut rng, n, 0.1 + 0.8 * (trial as f64 / 100.0));
            let f = profile(&cfg, n).unwrap();
            let gap = (energy_density(&cfg, &pot).unwrap() - xi(&f, &k).unwrap()).abs();
            assert!(gap <= bound + 1e-12, "{gap} > {bound}");
            assert_eq!(particle_density(&cfg), density_n(&f));
        }
    }

    #[test]
    fn free_boundary_discrepancy_bounds_gap() {
        let n = 32;
        let pot = Potential::new(crate::potential::PotentialKind::PowerLawPlateau { r: 0.5, plateau: 3.0 }, false, 1)
            .unwrap();
        let k = pot.cell_kernel(n).unwrap();
        let bound = riemann_discrepancy(n, &pot).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let cfg = random_config(&mut rng, n, 0.5);
            let f = profile(&cfg, n).unwrap();
            let gap = (energy_density(&cfg, &pot).unwrap() - xi(&f, &k).unwrap()).abs();
            assert!(gap <= bound + 1e-12);
        }
    }

    #[test]
    fn energy_translation_invariant() {
        let pot = a2();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let cfg = random_config(&mut rng, 40, 0.3);
            let e = energy_density(&cfg, &pot).unwrap();
            for k in [1, 7, 39] {
                assert_abs_diff_eq!(energy_density(&cfg.translated(k), &pot).unwrap(), e, epsilon = 1e-12);
            }
        }
    }
}
