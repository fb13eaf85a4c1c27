//! Finite-`n` microcanonical ensembles: exhaustive enumeration of the window
//! probability and a swap-move Monte Carlo sampler on the window slice.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::functional::OccupancyProfile;
use crate::lattice::{pair_table_1d, LatticeConfig};
use crate::potential::Potential;

/// Open window `(ξ - δ, ξ + δ) × (ρ - δ, ρ + δ)` on energy and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleWindow {
    pub xi: f64,
    pub rho: f64,
    pub delta: f64,
}

impl EnsembleWindow {
    pub fn new(xi: f64, rho: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Precondition(format!("window half-width must be positive, got {delta}")));
        }
        if !xi.is_finite() || !rho.is_finite() {
            return Err(Error::Precondition("window centre must be finite".into()));
        }
        Ok(EnsembleWindow { xi, rho, delta })
    }

    pub fn contains_energy(&self, e: f64) -> bool {
        self.xi - self.delta < e && e < self.xi + self.delta
    }

    pub fn contains_density(&self, n: f64) -> bool {
        self.rho - self.delta < n && n < self.rho + self.delta
    }
}

/// Largest lattice accepted by [`enumerate_entropy`].
pub const MAX_ENUMERATION_N: usize = 24;

const ENUM_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub n: usize,
    pub count: u64,
    pub total: u64,
    /// `n^(-1) log(count / 2^n)`; `-∞` (serialized as null) for an empty window.
    #[serde(rename = "empirical_S", serialize_with = "finite_or_null")]
    pub empirical_s: f64,
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

impl EnumerationResult {
    /// Header plus the single record `n,count,total,empirical_S`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,count,total,empirical_S")?;
        writeln!(w, "{},{},{},{}", self.n, self.count, self.total, sig(self.empirical_s))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Counts the configurations of `{0,1}^n` inside the window.
pub fn enumerate_entropy(n: usize, pot: &Potential, window: &EnsembleWindow) -> Result<EnumerationResult> {
    if pot.dimension != 1 {
        return Err(Error::Unsupported("enumeration is one-dimensional".into()));
    }
    if n == 0 {
        return Err(Error::Precondition("enumeration needs n ≥ 1".into()));
    }
    if n > MAX_ENUMERATION_N {
        let cost = 2f64.powi(n as i32) * (n as f64 / 2.0).powi(2);
        return Err(Error::EnumerationTooLarge { n, limit: MAX_ENUMERATION_N, cost });
    }
    let table = pair_table_1d(pot, n)?;
    let norm = (n * n) as f64;
    let density_ok: Vec<bool> = (0..=n).map(|k| window.contains_density(k as f64 / n as f64)).collect();
    let total: u64 = 1 << n;
    let chunks = total.div_ceil(ENUM_CHUNK);
    let count: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sites = Vec::with_capacity(n);
            let mut hits = 0u64;
            for mask in c * ENUM_CHUNK..((c + 1) * ENUM_CHUNK).min(total) {
                if !density_ok[mask.count_ones() as usize] {
                    continue;
                }
                sites.clear();
                let mut bits = mask;
                while bits != 0 {
                    sites.push(bits.trailing_zeros() as usize);
                    bits &= bits - 1;
                }
                let energy = config_energy(&sites, &table, n, pot.periodic) / norm;
                if window.contains_energy(energy) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let empirical_s = if count == 0 { f64::NEG_INFINITY } else { (count as f64 / total as f64).ln() / n as f64 };
    Ok(EnumerationResult { n, count, total, empirical_s })
}

/// `Σ_{i,j} ψ(|i - j|/n)` over ordered pairs of occupied sites.
fn config_energy(sites: &[usize], table: &[f64], n: usize, periodic: bool) -> f64 {
    let mut q = 0.0;
    for &i in sites {
        for &j in sites {
            q += if periodic { table[(j + n - i) % n] } else { table[i.abs_diff(j)] };
        }
    }
    q
}

/// Swap-move chain on `{η : Σ η = k, E_n(η) ∈ window}` for a periodic
/// one-dimensional potential.
#[derive(Debug, Clone)]
pub struct SwapChain {
    n: usize,
    table: Vec<f64>,
    window: EnsembleWindow,
    eta: Vec<bool>,
    occupied: Vec<usize>,
    empty: Vec<usize>,
    /// `field[i] = Σ_{j occupied} ψ(|i - j|/n)`.
    field: Vec<f64>,
    /// Unnormalized energy `n² E_n`.
    q: f64,
    accepted_since_refresh: usize,
}

const REFRESH_EVERY: usize = 1 << 16;

impl SwapChain {
    pub fn new(config: &LatticeConfig, pot: &Potential, window: EnsembleWindow) -> Result<Self> {
        if config.d() != 1 || pot.dimension != 1 || !pot.periodic {
            return Err(Error::Unsupported("the sampler handles periodic one-dimensional lattices".into()));
        }
        let n = config.n();
        let table = pair_table_1d(pot, n)?;
        let eta: Vec<bool> = config.occupancy().iter().map(|b| *b).collect();
        let mut chain = SwapChain {
            n,
            table,
            window,
            occupied: (0..n).filter(|&i| eta[i]).collect(),
            empty: (0..n).filter(|&i| !eta[i]).collect(),
            eta,
            field: vec![0.0; n],
            q: 0.0,
            accepted_since_refresh: 0,
        };
        chain.refresh();
        Ok(chain)
    }

    fn refresh(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.field[i] = self.occupied.iter().map(|&j| self.table[(j + n - i) % n]).sum();
        }
        self.q = self.occupied.iter().map(|&i| self.field[i]).sum();
        self.accepted_since_refresh = 0;
    }

    pub fn energy(&self) -> f64 {
        self.q / (self.n * self.n) as f64
    }

    pub fn in_window(&self) -> bool {
        self.window.contains_energy(self.energy())
    }

    pub fn particles(&self) -> usize {
        self.occupied.len()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.eta
    }

    pub fn configuration(&self) -> LatticeConfig {
        LatticeConfig::new(1, self.n, self.eta.iter().copied().collect()).expect("valid size")
    }

    /// Energy change of moving the particle at `a` to the empty site `b`.
    fn delta_q(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        2.0 * (self.field[b] - self.field[a]) + 2.0 * self.table[0] - 2.0 * self.table[(b + n - a) % n]
    }

    fn apply(&mut self, ai: usize, bi: usize, dq: f64) {
        let n = self.n;
        let (a, b) = (self.occupied[ai], self.empty[bi]);
        for i in 0..n {
            self.field[i] += self.table[(b + n - i) % n] - self.table[(a + n - i) % n];
        }
        self.q += dq;
        self.eta[a] = false;
        self.eta[b] = true;
        self.occupied[ai] = b;
        self.empty[bi] = a;
        self.accepted_since_refresh += 1;
        if self.accepted_since_refresh >= REFRESH_EVERY {
            self.refresh();
        }
    }

    fn propose<R: Rng>(&self, rng: &mut R) -> Option<(usize, usize)> {
        if self.occupied.is_empty() || self.empty.is_empty() {
            return None;
        }
        Some((rng.random_range(0..self.occupied.len()), rng.random_range(0..self.empty.len())))
    }

    /// One swap proposal, accepted iff the energy stays inside the window.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> bool {
        let Some((ai, bi)) = self.propose(rng) else { return false };
        let dq = self.delta_q(self.occupied[ai], self.empty[bi]);
        let e = (self.q + dq) / (self.n * self.n) as f64;
        if self.window.contains_energy(e) {
            self.apply(ai, bi, dq);
            true
        } else {
            false
        }
    }

    /// Greedy descent of `|E - ξ|` by swaps until the energy enters the window.
    pub fn anneal_into_window<R: Rng>(&mut self, rng: &mut R, max_moves: usize) -> Result<usize> {
        let nn = (self.n * self.n) as f64;
        let mut closest = (self.energy() - self.window.xi).abs();
        for moves in 0..max_moves {
            if self.in_window() {
                return Ok(moves);
            }
            let Some((ai, bi)) = self.propose(rng) else { break };
            let dq = self.delta_q(self.occupied[ai], self.empty[bi]);
            let gap = ((self.q + dq) / nn - self.window.xi).abs();
            if gap < closest {
                closest = gap;
                self.apply(ai, bi, dq);
            }
        }
        if self.in_window() {
            return Ok(max_moves);
        }
        Err(Error::Initialization { attempts: max_moves, closest: self.energy() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McmcStats {
    pub n: usize,
    pub chains: usize,
    /// Proposals per chain.
    pub steps: usize,
    pub particles: usize,
    pub accepted_moves: u64,
    pub proposals: u64,
    pub acceptance_rate: f64,
    #[serde(serialize_with = "profile_values")]
    pub mean_profile: OccupancyProfile,
    pub samples: usize,
    pub energy_trace_summary: EnergySummary,
    pub seed: u64,
    pub aligned: bool,
    /// Sweeps (n proposals) without a single accepted move.
    pub stuck_sweeps: u64,
    pub warnings: Vec<String>,
}

fn profile_values<S: Serializer>(p: &OccupancyProfile, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.values())
}

impl McmcStats {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct McmcOptions {
    /// Fraction of each chain discarded before sampling.
    pub burn_in: f64,
    /// Align every sample with its densest window at the centre.
    pub align: bool,
    /// Half-width of the moving window used to locate the densest region;
    /// `None` picks `max(1, n/64)`.
    pub smoothing: Option<usize>,
    /// Starting profile, rounded onto the lattice; evenly spaced otherwise.
    pub init: Option<OccupancyProfile>,
    /// Annealing budget per chain, in proposals.
    pub anneal_moves: usize,
}

impl Default for McmcOptions {
    fn default() -> Self {
        McmcOptions { burn_in: 0.2, align: true, smoothing: None, init: None, anneal_moves: 10_000_000 }
    }
}

/// `k` particles placed by systematic rounding of the profile's cumulative
/// mass, or evenly spaced when no profile is given.
pub fn rounded_configuration(n: usize, k: usize, profile: Option<&OccupancyProfile>) -> Result<LatticeConfig> {
    if k > n {
        return Err(Error::Precondition(format!("{k} particles do not fit on {n} sites")));
    }
    let mut occ = vec![false; n];
    match profile {
        None => {
            for i in 0..k {
                occ[i * n / k.max(1)] = true;
            }
        }
        Some(p) => {
            let m = p.m();
            let weights: Vec<f64> = (0..n).map(|i| p.values()[i * m / n]).collect();
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return rounded_configuration(n, k, None);
            }
            let scale = k as f64 / total;
            let mut acc = 0.0;
            let mut placed = 0;
            for (i, w) in weights.iter().enumerate() {
                acc += w * scale;
                if placed < k && acc >= placed as f64 + 0.5 {
                    occ[i] = true;
                    placed += 1;
                }
            }
            // fill any shortfall from rounding at the heaviest empty sites
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));
            for i in order {
                if placed == k {
                    break;
                }
                if !occ[i] {
                    occ[i] = true;
                    placed += 1;
                }
            }
        }
    }
    LatticeConfig::new(1, n, occ.into_iter().collect())
}

/// Index of the densest circular window of half-width `w` (first on ties).
fn densest_site(eta: &[bool], w: usize) -> usize {
    let n = eta.len();
    let w = w.min((n - 1) / 2);
    let mut sum: i64 = (0..=2 * w).map(|k| i64::from(eta[(n - w + k) % n])).sum();
    let (mut best, mut best_sum) = (0, sum);
    for i in 1..n {
        sum += i64::from(eta[(i + w) % n]) - i64::from(eta[(i + n - w - 1) % n]);
        if sum > best_sum {
            best = i;
            best_sum = sum;
        }
    }
    best
}

struct ChainOutcome {
    mean: Vec<f64>,
    samples: usize,
    accepted: u64,
    proposals: u64,
    energies: Vec<f64>,
    stuck_sweeps: u64,
}

/// Runs `chains` independent swap chains of `steps` proposals each.
pub fn mcmc_sample(
    n: usize,
    pot: &Potential,
    window: &EnsembleWindow,
    steps: usize,
    chains: usize,
    rng_seed: u64,
) -> Result<McmcStats> {
    mcmc_sample_with(n, pot, window, steps, chains, rng_seed, &McmcOptions::default())
}

pub fn mcmc_sample_with(
    n: usize,
    pot: &Potential,
    window: &EnsembleWindow,
    steps: usize,
    chains: usize,
    rng_seed: u64,
    opts: &McmcOptions,
) -> Result<McmcStats> {
    if n < 2 || chains == 0 || steps == 0 {
        return Err(Error::Precondition("sampler needs n ≥ 2, at least one chain and one step".into()));
    }
    if !(0.0..1.0).contains(&opts.burn_in) {
        return Err(Error::Precondition(format!("burn-in fraction {} outside [0, 1)", opts.burn_in)));
    }
    let k = (window.rho * n as f64).round() as usize;
    if k > n {
        return Err(Error::Precondition(format!("density {} exceeds 1", window.rho)));
    }
    let start = rounded_configuration(n, k, opts.init.as_ref())?;
    let w = opts.smoothing.unwrap_or((n / 64).max(1));
    let burn = (steps as f64 * opts.burn_in).floor() as usize;

    let outcomes: Vec<ChainOutcome> = (0..chains)
        .into_par_iter()
        .map(|c| -> Result<ChainOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(c as u64);
            let mut chain = SwapChain::new(&start, pot, *window)?;
            chain.anneal_into_window(&mut rng, opts.anneal_moves)?;
            let mut mean = vec![0.0; n];
            let mut samples = 0;
            let mut accepted = 0u64;
            let mut sweep_accepts = 0u64;
            let mut stuck_sweeps = 0u64;
            let mut energies = Vec::new();
            for s in 0..steps {
                if chain.step(&mut rng) {
                    accepted += 1;
                    sweep_accepts += 1;
                }
                if (s + 1) % n == 0 {
                    if sweep_accepts == 0 {
                        stuck_sweeps += 1;
                    }
                    sweep_accepts = 0;
                    if s >= burn {
                        let eta = chain.occupancy();
                        let shift = if opts.align { densest_site(eta, w) + n - n / 2 } else { 0 };
                        for (i, m) in mean.iter_mut().enumerate() {
                            if eta[(i + shift) % n] {
                                *m += 1.0;
                            }
                        }
                        samples += 1;
                        energies.push(chain.energy());
                    }
                }
            }
            Ok(ChainOutcome { mean, samples, accepted, proposals: steps as u64, energies, stuck_sweeps })
        })
        .collect::<Result<_>>()?;

    let samples: usize = outcomes.iter().map(|o| o.samples).sum();
    if samples == 0 {
        return Err(Error::Precondition(format!(
            "no samples collected: {steps} steps leave no full sweep of {n} proposals after burn-in"
        )));
    }
    let mut mean = vec![0.0; n];
    for o in &outcomes {
        for (a, b) in mean.iter_mut().zip(&o.mean) {
            *a += b;
        }
    }
    mean.iter_mut().for_each(|v| *v /= samples as f64);
    let energies: Vec<f64> = outcomes.iter().flat_map(|o| o.energies.iter().copied()).collect();
    let accepted: u64 = outcomes.iter().map(|o| o.accepted).sum();
    let proposals: u64 = outcomes.iter().map(|o| o.proposals).sum();
    let stuck_sweeps: u64 = outcomes.iter().map(|o| o.stuck_sweeps).sum();
    let mut warnings = Vec::new();
    if stuck_sweeps > 0 {
        warnings.push(format!(
            "{stuck_sweeps} sweep(s) without an accepted move; the window slice may be poorly connected (try a wider δ)"
        ));
    }
    Ok(McmcStats {
        n,
        chains,
        steps,
        particles: k,
        accepted_moves: accepted,
        proposals,
        acceptance_rate: accepted as f64 / proposals as f64,
        mean_profile: OccupancyProfile::new(mean, true)?,
        samples,
        energy_trace_summary: EnergySummary {
            mean: energies.iter().sum::<f64>() / energies.len() as f64,
            min: energies.iter().copied().fold(f64::INFINITY, f64::min),
            max: energies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        seed: rng_seed,
        aligned: opts.align,
        stuck_sweeps,
        warnings,
    })
}

/// `min_s (1/m) Σ_i |a_i - b_{i+s}|` after block-averaging both profiles
/// onto the coarser grid.
pub fn compare_profiles(a: &OccupancyProfile, b: &OccupancyProfile) -> Result<f64> {
    let m = a.m().min(b.m());
    let a = if a.m() == m { a.clone() } else { a.block_average(m)? };
    let b = if b.m() == m { b.clone() } else { b.block_average(m)? };
    let (av, bv) = (a.values(), b.values());
    Ok((0..m)
        .map(|s| av.iter().enumerate().map(|(i, x)| (x - bv[(i + s) % m]).abs()).sum::<f64>() / m as f64)
        .fold(f64::INFINITY, f64::min))
}

/// Distance of the sampled mean profile from `f_star` (see [`compare_profiles`]).
pub fn compare_profile(stats: &McmcStats, f_star: &OccupancyProfile) -> Result<f64> {
    compare_profiles(&stats.mean_profile, f_star)
}

impl McmcStats {
    pub fn write_profile_csv<W: Write>(&self, w: W) -> Result<()> {
        self.mean_profile.write_csv(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::energy_density;
    use crate::solver::{classify_branch, Branch};
    use approx::assert_abs_diff_eq;

    fn a2() -> Potential {
        Potential::power_plateau(0.5, 10.0).unwrap()
    }

    #[test]
    fn window_covering_everything() {
        let w = EnsembleWindow::new(0.0, 0.5, 1e6).unwrap();
        let r = enumerate_entropy(10, &a2(), &w).unwrap();
        assert_eq!(r.count, 1024);
        assert_eq!(r.empirical_s, 0.0);
    }

    #[test]
    fn window_with_only_empty_configuration() {
        let w = EnsembleWindow::new(0.0, 0.0, 1e-3).unwrap();
        let r = enumerate_entropy(12, &a2(), &w).unwrap();
        assert_eq!(r.count, 1);
        assert_abs_diff_eq!(r.empirical_s, -std::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn empty_window_is_minus_infinity() {
        let w = EnsembleWindow::new(-5.0, 0.5, 1e-3).unwrap();
        let r = enumerate_entropy(8, &a2(), &w).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.empirical_s, f64::NEG_INFINITY);
        assert!(r.to_csv_string().ends_with("8,0,256,-inf\n"));
        assert!(serde_json::to_string(&r).unwrap().contains("\"empirical_S\":null"));
    }

    #[test]
    fn refuses_large_lattices() {
        let w = EnsembleWindow::new(0.4, 0.25, 0.05).unwrap();
        assert!(matches!(enumerate_entropy(30, &a2(), &w), Err(Error::EnumerationTooLarge { n: 30, .. })));
        assert!(EnsembleWindow::new(0.4, 0.25, 0.0).is_err());
    }

    #[test]
    fn enumeration_counts_match_independent_oracle() {
        // counts from a separate itertools/numpy enumeration over k-subsets
        let w = EnsembleWindow::new(7.0 * 0.0625, 0.25, 0.05).unwrap();
        let pot = a2();
        assert_eq!(enumerate_entropy(12, &pot, &w).unwrap().count, 40);
        assert_eq!(enumerate_entropy(16, &pot, &w).unwrap().count, 308);
    }

    #[test]
    fn enumeration_agrees_with_lattice_energy() {
        let pot = a2();
        let n = 10;
        let w = EnsembleWindow::new(0.5, 0.3, 0.15).unwrap();
        let mut brute = 0;
        for mask in 0u32..(1 << n) {
            let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let cfg = LatticeConfig::from_bits(&bits).unwrap();
            let density = cfg.particles() as f64 / n as f64;
            if w.contains_density(density) && w.contains_energy(energy_density(&cfg, &pot).unwrap()) {
                brute += 1;
                // translation closes the counted set
                let t = cfg.translated(3);
                assert!(w.contains_energy(energy_density(&t, &pot).unwrap()));
            }
        }
        let r = enumerate_entropy(n, &pot, &w).unwrap();
        assert_eq!(r.count, brute);
        assert_eq!(enumerate_entropy(n, &pot, &w).unwrap(), r);
    }

    #[test]
    fn swap_energy_updates_match_recomputation() {
        let pot = a2();
        let n = 64;
        let start = rounded_configuration(n, 15, None).unwrap();
        let window = EnsembleWindow::new(0.4, 0.23, 10.0).unwrap();
        let mut chain = SwapChain::new(&start, &pot, window).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            chain.step(&mut rng);
            assert_eq!(chain.particles(), 15);
        }
        let direct = energy_density(&chain.configuration(), &pot).unwrap();
        assert_abs_diff_eq!(chain.energy(), direct, epsilon = 1e-12);
    }

    #[test]
    fn constant_potential_accepts_everything() {
        let pot = Potential::constant(1.0, 1).unwrap();
        let n = 40;
        let w = EnsembleWindow::new(0.0625, 0.25, 0.01).unwrap();
        let opts = McmcOptions { align: false, ..McmcOptions::default() };
        let stats = mcmc_sample_with(n, &pot, &w, 400_000, 2, 11, &opts).unwrap();
        assert_eq!(stats.acceptance_rate, 1.0);
        assert_eq!(stats.stuck_sweeps, 0);
        assert!(stats.mean_profile.values().iter().all(|v| (v - 0.25).abs() < 0.05));
        assert_abs_diff_eq!(stats.energy_trace_summary.max, 0.0625, epsilon = 1e-12);
    }

    #[test]
    fn sampler_is_reproducible() {
        let pot = a2();
        let w = EnsembleWindow::new(7.0 * 0.23 * 0.23 - 0.02, 0.23, 0.01).unwrap();
        let a = mcmc_sample(64, &pot, &w, 20_000, 2, 3).unwrap();
        let b = mcmc_sample(64, &pot, &w, 20_000, 2, 3).unwrap();
        assert_eq!(a, b);
        let c = mcmc_sample(64, &pot, &w, 20_000, 2, 4).unwrap();
        assert_ne!(a.mean_profile, c.mean_profile);
        assert!(a.accepted_moves <= a.proposals);
        assert_eq!(a.seed, 3);
    }

    #[test]
    fn unreachable_window_fails_initialization() {
        let pot = a2();
        let w = EnsembleWindow::new(50.0, 0.23, 0.01).unwrap();
        let opts = McmcOptions { anneal_moves: 5_000, ..McmcOptions::default() };
        assert!(matches!(mcmc_sample_with(32, &pot, &w, 1000, 1, 0, &opts), Err(Error::Initialization { .. })));
    }

    #[test]
    fn rounded_configuration_follows_profile() {
        let p = OccupancyProfile::indicator(16, &[(0.25, 0.5)]).unwrap();
        let cfg = rounded_configuration(32, 8, Some(&p)).unwrap();
        assert_eq!(cfg.particles(), 8);
        assert!((8..16).all(|i| cfg.is_occupied(i)));
        let even = rounded_configuration(10, 5, None).unwrap();
        assert_eq!(even.to_string(), "1 10\n1010101010");
    }

    #[test]
    fn densest_window_location() {
        let mut eta = vec![false; 20];
        for i in [17, 18, 19, 0, 1] {
            eta[i] = true;
        }
        assert_eq!(densest_site(&eta, 2), 19);
    }

    #[test]
    fn compare_profile_examples() {
        let f = OccupancyProfile::from_fn(64, |x| 0.2 + 0.1 * (2.0 * std::f64::consts::PI * x).cos()).unwrap();
        assert_eq!(compare_profiles(&f, &f).unwrap(), 0.0);
        assert!(compare_profiles(&f.shifted(13), &f).unwrap() < 1e-15);
        let fine = OccupancyProfile::new(f.values().iter().flat_map(|&v| [v, v]).collect(), true).unwrap();
        assert!(compare_profiles(&fine, &f).unwrap() < 1e-15);
        let flat = OccupancyProfile::constant(64, 0.2).unwrap();
        assert!(compare_profiles(&flat, &f).unwrap() > 0.05);
    }

    #[test]
    fn below_curve_sample_is_unimodal() {
        let pot = a2();
        let rho = 0.23;
        let w = EnsembleWindow::new(7.0 * rho * rho - 0.02, rho, 0.01).unwrap();
        let stats = mcmc_sample(256, &pot, &w, 1_000_000, 2, 8).unwrap();
        let smooth = stats.mean_profile.block_average(32).unwrap();
        assert_eq!(classify_branch(&smooth, 0.02), Branch::Unimodal);
    }

    #[test]
    fn above_curve_sample_is_multimodal() {
        let pot = a2();
        let rho = 0.23;
        let w = EnsembleWindow::new(7.0 * rho * rho + 0.02, rho, 0.01).unwrap();
        let stats = mcmc_sample(256, &pot, &w, 1_000_000, 2, 8).unwrap();
        let smooth = stats.mean_profile.block_average(32).unwrap();
        assert!(matches!(classify_branch(&smooth, 0.02), Branch::Multimodal(_)), "{:?}", smooth.values());
    }
}
