//! The transition curve `ξ = λρ²`: feasibility window, kink constants and
//! the entropy scan across the curve.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig;
use crate::functional::{hbin, hbin_second, xi as xi_of, OccupancyProfile};
use crate::potential::{KernelMatrix, Potential, PotentialKind};
use crate::solver::{Branch, Solver};

/// Grid used to check the closed-form window energies.
pub const FEASIBILITY_GRID: usize = 2048;
/// Accepted gap between closed form and grid quadrature.
pub const FEASIBILITY_GRID_TOL: f64 = 2e-3;

/// Energies of three profiles with density `ρ`: one packed block, the
/// constant, and two half blocks half a period apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub rho: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    /// `ξ` of the same profiles as cell averages on [`FEASIBILITY_GRID`] cells.
    pub grid: [f64; 3],
    pub max_grid_error: f64,
    /// `xi1 < xi2 < xi3`: the curve point is interior to the feasible region.
    pub ordered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

pub fn feasibility_probe(pot: &Potential, rho: f64) -> Result<FeasibilityReport> {
    feasibility_probe_on(pot, rho, FEASIBILITY_GRID)
}

pub fn feasibility_probe_on(pot: &Potential, rho: f64, m: usize) -> Result<FeasibilityReport> {
    let (r, plateau) = match pot.kind {
        PotentialKind::PowerLawPlateau { r, plateau } if pot.periodic && pot.dimension == 1 => (r, plateau),
        _ => return Err(Error::Unsupported("feasibility probe needs the periodic power-law plateau potential".into())),
    };
    if !(rho > 0.0 && rho <= 0.25) {
        return Err(Error::Precondition(format!("feasibility probe needs ρ in (0, 1/4], got {rho}")));
    }
    let core = (1.0 - r) * (2.0 - r);
    let xi1 = 2.0 * rho.powf(2.0 - r) / core;
    let xi2 = pot.lambda()? * rho * rho;
    let xi3 = 4.0 * (rho / 2.0).powf(2.0 - r) / core + plateau * rho * rho / 2.0;
    let k = pot.cell_kernel(m)?;
    let profiles = [
        OccupancyProfile::indicator(m, &[(0.0, rho)])?,
        OccupancyProfile::constant(m, rho)?,
        OccupancyProfile::indicator(m, &[(0.0, rho / 2.0), (0.5, 0.5 + rho / 2.0)])?,
    ];
    let mut grid = [0.0; 3];
    for (g, p) in grid.iter_mut().zip(&profiles) {
        *g = xi_of(p, &k)?;
    }
    let max_grid_error = [xi1, xi2, xi3].iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ordered = xi1 < xi2 && xi2 < xi3;
    let failure = if !ordered {
        Some(format!(
            "window not ordered (ξ1 = {}, ξ2 = {}, ξ3 = {}); plateau M = {plateau} too small",
            sig(xi1),
            sig(xi2),
            sig(xi3)
        ))
    } else if max_grid_error > FEASIBILITY_GRID_TOL {
        Some(format!("grid quadrature differs from closed form by {max_grid_error:.3e}"))
    } else {
        None
    };
    Ok(FeasibilityReport { rho, xi1, xi2, xi3, grid, max_grid_error, ordered, failure })
}

/// Ratio `(H_bin(ρ+t) - H_bin'(ρ) t - H_bin(ρ)) / t²`, replaced by its limit
/// `H_bin''(ρ)/2` for `|t| < 1e-6`.
pub fn convexity_gap_ratio(rho: f64, t: f64) -> f64 {
    if t.abs() < 1e-6 {
        return hbin_second(rho) / 2.0;
    }
    let (a, b) = (rho, 1.0 - rho);
    (a * excess(t / a) + b * excess(-t / b)) / (t * t)
}

/// `(1 + x) log(1 + x) - x` without cancellation near `x = 0`.
fn excess(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // Σ_{n≥2} (-1)^n x^n / (n (n - 1))
        let mut term = x;
        let mut sum = 0.0;
        for n in 2..40 {
            term *= -x;
            sum += term / (n * (n - 1)) as f64;
        }
        -sum
    } else if x <= -1.0 {
        1.0
    } else {
        (1.0 + x) * x.ln_1p() - x
    }
}

const GAP_GRID: usize = 100_000;

/// `c(ρ) = min over t ∈ [-ρ, 1-ρ] of the convexity gap ratio`.
pub fn convexity_gap_constant(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("ρ = {rho} outside (0, 1)")));
    }
    let (lo, hi) = (-rho, 1.0 - rho);
    let step = (hi - lo) / GAP_GRID as f64;
    let at = |i: usize| if i == GAP_GRID { hi } else { lo + step * i as f64 };
    let (best_i, best) = (0..=GAP_GRID)
        .map(|i| (i, convexity_gap_ratio(rho, at(i))))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let a = at(best_i.saturating_sub(1));
    let b = at((best_i + 1).min(GAP_GRID));
    let refined = golden_min(|t| convexity_gap_ratio(rho, t), a, b, 1e-12);
    Ok(best.min(refined))
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

const POWER_MAX_ITER: usize = 20_000;
const POWER_TOL: f64 = 1e-12;

/// Largest `|eigenvalue|` of `(1/m) K` by power iteration. Circulant kernels
/// are cross-checked against their Fourier coefficients.
pub fn spectral_radius(k: &KernelMatrix) -> Result<f64> {
    if !k.is_symmetric() {
        return Err(Error::Precondition("spectral radius needs a symmetric kernel".into()));
    }
    let power = power_iteration(k)?;
    if is_circulant(k) {
        let fourier = spectral_radius_fourier(k);
        if (power - fourier).abs() > 1e-6 * fourier.abs().max(1e-300) {
            return Err(Error::SpectralMismatch { power, fourier });
        }
    }
    Ok(power)
}

fn is_circulant(k: &KernelMatrix) -> bool {
    let scale = k.entries().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    k.circulant_defect() <= 1e-12 * scale.max(1e-300)
}

/// `max_j |DFT(first row)_j| / m`, the spectral radius of a circulant `(1/m) K`.
pub fn spectral_radius_fourier(k: &KernelMatrix) -> f64 {
    let m = k.m();
    let mut buf: Vec<Complex<f64>> = k.row(0).iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().map(|c| c.norm()).fold(0.0, f64::max) / m as f64
}

fn power_iteration(k: &KernelMatrix) -> Result<f64> {
    let m = k.m();
    let apply = |x: &[f64]| -> Vec<f64> { k.matvec(x).into_iter().map(|v| v / m as f64).collect() };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    // deterministic start with weight on every Fourier mode
    let mut x: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_749_895).fract() - 0.5)).collect();
    let n0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let mut theta = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = apply(&x);
        theta = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        let res = y.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        if res <= POWER_TOL * theta.abs().max(1e-300) {
            return Ok(theta.abs());
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    // dominant pair ±σ makes the plain iteration oscillate; iterate on A² instead
    let mut z = x.clone();
    let mut sq = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = apply(&apply(&z));
        sq = z.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        let res = y.iter().zip(&z).map(|(a, b)| (a - sq * b).powi(2)).sum::<f64>().sqrt();
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        if res <= POWER_TOL * sq.abs().max(1e-300) {
            return Ok(sq.abs().sqrt());
        }
        z = y.into_iter().map(|v| v / ny).collect();
    }
    Err(Error::SpectralNonConvergence { iterations: POWER_MAX_ITER, estimate: theta.abs().max(sq.abs().sqrt()) })
}

/// One solve of the scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub xi: f64,
    /// Signed offset from `λρ²`.
    pub offset: f64,
    #[serde(rename = "S")]
    pub s: f64,
    /// `ξ` of the returned profile.
    pub xi_actual: f64,
    pub branch: Option<Branch>,
    pub beta: f64,
    pub mu: f64,
    pub converged: bool,
    /// `S + H_bin(ρ) ≤ -(c/σ)|ξ(f*) - λρ²| + slack` (true on the curve).
    pub kink_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionScan {
    pub rho: f64,
    pub lambda: f64,
    pub m: usize,
    pub xi_values: Vec<f64>,
    #[serde(rename = "S_values")]
    pub s_values: Vec<f64>,
    pub left_slope: f64,
    pub right_slope: f64,
    /// `c/σ`.
    pub kink_lower_bound: f64,
    pub c: f64,
    pub sigma: f64,
    pub points: Vec<ScanPoint>,
    /// Every converged off-curve point satisfies the kink inequality.
    pub kink_inequality_holds: bool,
    /// `|left_slope|` and `|right_slope|` both reach `c/σ`.
    pub slopes_exceed_bound: bool,
    /// `S ≤ -H_bin(ρ) + 1e-6` at every converged point.
    pub curve_is_maximal: bool,
    /// The slope bound is proved for `r < 1/2`; other potentials are tagged.
    pub within_hypotheses: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
}

/// Slack of the kink inequality, absorbing grid discretization.
pub const KINK_SLACK: f64 = 1e-4;

/// Scans `S(λρ² + sδ, ρ)` for `s ∈ {-1, 0, 1}` and every `δ`.
pub fn scan_transition(pot: &Potential, rho: f64, deltas: &[f64], m: usize) -> Result<TransitionScan> {
    if pot.is_constant() {
        return Err(Error::Precondition(
            "constant potential: the density fixes the energy, there is no curve to scan".into(),
        ));
    }
    if pot.dimension != 1 || !pot.periodic {
        return Err(Error::Unsupported("transition scan needs a periodic one-dimensional potential".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("ρ = {rho} outside (0, 1)")));
    }
    let mut ds: Vec<f64> = deltas.to_vec();
    if ds.is_empty() || ds.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::Precondition("deltas must be positive and non-empty".into()));
    }
    ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ds.dedup();

    let feasibility = match pot.kind {
        PotentialKind::PowerLawPlateau { .. } if rho <= 0.25 => {
            let report = feasibility_probe(pot, rho)?;
            if !report.ordered {
                return Err(Error::Precondition(report.failure.unwrap_or_default()));
            }
            Some(report)
        }
        _ => None,
    };
    let within_hypotheses = matches!(pot.kind, PotentialKind::PowerLawPlateau { r, .. } if r < 0.5);

    let lambda = pot.lambda()?;
    let curve = lambda * rho * rho;
    let solver = Solver::for_potential(pot, m)?;
    let c = convexity_gap_constant(rho)?;
    let sigma = spectral_radius(solver.kernel())?;
    let bound = c / sigma;

    let mut offsets: Vec<f64> = ds.iter().rev().map(|d| -d).collect();
    offsets.push(0.0);
    offsets.extend(ds.iter().copied());
    let h_rho = hbin(rho);

    let points: Vec<ScanPoint> = offsets
        .par_iter()
        .map(|&offset| {
            let xi = curve + offset;
            match solver.solve(xi, rho, None) {
                Ok(r) => {
                    let xi_actual = xi_of(&r.profile, solver.kernel()).unwrap_or(f64::NAN);
                    let kink_ok = r.entropy_s + h_rho <= -bound * (xi_actual - curve).abs() + KINK_SLACK;
                    ScanPoint {
                        xi,
                        offset,
                        s: r.entropy_s,
                        xi_actual,
                        branch: Some(r.branch),
                        beta: r.multipliers.beta,
                        mu: r.multipliers.mu,
                        converged: r.converged,
                        kink_ok,
                        failure: r.diagnostics,
                    }
                }
                Err(e) => ScanPoint {
                    xi,
                    offset,
                    s: f64::NAN,
                    xi_actual: f64::NAN,
                    branch: None,
                    beta: f64::NAN,
                    mu: f64::NAN,
                    converged: false,
                    kink_ok: false,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    let center = points.iter().find(|p| p.offset == 0.0).expect("curve point");
    let s0 = if center.converged { center.s } else { f64::NAN };
    let secant = |sign: f64, d: f64| -> f64 {
        points
            .iter()
            .find(|p| p.offset == sign * d && p.converged)
            .map_or(f64::NAN, |p| (p.s - s0) / (sign * d))
    };
    let slope = |sign: f64| -> f64 {
        if ds.len() == 1 {
            return secant(sign, ds[0]);
        }
        let (d1, d2) = (ds[0], ds[1]);
        (d2 * secant(sign, d1) - d1 * secant(sign, d2)) / (d2 - d1)
    };
    let left_slope = slope(-1.0);
    let right_slope = slope(1.0);
    let converged: Vec<&ScanPoint> = points.iter().filter(|p| p.converged).collect();
    let kink_inequality_holds = converged.len() == points.len() && converged.iter().all(|p| p.kink_ok);
    let slopes_exceed_bound = left_slope.abs() >= bound && right_slope.abs() >= bound;
    let curve_is_maximal = converged.iter().all(|p| p.s <= -h_rho + 1e-6);

    Ok(TransitionScan {
        rho,
        lambda,
        m,
        xi_values: points.iter().map(|p| p.xi).collect(),
        s_values: points.iter().map(|p| p.s).collect(),
        left_slope,
        right_slope,
        kink_lower_bound: bound,
        c,
        sigma,
        points,
        kink_inequality_holds,
        slopes_exceed_bound,
        curve_is_maximal,
        within_hypotheses,
        feasibility,
    })
}

impl TransitionScan {
    /// Rows `xi,S,branch,beta,mu,converged`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "xi,S,branch,beta,mu,converged")?;
        for p in &self.points {
            let branch = p.branch.map_or_else(|| "failed".to_string(), |b| b.to_string());
            writeln!(w, "{},{},{},{},{},{}", sig(p.xi), sig(p.s), branch, sig(p.beta), sig(p.mu), p.converged)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    /// Slopes, constants and pass/fail flags.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rho": self.rho,
            "lambda": self.lambda,
            "m": self.m,
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
            "c": self.c,
            "sigma": self.sigma,
            "c_over_sigma": self.kink_lower_bound,
            "kink_inequality_holds": self.kink_inequality_holds,
            "slopes_exceed_bound": self.slopes_exceed_bound,
            "curve_is_maximal": self.curve_is_maximal,
            "within_hypotheses": self.within_hypotheses,
        })
    }
}
