//! Constrained entropy maximization.
//!
//! Maximizes `-H(f)` over discretized profiles subject to `ξ(f) = ξ` and
//! `N(f) = ρ`. Stationary points satisfy the logistic fixed point
//! `f = logistic(μ + β Ψf)`; the solver finds `f` together with the
//! multipliers `(β, μ)` by a damped Newton iteration on the joint system
//! in logit coordinates, started from several seeds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functional::{apply_kernel_values, hbin_prime, logistic, quadratic_form, rate_function, OccupancyProfile};
use crate::potential::{KernelMatrix, Potential};

/// Lagrange multipliers of the energy (`beta`) and density (`mu`) constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub beta: f64,
    pub mu: f64,
}

impl Multipliers {
    pub fn new(beta: f64, mu: f64) -> Self {
        Multipliers { beta, mu }
    }
}

/// Shape label of an optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Constant,
    Unimodal,
    Multimodal(usize),
    /// Constant optimizer whose multipliers vanish; only the constraints
    /// determine it.
    Degenerate,
}

impl Branch {
    pub fn peaks(self) -> usize {
        match self {
            Branch::Constant | Branch::Degenerate => 0,
            Branch::Unimodal => 1,
            Branch::Multimodal(k) => k,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Constant => f.write_str("Constant"),
            Branch::Unimodal => f.write_str("Unimodal"),
            Branch::Multimodal(k) => write!(f, "Multimodal({k})"),
            Branch::Degenerate => f.write_str("Degenerate"),
        }
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Constant" => Ok(Branch::Constant),
            "Unimodal" => Ok(Branch::Unimodal),
            "Degenerate" => Ok(Branch::Degenerate),
            _ => s
                .strip_prefix("Multimodal(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.parse().ok())
                .map(Branch::Multimodal)
                .ok_or_else(|| Error::Parse(format!("unknown branch `{s}`"))),
        }
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Branch {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub xi: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iterations {
    /// Residual evaluations, including line-search trials and fallback steps.
    pub inner: usize,
    /// Newton (or fallback) steps.
    pub outer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(serialize_with = "profile_values")]
    pub profile: OccupancyProfile,
    pub multipliers: Multipliers,
    #[serde(rename = "entropy_S")]
    pub entropy_s: f64,
    pub residuals: Residuals,
    /// `max_i |f_i - logistic(μ + β(Ψf)_i)|`.
    pub el_residual: f64,
    pub branch: Branch,
    pub iterations: Iterations,
    pub converged: bool,
    /// Label of the seed this candidate started from.
    pub seed: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

fn profile_values<S: Serializer>(p: &OccupancyProfile, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.values())
}

impl SolveResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Tolerance on `|ξ(f) - ξ| / max(1, |ξ|)` and `|N(f) - ρ|`.
    pub constraint_tol: f64,
    /// Accepted fixed-point residual in profile space.
    pub el_tol: f64,
    pub max_newton: usize,
    pub noise_floor: f64,
    /// Damping for [`el_fixed_point`].
    pub damping: f64,
    pub max_inner: usize,
    /// Penalty continuation of the gradient fallback.
    pub penalties: Vec<f64>,
    pub fallback_steps: usize,
    pub use_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            constraint_tol: 1e-8,
            el_tol: 1e-8,
            max_newton: 200,
            noise_floor: 1e-6,
            damping: 0.5,
            max_inner: 10_000,
            penalties: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            fallback_steps: 2000,
            use_fallback: true,
        }
    }
}

/// Outcome of [`el_fixed_point`].
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub profile: OccupancyProfile,
    pub iterations: usize,
    /// Final `max_i |f_i - logistic(μ + β(Ψf)_i)|`.
    pub residual: f64,
    pub diverged: bool,
}

/// Damped Picard iteration `f ← (1-ω) f + ω logistic(μ + βΨf)`. The damping
/// is halved whenever the residual grows.
pub fn el_fixed_point(
    k: &KernelMatrix,
    mult: Multipliers,
    seed: &OccupancyProfile,
    damping: f64,
    max_iter: usize,
    tol: f64,
) -> Result<FixedPoint> {
    if seed.m() != k.m() {
        return Err(Error::DimensionMismatch { expected: k.m(), found: seed.m() });
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::Precondition(format!("damping {damping} outside (0, 1]")));
    }
    let mut f = seed.values().to_vec();
    let mut omega = damping;
    let mut previous = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut diverged = false;
    while iterations <= max_iter {
        let g = el_map(k, mult, &f);
        residual = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !residual.is_finite() {
            diverged = true;
            break;
        }
        if residual < tol {
            break;
        }
        if iterations == max_iter {
            diverged = true;
            break;
        }
        if residual > previous {
            omega *= 0.5;
            if omega < 1e-8 {
                diverged = true;
                break;
            }
        }
        previous = residual;
        for (a, b) in f.iter_mut().zip(&g) {
            *a += omega * (b - *a);
        }
        iterations += 1;
    }
    Ok(FixedPoint { profile: OccupancyProfile::new(f, true)?, iterations, residual, diverged })
}

fn el_map(k: &KernelMatrix, mult: Multipliers, f: &[f64]) -> Vec<f64> {
    apply_kernel_values(k, f).into_iter().map(|p| logistic(mult.mu + mult.beta * p)).collect()
}

/// `max_i |f_i - logistic(μ + β(Ψf)_i)|`.
pub fn el_residual(k: &KernelMatrix, mult: Multipliers, f: &OccupancyProfile) -> Result<f64> {
    if f.m() != k.m() {
        return Err(Error::DimensionMismatch { expected: k.m(), found: f.m() });
    }
    let g = el_map(k, mult, f.values());
    Ok(f.values().iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Least-squares fit of `u ≈ μ + β p`.
fn fit_multipliers(u: &[f64], p: &[f64]) -> Multipliers {
    let n = u.len() as f64;
    let (mu_u, mu_p) = (u.iter().sum::<f64>() / n, p.iter().sum::<f64>() / n);
    let var: f64 = p.iter().map(|x| (x - mu_p).powi(2)).sum();
    let cov: f64 = p.iter().zip(u).map(|(x, y)| (x - mu_p) * (y - mu_u)).sum();
    let scale = p.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if var <= 1e-24 * scale * scale * n {
        return Multipliers::new(0.0, mu_u);
    }
    let beta = cov / var;
    Multipliers::new(beta, mu_u - beta * mu_p)
}

struct Problem<'a> {
    k: &'a KernelMatrix,
    xi: f64,
    rho: f64,
}

struct Eval {
    f: Vec<f64>,
    p: Vec<f64>,
    res: Vec<f64>,
    norm: f64,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.k.m()
    }

    fn eval(&self, u: &[f64], mult: Multipliers) -> Eval {
        let m = self.m();
        let f: Vec<f64> = u.iter().map(|&x| logistic(x)).collect();
        let p = apply_kernel_values(self.k, &f);
        let mut res = Vec::with_capacity(m + 2);
        res.extend(u.iter().zip(&p).map(|(ui, pi)| ui - mult.mu - mult.beta * pi));
        res.push(f.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / m as f64 - self.xi);
        res.push(f.iter().sum::<f64>() / m as f64 - self.rho);
        let norm = res.iter().map(|r| r * r).sum::<f64>().sqrt();
        Eval { f, p, res, norm: if norm.is_finite() { norm } else { f64::INFINITY } }
    }

    fn jacobian(&self, e: &Eval, mult: Multipliers) -> DMatrix<f64> {
        let m = self.m();
        let mf = m as f64;
        let d: Vec<f64> = e.f.iter().map(|v| v * (1.0 - v)).collect();
        let mut j = DMatrix::<f64>::zeros(m + 2, m + 2);
        for r in 0..m {
            let row = self.k.row(r);
            for c in 0..m {
                j[(r, c)] = -mult.beta * row[c] / mf * d[c];
            }
            j[(r, r)] += 1.0;
            j[(r, m)] = -1.0;
            j[(r, m + 1)] = -e.p[r];
        }
        for c in 0..m {
            j[(m, c)] = 2.0 * e.p[c] * d[c] / mf;
            j[(m + 1, c)] = d[c] / mf;
        }
        j
    }

    fn converged(&self, e: &Eval, opts: &SolverOptions) -> bool {
        let m = self.m();
        // fixed-point residual in f is at most a quarter of the logit residual
        let el = e.res[..m].iter().fold(0.0f64, |a, r| a.max(r.abs())) * 0.25;
        el < 1e-3 * opts.el_tol
            && e.res[m].abs() < 1e-3 * opts.constraint_tol * self.xi.abs().max(1.0)
            && e.res[m + 1].abs() < 1e-3 * opts.constraint_tol
    }
}

struct NewtonRun {
    u: Vec<f64>,
    mult: Multipliers,
    steps: usize,
    evals: usize,
    note: Option<String>,
}

fn newton(problem: &Problem, mut u: Vec<f64>, mut mult: Multipliers, opts: &SolverOptions) -> NewtonRun {
    let m = problem.m();
    let mut evals = 1;
    let mut e = problem.eval(&u, mult);
    let mut best_norm = e.norm;
    let mut since_best = 0;
    let mut steps = 0;
    let mut note = None;
    while steps < opts.max_newton {
        if problem.converged(&e, opts) {
            break;
        }
        if !e.norm.is_finite() {
            note = Some("non-finite residual".into());
            break;
        }
        let jac = problem.jacobian(&e, mult);
        let rhs = DVector::from_iterator(m + 2, e.res.iter().map(|r| -r));
        let dir = match jac.clone().lu().solve(&rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => x,
            _ => match jac.svd(true, true).solve(&rhs, 1e-14) {
                Ok(x) if x.iter().all(|v| v.is_finite()) => x,
                _ => {
                    note = Some("singular Newton system".into());
                    break;
                }
            },
        };
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1.0 / 1024.0 {
            let un: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
            let mn = Multipliers::new(mult.beta + t * dir[m + 1], mult.mu + t * dir[m]);
            let en = problem.eval(&un, mn);
            evals += 1;
            if en.norm <= (1.0 - 1e-4 * t) * e.norm {
                accepted = Some((un, mn, en));
                break;
            }
            t *= 0.5;
        }
        let (un, mn, en) = match accepted {
            Some(x) => x,
            None => {
                // take the shortest step anyway; the stall counter ends hopeless runs
                let un: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
                let mn = Multipliers::new(mult.beta + t * dir[m + 1], mult.mu + t * dir[m]);
                let en = problem.eval(&un, mn);
                evals += 1;
                (un, mn, en)
            }
        };
        u = un;
        mult = mn;
        e = en;
        steps += 1;
        if e.norm < 0.999 * best_norm {
            best_norm = e.norm;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= 25 {
                note = Some(format!("Newton stalled at residual norm {best_norm:.3e}"));
                break;
            }
        }
        if mult.beta.abs() > 1e8 {
            note = Some("multiplier β diverged".into());
            break;
        }
    }
    if note.is_none() && !problem.converged(&e, opts) && steps >= opts.max_newton {
        note = Some(format!("Newton hit {} steps at residual norm {:.3e}", opts.max_newton, e.norm));
    }
    NewtonRun { u, mult, steps, evals, note }
}

/// Gradient descent on `H(f) + p[(ξ(f) - ξ)² + (N(f) - ρ)²]` in logit
/// coordinates, for increasing penalty `p`.
fn penalty_descent(problem: &Problem, mut u: Vec<f64>, opts: &SolverOptions) -> (Vec<f64>, usize) {
    let m = problem.m();
    let mf = m as f64;
    let mut evals = 0;
    let objective = |u: &[f64], pen: f64| -> (f64, Vec<f64>) {
        let f: Vec<f64> = u.iter().map(|&x| logistic(x)).collect();
        let p = apply_kernel_values(problem.k, &f);
        let dxi = f.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() / mf - problem.xi;
        let drho = f.iter().sum::<f64>() / mf - problem.rho;
        let value = rate_function(&f) + pen * (dxi * dxi + drho * drho);
        let grad = f
            .iter()
            .zip(&p)
            .map(|(&fi, &pi)| {
                let d = fi * (1.0 - fi);
                // d hbin(f)/du = f(1-f) logit(f) = f(1-f) u
                let g = hbin_prime(fi.clamp(1e-300, 1.0 - 1e-16)) / mf + pen * (4.0 * dxi * pi / mf + 2.0 * drho / mf);
                g * d
            })
            .collect();
        (value, grad)
    };
    for &pen in &opts.penalties {
        let (mut value, mut grad) = objective(&u, pen);
        evals += 1;
        let mut step = 1.0;
        for _ in 0..opts.fallback_steps {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < 1e-14 {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = u.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                let (tv, tg) = objective(&trial, pen);
                evals += 1;
                if tv <= value - 1e-4 * step * gnorm2 {
                    u = trial;
                    value = tv;
                    grad = tg;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }
    (u, evals)
}

/// Number of local maxima of the cyclic 3-cell moving average that rise and
/// fall by at least `noise_floor`.
fn count_peaks(values: &[f64], noise_floor: f64) -> usize {
    let m = values.len();
    let s: Vec<f64> = (0..m).map(|i| (values[(i + m - 1) % m] + values[i] + values[(i + 1) % m]) / 3.0).collect();
    let start = (0..m).fold(0, |b, i| if s[i] < s[b] { i } else { b });
    let mut trough = s[start];
    let mut top = trough;
    let mut bottom = trough;
    let mut descending = false;
    let mut peaks = 0;
    for i in 1..=m {
        let v = s[(start + i) % m];
        if descending {
            bottom = bottom.min(v);
            if v >= bottom + noise_floor {
                descending = false;
                trough = bottom;
                top = v;
            }
        } else {
            if v < trough && top - trough < noise_floor {
                trough = v;
                top = v;
            }
            top = top.max(v);
            if top - trough >= noise_floor && v <= top - noise_floor {
                peaks += 1;
                descending = true;
                bottom = v;
            }
        }
    }
    peaks
}

/// Shape label of a periodic profile.
pub fn classify_branch(f: &OccupancyProfile, noise_floor: f64) -> Branch {
    if f.max() - f.min() < noise_floor {
        return Branch::Constant;
    }
    match count_peaks(f.values(), noise_floor) {
        0 | 1 => Branch::Unimodal,
        k => Branch::Multimodal(k),
    }
}

/// True iff `Ψf ≡ ξ/ρ` to within `tol` in sup norm.
pub fn check_degenerate_branch(f: &OccupancyProfile, k: &KernelMatrix, xi: f64, rho: f64, tol: f64) -> Result<bool> {
    if rho == 0.0 {
        return Err(Error::Precondition("degenerate-branch check needs ρ ≠ 0".into()));
    }
    if f.m() != k.m() {
        return Err(Error::DimensionMismatch { expected: k.m(), found: f.m() });
    }
    let target = xi / rho;
    Ok(apply_kernel_values(k, f.values()).iter().all(|p| (p - target).abs() < tol))
}

fn check_targets(k: &KernelMatrix, xi: f64, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("target density {rho} outside (0, 1)")));
    }
    if !xi.is_finite() {
        return Err(Error::Precondition("target energy must be finite".into()));
    }
    if k.m() < 2 {
        return Err(Error::Precondition("grid needs at least 2 cells".into()));
    }
    Ok(())
}

/// Solves for the optimizer and its multipliers starting from `seed`.
pub fn solve_multipliers(k: &KernelMatrix, xi: f64, rho: f64, seed: &OccupancyProfile) -> Result<SolveResult> {
    solve_multipliers_with(k, xi, rho, seed, &SolverOptions::default())
}

pub fn solve_multipliers_with(
    k: &KernelMatrix,
    xi: f64,
    rho: f64,
    seed: &OccupancyProfile,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_targets(k, xi, rho)?;
    if seed.m() != k.m() {
        return Err(Error::DimensionMismatch { expected: k.m(), found: seed.m() });
    }
    let problem = Problem { k, xi, rho };
    let u0: Vec<f64> = seed.values().iter().map(|&v| logit(v)).collect();
    let f0: Vec<f64> = u0.iter().map(|&x| logistic(x)).collect();
    let mult0 = fit_multipliers(&u0, &apply_kernel_values(k, &f0));
    let run = newton(&problem, u0, mult0, opts);
    let mut evals = run.evals;
    let mut steps = run.steps;
    let mut result = finish(&problem, &run, opts)?;
    if !result.converged && opts.use_fallback {
        let (u, fallback_evals) = penalty_descent(&problem, seed.values().iter().map(|&v| logit(v)).collect(), opts);
        let f: Vec<f64> = u.iter().map(|&x| logistic(x)).collect();
        let mult = fit_multipliers(&u, &apply_kernel_values(k, &f));
        let polish = newton(&problem, u, mult, opts);
        evals += fallback_evals + polish.evals;
        steps += polish.steps;
        let polished = finish(&problem, &polish, opts)?;
        if polished.converged || polished.residual_norm() < result.residual_norm() {
            result = polished;
        } else if let Some(note) = polish.note {
            result.diagnostics = Some(format!(
                "{}; penalty fallback: {note}",
                result.diagnostics.unwrap_or_else(|| "Newton failed".into())
            ));
        }
    }
    result.iterations = Iterations { inner: evals, outer: steps };
    Ok(result)
}

fn finish(problem: &Problem, run: &NewtonRun, opts: &SolverOptions) -> Result<SolveResult> {
    let f: Vec<f64> = run.u.iter().map(|&x| logistic(x)).collect();
    let profile = OccupancyProfile::new(f, true)?;
    let xi_res = (quadratic_form(profile.values(), problem.k) - problem.xi).abs();
    let rho_res = (profile.values().iter().sum::<f64>() / problem.m() as f64 - problem.rho).abs();
    let el = el_residual(problem.k, run.mult, &profile)?;
    let converged = xi_res < opts.constraint_tol * problem.xi.abs().max(1.0)
        && rho_res < opts.constraint_tol
        && el < opts.el_tol
        && run.mult.beta.is_finite()
        && run.mult.mu.is_finite();
    let mut branch = classify_branch(&profile, opts.noise_floor);
    if branch == Branch::Constant && run.mult.beta.abs() < 1e-9 && run.mult.mu.abs() < 1e-9 {
        branch = Branch::Degenerate;
    }
    let diagnostics = if converged {
        None
    } else {
        Some(run.note.clone().unwrap_or_else(|| {
            format!("residuals ξ {xi_res:.3e}, ρ {rho_res:.3e}, fixed point {el:.3e} above tolerance")
        }))
    };
    Ok(SolveResult {
        entropy_s: -rate_function(profile.values()),
        profile,
        multipliers: run.mult,
        residuals: Residuals { xi: xi_res, rho: rho_res },
        el_residual: el,
        branch,
        iterations: Iterations { inner: run.evals, outer: run.steps },
        converged,
        seed: String::new(),
        diagnostics,
    })
}

impl SolveResult {
    fn residual_norm(&self) -> f64 {
        let v = self.residuals.xi.max(self.residuals.rho).max(self.el_residual);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Amplitude of the cosine seeds.
pub const SEED_AMPLITUDE: f64 = 0.5;
/// Highest cosine mode in the default seed set.
pub const SEED_MODES: usize = 4;

/// Constant `ρ` plus `ρ(1 + a cos 2πkx)` for `k = 1..=SEED_MODES`, clipped
/// into the open unit interval.
pub fn default_seeds(m: usize, rho: f64) -> Result<Vec<(String, OccupancyProfile)>> {
    let mut seeds = vec![("constant".to_string(), OccupancyProfile::constant(m, rho)?)];
    for mode in 1..=SEED_MODES {
        let p = OccupancyProfile::from_fn(m, |x| {
            (rho * (1.0 + SEED_AMPLITUDE * (2.0 * std::f64::consts::PI * mode as f64 * x).cos())).clamp(1e-6, 1.0 - 1e-6)
        })?;
        seeds.push((format!("cos{mode}"), p));
    }
    Ok(seeds)
}

/// Deterministic preference: converged first, then larger entropy, then
/// (within 1e-9) fewer peaks, then seed order.
fn better(a: &SolveResult, b: &SolveResult) -> bool {
    match (a.converged, b.converged) {
        (true, false) => return true,
        (false, true) => return false,
        (false, false) => return a.residual_norm() < b.residual_norm(),
        _ => {}
    }
    if (a.entropy_s - b.entropy_s).abs() > 1e-9 {
        return a.entropy_s > b.entropy_s;
    }
    a.branch.peaks() < b.branch.peaks()
}

/// Solver bound to one kernel.
pub struct Solver {
    kernel: KernelMatrix,
    pub options: SolverOptions,
}

impl Solver {
    pub fn new(kernel: KernelMatrix) -> Self {
        Solver { kernel, options: SolverOptions::default() }
    }

    pub fn with_options(kernel: KernelMatrix, options: SolverOptions) -> Self {
        Solver { kernel, options }
    }

    /// Periodic one-dimensional potential on `m` cells.
    pub fn for_potential(pot: &Potential, m: usize) -> Result<Self> {
        if pot.dimension != 1 || !pot.periodic {
            return Err(Error::Unsupported("the solver handles periodic one-dimensional potentials only".into()));
        }
        Ok(Solver::new(pot.cell_kernel(m)?))
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    /// Every candidate, one per seed, each aligned with its maximum at `m/2`.
    pub fn solve_all(&self, xi: f64, rho: f64, seeds: Option<Vec<(String, OccupancyProfile)>>) -> Result<Vec<SolveResult>> {
        check_targets(&self.kernel, xi, rho)?;
        let seeds = match seeds {
            Some(s) if !s.is_empty() => s,
            _ => default_seeds(self.kernel.m(), rho)?,
        };
        seeds
            .par_iter()
            .map(|(label, seed)| {
                let mut r = solve_multipliers_with(&self.kernel, xi, rho, seed, &self.options)?;
                r.profile = r.profile.aligned();
                r.seed = label.clone();
                Ok(r)
            })
            .collect()
    }

    /// Best candidate over the seed set.
    pub fn solve(&self, xi: f64, rho: f64, seeds: Option<Vec<(String, OccupancyProfile)>>) -> Result<SolveResult> {
        let all = self.solve_all(xi, rho, seeds)?;
        Ok(select_best(all))
    }
}

/// Best of several candidates under the solver's preference order.
pub fn select_best(all: Vec<SolveResult>) -> SolveResult {
    let mut it = all.into_iter();
    let mut best = it.next().expect("at least one seed");
    for r in it {
        if better(&r, &best) {
            best = r;
        }
    }
    best
}

/// `S(ξ, ρ) = -min H(f)` over profiles with `ξ(f) = ξ`, `N(f) = ρ`.
pub fn solve_entropy(
    pot: &Potential,
    xi: f64,
    rho: f64,
    m: usize,
    seeds: Option<Vec<OccupancyProfile>>,
) -> Result<SolveResult> {
    let solver = Solver::for_potential(pot, m)?;
    let labelled = seeds.map(|s| s.into_iter().enumerate().map(|(i, p)| (format!("seed{i}"), p)).collect());
    solver.solve(xi, rho, labelled)
}

/// All candidates of [`solve_entropy`], in seed order.
pub fn solve_entropy_all(pot: &Potential, xi: f64, rho: f64, m: usize) -> Result<Vec<SolveResult>> {
    Solver::for_potential(pot, m)?.solve_all(xi, rho, None)
}
