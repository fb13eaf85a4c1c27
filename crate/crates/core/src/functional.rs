//! Continuum functionals on piecewise-constant occupancy profiles.
//!
//! A profile with `m` cells stands for the step function equal to
//! `values[i]` on `[i/m, (i+1)/m)`. With a cell-averaged kernel `K` the
//! energy of that step function is exactly `(1/m²) Σ f_i f_j K_ij`.

use std::f64::consts::LN_2;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::potential::KernelMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyProfile {
    values: Vec<f64>,
    periodic: bool,
}

impl OccupancyProfile {
    pub fn new(values: Vec<f64>, periodic: bool) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Precondition(format!("profile needs at least 2 cells, got {}", values.len())));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::Precondition(format!("profile value {v} at cell {i} outside [0, 1]")));
        }
        Ok(OccupancyProfile { values, periodic })
    }

    pub fn constant(m: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; m], true)
    }

    /// Samples `f` at the cell centers `(i + 1/2)/m`.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..m).map(|i| f((i as f64 + 0.5) / m as f64)).collect(), true)
    }

    /// Cell averages of the indicator of the union of `intervals` (each inside `[0, 1]`).
    pub fn indicator(m: usize, intervals: &[(f64, f64)]) -> Result<Self> {
        let h = 1.0 / m as f64;
        let values = (0..m)
            .map(|i| {
                let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
                let covered: f64 = intervals.iter().map(|&(a, b)| (hi.min(b) - lo.max(a)).max(0.0)).sum();
                (covered / h).clamp(0.0, 1.0)
            })
            .collect();
        Self::new(values, true)
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.m() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first global maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Circular shift: `out[(i + k) mod m] = values[i]`.
    pub fn shifted(&self, k: usize) -> Self {
        OccupancyProfile { values: rotate(&self.values, k), periodic: self.periodic }
    }

    /// Shifts the profile so that its global maximum sits at cell `m/2`.
    pub fn aligned(&self) -> Self {
        let m = self.m();
        let k = (m / 2 + m - self.argmax()) % m;
        self.shifted(k)
    }

    /// Block average onto `target` cells; `target` must divide `m`.
    pub fn block_average(&self, target: usize) -> Result<Self> {
        let m = self.m();
        if target == 0 || !m.is_multiple_of(target) {
            return Err(Error::Precondition(format!("cannot block-average {m} cells onto {target}")));
        }
        let b = m / target;
        let values = self.values.chunks_exact(b).map(|c| c.iter().sum::<f64>() / b as f64).collect();
        Self::new(values, self.periodic)
    }

    /// Writes `cell_center,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell_center,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", sig(self.cell_center(i)), sig(*v))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.starts_with("cell_center")) {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("profile CSV line {}: `{line}`", n + 1)))?;
            values.push(v);
        }
        Self::new(values, true)
    }
}

pub(crate) fn rotate<T: Copy>(v: &[T], k: usize) -> Vec<T> {
    let m = v.len();
    let mut out = v.to_vec();
    for (i, &x) in v.iter().enumerate() {
        out[(i + k) % m] = x;
    }
    out
}

/// `t log t + (1 - t) log(1 - t) + log 2` on `[0, 1]`, `+∞` elsewhere.
pub fn hbin(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return f64::INFINITY;
    }
    xlogx(t) + xlogx(1.0 - t) + LN_2
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `H_bin'(t) = log(t / (1 - t))`.
pub fn hbin_prime(t: f64) -> f64 {
    (t / (1.0 - t)).ln()
}

/// `H_bin''(t) = 1 / (t (1 - t))`.
pub fn hbin_second(t: f64) -> f64 {
    1.0 / (t * (1.0 - t))
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean of `H_bin` over raw cell values; `+∞` when any value leaves `[0, 1]`.
pub fn rate_function(values: &[f64]) -> f64 {
    values.iter().map(|&v| hbin(v)).sum::<f64>() / values.len() as f64
}

/// `H(f) = ∫ H_bin(f(x)) dx`.
pub fn entropy_h(f: &OccupancyProfile) -> f64 {
    rate_function(f.values())
}

fn check_size(f: &OccupancyProfile, k: &KernelMatrix) -> Result<()> {
    if f.m() != k.m() {
        return Err(Error::DimensionMismatch { expected: k.m(), found: f.m() });
    }
    Ok(())
}

pub(crate) fn quadratic_form(values: &[f64], k: &KernelMatrix) -> f64 {
    let m = k.m();
    let kf = k.matvec(values);
    values.iter().zip(&kf).map(|(a, b)| a * b).sum::<f64>() / (m * m) as f64
}

/// `ξ(f) = ∫∫ f(x) f(y) ψ(|x - y|) dx dy`.
pub fn xi(f: &OccupancyProfile, k: &KernelMatrix) -> Result<f64> {
    check_size(f, k)?;
    Ok(quadratic_form(f.values(), k))
}

/// `N(f) = ∫ f`.
pub fn density_n(f: &OccupancyProfile) -> f64 {
    f.values().iter().sum::<f64>() / f.m() as f64
}

pub(crate) fn apply_kernel_values(k: &KernelMatrix, values: &[f64]) -> Vec<f64> {
    let inv = 1.0 / k.m() as f64;
    k.matvec(values).into_iter().map(|v| v * inv).collect()
}

/// `(Ψf)_i = (1/m) Σ_j K_ij f_j`.
pub fn apply_kernel(k: &KernelMatrix, f: &OccupancyProfile) -> Result<Vec<f64>> {
    check_size(f, k)?;
    Ok(apply_kernel_values(k, f.values()))
}

/// Gradients of `H` and `ξ` with respect to the cell values.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub grad_h: Vec<f64>,
    pub grad_xi: Vec<f64>,
}

pub fn gradients(f: &OccupancyProfile, k: &KernelMatrix) -> Result<Gradients> {
    check_size(f, k)?;
    let m = f.m() as f64;
    if let Some((cell, &value)) = f.values().iter().enumerate().find(|(_, v)| **v <= 0.0 || **v >= 1.0) {
        return Err(Error::BoundaryGradient { cell, value });
    }
    let grad_h = f.values().iter().map(|&v| hbin_prime(v) / m).collect();
    let grad_xi = apply_kernel_values(k, f.values()).into_iter().map(|v| 2.0 * v / m).collect();
    Ok(Gradients { grad_h, grad_xi })
}
