//! Pair potentials, the integrated interaction λ and cell-averaged kernels.
//!
//! A [`Potential`] evaluates `ψ(t)` for a separation `t ∈ [0, √d]`. The
//! power-law-with-plateau kind is the one-dimensional periodic interaction
//!
//! ```text
//! ψ(t) = t^(-r)   0 < t < 1/4
//! ψ(t) = M        1/4 ≤ t ≤ 1/2
//! ψ(0) = 0,       ψ(t) = ψ(1 - t)
//! ```
//!
//! Kernel matrices hold `m² ∫∫_{cell_i × cell_j} ψ(|x - y|) dx dy`. In one
//! dimension the double integral over two cells at offset `a = (j - i)/m`
//! collapses to a triangle-weighted single integral,
//!
//! ```text
//! ∫_{a-h}^{a} (s - a + h) ψ(s) ds + ∫_{a}^{a+h} (a + h - s) ψ(s) ds,   h = 1/m,
//! ```
//!
//! which is evaluated exactly with piecewise antiderivatives.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature;

/// Breakpoints of the plateau potential on `[0, 1/2]`.
const CORE_EDGE: f64 = 0.25;
const HALF: f64 = 0.5;

const LAMBDA_QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `t^(-r)` below 1/4, plateau `M` above, `ψ(0) = 0`.
    PowerLawPlateau { r: f64, plateau: f64 },
    /// `ψ ≡ J`, including `ψ(0) = J` (Curie–Weiss self-term).
    Constant { j: f64 },
    /// Piecewise-linear interpolation through `(t, value)` knots.
    Tabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    /// Torus distances; in one dimension this is `ψ(t) = ψ(1 - t)`.
    pub periodic: bool,
    pub dimension: usize,
}

impl Potential {
    pub fn new(kind: PotentialKind, periodic: bool, dimension: usize) -> Result<Self> {
        let pot = Potential { kind, periodic, dimension };
        pot.validate()?;
        Ok(pot)
    }

    /// The periodic one-dimensional plateau potential.
    pub fn power_plateau(r: f64, plateau: f64) -> Result<Self> {
        Self::new(PotentialKind::PowerLawPlateau { r, plateau }, true, 1)
    }

    pub fn constant(j: f64, dimension: usize) -> Result<Self> {
        Self::new(PotentialKind::Constant { j }, true, dimension)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>, periodic: bool, dimension: usize) -> Result<Self> {
        Self::new(PotentialKind::Tabulated { samples }, periodic, dimension)
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidPotential("dimension must be positive".into()));
        }
        match &self.kind {
            PotentialKind::PowerLawPlateau { r, plateau } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::InvalidPotential(format!("exponent r = {r} outside (0, 1)")));
                }
                if !(*plateau > 0.0 && plateau.is_finite()) {
                    return Err(Error::InvalidPotential(format!("plateau M = {plateau} must be positive")));
                }
            }
            PotentialKind::Constant { j } => {
                if !j.is_finite() {
                    return Err(Error::InvalidPotential("constant J must be finite".into()));
                }
            }
            PotentialKind::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidPotential("tabulated potential needs at least two knots".into()));
                }
                if samples[0].0 != 0.0 {
                    return Err(Error::InvalidPotential("first knot must be at t = 0".into()));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidPotential("knots must be strictly increasing".into()));
                }
                if samples.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(Error::InvalidPotential("knots must be finite".into()));
                }
                let need = self.tabulated_span();
                let last = samples[samples.len() - 1].0;
                if last + 1e-12 < need {
                    return Err(Error::InvalidPotential(format!(
                        "knots end at {last}, must cover [0, {need}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn tabulated_span(&self) -> f64 {
        if self.periodic && self.dimension == 1 {
            HALF
        } else if self.periodic {
            0.5 * (self.dimension as f64).sqrt()
        } else {
            (self.dimension as f64).sqrt()
        }
    }

    /// Largest admissible separation, `√d`.
    pub fn max_distance(&self) -> f64 {
        (self.dimension as f64).sqrt()
    }

    /// Evaluates `ψ(t)`; in one periodic dimension `t > 1/2` is mapped to `1 - t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let upper = self.max_distance();
        if !(t >= 0.0 && t <= upper + 1e-12) {
            return Err(Error::Domain { value: t, upper });
        }
        let t = if self.periodic && self.dimension == 1 && t > HALF { 1.0 - t } else { t };
        Ok(self.raw(t))
    }

    fn raw(&self, t: f64) -> f64 {
        match &self.kind {
            PotentialKind::PowerLawPlateau { r, plateau } => {
                if t <= 0.0 {
                    0.0
                } else if t < CORE_EDGE {
                    t.powf(-r)
                } else {
                    *plateau
                }
            }
            PotentialKind::Constant { j } => *j,
            PotentialKind::Tabulated { samples } => interpolate(samples, t),
        }
    }

    /// True when the potential does not depend on the separation, so the
    /// density alone fixes the energy.
    pub fn is_constant(&self) -> bool {
        matches!(self.kind, PotentialKind::Constant { .. })
    }

    /// Breakpoints of `ψ` on `[0, 1]` (one dimension).
    fn breakpoints_1d(&self) -> Vec<f64> {
        let mut pts = match &self.kind {
            PotentialKind::PowerLawPlateau { .. } => vec![CORE_EDGE, HALF, 1.0 - CORE_EDGE],
            PotentialKind::Constant { .. } => vec![],
            PotentialKind::Tabulated { samples } => {
                let mut v: Vec<f64> = samples.iter().map(|s| s.0).filter(|&t| t > 0.0 && t < 1.0).collect();
                if self.periodic {
                    v.extend(samples.iter().map(|s| 1.0 - s.0).filter(|&t| t > 0.0 && t < 1.0));
                    v.push(HALF);
                }
                v
            }
        };
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Integrated interaction `λ = ∫∫ ψ(|x - y|) dx dy` over the unit cube.
    pub fn lambda(&self) -> Result<f64> {
        match (&self.kind, self.periodic, self.dimension) {
            (PotentialKind::Constant { j }, _, _) => Ok(*j),
            (PotentialKind::PowerLawPlateau { r, plateau }, true, 1) => {
                Ok(2.0 * 4f64.powf(r - 1.0) / (1.0 - r) + plateau / 2.0)
            }
            (_, _, 1) => Ok(self.lambda_quadrature_1d()),
            (_, periodic, 2) => Ok(self.lambda_quadrature_2d(periodic)),
            (_, _, d) => Err(Error::Unsupported(format!("λ by quadrature in dimension {d}"))),
        }
    }

    /// `λ` by adaptive quadrature in one dimension, independent of any closed form.
    pub fn lambda_quadrature_1d(&self) -> f64 {
        let singular = self.singular_at_zero();
        if self.periodic {
            // ∫_0^1 ψ = 2 ∫_0^{1/2} ψ by the mirror symmetry
            let bps: Vec<f64> = self.breakpoints_1d().into_iter().filter(|&b| b < HALF).collect();
            2.0 * quadrature::integrate(|t| self.raw(t), 0.0, HALF, &bps, singular, LAMBDA_QUAD_TOL)
        } else {
            let bps = self.breakpoints_1d();
            quadrature::integrate(|t| 2.0 * (1.0 - t) * self.raw(t), 0.0, 1.0, &bps, singular, LAMBDA_QUAD_TOL)
        }
    }

    fn singular_at_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::PowerLawPlateau { .. })
    }

    fn lambda_quadrature_2d(&self, periodic: bool) -> f64 {
        // periodic: 4 ∫∫_{[0,1/2]^2} ψ(|s|);  free: 4 ∫∫_{[0,1]^2} (1-x)(1-y) ψ(|s|)
        let span = if periodic { HALF } else { 1.0 };
        let radial: Vec<f64> = match &self.kind {
            PotentialKind::PowerLawPlateau { .. } => vec![CORE_EDGE],
            PotentialKind::Tabulated { samples } => samples.iter().map(|s| s.0).filter(|&t| t > 0.0).collect(),
            PotentialKind::Constant { .. } => vec![],
        };
        let singular = self.singular_at_zero();
        let tol = LAMBDA_QUAD_TOL;
        let inner = |x: f64| {
            let bps: Vec<f64> = radial.iter().filter(|&&b| b > x).map(|&b| (b * b - x * x).sqrt()).collect();
            let g = |y: f64| {
                let w = if periodic { 1.0 } else { (1.0 - x) * (1.0 - y) };
                w * self.raw((x * x + y * y).sqrt())
            };
            quadrature::integrate(g, 0.0, span, &bps, singular && x < 1e-3, tol * 0.1)
        };
        4.0 * quadrature::integrate(inner, 0.0, span, &radial, singular, tol)
    }

    /// Cell-averaged kernel on `m` uniform cells of the unit interval.
    pub fn cell_kernel(&self, m: usize) -> Result<KernelMatrix> {
        if m < 2 {
            return Err(Error::Precondition(format!("kernel grid m = {m} must be at least 2")));
        }
        if self.dimension != 1 {
            return Err(Error::Unsupported("kernel matrices exist only in one dimension".into()));
        }
        let offsets = self.kernel_offsets(m);
        Ok(KernelMatrix::from_offsets(m, &offsets, self.periodic))
    }

    /// Kernel entry for two cells `k` apart, `k = 0..m` (one dimension).
    pub(crate) fn kernel_offsets(&self, m: usize) -> Vec<f64> {
        let segments = self.segments();
        let h = 1.0 / m as f64;
        let scale = (m * m) as f64;
        // offsets[k] is the entry for cells k apart (circulant or Toeplitz in |k|)
        // periodic kernels only need offsets up to m/2; the rest mirror them
        let distinct = if self.periodic { m / 2 + 1 } else { m };
        let mut offsets: Vec<f64> = (0..distinct)
            .map(|k| {
                if k == 0 {
                    2.0 * scale * weighted(&segments, 0.0, h, h, -1.0)
                } else {
                    let a = k as f64 * h;
                    let lo = a - h;
                    let hi = (a + h).min(1.0);
                    scale * (weighted(&segments, lo, a, -lo, 1.0) + weighted(&segments, a, hi, a + h, -1.0))
                }
            })
            .collect();
        for k in distinct..m {
            offsets.push(offsets[m - k]);
        }
        offsets
    }

    /// Exactly integrable pieces of `ψ` on `[0, 1]` (one dimension).
    fn segments(&self) -> Vec<Segment> {
        match &self.kind {
            PotentialKind::PowerLawPlateau { r, plateau } => {
                let mut v = vec![Segment { lo: 0.0, hi: CORE_EDGE, shape: Shape::PowerFromZero(*r) }];
                if self.periodic {
                    v.push(Segment { lo: CORE_EDGE, hi: 1.0 - CORE_EDGE, shape: Shape::Affine(*plateau, 0.0) });
                    v.push(Segment { lo: 1.0 - CORE_EDGE, hi: 1.0, shape: Shape::PowerFromOne(*r) });
                } else {
                    v.push(Segment { lo: CORE_EDGE, hi: 1.0, shape: Shape::Affine(*plateau, 0.0) });
                }
                v
            }
            PotentialKind::Constant { j } => vec![Segment { lo: 0.0, hi: 1.0, shape: Shape::Affine(*j, 0.0) }],
            PotentialKind::Tabulated { samples } => {
                let limit = if self.periodic { HALF } else { 1.0 };
                let mut v = Vec::new();
                for w in samples.windows(2) {
                    let (t0, v0) = w[0];
                    let (t1, v1) = w[1];
                    if t0 >= limit {
                        break;
                    }
                    let hi = t1.min(limit);
                    let slope = (v1 - v0) / (t1 - t0);
                    v.push(Segment { lo: t0, hi, shape: Shape::Affine(v0 - slope * t0, slope) });
                }
                if self.periodic {
                    // ψ(s) = ψ(1 - s) on [1/2, 1]
                    let mirrored: Vec<Segment> = v
                        .iter()
                        .rev()
                        .map(|seg| {
                            let Shape::Affine(c0, c1) = seg.shape else { unreachable!() };
                            Segment { lo: 1.0 - seg.hi, hi: 1.0 - seg.lo, shape: Shape::Affine(c0 + c1, -c1) }
                        })
                        .collect();
                    v.extend(mirrored);
                }
                v
            }
        }
    }

    /// Renders the plain-text `key=value` block.
    pub fn to_config_block(&self) -> String {
        let mut s = String::new();
        match &self.kind {
            PotentialKind::PowerLawPlateau { r, plateau } => {
                let _ = writeln!(s, "kind=power_plateau\nr={r}\nM={plateau}");
            }
            PotentialKind::Constant { j } => {
                let _ = writeln!(s, "kind=constant\nJ={j}");
            }
            PotentialKind::Tabulated { samples } => {
                let knots: Vec<String> = samples.iter().map(|(t, v)| format!("{t}:{v}")).collect();
                let _ = writeln!(s, "kind=tabulated\nsamples={}", knots.join(","));
            }
        }
        let _ = writeln!(s, "periodic={}\nd={}", self.periodic, self.dimension);
        s
    }

    /// Parses a `key=value` block; `#` starts a comment.
    pub fn from_config_block(text: &str) -> Result<Self> {
        let pairs = key_values(text.lines().enumerate().map(|(i, l)| (i + 1, l)))?;
        Self::from_pairs(&pairs)
    }

    /// Builds a potential from `(line, key, value)` triples.
    pub fn from_pairs(pairs: &[(usize, String, String)]) -> Result<Self> {
        let find = |key: &str| pairs.iter().find(|(_, k, _)| k == key);
        let num = |key: &str| -> Result<Option<f64>> {
            match find(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Config { line: *line, message: format!("{key}: not a number: {v}") }),
            }
        };
        let require = |key: &str| -> Result<f64> {
            num(key)?.ok_or_else(|| Error::Config { line: 0, message: format!("missing key `{key}`") })
        };
        let (kind_line, kind) = match find("kind") {
            Some((l, _, v)) => (*l, v.as_str()),
            None => return Err(Error::Config { line: 0, message: "missing key `kind`".into() }),
        };
        let kind = match kind {
            "power_plateau" => PotentialKind::PowerLawPlateau { r: require("r")?, plateau: require("M")? },
            "constant" => PotentialKind::Constant { j: require("J")? },
            "tabulated" => {
                let (line, _, raw) = find("samples")
                    .ok_or_else(|| Error::Config { line: kind_line, message: "missing key `samples`".into() })?;
                let mut samples = Vec::new();
                for knot in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (t, v) = knot.split_once(':').ok_or_else(|| Error::Config {
                        line: *line,
                        message: format!("knot `{knot}` is not `t:value`"),
                    })?;
                    let parse = |s: &str| {
                        s.trim().parse::<f64>().map_err(|_| Error::Config {
                            line: *line,
                            message: format!("knot `{knot}` is not numeric"),
                        })
                    };
                    samples.push((parse(t)?, parse(v)?));
                }
                PotentialKind::Tabulated { samples }
            }
            other => {
                return Err(Error::Config { line: kind_line, message: format!("unknown potential kind `{other}`") })
            }
        };
        let periodic = match find("periodic") {
            None => true,
            Some((line, _, v)) => v
                .parse::<bool>()
                .map_err(|_| Error::Config { line: *line, message: format!("periodic: expected true/false, got {v}") })?,
        };
        let dimension = match find("d") {
            None => 1,
            Some((line, _, v)) => v
                .parse::<usize>()
                .map_err(|_| Error::Config { line: *line, message: format!("d: expected a positive integer, got {v}") })?,
        };
        Potential::new(kind, periodic, dimension).map_err(|e| Error::Config { line: kind_line, message: e.to_string() })
    }
}

/// Splits `key=value` lines, skipping blanks and `#` comments.
pub(crate) fn key_values<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (line, raw) in lines {
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| Error::Config { line, message: format!("expected key=value, got `{text}`") })?;
        out.push((line, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let idx = samples.partition_point(|s| s.0 <= t);
    if idx == 0 {
        return samples[0].1;
    }
    if idx >= samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (t0, v0) = samples[idx - 1];
    let (t1, v1) = samples[idx];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    /// `s^(-r)`
    PowerFromZero(f64),
    /// `(1 - s)^(-r)`
    PowerFromOne(f64),
    /// `c0 + c1 s`
    Affine(f64, f64),
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    shape: Shape,
}

/// `∫_p^q (alpha + gamma s) ψ(s) ds` for `0 ≤ p ≤ q ≤ 1`.
fn weighted(segments: &[Segment], p: f64, q: f64, alpha: f64, gamma: f64) -> f64 {
    if q <= p {
        return 0.0;
    }
    segments
        .iter()
        .filter(|s| s.hi > p && s.lo < q)
        .map(|s| piece(s.shape, p.max(s.lo), q.min(s.hi), alpha, gamma))
        .sum()
}

fn piece(shape: Shape, p: f64, q: f64, alpha: f64, gamma: f64) -> f64 {
    match shape {
        Shape::PowerFromZero(r) => {
            // ∫ (α + γ u) u^(-r) du
            let f = |u: f64| alpha * u.powf(1.0 - r) / (1.0 - r) + gamma * u.powf(2.0 - r) / (2.0 - r);
            f(q) - f(p)
        }
        Shape::PowerFromOne(r) => {
            // s = 1 - u: (α + γ) - γ u, u from 1 - q to 1 - p
            let a2 = alpha + gamma;
            let f = |u: f64| a2 * u.powf(1.0 - r) / (1.0 - r) - gamma * u.powf(2.0 - r) / (2.0 - r);
            f(1.0 - p) - f(1.0 - q)
        }
        Shape::Affine(c0, c1) => {
            // (α + γ s)(c0 + c1 s) = αc0 + (αc1 + γc0) s + γc1 s²
            let f = |s: f64| alpha * c0 * s + 0.5 * (alpha * c1 + gamma * c0) * s * s + gamma * c1 * s * s * s / 3.0;
            f(q) - f(p)
        }
    }
}

/// Cell-averaged interaction kernel, `entries[i][j] = m² ∫∫ ψ(|x - y|)` over
/// cells `i` and `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    m: usize,
    entries: Vec<f64>,
    periodic: bool,
}

impl KernelMatrix {
    fn from_offsets(m: usize, offsets: &[f64], periodic: bool) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let k = if periodic { (j + m - i) % m } else { i.abs_diff(j) };
                entries[i * m + j] = offsets[k];
            }
        }
        KernelMatrix { m, entries, periodic }
    }

    /// Wraps a dense row-major matrix. Fails unless it is square and symmetric.
    pub fn from_dense(m: usize, entries: Vec<f64>, periodic: bool) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: entries.len() });
        }
        let k = KernelMatrix { m, entries, periodic };
        if !k.is_symmetric() {
            return Err(Error::Precondition("kernel matrix must be symmetric".into()));
        }
        Ok(k)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_mean(&self, i: usize) -> f64 {
        self.row(i).iter().sum::<f64>() / self.m as f64
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `max |K[i][j] - K[0][(j - i) mod m]|`.
    pub fn circulant_defect(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                worst = worst.max((self.get(i, j) - self.get(0, (j + m - i) % m)).abs());
            }
        }
        worst
    }

    /// `α K`.
    pub fn scaled(&self, alpha: f64) -> Self {
        KernelMatrix { m: self.m, entries: self.entries.iter().map(|v| alpha * v).collect(), periodic: self.periodic }
    }

    /// `y = K x` (no `1/m` factor).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks_exact(self.m)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}
