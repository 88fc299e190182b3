//! Discretised loop groups, paths in K, and paths in the loop group.
//!
//! A [`LoopPoint`] samples a map θ ↦ g(θ) ∈ K on a [`ThetaGrid`]; a
//! [`LoopVector`] samples a 𝔨-valued function and is used both for Lie
//! algebra elements of the loop group and for left-trivialised tangent
//! vectors. On a periodic grid these are loops; on an interval grid they are
//! paths on [0, 2π].

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::grid::{gregory_weights, GridError, ThetaGrid};
use crate::liegroup::{
    ad_inv, adjoint, coords, exp_alg, from_coords, inner, AlgebraElement, CMat, GroupElement, GroupKind,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("index {index} out of range for {len} path nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("path must start at the identity loop (deviation {0:.3e})")]
    NotBased(f64),
    #[error("path needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("fixture parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Differentiates each matrix entry of a sampled matrix function.
pub(crate) fn diff_matrices(grid: &ThetaGrid, mats: &[CMat]) -> Result<Vec<CMat>, GridError> {
    let n = mats.first().map(|m| m.dim()).unwrap_or(1);
    let mut out = vec![CMat::zeros(n); mats.len()];
    let mut series = vec![C64::new(0.0, 0.0); mats.len()];
    for i in 0..n {
        for j in 0..n {
            for (s, m) in series.iter_mut().zip(mats) {
                *s = m.get(i, j);
            }
            let d = grid.differentiate(&series)?;
            for (o, v) in out.iter_mut().zip(d) {
                o.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// 𝔨-valued grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopVector {
    grid: ThetaGrid,
    values: Vec<AlgebraElement>,
}

impl LoopVector {
    pub fn new(grid: ThetaGrid, values: Vec<AlgebraElement>) -> Result<Self, LoopError> {
        if values.len() != grid.len() {
            return Err(GridError::SampleCount { got: values.len(), want: grid.len() }.into());
        }
        Ok(LoopVector { grid, values })
    }

    pub fn zeros(grid: &ThetaGrid, n: usize) -> Self {
        LoopVector { grid: grid.clone(), values: vec![AlgebraElement::zero(n); grid.len()] }
    }

    pub fn constant(grid: &ThetaGrid, x: AlgebraElement) -> Self {
        LoopVector { grid: grid.clone(), values: vec![x; grid.len()] }
    }

    pub fn from_fn(grid: &ThetaGrid, f: impl Fn(f64) -> AlgebraElement) -> Self {
        LoopVector { grid: grid.clone(), values: grid.nodes().iter().map(|&t| f(t)).collect() }
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn values(&self) -> &[AlgebraElement] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> AlgebraElement,
    ) -> Result<Self, LoopError> {
        if self.grid != other.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(LoopVector {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LoopError> {
        self.zip_with(other, |a, b| *a + *b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LoopError> {
        self.zip_with(other, |a, b| *a - *b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x.scale(s))
    }

    /// Multiplies node j by `w(θ_j)`.
    pub fn scale_by(&self, w: impl Fn(f64) -> f64) -> Self {
        LoopVector {
            grid: self.grid.clone(),
            values: self.values.iter().zip(self.grid.nodes()).map(|(x, &t)| x.scale(w(t))).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&AlgebraElement) -> AlgebraElement) -> Self {
        LoopVector { grid: self.grid.clone(), values: self.values.iter().map(f).collect() }
    }

    /// Pointwise Lie bracket.
    pub fn bracket(&self, other: &Self) -> Result<Self, LoopError> {
        self.zip_with(other, |a, b| a.bracket(b))
    }

    /// Pointwise `Ad_g`.
    pub fn ad(&self, g: &LoopPoint) -> Result<Self, LoopError> {
        if self.grid != g.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(LoopVector {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&g.values).map(|(x, g)| adjoint(g, x)).collect(),
        })
    }

    /// Pointwise `ad(g⁻¹)`.
    pub fn ad_inv(&self, g: &LoopPoint) -> Result<Self, LoopError> {
        if self.grid != g.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(LoopVector {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&g.values).map(|(x, g)| ad_inv(g, x)).collect(),
        })
    }

    /// ∂_θ, componentwise.
    pub fn dtheta(&self) -> Result<Self, LoopError> {
        let mats: Vec<CMat> = self.values.iter().map(|x| *x.matrix()).collect();
        let d = diff_matrices(&self.grid, &mats)?;
        Ok(LoopVector { grid: self.grid.clone(), values: d.iter().map(AlgebraElement::project).collect() })
    }

    /// Pointwise `⟨self, other⟩`.
    pub fn inner_samples(&self, other: &Self) -> Result<Vec<f64>, LoopError> {
        if self.grid != other.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| inner(a, b)).collect())
    }

    /// `∫ ⟨self, other⟩ dθ` with the grid's quadrature.
    pub fn pair_integral(&self, other: &Self) -> Result<f64, LoopError> {
        let s = self.inner_samples(other)?;
        Ok(self.grid.integrate_real(&s)?)
    }

    /// Largest node-wise Frobenius norm.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Value of the grid interpolant at θ.
    pub fn interpolate(&self, theta: f64) -> AlgebraElement {
        let w = self.grid.interpolation_weights(theta);
        let n = self.dim();
        let mut acc = CMat::zeros(n);
        for (wj, x) in w.iter().zip(&self.values) {
            acc += x.matrix().scale(*wj);
        }
        AlgebraElement::from_matrix_unchecked(acc)
    }

    /// Basis coordinates per node.
    pub fn coordinates(&self, basis: &[AlgebraElement]) -> Vec<Vec<f64>> {
        self.values.iter().map(|x| coords(x, basis)).collect()
    }
}

/// Group-valued grid function: a loop (periodic grid) or a path (interval grid).
#[derive(Clone, Debug, PartialEq)]
pub struct LoopPoint {
    grid: ThetaGrid,
    values: Vec<GroupElement>,
}

impl LoopPoint {
    pub fn new(grid: ThetaGrid, values: Vec<GroupElement>) -> Result<Self, LoopError> {
        if values.len() != grid.len() {
            return Err(GridError::SampleCount { got: values.len(), want: grid.len() }.into());
        }
        Ok(LoopPoint { grid, values })
    }

    pub fn identity(grid: &ThetaGrid, n: usize) -> Self {
        Self::constant(grid, GroupElement::identity(n))
    }

    pub fn constant(grid: &ThetaGrid, k: GroupElement) -> Self {
        LoopPoint { grid: grid.clone(), values: vec![k; grid.len()] }
    }

    pub fn from_fn(grid: &ThetaGrid, f: impl Fn(f64) -> GroupElement) -> Self {
        LoopPoint { grid: grid.clone(), values: grid.nodes().iter().map(|&t| f(t)).collect() }
    }

    /// Pointwise `exp(X(θ))`.
    pub fn exp(x: &LoopVector) -> Self {
        LoopPoint { grid: x.grid.clone(), values: x.values.iter().map(|v| exp_alg(v, 1.0)).collect() }
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn values(&self) -> &[GroupElement] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn first(&self) -> &GroupElement {
        &self.values[0]
    }

    pub fn last(&self) -> &GroupElement {
        self.values.last().expect("non-empty grid")
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self, LoopError> {
        if self.grid != other.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(LoopPoint {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).collect(),
        })
    }

    /// Pointwise inverse.
    pub fn inv(&self) -> Self {
        LoopPoint { grid: self.grid.clone(), values: self.values.iter().map(|g| g.inv()).collect() }
    }

    /// `g · exp(tX)` pointwise: the flow of the left-invariant field X.
    pub fn flow(&self, x: &LoopVector, t: f64) -> Result<Self, LoopError> {
        if self.grid != x.grid {
            return Err(LoopError::GridMismatch);
        }
        Ok(LoopPoint {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&x.values).map(|(g, v)| *g * exp_alg(v, t)).collect(),
        })
    }

    fn raw_derivative(&self) -> Result<Vec<CMat>, LoopError> {
        let mats: Vec<CMat> = self.values.iter().map(|g| *g.matrix()).collect();
        Ok(diff_matrices(&self.grid, &mats)?)
    }

    /// `Z(g) = (∂_θ g) g⁻¹`.
    pub fn z(&self) -> Result<LoopVector, LoopError> {
        let d = self.raw_derivative()?;
        Ok(LoopVector {
            grid: self.grid.clone(),
            values: d
                .iter()
                .zip(&self.values)
                .map(|(dg, g)| AlgebraElement::project(&(*dg * g.matrix().adjoint())))
                .collect(),
        })
    }

    /// `g⁻¹ ∂_θ g`.
    pub fn left_derivative(&self) -> Result<LoopVector, LoopError> {
        let d = self.raw_derivative()?;
        Ok(LoopVector {
            grid: self.grid.clone(),
            values: d
                .iter()
                .zip(&self.values)
                .map(|(dg, g)| AlgebraElement::project(&(g.matrix().adjoint() * *dg)))
                .collect(),
        })
    }

    /// Largest node-wise Frobenius distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
    }

    /// Grid interpolant at θ (not re-unitarised).
    pub fn interpolate(&self, theta: f64) -> GroupElement {
        let w = self.grid.interpolation_weights(theta);
        let mut acc = CMat::zeros(self.dim());
        for (wj, g) in w.iter().zip(&self.values) {
            acc += g.matrix().scale(*wj);
        }
        GroupElement::from_matrix_unchecked(acc)
    }

    /// Fixture text: one line per node, `2n²` reals (row-major, re/im interleaved).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for g in &self.values {
            let line: Vec<String> = g.matrix().to_reals().iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(grid: &ThetaGrid, n: usize, text: &str) -> Result<Self, LoopError> {
        let mut values = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let reals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| LoopError::Parse(format!("line {}: {e}", ln + 1))))
                .collect::<Result<_, _>>()?;
            let m = CMat::from_reals(n, &reals).ok_or_else(|| {
                LoopError::Parse(format!("line {}: expected {} reals, got {}", ln + 1, 2 * n * n, reals.len()))
            })?;
            let g =
                GroupElement::new_checked(m, 1e-10).map_err(|e| LoopError::Parse(format!("line {}: {e}", ln + 1)))?;
            values.push(g);
        }
        LoopPoint::new(grid.clone(), values)
    }
}

/// Finite Fourier sum `f(θ) = a₀ + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierProfile {
    pub a0: f64,
    /// `(a_k, b_k)` for k = 1, 2, …
    pub harmonics: Vec<(f64, f64)>,
}

impl FourierProfile {
    pub fn sin() -> Self {
        FourierProfile { a0: 0.0, harmonics: vec![(0.0, 1.0)] }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.a0
            + self
                .harmonics
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let kt = (k + 1) as f64 * t;
                    a * kt.cos() + b * kt.sin()
                })
                .sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.harmonics
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let kf = (k + 1) as f64;
                kf * (-a * (kf * t).sin() + b * (kf * t).cos())
            })
            .sum()
    }
}

/// `g(θ) = exp(f(θ) ξ)` with an exactly known derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticLoop {
    pub generator: AlgebraElement,
    pub profile: FourierProfile,
}

impl AnalyticLoop {
    pub fn new(generator: AlgebraElement, profile: FourierProfile) -> Self {
        AnalyticLoop { generator, profile }
    }

    /// Whether `f(0) = 0`, i.e. the loop is based.
    pub fn is_based(&self) -> bool {
        self.profile.value(0.0).abs() < 1e-14
    }

    pub fn realize(&self, grid: &ThetaGrid) -> LoopPoint {
        LoopPoint::from_fn(grid, |t| exp_alg(&self.generator, self.profile.value(t)))
    }

    /// Exact `Z = f′(θ) ξ` (ξ commutes with exp(fξ)).
    pub fn z_exact(&self, grid: &ThetaGrid) -> LoopVector {
        LoopVector::from_fn(grid, |t| self.generator.scale(self.profile.derivative(t)))
    }

    /// Two lines: basis coefficients of ξ, then `a₀ a₁ b₁ a₂ b₂ …`.
    pub fn to_text(&self, kind: GroupKind) -> String {
        let c = coords(&self.generator, &kind.basis());
        let mut prof = vec![self.profile.a0];
        for (a, b) in &self.profile.harmonics {
            prof.push(*a);
            prof.push(*b);
        }
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ");
        format!("{}\n{}\n", fmt(&c), fmt(&prof))
    }

    pub fn from_text(kind: GroupKind, text: &str) -> Result<Self, LoopError> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        if lines.len() != 2 {
            return Err(LoopError::Parse(format!("expected 2 lines, got {}", lines.len())));
        }
        let parse = |l: &str| -> Result<Vec<f64>, LoopError> {
            l.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| LoopError::Parse(e.to_string()))).collect()
        };
        let c = parse(lines[0])?;
        if c.len() != kind.algebra_dim() {
            return Err(LoopError::Parse(format!(
                "expected {} generator coefficients, got {}",
                kind.algebra_dim(),
                c.len()
            )));
        }
        let p = parse(lines[1])?;
        if p.is_empty() || p.len() % 2 != 1 {
            return Err(LoopError::Parse("profile needs a₀ followed by (a_k, b_k) pairs".into()));
        }
        let harmonics = p[1..].chunks(2).map(|w| (w[0], w[1])).collect();
        Ok(AnalyticLoop { generator: from_coords(&c, &kind.basis()), profile: FourierProfile { a0: p[0], harmonics } })
    }
}

/// Minimum node count for a [`PathInLoopGroup`].
pub const MIN_PATH_NODES: usize = 64;

/// A path s ↦ f(s) in the loop group on uniform nodes of [0, 1], f(0) = 1.
#[derive(Clone, Debug)]
pub struct PathInLoopGroup {
    loops: Vec<LoopPoint>,
}

impl PathInLoopGroup {
    pub fn new(loops: Vec<LoopPoint>) -> Result<Self, LoopError> {
        if loops.len() < MIN_PATH_NODES {
            return Err(LoopError::TooFewNodes { min: MIN_PATH_NODES, got: loops.len() });
        }
        let grid = loops[0].grid().clone();
        if loops.iter().any(|l| *l.grid() != grid) {
            return Err(LoopError::GridMismatch);
        }
        let id = LoopPoint::identity(&grid, loops[0].dim());
        let dev = loops[0].distance(&id);
        if dev > 1e-12 {
            return Err(LoopError::NotBased(dev));
        }
        Ok(PathInLoopGroup { loops })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> LoopPoint) -> Result<Self, LoopError> {
        let denom = (m.max(2) - 1) as f64;
        Self::new((0..m).map(|i| f(i as f64 / denom)).collect())
    }

    pub fn identity(grid: &ThetaGrid, n: usize, m: usize) -> Result<Self, LoopError> {
        Self::from_fn(m, |_| LoopPoint::identity(grid, n))
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    pub fn nodes(&self) -> &[LoopPoint] {
        &self.loops
    }

    pub fn grid(&self) -> &ThetaGrid {
        self.loops[0].grid()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.loops.len() - 1) as f64
    }

    pub fn endpoint(&self) -> &LoopPoint {
        self.loops.last().expect("non-empty path")
    }

    /// Quadrature weights on the s-nodes.
    pub fn weights(&self) -> Vec<f64> {
        gregory_weights(self.loops.len())
    }

    /// Pointwise product of two paths.
    pub fn mul(&self, other: &Self) -> Result<Self, LoopError> {
        if self.len() != other.len() {
            return Err(LoopError::IndexOutOfRange { index: other.len(), len: self.len() });
        }
        let loops = self.loops.iter().zip(&other.loops).map(|(a, b)| a.mul(b)).collect::<Result<Vec<_>, _>>()?;
        Self::new(loops)
    }

    /// Left-trivialised velocity `f(s)⁻¹ f′(s)` at node `i`, by fourth-order
    /// finite differences (one-sided at the ends).
    pub fn velocity(&self, i: usize) -> Result<LoopVector, LoopError> {
        let m = self.loops.len();
        if i >= m {
            return Err(LoopError::IndexOutOfRange { index: i, len: m });
        }
        let h = self.step();
        // (offset, coefficient) stencils, all scaled by 1/(12h)
        let stencil: &[(isize, f64)] = if i == 0 {
            &[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)]
        } else if i == 1 {
            &[(-1, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)]
        } else if i == m - 2 {
            &[(1, 3.0), (0, 10.0), (-1, -18.0), (-2, 6.0), (-3, -1.0)]
        } else if i == m - 1 {
            &[(0, 25.0), (-1, -48.0), (-2, 36.0), (-3, -16.0), (-4, 3.0)]
        } else {
            &[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)]
        };
        let here = &self.loops[i];
        let n = here.dim();
        let values = (0..here.grid().len())
            .map(|j| {
                let mut d = CMat::zeros(n);
                for &(o, c) in stencil {
                    let idx = (i as isize + o) as usize;
                    d += self.loops[idx].values()[j].matrix().scale(c);
                }
                let d = d.scale(1.0 / (12.0 * h));
                AlgebraElement::project(&(here.values()[j].matrix().adjoint() * d))
            })
            .collect();
        LoopVector::new(here.grid().clone(), values)
    }
}
