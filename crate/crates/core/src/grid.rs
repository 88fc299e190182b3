//! Discretisations of the loop parameter θ.
//!
//! A [`ThetaGrid`] is either periodic (`N` equispaced nodes on the circle,
//! trapezoid quadrature, Fourier differentiation) or an interval grid on
//! `[0, 2π]` (`N + 1` Chebyshev–Gauss–Lobatto nodes, Clenshaw–Curtis
//! quadrature, Chebyshev differentiation). Loops live on periodic grids;
//! paths based at θ = 0 (the path fibration and its based loops) live on
//! interval grids.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid size {0} must be even and at least 16")]
    BadSize(usize),
    #[error("grid mismatch")]
    Mismatch,
    #[error("sample count {got} does not match grid node count {want}")]
    SampleCount { got: usize, want: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffMethod {
    /// Fourier (periodic) or Chebyshev (interval) differentiation.
    Spectral,
    /// Fourth-order central differences (periodic grids only).
    CentralFd4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Periodic,
    Interval,
}

// forward, inverse
type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

struct GridData {
    kind: GridKind,
    n: usize,
    method: DiffMethod,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    fft: Option<FftPair>,
    // row-major (n+1)² Chebyshev differentiation matrix in θ
    cheb_d: Vec<f64>,
    bary: Vec<f64>,
}

/// A θ-discretisation; cheap to clone (shared data).
#[derive(Clone)]
pub struct ThetaGrid(Arc<GridData>);

impl fmt::Debug for ThetaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ThetaGrid({:?}, N={}, {:?})", self.0.kind, self.0.n, self.0.method)
    }
}

impl PartialEq for ThetaGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.kind == other.0.kind && self.0.n == other.0.n && self.0.method == other.0.method)
    }
}

fn check_size(n: usize) -> Result<(), GridError> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(GridError::BadSize(n));
    }
    Ok(())
}

impl ThetaGrid {
    /// Periodic grid θ_j = 2πj/N with spectral differentiation.
    pub fn periodic(n: usize) -> Result<Self, GridError> {
        Self::periodic_with(n, DiffMethod::Spectral)
    }

    pub fn periodic_with(n: usize, method: DiffMethod) -> Result<Self, GridError> {
        check_size(n)?;
        let nodes = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let weights = vec![2.0 * PI / n as f64; n];
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(ThetaGrid(Arc::new(GridData {
            kind: GridKind::Periodic,
            n,
            method,
            nodes,
            weights,
            fft: Some((fwd, inv)),
            cheb_d: Vec::new(),
            bary: Vec::new(),
        })))
    }

    /// Interval grid on [0, 2π] with `n + 1` Chebyshev–Gauss–Lobatto nodes,
    /// ordered so that node 0 is θ = 0 and node `n` is θ = 2π.
    pub fn interval(n: usize) -> Result<Self, GridError> {
        check_size(n)?;
        let m = n + 1;
        // x_j = cos(jπ/n) descends from 1 to −1; θ = π(1 − x) ascends.
        let x: Vec<f64> = (0..m).map(|j| (j as f64 * PI / n as f64).cos()).collect();
        let nodes: Vec<f64> = x.iter().map(|&xj| PI * (1.0 - xj)).collect();
        let c = |j: usize| -> f64 {
            let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                2.0 * s
            } else {
                s
            }
        };
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j {
                    // use the sine form of x_i − x_j for accuracy
                    let dx = -2.0
                        * (((i + j) as f64) * PI / (2.0 * n as f64)).sin()
                        * (((i as f64) - (j as f64)) * PI / (2.0 * n as f64)).sin();
                    let v = c(i) / c(j) / dx;
                    d[i * m + j] = v;
                    row_sum += v;
                }
            }
            d[i * m + i] = -row_sum;
        }
        // d/dθ = −(1/π) d/dx
        for v in d.iter_mut() {
            *v *= -1.0 / PI;
        }
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * PI).collect();
        let bary = (0..m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Ok(ThetaGrid(Arc::new(GridData {
            kind: GridKind::Interval,
            n,
            method: DiffMethod::Spectral,
            nodes,
            weights,
            fft: None,
            cheb_d: d,
            bary,
        })))
    }

    pub fn kind(&self) -> GridKind {
        self.0.kind
    }

    /// Resolution parameter N (periodic: node count; interval: N + 1 nodes).
    pub fn resolution(&self) -> usize {
        self.0.n
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.0.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn method(&self) -> DiffMethod {
        self.0.method
    }

    pub fn is_periodic(&self) -> bool {
        self.0.kind == GridKind::Periodic
    }

    fn check_len(&self, got: usize) -> Result<(), GridError> {
        if got != self.len() {
            return Err(GridError::SampleCount { got, want: self.len() });
        }
        Ok(())
    }

    /// ∫ over the grid's domain: periodic trapezoid or Clenshaw–Curtis.
    pub fn integrate(&self, samples: &[C64]) -> Result<C64, GridError> {
        self.check_len(samples.len())?;
        Ok(samples.iter().zip(self.weights()).map(|(s, w)| s * *w).sum())
    }

    pub fn integrate_real(&self, samples: &[f64]) -> Result<f64, GridError> {
        self.check_len(samples.len())?;
        Ok(samples.iter().zip(self.weights()).map(|(s, w)| s * w).sum())
    }

    /// Derivative with respect to θ of sampled data.
    pub fn differentiate(&self, samples: &[C64]) -> Result<Vec<C64>, GridError> {
        self.check_len(samples.len())?;
        let n = self.len();
        match (self.0.kind, self.0.method) {
            (GridKind::Periodic, DiffMethod::Spectral) => {
                let (fwd, inv) = self.0.fft.as_ref().expect("periodic grid has plans");
                let mut buf = samples.to_vec();
                fwd.process(&mut buf);
                let half = n / 2;
                for (k, z) in buf.iter_mut().enumerate() {
                    let wave = if k < half {
                        k as f64
                    } else if k == half {
                        0.0
                    } else {
                        k as f64 - n as f64
                    };
                    *z *= C64::new(0.0, wave / n as f64);
                }
                inv.process(&mut buf);
                Ok(buf)
            }
            (GridKind::Periodic, DiffMethod::CentralFd4) => {
                let h = 2.0 * PI / n as f64;
                Ok((0..n)
                    .map(|j| {
                        let f = |o: isize| samples[((j as isize + o).rem_euclid(n as isize)) as usize];
                        (-f(2) + f(1) * 8.0 - f(-1) * 8.0 + f(-2)) / (12.0 * h)
                    })
                    .collect())
            }
            (GridKind::Interval, _) => {
                let d = &self.0.cheb_d;
                Ok((0..n)
                    .map(|i| {
                        let row = &d[i * n..(i + 1) * n];
                        row.iter().zip(samples).map(|(a, s)| s * *a).sum()
                    })
                    .collect())
            }
        }
    }

    /// Evaluates the grid interpolant at an arbitrary θ
    /// (trigonometric for periodic grids, barycentric Chebyshev otherwise).
    pub fn interpolate(&self, samples: &[C64], theta: f64) -> Result<C64, GridError> {
        self.check_len(samples.len())?;
        Ok(self.interpolation_weights(theta).iter().zip(samples).map(|(w, s)| s * *w).sum())
    }

    /// Real weights `w_j(θ)` with `interp(θ) = Σ w_j f_j`.
    pub fn interpolation_weights(&self, theta: f64) -> Vec<f64> {
        let n = self.len();
        match self.0.kind {
            GridKind::Periodic => {
                // Σ_j f_j · (1/N) Σ_k e^{ik(θ−θ_j)}, Nyquist mode split as a cosine
                let half = n / 2;
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|j| {
                        let d = theta - j as f64 * h;
                        let mut s = 1.0;
                        for k in 1..half {
                            s += 2.0 * (k as f64 * d).cos();
                        }
                        s += (half as f64 * d).cos();
                        s / n as f64
                    })
                    .collect()
            }
            GridKind::Interval => {
                let nodes = self.nodes();
                if let Some(j) = nodes.iter().position(|&t| (t - theta).abs() < 1e-15) {
                    let mut w = vec![0.0; n];
                    w[j] = 1.0;
                    return w;
                }
                let raw: Vec<f64> = nodes.iter().zip(&self.0.bary).map(|(&t, &b)| b / (theta - t)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|r| r / total).collect()
            }
        }
    }
}

/// Clenshaw–Curtis weights on [−1, 1] for nodes cos(jπ/n), j = 0..=n.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let nf = n as f64;
    let mut v = vec![1.0; n - 1];
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                let th = (i + 1) as f64 * PI / nf;
                *vi -= 2.0 * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            let th = (i + 1) as f64 * PI / nf;
            *vi -= (nf * th).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                let th = (i + 1) as f64 * PI / nf;
                *vi -= 2.0 * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for i in 1..n {
        w[i] = 2.0 * v[i - 1] / nf;
    }
    w
}

/// Periodic trapezoid rule `(2π/N) Σ samples` on a periodic grid.
pub fn quad_s1(samples: &[C64]) -> C64 {
    let n = samples.len() as f64;
    samples.iter().sum::<C64>() * (2.0 * PI / n)
}

/// Gauss–Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (x.into_iter().map(|t| mid + half * t).collect(), w.into_iter().map(|t| t * half).collect())
}

/// Composite trapezoid weights on `m` uniform nodes of [0, 1] with
/// third-order Gregory end corrections (exact for cubics).
pub fn gregory_weights(m: usize) -> Vec<f64> {
    assert!(m >= 7, "Gregory weights need at least 7 nodes");
    let h = 1.0 / (m - 1) as f64;
    let mut w = vec![h; m];
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (k, e) in ends.iter().enumerate() {
        w[k] = e * h;
        w[m - 1 - k] = e * h;
    }
    w
}
