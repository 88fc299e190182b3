//! Compact matrix groups SU(2) and SU(3) and their Lie algebras.
//!
//! Group elements and algebra elements are stored as small dense complex
//! matrices (at most 3×3, stack allocated). The invariant inner product is
//! `⟨X, Y⟩ = −tr(XY)` in the defining representation, which gives the
//! longest root of su(n) squared length 2.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported matrix size.
pub const MAX_DIM: usize = 3;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("tangency check failed: g⁻¹v deviates from su(n) by {0:.3e}")]
    NotTangent(f64),
    #[error("matrix dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported group dimension {0}")]
    UnsupportedDim(usize),
    #[error("{0} invariant violated by {1:.3e}")]
    Invariant(&'static str, f64),
}

/// Dense complex `n × n` matrix with `n ≤ 3`, row-major with stride 3.
#[derive(Clone, Copy, PartialEq)]
pub struct CMat {
    n: usize,
    a: [C64; 9],
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut rows = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            rows.push(row.join(" "));
        }
        write!(f, "[{}]", rows.join("; "))
    }
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix size {n} out of range");
        CMat { n, a: [ZERO; 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * 3 + i] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * 3 + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m.a[i * 3 + i] = z;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.a[i * 3 + j] = z;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for z in m.a.iter_mut() {
            *z *= s;
        }
        m
    }

    pub fn scale_c(&self, s: C64) -> Self {
        let mut m = *self;
        for z in m.a.iter_mut() {
            *z *= s;
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Determinant (n ≤ 3).
    pub fn det(&self) -> C64 {
        match self.n {
            1 => self.get(0, 0),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                let m = |i, j| self.get(i, j);
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
        }
    }

    /// Row-major entries, re/im interleaved (`2n²` reals).
    pub fn to_reals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let z = self.get(i, j);
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    pub fn from_reals(n: usize, reals: &[f64]) -> Option<Self> {
        if n == 0 || n > MAX_DIM || reals.len() != 2 * n * n {
            return None;
        }
        Some(Self::from_fn(n, |i, j| {
            let k = 2 * (i * n + j);
            C64::new(reals[k], reals[k + 1])
        }))
    }

    /// Anti-Hermitian traceless part, i.e. the orthogonal projection onto su(n).
    pub fn su_part(&self) -> Self {
        let ah = (*self - self.adjoint()).scale(0.5);
        let t = ah.trace() / self.n as f64;
        ah - Self::identity(self.n).scale_c(t)
    }

    /// Matrix exponential by scaling and squaring of a Taylor polynomial.
    pub fn exp(&self) -> Self {
        let norm = self.frobenius();
        let mut squarings = 0u32;
        if norm > 0.25 {
            squarings = (norm / 0.25).log2().ceil() as u32;
        }
        let x = self.scale(0.5f64.powi(squarings as i32));
        // ‖x‖ ≤ 1/4: 16 terms are far below machine precision
        let mut term = Self::identity(self.n);
        let mut sum = term;
        for k in 1..=16 {
            term = (term * x).scale(1.0 / k as f64);
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }
}

impl Add for CMat {
    type Output = CMat;
    fn add(mut self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        for (a, b) in self.a.iter_mut().zip(rhs.a.iter()) {
            *a += *b;
        }
        self
    }
}

impl AddAssign for CMat {
    fn add_assign(&mut self, rhs: CMat) {
        *self = *self + rhs;
    }
}

impl Sub for CMat {
    type Output = CMat;
    fn sub(mut self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        for (a, b) in self.a.iter_mut().zip(rhs.a.iter()) {
            *a -= *b;
        }
        self
    }
}

impl Neg for CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(-1.0)
    }
}

impl Mul for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * 3 + k];
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.a[i * 3 + j] += aik * rhs.a[k * 3 + j];
                }
            }
        }
        out
    }
}

/// Element of K = SU(n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement(CMat);

/// Element of 𝔨 = su(n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraElement(CMat);

/// Tolerance used by the invariant checks on construction.
pub const INVARIANT_TOL: f64 = 1e-12;

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement(CMat::identity(n))
    }

    /// Wraps a matrix, checking unitarity and unit determinant to `tol`.
    pub fn new_checked(m: CMat, tol: f64) -> Result<Self, LieError> {
        let g = GroupElement(m);
        let (u, d) = g.invariant_residuals();
        if u > tol {
            return Err(LieError::Invariant("unitarity", u));
        }
        if d > tol {
            return Err(LieError::Invariant("det = 1", d));
        }
        Ok(g)
    }

    pub fn from_matrix_unchecked(m: CMat) -> Self {
        GroupElement(m)
    }

    /// (‖gg† − I‖_F, |det g − 1|)
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let n = self.0.dim();
        let u = (self.0 * self.0.adjoint() - CMat::identity(n)).frobenius();
        let d = (self.0.det() - ONE).norm();
        (u, d)
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Inverse, i.e. the conjugate transpose.
    pub fn inv(&self) -> Self {
        GroupElement(self.0.adjoint())
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.0 - other.0).frobenius()
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement(self.0 * rhs.0)
    }
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        AlgebraElement(CMat::zeros(n))
    }

    pub fn new_checked(m: CMat, tol: f64) -> Result<Self, LieError> {
        let ah = (m + m.adjoint()).frobenius();
        if ah > tol {
            return Err(LieError::Invariant("anti-Hermitian", ah));
        }
        let tr = m.trace().norm();
        if tr > tol {
            return Err(LieError::Invariant("traceless", tr));
        }
        Ok(AlgebraElement(m))
    }

    pub fn from_matrix_unchecked(m: CMat) -> Self {
        AlgebraElement(m)
    }

    /// Projects an arbitrary matrix onto su(n).
    pub fn project(m: &CMat) -> Self {
        AlgebraElement(m.su_part())
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement(self.0.scale(s))
    }

    pub fn bracket(&self, other: &Self) -> Self {
        AlgebraElement(self.0.commutator(&other.0))
    }

    pub fn norm(&self) -> f64 {
        self.0.frobenius()
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: Self) -> Self {
        AlgebraElement(self.0 + rhs.0)
    }
}

impl AddAssign for AlgebraElement {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: Self) -> Self {
        AlgebraElement(self.0 - rhs.0)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> Self {
        AlgebraElement(-self.0)
    }
}

/// `exp(tX)`.
pub fn exp_alg(x: &AlgebraElement, t: f64) -> GroupElement {
    GroupElement(x.0.scale(t).exp())
}

/// Group adjoint action `Ad_g(X) = gXg⁻¹`. The action of `g⁻¹` is [`ad_inv`].
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement(g.0 * x.0 * g.0.adjoint())
}

/// `ad(g⁻¹)(X) = g⁻¹Xg`.
pub fn ad_inv(g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement(g.0.adjoint() * x.0 * g.0)
}

/// Invariant inner product `−tr(XY)`.
pub fn inner(x: &AlgebraElement, y: &AlgebraElement) -> f64 {
    let (a, b) = (&x.0, &y.0);
    let n = a.dim();
    let mut tr = ZERO;
    for i in 0..n {
        for k in 0..n {
            tr += a.get(i, k) * b.get(k, i);
        }
    }
    -tr.re
}

/// Which Maurer-Cartan form to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trivialization {
    /// `Θ(g)(v) = g⁻¹v`
    Left,
    /// `Θ̂(g)(v) = vg⁻¹`
    Right,
}

/// Tolerance for the tangency check in [`maurer_cartan`].
pub const TANGENCY_TOL: f64 = 1e-10;

pub fn maurer_cartan(g: &GroupElement, v: &CMat, side: Trivialization) -> Result<AlgebraElement, LieError> {
    if v.dim() != g.dim() {
        return Err(LieError::DimensionMismatch(v.dim(), g.dim()));
    }
    let left = g.0.adjoint() * *v;
    let dev = (left - left.su_part()).frobenius();
    if dev > TANGENCY_TOL {
        return Err(LieError::NotTangent(dev));
    }
    Ok(match side {
        Trivialization::Left => AlgebraElement(left),
        Trivialization::Right => AlgebraElement(*v * g.0.adjoint()),
    })
}

/// The concrete compact group K.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Su2,
    Su3,
}

impl GroupKind {
    pub fn dim(&self) -> usize {
        match self {
            GroupKind::Su2 => 2,
            GroupKind::Su3 => 3,
        }
    }

    pub fn algebra_dim(&self) -> usize {
        let n = self.dim();
        n * n - 1
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupKind::Su2 => "su2",
            GroupKind::Su3 => "su3",
        }
    }

    /// Orthonormal basis `E_a` of 𝔨 with respect to [`inner`].
    pub fn basis(&self) -> Vec<AlgebraElement> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let herm: Vec<CMat> = match self {
            GroupKind::Su2 => pauli().to_vec(),
            GroupKind::Su3 => gell_mann().to_vec(),
        };
        herm.into_iter().map(|h| AlgebraElement(h.scale_c(I * s))).collect()
    }
}

impl std::str::FromStr for GroupKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "su2" => Ok(GroupKind::Su2),
            "su3" => Ok(GroupKind::Su3),
            other => Err(format!("unknown group '{other}' (expected su2 or su3)")),
        }
    }
}

/// Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli() -> [CMat; 3] {
    let c = |re: f64, im: f64| C64::new(re, im);
    [
        CMat::from_fn(2, |i, j| if i != j { ONE } else { ZERO }),
        CMat::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => ZERO,
        }),
        CMat::diag(&[ONE, -ONE]),
    ]
}

/// Gell-Mann matrices λ₁..λ₈, normalised so that tr(λₐλ_b) = 2δₐ_b.
pub fn gell_mann() -> [CMat; 8] {
    let mut out = [CMat::zeros(3); 8];
    let set = |m: &mut CMat, i: usize, j: usize, z: C64| m.set(i, j, z);
    set(&mut out[0], 0, 1, ONE);
    set(&mut out[0], 1, 0, ONE);
    set(&mut out[1], 0, 1, -I);
    set(&mut out[1], 1, 0, I);
    set(&mut out[2], 0, 0, ONE);
    set(&mut out[2], 1, 1, -ONE);
    set(&mut out[3], 0, 2, ONE);
    set(&mut out[3], 2, 0, ONE);
    set(&mut out[4], 0, 2, -I);
    set(&mut out[4], 2, 0, I);
    set(&mut out[5], 1, 2, ONE);
    set(&mut out[5], 2, 1, ONE);
    set(&mut out[6], 1, 2, -I);
    set(&mut out[6], 2, 1, I);
    let r = 1.0 / 3f64.sqrt();
    out[7] = CMat::diag(&[C64::new(r, 0.0), C64::new(r, 0.0), C64::new(-2.0 * r, 0.0)]);
    out
}

/// Coordinates `⟨X, E_a⟩` in an orthonormal basis.
pub fn coords(x: &AlgebraElement, basis: &[AlgebraElement]) -> Vec<f64> {
    basis.iter().map(|e| inner(x, e)).collect()
}

pub fn from_coords(c: &[f64], basis: &[AlgebraElement]) -> AlgebraElement {
    let n = basis[0].dim();
    c.iter().zip(basis).fold(AlgebraElement::zero(n), |acc, (&ci, e)| acc + e.scale(ci))
}
