//! Differential forms as alternating multilinear evaluators.
//!
//! A [`Form`] is a degree plus a closure `(point, vectors) -> value`. Points
//! live on anything implementing [`Manifold`]: the manifold supplies flows of
//! canonically extended vector fields (constant on charts, left-invariant on
//! groups) and their Lie brackets, which is all the Cartan formula in
//! [`ext_d`] needs.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::grid::GridError;
use crate::liegroup::{exp_alg, AlgebraElement, GroupElement, LieError};
use crate::loops::{LoopError, LoopPoint, LoopVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("expected {expected} tangent vectors, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("finite-difference step must be positive, got {0}")]
    DegenerateStep(f64),
    #[error("scenario mismatch: {0}")]
    Scenario(String),
    #[error("sign self-test failed: {0}")]
    ConventionAbort(String),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type FormResult<T> = Result<T, FormError>;

/// A space whose tangent vectors extend canonically to vector fields with
/// computable flows and brackets.
pub trait Manifold: Clone {
    type Tangent: Clone;

    /// Point reached after time `t` along the canonical extension of `v`.
    fn flow(&self, v: &Self::Tangent, t: f64) -> FormResult<Self>;

    /// Lie bracket of the canonical extensions of `v` and `w`.
    fn bracket(&self, v: &Self::Tangent, w: &Self::Tangent) -> FormResult<Self::Tangent>;
}

/// Values a form can take: a real vector space with a size.
pub trait FormValue: Clone {
    fn scaled(&self, a: f64) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    fn magnitude(&self) -> f64;
}

impl FormValue for f64 {
    fn scaled(&self, a: f64) -> Self {
        a * self
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FormValue for C64 {
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FormValue for AlgebraElement {
    fn scaled(&self, a: f64) -> Self {
        self.scale(a)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x.scale(a);
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl FormValue for LoopVector {
    fn scaled(&self, a: f64) -> Self {
        self.scale(a)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self = self.add(&x.scale(a)).expect("form values share a grid");
    }
    fn magnitude(&self) -> f64 {
        self.max_norm()
    }
}

/// Points of the model spaces: charts, K, loop groups, path spaces, products
/// and fibre products.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioPoint {
    Chart(Vec<f64>),
    Group(GroupElement),
    /// A loop (periodic grid) or a based path (interval grid).
    Loop(LoopPoint),
    Product(Vec<ScenarioPoint>),
    /// A point of the p-fold fibre product: p total-space points over one base point.
    Fibre(Vec<ScenarioPoint>),
}

/// Tangent vectors, left-trivialised on group-like factors.
#[derive(Clone, Debug, PartialEq)]
pub enum TangentVector {
    Chart(Vec<f64>),
    Group(AlgebraElement),
    Loop(LoopVector),
    Product(Vec<TangentVector>),
    Fibre(Vec<TangentVector>),
}

fn mismatch(what: &str) -> FormError {
    FormError::Scenario(format!("tangent shape does not match {what} point"))
}

impl ScenarioPoint {
    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioPoint::Chart(_) => "chart",
            ScenarioPoint::Group(_) => "group",
            ScenarioPoint::Loop(_) => "loop",
            ScenarioPoint::Product(_) => "product",
            ScenarioPoint::Fibre(_) => "fibre",
        }
    }

    pub fn components(&self) -> FormResult<&[ScenarioPoint]> {
        match self {
            ScenarioPoint::Product(c) | ScenarioPoint::Fibre(c) => Ok(c),
            other => Err(FormError::Scenario(format!("{} point has no components", other.tag()))),
        }
    }

    pub fn as_chart(&self) -> FormResult<&[f64]> {
        match self {
            ScenarioPoint::Chart(m) => Ok(m),
            other => Err(FormError::Scenario(format!("expected chart point, got {}", other.tag()))),
        }
    }

    pub fn as_group(&self) -> FormResult<&GroupElement> {
        match self {
            ScenarioPoint::Group(g) => Ok(g),
            other => Err(FormError::Scenario(format!("expected group point, got {}", other.tag()))),
        }
    }

    pub fn as_loop(&self) -> FormResult<&LoopPoint> {
        match self {
            ScenarioPoint::Loop(g) => Ok(g),
            other => Err(FormError::Scenario(format!("expected loop point, got {}", other.tag()))),
        }
    }
}

impl TangentVector {
    pub fn components(&self) -> FormResult<&[TangentVector]> {
        match self {
            TangentVector::Product(c) | TangentVector::Fibre(c) => Ok(c),
            _ => Err(FormError::Scenario("tangent has no components".into())),
        }
    }

    pub fn as_chart(&self) -> FormResult<&[f64]> {
        match self {
            TangentVector::Chart(u) => Ok(u),
            _ => Err(FormError::Scenario("expected chart tangent".into())),
        }
    }

    pub fn as_group(&self) -> FormResult<&AlgebraElement> {
        match self {
            TangentVector::Group(x) => Ok(x),
            _ => Err(FormError::Scenario("expected group tangent".into())),
        }
    }

    pub fn as_loop(&self) -> FormResult<&LoopVector> {
        match self {
            TangentVector::Loop(x) => Ok(x),
            _ => Err(FormError::Scenario("expected loop tangent".into())),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> FormResult<Self> {
        Ok(match (self, other) {
            (TangentVector::Chart(u), TangentVector::Chart(v)) if u.len() == v.len() => {
                TangentVector::Chart(u.iter().zip(v).map(|(x, y)| a * x + b * y).collect())
            }
            (TangentVector::Group(x), TangentVector::Group(y)) => TangentVector::Group(x.scale(a) + y.scale(b)),
            (TangentVector::Loop(x), TangentVector::Loop(y)) => TangentVector::Loop(x.scale(a).add(&y.scale(b))?),
            (TangentVector::Product(x), TangentVector::Product(y)) if x.len() == y.len() => {
                TangentVector::Product(x.iter().zip(y).map(|(p, q)| p.combine(a, q, b)).collect::<FormResult<_>>()?)
            }
            (TangentVector::Fibre(x), TangentVector::Fibre(y)) if x.len() == y.len() => {
                TangentVector::Fibre(x.iter().zip(y).map(|(p, q)| p.combine(a, q, b)).collect::<FormResult<_>>()?)
            }
            _ => return Err(FormError::Scenario("cannot combine tangents of different shapes".into())),
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        self.combine(a, self, 0.0).expect("same shape")
    }
}

impl Manifold for ScenarioPoint {
    type Tangent = TangentVector;

    fn flow(&self, v: &TangentVector, t: f64) -> FormResult<Self> {
        Ok(match (self, v) {
            (ScenarioPoint::Chart(m), TangentVector::Chart(u)) if m.len() == u.len() => {
                ScenarioPoint::Chart(m.iter().zip(u).map(|(x, y)| x + t * y).collect())
            }
            (ScenarioPoint::Group(g), TangentVector::Group(x)) => ScenarioPoint::Group(*g * exp_alg(x, t)),
            (ScenarioPoint::Loop(g), TangentVector::Loop(x)) => ScenarioPoint::Loop(g.flow(x, t)?),
            (ScenarioPoint::Product(ps), TangentVector::Product(vs)) if ps.len() == vs.len() => {
                ScenarioPoint::Product(ps.iter().zip(vs).map(|(p, v)| p.flow(v, t)).collect::<FormResult<_>>()?)
            }
            (ScenarioPoint::Fibre(ps), TangentVector::Fibre(vs)) if ps.len() == vs.len() => {
                ScenarioPoint::Fibre(ps.iter().zip(vs).map(|(p, v)| p.flow(v, t)).collect::<FormResult<_>>()?)
            }
            (p, _) => return Err(mismatch(p.tag())),
        })
    }

    fn bracket(&self, v: &TangentVector, w: &TangentVector) -> FormResult<TangentVector> {
        Ok(match (self, v, w) {
            (ScenarioPoint::Chart(m), TangentVector::Chart(_), TangentVector::Chart(_)) => {
                TangentVector::Chart(vec![0.0; m.len()])
            }
            (ScenarioPoint::Group(_), TangentVector::Group(x), TangentVector::Group(y)) => {
                TangentVector::Group(x.bracket(y))
            }
            (ScenarioPoint::Loop(_), TangentVector::Loop(x), TangentVector::Loop(y)) => {
                TangentVector::Loop(x.bracket(y)?)
            }
            (ScenarioPoint::Product(ps), TangentVector::Product(vs), TangentVector::Product(ws))
                if ps.len() == vs.len() && ps.len() == ws.len() =>
            {
                TangentVector::Product(
                    ps.iter().zip(vs).zip(ws).map(|((p, v), w)| p.bracket(v, w)).collect::<FormResult<_>>()?,
                )
            }
            (ScenarioPoint::Fibre(ps), TangentVector::Fibre(vs), TangentVector::Fibre(ws))
                if ps.len() == vs.len() && ps.len() == ws.len() =>
            {
                TangentVector::Fibre(
                    ps.iter().zip(vs).zip(ws).map(|((p, v), w)| p.bracket(v, w)).collect::<FormResult<_>>()?,
                )
            }
            (p, _, _) => return Err(mismatch(p.tag())),
        })
    }
}

type Evaluator<P, V> = dyn Fn(&P, &[<P as Manifold>::Tangent]) -> FormResult<V> + Send + Sync;

/// A differential form of fixed degree with values in `V`.
pub struct Form<P: Manifold, V> {
    degree: usize,
    name: String,
    tag: &'static str,
    eval: Arc<Evaluator<P, V>>,
}

impl<P: Manifold, V> Clone for Form<P, V> {
    fn clone(&self) -> Self {
        Form { degree: self.degree, name: self.name.clone(), tag: self.tag, eval: self.eval.clone() }
    }
}

impl<P: Manifold, V> fmt::Debug for Form<P, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form({}, degree {}, {})", self.name, self.degree, self.tag)
    }
}

/// Complex-valued form on scenario points.
pub type KForm = Form<ScenarioPoint, C64>;

impl<P: Manifold + 'static, V: FormValue + 'static> Form<P, V> {
    pub fn new(
        degree: usize,
        name: impl Into<String>,
        tag: &'static str,
        eval: impl Fn(&P, &[P::Tangent]) -> FormResult<V> + Send + Sync + 'static,
    ) -> Self {
        Form { degree, name: name.into(), tag, eval: Arc::new(eval) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> &'static str {
        self.tag
    }

    pub fn eval(&self, pt: &P, vs: &[P::Tangent]) -> FormResult<V> {
        if vs.len() != self.degree {
            return Err(FormError::Arity { expected: self.degree, got: vs.len() });
        }
        (self.eval)(pt, vs)
    }

    /// Exterior derivative as a new form.
    pub fn d(&self, fd: FdConfig) -> Self {
        let inner = self.clone();
        Form::new(self.degree + 1, format!("d({})", self.name), self.tag, move |p, vs| ext_d(&inner, p, vs, &fd))
    }

    /// Applies a linear map to the values.
    pub fn map<W: FormValue + 'static>(&self, f: impl Fn(V) -> W + Send + Sync + 'static) -> Form<P, W> {
        let inner = self.clone();
        Form::new(self.degree, self.name.clone(), self.tag, move |p, vs| inner.eval(p, vs).map(&f))
    }

    /// `a·self + b·other`, both of the same degree.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> FormResult<Self> {
        if self.degree != other.degree {
            return Err(FormError::Arity { expected: self.degree, got: other.degree });
        }
        let (x, y) = (self.clone(), other.clone());
        Ok(Form::new(self.degree, format!("{a}*{} + {b}*{}", self.name, other.name), self.tag, move |p, vs| {
            let mut v = x.eval(p, vs)?.scaled(a);
            v.axpy(b, &y.eval(p, vs)?);
            Ok(v)
        }))
    }

    /// Pulls back along a smooth map with an explicit tangent pushforward.
    pub fn pullback<Q: Manifold + 'static>(
        &self,
        name: impl Into<String>,
        map: impl Fn(&Q) -> FormResult<P> + Send + Sync + 'static,
        push: impl Fn(&Q, &Q::Tangent) -> FormResult<P::Tangent> + Send + Sync + 'static,
    ) -> Form<Q, V> {
        let inner = self.clone();
        Form::new(self.degree, name, self.tag, move |q, vs| {
            let p = map(q)?;
            let pushed = vs.iter().map(|v| push(q, v)).collect::<FormResult<Vec<_>>>()?;
            inner.eval(&p, &pushed)
        })
    }
}

/// Finite-difference settings for [`ext_d`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-4, richardson: true }
    }
}

impl FdConfig {
    pub fn plain(step: f64) -> Self {
        FdConfig { step, richardson: false }
    }
}

/// Directional derivative of `f` along the flow of `v`, central differences.
pub fn directional<P: Manifold, V: FormValue>(
    pt: &P,
    v: &P::Tangent,
    fd: &FdConfig,
    f: impl Fn(&P) -> FormResult<V>,
) -> FormResult<V> {
    if fd.step.is_nan() || fd.step <= 0.0 {
        return Err(FormError::DegenerateStep(fd.step));
    }
    let central = |h: f64| -> FormResult<V> {
        let mut d = f(&pt.flow(v, h)?)?;
        d.axpy(-1.0, &f(&pt.flow(v, -h)?)?);
        Ok(d.scaled(0.5 / h))
    };
    let dh = central(fd.step)?;
    if !fd.richardson {
        return Ok(dh);
    }
    let mut d2 = central(0.5 * fd.step)?.scaled(4.0 / 3.0);
    d2.axpy(-1.0 / 3.0, &dh);
    Ok(d2)
}

fn without<T: Clone>(xs: &[T], skip: &[usize]) -> Vec<T> {
    xs.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, x)| x.clone()).collect()
}

/// `dω(V₀, …, V_k)` by the Cartan formula with canonical extensions.
pub fn ext_d<P: Manifold + 'static, V: FormValue + 'static>(
    omega: &Form<P, V>,
    pt: &P,
    vs: &[P::Tangent],
    fd: &FdConfig,
) -> FormResult<V> {
    let k = omega.degree();
    if vs.len() != k + 1 {
        return Err(FormError::Arity { expected: k + 1, got: vs.len() });
    }
    let mut acc: Option<V> = None;
    let mut add = |sign: f64, val: V| match acc.as_mut() {
        Some(a) => a.axpy(sign, &val),
        None => acc = Some(val.scaled(sign)),
    };
    for i in 0..=k {
        let rest = without(vs, &[i]);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        add(sign, directional(pt, &vs[i], fd, |q| omega.eval(q, &rest))?);
    }
    for i in 0..=k {
        for j in (i + 1)..=k {
            let mut args = vec![pt.bracket(&vs[i], &vs[j])?];
            args.extend(without(vs, &[i, j]));
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            add(sign, omega.eval(pt, &args)?);
        }
    }
    Ok(acc.expect("at least one term"))
}

/// Sign of a permutation given as an index list.
pub fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Pairs forms through a multilinear map on their values:
/// `(1/∏dᵢ!) Σ_σ sgn σ · p(ω₁(V_σ…), …, ω_k(V_σ…))`.
pub fn pair_forms<P, V, W>(
    p: impl Fn(&[V]) -> W + Send + Sync + 'static,
    forms: &[Form<P, V>],
    name: impl Into<String>,
    tag: &'static str,
) -> Form<P, W>
where
    P: Manifold + 'static,
    V: FormValue + 'static,
    W: FormValue + 'static,
{
    let forms: Vec<Form<P, V>> = forms.to_vec();
    let degrees: Vec<usize> = forms.iter().map(|f| f.degree()).collect();
    let d: usize = degrees.iter().sum();
    let norm = 1.0 / degrees.iter().map(|&k| factorial(k)).product::<f64>();
    let perms: Vec<(Vec<usize>, f64)> = (0..d)
        .permutations(d)
        .map(|perm| {
            let s = permutation_sign(&perm);
            (perm, s)
        })
        .collect();
    Form::new(d, name, tag, move |pt: &P, vs: &[P::Tangent]| {
        let mut acc: Option<W> = None;
        for (perm, sign) in &perms {
            let mut vals = Vec::with_capacity(forms.len());
            let mut start = 0;
            for f in &forms {
                let args: Vec<_> = perm[start..start + f.degree()].iter().map(|&i| vs[i].clone()).collect();
                start += f.degree();
                vals.push(f.eval(pt, &args)?);
            }
            let term = p(&vals);
            match acc.as_mut() {
                Some(a) => a.axpy(sign * norm, &term),
                None => acc = Some(term.scaled(sign * norm)),
            }
        }
        match acc {
            Some(a) => Ok(a),
            None => {
                // all-zero-degree input: the single empty permutation
                let vals = forms.iter().map(|f| f.eval(pt, &[])).collect::<FormResult<Vec<_>>>()?;
                Ok(p(&vals))
            }
        }
    })
}

/// δ on fibre products: `Σ_{i=1}^{p+1} (−1)^{i−1} π_i^*` with π_i omitting the i-th factor.
pub fn delta_fibre<V: FormValue + 'static>(omega: &Form<ScenarioPoint, V>) -> Form<ScenarioPoint, V> {
    let inner = omega.clone();
    Form::new(omega.degree(), format!("δ({})", omega.name()), omega.tag(), move |pt, vs| {
        let ScenarioPoint::Fibre(ps) = pt else {
            return Err(FormError::Scenario(format!("δ on fibre products needs a fibre point, got {}", pt.tag())));
        };
        if ps.len() < 2 {
            return Err(FormError::Scenario("fibre point needs at least two entries".into()));
        }
        let tangents: Vec<Vec<TangentVector>> =
            vs.iter().map(|v| v.components().map(|c| c.to_vec())).collect::<FormResult<_>>()?;
        if tangents.iter().any(|t| t.len() != ps.len()) {
            return Err(mismatch("fibre"));
        }
        let mut acc: Option<V> = None;
        for i in 0..ps.len() {
            let face = ScenarioPoint::Fibre(without(ps, &[i]));
            let args: Vec<TangentVector> = tangents.iter().map(|t| TangentVector::Fibre(without(t, &[i]))).collect();
            let val = inner.eval(&face, &args)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            match acc.as_mut() {
                Some(a) => a.axpy(sign, &val),
                None => acc = Some(val.scaled(sign)),
            }
        }
        Ok(acc.expect("non-empty"))
    })
}

/// Nerve face `d_i : 𝒢^{q} → 𝒢^{q−1}` on points and left-trivialised tangents.
pub fn nerve_face(
    i: usize,
    loops: &[LoopPoint],
    tangents: &[Vec<LoopVector>],
) -> FormResult<(Vec<LoopPoint>, Vec<Vec<LoopVector>>)> {
    let q = loops.len();
    if i > q {
        return Err(FormError::Scenario(format!("face {i} out of range for {q}-tuple")));
    }
    if i == 0 || i == q {
        let drop = if i == 0 { 0 } else { q - 1 };
        let pts = without(loops, &[drop]);
        let tv = tangents.iter().map(|t| without(t, &[drop])).collect();
        return Ok((pts, tv));
    }
    let (a, b) = (i - 1, i);
    let mut pts = loops[..a].to_vec();
    pts.push(loops[a].mul(&loops[b])?);
    pts.extend_from_slice(&loops[b + 1..]);
    let tv = tangents
        .iter()
        .map(|t| {
            let mut out = t[..a].to_vec();
            out.push(t[a].ad_inv(&loops[b])?.add(&t[b])?);
            out.extend_from_slice(&t[b + 1..]);
            Ok(out)
        })
        .collect::<FormResult<_>>()?;
    Ok((pts, tv))
}

fn loop_tuple(pt: &ScenarioPoint) -> FormResult<Vec<LoopPoint>> {
    pt.components()?.iter().map(|c| c.as_loop().cloned()).collect()
}

fn loop_tangents(v: &TangentVector) -> FormResult<Vec<LoopVector>> {
    v.components()?.iter().map(|c| c.as_loop().cloned()).collect()
}

/// Packs a loop tuple as a nerve point.
pub fn nerve_point(loops: &[LoopPoint]) -> ScenarioPoint {
    ScenarioPoint::Product(loops.iter().cloned().map(ScenarioPoint::Loop).collect())
}

/// Packs a tangent tuple at a nerve point.
pub fn nerve_tangent(vs: &[LoopVector]) -> TangentVector {
    TangentVector::Product(vs.iter().cloned().map(TangentVector::Loop).collect())
}

/// δ on the nerve: `Σ_{i=0}^{q} (−1)^i d_i^*` from forms on 𝒢^{q−1} to forms on 𝒢^q.
pub fn delta_nerve<V: FormValue + 'static>(omega: &Form<ScenarioPoint, V>) -> Form<ScenarioPoint, V> {
    let inner = omega.clone();
    Form::new(omega.degree(), format!("δ({})", omega.name()), omega.tag(), move |pt, vs| {
        let loops = loop_tuple(pt)?;
        if loops.len() < 2 {
            return Err(FormError::Scenario("nerve δ needs at least a pair".into()));
        }
        let tangents = vs.iter().map(loop_tangents).collect::<FormResult<Vec<_>>>()?;
        if tangents.iter().any(|t| t.len() != loops.len()) {
            return Err(mismatch("nerve"));
        }
        let mut acc: Option<V> = None;
        for i in 0..=loops.len() {
            let (pts, tv) = nerve_face(i, &loops, &tangents)?;
            let args: Vec<TangentVector> = tv.iter().map(|t| nerve_tangent(t)).collect();
            let val = inner.eval(&nerve_point(&pts), &args)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            match acc.as_mut() {
                Some(a) => a.axpy(sign, &val),
                None => acc = Some(val.scaled(sign)),
            }
        }
        Ok(acc.expect("non-empty"))
    })
}

/// Largest `|ω(…, Vᵢ, …, Vⱼ, …) + ω(…, Vⱼ, …, Vᵢ, …)|` over all pairs, relative to `|ω|`.
pub fn alternation_residual<P: Manifold + 'static, V: FormValue + 'static>(
    omega: &Form<P, V>,
    pt: &P,
    vs: &[P::Tangent],
) -> FormResult<f64> {
    let base = omega.eval(pt, vs)?;
    let scale = base.magnitude().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..vs.len() {
        for j in (i + 1)..vs.len() {
            let mut sw = vs.to_vec();
            sw.swap(i, j);
            let mut s = omega.eval(pt, &sw)?;
            s.axpy(1.0, &base);
            worst = worst.max(s.magnitude() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ThetaGrid;
    use crate::liegroup::GroupKind;

    fn chart(v: &[f64]) -> TangentVector {
        TangentVector::Chart(v.to_vec())
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
    }

    #[test]
    fn d_of_constant_one_form_vanishes() {
        let w = KForm::new(1, "const", "-", |_, vs| {
            let u = vs[0].as_chart()?;
            Ok(C64::new(2.0 * u[0] - u[1], 0.0))
        });
        let p = ScenarioPoint::Chart(vec![0.3, -0.2]);
        let v = ext_d(&w, &p, &[chart(&[1.0, 0.5]), chart(&[-0.4, 2.0])], &FdConfig::default()).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn dd_of_scalar_vanishes() {
        let phi = KForm::new(0, "phi", "-", |p, _| {
            let m = p.as_chart()?;
            Ok(C64::new((m[0] * m[1]).sin() + m[0].powi(3), m[1].exp()))
        });
        let ddphi = phi.d(FdConfig::default()).d(FdConfig::default());
        let p = ScenarioPoint::Chart(vec![0.4, 0.7]);
        let v = ddphi.eval(&p, &[chart(&[1.0, 0.3]), chart(&[-0.2, 0.9])]).unwrap();
        assert!(v.norm() < 1e-8, "{v}");
    }

    #[test]
    fn exterior_derivative_of_exact_one_form() {
        // d(x dy) = dx ∧ dy
        let w = KForm::new(1, "x dy", "-", |p, vs| {
            let m = p.as_chart()?;
            Ok(C64::new(m[0] * vs[0].as_chart()?[1], 0.0))
        });
        let p = ScenarioPoint::Chart(vec![0.1, 0.2]);
        let (u, v) = ([1.0, 2.0], [3.0, -1.0]);
        let dw = ext_d(&w, &p, &[chart(&u), chart(&v)], &FdConfig::default()).unwrap();
        assert!((dw.re - (u[0] * v[1] - u[1] * v[0])).abs() < 1e-10);
    }

    #[test]
    fn maurer_cartan_structure_equation() {
        let kind = GroupKind::Su3;
        let b = kind.basis();
        let theta = Form::<ScenarioPoint, AlgebraElement>::new(1, "Θ", "-", |_, vs| Ok(*vs[0].as_group()?));
        let half_bracket = pair_forms(
            |v: &[AlgebraElement]| v[0].bracket(&v[1]).scale(0.5),
            &[theta.clone(), theta.clone()],
            "½[Θ,Θ]",
            "-",
        );
        let g = ScenarioPoint::Group(exp_alg(&(b[0].scale(0.7) + b[4].scale(-1.1)), 1.0));
        let x = TangentVector::Group(b[1] + b[5].scale(0.3));
        let y = TangentVector::Group(b[2].scale(-0.8) + b[7]);
        let dth = ext_d(&theta, &g, &[x.clone(), y.clone()], &FdConfig::default()).unwrap();
        let hb = half_bracket.eval(&g, &[x, y]).unwrap();
        assert!((dth + hb).norm() < 1e-6);
    }

    #[test]
    fn richardson_rate_is_second_order_without_extrapolation() {
        let w = KForm::new(1, "w", "-", |p, vs| {
            let m = p.as_chart()?;
            let u = vs[0].as_chart()?;
            Ok(C64::new((m[0] * m[1]).sin() * u[0] + m[0].exp() * u[1], 0.0))
        });
        let p = ScenarioPoint::Chart(vec![0.3, 0.9]);
        let vs = [chart(&[1.0, 0.0]), chart(&[0.0, 1.0])];
        let exact = ext_d(&w, &p, &vs, &FdConfig { step: 1e-3, richardson: true }).unwrap();
        let e1 = (ext_d(&w, &p, &vs, &FdConfig::plain(0.02)).unwrap() - exact).norm();
        let e2 = (ext_d(&w, &p, &vs, &FdConfig::plain(0.01)).unwrap() - exact).norm();
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn nonpositive_step_is_rejected() {
        let w = KForm::new(0, "c", "-", |_, _| Ok(C64::new(1.0, 0.0)));
        let p = ScenarioPoint::Chart(vec![0.0]);
        let err = ext_d(&w, &p, &[chart(&[1.0])], &FdConfig::plain(0.0)).unwrap_err();
        assert_eq!(err, FormError::DegenerateStep(0.0));
    }

    #[test]
    fn pairing_of_one_forms() {
        let a = KForm::new(1, "a", "-", |_, vs| Ok(C64::new(vs[0].as_chart()?[0], 0.0)));
        let b = KForm::new(1, "b", "-", |_, vs| Ok(C64::new(vs[0].as_chart()?[1], 0.0)));
        let prod = pair_forms(|v: &[C64]| v[0] * v[1], &[a.clone(), b], "a∧b", "-");
        let sym = pair_forms(|v: &[C64]| v[0] * v[1], &[a.clone(), a], "a∧a", "-");
        let p = ScenarioPoint::Chart(vec![0.0, 0.0]);
        let (u, v) = (chart(&[1.0, 2.0]), chart(&[3.0, 5.0]));
        assert!((prod.eval(&p, &[u.clone(), v.clone()]).unwrap().re - (5.0 - 6.0)).abs() < 1e-15);
        assert!(sym.eval(&p, &[u, v]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn antisymmetric_p_gives_factorial_multiple_of_pointwise_rule() {
        let a = KForm::new(1, "a", "-", |_, vs| Ok(C64::new(vs[0].as_chart()?[0], 0.0)));
        let b = KForm::new(1, "b", "-", |_, vs| Ok(C64::new(vs[0].as_chart()?[1], 0.0)));
        let p = |v: &[C64]| v[0] * v[1];
        let paired = pair_forms(p, &[a.clone(), b.clone()], "p(a,b)", "-");
        let pt = ScenarioPoint::Chart(vec![0.0, 0.0]);
        let (u, v) = (chart(&[0.3, -1.2]), chart(&[2.0, 0.7]));
        let pointwise = |x: &TangentVector, y: &TangentVector| {
            let (ax, by) =
                (a.eval(&pt, std::slice::from_ref(x)).unwrap(), b.eval(&pt, std::slice::from_ref(y)).unwrap());
            let (ay, bx) =
                (a.eval(&pt, std::slice::from_ref(y)).unwrap(), b.eval(&pt, std::slice::from_ref(x)).unwrap());
            (ax * by - ay * bx) * 0.5
        };
        let d = 2.0;
        assert!((paired.eval(&pt, &[u.clone(), v.clone()]).unwrap() - pointwise(&u, &v) * d).norm() < 1e-14);
    }

    fn loop_form_2() -> KForm {
        KForm::new(2, "test2", "-", |p, vs| {
            let g = p.as_loop()?;
            let x = vs[0].as_loop()?;
            let y = vs[1].as_loop()?;
            let z = g.z()?;
            let s = x.bracket(y)?.inner_samples(&z)?;
            let t = x.inner_samples(&y.dtheta()?)?;
            let u = y.inner_samples(&x.dtheta()?)?;
            let vals: Vec<f64> = s.iter().zip(&t).zip(&u).map(|((a, b), c)| a + b - c).collect();
            Ok(C64::new(0.0, g.grid().integrate_real(&vals)?))
        })
    }

    fn random_loops(grid: &ThetaGrid, n: usize, seed: f64) -> (Vec<LoopPoint>, Vec<Vec<LoopVector>>) {
        let b = GroupKind::Su2.basis();
        let lp = |s: f64| {
            LoopPoint::exp(&LoopVector::from_fn(grid, |t| {
                b[0].scale((t + s).sin()) + b[1].scale(0.5 * (2.0 * t - s).cos()) + b[2].scale(0.3 * s)
            }))
        };
        let lv = |s: f64| {
            LoopVector::from_fn(grid, |t| b[(s as usize) % 3].scale((t * 2.0 + s).cos()) + b[2].scale(s.sin()))
        };
        let loops = (0..n).map(|i| lp(seed + i as f64)).collect();
        let tangents = (0..3).map(|k| (0..n).map(|i| lv(seed * 1.3 + (i * 3 + k) as f64)).collect()).collect();
        (loops, tangents)
    }

    #[test]
    fn nerve_delta_squared_vanishes() {
        let grid = ThetaGrid::periodic(32).unwrap();
        let r = loop_form_2();
        // lift R to 𝒢¹ = 1-tuples
        let r1 = KForm::new(2, "R on 𝒢¹", "-", move |p, vs| {
            let g = p.components()?[0].clone();
            let a: Vec<TangentVector> =
                vs.iter().map(|v| v.components().map(|c| c[0].clone())).collect::<FormResult<_>>()?;
            r.eval(&g, &a)
        });
        let dd = delta_nerve(&delta_nerve(&r1));
        let (loops, tv) = random_loops(&grid, 3, 0.4);
        let pt = nerve_point(&loops);
        let vs: Vec<_> = tv.iter().take(2).map(|t| nerve_tangent(t)).collect();
        let v = dd.eval(&pt, &vs).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
    }

    #[test]
    fn nerve_face_pushes_tangents_by_multiplication() {
        let grid = ThetaGrid::periodic(16).unwrap();
        let (loops, tv) = random_loops(&grid, 2, 1.0);
        let (pts, push) = nerve_face(1, &loops, &[tv[0].clone()]).unwrap();
        // compare with the derivative of t ↦ g e^{tX} h e^{tY}
        let h = 1e-5;
        let curve = |t: f64| loops[0].flow(&tv[0][0], t).unwrap().mul(&loops[1].flow(&tv[0][1], t).unwrap()).unwrap();
        let gh = &pts[0];
        let (p, m) = (curve(h), curve(-h));
        let mats: Vec<_> = (0..grid.len())
            .map(|j| {
                let d = (*p.values()[j].matrix() - *m.values()[j].matrix()).scale(0.5 / h);
                AlgebraElement::project(&(gh.values()[j].matrix().adjoint() * d))
            })
            .collect();
        let fd = LoopVector::new(grid.clone(), mats).unwrap();
        assert!(fd.sub(&push[0][0]).unwrap().max_norm() < 1e-8);
        assert!(nerve_face(3, &loops, &[]).is_err());
    }

    #[test]
    fn fibre_delta_squared_and_pullback_from_base() {
        let grid = ThetaGrid::periodic(16).unwrap();
        // a 1-form on Y^[2] = pairs of (m, g)
        let w = KForm::new(1, "w", "-", |p, vs| {
            let ps = p.components()?;
            let ts = vs[0].components()?;
            let g1 = ps[0].components()?[1].as_loop()?;
            let g2 = ps[1].components()?[1].as_loop()?;
            let x1 = ts[0].components()?[1].as_loop()?;
            let m = ps[0].components()?[0].as_chart()?;
            let tau = g1.inv().mul(g2)?;
            Ok(C64::new(m[0], x1.pair_integral(&tau.z()?)?))
        });
        let dd = delta_fibre(&delta_fibre(&w));
        let total =
            |g: LoopPoint| ScenarioPoint::Product(vec![ScenarioPoint::Chart(vec![0.2, -0.1]), ScenarioPoint::Loop(g)]);
        let tan = |x: LoopVector| TangentVector::Product(vec![chart(&[1.0, 0.3]), TangentVector::Loop(x)]);
        let (loops, tv) = random_loops(&grid, 4, 0.2);
        let pt = ScenarioPoint::Fibre(loops.into_iter().map(total).collect());
        let v = TangentVector::Fibre(tv[0].iter().cloned().map(tan).collect());
        assert!(dd.eval(&pt, &[v]).unwrap().norm() < 1e-12);

        // δ(π^*η) = 0
        let eta = KForm::new(1, "η", "-", |p, vs| {
            let m = p.as_chart()?;
            Ok(C64::new(m[0] * vs[0].as_chart()?[1], 0.0))
        });
        let pulled = eta.pullback::<ScenarioPoint>(
            "π^*η",
            |p| Ok(p.components()?[0].components()?[0].clone()),
            |_, v| Ok(v.components()?[0].components()?[0].clone()),
        );
        let (loops, tv) = random_loops(&grid, 2, 0.9);
        let pt = ScenarioPoint::Fibre(loops.into_iter().map(total).collect());
        let v = TangentVector::Fibre(tv[1].iter().cloned().map(tan).collect());
        assert!(delta_fibre(&pulled).eval(&pt, &[v]).unwrap().norm() == 0.0);
    }

    #[test]
    fn alternation_of_paired_loop_form() {
        let grid = ThetaGrid::periodic(32).unwrap();
        let r = loop_form_2();
        let one = KForm::new(1, "θ-avg", "-", |p, vs| {
            let z = p.as_loop()?.z()?;
            Ok(C64::new(z.pair_integral(vs[0].as_loop()?)?, 0.0))
        });
        let three = pair_forms(|v: &[C64]| v[0] * v[1], &[r, one], "R∧w", "-");
        let (loops, tv) = random_loops(&grid, 1, 0.6);
        let pt = ScenarioPoint::Loop(loops[0].clone());
        let vs: Vec<_> = tv.iter().map(|t| TangentVector::Loop(t[0].clone())).collect();
        assert!(alternation_residual(&three, &pt, &vs).unwrap() < 1e-10);
    }
}
