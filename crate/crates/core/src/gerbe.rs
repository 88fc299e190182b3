//! The lifting bundle gerbe of an L(K)-bundle on two concrete scenarios.
//!
//! [`BundleScenario`] carries the geometry (connection A, Higgs field Φ,
//! curvature F, ∇Φ, the difference map τ and the structure-group action).
//! [`Gerbe`] builds the forms of the derivation chain on top of it: ε, β, the
//! curving f and the string 3-form.
//!
//! Points of the total space are [`ScenarioPoint`]s: `Product([Chart(m),
//! Loop(g)])` on the trivial bundle and `Loop(p)` (a based path on an interval
//! grid) on the path fibration. Points of the fibre product Y^[q] are
//! `Fibre([p₁, …, p_q])`; the face `π_i` omits the i-th entry.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::centext::{eval_r, ExtensionData};
use crate::forms::{
    directional, ext_d, pair_forms, FdConfig, Form, FormError, FormResult, KForm, ScenarioPoint, TangentVector,
};
use crate::grid::{gauss_legendre, GridKind, ThetaGrid};
use crate::liegroup::{adjoint, inner, maurer_cartan, AlgebraElement, CMat, GroupElement, GroupKind, Trivialization};
use crate::loops::{LoopPoint, LoopVector};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// How F and ∇Φ are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureRoute {
    /// Closed-form expressions.
    Closed,
    /// `dA + ½[A, A]` and `dΦ + [A, Φ] − ∂_θA` with finite-difference d.
    FiniteDifference,
}

/// `Σ E_b (c cos kθ + s sin kθ)` with terms `(b, k, c, s)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrigField {
    pub terms: Vec<(usize, u32, f64, f64)>,
}

impl TrigField {
    pub fn zero() -> Self {
        TrigField::default()
    }

    pub fn term(b: usize, k: u32, c: f64, s: f64) -> Self {
        TrigField { terms: vec![(b, k, c, s)] }
    }

    pub fn plus(mut self, b: usize, k: u32, c: f64, s: f64) -> Self {
        self.terms.push((b, k, c, s));
        self
    }

    fn at(&self, basis: &[AlgebraElement], t: f64, deriv: bool) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(basis[0].dim());
        for &(b, k, c, s) in &self.terms {
            let kt = k as f64 * t;
            let w = if deriv { k as f64 * (-c * kt.sin() + s * kt.cos()) } else { c * kt.cos() + s * kt.sin() };
            acc += basis[b].scale(w);
        }
        acc
    }

    pub fn sample(&self, grid: &ThetaGrid, basis: &[AlgebraElement]) -> LoopVector {
        LoopVector::from_fn(grid, |t| self.at(basis, t, false))
    }

    /// Exact ∂_θ of [`TrigField::sample`].
    pub fn sample_dtheta(&self, grid: &ThetaGrid, basis: &[AlgebraElement]) -> LoopVector {
        LoopVector::from_fn(grid, |t| self.at(basis, t, true))
    }
}

/// Chart dimension of the trivial bundle.
pub const CHART_DIM: usize = 4;

/// `M × L(K)` over the box `(−1, 1)⁴` with base connection
/// `a(m)(u) = ρ(m) Σ uᵢ aᵢ(θ)` and Higgs seed `φ(m) = ρ(m) Σ mᵢ φᵢ(θ)`,
/// `ρ(m) = 1 − |m|²/4 + c·m₁m₂`.
#[derive(Clone, Debug)]
pub struct TrivialBundle {
    grid: ThetaGrid,
    kind: GroupKind,
    bump: f64,
    a: Vec<LoopVector>,
    a_dtheta: Vec<LoopVector>,
    phi: Vec<LoopVector>,
}

impl TrivialBundle {
    pub fn new(
        grid: &ThetaGrid,
        kind: GroupKind,
        a: &[TrigField; CHART_DIM],
        phi: &[TrigField; CHART_DIM],
        bump: f64,
    ) -> Self {
        let b = kind.basis();
        TrivialBundle {
            grid: grid.clone(),
            kind,
            bump,
            a: a.iter().map(|f| f.sample(grid, &b)).collect(),
            a_dtheta: a.iter().map(|f| f.sample_dtheta(grid, &b)).collect(),
            phi: phi.iter().map(|f| f.sample(grid, &b)).collect(),
        }
    }

    /// Generic non-abelian instance used by the suites.
    pub fn default_instance(grid: &ThetaGrid, kind: GroupKind) -> Self {
        let a = [
            TrigField::term(0, 1, 0.0, 1.0),
            TrigField::term(1, 1, 1.0, 0.0),
            TrigField::term(2, 2, 0.0, 1.0).plus(0, 1, 0.5, 0.0),
            TrigField::term(2, 0, 0.4, 0.0).plus(1, 2, 0.6, 0.0),
        ];
        let phi =
            [TrigField::term(2, 0, 1.0, 0.0), TrigField::zero(), TrigField::term(0, 1, 0.0, 1.0), TrigField::zero()];
        Self::new(grid, kind, &a, &phi, 0.2)
    }

    /// Every field along the first basis element.
    pub fn abelian(grid: &ThetaGrid, kind: GroupKind) -> Self {
        let a = [
            TrigField::term(0, 1, 0.0, 1.0),
            TrigField::term(0, 1, 1.0, 0.0),
            TrigField::term(0, 2, 0.0, 1.0),
            TrigField::term(0, 0, 0.4, 0.0).plus(0, 2, 0.6, 0.0),
        ];
        let phi =
            [TrigField::term(0, 0, 1.0, 0.0), TrigField::zero(), TrigField::term(0, 1, 0.0, 1.0), TrigField::zero()];
        Self::new(grid, kind, &a, &phi, 0.2)
    }

    /// `a = 0` with the default Higgs seed.
    pub fn flat(grid: &ThetaGrid, kind: GroupKind, with_phi: bool) -> Self {
        let z = || TrigField::zero();
        let phi = if with_phi {
            [TrigField::term(2, 0, 1.0, 0.0), z(), TrigField::term(0, 1, 0.0, 1.0), z()]
        } else {
            [z(), z(), z(), z()]
        };
        Self::new(grid, kind, &[z(), z(), z(), z()], &phi, 0.2)
    }

    /// Same connection, different Higgs seed.
    pub fn with_phi(&self, phi: &[TrigField; CHART_DIM]) -> Self {
        let b = self.kind.basis();
        TrivialBundle { phi: phi.iter().map(|f| f.sample(&self.grid, &b)).collect(), ..self.clone() }
    }

    pub fn rho(&self, m: &[f64]) -> f64 {
        1.0 - m.iter().map(|x| x * x).sum::<f64>() / 4.0 + self.bump * m[0] * m[1]
    }

    pub fn grad_rho(&self, m: &[f64]) -> [f64; CHART_DIM] {
        [-0.5 * m[0] + self.bump * m[1], -0.5 * m[1] + self.bump * m[0], -0.5 * m[2], -0.5 * m[3]]
    }

    fn combo(&self, fields: &[LoopVector], w: &[f64]) -> LoopVector {
        let mut acc = LoopVector::zeros(&self.grid, self.kind.dim());
        for (f, c) in fields.iter().zip(w) {
            if *c != 0.0 {
                acc = acc.add(&f.scale(*c)).expect("shared grid");
            }
        }
        acc
    }

    /// `a(m)(u)`.
    pub fn base_a(&self, m: &[f64], u: &[f64]) -> LoopVector {
        self.combo(&self.a, u).scale(self.rho(m))
    }

    /// `φ(m)`.
    pub fn base_phi(&self, m: &[f64]) -> LoopVector {
        self.combo(&self.phi, m).scale(self.rho(m))
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// `(da)(u, v) = D_u a(v) − D_v a(u)`.
    fn base_da(&self, m: &[f64], u: &[f64], v: &[f64]) -> LoopVector {
        let g = self.grad_rho(m);
        let (gu, gv) = (Self::dot(&g, u), Self::dot(&g, v));
        self.combo(&self.a, v).scale(gu).sub(&self.combo(&self.a, u).scale(gv)).expect("shared grid")
    }

    /// `D_u φ`.
    fn base_dphi(&self, m: &[f64], u: &[f64]) -> LoopVector {
        let gu = Self::dot(&self.grad_rho(m), u);
        let rho = self.rho(m);
        let w: Vec<f64> = m.iter().zip(u).map(|(mi, ui)| gu * mi + rho * ui).collect();
        self.combo(&self.phi, &w)
    }

    /// Exact `∂_θ a(m)(u)`.
    fn base_a_dtheta(&self, m: &[f64], u: &[f64]) -> LoopVector {
        self.combo(&self.a_dtheta, u).scale(self.rho(m))
    }
}

/// The path fibration PK → K, p ↦ p(2π), over based paths on an interval grid.
#[derive(Clone, Debug)]
pub struct PathFibration {
    grid: ThetaGrid,
    kind: GroupKind,
}

/// Tolerance for p(0) = e, X(0) = 0 and fibre membership.
pub const BASE_TOL: f64 = 1e-10;

impl PathFibration {
    pub fn new(grid: &ThetaGrid, kind: GroupKind) -> FormResult<Self> {
        if grid.kind() != GridKind::Interval {
            return Err(FormError::Scenario("the path fibration needs an interval grid".into()));
        }
        Ok(PathFibration { grid: grid.clone(), kind })
    }

    /// Right Maurer-Cartan form of the projection: `ad(p(2π)) X(2π)`.
    fn projected(&self, p: &LoopPoint, x: &LoopVector) -> AlgebraElement {
        adjoint(p.last(), x.values().last().expect("non-empty"))
    }

    fn check(&self, p: &LoopPoint, x: Option<&LoopVector>) -> FormResult<()> {
        let dev = p.first().distance(&GroupElement::identity(p.dim()));
        if dev > BASE_TOL {
            return Err(FormError::Scenario(format!("path does not start at the identity ({dev:.2e})")));
        }
        if let Some(x) = x {
            let d = x.values()[0].norm();
            if d > BASE_TOL {
                return Err(FormError::Scenario(format!("tangent does not vanish at θ = 0 ({d:.2e})")));
            }
        }
        Ok(())
    }

    /// `A(X) = X − (θ/2π) ad(p⁻¹) π^*Θ̂(X)`.
    pub fn connection(&self, p: &LoopPoint, x: &LoopVector) -> FormResult<LoopVector> {
        self.check(p, Some(x))?;
        let w = LoopVector::constant(&self.grid, self.projected(p, x));
        Ok(x.sub(&w.ad_inv(p)?.scale_by(|t| t / (2.0 * PI)))?)
    }

    /// `F(X, Y) = (θ²/8π² − θ/4π) ad(p⁻¹)[π^*Θ̂, π^*Θ̂](X, Y)`.
    pub fn curvature(&self, p: &LoopPoint, x: &LoopVector, y: &LoopVector) -> FormResult<LoopVector> {
        self.check(p, None)?;
        let br = self.projected(p, x).bracket(&self.projected(p, y)).scale(2.0);
        Ok(LoopVector::constant(&self.grid, br).ad_inv(p)?.scale_by(|t| t * t / (8.0 * PI * PI) - t / (4.0 * PI)))
    }

    /// `∇Φ(X) = (1/2π) ad(p⁻¹) π^*Θ̂(X)`.
    pub fn nabla_phi(&self, p: &LoopPoint, x: &LoopVector) -> FormResult<LoopVector> {
        self.check(p, None)?;
        Ok(LoopVector::constant(&self.grid, self.projected(p, x)).ad_inv(p)?.scale(1.0 / (2.0 * PI)))
    }

    /// Horizontal lift of a left-trivialised tangent ζ at p(2π):
    /// `X(θ) = (θ/2π) ad(p(θ)⁻¹ p(2π)) ζ`.
    pub fn horizontal_lift(&self, p: &LoopPoint, zeta: &AlgebraElement) -> FormResult<LoopVector> {
        let w = LoopVector::constant(&self.grid, adjoint(p.last(), zeta));
        Ok(w.ad_inv(p)?.scale_by(|t| t / (2.0 * PI)))
    }
}

/// A concrete principal L(K)-bundle with connection and Higgs field.
#[derive(Clone, Debug)]
pub enum BundleScenario {
    Trivial(TrivialBundle),
    Path(PathFibration),
}

fn split_point(p: &ScenarioPoint) -> FormResult<(&[f64], &LoopPoint)> {
    let c = p.components()?;
    if c.len() != 2 {
        return Err(FormError::Scenario("trivial-bundle points are (m, g)".into()));
    }
    Ok((c[0].as_chart()?, c[1].as_loop()?))
}

fn split_tangent(v: &TangentVector) -> FormResult<(&[f64], &LoopVector)> {
    let c = v.components()?;
    if c.len() != 2 {
        return Err(FormError::Scenario("trivial-bundle tangents are (u, X)".into()));
    }
    Ok((c[0].as_chart()?, c[1].as_loop()?))
}

/// `(m, g)` as a trivial-bundle point.
pub fn trivial_point(m: &[f64], g: LoopPoint) -> ScenarioPoint {
    ScenarioPoint::Product(vec![ScenarioPoint::Chart(m.to_vec()), ScenarioPoint::Loop(g)])
}

/// `(u, X)` as a trivial-bundle tangent.
pub fn trivial_tangent(u: &[f64], x: LoopVector) -> TangentVector {
    TangentVector::Product(vec![TangentVector::Chart(u.to_vec()), TangentVector::Loop(x)])
}

impl BundleScenario {
    pub fn name(&self) -> &'static str {
        match self {
            BundleScenario::Trivial(_) => "trivial-bundle",
            BundleScenario::Path(_) => "path-fibration",
        }
    }

    pub fn grid(&self) -> &ThetaGrid {
        match self {
            BundleScenario::Trivial(t) => &t.grid,
            BundleScenario::Path(p) => &p.grid,
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            BundleScenario::Trivial(t) => t.kind,
            BundleScenario::Path(p) => p.kind,
        }
    }

    /// The structure-group part of a point: g for (m, g), the path itself otherwise.
    pub fn loop_part<'a>(&self, p: &'a ScenarioPoint) -> FormResult<&'a LoopPoint> {
        match self {
            BundleScenario::Trivial(_) => Ok(split_point(p)?.1),
            BundleScenario::Path(_) => p.as_loop(),
        }
    }

    /// The vertical part of a tangent, left-trivialised.
    pub fn loop_tangent<'a>(&self, v: &'a TangentVector) -> FormResult<&'a LoopVector> {
        match self {
            BundleScenario::Trivial(_) => Ok(split_tangent(v)?.1),
            BundleScenario::Path(_) => v.as_loop(),
        }
    }

    /// Connection `A(V)`.
    pub fn connection(&self, p: &ScenarioPoint, v: &TangentVector) -> FormResult<LoopVector> {
        match self {
            BundleScenario::Trivial(t) => {
                let (m, g) = split_point(p)?;
                let (u, x) = split_tangent(v)?;
                Ok(t.base_a(m, u).ad_inv(g)?.add(x)?)
            }
            BundleScenario::Path(pf) => pf.connection(p.as_loop()?, v.as_loop()?),
        }
    }

    /// Higgs field `Φ(p)`.
    pub fn higgs(&self, p: &ScenarioPoint) -> FormResult<LoopVector> {
        match self {
            BundleScenario::Trivial(t) => {
                let (m, g) = split_point(p)?;
                Ok(t.base_phi(m).ad_inv(g)?.add(&g.left_derivative()?)?)
            }
            BundleScenario::Path(pf) => {
                let g = p.as_loop()?;
                pf.check(g, None)?;
                Ok(g.left_derivative()?)
            }
        }
    }

    /// Curvature `F(V, W)`.
    pub fn curvature(
        &self,
        p: &ScenarioPoint,
        v: &TangentVector,
        w: &TangentVector,
        route: CurvatureRoute,
        fd: &FdConfig,
    ) -> FormResult<LoopVector> {
        if route == CurvatureRoute::FiniteDifference {
            let a = self.connection_form();
            let da = ext_d(&a, p, &[v.clone(), w.clone()], fd)?;
            return Ok(da.add(&self.connection(p, v)?.bracket(&self.connection(p, w)?)?)?);
        }
        match self {
            BundleScenario::Trivial(t) => {
                let (m, g) = split_point(p)?;
                let (u, _) = split_tangent(v)?;
                let (uu, _) = split_tangent(w)?;
                let (au, av) = (t.base_a(m, u), t.base_a(m, uu));
                Ok(t.base_da(m, u, uu).add(&au.bracket(&av)?)?.ad_inv(g)?)
            }
            BundleScenario::Path(pf) => pf.curvature(p.as_loop()?, v.as_loop()?, w.as_loop()?),
        }
    }

    /// `∇Φ(V) = dΦ(V) + [A(V), Φ] − ∂_θA(V)`.
    pub fn nabla_phi(
        &self,
        p: &ScenarioPoint,
        v: &TangentVector,
        route: CurvatureRoute,
        fd: &FdConfig,
    ) -> FormResult<LoopVector> {
        if route == CurvatureRoute::FiniteDifference {
            let dphi = directional(p, v, fd, |q| self.higgs(q))?;
            let a = self.connection(p, v)?;
            return Ok(dphi.add(&a.bracket(&self.higgs(p)?)?)?.sub(&a.dtheta()?)?);
        }
        match self {
            BundleScenario::Trivial(t) => {
                let (m, g) = split_point(p)?;
                let (u, _) = split_tangent(v)?;
                let inner =
                    t.base_dphi(m, u).add(&t.base_a(m, u).bracket(&t.base_phi(m))?)?.sub(&t.base_a_dtheta(m, u))?;
                Ok(inner.ad_inv(g)?)
            }
            BundleScenario::Path(pf) => pf.nabla_phi(p.as_loop()?, v.as_loop()?),
        }
    }

    /// A as a 𝔨-function-valued 1-form on the total space.
    pub fn connection_form(&self) -> Form<ScenarioPoint, LoopVector> {
        let sc = self.clone();
        Form::new(1, "A", "Atau", move |p, vs| sc.connection(p, &vs[0]))
    }

    /// Φ as a 0-form.
    pub fn higgs_form(&self) -> Form<ScenarioPoint, LoopVector> {
        let sc = self.clone();
        Form::new(0, "Φ", "thirtyfour", move |p, _| sc.higgs(p))
    }

    pub fn curvature_form(&self, route: CurvatureRoute, fd: FdConfig) -> Form<ScenarioPoint, LoopVector> {
        let sc = self.clone();
        Form::new(2, "F", "curvature", move |p, vs| sc.curvature(p, &vs[0], &vs[1], route, &fd))
    }

    pub fn nabla_phi_form(&self, route: CurvatureRoute, fd: FdConfig) -> Form<ScenarioPoint, LoopVector> {
        let sc = self.clone();
        Form::new(1, "∇Φ", "nablaHiggs", move |p, vs| sc.nabla_phi(p, &vs[0], route, &fd))
    }

    /// Right action `p · g`.
    pub fn act(&self, p: &ScenarioPoint, g: &LoopPoint) -> FormResult<ScenarioPoint> {
        match self {
            BundleScenario::Trivial(_) => {
                let (m, h) = split_point(p)?;
                Ok(trivial_point(m, h.mul(g)?))
            }
            BundleScenario::Path(_) => Ok(ScenarioPoint::Loop(p.as_loop()?.mul(g)?)),
        }
    }

    /// Pushforward of a tangent under the right action by g.
    pub fn act_tangent(&self, v: &TangentVector, g: &LoopPoint) -> FormResult<TangentVector> {
        match self {
            BundleScenario::Trivial(_) => {
                let (u, x) = split_tangent(v)?;
                Ok(trivial_tangent(u, x.ad_inv(g)?))
            }
            BundleScenario::Path(_) => Ok(TangentVector::Loop(v.as_loop()?.ad_inv(g)?)),
        }
    }

    /// The fundamental vector field ι_p(ξ).
    pub fn vertical(&self, _p: &ScenarioPoint, xi: &LoopVector) -> TangentVector {
        match self {
            BundleScenario::Trivial(_) => trivial_tangent(&[0.0; CHART_DIM], xi.clone()),
            BundleScenario::Path(_) => TangentVector::Loop(xi.clone()),
        }
    }

    /// Base point π(p).
    pub fn project(&self, p: &ScenarioPoint) -> FormResult<ScenarioPoint> {
        match self {
            BundleScenario::Trivial(_) => Ok(ScenarioPoint::Chart(split_point(p)?.0.to_vec())),
            BundleScenario::Path(_) => Ok(ScenarioPoint::Group(*p.as_loop()?.last())),
        }
    }

    /// `π_*V`, left-trivialised on K.
    pub fn project_tangent(&self, v: &TangentVector) -> FormResult<TangentVector> {
        match self {
            BundleScenario::Trivial(_) => Ok(TangentVector::Chart(split_tangent(v)?.0.to_vec())),
            BundleScenario::Path(_) => Ok(TangentVector::Group(*v.as_loop()?.values().last().expect("non-empty"))),
        }
    }

    /// `τ(p₁, p₂)` with `p₂ = p₁ τ(p₁, p₂)`.
    pub fn tau(&self, p1: &ScenarioPoint, p2: &ScenarioPoint) -> FormResult<LoopPoint> {
        let gap = match (self.project(p1)?, self.project(p2)?) {
            (ScenarioPoint::Chart(a), ScenarioPoint::Chart(b)) => {
                a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
            (ScenarioPoint::Group(a), ScenarioPoint::Group(b)) => a.distance(&b),
            _ => f64::INFINITY,
        };
        if gap > BASE_TOL {
            return Err(FormError::Scenario(format!("points lie in different fibres (gap {gap:.2e})")));
        }
        Ok(self.loop_part(p1)?.inv().mul(self.loop_part(p2)?)?)
    }

    /// Left-trivialised derivative of τ along a fibre-pair tangent:
    /// `X₂ − ad(τ⁻¹) X₁`.
    pub fn tau_tangent(
        &self,
        p1: &ScenarioPoint,
        p2: &ScenarioPoint,
        v1: &TangentVector,
        v2: &TangentVector,
    ) -> FormResult<LoopVector> {
        let tau = self.tau(p1, p2)?;
        Ok(self.loop_tangent(v2)?.sub(&self.loop_tangent(v1)?.ad_inv(&tau)?)?)
    }

    /// Residual of the twisted equivariance `Φ(pg) = ad(g⁻¹)Φ(p) + g⁻¹∂_θg`.
    pub fn higgs_equivariance_residual(&self, p: &ScenarioPoint, g: &LoopPoint) -> FormResult<f64> {
        let lhs = self.higgs(&self.act(p, g)?)?;
        let rhs = self.higgs(p)?.ad_inv(g)?.add(&g.left_derivative()?)?;
        Ok(lhs.sub(&rhs)?.max_norm())
    }
}

fn fibre_entries(
    p: &ScenarioPoint,
    vs: &[TangentVector],
    q: usize,
) -> FormResult<(Vec<ScenarioPoint>, Vec<Vec<TangentVector>>)> {
    let ScenarioPoint::Fibre(ps) = p else {
        return Err(FormError::Scenario(format!("expected a fibre point, got {}", p.tag())));
    };
    if ps.len() != q {
        return Err(FormError::Scenario(format!("expected {q} fibre entries, got {}", ps.len())));
    }
    let ts = vs
        .iter()
        .map(|v| {
            let c = v.components()?;
            if c.len() != q {
                return Err(FormError::Scenario("fibre tangent arity mismatch".into()));
            }
            Ok(c.to_vec())
        })
        .collect::<FormResult<Vec<_>>>()?;
    Ok((ps.clone(), ts))
}

/// The gerbe chain on one scenario.
#[derive(Clone, Debug)]
pub struct Gerbe {
    sc: Arc<BundleScenario>,
    ext: ExtensionData,
    fd: FdConfig,
}

impl Gerbe {
    /// Builds the chain; runs the α sign self-test on the scenario grid.
    pub fn new(sc: BundleScenario, fd: FdConfig) -> FormResult<Self> {
        let ext = ExtensionData::new(sc.grid(), sc.kind(), fd)?;
        Ok(Gerbe { sc: Arc::new(sc), ext, fd })
    }

    pub fn scenario(&self) -> &BundleScenario {
        &self.sc
    }

    pub fn extension(&self) -> &ExtensionData {
        &self.ext
    }

    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    /// `ε = (i/2π) ∫ ⟨π₂^*A, τ^*Z⟩ dθ` on Y^[2]; π₂ omits the second entry.
    pub fn epsilon(&self) -> KForm {
        let sc = self.sc.clone();
        KForm::new(1, "ε", "epsilon", move |p, vs| {
            let (ps, ts) = fibre_entries(p, vs, 2)?;
            let tau = sc.tau(&ps[0], &ps[1])?;
            let a = sc.connection(&ps[0], &ts[0][0])?;
            Ok(I * (a.pair_integral(&tau.z()?)? / (2.0 * PI)))
        })
    }

    /// `β = (τ₁₂ × τ₂₃)^*α` on Y^[3].
    pub fn beta(&self) -> KForm {
        let (sc, ext) = (self.sc.clone(), self.ext.clone());
        KForm::new(1, "β", "epsilon", move |p, vs| {
            let (ps, ts) = fibre_entries(p, vs, 3)?;
            let t12 = sc.tau(&ps[0], &ps[1])?;
            let t23 = sc.tau(&ps[1], &ps[2])?;
            let x12 = sc.tau_tangent(&ps[0], &ps[1], &ts[0][0], &ts[0][1])?;
            let x23 = sc.tau_tangent(&ps[1], &ps[2], &ts[0][1], &ts[0][2])?;
            ext.eval_alpha(&t12, &t23, &x12, &x23)
        })
    }

    /// `τ^*R` on Y^[2].
    pub fn tau_r(&self) -> KForm {
        let sc = self.sc.clone();
        KForm::new(2, "τ^*R", "newRalpha", move |p, vs| {
            let (ps, ts) = fibre_entries(p, vs, 2)?;
            let x = sc.tau_tangent(&ps[0], &ps[1], &ts[0][0], &ts[0][1])?;
            let y = sc.tau_tangent(&ps[0], &ps[1], &ts[1][0], &ts[1][1])?;
            eval_r(&x, &y)
        })
    }

    /// Curving `f = (i/2π) ∫ (½⟨A, ∂_θA⟩ − ⟨F, Φ⟩) dθ`.
    pub fn curving(&self, route: CurvatureRoute) -> KForm {
        let (sc, fd) = (self.sc.clone(), self.fd);
        KForm::new(2, "f", "curving", move |p, vs| {
            let a = sc.connection(p, &vs[0])?;
            let b = sc.connection(p, &vs[1])?;
            let half = 0.5 * (a.pair_integral(&b.dtheta()?)? - b.pair_integral(&a.dtheta()?)?);
            let f = sc.curvature(p, &vs[0], &vs[1], route, &fd)?;
            let fphi = f.pair_integral(&sc.higgs(p)?)?;
            Ok(I * ((half - fphi) / (2.0 * PI)))
        })
    }

    /// String 3-form `−(1/4π²) ∫ ⟨F, ∇Φ⟩ dθ` on the total space.
    pub fn string_form(&self, route: CurvatureRoute) -> Form<ScenarioPoint, f64> {
        let f = self.sc.curvature_form(route, self.fd);
        let n = self.sc.nabla_phi_form(route, self.fd);
        pair_forms(
            |v: &[LoopVector]| -v[0].pair_integral(&v[1]).expect("shared grid") / (4.0 * PI * PI),
            &[f, n],
            "ω",
            "stringclass",
        )
    }

    /// String form on the chart of the trivial bundle via the lift (m, 1).
    pub fn base_string_form(&self, route: CurvatureRoute) -> FormResult<Form<ScenarioPoint, f64>> {
        let BundleScenario::Trivial(t) = self.sc.as_ref() else {
            return Err(FormError::Scenario("base string form needs the trivial bundle".into()));
        };
        let (grid, n) = (t.grid.clone(), t.kind.dim());
        let g2 = grid.clone();
        Ok(self.string_form(route).pullback(
            "ω on M",
            move |m: &ScenarioPoint| Ok(trivial_point(m.as_chart()?, LoopPoint::identity(&grid, n))),
            move |_, u| Ok(trivial_tangent(u.as_chart()?, LoopVector::zeros(&g2, n))),
        ))
    }

    /// A form on the total space viewed on Y^[1].
    pub fn on_fibre1<V: crate::forms::FormValue + 'static>(form: &Form<ScenarioPoint, V>) -> Form<ScenarioPoint, V> {
        form.pullback(
            format!("{} on Y", form.name()),
            |q: &ScenarioPoint| {
                let c = q.components()?;
                if c.len() != 1 {
                    return Err(FormError::Scenario("expected a single fibre entry".into()));
                }
                Ok(c[0].clone())
            },
            |_, v| Ok(v.components()?[0].clone()),
        )
    }

    /// Residual of `π₁^*A = ad(τ⁻¹) π₂^*A + τ^*Θ`: A at the second point versus
    /// the transported A at the first point.
    pub fn connection_pullback_residual(
        &self,
        p1: &ScenarioPoint,
        p2: &ScenarioPoint,
        v1: &TangentVector,
        v2: &TangentVector,
    ) -> FormResult<f64> {
        let tau = self.sc.tau(p1, p2)?;
        let lhs = self.sc.connection(p2, v2)?;
        let theta = self.tau_theta_fd(p1, p2, v1, v2)?;
        let rhs = self.sc.connection(p1, v1)?.ad_inv(&tau)?.add(&theta)?;
        Ok(lhs.sub(&rhs)?.max_norm())
    }

    /// `τ^*Θ` by finite differences of τ along the pair tangent.
    fn tau_theta_fd(
        &self,
        p1: &ScenarioPoint,
        p2: &ScenarioPoint,
        v1: &TangentVector,
        v2: &TangentVector,
    ) -> FormResult<LoopVector> {
        let pair = ScenarioPoint::Fibre(vec![p1.clone(), p2.clone()]);
        let tv = TangentVector::Fibre(vec![v1.clone(), v2.clone()]);
        let tau = self.sc.tau(p1, p2)?;
        let raw = directional(&pair, &tv, &self.fd, |q| {
            let c = q.components()?;
            let t = self.sc.tau(&c[0], &c[1])?;
            let vals = t.values().iter().map(|g| AlgebraElement::from_matrix_unchecked(*g.matrix())).collect();
            Ok(LoopVector::new(t.grid().clone(), vals)?)
        })?;
        let vals = raw
            .values()
            .iter()
            .zip(tau.values())
            .map(|(d, g)| AlgebraElement::project(&(g.matrix().adjoint() * *d.matrix())))
            .collect();
        Ok(LoopVector::new(tau.grid().clone(), vals)?)
    }
}

/// `ω₃(U, V, W) = (1/48π²) ⟨[Θ̂, Θ̂], Θ̂⟩` on tangent matrices at k.
pub fn omega3(k: &GroupElement, vs: &[CMat; 3]) -> FormResult<f64> {
    let w: Vec<AlgebraElement> =
        vs.iter().map(|v| maurer_cartan(k, v, Trivialization::Right)).collect::<Result<_, _>>()?;
    Ok(omega3_right(&w[0], &w[1], &w[2]))
}

/// ω₃ on right-trivialised tangents: `(1/48π²) Σ_σ sgn σ ⟨[W_σ1, W_σ2], W_σ3⟩`.
pub fn omega3_right(a: &AlgebraElement, b: &AlgebraElement, c: &AlgebraElement) -> f64 {
    let w = [a, b, c];
    let mut acc = 0.0;
    for (perm, sign) in
        [([0, 1, 2], 1.0), ([1, 2, 0], 1.0), ([2, 0, 1], 1.0), ([1, 0, 2], -1.0), ([0, 2, 1], -1.0), ([2, 1, 0], -1.0)]
    {
        acc += sign * inner(&w[perm[0]].bracket(w[perm[1]]), w[perm[2]]);
    }
    acc / (48.0 * PI * PI)
}

/// ω₃ on left-trivialised tangents at k.
pub fn omega3_left(k: &GroupElement, a: &AlgebraElement, b: &AlgebraElement, c: &AlgebraElement) -> f64 {
    omega3_right(&adjoint(k, a), &adjoint(k, b), &adjoint(k, c))
}

/// `∫_{SU(2)} ω₃` over the chart
/// `(χ, φ, ϑ) ↦ [[a, −b̄], [b, ā]]`, `a = cos χ + i sin χ cos ϑ`,
/// `b = sin χ sin ϑ e^{iφ}`, with Gauss–Legendre nodes in χ and ϑ and the
/// trapezoid rule in φ. The coordinate order fixes the orientation in which
/// ω₃ integrates to +1.
pub fn su2_volume_integral(nodes: usize) -> FormResult<f64> {
    let (xs, wx) = gauss_legendre(nodes, 0.0, PI);
    let nphi = 2 * nodes;
    let mut acc = 0.0;
    let mat = |a: C64, b: C64| {
        let mut m = CMat::zeros(2);
        m.set(0, 0, a);
        m.set(0, 1, -b.conj());
        m.set(1, 0, b);
        m.set(1, 1, a.conj());
        m
    };
    for (chi, wc) in xs.iter().zip(&wx) {
        for (th, wt) in xs.iter().zip(&wx) {
            for j in 0..nphi {
                let ph = 2.0 * PI * j as f64 / nphi as f64;
                let (sc, cc) = chi.sin_cos();
                let (st, ct) = th.sin_cos();
                let e = C64::from_polar(1.0, ph);
                let a = C64::new(cc, sc * ct);
                let b = e * (sc * st);
                let k = GroupElement::new_checked(mat(a, b), 1e-12)?;
                let d_chi = mat(C64::new(-sc, cc * ct), e * (cc * st));
                let d_th = mat(C64::new(0.0, -sc * st), e * (sc * ct));
                let d_ph = mat(C64::new(0.0, 0.0), I * e * (sc * st));
                acc += wc * wt * (2.0 * PI / nphi as f64) * omega3(&k, &[d_chi, d_ph, d_th])?;
            }
        }
    }
    Ok(acc)
}
