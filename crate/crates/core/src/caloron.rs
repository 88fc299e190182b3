//! The caloron correspondence.
//!
//! A connection A and Higgs field Φ on an L(K)-bundle P → M define a
//! connection Ã on the K-bundle (P × K × S¹)/Ω(K) → M × S¹. Everything here is
//! evaluated on representatives `(p, k, θ)`, with tangents `(X, η, λ)` where η
//! is left-trivialised at k. Grid functions are evaluated at θ by the grid
//! interpolant.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::forms::{ext_d, pair_forms, FdConfig, Form, FormError, FormResult, Manifold, ScenarioPoint, TangentVector};
use crate::gerbe::{BundleScenario, CurvatureRoute};
use crate::grid::ThetaGrid;
use crate::liegroup::{ad_inv, exp_alg, inner, AlgebraElement, GroupElement};
use crate::loops::{LoopPoint, LoopVector};

/// Representative `(p, k, θ)` of a point of the caloron bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct CaloronPoint {
    pub p: ScenarioPoint,
    pub k: GroupElement,
    pub theta: f64,
}

/// Tangent `(X, η, λ)` at `(p, k, θ)`; the K-part is `k·η`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaloronTangent {
    pub x: TangentVector,
    pub eta: AlgebraElement,
    pub lambda: f64,
}

impl CaloronTangent {
    pub fn new(x: TangentVector, eta: AlgebraElement, lambda: f64) -> Self {
        CaloronTangent { x, eta, lambda }
    }

    pub fn combine(&self, a: f64, other: &Self, b: f64) -> FormResult<Self> {
        Ok(CaloronTangent {
            x: self.x.combine(a, &other.x, b)?,
            eta: self.eta.scale(a) + other.eta.scale(b),
            lambda: a * self.lambda + b * other.lambda,
        })
    }
}

impl Manifold for CaloronPoint {
    type Tangent = CaloronTangent;

    fn flow(&self, v: &CaloronTangent, t: f64) -> FormResult<Self> {
        Ok(CaloronPoint { p: self.p.flow(&v.x, t)?, k: self.k * exp_alg(&v.eta, t), theta: self.theta + t * v.lambda })
    }

    fn bracket(&self, v: &CaloronTangent, w: &CaloronTangent) -> FormResult<CaloronTangent> {
        Ok(CaloronTangent { x: self.p.bracket(&v.x, &w.x)?, eta: v.eta.bracket(&w.eta), lambda: 0.0 })
    }
}

/// The caloron transfer of a scenario's (A, Φ).
#[derive(Clone, Debug)]
pub struct Caloron {
    sc: Arc<BundleScenario>,
    fd: FdConfig,
}

impl Caloron {
    pub fn new(sc: BundleScenario, fd: FdConfig) -> Self {
        Caloron { sc: Arc::new(sc), fd }
    }

    pub fn scenario(&self) -> &BundleScenario {
        &self.sc
    }

    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    /// `Ã(X, η, λ) = ad(k⁻¹)A(X)(θ) + η + λ·ad(k⁻¹)Φ(p)(θ)`.
    pub fn connection(&self, pt: &CaloronPoint, v: &CaloronTangent) -> FormResult<AlgebraElement> {
        let a = self.sc.connection(&pt.p, &v.x)?.interpolate(pt.theta);
        let mut out = ad_inv(&pt.k, &a) + v.eta;
        if v.lambda != 0.0 {
            let phi = self.sc.higgs(&pt.p)?.interpolate(pt.theta);
            out += ad_inv(&pt.k, &phi).scale(v.lambda);
        }
        Ok(out)
    }

    /// `R̃(V, W)`. The closed route is `ad(k⁻¹)(F(X_V, X_W) + ∇Φ(X_V)λ_W − ∇Φ(X_W)λ_V)` at θ;
    /// the finite-difference route is `dÃ + ½[Ã, Ã]`.
    pub fn curvature(
        &self,
        pt: &CaloronPoint,
        v: &CaloronTangent,
        w: &CaloronTangent,
        route: CurvatureRoute,
    ) -> FormResult<AlgebraElement> {
        match route {
            CurvatureRoute::FiniteDifference => {
                let da = ext_d(&self.connection_form(), pt, &[v.clone(), w.clone()], &self.fd)?;
                Ok(da + self.connection(pt, v)?.bracket(&self.connection(pt, w)?))
            }
            CurvatureRoute::Closed => {
                let fhat = self.base_curvature(pt, v, w)?;
                let ghat = self.higgs_part(pt, v, w)?;
                Ok(fhat + ghat)
            }
        }
    }

    /// `ad(k⁻¹)F(X_V, X_W)(θ)`.
    fn base_curvature(&self, pt: &CaloronPoint, v: &CaloronTangent, w: &CaloronTangent) -> FormResult<AlgebraElement> {
        let f = self.sc.curvature(&pt.p, &v.x, &w.x, CurvatureRoute::Closed, &self.fd)?;
        Ok(ad_inv(&pt.k, &f.interpolate(pt.theta)))
    }

    /// `ad(k⁻¹)(∇Φ(X_V)λ_W − ∇Φ(X_W)λ_V)(θ)`.
    fn higgs_part(&self, pt: &CaloronPoint, v: &CaloronTangent, w: &CaloronTangent) -> FormResult<AlgebraElement> {
        let mut acc = AlgebraElement::zero(pt.k.dim());
        if w.lambda != 0.0 {
            acc += self.nabla_at(pt, &v.x)?.scale(w.lambda);
        }
        if v.lambda != 0.0 {
            acc += self.nabla_at(pt, &w.x)?.scale(-v.lambda);
        }
        Ok(ad_inv(&pt.k, &acc))
    }

    fn nabla_at(&self, pt: &CaloronPoint, x: &TangentVector) -> FormResult<AlgebraElement> {
        Ok(self.sc.nabla_phi(&pt.p, x, CurvatureRoute::Closed, &self.fd)?.interpolate(pt.theta))
    }

    pub fn connection_form(&self) -> Form<CaloronPoint, AlgebraElement> {
        let c = self.clone();
        Form::new(1, "Ã", "fourtythree", move |pt, vs| c.connection(pt, &vs[0]))
    }

    pub fn curvature_form(&self, route: CurvatureRoute) -> Form<CaloronPoint, AlgebraElement> {
        let c = self.clone();
        Form::new(2, "R̃", "caloronCurvature", move |pt, vs| c.curvature(pt, &vs[0], &vs[1], route))
    }

    /// Left side `−(1/8π²)⟨R̃, R̃⟩`.
    pub fn pontrjagin_form(&self, route: CurvatureRoute) -> Form<CaloronPoint, f64> {
        let r = self.curvature_form(route);
        pair_forms(
            |v: &[AlgebraElement]| -inner(&v[0], &v[1]) / (8.0 * PI * PI),
            &[r.clone(), r],
            "p₁(Ã)",
            "fourtyfive",
        )
    }

    /// Right side `−(1/8π²)(⟨F, F⟩ + 2⟨F, ∇Φ dθ⟩)` from the closed F and ∇Φ.
    pub fn pontrjagin_rhs(&self) -> Form<CaloronPoint, f64> {
        let (c1, c2) = (self.clone(), self.clone());
        let f = Form::new(2, "F", "curvature", move |pt: &CaloronPoint, vs: &[CaloronTangent]| {
            c1.base_curvature(pt, &vs[0], &vs[1])
        });
        let g = Form::new(2, "∇Φ dθ", "nablaHiggs", move |pt: &CaloronPoint, vs: &[CaloronTangent]| {
            c2.higgs_part(pt, &vs[0], &vs[1])
        });
        let pair = |v: &[AlgebraElement]| -inner(&v[0], &v[1]) / (8.0 * PI * PI);
        let ff = pair_forms(pair, &[f.clone(), f.clone()], "⟨F,F⟩", "fourtyfive");
        let fg = pair_forms(pair, &[f, g], "⟨F,∇Φ⟩", "fourtyfive");
        Form::new(4, "p₁ via F, ∇Φ", "fourtyfive", move |pt, vs| Ok(ff.eval(pt, vs)? + 2.0 * fg.eval(pt, vs)?))
    }

    /// `∫_{S¹} p₁(Ã)(V₁, V₂, V₃, ∂_θ) dθ` at `(p, e, ·)` with `V_i = (X_i, 0, 0)`,
    /// quadrature on `quad` (periodic or interval, independent of the loop grid).
    pub fn integrate_circle(
        &self,
        p: &ScenarioPoint,
        xs: &[TangentVector; 3],
        quad: &ThetaGrid,
        route: CurvatureRoute,
    ) -> FormResult<f64> {
        let n = self.sc.kind().dim();
        let e = GroupElement::identity(n);
        let zero = AlgebraElement::zero(n);
        let mut vs: Vec<CaloronTangent> = xs.iter().map(|x| CaloronTangent::new(x.clone(), zero, 0.0)).collect();
        vs.push(CaloronTangent::new(xs[0].scale(0.0), zero, 1.0));
        // closed route: the loop-valued F(X_i, X_j) and ∇Φ(X_i) do not depend on θ
        let loops = match route {
            CurvatureRoute::Closed => {
                let f = |i: usize, j: usize| self.sc.curvature(p, &xs[i], &xs[j], route, &self.fd);
                let d = |i: usize| self.sc.nabla_phi(p, &xs[i], route, &self.fd);
                Some(([f(0, 1)?, f(0, 2)?, f(1, 2)?], [d(0)?, d(1)?, d(2)?]))
            }
            CurvatureRoute::FiniteDifference => None,
        };
        let mut samples = Vec::with_capacity(quad.len());
        for &theta in quad.nodes() {
            let r = match &loops {
                Some((f, d)) => [
                    f[0].interpolate(theta),
                    f[1].interpolate(theta),
                    d[0].interpolate(theta),
                    f[2].interpolate(theta),
                    d[1].interpolate(theta),
                    d[2].interpolate(theta),
                ],
                None => {
                    let pt = CaloronPoint { p: p.clone(), k: e, theta };
                    let r = |i: usize, j: usize| self.curvature(&pt, &vs[i], &vs[j], route);
                    [r(0, 1)?, r(0, 2)?, r(0, 3)?, r(1, 2)?, r(1, 3)?, r(2, 3)?]
                }
            };
            samples.push(pontrjagin_from_pairs(&r));
        }
        Ok(quad.integrate_real(&samples)?)
    }

    /// Action of a based loop, `(p, k, θ) ↦ (p g⁻¹, g(θ) k, θ)`. Applying g then h
    /// is the same as applying hg.
    pub fn omega_action(&self, pt: &CaloronPoint, g: &LoopPoint) -> FormResult<CaloronPoint> {
        Ok(CaloronPoint { p: self.sc.act(&pt.p, &g.inv())?, k: g.interpolate(pt.theta) * pt.k, theta: pt.theta })
    }

    /// Pushforward under [`Caloron::omega_action`]:
    /// `(X, η, λ) ↦ (ad(g)X, η + λ·ad(k⁻¹)(g⁻¹∂_θg)(θ), λ)`.
    pub fn omega_action_tangent(
        &self,
        pt: &CaloronPoint,
        v: &CaloronTangent,
        g: &LoopPoint,
    ) -> FormResult<CaloronTangent> {
        let x = self.sc.act_tangent(&v.x, &g.inv())?;
        let mut eta = v.eta;
        if v.lambda != 0.0 {
            let dg = g.left_derivative()?.interpolate(pt.theta);
            eta += ad_inv(&pt.k, &dg).scale(v.lambda);
        }
        Ok(CaloronTangent { x, eta, lambda: v.lambda })
    }

    /// Right K-action `(p, k, θ)·h = (p, kh, θ)` with pushforward `η ↦ ad(h⁻¹)η`.
    pub fn k_action(&self, pt: &CaloronPoint, v: &CaloronTangent, h: &GroupElement) -> (CaloronPoint, CaloronTangent) {
        (
            CaloronPoint { p: pt.p.clone(), k: pt.k * *h, theta: pt.theta },
            CaloronTangent { x: v.x.clone(), eta: ad_inv(h, &v.eta), lambda: v.lambda },
        )
    }

    /// The vector `(ι_p X, −ad(k⁻¹)X(θ), 0)`, tangent to an Ω(K)-orbit.
    pub fn orbit_tangent(&self, pt: &CaloronPoint, xi: &LoopVector) -> CaloronTangent {
        let eta = ad_inv(&pt.k, &xi.interpolate(pt.theta)).scale(-1.0);
        CaloronTangent { x: self.sc.vertical(&pt.p, xi), eta, lambda: 0.0 }
    }
}

/// `−(1/8π²)⟨R̃, R̃⟩(V₁, …, V₄)` from `R̃(V_i, V_j)` in the order
/// (12, 13, 14, 23, 24, 34): `−(1/4π²)(⟨R₁₂, R₃₄⟩ − ⟨R₁₃, R₂₄⟩ + ⟨R₁₄, R₂₃⟩)`.
pub fn pontrjagin_from_pairs(r: &[AlgebraElement; 6]) -> f64 {
    let s = inner(&r[0], &r[5]) - inner(&r[1], &r[4]) + inner(&r[2], &r[3]);
    -s / (4.0 * PI * PI)
}

/// A and Φ recovered from a framed caloron connection at `k = e`:
/// `A(X)(θ_j) = Ã(X, 0, 0)` and `Φ(θ_j) = Ã(0, 0, 1)` on the nodes of `grid`.
pub fn framed_inverse(
    connection: impl Fn(&CaloronPoint, &CaloronTangent) -> FormResult<AlgebraElement>,
    p: &ScenarioPoint,
    x: &TangentVector,
    grid: &ThetaGrid,
    n: usize,
) -> FormResult<(LoopVector, LoopVector)> {
    let e = GroupElement::identity(n);
    let zero = AlgebraElement::zero(n);
    let mut a = Vec::with_capacity(grid.len());
    let mut phi = Vec::with_capacity(grid.len());
    for &theta in grid.nodes() {
        let pt = CaloronPoint { p: p.clone(), k: e, theta };
        a.push(connection(&pt, &CaloronTangent::new(x.clone(), zero, 0.0))?);
        phi.push(connection(&pt, &CaloronTangent::new(x.scale(0.0), zero, 1.0))?);
    }
    Ok((LoopVector::new(grid.clone(), a)?, LoopVector::new(grid.clone(), phi)?))
}

/// A loop in the trivial K-bundle `Q = X × K`: `θ ↦ (x(θ), q(θ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct QLoop {
    x: Vec<Vec<f64>>,
    q: LoopPoint,
}

/// A point `(x, q)` of `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoint {
    pub x: Vec<f64>,
    pub q: GroupElement,
}

impl QLoop {
    pub fn new(x: Vec<Vec<f64>>, q: LoopPoint) -> FormResult<Self> {
        if x.len() != q.grid().len() {
            return Err(FormError::Scenario(format!("{} chart samples for {} grid nodes", x.len(), q.grid().len())));
        }
        Ok(QLoop { x, q })
    }

    pub fn chart(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn group(&self) -> &LoopPoint {
        &self.q
    }

    /// The loop `θ ↦ (x(θ), q(θ) g(θ)⁻¹)`, i.e. `p g⁻¹`.
    pub fn act_inv(&self, g: &LoopPoint) -> FormResult<Self> {
        Ok(QLoop { x: self.x.clone(), q: self.q.mul(&g.inv())? })
    }

    /// `x(θ)` (interpolated off the grid).
    pub fn evaluate(&self, theta: f64) -> (Vec<f64>, GroupElement) {
        let grid = self.q.grid();
        if let Some(j) = node_index(grid, theta) {
            return (self.x[j].clone(), self.q.values()[j]);
        }
        let w = grid.interpolation_weights(theta);
        let d = self.x[0].len();
        let x = (0..d).map(|i| w.iter().zip(&self.x).map(|(wj, xj)| wj * xj[i]).sum()).collect();
        (x, self.q.interpolate(theta))
    }
}

fn node_index(grid: &ThetaGrid, theta: f64) -> Option<usize> {
    grid.nodes().iter().position(|&t| t == theta)
}

/// `(p, k, θ) ↦ p(θ) k`.
pub fn killingback_map(p: &QLoop, k: &GroupElement, theta: f64) -> QPoint {
    let (x, q) = p.evaluate(theta);
    QPoint { x, q: q * *k }
}

/// Evaluation map `ev(p, θ) = x(θ)` on the base.
pub fn evaluation_map(p: &QLoop, theta: f64) -> Vec<f64> {
    p.evaluate(theta).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gerbe::TrivialBundle;
    use crate::liegroup::GroupKind;
    use crate::sample::Sampler;

    #[test]
    fn vertical_reproduction() {
        let grid = ThetaGrid::periodic(32).unwrap();
        let kind = GroupKind::Su2;
        let cal =
            Caloron::new(BundleScenario::Trivial(TrivialBundle::default_instance(&grid, kind)), FdConfig::default());
        let mut s = Sampler::new(3, kind);
        let p = crate::gerbe::trivial_point(&s.chart_point(4, 0.5), s.loop_point(&grid));
        let pt = CaloronPoint { p, k: exp_alg(&s.algebra(1.0), 1.0), theta: 1.1 };
        let xi = s.algebra(1.0);
        let zero = cal.scenario().vertical(&pt.p, &LoopVector::zeros(&grid, 2));
        let got = cal.connection(&pt, &CaloronTangent::new(zero, xi, 0.0)).unwrap();
        assert!((got - xi).norm() < 1e-12);
    }
}
