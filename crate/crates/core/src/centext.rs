//! Central-extension data of the loop group: the 2-form R, the 1-form α on
//! pairs, the path-group cocycle c(f, g), disk holonomy H(h, R), the
//! connection μ̂ on the path group and the reduced-splitting relations.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::forms::{
    delta_nerve, nerve_point, nerve_tangent, FdConfig, FormError, FormResult, KForm, ScenarioPoint, TangentVector,
};
use crate::grid::{gauss_legendre, ThetaGrid};
use crate::liegroup::GroupKind;
use crate::loops::{LoopPoint, LoopVector, PathInLoopGroup};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `R(X, Y) = (i/4π) ∫ (⟨X, ∂_θY⟩ − ⟨Y, ∂_θX⟩) dθ`; independent of the base loop.
pub fn eval_r(x: &LoopVector, y: &LoopVector) -> FormResult<C64> {
    let a = x.pair_integral(&y.dtheta()?)?;
    let b = y.pair_integral(&x.dtheta()?)?;
    Ok(I * ((a - b) / (4.0 * PI)))
}

/// `(i/2π) ∫ ⟨X, Z(g)⟩ dθ`, the shared building block of α and Z(g⁻¹, X).
fn pair_with_z(x: &LoopVector, g: &LoopPoint) -> FormResult<C64> {
    Ok(I * (x.pair_integral(&g.z()?)? / (2.0 * PI)))
}

/// Gomi's cocycle `Z(g⁻¹, X) = −α(1, g)(X, 0) = −(i/2π) ∫ ⟨X, Z(g)⟩ dθ`.
pub fn gomi_cocycle_z(g: &LoopPoint, x: &LoopVector) -> FormResult<C64> {
    Ok(-pair_with_z(x, g)?)
}

/// `ℓ(p, X) = (i/2π) ∫ ⟨Φ(p), X⟩ dθ` for a Higgs field value Φ(p).
pub fn splitting_ell(phi: &LoopVector, x: &LoopVector) -> FormResult<C64> {
    Ok(I * (phi.pair_integral(x)? / (2.0 * PI)))
}

/// Residual of `ℓ(p, X) − ℓ(pg, ad(g⁻¹)X) − Z(g⁻¹, X)` given Φ(p) and Φ(pg).
pub fn reduced_splitting_residual(
    phi_p: &LoopVector,
    phi_pg: &LoopVector,
    g: &LoopPoint,
    x: &LoopVector,
) -> FormResult<f64> {
    let lhs = splitting_ell(phi_p, x)?;
    let rhs = splitting_ell(phi_pg, &x.ad_inv(g)?)? + gomi_cocycle_z(g, x)?;
    Ok((lhs - rhs).norm())
}

/// The pair (α, R) with the sign of α fixed by the `dα = δR` self-test.
#[derive(Clone, Debug)]
pub struct ExtensionData {
    grid: ThetaGrid,
    kind: GroupKind,
    alpha_sign: f64,
    fd: FdConfig,
}

/// Relative residual accepted by the sign self-test.
pub const SELF_TEST_TOL: f64 = 1e-6;

impl ExtensionData {
    /// Runs the sign self-test over the candidates `+1, −1`.
    pub fn new(grid: &ThetaGrid, kind: GroupKind, fd: FdConfig) -> FormResult<Self> {
        Self::select_sign(grid, kind, fd, &[1.0, -1.0])
    }

    /// Picks the first candidate sign for α satisfying `dα = δR` on a fixed
    /// sample, or aborts. The test always differentiates with the default
    /// Richardson step, whatever `fd` the data will carry.
    pub fn select_sign(grid: &ThetaGrid, kind: GroupKind, fd: FdConfig, candidates: &[f64]) -> FormResult<Self> {
        let (pt, v, w) = self_test_sample(grid, kind);
        let mut report = Vec::new();
        for &s in candidates {
            let ext = ExtensionData { grid: grid.clone(), kind, alpha_sign: s, fd };
            let lhs = ext.alpha_form().d(FdConfig::default()).eval(&pt, &[v.clone(), w.clone()])?;
            let rhs = delta_nerve(&ext.r_form()).eval(&pt, &[v.clone(), w.clone()])?;
            let res = (lhs - rhs).norm() / rhs.norm().max(1.0);
            if res < SELF_TEST_TOL {
                return Ok(ext);
            }
            report.push(format!("sign {s:+}: residual {res:.3e}"));
        }
        Err(FormError::ConventionAbort(format!("no sign for α satisfies dα = δR ({})", report.join(", "))))
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn alpha_sign(&self) -> f64 {
        self.alpha_sign
    }

    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    /// `α(g, h)(X_g, X_h) = (i/2π) ∫ ⟨X_g, Z(h)⟩ dθ`; only the first slot enters.
    pub fn eval_alpha(&self, _g: &LoopPoint, h: &LoopPoint, xg: &LoopVector, _xh: &LoopVector) -> FormResult<C64> {
        Ok(pair_with_z(xg, h)? * self.alpha_sign)
    }

    /// R as a 2-form on one-element nerve tuples.
    pub fn r_form(&self) -> KForm {
        KForm::new(2, "R", "newRalpha", |p, vs| {
            if p.components()?.len() != 1 {
                return Err(FormError::Scenario("R lives on single loops".into()));
            }
            let x = &vs[0].components()?[0];
            let y = &vs[1].components()?[0];
            eval_r(x.as_loop()?, y.as_loop()?)
        })
    }

    /// α as a 1-form on nerve pairs.
    pub fn alpha_form(&self) -> KForm {
        let ext = self.clone();
        KForm::new(1, "α", "newRalpha", move |p, vs| {
            let c = p.components()?;
            let t = vs[0].components()?;
            if c.len() != 2 || t.len() != 2 {
                return Err(FormError::Scenario("α lives on pairs of loops".into()));
            }
            ext.eval_alpha(c[0].as_loop()?, c[1].as_loop()?, t[0].as_loop()?, t[1].as_loop()?)
        })
    }

    /// `c(f, g) = exp(∫_{(f,g)} α)` by Gregory quadrature in s.
    pub fn cocycle_c(&self, f: &PathInLoopGroup, g: &PathInLoopGroup) -> FormResult<C64> {
        if f.len() != g.len() {
            return Err(FormError::Scenario(format!("path lengths differ: {} vs {}", f.len(), g.len())));
        }
        let w = f.weights();
        let mut acc = C64::new(0.0, 0.0);
        for (i, wi) in w.iter().enumerate() {
            let a = self.eval_alpha(&f.nodes()[i], &g.nodes()[i], &f.velocity(i)?, &g.velocity(i)?)?;
            acc += a * *wi;
        }
        Ok(acc.exp())
    }

    /// `μ̂(X) = ∫₀¹ R(f′(s), X(s)) ds`.
    pub fn mu_hat(&self, f: &PathInLoopGroup, xs: &[LoopVector]) -> FormResult<C64> {
        if xs.len() != f.len() {
            return Err(FormError::Scenario(format!("{} tangents for {} path nodes", xs.len(), f.len())));
        }
        let w = f.weights();
        let mut acc = C64::new(0.0, 0.0);
        for (i, (wi, x)) in w.iter().zip(xs).enumerate() {
            acc += eval_r(&f.velocity(i)?, x)? * *wi;
        }
        Ok(acc)
    }

    /// `log H(h, R) = ∫_{h̃(D)} R` over the exponential disk.
    pub fn holonomy_log(&self, h: &DiskLoop, nodes: usize) -> FormResult<C64> {
        let (xs, ws) = gauss_legendre(nodes, 0.0, 1.0);
        let mut acc = C64::new(0.0, 0.0);
        for (r, wr) in xs.iter().zip(&ws) {
            for (s, wsv) in xs.iter().zip(&ws) {
                let (dr, ds) = h.partials(*r, *s, &self.fd)?;
                acc += eval_r(&dr, &ds)? * (wr * wsv);
            }
        }
        Ok(acc)
    }

    /// `H(h, R) = exp(∫_{h̃(D)} R)`.
    pub fn holonomy_h(&self, h: &DiskLoop, nodes: usize) -> FormResult<C64> {
        Ok(self.holonomy_log(h, nodes)?.exp())
    }
}

/// Deterministic nerve pair and tangents used by the sign self-test.
fn self_test_sample(grid: &ThetaGrid, kind: GroupKind) -> (ScenarioPoint, TangentVector, TangentVector) {
    let b = kind.basis();
    let (e0, e1, e2) = (b[0], b[1], b[2]);
    let g = LoopPoint::exp(&LoopVector::from_fn(grid, |t| e0.scale(t.sin()) + e1.scale(0.4 * (2.0 * t).cos())));
    let h = LoopPoint::exp(&LoopVector::from_fn(grid, |t| e2.scale(0.7 * t.cos()) + e0.scale(0.5 * (t + 0.3).sin())));
    let lv = |a: f64, k: f64| {
        LoopVector::from_fn(grid, move |t| e1.scale((k * t + a).sin()) + e2.scale(0.3 * (t - a).cos()))
    };
    let v = nerve_tangent(&[lv(0.1, 1.0), lv(0.9, 2.0)]);
    let w = nerve_tangent(&[lv(1.7, 2.0), lv(-0.4, 1.0)]);
    (nerve_point(&[g, h]), v, w)
}

type LoopPath = dyn Fn(f64) -> LoopVector + Send + Sync;

/// A loop `s ↦ exp(ξ(s))` in L(K) with ξ(0) = ξ(1) = 0, filled in by the disk
/// `(r, s) ↦ exp(r ξ(s))`.
#[derive(Clone)]
pub struct DiskLoop {
    xi: Arc<LoopPath>,
}

impl std::fmt::Debug for DiskLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("DiskLoop")
    }
}

impl DiskLoop {
    /// Checks `ξ(0) = ξ(1) = 0` to 1e−12.
    pub fn new(xi: impl Fn(f64) -> LoopVector + Send + Sync + 'static) -> FormResult<Self> {
        let (a, b) = (xi(0.0).max_norm(), xi(1.0).max_norm());
        if a > 1e-12 || b > 1e-12 {
            return Err(FormError::Scenario(format!("disk generator must vanish at s = 0, 1 ({a:.1e}, {b:.1e})")));
        }
        Ok(DiskLoop { xi: Arc::new(xi) })
    }

    pub fn generator(&self, s: f64) -> LoopVector {
        (self.xi)(s)
    }

    /// The loop `h(s) = exp(ξ(s))`.
    pub fn loop_at(&self, s: f64) -> LoopPoint {
        LoopPoint::exp(&(self.xi)(s))
    }

    /// Reversed orientation `s ↦ 1 − s`.
    pub fn reversed(&self) -> Self {
        let xi = self.xi.clone();
        DiskLoop { xi: Arc::new(move |s| xi(1.0 - s)) }
    }

    /// Scaled generator `λξ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let xi = self.xi.clone();
        DiskLoop { xi: Arc::new(move |s| xi(s).scale(lambda)) }
    }

    /// Left-trivialised `(∂_r h̃, ∂_s h̃)` at `(r, s)`; the s-partial by
    /// central differences.
    pub fn partials(&self, r: f64, s: f64, fd: &FdConfig) -> FormResult<(LoopVector, LoopVector)> {
        if fd.step.is_nan() || fd.step <= 0.0 {
            return Err(FormError::DegenerateStep(fd.step));
        }
        let here = LoopPoint::exp(&(self.xi)(s).scale(r));
        let hinv = here.inv();
        let central = |d: f64| -> FormResult<LoopVector> {
            let p = LoopPoint::exp(&(self.xi)(s + d).scale(r));
            let m = LoopPoint::exp(&(self.xi)(s - d).scale(r));
            let vals = (0..here.grid().len())
                .map(|j| {
                    let diff = (*p.values()[j].matrix() - *m.values()[j].matrix()).scale(0.5 / d);
                    crate::liegroup::AlgebraElement::project(&(*hinv.values()[j].matrix() * diff))
                })
                .collect();
            Ok(LoopVector::new(here.grid().clone(), vals)?)
        };
        let ds = if fd.richardson {
            central(0.5 * fd.step)?.scale(4.0 / 3.0).sub(&central(fd.step)?.scale(1.0 / 3.0))?
        } else {
            central(fd.step)?
        };
        Ok(((self.xi)(s), ds))
    }
}
