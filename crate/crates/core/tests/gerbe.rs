use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use stringclass::centext::reduced_splitting_residual;
use stringclass::forms::{alternation_residual, delta_fibre, ext_d, FdConfig, ScenarioPoint, TangentVector};
use stringclass::gerbe::{
    omega3, omega3_left, omega3_right, su2_volume_integral, trivial_point, trivial_tangent, BundleScenario,
    CurvatureRoute, Gerbe, PathFibration, TrigField, TrivialBundle, CHART_DIM,
};
use stringclass::grid::ThetaGrid;
use stringclass::liegroup::{exp_alg, GroupKind};
use stringclass::loops::{LoopPoint, LoopVector};
use stringclass::sample::Sampler;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn trivial(n: usize) -> Gerbe {
    let grid = ThetaGrid::periodic(n).unwrap();
    Gerbe::new(BundleScenario::Trivial(TrivialBundle::default_instance(&grid, GroupKind::Su2)), FdConfig::default())
        .unwrap()
}

fn path(n: usize) -> Gerbe {
    let grid = ThetaGrid::interval(n).unwrap();
    Gerbe::new(BundleScenario::Path(PathFibration::new(&grid, GroupKind::Su2).unwrap()), FdConfig::default()).unwrap()
}

struct Fibred {
    m: Vec<f64>,
    gs: Vec<LoopPoint>,
    u: Vec<Vec<f64>>,
    xs: Vec<Vec<LoopVector>>,
}

/// q points in one fibre of the trivial bundle with `k` tangents each.
fn fibred(s: &mut Sampler, grid: &ThetaGrid, q: usize, k: usize) -> Fibred {
    let m = s.chart_point(CHART_DIM, 0.7);
    let gs = (0..q).map(|_| s.loop_point(grid)).collect();
    let u = (0..k).map(|_| s.chart_vector(CHART_DIM)).collect();
    let xs = (0..k).map(|_| (0..q).map(|_| s.loop_vector(grid, 2, 1.0)).collect()).collect();
    Fibred { m, gs, u, xs }
}

impl Fibred {
    fn point(&self) -> ScenarioPoint {
        ScenarioPoint::Fibre(self.gs.iter().map(|g| trivial_point(&self.m, g.clone())).collect())
    }
    fn tangent(&self, j: usize) -> TangentVector {
        TangentVector::Fibre(self.xs[j].iter().map(|x| trivial_tangent(&self.u[j], x.clone())).collect())
    }
    fn tangents(&self) -> Vec<TangentVector> {
        (0..self.u.len()).map(|j| self.tangent(j)).collect()
    }
    fn total(&self, i: usize) -> ScenarioPoint {
        trivial_point(&self.m, self.gs[i].clone())
    }
    fn total_tangent(&self, i: usize, j: usize) -> TangentVector {
        trivial_tangent(&self.u[j], self.xs[j][i].clone())
    }
}

#[test]
fn tau_examples_and_cocycle() {
    let g = trivial(32);
    let sc = g.scenario();
    let grid = sc.grid().clone();
    let mut s = Sampler::new(3, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 3, 0);
    let id = LoopPoint::identity(&grid, 2);
    assert!(sc.tau(&f.total(0), &f.total(0)).unwrap().distance(&id) < 1e-14);
    let t01 = sc.tau(&f.total(0), &f.total(1)).unwrap();
    assert!(t01.distance(&f.gs[0].inv().mul(&f.gs[1]).unwrap()) < 1e-15);
    let t12 = sc.tau(&f.total(1), &f.total(2)).unwrap();
    let t02 = sc.tau(&f.total(0), &f.total(2)).unwrap();
    assert!(t01.mul(&t12).unwrap().distance(&t02) < 1e-12);
    let other = trivial_point(&[0.0; 4], f.gs[0].clone());
    assert!(sc.tau(&f.total(0), &other).is_err());
}

#[test]
fn connection_pullback_identity() {
    let g = trivial(32);
    let grid = g.scenario().grid().clone();
    let mut s = Sampler::new(4, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 2, 1);
    let r = g.connection_pullback_residual(&f.total(0), &f.total(1), &f.total_tangent(0, 0), &f.total_tangent(1, 0));
    assert!(r.unwrap() < 1e-6);
    // vertical-only
    let v = |x: &LoopVector| trivial_tangent(&[0.0; 4], x.clone());
    let r = g.connection_pullback_residual(&f.total(0), &f.total(1), &v(&f.xs[0][0]), &v(&f.xs[0][1])).unwrap();
    assert!(r < 1e-8);
    // diagonal
    let r = g
        .connection_pullback_residual(&f.total(0), &f.total(0), &f.total_tangent(0, 0), &f.total_tangent(0, 0))
        .unwrap();
    assert!(r < 1e-12);
}

#[test]
fn connection_axioms_on_both_scenarios() {
    for g in [trivial(64), path(64)] {
        let sc = g.scenario();
        let grid = sc.grid().clone();
        let mut s = Sampler::new(5, GroupKind::Su2);
        let (p, xi, h, v) = match sc {
            BundleScenario::Trivial(_) => {
                let p = trivial_point(&s.chart_point(4, 0.7), s.loop_point(&grid));
                let xi = s.loop_vector(&grid, 2, 1.0);
                let h = s.loop_point(&grid);
                let v = trivial_tangent(&s.chart_vector(4), s.loop_vector(&grid, 2, 1.0));
                (p, xi, h, v)
            }
            BundleScenario::Path(_) => {
                let p = ScenarioPoint::Loop(s.path(&grid));
                let mut xi = s.based_loop_vector(&grid, 2, 1.0);
                // vertical vectors vanish at both ends
                let end = *xi.values().last().unwrap();
                xi = xi.sub(&LoopVector::constant(&grid, end).scale_by(|t| t / (2.0 * PI))).unwrap();
                let h = s.based_loop(&grid);
                let v = TangentVector::Loop(s.path_vector(&grid, 1.0));
                (p, xi, h, v)
            }
        };
        let a = sc.connection(&p, &sc.vertical(&p, &xi)).unwrap();
        assert!(a.sub(&xi).unwrap().max_norm() < 1e-8, "{}", sc.name());
        let moved = sc.connection(&sc.act(&p, &h).unwrap(), &sc.act_tangent(&v, &h).unwrap()).unwrap();
        let expect = sc.connection(&p, &v).unwrap().ad_inv(&h).unwrap();
        assert!(moved.sub(&expect).unwrap().max_norm() < 1e-8, "{}", sc.name());
        let r = sc.higgs_equivariance_residual(&p, &h).unwrap();
        assert!(r < 1e-8, "{} {r}", sc.name());
    }
}

#[test]
fn higgs_convex_combination_is_a_higgs_field() {
    let grid = ThetaGrid::periodic(64).unwrap();
    let t0 = TrivialBundle::default_instance(&grid, GroupKind::Su2);
    let t1 = t0.with_phi(&[
        TrigField::term(1, 2, 0.3, 0.0),
        TrigField::term(0, 0, 1.0, 0.0),
        TrigField::zero(),
        TrigField::term(2, 1, 0.0, 0.5),
    ]);
    let (s0, s1) = (BundleScenario::Trivial(t0), BundleScenario::Trivial(t1));
    let mut s = Sampler::new(6, GroupKind::Su2);
    let p = trivial_point(&s.chart_point(4, 0.7), s.loop_point(&grid));
    let h = s.loop_point(&grid);
    let lam = 0.3;
    let mix = |q: &ScenarioPoint| s0.higgs(q).unwrap().scale(lam).add(&s1.higgs(q).unwrap().scale(1.0 - lam)).unwrap();
    let ph = s0.act(&p, &h).unwrap();
    let r = mix(&ph).sub(&mix(&p).ad_inv(&h).unwrap().add(&h.left_derivative().unwrap()).unwrap()).unwrap();
    assert!(r.max_norm() < 1e-10, "{}", r.max_norm());
}

#[test]
fn curvature_and_nabla_phi_closed_vs_fd() {
    for g in [trivial(32), path(64)] {
        let sc = g.scenario();
        let grid = sc.grid().clone();
        let mut s = Sampler::new(7, GroupKind::Su2);
        let (p, v, w) = match sc {
            BundleScenario::Trivial(_) => (
                trivial_point(&s.chart_point(4, 0.7), s.loop_point(&grid)),
                trivial_tangent(&s.chart_vector(4), s.loop_vector(&grid, 2, 1.0)),
                trivial_tangent(&s.chart_vector(4), s.loop_vector(&grid, 2, 1.0)),
            ),
            BundleScenario::Path(_) => (
                ScenarioPoint::Loop(s.path(&grid)),
                TangentVector::Loop(s.path_vector(&grid, 1.0)),
                TangentVector::Loop(s.path_vector(&grid, 1.0)),
            ),
        };
        let fd = FdConfig::default();
        let fc = sc.curvature(&p, &v, &w, CurvatureRoute::Closed, &fd).unwrap();
        let ff = sc.curvature(&p, &v, &w, CurvatureRoute::FiniteDifference, &fd).unwrap();
        assert!(fc.sub(&ff).unwrap().max_norm() < 1e-6, "F {}: {}", sc.name(), fc.sub(&ff).unwrap().max_norm());
        let nc = sc.nabla_phi(&p, &v, CurvatureRoute::Closed, &fd).unwrap();
        let nf = sc.nabla_phi(&p, &v, CurvatureRoute::FiniteDifference, &fd).unwrap();
        assert!(nc.sub(&nf).unwrap().max_norm() < 1e-6, "∇Φ {}: {}", sc.name(), nc.sub(&nf).unwrap().max_norm());
    }
}

#[test]
fn flat_scenarios() {
    let grid = ThetaGrid::periodic(32).unwrap();
    let flat = BundleScenario::Trivial(TrivialBundle::flat(&grid, GroupKind::Su2, true));
    let mut s = Sampler::new(8, GroupKind::Su2);
    let p = trivial_point(&s.chart_point(4, 0.7), LoopPoint::identity(&grid, 2));
    let v = trivial_tangent(&s.chart_vector(4), LoopVector::zeros(&grid, 2));
    let w = trivial_tangent(&s.chart_vector(4), LoopVector::zeros(&grid, 2));
    let fd = FdConfig::default();
    assert!(flat.curvature(&p, &v, &w, CurvatureRoute::Closed, &fd).unwrap().max_norm() == 0.0);
    let n = flat.nabla_phi(&p, &v, CurvatureRoute::Closed, &fd).unwrap();
    let dphi = stringclass::forms::directional(&p, &v, &fd, |q| flat.higgs(q)).unwrap();
    assert!(n.sub(&dphi).unwrap().max_norm() < 1e-9);
}

#[test]
fn equivariance_and_descent_of_f_and_nabla_phi() {
    let g = trivial(32);
    let sc = g.scenario();
    let grid = sc.grid().clone();
    let mut s = Sampler::new(9, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 2, 2);
    let fd = FdConfig::default();
    let tau = sc.tau(&f.total(0), &f.total(1)).unwrap();
    let f1 =
        sc.curvature(&f.total(0), &f.total_tangent(0, 0), &f.total_tangent(0, 1), CurvatureRoute::Closed, &fd).unwrap();
    let f2 =
        sc.curvature(&f.total(1), &f.total_tangent(1, 0), &f.total_tangent(1, 1), CurvatureRoute::Closed, &fd).unwrap();
    assert!(f2.sub(&f1.ad_inv(&tau).unwrap()).unwrap().max_norm() < 1e-8);
    let n1 = sc.nabla_phi(&f.total(0), &f.total_tangent(0, 0), CurvatureRoute::Closed, &fd).unwrap();
    let n2 = sc.nabla_phi(&f.total(1), &f.total_tangent(1, 0), CurvatureRoute::Closed, &fd).unwrap();
    assert!(n2.sub(&n1.ad_inv(&tau).unwrap()).unwrap().max_norm() < 1e-8);
}

#[test]
fn epsilon_trivial_cases_and_delta_epsilon_is_beta() {
    let g = trivial(32);
    let grid = g.scenario().grid().clone();
    let mut s = Sampler::new(10, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 3, 1);
    let eps = g.epsilon();
    let diag = ScenarioPoint::Fibre(vec![f.total(0), f.total(0)]);
    let dv = TangentVector::Fibre(vec![f.total_tangent(0, 0), f.total_tangent(0, 0)]);
    assert!(eps.eval(&diag, &[dv]).unwrap().norm() < 1e-14);
    let lhs = delta_fibre(&eps).eval(&f.point(), &f.tangents()).unwrap();
    let rhs = g.beta().eval(&f.point(), &f.tangents()).unwrap();
    assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
    assert!(lhs.norm() > 1e-3);
}

#[test]
fn curving_chain() {
    let g = trivial(32);
    let grid = g.scenario().grid().clone();
    let fd = FdConfig::default();
    let mut s = Sampler::new(11, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 2, 2);
    let curv = g.curving(CurvatureRoute::Closed);
    assert!(curv.eval(&f.total(0), &[f.total_tangent(0, 0), f.total_tangent(0, 0)]).unwrap().norm() < 1e-14);
    let delta_f = delta_fibre(&Gerbe::on_fibre1(&curv)).eval(&f.point(), &f.tangents()).unwrap();
    let tr = g.tau_r().eval(&f.point(), &f.tangents()).unwrap();
    let deps = ext_d(&g.epsilon(), &f.point(), &f.tangents(), &fd).unwrap();
    assert!((delta_f - (tr - deps)).norm() < 1e-6, "{delta_f} vs {}", tr - deps);
}

#[test]
fn df_is_2pi_i_string_form_and_string_form_is_closed() {
    let g = trivial(32);
    let grid = g.scenario().grid().clone();
    let fd = FdConfig::default();
    let mut s = Sampler::new(12, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 1, 4);
    let p = f.total(0);
    let vs: Vec<_> = (0..3).map(|j| f.total_tangent(0, j)).collect();
    let df = ext_d(&g.curving(CurvatureRoute::Closed), &p, &vs, &fd).unwrap();
    let base = g.base_string_form(CurvatureRoute::Closed).unwrap();
    let m = ScenarioPoint::Chart(f.m.clone());
    let us: Vec<_> = (0..4).map(|j| TangentVector::Chart(f.u[j].clone())).collect();
    let w = base.eval(&m, &us[..3]).unwrap();
    assert!((df - I * (2.0 * PI * w)).norm() < 1e-6, "{df} vs {}", I * (2.0 * PI * w));
    assert!(w.abs() > 1e-4);
    let dw = ext_d(&base, &m, &us, &fd).unwrap();
    assert!(dw.abs() < 1e-6, "{dw}");
}

#[test]
fn string_form_is_lift_independent_and_alternating() {
    let g = trivial(32);
    let grid = g.scenario().grid().clone();
    let mut s = Sampler::new(13, GroupKind::Su2);
    let f = fibred(&mut s, &grid, 2, 3);
    let w = g.string_form(CurvatureRoute::Closed);
    let v0: Vec<_> = (0..3).map(|j| f.total_tangent(0, j)).collect();
    let v1: Vec<_> = (0..3).map(|j| f.total_tangent(1, j)).collect();
    let a = w.eval(&f.total(0), &v0).unwrap();
    let b = w.eval(&f.total(1), &v1).unwrap();
    assert!((a - b).abs() < 1e-6);
    assert!(alternation_residual(&w, &f.total(0), &v0).unwrap() < 1e-10);
}

#[test]
fn abelian_string_form_matches_direct_quadrature() {
    let grid = ThetaGrid::periodic(32).unwrap();
    let tb = TrivialBundle::abelian(&grid, GroupKind::Su2);
    let g = Gerbe::new(BundleScenario::Trivial(tb.clone()), FdConfig::default()).unwrap();
    let m = [0.3, -0.2, 0.5, 0.1];
    let us = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
    let base = g.base_string_form(CurvatureRoute::Closed).unwrap();
    let got = base
        .eval(
            &ScenarioPoint::Chart(m.to_vec()),
            &us.iter().map(|u| TangentVector::Chart(u.to_vec())).collect::<Vec<_>>(),
        )
        .unwrap();
    // abelian: F(uᵢ,uⱼ) = (∂ᵢρ aⱼ − ∂ⱼρ aᵢ) E, ∇Φ(uᵢ) = (∂ᵢφ − ρ ∂_θaᵢ) E with scalar profiles
    let rho = tb.rho(&m);
    let gr = tb.grad_rho(&m);
    let a = |i: usize, t: f64| match i {
        0 => t.sin(),
        1 => t.cos(),
        2 => (2.0 * t).sin(),
        _ => 0.4 + 0.6 * (2.0 * t).cos(),
    };
    let da = |i: usize, t: f64| match i {
        0 => t.cos(),
        1 => -t.sin(),
        2 => 2.0 * (2.0 * t).cos(),
        _ => -1.2 * (2.0 * t).sin(),
    };
    let phi = |t: f64| m[0] * 1.0 + m[2] * t.sin();
    let dphi = |i: usize, t: f64| {
        let prof = [1.0, 0.0, t.sin(), 0.0];
        gr[i] * phi(t) + rho * prof[i]
    };
    let fij = |i: usize, j: usize, t: f64| gr[i] * a(j, t) - gr[j] * a(i, t);
    let nab = |i: usize, t: f64| dphi(i, t) - rho * da(i, t);
    let n = 400;
    let mut acc = 0.0;
    for k in 0..n {
        let t = 2.0 * PI * k as f64 / n as f64;
        acc += fij(0, 1, t) * nab(2, t) - fij(0, 2, t) * nab(1, t) + fij(1, 2, t) * nab(0, t);
    }
    let expect = -(acc * 2.0 * PI / n as f64) / (4.0 * PI * PI);
    assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
}

#[test]
fn path_fibration_string_form_is_omega3() {
    let g = path(128);
    let grid = g.scenario().grid().clone();
    let mut s = Sampler::new(14, GroupKind::Su2);
    let p = s.path(&grid);
    let xs: Vec<_> = (0..3).map(|_| s.path_vector(&grid, 1.0)).collect();
    let vs: Vec<_> = xs.iter().cloned().map(TangentVector::Loop).collect();
    let k = *p.last();
    let ends: Vec<_> = xs.iter().map(|x| *x.values().last().unwrap()).collect();
    let w3 = omega3_left(&k, &ends[0], &ends[1], &ends[2]);
    for route in [CurvatureRoute::Closed, CurvatureRoute::FiniteDifference] {
        let sf = g.string_form(route).eval(&ScenarioPoint::Loop(p.clone()), &vs).unwrap();
        assert!((sf - w3).abs() / w3.abs().max(1.0) < 1e-6, "{route:?}: {sf} vs {w3}");
    }
}

#[test]
fn path_fibration_curving_is_term_by_term_quadrature() {
    let g = path(64);
    let grid = g.scenario().grid().clone();
    let sc = g.scenario();
    let mut s = Sampler::new(15, GroupKind::Su2);
    let p = ScenarioPoint::Loop(s.path(&grid));
    let (x, y) = (TangentVector::Loop(s.path_vector(&grid, 1.0)), TangentVector::Loop(s.path_vector(&grid, 1.0)));
    let fd = FdConfig::default();
    let a = sc.connection(&p, &x).unwrap();
    let b = sc.connection(&p, &y).unwrap();
    let fxy = sc.curvature(&p, &x, &y, CurvatureRoute::Closed, &fd).unwrap();
    let phi = sc.higgs(&p).unwrap();
    let (da, db) = (a.dtheta().unwrap(), b.dtheta().unwrap());
    let vals: Vec<f64> = (0..grid.len())
        .map(|j| {
            let ip = |u: &LoopVector, v: &LoopVector| stringclass::liegroup::inner(&u.values()[j], &v.values()[j]);
            0.5 * (ip(&a, &db) - ip(&b, &da)) - ip(&fxy, &phi)
        })
        .collect();
    let expect = I * (grid.integrate_real(&vals).unwrap() / (2.0 * PI));
    let got = g.curving(CurvatureRoute::Closed).eval(&p, &[x, y]).unwrap();
    assert!((got - expect).norm() < 1e-9);
}

#[test]
fn reduced_splitting_on_both_scenarios() {
    for g in [trivial(64), path(64)] {
        let sc = g.scenario();
        let grid = sc.grid().clone();
        let mut s = Sampler::new(16, GroupKind::Su2);
        let (p, h, x) = match sc {
            BundleScenario::Trivial(_) => (
                trivial_point(&s.chart_point(4, 0.7), s.loop_point(&grid)),
                s.loop_point(&grid),
                s.loop_vector(&grid, 2, 1.0),
            ),
            BundleScenario::Path(_) => {
                (ScenarioPoint::Loop(s.path(&grid)), s.based_loop(&grid), s.loop_vector(&grid, 2, 1.0))
            }
        };
        let ph = sc.higgs(&p).unwrap();
        let phg = sc.higgs(&sc.act(&p, &h).unwrap()).unwrap();
        assert!(reduced_splitting_residual(&ph, &phg, &h, &x).unwrap() < 1e-8, "{}", sc.name());
        let id = LoopPoint::identity(&grid, 2);
        assert!(reduced_splitting_residual(&ph, &ph, &id, &x).unwrap() == 0.0);
    }
}

#[test]
fn omega3_examples_and_normalisation() {
    let b = GroupKind::Su2.basis();
    assert!(omega3_right(&b[0], &b[0], &b[1]).abs() < 1e-16);
    let direct = 6.0 * stringclass::liegroup::inner(&b[0].bracket(&b[1]), &b[2]) / (48.0 * PI * PI);
    assert!((omega3_right(&b[0], &b[1], &b[2]) - direct).abs() < 1e-15);
    let g = exp_alg(&(b[0].scale(0.4) + b[2].scale(-0.9)), 1.0);
    let mats = [*g.matrix() * *b[0].matrix(), *g.matrix() * *b[1].matrix(), *g.matrix() * *b[2].matrix()];
    assert!((omega3(&g, &mats).unwrap() - omega3_left(&g, &b[0], &b[1], &b[2])).abs() < 1e-15);
    let vol = su2_volume_integral(24).unwrap();
    assert!((vol - 1.0).abs() < 1e-3, "{vol}");
}
