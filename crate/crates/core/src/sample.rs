//! Seeded random scenario data.
//!
//! Draws come from a ChaCha8 stream seeded with `seed_from_u64`, consumed in
//! a fixed order, so a seed reproduces the same fixtures on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::ThetaGrid;
use crate::liegroup::{AlgebraElement, GroupKind};
use crate::loops::{LoopPoint, LoopVector, PathInLoopGroup};

pub struct Sampler {
    rng: ChaCha8Rng,
    kind: GroupKind,
    basis: Vec<AlgebraElement>,
}

impl Sampler {
    pub fn new(seed: u64, kind: GroupKind) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), kind, basis: kind.basis() }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        self.rng.gen_range(a..b)
    }

    /// Point of the box `(−r, r)^d`.
    pub fn chart_point(&mut self, d: usize, r: f64) -> Vec<f64> {
        (0..d).map(|_| self.uniform(-r, r)).collect()
    }

    pub fn chart_vector(&mut self, d: usize) -> Vec<f64> {
        self.chart_point(d, 1.0)
    }

    /// Coordinates uniform in `[−s, s]`.
    pub fn algebra(&mut self, s: f64) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(self.kind.dim());
        for i in 0..self.basis.len() {
            let c = self.uniform(-s, s);
            acc += self.basis[i].scale(c);
        }
        acc
    }

    /// Random trigonometric polynomial of degree `k` with amplitude `s`.
    pub fn loop_vector(&mut self, grid: &ThetaGrid, k: usize, s: f64) -> LoopVector {
        let coeffs: Vec<(AlgebraElement, AlgebraElement)> =
            (0..=k).map(|j| (self.algebra(s / (1 + j) as f64), self.algebra(s / (1 + j) as f64))).collect();
        LoopVector::from_fn(grid, |t| {
            let mut acc = AlgebraElement::zero(self.kind.dim());
            for (j, (c, d)) in coeffs.iter().enumerate() {
                let jt = j as f64 * t;
                acc += c.scale(jt.cos()) + d.scale(jt.sin());
            }
            acc
        })
    }

    /// Same, shifted to vanish at θ = 0.
    pub fn based_loop_vector(&mut self, grid: &ThetaGrid, k: usize, s: f64) -> LoopVector {
        let x = self.loop_vector(grid, k, s);
        let x0 = x.values()[0];
        x.map(|v| *v - x0)
    }

    /// Product of two exponentials of random loop vectors.
    pub fn loop_point(&mut self, grid: &ThetaGrid) -> LoopPoint {
        let a = LoopPoint::exp(&self.loop_vector(grid, 2, 0.8));
        let b = LoopPoint::exp(&self.loop_vector(grid, 2, 0.8));
        a.mul(&b).expect("shared grid")
    }

    /// Random loop with g(0) = e.
    pub fn based_loop(&mut self, grid: &ThetaGrid) -> LoopPoint {
        let a = LoopPoint::exp(&self.based_loop_vector(grid, 2, 0.8));
        let b = LoopPoint::exp(&self.based_loop_vector(grid, 2, 0.8));
        a.mul(&b).expect("shared grid")
    }

    /// Smooth 𝔨-valued function on [0, 2π] vanishing at 0:
    /// `(θ/2π) A + sin θ B + (1 − cos θ) C + sin 2θ D`.
    pub fn path_vector(&mut self, grid: &ThetaGrid, s: f64) -> LoopVector {
        let (a, b, c, d) = (self.algebra(s), self.algebra(s), self.algebra(0.5 * s), self.algebra(0.3 * s));
        LoopVector::from_fn(grid, |t| {
            a.scale(t / (2.0 * PI)) + b.scale(t.sin()) + c.scale(1.0 - t.cos()) + d.scale((2.0 * t).sin())
        })
    }

    /// Based path in K.
    pub fn path(&mut self, grid: &ThetaGrid) -> LoopPoint {
        let a = LoopPoint::exp(&self.path_vector(grid, 1.2));
        let b = LoopPoint::exp(&self.path_vector(grid, 0.8));
        a.mul(&b).expect("shared grid")
    }

    /// Analytic path `s ↦ exp(sX) exp(s²Y)` in the loop group on `m` nodes.
    pub fn loop_group_path(&mut self, grid: &ThetaGrid, m: usize) -> PathInLoopGroup {
        let x = self.loop_vector(grid, 2, 0.7);
        let y = self.loop_vector(grid, 2, 0.7);
        PathInLoopGroup::from_fn(m, |s| {
            LoopPoint::exp(&x.scale(s)).mul(&LoopPoint::exp(&y.scale(s * s))).expect("shared grid")
        })
        .expect("based by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let g = ThetaGrid::periodic(16).unwrap();
        let mut a = Sampler::new(7, GroupKind::Su2);
        let mut b = Sampler::new(7, GroupKind::Su2);
        assert_eq!(a.loop_point(&g), b.loop_point(&g));
        let mut c = Sampler::new(8, GroupKind::Su2);
        assert_ne!(a.loop_point(&g), c.loop_point(&g));
    }

    #[test]
    fn based_objects_start_at_identity() {
        let g = ThetaGrid::interval(32).unwrap();
        let mut s = Sampler::new(1, GroupKind::Su3);
        let p = s.path(&g);
        assert!(p.first().distance(&crate::liegroup::GroupElement::identity(3)) < 1e-14);
        assert!(s.path_vector(&g, 1.0).values()[0].norm() < 1e-15);
        let pg = ThetaGrid::periodic(16).unwrap();
        assert!(s.based_loop(&pg).first().distance(&crate::liegroup::GroupElement::identity(3)) < 1e-14);
    }
}
