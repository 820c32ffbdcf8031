//! Seeded random states and operators for property checks.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::{Operator, SpaceLabel, StateVector, C64, ZERO};
use crate::sectors::SectorLayout;
use crate::symmetry::SymmetryElement;

/// Deterministic generator; the same seed always yields the same sequence.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn gaussian(&mut self) -> C64 {
        let re: f64 = self.0.sample(StandardNormal);
        let im: f64 = self.0.sample(StandardNormal);
        C64::new(re, im)
    }

    pub fn angle(&mut self) -> f64 {
        self.0.gen_range(0.0..std::f64::consts::TAU)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    /// Ginibre matrix: i.i.d. complex Gaussian entries.
    pub fn operator(&mut self, space: SpaceLabel) -> Operator {
        let d = space.dim();
        let data = (0..d * d).map(|_| self.gaussian()).collect();
        Operator::new(space, data).expect("dimension matches")
    }

    /// Haar-random unit vector.
    pub fn state(&mut self, space: SpaceLabel) -> StateVector {
        let d = space.dim();
        let v = StateVector::new(space, (0..d).map(|_| self.gaussian()).collect()).expect("dimension matches");
        v.normalized().expect("gaussian vector is nonzero")
    }

    /// Unit-trace density matrix of the given rank, `Σ_k |v_k⟩⟨v_k|` normalized.
    pub fn density(&mut self, space: SpaceLabel, rank: usize) -> Operator {
        let mut rho = Operator::zeros(space.clone());
        for _ in 0..rank.max(1) {
            let v = self.state(space.clone());
            rho.add_scaled(C64::new(1.0, 0.0), &v.projector()).expect("same space");
        }
        let t = rho.trace();
        rho.scale(C64::new(1.0, 0.0) / t)
    }

    /// Symmetry with a uniformly random assignment and phase.
    pub fn symmetry(&mut self, space: SpaceLabel) -> SymmetryElement {
        let layout = SectorLayout::for_space(&space);
        let n = layout.order();
        let assignment = (0..layout.relation_count()).map(|_| self.below(n)).collect();
        let phase = self.angle();
        SymmetryElement::new(space, assignment, phase).expect("assignment length matches")
    }

    /// Normalized alignable state: each relation sector holds at most one
    /// configuration, the first sector always one.
    pub fn alignable(&mut self, space: SpaceLabel) -> StateVector {
        let layout = SectorLayout::for_space(&space);
        let mut amps = vec![ZERO; space.dim()];
        for r in 0..layout.relation_count() {
            if r == 0 || self.below(3) > 0 {
                amps[layout.members(r)[self.below(layout.order())]] = self.gaussian();
            }
        }
        StateVector::new(space, amps).expect("dimension matches").normalized().expect("sector 0 is occupied")
    }

    /// Haar-random unitary by Gram–Schmidt on a Ginibre matrix's columns.
    pub fn unitary(&mut self, space: SpaceLabel) -> Operator {
        let d = space.dim();
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v: Vec<C64> = (0..d).map(|_| self.gaussian()).collect();
            // two passes keep the columns orthogonal to rounding level
            for _ in 0..2 {
                for u in &cols {
                    let p: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(u) {
                        *x -= p * y;
                    }
                }
            }
            let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
        let mut data = vec![ZERO; d * d];
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                data[r * d + c] = *v;
            }
        }
        Operator::new(space, data).expect("dimension matches")
    }
}
