//! Alignable states and observables.
//!
//! A state is alignable iff each relation sector carries at most one
//! classical configuration, `|ψ⟩ = Σ_h α_h |g_h, h g_h⟩`. Translating every
//! sector so that particle `i` sits at the origin then yields `|e⟩_i ⊗ |φ⟩`,
//! which is unique up to a global phase. We fix that phase by making the
//! first nonzero amplitude of `φ` real and positive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceLabel, StateVector, C64, ZERO};
use crate::sectors::SectorLayout;
use crate::symmetry::SymmetryElement;

/// Amplitudes below this modulus count as zero when reading off supports.
pub const SUPPORT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorCoefficient {
    /// `α_h`.
    pub amplitude: C64,
    /// Index of `g_h`, the position of particle 1.
    pub element: usize,
    /// Basis index of `|g_h, h g_h⟩`.
    pub config: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignableDecomposition {
    space: SpaceLabel,
    /// Occupied sectors by relation index.
    coefficients: BTreeMap<usize, SectorCoefficient>,
}

impl AlignableDecomposition {
    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, SectorCoefficient> {
        &self.coefficients
    }

    /// `α_h` for every relation index, zero for empty sectors.
    pub fn amplitude_vector(&self, relations: usize) -> Vec<C64> {
        let mut v = vec![ZERO; relations];
        for (&r, c) in &self.coefficients {
            v[r] = c.amplitude;
        }
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.values().map(|c| c.amplitude.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Alignability {
    Alignable(AlignableDecomposition),
    /// The named sector carries more than one configuration.
    NotAlignable {
        relation: usize,
    },
}

impl Alignability {
    pub fn ok(self) -> Result<AlignableDecomposition> {
        match self {
            Alignability::Alignable(d) => Ok(d),
            Alignability::NotAlignable { .. } => Err(Error::NotAlignable),
        }
    }
}

pub fn decompose_alignable(psi: &StateVector) -> Alignability {
    let space = psi.space().clone();
    let layout = SectorLayout::for_space(&space);
    let amps = psi.amplitudes();
    let mut coefficients = BTreeMap::new();
    for r in 0..layout.relation_count() {
        let mut found = None;
        for (g, &x) in layout.members(r).iter().enumerate() {
            if amps[x].norm() >= SUPPORT_EPS {
                if found.is_some() {
                    return Alignability::NotAlignable { relation: r };
                }
                found = Some(SectorCoefficient { amplitude: amps[x], element: g, config: x });
            }
        }
        if let Some(c) = found {
            coefficients.insert(r, c);
        }
    }
    Alignability::Alignable(AlignableDecomposition { space, coefficients })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedForm {
    pub reference_particle: usize,
    pub reduced_state: StateVector,
    /// The input is symmetry-equivalent to `e^{iφ} |e⟩_i ⊗ reduced_state`.
    pub global_phase: f64,
}

impl AlignedForm {
    /// `e^{iφ} |e⟩_i ⊗ φ` on `N` particles.
    pub fn reconstruct(&self, with_phase: bool) -> Result<StateVector> {
        let red = self.reduced_state.space();
        let space = red.with_particles(red.particles() + 1)?;
        let i = self.reference_particle;
        let ph = if with_phase { C64::from_polar(1.0, self.global_phase) } else { C64::new(1.0, 0.0) };
        let mut out = vec![ZERO; space.dim()];
        for (x, a) in self.reduced_state.amplitudes().iter().enumerate() {
            let mut d = red.digits(x);
            d.insert(i - 1, 0);
            out[space.index_from_digits(&d)] = a * ph;
        }
        StateVector::new(space, out)
    }
}

/// Basis index, without particle `i`, of the unique configuration in
/// sector `relation` whose particle `i` is at the origin.
fn origin_config(layout: &SectorLayout, relation: usize, i: usize) -> usize {
    let space = layout.space();
    let reduced_dim = space.dim() / layout.order();
    let x = layout
        .members(relation)
        .iter()
        .copied()
        .find(|&x| space.digits(x)[i - 1] == 0)
        .expect("each sector has exactly one member with particle i at the origin");
    let mut d = space.digits(x);
    d.remove(i - 1);
    let idx = d.iter().fold(0, |acc, &v| acc * layout.order() + v);
    debug_assert!(idx < reduced_dim);
    idx
}

/// Unique `i`-aligned representative (particles numbered from 1).
pub fn align_to(psi: &StateVector, i: usize) -> Result<AlignedForm> {
    let space = psi.space().clone();
    let np = space.particles();
    if np < 2 {
        return Err(Error::domain("alignment needs at least two particles"));
    }
    if i == 0 || i > np {
        return Err(Error::structural(format!("particle {i} out of range 1..={np}")));
    }
    let dec = decompose_alignable(psi).ok()?;
    let layout = SectorLayout::for_space(&space);
    let reduced = space.with_particles(np - 1)?;
    let mut amps = vec![ZERO; reduced.dim()];
    for (&r, c) in dec.coefficients() {
        amps[origin_config(&layout, r, i)] = c.amplitude;
    }
    let first = amps.iter().position(|a| a.norm() >= SUPPORT_EPS);
    let global_phase = first.map_or(0.0, |k| amps[k].arg());
    let rot = C64::from_polar(1.0, -global_phase);
    amps.iter_mut().for_each(|a| *a *= rot);
    if let Some(k) = first {
        // exactly real, not just up to rounding
        amps[k] = C64::new(amps[k].norm(), 0.0);
    }
    Ok(AlignedForm { reference_particle: i, reduced_state: StateVector::new(reduced, amps)?, global_phase })
}

/// An alignable observable: `U A U† = |e⟩⟨e|_i ⊗ reduced`.
#[derive(Clone, Debug)]
pub struct AlignedObservable {
    pub reference_particle: usize,
    pub reduced: Operator,
    pub symmetry: SymmetryElement,
}

/// Searches sector by sector for `U ∈ U_sym` with `U A U† = |e⟩⟨e|_i ⊗ B`.
///
/// This is possible iff within each sector at most one configuration
/// appears in the row or column support of `A`; that configuration is then
/// translated onto the one with particle `i` at the origin.
pub fn align_observable(a: &Operator, i: usize) -> Result<Option<AlignedObservable>> {
    let space = a.space().clone();
    let np = space.particles();
    if np < 2 {
        return Err(Error::domain("alignment needs at least two particles"));
    }
    if i == 0 || i > np {
        return Err(Error::structural(format!("particle {i} out of range 1..={np}")));
    }
    let layout = SectorLayout::for_space(&space);
    let d = space.dim();
    let group = space.group();
    let supported: Vec<bool> = (0..d)
        .map(|x| (0..d).any(|y| a.get(x, y).norm() >= SUPPORT_EPS || a.get(y, x).norm() >= SUPPORT_EPS))
        .collect();
    let mut chosen = vec![None; layout.relation_count()];
    for (r, slot) in chosen.iter_mut().enumerate() {
        let mut it = layout.members(r).iter().copied().filter(|&x| supported[x]);
        *slot = it.next();
        if it.next().is_some() {
            return Ok(None);
        }
    }
    let assignment: Vec<usize> =
        chosen.iter().map(|c| c.map_or(0, |x| group.inverse_idx(space.digits(x)[i - 1]))).collect();
    let symmetry = SymmetryElement::new(space.clone(), assignment, 0.0)?;
    let reduced_space = space.with_particles(np - 1)?;
    let phi: Vec<usize> = (0..layout.relation_count()).map(|r| origin_config(&layout, r, i)).collect();
    let mut b = Operator::zeros(reduced_space);
    for (r, x) in chosen.iter().enumerate() {
        let Some(x) = x else { continue };
        for (j, y) in chosen.iter().enumerate() {
            let Some(y) = y else { continue };
            b.set(phi[r], phi[j], a.get(*x, *y));
        }
    }
    Ok(Some(AlignedObservable { reference_particle: i, reduced: b, symmetry }))
}
