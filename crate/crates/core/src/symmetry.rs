//! Relation-conditional global translations (`U_sym`), QRF transformations
//! and the center-of-mass symmetry.
//!
//! A [`SymmetryElement`] is an assignment `h ↦ g_h` over all relation tuples
//! plus a global phase. It acts by `|g, hg⟩ ↦ e^{iφ}|g_h g, h g_h g⟩`, i.e.
//! every sector is translated rigidly by its own group element. Elements are
//! stored as assignments; dense matrices are only built on request.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::hilbert::{Operator, SpaceLabel, StateVector, C64, ZERO};
use crate::sectors::{RelationTuple, SectorLayout};

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryElement {
    space: SpaceLabel,
    /// Group element index per relation index.
    assignment: Vec<usize>,
    phase: f64,
}

impl SymmetryElement {
    pub fn new(space: SpaceLabel, assignment: Vec<usize>, phase: f64) -> Result<Self> {
        let layout = SectorLayout::for_space(&space);
        if assignment.len() != layout.relation_count() {
            return Err(Error::structural(format!(
                "assignment covers {} relation tuples, space {} has {}",
                assignment.len(),
                space,
                layout.relation_count()
            )));
        }
        if let Some(&g) = assignment.iter().find(|&&g| g >= layout.order()) {
            return Err(Error::structural(format!("group element index {g} out of range")));
        }
        if !phase.is_finite() {
            return Err(Error::structural("phase must be finite"));
        }
        Ok(SymmetryElement { space, assignment, phase: phase.rem_euclid(TAU) })
    }

    pub fn identity(space: SpaceLabel) -> Self {
        let r = SectorLayout::for_space(&space).relation_count();
        SymmetryElement { space, assignment: vec![0; r], phase: 0.0 }
    }

    /// Global translation `U_g^{⊗N}`: the constant assignment.
    pub fn global_translation(space: SpaceLabel, g: &GroupElement) -> Result<Self> {
        let gi = space.group().index_of(g)?;
        let r = SectorLayout::for_space(&space).relation_count();
        Ok(SymmetryElement { space, assignment: vec![gi; r], phase: 0.0 })
    }

    /// Translation by `g` inside the single sector `relation`, identity elsewhere.
    pub fn sector_translation(space: SpaceLabel, relation: usize, g: usize) -> Result<Self> {
        let mut u = SymmetryElement::identity(space);
        if relation >= u.assignment.len() {
            return Err(Error::structural("relation index out of range"));
        }
        u.assignment[relation] = g;
        SymmetryElement::new(u.space, u.assignment, 0.0)
    }

    /// Builds the assignment from a function of the relation tuple.
    pub fn from_fn<F>(space: SpaceLabel, phase: f64, f: F) -> Result<Self>
    where
        F: Fn(&RelationTuple) -> Result<GroupElement>,
    {
        let layout = SectorLayout::for_space(&space);
        let assignment = (0..layout.relation_count())
            .map(|r| space.group().index_of(&f(&layout.relation_tuple(r))?))
            .collect::<Result<_>>()?;
        SymmetryElement::new(space, assignment, phase)
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `g_h` for a relation index.
    pub fn element_for(&self, relation: usize) -> GroupElement {
        self.space.group().element_at(self.assignment[relation])
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase.rem_euclid(TAU);
        self
    }

    fn layout(&self) -> std::sync::Arc<SectorLayout> {
        SectorLayout::for_space(&self.space)
    }

    /// Basis permutation: `perm[x]` is the image of `|x⟩`.
    pub fn permutation(&self) -> Vec<usize> {
        let layout = self.layout();
        let group = self.space.group();
        let mut perm = vec![0; self.space.dim()];
        for r in 0..layout.relation_count() {
            let m = layout.members(r);
            for (g, &x) in m.iter().enumerate() {
                perm[x] = m[group.compose_idx(self.assignment[r], g)];
            }
        }
        perm
    }

    fn phase_factor(&self) -> C64 {
        C64::from_polar(1.0, self.phase)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.space.ensure_same(psi.space())?;
        let perm = self.permutation();
        let ph = self.phase_factor();
        let mut out = vec![ZERO; psi.amplitudes().len()];
        for (x, a) in psi.amplitudes().iter().enumerate() {
            out[perm[x]] = a * ph;
        }
        StateVector::new(self.space.clone(), out)
    }

    /// `U ρ U†`; the global phase cancels.
    pub fn conjugate(&self, rho: &Operator) -> Result<Operator> {
        self.space.ensure_same(rho.space())?;
        Ok(rho.conjugate_by_permutation(&self.permutation()))
    }

    /// Dense unitary.
    pub fn to_operator(&self) -> Operator {
        Operator::permutation(self.space.clone(), &self.permutation(), self.phase_factor())
            .expect("permutation length matches")
    }

    /// `self ∘ other`: pointwise product of assignments.
    pub fn compose(&self, other: &SymmetryElement) -> Result<SymmetryElement> {
        self.space.ensure_same(&other.space)?;
        let group = self.space.group();
        let assignment =
            self.assignment.iter().zip(&other.assignment).map(|(&a, &b)| group.compose_idx(a, b)).collect();
        SymmetryElement::new(self.space.clone(), assignment, self.phase + other.phase)
    }

    pub fn inverse(&self) -> SymmetryElement {
        let group = self.space.group();
        let assignment = self.assignment.iter().map(|&a| group.inverse_idx(a)).collect();
        SymmetryElement { space: self.space.clone(), assignment, phase: (-self.phase).rem_euclid(TAU) }
    }

    /// Equality of induced operators up to a global phase.
    pub fn same_up_to_phase(&self, other: &SymmetryElement) -> bool {
        self.space == other.space && self.assignment == other.assignment
    }
}

/// Recovers the symmetry element whose induced operator equals `candidate`
/// up to a global phase, if there is one.
///
/// The candidate must be monomial with unit-modulus entries sharing one
/// phase, keep every sector invariant, and translate each sector rigidly.
pub fn is_in_usym(candidate: &Operator, eps: f64) -> Option<SymmetryElement> {
    let space = candidate.space().clone();
    let layout = SectorLayout::for_space(&space);
    let group = space.group();
    let d = space.dim();
    let n = layout.order();
    let mut assignment: Vec<Option<usize>> = vec![None; layout.relation_count()];
    let mut phase: Option<C64> = None;
    for x in 0..d {
        let mut hit = None;
        for y in 0..d {
            let v = candidate.get(y, x);
            if v.norm() >= eps {
                if hit.is_some() {
                    return None;
                }
                hit = Some((y, v));
            }
        }
        let (y, v) = hit?;
        if (v.norm() - 1.0).abs() >= eps {
            return None;
        }
        match phase {
            None => phase = Some(v),
            Some(p) if (p - v).norm() < eps => {}
            Some(_) => return None,
        }
        let r = layout.relation_index(x);
        if layout.relation_index(y) != r {
            return None;
        }
        // particle 1 carries the sector coordinate g
        let (gx, gy) = (x / (d / n), y / (d / n));
        let t = group.compose_idx(gy, group.inverse_idx(gx));
        match assignment[r] {
            None => assignment[r] = Some(t),
            Some(prev) if prev == t => {}
            Some(_) => return None,
        }
    }
    let assignment = assignment.into_iter().map(|a| a.unwrap_or(0)).collect();
    SymmetryElement::new(space, assignment, phase?.arg()).ok()
}

/// All `|G|^{|G|^{N−1}}` elements of `U_sym` (zero phase), for tiny spaces.
pub fn enumerate_usym(space: &SpaceLabel, cap: usize) -> Result<Vec<SymmetryElement>> {
    let layout = SectorLayout::for_space(space);
    let n = layout.order();
    let r = layout.relation_count();
    let count = (0..r)
        .try_fold(1usize, |acc, _| acc.checked_mul(n))
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Unsupported(format!("|U_sym| = {n}^{r} exceeds the enumeration cap {cap}")))?;
    Ok((0..count)
        .map(|mut code| {
            let mut assignment = vec![0; r];
            for slot in assignment.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            SymmetryElement { space: space.clone(), assignment, phase: 0.0 }
        })
        .collect())
}

/// The change of reference frame from particle `i` to particle `j`.
#[derive(Clone, Debug)]
pub struct QrfTransform {
    from: usize,
    to: usize,
    symmetry: SymmetryElement,
    reduced: SpaceLabel,
    /// `V|x⟩ = |perm[x]⟩` on `N−1` particles.
    perm: Vec<usize>,
}

/// Builds `V_{i→j}` (particles numbered from 1) and the symmetry
/// `g_h = h_{j−1}^{-1} h_{i−1}` that realizes it.
pub fn qrf_transform(space: &SpaceLabel, i: usize, j: usize) -> Result<QrfTransform> {
    let np = space.particles();
    if np < 2 {
        return Err(Error::domain("QRF transformations need at least two particles"));
    }
    for k in [i, j] {
        if k == 0 || k > np {
            return Err(Error::structural(format!("particle {k} out of range 1..={np}")));
        }
    }
    let group = space.group().clone();
    let symmetry = SymmetryElement::from_fn(space.clone(), 0.0, |h| {
        group.compose(&group.inverse(&h.get(j - 1, &group))?, &h.get(i - 1, &group))
    })?;
    let reduced = space.with_particles(np - 1)?;
    let full = symmetry.permutation();
    let perm = (0..reduced.dim())
        .map(|x| {
            let mut digits = reduced.digits(x);
            digits.insert(i - 1, 0);
            let mut out = space.digits(full[space.index_from_digits(&digits)]);
            debug_assert_eq!(out[j - 1], 0);
            out.remove(j - 1);
            reduced.index_from_digits(&out)
        })
        .collect();
    Ok(QrfTransform { from: i, to: j, symmetry, reduced, perm })
}

impl QrfTransform {
    pub fn from_particle(&self) -> usize {
        self.from
    }

    pub fn to_particle(&self) -> usize {
        self.to
    }

    /// The `N`-particle symmetry mapping `|e⟩_i ⊗ φ` to `|e⟩_j ⊗ Vφ`.
    pub fn symmetry(&self) -> &SymmetryElement {
        &self.symmetry
    }

    pub fn reduced_space(&self) -> &SpaceLabel {
        &self.reduced
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Dense `V_{i→j}` on `N−1` particles.
    pub fn operator(&self) -> Operator {
        Operator::permutation(self.reduced.clone(), &self.perm, C64::new(1.0, 0.0)).expect("permutation length matches")
    }

    pub fn apply(&self, phi: &StateVector) -> Result<StateVector> {
        self.reduced.ensure_same(phi.space())?;
        let mut out = vec![ZERO; phi.amplitudes().len()];
        for (x, a) in phi.amplitudes().iter().enumerate() {
            out[self.perm[x]] = *a;
        }
        StateVector::new(self.reduced.clone(), out)
    }

    /// `V A V†`.
    pub fn conjugate(&self, a: &Operator) -> Result<Operator> {
        self.reduced.ensure_same(a.space())?;
        Ok(a.conjugate_by_permutation(&self.perm))
    }
}

/// How relation residues are read as integers before the floor in the
/// center-of-mass assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidueChart {
    /// Representatives in `(−n/2, n/2]`, so that `−h` is read as `−h`.
    #[default]
    Centered,
    /// Representatives in `[0, n)`.
    Canonical,
}

impl ResidueChart {
    pub fn represent(self, residue: usize, n: usize) -> i64 {
        match self {
            ResidueChart::Canonical => residue as i64,
            ResidueChart::Centered if residue <= n / 2 => residue as i64,
            ResidueChart::Centered => residue as i64 - n as i64,
        }
    }
}

/// Center-of-mass symmetry on `Z_n`: `g(h) = −⌊(m_2 h_1 + … + m_N h_{N−1}) / m⌋`.
///
/// Moves the center of mass of every classical configuration to the origin
/// (up to the floor). Only defined for a single cyclic factor.
///
/// The chart fixes the integer representatives of the `h_k`. With the
/// canonical chart the two branches of a superposition with opposite
/// relations `±h` are not translated symmetrically, which breaks the
/// phase-preserving behaviour of the associated trace; see the README.
pub fn center_of_mass_symmetry(space: &SpaceLabel, masses: &[f64], chart: ResidueChart) -> Result<SymmetryElement> {
    let group = space.group();
    if !group.is_cyclic() {
        return Err(Error::Unsupported(format!("center of mass is defined on a single cyclic factor, got {group}")));
    }
    if masses.len() != space.particles() {
        return Err(Error::structural(format!("{} masses for {} particles", masses.len(), space.particles())));
    }
    if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::domain("masses must be finite and nonnegative"));
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::domain("total mass must be positive"));
    }
    let n = group.order();
    SymmetryElement::from_fn(space.clone(), 0.0, |h| {
        let weighted: f64 =
            h.relations().iter().zip(&masses[1..]).map(|(hk, m)| m * chart.represent(hk.residues()[0], n) as f64).sum();
        // the nudge keeps quotients that are integers up to rounding on the
        // correct side of the floor
        let fl = (weighted / total + 1e-9).floor() as i64;
        group.element(&[-fl])
    })
}

#[derive(Serialize, Deserialize)]
struct WireSymmetry {
    space: SpaceLabel,
    assignment: BTreeMap<usize, usize>,
    #[serde(default)]
    phase: f64,
}

impl Serialize for SymmetryElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireSymmetry {
            space: self.space.clone(),
            assignment: self.assignment.iter().copied().enumerate().collect(),
            phase: self.phase,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetryElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireSymmetry::deserialize(d)?;
        let r = SectorLayout::for_space(&w.space).relation_count();
        if w.assignment.len() != r || w.assignment.keys().any(|&k| k >= r) {
            return Err(serde::de::Error::custom(format!("assignment must cover relation indices 0..{r} exactly")));
        }
        SymmetryElement::new(w.space, w.assignment.into_values().collect(), w.phase).map_err(serde::de::Error::custom)
    }
}
