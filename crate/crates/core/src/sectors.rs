//! Relation sectors `H_h`, the character basis `|h;χ⟩` and the physical
//! subspace.
//!
//! A configuration `(g_1,…,g_N)` has relations `h_k = g_{k+1} g_1^{-1}`,
//! always labelled relative to particle 1. The sector `H_h` is spanned by
//! `|g, h_1 g, …, h_{N−1} g⟩` for `g ∈ G` and carries the basis
//!
//! ```text
//! |h;χ⟩ = |G|^{-1/2} Σ_g χ(g^{-1}) |g, hg⟩,
//! ```
//!
//! which diagonalizes global translations: `U_g^{⊗N}|h;χ⟩ = χ(g)|h;χ⟩`.
//! The physical subspace is spanned by the `|h;𝟏⟩`.
//!
//! Relation tuples are indexed in mixed radix with `h_1` most significant;
//! sector basis vectors `(h, χ)` get index `rel_idx·|G| + char_idx`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::group::{Character, GroupElement, GroupSpec};
use crate::hilbert::{Density, Operator, SpaceLabel, StateVector, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationTuple {
    relations: Vec<GroupElement>,
}

impl RelationTuple {
    pub fn new(relations: Vec<GroupElement>) -> Self {
        RelationTuple { relations }
    }

    pub fn relations(&self) -> &[GroupElement] {
        &self.relations
    }

    /// `h_k` with the convention `h_0 = e`.
    pub fn get(&self, k: usize, group: &GroupSpec) -> GroupElement {
        if k == 0 {
            group.identity()
        } else {
            self.relations[k - 1].clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorBasisLabel {
    pub relation: RelationTuple,
    pub character: Character,
}

/// Index bookkeeping for the sector decomposition of one space.
#[derive(Debug)]
pub struct SectorLayout {
    space: SpaceLabel,
    order: usize,
    relation_of: Vec<usize>,
    /// `members[h][g]` is the basis index of `|g, hg⟩`.
    members: Vec<Vec<usize>>,
    /// `chars[k * |G| + g] = χ_k(g)`.
    chars: Vec<C64>,
}

static LAYOUTS: OnceLock<RwLock<HashMap<SpaceLabel, Arc<SectorLayout>>>> = OnceLock::new();

impl SectorLayout {
    /// Shared layout for `space`, built once and cached.
    pub fn for_space(space: &SpaceLabel) -> Arc<SectorLayout> {
        let cache = LAYOUTS.get_or_init(Default::default);
        if let Some(l) = cache.read().expect("layout cache poisoned").get(space) {
            return Arc::clone(l);
        }
        let built = Arc::new(SectorLayout::build(space.clone()));
        let mut w = cache.write().expect("layout cache poisoned");
        Arc::clone(w.entry(space.clone()).or_insert(built))
    }

    fn build(space: SpaceLabel) -> Self {
        let group = space.group().clone();
        let order = group.order();
        let n_rel = space.dim() / order;
        let mut relation_of = vec![0; space.dim()];
        let mut members = vec![vec![0; order]; n_rel];
        for (x, slot) in relation_of.iter_mut().enumerate() {
            let digits = space.digits(x);
            let g1 = digits[0];
            let inv = group.inverse_idx(g1);
            let r = digits[1..].iter().fold(0, |acc, &d| acc * order + group.compose_idx(d, inv));
            *slot = r;
            members[r][g1] = x;
        }
        let chars = group.character_table();
        SectorLayout { space, order, relation_of, members, chars }
    }

    pub fn space(&self) -> &SpaceLabel {
        &self.space
    }

    /// `|G|`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `|G|^{N−1}`.
    pub fn relation_count(&self) -> usize {
        self.members.len()
    }

    pub fn relation_index(&self, basis_index: usize) -> usize {
        self.relation_of[basis_index]
    }

    /// Basis indices of `|g, hg⟩`, ordered by the index of `g`.
    pub fn members(&self, relation: usize) -> &[usize] {
        &self.members[relation]
    }

    /// `χ_k(g)` by indices.
    pub fn chi(&self, k: usize, g: usize) -> C64 {
        self.chars[k * self.order + g]
    }

    pub fn relation_tuple(&self, relation: usize) -> RelationTuple {
        let group = self.space.group();
        let n = self.order;
        let p = self.space.particles() - 1;
        let mut rels = vec![group.identity(); p];
        let mut rest = relation;
        for slot in rels.iter_mut().rev() {
            *slot = group.element_at(rest % n);
            rest /= n;
        }
        RelationTuple { relations: rels }
    }

    pub fn relation_index_of(&self, h: &RelationTuple) -> Result<usize> {
        if h.relations.len() + 1 != self.space.particles() {
            return Err(Error::structural(format!(
                "relation tuple has {} entries, expected {}",
                h.relations.len(),
                self.space.particles() - 1
            )));
        }
        let group = self.space.group();
        h.relations.iter().try_fold(0, |acc, g| Ok(acc * self.order + group.index_of(g)?))
    }

    /// Amplitudes of `|h;χ⟩` inside its sector, ordered like [`Self::members`].
    fn sector_amplitudes(&self, k: usize) -> impl Iterator<Item = C64> + '_ {
        let s = 1.0 / (self.order as f64).sqrt();
        (0..self.order).map(move |g| self.chi(k, g).conj() * s)
    }
}

/// Relation tuple of a configuration: `h_k = g_{k+1} ∘ g_1^{-1}`.
pub fn relation_of(group: &GroupSpec, config: &[GroupElement]) -> Result<RelationTuple> {
    let first = config.first().ok_or_else(|| Error::structural("empty configuration"))?;
    let inv = group.inverse(first)?;
    let relations = config[1..].iter().map(|g| group.compose(g, &inv)).collect::<Result<_>>()?;
    Ok(RelationTuple { relations })
}

/// `|h;χ⟩`.
pub fn sector_state(space: &SpaceLabel, h: &RelationTuple, chi: &Character) -> Result<StateVector> {
    let layout = SectorLayout::for_space(space);
    let r = layout.relation_index_of(h)?;
    let k = space.group().character_index(chi)?;
    Ok(sector_state_idx(&layout, r, k))
}

pub(crate) fn sector_state_idx(layout: &SectorLayout, relation: usize, k: usize) -> StateVector {
    let mut psi = StateVector::zeros(layout.space.clone());
    let amps = psi.amplitudes_mut();
    for (&x, a) in layout.members(relation).iter().zip(layout.sector_amplitudes(k)) {
        amps[x] = a;
    }
    psi
}

/// `Π_h`, the projector onto `span{|g,hg⟩}`.
pub fn sector_projector(space: &SpaceLabel, h: &RelationTuple) -> Result<Operator> {
    let layout = SectorLayout::for_space(space);
    let r = layout.relation_index_of(h)?;
    let mut p = Operator::zeros(space.clone());
    for &x in layout.members(r) {
        p.set(x, x, C64::new(1.0, 0.0));
    }
    Ok(p)
}

/// `Π_phys`, entry `1/|G|` between configurations with equal relations.
pub fn physical_projector(space: &SpaceLabel) -> Operator {
    let layout = SectorLayout::for_space(space);
    let v = C64::new(1.0 / layout.order() as f64, 0.0);
    Operator::from_fn(space.clone(), Execution::default(), |x, y| {
        if layout.relation_index(x) == layout.relation_index(y) {
            v
        } else {
            ZERO
        }
    })
}

/// `Π_phys` as the coherent group average `|G|^{-1} Σ_g U_g^{⊗N}`.
pub fn physical_projector_by_average(space: &SpaceLabel) -> Operator {
    let n = space.group().order();
    let w = C64::new(1.0 / n as f64, 0.0);
    let mut p = Operator::zeros(space.clone());
    for g in 0..n {
        let perm = global_translation_perm(space, g);
        for (x, &px) in perm.iter().enumerate() {
            let v = p.get(px, x);
            p.set(px, x, v + w);
        }
    }
    p
}

/// `Π_phys` as `Σ_h |h;𝟏⟩⟨h;𝟏|`.
pub fn physical_projector_by_sectors(space: &SpaceLabel) -> Operator {
    let layout = SectorLayout::for_space(space);
    let mut p = Operator::zeros(space.clone());
    for r in 0..layout.relation_count() {
        let v = sector_state_idx(&layout, r, 0);
        let amps = v.amplitudes();
        for &x in layout.members(r) {
            for &y in layout.members(r) {
                let e = p.get(x, y);
                p.set(x, y, e + amps[x] * amps[y].conj());
            }
        }
    }
    p
}

/// Basis permutation of `U_g^{⊗N}` for the element with index `g`.
pub fn global_translation_perm(space: &SpaceLabel, g: usize) -> Vec<usize> {
    let group = space.group();
    (0..space.dim())
        .map(|x| {
            let d: Vec<usize> = space.digits(x).into_iter().map(|v| group.compose_idx(v, g)).collect();
            space.index_from_digits(&d)
        })
        .collect()
}

/// Unitary whose column `rel·|G| + χ` is `|h;χ⟩`.
///
/// Its adjoint maps computational coordinates to sector coordinates.
pub fn change_of_basis(space: &SpaceLabel) -> Operator {
    let layout = SectorLayout::for_space(space);
    let n = layout.order();
    let mut s = Operator::zeros(space.clone());
    for r in 0..layout.relation_count() {
        for k in 0..n {
            for (&x, a) in layout.members(r).iter().zip(layout.sector_amplitudes(k)) {
                s.set(x, r * n + k, a);
            }
        }
    }
    s
}

/// Labels `(h, χ)` of the columns of [`change_of_basis`], in order.
pub fn sector_basis_labels(space: &SpaceLabel) -> Vec<SectorBasisLabel> {
    let layout = SectorLayout::for_space(space);
    let group = space.group();
    (0..layout.relation_count())
        .flat_map(|r| {
            let relation = layout.relation_tuple(r);
            (0..layout.order())
                .map(move |k| SectorBasisLabel { relation: relation.clone(), character: group.character_at(k) })
        })
        .collect()
}

/// `S† ρ S`: matrix elements `⟨h;χ|ρ|j;χ′⟩` at `(h·|G|+χ, j·|G|+χ′)`.
///
/// Runs as a per-sector character transform on both sides.
pub fn to_sector_basis(rho: &Operator, exec: Execution) -> Operator {
    sector_transform(rho, exec, false)
}

/// Inverse of [`to_sector_basis`].
pub fn from_sector_basis(rho: &Operator, exec: Execution) -> Operator {
    sector_transform(rho, exec, true)
}

fn sector_transform(rho: &Operator, exec: Execution, inverse: bool) -> Operator {
    let space = rho.space().clone();
    let layout = SectorLayout::for_space(&space);
    let n = layout.order();
    let d = space.dim();
    let s = 1.0 / (n as f64).sqrt();
    // Forward: T[(h,χ), x] = Σ_g χ(g) x-entry at member (h,g) / √n.
    // Inverse: T[member(h,g), x] = Σ_χ conj(χ(g)) x-entry at (h,χ) / √n.
    let coeff = |k: usize, g: usize| {
        if inverse {
            layout.chi(k, g).conj() * s
        } else {
            layout.chi(k, g) * s
        }
    };
    let src = rho.data();
    // Row transform.
    let mut half = vec![ZERO; d * d];
    exec::for_each_row(&mut half, d, exec, |row, out| {
        // Inverse rows are computational indices; particle 1 carries `g`.
        let (r, a) = if inverse { (layout.relation_index(row), row / (d / n)) } else { (row / n, row % n) };
        for b in 0..n {
            let (w, x) = if inverse { (coeff(b, a), r * n + b) } else { (coeff(a, b), layout.members(r)[b]) };
            let srow = &src[x * d..(x + 1) * d];
            for (o, v) in out.iter_mut().zip(srow) {
                *o += w * v;
            }
        }
    });
    // Column transform with conjugated coefficients.
    let mut out = vec![ZERO; d * d];
    exec::for_each_row(&mut out, d, exec, |row, o| {
        let hrow = &half[row * d..(row + 1) * d];
        for rc in 0..layout.relation_count() {
            for a in 0..n {
                let mut acc = ZERO;
                for b in 0..n {
                    let (w, y) = if inverse { (coeff(b, a), rc * n + b) } else { (coeff(a, b), layout.members(rc)[b]) };
                    acc += w.conj() * hrow[y];
                }
                let col = if inverse { layout.members(rc)[a] } else { rc * n + a };
                o[col] = acc;
            }
        }
    });
    let mut op = Operator::zeros(space);
    op.data_mut().copy_from_slice(&out);
    op
}

/// `B[h,j] = Σ_{x∈H_h, y∈H_j} ⟨x|ρ|y⟩`, row-major over relation indices.
///
/// Every relational projection below is a function of these block sums.
pub fn relation_block_sums<D: Density + ?Sized>(rho: &D, exec: Execution) -> Vec<C64> {
    let layout = SectorLayout::for_space(rho.space());
    let nr = layout.relation_count();
    let rows = exec::map_range(nr, exec, |h| {
        (0..nr).map(|j| rho.block_sum(layout.members(h), layout.members(j))).collect::<Vec<_>>()
    });
    rows.concat()
}

/// `Π_phys ρ Π_phys` without forming `Π_phys`.
pub fn project_phys<D: Density + ?Sized>(rho: &D, exec: Execution) -> Operator {
    let space = rho.space().clone();
    let layout = SectorLayout::for_space(&space);
    let b = relation_block_sums(rho, exec);
    let n = layout.order() as f64;
    let nr = layout.relation_count();
    Operator::from_fn(space, exec, |x, y| b[layout.relation_index(x) * nr + layout.relation_index(y)] / (n * n))
}

/// `⟨h;χ|ρ|h;χ⟩` for every sector basis vector, in sector order.
pub fn sector_diagonal<D: Density + ?Sized>(rho: &D, exec: Execution) -> Vec<C64> {
    let layout = SectorLayout::for_space(rho.space());
    let n = layout.order();
    let per = exec::map_range(layout.relation_count(), exec, |r| {
        let m = layout.members(r);
        // w[k][g'] = Σ_g χ_k(g) ρ[m_g, m_g']
        (0..n)
            .map(|k| {
                let mut acc = ZERO;
                for (gp, &y) in m.iter().enumerate() {
                    let mut w = ZERO;
                    for (g, &x) in m.iter().enumerate() {
                        w += layout.chi(k, g) * rho.entry(x, y);
                    }
                    acc += w * layout.chi(k, gp).conj();
                }
                acc / n as f64
            })
            .collect::<Vec<_>>()
    });
    per.concat()
}

/// `tr(Π_h ρ)` for every relation index.
pub fn sector_traces<D: Density + ?Sized>(rho: &D) -> Vec<C64> {
    let layout = SectorLayout::for_space(rho.space());
    (0..layout.relation_count()).map(|r| layout.members(r).iter().map(|&x| rho.entry(x, x)).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Rng;

    fn space(g: &str, n: usize) -> SpaceLabel {
        SpaceLabel::new(g.parse().unwrap(), n).unwrap()
    }

    #[test]
    fn relation_examples() {
        let g = GroupSpec::cyclic(6).unwrap();
        let c: Vec<_> = [2, 3, 4].iter().map(|&v| g.element(&[v]).unwrap()).collect();
        let h = relation_of(&g, &c).unwrap();
        let want: Vec<_> = [1, 2].iter().map(|&v| g.element(&[v]).unwrap()).collect();
        assert_eq!(h.relations(), &want[..]);

        let shift = g.element(&[5]).unwrap();
        let moved: Vec<_> = c.iter().map(|x| g.compose(x, &shift).unwrap()).collect();
        assert_eq!(relation_of(&g, &moved).unwrap(), h);

        let g16 = GroupSpec::cyclic(16).unwrap();
        let c = [g16.element(&[-3]).unwrap(), g16.element(&[2]).unwrap()];
        assert_eq!(relation_of(&g16, &c).unwrap().relations(), &[g16.element(&[5]).unwrap()]);
    }

    #[test]
    fn layout_agrees_with_relation_of() {
        let s = space("Z2xZ3", 3);
        let l = SectorLayout::for_space(&s);
        for x in 0..s.dim() {
            let h = relation_of(s.group(), &s.config_of(x)).unwrap();
            assert_eq!(l.relation_index_of(&h).unwrap(), l.relation_index(x));
            assert_eq!(l.relation_tuple(l.relation_index(x)), h);
        }
    }

    #[test]
    fn basis_labels_name_the_columns() {
        let s = space("Z2xZ2", 2);
        let cob = change_of_basis(&s);
        let labels = sector_basis_labels(&s);
        assert_eq!(labels.len(), s.dim());
        for (col, label) in labels.iter().enumerate() {
            let v = sector_state(&s, &label.relation, &label.character).unwrap();
            for row in 0..s.dim() {
                assert!((cob.get(row, col) - v.amplitudes()[row]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn z2_sector_state_by_hand() {
        let s = space("Z2", 2);
        let g = s.group().clone();
        let h = RelationTuple::new(vec![g.identity()]);
        let v = sector_state(&s, &h, &g.character(&[0]).unwrap()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let want = StateVector::new(s, vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)]).unwrap();
        assert!(v.approx_eq(&want, 1e-15));
    }

    #[test]
    fn sector_basis_is_orthonormal_eigenbasis() {
        let s = space("Z2xZ2", 2);
        let l = SectorLayout::for_space(&s);
        let n = l.order();
        let states: Vec<_> = (0..s.dim()).map(|i| sector_state_idx(&l, i / n, i % n)).collect();
        for (i, a) in states.iter().enumerate() {
            assert!((a.norm() - 1.0).abs() < 1e-12);
            for (j, b) in states.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.inner(b).unwrap() - want).norm() < 1e-12);
            }
            for g in 0..n {
                let perm = global_translation_perm(&s, g);
                let u = Operator::permutation(s.clone(), &perm, C64::new(1.0, 0.0)).unwrap();
                let moved = u.apply(a).unwrap();
                assert!(moved.approx_eq(&a.scale(l.chi(i % n, g)), 1e-12));
            }
        }
    }

    #[test]
    fn sector_projectors() {
        let s = space("Z3", 3);
        let l = SectorLayout::for_space(&s);
        let mut total = Operator::zeros(s.clone());
        let ps: Vec<_> = (0..l.relation_count()).map(|r| sector_projector(&s, &l.relation_tuple(r)).unwrap()).collect();
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.trace(), C64::new(3.0, 0.0));
            total.add_scaled(C64::new(1.0, 0.0), p).unwrap();
            let j = (i + 1) % ps.len();
            assert!(p.matmul(&ps[j]).unwrap().max_abs() == 0.0);
        }
        assert_eq!(total, Operator::identity(s));
    }

    #[test]
    fn physical_projector_routes_agree() {
        for (g, n) in [("Z6", 2), ("Z8", 3), ("Z2xZ3", 2)] {
            let s = space(g, n);
            let a = physical_projector_by_average(&s);
            let b = physical_projector_by_sectors(&s);
            let c = physical_projector(&s);
            assert!(a.approx_eq(&b, 1e-12), "{g}");
            assert!(a.approx_eq(&c, 1e-12), "{g}");
            let want = (s.group().order() as f64).powi(n as i32 - 1);
            assert!((a.trace().re - want).abs() < 1e-9);
        }
        assert!((physical_projector(&space("Z8", 3)).trace().re - 64.0).abs() < 1e-9);
    }

    #[test]
    fn physical_projector_actions() {
        let s = space("Z4", 2);
        let l = SectorLayout::for_space(&s);
        let p = physical_projector(&s);
        assert!(p.is_projector(1e-12));
        for r in 0..l.relation_count() {
            let h1 = sector_state_idx(&l, r, 0);
            assert!(p.apply(&h1).unwrap().approx_eq(&h1, 1e-12));
            let x = StateVector::basis(s.clone(), l.members(r)[2]).unwrap();
            assert!(p.apply(&x).unwrap().approx_eq(&h1.scale(C64::new(0.5, 0.0)), 1e-12));
        }
    }

    #[test]
    fn physical_projector_factorization() {
        let (g, n, m) = ("Z3", 2, 1);
        let sn = space(g, n);
        let sm = space(g, m);
        let snm = space(g, n + m);
        let pn = physical_projector(&sn);
        let lhs = pn.tensor(&Operator::identity(sm.clone())).unwrap().matmul(&physical_projector(&snm)).unwrap();
        let rhs = pn.tensor(&physical_projector(&sm)).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn sector_transform_matches_dense_change_of_basis() {
        let s = space("Z2xZ2", 2);
        let rho = Rng::seeded(1).operator(s.clone());
        let cob = change_of_basis(&s);
        let dense = cob.adjoint().matmul(&rho).unwrap().matmul(&cob).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let fast = to_sector_basis(&rho, exec);
            assert!(fast.approx_eq(&dense, 1e-12));
            assert!(from_sector_basis(&fast, exec).approx_eq(&rho, 1e-12));
        }
        let unitary = cob.adjoint().matmul(&cob).unwrap();
        assert!(unitary.approx_eq(&Operator::identity(s), 1e-12));
    }

    #[test]
    fn project_phys_matches_dense_sandwich() {
        let s = space("Z3", 2);
        let mut rng = Rng::seeded(2);
        let rho = rng.operator(s.clone());
        let p = physical_projector(&s);
        let dense = p.matmul(&rho).unwrap().matmul(&p).unwrap();
        assert!(project_phys(&rho, Execution::Parallel).approx_eq(&dense, 1e-12));
        let psi = rng.state(s.clone());
        let dense = p.matmul(&psi.projector()).unwrap().matmul(&p).unwrap();
        assert!(project_phys(&psi, Execution::Sequential).approx_eq(&dense, 1e-12));
    }

    #[test]
    fn sector_diagonal_matches_transform() {
        let s = space("Z4", 2);
        let rho = Rng::seeded(3).operator(s.clone());
        let t = to_sector_basis(&rho, Execution::Sequential);
        let diag = sector_diagonal(&rho, Execution::Parallel);
        for (i, v) in diag.iter().enumerate() {
            assert!((t.get(i, i) - v).norm() < 1e-12);
        }
    }
}
