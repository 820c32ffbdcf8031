//! The invariant operator algebras `A_phys ⊂ A_alg ⊂ A_inv ⊂ A′_inv` and
//! their Hilbert–Schmidt orthogonal projections.
//!
//! In the sector basis the projections are easy to state:
//!
//! * `Π′_inv` keeps the blocks `⟨h;χ|ρ|j;χ⟩` (equal characters),
//! * `Π_inv` keeps the `χ = 𝟏` block plus the diagonal entries `⟨h;χ|ρ|h;χ⟩`,
//! * `Π_alg` keeps the `χ = 𝟏` block and replaces the `χ ≠ 𝟏` diagonal of
//!   each sector by its mean,
//! * `Π̂_phys` keeps only the `χ = 𝟏` block.
//!
//! The `Π_alg` coefficient comes from projecting onto `Π_{h;χ≠𝟏}`, whose
//! squared Hilbert–Schmidt norm is `|G| − 1`:
//! `a_h = tr(Π_{h;χ≠𝟏} ρ) / (|G| − 1)` with
//! `tr(Π_{h;χ≠𝟏} ρ) = tr(Π_h ρ) − ⟨h;𝟏|ρ|h;𝟏⟩`.
//!
//! The kernels below work directly on computational-basis entries and never
//! materialize the sector basis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alignment::{decompose_alignable, Alignability};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{Density, Operator, SpaceLabel, StateVector, C64, ZERO};
use crate::sectors::{project_phys, relation_block_sums, sector_diagonal, sector_traces, SectorLayout};
use crate::symmetry::{enumerate_usym, SymmetryElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgebraTag {
    Phys,
    Alg,
    Inv,
    InvPrime,
}

impl AlgebraTag {
    pub const ALL: [AlgebraTag; 4] = [AlgebraTag::Phys, AlgebraTag::Alg, AlgebraTag::Inv, AlgebraTag::InvPrime];
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgebraTag::Phys => "PHYS",
            AlgebraTag::Alg => "ALG",
            AlgebraTag::Inv => "INV",
            AlgebraTag::InvPrime => "INV_PRIME",
        })
    }
}

/// `Π_inv(ρ) = Π_phys ρ Π_phys + Σ_{h, χ≠𝟏} ⟨h;χ|ρ|h;χ⟩ |h;χ⟩⟨h;χ|`.
pub fn project_inv<D: Density + ?Sized>(rho: &D, exec: Execution) -> Operator {
    let space = rho.space().clone();
    let layout = SectorLayout::for_space(&space);
    let n = layout.order();
    let diag = sector_diagonal(rho, exec);
    let mut out = project_phys(rho, exec);
    let d = space.dim();
    // Within sector r, |h;χ⟩⟨h;χ| has entry conj(χ(a)) χ(b) / n at (m_a, m_b).
    for r in 0..layout.relation_count() {
        let m = layout.members(r);
        let coeff = &diag[r * n..(r + 1) * n];
        for (a, &x) in m.iter().enumerate() {
            for (b, &y) in m.iter().enumerate() {
                let mut acc = ZERO;
                for (k, c) in coeff.iter().enumerate().skip(1) {
                    acc += c * layout.chi(k, a).conj() * layout.chi(k, b);
                }
                out.data_mut()[x * d + y] += acc / n as f64;
            }
        }
    }
    out
}

/// `Π′_inv(ρ) = |G|^{-1} Σ_g U_g^{⊗N} ρ U_g^{⊗N†}`.
pub fn project_inv_prime(rho: &Operator, exec: Execution) -> Operator {
    let space = rho.space().clone();
    let layout = SectorLayout::for_space(&space);
    let n = layout.order();
    let group = space.group();
    let d = space.dim();
    // Translation acts on the particle-1 digit inside each sector, so
    // x = m_r(a) ↦ m_r(a + g).
    let block = d / n;
    let shift: Vec<Vec<usize>> = (0..n)
        .map(|g| {
            (0..d)
                .map(|x| {
                    let r = layout.relation_index(x);
                    layout.members(r)[group.compose_idx(x / block, g)]
                })
                .collect()
        })
        .collect();
    let w = 1.0 / n as f64;
    Operator::from_fn(space, exec, |x, y| {
        let mut acc = ZERO;
        for s in &shift {
            acc += rho.get(s[x], s[y]);
        }
        acc * w
    })
}

/// `Π_alg(ρ) = Π_phys ρ Π_phys + Σ_h a_h Π_{h;χ≠𝟏}`.
pub fn project_alg<D: Density + ?Sized>(rho: &D, exec: Execution) -> Operator {
    let coeffs = alg_coefficients(rho, exec);
    alg_from_coefficients(rho.space(), &coeffs, exec)
}

/// Coordinates of `Π_alg(ρ)`: the `χ = 𝟏` block `c[h][j] = ⟨h;𝟏|ρ|j;𝟏⟩` and
/// the per-sector weights `a_h`.
#[derive(Clone, Debug)]
pub struct AlgCoefficients {
    pub relations: usize,
    pub phys: Vec<C64>,
    pub weights: Vec<C64>,
}

pub fn alg_coefficients<D: Density + ?Sized>(rho: &D, exec: Execution) -> AlgCoefficients {
    let layout = SectorLayout::for_space(rho.space());
    let n = layout.order() as f64;
    let nr = layout.relation_count();
    let phys: Vec<C64> = relation_block_sums(rho, exec).into_iter().map(|b| b / n).collect();
    let weights = sector_traces(rho).into_iter().enumerate().map(|(h, t)| (t - phys[h * nr + h]) / (n - 1.0)).collect();
    AlgCoefficients { relations: nr, phys, weights }
}

/// Rebuilds `Σ c[h][j] |h;𝟏⟩⟨j;𝟏| + Σ a_h Π_{h;χ≠𝟏}` in the computational basis.
pub fn alg_from_coefficients(space: &SpaceLabel, coeffs: &AlgCoefficients, exec: Execution) -> Operator {
    let layout = SectorLayout::for_space(space);
    let n = layout.order() as f64;
    let nr = coeffs.relations;
    Operator::from_fn(space.clone(), exec, |x, y| {
        let (rx, ry) = (layout.relation_index(x), layout.relation_index(y));
        let mut v = coeffs.phys[rx * nr + ry] / n;
        if rx == ry {
            let a = coeffs.weights[rx];
            v += if x == y { a * (1.0 - 1.0 / n) } else { -a / n };
        }
        v
    })
}

/// Applies the projection for `tag`.
pub fn project(tag: AlgebraTag, rho: &Operator, exec: Execution) -> Operator {
    match tag {
        AlgebraTag::Phys => project_phys(rho, exec),
        AlgebraTag::Alg => project_alg(rho, exec),
        AlgebraTag::Inv => project_inv(rho, exec),
        AlgebraTag::InvPrime => project_inv_prime(rho, exec),
    }
}

pub fn is_member(op: &Operator, tag: AlgebraTag, eps: f64) -> bool {
    project(tag, op, Execution::default()).approx_eq(op, eps)
}

/// Finest algebra containing `op`, if any.
pub fn classify(op: &Operator, eps: f64) -> Option<AlgebraTag> {
    AlgebraTag::ALL.into_iter().find(|&t| is_member(op, t, eps))
}

/// `|G|^{-1}|U_sym|`-free oracle: the literal average `|U_sym|^{-1} Σ_U U ρ U†`.
///
/// Only usable while `|G|^{|G|^{N−1}} ≤ cap`.
pub fn twirl_oracle(rho: &Operator, cap: usize) -> Result<Operator> {
    let elements = enumerate_usym(rho.space(), cap)?;
    let mut acc = Operator::zeros(rho.space().clone());
    for u in &elements {
        acc.add_scaled(C64::new(1.0, 0.0), &u.conjugate(rho)?)?;
    }
    Ok(acc.scale(C64::new(1.0 / elements.len() as f64, 0.0)))
}

/// Symmetries whose commutant is the algebra fixed by `tag`'s projection.
///
/// `InvPrime`: global translations by the generators of each cyclic factor.
/// `Inv`: additionally, single-sector translations by those generators.
pub fn invariance_generators(space: &SpaceLabel, tag: AlgebraTag) -> Result<Vec<SymmetryElement>> {
    let group = space.group();
    let gens: Vec<usize> = (0..group.moduli().len())
        .map(|f| {
            let mut r = vec![0i64; group.moduli().len()];
            r[f] = 1;
            group.index_of(&group.element(&r).expect("valid residues")).expect("same group")
        })
        .collect();
    let mut out = Vec::new();
    for &g in &gens {
        out.push(SymmetryElement::global_translation(space.clone(), &group.element_at(g))?);
    }
    match tag {
        AlgebraTag::InvPrime => Ok(out),
        AlgebraTag::Inv => {
            let nr = SectorLayout::for_space(space).relation_count();
            for r in 0..nr {
                for &g in &gens {
                    out.push(SymmetryElement::sector_translation(space.clone(), r, g)?);
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!("no symmetry generating set characterizes {tag}"))),
    }
}

/// `U A U† = A` for every generator.
pub fn commutes_with_all(op: &Operator, generators: &[SymmetryElement], eps: f64) -> Result<bool> {
    for u in generators {
        if !u.conjugate(op)?.approx_eq(op, eps) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `F_{A,i} = |G| Π̂_phys(|e⟩⟨e|_i ⊗ A)` for `A` on the `N−1` particles
/// other than `i`.
///
/// Each sector contains exactly one configuration with particle `i` at the
/// origin, so the result has entry `A[φ_h, φ_j] / |G|` between members of
/// sectors `h` and `j`, where `φ_h` is that configuration with particle `i`
/// removed.
pub fn relational_observable(a: &Operator, i: usize) -> Result<Operator> {
    let reduced = a.space();
    let space = reduced.with_particles(reduced.particles() + 1)?;
    let np = space.particles();
    if i == 0 || i > np {
        return Err(Error::structural(format!("particle {i} out of range 1..={np}")));
    }
    let layout = SectorLayout::for_space(&space);
    let phi: Vec<usize> = (0..layout.relation_count())
        .map(|r| {
            let x = *layout
                .members(r)
                .iter()
                .find(|&&x| space.digits(x)[i - 1] == 0)
                .expect("each sector has one member with particle i at the origin");
            let mut d = space.digits(x);
            d.remove(i - 1);
            reduced.index_from_digits(&d)
        })
        .collect();
    let n = layout.order() as f64;
    Ok(Operator::from_fn(space, Execution::default(), |x, y| {
        a.get(phi[layout.relation_index(x)], phi[layout.relation_index(y)]) / n
    }))
}

/// `Π_inv(ρ) = Π_inv(σ)` within `eps`.
pub fn observationally_equivalent(rho: &Operator, sigma: &Operator, eps: f64) -> Result<bool> {
    rho.space().ensure_same(sigma.space())?;
    let exec = Execution::default();
    Ok(project_inv(rho, exec).approx_eq(&project_inv(sigma, exec), eps))
}

/// Alignable states are symmetry-equivalent iff their sector amplitudes
/// agree up to one common phase.
pub fn symmetry_equivalent_alignable(psi: &StateVector, phi: &StateVector, eps: f64) -> Result<bool> {
    psi.space().ensure_same(phi.space())?;
    let (a, b) = match (decompose_alignable(psi), decompose_alignable(phi)) {
        (Alignability::Alignable(a), Alignability::Alignable(b)) => (a, b),
        _ => return Err(Error::NotAlignable),
    };
    let nr = SectorLayout::for_space(psi.space()).relation_count();
    let (va, vb) = (a.amplitude_vector(nr), b.amplitude_vector(nr));
    // fix the relative phase on the largest amplitude
    let (k, _) =
        va.iter().enumerate().fold((0, 0.0), |best, (k, v)| if v.norm() > best.1 { (k, v.norm()) } else { best });
    if va[k].norm() < eps {
        return Ok(vb.iter().all(|v| v.norm() < eps));
    }
    if (vb[k].norm() - va[k].norm()).abs() >= eps {
        return Ok(false);
    }
    let rot = vb[k] / va[k];
    let rot = rot / rot.norm();
    Ok(va.iter().zip(&vb).all(|(x, y)| (x * rot - y).norm() < eps))
}

/// `Π_{h;χ≠𝟏} = Π_h − |h;𝟏⟩⟨h;𝟏|` for the relation index `relation`.
pub fn nontrivial_character_projector(space: &SpaceLabel, relation: usize) -> Result<Operator> {
    let layout = SectorLayout::for_space(space);
    if relation >= layout.relation_count() {
        return Err(Error::structural("relation index out of range"));
    }
    let n = layout.order() as f64;
    let mut p = Operator::zeros(space.clone());
    for &x in layout.members(relation) {
        for &y in layout.members(relation) {
            let v = if x == y { 1.0 - 1.0 / n } else { -1.0 / n };
            p.set(x, y, C64::new(v, 0.0));
        }
    }
    Ok(p)
}

/// An element of `A_inv` outside `A_alg`: `|h;χ⟩⟨h;χ|` for `χ ≠ 𝟏`.
/// Needs `|G| ≥ 3`; for `|G| = 2` the two algebras coincide.
pub fn witness_inv_not_alg(space: &SpaceLabel) -> Result<Operator> {
    if space.group().order() < 3 {
        return Err(Error::domain("A_alg = A_inv when |G| = 2"));
    }
    let layout = SectorLayout::for_space(space);
    Ok(crate::sectors::sector_state_idx(&layout, 0, 1).projector())
}

/// An element of `A′_inv` outside `A_inv`: `|h;χ⟩⟨j;χ|` for `h ≠ j`, `χ ≠ 𝟏`.
pub fn witness_inv_prime_not_inv(space: &SpaceLabel) -> Result<Operator> {
    let layout = SectorLayout::for_space(space);
    if layout.relation_count() < 2 {
        return Err(Error::domain("a single sector leaves no off-diagonal sector pair"));
    }
    let a = crate::sectors::sector_state_idx(&layout, 0, 1);
    let b = crate::sectors::sector_state_idx(&layout, 1, 1);
    a.outer(&b)
}

/// An element of `A_alg` outside `A_phys`: `Π_{h;χ≠𝟏}`.
pub fn witness_alg_not_phys(space: &SpaceLabel) -> Result<Operator> {
    nontrivial_character_projector(space, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::Rng;
    use crate::sectors::{from_sector_basis, physical_projector, to_sector_basis};

    fn space(g: &str, n: usize) -> SpaceLabel {
        SpaceLabel::new(g.parse().unwrap(), n).unwrap()
    }

    /// Applies `keep(h, χ, j, χ′)` as a mask in the sector basis.
    fn sector_mask(rho: &Operator, keep: impl Fn(usize, usize, usize, usize) -> bool) -> Operator {
        let n = rho.space().group().order();
        let t = to_sector_basis(rho, Execution::Sequential);
        let d = t.dim();
        let mut m = Operator::zeros(t.space().clone());
        for p in 0..d {
            for q in 0..d {
                if keep(p / n, p % n, q / n, q % n) {
                    m.set(p, q, t.get(p, q));
                }
            }
        }
        from_sector_basis(&m, Execution::Sequential)
    }

    #[test]
    fn closed_forms_match_sector_masks() {
        for (g, n) in [("Z3", 2), ("Z2xZ2", 2), ("Z2", 3)] {
            let s = space(g, n);
            let rho = Rng::seeded(11).operator(s);
            let inv = sector_mask(&rho, |h, c, j, c2| (c == 0 && c2 == 0) || (h == j && c == c2));
            let prime = sector_mask(&rho, |_, c, _, c2| c == c2);
            let phys = sector_mask(&rho, |_, c, _, c2| c == 0 && c2 == 0);
            assert!(project_inv(&rho, Execution::Parallel).approx_eq(&inv, 1e-12), "{g}");
            assert!(project_inv_prime(&rho, Execution::Parallel).approx_eq(&prime, 1e-12), "{g}");
            assert!(project_phys(&rho, Execution::Parallel).approx_eq(&phys, 1e-12), "{g}");
        }
    }

    #[test]
    fn closed_form_matches_literal_twirl() {
        for (g, n) in [("Z2", 2), ("Z2", 3), ("Z3", 2)] {
            let s = space(g, n);
            let mut rng = Rng::seeded(12);
            for _ in 0..5 {
                let rho = rng.operator(s.clone());
                let lit = twirl_oracle(&rho, 10_000).unwrap();
                assert!(project_inv(&rho, Execution::Sequential).approx_eq(&lit, 1e-11), "{g} {n}");
            }
        }
        assert!(twirl_oracle(&Operator::zeros(space("Z4", 2)), 10_000).is_ok());
        assert!(twirl_oracle(&Operator::zeros(space("Z3", 3)), 10_000).is_err());
    }

    #[test]
    fn projection_examples() {
        let s = space("Z3", 2);
        let exec = Execution::default();
        let id = Operator::identity(s.clone());
        assert!(project_inv(&id, exec).approx_eq(&id, 1e-12));
        let layout = SectorLayout::for_space(&s);
        let h = crate::sectors::sector_state_idx(&layout, 0, 0);
        let j = crate::sectors::sector_state_idx(&layout, 2, 0);
        let hj = h.outer(&j).unwrap();
        assert!(project_inv(&hj, exec).approx_eq(&hj, 1e-12));
        assert!(project_alg(&hj, exec).approx_eq(&hj, 1e-12));
        let p = physical_projector(&s);
        assert!(project_inv_prime(&p, exec).approx_eq(&p, 1e-12));
        let rho = Rng::seeded(13).density(s, 3);
        assert!((project_inv_prime(&rho, exec).trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn alg_uniformizes_nontrivial_diagonal() {
        let s = space("Z3", 2);
        let layout = SectorLayout::for_space(&s);
        let a = crate::sectors::sector_state_idx(&layout, 1, 1).projector();
        let b = crate::sectors::sector_state_idx(&layout, 1, 2).projector().scale(C64::new(3.0, 0.0));
        let x = a.add(&b).unwrap();
        assert!(is_member(&x, AlgebraTag::Inv, 1e-10));
        let want = nontrivial_character_projector(&s, 1).unwrap().scale(C64::new(2.0, 0.0));
        assert!(project_alg(&x, Execution::default()).approx_eq(&want, 1e-12));
    }

    #[test]
    fn idempotent_self_adjoint_and_composed() {
        let s = space("Z4", 2);
        let mut rng = Rng::seeded(14);
        let exec = Execution::default();
        for _ in 0..5 {
            let (a, b) = (rng.operator(s.clone()), rng.operator(s.clone()));
            for tag in AlgebraTag::ALL {
                let pa = project(tag, &a, exec);
                assert!(project(tag, &pa, exec).approx_eq(&pa, 1e-10), "{tag}");
                let l = pa.hs_inner(&b).unwrap();
                let r = a.hs_inner(&project(tag, &b, exec)).unwrap();
                assert!((l - r).norm() < 1e-10, "{tag}");
            }
            let via = project_alg(&project_inv(&a, exec), exec);
            assert!(via.approx_eq(&project_alg(&a, exec), 1e-12));
            let back = project_inv(&project_alg(&a, exec), exec);
            assert!(back.approx_eq(&project_alg(&a, exec), 1e-12));
        }
    }

    #[test]
    fn strict_inclusions() {
        let s = space("Z3", 2);
        let w = witness_inv_not_alg(&s).unwrap();
        assert_eq!(classify(&w, 1e-10), Some(AlgebraTag::Inv));
        let w = witness_inv_prime_not_inv(&s).unwrap();
        assert_eq!(classify(&w, 1e-10), Some(AlgebraTag::InvPrime));
        let w = witness_alg_not_phys(&s).unwrap();
        assert_eq!(classify(&w, 1e-10), Some(AlgebraTag::Alg));
        assert_eq!(classify(&physical_projector(&s), 1e-10), Some(AlgebraTag::Phys));
        assert_eq!(classify(&Rng::seeded(1).operator(s), 1e-10), None);
        assert!(witness_inv_not_alg(&space("Z2", 2)).is_err());
    }

    #[test]
    fn fixed_points_are_commutants() {
        let s = space("Z2xZ2", 2);
        let mut rng = Rng::seeded(15);
        let exec = Execution::default();
        for tag in [AlgebraTag::Inv, AlgebraTag::InvPrime] {
            let gens = invariance_generators(&s, tag).unwrap();
            let inside = project(tag, &rng.operator(s.clone()), exec);
            assert!(commutes_with_all(&inside, &gens, 1e-10).unwrap());
            let outside = rng.operator(s.clone());
            assert!(!commutes_with_all(&outside, &gens, 1e-10).unwrap());
        }
        let w = witness_inv_prime_not_inv(&s).unwrap();
        assert!(!commutes_with_all(&w, &invariance_generators(&s, AlgebraTag::Inv).unwrap(), 1e-10).unwrap());
    }

    #[test]
    fn relational_observable_matches_definition() {
        let s = space("Z3", 3);
        let red = s.with_particles(2).unwrap();
        let mut rng = Rng::seeded(16);
        let a = rng.operator(red.clone());
        for i in 1..=3 {
            // |e⟩⟨e|_i ⊗ A with particle i inserted at position i
            let embedded = Operator::from_fn(s.clone(), Execution::Sequential, |x, y| {
                let (dx, dy) = (s.digits(x), s.digits(y));
                if dx[i - 1] != 0 || dy[i - 1] != 0 {
                    return ZERO;
                }
                let (mut rx, mut ry) = (dx, dy);
                rx.remove(i - 1);
                ry.remove(i - 1);
                a.get(red.index_from_digits(&rx), red.index_from_digits(&ry))
            });
            let p = physical_projector(&s);
            let want = p.matmul(&embedded).unwrap().matmul(&p).unwrap().scale(C64::new(3.0, 0.0));
            assert!(relational_observable(&a, i).unwrap().approx_eq(&want, 1e-12));
        }
        let f = relational_observable(&Operator::identity(red), 2).unwrap();
        assert!(f.approx_eq(&physical_projector(&s), 1e-12));
    }

    #[test]
    fn observational_equivalence_examples() {
        let s = space("Z3", 2);
        let mut rng = Rng::seeded(17);
        let rho = rng.density(s.clone(), 2);
        let u = SymmetryElement::new(s.clone(), vec![1, 2, 0], 0.4).unwrap();
        assert!(observationally_equivalent(&rho, &u.conjugate(&rho).unwrap(), 1e-10).unwrap());
        let layout = SectorLayout::for_space(&s);
        let a = crate::sectors::sector_state_idx(&layout, 0, 1).projector();
        let b = crate::sectors::sector_state_idx(&layout, 0, 2).projector();
        assert!(!observationally_equivalent(&a, &b, 1e-10).unwrap());
        assert!(observationally_equivalent(&a, &a.scale(C64::new(1.0, 0.0)), 1e-10).unwrap());
        assert!(observationally_equivalent(&rho, &rng.density(s, 2), 1e-10).is_ok_and(|e| !e));
    }
}
