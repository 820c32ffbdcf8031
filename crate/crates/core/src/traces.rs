//! Invariant embeddings of `N` particles into `N+M`, their adjoint traces,
//! and the relational trace.
//!
//! An embedding `Φ^U` is fixed by a symmetry `U` on the `N`-particle space,
//! i.e. by an assignment `h ↦ g(h)`. It acts on the coordinates of `A_alg`:
//!
//! ```text
//! Φ^U(|h;𝟏⟩⟨j;𝟏|) = Σ_{g∈G^M} |h, g(h)^{-1}g;𝟏⟩⟨j, g(j)^{-1}g;𝟏|
//! Φ^U(Π_{h;χ≠𝟏})  = Σ_{g∈G^M} Π_{(h,g);χ≠𝟏}
//! ```
//!
//! and is extended to all operators by applying `Π_alg` first. Here
//! `(h, g)` is the `N+M` relation tuple whose last `M` entries are `g`, all
//! labelled relative to particle 1. `Trinv^U` is the Hilbert–Schmidt
//! adjoint.
//!
//! The relational embedding `Φ_phys(A) = A ⊗ Π_phys^{(M)}` has adjoint
//! `Trel ρ = Tr_M[(Π^{(N)}_phys ⊗ Π^{(M)}_phys) ρ (Π^{(N)}_phys ⊗ Π^{(M)}_phys)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::hilbert::{Density, Operator, SpaceLabel, C64, ZERO};
use crate::invariants::{alg_coefficients, alg_from_coefficients, is_member, project_alg, AlgCoefficients, AlgebraTag};
use crate::sectors::{physical_projector, project_phys, SectorLayout};
use crate::symmetry::{center_of_mass_symmetry, qrf_transform, ResidueChart, SymmetryElement};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Relations of the new particles are read relative to particle `i`.
    Particle(usize),
    CenterOfMass {
        masses: Vec<f64>,
        chart: ResidueChart,
    },
    Custom(SymmetryElement),
    Relational,
}

#[derive(Clone, Debug)]
pub struct EmbeddingSpec {
    kind: EmbeddingKind,
    small: SpaceLabel,
    large: SpaceLabel,
    m: usize,
    /// `g(h)` per `N`-particle relation index; `None` for the relational kind.
    assignment: Option<Vec<usize>>,
}

impl EmbeddingSpec {
    /// Embedding of the `N`-particle `space` into `N + m` particles.
    pub fn new(kind: EmbeddingKind, space: SpaceLabel, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::structural("embedding needs at least one additional particle"));
        }
        let large = space.with_particles(space.particles() + m)?;
        let assignment = match &kind {
            EmbeddingKind::Particle(i) => {
                let np = space.particles();
                if *i == 0 || *i > np {
                    return Err(Error::structural(format!("particle {i} out of range 1..={np}")));
                }
                if np == 1 {
                    Some(vec![0])
                } else {
                    // the QRF change 1 → i has g(h) = h_{i−1}^{-1}
                    Some(qrf_transform(&space, 1, *i)?.symmetry().assignment().to_vec())
                }
            }
            EmbeddingKind::CenterOfMass { masses, chart } => {
                Some(center_of_mass_symmetry(&space, masses, *chart)?.assignment().to_vec())
            }
            EmbeddingKind::Custom(u) => {
                space.ensure_same(u.space())?;
                Some(u.assignment().to_vec())
            }
            EmbeddingKind::Relational => None,
        };
        Ok(EmbeddingSpec { kind, small: space, large, m, assignment })
    }

    pub fn kind(&self) -> &EmbeddingKind {
        &self.kind
    }

    /// The `N`-particle space.
    pub fn small_space(&self) -> &SpaceLabel {
        &self.small
    }

    /// The `N+M`-particle space.
    pub fn large_space(&self) -> &SpaceLabel {
        &self.large
    }

    pub fn extra_particles(&self) -> usize {
        self.m
    }

    /// `Φ(A)`. With `strict`, `A` must already lie in the embedding's domain
    /// (`A_alg`, or `A_phys` for the relational kind); otherwise it is
    /// projected there first.
    pub fn embed(&self, a: &Operator, strict: bool, exec: Execution) -> Result<Operator> {
        self.small.ensure_same(a.space())?;
        let domain = if self.assignment.is_some() { AlgebraTag::Alg } else { AlgebraTag::Phys };
        if strict && !is_member(a, domain, crate::DEFAULT_EPS) {
            return Err(Error::domain(format!("operator is not in {domain}")));
        }
        match &self.assignment {
            Some(g) => Ok(self.embed_invariant(g, &alg_coefficients(a, exec), exec)),
            None => {
                let p = project_phys(a, exec);
                p.tensor(&physical_projector(&self.small.with_particles(self.m)?))
            }
        }
    }

    /// The adjoint of [`Self::embed`]: `Trinv^U`, or `Trel` for the
    /// relational kind. Accepts any operator; only its invariant content is
    /// read.
    pub fn trace<D: Density + ?Sized>(&self, rho: &D, exec: Execution) -> Result<Operator> {
        self.large.ensure_same(rho.space())?;
        match &self.assignment {
            Some(g) => Ok(self.trinv(g, rho, exec)),
            None => trel(rho, self.m, exec),
        }
    }

    fn embed_invariant(&self, g: &[usize], c: &AlgCoefficients, exec: Execution) -> Operator {
        let small = SectorLayout::for_space(&self.small);
        let large = SectorLayout::for_space(&self.large);
        let group = self.small.group();
        let n = small.order() as f64;
        let nr = c.relations;
        let tail = large.relation_count() / nr;
        let shift = TupleShift::new(&self.small.with_particles(self.m + 1).expect("valid space"));
        Operator::from_fn(self.large.clone(), exec, |x, y| {
            let (rx, ry) = (large.relation_index(x), large.relation_index(y));
            let (hx, kx) = (rx / tail, rx % tail);
            let (hy, ky) = (ry / tail, ry % tail);
            let mut v = ZERO;
            // ky must equal g(hy)^{-1} g(hx) kx
            let t = group.compose_idx(group.inverse_idx(g[hy]), g[hx]);
            if shift.apply(kx, t) == ky {
                v += c.phys[hx * nr + hy] / n;
            }
            if rx == ry {
                let d = c.weights[hx];
                v += if x == y { d * (1.0 - 1.0 / n) } else { -d / n };
            }
            v
        })
    }

    fn trinv<D: Density + ?Sized>(&self, g: &[usize], rho: &D, exec: Execution) -> Operator {
        let small = SectorLayout::for_space(&self.small);
        let large = SectorLayout::for_space(&self.large);
        let group = self.small.group();
        let n = small.order() as f64;
        let nr = small.relation_count();
        let tail = large.relation_count() / nr;
        let shift = TupleShift::new(&self.small.with_particles(self.m + 1).expect("valid space"));
        // ⟨h, g(h)^{-1}k;𝟏| ρ |j, g(j)^{-1}k;𝟏⟩ summed over k
        let phys_rows = exec::map_range(nr, exec, |h| {
            (0..nr)
                .map(|j| {
                    let mut acc = ZERO;
                    for k in 0..tail {
                        let a = h * tail + shift.apply(k, group.inverse_idx(g[h]));
                        let b = j * tail + shift.apply(k, group.inverse_idx(g[j]));
                        acc += rho.block_sum(large.members(a), large.members(b));
                    }
                    acc / n
                })
                .collect::<Vec<_>>()
        });
        // Σ_k tr(Π_{(h,k);χ≠𝟏} ρ) / (|G| − 1)
        let weights = exec::map_range(nr, exec, |h| {
            let mut acc = ZERO;
            for k in 0..tail {
                let m = large.members(h * tail + k);
                let diag: C64 = m.iter().map(|&x| rho.entry(x, x)).sum();
                acc += diag - rho.block_sum(m, m) / n;
            }
            acc / (n - 1.0)
        });
        let coeffs = AlgCoefficients { relations: nr, phys: phys_rows.concat(), weights };
        alg_from_coefficients(&self.small, &coeffs, exec)
    }
}

/// Componentwise translation of an `M`-tuple of group elements, by index.
struct TupleShift {
    order: usize,
    len: usize,
    group: crate::group::GroupSpec,
}

impl TupleShift {
    /// `space` has `M + 1` particles; tuples have `M` entries.
    fn new(space: &SpaceLabel) -> Self {
        TupleShift { order: space.group().order(), len: space.particles() - 1, group: space.group().clone() }
    }

    fn apply(&self, tuple: usize, t: usize) -> usize {
        let mut out = 0;
        let mut place = 1;
        let mut rest = tuple;
        for _ in 0..self.len {
            out += self.group.compose_idx(rest % self.order, t) * place;
            place *= self.order;
            rest /= self.order;
        }
        out
    }
}

/// `Π_alg^{(N+M)}(A ⊗ 𝟏^{(M)})`: the invariant-looking embedding that fails
/// to be multiplicative.
pub fn naive_embedding(a: &Operator, m: usize, exec: Execution) -> Result<Operator> {
    let id = Operator::identity(a.space().with_particles(m)?);
    Ok(project_alg(&a.tensor(&id)?, exec))
}

#[derive(Clone, Debug)]
pub struct NaiveCounterexample {
    pub a: Operator,
    pub b: Operator,
    /// Frobenius norm of `Φ̃(AB) − Φ̃(A)Φ̃(B)`.
    pub defect: f64,
}

/// `A = |h;𝟏⟩⟨j;𝟏|`, `B = |j;𝟏⟩⟨h;𝟏|` for the first two relation tuples.
pub fn naive_physical_embedding_counterexample(
    space: &SpaceLabel,
    m: usize,
    swap: bool,
) -> Result<NaiveCounterexample> {
    if space.particles() < 2 || m == 0 {
        return Err(Error::domain("needs N ≥ 2 and M ≥ 1 so that two distinct relation tuples exist"));
    }
    let layout = SectorLayout::for_space(space);
    let (h, j) = if swap { (1, 0) } else { (0, 1) };
    let sh = crate::sectors::sector_state_idx(&layout, h, 0);
    let sj = crate::sectors::sector_state_idx(&layout, j, 0);
    let a = sh.outer(&sj)?;
    let b = sj.outer(&sh)?;
    let exec = Execution::default();
    let lhs = naive_embedding(&a.matmul(&b)?, m, exec)?;
    let rhs = naive_embedding(&a, m, exec)?.matmul(&naive_embedding(&b, m, exec)?)?;
    let defect = lhs.sub(&rhs)?.frobenius_norm();
    Ok(NaiveCounterexample { a, b, defect })
}

/// `Φ_phys(A) = A ⊗ Π_phys^{(M)}` for `A ∈ A_phys`.
pub fn embed_relational(a: &Operator, m: usize) -> Result<Operator> {
    EmbeddingSpec::new(EmbeddingKind::Relational, a.space().clone(), m)?.embed(a, true, Execution::default())
}

/// The relational partial trace over the last `m` particles.
pub fn trel<D: Density + ?Sized>(rho: &D, m: usize, exec: Execution) -> Result<Operator> {
    let space = rho.space();
    if m == 0 || m >= space.particles() {
        return Err(Error::structural(format!("cannot relationally trace {m} of {} particles", space.particles())));
    }
    let small = space.with_particles(space.particles() - m)?;
    let tail = space.with_particles(m)?;
    let ls = SectorLayout::for_space(&small);
    let lt = SectorLayout::for_space(&tail);
    let dt = tail.dim();
    // Classes of Π^{(N)} ⊗ Π^{(M)}: pairs (N-relation a, M-relation b).
    let class = |a: usize, b: usize| -> Vec<usize> {
        let mut v = Vec::with_capacity(ls.order() * lt.order());
        for &x1 in ls.members(a) {
            for &x2 in lt.members(b) {
                v.push(x1 * dt + x2);
            }
        }
        v
    };
    let classes: Vec<Vec<Vec<usize>>> =
        (0..ls.relation_count()).map(|a| (0..lt.relation_count()).map(|b| class(a, b)).collect()).collect();
    let n = ls.order() as f64;
    let nr = ls.relation_count();
    let blocks = exec::map_range(nr, exec, |a| {
        (0..nr)
            .map(|a2| {
                let s: C64 = (0..lt.relation_count()).map(|b| rho.block_sum(&classes[a][b], &classes[a2][b])).sum();
                s * n / n.powi(4)
            })
            .collect::<Vec<_>>()
    })
    .concat();
    Ok(Operator::from_fn(small, exec, |x, y| blocks[ls.relation_index(x) * nr + ls.relation_index(y)]))
}

/// `tr(ρ Π_phys)`.
pub fn relational_weight<D: Density + ?Sized>(rho: &D) -> f64 {
    let layout = SectorLayout::for_space(rho.space());
    let n = layout.order() as f64;
    (0..layout.relation_count()).map(|r| rho.block_sum(layout.members(r), layout.members(r)).re / n).sum()
}

/// `Trel ρ / tr(ρ Π_phys^{(N+M)})`.
pub fn conditional_state<D: Density + ?Sized>(rho: &D, m: usize, eps: f64, exec: Execution) -> Result<Operator> {
    let w = relational_weight(rho);
    if w <= eps {
        return Err(Error::UndefinedConditional { weight: w });
    }
    Ok(trel(rho, m, exec)?.scale(C64::new(1.0 / w, 0.0)))
}
