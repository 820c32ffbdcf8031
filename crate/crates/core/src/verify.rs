//! Property verification suite.
//!
//! Every check draws its random inputs from a generator seeded by the suite
//! seed and the check name, so results do not depend on scheduling. Checks
//! that need dense operators on the full space run on the largest prefix of
//! the particles whose dimension stays at or below [`DENSE_DIM_LIMIT`].

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alignment::{align_to, decompose_alignable};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::hilbert::{partial_trace_last, Operator, SpaceLabel, StateVector, C64, DEFAULT_EPS, ZERO};
use crate::invariants::{
    commutes_with_all, invariance_generators, is_member, observationally_equivalent, project, project_inv,
    relational_observable, symmetry_equivalent_alignable, twirl_oracle, witness_alg_not_phys, witness_inv_not_alg,
    witness_inv_prime_not_inv, AlgebraTag,
};
use crate::paradox::{
    angelo_t_expectation, build_two_particle_state, run_paradox, sector_coherence, ParadoxConfig, TraceMethod,
};
use crate::random::Rng;
use crate::sectors::{
    change_of_basis, global_translation_perm, physical_projector, physical_projector_by_average,
    physical_projector_by_sectors, project_phys, sector_state, to_sector_basis, SectorLayout,
};
use crate::symmetry::{enumerate_usym, is_in_usym, qrf_transform, ResidueChart};
use crate::traces::{naive_physical_embedding_counterexample, trel, EmbeddingKind, EmbeddingSpec};

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest dimension on which checks build dense operators.
pub const DENSE_DIM_LIMIT: usize = 1024;

/// Largest `|U_sym|` the brute-force checks enumerate.
pub const BRUTEFORCE_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Group,
    Hilbert,
    Sectors,
    Symmetry,
    Invariants,
    Alignment,
    Traces,
    Paradox,
    Bruteforce,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Group,
        Suite::Hilbert,
        Suite::Sectors,
        Suite::Symmetry,
        Suite::Invariants,
        Suite::Alignment,
        Suite::Traces,
        Suite::Paradox,
        Suite::Bruteforce,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Group => "group",
            Suite::Hilbert => "hilbert",
            Suite::Sectors => "sectors",
            Suite::Symmetry => "symmetry",
            Suite::Invariants => "invariants",
            Suite::Alignment => "alignment",
            Suite::Traces => "traces",
            Suite::Paradox => "paradox",
            Suite::Bruteforce => "bruteforce",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `all` or a comma-separated list of suite names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteSelector(BTreeSet<Suite>);

impl SuiteSelector {
    pub fn all() -> Self {
        SuiteSelector(Suite::ALL.into_iter().collect())
    }

    pub fn only(suites: &[Suite]) -> Self {
        SuiteSelector(suites.iter().copied().collect())
    }

    pub fn contains(&self, suite: Suite) -> bool {
        self.0.contains(&suite)
    }
}

impl Default for SuiteSelector {
    fn default() -> Self {
        Self::all()
    }
}

impl FromStr for SuiteSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        let mut set = BTreeSet::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let suite = Suite::ALL
                .into_iter()
                .find(|x| x.name().eq_ignore_ascii_case(part))
                .ok_or_else(|| Error::structural(format!("unknown suite {part:?}")))?;
            set.insert(suite);
        }
        if set.is_empty() {
            return Err(Error::structural("empty suite selection"));
        }
        Ok(SuiteSelector(set))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub space: SpaceLabel,
    pub suites: SuiteSelector,
    pub seed: u64,
    pub dim_cap: usize,
    /// Base tolerance. Every check scales its own tolerance by
    /// `eps / DEFAULT_EPS`.
    pub eps: f64,
    pub exec: Execution,
}

impl VerifyConfig {
    pub fn new(space: SpaceLabel) -> Self {
        VerifyConfig {
            space,
            suites: SuiteSelector::all(),
            seed: 0,
            dim_cap: DEFAULT_DIM_CAP,
            eps: DEFAULT_EPS,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// Which side of the threshold passes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    fn admits(self, value: f64) -> bool {
        match self {
            Bound::AtMost(t) => value <= t,
            Bound::AtLeast(t) => value >= t,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub suite: Suite,
    /// The property being checked, in words.
    pub reference: String,
    pub status: CheckStatus,
    /// Measured deviation (or margin, for lower bounds).
    pub max_deviation: Option<f64>,
    pub bound: Option<Bound>,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub group: String,
    pub particles: usize,
    pub seed: u64,
    pub eps: f64,
    pub checks: Vec<CheckResult>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

enum Outcome {
    Measured { value: f64, bound: Bound, detail: Option<String> },
    Skipped(String),
}

fn at_most(value: f64, tol: f64) -> Result<Outcome> {
    Ok(Outcome::Measured { value, bound: Bound::AtMost(tol), detail: None })
}

fn at_least(value: f64, min: f64) -> Result<Outcome> {
    Ok(Outcome::Measured { value, bound: Bound::AtLeast(min), detail: None })
}

/// Number of violated boolean conditions, which must be zero.
fn violations(count: usize, detail: Option<String>) -> Result<Outcome> {
    Ok(Outcome::Measured { value: count as f64, bound: Bound::AtMost(0.0), detail })
}

fn skipped(reason: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome::Skipped(reason.into()))
}

struct Ctx<'a> {
    cfg: &'a VerifyConfig,
    name: &'static str,
}

impl Ctx<'_> {
    fn space(&self) -> &SpaceLabel {
        &self.cfg.space
    }

    fn n(&self) -> usize {
        self.cfg.space.group().order()
    }

    fn exec(&self) -> Execution {
        self.cfg.exec
    }

    fn tol(&self, base: f64) -> f64 {
        base * self.cfg.eps / DEFAULT_EPS
    }

    fn rng(&self) -> Rng {
        // FNV-1a of the check name mixed into the suite seed
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        Rng::seeded(self.cfg.seed ^ h)
    }

    /// The configured space with as many particles as fit under
    /// [`DENSE_DIM_LIMIT`], at least `min`. `None` if even `min` does not fit.
    fn dense_space(&self, min: usize) -> Option<SpaceLabel> {
        let n = self.n();
        let mut k = self.space().particles();
        while k >= min && k >= 1 {
            if n.checked_pow(k as u32).is_some_and(|d| d <= DENSE_DIM_LIMIT) {
                return self.space().with_particles(k).ok();
            }
            k -= 1;
        }
        None
    }

    fn samples(&self, dim: usize, small: usize, large: usize) -> usize {
        if dim <= 128 {
            small
        } else {
            large
        }
    }
}

fn unit_operator(rng: &mut Rng, space: &SpaceLabel) -> Operator {
    let a = rng.operator(space.clone());
    let norm = a.frobenius_norm();
    a.scale(C64::new(1.0 / norm, 0.0))
}

fn diff(a: &Operator, b: &Operator) -> Result<f64> {
    a.max_diff(b)
}

fn no_dense_space(min: usize) -> Result<Outcome> {
    skipped(format!("no space with at least {min} particles fits the dense limit {DENSE_DIM_LIMIT}"))
}

type CheckFn = fn(&Ctx) -> Result<Outcome>;

struct Check {
    name: &'static str,
    suite: Suite,
    reference: &'static str,
    run: CheckFn,
}

const CHECKS: &[Check] = &[
    Check {
        name: "group.character_orthogonality",
        suite: Suite::Group,
        reference: "Σ_g conj(χ(g)) χ′(g) = |G| δ_{χχ′} for all characters",
        run: group_character_orthogonality,
    },
    Check {
        name: "group.character_order",
        suite: Suite::Group,
        reference: "χ(g)^{|G|} = 1 for all characters and elements",
        run: group_character_order,
    },
    Check {
        name: "group.commutativity",
        suite: Suite::Group,
        reference: "composition is commutative on 1000 random pairs",
        run: group_commutativity,
    },
    Check {
        name: "group.index_roundtrip",
        suite: Suite::Group,
        reference: "element and character indices invert their enumerations",
        run: group_index_roundtrip,
    },
    Check {
        name: "hilbert.basis_index_roundtrip",
        suite: Suite::Hilbert,
        reference: "basis_index inverts config_of over the full index range",
        run: hilbert_basis_index_roundtrip,
    },
    Check {
        name: "hilbert.partial_trace_positivity",
        suite: Suite::Hilbert,
        reference: "partial trace is linear and maps PSD matrices to PSD matrices",
        run: hilbert_partial_trace_positivity,
    },
    Check {
        name: "hilbert.tensor_associativity",
        suite: Suite::Hilbert,
        reference: "(A⊗B)⊗C = A⊗(B⊗C) elementwise",
        run: hilbert_tensor_associativity,
    },
    Check {
        name: "hilbert.json_roundtrip",
        suite: Suite::Hilbert,
        reference: "states and operators round-trip through JSON bit for bit",
        run: hilbert_json_roundtrip,
    },
    Check {
        name: "sectors.eigenbasis",
        suite: Suite::Sectors,
        reference: "U_g^{⊗N}|h;χ⟩ = χ(g)|h;χ⟩",
        run: sectors_eigenbasis,
    },
    Check {
        name: "sectors.completeness",
        suite: Suite::Sectors,
        reference: "the vectors |h;χ⟩ form an orthonormal basis",
        run: sectors_completeness,
    },
    Check {
        name: "sectors.coherent_average",
        suite: Suite::Sectors,
        reference: "group average of U_g^{⊗N} equals Σ_h |h;𝟏⟩⟨h;𝟏|, with trace |G|^{N−1}",
        run: sectors_coherent_average,
    },
    Check {
        name: "sectors.nested_projectors",
        suite: Suite::Sectors,
        reference: "(Π_phys^{(N)}⊗𝟏)Π_phys^{(N+M)} = Π_phys^{(N)}⊗Π_phys^{(M)}",
        run: sectors_nested_projectors,
    },
    Check {
        name: "symmetry.closure",
        suite: Suite::Symmetry,
        reference: "composition of symmetries composes assignments pointwise",
        run: symmetry_closure,
    },
    Check {
        name: "symmetry.sector_commutation",
        suite: Suite::Symmetry,
        reference: "every symmetry commutes with every relation-sector projector",
        run: symmetry_sector_commutation,
    },
    Check {
        name: "symmetry.translation_covariance",
        suite: Suite::Symmetry,
        reference: "every symmetry commutes with every global translation",
        run: symmetry_translation_covariance,
    },
    Check {
        name: "symmetry.membership",
        suite: Suite::Symmetry,
        reference: "is_in_usym recovers induced operators and rejects sector-mixing ones",
        run: symmetry_membership,
    },
    Check {
        name: "symmetry.qrf_roundtrip",
        suite: Suite::Symmetry,
        reference: "V_{i→j} V_{j→i} = 𝟏 for all i, j",
        run: symmetry_qrf_roundtrip,
    },
    Check {
        name: "symmetry.qrf_four_particle_example",
        suite: Suite::Symmetry,
        reference: "V_{2→3}|g1,g3,g4⟩ = |g3⁻¹g1, g3⁻¹, g3⁻¹g4⟩ on four particles",
        run: symmetry_qrf_four_particle_example,
    },
    Check {
        name: "invariants.idempotence",
        suite: Suite::Invariants,
        reference: "every algebra projection is idempotent",
        run: invariants_idempotence,
    },
    Check {
        name: "invariants.hs_self_adjoint",
        suite: Suite::Invariants,
        reference: "every algebra projection is Hilbert–Schmidt self-adjoint",
        run: invariants_hs_self_adjoint,
    },
    Check {
        name: "invariants.strict_inclusions",
        suite: Suite::Invariants,
        reference: "witnesses lie in A_inv∖A_alg, A′_inv∖A_inv and A_alg∖A_phys",
        run: invariants_strict_inclusions,
    },
    Check {
        name: "invariants.fixed_points",
        suite: Suite::Invariants,
        reference: "P(A) = A iff A commutes with the generating symmetries",
        run: invariants_fixed_points,
    },
    Check {
        name: "invariants.superselection",
        suite: Suite::Invariants,
        reference: "invariant operators have no coherences outside the trivial-character block",
        run: invariants_superselection,
    },
    Check {
        name: "invariants.relational_isomorphism",
        suite: Suite::Invariants,
        reference: "A ↦ F_{A,i} preserves products, adjoints and linear combinations and is frame covariant",
        run: invariants_relational_isomorphism,
    },
    Check {
        name: "alignment.uniqueness",
        suite: Suite::Alignment,
        reference: "the aligned form is deterministic and symmetry invariant",
        run: alignment_uniqueness,
    },
    Check {
        name: "alignment.projection_formula",
        suite: Suite::Alignment,
        reference: "Π_inv of an alignable state from its sector amplitudes",
        run: alignment_projection_formula,
    },
    Check {
        name: "alignment.physical_weight",
        suite: Suite::Alignment,
        reference: "⟨ψ|Π_phys|ψ⟩ = 1/|G| for alignable ψ",
        run: alignment_physical_weight,
    },
    Check {
        name: "alignment.equivalences_agree",
        suite: Suite::Alignment,
        reference: "observational and symmetry equivalence coincide on alignable states",
        run: alignment_equivalences_agree,
    },
    Check {
        name: "traces.adjoint",
        suite: Suite::Traces,
        reference: "⟨Φ(A), ρ⟩ = ⟨A, Tr ρ⟩ for every embedding kind",
        run: traces_adjoint,
    },
    Check {
        name: "traces.embedding_homomorphism",
        suite: Suite::Traces,
        reference: "invariant embeddings are *-homomorphisms on A_alg",
        run: traces_embedding_homomorphism,
    },
    Check {
        name: "traces.factorization",
        suite: Suite::Traces,
        reference: "Trel = Π̂_phys^{(N)} ∘ Tr_M ∘ Π̂_phys^{(N+M)}",
        run: traces_factorization,
    },
    Check {
        name: "traces.norm_reduction",
        suite: Suite::Traces,
        reference: "Trel |h_N,h_M;𝟏⟩⟨j_N,j_M;𝟏| = |G|⁻¹|h_N;𝟏⟩⟨j_N;𝟏| when h_M ∼ j_M, else 0",
        run: traces_norm_reduction,
    },
    Check {
        name: "traces.product_consistency",
        suite: Suite::Traces,
        reference: "Trel(ρ_phys^{(N)}⊗ρ_phys^{(M)}) = ρ_phys^{(N)} tr ρ_phys^{(M)}",
        run: traces_product_consistency,
    },
    Check {
        name: "traces.naive_not_multiplicative",
        suite: Suite::Traces,
        reference: "Π_alg(A⊗𝟏) fails to be multiplicative",
        run: traces_naive_not_multiplicative,
    },
    Check {
        name: "paradox.theta_table",
        suite: Suite::Paradox,
        reference: "θ is lost by the standard and particle-1 traces and kept by the CoM and relational ones",
        run: paradox_theta_table,
    },
    Check {
        name: "paradox.frame_invariance",
        suite: Suite::Paradox,
        reference: "invariant and relational traces agree on Ψ and Ψ′",
        run: paradox_frame_invariance,
    },
    Check {
        name: "paradox.standard_frame_dependence",
        suite: Suite::Paradox,
        reference: "the ordinary partial trace differs on Ψ and Ψ′",
        run: paradox_standard_frame_dependence,
    },
    Check {
        name: "paradox.relational_recovery",
        suite: Suite::Paradox,
        reference: "the conditional state is Π_phys|ψ⟩⟨ψ|Π_phys with coherence 1/(2n²) in Trel",
        run: paradox_relational_recovery,
    },
    Check {
        name: "paradox.com_projection",
        suite: Suite::Paradox,
        reference: "the CoM trace reproduces Π_inv(|ψ⟩⟨ψ|)",
        run: paradox_com_projection,
    },
    Check {
        name: "paradox.conditional_expectations",
        suite: Suite::Paradox,
        reference: "the conditional state reproduces relational expectation values of ψ",
        run: paradox_conditional_expectations,
    },
    Check {
        name: "paradox.embedding_dependence",
        suite: Suite::Paradox,
        reference: "the particle-1 and CoM traces of the same state differ on relational observables",
        run: paradox_embedding_dependence,
    },
    Check {
        name: "paradox.angelo_expectation",
        suite: Suite::Paradox,
        reference: "⟨ψ|T|ψ⟩ = ½e^{iθ}",
        run: paradox_angelo_expectation,
    },
    Check {
        name: "bruteforce.usym_enumeration",
        suite: Suite::Bruteforce,
        reference: "U_sym has |G|^{|G|^{N−1}} elements, each recognized by is_in_usym",
        run: bruteforce_usym_enumeration,
    },
    Check {
        name: "bruteforce.twirl",
        suite: Suite::Bruteforce,
        reference: "the literal average over U_sym equals the closed-form Π_inv",
        run: bruteforce_twirl,
    },
    Check {
        name: "bruteforce.commutant",
        suite: Suite::Bruteforce,
        reference: "Π_inv(A) commutes with every element of U_sym",
        run: bruteforce_commutant,
    },
];

/// Names of all checks in `suite`.
pub fn check_names(suite: Suite) -> Vec<&'static str> {
    CHECKS.iter().filter(|c| c.suite == suite).map(|c| c.name).collect()
}

/// Runs the selected suites. `progress` is called once per finished check,
/// possibly from worker threads.
pub fn run_suite<F>(cfg: &VerifyConfig, progress: F) -> Result<SuiteResult>
where
    F: Fn(&CheckResult) + Send + Sync,
{
    let dim = cfg.space.dim();
    if dim > cfg.dim_cap {
        return Err(Error::DimensionCap { dim, cap: cfg.dim_cap });
    }
    if !(cfg.eps.is_finite() && cfg.eps > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {}", cfg.eps)));
    }
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| cfg.suites.contains(c.suite)).collect();
    let mut checks = exec::map_range(selected.len(), cfg.exec, |k| {
        let result = run_one(cfg, selected[k]);
        progress(&result);
        result
    });
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(SuiteResult {
        group: cfg.space.group().to_string(),
        particles: cfg.space.particles(),
        seed: cfg.seed,
        eps: cfg.eps,
        checks,
    })
}

fn run_one(cfg: &VerifyConfig, check: &Check) -> CheckResult {
    let ctx = Ctx { cfg, name: check.name };
    let start = Instant::now();
    let outcome = (check.run)(&ctx);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let (status, max_deviation, bound, detail) = match outcome {
        Ok(Outcome::Measured { value, bound, detail }) => {
            let status = if value.is_finite() && bound.admits(value) { CheckStatus::Pass } else { CheckStatus::Fail };
            (status, Some(value), Some(bound), detail)
        }
        Ok(Outcome::Skipped(reason)) => (CheckStatus::Skipped, None, None, Some(reason)),
        Err(e) => (CheckStatus::Fail, None, None, Some(e.to_string())),
    };
    CheckResult {
        name: check.name.to_string(),
        suite: check.suite,
        reference: check.reference.to_string(),
        status,
        max_deviation,
        bound,
        runtime_ms,
        detail,
    }
}

// ---------------------------------------------------------------- group

fn group_character_orthogonality(ctx: &Ctx) -> Result<Outcome> {
    let g = ctx.space().group();
    let n = g.order();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for k2 in 0..n {
            let s: C64 = (0..n).map(|x| g.character_value(k, x).conj() * g.character_value(k2, x)).sum();
            let want = if k == k2 { n as f64 } else { 0.0 };
            worst = worst.max((s - want).norm());
        }
    }
    at_most(worst, ctx.tol(1e-12) * n as f64)
}

fn group_character_order(ctx: &Ctx) -> Result<Outcome> {
    let g = ctx.space().group();
    let n = g.order();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for x in 0..n {
            let v = g.character_value(k, x).powu(n as u32);
            worst = worst.max((v - 1.0).norm());
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn group_commutativity(ctx: &Ctx) -> Result<Outcome> {
    let g = ctx.space().group();
    let mut rng = ctx.rng();
    let mut bad = 0;
    for _ in 0..1000 {
        let (a, b) = (g.element_at(rng.below(g.order())), g.element_at(rng.below(g.order())));
        if g.compose(&a, &b)? != g.compose(&b, &a)? {
            bad += 1;
        }
    }
    violations(bad, None)
}

fn group_index_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let g = ctx.space().group();
    let mut bad = 0;
    for i in 0..g.order() {
        if g.index_of(&g.element_at(i))? != i {
            bad += 1;
        }
        if g.character_index(&g.character_at(i))? != i {
            bad += 1;
        }
    }
    violations(bad, None)
}

// ---------------------------------------------------------------- hilbert

fn hilbert_basis_index_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    let mut bad = 0;
    for x in 0..s.dim() {
        if s.basis_index(&s.config_of(x))? != x || s.index_from_digits(&s.digits(x)) != x {
            bad += 1;
        }
    }
    violations(bad, None)
}

fn hilbert_partial_trace_positivity(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let mut rng = ctx.rng();
    let samples = ctx.samples(s.dim(), 100, 30);
    let mut bad = 0;
    for k in 0..samples {
        let rho = rng.density(s.clone(), 1 + k % 4);
        if !partial_trace_last(&rho, 1)?.is_psd(ctx.tol(1e-10)) {
            bad += 1;
        }
    }
    let a = unit_operator(&mut rng, &s);
    let b = unit_operator(&mut rng, &s);
    let (x, y) = (rng.gaussian(), rng.gaussian());
    let mut lin = a.scale(x);
    lin.add_scaled(y, &b)?;
    let mut want = partial_trace_last(&a, 1)?.scale(x);
    want.add_scaled(y, &partial_trace_last(&b, 1)?)?;
    if diff(&partial_trace_last(&lin, 1)?, &want)? > ctx.tol(1e-12) {
        bad += 1;
    }
    violations(bad, None)
}

fn hilbert_tensor_associativity(ctx: &Ctx) -> Result<Outcome> {
    let one = ctx.space().with_particles(1)?;
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let (a, b, c) = (rng.operator(one.clone()), rng.operator(one.clone()), rng.operator(one.clone()));
        let left = a.tensor(&b)?.tensor(&c)?;
        let right = a.tensor(&b.tensor(&c)?)?;
        if left.space() != right.space() {
            return violations(1, Some("space labels differ".into()));
        }
        worst = worst.max(diff(&left, &right)?);
    }
    at_most(worst, ctx.tol(1e-13))
}

fn hilbert_json_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let mut rng = ctx.rng();
    let psi = rng.state(s.clone());
    let a = rng.operator(s);
    let psi2: StateVector = serde_json::from_str(&serde_json::to_string(&psi)?)?;
    let a2: Operator = serde_json::from_str(&serde_json::to_string(&a)?)?;
    let bad = usize::from(psi2 != psi) + usize::from(a2 != a);
    violations(bad, None)
}

// ---------------------------------------------------------------- sectors

fn sectors_eigenbasis(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    let group = s.group();
    let layout = SectorLayout::for_space(s);
    let mut rng = ctx.rng();
    let perms: Vec<Vec<usize>> = (0..group.order()).map(|g| global_translation_perm(s, g)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let h = layout.relation_tuple(rng.below(layout.relation_count()));
        let k = rng.below(group.order());
        let v = sector_state(s, &h, &group.character_at(k))?;
        for (g, perm) in perms.iter().enumerate() {
            let mut moved = vec![ZERO; s.dim()];
            for (x, a) in v.amplitudes().iter().enumerate() {
                moved[perm[x]] = *a;
            }
            let chi = group.character_value(k, g);
            for (m, a) in moved.iter().zip(v.amplitudes()) {
                worst = worst.max((m - chi * a).norm());
            }
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn sectors_completeness(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let layout = SectorLayout::for_space(&s);
    let n = layout.order();
    let basis = change_of_basis(&s);
    let d = s.dim();
    // Columns of sector r must vanish outside the members of r; within a
    // sector the n×n Gram block must be the identity.
    let mut worst: f64 = 0.0;
    for x in 0..d {
        let rx = layout.relation_index(x);
        for c in 0..d {
            if c / n != rx {
                worst = worst.max(basis.get(x, c).norm());
            }
        }
    }
    for r in 0..layout.relation_count() {
        for k in 0..n {
            for k2 in 0..n {
                let ip: C64 =
                    layout.members(r).iter().map(|&x| basis.get(x, r * n + k).conj() * basis.get(x, r * n + k2)).sum();
                let want = if k == k2 { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).norm());
            }
        }
    }
    at_most(worst, ctx.tol(1e-10))
}

fn sectors_coherent_average(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let avg = physical_projector_by_average(&s);
    let sum = physical_projector_by_sectors(&s);
    let n = s.group().order() as f64;
    let trace_dev = (avg.trace() - n.powi(s.particles() as i32 - 1)).norm();
    let dev = diff(&avg, &sum)?.max(diff(&avg, &physical_projector(&s))?);
    if trace_dev > ctx.tol(1e-9) {
        return Ok(Outcome::Measured {
            value: trace_dev,
            bound: Bound::AtMost(ctx.tol(1e-9)),
            detail: Some("trace differs from |G|^{N−1}".into()),
        });
    }
    at_most(dev, ctx.tol(1e-12))
}

fn sectors_nested_projectors(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let head = s.with_particles(s.particles() - 1)?;
    let tail = s.with_particles(1)?;
    let lhs = physical_projector(&head)
        .tensor(&Operator::identity(tail.clone()))?
        .matmul_with(&physical_projector(&s), ctx.exec())?;
    let rhs = physical_projector(&head).tensor(&physical_projector(&tail))?;
    at_most(diff(&lhs, &rhs)?, ctx.tol(1e-12))
}

// ---------------------------------------------------------------- symmetry

fn symmetry_closure(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    let group = s.group();
    let mut rng = ctx.rng();
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let (u, v) = (rng.symmetry(s.clone()), rng.symmetry(s.clone()));
        let w = u.compose(&v)?;
        for ((&a, &b), &c) in u.assignment().iter().zip(v.assignment()).zip(w.assignment()) {
            if group.compose_idx(a, b) != c {
                bad += 1;
            }
        }
        if k < 5 {
            let psi = rng.state(s.clone());
            worst = worst.max(w.apply(&psi)?.max_diff(&u.apply(&v.apply(&psi)?)?)?);
        }
    }
    if worst > ctx.tol(1e-12) {
        bad += 1;
    }
    violations(bad, None)
}

fn symmetry_sector_commutation(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let layout = SectorLayout::for_space(&s);
    let mut rng = ctx.rng();
    // [U, Π_h] has entries U[x,y](1[y∈h] − 1[x∈h]); over all h this is the
    // largest entry of U between different sectors.
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = rng.symmetry(s.clone()).to_operator();
        for x in 0..s.dim() {
            for y in 0..s.dim() {
                if layout.relation_index(x) != layout.relation_index(y) {
                    worst = worst.max(u.get(x, y).norm());
                }
            }
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn symmetry_translation_covariance(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    let group = s.group();
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = rng.symmetry(s.clone());
        let psi = rng.state(s.clone());
        for g in 0..group.order() {
            let t = crate::symmetry::SymmetryElement::global_translation(s.clone(), &group.element_at(g))?;
            let a = t.apply(&u.apply(&psi)?)?;
            let b = u.apply(&t.apply(&psi)?)?;
            worst = worst.max(a.max_diff(&b)?);
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn symmetry_membership(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let layout = SectorLayout::for_space(&s);
    let mut rng = ctx.rng();
    let mut bad = 0;
    for _ in 0..5 {
        let u = rng.symmetry(s.clone());
        match is_in_usym(&u.to_operator(), ctx.tol(1e-10)) {
            Some(found) if found.same_up_to_phase(&u) => {}
            _ => bad += 1,
        }
    }
    // swap one configuration of sector 0 with one of sector 1
    let mut perm: Vec<usize> = (0..s.dim()).collect();
    let (x, y) = (layout.members(0)[0], layout.members(1)[0]);
    perm.swap(x, y);
    let mixing = Operator::permutation(s.clone(), &perm, C64::new(1.0, 0.0))?;
    if is_in_usym(&mixing, ctx.tol(1e-10)).is_some() {
        bad += 1;
    }
    violations(bad, None)
}

fn symmetry_qrf_roundtrip(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    let np = s.particles();
    if np < 2 {
        return skipped("QRF transformations need two particles");
    }
    let red = s.with_particles(np - 1)?;
    let dense = red.dim() <= DENSE_DIM_LIMIT;
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for i in 1..=np {
        for j in 1..=np {
            let fwd = qrf_transform(s, i, j)?;
            let back = qrf_transform(s, j, i)?;
            if dense {
                let id = fwd.operator().matmul_with(&back.operator(), ctx.exec())?;
                worst = worst.max(diff(&id, &Operator::identity(red.clone()))?);
            } else {
                let phi = rng.state(red.clone());
                worst = worst.max(fwd.apply(&back.apply(&phi)?)?.max_diff(&phi)?);
            }
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn symmetry_qrf_four_particle_example(ctx: &Ctx) -> Result<Outcome> {
    let group = ctx.space().group();
    let n = group.order();
    if n.checked_pow(4).is_none_or(|d| d > 16 * DENSE_DIM_LIMIT * 4) {
        return skipped("four-particle space too large");
    }
    let s = SpaceLabel::new(group.clone(), 4)?;
    let t = qrf_transform(&s, 2, 3)?;
    let red = t.reduced_space().clone();
    let mut rng = ctx.rng();
    let mut bad = 0;
    for _ in 0..20 {
        let (g1, g3, g4) =
            (group.element_at(rng.below(n)), group.element_at(rng.below(n)), group.element_at(rng.below(n)));
        let inv3 = group.inverse(&g3)?;
        let want = [group.compose(&inv3, &g1)?, inv3.clone(), group.compose(&inv3, &g4)?];
        let out = t.apply(&StateVector::from_config(red.clone(), &[g1, g3, g4])?)?;
        if out != StateVector::from_config(red.clone(), &want)? {
            bad += 1;
        }
    }
    violations(bad, None)
}

// ---------------------------------------------------------------- invariants

fn invariants_idempotence(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let a = unit_operator(&mut rng, &s);
        for tag in AlgebraTag::ALL {
            let p = project(tag, &a, ctx.exec());
            worst = worst.max(diff(&project(tag, &p, ctx.exec()), &p)?);
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn invariants_hs_self_adjoint(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let a = unit_operator(&mut rng, &s);
        let b = unit_operator(&mut rng, &s);
        for tag in AlgebraTag::ALL {
            let lhs = a.hs_inner(&project(tag, &b, ctx.exec()))?;
            let rhs = project(tag, &a, ctx.exec()).hs_inner(&b)?;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    at_most(worst, ctx.tol(1e-10))
}

fn invariants_strict_inclusions(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let eps = ctx.tol(1e-10);
    let mut bad = Vec::new();
    let mut expect = |name: &str, op: &Operator, inside: AlgebraTag, outside: AlgebraTag| {
        if !is_member(op, inside, eps) || is_member(op, outside, eps) {
            bad.push(name.to_string());
        }
    };
    if s.group().order() >= 3 {
        expect("inv∖alg", &witness_inv_not_alg(&s)?, AlgebraTag::Inv, AlgebraTag::Alg);
    }
    expect("inv′∖inv", &witness_inv_prime_not_inv(&s)?, AlgebraTag::InvPrime, AlgebraTag::Inv);
    expect("alg∖phys", &witness_alg_not_phys(&s)?, AlgebraTag::Alg, AlgebraTag::Phys);
    let detail = (!bad.is_empty()).then(|| bad.join(", "));
    violations(bad.len(), detail)
}

fn invariants_fixed_points(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let eps = ctx.tol(1e-10);
    let mut rng = ctx.rng();
    let mut bad = 0;
    for tag in [AlgebraTag::Inv, AlgebraTag::InvPrime] {
        let gens = invariance_generators(&s, tag)?;
        for _ in 0..2 {
            let a = unit_operator(&mut rng, &s);
            let p = project(tag, &a, ctx.exec());
            // fixed points commute, a generic operator neither is fixed nor commutes
            if !commutes_with_all(&p, &gens, eps)? {
                bad += 1;
            }
            let fixed = p.approx_eq(&a, eps);
            if fixed != commutes_with_all(&a, &gens, eps)? {
                bad += 1;
            }
        }
    }
    violations(bad, None)
}

fn invariants_superselection(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(1) else { return no_dense_space(1) };
    let n = s.group().order();
    let mut rng = ctx.rng();
    let a = project_inv(&unit_operator(&mut rng, &s), ctx.exec());
    let b = to_sector_basis(&a, ctx.exec());
    let mut worst: f64 = 0.0;
    for r in 0..s.dim() {
        for c in 0..s.dim() {
            let both_trivial = r % n == 0 && c % n == 0;
            if !both_trivial && r != c {
                worst = worst.max(b.get(r, c).norm());
            }
        }
    }
    at_most(worst, ctx.tol(1e-12))
}

fn invariants_relational_isomorphism(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let np = s.particles();
    let red = s.with_particles(np - 1)?;
    let mut rng = ctx.rng();
    let exec = ctx.exec();
    let samples = ctx.samples(s.dim(), 10, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a = unit_operator(&mut rng, &red);
        let b = unit_operator(&mut rng, &red);
        let i = 1 + rng.below(np);
        let fa = relational_observable(&a, i)?;
        let fb = relational_observable(&b, i)?;
        let prod = relational_observable(&a.matmul_with(&b, exec)?, i)?;
        let fafb = fa.matmul_with(&fb, exec)?;
        worst = worst.max(diff(&prod, &fafb)?);
        worst = worst.max(diff(&relational_observable(&a.adjoint(), i)?, &fa.adjoint())?);
        let (x, y) = (rng.gaussian(), rng.gaussian());
        let mut lin = a.scale(x);
        lin.add_scaled(y, &b)?;
        let mut want = fa.scale(x);
        want.add_scaled(y, &fb)?;
        worst = worst.max(diff(&relational_observable(&lin, i)?, &want)?);
        for j in 1..=np {
            let moved = qrf_transform(&s, i, j)?.conjugate(&a)?;
            worst = worst.max(diff(&relational_observable(&moved, j)?, &fa)?);
        }
    }
    at_most(worst, ctx.tol(1e-10))
}

// ---------------------------------------------------------------- alignment

fn alignment_uniqueness(ctx: &Ctx) -> Result<Outcome> {
    let s = ctx.space();
    if s.particles() < 2 {
        return skipped("alignment needs two particles");
    }
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for _ in 0..10 {
        let psi = rng.alignable(s.clone());
        let moved = rng.symmetry(s.clone()).apply(&psi)?;
        for i in 1..=s.particles() {
            let f = align_to(&psi, i)?;
            if align_to(&psi, i)? != f {
                bad += 1;
            }
            let g = align_to(&moved, i)?;
            worst = worst.max(f.reduced_state.max_diff(&g.reduced_state)?);
        }
    }
    if bad > 0 {
        return violations(bad, Some("repeated alignment differs".into()));
    }
    at_most(worst, ctx.tol(1e-12))
}

fn alignment_projection_formula(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let layout = SectorLayout::for_space(&s);
    let n = layout.order() as f64;
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let psi = rng.alignable(s.clone());
        let alpha = decompose_alignable(&psi).ok()?.amplitude_vector(layout.relation_count());
        // Σ α_h ᾱ_j/n |h;𝟏⟩⟨j;𝟏| + Σ |α_h|²/n Π_{h;χ≠𝟏}, written entrywise
        let want = Operator::from_fn(s.clone(), ctx.exec(), |x, y| {
            let (rx, ry) = (layout.relation_index(x), layout.relation_index(y));
            let mut v = alpha[rx] * alpha[ry].conj() / (n * n);
            if rx == ry {
                let delta = if x == y { 1.0 } else { 0.0 };
                v += alpha[rx].norm_sqr() / n * (delta - 1.0 / n);
            }
            v
        });
        worst = worst.max(diff(&project_inv(&psi, ctx.exec()), &want)?);
    }
    at_most(worst, ctx.tol(1e-10))
}

fn alignment_physical_weight(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let p = physical_projector(&s);
    let n = s.group().order() as f64;
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let psi = rng.alignable(s.clone());
        let w = psi.inner(&p.apply(&psi)?)?;
        worst = worst.max((w - 1.0 / n).norm());
    }
    at_most(worst, ctx.tol(1e-12))
}

fn alignment_equivalences_agree(ctx: &Ctx) -> Result<Outcome> {
    let Some(s) = ctx.dense_space(2) else { return no_dense_space(2) };
    let layout = SectorLayout::for_space(&s);
    let eps = ctx.tol(1e-10);
    let exec = ctx.exec();
    let mut rng = ctx.rng();
    let mut bad = 0;
    for k in 0..6 {
        let psi = rng.alignable(s.clone());
        let other = if k % 2 == 0 {
            rng.symmetry(s.clone()).apply(&psi)?
        } else {
            // move one occupied sector's amplitude by a relative phase
            let dec = decompose_alignable(&psi).ok()?;
            let mut amps = psi.amplitudes().to_vec();
            let c = dec.coefficients().values().next().expect("sector 0 occupied");
            if dec.coefficients().len() < 2 {
                // a single sector carries no relative phase; occupy a second one
                let x = layout.members(1 % layout.relation_count())[0];
                amps[x] = C64::new(0.5, 0.0);
            }
            amps[c.config] *= C64::from_polar(1.0, 1.0);
            StateVector::new(s.clone(), amps)?.normalized()?
        };
        let obs = observationally_equivalent(&project_inv(&psi, exec), &project_inv(&other, exec), eps)?;
        let sym = symmetry_equivalent_alignable(&psi, &other, eps)?;
        if obs != sym || obs != (k % 2 == 0) {
            bad += 1;
        }
    }
    violations(bad, None)
}

// ---------------------------------------------------------------- traces

/// The dense space split as `(N−1) + 1`.
fn split(ctx: &Ctx, min_small: usize) -> Option<(SpaceLabel, SpaceLabel)> {
    let large = ctx.dense_space(min_small + 1)?;
    let small = large.with_particles(large.particles() - 1).ok()?;
    Some((small, large))
}

fn embedding_kinds(rng: &mut Rng, small: &SpaceLabel) -> Vec<EmbeddingKind> {
    let mut kinds: Vec<EmbeddingKind> = (1..=small.particles()).map(EmbeddingKind::Particle).collect();
    if small.group().is_cyclic() {
        let masses = (0..small.particles()).map(|_| rng.uniform(0.5, 3.0)).collect();
        kinds.push(EmbeddingKind::CenterOfMass { masses, chart: ResidueChart::Centered });
    }
    kinds.push(EmbeddingKind::Custom(rng.symmetry(small.clone())));
    kinds.push(EmbeddingKind::Relational);
    kinds
}

fn traces_adjoint(ctx: &Ctx) -> Result<Outcome> {
    let Some((small, large)) = split(ctx, 1) else { return no_dense_space(2) };
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for kind in embedding_kinds(&mut rng, &small) {
        let spec = EmbeddingSpec::new(kind, small.clone(), 1)?;
        let a = unit_operator(&mut rng, &small);
        let rho = unit_operator(&mut rng, &large);
        let lhs = spec.embed(&a, false, ctx.exec())?.hs_inner(&rho)?;
        let rhs = a.hs_inner(&spec.trace(&rho, ctx.exec())?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    at_most(worst, ctx.tol(1e-10))
}

fn traces_embedding_homomorphism(ctx: &Ctx) -> Result<Outcome> {
    let Some((small, _)) = split(ctx, 1) else { return no_dense_space(2) };
    let mut rng = ctx.rng();
    let exec = ctx.exec();
    let mut worst: f64 = 0.0;
    for kind in embedding_kinds(&mut rng, &small) {
        let domain = if kind == EmbeddingKind::Relational { AlgebraTag::Phys } else { AlgebraTag::Alg };
        let spec = EmbeddingSpec::new(kind, small.clone(), 1)?;
        let a = project(domain, &unit_operator(&mut rng, &small), exec);
        let b = project(domain, &unit_operator(&mut rng, &small), exec);
        let fa = spec.embed(&a, true, exec)?;
        let fb = spec.embed(&b, true, exec)?;
        let fab = spec.embed(&a.matmul_with(&b, exec)?, true, exec)?;
        worst = worst.max(diff(&fab, &fa.matmul_with(&fb, exec)?)?);
        worst = worst.max(diff(&spec.embed(&a.adjoint(), true, exec)?, &fa.adjoint())?);
    }
    at_most(worst, ctx.tol(1e-10))
}

fn traces_factorization(ctx: &Ctx) -> Result<Outcome> {
    let Some((_, large)) = split(ctx, 1) else { return no_dense_space(2) };
    let mut rng = ctx.rng();
    let exec = ctx.exec();
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let rho = unit_operator(&mut rng, &large);
        let composed = project_phys(&partial_trace_last(&project_phys(&rho, exec), 1)?, exec);
        worst = worst.max(diff(&trel(&rho, 1, exec)?, &composed)?);
    }
    at_most(worst, ctx.tol(1e-12))
}

fn traces_norm_reduction(ctx: &Ctx) -> Result<Outcome> {
    let Some((small, large)) = split(ctx, 1) else { return no_dense_space(2) };
    let group = large.group();
    let trivial = group.character_at(0);
    let ll = SectorLayout::for_space(&large);
    let n = group.order() as f64;
    let ns = small.particles();
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..6 {
        let h = ll.relation_tuple(rng.below(ll.relation_count()));
        let j = ll.relation_tuple(rng.below(ll.relation_count()));
        let op = sector_state(&large, &h, &trivial)?.outer(&sector_state(&large, &j, &trivial)?)?;
        let got = trel(&op, 1, ctx.exec())?;
        // with one traced particle h_M is a single element, always a
        // translate of j_M
        let head =
            |t: &crate::sectors::RelationTuple| crate::sectors::RelationTuple::new(t.relations()[..ns - 1].to_vec());
        let want = sector_state(&small, &head(&h), &trivial)?
            .outer(&sector_state(&small, &head(&j), &trivial)?)?
            .scale(C64::new(1.0 / n, 0.0));
        worst = worst.max(diff(&got, &want)?);
    }
    at_most(worst, ctx.tol(1e-12))
}

fn traces_product_consistency(ctx: &Ctx) -> Result<Outcome> {
    let Some((small, large)) = split(ctx, 1) else { return no_dense_space(2) };
    let tail = large.with_particles(1)?;
    let exec = ctx.exec();
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for k in 0..ctx.samples(large.dim(), 20, 4) {
        let rn = project_phys(&rng.density(small.clone(), 1 + k % 3), exec);
        let rm = project_phys(&rng.density(tail.clone(), 1 + k % 2), exec);
        let joint = rn.tensor(&rm)?;
        let want = rn.scale(rm.trace());
        worst = worst.max(diff(&trel(&joint, 1, exec)?, &want)?);
    }
    at_most(worst, ctx.tol(1e-10))
}

fn traces_naive_not_multiplicative(ctx: &Ctx) -> Result<Outcome> {
    let Some((small, _)) = split(ctx, 2) else {
        return skipped("needs at least two particles in the embedded space");
    };
    at_least(naive_physical_embedding_counterexample(&small, 1, false)?.defect, 0.01)
}

// ---------------------------------------------------------------- paradox

fn reference_paradox(theta: f64) -> Result<ParadoxConfig> {
    ParadoxConfig::with_masses(16, 3, 2, 5, theta, (2.0, 3.0))
}

fn paradox_theta_table(_ctx: &Ctx) -> Result<Outcome> {
    let report = run_paradox(&reference_paradox(FRAC_PI_2)?)?;
    let wrong: Vec<String> = report
        .methods
        .iter()
        .filter(|m| m.theta_visible != m.method.expected_theta_visible())
        .map(|m| m.method.to_string())
        .collect();
    let detail = (!wrong.is_empty()).then(|| format!("unexpected visibility: {}", wrong.join(", ")));
    violations(wrong.len(), detail)
}

fn paradox_frame_invariance(ctx: &Ctx) -> Result<Outcome> {
    let report = run_paradox(&reference_paradox(FRAC_PI_2)?)?;
    let worst = report
        .methods
        .iter()
        .filter(|m| m.method != TraceMethod::Standard)
        .map(|m| m.frame_deviation)
        .fold(0.0, f64::max);
    at_most(worst, ctx.tol(1e-10))
}

fn paradox_standard_frame_dependence(_ctx: &Ctx) -> Result<Outcome> {
    let cfg = reference_paradox(FRAC_PI_2)?;
    let report = crate::paradox::run_paradox_with(&cfg, &[TraceMethod::Standard], Execution::default())?;
    at_least(report.methods[0].frame_deviation, 0.1)
}

fn paradox_relational_recovery(ctx: &Ctx) -> Result<Outcome> {
    let cfg = reference_paradox(FRAC_PI_2)?;
    let report = crate::paradox::run_paradox_with(&cfg, &[TraceMethod::Trel], ctx.exec())?;
    let psi = build_two_particle_state(&cfg);
    let cond = &report.methods[0].output;
    let dev = diff(cond, &project_phys(&psi, ctx.exec()))?;
    let n = cfg.n as f64;
    let trel_op = report.trel.as_ref().expect("relational method ran");
    let coh = (sector_coherence(&cfg, trel_op)?.norm() - 1.0 / (2.0 * n * n)).abs();
    if coh > ctx.tol(1e-12) {
        return Ok(Outcome::Measured {
            value: coh,
            bound: Bound::AtMost(ctx.tol(1e-12)),
            detail: Some("Trel coherence differs from 1/(2n²)".into()),
        });
    }
    at_most(dev, ctx.tol(1e-10))
}

fn paradox_com_projection(ctx: &Ctx) -> Result<Outcome> {
    let cfg = reference_paradox(FRAC_PI_2)?;
    let report = crate::paradox::run_paradox_with(&cfg, &[TraceMethod::Com], ctx.exec())?;
    let want = project_inv(&build_two_particle_state(&cfg), ctx.exec());
    at_most(diff(&report.methods[0].output, &want)?, ctx.tol(1e-10))
}

fn paradox_conditional_expectations(ctx: &Ctx) -> Result<Outcome> {
    let cfg = reference_paradox(FRAC_PI_2)?;
    let exec = ctx.exec();
    let report = crate::paradox::run_paradox_with(&cfg, &[TraceMethod::Trel], exec)?;
    let cond = &report.methods[0].output;
    let reference = project_inv(&build_two_particle_state(&cfg), exec);
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a = project_phys(&unit_operator(&mut rng, &cfg.space(2)), exec);
        let got = a.hs_inner(cond)?;
        let want = a.hs_inner(&reference)?;
        worst = worst.max((got - want).norm());
    }
    at_most(worst, ctx.tol(1e-9))
}

fn paradox_embedding_dependence(ctx: &Ctx) -> Result<Outcome> {
    let cfg = reference_paradox(FRAC_PI_2)?;
    let exec = ctx.exec();
    let report = crate::paradox::run_paradox_with(&cfg, &[TraceMethod::Trinv1, TraceMethod::Com], exec)?;
    // Raw outputs differ only by coherences of size 1/(2n); compare their
    // relational parts conditioned to unit trace instead.
    let conditioned = |op: &Operator| {
        let p = project_phys(op, exec);
        let t = p.trace();
        p.scale(C64::new(1.0, 0.0) / t)
    };
    let d = conditioned(&report.methods[0].output).sub(&conditioned(&report.methods[1].output))?.frobenius_norm();
    at_least(d, 0.1)
}

fn paradox_angelo_expectation(ctx: &Ctx) -> Result<Outcome> {
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let theta = rng.angle();
        let got = angelo_t_expectation(&reference_paradox(theta)?);
        worst = worst.max((got - C64::from_polar(0.5, theta)).norm());
    }
    at_most(worst, ctx.tol(1e-12))
}

// ---------------------------------------------------------------- brute force

fn usym_size(space: &SpaceLabel) -> Option<usize> {
    let n = space.group().order();
    let relations = n.checked_pow(space.particles().checked_sub(1)? as u32)?;
    n.checked_pow(relations as u32)
}

fn bruteforce_guard(ctx: &Ctx) -> Option<Result<Outcome>> {
    match usym_size(ctx.space()) {
        Some(k) if k <= BRUTEFORCE_CAP && ctx.space().dim() <= DENSE_DIM_LIMIT => None,
        _ => Some(skipped(format!("|U_sym| exceeds the brute-force cap {BRUTEFORCE_CAP}"))),
    }
}

fn bruteforce_usym_enumeration(ctx: &Ctx) -> Result<Outcome> {
    if let Some(skip) = bruteforce_guard(ctx) {
        return skip;
    }
    let s = ctx.space();
    let all = enumerate_usym(s, BRUTEFORCE_CAP)?;
    let mut bad = usize::from(Some(all.len()) != usym_size(s));
    for u in &all {
        if is_in_usym(&u.to_operator(), ctx.tol(1e-10)).is_none_or(|f| !f.same_up_to_phase(u)) {
            bad += 1;
        }
    }
    violations(bad, None)
}

fn bruteforce_twirl(ctx: &Ctx) -> Result<Outcome> {
    if let Some(skip) = bruteforce_guard(ctx) {
        return skip;
    }
    let s = ctx.space();
    let mut rng = ctx.rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.operator(s.clone());
        worst = worst.max(diff(&twirl_oracle(&a, BRUTEFORCE_CAP)?, &project_inv(&a, ctx.exec()))?);
    }
    at_most(worst, ctx.tol(1e-11))
}

fn bruteforce_commutant(ctx: &Ctx) -> Result<Outcome> {
    if let Some(skip) = bruteforce_guard(ctx) {
        return skip;
    }
    let s = ctx.space();
    let all = enumerate_usym(s, BRUTEFORCE_CAP)?;
    let mut rng = ctx.rng();
    let p = project_inv(&rng.operator(s.clone()), ctx.exec());
    let mut worst: f64 = 0.0;
    for u in &all {
        worst = worst.max(diff(&u.conjugate(&p)?, &p)?);
    }
    at_most(worst, ctx.tol(1e-12))
}
