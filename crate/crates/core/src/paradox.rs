//! The third-particle phase paradox on `Z_n`.
//!
//! Two particles are prepared in
//!
//! ```text
//! |ψ⟩ = (|−a⟩|b⟩ + e^{iθ}|a⟩|−b⟩) / √2
//! ```
//!
//! and a third one independently in `|c⟩`. Read relative to particle 1 the
//! joint state entangles particles 2 and 3, and the ordinary partial trace
//! over particle 3 loses `θ`. This module builds both descriptions and runs
//! every trace variant on them, recording whether `θ` survives.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::group::GroupSpec;
use crate::hilbert::{partial_trace_last, Density, Operator, SpaceLabel, StateVector, C64, ZERO};
use crate::sectors::{relation_of, sector_state, RelationTuple};
use crate::symmetry::ResidueChart;
use crate::traces::{conditional_state, relational_weight, EmbeddingKind, EmbeddingSpec};

/// Outputs whose Frobenius distance between the `θ` run and the `θ = 0` run
/// exceeds this are said to see the phase.
pub const THETA_VISIBILITY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParadoxConfig {
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub theta: f64,
    /// `(m_1, m_2)` for the center-of-mass embedding.
    pub masses: (f64, f64),
}

impl ParadoxConfig {
    /// Masses default to `(b, a)` divided by their gcd, so `m_1 a = m_2 b`.
    pub fn new(n: usize, a: usize, b: usize, c: usize, theta: f64) -> Result<Self> {
        let g = gcd(a, b).max(1);
        Self::with_masses(n, a, b, c, theta, ((b / g) as f64, (a / g) as f64))
    }

    pub fn with_masses(n: usize, a: usize, b: usize, c: usize, theta: f64, masses: (f64, f64)) -> Result<Self> {
        let cfg = ParadoxConfig { n, a, b, c, theta, masses };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::domain(format!("paradox needs n ≥ 2, got {n}")));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if v >= n {
                return Err(Error::domain(format!("{name} = {v} is not in [0, {n})")));
            }
        }
        if self.a == 0 {
            return Err(Error::domain("a must be nonzero"));
        }
        // a ≠ 0 still allows |−a,b⟩ = |a,−b⟩ when a = b = n/2 or a = n/2, b = 0
        if (2 * self.a).is_multiple_of(n) && (2 * self.b).is_multiple_of(n) {
            return Err(Error::domain("the two branches of the state coincide"));
        }
        if !self.theta.is_finite() {
            return Err(Error::domain("theta must be finite"));
        }
        let (m1, m2) = self.masses;
        if !(m1.is_finite() && m2.is_finite()) || m1 < 0.0 || m2 < 0.0 || m1 + m2 <= 0.0 {
            return Err(Error::domain("masses must be nonnegative with positive sum"));
        }
        Ok(())
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        ParadoxConfig { theta, ..self.clone() }
    }

    pub fn group(&self) -> GroupSpec {
        GroupSpec::cyclic(self.n).expect("validated n ≥ 2")
    }

    pub fn space(&self, particles: usize) -> SpaceLabel {
        SpaceLabel::new(self.group(), particles).expect("particles ≥ 1")
    }

    /// Whether `m_1 a = m_2 b`, the condition under which the
    /// center-of-mass trace keeps `θ`.
    pub fn mass_condition_holds(&self) -> bool {
        let (m1, m2) = self.masses;
        (m1 * self.a as f64 - m2 * self.b as f64).abs() <= 1e-12 * (m1 + m2).max(1.0) * self.n as f64
    }

    /// `2(a + b) ≡ 0 (mod n)`: the two relation sectors `±(a+b)` coincide and
    /// the comparison with the translation `T` degenerates.
    pub fn is_degenerate(&self) -> bool {
        (2 * (self.a + self.b)).is_multiple_of(self.n)
    }

    fn neg(&self, x: usize) -> usize {
        (self.n - x % self.n) % self.n
    }

    fn add(&self, x: usize, y: usize) -> usize {
        (x + y) % self.n
    }

    fn phase(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }
}

fn gcd(mut x: usize, mut y: usize) -> usize {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

fn superposition(space: SpaceLabel, first: &[usize], second: &[usize], phase: C64) -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![ZERO; space.dim()];
    amps[space.index_from_digits(first)] += C64::new(s, 0.0);
    amps[space.index_from_digits(second)] += phase * s;
    StateVector::new(space, amps).expect("length matches the space")
}

/// `(|−a⟩|b⟩ + e^{iθ}|a⟩|−b⟩) / √2`.
pub fn build_two_particle_state(cfg: &ParadoxConfig) -> StateVector {
    let (a, b) = (cfg.a, cfg.b);
    superposition(cfg.space(2), &[cfg.neg(a), b], &[a, cfg.neg(b)], cfg.phase())
}

/// `Ψ = ψ ⊗ |c⟩` and its description relative to particle 1,
/// `Ψ′ = |0⟩ ⊗ (|a+b⟩|a+c⟩ + e^{iθ}|−a−b⟩|c−a⟩) / √2`.
pub fn build_three_particle_state(cfg: &ParadoxConfig) -> (StateVector, StateVector) {
    let (a, b, c) = (cfg.a, cfg.b, cfg.c);
    let psi = superposition(cfg.space(3), &[cfg.neg(a), b, c], &[a, cfg.neg(b), c], cfg.phase());
    let ab = cfg.add(a, b);
    let psi_prime =
        superposition(cfg.space(3), &[0, ab, cfg.add(a, c)], &[0, cfg.neg(ab), cfg.add(c, cfg.neg(a))], cfg.phase());
    (psi, psi_prime)
}

/// Permutation of the translation `T|g_1,g_2⟩ = |g_1 − 2a, g_2 + 2b⟩`.
fn angelo_t_perm(cfg: &ParadoxConfig, particles: usize) -> Vec<usize> {
    let space = cfg.space(particles);
    let shift1 = cfg.neg((2 * cfg.a) % cfg.n);
    let shift2 = (2 * cfg.b) % cfg.n;
    (0..space.dim())
        .map(|x| {
            let mut d = space.digits(x);
            d[0] = cfg.add(d[0], shift1);
            d[1] = cfg.add(d[1], shift2);
            space.index_from_digits(&d)
        })
        .collect()
}

/// `T` on two particles.
pub fn angelo_t(cfg: &ParadoxConfig) -> Operator {
    Operator::permutation(cfg.space(2), &angelo_t_perm(cfg, 2), C64::new(1.0, 0.0)).expect("valid permutation")
}

/// `T ⊗ 𝟏` on three particles.
pub fn angelo_t_embedded(cfg: &ParadoxConfig) -> Operator {
    Operator::permutation(cfg.space(3), &angelo_t_perm(cfg, 3), C64::new(1.0, 0.0)).expect("valid permutation")
}

/// `⟨ψ|T|ψ⟩`, which equals `½e^{iθ}` unless the configuration is degenerate.
pub fn angelo_t_expectation(cfg: &ParadoxConfig) -> C64 {
    let space = cfg.space(2);
    let perm = angelo_t_perm(cfg, 2);
    let branches = [
        (space.index_from_digits(&[cfg.neg(cfg.a), cfg.b]), C64::new(1.0, 0.0)),
        (space.index_from_digits(&[cfg.a, cfg.neg(cfg.b)]), cfg.phase()),
    ];
    // ψ = Σ_k c_k |x_k⟩ / √2, so ⟨ψ|T|ψ⟩ = ½ Σ_{k,l} c̄_k c_l [T x_l = x_k]
    let mut s = ZERO;
    for &(xk, ck) in &branches {
        for &(xl, cl) in &branches {
            if perm[xl] == xk {
                s += ck.conj() * cl;
            }
        }
    }
    s * 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    /// Ordinary partial trace of `Ψ′` over particle 3.
    Standard,
    /// Invariant trace with the embedding relative to particle 1.
    Trinv1,
    /// Invariant trace with the center-of-mass embedding.
    Com,
    /// Relational trace, normalized to the conditional state.
    Trel,
}

impl TraceMethod {
    pub const ALL: [TraceMethod; 4] = [TraceMethod::Standard, TraceMethod::Trinv1, TraceMethod::Com, TraceMethod::Trel];

    /// Whether `θ` survives this method when `m_1 a = m_2 b`.
    pub fn expected_theta_visible(self) -> bool {
        matches!(self, TraceMethod::Com | TraceMethod::Trel)
    }
}

impl fmt::Display for TraceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceMethod::Standard => "standard",
            TraceMethod::Trinv1 => "trinv1",
            TraceMethod::Com => "com",
            TraceMethod::Trel => "trel",
        })
    }
}

impl std::str::FromStr for TraceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TraceMethod::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::structural(format!("unknown trace method {s:?}")))
    }
}

/// Two-particle output of one method on `Ψ` (on `Ψ′` for the standard trace).
pub fn reduce(cfg: &ParadoxConfig, method: TraceMethod, state: &StateVector, exec: Execution) -> Result<Operator> {
    let small = cfg.space(2);
    match method {
        TraceMethod::Standard => partial_trace_last(state, 1),
        TraceMethod::Trinv1 => EmbeddingSpec::new(EmbeddingKind::Particle(1), small, 1)?.trace(state, exec),
        TraceMethod::Com => {
            let kind =
                EmbeddingKind::CenterOfMass { masses: vec![cfg.masses.0, cfg.masses.1], chart: ResidueChart::Centered };
            EmbeddingSpec::new(kind, small, 1)?.trace(state, exec)
        }
        TraceMethod::Trel => conditional_state(state, 1, crate::DEFAULT_EPS, exec),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: TraceMethod,
    pub theta_visible: bool,
    /// Frobenius distance between the outputs at `θ` and at `0`.
    pub theta_deviation: f64,
    /// Max entry difference between the outputs on `Ψ` and on `Ψ′`.
    pub frame_deviation: f64,
    pub output: Operator,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AngeloComparison {
    pub expectation: C64,
    pub expected: C64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParadoxReport {
    pub config: ParadoxConfig,
    pub mass_condition_holds: bool,
    /// `⟨Ψ|Π_phys|Ψ⟩`, equal to `1/n` for the alignable `Ψ`.
    pub relational_weight: f64,
    /// Unnormalized `Trel(|Ψ⟩⟨Ψ|)`; present when the relational method ran.
    pub trel: Option<Operator>,
    pub methods: Vec<MethodOutcome>,
    pub angelo: AngeloComparison,
}

impl ParadoxReport {
    pub fn outcome(&self, method: TraceMethod) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.method == method)
    }

    /// Every method that ran shows `θ` exactly when expected.
    pub fn matches_expected_table(&self) -> bool {
        self.methods
            .iter()
            .all(|m| m.theta_visible == (m.method.expected_theta_visible() && self.theta_is_nontrivial()))
    }

    fn theta_is_nontrivial(&self) -> bool {
        let t = self.config.theta.rem_euclid(std::f64::consts::TAU);
        t.min(std::f64::consts::TAU - t) > THETA_VISIBILITY_THRESHOLD
    }
}

/// Runs all four methods.
pub fn run_paradox(cfg: &ParadoxConfig) -> Result<ParadoxReport> {
    run_paradox_with(cfg, &TraceMethod::ALL, Execution::default())
}

pub fn run_paradox_with(cfg: &ParadoxConfig, methods: &[TraceMethod], exec: Execution) -> Result<ParadoxReport> {
    cfg.validate()?;
    let reference = cfg.with_theta(0.0);
    let (psi, psi_prime) = build_three_particle_state(cfg);
    let (psi0, psi0_prime) = build_three_particle_state(&reference);

    let mut outcomes = Vec::with_capacity(methods.len());
    for &method in methods {
        let (main, main0, other) = match method {
            TraceMethod::Standard => (&psi_prime, &psi0_prime, &psi),
            _ => (&psi, &psi0, &psi_prime),
        };
        let output = reduce(cfg, method, main, exec)?;
        let at_zero = reduce(&reference, method, main0, exec)?;
        let theta_deviation = output.sub(&at_zero)?.frobenius_norm();
        let frame_deviation = output.max_diff(&reduce(cfg, method, other, exec)?)?;
        outcomes.push(MethodOutcome {
            method,
            theta_visible: theta_deviation > THETA_VISIBILITY_THRESHOLD,
            theta_deviation,
            frame_deviation,
            output,
        });
    }

    let trel = if methods.contains(&TraceMethod::Trel) { Some(crate::traces::trel(&psi, 1, exec)?) } else { None };
    Ok(ParadoxReport {
        config: cfg.clone(),
        mass_condition_holds: cfg.mass_condition_holds(),
        relational_weight: relational_weight(&psi),
        trel,
        methods: outcomes,
        angelo: AngeloComparison {
            expectation: angelo_t_expectation(cfg),
            expected: cfg.phase() * 0.5,
            degenerate: cfg.is_degenerate(),
        },
    })
}

/// Relation sectors `h = a + b` and `j = −a − b` occupied by `ψ`.
pub fn occupied_relations(cfg: &ParadoxConfig) -> (RelationTuple, RelationTuple) {
    let g = cfg.group();
    let e = |x: usize| g.element(&[x as i64]).expect("one residue");
    let h = relation_of(&g, &[e(cfg.neg(cfg.a)), e(cfg.b)]).expect("two particles");
    let j = relation_of(&g, &[e(cfg.a), e(cfg.neg(cfg.b))]).expect("two particles");
    (h, j)
}

/// `⟨h;𝟏|ρ|j;𝟏⟩` for a two-particle operator, with `h, j` the occupied
/// relations.
pub fn sector_coherence<D: Density + ?Sized>(cfg: &ParadoxConfig, rho: &D) -> Result<C64> {
    let space = cfg.space(2);
    space.ensure_same(rho.space())?;
    let trivial = cfg.group().character(&[0])?;
    let (h, j) = occupied_relations(cfg);
    let vh = sector_state(&space, &h, &trivial)?;
    let vj = sector_state(&space, &j, &trivial)?;
    let (ah, aj) = (vh.amplitudes(), vj.amplitudes());
    let mut s = ZERO;
    for (x, bx) in ah.iter().enumerate() {
        if bx.norm() == 0.0 {
            continue;
        }
        for (y, by) in aj.iter().enumerate() {
            if by.norm() != 0.0 {
                s += bx.conj() * rho.entry(x, y) * by;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{align_to, decompose_alignable};
    use crate::invariants::{project_inv, symmetry_equivalent_alignable};
    use crate::sectors::{project_phys, SectorLayout};
    use std::f64::consts::FRAC_PI_2;

    fn cfg(theta: f64) -> ParadoxConfig {
        ParadoxConfig::new(16, 3, 2, 5, theta).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(ParadoxConfig::new(16, 0, 2, 5, 0.0).is_err());
        assert!(ParadoxConfig::new(16, 16, 2, 5, 0.0).is_err());
        assert!(ParadoxConfig::new(4, 2, 2, 0, 0.0).is_err());
        assert_eq!(cfg(0.0).masses, (2.0, 3.0));
        assert_eq!(ParadoxConfig::new(12, 4, 6, 0, 0.0).unwrap().masses, (3.0, 2.0));
        assert!(cfg(0.0).mass_condition_holds());
        assert!(!ParadoxConfig::with_masses(16, 3, 2, 5, 0.0, (1.0, 1.0)).unwrap().mass_condition_holds());
    }

    #[test]
    fn two_particle_state_occupies_opposite_relations() {
        let c = cfg(0.4);
        let psi = build_two_particle_state(&c);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        let dec = decompose_alignable(&psi).ok().unwrap();
        let layout = SectorLayout::for_space(psi.space());
        let occupied: Vec<_> =
            dec.coefficients().keys().map(|&r| layout.relation_tuple(r).relations()[0].residues()[0]).collect();
        assert_eq!(occupied, vec![5, 11]);
        assert!((dec.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn aligned_form_of_two_particle_state() {
        let c = cfg(0.4);
        let aligned = align_to(&build_two_particle_state(&c), 1).unwrap();
        let amps = aligned.reduced_state.amplitudes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((amps[5] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((amps[11] - C64::from_polar(s, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_superposition_when_a_equals_b() {
        let c = ParadoxConfig::new(10, 3, 3, 0, 0.0).unwrap();
        let dec = decompose_alignable(&build_two_particle_state(&c)).ok().unwrap();
        for coef in dec.coefficients().values() {
            assert!((coef.amplitude - C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn three_particle_states_are_equivalent() {
        let c = cfg(1.1);
        let (psi, psi_prime) = build_three_particle_state(&c);
        assert!(symmetry_equivalent_alignable(&psi, &psi_prime, 1e-12).unwrap());
        let aligned = align_to(&psi, 1).unwrap().reconstruct(false).unwrap();
        assert!(aligned.approx_eq(&psi_prime, 1e-14));
        let exec = Execution::default();
        assert!(project_inv(&psi, exec).approx_eq(&project_inv(&psi_prime, exec), 1e-12));
    }

    #[test]
    fn standard_trace_of_relative_description_loses_theta() {
        let r1 = partial_trace_last(&build_three_particle_state(&cfg(FRAC_PI_2)).1, 1).unwrap();
        let r0 = partial_trace_last(&build_three_particle_state(&cfg(0.0)).1, 1).unwrap();
        assert!(r1.approx_eq(&r0, 1e-14));
    }

    #[test]
    fn angelo_expectation() {
        assert!((angelo_t_expectation(&cfg(0.7)) - C64::from_polar(0.5, 0.7)).norm() < 1e-12);
        assert_eq!(angelo_t_expectation(&cfg(0.0)), C64::new(0.5, 0.0));
        let dense = build_two_particle_state(&cfg(0.7));
        let direct = dense.inner(&angelo_t(&cfg(0.7)).apply(&dense).unwrap()).unwrap();
        assert!((direct - angelo_t_expectation(&cfg(0.7))).norm() < 1e-15);
    }

    #[test]
    fn angelo_degenerate_flag() {
        assert!(!cfg(0.0).is_degenerate());
        assert!(ParadoxConfig::new(10, 3, 2, 0, 0.0).unwrap().is_degenerate());
    }

    #[test]
    fn embedded_t_shifts_both_relations() {
        let c = cfg(0.0);
        let space = c.space(3);
        let t3 = angelo_t_embedded(&c);
        let g = c.group();
        let trivial = g.character(&[0]).unwrap();
        for (h1, h2) in [(0usize, 0usize), (5, 8), (15, 3)] {
            let h = RelationTuple::new(vec![g.element(&[h1 as i64]).unwrap(), g.element(&[h2 as i64]).unwrap()]);
            let shifted = RelationTuple::new(vec![
                g.element(&[(h1 + 2 * c.a + 2 * c.b) as i64]).unwrap(),
                g.element(&[(h2 + 2 * c.a) as i64]).unwrap(),
            ]);
            let lhs = t3.apply(&sector_state(&space, &h, &trivial).unwrap()).unwrap();
            let rhs = sector_state(&space, &shifted, &trivial).unwrap();
            assert!(lhs.approx_eq(&rhs, 1e-14));
        }
    }

    #[test]
    fn expected_table() {
        let report = run_paradox(&cfg(FRAC_PI_2)).unwrap();
        let visible: Vec<_> = report.methods.iter().map(|m| (m.method, m.theta_visible)).collect();
        assert_eq!(
            visible,
            vec![
                (TraceMethod::Standard, false),
                (TraceMethod::Trinv1, false),
                (TraceMethod::Com, true),
                (TraceMethod::Trel, true),
            ]
        );
        assert!(report.matches_expected_table());
        assert!(report.outcome(TraceMethod::Standard).unwrap().frame_deviation > 0.1);
        for m in [TraceMethod::Trinv1, TraceMethod::Com, TraceMethod::Trel] {
            assert!(report.outcome(m).unwrap().frame_deviation < 1e-10, "{m}");
        }
        assert!((report.relational_weight - 1.0 / 16.0).abs() < 1e-12);
        // Ψ is not in H_phys ⊗ H_phys, so the conditional state is subnormalized
        let cond = &report.outcome(TraceMethod::Trel).unwrap().output;
        assert!((cond.trace() - C64::new(1.0 / 16.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_theta_sees_nothing() {
        let report = run_paradox(&cfg(0.0)).unwrap();
        assert!(report.methods.iter().all(|m| !m.theta_visible));
        assert!(report.matches_expected_table());
    }

    #[test]
    fn com_and_trel_reproduce_projections() {
        let c = cfg(FRAC_PI_2);
        let exec = Execution::default();
        let psi2 = build_two_particle_state(&c);
        let report = run_paradox(&c).unwrap();
        let com = &report.outcome(TraceMethod::Com).unwrap().output;
        assert!(com.approx_eq(&project_inv(&psi2, exec), 1e-10));
        let trel = report.trel.as_ref().unwrap();
        let n = c.n as f64;
        // Trel(ψ ⊗ c) = Π_phys|ψ⟩⟨ψ|Π_phys · tr(Π_phys^{(1)}|c⟩⟨c|)
        assert!(trel.approx_eq(&project_phys(&psi2, exec).scale(C64::new(1.0 / n, 0.0)), 1e-12));
        let cond = &report.outcome(TraceMethod::Trel).unwrap().output;
        assert!(cond.approx_eq(&project_phys(&psi2, exec), 1e-12));
        let coh = sector_coherence(&c, trel).unwrap();
        assert!((coh.norm() - 1.0 / (2.0 * n * n)).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in TraceMethod::ALL {
            assert_eq!(m.to_string().parse::<TraceMethod>().unwrap(), m);
        }
        assert!("bogus".parse::<TraceMethod>().is_err());
    }
}
