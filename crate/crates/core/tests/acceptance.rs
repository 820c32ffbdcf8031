//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qrflab::exec::Execution;
use qrflab::invariants::{project_inv, relational_observable};
use qrflab::paradox::{
    angelo_t_expectation, build_two_particle_state, run_paradox, sector_coherence, ParadoxConfig, TraceMethod,
};
use qrflab::random::Rng;
use qrflab::sectors::{physical_projector_by_average, physical_projector_by_sectors, project_phys};
use qrflab::symmetry::{qrf_transform, ResidueChart};
use qrflab::traces::{naive_physical_embedding_counterexample, trel, EmbeddingKind, EmbeddingSpec};
use qrflab::verify::{run_suite, CheckStatus, VerifyConfig};
use qrflab::{Operator, SpaceLabel, StateVector, C64};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn space(g: &str, n: usize) -> SpaceLabel {
    SpaceLabel::new(g.parse().unwrap(), n).unwrap()
}

fn within(label: &str, value: f64, tol: f64) -> Result<String, String> {
    if value <= tol {
        Ok(format!("{label} {value:.2e} ≤ {tol:.0e}"))
    } else {
        Err(format!("{label} {value:.2e} > {tol:.0e}"))
    }
}

fn all(parts: Vec<Result<String, String>>) -> Verdict {
    let (ok, bad): (Vec<_>, Vec<_>) = parts.into_iter().partition(|p| p.is_ok());
    if bad.is_empty() {
        Ok(ok.into_iter().map(Result::unwrap).collect::<Vec<_>>().join("; "))
    } else {
        Err(bad.into_iter().map(Result::unwrap_err).collect::<Vec<_>>().join("; "))
    }
}

fn unit(rng: &mut Rng, s: &SpaceLabel) -> Operator {
    let a = rng.operator(s.clone());
    let f = a.frobenius_norm();
    a.scale(C64::new(1.0 / f, 0.0))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cfg = ParadoxConfig::with_masses(16, 3, 2, 5, FRAC_PI_2, (2.0, 3.0)).map_err(|e| e.to_string())?;
    let report = run_paradox(&cfg).map_err(|e| e.to_string())?;
    let exec = Execution::default();
    let psi = build_two_particle_state(&cfg);
    let out = |m| &report.outcome(m).unwrap().output;
    let theta_dev = |m| report.outcome(m).unwrap().theta_deviation;
    let n = cfg.n as f64;
    let coherence = sector_coherence(&cfg, report.trel.as_ref().unwrap()).unwrap().norm();
    let elapsed = start.elapsed();
    all(vec![
        within("standard θ-dependence", theta_dev(TraceMethod::Standard), 1e-10),
        within("trinv1 θ-dependence", theta_dev(TraceMethod::Trinv1), 1e-10),
        within("CoM vs Π_inv(ψ)", out(TraceMethod::Com).max_diff(&project_inv(&psi, exec)).unwrap(), 1e-10),
        within(
            "conditional Trel vs Π_phys ψ Π_phys",
            out(TraceMethod::Trel).max_diff(&project_phys(&psi, exec)).unwrap(),
            1e-10,
        ),
        within("|Trel coherence − 1/512|", (coherence - 1.0 / (2.0 * n * n)).abs(), 1e-12),
        if report.matches_expected_table() { Ok("table matches".into()) } else { Err("table mismatch".into()) },
        if elapsed < Duration::from_secs(10) {
            Ok(format!("{:.2}s", elapsed.as_secs_f64()))
        } else {
            Err(format!("runtime {:.2}s ≥ 10s", elapsed.as_secs_f64()))
        },
    ])
}

fn criterion_2() -> Verdict {
    let mut rng = Rng::seeded(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let theta = rng.angle();
        let cfg = ParadoxConfig::new(16, 3, 2, 5, theta).unwrap();
        worst = worst.max((angelo_t_expectation(&cfg) - C64::from_polar(0.5, theta)).norm());
    }
    within("max |⟨T⟩ − ½e^{iθ}|", worst, 1e-12)
}

fn criterion_3() -> Verdict {
    let mut parts = Vec::new();
    for (g, np) in [("Z6", 2), ("Z8", 3), ("Z2xZ3", 2)] {
        let s = space(g, np);
        let avg = physical_projector_by_average(&s);
        let sum = physical_projector_by_sectors(&s);
        let order = s.group().order() as f64;
        parts.push(within(&format!("{g} N={np} average vs sectors"), avg.max_diff(&sum).unwrap(), 1e-12));
        let tr = (avg.trace() - order.powi(np as i32 - 1)).norm();
        parts.push(within(&format!("{g} N={np} trace"), tr, 1e-9));
    }
    all(parts)
}

fn criterion_4() -> Verdict {
    let mut parts = Vec::new();
    let mut rng = Rng::seeded(4);
    for (g, np) in [("Z2", 2), ("Z2", 3), ("Z3", 2)] {
        let s = space(g, np);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let a = rng.operator(s.clone());
            let twirl = qrflab::invariants::twirl_oracle(&a, 1 << 12).map_err(|e| e.to_string())?;
            worst = worst.max(twirl.max_diff(&project_inv(&a, Execution::default())).unwrap());
        }
        parts.push(within(&format!("{g} N={np} twirl"), worst, 1e-11));
    }
    all(parts)
}

fn criterion_5() -> Verdict {
    let s = space("Z5", 3);
    let red = s.with_particles(2).unwrap();
    let mut rng = Rng::seeded(5);
    let (mut prod, mut adj, mut lin, mut cov) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let a = unit(&mut rng, &red);
        let b = unit(&mut rng, &red);
        let i = 1 + k % 3;
        let f = |x: &Operator| relational_observable(x, i).unwrap();
        let (fa, fb) = (f(&a), f(&b));
        prod = prod.max(f(&a.matmul(&b).unwrap()).max_diff(&fa.matmul(&fb).unwrap()).unwrap());
        adj = adj.max(f(&a.adjoint()).max_diff(&fa.adjoint()).unwrap());
        let (x, y) = (rng.gaussian(), rng.gaussian());
        let mut combo = a.scale(x);
        combo.add_scaled(y, &b).unwrap();
        let mut want = fa.scale(x);
        want.add_scaled(y, &fb).unwrap();
        lin = lin.max(f(&combo).max_diff(&want).unwrap());
    }
    for _ in 0..5 {
        let a = unit(&mut rng, &red);
        for i in 1..=3 {
            let fa = relational_observable(&a, i).unwrap();
            for j in 1..=3 {
                let moved = qrf_transform(&s, i, j).unwrap().conjugate(&a).unwrap();
                cov = cov.max(relational_observable(&moved, j).unwrap().max_diff(&fa).unwrap());
            }
        }
    }
    all(vec![
        within("products", prod, 1e-10),
        within("adjoints", adj, 1e-10),
        within("linear combinations", lin, 1e-10),
        within("frame covariance", cov, 1e-10),
    ])
}

fn criterion_6() -> Verdict {
    let ce = naive_physical_embedding_counterexample(&space("Z4", 2), 1, false).map_err(|e| e.to_string())?;
    if ce.defect > 0.01 {
        Ok(format!("defect {:.3} > 0.01", ce.defect))
    } else {
        Err(format!("defect {:.3e} ≤ 0.01", ce.defect))
    }
}

fn criterion_7() -> Verdict {
    let mut worst: f64 = 0.0;
    for (g, np) in [("Z3", 3), ("Z2xZ2", 3), ("Z5", 4), ("Z4", 2)] {
        let s = space(g, np);
        let red = s.with_particles(np - 1).unwrap();
        for i in 1..=np {
            for j in 1..=np {
                let id = qrf_transform(&s, i, j)
                    .unwrap()
                    .operator()
                    .matmul(&qrf_transform(&s, j, i).unwrap().operator())
                    .unwrap();
                worst = worst.max(id.max_diff(&Operator::identity(red.clone())).unwrap());
            }
        }
    }
    // V_{2→3}|g1,g3,g4⟩ = |g3⁻¹g1, g3⁻¹, g3⁻¹g4⟩ for every input on Z5
    let s = space("Z5", 4);
    let group = s.group().clone();
    let t = qrf_transform(&s, 2, 3).unwrap();
    let red = t.reduced_space().clone();
    let mut mismatches = 0;
    for x in 0..red.dim() {
        let c = red.config_of(x);
        let inv = group.inverse(&c[1]).unwrap();
        let want = vec![group.compose(&inv, &c[0]).unwrap(), inv.clone(), group.compose(&inv, &c[2]).unwrap()];
        let got = t.apply(&StateVector::basis(red.clone(), x).unwrap()).unwrap();
        if got != StateVector::from_config(red.clone(), &want).unwrap() {
            mismatches += 1;
        }
    }
    all(vec![
        within("max |V_{i→j}V_{j→i} − 𝟏|", worst, 1e-12),
        if mismatches == 0 {
            Ok(format!("four-particle example exact on all {} inputs", red.dim()))
        } else {
            Err(format!("four-particle example wrong on {mismatches} inputs"))
        },
    ])
}

fn criterion_8() -> Verdict {
    let small = space("Z6", 2);
    let tail = space("Z6", 1);
    let large = space("Z6", 3);
    let exec = Execution::default();
    let mut rng = Rng::seeded(8);
    let mut product: f64 = 0.0;
    for k in 0..20 {
        let rn = rng.density(small.clone(), 1 + k % 3);
        let rm = rng.density(tail.clone(), 1 + k % 2);
        let joint = project_phys(&rn.tensor(&rm).unwrap(), exec);
        let want = project_phys(&rn, exec).scale(project_phys(&rm, exec).trace());
        product = product.max(trel(&joint, 1, exec).unwrap().max_diff(&want).unwrap());
    }
    let kinds = vec![
        EmbeddingKind::Particle(1),
        EmbeddingKind::Particle(2),
        EmbeddingKind::CenterOfMass { masses: vec![2.0, 3.0], chart: ResidueChart::Centered },
        EmbeddingKind::CenterOfMass { masses: vec![1.0, 1.0], chart: ResidueChart::Canonical },
        EmbeddingKind::Custom(rng.symmetry(small.clone())),
        EmbeddingKind::Relational,
    ];
    let mut adjoint: f64 = 0.0;
    for kind in kinds {
        let spec = EmbeddingSpec::new(kind, small.clone(), 1).unwrap();
        for _ in 0..3 {
            let a = unit(&mut rng, &small);
            let rho = unit(&mut rng, &large);
            let lhs = spec.embed(&a, false, exec).unwrap().hs_inner(&rho).unwrap();
            let rhs = a.hs_inner(&spec.trace(&rho, exec).unwrap()).unwrap();
            adjoint = adjoint.max((lhs - rhs).norm());
        }
    }
    all(vec![within("product-state consistency", product, 1e-10), within("adjoint relation", adjoint, 1e-10)])
}

fn criterion_9() -> Verdict {
    let mut cfg = VerifyConfig::new(space("Z8", 3));
    // one core
    cfg.exec = Execution::Sequential;
    cfg.seed = 9;
    let start = Instant::now();
    let result = run_suite(&cfg, |_| {}).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let failed: Vec<_> = result.failures().map(|c| c.name.clone()).collect();
    let passed = result.count(CheckStatus::Pass);
    let skipped = result.count(CheckStatus::Skipped);
    if !failed.is_empty() {
        return Err(format!("failed: {}", failed.join(", ")));
    }
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("runtime {:.1}s ≥ 60s", elapsed.as_secs_f64()));
    }
    Ok(format!("{passed} passed, {skipped} skipped, {:.1}s on one core", elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("paradox table", criterion_1),
        ("Angelo expectation", criterion_2),
        ("coherent average", criterion_3),
        ("brute-force twirl", criterion_4),
        ("relational isomorphism", criterion_5),
        ("naive embedding not multiplicative", criterion_6),
        ("QRF round trips", criterion_7),
        ("relational-trace consistency", criterion_8),
        ("full suite Z8 N=3", criterion_9),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} FAIL {name}: {detail}", k + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
