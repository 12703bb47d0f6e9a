//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use shilov_core::conesolver::{
    cc_test, sampled_cb_lower_bound, sampled_search_public, solve_feasibility, AffineSet, CcVerdict, ConicProgram,
    DualWitness, LinearMapSpec, SolveStatus,
};
use shilov_core::envelope::{
    certify_embedding, compute_envelope, induced_isomorphism, EnvelopeOptions, EnvelopePresentation, ScanOrder,
};
use shilov_core::funcspace::{boundary, crosscheck_diagonal, FunctionSpace};
use shilov_core::matcore::random::{random_cmatrix, random_positive_contraction, random_psd, random_unitary, rng};
use shilov_core::matcore::span::{coords, dot, orthonormalize, RankOptions};
use shilov_core::matcore::{herm_eig, op_norm, sym_pinv_solve, CMatrix};
use shilov_core::stargen::{cone_spans, generate_star_algebra, tro_equals_algebra, validate_space, MatrixSpace};
use shilov_core::testgen::{
    planted_program, random_block_elements, random_envelope_instance, random_spanning_function_space,
    random_unitized_coeffs,
};
use shilov_core::unitize::{
    check_envelope_of_unitization, contraction_gap, distance_to_unit, dominating_element, x1_cone_member,
    xplus_cone_member, Membership, UnitChoice, UnitizedElement, DEFAULT_DELTA, DEFAULT_EPS,
};

const TOL: f64 = 1e-7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn space(gens: &[CMatrix]) -> MatrixSpace {
    validate_space(gens).expect("valid generators").0
}

fn opts(seed: u64) -> EnvelopeOptions {
    EnvelopeOptions { tol: TOL, seed, ..EnvelopeOptions::default() }
}

/// Envelopes computed along the way, certified in AC3.
type Pool = Vec<(String, EnvelopePresentation)>;

fn ac1(pool: &mut Pool) -> Outcome {
    let mut good = 0;
    let mut slowest = Duration::ZERO;
    let mut resampled = 0;
    for seed in 0..20u64 {
        let start = Instant::now();
        let mut ok = false;
        for attempt in 0..3u64 {
            let mut r = rng(1000 + seed * 17 + attempt);
            let g: Vec<CMatrix> = (0..3).map(|_| random_psd(&mut r, 5, 5).into_cmatrix()).collect();
            let x = space(&g);
            let alg = match generate_star_algebra(&x) {
                Ok(a) => a,
                Err(_) => {
                    resampled += 1;
                    continue;
                }
            };
            if alg.dim() != 25 {
                resampled += 1;
                continue;
            }
            match compute_envelope(&x, opts(seed)) {
                Ok(env) => {
                    ok = env.abstract_blocks == vec![5] && env.removed().is_empty();
                    pool.push((format!("AC1 seed {seed}"), env));
                    break;
                }
                Err(_) => resampled += 1,
            }
        }
        let t = start.elapsed();
        slowest = slowest.max(t);
        if ok && t < Duration::from_secs(10) {
            good += 1;
        }
    }
    outcome(
        good >= 19,
        format!("{good}/20 runs give M_5 with no eliminations, {resampled} resamples, slowest run {:.2} s", slowest.as_secs_f64()),
    )
}

/// Positive generators whose cone spans, ambient size `n`.
fn spanning_instance(r: &mut impl Rng, n: usize) -> MatrixSpace {
    loop {
        let gens = if r.random_bool(0.5) {
            let mut blocks = Vec::new();
            let mut left = n;
            while left > 0 {
                let k = r.random_range(1..=left.min(3));
                let m = if left >= 2 * k && r.random_bool(0.3) { 2 } else { 1 };
                blocks.push((k, m));
                left -= k * m;
            }
            let count = r.random_range(2..=4);
            random_block_elements(r, &blocks, count, true).0
        } else {
            let c = r.random_range(1..=4);
            (0..c)
                .map(|_| {
                    let rank = r.random_range(1..=n);
                    random_psd(r, n, rank).into_cmatrix()
                })
                .collect()
        };
        let x = space(&gens);
        if cone_spans(&x).map(|c| c.spans()).unwrap_or(false) {
            return x;
        }
    }
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut good = 0;
    let mut first_bad = None;
    for i in 0..200 {
        let n = 3 + i % 6;
        let x = spanning_instance(&mut r, n);
        match tro_equals_algebra(&x) {
            Ok(true) => good += 1,
            other => {
                first_bad.get_or_insert(format!("instance {i}: {other:?}"));
            }
        }
    }
    let t = start.elapsed().as_secs_f64();
    let mut detail = format!("{good}/200 instances with TRO = algebra in {t:.1} s");
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first failure {b}"));
    }
    outcome(good == 200 && t < 300.0, detail)
}

fn ac3(pool: &Pool) -> Outcome {
    let start = Instant::now();
    let results: Vec<(bool, f64)> = std::thread::scope(|sc| {
        let jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
        let chunks: Vec<_> = pool.chunks(pool.len().div_ceil(jobs).max(1)).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .enumerate()
            .map(|(c, chunk)| {
                sc.spawn(move || {
                    chunk
                        .iter()
                        .enumerate()
                        .map(|(i, (_, env))| {
                            let cert = certify_embedding(env, 4, 500, (c * 10_000 + i) as u64).expect("certificate");
                            let cc = cert.inverse.as_ref().map(|v| v.is_cc()).unwrap_or(true);
                            (cert.passed && cc && cert.max_discrepancy <= 1e-6, cert.max_discrepancy)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    });
    let good = results.iter().filter(|(p, _)| *p).count();
    let worst = results.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let first_bad = results.iter().position(|(p, _)| !p).map(|i| pool[i].0.clone());
    let mut detail = format!(
        "{good}/{} envelopes certified (levels 1-4, 500 samples/level), worst discrepancy {worst:.2e}, {:.1} s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first failure {b}"));
    }
    outcome(good == results.len() && !results.is_empty(), detail)
}

fn ac4(pool: &mut Pool) -> Outcome {
    let mut good = 0;
    let mut worst: f64 = 0.0;
    let mut nontrivial = 0;
    for i in 0..50u64 {
        let mut r = rng(4000 + i);
        let x = space(&random_envelope_instance(&mut r, 8));
        let a = compute_envelope(&x, opts(i)).expect("envelope");
        let rev = compute_envelope(&x, EnvelopeOptions { scan: ScanOrder::AscendingRank, ..opts(i) }).expect("envelope");
        let w = random_unitary(&mut r, x.ambient_dim());
        let t: Vec<CMatrix> = x.basis_matrices().iter().map(|m| m.compress(&w.adjoint())).collect();
        let y = space(&t);
        let conj = compute_envelope(&y, opts(i + 1)).expect("envelope");
        let iso_rev = induced_isomorphism(&a, &rev, &x.basis_matrices()).ok().flatten();
        let iso_conj = induced_isomorphism(&a, &conj, &t).ok().flatten();
        let ok = a.abstract_blocks == rev.abstract_blocks
            && a.abstract_blocks == conj.abstract_blocks
            && match (&iso_rev, &iso_conj) {
                (Some(p), Some(q)) => {
                    worst = worst.max(p.residual).max(q.residual);
                    p.residual <= 1e-6 && q.residual <= 1e-6
                }
                _ => false,
            };
        if !a.removed().is_empty() {
            nontrivial += 1;
        }
        good += ok as usize;
        pool.push((format!("AC4 instance {i}"), a));
        pool.push((format!("AC4 instance {i} reversed"), rev));
        pool.push((format!("AC4 instance {i} conjugated"), conj));
    }
    outcome(
        good == 50,
        format!("{good}/50 instances with equal blocks and verified isomorphisms (worst residual {worst:.2e}); {nontrivial} had eliminations"),
    )
}

fn ac5() -> Outcome {
    let worked = FunctionSpace::from_real(3, &[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]]).expect("space");
    let worked_ok = boundary(&worked).map(|b| b.boundary_points() == vec![vec![0], vec![1]]).unwrap_or(false)
        && crosscheck_diagonal(&worked, 0).map(|c| c.agree).unwrap_or(false);
    let mut r = rng(5);
    let mut good = 0;
    let mut removed = 0;
    for i in 0..100u64 {
        let points = r.random_range(1..=8);
        let fs = FunctionSpace::from_real(points, &random_spanning_function_space(&mut r, points)).expect("space");
        if let Ok(c) = crosscheck_diagonal(&fs, i) {
            good += c.agree as usize;
            let classes = boundary(&fs).map(|b| b.classes.len()).unwrap_or(0);
            removed += (classes > c.lp_boundary.len()) as usize;
        }
    }
    outcome(
        worked_ok && good == 100,
        format!(
            "worked example ∂X = {{1,2}}: {}; {good}/100 random spaces agree ({removed} with loose points)",
            if worked_ok { "yes" } else { "no" }
        ),
    )
}

fn ac6(pool: &mut Pool, lemma: &mut Vec<EnvelopePresentation>) -> Outcome {
    let eps_min = *DEFAULT_EPS.last().expect("schedule");
    let (mut yes, mut no, mut inconclusive) = (0, 0, 0);
    let mut violations = 0;
    let mut monotone_bad = 0;
    let mut strict = 0;
    let start = Instant::now();
    for i in 0..30u64 {
        let mut r = rng(6000 + i);
        let x = space(&random_envelope_instance(&mut r, 5));
        let env = compute_envelope(&x, opts(i)).expect("envelope");
        for j in 0..100 {
            let k = if j % 5 == 4 { 3 } else { 1 + j % 2 };
            let (v, a) = random_unitized_coeffs(&mut r, k, x.dim());
            let el = UnitizedElement::new(v, a).expect("selfadjoint");
            let karn = xplus_cone_member(&env, &el, &DEFAULT_EPS, DEFAULT_DELTA, TOL).expect("karn");
            let x1 = x1_cone_member(&env, &el, eps_min).expect("x1").member;
            match karn.member {
                Membership::Yes => {
                    yes += 1;
                    violations += (x1 != Membership::Yes) as usize;
                }
                Membership::No => {
                    no += 1;
                    strict += (x1_cone_member(&env, &el, TOL).expect("x1").member == Membership::Yes) as usize;
                }
                Membership::Inconclusive => inconclusive += 1,
            }
            let feasible: Vec<bool> = karn.per_eps.iter().map(|(_, s)| *s == SolveStatus::Feasible).collect();
            monotone_bad += feasible.windows(2).any(|w| !w[0] && w[1]) as usize;
        }
        pool.push((format!("AC6 instance {i}"), env.clone()));
        lemma.push(env);
    }
    outcome(
        violations == 0 && monotone_bad == 0 && yes > 0 && no > 0,
        format!(
            "3000 elements: Karn yes {yes}, no {no}, inconclusive {inconclusive}; sandwich violations {violations}; \
             ε-monotonicity violations {monotone_bad}; X¹-only positives {strict}; {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn lemma_holds(env: &EnvelopePresentation, unit: UnitChoice) -> Result<(f64, bool), String> {
    let d = distance_to_unit(env, unit).map_err(|e| e.to_string())?.d;
    let found = dominating_element(env, unit, TOL).map_err(|e| e.to_string())?.found();
    if ((d - 1.0).abs() <= 1e-6) == found {
        return Err(format!("{unit:?}: d = {d:.9}, dominator found = {found}"));
    }
    Ok((d, found))
}

fn ac7(lemma: &[EnvelopePresentation]) -> Outcome {
    let e11 = compute_envelope(&space(&[CMatrix::unit(2, 0, 0)]), opts(0)).expect("envelope");
    let e11_ok = matches!(lemma_holds(&e11, UnitChoice::AmbientIdentity), Ok((d, false)) if (d - 1.0).abs() < 1e-9);
    let c3 = space(&[CMatrix::from_real_diag(&[1.0, 0.0, 0.75]), CMatrix::from_real_diag(&[0.0, 1.0, 0.75])]);
    let c3 = compute_envelope(&c3, opts(0)).expect("envelope");
    let c3_res = lemma_holds(&c3, UnitChoice::EnvelopeUnit);
    let c3_ok = matches!(c3_res, Ok((d, true)) if (d - 0.2).abs() <= 1e-4);
    let mut total = 0;
    let mut good = 0;
    let mut first_bad = None;
    let (mut at_one, mut below) = (0, 0);
    for env in lemma {
        for unit in [UnitChoice::EnvelopeUnit, UnitChoice::AmbientIdentity] {
            total += 1;
            match lemma_holds(env, unit) {
                Ok((_, found)) => {
                    good += 1;
                    if found {
                        below += 1;
                    } else {
                        at_one += 1;
                    }
                }
                Err(e) => {
                    first_bad.get_or_insert(e);
                }
            }
        }
    }
    let mut detail = format!(
        "span{{E11}} ambient d = 1 without dominator: {}; C³ d = {:.6} with dominator: {}; {good}/{total} instance-unit pairs \
         ({below} dominated, {at_one} at d = 1)",
        if e11_ok { "yes" } else { "no" },
        c3_res.as_ref().map(|r| r.0).unwrap_or(f64::NAN),
        if c3_ok { "yes" } else { "no" },
    );
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first failure {b}"));
    }
    outcome(e11_ok && c3_ok && good == total, detail)
}

fn ac8(pool: &mut Pool, lemma: &mut Vec<EnvelopePresentation>) -> Outcome {
    let mut good = 0;
    let mut non_unital = 0;
    let mut worst: f64 = 0.0;
    for i in 0..30u64 {
        let mut r = rng(8000 + i);
        let x = space(&random_envelope_instance(&mut r, 6));
        let env = compute_envelope(&x, opts(i)).expect("envelope");
        match check_envelope_of_unitization(&env) {
            Ok(rep) => {
                good += rep.equal as usize;
                non_unital += (!rep.unital) as usize;
                worst = worst.max(rep.algebra_residual);
            }
            Err(_) => {}
        }
        pool.push((format!("AC8 instance {i}"), env.clone()));
        lemma.push(env);
    }
    outcome(
        good == 30,
        format!("{good}/30 with equal blocks, no eliminations and identical algebras (worst residual {worst:.2e}); {non_unital} non-unital X"),
    )
}

fn ac9() -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for i in 0..1000 {
        let n = 1 + i % 8;
        let a = random_positive_contraction(&mut r, n);
        let b = random_positive_contraction(&mut r, n);
        let g = contraction_gap(&a, &b).expect("gap");
        worst = worst.max(g);
        bad += (g > 1.0 + 1e-9) as usize;
    }
    outcome(bad == 0, format!("1000 pairs, max ‖T₁ − T₂‖ = {worst:.12}"))
}

/// Independent check of a solver certificate against the program data.
fn certificate_is_valid(p: &ConicProgram, status: SolveStatus, out: &shilov_core::conesolver::SolveOutcome) -> bool {
    let AffineSet::Equality { rows, rhs } = &p.affine else {
        return false;
    };
    match status {
        SolveStatus::Feasible => {
            let Some(blocks) = &out.point else { return false };
            let x = ConicProgram::stack(blocks);
            let eq = rows.iter().zip(rhs).all(|(row, b)| (dot(row, &x) - b).abs() <= 1e-6 * (1.0 + b.abs()));
            let psd = blocks.iter().all(|b| herm_eig(b).map(|e| e.min_value() >= -1e-6).unwrap_or(false));
            eq && psd
        }
        SolveStatus::Infeasible => match &out.witness {
            Some(DualWitness::Separating { blocks, .. }) => {
                let w = ConicProgram::stack(blocks);
                let span = match orthonormalize(rows.clone(), RankOptions::lenient(1e-12)) {
                    Ok(s) => s,
                    Err(_) => return false,
                };
                let (_, res) = coords(&w, &span);
                let g: Vec<Vec<f64>> = rows.iter().map(|a| rows.iter().map(|b| dot(a, b)).collect()).collect();
                let Ok(c) = sym_pinv_solve(&g, rhs, 1e-12) else { return false };
                let x0: Vec<f64> = (0..w.len()).map(|t| rows.iter().zip(&c).map(|(row, ci)| row[t] * ci).sum()).collect();
                let value = dot(&w, &x0);
                let psd = blocks.iter().all(|b| herm_eig(b).map(|e| e.min_value() >= -1e-9).unwrap_or(false));
                res <= 1e-6 && value < 0.0 && psd
            }
            Some(DualWitness::InconsistentEquations { .. }) => {
                let g: Vec<Vec<f64>> = rows.iter().map(|a| rows.iter().map(|b| dot(a, b)).collect()).collect();
                let Ok(c) = sym_pinv_solve(&g, rhs, 1e-12) else { return false };
                let gc: Vec<f64> = g.iter().map(|row| dot(row, &c)).collect();
                gc.iter().zip(rhs).any(|(a, b)| (a - b).abs() > 1e-8)
            }
            None => false,
        },
        SolveStatus::Marginal => true,
    }
}

fn ac10() -> Outcome {
    let mut r = rng(10);
    let (mut wrong, mut marginal, mut invalid) = (0, 0, 0);
    for i in 0..500 {
        let planted = planted_program(&mut r, i % 2 == 0);
        let out = solve_feasibility(&planted.program, TOL).expect("solve");
        match out.status {
            SolveStatus::Marginal => marginal += 1,
            SolveStatus::Feasible => wrong += (!planted.feasible) as usize,
            SolveStatus::Infeasible => wrong += planted.feasible as usize,
        }
        invalid += (!certificate_is_valid(&planted.program, out.status, &out)) as usize;
    }

    let (mut contradictions, mut cc, mut not, mut cc_marginal) = (0, 0, 0, 0);
    for i in 0..100u64 {
        let mut r = rng(10_000 + i);
        let x = space(&random_envelope_instance(&mut r, 4));
        let n = x.ambient_dim();
        let target = r.random_range(1..=n);
        let v = random_cmatrix(&mut r, n, target);
        let v = v.scale_re(1.0 / op_norm(&v).expect("norm"));
        let s = r.random_range(0.8..1.25);
        let basis = x.basis_matrices();
        let images = basis.iter().map(|b| b.compress(&v).scale_re(s)).collect();
        let map = LinearMapSpec::new(basis, images).expect("map");
        match cc_test(&map, TOL).expect("cc") {
            CcVerdict::CompletelyContractive { .. } => {
                cc += 1;
                contradictions += (sampled_cb_lower_bound(&map, 4, 500, i) > 1.0 + 1e-5) as usize;
            }
            CcVerdict::Not(w) => {
                not += 1;
                let (reach, _) = sampled_search_public(&map, 2, 0, i, std::slice::from_ref(&w.element));
                contradictions += (reach <= 1.0) as usize;
            }
            CcVerdict::Marginal { .. } => cc_marginal += 1,
        }
    }
    let rate = marginal as f64 / 500.0;
    outcome(
        wrong == 0 && invalid == 0 && rate < 0.02 && contradictions == 0,
        format!(
            "500 planted programs: {wrong} wrong statuses, {invalid} invalid certificates, marginal rate {:.1}%; \
             100 maps: {cc} CC, {not} not CC, {cc_marginal} marginal, {contradictions} contradictions with the sampler",
            100.0 * rate
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut pool = Pool::new();
    let mut lemma = Vec::new();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, ac1(&mut pool)));
    results.push((2, ac2()));
    results.push((4, ac4(&mut pool)));
    results.push((5, ac5()));
    results.push((6, ac6(&mut pool, &mut lemma)));
    results.push((8, ac8(&mut pool, &mut lemma)));
    results.push((7, ac7(&lemma)));
    results.push((9, ac9()));
    results.push((10, ac10()));
    results.push((3, ac3(&pool)));
    results.sort_by_key(|(i, _)| *i);
    let mut all = true;
    for (i, o) in &results {
        all &= o.pass;
        println!("AC{i} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("total {:.1} s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
