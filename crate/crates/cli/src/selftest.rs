//! Property suites run by `shilov selftest`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use shilov_core::conesolver::{cc_test, sampled_cb_lower_bound, CcVerdict, LinearMapSpec, SolveStatus};
use shilov_core::envelope::{certify_embedding, compute_envelope, induced_isomorphism, EnvelopeOptions, ScanOrder};
use shilov_core::funcspace::{crosscheck_diagonal, FunctionSpace};
use shilov_core::matcore::random::{random_positive_contraction, random_psd, random_unitary, rng};
use shilov_core::matcore::CMatrix;
use shilov_core::stargen::{tro_equals_algebra, validate_space, MatrixSpace};
use shilov_core::testgen::{random_envelope_instance, random_spanning_function_space, random_unitized_coeffs};
use shilov_core::unitize::{
    contraction_gap, distance_to_unit, dominating_element, x1_cone_member, xplus_cone_member, Membership, UnitChoice,
    UnitizedElement, DEFAULT_DELTA, DEFAULT_EPS,
};

pub struct Config {
    pub full: bool,
    pub seed: u64,
    pub tol: f64,
    pub jobs: usize,
}

pub struct Row {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub first_failure: Option<(u64, String)>,
}

type Check = fn(&Config, u64) -> Result<(), String>;

struct Suite {
    name: &'static str,
    quick: usize,
    full: usize,
    check: Check,
}

const SUITES: &[Suite] = &[
    Suite { name: "tro-equals-algebra", quick: 30, full: 200, check: tro_equality },
    Suite { name: "envelope-certificate", quick: 20, full: 100, check: envelope_certificate },
    Suite { name: "scan-order-isomorphism", quick: 10, full: 50, check: scan_order_isomorphism },
    Suite { name: "cone-inclusion", quick: 10, full: 60, check: cone_inclusion },
    Suite { name: "distance-domination", quick: 15, full: 100, check: distance_domination },
    Suite { name: "positive-contractions", quick: 5, full: 25, check: positive_contractions },
    Suite { name: "boundary-crosscheck", quick: 30, full: 300, check: boundary_crosscheck },
    Suite { name: "cc-vs-sampler", quick: 12, full: 80, check: cc_vs_sampler },
];

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn space(gens: &[CMatrix]) -> Result<MatrixSpace, String> {
    Ok(validate_space(gens).map_err(err)?.0)
}

fn options(cfg: &Config, seed: u64) -> EnvelopeOptions {
    EnvelopeOptions { tol: cfg.tol, seed, ..EnvelopeOptions::default() }
}

fn tro_equality(_: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let gens = if seed % 2 == 0 {
        random_envelope_instance(&mut r, 6)
    } else {
        let n = r.random_range(3..=6);
        (0..3).map(|_| random_psd(&mut r, n, n).into_cmatrix()).collect()
    };
    if tro_equals_algebra(&space(&gens)?).map_err(err)? {
        Ok(())
    } else {
        Err("TRO differs from the generated algebra".into())
    }
}

fn envelope_certificate(cfg: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let x = space(&random_envelope_instance(&mut r, 6))?;
    let env = compute_envelope(&x, options(cfg, seed)).map_err(err)?;
    let c = certify_embedding(&env, 3, 50, seed).map_err(err)?;
    if c.passed {
        Ok(())
    } else {
        Err(format!("max discrepancy {:.3e}", c.max_discrepancy))
    }
}

fn scan_order_isomorphism(cfg: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let x = space(&random_envelope_instance(&mut r, 6))?;
    let a = compute_envelope(&x, options(cfg, seed)).map_err(err)?;
    let b = compute_envelope(&x, EnvelopeOptions { scan: ScanOrder::AscendingRank, ..options(cfg, seed) }).map_err(err)?;
    if a.abstract_blocks != b.abstract_blocks {
        return Err(format!("blocks {:?} vs {:?}", a.abstract_blocks, b.abstract_blocks));
    }
    match induced_isomorphism(&a, &b, &x.basis_matrices()).map_err(err)? {
        Some(_) => Ok(()),
        None => Err("no induced isomorphism".into()),
    }
}

fn cone_inclusion(cfg: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let x = space(&random_envelope_instance(&mut r, 5))?;
    let env = compute_envelope(&x, options(cfg, seed)).map_err(err)?;
    let eps_min = *DEFAULT_EPS.last().expect("nonempty schedule");
    for _ in 0..4 {
        let k = r.random_range(1..=2);
        let (v, a) = random_unitized_coeffs(&mut r, k, x.dim());
        let el = UnitizedElement::new(v, a).map_err(err)?;
        let karn = xplus_cone_member(&env, &el, &DEFAULT_EPS, DEFAULT_DELTA, cfg.tol).map_err(err)?;
        if karn.member == Membership::Yes && x1_cone_member(&env, &el, eps_min).map_err(err)?.member == Membership::No {
            return Err("X⁺-positive element outside the X¹ cone".into());
        }
        let feasible: Vec<bool> = karn.per_eps.iter().map(|(_, s)| *s == SolveStatus::Feasible).collect();
        if feasible.windows(2).any(|w| !w[0] && w[1]) {
            return Err(format!("feasible only at smaller ε: {:?}", karn.per_eps));
        }
    }
    Ok(())
}

fn distance_domination(cfg: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let x = space(&random_envelope_instance(&mut r, 5))?;
    let env = compute_envelope(&x, options(cfg, seed)).map_err(err)?;
    for unit in [UnitChoice::EnvelopeUnit, UnitChoice::AmbientIdentity] {
        let d = distance_to_unit(&env, unit).map_err(err)?;
        let dom = dominating_element(&env, unit, 1e-7).map_err(err)?;
        if (d.d < 1.0 - 1e-6) != dom.found() {
            return Err(format!("{unit:?}: d = {:.9} but domination {:?}", d.d, dom));
        }
    }
    Ok(())
}

fn positive_contractions(_: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for i in 0..200 {
        let n = 1 + i % 8;
        let a = random_positive_contraction(&mut r, n);
        let b = random_positive_contraction(&mut r, n);
        let g = contraction_gap(&a, &b).map_err(err)?;
        if g > 1.0 + 1e-9 {
            return Err(format!("‖a − b‖ = {g}"));
        }
    }
    Ok(())
}

fn boundary_crosscheck(_: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let points = r.random_range(1..=7);
    let fs = FunctionSpace::from_real(points, &random_spanning_function_space(&mut r, points)).map_err(err)?;
    let c = crosscheck_diagonal(&fs, seed).map_err(err)?;
    if c.agree {
        Ok(())
    } else {
        Err(format!("LP {:?} vs matrix {:?}", c.lp_boundary, c.matrix_boundary))
    }
}

/// `x ↦ s·u*xu` has cb-norm exactly `s`.
fn cc_vs_sampler(cfg: &Config, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let x = space(&random_envelope_instance(&mut r, 4))?;
    let n = x.ambient_dim();
    let u = random_unitary(&mut r, n);
    let s = if seed % 2 == 0 { 0.95 } else { 1.05 };
    let basis = x.basis_matrices();
    let images = basis.iter().map(|b| b.compress(&u).scale_re(s)).collect();
    let map = LinearMapSpec::new(basis, images).map_err(err)?;
    let sampled = sampled_cb_lower_bound(&map, 2, 100, seed);
    match cc_test(&map, cfg.tol).map_err(err)? {
        CcVerdict::CompletelyContractive { upper_bound, .. } => {
            if s > 1.0 || sampled > 1.0 + 1e-6 || upper_bound < sampled - 1e-6 {
                return Err(format!("certified CC at s = {s}, sampled {sampled:.6}"));
            }
        }
        CcVerdict::Not(v) => {
            if s < 1.0 || map.ratio(&v.element) <= 1.0 {
                return Err(format!("violation at s = {s} with ratio {:.6}", map.ratio(&v.element)));
            }
        }
        CcVerdict::Marginal { lower, upper, .. } => return Err(format!("marginal [{lower}, {upper}] at s = {s}")),
    }
    Ok(())
}

fn run_suite(cfg: &Config, index: usize, suite: &Suite) -> Row {
    let total = if cfg.full { suite.full } else { suite.quick };
    let seeds: Vec<u64> = (0..total as u64)
        .map(|i| cfg.seed.wrapping_mul(1_000_003).wrapping_add(((index as u64) << 32) | i))
        .collect();
    let results: Mutex<Vec<Option<Result<(), String>>>> = Mutex::new(vec![None; total]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|sc| {
        for _ in 0..cfg.jobs.min(total.max(1)) {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let out = (suite.check)(cfg, seeds[i]);
                results.lock().expect("no poisoned lock")[i] = Some(out);
            });
        }
    });
    let results = results.into_inner().expect("no poisoned lock");
    let mut row = Row { name: suite.name, passed: 0, total, first_failure: None };
    for (i, r) in results.into_iter().enumerate() {
        match r.expect("every instance ran") {
            Ok(()) => row.passed += 1,
            Err(e) => {
                row.first_failure.get_or_insert((seeds[i], e));
            }
        }
    }
    row
}

pub fn run_all(cfg: &Config) -> Vec<Row> {
    SUITES.iter().enumerate().map(|(i, s)| run_suite(cfg, i, s)).collect()
}

/// Prints one line per suite; returns whether everything passed.
pub fn print_matrix(rows: &[Row]) -> bool {
    let mut ok = true;
    for r in rows {
        let pass = r.passed == r.total;
        ok &= pass;
        println!("{:<24} {:>4}/{:<4} {}", r.name, r.passed, r.total, if pass { "PASS" } else { "FAIL" });
        if let Some((seed, msg)) = &r.first_failure {
            println!("    first failure (instance seed {seed}): {msg}");
        }
    }
    ok
}
