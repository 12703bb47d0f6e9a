use proptest::prelude::*;
use rand::Rng;
use shilov_core::conesolver::SolveStatus;
use shilov_core::envelope::*;
use shilov_core::matcore::random::{random_positive_contraction, rng};
use shilov_core::matcore::*;
use shilov_core::stargen::*;
use shilov_core::testgen::{random_envelope_instance, random_unitized_coeffs};
use shilov_core::unitize::*;

fn space(gens: &[CMatrix]) -> MatrixSpace {
    validate_space(gens).unwrap().0
}

fn diag(d: &[f64]) -> CMatrix {
    CMatrix::from_real_diag(d)
}

fn env(x: &MatrixSpace) -> EnvelopePresentation {
    compute_envelope(x, EnvelopeOptions::default()).unwrap()
}

fn c3_signed() -> EnvelopePresentation {
    env(&space(&[diag(&[1.0, 0.0, 0.75]), diag(&[0.0, 1.0, -0.75])]))
}

fn c3_plus() -> EnvelopePresentation {
    env(&space(&[diag(&[1.0, 0.0, 0.75]), diag(&[0.0, 1.0, 0.75])]))
}

/// Level-1 element `(c·x, a)` for a Hermitian `x` of the source space.
fn level1(e: &EnvelopePresentation, x: &CMatrix, c: f64, a: f64) -> UnitizedElement {
    let (coords, res) = e.source.real_coords(&HermMatrix::from_hermitian_part(x));
    assert!(res < 1e-10);
    let v = LevelCoeffs::from_fn(1, coords.len(), |_, _, t| C64::new(c * coords[t], 0.0));
    UnitizedElement::new(v, CMatrix::from_real_diag(&[a])).unwrap()
}

#[test]
fn x1_examples() {
    let e = env(&space(&[CMatrix::identity(2)]));
    let x1 = build_x1(&e).unwrap();
    assert!(x1.unital);
    assert_eq!(x1.space.dim(), 1);

    let e = env(&space(&[diag(&[1.0, 0.0, 0.5]), diag(&[0.0, 1.0, 0.5])]));
    let x1 = build_x1(&e).unwrap();
    assert!(x1.unital);
    assert_eq!(x1.space.dim(), 2);

    let e = c3_signed();
    assert_eq!(e.abstract_blocks, vec![1, 1, 1]);
    let x1 = build_x1(&e).unwrap();
    assert!(!x1.unital);
    assert_eq!(x1.space.dim(), 3);
}

#[test]
fn x1_cone_examples() {
    let e = env(&space(&[CMatrix::identity(2)]));
    let zero = LevelCoeffs::zeros(2, 1);
    let psd = CMatrix::from_fn(2, 2, |_, _| C64::new(1.0, 0.0));
    let el = UnitizedElement::new(zero, psd).unwrap();
    assert_eq!(x1_cone_member(&e, &el, 1e-9).unwrap().member, Membership::Yes);

    let el = level1(&e, &CMatrix::identity(2), -2.0, 1.0);
    let v = x1_cone_member(&e, &el, 1e-9).unwrap();
    assert_eq!(v.member, Membership::No);
    match &v.certificates[0] {
        ConeCertificate::NegativeDirection { min_eig, .. } => assert!((min_eig + 1.0).abs() < 1e-12),
        c => panic!("{c:?}"),
    }

    let e = c3_signed();
    let el = level1(&e, &diag(&[1.0, 0.0, 0.75]), -1.0, 1.0);
    let v = x1_cone_member(&e, &el, 1e-9).unwrap();
    assert_eq!(v.member, Membership::Yes);
    match &v.certificates[0] {
        ConeCertificate::Eigen { min_eig } => assert!(min_eig.abs() < 1e-12),
        c => panic!("{c:?}"),
    }
}

#[test]
fn karn_examples() {
    let e = c3_signed();
    let g1 = diag(&[1.0, 0.0, 0.75]);
    let el = level1(&e, &g1, 1.0, 0.0);
    let v = xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap();
    assert_eq!(v.member, Membership::Yes, "{v:?}");

    let el = level1(&e, &g1, 0.0, 0.7);
    let v = xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap();
    assert_eq!(v.member, Membership::Yes);

    // u = g1/(1+ε) attains equality.
    let el = level1(&e, &g1, -1.0, 1.0);
    let v = xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap();
    assert_eq!(v.member, Membership::Yes, "{v:?}");
    for c in &v.certificates {
        match c {
            ConeCertificate::KarnWitness { min_eig, .. } => assert!(*min_eig >= -1e-6),
            c => panic!("{c:?}"),
        }
    }

    let el = level1(&e, &g1, -1.0, -0.5);
    assert_eq!(xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap().member, Membership::No);
    let el = level1(&e, &g1, -3.0, 1.0);
    assert_eq!(xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap().member, Membership::No);

    assert!(xplus_cone_member(&e, &el, &[1e-3, 1e-1], DEFAULT_DELTA, 1e-7).is_err());
    assert!(xplus_cone_member(&e, &el, &DEFAULT_EPS, 0.5, 1e-7).is_err());
}

#[test]
fn distance_examples() {
    let e = env(&space(&[CMatrix::unit(2, 0, 0)]));
    let d = distance_to_unit(&e, UnitChoice::AmbientIdentity).unwrap();
    assert!((d.d - 1.0).abs() < 1e-9);
    assert!(!dominating_element(&e, UnitChoice::AmbientIdentity, 1e-7).unwrap().found());

    let e = c3_plus();
    assert_eq!(e.abstract_blocks, vec![1, 1, 1]);
    let d = distance_to_unit(&e, UnitChoice::EnvelopeUnit).unwrap();
    assert!((d.d - 0.2).abs() < 1e-4, "d = {}", d.d);
    match dominating_element(&e, UnitChoice::EnvelopeUnit, 1e-7).unwrap() {
        Domination::Found { min_eig, .. } => assert!(min_eig >= -1e-6),
        o => panic!("{o:?}"),
    }

    let e = env(&space(&[CMatrix::identity(3), diag(&[1.0, 0.0, 0.0])]));
    let d = distance_to_unit(&e, UnitChoice::AmbientIdentity).unwrap();
    assert!(d.d < 1e-9);
    assert!(dominating_element(&e, UnitChoice::AmbientIdentity, 1e-7).unwrap().found());
}

/// Grid oracle on `(a, b)` for the `c3_plus` distance.
#[test]
fn distance_grid_oracle() {
    let mut best = f64::INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            let (a, b) = (i as f64 / 200.0, j as f64 / 200.0);
            let v = (1.0 - a).abs().max((1.0 - b).abs()).max((1.0 - 0.75 * (a + b)).abs());
            best = best.min(v);
        }
    }
    let d = distance_to_unit(&c3_plus(), UnitChoice::EnvelopeUnit).unwrap().d;
    assert!((best - d).abs() < 5e-3 && d <= best + 1e-9);
}

#[test]
fn unitization_envelope_examples() {
    for e in [env(&space(&[CMatrix::identity(2)])), c3_signed()] {
        let rep = check_envelope_of_unitization(&e).unwrap();
        assert!(rep.equal, "{rep:?}");
        assert_eq!(rep.eliminated, 0);
    }
    let mut r = rng(5);
    let g: Vec<CMatrix> = (0..3).map(|_| random::random_psd(&mut r, 5, 5).into_cmatrix()).collect();
    let rep = check_envelope_of_unitization(&env(&space(&g))).unwrap();
    assert!(rep.equal);
    assert_eq!(rep.blocks_of_x1, vec![5]);
}

#[test]
fn positive_contractions_differ_by_at_most_one() {
    let mut r = rng(77);
    for i in 0..1000 {
        let n = 1 + i % 8;
        let a = random_positive_contraction(&mut r, n);
        let b = random_positive_contraction(&mut r, n);
        assert!(contraction_gap(&a, &b).unwrap() <= 1.0 + 1e-9);
    }
    let p = HermMatrix::from_real_diag(&[1.0, 0.0]);
    let q = HermMatrix::from_real_diag(&[0.0, 1.0]);
    assert!((contraction_gap(&p, &q).unwrap() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, .. ProptestConfig::default() })]

    #[test]
    fn order_invariants(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let x = space(&random_envelope_instance(&mut r, 5));
        let e = compute_envelope(&x, EnvelopeOptions { seed, ..EnvelopeOptions::default() }).unwrap();
        let eps_min = *DEFAULT_EPS.last().unwrap();
        for _ in 0..6 {
            let k = 1 + (r.random_range(0..2usize));
            let (v, a) = random_unitized_coeffs(&mut r, k, x.dim());
            let el = UnitizedElement::new(v, a).unwrap();
            let karn = xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap();
            if karn.member == Membership::Yes {
                prop_assert_ne!(x1_cone_member(&e, &el, eps_min).unwrap().member, Membership::No);
            }
            let feasible: Vec<bool> = karn.per_eps.iter().map(|(_, s)| *s == SolveStatus::Feasible).collect();
            for w in feasible.windows(2) {
                prop_assert!(w[0] || !w[1], "feasible at smaller eps only: {:?}", karn.per_eps);
            }
        }

        let d = distance_to_unit(&e, UnitChoice::EnvelopeUnit).unwrap();
        let dom = dominating_element(&e, UnitChoice::EnvelopeUnit, 1e-7).unwrap();
        prop_assert!(d.d < 1.0 - 1e-6);
        prop_assert!(dom.found());
        let d = distance_to_unit(&e, UnitChoice::AmbientIdentity).unwrap();
        let dom = dominating_element(&e, UnitChoice::AmbientIdentity, 1e-7).unwrap();
        prop_assert!(((d.d - 1.0).abs() <= 1e-6) != dom.found(), "d = {} {:?}", d.d, dom);
    }

    #[test]
    fn karn_level_zero(seed in 0u64..10_000, sign in prop::bool::ANY) {
        let mut r = rng(seed);
        let x = space(&random_envelope_instance(&mut r, 5));
        let e = compute_envelope(&x, EnvelopeOptions::default()).unwrap();
        // ±(positive element) + small shift keeps a clear spectral gap.
        let p = match cone_spans(&x).unwrap() {
            ConeSpan::Spans { dominating, .. } => dominating,
            _ => unreachable!(),
        };
        let s = if sign { 1.0 } else { -1.0 };
        let (c, _) = x.real_coords(&p);
        let v = LevelCoeffs::from_fn(1, c.len(), |_, _, t| C64::new(s * c[t], 0.0));
        let el = UnitizedElement::new(v, CMatrix::zeros(1, 1)).unwrap();
        let m = xplus_cone_member(&e, &el, &DEFAULT_EPS, DEFAULT_DELTA, 1e-7).unwrap().member;
        prop_assert_eq!(m == Membership::Yes, sign);
    }
}
