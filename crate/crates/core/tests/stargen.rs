use proptest::prelude::*;
use shilov_core::matcore::random::{random_psd, rng};
use shilov_core::matcore::*;
use shilov_core::stargen::*;
use shilov_core::testgen::random_block_elements;

fn diag(d: &[f64]) -> CMatrix {
    CMatrix::from_real_diag(d)
}

fn generic_psd(seed: u64, n: usize, count: usize) -> Vec<CMatrix> {
    let mut r = rng(seed);
    (0..count).map(|_| random_psd(&mut r, n, n).into_cmatrix()).collect()
}

#[test]
fn validate_examples() {
    let (x, rep) = validate_space(&[CMatrix::unit(2, 0, 0)]).unwrap();
    assert_eq!(x.dim(), 1);
    assert!(!rep.adjoints_added);
    let (x, rep) = validate_space(&[CMatrix::unit(2, 0, 1)]).unwrap();
    assert_eq!(x.dim(), 2);
    assert!(rep.adjoints_added);
    assert!(x.residual(&CMatrix::unit(2, 1, 0)) < 1e-12);
    let (x, _) = validate_space(&generic_psd(1, 5, 3)).unwrap();
    assert_eq!(x.dim(), 3);
    assert!(x.orthonormality_defect() < 1e-10);
    assert!(matches!(validate_space(&[CMatrix::zeros(2, 2)]), Err(StarError::ZeroSpace)));
    assert!(matches!(validate_space(&[]), Err(StarError::NoGenerators)));
}

#[test]
fn algebra_examples() {
    let (x, _) = validate_space(&[CMatrix::unit(2, 0, 0), CMatrix::unit(2, 1, 1)]).unwrap();
    let a = generate_star_algebra(&x).unwrap();
    assert_eq!(a.dim(), 2);
    assert!(a.unit().as_cmatrix().dist(&CMatrix::identity(2)) < 1e-10);

    let (x, _) = validate_space(&generic_psd(2, 5, 3)).unwrap();
    let a = generate_star_algebra(&x).unwrap();
    assert_eq!(a.dim(), 25);
    assert!(a.closure_defect() < 1e-8);

    let (x, _) = validate_space(&[CMatrix::identity(2)]).unwrap();
    assert_eq!(generate_star_algebra(&x).unwrap().dim(), 1);
}

#[test]
fn tro_examples() {
    let u = CMatrix::from_real_diag(&[1.0, -1.0]);
    let (x, _) = validate_space(&[u]).unwrap();
    assert_eq!(generate_tro(&x).unwrap().len(), 1);

    let (x, _) = validate_space(&[CMatrix::unit(2, 0, 1), CMatrix::unit(2, 1, 0)]).unwrap();
    let t = generate_tro(&x).unwrap();
    assert_eq!(t.len(), 2);
    // Odd products of the generators stay in the span.
    let s = shilov_core::stargen::validate_space(&t.iter().map(|h| h.as_cmatrix().clone()).collect::<Vec<_>>()).unwrap().0;
    let e12 = CMatrix::unit(2, 0, 1);
    let e21 = CMatrix::unit(2, 1, 0);
    assert!(s.residual(&e12.matmul(&e21).matmul(&e12)) < 1e-12);
    assert!(!tro_equals_algebra(&x).unwrap());

    let (x, _) = validate_space(&generic_psd(3, 5, 3)).unwrap();
    assert_eq!(generate_tro(&x).unwrap().len(), 25);

    let m2: Vec<CMatrix> = (0..2).flat_map(|i| (0..2).map(move |j| CMatrix::unit(2, i, j))).collect();
    let (x, _) = validate_space(&m2).unwrap();
    assert!(tro_equals_algebra(&x).unwrap());
}

#[test]
fn unit_projection_examples() {
    let e11 = HermMatrix::from_real_diag(&[1.0, 0.0]);
    assert!(unit_projection(std::slice::from_ref(&e11)).unwrap().as_cmatrix().dist(e11.as_cmatrix()) < 1e-12);
    let (m2, _) = validate_space(&[CMatrix::unit(2, 0, 1), CMatrix::unit(2, 0, 0), CMatrix::unit(2, 1, 1)]).unwrap();
    let e = unit_projection(m2.basis()).unwrap();
    assert!(e.as_cmatrix().dist(&CMatrix::identity(2)) < 1e-10);
    let p = HermMatrix::from_real_diag(&[0.5, 0.5, 0.0]);
    let e = unit_projection(&[p]).unwrap();
    assert!(e.as_cmatrix().dist(&diag(&[1.0, 1.0, 0.0])) < 1e-12);
}

#[test]
fn cone_span_examples() {
    let (x, _) = validate_space(&[CMatrix::unit(2, 0, 0), CMatrix::unit(2, 1, 1)]).unwrap();
    assert!(cone_spans(&x).unwrap().spans());

    let (x, _) = validate_space(&[&CMatrix::unit(2, 0, 1) + &CMatrix::unit(2, 1, 0)]).unwrap();
    match cone_spans(&x).unwrap() {
        ConeSpan::DoesNotSpan { span_dim } => assert_eq!(span_dim, 0),
        c => panic!("{c:?}"),
    }

    let (x, _) = validate_space(&[diag(&[1.0, 0.0, 0.75]), diag(&[0.0, 1.0, -0.75])]).unwrap();
    match cone_spans(&x).unwrap() {
        ConeSpan::Spans { positive_basis, .. } => {
            assert_eq!(positive_basis.len(), 2);
            for p in &positive_basis {
                assert!(psd_check(p, 1e-12).unwrap().is_positive());
            }
        }
        c => panic!("{c:?}"),
    }

    // span{E11, E12 + E21}: only multiples of E11 are positive.
    let (x, _) = validate_space(&[CMatrix::unit(2, 0, 0), &CMatrix::unit(2, 0, 1) + &CMatrix::unit(2, 1, 0)]).unwrap();
    match cone_spans(&x).unwrap() {
        ConeSpan::DoesNotSpan { span_dim } => assert_eq!(span_dim, 1),
        c => panic!("{c:?}"),
    }
}

fn random_spanning_space(seed: u64) -> MatrixSpace {
    let mut r = rng(seed);
    let shapes: [&[(usize, usize)]; 4] = [&[(2, 1), (1, 1)], &[(2, 2)], &[(1, 2), (2, 1)], &[(3, 1)]];
    let blocks = shapes[(seed % 4) as usize];
    let (g, _) = random_block_elements(&mut r, blocks, 3, true);
    validate_space(&g).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn closure_is_idempotent_and_unital(seed in 0u64..10_000) {
        let x = random_spanning_space(seed);
        let a = generate_star_algebra(&x).unwrap();
        let again = generate_star_algebra(&a.as_space()).unwrap();
        prop_assert_eq!(again.dim(), a.dim());
        let e = a.unit().as_cmatrix();
        for b in a.basis() {
            let bm = b.as_cmatrix();
            prop_assert!(e.matmul(bm).dist(bm) + bm.matmul(e).dist(bm) <= 1e-8);
        }
    }

    #[test]
    fn spanning_instances_have_tro_equal_algebra(seed in 0u64..10_000) {
        let x = random_spanning_space(seed);
        prop_assert!(cone_spans(&x).unwrap().spans());
        prop_assert!(tro_equals_algebra(&x).unwrap());
    }

    #[test]
    fn involution_norm_identity(seed in 0u64..10_000, k in 1usize..=2) {
        let x = random_spanning_space(seed);
        let mut r = rng(seed ^ 77);
        let c = LevelCoeffs::from_fn(k, x.dim(), |_, _, _| random::complex_gaussian(&mut r));
        let b = x.basis_matrices();
        let a = op_norm(&amplify(&c, &b).unwrap()).unwrap();
        let s = op_norm(&amplify(&c.star(), &b).unwrap()).unwrap();
        prop_assert!((a - s).abs() <= 1e-9 * a.max(1.0));
    }
}
