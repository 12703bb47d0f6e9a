use proptest::prelude::*;
use shilov_core::blockdecomp::decompose;
use shilov_core::envelope::*;
use shilov_core::matcore::random::{random_psd, random_unitary, rng};
use shilov_core::matcore::*;
use shilov_core::stargen::*;
use shilov_core::testgen::{diagonal_embedding, random_envelope_instance};

fn space(gens: &[CMatrix]) -> MatrixSpace {
    validate_space(gens).unwrap().0
}

fn diag(d: &[f64]) -> CMatrix {
    CMatrix::from_real_diag(d)
}

fn k_diagonal() -> MatrixSpace {
    space(&[diag(&[1.0, 0.0, 0.5]), diag(&[0.0, 1.0, 0.5])])
}

fn generic_m5(seed: u64) -> MatrixSpace {
    let mut r = rng(seed);
    let g: Vec<CMatrix> = (0..3).map(|_| random_psd(&mut r, 5, 5).into_cmatrix()).collect();
    space(&g)
}

fn env(x: &MatrixSpace) -> EnvelopePresentation {
    compute_envelope(x, EnvelopeOptions::default()).unwrap()
}

fn removed_diagonals(e: &EnvelopePresentation) -> Vec<Vec<f64>> {
    e.removed()
        .iter()
        .map(|&i| {
            let p = e.decomposition.projections[i].as_cmatrix();
            (0..p.rows()).map(|j| p[(j, j)].re).collect()
        })
        .collect()
}

#[test]
fn looseness_examples() {
    let x = k_diagonal();
    let alg = generate_star_algebra(&x).unwrap();
    let e33 = HermMatrix::from_real_diag(&[0.0, 0.0, 1.0]);
    let v = is_block_loose(&x, &alg, &e33, 1e-7).unwrap();
    assert!(v.is_loose(), "{v:?}");
    let e11 = HermMatrix::from_real_diag(&[1.0, 0.0, 0.0]);
    let v = is_block_loose(&x, &alg, &e11, 1e-7).unwrap();
    assert!(matches!(v, Looseness::Essential(Essential::NormDrop(_))), "{v:?}");
    if let Looseness::Essential(Essential::NormDrop(w)) = v {
        // f = (1, 0, ½): removing point 1 leaves norm ½.
        assert!(w.image_norm > 1.5);
    }

    let units: Vec<CMatrix> = (0..4).map(|t| CMatrix::unit(2, t / 2, t % 2)).collect();
    let m2 = space(&units);
    let alg = generate_star_algebra(&m2).unwrap();
    let v = is_block_loose(&m2, &alg, &HermMatrix::identity(2), 1e-7).unwrap();
    assert!(matches!(v, Looseness::Essential(Essential::Kernel { .. })));
}

#[test]
fn envelope_examples() {
    let x = generic_m5(1);
    let e = env(&x);
    assert_eq!(e.abstract_blocks, vec![5]);
    assert_eq!(e.decomposition.block_sizes, vec![(5, 1)]);
    assert!(e.removed().is_empty());
    assert!(e.q.as_cmatrix().dist(&CMatrix::identity(5)) < 1e-9);

    let e = env(&space(&[CMatrix::identity(2)]));
    assert_eq!(e.abstract_blocks, vec![1]);
    let img = &e.embedded_basis[0];
    let unit = e.q.as_cmatrix().scale_re(img.trace().re / 2.0);
    assert!(img.dist(&unit) < 1e-12);
    assert!(e.reduce(&CMatrix::identity(2)).dist(&CMatrix::identity(1)) < 1e-12);

    let e = env(&k_diagonal());
    assert_eq!(e.abstract_blocks, vec![1, 1]);
    let gone = removed_diagonals(&e);
    assert_eq!(gone.len(), 1);
    assert!((gone[0][2] - 1.0).abs() < 1e-9);
    assert!(e.elimination_trace.iter().any(|t| t.removed));
}

#[test]
fn spanning_cone_is_required() {
    let x = space(&[CMatrix::unit(2, 0, 1)]);
    assert!(matches!(
        compute_envelope(&x, EnvelopeOptions::default()),
        Err(EnvelopeError::ConeDoesNotSpan { .. })
    ));
}

#[test]
fn embedding_certificates() {
    let e = env(&space(&[CMatrix::identity(2)]));
    let c = certify_embedding(&e, 2, 50, 1).unwrap();
    assert!(c.passed);
    assert!(c.max_discrepancy < 1e-14);

    let e = env(&generic_m5(2));
    let c = certify_embedding(&e, 2, 50, 2).unwrap();
    assert!(c.max_discrepancy <= 1e-9);
    assert!(c.inverse.is_none());

    let e = env(&k_diagonal());
    let c = certify_embedding(&e, 3, 500, 3).unwrap();
    assert!(c.passed, "{c:?}");
    assert!(c.max_discrepancy <= 1e-7);
    assert!(c.inverse.as_ref().unwrap().is_cc());
}

#[test]
fn isomorphism_examples() {
    let x = generic_m5(4);
    let a = env(&x);
    let mut r = rng(40);
    let w = random_unitary(&mut r, 5);
    let conj = |m: &CMatrix| m.compress(&w.adjoint());
    let y = space(&x.basis_matrices().iter().map(conj).collect::<Vec<_>>());
    let b = env(&y);
    let t: Vec<CMatrix> = x.basis_matrices().iter().map(conj).collect();
    let iso = induced_isomorphism(&a, &b, &t).unwrap().expect("isomorphic");
    assert!(iso.residual < 1e-6);

    let same = induced_isomorphism(&a, &a, &x.basis_matrices()).unwrap().expect("identity");
    let u = &same.blocks[0].unitary;
    let phase = u[(0, 0)];
    assert!(u.dist(&CMatrix::identity(5).scale(phase)) < 1e-6);

    let d = env(&k_diagonal());
    let m2 = env(&space(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]));
    let c = env(&space(&[CMatrix::identity(2)]));
    assert!(induced_isomorphism(&m2, &c, &[CMatrix::identity(2), CMatrix::identity(2)])
        .map(|r| r.is_none())
        .unwrap_or(true));
    assert_eq!(d.abstract_blocks, m2.abstract_blocks);
}

#[test]
fn unitization_morphism_examples() {
    let x = space(&[CMatrix::identity(2)]);
    let e = env(&x);
    let u = unitization_morphism(&x, &e).unwrap();
    assert!(u.completely_positive);
    assert!(u.images[0].dist(e.q.as_cmatrix()) < 1e-12);

    let x = k_diagonal();
    let e = env(&x);
    let u = unitization_morphism(&x, &e).unwrap();
    assert!(u.completely_positive);
    for img in &u.images {
        assert!(img[(2, 2)].norm() < 1e-9, "third coordinate dropped");
    }

    let x = generic_m5(5);
    let e = env(&x);
    let u = unitization_morphism(&x, &e).unwrap();
    for (d, i) in u.domain.iter().zip(&u.images) {
        assert!(d.dist(i) < 1e-9);
    }
}

#[test]
fn compression_is_a_surjective_homomorphism() {
    let x = space(&diagonal_embedding(&[vec![1.0, 0.0, 0.5, 0.5], vec![0.0, 1.0, 0.5, 0.5]]));
    let e = env(&x);
    assert_eq!(e.abstract_blocks, vec![1, 1]);
    let q = e.q.as_cmatrix();
    let b = e.algebra.basis();
    for a in b {
        for c in b {
            let lhs = a.as_cmatrix().matmul(c.as_cmatrix()).matmul(q);
            let rhs = a.as_cmatrix().matmul(q).matmul(&c.as_cmatrix().matmul(q));
            assert!(lhs.dist(&rhs) < 1e-10);
        }
    }
    let images: Vec<CMatrix> = b.iter().map(|a| a.as_cmatrix().matmul(q)).collect();
    let (img, _) = validate_space(&images).unwrap();
    let target = generate_star_algebra(&e.embedded_space().unwrap()).unwrap();
    assert_eq!(img.dim(), target.dim());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn elimination_invariants(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let x = space(&random_envelope_instance(&mut r, 6));
        let opts = EnvelopeOptions { seed, ..EnvelopeOptions::default() };
        let a = compute_envelope(&x, opts).unwrap();

        let c = certify_embedding(&a, 3, 60, seed).unwrap();
        prop_assert!(c.passed, "{:?}", c);

        let again = compute_envelope(&a.embedded_space().unwrap(), opts).unwrap();
        prop_assert_eq!(&again.abstract_blocks, &a.abstract_blocks);
        prop_assert!(again.removed().is_empty());

        let rev = compute_envelope(&x, EnvelopeOptions { scan: ScanOrder::AscendingRank, ..opts }).unwrap();
        prop_assert_eq!(&rev.abstract_blocks, &a.abstract_blocks);
        let iso = induced_isomorphism(&a, &rev, &x.basis_matrices()).unwrap();
        prop_assert!(iso.is_some());

        let d = decompose(&a.algebra, seed ^ 1).unwrap();
        prop_assert_eq!(d.len(), a.decomposition.len());
    }
}
