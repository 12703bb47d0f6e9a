use proptest::prelude::*;
use shilov_core::blockdecomp::*;
use shilov_core::matcore::random::{random_unitary, rng};
use shilov_core::matcore::*;
use shilov_core::stargen::*;
use shilov_core::testgen::random_block_elements;

fn algebra(gens: &[CMatrix]) -> AlgebraPresentation {
    let (x, _) = validate_space(gens).unwrap();
    generate_star_algebra(&x).unwrap()
}

fn full_matrix_units(n: usize) -> Vec<CMatrix> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            v.push(CMatrix::unit(n, i, j));
        }
    }
    v
}

fn rank(p: &HermMatrix) -> usize {
    p.as_cmatrix().trace().re.round() as usize
}

#[test]
fn center_examples() {
    let m2 = algebra(&full_matrix_units(2));
    let z = center(&m2).unwrap();
    assert_eq!(z.len(), 1);
    let i2 = CMatrix::identity(2).scale_re(std::f64::consts::FRAC_1_SQRT_2);
    let c = hs_inner(z[0].as_cmatrix(), &i2).unwrap().norm();
    assert!((c - 1.0).abs() < 1e-10);

    let d3 = algebra(&[CMatrix::unit(3, 0, 0), CMatrix::unit(3, 1, 1), CMatrix::unit(3, 2, 2)]);
    assert_eq!(center(&d3).unwrap().len(), 3);

    // M_2 ⊕ M_3 twisted by a unitary inside M_5.
    let mut r = rng(3);
    let (gens, _) = random_block_elements(&mut r, &[(2, 1), (3, 1)], 3, false);
    let b = algebra(&gens);
    assert_eq!(b.dim(), 13);
    let z = center(&b).unwrap();
    assert_eq!(z.len(), 2);
    for zi in &z {
        for bj in b.basis() {
            let c = &zi.as_cmatrix().matmul(bj.as_cmatrix()) - &bj.as_cmatrix().matmul(zi.as_cmatrix());
            assert!(c.fro_norm() < 1e-9);
        }
    }
}

#[test]
fn projection_examples() {
    let m2 = algebra(&full_matrix_units(2));
    let p = minimal_central_projections(&m2, 0).unwrap();
    assert_eq!(p.len(), 1);
    assert!(p[0].as_cmatrix().dist(&CMatrix::identity(2)) < 1e-10);

    let d3 = algebra(&[CMatrix::unit(3, 0, 0), CMatrix::unit(3, 1, 1), CMatrix::unit(3, 2, 2)]);
    let p = minimal_central_projections(&d3, 5).unwrap();
    assert_eq!(p.len(), 3);
    for i in 0..3 {
        let e = CMatrix::unit(3, i, i);
        assert!(p.iter().any(|q| q.as_cmatrix().dist(&e) < 1e-10), "E_{i}{i} missing");
    }

    // C·1_2 ⊕ M_2 in M_4.
    let mut gens = vec![CMatrix::direct_sum(&[CMatrix::identity(2), CMatrix::zeros(2, 2)])];
    for m in full_matrix_units(2) {
        gens.push(CMatrix::direct_sum(&[CMatrix::zeros(2, 2), m]));
    }
    let b = algebra(&gens);
    let p = minimal_central_projections(&b, 1).unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(rank(&p[0]), 2);
    assert_eq!(rank(&p[1]), 2);
    let d = decompose(&b, 1).unwrap();
    let mut sizes = d.block_sizes.clone();
    sizes.sort();
    assert_eq!(sizes, vec![(1, 2), (2, 1)]);
}

#[test]
fn multiplicity_examples() {
    let scalars = algebra(&[CMatrix::identity(2)]);
    let (k, m, v) = strip_multiplicity(&scalars, &HermMatrix::identity(2), 0).unwrap();
    assert_eq!((k, m), (1, 2));
    assert_eq!(v.shape(), (2, 2));

    let m2 = algebra(&full_matrix_units(2));
    let (k, m, _) = strip_multiplicity(&m2, &HermMatrix::identity(2), 0).unwrap();
    assert_eq!((k, m), (2, 1));

    // {x ⊗ 1_2}, then scrambled by a unitary.
    let mut r = rng(9);
    let u = random_unitary(&mut r, 4);
    let gens: Vec<CMatrix> = full_matrix_units(2)
        .iter()
        .map(|x| x.kron(&CMatrix::identity(2)).compress(&u.adjoint()))
        .collect();
    let b = algebra(&gens);
    let (k, m, v) = strip_multiplicity(&b, b.unit(), 4).unwrap();
    assert_eq!((k, m), (2, 2));
    for g in b.basis() {
        let c = g.as_cmatrix().compress(&v);
        let a = c.submatrix(0, 0, 2, 2);
        assert!(c.dist(&CMatrix::identity(2).kron(&a)) < 1e-7);
    }
}

#[test]
fn projection_outside_algebra_is_rejected() {
    let m2 = algebra(&full_matrix_units(2));
    let d = decompose(&m2, 0).unwrap();
    let p = HermMatrix::from_real_diag(&[1.0, 0.0]);
    assert_eq!(locate_block(&d, &p), Err(DecompError::UnknownProjection));
}

fn block_strategy() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((1usize..=3, 1usize..=2), 1..=3)
        .prop_filter("ambient at most 8", |b| b.iter().map(|(k, m)| k * m).sum::<usize>() <= 8)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    #[test]
    fn decomposition_invariants(blocks in block_strategy(), seed in 0u64..1000) {
        let mut r = rng(seed);
        let (gens, _) = random_block_elements(&mut r, &blocks, 3, false);
        let b = algebra(&gens);
        let d = decompose(&b, seed).unwrap();
        let mut want = blocks.clone();
        want.sort();
        let mut got = d.block_sizes.clone();
        got.sort();
        prop_assert_eq!(&got, &want);
        let sq: usize = d.block_sizes.iter().map(|(k, _)| k * k).sum();
        prop_assert_eq!(sq, b.dim());
        let rk: usize = d.block_sizes.iter().map(|(k, m)| k * m).sum();
        prop_assert_eq!(rk, rank(b.unit()));
        for (i, p) in d.projections.iter().enumerate() {
            prop_assert_eq!(rank(p), d.rank(i));
            for (j, q) in d.projections.iter().enumerate() {
                if i != j {
                    prop_assert!(p.as_cmatrix().matmul(q.as_cmatrix()).fro_norm() < 1e-8);
                }
            }
        }
        prop_assert!(d.structure_defect(&b) < 1e-7);

        let other = decompose(&b, seed.wrapping_add(77)).unwrap();
        let (perm, worst) = match_projections(&d.projections, &other.projections).unwrap();
        prop_assert!(worst < 1e-7);
        for (i, &j) in perm.iter().enumerate() {
            prop_assert_eq!(d.block_sizes[i], other.block_sizes[j]);
        }
    }
}
