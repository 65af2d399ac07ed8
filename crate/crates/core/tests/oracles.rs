use lcp_core::linalg::{self, max_abs, CMat};
use lcp_core::stinespring::{gram_matrix, gram_raw};
use lcp_core::workbench::generators::scaled_identity_map;
use lcp_core::workbench::{brute_force_gram, choi_stinespring_oracle_k1, random_dilated_map, InstanceSpec};
use lcp_core::{dilate, BlockAlgebra, DilateOptions, Error, MultilinearMap, QuantizedDomain};

fn identity_on_diagonal(alpha: usize) -> MultilinearMap {
    let alg = BlockAlgebra::new(&[1, 1]).unwrap();
    let dom = QuantizedDomain::new(2, &[2]).unwrap();
    MultilinearMap::from_fn(1, alg, dom, Some(vec![alpha]), |t| {
        let mut x = linalg::zeros(2, 2);
        x[(t[0], t[0])] = linalg::ONE;
        x
    })
    .unwrap()
}

#[test]
fn identity_on_the_diagonal_has_gram_rank_two() {
    let phi = identity_on_diagonal(2);
    let g = gram_matrix(&phi);
    let rank = linalg::herm_eigen(&gram_raw(&phi)).values.iter().filter(|&&v| v > 1e-10 * g.lambda_max()).count();
    assert_eq!(rank, 2);
    assert_eq!(max_abs(&(brute_force_gram(&phi) - gram_raw(&phi))), 0.0);
    let t = dilate(&phi, DilateOptions::default()).unwrap();
    assert_eq!(t.rank(), 2);
    assert_eq!(choi_stinespring_oracle_k1(&phi).unwrap().level_dims, vec![2]);
}

#[test]
fn identity_on_the_diagonal_is_not_local_at_alpha_one() {
    // The second coordinate lies in N_1 but is not annihilated on H_1 = C^2.
    let err = dilate(&identity_on_diagonal(1), DilateOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvariantViolation { .. }), "{err}");
}

#[test]
fn zero_map_has_zero_gram_and_empty_dilation() {
    let alg = BlockAlgebra::new(&[1, 2]).unwrap();
    let dom = QuantizedDomain::new(2, &[1, 2]).unwrap();
    let phi = MultilinearMap::zero(2, alg, dom, None).unwrap();
    assert_eq!(max_abs(&brute_force_gram(&phi)), 0.0);
    assert_eq!(max_abs(&gram_raw(&phi)), 0.0);
    let t = dilate(&phi, DilateOptions::default()).unwrap();
    assert_eq!(t.rank(), 0);
}

#[test]
fn scaled_identity_has_one_kraus_operator_per_block() {
    for n in 1..=3 {
        let phi = scaled_identity_map(n, 0.7);
        let o = choi_stinespring_oracle_k1(&phi).unwrap();
        assert_eq!(o.level_dims, vec![n]);
        assert!(o.reconstruction < 1e-14);
        assert_eq!(dilate(&phi, DilateOptions::default()).unwrap().rank(), n);
    }
}

#[test]
fn rank_one_compression_matches_the_choi_count() {
    // phi(a) = v^* a v for a column v: one Kraus operator, dilation dimension 2.
    let alg = BlockAlgebra::new(&[2]).unwrap();
    let dom = QuantizedDomain::new(1, &[1]).unwrap();
    let v = CMat::from_column_slice(2, 1, &[linalg::C64::new(0.6, 0.0), linalg::C64::new(0.0, 0.8)]);
    let a = alg.clone();
    let phi = MultilinearMap::from_fn(1, alg, dom, None, move |t| v.adjoint() * a.basis_element(t[0]).block(0) * &v).unwrap();
    let o = choi_stinespring_oracle_k1(&phi).unwrap();
    assert_eq!(o.level_dims, vec![2]);
    assert_eq!(dilate(&phi, DilateOptions::default()).unwrap().rank(), 2);
}

#[test]
fn choi_oracle_agrees_with_dilate_on_generated_maps() {
    for seed in 0..30 {
        let spec = InstanceSpec::dilated(seed, 1, &[1, 2], &[1, 2, 3]);
        let phi = random_dilated_map(&spec).unwrap().phi;
        let o = choi_stinespring_oracle_k1(&phi).unwrap();
        let t = dilate(&phi, DilateOptions::default()).unwrap();
        assert_eq!(o.level_dims, t.space().flag(), "seed {seed}");
        assert!(o.reconstruction < 1e-10, "seed {seed}");
    }
}

#[test]
fn brute_force_gram_matches_for_higher_k() {
    for (seed, k) in [(1, 2), (2, 3), (3, 4)] {
        let spec = InstanceSpec::dilated(seed, k, &[1, 1], &[1, 2]);
        let phi = random_dilated_map(&spec).unwrap().phi;
        assert!(max_abs(&(brute_force_gram(&phi) - gram_raw(&phi))) < 1e-12, "k = {k}");
    }
}

#[test]
fn choi_oracle_rejects_multilinear_maps() {
    let phi = random_dilated_map(&InstanceSpec::dilated(0, 2, &[1, 1], &[1])).unwrap().phi;
    assert!(matches!(choi_stinespring_oracle_k1(&phi), Err(Error::Precondition(_))));
}
