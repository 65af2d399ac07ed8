use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lcp_core::json::{map_from_json, map_to_json, triple_from_json, triple_to_json};
use lcp_core::linalg::{self, max_abs, CMat};
use lcp_core::multilinear::{default_alpha_of, is_invariant, is_symmetric, AlgebraMatrix};
use lcp_core::radon_nikodym::map_from_operator;
use lcp_core::stinespring::{gram_matrix, verify_dilation};
use lcp_core::workbench::generators::twisted_product_map;
use lcp_core::workbench::{generate, random_dilated_map, GeneratorKind, InstanceSpec};
use lcp_core::{dilate, BlockAlgebra, DilateOptions, MultilinearMap, QuantizedDomain};

fn blocks() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![1, 1]), Just(vec![2]), Just(vec![1, 2]), Just(vec![2, 1])]
}

fn flag() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![1]), Just(vec![2]), Just(vec![1, 2]), Just(vec![1, 2, 3])]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Arbitrary flag-diagonal values on every basis tuple: no symmetry or
/// positivity assumed.
fn arbitrary_map(k: usize, blocks: &[usize], flag: &[usize], seed: u64) -> MultilinearMap {
    let mut r = rng(seed);
    let alg = BlockAlgebra::new(blocks).unwrap();
    let n = *flag.last().unwrap();
    let dom = QuantizedDomain::new(n, flag).unwrap();
    let alpha_of = default_alpha_of(&alg, &dom);
    let count = alg.vec_dim().pow(k as u32);
    let pieces = dom.pieces();
    let values = (0..count)
        .map(|_| {
            let blocks: Vec<CMat> = pieces.iter().map(|p| linalg::random_complex(&mut r, p.len(), p.len())).collect();
            linalg::block_diag(&blocks)
        })
        .collect();
    MultilinearMap::new(k, alg, dom, alpha_of, values).unwrap()
}

fn small_spec(seed: u64, k: usize, blocks: Vec<usize>, flag: Vec<usize>) -> InstanceSpec {
    let mut spec = InstanceSpec::dilated(seed, k, &blocks, &flag);
    spec.max_leg_dim = 2;
    spec
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn algebra_star_and_seminorm_identities(blocks in blocks(), seed in any::<u64>()) {
        let alg = BlockAlgebra::new(&blocks).unwrap();
        let mut r = rng(seed);
        let a = alg.random_element(&mut r);
        let b = alg.random_element(&mut r);
        prop_assert!(a.mul(&b).adjoint().sub(&b.adjoint().mul(&a.adjoint())).norm() < 1e-12);
        prop_assert!(a.mul(&alg.unit()).sub(&a).norm() < 1e-14);
        let mut prev = 0.0;
        for alpha in 1..=alg.level_count() {
            let p = a.seminorm(alpha).unwrap();
            prop_assert!(p + 1e-12 >= prev);
            prev = p;
            let cstar = a.adjoint().mul(&a).seminorm(alpha).unwrap();
            prop_assert!((cstar - p * p).abs() <= 1e-9 * (1.0 + p * p));
            prop_assert!(a.mul(&b).seminorm(alpha).unwrap() <= p * b.seminorm(alpha).unwrap() + 1e-9);
            prop_assert!(a.tail(alpha).seminorm(alpha).unwrap() < 1e-14);
            prop_assert!(a.sub(&a.truncate(alpha)).sub(&a.tail(alpha)).norm() < 1e-14);
        }
        prop_assert!((prev - a.norm()).abs() < 1e-9 * (1.0 + prev));
    }

    #[test]
    fn adjoint_map_commutes_with_amplification(
        k in 1usize..=3, blocks in blocks(), flag in flag(), n in 1usize..=2, seed in any::<u64>()
    ) {
        let phi = arbitrary_map(k, &blocks, &flag, seed);
        let alg = phi.domain().clone();
        let mut r = rng(seed ^ 0x5a5a);
        let args: Vec<AlgebraMatrix> = (0..k).map(|_| AlgebraMatrix::random(&alg, n, &mut r)).collect();
        let reversed: Vec<AlgebraMatrix> = args.iter().rev().map(AlgebraMatrix::adjoint).collect();
        let lhs = phi.adjoint_map().amplify(&args).unwrap();
        let rhs = phi.amplify(&reversed).unwrap().adjoint();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }

    #[test]
    fn adjoint_map_is_an_involution(k in 1usize..=3, blocks in blocks(), seed in any::<u64>()) {
        let phi = arbitrary_map(k, &blocks, &[1, 2], seed);
        prop_assert!(phi.adjoint_map().adjoint_map().max_abs_diff(&phi).unwrap() == 0.0);
    }

    #[test]
    fn map_json_roundtrip_is_exact(k in 1usize..=2, blocks in blocks(), flag in flag(), seed in any::<u64>()) {
        let phi = arbitrary_map(k, &blocks, &flag, seed);
        let text = serde_json::to_string(&map_to_json(&phi)).unwrap();
        let back = map_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, phi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn dilated_maps_pass_every_structural_check(
        seed in 0u64..10_000, k in 1usize..=3, blocks in blocks(), flag in flag()
    ) {
        let d = random_dilated_map(&small_spec(seed, k, blocks, flag)).unwrap();
        let phi = &d.phi;
        prop_assert!(is_symmetric(phi, 1e-9));
        prop_assert!(is_invariant(phi, 1e-9));
        prop_assert!(gram_matrix(phi).is_psd(1e-9));
        let t = dilate(phi, DilateOptions::default()).unwrap();
        prop_assert!(t.rank() <= d.ground_truth.rank());
        let rel = verify_dilation(phi, &t).unwrap() / phi.max_basis_norm().max(f64::MIN_POSITIVE);
        prop_assert!(rel <= 1e-8, "relative verify residual {rel:e}");
        let t2 = triple_from_json(&triple_to_json(&t)).unwrap();
        prop_assert!(verify_dilation(phi, &t2).unwrap() <= rel * phi.max_basis_norm() + 1e-15);
    }

    #[test]
    fn trivial_commutant_operators_give_phi_and_zero(seed in 0u64..10_000, k in 1usize..=2, blocks in blocks()) {
        let phi = random_dilated_map(&small_spec(seed, k, blocks, vec![1, 2])).unwrap().phi;
        let t = dilate(&phi, DilateOptions::default()).unwrap();
        let r = t.rank();
        let same = map_from_operator(&t, &linalg::identity(r), 1e-9).unwrap();
        prop_assert!(same.max_abs_diff(&phi).unwrap() <= 1e-10 * (1.0 + phi.max_basis_norm()));
        let zero = map_from_operator(&t, &linalg::zeros(r, r), 1e-9).unwrap();
        prop_assert!(zero.max_basis_norm() == 0.0);
        let half = map_from_operator(&t, &linalg::identity(r).scale(0.5), 1e-9).unwrap();
        prop_assert!(half.max_abs_diff(&phi.scale(0.5)).unwrap() <= 1e-10 * (1.0 + phi.max_basis_norm()));
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), kind in prop_oneof![Just(GeneratorKind::Dilated), Just(GeneratorKind::Planted)]) {
        let mut spec = InstanceSpec::desk(seed % 1000);
        spec.kind = kind;
        let a = serde_json::to_string(&generate(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&generate(&spec).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn twisted_product_is_invariant_iff_diagonal(x00 in -2.0f64..2.0, x11 in -2.0f64..2.0, off in 0.01f64..2.0) {
        let mut x = CMat::zeros(2, 2);
        x[(0, 0)] = linalg::C64::new(x00, 0.0);
        x[(1, 1)] = linalg::C64::new(x11, 0.0);
        prop_assert!(is_invariant(&twisted_product_map(&x), 1e-9));
        x[(0, 1)] = linalg::C64::new(off, 0.0);
        prop_assert!(!is_invariant(&twisted_product_map(&x), 1e-9));
    }
}
