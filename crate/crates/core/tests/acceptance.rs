//! Acceptance run: one PASS/FAIL line per criterion. Built with `harness =
//! false` so the lines show up in plain `cargo test` output.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lcp_core::linalg::{self, herm_eigen, max_abs, spectral_norm, CMat};
use lcp_core::multilinear::{check_invariant, check_kernel_condition, check_local_positivity, check_symmetric};
use lcp_core::radon_nikodym::{
    commutant_residual, dominates, order_interval_check, rn_derivative, AFFINE_TOL, INJECTIVITY_DELTA,
};
use lcp_core::stinespring::{
    dilate, gram_raw, is_minimal, random_flag_unitary, unitary_equivalence, verify_dilation, DilateOptions, StinespringTriple,
    TensorIndex,
};
use lcp_core::workbench::generators::{diagonal_map, transpose_map};
use lcp_core::workbench::{
    brute_force_gram, choi_stinespring_oracle_k1, defect_map, planted_pair, random_dilated_map, DefectKind, DefectSpec,
    Dilated, GeneratorKind, InstanceSpec,
};
use lcp_core::{BlockAlgebra, Error, MultilinearMap, QuantizedDomain};

const INSTANCES: u64 = 100;
const RUNTIME_BUDGET: Duration = Duration::from_secs(60);
const VERIFY_REL_TOL: f64 = 1e-8;
const INVARIANT_TOL: f64 = 1e-9;
const V_NORM_SLACK: f64 = 1e-12;
const ISOMETRY_TOL: f64 = 1e-9;
const EQUIVALENCE_INSTANCES: u64 = 25;
const EQUIVALENCE_TOL: f64 = 1e-8;
const PLANTED_PAIRS: u64 = 50;
const DELTA_TOL: f64 = 1e-8;
const CONTRACTION_TOL: f64 = 1e-9;
const COMMUTANT_TOL: f64 = 1e-9;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const ORDER_INSTANCES: u64 = 25;
const ORDER_PAIRS: usize = 20;
const GRAM_ORACLE_TOL: f64 = 1e-12;
const GRAM_ORACLE_MAX_DIM: usize = 200;
const CHOI_RECONSTRUCTION_TOL: f64 = 1e-8;
const CHECK_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Instance {
    spec: InstanceSpec,
    dilated: Dilated,
    triple: Option<StinespringTriple>,
    elapsed: Duration,
}

fn build_instances() -> Vec<Instance> {
    (0..INSTANCES)
        .map(|seed| {
            let spec = InstanceSpec::desk(seed);
            let start = Instant::now();
            let dilated = random_dilated_map(&spec).expect("desk specs are feasible");
            let triple = dilate(&dilated.phi, DilateOptions::default()).ok();
            Instance { spec, dilated, triple, elapsed: start.elapsed() }
        })
        .collect()
}

fn criterion_1(instances: &[Instance]) -> Outcome {
    let ks: BTreeSet<usize> = instances.iter().map(|i| i.spec.k).collect();
    let blocks: BTreeSet<Vec<usize>> = instances.iter().map(|i| i.spec.blocks.clone()).collect();
    let coverage = ks == (1..=4).collect() && blocks.len() == 3 && instances.iter().all(|i| i.spec.flag.len() <= 3);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut total = Duration::ZERO;
    for inst in instances {
        let start = Instant::now();
        let rel = match &inst.triple {
            Some(t) => verify_dilation(&inst.dilated.phi, t).unwrap() / inst.dilated.phi.max_basis_norm(),
            None => f64::INFINITY,
        };
        total += inst.elapsed + start.elapsed();
        if rel.is_nan() || rel > VERIFY_REL_TOL {
            failures += 1;
        }
        worst = worst.max(rel);
    }
    outcome(
        coverage && failures == 0 && total < RUNTIME_BUDGET,
        format!(
            "{} instances, k {:?}, blocks {:?}, worst verify/max-norm {worst:.2e} (tol {VERIFY_REL_TOL:.0e}), failures {failures}, dilate+verify time {:.2}s (budget {}s)",
            instances.len(),
            ks,
            blocks,
            total.as_secs_f64(),
            RUNTIME_BUDGET.as_secs()
        ),
    )
}

/// Checks on random elements, independent of the residuals recorded by dilate.
fn triple_defects(t: &StinespringTriple, rng: &mut ChaCha8Rng) -> [f64; 4] {
    let alg = t.domain();
    let r = t.rank();
    let (mut hom, mut comm, mut contr, mut flag) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in 1..=t.m() {
        let unit = t.rep(p, &alg.unit());
        hom = hom.max(max_abs(&(unit - linalg::identity(r))));
        for _ in 0..4 {
            let a = alg.random_element(rng);
            let b = alg.random_element(rng);
            let pa = t.rep(p, &a);
            hom = hom.max(max_abs(&(t.rep(p, &a.mul(&b)) - &pa * t.rep(p, &b))));
            hom = hom.max(max_abs(&(t.rep(p, &a.adjoint()) - pa.adjoint())));
            for q in 1..=t.m() {
                if q != p {
                    let qb = t.rep(q, &b);
                    comm = comm.max(max_abs(&(&pa * &qb - &qb * &pa)));
                }
            }
            flag = flag.max(t.space().flag_deviation(&pa).0);
            for lvl in 1..=t.codomain().level_count() {
                let d = t.space().level_dim(lvl);
                let alpha = t.alpha_of()[lvl - 1];
                let restricted = spectral_norm(&pa.columns(0, d).into_owned());
                contr = contr.max(restricted - a.seminorm(alpha).unwrap());
                // On N_alpha the restriction must vanish outright.
                let n = alg.random_kernel_element(rng, alpha);
                contr = contr.max(spectral_norm(&t.rep(p, &n).columns(0, d).into_owned()));
            }
        }
    }
    [hom, comm, contr, flag]
}

fn criterion_2(instances: &[Instance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 4];
    let mut v_excess: f64 = 0.0;
    let mut isometry: f64 = 0.0;
    let mut unital_count = 0;
    let mut missing = 0;
    for inst in instances {
        let Some(t) = &inst.triple else {
            missing += 1;
            continue;
        };
        for (w, d) in worst.iter_mut().zip(triple_defects(t, &mut rng)) {
            *w = w.max(d);
        }
        let v = t.v();
        v_excess = v_excess.max(spectral_norm(v) - 1.0);
        let phi_unit = inst.dilated.phi.unit_value();
        if max_abs(&(phi_unit - linalg::identity(v.ncols()))) <= ISOMETRY_TOL {
            unital_count += 1;
            isometry = isometry.max(max_abs(&(v.adjoint() * v - linalg::identity(v.ncols()))));
        }
    }
    let ok = missing == 0
        && worst.iter().all(|&w| w <= INVARIANT_TOL)
        && v_excess <= V_NORM_SLACK
        && isometry <= ISOMETRY_TOL
        && unital_count > 0;
    outcome(
        ok,
        format!(
            "homomorphism/adjoint/unital {:.2e}, commuting {:.2e}, local contractivity excess {:.2e}, flag {:.2e} (tol {INVARIANT_TOL:.0e}); ||V||-1 {v_excess:.2e} (slack {V_NORM_SLACK:.0e}); isometry defect {isometry:.2e} on {unital_count} unital maps; missing triples {missing}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn criterion_3(instances: &[Instance]) -> Outcome {
    let minimal = instances.iter().filter(|i| i.triple.as_ref().is_some_and(is_minimal)).count();
    let mut worst: f64 = 0.0;
    let mut u_error: f64 = 0.0;
    let mut failures = 0;
    for inst in instances.iter().take(EQUIVALENCE_INSTANCES as usize) {
        let Some(t) = &inst.triple else {
            failures += 1;
            continue;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst.spec.seed);
        let w = random_flag_unitary(t.space(), &mut rng);
        let moved = t.conjugated(&w, INVARIANT_TOL).unwrap();
        match unitary_equivalence(t, &moved, EQUIVALENCE_TOL) {
            Ok(eq) => {
                worst = worst.max(eq.residuals.max());
                u_error = u_error.max(max_abs(&(&eq.u - &w)));
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        minimal == instances.len() && failures == 0 && worst <= EQUIVALENCE_TOL && u_error <= EQUIVALENCE_TOL,
        format!(
            "minimal {minimal}/{}; {EQUIVALENCE_INSTANCES} planted unitaries: worst equivalence residual {worst:.2e}, |U - W|_max {u_error:.2e} (tol {EQUIVALENCE_TOL:.0e}), failures {failures}",
            instances.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = [0.0f64; 4];
    let mut failures = 0;
    for seed in 0..PLANTED_PAIRS {
        let mut spec = InstanceSpec::desk(seed);
        spec.kind = GeneratorKind::Planted;
        let pair = planted_pair(&spec).expect("desk specs are feasible");
        let cert = match rn_derivative(&pair.phi, &pair.psi, DilateOptions::default()) {
            Ok(c) => c,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let delta_err = spectral_norm(&(&cert.delta - &pair.delta0));
        let e = herm_eigen(&cert.delta);
        let spectrum = (-e.min()).max(e.max() - 1.0).max(0.0);
        let comm = commutant_residual(&pair.triple, &cert.delta);
        let rebuilt = pair.triple.induced_map(Some(&cert.delta)).unwrap();
        let recon = pair.psi.max_abs_diff(&rebuilt).unwrap();
        for (w, v) in worst.iter_mut().zip([delta_err, spectrum, comm, recon]) {
            *w = w.max(v);
        }
    }
    let ok = failures == 0
        && worst[0] <= DELTA_TOL
        && worst[1] <= CONTRACTION_TOL
        && worst[2] <= COMMUTANT_TOL
        && worst[3] <= RECONSTRUCTION_TOL;
    outcome(
        ok,
        format!(
            "{PLANTED_PAIRS} planted pairs: ||Delta - Delta0|| {:.2e} (tol {DELTA_TOL:.0e}), spectrum outside [0,1] {:.2e} (tol {CONTRACTION_TOL:.0e}), commutant {:.2e} (tol {COMMUTANT_TOL:.0e}), ||psi - phi_Delta||_max {:.2e} (tol {RECONSTRUCTION_TOL:.0e}), failures {failures}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut affine: f64 = 0.0;
    let mut monotone = f64::INFINITY;
    let mut ratio = f64::INFINITY;
    let mut pairs = 0;
    let mut failed = Vec::new();
    for seed in 0..ORDER_INSTANCES {
        let phi = random_dilated_map(&InstanceSpec::desk(seed)).unwrap().phi;
        match order_interval_check(&phi, ORDER_PAIRS, seed, CHECK_TOL) {
            Ok(r) => {
                affine = affine.max(r.stats.affine);
                monotone = monotone.min(r.stats.monotone_min_relative);
                ratio = ratio.min(r.stats.injectivity_ratio);
                pairs += r.stats.injectivity_pairs;
                if !r.report.passed() {
                    failed.push(seed);
                }
            }
            Err(_) => failed.push(seed),
        }
    }
    outcome(
        failed.is_empty() && affine <= AFFINE_TOL,
        format!(
            "{ORDER_INSTANCES} instances x {ORDER_PAIRS} pairs: affine {affine:.2e} (tol {AFFINE_TOL:.0e}), smallest relative Gram eigenvalue of phi_T2 - phi_T1 {monotone:.2e}, injectivity ratio >= {ratio:.2} over {pairs} pairs with gap >= {INJECTIVITY_DELTA:.0e}, failing instances {failed:?}"
        ),
    )
}

fn criterion_6(instances: &[Instance]) -> Outcome {
    let mut gram_worst: f64 = 0.0;
    let mut gram_checked = 0;
    let mut k1 = 0;
    let mut dim_mismatch = Vec::new();
    let mut choi_recon: f64 = 0.0;
    for inst in instances {
        let phi = &inst.dilated.phi;
        if TensorIndex::for_map(phi).dim() <= GRAM_ORACLE_MAX_DIM {
            gram_checked += 1;
            gram_worst = gram_worst.max(max_abs(&(brute_force_gram(phi) - gram_raw(phi))));
        }
        if phi.k() == 1 {
            k1 += 1;
            let oracle = choi_stinespring_oracle_k1(phi).unwrap();
            choi_recon = choi_recon.max(oracle.reconstruction);
            let dims = inst.triple.as_ref().map(|t| t.space().flag().to_vec());
            if dims.as_deref() != Some(&oracle.level_dims[..]) {
                dim_mismatch.push(inst.spec.seed);
            }
        }
    }
    outcome(
        gram_worst <= GRAM_ORACLE_TOL && dim_mismatch.is_empty() && k1 > 0 && choi_recon <= CHOI_RECONSTRUCTION_TOL,
        format!(
            "brute-force Gram on {gram_checked} instances: max diff {gram_worst:.2e} (tol {GRAM_ORACLE_TOL:.0e}); Choi oracle on {k1} k=1 instances: dim mismatches {dim_mismatch:?}, Kraus reconstruction {choi_recon:.2e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let transpose = check_local_positivity(&transpose_map(), 2, 50, 7, CHECK_TOL);
    let transpose_ok = !transpose.passed() && transpose.witness.is_some();

    let mut spec = InstanceSpec::desk(4);
    spec.k = 2;
    let inv_defect = defect_map(&spec, &DefectSpec { kind: DefectKind::Invariance, epsilon: 1e-6, location: None }).unwrap();
    let inv = check_invariant(&inv_defect, CHECK_TOL);
    let sym_of_inv = check_symmetric(&inv_defect, CHECK_TOL);
    let invariance_ok = !inv.passed() && inv.witness.is_some() && sym_of_inv.passed();

    let phi = random_dilated_map(&InstanceSpec::desk(5)).unwrap().phi;
    let doubled = phi.scale(2.0);
    let domination_ok = !dominates(&phi, &doubled, CHECK_TOL) && dominates(&doubled, &phi, CHECK_TOL);

    let mut spec = InstanceSpec::desk(1);
    spec.k = 2;
    let sym_defect = defect_map(&spec, &DefectSpec { kind: DefectKind::Symmetry, epsilon: 1e-6, location: None }).unwrap();
    let sym = check_symmetric(&sym_defect, CHECK_TOL);
    let dil = dilate(&sym_defect, DilateOptions::default());
    let wd = matches!(dil, Err(Error::WellDefinedness { .. }));
    let symmetry_ok = wd && !sym.passed() && sym.witness.is_some();
    let dil_msg = match &dil {
        Ok(_) => "dilate succeeded".to_string(),
        Err(e) => e.to_string(),
    };
    outcome(
        transpose_ok && invariance_ok && domination_ok && symmetry_ok,
        format!(
            "transpose positivity verdict {} (residual {:.2e}, witness {}); invariance defect verdict {} (residual {:.2e}); dominates(phi, 2phi) = {}; symmetry defect (residual {:.2e}) -> {dil_msg}",
            transpose.verdict.as_str(),
            transpose.worst_residual,
            transpose.witness.is_some(),
            inv.verdict.as_str(),
            inv.worst_residual,
            !domination_ok,
            sym.worst_residual
        ),
    )
}

fn criterion_8() -> Outcome {
    let alg = BlockAlgebra::new(&[1, 1]).unwrap();
    let one = CMat::from_element(1, 1, linalg::ONE);
    let a = alg.element(vec![one.clone(), one.scale(-1.0)]).unwrap();
    let level1 = a.is_local_positive(1, CHECK_TOL).unwrap();
    let level2 = a.is_local_positive(2, CHECK_TOL).unwrap();
    let elements_ok = level1 && !level2;

    // diag(a_1, a_2): nonzero on N_1, but only outside H_1.
    let garbage = diagonal_map();
    let kernel_pass = check_kernel_condition(&garbage, 1, 2, 50, 8, CHECK_TOL).unwrap();
    // Control: a_1 + a_2 on all of C^2 leaks N_1 into H_1.
    let leaky = MultilinearMap::from_fn(
        1,
        alg.clone(),
        QuantizedDomain::new(2, &[1, 2]).unwrap(),
        Some(vec![1, 2]),
        |_| linalg::identity(2),
    )
    .unwrap();
    let kernel_fail = check_kernel_condition(&leaky, 1, 2, 50, 8, CHECK_TOL).unwrap();
    outcome(
        elements_ok && kernel_pass.passed() && !kernel_fail.passed(),
        format!(
            "(1,-1) positive at level 1: {level1}, at level 2: {level2}; garbage-on-N_1 map kernel condition at level 1: {} (residual {:.2e}); leaking control: {}",
            kernel_pass.verdict.as_str(),
            kernel_pass.worst_residual,
            kernel_fail.verdict.as_str()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let instances = build_instances();
    let results = [
        criterion_1(&instances),
        criterion_2(&instances),
        criterion_3(&instances),
        criterion_4(),
        criterion_5(),
        criterion_6(&instances),
        criterion_7(),
        criterion_8(),
    ];
    let parallel = if lcp_core::par::is_parallel() { "parallel" } else { "sequential" };
    println!("acceptance ({parallel} build)");
    for (n, r) in results.iter().enumerate() {
        println!("CRITERION {} {}: {}", n + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    println!("acceptance total {:.2}s", start.elapsed().as_secs_f64());
    if results.iter().any(|r| !r.pass) {
        std::process::exit(1);
    }
}
