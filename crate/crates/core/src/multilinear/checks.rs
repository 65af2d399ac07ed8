//! Property checks for multilinear maps.
//!
//! Symmetry and invariance are decided exactly on basis tuples. Local
//! positivity and local contractivity are sampled: a pass only means no
//! counterexample was found, and is reported as [`Verdict::InconclusivePass`].

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{AlgebraMatrix, MultilinearMap, Tuples};
use crate::error::Result;
use crate::json::algebra_matrix_value;
use crate::linalg::{self, max_abs, spectral_norm};
use crate::par;
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    InconclusivePass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::InconclusivePass => "inconclusive-pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sampling {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MapCheckReport {
    pub property: String,
    pub verdict: Verdict,
    pub worst_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
}

impl MapCheckReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

pub fn check_symmetric(phi: &MultilinearMap, tol: f64) -> MapCheckReport {
    let star = phi.adjoint_map();
    let scale = 1.0 + phi.max_basis_norm();
    let worst = par::map_argmax(phi.values().len(), |i| max_abs(&(&phi.values()[i] - &star.values()[i])) / scale);
    exact_report("symmetric", worst, tol, |idx| json!({ "tuple": phi.tuples().decode(idx) }))
}

pub fn is_symmetric(phi: &MultilinearMap, tol: f64) -> bool {
    check_symmetric(phi, tol).passed()
}

/// Argument lists for both sides of the invariance identity at basis indices
/// `a` (k of them) and `c` (`k - m` of them).
fn invariance_sides(phi: &MultilinearMap, a: &[usize], c: &[usize]) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let alg = phi.domain();
    let k = phi.k();
    let nc = c.len();
    let mut lhs: Vec<Option<usize>> = a.iter().map(|&x| Some(x)).collect();
    let mut rhs = lhs.clone();
    // Left side multiplies c_p onto the right of a_p for p = 1..nc.
    for p in 0..nc {
        lhs[p] = alg.basis_product(a[p], c[p]);
    }
    // Right side multiplies c onto the left of the trailing slots, in reverse.
    for (q, &cq) in c.iter().enumerate().take(nc) {
        let slot = k - 1 - q;
        rhs[slot] = alg.basis_product(cq, a[slot]);
    }
    (lhs, rhs)
}

pub fn check_invariant(phi: &MultilinearMap, tol: f64) -> MapCheckReport {
    let nc = phi.k() - phi.m();
    let d = phi.domain().vec_dim();
    let a_tuples = phi.tuples();
    let c_tuples = Tuples { d, k: nc };
    let scale = 1.0 + phi.max_basis_norm();
    let per_a = par::map_collect(a_tuples.count(), |ai| {
        let a = a_tuples.decode(ai);
        let mut best = (0.0f64, 0usize);
        for ci in 0..c_tuples.count() {
            let c = c_tuples.decode(ci);
            let (l, r) = invariance_sides(phi, &a, &c);
            let res = max_abs(&(phi.value_or_zero(&l) - phi.value_or_zero(&r))) / scale;
            if res > best.0 || res.is_nan() {
                best = (res, ci);
            }
        }
        best
    });
    let mut worst: Option<(usize, f64)> = None;
    for (ai, &(res, _)) in per_a.iter().enumerate() {
        if worst.is_none_or(|(_, w)| res > w) || res.is_nan() {
            worst = Some((ai, res));
        }
    }
    exact_report("invariant", worst, tol, |ai| {
        json!({ "a": a_tuples.decode(ai), "c": c_tuples.decode(per_a[ai].1) })
    })
}

pub fn is_invariant(phi: &MultilinearMap, tol: f64) -> bool {
    check_invariant(phi, tol).passed()
}

fn exact_report(property: &str, worst: Option<(usize, f64)>, tol: f64, witness: impl Fn(usize) -> Value) -> MapCheckReport {
    let (idx, res) = worst.unwrap_or((0, 0.0));
    let failed = !(res <= tol);
    MapCheckReport {
        property: property.into(),
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        worst_residual: res,
        witness: failed.then(|| witness(idx)),
        sampling: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    MatrixUnit,
    Symmetric,
    Kernel,
    Contraction,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::MatrixUnit => "matrix-unit",
            Family::Symmetric => "random-symmetric",
            Family::Kernel => "kernel",
            Family::Contraction => "random-contraction",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    level: usize,
    n: usize,
    family: Family,
    trial: usize,
}

struct Sample {
    tuple: Vec<AlgebraMatrix>,
    slot: Option<usize>,
}

/// Lexicographically `idx`-th `n`-subset of `0..total`, if it exists.
fn nth_subset(total: usize, n: usize, mut idx: usize) -> Option<Vec<usize>> {
    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
    }
    if idx >= binom(total, n) {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for remaining in (1..=n).rev() {
        for x in start..total {
            let c = binom(total - x - 1, remaining - 1);
            if idx < c {
                out.push(x);
                start = x + 1;
                break;
            }
            idx -= c;
        }
    }
    Some(out)
}

fn subset_count(total: usize, n: usize) -> usize {
    if n > total {
        return 0;
    }
    (0..n).fold(1usize, |acc, i| acc.saturating_mul(total - i) / (i + 1))
}

/// The tuple whose amplification is the Gram block of the chosen basis
/// `m`-tuples: diagonal matrices of basis elements in the outer slots and
/// `R^* R` (odd `k`) or `R^*, R` (even `k`) in the middle, where `R` is the row
/// of first coordinates. It is alpha-symmetric for every alpha.
pub fn positivity_witness_tuple(phi: &MultilinearMap, chosen: &[Vec<usize>]) -> Vec<AlgebraMatrix> {
    let alg = phi.domain();
    let (k, m) = (phi.k(), phi.m());
    let n = chosen.len();
    let mut tuple = vec![AlgebraMatrix::zero(alg, n); k];
    let mut row = AlgebraMatrix::zero(alg, n);
    for (t, tup) in chosen.iter().enumerate() {
        row.set_coord(tup[0], 0, t, linalg::ONE);
    }
    // Outer slots: p-th from the left holds e*_{i_{m-p}}, mirrored on the right.
    for p in 0..m - 1 {
        let mut left = AlgebraMatrix::zero(alg, n);
        for (s, tup) in chosen.iter().enumerate() {
            left.set_coord(alg.basis_adjoint(tup[m - 1 - p]), s, s, linalg::ONE);
        }
        tuple[k - 1 - p] = left.adjoint();
        tuple[p] = left;
    }
    if k % 2 == 1 {
        tuple[m - 1] = row.adjoint().mul(&row);
    } else {
        tuple[m - 1] = row.adjoint();
        tuple[m] = row;
    }
    tuple
}

fn build_sample(phi: &MultilinearMap, job: Job, seed: u64, subsets: usize) -> Option<Sample> {
    let alg = phi.domain();
    let (k, n) = (phi.k(), job.n);
    let alpha = phi.alpha(job.level);
    let mut rng = stream(seed, &[job.level as u64, n as u64, job.family.tag(), job.trial as u64]);
    match job.family {
        Family::MatrixUnit => {
            let m_tuples = Tuples { d: alg.vec_dim(), k: phi.m() };
            let total = m_tuples.count();
            let picks = if subset_count(total, n) <= subsets {
                nth_subset(total, n, job.trial)?
            } else {
                rand::seq::index::sample(&mut rng, total, n).into_vec()
            };
            let chosen: Vec<Vec<usize>> = picks.iter().map(|&i| m_tuples.decode(i)).collect();
            Some(Sample { tuple: positivity_witness_tuple(phi, &chosen), slot: None })
        }
        Family::Symmetric => {
            let mut tuple: Vec<AlgebraMatrix> = (0..k).map(|_| AlgebraMatrix::random(alg, n, &mut rng)).collect();
            for p in 0..k / 2 {
                let garbage = AlgebraMatrix::random_kernel(alg, n, alpha, &mut rng);
                tuple[k - 1 - p] = tuple[p].adjoint().add(&garbage);
            }
            if k % 2 == 1 {
                let b = AlgebraMatrix::random(alg, n, &mut rng);
                let garbage = AlgebraMatrix::random_kernel(alg, n, alpha, &mut rng);
                tuple[k / 2] = b.adjoint().mul(&b).add(&garbage);
            }
            Some(Sample { tuple, slot: None })
        }
        Family::Kernel => {
            if alpha == alg.level_count() {
                return None;
            }
            let slot = rng.random_range(0..k);
            let tuple = (0..k)
                .map(|p| {
                    let a = if p == slot {
                        AlgebraMatrix::random_kernel(alg, n, alpha, &mut rng)
                    } else {
                        AlgebraMatrix::random(alg, n, &mut rng)
                    };
                    let s = a.seminorm(alg.level_count()).unwrap_or(1.0);
                    if s > 0.0 {
                        a.scale(1.0 / s)
                    } else {
                        a
                    }
                })
                .collect();
            Some(Sample { tuple, slot: Some(slot) })
        }
        Family::Contraction => {
            let tuple = (0..k)
                .map(|_| {
                    if job.trial == 0 {
                        return AlgebraMatrix::identity(alg, n);
                    }
                    let a = AlgebraMatrix::random(alg, n, &mut rng);
                    let s = a.seminorm(alpha).expect("alpha validated");
                    let garbage = AlgebraMatrix::random_kernel(alg, n, alpha, &mut rng);
                    a.scale(1.0 / s).add(&garbage.scale(rng.random_range(0.0..4.0)))
                })
                .collect();
            Some(Sample { tuple, slot: None })
        }
    }
}

fn residual(phi: &MultilinearMap, job: Job, sample: &Sample) -> f64 {
    let out = phi.amplify(&sample.tuple).expect("sample shapes are consistent");
    let c = phi.compress_to_level(&out, job.level);
    match job.family {
        Family::MatrixUnit | Family::Symmetric => {
            let scale = 1.0 + spectral_norm(&c);
            let herm = max_abs(&(&c - c.adjoint())) / scale;
            let neg = (-linalg::min_eigenvalue(&c)).max(0.0) / scale;
            herm.max(neg)
        }
        Family::Kernel => spectral_norm(&c) / (1.0 + spectral_norm(&out)),
        Family::Contraction => (spectral_norm(&c) - 1.0).max(0.0),
    }
}

fn run_jobs(phi: &MultilinearMap, property: &str, jobs: Vec<Job>, sampling: Sampling, tol: f64) -> MapCheckReport {
    let seed = sampling.seed;
    let trials = sampling.trials;
    let results = par::map_collect(jobs.len(), |j| {
        build_sample(phi, jobs[j], seed, trials).map(|s| residual(phi, jobs[j], &s))
    });
    let mut worst = 0.0f64;
    let mut first_fail = None;
    for (j, r) in results.iter().enumerate() {
        if let Some(r) = *r {
            worst = linalg::nan_max(worst, r);
            if first_fail.is_none() && !(r <= tol) {
                first_fail = Some((j, r));
            }
        }
    }
    let witness = first_fail.map(|(j, r)| {
        let job = jobs[j];
        let sample = build_sample(phi, job, seed, trials).expect("sample existed");
        let mut w = json!({
            "level": job.level,
            "alpha": phi.alpha(job.level),
            "n": job.n,
            "family": job.family.name(),
            "trial": job.trial,
            "residual": r,
            "tuple": sample.tuple.iter().map(algebra_matrix_value).collect::<Vec<_>>(),
        });
        if let Some(slot) = sample.slot {
            w["slot"] = json!(slot + 1);
        }
        w
    });
    MapCheckReport {
        property: property.into(),
        verdict: if witness.is_some() { Verdict::Fail } else { Verdict::InconclusivePass },
        worst_residual: worst,
        witness,
        sampling: Some(sampling),
    }
}

fn jobs_for(levels: &[usize], n_max: usize, trials: usize, families: &[Family]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &level in levels {
        for n in 1..=n_max {
            for &family in families {
                for trial in 0..trials {
                    jobs.push(Job { level, n, family, trial });
                }
            }
        }
    }
    jobs
}

/// Sampled test of local complete positivity, including the kernel condition
/// at every level.
pub fn check_local_positivity(phi: &MultilinearMap, n_max: usize, trials: usize, seed: u64, tol: f64) -> MapCheckReport {
    let levels: Vec<usize> = (1..=phi.codomain().level_count()).collect();
    let jobs = jobs_for(&levels, n_max, trials, &[Family::MatrixUnit, Family::Symmetric, Family::Kernel]);
    run_jobs(phi, "local-positivity", jobs, Sampling { n_max, trials, seed }, tol)
}

/// The kernel condition alone at one level: `q_level(phi_n(A)) = 0` whenever
/// some slot of `A` lies in `M_n(N_alpha)`.
pub fn check_kernel_condition(
    phi: &MultilinearMap,
    level: usize,
    n_max: usize,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<MapCheckReport> {
    phi.codomain().check_level(level)?;
    let jobs = jobs_for(&[level], n_max, trials, &[Family::Kernel]);
    Ok(run_jobs(phi, "kernel-condition", jobs, Sampling { n_max, trials, seed }, tol))
}

/// Sampled test of local complete contractivity.
pub fn check_local_contractivity(phi: &MultilinearMap, n_max: usize, trials: usize, seed: u64, tol: f64) -> MapCheckReport {
    let levels: Vec<usize> = (1..=phi.codomain().level_count()).collect();
    let jobs = jobs_for(&levels, n_max, trials.max(1), &[Family::Contraction]);
    run_jobs(phi, "local-contractivity", jobs, Sampling { n_max, trials, seed }, tol)
}
