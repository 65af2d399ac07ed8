//! Building minimal triples from maps, and comparing triples.

use serde::Serialize;

use super::gram::{gram_matrix, TensorIndex};
use super::triple::StinespringTriple;
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, nan_max, spectral_norm, CMat};
use crate::local_algebra::QuantizedDomain;
use crate::multilinear::MultilinearMap;
use crate::par;

#[derive(Clone, Copy, Debug)]
pub struct DilateOptions {
    /// Positivity slack, well-definedness and invariant tolerance.
    pub tol: f64,
    /// Eigenvalues of the Gram matrix at or below `tol_rank * lambda_max` count as zero.
    pub tol_rank: f64,
}

impl Default for DilateOptions {
    fn default() -> Self {
        Self { tol: 1e-9, tol_rank: 1e-10 }
    }
}

/// Relative singular-value cut used for ranks of spanning sets.
pub const RANK_TOL: f64 = 1e-7;

/// Orthonormal basis adapted to a nested family of column sets: the first
/// `dims[l]` columns of the result span the columns listed in `levels[l]`.
/// With `complete`, the basis is extended to the full ambient space at the
/// last level.
pub(crate) fn flag_adapted_basis(cols: &CMat, levels: &[Vec<usize>], threshold: f64, complete: bool) -> (CMat, Vec<usize>) {
    let r0 = cols.nrows();
    let mut q = linalg::zeros(r0, 0);
    let mut dims = Vec::with_capacity(levels.len());
    for (l, idx) in levels.iter().enumerate() {
        let s = CMat::from_fn(r0, idx.len(), |i, j| cols[(i, idx[j])]);
        let resid = &s - &q * (q.adjoint() * &s);
        let mut fresh = linalg::orthonormal_range(&resid, threshold);
        if complete && l + 1 == levels.len() {
            let proj = linalg::identity(r0) - &q * q.adjoint();
            fresh = linalg::orthonormal_range(&proj, 0.5);
        }
        if fresh.ncols() > 0 {
            // One more pass against the existing basis keeps Q orthonormal to roundoff.
            let fresh = &fresh - &q * (q.adjoint() * &fresh);
            let fresh = linalg::orthonormal_range(&fresh, 0.25);
            q = hcat(&q, &fresh);
        }
        dims.push(q.ncols());
    }
    (q, dims)
}

fn hcat(a: &CMat, b: &CMat) -> CMat {
    let mut out = linalg::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn level_columns(idx: &TensorIndex, flag: &[usize]) -> Vec<Vec<usize>> {
    flag.iter().map(|&d| idx.level_columns(d)).collect()
}

/// Column-gather form of `F L_{p,i}`, where `L_{p,i}` multiplies slot `p`
/// (0-based) of the tensor coordinates by `e_i` on the left.
fn slot_action(f: &CMat, phi: &MultilinearMap, idx: &TensorIndex, p: usize, i: usize) -> CMat {
    let alg = phi.domain();
    let mut out = linalg::zeros(f.nrows(), f.ncols());
    for col in 0..idx.dim() {
        let (ti, h) = idx.split(col);
        let mut t = idx.tuples.decode(ti);
        if let Some(x) = alg.basis_product(i, t[p]) {
            t[p] = x;
            out.set_column(col, &f.column(idx.col(idx.tuples.encode(&t), h)));
        }
    }
    out
}

/// Minimal Stinespring triple of `phi` by factoring its Gram matrix.
pub fn dilate(phi: &MultilinearMap, opts: DilateOptions) -> Result<StinespringTriple> {
    let gram = gram_matrix(phi);
    if !gram.is_psd(opts.tol) {
        return Err(Error::NotAdmissible { min_eigenvalue: gram.lambda_min(), threshold: gram.psd_threshold(opts.tol) });
    }
    let idx = TensorIndex::for_map(phi);
    let lmax = gram.lambda_max().max(0.0);
    let tau = opts.tol_rank * lmax;
    let (vals, u) = gram.eigen.select(|v| v > tau && v > 0.0);
    let (_, kernel) = gram.eigen.select(|v| !(v > tau && v > 0.0));
    let r = vals.len();
    let sqrt_vals: Vec<f64> = vals.iter().map(|v| v.sqrt()).collect();

    let mut f0 = u.adjoint();
    for (row, s) in sqrt_vals.iter().enumerate() {
        f0.row_mut(row).scale_mut(*s);
    }
    let levels = level_columns(&idx, phi.codomain().flag());
    let (q, dims) = flag_adapted_basis(&f0, &levels, tau, true);
    debug_assert_eq!(q.ncols(), r);
    let f = q.adjoint() * &f0;
    let mut f_pinv = u.clone();
    for (col, s) in sqrt_vals.iter().enumerate() {
        f_pinv.column_mut(col).scale_mut(1.0 / s);
    }
    let f_pinv = f_pinv * &q;

    let d = phi.domain().vec_dim();
    let m = phi.m();
    let f_scale = lmax.sqrt().max(f64::MIN_POSITIVE);
    let actions = par::map_collect(m * d, |x| {
        let (p, i) = (x / d, x % d);
        let fl = slot_action(&f, phi, &idx, p, i);
        let wd = if kernel.ncols() == 0 { 0.0 } else { spectral_norm(&(&fl * &kernel)) / f_scale };
        (fl * &f_pinv, wd)
    });
    let mut worst_wd: f64 = 0.0;
    for (x, (_, wd)) in actions.iter().enumerate() {
        if !(*wd <= opts.tol) {
            return Err(Error::WellDefinedness { p: x / d + 1, basis_index: x % d, residual: *wd });
        }
        worst_wd = nan_max(worst_wd, *wd);
    }
    let mut reps = vec![Vec::with_capacity(d); m];
    for (x, (pi, _)) in actions.into_iter().enumerate() {
        reps[x / d].push(pi);
    }

    // V = F iota, iota(g) = 1^{(x) m} (x) g.
    let units = phi.domain().unit_indices();
    let unit_tuples: Vec<usize> = (0..idx.tuples.count())
        .filter(|&ti| idx.tuples.decode(ti).iter().all(|i| units.contains(i)))
        .collect();
    let n = phi.codomain().dim();
    let mut v = linalg::zeros(r, n);
    for &ti in &unit_tuples {
        for h in 0..n {
            let col = f.column(idx.col(ti, h)).into_owned();
            let mut target = v.column_mut(h);
            target += col;
        }
    }

    let space = QuantizedDomain::relaxed(r, &dims)?;
    let mut triple = StinespringTriple::from_parts(
        phi.k(),
        phi.domain().clone(),
        phi.codomain().clone(),
        phi.alpha_of().to_vec(),
        space,
        v,
        reps,
        Some(f),
    )?;
    triple.set_well_definedness(worst_wd);
    triple.validate(opts.tol)?;
    Ok(triple)
}

/// Whether, at every level, the spanning vectors from `H_l` span all of `H^phi_l`.
pub fn is_minimal(triple: &StinespringTriple) -> bool {
    let x = triple.spanning_vectors();
    let idx = triple.tensor_index();
    let top = linalg::singular_values(&x).first().copied().unwrap_or(0.0);
    (1..=triple.codomain().level_count()).all(|lvl| {
        let cols = idx.level_columns(triple.codomain().level_dim(lvl));
        let xl = CMat::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])]);
        let s = linalg::singular_values(&xl);
        let rank = s.iter().filter(|&&v| v > RANK_TOL * top).count();
        rank == triple.space().level_dim(lvl)
    })
}

/// Compress a triple onto the closed span of its spanning vectors.
pub fn minimize(triple: &StinespringTriple, tol: f64) -> Result<StinespringTriple> {
    let x = triple.spanning_vectors();
    let idx = triple.tensor_index();
    let top = linalg::singular_values(&x).first().copied().unwrap_or(0.0);
    let levels = level_columns(&idx, triple.codomain().flag());
    let (q, dims) = flag_adapted_basis(&x, &levels, (RANK_TOL * top).powi(2), false);
    let out = triple.compressed(&q, &dims)?;
    out.validate(tol)?;
    Ok(out)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EquivalenceResiduals {
    pub unitarity: f64,
    pub v: f64,
    pub intertwining: f64,
    pub levels: f64,
    pub spanning: f64,
}

impl EquivalenceResiduals {
    pub fn max(&self) -> f64 {
        [self.unitarity, self.v, self.intertwining, self.levels, self.spanning].into_iter().fold(0.0, nan_max)
    }
}

#[derive(Clone, Debug)]
pub struct Equivalence {
    pub u: CMat,
    pub residuals: EquivalenceResiduals,
}

/// Pseudo-inverse cut for spanning matrices.
const PINV_TOL: f64 = 1e-9;

/// `max_l ||(I - P2_l) T P1_l||` for an operator between two flagged spaces.
pub(crate) fn level_leak(t: &CMat, from: &QuantizedDomain, to: &QuantizedDomain) -> f64 {
    let mut worst: f64 = 0.0;
    for lvl in 1..=from.level_count() {
        let (c, r) = (from.level_dim(lvl), to.level_dim(lvl));
        for i in r..t.nrows() {
            for j in 0..c {
                worst = nan_max(worst, t[(i, j)].norm());
            }
        }
    }
    worst
}

/// The unitary `U` with `U V_1 = V_2`, `U pi^1_p = pi^2_p U` and
/// `U H^1_l = H^2_l`, built from the spanning vectors.
pub fn unitary_equivalence(t1: &StinespringTriple, t2: &StinespringTriple, tol: f64) -> Result<Equivalence> {
    if t1.k() != t2.k() || t1.domain() != t2.domain() || t1.codomain() != t2.codomain() {
        return Err(Error::Shape("triples differ in arity, algebra or domain".into()));
    }
    if !is_minimal(t1) || !is_minimal(t2) {
        return Err(Error::Precondition("unitary equivalence needs two minimal triples".into()));
    }
    if t1.space().flag() != t2.space().flag() {
        return Err(Error::Inconsistent {
            what: format!("dilation flags differ: {:?} vs {:?}", t1.space().flag(), t2.space().flag()),
            residual: f64::INFINITY,
        });
    }
    let x1 = t1.spanning_vectors();
    let x2 = t2.spanning_vectors();
    let u = &x2 * linalg::pinv(&x1, PINV_TOL);
    let r = t1.rank();
    let id = linalg::identity(r);
    let mut res = EquivalenceResiduals {
        unitarity: nan_max(max_abs(&(u.adjoint() * &u - &id)), max_abs(&(&u * u.adjoint() - &id))),
        v: max_abs(&(&u * t1.v() - t2.v())),
        ..Default::default()
    };
    let d = t1.domain().vec_dim();
    res.intertwining = par::map_max(t1.m() * d, |x| {
        let (p, i) = (x / d + 1, x % d);
        max_abs(&(&u * t1.rep_basis(p, i) - t2.rep_basis(p, i) * &u))
    });
    res.levels = level_leak(&u, t1.space(), t2.space());
    res.spanning = max_abs(&(&u * &x1 - &x2)) / (1.0 + max_abs(&x2));
    if !(res.max() <= tol) {
        return Err(Error::Inconsistent { what: "spanning vectors are not unitarily related".into(), residual: res.max() });
    }
    Ok(Equivalence { u, residuals: res })
}

/// Random flag-preserving unitary on a dilation space: one Haar block per piece.
pub fn random_flag_unitary<R: rand::Rng + ?Sized>(space: &QuantizedDomain, rng: &mut R) -> CMat {
    let blocks: Vec<CMat> = space.pieces().iter().map(|p| linalg::random_unitary(rng, p.len())).collect();
    linalg::block_diag(&blocks)
}
