//! The Gram form of a map on `A^{(x) m} (x) C^N`.
//!
//! Tensor coordinates are indexed by `(i_1, ..., i_m, h)`, flattened
//! lexicographically with `h` fastest. For odd `k` the entry at
//! `((i, h), (j, h'))` is
//! `phi(e_{i_m}^*, ..., e_{i_2}^*, e_{i_1}^* e_{j_1}, e_{j_2}, ..., e_{j_m})[h, h']`,
//! for even `k` the middle product is split into two slots. Row indices carry
//! adjoints, so `G = F^* F` where column `(j, h')` of `F` is the image of
//! `e_{j_1} (x) ... (x) e_{j_m} (x) f_{h'}` in the dilation space.

use crate::linalg::{self, max_abs, CMat, HermEigen};
use crate::multilinear::{MultilinearMap, Tuples};
use crate::par;

/// Index arithmetic for tensor coordinates `(i_1, ..., i_m, h)`.
#[derive(Clone, Copy, Debug)]
pub struct TensorIndex {
    pub tuples: Tuples,
    pub n: usize,
}

impl TensorIndex {
    pub fn for_map(phi: &MultilinearMap) -> Self {
        Self { tuples: Tuples { d: phi.domain().vec_dim(), k: phi.m() }, n: phi.codomain().dim() }
    }

    pub fn dim(&self) -> usize {
        self.tuples.count() * self.n
    }

    pub fn col(&self, tuple_idx: usize, h: usize) -> usize {
        tuple_idx * self.n + h
    }

    pub fn split(&self, col: usize) -> (usize, usize) {
        (col / self.n, col % self.n)
    }

    /// Columns with `h < d`, i.e. the coordinates of `A^{(x) m} (x) H_level`.
    pub fn level_columns(&self, d: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&c| c % self.n < d).collect()
    }
}

/// Argument list for Gram entry `(i, j)` of basis `m`-tuples; `None` marks a
/// vanishing middle product.
pub fn gram_arguments(phi: &MultilinearMap, i: &[usize], j: &[usize]) -> Vec<Option<usize>> {
    let alg = phi.domain();
    let (k, m) = (phi.k(), phi.m());
    let mut args = Vec::with_capacity(k);
    let left = m - (k % 2);
    for p in 0..left {
        args.push(Some(alg.basis_adjoint(i[m - 1 - p])));
    }
    if k % 2 == 1 {
        args.push(alg.basis_product(alg.basis_adjoint(i[0]), j[0]));
        args.extend(j[1..].iter().map(|&x| Some(x)));
    } else {
        args.extend(j.iter().map(|&x| Some(x)));
    }
    args
}

/// Raw (not symmetrised) Gram matrix, assembled blockwise from basis values.
pub fn gram_raw(phi: &MultilinearMap) -> CMat {
    let idx = TensorIndex::for_map(phi);
    let (p, n) = (idx.tuples.count(), idx.n);
    let rows = par::map_collect(p, |ti| {
        let i = idx.tuples.decode(ti);
        let mut band = linalg::zeros(n, idx.dim());
        for tj in 0..p {
            let j = idx.tuples.decode(tj);
            let args = gram_arguments(phi, &i, &j);
            if args.iter().all(Option::is_some) {
                band.view_mut((0, tj * n), (n, n)).copy_from(&phi.value_or_zero(&args));
            }
        }
        band
    });
    let mut g = linalg::zeros(idx.dim(), idx.dim());
    for (ti, band) in rows.into_iter().enumerate() {
        g.view_mut((ti * n, 0), (n, idx.dim())).copy_from(&band);
    }
    g
}

#[derive(Clone, Debug)]
pub struct GramData {
    /// Hermitian part of the raw Gram matrix.
    pub matrix: CMat,
    /// `max |G - G^*| / (1 + max |G|)` of the raw matrix.
    pub asymmetry: f64,
    pub eigen: HermEigen,
}

impl GramData {
    pub fn tensor_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen.max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen.min()
    }

    /// Allowed negative excursion: `tol (1 + lambda_max)`.
    pub fn psd_threshold(&self, tol: f64) -> f64 {
        tol * (1.0 + self.lambda_max().abs())
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.lambda_min() >= -self.psd_threshold(tol)
    }
}

pub fn gram_matrix(phi: &MultilinearMap) -> GramData {
    let raw = gram_raw(phi);
    let asymmetry = max_abs(&(&raw - raw.adjoint())) / (1.0 + max_abs(&raw));
    let matrix = linalg::hermitian_part(&raw);
    let eigen = linalg::herm_eigen(&matrix);
    GramData { matrix, asymmetry, eigen }
}
