//! Matrices over the algebra and the amplifications `phi_n`.

use rand::Rng;

use super::MultilinearMap;
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, spectral_norm, CMat, C64};
use crate::local_algebra::{AlgebraElement, BlockAlgebra};
use crate::par;

/// An element of `M_n(A)`, stored by coordinates: `coords[i][(s, t)]` is the
/// `e_i`-coordinate of entry `(s, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraMatrix {
    algebra: BlockAlgebra,
    n: usize,
    coords: Vec<CMat>,
}

impl AlgebraMatrix {
    pub fn zero(algebra: &BlockAlgebra, n: usize) -> Self {
        Self { algebra: algebra.clone(), n, coords: vec![linalg::zeros(n, n); algebra.vec_dim()] }
    }

    /// `I_n (x) 1`.
    pub fn identity(algebra: &BlockAlgebra, n: usize) -> Self {
        let mut out = Self::zero(algebra, n);
        for i in algebra.unit_indices() {
            out.coords[i] = linalg::identity(n);
        }
        out
    }

    pub fn from_entries(algebra: &BlockAlgebra, n: usize, entries: &[AlgebraElement]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Shape(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        let mut out = Self::zero(algebra, n);
        for (pos, e) in entries.iter().enumerate() {
            if e.algebra() != algebra {
                return Err(Error::Shape("entry from a different algebra".into()));
            }
            for (i, z) in e.coords().into_iter().enumerate() {
                out.coords[i][(pos / n, pos % n)] = z;
            }
        }
        Ok(out)
    }

    /// Matrix with a single nonzero entry `a` at `(s, t)`.
    pub fn single(algebra: &BlockAlgebra, n: usize, s: usize, t: usize, basis_index: usize) -> Self {
        let mut out = Self::zero(algebra, n);
        out.coords[basis_index][(s, t)] = linalg::ONE;
        out
    }

    pub fn random<R: Rng + ?Sized>(algebra: &BlockAlgebra, n: usize, rng: &mut R) -> Self {
        Self { algebra: algebra.clone(), n, coords: (0..algebra.vec_dim()).map(|_| linalg::random_complex(rng, n, n)).collect() }
    }

    /// Random matrix with entries in `N_alpha`.
    pub fn random_kernel<R: Rng + ?Sized>(algebra: &BlockAlgebra, n: usize, alpha: usize, rng: &mut R) -> Self {
        let mut out = Self::random(algebra, n, rng);
        for i in 0..algebra.vec_dim() {
            if !algebra.basis_in_kernel(i, alpha) {
                out.coords[i] = linalg::zeros(n, n);
            }
        }
        out
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[CMat] {
        &self.coords
    }

    pub fn set_coord(&mut self, basis_index: usize, s: usize, t: usize, z: C64) {
        self.coords[basis_index][(s, t)] = z;
    }

    pub fn entry(&self, s: usize, t: usize) -> AlgebraElement {
        let z: Vec<C64> = self.coords.iter().map(|c| c[(s, t)]).collect();
        self.algebra.from_coords(&z)
    }

    pub fn adjoint(&self) -> Self {
        let coords = (0..self.algebra.vec_dim()).map(|i| self.coords[self.algebra.basis_adjoint(i)].adjoint()).collect();
        Self { coords, ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coords: self.coords.iter().map(|c| c.scale(s)).collect(), ..self.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.algebra.vec_dim();
        let mut out = Self::zero(&self.algebra, self.n);
        for i in 0..d {
            if max_abs(&self.coords[i]) == 0.0 {
                continue;
            }
            for j in 0..d {
                if let Some(l) = self.algebra.basis_product(i, j) {
                    out.coords[l] += &self.coords[i] * &other.coords[j];
                }
            }
        }
        out
    }

    /// Block `b` of the matrix, assembled as an `n m_b` square matrix with
    /// row index `s * m_b + r`.
    pub fn assembled_block(&self, b: usize) -> CMat {
        let m = self.algebra.block_dims()[b];
        CMat::from_fn(self.n * m, self.n * m, |row, col| {
            let (s, r) = (row / m, row % m);
            let (t, c) = (col / m, col % m);
            self.coords[self.algebra.basis_index(b, r, c)][(s, t)]
        })
    }

    /// `p^n_alpha`: the seminorm of `M_n(A)` at level alpha.
    pub fn seminorm(&self, alpha: usize) -> Result<f64> {
        self.algebra.check_alpha(alpha)?;
        Ok((0..alpha).map(|b| spectral_norm(&self.assembled_block(b))).fold(0.0, f64::max))
    }
}

impl MultilinearMap {
    /// `phi_n(A_1, ..., A_k)` as an `nN x nN` matrix, entry `(s N + h, t N + h')`.
    ///
    /// Expands `phi_n(A)[s, t] = sum_r phi(A_1[s, r_1], ..., A_k[r_{k-1}, t])`
    /// over coordinates: each basis tuple contributes
    /// `(C_1(i_1) ... C_k(i_k)) (x) phi(e_{i_1}, ..., e_{i_k})`.
    pub fn amplify(&self, args: &[AlgebraMatrix]) -> Result<CMat> {
        if args.len() != self.k() {
            return Err(Error::Shape(format!("expected {} arguments, got {}", self.k(), args.len())));
        }
        let n = args[0].n;
        if args.iter().any(|a| a.n != n || a.algebra != *self.domain()) {
            return Err(Error::Shape("amplification arguments must share n and algebra".into()));
        }
        let big = n * self.codomain().dim();
        let nonzero: Vec<Vec<usize>> =
            args.iter().map(|a| (0..a.coords.len()).filter(|&i| max_abs(&a.coords[i]) > 0.0).collect()).collect();
        let partials = par::map_collect(nonzero[0].len(), |q| {
            let i1 = nonzero[0][q];
            let mut acc = linalg::zeros(big, big);
            self.accumulate(args, &nonzero, 1, i1, args[0].coords[i1].clone(), &mut acc);
            acc
        });
        Ok(partials.into_iter().fold(linalg::zeros(big, big), |a, b| a + b))
    }

    fn accumulate(&self, args: &[AlgebraMatrix], nonzero: &[Vec<usize>], slot: usize, idx: usize, prod: CMat, acc: &mut CMat) {
        if slot == self.k() {
            let v = &self.values()[idx];
            let nn = v.nrows();
            for s in 0..prod.nrows() {
                for t in 0..prod.ncols() {
                    let z = prod[(s, t)];
                    if z != linalg::ZERO {
                        let mut view = acc.view_mut((s * nn, t * nn), (nn, nn));
                        view += v * z;
                    }
                }
            }
            return;
        }
        let d = self.domain().vec_dim();
        for &i in &nonzero[slot] {
            let p = &prod * &args[slot].coords[i];
            if max_abs(&p) == 0.0 {
                continue;
            }
            self.accumulate(args, nonzero, slot + 1, idx * d + i, p, acc);
        }
    }

    /// Compression of an amplified value to `H_level^n`.
    pub fn compress_to_level(&self, amplified: &CMat, level: usize) -> CMat {
        let nn = self.codomain().dim();
        let d = self.codomain().level_dim(level);
        let idx: Vec<usize> = (0..amplified.nrows() / nn).flat_map(|s| (0..d).map(move |h| s * nn + h)).collect();
        linalg::principal(amplified, &idx)
    }
}
