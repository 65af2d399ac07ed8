//! Finite block models of locally C*-algebras and quantized domains.
//!
//! A [`BlockAlgebra`] is a direct sum `M_{m_1} (+) ... (+) M_{m_L}`. Its
//! seminorm `p_alpha` is the largest spectral norm over the first `alpha`
//! blocks, so blocks past `alpha` form the kernel ideal `N_alpha`. Levels and
//! alpha indices are 1-based throughout, matching the usual notation.
//!
//! The linear basis is the set of matrix units `E^b_{rc}`, enumerated block by
//! block and row-major inside each block. The adjoint of a basis element and the
//! product of two basis elements are again basis elements (or zero), which is
//! what makes the Gram and dilation code index-only.

use std::ops::Range;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, spectral_norm, CMat, C64};

#[derive(Debug, PartialEq, Eq)]
struct AlgebraInner {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    entries: Vec<(usize, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAlgebra {
    inner: Arc<AlgebraInner>,
}

impl BlockAlgebra {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Spec("algebra needs at least one block".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Spec(format!("block sizes must be positive, got {dims:?}")));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut entries = Vec::new();
        let mut off = 0;
        for (b, &m) in dims.iter().enumerate() {
            offsets.push(off);
            off += m * m;
            for r in 0..m {
                for c in 0..m {
                    entries.push((b, r, c));
                }
            }
        }
        Ok(Self { inner: Arc::new(AlgebraInner { dims: dims.to_vec(), offsets, entries }) })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.inner.dims
    }

    /// Number of blocks, which is also the number of seminorm levels.
    pub fn level_count(&self) -> usize {
        self.inner.dims.len()
    }

    /// Complex dimension `sum m_i^2`.
    pub fn vec_dim(&self) -> usize {
        self.inner.entries.len()
    }

    pub fn check_alpha(&self, alpha: usize) -> Result<()> {
        if alpha == 0 || alpha > self.level_count() {
            return Err(Error::Level { level: alpha, max: self.level_count() });
        }
        Ok(())
    }

    /// `(block, row, col)` of basis element `i` (block 0-based).
    pub fn basis_entry(&self, i: usize) -> (usize, usize, usize) {
        self.inner.entries[i]
    }

    pub fn basis_index(&self, block: usize, row: usize, col: usize) -> usize {
        let m = self.inner.dims[block];
        self.inner.offsets[block] + row * m + col
    }

    /// Range of basis indices belonging to 0-based block `b`.
    pub fn block_range(&self, b: usize) -> Range<usize> {
        let m = self.inner.dims[b];
        self.inner.offsets[b]..self.inner.offsets[b] + m * m
    }

    pub fn basis_adjoint(&self, i: usize) -> usize {
        let (b, r, c) = self.basis_entry(i);
        self.basis_index(b, c, r)
    }

    /// `e_i e_j` as a basis index, or `None` when the product vanishes.
    pub fn basis_product(&self, i: usize, j: usize) -> Option<usize> {
        let (b1, r1, c1) = self.basis_entry(i);
        let (b2, r2, c2) = self.basis_entry(j);
        (b1 == b2 && c1 == r2).then(|| self.basis_index(b1, r1, c2))
    }

    /// Basis indices of the diagonal units; they sum to the unit.
    pub fn unit_indices(&self) -> Vec<usize> {
        (0..self.vec_dim())
            .filter(|&i| {
                let (_, r, c) = self.basis_entry(i);
                r == c
            })
            .collect()
    }

    /// Whether basis element `i` lies in the kernel ideal of `p_alpha`.
    pub fn basis_in_kernel(&self, i: usize, alpha: usize) -> bool {
        self.basis_entry(i).0 >= alpha
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.inner.dims.iter().map(|&m| linalg::zeros(m, m)).collect(),
        }
    }

    pub fn unit(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.inner.dims.iter().map(|&m| linalg::identity(m)).collect(),
        }
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        let mut a = self.zero();
        let (b, r, c) = self.basis_entry(i);
        a.blocks[b][(r, c)] = linalg::ONE;
        a
    }

    pub fn element(&self, blocks: Vec<CMat>) -> Result<AlgebraElement> {
        if blocks.len() != self.level_count() {
            return Err(Error::Shape(format!(
                "element has {} blocks, algebra has {}",
                blocks.len(),
                self.level_count()
            )));
        }
        for (b, (blk, &m)) in blocks.iter().zip(self.block_dims()).enumerate() {
            if blk.nrows() != m || blk.ncols() != m {
                return Err(Error::Shape(format!(
                    "block {b} is {}x{}, expected {m}x{m}",
                    blk.nrows(),
                    blk.ncols()
                )));
            }
        }
        Ok(AlgebraElement { algebra: self.clone(), blocks })
    }

    pub fn from_coords(&self, coords: &[C64]) -> AlgebraElement {
        assert_eq!(coords.len(), self.vec_dim());
        let mut a = self.zero();
        for (i, &z) in coords.iter().enumerate() {
            let (b, r, c) = self.basis_entry(i);
            a.blocks[b][(r, c)] = z;
        }
        a
    }

    /// Gaussian element with every block populated.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            blocks: self.inner.dims.iter().map(|&m| linalg::random_complex(rng, m, m)).collect(),
        }
    }

    /// Random element of `N_alpha`: zero on blocks `1..=alpha`.
    pub fn random_kernel_element<R: Rng + ?Sized>(&self, rng: &mut R, alpha: usize) -> AlgebraElement {
        self.random_element(rng).tail(alpha)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: BlockAlgebra,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMat {
        &self.blocks[b]
    }

    pub fn coords(&self) -> Vec<C64> {
        (0..self.algebra.vec_dim())
            .map(|i| {
                let (b, r, c) = self.algebra.basis_entry(i);
                self.blocks[b][(r, c)]
            })
            .collect()
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        assert_eq!(self.algebra, other.algebra, "elements of different algebras");
        Self {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(|a| a * s).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(|a| a.adjoint()).collect() }
    }

    /// Keep blocks `1..=alpha`, zero the rest.
    pub fn truncate(&self, alpha: usize) -> Self {
        let mut out = self.clone();
        for b in alpha.min(out.blocks.len())..out.blocks.len() {
            out.blocks[b].fill(linalg::ZERO);
        }
        out
    }

    /// Zero blocks `1..=alpha`, keep the rest; the `N_alpha` component.
    pub fn tail(&self, alpha: usize) -> Self {
        let mut out = self.clone();
        for b in 0..alpha.min(out.blocks.len()) {
            out.blocks[b].fill(linalg::ZERO);
        }
        out
    }

    /// `p_alpha(a)`: max spectral norm over blocks `1..=alpha`.
    pub fn seminorm(&self, alpha: usize) -> Result<f64> {
        self.algebra.check_alpha(alpha)?;
        Ok(self.blocks[..alpha].iter().map(spectral_norm).fold(0.0, f64::max))
    }

    /// Full C*-norm, i.e. `p_L`.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    pub fn is_local_selfadjoint(&self, alpha: usize, tol: f64) -> Result<bool> {
        let d = self.sub(&self.adjoint()).seminorm(alpha)?;
        Ok(d <= tol * (1.0 + self.seminorm(alpha)?))
    }

    /// `a >=_alpha 0`: the truncation to blocks `1..=alpha` is positive.
    pub fn is_local_positive(&self, alpha: usize, tol: f64) -> Result<bool> {
        if !self.is_local_selfadjoint(alpha, tol)? {
            return Ok(false);
        }
        let scale = 1.0 + self.seminorm(alpha)?;
        Ok(self.blocks[..alpha].iter().all(|b| linalg::min_eigenvalue(b) >= -tol * scale))
    }

    /// `a =_alpha b`.
    pub fn local_eq(&self, other: &Self, alpha: usize, tol: f64) -> Result<bool> {
        Ok(self.sub(other).seminorm(alpha)? <= tol)
    }
}

/// `C^N` with a strictly increasing flag `d_1 < ... < d_L = N` of leading
/// coordinate subspaces.
///
/// Dilation spaces reuse this type through [`QuantizedDomain::relaxed`], where
/// the flag only needs to be non-decreasing: a minimal dilation can gain no new
/// dimensions at some level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedDomain {
    dim: usize,
    flag: Vec<usize>,
}

impl QuantizedDomain {
    pub fn new(dim: usize, flag: &[usize]) -> Result<Self> {
        if flag.is_empty() {
            return Err(Error::Spec("flag must be non-empty".into()));
        }
        if flag[0] == 0 || flag.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Spec(format!("flag {flag:?} is not strictly increasing and positive")));
        }
        if *flag.last().unwrap() != dim {
            return Err(Error::Spec(format!("flag {flag:?} must end at dim {dim}")));
        }
        Ok(Self { dim, flag: flag.to_vec() })
    }

    pub fn relaxed(dim: usize, flag: &[usize]) -> Result<Self> {
        if flag.is_empty() || flag.windows(2).any(|w| w[0] > w[1]) || *flag.last().unwrap() != dim {
            return Err(Error::Spec(format!("flag {flag:?} must be non-decreasing and end at {dim}")));
        }
        Ok(Self { dim, flag: flag.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flag(&self) -> &[usize] {
        &self.flag
    }

    pub fn level_count(&self) -> usize {
        self.flag.len()
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.level_count() {
            return Err(Error::Level { level, max: self.level_count() });
        }
        Ok(())
    }

    /// `dim H_level`.
    pub fn level_dim(&self, level: usize) -> usize {
        self.flag[level - 1]
    }

    /// Coordinate ranges of the successive differences `H_l - H_{l-1}`.
    pub fn pieces(&self) -> Vec<Range<usize>> {
        let mut prev = 0;
        self.flag
            .iter()
            .map(|&d| {
                let r = prev..d;
                prev = d;
                r
            })
            .collect()
    }

    pub fn projection(&self, level: usize) -> CMat {
        let d = self.level_dim(level);
        CMat::from_fn(self.dim, self.dim, |i, j| if i == j && i < d { linalg::ONE } else { linalg::ZERO })
    }

    /// Largest `|T_ij|` over entries that couple different flag pieces, with
    /// the level at which it occurs. Zero iff `T` commutes with every projection.
    pub fn flag_deviation(&self, t: &CMat) -> (f64, usize) {
        let mut worst = (0.0, 1);
        for (lvl, &d) in self.flag.iter().enumerate() {
            let mut dev: f64 = 0.0;
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if (i < d) != (j < d) {
                        dev = dev.max(t[(i, j)].norm());
                    }
                }
            }
            if dev > worst.0 {
                worst = (dev, lvl + 1);
            }
        }
        worst
    }

    pub fn operator(&self, matrix: CMat, tol: f64) -> Result<FlagOperator> {
        FlagOperator::new(self.clone(), matrix, tol)
    }
}

/// An operator in `C*_E(D)`: it commutes with every flag projection.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagOperator {
    domain: QuantizedDomain,
    matrix: CMat,
}

impl FlagOperator {
    pub fn new(domain: QuantizedDomain, matrix: CMat, tol: f64) -> Result<Self> {
        let n = domain.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!("operator is {}x{}, domain has dim {n}", matrix.nrows(), matrix.ncols())));
        }
        let (dev, level) = domain.flag_deviation(&matrix);
        if dev > tol * (1.0 + max_abs(&matrix)) {
            return Err(Error::NotInFlagAlgebra { level, deviation: dev });
        }
        Ok(Self { domain, matrix })
    }

    pub fn domain(&self) -> &QuantizedDomain {
        &self.domain
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// `||T||_level`, the norm of the restriction to `H_level`.
    pub fn seminorm(&self, level: usize) -> Result<f64> {
        self.domain.check_level(level)?;
        Ok(spectral_norm(&linalg::corner(&self.matrix, self.domain.level_dim(level))))
    }

    pub fn adjoint(&self) -> Self {
        Self { domain: self.domain.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { domain: self.domain.clone(), matrix: &self.matrix * &other.matrix }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { domain: self.domain.clone(), matrix: &self.matrix + &other.matrix }
    }

    /// `T >=_level 0`: Hermitian and positive on `H_level`.
    pub fn is_local_positive(&self, level: usize, tol: f64) -> Result<bool> {
        self.domain.check_level(level)?;
        let c = linalg::corner(&self.matrix, self.domain.level_dim(level));
        let scale = 1.0 + spectral_norm(&c);
        Ok(max_abs(&(&c - c.adjoint())) <= tol * scale && linalg::min_eigenvalue(&c) >= -tol * scale)
    }
}

/// Whether `(a_1, ..., a_k)` is alpha-symmetric: `a_{k+1-i} =_alpha a_i^*`
/// for every `i`, and for odd `k` the middle entry is alpha-positive.
pub fn is_alpha_symmetric(tuple: &[AlgebraElement], alpha: usize, tol: f64) -> Result<bool> {
    let k = tuple.len();
    for i in 0..k / 2 {
        if !tuple[k - 1 - i].local_eq(&tuple[i].adjoint(), alpha, tol)? {
            return Ok(false);
        }
    }
    if k % 2 == 1 {
        return tuple[k / 2].is_local_positive(alpha, tol);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_table_matches_matrix_products() {
        let alg = BlockAlgebra::new(&[1, 2]).unwrap();
        assert_eq!(alg.vec_dim(), 5);
        for i in 0..5 {
            let ai = alg.basis_element(i);
            assert_eq!(ai.adjoint(), alg.basis_element(alg.basis_adjoint(i)));
            for j in 0..5 {
                let p = ai.mul(&alg.basis_element(j));
                match alg.basis_product(i, j) {
                    Some(t) => assert_eq!(p, alg.basis_element(t)),
                    None => assert_eq!(p, alg.zero()),
                }
            }
        }
        let unit = alg.unit_indices().iter().fold(alg.zero(), |s, &i| s.add(&alg.basis_element(i)));
        assert_eq!(unit, alg.unit());
    }

    #[test]
    fn seminorm_ignores_trailing_blocks() {
        let alg = BlockAlgebra::new(&[1, 1]).unwrap();
        let a = alg.from_coords(&[c(1.0), c(-1.0)]);
        assert_eq!(a.seminorm(1).unwrap(), 1.0);
        assert!(a.is_local_positive(1, 1e-12).unwrap());
        assert!(!a.is_local_positive(2, 1e-12).unwrap());
        assert!(matches!(a.seminorm(3), Err(Error::Level { level: 3, max: 2 })));
        assert!(a.tail(1).seminorm(1).unwrap() == 0.0);
    }

    #[test]
    fn seminorms_are_monotone_and_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let alg = BlockAlgebra::new(&[2, 1, 3]).unwrap();
        for _ in 0..20 {
            let a = alg.random_element(&mut rng);
            let b = alg.random_element(&mut rng);
            for alpha in 1..=3 {
                let pa = a.seminorm(alpha).unwrap();
                let pb = b.seminorm(alpha).unwrap();
                assert!(a.mul(&b).seminorm(alpha).unwrap() <= pa * pb + 1e-12);
                let star = a.adjoint().mul(&a).seminorm(alpha).unwrap();
                assert!((star - pa * pa).abs() < 1e-10 * (1.0 + pa * pa));
                if alpha > 1 {
                    assert!(a.seminorm(alpha - 1).unwrap() <= pa);
                }
            }
        }
    }

    #[test]
    fn domain_validation() {
        assert!(QuantizedDomain::new(3, &[1, 3]).is_ok());
        assert!(QuantizedDomain::new(3, &[2, 2, 3]).is_err());
        assert!(QuantizedDomain::new(3, &[1, 2]).is_err());
        assert!(QuantizedDomain::relaxed(3, &[0, 2, 2, 3]).is_ok());
        let d = QuantizedDomain::new(3, &[1, 3]).unwrap();
        let mut t = linalg::identity(3);
        t[(0, 1)] = c(0.5);
        assert!(matches!(d.operator(t, 1e-9), Err(Error::NotInFlagAlgebra { level: 1, .. })));
    }

    #[test]
    fn flag_operator_seminorms() {
        let d = QuantizedDomain::new(2, &[1, 2]).unwrap();
        let t = d.operator(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5), c(-3.0)])), 1e-12).unwrap();
        assert_eq!(t.seminorm(1).unwrap(), 0.5);
        assert_eq!(t.seminorm(2).unwrap(), 3.0);
        assert!(t.is_local_positive(1, 1e-12).unwrap());
        assert!(!t.is_local_positive(2, 1e-12).unwrap());
    }

    #[test]
    fn symmetric_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let alg = BlockAlgebra::new(&[1, 2]).unwrap();
        let a = alg.random_element(&mut rng);
        let b = alg.random_element(&mut rng);
        let garbage = alg.random_kernel_element(&mut rng, 1);
        let mid = b.adjoint().mul(&b).add(&garbage);
        let t = vec![a.clone(), mid, a.adjoint().add(&garbage)];
        assert!(is_alpha_symmetric(&t, 1, 1e-10).unwrap());
        assert!(!is_alpha_symmetric(&t, 2, 1e-10).unwrap());
    }
}
