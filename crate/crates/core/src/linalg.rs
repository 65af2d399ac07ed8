//! Dense complex linear algebra.
//!
//! Everything here works on `nalgebra`'s `DMatrix<Complex64>`. Hermitian
//! eigenproblems and SVDs are delegated to `faer`: nalgebra's complex
//! versions lose accuracy on wide or degenerate inputs. Eigenvalues are always
//! returned in ascending order with matching columns.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry modulus; 0 for empty matrices.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, nan_max)
}

/// Max that lets a NaN win, so residuals never silently hide one.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `(U, s, V)` with `s` descending.
fn thin_svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = to_faer(m).thin_svd().expect("SVD did not converge");
    let s = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
    (from_faer(svd.U()), s, from_faer(svd.V()))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("SVD did not converge")
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // The Gram route is cheaper than a full SVD and accurate enough for norms.
    let g = if m.nrows() >= m.ncols() { m.adjoint() * m } else { m * m.adjoint() };
    herm_eigen(&g).values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermEigen {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Columns whose eigenvalue satisfies `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> (Vec<f64>, CMat) {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&i| keep(self.values[i])).collect();
        let vals = idx.iter().map(|&i| self.values[i]).collect();
        let cols: Vec<_> = idx.iter().map(|&i| self.vectors.column(i)).collect();
        let vecs = if cols.is_empty() {
            zeros(self.vectors.nrows(), 0)
        } else {
            CMat::from_columns(&cols)
        };
        (vals, vecs)
    }

    /// `f` applied to the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            scaled.column_mut(j).scale_mut(s);
        }
        if n == 0 {
            return zeros(0, 0);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn herm_eigen(m: &CMat) -> HermEigen {
    let n = m.nrows();
    if n == 0 {
        return HermEigen { values: Vec::new(), vectors: zeros(0, 0) };
    }
    let h = to_faer(&hermitian_part(m));
    let eig = h.self_adjoint_eigen(faer::Side::Lower).expect("eigen-decomposition did not converge");
    let values = (0..n).map(|i| eig.S()[i].re).collect();
    HermEigen { values, vectors: from_faer(eig.U()) }
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    herm_eigen(m).min()
}

/// Orthonormal basis (as columns) of the range of `m`, keeping directions whose
/// squared singular value exceeds `threshold`.
pub fn orthonormal_range(m: &CMat, threshold: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return zeros(m.nrows(), 0);
    }
    let eig = herm_eigen(&(m * m.adjoint()));
    let (_, q) = eig.select(|v| v > threshold);
    // Largest directions first.
    let cols: Vec<_> = (0..q.ncols()).rev().map(|j| q.column(j).into_owned()).collect();
    if cols.is_empty() {
        zeros(m.nrows(), 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(0.0) => 0,
        Some(&top) => s.iter().filter(|&&x| x > rel_tol * top).count(),
    }
}

/// Orthonormal basis (as columns) of the null space of `m`: right singular
/// vectors whose singular value is at most `rel_tol * sigma_max`.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return identity(n);
    }
    let svd = to_faer(m).svd().expect("SVD did not converge");
    let s: Vec<f64> = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
    let top = s.first().copied().unwrap_or(0.0);
    let v = from_faer(svd.V());
    let cols: Vec<_> = (0..n).filter(|&j| j >= s.len() || s[j] <= rel_tol * top).map(|j| v.column(j)).collect();
    if cols.is_empty() {
        zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Moore-Penrose inverse with singular values below `rel_tol * sigma_max` dropped.
pub fn pinv(m: &CMat, rel_tol: f64) -> CMat {
    if m.is_empty() {
        return zeros(m.ncols(), m.nrows());
    }
    let (u, s, v) = thin_svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(m.ncols(), m.nrows());
    for (i, &si) in s.iter().enumerate() {
        if si > rel_tol * top && si > 0.0 {
            out += (v.column(i) * u.column(i).adjoint()).scale(1.0 / si);
        }
    }
    out
}

pub fn clip_spectrum(h: &CMat, lo: f64, hi: f64) -> CMat {
    herm_eigen(h).apply(|v| v.clamp(lo, hi))
}

/// Square root of the positive part. Eigenvalues at roundoff level are set to
/// zero first: the square root would blow their noise up to `sqrt(eps)`.
pub fn sqrt_psd(h: &CMat) -> CMat {
    let e = herm_eigen(h);
    let floor = 64.0 * f64::EPSILON * e.max().abs().max(e.min().abs());
    e.apply(|v| if v > floor { v.sqrt() } else { 0.0 })
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Leading `k x k` corner.
pub fn corner(m: &CMat, k: usize) -> CMat {
    m.view((0, 0), (k, k)).into_owned()
}

/// Principal submatrix on the given indices.
pub fn principal(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-ish unitary from the QR factorisation of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return zeros(0, 0);
    }
    let qr = random_complex(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Isometry `rows x cols` (rows >= cols) with orthonormal columns.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let u = random_unitary(rng, rows);
    u.columns(0, cols).into_owned()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    hermitian_part(&random_complex(rng, n, n))
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}
