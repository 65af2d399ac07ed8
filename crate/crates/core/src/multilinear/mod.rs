//! k-linear maps `A x ... x A -> C*_E(D)` stored by their values on basis tuples.
//!
//! Tuples are flattened lexicographically with the first slot most
//! significant, so the value for `(i_1, ..., i_k)` sits at
//! `sum_t i_t D^(k-t)` where `D = A.vec_dim()`.

mod amplify;
mod checks;

pub use amplify::AlgebraMatrix;
pub use checks::{
    check_invariant, check_kernel_condition, check_local_contractivity, check_local_positivity,
    check_symmetric, is_invariant, is_symmetric, positivity_witness_tuple, MapCheckReport, Sampling, Verdict,
};

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, spectral_norm, CMat, C64};
use crate::local_algebra::{AlgebraElement, BlockAlgebra, FlagOperator, QuantizedDomain};
use crate::par;

/// Relative tolerance used when validating that stored values lie in `C*_E(D)`.
pub const FLAG_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearMap {
    k: usize,
    domain: BlockAlgebra,
    codomain: QuantizedDomain,
    alpha_of: Vec<usize>,
    values: Vec<CMat>,
}

/// `alpha_l = min(l, L_A)`, the default level pairing.
pub fn default_alpha_of(domain: &BlockAlgebra, codomain: &QuantizedDomain) -> Vec<usize> {
    (1..=codomain.level_count()).map(|l| l.min(domain.level_count())).collect()
}

/// Index arithmetic for `k`-tuples over `d` basis elements.
#[derive(Clone, Copy, Debug)]
pub struct Tuples {
    pub d: usize,
    pub k: usize,
}

impl Tuples {
    pub fn count(&self) -> usize {
        self.d.pow(self.k as u32)
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for slot in (0..self.k).rev() {
            out[slot] = idx % self.d;
            idx /= self.d;
        }
        out
    }
}

impl MultilinearMap {
    pub fn new(
        k: usize,
        domain: BlockAlgebra,
        codomain: QuantizedDomain,
        alpha_of: Vec<usize>,
        values: Vec<CMat>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Spec("arity k must be at least 1".into()));
        }
        if alpha_of.len() != codomain.level_count() {
            return Err(Error::Spec(format!(
                "alpha_of has {} entries, codomain has {} levels",
                alpha_of.len(),
                codomain.level_count()
            )));
        }
        if alpha_of.iter().any(|&a| a == 0 || a > domain.level_count()) || alpha_of.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Spec(format!(
                "alpha_of {alpha_of:?} must be non-decreasing within 1..={}",
                domain.level_count()
            )));
        }
        let expected = Tuples { d: domain.vec_dim(), k }.count();
        if values.len() != expected {
            return Err(Error::Shape(format!("expected {expected} basis values, got {}", values.len())));
        }
        let n = codomain.dim();
        for v in &values {
            if v.nrows() != n || v.ncols() != n {
                return Err(Error::Shape(format!("value is {}x{}, codomain has dim {n}", v.nrows(), v.ncols())));
            }
            let (dev, level) = codomain.flag_deviation(v);
            if dev > FLAG_TOL * (1.0 + max_abs(v)) {
                return Err(Error::NotInFlagAlgebra { level, deviation: dev });
            }
        }
        Ok(Self { k, domain, codomain, alpha_of, values })
    }

    /// Build from a function of basis tuples.
    pub fn from_fn(
        k: usize,
        domain: BlockAlgebra,
        codomain: QuantizedDomain,
        alpha_of: Option<Vec<usize>>,
        f: impl Fn(&[usize]) -> CMat + Sync + Send,
    ) -> Result<Self> {
        let alpha_of = alpha_of.unwrap_or_else(|| default_alpha_of(&domain, &codomain));
        let tuples = Tuples { d: domain.vec_dim(), k };
        let values = par::map_collect(tuples.count(), |idx| f(&tuples.decode(idx)));
        Self::new(k, domain, codomain, alpha_of, values)
    }

    pub fn zero(k: usize, domain: BlockAlgebra, codomain: QuantizedDomain, alpha_of: Option<Vec<usize>>) -> Result<Self> {
        let n = codomain.dim();
        Self::from_fn(k, domain, codomain, alpha_of, |_| linalg::zeros(n, n))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `m = ceil(k / 2)`, the number of dilation slots.
    pub fn m(&self) -> usize {
        self.k.div_ceil(2)
    }

    pub fn domain(&self) -> &BlockAlgebra {
        &self.domain
    }

    pub fn codomain(&self) -> &QuantizedDomain {
        &self.codomain
    }

    pub fn alpha_of(&self) -> &[usize] {
        &self.alpha_of
    }

    /// `alpha_l` for a 1-based codomain level.
    pub fn alpha(&self, level: usize) -> usize {
        self.alpha_of[level - 1]
    }

    pub fn tuples(&self) -> Tuples {
        Tuples { d: self.domain.vec_dim(), k: self.k }
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn value(&self, tuple: &[usize]) -> &CMat {
        &self.values[self.tuples().encode(tuple)]
    }

    /// Value at a tuple whose slots may be "zero" (`None`).
    pub fn value_or_zero(&self, tuple: &[Option<usize>]) -> CMat {
        let mut idx = 0;
        for slot in tuple {
            match slot {
                Some(i) => idx = idx * self.domain.vec_dim() + i,
                None => return linalg::zeros(self.codomain.dim(), self.codomain.dim()),
            }
        }
        self.values[idx].clone()
    }

    /// Largest spectral norm over basis tuples; the reference scale for residuals.
    pub fn max_basis_norm(&self) -> f64 {
        par::map_max(self.values.len(), |i| spectral_norm(&self.values[i]))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.k == other.k && self.domain == other.domain && self.codomain == other.codomain && self.alpha_of == other.alpha_of
    }

    fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(Error::Shape("maps differ in arity, algebra, domain or alpha_of".into()));
        }
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(), ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v.scale(s)).collect(), ..self.clone() }
    }

    /// Largest entry modulus of `self - other` over all basis tuples.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Shape("maps differ in arity, algebra, domain or alpha_of".into()));
        }
        Ok(par::map_max(self.values.len(), |i| max_abs(&(&self.values[i] - &other.values[i]))))
    }

    /// Replace one basis value (used to plant defects).
    pub fn with_value(&self, tuple: &[usize], value: CMat) -> Result<Self> {
        let mut values = self.values.clone();
        values[self.tuples().encode(tuple)] = value;
        Self::new(self.k, self.domain.clone(), self.codomain.clone(), self.alpha_of.clone(), values)
    }

    /// `phi(a_1, ..., a_k)` by multilinear expansion over coordinates.
    pub fn evaluate(&self, args: &[AlgebraElement]) -> Result<FlagOperator> {
        FlagOperator::new(self.codomain.clone(), self.evaluate_matrix(args)?, f64::INFINITY)
    }

    pub fn evaluate_matrix(&self, args: &[AlgebraElement]) -> Result<CMat> {
        if args.len() != self.k {
            return Err(Error::Shape(format!("expected {} arguments, got {}", self.k, args.len())));
        }
        if args.iter().any(|a| a.algebra() != &self.domain) {
            return Err(Error::Shape("argument from a different algebra".into()));
        }
        let d = self.domain.vec_dim();
        let n = self.codomain.dim();
        // Contract the last slot first; `cur` holds values indexed by the remaining prefix.
        let mut cur: Option<Vec<CMat>> = None;
        for slot in (0..self.k).rev() {
            let coords = args[slot].coords();
            let src: &[CMat] = cur.as_deref().unwrap_or(&self.values);
            let next: Vec<CMat> = (0..src.len() / d)
                .map(|prefix| {
                    let mut acc = linalg::zeros(n, n);
                    for (i, &z) in coords.iter().enumerate() {
                        if z != linalg::ZERO {
                            acc += &src[prefix * d + i] * z;
                        }
                    }
                    acc
                })
                .collect();
            cur = Some(next);
        }
        Ok(cur.expect("k >= 1").pop().expect("single value"))
    }

    /// `phi*(a_1, ..., a_k) = phi(a_k^*, ..., a_1^*)^*`.
    pub fn adjoint_map(&self) -> Self {
        let tuples = self.tuples();
        let values = par::map_collect(tuples.count(), |idx| {
            let t = tuples.decode(idx);
            let rev: Vec<usize> = t.iter().rev().map(|&i| self.domain.basis_adjoint(i)).collect();
            self.values[tuples.encode(&rev)].adjoint()
        });
        Self { values, ..self.clone() }
    }

    /// `phi(1, ..., 1)`.
    pub fn unit_value(&self) -> CMat {
        let units: Vec<AlgebraElement> = (0..self.k).map(|_| self.domain.unit()).collect();
        self.evaluate_matrix(&units).expect("shape is consistent")
    }
}

/// Helper for building diagonal-valued maps: `C64` from a real.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_map(seed: u64, k: usize, blocks: &[usize], flag: &[usize]) -> MultilinearMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = BlockAlgebra::new(blocks).unwrap();
        let dom = QuantizedDomain::new(*flag.last().unwrap(), flag).unwrap();
        let pieces = dom.pieces();
        let tuples = Tuples { d: alg.vec_dim(), k };
        let values = (0..tuples.count())
            .map(|_| {
                let blocks: Vec<CMat> = pieces.iter().map(|r| linalg::random_complex(&mut rng, r.len(), r.len())).collect();
                linalg::block_diag(&blocks)
            })
            .collect();
        let alpha = default_alpha_of(&alg, &dom);
        MultilinearMap::new(k, alg, dom, alpha, values).unwrap()
    }

    #[test]
    fn tuple_codec_roundtrip() {
        let t = Tuples { d: 5, k: 3 };
        for idx in 0..t.count() {
            assert_eq!(t.encode(&t.decode(idx)), idx);
        }
        assert_eq!(t.encode(&[1, 0, 2]), 27);
    }

    #[test]
    fn evaluate_on_basis_returns_stored_value() {
        let phi = random_map(1, 3, &[1, 2], &[1, 3]);
        let alg = phi.domain().clone();
        let tuple = [4, 0, 2];
        let args: Vec<_> = tuple.iter().map(|&i| alg.basis_element(i)).collect();
        assert_eq!(&phi.evaluate_matrix(&args).unwrap(), phi.value(&tuple));
    }

    #[test]
    fn evaluate_is_multilinear() {
        let phi = random_map(2, 2, &[2], &[2]);
        let alg = phi.domain().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, c) = (alg.random_element(&mut rng), alg.random_element(&mut rng), alg.random_element(&mut rng));
        let s = C64::new(0.3, -1.2);
        let lhs = phi.evaluate_matrix(&[a.scale(s).add(&b), c.clone()]).unwrap();
        let rhs = phi.evaluate_matrix(&[a, c.clone()]).unwrap() * s + phi.evaluate_matrix(&[b, c]).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn adjoint_is_an_involution_and_matches_definition() {
        let phi = random_map(4, 3, &[1, 1], &[1, 2]);
        let star = phi.adjoint_map();
        assert_eq!(star.adjoint_map(), phi);
        let alg = phi.domain().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let args: Vec<_> = (0..3).map(|_| alg.random_element(&mut rng)).collect();
        let rev: Vec<_> = args.iter().rev().map(|a| a.adjoint()).collect();
        let expected = phi.evaluate_matrix(&rev).unwrap().adjoint();
        assert!(max_abs(&(star.evaluate_matrix(&args).unwrap() - expected)) < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        let alg = BlockAlgebra::new(&[1, 1]).unwrap();
        let dom = QuantizedDomain::new(2, &[1, 2]).unwrap();
        assert!(MultilinearMap::new(1, alg.clone(), dom.clone(), vec![1, 2], vec![linalg::identity(2)]).is_err());
        assert!(MultilinearMap::new(1, alg.clone(), dom.clone(), vec![2, 1], vec![linalg::identity(2); 2]).is_err());
        let mut off = linalg::identity(2);
        off[(0, 1)] = re(1.0);
        assert!(matches!(
            MultilinearMap::new(1, alg, dom, vec![1, 2], vec![off.clone(), off]),
            Err(Error::NotInFlagAlgebra { .. })
        ));
    }
}
