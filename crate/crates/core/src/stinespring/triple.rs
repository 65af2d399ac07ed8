//! Stinespring triples `(pi_1, ..., pi_m, V, H^phi)` and their audits.

use serde::{Deserialize, Serialize};

use super::gram::TensorIndex;
use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, nan_max, spectral_norm, CMat};
use crate::local_algebra::{AlgebraElement, BlockAlgebra, QuantizedDomain};
use crate::multilinear::{MultilinearMap, Tuples};
use crate::par;

/// Measured defects of a triple. All are absolute except `embed`, which is
/// relative to `1 + ||embed||`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TripleResiduals {
    pub homomorphism: f64,
    pub adjoint: f64,
    pub unital: f64,
    pub commuting: f64,
    pub flag: f64,
    pub v_flag: f64,
    pub contractivity: f64,
    pub v_norm_excess: f64,
    pub isometry_defect: f64,
    pub embed: f64,
    pub well_definedness: f64,
}

impl TripleResiduals {
    /// The defects a valid triple must keep below tolerance. `v_norm_excess`
    /// and `isometry_defect` describe the map, not the construction.
    pub fn structural(&self) -> [(&'static str, f64); 8] {
        [
            ("homomorphism", self.homomorphism),
            ("adjoint", self.adjoint),
            ("unital", self.unital),
            ("commuting", self.commuting),
            ("flag", self.flag),
            ("v_flag", self.v_flag),
            ("contractivity", self.contractivity),
            ("embed", self.embed),
        ]
    }

    pub fn first_violation(&self, tol: f64) -> Option<(&'static str, f64)> {
        self.structural().into_iter().find(|&(_, r)| !(r <= tol))
    }
}

#[derive(Clone, Debug)]
pub struct StinespringTriple {
    k: usize,
    domain: BlockAlgebra,
    codomain: QuantizedDomain,
    alpha_of: Vec<usize>,
    space: QuantizedDomain,
    v: CMat,
    reps: Vec<Vec<CMat>>,
    embed: CMat,
    residuals: TripleResiduals,
}

impl StinespringTriple {
    /// Assemble a triple and audit it. `reps[p][i]` is `pi_{p+1}(e_i)`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        k: usize,
        domain: BlockAlgebra,
        codomain: QuantizedDomain,
        alpha_of: Vec<usize>,
        space: QuantizedDomain,
        v: CMat,
        reps: Vec<Vec<CMat>>,
        embed: Option<CMat>,
    ) -> Result<Self> {
        let m = k.div_ceil(2);
        let r = space.dim();
        if v.nrows() != r || v.ncols() != codomain.dim() {
            return Err(Error::Shape(format!("V is {}x{}, expected {r}x{}", v.nrows(), v.ncols(), codomain.dim())));
        }
        if reps.len() != m || reps.iter().any(|rp| rp.len() != domain.vec_dim()) {
            return Err(Error::Shape(format!("expected {m} representations on {} basis elements", domain.vec_dim())));
        }
        if reps.iter().flatten().any(|x| x.nrows() != r || x.ncols() != r) {
            return Err(Error::Shape(format!("representation matrices must be {r}x{r}")));
        }
        if alpha_of.len() != codomain.level_count() || space.level_count() != codomain.level_count() {
            return Err(Error::Shape("dilation flag, codomain flag and alpha_of must have equal length".into()));
        }
        let mut t = Self {
            k,
            domain,
            codomain,
            alpha_of,
            space,
            v,
            reps,
            embed: linalg::zeros(r, 0),
            residuals: TripleResiduals::default(),
        };
        let spanning = t.spanning_vectors();
        t.embed = match embed {
            Some(e) if e.nrows() == spanning.nrows() && e.ncols() == spanning.ncols() => e,
            Some(_) => return Err(Error::Shape("embed has the wrong shape".into())),
            None => spanning,
        };
        t.residuals = t.audit();
        Ok(t)
    }

    pub(crate) fn set_well_definedness(&mut self, wd: f64) {
        self.residuals.well_definedness = wd;
    }

    pub fn k(&self) -> usize {
        self.k
    }

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

    /// The dilation space `H^phi` with its (non-decreasing) flag `r_1 <= ... <= r_L`.
    pub fn space(&self) -> &QuantizedDomain {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.space.dim()
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    /// `pi_p(e_i)` with `p` 1-based.
    pub fn rep_basis(&self, p: usize, i: usize) -> &CMat {
        &self.reps[p - 1][i]
    }

    pub fn reps(&self) -> &[Vec<CMat>] {
        &self.reps
    }

    /// `pi_p(a)` with `p` 1-based.
    pub fn rep(&self, p: usize, a: &AlgebraElement) -> CMat {
        let mut out = linalg::zeros(self.rank(), self.rank());
        for (i, z) in a.coords().into_iter().enumerate() {
            if z != linalg::ZERO {
                out += &self.reps[p - 1][i] * z;
            }
        }
        out
    }

    pub fn embed(&self) -> &CMat {
        &self.embed
    }

    pub fn residuals(&self) -> &TripleResiduals {
        &self.residuals
    }

    pub fn tensor_index(&self) -> TensorIndex {
        TensorIndex { tuples: Tuples { d: self.domain.vec_dim(), k: self.m() }, n: self.codomain.dim() }
    }

    /// `pi_1(e_{i_1}) ... pi_m(e_{i_m})`.
    pub fn slot_product(&self, tuple: &[usize]) -> CMat {
        let mut out = linalg::identity(self.rank());
        for (p, &i) in tuple.iter().enumerate() {
            out *= &self.reps[p][i];
        }
        out
    }

    /// Matrix whose column `(i_1, ..., i_m, h)` is `pi_1(e_{i_1}) ... pi_m(e_{i_m}) V f_h`.
    pub fn spanning_vectors(&self) -> CMat {
        let idx = self.tensor_index();
        let n = idx.n;
        let blocks = par::map_collect(idx.tuples.count(), |ti| self.slot_product(&idx.tuples.decode(ti)) * &self.v);
        let mut out = linalg::zeros(self.rank(), idx.dim());
        for (ti, b) in blocks.into_iter().enumerate() {
            out.view_mut((0, ti * n), (self.rank(), n)).copy_from(&b);
        }
        out
    }

    fn audit(&self) -> TripleResiduals {
        let alg = &self.domain;
        let d = alg.vec_dim();
        let r = self.rank();
        let m = self.m();
        let mut res = TripleResiduals::default();
        let pairs = m * d * d;
        res.homomorphism = par::map_max(pairs, |x| {
            let (p, i, j) = (x / (d * d), (x / d) % d, x % d);
            let prod = &self.reps[p][i] * &self.reps[p][j];
            let target = match alg.basis_product(i, j) {
                Some(l) => self.reps[p][l].clone(),
                None => linalg::zeros(r, r),
            };
            max_abs(&(prod - target))
        });
        res.adjoint = par::map_max(m * d, |x| {
            let (p, i) = (x / d, x % d);
            max_abs(&(self.reps[p][i].adjoint() - &self.reps[p][alg.basis_adjoint(i)]))
        });
        let units = alg.unit_indices();
        res.unital = (0..m)
            .map(|p| {
                let s = units.iter().fold(linalg::zeros(r, r), |acc, &u| acc + &self.reps[p][u]);
                max_abs(&(s - linalg::identity(r)))
            })
            .fold(0.0, nan_max);
        res.commuting = par::map_max(m * m * d * d, |x| {
            let (p, q, i, j) = (x / (m * d * d), (x / (d * d)) % m, (x / d) % d, x % d);
            if p >= q {
                return 0.0;
            }
            let (a, b) = (&self.reps[p][i], &self.reps[q][j]);
            max_abs(&(a * b - b * a))
        });
        res.flag = self.reps.iter().flatten().map(|x| self.space.flag_deviation(x).0).fold(0.0, nan_max);
        // V must send H_l into H^phi_l.
        let mut v_flag: f64 = 0.0;
        for lvl in 1..=self.codomain.level_count() {
            let (dl, rl) = (self.codomain.level_dim(lvl), self.space.level_dim(lvl));
            for h in 0..dl {
                for row in rl..r {
                    v_flag = nan_max(v_flag, self.v[(row, h)].norm());
                }
            }
        }
        res.v_flag = v_flag;
        let mut contr: f64 = 0.0;
        for lvl in 1..=self.codomain.level_count() {
            let alpha = self.alpha_of[lvl - 1];
            let rl = self.space.level_dim(lvl);
            for p in 0..m {
                for i in 0..d {
                    let restricted = self.reps[p][i].columns(0, rl).into_owned();
                    let nrm = spectral_norm(&restricted);
                    let excess = if alg.basis_in_kernel(i, alpha) { nrm } else { nrm - 1.0 };
                    contr = nan_max(contr, excess.max(0.0));
                }
            }
        }
        res.contractivity = contr;
        res.v_norm_excess = (spectral_norm(&self.v) - 1.0).max(0.0);
        res.isometry_defect = max_abs(&(self.v.adjoint() * &self.v - linalg::identity(self.codomain.dim())));
        let spanning = self.spanning_vectors();
        res.embed = max_abs(&(spanning - &self.embed)) / (1.0 + max_abs(&self.embed));
        res
    }

    /// Fail with the first structural invariant above `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        match self.residuals.first_violation(tol) {
            Some((what, residual)) => Err(Error::InvariantViolation { what: what.into(), residual }),
            None => Ok(()),
        }
    }

    /// `(W V, W pi W^*, W embed)` for a flag-preserving unitary `W`.
    pub fn conjugated(&self, w: &CMat, tol: f64) -> Result<Self> {
        let r = self.rank();
        if w.nrows() != r || w.ncols() != r {
            return Err(Error::Shape(format!("conjugating unitary must be {r}x{r}")));
        }
        let unitarity = max_abs(&(w.adjoint() * w - linalg::identity(r)));
        if unitarity > tol {
            return Err(Error::Precondition(format!("W is not unitary (defect {unitarity:.3e})")));
        }
        let (dev, _) = self.space.flag_deviation(w);
        if dev > tol {
            return Err(Error::Precondition(format!("W does not preserve the flag (deviation {dev:.3e})")));
        }
        let reps = self.reps.iter().map(|rp| rp.iter().map(|x| w * x * w.adjoint()).collect()).collect();
        Self::from_parts(
            self.k,
            self.domain.clone(),
            self.codomain.clone(),
            self.alpha_of.clone(),
            self.space.clone(),
            w * &self.v,
            reps,
            Some(w * &self.embed),
        )
    }

    /// The triple restricted to the span of the columns of an isometry `q`
    /// whose range is reducing for every `pi_p` and contains the range of `V`.
    pub(crate) fn compressed(&self, q: &CMat, flag: &[usize]) -> Result<Self> {
        let space = QuantizedDomain::relaxed(q.ncols(), flag)?;
        let reps = self.reps.iter().map(|rp| rp.iter().map(|x| q.adjoint() * x * q).collect()).collect();
        Self::from_parts(
            self.k,
            self.domain.clone(),
            self.codomain.clone(),
            self.alpha_of.clone(),
            space,
            q.adjoint() * &self.v,
            reps,
            Some(q.adjoint() * &self.embed),
        )
    }
}

/// `max_tuples |phi(e_t) - V^* pi_1(x_1) ... pi_m(x_m) V|` over basis tuples.
pub fn verify_dilation(phi: &MultilinearMap, triple: &StinespringTriple) -> Result<f64> {
    if phi.k() != triple.k || phi.domain() != &triple.domain || phi.codomain() != &triple.codomain {
        return Err(Error::Shape("map and triple differ in arity, algebra or domain".into()));
    }
    let rebuilt = triple.induced_values(None);
    Ok(par::map_max(rebuilt.len(), |i| max_abs(&(&phi.values()[i] - &rebuilt[i]))))
}

impl StinespringTriple {
    /// Values on basis tuples of `a -> V^* T pi_1(x_1) ... pi_m(x_m) V`, where
    /// `x_1 = a_m` (odd `k`) or `a_m a_{m+1}` (even `k`) and the outer slots
    /// pair up symmetrically around the middle. `T = None` means the identity.
    pub fn induced_values(&self, t: Option<&CMat>) -> Vec<CMat> {
        let left = match t {
            Some(t) => self.v.adjoint() * t,
            None => self.v.adjoint(),
        };
        self.sandwich_values(&left, &self.v)
    }

    /// Values on basis tuples of `a -> L pi_1(x_1) ... pi_m(x_m) R`.
    pub fn sandwich_values(&self, left: &CMat, right: &CMat) -> Vec<CMat> {
        let m = self.m();
        let k = self.k;
        let alg = &self.domain;
        let m_tuples = Tuples { d: alg.vec_dim(), k: m };
        let sandwiches = par::map_collect(m_tuples.count(), |ti| left * self.slot_product(&m_tuples.decode(ti)) * right);
        let tuples = Tuples { d: alg.vec_dim(), k };
        let n = self.codomain.dim();
        par::map_collect(tuples.count(), |idx| {
            let a = tuples.decode(idx);
            let mut slots = Vec::with_capacity(m);
            for p in 0..m {
                let x = if k % 2 == 1 {
                    if p == 0 {
                        Some(a[m - 1])
                    } else {
                        alg.basis_product(a[m - 1 - p], a[m - 1 + p])
                    }
                } else {
                    alg.basis_product(a[m - 1 - p], a[m + p])
                };
                match x {
                    Some(x) => slots.push(x),
                    None => return linalg::zeros(n, n),
                }
            }
            sandwiches[m_tuples.encode(&slots)].clone()
        })
    }

    /// The map `a -> V^* T pi(a) V`.
    pub fn induced_map(&self, t: Option<&CMat>) -> Result<MultilinearMap> {
        MultilinearMap::new(
            self.k,
            self.domain.clone(),
            self.codomain.clone(),
            self.alpha_of.clone(),
            self.induced_values(t),
        )
    }
}
