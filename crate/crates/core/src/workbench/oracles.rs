//! Brute-force reference computations, kept deliberately naive so they share
//! no code path with the fast implementations they check.

use crate::error::{Error, Result};
use crate::linalg::{self, herm_eigen, CMat};
use crate::multilinear::MultilinearMap;

/// The Gram matrix by direct evaluation: every entry builds its argument list
/// from algebra elements, multiplies them out and evaluates `phi` in full.
pub fn brute_force_gram(phi: &MultilinearMap) -> CMat {
    let alg = phi.domain();
    let (k, m) = (phi.k(), phi.m());
    let d = alg.vec_dim();
    let n = phi.codomain().dim();
    let count = d.pow(m as u32);
    let decode = |mut x: usize| {
        let mut t = vec![0; m];
        for slot in (0..m).rev() {
            t[slot] = x % d;
            x /= d;
        }
        t
    };
    let mut g = linalg::zeros(count * n, count * n);
    for ti in 0..count {
        let i = decode(ti);
        for tj in 0..count {
            let j = decode(tj);
            let mut args = Vec::with_capacity(k);
            for p in (0..m).rev() {
                if k % 2 == 1 && p == 0 {
                    break;
                }
                args.push(alg.basis_element(i[p]).adjoint());
            }
            if k % 2 == 1 {
                args.push(alg.basis_element(i[0]).adjoint().mul(&alg.basis_element(j[0])));
                for &x in &j[1..] {
                    args.push(alg.basis_element(x));
                }
            } else {
                for &x in &j {
                    args.push(alg.basis_element(x));
                }
            }
            let value = phi.evaluate_matrix(&args).expect("argument count matches k");
            for h in 0..n {
                for h2 in 0..n {
                    g[(ti * n + h, tj * n + h2)] = value[(h, h2)];
                }
            }
        }
    }
    g
}

#[derive(Clone, Debug)]
pub struct ChoiOracle {
    /// Minimal dilation dimension at each codomain level.
    pub level_dims: Vec<usize>,
    /// `max |phi(e_i) - sum_j K_j^* e_i K_j|` for the Kraus operators read off
    /// the full-level Choi matrices.
    pub reconstruction: f64,
}

/// Relative eigenvalue cut for Choi ranks.
const CHOI_RANK_TOL: f64 = 1e-10;

/// Classical cross-check for `k = 1`: on block `b` of size `m_b` the Choi
/// matrix of the compression to `H_l` has rank `c`, and the minimal dilation
/// of that compression has dimension `sum_b m_b c`.
pub fn choi_stinespring_oracle_k1(phi: &MultilinearMap) -> Result<ChoiOracle> {
    if phi.k() != 1 {
        return Err(Error::Precondition(format!("the Choi oracle needs k = 1, got k = {}", phi.k())));
    }
    let alg = phi.domain();
    let n = phi.codomain().dim();
    let chois: Vec<CMat> = (0..alg.level_count())
        .map(|b| {
            let mb = alg.block_dims()[b];
            let mut c = linalg::zeros(mb * n, mb * n);
            for r in 0..mb {
                for s in 0..mb {
                    let v = phi.value(&[alg.basis_index(b, r, s)]);
                    for h in 0..n {
                        for h2 in 0..n {
                            c[(r * n + h, s * n + h2)] = v[(h, h2)];
                        }
                    }
                }
            }
            c
        })
        .collect();
    let scale = chois.iter().map(|c| herm_eigen(c).max().abs()).fold(0.0, f64::max);
    let cut = CHOI_RANK_TOL * scale;

    let mut level_dims = Vec::new();
    for lvl in 1..=phi.codomain().level_count() {
        let dl = phi.codomain().level_dim(lvl);
        let mut dim = 0;
        for (b, c) in chois.iter().enumerate() {
            let mb = alg.block_dims()[b];
            let idx: Vec<usize> = (0..mb).flat_map(|r| (0..dl).map(move |h| r * n + h)).collect();
            let e = herm_eigen(&linalg::principal(c, &idx));
            dim += mb * e.values.iter().filter(|&&v| v > cut).count();
        }
        level_dims.push(dim);
    }

    let mut rebuilt = vec![linalg::zeros(n, n); alg.vec_dim()];
    for (b, c) in chois.iter().enumerate() {
        let mb = alg.block_dims()[b];
        let e = herm_eigen(c);
        for (j, &lambda) in e.values.iter().enumerate() {
            if lambda <= cut {
                continue;
            }
            let kraus = CMat::from_fn(mb, n, |r, h| e.vectors[(r * n + h, j)].conj() * lambda.sqrt());
            for r in 0..mb {
                for s in 0..mb {
                    let mut unit = linalg::zeros(mb, mb);
                    unit[(r, s)] = linalg::ONE;
                    rebuilt[alg.basis_index(b, r, s)] += kraus.adjoint() * unit * &kraus;
                }
            }
        }
    }
    let reconstruction = rebuilt
        .iter()
        .zip(phi.values())
        .map(|(a, b)| linalg::max_abs(&(a - b)))
        .fold(0.0, linalg::nan_max);
    Ok(ChoiOracle { level_dims, reconstruction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stinespring::gram_raw;
    use crate::workbench::generators::{diagonal_map, transpose_map};

    #[test]
    fn brute_force_matches_fast_gram_on_transpose() {
        let phi = transpose_map();
        let diff = linalg::max_abs(&(brute_force_gram(&phi) - gram_raw(&phi)));
        assert!(diff < 1e-14);
    }

    #[test]
    fn diagonal_map_has_dims_one_two() {
        let o = choi_stinespring_oracle_k1(&diagonal_map()).unwrap();
        assert_eq!(o.level_dims, vec![1, 2]);
        assert!(o.reconstruction < 1e-12);
    }
}
