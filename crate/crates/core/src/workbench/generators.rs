//! Seeded instance generators and a few named maps.
//!
//! A dilated instance is built from the ground up: each flag piece `l` of the
//! dilation space is a tensor product of `m` legs, leg `p` carrying a direct
//! sum of copies of the identity representations of blocks `1..=alpha_l`
//! (conjugated by a random unitary). Slot `p` acts on leg `p` only, so the
//! representations commute, preserve the flag and vanish on `N_{alpha_l}` over
//! piece `l`. `V` is block-diagonal from the codomain pieces to these pieces,
//! which keeps every value of the map inside `C*_E(D)`.

use clap::ValueEnum;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{map_from_json, map_to_json, matrix_to_json, triple_to_json, MapJson, MatrixJson, TripleJson};
use crate::linalg::{self, spectral_norm, CMat};
use crate::local_algebra::{BlockAlgebra, QuantizedDomain};
use crate::multilinear::{default_alpha_of, MultilinearMap};
use crate::radon_nikodym::{commutant_basis, map_from_operator, random_commutant_contraction};
use crate::rng::stream;
use crate::stinespring::{dilate, gram_matrix, DilateOptions, StinespringTriple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// A map of dilated form with known ground-truth triple.
    Dilated,
    /// A dilated map together with `psi = phi_{Delta_0}` for a planted `Delta_0`.
    Planted,
    /// A dilated map with a small planted defect.
    Defect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DefectKind {
    /// Perturbs one tuple but not its adjoint tuple, at a place where the
    /// Gram perturbation leaves the null space's own block untouched.
    Symmetry,
    /// Perturbs one tuple and its adjoint tuple: symmetric, not invariant.
    Invariance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub epsilon: f64,
    /// Basis tuple index to perturb (invariance defects); chosen from the seed if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub seed: u64,
    pub k: usize,
    pub blocks: Vec<usize>,
    /// Codomain flag; its last entry is the codomain dimension.
    pub flag: Vec<usize>,
    pub kind: GeneratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_of: Option<Vec<usize>>,
    /// Largest dimension of one leg of a dilation piece.
    #[serde(default = "default_leg_dim")]
    pub max_leg_dim: usize,
    #[serde(default = "default_multiplicity")]
    pub max_multiplicity: usize,
    /// Upper bound for `||V||`.
    #[serde(default = "default_v_norm")]
    pub v_norm: f64,
    /// Make `V` an isometry, so that `phi(1, ..., 1) = I`.
    #[serde(default)]
    pub unital: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectSpec>,
}

fn default_leg_dim() -> usize {
    3
}

fn default_multiplicity() -> usize {
    2
}

fn default_v_norm() -> f64 {
    1.0
}

impl InstanceSpec {
    pub fn dilated(seed: u64, k: usize, blocks: &[usize], flag: &[usize]) -> Self {
        Self {
            seed,
            k,
            blocks: blocks.to_vec(),
            flag: flag.to_vec(),
            kind: GeneratorKind::Dilated,
            alpha_of: None,
            max_leg_dim: default_leg_dim(),
            max_multiplicity: default_multiplicity(),
            v_norm: default_v_norm(),
            unital: false,
            defect: None,
        }
    }

    /// Small shapes cycling through the desk-scale parameter space.
    pub fn desk(seed: u64) -> Self {
        const BLOCKS: [&[usize]; 3] = [&[1, 1], &[2], &[1, 2]];
        const FLAGS: [&[usize]; 4] = [&[1], &[2], &[1, 2], &[1, 2, 3]];
        let mut rng = stream(seed, &[0xdead]);
        let k = rng.random_range(1..=4);
        let blocks = BLOCKS[rng.random_range(0..BLOCKS.len())];
        let flag = FLAGS[rng.random_range(0..FLAGS.len())];
        let mut spec = Self::dilated(seed, k, blocks, flag);
        spec.unital = rng.random_bool(0.3);
        spec
    }
}

/// A generated instance, as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub spec: InstanceSpec,
    pub map: MapJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<MapJson>,
    #[serde(default, rename = "delta0", skip_serializing_if = "Option::is_none")]
    pub delta0: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<TripleJson>,
}

pub struct Dilated {
    pub phi: MultilinearMap,
    pub ground_truth: StinespringTriple,
}

pub struct PlantedPair {
    pub phi: MultilinearMap,
    pub psi: MultilinearMap,
    /// `Delta_0` in the basis of `dilate(phi)`.
    pub delta0: CMat,
    pub triple: StinespringTriple,
}

/// Representation of the algebra on one leg: `copies[b]` copies of block `b`,
/// conjugated by `u`.
fn leg_representation(alg: &BlockAlgebra, copies: &[usize], u: &CMat) -> Vec<CMat> {
    let dims = alg.block_dims();
    let w: usize = copies.iter().zip(dims).map(|(c, m)| c * m).sum();
    (0..alg.vec_dim())
        .map(|i| {
            let (b, r, c) = alg.basis_entry(i);
            let mut x = linalg::zeros(w, w);
            let off: usize = copies[..b].iter().zip(dims).map(|(c, m)| c * m).sum();
            let mut unit = linalg::zeros(dims[b], dims[b]);
            unit[(r, c)] = linalg::ONE;
            if b < copies.len() && copies[b] > 0 {
                let blk = linalg::kron(&unit, &linalg::identity(copies[b]));
                x.view_mut((off, off), (blk.nrows(), blk.ncols())).copy_from(&blk);
            }
            u * x * u.adjoint()
        })
        .collect()
}

fn sample_copies<R: Rng + ?Sized>(rng: &mut R, alg: &BlockAlgebra, alpha: usize, max_dim: usize, max_mult: usize) -> Result<Vec<usize>> {
    let dims = alg.block_dims();
    if dims[..alpha].iter().all(|&m| m > max_dim) {
        return Err(Error::Spec(format!("max_leg_dim {max_dim} is smaller than every allowed block")));
    }
    loop {
        let copies: Vec<usize> = (0..alpha).map(|_| rng.random_range(0..=max_mult)).collect();
        let w: usize = copies.iter().zip(dims).map(|(c, m)| c * m).sum();
        if w >= 1 && w <= max_dim {
            return Ok(copies);
        }
    }
}

/// Map of dilated form with its ground-truth (generally non-minimal) triple.
pub fn random_dilated_map(spec: &InstanceSpec) -> Result<Dilated> {
    let alg = BlockAlgebra::new(&spec.blocks)?;
    let n = *spec.flag.last().ok_or_else(|| Error::Spec("empty flag".into()))?;
    let dom = QuantizedDomain::new(n, &spec.flag)?;
    let alpha_of = spec.alpha_of.clone().unwrap_or_else(|| default_alpha_of(&alg, &dom));
    if spec.k == 0 {
        return Err(Error::Spec("k must be at least 1".into()));
    }
    if !(spec.v_norm > 0.0 && spec.v_norm <= 1.0) {
        return Err(Error::Spec("v_norm must lie in (0, 1]".into()));
    }
    // Validates alpha_of before it is used to size anything.
    MultilinearMap::zero(1, alg.clone(), dom.clone(), Some(alpha_of.clone()))?;
    let m = spec.k.div_ceil(2);
    let mut rng = stream(spec.seed, &[1]);
    let pieces = dom.pieces();

    let mut piece_reps: Vec<Vec<Vec<CMat>>> = Vec::new();
    let mut piece_v: Vec<CMat> = Vec::new();
    for (l, piece) in pieces.iter().enumerate() {
        let delta = piece.len();
        let mut attempt = 0;
        let (legs, kappa) = loop {
            let legs = (0..m)
                .map(|_| {
                    let copies = sample_copies(&mut rng, &alg, alpha_of[l], spec.max_leg_dim, spec.max_multiplicity)?;
                    let w: usize = copies.iter().zip(alg.block_dims()).map(|(c, m)| c * m).sum();
                    let u = linalg::random_unitary(&mut rng, w);
                    Ok(leg_representation(&alg, &copies, &u))
                })
                .collect::<Result<Vec<_>>>()?;
            let kappa: usize = legs.iter().map(|leg| leg[0].nrows()).product();
            if !spec.unital || kappa >= delta {
                break (legs, kappa);
            }
            attempt += 1;
            if attempt > 200 {
                return Err(Error::Spec(format!(
                    "unital V needs a dilation piece of dimension >= {delta}; raise max_leg_dim"
                )));
            }
        };
        let reps: Vec<Vec<CMat>> = (0..m)
            .map(|p| {
                (0..alg.vec_dim())
                    .map(|i| {
                        legs.iter().enumerate().fold(linalg::identity(1), |acc, (q, leg)| {
                            let factor = if q == p { leg[i].clone() } else { linalg::identity(leg[i].nrows()) };
                            linalg::kron(&acc, &factor)
                        })
                    })
                    .collect()
            })
            .collect();
        let v = if spec.unital {
            linalg::random_isometry(&mut rng, kappa, delta)
        } else {
            let g = linalg::random_complex(&mut rng, kappa, delta);
            let s = spectral_norm(&g);
            g.scale(spec.v_norm / s)
        };
        piece_reps.push(reps);
        piece_v.push(v);
    }
    let reps: Vec<Vec<CMat>> = (0..m)
        .map(|p| {
            (0..alg.vec_dim())
                .map(|i| linalg::block_diag(&piece_reps.iter().map(|pr| pr[p][i].clone()).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let v = linalg::block_diag(&piece_v);
    let mut flag = Vec::new();
    let mut acc = 0;
    for pv in &piece_v {
        acc += pv.nrows();
        flag.push(acc);
    }
    let space = QuantizedDomain::relaxed(acc, &flag)?;
    let triple = StinespringTriple::from_parts(spec.k, alg, dom, alpha_of, space, v, reps, None)?;
    let phi = triple.induced_map(None)?;
    Ok(Dilated { phi, ground_truth: triple })
}

/// `phi` from [`random_dilated_map`] and `psi = phi_{Delta_0}` for a random
/// `Delta_0` in the commutant with `0 <= Delta_0 <= I`.
pub fn planted_pair(spec: &InstanceSpec) -> Result<PlantedPair> {
    let phi = random_dilated_map(spec)?.phi;
    let opts = DilateOptions::default();
    let triple = dilate(&phi, opts)?;
    let basis = commutant_basis(&triple, opts.tol);
    let mut rng = stream(spec.seed, &[2]);
    let delta0 = random_commutant_contraction(&basis, &mut rng);
    let psi = map_from_operator(&triple, &delta0, opts.tol)?;
    Ok(PlantedPair { phi, psi, delta0, triple })
}

/// A dilated map with a planted defect of the requested kind.
pub fn defect_map(spec: &InstanceSpec, defect: &DefectSpec) -> Result<MultilinearMap> {
    let phi = random_dilated_map(spec)?.phi;
    if phi.k() < 2 {
        return Err(Error::Spec(format!("{:?} defects need k >= 2", defect.kind)));
    }
    let mut rng = stream(spec.seed, &[3]);
    let alg = phi.domain();
    let tuples = phi.tuples();
    let k = phi.k();
    let y: Vec<CMat> = phi.codomain().pieces().iter().map(|p| linalg::random_complex(&mut rng, p.len(), p.len())).collect();
    let y = linalg::block_diag(&y);
    // Invariance forces the value of these tuples to vanish.
    let mut candidates: Vec<usize> =
        (0..tuples.count()).filter(|&t| alg.basis_product(tuples.decode(t)[0], tuples.decode(t)[k - 1]).is_none()).collect();
    if defect.kind == DefectKind::Symmetry {
        // The symmetric part of a single-tuple defect shifts the Gram matrix by
        // H. Only where K^* H K = 0 (K the null space of the Gram matrix) does
        // positivity survive to first order while the null space tilts.
        let gram = gram_matrix(&phi);
        let tau = DilateOptions::default().tol_rank * gram.lambda_max();
        let (_, kernel) = gram.eigen.select(|v| v <= tau);
        let zero = MultilinearMap::zero(k, alg.clone(), phi.codomain().clone(), Some(phi.alpha_of().to_vec()))?;
        candidates.retain(|&loc| {
            let delta = zero.with_value(&tuples.decode(loc), y.clone()).expect("shape matches");
            let h = gram_matrix(&delta).matrix;
            spectral_norm(&(kernel.adjoint() * &h * &kernel)) <= 1e-12 * (1.0 + spectral_norm(&h))
        });
    }
    let loc = match defect.location {
        Some(loc) if candidates.contains(&loc) => loc,
        Some(loc) => return Err(Error::Spec(format!("tuple {loc} is not a valid {:?} defect location", defect.kind))),
        None if candidates.is_empty() => {
            return Err(Error::Spec(format!("no valid {:?} defect location for this instance", defect.kind)));
        }
        None => candidates[rng.random_range(0..candidates.len())],
    };
    let t = tuples.decode(loc);
    let eps = defect.epsilon;
    let mut values = phi.values().to_vec();
    match defect.kind {
        DefectKind::Symmetry => values[loc] += y.scale(eps),
        DefectKind::Invariance => {
            let adj = tuples.encode(&t.iter().rev().map(|&i| alg.basis_adjoint(i)).collect::<Vec<_>>());
            if adj == loc {
                values[loc] += linalg::hermitian_part(&y).scale(eps);
            } else {
                values[loc] += y.scale(eps);
                values[adj] += y.adjoint().scale(eps);
            }
        }
    }
    MultilinearMap::new(k, alg.clone(), phi.codomain().clone(), phi.alpha_of().to_vec(), values)
}

fn instance_name(spec: &InstanceSpec) -> String {
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-");
    let kind = match spec.kind {
        GeneratorKind::Dilated => "dilated",
        GeneratorKind::Planted => "planted",
        GeneratorKind::Defect => "defect",
    };
    format!("{kind}-k{}-b{}-f{}-s{}", spec.k, join(&spec.blocks), join(&spec.flag), spec.seed)
}

pub fn generate(spec: &InstanceSpec) -> Result<InstanceFile> {
    let name = instance_name(spec);
    match spec.kind {
        GeneratorKind::Dilated => {
            let d = random_dilated_map(spec)?;
            Ok(InstanceFile {
                name,
                spec: spec.clone(),
                map: map_to_json(&d.phi),
                psi: None,
                delta0: None,
                ground_truth: Some(triple_to_json(&d.ground_truth)),
            })
        }
        GeneratorKind::Planted => {
            let p = planted_pair(spec)?;
            Ok(InstanceFile {
                name,
                spec: spec.clone(),
                map: map_to_json(&p.phi),
                psi: Some(map_to_json(&p.psi)),
                delta0: Some(matrix_to_json(&p.delta0)),
                ground_truth: None,
            })
        }
        GeneratorKind::Defect => {
            let defect = spec
                .defect
                .clone()
                .ok_or_else(|| Error::Spec("kind defect needs a defect specification".into()))?;
            let phi = defect_map(spec, &defect)?;
            Ok(InstanceFile { name, spec: spec.clone(), map: map_to_json(&phi), psi: None, delta0: None, ground_truth: None })
        }
    }
}

/// Which map to take from a file that may be a bare map or an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Phi,
    Psi,
}

/// Load a map from a bare map file or an instance file. For `Role::Psi`, an
/// instance with a `psi` entry yields that entry.
pub fn load_map(path: &std::path::Path, role: Role) -> Result<MultilinearMap> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("map").is_some() {
        let inst: InstanceFile = serde_json::from_value(value)?;
        let j = match (role, &inst.psi) {
            (Role::Psi, Some(psi)) => psi,
            _ => &inst.map,
        };
        map_from_json(j)
    } else {
        map_from_json(&serde_json::from_value(value)?)
    }
}

/// `a -> a^T` on `M_2`: positive, not 2-positive.
pub fn transpose_map() -> MultilinearMap {
    let alg = BlockAlgebra::new(&[2]).expect("valid");
    let dom = QuantizedDomain::new(2, &[2]).expect("valid");
    let a = alg.clone();
    MultilinearMap::from_fn(1, alg, dom, None, move |t| a.basis_element(t[0]).block(0).transpose()).expect("valid")
}

/// `a -> diag(a_1, a_2)` on `C (+) C` into `C^2` with flag `(1, 2)` and
/// `alpha = (1, 2)`. Its values on `N_1` are nonzero, but only off `H_1`.
pub fn diagonal_map() -> MultilinearMap {
    let alg = BlockAlgebra::new(&[1, 1]).expect("valid");
    let dom = QuantizedDomain::new(2, &[1, 2]).expect("valid");
    MultilinearMap::from_fn(1, alg, dom, Some(vec![1, 2]), |t| {
        let mut x = linalg::zeros(2, 2);
        x[(t[0], t[0])] = linalg::ONE;
        x
    })
    .expect("valid")
}

/// `s a` on a single block, as a map into the same matrix space.
pub fn scaled_identity_map(blocks: usize, s: f64) -> MultilinearMap {
    let alg = BlockAlgebra::new(&[blocks]).expect("valid");
    let dom = QuantizedDomain::new(blocks, &[blocks]).expect("valid");
    let a = alg.clone();
    MultilinearMap::from_fn(1, alg, dom, None, move |t| a.basis_element(t[0]).block(0).scale(s)).expect("valid")
}

/// `(a, b) -> a X b` on `C (+) C` acting diagonally on `C^2`. Invariant only
/// when `X` is diagonal.
pub fn twisted_product_map(x: &CMat) -> MultilinearMap {
    let alg = BlockAlgebra::new(&[1, 1]).expect("valid");
    let dom = QuantizedDomain::new(2, &[2]).expect("valid");
    let x = x.clone();
    MultilinearMap::from_fn(2, alg, dom, None, move |t| {
        let mut out = linalg::zeros(2, 2);
        out[(t[0], t[1])] = x[(t[0], t[1])];
        out
    })
    .expect("valid")
}
