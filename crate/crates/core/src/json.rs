//! JSON schemas and conversions.
//!
//! Complex numbers are `[re, im]`, matrices are row-major arrays of rows, and
//! representation indices `p` are 1-based. Output floats are written with 17
//! significant digits so files are byte-identical across runs; NaN, infinities
//! and nulls are rejected at write time.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::local_algebra::{AlgebraElement, BlockAlgebra, QuantizedDomain};
use crate::multilinear::{AlgebraMatrix, MultilinearMap};
use crate::radon_nikodym::{CertificateResiduals, RnCertificate};
use crate::stinespring::{StinespringTriple, TripleResiduals};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainJson {
    pub dim: usize,
    pub flag: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementJson {
    pub blocks: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub k: usize,
    pub alpha_of: Vec<usize>,
    pub domain: AlgebraJson,
    pub codomain: DomainJson,
    pub values: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepJson {
    pub basis_index: usize,
    pub p: usize,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleJson {
    pub k: usize,
    pub domain: AlgebraJson,
    pub codomain: DomainJson,
    pub alpha_of: Vec<usize>,
    pub r: usize,
    pub flag: Vec<usize>,
    #[serde(rename = "V")]
    pub v: MatrixJson,
    pub reps: Vec<RepJson>,
    pub embed: MatrixJson,
    pub residuals: TripleResiduals,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateJson {
    #[serde(rename = "T")]
    pub t: MatrixJson,
    #[serde(rename = "Delta")]
    pub delta: MatrixJson,
    pub residuals: CertificateResiduals,
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson, nrows: usize, ncols: usize) -> Result<CMat> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape(format!("expected a {nrows}x{ncols} matrix")));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn dims_of(rows: &MatrixJson) -> (usize, usize) {
    (rows.len(), rows.first().map_or(0, Vec::len))
}

pub fn algebra_to_json(a: &BlockAlgebra) -> AlgebraJson {
    AlgebraJson { blocks: a.block_dims().to_vec() }
}

pub fn domain_to_json(d: &QuantizedDomain) -> DomainJson {
    DomainJson { dim: d.dim(), flag: d.flag().to_vec() }
}

pub fn element_to_json(a: &AlgebraElement) -> ElementJson {
    ElementJson { blocks: a.blocks().iter().map(matrix_to_json).collect() }
}

pub fn element_from_json(alg: &BlockAlgebra, e: &ElementJson) -> Result<AlgebraElement> {
    if e.blocks.len() != alg.level_count() {
        return Err(Error::Shape("element block count does not match the algebra".into()));
    }
    let blocks = e
        .blocks
        .iter()
        .zip(alg.block_dims())
        .map(|(b, &m)| matrix_from_json(b, m, m))
        .collect::<Result<Vec<_>>>()?;
    alg.element(blocks)
}

/// `{"n": n, "entries": [[element, ...], ...]}`.
pub fn algebra_matrix_value(a: &AlgebraMatrix) -> Value {
    let n = a.n();
    let entries: Vec<Vec<ElementJson>> =
        (0..n).map(|s| (0..n).map(|t| element_to_json(&a.entry(s, t))).collect()).collect();
    serde_json::json!({ "n": n, "entries": entries })
}

pub fn map_to_json(phi: &MultilinearMap) -> MapJson {
    MapJson {
        k: phi.k(),
        alpha_of: phi.alpha_of().to_vec(),
        domain: algebra_to_json(phi.domain()),
        codomain: domain_to_json(phi.codomain()),
        values: phi.values().iter().map(matrix_to_json).collect(),
    }
}

pub fn map_from_json(j: &MapJson) -> Result<MultilinearMap> {
    let alg = BlockAlgebra::new(&j.domain.blocks)?;
    let dom = QuantizedDomain::new(j.codomain.dim, &j.codomain.flag)?;
    let n = dom.dim();
    let values = j.values.iter().map(|v| matrix_from_json(v, n, n)).collect::<Result<Vec<_>>>()?;
    MultilinearMap::new(j.k, alg, dom, j.alpha_of.clone(), values)
}

pub fn triple_to_json(t: &StinespringTriple) -> TripleJson {
    let mut reps = Vec::new();
    for p in 1..=t.m() {
        for i in 0..t.domain().vec_dim() {
            reps.push(RepJson { basis_index: i, p, matrix: matrix_to_json(t.rep_basis(p, i)) });
        }
    }
    TripleJson {
        k: t.k(),
        domain: algebra_to_json(t.domain()),
        codomain: domain_to_json(t.codomain()),
        alpha_of: t.alpha_of().to_vec(),
        r: t.rank(),
        flag: t.space().flag().to_vec(),
        v: matrix_to_json(t.v()),
        reps,
        embed: matrix_to_json(t.embed()),
        residuals: t.residuals().clone(),
    }
}

/// Rebuild a triple; residuals are recomputed, not trusted.
pub fn triple_from_json(j: &TripleJson) -> Result<StinespringTriple> {
    let alg = BlockAlgebra::new(&j.domain.blocks)?;
    let dom = QuantizedDomain::new(j.codomain.dim, &j.codomain.flag)?;
    let space = QuantizedDomain::relaxed(j.r, &j.flag)?;
    let m = j.k.div_ceil(2);
    let d = alg.vec_dim();
    let mut reps: Vec<Vec<Option<CMat>>> = vec![vec![None; d]; m];
    for rep in &j.reps {
        if rep.p == 0 || rep.p > m || rep.basis_index >= d {
            return Err(Error::Shape(format!("rep entry p={} basis_index={} out of range", rep.p, rep.basis_index)));
        }
        reps[rep.p - 1][rep.basis_index] = Some(matrix_from_json(&rep.matrix, j.r, j.r)?);
    }
    let reps = reps
        .into_iter()
        .map(|rp| rp.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Shape("triple is missing representation matrices".into()))?;
    let v = matrix_from_json(&j.v, j.r, dom.dim())?;
    let (er, ec) = dims_of(&j.embed);
    let embed = if j.r == 0 { None } else { Some(matrix_from_json(&j.embed, er, ec)?) };
    StinespringTriple::from_parts(j.k, alg, dom, j.alpha_of.clone(), space, v, reps, embed)
}

pub fn certificate_to_json(c: &RnCertificate) -> CertificateJson {
    CertificateJson { t: matrix_to_json(&c.t), delta: matrix_to_json(&c.delta), residuals: c.residuals.clone() }
}

/// Formatter writing every float in `{:.16e}` form and refusing nulls, which
/// is where serde_json routes NaN and infinities.
struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn write_null<W: ?Sized + Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        Err(io::Error::new(io::ErrorKind::InvalidData, "non-finite number or null in JSON output"))
    }
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser).map_err(|e| Error::Spec(format!("cannot serialise: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_string(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn floats_are_fixed_width_and_roundtrip() {
        let m = CMat::from_fn(2, 2, |i, j| C64::new(0.1 * (i as f64 + 1.0), -1.0 / (j as f64 + 3.0)));
        let s = to_string(&matrix_to_json(&m)).unwrap();
        assert!(s.starts_with("[[[1.0000000000000001e-1,"));
        let back: MatrixJson = serde_json::from_str(&s).unwrap();
        assert_eq!(matrix_from_json(&back, 2, 2).unwrap(), m);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut m = linalg::identity(2);
        m[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(to_string(&matrix_to_json(&m)).is_err());
    }

    #[test]
    fn element_roundtrip() {
        let alg = BlockAlgebra::new(&[1, 2]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let a = alg.random_element(&mut rng);
        let j = element_to_json(&a);
        assert_eq!(element_from_json(&alg, &j).unwrap(), a);
    }
}
