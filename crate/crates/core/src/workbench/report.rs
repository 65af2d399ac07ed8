//! Per-instance pipelines and batch reports.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::generators::InstanceFile;
use crate::error::{Error, Result};
use crate::json::{map_from_json, matrix_from_json, triple_from_json};
use crate::linalg::spectral_norm;
use crate::multilinear::{check_invariant, check_local_contractivity, check_local_positivity, check_symmetric, MapCheckReport, MultilinearMap, Verdict};
use crate::par;
use crate::radon_nikodym::rn_derivative;
use crate::stinespring::{dilate, gram_matrix, is_minimal, minimize, unitary_equivalence, verify_dilation, DilateOptions};

/// Reconstruction tolerance relative to the largest basis value.
pub const VERIFY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub check: String,
    pub verdict: Verdict,
    pub residual: f64,
}

impl CheckLine {
    /// Non-finite residuals are stored as `f64::MAX` so reports always serialise.
    pub fn new(check: &str, verdict: Verdict, residual: f64) -> Self {
        let residual = if residual.is_finite() { residual } else { f64::MAX };
        Self { check: check.to_string(), verdict, residual }
    }

    fn gate(check: &str, residual: f64, tol: f64) -> Self {
        Self::new(check, if residual <= tol { Verdict::Pass } else { Verdict::Fail }, residual)
    }

    fn from_report(r: &MapCheckReport) -> Self {
        Self::new(&r.property, r.verdict, r.worst_residual)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub instance: String,
    pub checks: Vec<CheckLine>,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.passed())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub tol_rank: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { n_max: 2, trials: 40, seed: 0, tol: 1e-9, tol_rank: 1e-10 }
    }
}

impl PipelineOptions {
    fn dilate(&self) -> DilateOptions {
        DilateOptions { tol: self.tol, tol_rank: self.tol_rank }
    }
}

/// The property checks that need no dilation.
pub fn map_checks(phi: &MultilinearMap, opts: &PipelineOptions) -> Vec<MapCheckReport> {
    vec![
        check_symmetric(phi, opts.tol),
        check_invariant(phi, opts.tol),
        check_local_positivity(phi, opts.n_max, opts.trials, opts.seed, opts.tol),
        check_local_contractivity(phi, opts.n_max, opts.trials, opts.seed, opts.tol),
    ]
}

/// Checks, Gram positivity, dilation, reconstruction and minimality of one map.
pub fn map_pipeline(phi: &MultilinearMap, opts: &PipelineOptions) -> Vec<CheckLine> {
    let mut lines: Vec<CheckLine> = map_checks(phi, opts).iter().map(CheckLine::from_report).collect();
    let gram = gram_matrix(phi);
    let deficit = (-gram.lambda_min()).max(0.0) / (1.0 + gram.lambda_max().abs());
    lines.push(CheckLine::new("gram-psd", if gram.is_psd(opts.tol) { Verdict::Pass } else { Verdict::Fail }, deficit));
    match dilate(phi, opts.dilate()) {
        Ok(triple) => {
            lines.push(CheckLine::new("dilate", Verdict::Pass, triple.residuals().well_definedness));
            let structural = triple.residuals().structural().iter().map(|&(_, r)| r).fold(0.0, f64::max);
            lines.push(CheckLine::gate("triple-invariants", structural, opts.tol));
            let scale = phi.max_basis_norm().max(f64::MIN_POSITIVE);
            let rel = verify_dilation(phi, &triple).map(|r| r / scale).unwrap_or(f64::INFINITY);
            lines.push(CheckLine::gate("verify", rel, VERIFY_TOL));
            let minimal = is_minimal(&triple);
            lines.push(CheckLine::new("minimal", if minimal { Verdict::Pass } else { Verdict::Fail }, 0.0));
        }
        Err(e) => {
            let residual = match e {
                Error::NotAdmissible { min_eigenvalue, .. } => -min_eigenvalue,
                Error::WellDefinedness { residual, .. } | Error::InvariantViolation { residual, .. } => residual,
                _ => f64::INFINITY,
            };
            lines.push(CheckLine::new("dilate", Verdict::Fail, residual));
        }
    }
    lines
}

/// [`map_pipeline`] plus whatever ground truth the instance carries.
pub fn instance_pipeline(inst: &InstanceFile, opts: &PipelineOptions) -> Result<InstanceReport> {
    let phi = map_from_json(&inst.map)?;
    let mut checks = map_pipeline(&phi, opts);
    if let Some(gt) = &inst.ground_truth {
        let truth = triple_from_json(gt)?;
        let residual = minimize(&truth, opts.tol)
            .and_then(|t| Ok((t, dilate(&phi, opts.dilate())?)))
            .and_then(|(t, d)| unitary_equivalence(&t, &d, VERIFY_TOL))
            .map(|eq| eq.residuals.max())
            .unwrap_or(f64::INFINITY);
        checks.push(CheckLine::gate("ground-truth-equivalence", residual, VERIFY_TOL));
    }
    if let Some(psi) = &inst.psi {
        let psi = map_from_json(psi)?;
        match rn_derivative(&phi, &psi, opts.dilate()) {
            Ok(cert) => {
                let r = &cert.residuals;
                let worst = r.reconstruction.max(r.commutant).max(r.contraction);
                checks.push(CheckLine::new("radon-nikodym", Verdict::Pass, worst));
                if let Some(d0) = &inst.delta0 {
                    let n = cert.delta.nrows();
                    let d0 = matrix_from_json(d0, n, n)?;
                    checks.push(CheckLine::gate("delta-recovery", spectral_norm(&(&cert.delta - &d0)), VERIFY_TOL));
                }
            }
            Err(e) => {
                let residual = match e {
                    Error::Inconsistent { residual, .. } => residual,
                    _ => f64::INFINITY,
                };
                checks.push(CheckLine::new("radon-nikodym", Verdict::Fail, residual));
            }
        }
    }
    Ok(InstanceReport { instance: inst.name.clone(), checks })
}

/// Instance files (`*.json`) directly inside `dir`, sorted by path.
pub fn instance_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Run every instance in `dir`; reports come back sorted by instance name.
pub fn report_dir(dir: &Path, opts: &PipelineOptions) -> Result<Vec<InstanceReport>> {
    let paths = instance_paths(dir)?;
    let results = par::map_collect(paths.len(), |i| -> Result<InstanceReport> {
        let inst: InstanceFile = crate::json::read_file(&paths[i])?;
        instance_pipeline(&inst, opts)
    });
    let mut reports = results.into_iter().collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| a.instance.cmp(&b.instance));
    Ok(reports)
}

pub fn format_text(reports: &[InstanceReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for c in &r.checks {
            out.push_str(&format!("CHECK {}/{} {} {:.3e}\n", r.instance, c.check, c.verdict.as_str(), c.residual));
        }
    }
    out
}
