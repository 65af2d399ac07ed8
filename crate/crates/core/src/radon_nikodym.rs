//! Order structure and Radon-Nikodym derivatives.
//!
//! For `psi <= phi` the derivative is `Delta = T^* T`, where the connecting
//! contraction `T: H^phi -> H^psi` sends the spanning vectors of `phi` to those
//! of `psi`. `Delta` lies in the commutant of the dilation of `phi`, between 0
//! and I, and `psi = V^* Delta pi(.) V`.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs, nan_max, spectral_norm, CMat};
use crate::multilinear::{check_invariant, check_symmetric, MapCheckReport, MultilinearMap, Sampling, Verdict};
use crate::par;
use crate::rng::stream;
use crate::stinespring::{dilate, gram_matrix, level_leak, DilateOptions, StinespringTriple};

/// Outcome of a domination test, with the reason when it fails.
#[derive(Clone, Debug, Serialize)]
pub struct Domination {
    pub holds: bool,
    pub symmetric_residual: f64,
    pub invariant_residual: f64,
    /// `lambda_min / (1 + lambda_max)` of the Gram matrix of `phi - psi`.
    pub gram_min_relative: f64,
}

impl Domination {
    pub fn reason(&self) -> String {
        format!(
            "phi - psi: symmetry residual {:.3e}, invariance residual {:.3e}, relative Gram min eigenvalue {:.3e}",
            self.symmetric_residual, self.invariant_residual, self.gram_min_relative
        )
    }
}

pub fn domination(phi: &MultilinearMap, psi: &MultilinearMap, tol: f64) -> Result<Domination> {
    let diff = phi.sub(psi)?;
    let sym = check_symmetric(&diff, tol);
    let inv = check_invariant(&diff, tol);
    let g = gram_matrix(&diff);
    let rel = g.lambda_min() / (1.0 + g.lambda_max().abs());
    Ok(Domination {
        holds: sym.passed() && inv.passed() && g.is_psd(tol),
        symmetric_residual: sym.worst_residual,
        invariant_residual: inv.worst_residual,
        gram_min_relative: rel,
    })
}

/// `psi <= phi`: `phi - psi` is symmetric, invariant and has a positive Gram matrix.
pub fn dominates(phi: &MultilinearMap, psi: &MultilinearMap, tol: f64) -> bool {
    domination(phi, psi, tol).map(|d| d.holds).unwrap_or(false)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ContractionResiduals {
    pub norm_excess: f64,
    pub v: f64,
    pub intertwining: f64,
    pub levels: f64,
    pub spanning: f64,
}

impl ContractionResiduals {
    pub fn max(&self) -> f64 {
        [self.norm_excess, self.v, self.intertwining, self.levels, self.spanning].into_iter().fold(0.0, nan_max)
    }
}

#[derive(Clone, Debug)]
pub struct ConnectingContraction {
    pub t: CMat,
    pub phi_triple: StinespringTriple,
    pub psi_triple: StinespringTriple,
    pub residuals: ContractionResiduals,
}

const PINV_TOL: f64 = 1e-9;

fn contraction_from(tp: StinespringTriple, psi: &MultilinearMap, opts: DilateOptions) -> Result<ConnectingContraction> {
    let tq = dilate(psi, opts)?;
    let xp = tp.spanning_vectors();
    let xq = tq.spanning_vectors();
    let t = &xq * linalg::pinv(&xp, PINV_TOL);
    let d = tp.domain().vec_dim();
    let mut res = ContractionResiduals {
        norm_excess: (spectral_norm(&t) - 1.0).max(0.0),
        v: max_abs(&(&t * tp.v() - tq.v())),
        levels: level_leak(&t, tp.space(), tq.space()),
        spanning: max_abs(&(&t * &xp - &xq)) / (1.0 + max_abs(&xq)),
        ..Default::default()
    };
    res.intertwining = par::map_max(tp.m() * d, |x| {
        let (p, i) = (x / d + 1, x % d);
        max_abs(&(&t * tp.rep_basis(p, i) - tq.rep_basis(p, i) * &t))
    });
    if !(res.max() <= opts.tol) {
        return Err(Error::Inconsistent { what: "connecting contraction".into(), residual: res.max() });
    }
    Ok(ConnectingContraction { t, phi_triple: tp, psi_triple: tq, residuals: res })
}

/// The contraction `T: H^phi -> H^psi` with `T V_phi = V_psi` and
/// `T pi^phi_p = pi^psi_p T`.
pub fn connecting_contraction(phi: &MultilinearMap, psi: &MultilinearMap, opts: DilateOptions) -> Result<ConnectingContraction> {
    if !phi.same_shape(psi) {
        return Err(Error::Shape("maps differ in arity, algebra, domain or alpha_of".into()));
    }
    contraction_from(dilate(phi, opts)?, psi, opts)
}

/// `max(||[X, pi_p(e_i)]||, flag deviation)` over all slots and basis elements.
pub fn commutant_residual(triple: &StinespringTriple, x: &CMat) -> f64 {
    let d = triple.domain().vec_dim();
    let comm = par::map_max(triple.m() * d, |y| {
        let pi = triple.rep_basis(y / d + 1, y % d);
        max_abs(&(x * pi - pi * x))
    });
    nan_max(comm, triple.space().flag_deviation(x).0)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CertificateResiduals {
    pub reconstruction: f64,
    pub commutant: f64,
    /// How far the spectrum of `Delta` leaves `[0, 1]`.
    pub contraction: f64,
}

#[derive(Clone, Debug)]
pub struct RnCertificate {
    pub t: CMat,
    pub delta: CMat,
    pub residuals: CertificateResiduals,
    pub phi_triple: StinespringTriple,
}

/// Derivative against an already dilated `phi`; skips the domination test.
pub fn rn_with_triple(tp: &StinespringTriple, psi: &MultilinearMap, opts: DilateOptions) -> Result<RnCertificate> {
    let cc = contraction_from(tp.clone(), psi, opts)?;
    let delta = cc.t.adjoint() * &cc.t;
    let eig = linalg::herm_eigen(&delta);
    let rebuilt = tp.induced_map(Some(&delta))?;
    let residuals = CertificateResiduals {
        reconstruction: psi.max_abs_diff(&rebuilt)?,
        commutant: commutant_residual(tp, &delta),
        contraction: nan_max((eig.max() - 1.0).max(0.0), (-eig.min()).max(0.0)),
    };
    let scale = 1.0 + psi.max_basis_norm();
    if !(residuals.reconstruction <= opts.tol * scale && residuals.commutant <= opts.tol && residuals.contraction <= opts.tol) {
        return Err(Error::Inconsistent {
            what: "Radon-Nikodym certificate".into(),
            residual: residuals.reconstruction.max(residuals.commutant).max(residuals.contraction),
        });
    }
    Ok(RnCertificate { t: cc.t, delta, residuals, phi_triple: tp.clone() })
}

/// `Delta_phi(psi)` for `psi <= phi`.
pub fn rn_derivative(phi: &MultilinearMap, psi: &MultilinearMap, opts: DilateOptions) -> Result<RnCertificate> {
    if !phi.same_shape(psi) {
        return Err(Error::Shape("maps differ in arity, algebra, domain or alpha_of".into()));
    }
    let dom = domination(phi, psi, opts.tol)?;
    if !dom.holds {
        return Err(Error::NotDominated(dom.reason()));
    }
    rn_with_triple(&dilate(phi, opts)?, psi, opts)
}

/// `phi_T = V^* T pi(.) V` for `T` in the commutant.
pub fn map_from_operator(triple: &StinespringTriple, t: &CMat, tol: f64) -> Result<MultilinearMap> {
    let r = triple.rank();
    if t.nrows() != r || t.ncols() != r {
        return Err(Error::Shape(format!("operator must be {r}x{r}")));
    }
    let residual = commutant_residual(triple, t);
    if !(residual <= tol * (1.0 + max_abs(t))) {
        return Err(Error::NotInCommutant { residual });
    }
    triple.induced_map(Some(t))
}

/// Frobenius-orthonormal basis of the commutant of the dilation, restricted
/// to operators that preserve its flag.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    pub elements: Vec<CMat>,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn combine(&self, coeffs: &[linalg::C64]) -> CMat {
        let r = self.elements.first().map_or(0, |e| e.nrows());
        self.elements.iter().zip(coeffs).fold(linalg::zeros(r, r), |acc, (e, &c)| acc + e * c)
    }
}

/// Operators are block-diagonal over the flag pieces, and each `pi_p(e_i)` is
/// too, so the linear system `X Y = Y X` splits into one system per piece.
pub fn commutant_basis(triple: &StinespringTriple, tol: f64) -> CommutantBasis {
    let r = triple.rank();
    let d = triple.domain().vec_dim();
    let pieces = triple.space().pieces();
    let per_piece = par::map_collect(pieces.len(), |s| {
        let range = pieces[s].clone();
        let kappa = range.len();
        if kappa == 0 {
            return Vec::new();
        }
        let id = linalg::identity(kappa);
        let blocks: Vec<CMat> = (1..=triple.m())
            .flat_map(|p| (0..d).map(move |i| (p, i)))
            .map(|(p, i)| {
                let y = triple.rep_basis(p, i).view((range.start, range.start), (kappa, kappa)).into_owned();
                linalg::kron(&y.transpose(), &id) - linalg::kron(&id, &y)
            })
            .collect();
        let mut stacked = linalg::zeros(blocks.len() * kappa * kappa, kappa * kappa);
        for (b, a) in blocks.iter().enumerate() {
            stacked.view_mut((b * kappa * kappa, 0), (kappa * kappa, kappa * kappa)).copy_from(a);
        }
        let null = linalg::null_space(&stacked, tol.max(1e-8));
        null.column_iter()
            .map(|col| {
                let mut x = linalg::zeros(r, r);
                for b in 0..kappa {
                    for a in 0..kappa {
                        x[(range.start + a, range.start + b)] = col[b * kappa + a];
                    }
                }
                x
            })
            .collect()
    });
    CommutantBasis { elements: per_piece.into_iter().flatten().collect() }
}

/// Random element of the commutant with spectrum in `[0, 1]`.
pub fn random_commutant_contraction<R: Rng + ?Sized>(basis: &CommutantBasis, rng: &mut R) -> CMat {
    let coeffs = linalg::random_complex(rng, basis.dim(), 1);
    let x = basis.combine(coeffs.as_slice());
    let h = linalg::hermitian_part(&x);
    let nrm = spectral_norm(&h);
    let h = if nrm > 0.0 { h.scale(1.0 / nrm) } else { h };
    let r = h.nrows();
    let shifted = linalg::identity(r).scale(0.5) + h.scale(0.6);
    linalg::clip_spectrum(&shifted, 0.0, 1.0)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct OrderIntervalStats {
    /// Worst `|phi_{l T1 + (1-l) T2} - (l phi_T1 + (1-l) phi_T2)|`.
    pub affine: f64,
    /// Smallest relative Gram eigenvalue of `phi_T2 - phi_T1`.
    pub monotone_min_relative: f64,
    /// Smallest `|phi_T1 - phi_T2|_max / bound` over pairs with `|T1 - T2| >= delta`.
    pub injectivity_ratio: f64,
    pub injectivity_pairs: usize,
    /// Worst `|rn(phi, phi_T1) - T1|`.
    pub roundtrip: f64,
    pub commutant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderIntervalReport {
    pub report: MapCheckReport,
    pub stats: OrderIntervalStats,
}

pub const AFFINE_TOL: f64 = 1e-10;
pub const INJECTIVITY_DELTA: f64 = 1e-6;
pub const ROUNDTRIP_TOL: f64 = 1e-8;

struct PairOutcome {
    affine: f64,
    monotone: f64,
    injectivity: Option<f64>,
    roundtrip: f64,
    commutant: f64,
}

/// Sampled check that `T -> phi_T` is an affine order isomorphism from
/// `[0, I]` in the commutant onto `[0, phi]`.
pub fn order_interval_check(phi: &MultilinearMap, samples: usize, seed: u64, tol: f64) -> Result<OrderIntervalReport> {
    let opts = DilateOptions { tol, ..Default::default() };
    let triple = dilate(phi, opts)?;
    let basis = commutant_basis(&triple, tol);
    let x = triple.spanning_vectors();
    let s_min = linalg::singular_values(&x).last().copied().unwrap_or(0.0);
    let tensor_dim = x.ncols().max(1) as f64;
    let outcomes = par::map_collect(samples, |j| -> Result<PairOutcome> {
        let mut rng = stream(seed, &[j as u64]);
        let t2 = random_commutant_contraction(&basis, &mut rng);
        let b = random_commutant_contraction(&basis, &mut rng);
        let root = linalg::sqrt_psd(&t2);
        let t1 = linalg::hermitian_part(&(&root * b * &root));
        let commutant = nan_max(commutant_residual(&triple, &t1), commutant_residual(&triple, &t2));
        let phi1 = map_from_operator(&triple, &t1, tol)?;
        let phi2 = map_from_operator(&triple, &t2, tol)?;
        let lam: f64 = rng.random_range(0.05..0.95);
        let mix = map_from_operator(&triple, &(t1.scale(lam) + t2.scale(1.0 - lam)), tol)?;
        let affine = mix.max_abs_diff(&phi1.scale(lam).add(&phi2.scale(1.0 - lam))?)?;
        let dom = domination(&phi2, &phi1, tol)?;
        let monotone = if dom.holds { dom.gram_min_relative } else { dom.gram_min_relative.min(-1.0) };
        let gap = spectral_norm(&(&t1 - &t2));
        let injectivity = (gap >= INJECTIVITY_DELTA).then(|| {
            let bound = s_min * s_min * gap / tensor_dim;
            phi1.max_abs_diff(&phi2).expect("same shape") / (0.5 * bound)
        });
        let rn = rn_with_triple(&triple, &phi1, opts)?;
        let roundtrip = max_abs(&(&rn.delta - &t1));
        Ok(PairOutcome { affine, monotone, injectivity, roundtrip, commutant })
    });
    let mut stats = OrderIntervalStats { monotone_min_relative: f64::INFINITY, injectivity_ratio: f64::INFINITY, ..Default::default() };
    let mut failure = None;
    for (j, o) in outcomes.into_iter().enumerate() {
        let o = match o {
            Ok(o) => o,
            Err(e) => {
                failure.get_or_insert((j, format!("error: {e}")));
                continue;
            }
        };
        stats.affine = nan_max(stats.affine, o.affine);
        stats.monotone_min_relative = stats.monotone_min_relative.min(o.monotone);
        stats.roundtrip = nan_max(stats.roundtrip, o.roundtrip);
        stats.commutant = nan_max(stats.commutant, o.commutant);
        if let Some(ratio) = o.injectivity {
            stats.injectivity_pairs += 1;
            stats.injectivity_ratio = stats.injectivity_ratio.min(ratio);
        }
        let problem = if !(o.affine <= AFFINE_TOL) {
            Some("affine")
        } else if !(o.monotone >= -tol) {
            Some("monotone")
        } else if o.injectivity.is_some_and(|r| !(r >= 1.0)) {
            Some("injective")
        } else if !(o.roundtrip <= ROUNDTRIP_TOL) {
            Some("roundtrip")
        } else if !(o.commutant <= tol) {
            Some("commutant")
        } else {
            None
        };
        if let Some(p) = problem {
            failure.get_or_insert((j, p.to_string()));
        }
    }
    let worst = [stats.affine, stats.roundtrip, stats.commutant, (-stats.monotone_min_relative).max(0.0)]
        .into_iter()
        .fold(0.0, nan_max);
    let report = MapCheckReport {
        property: "order-interval".into(),
        verdict: if failure.is_some() { Verdict::Fail } else { Verdict::InconclusivePass },
        worst_residual: worst,
        witness: failure.map(|(j, what)| json!({ "sample": j, "failed": what })),
        sampling: Some(Sampling { n_max: 0, trials: samples, seed }),
    };
    Ok(OrderIntervalReport { report, stats })
}
