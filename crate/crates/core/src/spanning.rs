//! Product vectors annihilated by a witness and rank certificates for the
//! spanning and co-spanning properties.
//!
//! On the surface `bc = (1 - a)^2` the two-phase family
//!
//! ```text
//! xi^0  = e^{i theta} b^{1/4} |1> + e^{i sigma} c^{1/4} |2>
//! eta^0 = e^{-i theta} (bc)^{1/4} |1> + e^{-i sigma} b^{1/2} |2>
//! ```
//!
//! and its cyclic shifts `xi^k, eta^k` (basis indices advanced by `k`) are
//! zeros of the form. Elsewhere zeros are found by the multistart search in
//! [`crate::oracle`].

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::choi::{choi_matrix, MapParams, WitnessMatrix};
use crate::error::{Error, Result};
use crate::json::{pairs_to_vec, vec_pairs};
use crate::linalg::{
    kron3, numerical_rank, quad_form, stacked_singular_values, CMat, CVec, HermMat, C64, DEFAULT_RANK_TOL,
};
use crate::oracle::{basis_start_minima, product_form_minima, SearchConfig};

/// `xi (x) eta` with the tensor cached.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductVector {
    xi: CVec,
    eta: CVec,
    tensor: CVec,
}

impl ProductVector {
    pub fn try_new(xi: CVec, eta: CVec) -> Result<Self> {
        let tensor = kron3(&xi, &eta)?;
        if xi.norm() == 0.0 || eta.norm() == 0.0 {
            return Err(Error::InvalidArgument("product vector factors must be nonzero".into()));
        }
        Ok(ProductVector { xi, eta, tensor })
    }

    /// Panics unless both factors are nonzero vectors of length 3.
    pub fn new(xi: CVec, eta: CVec) -> Self {
        Self::try_new(xi, eta).expect("valid product vector factors")
    }

    pub fn xi(&self) -> &CVec {
        &self.xi
    }

    pub fn eta(&self) -> &CVec {
        &self.eta
    }

    pub fn tensor(&self) -> &CVec {
        &self.tensor
    }

    /// Both factors scaled to unit norm.
    pub fn normalized(&self) -> Self {
        Self::new(self.xi.normalized(), self.eta.normalized())
    }

    /// `xi (x) conj(eta)`: a zero of `W` becomes a zero of `W^Gamma`.
    pub fn conj_second(&self) -> Self {
        Self::new(self.xi.clone(), self.eta.conj())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePair {
    pub theta: f64,
    pub sigma: f64,
}

impl PhasePair {
    pub fn new(theta: f64, sigma: f64) -> Self {
        PhasePair { theta, sigma }
    }
}

/// The three family members `xi^k (x) eta^k`, `k = 0, 1, 2`, unnormalized.
pub fn family_vectors(p: &MapParams, phase: PhasePair) -> Result<[ProductVector; 3]> {
    let (b, c) = (p.b(), p.c());
    if !(b > 0.0 && c > 0.0) {
        return Err(Error::DegenerateFamily { b, c });
    }
    let e = |x: f64| C64::from_polar(1.0, x);
    let xi_coeffs = [e(phase.theta) * b.powf(0.25), e(phase.sigma) * c.powf(0.25)];
    let eta_coeffs = [e(-phase.theta) * (b * c).powf(0.25), e(-phase.sigma) * b.sqrt()];
    Ok(std::array::from_fn(|k| {
        let first = (1 + k) % 3;
        let second = (2 + k) % 3;
        let mut xi = vec![C64::new(0.0, 0.0); 3];
        let mut eta = vec![C64::new(0.0, 0.0); 3];
        xi[first] = xi_coeffs[0];
        xi[second] = xi_coeffs[1];
        eta[first] = eta_coeffs[0];
        eta[second] = eta_coeffs[1];
        ProductVector::new(CVec::new(xi), CVec::new(eta))
    }))
}

/// `-2(1-a) b c^{1/2} + 2 b^{3/2} c`: the form value of every (unnormalized)
/// family vector, whatever `k` and the phases.
pub fn family_value(p: &MapParams) -> f64 {
    let (a, b, c) = (p.a(), p.b(), p.c());
    -2.0 * (1.0 - a) * b * c.sqrt() + 2.0 * b.powf(1.5) * c
}

/// The phases `sigma in {0, pi/2, pi}` at `theta = 0`.
pub const DETERMINANT_PHASES: [PhasePair; 3] = [
    PhasePair { theta: 0.0, sigma: 0.0 },
    PhasePair { theta: 0.0, sigma: FRAC_PI_2 },
    PhasePair { theta: 0.0, sigma: PI },
];

/// Columns `xi^k (x) eta^k` for `k = 0, 1, 2` and each of the determinant
/// phases, in `(k, sigma)` order.
pub fn determinant_matrix(p: &MapParams) -> Result<CMat> {
    let mut columns = Vec::with_capacity(9);
    let per_phase = DETERMINANT_PHASES.iter().map(|&ph| family_vectors(p, ph)).collect::<Result<Vec<_>>>()?;
    for k in 0..3 {
        for family in &per_phase {
            columns.push(family[k].tensor().clone());
        }
    }
    CMat::from_columns(&columns)
}

/// `|det M|`, expected to equal `128 b^{9/2} c^{9/4}`.
pub fn det_m(p: &MapParams) -> Result<f64> {
    Ok(determinant_matrix(p)?.determinant().norm())
}

pub fn det_m_closed_form(p: &MapParams) -> f64 {
    128.0 * p.b().powf(4.5) * p.c().powf(2.25)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateTarget {
    Spanning,
    CoSpanning,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Certified,
    EvidenceOnly,
}

/// Where a certificate vector came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorOrigin {
    Family { k: usize, theta: f64, sigma: f64 },
    Search { restart: usize },
    BasisStart { i: usize, j: usize },
}

#[derive(Clone, Debug)]
pub struct CertifiedVector {
    /// Unit factors.
    pub vector: ProductVector,
    pub value: f64,
    pub origin: VectorOrigin,
}

#[derive(Clone, Debug)]
pub struct SpanningCertificate {
    /// A linearly independent selection of zero vectors; `rank` of them.
    pub vectors: Vec<CertifiedVector>,
    pub rank: usize,
    pub tol: f64,
    pub zero_tol: f64,
    pub target: CertificateTarget,
    pub verdict: Verdict,
    pub params: Option<MapParams>,
    /// Zero vectors found before selection.
    pub candidates: usize,
    pub cfg: SearchConfig,
}

impl SpanningCertificate {
    /// Independent re-check: residuals within `zero_tol` against `w` (the
    /// matrix whose spanning property is claimed) and the stated rank.
    pub fn recheck(&self, w: &HermMat) -> Result<bool> {
        for v in &self.vectors {
            if quad_form(w, v.vector.tensor())?.abs() > self.zero_tol {
                return Ok(false);
            }
        }
        let tensors: Vec<CVec> = self.vectors.iter().map(|v| v.vector.tensor().clone()).collect();
        let rank = numerical_rank(&tensors, self.tol);
        Ok(rank == self.rank && (self.verdict == Verdict::Certified) == (rank == 9))
    }

    pub fn smallest_relative_singular_value(&self) -> f64 {
        let tensors: Vec<CVec> = self.vectors.iter().map(|v| v.vector.tensor().clone()).collect();
        let sv = stacked_singular_values(&tensors);
        match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            _ => 0.0,
        }
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            target: self.target,
            params: self.params.map(|p| p.as_array()),
            tol: self.tol,
            zero_tol: self.zero_tol,
            vectors: self
                .vectors
                .iter()
                .map(|v| CertificateVectorJson {
                    xi: vec_pairs(v.vector.xi()),
                    eta: vec_pairs(v.vector.eta()),
                    value: v.value,
                    origin: v.origin,
                })
                .collect(),
            rank: self.rank,
            verdict: self.verdict,
            seed: self.cfg.seed,
            restarts: self.cfg.restarts,
            max_iters: self.cfg.max_iters,
            candidates: self.candidates,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateVectorJson {
    pub xi: Vec<[f64; 2]>,
    pub eta: Vec<[f64; 2]>,
    pub value: f64,
    pub origin: VectorOrigin,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateJson {
    pub target: CertificateTarget,
    pub params: Option<[f64; 3]>,
    pub tol: f64,
    pub zero_tol: f64,
    pub vectors: Vec<CertificateVectorJson>,
    pub rank: usize,
    pub verdict: Verdict,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub candidates: usize,
}

impl CertificateJson {
    /// Rebuild the product vectors of a serialized certificate.
    pub fn product_vectors(&self) -> Result<Vec<ProductVector>> {
        self.vectors.iter().map(|v| ProductVector::try_new(pairs_to_vec(&v.xi), pairs_to_vec(&v.eta))).collect()
    }
}

/// Phases used for the closed-form family in certificates: the determinant
/// phases plus a `theta != 0` row.
pub const CERTIFICATE_PHASES: [PhasePair; 6] = [
    PhasePair { theta: 0.0, sigma: 0.0 },
    PhasePair { theta: 0.0, sigma: FRAC_PI_2 },
    PhasePair { theta: 0.0, sigma: PI },
    PhasePair { theta: FRAC_PI_2, sigma: 0.0 },
    PhasePair { theta: FRAC_PI_2, sigma: FRAC_PI_2 },
    PhasePair { theta: FRAC_PI_2, sigma: PI },
];

/// Tolerance on `bc - (1-a)^2` for using the closed-form family.
const SURFACE_TOL: f64 = 1e-12;

fn family_applies(p: &MapParams) -> bool {
    let (a, b, c) = (p.a(), p.b(), p.c());
    b > 0.0 && c > 0.0 && a <= 1.0 && (b * c - (1.0 - a).powi(2)).abs() <= SURFACE_TOL * (1.0 + b * c)
}

/// Certificate that the zero product vectors of `w` span `C^3 (x) C^3`.
///
/// Candidates come from the closed-form family (parametric `W[a,b,c]` on the
/// surface `bc = (1-a)^2`) and from converged descents: random restarts
/// first, then the nine basis starts. A product vector
/// with a form value below `-zero_tol` is an error: the map is not positive.
/// Non-spanning is never claimed; a rank below 9 is only evidence.
pub fn spanning_certificate(w: &WitnessMatrix, cfg: &SearchConfig) -> Result<SpanningCertificate> {
    certificate(w, cfg, CertificateTarget::Spanning)
}

/// Spanning certificate of `W^Gamma`.
pub fn co_spanning_certificate(w: &WitnessMatrix, cfg: &SearchConfig) -> Result<SpanningCertificate> {
    let mut cert = certificate(&w.partial_transpose(), cfg, CertificateTarget::CoSpanning)?;
    if cert.params.is_none() {
        cert.params = w.params();
    }
    Ok(cert)
}

fn certificate(w: &WitnessMatrix, cfg: &SearchConfig, target: CertificateTarget) -> Result<SpanningCertificate> {
    cfg.validate()?;
    let m = w.matrix();
    let zero_tol = cfg.zero_tol_for(m);
    let tol = DEFAULT_RANK_TOL;
    let mut candidates: Vec<CertifiedVector> = Vec::new();

    if let Some(p) = w.params().filter(family_applies) {
        for phase in CERTIFICATE_PHASES {
            for (k, v) in family_vectors(&p, phase)?.into_iter().enumerate() {
                let v = v.normalized();
                let value = quad_form(m, v.tensor())?;
                if value.abs() <= zero_tol {
                    candidates.push(CertifiedVector {
                        vector: v,
                        value,
                        origin: VectorOrigin::Family { k, theta: phase.theta, sigma: phase.sigma },
                    });
                }
            }
        }
    }

    let searched = product_form_minima(m, cfg)?
        .into_iter()
        .map(|f| (VectorOrigin::Search { restart: f.restart }, f))
        .chain(basis_start_minima(m, cfg)?.into_iter().map(|f| {
            let origin = VectorOrigin::BasisStart { i: f.restart / 3, j: f.restart % 3 };
            (origin, f)
        }));
    for (origin, found) in searched {
        if found.value < -zero_tol {
            return Err(Error::NotPositive {
                value: found.value,
                xi: found.argmin.xi().entries().to_vec(),
                eta: found.argmin.eta().entries().to_vec(),
            });
        }
        // A descent cut off by max_iters may sit well off the zero set even
        // with a tiny value; its stray components would inflate the rank.
        if found.converged && found.value <= zero_tol {
            candidates.push(CertifiedVector { vector: found.argmin, value: found.value, origin });
        }
    }

    let candidate_count = candidates.len();
    let mut selected: Vec<CertifiedVector> = Vec::new();
    let mut tensors: Vec<CVec> = Vec::new();
    for cand in candidates {
        if selected.len() == 9 {
            break;
        }
        tensors.push(cand.vector.tensor().clone());
        if numerical_rank(&tensors, tol) == tensors.len() {
            selected.push(cand);
        } else {
            tensors.pop();
        }
    }
    let rank = numerical_rank(&tensors, tol);
    Ok(SpanningCertificate {
        vectors: selected,
        rank,
        tol,
        zero_tol,
        target,
        verdict: if rank == 9 { Verdict::Certified } else { Verdict::EvidenceOnly },
        params: w.params(),
        candidates: candidate_count,
        cfg: *cfg,
    })
}

/// Convenience: certificate for `W[a,b,c]` or its partial transpose.
pub fn certificate_for_params(p: &MapParams, co: bool, cfg: &SearchConfig) -> Result<SpanningCertificate> {
    let w = choi_matrix(p);
    if co {
        co_spanning_certificate(&w, cfg)
    } else {
        spanning_certificate(&w, cfg)
    }
}
