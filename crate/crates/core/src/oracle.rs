//! Numerical ground truth: minimization of the witness form over product
//! vectors, witness expectations, the PPT test and a best-effort search for
//! PPT states a witness detects.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choi::{region_profile, Provenance, WitnessMatrix};
use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::linalg::{hermitian_eigs, partial_transpose, quad_form, CMat, CVec, HermMat, C64};
use crate::spanning::ProductVector;

/// Multistart search settings. A fixed seed makes every search deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop a descent once one full sweep lowers the value by at most
    /// `conv_tol * |value|`.
    pub conv_tol: f64,
    /// Absolute zero threshold; `None` means `1e-8 * ||W||`.
    pub zero_tol: Option<f64>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 50, max_iters: 200, conv_tol: 1e-12, zero_tol: None, seed: 0 }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("restarts and max_iters must be positive".into()));
        }
        if self.conv_tol.is_nan() || self.conv_tol <= 0.0 {
            return Err(Error::InvalidArgument("conv_tol must be positive".into()));
        }
        if let Some(z) = self.zero_tol {
            if z.is_nan() || z <= 0.0 {
                return Err(Error::InvalidArgument("zero_tol must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn zero_tol_for(&self, w: &HermMat) -> f64 {
        self.zero_tol.unwrap_or(1e-8 * w.norm())
    }

    /// Independent stream for one restart.
    pub fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVec {
    let entries = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    CVec::new(entries).normalized()
}

/// `B(xi)_{jl} = sum_{i,k} conj(xi_i) xi_k W_{(i,j),(k,l)}`, so that
/// `<xi (x) eta|W|xi (x) eta> = <eta|B(xi)|eta>`.
pub fn second_factor_operator(w: &HermMat, xi: &CVec) -> HermMat {
    let m = CMat::from_fn(3, |j, l| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for k in 0..3 {
                acc += xi[i].conj() * xi[k] * w[(3 * i + j, 3 * k + l)];
            }
        }
        acc
    });
    m.hermitian_part()
}

/// `A(eta)_{ik} = sum_{j,l} conj(eta_j) eta_l W_{(i,j),(k,l)}`.
pub fn first_factor_operator(w: &HermMat, eta: &CVec) -> HermMat {
    let m = CMat::from_fn(3, |i, k| {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..3 {
            for l in 0..3 {
                acc += eta[j].conj() * eta[l] * w[(3 * i + j, 3 * k + l)];
            }
        }
        acc
    });
    m.hermitian_part()
}

/// One alternating descent from a given start.
#[derive(Clone, Debug)]
pub struct Descent {
    /// Form value at the start and after every half-step.
    pub values: Vec<f64>,
    pub xi: CVec,
    pub eta: CVec,
    /// The stopping rule fired before `max_iters` ran out.
    pub converged: bool,
}

impl Descent {
    pub fn value(&self) -> f64 {
        *self.values.last().expect("descent records its start")
    }
}

/// Convergence also needs `|B eta - <eta|B|eta> eta| <= EIGVEC_RESIDUAL * ||W||`.
pub const EIGVEC_RESIDUAL: f64 = 1e-10;

/// `|H v - <v|H|v> v|` for a unit `v`.
pub fn eigen_residual(h: &HermMat, v: &CVec) -> f64 {
    let hv = h.as_cmat().mul_vec(v).expect("matching dimensions");
    let rayleigh = v.inner(&hv);
    hv.entries().iter().zip(v.entries()).map(|(x, y)| (x - y * rayleigh).norm_sqr()).sum::<f64>().sqrt()
}

/// Alternately replace `eta` and `xi` by minimal eigenvectors of the reduced
/// 3x3 operators. The value never increases.
pub fn alternating_descent(w: &HermMat, xi: CVec, eta: CVec, max_iters: usize, conv_tol: f64) -> Descent {
    let mut xi = xi.normalized();
    let mut eta = eta.normalized();
    let start = quad_form(w, ProductVector::new(xi.clone(), eta.clone()).tensor()).expect("9x9 witness");
    let mut values = vec![start];
    let mut prev = start;
    let residual_tol = EIGVEC_RESIDUAL * w.norm().max(1.0);
    let mut converged = false;
    for _ in 0..max_iters {
        let e = hermitian_eigs(&second_factor_operator(w, &xi));
        eta = e.vector(0);
        values.push(e.values[0]);
        let e = hermitian_eigs(&first_factor_operator(w, &eta));
        xi = e.vector(0);
        let cur = e.values[0];
        values.push(cur);
        // Values settle long before the vectors do: a residual r moves the
        // value only by about r^2.
        if prev - cur <= conv_tol * prev.abs() && eigen_residual(&second_factor_operator(w, &xi), &eta) <= residual_tol
        {
            converged = true;
            break;
        }
        prev = cur;
    }
    Descent { values, xi, eta, converged }
}

#[derive(Clone, Debug)]
pub struct ProductMinimum {
    pub value: f64,
    pub argmin: ProductVector,
    pub restart: usize,
    pub converged: bool,
}

fn descend(w: &HermMat, xi: CVec, eta: CVec, restart: usize, cfg: &SearchConfig) -> ProductMinimum {
    let run = alternating_descent(w, xi, eta, cfg.max_iters, cfg.conv_tol);
    // Re-evaluate at the returned pair so value and argmin agree exactly.
    let argmin = ProductVector::new(run.xi, run.eta);
    let value = quad_form(w, argmin.tensor()).expect("9x9 witness");
    ProductMinimum { value, argmin, restart, converged: run.converged }
}

fn check_search(w: &HermMat, cfg: &SearchConfig) -> Result<()> {
    cfg.validate()?;
    if w.dim() != 9 {
        return Err(Error::DimensionMismatch { expected: 9, found: w.dim() });
    }
    Ok(())
}

/// Result of every random restart, in restart order.
pub fn product_form_minima(w: &HermMat, cfg: &SearchConfig) -> Result<Vec<ProductMinimum>> {
    check_search(w, cfg)?;
    Ok((0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = cfg.rng(restart);
            let xi = random_unit_vector(&mut rng, 3);
            let eta = random_unit_vector(&mut rng, 3);
            descend(w, xi, eta, restart, cfg)
        })
        .collect())
}

/// Descents from the nine basis product vectors `e_i (x) e_j`, indexed
/// `3i + j`. These reach isolated zeros that random starts rarely find.
pub fn basis_start_minima(w: &HermMat, cfg: &SearchConfig) -> Result<Vec<ProductMinimum>> {
    check_search(w, cfg)?;
    Ok((0..9)
        .into_par_iter()
        .map(|idx| descend(w, CVec::basis(3, idx / 3), CVec::basis(3, idx % 3), idx, cfg))
        .collect())
}

/// Smallest form value found over all restarts (earliest restart on ties).
pub fn min_product_form(w: &HermMat, cfg: &SearchConfig) -> Result<(f64, ProductVector)> {
    let best = product_form_minima(w, cfg)?
        .into_iter()
        .min_by(|x, y| x.value.total_cmp(&y.value).then(x.restart.cmp(&y.restart)))
        .expect("at least one restart");
    Ok((best.value, best.argmin))
}

/// Thresholds used when comparing the closed-form positivity verdict with the
/// oracle minimum.
pub const POSITIVE_FLOOR: f64 = -1e-7;
pub const VIOLATION_CEILING: f64 = -1e-4;

#[derive(Clone, Debug)]
pub struct PositivityReport {
    pub verdict_closed: bool,
    pub min_found: f64,
    pub argmin: ProductVector,
    pub agree: bool,
}

/// Closed-form positivity against the product-vector minimum: positive maps
/// must give a minimum of at least [`POSITIVE_FLOOR`], others at most
/// [`VIOLATION_CEILING`]. Meaningful away from the boundary of the region.
pub fn positivity_cross_check(p: &crate::choi::MapParams, cfg: &SearchConfig) -> Result<PositivityReport> {
    let verdict_closed = region_profile(p).positive;
    let w = crate::choi::choi_matrix(p);
    let (min_found, argmin) = min_product_form(w.matrix(), cfg)?;
    let agree = if verdict_closed { min_found >= POSITIVE_FLOOR } else { min_found <= VIOLATION_CEILING };
    Ok(PositivityReport { verdict_closed, min_found, argmin, agree })
}

/// Normalized 9x9 state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermMat);

pub const STATE_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Checks trace one and positivity within `tol`.
    pub fn new_with_tol(m: HermMat, tol: f64) -> Result<Self> {
        if m.dim() != 9 {
            return Err(Error::DimensionMismatch { expected: 9, found: m.dim() });
        }
        let trace = m.trace();
        if (trace - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        let min = m.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidState(format!("not positive semidefinite (min eigenvalue {min:e})")));
        }
        Ok(DensityMatrix(m))
    }

    pub fn new(m: HermMat) -> Result<Self> {
        Self::new_with_tol(m, STATE_TOL)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(HermMat::from_real_diagonal(&[1.0 / 9.0; 9]))
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &CVec) -> Result<Self> {
        if v.dim() != 9 {
            return Err(Error::DimensionMismatch { expected: 9, found: v.dim() });
        }
        Ok(DensityMatrix(v.normalized().projector()))
    }

    pub fn matrix(&self) -> &HermMat {
        &self.0
    }
}

/// `tr(W rho)`.
pub fn witness_expectation(w: &HermMat, rho: &DensityMatrix) -> Result<f64> {
    let r = rho.matrix();
    if w.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: r.dim() });
    }
    let n = w.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += w[(i, j)] * r[(j, i)];
        }
    }
    debug_assert!(acc.im.abs() <= 1e-10 * w.norm().max(1.0));
    Ok(acc.re)
}

/// Whether `rho^Gamma` is positive semidefinite within `tol`, with its
/// minimal eigenvalue as margin.
pub fn is_ppt(rho: &DensityMatrix, tol: f64) -> (bool, f64) {
    let margin = partial_transpose(rho.matrix()).expect("density matrices are 9x9").min_eigenvalue();
    (margin >= -tol, margin)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DetectionStatus {
    Found,
    NotFound,
}

#[derive(Clone, Debug)]
pub struct DetectionReport {
    pub state: DensityMatrix,
    pub witness_value: f64,
    pub ppt_margin: f64,
    pub status: DetectionStatus,
    /// Gradient steps taken over all restarts.
    pub iterations: usize,
    pub budget: usize,
    pub note: Option<String>,
    pub seed: u64,
}

impl DetectionReport {
    /// Re-check the invariants of a FOUND report from its state alone.
    pub fn verify(&self, w: &HermMat) -> Result<()> {
        let state = DensityMatrix::new(self.state.matrix().clone())?;
        let value = witness_expectation(w, &state)?;
        let (_, margin) = is_ppt(&state, STATE_TOL);
        if self.status == DetectionStatus::Found && (value >= 0.0 || margin < -STATE_TOL) {
            return Err(Error::InvalidState(format!(
                "report claims detection but value {value:e}, PPT margin {margin:e}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> DetectionJson {
        DetectionJson {
            state: MatrixJson::from(self.state.matrix().as_cmat()),
            witness_value: self.witness_value,
            ppt_margin: self.ppt_margin,
            status: self.status,
            iterations: self.iterations,
            budget: self.budget,
            note: self.note.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionJson {
    pub state: MatrixJson,
    pub witness_value: f64,
    pub ppt_margin: f64,
    pub status: DetectionStatus,
    pub iterations: usize,
    pub budget: usize,
    pub note: Option<String>,
    pub seed: u64,
}

/// Euclidean projection of a Hermitian matrix onto `{rho >= 0, tr rho = 1}`:
/// project the spectrum onto the probability simplex.
pub fn project_to_states(m: &HermMat) -> HermMat {
    let e = hermitian_eigs(m);
    let mut sorted = e.values.clone();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    e.reconstruct_with(|l| (l - shift).max(0.0))
}

/// Projection onto `{rho : rho^Gamma >= 0}` (clip the partial transpose).
pub fn project_to_ppt(m: &HermMat) -> HermMat {
    let g = partial_transpose(m).expect("9x9");
    let clipped = hermitian_eigs(&g).reconstruct_with(|l| l.max(0.0));
    partial_transpose(&clipped).expect("9x9")
}

const INNER_PROJECTIONS: usize = 50;

/// Alternate the two projections, then mix in the maximally mixed state just
/// enough to make the partial transpose positive semidefinite. The result is
/// a state whose partial transpose has min eigenvalue >= 0 up to rounding.
pub fn restore_ppt_state(m: &HermMat) -> DensityMatrix {
    let mut rho = project_to_states(m);
    for _ in 0..INNER_PROJECTIONS {
        let gamma_min = partial_transpose(&rho).expect("9x9").min_eigenvalue();
        if gamma_min >= 0.0 {
            break;
        }
        rho = project_to_states(&project_to_ppt(&rho));
    }
    let gamma_min = partial_transpose(&rho).expect("9x9").min_eigenvalue();
    if gamma_min < 0.0 {
        // (1 - l) rho + l I/9 has partial-transpose spectrum >= (1 - l) gamma_min + l/9.
        let deficit = -gamma_min * 1.000_001;
        let l = 9.0 * deficit / (1.0 + 9.0 * deficit);
        let mixed = CMat::from_fn(9, |i, j| {
            let base = rho[(i, j)] * (1.0 - l);
            if i == j {
                base + l / 9.0
            } else {
                base
            }
        });
        rho = mixed.hermitian_part();
    }
    DensityMatrix(rho)
}

fn random_full_rank_state(rng: &mut ChaCha8Rng) -> HermMat {
    let g = CMat::from_fn(9, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let m = g.matmul(&g.adjoint()).expect("square");
    let tr = m.trace().re;
    m.scale(C64::new(1.0 / tr, 0.0)).hermitian_part()
}

/// Projected-gradient search for a PPT state on which the witness is
/// negative. `cfg.restarts` starts, `cfg.max_iters` gradient steps each.
///
/// Decomposable witnesses cannot detect PPT states, so parametric witnesses
/// in that region return `NotFound` immediately. `NotFound` otherwise only
/// means the budget ran out.
pub fn pptes_search(w: &WitnessMatrix, cfg: &SearchConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let budget = cfg.restarts * cfg.max_iters;
    let wm = w.matrix();
    if let Provenance::Params(p) = w.provenance() {
        let region = region_profile(&p);
        let note = if region.completely_copositive {
            Some("completely copositive: cannot detect PPT states")
        } else if region.decomposable {
            Some("decomposable: detection impossible")
        } else {
            None
        };
        if let Some(note) = note {
            let state = DensityMatrix::maximally_mixed();
            let witness_value = witness_expectation(wm, &state)?;
            let (_, ppt_margin) = is_ppt(&state, STATE_TOL);
            return Ok(DetectionReport {
                state,
                witness_value,
                ppt_margin,
                status: DetectionStatus::NotFound,
                iterations: 0,
                budget,
                note: Some(note.to_string()),
                seed: cfg.seed,
            });
        }
    }

    let zero_tol = cfg.zero_tol_for(wm);
    let base_step = 0.1 / wm.norm().max(f64::MIN_POSITIVE);
    let runs: Vec<(DensityMatrix, f64, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = cfg.rng(restart);
            let mut rho = restore_ppt_state(&random_full_rank_state(&mut rng));
            let mut value = witness_expectation(wm, &rho).expect("9x9");
            let mut step = base_step;
            let mut iterations = 0;
            while iterations < cfg.max_iters && value >= -zero_tol {
                iterations += 1;
                let moved =
                    rho.matrix().as_cmat().sub(&wm.as_cmat().scale(C64::new(step, 0.0))).expect("9x9").hermitian_part();
                let candidate = restore_ppt_state(&moved);
                let cand_value = witness_expectation(wm, &candidate).expect("9x9");
                if cand_value < value {
                    rho = candidate;
                    value = cand_value;
                } else {
                    step *= 0.5;
                    if step < base_step * 1e-12 {
                        step = base_step;
                    }
                }
            }
            (rho, value, iterations)
        })
        .collect();

    let iterations = runs.iter().map(|r| r.2).sum();
    let (state, witness_value, _) = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, x), (j, y)| x.1.total_cmp(&y.1).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    let (_, ppt_margin) = is_ppt(&state, STATE_TOL);
    let found = witness_value < -zero_tol && ppt_margin >= -STATE_TOL;
    let report = DetectionReport {
        state,
        witness_value,
        ppt_margin,
        status: if found { DetectionStatus::Found } else { DetectionStatus::NotFound },
        iterations,
        budget,
        note: None,
        seed: cfg.seed,
    };
    report.verify(wm)?;
    Ok(report)
}
