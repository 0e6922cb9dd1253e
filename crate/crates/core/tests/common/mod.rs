//! Strategies, independent reference computations and invariant checks shared
//! by the property suites and the acceptance runner.
#![allow(dead_code)]

use choi_witness::choi::{
    choi_curve, choi_from_action, choi_matrix, diagonal_map_apply, phi_apply, region_profile, MapAction, MapParams,
};
use choi_witness::faces::{classify, classify_face, property_profile, FaceLabel, DEFAULT_FACE_TOL};
use choi_witness::json::{parse_matrix, recanonicalize, to_canonical_string};
use choi_witness::linalg::{
    hermitian_eigs, kron3, numerical_rank, partial_transpose, quad_form, CMat, CVec, HermMat, C64, DEFAULT_RANK_TOL,
};
use choi_witness::oracle::{
    alternating_descent, first_factor_operator, pptes_search, restore_ppt_state, second_factor_operator,
    witness_expectation, DetectionJson, DetectionStatus, SearchConfig,
};
use choi_witness::spanning::{
    certificate_for_params, co_spanning_certificate, family_value, family_vectors, spanning_certificate,
    CertificateJson, PhasePair, Verdict,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

// ---------------------------------------------------------------- oracles

pub fn to_na(m: &CMat) -> DMatrix<C64> {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

pub fn na_eigenvalues(m: &HermMat) -> Vec<f64> {
    let mut ev: Vec<f64> = to_na(m.as_cmat()).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn na_min_eig(m: &HermMat) -> f64 {
    na_eigenvalues(m)[0]
}

/// Singular values of the matrix whose columns are `vectors`, descending.
pub fn na_singular_values(vectors: &[CVec]) -> Vec<f64> {
    let rows = vectors[0].dim();
    let m = DMatrix::from_fn(rows, vectors.len(), |i, j| vectors[j][i]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `<v|M|v>` computed with nalgebra.
pub fn na_quad(m: &HermMat, v: &CVec) -> f64 {
    let v = DVector::from_iterator(v.dim(), v.entries().iter().copied());
    (v.adjoint() * to_na(m.as_cmat()) * &v)[(0, 0)].re
}

/// Partial transpose on the second factor written out from the index rule.
pub fn reference_partial_transpose(m: &CMat) -> CMat {
    CMat::from_fn(9, |r, s| {
        let (i, j, k, l) = (r / 3, r % 3, s / 3, s % 3);
        m[(3 * i + l, 3 * k + j)]
    })
}

/// Choi matrix written out entry by entry from `Phi(E_ij)`.
pub fn reference_choi(p: &MapParams) -> CMat {
    let (a, b, c) = (p.a(), p.b(), p.c());
    let diag = [[a, b, c], [c, a, b], [b, c, a]];
    CMat::from_fn(9, |r, s| {
        let (i, j, k, l) = (r / 3, r % 3, s / 3, s % 3);
        let v = if i == k && j == l {
            diag[j][i]
        } else if i == j && k == l {
            -1.0
        } else {
            0.0
        };
        C64::new(v, 0.0)
    })
}

// ------------------------------------------------------------- strategies

pub fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

pub fn cvec(dim: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec(complex(), dim).prop_map(CVec::new).prop_filter("nonzero", |v| v.norm() > 0.1)
}

pub fn unit(dim: usize) -> impl Strategy<Value = CVec> {
    cvec(dim).prop_map(|v| v.normalized())
}

pub fn cmat(dim: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |e| CMat::from_entries(dim, e).unwrap())
}

pub fn herm(dim: usize) -> impl Strategy<Value = HermMat> {
    cmat(dim).prop_map(|m| m.hermitian_part())
}

pub fn params(max: f64) -> impl Strategy<Value = MapParams> {
    (0.0..max, 0.0..max, 0.0..max).prop_map(|(a, b, c)| MapParams::new(a, b, c).unwrap())
}

/// Random points, points on the ruled surface, and points snapped onto
/// the planes and lines that bound the body.
pub fn body_points() -> impl Strategy<Value = MapParams> {
    prop_oneof![
        params(3.0),
        surface_point(),
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, b)| MapParams::new(a, b, 0.0).unwrap()),
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, c)| MapParams::new(a, 0.0, c).unwrap()),
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(b, c)| MapParams::new(0.0, b, c).unwrap()),
        (0.0..2.0f64, 0.0..1.0f64).prop_map(|(a, u)| MapParams::new(a, (2.0 - a) * u, (2.0 - a) * (1.0 - u)).unwrap()),
        (0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, b)| MapParams::new(a, b, 1.0 / b.max(0.1)).unwrap()),
        prop::sample::select(vec![
            [2.0, 0.0, 0.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 0.0],
            [3.0, 0.0, 0.0],
            [1.0, 2.0, 0.0],
            [1.5, 0.5, 0.0],
            [0.0, 1.0, 1.0],
        ])
        .prop_map(|[a, b, c]| MapParams::new(a, b, c).unwrap()),
    ]
}

/// `(1-s, st, s/t)` with `a = 1-s in [0, 1)`.
pub fn surface_point() -> impl Strategy<Value = MapParams> {
    (0.0..0.999f64, 0.1..10.0f64).prop_map(|(a, t)| {
        let s = 1.0 - a;
        MapParams::new(a, s * t, s / t).unwrap()
    })
}

/// A random full-rank state `G G^dagger / tr`.
pub fn random_state() -> impl Strategy<Value = HermMat> {
    cmat(9).prop_map(|g| {
        let m = g.matmul(&g.adjoint()).unwrap();
        let tr = m.trace().re;
        m.scale(C64::new(1.0 / tr, 0.0)).hermitian_part()
    })
}

// ------------------------------------------------------------ linalg checks

pub fn eigen_reconstruction(h: &HermMat) -> Check {
    let e = hermitian_eigs(h);
    let rebuilt = e.reconstruct_with(|x| x);
    prop_assert!(rebuilt.as_cmat().max_abs_diff(h.as_cmat()) <= 1e-9 * h.norm());
    prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    for (mine, theirs) in e.values.iter().zip(na_eigenvalues(h)) {
        prop_assert!((mine - theirs).abs() <= 1e-9 * h.norm());
    }
    Ok(())
}

pub fn gamma_conjugation(w: &HermMat, xi: &CVec, eta: &CVec) -> Check {
    let wg = partial_transpose(w).unwrap();
    let lhs = quad_form(&wg, &kron3(xi, eta).unwrap()).unwrap();
    let rhs = quad_form(w, &kron3(xi, &eta.conj()).unwrap()).unwrap();
    prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    Ok(())
}

pub fn gamma_norms(w: &HermMat) -> Check {
    let wg = partial_transpose(w).unwrap();
    prop_assert!((wg.trace() - w.trace()).abs() <= 1e-12 * w.norm().max(1.0));
    prop_assert!((wg.norm() - w.norm()).abs() <= 1e-12 * w.norm().max(1.0));
    prop_assert_eq!(wg.as_cmat(), &reference_partial_transpose(w.as_cmat()));
    Ok(())
}

/// `vectors` plus combinations of them, each rescaled by a phase.
pub fn rank_phase_invariance(base: &[CVec], mix: &[(usize, usize, C64)], phases: &[f64]) -> Check {
    let mut vectors = base.to_vec();
    for &(i, j, z) in mix {
        let (x, y) = (&base[i % base.len()], &base[j % base.len()]);
        vectors.push(CVec::new(x.entries().iter().zip(y.entries()).map(|(u, v)| u + z * v).collect()));
    }
    let phased: Vec<CVec> =
        vectors.iter().zip(phases.iter().cycle()).map(|(v, &ph)| v.scale(C64::from_polar(1.0, ph))).collect();
    prop_assert_eq!(numerical_rank(&vectors, DEFAULT_RANK_TOL), numerical_rank(&phased, DEFAULT_RANK_TOL));
    prop_assert!(numerical_rank(&vectors, DEFAULT_RANK_TOL) <= base.len().min(9));
    Ok(())
}

// -------------------------------------------------------------- choi checks

pub fn choi_entry_identity(p: &MapParams) -> Check {
    let w = choi_matrix(p);
    let from_action = choi_from_action(&MapAction::from_map(|x| phi_apply(p, x).unwrap()).unwrap()).unwrap();
    prop_assert_eq!(w.matrix(), from_action.matrix());
    prop_assert_eq!(w.matrix().as_cmat(), &reference_choi(p));
    Ok(())
}

pub fn spectral_cp(p: &MapParams) -> Check {
    prop_assume!((p.a() - 2.0).abs() > 1e-6);
    let spectral = na_min_eig(choi_matrix(p).matrix()) >= -1e-9;
    prop_assert_eq!(region_profile(p).completely_positive, spectral, "{}", p);
    Ok(())
}

pub fn spectral_ccp(p: &MapParams) -> Check {
    prop_assume!((p.b() * p.c() - 1.0).abs() > 1e-6);
    let spectral = na_min_eig(choi_matrix(p).partial_transpose().matrix()) >= -1e-9;
    prop_assert_eq!(region_profile(p).completely_copositive, spectral, "{}", p);
    Ok(())
}

pub fn nesting(p: &MapParams) -> Check {
    let r = region_profile(p);
    prop_assert!(!(r.completely_positive || r.completely_copositive) || r.decomposable, "{}", p);
    prop_assert!(!r.decomposable || r.positive, "{}", p);
    Ok(())
}

/// `Phi[a,0,0] - Phi[2,0,0] - (a-2) D = 0` for `a > 2`, up to rounding in the
/// diagonal products.
pub fn decomposition_identity(a: f64, x: &CMat) -> Check {
    let big = phi_apply(&MapParams::new(a, 0.0, 0.0).unwrap(), x).unwrap();
    let two = phi_apply(&MapParams::new(2.0, 0.0, 0.0).unwrap(), x).unwrap();
    let d = diagonal_map_apply(x).scale(C64::new(a - 2.0, 0.0));
    let residual = big.sub(&two).unwrap().sub(&d).unwrap();
    let bound = 4.0 * f64::EPSILON * a * x.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                prop_assert_eq!(residual[(i, j)], C64::new(0.0, 0.0));
            } else {
                prop_assert!(residual[(i, j)].norm() <= bound);
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------- faces checks

pub fn table_consistency(p: &MapParams) -> Check {
    let cp = classify(p, DEFAULT_FACE_TOL).unwrap();
    let Some(profile) = cp.profile else {
        prop_assert!(!cp.region.positive);
        return Ok(());
    };
    prop_assert!(profile.is_consistent());
    if profile.bi_optimal {
        prop_assert!(!cp.region.decomposable, "bi-optimal but decomposable at {}", p);
    }
    if profile.co_optimal {
        prop_assert!(!cp.region.completely_copositive, "co-optimal but coCP at {}", p);
    }
    if profile.optimal {
        prop_assert!(!cp.region.completely_positive, "optimal but CP at {}", p);
    }
    Ok(())
}

/// Composing with the transpose swaps the roles of `e_ab`/`e_ac` and `e_t`.
pub fn gamma_duality_table(t: f64) -> Check {
    let et = property_profile(FaceLabel::ET(t)).unwrap();
    for face in [FaceLabel::EAb, FaceLabel::EAc] {
        let pr = property_profile(face).unwrap();
        prop_assert_eq!(pr.co_spanning, et.spanning);
        prop_assert_eq!(pr.spanning, et.co_spanning);
        prop_assert_eq!(pr.co_optimal, et.optimal);
        prop_assert_eq!(pr.optimal, et.co_optimal);
    }
    Ok(())
}

/// Numerically: on `e_ab` / `e_ac` the partial transpose spans, as `W` does on `e_t`.
pub fn gamma_duality_certificate(a: f64, on_ac: bool, seed: u64) -> Check {
    let p = if on_ac { MapParams::new(a, 0.0, 2.0 - a) } else { MapParams::new(a, 2.0 - a, 0.0) }.unwrap();
    let face = classify_face(&p, DEFAULT_FACE_TOL).unwrap();
    prop_assert_eq!(face, if on_ac { FaceLabel::EAc } else { FaceLabel::EAb });
    let cfg = SearchConfig::with_seed(seed);
    let co = certificate_for_params(&p, true, &cfg).unwrap();
    prop_assert_eq!(co.verdict, Verdict::Certified, "{} rank {}", p, co.rank);
    let plain = certificate_for_params(&p, false, &cfg).unwrap();
    prop_assert_eq!(plain.verdict, Verdict::EvidenceOnly, "{}", p);
    Ok(())
}

pub fn curve_round_trip(t: f64) -> Check {
    prop_assume!((t - 1.0).abs() > 1e-3);
    let p = choi_curve(t).unwrap();
    match classify_face(&p, DEFAULT_FACE_TOL).unwrap() {
        FaceLabel::VCurve(t2) => prop_assert!((t2 - t).abs() <= 1e-8, "{t} -> {t2}"),
        other => prop_assert!(false, "choi_curve({t}) classified as {other}"),
    }
    Ok(())
}

// ---------------------------------------------------------- spanning checks

pub fn family_value_identity(p: &MapParams, theta: f64, sigma: f64, k: usize) -> Check {
    let v = &family_vectors(p, PhasePair::new(theta, sigma)).unwrap()[k];
    let w = choi_matrix(p);
    let got = quad_form(w.matrix(), v.tensor()).unwrap();
    let independent = na_quad(&HermMat::new(reference_choi(p)).unwrap(), v.tensor());
    let expected = family_value(p);
    let scale = expected.abs().max(1.0);
    prop_assert!((got - expected).abs() <= 1e-10 * scale, "{} k={k}: {got} vs {expected}", p);
    prop_assert!((independent - expected).abs() <= 1e-10 * scale);
    Ok(())
}

pub fn zero_set_membership(p: &MapParams, theta: f64, sigma: f64) -> Check {
    let w = choi_matrix(p);
    for v in family_vectors(p, PhasePair::new(theta, sigma)).unwrap() {
        let q = quad_form(w.matrix(), v.tensor()).unwrap();
        prop_assert!(q.abs() <= 1e-10, "{}: {q:e}", p);
    }
    Ok(())
}

/// Re-check a certificate from its JSON alone with nalgebra.
pub fn certificate_soundness(p: &MapParams, co: bool, seed: u64) -> Check {
    let cfg = SearchConfig { restarts: 20, seed, ..SearchConfig::default() };
    let cert = certificate_for_params(p, co, &cfg).unwrap();
    let text = to_canonical_string(&cert.to_json()).unwrap();
    let json: CertificateJson = serde_json::from_str(&text).unwrap();
    let vectors = json.product_vectors().unwrap();
    prop_assert_eq!(vectors.len(), json.rank);
    let w = {
        let w = HermMat::new(reference_choi(p)).unwrap();
        if co {
            HermMat::new(reference_partial_transpose(w.as_cmat())).unwrap()
        } else {
            w
        }
    };
    for v in &vectors {
        prop_assert!(na_quad(&w, v.tensor()).abs() <= json.zero_tol);
    }
    if json.verdict == Verdict::Certified {
        prop_assert_eq!(vectors.len(), 9);
        let tensors: Vec<CVec> = vectors.iter().map(|v| v.tensor().clone()).collect();
        let sv = na_singular_values(&tensors);
        prop_assert!(sv[8] > json.tol * sv[0], "sigma_min {} sigma_max {}", sv[8], sv[0]);
    } else {
        prop_assert!(json.rank < 9);
    }
    Ok(())
}

pub fn gamma_consistency(p: &MapParams, seed: u64) -> Check {
    let cfg = SearchConfig { restarts: 10, seed, ..SearchConfig::default() };
    let w = choi_matrix(p);
    let co = co_spanning_certificate(&w, &cfg);
    let direct = spanning_certificate(&w.partial_transpose(), &cfg);
    match (co, direct) {
        (Ok(x), Ok(y)) => {
            prop_assert_eq!(x.verdict, y.verdict);
            prop_assert_eq!(x.rank, y.rank);
        }
        (Err(_), Err(_)) => {}
        (x, y) => prop_assert!(false, "{}: {:?} vs {:?}", p, x.map(|c| c.rank), y.map(|c| c.rank)),
    }
    Ok(())
}

// ------------------------------------------------------------ oracle checks

pub fn descent_monotone(p: &MapParams, xi: CVec, eta: CVec) -> Check {
    let w = choi_matrix(p);
    let run = alternating_descent(w.matrix(), xi, eta, 200, 1e-12);
    for pair in run.values.windows(2) {
        prop_assert!(pair[1] <= pair[0] + 1e-12, "{} -> {}", pair[0], pair[1]);
    }
    Ok(())
}

/// At a converged descent both factors are minimal eigenvectors of their
/// reduced operators.
pub fn eigenvector_optimality(p: &MapParams, xi: CVec, eta: CVec) -> Check {
    let w = choi_matrix(p);
    let run = alternating_descent(w.matrix(), xi, eta, 200, 1e-12);
    prop_assume!(run.converged);
    let residual = |op: &HermMat, v: &CVec| {
        let lambda = na_min_eig(op);
        let av = op.as_cmat().mul_vec(v).unwrap();
        let r: f64 = av.entries().iter().zip(v.entries()).map(|(x, y)| (x - y * lambda).norm_sqr()).sum::<f64>().sqrt();
        r
    };
    let b = second_factor_operator(w.matrix(), &run.xi);
    let a = first_factor_operator(w.matrix(), &run.eta);
    prop_assert!(residual(&b, &run.eta) <= 1e-8, "eta residual {:e}", residual(&b, &run.eta));
    prop_assert!(residual(&a, &run.xi) <= 1e-8, "xi residual {:e}", residual(&a, &run.xi));
    Ok(())
}

/// A FOUND report re-checked from its serialized state.
pub fn found_report_recheck(p: &MapParams, seed: u64) -> Check {
    let w = choi_matrix(p);
    let cfg = SearchConfig { restarts: 2, max_iters: 300, seed, ..SearchConfig::default() };
    let report = pptes_search(&w, &cfg).unwrap();
    let text = to_canonical_string(&report.to_json()).unwrap();
    prop_assert_eq!(&recanonicalize(&text).unwrap(), &text);
    let json: DetectionJson = serde_json::from_str(&text).unwrap();
    if json.status != DetectionStatus::Found {
        return Ok(());
    }
    let rho = parse_matrix(&serde_json::to_string(&json.state).unwrap()).unwrap();
    let rho = HermMat::new(rho).unwrap();
    let rho_g = HermMat::new(reference_partial_transpose(rho.as_cmat())).unwrap();
    let value: f64 = (to_na(&reference_choi(p)) * to_na(rho.as_cmat())).trace().re;
    prop_assert!(value < 0.0);
    prop_assert!((rho.trace() - 1.0).abs() <= 1e-10);
    prop_assert!(na_min_eig(&rho) >= -1e-10);
    prop_assert!(na_min_eig(&rho_g) >= -1e-10);
    Ok(())
}

pub fn ccp_no_detection(b: f64, c_extra: f64, a: f64, state: &HermMat) -> Check {
    let c = (1.0 + c_extra) / b;
    let p = MapParams::new(a, b, c).unwrap();
    let rho = restore_ppt_state(state);
    prop_assert!(na_min_eig(&HermMat::new(reference_partial_transpose(rho.matrix().as_cmat())).unwrap()) >= -1e-10);
    let value = witness_expectation(choi_matrix(&p).matrix(), &rho).unwrap();
    prop_assert!(value >= -1e-9, "{}: {value:e}", p);
    Ok(())
}

// --------------------------------------------------------------- cli checks

pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = choi_witness::cli::run(std::iter::once("choi-witness").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn cli_json_round_trip(p: &MapParams, gamma: bool) -> Check {
    let [a, b, c] = p.as_array().map(|x| format!("{x:e}"));
    let mut choi_args = vec!["choi", &a, &b, &c, "--json"];
    if gamma {
        choi_args.push("--gamma");
    }
    for args in [choi_args, vec!["classify", &a, &b, &c, "--json"]] {
        let (code, out, _) = run_cli(&args);
        prop_assert!(code == 0 || code == 2);
        let line = out.trim_end();
        prop_assert_eq!(recanonicalize(line).unwrap(), line);
    }
    Ok(())
}

pub fn cli_sweep_deterministic(steps: usize, section: bool) -> Check {
    let grid = format!("0:3:{steps}");
    let mut args = vec!["sweep", "--a", &grid, "--b", &grid];
    if section {
        args.extend(["--section-sum", "2"]);
    } else {
        args.extend(["--c", &grid]);
    }
    let (c1, first, _) = run_cli(&args);
    let (c2, second, _) = run_cli(&args);
    prop_assert_eq!(c1, 0);
    prop_assert_eq!(c2, 0);
    prop_assert_eq!(first, second);
    Ok(())
}
