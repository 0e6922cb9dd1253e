//! Coarse real grid over product vectors as an independent positivity oracle.

mod common;

use choi_witness::choi::{choi_matrix, MapParams};
use choi_witness::linalg::{kron3, quad_form, CVec, HermMat, C64};
use choi_witness::oracle::{
    min_product_form, positivity_cross_check, witness_expectation, DensityMatrix, SearchConfig,
};
use common::{na_quad, reference_choi};
use std::f64::consts::PI;

/// Real unit vectors on a polar grid of the upper hemisphere.
fn sphere_grid(n: usize) -> Vec<[f64; 3]> {
    let mut pts = Vec::new();
    for i in 0..=n {
        let theta = PI / 2.0 * i as f64 / n as f64;
        for j in 0..(4 * n) {
            let phi = 2.0 * PI * j as f64 / (4 * n) as f64;
            pts.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    pts
}

fn grid_minimum(w: &HermMat, n: usize) -> (f64, [f64; 3], [f64; 3]) {
    let grid = sphere_grid(n);
    let mut best = (f64::INFINITY, [0.0; 3], [0.0; 3]);
    for xi in &grid {
        for eta in &grid {
            let v = kron3(&CVec::from_real(xi), &CVec::from_real(eta)).unwrap();
            let q = na_quad(w, &v);
            if q < best.0 {
                best = (q, *xi, *eta);
            }
        }
    }
    best
}

/// Violating product vector of `Phi[0.5, 0.1, 0.1]` found by the grid below:
/// `xi = eta = (1, 1, 1) / sqrt 3`, form value `(3 * 0.7 - 6) / 9`.
const VIOLATION_VALUE: f64 = (3.0 * 0.7 - 6.0) / 9.0;

#[test]
fn grid_finds_violation_of_non_positive_map() {
    let p = MapParams::new(0.5, 0.1, 0.1).unwrap();
    let w = HermMat::new(reference_choi(&p)).unwrap();
    let (value, xi, eta) = grid_minimum(&w, 12);
    assert!(value < -1e-4);
    assert!((value - VIOLATION_VALUE).abs() < 1e-2, "grid min {value} at {xi:?} {eta:?}");

    let u = CVec::from_real(&[1.0, 1.0, 1.0]).normalized();
    let witness = kron3(&u, &u).unwrap();
    let lib = quad_form(choi_matrix(&p).matrix(), &witness).unwrap();
    assert!((lib - VIOLATION_VALUE).abs() < 1e-14);
}

#[test]
fn search_beats_grid() {
    for [a, b, c] in [[0.5, 0.1, 0.1], [1.0, 0.0, 1.0], [0.2, 1.6, 0.4], [2.0, 0.0, 0.0], [0.8, 0.3, 0.2]] {
        let p = MapParams::new(a, b, c).unwrap();
        let (grid, _, _) = grid_minimum(&HermMat::new(reference_choi(&p)).unwrap(), 6);
        let (found, _) = min_product_form(choi_matrix(&p).matrix(), &SearchConfig::default()).unwrap();
        assert!(found <= grid + 1e-12, "{p}: search {found} grid {grid}");
    }
}

#[test]
fn cross_check_examples() {
    let cfg = SearchConfig::default();
    let r = positivity_cross_check(&MapParams::new(0.5, 0.1, 0.1).unwrap(), &cfg).unwrap();
    assert!(!r.verdict_closed && r.agree && r.min_found <= -1e-4);
    assert!(r.min_found <= VIOLATION_VALUE + 1e-12);

    let r = positivity_cross_check(&MapParams::new(2.0, 0.0, 0.0).unwrap(), &cfg).unwrap();
    assert!(r.verdict_closed && r.agree && r.min_found >= -1e-7);

    let r = positivity_cross_check(&MapParams::new(1.0, 1.0, 0.0).unwrap(), &cfg).unwrap();
    assert!(r.verdict_closed && r.agree && r.min_found.abs() <= 1e-7);
}

#[test]
fn maximally_entangled_expectation() {
    let psi = CVec::new((0..9).map(|r| C64::new(if r % 4 == 0 { 1.0 } else { 0.0 }, 0.0)).collect());
    let rho = DensityMatrix::pure(&psi).unwrap();
    for [a, b, c] in [[1.0, 0.0, 1.0], [2.5, 0.3, 0.7], [0.0, 2.0, 0.5]] {
        let p = MapParams::new(a, b, c).unwrap();
        // tr(W rho) by direct arithmetic on the reference matrix.
        let w = reference_choi(&p);
        let direct: C64 = (0..9)
            .flat_map(|r| (0..9).map(move |s| (r, s)))
            .filter(|(r, s)| r % 4 == 0 && s % 4 == 0)
            .map(|(r, s)| w[(r, s)] / 3.0)
            .sum();
        let got = witness_expectation(choi_matrix(&p).matrix(), &rho).unwrap();
        assert!((got - direct.re).abs() < 1e-14);
        assert!((got - (a - 2.0)).abs() < 1e-14);
    }
}
