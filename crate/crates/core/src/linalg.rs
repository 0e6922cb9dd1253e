//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension 3 or 9, so the routines
//! favour determinism and accuracy over asymptotics: cyclic Jacobi for the
//! Hermitian eigenproblem, one-sided Jacobi for singular values and LU with
//! partial pivoting for determinants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance on `|m[i][j] - conj(m[j][i])|` for [`HermMat`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative tolerance for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    entries: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        CMat { dim, entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(CMat { dim, entries })
    }

    /// Matrix unit `|i><j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        check_dim(self.dim, rhs.dim)?;
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += aik * rhs.entries[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVec) -> Result<CVec> {
        check_dim(self.dim, v.dim())?;
        let n = self.dim;
        let entries = (0..n).map(|i| (0..n).map(|j| self.entries[i * n + j] * v[j]).sum()).collect();
        Ok(CVec { entries })
    }

    pub fn add(&self, rhs: &CMat) -> Result<CMat> {
        check_dim(self.dim, rhs.dim)?;
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect();
        Ok(CMat { dim: self.dim, entries })
    }

    pub fn sub(&self, rhs: &CMat) -> Result<CMat> {
        check_dim(self.dim, rhs.dim)?;
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect();
        Ok(CMat { dim: self.dim, entries })
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { dim: self.dim, entries: self.entries.iter().map(|x| x * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, rhs: &CMat) -> f64 {
        self.entries.iter().zip(&rhs.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest `|m[i][j] - conj(m[j][i])|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian part `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> HermMat {
        let m = Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        HermMat(m)
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> C64 {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = ONE;
        for col in 0..n {
            let pivot =
                (col..n).max_by(|&r, &s| a[r * n + col].norm().total_cmp(&a[s * n + col].norm())).unwrap_or(col);
            if a[pivot * n + col] == ZERO {
                return ZERO;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in (col + 1)..n {
                let factor = a[r * n + col] / p;
                if factor == ZERO {
                    continue;
                }
                for j in col..n {
                    let upper = a[col * n + j];
                    a[r * n + j] -= factor * upper;
                }
            }
        }
        det
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVec]) -> Result<CMat> {
        let n = columns.len();
        for c in columns {
            check_dim(n, c.dim())?;
        }
        Ok(Self::from_fn(n, |i, j| columns[j][i]))
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A [`CMat`] known to be Hermitian within [`HERMITIAN_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermMat(CMat);

impl HermMat {
    pub fn new(m: CMat) -> Result<Self> {
        let max_asymmetry = m.max_asymmetry();
        if max_asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry });
        }
        Ok(HermMat(m))
    }

    pub fn identity(dim: usize) -> Self {
        HermMat(CMat::identity(dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        HermMat(CMat::from_real_diagonal(diag))
    }

    pub fn as_cmat(&self) -> &CMat {
        &self.0
    }

    pub fn into_cmat(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigs(self).values[0]
    }
}

impl std::ops::Index<(usize, usize)> for HermMat {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// Complex column vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVec {
    entries: Vec<C64>,
}

impl CVec {
    pub fn new(entries: Vec<C64>) -> Self {
        CVec { entries }
    }

    pub fn from_real(values: &[f64]) -> Self {
        CVec { entries: values.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut entries = vec![ZERO; dim];
        entries[k] = ONE;
        CVec { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> CVec {
        let n = self.norm();
        CVec { entries: self.entries.iter().map(|z| z / n).collect() }
    }

    pub fn conj(&self) -> CVec {
        CVec { entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> CVec {
        CVec { entries: self.entries.iter().map(|z| z * s).collect() }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &CVec) -> C64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    /// Outer product `|self><self|`.
    pub fn projector(&self) -> HermMat {
        HermMat(CMat::from_fn(self.dim(), |i, j| self[i] * self[j].conj()))
    }
}

impl std::ops::Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.entries[i]
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> CVec {
        let n = self.vectors.dim();
        CVec::new((0..n).map(|i| self.vectors[(i, k)]).collect())
    }

    /// `sum_k f(lambda_k) v_k v_k^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermMat {
        let n = self.vectors.dim();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let m = CMat::from_fn(n, |i, j| {
            (0..n).map(|k| self.vectors[(i, k)] * self.vectors[(j, k)].conj() * weights[k]).sum()
        });
        m.hermitian_part()
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors by cyclic Jacobi.
pub fn hermitian_eigs(h: &HermMat) -> Eigh {
    let n = h.dim();
    let mut a = h.0.clone();
    // Start from the exactly Hermitian part so the rotations stay consistent.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
    let mut v = CMat::identity(n);
    let scale = a.frobenius_norm();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation V with V_pp = V_qq = c, V_pq = s*phase, V_qp = -s*conj(phase).
                let vpq = phase * s;
                let vqp = -phase.conj() * s;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * vqp.conj();
                    a[(q, k)] = apk * vpq.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * vqp;
                    v[(k, q)] = vkp * vpq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, |i, k| v[(i, order[k])]);
    Eigh { values, vectors }
}

/// Eigen-decomposition of a general matrix that must be Hermitian.
pub fn hermitian_eigs_checked(m: &CMat) -> Result<Eigh> {
    Ok(hermitian_eigs(&HermMat::new(m.clone())?))
}

/// Partial transpose on the second tensor factor of a 3x3 block matrix:
/// `out[(i,j),(k,l)] = w[(i,l),(k,j)]`.
pub fn partial_transpose(w: &HermMat) -> Result<HermMat> {
    check_dim(9, w.dim())?;
    let m = CMat::from_fn(9, |r, s| {
        let (i, j) = (r / 3, r % 3);
        let (k, l) = (s / 3, s % 3);
        w[(3 * i + l, 3 * k + j)]
    });
    Ok(HermMat(m))
}

/// `xi (x) eta`, entry `3i + j` is `xi_i * eta_j`.
pub fn kron3(xi: &CVec, eta: &CVec) -> Result<CVec> {
    check_dim(3, xi.dim())?;
    check_dim(3, eta.dim())?;
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            out.push(xi[i] * eta[j]);
        }
    }
    Ok(CVec::new(out))
}

/// `<v|W|v>` with the (vanishing) imaginary part dropped.
pub fn quad_form(w: &HermMat, v: &CVec) -> Result<f64> {
    check_dim(w.dim(), v.dim())?;
    let raw = v.inner(&w.0.mul_vec(v)?);
    debug_assert!(
        raw.im.abs() <= 1e-10 * w.norm().max(1.0) * v.norm().powi(2).max(1.0),
        "imaginary part {} of a Hermitian form",
        raw.im
    );
    Ok(raw.re)
}

/// Singular values (descending) of a `rows x cols` row-major matrix by
/// one-sided Jacobi on its columns.
pub fn singular_values(rows: usize, cols: usize, data: &[C64]) -> Vec<f64> {
    assert_eq!(data.len(), rows * cols);
    let mut columns: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| data[i * cols + j]).collect()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = columns[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = columns[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = columns[p].iter().zip(&columns[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = columns.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yr = *y * phase.conj();
                    let nx = *x * c - yr * s;
                    let ny = *x * s + yr * c;
                    *x = nx;
                    *y = ny;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = columns.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(rows.min(cols));
    sv
}

/// Singular values of the matrix whose rows are `vectors`.
pub fn stacked_singular_values(vectors: &[CVec]) -> Vec<f64> {
    let Some(first) = vectors.first() else {
        return Vec::new();
    };
    let dim = first.dim();
    let data: Vec<C64> = vectors
        .iter()
        .flat_map(|v| {
            assert_eq!(v.dim(), dim, "stacked vectors must share a dimension");
            v.entries().iter().copied()
        })
        .collect();
    singular_values(vectors.len(), dim, &data)
}

/// Number of singular values of the stacked vectors above `tol * sigma_max`.
pub fn numerical_rank(vectors: &[CVec], tol: f64) -> usize {
    let sv = stacked_singular_values(vectors);
    let Some(&max) = sv.first() else { return 0 };
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}
