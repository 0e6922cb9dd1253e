//! The Choi-type maps `Phi[a,b,c]` on 3x3 matrices, their Choi matrices and
//! the closed-form region predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{infinite_as_null, MatrixJson};
use crate::linalg::{partial_transpose, CMat, HermMat, C64, HERMITIAN_TOL};

/// Parameters `(a, b, c)` of `Phi[a,b,c]`; all nonnegative and finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MapParams {
    a: f64,
    b: f64,
    c: f64,
}

impl MapParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be a nonnegative real")));
            }
        }
        Ok(MapParams { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

impl TryFrom<[f64; 3]> for MapParams {
    type Error = Error;
    fn try_from([a, b, c]: [f64; 3]) -> Result<Self> {
        MapParams::new(a, b, c)
    }
}

impl From<MapParams> for [f64; 3] {
    fn from(p: MapParams) -> Self {
        p.as_array()
    }
}

impl std::fmt::Display for MapParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Phi[{}, {}, {}]", self.a, self.b, self.c)
    }
}

/// `Phi[a,b,c](X)`.
pub fn phi_apply(p: &MapParams, x: &CMat) -> Result<CMat> {
    if x.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: x.dim() });
    }
    let (a, b, c) = (p.a, p.b, p.c);
    let d = [x[(0, 0)], x[(1, 1)], x[(2, 2)]];
    let diag = [d[0] * a + d[1] * b + d[2] * c, d[0] * c + d[1] * a + d[2] * b, d[0] * b + d[1] * c + d[2] * a];
    Ok(CMat::from_fn(3, |i, j| if i == j { diag[i] } else { -x[(i, j)] }))
}

/// The diagonal map `[x_ij] -> diag(x_11, x_22, x_33)`.
pub fn diagonal_map_apply(x: &CMat) -> CMat {
    CMat::from_fn(x.dim(), |i, j| if i == j { x[(i, i)] } else { C64::new(0.0, 0.0) })
}

/// Images of the matrix units `E_ij` under a linear map on `M_3`.
#[derive(Clone, Debug)]
pub struct MapAction {
    images: [[CMat; 3]; 3],
}

impl MapAction {
    /// Requires `images[j][i] = images[i][j]^dagger` within [`HERMITIAN_TOL`].
    #[allow(clippy::needless_range_loop)]
    pub fn new(images: [[CMat; 3]; 3]) -> Result<Self> {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let m = &images[i][j];
                if m.dim() != 3 {
                    return Err(Error::DimensionMismatch { expected: 3, found: m.dim() });
                }
                worst = worst.max(images[j][i].max_abs_diff(&m.adjoint()));
            }
        }
        if worst > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: worst });
        }
        Ok(MapAction { images })
    }

    pub fn from_map(mut f: impl FnMut(&CMat) -> CMat) -> Result<Self> {
        let images = std::array::from_fn(|i| std::array::from_fn(|j| f(&CMat::unit(3, i, j))));
        Self::new(images)
    }

    pub fn phi(p: &MapParams) -> Self {
        Self::from_map(|x| phi_apply(p, x).expect("3x3 input")).expect("Phi[a,b,c] preserves Hermiticity")
    }

    pub fn identity() -> Self {
        Self::from_map(|x| x.clone()).expect("identity preserves Hermiticity")
    }

    pub fn transpose() -> Self {
        Self::from_map(|x| x.transpose()).expect("transpose preserves Hermiticity")
    }

    pub fn image(&self, i: usize, j: usize) -> &CMat {
        &self.images[i][j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Params(MapParams),
    PartialTransposeOf(MapParams),
    External,
}

/// Hermitian 9x9 block matrix: the Choi matrix of a map on `M_3`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessMatrix {
    matrix: HermMat,
    provenance: Provenance,
}

impl WitnessMatrix {
    pub fn external(matrix: HermMat) -> Result<Self> {
        if matrix.dim() != 9 {
            return Err(Error::DimensionMismatch { expected: 9, found: matrix.dim() });
        }
        Ok(WitnessMatrix { matrix, provenance: Provenance::External })
    }

    pub fn matrix(&self) -> &HermMat {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Parameters when the matrix is `W[a,b,c]` itself.
    pub fn params(&self) -> Option<MapParams> {
        match self.provenance {
            Provenance::Params(p) => Some(p),
            _ => None,
        }
    }

    /// `W^Gamma`; transposing a parametric matrix twice restores its provenance.
    pub fn partial_transpose(&self) -> WitnessMatrix {
        let matrix = partial_transpose(&self.matrix).expect("witness matrices are 9x9");
        let provenance = match self.provenance {
            Provenance::Params(p) => Provenance::PartialTransposeOf(p),
            Provenance::PartialTransposeOf(p) => Provenance::Params(p),
            Provenance::External => Provenance::External,
        };
        WitnessMatrix { matrix, provenance }
    }

    pub fn to_json(&self) -> WitnessJson {
        let (params, gamma) = match self.provenance {
            Provenance::Params(p) => (Some(p.as_array()), None),
            Provenance::PartialTransposeOf(p) => (Some(p.as_array()), Some(true)),
            Provenance::External => (None, None),
        };
        WitnessJson { matrix: MatrixJson::from(self.matrix.as_cmat()), params, gamma }
    }
}

/// Matrix schema plus `"params"` for parametric matrices (and `"gamma": true`
/// for their partial transposes).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    #[serde(flatten)]
    pub matrix: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<bool>,
}

/// `W[a,b,c]`: diagonal `(a,c,b,b,a,c,c,b,a)` and `-1` at the six slots
/// linking indices 0, 4 and 8.
pub fn choi_matrix(p: &MapParams) -> WitnessMatrix {
    let (a, b, c) = (p.a, p.b, p.c);
    let diag = [a, c, b, b, a, c, c, b, a];
    let mut m = CMat::from_real_diagonal(&diag);
    for (i, j) in [(0, 4), (0, 8), (4, 8)] {
        m[(i, j)] = C64::new(-1.0, 0.0);
        m[(j, i)] = C64::new(-1.0, 0.0);
    }
    WitnessMatrix { matrix: HermMat::new(m).expect("W[a,b,c] is real symmetric"), provenance: Provenance::Params(*p) }
}

/// `C = sum_ij |i><j| (x) m(E_ij)`.
pub fn choi_from_action(m: &MapAction) -> Result<WitnessMatrix> {
    let out = CMat::from_fn(9, |r, s| m.image(r / 3, s / 3)[(r % 3, s % 3)]);
    WitnessMatrix::external(HermMat::new(out)?)
}

/// Signed residuals of the defining inequalities; `+inf` where an
/// implication is vacuous.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `a + b + c - 2`
    pub sum: f64,
    /// `bc - (1 - a)^2` when `a <= 1`
    #[serde(with = "infinite_as_null")]
    pub curve: f64,
    /// `a - 2`
    pub cp: f64,
    /// `bc - 1`
    pub ccp: f64,
    /// `bc - ((2 - a) / 2)^2` when `a <= 2`
    #[serde(with = "infinite_as_null")]
    pub decomposable: f64,
}

impl Margins {
    pub fn of(p: &MapParams) -> Self {
        let (a, b, c) = (p.a, p.b, p.c);
        let bc = b * c;
        Margins {
            sum: a + b + c - 2.0,
            curve: if a <= 1.0 { bc - (1.0 - a).powi(2) } else { f64::INFINITY },
            cp: a - 2.0,
            ccp: bc - 1.0,
            decomposable: if a <= 2.0 { bc - ((2.0 - a) / 2.0).powi(2) } else { f64::INFINITY },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionProfile {
    pub positive: bool,
    pub completely_positive: bool,
    pub completely_copositive: bool,
    pub decomposable: bool,
    pub margins: Margins,
}

/// Exact closed-form predicates.
pub fn region_profile(p: &MapParams) -> RegionProfile {
    region_profile_with_tol(p, 0.0)
}

/// Closed-form predicates where the positivity inequalities may fail by at
/// most `tol`. The CP, coCP and decomposability predicates stay exact so the
/// nesting CP or coCP => decomposable => positive holds for every `tol >= 0`.
pub fn region_profile_with_tol(p: &MapParams, tol: f64) -> RegionProfile {
    let m = Margins::of(p);
    let completely_positive = m.cp >= 0.0;
    let completely_copositive = m.ccp >= 0.0;
    let decomposable = m.decomposable >= 0.0;
    let positive = m.sum >= -tol && m.curve >= -tol;
    let profile = RegionProfile { positive, completely_positive, completely_copositive, decomposable, margins: m };
    assert!(!(completely_positive || completely_copositive) || decomposable, "region nesting violated at {p}");
    assert!(!decomposable || positive, "region nesting violated at {p}");
    profile
}

/// Curve `(a(t), b(t), c(t)) = ((1-t)^2, t^2, 1) / (1 - t + t^2)` on which both
/// positivity inequalities are tight.
pub fn choi_curve(t: f64) -> Result<MapParams> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("curve parameter t = {t} must be positive")));
    }
    let d = 1.0 - t + t * t;
    MapParams::new((1.0 - t).powi(2) / d, t * t / d, 1.0 / d)
}
