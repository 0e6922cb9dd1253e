//! Faces of the parameter body `{(a,b,c) : Phi[a,b,c] positive}` and the
//! optimality / spanning profile attached to each face.
//!
//! The body has four 2-dimensional faces (`c = 0`, `b = 0`, `a = 0`,
//! `a + b + c = 2`), the edges `e_a, e_b, e_c, e_ab, e_ac`, the segments
//! `e_t` ruling the surface `bc = (1 - a)^2`, and the vertices `(2,0,0)`,
//! `(1,0,1)`, `(1,1,0)`, the curve points `(a(t), b(t), c(t))` and
//! `(0, t, 1/t)`.

use serde::{Deserialize, Serialize};

use crate::choi::{region_profile_with_tol, MapParams, RegionProfile};
use crate::error::{Error, Result};

pub const DEFAULT_FACE_TOL: f64 = 1e-9;

/// Smallest face containing a parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceLabel {
    FAb,
    FAc,
    FBc,
    FAbc,
    EA,
    EB,
    EC,
    EAb,
    EAc,
    /// Relative interior of the segment from the curve point at `t` to `(0, t, 1/t)`.
    ET(f64),
    V200,
    V101,
    V110,
    /// `(a(t), b(t), c(t))`, `t != 1`.
    VCurve(f64),
    /// `(0, t, 1/t)`.
    VBc(f64),
    Interior,
    Outside,
}

impl FaceLabel {
    pub fn name(&self) -> &'static str {
        match self {
            FaceLabel::FAb => "f_ab",
            FaceLabel::FAc => "f_ac",
            FaceLabel::FBc => "f_bc",
            FaceLabel::FAbc => "f_abc",
            FaceLabel::EA => "e_a",
            FaceLabel::EB => "e_b",
            FaceLabel::EC => "e_c",
            FaceLabel::EAb => "e_ab",
            FaceLabel::EAc => "e_ac",
            FaceLabel::ET(_) => "e_t",
            FaceLabel::V200 => "v_(2,0,0)",
            FaceLabel::V101 => "v_(1,0,1)",
            FaceLabel::V110 => "v_(1,1,0)",
            FaceLabel::VCurve(_) => "v_curve",
            FaceLabel::VBc(_) => "v_(0,t,1/t)",
            FaceLabel::Interior => "interior",
            FaceLabel::Outside => "outside",
        }
    }

    pub fn t(&self) -> Option<f64> {
        match *self {
            FaceLabel::ET(t) | FaceLabel::VCurve(t) | FaceLabel::VBc(t) => Some(t),
            _ => None,
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            FaceLabel::V200 | FaceLabel::V101 | FaceLabel::V110 | FaceLabel::VCurve(_) | FaceLabel::VBc(_) => Some(0),
            FaceLabel::EA | FaceLabel::EB | FaceLabel::EC | FaceLabel::EAb | FaceLabel::EAc | FaceLabel::ET(_) => {
                Some(1)
            }
            FaceLabel::FAb | FaceLabel::FAc | FaceLabel::FBc | FaceLabel::FAbc => Some(2),
            FaceLabel::Interior => Some(3),
            FaceLabel::Outside => None,
        }
    }
}

impl std::fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.t() {
            Some(t) => write!(f, "{}(t={})", self.name(), t),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyProfile {
    pub spanning: bool,
    pub co_spanning: bool,
    pub bi_spanning: bool,
    pub optimal: bool,
    pub co_optimal: bool,
    pub bi_optimal: bool,
}

impl PropertyProfile {
    /// Fills in the bi-properties and checks the implications between rows.
    const fn row(spanning: bool, co_spanning: bool, optimal: bool, co_optimal: bool) -> Self {
        assert!(!spanning || optimal);
        assert!(!co_spanning || co_optimal);
        PropertyProfile {
            spanning,
            co_spanning,
            bi_spanning: spanning && co_spanning,
            optimal,
            co_optimal,
            bi_optimal: optimal && co_optimal,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.bi_spanning == (self.spanning && self.co_spanning)
            && self.bi_optimal == (self.optimal && self.co_optimal)
            && (!self.spanning || self.optimal)
            && (!self.co_spanning || self.co_optimal)
    }
}

const NOTHING: PropertyProfile = PropertyProfile::row(false, false, false, false);
const CO_ONLY: PropertyProfile = PropertyProfile::row(false, true, false, true);
const SPANNING_ONLY: PropertyProfile = PropertyProfile::row(true, false, true, false);
const CHOI_VERTICES: PropertyProfile = PropertyProfile::row(false, true, true, true);
const EVERYTHING: PropertyProfile = PropertyProfile::row(true, true, true, true);

/// Tabulated profile of a face. The body interior carries the all-false row
/// since the body contains both a CP and a coCP map.
pub fn property_profile(face: FaceLabel) -> Result<PropertyProfile> {
    Ok(match face {
        FaceLabel::FAb
        | FaceLabel::FAc
        | FaceLabel::FBc
        | FaceLabel::FAbc
        | FaceLabel::EA
        | FaceLabel::EB
        | FaceLabel::EC
        | FaceLabel::Interior => NOTHING,
        FaceLabel::EAb | FaceLabel::EAc | FaceLabel::V200 => CO_ONLY,
        FaceLabel::ET(_) | FaceLabel::VBc(_) => SPANNING_ONLY,
        FaceLabel::V101 | FaceLabel::V110 => CHOI_VERTICES,
        FaceLabel::VCurve(_) => EVERYTHING,
        FaceLabel::Outside => return Err(Error::OutsideCone("face".into())),
    })
}

fn near(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Smallest face whose equalities hold within `tol` (absolute, on the raw
/// residuals). Vertices are tested before edges, edges before 2-faces.
pub fn classify_face(p: &MapParams, tol: f64) -> Result<FaceLabel> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let (a, b, c) = (p.a(), p.b(), p.c());
    let region = region_profile_with_tol(p, tol);
    if !region.positive {
        return Ok(FaceLabel::Outside);
    }
    let m = region.margins;
    let (za, zb, zc, zs) = (a <= tol, b <= tol, c <= tol, m.sum.abs() <= tol);

    // Vertices.
    if near(a, 2.0, tol) && zb && zc {
        return Ok(FaceLabel::V200);
    }
    if near(a, 1.0, tol) && zb && near(c, 1.0, tol) {
        return Ok(FaceLabel::V101);
    }
    if near(a, 1.0, tol) && near(b, 1.0, tol) && zc {
        return Ok(FaceLabel::V110);
    }

    // The ruled surface bc = (1 - a)^2, 0 <= a < 1.
    if a < 1.0 - tol && m.curve.abs() <= tol {
        if za {
            return Ok(FaceLabel::VBc(b));
        }
        let t = recover_t(a, b, tol)?;
        return Ok(if zs { FaceLabel::VCurve(t) } else { FaceLabel::ET(t) });
    }

    // Edges.
    if zb && zc {
        return Ok(FaceLabel::EA);
    }
    if near(a, 1.0, tol) && zc {
        return Ok(FaceLabel::EB);
    }
    if near(a, 1.0, tol) && zb {
        return Ok(FaceLabel::EC);
    }
    if zc && zs {
        return Ok(FaceLabel::EAb);
    }
    if zb && zs {
        return Ok(FaceLabel::EAc);
    }

    // 2-faces.
    if zc {
        return Ok(FaceLabel::FAb);
    }
    if zb {
        return Ok(FaceLabel::FAc);
    }
    if za {
        return Ok(FaceLabel::FBc);
    }
    if zs {
        return Ok(FaceLabel::FAbc);
    }
    Ok(FaceLabel::Interior)
}

/// On the ruled surface, the segment through `(a, b, c)` is `(1-s, st, s/t)`
/// with `s = 1 - a`, so `t = b / (1 - a)`.
fn recover_t(a: f64, b: f64, tol: f64) -> Result<f64> {
    let s = 1.0 - a;
    if s <= tol {
        return Err(Error::AmbiguousCurveParameter(format!("1 - a = {s} is within tolerance of 0")));
    }
    Ok(b / s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedPoint {
    pub params: MapParams,
    pub face: FaceLabel,
    /// `None` only for [`FaceLabel::Outside`].
    pub profile: Option<PropertyProfile>,
    pub region: RegionProfile,
    pub notes: Option<String>,
}

/// Face, tabulated profile and region predicates of a parameter point.
pub fn classify(p: &MapParams, tol: f64) -> Result<ClassifiedPoint> {
    let face = classify_face(p, tol)?;
    let region = region_profile_with_tol(p, tol);
    let profile = match face {
        FaceLabel::Outside => None,
        f => Some(property_profile(f)?),
    };
    let notes = match face {
        FaceLabel::V110 => Some("smallest exposed face: e_ab".to_string()),
        FaceLabel::V101 => Some("smallest exposed face: e_ac".to_string()),
        FaceLabel::V200 => Some("contained in smallest exposed face of v_(1,0,1)".to_string()),
        _ => None,
    };
    debug_assert_eq!(face == FaceLabel::Outside, !region.positive);
    Ok(ClassifiedPoint { params: *p, face, profile, region, notes })
}

/// Wire form: `{ "params", "face", "t", "profile", "region", "notes" }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifiedJson {
    pub params: [f64; 3],
    pub face: String,
    pub t: Option<f64>,
    pub profile: Option<PropertyProfile>,
    pub region: RegionProfile,
    pub notes: Option<String>,
}

impl From<&ClassifiedPoint> for ClassifiedJson {
    fn from(c: &ClassifiedPoint) -> Self {
        ClassifiedJson {
            params: c.params.as_array(),
            face: c.face.name().to_string(),
            t: c.face.t(),
            profile: c.profile,
            region: c.region,
            notes: c.notes.clone(),
        }
    }
}
