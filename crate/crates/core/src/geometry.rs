//! Pointwise differential geometry of an immersed surface patch in `R^n`.
//!
//! Everything here is a pure function of a [`Jet2`] (value plus first and
//! second partial derivatives at one parameter point). Curvature quantities
//! that feed the energy inequality use the unsigned magnitudes `rho1 >= rho2`;
//! the signed eigenvalues `kappa1 >= kappa2` are kept alongside.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

pub type Vector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate immersion (EG - F^2 = {det:e})")]
    DegenerateImmersion { det: f64 },
    #[error("umbilic point: principal directions undefined")]
    UmbilicPoint,
    #[error("first normal space is not one-dimensional")]
    NormalSpaceAmbiguous,
    #[error("differential is rank deficient")]
    RankDeficient,
    #[error("jet vectors have inconsistent lengths")]
    DimensionMismatch,
    #[error("jet contains non-finite values")]
    NonFinite,
}

/// Tolerances shared by the pointwise routines. Curvature thresholds are
/// relative to a per-case curvature scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Immersion degeneracy, relative to `E*G`.
    pub eps_imm: f64,
    pub eps_flat: f64,
    pub eps_umb: f64,
    /// Pairwise parallelism of the second-form vectors when `n > 3`.
    pub parallel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_imm: 1e-12,
            eps_flat: 1e-7,
            eps_umb: 1e-6,
            parallel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamPoint {
    pub u: f64,
    pub v: f64,
}

impl ParamPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Value, first and second partial derivatives of a map at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: Vector,
    pub du: Vector,
    pub dv: Vector,
    pub duu: Vector,
    pub duv: Vector,
    pub dvv: Vector,
}

impl Jet2 {
    pub fn new(
        value: Vector,
        du: Vector,
        dv: Vector,
        duu: Vector,
        duv: Vector,
        dvv: Vector,
    ) -> Result<Self, GeometryError> {
        let n = value.len();
        let parts = [&du, &dv, &duu, &duv, &dvv];
        if n == 0 || parts.iter().any(|p| p.len() != n) {
            return Err(GeometryError::DimensionMismatch);
        }
        let jet = Self {
            value,
            du,
            dv,
            duu,
            duv,
            dvv,
        };
        if !jet.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(jet)
    }

    pub fn from_slices(
        value: &[f64],
        du: &[f64],
        dv: &[f64],
        duu: &[f64],
        duv: &[f64],
        dvv: &[f64],
    ) -> Result<Self, GeometryError> {
        Self::new(
            Vector::from_column_slice(value),
            Vector::from_column_slice(du),
            Vector::from_column_slice(dv),
            Vector::from_column_slice(duu),
            Vector::from_column_slice(duv),
            Vector::from_column_slice(dvv),
        )
    }

    pub fn zeros(n: usize) -> Self {
        let z = Vector::zeros(n);
        Self {
            value: z.clone(),
            du: z.clone(),
            dv: z.clone(),
            duu: z.clone(),
            duv: z.clone(),
            dvv: z,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.value.len()
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.value,
            &self.du,
            &self.dv,
            &self.duu,
            &self.duv,
            &self.dvv,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// `duu + dvv`.
    pub fn laplacian(&self) -> Vector {
        &self.duu + &self.dvv
    }

    /// Jet of `h(R x)` where `R` rotates the domain by `angle`.
    pub fn rotate_domain(&self, angle: f64) -> Jet2 {
        let (s, c) = angle.sin_cos();
        Jet2 {
            value: self.value.clone(),
            du: &self.du * c + &self.dv * s,
            dv: &self.du * (-s) + &self.dv * c,
            duu: &self.duu * (c * c) + &self.duv * (2.0 * c * s) + &self.dvv * (s * s),
            duv: &self.duu * (-c * s) + &self.duv * (c * c - s * s) + &self.dvv * (c * s),
            dvv: &self.duu * (s * s) - &self.duv * (2.0 * c * s) + &self.dvv * (c * c),
        }
    }

    /// Jet of `Q h + t` for an orthogonal `Q`.
    pub fn rigid_motion(&self, q: &DMatrix<f64>, t: &Vector) -> Jet2 {
        Jet2 {
            value: q * &self.value + t,
            du: q * &self.du,
            dv: q * &self.dv,
            duu: q * &self.duu,
            duv: q * &self.duv,
            dvv: q * &self.dvv,
        }
    }

    /// Embeds the jet in `R^m` (`m >= n`) by zero padding.
    pub fn pad_to(&self, m: usize) -> Jet2 {
        let pad = |v: &Vector| {
            let mut w = Vector::zeros(m);
            w.rows_mut(0, v.len()).copy_from(v);
            w
        };
        Jet2 {
            value: pad(&self.value),
            du: pad(&self.du),
            dv: pad(&self.dv),
            duu: pad(&self.duu),
            duv: pad(&self.duv),
            dvv: pad(&self.dvv),
        }
    }
}

/// Pullback metric coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstForm {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl FirstForm {
    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// `sqrt(EG - F^2)`, the image area element per unit domain area.
    pub fn area_element(&self) -> f64 {
        self.det().max(0.0).sqrt()
    }

    /// `|h_u|^2 + |h_v|^2`.
    pub fn energy_density(&self) -> f64 {
        self.e + self.g
    }
}

/// Vector-valued second fundamental form: normal parts of the second partials.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondForm {
    pub l: Vector,
    pub m: Vector,
    pub n: Vector,
}

pub fn first_form(jet: &Jet2) -> FirstForm {
    FirstForm {
        e: jet.du.dot(&jet.du),
        f: jet.du.dot(&jet.dv),
        g: jet.dv.dot(&jet.dv),
    }
}

/// Orthonormal tangent basis `(e1, e2)` with `du = j11 e1`,
/// `dv = j12 e1 + j22 e2`.
#[derive(Debug, Clone)]
struct TangentBasis {
    e1: Vector,
    e2: Vector,
    j11: f64,
    j12: f64,
    j22: f64,
}

impl TangentBasis {
    fn new(jet: &Jet2, eps_imm: f64) -> Result<Self, GeometryError> {
        let first = first_form(jet);
        let det = first.det();
        if det.is_nan() || det <= eps_imm * first.e * first.g || det <= 0.0 {
            return Err(GeometryError::DegenerateImmersion { det });
        }
        let j11 = jet.du.norm();
        let e1 = &jet.du / j11;
        let j12 = jet.dv.dot(&e1);
        let mut w = &jet.dv - &e1 * j12;
        // second Gram-Schmidt pass
        let c = w.dot(&e1);
        w -= &e1 * c;
        let j22 = w.norm();
        let e2 = w / j22;
        Ok(Self {
            e1,
            e2,
            j11,
            j12,
            j22,
        })
    }

    fn normal_part(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for _ in 0..2 {
            let c1 = y.dot(&self.e1);
            let c2 = y.dot(&self.e2);
            y -= &self.e1 * c1;
            y -= &self.e2 * c2;
        }
        y
    }

    fn coords(&self, x: &Vector) -> [f64; 2] {
        [x.dot(&self.e1), x.dot(&self.e2)]
    }

    fn ambient(&self, t: [f64; 2]) -> Vector {
        &self.e1 * t[0] + &self.e2 * t[1]
    }

    fn jacobian(&self) -> Matrix2<f64> {
        Matrix2::new(self.j11, self.j12, 0.0, self.j22)
    }

    /// Domain vector mapped onto tangent coordinates `t`.
    fn preimage(&self, t: [f64; 2]) -> [f64; 2] {
        let y = t[1] / self.j22;
        let x = (t[0] - self.j12 * y) / self.j11;
        [x, y]
    }
}

/// Normal projections of `duu`, `duv`, `dvv`.
pub fn second_form(jet: &Jet2) -> Result<SecondForm, GeometryError> {
    second_form_with(jet, &Tolerances::default())
}

pub fn second_form_with(jet: &Jet2, tol: &Tolerances) -> Result<SecondForm, GeometryError> {
    let basis = TangentBasis::new(jet, tol.eps_imm)?;
    Ok(SecondForm {
        l: basis.normal_part(&jet.duu),
        m: basis.normal_part(&jet.duv),
        n: basis.normal_part(&jet.dvv),
    })
}

/// `(<L,N> - <M,M>) / (EG - F^2)`.
pub fn gauss_curvature(first: &FirstForm, second: &SecondForm) -> Result<f64, GeometryError> {
    let det = first.det();
    if det.is_nan() || det <= 0.0 {
        return Err(GeometryError::DegenerateImmersion { det });
    }
    Ok((second.l.dot(&second.n) - second.m.dot(&second.m)) / det)
}

/// Curvature part of the frame: signed principal curvatures, their
/// magnitudes and (away from umbilics) the principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalCurvatures {
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Unit normal spanning the first normal space, when it is nontrivial.
    pub normal: Option<Vector>,
    /// Unit principal direction of `kappa1`; `None` at umbilic points.
    pub dir1: Option<Vector>,
    pub dir2: Option<Vector>,
}

impl PrincipalCurvatures {
    pub fn is_umbilic(&self) -> bool {
        self.dir1.is_none()
    }

    /// Shape operator applied to a tangent vector.
    pub fn shape_operator_apply(&self, x: &Vector) -> Option<Vector> {
        let (d1, d2) = (self.dir1.as_ref()?, self.dir2.as_ref()?);
        Some(d1 * (self.kappa1 * d1.dot(x)) + d2 * (self.kappa2 * d2.dot(x)))
    }

    pub fn mean_abs(&self) -> f64 {
        0.5 * (self.kappa1.abs() + self.kappa2.abs())
    }
}

/// Scalar second form along the unit normal of the first normal space.
fn scalar_second_form(
    jet: &Jet2,
    second: &SecondForm,
    tol: &Tolerances,
) -> Result<(Option<Vector>, [f64; 3]), GeometryError> {
    let normal = if jet.ambient_dim() == 3 {
        let (a, b) = (&jet.du, &jet.dv);
        let c = Vector::from_column_slice(&[
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]);
        let len = c.norm();
        (len > 0.0).then(|| c / len)
    } else {
        let vs = [&second.l, &second.m, &second.n];
        let (big, big_norm) = vs
            .iter()
            .map(|v| (*v, v.norm()))
            .fold((vs[0], 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if big_norm == 0.0 {
            None
        } else {
            let nu = big / big_norm;
            for v in vs {
                let len = v.norm();
                if len <= tol.parallel_tol * big_norm {
                    continue;
                }
                let off = (v - &nu * v.dot(&nu)).norm();
                if off > tol.parallel_tol * len {
                    return Err(GeometryError::NormalSpaceAmbiguous);
                }
            }
            Some(nu)
        }
    };
    let coeffs = match &normal {
        Some(nu) => [second.l.dot(nu), second.m.dot(nu), second.n.dot(nu)],
        None => [0.0; 3],
    };
    Ok((normal, coeffs))
}

/// Symmetric 2x2 eigen-decomposition `[[p, q], [q, r]]`, larger eigenvalue
/// first, with the unit eigenvector of the larger one.
fn symmetric_eigen(p: f64, q: f64, r: f64) -> (f64, f64, [f64; 2]) {
    let mean = 0.5 * (p + r);
    let rad = (0.5 * (p - r)).hypot(q);
    let phi = 0.5 * (2.0 * q).atan2(p - r);
    (mean + rad, mean - rad, [phi.cos(), phi.sin()])
}

/// Shape operator in the orthonormal tangent basis.
fn shape_matrix(basis: &TangentBasis, ii: [f64; 3]) -> (f64, f64, f64) {
    // J^{-1} = [[a, c], [0, d]]
    let a = 1.0 / basis.j11;
    let c = -basis.j12 / (basis.j11 * basis.j22);
    let d = 1.0 / basis.j22;
    let [l, m, n] = ii;
    let p = a * a * l;
    let q = a * (c * l + d * m);
    let r = c * c * l + 2.0 * c * d * m + d * d * n;
    (p, q, r)
}

/// Principal curvatures and directions. `scale` is the characteristic
/// curvature magnitude of the case; directions are withheld when
/// `kappa1 - kappa2 <= eps_umb * scale`.
pub fn principal_curvatures(
    _first: &FirstForm,
    second: &SecondForm,
    jet: &Jet2,
    scale: f64,
    tol: &Tolerances,
) -> Result<PrincipalCurvatures, GeometryError> {
    let basis = TangentBasis::new(jet, tol.eps_imm)?;
    let (normal, ii) = scalar_second_form(jet, second, tol)?;
    let (p, q, r) = shape_matrix(&basis, ii);
    let (kappa1, kappa2, t1) = symmetric_eigen(p, q, r);
    let umbilic = kappa1 - kappa2 <= tol.eps_umb * scale;
    let (dir1, dir2) = if umbilic {
        (None, None)
    } else {
        (
            Some(basis.ambient(t1)),
            Some(basis.ambient([-t1[1], t1[0]])),
        )
    };
    let (a1, a2) = (kappa1.abs(), kappa2.abs());
    Ok(PrincipalCurvatures {
        kappa1,
        kappa2,
        rho1: a1.max(a2),
        rho2: a1.min(a2),
        normal,
        dir1,
        dir2,
    })
}

/// Convenience: forms and principal curvatures straight from a jet.
pub fn principal_curvatures_of(
    jet: &Jet2,
    scale: f64,
    tol: &Tolerances,
) -> Result<PrincipalCurvatures, GeometryError> {
    let first = first_form(jet);
    let second = second_form_with(jet, tol)?;
    principal_curvatures(&first, &second, jet, scale, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointClass {
    FlatUmbilic,
    CurvedUmbilic,
    NegativeRegular,
    Ruled,
    PositiveCurvature,
}

impl PointClass {
    pub const ALL: [PointClass; 5] = [
        PointClass::FlatUmbilic,
        PointClass::CurvedUmbilic,
        PointClass::NegativeRegular,
        PointClass::Ruled,
        PointClass::PositiveCurvature,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::FlatUmbilic => "FlatUmbilic",
            PointClass::CurvedUmbilic => "CurvedUmbilic",
            PointClass::NegativeRegular => "NegativeRegular",
            PointClass::Ruled => "Ruled",
            PointClass::PositiveCurvature => "PositiveCurvature",
        }
    }
}

pub fn classify_point(kappa1: f64, kappa2: f64, scale: f64, tol: &Tolerances) -> PointClass {
    let flat = tol.eps_flat * scale;
    match (kappa1.abs() <= flat, kappa2.abs() <= flat) {
        (true, true) => PointClass::FlatUmbilic,
        (true, false) | (false, true) => PointClass::Ruled,
        (false, false) if kappa1 * kappa2 > flat * flat => PointClass::PositiveCurvature,
        (false, false) if (kappa1 - kappa2).abs() <= tol.eps_umb * scale => {
            PointClass::CurvedUmbilic
        }
        _ => PointClass::NegativeRegular,
    }
}

/// `sqrt(rho1/rho2) + sqrt(rho2/rho1)` with `0/0 = 1` and `a/0 = inf`.
///
/// Evaluated as `2 + (sqrt(rho1) - sqrt(rho2))^2 / sqrt(rho1 rho2)` so the
/// result never rounds below 2.
pub fn curvature_ratio_factor(rho1: f64, rho2: f64, class: PointClass) -> f64 {
    match class {
        PointClass::FlatUmbilic => 2.0,
        PointClass::Ruled => f64::INFINITY,
        _ => {
            let (hi, lo) = (rho1.max(rho2), rho1.min(rho2));
            if hi == 0.0 {
                2.0
            } else if lo == 0.0 {
                f64::INFINITY
            } else {
                let d = hi.sqrt() - lo.sqrt();
                2.0 + d * d / (hi * lo).sqrt()
            }
        }
    }
}

/// Complete frame at a point: curvatures, principal directions, their
/// pullbacks `r`, `s` to the domain, stretch factors and the half angle.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFrame {
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub normal: Option<Vector>,
    pub dir1: Vector,
    pub dir2: Vector,
    /// Unit domain direction mapped into `span{dir1}`.
    pub pullback_r: [f64; 2],
    pub pullback_s: [f64; 2],
    /// `|dh(pullback_r)|`
    pub a: f64,
    /// `|dh(pullback_s)|`
    pub b: f64,
    /// Half the angle from `pullback_r` to `pullback_s`, in `(0, pi/2)`.
    pub theta: f64,
    /// `|sin(angle(r, s))|`, in `(0, 1]`.
    pub sin2theta: f64,
}

impl CurvatureFrame {
    /// Magnitude of the curvature along `dir1` (paired with `a`).
    pub fn rho_r(&self) -> f64 {
        self.kappa1.abs()
    }

    /// Magnitude of the curvature along `dir2` (paired with `b`).
    pub fn rho_s(&self) -> f64 {
        self.kappa2.abs()
    }
}

fn unit2(x: [f64; 2]) -> ([f64; 2], f64) {
    let len = x[0].hypot(x[1]);
    ([x[0] / len, x[1] / len], len)
}

/// Pulls the principal directions back through the differential.
pub fn pullback_frame(
    jet: &Jet2,
    principal: &PrincipalCurvatures,
    tol: &Tolerances,
) -> Result<CurvatureFrame, GeometryError> {
    let (dir1, dir2) = match (&principal.dir1, &principal.dir2) {
        (Some(d1), Some(d2)) => (d1.clone(), d2.clone()),
        _ => return Err(GeometryError::UmbilicPoint),
    };
    let basis = TangentBasis::new(jet, tol.eps_imm).map_err(|_| GeometryError::RankDeficient)?;
    let (r, inv_a) = unit2(basis.preimage(basis.coords(&dir1)));
    let (mut s, inv_b) = unit2(basis.preimage(basis.coords(&dir2)));
    let mut cross = r[0] * s[1] - r[1] * s[0];
    if cross < 0.0 {
        s = [-s[0], -s[1]];
        cross = -cross;
    }
    let dot = r[0] * s[0] + r[1] * s[1];
    let angle = cross.atan2(dot);
    Ok(CurvatureFrame {
        kappa1: principal.kappa1,
        kappa2: principal.kappa2,
        rho1: principal.rho1,
        rho2: principal.rho2,
        normal: principal.normal.clone(),
        dir1,
        dir2,
        pullback_r: r,
        pullback_s: s,
        a: 1.0 / inv_a,
        b: 1.0 / inv_b,
        theta: 0.5 * angle,
        sin2theta: cross.min(1.0),
    })
}

/// Frame at an umbilic point. Every tangent direction is principal there,
/// so the pair whose pullbacks are orthogonal (the singular directions of
/// the differential) is chosen: `a >= b` are the singular values and
/// `sin2theta = 1`.
pub fn umbilic_frame(
    jet: &Jet2,
    principal: &PrincipalCurvatures,
    tol: &Tolerances,
) -> Result<CurvatureFrame, GeometryError> {
    let basis = TangentBasis::new(jet, tol.eps_imm).map_err(|_| GeometryError::RankDeficient)?;
    let svd = basis.jacobian().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(GeometryError::RankDeficient),
    };
    let (i_hi, i_lo) = if svd.singular_values[0] >= svd.singular_values[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let r = [vt[(i_hi, 0)], vt[(i_hi, 1)]];
    let mut s = [vt[(i_lo, 0)], vt[(i_lo, 1)]];
    let mut d2 = basis.ambient([u[(0, i_lo)], u[(1, i_lo)]]);
    if r[0] * s[1] - r[1] * s[0] < 0.0 {
        s = [-s[0], -s[1]];
        d2 = -d2;
    }
    Ok(CurvatureFrame {
        kappa1: principal.kappa1,
        kappa2: principal.kappa2,
        rho1: principal.rho1,
        rho2: principal.rho2,
        normal: principal.normal.clone(),
        dir1: basis.ambient([u[(0, i_hi)], u[(1, i_hi)]]),
        dir2: d2,
        pullback_r: r,
        pullback_s: s,
        a: svd.singular_values[i_hi],
        b: svd.singular_values[i_lo],
        theta: FRAC_PI_4,
        sin2theta: 1.0,
    })
}

/// Second-degree model of the image as a height over its tangent plane in
/// the pullback coordinates `(r, s)`:
/// `Z = (1 - cos(rho1 a r))/rho1 - (1 - cos(rho2 b s))/rho2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHeightModel {
    pub rho1: f64,
    pub rho2: f64,
    pub a: f64,
    pub b: f64,
}

impl LocalHeightModel {
    pub fn from_frame(frame: &CurvatureFrame) -> Self {
        Self {
            rho1: frame.rho_r(),
            rho2: frame.rho_s(),
            a: frame.a,
            b: frame.b,
        }
    }

    pub fn height(&self, r: f64, s: f64) -> f64 {
        // (1 - cos x)/rho = 2 sin^2(x/2)/rho, continuous at rho = 0
        let bend = |rho: f64, stretch: f64, t: f64| {
            if rho == 0.0 {
                0.0
            } else {
                let h = (0.5 * rho * stretch * t).sin();
                2.0 * h * h / rho
            }
        };
        bend(self.rho1, self.a, r) - bend(self.rho2, self.b, s)
    }

    /// `(Z_rr, Z_ss)` at the origin.
    pub fn second_derivatives_at_origin(&self) -> (f64, f64) {
        (self.rho1 * self.a * self.a, -self.rho2 * self.b * self.b)
    }

    /// `Z_rr + Z_ss` at the origin; vanishes for energy-stationary maps.
    pub fn stationarity_defect(&self) -> f64 {
        let (zrr, zss) = self.second_derivatives_at_origin();
        zrr + zss
    }
}
