//! Closed-form map families with exact second-order jets.
//!
//! Harmonic families are the ground truth for the verification harness;
//! `sphere_patch`, `stretched_catenoid` and `cylinder` are deliberate
//! non-harmonic controls. `quadratic` and `exp_cos` are scalar harmonic
//! functions used as Dirichlet traces for the solver.

use crate::exec::Exec;
use crate::geometry::{Jet2, ParamPoint, Vector};
use crate::grid::{FieldNode, JetField, TensorGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("point ({u}, {v}) lies outside the domain")]
    OutOfDomain { u: f64, v: f64 },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown parameter `{param}` for family `{family}`")]
    UnknownParameter { family: String, param: String },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("resolution {0} is below the minimum of 4")]
    InvalidResolution(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainShape {
    Rectangle {
        u_min: f64,
        u_max: f64,
        v_min: f64,
        v_max: f64,
    },
    /// Polar domain coordinates `(r, phi)`; `phi` is periodic.
    Annulus { r_min: f64, r_max: f64 },
}

/// Periodicity flags default to `false` on rectangles; an annulus always
/// has a periodic angle, so its flags default to `(false, true)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "DomainRepr")]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: DomainShape,
    pub periodic_u: bool,
    pub periodic_v: bool,
}

#[derive(Deserialize)]
struct DomainRepr {
    #[serde(flatten)]
    shape: DomainShape,
    periodic_u: Option<bool>,
    periodic_v: Option<bool>,
}

impl From<DomainRepr> for DomainSpec {
    fn from(r: DomainRepr) -> Self {
        let polar = matches!(r.shape, DomainShape::Annulus { .. });
        Self {
            shape: r.shape,
            periodic_u: r.periodic_u.unwrap_or(false),
            periodic_v: r.periodic_v.unwrap_or(polar),
        }
    }
}

impl DomainSpec {
    pub fn rectangle(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            shape: DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            },
            periodic_u: false,
            periodic_v: false,
        }
    }

    /// Rectangle whose `u` axis is periodic with period `u_max - u_min`.
    pub fn periodic_strip(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            periodic_u: true,
            ..Self::rectangle(u_min, u_max, v_min, v_max)
        }
    }

    pub fn annulus(r_min: f64, r_max: f64) -> Self {
        Self {
            shape: DomainShape::Annulus { r_min, r_max },
            periodic_u: false,
            periodic_v: true,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        let bad = |m: &str| Err(AnalyticError::InvalidDomain(m.to_string()));
        match self.shape {
            DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            } => {
                if !(u_min.is_finite()
                    && u_max.is_finite()
                    && v_min.is_finite()
                    && v_max.is_finite())
                {
                    return bad("non-finite bounds");
                }
                if !(u_max > u_min && v_max > v_min) {
                    return bad("empty interior");
                }
            }
            DomainShape::Annulus { r_min, r_max } => {
                if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
                    return bad("annulus needs 0 < r_min < r_max");
                }
                if self.periodic_u || !self.periodic_v {
                    return bad("annulus has a bounded radius and a periodic angle");
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            } => (u_max - u_min) * (v_max - v_min),
            DomainShape::Annulus { r_min, r_max } => 0.5 * TAU * (r_max * r_max - r_min * r_min),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            } => (u_max - u_min).hypot(v_max - v_min),
            DomainShape::Annulus { r_max, .. } => 2.0 * r_max,
        }
    }

    pub fn contains(&self, p: ParamPoint) -> bool {
        match self.shape {
            DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            } => {
                let slack_u = 1e-12 * (u_max - u_min);
                let slack_v = 1e-12 * (v_max - v_min);
                let in_u = self.periodic_u || (p.u >= u_min - slack_u && p.u <= u_max + slack_u);
                let in_v = self.periodic_v || (p.v >= v_min - slack_v && p.v <= v_max + slack_v);
                in_u && in_v && p.u.is_finite() && p.v.is_finite()
            }
            DomainShape::Annulus { r_min, r_max } => {
                let r = p.u.hypot(p.v);
                let slack = 1e-12 * r_max;
                r >= r_min - slack && r <= r_max + slack
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    IdentityPlane,
    AffinePlane {
        p: f64,
        q: f64,
    },
    Catenoid,
    Helicoid,
    Enneper,
    SaddleGraph,
    Radial {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    SpherePatch {
        radius: f64,
    },
    StretchedCatenoid {
        lambda: f64,
    },
    Cylinder {
        radius: f64,
    },
    /// Scalar `u^2 - v^2`.
    Quadratic,
    /// Scalar `e^u cos v`.
    ExpCos,
}

impl Family {
    pub const NAMES: [&'static str; 12] = [
        "identity_plane",
        "affine_plane",
        "catenoid",
        "helicoid",
        "enneper",
        "saddle_graph",
        "radial_family",
        "sphere_patch",
        "stretched_catenoid",
        "cylinder",
        "quadratic",
        "exp_cos",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::IdentityPlane => "identity_plane",
            Family::AffinePlane { .. } => "affine_plane",
            Family::Catenoid => "catenoid",
            Family::Helicoid => "helicoid",
            Family::Enneper => "enneper",
            Family::SaddleGraph => "saddle_graph",
            Family::Radial { .. } => "radial_family",
            Family::SpherePatch { .. } => "sphere_patch",
            Family::StretchedCatenoid { .. } => "stretched_catenoid",
            Family::Cylinder { .. } => "cylinder",
            Family::Quadratic => "quadratic",
            Family::ExpCos => "exp_cos",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let list: Vec<(&str, f64)> = match *self {
            Family::AffinePlane { p, q } => vec![("p", p), ("q", q)],
            Family::Radial { alpha, beta, gamma } => {
                vec![("alpha", alpha), ("beta", beta), ("gamma", gamma)]
            }
            Family::SpherePatch { radius } | Family::Cylinder { radius } => {
                vec![("radius", radius)]
            }
            Family::StretchedCatenoid { lambda } => vec![("lambda", lambda)],
            _ => vec![],
        };
        list.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Builds a family from its name; missing parameters take defaults.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self, AnalyticError> {
        let base = match name {
            "identity_plane" => Family::IdentityPlane,
            "affine_plane" => Family::AffinePlane { p: 2.0, q: 1.0 },
            "catenoid" => Family::Catenoid,
            "helicoid" => Family::Helicoid,
            "enneper" => Family::Enneper,
            "saddle_graph" => Family::SaddleGraph,
            "radial_family" => Family::Radial {
                alpha: 1.0,
                beta: 0.5,
                gamma: 1.0,
            },
            "sphere_patch" => Family::SpherePatch { radius: 1.0 },
            "stretched_catenoid" => Family::StretchedCatenoid { lambda: 2.0 },
            "cylinder" => Family::Cylinder { radius: 1.0 },
            "quadratic" => Family::Quadratic,
            "exp_cos" => Family::ExpCos,
            other => return Err(AnalyticError::UnknownFamily(other.to_string())),
        };
        let mut fam = base;
        for (key, &value) in params {
            let slot = match (&mut fam, key.as_str()) {
                (Family::AffinePlane { p, .. }, "p") => p,
                (Family::AffinePlane { q, .. }, "q") => q,
                (Family::Radial { alpha, .. }, "alpha") => alpha,
                (Family::Radial { beta, .. }, "beta") => beta,
                (Family::Radial { gamma, .. }, "gamma") => gamma,
                (Family::SpherePatch { radius }, "radius") => radius,
                (Family::Cylinder { radius }, "radius") => radius,
                (Family::StretchedCatenoid { lambda }, "lambda") => lambda,
                _ => {
                    return Err(AnalyticError::UnknownParameter {
                        family: name.to_string(),
                        param: key.clone(),
                    })
                }
            };
            if !value.is_finite() {
                return Err(AnalyticError::InvalidParameter(format!("{key} = {value}")));
            }
            *slot = value;
        }
        match fam {
            Family::SpherePatch { radius } | Family::Cylinder { radius } if radius <= 0.0 => Err(
                AnalyticError::InvalidParameter("radius must be positive".into()),
            ),
            _ => Ok(fam),
        }
    }

    pub fn natural_dim(&self) -> usize {
        match self {
            Family::Quadratic | Family::ExpCos => 1,
            _ => 3,
        }
    }

    pub fn default_domain(&self) -> DomainSpec {
        match self {
            Family::IdentityPlane | Family::AffinePlane { .. } => {
                DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0)
            }
            Family::Catenoid | Family::StretchedCatenoid { .. } | Family::Cylinder { .. } => {
                DomainSpec::periodic_strip(0.0, TAU, -1.0, 1.0)
            }
            Family::Helicoid => DomainSpec::rectangle(0.0, TAU, -1.0, 1.0),
            Family::Enneper | Family::SaddleGraph => DomainSpec::rectangle(-1.0, 1.0, -1.0, 1.0),
            Family::Radial { .. } => DomainSpec::annulus(1.0, 2.0),
            Family::SpherePatch { .. } => DomainSpec::rectangle(0.0, 1.0, -0.5, 0.5),
            Family::Quadratic | Family::ExpCos => DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0),
        }
    }

    pub fn is_harmonic(&self) -> bool {
        match *self {
            Family::SpherePatch { .. } | Family::Cylinder { .. } => false,
            Family::StretchedCatenoid { lambda } => lambda.abs() == 1.0,
            _ => true,
        }
    }

    pub fn is_conformal(&self) -> Option<bool> {
        match *self {
            Family::IdentityPlane | Family::Catenoid | Family::Helicoid | Family::Enneper => {
                Some(true)
            }
            Family::AffinePlane { p, q } => Some(p.abs() == q.abs()),
            Family::SaddleGraph | Family::SpherePatch { .. } => Some(false),
            Family::StretchedCatenoid { lambda } => Some(lambda.abs() == 1.0),
            Family::Cylinder { radius } => Some(radius == 1.0),
            Family::Radial { .. } | Family::Quadratic | Family::ExpCos => None,
        }
    }

    pub fn is_minimal_image(&self) -> Option<bool> {
        match self {
            Family::IdentityPlane
            | Family::AffinePlane { .. }
            | Family::Catenoid
            | Family::Helicoid
            | Family::Enneper
            | Family::StretchedCatenoid { .. } => Some(true),
            Family::SaddleGraph | Family::SpherePatch { .. } | Family::Cylinder { .. } => {
                Some(false)
            }
            Family::Radial { .. } | Family::Quadratic | Family::ExpCos => None,
        }
    }

    /// Exact jet at a Cartesian parameter point (no domain check).
    pub fn jet_at(&self, p: ParamPoint) -> Jet2 {
        let (u, v) = (p.u, p.v);
        let j =
            |a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3], e: [f64; 3], f: [f64; 3]| Jet2 {
                value: Vector::from_column_slice(&a),
                du: Vector::from_column_slice(&b),
                dv: Vector::from_column_slice(&c),
                duu: Vector::from_column_slice(&d),
                duv: Vector::from_column_slice(&e),
                dvv: Vector::from_column_slice(&f),
            };
        let s = |x: f64| Vector::from_element(1, x);
        const Z: [f64; 3] = [0.0; 3];
        match *self {
            Family::IdentityPlane => j([u, v, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], Z, Z, Z),
            Family::AffinePlane { p, q } => {
                j([p * u, q * v, 0.0], [p, 0.0, 0.0], [0.0, q, 0.0], Z, Z, Z)
            }
            Family::Catenoid => Family::StretchedCatenoid { lambda: 1.0 }.jet_at(p),
            Family::StretchedCatenoid { lambda: l } => {
                let (su, cu) = u.sin_cos();
                let (ch, sh) = ((l * v).cosh(), (l * v).sinh());
                j(
                    [ch * cu, ch * su, l * v],
                    [-ch * su, ch * cu, 0.0],
                    [l * sh * cu, l * sh * su, l],
                    [-ch * cu, -ch * su, 0.0],
                    [-l * sh * su, l * sh * cu, 0.0],
                    [l * l * ch * cu, l * l * ch * su, 0.0],
                )
            }
            Family::Helicoid => {
                let (su, cu) = u.sin_cos();
                let (ch, sh) = (v.cosh(), v.sinh());
                j(
                    [sh * cu, sh * su, u],
                    [-sh * su, sh * cu, 1.0],
                    [ch * cu, ch * su, 0.0],
                    [-sh * cu, -sh * su, 0.0],
                    [-ch * su, ch * cu, 0.0],
                    [sh * cu, sh * su, 0.0],
                )
            }
            Family::Enneper => j(
                [
                    u - u * u * u / 3.0 + u * v * v,
                    -v + v * v * v / 3.0 - u * u * v,
                    u * u - v * v,
                ],
                [1.0 - u * u + v * v, -2.0 * u * v, 2.0 * u],
                [2.0 * u * v, -1.0 + v * v - u * u, -2.0 * v],
                [-2.0 * u, -2.0 * v, 2.0],
                [2.0 * v, -2.0 * u, 0.0],
                [2.0 * u, 2.0 * v, -2.0],
            ),
            Family::SaddleGraph => j(
                [u, v, u * u - v * v],
                [1.0, 0.0, 2.0 * u],
                [0.0, 1.0, -2.0 * v],
                [0.0, 0.0, 2.0],
                Z,
                [0.0, 0.0, -2.0],
            ),
            Family::Radial { alpha, beta, gamma } => {
                let r = u.hypot(v);
                let phi = v.atan2(u);
                let (sp, cp) = phi.sin_cos();
                let big_r = alpha * r + beta / r;
                let dr = alpha - beta / (r * r);
                let ddr = 2.0 * beta / (r * r * r);
                let polar = j(
                    [big_r * cp, big_r * sp, gamma * r.ln()],
                    [dr * cp, dr * sp, gamma / r],
                    [-big_r * sp, big_r * cp, 0.0],
                    [ddr * cp, ddr * sp, -gamma / (r * r)],
                    [-dr * sp, dr * cp, 0.0],
                    [-big_r * cp, -big_r * sp, 0.0],
                );
                polar_to_cartesian(r, phi, &polar)
            }
            Family::SpherePatch { radius: rr } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                j(
                    [rr * cv * cu, rr * cv * su, rr * sv],
                    [-rr * cv * su, rr * cv * cu, 0.0],
                    [-rr * sv * cu, -rr * sv * su, rr * cv],
                    [-rr * cv * cu, -rr * cv * su, 0.0],
                    [rr * sv * su, -rr * sv * cu, 0.0],
                    [-rr * cv * cu, -rr * cv * su, -rr * sv],
                )
            }
            Family::Cylinder { radius: rr } => {
                let (su, cu) = u.sin_cos();
                j(
                    [rr * cu, rr * su, v],
                    [-rr * su, rr * cu, 0.0],
                    [0.0, 0.0, 1.0],
                    [-rr * cu, -rr * su, 0.0],
                    Z,
                    Z,
                )
            }
            Family::Quadratic => Jet2 {
                value: s(u * u - v * v),
                du: s(2.0 * u),
                dv: s(-2.0 * v),
                duu: s(2.0),
                duv: s(0.0),
                dvv: s(-2.0),
            },
            Family::ExpCos => {
                let e = u.exp();
                let (sv, cv) = v.sin_cos();
                Jet2 {
                    value: s(e * cv),
                    du: s(e * cv),
                    dv: s(-e * sv),
                    duu: s(e * cv),
                    duv: s(-e * sv),
                    dvv: s(-e * cv),
                }
            }
        }
    }
}

/// Converts a jet in polar coordinates `(r, phi)` to Cartesian `(x, y)`
/// derivatives by the chain rule.
pub fn polar_to_cartesian(r: f64, phi: f64, polar: &Jet2) -> Jet2 {
    let (s, c) = phi.sin_cos();
    let (hr, hp) = (&polar.du, &polar.dv);
    let (hrr, hrp, hpp) = (&polar.duu, &polar.duv, &polar.dvv);
    let ir = 1.0 / r;
    let ir2 = ir * ir;
    let (cc, ss, cs) = (c * c, s * s, c * s);
    Jet2 {
        value: polar.value.clone(),
        du: hr * c - hp * (s * ir),
        dv: hr * s + hp * (c * ir),
        duu: hrr * cc - hrp * (2.0 * cs * ir)
            + hpp * (ss * ir2)
            + hr * (ss * ir)
            + hp * (2.0 * cs * ir2),
        duv: hrr * cs + hrp * ((cc - ss) * ir)
            - hpp * (cs * ir2)
            - hr * (cs * ir)
            - hp * ((cc - ss) * ir2),
        dvv: hrr * ss + hrp * (2.0 * cs * ir) + hpp * (cc * ir2) + hr * (cc * ir)
            - hp * (2.0 * cs * ir2),
    }
}

/// Asserted properties of an analytic case. The degree-one hypothesis is
/// recorded, never checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeta {
    pub is_harmonic: bool,
    pub is_conformal: Option<bool>,
    pub is_minimal_image: Option<bool>,
    pub degree_one: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFamily {
    pub family: Family,
    pub domain: DomainSpec,
    pub ambient_dim: usize,
    pub meta: FamilyMeta,
}

impl AnalyticFamily {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            domain: family.default_domain(),
            ambient_dim: family.natural_dim(),
            meta: FamilyMeta {
                is_harmonic: family.is_harmonic(),
                is_conformal: family.is_conformal(),
                is_minimal_image: family.is_minimal_image(),
                degree_one: true,
            },
        }
    }

    pub fn by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self, AnalyticError> {
        Ok(Self::new(Family::from_name(name, params)?))
    }

    pub fn with_domain(mut self, domain: DomainSpec) -> Result<Self, AnalyticError> {
        domain.validate()?;
        if matches!(self.family, Family::Radial { .. })
            != matches!(domain.shape, DomainShape::Annulus { .. })
        {
            return Err(AnalyticError::InvalidDomain(
                "radial_family is defined on annuli only, other families on rectangles".into(),
            ));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Embeds the image in a higher-dimensional space by zero padding.
    pub fn with_ambient_dim(mut self, n: usize) -> Result<Self, AnalyticError> {
        if n < self.family.natural_dim() {
            return Err(AnalyticError::InvalidParameter(format!(
                "ambient dimension {n} below {}",
                self.family.natural_dim()
            )));
        }
        self.ambient_dim = n;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn eval_jet(&self, p: ParamPoint) -> Result<Jet2, AnalyticError> {
        if !self.domain.contains(p) {
            return Err(AnalyticError::OutOfDomain { u: p.u, v: p.v });
        }
        let jet = self.family.jet_at(p);
        Ok(if self.ambient_dim > jet.ambient_dim() {
            jet.pad_to(self.ambient_dim)
        } else {
            jet
        })
    }

    /// `|h_uu + h_vv|`, zero exactly where the map is harmonic.
    pub fn laplacian_residual(&self, p: ParamPoint) -> Result<f64, AnalyticError> {
        Ok(self.eval_jet(p)?.laplacian().norm())
    }

    /// Exact jets on the full tensor grid with trapezoid weights.
    pub fn sample_grid(&self, resolution: usize, exec: Exec) -> Result<JetField, AnalyticError> {
        if resolution < 4 {
            return Err(AnalyticError::InvalidResolution(resolution));
        }
        self.domain.validate()?;
        let grid = TensorGrid::new(&self.domain, resolution);
        let weights = grid.full_weights();
        let nodes = exec.map(grid.len(), |k| {
            let (i, j) = grid.ij(k);
            let param = grid.param(i, j);
            let jet = self.family.jet_at(param);
            FieldNode {
                index: (i, j),
                param,
                jet: if self.ambient_dim > jet.ambient_dim() {
                    jet.pad_to(self.ambient_dim)
                } else {
                    jet
                },
                weight: weights[k],
            }
        });
        Ok(JetField {
            domain: self.domain,
            grid,
            nodes,
            excluded_area_fraction: 0.0,
        })
    }
}
