//! Global quantities of the energy/area chain and their pointwise identities.
//!
//! For a harmonic map the chain reads
//! `Energy >= F >= 2 * Area` with `F = ∫ (sqrt(rho1/rho2) + sqrt(rho2/rho1)) dA`.
//! Pointwise, the stretch factors satisfy `rho_r a^2 = rho_s b^2` and the
//! energy density equals `factor * area_element / sin(2 theta)`; the residuals
//! of both identities are recorded per point.

use crate::exec::Exec;
use crate::geometry::{
    classify_point, curvature_ratio_factor, first_form, principal_curvatures,
    principal_curvatures_of, pullback_frame, second_form_with, umbilic_frame, CurvatureFrame,
    GeometryError, ParamPoint, PointClass, Tolerances,
};
use crate::grid::{FieldNode, JetField};
use crate::quadrature::richardson;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    #[serde(flatten)]
    pub geometry: Tolerances,
    /// Points with `sin(2 theta)` below this are masked.
    pub sin2theta_mask: f64,
    /// Largest masked fraction that still allows a verdict.
    pub masked_limit: f64,
    /// Largest positive-curvature fraction for which `F` is defined.
    pub positive_limit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            geometry: Tolerances::default(),
            sin2theta_mask: 1e-3,
            masked_limit: 0.05,
            positive_limit: 1e-3,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), String> {
        let g = &self.geometry;
        let all = [
            ("eps_imm", g.eps_imm),
            ("eps_flat", g.eps_flat),
            ("eps_umb", g.eps_umb),
            ("parallel_tol", g.parallel_tol),
            ("sin2theta_mask", self.sin2theta_mask),
            ("masked_limit", self.masked_limit),
            ("positive_limit", self.positive_limit),
        ];
        match all.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            Some((name, v)) => Err(format!("threshold {name} = {v} must be positive")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskReason {
    /// Both curvatures vanish; covered by the `0/0 = 1` convention.
    Flat,
    Umbilic,
    Ruled,
    RankDeficient,
    SmallAngle,
    NormalSpaceAmbiguous,
}

impl MaskReason {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskReason::Flat => "flat",
            MaskReason::Umbilic => "umbilic",
            MaskReason::Ruled => "ruled",
            MaskReason::RankDeficient => "rank_deficient",
            MaskReason::SmallAngle => "small_angle",
            MaskReason::NormalSpaceAmbiguous => "normal_space_ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointReport {
    pub index: (usize, usize),
    pub param: ParamPoint,
    pub weight: f64,
    pub class: Option<PointClass>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub energy_density: f64,
    pub area_element: f64,
    pub factor: Option<f64>,
    pub sin2theta: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub eq9_residual: Option<f64>,
    pub eq10_residual: Option<f64>,
    pub mask: Option<MaskReason>,
}

impl PointReport {
    pub fn masked(&self) -> bool {
        self.mask.is_some()
    }
}

/// Pointwise reports over a jet field plus the curvature scale used.
#[derive(Debug, Clone, PartialEq)]
pub struct PointField {
    pub points: Vec<PointReport>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("positive curvature on {fraction:.3e} of the points")]
    UndefinedOnPositiveCurvature { fraction: f64 },
    #[error("first normal space is ambiguous at {count} points")]
    NormalSpaceAmbiguous { count: usize },
}

/// `max(max_p (|kappa1| + |kappa2|)/2, 1/diameter)`.
pub fn curvature_scale(field: &JetField, tol: &Tolerances, exec: Exec) -> f64 {
    let floor = 1.0 / field.domain.diameter();
    exec.map(field.nodes.len(), |k| {
        principal_curvatures_of(&field.nodes[k].jet, 0.0, tol)
            .map(|pc| pc.mean_abs())
            .unwrap_or(0.0)
    })
    .into_iter()
    .fold(floor, f64::max)
}

fn eq9_residual(frame: &CurvatureFrame) -> f64 {
    let x = frame.rho_r() * frame.a * frame.a;
    let y = frame.rho_s() * frame.b * frame.b;
    if x + y == 0.0 {
        0.0
    } else {
        (x - y).abs() / (x + y)
    }
}

fn eq10_residual(energy_density: f64, factor: f64, area_element: f64, sin2theta: f64) -> f64 {
    let predicted = factor * area_element / sin2theta;
    let denom = energy_density.max(predicted);
    if denom == 0.0 {
        0.0
    } else {
        (energy_density - predicted).abs() / denom
    }
}

pub fn evaluate_point(node: &FieldNode, scale: f64, thr: &Thresholds) -> PointReport {
    let tol = &thr.geometry;
    let ff = first_form(&node.jet);
    let mut rep = PointReport {
        index: node.index,
        param: node.param,
        weight: node.weight,
        class: None,
        kappa1: None,
        kappa2: None,
        energy_density: ff.energy_density(),
        area_element: ff.area_element(),
        factor: None,
        sin2theta: None,
        a: None,
        b: None,
        eq9_residual: None,
        eq10_residual: None,
        mask: None,
    };
    let pc = match second_form_with(&node.jet, tol)
        .and_then(|sf| principal_curvatures(&ff, &sf, &node.jet, scale, tol))
    {
        Ok(pc) => pc,
        Err(GeometryError::NormalSpaceAmbiguous) => {
            rep.mask = Some(MaskReason::NormalSpaceAmbiguous);
            return rep;
        }
        Err(_) => {
            rep.mask = Some(MaskReason::RankDeficient);
            return rep;
        }
    };
    let class = classify_point(pc.kappa1, pc.kappa2, scale, tol);
    rep.class = Some(class);
    rep.kappa1 = Some(pc.kappa1);
    rep.kappa2 = Some(pc.kappa2);
    let factor = curvature_ratio_factor(pc.rho1, pc.rho2, class);
    rep.factor = Some(factor);

    let frame = match class {
        PointClass::FlatUmbilic => {
            rep.mask = Some(MaskReason::Flat);
            return rep;
        }
        PointClass::CurvedUmbilic => {
            rep.mask = Some(MaskReason::Umbilic);
            return rep;
        }
        PointClass::PositiveCurvature if pc.is_umbilic() => umbilic_frame(&node.jet, &pc, tol),
        _ => pullback_frame(&node.jet, &pc, tol),
    };
    let frame = match frame {
        Ok(f) => f,
        Err(GeometryError::UmbilicPoint) => {
            rep.mask = Some(MaskReason::Umbilic);
            return rep;
        }
        Err(_) => {
            rep.mask = Some(MaskReason::RankDeficient);
            return rep;
        }
    };
    rep.sin2theta = Some(frame.sin2theta);
    rep.a = Some(frame.a);
    rep.b = Some(frame.b);
    if class == PointClass::Ruled {
        rep.mask = Some(MaskReason::Ruled);
        return rep;
    }
    if frame.sin2theta < thr.sin2theta_mask {
        rep.mask = Some(MaskReason::SmallAngle);
        return rep;
    }
    rep.eq9_residual = Some(eq9_residual(&frame));
    rep.eq10_residual = Some(eq10_residual(
        rep.energy_density,
        factor,
        rep.area_element,
        frame.sin2theta,
    ));
    rep
}

pub fn evaluate_points(field: &JetField, thr: &Thresholds, exec: Exec) -> PointField {
    let scale = curvature_scale(field, &thr.geometry, exec);
    let points = exec.map(field.nodes.len(), |k| {
        evaluate_point(&field.nodes[k], scale, thr)
    });
    PointField { points, scale }
}

/// Composite trapezoid of `|h_u|^2 + |h_v|^2`.
pub fn dirichlet_energy(field: &JetField) -> f64 {
    field
        .nodes
        .iter()
        .map(|n| n.weight * first_form(&n.jet).energy_density())
        .sum()
}

/// Composite trapezoid of `sqrt(EG - F^2)`.
pub fn image_area(field: &JetField) -> f64 {
    field
        .nodes
        .iter()
        .map(|n| n.weight * first_form(&n.jet).area_element())
        .sum()
}

fn class_fraction(points: &PointField, pred: impl Fn(&PointReport) -> bool) -> f64 {
    if points.points.is_empty() {
        return 0.0;
    }
    points.points.iter().filter(|p| pred(p)).count() as f64 / points.points.len() as f64
}

pub fn positive_curvature_fraction(points: &PointField) -> f64 {
    class_fraction(points, |p| p.class == Some(PointClass::PositiveCurvature))
}

/// Composite trapezoid of `factor * area_element`; `+inf` when a ruled
/// point with positive area contributes.
pub fn curvature_functional(points: &PointField, thr: &Thresholds) -> Result<f64, FunctionalError> {
    let ambiguous = points
        .points
        .iter()
        .filter(|p| p.mask == Some(MaskReason::NormalSpaceAmbiguous))
        .count();
    if ambiguous > 0 {
        return Err(FunctionalError::NormalSpaceAmbiguous { count: ambiguous });
    }
    let fraction = positive_curvature_fraction(points);
    if fraction > thr.positive_limit {
        return Err(FunctionalError::UndefinedOnPositiveCurvature { fraction });
    }
    Ok(points
        .points
        .iter()
        .map(|p| match p.factor {
            Some(f) if p.weight * p.area_element > 0.0 => p.weight * f * p.area_element,
            _ => 0.0,
        })
        .sum())
}

pub fn eq9_residual_field(points: &PointField) -> Vec<Option<f64>> {
    points.points.iter().map(|p| p.eq9_residual).collect()
}

pub fn eq10_residual_field(points: &PointField) -> Vec<Option<f64>> {
    points.points.iter().map(|p| p.eq10_residual).collect()
}

/// Serializes a real that may be infinite as a number or `"+inf"` / `"-inf"`.
pub fn ext_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn opt_ext_real<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ext_real(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl ResidualStats {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let q = |p: f64| v[(((p * n as f64).ceil() as usize).max(1) - 1).min(n - 1)];
        Some(Self {
            count: n,
            max: v[n - 1],
            mean: v.iter().sum::<f64>() / n as f64,
            q50: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleStats {
    pub count: usize,
    pub min: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Verdict {
    ChainHolds,
    ChainViolated,
    Undefined(String),
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::ChainHolds => 0,
            Verdict::ChainViolated => 1,
            Verdict::Undefined(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseInfo {
    pub name: String,
    /// `analytic` or `solver`.
    pub source: String,
    pub params: BTreeMap<String, f64>,
    pub harmonic_asserted: bool,
    pub conformal: Option<bool>,
    pub minimal_image: Option<bool>,
    /// Degree-one hypothesis as declared, never verified.
    pub degree_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimates {
    pub energy: f64,
    #[serde(serialize_with = "ext_real")]
    pub functional_f: f64,
    pub two_area: f64,
    #[serde(serialize_with = "ext_real")]
    pub left_margin: f64,
    #[serde(serialize_with = "ext_real")]
    pub right_margin: f64,
    /// Whether a coarser companion grid contributed a Richardson estimate.
    pub richardson: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolated {
    pub coarse_resolution: usize,
    pub energy: f64,
    #[serde(serialize_with = "opt_ext_real")]
    pub functional_f: Option<f64>,
    pub two_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub case: CaseInfo,
    pub resolution: usize,
    pub curvature_scale: f64,
    pub energy: f64,
    #[serde(serialize_with = "opt_ext_real")]
    pub functional_f: Option<f64>,
    pub two_area: f64,
    #[serde(serialize_with = "opt_ext_real")]
    pub left_margin: Option<f64>,
    #[serde(serialize_with = "opt_ext_real")]
    pub right_margin: Option<f64>,
    pub error_estimates: ErrorEstimates,
    pub extrapolated: Option<Extrapolated>,
    pub eq9_residual_stats: Option<ResidualStats>,
    pub eq10_residual_stats: Option<ResidualStats>,
    pub sin2theta_stats: Option<AngleStats>,
    pub class_histogram: BTreeMap<String, usize>,
    pub point_count: usize,
    pub masked_fraction: f64,
    pub flat_fraction: f64,
    pub excluded_area_fraction: f64,
    pub positive_curvature_fraction: f64,
    pub max_laplacian_residual: f64,
    pub verdict: Verdict,
}

struct Integrals {
    energy: f64,
    area: f64,
    functional: Result<f64, FunctionalError>,
    abs_energy: f64,
    abs_area: f64,
}

fn integrals(field: &JetField, points: &PointField, thr: &Thresholds) -> Integrals {
    let energy = dirichlet_energy(field);
    let area = image_area(field);
    Integrals {
        energy,
        area,
        functional: curvature_functional(points, thr),
        abs_energy: energy.abs(),
        abs_area: area.abs(),
    }
}

/// Relative round-off allowance added to every error estimate.
const ROUNDOFF: f64 = 1e-12;

/// Assembles the full report at the resolution of `fine`; `coarse`, when
/// given, is the same case on a grid with half the resolution and supplies
/// Richardson error estimates.
pub fn verify_chain(
    case: CaseInfo,
    fine: &JetField,
    coarse: Option<&JetField>,
    thr: &Thresholds,
    exec: Exec,
) -> VerificationReport {
    let points = evaluate_points(fine, thr, exec);
    let ints = integrals(fine, &points, thr);
    let coarse_ints = coarse.map(|c| {
        let cp = evaluate_points(c, thr, exec);
        (c.resolution(), integrals(c, &cp, thr))
    });

    let f_val = ints.functional.clone().ok();
    let two_area = 2.0 * ints.area;
    let left = f_val.map(|f| ints.energy - f);
    let right = f_val.map(|f| f - two_area);

    let floor_e = ROUNDOFF * ints.abs_energy;
    let floor_a = ROUNDOFF * 2.0 * ints.abs_area;
    let floor_f = f_val.map_or(0.0, |f| ROUNDOFF * f.abs());
    let mut errs = ErrorEstimates {
        energy: floor_e,
        functional_f: floor_f,
        two_area: floor_a,
        left_margin: floor_e + floor_f,
        right_margin: floor_f + floor_a,
        richardson: false,
    };
    let mut extrapolated = None;
    if let Some((cres, c)) = &coarse_ints {
        let ratio = fine.resolution() as f64 / *cres as f64;
        let rich = |f: f64, c: f64| richardson(f, c, ratio, 2.0);
        let re = rich(ints.energy, c.energy);
        let ra = rich(two_area, 2.0 * c.area);
        let cf = c.functional.clone().ok();
        let rf = match (f_val, cf) {
            (Some(f), Some(cf)) if f.is_finite() && cf.is_finite() => Some(rich(f, cf)),
            _ => None,
        };
        errs.energy += re.error_estimate;
        errs.two_area += ra.error_estimate;
        if let (Some(rf), Some(cf)) = (rf, cf) {
            errs.functional_f += rf.error_estimate;
            errs.left_margin += rich(left.unwrap(), c.energy - cf).error_estimate;
            errs.right_margin += rich(right.unwrap(), cf - 2.0 * c.area).error_estimate;
        }
        errs.richardson = true;
        extrapolated = Some(Extrapolated {
            coarse_resolution: *cres,
            energy: re.extrapolated,
            functional_f: match rf {
                Some(r) => Some(r.extrapolated),
                None => f_val.filter(|f| f.is_infinite()),
            },
            two_area: ra.extrapolated,
        });
    }

    let stats = |sel: fn(&PointReport) -> Option<f64>| {
        ResidualStats::from_values(points.points.iter().filter_map(sel))
    };
    let angles: Vec<f64> = points
        .points
        .iter()
        .filter(|p| !p.masked())
        .filter_map(|p| p.sin2theta)
        .collect();
    let sin2theta_stats = (!angles.is_empty()).then(|| AngleStats {
        count: angles.len(),
        min: angles.iter().copied().fold(f64::INFINITY, f64::min),
        mean: angles.iter().sum::<f64>() / angles.len() as f64,
    });

    let mut class_histogram: BTreeMap<String, usize> = PointClass::ALL
        .iter()
        .map(|c| (c.as_str().to_string(), 0))
        .collect();
    class_histogram.insert("Unclassified".into(), 0);
    for p in &points.points {
        let key = p.class.map_or("Unclassified", PointClass::as_str);
        *class_histogram.get_mut(key).unwrap() += 1;
    }

    let masked_fraction = class_fraction(&points, |p| {
        p.mask.is_some() && p.mask != Some(MaskReason::Flat)
    });
    let flat_fraction = class_fraction(&points, |p| p.mask == Some(MaskReason::Flat));
    let positive_curvature_fraction = positive_curvature_fraction(&points);
    let max_laplacian_residual = fine
        .nodes
        .iter()
        .map(|n| n.jet.laplacian().norm())
        .fold(0.0, f64::max);

    let verdict = match &ints.functional {
        Err(FunctionalError::NormalSpaceAmbiguous { .. }) => {
            Verdict::Undefined("ambiguous normal space".into())
        }
        Err(FunctionalError::UndefinedOnPositiveCurvature { .. }) => {
            Verdict::Undefined("positive curvature locus".into())
        }
        Ok(f) if f.is_infinite() => Verdict::Undefined("ruled locus".into()),
        Ok(_) if masked_fraction > thr.masked_limit => {
            Verdict::Undefined("masked fraction above limit".into())
        }
        Ok(_) => {
            let (l, r) = (left.unwrap(), right.unwrap());
            if l < -errs.left_margin || r < -errs.right_margin {
                Verdict::ChainViolated
            } else {
                Verdict::ChainHolds
            }
        }
    };

    VerificationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        case,
        resolution: fine.resolution(),
        curvature_scale: points.scale,
        energy: ints.energy,
        functional_f: f_val,
        two_area,
        left_margin: left,
        right_margin: right,
        error_estimates: errs,
        extrapolated,
        eq9_residual_stats: stats(|p| p.eq9_residual),
        eq10_residual_stats: stats(|p| p.eq10_residual),
        sin2theta_stats,
        class_histogram,
        point_count: points.points.len(),
        masked_fraction,
        flat_fraction,
        excluded_area_fraction: fine.excluded_area_fraction,
        positive_curvature_fraction,
        max_laplacian_residual,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{AnalyticFamily, Family};
    use approx::assert_relative_eq;

    fn field(fam: Family, res: usize) -> JetField {
        AnalyticFamily::new(fam)
            .sample_grid(res, Exec::Sequential)
            .unwrap()
    }

    fn info(fam: Family) -> CaseInfo {
        CaseInfo {
            name: fam.name().into(),
            source: "analytic".into(),
            params: fam.params(),
            harmonic_asserted: fam.is_harmonic(),
            conformal: fam.is_conformal(),
            minimal_image: fam.is_minimal_image(),
            degree_one: true,
        }
    }

    fn report(fam: Family, res: usize) -> VerificationReport {
        let fine = field(fam, res);
        let coarse = field(fam, res / 2);
        verify_chain(
            info(fam),
            &fine,
            Some(&coarse),
            &Thresholds::default(),
            Exec::Sequential,
        )
    }

    #[test]
    fn planar_integrals() {
        let id = field(Family::IdentityPlane, 8);
        assert_relative_eq!(dirichlet_energy(&id), 2.0, max_relative = 1e-14);
        assert_relative_eq!(image_area(&id), 1.0, max_relative = 1e-14);
        let pts = evaluate_points(&id, &Thresholds::default(), Exec::Sequential);
        assert_relative_eq!(
            curvature_functional(&pts, &Thresholds::default()).unwrap(),
            2.0,
            max_relative = 1e-14
        );

        let aff = field(Family::AffinePlane { p: 2.0, q: 1.0 }, 8);
        assert_relative_eq!(dirichlet_energy(&aff), 5.0, max_relative = 1e-14);
        assert_relative_eq!(image_area(&aff), 2.0, max_relative = 1e-14);
        let pts = evaluate_points(&aff, &Thresholds::default(), Exec::Sequential);
        assert_relative_eq!(
            curvature_functional(&pts, &Thresholds::default()).unwrap(),
            4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn affine_three_one_margins() {
        let r = report(Family::AffinePlane { p: 3.0, q: 1.0 }, 16);
        assert_relative_eq!(r.left_margin.unwrap(), 4.0, max_relative = 1e-12);
        assert!(r.right_margin.unwrap().abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::ChainHolds);
        assert_eq!(r.flat_fraction, 1.0);
        assert_eq!(r.masked_fraction, 0.0);
    }

    #[test]
    fn catenoid_pointwise_identities() {
        let fam = Family::Catenoid;
        let pts = evaluate_points(&field(fam, 32), &Thresholds::default(), Exec::Sequential);
        for p in &pts.points {
            assert!(!p.masked());
            assert!(p.eq9_residual.unwrap() < 1e-8);
            assert!(p.eq10_residual.unwrap() < 1e-8);
            assert!((p.sin2theta.unwrap() - 1.0).abs() < 1e-8);
            assert!((p.factor.unwrap() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn saddle_origin_point_balances() {
        let fam = AnalyticFamily::new(Family::SaddleGraph);
        let f = fam.sample_grid(8, Exec::Sequential).unwrap();
        let pts = evaluate_points(&f, &Thresholds::default(), Exec::Sequential);
        let origin = pts
            .points
            .iter()
            .find(|p| p.param.u == 0.0 && p.param.v == 0.0)
            .unwrap();
        assert_eq!(origin.a, Some(1.0));
        assert_eq!(origin.b, Some(1.0));
        assert!(origin.eq9_residual.unwrap() < 1e-14);
    }

    #[test]
    fn radial_family_has_orthogonal_pullbacks() {
        let r = report(
            Family::Radial {
                alpha: 1.0,
                beta: 0.5,
                gamma: 1.0,
            },
            32,
        );
        let s = r.sin2theta_stats.unwrap();
        assert!(s.min > 1.0 - 1e-8);
        assert!(r.eq10_residual_stats.unwrap().max < 1e-8);
        assert!(r.left_margin.unwrap().abs() < 1e-10 * r.energy);
        assert!(r.right_margin.unwrap() > r.error_estimates.right_margin);
        assert_eq!(r.verdict, Verdict::ChainHolds);
    }

    #[test]
    fn negative_controls_break_identities() {
        let r = report(Family::StretchedCatenoid { lambda: 2.0 }, 16);
        assert_relative_eq!(
            r.eq9_residual_stats.as_ref().unwrap().max,
            0.6,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            r.eq10_residual_stats.as_ref().unwrap().max,
            0.2,
            max_relative = 1e-10
        );

        let s = report(Family::SpherePatch { radius: 1.0 }, 16);
        assert_eq!(
            s.verdict,
            Verdict::Undefined("positive curvature locus".into())
        );
        assert!(s.functional_f.is_none());
        assert!(s.eq9_residual_stats.unwrap().max > 0.1);
    }

    #[test]
    fn cylinder_is_ruled() {
        let r = report(Family::Cylinder { radius: 1.0 }, 16);
        assert_eq!(r.functional_f, Some(f64::INFINITY));
        assert_eq!(r.verdict, Verdict::Undefined("ruled locus".into()));
    }

    #[test]
    fn residual_stats_quantiles() {
        let s = ResidualStats::from_values((1..=100).map(f64::from)).unwrap();
        assert_eq!((s.max, s.q50, s.q90, s.q99), (100.0, 50.0, 90.0, 99.0));
        assert_eq!(s.mean, 50.5);
        assert!(ResidualStats::from_values(std::iter::empty()).is_none());
    }

    #[test]
    fn thresholds_validation() {
        assert!(Thresholds::default().validate().is_ok());
        let t = Thresholds {
            masked_limit: 0.0,
            ..Thresholds::default()
        };
        assert!(t.validate().is_err());
    }
}
