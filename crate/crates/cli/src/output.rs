//! CSV writers.

use harmap_core::functionals::PointField;
use std::fmt::Write as _;

pub const FIELD_COLUMNS: [&str; 13] = [
    "u",
    "v",
    "class",
    "energy_density",
    "area_element",
    "factor",
    "sin2theta",
    "a",
    "b",
    "eq9_residual",
    "eq10_residual",
    "masked",
    "mask_reason",
];

/// Shortest round-trip decimal; `inf`/`-inf`/`nan` for non-finite values.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn csv_line(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// Pointwise dump in the fixed [`FIELD_COLUMNS`] order; missing values are empty.
pub fn fields_csv(points: &PointField) -> String {
    let mut out = FIELD_COLUMNS.join(",");
    out.push('\n');
    for p in &points.points {
        let _ = write!(
            out,
            "{}",
            csv_line(&[
                real(p.param.u),
                real(p.param.v),
                p.class.map(|c| c.as_str().to_string()).unwrap_or_default(),
                real(p.energy_density),
                real(p.area_element),
                opt_real(p.factor),
                opt_real(p.sin2theta),
                opt_real(p.a),
                opt_real(p.b),
                opt_real(p.eq9_residual),
                opt_real(p.eq10_residual),
                p.masked().to_string(),
                p.mask.map(|m| m.as_str().to_string()).unwrap_or_default(),
            ])
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use harmap_core::functionals::evaluate_points;
    use harmap_core::{AnalyticFamily, Exec, Family, Thresholds};

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -3.25e-17, 1e300, 2.0f64.sqrt()] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(f64::INFINITY), "inf");
    }

    #[test]
    fn field_dump_shape() {
        let field = AnalyticFamily::new(Family::Cylinder { radius: 1.0 })
            .sample_grid(8, Exec::Sequential)
            .unwrap();
        let pts = evaluate_points(&field, &Thresholds::default(), Exec::Sequential);
        let csv = fields_csv(&pts);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), FIELD_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), FIELD_COLUMNS.len());
        assert_eq!(row[2], "Ruled");
        assert_eq!(row[5], "inf");
        assert_eq!(row[11], "true");
        assert_eq!(row[12], "ruled");
        assert_eq!(csv.lines().count(), 1 + pts.points.len());
    }
}
