//! Reference values for the convergence study.

use harmap_core::{AnalyticFamily, DomainShape, Family};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Exact(f64),
    /// Richardson value from the same quadrature at 2x and 4x the finest
    /// requested resolution.
    SelfReference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracles {
    pub energy: Oracle,
    pub area: Oracle,
    pub functional_f: Oracle,
}

/// `∫_a^b f` by composite Simpson with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Image area of the radial family over the annulus `r_min < r < r_max`.
pub fn radial_area(alpha: f64, beta: f64, gamma: f64, r_min: f64, r_max: f64) -> f64 {
    let integrand = |r: f64| {
        let big_r = alpha * r + beta / r;
        let dr = alpha - beta / (r * r);
        big_r.abs() * (dr * dr + gamma * gamma / (r * r)).sqrt()
    };
    std::f64::consts::TAU * simpson(integrand, r_min, r_max, 1 << 14)
}

pub fn radial_energy(alpha: f64, beta: f64, gamma: f64, r_min: f64, r_max: f64) -> f64 {
    let (a2, b2) = (r_max * r_max, r_min * r_min);
    let r2 = alpha * alpha * (a2 - b2) + beta * beta * (1.0 / b2 - 1.0 / a2);
    std::f64::consts::TAU * (r2 + gamma * gamma * (r_max / r_min).ln())
}

/// Registered oracles, or `None` when the family/domain pair has none.
pub fn oracles(fam: &AnalyticFamily) -> Option<Oracles> {
    let is_default = fam.domain == fam.family.default_domain();
    let exact = |e: f64, a: f64, f: f64| Oracles {
        energy: Oracle::Exact(e),
        area: Oracle::Exact(a),
        functional_f: Oracle::Exact(f),
    };
    match (fam.family, fam.domain.shape) {
        (Family::IdentityPlane, DomainShape::Rectangle { .. }) => {
            let d = fam.domain.area();
            Some(exact(2.0 * d, d, 2.0 * d))
        }
        (Family::AffinePlane { p, q }, DomainShape::Rectangle { .. }) => {
            let d = fam.domain.area();
            Some(exact(
                (p * p + q * q) * d,
                (p * q).abs() * d,
                2.0 * (p * q).abs() * d,
            ))
        }
        (Family::Catenoid | Family::Helicoid, _) if is_default => {
            // ∫_{-1}^{1} cosh^2 v dv = 1 + sinh(2)/2
            let c = 1.0 + 2f64.sinh() / 2.0;
            let tau = std::f64::consts::TAU;
            Some(exact(2.0 * tau * c, tau * c, 2.0 * tau * c))
        }
        (Family::Enneper, _) if is_default => {
            Some(exact(1064.0 / 45.0, 532.0 / 45.0, 1064.0 / 45.0))
        }
        (Family::SaddleGraph, _) if is_default => Some(Oracles {
            energy: Oracle::Exact(56.0 / 3.0),
            area: Oracle::SelfReference,
            functional_f: Oracle::SelfReference,
        }),
        (Family::Radial { alpha, beta, gamma }, DomainShape::Annulus { r_min, r_max }) => {
            let e = radial_energy(alpha, beta, gamma, r_min, r_max);
            Some(exact(e, radial_area(alpha, beta, gamma, r_min, r_max), e))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn radial_energy_default() {
        let e = radial_energy(1.0, 0.5, 1.0, 1.0, 2.0);
        let expect = std::f64::consts::TAU * (3.0 + 0.75 * 0.25 + 2f64.ln());
        assert!((e - expect).abs() < 1e-13 * expect);
    }

    #[test]
    fn radial_area_planar_limit() {
        // alpha=1, beta=gamma=0 is the identity on the annulus
        let a = radial_area(1.0, 0.0, 0.0, 1.0, 2.0);
        assert!((a - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn no_oracle_for_controls() {
        assert!(oracles(&AnalyticFamily::new(Family::Cylinder { radius: 1.0 })).is_none());
        assert!(oracles(&AnalyticFamily::new(Family::SpherePatch { radius: 1.0 })).is_none());
    }
}
