//! Composite trapezoid weights and Richardson error estimates.

/// Trapezoid weights for nodes `first..=last` of a uniform axis with
/// spacing `h`. A periodic axis covering its full period gets equal weights.
pub fn trapezoid_weights(count: usize, h: f64, periodic: bool) -> Vec<f64> {
    let mut w = vec![h; count];
    if !periodic && count >= 2 {
        w[0] = 0.5 * h;
        w[count - 1] = 0.5 * h;
    }
    w
}

/// Richardson pairing of a fine and a coarse value obtained with refinement
/// ratio `ratio` by a method of order `order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Richardson {
    pub extrapolated: f64,
    pub error_estimate: f64,
}

pub fn richardson(fine: f64, coarse: f64, ratio: f64, order: f64) -> Richardson {
    let denom = ratio.powf(order) - 1.0;
    let delta = (fine - coarse) / denom;
    Richardson {
        extrapolated: fine + delta,
        error_estimate: delta.abs(),
    }
}

/// Observed order between consecutive refinements: `log(e_k/e_{k+1}) / log(h_k/h_{k+1})`.
pub fn pairwise_orders(spacings: &[f64], errors: &[f64]) -> Vec<f64> {
    spacings
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fitted_order(spacings: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
