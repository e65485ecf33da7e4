//! Weighted least-squares gradients at embedded-boundary facets.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitOrder {
    Quadratic,
    Linear,
    Zero,
}

/// Linear map from stencil values to the gradient at the evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientWeights {
    pub order: FitOrder,
    /// Per stencil point, the contribution to `∂/∂x_d` per unit value.
    pub weights: Vec<[f64; 3]>,
}

impl GradientWeights {
    pub fn apply(&self, values: impl Iterator<Item = f64>) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (w, v) in self.weights.iter().zip(values) {
            for d in 0..3 {
                g[d] += w[d] * v;
            }
        }
        g
    }
}

const RCOND: f64 = 1e-10;

fn basis(s: [f64; 3], quadratic: bool, constant: bool, row: &mut Vec<f64>) {
    row.clear();
    if constant {
        row.push(1.0);
    }
    row.extend_from_slice(&s);
    if quadratic {
        row.extend_from_slice(&[s[0] * s[0], s[1] * s[1], s[2] * s[2], s[0] * s[1], s[0] * s[2], s[1] * s[2]]);
    }
}

fn try_fit(scaled: &[[f64; 3]], sqrt_w: &[f64], quadratic: bool, constant: bool) -> Option<DMatrix<f64>> {
    let k = (constant as usize) + if quadratic { 9 } else { 3 };
    let m = scaled.len();
    if m < k {
        return None;
    }
    let mut row = Vec::with_capacity(k);
    let mut a = DMatrix::zeros(m, k);
    for (i, s) in scaled.iter().enumerate() {
        basis(*s, quadratic, constant, &mut row);
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = v * sqrt_w[i];
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < RCOND {
        return None;
    }
    let u = svd.u?;
    let vt = svd.v_t?;
    // pinv = V Σ⁻¹ Uᵀ, only the gradient rows are needed
    let mut sinv = DMatrix::zeros(k, k);
    for j in 0..k {
        sinv[(j, j)] = 1.0 / svd.singular_values[j];
    }
    Some(vt.transpose() * sinv * u.transpose())
}

fn scaled_offsets(offsets: &[[f64; 3]], dx: [f64; 3]) -> Vec<[f64; 3]> {
    offsets.iter().map(|o| [o[0] / dx[0], o[1] / dx[1], o[2] / dx[2]]).collect()
}

/// Gradient weights of a least-squares fit of the given order, or `None`
/// when the stencil cannot support it. Points are weighted by inverse
/// squared distance when `weighted` is set.
pub fn fit_gradient(
    offsets: &[[f64; 3]],
    dx: [f64; 3],
    constrained: bool,
    order: FitOrder,
    weighted: bool,
) -> Option<Vec<[f64; 3]>> {
    let scaled = scaled_offsets(offsets, dx);
    let sqrt_w: Vec<f64> = scaled
        .iter()
        .map(|s| if weighted { 1.0 / (s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + 1e-12).sqrt() } else { 1.0 })
        .collect();
    let constant = !constrained;
    let quadratic = match order {
        FitOrder::Quadratic => true,
        FitOrder::Linear => false,
        FitOrder::Zero => return Some(vec![[0.0; 3]; offsets.len()]),
    };
    let pinv = try_fit(&scaled, &sqrt_w, quadratic, constant)?;
    let first = constant as usize;
    Some((0..scaled.len()).map(|i| [0, 1, 2].map(|d| pinv[(first + d, i)] * sqrt_w[i] / dx[d])).collect())
}

/// Largest noise gain of an accepted quadratic fit, in cell units.
const MAX_GAIN: f64 = 30.0;

/// Σ|w|·Δ over points and directions.
fn gain(weights: &[[f64; 3]], dx: [f64; 3]) -> f64 {
    weights.iter().map(|w| (0..3).map(|d| w[d].abs() * dx[d]).sum::<f64>()).sum()
}

/// Least-squares gradient weights at the origin of `offsets` (point minus
/// evaluation location, physical units). `constrained` fits through a known
/// value at the evaluation point, so the stencil values must be given
/// relative to it. Points are weighted by inverse squared distance; the fit
/// degrades from quadratic to linear to zero as the stencil allows, and a
/// quadratic whose gain exceeds `MAX_GAIN` is replaced by the linear fit.
pub fn gradient_weights(offsets: &[[f64; 3]], dx: [f64; 3], constrained: bool) -> GradientWeights {
    if let Some(weights) = fit_gradient(offsets, dx, constrained, FitOrder::Quadratic, true) {
        if gain(&weights, dx) <= MAX_GAIN {
            return GradientWeights { order: FitOrder::Quadratic, weights };
        }
    }
    if let Some(weights) = fit_gradient(offsets, dx, constrained, FitOrder::Linear, true) {
        return GradientWeights { order: FitOrder::Linear, weights };
    }
    GradientWeights { order: FitOrder::Zero, weights: vec![[0.0; 3]; offsets.len()] }
}

/// Gradient at `at` of the least-squares fit to `values` at `points`. A
/// `wall_value` is interpolated exactly at `at`.
pub fn eb_gradient_least_squares(
    values: &[f64],
    points: &[[f64; 3]],
    at: [f64; 3],
    dx: [f64; 3],
    wall_value: Option<f64>,
) -> ([f64; 3], FitOrder) {
    let offsets: Vec<[f64; 3]> = points.iter().map(|p| [p[0] - at[0], p[1] - at[1], p[2] - at[2]]).collect();
    let gw = gradient_weights(&offsets, dx, wall_value.is_some());
    let shift = wall_value.unwrap_or(0.0);
    (gw.apply(values.iter().map(|v| v - shift)), gw.order)
}
