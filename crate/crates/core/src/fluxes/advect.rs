//! Upwind interface reconstruction and cut-face flux interpolation.

/// Interface value between `q[1]` and `q[2]` from the four values
/// `q = [q_{i-2}, q_{i-1}, q_i, q_{i+1}]`. Third-order upwind biased by the
/// sign of `vel`; second-order centered when `fallback` is set.
#[inline]
pub fn advect_interface_value(q: [f64; 4], vel: f64, fallback: bool) -> f64 {
    let [qm2, qm1, q0, qp1] = q;
    if fallback {
        return 0.5 * (q0 + qm1);
    }
    let s = if vel > 0.0 {
        1.0
    } else if vel < 0.0 {
        -1.0
    } else {
        0.0
    };
    7.0 / 12.0 * (q0 + qm1) - 1.0 / 12.0 * (qp1 + qm2) + s / 12.0 * ((qp1 - qm2) - 3.0 * (q0 - qm1))
}

/// Bilinear weights for the four faces `[f, f + s_b, f + s_c, f + s_b + s_c]`
/// surrounding a cut-face centroid at in-plane offsets `gamma`, where `s` is
/// the sign of each offset. Faces flagged unavailable are dropped and the
/// rest renormalized; `None` when no weight survives.
pub fn bilinear_weights(gamma: [f64; 2], available: [bool; 4]) -> Option<[f64; 4]> {
    let (gb, gc) = (gamma[0].abs(), gamma[1].abs());
    let mut w = [(1.0 - gb) * (1.0 - gc), gb * (1.0 - gc), gc * (1.0 - gb), gb * gc];
    let mut sum = 0.0;
    for k in 0..4 {
        if !available[k] {
            w[k] = 0.0;
        }
        sum += w[k];
    }
    if sum <= 0.0 {
        return None;
    }
    if sum != 1.0 {
        for v in w.iter_mut() {
            *v /= sum;
        }
    }
    Some(w)
}

/// Bilinear interpolation of provisional face fluxes to a cut-face centroid.
pub fn interpolate_flux_to_cut_centroid(f: [f64; 4], gamma: [f64; 2], available: [bool; 4]) -> f64 {
    match bilinear_weights(gamma, available) {
        Some(w) => w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3],
        None => f[0],
    }
}
