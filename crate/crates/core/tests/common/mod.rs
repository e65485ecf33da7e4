#![allow(dead_code)]

use ebflow::geometry::ImplicitSurface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth surface periodic on the box `[0, len]^3`: a constant level plus a
/// few low-wavenumber modes.
#[derive(Debug, Clone)]
pub struct WavySurface {
    pub len: f64,
    pub level: f64,
    pub modes: Vec<([f64; 3], f64, f64)>,
    /// When set, the surface is a height field `z - h(x, y)`.
    pub height_field: bool,
}

impl ImplicitSurface for WavySurface {
    fn value(&self, p: [f64; 3]) -> f64 {
        let tau = std::f64::consts::TAU / self.len;
        let mut s = self.level;
        for (k, amp, ph) in &self.modes {
            s += amp * (tau * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2]) + ph).sin();
        }
        if self.height_field {
            p[2] - s
        } else {
            s
        }
    }
}

pub fn random_periodic_surface(seed: u64, len: f64) -> WavySurface {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_modes = rng.gen_range(1..=3);
    let mut modes = Vec::new();
    for _ in 0..n_modes {
        let k = [rng.gen_range(0..=1) as f64, rng.gen_range(0..=1) as f64, rng.gen_range(1..=2) as f64];
        modes.push((k, rng.gen_range(0.1..0.3) * len * 0.2, rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    WavySurface { len, level: rng.gen_range(-0.1..0.1) * len, modes, height_field: false }
}

pub fn random_height_field(seed: u64, len: f64) -> WavySurface {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let k = [rng.gen_range(0..=2) as f64, rng.gen_range(0..=2) as f64, 0.0];
        modes.push((k, rng.gen_range(0.02..0.08) * len, rng.gen_range(0.0..std::f64::consts::TAU)));
    }
    WavySurface { len, level: rng.gen_range(0.3..0.6) * len, modes, height_field: true }
}

/// Volume of `{x in box : n·x <= d}` for the box `[lo, lo + size]`.
pub fn box_below_plane(n: [f64; 3], d: f64, lo: [f64; 3], size: [f64; 3]) -> f64 {
    // move to the box frame and reflect so every active component is positive
    let mut d = d - (0..3).map(|a| n[a] * lo[a]).sum::<f64>();
    let mut nn = n;
    for a in 0..3 {
        if nn[a] < 0.0 {
            d -= nn[a] * size[a];
            nn[a] = -nn[a];
        }
    }
    // zero-extent axes (a face) only contribute through the shift above
    let active: Vec<usize> = (0..3).filter(|&a| nn[a] > 0.0 && size[a] > 0.0).collect();
    let passive: f64 = (0..3).filter(|a| nn[*a] == 0.0 && size[*a] > 0.0).map(|a| size[a]).product();
    let k = active.len();
    if k == 0 {
        return if d >= 0.0 { passive } else { 0.0 };
    }
    let fact = [1.0, 1.0, 2.0, 6.0][k];
    let denom: f64 = active.iter().map(|&a| nn[a]).product::<f64>() * fact;
    let mut s = 0.0;
    for mask in 0..(1usize << k) {
        let mut dot = 0.0;
        for (bit, &a) in active.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                dot += nn[a] * size[a];
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * (d - dot).max(0.0).powi(k as i32);
    }
    passive * s / denom
}

/// Kuhn-tetrahedron linear interpolant of corner values at local point `u ∈ [0,1]^3`.
pub fn kuhn_interpolate(phi: &[f64; 8], u: [f64; 3]) -> f64 {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| u[b].partial_cmp(&u[a]).unwrap());
    let mut bits = 0usize;
    let mut value = phi[0] * (1.0 - u[order[0]]);
    for s in 0..3 {
        bits |= 1 << order[s];
        let next = if s < 2 { u[order[s + 1]] } else { 0.0 };
        value += phi[bits] * (u[order[s]] - next);
    }
    value
}
