//! Exact solutions, probe series, spectra and error norms.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};

/// Potential flow past a sphere of radius `a` in a stream `u_inf` along +x:
/// `(u_r, u_θ)` at distance `r` and polar angle `polar`, measured from the
/// upstream axis.
pub fn exact_hemisphere_velocity(r: f64, polar: f64, a: f64, u_inf: f64) -> Result<(f64, f64)> {
    if !(r >= a) || !(a > 0.0) {
        return Err(Error::Domain(format!("exact solution needs r >= a > 0, got r = {r}, a = {a}")));
    }
    let s = (a / r).powi(3);
    Ok((-u_inf * (1.0 - s) * polar.cos(), u_inf * (1.0 + 0.5 * s) * polar.sin()))
}

/// Spherical position `(r, polar)` of the offset `d` from the sphere center,
/// with the unit vectors `r̂` and `θ̂` in Cartesian components.
pub fn spherical_frame(d: [f64; 3]) -> (f64, f64, [f64; 3], [f64; 3]) {
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let rhat = d.map(|v| v / r);
    // polar axis points upstream
    let cos = -rhat[0];
    let polar = cos.clamp(-1.0, 1.0).acos();
    let sin = polar.sin();
    let that = if sin > 1e-15 {
        // θ̂ = (cos θ r̂ − e_p) / sin θ with e_p = −x̂
        [(cos * rhat[0] + 1.0) / sin, cos * rhat[1] / sin, cos * rhat[2] / sin]
    } else {
        [0.0, 0.0, 1.0]
    };
    (r, polar, rhat, that)
}

pub fn spherical_to_cartesian(ur: f64, ut: f64, rhat: [f64; 3], that: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| ur * rhat[i] + ut * that[i])
}

pub fn cartesian_to_spherical(u: [f64; 3], rhat: [f64; 3], that: [f64; 3]) -> (f64, f64) {
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    (dot(u, rhat), dot(u, that))
}

/// Exact Cartesian velocity at `x` around a sphere centered at `center`.
pub fn exact_hemisphere_cartesian(x: [f64; 3], center: [f64; 3], a: f64, u_inf: f64) -> Result<[f64; 3]> {
    let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
    let (r, polar, rhat, that) = spherical_frame(d);
    let (ur, ut) = exact_hemisphere_velocity(r, polar, a, u_inf)?;
    Ok(spherical_to_cartesian(ur, ut, rhat, that))
}

/// Time series of one variable at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub location: [f64; 3],
    pub variable: String,
    pub samples: Vec<(f64, f64)>,
}

impl ProbeSeries {
    pub fn new(location: [f64; 3], variable: impl Into<String>) -> Self {
        ProbeSeries { location, variable: variable.into(), samples: Vec::new() }
    }

    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if !(t > last) {
                return Err(Error::InvalidInput(format!("probe times must increase: {t} after {last}")));
            }
        }
        self.samples.push((t, value));
        Ok(())
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,{}", self.variable)?;
        for (t, v) in &self.samples {
            writeln!(out, "{t:.10e},{v:.10e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub frequency: f64,
    pub bin_width: f64,
}

/// Frequency of the strongest non-zero bin of the Hann-windowed power
/// spectrum of the samples after `spin_up`, resampled to a uniform step.
pub fn dominant_frequency(series: &ProbeSeries, spin_up: f64) -> Result<Spectrum> {
    let s: Vec<(f64, f64)> = series.samples.iter().copied().filter(|(t, _)| *t >= spin_up).collect();
    let n = s.len();
    if n < 64 {
        return Err(Error::InvalidInput(format!("spectrum needs at least 64 samples after spin-up, got {n}")));
    }
    let (t0, t1) = (s[0].0, s[n - 1].0);
    let dt = (t1 - t0) / (n - 1) as f64;
    let mut values = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        while j + 2 < n && s[j + 1].0 < t {
            j += 1;
        }
        let (ta, va) = s[j];
        let (tb, vb) = s[(j + 1).min(n - 1)];
        let w = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
        values.push(va + w * (vb - va));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-14 * mean.abs().max(1.0)) {
        return Err(Error::InvalidInput("spectrum of a constant series is undefined".into()));
    }
    let windowed: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - mean) * (0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect();
    let mut best = (0usize, -1.0);
    for k in 1..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in windowed.iter().enumerate() {
            let ph = -2.0 * PI * (k * i) as f64 / n as f64;
            re += v * ph.cos();
            im += v * ph.sin();
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (k, power);
        }
    }
    let width = 1.0 / (n as f64 * dt);
    Ok(Spectrum { frequency: best.0 as f64 * width, bin_width: width })
}

pub fn strouhal(frequency: f64, length: f64, u_inf: f64) -> f64 {
    frequency * length / u_inf
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// `α`-weighted root-mean-square error.
    pub l2: f64,
    pub linf: f64,
    /// L2 error relative to the L2 norm of the exact values.
    pub relative_l2: f64,
    pub samples: usize,
}

impl ErrorReport {
    pub fn write(&self, out: &mut dyn Write, prefix: &str) -> std::io::Result<()> {
        writeln!(out, "{prefix}l2={:.6e}", self.l2)?;
        writeln!(out, "{prefix}linf={:.6e}", self.linf)?;
        writeln!(out, "{prefix}relative_l2={:.6e}", self.relative_l2)?;
        writeln!(out, "{prefix}samples={}", self.samples)
    }
}

/// Error norms over `(position, numerical value, α)` samples; covered samples
/// (α = 0) are skipped.
pub fn error_norms(samples: &[([f64; 3], f64, f64)], exact: impl Fn([f64; 3]) -> f64) -> Result<ErrorReport> {
    let (mut w, mut e2, mut x2, mut linf, mut count) = (0.0, 0.0, 0.0, 0.0f64, 0);
    for &(x, value, alpha) in samples {
        if alpha <= 0.0 {
            continue;
        }
        let ex = exact(x);
        let err = value - ex;
        w += alpha;
        e2 += alpha * err * err;
        x2 += alpha * ex * ex;
        linf = linf.max(err.abs());
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("error norms over an empty region".into()));
    }
    let relative_l2 = if x2 > 0.0 { (e2 / x2).sqrt() } else { f64::INFINITY };
    Ok(ErrorReport { l2: (e2 / w).sqrt(), linf, relative_l2, samples: count })
}
