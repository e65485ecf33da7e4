//! Thermodynamics, hydrostatic background, buoyancy and viscous stress.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Layout};

mod primitives;
pub use primitives::{primitives, Primitives};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidConstants {
    /// Dry gas constant, J/(kg K).
    pub r_d: f64,
    /// Specific heat at constant pressure, J/(kg K).
    pub cp: f64,
    /// Reference pressure, Pa.
    pub p00: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Dynamic viscosity, kg/(m s).
    pub mu: f64,
    /// Use λ = −2/3 μ instead of +2/3 μ.
    pub stokes_lambda_sign: bool,
    /// Thermal diffusivity, m²/s.
    pub alpha_theta: f64,
}

impl Default for FluidConstants {
    fn default() -> Self {
        FluidConstants {
            r_d: 287.0,
            cp: 1004.5,
            p00: 1.0e5,
            g: 9.81,
            mu: 0.0,
            stokes_lambda_sign: false,
            alpha_theta: 0.0,
        }
    }
}

impl FluidConstants {
    #[inline]
    pub fn cv(&self) -> f64 {
        self.cp - self.r_d
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.cp / self.cv()
    }

    /// Second viscosity coefficient for dynamic viscosity `mu`.
    #[inline]
    pub fn lambda(&self, mu: f64) -> f64 {
        if self.stokes_lambda_sign {
            -2.0 / 3.0 * mu
        } else {
            2.0 / 3.0 * mu
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.r_d) && self.r_d > 0.0 && ok(self.cp) && self.cp > self.r_d) {
            return Err(Error::InvalidInput("need 0 < R < cp".into()));
        }
        if !(self.gamma() > 1.0) {
            return Err(Error::InvalidInput("gamma must exceed 1".into()));
        }
        if !(ok(self.p00) && self.p00 > 0.0) {
            return Err(Error::InvalidInput("p00 must be positive".into()));
        }
        if !(ok(self.g) && self.g >= 0.0) {
            return Err(Error::InvalidInput("g must be non-negative".into()));
        }
        if !(ok(self.mu) && self.mu >= 0.0) {
            return Err(Error::InvalidInput("mu must be non-negative".into()));
        }
        if !(ok(self.alpha_theta) && self.alpha_theta >= 0.0) {
            return Err(Error::InvalidInput("alpha_theta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Pressure from the equation of state, `p = P00 (R ρθ / P00)^γ`.
pub fn eos_pressure(rho_theta: f64, c: &FluidConstants) -> Result<f64> {
    if !(rho_theta > 0.0) {
        return Err(Error::Domain(format!("equation of state needs rho*theta > 0, got {rho_theta}")));
    }
    Ok(eos_unchecked(rho_theta, c))
}

#[inline]
pub(crate) fn eos_unchecked(rho_theta: f64, c: &FluidConstants) -> f64 {
    c.p00 * (c.r_d * rho_theta / c.p00).powf(c.gamma())
}

/// Density at pressure `p` and potential temperature `theta`.
#[inline]
pub fn density_at(p: f64, theta: f64, c: &FluidConstants) -> f64 {
    c.p00 / (c.r_d * theta) * (p / c.p00).powf(1.0 / c.gamma())
}

/// Speed of sound.
#[inline]
pub fn sound_speed(p: f64, rho: f64, c: &FluidConstants) -> f64 {
    (c.gamma() * p / rho).sqrt()
}

/// Linear potential-temperature profile `surface + gradient·z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaProfile {
    pub surface: f64,
    #[serde(default)]
    pub gradient: f64,
}

impl ThetaProfile {
    pub fn constant(theta: f64) -> Self {
        ThetaProfile { surface: theta, gradient: 0.0 }
    }

    #[inline]
    pub fn at(&self, z: f64) -> f64 {
        self.surface + self.gradient * z
    }
}

/// Vertical background profiles at cell-center heights, indexed like the
/// third axis of a [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub lo: isize,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub dz: f64,
}

impl Background {
    #[inline]
    fn slot(&self, k: isize) -> usize {
        let s = k - self.lo;
        debug_assert!(s >= 0 && (s as usize) < self.rho.len());
        s as usize
    }

    #[inline]
    pub fn rho(&self, k: isize) -> f64 {
        self.rho[self.slot(k)]
    }

    #[inline]
    pub fn theta(&self, k: isize) -> f64 {
        self.theta[self.slot(k)]
    }

    #[inline]
    pub fn p(&self, k: isize) -> f64 {
        self.p[self.slot(k)]
    }

    #[inline]
    pub fn rho_theta(&self, k: isize) -> f64 {
        let s = self.slot(k);
        self.rho[s] * self.theta[s]
    }

    /// ρ₀ on the horizontal face below cell `k`.
    #[inline]
    pub fn rho_zface(&self, k: isize) -> f64 {
        let s = self.slot(k);
        if s == 0 {
            self.rho[0]
        } else {
            0.5 * (self.rho[s - 1] + self.rho[s])
        }
    }

    /// Largest `|Δp/Δz + g ρ_face|` between adjacent cells relative to `g ρ_face`.
    pub fn balance_residual(&self, g: f64) -> f64 {
        let mut worst = 0.0_f64;
        for s in 1..self.rho.len() {
            let rf = 0.5 * (self.rho[s - 1] + self.rho[s]);
            let r = (self.p[s] - self.p[s - 1]) / self.dz + g * rf;
            let scale = (g * rf).max(f64::MIN_POSITIVE);
            if g > 0.0 {
                worst = worst.max(r.abs() / scale);
            } else {
                worst = worst.max(r.abs() / self.p[s].abs().max(1.0));
            }
        }
        worst
    }
}

/// Solve `p + c·ρ(p, θ) = rhs` for `p` by Newton iteration; `c` may be negative.
fn solve_column(rhs: f64, cfac: f64, theta: f64, guess: f64, k: &FluidConstants) -> Result<f64> {
    let gamma = k.gamma();
    let mut p = guess;
    for _ in 0..50 {
        if !(p > 0.0) {
            break;
        }
        let rho = density_at(p, theta, k);
        let f = p + cfac * rho - rhs;
        let df = 1.0 + cfac * rho / (gamma * p);
        let step = f / df;
        p -= step;
        if step.abs() <= 1e-15 * p.abs() {
            break;
        }
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!("hydrostatic integration produced non-positive pressure {p}")));
    }
    Ok(p)
}

/// Discretely hydrostatic background with `p = P00` at the bottom of the grid.
pub fn hydrostatic_background(theta: ThetaProfile, c: &FluidConstants, grid: &GridSpec) -> Result<Background> {
    let layout = Layout::new(grid.n);
    let lo = layout.lo();
    let hi = layout.hi(2);
    let dz = grid.dx[2];
    let len = (hi - lo) as usize;
    let mut th = vec![0.0; len];
    for (s, v) in th.iter_mut().enumerate() {
        let k = lo + s as isize;
        let z = grid.origin[2] + (k as f64 + 0.5) * dz;
        *v = theta.at(z - grid.origin[2]);
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("background theta must be positive, got {v} at z={z}")));
        }
    }
    let mut p = vec![0.0; len];
    let mut rho = vec![0.0; len];
    let z0 = (0 - lo) as usize;
    let half = 0.5 * c.g * dz;

    // cell 0 sits half a cell above the surface
    p[z0] = solve_column(c.p00, half, th[z0], c.p00, c)?;
    rho[z0] = density_at(p[z0], th[z0], c);
    for s in z0 + 1..len {
        let rhs = p[s - 1] - half * rho[s - 1];
        p[s] = solve_column(rhs, half, th[s], p[s - 1], c)?;
        rho[s] = density_at(p[s], th[s], c);
    }
    for s in (0..z0).rev() {
        let rhs = p[s + 1] + half * rho[s + 1];
        p[s] = solve_column(rhs, -half, th[s], p[s + 1], c)?;
        rho[s] = density_at(p[s], th[s], c);
    }
    // store the pressure the equation of state returns so that p' vanishes on the background
    for s in 0..len {
        p[s] = eos_unchecked(rho[s] * th[s], c);
    }
    Ok(Background { lo, rho, theta: th, p, dz })
}

/// Compressible buoyancy on a horizontal face, `−g ρ'` averaged over the
/// adjacent fluid cells. `None` marks a covered neighbor.
#[inline]
pub fn buoyancy_compressible(g: f64, below: Option<f64>, above: Option<f64>) -> f64 {
    match (below, above) {
        (Some(a), Some(b)) => -g * 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => -g * a,
        (None, None) => 0.0,
    }
}

/// Anelastic buoyancy on a horizontal face, `g ρ₀ θ'/θ₀` averaged over the
/// adjacent fluid cells.
#[inline]
pub fn buoyancy_anelastic(g: f64, rho0_face: f64, below: Option<f64>, above: Option<f64>) -> f64 {
    let avg = match (below, above) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return 0.0,
    };
    g * rho0_face * avg
}

/// Face density from the adjacent cells: mean of the fluid neighbors, or
/// `fallback` when both are covered.
#[inline]
pub fn face_density(left: Option<f64>, right: Option<f64>, fallback: f64) -> f64 {
    match (left, right) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => fallback,
    }
}

/// `τ = λ(∇·u)I + μ(∇u + ∇uᵀ)` with `grad[a][d] = ∂u_a/∂x_d`.
pub fn stress_tensor(grad: &[[f64; 3]; 3], mu: f64, c: &FluidConstants) -> [[f64; 3]; 3] {
    let div = grad[0][0] + grad[1][1] + grad[2][2];
    let lam = c.lambda(mu);
    let mut tau = [[0.0; 3]; 3];
    for a in 0..3 {
        for d in 0..3 {
            tau[a][d] = mu * (grad[a][d] + grad[d][a]);
        }
        tau[a][a] += lam * div;
    }
    tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eos_unit_argument() {
        let c = FluidConstants::default();
        let p = eos_pressure(c.p00 / c.r_d, &c).unwrap();
        assert!((p - 1.0e5).abs() < 1e-9);
    }

    #[test]
    fn eos_doubled_argument() {
        let c = FluidConstants::default();
        let p = eos_pressure(2.0 * c.p00 / c.r_d, &c).unwrap();
        let expect = 1.0e5 * 2.0_f64.powf(1004.5 / 717.5);
        assert!((p - expect).abs() < 1e-6 * expect);
        assert!((p - 2.639e5).abs() < 1e2);
    }

    #[test]
    fn eos_rejects_non_positive() {
        let c = FluidConstants::default();
        assert!(matches!(eos_pressure(0.0, &c), Err(Error::Domain(_))));
        assert!(eos_pressure(-1.0, &c).is_err());
    }

    #[test]
    fn reference_pressure() {
        assert_eq!(FluidConstants::default().p00, 1.0e5);
        assert!((FluidConstants::default().gamma() - 1.4).abs() < 1e-12);
    }

    fn column(nz: usize, dz: f64) -> GridSpec {
        GridSpec::new([1, 1, nz], [1.0, 1.0, dz], [0.0; 3], [true, true, false]).unwrap()
    }

    #[test]
    fn no_gravity_uniform_background() {
        let c = FluidConstants { g: 0.0, ..Default::default() };
        let b = hydrostatic_background(ThetaProfile::constant(300.0), &c, &column(8, 10.0)).unwrap();
        for s in 0..b.p.len() {
            assert!((b.p[s] - 1.0e5).abs() < 1e-9);
            assert!((b.rho[s] - b.rho[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn pressure_decreases_with_height() {
        let c = FluidConstants::default();
        let b = hydrostatic_background(ThetaProfile::constant(300.0), &c, &column(16, 50.0)).unwrap();
        assert!(b.p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn two_cell_balance() {
        let c = FluidConstants::default();
        let b = hydrostatic_background(ThetaProfile::constant(300.0), &c, &column(2, 25.0)).unwrap();
        // residual of the face balance between cells 0 and 1 evaluated by hand
        let dz = 25.0;
        let r = (b.p(1) - b.p(0)) / dz + c.g * 0.5 * (b.rho(0) + b.rho(1));
        assert!(r.abs() < 1e-10 * c.g * b.rho(0));
        // surface condition over the half cell below cell 0
        let s = b.p(0) + 0.5 * c.g * dz * b.rho(0);
        assert!((s - c.p00).abs() < 1e-10 * c.p00);
    }

    #[test]
    fn stratified_balance() {
        let c = FluidConstants::default();
        let th = ThetaProfile { surface: 290.0, gradient: 0.01 };
        let b = hydrostatic_background(th, &c, &column(64, 20.0)).unwrap();
        assert!(b.balance_residual(c.g) < 1e-10);
    }

    #[test]
    fn compressible_buoyancy_value() {
        assert!((buoyancy_compressible(9.81, Some(0.01), Some(0.01)) + 0.0981).abs() < 1e-15);
        assert_eq!(buoyancy_compressible(9.81, Some(0.0), Some(0.0)), 0.0);
    }

    #[test]
    fn warm_anelastic_parcel_rises() {
        assert!(buoyancy_anelastic(9.81, 1.2, Some(0.01), Some(0.02)) > 0.0);
    }

    #[test]
    fn face_density_rules() {
        assert_eq!(face_density(Some(1.0), Some(3.0), 9.0), 2.0);
        assert_eq!(face_density(None, Some(3.0), 9.0), 3.0);
        assert_eq!(face_density(None, None, 9.0), 9.0);
    }

    #[test]
    fn shear_stress() {
        let c = FluidConstants::default();
        let mut g = [[0.0; 3]; 3];
        g[0][2] = 0.7;
        let t = stress_tensor(&g, 2.0, &c);
        assert!((t[0][2] - 1.4).abs() < 1e-15 && (t[2][0] - 1.4).abs() < 1e-15);
        assert_eq!(t[0][0], 0.0);
    }

    #[test]
    fn dilation_stress() {
        let c = FluidConstants::default();
        let d = 0.3;
        let mu = 1.5;
        let mut g = [[0.0; 3]; 3];
        for (a, row) in g.iter_mut().enumerate() {
            row[a] = d / 3.0;
        }
        let t = stress_tensor(&g, mu, &c);
        let expect = 2.0 / 3.0 * mu * d + 2.0 * mu * d / 3.0;
        for a in 0..3 {
            assert!((t[a][a] - expect).abs() < 1e-14);
        }
        let s = FluidConstants { stokes_lambda_sign: true, ..c };
        assert!(stress_tensor(&g, mu, &s)[0][0].abs() < 1e-15);
    }

    #[test]
    fn rigid_translation_is_stress_free() {
        let t = stress_tensor(&[[0.0; 3]; 3], 3.0, &FluidConstants::default());
        assert!(t.iter().flatten().all(|v| *v == 0.0));
    }

    proptest! {
        #[test]
        fn eos_is_increasing(a in 0.1f64..1e4, b in 0.1f64..1e4) {
            let c = FluidConstants::default();
            let (pa, pb) = (eos_pressure(a, &c).unwrap(), eos_pressure(b, &c).unwrap());
            if a < b { prop_assert!(pa < pb); }
        }

        #[test]
        fn stress_symmetric_and_linear(g1 in prop::array::uniform3(prop::array::uniform3(-5.0f64..5.0)),
                                       g2 in prop::array::uniform3(prop::array::uniform3(-5.0f64..5.0)),
                                       s in -3.0f64..3.0) {
            let c = FluidConstants::default();
            let t1 = stress_tensor(&g1, 0.8, &c);
            let t2 = stress_tensor(&g2, 0.8, &c);
            let mut gs = [[0.0; 3]; 3];
            for a in 0..3 { for d in 0..3 { gs[a][d] = g1[a][d] + s * g2[a][d]; } }
            let ts = stress_tensor(&gs, 0.8, &c);
            for a in 0..3 {
                for d in 0..3 {
                    prop_assert!((t1[a][d] - t1[d][a]).abs() < 1e-12);
                    prop_assert!((ts[a][d] - t1[a][d] - s * t2[a][d]).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn background_balanced(nz in 2usize..40, dz in 1.0f64..200.0, th in 250.0f64..350.0, grad in 0.0f64..0.02) {
            let c = FluidConstants::default();
            let b = hydrostatic_background(ThetaProfile { surface: th, gradient: grad }, &c, &column(nz, dz)).unwrap();
            prop_assert!(b.balance_residual(c.g) < 1e-10);
        }
    }
}
