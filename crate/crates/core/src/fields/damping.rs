//! Rayleigh damping layer and lateral sponges.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::State;
use crate::error::{Error, Result};
use crate::geometry::GeometrySet;
use crate::grid::{Axis, GridSpec, Range3, Variant};

/// How a damping coefficient is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientUnits {
    /// The coefficient is the product `k·Δt` for the current step.
    #[default]
    PerStep,
    /// The coefficient is `k` in 1/s.
    PerSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayleighLayer {
    pub thickness: f64,
    pub coefficient: f64,
    #[serde(default)]
    pub units: CoefficientUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    XLo,
    XHi,
    YLo,
    YHi,
    ZLo,
    ZHi,
}

impl Side {
    pub fn axis(self) -> Axis {
        match self {
            Side::XLo | Side::XHi => Axis::X,
            Side::YLo | Side::YHi => Axis::Y,
            Side::ZLo | Side::ZHi => Axis::Z,
        }
    }

    pub fn is_hi(self) -> bool {
        matches!(self, Side::XHi | Side::YHi | Side::ZHi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sponge {
    pub side: Side,
    pub thickness: f64,
    pub strength: f64,
    #[serde(default)]
    pub units: CoefficientUnits,
}

/// Damping layers and the reference velocity they relax toward. The
/// reference ρθ and density are those of the background.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingSpec {
    pub rayleigh: Option<RayleighLayer>,
    pub sponges: Vec<Sponge>,
    pub reference_velocity: [f64; 3],
}

/// `cos²(π/2 · d/thickness)` inside the layer, zero outside; `d` is the
/// distance from the boundary.
#[inline]
pub fn ramp(distance: f64, thickness: f64) -> f64 {
    if distance >= thickness {
        0.0
    } else {
        let c = (FRAC_PI_2 * distance.max(0.0) / thickness).cos();
        c * c
    }
}

impl DampingSpec {
    pub fn is_empty(&self) -> bool {
        self.rayleigh.is_none() && self.sponges.is_empty()
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let check = |t: f64, k: f64, axis: Axis, what: &str| {
            if !(t > 0.0 && t < grid.extent(axis)) {
                return Err(Error::InvalidInput(format!("{what} thickness {t} must lie in (0, domain extent)")));
            }
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidInput(format!("{what} coefficient must be non-negative")));
            }
            Ok(())
        };
        if let Some(r) = &self.rayleigh {
            check(r.thickness, r.coefficient, Axis::Z, "rayleigh layer")?;
        }
        for s in &self.sponges {
            check(s.thickness, s.strength, s.side.axis(), "sponge")?;
        }
        Ok(())
    }

    /// Relaxation factor `w·k·dt` at position `x`, clipped to [0, 1].
    pub fn factor(&self, grid: &GridSpec, x: [f64; 3], dt: f64, step_dt: f64) -> f64 {
        let rate = |coef: f64, units: CoefficientUnits| match units {
            CoefficientUnits::PerSecond => coef * dt,
            CoefficientUnits::PerStep => {
                if step_dt > 0.0 {
                    coef * dt / step_dt
                } else {
                    0.0
                }
            }
        };
        let mut f = 0.0;
        let hi = grid.hi();
        if let Some(r) = &self.rayleigh {
            f += ramp(hi[2] - x[2], r.thickness) * rate(r.coefficient, r.units);
        }
        for s in &self.sponges {
            let a = s.side.axis().index();
            let d = if s.side.is_hi() { hi[a] - x[a] } else { x[a] - grid.origin[a] };
            f += ramp(d, s.thickness) * rate(s.strength, s.units);
        }
        f.clamp(0.0, 1.0)
    }
}

/// Relax ρθ and the momenta inside the configured layers toward the
/// reference state, `U ← U − w k dt (U − U_ref)`. Density is not damped.
/// `dt` is the stage increment and `step_dt` the full step.
pub fn apply_damping(state: &mut State, spec: &DampingSpec, geom: &GeometrySet, ranges: &[Range3; 4], dt: f64, step_dt: f64) {
    if spec.is_empty() {
        return;
    }
    let grid = state.grid;
    let layout = state.layout();
    let bg = state.background.clone();
    let cell = geom.get(Variant::Cell);
    ranges[0].for_each(|p| {
        let l = layout.at(p);
        if !cell.is_fluid(l) {
            return;
        }
        let w = spec.factor(&grid, grid.cv_center(Variant::Cell, p), dt, step_dt);
        if w > 0.0 {
            let r = bg.rho_theta(p[2]);
            state.rho_theta[l] -= w * (state.rho_theta[l] - r);
        }
    });
    for a in Axis::ALL {
        let v = Variant::Face(a);
        let g = geom.get(v);
        let u = spec.reference_velocity[a.index()];
        ranges[v.slot()].for_each(|p| {
            let l = layout.at(p);
            if !g.is_fluid(l) {
                return;
            }
            let w = spec.factor(&grid, grid.cv_center(v, p), dt, step_dt);
            if w > 0.0 {
                let rho = if a == Axis::Z { bg.rho_zface(p[2]) } else { bg.rho(p[2]) };
                let m = &mut state.mom[a.index()][l];
                *m -= w * (*m - rho * u);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::new([4, 1, 10], [10.0, 10.0, 10.0], [0.0; 3], [true, true, false]).unwrap()
    }

    fn layer(coef: f64) -> DampingSpec {
        DampingSpec {
            rayleigh: Some(RayleighLayer { thickness: 40.0, coefficient: coef, units: CoefficientUnits::PerSecond }),
            ..Default::default()
        }
    }

    #[test]
    fn below_layer_unchanged() {
        assert_eq!(layer(1.0).factor(&grid(), [5.0, 5.0, 30.0], 1.0, 1.0), 0.0);
    }

    #[test]
    fn full_relaxation_at_top() {
        let f = layer(1.0).factor(&grid(), [5.0, 5.0, 100.0], 1.0, 1.0);
        assert_eq!(f, 1.0);
        let u = 7.0 - f * (7.0 - 2.0);
        assert_eq!(u, 2.0);
    }

    #[test]
    fn mid_layer_relaxation() {
        // mid-layer: w = cos²(π/4) = 1/2, k dt = 1/2
        let f = layer(0.5).factor(&grid(), [5.0, 5.0, 80.0], 1.0, 1.0);
        let dev = 4.0 * (1.0 - f);
        assert!((dev - 3.0).abs() < 1e-12);
    }

    #[test]
    fn per_step_units() {
        let s = DampingSpec {
            rayleigh: Some(RayleighLayer { thickness: 40.0, coefficient: 0.25, units: CoefficientUnits::PerStep }),
            ..Default::default()
        };
        assert!((s.factor(&grid(), [0.0, 0.0, 100.0], 0.3, 0.3) - 0.25).abs() < 1e-15);
        assert!((s.factor(&grid(), [0.0, 0.0, 100.0], 0.1, 0.3) - 0.25 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sponge_distance() {
        let s = DampingSpec {
            sponges: vec![Sponge { side: Side::XLo, thickness: 20.0, strength: 1.0, units: CoefficientUnits::PerSecond }],
            ..Default::default()
        };
        assert_eq!(s.factor(&grid(), [0.0, 0.0, 0.0], 1.0, 1.0), 1.0);
        assert_eq!(s.factor(&grid(), [25.0, 0.0, 0.0], 1.0, 1.0), 0.0);
    }

    #[test]
    fn thickness_must_fit() {
        assert!(layer(1.0).validate(&grid()).is_ok());
        let mut s = layer(1.0);
        s.rayleigh.as_mut().unwrap().thickness = 200.0;
        assert!(s.validate(&grid()).is_err());
    }

    proptest! {
        #[test]
        fn never_flips_deviation(z in 0.0f64..100.0, k in 0.0f64..1.0, dev in -10.0f64..10.0) {
            let f = layer(k).factor(&grid(), [0.0, 0.0, z], 1.0, 1.0);
            let new = dev - f * dev;
            prop_assert!(new * dev >= 0.0);
        }
    }
}
