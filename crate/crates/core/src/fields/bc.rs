//! Domain boundary conditions and ghost-layer exchange.

use serde::{Deserialize, Serialize};

use super::{Model, State};
use crate::error::{Error, Result};
use crate::grid::{Axis, Field, GridSpec, Layout, Range3, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SideBc {
    Periodic,
    Inflow { velocity: [f64; 3], density: f64, theta: f64 },
    Outflow,
    SlipWall,
    NoSlipWall,
}

impl SideBc {
    pub fn is_wall(&self) -> bool {
        matches!(self, SideBc::SlipWall | SideBc::NoSlipWall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbWall {
    #[default]
    NoSlip,
    FreeSlip,
}

/// Boundary conditions on the six domain sides, `[lo, hi]` per axis, and the
/// embedded-boundary wall type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub x: [SideBc; 2],
    pub y: [SideBc; 2],
    pub z: [SideBc; 2],
    #[serde(default)]
    pub eb: EbWall,
}

impl BoundarySpec {
    pub fn periodic() -> Self {
        let p = [SideBc::Periodic; 2];
        BoundarySpec { x: p, y: p, z: p, eb: EbWall::NoSlip }
    }

    #[inline]
    pub fn side(&self, axis: Axis, hi: bool) -> &SideBc {
        let s = match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        };
        &s[hi as usize]
    }

    pub fn is_periodic(&self, axis: Axis) -> bool {
        *self.side(axis, false) == SideBc::Periodic
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        for axis in Axis::ALL {
            let lo = *self.side(axis, false) == SideBc::Periodic;
            let hi = *self.side(axis, true) == SideBc::Periodic;
            if lo != hi {
                return Err(Error::InvalidInput(format!(
                    "periodic boundary on only one side of axis {}",
                    axis.name()
                )));
            }
            if lo != grid.periodic[axis.index()] {
                return Err(Error::InvalidInput(format!(
                    "boundary periodicity along {} disagrees with the grid",
                    axis.name()
                )));
            }
            for hi in [false, true] {
                if let SideBc::Inflow { density, theta, velocity } = self.side(axis, hi) {
                    if !(*density > 0.0 && *theta > 0.0 && velocity.iter().all(|v| v.is_finite())) {
                        return Err(Error::InvalidInput("inflow needs positive density and theta".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Control volumes of `variant` advanced by the time integrator. Faces on a
/// periodic, wall or inflow boundary are set by the boundary condition;
/// outflow boundary faces are advanced like interior ones.
pub fn owned_range(variant: Variant, bcs: &BoundarySpec, n: [usize; 3]) -> Range3 {
    let mut r = Range3::interior(variant, n);
    if let Variant::Face(a) = variant {
        let d = a.index();
        let (lo, hi) = face_bounds(bcs, a, n[d]);
        r.lo[d] = lo;
        r.hi[d] = hi;
    }
    r
}

fn face_bounds(bcs: &BoundarySpec, a: Axis, n: usize) -> (isize, isize) {
    let n = n as isize;
    if bcs.is_periodic(a) {
        return (0, n);
    }
    let lo = if *bcs.side(a, false) == SideBc::Outflow { 0 } else { 1 };
    let hi = if *bcs.side(a, true) == SideBc::Outflow { n + 1 } else { n };
    (lo, hi)
}

#[derive(Clone, Copy)]
enum Quantity<'a> {
    /// Cell scalar with per-level background (reflected as a perturbation).
    Scalar { background: &'a [f64], inflow: fn(&SideBc) -> f64 },
    Momentum(Axis),
}

/// Fill every ghost layer of the state from its owned values. Periodic
/// copies are exact and the operation is idempotent.
pub fn fill_ghost(state: &mut State, bcs: &BoundarySpec) {
    let n = state.grid.n;
    let layout = state.layout();
    let bg = &state.background;
    let rho_bg: Vec<f64> = (0..bg.rho.len()).map(|s| bg.rho[s]).collect();
    let rt_bg: Vec<f64> = (0..bg.rho.len()).map(|s| bg.rho[s] * bg.theta[s]).collect();
    let rho_in: fn(&SideBc) -> f64 = |s| match s {
        SideBc::Inflow { density, .. } => *density,
        _ => 0.0,
    };
    let rt_in: fn(&SideBc) -> f64 = |s| match s {
        SideBc::Inflow { density, theta, .. } => density * theta,
        _ => 0.0,
    };
    if state.model == Model::Compressible {
        fill_field(&mut state.rho, Variant::Cell, bcs, n, layout, Quantity::Scalar { background: &rho_bg, inflow: rho_in });
    }
    fill_field(&mut state.rho_theta, Variant::Cell, bcs, n, layout, Quantity::Scalar { background: &rt_bg, inflow: rt_in });
    for a in Axis::ALL {
        fill_field(&mut state.mom[a.index()], Variant::Face(a), bcs, n, layout, Quantity::Momentum(a));
    }
}

/// Ghost fill for a single cell-centered scalar whose boundary treatment is
/// even reflection at walls, zero gradient at outflow and `inflow` at inflow.
pub fn fill_scalar(f: &mut Field, bcs: &BoundarySpec, n: [usize; 3], inflow: fn(&SideBc) -> f64) {
    let layout = f.layout;
    let zeros = vec![0.0; layout.ext[2]];
    fill_field(f, Variant::Cell, bcs, n, layout, Quantity::Scalar { background: &zeros, inflow });
}

/// Ghost fill for momentum component `a`.
pub fn fill_momentum(f: &mut Field, a: Axis, bcs: &BoundarySpec, n: [usize; 3]) {
    let layout = f.layout;
    fill_field(f, Variant::Face(a), bcs, n, layout, Quantity::Momentum(a));
}

fn fill_field(f: &mut Field, variant: Variant, bcs: &BoundarySpec, n: [usize; 3], layout: Layout, q: Quantity) {
    for axis in Axis::ALL {
        let d = axis.index();
        let nd = n[d] as isize;
        let glo = layout.lo();
        let ghi = layout.hi(d);
        let stride = layout.step(axis);
        let staggered = variant.is_staggered_along(axis);
        let mut line = layout.full_range();
        line.lo[d] = 0;
        line.hi[d] = 1;
        line.for_each(|p| {
            let base = layout.at(p) as isize;
            let at = |t: isize| (base + t * stride) as usize;
            let z_of = |t: isize| if axis == Axis::Z { t } else { p[2] };
            for hi in [false, true] {
                let side = bcs.side(axis, hi);
                if staggered {
                    let Quantity::Momentum(a) = q else { unreachable!() };
                    let (olo, ohi) = face_bounds(bcs, axis, n[d]);
                    let targets: Vec<isize> = if hi { (ohi..ghi).collect() } else { (glo..olo).rev().collect() };
                    for t in targets {
                        let v = match side {
                            SideBc::Periodic => f.data[at(t.rem_euclid(nd))],
                            SideBc::SlipWall | SideBc::NoSlipWall => {
                                let wall = if hi { nd } else { 0 };
                                if t == wall {
                                    0.0
                                } else {
                                    let m = (2 * wall - t).clamp(1, (nd - 1).max(1));
                                    -f.data[at(m)]
                                }
                            }
                            SideBc::Inflow { velocity, density, .. } => density * velocity[a.index()],
                            SideBc::Outflow => f.data[at(if hi { nd } else { 0 })],
                        };
                        f.data[at(t)] = v;
                    }
                } else {
                    let targets: Vec<isize> = if hi { (nd..ghi).collect() } else { (glo..0).rev().collect() };
                    for t in targets {
                        let mirror = if hi { 2 * nd - 1 - t } else { -1 - t }.clamp(0, nd - 1);
                        let v = match (side, q) {
                            (SideBc::Periodic, _) => f.data[at(t.rem_euclid(nd))],
                            (SideBc::Outflow, _) => f.data[at(if hi { nd - 1 } else { 0 })],
                            (SideBc::Inflow { .. }, Quantity::Scalar { inflow, .. }) => inflow(side),
                            (SideBc::Inflow { velocity, density, .. }, Quantity::Momentum(a)) => {
                                density * velocity[a.index()]
                            }
                            (_, Quantity::Scalar { background, .. }) => {
                                let s = |k: isize| (k - glo) as usize;
                                background[s(z_of(t))] + f.data[at(mirror)] - background[s(z_of(mirror))]
                            }
                            (SideBc::NoSlipWall, Quantity::Momentum(_)) => -f.data[at(mirror)],
                            (_, Quantity::Momentum(_)) => f.data[at(mirror)],
                        };
                        f.data[at(t)] = v;
                    }
                }
            }
        });
    }
}
