use super::{eos_pressure, face_density, FluidConstants};
use crate::error::Result;
use crate::fields::{Model, State};
use crate::geometry::GeometrySet;
use crate::grid::{Axis, Field, Variant};

/// Diagnostic variables over the whole stored range.
#[derive(Debug, Clone)]
pub struct Primitives {
    /// Face velocities.
    pub vel: [Field; 3],
    pub theta: Field,
    /// Pressure perturbation about the background.
    pub p_pert: Field,
    /// Full pressure (background pressure in anelastic mode).
    pub pressure: Field,
}

/// Velocities, potential temperature and pressure from the conserved state.
pub fn primitives(state: &State, geom: &GeometrySet, c: &FluidConstants) -> Result<Primitives> {
    let layout = state.layout();
    let cell = geom.get(Variant::Cell);
    let bg = &state.background;
    let full = layout.full_range();
    let mut theta = Field::zeros(layout);
    let mut p_pert = Field::zeros(layout);
    let mut pressure = Field::zeros(layout);
    let anelastic = state.model == Model::Anelastic;
    let mut err = None;
    full.for_each(|p| {
        let l = layout.at(p);
        let k = p[2];
        if anelastic {
            theta[l] = state.rho_theta[l] / bg.rho(k);
            pressure[l] = bg.p(k);
            p_pert[l] = state.p_pert[l];
        } else {
            theta[l] = state.rho_theta[l] / state.rho[l];
            if cell.is_fluid(l) {
                match eos_pressure(state.rho_theta[l], c) {
                    Ok(pr) => {
                        pressure[l] = pr;
                        p_pert[l] = pr - bg.p(k);
                    }
                    Err(e) => {
                        if err.is_none() {
                            err = Some(e);
                        }
                    }
                }
            } else {
                pressure[l] = bg.p(k);
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut logged = false;
    let vel = Axis::ALL.map(|a| {
        let mut u = Field::zeros(layout);
        let step = layout.step(a) as usize;
        let fg = geom.get(Variant::Face(a));
        full.for_each(|p| {
            let l = layout.at(p);
            let k = p[2];
            let rho0 = if a == Axis::Z { bg.rho_zface(k) } else { bg.rho(k) };
            let rf = if anelastic {
                rho0
            } else if p[a.index()] == layout.lo() {
                state.rho[l]
            } else {
                let lo = l - step;
                let side = |i: usize| cell.is_fluid(i).then(|| state.rho[i]);
                let (left, right) = (side(lo), side(l));
                if left.is_none() && right.is_none() && fg.is_fluid(l) && !logged {
                    log::debug!("face density fallback to background at {:?} ({})", p, a.name());
                    logged = true;
                }
                face_density(left, right, rho0)
            };
            u[l] = state.mom[a.index()][l] / rf;
        });
        u
    });
    Ok(Primitives { vel, theta, p_pert, pressure })
}
