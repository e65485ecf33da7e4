//! Prognostic state on the staggered grid, boundary handling, damping layers
//! and field output.

pub mod bc;
pub mod damping;
pub mod output;

use serde::{Deserialize, Serialize};

use crate::geometry::GeometrySet;
use crate::grid::{Axis, Field, GridSpec, Layout, Range3, Variant};
use crate::physics::Background;

pub use bc::{fill_ghost, owned_range, BoundarySpec, EbWall, SideBc};
pub use damping::{apply_damping, CoefficientUnits, DampingSpec, RayleighLayer, Side, Sponge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Compressible,
    Anelastic,
}

/// Conserved variables: ρ and ρθ at cell centers, momenta on the faces.
#[derive(Debug, Clone)]
pub struct State {
    pub model: Model,
    pub grid: GridSpec,
    pub rho: Field,
    pub rho_theta: Field,
    pub mom: [Field; 3],
    /// Perturbation pressure from the last projection (anelastic only).
    pub p_pert: Field,
    pub background: Background,
}

impl State {
    /// Background state moving with uniform `velocity`; momenta of covered
    /// control volumes are zero.
    pub fn uniform_flow(model: Model, grid: GridSpec, background: Background, velocity: [f64; 3], geom: &GeometrySet) -> State {
        let layout = grid.layout();
        let mut rho = Field::zeros(layout);
        let mut rho_theta = Field::zeros(layout);
        layout.full_range().for_each(|p| {
            let l = layout.at(p);
            rho[l] = background.rho(p[2]);
            rho_theta[l] = background.rho_theta(p[2]);
        });
        let mom = [Axis::X, Axis::Y, Axis::Z].map(|a| {
            let g = geom.get(Variant::Face(a));
            let mut f = Field::zeros(layout);
            layout.full_range().for_each(|p| {
                let l = layout.at(p);
                if g.is_fluid(l) {
                    let r = if a == Axis::Z { background.rho_zface(p[2]) } else { background.rho(p[2]) };
                    f[l] = r * velocity[a.index()];
                }
            });
            f
        });
        State { model, grid, rho, rho_theta, mom, p_pert: Field::zeros(layout), background }
    }

    pub fn layout(&self) -> Layout {
        self.rho.layout
    }

    /// Field holding the conserved variable of `variant` (ρθ for cells).
    pub fn field(&self, v: Variant) -> &Field {
        match v {
            Variant::Cell => &self.rho_theta,
            Variant::Face(a) => &self.mom[a.index()],
        }
    }

    /// `Σ α V q` over the interior control volumes of `variant`.
    pub fn total(&self, q: &Field, variant: Variant, geom: &GeometrySet) -> f64 {
        let g = geom.get(variant);
        let mut s = 0.0;
        Range3::interior(variant, self.grid.n).for_each(|p| {
            let l = self.layout().at(p);
            s += g.volume(l) * q[l];
        });
        s
    }

    /// Every value of the interior is finite.
    pub fn all_finite(&self) -> bool {
        let n = self.grid.n;
        let mut ok = true;
        for (f, v) in [(&self.rho, Variant::Cell), (&self.rho_theta, Variant::Cell)]
            .into_iter()
            .chain(Axis::ALL.iter().map(|&a| (&self.mom[a.index()], Variant::Face(a))))
        {
            Range3::interior(v, n).for_each(|p| ok &= f.get(p).is_finite());
        }
        ok
    }
}
