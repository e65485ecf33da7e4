//! Cut-cell geometry on the cell-centered grid and the three face-staggered grids.

pub mod build;
pub mod cell;
pub mod clip;
pub mod export;
pub mod surface;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, Layout, Range3, Variant};

pub use build::{build_cc_geometry, build_geometry_set, build_staggered_geometry, HalfCell, HalfCellData};
pub use cell::{classify_cells, Intersection};
pub use surface::{ImplicitSurface, Surface};

/// Reconstruction settings for cut cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryOptions {
    pub intersection: Intersection,
    /// Sub-lattice refinement per axis inside cut cells and on their faces.
    pub refine: usize,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions { intersection: Intersection::Root, refine: 2 }
    }
}

impl GeometryOptions {
    /// Plain corner sampling with linear edge crossings.
    pub fn linear() -> Self {
        GeometryOptions { intersection: Intersection::Linear, refine: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.refine) {
            return Err(Error::InvalidInput(format!("geometry refine must be 1..=4, got {}", self.refine)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellClass {
    Covered = 0,
    Regular = 1,
    Cut = 2,
}

impl CellClass {
    pub fn name(self) -> &'static str {
        match self {
            CellClass::Covered => "covered",
            CellClass::Regular => "regular",
            CellClass::Cut => "cut",
        }
    }
}

/// EB facet of a cut control volume. The centroid is an offset from the
/// control-volume center in units of the grid spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbFacet {
    pub area: f64,
    pub normal: [f64; 3],
    pub centroid: [f64; 3],
}

/// Geometry of one family of control volumes.
///
/// Face `f` along axis `d` separates control volumes `f - e_d` and `f`. Face
/// centroid offsets are given along the two other axes in increasing order.
#[derive(Debug, Clone)]
pub struct EbGeometry {
    pub variant: Variant,
    pub grid: GridSpec,
    pub layout: Layout,
    pub class: Vec<CellClass>,
    pub alpha: Vec<f64>,
    pub beta: [Vec<f64>; 3],
    pub face_centroid: [Vec<[f64; 2]>; 3],
    pub vol_centroid: Vec<[f64; 3]>,
    pub eb: HashMap<usize, EbFacet>,
    /// Flat indices of cut control volumes, ascending.
    pub cut: Vec<usize>,
}

impl EbGeometry {
    #[inline]
    pub fn class_at(&self, p: [isize; 3]) -> CellClass {
        self.class[self.layout.at(p)]
    }

    #[inline]
    pub fn alpha_at(&self, p: [isize; 3]) -> f64 {
        self.alpha[self.layout.at(p)]
    }

    #[inline]
    pub fn beta_at(&self, axis: Axis, p: [isize; 3]) -> f64 {
        self.beta[axis.index()][self.layout.at(p)]
    }

    #[inline]
    pub fn is_fluid(&self, lin: usize) -> bool {
        self.class[lin] != CellClass::Covered
    }

    #[inline]
    pub fn volume(&self, lin: usize) -> f64 {
        self.alpha[lin] * self.grid.cell_volume()
    }

    /// Physical centroid of control volume `p`.
    pub fn centroid(&self, p: [isize; 3]) -> [f64; 3] {
        let c = self.grid.cv_center(self.variant, p);
        let off = self.vol_centroid[self.layout.at(p)];
        [c[0] + off[0] * self.grid.dx[0], c[1] + off[1] * self.grid.dx[1], c[2] + off[2] * self.grid.dx[2]]
    }

    pub fn facet(&self, lin: usize) -> Option<&EbFacet> {
        self.eb.get(&lin)
    }

    /// `Σ_d (β⁺ − β⁻) A_d e_d + A^EB n̂` for control volume `p`.
    pub fn closedness_residual(&self, p: [isize; 3]) -> [f64; 3] {
        let lin = self.layout.at(p);
        let mut r = [0.0; 3];
        for axis in Axis::ALL {
            let d = axis.index();
            let mut q = p;
            q[d] += 1;
            let hi = self.beta[d][self.layout.at(q)];
            let lo = self.beta[d][lin];
            r[d] += (hi - lo) * self.grid.face_area(axis);
        }
        if let Some(f) = self.eb.get(&lin) {
            for d in 0..3 {
                r[d] += f.area * f.normal[d];
            }
        }
        r
    }

    /// Range over which every geometric quantity of a control volume and all
    /// of its faces is stored.
    pub fn checked_range(&self) -> Range3 {
        let l = &self.layout;
        Range3::new([l.lo(); 3], [l.hi(0) - 1, l.hi(1) - 1, l.hi(2) - 1])
    }

    /// Verify the per-class invariants and closedness over `range`.
    pub fn check_invariants(&self, range: Range3, tol: f64) -> Result<()> {
        let amax = Axis::ALL.iter().map(|&a| self.grid.face_area(a)).fold(0.0, f64::max);
        let mut err = None;
        range.for_each(|p| {
            if err.is_some() {
                return;
            }
            let lin = self.layout.at(p);
            let a = self.alpha[lin];
            let faces = |v: f64| {
                Axis::ALL.iter().all(|&ax| {
                    let d = ax.index();
                    let mut q = p;
                    q[d] += 1;
                    self.beta[d][lin] == v && self.beta[d][self.layout.at(q)] == v
                })
            };
            let fail = match self.class[lin] {
                CellClass::Covered => {
                    (a != 0.0 || !faces(0.0) || self.eb.contains_key(&lin)).then_some("covered cell with fluid data")
                }
                CellClass::Regular => {
                    (a != 1.0 || !faces(1.0) || self.eb.contains_key(&lin)).then_some("regular cell with cut data")
                }
                CellClass::Cut => {
                    if !(a > 0.0 && a <= 1.0) {
                        Some("cut cell volume fraction out of range")
                    } else if let Some(f) = self.eb.get(&lin) {
                        let n = (f.normal[0].powi(2) + f.normal[1].powi(2) + f.normal[2].powi(2)).sqrt();
                        let r = self.closedness_residual(p);
                        if (n - 1.0).abs() > 1e-12 {
                            Some("non-unit EB normal")
                        } else if r.iter().any(|v| v.abs() > tol * amax) {
                            Some("control volume not closed")
                        } else {
                            None
                        }
                    } else {
                        Some("cut cell without EB facet")
                    }
                }
            };
            if let Some(msg) = fail {
                err = Some(Error::InvalidInput(format!("{} at {:?} ({})", msg, p, self.variant.name())));
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Total fluid volume over `range`.
    pub fn fluid_volume(&self, range: Range3) -> f64 {
        let mut v = 0.0;
        range.for_each(|p| v += self.volume(self.layout.at(p)));
        v
    }
}

/// Geometry for all four control-volume families.
#[derive(Debug, Clone)]
pub struct GeometrySet {
    pub cell: EbGeometry,
    pub faces: [EbGeometry; 3],
}

impl GeometrySet {
    pub fn get(&self, v: Variant) -> &EbGeometry {
        match v {
            Variant::Cell => &self.cell,
            Variant::Face(a) => &self.faces[a.index()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.cell.grid
    }
}
