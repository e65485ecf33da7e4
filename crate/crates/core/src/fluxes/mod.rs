//! Advective and diffusive fluxes on the four control-volume families and the
//! conservative update assembled from them.

pub mod advect;
pub mod lsq;

use serde::{Deserialize, Serialize};

use crate::fields::{BoundarySpec, EbWall, Model, State};
use crate::geometry::{EbGeometry, GeometrySet};
use crate::grid::{Axis, Field, GridSpec, Layout, Range3, Variant};
use crate::physics::{buoyancy_anelastic, buoyancy_compressible, stress_tensor, FluidConstants, Primitives};

pub use advect::{advect_interface_value, bilinear_weights, interpolate_flux_to_cut_centroid};
pub use lsq::{eb_gradient_least_squares, fit_gradient, gradient_weights, FitOrder, GradientWeights};

/// Spatial scaling of the dynamic viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscosityMask {
    #[default]
    None,
    /// Zero within `inner` of `center`, one beyond `inner + ramp`, smooth in between.
    Radial { center: [f64; 3], inner: f64, ramp: f64 },
}

impl ViscosityMask {
    #[inline]
    pub fn at(&self, x: [f64; 3]) -> f64 {
        match *self {
            ViscosityMask::None => 1.0,
            ViscosityMask::Radial { center, inner, ramp } => {
                let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2)).sqrt();
                if r <= inner {
                    0.0
                } else if r >= inner + ramp {
                    1.0
                } else {
                    let s = (std::f64::consts::FRAC_PI_2 * (r - inner) / ramp).sin();
                    s * s
                }
            }
        }
    }
}

/// Time derivatives of the conserved variables.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub rho: Field,
    pub rho_theta: Field,
    pub mom: [Field; 3],
    /// Net mass flux out through the domain boundary, kg/s.
    pub boundary_mass_flux: f64,
}

impl Rhs {
    pub fn field(&self, v: Variant) -> &Field {
        match v {
            Variant::Cell => &self.rho_theta,
            Variant::Face(a) => &self.mom[a.index()],
        }
    }
}

/// Which source terms enter the momentum right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhsTerms {
    pub pressure_gradient: bool,
}

/// Precomputed least-squares stencil for the viscous flux through one facet.
#[derive(Debug, Clone)]
struct EbStencil {
    lin: usize,
    area: f64,
    normal: [f64; 3],
    mu: f64,
    points: [Vec<usize>; 3],
    weights: [GradientWeights; 3],
}

/// Flux construction bound to one geometry and configuration.
pub struct FluxOperator<'a> {
    pub grid: GridSpec,
    pub geom: &'a GeometrySet,
    pub consts: FluidConstants,
    pub mask: ViscosityMask,
    pub bcs: BoundarySpec,
    pub forcing: [f64; 3],
    pub ranges: [Range3; 4],
    eb: [Vec<EbStencil>; 3],
}

#[inline]
fn sgn(x: f64) -> isize {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Difference `hi − lo` of a velocity with covered points treated as the
/// wall: zero velocity for no-slip, zero gradient for free-slip.
#[inline]
fn wall_diff(lo: f64, lo_fluid: bool, hi: f64, hi_fluid: bool, no_slip: bool) -> f64 {
    match (lo_fluid, hi_fluid) {
        (true, true) => hi - lo,
        (false, true) if no_slip => hi,
        (true, false) if no_slip => -lo,
        _ => 0.0,
    }
}

/// Points closer than this (in cell widths) to the facet centroid are left
/// out of the wall-gradient fit unless the rest cannot support one.
const NEAR_WALL: f64 = 0.5;

fn wall_stencil(pts: Vec<usize>, offs: &[[f64; 3]], dx: [f64; 3]) -> (Vec<usize>, GradientWeights) {
    let far: Vec<bool> = offs
        .iter()
        .map(|o| (0..3).map(|d| (o[d] / dx[d]).powi(2)).sum::<f64>() >= NEAR_WALL * NEAR_WALL)
        .collect();
    if far.iter().any(|f| !f) {
        let kept: Vec<[f64; 3]> = offs.iter().zip(&far).filter(|(_, &f)| f).map(|(o, _)| *o).collect();
        let w = gradient_weights(&kept, dx, true);
        if w.order != FitOrder::Zero {
            let pts = pts.into_iter().zip(&far).filter(|(_, &f)| f).map(|(p, _)| p).collect();
            return (pts, w);
        }
    }
    let w = gradient_weights(offs, dx, true);
    (pts, w)
}

impl<'a> FluxOperator<'a> {
    pub fn new(
        geom: &'a GeometrySet,
        consts: FluidConstants,
        mask: ViscosityMask,
        bcs: BoundarySpec,
        forcing: [f64; 3],
        ranges: [Range3; 4],
    ) -> Self {
        let grid = *geom.grid();
        let mut op = FluxOperator { grid, geom, consts, mask, bcs, forcing, ranges, eb: [vec![], vec![], vec![]] };
        if bcs.eb == EbWall::NoSlip && consts.mu > 0.0 {
            for a in Axis::ALL {
                op.eb[a.index()] = op.build_eb_stencils(a);
            }
        }
        op
    }

    fn layout(&self) -> Layout {
        self.geom.cell.layout
    }

    fn build_eb_stencils(&self, a: Axis) -> Vec<EbStencil> {
        let v = Variant::Face(a);
        let g = self.geom.get(v);
        let layout = g.layout;
        let dx = self.grid.dx;
        let valid = g.checked_range();
        let mut out = Vec::new();
        for &lin in &g.cut {
            let p = layout.unflatten(lin);
            if !self.ranges[v.slot()].contains(p) {
                continue;
            }
            let Some(f) = g.facet(lin) else { continue };
            let c = self.grid.cv_center(v, p);
            let at = [c[0] + f.centroid[0] * dx[0], c[1] + f.centroid[1] * dx[1], c[2] + f.centroid[2] * dx[2]];
            let comps = Axis::ALL.map(|b| {
                let gb = self.geom.get(Variant::Face(b));
                let mut lo = [p[0] - 1, p[1] - 1, p[2] - 1];
                let mut hi = [p[0] + 2, p[1] + 2, p[2] + 2];
                if b != a {
                    // four-wide along the two axes where the grids are offset
                    lo[a.index()] = p[a.index()] - 2;
                    hi[a.index()] = p[a.index()] + 2;
                    lo[b.index()] = p[b.index()] - 1;
                    hi[b.index()] = p[b.index()] + 3;
                }
                let mut pts = Vec::new();
                let mut offs = Vec::new();
                Range3::new(lo, hi).for_each(|q| {
                    if valid.contains(q) && gb.is_fluid(layout.at(q)) {
                        let x = gb.centroid(q);
                        pts.push(layout.at(q));
                        offs.push([x[0] - at[0], x[1] - at[1], x[2] - at[2]]);
                    }
                });
                let (pts, w) = wall_stencil(pts, &offs, dx);
                if w.order != FitOrder::Quadratic {
                    log::debug!("facet gradient of u{} at {:?} ({}) uses {:?} fit", b.name(), p, v.name(), w.order);
                }
                (pts, w)
            });
            let [(p0, w0), (p1, w1), (p2, w2)] = comps;
            out.push(EbStencil {
                lin,
                area: f.area,
                normal: f.normal,
                mu: self.consts.mu * self.mask.at(at),
                points: [p0, p1, p2],
                weights: [w0, w1, w2],
            });
        }
        out
    }

    /// Range where provisional fluxes are needed: every face of the owned
    /// control volumes and their in-plane neighbors.
    fn flux_range(&self) -> Range3 {
        let n = self.grid.n;
        Range3::new([-1; 3], [n[0] as isize + 3, n[1] as isize + 3, n[2] as isize + 3])
    }

    fn fallback(g: &EbGeometry, lin: usize, step: usize) -> bool {
        !(g.is_fluid(lin - 2 * step) && g.is_fluid(lin - step) && g.is_fluid(lin) && g.is_fluid(lin + step))
    }

    /// Provisional mass flux, interface value and diffusive flux on every face
    /// along `d` of the control volumes of variant `v`.
    fn provisional(&self, v: Variant, d: Axis, state: &State, prim: &Primitives) -> (Field, Field, Field) {
        let layout = self.layout();
        let g = self.geom.get(v);
        let cell = &self.geom.cell;
        let st = |ax: Axis| layout.step(ax) as usize;
        let sd = st(d);
        let mut mass = Field::zeros(layout);
        let mut qface = Field::zeros(layout);
        let mut diff = Field::zeros(layout);
        let q = match v {
            Variant::Cell => &prim.theta,
            Variant::Face(a) => &prim.vel[a.index()],
        };
        let mu0 = self.consts.mu;
        let no_slip = self.bcs.eb == EbWall::NoSlip;
        let dx = self.grid.dx;
        let anelastic = state.model == Model::Anelastic;
        let at_theta = self.consts.alpha_theta;
        self.flux_range().for_each(|p| {
            let l = layout.at(p);
            let m = match v {
                Variant::Cell => state.mom[d.index()][l],
                Variant::Face(a) => {
                    let sa = st(a);
                    0.5 * (state.mom[d.index()][l - sa] + state.mom[d.index()][l])
                }
            };
            mass[l] = m;
            let fb = Self::fallback(g, l, sd);
            qface[l] = advect_interface_value([q[l - 2 * sd], q[l - sd], q[l], q[l + sd]], m, fb);
            match v {
                Variant::Cell => {
                    if at_theta > 0.0 && cell.is_fluid(l) && cell.is_fluid(l - sd) {
                        let rf = if anelastic {
                            if d == Axis::Z {
                                state.background.rho_zface(p[2])
                            } else {
                                state.background.rho(p[2])
                            }
                        } else {
                            0.5 * (state.rho[l] + state.rho[l - sd])
                        };
                        diff[l] = -rf * at_theta * (prim.theta[l] - prim.theta[l - sd]) / dx[d.index()];
                    }
                }
                Variant::Face(a) if mu0 > 0.0 => {
                    let sa = st(a);
                    let ua = &prim.vel[a.index()];
                    let ga = self.geom.get(Variant::Face(a));
                    if d == a {
                        let c = l - sa;
                        let mut x = self.grid.cv_center(Variant::Cell, p);
                        x[a.index()] -= dx[a.index()];
                        let mu = mu0 * self.mask.at(x);
                        if mu > 0.0 {
                            let dua = wall_diff(ua[c], ga.is_fluid(c), ua[l], ga.is_fluid(l), no_slip) / dx[a.index()];
                            let mut div = 0.0;
                            for b in Axis::ALL {
                                let sb = st(b);
                                let gb = self.geom.get(Variant::Face(b));
                                let ub = &prim.vel[b.index()];
                                div += wall_diff(ub[c], gb.is_fluid(c), ub[c + sb], gb.is_fluid(c + sb), no_slip)
                                    / dx[b.index()];
                            }
                            diff[l] = -(2.0 * mu * dua + self.consts.lambda(mu) * div);
                        }
                    } else {
                        let mut x = self.grid.node(p);
                        let [o0, o1] = d.others();
                        let third = if o0 == a { o1 } else { o0 };
                        x[third.index()] += 0.5 * dx[third.index()];
                        let mu = mu0 * self.mask.at(x);
                        if mu > 0.0 {
                            let gd = self.geom.get(Variant::Face(d));
                            let ud = &prim.vel[d.index()];
                            let dua =
                                wall_diff(ua[l - sd], ga.is_fluid(l - sd), ua[l], ga.is_fluid(l), no_slip) / dx[d.index()];
                            let dud =
                                wall_diff(ud[l - sa], gd.is_fluid(l - sa), ud[l], gd.is_fluid(l), no_slip) / dx[a.index()];
                            diff[l] = -mu * (dua + dud);
                        }
                    }
                }
                Variant::Face(_) => {}
            }
        });
        (mass, qface, diff)
    }

    /// Final face fluxes along `d` for variant `v`, one field per equation
    /// (`[ρθ, ρ]` for cells, `[ρu_a]` for faces).
    pub fn face_fluxes(&self, v: Variant, d: Axis, state: &State, prim: &Primitives) -> Vec<Field> {
        let (mass, qface, diff) = self.provisional(v, d, state, prim);
        let layout = self.layout();
        let g = self.geom.get(v);
        let anelastic = state.model == Model::Anelastic;
        let want_mass = v == Variant::Cell && !anelastic;
        let mut flux = Field::zeros(layout);
        let range = self.flux_range();
        range.for_each(|p| {
            let l = layout.at(p);
            flux[l] = mass[l] * qface[l] + diff[l];
        });
        let mut mflux = if want_mass { Some(mass.clone()) } else { None };
        let [b, c] = d.others();
        let (sb, sc) = (layout.step(b), layout.step(c));
        let beta = &g.beta[d.index()];
        let inner = range.grow(-1);
        let mut fixes = Vec::new();
        inner.for_each(|p| {
            let l = layout.at(p);
            let be = beta[l];
            if !(be > 0.0 && be < 1.0) {
                return;
            }
            let gam = g.face_centroid[d.index()][l];
            let lb = (l as isize + sgn(gam[0]) * sb) as usize;
            let lc = (l as isize + sgn(gam[1]) * sc) as usize;
            let lbc = (lb as isize + sgn(gam[1]) * sc) as usize;
            let idx = [l, lb, lc, lbc];
            let avail = idx.map(|i| beta[i] > 0.0);
            let Some(w) = bilinear_weights(gam, avail) else { return };
            let mix = |f: &Field| w[0] * f[idx[0]] + w[1] * f[idx[1]] + w[2] * f[idx[2]] + w[3] * f[idx[3]];
            let new = if anelastic { mass[l] * mix(&qface) + mix(&diff) } else { mix(&flux) };
            let newm = if want_mass { mix(&mass) } else { 0.0 };
            fixes.push((l, new, newm));
        });
        for (l, f, m) in fixes {
            flux[l] = f;
            if let Some(mf) = mflux.as_mut() {
                mf[l] = m;
            }
        }
        let mut out = vec![flux];
        if let Some(mf) = mflux {
            out.push(mf);
        }
        out
    }

    /// Viscous flux through the facet of each cut momentum control volume.
    fn eb_fluxes(&self, a: Axis, prim: &Primitives) -> Vec<(usize, f64)> {
        self.eb[a.index()]
            .iter()
            .map(|s| {
                let mut grad = [[0.0; 3]; 3];
                for b in 0..3 {
                    let u = &prim.vel[b];
                    grad[b] = s.weights[b].apply(s.points[b].iter().map(|&i| u[i]));
                }
                let tau = stress_tensor(&grad, s.mu, &self.consts);
                let f = -(0..3).map(|d| tau[a.index()][d] * s.normal[d]).sum::<f64>();
                (s.lin, f * s.area)
            })
            .collect()
    }

    /// Momentum sources on the faces normal to `a`.
    fn sources(&self, a: Axis, state: &State, prim: &Primitives, terms: RhsTerms, out: &mut Field) {
        let layout = self.layout();
        let v = Variant::Face(a);
        let g = self.geom.get(v);
        let cell = &self.geom.cell;
        let sa = layout.step(a) as usize;
        let dx = self.grid.dx[a.index()];
        let gz = self.consts.g;
        let bg = &state.background;
        let anelastic = state.model == Model::Anelastic;
        self.ranges[v.slot()].for_each(|p| {
            let l = layout.at(p);
            if !g.is_fluid(l) {
                return;
            }
            let lo = l - sa;
            let (flo, fhi) = (cell.is_fluid(lo), cell.is_fluid(l));
            let mut s = self.forcing[a.index()];
            if terms.pressure_gradient && flo && fhi {
                s -= (prim.p_pert[l] - prim.p_pert[lo]) / dx;
            }
            if a == Axis::Z && gz != 0.0 {
                let (klo, khi) = (p[2] - 1, p[2]);
                if anelastic {
                    let tp = |i: usize, k: isize| (prim.theta[i] - bg.theta(k)) / bg.theta(k);
                    s += buoyancy_anelastic(
                        gz,
                        bg.rho_zface(p[2]),
                        flo.then(|| tp(lo, klo)),
                        fhi.then(|| tp(l, khi)),
                    );
                } else {
                    s += buoyancy_compressible(
                        gz,
                        flo.then(|| state.rho[lo] - bg.rho(klo)),
                        fhi.then(|| state.rho[l] - bg.rho(khi)),
                    );
                }
            }
            out[l] += s;
        });
    }

    /// Right-hand side of every prognostic equation on the owned ranges.
    pub fn rhs(&self, state: &State, prim: &Primitives, terms: RhsTerms) -> Rhs {
        let layout = self.layout();
        let anelastic = state.model == Model::Anelastic;
        let mut rhs = Rhs {
            rho: Field::zeros(layout),
            rho_theta: Field::zeros(layout),
            mom: [Field::zeros(layout), Field::zeros(layout), Field::zeros(layout)],
            boundary_mass_flux: 0.0,
        };
        // cell-centered equations
        {
            let mut fl: [Vec<Field>; 3] = Default::default();
            for d in Axis::ALL {
                fl[d.index()] = self.face_fluxes(Variant::Cell, d, state, prim);
            }
            let g = &self.geom.cell;
            let rt: [&Field; 3] = [&fl[0][0], &fl[1][0], &fl[2][0]];
            divergence_update_into(g, &rt, &[], self.ranges[0], &mut rhs.rho_theta);
            if !anelastic {
                let rm: [&Field; 3] = [&fl[0][1], &fl[1][1], &fl[2][1]];
                divergence_update_into(g, &rm, &[], self.ranges[0], &mut rhs.rho);
                rhs.boundary_mass_flux = boundary_flux(g, &rm, &self.bcs);
            }
        }
        for a in Axis::ALL {
            let v = Variant::Face(a);
            let g = self.geom.get(v);
            let fl = Axis::ALL.map(|d| self.face_fluxes(v, d, state, prim).swap_remove(0));
            let eb = self.eb_fluxes(a, prim);
            let out = &mut rhs.mom[a.index()];
            divergence_update_into(g, &[&fl[0], &fl[1], &fl[2]], &eb, self.ranges[v.slot()], out);
            self.sources(a, state, prim, terms, out);
        }
        rhs
    }
}

/// `δU = −(1/α) [Σ_d (β⁺F⁺ − β⁻F⁻)/Δ_d + (A^EB/V) F^EB]` over `range`,
/// added to `out`; covered control volumes are left at zero. `eb` lists
/// `(index, A^EB·F^EB)` pairs.
pub fn divergence_update_into(g: &EbGeometry, flux: &[&Field; 3], eb: &[(usize, f64)], range: Range3, out: &mut Field) {
    let layout = g.layout;
    let dx = g.grid.dx;
    let vol = g.grid.cell_volume();
    range.for_each(|p| {
        let l = layout.at(p);
        let alpha = g.alpha[l];
        if alpha <= 0.0 {
            return;
        }
        let mut s = 0.0;
        for d in 0..3 {
            let sd = layout.stride[d] as usize;
            let beta = &g.beta[d];
            s += (beta[l + sd] * flux[d][l + sd] - beta[l] * flux[d][l]) / dx[d];
        }
        out[l] -= s / alpha;
    });
    for &(l, af) in eb {
        let alpha = g.alpha[l];
        if alpha > 0.0 {
            out[l] -= af / (vol * alpha);
        }
    }
}

/// [`divergence_update_into`] into a fresh field.
pub fn divergence_update(g: &EbGeometry, flux: &[&Field; 3], eb: &[(usize, f64)], range: Range3) -> Field {
    let mut out = Field::zeros(g.layout);
    divergence_update_into(g, flux, eb, range, &mut out);
    out
}

/// Net outward flux `Σ β A F` through the non-periodic domain faces.
pub fn boundary_flux(g: &EbGeometry, flux: &[&Field; 3], bcs: &BoundarySpec) -> f64 {
    let n = g.grid.n;
    let layout = g.layout;
    let mut total = 0.0;
    for ax in Axis::ALL {
        if bcs.is_periodic(ax) {
            continue;
        }
        let d = ax.index();
        let area = g.grid.face_area(ax);
        let mut r = Range3::interior(Variant::Cell, n);
        for (at, sign) in [(0isize, -1.0), (n[d] as isize, 1.0)] {
            r.lo[d] = at;
            r.hi[d] = at + 1;
            r.for_each(|p| {
                let l = layout.at(p);
                total += sign * g.beta[d][l] * area * flux[d][l];
            });
        }
    }
    total
}

/// `−(p'_i − p'_{i−1})/Δ` on the faces normal to `a`.
pub fn pressure_gradient_source(p_pert: &Field, a: Axis, dx: f64, range: Range3) -> Field {
    let layout = p_pert.layout;
    let sa = layout.step(a) as usize;
    let mut out = Field::zeros(layout);
    range.for_each(|p| {
        let l = layout.at(p);
        out[l] = -(p_pert[l] - p_pert[l - sa]) / dx;
    });
    out
}

#[cfg(test)]
mod tests;
