//! Assembly of cell-centered and staggered geometry datasets.

use std::collections::HashMap;

use super::cell::{self, classify_cells, CellRange, Crossing, CutCell, FaceQuads, Lattice, NodeSamples, Patch, SNAP};
use super::clip::{add, norm, scale, P3};
use super::surface::ImplicitSurface;
use super::{CellClass, EbFacet, EbGeometry, GeometryOptions, GeometrySet};
use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, Layout, Variant, N_GHOST};

/// One half of a cell, cut by the mid-plane normal to some axis. Positions are
/// cell-local (origin at the low corner of the cell).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HalfCell {
    pub volume: f64,
    pub centroid: P3,
    pub eb_area: f64,
    /// Sum of facet area times unit normal.
    pub eb_vector: P3,
    pub eb_centroid: P3,
}

/// Per-cell clipping results from which every grid family is assembled.
#[derive(Debug, Clone)]
pub struct HalfCellData {
    pub grid: GridSpec,
    nodes: NodeSamples,
    range: CellRange,
    class: Vec<CellClass>,
    cut: HashMap<usize, CutCell>,
    faces: [HashMap<usize, FaceQuads>; 3],
}

/// Physical position of the low corner of cell `c`, wrapped into the domain
/// along periodic axes so that periodic images clip identically.
fn cell_base(grid: &GridSpec, c: [isize; 3]) -> P3 {
    let mut w = c;
    for a in 0..3 {
        if grid.periodic[a] {
            w[a] = w[a].rem_euclid(grid.n[a] as isize);
        }
    }
    grid.node(w)
}

impl HalfCellData {
    pub fn build(surface: &dyn ImplicitSurface, grid: &GridSpec, opts: GeometryOptions) -> Result<Self> {
        opts.validate()?;
        let mode = opts.intersection;
        let (nodes, mut class) = classify_cells(surface, grid)?;
        let range = CellRange::new(grid.n);
        let vc = grid.cell_volume();
        let mut cut = HashMap::new();
        let mut err = None;
        range.for_each(|c| {
            let i = range.idx(c);
            if class[i] != CellClass::Cut || err.is_some() {
                return;
            }
            let phi = nodes.corners(c);
            if let Err(reason) = cell::check_topology(&phi) {
                err = Some(Error::UnsupportedTopology { i: c[0], j: c[1], k: c[2], reason });
                return;
            }
            let lat = if opts.refine == 1 {
                Lattice::corners(&phi)
            } else {
                match nodes.cell_lattice(surface, opts.refine, c) {
                    Ok(l) => l,
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                }
            };
            let cross = Crossing { mode, surface, base: cell_base(grid, c) };
            let cc = cell::cut_cell(&lat, grid.dx, &cross);
            let alpha = cc.volume() / vc;
            if alpha < SNAP {
                class[i] = CellClass::Covered;
            } else if alpha > 1.0 - SNAP {
                class[i] = CellClass::Regular;
            } else {
                cut.insert(i, cc);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let mut faces: [HashMap<usize, FaceQuads>; 3] = Default::default();
        range.for_each(|c| {
            for (d, map) in faces.iter_mut().enumerate() {
                if err.is_some() {
                    return;
                }
                let phi = nodes.face_corners(d, c);
                if phi.iter().all(|&v| v > 0.0) || phi.iter().all(|&v| v <= 0.0) {
                    continue;
                }
                let lat = match nodes.face_lattice(surface, opts.refine, d, c) {
                    Ok(l) => l,
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                };
                let [b, cc] = cell::others(d);
                let cross = Crossing { mode, surface, base: cell_base(grid, c) };
                let to_local = |u: f64, v: f64| {
                    let mut p = [0.0; 3];
                    p[b] = u;
                    p[cc] = v;
                    p
                };
                map.insert(range.idx(c), cell::face_quads(&lat, opts.refine, grid.dx[b], grid.dx[cc], &cross, to_local));
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(HalfCellData { grid: *grid, nodes, range, class, cut, faces })
    }

    pub fn contains(&self, c: [isize; 3]) -> bool {
        self.range.contains(c)
    }

    pub fn class(&self, c: [isize; 3]) -> CellClass {
        self.class[self.range.idx(c)]
    }

    pub fn cut_cell(&self, c: [isize; 3]) -> Option<&CutCell> {
        self.cut.get(&self.range.idx(c))
    }

    pub fn volume(&self, c: [isize; 3]) -> f64 {
        match self.class(c) {
            CellClass::Covered => 0.0,
            CellClass::Regular => self.grid.cell_volume(),
            CellClass::Cut => self.cut_cell(c).map_or(0.0, CutCell::volume),
        }
    }

    /// Low (`high = false`) or high half of cell `c` along `axis`.
    pub fn half(&self, c: [isize; 3], axis: Axis, high: bool) -> HalfCell {
        let a = axis.index();
        let dx = self.grid.dx;
        match self.class(c) {
            CellClass::Covered => HalfCell::default(),
            CellClass::Regular => {
                let mut centroid = scale(dx, 0.5);
                centroid[a] = dx[a] * if high { 0.75 } else { 0.25 };
                HalfCell { volume: 0.5 * self.grid.cell_volume(), centroid, ..Default::default() }
            }
            CellClass::Cut => {
                let Some(cc) = self.cut_cell(c) else { return HalfCell::default() };
                let mut h = HalfCell::default();
                let mut moment = [0.0; 3];
                let mut eb_moment = [0.0; 3];
                for (bits, o) in cc.octants.iter().enumerate() {
                    if ((bits >> a) & 1 == 1) != high {
                        continue;
                    }
                    h.volume += o.volume;
                    moment = add(moment, o.moment);
                    h.eb_area += o.eb_area;
                    eb_moment = add(eb_moment, o.eb_moment);
                    h.eb_vector = add(h.eb_vector, o.eb_vector);
                }
                if h.volume > 0.0 {
                    h.centroid = scale(moment, 1.0 / h.volume);
                }
                if h.eb_area > 0.0 {
                    h.eb_centroid = scale(eb_moment, 1.0 / h.eb_area);
                }
                h
            }
        }
    }

    /// Fluid part of the mid-plane normal to `axis`, by quadrant.
    pub fn mid_plane(&self, c: [isize; 3], axis: Axis) -> [Patch; 4] {
        let a = axis.index();
        let dx = self.grid.dx;
        match self.class(c) {
            CellClass::Covered => [Patch::default(); 4],
            CellClass::Regular => {
                let [b, cc] = cell::others(a);
                let mut out = [Patch::default(); 4];
                for (q, p) in out.iter_mut().enumerate() {
                    let area = 0.25 * dx[b] * dx[cc];
                    let mut m = [0.0; 3];
                    m[a] = 0.5 * dx[a];
                    m[b] = (0.25 + 0.5 * (q & 1) as f64) * dx[b];
                    m[cc] = (0.25 + 0.5 * ((q >> 1) & 1) as f64) * dx[cc];
                    *p = Patch { area, moment: scale(m, area) };
                }
                out
            }
            CellClass::Cut => self.cut_cell(c).map_or([Patch::default(); 4], |cc| cc.mid[a]),
        }
    }

    /// Fluid part of the low-`axis` face of cell `c`, from the node samples.
    pub fn face(&self, axis: Axis, c: [isize; 3]) -> FaceQuads {
        let d = axis.index();
        let [b, cc] = cell::others(d);
        if let Some(q) = self.faces[d].get(&self.range.idx(c)) {
            return *q;
        }
        let phi = self.nodes.face_corners(d, c);
        if phi.iter().all(|&v| v > 0.0) {
            FaceQuads::full(self.grid.dx[b], self.grid.dx[cc])
        } else {
            FaceQuads::default()
        }
    }

    pub fn nodes(&self) -> &NodeSamples {
        &self.nodes
    }
}

struct RawCv {
    class: CellClass,
    volume: f64,
    centroid: P3,
    eb_vector: P3,
    eb_centroid: P3,
    fallback: P3,
}

impl RawCv {
    fn covered() -> Self {
        RawCv {
            class: CellClass::Covered,
            volume: 0.0,
            centroid: [0.0; 3],
            eb_vector: [0.0; 3],
            eb_centroid: [0.0; 3],
            fallback: [0.0; 3],
        }
    }
}

#[derive(Clone, Copy, Default)]
struct RawFace {
    area: f64,
    centroid: [f64; 2],
}

/// Index box `[-G, n + G + 2)` used while assembling.
struct Work {
    lo: isize,
    ext: [usize; 3],
}

impl Work {
    fn new(n: [usize; 3]) -> Self {
        let g = N_GHOST;
        Work { lo: -(g as isize), ext: [n[0] + 2 * g + 2, n[1] + 2 * g + 2, n[2] + 2 * g + 2] }
    }
    fn contains(&self, p: [isize; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.lo && p[a] < self.lo + self.ext[a] as isize)
    }
    fn idx(&self, p: [isize; 3]) -> usize {
        let i = (p[0] - self.lo) as usize;
        let j = (p[1] - self.lo) as usize;
        let k = (p[2] - self.lo) as usize;
        i + self.ext[0] * (j + self.ext[1] * k)
    }
    fn len(&self) -> usize {
        self.ext[0] * self.ext[1] * self.ext[2]
    }
    fn for_each(&self, mut f: impl FnMut([isize; 3])) {
        for k in 0..self.ext[2] as isize {
            for j in 0..self.ext[1] as isize {
                for i in 0..self.ext[0] as isize {
                    f([i + self.lo, j + self.lo, k + self.lo]);
                }
            }
        }
    }
}

fn unit(v: P3) -> Option<P3> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| scale(v, 1.0 / n))
}

fn assemble(
    variant: Variant,
    grid: &GridSpec,
    cv: impl Fn([isize; 3]) -> RawCv,
    face: impl Fn(Axis, [isize; 3]) -> RawFace,
) -> EbGeometry {
    let work = Work::new(grid.n);
    let vc = grid.cell_volume();
    let area = [grid.face_area(Axis::X), grid.face_area(Axis::Y), grid.face_area(Axis::Z)];
    let amax = area.iter().cloned().fold(0.0, f64::max);

    let mut cvs: Vec<RawCv> = Vec::with_capacity(work.len());
    work.for_each(|p| cvs.push(cv(p)));
    let mut faces: [Vec<RawFace>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for axis in Axis::ALL {
        let d = axis.index();
        let fv = &mut faces[d];
        fv.reserve(work.len());
        work.for_each(|f| {
            let mut lo = f;
            lo[d] -= 1;
            let mut classes = [Some(cvs[work.idx(f)].class), None];
            if work.contains(lo) {
                classes[1] = Some(cvs[work.idx(lo)].class);
            }
            let raw = if classes.contains(&Some(CellClass::Covered)) {
                RawFace::default()
            } else if classes.contains(&Some(CellClass::Regular)) {
                RawFace { area: area[d], centroid: [0.0; 2] }
            } else {
                let r = face(axis, f);
                RawFace { area: r.area.clamp(0.0, area[d]), centroid: r.centroid }
            };
            fv.push(raw);
        });
    }
    // a regular volume that lost a face to a covered neighbor carries a wall there
    work.for_each(|p| {
        let i = work.idx(p);
        if cvs[i].class != CellClass::Regular {
            return;
        }
        for d in 0..3 {
            let mut q = p;
            q[d] += 1;
            let hi_closed = work.contains(q) && faces[d][work.idx(q)].area < area[d];
            if faces[d][i].area < area[d] || hi_closed {
                cvs[i].class = CellClass::Cut;
            }
        }
    });

    let layout = Layout::new(grid.n);
    let len = layout.len();
    let mut g = EbGeometry {
        variant,
        grid: *grid,
        layout,
        class: vec![CellClass::Covered; len],
        alpha: vec![0.0; len],
        beta: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        face_centroid: [vec![[0.0; 2]; len], vec![[0.0; 2]; len], vec![[0.0; 2]; len]],
        vol_centroid: vec![[0.0; 3]; len],
        eb: HashMap::new(),
        cut: Vec::new(),
    };
    let beta_of = |d: usize, wi: usize| (faces[d][wi].area / area[d]).clamp(0.0, 1.0);

    layout.full_range().for_each(|p| {
        let lin = layout.at(p);
        let wi = work.idx(p);
        let r = &cvs[wi];
        g.class[lin] = r.class;
        g.alpha[lin] = match r.class {
            CellClass::Covered => 0.0,
            CellClass::Regular => 1.0,
            CellClass::Cut => (r.volume / vc).clamp(0.0, 1.0),
        };
        if r.class == CellClass::Cut {
            g.vol_centroid[lin] = r.centroid;
        }
        for d in 0..3 {
            g.beta[d][lin] = beta_of(d, wi);
            g.face_centroid[d][lin] = faces[d][wi].centroid;
        }
        if r.class != CellClass::Cut {
            return;
        }
        let mut vec = [0.0; 3];
        for d in 0..3 {
            let mut q = p;
            q[d] += 1;
            vec[d] = -(beta_of(d, work.idx(q)) - beta_of(d, wi)) * area[d];
        }
        let a_eb = norm(vec);
        let closure = unit(vec);
        let mut normal = unit(r.eb_vector).or_else(|| unit(r.fallback)).or(closure).unwrap_or([0.0, 0.0, -1.0]);
        let mismatch = (0..3).map(|d| (a_eb * normal[d] - vec[d]).abs()).fold(0.0, f64::max);
        if mismatch > 1e-13 * amax {
            if let Some(c) = closure {
                normal = c;
            }
        }
        g.eb.insert(lin, EbFacet { area: a_eb, normal, centroid: r.eb_centroid });
        g.cut.push(lin);
    });
    g
}

fn offsets(local: P3, dx: [f64; 3], shift_axis: Option<usize>) -> P3 {
    let mut o = [0.0; 3];
    for a in 0..3 {
        o[a] = if Some(a) == shift_axis { local[a] / dx[a] } else { local[a] / dx[a] - 0.5 };
    }
    o
}

/// Cell-centered geometry together with the half-cell data it was built from.
pub fn build_cc_geometry(
    surface: &dyn ImplicitSurface,
    grid: &GridSpec,
    opts: GeometryOptions,
) -> Result<(EbGeometry, HalfCellData)> {
    let half = HalfCellData::build(surface, grid, opts)?;
    let geom = cc_from_half(&half);
    Ok((geom, half))
}

fn cc_from_half(half: &HalfCellData) -> EbGeometry {
    let grid = half.grid;
    let dx = grid.dx;
    let cv = |p: [isize; 3]| -> RawCv {
        match half.class(p) {
            CellClass::Covered => RawCv::covered(),
            CellClass::Regular => RawCv { class: CellClass::Regular, volume: grid.cell_volume(), ..RawCv::covered() },
            CellClass::Cut => {
                let Some(cc) = half.cut_cell(p) else { return RawCv::covered() };
                let v = cc.volume();
                let ea = cc.eb_area();
                RawCv {
                    class: CellClass::Cut,
                    volume: v,
                    centroid: offsets(scale(cc.moment(), 1.0 / v), dx, None),
                    eb_vector: cc.eb_vector(),
                    eb_centroid: if ea > 0.0 { offsets(scale(cc.eb_moment(), 1.0 / ea), dx, None) } else { [0.0; 3] },
                    fallback: [0.0; 3],
                }
            }
        }
    };
    let face = |axis: Axis, f: [isize; 3]| -> RawFace {
        let d = axis.index();
        let [b, c] = cell::others(d);
        let q = half.face(axis, f);
        let a = q.total();
        let m = q.total_moment();
        let centroid = if a > 0.0 { [m[0] / a / dx[b] - 0.5, m[1] / a / dx[c] - 0.5] } else { [0.0; 2] };
        RawFace { area: a, centroid }
    };
    assemble(Variant::Cell, &grid, cv, face)
}

/// Geometry of control volumes centered on the faces normal to `axis`.
pub fn build_staggered_geometry(half: &HalfCellData, axis: Axis) -> EbGeometry {
    let grid = half.grid;
    let dx = grid.dx;
    let a = axis.index();
    let vc = grid.cell_volume();
    let shift_lo = |mut p: P3| {
        p[a] -= dx[a];
        p
    };
    let cv = |m: [isize; 3]| -> RawCv {
        let mut l = m;
        l[a] -= 1;
        let (cl, cr) = (half.class(l), half.class(m));
        if cl == CellClass::Regular && cr == CellClass::Regular {
            return RawCv { class: CellClass::Regular, volume: vc, ..RawCv::covered() };
        }
        if cl == CellClass::Covered && cr == CellClass::Covered {
            return RawCv::covered();
        }
        let hl = half.half(l, axis, true);
        let hr = half.half(m, axis, false);
        let v = hl.volume + hr.volume;
        let alpha = v / vc;
        if alpha < SNAP {
            return RawCv::covered();
        }
        if alpha > 1.0 - SNAP {
            return RawCv { class: CellClass::Regular, volume: vc, ..RawCv::covered() };
        }
        let moment = add(scale(shift_lo(hl.centroid), hl.volume), scale(hr.centroid, hr.volume));
        let ea = hl.eb_area + hr.eb_area;
        let eb_moment = add(scale(shift_lo(hl.eb_centroid), hl.eb_area), scale(hr.eb_centroid, hr.eb_area));
        let fallback = if hl.eb_area >= hr.eb_area { hl.eb_vector } else { hr.eb_vector };
        RawCv {
            class: CellClass::Cut,
            volume: v,
            centroid: offsets(scale(moment, 1.0 / v), dx, Some(a)),
            eb_vector: add(hl.eb_vector, hr.eb_vector),
            eb_centroid: if ea > 0.0 { offsets(scale(eb_moment, 1.0 / ea), dx, Some(a)) } else { [0.0; 3] },
            fallback,
        }
    };
    let face = |fax: Axis, f: [isize; 3]| -> RawFace {
        let d = fax.index();
        let [p0, p1] = cell::others(d);
        if d == a {
            let mut l = f;
            l[a] -= 1;
            let quads = half.mid_plane(l, axis);
            let area: f64 = quads.iter().map(|q| q.area).sum();
            if area <= 0.0 {
                return RawFace::default();
            }
            let m = quads.iter().fold([0.0; 3], |m, q| add(m, q.moment));
            RawFace { area, centroid: [m[p0] / area / dx[p0] - 0.5, m[p1] / area / dx[p1] - 0.5] }
        } else {
            // the stagger axis is one of the face's in-plane axes
            let ia = if p0 == a { 0 } else { 1 };
            let ic = 1 - ia;
            let c_axis = [p0, p1][ic];
            let mut l = f;
            l[a] -= 1;
            let mut area = 0.0;
            let mut mom = [0.0; 2];
            for (cellp, want, shift) in [(l, 1usize, dx[a]), (f, 0usize, 0.0)] {
                let q = half.face(fax, cellp);
                for k in 0..4 {
                    let bit = if ia == 0 { k & 1 } else { (k >> 1) & 1 };
                    if bit != want || q.area[k] <= 0.0 {
                        continue;
                    }
                    area += q.area[k];
                    mom[ia] += q.moment[k][ia] - shift * q.area[k];
                    mom[ic] += q.moment[k][ic];
                }
            }
            if area <= 0.0 {
                return RawFace::default();
            }
            let mut centroid = [0.0; 2];
            centroid[ia] = mom[ia] / area / dx[a];
            centroid[ic] = mom[ic] / area / dx[c_axis] - 0.5;
            RawFace { area, centroid }
        }
    };
    assemble(Variant::Face(axis), &grid, cv, face)
}

/// All four geometry families for `surface` on `grid`.
pub fn build_geometry_set(
    surface: &dyn ImplicitSurface,
    grid: &GridSpec,
    opts: GeometryOptions,
) -> Result<(GeometrySet, HalfCellData)> {
    let (cell, half) = build_cc_geometry(surface, grid, opts)?;
    let faces = [
        build_staggered_geometry(&half, Axis::X),
        build_staggered_geometry(&half, Axis::Y),
        build_staggered_geometry(&half, Axis::Z),
    ];
    Ok((GeometrySet { cell, faces }, half))
}
