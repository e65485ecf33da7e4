//! Node sampling, cell classification and per-cell clipping.
//!
//! Each cell is split into its six Kuhn tetrahedra (every tetrahedron follows a
//! monotone path from the low corner to the high corner) and the fluid part of
//! each is bounded by the planar facets through its edge crossings. Face restrictions of this triangulation use the diagonal from
//! the low to the high corner of the face, so neighboring cells agree on every
//! shared face. All per-cell quantities are in cell-local coordinates with the
//! origin at the low corner.

use super::clip::{self, add, scale, Affine, Tet, P3};
use super::surface::ImplicitSurface;
use super::CellClass;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, N_GHOST};

/// Node values within this fraction of the largest magnitude count as solid ties.
pub const TIE_EPS: f64 = 1e-12;
/// Volume fractions below this are covered, above `1 - SNAP` regular.
pub const SNAP: f64 = 1e-14;

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Cells stored for geometry purposes: the field layout grown by one cell on
/// the low side and two on the high side.
#[derive(Debug, Clone, Copy)]
pub struct CellRange {
    pub n: [usize; 3],
    pub lo: isize,
    pub ext: [usize; 3],
}

impl CellRange {
    pub fn new(n: [usize; 3]) -> Self {
        let lo = -(N_GHOST as isize) - 1;
        let ext = [n[0] + 2 * N_GHOST + 3, n[1] + 2 * N_GHOST + 3, n[2] + 2 * N_GHOST + 3];
        CellRange { n, lo, ext }
    }

    #[inline]
    pub fn contains(&self, p: [isize; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.lo && p[a] < self.lo + self.ext[a] as isize)
    }

    #[inline]
    pub fn idx(&self, p: [isize; 3]) -> usize {
        debug_assert!(self.contains(p));
        let i = (p[0] - self.lo) as usize;
        let j = (p[1] - self.lo) as usize;
        let k = (p[2] - self.lo) as usize;
        i + self.ext[0] * (j + self.ext[1] * k)
    }

    pub fn len(&self) -> usize {
        self.ext[0] * self.ext[1] * self.ext[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn for_each(&self, mut f: impl FnMut([isize; 3])) {
        for k in 0..self.ext[2] as isize {
            for j in 0..self.ext[1] as isize {
                for i in 0..self.ext[0] as isize {
                    f([i + self.lo, j + self.lo, k + self.lo]);
                }
            }
        }
    }
}

/// Level-set samples on the nodes of the extended cell range.
#[derive(Debug, Clone)]
pub struct NodeSamples {
    pub grid: GridSpec,
    lo: isize,
    ext: [usize; 3],
    values: Vec<f64>,
    tie: f64,
}

impl NodeSamples {
    pub fn sample(surface: &dyn ImplicitSurface, grid: &GridSpec) -> Result<Self> {
        let lo = -(N_GHOST as isize) - 1;
        let ext = [grid.n[0] + 2 * N_GHOST + 4, grid.n[1] + 2 * N_GHOST + 4, grid.n[2] + 2 * N_GHOST + 4];
        let mut values = Vec::with_capacity(ext[0] * ext[1] * ext[2]);
        for k in 0..ext[2] as isize {
            for j in 0..ext[1] as isize {
                for i in 0..ext[0] as isize {
                    let mut p = [i + lo, j + lo, k + lo];
                    for a in 0..3 {
                        if grid.periodic[a] {
                            p[a] = p[a].rem_euclid(grid.n[a] as isize);
                        }
                    }
                    let v = surface.value(grid.node(p));
                    if !v.is_finite() {
                        return Err(Error::NonFiniteLevelSet { i: i + lo, j: j + lo, k: k + lo, value: v });
                    }
                    values.push(v);
                }
            }
        }
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tie = -TIE_EPS * if scale > 0.0 { scale } else { 1.0 };
        for v in values.iter_mut() {
            if v.abs() <= -tie {
                *v = tie;
            }
        }
        Ok(NodeSamples { grid: *grid, lo, ext, values, tie })
    }

    #[inline]
    pub fn get(&self, p: [isize; 3]) -> f64 {
        let i = (p[0] - self.lo) as usize;
        let j = (p[1] - self.lo) as usize;
        let k = (p[2] - self.lo) as usize;
        self.values[i + self.ext[0] * (j + self.ext[1] * k)]
    }

    /// Value at point `r c + s` of the lattice refined `r` times. Points that
    /// coincide with nodes reuse the node sample.
    pub fn refined(&self, surface: &dyn ImplicitSurface, r: usize, c: [isize; 3], s: [usize; 3]) -> Result<f64> {
        if s.iter().all(|&v| v % r == 0) {
            return Ok(self.get([c[0] + (s[0] / r) as isize, c[1] + (s[1] / r) as isize, c[2] + (s[2] / r) as isize]));
        }
        let ri = r as isize;
        let mut pos = [0.0; 3];
        for a in 0..3 {
            let mut g = ri * c[a] + s[a] as isize;
            if self.grid.periodic[a] {
                g = g.rem_euclid(ri * self.grid.n[a] as isize);
            }
            pos[a] = self.grid.origin[a] + g as f64 * (self.grid.dx[a] / r as f64);
        }
        let v = surface.value(pos);
        if !v.is_finite() {
            return Err(Error::NonFiniteLevelSet { i: c[0], j: c[1], k: c[2], value: v });
        }
        Ok(if v.abs() <= -self.tie { self.tie } else { v })
    }

    /// Refined lattice of cell `c`: `(r + 1)^3` values ordered `i + (r + 1) (j + (r + 1) k)`.
    pub fn cell_lattice(&self, surface: &dyn ImplicitSurface, r: usize, c: [isize; 3]) -> Result<Lattice> {
        let m = r + 1;
        let mut values = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    values.push(self.refined(surface, r, c, [i, j, k])?);
                }
            }
        }
        Ok(Lattice { r, values })
    }

    /// Refined lattice of the low-`d` face of cell `c`, ordered `ib + (r + 1) ic`.
    pub fn face_lattice(&self, surface: &dyn ImplicitSurface, r: usize, d: usize, c: [isize; 3]) -> Result<Vec<f64>> {
        let [b, cc] = others(d);
        let m = r + 1;
        let mut values = Vec::with_capacity(m * m);
        for ic in 0..m {
            for ib in 0..m {
                let mut s = [0; 3];
                s[b] = ib;
                s[cc] = ic;
                values.push(self.refined(surface, r, c, s)?);
            }
        }
        Ok(values)
    }

    /// Corner values of cell `c`, corner `b` at bit pattern `bx + 2 by + 4 bz`.
    pub fn corners(&self, c: [isize; 3]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (b, o) in out.iter_mut().enumerate() {
            *o = self.get([c[0] + (b & 1) as isize, c[1] + ((b >> 1) & 1) as isize, c[2] + ((b >> 2) & 1) as isize]);
        }
        out
    }

    /// Values at the four nodes of the low-`d` face of cell `c`, ordered by `hb + 2 hc`.
    pub fn face_corners(&self, d: usize, c: [isize; 3]) -> [f64; 4] {
        let [b, cc] = others(d);
        let mut out = [0.0; 4];
        for (q, o) in out.iter_mut().enumerate() {
            let mut p = c;
            p[b] += (q & 1) as isize;
            p[cc] += ((q >> 1) & 1) as isize;
            *o = self.get(p);
        }
        out
    }
}

#[inline]
pub fn others(a: usize) -> [usize; 2] {
    match a {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

pub fn classify_corners(phi: &[f64]) -> CellClass {
    if phi.iter().all(|&v| v > 0.0) {
        CellClass::Regular
    } else if phi.iter().all(|&v| v <= 0.0) {
        CellClass::Covered
    } else {
        CellClass::Cut
    }
}

/// Node values and classification for every cell of the extended range.
pub fn classify_cells(surface: &dyn ImplicitSurface, grid: &GridSpec) -> Result<(NodeSamples, Vec<CellClass>)> {
    grid.validate()?;
    let nodes = NodeSamples::sample(surface, grid)?;
    let range = CellRange::new(grid.n);
    let mut class = vec![CellClass::Covered; range.len()];
    range.for_each(|c| class[range.idx(c)] = classify_corners(&nodes.corners(c)));
    Ok((nodes, class))
}

/// Reject sign patterns whose fluid part is not a single simple piece.
pub fn check_topology(phi: &[f64; 8]) -> std::result::Result<(), &'static str> {
    let pos = |b: usize| phi[b] > 0.0;
    // face loops in cyclic corner order
    const FACES: [[usize; 4]; 6] = [
        [0, 2, 6, 4],
        [1, 3, 7, 5],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [0, 1, 3, 2],
        [4, 5, 7, 6],
    ];
    for f in FACES {
        let s = [pos(f[0]), pos(f[1]), pos(f[2]), pos(f[3])];
        if s[0] == s[2] && s[1] == s[3] && s[0] != s[1] {
            return Err("ambiguous saddle sign pattern on a face");
        }
    }
    let mut seen = [false; 8];
    let mut components = 0;
    for start in 0..8 {
        if !pos(start) || seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(b) = stack.pop() {
            for a in 0..3 {
                let nb = b ^ (1 << a);
                if pos(nb) && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    if components > 1 {
        return Err("disjoint fluid components");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Octant {
    pub volume: f64,
    pub moment: P3,
    pub eb_area: f64,
    pub eb_moment: P3,
    pub eb_vector: P3,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Patch {
    pub area: f64,
    pub moment: P3,
}

/// Clipped data of one cut cell. Octant index is `hx + 2 hy + 4 hz`; mid-plane
/// quadrant index along axis `a` is `hb + 2 hc` over the other two axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCell {
    pub octants: [Octant; 8],
    pub mid: [[Patch; 4]; 3],
}

impl CutCell {
    pub fn volume(&self) -> f64 {
        self.octants.iter().map(|o| o.volume).sum()
    }

    pub fn moment(&self) -> P3 {
        self.octants.iter().fold([0.0; 3], |m, o| add(m, o.moment))
    }

    pub fn eb_area(&self) -> f64 {
        self.octants.iter().map(|o| o.eb_area).sum()
    }

    pub fn eb_moment(&self) -> P3 {
        self.octants.iter().fold([0.0; 3], |m, o| add(m, o.eb_moment))
    }

    pub fn eb_vector(&self) -> P3 {
        self.octants.iter().fold([0.0; 3], |m, o| add(m, o.eb_vector))
    }

    pub fn mid_area(&self, a: usize) -> f64 {
        self.mid[a].iter().map(|p| p.area).sum()
    }

    pub fn mid_moment(&self, a: usize) -> P3 {
        self.mid[a].iter().fold([0.0; 3], |m, p| add(m, p.moment))
    }
}

/// Level-set values on a cell refined `r` times per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub r: usize,
    pub values: Vec<f64>,
}

impl Lattice {
    /// The unrefined lattice of a cell's eight corners.
    pub fn corners(phi: &[f64; 8]) -> Self {
        Lattice { r: 1, values: phi.to_vec() }
    }

    #[inline]
    fn at(&self, p: [usize; 3]) -> f64 {
        let m = self.r + 1;
        self.values[p[0] + m * (p[1] + m * p[2])]
    }
}

/// Kuhn tetrahedron `perm` of the sub-cell with low lattice point `s` and size `h`.
fn kuhn_tet(perm: [usize; 3], lat: &Lattice, s: [usize; 3], h: [f64; 3]) -> (Tet, [f64; 4]) {
    let mut p = s;
    let mut verts = [[s[0] as f64 * h[0], s[1] as f64 * h[1], s[2] as f64 * h[2]]; 4];
    let mut vals = [lat.at(p); 4];
    for (step, &ax) in perm.iter().enumerate() {
        p[ax] += 1;
        let mut v = verts[step];
        v[ax] = p[ax] as f64 * h[ax];
        verts[step + 1] = v;
        vals[step + 1] = lat.at(p);
    }
    (verts, vals)
}

fn split_polygon(poly: Vec<P3>, f: &Affine) -> [Vec<P3>; 2] {
    let hi = clip::clip_polygon(&poly, f);
    let lo = clip::clip_polygon(&poly, &f.negated());
    [lo, hi]
}

/// How the zero crossing on an edge between a fluid and a solid node is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intersection {
    /// Root of the level set itself along the edge.
    #[default]
    Root,
    /// Linear interpolation of the two node values.
    Linear,
}

/// Edge crossing for a region whose local origin sits at `base`.
pub struct Crossing<'a> {
    pub mode: Intersection,
    pub surface: &'a dyn ImplicitSurface,
    pub base: P3,
}

impl Crossing<'_> {
    /// Crossing between fluid point `a` (value `va > 0`) and solid point `b`.
    pub fn point(&self, a: P3, va: f64, b: P3, vb: f64) -> P3 {
        let t = match self.mode {
            Intersection::Linear => va / (va - vb),
            Intersection::Root => self.root(a, va, b, vb),
        };
        add(a, scale(clip::sub(b, a), t))
    }

    fn root(&self, a: P3, va: f64, b: P3, vb: f64) -> f64 {
        let eval = |t: f64| self.surface.value(add(self.base, add(a, scale(clip::sub(b, a), t))));
        // Illinois variant of regula falsi on the bracket [0, 1].
        let (mut t0, mut f0, mut t1, mut f1) = (0.0, va, 1.0, vb);
        let tol = 1e-15 * va.abs().max(vb.abs());
        let mut side = 0;
        let mut t = f0 / (f0 - f1);
        for _ in 0..100 {
            t = t0 + (t1 - t0) * f0 / (f0 - f1);
            if !(t > t0 && t < t1) {
                t = 0.5 * (t0 + t1);
            }
            let ft = eval(t);
            if !ft.is_finite() || ft.abs() <= tol || t1 - t0 < 1e-15 {
                break;
            }
            if ft > 0.0 {
                t0 = t;
                f0 = ft;
                if side == 1 {
                    f1 *= 0.5;
                }
                side = 1;
            } else {
                t1 = t;
                f1 = ft;
                if side == -1 {
                    f0 *= 0.5;
                }
                side = -1;
            }
        }
        t
    }
}

/// Clip a cut cell sampled on `lat` against the level set and its mid-planes.
/// Edge crossings come from `cross` in cell-local coordinates.
pub fn cut_cell(lat: &Lattice, dx: [f64; 3], cross: &Crossing) -> CutCell {
    let mids = [
        Affine::axis(0, 0.5 * dx[0]),
        Affine::axis(1, 0.5 * dx[1]),
        Affine::axis(2, 0.5 * dx[2]),
    ];
    let mut octants = [Octant::default(); 8];
    let mut mid = [[Patch::default(); 4]; 3];
    let mut fluid = Vec::with_capacity(4);
    let mut surface = Vec::with_capacity(2);
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut xf = |a: P3, va: f64, b: P3, vb: f64| cross.point(a, va, b, vb);

    let r = lat.r;
    let h = [dx[0] / r as f64, dx[1] / r as f64, dx[2] / r as f64];
    let mut subcells = Vec::with_capacity(r * r * r);
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                subcells.push([i, j, k]);
            }
        }
    }
    for (sub, perm) in subcells.iter().flat_map(|s| PERMS.iter().map(move |p| (*s, *p))) {
        let (tet, vals) = kuhn_tet(perm, lat, sub, h);
        if vals.iter().all(|&v| v <= 0.0) {
            continue;
        }

        fluid.clear();
        surface.clear();
        clip::clip_tet_with(&tet, vals, &mut xf, &mut fluid, Some(&mut surface));
        let mut pieces: Vec<(usize, Tet)> = fluid.iter().map(|t| (0usize, *t)).collect();
        for (a, m) in mids.iter().enumerate() {
            let mut next = Vec::with_capacity(pieces.len() * 2);
            for (bits, t) in &pieces {
                lo.clear();
                hi.clear();
                clip::split_tet(t, m, &mut hi, &mut lo);
                next.extend(lo.iter().map(|t| (*bits, *t)));
                next.extend(hi.iter().map(|t| (*bits | (1 << a), *t)));
            }
            pieces = next;
        }
        for (bits, t) in &pieces {
            let v = clip::tet_volume(t);
            let o = &mut octants[*bits];
            o.volume += v;
            o.moment = add(o.moment, scale(clip::tet_centroid(t), v));
        }

        for tri in &surface {
            let mut pieces = vec![(0usize, tri.to_vec())];
            for (a, m) in mids.iter().enumerate() {
                let mut next = Vec::with_capacity(pieces.len() * 2);
                for (bits, p) in pieces {
                    let [l, h] = split_polygon(p, m);
                    next.push((bits, l));
                    next.push((bits | (1 << a), h));
                }
                pieces = next;
            }
            for (bits, p) in pieces {
                let (vec, area, c) = clip::polygon_moments(&p);
                if area > 0.0 {
                    let o = &mut octants[bits];
                    o.eb_area += area;
                    o.eb_moment = add(o.eb_moment, scale(c, area));
                    o.eb_vector = add(o.eb_vector, vec);
                }
            }
        }

        for a in 0..3 {
            let [b, c] = others(a);
            for t in &fluid {
                let sec = clip::tet_section(t, &mids[a]);
                if sec.len() < 3 {
                    continue;
                }
                for (hb, pb) in split_polygon(sec, &mids[b]).into_iter().enumerate() {
                    for (hc, pc) in split_polygon(pb, &mids[c]).into_iter().enumerate() {
                        let (_, area, cen) = clip::polygon_moments(&pc);
                        if area > 0.0 {
                            let p = &mut mid[a][hb + 2 * hc];
                            p.area += area;
                            p.moment = add(p.moment, scale(cen, area));
                        }
                    }
                }
            }
        }
    }
    CutCell { octants, mid }
}

/// Fluid area of each quadrant of a cell face, with moments in the in-plane
/// coordinates `(u_b, u_c)` relative to the face's low corner.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaceQuads {
    pub area: [f64; 4],
    pub moment: [[f64; 2]; 4],
}

impl FaceQuads {
    pub fn full(db: f64, dc: f64) -> Self {
        let mut f = FaceQuads::default();
        for q in 0..4 {
            let a = 0.25 * db * dc;
            let ub = (0.25 + 0.5 * (q & 1) as f64) * db;
            let uc = (0.25 + 0.5 * ((q >> 1) & 1) as f64) * dc;
            f.area[q] = a;
            f.moment[q] = [a * ub, a * uc];
        }
        f
    }

    pub fn total(&self) -> f64 {
        self.area.iter().sum()
    }

    pub fn total_moment(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for q in 0..4 {
            m[0] += self.moment[q][0];
            m[1] += self.moment[q][1];
        }
        m
    }
}

/// Clip a face sampled on an `(r + 1)^2` lattice ordered `ib + (r + 1) ic`.
/// `to_local` maps the in-plane coordinates `(u_b, u_c)` to the frame of `cross`.
pub fn face_quads(
    lat: &[f64],
    r: usize,
    db: f64,
    dc: f64,
    cross: &Crossing,
    to_local: impl Fn(f64, f64) -> P3,
) -> FaceQuads {
    if lat.iter().all(|&v| v > 0.0) {
        return FaceQuads::full(db, dc);
    }
    let mut out = FaceQuads::default();
    if lat.iter().all(|&v| v <= 0.0) {
        return out;
    }
    let m = r + 1;
    let (hb, hc) = (db / r as f64, dc / r as f64);
    let mut xf = |a: P3, va: f64, b: P3, vb: f64| {
        let la = to_local(a[0], a[1]);
        let lb = to_local(b[0], b[1]);
        let x = cross.point(la, va, lb, vb);
        // recover the in-plane coordinates from the edge parameter
        let len = clip::norm(clip::sub(lb, la));
        let t = if len > 0.0 { clip::norm(clip::sub(x, la)) / len } else { 0.0 };
        add(a, scale(clip::sub(b, a), t))
    };
    let mb = Affine::axis(0, 0.5 * db);
    let mc = Affine::axis(1, 0.5 * dc);
    for jc in 0..r {
        for jb in 0..r {
            let v = |ib: usize, ic: usize| lat[jb + ib + m * (jc + ic)];
            let pt = |ib: usize, ic: usize| [(jb + ib) as f64 * hb, (jc + ic) as f64 * hc, 0.0];
            let tris = [
                ([pt(0, 0), pt(1, 0), pt(1, 1)], [v(0, 0), v(1, 0), v(1, 1)]),
                ([pt(0, 0), pt(1, 1), pt(0, 1)], [v(0, 0), v(1, 1), v(0, 1)]),
            ];
            for (tri, vals) in tris {
                let wet = clip::clip_polygon_with(&tri, &vals, &mut xf);
                for (qb, pb) in split_polygon(wet, &mb).into_iter().enumerate() {
                    for (qc, pc) in split_polygon(pb, &mc).into_iter().enumerate() {
                        let (_, area, c) = clip::polygon_moments(&pc);
                        if area > 0.0 {
                            let q = qb + 2 * qc;
                            out.area[q] += area;
                            out.moment[q][0] += area * c[0];
                            out.moment[q][1] += area * c[1];
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(_: [f64; 3]) -> f64 {
        1.0
    }

    fn linear() -> Crossing<'static> {
        Crossing { mode: Intersection::Linear, surface: &flat, base: [0.0; 3] }
    }

    fn corners_of(f: impl Fn([f64; 3]) -> f64, dx: [f64; 3]) -> [f64; 8] {
        let mut phi = [0.0; 8];
        for (b, v) in phi.iter_mut().enumerate() {
            *v = f([(b & 1) as f64 * dx[0], ((b >> 1) & 1) as f64 * dx[1], ((b >> 2) & 1) as f64 * dx[2]]);
        }
        phi
    }

    #[test]
    fn horizontal_plane_halves() {
        let dx = [1.0, 2.0, 0.5];
        let phi = corners_of(|p| p[2] - 0.125, dx);
        let c = cut_cell(&Lattice::corners(&phi), dx, &linear());
        let z0 = 0.125;
        let v = dx[0] * dx[1] * (dx[2] - z0);
        assert!((c.volume() - v).abs() < 1e-14);
        assert!((c.eb_area() - 2.0).abs() < 1e-14);
        let n = c.eb_vector();
        assert!((n[2] + 2.0).abs() < 1e-14 && n[0].abs() < 1e-14 && n[1].abs() < 1e-14);
        // z mid-plane at 0.25 lies in fluid
        assert!((c.mid_area(2) - 2.0).abs() < 1e-14);
        assert!((c.mid_area(0) - dx[1] * (dx[2] - z0)).abs() < 1e-14);
    }

    #[test]
    fn oblique_plane_volume_and_area() {
        let d = 1.0;
        let phi = corners_of(|p| p[0] + p[2] - d, [d, 1.0, d]);
        let c = cut_cell(&Lattice::corners(&phi), [d, 1.0, d], &linear());
        assert!((c.volume() - 0.5).abs() < 1e-14);
        assert!((c.eb_area() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn root_crossing_lies_on_surface() {
        let sphere = |p: [f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 0.8;
        let cross = Crossing { mode: Intersection::Root, surface: &sphere, base: [0.0; 3] };
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 0.5, 0.0];
        let x = cross.point(a, sphere(a), b, sphere(b));
        assert!(sphere(x).abs() < 1e-14, "{}", sphere(x));
        let lin = Crossing { mode: Intersection::Linear, ..cross };
        assert!(sphere(lin.point(a, sphere(a), b, sphere(b))).abs() > 1e-3);
    }

    #[test]
    fn saddle_rejected() {
        let mut phi = [-1.0; 8];
        phi[0] = 1.0;
        phi[3] = 1.0;
        assert!(check_topology(&phi).is_err());
        let mut phi = [-1.0; 8];
        phi[0] = 1.0;
        phi[7] = 1.0;
        assert_eq!(check_topology(&phi), Err("disjoint fluid components"));
        let phi = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        assert!(check_topology(&phi).is_ok());
    }

    #[test]
    fn face_quadrants_of_diagonal_cut() {
        // u_b + u_c > 1 on the unit face
        let phi = [-1.0, 0.0 + 1e-300, 1e-300, 1.0];
        let f = face_quads(&phi, 1, 1.0, 1.0, &linear(), |u, v| [u, v, 0.0]);
        assert!((f.total() - 0.5).abs() < 1e-14);
        assert!((f.area[3] - 0.25).abs() < 1e-14);
        assert!(f.area[0].abs() < 1e-14);
    }
}
