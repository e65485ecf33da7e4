//! Weighted state redistribution over merged small-cell neighborhoods.
//!
//! Every non-covered control volume owns a neighborhood. Volumes below the
//! target absorb neighbors toward the fluid side; the provisional solution
//! is averaged over each neighborhood, reconstructed linearly, and gathered
//! back. Only volumes touched by a nontrivial neighborhood are stored: all
//! others have `M = {self}`, `N = 1`, `κ = 0`, `ω = 1` and pass through.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, Model, State};
use crate::fluxes::{fit_gradient, FitOrder};
use crate::geometry::{EbGeometry, GeometrySet};
use crate::grid::{Axis, Field, Range3, Variant};

/// Neighborhood target volume as a fraction of a full cell.
pub const TARGET_FRACTION: f64 = 0.5;

/// Reference from one node to another. `shift` is added to the target's
/// stored position to get its unwrapped position seen from the referrer's
/// neighborhood (nonzero only across periodic seams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub node: usize,
    pub shift: [f64; 3],
}

#[derive(Debug, Clone)]
struct StencilPoint {
    lin: usize,
    node: Option<usize>,
}

#[derive(Debug, Clone)]
struct Stencil {
    points: Vec<StencilPoint>,
    weights: Vec<[f64; 3]>,
}

/// A control volume taking part in at least one nontrivial neighborhood.
#[derive(Debug, Clone)]
pub struct Node {
    pub lin: usize,
    pub pos: [isize; 3],
    pub volume: f64,
    pub centroid: [f64; 3],
    pub kappa: f64,
    pub omega: f64,
    /// Number of neighborhoods containing this volume, its own included.
    pub count: usize,
    pub vhat: f64,
    pub xhat: [f64; 3],
    /// Merge set without self.
    pub members: Vec<Link>,
    /// Neighborhoods other than its own that contain this volume; the shift
    /// maps this volume into the owner's frame.
    pub within: Vec<Link>,
    stencil: Option<Stencil>,
}

#[derive(Debug, Clone)]
pub struct NeighborhoodMap {
    pub variant: Variant,
    pub v_target: f64,
    pub range: Range3,
    pub nodes: Vec<Node>,
    /// Small volumes that found no fluid neighbor.
    pub isolated: Vec<usize>,
    index: HashMap<usize, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WsrdOptions {
    pub limiter: bool,
    /// Redistribute ρ and ρθ as deviations from the hydrostatic background.
    pub about_background: bool,
}

impl Default for WsrdOptions {
    fn default() -> Self {
        WsrdOptions { limiter: true, about_background: true }
    }
}

struct Frame<'a> {
    geom: &'a EbGeometry,
    range: Range3,
}

impl Frame<'_> {
    /// Owned, non-covered image of `q` and the physical shift from it to `q`.
    fn canonical(&self, q: [isize; 3]) -> Option<([isize; 3], [f64; 3])> {
        let grid = &self.geom.grid;
        let mut c = q;
        let mut shift = [0.0; 3];
        for d in 0..3 {
            if grid.periodic[d] {
                let n = grid.n[d] as isize;
                c[d] = q[d].rem_euclid(n);
                shift[d] = (q[d] - c[d]) as f64 * grid.dx[d];
            }
        }
        if !self.range.contains(c) || !self.geom.is_fluid(self.geom.layout.at(c)) {
            return None;
        }
        Some((c, shift))
    }
}

fn add(a: [isize; 3], b: [isize; 3]) -> [isize; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn offset_by(x: [f64; 3], s: [f64; 3]) -> [f64; 3] {
    [x[0] + s[0], x[1] + s[1], x[2] + s[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Direction toward the solid for a cut volume.
fn solid_normal(geom: &EbGeometry, lin: usize) -> [f64; 3] {
    match geom.facet(lin) {
        Some(f) if f.area > 0.0 => f.normal,
        _ => {
            let c = geom.vol_centroid[lin];
            [-c[0], -c[1], -c[2]]
        }
    }
}

/// Merge offsets for a small volume at `p`, largest normal component first.
fn merge_set(frame: &Frame, p: [isize; 3], volume: f64, target: f64, normal: [f64; 3]) -> Vec<([isize; 3], [f64; 3])> {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| normal[b].abs().total_cmp(&normal[a].abs()));
    let mut set: Vec<([isize; 3], [f64; 3])> = Vec::new();
    let mut combos: Vec<[isize; 3]> = vec![[0; 3]];
    let mut total = volume;
    for d in order {
        if total >= target {
            break;
        }
        let mut e = [0isize; 3];
        e[d] = if normal[d] > 0.0 { -1 } else { 1 };
        match frame.canonical(add(p, e)) {
            Some((c, _)) if c != p => {}
            _ => continue,
        }
        let layer: Vec<[isize; 3]> = combos.iter().map(|&o| add(o, e)).collect();
        for &o in &layer {
            if let Some((c, shift)) = frame.canonical(add(p, o)) {
                if c != p && set.iter().all(|(s, _)| *s != c) {
                    total += frame.geom.volume(frame.geom.layout.at(c));
                    set.push((c, shift));
                }
            }
        }
        combos.extend(layer);
    }
    set
}

/// Build the neighborhoods of every non-covered control volume of `geom`
/// within `range` (the owned control volumes of its variant).
pub fn build_neighborhoods(geom: &EbGeometry, range: Range3) -> NeighborhoodMap {
    let grid = &geom.grid;
    let layout = &geom.layout;
    let v_target = TARGET_FRACTION * grid.cell_volume();
    let frame = Frame { geom, range };

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut isolated = Vec::new();
    let mut node_of = |lin: usize, nodes: &mut Vec<Node>| -> usize {
        *index.entry(lin).or_insert_with(|| {
            let pos = layout.unflatten(lin);
            nodes.push(Node {
                lin,
                pos,
                volume: geom.volume(lin),
                centroid: geom.centroid(pos),
                kappa: 0.0,
                omega: 1.0,
                count: 1,
                vhat: 0.0,
                xhat: [0.0; 3],
                members: Vec::new(),
                within: Vec::new(),
                stencil: None,
            });
            nodes.len() - 1
        })
    };

    for &lin in &geom.cut {
        let p = layout.unflatten(lin);
        if !range.contains(p) || !geom.is_fluid(lin) {
            continue;
        }
        let volume = geom.volume(lin);
        if volume >= v_target {
            continue;
        }
        let set = merge_set(&frame, p, volume, v_target, solid_normal(geom, lin));
        if set.is_empty() {
            isolated.push(lin);
            continue;
        }
        let owner = node_of(lin, &mut nodes);
        let mut merged = 0.0;
        for (c, shift) in set {
            let m = node_of(layout.at(c), &mut nodes);
            merged += nodes[m].volume;
            nodes[owner].members.push(Link { node: m, shift });
            nodes[m].within.push(Link { node: owner, shift });
        }
        nodes[owner].kappa = ((v_target - volume) / merged).min(1.0);
    }
    if !isolated.is_empty() {
        log::warn!("{}: {} small volumes without a fluid neighbor left unmerged", geom.variant.name(), isolated.len());
    }

    for i in 0..nodes.len() {
        let n = nodes[i].within.len() + 1;
        let foreign: f64 = nodes[i].within.iter().map(|w| nodes[w.node].kappa).sum();
        nodes[i].count = n;
        nodes[i].omega = 1.0 - foreign / n as f64;
    }
    for i in 0..nodes.len() {
        let node = &nodes[i];
        let mut vhat = node.omega * node.volume;
        let mut moment = node.centroid.map(|x| x * vhat);
        for m in &node.members {
            let mem = &nodes[m.node];
            let share = node.kappa * mem.volume / mem.count as f64;
            vhat += share;
            let x = offset_by(mem.centroid, m.shift);
            for d in 0..3 {
                moment[d] += share * x[d];
            }
        }
        let xhat = if vhat > 0.0 { moment.map(|m| m / vhat) } else { node.centroid };
        nodes[i].vhat = vhat;
        nodes[i].xhat = xhat;
    }

    let mut map = NeighborhoodMap { variant: geom.variant, v_target, range, nodes, isolated, index: HashMap::new() };
    map.index = map.nodes.iter().enumerate().map(|(i, n)| (n.lin, i)).collect();
    let stencils: Vec<Option<Stencil>> = (0..map.nodes.len())
        .map(|i| if map.nodes[i].members.is_empty() { None } else { gradient_stencil(&map, &frame, i) })
        .collect();
    for (node, s) in map.nodes.iter_mut().zip(stencils) {
        node.stencil = s;
    }
    map
}

/// Least-squares gradient stencil of neighborhood `i` over the neighborhood
/// centroids of the surrounding volumes, widened to 5 along directions whose
/// centroids are too clustered.
fn gradient_stencil(map: &NeighborhoodMap, frame: &Frame, i: usize) -> Option<Stencil> {
    let dx = frame.geom.grid.dx;
    let center = &map.nodes[i];
    let gather = |half: [isize; 3]| {
        let mut points = Vec::new();
        let mut offsets = Vec::new();
        for k in -half[2]..=half[2] {
            for j in -half[1]..=half[1] {
                for ii in -half[0]..=half[0] {
                    if ii == 0 && j == 0 && k == 0 {
                        continue;
                    }
                    let Some((c, shift)) = frame.canonical(add(center.pos, [ii, j, k])) else { continue };
                    let lin = frame.geom.layout.at(c);
                    let node = map.index.get(&lin).copied();
                    let xhat = match node {
                        Some(n) => map.nodes[n].xhat,
                        None => frame.geom.centroid(c),
                    };
                    points.push(StencilPoint { lin, node });
                    offsets.push(sub(offset_by(xhat, shift), center.xhat));
                }
            }
        }
        (points, offsets)
    };
    let spread = |offsets: &[[f64; 3]]| [0, 1, 2].map(|d| offsets.iter().map(|o| o[d].abs()).fold(0.0, f64::max));
    let mut half = [1isize; 3];
    let (mut points, mut offsets) = gather(half);
    let s = spread(&offsets);
    let narrow: Vec<usize> = (0..3).filter(|&d| s[d] < 0.5 * dx[d]).collect();
    if !narrow.is_empty() {
        for &d in &narrow {
            half[d] = 2;
        }
        (points, offsets) = gather(half);
        let s = spread(&offsets);
        if (0..3).any(|d| s[d] < 0.5 * dx[d]) {
            return None;
        }
    }
    let weights = fit_gradient(&offsets, dx, true, FitOrder::Linear, false)?;
    Some(Stencil { points, weights })
}

impl NeighborhoodMap {
    pub fn node(&self, lin: usize) -> Option<&Node> {
        self.index.get(&lin).map(|&i| &self.nodes[i])
    }

    /// `(κ, ω, N)` of the volume at `lin`.
    pub fn weights(&self, lin: usize) -> (f64, f64, usize) {
        self.node(lin).map_or((0.0, 1.0, 1), |n| (n.kappa, n.omega, n.count))
    }

    pub fn is_trivial(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights_in_bounds(&self) -> bool {
        self.nodes.iter().all(|n| (0.0..=1.0).contains(&n.kappa) && (0.0..=1.0).contains(&n.omega))
    }

    /// Per node, the neighborhood average `Q̂` and its (limited) gradient.
    fn reconstruction(&self, u: &Field, opts: WsrdOptions) -> (Vec<f64>, Vec<[f64; 3]>) {
        let qhat: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| {
                if n.members.is_empty() || n.vhat <= 0.0 {
                    return u[n.lin];
                }
                let mut q = n.omega * n.volume * u[n.lin];
                for m in &n.members {
                    let mem = &self.nodes[m.node];
                    q += n.kappa * mem.volume / mem.count as f64 * u[mem.lin];
                }
                q / n.vhat
            })
            .collect();
        let value = |p: &StencilPoint| p.node.map_or(u[p.lin], |n| qhat[n]);

        let slopes: Vec<[f64; 3]> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let Some(st) = &n.stencil else { return [0.0; 3] };
                let mut g = [0.0; 3];
                for (p, w) in st.points.iter().zip(&st.weights) {
                    let dq = value(p) - qhat[i];
                    for d in 0..3 {
                        g[d] += w[d] * dq;
                    }
                }
                if opts.limiter {
                    let (mut lo, mut hi) = (qhat[i], qhat[i]);
                    for p in &st.points {
                        let v = value(p);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                    let mut phi: f64 = 1.0;
                    let eval = std::iter::once(n.centroid)
                        .chain(n.members.iter().map(|m| offset_by(self.nodes[m.node].centroid, m.shift)));
                    for x in eval {
                        let delta = dot(g, sub(x, n.xhat));
                        if delta > 0.0 {
                            phi = phi.min((hi - qhat[i]) / delta);
                        } else if delta < 0.0 {
                            phi = phi.min((lo - qhat[i]) / delta);
                        }
                    }
                    let phi = phi.clamp(0.0, 1.0);
                    g = g.map(|v| v * phi);
                }
                g
            })
            .collect();
        (qhat, slopes)
    }

    /// Redistribute the provisional field `u` in place over the owned range.
    pub fn redistribute(&self, u: &mut Field, opts: WsrdOptions) {
        if self.nodes.is_empty() {
            return;
        }
        let (qhat, slopes) = self.reconstruction(u, opts);
        let recon = |j: usize, x: [f64; 3]| qhat[j] + dot(slopes[j], sub(x, self.nodes[j].xhat));
        let out: Vec<f64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let mut v = n.omega * recon(i, n.centroid);
                for w in &n.within {
                    v += self.nodes[w.node].kappa * recon(w.node, offset_by(n.centroid, w.shift)) / n.count as f64;
                }
                v
            })
            .collect();
        for (n, v) in self.nodes.iter().zip(out) {
            u[n.lin] = v;
        }
    }

    /// Text dump of the nontrivial part of the map.
    pub fn write(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# {} v_target={:e} nodes={} isolated={}", self.variant.name(), self.v_target, self.nodes.len(), self.isolated.len())?;
        writeln!(out, "i,j,k,volume,kappa,omega,count,vhat,members")?;
        for n in &self.nodes {
            let members: Vec<String> = n
                .members
                .iter()
                .map(|m| {
                    let p = self.nodes[m.node].pos;
                    format!("{}:{}:{}", p[0], p[1], p[2])
                })
                .collect();
            writeln!(
                out,
                "{},{},{},{:e},{:.6},{:.6},{},{:e},{}",
                n.pos[0],
                n.pos[1],
                n.pos[2],
                n.volume,
                n.kappa,
                n.omega,
                n.count,
                n.vhat,
                members.join(" ")
            )?;
        }
        Ok(())
    }
}

/// One map per grid variant.
pub fn build_all(geom: &GeometrySet, bcs: &BoundarySpec) -> Vec<NeighborhoodMap> {
    let n = geom.grid().n;
    Variant::ALL
        .iter()
        .map(|&v| build_neighborhoods(geom.get(v), crate::fields::owned_range(v, bcs, n)))
        .collect()
}

/// Apply the redistribution operator to every prognostic variable: ρ and ρθ
/// with the cell map, each momentum with its face map. Anelastic density is
/// diagnostic and left alone.
pub fn redistribute_state(state: &mut State, maps: &[NeighborhoodMap], opts: WsrdOptions) -> Result<()> {
    let find = |v: Variant| {
        maps.iter()
            .find(|m| m.variant == v)
            .ok_or_else(|| Error::InvalidInput(format!("no neighborhood map for the {} grid", v.name())))
    };
    let cell = find(Variant::Cell)?;
    let faces = [find(Variant::Face(Axis::X))?, find(Variant::Face(Axis::Y))?, find(Variant::Face(Axis::Z))?];
    let bg = state.background.clone();
    let layout = state.layout();
    let scalar = |f: &mut Field, level: &dyn Fn(isize) -> f64| {
        if !opts.about_background {
            cell.redistribute(f, opts);
            return;
        }
        cell.range.for_each(|p| f[layout.at(p)] -= level(p[2]));
        cell.redistribute(f, opts);
        cell.range.for_each(|p| f[layout.at(p)] += level(p[2]));
    };
    if state.model == Model::Compressible {
        scalar(&mut state.rho, &|k| bg.rho(k));
    }
    scalar(&mut state.rho_theta, &|k| bg.rho_theta(k));
    for (a, map) in faces.iter().enumerate() {
        map.redistribute(&mut state.mom[a], opts);
    }
    Ok(())
}
