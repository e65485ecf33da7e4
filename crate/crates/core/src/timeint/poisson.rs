//! Cut-cell pressure Poisson problem for the anelastic projection.
//!
//! Rows are volume-integrated: `(Lφ)_c = Σ_faces ± β A (∂φ/∂n)`, which is
//! symmetric in the plain inner product. Walls, inflow and the embedded
//! boundary are homogeneous Neumann; outflow faces hold `φ = 0`.

use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, SideBc};
use crate::geometry::EbGeometry;
use crate::grid::{Axis, Field, GridSpec, Layout, Range3, Variant};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct PoissonSystem {
    pub grid: GridSpec,
    layout: Layout,
    /// Flat cell index per unknown.
    pub cells: Vec<usize>,
    /// Fluid volume per unknown.
    pub volume: Vec<f64>,
    unknown: Vec<u32>,
    /// `(row, column, β A / Δ)` for each interior face, listed once.
    edges: Vec<(u32, u32, f64)>,
    /// Diagonal contribution of outflow faces.
    dirichlet: Vec<f64>,
    diag: Vec<f64>,
    pub singular: bool,
    bcs: BoundarySpec,
}

impl PoissonSystem {
    pub fn new(cell: &EbGeometry, bcs: &BoundarySpec) -> Self {
        let grid = cell.grid;
        let layout = cell.layout;
        let n = grid.n;
        let mut unknown = vec![NONE; layout.len()];
        let mut cells = Vec::new();
        let mut volume = Vec::new();
        Range3::interior(Variant::Cell, n).for_each(|p| {
            let l = layout.at(p);
            if cell.is_fluid(l) {
                unknown[l] = cells.len() as u32;
                cells.push(l);
                volume.push(cell.volume(l));
            }
        });
        let mut edges = Vec::new();
        let mut dirichlet = vec![0.0; cells.len()];
        for (u, &l) in cells.iter().enumerate() {
            let p = layout.unflatten(l);
            for a in Axis::ALL {
                let d = a.index();
                let nd = n[d] as isize;
                let coef = grid.face_area(a) / grid.dx[d];
                let hi_face = l + layout.stride[d] as usize;
                let beta_hi = cell.beta[d][hi_face];
                if p[d] + 1 < nd {
                    let v = unknown[hi_face];
                    if beta_hi > 0.0 && v != NONE {
                        edges.push((u as u32, v, beta_hi * coef));
                    }
                } else if bcs.is_periodic(a) {
                    let mut q = p;
                    q[d] = 0;
                    let v = unknown[layout.at(q)];
                    if beta_hi > 0.0 && v != NONE && v != u as u32 {
                        edges.push((u as u32, v, beta_hi * coef));
                    }
                } else if *bcs.side(a, true) == SideBc::Outflow {
                    dirichlet[u] += 2.0 * beta_hi * coef;
                }
                if p[d] == 0 && !bcs.is_periodic(a) && *bcs.side(a, false) == SideBc::Outflow {
                    dirichlet[u] += 2.0 * cell.beta[d][l] * coef;
                }
            }
        }
        let mut diag = dirichlet.clone();
        for &(u, v, w) in &edges {
            diag[u as usize] += w;
            diag[v as usize] += w;
        }
        let singular = dirichlet.iter().all(|&d| d == 0.0);
        PoissonSystem { grid, layout, cells, volume, unknown, edges, dirichlet, diag, singular, bcs: *bcs }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `out = Lφ` (negative semi-definite).
    pub fn apply(&self, phi: &[f64], out: &mut [f64]) {
        for (o, (&p, &d)) in out.iter_mut().zip(phi.iter().zip(&self.dirichlet)) {
            *o = -d * p;
        }
        for &(u, v, w) in &self.edges {
            let flux = w * (phi[v as usize] - phi[u as usize]);
            out[u as usize] += flux;
            out[v as usize] -= flux;
        }
    }

    /// Volume-integrated divergence `Σ ± β A m` of face momenta per unknown.
    pub fn divergence(&self, cell: &EbGeometry, mom: &[Field; 3]) -> Vec<f64> {
        self.cells
            .iter()
            .map(|&l| {
                let mut s = 0.0;
                for a in Axis::ALL {
                    let d = a.index();
                    let hi = l + self.layout.stride[d] as usize;
                    s += self.grid.face_area(a) * (cell.beta[d][hi] * mom[d][hi] - cell.beta[d][l] * mom[d][l]);
                }
                s
            })
            .collect()
    }

    /// Solve `Lφ = rhs` by Jacobi-preconditioned conjugate gradients on `−L`.
    /// Singular systems get a mean-free right-hand side and a mean-free
    /// (volume-weighted) solution.
    pub fn solve(&self, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
        let m = self.len();
        let mut b: Vec<f64> = rhs.iter().map(|v| -v).collect();
        if self.singular && m > 0 {
            let mean = b.iter().sum::<f64>() / m as f64;
            let scale = b.iter().map(|v| v.abs()).sum::<f64>();
            if mean.abs() * m as f64 > 1e-8 * scale.max(f64::MIN_POSITIVE) {
                log::debug!("removing net source {:e} from a singular Poisson problem", mean * m as f64);
            }
            b.iter_mut().for_each(|v| *v -= mean);
        }
        let bnorm = norm(&b);
        let mut x = vec![0.0; m];
        if bnorm == 0.0 {
            return Ok((x, SolveStats { iterations: 0, residual: 0.0 }));
        }
        let inv: Vec<f64> = self.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, i)| r * i).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; m];
        let mut rz = dot(&r, &z);
        let mut residual = 1.0;
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            ap.iter_mut().for_each(|v| *v = -*v);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..m {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            residual = norm(&r) / bnorm;
            if residual <= tol {
                self.remove_mean(&mut x);
                return Ok((x, SolveStats { iterations: it, residual }));
            }
            for i in 0..m {
                z[i] = r[i] * inv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::PoissonDiverged { iterations: max_iter, residual })
    }

    fn remove_mean(&self, x: &mut [f64]) {
        if !self.singular {
            return;
        }
        let vol: f64 = self.volume.iter().sum();
        let mean = x.iter().zip(&self.volume).map(|(x, v)| x * v).sum::<f64>() / vol;
        x.iter_mut().for_each(|v| *v -= mean);
    }

    /// φ as a cell field, zero outside the unknowns.
    pub fn scatter(&self, phi: &[f64]) -> Field {
        let mut f = Field::zeros(self.layout);
        for (&l, &v) in self.cells.iter().zip(phi) {
            f[l] = v;
        }
        f
    }

    /// `m ← m − dt ∂φ/∂n` on owned faces with open area.
    pub fn correct_momenta(&self, cell: &EbGeometry, phi: &[f64], mom: &mut [Field; 3], ranges: &[Range3; 3], dt: f64) {
        let n = self.grid.n;
        let value = |q: [isize; 3]| -> Option<f64> {
            let mut q = q;
            for d in 0..3 {
                if q[d] < 0 || q[d] >= n[d] as isize {
                    if !self.bcs.is_periodic(Axis::ALL[d]) {
                        return None;
                    }
                    q[d] = q[d].rem_euclid(n[d] as isize);
                }
            }
            let u = self.unknown[self.layout.at(q)];
            (u != NONE).then(|| phi[u as usize])
        };
        for a in Axis::ALL {
            let d = a.index();
            let dx = self.grid.dx[d];
            ranges[d].for_each(|p| {
                let l = self.layout.at(p);
                if cell.beta[d][l] <= 0.0 {
                    return;
                }
                let mut lo = p;
                lo[d] -= 1;
                let grad = match (value(lo), value(p)) {
                    (Some(below), Some(above)) => (above - below) / dx,
                    (None, Some(above)) if p[d] == 0 && *self.bcs.side(a, false) == SideBc::Outflow => {
                        2.0 * above / dx
                    }
                    (Some(below), None) if p[d] == n[d] as isize && *self.bcs.side(a, true) == SideBc::Outflow => {
                        -2.0 * below / dx
                    }
                    _ => return,
                };
                mom[d][l] -= dt * grad;
            });
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
