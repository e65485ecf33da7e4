//! Uniform Cartesian grid, staggering variants and ghosted array storage.
//!
//! Every field and geometry array in the crate shares one [`Layout`]: the
//! index range `[-G, n + 1 + G)` along each axis, where `G` is
//! [`N_GHOST`]. Cell-centered data use `[0, n)` as interior, face-staggered
//! data along an axis use `[0, n]`. Because all arrays share strides, a
//! face index and the control volume on its high side have the same flat
//! index, and an offset of one along an axis is the same for every array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ghost layers on every side of every array.
pub const N_GHOST: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Axis> {
        match i {
            0 => Ok(Axis::X),
            1 => Ok(Axis::Y),
            2 => Ok(Axis::Z),
            _ => Err(Error::InvalidInput(format!("axis index {i} outside {{x,y,z}}"))),
        }
    }

    /// The two other axes in increasing order.
    #[inline]
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Where a family of control volumes lives on the C-grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Cell,
    Face(Axis),
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Cell,
        Variant::Face(Axis::X),
        Variant::Face(Axis::Y),
        Variant::Face(Axis::Z),
    ];

    #[inline]
    pub fn stagger(self) -> Option<Axis> {
        match self {
            Variant::Cell => None,
            Variant::Face(a) => Some(a),
        }
    }

    #[inline]
    pub fn is_staggered_along(self, axis: Axis) -> bool {
        self.stagger() == Some(axis)
    }

    /// Interior control-volume counts for this variant.
    pub fn dims(self, n: [usize; 3]) -> [usize; 3] {
        let mut d = n;
        if let Variant::Face(a) = self {
            d[a.index()] += 1;
        }
        d
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Cell => "cell",
            Variant::Face(Axis::X) => "xface",
            Variant::Face(Axis::Y) => "yface",
            Variant::Face(Axis::Z) => "zface",
        }
    }

    pub fn slot(self) -> usize {
        match self {
            Variant::Cell => 0,
            Variant::Face(a) => 1 + a.index(),
        }
    }
}

/// Uniform grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub dx: [f64; 3],
    pub origin: [f64; 3],
    pub periodic: [bool; 3],
}

impl GridSpec {
    pub fn new(n: [usize; 3], dx: [f64; 3], origin: [f64; 3], periodic: [bool; 3]) -> Result<Self> {
        let g = GridSpec { n, dx, origin, periodic };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering the box `[lo, hi]` with `n` cells per axis.
    pub fn from_box(n: [usize; 3], lo: [f64; 3], hi: [f64; 3], periodic: [bool; 3]) -> Result<Self> {
        let mut dx = [0.0; 3];
        for a in 0..3 {
            if n[a] == 0 {
                return Err(Error::InvalidInput(format!("grid has zero cells along axis {a}")));
            }
            dx[a] = (hi[a] - lo[a]) / n[a] as f64;
        }
        GridSpec::new(n, dx, lo, periodic)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.n[a] == 0 {
                return Err(Error::InvalidInput(format!("grid has zero cells along axis {a}")));
            }
            if !(self.dx[a] > 0.0 && self.dx[a].is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "grid spacing along axis {a} must be positive, got {}",
                    self.dx[a]
                )));
            }
            if !self.origin[a].is_finite() {
                return Err(Error::InvalidInput("grid origin must be finite".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx[0] * self.dx[1] * self.dx[2]
    }

    /// Area of a full face normal to `axis`.
    #[inline]
    pub fn face_area(&self, axis: Axis) -> f64 {
        let [b, c] = axis.others();
        self.dx[b.index()] * self.dx[c.index()]
    }

    pub fn hi(&self) -> [f64; 3] {
        [
            self.origin[0] + self.n[0] as f64 * self.dx[0],
            self.origin[1] + self.n[1] as f64 * self.dx[1],
            self.origin[2] + self.n[2] as f64 * self.dx[2],
        ]
    }

    pub fn extent(&self, axis: Axis) -> f64 {
        self.n[axis.index()] as f64 * self.dx[axis.index()]
    }

    /// Physical center of control volume `idx` of `variant`.
    #[inline]
    pub fn cv_center(&self, variant: Variant, idx: [isize; 3]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for a in 0..3 {
            let shift = if variant.stagger().map(Axis::index) == Some(a) { 0.0 } else { 0.5 };
            p[a] = self.origin[a] + (idx[a] as f64 + shift) * self.dx[a];
        }
        p
    }

    /// Physical position of node `idx`.
    #[inline]
    pub fn node(&self, idx: [isize; 3]) -> [f64; 3] {
        [
            self.origin[0] + idx[0] as f64 * self.dx[0],
            self.origin[1] + idx[1] as f64 * self.dx[1],
            self.origin[2] + idx[2] as f64 * self.dx[2],
        ]
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.n)
    }
}

/// Index map shared by all arrays on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: [usize; 3],
    pub ghost: usize,
    pub ext: [usize; 3],
    pub stride: [isize; 3],
}

impl Layout {
    pub fn new(n: [usize; 3]) -> Self {
        let g = N_GHOST;
        let ext = [n[0] + 1 + 2 * g, n[1] + 1 + 2 * g, n[2] + 1 + 2 * g];
        let stride = [1, ext[0] as isize, (ext[0] * ext[1]) as isize];
        Layout { n, ghost: g, ext, stride }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ext[0] * self.ext[1] * self.ext[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lowest stored index along any axis.
    #[inline]
    pub fn lo(&self) -> isize {
        -(self.ghost as isize)
    }

    /// One past the highest stored index along `axis`.
    #[inline]
    pub fn hi(&self, axis: usize) -> isize {
        (self.n[axis] + 1 + self.ghost) as isize
    }

    #[inline]
    pub fn contains(&self, idx: [isize; 3]) -> bool {
        (0..3).all(|a| idx[a] >= self.lo() && idx[a] < self.hi(a))
    }

    #[inline]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let g = self.ghost as isize;
        debug_assert!(self.contains([i, j, k]), "index ({i},{j},{k}) outside layout");
        ((i + g) + (j + g) * self.stride[1] + (k + g) * self.stride[2]) as usize
    }

    #[inline]
    pub fn at(&self, p: [isize; 3]) -> usize {
        self.idx(p[0], p[1], p[2])
    }

    /// Inverse of [`Layout::idx`].
    #[inline]
    pub fn unflatten(&self, lin: usize) -> [isize; 3] {
        let g = self.ghost as isize;
        let e0 = self.ext[0];
        let e1 = self.ext[1];
        let i = (lin % e0) as isize - g;
        let j = ((lin / e0) % e1) as isize - g;
        let k = (lin / (e0 * e1)) as isize - g;
        [i, j, k]
    }

    /// Flat offset of a unit step along `axis`.
    #[inline]
    pub fn step(&self, axis: Axis) -> isize {
        self.stride[axis.index()]
    }

    /// Full stored range.
    pub fn full_range(&self) -> Range3 {
        Range3 {
            lo: [self.lo(); 3],
            hi: [self.hi(0), self.hi(1), self.hi(2)],
        }
    }
}

/// Half-open box of indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range3 {
    pub lo: [isize; 3],
    pub hi: [isize; 3],
}

impl Range3 {
    pub fn new(lo: [isize; 3], hi: [isize; 3]) -> Self {
        Range3 { lo, hi }
    }

    /// Interior control volumes of `variant` on a grid with `n` cells.
    pub fn interior(variant: Variant, n: [usize; 3]) -> Self {
        let d = variant.dims(n);
        Range3 { lo: [0; 3], hi: [d[0] as isize, d[1] as isize, d[2] as isize] }
    }

    pub fn grow(mut self, by: isize) -> Self {
        for a in 0..3 {
            self.lo[a] -= by;
            self.hi[a] += by;
        }
        self
    }

    pub fn contains(&self, p: [isize; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] < self.hi[a])
    }

    pub fn count(&self) -> usize {
        (0..3).map(|a| (self.hi[a] - self.lo[a]).max(0) as usize).product()
    }

    /// Visit every index, `i` fastest.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut([isize; 3])) {
        for k in self.lo[2]..self.hi[2] {
            for j in self.lo[1]..self.hi[1] {
                for i in self.lo[0]..self.hi[0] {
                    f([i, j, k]);
                }
            }
        }
    }
}

/// Scalar array on a [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl Field {
    pub fn new(layout: Layout, value: f64) -> Self {
        Field { layout, data: vec![value; layout.len()] }
    }

    pub fn zeros(layout: Layout) -> Self {
        Field::new(layout, 0.0)
    }

    #[inline]
    pub fn get(&self, p: [isize; 3]) -> f64 {
        self.data[self.layout.at(p)]
    }

    #[inline]
    pub fn set(&mut self, p: [isize; 3], v: f64) {
        let l = self.layout.at(p);
        self.data[l] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn max_abs_in(&self, range: Range3) -> f64 {
        let mut m = 0.0_f64;
        range.for_each(|p| m = m.max(self.get(p).abs()));
        m
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

#[inline]
pub fn offset(p: [isize; 3], axis: Axis, by: isize) -> [isize; 3] {
    let mut q = p;
    q[axis.index()] += by;
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_round_trips() {
        let l = Layout::new([4, 3, 2]);
        l.full_range().for_each(|p| assert_eq!(l.unflatten(l.at(p)), p));
        assert_eq!(l.at([1, 0, 0]) - l.at([0, 0, 0]), 1);
        assert_eq!(l.at([0, 0, 1]) as isize - l.at([0, 0, 0]) as isize, l.step(Axis::Z));
    }

    #[test]
    fn variant_dims_and_centers() {
        let g = GridSpec::new([4, 2, 3], [1.0, 2.0, 0.5], [0.0; 3], [false; 3]).unwrap();
        assert_eq!(Variant::Face(Axis::X).dims(g.n), [5, 2, 3]);
        assert_eq!(g.cv_center(Variant::Cell, [0, 0, 0]), [0.5, 1.0, 0.25]);
        assert_eq!(g.cv_center(Variant::Face(Axis::Y), [0, 1, 0]), [0.5, 2.0, 0.25]);
    }

    #[test]
    fn grid_rejects_bad_spacing() {
        assert!(GridSpec::new([1, 1, 1], [1.0, 0.0, 1.0], [0.0; 3], [false; 3]).is_err());
        assert!(GridSpec::new([0, 1, 1], [1.0; 3], [0.0; 3], [false; 3]).is_err());
        assert!(Axis::from_index(3).is_err());
    }
}
