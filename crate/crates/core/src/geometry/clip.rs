//! Convex clipping of tetrahedra and planar polygons against affine functions.

pub type P3 = [f64; 3];

#[inline]
pub fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: P3, s: f64) -> P3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

/// `value(x) = grad · x + offset`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub grad: P3,
    pub offset: f64,
}

impl Affine {
    #[inline]
    pub fn eval(&self, p: P3) -> f64 {
        dot(self.grad, p) + self.offset
    }

    pub fn negated(&self) -> Affine {
        Affine { grad: scale(self.grad, -1.0), offset: -self.offset }
    }

    /// `x_axis - at`
    pub fn axis(axis: usize, at: f64) -> Affine {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Affine { grad, offset: -at }
    }
}

pub type Tet = [P3; 4];

#[inline]
pub fn tet_volume(t: &Tet) -> f64 {
    let a = sub(t[1], t[0]);
    let b = sub(t[2], t[0]);
    let c = sub(t[3], t[0]);
    dot(a, cross(b, c)).abs() / 6.0
}

#[inline]
pub fn tet_centroid(t: &Tet) -> P3 {
    scale(add(add(t[0], t[1]), add(t[2], t[3])), 0.25)
}

#[inline]
pub fn crossing(a: P3, va: f64, b: P3, vb: f64) -> P3 {
    let s = va / (va - vb);
    add(a, scale(sub(b, a), s))
}

fn push_prism(p: [P3; 3], q: [P3; 3], out: &mut Vec<Tet>) {
    out.push([p[0], p[1], p[2], q[0]]);
    out.push([p[1], p[2], q[0], q[1]]);
    out.push([p[2], q[0], q[1], q[2]]);
}

/// Orient `tri` so that its right-hand normal points toward `outside`.
fn oriented(tri: [P3; 3], outside: P3) -> [P3; 3] {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    if dot(n, sub(outside, tri[0])) >= 0.0 {
        tri
    } else {
        [tri[0], tri[2], tri[1]]
    }
}

/// Clip `t` to the part where its vertex values `v` are positive. Edge
/// crossings come from `cross(inside, v_inside, outside, v_outside)`. The
/// clipped region is appended to `out` as tetrahedra; when `surface` is given
/// the cut surface is appended as triangles oriented away from the kept part.
pub fn clip_tet_with(
    t: &Tet,
    v: [f64; 4],
    cross: &mut dyn FnMut(P3, f64, P3, f64) -> P3,
    out: &mut Vec<Tet>,
    surface: Option<&mut Vec<[P3; 3]>>,
) {
    let mut pos = [0usize; 4];
    let mut neg = [0usize; 4];
    let (mut np, mut nn) = (0, 0);
    for i in 0..4 {
        if v[i] > 0.0 {
            pos[np] = i;
            np += 1;
        } else {
            neg[nn] = i;
            nn += 1;
        }
    }
    let mut x = |a: usize, b: usize| cross(t[a], v[a], t[b], v[b]);
    match np {
        0 => {}
        4 => out.push(*t),
        1 => {
            let a = pos[0];
            let tri = [x(a, neg[0]), x(a, neg[1]), x(a, neg[2])];
            out.push([t[a], tri[0], tri[1], tri[2]]);
            if let Some(s) = surface {
                s.push(oriented(tri, t[neg[0]]));
            }
        }
        2 => {
            let (a, b) = (pos[0], pos[1]);
            let (c, d) = (neg[0], neg[1]);
            let (ac, ad, bc, bd) = (x(a, c), x(a, d), x(b, c), x(b, d));
            push_prism([t[a], ac, ad], [t[b], bc, bd], out);
            if let Some(s) = surface {
                let solid = scale(add(t[c], t[d]), 0.5);
                s.push(oriented([ac, ad, bc], solid));
                s.push(oriented([ad, bc, bd], solid));
            }
        }
        3 => {
            let d = neg[0];
            let (a, b, c) = (pos[0], pos[1], pos[2]);
            let tri = [x(a, d), x(b, d), x(c, d)];
            push_prism([t[a], t[b], t[c]], tri, out);
            if let Some(s) = surface {
                s.push(oriented(tri, t[d]));
            }
        }
        _ => unreachable!(),
    }
}

/// Append to `out` a tetrahedralization of `{x in t : f(x) > 0}`.
pub fn clip_tet(t: &Tet, f: &Affine, out: &mut Vec<Tet>) {
    let v = [f.eval(t[0]), f.eval(t[1]), f.eval(t[2]), f.eval(t[3])];
    clip_tet_with(t, v, &mut |a, va, b, vb| crossing(a, va, b, vb), out, None);
}

/// Split `t` into the parts where `f > 0` and `f < 0`.
pub fn split_tet(t: &Tet, f: &Affine, pos: &mut Vec<Tet>, neg: &mut Vec<Tet>) {
    clip_tet(t, f, pos);
    clip_tet(t, &f.negated(), neg);
}

/// Zero set of `f` inside `t` as a convex polygon.
pub fn tet_section(t: &Tet, f: &Affine) -> Vec<P3> {
    let v = [f.eval(t[0]), f.eval(t[1]), f.eval(t[2]), f.eval(t[3])];
    let mut pos = Vec::with_capacity(4);
    let mut neg = Vec::with_capacity(4);
    for i in 0..4 {
        if v[i] > 0.0 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    let x = |a: usize, b: usize| crossing(t[a], v[a], t[b], v[b]);
    match pos.len() {
        1 => vec![x(pos[0], neg[0]), x(pos[0], neg[1]), x(pos[0], neg[2])],
        3 => vec![x(pos[0], neg[0]), x(pos[1], neg[0]), x(pos[2], neg[0])],
        2 => vec![
            x(pos[0], neg[0]),
            x(pos[0], neg[1]),
            x(pos[1], neg[1]),
            x(pos[1], neg[0]),
        ],
        _ => Vec::new(),
    }
}

/// Part of a convex polygon where `f > 0` (Sutherland-Hodgman).
pub fn clip_polygon(poly: &[P3], f: &Affine) -> Vec<P3> {
    let v: Vec<f64> = poly.iter().map(|p| f.eval(*p)).collect();
    clip_polygon_with(poly, &v, &mut |a, va, b, vb| crossing(a, va, b, vb))
}

/// Sutherland-Hodgman against vertex values `v`, with edge crossings from `cross`.
pub fn clip_polygon_with(poly: &[P3], v: &[f64], cross: &mut dyn FnMut(P3, f64, P3, f64) -> P3) -> Vec<P3> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    if n == 0 {
        return out;
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let va = v[i];
        let vb = v[(i + 1) % n];
        let a_in = va > 0.0;
        let b_in = vb > 0.0;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            if a_in {
                out.push(cross(a, va, b, vb));
            } else {
                out.push(cross(b, vb, a, va));
            }
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

/// Area vector (right-hand rule over vertex order), scalar area and centroid.
pub fn polygon_moments(poly: &[P3]) -> (P3, f64, P3) {
    if poly.len() < 3 {
        return ([0.0; 3], 0.0, [0.0; 3]);
    }
    let o = poly[0];
    let mut vec = [0.0; 3];
    let mut area = 0.0;
    let mut moment = [0.0; 3];
    for i in 1..poly.len() - 1 {
        let c = cross(sub(poly[i], o), sub(poly[i + 1], o));
        let a = 0.5 * norm(c);
        vec = add(vec, scale(c, 0.5));
        area += a;
        let tc = scale(add(add(o, poly[i]), poly[i + 1]), 1.0 / 3.0);
        moment = add(moment, scale(tc, a));
    }
    let centroid = if area > 0.0 { scale(moment, 1.0 / area) } else { o };
    (vec, area, centroid)
}
