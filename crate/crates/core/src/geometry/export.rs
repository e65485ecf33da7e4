//! Columnar text dump of a geometry dataset.

use std::io::Write;

use super::{CellClass, EbGeometry};
use crate::grid::{Range3, Variant};

pub const COLUMNS: &[&str] = &[
    "i", "j", "k", "class", "alpha", "beta_xlo", "beta_xhi", "beta_ylo", "beta_yhi", "beta_zlo", "beta_zhi", "cx",
    "cy", "cz", "eb_area", "eb_nx", "eb_ny", "eb_nz", "eb_cx", "eb_cy", "eb_cz",
];

/// Write every control volume of the interior range of `g`, one per line.
pub fn write_geometry(g: &EbGeometry, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "# variant={} n={}x{}x{}", g.variant.name(), g.grid.n[0], g.grid.n[1], g.grid.n[2])?;
    writeln!(out, "{}", COLUMNS.join(" "))?;
    let range = Range3::interior(g.variant, g.grid.n);
    let mut res = Ok(());
    range.for_each(|p| {
        if res.is_err() {
            return;
        }
        res = write_row(g, p, out);
    });
    res
}

fn write_row(g: &EbGeometry, p: [isize; 3], out: &mut dyn Write) -> std::io::Result<()> {
    let lin = g.layout.at(p);
    let mut beta = [0.0; 6];
    for d in 0..3 {
        let mut q = p;
        q[d] += 1;
        beta[2 * d] = g.beta[d][lin];
        beta[2 * d + 1] = g.beta[d][g.layout.at(q)];
    }
    let c = g.vol_centroid[lin];
    let (area, n, ec) = match g.eb.get(&lin) {
        Some(f) => (f.area, f.normal, f.centroid),
        None => (0.0, [0.0; 3], [0.0; 3]),
    };
    write!(out, "{} {} {} {} {:.17e}", p[0], p[1], p[2], g.class[lin] as u8, g.alpha[lin])?;
    for b in beta {
        write!(out, " {:.17e}", b)?;
    }
    for v in c.iter().chain([area].iter()).chain(n.iter()).chain(ec.iter()) {
        write!(out, " {:.17e}", v)?;
    }
    writeln!(out)
}

pub fn class_from_code(code: u8) -> Option<CellClass> {
    match code {
        0 => Some(CellClass::Covered),
        1 => Some(CellClass::Regular),
        2 => Some(CellClass::Cut),
        _ => None,
    }
}

pub fn variant_from_name(name: &str) -> Option<Variant> {
    Variant::ALL.into_iter().find(|v| v.name() == name)
}
