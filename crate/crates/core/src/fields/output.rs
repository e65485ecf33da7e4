//! Legacy-VTK structured-points and flat CSV field dumps.

use std::io::Write;

use crate::grid::{Field, GridSpec, Range3, Variant};

/// Values of `f` at the cell centers; face data are averaged across each cell.
pub fn to_cell_centers(f: &Field, variant: Variant, grid: &GridSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n.iter().product());
    Range3::interior(Variant::Cell, grid.n).for_each(|p| {
        let v = match variant {
            Variant::Cell => f.get(p),
            Variant::Face(a) => {
                let mut q = p;
                q[a.index()] += 1;
                0.5 * (f.get(p) + f.get(q))
            }
        };
        out.push(v);
    });
    out
}

/// Write cell-center arrays (ordered `i` fastest) as VTK structured points.
pub fn write_vtk(out: &mut dyn Write, grid: &GridSpec, title: &str, arrays: &[(&str, &[f64])]) -> std::io::Result<()> {
    let n = grid.n;
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", n[0], n[1], n[2])?;
    let o = grid.cv_center(Variant::Cell, [0, 0, 0]);
    writeln!(out, "ORIGIN {:e} {:e} {:e}", o[0], o[1], o[2])?;
    writeln!(out, "SPACING {:e} {:e} {:e}", grid.dx[0], grid.dx[1], grid.dx[2])?;
    writeln!(out, "POINT_DATA {}", n[0] * n[1] * n[2])?;
    for (name, data) in arrays {
        writeln!(out, "SCALARS {} double 1", name)?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in data.iter() {
            writeln!(out, "{:.10e}", v)?;
        }
    }
    Ok(())
}

/// Write one row per control volume of `variant`: index, position and value.
pub fn write_csv(out: &mut dyn Write, grid: &GridSpec, variant: Variant, name: &str, f: &Field) -> std::io::Result<()> {
    writeln!(out, "i,j,k,x,y,z,{name}")?;
    let mut res = Ok(());
    Range3::interior(variant, grid.n).for_each(|p| {
        if res.is_ok() {
            let x = grid.cv_center(variant, p);
            res = writeln!(out, "{},{},{},{:e},{:e},{:e},{:.12e}", p[0], p[1], p[2], x[0], x[1], x[2], f.get(p));
        }
    });
    res
}
