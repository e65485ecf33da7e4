use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{error_norms, exact_hemisphere_cartesian, spherical_frame, ErrorReport, ProbeSeries};
use crate::error::{Error, Result};
use crate::fields::output::{to_cell_centers, write_vtk};
use crate::fields::{fill_ghost, owned_range, State};
use crate::fluxes::FluxOperator;
use crate::geometry::export::write_geometry;
use crate::geometry::{build_geometry_set, GeometrySet, Surface};
use crate::grid::{Axis, Field, GridSpec, Range3, Variant};
use crate::physics::{hydrostatic_background, primitives, Primitives};
use crate::timeint::Integrator;
use crate::wsrd::build_all;

use super::{ExactComparison, ProbeSpec, ProbeVariable, SolverConfig};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest `|ΔM + Δt·F| / M` over all steps, `F` the outward boundary
    /// mass flux. Zero for the anelastic model.
    pub max_mass_residual: f64,
    pub poisson_iterations: usize,
    pub max_speed: f64,
    pub line_error: Option<ErrorReport>,
    /// Largest `|u_r|` in the first fluid cells above the hemisphere crest.
    pub crest_radial_speed: Option<f64>,
}

impl RunSummary {
    pub fn write(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "steps={}", self.steps)?;
        writeln!(out, "time={:.10e}", self.time)?;
        writeln!(out, "mass_initial={:.15e}", self.mass_initial)?;
        writeln!(out, "mass_final={:.15e}", self.mass_final)?;
        writeln!(out, "max_mass_residual={:.6e}", self.max_mass_residual)?;
        writeln!(out, "poisson_iterations={}", self.poisson_iterations)?;
        writeln!(out, "max_speed={:.6e}", self.max_speed)?;
        if let Some(r) = &self.line_error {
            r.write(out, "line_u_")?;
        }
        if let Some(c) = self.crest_radial_speed {
            writeln!(out, "crest_radial_speed={c:.6e}")?;
        }
        Ok(())
    }
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub state: State,
    pub geom: GeometrySet,
    pub probes: Vec<ProbeSeries>,
    pub files: Vec<PathBuf>,
}

struct Outputs<'a> {
    dir: Option<&'a Path>,
    name: String,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn create(&mut self, file: &str) -> Result<Option<BufWriter<File>>> {
        let Some(dir) = self.dir else { return Ok(None) };
        let path = dir.join(file);
        let f = File::create(&path)?;
        self.files.push(path);
        Ok(Some(BufWriter::new(f)))
    }

    fn fields(&mut self, tag: &str, state: &State, prim: &Primitives, geom: &GeometrySet) -> Result<()> {
        let name = format!("{}_{tag}.vtk", self.name);
        if let Some(mut w) = self.create(&name)? {
            write_fields(&mut w, state, prim, geom, &format!("{} {tag}", self.name))?;
            w.flush()?;
        }
        Ok(())
    }
}

fn write_fields(out: &mut dyn Write, state: &State, prim: &Primitives, geom: &GeometrySet, title: &str) -> std::io::Result<()> {
    let grid = &state.grid;
    let c = |f, v| to_cell_centers(f, v, grid);
    let arrays = [
        ("rho", c(&state.rho, Variant::Cell)),
        ("rho_theta", c(&state.rho_theta, Variant::Cell)),
        ("theta", c(&prim.theta, Variant::Cell)),
        ("p_pert", c(&prim.p_pert, Variant::Cell)),
        ("u", c(&prim.vel[0], Variant::Face(Axis::X))),
        ("v", c(&prim.vel[1], Variant::Face(Axis::Y))),
        ("w", c(&prim.vel[2], Variant::Face(Axis::Z))),
        ("alpha", c(&alpha_field(geom, Variant::Cell), Variant::Cell)),
    ];
    let refs: Vec<(&str, &[f64])> = arrays.iter().map(|(n, d)| (*n, d.as_slice())).collect();
    write_vtk(out, grid, title, &refs)
}

fn alpha_field(geom: &GeometrySet, v: Variant) -> Field {
    let g = geom.get(v);
    Field { layout: g.layout, data: g.alpha.clone() }
}

/// Interior control volume of `variant` whose center is nearest `x`.
fn nearest_cv(grid: &GridSpec, variant: Variant, x: [f64; 3]) -> [isize; 3] {
    let dims = variant.dims(grid.n);
    let mut p = [0isize; 3];
    for d in 0..3 {
        let shift = if variant.is_staggered_along(Axis::ALL[d]) { 0.0 } else { 0.5 };
        let i = ((x[d] - grid.origin[d]) / grid.dx[d] - shift).round() as isize;
        p[d] = i.clamp(0, dims[d] as isize - 1);
    }
    p
}

fn probe_value(spec: &ProbeSpec, state: &State, prim: &Primitives) -> f64 {
    let (variant, field) = match spec.variable {
        ProbeVariable::U => (Variant::Face(Axis::X), &prim.vel[0]),
        ProbeVariable::V => (Variant::Face(Axis::Y), &prim.vel[1]),
        ProbeVariable::W => (Variant::Face(Axis::Z), &prim.vel[2]),
        ProbeVariable::Rho => (Variant::Cell, &state.rho),
        ProbeVariable::Theta => (Variant::Cell, &prim.theta),
        ProbeVariable::PPert => (Variant::Cell, &prim.p_pert),
    };
    field.get(nearest_cv(&state.grid, variant, spec.location))
}

fn max_speed(prim: &Primitives, geom: &GeometrySet) -> f64 {
    let n = geom.grid().n;
    let mut m = 0.0f64;
    for a in Axis::ALL {
        let v = Variant::Face(a);
        let g = geom.get(v);
        Range3::interior(v, n).for_each(|p| {
            let l = g.layout.at(p);
            if g.is_fluid(l) {
                m = m.max(prim.vel[a.index()][l].abs());
            }
        });
    }
    m
}

fn hemisphere_line(
    cmp: &ExactComparison,
    cfg: &SolverConfig,
    prim: &Primitives,
    geom: &GeometrySet,
) -> Result<(ErrorReport, f64)> {
    let Surface::Hemisphere { center, radius } = cfg.surface else {
        return Err(Error::Config("hemisphere comparison needs a hemisphere surface".into()));
    };
    let ExactComparison::HemisphereLine { x, y, z_min, z_max } = *cmp;
    let u_inf = cfg.initial.velocity[0];
    let grid = *geom.grid();
    let xf = Variant::Face(Axis::X);
    let g = geom.get(xf);
    let column = nearest_cv(&grid, xf, [x, y, 0.0]);
    let mut samples = Vec::new();
    for k in 0..grid.n[2] as isize {
        let p = [column[0], column[1], k];
        let pos = grid.cv_center(xf, p);
        if pos[2] >= z_min && pos[2] <= z_max {
            let l = g.layout.at(p);
            samples.push((pos, prim.vel[0][l], g.alpha[l]));
        }
    }
    let report = error_norms(&samples, |pos| {
        exact_hemisphere_cartesian(pos, center, radius, u_inf).map_or(f64::NAN, |u| u[0])
    })?;
    let crest = crest_radial_speed(prim, geom, center)?;
    Ok((report, crest))
}

fn crest_radial_speed(prim: &Primitives, geom: &GeometrySet, center: [f64; 3]) -> Result<f64> {
    let grid = *geom.grid();
    let cell = &geom.cell;
    let mut worst = 0.0f64;
    let mut found = false;
    for di in -1..=0 {
        for dj in -1..=0 {
            let base = nearest_cv(&grid, Variant::Face(Axis::Z), center);
            let (i, j) = (base[0] + di, base[1] + dj);
            let Some(k) = (0..grid.n[2] as isize).find(|&k| cell.is_fluid(cell.layout.at([i, j, k]))) else {
                continue;
            };
            let p = [i, j, k];
            let mut u = [0.0; 3];
            for a in Axis::ALL {
                let d = a.index();
                let mut q = p;
                q[d] += 1;
                u[d] = 0.5 * (prim.vel[d].get(p) + prim.vel[d].get(q));
            }
            let x = grid.cv_center(Variant::Cell, p);
            let (_, _, rhat, _) = spherical_frame([x[0] - center[0], x[1] - center[1], x[2] - center[2]]);
            let ur = u[0] * rhat[0] + u[1] * rhat[1] + u[2] * rhat[2];
            worst = worst.max(ur.abs());
            found = true;
        }
    }
    if !found {
        return Err(Error::Domain("no fluid cell above the hemisphere crest".into()));
    }
    Ok(worst)
}

/// Build everything from `cfg` and advance it; files go to `out_dir` when given.
pub fn run_case(cfg: &SolverConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let grid = cfg.grid_spec()?;
    let (geom, _) = build_geometry_set(&cfg.surface, &grid, cfg.geometry)?;
    let background = hydrostatic_background(cfg.background, &cfg.constants, &grid)?;
    let mut state = State::uniform_flow(cfg.model, grid, background, cfg.initial.velocity, &geom);
    fill_ghost(&mut state, &cfg.boundaries);
    let ranges = Variant::ALL.map(|v| owned_range(v, &cfg.boundaries, grid.n));
    let flux = FluxOperator::new(&geom, cfg.constants, cfg.viscosity_mask, cfg.boundaries, cfg.forcing, ranges);
    let maps = cfg.wsrd.then(|| build_all(&geom, &cfg.boundaries));
    if let Some(m) = &maps {
        let nodes: usize = m.iter().map(|m| m.nodes.len()).sum();
        log::info!("{}: {} cut cells, {} merge neighborhoods", cfg.name, geom.cell.cut.len(), nodes);
    }
    let mut integ = Integrator::new(flux, maps, cfg.damping.clone(), cfg.step);
    let mut outputs = Outputs { dir: out_dir, name: cfg.name.clone(), files: Vec::new() };
    let mut probes: Vec<ProbeSeries> =
        cfg.probes.iter().map(|p| ProbeSeries::new(p.location, p.variable.name())).collect();

    let compressible = cfg.model == crate::fields::Model::Compressible;
    let mass = |s: &State| s.total(&s.rho, Variant::Cell, &geom);
    let mut summary = RunSummary { mass_initial: mass(&state), ..RunSummary::default() };
    let mut time = 0.0;
    let mut prim = primitives(&state, &geom, &cfg.constants)?;
    if cfg.run.output_every.is_some() {
        outputs.fields(&format!("{:06}", 0), &state, &prim, &geom)?;
    }
    let end = cfg.run.end_time;
    let done = |steps: usize, t: f64| {
        cfg.run.max_steps.is_some_and(|m| steps >= m) || end.is_some_and(|e| t >= e * (1.0 - 1e-12))
    };
    while !done(integ.steps, time) {
        let mut dt = integ.stable_dt(&state)?;
        if let Some(e) = end {
            dt = dt.min(e - time);
        }
        if !dt.is_finite() {
            return Err(Error::Config("no finite stable step for a resting flow; set step.max_dt".into()));
        }
        let before = mass(&state);
        let report = match integ.step(&mut state, dt) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{}: {e}", cfg.name);
                if let Ok(p) = primitives(&state, &geom, &cfg.constants) {
                    outputs.fields("abort", &state, &p, &geom)?;
                }
                return Err(e);
            }
        };
        time += dt;
        summary.poisson_iterations += report.poisson.iter().map(|s| s.iterations).sum::<usize>();
        if compressible {
            let residual = (mass(&state) - before + dt * report.boundary_mass_flux).abs() / before;
            summary.max_mass_residual = summary.max_mass_residual.max(residual);
        }
        prim = primitives(&state, &geom, &cfg.constants)?;
        for (series, spec) in probes.iter_mut().zip(&cfg.probes) {
            series.push(time, probe_value(spec, &state, &prim))?;
        }
        let steps = integ.steps;
        if steps % 100 == 0 {
            log::info!("{}: step {steps} t={time:.6e} dt={dt:.3e} max|u|={:.4e}", cfg.name, max_speed(&prim, &geom));
        } else {
            log::debug!("{}: step {steps} t={time:.6e} dt={dt:.3e}", cfg.name);
        }
        if cfg.run.output_every.is_some_and(|k| steps % k == 0) {
            outputs.fields(&format!("{steps:06}"), &state, &prim, &geom)?;
        }
    }
    summary.steps = integ.steps;
    summary.time = time;
    summary.mass_final = mass(&state);
    summary.max_speed = max_speed(&prim, &geom);
    if let Some(cmp) = &cfg.exact {
        let (report, crest) = hemisphere_line(cmp, cfg, &prim, &geom)?;
        summary.line_error = Some(report);
        summary.crest_radial_speed = Some(crest);
    }
    drop(integ);

    outputs.fields("final", &state, &prim, &geom)?;
    for (i, series) in probes.iter().enumerate() {
        if let Some(mut w) = outputs.create(&format!("probe_{i}_{}.csv", series.variable))? {
            series.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    if let Some(mut w) = outputs.create("diagnostics.txt")? {
        writeln!(w, "case={}", cfg.name)?;
        summary.write(&mut w)?;
        w.flush()?;
    }
    let files = outputs.files;
    Ok(RunOutput { summary, state, geom, probes, files })
}

/// Geometry datasets for all four grids, the merge neighborhoods, and a
/// cell-centered VTK view of the volume fractions.
pub fn geometry_dump(cfg: &SolverConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let grid = cfg.grid_spec()?;
    let (geom, _) = build_geometry_set(&cfg.surface, &grid, cfg.geometry)?;
    let maps = build_all(&geom, &cfg.boundaries);
    let mut files = Vec::new();
    let mut create = |name: String| -> Result<BufWriter<File>> {
        let path = out_dir.join(name);
        let f = File::create(&path)?;
        files.push(path);
        Ok(BufWriter::new(f))
    };
    for (v, map) in Variant::ALL.iter().zip(&maps) {
        let mut w = create(format!("geometry_{}.txt", v.name()))?;
        write_geometry(geom.get(*v), &mut w)?;
        w.flush()?;
        let mut w = create(format!("neighborhoods_{}.txt", v.name()))?;
        map.write(&mut w)?;
        w.flush()?;
    }
    let alpha: Vec<Vec<f64>> =
        Variant::ALL.iter().map(|&v| to_cell_centers(&alpha_field(&geom, v), v, &grid)).collect();
    let names = ["alpha_cell", "alpha_x", "alpha_y", "alpha_z"];
    let arrays: Vec<(&str, &[f64])> = names.iter().zip(&alpha).map(|(n, a)| (*n, a.as_slice())).collect();
    let mut w = create(format!("{}_geometry.vtk", cfg.name))?;
    write_vtk(&mut w, &grid, &format!("{} geometry", cfg.name), &arrays)?;
    w.flush()?;
    Ok(files)
}
