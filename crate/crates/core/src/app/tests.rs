use super::*;
use crate::fields::{EbWall, SideBc};

fn assert_close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} != {b}");
}

fn extent(cfg: &SolverConfig) -> [f64; 3] {
    [0, 1, 2].map(|d| cfg.grid.hi[d] - cfg.grid.lo[d])
}

#[test]
fn agnesi_golden() {
    let c = preset("agnesi", &[]).unwrap();
    assert_eq!(c.model, Model::Compressible);
    assert_eq!(c.grid.n, [120, 1, 172]);
    let e = extent(&c);
    assert_close(e[0], 595.0);
    assert_close(e[2], 600.0);
    assert_eq!(c.surface, Surface::AgnesiRidge { peak: 100.0, half_width: 100.0, center: 0.0 });
    assert_eq!(c.constants.mu, 60.0);
    assert_eq!(c.forcing, [0.005, 0.0, 0.0]);
    assert_eq!(c.boundaries.eb, EbWall::NoSlip);
    assert!(c.boundaries.is_periodic(Axis::Y));
    let r = c.damping.rayleigh.unwrap();
    assert_eq!((r.thickness, r.coefficient), (50.0, 0.25));
    assert_eq!(c.step.cfl, 0.5);
    assert_eq!(c.initial.velocity, [0.0; 3]);
    assert!(c.wsrd);
}

#[test]
fn hemisphere_golden() {
    let c = preset("hemisphere", &[]).unwrap();
    assert_eq!(c.grid.n, [256; 3]);
    assert_eq!(extent(&c), [10.0; 3]);
    let Surface::Hemisphere { center, radius } = c.surface else { panic!("wrong surface") };
    assert_eq!((center, radius), ([5.0, 5.0, 0.0], 0.5));
    let SideBc::Inflow { velocity, .. } = c.boundaries.x[0] else { panic!("no inflow") };
    assert_eq!(velocity, [10.0, 0.0, 0.0]);
    assert_eq!(c.boundaries.x[1], SideBc::Outflow);
    assert!(c.boundaries.is_periodic(Axis::Y));
    assert_eq!(c.boundaries.z, [SideBc::SlipWall; 2]);
    assert_eq!(c.boundaries.eb, EbWall::FreeSlip);
    assert_eq!(c.constants.mu, 1.0);
    assert_eq!(c.viscosity_mask, ViscosityMask::Radial { center, inner: 1.0, ramp: 0.25 });
    assert!(!c.damping.sponges.is_empty() && c.damping.sponges.iter().all(|s| s.thickness == 2.0));
    assert_eq!(c.step.cfl, 0.5);

    let desk = preset("hemisphere", &["grid.n=[64, 64, 64]".into()]).unwrap();
    assert_eq!(desk.grid.n, [64; 3]);
}

#[test]
fn square_cylinder_golden() {
    for (h, height) in [(3, 10.2), (4, 10.2), (5, 12.7)] {
        let c = preset(&format!("squareCylinder:{h}"), &[]).unwrap();
        assert_eq!(c.model, Model::Anelastic);
        let e = extent(&c);
        assert_close(e[0], 25.5);
        assert_close(e[1], 15.3);
        assert_close(e[2], height);
        assert_close(c.grid.lo[0], -6.1);
        assert_eq!(c.surface, Surface::Box { center: [0.0; 3], width: 1.0, height: 2.0 * h as f64 });
        assert_close(c.constants.mu, 1.0 / 250.0);
        assert_eq!(c.boundaries.z, [SideBc::NoSlipWall, SideBc::SlipWall]);
        assert_eq!(c.boundaries.y, [SideBc::SlipWall; 2]);
        assert_eq!(c.boundaries.eb, EbWall::NoSlip);
        assert_eq!(c.probes, vec![ProbeSpec { location: [17.0, 0.0, 2.0], variable: ProbeVariable::V }]);
        assert_eq!(c.step.cfl, 0.5);
    }
    assert_eq!(preset("squareCylinder", &[]).unwrap().grid.hi[2], 10.2);
    assert!(preset("squareCylinder:6", &[]).is_err());
}

#[test]
fn unknown_preset() {
    assert!(matches!(preset("cavity", &[]), Err(Error::Config(_))));
}

#[test]
fn toml_round_trip() {
    for name in PRESET_NAMES {
        let c = preset(name, &[]).unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(SolverConfig::from_toml(&text).unwrap(), c, "{name}");
    }
}

#[test]
fn malformed_number_names_key_and_line() {
    let text = preset("agnesi", &[]).unwrap().to_toml().unwrap();
    let bad = text.replace("mu = 60.0", "mu = 6o.0");
    assert_ne!(bad, text);
    let line = bad.lines().position(|l| l.contains("6o.0")).unwrap() + 1;
    let Err(Error::Config(msg)) = SolverConfig::from_toml(&bad) else { panic!("accepted") };
    assert!(msg.contains("`mu`"), "{msg}");
    assert!(msg.contains(&format!("line {line}")), "{msg}");
}

#[test]
fn unknown_key_rejected() {
    let text = preset("agnesi", &[]).unwrap().to_toml().unwrap();
    let bad = text.replace("mu = 60.0", "mu = 60.0\nviscosity = 1.0");
    let Err(Error::Config(msg)) = SolverConfig::from_toml(&bad) else { panic!("accepted") };
    assert!(msg.contains("viscosity"), "{msg}");
}

#[test]
fn out_of_range_rejected() {
    assert!(preset("agnesi", &["step.cfl=1.5".into()]).is_err());
    assert!(preset("agnesi", &["grid.n=[0, 1, 10]".into()]).is_err());
    assert!(preset("agnesi", &["run.end_time=-1.0".into()]).is_err());
    assert!(preset("squareCylinder:3", &["step.scheme=\"rk3_compressible\"".into()]).is_err());
}

#[test]
fn overrides() {
    let c = preset("agnesi", &["step.cfl=0.4".into(), "grid.n.2=86".into(), "wsrd=false".into(), "name=ridge".into()])
        .unwrap();
    assert_eq!(c.step.cfl, 0.4);
    assert_eq!(c.grid.n, [120, 1, 86]);
    assert!(!c.wsrd);
    assert_eq!(c.name, "ridge");
    assert!(preset("agnesi", &["step.cfl".into()]).is_err());
    assert!(preset("agnesi", &["grid.n.7=3".into()]).is_err());
    assert!(preset("agnesi", &["step.cfl.x=3".into()]).is_err());
}

#[test]
fn parse_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case.toml");
    let c = preset("hemisphere", &["grid.n=[16, 16, 16]".into()]).unwrap();
    std::fs::write(&path, c.to_toml().unwrap()).unwrap();
    assert_eq!(parse_config(&path).unwrap(), c);
    assert!(parse_config(&dir.path().join("missing.toml")).is_err());
}

fn tiny_agnesi(steps: usize) -> SolverConfig {
    preset("agnesi", &["grid.n=[24, 1, 34]".into(), format!("run.max_steps={steps}")]).unwrap()
}

#[test]
fn rerun_is_bit_identical() {
    let cfg = tiny_agnesi(3);
    let a = run_case(&cfg, None).unwrap();
    let b = run_case(&cfg, None).unwrap();
    for (x, y) in a.state.mom.iter().zip(&b.state.mom).chain([(&a.state.rho_theta, &b.state.rho_theta)]) {
        assert!(x.data.iter().zip(&y.data).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
    assert_eq!(a.summary, b.summary);
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_agnesi(4);
    cfg.run.output_every = Some(2);
    let out = run_case(&cfg, Some(dir.path())).unwrap();
    assert_eq!(out.summary.steps, 4);
    assert!(out.probes.iter().all(|p| p.samples.len() == 4));
    for f in ["agnesi_000000.vtk", "agnesi_000002.vtk", "agnesi_000004.vtk", "agnesi_final.vtk", "probe_0_u.csv", "diagnostics.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let diag = std::fs::read_to_string(dir.path().join("diagnostics.txt")).unwrap();
    assert!(diag.contains("steps=4"));
    assert!(out.summary.max_mass_residual < 1e-10);
}

#[test]
fn end_time_is_hit_exactly() {
    let cfg = preset("agnesi", &["grid.n=[24, 1, 34]".into(), "run.end_time=0.05".into(), "step.max_dt=0.02".into()])
        .unwrap();
    let out = run_case(&cfg, None).unwrap();
    assert!((out.summary.time - 0.05).abs() < 1e-15);
    assert_eq!(out.summary.steps, 3);
}

#[test]
fn geometry_dump_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_agnesi(1);
    let files = geometry_dump(&cfg, dir.path()).unwrap();
    assert_eq!(files.len(), 9);
    let cell = std::fs::read_to_string(dir.path().join("geometry_cell.txt")).unwrap();
    assert_eq!(cell.lines().count(), 2 + 24 * 34);
}
