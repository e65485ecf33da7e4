use super::*;
use crate::fields::{fill_ghost, owned_range, SideBc};
use crate::geometry::{build_geometry_set, GeometryOptions, Surface};
use crate::physics::{hydrostatic_background, primitives, ThetaProfile};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn ranges(bcs: &BoundarySpec, n: [usize; 3]) -> [Range3; 4] {
    Variant::ALL.map(|v| owned_range(v, bcs, n))
}

struct Case {
    geom: GeometrySet,
    state: State,
    bcs: BoundarySpec,
    consts: FluidConstants,
}

fn case(surface: Surface, n: [usize; 3], bcs: BoundarySpec, consts: FluidConstants, model: Model) -> Case {
    let periodic = Axis::ALL.map(|a| bcs.is_periodic(a));
    let grid = GridSpec::new(n, [1.0, 0.9, 0.8], [0.0; 3], periodic).unwrap();
    let (geom, _) = build_geometry_set(&surface, &grid, GeometryOptions::default()).unwrap();
    let bg = hydrostatic_background(ThetaProfile::constant(300.0), &consts, &grid).unwrap();
    let state = State::uniform_flow(model, grid, bg, [0.0; 3], &geom);
    Case { geom, state, bcs, consts }
}

fn perturb(s: &mut State, geom: &GeometrySet, seed: u64, amp: f64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let layout = s.layout();
    let cell = geom.get(Variant::Cell);
    for l in 0..layout.len() {
        if cell.is_fluid(l) {
            s.rho[l] *= 1.0 + 0.01 * rng.gen_range(-1.0..1.0);
            s.rho_theta[l] = s.rho[l] * (300.0 + rng.gen_range(-1.0..1.0));
        }
        for a in 0..3 {
            if geom.faces[a].is_fluid(l) {
                s.mom[a][l] = amp * rng.gen_range(-1.0..1.0);
            }
        }
    }
}

fn totals(c: &Case, rhs: &Rhs) -> [f64; 5] {
    let state = &c.state;
    let mut t = [0.0; 5];
    t[0] = state.total(&rhs.rho, Variant::Cell, &c.geom);
    t[1] = state.total(&rhs.rho_theta, Variant::Cell, &c.geom);
    for a in 0..3 {
        t[2 + a] = state.total(&rhs.mom[a], Variant::Face(Axis::ALL[a]), &c.geom);
    }
    t
}

#[test]
fn uniform_flux_full_cells() {
    let grid = GridSpec::new([4, 3, 3], [1.0; 3], [0.0; 3], [true; 3]).unwrap();
    let (geom, _) = build_geometry_set(&Surface::None, &grid, GeometryOptions::default()).unwrap();
    let f = Field::new(grid.layout(), 2.5);
    let du = divergence_update(&geom.cell, &[&f, &f, &f], &[], Range3::interior(Variant::Cell, grid.n));
    assert!(du.data.iter().all(|v| *v == 0.0));
}

#[test]
fn two_face_cell() {
    let grid = GridSpec::new([3, 1, 1], [0.5, 1.0, 1.0], [0.0; 3], [true; 3]).unwrap();
    let (geom, _) = build_geometry_set(&Surface::None, &grid, GeometryOptions::default()).unwrap();
    let layout = grid.layout();
    let mut fx = Field::zeros(layout);
    fx.set([1, 0, 0], 1.0);
    fx.set([2, 0, 0], 2.0);
    let z = Field::zeros(layout);
    let du = divergence_update(&geom.cell, &[&fx, &z, &z], &[], Range3::interior(Variant::Cell, grid.n));
    assert_eq!(du.get([1, 0, 0]), -2.0);
}

#[test]
fn linear_pressure_gradient() {
    let grid = GridSpec::new([5, 2, 2], [0.5, 1.0, 1.0], [0.0; 3], [false, true, true]).unwrap();
    let layout = grid.layout();
    let mut p = Field::zeros(layout);
    layout.full_range().for_each(|q| p.set(q, 3.0 * grid.cv_center(Variant::Cell, q)[0]));
    let r = Range3::new([1, 0, 0], [5, 2, 2]);
    let g = pressure_gradient_source(&p, Axis::X, 0.5, r);
    r.for_each(|q| assert!((g.get(q) + 3.0).abs() < 1e-12));
    let u = pressure_gradient_source(&Field::new(layout, 7.0), Axis::X, 0.5, r);
    r.for_each(|q| assert_eq!(u.get(q), 0.0));
}

#[test]
fn viscosity_mask_ramp() {
    let m = ViscosityMask::Radial { center: [0.0; 3], inner: 1.0, ramp: 0.5 };
    assert_eq!(m.at([0.5, 0.0, 0.0]), 0.0);
    assert_eq!(m.at([2.0, 0.0, 0.0]), 1.0);
    assert!((m.at([1.25, 0.0, 0.0]) - 0.5).abs() < 1e-12);
}

#[test]
fn quiescent_cut_state_has_zero_rhs() {
    let consts = FluidConstants { g: 0.0, mu: 0.3, ..Default::default() };
    let mut c = case(
        Surface::Hemisphere { center: [3.1, 2.3, 1.7], radius: 1.3 },
        [6, 6, 5],
        BoundarySpec::periodic(),
        consts,
        Model::Compressible,
    );
    fill_ghost(&mut c.state, &c.bcs);
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, [6, 6, 5]));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    let rhs = op.rhs(&c.state, &prim, RhsTerms { pressure_gradient: true });
    for f in [&rhs.rho, &rhs.rho_theta].into_iter().chain(rhs.mom.iter()) {
        assert!(f.data.iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn periodic_no_eb_conserves_all_equations() {
    let consts = FluidConstants { g: 0.0, mu: 0.05, alpha_theta: 0.02, ..Default::default() };
    let n = [5, 4, 6];
    let mut c = case(Surface::None, n, BoundarySpec::periodic(), consts, Model::Compressible);
    let geom = c.geom.clone();
    perturb(&mut c.state, &geom, 7, 3.0);
    fill_ghost(&mut c.state, &c.bcs);
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    let rhs = op.rhs(&c.state, &prim, RhsTerms { pressure_gradient: true });
    let t = totals(&c, &rhs);
    let scale = rhs.rho_theta.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * 120.0;
    for v in t {
        assert!(v.abs() < 1e-12 * scale.max(1.0), "{t:?}");
    }
}

#[test]
fn eb_domain_mass_changes_by_boundary_flux_only() {
    let consts = FluidConstants { g: 0.0, ..Default::default() };
    let n = [8, 4, 6];
    let bcs = BoundarySpec {
        x: [SideBc::Inflow { velocity: [5.0, 0.0, 0.0], density: 1.1, theta: 300.0 }, SideBc::Outflow],
        y: [SideBc::Periodic; 2],
        z: [SideBc::SlipWall; 2],
        eb: EbWall::FreeSlip,
    };
    let mut c = case(Surface::Hemisphere { center: [4.0, 1.8, 0.0], radius: 1.7 }, n, bcs, consts, Model::Compressible);
    let geom = c.geom.clone();
    perturb(&mut c.state, &geom, 11, 4.0);
    fill_ghost(&mut c.state, &c.bcs);
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    let rhs = op.rhs(&c.state, &prim, RhsTerms { pressure_gradient: true });
    let total = c.state.total(&rhs.rho, Variant::Cell, &c.geom);
    assert!(rhs.boundary_mass_flux.abs() > 1e-3);
    assert!((total + rhs.boundary_mass_flux).abs() < 1e-12 * rhs.boundary_mass_flux.abs().max(1.0));
}

#[test]
fn constant_theta_preserved_on_cut_grid() {
    let consts = FluidConstants { g: 0.0, ..Default::default() };
    let n = [6, 5, 6];
    let mut c = case(
        Surface::Plane { normal: [0.3, 0.2, 1.0], point: [0.0, 0.0, 2.1] },
        n,
        BoundarySpec { z: [SideBc::SlipWall; 2], ..BoundarySpec::periodic() },
        consts,
        Model::Compressible,
    );
    let geom = c.geom.clone();
    perturb(&mut c.state, &geom, 5, 2.0);
    let layout = c.state.layout();
    for l in 0..layout.len() {
        c.state.rho_theta[l] = 300.0 * c.state.rho[l];
    }
    fill_ghost(&mut c.state, &c.bcs);
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    let rhs = op.rhs(&c.state, &prim, RhsTerms { pressure_gradient: false });
    ranges(&c.bcs, n)[0].for_each(|p| {
        let l = layout.at(p);
        assert!((rhs.rho_theta[l] - 300.0 * rhs.rho[l]).abs() < 1e-9 * (1.0 + rhs.rho_theta[l].abs()));
    });
}

fn shear_case(eb: EbWall) -> (Case, f64, f64, f64) {
    let s = 0.8;
    let zw = 1.3;
    let mu = 0.7;
    let consts = FluidConstants { g: 0.0, mu, ..Default::default() };
    let n = [4, 4, 6];
    let bcs = BoundarySpec { z: [SideBc::SlipWall, SideBc::SlipWall], eb, ..BoundarySpec::periodic() };
    let mut c = case(Surface::Plane { normal: [0.0, 0.0, 1.0], point: [0.0, 0.0, zw] }, n, bcs, consts, Model::Compressible);
    let layout = c.state.layout();
    for l in 0..layout.len() {
        c.state.rho[l] = 1.0;
        c.state.rho_theta[l] = 300.0;
    }
    let gx = c.geom.get(Variant::Face(Axis::X)).clone();
    layout.full_range().for_each(|p| {
        let l = layout.at(p);
        c.state.mom[0][l] = if gx.is_fluid(l) { s * (gx.centroid(p)[2] - zw) } else { 0.0 };
    });
    (c, s, zw, mu)
}

#[test]
fn no_slip_shear_facet_flux() {
    let (c, s, _zw, mu) = shear_case(EbWall::NoSlip);
    let n = c.state.grid.n;
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    let fluxes = op.eb_fluxes(Axis::X, &prim);
    assert!(!fluxes.is_empty());
    let gx = c.geom.get(Variant::Face(Axis::X));
    for (l, af) in fluxes {
        let area = gx.facet(l).unwrap().area;
        assert!((af - mu * s * area).abs() < 1e-10 * area, "{af} vs {}", mu * s * area);
    }
}

#[test]
fn free_slip_facet_flux_vanishes() {
    let (c, _, _, _) = shear_case(EbWall::FreeSlip);
    let n = c.state.grid.n;
    let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
    let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
    assert!(op.eb_fluxes(Axis::X, &prim).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn conservative_with_random_states(seed in 0u64..10_000) {
        let consts = FluidConstants { g: 0.0, mu: 0.01, ..Default::default() };
        let n = [4, 5, 4];
        let mut c = case(Surface::None, n, BoundarySpec::periodic(), consts, Model::Compressible);
        let geom = c.geom.clone();
        perturb(&mut c.state, &geom, seed, 5.0);
        fill_ghost(&mut c.state, &c.bcs);
        let op = FluxOperator::new(&c.geom, c.consts, ViscosityMask::None, c.bcs, [0.0; 3], ranges(&c.bcs, n));
        let prim = primitives(&c.state, &c.geom, &c.consts).unwrap();
        let rhs = op.rhs(&c.state, &prim, RhsTerms { pressure_gradient: true });
        let t = totals(&c, &rhs);
        let scale: f64 = rhs.mom.iter().chain([&rhs.rho_theta]).flat_map(|f| f.data.iter()).fold(0.0, |m: f64, v| m.max(v.abs()));
        for v in t { prop_assert!(v.abs() <= 1e-12 * 80.0 * scale.max(1.0)); }
    }
}

#[test]
fn wall_fit_skips_points_at_the_facet() {
    let mut offs = vec![[0.05, 0.0, 0.01]];
    for k in 0..3 {
        for j in -1..=1 {
            for i in -1..=1 {
                offs.push([i as f64, j as f64, 0.6 + k as f64]);
            }
        }
    }
    let pts: Vec<usize> = (0..offs.len()).collect();
    let (kept, w) = wall_stencil(pts, &offs, [1.0; 3]);
    assert_eq!(w.order, FitOrder::Quadratic);
    assert_eq!(kept, (1..offs.len()).collect::<Vec<_>>());
    let g = w.apply(kept.iter().map(|&i| 2.0 * offs[i][2]));
    assert!((g[2] - 2.0).abs() < 1e-12);

    let (kept, w) = wall_stencil(vec![0, 1, 2, 3], &offs[..4], [1.0; 3]);
    assert_eq!(kept.len(), 4);
    assert_ne!(w.order, FitOrder::Zero);
}
