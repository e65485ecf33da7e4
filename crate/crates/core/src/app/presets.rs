use crate::error::{Error, Result};
use crate::fields::{BoundarySpec, CoefficientUnits, DampingSpec, EbWall, Model, RayleighLayer, Side, SideBc, Sponge};
use crate::fluxes::ViscosityMask;
use crate::geometry::{GeometryOptions, Surface};
use crate::physics::{FluidConstants, ThetaProfile};
use crate::timeint::{Scheme, StepConfig};

use super::{
    ExactComparison, GridConfig, InitialCondition, ProbeSpec, ProbeVariable, RunControl, SolverConfig,
};

pub const PRESET_NAMES: &[&str] = &["agnesi", "hemisphere", "squareCylinder:3", "squareCylinder:4", "squareCylinder:5"];

/// Look up a named case and apply `key=value` overrides.
///
/// `squareCylinder` takes the aspect ratio after a colon and defaults to 3.
pub fn preset(name: &str, overrides: &[String]) -> Result<SolverConfig> {
    let base = match name {
        "agnesi" => agnesi(),
        "hemisphere" => hemisphere(),
        _ => match name.split_once(':').map_or((name, None), |(a, b)| (a, Some(b))) {
            ("squareCylinder" | "square_cylinder", aspect) => {
                let h = match aspect {
                    None => 3.0,
                    Some(s) => s.parse().map_err(|_| Error::Config(format!("bad aspect ratio in preset `{name}`")))?,
                };
                square_cylinder(h)?
            }
            _ => {
                return Err(Error::Config(format!("unknown preset `{name}`; known: {}", PRESET_NAMES.join(", "))));
            }
        },
    };
    base.validate()?;
    base.with_overrides(overrides)
}

fn agnesi() -> SolverConfig {
    let (length, height) = (595.0, 600.0);
    let n = [120, 1, 172];
    let dx = length / n[0] as f64;
    SolverConfig {
        name: "agnesi".into(),
        model: Model::Compressible,
        grid: GridConfig { n, lo: [-0.5 * length, 0.0, 0.0], hi: [0.5 * length, dx, height] },
        surface: Surface::AgnesiRidge { peak: 100.0, half_width: 100.0, center: 0.0 },
        geometry: GeometryOptions::default(),
        boundaries: BoundarySpec {
            x: [SideBc::Periodic; 2],
            y: [SideBc::Periodic; 2],
            z: [SideBc::NoSlipWall, SideBc::SlipWall],
            eb: EbWall::NoSlip,
        },
        constants: FluidConstants { mu: 60.0, ..FluidConstants::default() },
        background: ThetaProfile::constant(300.0),
        damping: DampingSpec {
            rayleigh: Some(RayleighLayer { thickness: 50.0, coefficient: 0.25, units: CoefficientUnits::PerStep }),
            sponges: Vec::new(),
            reference_velocity: [0.0; 3],
        },
        step: StepConfig::new(Scheme::Rk3Compressible, 0.5),
        forcing: [0.005, 0.0, 0.0],
        viscosity_mask: ViscosityMask::None,
        initial: InitialCondition::default(),
        run: RunControl { max_steps: Some(10), ..RunControl::default() },
        probes: [150.0, 300.0, 450.0]
            .map(|z| ProbeSpec { location: [0.0, 0.5 * dx, z], variable: ProbeVariable::U })
            .to_vec(),
        exact: None,
        wsrd: true,
    }
}

fn hemisphere() -> SolverConfig {
    let (edge, radius, u_inf, theta) = (10.0, 0.5, 10.0, 300.0);
    let consts = FluidConstants { mu: 1.0, g: 0.0, ..FluidConstants::default() };
    let rho_inf = consts.p00 / (consts.r_d * theta);
    let center = [0.5 * edge, 0.5 * edge, 0.0];
    let sponge = |side| Sponge { side, thickness: 2.0, strength: 0.05, units: CoefficientUnits::PerStep };
    SolverConfig {
        name: "hemisphere".into(),
        model: Model::Compressible,
        grid: GridConfig { n: [256; 3], lo: [0.0; 3], hi: [edge; 3] },
        surface: Surface::Hemisphere { center, radius },
        geometry: GeometryOptions::default(),
        boundaries: BoundarySpec {
            x: [SideBc::Inflow { velocity: [u_inf, 0.0, 0.0], density: rho_inf, theta }, SideBc::Outflow],
            y: [SideBc::Periodic; 2],
            z: [SideBc::SlipWall, SideBc::SlipWall],
            eb: EbWall::FreeSlip,
        },
        constants: consts,
        background: ThetaProfile::constant(theta),
        damping: DampingSpec {
            rayleigh: None,
            sponges: vec![sponge(Side::ZHi), sponge(Side::YLo), sponge(Side::YHi), sponge(Side::XHi)],
            reference_velocity: [u_inf, 0.0, 0.0],
        },
        step: StepConfig::new(Scheme::Rk3Compressible, 0.5),
        forcing: [0.0; 3],
        viscosity_mask: ViscosityMask::Radial { center, inner: 2.0 * radius, ramp: 0.5 * radius },
        initial: InitialCondition { velocity: [u_inf, 0.0, 0.0] },
        run: RunControl { end_time: Some(3.0 * edge / u_inf), ..RunControl::default() },
        probes: vec![ProbeSpec { location: [center[0], center[1], 2.0 * radius], variable: ProbeVariable::U }],
        exact: Some(ExactComparison::HemisphereLine { x: center[0], y: center[1], z_min: 1.0, z_max: 6.0 }),
        wsrd: true,
    }
}

fn square_cylinder(aspect: f64) -> Result<SolverConfig> {
    if ![3.0, 4.0, 5.0].contains(&aspect) {
        return Err(Error::Config(format!("squareCylinder aspect ratio must be 3, 4 or 5, got {aspect}")));
    }
    let d = 1.0;
    let (length, width) = (25.5 * d, 15.3 * d);
    let height = if aspect == 5.0 { 12.7 } else { 10.2 };
    let inlet = 6.1 * d;
    let consts = FluidConstants { mu: 1.0 / 250.0, g: 0.0, ..FluidConstants::default() };
    // θ = P00/R puts the background density at one.
    let theta = consts.p00 / consts.r_d;
    let u_inf = 1.0;
    let n = [102, 61, if aspect == 5.0 { 51 } else { 41 }];
    Ok(SolverConfig {
        name: format!("square_cylinder_h{aspect}"),
        model: Model::Anelastic,
        grid: GridConfig { n, lo: [-inlet, -0.5 * width, 0.0], hi: [length - inlet, 0.5 * width, height] },
        surface: Surface::Box { center: [0.0; 3], width: d, height: 2.0 * aspect * d },
        geometry: GeometryOptions::default(),
        boundaries: BoundarySpec {
            x: [SideBc::Inflow { velocity: [u_inf, 0.0, 0.0], density: 1.0, theta }, SideBc::Outflow],
            y: [SideBc::SlipWall; 2],
            z: [SideBc::NoSlipWall, SideBc::SlipWall],
            eb: EbWall::NoSlip,
        },
        constants: consts,
        background: ThetaProfile::constant(theta),
        damping: DampingSpec::default(),
        step: StepConfig::new(Scheme::Rk2Anelastic, 0.5),
        forcing: [0.0; 3],
        viscosity_mask: ViscosityMask::None,
        initial: InitialCondition { velocity: [u_inf, 0.0, 0.0] },
        run: RunControl { end_time: Some(300.0), spin_up: 100.0, ..RunControl::default() },
        probes: vec![ProbeSpec { location: [17.0, 0.0, 2.0], variable: ProbeVariable::V }],
        exact: None,
        wsrd: true,
    })
}
