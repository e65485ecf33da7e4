//! Time stepping: three-stage Runge–Kutta for the compressible equations and
//! a projected midpoint scheme for the anelastic ones.

pub mod poisson;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{apply_damping, fill_ghost, DampingSpec, Model, State};
use crate::fluxes::{FluxOperator, Rhs, RhsTerms};
use crate::geometry::GeometrySet;
use crate::grid::{Axis, Field, Range3, Variant};
use crate::physics::{primitives, sound_speed, FluidConstants, Primitives};
use crate::wsrd::{redistribute_state, NeighborhoodMap, WsrdOptions};

pub use poisson::{PoissonSystem, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk3Compressible,
    Rk2Anelastic,
}

impl Scheme {
    pub fn for_model(model: Model) -> Scheme {
        match model {
            Model::Compressible => Scheme::Rk3Compressible,
            Model::Anelastic => Scheme::Rk2Anelastic,
        }
    }

    /// Fractions of the step at which each stage is evaluated from `U⁰`.
    pub fn stage_fractions(self) -> &'static [f64] {
        match self {
            Scheme::Rk3Compressible => &[1.0 / 3.0, 0.5, 1.0],
            Scheme::Rk2Anelastic => &[0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub cfl: f64,
    pub scheme: Scheme,
    #[serde(default = "default_tol")]
    pub poisson_tol: f64,
    #[serde(default = "default_max_iter")]
    pub poisson_max_iter: usize,
    /// Upper bound on the step, needed when the flow is at rest.
    #[serde(default)]
    pub max_dt: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    20_000
}

impl StepConfig {
    pub fn new(scheme: Scheme, cfl: f64) -> Self {
        StepConfig { cfl, scheme, poisson_tol: default_tol(), poisson_max_iter: default_max_iter(), max_dt: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.poisson_tol > 0.0) || self.poisson_max_iter == 0 {
            return Err(Error::InvalidInput("poisson tolerance and iteration limit must be positive".into()));
        }
        if let Some(m) = self.max_dt {
            if !(m > 0.0) {
                return Err(Error::InvalidInput(format!("max_dt must be positive, got {m}")));
            }
        }
        Ok(())
    }
}

/// `cfl · min Δ_d / (|u_d| + c)` over non-covered faces; the sound speed is
/// dropped for the anelastic model. A periodic axis one cell wide carries no
/// waves and is skipped. Infinite for a resting anelastic flow.
pub fn compute_dt(state: &State, prim: &Primitives, geom: &GeometrySet, consts: &FluidConstants, cfl: f64) -> Result<f64> {
    let grid = state.grid;
    let layout = state.layout();
    let cell = geom.get(Variant::Cell);
    let compressible = state.model == Model::Compressible;
    let sound = |l: usize| {
        if compressible && cell.is_fluid(l) {
            sound_speed(prim.pressure[l], state.rho[l], consts)
        } else {
            0.0
        }
    };
    let mut inv = 0.0f64;
    let mut bad = false;
    for a in Axis::ALL {
        let v = Variant::Face(a);
        let g = geom.get(v);
        let d = a.index();
        if grid.n[d] == 1 && grid.periodic[d] {
            continue;
        }
        let sa = layout.step(a) as usize;
        Range3::interior(v, grid.n).for_each(|p| {
            let l = layout.at(p);
            if !g.is_fluid(l) {
                return;
            }
            let speed = prim.vel[d][l].abs() + sound(l - sa).max(sound(l));
            if !speed.is_finite() {
                bad = true;
            }
            inv = inv.max(speed / grid.dx[d]);
        });
    }
    if bad {
        return Err(Error::Domain("non-finite wave speed in time-step estimate".into()));
    }
    Ok(if inv > 0.0 { cfl / inv } else { f64::INFINITY })
}

/// Points in a step recorded by the optional trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Stage(usize),
    Primitives,
    Rhs,
    Update,
    Wsrd,
    Damping,
    GhostFill,
    Projection,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Outward mass flux through the domain boundary at the final stage.
    pub boundary_mass_flux: f64,
    pub poisson: Vec<SolveStats>,
}

/// Everything a step needs besides the state.
pub struct Integrator<'a> {
    pub flux: FluxOperator<'a>,
    pub geom: &'a GeometrySet,
    /// `None` disables redistribution.
    pub maps: Option<Vec<NeighborhoodMap>>,
    pub wsrd: WsrdOptions,
    pub damping: DampingSpec,
    pub config: StepConfig,
    pub poisson: Option<PoissonSystem>,
    pub trace: Option<Vec<TraceEvent>>,
    pub steps: usize,
}

impl<'a> Integrator<'a> {
    pub fn new(
        flux: FluxOperator<'a>,
        maps: Option<Vec<NeighborhoodMap>>,
        damping: DampingSpec,
        config: StepConfig,
    ) -> Self {
        let geom = flux.geom;
        let poisson = (config.scheme == Scheme::Rk2Anelastic).then(|| PoissonSystem::new(&geom.cell, &flux.bcs));
        Integrator { flux, geom, maps, wsrd: WsrdOptions::default(), damping, config, poisson, trace: None, steps: 0 }
    }

    fn record(&mut self, e: TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(e);
        }
    }

    fn ranges(&self) -> [Range3; 4] {
        self.flux.ranges
    }

    /// Stable step for the current state, capped by `max_dt`.
    pub fn stable_dt(&self, state: &State) -> Result<f64> {
        let prim = primitives(state, self.geom, &self.flux.consts)?;
        let dt = compute_dt(state, &prim, self.geom, &self.flux.consts, self.config.cfl)?;
        Ok(self.config.max_dt.map_or(dt, |m| dt.min(m)))
    }

    pub fn step(&mut self, state: &mut State, dt: f64) -> Result<StepReport> {
        if Scheme::for_model(state.model) != self.config.scheme {
            return Err(Error::InvalidInput(format!("{:?} cannot advance a {:?} state", self.config.scheme, state.model)));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive and finite, got {dt}")));
        }
        let anelastic = state.model == Model::Anelastic;
        let terms = RhsTerms { pressure_gradient: !anelastic };
        let start = state.clone();
        let mut report = StepReport { dt, ..Default::default() };
        fill_ghost(state, &self.flux.bcs);
        for (s, &frac) in self.config.scheme.stage_fractions().iter().enumerate() {
            let h = frac * dt;
            self.record(TraceEvent::Stage(s));
            let prim = primitives(state, self.geom, &self.flux.consts).map_err(|e| self.abort(e.to_string()))?;
            self.record(TraceEvent::Primitives);
            let rhs = self.flux.rhs(state, &prim, terms);
            self.record(TraceEvent::Rhs);
            report.boundary_mass_flux = rhs.boundary_mass_flux;
            self.provisional(state, &start, &rhs, h);
            self.record(TraceEvent::Update);
            if let Some(maps) = &self.maps {
                redistribute_state(state, maps, self.wsrd)?;
                self.record(TraceEvent::Wsrd);
            }
            if !self.damping.is_empty() {
                apply_damping(state, &self.damping, self.geom, &self.ranges(), h, dt);
                self.record(TraceEvent::Damping);
            }
            fill_ghost(state, &self.flux.bcs);
            self.record(TraceEvent::GhostFill);
            if anelastic {
                report.poisson.push(self.project(state, h)?);
                self.record(TraceEvent::Projection);
            }
            self.check(state)?;
        }
        self.steps += 1;
        Ok(report)
    }

    fn abort(&self, reason: String) -> Error {
        Error::SolverAbort { step: self.steps, reason }
    }

    /// `U = U⁰ + h · δU` on the owned non-covered control volumes.
    fn provisional(&self, state: &mut State, start: &State, rhs: &Rhs, h: f64) {
        let ranges = self.ranges();
        let update = |out: &mut Field, base: &Field, du: &Field, g: &crate::geometry::EbGeometry, range: Range3| {
            range.for_each(|p| {
                let l = g.layout.at(p);
                if g.is_fluid(l) {
                    out[l] = base[l] + h * du[l];
                }
            });
        };
        let cell = self.geom.get(Variant::Cell);
        if state.model == Model::Compressible {
            update(&mut state.rho, &start.rho, &rhs.rho, cell, ranges[0]);
        }
        update(&mut state.rho_theta, &start.rho_theta, &rhs.rho_theta, cell, ranges[0]);
        for a in Axis::ALL {
            let v = Variant::Face(a);
            let d = a.index();
            update(&mut state.mom[d], &start.mom[d], &rhs.mom[d], self.geom.get(v), ranges[v.slot()]);
        }
    }

    /// Remove the divergence of the face momenta and refill ghosts; `h` is
    /// the stage increment. Ghosts must be current on entry.
    pub fn project(&self, state: &mut State, h: f64) -> Result<SolveStats> {
        let sys = self.poisson.as_ref().ok_or_else(|| Error::InvalidInput("no Poisson system for this scheme".into()))?;
        let cell = self.geom.get(Variant::Cell);
        let rhs: Vec<f64> = sys.divergence(cell, &state.mom).into_iter().map(|v| v / h).collect();
        let (phi, stats) = sys.solve(&rhs, self.config.poisson_tol, self.config.poisson_max_iter)?;
        let r = self.ranges();
        sys.correct_momenta(cell, &phi, &mut state.mom, &[r[1], r[2], r[3]], h);
        state.p_pert = sys.scatter(&phi);
        fill_ghost(state, &self.flux.bcs);
        log::trace!("projection: {} iterations, residual {:e}", stats.iterations, stats.residual);
        Ok(stats)
    }

    fn check(&self, state: &State) -> Result<()> {
        let cell = self.geom.get(Variant::Cell);
        let layout = state.layout();
        let mut bad = None;
        self.ranges()[0].for_each(|p| {
            let l = layout.at(p);
            if bad.is_none() && cell.is_fluid(l) {
                let (r, rt) = (state.rho[l], state.rho_theta[l]);
                if !(r > 0.0 && rt > 0.0) {
                    bad = Some(format!("non-positive density or rho*theta ({r:e}, {rt:e}) at cell {p:?}"));
                }
            }
        });
        for a in 0..3 {
            if bad.is_none() && state.mom[a].data.iter().any(|v| !v.is_finite()) {
                bad = Some(format!("non-finite momentum along {}", Axis::ALL[a].name()));
            }
        }
        match bad {
            Some(reason) => Err(self.abort(reason)),
            None => Ok(()),
        }
    }
}
