//! 1-D finite-difference solver for the coupled H⁺/OH⁻ system
//!
//! ```text
//! ∂C_H/∂t  = D_H ∂²C_H/∂x²  − v ∂C_H/∂x  − k_f C_H C_OH + k_r
//! ∂C_OH/∂t = D_OH ∂²C_OH/∂x² − v ∂C_OH/∂x − k_f C_H C_OH + k_r
//! ```
//!
//! Transport uses forward differences in time with central second and first
//! differences in space. The recombination term is advanced separately with
//! the exact point-wise solution from [`chem::reaction_step_exact`], combined
//! by Lie or Strang splitting, so the time step is limited only by the
//! transport stencil.
//!
//! The two domain ends are Dirichlet nodes held at the neutral background.

use crate::chem::{self, ChannelParams, IonPair, Species};
use crate::error::{Error, Result};
use crate::scenarios::ReceiverSeries;

/// Diffusion number limit of the explicit stencil.
pub const MAX_DIFFUSION_NUMBER: f64 = 0.5;
/// Courant number limit of the advective term.
pub const MAX_COURANT_NUMBER: f64 = 1.0;
/// Cell Péclet limit for the central advective difference to stay monotone.
pub const MAX_CELL_PECLET: f64 = 2.0;
/// Default step as a fraction of the largest stable step.
pub const DEFAULT_DT_SAFETY: f64 = 0.9;

/// Slack for configurations that sit exactly on a stability bound.
const BOUND_SLACK: f64 = 1e-12;

/// Uniform 1-D grid with nodes `x_j = x_min + j·dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    n: usize,
}

/// Location of a point snapped to its nearest node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSnap {
    pub index: usize,
    pub position: f64,
    /// `position − requested`, cm.
    pub offset: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Config(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Config(format!("dx must be > 0, got {dx}")));
        }
        let n = ((x_max - x_min) / dx).round() as usize + 1;
        if n < 3 {
            return Err(Error::Config(format!(
                "grid [{x_min}, {x_max}] with dx = {dx} has fewer than 3 nodes"
            )));
        }
        Ok(Self { x_min, x_max, dx, n })
    }

    /// Number of nodes, boundaries included.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn snap(&self, x: f64) -> Result<NodeSnap> {
        let last = self.x(self.n - 1);
        if !(x >= self.x_min - 0.5 * self.dx && x <= last + 0.5 * self.dx) {
            return Err(Error::Config(format!(
                "position {x} cm lies outside the grid [{}, {last}]",
                self.x_min
            )));
        }
        let index = (((x - self.x_min) / self.dx).round() as usize).min(self.n - 1);
        let position = self.x(index);
        Ok(NodeSnap {
            index,
            position,
            offset: position - x,
        })
    }
}

/// H⁺ and OH⁻ concentrations (M) at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct IonField {
    pub c_h: Vec<f64>,
    pub c_oh: Vec<f64>,
}

impl IonField {
    pub fn uniform(len: usize, pair: IonPair) -> Self {
        Self {
            c_h: vec![pair.c_h; len],
            c_oh: vec![pair.c_oh; len],
        }
    }

    /// Neutral water everywhere.
    pub fn background(grid: &Grid1D, params: &ChannelParams) -> Self {
        let bg = params.background();
        Self::uniform(grid.len(), IonPair { c_h: bg, c_oh: bg })
    }

    pub fn len(&self) -> usize {
        self.c_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_h.is_empty()
    }

    pub fn pair(&self, j: usize) -> IonPair {
        IonPair {
            c_h: self.c_h[j],
            c_oh: self.c_oh[j],
        }
    }

    pub fn species(&self, species: Species) -> &[f64] {
        match species {
            Species::Acid => &self.c_h,
            Species::Base => &self.c_oh,
        }
    }

    pub fn species_mut(&mut self, species: Species) -> &mut [f64] {
        match species {
            Species::Acid => &mut self.c_h,
            Species::Base => &mut self.c_oh,
        }
    }

    /// Index and value of the first entry that is not finite and positive.
    pub fn first_invalid(&self) -> Option<(usize, IonPair)> {
        (0..self.len())
            .map(|j| (j, self.pair(j)))
            .find(|(_, p)| !p.is_valid())
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_h.len() != self.c_oh.len() {
            return Err(Error::Config("H⁺ and OH⁻ arrays differ in length".into()));
        }
        match self.first_invalid() {
            Some((j, p)) => Err(Error::Domain(format!(
                "node {j} holds non-positive or non-finite concentrations ({:e}, {:e})",
                p.c_h, p.c_oh
            ))),
            None => Ok(()),
        }
    }

    /// `∑ (c_h − c_oh)·dx`, in M·cm.
    pub fn excess_integral(&self, dx: f64) -> f64 {
        self.c_h
            .iter()
            .zip(&self.c_oh)
            .map(|(h, o)| h - o)
            .sum::<f64>()
            * dx
    }

    /// Amount of `species` above the neutral background, mol.
    pub fn moles_above_background(&self, species: Species, grid: &Grid1D, params: &ChannelParams) -> f64 {
        let bg = params.background();
        let integral: f64 = self.species(species).iter().map(|c| c - bg).sum::<f64>() * grid.dx;
        crate::analytic::density_from_molar(integral, 1, params.cross_section)
    }
}

/// Order in which transport and reaction sub-steps are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    /// Transport for `dt`, then reaction for `dt`.
    Lie,
    /// Reaction for `dt/2`, transport for `dt`, reaction for `dt/2`.
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// End nodes fixed at the neutral background.
    #[default]
    DirichletBackground,
}

/// Discretization of `∂C/∂x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Advection {
    #[default]
    Central,
    Upwind,
}

/// Time integrator for the transport sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportIntegrator {
    /// Single forward-Euler step.
    #[default]
    ForwardEuler,
    /// Two-stage strong-stability-preserving Runge-Kutta (Heun). Second
    /// order in time under the same step limit.
    SspRk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// s
    pub dt: f64,
    /// s
    pub t_end: f64,
    pub scheme: Splitting,
    pub boundary: BoundaryPolicy,
    /// Receiver sampling period, in steps.
    pub record_every: usize,
    /// cm
    pub receiver_x: f64,
    pub advection: Advection,
    pub integrator: TransportIntegrator,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, receiver_x: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: Splitting::default(),
            boundary: BoundaryPolicy::default(),
            record_every: 1,
            receiver_x,
            advection: Advection::default(),
            integrator: TransportIntegrator::default(),
        }
    }

    /// Config whose step is 90% of the largest stable step for this grid.
    pub fn with_stable_dt(grid: &Grid1D, params: &ChannelParams, t_end: f64, receiver_x: f64) -> Self {
        let mut cfg = Self::new(1.0, t_end, receiver_x);
        cfg.dt = DEFAULT_DT_SAFETY * max_stable_dt(grid, &cfg, params);
        cfg
    }

    pub fn with_scheme(mut self, scheme: Splitting) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, steps: usize) -> Self {
        self.record_every = steps;
        self
    }

    pub fn with_integrator(mut self, integrator: TransportIntegrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_advection(mut self, advection: Advection) -> Self {
        self.advection = advection;
        self
    }

    /// Sampling period of the receiver series, s.
    pub fn record_interval(&self) -> f64 {
        self.dt * self.record_every as f64
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > self.dt && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end ({}) must exceed dt ({})",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        grid.snap(self.receiver_x).map(|_| ())
    }
}

/// Dimensionless stability numbers of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// `max(D_H, D_OH)·dt/dx²`
    pub diffusion_number: f64,
    /// `|v|·dt/dx`
    pub courant_number: f64,
    /// `|v|·dx / min(D_H, D_OH)`
    pub cell_peclet: f64,
    /// Largest step that satisfies every bound, s.
    pub max_dt: f64,
    pub pass: bool,
}

impl StabilityReport {
    pub fn evaluate(grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> Self {
        let dx = grid.dx;
        let speed = params.velocity.abs();
        let diffusion_number = params.max_diffusion() * config.dt / (dx * dx);
        let courant_number = speed * config.dt / dx;
        let cell_peclet = speed * dx / params.d_h.min(params.d_oh);
        let max_dt = max_stable_dt(grid, config, params);
        let pass = violation(diffusion_number, courant_number, cell_peclet, config, max_dt, dx).is_none();
        Self {
            diffusion_number,
            courant_number,
            cell_peclet,
            max_dt,
            pass,
        }
    }
}

/// Largest `dt` for which the transport stencil is stable and monotone.
pub fn max_stable_dt(grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> f64 {
    let dx = grid.dx;
    let speed = params.velocity.abs();
    let d_max = params.max_diffusion();
    let mut dt = MAX_DIFFUSION_NUMBER * dx * dx / d_max;
    if speed > 0.0 {
        dt = dt.min(MAX_COURANT_NUMBER * dx / speed);
        if config.advection == Advection::Upwind {
            // all stencil weights non-negative: 2r + |c| ≤ 1
            dt = dt.min(dx / (2.0 * d_max / dx + speed));
        }
    }
    dt
}

fn violation(
    diffusion_number: f64,
    courant_number: f64,
    cell_peclet: f64,
    config: &SolverConfig,
    max_dt: f64,
    dx: f64,
) -> Option<Error> {
    let over = |value: f64, limit: f64| value > limit * (1.0 + BOUND_SLACK);
    let dt_remedy = format!("largest admissible dt is {max_dt:.6e} s");
    if over(diffusion_number, MAX_DIFFUSION_NUMBER) {
        return Some(Error::Stability {
            bound: "diffusion number",
            value: diffusion_number,
            limit: MAX_DIFFUSION_NUMBER,
            remedy: dt_remedy,
        });
    }
    if over(courant_number, MAX_COURANT_NUMBER) {
        return Some(Error::Stability {
            bound: "Courant number",
            value: courant_number,
            limit: MAX_COURANT_NUMBER,
            remedy: dt_remedy,
        });
    }
    match config.advection {
        Advection::Central if over(cell_peclet, MAX_CELL_PECLET) => Some(Error::Stability {
            bound: "cell Péclet number",
            value: cell_peclet,
            limit: MAX_CELL_PECLET,
            remedy: format!(
                "refine dx below {:.6e} cm or use upwind advection",
                dx * MAX_CELL_PECLET / cell_peclet
            ),
        }),
        Advection::Upwind if over(2.0 * diffusion_number + courant_number, 1.0) => Some(Error::Stability {
            bound: "2·diffusion number + Courant number",
            value: 2.0 * diffusion_number + courant_number,
            limit: 1.0,
            remedy: dt_remedy,
        }),
        _ => None,
    }
}

/// Verifies the explicit transport bounds: diffusion number ≤ 1/2,
/// Courant number ≤ 1, and the monotonicity bound of the advective
/// difference (cell Péclet ≤ 2 for central, `2r + c ≤ 1` for upwind).
pub fn stability_check(grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> Result<StabilityReport> {
    let report = StabilityReport::evaluate(grid, config, params);
    match violation(
        report.diffusion_number,
        report.courant_number,
        report.cell_peclet,
        config,
        report.max_dt,
        grid.dx,
    ) {
        Some(err) => Err(err),
        None => Ok(report),
    }
}

/// Stencil weights for one species.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    /// D·dt/dx²
    r: f64,
    /// v·dt/dx (signed)
    c: f64,
    advection: Advection,
    background: f64,
}

impl Stencil {
    fn new(diffusion: f64, dt: f64, grid: &Grid1D, params: &ChannelParams, advection: Advection) -> Self {
        Self {
            r: diffusion * dt / (grid.dx * grid.dx),
            c: params.velocity * dt / grid.dx,
            advection,
            background: params.background(),
        }
    }

    /// Numerical flux from node `a` into its right neighbour `b`, in units
    /// of concentration (multiply by dx for M·cm).
    fn face_flux(&self, a: f64, b: f64) -> f64 {
        let advective = match self.advection {
            Advection::Central => 0.5 * self.c * (a + b),
            Advection::Upwind if self.c >= 0.0 => self.c * a,
            Advection::Upwind => self.c * b,
        };
        advective - self.r * (b - a)
    }

    /// One forward-Euler transport step from `src` into `dst`.
    ///
    /// Returns the pulse-related flux magnitude through the two boundary
    /// faces, i.e. the departure from the uniform-background flux.
    fn euler(&self, src: &[f64], dst: &mut [f64]) -> f64 {
        let n = src.len();
        let (r, c) = (self.r, self.c);
        for j in 1..n - 1 {
            let (left, mid, right) = (src[j - 1], src[j], src[j + 1]);
            let diffusion = r * ((left + right) - 2.0 * mid);
            let advection = match self.advection {
                Advection::Central => 0.5 * c * (right - left),
                Advection::Upwind if c >= 0.0 => c * (mid - left),
                Advection::Upwind => c * (right - mid),
            };
            dst[j] = mid + diffusion - advection;
        }
        dst[0] = self.background;
        dst[n - 1] = self.background;
        let quiet = self.c * self.background;
        (self.face_flux(src[0], src[1]) - quiet).abs() + (self.face_flux(src[n - 2], src[n - 1]) - quiet).abs()
    }

    /// One transport step with the chosen integrator; `stage` is scratch.
    fn advance(&self, integrator: TransportIntegrator, field: &mut [f64], out: &mut [f64], stage: &mut [f64]) -> f64 {
        match integrator {
            TransportIntegrator::ForwardEuler => {
                let leak = self.euler(field, out);
                field.copy_from_slice(out);
                leak
            }
            TransportIntegrator::SspRk2 => {
                let first = self.euler(field, stage);
                let second = self.euler(stage, out);
                for (u, w) in field.iter_mut().zip(out.iter()) {
                    *u = 0.5 * (*u + *w);
                }
                0.5 * (first + second)
            }
        }
    }
}

/// One explicit transport step of `D·∂²C/∂x² − v·∂C/∂x` for both species.
pub fn transport_step(field: &IonField, grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> IonField {
    let mut out = field.clone();
    let mut scratch = vec![0.0; field.len()];
    let mut stage = vec![0.0; field.len()];
    for species in [Species::Acid, Species::Base] {
        let stencil = Stencil::new(params.diffusion(species), config.dt, grid, params, config.advection);
        stencil.advance(config.integrator, out.species_mut(species), &mut scratch, &mut stage);
    }
    out
}

/// Applies the exact recombination kinetics for `dt` at every node.
pub fn reaction_step(field: &IonField, dt: f64, params: &ChannelParams) -> IonField {
    let mut out = field.clone();
    react_in_place(&mut out, dt, params);
    out
}

fn react_in_place(field: &mut IonField, dt: f64, params: &ChannelParams) {
    if !params.reacts() || dt <= 0.0 {
        return;
    }
    for (h, o) in field.c_h.iter_mut().zip(field.c_oh.iter_mut()) {
        let next = chem::reaction_step_exact(IonPair { c_h: *h, c_oh: *o }, dt, params);
        *h = next.c_h;
        *o = next.c_oh;
    }
}

/// Conservation bookkeeping sampled alongside the receiver series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostic {
    pub time: f64,
    /// `∑ (c_h − c_oh)·dx`, M·cm.
    pub excess_integral: f64,
    /// Cumulative pulse flux through the domain ends, M·cm, per species.
    pub leakage_h: f64,
    pub leakage_oh: f64,
}

/// A running solve: owns the field, clock and receiver record.
#[derive(Debug, Clone)]
pub struct Simulation {
    grid: Grid1D,
    config: SolverConfig,
    params: ChannelParams,
    field: IonField,
    scratch: Vec<f64>,
    stage: Vec<f64>,
    receiver: NodeSnap,
    stability: StabilityReport,
    steps: usize,
    anchor_step: usize,
    anchor_time: f64,
    time: f64,
    leakage: [f64; 2],
    series: ReceiverSeries,
    diagnostics: Vec<Diagnostic>,
}

impl Simulation {
    pub fn new(initial: IonField, grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> Result<Self> {
        params.validate()?;
        config.validate(grid)?;
        let stability = stability_check(grid, config, params)?;
        if initial.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} nodes but the grid has {}",
                initial.len(),
                grid.len()
            )));
        }
        initial.validate()?;
        let receiver = grid.snap(config.receiver_x)?;
        let n = grid.len();
        let mut sim = Self {
            grid: *grid,
            config: *config,
            params: *params,
            field: initial,
            scratch: vec![0.0; n],
            stage: vec![0.0; n],
            receiver,
            stability,
            steps: 0,
            anchor_step: 0,
            anchor_time: 0.0,
            time: 0.0,
            leakage: [0.0; 2],
            series: ReceiverSeries::new("", params.background()),
            diagnostics: Vec::new(),
        };
        sim.record();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn field(&self) -> &IonField {
        &self.field
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn receiver(&self) -> NodeSnap {
        self.receiver
    }

    pub fn stability(&self) -> StabilityReport {
        self.stability
    }

    pub fn series(&self) -> &ReceiverSeries {
        &self.series
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    /// Adds `molar` (one value per node) to the field of `species`, as for a
    /// release in the middle of a run.
    pub fn inject(&mut self, species: Species, molar: &[f64]) -> Result<()> {
        if molar.len() != self.field.len() {
            return Err(Error::Config("injection profile does not match the grid".into()));
        }
        for (c, add) in self.field.species_mut(species).iter_mut().zip(molar) {
            *c += add;
        }
        self.field.validate()
    }

    /// One full step of length `dt`.
    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.config.dt)?;
        self.time = self.anchor_time + (self.steps - self.anchor_step) as f64 * self.config.dt;
        self.after_step();
        Ok(())
    }

    /// Steps until the clock reaches `target`, shortening the last step if
    /// needed.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        let dt = self.config.dt;
        let tol = 1e-9 * dt;
        let full = ((target - self.time) / dt + 1e-9).floor().max(0.0) as usize;
        for _ in 0..full {
            self.step()?;
        }
        let rest = target - self.time;
        if rest > tol {
            self.step_by(rest)?;
            self.anchor_step = self.steps;
            self.anchor_time = target;
            self.time = target;
            self.after_step();
        }
        Ok(())
    }

    /// Runs to `t_end` and makes sure the final state is recorded.
    pub fn run_to_end(&mut self) -> Result<()> {
        self.advance_to(self.config.t_end)?;
        if self.series.times.last().copied() != Some(self.time) {
            self.record();
        }
        Ok(())
    }

    pub fn finish(self) -> (IonField, ReceiverSeries) {
        (self.field, self.series)
    }

    fn step_by(&mut self, dt: f64) -> Result<()> {
        match self.config.scheme {
            Splitting::Lie => {
                self.transport(dt);
                react_in_place(&mut self.field, dt, &self.params);
            }
            Splitting::Strang => {
                react_in_place(&mut self.field, 0.5 * dt, &self.params);
                self.transport(dt);
                react_in_place(&mut self.field, 0.5 * dt, &self.params);
            }
        }
        self.steps += 1;
        if let Some((j, p)) = self.field.first_invalid() {
            return Err(Error::Divergence {
                step: self.steps,
                time: self.time + dt,
                detail: format!("node {j} reached ({:e}, {:e})", p.c_h, p.c_oh),
            });
        }
        Ok(())
    }

    fn transport(&mut self, dt: f64) {
        for (k, species) in [Species::Acid, Species::Base].into_iter().enumerate() {
            let stencil = Stencil::new(
                self.params.diffusion(species),
                dt,
                &self.grid,
                &self.params,
                self.config.advection,
            );
            let field = match species {
                Species::Acid => &mut self.field.c_h,
                Species::Base => &mut self.field.c_oh,
            };
            let leak = stencil.advance(self.config.integrator, field, &mut self.scratch, &mut self.stage);
            self.leakage[k] += leak * self.grid.dx;
        }
    }

    fn after_step(&mut self) {
        if self.steps.is_multiple_of(self.config.record_every) {
            self.record();
        }
    }

    fn record(&mut self) {
        let pair = self.field.pair(self.receiver.index);
        self.series.push(self.time, pair);
        self.diagnostics.push(Diagnostic {
            time: self.time,
            excess_integral: self.field.excess_integral(self.grid.dx),
            leakage_h: self.leakage[0],
            leakage_oh: self.leakage[1],
        });
    }
}

/// Solves from `initial` to `config.t_end`, returning the final field and the
/// receiver record.
pub fn run(initial: IonField, grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> Result<(IonField, ReceiverSeries)> {
    let mut sim = Simulation::new(initial, grid, config, params)?;
    sim.run_to_end()?;
    Ok(sim.finish())
}
