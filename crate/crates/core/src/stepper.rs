//! Time integration over slabs: the coupled scheme and the three
//! mechanical/thermal product formulas.
//!
//! The mechanical phase holds entropy fixed and the thermal phase holds the
//! configuration fixed. Whenever a mechanical phase closes a step, the
//! frozen-entropy temperature it implies is projected back onto the nodal
//! temperature space (consistent mass, Dirichlet data imposed).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::assembly::{
    dirichlet_values, element_data, interpolate, mechanical_layout, mechanical_matrix, mechanical_rhs,
    monolithic_layout, monolithic_matrix, monolithic_rhs, space_rule, strain_trace, thermal_layout, thermal_matrix,
    thermal_rhs, LoadSpec, SlabSolution, StateVector,
};
use crate::diagnostics::{
    conduction_dissipation, energy_norm, jump_dissipation, l2_norm, mech_energy, mechanical_jump_dissipation,
    thermal_jump_dissipation, EnergyReport,
};
use crate::error::{Error, Phase, Result};
use crate::linalg::{SolverSettings, Solver, SparseMatrix};
use crate::mesh::{Mesh, SlabLayout};
use crate::model::{Coefficients, ModelType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Monolithic,
    /// Mechanical predictor then thermal corrector.
    LieTrotter,
    /// Mechanical half step, thermal full step, mechanical half step.
    Strang,
    /// Mean of the two single-pass orderings.
    DoublePass,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Monolithic, Scheme::LieTrotter, Scheme::Strang, Scheme::DoublePass];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Monolithic => "monolithic",
            Scheme::LieTrotter => "lie_trotter",
            Scheme::Strang => "strang",
            Scheme::DoublePass => "double_pass",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected monolithic, lie_trotter, strang or double_pass)")))
    }
}

/// A scheme together with the constitutive class it runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeChoice {
    pub scheme: Scheme,
    pub model: ModelType,
}

impl SchemeChoice {
    pub fn new(scheme: Scheme, p: &Coefficients) -> Self {
        SchemeChoice { scheme, model: p.model_type() }
    }
}

/// Slab boundaries `t_0 < t_1 < ... < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::arg("time grid needs at least one slab"));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("time grid must be finite and strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    pub fn uniform(t0: f64, t_end: f64, n_slabs: usize) -> Result<Self> {
        if n_slabs == 0 {
            return Err(Error::arg("time grid needs at least one slab"));
        }
        let dt = (t_end - t0) / n_slabs as f64;
        TimeGrid::new((0..=n_slabs).map(|i| if i == n_slabs { t_end } else { t0 + i as f64 * dt }).collect())
    }

    /// Uniform grid with step `dt`; `t_end - t0` must be a whole number of
    /// steps (to relative 1e-9).
    pub fn with_step(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::arg(format!("time step must be positive, got {dt}")));
        }
        let n = ((t_end - t0) / dt).round();
        if n < 1.0 || ((t_end - t0) - n * dt).abs() > 1e-9 * (t_end - t0).abs() {
            return Err(Error::arg(format!("[{t0}, {t_end}] is not a whole number of steps {dt}")));
        }
        TimeGrid::uniform(t0, t_end, n as usize)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_slabs(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self, n: usize) -> f64 {
        self.times[n + 1] - self.times[n]
    }

    pub fn slab(&self, n: usize) -> (f64, f64) {
        (self.times[n], self.times[n + 1])
    }
}

/// Per-slab bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabRecord {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Energy removed by temporal jumps (and by the closing temperature
    /// projection of split schemes). For the double pass this is the mean
    /// over the two orderings.
    pub jump_dissipation: f64,
    /// Energy removed by classical conduction inside the slab.
    pub conduction_dissipation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Mechanical,
    Thermal,
    Monolithic,
    Projection,
}

struct Prepared {
    full: SparseMatrix,
    layout: SlabLayout,
    solver: Solver,
}

/// Advances states slab by slab, caching factorizations per phase and step
/// size.
pub struct Stepper<'a> {
    mesh: &'a Mesh,
    p: Coefficients,
    loads: LoadSpec,
    settings: SolverSettings,
    cache: HashMap<(Kind, u64), Prepared>,
    track_energy: bool,
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub record: SlabRecord,
}

impl<'a> Stepper<'a> {
    pub fn new(mesh: &'a Mesh, p: Coefficients, loads: LoadSpec, settings: SolverSettings) -> Result<Self> {
        if p.dim != mesh.dim() {
            return Err(Error::Dimension { expected: mesh.dim(), got: p.dim });
        }
        let track_energy = p.theta0 > 0.0;
        Ok(Stepper { mesh, p, loads, settings, cache: HashMap::new(), track_energy })
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.p
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn prepared(&mut self, kind: Kind, t0: f64, t1: f64) -> Result<&Prepared> {
        let key = (kind, (t1 - t0).to_bits());
        if !self.cache.contains_key(&key) {
            let (layout, full) = match kind {
                Kind::Mechanical => {
                    let l = mechanical_layout(self.mesh, t0, t1)?;
                    let a = mechanical_matrix(self.mesh, &l, &self.p)?;
                    (l, a)
                }
                Kind::Thermal => {
                    let l = thermal_layout(self.mesh, t0, t1)?;
                    let a = thermal_matrix(self.mesh, &l, &self.p)?;
                    (l, a)
                }
                Kind::Monolithic => {
                    let l = monolithic_layout(self.mesh, t0, t1)?;
                    let a = monolithic_matrix(self.mesh, &l, &self.p)?;
                    (l, a)
                }
                Kind::Projection => unreachable!("projection operators are built separately"),
            };
            let map: Vec<usize> = (0..layout.n_dofs()).map(|i| layout.free_index(i).unwrap_or(usize::MAX)).collect();
            let reduced = full.select(&map, &map, layout.n_free(), layout.n_free())?;
            let solver = Solver::new(&reduced, &self.settings)?;
            self.cache.insert(key, Prepared { full, layout, solver });
        }
        Ok(&self.cache[&key])
    }

    /// Solves with Dirichlet elimination; returns the full solution vector
    /// and the layout retimed to the slab.
    fn solve(&mut self, kind: Kind, t0: f64, t1: f64, rhs: Vec<f64>) -> Result<(SlabLayout, Vec<f64>)> {
        let mesh = self.mesh;
        let loads = self.loads.clone();
        let prep = self.prepared(kind, t0, t1)?;
        let layout = prep.layout.retimed(t0, t1)?;
        let n = layout.n_dofs();
        let mut fixed = vec![0.0; n];
        for (i, v) in dirichlet_values(mesh, &layout, &loads) {
            fixed[i] = v;
        }
        let lift = prep.full.spmv(&fixed)?;
        let red: Vec<f64> = layout.free_dofs().iter().map(|&i| rhs[i] - lift[i]).collect();
        let x = prep.solver.solve(&red)?;
        let mut full = fixed;
        for (&i, v) in layout.free_dofs().iter().zip(x) {
            full[i] = v;
        }
        Ok((layout, full))
    }

    fn layout_for(&mut self, kind: Kind, t0: f64, t1: f64) -> Result<SlabLayout> {
        self.prepared(kind, t0, t1)?.layout.retimed(t0, t1)
    }

    /// Mechanical phase on `[t0, t1]` from the trace `prev` (whose
    /// temperature and displacement fix the entropy). Temperature and
    /// thermal displacement are carried over unchanged.
    pub fn mechanical_phase(&mut self, prev: &StateVector, t0: f64, t1: f64) -> Result<SlabSolution> {
        let layout = self.layout_for(Kind::Mechanical, t0, t1)?;
        let rhs = mechanical_rhs(self.mesh, &layout, &self.p, prev, &self.loads)?;
        let (layout, x) = self.solve(Kind::Mechanical, t0, t1, rhs)?;
        SlabSolution::from_vector(&layout, &x, prev)
    }

    /// Thermal phase on `[t0, t1]` at the configuration `u_end`. Displacement
    /// and velocity are carried over from `prev`.
    pub fn thermal_phase(&mut self, prev: &StateVector, u_end: &[f64], t0: f64, t1: f64) -> Result<SlabSolution> {
        let layout = self.layout_for(Kind::Thermal, t0, t1)?;
        let rhs = thermal_rhs(self.mesh, &layout, &self.p, prev, u_end, &self.loads)?;
        let (layout, x) = self.solve(Kind::Thermal, t0, t1, rhs)?;
        SlabSolution::from_vector(&layout, &x, prev)
    }

    pub fn monolithic_slab(&mut self, prev: &StateVector, t0: f64, t1: f64) -> Result<SlabSolution> {
        let layout = self.layout_for(Kind::Monolithic, t0, t1)?;
        let rhs = monolithic_rhs(self.mesh, &layout, &self.p, prev, &self.loads)?;
        let (layout, x) = self.solve(Kind::Monolithic, t0, t1, rhs)?;
        SlabSolution::from_vector(&layout, &x, prev)
    }

    /// L2 projection of the frozen-entropy temperature
    /// `theta_ref - (Theta0/(rho c)) m (tr eps(u) - tr eps(u_ref))` onto the
    /// nodal temperatures, with the boundary temperature at time `t`.
    /// Returns the projection and the energy it removes,
    /// `1/2 (rho c/Theta0) |theta_I - P theta_I|^2` (scaled).
    pub fn project_temperature(&mut self, theta_ref: &[f64], u_ref: &[f64], u: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
        let mesh = self.mesh;
        let n = mesh.n_nodes();
        let dim = mesh.dim();
        if theta_ref.len() != n || u_ref.len() != n * dim || u.len() != n * dim {
            return Err(Error::Layout("projection inputs do not match the mesh".into()));
        }
        let f = self.p.adiabatic_factor() * self.p.m;
        let rule = space_rule(mesh)?;
        let mut rhs = vec![0.0; n];
        let mut triplets = Vec::new();
        let mut target_sq = 0.0;
        for e in 0..mesh.n_elements() {
            let ed = element_data(mesh, e, &rule)?;
            for q in &ed.qps {
                let th = interpolate(theta_ref, &ed.nodes, q)
                    - f * (strain_trace(u, &ed.nodes, q, dim) - strain_trace(u_ref, &ed.nodes, q, dim));
                target_sq += q.weight * th * th;
                for (a, &na) in ed.nodes.iter().enumerate() {
                    rhs[na] += q.weight * th * q.shape.values[a];
                }
            }
            if !self.cache.contains_key(&(Kind::Projection, 0)) {
                for (a, &na) in ed.nodes.iter().enumerate() {
                    for (b, &nb) in ed.nodes.iter().enumerate() {
                        triplets.push((na, nb, ed.mass[a][b]));
                    }
                }
            }
        }
        if !self.cache.contains_key(&(Kind::Projection, 0)) {
            let full = SparseMatrix::from_triplets(n, n, &triplets)?;
            let layout = thermal_layout(mesh, 0.0, 1.0)?;
            let map: Vec<usize> = {
                let mut k = 0;
                (0..n)
                    .map(|i| {
                        if mesh.on_temperature_boundary(i) {
                            usize::MAX
                        } else {
                            k += 1;
                            k - 1
                        }
                    })
                    .collect()
            };
            let n_free = map.iter().filter(|&&i| i != usize::MAX).count();
            let reduced = full.select(&map, &map, n_free, n_free)?;
            let solver = Solver::new(&reduced, &self.settings)?;
            self.cache.insert((Kind::Projection, 0), Prepared { full, layout, solver });
        }
        let prep = &self.cache[&(Kind::Projection, 0)];
        let mut fixed = vec![0.0; n];
        if let Some(g) = &self.loads.temperature {
            for (i, v) in fixed.iter_mut().enumerate() {
                if mesh.on_temperature_boundary(i) {
                    *v = g(mesh.coords()[i], t);
                }
            }
        }
        let lift = prep.full.spmv(&fixed)?;
        let free: Vec<usize> = (0..n).filter(|&i| !mesh.on_temperature_boundary(i)).collect();
        let red: Vec<f64> = free.iter().map(|&i| rhs[i] - lift[i]).collect();
        let x = prep.solver.solve(&red)?;
        let mut theta = fixed;
        for (&i, v) in free.iter().zip(x) {
            theta[i] = v;
        }
        // |theta_I|^2 - |P theta_I|^2 = |theta_I - P theta_I|^2 for the orthogonal projection
        let mth = prep.full.spmv(&theta)?;
        let proj_sq: f64 = theta.iter().zip(&mth).map(|(a, b)| a * b).sum();
        let loss = if self.track_energy {
            0.5 * self.p.units.energy_scale() * self.p.theta_energy_weight()? * (target_sq - proj_sq).max(0.0)
        } else {
            0.0
        };
        Ok((theta, loss))
    }

    fn diss<F: FnOnce() -> Result<f64>>(&self, f: F) -> Result<f64> {
        if self.track_energy {
            f()
        } else {
            Ok(0.0)
        }
    }

    fn record(&self, index: usize, t0: f64, t1: f64, jump: f64, cond: f64) -> SlabRecord {
        SlabRecord { index, t_start: t0, t_end: t1, jump_dissipation: jump, conduction_dissipation: cond }
    }

    /// Mechanical phase over the slab followed by the thermal phase at the
    /// mechanical end configuration.
    pub fn step_lie_trotter(&mut self, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let mesh = self.mesh;
        let mech = self.mechanical_phase(prev, t0, t1).map_err(|e| e.in_phase(index, Phase::Mechanical))?;
        let therm = self.thermal_phase(prev, &mech.end.u, t0, t1).map_err(|e| e.in_phase(index, Phase::Thermal))?;
        let p = self.p.clone();
        let jump = self.diss(|| {
            Ok(mechanical_jump_dissipation(mesh, &mech, prev, &p)?
                + thermal_jump_dissipation(mesh, &therm, prev, &mech.end.u, &p)?)
        })?;
        let cond = self.diss(|| conduction_dissipation(mesh, &therm, &p))?;
        let mut state = mech.end.clone();
        state.alpha = therm.end.alpha;
        state.theta = therm.end.theta;
        state.time = t1;
        Ok(StepOutcome { state, record: self.record(index, t0, t1, jump, cond) })
    }

    /// Thermal phase first (configuration frozen at the incoming trace),
    /// then the mechanical phase and the closing temperature projection.
    pub fn step_reverse(&mut self, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let mesh = self.mesh;
        let p = self.p.clone();
        let therm = self.thermal_phase(prev, &prev.u, t0, t1).map_err(|e| e.in_phase(index, Phase::Thermal))?;
        let mut mid = prev.clone();
        mid.alpha = therm.end.alpha.clone();
        mid.theta = therm.end.theta.clone();
        let mech = self.mechanical_phase(&mid, t0, t1).map_err(|e| e.in_phase(index, Phase::Mechanical))?;
        let (theta, loss) = self
            .project_temperature(&mid.theta, &prev.u, &mech.end.u, t1)
            .map_err(|e| e.in_phase(index, Phase::Projection))?;
        let jump = self.diss(|| {
            Ok(thermal_jump_dissipation(mesh, &therm, prev, &prev.u, &p)?
                + mechanical_jump_dissipation(mesh, &mech, prev, &p)?
                + loss)
        })?;
        let cond = self.diss(|| conduction_dissipation(mesh, &therm, &p))?;
        let mut state = mech.end;
        state.theta = theta;
        state.time = t1;
        Ok(StepOutcome { state, record: self.record(index, t0, t1, jump, cond) })
    }

    /// Mechanical half slab, thermal full slab, mechanical half slab.
    pub fn step_strang(&mut self, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let mesh = self.mesh;
        let p = self.p.clone();
        let th = 0.5 * (t0 + t1);
        let first = self.mechanical_phase(prev, t0, th).map_err(|e| e.in_phase(index, Phase::Mechanical))?;
        let therm = self.thermal_phase(prev, &first.end.u, t0, t1).map_err(|e| e.in_phase(index, Phase::Thermal))?;
        let mut mid = first.end.clone();
        mid.alpha = therm.end.alpha.clone();
        mid.theta = therm.end.theta.clone();
        mid.time = th;
        let second = self.mechanical_phase(&mid, th, t1).map_err(|e| e.in_phase(index, Phase::Mechanical))?;
        let (theta, loss) = self
            .project_temperature(&mid.theta, &mid.u, &second.end.u, t1)
            .map_err(|e| e.in_phase(index, Phase::Projection))?;
        let jump = self.diss(|| {
            Ok(mechanical_jump_dissipation(mesh, &first, prev, &p)?
                + thermal_jump_dissipation(mesh, &therm, prev, &first.end.u, &p)?
                + mechanical_jump_dissipation(mesh, &second, &mid, &p)?
                + loss)
        })?;
        let cond = self.diss(|| conduction_dissipation(mesh, &therm, &p))?;
        let mut state = second.end;
        state.theta = theta;
        state.time = t1;
        Ok(StepOutcome { state, record: self.record(index, t0, t1, jump, cond) })
    }

    /// Arithmetic mean of [`Self::step_lie_trotter`] and [`Self::step_reverse`].
    pub fn step_double_pass(&mut self, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let a = self.step_lie_trotter(prev, index, t0, t1)?;
        let b = self.step_reverse(prev, index, t0, t1)?;
        let mut state = a.state.combine(0.5, &b.state, 0.5)?;
        state.time = t1;
        let record = self.record(
            index,
            t0,
            t1,
            0.5 * (a.record.jump_dissipation + b.record.jump_dissipation),
            0.5 * (a.record.conduction_dissipation + b.record.conduction_dissipation),
        );
        Ok(StepOutcome { state, record })
    }

    pub fn step_monolithic(&mut self, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let mesh = self.mesh;
        let p = self.p.clone();
        let slab = self.monolithic_slab(prev, t0, t1).map_err(|e| e.in_phase(index, Phase::Monolithic))?;
        let jump = self.diss(|| jump_dissipation(mesh, &slab, prev, &p))?;
        let cond = self.diss(|| conduction_dissipation(mesh, &slab, &p))?;
        let mut state = slab.end;
        state.time = t1;
        Ok(StepOutcome { state, record: self.record(index, t0, t1, jump, cond) })
    }

    pub fn step(&mut self, scheme: Scheme, prev: &StateVector, index: usize, t0: f64, t1: f64) -> Result<StepOutcome> {
        let out = match scheme {
            Scheme::Monolithic => self.step_monolithic(prev, index, t0, t1),
            Scheme::LieTrotter => self.step_lie_trotter(prev, index, t0, t1),
            Scheme::Strang => self.step_strang(prev, index, t0, t1),
            Scheme::DoublePass => self.step_double_pass(prev, index, t0, t1),
        }?;
        if !out.state.all_finite() {
            return Err(Error::Solver { iterations: 0, residual: f64::NAN }.in_phase(index, Phase::Monolithic));
        }
        Ok(out)
    }

    /// Energy row for a trace; `None` when the energy metric is undefined
    /// (zero coupling temperature).
    pub fn energy_report(&self, state: &StateVector, jump: f64) -> Result<Option<EnergyReport>> {
        if !self.track_energy {
            return Ok(None);
        }
        Ok(Some(EnergyReport {
            time: state.time,
            h1_energy: energy_norm(self.mesh, state, &self.p)?,
            l2_norm: l2_norm(self.mesh, state)?,
            mech_energy: mech_energy(self.mesh, state, &self.p)?,
            jump_dissipation: jump,
        }))
    }
}

/// Sequence of `t_n^-` traces with per-slab diagnostics.
#[derive(Debug)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub states: Vec<StateVector>,
    pub records: Vec<SlabRecord>,
    pub energies: Vec<EnergyReport>,
    /// Set when a step failed; the trajectory holds everything up to it.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn last(&self) -> &StateVector {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(Trajectory { failure: None, ..self }),
        }
    }
}

/// Runs `scheme` over `grid`, keeping every trace.
pub fn run(
    mesh: &Mesh,
    p: &Coefficients,
    loads: &LoadSpec,
    initial: &StateVector,
    scheme: Scheme,
    grid: &TimeGrid,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.n_slabs() + 1);
    let mut traj = run_with(mesh, p, loads, initial, scheme, grid, settings, |s, _| states.push(s.clone()))?;
    traj.states = states;
    Ok(traj)
}

/// Runs `scheme` over `grid`, handing each trace (and the record of the slab
/// that produced it) to `observe` instead of storing it. The returned
/// trajectory only holds the final state.
#[allow(clippy::too_many_arguments)]
pub fn run_with<F>(
    mesh: &Mesh,
    p: &Coefficients,
    loads: &LoadSpec,
    initial: &StateVector,
    scheme: Scheme,
    grid: &TimeGrid,
    settings: &SolverSettings,
    mut observe: F,
) -> Result<Trajectory>
where
    F: FnMut(&StateVector, Option<&SlabRecord>),
{
    initial.check(mesh)?;
    let mut start = initial.clone();
    start.time = grid.times()[0];
    let mut stepper = Stepper::new(mesh, p.clone(), loads.clone(), *settings)?;
    let mut records = Vec::with_capacity(grid.n_slabs());
    let mut energies = Vec::new();
    if let Some(r) = stepper.energy_report(&start, 0.0)? {
        energies.push(r);
    }
    observe(&start, None);
    let mut current = start;
    let mut failure = None;
    for n in 0..grid.n_slabs() {
        let (t0, t1) = grid.slab(n);
        match stepper.step(scheme, &current, n, t0, t1) {
            Ok(out) => {
                if let Some(r) = stepper.energy_report(&out.state, out.record.jump_dissipation)? {
                    energies.push(r);
                }
                observe(&out.state, Some(&out.record));
                records.push(out.record);
                current = out.state;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(Trajectory { scheme, states: vec![current], records, energies, failure })
}
