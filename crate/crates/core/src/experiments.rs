//! Scenario definitions: the manufactured 1D solution, the laser-heated
//! bar and the 2D initial temperature pulse.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{LoadSpec, StateVector};
use crate::diagnostics::{error_vs_exact, point_error, EnergyReport, ExactSolution, PointSample};
use crate::error::{Error, Result};
use crate::linalg::SolverSettings;
use crate::mesh::{build_interval_mesh, build_quad_mesh, Mesh};
use crate::model::{Coefficients, DimensionlessParams, MaterialParams};
use crate::stepper::{run_with, Scheme, SlabRecord, TimeGrid};

/// Element counts of the spatial refinement ladder (`h = 1/8 ... 1/64`).
pub const SPATIAL_LADDER: [usize; 4] = [8, 16, 32, 64];

/// Steps per unit time of the temporal ladder.
pub const TEMPORAL_LADDER: [usize; 4] = [8, 16, 32, 64];

/// Smooth standing-wave solution of the scaled 1D system with matching
/// body force and heat supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    pub length: f64,
    pub t_end: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        ManufacturedCase { eps1: 4.0, eps2: 0.2, k: 0.0, length: 1.0, t_end: 0.25 }
    }
}

/// Spatial ladder row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialError {
    pub h: f64,
    pub scheme: Scheme,
    pub h1_error: f64,
    pub l2_error: f64,
}

/// Temporal ladder row: pointwise error at the midpoint of the bar at the
/// final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalError {
    pub dt: f64,
    pub scheme: Scheme,
    pub midpoint_error: f64,
}

impl ManufacturedCase {
    pub fn coefficients(&self) -> Result<Coefficients> {
        DimensionlessParams::new(self.eps1, self.eps2, self.k)?.coefficients()
    }

    /// Body force and heat supply `(b, s)`.
    pub fn sources(&self, xi: f64, tau: f64) -> (f64, f64) {
        let (sx, cx) = (PI * xi).sin_cos();
        let (st, ct) = (PI * tau).sin_cos();
        let c = PI * PI / 4.0;
        let b = c * ((self.eps1 - 1.0) * sx * st + cx * ct);
        let s = c * (self.k * PI * sx * ct + self.eps2 * cx * ct);
        (b, s)
    }

    pub fn loads(&self) -> LoadSpec {
        let (b, s) = (*self, *self);
        LoadSpec {
            body_force: Some(Arc::new(move |x, t| [b.sources(x[0], t).0, 0.0])),
            heat_supply: Some(Arc::new(move |x, t| s.sources(x[0], t).1)),
            ..LoadSpec::none()
        }
    }

    pub fn mesh(&self, n_elements: usize) -> Result<Mesh> {
        build_interval_mesh(self.length, n_elements)
    }

    /// Nodal interpolant of the exact solution at `t`.
    pub fn interpolate(&self, mesh: &Mesh, t: f64) -> StateVector {
        let mut s = StateVector::zeros(1, mesh.n_nodes(), t);
        for (i, x) in mesh.coords().iter().enumerate() {
            let e = self.sample(*x, t);
            s.u[i] = e.u[0];
            s.v[i] = e.v[0];
            s.alpha[i] = e.alpha;
            s.theta[i] = e.theta;
        }
        s
    }

    fn solve(&self, scheme: Scheme, n_elements: usize, n_steps: usize, settings: &SolverSettings) -> Result<(Mesh, StateVector)> {
        let mesh = self.mesh(n_elements)?;
        let p = self.coefficients()?;
        let grid = TimeGrid::uniform(0.0, self.t_end, n_steps)?;
        let traj = run_with(&mesh, &p, &self.loads(), &self.interpolate(&mesh, 0.0), scheme, &grid, settings, |_, _| {})?
            .into_result()?;
        let last = traj.last().clone();
        Ok((mesh, last))
    }

    /// Errors at the final time with `dt = h` for each element count.
    pub fn spatial_study(&self, scheme: Scheme, ladder: &[usize], settings: &SolverSettings) -> Result<Vec<SpatialError>> {
        let p = self.coefficients()?;
        ladder
            .iter()
            .map(|&n| {
                let h = self.length / n as f64;
                let steps = (self.t_end / h).round().max(1.0) as usize;
                let (mesh, state) = self.solve(scheme, n, steps, settings)?;
                let (h1_error, l2_error) = error_vs_exact(&mesh, &state, self, &p)?;
                Ok(SpatialError { h, scheme, h1_error, l2_error })
            })
            .collect()
    }

    /// Midpoint errors at the final time on a fixed fine mesh for each
    /// time-step count per unit time.
    pub fn temporal_study(
        &self,
        scheme: Scheme,
        n_elements: usize,
        ladder: &[usize],
        settings: &SolverSettings,
    ) -> Result<Vec<TemporalError>> {
        ladder
            .iter()
            .map(|&per_unit| {
                let dt = 1.0 / per_unit as f64;
                let steps = (self.t_end / dt).round().max(1.0) as usize;
                let (mesh, state) = self.solve(scheme, n_elements, steps, settings)?;
                let midpoint_error = point_error(&mesh, &state, self, [0.5 * self.length, 0.0])?;
                Ok(TemporalError { dt: self.t_end / steps as f64, scheme, midpoint_error })
            })
            .collect()
    }
}

impl ExactSolution for ManufacturedCase {
    fn sample(&self, x: [f64; 2], t: f64) -> PointSample {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (st, ct) = (PI * t).sin_cos();
        let u = 0.25 * sx * st;
        let v = 0.25 * PI * sx * ct;
        let du = 0.25 * PI * cx * st;
        let dv = 0.25 * PI * PI * cx * ct;
        PointSample {
            u: [u, 0.0],
            v: [v, 0.0],
            alpha: u,
            theta: v,
            grad_u: [[du, 0.0], [0.0, 0.0]],
            grad_alpha: [du, 0.0],
            grad_theta: [dv, 0.0],
        }
    }
}

/// Bar heated at its left end by a short Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserCase {
    pub tau_p: f64,
    pub depth: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    /// Mesh size and time step.
    pub h: f64,
    pub t_end: f64,
    pub length: f64,
    pub amplitude: f64,
    /// Sign of the spatial exponent; `-1` localizes the pulse at the end.
    pub spatial_sign: f64,
}

impl Default for LaserCase {
    fn default() -> Self {
        LaserCase {
            tau_p: 0.01,
            depth: 0.02,
            eps1: 9.0,
            eps2: 0.5,
            k: 0.0,
            h: 0.005,
            t_end: 1.0,
            length: 1.0,
            amplitude: 1.0,
            spatial_sign: -1.0,
        }
    }
}

/// Contiguous run of nodes where `|theta|` exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSegment {
    pub start: f64,
    pub end: f64,
    pub peak_x: f64,
    pub peak: f64,
}

/// Temperature history and diagnostics of a laser run.
#[derive(Debug, Clone)]
pub struct LaserRun {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub energies: Vec<EnergyReport>,
    pub records: Vec<SlabRecord>,
}

/// Fitted propagation speeds of the two thermal fronts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSpeeds {
    pub fast: f64,
    pub slow: f64,
    /// Number of time levels at which both fronts were found.
    pub samples: usize,
}

impl LaserCase {
    pub fn paper_scale() -> Self {
        LaserCase { h: 0.001, ..LaserCase::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.tau_p, self.depth, self.h, self.t_end, self.length];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("laser case needs positive tau_p, depth, h, t_end and length".into()));
        }
        if self.spatial_sign != 1.0 && self.spatial_sign != -1.0 {
            return Err(Error::Config(format!("spatial sign must be +1 or -1, got {}", self.spatial_sign)));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Config("laser amplitude must be finite".into()));
        }
        Ok(())
    }

    /// True when the mesh resolves the pulse depth.
    pub fn resolves_pulse(&self) -> bool {
        self.h < self.depth
    }

    pub fn source(&self, xi: f64, tau: f64) -> f64 {
        let e = self.spatial_sign * (xi / self.depth).powi(2) - (tau / self.tau_p).powi(2);
        self.amplitude / (self.depth * self.tau_p) * e.exp()
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        DimensionlessParams::new(self.eps1, self.eps2, self.k)?.coefficients()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let n = (self.length / self.h).round() as usize;
        if n == 0 || ((n as f64) * self.h - self.length).abs() > 1e-9 * self.length {
            return Err(Error::Config(format!("mesh size {} does not divide the bar length {}", self.h, self.length)));
        }
        build_interval_mesh(self.length, n)
    }

    pub fn loads(&self) -> LoadSpec {
        let c = *self;
        LoadSpec { heat_supply: Some(Arc::new(move |x, t| c.source(x[0], t))), ..LoadSpec::none() }
    }

    pub fn run(&self, scheme: Scheme, settings: &SolverSettings) -> Result<LaserRun> {
        self.validate()?;
        let mesh = self.mesh()?;
        let p = self.coefficients()?;
        let grid = TimeGrid::with_step(0.0, self.t_end, self.h)?;
        let mut times = Vec::new();
        let mut theta = Vec::new();
        let traj = run_with(
            &mesh,
            &p,
            &self.loads(),
            &StateVector::zeros(1, mesh.n_nodes(), 0.0),
            scheme,
            &grid,
            settings,
            |s, _| {
                times.push(s.time);
                theta.push(s.theta.clone());
            },
        )?
        .into_result()?;
        Ok(LaserRun {
            times,
            xs: mesh.coords().iter().map(|x| x[0]).collect(),
            theta,
            energies: traj.energies,
            records: traj.records,
        })
    }
}

/// Segments where `|theta| >= rel_threshold * max |theta|`.
pub fn extract_fronts(xs: &[f64], theta: &[f64], rel_threshold: f64) -> Vec<FrontSegment> {
    let max = theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Vec::new();
    }
    let thr = rel_threshold * max;
    let mut out = Vec::new();
    let mut i = 0;
    while i < theta.len() {
        if theta[i].abs() < thr {
            i += 1;
            continue;
        }
        let start = i;
        let mut peak = start;
        while i < theta.len() && theta[i].abs() >= thr {
            if theta[i].abs() > theta[peak].abs() {
                peak = i;
            }
            i += 1;
        }
        out.push(FrontSegment { start: xs[start], end: xs[i - 1], peak_x: xs[peak], peak: theta[peak].abs() });
    }
    out
}

fn slope(ts: &[f64], xs: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let mx = xs.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let stx: f64 = ts.iter().zip(xs).map(|(t, x)| (t - mt) * (x - mx)).sum();
    stx / stt
}

impl LaserRun {
    /// Speeds of the leading (rightmost) front and of the dominant
    /// (largest-peak) front, fitted over `window` from the leading edge of
    /// each segment. Only time levels where the two are distinct segments
    /// count; at least three are needed.
    pub fn front_speeds(&self, rel_threshold: f64, window: (f64, f64)) -> Option<FrontSpeeds> {
        let mut ts = Vec::new();
        let mut fast = Vec::new();
        let mut slow = Vec::new();
        for (t, th) in self.times.iter().zip(&self.theta) {
            if *t < window.0 || *t > window.1 {
                continue;
            }
            let segs = extract_fronts(&self.xs, th, rel_threshold);
            if segs.len() < 2 {
                continue;
            }
            let lead = segs[segs.len() - 1];
            let dom = segs.iter().copied().fold(segs[0], |a, b| if b.peak > a.peak { b } else { a });
            if lead == dom {
                continue;
            }
            ts.push(*t);
            fast.push(lead.end);
            slow.push(dom.end);
        }
        if ts.len() < 3 {
            return None;
        }
        Some(FrontSpeeds { fast: slope(&ts, &fast), slow: slope(&ts, &slow), samples: ts.len() })
    }

    /// Relative variation `(max - min) / max` of the energy after `t_from`.
    pub fn energy_variation_after(&self, t_from: f64) -> Option<f64> {
        let e: Vec<f64> = self.energies.iter().filter(|r| r.time >= t_from).map(|r| r.h1_energy).collect();
        let max = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
        (!e.is_empty() && max > 0.0).then(|| (max - min) / max)
    }
}

/// Plate with a centred initial temperature pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse2DCase {
    pub amplitude: f64,
    pub width: f64,
    /// Sign of the exponent; `-1` gives a Gaussian.
    pub sign: f64,
    pub dt: f64,
    pub n: usize,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub first_sound_speed: f64,
    pub second_sound_speed: f64,
    pub conductivity_ratio: f64,
    pub poisson_ratio: f64,
    pub coupling: f64,
}

impl Default for Pulse2DCase {
    fn default() -> Self {
        Pulse2DCase {
            amplitude: 4.0,
            width: 0.01,
            sign: -1.0,
            dt: 0.01,
            n: 50,
            t_end: 0.4,
            snapshot_times: vec![0.0, 0.2, 0.3, 0.4],
            first_sound_speed: 1.96,
            second_sound_speed: 0.65,
            conductivity_ratio: 100.0,
            poisson_ratio: 0.25,
            coupling: 0.5,
        }
    }
}

/// Snapshots and energies of a plate run.
#[derive(Debug, Clone)]
pub struct Pulse2DRun {
    pub mesh: Mesh,
    pub snapshots: Vec<StateVector>,
    pub energies: Vec<EnergyReport>,
}

impl Pulse2DCase {
    pub fn paper_scale() -> Self {
        Pulse2DCase { n: 100, ..Pulse2DCase::default() }
    }

    /// Unit density, heat capacity and reference temperature; Young's
    /// modulus and `k2` from the two wave speeds.
    pub fn material(&self) -> Result<MaterialParams> {
        let e = self.first_sound_speed.powi(2);
        let nu = self.poisson_ratio;
        if !(self.conductivity_ratio > 0.0) || !(nu > -1.0 && nu < 0.5) {
            return Err(Error::Config("plate needs a positive conductivity ratio and Poisson ratio in (-1, 1/2)".into()));
        }
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let bulk = lambda + 2.0 * mu / 3.0;
        let k2 = self.second_sound_speed.powi(2);
        let p = MaterialParams {
            rho: 1.0,
            c: 1.0,
            theta0: 1.0,
            lambda,
            mu,
            omega: self.coupling / (3.0 * bulk),
            k2,
            k3: k2 / self.conductivity_ratio,
            s0: 0.0,
            dim: 2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn initial_temperature(&self, x: [f64; 2]) -> f64 {
        self.amplitude * (self.sign * (x[0] * x[0] + x[1] * x[1]) / self.width).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.width > 0.0) || !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::Config("plate needs n > 0 and positive width, dt and t_end".into()));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::Config(format!("pulse sign must be +1 or -1, got {}", self.sign)));
        }
        for &t in &self.snapshot_times {
            let k = (t / self.dt).round();
            if t < 0.0 || t > self.t_end + 1e-12 || (k * self.dt - t).abs() > 1e-9 {
                return Err(Error::Config(format!("snapshot time {t} is not a time level of the run")));
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_quad_mesh([-1.0, 1.0], [-1.0, 1.0], self.n, self.n)
    }

    pub fn initial_state(&self, mesh: &Mesh) -> StateVector {
        let mut s = StateVector::zeros(2, mesh.n_nodes(), 0.0);
        for (i, x) in mesh.coords().iter().enumerate() {
            if !mesh.on_temperature_boundary(i) {
                s.theta[i] = self.initial_temperature(*x);
            }
        }
        s
    }

    /// Runs up to the last snapshot time (or `t_end` if later).
    pub fn run(&self, scheme: Scheme, settings: &SolverSettings) -> Result<Pulse2DRun> {
        self.validate()?;
        let mesh = self.mesh()?;
        let p = self.material()?.coefficients()?;
        let t_end = self.snapshot_times.iter().cloned().fold(self.t_end, f64::max);
        let grid = TimeGrid::with_step(0.0, t_end, self.dt)?;
        let want = |t: f64| self.snapshot_times.iter().any(|s| (s - t).abs() < 1e-9);
        let mut snapshots = Vec::new();
        let traj = run_with(&mesh, &p, &LoadSpec::none(), &self.initial_state(&mesh), scheme, &grid, settings, |s, _| {
            if want(s.time) {
                snapshots.push(s.clone());
            }
        })?
        .into_result()?;
        Ok(Pulse2DRun { mesh, snapshots, energies: traj.energies })
    }
}

/// Largest change of a nodal scalar on an `n x n` square grid under a 90
/// degree rotation, relative to its maximum magnitude.
pub fn rotation_defect(mesh: &Mesh, values: &[f64]) -> Result<f64> {
    let [nx, ny] = mesh.cells();
    if mesh.dim() != 2 || nx != ny || values.len() != mesh.n_nodes() {
        return Err(Error::arg("rotation defect needs a square 2D grid and one value per node"));
    }
    let m = nx + 1;
    let max = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0_f64;
    for j in 0..m {
        for i in 0..m {
            // (x, y) -> (-y, x)
            let r = i * m + (nx - j);
            worst = worst.max((values[j * m + i] - values[r]).abs());
        }
    }
    Ok(worst / max)
}
