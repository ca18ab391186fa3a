//! Run configuration: a TOML file with one optional section per experiment.
//! Every key has a default; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use thermo_tdg::experiments::{LaserCase, ManufacturedCase, Pulse2DCase, SPATIAL_LADDER, TEMPORAL_LADDER};
use thermo_tdg::linalg::{SolverKind, SolverSettings};
use thermo_tdg::model::DimensionlessParams;
use thermo_tdg::stepper::Scheme;
use thermo_tdg::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Manufactured,
    Laser,
    Pulse2d,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Manufactured => "manufactured",
            Experiment::Laser => "laser",
            Experiment::Pulse2d => "pulse2d",
            Experiment::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand when given.
    pub experiment: Option<Experiment>,
    pub solver: SolverConfig,
    pub manufactured: ManufacturedConfig,
    pub laser: LaserConfig,
    pub pulse2d: Pulse2DConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// "direct" or "gmres".
    pub kind: String,
    pub tol: f64,
    pub restart: usize,
    pub max_iter: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { kind: "direct".into(), tol: 1e-10, restart: 50, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub schemes: Vec<String>,
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    pub t_end: f64,
    /// Element counts of the spatial study (dt = h).
    pub spatial_ladder: Vec<usize>,
    /// Steps per unit time of the temporal study.
    pub temporal_ladder: Vec<usize>,
    pub temporal_elements: usize,
}

impl Default for ManufacturedConfig {
    fn default() -> Self {
        let c = ManufacturedCase::default();
        ManufacturedConfig {
            schemes: vec!["monolithic".into(), "lie_trotter".into()],
            eps1: c.eps1,
            eps2: c.eps2,
            k: c.k,
            t_end: c.t_end,
            spatial_ladder: SPATIAL_LADDER.to_vec(),
            temporal_ladder: TEMPORAL_LADDER.to_vec(),
            temporal_elements: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserConfig {
    pub scheme: String,
    pub tau_p: f64,
    pub depth: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    pub h: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub spatial_sign: f64,
    /// Write every `time_stride`-th level and `space_stride`-th node to the
    /// field dump.
    pub time_stride: usize,
    pub space_stride: usize,
    /// Fronts are where `|theta|` exceeds this fraction of the current max.
    pub front_threshold: f64,
    /// Threshold for the speed fit; the fast front is only a few percent
    /// of the peak when k = 0.
    pub speed_threshold: f64,
    pub speed_window: [f64; 2],
}

impl Default for LaserConfig {
    fn default() -> Self {
        let c = LaserCase::default();
        LaserConfig {
            scheme: "lie_trotter".into(),
            tau_p: c.tau_p,
            depth: c.depth,
            eps1: c.eps1,
            eps2: c.eps2,
            k: c.k,
            h: c.h,
            t_end: c.t_end,
            amplitude: c.amplitude,
            spatial_sign: c.spatial_sign,
            time_stride: 1,
            space_stride: 1,
            front_threshold: 0.1,
            speed_threshold: 0.02,
            speed_window: [0.05, 0.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pulse2DConfig {
    pub scheme: String,
    pub amplitude: f64,
    pub width: f64,
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

impl Default for Pulse2DConfig {
    fn default() -> Self {
        let c = Pulse2DCase::default();
        Pulse2DConfig {
            scheme: "lie_trotter".into(),
            amplitude: c.amplitude,
            width: c.width,
            sign: c.sign,
            dt: c.dt,
            n: c.n,
            t_end: c.t_end,
            snapshot_times: c.snapshot_times,
            first_sound_speed: c.first_sound_speed,
            second_sound_speed: c.second_sound_speed,
            conductivity_ratio: c.conductivity_ratio,
            poisson_ratio: c.poisson_ratio,
            coupling: c.coupling,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Switches to the full-resolution meshes.
    pub fn paper_scale(&mut self) {
        self.laser.h = LaserCase::paper_scale().h;
        self.pulse2d.n = Pulse2DCase::paper_scale().n;
    }

    /// SHA-256 of the canonical serialization, with the experiment filled in.
    pub fn hash(&self, experiment: Experiment) -> String {
        let mut c = self.clone();
        c.experiment = Some(experiment);
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks everything the given experiment will read.
    pub fn validate(&self, experiment: Experiment) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(Error::Config(format!("config is for '{}' but '{}' was requested", e.name(), experiment.name())));
            }
        }
        self.solver_settings()?;
        match experiment {
            Experiment::Manufactured | Experiment::Convergence => {
                self.schemes()?;
                self.manufactured_case()?;
                let m = &self.manufactured;
                if m.spatial_ladder.len() < 2 || m.temporal_ladder.len() < 2 {
                    return Err(Error::Config("ladders need at least two levels".into()));
                }
                if m.spatial_ladder.iter().chain(&m.temporal_ladder).any(|&n| n == 0) || m.temporal_elements == 0 {
                    return Err(Error::Config("ladder levels and temporal_elements must be positive".into()));
                }
            }
            Experiment::Laser => {
                self.laser_case()?.validate()?;
                let l = &self.laser;
                if l.time_stride == 0 || l.space_stride == 0 {
                    return Err(Error::Config("strides must be at least 1".into()));
                }
                for (name, v) in [("front_threshold", l.front_threshold), ("speed_threshold", l.speed_threshold)] {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
                    }
                }
                if !(l.speed_window[0] < l.speed_window[1]) {
                    return Err(Error::Config("speed_window must be increasing".into()));
                }
            }
            Experiment::Pulse2d => {
                let c = self.pulse_case()?;
                c.validate()?;
                c.material()?.coefficients()?;
                if self.pulse2d.snapshot_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(Error::Config("snapshot times must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn solver_settings(&self) -> Result<SolverSettings> {
        let s = &self.solver;
        let kind = match s.kind.as_str() {
            "direct" => SolverKind::Direct,
            "gmres" if s.restart > 0 => SolverKind::Gmres { restart: s.restart },
            "gmres" => return Err(Error::Config("gmres restart must be positive".into())),
            other => return Err(Error::Config(format!("unknown solver kind '{other}' (expected direct or gmres)"))),
        };
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(Error::Config(format!("solver tol must lie in (0, 1), got {}", s.tol)));
        }
        Ok(SolverSettings { kind, tol: s.tol, max_iter: s.max_iter })
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        if self.manufactured.schemes.is_empty() {
            return Err(Error::Config("manufactured.schemes is empty".into()));
        }
        self.manufactured.schemes.iter().map(|s| s.parse()).collect()
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase> {
        let m = &self.manufactured;
        DimensionlessParams::new(m.eps1, m.eps2, m.k)?;
        if !(m.t_end > 0.0 && m.t_end.is_finite()) {
            return Err(Error::Config("manufactured.t_end must be positive".into()));
        }
        Ok(ManufacturedCase { eps1: m.eps1, eps2: m.eps2, k: m.k, t_end: m.t_end, ..ManufacturedCase::default() })
    }

    pub fn laser_scheme(&self) -> Result<Scheme> {
        self.laser.scheme.parse()
    }

    pub fn laser_case(&self) -> Result<LaserCase> {
        self.laser_scheme()?;
        let l = &self.laser;
        DimensionlessParams::new(l.eps1, l.eps2, l.k)?;
        Ok(LaserCase {
            tau_p: l.tau_p,
            depth: l.depth,
            eps1: l.eps1,
            eps2: l.eps2,
            k: l.k,
            h: l.h,
            t_end: l.t_end,
            length: 1.0,
            amplitude: l.amplitude,
            spatial_sign: l.spatial_sign,
        })
    }

    pub fn pulse_scheme(&self) -> Result<Scheme> {
        self.pulse2d.scheme.parse()
    }

    pub fn pulse_case(&self) -> Result<Pulse2DCase> {
        self.pulse_scheme()?;
        let p = &self.pulse2d;
        Ok(Pulse2DCase {
            amplitude: p.amplitude,
            width: p.width,
            sign: p.sign,
            dt: p.dt,
            n: p.n,
            t_end: p.t_end,
            snapshot_times: p.snapshot_times.clone(),
            first_sound_speed: p.first_sound_speed,
            second_sound_speed: p.second_sound_speed,
            conductivity_ratio: p.conductivity_ratio,
            poisson_ratio: p.poisson_ratio,
            coupling: p.coupling,
        })
    }
}
