use std::fmt;
use std::sync::Arc;

/// Scalar field of `(x, t)`.
pub type ScalarField = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
/// Vector field of `(x, t)`; the second component is ignored in 1D.
pub type VectorField = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

/// External data for a run. Absent entries are zero.
///
/// Body force and heat supply are per unit volume (they already include
/// the density). Traction applies on the sides outside the displacement
/// boundary, the normal heat flux `q . n` on the sides outside the
/// temperature boundary.
#[derive(Clone, Default)]
pub struct LoadSpec {
    pub body_force: Option<VectorField>,
    pub heat_supply: Option<ScalarField>,
    pub traction: Option<VectorField>,
    pub heat_flux: Option<ScalarField>,
    pub displacement: Option<VectorField>,
    pub velocity: Option<VectorField>,
    pub temperature: Option<ScalarField>,
}

impl fmt::Debug for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadSpec")
            .field("body_force", &self.body_force.is_some())
            .field("heat_supply", &self.heat_supply.is_some())
            .field("traction", &self.traction.is_some())
            .field("heat_flux", &self.heat_flux.is_some())
            .field("displacement", &self.displacement.is_some())
            .field("velocity", &self.velocity.is_some())
            .field("temperature", &self.temperature.is_some())
            .finish()
    }
}

impl LoadSpec {
    pub fn none() -> Self {
        LoadSpec::default()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.body_force.is_none()
            && self.heat_supply.is_none()
            && self.traction.is_none()
            && self.heat_flux.is_none()
            && self.displacement.is_none()
            && self.velocity.is_none()
            && self.temperature.is_none()
    }
}

pub(crate) fn eval_vec(f: &Option<VectorField>, x: [f64; 2], t: f64) -> [f64; 2] {
    f.as_ref().map_or([0.0; 2], |f| f(x, t))
}

pub(crate) fn eval_scalar(f: &Option<ScalarField>, x: [f64; 2], t: f64) -> f64 {
    f.as_ref().map_or(0.0, |f| f(x, t))
}
