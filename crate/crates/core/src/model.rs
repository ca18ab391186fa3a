//! Constitutive relations and parameter sets for Green-Naghdi (type I/II/III)
//! thermoelasticity under small strains and isotropy.
//!
//! Two parameter views exist. [`MaterialParams`] holds the physical constants
//! and validates them. [`Coefficients`] is the solver-facing set that the
//! assemblers consume; it is built either from physical parameters or from the
//! dimensionless 1D triple `(eps1, eps2, k)` in [`DimensionlessParams`].
//!
//! The temperature equation used throughout is
//! `rho c dtheta/dt = div(k2 grad alpha + k3 grad Theta) - Theta0 m:eps(v) + rho r`,
//! with entropy `rho eta = (rho c / Theta0) theta + m:eps + S0`. Every derived
//! quantity below (adiabatic stiffness, intermediate temperature, energy
//! weights) is consistent with that pair for any density.

use crate::error::{Error, Result};

/// Energy scaling convention used by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    /// Physical units: energies carry the factor 1/2.
    Dimensional,
    /// Scaled units: energies are reported without the factor 1/2, matching
    /// the customary dimensionless H1 energy.
    Dimensionless,
}

impl Units {
    /// Factor applied to `1/2 * integral(...)` to obtain the reported energy.
    pub fn energy_scale(self) -> f64 {
        match self {
            Units::Dimensional => 1.0,
            Units::Dimensionless => 2.0,
        }
    }
}

/// Green-Naghdi constitutive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelType {
    /// Fourier conduction only (no `k2` term).
    TypeI,
    /// Non-dissipative thermal waves (`k3 = 0`).
    TypeII,
    /// General dissipative-hyperbolic combination.
    TypeIII,
}

/// Physical, isotropic material constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub rho: f64,
    /// Heat capacity.
    pub c: f64,
    /// Reference absolute temperature.
    pub theta0: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Thermal expansion coefficient.
    pub omega: f64,
    pub k2: f64,
    pub k3: f64,
    /// Absolute entropy density offset.
    pub s0: f64,
    pub dim: usize,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("c", self.c),
            ("theta0", self.theta0),
            ("k2", self.k2),
            ("mu", self.mu),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.k3 >= 0.0) {
            return Err(Error::Config(format!("k3 must be non-negative, got {}", self.k3)));
        }
        if !(self.bulk_modulus() > 0.0) {
            return Err(Error::Config(
                "lambda + 2 mu / 3 must be positive".to_string(),
            ));
        }
        if !self.omega.is_finite() || !self.s0.is_finite() || !self.lambda.is_finite() {
            return Err(Error::Config("non-finite material constant".to_string()));
        }
        check_dim(self.dim)
    }

    /// `kappa = lambda + 2 mu / 3`.
    pub fn bulk_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu / 3.0
    }

    /// Scalar coupling `m = 3 omega kappa` (the tensor is `m * 1`).
    pub fn coupling(&self) -> f64 {
        3.0 * self.omega * self.bulk_modulus()
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.mu * (3.0 * self.lambda + 2.0 * self.mu) / (self.lambda + self.mu)
    }

    /// Speed of first sound, `sqrt(E / rho)`.
    pub fn first_sound_speed(&self) -> f64 {
        (self.youngs_modulus() / self.rho).sqrt()
    }

    /// Speed of second sound, `sqrt(k2 / (rho c))`.
    pub fn second_sound_speed(&self) -> f64 {
        (self.k2 / (self.rho * self.c)).sqrt()
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        self.validate()?;
        Ok(Coefficients {
            dim: self.dim,
            rho: self.rho,
            c: self.c,
            theta0: self.theta0,
            lambda: self.lambda,
            mu: self.mu,
            m: self.coupling(),
            k2: self.k2,
            k3: self.k3,
            s0: self.s0,
            alpha_rate_offset: self.theta0,
            units: Units::Dimensional,
        })
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Config(format!("spatial dimension must be 1 or 2, got {dim}")))
    }
}

/// Characteristic length, time, displacement and thermal-displacement scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicScales {
    pub x_c: f64,
    pub t_c: f64,
    pub u_c: f64,
    pub alpha_c: f64,
}

const SCALE_RTOL: f64 = 1e-12;

impl CharacteristicScales {
    /// Completes a consistent set from a free length and displacement scale:
    /// `t_c = x_c / v_s` and `alpha_c = u_c rho / (m v_f)`.
    pub fn consistent(p: &MaterialParams, x_c: f64, u_c: f64) -> Result<Self> {
        p.validate()?;
        let m = p.coupling();
        if m == 0.0 {
            return Err(Error::Config(
                "uncoupled material has no thermal displacement scale".to_string(),
            ));
        }
        let scales = CharacteristicScales {
            x_c,
            t_c: x_c / p.second_sound_speed(),
            u_c,
            alpha_c: u_c * p.rho / (m * p.first_sound_speed()),
        };
        scales.check(p)?;
        Ok(scales)
    }

    /// Verifies positivity and the two consistency relations.
    pub fn check(&self, p: &MaterialParams) -> Result<()> {
        for (name, v) in [
            ("x_c", self.x_c),
            ("t_c", self.t_c),
            ("u_c", self.u_c),
            ("alpha_c", self.alpha_c),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("scale {name} must be positive, got {v}")));
            }
        }
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        let vs = p.second_sound_speed();
        if rel(self.x_c / self.t_c, vs) > SCALE_RTOL {
            return Err(Error::Config(format!(
                "x_c / t_c = {} does not match the second sound speed {vs}",
                self.x_c / self.t_c
            )));
        }
        let target = p.coupling() * p.first_sound_speed() / p.rho;
        if rel(self.u_c / self.alpha_c, target) > SCALE_RTOL {
            return Err(Error::Config(format!(
                "u_c / alpha_c = {} does not match m v_f / rho = {target}",
                self.u_c / self.alpha_c
            )));
        }
        Ok(())
    }
}

/// Dimensionless 1D parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    /// Squared ratio of first to second sound speed.
    pub eps1: f64,
    /// Thermomechanical coupling strength.
    pub eps2: f64,
    /// Dimensionless classical conductivity.
    pub k: f64,
}

impl DimensionlessParams {
    pub fn new(eps1: f64, eps2: f64, k: f64) -> Result<Self> {
        let p = DimensionlessParams { eps1, eps2, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps1 > 0.0) || !self.eps1.is_finite() {
            return Err(Error::Config(format!("eps1 must be positive, got {}", self.eps1)));
        }
        if !(self.eps2 >= 0.0) || !self.eps2.is_finite() {
            return Err(Error::Config(format!("eps2 must be non-negative, got {}", self.eps2)));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::Config(format!("k must be non-negative, got {}", self.k)));
        }
        Ok(())
    }

    pub fn model_type(&self) -> ModelType {
        if self.k == 0.0 {
            ModelType::TypeII
        } else {
            ModelType::TypeIII
        }
    }

    /// Solver coefficients reproducing
    ///
    /// ```text
    /// u_t = v,  v_t = (eps1 u_x - theta)_x + b,
    /// alpha_t = theta,  theta_t = (alpha_x + k theta_x)_x - eps2 v_x + s
    /// ```
    ///
    /// with `rho = c = k2 = m = 1`, `k3 = k` and the coupling temperature set
    /// to `eps2`. The thermal displacement is measured relative to the
    /// reference state, so `alpha_t = theta` carries no offset.
    pub fn coefficients(&self) -> Result<Coefficients> {
        self.validate()?;
        Ok(Coefficients {
            dim: 1,
            rho: 1.0,
            c: 1.0,
            theta0: self.eps2,
            lambda: 0.0,
            mu: 0.5 * self.eps1,
            m: 1.0,
            k2: 1.0,
            k3: self.k,
            s0: 0.0,
            alpha_rate_offset: 0.0,
            units: Units::Dimensionless,
        })
    }
}

/// Converts physical parameters to the 1D dimensionless triple.
///
/// `eps1 = (v_f / v_s)^2`, `eps2 = Theta0 m^2 E / (rho c)`, `k = k3 / sqrt(rho c)`;
/// `m` is the scalar 1D coupling coefficient. The scales are re-checked.
pub fn nondimensionalize(
    p: &MaterialParams,
    scales: &CharacteristicScales,
) -> Result<DimensionlessParams> {
    p.validate()?;
    scales.check(p)?;
    let ratio = p.first_sound_speed() / p.second_sound_speed();
    let m = p.coupling();
    let rho_c = p.rho * p.c;
    DimensionlessParams::new(
        ratio * ratio,
        p.theta0 * m * m * p.youngs_modulus() / rho_c,
        p.k3 / rho_c.sqrt(),
    )
}

/// Solver-facing coefficient set.
///
/// `theta0` is the temperature that multiplies the coupling in the heat
/// equation and in the energy weights; `alpha_rate_offset` is the constant
/// added in `d alpha / dt = theta + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub dim: usize,
    pub rho: f64,
    pub c: f64,
    pub theta0: f64,
    pub lambda: f64,
    pub mu: f64,
    pub m: f64,
    pub k2: f64,
    pub k3: f64,
    pub s0: f64,
    pub alpha_rate_offset: f64,
    pub units: Units,
}

impl Coefficients {
    pub fn model_type(&self) -> ModelType {
        if self.k2 == 0.0 {
            ModelType::TypeI
        } else if self.k3 == 0.0 {
            ModelType::TypeII
        } else {
            ModelType::TypeIII
        }
    }

    /// `Theta0 / (rho c)`, the temperature change per unit volumetric strain
    /// (times `m`) at frozen entropy.
    pub fn adiabatic_factor(&self) -> f64 {
        self.theta0 / (self.rho * self.c)
    }

    /// Number of independent strain components in Voigt storage.
    pub fn voigt_size(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            3
        }
    }

    /// Energy weight on `|grad alpha|^2`.
    pub fn alpha_energy_weight(&self) -> Result<f64> {
        self.require_theta0()?;
        Ok(self.k2 / self.theta0)
    }

    /// Energy weight on `theta^2`.
    pub fn theta_energy_weight(&self) -> Result<f64> {
        self.require_theta0()?;
        Ok(self.rho * self.c / self.theta0)
    }

    fn require_theta0(&self) -> Result<()> {
        if self.theta0 > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(
                "thermal energy weights need a positive coupling temperature (eps2 > 0)"
                    .to_string(),
            ))
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        for (name, v) in [("rho", self.rho), ("c", self.c)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.theta0 < 0.0 || self.k2 < 0.0 || self.k3 < 0.0 {
            return Err(Error::Config(
                "theta0, k2 and k3 must be non-negative".to_string(),
            ));
        }
        if self.k2 == 0.0 && self.k3 == 0.0 {
            return Err(Error::Config("at least one of k2, k3 must be positive".to_string()));
        }
        if !(elasticity(self).min_diagonal() > 0.0) {
            return Err(Error::Config("elasticity tensor is not positive".to_string()));
        }
        Ok(())
    }
}

/// Symmetric second-order tensor in 1D or 2D (tensor components, not
/// engineering shear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    pub dim: usize,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        SymTensor { dim, xx: 0.0, yy: 0.0, xy: 0.0 }
    }

    pub fn scalar(xx: f64) -> Self {
        SymTensor { dim: 1, xx, yy: 0.0, xy: 0.0 }
    }

    pub fn plane(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor { dim: 2, xx, yy, xy }
    }

    pub fn identity(dim: usize) -> Self {
        match dim {
            1 => SymTensor::scalar(1.0),
            _ => SymTensor::plane(1.0, 1.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.xx
        } else {
            self.xx + self.yy
        }
    }

    /// Full contraction `a : b`.
    pub fn contract(&self, other: &SymTensor) -> f64 {
        if self.dim == 1 {
            self.xx * other.xx
        } else {
            self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
        }
    }

    /// Voigt vector with engineering shear `[xx, yy, 2 xy]`.
    pub fn voigt(&self) -> [f64; 3] {
        [self.xx, self.yy, 2.0 * self.xy]
    }
}

/// Fourth-order tensor in Voigt storage (`1x1` in 1D, `3x3` in plane strain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voigt {
    pub size: usize,
    pub data: [[f64; 3]; 3],
}

impl Voigt {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..self.size).all(|j| self.data[i][j] == self.data[j][i]))
    }

    fn min_diagonal(&self) -> f64 {
        (0..self.size).map(|i| self.data[i][i]).fold(f64::INFINITY, f64::min)
    }

    /// Applies the tensor to a strain, returning a stress.
    pub fn apply(&self, strain: &SymTensor) -> SymTensor {
        if self.size == 1 {
            return SymTensor::scalar(self.data[0][0] * strain.xx);
        }
        let e = strain.voigt();
        let mut s = [0.0; 3];
        for (i, si) in s.iter_mut().enumerate() {
            *si = (0..3).map(|j| self.data[i][j] * e[j]).sum();
        }
        SymTensor::plane(s[0], s[1], s[2])
    }
}

/// Isotropic elasticity `lambda 1 (x) 1 + 2 mu I`; plane strain in 2D and the
/// uniaxial-strain modulus `lambda + 2 mu` in 1D.
pub fn elasticity(p: &Coefficients) -> Voigt {
    let mut data = [[0.0; 3]; 3];
    if p.dim == 1 {
        data[0][0] = p.lambda + 2.0 * p.mu;
        return Voigt { size: 1, data };
    }
    data[0][0] = p.lambda + 2.0 * p.mu;
    data[1][1] = p.lambda + 2.0 * p.mu;
    data[0][1] = p.lambda;
    data[1][0] = p.lambda;
    data[2][2] = p.mu;
    Voigt { size: 3, data }
}

/// Adiabatic elasticity `C + (Theta0 / (rho c)) m (x) m`.
pub fn adiabatic_stiffness(p: &Coefficients) -> Voigt {
    let mut c = elasticity(p);
    let update = p.adiabatic_factor() * p.m * p.m;
    let normal = if p.dim == 1 { 1 } else { 2 };
    for i in 0..normal {
        for j in 0..normal {
            c.data[i][j] += update;
        }
    }
    c
}

fn check_tensor(t: &SymTensor, p: &Coefficients) -> Result<()> {
    if t.dim != p.dim {
        return Err(Error::Dimension { expected: p.dim, got: t.dim });
    }
    Ok(())
}

/// Stress `C : eps - m theta 1`.
pub fn stress(strain: &SymTensor, theta: f64, p: &Coefficients) -> Result<SymTensor> {
    check_tensor(strain, p)?;
    let mut s = elasticity(p).apply(strain);
    s.xx -= p.m * theta;
    if p.dim == 2 {
        s.yy -= p.m * theta;
    }
    Ok(s)
}

/// Entropy density `rho eta = (rho c / Theta0) theta + m : eps + S0`.
pub fn entropy_density(strain: &SymTensor, theta: f64, p: &Coefficients) -> Result<f64> {
    check_tensor(strain, p)?;
    if !(p.theta0 > 0.0) {
        return Err(Error::Config("entropy needs a positive reference temperature".to_string()));
    }
    Ok(p.rho * p.c / p.theta0 * theta + p.m * strain.trace() + p.s0)
}

/// Free energy density
/// `rho psi = 1/2 eps:C:eps - theta m:eps - 1/2 (rho c / Theta0) theta^2 - theta S0`.
pub fn free_energy(strain: &SymTensor, theta: f64, p: &Coefficients) -> Result<f64> {
    check_tensor(strain, p)?;
    if !(p.theta0 > 0.0) {
        return Err(Error::Config("free energy needs a positive reference temperature".to_string()));
    }
    let elastic = 0.5 * strain.contract(&elasticity(p).apply(strain));
    Ok(elastic
        - theta * p.m * strain.trace()
        - 0.5 * p.rho * p.c / p.theta0 * theta * theta
        - theta * p.s0)
}

/// Heat flux `q = -(k2 grad alpha + k3 grad Theta)`.
pub fn heat_flux(grad_alpha: &[f64], grad_theta_abs: &[f64], p: &Coefficients) -> Result<Vec<f64>> {
    if grad_alpha.len() != p.dim {
        return Err(Error::Dimension { expected: p.dim, got: grad_alpha.len() });
    }
    if grad_theta_abs.len() != p.dim {
        return Err(Error::Dimension { expected: p.dim, got: grad_theta_abs.len() });
    }
    Ok(grad_alpha
        .iter()
        .zip(grad_theta_abs)
        .map(|(ga, gt)| -(p.k2 * ga + p.k3 * gt))
        .collect())
}

/// Temperature at frozen entropy,
/// `theta_I = theta(t_n^-) - (Theta0 / (rho c)) m : (eps(u(t)) - eps(u(t_n^-)))`,
/// evaluated pointwise.
pub fn intermediate_temperature(
    theta_minus: &[f64],
    strain_now: &[SymTensor],
    strain_minus: &[SymTensor],
    p: &Coefficients,
) -> Result<Vec<f64>> {
    if strain_now.len() != theta_minus.len() || strain_minus.len() != theta_minus.len() {
        return Err(Error::Layout(format!(
            "field lengths differ: theta {}, strain_now {}, strain_minus {}",
            theta_minus.len(),
            strain_now.len(),
            strain_minus.len()
        )));
    }
    let factor = p.adiabatic_factor() * p.m;
    theta_minus
        .iter()
        .zip(strain_now.iter().zip(strain_minus))
        .map(|(&th, (now, before))| {
            check_tensor(now, p)?;
            check_tensor(before, p)?;
            Ok(th - factor * (now.trace() - before.trace()))
        })
        .collect()
}
