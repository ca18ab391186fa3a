//! Energies, error norms, jump dissipation and convergence orders.
//!
//! All integrals use the assembly quadrature, so the discrete energy
//! balances hold to rounding. Energies follow the convention of
//! [`Units`](crate::model::Units): `1/2 int(...)` in physical units and
//! `int(...)` in scaled units.

use crate::assembly::{element_data, interpolate, space_rule, strain_trace, SlabSolution, StateVector};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, QuadPoint, QuadratureRule};
use crate::model::{adiabatic_stiffness, elasticity, Coefficients, SymTensor, Voigt};
use crate::output::fmt_num;

/// One row of the energy series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub time: f64,
    pub h1_energy: f64,
    /// Squared L2 norm over all four fields.
    pub l2_norm: f64,
    pub mech_energy: f64,
    /// Energy removed by the temporal jumps of the slab ending at `time`.
    pub jump_dissipation: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,h1_energy,l2_norm,mech_energy,jump_dissipation";

    pub fn csv_row(&self) -> String {
        [self.time, self.h1_energy, self.l2_norm, self.mech_energy, self.jump_dissipation]
            .iter()
            .map(|&x| fmt_num(x))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Field values and gradients at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointSample {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub alpha: f64,
    pub theta: f64,
    /// `grad_u[i][j] = d u_i / d x_j`
    pub grad_u: [[f64; 2]; 2],
    pub grad_alpha: [f64; 2],
    pub grad_theta: [f64; 2],
}

/// A closed-form solution to compare against.
pub trait ExactSolution {
    fn sample(&self, x: [f64; 2], t: f64) -> PointSample;
}

impl<F: Fn([f64; 2], f64) -> PointSample> ExactSolution for F {
    fn sample(&self, x: [f64; 2], t: f64) -> PointSample {
        self(x, t)
    }
}

pub(crate) fn sample_state(state: &StateVector, nodes: &[usize], q: &QuadPoint) -> PointSample {
    let dim = state.dim;
    let mut s = PointSample::default();
    for (a, &node) in nodes.iter().enumerate() {
        let nv = q.shape.values[a];
        let g = q.shape.grads[a];
        for i in 0..dim {
            s.u[i] += nv * state.u[node * dim + i];
            s.v[i] += nv * state.v[node * dim + i];
            for j in 0..dim {
                s.grad_u[i][j] += g[j] * state.u[node * dim + i];
            }
            s.grad_alpha[i] += g[i] * state.alpha[node];
            s.grad_theta[i] += g[i] * state.theta[node];
        }
        s.alpha += nv * state.alpha[node];
        s.theta += nv * state.theta[node];
    }
    s
}

fn strain_of(s: &PointSample, dim: usize) -> SymTensor {
    if dim == 1 {
        SymTensor::scalar(s.grad_u[0][0])
    } else {
        SymTensor::plane(s.grad_u[0][0], s.grad_u[1][1], 0.5 * (s.grad_u[0][1] + s.grad_u[1][0]))
    }
}

fn dot(a: [f64; 2], b: [f64; 2], dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

fn elastic(c: &Voigt, s: &PointSample, dim: usize) -> f64 {
    let e = strain_of(s, dim);
    e.contract(&c.apply(&e))
}

/// Energy density (before the `1/2` and unit scaling) of a sample.
fn energy_density(s: &PointSample, p: &Coefficients, c: &Voigt, wa: f64, wt: f64) -> f64 {
    let d = p.dim;
    elastic(c, s, d) + p.rho * dot(s.v, s.v, d) + wa * dot(s.grad_alpha, s.grad_alpha, d) + wt * s.theta * s.theta
}

fn check_state(mesh: &Mesh, state: &StateVector, p: &Coefficients) -> Result<()> {
    if p.dim != mesh.dim() {
        return Err(Error::Dimension { expected: mesh.dim(), got: p.dim });
    }
    state.check(mesh)
}

/// Total energy
/// `int [eps:C:eps + rho |v|^2 + (k2/Theta0) |grad alpha|^2 + (rho c/Theta0) theta^2]`,
/// times `1/2` in physical units. Fails when the coupling temperature is zero.
pub fn energy_norm(mesh: &Mesh, state: &StateVector, p: &Coefficients) -> Result<f64> {
    check_state(mesh, state, p)?;
    let wa = p.alpha_energy_weight()?;
    let wt = p.theta_energy_weight()?;
    let c = elasticity(p);
    let rule = space_rule(mesh)?;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            total += q.weight * energy_density(&sample_state(state, &ed.nodes, q), p, &c, wa, wt);
        }
    }
    Ok(0.5 * p.units.energy_scale() * total)
}

/// `int |grad alpha|^2`, reported separately so that type I runs (no
/// `k2` term in the energy) can also be read with a unit weight.
pub fn alpha_gradient_norm(mesh: &Mesh, state: &StateVector) -> Result<f64> {
    state.check(mesh)?;
    let rule = space_rule(mesh)?;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let s = sample_state(state, &ed.nodes, q);
            total += q.weight * dot(s.grad_alpha, s.grad_alpha, mesh.dim());
        }
    }
    Ok(total)
}

/// Squared L2 norm `int (|u|^2 + |v|^2 + alpha^2 + theta^2)`.
pub fn l2_norm(mesh: &Mesh, state: &StateVector) -> Result<f64> {
    state.check(mesh)?;
    let rule = space_rule(mesh)?;
    let d = mesh.dim();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let s = sample_state(state, &ed.nodes, q);
            total += q.weight * (dot(s.u, s.u, d) + dot(s.v, s.v, d) + s.alpha * s.alpha + s.theta * s.theta);
        }
    }
    Ok(total)
}

/// Mechanical energy `int [eps:C_ad:eps + rho |v|^2]` (scaled as above), the
/// quantity conserved by the mechanical phase when the frozen stress is zero.
pub fn mech_energy(mesh: &Mesh, state: &StateVector, p: &Coefficients) -> Result<f64> {
    check_state(mesh, state, p)?;
    let c = adiabatic_stiffness(p);
    let rule = space_rule(mesh)?;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            total += q.weight * energy_density(&sample_state(state, &ed.nodes, q), p, &c, 0.0, 0.0);
        }
    }
    Ok(0.5 * p.units.energy_scale() * total)
}

/// Total energy with the temperature replaced, at every quadrature point,
/// by the frozen-entropy value
/// `theta_I = theta_ref - (Theta0/(rho c)) m (tr eps(u) - tr eps(u_ref))`.
/// This is the functional the mechanical phase conserves.
pub fn adiabatic_energy(
    mesh: &Mesh,
    state: &StateVector,
    theta_ref: &[f64],
    u_ref: &[f64],
    p: &Coefficients,
) -> Result<f64> {
    check_state(mesh, state, p)?;
    if theta_ref.len() != state.theta.len() || u_ref.len() != state.u.len() {
        return Err(Error::Layout("reference fields do not match the state".into()));
    }
    let wa = p.alpha_energy_weight()?;
    let wt = p.theta_energy_weight()?;
    let c = elasticity(p);
    let f = p.adiabatic_factor() * p.m;
    let rule = space_rule(mesh)?;
    let d = mesh.dim();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let mut s = sample_state(state, &ed.nodes, q);
            s.theta = interpolate(theta_ref, &ed.nodes, q)
                - f * (strain_trace(&state.u, &ed.nodes, q, d) - strain_trace(u_ref, &ed.nodes, q, d));
            total += q.weight * energy_density(&s, p, &c, wa, wt);
        }
    }
    Ok(0.5 * p.units.energy_scale() * total)
}

fn jump_state(slab: &SlabSolution, prev: &StateVector) -> Result<StateVector> {
    if slab.start.n_nodes() != prev.n_nodes() || slab.start.dim != prev.dim {
        return Err(Error::Layout("slab and previous trace live on different layouts".into()));
    }
    slab.start.combine(1.0, prev, -1.0)
}

/// Energy of the jump `[chi]_n = chi(t_n^+) - chi(t_n^-)` in the metric of
/// [`energy_norm`].
pub fn jump_dissipation(mesh: &Mesh, slab: &SlabSolution, prev: &StateVector, p: &Coefficients) -> Result<f64> {
    let jump = jump_state(slab, prev)?;
    energy_norm(mesh, &jump, p)
}

/// Jump energy of a mechanical phase slab: displacement jump in the
/// adiabatic stiffness plus the kinetic part.
pub fn mechanical_jump_dissipation(
    mesh: &Mesh,
    slab: &SlabSolution,
    prev: &StateVector,
    p: &Coefficients,
) -> Result<f64> {
    let jump = jump_state(slab, prev)?;
    mech_energy(mesh, &jump, p)
}

/// Jump energy of a thermal phase slab. The temperature jump is measured
/// against the frozen-entropy temperature at the configuration `u_end`.
pub fn thermal_jump_dissipation(
    mesh: &Mesh,
    slab: &SlabSolution,
    prev: &StateVector,
    u_end: &[f64],
    p: &Coefficients,
) -> Result<f64> {
    check_state(mesh, prev, p)?;
    if u_end.len() != prev.u.len() {
        return Err(Error::Layout("u_end does not match the state".into()));
    }
    let wa = p.alpha_energy_weight()?;
    let wt = p.theta_energy_weight()?;
    let f = p.adiabatic_factor() * p.m;
    let rule = space_rule(mesh)?;
    let d = mesh.dim();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let plus = sample_state(&slab.start, &ed.nodes, q);
            let minus = sample_state(prev, &ed.nodes, q);
            let theta_i = minus.theta - f * (strain_trace(u_end, &ed.nodes, q, d) - strain_trace(&prev.u, &ed.nodes, q, d));
            let ga = [plus.grad_alpha[0] - minus.grad_alpha[0], plus.grad_alpha[1] - minus.grad_alpha[1]];
            let dt = plus.theta - theta_i;
            total += q.weight * (wa * dot(ga, ga, d) + wt * dt * dt);
        }
    }
    Ok(0.5 * p.units.energy_scale() * total)
}

/// Energy removed by classical conduction over a slab,
/// `int_I int (k3/Theta0) |grad theta|^2` (scaled as the energies).
pub fn conduction_dissipation(mesh: &Mesh, slab: &SlabSolution, p: &Coefficients) -> Result<f64> {
    if p.k3 == 0.0 {
        return Ok(0.0);
    }
    if !(p.theta0 > 0.0) {
        return Err(Error::Config("conduction dissipation needs a positive coupling temperature".into()));
    }
    let rule = space_rule(mesh)?;
    let d = mesh.dim();
    let dt = slab.t_end - slab.t_start;
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let g0 = sample_state(&slab.start, &ed.nodes, q).grad_theta;
            let g1 = sample_state(&slab.end, &ed.nodes, q).grad_theta;
            // exact time integral of a linear-in-time gradient squared
            let it = dt / 3.0 * (dot(g0, g0, d) + dot(g0, g1, d) + dot(g1, g1, d));
            total += q.weight * it;
        }
    }
    Ok(p.units.energy_scale() * p.k3 / p.theta0 * total)
}

/// Finite element errors against an exact solution at `state.time`:
/// `(h1_error, l2_error)`, both as square roots. The H1 error uses the
/// [`energy_norm`] metric, the L2 error the unweighted sum over fields.
pub fn error_vs_exact<E: ExactSolution + ?Sized>(
    mesh: &Mesh,
    state: &StateVector,
    exact: &E,
    p: &Coefficients,
) -> Result<(f64, f64)> {
    check_state(mesh, state, p)?;
    let wa = p.alpha_energy_weight()?;
    let wt = p.theta_energy_weight()?;
    let c = elasticity(p);
    let rule = QuadratureRule::gauss(mesh.dim(), 5)?;
    let d = mesh.dim();
    let mut h1 = 0.0;
    let mut l2 = 0.0;
    for e in 0..mesh.n_elements() {
        let nodes = mesh.element(e).to_vec();
        for q in mesh.quad_points(e, &rule)? {
            let s = sample_state(state, &nodes, &q);
            let x = exact.sample(q.x, state.time);
            let mut diff = PointSample::default();
            for i in 0..2 {
                diff.u[i] = s.u[i] - x.u[i];
                diff.v[i] = s.v[i] - x.v[i];
                diff.grad_alpha[i] = s.grad_alpha[i] - x.grad_alpha[i];
                for j in 0..2 {
                    diff.grad_u[i][j] = s.grad_u[i][j] - x.grad_u[i][j];
                }
            }
            diff.alpha = s.alpha - x.alpha;
            diff.theta = s.theta - x.theta;
            h1 += q.weight * energy_density(&diff, p, &c, wa, wt);
            l2 += q.weight * (dot(diff.u, diff.u, d) + dot(diff.v, diff.v, d) + diff.alpha.powi(2) + diff.theta.powi(2));
        }
    }
    Ok(((0.5 * p.units.energy_scale() * h1).sqrt(), l2.sqrt()))
}

/// Finite element fields at an arbitrary point of the mesh.
pub fn sample_at(mesh: &Mesh, state: &StateVector, x: [f64; 2]) -> Result<PointSample> {
    state.check(mesh)?;
    let [nx, ny] = mesh.cells();
    let coords = mesh.coords();
    let first = coords[0];
    let last = coords[coords.len() - 1];
    let locate = |v: f64, lo: f64, hi: f64, n: usize| -> Result<(usize, f64)> {
        let tol = 1e-12 * (hi - lo);
        if v < lo - tol || v > hi + tol {
            return Err(Error::arg(format!("point coordinate {v} outside [{lo}, {hi}]")));
        }
        let h = (hi - lo) / n as f64;
        let i = (((v - lo) / h).floor() as usize).min(n - 1);
        let local = 2.0 * (v - lo - i as f64 * h) / h - 1.0;
        Ok((i, local.clamp(-1.0, 1.0)))
    };
    let (i, xi) = locate(x[0], first[0], last[0], nx)?;
    let (e, reference) = if mesh.dim() == 1 {
        (i, [xi, 0.0])
    } else {
        let (j, eta) = locate(x[1], first[1], last[1], ny)?;
        (j * nx + i, [xi, eta])
    };
    let shape = mesh.shape_eval(e, reference)?;
    let q = QuadPoint { x, weight: 0.0, shape };
    Ok(sample_state(state, mesh.element(e), &q))
}

/// Pointwise Euclidean error over `(u, v, alpha, theta)` at `x`.
pub fn point_error<E: ExactSolution + ?Sized>(mesh: &Mesh, state: &StateVector, exact: &E, x: [f64; 2]) -> Result<f64> {
    let s = sample_at(mesh, state, x)?;
    let e = exact.sample(x, state.time);
    let d = mesh.dim();
    let mut sum = (s.alpha - e.alpha).powi(2) + (s.theta - e.theta).powi(2);
    for i in 0..d {
        sum += (s.u[i] - e.u[i]).powi(2) + (s.v[i] - e.v[i]).powi(2);
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn estimate_order(errors: &[f64], hs: &[f64]) -> Result<f64> {
    if errors.len() != hs.len() {
        return Err(Error::Dimension { expected: hs.len(), got: errors.len() });
    }
    if errors.len() < 2 {
        return Err(Error::arg("order estimate needs at least two points"));
    }
    if errors.iter().chain(hs).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::arg("order estimate needs positive finite errors and step sizes"));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("order estimate needs distinct step sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
