//! Slab bilinear forms and right-hand sides.
//!
//! Every slab unknown is a Q1 spatial function times a linear temporal
//! shape (`1 - s`, `s` on the normalized slab time `s`). Because all
//! coefficients are constant, each matrix block is a spatial element matrix
//! times one of three temporal 2x2 matrices: the derivative pairing
//! `int T_l T_k' ds`, the temporal mass `dt int T_l T_k ds`, and the jump
//! pairing at `t_n^+`.

use crate::error::{Error, Result};
use crate::linalg::{LinearSystem, SparseMatrix};
use crate::mesh::{Field, Mesh, QuadPoint, QuadratureRule, SlabLayout, SPACE_POINTS, TEMPORAL_NODES, TIME_POINTS};
use crate::model::{adiabatic_stiffness, elasticity, Coefficients, Voigt};

use super::loads::{eval_scalar, eval_vec, LoadSpec};
use super::state::StateVector;

const DERIV: [[f64; 2]; 2] = [[-0.5, 0.5], [-0.5, 0.5]];
const JUMP: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 0.0]];

fn deriv_jump(l: usize, k: usize) -> f64 {
    DERIV[l][k] + JUMP[l][k]
}

fn time_mass(dt: f64, l: usize, k: usize) -> f64 {
    dt / 6.0 * if l == k { 2.0 } else { 1.0 }
}

/// Integrals of the temporal shapes over the slab, `dt int T_l ds`.
fn time_weight(dt: f64) -> f64 {
    0.5 * dt
}

pub const MECHANICAL_FIELDS: [Field; 2] = [Field::Displacement, Field::Velocity];
pub const THERMAL_FIELDS: [Field; 2] = [Field::ThermalDisplacement, Field::Temperature];
pub const MONOLITHIC_FIELDS: [Field; 4] =
    [Field::Displacement, Field::Velocity, Field::ThermalDisplacement, Field::Temperature];

pub fn mechanical_layout(mesh: &Mesh, t_start: f64, t_end: f64) -> Result<SlabLayout> {
    SlabLayout::new(mesh, t_start, t_end, &MECHANICAL_FIELDS)
}

pub fn thermal_layout(mesh: &Mesh, t_start: f64, t_end: f64) -> Result<SlabLayout> {
    SlabLayout::new(mesh, t_start, t_end, &THERMAL_FIELDS)
}

pub fn monolithic_layout(mesh: &Mesh, t_start: f64, t_end: f64) -> Result<SlabLayout> {
    SlabLayout::new(mesh, t_start, t_end, &MONOLITHIC_FIELDS)
}

/// Spatial element integrals shared by all forms.
pub(crate) struct ElementData {
    pub nodes: Vec<usize>,
    pub qps: Vec<QuadPoint>,
    /// `int N_a N_b`
    pub mass: [[f64; 4]; 4],
    /// `int grad N_a . grad N_b`
    pub lap: [[f64; 4]; 4],
    /// `int d_i N_a N_b`, indexed `[a][i][b]`
    pub grad_mass: [[[f64; 4]; 2]; 4],
}

pub(crate) fn space_rule(mesh: &Mesh) -> Result<QuadratureRule> {
    QuadratureRule::gauss(mesh.dim(), SPACE_POINTS)
}

pub(crate) fn element_data(mesh: &Mesh, e: usize, rule: &QuadratureRule) -> Result<ElementData> {
    let nodes = mesh.element(e).to_vec();
    let n = nodes.len();
    let dim = mesh.dim();
    let qps = mesh.quad_points(e, rule)?;
    let mut mass = [[0.0; 4]; 4];
    let mut lap = [[0.0; 4]; 4];
    let mut grad_mass = [[[0.0; 4]; 2]; 4];
    for q in &qps {
        let s = &q.shape;
        for a in 0..n {
            for b in 0..n {
                mass[a][b] += q.weight * s.values[a] * s.values[b];
                let g: f64 = (0..dim).map(|i| s.grads[a][i] * s.grads[b][i]).sum();
                lap[a][b] += q.weight * g;
                for i in 0..dim {
                    grad_mass[a][i][b] += q.weight * s.grads[a][i] * s.values[b];
                }
            }
        }
    }
    Ok(ElementData { nodes, qps, mass, lap, grad_mass })
}

/// `int eps(N_a e_i) : D eps(N_b e_j)`, indexed `[a][i][b][j]`.
pub(crate) fn element_stiffness(ed: &ElementData, dim: usize, d: &Voigt) -> [[[[f64; 2]; 4]; 2]; 4] {
    let n = ed.nodes.len();
    let mut k = [[[[0.0; 2]; 4]; 2]; 4];
    for q in &ed.qps {
        let g = &q.shape.grads;
        let strain = |a: usize, i: usize| -> [f64; 3] {
            if dim == 1 {
                [g[a][0], 0.0, 0.0]
            } else if i == 0 {
                [g[a][0], 0.0, g[a][1]]
            } else {
                [0.0, g[a][1], g[a][0]]
            }
        };
        for a in 0..n {
            for i in 0..dim {
                let ba = strain(a, i);
                for b in 0..n {
                    for j in 0..dim {
                        let bb = strain(b, j);
                        let mut acc = 0.0;
                        for p in 0..d.size {
                            for r in 0..d.size {
                                acc += ba[p] * d.data[p][r] * bb[r];
                            }
                        }
                        k[a][i][b][j] += q.weight * acc;
                    }
                }
            }
        }
    }
    k
}

/// Trace of the strain of a nodal displacement field at a quadrature point.
pub(crate) fn strain_trace(u: &[f64], nodes: &[usize], q: &QuadPoint, dim: usize) -> f64 {
    let mut tr = 0.0;
    for (a, &node) in nodes.iter().enumerate() {
        for i in 0..dim {
            tr += u[node * dim + i] * q.shape.grads[a][i];
        }
    }
    tr
}

pub(crate) fn interpolate(values: &[f64], nodes: &[usize], q: &QuadPoint) -> f64 {
    nodes.iter().enumerate().map(|(a, &node)| values[node] * q.shape.values[a]).sum()
}

fn check_inputs(mesh: &Mesh, layout: &SlabLayout, p: &Coefficients, fields: &[Field]) -> Result<()> {
    if p.dim != mesh.dim() {
        return Err(Error::Dimension { expected: mesh.dim(), got: p.dim });
    }
    if layout.fields() != fields {
        return Err(Error::Layout(format!("slab layout has fields {:?}, expected {:?}", layout.fields(), fields)));
    }
    if layout.n_nodes() != mesh.n_nodes() || layout.dim() != mesh.dim() {
        return Err(Error::Layout("slab layout does not match the mesh".into()));
    }
    Ok(())
}

fn check_prev(mesh: &Mesh, layout: &SlabLayout, prev: &StateVector) -> Result<()> {
    prev.check(mesh)?;
    let scale = layout.t_start.abs().max(layout.dt()).max(1.0);
    if (prev.time - layout.t_start).abs() > 1e-9 * scale {
        return Err(Error::arg(format!(
            "incoming trace is tagged t = {} but the slab starts at {}",
            prev.time, layout.t_start
        )));
    }
    Ok(())
}

struct Builder {
    triplets: Vec<(usize, usize, f64)>,
}

impl Builder {
    fn push(&mut self, row: usize, col: usize, v: f64) {
        self.triplets.push((row, col, v));
    }
}

#[allow(clippy::too_many_arguments)]
fn add_mechanics(
    b: &mut Builder,
    layout: &SlabLayout,
    ed: &ElementData,
    stiff: &[[[[f64; 2]; 4]; 2]; 4],
    rho: f64,
    dim: usize,
) {
    let dt = layout.dt();
    let u = Field::Displacement;
    let v = Field::Velocity;
    let n = ed.nodes.len();
    for (a, &na) in ed.nodes.iter().enumerate() {
        for l in 0..TEMPORAL_NODES {
            for i in 0..dim {
                let row_w = layout.index(u, i, na, l);
                let row_phi = layout.index(v, i, na, l);
                for (bb, &nb) in ed.nodes.iter().enumerate().take(n) {
                    let m = ed.mass[a][bb];
                    for k in 0..TEMPORAL_NODES {
                        // (du/dt - v, w) + jump
                        b.push(row_w, layout.index(u, i, nb, k), m * deriv_jump(l, k));
                        b.push(row_w, layout.index(v, i, nb, k), -m * time_mass(dt, l, k));
                        // (rho dv/dt, phi) + jump
                        b.push(row_phi, layout.index(v, i, nb, k), rho * m * deriv_jump(l, k));
                        for j in 0..dim {
                            b.push(row_phi, layout.index(u, j, nb, k), stiff[a][i][bb][j] * time_mass(dt, l, k));
                        }
                    }
                }
            }
        }
    }
}

fn add_thermal(b: &mut Builder, layout: &SlabLayout, ed: &ElementData, p: &Coefficients) {
    let dt = layout.dt();
    let al = Field::ThermalDisplacement;
    let th = Field::Temperature;
    let rc = p.rho * p.c;
    for (a, &na) in ed.nodes.iter().enumerate() {
        for l in 0..TEMPORAL_NODES {
            let row_beta = layout.index(al, 0, na, l);
            let row_sigma = layout.index(th, 0, na, l);
            for (bb, &nb) in ed.nodes.iter().enumerate() {
                let m = ed.mass[a][bb];
                let lap = ed.lap[a][bb];
                for k in 0..TEMPORAL_NODES {
                    let tm = time_mass(dt, l, k);
                    b.push(row_beta, layout.index(al, 0, nb, k), m * deriv_jump(l, k));
                    b.push(row_beta, layout.index(th, 0, nb, k), -m * tm);
                    b.push(row_sigma, layout.index(th, 0, nb, k), rc * m * deriv_jump(l, k) + p.k3 * lap * tm);
                    b.push(row_sigma, layout.index(al, 0, nb, k), p.k2 * lap * tm);
                }
            }
        }
    }
}

fn add_coupling(b: &mut Builder, layout: &SlabLayout, ed: &ElementData, p: &Coefficients, dim: usize) {
    let dt = layout.dt();
    for (a, &na) in ed.nodes.iter().enumerate() {
        for l in 0..TEMPORAL_NODES {
            let row_sigma = layout.index(Field::Temperature, 0, na, l);
            for (bb, &nb) in ed.nodes.iter().enumerate() {
                for k in 0..TEMPORAL_NODES {
                    for i in 0..dim {
                        // -(m theta, div phi)
                        let row_phi = layout.index(Field::Velocity, i, na, l);
                        b.push(
                            row_phi,
                            layout.index(Field::Temperature, 0, nb, k),
                            -p.m * ed.grad_mass[a][i][bb] * time_mass(dt, l, k),
                        );
                        // (Theta0 m tr eps(du/dt), sigma) + entropy jump
                        b.push(
                            row_sigma,
                            layout.index(Field::Displacement, i, nb, k),
                            p.theta0 * p.m * ed.grad_mass[bb][i][a] * deriv_jump(l, k),
                        );
                    }
                }
            }
        }
    }
}

fn finish(layout: &SlabLayout, b: Builder) -> Result<SparseMatrix> {
    let n = layout.n_dofs();
    SparseMatrix::from_triplets(n, n, &b.triplets)
}

/// Mechanical phase matrix: elastodynamics with the adiabatic stiffness.
pub fn mechanical_matrix(mesh: &Mesh, layout: &SlabLayout, p: &Coefficients) -> Result<SparseMatrix> {
    check_inputs(mesh, layout, p, &MECHANICAL_FIELDS)?;
    let rule = space_rule(mesh)?;
    let c_ad = adiabatic_stiffness(p);
    let mut b = Builder { triplets: Vec::new() };
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        let stiff = element_stiffness(&ed, mesh.dim(), &c_ad);
        add_mechanics(&mut b, layout, &ed, &stiff, p.rho, mesh.dim());
    }
    finish(layout, b)
}

pub fn thermal_matrix(mesh: &Mesh, layout: &SlabLayout, p: &Coefficients) -> Result<SparseMatrix> {
    check_inputs(mesh, layout, p, &THERMAL_FIELDS)?;
    let rule = space_rule(mesh)?;
    let mut b = Builder { triplets: Vec::new() };
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        add_thermal(&mut b, layout, &ed, p);
    }
    finish(layout, b)
}

/// Fully coupled matrix: physical stiffness, thermal stress coupling and
/// the temperature equation in entropy form.
pub fn monolithic_matrix(mesh: &Mesh, layout: &SlabLayout, p: &Coefficients) -> Result<SparseMatrix> {
    check_inputs(mesh, layout, p, &MONOLITHIC_FIELDS)?;
    let rule = space_rule(mesh)?;
    let c = elasticity(p);
    let mut b = Builder { triplets: Vec::new() };
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        let stiff = element_stiffness(&ed, mesh.dim(), &c);
        add_mechanics(&mut b, layout, &ed, &stiff, p.rho, mesh.dim());
        add_thermal(&mut b, layout, &ed, p);
        add_coupling(&mut b, layout, &ed, p, mesh.dim());
    }
    finish(layout, b)
}

/// Time points and weights (already multiplied by `dt`) on the slab.
fn time_points(layout: &SlabLayout) -> Result<Vec<(f64, f64, f64)>> {
    let (s, w) = QuadratureRule::unit_interval(TIME_POINTS)?;
    Ok(s.iter().zip(&w).map(|(&s, &w)| (s, layout.t_start + s * layout.dt(), w * layout.dt())).collect())
}

/// Body force, traction, and previous-trace jump data for the momentum
/// pair of equations.
fn mechanics_rhs(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
    rhs: &mut [f64],
    rule: &QuadratureRule,
) -> Result<()> {
    let dim = mesh.dim();
    let times = time_points(layout)?;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, rule)?;
        for (a, &na) in ed.nodes.iter().enumerate() {
            for (bb, &nb) in ed.nodes.iter().enumerate() {
                let m = ed.mass[a][bb];
                for i in 0..dim {
                    rhs[layout.index(Field::Displacement, i, na, 0)] += m * prev.u[nb * dim + i];
                    rhs[layout.index(Field::Velocity, i, na, 0)] += p.rho * m * prev.v[nb * dim + i];
                }
            }
        }
        if loads.body_force.is_some() {
            for q in &ed.qps {
                for &(s, t, wt) in &times {
                    let f = eval_vec(&loads.body_force, q.x, t);
                    for (a, &na) in ed.nodes.iter().enumerate() {
                        let base = q.weight * wt * q.shape.values[a];
                        for i in 0..dim {
                            rhs[layout.index(Field::Velocity, i, na, 0)] += base * (1.0 - s) * f[i];
                            rhs[layout.index(Field::Velocity, i, na, 1)] += base * s * f[i];
                        }
                    }
                }
            }
        }
    }
    if loads.traction.is_some() {
        for_facet_points(mesh, mesh.traction_facets(), |node_weights, x| {
            for &(s, t, wt) in &times {
                let tr = eval_vec(&loads.traction, x, t);
                for &(node, w) in node_weights {
                    for i in 0..dim {
                        rhs[layout.index(Field::Velocity, i, node, 0)] += w * wt * (1.0 - s) * tr[i];
                        rhs[layout.index(Field::Velocity, i, node, 1)] += w * wt * s * tr[i];
                    }
                }
            }
        })?;
    }
    Ok(())
}

/// Visits quadrature points on a set of boundary facets, passing the facet
/// node shape values times the quadrature weight.
fn for_facet_points<'a, I, F>(mesh: &Mesh, facets: I, mut f: F) -> Result<()>
where
    I: Iterator<Item = &'a crate::mesh::Facet>,
    F: FnMut(&[(usize, f64)], [f64; 2]),
{
    let coords = mesh.coords();
    if mesh.dim() == 1 {
        for fc in facets {
            let node = fc.nodes[0];
            f(&[(node, 1.0)], coords[node]);
        }
        return Ok(());
    }
    let (xs, ws) = crate::mesh::gauss_legendre(SPACE_POINTS)?;
    for fc in facets {
        let [p0, p1] = [coords[fc.nodes[0]], coords[fc.nodes[1]]];
        let half_len = 0.5 * ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
        for (&xi, &w) in xs.iter().zip(&ws) {
            let n0 = 0.5 * (1.0 - xi);
            let n1 = 0.5 * (1.0 + xi);
            let x = [n0 * p0[0] + n1 * p1[0], n0 * p0[1] + n1 * p1[1]];
            let jw = w * half_len;
            f(&[(fc.nodes[0], jw * n0), (fc.nodes[1], jw * n1)], x);
        }
    }
    Ok(())
}

/// Heat supply, flux, thermal-displacement offset and previous-trace jump
/// data. `strain_shift` returns the value paired with the `t_n^+` test
/// function at a quadrature point in addition to `rho c theta^-`.
#[allow(clippy::too_many_arguments)]
fn thermal_rhs_common<S>(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
    rhs: &mut [f64],
    rule: &QuadratureRule,
    strain_shift: S,
) -> Result<()>
where
    S: Fn(&ElementData, &QuadPoint) -> f64,
{
    let times = time_points(layout)?;
    let dt = layout.dt();
    let rc = p.rho * p.c;
    let al = Field::ThermalDisplacement;
    let th = Field::Temperature;
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, rule)?;
        for (a, &na) in ed.nodes.iter().enumerate() {
            for (bb, &nb) in ed.nodes.iter().enumerate() {
                let m = ed.mass[a][bb];
                rhs[layout.index(al, 0, na, 0)] += m * prev.alpha[nb];
                rhs[layout.index(th, 0, na, 0)] += rc * m * prev.theta[nb];
            }
        }
        for q in &ed.qps {
            let shift = strain_shift(&ed, q);
            for (a, &na) in ed.nodes.iter().enumerate() {
                let nv = q.shape.values[a];
                rhs[layout.index(th, 0, na, 0)] += q.weight * shift * nv;
                if p.alpha_rate_offset != 0.0 {
                    for l in 0..TEMPORAL_NODES {
                        rhs[layout.index(al, 0, na, l)] += q.weight * nv * p.alpha_rate_offset * time_weight(dt);
                    }
                }
            }
            if loads.heat_supply.is_some() {
                for &(s, t, wt) in &times {
                    let r = eval_scalar(&loads.heat_supply, q.x, t);
                    for (a, &na) in ed.nodes.iter().enumerate() {
                        let base = q.weight * wt * q.shape.values[a] * r;
                        rhs[layout.index(th, 0, na, 0)] += base * (1.0 - s);
                        rhs[layout.index(th, 0, na, 1)] += base * s;
                    }
                }
            }
        }
    }
    if loads.heat_flux.is_some() {
        for_facet_points(mesh, mesh.flux_facets(), |node_weights, x| {
            for &(s, t, wt) in &times {
                let qn = eval_scalar(&loads.heat_flux, x, t);
                for &(node, w) in node_weights {
                    rhs[layout.index(th, 0, node, 0)] -= w * wt * (1.0 - s) * qn;
                    rhs[layout.index(th, 0, node, 1)] -= w * wt * s * qn;
                }
            }
        })?;
    }
    Ok(())
}

/// Right-hand side of the mechanical phase. The incoming temperature and
/// strain enter through the frozen stress `s = m [theta^- + (Theta0/(rho c)) m tr eps(u^-)]`,
/// paired with `div phi`.
pub fn mechanical_rhs(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
) -> Result<Vec<f64>> {
    check_inputs(mesh, layout, p, &MECHANICAL_FIELDS)?;
    check_prev(mesh, layout, prev)?;
    let rule = space_rule(mesh)?;
    let dim = mesh.dim();
    let mut rhs = vec![0.0; layout.n_dofs()];
    mechanics_rhs(mesh, layout, p, prev, loads, &mut rhs, &rule)?;
    let factor = p.adiabatic_factor() * p.m;
    let tw = time_weight(layout.dt());
    for e in 0..mesh.n_elements() {
        let ed = element_data(mesh, e, &rule)?;
        for q in &ed.qps {
            let frozen = p.m * (interpolate(&prev.theta, &ed.nodes, q) + factor * strain_trace(&prev.u, &ed.nodes, q, dim));
            for (a, &na) in ed.nodes.iter().enumerate() {
                for i in 0..dim {
                    let v = q.weight * frozen * q.shape.grads[a][i] * tw;
                    for l in 0..TEMPORAL_NODES {
                        rhs[layout.index(Field::Velocity, i, na, l)] += v;
                    }
                }
            }
        }
    }
    Ok(rhs)
}

/// Right-hand side of the thermal phase with the configuration frozen at
/// `u_end`. The entropy jump adds `Theta0 m tr(eps(u^-) - eps(u_end))`
/// against the `t_n^+` test function.
pub fn thermal_rhs(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    u_end: &[f64],
    loads: &LoadSpec,
) -> Result<Vec<f64>> {
    check_inputs(mesh, layout, p, &THERMAL_FIELDS)?;
    check_prev(mesh, layout, prev)?;
    if u_end.len() != prev.u.len() {
        return Err(Error::Layout(format!("u_end has {} entries, expected {}", u_end.len(), prev.u.len())));
    }
    let rule = space_rule(mesh)?;
    let dim = mesh.dim();
    let mut rhs = vec![0.0; layout.n_dofs()];
    let scale = p.theta0 * p.m;
    thermal_rhs_common(mesh, layout, p, prev, loads, &mut rhs, &rule, |ed, q| {
        if scale == 0.0 {
            return 0.0;
        }
        scale * (strain_trace(&prev.u, &ed.nodes, q, dim) - strain_trace(u_end, &ed.nodes, q, dim))
    })?;
    Ok(rhs)
}

pub fn monolithic_rhs(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
) -> Result<Vec<f64>> {
    check_inputs(mesh, layout, p, &MONOLITHIC_FIELDS)?;
    check_prev(mesh, layout, prev)?;
    let rule = space_rule(mesh)?;
    let dim = mesh.dim();
    let mut rhs = vec![0.0; layout.n_dofs()];
    mechanics_rhs(mesh, layout, p, prev, loads, &mut rhs, &rule)?;
    let scale = p.theta0 * p.m;
    thermal_rhs_common(mesh, layout, p, prev, loads, &mut rhs, &rule, |ed, q| {
        scale * strain_trace(&prev.u, &ed.nodes, q, dim)
    })?;
    Ok(rhs)
}

pub fn assemble_mechanical_slab(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
) -> Result<LinearSystem> {
    LinearSystem::new(mechanical_matrix(mesh, layout, p)?, mechanical_rhs(mesh, layout, p, prev, loads)?)
}

pub fn assemble_thermal_slab(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    u_end: &[f64],
    loads: &LoadSpec,
) -> Result<LinearSystem> {
    LinearSystem::new(thermal_matrix(mesh, layout, p)?, thermal_rhs(mesh, layout, p, prev, u_end, loads)?)
}

pub fn assemble_monolithic_slab(
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    loads: &LoadSpec,
) -> Result<LinearSystem> {
    LinearSystem::new(monolithic_matrix(mesh, layout, p)?, monolithic_rhs(mesh, layout, p, prev, loads)?)
}
