//! Shared test helpers: a dense brute-force slab assembler written straight
//! from the weak forms, and seeded random states.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thermo_tdg::assembly::*;
use thermo_tdg::mesh::*;
use thermo_tdg::model::{Coefficients, Units};

const G3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// 3-point Gauss on `[lo, hi]`.
fn gauss(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let h = hi - lo;
    G3.iter().map(|&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w)).collect()
}

struct Cell {
    nodes: Vec<usize>,
    lo: [f64; 2],
    hi: [f64; 2],
}

fn cells(mesh: &Mesh) -> Vec<Cell> {
    let d = mesh.dim();
    (0..mesh.n_elements())
        .map(|e| {
            let nodes = mesh.element(e).to_vec();
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &n in &nodes {
                for k in 0..d {
                    lo[k] = lo[k].min(mesh.coords()[n][k]);
                    hi[k] = hi[k].max(mesh.coords()[n][k]);
                }
            }
            Cell { nodes, lo, hi }
        })
        .collect()
}

/// Tent function of `node` restricted to the cell, with its gradient.
fn hat(mesh: &Mesh, cell: &Cell, node: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
    let d = mesh.dim();
    let c = mesh.coords()[node];
    let mut f = [1.0; 2];
    let mut df = [0.0; 2];
    for k in 0..d {
        let h = cell.hi[k] - cell.lo[k];
        if c[k] == cell.lo[k] {
            f[k] = (cell.hi[k] - x[k]) / h;
            df[k] = -1.0 / h;
        } else {
            f[k] = (x[k] - cell.lo[k]) / h;
            df[k] = 1.0 / h;
        }
    }
    if d == 1 {
        (f[0], [df[0], 0.0])
    } else {
        (f[0] * f[1], [df[0] * f[1], f[0] * df[1]])
    }
}

fn cell_points(mesh: &Mesh, cell: &Cell) -> Vec<([f64; 2], f64)> {
    let gx = gauss(cell.lo[0], cell.hi[0]);
    if mesh.dim() == 1 {
        return gx.into_iter().map(|(x, w)| ([x, 0.0], w)).collect();
    }
    let gy = gauss(cell.lo[1], cell.hi[1]);
    let mut out = Vec::new();
    for &(x, wx) in &gx {
        for &(y, wy) in &gy {
            out.push(([x, y], wx * wy));
        }
    }
    out
}

/// Boundary pieces as `(nodes, points with weights)` for the sides in `mask`.
fn boundary(mesh: &Mesh, mask: u8) -> Vec<(Vec<usize>, Vec<([f64; 2], f64)>)> {
    let d = mesh.dim();
    let xs: Vec<[f64; 2]> = mesh.coords().to_vec();
    let min = |k: usize| xs.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
    let max = |k: usize| xs.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    if d == 1 {
        for (side, x) in [(LEFT, min(0)), (RIGHT, max(0))] {
            if mask & side != 0 {
                let node = (0..xs.len()).find(|&i| xs[i][0] == x).unwrap();
                out.push((vec![node], vec![([x, 0.0], 1.0)]));
            }
        }
        return out;
    }
    let sides = [(LEFT, 0, min(0)), (RIGHT, 0, max(0)), (BOTTOM, 1, min(1)), (TOP, 1, max(1))];
    for cell in cells(mesh) {
        for &(side, k, val) in &sides {
            if mask & side == 0 {
                continue;
            }
            let on: Vec<usize> = cell.nodes.iter().copied().filter(|&n| xs[n][k] == val).collect();
            if on.len() != 2 {
                continue;
            }
            let o = 1 - k;
            let pts = gauss(cell.lo[o], cell.hi[o])
                .into_iter()
                .map(|(s, w)| {
                    let mut p = [0.0; 2];
                    p[k] = val;
                    p[o] = s;
                    (p, w)
                })
                .collect();
            out.push((cell.nodes.clone(), pts));
        }
    }
    out
}

#[derive(Clone, Copy)]
struct Basis {
    field: Field,
    comp: usize,
    node: usize,
    k: usize,
}

fn basis_list(mesh: &Mesh, layout: &SlabLayout, nodes: &[usize]) -> Vec<Basis> {
    let mut out = Vec::new();
    for &f in layout.fields() {
        for &node in nodes {
            for c in 0..f.components(mesh.dim()) {
                for k in 0..2 {
                    out.push(Basis { field: f, comp: c, node, k });
                }
            }
        }
    }
    out
}

fn t_val(k: usize, s: f64) -> f64 {
    if k == 0 {
        1.0 - s
    } else {
        s
    }
}

fn t_dot(k: usize, dt: f64) -> f64 {
    if k == 0 {
        -1.0 / dt
    } else {
        1.0 / dt
    }
}

/// `sigma(eps) : eps'` with `sigma = lambda tr(eps) I + 2 mu eps + extra tr(eps) I`,
/// for `eps = sym(e_i (x) g)`, `eps' = sym(e_j (x) g')`.
fn stiffness(lambda: f64, mu: f64, extra: f64, i: usize, g: [f64; 2], j: usize, gp: [f64; 2], d: usize) -> f64 {
    let sym = |c: usize, v: [f64; 2]| {
        let mut e = [[0.0; 2]; 2];
        for a in 0..d {
            for b in 0..d {
                let ea = if a == c { v[b] } else { 0.0 };
                let eb = if b == c { v[a] } else { 0.0 };
                e[a][b] = 0.5 * (ea + eb);
            }
        }
        e
    };
    let e1 = sym(i, g);
    let e2 = sym(j, gp);
    let tr1: f64 = (0..d).map(|a| e1[a][a]).sum();
    let tr2: f64 = (0..d).map(|a| e2[a][a]).sum();
    let mut dd = 0.0;
    for a in 0..d {
        for b in 0..d {
            dd += e1[a][b] * e2[a][b];
        }
    }
    (lambda + extra) * tr1 * tr2 + 2.0 * mu * dd
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Mechanical,
    Thermal,
    Monolithic,
}

/// Dense matrix and right-hand side of a slab, built entry by entry.
pub fn dense_slab(
    form: Form,
    mesh: &Mesh,
    layout: &SlabLayout,
    p: &Coefficients,
    prev: &StateVector,
    u_end: &[f64],
    loads: &LoadSpec,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = layout.n_dofs();
    let d = mesh.dim();
    let dt = layout.t_end - layout.t_start;
    let mut a = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let f_ad = p.theta0 / (p.rho * p.c);
    let extra = if form == Form::Mechanical { f_ad * p.m * p.m } else { 0.0 };
    let rc = p.rho * p.c;
    let times = gauss(0.0, 1.0);
    use Field::*;
    for cell in cells(mesh) {
        let list = basis_list(mesh, layout, &cell.nodes);
        let pts = cell_points(mesh, &cell);
        for &(x, wx) in &pts {
            let h: Vec<(f64, [f64; 2])> = cell.nodes.iter().map(|&nd| hat(mesh, &cell, nd, x)).collect();
            let hv = |b: &Basis| h[cell.nodes.iter().position(|&q| q == b.node).unwrap()];
            let field_at = |vals: &[f64], comps: usize, c: usize| -> (f64, [f64; 2]) {
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for (idx, &nd) in cell.nodes.iter().enumerate() {
                    v += h[idx].0 * vals[nd * comps + c];
                    g[0] += h[idx].1[0] * vals[nd * comps + c];
                    g[1] += h[idx].1[1] * vals[nd * comps + c];
                }
                (v, g)
            };
            let tr = |u: &[f64]| -> f64 { (0..d).map(|c| field_at(u, d, c).1[c]).sum() };
            for te in &list {
                let (nt, gt) = hv(te);
                let row = layout.index(te.field, te.comp, te.node, te.k);
                for tr_b in &list {
                    let (nb, gb) = hv(tr_b);
                    let col = layout.index(tr_b.field, tr_b.comp, tr_b.node, tr_b.k);
                    let same = te.comp == tr_b.comp;
                    let mut acc = 0.0;
                    for &(s, ws) in &times {
                        let tl = t_val(te.k, s);
                        let tk = t_val(tr_b.k, s);
                        let tkd = t_dot(tr_b.k, dt);
                        let w = wx * ws * dt;
                        let v = match (te.field, tr_b.field) {
                            (Displacement, Displacement) if same => nt * tl * nb * tkd,
                            (Displacement, Velocity) if same => -nt * tl * nb * tk,
                            (Velocity, Velocity) if same => p.rho * nt * tl * nb * tkd,
                            (Velocity, Displacement) => {
                                stiffness(p.lambda, p.mu, extra, te.comp, gt, tr_b.comp, gb, d) * tl * tk
                            }
                            (ThermalDisplacement, ThermalDisplacement) => nt * tl * nb * tkd,
                            (ThermalDisplacement, Temperature) => -nt * tl * nb * tk,
                            (Temperature, Temperature) => {
                                rc * nt * tl * nb * tkd + p.k3 * (gt[0] * gb[0] + gt[1] * gb[1]) * tl * tk
                            }
                            (Temperature, ThermalDisplacement) => p.k2 * (gt[0] * gb[0] + gt[1] * gb[1]) * tl * tk,
                            (Velocity, Temperature) => -p.m * nb * tk * gt[te.comp] * tl,
                            (Temperature, Displacement) => p.theta0 * p.m * gb[tr_b.comp] * tkd * nt * tl,
                            _ => 0.0,
                        };
                        acc += w * v;
                    }
                    // jumps at t_n^+, where only the k = 0 shapes are nonzero
                    if te.k == 0 && tr_b.k == 0 {
                        acc += wx
                            * match (te.field, tr_b.field) {
                                (Displacement, Displacement) if same => nt * nb,
                                (Velocity, Velocity) if same => p.rho * nt * nb,
                                (ThermalDisplacement, ThermalDisplacement) => nt * nb,
                                (Temperature, Temperature) => rc * nt * nb,
                                (Temperature, Displacement) => p.theta0 * p.m * gb[tr_b.comp] * nt,
                                _ => 0.0,
                            };
                    }
                    a[row][col] += acc;
                }
                // right-hand side
                let mut r = 0.0;
                let thm = field_at(&prev.theta, 1, 0).0;
                for &(s, ws) in &times {
                    let t = layout.t_start + s * dt;
                    let tl = t_val(te.k, s);
                    let w = wx * ws * dt;
                    match te.field {
                        Velocity => {
                            if let Some(b) = &loads.body_force {
                                r += w * b(x, t)[te.comp] * nt * tl;
                            }
                            if form == Form::Mechanical {
                                let frozen = p.m * (thm + f_ad * p.m * tr(&prev.u));
                                r += w * frozen * gt[te.comp] * tl;
                            }
                        }
                        ThermalDisplacement => r += w * p.alpha_rate_offset * nt * tl,
                        Temperature => {
                            if let Some(q) = &loads.heat_supply {
                                r += w * q(x, t) * nt * tl;
                            }
                        }
                        _ => {}
                    }
                }
                if te.k == 0 {
                    r += wx
                        * match te.field {
                            Displacement => field_at(&prev.u, d, te.comp).0 * nt,
                            Velocity => p.rho * field_at(&prev.v, d, te.comp).0 * nt,
                            ThermalDisplacement => field_at(&prev.alpha, 1, 0).0 * nt,
                            Temperature => {
                                let shift = match form {
                                    Form::Thermal => p.theta0 * p.m * (tr(&prev.u) - tr(u_end)),
                                    Form::Monolithic => p.theta0 * p.m * tr(&prev.u),
                                    Form::Mechanical => 0.0,
                                };
                                (rc * thm + shift) * nt
                            }
                        };
                }
                rhs[row] += r;
            }
        }
    }
    // boundary data on the Neumann sides
    let part = mesh.partition();
    let all = if d == 1 { LEFT | RIGHT } else { LEFT | RIGHT | BOTTOM | TOP };
    for (mask, field) in [(all & !part.displacement, Velocity), (all & !part.temperature, Temperature)] {
        if !layout.fields().contains(&field) {
            continue;
        }
        for (nodes, pts) in boundary(mesh, mask) {
            for &(x, wx) in &pts {
                for &nd in &nodes {
                    let c = mesh.coords()[nd];
                    let nv = if d == 1 {
                        if c[0] == x[0] {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let cells = cells(mesh);
                        let cell = cells.iter().find(|cl| cl.nodes == nodes).unwrap();
                        hat(mesh, cell, nd, x).0
                    };
                    if nv == 0.0 {
                        continue;
                    }
                    for &(s, ws) in &times {
                        let t = layout.t_start + s * dt;
                        for k in 0..2 {
                            let w = wx * ws * dt * nv * t_val(k, s);
                            if field == Velocity {
                                if let Some(g) = &loads.traction {
                                    for c in 0..d {
                                        rhs[layout.index(Velocity, c, nd, k)] += w * g(x, t)[c];
                                    }
                                }
                            } else if let Some(g) = &loads.heat_flux {
                                rhs[layout.index(Temperature, 0, nd, k)] -= w * g(x, t);
                            }
                        }
                    }
                }
            }
        }
    }
    (a, rhs)
}

/// Loads that the two-point rules integrate exactly against linear shapes.
pub fn polynomial_loads() -> LoadSpec {
    LoadSpec {
        body_force: Some(Arc::new(|x, t| [1.0 + x[0] - 0.5 * x[0] * x[0] + t - 0.3 * t * t + x[0] * x[1], 0.5 - x[1] + 2.0 * t])),
        heat_supply: Some(Arc::new(|x, t| 0.2 + x[0] * x[1] - x[1] * x[1] + t * t)),
        traction: Some(Arc::new(|x, t| [0.3 + x[1] - t * t, -0.2 + x[0] * t])),
        heat_flux: Some(Arc::new(|x, t| 1.0 - x[0] + 0.4 * t - x[1] * x[1])),
        ..LoadSpec::none()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random state, zero at the nodes where the mesh partition constrains the
/// field.
pub fn random_state(mesh: &Mesh, rng: &mut ChaCha8Rng, time: f64) -> StateVector {
    let d = mesh.dim();
    let n = mesh.n_nodes();
    let mut s = StateVector::zeros(d, n, time);
    let part = mesh.partition();
    for i in 0..n {
        let du = mesh.on_displacement_boundary(i);
        let dth = mesh.on_temperature_boundary(i);
        for c in 0..d {
            if !du {
                s.u[i * d + c] = rng.random_range(-1.0..1.0);
            }
            if !(du && part.constrain_velocity) {
                s.v[i * d + c] = rng.random_range(-1.0..1.0);
            }
        }
        s.alpha[i] = rng.random_range(-1.0..1.0);
        if !dth {
            s.theta[i] = rng.random_range(-1.0..1.0);
        }
    }
    s
}

fn oracle_coefficients(dim: usize, r: &mut ChaCha8Rng) -> Coefficients {
    Coefficients {
        dim,
        rho: r.random_range(0.5..2.0),
        c: r.random_range(0.5..2.0),
        theta0: r.random_range(0.2..3.0),
        lambda: r.random_range(0.0..2.0),
        mu: r.random_range(0.3..2.0),
        m: r.random_range(-1.0..1.0),
        k2: r.random_range(0.0..2.0),
        k3: r.random_range(0.0..1.0),
        s0: 0.0,
        alpha_rate_offset: r.random_range(-1.0..1.0),
        units: Units::Dimensional,
    }
}

/// 1D meshes of one to four elements and a 2x2 quad mesh, each clamped
/// and with a mixed partition.
pub fn oracle_meshes() -> Vec<Mesh> {
    let mixed_1d = BoundaryPartition { displacement: LEFT, temperature: RIGHT, constrain_velocity: true };
    let mixed_2d = BoundaryPartition { displacement: LEFT | BOTTOM, temperature: TOP, constrain_velocity: false };
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push(build_interval_mesh(1.5, n).unwrap());
        out.push(build_interval_mesh(0.7, n).unwrap().with_partition(mixed_1d));
    }
    out.push(build_quad_mesh([0.0, 1.0], [-0.5, 0.5], 2, 2).unwrap());
    out.push(build_quad_mesh([-1.0, 0.5], [0.0, 2.0], 2, 2).unwrap().with_partition(mixed_2d));
    out
}

/// Largest relative entrywise deviation (matrix and right-hand side) of
/// the crate assembler from [`dense_slab`] on a random slab.
pub fn oracle_deviation(form: Form, mesh: &Mesh, seed: u64) -> f64 {
    let mut r = rng(seed);
    let p = oracle_coefficients(mesh.dim(), &mut r);
    let (t0, t1) = (0.3, 0.3 + r.random_range(0.05..0.5));
    let prev = random_state(mesh, &mut r, t0);
    let u_end = random_state(mesh, &mut r, t0).u;
    let loads = polynomial_loads();
    let (layout, sys) = match form {
        Form::Mechanical => {
            let l = mechanical_layout(mesh, t0, t1).unwrap();
            let s = assemble_mechanical_slab(mesh, &l, &p, &prev, &loads).unwrap();
            (l, s)
        }
        Form::Thermal => {
            let l = thermal_layout(mesh, t0, t1).unwrap();
            let s = assemble_thermal_slab(mesh, &l, &p, &prev, &u_end, &loads).unwrap();
            (l, s)
        }
        Form::Monolithic => {
            let l = monolithic_layout(mesh, t0, t1).unwrap();
            let s = assemble_monolithic_slab(mesh, &l, &p, &prev, &loads).unwrap();
            (l, s)
        }
    };
    let (a, b) = dense_slab(form, mesh, &layout, &p, &prev, &u_end, &loads);
    let got = sys.matrix.to_dense();
    let mut worst = 0.0_f64;
    for i in 0..layout.n_dofs() {
        for j in 0..layout.n_dofs() {
            worst = worst.max((got[i][j] - a[i][j]).abs() / a[i][j].abs().max(1.0));
        }
        worst = worst.max((sys.rhs[i] - b[i]).abs() / b[i].abs().max(1.0));
    }
    worst
}
