//! Per-slab linear systems for the mechanical phase, the thermal phase and
//! the coupled problem, plus Dirichlet elimination.

mod forms;
mod loads;
mod state;

use std::io::Write;

pub use forms::{
    assemble_mechanical_slab, assemble_monolithic_slab, assemble_thermal_slab, mechanical_layout,
    mechanical_matrix, mechanical_rhs, monolithic_layout, monolithic_matrix, monolithic_rhs, thermal_layout,
    thermal_matrix, thermal_rhs, MECHANICAL_FIELDS, MONOLITHIC_FIELDS, THERMAL_FIELDS,
};
pub(crate) use forms::{element_data, interpolate, space_rule, strain_trace};
pub use loads::{LoadSpec, ScalarField, VectorField};
pub use state::{SlabSolution, StateVector};

use crate::error::{Error, Result};
use crate::linalg::{write_matrix_market, ConstraintRecord, LinearSystem};
use crate::mesh::{Field, Mesh, SlabLayout, TEMPORAL_NODES};

/// Boundary values for every constrained unknown of a slab, as
/// `(index, value)` pairs. Missing data gives zero.
pub fn dirichlet_values(mesh: &Mesh, layout: &SlabLayout, loads: &LoadSpec) -> Vec<(usize, f64)> {
    let dim = mesh.dim();
    let times = [layout.t_start, layout.t_end];
    let mut out = Vec::new();
    for node in 0..mesh.n_nodes() {
        let x = mesh.coords()[node];
        for &f in layout.fields() {
            let source = match f {
                Field::Displacement => loads.displacement.as_ref().map(|g| Box::new(move |t| g(x, t)) as Box<dyn Fn(f64) -> [f64; 2]>),
                Field::Velocity => loads.velocity.as_ref().map(|g| Box::new(move |t| g(x, t)) as Box<dyn Fn(f64) -> [f64; 2]>),
                Field::Temperature => {
                    loads.temperature.as_ref().map(|g| Box::new(move |t| [g(x, t), 0.0]) as Box<dyn Fn(f64) -> [f64; 2]>)
                }
                Field::ThermalDisplacement => None,
            };
            let Some(source) = source else { continue };
            for (k, &t) in times.iter().enumerate().take(TEMPORAL_NODES) {
                let val = source(t);
                for c in 0..f.components(dim) {
                    let idx = layout.index(f, c, node, k);
                    if layout.is_constrained(idx) {
                        out.push((idx, val[c]));
                    }
                }
            }
        }
    }
    out
}

/// Eliminates the constrained unknowns of `layout` by row and column
/// removal, moving `A[:, j] g_j` to the right-hand side. Constrained
/// unknowns without an entry in `values` are set to zero.
pub fn apply_dirichlet(system: &LinearSystem, layout: &SlabLayout, values: &[(usize, f64)]) -> Result<LinearSystem> {
    let n = layout.n_dofs();
    if system.constraints.is_some() {
        return Err(Error::arg("system already has eliminated constraints"));
    }
    if system.matrix.nrows() != n || system.matrix.ncols() != n || system.rhs.len() != n {
        return Err(Error::Dimension { expected: n, got: system.matrix.nrows() });
    }
    let mut fixed = vec![0.0; n];
    for &(i, v) in values {
        if i >= n || !layout.is_constrained(i) {
            return Err(Error::arg(format!("boundary value given for unconstrained unknown {i}")));
        }
        fixed[i] = v;
    }
    let lift = system.matrix.spmv(&fixed)?;
    let free = layout.free_dofs().to_vec();
    let rhs: Vec<f64> = free.iter().map(|&i| system.rhs[i] - lift[i]).collect();
    let map: Vec<usize> = (0..n).map(|i| layout.free_index(i).unwrap_or(usize::MAX)).collect();
    let matrix = system.matrix.select(&map, &map, free.len(), free.len())?;
    Ok(LinearSystem { matrix, rhs, constraints: Some(ConstraintRecord { free, fixed }) })
}

/// Writes the matrix in MatrixMarket form followed by the right-hand side
/// as a dense column (`%%MatrixMarket matrix array real general`).
pub fn dump_system<W: Write>(system: &LinearSystem, mut w: W) -> Result<()> {
    write_matrix_market(&system.matrix, &mut w)?;
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", system.rhs.len())?;
    for v in &system.rhs {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{solve, SolverSettings};
    use crate::mesh::{build_interval_mesh, BoundaryPartition};
    use crate::model::{Coefficients, DimensionlessParams, Units};
    use std::sync::Arc;

    fn nd(eps1: f64, eps2: f64, k: f64) -> Coefficients {
        DimensionlessParams::new(eps1, eps2, k).unwrap().coefficients().unwrap()
    }

    #[test]
    fn null_problem_has_zero_solution() {
        let mesh = build_interval_mesh(1.0, 4).unwrap();
        let p = nd(4.0, 0.2, 0.1);
        let prev = StateVector::zeros(1, 5, 0.0);
        let layout = mechanical_layout(&mesh, 0.0, 0.1).unwrap();
        let sys = assemble_mechanical_slab(&mesh, &layout, &p, &prev, &LoadSpec::none()).unwrap();
        let red = apply_dirichlet(&sys, &layout, &dirichlet_values(&mesh, &layout, &LoadSpec::none())).unwrap();
        let x = red.solve_full(&SolverSettings::default()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dirichlet_homogeneous_keeps_rhs() {
        let mesh = build_interval_mesh(1.0, 3).unwrap();
        let p = nd(4.0, 0.2, 0.0);
        let mut prev = StateVector::zeros(1, 4, 0.0);
        prev.v = vec![0.0, 1.0, -1.0, 0.0];
        let layout = mechanical_layout(&mesh, 0.0, 0.1).unwrap();
        let sys = assemble_mechanical_slab(&mesh, &layout, &p, &prev, &LoadSpec::none()).unwrap();
        let red = apply_dirichlet(&sys, &layout, &[]).unwrap();
        for (k, &i) in layout.free_dofs().iter().enumerate() {
            assert_eq!(red.rhs[k], sys.rhs[i]);
        }
    }

    #[test]
    fn dirichlet_lift_identity() {
        let mesh = build_interval_mesh(1.0, 3).unwrap();
        let p = nd(4.0, 0.2, 0.0);
        let prev = StateVector::zeros(1, 4, 0.0);
        let layout = mechanical_layout(&mesh, 0.0, 0.1).unwrap();
        let sys = assemble_mechanical_slab(&mesh, &layout, &p, &prev, &LoadSpec::none()).unwrap();
        let j = layout.index(Field::Displacement, 0, 0, 1);
        let red = apply_dirichlet(&sys, &layout, &[(j, 0.3)]).unwrap();
        for (k, &i) in layout.free_dofs().iter().enumerate() {
            assert_eq!(red.rhs[k], sys.rhs[i] - sys.matrix.get(i, j) * 0.3);
        }
        let free_node = layout.index(Field::Displacement, 0, 1, 1);
        assert!(apply_dirichlet(&sys, &layout, &[(free_node, 1.0)]).is_err());
    }

    #[test]
    fn clamped_temperature_is_exact() {
        let mesh = build_interval_mesh(1.0, 8).unwrap();
        let p = nd(9.0, 0.5, 0.0);
        let mut prev = StateVector::zeros(1, 9, 0.0);
        prev.theta = (0..9).map(|i| if i == 0 || i == 8 { 0.0 } else { 1.0 }).collect();
        let layout = thermal_layout(&mesh, 0.0, 0.05).unwrap();
        let loads = LoadSpec { heat_supply: Some(Arc::new(|_, _| 10.0)), ..LoadSpec::none() };
        let sys = assemble_thermal_slab(&mesh, &layout, &p, &prev, &prev.u, &loads).unwrap();
        let red = apply_dirichlet(&sys, &layout, &dirichlet_values(&mesh, &layout, &loads)).unwrap();
        let x = red.solve_full(&SolverSettings::default()).unwrap();
        for node in [0, 8] {
            for t in 0..2 {
                assert_eq!(x[layout.index(Field::Temperature, 0, node, t)], 0.0);
            }
        }
    }

    #[test]
    fn insulated_rigid_thermal_slab() {
        // No conduction: theta stays constant, alpha grows with slope theta + offset.
        let mesh = build_interval_mesh(1.0, 4).unwrap().with_partition(BoundaryPartition::free());
        let p = Coefficients {
            dim: 1,
            rho: 1.0,
            c: 2.0,
            theta0: 3.0,
            lambda: 1.0,
            mu: 1.0,
            m: 0.7,
            k2: 0.0,
            k3: 0.0,
            s0: 0.0,
            alpha_rate_offset: 3.0,
            units: Units::Dimensional,
        };
        let mut prev = StateVector::zeros(1, 5, 0.2);
        prev.theta = vec![0.1, 0.4, -0.2, 0.3, 0.0];
        prev.alpha = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        prev.u = vec![0.0, 0.1, 0.3, 0.2, 0.0];
        let layout = thermal_layout(&mesh, 0.2, 0.45).unwrap();
        let sys = assemble_thermal_slab(&mesh, &layout, &p, &prev, &prev.u, &LoadSpec::none()).unwrap();
        let x = solve(&sys, &SolverSettings::default()).unwrap();
        let sol = SlabSolution::from_vector(&layout, &x, &prev).unwrap();
        for i in 0..5 {
            assert!((sol.start.theta[i] - prev.theta[i]).abs() < 1e-12);
            assert!((sol.end.theta[i] - prev.theta[i]).abs() < 1e-12);
            let slope = (sol.end.alpha[i] - sol.start.alpha[i]) / 0.25;
            assert!((slope - (prev.theta[i] + 3.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_temperature_state_is_preserved() {
        let mesh = build_interval_mesh(2.0, 6).unwrap().with_partition(BoundaryPartition::free());
        let mut p = nd(9.0, 0.5, 0.1);
        p.alpha_rate_offset = 1.5;
        let mut prev = StateVector::zeros(1, 7, 0.0);
        prev.theta = vec![0.8; 7];
        prev.alpha = vec![-0.25; 7];
        let layout = thermal_layout(&mesh, 0.0, 0.3).unwrap();
        let sys = assemble_thermal_slab(&mesh, &layout, &p, &prev, &prev.u, &LoadSpec::none()).unwrap();
        let x = solve(&sys, &SolverSettings::default()).unwrap();
        let sol = SlabSolution::from_vector(&layout, &x, &prev).unwrap();
        for i in 0..7 {
            assert!((sol.end.theta[i] - 0.8).abs() < 1e-10);
            assert!((sol.end.alpha[i] - (-0.25 + (0.8 + 1.5) * 0.3)).abs() < 1e-10);
        }
    }

    #[test]
    fn matrices_couple_only_element_neighbours() {
        let mesh = crate::mesh::build_quad_mesh([0.0, 1.0], [0.0, 1.0], 3, 2).unwrap();
        let p = crate::model::MaterialParams {
            rho: 1.0,
            c: 1.0,
            theta0: 1.0,
            lambda: 1.0,
            mu: 1.0,
            omega: 0.1,
            k2: 1.0,
            k3: 0.1,
            s0: 0.0,
            dim: 2,
        }
        .coefficients()
        .unwrap();
        let layout = monolithic_layout(&mesh, 0.0, 0.1).unwrap();
        let a = monolithic_matrix(&mesh, &layout, &p).unwrap();
        let block = layout.block() * 2;
        let mut share = vec![vec![false; mesh.n_nodes()]; mesh.n_nodes()];
        for e in 0..mesh.n_elements() {
            for &i in mesh.element(e) {
                for &j in mesh.element(e) {
                    share[i][j] = true;
                }
            }
        }
        for (i, j, _) in a.triplets() {
            assert!(share[i / block][j / block]);
        }
    }
}
