//! CSV and legacy VTK writers.

use std::io::Write;

use crate::assembly::StateVector;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV file: a comment line with the config hash, a header line,
/// then rows.
pub fn write_csv<W: Write>(mut w: W, config_hash: &str, header: &str, rows: &[String]) -> Result<()> {
    writeln!(w, "# config_hash={config_hash}")?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Nodal fields as CSV rows `x[,y],u...,v...,alpha,theta`.
pub fn state_csv(mesh: &Mesh, state: &StateVector) -> (String, Vec<String>) {
    let dim = mesh.dim();
    let header = if dim == 1 { "x,u,v,alpha,theta" } else { "x,y,u_x,u_y,v_x,v_y,alpha,theta" };
    let rows = (0..mesh.n_nodes())
        .map(|n| {
            let p = mesh.coords()[n];
            let mut vals: Vec<f64> = p[..dim].to_vec();
            vals.extend(&state.u[n * dim..(n + 1) * dim]);
            vals.extend(&state.v[n * dim..(n + 1) * dim]);
            vals.push(state.alpha[n]);
            vals.push(state.theta[n]);
            vals.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(",")
        })
        .collect();
    (header.to_string(), rows)
}

/// Legacy VTK ASCII structured grid with the scalar fields of a 2D state.
pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, state: &StateVector, title: &str) -> Result<()> {
    if mesh.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: mesh.dim() });
    }
    state.check(mesh)?;
    let [nx, ny] = mesh.cells();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} 1", nx + 1, ny + 1)?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in mesh.coords() {
        writeln!(w, "{} {} 0", fmt_num(p[0]), fmt_num(p[1]))?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
    let scalars: [(&str, Vec<f64>); 5] = [
        ("theta", state.theta.clone()),
        ("alpha", state.alpha.clone()),
        ("u_x", state.u.iter().step_by(2).copied().collect()),
        ("u_y", state.u.iter().skip(1).step_by(2).copied().collect()),
        ("speed", state.v.chunks(2).map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt()).collect()),
    ];
    for (name, vals) in scalars {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in vals {
            writeln!(w, "{}", fmt_num(v))?;
        }
    }
    Ok(())
}
