use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh, SlabLayout};

/// Nodal `(u, v, alpha, theta)` at one instant. Vector fields are stored
/// node-major (`node * dim + comp`).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub dim: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
}

impl StateVector {
    pub fn zeros(dim: usize, n_nodes: usize, time: f64) -> Self {
        StateVector {
            dim,
            time,
            u: vec![0.0; dim * n_nodes],
            v: vec![0.0; dim * n_nodes],
            alpha: vec![0.0; n_nodes],
            theta: vec![0.0; n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.theta.len()
    }

    /// Checks lengths against a mesh and rejects non-finite values.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.n_nodes();
        if self.dim != mesh.dim() {
            return Err(Error::Dimension { expected: mesh.dim(), got: self.dim });
        }
        let expect = [(self.u.len(), n * self.dim), (self.v.len(), n * self.dim), (self.alpha.len(), n), (self.theta.len(), n)];
        for (got, want) in expect {
            if got != want {
                return Err(Error::Layout(format!("state field has {got} entries, mesh needs {want}")));
            }
        }
        if !self.all_finite() {
            return Err(Error::arg("state contains non-finite values"));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.fields().iter().all(|f| f.iter().all(|x| x.is_finite()))
    }

    pub fn fields(&self) -> [&Vec<f64>; 4] {
        [&self.u, &self.v, &self.alpha, &self.theta]
    }

    fn fields_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.u, &mut self.v, &mut self.alpha, &mut self.theta]
    }

    pub fn field(&self, field: Field) -> &[f64] {
        match field {
            Field::Displacement => &self.u,
            Field::Velocity => &self.v,
            Field::ThermalDisplacement => &self.alpha,
            Field::Temperature => &self.theta,
        }
    }

    pub fn field_mut(&mut self, field: Field) -> &mut Vec<f64> {
        match field {
            Field::Displacement => &mut self.u,
            Field::Velocity => &mut self.v,
            Field::ThermalDisplacement => &mut self.alpha,
            Field::Temperature => &mut self.theta,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        for f in s.fields_mut() {
            f.iter_mut().for_each(|x| *x *= c);
        }
        s
    }

    /// `a * self + b * other`, keeping `self.time`.
    pub fn combine(&self, a: f64, other: &StateVector, b: f64) -> Result<Self> {
        if other.dim != self.dim || other.n_nodes() != self.n_nodes() {
            return Err(Error::Layout("states live on different layouts".into()));
        }
        let mut s = self.clone();
        for (dst, src) in s.fields_mut().into_iter().zip(other.fields()) {
            for (d, o) in dst.iter_mut().zip(src) {
                *d = a * *d + b * o;
            }
        }
        Ok(s)
    }

    /// Euclidean norm over all four fields.
    pub fn vector_norm(&self) -> f64 {
        self.fields().iter().flat_map(|f| f.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Coefficients of one slab: the traces at `t_start^+` and `t_end^-`.
/// Fields not solved for in a phase carry the incoming values.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabSolution {
    pub t_start: f64,
    pub t_end: f64,
    pub start: StateVector,
    pub end: StateVector,
}

impl SlabSolution {
    /// Linear interpolation between the two temporal nodes.
    pub fn eval(&self, t: f64) -> Result<StateVector> {
        let dt = self.t_end - self.t_start;
        if !(t >= self.t_start - 1e-14 * dt.abs() && t <= self.t_end + 1e-14 * dt.abs()) {
            return Err(Error::arg(format!("time {t} outside slab [{}, {}]", self.t_start, self.t_end)));
        }
        let s = (t - self.t_start) / dt;
        let mut out = self.start.combine(1.0 - s, &self.end, s)?;
        out.time = t;
        Ok(out)
    }

    /// Splits a full slab solution vector into traces. Fields absent from
    /// the layout are copied from `fill`.
    pub fn from_vector(layout: &SlabLayout, x: &[f64], fill: &StateVector) -> Result<Self> {
        if x.len() != layout.n_dofs() {
            return Err(Error::Dimension { expected: layout.n_dofs(), got: x.len() });
        }
        let mut start = fill.clone();
        let mut end = fill.clone();
        start.time = layout.t_start;
        end.time = layout.t_end;
        let dim = layout.dim();
        for &f in layout.fields() {
            let comps = f.components(dim);
            for (t, state) in [(0, &mut start), (1, &mut end)] {
                let dst = state.field_mut(f);
                for node in 0..layout.n_nodes() {
                    for c in 0..comps {
                        dst[node * comps + c] = x[layout.index(f, c, node, t)];
                    }
                }
            }
        }
        Ok(SlabSolution { t_start: layout.t_start, t_end: layout.t_end, start, end })
    }
}
