//! Structured meshes, Q1 shape functions, Gauss quadrature and the
//! degree-of-freedom layout of a space-time slab.

use std::io::Write;

use crate::error::{Error, Result};

/// Side bitmasks. 1D meshes only use `LEFT` and `RIGHT`.
pub const LEFT: u8 = 1;
pub const RIGHT: u8 = 2;
pub const BOTTOM: u8 = 4;
pub const TOP: u8 = 8;
pub const ALL_SIDES: u8 = LEFT | RIGHT | BOTTOM | TOP;

/// Splits the boundary into displacement/traction parts and
/// temperature/flux parts by side. Sides not in `displacement` carry
/// tractions, sides not in `temperature` carry heat fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryPartition {
    pub displacement: u8,
    pub temperature: u8,
    /// Also constrain the velocity on the displacement part.
    pub constrain_velocity: bool,
}

impl BoundaryPartition {
    pub fn clamped() -> Self {
        BoundaryPartition { displacement: ALL_SIDES, temperature: ALL_SIDES, constrain_velocity: true }
    }

    pub fn free() -> Self {
        BoundaryPartition { displacement: 0, temperature: 0, constrain_velocity: true }
    }
}

impl Default for BoundaryPartition {
    fn default() -> Self {
        BoundaryPartition::clamped()
    }
}

/// A boundary facet: a single node in 1D, an edge in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub side: u8,
}

impl Facet {
    pub fn node_count(&self, dim: usize) -> usize {
        dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    node_sides: Vec<u8>,
    facets: Vec<Facet>,
    cells: [usize; 2],
    partition: BoundaryPartition,
}

/// Shape function values and physical gradients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub n: usize,
    pub values: [f64; 4],
    pub grads: [[f64; 2]; 4],
    pub det_j: f64,
}

/// A quadrature point mapped into one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: [f64; 2],
    /// Reference weight times Jacobian determinant.
    pub weight: f64,
    pub shape: Shape,
}

pub fn build_interval_mesh(length: f64, n_elems: usize) -> Result<Mesh> {
    if n_elems == 0 {
        return Err(Error::arg("interval mesh needs at least one element"));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::arg(format!("interval length must be positive, got {length}")));
    }
    let h = length / n_elems as f64;
    let coords: Vec<[f64; 2]> = (0..=n_elems).map(|i| [i as f64 * h, 0.0]).collect();
    let elements = (0..n_elems).map(|e| [e, e + 1, 0, 0]).collect();
    let mut node_sides = vec![0u8; n_elems + 1];
    node_sides[0] = LEFT;
    node_sides[n_elems] = RIGHT;
    let facets = vec![
        Facet { nodes: [0, 0], side: LEFT },
        Facet { nodes: [n_elems, n_elems], side: RIGHT },
    ];
    Ok(Mesh {
        dim: 1,
        coords,
        elements,
        node_sides,
        facets,
        cells: [n_elems, 0],
        partition: BoundaryPartition::default(),
    })
}

pub fn build_quad_mesh(x_range: [f64; 2], y_range: [f64; 2], nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::arg("quad mesh needs at least one element per direction"));
    }
    for r in [x_range, y_range] {
        if !(r[1] > r[0]) || !r[0].is_finite() || !r[1].is_finite() {
            return Err(Error::arg(format!("degenerate range [{}, {}]", r[0], r[1])));
        }
    }
    let hx = (x_range[1] - x_range[0]) / nx as f64;
    let hy = (y_range[1] - y_range[0]) / ny as f64;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut node_sides = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Snap the last row/column to the range end to avoid drift.
            let x = if i == nx { x_range[1] } else { x_range[0] + i as f64 * hx };
            let y = if j == ny { y_range[1] } else { y_range[0] + j as f64 * hy };
            coords.push([x, y]);
            let mut s = 0;
            if i == 0 {
                s |= LEFT;
            }
            if i == nx {
                s |= RIGHT;
            }
            if j == 0 {
                s |= BOTTOM;
            }
            if j == ny {
                s |= TOP;
            }
            node_sides.push(s);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut facets = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        facets.push(Facet { nodes: [id(i, 0), id(i + 1, 0)], side: BOTTOM });
    }
    for j in 0..ny {
        facets.push(Facet { nodes: [id(nx, j), id(nx, j + 1)], side: RIGHT });
    }
    for i in 0..nx {
        facets.push(Facet { nodes: [id(i + 1, ny), id(i, ny)], side: TOP });
    }
    for j in 0..ny {
        facets.push(Facet { nodes: [id(0, j + 1), id(0, j)], side: LEFT });
    }
    Ok(Mesh { dim: 2, coords, elements, node_sides, facets, cells: [nx, ny], partition: BoundaryPartition::default() })
}

impl Mesh {
    pub fn with_partition(mut self, partition: BoundaryPartition) -> Self {
        self.partition = partition;
        self
    }

    pub fn partition(&self) -> BoundaryPartition {
        self.partition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        if self.dim == 1 {
            2
        } else {
            4
        }
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.nodes_per_element()]
    }

    /// Elements per direction (`[n, 0]` in 1D).
    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn node_sides(&self, node: usize) -> u8 {
        self.node_sides[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.node_sides[node] != 0
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Node lies on the displacement-constrained part of the boundary.
    pub fn on_displacement_boundary(&self, node: usize) -> bool {
        self.node_sides[node] & self.partition.displacement != 0
    }

    pub fn on_temperature_boundary(&self, node: usize) -> bool {
        self.node_sides[node] & self.partition.temperature != 0
    }

    pub fn traction_facets(&self) -> impl Iterator<Item = &Facet> {
        let d = self.partition.displacement;
        self.facets.iter().filter(move |f| f.side & d == 0)
    }

    pub fn flux_facets(&self) -> impl Iterator<Item = &Facet> {
        let t = self.partition.temperature;
        self.facets.iter().filter(move |f| f.side & t == 0)
    }

    /// Outward unit normal of a facet.
    pub fn facet_normal(&self, f: &Facet) -> [f64; 2] {
        match f.side {
            LEFT => [-1.0, 0.0],
            RIGHT => [1.0, 0.0],
            BOTTOM => [0.0, -1.0],
            _ => [0.0, 1.0],
        }
    }

    /// Domain measure (length or area).
    pub fn measure(&self) -> f64 {
        let first = self.coords[0];
        let last = self.coords[self.coords.len() - 1];
        if self.dim == 1 {
            last[0] - first[0]
        } else {
            (last[0] - first[0]) * (last[1] - first[1])
        }
    }

    /// Shape functions of element `elem` at reference coordinates in
    /// `[-1, 1]^dim`.
    pub fn shape_eval(&self, elem: usize, ref_point: [f64; 2]) -> Result<Shape> {
        if elem >= self.elements.len() {
            return Err(Error::Mesh(format!("element {elem} out of range")));
        }
        let nodes = self.element(elem);
        if self.dim == 1 {
            let x0 = self.coords[nodes[0]][0];
            let x1 = self.coords[nodes[1]][0];
            let det_j = 0.5 * (x1 - x0);
            if !(det_j > 0.0) {
                return Err(Error::Mesh(format!("element {elem} has non-positive Jacobian {det_j}")));
            }
            let xi = ref_point[0];
            let mut s = Shape { n: 2, values: [0.0; 4], grads: [[0.0; 2]; 4], det_j };
            s.values[0] = 0.5 * (1.0 - xi);
            s.values[1] = 0.5 * (1.0 + xi);
            s.grads[0][0] = -0.5 / det_j;
            s.grads[1][0] = 0.5 / det_j;
            return Ok(s);
        }

        let [xi, eta] = ref_point;
        let sx = [-1.0, 1.0, 1.0, -1.0];
        let sy = [-1.0, -1.0, 1.0, 1.0];
        let mut values = [0.0; 4];
        let mut dref = [[0.0; 2]; 4];
        for a in 0..4 {
            values[a] = 0.25 * (1.0 + sx[a] * xi) * (1.0 + sy[a] * eta);
            dref[a][0] = 0.25 * sx[a] * (1.0 + sy[a] * eta);
            dref[a][1] = 0.25 * sy[a] * (1.0 + sx[a] * xi);
        }
        // jac[i][j] = d x_i / d ref_j
        let mut jac = [[0.0; 2]; 2];
        for a in 0..4 {
            let p = self.coords[nodes[a]];
            for i in 0..2 {
                for j in 0..2 {
                    jac[i][j] += p[i] * dref[a][j];
                }
            }
        }
        let det_j = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det_j > 0.0) {
            return Err(Error::Mesh(format!("element {elem} has non-positive Jacobian {det_j}")));
        }
        let inv = [
            [jac[1][1] / det_j, -jac[0][1] / det_j],
            [-jac[1][0] / det_j, jac[0][0] / det_j],
        ];
        let mut grads = [[0.0; 2]; 4];
        for a in 0..4 {
            for i in 0..2 {
                grads[a][i] = dref[a][0] * inv[0][i] + dref[a][1] * inv[1][i];
            }
        }
        Ok(Shape { n: 4, values, grads, det_j })
    }

    /// Maps a reference point to physical coordinates.
    pub fn map_point(&self, elem: usize, shape: &Shape) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (a, &node) in self.element(elem).iter().enumerate() {
            x[0] += shape.values[a] * self.coords[node][0];
            x[1] += shape.values[a] * self.coords[node][1];
        }
        x
    }

    pub fn quad_points(&self, elem: usize, rule: &QuadratureRule) -> Result<Vec<QuadPoint>> {
        if rule.dim != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: rule.dim });
        }
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(&p, &w)| {
                let shape = self.shape_eval(elem, p)?;
                Ok(QuadPoint { x: self.map_point(elem, &shape), weight: w * shape.det_j, shape })
            })
            .collect()
    }

    /// Plain-text listing: a header line, one node per line
    /// (`index x [y]`) and one element per line (`index n0 n1 ...`).
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dim {} nodes {} elements {}", self.dim, self.n_nodes(), self.n_elements())?;
        writeln!(w, "nodes")?;
        for (i, p) in self.coords.iter().enumerate() {
            if self.dim == 1 {
                writeln!(w, "{i} {:.17e}", p[0])?;
            } else {
                writeln!(w, "{i} {:.17e} {:.17e}", p[0], p[1])?;
            }
        }
        writeln!(w, "elements")?;
        for e in 0..self.n_elements() {
            let nodes: Vec<String> = self.element(e).iter().map(|n| n.to_string()).collect();
            writeln!(w, "{e} {}", nodes.join(" "))?;
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::arg("quadrature needs at least one point"));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor-product Gauss rule on the reference element `[-1, 1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree (per direction) integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn gauss(dim: usize, n: usize) -> Result<Self> {
        let (x, w) = gauss_legendre(n)?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                for i in 0..n {
                    points.push([x[i], 0.0]);
                    weights.push(w[i]);
                }
            }
            2 => {
                for j in 0..n {
                    for i in 0..n {
                        points.push([x[i], x[j]]);
                        weights.push(w[i] * w[j]);
                    }
                }
            }
            _ => return Err(Error::Dimension { expected: 2, got: dim }),
        }
        Ok(QuadratureRule { dim, points, weights, degree: 2 * n - 1 })
    }

    /// Gauss rule on the unit interval `[0, 1]`, used for slab time
    /// integrals in the normalized slab coordinate.
    pub fn unit_interval(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (x, w) = gauss_legendre(n)?;
        Ok((x.iter().map(|z| 0.5 * (1.0 + z)).collect(), w.iter().map(|v| 0.5 * v).collect()))
    }
}

/// Default rules: two points per direction in space and in time.
pub const SPACE_POINTS: usize = 2;
pub const TIME_POINTS: usize = 2;

/// Nodal fields carried by a slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Displacement,
    Velocity,
    ThermalDisplacement,
    Temperature,
}

impl Field {
    pub fn components(self, dim: usize) -> usize {
        match self {
            Field::Displacement | Field::Velocity => dim,
            _ => 1,
        }
    }
}

/// Temporal nodes per slab (linear in time).
pub const TEMPORAL_NODES: usize = 2;

/// Equation numbering for one space-time slab.
///
/// Indices are node-major: `node * 2 * block + temporal * block + offset + comp`,
/// where `block` is the number of scalar unknowns per spatial node and
/// temporal node 0 / 1 are the traces at `t_start^+` / `t_end^-`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabLayout {
    pub t_start: f64,
    pub t_end: f64,
    dim: usize,
    n_nodes: usize,
    fields: Vec<Field>,
    offsets: Vec<usize>,
    block: usize,
    constrained: Vec<bool>,
    free_of: Vec<usize>,
    free: Vec<usize>,
}

impl SlabLayout {
    /// Layout for `fields`, with Dirichlet masks taken from the mesh's
    /// boundary partition: displacement on the displacement boundary (and
    /// velocity there if the partition asks for it), temperature on the
    /// temperature boundary. Thermal displacement is never constrained.
    pub fn new(mesh: &Mesh, t_start: f64, t_end: f64, fields: &[Field]) -> Result<Self> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::arg(format!("slab [{t_start}, {t_end}] has non-positive length")));
        }
        if fields.is_empty() {
            return Err(Error::arg("slab layout needs at least one field"));
        }
        let dim = mesh.dim();
        let mut offsets = Vec::with_capacity(fields.len());
        let mut block = 0;
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].contains(f) {
                return Err(Error::arg(format!("field {f:?} listed twice")));
            }
            offsets.push(block);
            block += f.components(dim);
        }
        let n_nodes = mesh.n_nodes();
        let n = n_nodes * TEMPORAL_NODES * block;
        let mut constrained = vec![false; n];
        let partition = mesh.partition();
        for node in 0..n_nodes {
            for (f, &off) in fields.iter().zip(&offsets) {
                let masked = match f {
                    Field::Displacement => mesh.on_displacement_boundary(node),
                    Field::Velocity => partition.constrain_velocity && mesh.on_displacement_boundary(node),
                    Field::Temperature => mesh.on_temperature_boundary(node),
                    Field::ThermalDisplacement => false,
                };
                if masked {
                    for t in 0..TEMPORAL_NODES {
                        for c in 0..f.components(dim) {
                            constrained[node * TEMPORAL_NODES * block + t * block + off + c] = true;
                        }
                    }
                }
            }
        }
        let mut free_of = vec![usize::MAX; n];
        let mut free = Vec::with_capacity(n);
        for (i, &c) in constrained.iter().enumerate() {
            if !c {
                free_of[i] = free.len();
                free.push(i);
            }
        }
        Ok(SlabLayout {
            t_start,
            t_end,
            dim,
            n_nodes,
            fields: fields.to_vec(),
            offsets,
            block,
            constrained,
            free_of,
            free,
        })
    }

    pub fn dt(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Total number of equations before Dirichlet elimination.
    pub fn n_dofs(&self) -> usize {
        self.constrained.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn has_field(&self, field: Field) -> bool {
        self.fields.contains(&field)
    }

    pub fn offset(&self, field: Field) -> Option<usize> {
        self.fields.iter().position(|&f| f == field).map(|i| self.offsets[i])
    }

    /// Global index of `(field, comp, node, temporal)`.
    ///
    /// Panics if the field is absent from the layout; use [`Self::offset`]
    /// to probe first.
    pub fn index(&self, field: Field, comp: usize, node: usize, temporal: usize) -> usize {
        let off = self.offset(field).expect("field not in slab layout");
        debug_assert!(comp < field.components(self.dim) && temporal < TEMPORAL_NODES);
        node * TEMPORAL_NODES * self.block + temporal * self.block + off + comp
    }

    pub fn is_constrained(&self, index: usize) -> bool {
        self.constrained[index]
    }

    /// Reduced index of an unconstrained equation.
    pub fn free_index(&self, index: usize) -> Option<usize> {
        let r = self.free_of[index];
        (r != usize::MAX).then_some(r)
    }

    /// Reduced-to-full index map.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Same numbering over a different time interval.
    pub fn retimed(&self, t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::arg(format!("slab [{t_start}, {t_end}] has non-positive length")));
        }
        Ok(SlabLayout { t_start, t_end, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_mesh_examples() {
        let m = build_interval_mesh(1.0, 4).unwrap();
        let xs: Vec<f64> = m.coords().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(m.is_boundary(0) && m.is_boundary(4) && !m.is_boundary(2));

        let m = build_interval_mesh(1.0, 1).unwrap();
        assert_eq!(m.n_nodes(), 2);
        assert_eq!(m.n_elements(), 1);

        let m = build_interval_mesh(2.0, 1000).unwrap();
        assert_eq!(m.n_elements(), 1000);
        assert_relative_eq!(m.coords()[1][0], 0.002, epsilon = 1e-15);

        assert!(build_interval_mesh(1.0, 0).is_err());
        assert!(build_interval_mesh(0.0, 3).is_err());
    }

    #[test]
    fn quad_mesh_examples() {
        let m = build_quad_mesh([-1.0, 1.0], [-1.0, 1.0], 2, 2).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (9, 4));

        let m = build_quad_mesh([-1.0, 1.0], [-1.0, 1.0], 100, 100).unwrap();
        assert_eq!(m.n_nodes(), 10201);

        let m = build_quad_mesh([0.0, 1.0], [0.0, 1.0], 3, 3).unwrap();
        assert_eq!((0..m.n_nodes()).filter(|&n| m.is_boundary(n)).count(), 12);
        assert_eq!(m.facets().len(), 12);

        assert!(build_quad_mesh([1.0, 1.0], [0.0, 1.0], 2, 2).is_err());
        assert!(build_quad_mesh([0.0, 1.0], [0.0, 1.0], 0, 2).is_err());
    }

    #[test]
    fn shape_examples() {
        let m = build_quad_mesh([-1.0, 1.0], [-1.0, 1.0], 2, 2).unwrap();
        let s = m.shape_eval(0, [0.0, 0.0]).unwrap();
        assert_eq!(&s.values, &[0.25; 4]);

        let m1 = build_interval_mesh(1.0, 3).unwrap();
        let a = m1.shape_eval(1, [-1.0, 0.0]).unwrap();
        let b = m1.shape_eval(1, [1.0, 0.0]).unwrap();
        assert_eq!(&a.values[..2], &[1.0, 0.0]);
        assert_eq!(&b.values[..2], &[0.0, 1.0]);

        let rule = QuadratureRule::gauss(2, 2).unwrap();
        for e in 0..m.n_elements() {
            for qp in m.quad_points(e, &rule).unwrap() {
                let mut g = [0.0; 2];
                for (a, &node) in m.element(e).iter().enumerate() {
                    g[0] += qp.shape.grads[a][0] * m.coords()[node][0];
                    g[1] += qp.shape.grads[a][1] * m.coords()[node][0];
                }
                assert_relative_eq!(g[0], 1.0, epsilon = 1e-14);
                assert!(g[1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gauss_rules_integrate_monomials() {
        for n in 1..=6 {
            let (x, w) = gauss_legendre(n).unwrap();
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for p in 0..2 * n {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
        let (s, w) = QuadratureRule::unit_interval(TIME_POINTS).unwrap();
        let cubic: f64 = s.iter().zip(&w).map(|(s, w)| w * s.powi(3)).sum();
        assert_relative_eq!(cubic, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn domain_measure_by_quadrature() {
        let rule = QuadratureRule::gauss(2, SPACE_POINTS).unwrap();
        let m = build_quad_mesh([-1.0, 1.0], [0.0, 0.5], 7, 3).unwrap();
        let area: f64 = (0..m.n_elements())
            .flat_map(|e| m.quad_points(e, &rule).unwrap())
            .map(|q| q.weight)
            .sum();
        assert_relative_eq!(area, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.measure(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn layout_is_a_bijection_with_masks() {
        let m = build_interval_mesh(1.0, 3).unwrap();
        let l = SlabLayout::new(&m, 0.0, 0.1, &[Field::Displacement, Field::Velocity]).unwrap();
        assert_eq!(l.n_dofs(), 4 * 2 * 2);
        let mut seen = vec![false; l.n_dofs()];
        for node in 0..4 {
            for t in 0..2 {
                for f in [Field::Displacement, Field::Velocity] {
                    let i = l.index(f, 0, node, t);
                    assert!(!seen[i]);
                    seen[i] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        // u and v clamped at both end nodes, both temporal nodes
        assert_eq!(l.n_free(), l.n_dofs() - 8);
        assert!(l.is_constrained(l.index(Field::Velocity, 0, 3, 1)));

        let m = m.with_partition(BoundaryPartition { constrain_velocity: false, ..BoundaryPartition::clamped() });
        let l = SlabLayout::new(&m, 0.0, 0.1, &[Field::Displacement, Field::Velocity]).unwrap();
        assert_eq!(l.n_free(), l.n_dofs() - 4);

        assert!(SlabLayout::new(&m, 0.1, 0.1, &[Field::Velocity]).is_err());
    }

    #[test]
    fn mesh_text_dump() {
        let m = build_quad_mesh([0.0, 1.0], [0.0, 1.0], 1, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0 0 1 3 2"));
        assert_eq!(text.lines().count(), 1 + 1 + 4 + 1 + 1);
    }
}
