//! Piecewise-constant symmetric tensor fields with one degree of freedom per
//! mesh edge.
//!
//! The degree of freedom of a constant tensor `e` on a segment of length `L`
//! and unit tangent `t` is the line integral `L * (t . e t)`. Six such values
//! on the edges of a non-degenerate tet determine `e` uniquely.

use std::ops::{Add, AddAssign, Deref, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::mesh::{Point, TetMesh, LOCAL_EDGES};
use crate::par::{map_indexed, try_map_indexed, Execution};

/// Weights turning the stored components into the Frobenius inner product.
pub const FROBENIUS_WEIGHTS: [f64; 6] = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

/// Symmetric 3x3 tensor stored as `(e11, e22, e33, e12, e13, e23)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([0.0; 6]);

    pub fn identity() -> Self {
        SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3([a, b, c, 0.0, 0.0, 0.0])
    }

    /// Symmetric part of a general matrix.
    pub fn sym(m: &Matrix3<f64>) -> Self {
        SymTensor3([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e, f] = self.0;
        Matrix3::new(a, d, e, d, b, f, e, f, c)
    }

    pub fn components(&self) -> &[f64; 6] {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Frobenius inner product `a : b`.
    pub fn ddot(&self, other: &SymTensor3) -> f64 {
        (0..6)
            .map(|k| FROBENIUS_WEIGHTS[k] * self.0[k] * other.0[k])
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// `t . e t`
    pub fn quadratic(&self, t: &Vector3<f64>) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * t.x * t.x
            + b * t.y * t.y
            + c * t.z * t.z
            + 2.0 * (d * t.x * t.y + e * t.x * t.z + f * t.y * t.z)
    }

    pub fn max_abs_diff(&self, other: &SymTensor3) -> f64 {
        (0..6)
            .map(|k| (self.0[k] - other.0[k]).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3(std::array::from_fn(|k| self.0[k] + rhs.0[k]))
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for k in 0..6 {
            self.0[k] += rhs.0[k];
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3(std::array::from_fn(|k| self.0[k] - rhs.0[k]))
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        SymTensor3(self.0.map(|x| -x))
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3(rhs.0.map(|x| self * x))
    }
}

/// A straight segment: length and unit tangent from its first to its second
/// endpoint.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSegment {
    pub start: Point,
    pub length: f64,
    pub tangent: Vector3<f64>,
}

impl EdgeSegment {
    pub fn new(a: &Point, b: &Point) -> Result<Self> {
        let v = b - a;
        let length = v.norm();
        if !(length > 0.0) {
            return Err(Error::ZeroLengthEdge);
        }
        Ok(EdgeSegment {
            start: *a,
            length,
            tangent: v / length,
        })
    }

    pub fn point_at(&self, s: f64) -> Point {
        self.start + self.tangent * (s * self.length)
    }

    /// Row of the local DOF map: `L * (t1^2, t2^2, t3^2, 2 t1 t2, 2 t1 t3, 2 t2 t3)`.
    fn dof_row(&self) -> [f64; 6] {
        let t = &self.tangent;
        let l = self.length;
        [
            l * t.x * t.x,
            l * t.y * t.y,
            l * t.z * t.z,
            2.0 * l * t.x * t.y,
            2.0 * l * t.x * t.z,
            2.0 * l * t.y * t.z,
        ]
    }
}

/// Line integral of `t . e t` along the segment; exact for constant `e`.
pub fn edge_dof(edge: &EdgeSegment, e: &SymTensor3) -> f64 {
    edge.length * e.quadratic(&edge.tangent)
}

/// One value per mesh edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDofVector(Vec<f64>);

impl EdgeDofVector {
    pub fn new(values: Vec<f64>) -> Self {
        EdgeDofVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        EdgeDofVector(vec![0.0; n])
    }

    /// Unit excitation of a single edge.
    pub fn unit(n: usize, edge: usize) -> Self {
        let mut v = vec![0.0; n];
        v[edge] = 1.0;
        EdgeDofVector(v)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub(crate) fn check_len(&self, mesh: &TetMesh) -> Result<()> {
        if self.0.len() != mesh.n_edges() {
            return Err(Error::DimensionMismatch {
                what: "edge DOF vector",
                expected: mesh.n_edges(),
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

impl Deref for EdgeDofVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Maps the six tensor components of a constant field on a tet to its six
/// edge DOFs, in the local edge order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
#[derive(Debug, Clone)]
pub struct LocalDofMap {
    matrix: Matrix6<f64>,
    inverse: Matrix6<f64>,
    condition: f64,
}

/// Above this the local map is treated as singular.
const MAX_LOCAL_CONDITION: f64 = 1e13;

impl LocalDofMap {
    /// `None` when the map is singular to working precision.
    pub fn new(points: &[Point; 4]) -> Option<Self> {
        let mut matrix = Matrix6::zeros();
        for (r, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
            let seg = EdgeSegment::new(&points[a], &points[b]).ok()?;
            for (c, v) in seg.dof_row().into_iter().enumerate() {
                matrix[(r, c)] = v;
            }
        }
        let sv = matrix.singular_values();
        let condition = sv.max() / sv.min();
        if !condition.is_finite() || condition > MAX_LOCAL_CONDITION {
            return None;
        }
        let inverse = matrix.lu().try_inverse()?;
        log::trace!("local DOF map condition number {condition:.3e}");
        Some(LocalDofMap {
            matrix,
            inverse,
            condition,
        })
    }

    pub fn for_tet(mesh: &TetMesh, tet: usize) -> Result<Self> {
        Self::new(&mesh.tet_points(tet)).ok_or(Error::SingularLocalMap { tet })
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.matrix
    }

    /// Components-from-DOFs map.
    pub fn inverse(&self) -> &Matrix6<f64> {
        &self.inverse
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn dofs(&self, e: &SymTensor3) -> [f64; 6] {
        (self.matrix * Vector6::from(e.0)).into()
    }

    pub fn tensor(&self, d: &[f64; 6]) -> SymTensor3 {
        SymTensor3((self.inverse * Vector6::from(*d)).into())
    }
}

/// The six edge DOFs of a constant tensor on a tet, in local edge order.
pub fn tet_edge_dofs(points: &[Point; 4], e: &SymTensor3) -> Result<[f64; 6]> {
    let mut d = [0.0; 6];
    for (k, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
        d[k] = edge_dof(&EdgeSegment::new(&points[a], &points[b])?, e);
    }
    Ok(d)
}

/// Recovers the constant tensor on a tet from its six edge DOFs.
pub fn tensor_from_dofs(points: &[Point; 4], d: &[f64; 6]) -> Result<SymTensor3> {
    let map = LocalDofMap::new(points).ok_or(Error::SingularLocalMap { tet: 0 })?;
    // one step of iterative refinement keeps the round trip at rounding level
    let mut e = map.tensor(d);
    let r = map.dofs(&e);
    let corr = map.tensor(&std::array::from_fn(|k| d[k] - r[k]));
    e += corr;
    Ok(e)
}

/// Gathers the six DOFs of a tet from a global vector.
pub fn local_dofs(mesh: &TetMesh, tet: usize, d: &[f64]) -> [f64; 6] {
    mesh.tet_edges(tet).map(|le| d[le.edge])
}

/// Per-tet tensors of a global edge DOF vector.
pub fn tet_tensors(mesh: &TetMesh, d: &EdgeDofVector) -> Result<Vec<SymTensor3>> {
    tet_tensors_with(mesh, d, Execution::default())
}

pub fn tet_tensors_with(
    mesh: &TetMesh,
    d: &EdgeDofVector,
    exec: Execution,
) -> Result<Vec<SymTensor3>> {
    d.check_len(mesh)?;
    try_map_indexed(exec, mesh.n_tets(), |t| {
        tensor_from_dofs(&mesh.tet_points(t), &local_dofs(mesh, t, d))
            .map_err(|_| Error::SingularLocalMap { tet: t })
    })
}

/// Two-point Gauss rule on `[0, 1]`.
const GAUSS2: [(f64, f64); 2] = [
    (0.5 - 0.288_675_134_594_812_9, 0.5),
    (0.5 + 0.288_675_134_594_812_9, 0.5),
];

/// Edge DOFs of an analytic tensor field, by two-point Gauss quadrature on
/// each edge (exact when the field is affine along the edge).
pub fn interpolate<F>(mesh: &TetMesh, field: F) -> EdgeDofVector
where
    F: Fn(&Point) -> SymTensor3 + Sync + Send,
{
    interpolate_with(mesh, field, Execution::default())
}

pub fn interpolate_with<F>(mesh: &TetMesh, field: F, exec: Execution) -> EdgeDofVector
where
    F: Fn(&Point) -> SymTensor3 + Sync + Send,
{
    EdgeDofVector(map_indexed(exec, mesh.n_edges(), |e| {
        let (a, b) = mesh.edge_points(e);
        let seg = EdgeSegment::new(&a, &b).expect("mesh edges have positive length");
        GAUSS2
            .iter()
            .map(|&(s, w)| w * seg.length * field(&seg.point_at(s)).quadratic(&seg.tangent))
            .sum()
    }))
}

/// Gradients of the four barycentric coordinates of a tet.
pub fn barycentric_gradients(points: &[Point; 4]) -> Option<[Vector3<f64>; 4]> {
    let j = Matrix3::from_columns(&[
        points[1] - points[0],
        points[2] - points[0],
        points[3] - points[0],
    ]);
    let jinv = j.try_inverse()?;
    let g1 = jinv.row(0).transpose();
    let g2 = jinv.row(1).transpose();
    let g3 = jinv.row(2).transpose();
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

/// Symmetrized gradient of the affine interpolant of nodal values on a tet.
pub fn p1_strain(points: &[Point; 4], values: &[Vector3<f64>; 4]) -> SymTensor3 {
    let grads = barycentric_gradients(points).expect("non-degenerate tet");
    let mut g = Matrix3::zeros();
    for k in 0..4 {
        // (i, j) = d_i v_j
        g += grads[k] * values[k].transpose();
    }
    SymTensor3::sym(&g)
}

/// Strains of a continuous piecewise-affine displacement: the per-tet
/// tensors and the edge DOFs they induce.
pub fn strain_of_p1(
    mesh: &TetMesh,
    v: &[Vector3<f64>],
) -> Result<(EdgeDofVector, Vec<SymTensor3>)> {
    strain_of_p1_with(mesh, v, Execution::default())
}

pub fn strain_of_p1_with(
    mesh: &TetMesh,
    v: &[Vector3<f64>],
    exec: Execution,
) -> Result<(EdgeDofVector, Vec<SymTensor3>)> {
    if v.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "nodal displacement field",
            expected: mesh.n_vertices(),
            found: v.len(),
        });
    }
    let strains = map_indexed(exec, mesh.n_tets(), |t| {
        p1_strain(&mesh.tet_points(t), &mesh.tets()[t].map(|i| v[i]))
    });
    let dofs = try_map_indexed(exec, mesh.n_edges(), |e| {
        let t = mesh.edge_tets(e)[0];
        let (a, b) = mesh.edge_points(e);
        Ok(edge_dof(&EdgeSegment::new(&a, &b)?, &strains[t]))
    })?;
    Ok((EdgeDofVector(dofs), strains))
}
