//! Per-vertex compatibility conditions on edge DOFs.
//!
//! On the star of a vertex, the strains of continuous piecewise-affine
//! displacements form a subspace of dimension `3N - 6` inside the `A`
//! dimensional space of patch edge DOFs. The compatibility forms of the
//! vertex are an orthonormal basis of the left null space of the map from
//! patch displacements to patch edge DOFs, computed by SVD. Stacking the forms
//! of every vertex gives a global matrix `C` whose kernel is the compatible
//! strain space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{vertex_patch, EntityClass, TetMesh, VertexPatch};
use crate::par::{try_map_indexed, Execution};
use crate::sparse::CsrMatrix;
use crate::strain_space::EdgeDofVector;

/// Orthonormal basis (as columns) of the null space of `a`.
///
/// Singular values at or below `max(rows, cols) * eps * sigma_max` count as
/// zero.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad with zero rows so the SVD returns a full set of right vectors
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let tol = m.max(n) as f64 * f64::EPSILON * smax;
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Numerical rank with the same tolerance as [`null_space`].
pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let tol = m.max(n) as f64 * f64::EPSILON * sv.max();
    sv.iter().filter(|&&s| s > tol).count()
}

/// Dense map from patch vertex displacements (3 per vertex, in patch vertex
/// order) to patch edge DOFs (in patch edge order). For a continuous
/// piecewise-affine field the DOF of edge `(i, j)` is `t . (v_j - v_i)`.
pub fn patch_map(mesh: &TetMesh, patch: &VertexPatch) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(patch.edges.len(), 3 * patch.vertices.len());
    for (row, &e) in patch.edges.iter().enumerate() {
        let [i, j] = mesh.edges()[e];
        let (a, b) = mesh.edge_points(e);
        let t = (b - a).normalize();
        let li = patch.local_vertex(i).expect("edge endpoint in patch");
        let lj = patch.local_vertex(j).expect("edge endpoint in patch");
        for c in 0..3 {
            g[(row, 3 * li + c)] = -t[c];
            g[(row, 3 * lj + c)] = t[c];
        }
    }
    g
}

/// Compatibility forms of one vertex patch.
#[derive(Debug, Clone)]
pub struct PatchConstraintSet {
    pub center: usize,
    pub class: EntityClass,
    /// Constraint count predicted by the Euler identity.
    pub expected: usize,
    /// Global indices of the patch edges; row entries follow this order.
    pub edges: Vec<usize>,
    /// Orthonormal rows, each of length `edges.len()`.
    pub rows: Vec<Vec<f64>>,
}

impl PatchConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Applies every row to a global DOF vector.
    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(&self.edges).map(|(c, &e)| c * d[e]).sum())
            .collect()
    }
}

/// Left null space of the patch map without checking its dimension.
pub fn patch_null_space(mesh: &TetMesh, patch: &VertexPatch) -> Vec<Vec<f64>> {
    let g = patch_map(mesh, patch);
    let basis = null_space(&g.transpose());
    basis
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

pub fn patch_constraints(mesh: &TetMesh, patch: &VertexPatch) -> Result<PatchConstraintSet> {
    let expected = patch.constraint_count();
    let rows = patch_null_space(mesh, patch);
    if rows.len() != expected {
        return Err(Error::ConstraintCountMismatch {
            vertex: patch.center,
            expected,
            computed: rows.len(),
        });
    }
    Ok(PatchConstraintSet {
        center: patch.center,
        class: patch.class,
        expected,
        edges: patch.edges.clone(),
        rows,
    })
}

/// Stacked compatibility forms of every vertex, over global edge DOFs.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    matrix: CsrMatrix,
    row_vertex: Vec<usize>,
}

impl ConstraintMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Vertex owning each row.
    pub fn row_vertex(&self) -> &[usize] {
        &self.row_vertex
    }

    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(d)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
}

pub fn assemble_constraints(mesh: &TetMesh) -> Result<ConstraintMatrix> {
    assemble_constraints_with(mesh, Execution::default())
}

pub fn assemble_constraints_with(mesh: &TetMesh, exec: Execution) -> Result<ConstraintMatrix> {
    let sets = try_map_indexed(exec, mesh.n_vertices(), |a| {
        let patch = vertex_patch(mesh, a)?;
        patch_constraints(mesh, &patch)
    })?;
    let mut triplets = Vec::new();
    let mut row_vertex = Vec::new();
    for set in &sets {
        for r in &set.rows {
            let row = row_vertex.len();
            for (&e, &c) in set.edges.iter().zip(r) {
                triplets.push((row, e, c));
            }
            row_vertex.push(set.center);
        }
    }
    Ok(ConstraintMatrix {
        matrix: CsrMatrix::from_triplets(row_vertex.len(), mesh.n_edges(), triplets),
        row_vertex,
    })
}

/// `||C d|| / max(1, ||d||)`.
pub fn membership_residual(c: &ConstraintMatrix, d: &EdgeDofVector) -> Result<f64> {
    if d.len() != c.ncols() {
        return Err(Error::DimensionMismatch {
            what: "edge DOF vector",
            expected: c.ncols(),
            found: d.len(),
        });
    }
    let r = c.apply(d);
    let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(rn / d.norm().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankCheck {
    pub rank: usize,
    pub kernel_dim: usize,
    /// `3 * #vertices - 6`
    pub expected: usize,
    pub passed: bool,
}

/// Dense rank-revealing check that `dim ker C = 3 * #vertices - 6`. Only
/// meaningful on simply-connected meshes, which the caller asserts.
pub fn global_rank_check(mesh: &TetMesh, c: &ConstraintMatrix) -> RankCheck {
    let rank = numerical_rank(&c.to_dense());
    let kernel_dim = c.ncols() - rank;
    let expected = 3 * mesh.n_vertices() - 6;
    RankCheck {
        rank,
        kernel_dim,
        expected,
        passed: kernel_dim == expected,
    }
}

/// Per-vertex constraint diagnostics used by the topology report.
#[derive(Debug, Clone)]
pub struct PatchReport {
    pub vertex: usize,
    pub class: EntityClass,
    pub expected: usize,
    pub null_dim: usize,
}

impl PatchReport {
    pub fn passed(&self) -> bool {
        self.expected == self.null_dim
    }
}

pub fn patch_reports(mesh: &TetMesh, exec: Execution) -> Result<Vec<PatchReport>> {
    try_map_indexed(exec, mesh.n_vertices(), |a| {
        let patch = vertex_patch(mesh, a)?;
        Ok(PatchReport {
            vertex: a,
            class: patch.class,
            expected: patch.constraint_count(),
            null_dim: patch_null_space(mesh, &patch).len(),
        })
    })
}
