//! Material law, the elastic energy over edge DOFs, loads, and the link
//! between edge strains and piecewise-affine displacements.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix6, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{Point, TetMesh};
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::quadrature::{TET4, TRI3};
use crate::sparse::{CsrMatrix, LdlFactor};
use crate::strain_space::{
    barycentric_gradients, local_dofs, EdgeDofVector, LocalDofMap, SymTensor3, FROBENIUS_WEIGHTS,
};

/// Isotropic Lamé parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub lambda: f64,
    pub mu: f64,
}

impl Material {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && lambda > 0.0 && mu > 0.0) {
            return Err(Error::InvalidMaterial { lambda, mu });
        }
        Ok(Material { lambda, mu })
    }

    pub fn stress(&self, e: &SymTensor3) -> SymTensor3 {
        apply_material(self, e)
    }

    /// Matrix of `e -> A e : e` in tensor component coordinates.
    fn energy_weights(&self) -> Matrix6<f64> {
        let mut q = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                q[(i, j)] = self.lambda;
            }
        }
        for k in 0..6 {
            q[(k, k)] += 2.0 * self.mu * FROBENIUS_WEIGHTS[k];
        }
        q
    }
}

/// `lambda tr(e) I + 2 mu e`
pub fn apply_material(mat: &Material, e: &SymTensor3) -> SymTensor3 {
    mat.lambda * e.trace() * SymTensor3::identity() + 2.0 * mat.mu * *e
}

fn frobenius_weights() -> Matrix6<f64> {
    Matrix6::from_diagonal(&SVector::from(FROBENIUS_WEIGHTS))
}

/// Symmetric matrix `M` with `d' M d = sum_T |T| (A e_T : e_T)`.
#[derive(Debug, Clone)]
pub struct EnergyForm {
    matrix: CsrMatrix,
}

impl EnergyForm {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `d' M d`, twice the elastic energy.
    pub fn energy(&self, d: &[f64]) -> f64 {
        self.matrix.quad_form(d)
    }
}

pub fn assemble_energy(mesh: &TetMesh, mat: &Material) -> Result<EnergyForm> {
    assemble_energy_with(mesh, mat, Execution::default())
}

pub fn assemble_energy_with(mesh: &TetMesh, mat: &Material, exec: Execution) -> Result<EnergyForm> {
    let q = mat.energy_weights();
    let locals = try_map_indexed(exec, mesh.n_tets(), |t| {
        let map = LocalDofMap::for_tet(mesh, t)?;
        let dinv = map.inverse();
        Ok::<_, Error>(mesh.tet_volume(t) * dinv.transpose() * q * dinv)
    })?;
    let mut triplets = Vec::with_capacity(36 * mesh.n_tets());
    for (t, k) in locals.iter().enumerate() {
        let edges = mesh.tet_edges(t);
        for a in 0..6 {
            for b in 0..6 {
                triplets.push((edges[a].edge, edges[b].edge, k[(a, b)]));
            }
        }
    }
    Ok(EnergyForm {
        matrix: CsrMatrix::from_triplets(mesh.n_edges(), mesh.n_edges(), triplets),
    })
}

/// Body-force density.
pub type VectorField = Arc<dyn Fn(&Point) -> Vector3<f64> + Send + Sync>;
/// Surface traction as a function of position and outward unit normal.
pub type TractionField = Arc<dyn Fn(&Point, &Vector3<f64>) -> Vector3<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureOrder {
    /// Centroid rule.
    One,
    /// Four points per tet, edge midpoints per face.
    #[default]
    Two,
}

/// Body force and surface traction for the pure-traction problem.
#[derive(Clone)]
pub struct LoadData {
    pub body_force: VectorField,
    pub traction: TractionField,
    pub volume_order: QuadratureOrder,
    pub surface_order: QuadratureOrder,
    /// Bound on `|L(r_k)| / (|F| |r_k|)` for the nodal load vector `F` (as
    /// integrated, before any projection) and the nodal values of each rigid
    /// mode `r_k`.
    pub compat_tol: f64,
    /// Remove the rigid-motion component of the discrete loads before solving.
    pub project: bool,
}

impl fmt::Debug for LoadData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadData")
            .field("volume_order", &self.volume_order)
            .field("surface_order", &self.surface_order)
            .field("compat_tol", &self.compat_tol)
            .field("project", &self.project)
            .finish_non_exhaustive()
    }
}

impl LoadData {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn new(
        body_force: impl Fn(&Point) -> Vector3<f64> + Send + Sync + 'static,
        traction: impl Fn(&Point, &Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    ) -> Self {
        LoadData {
            body_force: Arc::new(body_force),
            traction: Arc::new(traction),
            volume_order: QuadratureOrder::Two,
            surface_order: QuadratureOrder::Two,
            compat_tol: Self::DEFAULT_TOLERANCE,
            project: false,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| Vector3::zeros(), |_, _| Vector3::zeros())
    }
}

/// Nodal load vector `F` with `F . v = L(v)` for piecewise-affine `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalLoad {
    pub values: Vec<Vector3<f64>>,
}

impl NodalLoad {
    /// `L(v)` for nodal values `v`.
    pub fn apply(&self, v: &[Vector3<f64>]) -> f64 {
        self.values.iter().zip(v).map(|(f, v)| f.dot(v)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|f| f.norm_squared()).sum::<f64>().sqrt()
    }

    /// `L(r_k)` for the six rigid modes.
    pub fn rigid_residuals(&self, mesh: &TetMesh) -> [f64; 6] {
        rigid_modes(mesh).map(|r| self.apply(&r))
    }

    /// Residuals scaled by `|F| |r_k|`; zero loads give zeros.
    pub fn relative_residuals(&self, mesh: &TetMesh) -> [f64; 6] {
        self.scaled_residuals(mesh, self.norm())
    }

    /// Residuals scaled by `fnorm |r_k|`.
    pub fn scaled_residuals(&self, mesh: &TetMesh, fnorm: f64) -> [f64; 6] {
        let modes = rigid_modes(mesh);
        std::array::from_fn(|k| {
            let rn = modes[k].iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
            let scale = fnorm * rn;
            if scale == 0.0 {
                0.0
            } else {
                self.apply(&modes[k]) / scale
            }
        })
    }

    /// Subtracts the lumped-mass image of a rigid field so that all six rigid
    /// residuals vanish.
    pub fn project(&self, mesh: &TetMesh) -> NodalLoad {
        let mass = lumped_volumes(mesh);
        let modes = rigid_modes(mesh);
        let weighted: Vec<Vec<Vector3<f64>>> = modes
            .iter()
            .map(|r| r.iter().zip(&mass).map(|(x, m)| *m * x).collect())
            .collect();
        let mut gram = Matrix6::zeros();
        let mut rhs = SVector::<f64, 6>::zeros();
        for j in 0..6 {
            rhs[j] = self.apply(&modes[j]);
            for k in 0..6 {
                gram[(j, k)] = weighted[k].iter().zip(&modes[j]).map(|(a, b)| a.dot(b)).sum();
            }
        }
        let alpha = gram
            .cholesky()
            .expect("rigid modes are independent on a tetrahedral mesh")
            .solve(&rhs);
        let mut values = self.values.clone();
        for (k, w) in weighted.iter().enumerate() {
            for (v, x) in values.iter_mut().zip(w) {
                *v -= alpha[k] * x;
            }
        }
        NodalLoad { values }
    }
}

/// Volume of the lumped mass attached to each vertex (a quarter of each
/// incident tet).
pub fn lumped_volumes(mesh: &TetMesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.n_vertices()];
    for (t, tet) in mesh.tets().iter().enumerate() {
        let v = mesh.tet_volume(t) / 4.0;
        for &i in tet {
            m[i] += v;
        }
    }
    m
}

/// Nodal values of the three translations and the three infinitesimal
/// rotations about the centroid.
pub fn rigid_modes(mesh: &TetMesh) -> [Vec<Vector3<f64>>; 6] {
    let c = mesh.centroid();
    std::array::from_fn(|k| {
        let axis = Vector3::ith(k % 3, 1.0);
        mesh.vertices()
            .iter()
            .map(|x| if k < 3 { axis } else { axis.cross(&(x - c)) })
            .collect()
    })
}

fn integrate_loads(mesh: &TetMesh, loads: &LoadData) -> NodalLoad {
    let mut values = vec![Vector3::zeros(); mesh.n_vertices()];
    let tet_rule: &[([f64; 4], f64)] = match loads.volume_order {
        QuadratureOrder::One => &[([0.25; 4], 1.0)],
        QuadratureOrder::Two => &TET4,
    };
    for (t, tet) in mesh.tets().iter().enumerate() {
        let p = mesh.tet_points(t);
        let vol = mesh.tet_volume(t);
        for (l, w) in tet_rule {
            let x = Point::from(l.iter().zip(&p).map(|(l, p)| *l * p.coords).sum::<Vector3<f64>>());
            let f = (loads.body_force)(&x);
            for k in 0..4 {
                values[tet[k]] += w * vol * l[k] * f;
            }
        }
    }
    let tri_rule: &[([f64; 3], f64)] = match loads.surface_order {
        QuadratureOrder::One => &[([1.0 / 3.0; 3], 1.0)],
        QuadratureOrder::Two => &TRI3,
    };
    for face in mesh.boundary_faces() {
        let (n, area) = mesh.face_normal_area(face);
        let p = face.map(|i| mesh.vertices()[i]);
        for (l, w) in tri_rule {
            let x = Point::from(l.iter().zip(&p).map(|(l, p)| *l * p.coords).sum::<Vector3<f64>>());
            let g = (loads.traction)(&x, &n);
            for k in 0..3 {
                values[face[k]] += w * area * l[k] * g;
            }
        }
    }
    NodalLoad { values }
}

/// The nodal load vector without any compatibility check.
pub fn nodal_loads(mesh: &TetMesh, loads: &LoadData) -> NodalLoad {
    integrate_loads(mesh, loads)
}

/// `L(r_k)` for the six canonical rigid modes.
pub fn compatibility_residuals(mesh: &TetMesh, loads: &LoadData) -> [f64; 6] {
    nodal_loads(mesh, loads).rigid_residuals(mesh)
}

/// The same loads, marked for rigid-component removal at assembly.
pub fn project_loads(loads: &LoadData) -> LoadData {
    LoadData {
        project: true,
        ..loads.clone()
    }
}

/// Nodal loads ready for a solve: projected if requested, and refused when
/// any relative rigid residual exceeds the tolerance.
pub fn prepare_loads(mesh: &TetMesh, loads: &LoadData) -> Result<NodalLoad> {
    let mut f = nodal_loads(mesh, loads);
    // measured against the loads as given, so a projection that removes
    // nearly everything is not judged against its own rounding
    let scale = f.norm();
    if loads.project {
        f = f.project(mesh);
    }
    let rel = f.scaled_residuals(mesh, scale);
    if rel.iter().any(|r| !(r.abs() <= loads.compat_tol)) {
        return Err(Error::IncompatibleLoads {
            residuals: f.rigid_residuals(mesh),
            tolerance: loads.compat_tol,
        });
    }
    Ok(f)
}

/// How the rigid-motion indeterminacy of a displacement was removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// `sum v = 0` and `sum (x - c) ^ v = 0`.
    Centered,
    /// Six nodal components held at zero (global DOF indices `3 * vertex + axis`).
    Pinned([usize; 6]),
}

/// Continuous piecewise-affine displacement given by its nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Field {
    pub values: Vec<Vector3<f64>>,
    pub gauge: Gauge,
}

impl P1Field {
    pub fn zeros(n: usize) -> Self {
        P1Field {
            values: vec![Vector3::zeros(); n],
            gauge: Gauge::Centered,
        }
    }

    /// `max(|sum v|, |sum (x - c) ^ v|)`
    pub fn gauge_residual(&self, mesh: &TetMesh) -> f64 {
        let c = mesh.centroid();
        let mut s = Vector3::zeros();
        let mut r = Vector3::zeros();
        for (x, v) in mesh.vertices().iter().zip(&self.values) {
            s += v;
            r += (x - c).cross(v);
        }
        s.norm().max(r.norm())
    }
}

/// Symmetric-gradient operator of a tet: 12 nodal values (vertex-major)
/// to 6 tensor components.
fn strain_operator(grads: &[Vector3<f64>; 4]) -> SMatrix<f64, 6, 12> {
    let mut b = SMatrix::<f64, 6, 12>::zeros();
    for (k, g) in grads.iter().enumerate() {
        let c = 3 * k;
        b[(0, c)] = g.x;
        b[(1, c + 1)] = g.y;
        b[(2, c + 2)] = g.z;
        // e12
        b[(3, c)] = 0.5 * g.y;
        b[(3, c + 1)] = 0.5 * g.x;
        // e13
        b[(4, c)] = 0.5 * g.z;
        b[(4, c + 2)] = 0.5 * g.x;
        // e23
        b[(5, c + 1)] = 0.5 * g.z;
        b[(5, c + 2)] = 0.5 * g.y;
    }
    b
}

fn tet_strain_operator(mesh: &TetMesh, t: usize) -> Result<SMatrix<f64, 6, 12>> {
    barycentric_gradients(&mesh.tet_points(t))
        .map(|g| strain_operator(&g))
        .ok_or(Error::SingularLocalMap { tet: t })
}

fn gather(mesh: &TetMesh, t: usize, v: &[f64]) -> SVector<f64, 12> {
    let tet = mesh.tets()[t];
    SVector::from_fn(|r, _| v[3 * tet[r / 3] + r % 3])
}

fn scatter(mesh: &TetMesh, t: usize, local: &SVector<f64, 12>, out: &mut [f64]) {
    let tet = mesh.tets()[t];
    for r in 0..12 {
        out[3 * tet[r / 3] + r % 3] += local[r];
    }
}

/// `sum_T |T| B_T' Q B_T` over nodal displacements.
fn displacement_stiffness(mesh: &TetMesh, q: &Matrix6<f64>, exec: Execution) -> Result<CsrMatrix> {
    let locals = try_map_indexed(exec, mesh.n_tets(), |t| {
        let b = tet_strain_operator(mesh, t)?;
        Ok::<_, Error>(mesh.tet_volume(t) * b.transpose() * q * b)
    })?;
    let n = 3 * mesh.n_vertices();
    let mut triplets = Vec::with_capacity(144 * mesh.n_tets());
    for (t, k) in locals.iter().enumerate() {
        let tet = mesh.tets()[t];
        for r in 0..12 {
            for c in 0..12 {
                triplets.push((3 * tet[r / 3] + r % 3, 3 * tet[c / 3] + c % 3, k[(r, c)]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, triplets))
}

/// Standard piecewise-affine elasticity stiffness.
pub fn p1_stiffness(mesh: &TetMesh, mat: &Material) -> Result<CsrMatrix> {
    displacement_stiffness(mesh, &mat.energy_weights(), Execution::default())
}

/// Solver for `K v = b` where the kernel of the symmetric matrix `K` is
/// exactly the rigid motions. Results satisfy the centered gauge, and equal
/// the solution of the system bordered by the six gauge conditions.
#[derive(Debug, Clone)]
pub struct GaugedSolver {
    factor: LdlFactor,
    pinned: [usize; 6],
    /// compressed index of each free DOF, `usize::MAX` if pinned
    free_index: Vec<usize>,
    modes: Vec<Vec<f64>>,
    gram: nalgebra::Cholesky<f64, nalgebra::Const<6>>,
}

impl GaugedSolver {
    pub fn new(mesh: &TetMesh, k: &CsrMatrix) -> Result<Self> {
        let n = 3 * mesh.n_vertices();
        if k.nrows() != n || k.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "displacement stiffness",
                expected: n,
                found: k.nrows(),
            });
        }
        let pinned = pin_dofs(mesh);
        let mut free_index = vec![0; n];
        let mut next = 0;
        for (i, f) in free_index.iter_mut().enumerate() {
            if pinned.contains(&i) {
                *f = usize::MAX;
            } else {
                *f = next;
                next += 1;
            }
        }
        let triplets = k
            .triplets()
            .filter(|&(i, j, _)| free_index[i] != usize::MAX && free_index[j] != usize::MAX)
            .map(|(i, j, v)| (free_index[i], free_index[j], v))
            .collect();
        let reduced = CsrMatrix::from_triplets(next, next, triplets);
        let factor = LdlFactor::new(&reduced)?;
        let (pos, neg) = factor.inertia();
        if neg != 0 || pos != next {
            return Err(Error::Factorization(format!(
                "gauge-pinned stiffness is not positive definite ({pos} positive, {neg} negative pivots)"
            )));
        }
        let modes: Vec<Vec<f64>> = rigid_modes(mesh)
            .iter()
            .map(|r| r.iter().flat_map(|x| [x.x, x.y, x.z]).collect())
            .collect();
        let gram = Matrix6::from_fn(|i, j| dot(&modes[i], &modes[j]))
            .cholesky()
            .ok_or_else(|| Error::Factorization("rigid modes are dependent".into()))?;
        Ok(GaugedSolver {
            factor,
            pinned,
            free_index,
            modes,
            gram,
        })
    }

    pub fn pinned_dofs(&self) -> [usize; 6] {
        self.pinned
    }

    /// Removes the rigid component in the Euclidean sense.
    pub fn project(&self, v: &mut [f64]) {
        let rhs = SVector::<f64, 6>::from_fn(|k, _| dot(&self.modes[k], v));
        let a = self.gram.solve(&rhs);
        for (k, m) in self.modes.iter().enumerate() {
            for (x, y) in v.iter_mut().zip(m) {
                *x -= a[k] * y;
            }
        }
    }

    /// Solution with the six pinned components at zero. The rigid component
    /// of `b` is removed first.
    pub fn solve_pinned(&self, b: &[f64]) -> Vec<f64> {
        let mut b = b.to_vec();
        self.project(&mut b);
        let reduced: Vec<f64> = b
            .iter()
            .zip(&self.free_index)
            .filter(|(_, &f)| f != usize::MAX)
            .map(|(x, _)| *x)
            .collect();
        let y = self.factor.solve(&reduced);
        self.free_index
            .iter()
            .map(|&f| if f == usize::MAX { 0.0 } else { y[f] })
            .collect()
    }

    /// Solution in the centered gauge.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut v = self.solve_pinned(b);
        self.project(&mut v);
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Six nodal components whose vanishing removes every rigid motion: all of
/// one vertex, two of the farthest vertex, one of a third off the line.
fn pin_dofs(mesh: &TetMesh) -> [usize; 6] {
    let x = mesh.vertices();
    let p0 = 0;
    let p1 = (0..x.len())
        .max_by(|&a, &b| (x[a] - x[p0]).norm().total_cmp(&(x[b] - x[p0]).norm()))
        .expect("non-empty mesh");
    let d1 = x[p1] - x[p0];
    let u = d1.normalize();
    let off_line = |a: usize| u.cross(&(x[a] - x[p0])).norm();
    let p2 = (0..x.len())
        .max_by(|&a, &b| off_line(a).total_cmp(&off_line(b)))
        .expect("non-empty mesh");
    let drop = d1.iamax();
    let keep: Vec<usize> = (0..3).filter(|&c| c != drop).collect();
    let axis = u.cross(&(x[p2] - x[p0])).iamax();
    [
        3 * p0,
        3 * p0 + 1,
        3 * p0 + 2,
        3 * p1 + keep[0],
        3 * p1 + keep[1],
        3 * p2 + axis,
    ]
}

fn to_vectors(v: &[f64]) -> Vec<Vector3<f64>> {
    v.chunks_exact(3).map(Vector3::from_column_slice).collect()
}

fn flatten(v: &[Vector3<f64>]) -> Vec<f64> {
    v.iter().flat_map(|x| [x.x, x.y, x.z]).collect()
}

/// Least-squares map from edge strains to displacements:
/// `v = argmin sum_T |T| |sym grad v - e_T|^2` in the centered gauge.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    solver: GaugedSolver,
    strain_ops: Vec<SMatrix<f64, 6, 12>>,
    dof_inverses: Vec<Matrix6<f64>>,
}

impl Reconstruction {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        Self::with_execution(mesh, Execution::default())
    }

    pub fn with_execution(mesh: &TetMesh, exec: Execution) -> Result<Self> {
        let k = displacement_stiffness(mesh, &frobenius_weights(), exec)?;
        let solver = GaugedSolver::new(mesh, &k)?;
        let strain_ops = try_map_indexed(exec, mesh.n_tets(), |t| tet_strain_operator(mesh, t))?;
        let dof_inverses = try_map_indexed(exec, mesh.n_tets(), |t| {
            LocalDofMap::for_tet(mesh, t).map(|m| *m.inverse())
        })?;
        Ok(Reconstruction {
            solver,
            strain_ops,
            dof_inverses,
        })
    }

    pub fn solver(&self) -> &GaugedSolver {
        &self.solver
    }

    fn tet_strain(&self, mesh: &TetMesh, t: usize, d: &[f64]) -> SVector<f64, 6> {
        self.dof_inverses[t] * SVector::from(local_dofs(mesh, t, d))
    }

    /// `sum_T |T| B_T' W e_T(d)`
    fn rhs(&self, mesh: &TetMesh, d: &[f64]) -> Vec<f64> {
        let w = frobenius_weights();
        let mut b = vec![0.0; 3 * mesh.n_vertices()];
        for t in 0..mesh.n_tets() {
            let local = mesh.tet_volume(t) * self.strain_ops[t].transpose() * (w * self.tet_strain(mesh, t, d));
            scatter(mesh, t, &local, &mut b);
        }
        b
    }

    /// `(sum_T |T| |B_T v - e_T|_F^2)^(1/2)`
    pub fn residual(&self, mesh: &TetMesh, v: &[f64], d: &[f64]) -> f64 {
        let w = frobenius_weights();
        (0..mesh.n_tets())
            .map(|t| {
                let r = self.strain_ops[t] * gather(mesh, t, v) - self.tet_strain(mesh, t, d);
                mesh.tet_volume(t) * r.dot(&(w * r))
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply(&self, mesh: &TetMesh, d: &EdgeDofVector) -> Result<(P1Field, f64)> {
        self.apply_gauged(mesh, d, false)
    }

    /// As [`Reconstruction::apply`], optionally leaving the result in the
    /// pinned gauge instead of the centered one.
    pub fn apply_gauged(&self, mesh: &TetMesh, d: &EdgeDofVector, pinned: bool) -> Result<(P1Field, f64)> {
        d.check_len(mesh)?;
        let b = self.rhs(mesh, d);
        let (v, gauge) = if pinned {
            (self.solver.solve_pinned(&b), Gauge::Pinned(self.solver.pinned))
        } else {
            (self.solver.solve(&b), Gauge::Centered)
        };
        let res = self.residual(mesh, &v, d);
        Ok((
            P1Field {
                values: to_vectors(&v),
                gauge,
            },
            res,
        ))
    }

    /// The linear form `d -> F . v(d)` over edge DOFs, by one adjoint solve.
    pub fn adjoint(&self, mesh: &TetMesh, f: &NodalLoad) -> LoadForm {
        let w = frobenius_weights();
        let y = self.solver.solve(&flatten(&f.values));
        let mut l = vec![0.0; mesh.n_edges()];
        for t in 0..mesh.n_tets() {
            let s = mesh.tet_volume(t) * (w * (self.strain_ops[t] * gather(mesh, t, &y)));
            let local = self.dof_inverses[t].transpose() * s;
            for (k, le) in mesh.tet_edges(t).iter().enumerate() {
                l[le.edge] += local[k];
            }
        }
        LoadForm(l)
    }
}

pub fn reconstruct_displacement(mesh: &TetMesh, d: &EdgeDofVector) -> Result<(P1Field, f64)> {
    Reconstruction::new(mesh)?.apply(mesh, d)
}

/// A linear form over edge DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadForm(pub Vec<f64>);

impl LoadForm {
    pub fn zeros(n: usize) -> Self {
        LoadForm(vec![0.0; n])
    }

    pub fn apply(&self, d: &[f64]) -> f64 {
        dot(&self.0, d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `l(e) = L(v(e))` for the reconstructed displacement `v(e)`.
pub fn load_vector(mesh: &TetMesh, loads: &LoadData) -> Result<LoadForm> {
    let f = prepare_loads(mesh, loads)?;
    Ok(Reconstruction::new(mesh)?.adjoint(mesh, &f))
}

/// `1/2 d' M d - l . d`
pub fn evaluate_j(m: &EnergyForm, l: &LoadForm, d: &[f64]) -> Result<f64> {
    if d.len() != m.dim() || l.0.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            what: "edge DOF vector",
            expected: m.dim(),
            found: if d.len() != m.dim() { d.len() } else { l.0.len() },
        });
    }
    Ok(0.5 * m.energy(d) - l.apply(d))
}

/// Per-tet stresses of per-tet strains.
pub fn stresses(mat: &Material, strains: &[SymTensor3]) -> Vec<SymTensor3> {
    map_indexed(Execution::default(), strains.len(), |t| mat.stress(&strains[t]))
}
