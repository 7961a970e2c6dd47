//! The constrained minimization over compatible edge strains, and the
//! classical displacement solver used as its reference.

use std::time::Instant;

use log::debug;

use crate::constraints::{assemble_constraints_with, ConstraintMatrix};
use crate::elasticity::{
    assemble_energy_with, evaluate_j, p1_stiffness, prepare_loads, EnergyForm, GaugedSolver,
    LoadData, LoadForm, Material, P1Field, Reconstruction,
};
use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::par::Execution;
use crate::sparse::{CsrMatrix, LdlFactor};
use crate::strain_space::{p1_strain, tet_tensors_with, EdgeDofVector, SymTensor3};

/// `min 1/2 d' M d - l . d` subject to `C d = 0`, with `C` possibly
/// row-redundant.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub energy: EnergyForm,
    pub constraints: ConstraintMatrix,
    pub load: LoadForm,
}

#[derive(Debug, Clone)]
pub struct SaddleOptions {
    /// Diagonal shift of the multiplier block, relative to `1 / max diag M`.
    pub regularization: f64,
    pub max_refinements: usize,
    /// Starting multipliers; the primal answer does not depend on them.
    pub initial_multipliers: Option<Vec<f64>>,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            regularization: 1e-8,
            max_refinements: 100,
            initial_multipliers: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub dofs: EdgeDofVector,
    pub multipliers: Vec<f64>,
    /// `j` at the solution.
    pub objective: f64,
    /// `|C d|`
    pub constraint_residual: f64,
    /// `|M d + C' y - l|`
    pub stationarity_residual: f64,
    pub refinements: usize,
    pub kkt_dim: usize,
    pub factor_nnz: usize,
    pub seconds: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SaddleSystem {
    pub fn n_dofs(&self) -> usize {
        self.energy.dim()
    }

    /// Solves the KKT system `[M C'; C 0]` by factoring the quasi-definite
    /// shift `[M C'; C -delta I]` and refining against the unshifted system.
    /// Starting from zero multipliers, every update stays in the range of `C`,
    /// so the multipliers converge to the minimum-norm choice.
    pub fn solve(&self, opts: &SaddleOptions) -> Result<SolveReport> {
        let start = Instant::now();
        let n = self.n_dofs();
        let c = self.constraints.matrix();
        let m = c.nrows();
        if c.ncols() != n || self.load.0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "saddle system blocks",
                expected: n,
                found: if c.ncols() != n { c.ncols() } else { self.load.0.len() },
            });
        }
        let scale = self.energy.matrix().max_abs_diagonal().max(f64::MIN_POSITIVE);
        let delta = opts.regularization / scale;

        let mut triplets: Vec<(usize, usize, f64)> = self.energy.matrix().triplets().collect();
        for (i, j, v) in c.triplets() {
            triplets.push((n + i, j, v));
            triplets.push((j, n + i, v));
        }
        for i in 0..m {
            triplets.push((n + i, n + i, -delta));
        }
        let kkt = CsrMatrix::from_triplets(n + m, n + m, triplets);
        let factor = LdlFactor::new(&kkt)?;
        let (pos, neg) = factor.inertia();
        if pos != n || neg != m {
            return Err(Error::Factorization(format!(
                "shifted KKT matrix has inertia ({pos}, {neg}), expected ({n}, {m})"
            )));
        }

        let mut d = vec![0.0; n];
        let mut y = match &opts.initial_multipliers {
            Some(y0) if y0.len() != m => {
                return Err(Error::DimensionMismatch {
                    what: "initial multipliers",
                    expected: m,
                    found: y0.len(),
                })
            }
            Some(y0) => y0.clone(),
            None => vec![0.0; m],
        };
        let lnorm = norm(&self.load.0);
        let mut refinements = 0;
        let mut best = f64::INFINITY;
        loop {
            // residual of the unshifted system
            let md = self.energy.matrix().mul_vec(&d);
            let cty = c.transpose_mul_vec(&y);
            let r1: Vec<f64> = (0..n).map(|i| self.load.0[i] - md[i] - cty[i]).collect();
            let r2: Vec<f64> = c.mul_vec(&d).iter().map(|x| -x).collect();
            let size = norm(&r1) / lnorm.max(scale * norm(&d)).max(f64::MIN_POSITIVE)
                + norm(&r2) / norm(&d).max(1.0);
            debug!("refinement {refinements}: scaled residual {size:e}");
            if size <= 1e-15 || refinements >= opts.max_refinements || size >= 0.5 * best && refinements > 2 {
                break;
            }
            best = best.min(size);
            let rhs: Vec<f64> = r1.into_iter().chain(r2).collect();
            let step = factor.solve(&rhs);
            for i in 0..n {
                d[i] += step[i];
            }
            for i in 0..m {
                y[i] += step[n + i];
            }
            refinements += 1;
        }

        let cd = c.mul_vec(&d);
        let constraint_residual = norm(&cd);
        let tolerance = 1e-10 * norm(&d).max(1.0);
        if !(constraint_residual < tolerance) {
            return Err(Error::ConstraintResidual {
                residual: constraint_residual,
                tolerance,
            });
        }
        let md = self.energy.matrix().mul_vec(&d);
        let cty = c.transpose_mul_vec(&y);
        let stationarity_residual = norm(&(0..n).map(|i| self.load.0[i] - md[i] - cty[i]).collect::<Vec<_>>());
        let objective = evaluate_j(&self.energy, &self.load, &d)?;
        Ok(SolveReport {
            dofs: EdgeDofVector::new(d),
            multipliers: y,
            objective,
            constraint_residual,
            stationarity_residual,
            refinements,
            kkt_dim: n + m,
            factor_nnz: factor.factor_nnz(),
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Assembles energy, constraints and load form for a mesh.
pub fn build_saddle_system(
    mesh: &TetMesh,
    mat: &Material,
    loads: &LoadData,
    exec: Execution,
) -> Result<SaddleSystem> {
    let f = prepare_loads(mesh, loads)?;
    let energy = assemble_energy_with(mesh, mat, exec)?;
    let constraints = assemble_constraints_with(mesh, exec)?;
    let load = Reconstruction::with_execution(mesh, exec)?.adjoint(mesh, &f);
    Ok(SaddleSystem {
        energy,
        constraints,
        load,
    })
}

/// Strain DOFs minimizing the energy over the compatible edge space.
pub fn solve_direct(mesh: &TetMesh, mat: &Material, loads: &LoadData) -> Result<SolveReport> {
    solve_direct_with(mesh, mat, loads, Execution::default(), &SaddleOptions::default())
}

pub fn solve_direct_with(
    mesh: &TetMesh,
    mat: &Material,
    loads: &LoadData,
    exec: Execution,
    opts: &SaddleOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let mut report = build_saddle_system(mesh, mat, loads, exec)?.solve(opts)?;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Piecewise-affine displacement minimizing the total potential energy, in
/// the centered gauge.
pub fn solve_classical(mesh: &TetMesh, mat: &Material, loads: &LoadData) -> Result<P1Field> {
    let f = prepare_loads(mesh, loads)?;
    let k = p1_stiffness(mesh, mat)?;
    let solver = GaugedSolver::new(mesh, &k)?;
    let b: Vec<f64> = f.values.iter().flat_map(|x| [x.x, x.y, x.z]).collect();
    let v = solver.solve(&b);
    Ok(P1Field {
        values: v.chunks_exact(3).map(nalgebra::Vector3::from_column_slice).collect(),
        gauge: crate::elasticity::Gauge::Centered,
    })
}

/// Per-tet symmetric gradients of a piecewise-affine field.
pub fn p1_strains(mesh: &TetMesh, field: &P1Field) -> Vec<SymTensor3> {
    (0..mesh.n_tets())
        .map(|t| p1_strain(&mesh.tet_points(t), &mesh.tets()[t].map(|i| field.values[i])))
        .collect()
}

/// `(sum_T |T| |a_T - b_T|^2)^(1/2)`
pub fn l2_distance(mesh: &TetMesh, a: &[SymTensor3], b: &[SymTensor3]) -> f64 {
    (0..mesh.n_tets())
        .map(|t| {
            let diff = a[t] - b[t];
            mesh.tet_volume(t) * diff.ddot(&diff)
        })
        .sum::<f64>()
        .sqrt()
}

/// Relative L2 gap between the strain solution and the strain of the
/// classical solution; the absolute norm of the strain solution when the
/// reference strain vanishes.
pub fn compare_to_oracle(mesh: &TetMesh, report: &SolveReport, oracle: &P1Field) -> Result<f64> {
    if oracle.values.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "reference displacement",
            expected: mesh.n_vertices(),
            found: oracle.values.len(),
        });
    }
    let eh = tet_tensors_with(mesh, &report.dofs, Execution::default())?;
    let eo = p1_strains(mesh, oracle);
    let zero = vec![SymTensor3::ZERO; mesh.n_tets()];
    let reference = l2_distance(mesh, &eo, &zero);
    let gap = l2_distance(mesh, &eh, &eo);
    if reference == 0.0 {
        Ok(l2_distance(mesh, &eh, &zero))
    } else {
        Ok(gap / reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::apply_material;
    use crate::mesh::generate_cube_mesh;
    use crate::strain_space::{interpolate, strain_of_p1, tet_tensors};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine_loads(mat: Material) -> LoadData {
        let sigma = apply_material(&mat, &SymTensor3::diag(1.0, -1.0, 0.0)).to_matrix();
        LoadData::new(|_| Vector3::zeros(), move |_, n| sigma * n)
    }

    fn smooth_loads() -> LoadData {
        crate::elasticity::project_loads(&LoadData::new(
            |x| Vector3::new((3.0 * x.y).sin(), x.x * x.z, 1.0 - x.y),
            |x, n| Vector3::new(n.x + x.z, n.y * x.x, n.z * x.y * x.y),
        ))
    }

    #[test]
    fn zero_loads_give_zero_strain() {
        let mesh = generate_cube_mesh(2);
        let mat = Material::new(1.0, 1.0).unwrap();
        let r = solve_direct(&mesh, &mat, &LoadData::zero()).unwrap();
        assert!(r.dofs.iter().all(|&x| x == 0.0));
        assert_eq!(r.objective, 0.0);
        let u = solve_classical(&mesh, &mat, &LoadData::zero()).unwrap();
        assert!(u.values.iter().all(|v| v.norm() == 0.0));
        assert!(compare_to_oracle(&mesh, &r, &u).unwrap() < 1e-12);
    }

    #[test]
    fn affine_patch_test() {
        for n in [1, 2, 3] {
            let mesh = generate_cube_mesh(n);
            let mat = Material::new(1.5, 0.7).unwrap();
            let r = solve_direct(&mesh, &mat, &affine_loads(mat)).unwrap();
            let exact = interpolate(&mesh, |_| SymTensor3::diag(1.0, -1.0, 0.0));
            let err = r.dofs.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n}: {err}");
            let u = solve_classical(&mesh, &mat, &affine_loads(mat)).unwrap();
            let c = mesh.centroid();
            for (x, v) in mesh.vertices().iter().zip(&u.values) {
                assert!((v - Vector3::new(x.x - c.x, c.y - x.y, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn matches_classical_solution() {
        for n in [1, 2, 3] {
            let mesh = generate_cube_mesh(n);
            let mat = Material::new(2.0, 0.5).unwrap();
            let r = solve_direct(&mesh, &mat, &smooth_loads()).unwrap();
            let u = solve_classical(&mesh, &mat, &smooth_loads()).unwrap();
            let gap = compare_to_oracle(&mesh, &r, &u).unwrap();
            assert!(gap < 1e-9, "n={n}: {gap}");
        }
    }

    #[test]
    fn mismatched_material_is_detected() {
        let mesh = generate_cube_mesh(2);
        let r = solve_direct(&mesh, &Material::new(2.0, 0.5).unwrap(), &smooth_loads()).unwrap();
        let u = solve_classical(&mesh, &Material::new(1.0, 0.5).unwrap(), &smooth_loads()).unwrap();
        assert!(compare_to_oracle(&mesh, &r, &u).unwrap() > 1e-3);
    }

    #[test]
    fn minimizer_properties() {
        let mesh = generate_cube_mesh(2);
        let mat = Material::new(1.0, 1.0).unwrap();
        let sys = build_saddle_system(&mesh, &mat, &smooth_loads(), Execution::default()).unwrap();
        let r = sys.solve(&SaddleOptions::default()).unwrap();
        // objective identity at a constrained minimizer
        let half = -0.5 * sys.load.apply(&r.dofs);
        assert!((r.objective - half).abs() < 1e-10 * half.abs());
        // feasible perturbations never decrease j
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v: Vec<_> = (0..mesh.n_vertices())
                .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let (delta, _) = strain_of_p1(&mesh, &v).unwrap();
            for t in [1e-3, -1e-3] {
                let d: Vec<f64> = r.dofs.iter().zip(delta.iter()).map(|(a, b)| a + t * b).collect();
                assert!(evaluate_j(&sys.energy, &sys.load, &d).unwrap() >= r.objective);
            }
        }
    }

    #[test]
    fn primal_solution_ignores_starting_multipliers() {
        let mesh = generate_cube_mesh(2);
        let mat = Material::new(1.0, 1.0).unwrap();
        let sys = build_saddle_system(&mesh, &mat, &smooth_loads(), Execution::default()).unwrap();
        let a = sys.solve(&SaddleOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y0 = (0..sys.constraints.nrows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = sys
            .solve(&SaddleOptions {
                initial_multipliers: Some(y0),
                ..Default::default()
            })
            .unwrap();
        let diff = norm(&a.dofs.iter().zip(b.dofs.iter()).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(diff < 1e-12 * a.dofs.norm(), "{diff}");
        // the default start selects the smaller multiplier
        assert!(norm(&a.multipliers) <= norm(&b.multipliers));
    }

    #[test]
    fn solution_strain_is_compatible() {
        let mesh = generate_cube_mesh(2);
        let mat = Material::new(1.0, 3.0).unwrap();
        let r = solve_direct(&mesh, &mat, &smooth_loads()).unwrap();
        let (u, res) = crate::elasticity::reconstruct_displacement(&mesh, &r.dofs).unwrap();
        assert!(res < 1e-10 * r.dofs.norm());
        let e = tet_tensors(&mesh, &r.dofs).unwrap();
        assert!(l2_distance(&mesh, &e, &p1_strains(&mesh, &u)) < 1e-10 * r.dofs.norm());
    }

    #[test]
    fn incompatible_loads_are_refused() {
        let mesh = generate_cube_mesh(1);
        let loads = LoadData::new(|_| Vector3::new(0.0, 0.0, -1.0), |_, _| Vector3::zeros());
        let mat = Material::new(1.0, 1.0).unwrap();
        assert!(matches!(solve_direct(&mesh, &mat, &loads), Err(Error::IncompatibleLoads { .. })));
        assert!(matches!(solve_classical(&mesh, &mat, &loads), Err(Error::IncompatibleLoads { .. })));
    }
}
