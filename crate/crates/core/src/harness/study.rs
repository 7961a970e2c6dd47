use std::time::Instant;

use log::info;

use super::cases::ManufacturedCase;
use crate::elasticity::Material;
use crate::error::{Error, Result};
use crate::mesh::{generate_cube_mesh, TetMesh};
use crate::par::Execution;
use crate::quadrature::TET4;
use crate::solvers::{compare_to_oracle, solve_classical, solve_direct_with, SaddleOptions};
use crate::strain_space::{tet_tensors_with, SymTensor3};

/// `(sum_T int_T |eps(x) - eps_T|^2 dx)^(1/2)` with the 4-point rule per tet.
pub fn l2_strain_error(mesh: &TetMesh, strains: &[SymTensor3], case: &ManufacturedCase) -> Result<f64> {
    if strains.len() != mesh.n_tets() {
        return Err(Error::DimensionMismatch {
            what: "per-tet strains",
            expected: mesh.n_tets(),
            found: strains.len(),
        });
    }
    let mut sum = 0.0;
    for (t, e) in strains.iter().enumerate() {
        let p = mesh.tet_points(t);
        let vol = mesh.tet_volume(t);
        for (l, w) in &TET4 {
            let x = crate::mesh::Point::from(
                l.iter().zip(&p).map(|(l, p)| *l * p.coords).sum::<nalgebra::Vector3<f64>>(),
            );
            let diff = case.grad_s_u(&x) - *e;
            sum += w * vol * diff.ddot(&diff);
        }
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Largest tet diameter.
    pub h: f64,
    pub err: f64,
    /// `log2(err_prev / err) / log2(h_prev / h)`; `None` in the first row.
    pub rate: Option<f64>,
    /// Relative L2 gap to the classical solution on the same mesh.
    pub oracle_gap: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(case: impl Into<String>) -> Self {
        ConvergenceTable {
            case: case.into(),
            rows: Vec::new(),
        }
    }

    /// Appends a row and fills in its rate from the previous one.
    pub fn push(&mut self, n: usize, h: f64, err: f64, oracle_gap: f64, seconds: f64) {
        let rate = self
            .rows
            .last()
            .map(|p| (p.err / err).log2() / (p.h / h).log2());
        self.rows.push(ConvergenceRow {
            n,
            h,
            err,
            rate,
            oracle_gap,
            seconds,
        });
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    /// Least-squares slope of `log err` against `log h`; `None` with fewer
    /// than two rows.
    pub fn fitted_slope(&self) -> Option<f64> {
        if self.rows.len() < 2 {
            return None;
        }
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h.ln(), r.err.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err < w[0].err)
    }

    pub fn max_oracle_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.oracle_gap).fold(0.0, f64::max)
    }
}

/// Outcome of one mesh in a study.
#[derive(Debug, Clone)]
pub struct CaseSolution {
    pub mesh: TetMesh,
    pub strains: Vec<SymTensor3>,
    pub err: f64,
    pub oracle_gap: f64,
    pub seconds: f64,
}

/// Solves a case on the Kuhn cube mesh with `n` cells per side.
pub fn run_case(case: &ManufacturedCase, n: usize, exec: Execution) -> Result<CaseSolution> {
    let mesh = generate_cube_mesh(n);
    let start = Instant::now();
    let loads = case.loads();
    let report = solve_direct_with(&mesh, &case.material, &loads, exec, &SaddleOptions::default())?;
    let seconds = start.elapsed().as_secs_f64();
    let oracle = solve_classical(&mesh, &case.material, &loads)?;
    let oracle_gap = compare_to_oracle(&mesh, &report, &oracle)?;
    let strains = tet_tensors_with(&mesh, &report.dofs, exec)?;
    let err = l2_strain_error(&mesh, &strains, case)?;
    info!(
        "{} n={n}: err={err:.3e} gap={oracle_gap:.3e} kkt={} refinements={} {seconds:.2}s",
        case.name(),
        report.kkt_dim,
        report.refinements
    );
    Ok(CaseSolution {
        mesh,
        strains,
        err,
        oracle_gap,
        seconds,
    })
}

pub fn convergence_study(case: &ManufacturedCase, n_list: &[usize], mat: &Material) -> Result<ConvergenceTable> {
    convergence_study_with(case, n_list, mat, Execution::default())
}

pub fn convergence_study_with(
    case: &ManufacturedCase,
    n_list: &[usize],
    mat: &Material,
    exec: Execution,
) -> Result<ConvergenceTable> {
    if n_list.contains(&0) || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("mesh levels must be positive and increasing, got {n_list:?}")));
    }
    let case = ManufacturedCase {
        material: *mat,
        ..*case
    };
    let mut table = ConvergenceTable::new(case.name());
    for &n in n_list {
        let sol = run_case(&case, n, exec)?;
        table.push(n, sol.mesh.mesh_size(), sol.err, sol.oracle_gap, sol.seconds);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::cases::make_case;
    use crate::strain_space::tet_tensors;
    use crate::strain_space::interpolate;

    #[test]
    fn error_of_exact_constant_strain() {
        let mesh = generate_cube_mesh(2);
        let case = make_case("affine", Material::new(1.0, 1.0).unwrap()).unwrap();
        let d = interpolate(&mesh, |x| case.grad_s_u(x));
        let e = tet_tensors(&mesh, &d).unwrap();
        assert!(l2_strain_error(&mesh, &e, &case).unwrap() < 1e-12);
        let zero = vec![SymTensor3::ZERO; mesh.n_tets()];
        let err = l2_strain_error(&mesh, &zero, &case).unwrap();
        assert!((err - 2f64.sqrt()).abs() < 1e-14);
        assert!(l2_strain_error(&mesh, &zero[1..], &case).is_err());
    }

    #[test]
    fn table_rates() {
        let mut t = ConvergenceTable::new("x");
        t.push(2, 0.5, 0.4, 0.0, 0.0);
        assert_eq!(t.rows[0].rate, None);
        assert_eq!(t.fitted_slope(), None);
        t.push(4, 0.25, 0.2, 0.0, 0.0);
        t.push(8, 0.125, 0.1, 0.0, 0.0);
        assert!(t.rates().iter().all(|r| (r - 1.0).abs() < 1e-14));
        assert!((t.fitted_slope().unwrap() - 1.0).abs() < 1e-14);
        assert!(t.strictly_decreasing());
    }

    #[test]
    fn single_level_study() {
        let mat = Material::new(1.0, 1.0).unwrap();
        let case = make_case("affine", mat).unwrap();
        let t = convergence_study(&case, &[2], &mat).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].rate, None);
        assert!(t.rows[0].err < 1e-9);
        assert!((t.rows[0].h - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(convergence_study(&case, &[2, 2], &mat).is_err());
    }
}
