//! Manufactured solutions, error norms, convergence studies and exporters.

pub mod cases;
pub mod export;
pub mod study;

pub use cases::{make_case, CaseKind, ManufacturedCase, Smoothness};
pub use export::{csv_string, export_csv, export_vtk, vtk_string, CSV_HEADER};
pub use study::{
    convergence_study, convergence_study_with, l2_strain_error, run_case, CaseSolution,
    ConvergenceRow, ConvergenceTable,
};
