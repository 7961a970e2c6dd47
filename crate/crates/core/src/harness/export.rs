//! VTK and CSV writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::study::ConvergenceTable;
use crate::elasticity::P1Field;
use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::strain_space::SymTensor3;

const VTK_TETRA: u8 = 10;

fn write_tensors(out: &mut String, name: &str, values: &[SymTensor3]) {
    let _ = writeln!(out, "TENSORS6 {name} double");
    for t in values {
        let [xx, yy, zz, xy, xz, yz] = t.0;
        // VTK order: xx yy zz xy yz xz
        let _ = writeln!(out, "{xx:e} {yy:e} {zz:e} {xy:e} {yz:e} {xz:e}");
    }
}

/// Legacy ASCII unstructured grid with per-tet strain and stress and nodal
/// displacement.
pub fn vtk_string(
    mesh: &TetMesh,
    strain: &[SymTensor3],
    stress: &[SymTensor3],
    displacement: &P1Field,
) -> Result<String> {
    for (what, found, expected) in [
        ("per-tet strains", strain.len(), mesh.n_tets()),
        ("per-tet stresses", stress.len(), mesh.n_tets()),
        ("nodal displacement", displacement.values.len(), mesh.n_vertices()),
    ] {
        if found != expected {
            return Err(Error::DimensionMismatch { what, expected, found });
        }
    }
    let nv = mesh.n_vertices();
    let nt = mesh.n_tets();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nstrainfem\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:e} {:e} {:e}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "CELLS {nt} {}", 5 * nt);
    for t in mesh.tets() {
        let _ = writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{VTK_TETRA}");
    }
    let _ = writeln!(out, "CELL_DATA {nt}");
    write_tensors(&mut out, "strain", strain);
    write_tensors(&mut out, "stress", stress);
    let _ = writeln!(out, "POINT_DATA {nv}");
    out.push_str("VECTORS displacement double\n");
    for v in &displacement.values {
        let _ = writeln!(out, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    Ok(out)
}

pub fn export_vtk(
    mesh: &TetMesh,
    strain: &[SymTensor3],
    stress: &[SymTensor3],
    displacement: &P1Field,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = vtk_string(mesh, strain, stress, displacement)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const CSV_HEADER: &str = "n,h,err,rate,oracle_gap,seconds";

pub fn csv_string(table: &ConvergenceTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let rate = r.rate.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{rate},{:.16e},{:.16e}",
            r.n, r.h, r.err, r.oracle_gap, r.seconds
        );
    }
    out
}

pub fn export_csv(table: &ConvergenceTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, csv_string(table)).map_err(|e| Error::io(path, e))
}
