mod common;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use strainfem::constraints::{assemble_constraints, membership_residual, patch_constraints, patch_null_space};
use strainfem::elasticity::{
    apply_material, assemble_energy, evaluate_j, LoadData, Material, Reconstruction,
};
use strainfem::mesh::vertex_patch;
use strainfem::solvers::{
    build_saddle_system, compare_to_oracle, solve_classical, SaddleOptions,
};
use strainfem::strain_space::{edge_dof, strain_of_p1, tensor_from_dofs, tet_edge_dofs, EdgeSegment};
use strainfem::{generate_cube_mesh, Execution, Point, SymTensor3};

use common::{jittered_cube, random_field};

fn tensor() -> impl Strategy<Value = SymTensor3> {
    prop::array::uniform6(-10.0..10.0f64).prop_map(SymTensor3)
}

fn point() -> impl Strategy<Value = Point> {
    prop::array::uniform3(-2.0..2.0f64).prop_map(|[x, y, z]| Point::new(x, y, z))
}

/// Tets whose volume is not tiny relative to their size.
fn shaped_tet() -> impl Strategy<Value = [Point; 4]> {
    prop::array::uniform4(point()).prop_filter("well shaped", |p| {
        let vol = (p[1] - p[0]).cross(&(p[2] - p[0])).dot(&(p[3] - p[0])).abs() / 6.0;
        let diam = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| (p[i] - p[j]).norm())
            .fold(0.0, f64::max);
        vol > 1e-2 * diam.powi(3)
    })
}

fn material() -> impl Strategy<Value = Material> {
    (0.1..10.0f64, 0.1..10.0f64).prop_map(|(l, m)| Material::new(l, m).unwrap())
}

/// Affine body force and affine traction with random coefficients, made
/// compatible by projection.
fn random_loads() -> impl Strategy<Value = LoadData> {
    (prop::array::uniform12(-1.0..1.0f64), prop::array::uniform12(-1.0..1.0f64)).prop_map(|(a, b)| {
        let f = move |x: &Point| {
            Vector3::from_fn(|i, _| a[4 * i] + a[4 * i + 1] * x.x + a[4 * i + 2] * x.y + a[4 * i + 3] * x.z)
        };
        let g = move |x: &Point, n: &Vector3<f64>| {
            Vector3::from_fn(|i, _| b[4 * i] * n[i] + b[4 * i + 1] * x.x + b[4 * i + 2] * x.y + b[4 * i + 3] * x.z)
        };
        let mut loads = LoadData::new(f, g);
        loads.project = true;
        loads
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_dof_ignores_orientation_and_is_linear(a in point(), b in point(), e in tensor(), f in tensor(), s in -3.0..3.0f64) {
        prop_assume!((b - a).norm() > 1e-3);
        let fwd = EdgeSegment::new(&a, &b).unwrap();
        let rev = EdgeSegment::new(&b, &a).unwrap();
        prop_assert!((edge_dof(&fwd, &e) - edge_dof(&rev, &e)).abs() <= 1e-12 * (1.0 + edge_dof(&fwd, &e).abs()));
        let lhs = edge_dof(&fwd, &(e + s * f));
        let rhs = edge_dof(&fwd, &e) + s * edge_dof(&fwd, &f);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dof_round_trip(p in shaped_tet(), e in tensor()) {
        let back = tensor_from_dofs(&p, &tet_edge_dofs(&p, &e).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&e) <= 1e-10 * e.norm().max(1.0));
    }

    #[test]
    fn material_is_linear_and_scales_trace(m in material(), e in tensor(), f in tensor(), s in -2.0..2.0f64) {
        let lhs = apply_material(&m, &(e + s * f));
        let rhs = apply_material(&m, &e) + s * apply_material(&m, &f);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * (1.0 + lhs.norm()));
        let tr = apply_material(&m, &e).trace();
        prop_assert!((tr - (3.0 * m.lambda + 2.0 * m.mu) * e.trace()).abs() <= 1e-13 * (1.0 + tr.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constraint_counts_survive_rigid_transforms(
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in 0.0..6.3f64,
        shift in prop::array::uniform3(-5.0..5.0f64),
        scale in 0.1..10.0f64,
    ) {
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 1e-3);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let mesh = generate_cube_mesh(2)
            .map_vertices(|p| Point::from(scale * (rot * p.coords) + Vector3::from(shift)))
            .unwrap();
        for a in 0..mesh.n_vertices() {
            let patch = vertex_patch(&mesh, a).unwrap();
            prop_assert_eq!(patch_null_space(&mesh, &patch).len(), patch.constraint_count());
        }
    }

    #[test]
    fn constraints_annihilate_compatible_strains(seed in any::<u64>()) {
        let mesh = jittered_cube(2, 0.2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, _) = strain_of_p1(&mesh, &random_field(mesh.n_vertices(), &mut rng)).unwrap();
        let c = assemble_constraints(&mesh).unwrap();
        prop_assert!(membership_residual(&c, &d).unwrap() < 1e-12);
        for a in 0..mesh.n_vertices() {
            let set = patch_constraints(&mesh, &vertex_patch(&mesh, a).unwrap()).unwrap();
            prop_assert!(set.apply(&d).iter().all(|x| x.abs() < 1e-10 * d.norm().max(1.0)));
        }
    }

    #[test]
    fn energy_is_nonnegative(m in material(), seed in any::<u64>()) {
        let mesh = jittered_cube(2, 0.2, seed);
        let form = assemble_energy(&mesh, &m).unwrap();
        prop_assert!(form.matrix().asymmetry() <= 1e-14 * form.matrix().max_abs_diagonal());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let d: Vec<f64> = (0..mesh.n_edges()).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assert!(form.energy(&d) >= 0.0);
    }

    #[test]
    fn reconstruction_inverts_strain_map(seed in any::<u64>()) {
        let mesh = jittered_cube(2, 0.2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (d, _) = strain_of_p1(&mesh, &random_field(mesh.n_vertices(), &mut rng)).unwrap();
        let rec = Reconstruction::new(&mesh).unwrap();
        let (u, res) = rec.apply(&mesh, &d).unwrap();
        prop_assert!(res < 1e-10 * d.norm());
        let (back, _) = strain_of_p1(&mesh, &u.values).unwrap();
        prop_assert!(back.iter().zip(d.iter()).all(|(a, b)| (a - b).abs() < 1e-10 * d.norm().max(1.0)));
        prop_assert!(u.gauge_residual(&mesh) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn matches_classical_solver(m in material(), loads in random_loads(), n in 1usize..=2) {
        let mesh = generate_cube_mesh(n);
        let sys = build_saddle_system(&mesh, &m, &loads, Execution::default()).unwrap();
        let report = sys.solve(&SaddleOptions::default()).unwrap();
        let oracle = solve_classical(&mesh, &m, &loads).unwrap();
        prop_assert!(compare_to_oracle(&mesh, &report, &oracle).unwrap() < 1e-9);
        // objective identity at the minimizer
        let half = -0.5 * sys.load.apply(&report.dofs);
        prop_assert!((report.objective - half).abs() <= 1e-10 * half.abs().max(1e-300));
        prop_assert!(report.constraint_residual < 1e-10 * report.dofs.norm().max(1.0));
    }

    #[test]
    fn primal_solution_is_unique(seed in any::<u64>(), loads in random_loads()) {
        use rand::Rng;
        let mesh = jittered_cube(2, 0.2, seed);
        let sys = build_saddle_system(&mesh, &Material::new(1.0, 1.0).unwrap(), &loads, Execution::default()).unwrap();
        let a = sys.solve(&SaddleOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0 = (0..sys.constraints.nrows()).map(|_| rng.random_range(-10.0..10.0)).collect();
        let b = sys.solve(&SaddleOptions { initial_multipliers: Some(y0), ..Default::default() }).unwrap();
        let diff = a.dofs.iter().zip(b.dofs.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-12 * a.dofs.norm().max(1e-300));
    }

    #[test]
    fn load_form_is_gauge_independent(seed in any::<u64>(), loads in random_loads()) {
        let mesh = jittered_cube(2, 0.2, seed);
        let f = strainfem::elasticity::prepare_loads(&mesh, &loads).unwrap();
        let rec = Reconstruction::new(&mesh).unwrap();
        let l = rec.adjoint(&mesh, &f);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, _) = strain_of_p1(&mesh, &random_field(mesh.n_vertices(), &mut rng)).unwrap();
        let (centered, _) = rec.apply(&mesh, &d).unwrap();
        let (pinned, _) = rec.apply_gauged(&mesh, &d, true).unwrap();
        let a = f.apply(&centered.values);
        let b = f.apply(&pinned.values);
        let scale = a.abs().max(1e-300);
        prop_assert!((a - b).abs() <= 1e-12 * scale.max(f.norm()));
        prop_assert!((l.apply(&d) - a).abs() <= 1e-10 * scale.max(f.norm()));
        // j only depends on d
        let m = assemble_energy(&mesh, &Material::new(1.0, 1.0).unwrap()).unwrap();
        let j = evaluate_j(&m, &l, &d).unwrap();
        prop_assert!((j - (0.5 * m.energy(&d) - b)).abs() <= 1e-10 * j.abs().max(1.0));
    }
}

#[test]
fn sequential_and_parallel_solves_agree() {
    let mesh = generate_cube_mesh(3);
    let m = Material::new(2.0, 1.0).unwrap();
    let case = strainfem::harness::make_case("trig", m).unwrap();
    let a = build_saddle_system(&mesh, &m, &case.loads(), Execution::Sequential)
        .unwrap()
        .solve(&SaddleOptions::default())
        .unwrap();
    let b = build_saddle_system(&mesh, &m, &case.loads(), Execution::Parallel)
        .unwrap()
        .solve(&SaddleOptions::default())
        .unwrap();
    assert_eq!(a.dofs, b.dofs);
}
