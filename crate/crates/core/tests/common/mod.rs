#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strainfem::{generate_cube_mesh, EntityClass, Point, TetMesh};

/// Kuhn cube mesh with interior vertices moved by up to `amount * h` along
/// each axis; the boundary stays planar.
pub fn jittered_cube(n: usize, amount: f64, seed: u64) -> TetMesh {
    let mesh = generate_cube_mesh(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let shifts: Vec<Vector3<f64>> = (0..mesh.n_vertices())
        .map(|v| {
            if mesh.vertex_class(v) == EntityClass::Interior {
                Vector3::from_fn(|_, _| rng.random_range(-amount..amount) * h)
            } else {
                Vector3::zeros()
            }
        })
        .collect();
    let index = |p: &Point| mesh.vertices().iter().position(|q| q == p).unwrap();
    mesh.map_vertices(|p| p + shifts[index(p)]).unwrap()
}

pub fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

/// Random combination of the columns of `basis`.
pub fn random_combination(basis: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c = DVector::from_fn(basis.ncols(), |_, _| rng.random_range(-1.0..1.0));
    (basis * c).iter().copied().collect()
}
