//! Manufactured solutions on the unit cube.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::elasticity::{LoadData, Material};
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::strain_space::SymTensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Smoothness {
    Affine,
    Polynomial,
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    /// `u = diag(1, -1, 0) x`
    Affine,
    /// Componentwise quadratics; constant body force, affine stress.
    Poly2,
    /// `u_i = sin(pi x1) sin(pi x2) sin(pi x3)` for each `i`.
    Trig,
}

impl CaseKind {
    pub const ALL: [CaseKind; 3] = [CaseKind::Affine, CaseKind::Poly2, CaseKind::Trig];

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Affine => "affine",
            CaseKind::Poly2 => "poly2",
            CaseKind::Trig => "trig",
        }
    }

    pub fn smoothness(self) -> Smoothness {
        match self {
            CaseKind::Affine => Smoothness::Affine,
            CaseKind::Poly2 => Smoothness::Polynomial,
            CaseKind::Trig => Smoothness::Trigonometric,
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(CaseKind::Affine),
            "poly2" => Ok(CaseKind::Poly2),
            "trig" => Ok(CaseKind::Trig),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

// u_i = A_i + sum_j B_ij x_j + 1/2 sum_jk H_ijk x_j x_k with H_ijk = H_ikj
const POLY_A: [f64; 3] = [0.1, -0.2, 0.05];
const POLY_B: [[f64; 3]; 3] = [[0.3, 0.1, -0.2], [0.0, -0.4, 0.25], [0.15, 0.05, 0.2]];
const POLY_H: [[[f64; 3]; 3]; 3] = [
    [[1.0, 0.5, -0.3], [0.5, -0.8, 0.2], [-0.3, 0.2, 0.6]],
    [[-0.4, 0.7, 0.1], [0.7, 0.9, -0.5], [0.1, -0.5, -0.2]],
    [[0.3, -0.1, 0.8], [-0.1, 0.4, 0.35], [0.8, 0.35, -0.7]],
];

/// An exact displacement with the body force and traction it implies for a
/// given material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub material: Material,
}

pub fn make_case(name: &str, material: Material) -> Result<ManufacturedCase> {
    Ok(ManufacturedCase {
        kind: name.parse()?,
        material,
    })
}

impl ManufacturedCase {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.kind.smoothness()
    }

    pub fn u(&self, x: &Point) -> Vector3<f64> {
        match self.kind {
            CaseKind::Affine => Vector3::new(x.x, -x.y, 0.0),
            CaseKind::Poly2 => Vector3::from_fn(|i, _| {
                let mut v = POLY_A[i];
                for j in 0..3 {
                    v += POLY_B[i][j] * x[j];
                    for k in 0..3 {
                        v += 0.5 * POLY_H[i][j][k] * x[j] * x[k];
                    }
                }
                v
            }),
            CaseKind::Trig => Vector3::repeat(trig_w(x)),
        }
    }

    /// Displacement gradient, `(i, j) = d_j u_i`.
    pub fn grad_u(&self, x: &Point) -> Matrix3<f64> {
        match self.kind {
            CaseKind::Affine => Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 0.0)),
            CaseKind::Poly2 => Matrix3::from_fn(|i, j| {
                POLY_B[i][j] + (0..3).map(|k| POLY_H[i][j][k] * x[k]).sum::<f64>()
            }),
            CaseKind::Trig => {
                let g = trig_grad(x);
                Matrix3::from_fn(|_, j| g[j])
            }
        }
    }

    pub fn grad_s_u(&self, x: &Point) -> SymTensor3 {
        SymTensor3::sym(&self.grad_u(x))
    }

    pub fn stress(&self, x: &Point) -> SymTensor3 {
        self.material.stress(&self.grad_s_u(x))
    }

    /// `-div sigma(u)`
    pub fn body_force(&self, x: &Point) -> Vector3<f64> {
        let (lambda, mu) = (self.material.lambda, self.material.mu);
        match self.kind {
            CaseKind::Affine => Vector3::zeros(),
            CaseKind::Poly2 => {
                let h = &POLY_H;
                -Vector3::from_fn(|i, _| {
                    (0..3)
                        .map(|j| lambda * h[j][j][i] + mu * (h[i][j][j] + h[j][i][j]))
                        .sum::<f64>()
                })
            }
            CaseKind::Trig => {
                let h = trig_hessian(x);
                let lap = h.trace();
                -Vector3::from_fn(|i, _| {
                    let row: f64 = (0..3).map(|j| h[(i, j)]).sum();
                    lambda * row + mu * (lap + row)
                })
            }
        }
    }

    /// `sigma(u) n`
    pub fn traction(&self, x: &Point, n: &Vector3<f64>) -> Vector3<f64> {
        self.stress(x).to_matrix() * n
    }

    /// Loads for the pure-traction solve. The rigid component left over by
    /// quadrature is removed.
    pub fn loads(&self) -> LoadData {
        let (a, b) = (*self, *self);
        let mut loads = LoadData::new(move |x| a.body_force(x), move |x, n| b.traction(x, n));
        loads.project = true;
        loads
    }

    /// The same loads without projection.
    pub fn raw_loads(&self) -> LoadData {
        LoadData {
            project: false,
            ..self.loads()
        }
    }
}

fn trig_w(x: &Point) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin() * (PI * x.z).sin()
}

fn trig_grad(x: &Point) -> Vector3<f64> {
    let s = x.coords.map(|t| (PI * t).sin());
    let c = x.coords.map(|t| (PI * t).cos());
    PI * Vector3::new(c.x * s.y * s.z, s.x * c.y * s.z, s.x * s.y * c.z)
}

fn trig_hessian(x: &Point) -> Matrix3<f64> {
    let s = x.coords.map(|t| (PI * t).sin());
    let c = x.coords.map(|t| (PI * t).cos());
    let w = s.x * s.y * s.z;
    let pi2 = PI * PI;
    Matrix3::from_fn(|j, k| {
        if j == k {
            -pi2 * w
        } else {
            let l = 3 - j - k;
            pi2 * c[j] * c[k] * s[l]
        }
    })
}
