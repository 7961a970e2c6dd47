//! TOML problem description: material plus either a named manufactured case
//! or polynomial load components.
//!
//! ```toml
//! lambda = 1.0
//! mu = 0.5
//! case = "trig"
//! ```
//!
//! or
//!
//! ```toml
//! lambda = 1.0
//! mu = 0.5
//! project = true
//!
//! [body_force]
//! z = [[-1.0, 0, 0, 0]]          # -1
//!
//! [traction]
//! x = [[2.0, 1, 0, 0], [1.0, 0, 0, 2]]   # 2 x + z^2
//! ```
//!
//! Each polynomial term is `[coefficient, px, py, pz]`. Traction terms are
//! functions of position only.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::elasticity::{LoadData, Material};
use crate::error::{Error, Result};
use crate::harness::{make_case, ManufacturedCase};
use crate::mesh::Point;

/// A monomial sum in three variables.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<[f64; 4]>);

impl Polynomial {
    pub fn eval(&self, x: &Point) -> f64 {
        self.0
            .iter()
            .map(|[c, px, py, pz]| c * x.x.powf(*px) * x.y.powf(*py) * x.z.powf(*pz))
            .sum()
    }

    fn validate(&self, what: &str) -> Result<()> {
        for term in &self.0 {
            if term[1..].iter().any(|p| *p < 0.0 || p.fract() != 0.0) || !term[0].is_finite() {
                return Err(Error::Config(format!(
                    "{what}: term {term:?} needs a finite coefficient and non-negative integer powers"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorPolynomial {
    #[serde(default)]
    pub x: Polynomial,
    #[serde(default)]
    pub y: Polynomial,
    #[serde(default)]
    pub z: Polynomial,
}

impl VectorPolynomial {
    pub fn eval(&self, p: &Point) -> Vector3<f64> {
        Vector3::new(self.x.eval(p), self.y.eval(p), self.z.eval(p))
    }

    fn validate(&self, what: &str) -> Result<()> {
        self.x.validate(what)?;
        self.y.validate(what)?;
        self.z.validate(what)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub lambda: f64,
    pub mu: f64,
    pub case: Option<String>,
    pub body_force: Option<VectorPolynomial>,
    pub traction: Option<VectorPolynomial>,
    pub project: Option<bool>,
    pub compat_tol: Option<f64>,
}

/// A fully resolved problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub material: Material,
    /// Present when the loads come from a manufactured case.
    pub case: Option<ManufacturedCase>,
    pub loads: LoadData,
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn resolve(&self) -> Result<Problem> {
        let material = Material::new(self.lambda, self.mu)?;
        let polynomial = self.body_force.is_some() || self.traction.is_some();
        let (case, mut loads) = match (&self.case, polynomial) {
            (Some(_), true) => {
                return Err(Error::Config(
                    "give either a case or polynomial loads, not both".into(),
                ))
            }
            (Some(name), false) => {
                let case = make_case(name, material)?;
                (Some(case), case.loads())
            }
            (None, _) => {
                let f = self.body_force.clone().unwrap_or_default();
                let g = self.traction.clone().unwrap_or_default();
                f.validate("body_force")?;
                g.validate("traction")?;
                (None, LoadData::new(move |x| f.eval(x), move |x, _| g.eval(x)))
            }
        };
        if let Some(p) = self.project {
            loads.project = p;
        }
        if let Some(tol) = self.compat_tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("compat_tol must be positive, got {tol}")));
            }
            loads.compat_tol = tol;
        }
        Ok(Problem {
            material,
            case,
            loads,
        })
    }
}
