//! Grids, sampled fields and the basic operators acting on them.

mod calculus;
mod grid;
mod interp;
pub(crate) mod norms;
pub(crate) mod random;
pub(crate) mod spectral;
pub(crate) mod stencil;

use std::sync::Arc;

pub use calculus::{derivative, gradient, neg_laplacian_power};
pub use grid::{BoundaryKind, Domain, Grid, MIN_POINTS};
pub use interp::{interpolation_check, InequalityCheck, InterpolationReport};
pub use norms::{lp_norm, norms, NormReport};
pub use random::{random_field, RandomSpec};

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Real scalar samples on a grid. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let values = vec![0.0; grid.len()];
        Field { grid, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Field> {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_point(|i, x| values[i] = f(x));
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise linear combination `a*self + b*other` on the same grid.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        Field::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        )
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Field {
        debug_assert_eq!(grid.len(), values.len());
        Field { grid, values }
    }
}

/// A vector field with one component per spatial axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, components: Vec<Vec<f64>>) -> Result<VectorField> {
        if components.len() != grid.dim() {
            return Err(Error::InvalidParameter {
                name: "components".into(),
                reason: format!("{} components for a {}-dimensional grid", components.len(), grid.dim()),
            });
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
            check_finite(c)?;
        }
        Ok(VectorField { grid, components })
    }

    pub fn from_fields(fields: &[Field]) -> Result<VectorField> {
        let grid = fields
            .first()
            .ok_or_else(|| Error::param("components", "no components"))?
            .grid
            .clone();
        if fields.iter().any(|f| f.grid != grid) {
            return Err(Error::InvalidGrid("components live on different grids".into()));
        }
        VectorField::new(grid, fields.iter().map(|f| f.values.clone()).collect())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> Field {
        Field::from_parts_unchecked(self.grid.clone(), self.components[axis].clone())
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        let n = self.grid.len();
        let values = (0..n)
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        Field::from_parts_unchecked(self.grid.clone(), values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitude().sup_norm()
    }
}
