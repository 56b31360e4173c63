use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of points allowed along any axis.
pub const MIN_POINTS: usize = 8;

/// Boundary conditions for the one-dimensional interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Clamped: v = Dv = 0 at both ends.
    Dirichlet,
    /// Hinged: v = D²v = 0 at both ends.
    Navier,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Navier => "navier",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Box `[lower, lower + extent)` per axis with periodic identification.
    Periodic { lower: Vec<f64>, extents: Vec<f64> },
    /// The interval `(-L, L)`; nodes include both endpoints.
    Interval { half_length: f64, bc: BoundaryKind },
}

/// Uniform tensor grid. Values on it are stored row-major, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    points: Vec<usize>,
}

fn finite_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("{name} must be finite and positive, got {x}")))
    }
}

impl Grid {
    pub fn periodic(lower: Vec<f64>, extents: Vec<f64>, points: Vec<usize>) -> Result<Arc<Grid>> {
        let dim = points.len();
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if lower.len() != dim || extents.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} lower bounds and {} extents for {dim} axes",
                lower.len(),
                extents.len()
            )));
        }
        for (a, (&n, (&lo, &ext))) in points.iter().zip(lower.iter().zip(&extents)).enumerate() {
            if n < MIN_POINTS || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: periodic point count must be a power of two >= {MIN_POINTS}, got {n}"
                )));
            }
            if !lo.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {a}: lower bound {lo} is not finite")));
            }
            finite_positive("extent", ext)?;
        }
        Ok(Arc::new(Grid {
            domain: Domain::Periodic { lower, extents },
            points,
        }))
    }

    /// `[lower, upper)` with `n` points.
    pub fn periodic_1d(lower: f64, upper: f64, n: usize) -> Result<Arc<Grid>> {
        Grid::periodic(vec![lower], vec![upper - lower], vec![n])
    }

    /// The cube `[0, extent)^dim` with `n` points per axis.
    pub fn periodic_cube(dim: usize, extent: f64, n: usize) -> Result<Arc<Grid>> {
        Grid::periodic(vec![0.0; dim], vec![extent; dim], vec![n; dim])
    }

    /// `(-L, L)` with `points` nodes including both endpoints.
    pub fn interval(half_length: f64, points: usize, bc: BoundaryKind) -> Result<Arc<Grid>> {
        finite_positive("half length", half_length)?;
        if points < MIN_POINTS + 1 {
            return Err(Error::InvalidGrid(format!(
                "interval needs at least {} nodes, got {points}",
                MIN_POINTS + 1
            )));
        }
        Ok(Arc::new(Grid {
            domain: Domain::Interval { half_length, bc },
            points: vec![points],
        }))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.domain, Domain::Periodic { .. })
    }

    pub fn bc(&self) -> Option<BoundaryKind> {
        match self.domain {
            Domain::Interval { bc, .. } => Some(bc),
            Domain::Periodic { .. } => None,
        }
    }

    pub fn half_length(&self) -> Option<f64> {
        match self.domain {
            Domain::Interval { half_length, .. } => Some(half_length),
            Domain::Periodic { .. } => None,
        }
    }

    /// Lower corner of the domain.
    pub fn lower(&self) -> Vec<f64> {
        match &self.domain {
            Domain::Periodic { lower, .. } => lower.clone(),
            Domain::Interval { half_length, .. } => vec![-half_length],
        }
    }

    /// Side lengths of the domain.
    pub fn extents(&self) -> Vec<f64> {
        match &self.domain {
            Domain::Periodic { extents, .. } => extents.clone(),
            Domain::Interval { half_length, .. } => vec![2.0 * half_length],
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        match &self.domain {
            Domain::Periodic { extents, .. } => extents[axis] / self.points[axis] as f64,
            Domain::Interval { half_length, .. } => 2.0 * half_length / (self.points[0] - 1) as f64,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        let lo = self.lower()[axis];
        let h = self.spacing(axis);
        (0..self.points[axis]).map(|j| lo + j as f64 * h).collect()
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim() {
            Ok(())
        } else {
            Err(Error::AxisOutOfRange { axis, dim: self.dim() })
        }
    }

    /// Calls `f(flat_index, coordinates)` for every node.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, &[f64])) {
        let coords: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.coordinates(a)).collect();
        let mut idx = vec![0usize; self.dim()];
        let mut x: Vec<f64> = coords.iter().map(|c| c[0]).collect();
        for flat in 0..self.len() {
            f(flat, &x);
            for a in (0..self.dim()).rev() {
                idx[a] += 1;
                if idx[a] < self.points[a] {
                    x[a] = coords[a][idx[a]];
                    break;
                }
                idx[a] = 0;
                x[a] = coords[a][0];
            }
        }
    }

    /// Same grid with the domain replaced; used by rescaling.
    pub(crate) fn with_domain(&self, domain: Domain) -> Grid {
        Grid {
            domain,
            points: self.points.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid::periodic_1d(0.0, 1.0, 12).is_err());
        assert!(Grid::periodic_1d(0.0, 1.0, 4).is_err());
        assert!(Grid::periodic_1d(0.0, 0.0, 16).is_err());
    }

    #[test]
    fn interval_nodes_hit_endpoints() {
        let g = Grid::interval(4.0, 129, BoundaryKind::Navier).unwrap();
        let x = g.coordinates(0);
        assert_eq!(x[0], -4.0);
        assert!((x[128] - 4.0).abs() < 1e-14);
        assert!((g.spacing(0) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn point_iteration_is_row_major() {
        let g = Grid::periodic(vec![0.0, 0.0], vec![4.0, 8.0], vec![8, 8]).unwrap();
        let mut seen = Vec::new();
        g.for_each_point(|i, x| {
            if i < 10 {
                seen.push((x[0], x[1]));
            }
        });
        assert_eq!(seen[1], (0.0, 1.0));
        assert_eq!(seen[8], (0.5, 0.0));
    }
}
