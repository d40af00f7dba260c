//! Cones of test functions, their Dirac orbits and the orders they induce.

mod closure;
mod generators;
mod orbit;
mod order;

pub use closure::{closure_classify, membership, sample_member, ClosureReport};
pub use generators::{generators, slice_parameters};
pub use orbit::{coupling_program, dirac_orbit, dirac_orbits, CouplingProgram, OrbitPolyhedron};
pub use order::{order_leq, order_leq_sampled, OrderCertificate, OrderMethod, OrderVerdict};

use crate::error::{Error, Result};
use crate::measure::Grid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind<T: Scalar = f64> {
    Concave,
    Convex,
    Nondecreasing,
    Nonincreasing,
    /// Nondecreasing and concave; one-dimensional grids only for orbit questions.
    IncreasingConcave,
    /// Concave along each cell of a partition of the grid, unrestricted across cells.
    PartitionConcave { partition: Vec<Vec<usize>> },
    /// Cone generated by finitely many functions and the constants.
    Custom { generators: Vec<Vec<T>> },
}

/// A cone `C`, or `-C` when `negated` is set; negation reverses the order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec<T: Scalar = f64> {
    pub kind: ConeKind<T>,
    pub negated: bool,
}

impl<T: Scalar> ConeSpec<T> {
    pub fn new(kind: ConeKind<T>) -> Self {
        ConeSpec { kind, negated: false }
    }

    pub fn concave() -> Self {
        Self::new(ConeKind::Concave)
    }

    pub fn convex() -> Self {
        Self::new(ConeKind::Convex)
    }

    pub fn nondecreasing() -> Self {
        Self::new(ConeKind::Nondecreasing)
    }

    pub fn nonincreasing() -> Self {
        Self::new(ConeKind::Nonincreasing)
    }

    pub fn increasing_concave() -> Self {
        Self::new(ConeKind::IncreasingConcave)
    }

    pub fn partition_concave(partition: Vec<Vec<usize>>) -> Self {
        Self::new(ConeKind::PartitionConcave { partition })
    }

    pub fn custom(generators: Vec<Vec<T>>) -> Self {
        Self::new(ConeKind::Custom { generators })
    }

    pub fn negate(&self) -> Self {
        ConeSpec { kind: self.kind.clone(), negated: !self.negated }
    }

    /// Rewrites negations that coincide with another named kind.
    pub fn canonical(&self) -> Self {
        if !self.negated {
            return self.clone();
        }
        let kind = match &self.kind {
            ConeKind::Concave => ConeKind::Convex,
            ConeKind::Convex => ConeKind::Concave,
            ConeKind::Nondecreasing => ConeKind::Nonincreasing,
            ConeKind::Nonincreasing => ConeKind::Nondecreasing,
            _ => return self.clone(),
        };
        ConeSpec { kind, negated: false }
    }

    /// Closed under pointwise minimum, known without sampling.
    pub fn known_min_closed(&self) -> Option<bool> {
        let c = self.canonical();
        match (&c.kind, c.negated) {
            (ConeKind::Custom { .. }, _) => None,
            (ConeKind::Convex, false) => Some(false),
            (_, false) => Some(true),
            (_, true) => Some(false),
        }
    }

    /// Closed under pointwise maximum, known without sampling.
    pub fn known_max_closed(&self) -> Option<bool> {
        let c = self.canonical();
        match (&c.kind, c.negated) {
            (ConeKind::Custom { .. }, _) => None,
            (ConeKind::Convex | ConeKind::Nondecreasing | ConeKind::Nonincreasing, false) => Some(true),
            (_, false) => Some(false),
            (_, true) => Some(true),
        }
    }

    /// Dirac orbits of this cone are exact and the cone is min-closed, so orders and
    /// values are decided by couplings on this grid.
    pub fn coupling_exact(&self, grid: &Grid<T>) -> bool {
        let c = self.canonical();
        match (&c.kind, c.negated) {
            (ConeKind::Custom { .. }, _) => false,
            (ConeKind::IncreasingConcave, false) => grid.free_coords() == 1,
            (ConeKind::Convex, false) => false,
            (_, negated) => !negated,
        }
    }

    pub fn label(&self) -> String {
        let base = match &self.kind {
            ConeKind::Concave => "concave",
            ConeKind::Convex => "convex",
            ConeKind::Nondecreasing => "nondecreasing",
            ConeKind::Nonincreasing => "nonincreasing",
            ConeKind::IncreasingConcave => "increasing_concave",
            ConeKind::PartitionConcave { .. } => "partition_concave",
            ConeKind::Custom { .. } => "custom",
        };
        if self.negated {
            format!("-{base}")
        } else {
            base.to_string()
        }
    }

    /// Checks partition and generator shapes against the grid.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        match &self.kind {
            ConeKind::PartitionConcave { partition } => {
                let mut seen = vec![false; grid.len()];
                for cell in partition {
                    for &i in cell {
                        if i >= grid.len() || seen[i] {
                            return Err(Error::Invalid(format!("partition index {i} is out of range or repeated")));
                        }
                        seen[i] = true;
                    }
                }
                if seen.iter().any(|s| !s) {
                    return Err(Error::Invalid("partition does not cover the grid".into()));
                }
            }
            ConeKind::Custom { generators } => {
                for g in generators {
                    crate::error::dim_check("generator", g.len(), grid.len())?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn map_scalar<U: Scalar>(&self) -> ConeSpec<U> {
        let kind = match &self.kind {
            ConeKind::Concave => ConeKind::Concave,
            ConeKind::Convex => ConeKind::Convex,
            ConeKind::Nondecreasing => ConeKind::Nondecreasing,
            ConeKind::Nonincreasing => ConeKind::Nonincreasing,
            ConeKind::IncreasingConcave => ConeKind::IncreasingConcave,
            ConeKind::PartitionConcave { partition } => ConeKind::PartitionConcave { partition: partition.clone() },
            ConeKind::Custom { generators } => ConeKind::Custom {
                generators: generators.iter().map(|g| crate::scalar::cast_vec(g)).collect(),
            },
        };
        ConeSpec { kind, negated: self.negated }
    }
}

/// Partition cell containing each grid point.
pub(crate) fn cell_of(partition: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut cell = vec![0; n];
    for (c, members) in partition.iter().enumerate() {
        for &i in members {
            cell[i] = c;
        }
    }
    cell
}

/// Partition of a simplex grid into slices on which coordinate `coord` is constant.
pub fn slices_by_coordinate<T: Scalar>(grid: &Grid<T>, coord: usize) -> Vec<Vec<usize>> {
    let mut cells: Vec<(T, Vec<usize>)> = Vec::new();
    for (i, p) in grid.points().iter().enumerate() {
        match cells.iter_mut().find(|(v, _)| v.approx_eq(&p[coord], 1e-12)) {
            Some((_, members)) => members.push(i),
            None => cells.push((p[coord].clone(), vec![i])),
        }
    }
    cells.into_iter().map(|(_, m)| m).collect()
}
