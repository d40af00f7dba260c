use std::sync::Arc;

use super::{cell_of, ConeKind, ConeSpec};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::measure::{Grid, Kernel};
use crate::scalar::{dot, sum, Scalar};

/// Polyhedron of probability vectors `η` on the grid:
/// `η >= 0`, `Σ η = 1`, `η_y = 0` off `allowed`, plus linear rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPolyhedron<T: Scalar = f64> {
    pub allowed: Vec<bool>,
    pub eq: Vec<(Vec<T>, T)>,
    pub le: Vec<(Vec<T>, T)>,
}

impl<T: Scalar> OrbitPolyhedron<T> {
    pub fn full(n: usize) -> Self {
        OrbitPolyhedron { allowed: vec![true; n], eq: Vec::new(), le: Vec::new() }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.allowed.len()).filter(|&i| self.allowed[i]).collect()
    }

    /// Largest violation of the description by `eta`.
    pub fn violation(&self, eta: &[T]) -> T {
        let mut worst = (sum(eta) - T::one()).abs();
        for (i, v) in eta.iter().enumerate() {
            worst = T::max_of(worst, -v.clone());
            if !self.allowed[i] {
                worst = T::max_of(worst, v.abs());
            }
        }
        for (a, b) in &self.eq {
            worst = T::max_of(worst, (dot(a, eta) - b.clone()).abs());
        }
        for (a, b) in &self.le {
            worst = T::max_of(worst, dot(a, eta) - b.clone());
        }
        worst
    }

    /// The polyhedron as constraints of an LP over all grid points.
    pub fn to_program(&self, sense: crate::lp::Sense, objective: Vec<T>) -> LinearProgram<T> {
        let n = self.allowed.len();
        let mut lp = LinearProgram::new(sense, objective);
        lp.add_eq(vec![T::one(); n], T::one());
        for (a, b) in &self.eq {
            lp.add_eq(a.clone(), b.clone());
        }
        for (a, b) in &self.le {
            lp.add_le(a.clone(), b.clone());
        }
        for (j, ok) in self.allowed.iter().enumerate() {
            if !*ok {
                lp.set_upper(j, T::zero());
            }
        }
        lp
    }

    /// `max ∫ g dη` over the polyhedron; returns value and a basic optimizer.
    pub fn maximize(&self, g: &[T]) -> Result<(T, Vec<T>)> {
        let sup = self.support();
        let lp = self.restricted_program(crate::lp::Sense::Maximize, g, &sup);
        let sol = crate::lp::solve_lp(&lp)?;
        let v = sol.value_or_err()?;
        let mut eta = vec![T::zero(); self.allowed.len()];
        for (k, &j) in sup.iter().enumerate() {
            eta[j] = sol.primal[k].clone();
        }
        Ok((v, eta))
    }

    /// LP over the allowed coordinates only.
    pub fn restricted_program(&self, sense: crate::lp::Sense, g: &[T], sup: &[usize]) -> LinearProgram<T> {
        let pick = |row: &[T]| sup.iter().map(|&j| row[j].clone()).collect::<Vec<T>>();
        let mut lp = LinearProgram::new(sense, pick(g));
        lp.add_eq(vec![T::one(); sup.len()], T::one());
        for (a, b) in &self.eq {
            lp.add_eq(pick(a), b.clone());
        }
        for (a, b) in &self.le {
            lp.add_le(pick(a), b.clone());
        }
        lp
    }
}

fn barycenter_rows<T: Scalar>(grid: &Grid<T>, x: usize) -> Vec<(Vec<T>, T)> {
    (0..grid.free_coords())
        .map(|k| (grid.points().iter().map(|p| p[k].clone()).collect(), grid.point(x)[k].clone()))
        .collect()
}

/// `{η : η ⪯_C δ_x}` for the cone (or `{η : δ_x ⪯_C η}` for a negated cone).
pub fn dirac_orbit<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>, x: usize) -> Result<OrbitPolyhedron<T>> {
    cone.validate(grid)?;
    let n = grid.len();
    let c = cone.canonical();
    let mut orb = OrbitPolyhedron::full(n);
    let one_dim = grid.free_coords() == 1;
    let only_self = |orb: &mut OrbitPolyhedron<T>| {
        for (j, a) in orb.allowed.iter_mut().enumerate() {
            *a = j == x;
        }
    };
    match (&c.kind, c.negated) {
        (ConeKind::Concave, false) => orb.eq = barycenter_rows(grid, x),
        (ConeKind::Convex, false) => only_self(&mut orb),
        (ConeKind::Nondecreasing, false) => {
            for j in 0..n {
                orb.allowed[j] = grid.leq(j, x);
            }
        }
        (ConeKind::Nonincreasing, false) => {
            for j in 0..n {
                orb.allowed[j] = grid.leq(x, j);
            }
        }
        (ConeKind::IncreasingConcave, negated) => {
            if !one_dim {
                return Err(Error::Unsupported("increasing-concave orbits need a one-dimensional grid".into()));
            }
            if negated {
                // δ_x ⪯ η for every increasing concave test: mass only above x
                for j in 0..n {
                    orb.allowed[j] = grid.point(j)[0] >= grid.point(x)[0];
                }
            } else {
                orb.le = barycenter_rows(grid, x);
            }
        }
        (ConeKind::PartitionConcave { partition }, negated) => {
            if negated {
                only_self(&mut orb);
            } else {
                let cell = cell_of(partition, n);
                for j in 0..n {
                    orb.allowed[j] = cell[j] == cell[x];
                }
                orb.eq = barycenter_rows(grid, x);
            }
        }
        (ConeKind::Custom { generators }, negated) => {
            for g in generators {
                let g: Vec<T> = if negated { g.iter().map(|v| -v.clone()).collect() } else { g.clone() };
                let gx = g[x].clone();
                orb.le.push((g, gx));
            }
        }
        _ => unreachable!("canonical cones carry no other negations"),
    }
    Ok(orb)
}

pub fn dirac_orbits<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<Vec<OrbitPolyhedron<T>>> {
    (0..grid.len()).map(|x| dirac_orbit(cone, grid, x)).collect()
}

/// Transport program moving `source` along kernels whose rows lie in the given polyhedra.
///
/// Variables are `γ(x, y)` for `x` in the support of `source` and `y` allowed by row `x`.
#[derive(Debug, Clone)]
pub struct CouplingProgram<T: Scalar = f64> {
    pub lp: LinearProgram<T>,
    pub vars: Vec<(usize, usize)>,
    /// Index of the first target-marginal equality row, when a target was fixed.
    pub target_row: Option<usize>,
    pub n: usize,
    pub sources: Vec<usize>,
}

impl<T: Scalar> CouplingProgram<T> {
    /// Objective `Σ γ(x, y) f(y)`.
    pub fn set_target_objective(&mut self, f: &[T]) {
        self.lp.objective = self.vars.iter().map(|&(_, y)| f[y].clone()).collect();
    }

    pub fn target_of(&self, gamma: &[T]) -> Vec<T> {
        let mut nu = vec![T::zero(); self.n];
        for (v, &(_, y)) in gamma.iter().zip(&self.vars) {
            nu[y] = nu[y].clone() + v.clone();
        }
        nu
    }

    /// Kernel with rows `γ(x, ·)/μ(x)` on the support and `δ_x` elsewhere.
    pub fn kernel(&self, grid: Arc<Grid<T>>, source: &[T], gamma: &[T]) -> Result<Kernel<T>> {
        let n = self.n;
        let mut rows: Vec<Vec<T>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        for &x in &self.sources {
            rows[x] = vec![T::zero(); n];
        }
        for (v, &(x, y)) in gamma.iter().zip(&self.vars) {
            rows[x][y] = rows[x][y].clone() + v.clone() / source[x].clone();
        }
        Kernel::from_lp_rows(grid, rows)
    }
}

pub fn coupling_program<T: Scalar>(
    source: &[T],
    orbits: &[OrbitPolyhedron<T>],
    target: Option<&[T]>,
) -> CouplingProgram<T> {
    let n = source.len();
    let sources: Vec<usize> = (0..n).filter(|&i| source[i].is_pos(1e-15)).collect();
    let mut vars = Vec::new();
    for &x in &sources {
        for y in 0..n {
            if orbits[x].allowed[y] {
                vars.push((x, y));
            }
        }
    }
    let nv = vars.len();
    let mut lp = LinearProgram::maximize(vec![T::zero(); nv]);
    let mut start = 0;
    for &x in &sources {
        let end = start + vars[start..].iter().take_while(|(s, _)| *s == x).count();
        let mut row = vec![T::zero(); nv];
        for r in row.iter_mut().take(end).skip(start) {
            *r = T::one();
        }
        lp.add_eq(row, source[x].clone());
        for (a, b) in &orbits[x].eq {
            let mut row = vec![T::zero(); nv];
            for k in start..end {
                row[k] = a[vars[k].1].clone();
            }
            lp.add_eq(row, b.clone() * source[x].clone());
        }
        for (a, b) in &orbits[x].le {
            let mut row = vec![T::zero(); nv];
            for k in start..end {
                row[k] = a[vars[k].1].clone();
            }
            lp.add_le(row, b.clone() * source[x].clone());
        }
        start = end;
    }
    let target_row = target.map(|nu| {
        let first = lp.eq_lhs.len();
        for y in 0..n {
            let row = vars.iter().map(|&(_, t)| if t == y { T::one() } else { T::zero() }).collect();
            lp.add_eq(row, nu[y].clone());
        }
        first
    });
    CouplingProgram { lp, vars, target_row, n, sources }
}
