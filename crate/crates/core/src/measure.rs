//! Grids, finitely supported measures and Markov kernels.

use std::sync::Arc;

use rand::Rng;

use crate::error::{dim_check, Error, Result};
use crate::scalar::{dot, sum, Scalar};

/// Tolerance on total mass before a weight vector is rejected.
pub const MASS_TOL: f64 = 1e-8;
/// Row sums of a kernel must match one within this.
pub const ROW_TOL: f64 = 1e-10;

/// Finite set of points in R^d with the coordinatewise order cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Scalar = f64> {
    points: Vec<Vec<T>>,
    dim: usize,
    simplex: bool,
    leq: Vec<Vec<bool>>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(points: Vec<Vec<T>>) -> Result<Self> {
        Self::build(points, false)
    }

    /// Points lie on a probability simplex (coordinates sum to one).
    pub fn new_simplex(points: Vec<Vec<T>>) -> Result<Self> {
        for p in &points {
            if !(sum(p) - T::one()).near_zero(MASS_TOL) {
                return Err(Error::Invalid("simplex grid point does not sum to one".into()));
            }
        }
        Self::build(points, true)
    }

    fn build(points: Vec<Vec<T>>, simplex: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("grid has no points".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Invalid("grid points have dimension zero".into()));
        }
        for p in &points {
            dim_check("grid point", p.len(), dim)?;
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::Invalid(format!("duplicate grid point at {j} and {i}")));
                }
            }
        }
        let leq = points
            .iter()
            .map(|a| points.iter().map(|b| a.iter().zip(b).all(|(x, y)| x <= y)).collect())
            .collect();
        Ok(Grid { points, dim, simplex, leq })
    }

    /// `n` equally spaced points on `[lo, hi]`.
    pub fn interval(lo: T, hi: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Self::new(vec![vec![lo]]);
        }
        let step = (hi - lo.clone()) / T::from_usize(n - 1).unwrap();
        Self::new((0..n).map(|i| vec![lo.clone() + step.clone() * T::from_usize(i).unwrap()]).collect())
    }

    pub fn from_values(xs: &[T]) -> Result<Self> {
        Self::new(xs.iter().map(|x| vec![x.clone()]).collect())
    }

    /// Barycentric subdivision of the simplex over `states` outcomes at resolution `k`.
    pub fn simplex(states: usize, k: usize) -> Result<Self> {
        Self::simplex_shifted(states, k, T::zero())
    }

    /// Simplex grid pulled into the interior: `x = eps + (1 - states*eps) * c/k`.
    pub fn simplex_shifted(states: usize, k: usize, eps: T) -> Result<Self> {
        if states < 2 || k == 0 {
            return Err(Error::Invalid("simplex grid needs at least two states and resolution one".into()));
        }
        let scale = T::one() - eps.clone() * T::from_usize(states).unwrap();
        let kk = T::from_usize(k).unwrap();
        let pts = compositions(k, states)
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|ci| eps.clone() + scale.clone() * T::from_usize(ci).unwrap() / kk.clone())
                    .collect()
            })
            .collect();
        Self::new_simplex(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_simplex(&self) -> bool {
        self.simplex
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i]
    }

    /// Coordinatewise `p_i <= p_j`.
    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    /// Coordinates that carry information; the last one is implied on simplex grids.
    pub fn free_coords(&self) -> usize {
        if self.simplex {
            self.dim - 1
        } else {
            self.dim
        }
    }

    pub fn index_of(&self, p: &[T], eps: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|q| q.iter().zip(p).all(|(a, b)| a.approx_eq(b, eps)))
    }

    /// Order of points along coordinate 0; used by one-dimensional fast paths.
    pub fn sorted_1d(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.points[a][0].partial_cmp(&self.points[b][0]).unwrap());
        idx
    }

    pub fn map_scalar<U: Scalar>(&self) -> Grid<U> {
        Grid {
            points: self.points.iter().map(|p| crate::scalar::cast_vec(p)).collect(),
            dim: self.dim,
            simplex: self.simplex,
            leq: self.leq.clone(),
        }
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        std::ptr::eq(self, other) || self.points == other.points
    }
}

fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in compositions(k - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Probability measure on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure<T: Scalar = f64> {
    grid: Arc<Grid<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> Measure<T> {
    /// Validates nonnegativity and unit mass; mass within `1e-8` of one is renormalized.
    pub fn new(grid: Arc<Grid<T>>, weights: Vec<T>) -> Result<Self> {
        dim_check("measure weights", weights.len(), grid.len())?;
        let weights = normalize(weights, "measure")?;
        Ok(Measure { grid, weights })
    }

    pub fn dirac(grid: Arc<Grid<T>>, i: usize) -> Self {
        let mut w = vec![T::zero(); grid.len()];
        w[i] = T::one();
        Measure { grid, weights: w }
    }

    pub fn uniform(grid: Arc<Grid<T>>) -> Self {
        let n = T::from_usize(grid.len()).unwrap();
        let w = vec![T::one() / n; grid.len()];
        Measure { grid, weights: w }
    }

    /// Random measure with small integer weights, exact in rational mode.
    pub fn random<R: Rng>(grid: Arc<Grid<T>>, rng: &mut R, sparsity: f64) -> Self {
        loop {
            let raw: Vec<i64> = (0..grid.len())
                .map(|_| if rng.gen::<f64>() < sparsity { 0 } else { rng.gen_range(1..=9) })
                .collect();
            let total: i64 = raw.iter().sum();
            if total > 0 {
                let w = raw.iter().map(|&r| T::from_ratio(r, total)).collect();
                return Measure { grid, weights: w };
            }
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &T {
        &self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i].is_pos(1e-15)).collect()
    }

    pub fn is_dirac(&self, eps: f64) -> Option<usize> {
        let s: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i].is_pos(eps)).collect();
        if s.len() == 1 {
            Some(s[0])
        } else {
            None
        }
    }

    /// `∫ g dμ`.
    pub fn integrate(&self, g: &[T]) -> Result<T> {
        dim_check("integrand", g.len(), self.len())?;
        Ok(dot(&self.weights, g))
    }

    pub fn barycenter(&self) -> Vec<T> {
        let mut b = vec![T::zero(); self.grid.dim()];
        for (w, p) in self.weights.iter().zip(self.grid.points()) {
            for (bk, pk) in b.iter_mut().zip(p) {
                *bk = bk.clone() + w.clone() * pk.clone();
            }
        }
        b
    }

    pub fn mix(&self, other: &Measure<T>, alpha: &T) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| alpha.clone() * a.clone() + (T::one() - alpha.clone()) * b.clone())
            .collect();
        Ok(Measure { grid: self.grid.clone(), weights: w })
    }

    pub fn approx_eq(&self, other: &Measure<T>, eps: f64) -> bool {
        self.weights.iter().zip(&other.weights).all(|(a, b)| a.approx_eq(b, eps))
    }

    pub fn map_scalar<U: Scalar>(&self, grid: Arc<Grid<U>>) -> Measure<U> {
        Measure { grid, weights: crate::scalar::cast_vec(&self.weights) }
    }
}

/// Row-stochastic matrix on a grid; `rows[i]` is the law of the next point given `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T: Scalar = f64> {
    grid: Arc<Grid<T>>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(grid: Arc<Grid<T>>, rows: Vec<Vec<T>>) -> Result<Self> {
        dim_check("kernel rows", rows.len(), grid.len())?;
        let n = grid.len();
        let mut clean = Vec::with_capacity(n);
        for row in rows {
            dim_check("kernel row", row.len(), n)?;
            if !(sum(&row) - T::one()).near_zero(ROW_TOL) {
                return Err(Error::Invalid("kernel row does not sum to one".into()));
            }
            clean.push(normalize(row, "kernel row")?);
        }
        Ok(Kernel { grid, rows: clean })
    }

    /// Rows are renormalized after clamping solver noise; used for LP outputs.
    pub fn from_lp_rows(grid: Arc<Grid<T>>, rows: Vec<Vec<T>>) -> Result<Self> {
        dim_check("kernel rows", rows.len(), grid.len())?;
        let rows = rows.into_iter().map(|r| normalize(r, "kernel row")).collect::<Result<_>>()?;
        Ok(Kernel { grid, rows })
    }

    pub fn identity(grid: Arc<Grid<T>>) -> Self {
        let n = grid.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Kernel { grid, rows }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    /// `ν_j = Σ_i P[i][j] μ_i`.
    pub fn push(&self, mu: &Measure<T>) -> Result<Measure<T>> {
        same_grid(&self.grid, &mu.grid)?;
        let n = self.grid.len();
        let mut w = vec![T::zero(); n];
        for (i, row) in self.rows.iter().enumerate() {
            let mi = &mu.weights[i];
            if mi.is_zero() {
                continue;
            }
            for j in 0..n {
                w[j] = w[j].clone() + mi.clone() * row[j].clone();
            }
        }
        Ok(Measure { grid: self.grid.clone(), weights: w })
    }

    /// `(g*P)(x_i) = Σ_j P[i][j] g(x_j)`.
    pub fn expect(&self, g: &[T]) -> Result<Vec<T>> {
        dim_check("function", g.len(), self.grid.len())?;
        Ok(self.rows.iter().map(|r| dot(r, g)).collect())
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Kernel<T>) -> Result<Kernel<T>> {
        same_grid(&self.grid, &other.grid)?;
        let n = self.grid.len();
        let rows = other
            .rows
            .iter()
            .map(|r2| {
                let mut out = vec![T::zero(); n];
                for (y, p2) in r2.iter().enumerate() {
                    if p2.is_zero() {
                        continue;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        *o = o.clone() + p2.clone() * self.rows[y][a].clone();
                    }
                }
                out
            })
            .collect();
        Ok(Kernel { grid: self.grid.clone(), rows })
    }

    pub fn map_scalar<U: Scalar>(&self, grid: Arc<Grid<U>>) -> Kernel<U> {
        Kernel { grid, rows: self.rows.iter().map(|r| crate::scalar::cast_vec(r)).collect() }
    }
}

pub(crate) fn same_grid<T: Scalar>(a: &Arc<Grid<T>>, b: &Arc<Grid<T>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.same_as(b) {
        Ok(())
    } else {
        Err(Error::Dimension("objects live on different grids".into()))
    }
}

fn normalize<T: Scalar>(mut w: Vec<T>, what: &str) -> Result<Vec<T>> {
    for x in w.iter_mut() {
        if x.is_neg(1e-12) {
            return Err(Error::Invalid(format!("{what} has a negative weight {x}")));
        }
        if *x < T::zero() {
            *x = T::zero();
        }
    }
    let total = sum(&w);
    if !(total.clone() - T::one()).near_zero(MASS_TOL) {
        return Err(Error::Invalid(format!("{what} has total mass {total}")));
    }
    if total != T::one() {
        for x in w.iter_mut() {
            *x = x.clone() / total.clone();
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn line(n: usize) -> Arc<Grid> {
        Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn simplex_grid_counts() {
        let g: Grid = Grid::simplex(3, 10).unwrap();
        assert_eq!(g.len(), 66);
        assert!(g.is_simplex());
        let g: Grid = Grid::simplex(2, 12).unwrap();
        assert_eq!(g.len(), 13);
        let g: Grid<Rational> = Grid::simplex(3, 6).unwrap();
        assert_eq!(g.len(), 28);
    }

    #[test]
    fn mass_is_checked_and_renormalized() {
        let g = line(3);
        assert!(Measure::new(g.clone(), vec![0.5, 0.5, 0.1]).is_err());
        let m = Measure::new(g.clone(), vec![0.5, 0.5, 1e-9]).unwrap();
        assert!((sum(m.weights()) - 1.0).abs() < 1e-15);
        assert!(Measure::new(g.clone(), vec![1.5, -0.5, 0.0]).is_err());
        assert!(matches!(Measure::new(g, vec![1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn push_and_expect_pair_up() {
        let g = line(3);
        let p = Kernel::new(g.clone(), vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 0.0, 1.0]]).unwrap();
        let mu = Measure::new(g.clone(), vec![0.2, 0.6, 0.2]).unwrap();
        let nu = p.push(&mu).unwrap();
        assert_eq!(nu.weights(), &[0.5, 0.0, 0.5]);
        let f = vec![1.0, 4.0, 2.0];
        let lhs = nu.integrate(&f).unwrap();
        let rhs = mu.integrate(&p.expect(&f).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn compose_applies_right_argument_first() {
        let g: Arc<Grid<Rational>> = Arc::new(Grid::from_values(&[Rational::from_ratio(0, 1), Rational::from_ratio(1, 1)]).unwrap());
        let h = |a: i64, b: i64| Rational::from_ratio(a, b);
        let p1 = Kernel::new(g.clone(), vec![vec![h(1, 2), h(1, 2)], vec![h(0, 1), h(1, 1)]]).unwrap();
        let p2 = Kernel::new(g.clone(), vec![vec![h(0, 1), h(1, 1)], vec![h(1, 1), h(0, 1)]]).unwrap();
        // from 0: P2 sends to 1, then P1 keeps at 1
        let c = p1.compose(&p2).unwrap();
        assert_eq!(c.row(0), &[h(0, 1), h(1, 1)]);
        assert_eq!(c.row(1), &[h(1, 2), h(1, 2)]);
    }

    #[test]
    fn coordinatewise_order() {
        let g: Grid = Grid::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(g.leq(0, 3) && g.leq(1, 3) && !g.leq(1, 2) && !g.leq(3, 0));
    }
}
