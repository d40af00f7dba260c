use super::linalg::{rank, PIVOT_EPS};
use super::simplex::active_set;
use super::{Active, LinearProgram, TIGHT_TOL};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Constraint region of a linear program; the objective is ignored.
pub type Polyhedron<T = f64> = LinearProgram<T>;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexReport {
    pub is_vertex: bool,
    pub rank: usize,
    pub dim: usize,
    pub active: Vec<Active>,
}

fn active_rows<T: Scalar>(p: &Polyhedron<T>, act: &[Active]) -> Vec<Vec<T>> {
    let n = p.num_vars();
    let unit = |j: usize| (0..n).map(|k| if k == j { T::one() } else { T::zero() }).collect::<Vec<T>>();
    act.iter()
        .map(|a| match a {
            Active::Eq(i) => p.eq_lhs[*i].clone(),
            Active::Ineq(i) => p.ineq_lhs[*i].clone(),
            Active::Lower(j) | Active::Upper(j) => unit(*j),
        })
        .collect()
}

/// A feasible point is a vertex iff its active constraints have full rank.
pub fn vertex_test<T: Scalar>(p: &Polyhedron<T>, x: &[T]) -> Result<VertexReport> {
    p.validate()?;
    crate::error::dim_check("point", x.len(), p.num_vars())?;
    let viol = p.max_violation(x);
    if viol.is_pos(TIGHT_TOL) {
        return Err(Error::Precondition(format!("point violates the polyhedron by {viol}")));
    }
    let act = active_set(p, x, TIGHT_TOL);
    let r = rank(&active_rows(p, &act));
    Ok(VertexReport { is_vertex: r == p.num_vars(), rank: r, dim: p.num_vars(), active: act })
}

/// All vertices by trying every basic choice of tight constraints; for small polytopes only.
pub fn enumerate_vertices<T: Scalar>(p: &Polyhedron<T>, max_systems: usize) -> Result<Vec<Vec<T>>> {
    p.validate()?;
    let n = p.num_vars();
    let r_eq = rank(&p.eq_lhs);
    let k = n - r_eq.min(n);
    let mut cands: Vec<(Vec<T>, T)> = p.ineq_lhs.iter().cloned().zip(p.ineq_rhs.iter().cloned()).collect();
    let unit = |j: usize| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect::<Vec<T>>();
    for j in 0..n {
        if let Some(l) = &p.lower[j] {
            cands.push((unit(j), l.clone()));
        }
        if let Some(u) = &p.upper[j] {
            cands.push((unit(j), u.clone()));
        }
    }
    if k > cands.len() {
        return Ok(Vec::new());
    }
    let systems = binomial(cands.len(), k);
    if systems > max_systems as f64 {
        return Err(Error::Size(format!("{systems} candidate bases exceed the cap of {max_systems}")));
    }
    let mut basis = Rref::new(n);
    for (row, b) in p.eq_lhs.iter().zip(&p.eq_rhs) {
        if let Reduced::Inconsistent = basis.push(row, b) {
            return Ok(Vec::new());
        }
    }
    let mut walk = Walk { p, cands: &cands, out: Vec::new(), tight: Vec::new(), chosen: Vec::new() };
    walk.visit(&basis, 0);
    Ok(walk.out)
}

enum Reduced {
    Added,
    Dependent,
    Inconsistent,
}

/// Augmented rows `[a | b]` in reduced row echelon form.
#[derive(Clone)]
struct Rref<T: Scalar> {
    cols: usize,
    rows: Vec<Vec<T>>,
    pivots: Vec<usize>,
}

impl<T: Scalar> Rref<T> {
    fn new(cols: usize) -> Self {
        Rref { cols, rows: Vec::new(), pivots: Vec::new() }
    }

    fn push(&mut self, a: &[T], b: &T) -> Reduced {
        let mut r: Vec<T> = a.iter().cloned().chain(std::iter::once(b.clone())).collect();
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            if !r[c].is_zero() {
                let t = r[c].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    *x = x.clone() - t.clone() * y.clone();
                }
            }
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.to_f64_lossy().abs())).max(1.0);
        let Some(c) = (0..self.cols).max_by(|&i, &j| r[i].clone().abs().partial_cmp(&r[j].clone().abs()).unwrap())
        else {
            return Reduced::Dependent;
        };
        if r[c].near_zero(PIVOT_EPS * scale) {
            return if r[self.cols].near_zero(1e-9) { Reduced::Dependent } else { Reduced::Inconsistent };
        }
        let p = r[c].clone();
        for x in r.iter_mut() {
            *x = x.clone() / p.clone();
        }
        for row in self.rows.iter_mut() {
            if !row[c].is_zero() {
                let t = row[c].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    *x = x.clone() - t.clone() * y.clone();
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(c);
        Reduced::Added
    }

    fn solution(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.cols];
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            x[c] = row[self.cols].clone();
        }
        x
    }
}

/// Depth-first over increasing candidate sets; a dependent row prunes its whole subtree.
struct Walk<'a, T: Scalar> {
    p: &'a Polyhedron<T>,
    cands: &'a [(Vec<T>, T)],
    out: Vec<Vec<T>>,
    /// Tight candidates of each vertex found. Exact arithmetic only: a basis inside one of
    /// them yields that vertex again.
    tight: Vec<Vec<bool>>,
    chosen: Vec<usize>,
}

impl<T: Scalar> Walk<'_, T> {
    fn visit(&mut self, basis: &Rref<T>, from: usize) {
        if basis.rows.len() == basis.cols {
            self.leaf(basis);
            return;
        }
        let need = basis.cols - basis.rows.len();
        for c in from..self.cands.len() {
            if self.cands.len() - c < need {
                break;
            }
            let mut next = basis.clone();
            // inconsistent cannot happen: no inequality row is pushed twice
            if let Reduced::Added = next.push(&self.cands[c].0, &self.cands[c].1) {
                self.chosen.push(c);
                self.visit(&next, c + 1);
                self.chosen.pop();
            }
        }
    }

    fn leaf(&mut self, basis: &Rref<T>) {
        if T::EXACT && self.tight.iter().any(|t| self.chosen.iter().all(|&c| t[c])) {
            return;
        }
        let x = basis.solution();
        if self.p.max_violation(&x).is_pos(1e-9) {
            return;
        }
        if !self.out.iter().any(|v| v.iter().zip(&x).all(|(s, t)| s.approx_eq(t, 1e-9))) {
            if T::EXACT {
                self.tight.push(self.cands.iter().map(|(r, b)| dot(r, &x) == *b).collect());
            }
            self.out.push(x);
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Whether `point` is a vertex of the image `{proj·x : x in p}`.
///
/// `point` is a vertex iff no two preimages `x1, x2` satisfy `proj·x1 + proj·x2 = 2·point`
/// with `proj·x1 != point`; each coordinate of the difference is maximized by one LP.
/// Returns the largest deviation found, zero (within `1e-8`) for a vertex.
pub fn projected_vertex_test<T: Scalar>(p: &Polyhedron<T>, proj: &[Vec<T>], point: &[T]) -> Result<(bool, T)> {
    p.validate()?;
    let n = p.num_vars();
    crate::error::dim_check("point", point.len(), proj.len())?;
    let mut lp = LinearProgram::maximize(vec![T::zero(); 2 * n]);
    let widen = |row: &[T], shift: usize| {
        let mut r = vec![T::zero(); 2 * n];
        for (j, a) in row.iter().enumerate() {
            r[shift + j] = a.clone();
        }
        r
    };
    for shift in [0, n] {
        for (row, b) in p.eq_lhs.iter().zip(&p.eq_rhs) {
            lp.add_eq(widen(row, shift), b.clone());
        }
        for (row, b) in p.ineq_lhs.iter().zip(&p.ineq_rhs) {
            lp.add_le(widen(row, shift), b.clone());
        }
        for j in 0..n {
            lp.lower[shift + j] = p.lower[j].clone();
            lp.upper[shift + j] = p.upper[j].clone();
        }
    }
    for (row, v) in proj.iter().zip(point) {
        let mut r = widen(row, 0);
        for (j, a) in row.iter().enumerate() {
            r[n + j] = a.clone();
        }
        lp.add_eq(r, v.clone() + v.clone());
    }
    let mut worst = T::zero();
    for (row, v) in proj.iter().zip(point) {
        lp.objective = widen(row, 0);
        let sol = super::solve_lp(&lp)?;
        let best = sol.value_or_err()? - v.clone();
        worst = T::max_of(worst, best);
        if worst.is_pos(TIGHT_TOL) {
            break;
        }
    }
    Ok((!worst.is_pos(TIGHT_TOL), worst))
}
