//! Dense linear programming over any [`Scalar`]: two-phase revised simplex,
//! vertex tests and exhaustive vertex enumeration for small polytopes.

mod linalg;
mod simplex;
mod vertex;

pub use linalg::{rank, solve_square};
pub use simplex::{finish_duality_audit, solve_lp, solve_lp_with, start_duality_audit, DualityAudit, SolverOptions};
pub use vertex::{enumerate_vertices, projected_vertex_test, vertex_test, Polyhedron, VertexReport};

use crate::error::{dim_check, Error, Result};
use crate::scalar::{cast, dot, Rational, Scalar};

/// Feasibility tolerance on constraint rows.
pub const FEAS_TOL: f64 = 1e-9;
/// Slack below which an inequality counts as tight.
pub const TIGHT_TOL: f64 = 1e-8;
/// Exact solves refuse programs with more variables than this.
pub const EXACT_VARIABLE_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// `opt c·x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lower <= x <= upper`.
///
/// A `None` lower bound makes the variable free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T: Scalar = f64> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub eq_lhs: Vec<Vec<T>>,
    pub eq_rhs: Vec<T>,
    pub ineq_lhs: Vec<Vec<T>>,
    pub ineq_rhs: Vec<T>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense, objective: Vec<T>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            eq_lhs: Vec::new(),
            eq_rhs: Vec::new(),
            ineq_lhs: Vec::new(),
            ineq_rhs: Vec::new(),
            lower: vec![Some(T::zero()); n],
            upper: vec![None; n],
        }
    }

    pub fn maximize(objective: Vec<T>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn minimize(objective: Vec<T>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    /// Zero objective; used for feasibility questions.
    pub fn feasibility(n: usize) -> Self {
        Self::maximize(vec![T::zero(); n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.eq_lhs.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_le(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.ineq_lhs.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    pub fn add_ge(&mut self, row: Vec<T>, rhs: T) -> &mut Self {
        self.ineq_lhs.push(row.into_iter().map(|a| -a).collect());
        self.ineq_rhs.push(-rhs);
        self
    }

    /// Dense row from `(index, coefficient)` pairs.
    pub fn sparse_row(&self, entries: &[(usize, T)]) -> Vec<T> {
        let mut row = vec![T::zero(); self.num_vars()];
        for (j, a) in entries {
            row[*j] = row[*j].clone() + a.clone();
        }
        row
    }

    pub fn set_free(&mut self, j: usize) -> &mut Self {
        self.lower[j] = None;
        self
    }

    pub fn set_lower(&mut self, j: usize, l: T) -> &mut Self {
        self.lower[j] = Some(l);
        self
    }

    pub fn set_upper(&mut self, j: usize, u: T) -> &mut Self {
        self.upper[j] = Some(u);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        dim_check("equality rhs", self.eq_rhs.len(), self.eq_lhs.len())?;
        dim_check("inequality rhs", self.ineq_rhs.len(), self.ineq_lhs.len())?;
        dim_check("lower bounds", self.lower.len(), n)?;
        dim_check("upper bounds", self.upper.len(), n)?;
        for r in self.eq_lhs.iter().chain(&self.ineq_lhs) {
            dim_check("constraint row", r.len(), n)?;
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Err(Error::Invalid(format!("variable {j} has lower bound above upper bound")));
                }
            }
        }
        Ok(())
    }

    /// Same program over another scalar type; floats convert through their decimal form.
    pub fn map_scalar<U: Scalar>(&self) -> LinearProgram<U> {
        let v = |xs: &Vec<T>| xs.iter().map(cast).collect::<Vec<U>>();
        let m = |rows: &Vec<Vec<T>>| rows.iter().map(v).collect::<Vec<_>>();
        let o = |xs: &Vec<Option<T>>| xs.iter().map(|x| x.as_ref().map(cast)).collect::<Vec<_>>();
        LinearProgram {
            sense: self.sense,
            objective: v(&self.objective),
            eq_lhs: m(&self.eq_lhs),
            eq_rhs: v(&self.eq_rhs),
            ineq_lhs: m(&self.ineq_lhs),
            ineq_rhs: v(&self.ineq_rhs),
            lower: o(&self.lower),
            upper: o(&self.upper),
        }
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for (row, b) in self.eq_lhs.iter().zip(&self.eq_rhs) {
            worst = T::max_of(worst, (dot(row, x) - b.clone()).abs());
        }
        for (row, b) in self.ineq_lhs.iter().zip(&self.ineq_rhs) {
            worst = T::max_of(worst, dot(row, x) - b.clone());
        }
        for (j, xj) in x.iter().enumerate() {
            if let Some(l) = &self.lower[j] {
                worst = T::max_of(worst, l.clone() - xj.clone());
            }
            if let Some(u) = &self.upper[j] {
                worst = T::max_of(worst, xj.clone() - u.clone());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A constraint that holds with equality at the reported point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Active {
    Eq(usize),
    Ineq(usize),
    Lower(usize),
    Upper(usize),
}

/// Multipliers attached to the rows of a [`LinearProgram`].
///
/// `upper[j]` belongs to the bound `x_j <= u_j` and is zero for unbounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMultipliers<T: Scalar = f64> {
    pub eq: Vec<T>,
    pub ineq: Vec<T>,
    pub upper: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T: Scalar = f64> {
    pub status: LpStatus,
    pub value: Option<T>,
    pub primal: Vec<T>,
    /// Optimal dual prices when optimal; sign convention follows the program's sense
    /// (for a maximization `ineq >= 0`, for a minimization `ineq <= 0`).
    pub dual: Option<RowMultipliers<T>>,
    /// `c - Aᵀy - upper` per variable when optimal.
    pub reduced_costs: Vec<T>,
    /// Infeasibility certificate `y` with `ineq >= 0`, `upper >= 0`,
    /// `Aᵀy + upper >= 0` on bounded-below variables, `= 0` on free ones and
    /// `y·b < (Aᵀy + upper)·l`.
    pub farkas: Option<RowMultipliers<T>>,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<T>>,
    pub active_set: Vec<Active>,
    pub iterations: usize,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value_or_err(&self) -> Result<T> {
        match self.status {
            LpStatus::Optimal => Ok(self.value.clone().unwrap()),
            LpStatus::Infeasible => Err(Error::Precondition("linear program is infeasible".into())),
            LpStatus::Unbounded => Err(Error::Precondition("linear program is unbounded".into())),
        }
    }
}

/// Residuals of an optimal primal/dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T: Scalar = f64> {
    pub primal_infeasibility: T,
    pub dual_infeasibility: T,
    pub complementarity: T,
    pub duality_gap: T,
    pub dual_value: T,
}

impl<T: Scalar> Certificate<T> {
    pub fn max_residual(&self) -> T {
        [&self.primal_infeasibility, &self.dual_infeasibility, &self.complementarity, &self.duality_gap]
            .into_iter()
            .fold(T::zero(), |a, b| T::max_of(a, b.clone()))
    }
}

/// Checks primal feasibility, dual feasibility, complementary slackness and the duality gap.
pub fn certify<T: Scalar>(lp: &LinearProgram<T>, sol: &LpSolution<T>) -> Result<Certificate<T>> {
    let dual = sol
        .dual
        .as_ref()
        .ok_or_else(|| Error::Precondition("no dual solution to certify".into()))?;
    let n = lp.num_vars();
    let x = &sol.primal;
    // work in maximization orientation
    let sgn = if lp.sense == Sense::Maximize { T::one() } else { -T::one() };
    let c: Vec<T> = lp.objective.iter().map(|v| sgn.clone() * v.clone()).collect();
    let y_eq: Vec<T> = dual.eq.iter().map(|v| sgn.clone() * v.clone()).collect();
    let y_in: Vec<T> = dual.ineq.iter().map(|v| sgn.clone() * v.clone()).collect();
    let y_ub: Vec<T> = dual.upper.iter().map(|v| sgn.clone() * v.clone()).collect();

    let mut dual_inf = T::zero();
    let mut comp = T::zero();
    for v in y_in.iter().chain(&y_ub) {
        dual_inf = T::max_of(dual_inf, -v.clone());
    }
    let mut r = c.clone();
    for (row, y) in lp.eq_lhs.iter().zip(&y_eq) {
        for j in 0..n {
            r[j] = r[j].clone() - row[j].clone() * y.clone();
        }
    }
    for (row, y) in lp.ineq_lhs.iter().zip(&y_in) {
        for j in 0..n {
            r[j] = r[j].clone() - row[j].clone() * y.clone();
        }
    }
    let mut dual_value = T::zero();
    for j in 0..n {
        r[j] = r[j].clone() - y_ub[j].clone();
        match &lp.lower[j] {
            Some(l) => {
                dual_inf = T::max_of(dual_inf, r[j].clone());
                comp = T::max_of(comp, (r[j].clone() * (x[j].clone() - l.clone())).abs());
                dual_value = dual_value + r[j].clone() * l.clone();
            }
            None => dual_inf = T::max_of(dual_inf, r[j].abs()),
        }
        if let Some(u) = &lp.upper[j] {
            comp = T::max_of(comp, (y_ub[j].clone() * (u.clone() - x[j].clone())).abs());
            dual_value = dual_value + y_ub[j].clone() * u.clone();
        }
    }
    for ((row, b), y) in lp.ineq_lhs.iter().zip(&lp.ineq_rhs).zip(&y_in) {
        comp = T::max_of(comp, (y.clone() * (b.clone() - dot(row, x))).abs());
    }
    dual_value = dual_value + dot(&y_eq, &lp.eq_rhs) + dot(&y_in, &lp.ineq_rhs);
    let primal_value = dot(&c, x);
    Ok(Certificate {
        primal_infeasibility: lp.max_violation(x),
        dual_infeasibility: dual_inf,
        complementarity: comp,
        duality_gap: (primal_value - dual_value.clone()).abs(),
        dual_value: sgn * dual_value,
    })
}

/// Checks a Farkas certificate; returns the (positive) margin by which it proves infeasibility.
pub fn farkas_margin<T: Scalar>(lp: &LinearProgram<T>, y: &RowMultipliers<T>) -> Result<T> {
    let n = lp.num_vars();
    for v in y.ineq.iter().chain(&y.upper) {
        if v.is_neg(FEAS_TOL) {
            return Err(Error::InvariantViolation("Farkas multiplier has the wrong sign".into()));
        }
    }
    let mut aty = y.upper.clone();
    for (row, yi) in lp.eq_lhs.iter().zip(&y.eq).chain(lp.ineq_lhs.iter().zip(&y.ineq)) {
        for j in 0..n {
            aty[j] = aty[j].clone() + row[j].clone() * yi.clone();
        }
    }
    let mut bound_term = T::zero();
    for j in 0..n {
        match &lp.lower[j] {
            Some(l) => {
                if aty[j].is_neg(FEAS_TOL) {
                    return Err(Error::InvariantViolation("Farkas combination is negative on a variable".into()));
                }
                bound_term = bound_term + aty[j].clone() * l.clone();
            }
            None => {
                if !aty[j].near_zero(FEAS_TOL) {
                    return Err(Error::InvariantViolation("Farkas combination is nonzero on a free variable".into()));
                }
            }
        }
    }
    let mut yb = dot(&y.eq, &lp.eq_rhs) + dot(&y.ineq, &lp.ineq_rhs);
    for j in 0..n {
        if let Some(u) = &lp.upper[j] {
            yb = yb + y.upper[j].clone() * u.clone();
        }
    }
    Ok(bound_term - yb)
}

/// Solves in exact rational arithmetic after converting decimal coefficients.
pub fn exact_mode_solve(lp: &LinearProgram<f64>) -> Result<LpSolution<Rational>> {
    exact_mode_solve_capped(lp, EXACT_VARIABLE_CAP)
}

pub fn exact_mode_solve_capped(lp: &LinearProgram<f64>, cap: usize) -> Result<LpSolution<Rational>> {
    if lp.num_vars() > cap {
        return Err(Error::Size(format!("{} variables exceed the exact-mode cap of {cap}", lp.num_vars())));
    }
    let opts = SolverOptions { exact_variable_cap: cap, ..SolverOptions::default() };
    solve_lp_with(&lp.map_scalar::<Rational>(), &opts)
}
