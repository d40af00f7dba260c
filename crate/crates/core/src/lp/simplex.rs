use super::linalg::invert;
use super::{Active, LinearProgram, LpSolution, LpStatus, RowMultipliers, Sense, FEAS_TOL, TIGHT_TOL};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub tightness_tol: f64,
    /// Iteration cap is `factor * (rows + cols)`.
    pub iteration_factor: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    pub exact_variable_cap: usize,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: FEAS_TOL,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            tightness_tol: TIGHT_TOL,
            iteration_factor: 50,
            bland_after: 40,
            refactor_every: 60,
            exact_variable_cap: super::EXACT_VARIABLE_CAP,
            trace: std::env::var("STOCHORDER_LP_TRACE").map(|v| v == "1").unwrap_or(false),
        }
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    solve_lp_with(lp, &SolverOptions::default())
}

pub fn solve_lp_with<T: Scalar>(lp: &LinearProgram<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
    lp.validate()?;
    if T::EXACT && lp.num_vars() > opts.exact_variable_cap {
        return Err(Error::Size(format!(
            "{} variables exceed the exact-mode cap of {}",
            lp.num_vars(),
            opts.exact_variable_cap
        )));
    }
    let mut s = Standard::build(lp);
    let sol = s.solve(lp, opts)?;
    if sol.is_optimal() && AUDIT.with(|a| a.borrow().is_some()) {
        let cert = super::certify(lp, &sol)?;
        AUDIT.with(|a| {
            if let Some(audit) = a.borrow_mut().as_mut() {
                audit.solves += 1;
                audit.max_gap = audit.max_gap.max(cert.duality_gap.to_f64_lossy());
                audit.max_residual = audit.max_residual.max(cert.max_residual().to_f64_lossy());
            }
        });
    }
    Ok(sol)
}

/// Certificate residuals of every optimal solve on this thread since [`start_duality_audit`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DualityAudit {
    pub solves: usize,
    pub max_gap: f64,
    /// Largest of primal and dual infeasibility, complementarity and gap.
    pub max_residual: f64,
}

thread_local! {
    static AUDIT: std::cell::RefCell<Option<DualityAudit>> = const { std::cell::RefCell::new(None) };
}

pub fn start_duality_audit() {
    AUDIT.with(|a| *a.borrow_mut() = Some(DualityAudit::default()));
}

pub fn finish_duality_audit() -> Option<DualityAudit> {
    AUDIT.with(|a| a.borrow_mut().take())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Col {
    /// Column for user variable `var`; `neg` marks the negative half of a free variable.
    Var { var: usize, neg: bool },
    Slack,
    Artificial,
}

/// Equality form `A x = b, x >= 0, b >= 0` of a user program.
struct Standard<T: Scalar> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    cols: Vec<Col>,
    /// Row was multiplied by -1 to make its rhs nonnegative.
    flip: Vec<bool>,
    /// User variable of each upper-bound row.
    ub_var: Vec<usize>,
    n_eq: usize,
    n_in: usize,
    basis: Vec<usize>,
    in_basis: Vec<Option<usize>>,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    iterations: usize,
}

enum Outcome<T> {
    Optimal,
    Unbounded { entering: usize, alpha: Vec<T> },
}

impl<T: Scalar> Standard<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.num_vars();
        let mut cols = Vec::new();
        let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
        for j in 0..n {
            let pos = cols.len();
            cols.push(Col::Var { var: j, neg: false });
            if lp.lower[j].is_none() {
                cols.push(Col::Var { var: j, neg: true });
                var_cols.push((pos, Some(pos + 1)));
            } else {
                var_cols.push((pos, None));
            }
        }
        let ub_var: Vec<usize> = (0..n).filter(|&j| lp.upper[j].is_some()).collect();
        let n_eq = lp.eq_lhs.len();
        let n_in = lp.ineq_lhs.len();
        let m = n_eq + n_in + ub_var.len();
        let shift: Vec<T> = lp.lower.iter().map(|l| l.clone().unwrap_or_else(T::zero)).collect();

        let mut rows: Vec<(Vec<T>, T)> = Vec::with_capacity(m);
        let expand = |row: &[T], rhs: &T| -> (Vec<T>, T) {
            let mut r = vec![T::zero(); cols.len()];
            for (j, a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let (p, q) = var_cols[j];
                r[p] = a.clone();
                if let Some(q) = q {
                    r[q] = -a.clone();
                }
            }
            (r, rhs.clone() - dot(row, &shift))
        };
        for (row, rhs) in lp.eq_lhs.iter().zip(&lp.eq_rhs) {
            rows.push(expand(row, rhs));
        }
        for (row, rhs) in lp.ineq_lhs.iter().zip(&lp.ineq_rhs) {
            rows.push(expand(row, rhs));
        }
        for &j in &ub_var {
            let mut row = vec![T::zero(); n];
            row[j] = T::one();
            rows.push(expand(&row, lp.upper[j].as_ref().unwrap()));
        }

        let mut flip = vec![false; m];
        let mut a: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for (i, (mut row, mut rhs)) in rows.into_iter().enumerate() {
            if rhs < T::zero() {
                flip[i] = true;
                row.iter_mut().for_each(|v| *v = -v.clone());
                rhs = -rhs;
            }
            a.push(row);
            b.push(rhs);
        }
        // slacks for inequality and bound rows
        let mut basis = vec![usize::MAX; m];
        for i in n_eq..m {
            let c = cols.len();
            cols.push(Col::Slack);
            for (k, row) in a.iter_mut().enumerate() {
                row.push(if k == i {
                    if flip[i] {
                        -T::one()
                    } else {
                        T::one()
                    }
                } else {
                    T::zero()
                });
            }
            if !flip[i] {
                basis[i] = c;
            }
        }
        for i in 0..m {
            if basis[i] == usize::MAX {
                let c = cols.len();
                cols.push(Col::Artificial);
                for (k, row) in a.iter_mut().enumerate() {
                    row.push(if k == i { T::one() } else { T::zero() });
                }
                basis[i] = c;
            }
        }
        let mut in_basis = vec![None; cols.len()];
        for (i, &c) in basis.iter().enumerate() {
            in_basis[c] = Some(i);
        }
        let binv = (0..m)
            .map(|i| (0..m).map(|k| if i == k { T::one() } else { T::zero() }).collect())
            .collect();
        let xb = b.clone();
        Standard { a, b, cols, flip, ub_var, n_eq, n_in, basis, in_basis, binv, xb, iterations: 0 }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.m();
        let mut y = vec![T::zero(); m];
        for (i, &c) in self.basis.iter().enumerate() {
            let cb = &cost[c];
            if cb.is_zero() {
                continue;
            }
            for k in 0..m {
                y[k] = y[k].clone() + cb.clone() * self.binv[i][k].clone();
            }
        }
        y
    }

    fn column(&self, j: usize) -> Vec<T> {
        let m = self.m();
        (0..m)
            .map(|i| {
                let mut s = T::zero();
                for k in 0..m {
                    let a = &self.a[k][j];
                    if !a.is_zero() {
                        s = s + self.binv[i][k].clone() * a.clone();
                    }
                }
                s
            })
            .collect()
    }

    fn reduced_cost(&self, y: &[T], cost: &[T], j: usize) -> T {
        let mut d = cost[j].clone();
        for (k, yk) in y.iter().enumerate() {
            let a = &self.a[k][j];
            if !a.is_zero() {
                d = d - yk.clone() * a.clone();
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T]) {
        let m = self.m();
        let ar = alpha[r].clone();
        for k in 0..m {
            self.binv[r][k] = self.binv[r][k].clone() / ar.clone();
        }
        let theta = self.xb[r].clone() / ar;
        for i in 0..m {
            if i == r || alpha[i].is_zero() {
                continue;
            }
            let f = alpha[i].clone();
            for k in 0..m {
                let v = self.binv[r][k].clone() * f.clone();
                self.binv[i][k] = self.binv[i][k].clone() - v;
            }
            self.xb[i] = self.xb[i].clone() - f * theta.clone();
        }
        self.xb[r] = theta;
        let old = self.basis[r];
        self.in_basis[old] = None;
        self.basis[r] = q;
        self.in_basis[q] = Some(r);
    }

    fn refactor(&mut self, opts: &SolverOptions) -> Result<()> {
        let m = self.m();
        let bmat: Vec<Vec<T>> = (0..m).map(|k| self.basis.iter().map(|&c| self.a[k][c].clone()).collect()).collect();
        let inv = invert(&bmat).ok_or_else(|| Error::NumericalFailure("basis matrix became singular".into()))?;
        self.binv = inv;
        self.xb = (0..m).map(|i| dot(&self.binv[i], &self.b)).collect();
        for v in self.xb.iter_mut() {
            if *v < T::zero() {
                if v.is_neg(opts.feasibility_tol * 1e3) {
                    return Err(Error::NumericalFailure("basic solution lost feasibility".into()));
                }
                *v = T::zero();
            }
        }
        Ok(())
    }

    fn run(&mut self, cost: &[T], allowed: &dyn Fn(Col) -> bool, opts: &SolverOptions, cap: usize, phase: u8) -> Result<Outcome<T>> {
        let m = self.m();
        let ncols = self.cols.len();
        let mut bland = false;
        let mut degenerate = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= cap {
                return Err(Error::NumericalFailure(format!("simplex iteration cap {cap} reached")));
            }
            if !T::EXACT && since_refactor >= opts.refactor_every {
                self.refactor(opts)?;
                since_refactor = 0;
            }
            let y = self.duals(cost);
            let mut entering: Option<(usize, T)> = None;
            for j in 0..ncols {
                if self.in_basis[j].is_some() || !allowed(self.cols[j]) {
                    continue;
                }
                let d = self.reduced_cost(&y, cost, j);
                if !d.is_pos(opts.optimality_tol) {
                    continue;
                }
                match &entering {
                    None => entering = Some((j, d)),
                    Some((_, best)) if !bland && d > *best => entering = Some((j, d)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((q, _)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let alpha = self.column(q);
            // two-pass ratio test with a feasibility band
            let mut bound: Option<T> = None;
            for i in 0..m {
                if alpha[i].is_pos(opts.pivot_tol) {
                    let t = (self.xb[i].clone() + T::tol(opts.feasibility_tol)) / alpha[i].clone();
                    if bound.as_ref().is_none_or(|b| t < *b) {
                        bound = Some(t);
                    }
                }
            }
            let Some(bound) = bound else {
                return Ok(Outcome::Unbounded { entering: q, alpha });
            };
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if !alpha[i].is_pos(opts.pivot_tol) {
                    continue;
                }
                let t = self.xb[i].clone() / alpha[i].clone();
                if t > bound {
                    continue;
                }
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let better = if bland || T::EXACT {
                            let tl = self.xb[l].clone() / alpha[l].clone();
                            t < tl || (t == tl && self.basis[i] < self.basis[l])
                        } else {
                            alpha[i] > alpha[l]
                        };
                        if better {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
            let r = leave.unwrap();
            let theta = self.xb[r].clone() / alpha[r].clone();
            if opts.trace {
                eprintln!(
                    "lp-trace phase={phase} iter={} enter={q} leave={} theta={} rule={}",
                    self.iterations,
                    self.basis[r],
                    theta,
                    if bland { "bland" } else { "dantzig" }
                );
            }
            if theta.near_zero(opts.feasibility_tol) {
                degenerate += 1;
                if degenerate > opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, q, &alpha);
            if !T::EXACT {
                for v in self.xb.iter_mut() {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
            self.iterations += 1;
            since_refactor += 1;
        }
    }

    /// Pivots basic artificials out where possible; the rest sit on redundant rows.
    fn expel_artificials(&mut self, opts: &SolverOptions) {
        let m = self.m();
        for r in 0..m {
            if self.cols[self.basis[r]] != Col::Artificial {
                continue;
            }
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.cols.len() {
                if self.in_basis[j].is_some() || self.cols[j] == Col::Artificial {
                    continue;
                }
                let mut v = T::zero();
                for k in 0..m {
                    let a = &self.a[k][j];
                    if !a.is_zero() {
                        v = v + self.binv[r][k].clone() * a.clone();
                    }
                }
                let av = v.abs();
                if av.is_pos(opts.pivot_tol) && best.as_ref().is_none_or(|(_, b)| av > *b) {
                    best = Some((j, av));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.column(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    fn solve(&mut self, lp: &LinearProgram<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
        let n = lp.num_vars();
        let m = self.m();
        let cap = opts.iteration_factor * (m + self.cols.len()).max(1);
        let has_art = self.cols.contains(&Col::Artificial);
        let scale = self.b.iter().fold(T::one(), |a, v| T::max_of(a, v.clone()));

        if has_art {
            let cost1: Vec<T> = self
                .cols
                .iter()
                .map(|c| if *c == Col::Artificial { -T::one() } else { T::zero() })
                .collect();
            match self.run(&cost1, &|_| true, opts, cap, 1)? {
                Outcome::Optimal => {}
                Outcome::Unbounded { .. } => {
                    return Err(Error::NumericalFailure("phase one reported unbounded".into()));
                }
            }
            let infeas: T = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(c, _)| self.cols[**c] == Col::Artificial)
                .fold(T::zero(), |a, (_, v)| a + v.clone());
            if infeas.is_pos(opts.feasibility_tol) && (infeas.clone() / scale.clone()).is_pos(opts.feasibility_tol) {
                let y = self.duals(&cost1);
                let farkas = self.user_multipliers(lp, &y, false);
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    value: None,
                    primal: Vec::new(),
                    dual: None,
                    reduced_costs: Vec::new(),
                    farkas: Some(farkas),
                    ray: None,
                    active_set: Vec::new(),
                    iterations: self.iterations,
                });
            }
            self.expel_artificials(opts);
        }

        let maximize = lp.sense == Sense::Maximize;
        let cost2: Vec<T> = self
            .cols
            .iter()
            .map(|c| match c {
                Col::Var { var, neg } => {
                    let v = if maximize { lp.objective[*var].clone() } else { -lp.objective[*var].clone() };
                    if *neg {
                        -v
                    } else {
                        v
                    }
                }
                _ => T::zero(),
            })
            .collect();
        match self.run(&cost2, &|c| c != Col::Artificial, opts, cap, 2)? {
            Outcome::Unbounded { entering, alpha } => {
                let mut dir = vec![T::zero(); self.cols.len()];
                dir[entering] = T::one();
                for i in 0..m {
                    dir[self.basis[i]] = -alpha[i].clone();
                }
                let ray = self.user_vector(n, &dir);
                Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    value: None,
                    primal: Vec::new(),
                    dual: None,
                    reduced_costs: Vec::new(),
                    farkas: None,
                    ray: Some(ray),
                    active_set: Vec::new(),
                    iterations: self.iterations,
                })
            }
            Outcome::Optimal => {
                if !T::EXACT {
                    self.refactor(opts)?;
                }
                let mut xs = vec![T::zero(); self.cols.len()];
                for i in 0..m {
                    xs[self.basis[i]] = self.xb[i].clone();
                }
                let mut x = self.user_vector(n, &xs);
                for j in 0..n {
                    if let Some(l) = &lp.lower[j] {
                        x[j] = x[j].clone() + l.clone();
                    }
                }
                let y = self.duals(&cost2);
                let dual = self.user_multipliers(lp, &y, !maximize);
                let reduced = reduced_costs(lp, &dual);
                let value = lp.objective_value(&x);
                let active_set = active_set(lp, &x, opts.tightness_tol);
                Ok(LpSolution {
                    status: LpStatus::Optimal,
                    value: Some(value),
                    primal: x,
                    dual: Some(dual),
                    reduced_costs: reduced,
                    farkas: None,
                    ray: None,
                    active_set,
                    iterations: self.iterations,
                })
            }
        }
    }

    fn user_vector(&self, n: usize, xs: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); n];
        for (c, v) in self.cols.iter().zip(xs) {
            if let Col::Var { var, neg } = c {
                if *neg {
                    x[*var] = x[*var].clone() - v.clone();
                } else {
                    x[*var] = x[*var].clone() + v.clone();
                }
            }
        }
        x
    }

    fn user_multipliers(&self, lp: &LinearProgram<T>, y: &[T], negate: bool) -> RowMultipliers<T> {
        let z: Vec<T> = y
            .iter()
            .zip(&self.flip)
            .map(|(v, f)| {
                let v = if *f { -v.clone() } else { v.clone() };
                if negate {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let mut upper = vec![T::zero(); lp.num_vars()];
        for (k, &j) in self.ub_var.iter().enumerate() {
            upper[j] = z[self.n_eq + self.n_in + k].clone();
        }
        RowMultipliers {
            eq: z[..self.n_eq].to_vec(),
            ineq: z[self.n_eq..self.n_eq + self.n_in].to_vec(),
            upper,
        }
    }
}

fn reduced_costs<T: Scalar>(lp: &LinearProgram<T>, y: &RowMultipliers<T>) -> Vec<T> {
    let n = lp.num_vars();
    let mut r: Vec<T> = (0..n).map(|j| lp.objective[j].clone() - y.upper[j].clone()).collect();
    for (row, yi) in lp.eq_lhs.iter().zip(&y.eq).chain(lp.ineq_lhs.iter().zip(&y.ineq)) {
        if yi.is_zero() {
            continue;
        }
        for j in 0..n {
            r[j] = r[j].clone() - row[j].clone() * yi.clone();
        }
    }
    r
}

pub(crate) fn active_set<T: Scalar>(lp: &LinearProgram<T>, x: &[T], tol: f64) -> Vec<Active> {
    let mut act: Vec<Active> = (0..lp.eq_lhs.len()).map(Active::Eq).collect();
    for (i, (row, b)) in lp.ineq_lhs.iter().zip(&lp.ineq_rhs).enumerate() {
        if (b.clone() - dot(row, x)).near_zero(tol) {
            act.push(Active::Ineq(i));
        }
    }
    for (j, xj) in x.iter().enumerate() {
        if let Some(l) = &lp.lower[j] {
            if (xj.clone() - l.clone()).near_zero(tol) {
                act.push(Active::Lower(j));
            }
        }
        if let Some(u) = &lp.upper[j] {
            if (u.clone() - xj.clone()).near_zero(tol) {
                act.push(Active::Upper(j));
            }
        }
    }
    act
}
