//! C-envelopes: the least majorant of `f` inside a min-closed cone, computed pointwise
//! as `max{∫f dη : η ⪯_C δ_x}`.

use std::fmt::Write as _;

use crate::cone::{closure_classify, dirac_orbit, generators, membership, slice_parameters, ConeKind, ConeSpec};
use crate::error::{dim_check, Error, Result};
use crate::lp::{solve_lp, LinearProgram};
use crate::measure::{Grid, Measure};
use crate::scalar::{dot, Scalar};

/// Tolerance for `f̄(x) = f(x)`.
pub const CONTACT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeMethod {
    /// Upper concave hull along a line.
    Hull,
    /// Running maximum over the coordinatewise order.
    MonotoneDp,
    /// Concave hull separately on each collinear cell.
    SliceHull,
    /// Running maximum of the concave hull (increasing concave, one dimension).
    RunningHull,
    /// One linear program per grid point over its Dirac orbit.
    PointwiseLp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult<T: Scalar = f64> {
    pub fbar: Vec<T>,
    pub contact_set: Vec<usize>,
    /// Optimal `η` in the orbit of each grid point, as weight vectors.
    pub per_point_optimizers: Vec<Vec<T>>,
    pub method: EnvelopeMethod,
}

impl<T: Scalar> EnvelopeResult<T> {
    fn assemble(f: &[T], fbar: Vec<T>, opt: Vec<Vec<T>>, method: EnvelopeMethod) -> Self {
        let contact_set = (0..f.len()).filter(|&i| fbar[i].approx_eq(&f[i], CONTACT_TOL)).collect();
        EnvelopeResult { fbar, contact_set, per_point_optimizers: opt, method }
    }

    pub fn optimizer(&self, grid: &std::sync::Arc<Grid<T>>, x: usize) -> Result<Measure<T>> {
        Measure::new(grid.clone(), self.per_point_optimizers[x].clone())
    }
}

fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[i] = T::one();
    v
}

/// Upper concave hull of `(tau_k, f_k)` evaluated at every `tau_k`, with the
/// two-point (or one-point) mixture attaining it. Indices are into `members`.
fn hull_along<T: Scalar>(f: &[T], members: &[usize], tau: &[T]) -> Vec<(T, Vec<(usize, T)>)> {
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| tau[a].partial_cmp(&tau[b]).unwrap());
    let val = |k: usize| f[members[k]].clone();
    let mut hull: Vec<usize> = Vec::new();
    for &k in &order {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or below the chord from a to k
            let cross = (tau[b].clone() - tau[a].clone()) * (val(k) - val(a))
                - (val(b) - val(a)) * (tau[k].clone() - tau[a].clone());
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = Vec::with_capacity(members.len());
    for k in 0..members.len() {
        let pos = hull.iter().position(|&h| tau[h] >= tau[k]).unwrap();
        let h = hull[pos];
        if tau[h] == tau[k] {
            if h == k || val(h) >= val(k) {
                out.push((val(h), vec![(h, T::one())]));
            } else {
                out.push((val(k), vec![(k, T::one())]));
            }
            continue;
        }
        let a = hull[pos - 1];
        let lam = (tau[h].clone() - tau[k].clone()) / (tau[h].clone() - tau[a].clone());
        let v = lam.clone() * val(a) + (T::one() - lam.clone()) * val(h);
        out.push((v, vec![(a, lam.clone()), (h, T::one() - lam)]));
    }
    out
}

fn hull_envelope<T: Scalar>(
    f: &[T],
    n: usize,
    cells: &[(Vec<usize>, Vec<T>)],
    fbar: &mut [T],
    opt: &mut [Vec<T>],
) {
    for (members, tau) in cells {
        for (k, (v, mix)) in hull_along(f, members, tau).into_iter().enumerate() {
            let i = members[k];
            fbar[i] = v;
            let mut eta = vec![T::zero(); n];
            for (m, w) in mix {
                eta[members[m]] = w;
            }
            opt[i] = eta;
        }
    }
}

fn min_closed_check<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<()> {
    let ok = match cone.known_min_closed() {
        Some(b) => b,
        None => closure_classify(cone, grid, 32, 0)?.min_closed,
    };
    if !ok {
        return Err(Error::Unsupported(format!(
            "the {} cone is not min-closed, so its envelope does not give the value; use solve_primal",
            cone.label()
        )));
    }
    Ok(())
}

/// The C-envelope of `f`, using a closed-form path when one exists.
pub fn c_envelope<T: Scalar>(f: &[T], cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<EnvelopeResult<T>> {
    dim_check("function", f.len(), grid.len())?;
    cone.validate(grid)?;
    min_closed_check(cone, grid)?;
    let c = cone.canonical();
    let n = grid.len();
    let one_dim = grid.free_coords() == 1;
    let tau_all = || -> Vec<T> { grid.points().iter().map(|p| p[0].clone()).collect() };
    let all: Vec<usize> = (0..n).collect();
    let mut fbar = vec![T::zero(); n];
    let mut opt: Vec<Vec<T>> = vec![Vec::new(); n];
    let method = match &c.kind {
        ConeKind::Concave if one_dim => {
            hull_envelope(f, n, &[(all, tau_all())], &mut fbar, &mut opt);
            EnvelopeMethod::Hull
        }
        ConeKind::Nondecreasing | ConeKind::Nonincreasing => {
            let up = matches!(c.kind, ConeKind::Nondecreasing);
            for x in 0..n {
                let mut best = x;
                for y in 0..n {
                    let below = if up { grid.leq(y, x) } else { grid.leq(x, y) };
                    if below && f[y] > f[best] {
                        best = y;
                    }
                }
                fbar[x] = f[best].clone();
                opt[x] = unit(n, best);
            }
            EnvelopeMethod::MonotoneDp
        }
        ConeKind::IncreasingConcave if one_dim => {
            hull_envelope(f, n, &[(all, tau_all())], &mut fbar, &mut opt);
            let sorted = grid.sorted_1d();
            let mut best = sorted[0];
            let (h, o) = (fbar.clone(), opt.clone());
            for &x in &sorted {
                if h[x] > h[best] {
                    best = x;
                }
                fbar[x] = h[best].clone();
                opt[x] = o[best].clone();
            }
            EnvelopeMethod::RunningHull
        }
        ConeKind::PartitionConcave { partition } => {
            let cells: Option<Vec<(Vec<usize>, Vec<T>)>> =
                partition.iter().map(|cell| slice_parameters(grid, cell).map(|t| (cell.clone(), t))).collect();
            match cells {
                Some(cells) => {
                    hull_envelope(f, n, &cells, &mut fbar, &mut opt);
                    EnvelopeMethod::SliceHull
                }
                None => return c_envelope_lp(f, cone, grid),
            }
        }
        _ => return c_envelope_lp(f, cone, grid),
    };
    Ok(EnvelopeResult::assemble(f, fbar, opt, method))
}

/// The C-envelope by one LP per grid point, with no fast path.
pub fn c_envelope_lp<T: Scalar>(f: &[T], cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<EnvelopeResult<T>> {
    dim_check("function", f.len(), grid.len())?;
    cone.validate(grid)?;
    min_closed_check(cone, grid)?;
    let mut fbar = Vec::with_capacity(grid.len());
    let mut opt = Vec::with_capacity(grid.len());
    for x in 0..grid.len() {
        let (v, eta) = dirac_orbit(cone, grid, x)?.maximize(f)?;
        fbar.push(v);
        opt.push(eta);
    }
    Ok(EnvelopeResult::assemble(f, fbar, opt, EnvelopeMethod::PointwiseLp))
}

pub fn concavification<T: Scalar>(f: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    Ok(c_envelope(f, &ConeSpec::concave(), grid)?.fbar)
}

pub fn monotone_envelope<T: Scalar>(f: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    Ok(c_envelope(f, &ConeSpec::nondecreasing(), grid)?.fbar)
}

/// Greatest convex minorant, `-cav(-f)`.
pub fn lower_convex_envelope<T: Scalar>(f: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    let neg: Vec<T> = f.iter().map(|v| -v.clone()).collect();
    Ok(concavification(&neg, grid)?.into_iter().map(|v| -v).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport<T: Scalar = f64> {
    /// `min{∫g dμ : g in C, g >= f}`.
    pub dual_value: T,
    /// `∫f̄ dμ` from the pointwise envelope.
    pub envelope_value: T,
    pub gap: T,
    /// Dual optimizer.
    pub g: Vec<T>,
    /// `f̄` is itself dual feasible and attains the dual value.
    pub fbar_attains: bool,
}

/// Solves the dual program over test functions directly and compares with `∫f̄ dμ`.
pub fn dual_envelope_check<T: Scalar>(f: &[T], cone: &ConeSpec<T>, mu: &Measure<T>) -> Result<DualReport<T>> {
    let grid = mu.grid();
    let n = grid.len();
    dim_check("function", f.len(), n)?;
    let c = cone.canonical();
    let w = mu.weights();
    let g = match (&c.kind, c.negated, generators(&c, grid)) {
        (ConeKind::Concave | ConeKind::IncreasingConcave | ConeKind::Nondecreasing | ConeKind::Nonincreasing, false, Some(gens))
        | (ConeKind::Custom { .. }, _, Some(gens)) => {
            let obj: Vec<T> = gens.iter().map(|h| dot(h, w)).collect();
            let mut lp = LinearProgram::minimize(obj);
            for x in 0..n {
                lp.add_ge(gens.iter().map(|h| h[x].clone()).collect(), f[x].clone());
            }
            let sol = solve_lp(&lp)?;
            sol.value_or_err()?;
            (0..n).map(|x| gens.iter().zip(&sol.primal).fold(T::zero(), |a, (h, l)| a + h[x].clone() * l.clone())).collect()
        }
        (ConeKind::Nondecreasing | ConeKind::Nonincreasing, false, None) => {
            let up = matches!(c.kind, ConeKind::Nondecreasing);
            let mut lp = LinearProgram::minimize(w.to_vec());
            for x in 0..n {
                lp.set_free(x);
                lp.add_ge(unit(n, x), f[x].clone());
            }
            for x in 0..n {
                for y in 0..n {
                    if x != y && grid.leq(x, y) {
                        // g(lower) <= g(upper) for nondecreasing, reversed otherwise
                        let (lo, hi) = if up { (x, y) } else { (y, x) };
                        let mut row = vec![T::zero(); n];
                        row[lo] = T::one();
                        row[hi] = -T::one();
                        lp.add_le(row, T::zero());
                    }
                }
            }
            let sol = solve_lp(&lp)?;
            sol.value_or_err()?;
            sol.primal
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "no finite dual description for the {} cone on this grid",
                cone.label()
            )))
        }
    };
    let env = c_envelope(f, cone, grid)?;
    let dual_value = dot(&g, w);
    let envelope_value = dot(&env.fbar, w);
    let gap = (dual_value.clone() - envelope_value.clone()).abs();
    let majorant = env.fbar.iter().zip(f).all(|(a, b)| !(b.clone() - a.clone()).is_pos(1e-9));
    let fbar_attains = majorant && membership(&env.fbar, cone, grid)? && gap.near_zero(1e-8);
    Ok(DualReport { dual_value, envelope_value, gap, g, fbar_attains })
}

/// CSV with the point coordinates, `f`, `f̄` and `f̄ - f`, one row per grid point.
pub fn envelope_csv<T: Scalar>(grid: &Grid<T>, f: &[T], fbar: &[T]) -> String {
    let mut out = String::new();
    let coords: Vec<String> = (0..grid.dim()).map(|k| format!("x{k}")).collect();
    let _ = writeln!(out, "{},f,fbar,gap", coords.join(","));
    for (i, p) in grid.points().iter().enumerate() {
        let cs: Vec<String> = p.iter().map(|v| format!("{}", v.to_f64_lossy())).collect();
        let (a, b) = (f[i].to_f64_lossy(), fbar[i].to_f64_lossy());
        let _ = writeln!(out, "{},{},{},{}", cs.join(","), a, b, b - a);
    }
    out
}
