use super::{ConeKind, ConeSpec};
use crate::lp::rank;
use crate::measure::Grid;
use crate::scalar::{dot, Scalar};

/// Affine parameter along a collinear set of points, or `None` if the points are not collinear.
pub fn slice_parameters<T: Scalar>(grid: &Grid<T>, members: &[usize]) -> Option<Vec<T>> {
    let p0 = grid.point(members[0]);
    if members.len() == 1 {
        return Some(vec![T::zero()]);
    }
    let diffs: Vec<Vec<T>> = members
        .iter()
        .map(|&i| grid.point(i).iter().zip(p0).map(|(a, b)| a.clone() - b.clone()).collect())
        .collect();
    if rank(&diffs) != 1 {
        return None;
    }
    let dir = diffs.iter().find(|d| d.iter().any(|v| !v.near_zero(1e-12)))?.clone();
    Some(diffs.iter().map(|d| dot(d, &dir)).collect())
}

fn hinge_family<T: Scalar>(
    n: usize,
    members: &[usize],
    tau: &[T],
    out: &mut Vec<Vec<T>>,
    shape: impl Fn(&T, &T) -> T,
    kinks: impl Fn(usize) -> std::ops::Range<usize>,
) {
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| tau[a].partial_cmp(&tau[b]).unwrap());
    for k in kinks(order.len()) {
        let t = &tau[order[k]];
        let mut g = vec![T::zero(); n];
        for (m, &i) in members.iter().enumerate() {
            g[i] = shape(&tau[m], t);
        }
        out.push(g);
    }
}

fn indicator<T: Scalar>(n: usize, members: &[usize], values: impl Fn(usize) -> T) -> Vec<T> {
    let mut g = vec![T::zero(); n];
    for (m, &i) in members.iter().enumerate() {
        g[i] = values(m);
    }
    g
}

/// Finite generating set of the cone on this grid (with `±` pairs for its lineality space).
///
/// Available for the named kinds on one-dimensional grids, for partition cones whose
/// cells are collinear, and for custom cones; `None` otherwise.
pub fn generators<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>) -> Option<Vec<Vec<T>>> {
    let n = grid.len();
    let all: Vec<usize> = (0..n).collect();
    let one_dim = grid.free_coords() == 1;
    let zero = T::zero();
    let relu = |s: &T, t: &T| T::max_of(s.clone() - t.clone(), T::zero());
    let mut out: Vec<Vec<T>> = Vec::new();
    let constants = |out: &mut Vec<Vec<T>>, members: &[usize]| {
        out.push(indicator(n, members, |_| T::one()));
        out.push(indicator(n, members, |_| -T::one()));
    };
    let tau_all = || -> Vec<T> { grid.points().iter().map(|p| p[0].clone()).collect() };
    let base = match &cone.kind {
        ConeKind::Custom { generators } => {
            constants(&mut out, &all);
            out.extend(generators.iter().cloned());
            Some(out)
        }
        ConeKind::Concave | ConeKind::Convex if one_dim => {
            let tau = tau_all();
            constants(&mut out, &all);
            out.push(tau.clone());
            out.push(tau.iter().map(|v| -v.clone()).collect());
            let convex = matches!(cone.kind, ConeKind::Convex);
            hinge_family(n, &all, &tau, &mut out, |s, t| if convex { relu(s, t) } else { -relu(s, t) }, |len| {
                1..len.saturating_sub(1)
            });
            Some(out)
        }
        ConeKind::Nondecreasing | ConeKind::Nonincreasing if one_dim => {
            let tau = tau_all();
            constants(&mut out, &all);
            let sign = if matches!(cone.kind, ConeKind::Nondecreasing) { T::one() } else { -T::one() };
            hinge_family(
                n,
                &all,
                &tau,
                &mut out,
                |s, t| if s >= t { sign.clone() } else { zero.clone() },
                |len| 1..len,
            );
            Some(out)
        }
        ConeKind::IncreasingConcave if one_dim => {
            let tau = tau_all();
            constants(&mut out, &all);
            hinge_family(n, &all, &tau, &mut out, |s, t| T::min_of(s.clone(), t.clone()), |len| 1..len);
            Some(out)
        }
        ConeKind::PartitionConcave { partition } => {
            for cell in partition {
                let tau = slice_parameters(grid, cell)?;
                constants(&mut out, cell);
                if cell.len() >= 2 {
                    out.push(indicator(n, cell, |m| tau[m].clone()));
                    out.push(indicator(n, cell, |m| -tau[m].clone()));
                    hinge_family(n, cell, &tau, &mut out, |s, t| -relu(s, t), |len| 1..len.saturating_sub(1));
                }
            }
            Some(out)
        }
        _ => None,
    }?;
    if cone.negated {
        Some(base.into_iter().map(|g| g.into_iter().map(|v| -v).collect()).collect())
    } else {
        Some(base)
    }
}
