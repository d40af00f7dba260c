use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dirac_orbit, generators, slice_parameters, ConeKind, ConeSpec};
use crate::error::{dim_check, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::measure::Grid;
use crate::scalar::Scalar;

const MEMBER_TOL: f64 = 1e-9;

fn neg<T: Scalar>(g: &[T]) -> Vec<T> {
    g.iter().map(|v| -v.clone()).collect()
}

fn scale_tol<T: Scalar>(g: &[T]) -> f64 {
    let m = g.iter().fold(T::zero(), |a, v| T::max_of(a, v.abs())).to_f64_lossy();
    MEMBER_TOL * m.max(1.0)
}

fn concave_along<T: Scalar>(g: &[T], members: &[usize], tau: &[T], tol: f64) -> bool {
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| tau[a].partial_cmp(&tau[b]).unwrap());
    let slopes: Vec<T> = order
        .windows(2)
        .map(|w| {
            (g[members[w[1]]].clone() - g[members[w[0]]].clone()) / (tau[w[1]].clone() - tau[w[0]].clone())
        })
        .collect();
    slopes.windows(2).all(|s| !(s[1].clone() - s[0].clone()).is_pos(tol))
}

/// `g(x) >= max{∫g dη : η in the orbit of x}` at every point.
fn dominates_orbits<T: Scalar>(g: &[T], cone: &ConeSpec<T>, grid: &Grid<T>, tol: f64) -> Result<bool> {
    for x in 0..grid.len() {
        let (v, _) = dirac_orbit(cone, grid, x)?.maximize(g)?;
        if (v - g[x].clone()).is_pos(tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn generator_membership<T: Scalar>(g: &[T], gens: &[Vec<T>]) -> Result<bool> {
    let n = g.len();
    let mut lp = LinearProgram::feasibility(gens.len());
    for i in 0..n {
        lp.add_eq(gens.iter().map(|h| h[i].clone()).collect(), g[i].clone());
    }
    Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
}

/// Whether `g` belongs to the cone (up to a scaled tolerance of `1e-9`).
pub fn membership<T: Scalar>(g: &[T], cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<bool> {
    dim_check("function", g.len(), grid.len())?;
    cone.validate(grid)?;
    let c = cone.canonical();
    if c.negated {
        return membership(&neg(g), &c.negate(), grid);
    }
    let tol = scale_tol(g);
    let n = grid.len();
    let one_dim = grid.free_coords() == 1;
    let all: Vec<usize> = (0..n).collect();
    match &c.kind {
        ConeKind::Custom { .. } => generator_membership(g, &generators(&c, grid).unwrap()),
        ConeKind::Concave if one_dim => {
            let tau: Vec<T> = grid.points().iter().map(|p| p[0].clone()).collect();
            Ok(concave_along(g, &all, &tau, tol))
        }
        ConeKind::Concave => dominates_orbits(g, &c, grid, tol),
        ConeKind::Convex => membership(&neg(g), &ConeSpec::concave(), grid),
        ConeKind::Nondecreasing => Ok((0..n).all(|i| (0..n).all(|j| !grid.leq(i, j) || !(g[i].clone() - g[j].clone()).is_pos(tol)))),
        ConeKind::Nonincreasing => Ok((0..n).all(|i| (0..n).all(|j| !grid.leq(i, j) || !(g[j].clone() - g[i].clone()).is_pos(tol)))),
        ConeKind::IncreasingConcave => Ok(membership(g, &ConeSpec::nondecreasing(), grid)? && membership(g, &ConeSpec::concave(), grid)?),
        ConeKind::PartitionConcave { partition } => {
            for cell in partition {
                let ok = match slice_parameters(grid, cell) {
                    Some(tau) => concave_along(g, cell, &tau, tol),
                    None => {
                        let cell_cone = ConeSpec::partition_concave(partition.clone());
                        let mut ok = true;
                        for &x in cell {
                            let (v, _) = dirac_orbit(&cell_cone, grid, x)?.maximize(g)?;
                            if (v - g[x].clone()).is_pos(tol) {
                                ok = false;
                                break;
                            }
                        }
                        ok
                    }
                };
                if !ok {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

fn small_int<T: Scalar, R: Rng>(rng: &mut R, lo: i64, hi: i64) -> T {
    T::from_ratio(rng.gen_range(lo..=hi), 1)
}

fn affine<T: Scalar, R: Rng>(grid: &Grid<T>, rng: &mut R, nonneg: bool) -> Vec<T> {
    let d = grid.dim();
    let a: Vec<T> = (0..d).map(|_| small_int(rng, if nonneg { 0 } else { -3 }, 3)).collect();
    let b: T = small_int(rng, -2, 2);
    grid.points().iter().map(|p| b.clone() + crate::scalar::dot(&a, p)).collect()
}

fn pointwise<T: Scalar>(fs: Vec<Vec<T>>, take_max: bool) -> Vec<T> {
    let mut out = fs[0].clone();
    for f in &fs[1..] {
        for (o, v) in out.iter_mut().zip(f) {
            *o = if take_max { T::max_of(o.clone(), v.clone()) } else { T::min_of(o.clone(), v.clone()) };
        }
    }
    out
}

/// Random element of the cone with small integer coefficients.
pub fn sample_member<T: Scalar, R: Rng>(cone: &ConeSpec<T>, grid: &Grid<T>, rng: &mut R) -> Result<Vec<T>> {
    let n = grid.len();
    if let Some(gens) = generators(cone, grid) {
        let mut g = vec![T::zero(); n];
        for h in &gens {
            if rng.gen_bool(0.5) {
                let c: T = small_int(rng, 1, 3);
                for (gi, hi) in g.iter_mut().zip(h) {
                    *gi = gi.clone() + c.clone() * hi.clone();
                }
            }
        }
        return Ok(g);
    }
    let c = cone.canonical();
    if c.negated {
        return Ok(neg(&sample_member(&c.negate(), grid, rng)?));
    }
    let k = 3;
    Ok(match &c.kind {
        ConeKind::Concave => pointwise((0..k).map(|_| affine(grid, rng, false)).collect(), false),
        ConeKind::Convex => pointwise((0..k).map(|_| affine(grid, rng, false)).collect(), true),
        ConeKind::IncreasingConcave => pointwise((0..k).map(|_| affine(grid, rng, true)).collect(), false),
        ConeKind::Nondecreasing | ConeKind::Nonincreasing => {
            let up = matches!(c.kind, ConeKind::Nondecreasing);
            let mut g = vec![small_int::<T, _>(rng, -2, 2); n];
            for _ in 0..k {
                let p = rng.gen_range(0..n);
                let w: T = small_int(rng, 1, 3);
                for (y, gy) in g.iter_mut().enumerate() {
                    let hit = if up { grid.leq(p, y) } else { grid.leq(y, p) };
                    if hit {
                        *gy = gy.clone() + w.clone();
                    }
                }
            }
            g
        }
        ConeKind::PartitionConcave { partition } => {
            let mut g = vec![T::zero(); n];
            for cell in partition {
                let h = pointwise((0..k).map(|_| affine(grid, rng, false)).collect(), false);
                for &i in cell {
                    g[i] = h[i].clone();
                }
            }
            g
        }
        ConeKind::Custom { .. } => unreachable!("custom cones always have generators"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport<T: Scalar = f64> {
    pub min_closed: bool,
    pub max_closed: bool,
    /// Classification came from sampling rather than from the cone's kind.
    pub sampled: bool,
    /// Two cone elements whose pointwise minimum leaves the cone.
    pub min_witness: Option<(Vec<T>, Vec<T>)>,
    pub max_witness: Option<(Vec<T>, Vec<T>)>,
}

/// Min/max closure of the cone; custom cones are classified by sampling `trials` pairs.
pub fn closure_classify<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>, trials: usize, seed: u64) -> Result<ClosureReport<T>> {
    cone.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (known_min, known_max) = (cone.known_min_closed(), cone.known_max_closed());
    let mut min_witness = None;
    let mut max_witness = None;
    let want_min = known_min != Some(true);
    let want_max = known_max != Some(true);
    for _ in 0..trials {
        if !(want_min && min_witness.is_none()) && !(want_max && max_witness.is_none()) {
            break;
        }
        let g1 = sample_member(cone, grid, &mut rng)?;
        let g2 = sample_member(cone, grid, &mut rng)?;
        if want_min && min_witness.is_none() && !membership(&pointwise(vec![g1.clone(), g2.clone()], false), cone, grid)? {
            min_witness = Some((g1.clone(), g2.clone()));
        }
        if want_max && max_witness.is_none() && !membership(&pointwise(vec![g1.clone(), g2.clone()], true), cone, grid)? {
            max_witness = Some((g1, g2));
        }
    }
    Ok(ClosureReport {
        min_closed: known_min.unwrap_or(min_witness.is_none()),
        max_closed: known_max.unwrap_or(max_witness.is_none()),
        sampled: known_min.is_none(),
        min_witness,
        max_witness,
    })
}
