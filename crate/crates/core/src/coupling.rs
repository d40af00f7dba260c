//! Order-preserving couplings, unique rationalization, extreme points of orbits and
//! explicit exposed points of concave-order and dominance orbits.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{coupling_program, dirac_orbit, dirac_orbits, generators, order_leq, ConeSpec, CouplingProgram};
use crate::envelope::{c_envelope, monotone_envelope};
use crate::error::{dim_check, Error, Result};
use crate::lp::{enumerate_vertices, farkas_margin, rank, solve_lp, vertex_test, LinearProgram, LpStatus, Polyhedron, Sense, TIGHT_TOL};
use crate::measure::{same_grid, Grid, Kernel, Measure};
use crate::optimize::orbit_vertex;
use crate::scalar::{dot, max_abs_diff, Scalar};

/// Tolerance for grouping envelope values and for `f̄ = f` in the constructors.
pub const REGION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingStatus {
    Found,
    NoCoupling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingResult<T: Scalar = f64> {
    pub status: CouplingStatus,
    pub kernel: Option<Kernel<T>>,
    /// Test function `h` with `∫h dν` above what any admissible coupling can reach.
    pub farkas: Option<Vec<T>>,
    pub margin: Option<T>,
}

fn coupling_lp<T: Scalar>(mu: &Measure<T>, nu: &Measure<T>, cone: &ConeSpec<T>) -> Result<CouplingProgram<T>> {
    same_grid(mu.grid(), nu.grid())?;
    let orbits = dirac_orbits(cone, mu.grid())?;
    Ok(coupling_program(mu.weights(), &orbits, Some(nu.weights())))
}

/// Kernel `P` with `P*μ = ν` whose rows stay in the Dirac orbits of the cone.
pub fn strassen_coupling<T: Scalar>(mu: &Measure<T>, nu: &Measure<T>, cone: &ConeSpec<T>) -> Result<CouplingResult<T>> {
    let prog = coupling_lp(mu, nu, cone)?;
    let sol = solve_lp(&prog.lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let k = prog.kernel(mu.grid().clone(), mu.weights(), &sol.primal)?;
            Ok(CouplingResult { status: CouplingStatus::Found, kernel: Some(k), farkas: None, margin: None })
        }
        LpStatus::Infeasible => {
            let y = sol.farkas.expect("infeasible programs carry a certificate");
            let t0 = prog.target_row.unwrap();
            let h = (0..mu.len()).map(|j| -y.eq[t0 + j].clone()).collect();
            let margin = farkas_margin(&prog.lp, &y)?;
            Ok(CouplingResult { status: CouplingStatus::NoCoupling, kernel: None, farkas: Some(h), margin: Some(margin) })
        }
        LpStatus::Unbounded => Err(Error::NumericalFailure("coupling feasibility program reported unbounded".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rationalization<T: Scalar = f64> {
    pub unique: bool,
    /// One kernel when unique, two distinct ones otherwise.
    pub kernels: Vec<Kernel<T>>,
}

/// Whether exactly one order-preserving kernel carries `μ` to `ν` (rows off the support of
/// `μ` do not count).
///
/// Sixteen random functionals are maximized and minimized over the coupling polytope; if
/// none separates two couplings, every support coordinate of one coupling is minimized.
/// Mass is conserved, so no coordinate dropping below its value means the polytope is a point.
pub fn unique_rationalization_check<T: Scalar>(
    mu: &Measure<T>,
    nu: &Measure<T>,
    cone: &ConeSpec<T>,
) -> Result<Rationalization<T>> {
    let mut prog = coupling_lp(mu, nu, cone)?;
    let grid = mu.grid().clone();
    let nv = prog.vars.len();
    let base = solve_lp(&prog.lp)?;
    if !base.is_optimal() {
        return Err(Error::Precondition("no order-preserving coupling exists".into()));
    }
    let shape = prog.clone();
    let kernel = |g: &[T]| shape.kernel(grid.clone(), mu.weights(), g);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..16 {
        let c: Vec<T> = (0..nv).map(|_| T::from_ratio(rng.gen_range(-1000..=1000), 1000)).collect();
        prog.lp.objective = c.clone();
        prog.lp.sense = Sense::Maximize;
        let hi = solve_lp(&prog.lp)?;
        prog.lp.sense = Sense::Minimize;
        let lo = solve_lp(&prog.lp)?;
        let spread = hi.value_or_err()? - lo.value_or_err()?;
        if spread.is_pos(TIGHT_TOL) && max_abs_diff(&hi.primal, &lo.primal).is_pos(TIGHT_TOL) {
            return Ok(Rationalization { unique: false, kernels: vec![kernel(&hi.primal)?, kernel(&lo.primal)?] });
        }
    }
    prog.lp.sense = Sense::Minimize;
    for j in 0..nv {
        if !base.primal[j].is_pos(TIGHT_TOL) {
            continue;
        }
        prog.lp.objective = (0..nv).map(|k| if k == j { T::one() } else { T::zero() }).collect();
        let lo = solve_lp(&prog.lp)?;
        if (base.primal[j].clone() - lo.value_or_err()?).is_pos(TIGHT_TOL) {
            return Ok(Rationalization { unique: false, kernels: vec![kernel(&base.primal)?, kernel(&lo.primal)?] });
        }
    }
    Ok(Rationalization { unique: true, kernels: vec![kernel(&base.primal)?] })
}

/// Whether each row of `k` on the support of `mu` is a vertex of its Dirac orbit.
fn rows_pointwise_extreme<T: Scalar>(k: &Kernel<T>, mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<bool> {
    let grid = mu.grid();
    for x in mu.support() {
        let orb = dirac_orbit(cone, grid, x)?;
        let sup = orb.support();
        let lp = orb.restricted_program(Sense::Maximize, &vec![T::zero(); grid.len()], &sup);
        let row: Vec<T> = sup.iter().map(|&j| k.row(x)[j].clone()).collect();
        if !vertex_test(&lp, &row)?.is_vertex {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeReport {
    pub extreme: bool,
    /// Verdict of the unique-kernel characterization, for min-closed cones.
    pub characterization: Option<bool>,
}

/// Extremality of `ν` in `{ν' ⪯_C μ}` by a projected vertex test, cross-checked for
/// min-closed cones against "unique kernel with pointwise extreme rows".
pub fn orbit_extreme_report<T: Scalar>(nu: &Measure<T>, mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<ExtremeReport> {
    if !order_leq(nu, mu, cone)?.holds {
        return Err(Error::Precondition("ν is not dominated by μ".into()));
    }
    let extreme = orbit_vertex(nu, mu, cone)?;
    if !cone.coupling_exact(mu.grid()) {
        return Ok(ExtremeReport { extreme, characterization: None });
    }
    let r = unique_rationalization_check(mu, nu, cone)?;
    let pointwise = r.unique && rows_pointwise_extreme(&r.kernels[0], mu, cone)?;
    if pointwise != extreme {
        return Err(Error::InvariantViolation(format!(
            "vertex test says {extreme} but the kernel characterization says {pointwise}"
        )));
    }
    Ok(ExtremeReport { extreme, characterization: Some(pointwise) })
}

pub fn orbit_extreme_test<T: Scalar>(nu: &Measure<T>, mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<bool> {
    Ok(orbit_extreme_report(nu, mu, cone)?.extreme)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Simplex,
    Staircase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Grid points of the region, touching points included.
    pub points: Vec<usize>,
    pub touching: Vec<usize>,
    pub kind: RegionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposedConstruction<T: Scalar = f64> {
    pub exposing_f: Vec<T>,
    pub fbar: Vec<T>,
    pub contact_set: Vec<usize>,
    pub regions: Vec<Region>,
    pub transport: Kernel<T>,
    pub nu: Measure<T>,
}

fn check_full_support<T: Scalar>(mu: &Measure<T>) -> Result<()> {
    if mu.support().len() != mu.len() {
        return Err(Error::Precondition("μ must charge every grid point".into()));
    }
    Ok(())
}

/// Optimal face of `max{∫f dη : η ⪯_cav δ_x}` as an LP over all grid points.
fn concave_face<T: Scalar>(grid: &Grid<T>, f: &[T], fbar_x: &T, x: usize) -> Result<LinearProgram<T>> {
    let orb = dirac_orbit(&ConeSpec::concave(), grid, x)?;
    let mut lp = orb.to_program(Sense::Maximize, vec![T::zero(); grid.len()]);
    lp.add_ge(f.to_vec(), fbar_x.clone() - T::tol(1e-10));
    Ok(lp)
}

/// Points carrying mass in some optimal mixture at `x`.
fn touching_set<T: Scalar>(face: &mut LinearProgram<T>, candidates: &[usize]) -> Result<Vec<usize>> {
    let n = face.num_vars();
    let mut out = Vec::new();
    for &y in candidates {
        face.objective = (0..n).map(|k| if k == y { T::one() } else { T::zero() }).collect();
        if solve_lp(face)?.value_or_err()?.is_pos(TIGHT_TOL) {
            out.push(y);
        }
    }
    Ok(out)
}

fn affinely_independent<T: Scalar>(grid: &Grid<T>, pts: &[usize]) -> bool {
    let d = grid.free_coords();
    let rows: Vec<Vec<T>> = pts
        .iter()
        .map(|&i| grid.point(i)[..d].iter().cloned().chain(std::iter::once(T::one())).collect())
        .collect();
    rank(&rows) == pts.len()
}

fn finish<T: Scalar>(
    f: &[T],
    fbar: Vec<T>,
    contact_set: Vec<usize>,
    regions: Vec<Region>,
    rows: Vec<Vec<T>>,
    mu: &Measure<T>,
    cone: &ConeSpec<T>,
) -> Result<ExposedConstruction<T>> {
    let transport = Kernel::from_lp_rows(mu.grid().clone(), rows)?;
    let nu = transport.push(mu)?;
    if !orbit_extreme_test(&nu, mu, cone)? {
        return Err(Error::InvariantViolation("constructed measure is not an extreme point of the orbit".into()));
    }
    Ok(ExposedConstruction { exposing_f: f.to_vec(), fbar, contact_set, regions, transport, nu })
}

fn dirac_row<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    (0..n).map(|k| if k == i { T::one() } else { T::zero() }).collect()
}

/// Exposed point of `{ν ⪯_cav μ}` built from `f`: mass on the contact set stays put and
/// every other point is split barycentrically over the contact points of its hull face.
///
/// Faces are identified by touching sets (all contact points used by some optimal
/// mixture), so two points share a region exactly when they share a touching set.
pub fn mps_exposed_construct<T: Scalar>(f: &[T], mu: &Measure<T>) -> Result<ExposedConstruction<T>> {
    let grid = mu.grid();
    let n = grid.len();
    dim_check("function", f.len(), n)?;
    check_full_support(mu)?;
    let cone = ConeSpec::concave();
    let fbar = c_envelope(f, &cone, grid)?.fbar;
    let contact: Vec<usize> = (0..n).filter(|&i| fbar[i].approx_eq(&f[i], REGION_TOL)).collect();
    let mut rows = vec![Vec::new(); n];
    let mut regions: Vec<Region> = Vec::new();
    for x in 0..n {
        let mut face = concave_face(grid, f, &fbar[x], x)?;
        if contact.contains(&x) {
            let others: Vec<usize> = contact.iter().copied().filter(|&y| y != x).collect();
            let used = touching_set(&mut face, &others)?;
            if !used.is_empty() {
                let mut pts = vec![x];
                pts.extend(used);
                return Err(Error::NotExposable { reason: "contact is not strict".into(), points: pts });
            }
            rows[x] = dirac_row(n, x);
            continue;
        }
        let t = touching_set(&mut face, &contact)?;
        if !affinely_independent(grid, &t) {
            let mut pts = vec![x];
            pts.extend(&t);
            return Err(Error::NotExposable { reason: "affine envelope region is not simplicial".into(), points: pts });
        }
        face.objective = vec![T::zero(); n];
        let mut row = solve_lp(&face)?.primal;
        for (k, v) in row.iter_mut().enumerate() {
            if !t.contains(&k) {
                *v = T::zero();
            }
        }
        rows[x] = row;
        match regions.iter_mut().find(|r| r.touching == t) {
            Some(r) => r.points.push(x),
            None => regions.push(Region { points: t.iter().copied().chain(std::iter::once(x)).collect(), touching: t, kind: RegionKind::Simplex }),
        }
    }
    for r in &mut regions {
        r.points.sort_unstable();
    }
    finish(f, fbar, contact, regions, rows, mu, &cone)
}

/// Exposed point of `{ν ⪯_≤ μ}` (lower stochastic dominance) built from `f`: every
/// non-contact point moves down to the unique contact point below it on its envelope level.
pub fn lsd_exposed_construct<T: Scalar>(f: &[T], mu: &Measure<T>) -> Result<ExposedConstruction<T>> {
    let grid = mu.grid();
    let n = grid.len();
    dim_check("function", f.len(), n)?;
    check_full_support(mu)?;
    let fbar = monotone_envelope(f, grid)?;
    let contact: Vec<usize> = (0..n).filter(|&i| fbar[i].approx_eq(&f[i], REGION_TOL)).collect();
    for &x in &contact {
        let tie = (0..n).find(|&y| y != x && grid.leq(y, x) && !(f[x].clone() - f[y].clone()).is_pos(REGION_TOL));
        if let Some(y) = tie {
            return Err(Error::NotExposable { reason: "monotone contact is not strict".into(), points: vec![x, y] });
        }
    }
    let mut rows = vec![Vec::new(); n];
    let mut regions: Vec<Region> = Vec::new();
    for x in 0..n {
        if contact.contains(&x) {
            rows[x] = dirac_row(n, x);
            continue;
        }
        let level = |i: usize| fbar[i].approx_eq(&fbar[x], REGION_TOL);
        let admissible: Vec<usize> = contact.iter().copied().filter(|&t| level(t) && grid.leq(t, x)).collect();
        if admissible.len() != 1 {
            let mut pts = vec![x];
            pts.extend(&admissible);
            return Err(Error::NotExposable { reason: format!("{} admissible minimal elements", admissible.len()), points: pts });
        }
        rows[x] = dirac_row(n, admissible[0]);
        let touching: Vec<usize> = contact.iter().copied().filter(|&t| level(t)).collect();
        match regions.iter_mut().find(|r| r.touching == touching) {
            Some(r) => r.points.push(x),
            None => regions.push(Region {
                points: touching.iter().copied().chain(std::iter::once(x)).collect(),
                touching,
                kind: RegionKind::Staircase,
            }),
        }
    }
    for r in &mut regions {
        r.points.sort_unstable();
    }
    finish(f, fbar, contact, regions, rows, mu, &ConeSpec::nondecreasing())
}

/// One row per grid point: coordinates, `f`, `f̄`, region index (-1 off regions),
/// contact flag and the weight of the constructed measure.
pub fn exposed_csv<T: Scalar>(grid: &Grid<T>, c: &ExposedConstruction<T>) -> String {
    let mut out = String::new();
    for k in 0..grid.dim() {
        let _ = write!(out, "x{k},");
    }
    out.push_str("f,fbar,region,contact,nu\n");
    for (i, p) in grid.points().iter().enumerate() {
        for v in p {
            let _ = write!(out, "{},", v.to_f64_lossy());
        }
        let region = c.regions.iter().position(|r| r.points.contains(&i) && !r.touching.contains(&i)).map_or(-1, |r| r as i64);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.exposing_f[i].to_f64_lossy(),
            c.fbar[i].to_f64_lossy(),
            region,
            u8::from(c.contact_set.contains(&i)),
            c.nu.weight(i).to_f64_lossy()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport<T: Scalar = f64> {
    /// Vertices of `{(μ1, μ2) : μ1, μ2 ∈ M, μ2 ⪯_C μ1}`.
    pub chain_vertices: Vec<(Vec<T>, Vec<T>)>,
    /// Pairs with `μ1` a vertex of `M` and `μ2` a vertex of `{μ ∈ M : μ ⪯_C μ1}`.
    pub decomposed: Vec<(Vec<T>, Vec<T>)>,
    pub agree: bool,
}

fn widen<T: Scalar>(row: &[T], shift: usize, n: usize) -> Vec<T> {
    let mut r = vec![T::zero(); 2 * n];
    for (j, a) in row.iter().enumerate() {
        r[shift + j] = a.clone();
    }
    r
}

fn with_simplex<T: Scalar>(m: &Polyhedron<T>, n: usize) -> Polyhedron<T> {
    let mut p = m.clone();
    p.objective = vec![T::zero(); n];
    p.add_eq(vec![T::one(); n], T::one());
    p
}

/// Compares the vertices of the two-element chain polytope with the decomposed pairs, both
/// by exhaustive basis enumeration. `m` describes `M` over the grid weights (nonnegativity
/// and total mass are added); the cone needs a finite generating set on the grid.
pub fn chain_extreme_check<T: Scalar>(
    m: &Polyhedron<T>,
    cone: &ConeSpec<T>,
    grid: &Grid<T>,
    max_systems: usize,
) -> Result<ChainReport<T>> {
    let n = grid.len();
    dim_check("chain polyhedron", m.num_vars(), n)?;
    let gens = generators(&cone.canonical(), grid)
        .ok_or_else(|| Error::Unsupported(format!("the {} cone has no finite generators here", cone.label())))?;
    let base = with_simplex(m, n);
    let mut chain: Polyhedron<T> = LinearProgram::feasibility(2 * n);
    for shift in [0, n] {
        for (row, b) in base.eq_lhs.iter().zip(&base.eq_rhs) {
            chain.add_eq(widen(row, shift, n), b.clone());
        }
        for (row, b) in base.ineq_lhs.iter().zip(&base.ineq_rhs) {
            chain.add_le(widen(row, shift, n), b.clone());
        }
        for j in 0..n {
            chain.lower[shift + j] = base.lower[j].clone();
            chain.upper[shift + j] = base.upper[j].clone();
        }
    }
    for g in &gens {
        // ∫g dμ2 - ∫g dμ1 <= 0
        let mut row = widen(g, n, n);
        for (j, v) in g.iter().enumerate() {
            row[j] = -v.clone();
        }
        chain.add_le(row, T::zero());
    }
    let chain_vertices: Vec<(Vec<T>, Vec<T>)> =
        enumerate_vertices(&chain, max_systems)?.into_iter().map(|v| (v[..n].to_vec(), v[n..].to_vec())).collect();
    let mut decomposed = Vec::new();
    for v in enumerate_vertices(&base, max_systems)? {
        let mut orbit = base.clone();
        for g in &gens {
            orbit.add_le(g.clone(), dot(g, &v));
        }
        for w in enumerate_vertices(&orbit, max_systems)? {
            decomposed.push((v.clone(), w));
        }
    }
    let same = |a: &(Vec<T>, Vec<T>), b: &(Vec<T>, Vec<T>)| {
        max_abs_diff(&a.0, &b.0).near_zero(1e-9) && max_abs_diff(&a.1, &b.1).near_zero(1e-9)
    };
    let agree = chain_vertices.len() == decomposed.len()
        && chain_vertices.iter().all(|a| decomposed.iter().any(|b| same(a, b)))
        && decomposed.iter().all(|b| chain_vertices.iter().any(|a| same(a, b)));
    Ok(ChainReport { chain_vertices, decomposed, agree })
}
