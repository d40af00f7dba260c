//! Rectangular kernel families, the improving-kernel / improving-utility operators,
//! consistency of (cone, family) pairs and constrained information design.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{
    closure_classify, coupling_program, dirac_orbits, membership, order_leq, sample_member, ConeSpec, OrbitPolyhedron,
};
use crate::envelope::concavification;
use crate::error::{dim_check, Error, Result};
use crate::lp::{solve_lp, LpStatus};
use crate::measure::{same_grid, Grid, Kernel, Measure};
use crate::optimize::solution_set_vertices;
use crate::scalar::{dot, Scalar};

/// Tolerance for row membership and for value comparisons in this module.
pub const FAMILY_TOL: f64 = 1e-9;

/// Rectangular family of kernels given by one polyhedron `P_x` of rows per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily<T: Scalar = f64> {
    pub grid: Arc<Grid<T>>,
    pub per_point_sets: Vec<OrbitPolyhedron<T>>,
}

fn mean_rows<T: Scalar>(grid: &Grid<T>) -> Vec<Vec<T>> {
    (0..grid.free_coords()).map(|k| grid.points().iter().map(|p| p[k].clone()).collect()).collect()
}

impl<T: Scalar> KernelFamily<T> {
    pub fn new(grid: Arc<Grid<T>>, per_point_sets: Vec<OrbitPolyhedron<T>>) -> Result<Self> {
        dim_check("kernel family rows", per_point_sets.len(), grid.len())?;
        for p in &per_point_sets {
            dim_check("row polyhedron", p.allowed.len(), grid.len())?;
        }
        Ok(KernelFamily { grid, per_point_sets })
    }

    /// Every row keeps the barycenter.
    pub fn martingale(grid: Arc<Grid<T>>) -> Self {
        let family = psi(&ConeSpec::convex(), &grid).expect("convex cone is valid on every grid");
        KernelFamily { grid, per_point_sets: family.per_point_sets }
    }

    /// Martingale rows that stay inside the cell of their base point.
    pub fn privacy(grid: Arc<Grid<T>>, partition: Vec<Vec<usize>>) -> Result<Self> {
        psi(&ConeSpec::partition_concave(partition).negate(), &grid)
    }

    pub fn identity(grid: Arc<Grid<T>>) -> Self {
        let n = grid.len();
        let sets = (0..n)
            .map(|x| {
                let mut p = OrbitPolyhedron::full(n);
                p.allowed = (0..n).map(|j| j == x).collect();
                p
            })
            .collect();
        KernelFamily { grid, per_point_sets: sets }
    }

    /// Rows whose mean lies within `r` of the base point (one-dimensional grids).
    pub fn bounded_drift(grid: Arc<Grid<T>>, r: T) -> Result<Self> {
        if grid.free_coords() != 1 {
            return Err(Error::Invalid("bounded drift needs a one-dimensional grid".into()));
        }
        let tau = mean_rows(&grid).remove(0);
        let neg: Vec<T> = tau.iter().map(|v| -v.clone()).collect();
        let sets = (0..grid.len())
            .map(|x| {
                let mut p = OrbitPolyhedron::full(grid.len());
                p.le.push((tau.clone(), tau[x].clone() + r.clone()));
                p.le.push((neg.clone(), r.clone() - tau[x].clone()));
                p
            })
            .collect();
        Ok(KernelFamily { grid, per_point_sets: sets })
    }

    /// Martingale rows supported within distance `r` (sup norm over free coordinates).
    pub fn ball(grid: Arc<Grid<T>>, r: T) -> Self {
        let mut fam = Self::martingale(grid.clone());
        let d = grid.free_coords();
        for (x, p) in fam.per_point_sets.iter_mut().enumerate() {
            for y in 0..grid.len() {
                let far = (0..d).any(|k| (grid.point(y)[k].clone() - grid.point(x)[k].clone()).abs() > r);
                if far {
                    p.allowed[y] = false;
                }
            }
        }
        fam
    }

    /// Stop now or take one step of `q`, with any randomization between the two.
    pub fn stop_or_continue(q: &Kernel<T>) -> Self {
        let grid = q.grid().clone();
        let n = grid.len();
        let sets = (0..n)
            .map(|x| {
                let row = q.row(x);
                let mut p = OrbitPolyhedron::full(n);
                p.allowed = (0..n).map(|y| y == x || !row[y].is_zero()).collect();
                let others: Vec<usize> = (0..n).filter(|&y| y != x && !row[y].is_zero()).collect();
                if let Some(&y0) = others.first() {
                    // η_y / q(y) equal across the moved-to points, and no more than one full step
                    for &y in &others[1..] {
                        let mut a = vec![T::zero(); n];
                        a[y] = row[y0].clone();
                        a[y0] = -row[y].clone();
                        p.eq.push((a, T::zero()));
                    }
                    let mut a = vec![T::zero(); n];
                    a[y0] = T::one();
                    p.le.push((a, row[y0].clone()));
                }
                p
            })
            .collect();
        KernelFamily { grid, per_point_sets: sets }
    }

    pub fn len(&self) -> usize {
        self.per_point_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_point_sets.is_empty()
    }

    pub fn contains_row(&self, x: usize, eta: &[T]) -> bool {
        !self.per_point_sets[x].violation(eta).is_pos(FAMILY_TOL)
    }

    pub fn contains(&self, k: &Kernel<T>) -> bool {
        (0..self.len()).all(|x| self.contains_row(x, k.row(x)))
    }

    pub fn contains_identity(&self) -> bool {
        self.contains(&Kernel::identity(self.grid.clone()))
    }

    /// Rows are nonempty polyhedra and hold their base point.
    pub fn validate(&self) -> Result<()> {
        if !self.contains_identity() {
            return Err(Error::Invalid("family does not contain the identity kernel".into()));
        }
        Ok(())
    }

    /// `max ∫g dη` over `P_x`, with a maximizing row.
    pub fn row_max(&self, x: usize, g: &[T]) -> Result<(T, Vec<T>)> {
        self.per_point_sets[x].maximize(g)
    }

    /// `min ∫g dη` over `P_x`, with a minimizing row.
    pub fn row_min(&self, x: usize, g: &[T]) -> Result<(T, Vec<T>)> {
        let neg: Vec<T> = g.iter().map(|v| -v.clone()).collect();
        let (v, eta) = self.row_max(x, &neg)?;
        Ok((-v, eta))
    }

    /// Kernel whose rows maximize `g` over each `P_x`.
    pub fn argmax_kernel(&self, g: &[T]) -> Result<Kernel<T>> {
        let rows = (0..self.len()).map(|x| Ok(self.row_max(x, g)?.1)).collect::<Result<Vec<_>>>()?;
        Kernel::from_lp_rows(self.grid.clone(), rows)
    }

    /// `μ ⪯^P ν`: some kernel of the family carries `μ` to `ν`.
    pub fn reaches(&self, mu: &Measure<T>, nu: &Measure<T>) -> Result<Option<Kernel<T>>> {
        same_grid(mu.grid(), nu.grid())?;
        let prog = coupling_program(mu.weights(), &self.per_point_sets, Some(nu.weights()));
        let sol = solve_lp(&prog.lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(Some(prog.kernel(self.grid.clone(), mu.weights(), &sol.primal)?)),
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::NumericalFailure("feasibility program reported unbounded".into())),
        }
    }
}

/// Improving kernels of a cone: `P_x = {η : ∫g dη >= g(x) for every g in C}`.
pub fn psi<T: Scalar>(cone: &ConeSpec<T>, grid: &Arc<Grid<T>>) -> Result<KernelFamily<T>> {
    let sets = dirac_orbits(&cone.negate(), grid)?;
    Ok(KernelFamily { grid: grid.clone(), per_point_sets: sets })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiMembership<T: Scalar = f64> {
    pub member: bool,
    /// Base point and row with `∫g dη < g(x)`.
    pub witness: Option<(usize, Vec<T>)>,
    /// `min_x (min_{η ∈ P_x} ∫g dη - g(x))`.
    pub slack: T,
}

/// Whether `g*P >= g` for every kernel of the family (one LP per point).
pub fn phi_membership<T: Scalar>(g: &[T], family: &KernelFamily<T>) -> Result<PhiMembership<T>> {
    dim_check("function", g.len(), family.grid.len())?;
    let mut slack: Option<T> = None;
    let mut witness = None;
    for x in 0..family.len() {
        let (v, eta) = family.row_min(x, g)?;
        let s = v - g[x].clone();
        if slack.as_ref().is_none_or(|w| s < *w) {
            if s.is_neg(FAMILY_TOL) {
                witness = Some((x, eta));
            }
            slack = Some(s);
        }
    }
    let slack = slack.unwrap_or_else(T::zero);
    Ok(PhiMembership { member: witness.is_none(), witness, slack })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionWitness<T: Scalar = f64> {
    pub first: Kernel<T>,
    pub second: Kernel<T>,
    /// Base point whose composed row leaves `P_x`.
    pub x: usize,
    pub row: Vec<T>,
    pub violation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport<T: Scalar = f64> {
    pub closed: bool,
    pub trials: usize,
    pub witness: Option<CompositionWitness<T>>,
}

/// Samples pairs of vertex kernels (rows maximizing a shared objective), composes them and
/// checks every composed row. Objectives are the signed coordinate functions first, then
/// seeded random vectors.
pub fn composition_closure_check<T: Scalar>(family: &KernelFamily<T>, trials: usize, seed: u64) -> Result<CompositionReport<T>> {
    let grid = &family.grid;
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objectives: Vec<Vec<T>> = Vec::new();
    for row in mean_rows(grid) {
        objectives.push(row.iter().map(|v| -v.clone()).collect());
        objectives.push(row);
    }
    while objectives.len() < trials.max(1) + 1 {
        objectives.push((0..n).map(|_| T::from_ratio(rng.gen_range(-1000..=1000), 1000)).collect());
    }
    let kernels = objectives.iter().map(|g| family.argmax_kernel(g)).collect::<Result<Vec<_>>>()?;
    let mut done = 0;
    for (a, k1) in kernels.iter().enumerate() {
        for (b, k2) in kernels.iter().enumerate() {
            if done == trials {
                break;
            }
            // random pairs after the aligned ones
            if a != b && rng.gen_range(0..kernels.len()) != 0 {
                continue;
            }
            done += 1;
            let comp = k1.compose(k2)?;
            for x in 0..n {
                let v = family.per_point_sets[x].violation(comp.row(x));
                if v.is_pos(FAMILY_TOL) {
                    let w = CompositionWitness { first: k1.clone(), second: k2.clone(), x, row: comp.row(x).to_vec(), violation: v };
                    return Ok(CompositionReport { closed: false, trials: done, witness: Some(w) });
                }
            }
        }
    }
    Ok(CompositionReport { closed: true, trials: done, witness: None })
}

/// Largest violation of `B`'s description by points of `A`, one LP per row of `B`.
fn containment_gap<T: Scalar>(a: &OrbitPolyhedron<T>, b: &OrbitPolyhedron<T>) -> Result<T> {
    let n = a.allowed.len();
    let mut worst = T::zero();
    for j in 0..n {
        if !b.allowed[j] && a.allowed[j] {
            let e: Vec<T> = (0..n).map(|k| if k == j { T::one() } else { T::zero() }).collect();
            worst = T::max_of(worst, a.maximize(&e)?.0);
        }
    }
    for (row, rhs) in &b.le {
        worst = T::max_of(worst, a.maximize(row)?.0 - rhs.clone());
    }
    for (row, rhs) in &b.eq {
        let neg: Vec<T> = row.iter().map(|v| -v.clone()).collect();
        worst = T::max_of(worst, a.maximize(row)?.0 - rhs.clone());
        worst = T::max_of(worst, a.maximize(&neg)?.0 + rhs.clone());
    }
    Ok(worst)
}

/// Largest two-sided containment gap between two families, row by row.
pub fn family_distance<T: Scalar>(a: &KernelFamily<T>, b: &KernelFamily<T>) -> Result<T> {
    same_grid(&a.grid, &b.grid)?;
    let mut worst = T::zero();
    for (pa, pb) in a.per_point_sets.iter().zip(&b.per_point_sets) {
        worst = T::max_of(worst, containment_gap(pa, pb)?);
        worst = T::max_of(worst, containment_gap(pb, pa)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport<T: Scalar = f64> {
    pub max_closed: bool,
    pub max_witness: Option<(Vec<T>, Vec<T>)>,
    pub composition: CompositionReport<T>,
    pub psi_of_c: KernelFamily<T>,
    /// Two-sided polyhedral distance between `Ψ(C)` and the family.
    pub psi_residual: T,
    /// Sampled functions on which cone membership and `Φ(P)` membership disagree.
    pub phi_disagreements: usize,
    pub phi_samples: usize,
    /// Sampled measure pairs on which the value order and the family order disagree.
    pub order_disagreements: usize,
    pub order_samples: usize,
    pub consistent: bool,
}

impl<T: Scalar> ConsistencyReport<T> {
    /// Membership in `Φ(P)` for the family under test.
    pub fn phi_member(&self, g: &[T], family: &KernelFamily<T>) -> Result<bool> {
        Ok(phi_membership(g, family)?.member)
    }
}

fn vertex_kernel<T: Scalar, R: Rng>(family: &KernelFamily<T>, rng: &mut R) -> Result<Kernel<T>> {
    let g: Vec<T> = (0..family.grid.len()).map(|_| T::from_ratio(rng.gen_range(-1000..=1000), 1000)).collect();
    family.argmax_kernel(&g)
}

/// Checks a (cone, family) pair: max-closure of the cone, composition closure of the
/// family, `Ψ(C) = P` as polyhedra, `Φ(P) = C` on sampled functions and equality of the
/// value order `∫g dμ <= ∫g dν (g ∈ C)` with reachability under the family.
pub fn consistency_check<T: Scalar>(
    cone: &ConeSpec<T>,
    family: &KernelFamily<T>,
    samples: usize,
    seed: u64,
) -> Result<ConsistencyReport<T>> {
    let grid = &family.grid;
    let n = grid.len();
    let closure = closure_classify(cone, grid, samples.max(8), seed)?;
    let composition = composition_closure_check(family, samples.max(8), seed)?;
    let psi_of_c = psi(cone, grid)?;
    let psi_residual = family_distance(&psi_of_c, family)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);

    let mut phi_disagreements = 0;
    let mut phi_samples = 0;
    for k in 0..samples {
        let g = match k % 3 {
            0 => sample_member(cone, grid, &mut rng)?,
            1 => {
                let base = sample_member(cone, grid, &mut rng)?;
                let i = rng.gen_range(0..n);
                let mut g = base;
                g[i] = g[i].clone() - T::from_ratio(rng.gen_range(1..=100), 100);
                g
            }
            _ => (0..n).map(|_| T::from_ratio(rng.gen_range(-1000..=1000), 1000)).collect(),
        };
        phi_samples += 1;
        if membership(&g, cone, grid)? != phi_membership(&g, family)?.member {
            phi_disagreements += 1;
        }
    }

    let mut order_disagreements = 0;
    let mut order_samples = 0;
    for k in 0..samples {
        let mu = Measure::random(grid.clone(), &mut rng, 0.5);
        let nu = if k % 2 == 0 {
            vertex_kernel(family, &mut rng)?.push(&mu)?
        } else if k % 4 == 1 {
            vertex_kernel(&psi_of_c, &mut rng)?.push(&mu)?
        } else {
            Measure::random(grid.clone(), &mut rng, 0.5)
        };
        order_samples += 1;
        let by_value = match order_leq(&mu, &nu, cone) {
            Ok(v) => v.holds,
            Err(Error::Unsupported(_)) => continue,
            Err(e) => return Err(e),
        };
        if by_value != family.reaches(&mu, &nu)?.is_some() {
            order_disagreements += 1;
        }
    }
    let consistent = closure.max_closed
        && composition.closed
        && !psi_residual.is_pos(1e-8)
        && phi_disagreements == 0
        && order_disagreements == 0;
    Ok(ConsistencyReport {
        max_closed: closure.max_closed,
        max_witness: closure.max_witness,
        composition,
        psi_of_c,
        psi_residual,
        phi_disagreements,
        phi_samples,
        order_disagreements,
        order_samples,
        consistent,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCertificate<T: Scalar = f64> {
    /// `supp(ν*) ⊆ {f = f̂}`.
    pub support_in_contact: bool,
    /// `|∫f dν* - f̂(prior)|`.
    pub value_gap: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport<T: Scalar = f64> {
    pub value: T,
    pub posterior: Measure<T>,
    /// Envelope of `f` under the family, evaluated at every grid point.
    pub fhat: Vec<T>,
    pub composition_closed: bool,
    /// Rounds of `f̂ ← max_{η ∈ P_x} ∫f̂ dη` performed.
    pub rounds: usize,
    pub converged: bool,
    pub certificate: DesignCertificate<T>,
}

/// Constrained information design at a grid prior: iterates the one-step envelope to a
/// fixed point (at most `depth` rounds) and follows the maximizing kernels from the prior.
pub fn constrained_design<T: Scalar>(
    f: &[T],
    prior: usize,
    family: &KernelFamily<T>,
    depth: usize,
) -> Result<DesignReport<T>> {
    let grid = &family.grid;
    let n = grid.len();
    dim_check("function", f.len(), n)?;
    if prior >= n {
        return Err(Error::Invalid(format!("prior index {prior} is off the grid")));
    }
    family.validate()?;
    let composition_closed = composition_closure_check(family, 16, 0)?.closed;
    let mut fhat = f.to_vec();
    let mut kernels: Vec<Kernel<T>> = Vec::new();
    let mut converged = false;
    for _ in 0..depth.max(1) {
        let k = family.argmax_kernel(&fhat)?;
        let next = k.expect(&fhat)?;
        let moved = next.iter().zip(&fhat).any(|(a, b)| !a.approx_eq(b, 1e-12));
        kernels.push(k);
        fhat = next;
        if !moved {
            converged = true;
            break;
        }
    }
    let rounds = kernels.len();
    // the last kernel acts first
    let mut nu = Measure::dirac(grid.clone(), prior);
    for k in kernels.iter().rev() {
        nu = k.push(&nu)?;
    }
    let value = fhat[prior].clone();
    let contact_ok = nu.support().iter().all(|&y| fhat[y].approx_eq(&f[y], 1e-8));
    let value_gap = (nu.integrate(f)? - value.clone()).abs();
    Ok(DesignReport {
        value,
        posterior: nu,
        fhat,
        composition_closed,
        rounds,
        converged,
        certificate: DesignCertificate { support_in_contact: contact_ok, value_gap },
    })
}

/// `b = P*a` for some martingale kernel `P`, i.e. `b` is Blackwell-more-informative than `a`.
pub fn blackwell_dominates<T: Scalar>(b: &Measure<T>, a: &Measure<T>) -> Result<bool> {
    Ok(KernelFamily::martingale(a.grid().clone()).reaches(a, b)?.is_some())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict<T: Scalar = f64> {
    pub composition_closed: bool,
    /// Grid prior where the constrained designer gains nothing but the unconstrained one does.
    pub value_eliminating: Option<usize>,
    pub constrained: Measure<T>,
    pub unconstrained: Measure<T>,
    pub unconstrained_dominates: bool,
    pub constrained_dominates: bool,
    pub strictly_dominated: bool,
    /// The dichotomy holds: value elimination, or no strict domination (plus weak
    /// domination of the unconstrained optimum on two-state grids).
    pub holds: bool,
}

/// Compares the constrained optimum with the unique unconstrained optimum at `prior`.
pub fn constrained_vs_kg<T: Scalar>(
    f: &[T],
    prior: usize,
    family: &KernelFamily<T>,
    depth: usize,
) -> Result<ComparisonVerdict<T>> {
    let grid = &family.grid;
    let n = grid.len();
    let design = constrained_design(f, prior, family, depth)?;
    let dirac = Measure::dirac(grid.clone(), prior);
    let kg = solution_set_vertices(f, &dirac, &ConeSpec::concave(), 2, 0)?;
    if kg.vertices.len() != 1 {
        return Err(Error::Inapplicable("the unconstrained optimum is not unique at this prior".into()));
    }
    let unconstrained = kg.vertices[0].clone();
    let cav = concavification(f, grid)?;
    let value_eliminating =
        (0..n).find(|&x| design.fhat[x].approx_eq(&f[x], 1e-9) && (cav[x].clone() - f[x].clone()).is_pos(1e-9));
    let unconstrained_dominates = blackwell_dominates(&unconstrained, &design.posterior)?;
    let constrained_dominates = blackwell_dominates(&design.posterior, &unconstrained)?;
    let strictly_dominated = unconstrained_dominates && !constrained_dominates;
    let binary = grid.free_coords() == 1;
    let holds = value_eliminating.is_some() || (!strictly_dominated && (!binary || constrained_dominates));
    Ok(ComparisonVerdict {
        composition_closed: design.composition_closed,
        value_eliminating,
        constrained: design.posterior,
        unconstrained,
        unconstrained_dominates,
        constrained_dominates,
        strictly_dominated,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynkinReport<T: Scalar = f64> {
    /// Value of stop-or-continue design iterated `depth` times, at every grid point.
    pub iterated: Vec<T>,
    /// Least `g >= f` with `g >= g*Q`, from one linear program.
    pub majorant: Vec<T>,
    pub max_gap: T,
    pub rounds: usize,
}

/// Compares iterated optimal stopping under `q` with the least excessive majorant of `f`.
pub fn dynkin_check<T: Scalar>(f: &[T], q: &Kernel<T>, depth: usize) -> Result<DynkinReport<T>> {
    let grid = q.grid();
    let n = grid.len();
    dim_check("function", f.len(), n)?;
    let family = KernelFamily::stop_or_continue(q);
    let mut v = f.to_vec();
    let mut rounds = 0;
    for _ in 0..depth {
        let next = family.argmax_kernel(&v)?.expect(&v)?;
        rounds += 1;
        let moved = next.iter().zip(&v).any(|(a, b)| !a.approx_eq(b, 1e-14));
        v = next;
        if !moved {
            break;
        }
    }
    let mut lp = crate::lp::LinearProgram::minimize(vec![T::one(); n]);
    for x in 0..n {
        lp.set_free(x);
        let mut row = vec![T::zero(); n];
        row[x] = T::one();
        lp.add_ge(row, f[x].clone());
        // (Qg)(x) - g(x) <= 0
        let mut row: Vec<T> = q.row(x).to_vec();
        row[x] = row[x].clone() - T::one();
        lp.add_le(row, T::zero());
    }
    let sol = solve_lp(&lp)?;
    let majorant = sol.primal.clone();
    sol.value_or_err()?;
    let max_gap = v.iter().zip(&majorant).fold(T::zero(), |w, (a, b)| T::max_of(w, (a.clone() - b.clone()).abs()));
    Ok(DynkinReport { iterated: v, majorant, max_gap, rounds })
}

/// Expected value of `g` after one application of every kernel in `ks`, last one first.
pub fn chained_value<T: Scalar>(g: &[T], ks: &[Kernel<T>], x: usize) -> Result<T> {
    let grid = ks.first().map(|k| k.grid().clone()).ok_or_else(|| Error::Invalid("no kernels".into()))?;
    let mut nu = Measure::dirac(grid, x);
    for k in ks.iter().rev() {
        nu = k.push(&nu)?;
    }
    Ok(dot(g, nu.weights()))
}
