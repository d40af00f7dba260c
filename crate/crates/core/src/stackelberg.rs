//! Leader/follower problems over stochastic orders: the follower picks `ν ⪯_C μ` to
//! maximize `∫f dν`, breaking ties for the leader, who picks `μ ∈ M`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::{dirac_orbit, generators, ConeSpec};
use crate::envelope::c_envelope;
use crate::error::{dim_check, Error, Result};
use crate::lp::{enumerate_vertices, projected_vertex_test, solve_lp, vertex_test, LinearProgram, Sense};
use crate::measure::{Grid, Kernel, Measure};
use crate::optimize::{feasible_set, optimal_face, solution_set_vertices, value, value_affinity_check};
use crate::scalar::{cast, cast_vec, dot, Scalar};

/// Slack allowed on the follower's optimality row in floating point.
pub const FACE_TOL: f64 = 1e-10;

/// Leader's feasible set `M ⊆ Δ(grid)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LeaderSet<T: Scalar = f64> {
    Simplex,
    /// `{μ : μ ⪯_{C_A} γ}`.
    OrbitOf { gamma: Measure<T>, cone: ConeSpec<T> },
    /// Measures satisfying the listed rows.
    CustomPolytope { eq: Vec<(Vec<T>, T)>, le: Vec<(Vec<T>, T)> },
}

impl<T: Scalar> LeaderSet<T> {
    /// `M` as a polyhedron over auxiliary variables with `μ = proj · z`.
    pub fn program(&self, grid: &Arc<Grid<T>>) -> Result<(LinearProgram<T>, Vec<Vec<T>>)> {
        let n = grid.len();
        let identity = || (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
        match self {
            LeaderSet::Simplex => {
                let mut lp = LinearProgram::maximize(vec![T::zero(); n]);
                lp.add_eq(vec![T::one(); n], T::one());
                Ok((lp, identity()))
            }
            LeaderSet::OrbitOf { gamma, cone } => {
                if !gamma.grid().same_as(grid) {
                    return Err(Error::Dimension("γ lives on a different grid".into()));
                }
                let fs = feasible_set(gamma, cone)?;
                Ok((fs.lp, fs.proj))
            }
            LeaderSet::CustomPolytope { eq, le } => {
                let mut lp = LinearProgram::maximize(vec![T::zero(); n]);
                lp.add_eq(vec![T::one(); n], T::one());
                for (a, b) in eq {
                    dim_check("leader row", a.len(), n)?;
                    lp.add_eq(a.clone(), b.clone());
                }
                for (a, b) in le {
                    dim_check("leader row", a.len(), n)?;
                    lp.add_le(a.clone(), b.clone());
                }
                Ok((lp, identity()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackelbergProblem<T: Scalar = f64> {
    pub grid: Arc<Grid<T>>,
    pub leader_set: LeaderSet<T>,
    pub follower_cone: ConeSpec<T>,
    /// Follower objective.
    pub f: Vec<T>,
    /// Leader payoff `∫w_A dμ + ∫w_B dν`.
    pub w_a: Vec<T>,
    pub w_b: Vec<T>,
}

impl<T: Scalar> StackelbergProblem<T> {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        dim_check("follower objective", self.f.len(), n)?;
        dim_check("w_A", self.w_a.len(), n)?;
        dim_check("w_B", self.w_b.len(), n)?;
        self.follower_cone.validate(&self.grid)
    }

    pub fn map_scalar<U: Scalar>(&self) -> StackelbergProblem<U> {
        let grid = Arc::new(self.grid.map_scalar::<U>());
        let rows = |rs: &[(Vec<T>, T)]| rs.iter().map(|(a, b)| (cast_vec(a), cast(b))).collect();
        let leader_set = match &self.leader_set {
            LeaderSet::Simplex => LeaderSet::Simplex,
            LeaderSet::OrbitOf { gamma, cone } => {
                LeaderSet::OrbitOf { gamma: gamma.map_scalar(grid.clone()), cone: cone.map_scalar() }
            }
            LeaderSet::CustomPolytope { eq, le } => LeaderSet::CustomPolytope { eq: rows(eq), le: rows(le) },
        };
        StackelbergProblem {
            leader_set,
            follower_cone: self.follower_cone.map_scalar(),
            f: cast_vec(&self.f),
            w_a: cast_vec(&self.w_a),
            w_b: cast_vec(&self.w_b),
            grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedObjective<T: Scalar = f64> {
    /// Follower value `f̄(x)` at each Dirac.
    pub fbar: Vec<T>,
    /// `w*_B(x) = max{∫w_B dη : η optimal for the follower at δ_x}`.
    pub w_b_star: Vec<T>,
    /// `w_A + w*_B`.
    pub total: Vec<T>,
    /// Follower rows attaining `w*_B`.
    pub rows: Vec<Vec<T>>,
}

fn orbit_cone<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>) -> Result<ConeSpec<T>> {
    let c = cone.canonical();
    if c.known_min_closed() != Some(true) || !c.coupling_exact(grid) {
        return Err(Error::Unsupported(format!(
            "the {} follower order has no pointwise reduction on this grid (min-closure required)",
            cone.label()
        )));
    }
    Ok(c)
}

/// Follower face at `δ_x` with the leader's tie-break: maximize `∫f dη` over the Dirac orbit,
/// then `∫w_B dη` over the optimal face.
fn lexicographic_row<T: Scalar>(cone: &ConeSpec<T>, grid: &Grid<T>, f: &[T], w_b: &[T], x: usize) -> Result<(T, T, Vec<T>)> {
    let orbit = dirac_orbit(cone, grid, x)?;
    let sup = orbit.support();
    let (fx, _) = orbit.maximize(f)?;
    let mut lp = orbit.restricted_program(Sense::Maximize, w_b, &sup);
    let f_row: Vec<T> = sup.iter().map(|&j| f[j].clone()).collect();
    lp.add_ge(f_row, fx.clone() - T::tol(FACE_TOL));
    let sol = solve_lp(&lp)?;
    let v = sol.value_or_err()?;
    let mut eta = vec![T::zero(); grid.len()];
    for (k, &j) in sup.iter().enumerate() {
        eta[j] = sol.primal[k].clone();
    }
    Ok((fx, v, eta))
}

/// `w_A + w*_B`, with the follower's pointwise optimal rows.
pub fn modified_objective<T: Scalar>(problem: &StackelbergProblem<T>) -> Result<ModifiedObjective<T>> {
    problem.validate()?;
    let grid = &problem.grid;
    let cone = orbit_cone(&problem.follower_cone, grid)?;
    let n = grid.len();
    let mut fbar = Vec::with_capacity(n);
    let mut w_b_star = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for x in 0..n {
        let (fx, wx, eta) = lexicographic_row(&cone, grid, &problem.f, &problem.w_b, x)?;
        fbar.push(fx);
        w_b_star.push(wx);
        rows.push(eta);
    }
    let total = problem.w_a.iter().zip(&w_b_star).map(|(a, b)| a.clone() + b.clone()).collect();
    Ok(ModifiedObjective { fbar, w_b_star, total, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<T: Scalar = f64> {
    pub mu_star: Measure<T>,
    pub nu_star: Measure<T>,
    pub leader_value: T,
    pub w_b_star: Vec<T>,
    /// Follower kernel with `ν* = kernel * μ*`.
    pub kernel: Kernel<T>,
    /// `μ*` is a vertex of `M`.
    pub mu_extreme: bool,
    /// `ν*` is a vertex of `{ν ⪯_C μ*}`.
    pub nu_extreme: bool,
}

/// Leader-optimal equilibrium through the modified objective: one LP over `M`, then the
/// follower's pointwise tie-breaking rows.
pub fn solve_stackelberg<T: Scalar>(problem: &StackelbergProblem<T>) -> Result<EquilibriumReport<T>> {
    let grid = &problem.grid;
    let m = modified_objective(problem)?;
    let (mut lp, proj) = problem.leader_set.program(grid)?;
    let obj: Vec<T> = (0..lp.num_vars()).map(|j| proj.iter().zip(&m.total).fold(T::zero(), |a, (r, w)| a + r[j].clone() * w.clone())).collect();
    lp.objective = obj;
    lp.sense = Sense::Maximize;
    let sol = solve_lp(&lp)?;
    let leader_value = sol.value_or_err()?;
    let mu_w: Vec<T> = proj.iter().map(|r| dot(r, &sol.primal)).collect();
    let mu_star = Measure::new(grid.clone(), mu_w)?;
    let kernel = Kernel::from_lp_rows(grid.clone(), m.rows.clone())?;
    let nu_star = kernel.push(&mu_star)?;

    let follower_best = value(&problem.f, &mu_star, &problem.follower_cone)?;
    let got = nu_star.integrate(&problem.f)?;
    if !got.approx_eq(&follower_best, 1e-8) {
        return Err(Error::InvariantViolation(format!(
            "reconstructed follower choice earns {got}, below the follower value {follower_best}"
        )));
    }
    let paid = mu_star.integrate(&problem.w_a)? + nu_star.integrate(&problem.w_b)?;
    if !paid.approx_eq(&leader_value, 1e-8) {
        return Err(Error::InvariantViolation(format!("leader payoff {paid} differs from the modified value {leader_value}")));
    }
    let (mu_extreme, _) = projected_vertex_test(&lp, &proj, mu_star.weights())?;
    let fs = feasible_set(&mu_star, &problem.follower_cone)?;
    let (nu_extreme, _) = projected_vertex_test(&fs.lp, &fs.proj, nu_star.weights())?;
    Ok(EquilibriumReport { mu_star, nu_star, leader_value, w_b_star: m.w_b_star, kernel, mu_extreme, nu_extreme })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiConvexReport<T: Scalar = f64> {
    pub mu_star: Measure<T>,
    pub nu_star: Measure<T>,
    pub value: T,
    pub leader_vertices: usize,
    pub truncated: bool,
}

/// General leader objective `W(μ, ν)`, maximized over vertices of `M` and vertices of the
/// follower's optimal face; exact for quasi-convex `W`.
pub fn solve_quasi_convex<T: Scalar, W>(problem: &StackelbergProblem<T>, w: W, cap: usize) -> Result<QuasiConvexReport<T>>
where
    W: Fn(&Measure<T>, &Measure<T>) -> T,
{
    problem.validate()?;
    let grid = &problem.grid;
    let (lp, proj) = problem.leader_set.program(grid)?;
    let raw = enumerate_vertices(&lp, 200_000)?;
    let mut mus: Vec<Vec<T>> = Vec::new();
    for z in raw {
        let mu: Vec<T> = proj.iter().map(|r| dot(r, &z)).collect();
        if !mus.iter().any(|v| crate::scalar::max_abs_diff(v, &mu).near_zero(1e-9)) {
            mus.push(mu);
        }
    }
    let truncated_m = mus.len() > cap;
    mus.truncate(cap);
    let mut best: Option<(T, Measure<T>, Measure<T>)> = None;
    let mut truncated = truncated_m;
    for mu in &mus {
        let mu = Measure::new(grid.clone(), mu.clone())?;
        let face = solution_set_vertices(&problem.f, &mu, &problem.follower_cone, cap, 0)?;
        truncated |= face.truncated;
        for nu in face.vertices {
            let v = w(&mu, &nu);
            if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
                best = Some((v, mu.clone(), nu));
            }
        }
    }
    let (value, mu_star, nu_star) = best.ok_or_else(|| Error::Invalid("leader set has no vertices".into()))?;
    Ok(QuasiConvexReport { mu_star, nu_star, value, leader_vertices: mus.len(), truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphWitness<T: Scalar = f64> {
    /// Two graph points whose midpoint leaves the graph.
    pub mu: (Measure<T>, Measure<T>),
    pub nu: (Measure<T>, Measure<T>),
    /// Follower value at the midpoint leader choice and at the midpoint follower choice.
    pub mid_value: T,
    pub mid_attained: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidReport<T: Scalar = f64> {
    pub graph_vertices: usize,
    pub decomposed: usize,
    /// Graph vertices whose `μ` is not a vertex of `M` or whose `ν` is not a vertex of the face.
    pub failures: Vec<(Vec<T>, Vec<T>)>,
    pub holds: bool,
    pub non_convex_witness: Option<GraphWitness<T>>,
}

/// Enumerates the vertices of `{(μ, ν) : μ ∈ M, ν ⪯_C μ, ∫f dν = ∫f̄ dμ}` and checks each
/// splits as (vertex of `M`, vertex of the follower's optimal face). For orders that are
/// not min-closed the graph need not be convex; a non-convexity witness is searched instead.
pub fn trapezoid_verify<T: Scalar>(problem: &StackelbergProblem<T>, exhaustive_cap: usize) -> Result<TrapezoidReport<T>> {
    problem.validate()?;
    let grid = &problem.grid;
    let n = grid.len();
    if n > exhaustive_cap {
        return Err(Error::Size(format!("{n} grid points exceed the exhaustive cap {exhaustive_cap}")));
    }
    let cone = problem.follower_cone.canonical();
    if cone.known_min_closed() != Some(true) {
        let witness = graph_witness(problem)?;
        return Ok(TrapezoidReport { graph_vertices: 0, decomposed: 0, failures: Vec::new(), holds: false, non_convex_witness: witness });
    }
    let (m_lp, m_proj) = problem.leader_set.program(grid)?;
    if m_proj.len() != m_lp.num_vars() || !matches!(problem.leader_set, LeaderSet::Simplex | LeaderSet::CustomPolytope { .. }) {
        return Err(Error::Unsupported("exhaustive graph enumeration needs an explicit leader polytope".into()));
    }
    let gens = generators(&cone, grid)
        .ok_or_else(|| Error::Unsupported(format!("the {} order has no finite generator list here", cone.label())))?;
    let fbar = c_envelope(&problem.f, &cone, grid)?.fbar;
    let mut lp = LinearProgram::feasibility(2 * n);
    let widen = |row: &[T], shift: usize| {
        let mut r = vec![T::zero(); 2 * n];
        for (j, a) in row.iter().enumerate() {
            r[shift + j] = a.clone();
        }
        r
    };
    for (row, b) in m_lp.eq_lhs.iter().zip(&m_lp.eq_rhs) {
        lp.add_eq(widen(row, 0), b.clone());
    }
    for (row, b) in m_lp.ineq_lhs.iter().zip(&m_lp.ineq_rhs) {
        lp.add_le(widen(row, 0), b.clone());
    }
    lp.add_eq(widen(&vec![T::one(); n], n), T::one());
    for g in &gens {
        let mut r = widen(g, n);
        for (j, a) in g.iter().enumerate() {
            r[j] = -a.clone();
        }
        lp.add_le(r, T::zero());
    }
    let mut r = widen(&problem.f, n);
    for (j, a) in fbar.iter().enumerate() {
        r[j] = -a.clone();
    }
    lp.add_eq(r, T::zero());
    let verts = enumerate_vertices(&lp, 2_000_000)?;
    let mut decomposed = 0;
    let mut failures = Vec::new();
    for v in &verts {
        let (mu, nu) = (v[..n].to_vec(), v[n..].to_vec());
        let mu_ok = vertex_test(&m_lp, &mu)?.is_vertex;
        let mu_m = Measure::new(grid.clone(), mu.clone())?;
        let (face, _) = optimal_face(&problem.f, &mu_m, &cone)?;
        let nu_ok = projected_vertex_test(&face.lp, &face.proj, &nu)?.0;
        if mu_ok && nu_ok {
            decomposed += 1;
        } else {
            failures.push((mu, nu));
        }
    }
    Ok(TrapezoidReport {
        graph_vertices: verts.len(),
        decomposed,
        holds: failures.is_empty() && !verts.is_empty(),
        failures,
        non_convex_witness: None,
    })
}

/// Pairs of Diracs whose midpoint value exceeds the midpoint of values; the midpoint of
/// their optimizers is then feasible but not optimal.
fn graph_witness<T: Scalar>(problem: &StackelbergProblem<T>) -> Result<Option<GraphWitness<T>>> {
    let grid = &problem.grid;
    let n = grid.len();
    let half = T::from_ratio(1, 2);
    for a in 0..n {
        for b in a + 1..n {
            let (m1, m2) = (Measure::dirac(grid.clone(), a), Measure::dirac(grid.clone(), b));
            let rep = value_affinity_check(&problem.f, &problem.follower_cone, &m1, &m2, std::slice::from_ref(&half))?;
            if !rep.max_deviation.is_pos(1e-9) {
                continue;
            }
            let r1 = crate::optimize::solve_primal(&problem.f, &m1, &problem.follower_cone)?;
            let r2 = crate::optimize::solve_primal(&problem.f, &m2, &problem.follower_cone)?;
            let mid_nu = r1.optimizer.mix(&r2.optimizer, &half)?;
            let mid_mu = m1.mix(&m2, &half)?;
            let mid_value = value(&problem.f, &mid_mu, &problem.follower_cone)?;
            let mid_attained = mid_nu.integrate(&problem.f)?;
            return Ok(Some(GraphWitness { mu: (m1, m2), nu: (r1.optimizer, r2.optimizer), mid_value, mid_attained }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityReport<T: Scalar = f64> {
    pub eu_representable: bool,
    /// Expected-utility index `û`, when the evaluation is affine.
    pub u_hat: Option<Vec<T>>,
    /// `û` from envelopes, `α ū - (1-α) \overline{(-u)}`, for min-closed cones.
    pub u_hat_envelope: Option<Vec<T>>,
    pub max_deviation: T,
    /// Measure with `Ṽ(μ) != Σ μ(x) Ṽ(δ_x)`.
    pub witness: Option<Measure<T>>,
}

/// `Ṽ(μ) = α max_{ν⪯μ} ∫u dν + (1-α) min_{ν⪯μ} ∫u dν`.
pub fn hurwicz_value<T: Scalar>(u: &[T], mu: &Measure<T>, cone: &ConeSpec<T>, alpha: &T) -> Result<T> {
    let neg: Vec<T> = u.iter().map(|v| -v.clone()).collect();
    let hi = value(u, mu, cone)?;
    let lo = -value(&neg, mu, cone)?;
    Ok(alpha.clone() * hi + (T::one() - alpha.clone()) * lo)
}

/// Tests whether the Hurwicz evaluation of orbit menus is an expected utility, on Diracs,
/// midpoints of Dirac pairs and seeded random measures.
pub fn ambiguity_representation_check<T: Scalar>(
    cone: &ConeSpec<T>,
    grid: &Arc<Grid<T>>,
    u: &[T],
    alpha: &T,
    samples: usize,
    seed: u64,
) -> Result<AmbiguityReport<T>> {
    let n = grid.len();
    dim_check("utility", u.len(), n)?;
    let diracs: Vec<T> = (0..n).map(|x| hurwicz_value(u, &Measure::dirac(grid.clone(), x), cone, alpha)).collect::<Result<_>>()?;
    let mut tests: Vec<Measure<T>> = Vec::new();
    let half = T::from_ratio(1, 2);
    for a in 0..n {
        for b in a + 1..n {
            tests.push(Measure::dirac(grid.clone(), a).mix(&Measure::dirac(grid.clone(), b), &half)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        tests.push(Measure::random(grid.clone(), &mut rng, 0.3));
    }
    let mut max_deviation = T::zero();
    let mut witness = None;
    for mu in tests {
        let v = hurwicz_value(u, &mu, cone, alpha)?;
        let dev = (v - dot(mu.weights(), &diracs)).abs();
        if dev > max_deviation {
            if dev.is_pos(1e-8) {
                witness = Some(mu.clone());
            }
            max_deviation = dev;
        }
    }
    let eu_representable = witness.is_none();
    let u_hat_envelope = if cone.canonical().known_min_closed() == Some(true) {
        let neg: Vec<T> = u.iter().map(|v| -v.clone()).collect();
        let ubar = c_envelope(u, cone, grid)?.fbar;
        let nbar = c_envelope(&neg, cone, grid)?.fbar;
        Some(ubar.iter().zip(&nbar).map(|(p, q)| alpha.clone() * p.clone() - (T::one() - alpha.clone()) * q.clone()).collect())
    } else {
        None
    };
    Ok(AmbiguityReport {
        eu_representable,
        u_hat: if eu_representable { Some(diracs) } else { None },
        u_hat_envelope,
        max_deviation,
        witness,
    })
}

/// Price-lottery instance for property-right design: buyer types with probabilities, a
/// seller choosing the final price lottery and a designer choosing the outside option.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptionToOwn {
    pub theta_bar: f64,
    /// Number of price steps; prices are `θ̄ k / steps`.
    pub price_steps: usize,
    pub types: Vec<f64>,
    pub probs: Vec<f64>,
    pub seller: LinearValue,
    pub designer: LinearValue,
}

/// Per-sale value `a θ + b + λ p` of a type-`θ` buyer purchasing at price `p`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinearValue {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl OptionToOwn {
    pub fn validate(&self) -> Result<()> {
        if self.price_steps == 0 || !(self.theta_bar > 0.0) {
            return Err(Error::Invalid("price grid needs θ̄ > 0 and at least one step".into()));
        }
        if self.types.len() != self.probs.len() || self.types.is_empty() {
            return Err(Error::Dimension("types and probabilities must match".into()));
        }
        if self.probs.iter().any(|p| *p < 0.0) || (self.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("type probabilities must form a distribution".into()));
        }
        Ok(())
    }

    pub fn prices(&self) -> Vec<f64> {
        (0..=self.price_steps).map(|k| self.theta_bar * k as f64 / self.price_steps as f64).collect()
    }

    /// Expected value of posting price `p` (buyers with `θ >= p` purchase).
    pub fn expected(&self, v: &LinearValue, p: f64) -> f64 {
        self.types
            .iter()
            .zip(&self.probs)
            .filter(|(t, _)| **t >= p - 1e-12)
            .map(|(t, q)| q * (v.a * t + v.b + v.lambda * p))
            .sum()
    }

    /// Leader = designer over all price lotteries, follower = seller under the increasing
    /// concave order.
    pub fn problem(&self) -> Result<StackelbergProblem> {
        self.validate()?;
        let ps = self.prices();
        let grid = Arc::new(Grid::from_values(&ps)?);
        Ok(StackelbergProblem {
            grid,
            leader_set: LeaderSet::Simplex,
            follower_cone: ConeSpec::increasing_concave(),
            f: ps.iter().map(|&p| self.expected(&self.seller, p)).collect(),
            w_a: vec![0.0; ps.len()],
            w_b: ps.iter().map(|&p| self.expected(&self.designer, p)).collect(),
        })
    }
}

/// Robust persuasion on a belief grid: nature (follower) adds information to minimize the
/// sender's `V`; the sender (leader) chooses a Bayes-plausible split of the prior.
pub fn robust_persuasion<T: Scalar>(grid: Arc<Grid<T>>, v: Vec<T>, prior: usize) -> StackelbergProblem<T> {
    let n = grid.len();
    StackelbergProblem {
        leader_set: LeaderSet::OrbitOf { gamma: Measure::dirac(grid.clone(), prior), cone: ConeSpec::concave() },
        follower_cone: ConeSpec::concave(),
        f: v.iter().map(|a| -a.clone()).collect(),
        w_a: vec![T::zero(); n],
        w_b: v,
        grid,
    }
}

/// Two senders in sequence: the second sender (follower) refines the first sender's split.
pub fn sequential_persuasion<T: Scalar>(grid: Arc<Grid<T>>, prior: usize, first: Vec<T>, second: Vec<T>) -> StackelbergProblem<T> {
    let n = grid.len();
    StackelbergProblem {
        leader_set: LeaderSet::OrbitOf { gamma: Measure::dirac(grid.clone(), prior), cone: ConeSpec::concave() },
        follower_cone: ConeSpec::concave(),
        f: second,
        w_a: vec![T::zero(); n],
        w_b: first,
        grid,
    }
}
