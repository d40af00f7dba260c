//! Property suites behind `stochorder verify`, read from a fixture directory.
//!
//! Every check carries the measured quantity, the bound it is held to and the verdict.
//! Seeds are fixed and offset by `--seed`.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use stochorder::blackwell::{consistency_check, constrained_design, constrained_vs_kg, KernelFamily};
use stochorder::cone::{dirac_orbit, generators, slices_by_coordinate, ConeSpec};
use stochorder::coupling::{lsd_exposed_construct, mps_exposed_construct, orbit_extreme_test, strassen_coupling, CouplingStatus};
use stochorder::envelope::{c_envelope, concavification, dual_envelope_check};
use stochorder::lp::{enumerate_vertices, finish_duality_audit, solve_lp, start_duality_audit, vertex_test, LinearProgram};
use stochorder::measure::{Grid, Kernel, Measure};
use stochorder::optimize::{orbit_vertex, solve_primal, value, value_affinity_check};
use stochorder::scalar::{cast_vec, dot};
use stochorder::stackelberg::{robust_persuasion, sequential_persuasion, solve_stackelberg, trapezoid_verify, LeaderSet, StackelbergProblem};
use stochorder::updating::{binary_grid, divisibility_check, gap_search, interior_binary_beliefs, payoff_dictionary, UpdateRule};
use stochorder::{Error, Rational, Result, Scalar};

use crate::commands::{Artifacts, Context};
use crate::problem::*;

pub const SUITES: [&str; 7] = ["theorem1", "blackwell", "exposed", "updating", "stackelberg", "lp", "all"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: Relation::AtMost, pass: value <= bound, detail: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: Relation::AtLeast, pass: value >= bound, detail: None }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check { name: name.into(), value: v, bound: 1.0, relation: Relation::Holds, pass: ok, detail: None }
    }

    pub fn with(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "pass" } else { "FAIL" };
        let rel = match self.relation {
            Relation::AtMost => format!("{:.3e} <= {:.1e}", self.value, self.bound),
            Relation::AtLeast => format!("{:.3e} >= {:.1e}", self.value, self.bound),
            Relation::Holds => String::new(),
        };
        match &self.detail {
            Some(d) => format!("{verdict}  {}  {rel}  ({d})", self.name),
            None => format!("{verdict}  {}  {rel}", self.name),
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn load(dir: &Path, name: &str) -> Result<ProblemFile> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Invalid(format!("missing fixture {}: {e}", path.display())))?;
    ProblemFile::parse(&text)
}

fn require_dir(dir: &Path) -> Result<()> {
    let has_json = std::fs::read_dir(dir)
        .map_err(|e| Error::Invalid(format!("fixture directory {}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().is_some_and(|x| x == "json"));
    if !has_json {
        return Err(Error::Invalid(format!("fixture directory {} holds no fixtures", dir.display())));
    }
    Ok(())
}

/// Runs a named suite and packs the checks into a report.
pub fn run_suite(name: &str, dir: &Path, ctx: &Context) -> Result<Artifacts> {
    require_dir(dir)?;
    let seed = ctx.seed;
    let start = Instant::now();
    let mut groups: Vec<(&str, Vec<Check>)> = Vec::new();
    let want = |s: &str| name == s || name == "all";
    if !SUITES.contains(&name) {
        return Err(Error::Invalid(format!("unknown suite `{name}`; expected one of {}", SUITES.join(", "))));
    }
    if name == "all" {
        start_duality_audit();
    }
    if want("theorem1") {
        groups.push(("privacy_envelope", privacy_golden(dir)?));
        groups.push(("four_way", four_way(dir, seed)?));
        groups.push(("envelope_identity", envelope_identity(seed)?));
    }
    if want("blackwell") {
        groups.push(("consistency", blackwell_consistency(seed)?));
        groups.push(("dichotomy", dichotomy(dir)?));
    }
    if want("exposed") {
        groups.push(("exposed", exposed_constructions(dir, seed)?));
    }
    if want("updating") {
        groups.push(("updating", updating_suite(dir, seed)?));
    }
    if want("stackelberg") {
        groups.push(("stackelberg", stackelberg_suite(dir, seed)?));
    }
    if want("lp") {
        groups.push(("lp", lp_self_checks(seed)?));
    }
    if let Some(a) = finish_duality_audit() {
        groups.push((
            "duality_audit",
            vec![Check::at_most("strong duality gap over every optimal solve", a.max_gap, 1e-8).with(format!("{} solves, max residual {:.1e}", a.solves, a.max_residual))],
        ));
    }
    let passed = groups.iter().all(|(_, c)| all_pass(c));
    let report = json!({
        "kind": "verify",
        "suite": name,
        "passed": passed,
        "seconds": start.elapsed().as_secs_f64(),
        "groups": groups.iter().map(|(g, c)| json!({ "group": g, "passed": all_pass(c), "checks": c })).collect::<Vec<_>>(),
    });
    Ok(Artifacts { report, csv: None, passed })
}

fn qabs(r: Rational) -> Rational {
    if r < rat(0, 1) {
        -r
    } else {
        r
    }
}

fn rat(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

fn rational_measure(g: &Arc<Grid<Rational>>, rng: &mut ChaCha8Rng) -> Measure<Rational> {
    let raw: Vec<i64> = (0..g.len()).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = raw.iter().sum();
    Measure::new(g.clone(), raw.iter().map(|&r| rat(r, total)).collect()).expect("weights sum to one")
}

/// Pushes `mu` through a kernel whose rows are vertices of the Dirac orbits of `cone`.
fn orbit_push<T: Scalar>(mu: &Measure<T>, cone: &ConeSpec<T>, rng: &mut ChaCha8Rng) -> Result<Measure<T>> {
    let g = mu.grid();
    let rows = (0..g.len())
        .map(|x| {
            let dir: Vec<T> = (0..g.len()).map(|_| T::from_ratio(rng.gen_range(-4..=4), 4)).collect();
            Ok(dirac_orbit(cone, g, x)?.maximize(&dir)?.1)
        })
        .collect::<Result<Vec<_>>>()?;
    Kernel::new(g.clone(), rows)?.push(mu)
}

fn max_abs(a: f64, b: f64) -> f64 {
    a.max(b.abs())
}

/// The `[-C]`-envelope and concavification of `1{x3 >= x1}` on the ternary simplex grid
/// against their closed forms.
pub fn privacy_golden(dir: &Path) -> Result<Vec<Check>> {
    let p = load(dir, "privacy_doctor.json")?;
    let pl: EnvelopePayload = p.payload()?;
    let grid = pl.grid.build::<f64>(None)?;
    let cone = pl.cone.spec(&grid)?;
    let f = pl.f.eval(&grid)?;
    let t = Instant::now();
    let env = c_envelope(&f, &cone, &grid)?;
    let cav = concavification(&f, &grid)?;
    let secs = t.elapsed().as_secs_f64();
    let (mut env_err, mut cav_err) = (0.0f64, 0.0f64);
    for (i, p) in grid.points().iter().enumerate() {
        if p.iter().all(|&v| v > 1e-12) {
            let want = if p[0] <= 0.5 + 1e-12 { (p[2] / p[0]).min(1.0) } else { 0.0 };
            env_err = max_abs(env_err, env.fbar[i] - want);
        }
        cav_err = max_abs(cav_err, cav[i] - (1.0 - p[0] + p[2]).min(1.0));
    }
    let prior = pl.prior.as_ref().ok_or_else(|| Error::Invalid("privacy fixture needs a prior".into()))?;
    let value = prior.build(&grid)?.integrate(&env.fbar)?;
    Ok(vec![
        Check::holds("simplex grid has 66 points", grid.len() == 66),
        Check::at_most("privacy envelope vs closed form (interior points)", env_err, 1e-6),
        Check::at_most("concavification vs closed form", cav_err, 1e-6),
        Check::at_most("privacy value at the prior vs 3/4", (value - 0.75).abs(), 1e-9),
        Check::at_most("envelope runtime in seconds", secs, 10.0),
    ])
}

/// Duality, affine value, couplings and trapezoid decomposition on small exact grids, plus
/// the convex-order counterexamples.
pub fn four_way(dir: &Path, seed: u64) -> Result<Vec<Check>> {
    let p = load(dir, "line_grids.json")?;
    let v: VerifyPayload = p.payload()?;
    if v.grids.is_empty() || v.grids.iter().any(|g| g.len() > 5 || g.len() < 2) {
        return Err(Error::Invalid("line grid fixture needs grids of two to five points".into()));
    }
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e01 + seed);
    let cones: Vec<ConeSpec<Rational>> = vec![
        ConeSpec::concave(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
    ];
    let thirds = [rat(1, 4), rat(1, 2), rat(3, 4)];
    let mut gap = Rational::from_ratio(0, 1);
    let mut envelope_mismatch = Rational::from_ratio(0, 1);
    let mut affine_dev = Rational::from_ratio(0, 1);
    let (mut pairs, mut missing) = (0usize, 0usize);
    let (mut random_pairs, mut route_mismatch) = (0usize, 0usize);
    let (mut graphs, mut undecomposed) = (0usize, 0usize);
    let (mut convex_grids, mut nonaffine_found) = (0usize, 0usize);
    let (mut convex_pairs, mut convex_coupled, mut convex_unordered) = (0usize, 0usize, 0usize);
    for xs in &v.grids {
        let g = Arc::new(Grid::<Rational>::from_values(&cast_vec::<f64, Rational>(xs))?);
        let n = g.len();
        for cone in &cones {
            let gens = generators(cone, &g).ok_or_else(|| Error::Unsupported(format!("no generators for {}", cone.label())))?;
            for _ in 0..3 {
                let f: Vec<Rational> = (0..n).map(|_| rat(rng.gen_range(-8..=8), 4)).collect();
                let mu = rational_measure(&g, &mut rng);
                let mu2 = rational_measure(&g, &mut rng);

                let d = dual_envelope_check(&f, cone, &mu)?;
                gap = gap.max(qabs(d.gap));
                let fbar = c_envelope(&f, cone, &g)?.fbar;
                envelope_mismatch = envelope_mismatch.max(qabs(value(&f, &mu, cone)? - mu.integrate(&fbar)?));
                match value_affinity_check(&f, cone, &mu, &mu2, &thirds) {
                    Ok(a) => affine_dev = affine_dev.max(a.max_deviation),
                    Err(Error::InvariantViolation(_)) => affine_dev = affine_dev.max(rat(1, 1)),
                    Err(e) => return Err(e),
                }

                let nu = orbit_push(&mu, cone, &mut rng)?;
                pairs += 1;
                if strassen_coupling(&mu, &nu, cone)?.status != CouplingStatus::Found {
                    missing += 1;
                }
                // second route: the generator inequalities
                let below = |a: &Measure<Rational>, b: &Measure<Rational>| {
                    gens.iter().all(|h| a.integrate(h).unwrap() <= b.integrate(h).unwrap())
                };
                random_pairs += 1;
                let found = strassen_coupling(&mu, &mu2, cone)?.status == CouplingStatus::Found;
                if found != below(&mu2, &mu) {
                    route_mismatch += 1;
                }

                let prob = StackelbergProblem {
                    grid: g.clone(),
                    leader_set: LeaderSet::Simplex,
                    follower_cone: cone.clone(),
                    f: f.clone(),
                    w_a: vec![rat(0, 1); n],
                    w_b: vec![rat(0, 1); n],
                };
                let tr = trapezoid_verify(&prob, 5)?;
                graphs += 1;
                if !tr.holds || tr.decomposed != tr.graph_vertices || tr.graph_vertices == 0 {
                    undecomposed += 1;
                }
            }
        }
        // the convex order: interior tent breaks affinity, spreads admit no coupling
        if n < 3 {
            continue;
        }
        convex_grids += 1;
        let convex = ConeSpec::<Rational>::convex();
        let tent: Vec<Rational> = g.points().iter().map(|p| -qabs(p[0].clone() - g.point(1)[0].clone())).collect();
        let ends = value_affinity_check(&tent, &convex, &Measure::dirac(g.clone(), 0), &Measure::dirac(g.clone(), n - 1), &[rat(1, 2)])?;
        if ends.max_deviation > rat(0, 1) {
            nonaffine_found += 1;
        }
        for _ in 0..4 {
            let nu = rational_measure(&g, &mut rng);
            let mu = orbit_push(&nu, &ConeSpec::concave(), &mut rng)?;
            if mu.weights() == nu.weights() {
                continue;
            }
            convex_pairs += 1;
            if !stochorder::cone::order_leq(&nu, &mu, &convex)?.holds {
                convex_unordered += 1;
            }
            if strassen_coupling(&mu, &nu, &convex)?.status != CouplingStatus::NoCoupling {
                convex_coupled += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let f = |r: &Rational| r.to_f64_lossy();
    Ok(vec![
        Check::at_most("duality gap, min-closed cones (exact)", f(&gap), 0.0),
        Check::at_most("value minus integral of envelope (exact)", f(&envelope_mismatch), 0.0),
        Check::at_most("value deviation from affinity (exact)", f(&affine_dev), 0.0),
        Check::at_most("ordered pairs without a coupling", missing as f64, 0.0).with(format!("{pairs} pairs")),
        Check::at_most("coupling vs generator inequalities disagreements", route_mismatch as f64, 0.0)
            .with(format!("{random_pairs} pairs")),
        Check::at_most("graph vertices that fail to decompose", undecomposed as f64, 0.0).with(format!("{graphs} graphs")),
        Check::at_least("convex cone: grids with a non-affine value", nonaffine_found as f64, convex_grids as f64)
            .with("grids of at least three points"),
        Check::at_least("convex cone: ordered pairs checked", convex_pairs as f64, 1.0),
        Check::at_most("convex cone: spreads not in convex order", convex_unordered as f64, 0.0),
        Check::at_most("convex cone: ordered pairs with a coupling", convex_coupled as f64, 0.0),
        Check::at_most("four-way suite runtime in seconds", secs, 60.0),
    ])
}

/// Optimal value equals the integral of the envelope on random instances over 8 points.
pub fn envelope_identity(seed: u64) -> Result<Vec<Check>> {
    let g = Arc::new(Grid::from_values(&[0.0, 0.1, 0.25, 0.3, 0.5, 0.65, 0.8, 1.0])?);
    let cones = vec![
        ConeSpec::concave(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
        ConeSpec::partition_concave(vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0xc01 + seed);
    let mut out = Vec::new();
    for cone in &cones {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let f: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mu = Measure::random(g.clone(), &mut rng, 0.3);
            let fbar = c_envelope(&f, cone, &g)?.fbar;
            worst = max_abs(worst, value(&f, &mu, cone)? - mu.integrate(&fbar)?);
        }
        out.push(Check::at_most(format!("value vs envelope integral, {} (200 instances)", cone.label()), worst, 1e-8));
    }
    Ok(out)
}

fn perturbation_unique<T: Scalar>(f: &[T], mu: &Measure<T>, cone: &ConeSpec<T>, nu: &Measure<T>, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<T> = f
        .iter()
        .map(|v| v.clone() + T::from_decimal(1e-6) * T::from_decimal(rng.gen_range(-1.0..1.0)))
        .collect();
    let r = solve_primal(&g, mu, cone)?;
    Ok(r.optimizer.approx_eq(nu, 1e-7))
}

/// Exposed points of MPS and LSD orbits from the fixtures: extremality, uniqueness under
/// small perturbations of the exposing payoff, and the non-simplicial guard.
pub fn exposed_constructions(dir: &Path, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for name in ["mps_spread.json", "lsd_staircase.json", "lsd_staircase_2d.json", "mps_simplex_2d.json"] {
        let pl: ExposePayload = load(dir, name)?.payload()?;
        let grid = pl.grid.build::<f64>(None)?;
        let f = pl.f.eval(&grid)?;
        let mu = pl.mu.build(&grid)?;
        let (cone, built) = match pl.construction {
            Construction::Mps => (ConeSpec::concave(), mps_exposed_construct(&f, &mu)),
            Construction::Lsd => (ConeSpec::nondecreasing(), lsd_exposed_construct(&f, &mu)),
        };
        let c = match built {
            Ok(c) => c,
            Err(e) => {
                out.push(Check::holds(format!("{name}: construction succeeds"), false).with(e.to_string()));
                continue;
            }
        };
        out.push(Check::holds(format!("{name}: orbit_extreme_test"), orbit_extreme_test(&c.nu, &mu, &cone)?));
        let mut unique = 0;
        for s in 0..8 {
            if perturbation_unique(&f, &mu, &cone, &c.nu, 0xe0 + seed + s)? {
                unique += 1;
            }
        }
        out.push(Check::at_least(format!("{name}: perturbed payoffs keep the maximizer (of 8 seeds)"), unique as f64, 8.0));
    }
    let pl: ExposePayload = load(dir, "not_exposable.json")?.payload()?;
    let grid = pl.grid.build::<f64>(None)?;
    let f = pl.f.eval(&grid)?;
    let mu = pl.mu.build(&grid)?;
    let refused = matches!(mps_exposed_construct(&f, &mu), Err(Error::NotExposable { .. }));
    out.push(Check::holds("not_exposable.json: non-simplicial face is refused", refused));
    Ok(out)
}

fn pair_checks<T: Scalar>(label: &str, cone: &ConeSpec<T>, fam: &KernelFamily<T>, tol: f64, seed: u64) -> Result<Vec<Check>> {
    let r = consistency_check(cone, fam, 12, seed)?;
    Ok(vec![
        Check::at_most(format!("{label}: psi residual"), r.psi_residual.to_f64_lossy().abs(), tol),
        Check::at_most(format!("{label}: phi disagreements"), r.phi_disagreements as f64, 0.0).with(format!("{} samples", r.phi_samples)),
        Check::at_most(format!("{label}: order disagreements"), r.order_disagreements as f64, 0.0)
            .with(format!("{} samples", r.order_samples)),
        Check::holds(format!("{label}: consistent"), r.consistent),
    ])
}

/// Cone and kernel-family pairs: exact on small belief grids, in floating point at
/// resolution six, and the concave cone as a failing candidate.
pub fn blackwell_consistency(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let line4 = Arc::new(Grid::<Rational>::from_values(&[rat(0, 1), rat(1, 4), rat(1, 2), rat(1, 1)])?);
    out.extend(pair_checks("exact convex/martingale, 4 points", &ConeSpec::convex(), &KernelFamily::martingale(line4.clone()), 0.0, seed)?);
    let cells = vec![vec![0, 1], vec![2, 3]];
    out.extend(pair_checks(
        "exact privacy pair, 4 points",
        &ConeSpec::partition_concave(cells.clone()).negate(),
        &KernelFamily::privacy(line4, cells)?,
        0.0,
        seed,
    )?);
    let tri = Arc::new(Grid::<Rational>::simplex(3, 1)?);
    let cells = slices_by_coordinate(&tri, 0);
    out.extend(pair_checks(
        "exact privacy pair, ternary simplex corners",
        &ConeSpec::partition_concave(cells.clone()).negate(),
        &KernelFamily::privacy(tri, cells)?,
        0.0,
        seed,
    )?);

    let grid = Arc::new(Grid::<f64>::simplex(3, 6)?);
    out.extend(pair_checks("convex/martingale, resolution 6", &ConeSpec::convex(), &KernelFamily::martingale(grid.clone()), 1e-8, seed)?);
    let cells = slices_by_coordinate(&grid, 0);
    out.extend(pair_checks(
        "privacy pair, resolution 6",
        &ConeSpec::partition_concave(cells.clone()).negate(),
        &KernelFamily::privacy(grid, cells)?,
        1e-8,
        seed,
    )?);

    let g = Arc::new(Grid::interval(0.0, 1.0, 5)?);
    let r = consistency_check(&ConeSpec::concave(), &KernelFamily::martingale(g), 16, seed)?;
    out.push(Check::holds("concave candidate fails max-closure", !r.max_closed && !r.consistent));
    out.push(Check::holds("concave candidate stores a max-closure witness", r.max_witness.is_some()));
    Ok(out)
}

/// Constrained versus unconstrained persuasion on the binary fixtures.
pub fn dichotomy(dir: &Path) -> Result<Vec<Check>> {
    let pl: DesignPayload = load(dir, "prop4_privacy.json")?.payload()?;
    let grid = pl.grid.build::<f64>(None)?;
    let f = pl.f.eval(&grid)?;
    let prior = pl.prior.point_index(&grid)?;
    let fam = pl.family.build(&grid)?;
    let v = constrained_vs_kg(&f, prior, &fam, pl.depth)?;
    let mut out = vec![
        Check::holds("privacy family is composition-closed", v.composition_closed),
        Check::holds("constrained optimum is not strictly dominated", !v.strictly_dominated),
        Check::holds("constrained optimum weakly dominates the unconstrained one", v.constrained_dominates),
        Check::holds("dichotomy holds", v.holds),
    ];
    let kg: DesignPayload = load(dir, "kg_binary.json")?.payload()?;
    let grid = kg.grid.build::<f64>(None)?;
    let f = kg.f.eval(&grid)?;
    let prior = kg.prior.point_index(&grid)?;
    let r = constrained_design(&f, prior, &kg.family.build(&grid)?, kg.depth)?;
    let cav = concavification(&f, &grid)?[prior];
    out.push(Check::at_most("binary persuasion value vs concavification", (r.value - cav).abs(), 1e-9));
    out.push(Check::at_most("binary persuasion value vs 0.6", (r.value - 0.6).abs(), 1e-9));
    Ok(out)
}

/// Divisibility residuals and dynamic-value gaps for Bayes, power-weighted and Grether rules.
pub fn updating_suite(dir: &Path, seed: u64) -> Result<Vec<Check>> {
    let pl: UpdatingPayload = load(dir, "grether_gap.json")?.payload()?;
    let t = Instant::now();
    let beliefs = interior_binary_beliefs(pl.resolution, pl.eps);
    let grid = binary_grid(pl.resolution, pl.eps)?;
    let dict = payoff_dictionary(seed);
    let mut out = Vec::new();
    for rule in [UpdateRule::Bayes, UpdateRule::PowerWeighted { beta: 0.5 }, UpdateRule::PowerWeighted { beta: 2.0 }] {
        let d = divisibility_check(&rule, &beliefs, 1e-10)?;
        out.push(Check::at_most(format!("{}: divisibility residual", rule.label()), d.max_residual, 1e-10));
        let gaps = gap_search(&rule, &dict, &grid)?;
        out.push(Check::at_most(format!("{}: largest dynamic-value gap", rule.label()), gaps.max_gap, 1e-8));
    }
    let d = divisibility_check(&pl.rule, &beliefs, 1e-10)?;
    out.push(Check::at_least(format!("{}: divisibility residual", pl.rule.label()), d.max_residual, 1e-3));
    out.push(Check::holds(format!("{}: witness triple stored", pl.rule.label()), d.witness.is_some()));
    let gaps = gap_search(&pl.rule, &dict, &grid)?;
    out.push(
        Check::at_least(format!("{}: largest dynamic-value gap", pl.rule.label()), gaps.max_gap, 1e-4)
            .with(format!("{} (payoff, prior) pairs", gaps.evaluated)),
    );
    out.push(Check::at_most("updating suite runtime in seconds", t.elapsed().as_secs_f64(), 120.0));
    Ok(out)
}

fn split_vertices(xs: &[f64], x: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut out = vec![(0..n).map(|j| if j == x { 1.0 } else { 0.0 }).collect::<Vec<_>>()];
    for a in 0..x {
        for b in x + 1..n {
            let w = (xs[x] - xs[a]) / (xs[b] - xs[a]);
            let mut e = vec![0.0; n];
            e[a] = 1.0 - w;
            e[b] = w;
            out.push(e);
        }
    }
    out
}

/// Leader-preferred follower choice among `cands`: `(follower value, leader value)`.
fn follower_pick(cands: &[Vec<f64>], f: &[f64], w: &[f64]) -> (f64, f64) {
    let best = cands.iter().map(|e| dot(e, f)).fold(f64::NEG_INFINITY, f64::max);
    let lead = cands.iter().filter(|e| dot(e, f) >= best - 1e-9).map(|e| dot(e, w)).fold(f64::NEG_INFINITY, f64::max);
    (best, lead)
}

/// Best leader value over two-step chains of split vertices on a line.
fn two_chain_oracle(xs: &[f64], prior: usize, leader: &[f64], follower: &[f64]) -> f64 {
    let n = xs.len();
    let mut oracle = f64::NEG_INFINITY;
    for mu in split_vertices(xs, prior) {
        let sup: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
        let rows: Vec<Vec<Vec<f64>>> = sup.iter().map(|&x| split_vertices(xs, x)).collect();
        let mut combos: Vec<Vec<f64>> = vec![vec![0.0; n]];
        for (k, &x) in sup.iter().enumerate() {
            let m = mu[x];
            combos = combos
                .iter()
                .flat_map(|acc| rows[k].iter().map(move |r| acc.iter().zip(r).map(|(a, b)| a + m * b).collect::<Vec<_>>()))
                .collect();
        }
        oracle = oracle.max(follower_pick(&combos, follower, leader).1);
    }
    oracle
}

/// Option-to-own structure, the robust persuasion identity and sequential persuasion
/// against exhaustive enumeration.
pub fn stackelberg_suite(dir: &Path, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let StackelbergPayload::OptionToOwn(inst) = load(dir, "option_to_own.json")?.payload()? else {
        return Err(Error::Invalid("option_to_own.json must hold an option_to_own instance".into()));
    };
    let p = inst.problem()?;
    let r = solve_stackelberg(&p)?;
    let ps = inst.prices();
    let mut oracle = f64::NEG_INFINITY;
    for k in 0..ps.len() {
        let mut cands: Vec<Vec<f64>> = (0..=k).map(|j| (0..ps.len()).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        cands.extend(split_vertices(&ps, k).into_iter().skip(1));
        oracle = oracle.max(follower_pick(&cands, &p.f, &p.w_b).1);
    }
    out.push(Check::holds("option-to-own: leader optimum is a Dirac", r.mu_star.is_dirac(1e-9).is_some()));
    out.push(Check::holds("option-to-own: extremality flags", r.mu_extreme && r.nu_extreme));
    out.push(Check::at_most("option-to-own: follower support size", r.nu_star.support().len() as f64, 2.0));
    out.push(Check::at_most("option-to-own: value vs Dirac/two-point enumeration", (r.leader_value - oracle).abs(), 1e-9));

    let StackelbergPayload::RobustPersuasion(rp) = load(dir, "robust_persuasion.json")?.payload()? else {
        return Err(Error::Invalid("robust_persuasion.json must hold a robust_persuasion instance".into()));
    };
    let grid = rp.grid.build::<f64>(None)?;
    if grid.dim() != 1 {
        return Err(Error::Invalid("robust persuasion fixture needs a binary-state (line) grid".into()));
    }
    let prior = rp.prior.point_index(&grid)?;
    let order = grid.sorted_1d();
    let (lo, hi) = (order[0], order[order.len() - 1]);
    let (a, b, x0) = (grid.point(lo)[0], grid.point(hi)[0], grid.point(prior)[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e + seed);
    let mut worst = 0.0f64;
    let mut vs = vec![rp.v.eval(&grid)?];
    while vs.len() < 50 {
        vs.push((0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    for v in vs {
        let full = v[lo] + (x0 - a) / (b - a) * (v[hi] - v[lo]);
        let r = solve_stackelberg(&robust_persuasion(grid.clone(), v, prior))?;
        worst = max_abs(worst, r.leader_value - full);
    }
    out.push(Check::at_most("robust persuasion: leader value vs full-information payoff (50 V)", worst, 1e-8));

    let StackelbergPayload::SequentialPersuasion(sp) = load(dir, "sequential_persuasion.json")?.payload()? else {
        return Err(Error::Invalid("sequential_persuasion.json must hold a sequential_persuasion instance".into()));
    };
    let grid = sp.grid.build::<f64>(None)?;
    let prior = sp.prior.point_index(&grid)?;
    let first = sp.first.eval(&grid)?;
    let second = sp.second.eval(&grid)?;
    let xs: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("sequential persuasion fixture needs increasing line points".into()));
    }
    let problem = sequential_persuasion(grid.clone(), prior, first.clone(), second.clone());
    let r = solve_stackelberg(&problem)?;
    let oracle = two_chain_oracle(&xs, prior, &first, &second);
    let concave = ConeSpec::concave();
    let mut rows_extreme = true;
    for x in r.mu_star.support() {
        let row = Measure::new(grid.clone(), r.kernel.row(x).to_vec())?;
        rows_extreme &= orbit_vertex(&row, &Measure::dirac(grid.clone(), x), &concave)?;
    }
    out.push(Check::at_most("sequential persuasion: value vs two-chain enumeration", (r.leader_value - oracle).abs(), 1e-9));
    out.push(Check::holds(
        "sequential persuasion: first posterior is an orbit vertex",
        orbit_vertex(&r.mu_star, &Measure::dirac(grid.clone(), prior), &concave)? && r.mu_extreme,
    ));
    out.push(Check::holds("sequential persuasion: second-stage rows are orbit vertices", rows_extreme && r.nu_extreme));
    out.push(Check::at_most("sequential persuasion: first-stage support size", r.mu_star.support().len() as f64, 2.0));
    Ok(out)
}

fn random_polytope(rng: &mut ChaCha8Rng, n: usize) -> LinearProgram<f64> {
    let mut lp = LinearProgram::maximize((0..n).map(|_| rng.gen_range(-4..=4) as f64).collect());
    lp.add_le(vec![1.0; n], 1.0);
    for _ in 0..3 {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64 / 2.0).collect();
        lp.add_le(row, rng.gen_range(1..=4) as f64 / 4.0);
    }
    lp
}

/// Vertex tests against exhaustive enumeration, exact against floating point solves and
/// certified duality on 100 random polytopes.
pub fn lp_self_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1b + seed);
    let (mut tested, mut wrong) = (0usize, 0usize);
    let mut float_exact = 0.0f64;
    let mut worst_gap = 0.0f64;
    for t in 0..100 {
        let n = 2 + t % 9;
        let lp = random_polytope(&mut rng, n);
        let verts = enumerate_vertices(&lp, 1_000_000)?;
        for v in &verts {
            tested += 1;
            if !vertex_test(&lp, v)?.is_vertex {
                wrong += 1;
            }
        }
        for w in verts.windows(2) {
            let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            tested += 1;
            if vertex_test(&lp, &mid)?.is_vertex {
                wrong += 1;
            }
        }
        let sol = solve_lp(&lp)?;
        let exact = solve_lp(&lp.map_scalar::<Rational>())?;
        float_exact = max_abs(float_exact, sol.value_or_err()? - exact.value_or_err()?.to_f64_lossy());
        let best = verts.iter().map(|v| dot(v, &lp.objective)).fold(f64::NEG_INFINITY, f64::max);
        float_exact = max_abs(float_exact, sol.value_or_err()? - best);
        worst_gap = worst_gap.max(stochorder::lp::certify(&lp, &sol)?.duality_gap);
    }
    // shared envelope instances
    let xs = [0.0, 0.2, 0.45, 0.5, 0.9, 1.0];
    let g = Grid::from_values(&xs)?;
    let ge = Grid::<Rational>::from_values(&cast_vec::<f64, Rational>(&xs))?;
    for cone in [ConeSpec::concave(), ConeSpec::nondecreasing(), ConeSpec::increasing_concave()] {
        let f: Vec<f64> = (0..xs.len()).map(|_| rng.gen_range(-8..=8) as f64 / 8.0).collect();
        let a = stochorder::envelope::c_envelope_lp(&f, &cone, &g)?.fbar;
        let b = stochorder::envelope::c_envelope_lp(&cast_vec::<f64, Rational>(&f), &cone.map_scalar(), &ge)?.fbar;
        for (x, y) in a.iter().zip(&b) {
            float_exact = max_abs(float_exact, x - y.to_f64_lossy());
        }
    }
    Ok(vec![
        Check::at_most("vertex_test disagreements with enumeration", wrong as f64, 0.0).with(format!("{tested} points")),
        Check::at_most("exact vs floating point optimal values", float_exact, 1e-9),
        Check::at_most("duality gap on random polytopes", worst_gap, 1e-8),
    ])
}
