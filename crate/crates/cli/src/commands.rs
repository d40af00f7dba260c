//! One function per subcommand: payload in, report JSON (and optional CSV) out.

use std::fmt::Write as _;

use serde_json::{json, Value};
use stochorder::blackwell::{consistency_check, constrained_design, constrained_vs_kg};
use stochorder::coupling::{exposed_csv, lsd_exposed_construct, mps_exposed_construct, strassen_coupling, CouplingStatus, RegionKind};
use stochorder::coupling::{orbit_extreme_test, unique_rationalization_check};
use stochorder::envelope::{c_envelope, concavification, envelope_csv};
use stochorder::measure::{Grid, Kernel, Measure};
use stochorder::optimize::solve_primal;
use stochorder::scalar::to_f64_vec;
use stochorder::stackelberg::{robust_persuasion, sequential_persuasion, solve_stackelberg, EquilibriumReport};
use stochorder::updating::{binary_grid, divisibility_check, fixed_point_residual, gap_search, interior_binary_beliefs, payoff_dictionary};
use stochorder::{Error, Rational, Result, Scalar};

use crate::problem::*;

/// Global flags shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub seed: u64,
    pub exact: bool,
    /// Reporting tolerance for contact sets and pass/fail flags.
    pub tol: f64,
    pub resolution: Option<usize>,
}

impl Default for Context {
    fn default() -> Self {
        Context { seed: 0, exact: false, tol: 1e-8, resolution: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: Value,
    pub csv: Option<String>,
    /// False only for failed verification suites.
    pub passed: bool,
}

impl Artifacts {
    fn ok(report: Value, csv: Option<String>) -> Self {
        Artifacts { report, csv, passed: true }
    }
}

pub(crate) fn num<T: Scalar>(x: &T) -> f64 {
    x.to_f64_lossy()
}

pub(crate) fn rows<T: Scalar>(k: &Kernel<T>) -> Vec<Vec<f64>> {
    k.rows().iter().map(|r| to_f64_vec(r)).collect()
}

fn weights<T: Scalar>(m: &Measure<T>) -> Vec<f64> {
    to_f64_vec(m.weights())
}

fn header(kind: ProblemKind, ctx: &Context, n: usize) -> Value {
    json!({ "kind": kind.name(), "exact": ctx.exact, "grid_points": n })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

/// Runs a problem file; `verify` problems go through the suites.
pub fn run_problem(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    macro_rules! generic {
        ($f:ident) => {
            if ctx.exact {
                $f::<Rational>(p, ctx)
            } else {
                $f::<f64>(p, ctx)
            }
        };
    }
    match p.problem_kind {
        ProblemKind::Envelope => generic!(envelope),
        ProblemKind::Solve => generic!(solve),
        ProblemKind::Couple => generic!(couple),
        ProblemKind::Expose => generic!(expose),
        ProblemKind::Blackwell => generic!(blackwell),
        ProblemKind::Design => generic!(design),
        ProblemKind::Updating => updating(p, ctx),
        ProblemKind::Stackelberg => generic!(stackelberg),
        ProblemKind::Verify => {
            let v: VerifyPayload = p.payload()?;
            let dir = v.fixtures.unwrap_or_else(|| "fixtures".into());
            crate::suites::run_suite(&v.suite, std::path::Path::new(&dir), ctx)
        }
    }
}

fn envelope<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: EnvelopePayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let cone = pl.cone.spec(&grid)?;
    let f = pl.f.eval(&grid)?;
    let r = c_envelope(&f, &cone, &grid)?;
    let mut rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "cone": cone.label(),
            "method": format!("{:?}", r.method),
            "f": to_f64_vec(&f),
            "fbar": to_f64_vec(&r.fbar),
            "contact_set": r.contact_set,
        }),
    );
    if let Some(prior) = &pl.prior {
        let mu = prior.build(&grid)?;
        rep["value"] = json!(num(&mu.integrate(&r.fbar)?));
    }
    if pl.concavification {
        rep["concavification"] = json!(to_f64_vec(&concavification(&f, &grid)?));
    }
    let csv = p.output.csv.then(|| envelope_csv(&grid, &f, &r.fbar));
    Ok(Artifacts::ok(rep, csv))
}

fn solve<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: SolvePayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let cone = pl.cone.spec(&grid)?;
    let f = pl.f.eval(&grid)?;
    let mu = pl.mu.build(&grid)?;
    let r = solve_primal(&f, &mu, &cone)?;
    let rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "cone": cone.label(),
            "value": num(&r.value),
            "optimizer": weights(&r.optimizer),
            "coupling": r.coupling.as_ref().map(rows),
            "duality_gap": r.duality_gap.as_ref().map(num),
            "method": format!("{:?}", r.method),
        }),
    );
    let csv = p.output.csv.then(|| point_csv(&grid, &[("mu", mu.weights()), ("optimizer", r.optimizer.weights())]));
    Ok(Artifacts::ok(rep, csv))
}

fn couple<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: CouplePayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let cone = pl.cone.spec(&grid)?;
    let mu = pl.mu.build(&grid)?;
    let nu = pl.nu.build(&grid)?;
    let r = strassen_coupling(&mu, &nu, &cone)?;
    let mut rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "cone": cone.label(),
            "status": match r.status { CouplingStatus::Found => "found", CouplingStatus::NoCoupling => "no_coupling" },
            "kernel": r.kernel.as_ref().map(rows),
            "farkas": r.farkas.as_ref().map(|h| to_f64_vec(h)),
            "margin": r.margin.as_ref().map(num),
        }),
    );
    if r.status == CouplingStatus::Found {
        rep["unique"] = json!(unique_rationalization_check(&mu, &nu, &cone)?.unique);
        rep["extreme"] = json!(orbit_extreme_test(&nu, &mu, &cone)?);
    }
    Ok(Artifacts::ok(rep, None))
}

fn expose<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: ExposePayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let f = pl.f.eval(&grid)?;
    let mu = pl.mu.build(&grid)?;
    let c = match pl.construction {
        Construction::Mps => mps_exposed_construct(&f, &mu)?,
        Construction::Lsd => lsd_exposed_construct(&f, &mu)?,
    };
    let regions: Vec<Value> = c
        .regions
        .iter()
        .map(|r| {
            json!({
                "points": r.points,
                "touching": r.touching,
                "kind": match r.kind { RegionKind::Simplex => "simplex", RegionKind::Staircase => "staircase" },
            })
        })
        .collect();
    let rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "construction": pl.construction,
            "exposing_f": to_f64_vec(&c.exposing_f),
            "fbar": to_f64_vec(&c.fbar),
            "contact_set": c.contact_set,
            "regions": regions,
            "transport": rows(&c.transport),
            "nu": weights(&c.nu),
        }),
    );
    let csv = p.output.csv.then(|| exposed_csv(&grid, &c));
    Ok(Artifacts::ok(rep, csv))
}

fn blackwell<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: BlackwellPayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let cone = pl.cone.spec(&grid)?;
    let fam = pl.family.build(&grid)?;
    let r = consistency_check(&cone, &fam, pl.samples, ctx.seed)?;
    let comp_witness = r.composition.witness.as_ref().map(|w| {
        json!({ "first": rows(&w.first), "second": rows(&w.second), "x": w.x, "row": to_f64_vec(&w.row), "violation": num(&w.violation) })
    });
    let rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "cone": cone.label(),
            "consistent": r.consistent,
            "max_closed": r.max_closed,
            "max_witness": r.max_witness.as_ref().map(|(a, b)| [to_f64_vec(a), to_f64_vec(b)]),
            "composition_closed": r.composition.closed,
            "composition_trials": r.composition.trials,
            "composition_witness": comp_witness,
            "psi_residual": num(&r.psi_residual),
            "phi_disagreements": r.phi_disagreements,
            "phi_samples": r.phi_samples,
            "order_disagreements": r.order_disagreements,
            "order_samples": r.order_samples,
        }),
    );
    Ok(Artifacts::ok(rep, None))
}

fn design<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: DesignPayload = p.payload()?;
    let grid = pl.grid.build::<T>(ctx.resolution)?;
    let f = pl.f.eval(&grid)?;
    let prior = pl.prior.point_index(&grid)?;
    let fam = pl.family.build(&grid)?;
    let r = constrained_design(&f, prior, &fam, pl.depth)?;
    let mut rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "prior": prior,
            "value": num(&r.value),
            "posterior": weights(&r.posterior),
            "fhat": to_f64_vec(&r.fhat),
            "composition_closed": r.composition_closed,
            "rounds": r.rounds,
            "converged": r.converged,
            "support_in_contact": r.certificate.support_in_contact,
            "value_gap": num(&r.certificate.value_gap),
        }),
    );
    if pl.compare_unconstrained {
        let v = constrained_vs_kg(&f, prior, &fam, pl.depth)?;
        rep["comparison"] = json!({
            "value_eliminating": v.value_eliminating,
            "unconstrained": weights(&v.unconstrained),
            "unconstrained_dominates": v.unconstrained_dominates,
            "constrained_dominates": v.constrained_dominates,
            "strictly_dominated": v.strictly_dominated,
            "holds": v.holds,
        });
    }
    let csv = p.output.csv.then(|| envelope_csv(&grid, &f, &r.fhat));
    Ok(Artifacts::ok(rep, csv))
}

fn updating(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: UpdatingPayload = p.payload()?;
    if ctx.exact {
        return Err(Error::Unsupported("updating rules use real powers and run in floating point only".into()));
    }
    let k = ctx.resolution.unwrap_or(pl.resolution);
    let beliefs = interior_binary_beliefs(k, pl.eps);
    let grid = binary_grid(k, pl.eps)?;
    let div = divisibility_check(&pl.rule, &beliefs, ctx.tol)?;
    let fixed = fixed_point_residual(&pl.rule, &beliefs)?;
    let gaps = gap_search(&pl.rule, &payoff_dictionary(ctx.seed), &grid)?;
    let rep = merge(
        header(p.problem_kind, ctx, grid.len()),
        json!({
            "rule": pl.rule,
            "divisibility": div,
            "fixed_point_residual": fixed,
            "gap_search": gaps,
        }),
    );
    Ok(Artifacts::ok(rep, None))
}

fn equilibrium_json<T: Scalar>(r: &EquilibriumReport<T>) -> Value {
    json!({
        "leader_value": num(&r.leader_value),
        "mu_star": weights(&r.mu_star),
        "nu_star": weights(&r.nu_star),
        "w_b_star": to_f64_vec(&r.w_b_star),
        "kernel": rows(&r.kernel),
        "mu_extreme": r.mu_extreme,
        "nu_extreme": r.nu_extreme,
    })
}

fn stackelberg<T: Scalar>(p: &ProblemFile, ctx: &Context) -> Result<Artifacts> {
    let pl: StackelbergPayload = p.payload()?;
    let (problem, extra) = match &pl {
        StackelbergPayload::OptionToOwn(inst) => {
            if T::EXACT {
                return Err(Error::Unsupported("the option-to-own instance runs in floating point only".into()));
            }
            inst.validate()?;
            (inst.problem()?.map_scalar::<T>(), json!({ "prices": inst.prices() }))
        }
        StackelbergPayload::RobustPersuasion(rp) => {
            let grid = rp.grid.build::<T>(ctx.resolution)?;
            let prior = rp.prior.point_index(&grid)?;
            (robust_persuasion(grid.clone(), rp.v.eval(&grid)?, prior), json!({ "prior": prior }))
        }
        StackelbergPayload::SequentialPersuasion(sp) => {
            let grid = sp.grid.build::<T>(ctx.resolution)?;
            let prior = sp.prior.point_index(&grid)?;
            (sequential_persuasion(grid.clone(), prior, sp.first.eval(&grid)?, sp.second.eval(&grid)?), json!({ "prior": prior }))
        }
        StackelbergPayload::General(g) => (g.build::<T>(ctx.resolution)?, json!({})),
    };
    let r = solve_stackelberg(&problem)?;
    let mut rep = merge(header(p.problem_kind, ctx, problem.grid.len()), equilibrium_json(&r));
    rep = merge(rep, extra);
    if let StackelbergPayload::OptionToOwn(inst) = &pl {
        if let Some(i) = r.mu_star.is_dirac(ctx.tol) {
            rep["posted_price"] = json!(inst.prices()[i]);
        }
    }
    let csv = p.output.csv.then(|| {
        point_csv(&problem.grid, &[("mu_star", r.mu_star.weights()), ("nu_star", r.nu_star.weights()), ("w_b_star", &r.w_b_star)])
    });
    Ok(Artifacts::ok(rep, csv))
}

/// CSV with point coordinates and the named columns.
pub fn point_csv<T: Scalar>(grid: &Grid<T>, cols: &[(&str, &[T])]) -> String {
    let mut out = String::new();
    let mut head: Vec<String> = (0..grid.dim()).map(|k| format!("x{k}")).collect();
    head.extend(cols.iter().map(|(n, _)| n.to_string()));
    let _ = writeln!(out, "{}", head.join(","));
    for (i, p) in grid.points().iter().enumerate() {
        let mut cells: Vec<String> = p.iter().map(|v| format!("{}", v.to_f64_lossy())).collect();
        cells.extend(cols.iter().map(|(_, c)| format!("{}", c[i].to_f64_lossy())));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
