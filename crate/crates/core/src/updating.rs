//! Distorted belief updating: correction maps, two-stage updating, divisibility and
//! the value of splitting information into two rounds.
//!
//! Beliefs are plain `f64` vectors on the simplex. Rules involve real powers, so this
//! module is not generic over the scalar.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{dirac_orbit, ConeSpec};
use crate::error::{Error, Result};
use crate::measure::Grid;

/// Smallest coordinate accepted by ratio operations.
pub const INTERIOR_TOL: f64 = 1e-9;

/// Default distance of interior grids from the simplex boundary.
pub const DEFAULT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateRule {
    Bayes,
    /// `d(x, y) ∝ x^(1-β) ⊙ y^β`.
    PowerWeighted { beta: f64 },
    /// `d(x, y) ∝ x^(α-β) ⊙ y^β`.
    Grether { alpha: f64, beta: f64 },
    /// Binary-state table `d(p_i, p_j)` for the belief in the second state, interpolated
    /// bilinearly between the listed beliefs.
    Custom { beliefs: Vec<f64>, table: Vec<Vec<f64>> },
}

fn check_interior(x: &[f64], what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || *v < INTERIOR_TOL) {
        return Err(Error::Boundary(format!("{what} {x:?} is not in the interior of the simplex")));
    }
    Ok(())
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    for a in &mut v {
        *a /= s;
    }
    v
}

fn interp(xs: &[f64], t: f64) -> (usize, f64) {
    let k = xs.partition_point(|&v| v <= t).clamp(1, xs.len() - 1) - 1;
    let w = ((t - xs[k]) / (xs[k + 1] - xs[k])).clamp(0.0, 1.0);
    (k, w)
}

impl UpdateRule {
    pub fn label(&self) -> String {
        match self {
            UpdateRule::Bayes => "bayes".into(),
            UpdateRule::PowerWeighted { beta } => format!("power_weighted({beta})"),
            UpdateRule::Grether { alpha, beta } => format!("grether({alpha}, {beta})"),
            UpdateRule::Custom { .. } => "custom".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UpdateRule::Bayes => Ok(()),
            UpdateRule::PowerWeighted { beta } | UpdateRule::Grether { beta, .. } if !(beta.is_finite() && *beta > 0.0) => {
                Err(Error::Invalid(format!("exponent β = {beta} must be positive")))
            }
            UpdateRule::Grether { alpha, .. } if !alpha.is_finite() => Err(Error::Invalid("α must be finite".into())),
            UpdateRule::Custom { beliefs, table } => {
                if beliefs.len() < 2 || beliefs.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invalid("custom rule needs at least two increasing beliefs".into()));
                }
                if table.len() != beliefs.len() || table.iter().any(|r| r.len() != beliefs.len()) {
                    return Err(Error::Dimension(format!("custom table must be {0}x{0}", beliefs.len())));
                }
                if table.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Invalid("custom table entries must be beliefs in [0, 1]".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Distorted posterior from prior `x` and Bayesian posterior `y`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("beliefs of length {} and {}", x.len(), y.len())));
        }
        check_interior(x, "prior")?;
        check_interior(y, "posterior")?;
        Ok(match self {
            UpdateRule::Bayes => y.to_vec(),
            UpdateRule::PowerWeighted { beta } => {
                normalize(x.iter().zip(y).map(|(a, b)| a.powf(1.0 - beta) * b.powf(*beta)).collect())
            }
            UpdateRule::Grether { alpha, beta } => {
                normalize(x.iter().zip(y).map(|(a, b)| a.powf(alpha - beta) * b.powf(*beta)).collect())
            }
            UpdateRule::Custom { beliefs, table } => {
                if x.len() != 2 {
                    return Err(Error::Unsupported("tabulated rules are binary-state only".into()));
                }
                let (i, wi) = interp(beliefs, x[1]);
                let (j, wj) = interp(beliefs, y[1]);
                let at = |a: usize, b: usize| table[a][b];
                let p = (1.0 - wi) * ((1.0 - wj) * at(i, j) + wj * at(i, j + 1))
                    + wi * ((1.0 - wj) * at(i + 1, j) + wj * at(i + 1, j + 1));
                vec![1.0 - p, p]
            }
        })
    }
}

/// `d̂(x_B, x_D, y) = d(x_D, (x_D ⊘ x_B ⊙ y) / ⟨x_D ⊘ x_B, y⟩)`.
pub fn d_hat(rule: &UpdateRule, xb: &[f64], xd: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if xb.len() != xd.len() || xb.len() != y.len() {
        return Err(Error::Dimension("beliefs of different lengths".into()));
    }
    check_interior(xb, "Bayesian prior")?;
    check_interior(xd, "distorted prior")?;
    check_interior(y, "posterior")?;
    let w = normalize(xd.iter().zip(xb).zip(y).map(|((d, b), v)| d / b * v).collect());
    rule.apply(xd, &w)
}

/// `d_II(x, z; y) = d̂(y, d(x, y), z)`: prior `x`, interim Bayesian posterior `y`, final `z`.
pub fn d_two_stage(rule: &UpdateRule, x: &[f64], z: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let interim = rule.apply(x, y)?;
    d_hat(rule, y, &interim, z)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |w, (u, v)| w.max((u - v).abs()))
}

/// Beliefs `(1-p, p)` with `p = ε + (1-2ε)k/K`, `k = 0..=K`.
pub fn interior_binary_beliefs(k: usize, eps: f64) -> Vec<Vec<f64>> {
    (0..=k)
        .map(|i| {
            let p = eps + (1.0 - 2.0 * eps) * i as f64 / k as f64;
            vec![1.0 - p, p]
        })
        .collect()
}

/// Binary-state belief grid, indexed by the probability of the second state.
pub fn binary_grid(k: usize, eps: f64) -> Result<Arc<Grid>> {
    let ps: Vec<f64> = interior_binary_beliefs(k, eps).iter().map(|b| b[1]).collect();
    Ok(Arc::new(Grid::from_values(&ps)?))
}

/// Full belief vector of a grid point: binary grids store `p`, simplex grids store the belief.
pub fn belief_of(grid: &Grid, i: usize) -> Vec<f64> {
    let p = grid.point(i);
    if grid.is_simplex() {
        p.to_vec()
    } else {
        vec![1.0 - p[0], p[0]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityReport {
    pub divisible: bool,
    pub max_residual: f64,
    /// `(x, y, z)` attaining the largest residual.
    pub witness: Option<[Vec<f64>; 3]>,
    pub triples: usize,
}

/// `max ‖d_II(x, z; y) - d(x, z)‖∞` over all triples of the given interior beliefs.
pub fn divisibility_check(rule: &UpdateRule, beliefs: &[Vec<f64>], tol: f64) -> Result<DivisibilityReport> {
    rule.validate()?;
    let mut max_residual = 0.0;
    let mut witness = None;
    let mut triples = 0;
    for x in beliefs {
        for z in beliefs {
            let one = rule.apply(x, z)?;
            for y in beliefs {
                let r = sup_dist(&d_two_stage(rule, x, z, y)?, &one);
                triples += 1;
                if r > max_residual {
                    max_residual = r;
                    witness = Some([x.clone(), y.clone(), z.clone()]);
                }
            }
        }
    }
    let divisible = max_residual <= tol;
    Ok(DivisibilityReport { divisible, max_residual, witness: if divisible { None } else { witness }, triples })
}

/// Largest violation of `d(x, x) = x` on the given beliefs.
pub fn fixed_point_residual(rule: &UpdateRule, beliefs: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in beliefs {
        worst = worst.max(sup_dist(&rule.apply(x, x)?, x));
    }
    Ok(worst)
}

/// Sender payoff `f(y_B, y_D) = (a0 + a1 p_B) h(p_D) + c p_B` on binary beliefs, where
/// `p` is the probability of the second state and `h` is piecewise linear, constant
/// outside its knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payoff {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default = "one")]
    pub a0: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl Payoff {
    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() || self.knots.len() != self.values.len() {
            return Err(Error::Dimension("payoff knots and values must be nonempty and of equal length".into()));
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("payoff knots must increase".into()));
        }
        Ok(())
    }

    pub fn h(&self, p: f64) -> f64 {
        let (k, v) = (&self.knots, &self.values);
        if p <= k[0] {
            return v[0];
        }
        if p >= k[k.len() - 1] {
            return v[v.len() - 1];
        }
        let (i, w) = interp(k, p);
        (1.0 - w) * v[i] + w * v[i + 1]
    }

    pub fn eval(&self, yb: &[f64], yd: &[f64]) -> f64 {
        let pb = yb[yb.len() - 1];
        (self.a0 + self.a1 * pb) * self.h(yd[yd.len() - 1]) + self.c * pb
    }
}

/// 64 ramp payoffs (8 thresholds, 2 widths, 4 Bayesian weightings) and 32 random
/// piecewise-linear ones.
pub fn payoff_dictionary(seed: u64) -> Vec<Payoff> {
    let mut out = Vec::with_capacity(96);
    let weights = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 0.0, -0.5)];
    for t in 0..8 {
        let thr = 0.15 + 0.1 * t as f64;
        for width in [0.01, 0.05] {
            for &(a0, a1, c) in &weights {
                out.push(Payoff { knots: vec![thr - width, thr], values: vec![0.0, 1.0], a0, a1, c });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..32 {
        let mut knots: Vec<f64> = (0..4).map(|_| rng.gen_range(0.02..0.98)).collect();
        knots.sort_by(|a, b| a.total_cmp(b));
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let values = knots.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        out.push(Payoff { knots, values, a0: 1.0, a1: rng.gen_range(-1.0..1.0), c: rng.gen_range(-0.5..0.5) });
    }
    out
}

/// Concave envelope over the grid of `g`, evaluated at point `i`.
pub fn cav_at(g: &[f64], grid: &Grid, i: usize) -> Result<f64> {
    if grid.free_coords() == 1 {
        let xs: Vec<f64> = grid.points().iter().map(|p| p[0]).collect();
        let x = xs[i];
        let mut best = g[i];
        for a in 0..xs.len() {
            if xs[a] >= x {
                continue;
            }
            for b in 0..xs.len() {
                if xs[b] <= x {
                    continue;
                }
                let w = (x - xs[a]) / (xs[b] - xs[a]);
                best = best.max((1.0 - w) * g[a] + w * g[b]);
            }
        }
        return Ok(best);
    }
    Ok(dirac_orbit(&ConeSpec::concave(), grid, i)?.maximize(g)?.0)
}

/// One round of persuasion on top of a continuation value: `cav_y[cont(y, d̂(x_B, x_D, y))](x_B)`.
fn one_round<F>(rule: &UpdateRule, grid: &Grid, i: usize, xd: &[f64], mut cont: F) -> Result<f64>
where
    F: FnMut(usize, &[f64]) -> Result<f64>,
{
    let xb = belief_of(grid, i);
    let mut g = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let y = belief_of(grid, j);
        let yd = d_hat(rule, &xb, xd, &y)?;
        g.push(cont(j, &yd)?);
    }
    cav_at(&g, grid, i)
}

/// Value of `k` rounds of persuasion, with the option to stop after any round. The Bayesian
/// prior is grid point `i` and the distorted prior is `xd`.
pub fn multi_stage_value(rule: &UpdateRule, f: &Payoff, grid: &Grid, i: usize, xd: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(f.eval(&belief_of(grid, i), xd));
    }
    if k == 1 {
        return one_round(rule, grid, i, xd, |j, yd| Ok(f.eval(&belief_of(grid, j), yd)));
    }
    one_round(rule, grid, i, xd, |j, yd| {
        let stop = f.eval(&belief_of(grid, j), yd);
        Ok(stop.max(multi_stage_value(rule, f, grid, j, yd, k - 1)?))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicGap {
    pub w1: f64,
    pub w2: f64,
    pub gap: f64,
}

/// One-shot and two-round persuasion values at the prior pair `(grid point i, x_D)`.
pub fn dynamic_value_gap(rule: &UpdateRule, f: &Payoff, grid: &Grid, i: usize, xd: &[f64]) -> Result<DynamicGap> {
    rule.validate()?;
    f.validate()?;
    check_interior(&belief_of(grid, i), "Bayesian prior")?;
    let w1 = multi_stage_value(rule, f, grid, i, xd, 1)?;
    let w2 = multi_stage_value(rule, f, grid, i, xd, 2)?;
    let gap = w2 - w1;
    if gap < -1e-9 {
        return Err(Error::InvariantViolation(format!("two rounds are worth {gap} less than one")));
    }
    Ok(DynamicGap { w1, w2, gap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSearch {
    pub max_gap: f64,
    /// Dictionary index and grid prior of the largest gap.
    pub witness: Option<(usize, usize)>,
    pub witness_payoff: Option<Payoff>,
    pub w1: f64,
    pub w2: f64,
    pub evaluated: usize,
}

/// Largest dynamic gap over a payoff dictionary and all grid priors with `x_D = x_B`.
pub fn gap_search(rule: &UpdateRule, payoffs: &[Payoff], grid: &Grid) -> Result<GapSearch> {
    let mut best = GapSearch { max_gap: f64::NEG_INFINITY, witness: None, witness_payoff: None, w1: 0.0, w2: 0.0, evaluated: 0 };
    for (fi, f) in payoffs.iter().enumerate() {
        for i in 0..grid.len() {
            let r = dynamic_value_gap(rule, f, grid, i, &belief_of(grid, i))?;
            best.evaluated += 1;
            if r.gap > best.max_gap {
                best = GapSearch {
                    max_gap: r.gap,
                    witness: Some((fi, i)),
                    witness_payoff: Some(f.clone()),
                    w1: r.w1,
                    w2: r.w2,
                    evaluated: best.evaluated,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathWitness {
    pub prior: Vec<f64>,
    pub interim: Vec<f64>,
    pub terminal: Vec<f64>,
    /// Distorted belief reached through the interim posterior.
    pub two_stage: Vec<f64>,
    /// Distorted belief a single experiment with the same Bayesian posterior produces.
    pub one_stage: Vec<f64>,
}

/// Joint-posterior family closure: composing a split `x → {y, y'}` with a split
/// `y → {z, z'}` places mass on `(z, d_II(x, z; y))`, which a single experiment from `x`
/// can only reach if it equals `(z, d(x, z))`. Scans all paths `x → y → z` through the
/// given beliefs and returns the first off-graph point.
pub fn joint_family_closure(rule: &UpdateRule, beliefs: &[Vec<f64>], tol: f64) -> Result<Option<PathWitness>> {
    for x in beliefs {
        for y in beliefs {
            if y == x {
                continue;
            }
            let interim = rule.apply(x, y)?;
            for z in beliefs {
                if z == y {
                    continue;
                }
                let two_stage = d_hat(rule, y, &interim, z)?;
                let one_stage = rule.apply(x, z)?;
                if sup_dist(&two_stage, &one_stage) > tol {
                    return Ok(Some(PathWitness {
                        prior: x.clone(),
                        interim: y.clone(),
                        terminal: z.clone(),
                        two_stage,
                        one_stage,
                    }));
                }
            }
        }
    }
    Ok(None)
}
