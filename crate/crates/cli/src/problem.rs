//! Problem files and the payload schemas of each subcommand.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use stochorder::blackwell::KernelFamily;
use stochorder::cone::{slices_by_coordinate, ConeSpec};
use stochorder::io::{ConeDoc, MeasureDoc};
use stochorder::measure::{Grid, Measure};
use stochorder::scalar::{cast, cast_vec, dot};
use stochorder::stackelberg::{LeaderSet, OptionToOwn, StackelbergProblem};
use stochorder::updating::UpdateRule;
use stochorder::{Error, Result, Scalar};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Envelope,
    Solve,
    Couple,
    Expose,
    Blackwell,
    Design,
    Updating,
    Stackelberg,
    Verify,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Envelope => "envelope",
            ProblemKind::Solve => "solve",
            ProblemKind::Couple => "couple",
            ProblemKind::Expose => "expose",
            ProblemKind::Blackwell => "blackwell",
            ProblemKind::Design => "design",
            ProblemKind::Updating => "updating",
            ProblemKind::Stackelberg => "stackelberg",
            ProblemKind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Emit the plottable surface as CSV next to the report.
    #[serde(default)]
    pub csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub problem_kind: ProblemKind,
    pub payload: serde_json::Value,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("problem file: {e}")))?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!("unknown schema_version `{}`", p.schema_version)));
        }
        Ok(p)
    }

    pub fn payload<P: serde::de::DeserializeOwned>(&self) -> Result<P> {
        serde_json::from_value(self.payload.clone())
            .map_err(|e| Error::Invalid(format!("{} payload: {e}", self.problem_kind.name())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    pub states: usize,
    pub k: usize,
    #[serde(default)]
    pub eps: f64,
}

/// `{"interval": {..}}`, `{"simplex": {..}}` or an explicit `{"points": [[..]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Interval { interval: IntervalSpec },
    Simplex { simplex: SimplexSpec },
    Explicit(MeasureDoc),
}

impl GridSpec {
    /// `resolution` replaces `n` of an interval or `k` of a simplex grid.
    pub fn build<T: Scalar>(&self, resolution: Option<usize>) -> Result<Arc<Grid<T>>> {
        let g = match self {
            GridSpec::Interval { interval: s } => {
                Grid::interval(T::from_decimal(s.lo), T::from_decimal(s.hi), resolution.map_or(s.n, |k| k + 1))?
            }
            GridSpec::Simplex { simplex: s } => {
                Grid::simplex_shifted(s.states, resolution.unwrap_or(s.k), T::from_decimal(s.eps))?
            }
            GridSpec::Explicit(doc) => {
                if resolution.is_some() {
                    return Err(Error::Invalid("--grid-resolution needs an interval or simplex grid".into()));
                }
                return doc.grid();
            }
        };
        Ok(Arc::new(g))
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Formula {
    /// `coef·x + constant`.
    Linear {
        coef: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `high` where `coef·x >= at`, `low` elsewhere.
    Threshold {
        coef: Vec<f64>,
        at: f64,
        #[serde(default = "one")]
        high: f64,
        #[serde(default)]
        low: f64,
    },
    /// `scale·|coef·x - center|`.
    Abs {
        coef: Vec<f64>,
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

/// A function on the grid: explicit values or a formula in the point coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Values(Vec<f64>),
    Formula(Formula),
}

impl FunctionSpec {
    pub fn eval<T: Scalar>(&self, grid: &Grid<T>) -> Result<Vec<T>> {
        let f = match self {
            FunctionSpec::Values(v) => {
                if v.len() != grid.len() {
                    return Err(Error::Dimension(format!("function has {} values for {} grid points", v.len(), grid.len())));
                }
                return Ok(cast_vec(v));
            }
            FunctionSpec::Formula(form) => form,
        };
        let coef = match f {
            Formula::Linear { coef, .. } | Formula::Threshold { coef, .. } | Formula::Abs { coef, .. } => coef,
        };
        if coef.len() != grid.dim() {
            return Err(Error::Dimension(format!("formula has {} coefficients for dimension {}", coef.len(), grid.dim())));
        }
        let c: Vec<T> = cast_vec(coef);
        let out = grid
            .points()
            .iter()
            .map(|p| {
                let s = dot(&c, p);
                match f {
                    Formula::Linear { constant, .. } => s + T::from_decimal(*constant),
                    Formula::Threshold { at, high, low, .. } => {
                        if (T::from_decimal(*at) - s).is_pos(1e-12) {
                            T::from_decimal(*low)
                        } else {
                            T::from_decimal(*high)
                        }
                    }
                    Formula::Abs { center, scale, .. } => T::from_decimal(*scale) * (s - T::from_decimal(*center)).abs(),
                }
            })
            .collect();
        Ok(out)
    }
}

/// `"uniform"`, a weight vector, `{"dirac": [coords]}` or `{"index": i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Weights(Vec<f64>),
    Dirac { dirac: Vec<f64> },
    Index { index: usize },
    Named(String),
}

impl MeasureSpec {
    pub fn dirac_at(coords: &[f64]) -> Self {
        MeasureSpec::Dirac { dirac: coords.to_vec() }
    }

    /// Grid index of a point mass.
    pub fn point_index<T: Scalar>(&self, grid: &Grid<T>) -> Result<usize> {
        match self {
            MeasureSpec::Index { index } if *index < grid.len() => Ok(*index),
            MeasureSpec::Index { index } => Err(Error::Invalid(format!("grid index {index} out of range"))),
            MeasureSpec::Dirac { dirac } => {
                let p: Vec<T> = cast_vec(dirac);
                grid.index_of(&p, 1e-9).ok_or_else(|| Error::Invalid(format!("point {dirac:?} is not on the grid")))
            }
            _ => Err(Error::Invalid("expected a point mass (`dirac` or `index`)".into())),
        }
    }

    pub fn build<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<Measure<T>> {
        match self {
            MeasureSpec::Weights(w) => Measure::new(grid.clone(), cast_vec(w)),
            MeasureSpec::Named(s) if s == "uniform" => Ok(Measure::uniform(grid.clone())),
            MeasureSpec::Named(s) => Err(Error::Invalid(format!("unknown measure `{s}`"))),
            _ => Ok(Measure::dirac(grid.clone(), self.point_index(grid)?)),
        }
    }
}

/// Cone document with an optional partition generated from a simplex coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeInput {
    #[serde(flatten)]
    pub doc: ConeDoc,
    /// Cells of constant `x[coord]` for `partition_concave`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_coordinate: Option<usize>,
}

impl ConeInput {
    pub fn named(kind: &str) -> Self {
        ConeInput { doc: ConeDoc::named(kind), slice_coordinate: None }
    }

    pub fn spec<T: Scalar>(&self, grid: &Grid<T>) -> Result<ConeSpec<T>> {
        let mut doc = self.doc.clone();
        if let Some(c) = self.slice_coordinate {
            if c >= grid.dim() {
                return Err(Error::Invalid(format!("slice coordinate {c} out of range")));
            }
            doc.partition = slices_by_coordinate(grid, c);
        }
        let cone = doc.spec()?;
        cone.validate(grid)?;
        Ok(cone)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Martingale,
    Identity,
    Privacy {
        #[serde(default)]
        partition: Vec<Vec<usize>>,
        #[serde(default)]
        slice_coordinate: Option<usize>,
    },
    BoundedDrift {
        radius: f64,
    },
    Ball {
        radius: f64,
    },
    /// Transitions allowed by the order of a cone.
    Psi {
        cone: ConeInput,
    },
}

impl FamilySpec {
    pub fn build<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<KernelFamily<T>> {
        match self {
            FamilySpec::Martingale => Ok(KernelFamily::martingale(grid.clone())),
            FamilySpec::Identity => Ok(KernelFamily::identity(grid.clone())),
            FamilySpec::Privacy { partition, slice_coordinate } => {
                let cells = match slice_coordinate {
                    Some(c) if *c < grid.dim() => slices_by_coordinate(grid, *c),
                    Some(c) => return Err(Error::Invalid(format!("slice coordinate {c} out of range"))),
                    None => partition.clone(),
                };
                KernelFamily::privacy(grid.clone(), cells)
            }
            FamilySpec::BoundedDrift { radius } => KernelFamily::bounded_drift(grid.clone(), T::from_decimal(*radius)),
            FamilySpec::Ball { radius } => Ok(KernelFamily::ball(grid.clone(), T::from_decimal(*radius))),
            FamilySpec::Psi { cone } => stochorder::blackwell::psi(&cone.spec(grid)?, grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopePayload {
    pub grid: GridSpec,
    pub cone: ConeInput,
    pub f: FunctionSpec,
    /// Reports `∫f̄ dprior` as the value.
    #[serde(default)]
    pub prior: Option<MeasureSpec>,
    /// Also report the concave envelope.
    #[serde(default)]
    pub concavification: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePayload {
    pub grid: GridSpec,
    pub cone: ConeInput,
    pub f: FunctionSpec,
    pub mu: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplePayload {
    pub grid: GridSpec,
    pub cone: ConeInput,
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Mean-preserving spreads (concave order).
    Mps,
    /// Lower stochastic dominance (nondecreasing order).
    Lsd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposePayload {
    pub grid: GridSpec,
    pub construction: Construction,
    pub f: FunctionSpec,
    pub mu: MeasureSpec,
}

fn default_samples() -> usize {
    32
}

fn default_depth() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackwellPayload {
    pub grid: GridSpec,
    pub cone: ConeInput,
    pub family: FamilySpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPayload {
    pub grid: GridSpec,
    pub f: FunctionSpec,
    pub prior: MeasureSpec,
    pub family: FamilySpec,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Compare with the unconstrained optimum by Blackwell dominance.
    #[serde(default)]
    pub compare_unconstrained: bool,
}

fn default_resolution() -> usize {
    12
}

fn default_eps() -> f64 {
    stochorder::updating::DEFAULT_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdatingPayload {
    pub rule: UpdateRule,
    /// Interior binary-state grid has `resolution + 1` beliefs.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeaderSetSpec {
    Simplex,
    OrbitOf { gamma: MeasureSpec, cone: ConeInput },
    /// Rows `[a_1, .., a_n, b]` meaning `a·μ = b` or `a·μ <= b`.
    CustomPolytope {
        #[serde(default)]
        eq: Vec<Vec<f64>>,
        #[serde(default)]
        le: Vec<Vec<f64>>,
    },
}

impl LeaderSetSpec {
    pub fn build<T: Scalar>(&self, grid: &Arc<Grid<T>>) -> Result<LeaderSet<T>> {
        let rows = |rs: &[Vec<f64>]| -> Result<Vec<(Vec<T>, T)>> {
            rs.iter()
                .map(|r| {
                    if r.len() != grid.len() + 1 {
                        return Err(Error::Dimension(format!("leader row has {} entries, expected {}", r.len(), grid.len() + 1)));
                    }
                    Ok((cast_vec(&r[..grid.len()]), cast(&r[grid.len()])))
                })
                .collect()
        };
        Ok(match self {
            LeaderSetSpec::Simplex => LeaderSet::Simplex,
            LeaderSetSpec::OrbitOf { gamma, cone } => LeaderSet::OrbitOf { gamma: gamma.build(grid)?, cone: cone.spec(grid)? },
            LeaderSetSpec::CustomPolytope { eq, le } => LeaderSet::CustomPolytope { eq: rows(eq)?, le: rows(le)? },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralStackelberg {
    pub grid: GridSpec,
    pub leader_set: LeaderSetSpec,
    pub follower_cone: ConeInput,
    pub f: FunctionSpec,
    pub w_a: FunctionSpec,
    pub w_b: FunctionSpec,
}

impl GeneralStackelberg {
    pub fn build<T: Scalar>(&self, resolution: Option<usize>) -> Result<StackelbergProblem<T>> {
        let grid = self.grid.build(resolution)?;
        Ok(StackelbergProblem {
            leader_set: self.leader_set.build(&grid)?,
            follower_cone: self.follower_cone.spec(&grid)?,
            f: self.f.eval(&grid)?,
            w_a: self.w_a.eval(&grid)?,
            w_b: self.w_b.eval(&grid)?,
            grid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustPersuasion {
    pub grid: GridSpec,
    /// Sender payoff at each belief.
    pub v: FunctionSpec,
    pub prior: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialPersuasion {
    pub grid: GridSpec,
    pub prior: MeasureSpec,
    pub first: FunctionSpec,
    pub second: FunctionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StackelbergPayload {
    OptionToOwn(OptionToOwn),
    RobustPersuasion(RobustPersuasion),
    SequentialPersuasion(SequentialPersuasion),
    General(GeneralStackelberg),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPayload {
    pub suite: String,
    #[serde(default)]
    pub fixtures: Option<String>,
    /// Line grids for the exact four-way suite.
    #[serde(default)]
    pub grids: Vec<Vec<f64>>,
}
