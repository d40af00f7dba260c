//! The primal problem `max{∫f dν : ν ⪯_C μ}`, its value function and solution sets.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{coupling_program, dirac_orbits, generators, ConeSpec, CouplingProgram, OrderMethod};
use crate::envelope::dual_envelope_check;
use crate::error::{dim_check, Error, Result};
use crate::lp::{projected_vertex_test, solve_lp, LinearProgram};
use crate::measure::{Kernel, Measure};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T: Scalar = f64> {
    pub value: T,
    pub optimizer: Measure<T>,
    /// Order-preserving kernel with `optimizer = coupling * μ`, for min-closed cones.
    pub coupling: Option<Kernel<T>>,
    /// `|value - dual value|` when the dual program has a finite description.
    pub duality_gap: Option<T>,
    pub affine_certificate: Option<AffinityReport<T>>,
    pub method: OrderMethod,
}

/// The feasible set `{ν ⪯_C μ}` as a polyhedron over auxiliary variables, with the map to `ν`.
#[derive(Debug, Clone)]
pub struct FeasibleSet<T: Scalar = f64> {
    pub lp: LinearProgram<T>,
    /// `ν = proj · z`.
    pub proj: Vec<Vec<T>>,
    pub method: OrderMethod,
    coupling: Option<CouplingProgram<T>>,
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn target(&self, z: &[T]) -> Vec<T> {
        self.proj.iter().map(|r| dot(r, z)).collect()
    }

    /// Objective `∫f dν` over the auxiliary variables.
    pub fn objective_for(&self, f: &[T]) -> Vec<T> {
        let nv = self.lp.num_vars();
        (0..nv).map(|j| self.proj.iter().zip(f).fold(T::zero(), |a, (r, fy)| a + r[j].clone() * fy.clone())).collect()
    }
}

/// Builds `{ν ⪯_C μ}`: a forward coupling for min-closed cones, the generator
/// inequalities when the cone has a finite generating set, otherwise a reverse coupling
/// through the negated cone.
pub fn feasible_set<T: Scalar>(mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<FeasibleSet<T>> {
    let grid = mu.grid();
    cone.validate(grid)?;
    let n = grid.len();
    let c = cone.canonical();
    if c.coupling_exact(grid) {
        let prog = coupling_program(mu.weights(), &dirac_orbits(&c, grid)?, None);
        let proj = (0..n)
            .map(|y| prog.vars.iter().map(|&(_, t)| if t == y { T::one() } else { T::zero() }).collect())
            .collect();
        return Ok(FeasibleSet { lp: prog.lp.clone(), proj, method: OrderMethod::Coupling, coupling: Some(prog) });
    }
    if let Some(gens) = generators(&c, grid) {
        let mut lp = LinearProgram::maximize(vec![T::zero(); n]);
        lp.add_eq(vec![T::one(); n], T::one());
        for g in &gens {
            lp.add_le(g.clone(), dot(g, mu.weights()));
        }
        let proj = (0..n).map(|y| (0..n).map(|j| if j == y { T::one() } else { T::zero() }).collect()).collect();
        return Ok(FeasibleSet { lp, proj, method: OrderMethod::Generators, coupling: None });
    }
    let neg = c.negate().canonical();
    if neg.coupling_exact(grid) {
        // μ = P*ν with rows of P in the orbits of -C; variables γ(y, x) = ν(y) P(x|y)
        let orbits = dirac_orbits(&neg, grid)?;
        let orbits_ref = &orbits;
        let vars: Vec<(usize, usize)> =
            (0..n).flat_map(|y| (0..n).filter(move |&x| orbits_ref[y].allowed[x]).map(move |x| (y, x))).collect();
        let nv = vars.len();
        let mut lp = LinearProgram::maximize(vec![T::zero(); nv]);
        for x in 0..n {
            lp.add_eq(vars.iter().map(|&(_, t)| if t == x { T::one() } else { T::zero() }).collect(), mu.weight(x).clone());
        }
        for y in 0..n {
            let homog = |a: &[T], b: &T| -> Vec<T> {
                vars.iter().map(|&(s, x)| if s == y { a[x].clone() - b.clone() } else { T::zero() }).collect()
            };
            for (a, b) in &orbits[y].eq {
                lp.add_eq(homog(a, b), T::zero());
            }
            for (a, b) in &orbits[y].le {
                lp.add_le(homog(a, b), T::zero());
            }
        }
        let proj = (0..n)
            .map(|y| vars.iter().map(|&(s, _)| if s == y { T::one() } else { T::zero() }).collect())
            .collect();
        return Ok(FeasibleSet { lp, proj, method: OrderMethod::ReverseCoupling, coupling: None });
    }
    Err(Error::Unsupported(format!("no exact description of the {} order on this grid", cone.label())))
}

/// Solves the primal problem and reports value, optimizer and (for min-closed cones) the coupling.
pub fn solve_primal<T: Scalar>(f: &[T], mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<SolveReport<T>> {
    let grid = mu.grid();
    dim_check("function", f.len(), grid.len())?;
    let mut fs = feasible_set(mu, cone)?;
    fs.lp.objective = fs.objective_for(f);
    let sol = solve_lp(&fs.lp)?;
    if !sol.is_optimal() {
        return Err(Error::AssertionFailure(format!("primal program reported {:?} although ν = μ is feasible", sol.status)));
    }
    let value = sol.value.clone().unwrap();
    let base = dot(f, mu.weights());
    if (base - value.clone()).is_pos(1e-9) {
        return Err(Error::AssertionFailure("optimal value fell below the value of ν = μ".into()));
    }
    let optimizer = Measure::new(grid.clone(), fs.target(&sol.primal))?;
    let coupling = match &fs.coupling {
        Some(prog) => Some(prog.kernel(grid.clone(), mu.weights(), &sol.primal)?),
        None => None,
    };
    let duality_gap = match dual_envelope_check(f, cone, mu) {
        Ok(d) => Some((d.dual_value - value.clone()).abs()),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SolveReport { value, optimizer, coupling, duality_gap, affine_certificate: None, method: fs.method })
}

pub fn value<T: Scalar>(f: &[T], mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<T> {
    Ok(solve_primal(f, mu, cone)?.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityReport<T: Scalar = f64> {
    pub max_deviation: T,
    pub worst_alpha: T,
    /// `(α, V(αμ1 + (1-α)μ2), αV(μ1) + (1-α)V(μ2))` per requested α.
    pub samples: Vec<(T, T, T)>,
}

/// Largest gap between the value at a mixture and the mixture of values.
///
/// For cones known to be min-closed a deviation above `1e-8` is an invariant violation.
pub fn value_affinity_check<T: Scalar>(
    f: &[T],
    cone: &ConeSpec<T>,
    mu1: &Measure<T>,
    mu2: &Measure<T>,
    alphas: &[T],
) -> Result<AffinityReport<T>> {
    let v1 = value(f, mu1, cone)?;
    let v2 = value(f, mu2, cone)?;
    let mut samples = Vec::with_capacity(alphas.len());
    let mut max_deviation = T::zero();
    let mut worst_alpha = T::zero();
    for a in alphas {
        let mix = mu1.mix(mu2, a)?;
        let v = value(f, &mix, cone)?;
        let interp = a.clone() * v1.clone() + (T::one() - a.clone()) * v2.clone();
        let dev = (v.clone() - interp.clone()).abs();
        if dev > max_deviation {
            max_deviation = dev;
            worst_alpha = a.clone();
        }
        samples.push((a.clone(), v, interp));
    }
    if cone.known_min_closed() == Some(true) && max_deviation.is_pos(1e-8) {
        return Err(Error::InvariantViolation(format!(
            "value function of the min-closed {} cone deviates from affinity by {max_deviation}",
            cone.label()
        )));
    }
    Ok(AffinityReport { max_deviation, worst_alpha, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet<T: Scalar = f64> {
    pub vertices: Vec<Measure<T>>,
    pub truncated: bool,
}

fn random_direction<T: Scalar, R: Rng>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::from_ratio(rng.gen_range(-1000..=1000), 1000)).collect()
}

/// Optimal face `{ν ⪯_C μ : ∫f dν = V*}` as a polyhedron over the auxiliary variables.
pub fn optimal_face<T: Scalar>(f: &[T], mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<(FeasibleSet<T>, T)> {
    let mut fs = feasible_set(mu, cone)?;
    let obj = fs.objective_for(f);
    fs.lp.objective = obj.clone();
    let v = solve_lp(&fs.lp)?.value_or_err()?;
    fs.lp.add_eq(obj, v.clone());
    Ok((fs, v))
}

/// Vertices of the optimal face found by objective-perturbation restarts (random and
/// coordinate directions) and filtered by a projected vertex test.
pub fn solution_set_vertices<T: Scalar>(
    f: &[T],
    mu: &Measure<T>,
    cone: &ConeSpec<T>,
    cap: usize,
    seed: u64,
) -> Result<VertexSet<T>> {
    let grid: &Arc<_> = mu.grid();
    let n = grid.len();
    let (mut face, _) = optimal_face(f, mu, cone)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<Vec<T>> = Vec::new();
    for i in 0..n {
        for s in [1, -1] {
            let mut d = vec![T::zero(); n];
            d[i] = T::from_ratio(s, 1);
            dirs.push(d);
        }
    }
    for _ in 0..(4 * n).max(2 * cap) {
        dirs.push(random_direction(n, &mut rng));
    }
    let mut found: Vec<Vec<T>> = Vec::new();
    let mut truncated = false;
    for d in dirs {
        face.lp.objective = face.objective_for(&d);
        let sol = solve_lp(&face.lp)?;
        let nu = face.target(&sol.primal);
        if found.iter().any(|v| crate::scalar::max_abs_diff(v, &nu).near_zero(1e-7)) {
            continue;
        }
        if !projected_vertex_test(&face.lp, &face.proj, &nu)?.0 {
            continue;
        }
        if found.len() == cap {
            truncated = true;
            break;
        }
        found.push(nu);
    }
    let vertices = found.into_iter().map(|w| Measure::new(grid.clone(), w)).collect::<Result<Vec<_>>>()?;
    Ok(VertexSet { vertices, truncated })
}

/// Whether `ν` is an extreme point of `{ν' ⪯_C μ}`.
pub fn orbit_vertex<T: Scalar>(nu: &Measure<T>, mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<bool> {
    let fs = feasible_set(mu, cone)?;
    let (ok, _) = projected_vertex_test(&fs.lp, &fs.proj, nu.weights())?;
    Ok(ok)
}
