use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{coupling_program, dirac_orbits, generators, sample_member, ConeSpec};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpStatus};
use crate::measure::{same_grid, Kernel, Measure};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMethod {
    /// Feasibility of a coupling whose rows lie in the Dirac orbits.
    Coupling,
    /// Finite generating set of the cone.
    Generators,
    /// Coupling in the opposite direction for the negated (min-closed) cone.
    ReverseCoupling,
    /// Randomly sampled test functions; a `true` verdict is not a proof.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderCertificate<T: Scalar = f64> {
    /// `ν = P*μ` with rows of `P` in the orbits.
    Coupling(Kernel<T>),
    /// `μ = P*ν` with rows of `P` in the orbits of the negated cone.
    ReverseCoupling(Kernel<T>),
    /// Cone element `g` with `∫g dν - ∫g dμ = gap > 0`.
    Violation { g: Vec<T>, gap: T },
    /// Separating function from an infeasible coupling program.
    Separator { h: Vec<T>, margin: T },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderVerdict<T: Scalar = f64> {
    pub holds: bool,
    pub method: OrderMethod,
    pub exact: bool,
    pub certificate: OrderCertificate<T>,
}

fn coupling_verdict<T: Scalar>(from: &Measure<T>, to: &Measure<T>, cone: &ConeSpec<T>, reverse: bool) -> Result<OrderVerdict<T>> {
    let grid = from.grid();
    let orbits = dirac_orbits(cone, grid)?;
    let prog = coupling_program(from.weights(), &orbits, Some(to.weights()));
    let sol = solve_lp(&prog.lp)?;
    let method = if reverse { OrderMethod::ReverseCoupling } else { OrderMethod::Coupling };
    match sol.status {
        LpStatus::Optimal => {
            let k = prog.kernel(grid.clone(), from.weights(), &sol.primal)?;
            let certificate = if reverse { OrderCertificate::ReverseCoupling(k) } else { OrderCertificate::Coupling(k) };
            Ok(OrderVerdict { holds: true, method, exact: true, certificate })
        }
        LpStatus::Infeasible => {
            let y = sol.farkas.expect("infeasible programs carry a certificate");
            let t0 = prog.target_row.unwrap();
            let h: Vec<T> = (0..grid.len()).map(|j| -y.eq[t0 + j].clone()).collect();
            let margin = crate::lp::farkas_margin(&prog.lp, &y)?;
            Ok(OrderVerdict { holds: false, method, exact: true, certificate: OrderCertificate::Separator { h, margin } })
        }
        LpStatus::Unbounded => Err(Error::NumericalFailure("feasibility program reported unbounded".into())),
    }
}

/// Decides `ν ⪯_C μ`, i.e. `∫g dν <= ∫g dμ` for every `g` in the cone.
pub fn order_leq<T: Scalar>(nu: &Measure<T>, mu: &Measure<T>, cone: &ConeSpec<T>) -> Result<OrderVerdict<T>> {
    same_grid(nu.grid(), mu.grid())?;
    let grid = mu.grid();
    cone.validate(grid)?;
    let c = cone.canonical();
    if c.coupling_exact(grid) {
        return coupling_verdict(mu, nu, &c, false);
    }
    if let Some(gens) = generators(&c, grid) {
        let mut worst: Option<(Vec<T>, T)> = None;
        for g in gens {
            let gap = dot(&g, nu.weights()) - dot(&g, mu.weights());
            if gap.is_pos(1e-9) && worst.as_ref().is_none_or(|(_, w)| gap > *w) {
                worst = Some((g, gap));
            }
        }
        let (holds, certificate) = match worst {
            Some((g, gap)) => (false, OrderCertificate::Violation { g, gap }),
            None => (true, OrderCertificate::None),
        };
        return Ok(OrderVerdict { holds, method: OrderMethod::Generators, exact: true, certificate });
    }
    let neg = c.negate().canonical();
    if neg.coupling_exact(grid) {
        return coupling_verdict(nu, mu, &neg, true);
    }
    Err(Error::Unsupported(format!("no exact order test for the {} cone on this grid", cone.label())))
}

/// Sound-only test against sampled cone elements: `false` is certain, `true` is not.
pub fn order_leq_sampled<T: Scalar>(
    nu: &Measure<T>,
    mu: &Measure<T>,
    cone: &ConeSpec<T>,
    samples: usize,
    seed: u64,
) -> Result<OrderVerdict<T>> {
    same_grid(nu.grid(), mu.grid())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let g = sample_member(cone, mu.grid(), &mut rng)?;
        let gap = dot(&g, nu.weights()) - dot(&g, mu.weights());
        if gap.is_pos(1e-9) {
            return Ok(OrderVerdict {
                holds: false,
                method: OrderMethod::Sampled,
                exact: false,
                certificate: OrderCertificate::Violation { g, gap },
            });
        }
    }
    Ok(OrderVerdict { holds: true, method: OrderMethod::Sampled, exact: false, certificate: OrderCertificate::None })
}
