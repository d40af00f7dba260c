use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use stochorder::cone::ConeSpec;
use stochorder::envelope::{c_envelope, lower_convex_envelope};
use stochorder::measure::{Grid, Measure};
use stochorder::optimize::solution_set_vertices;
use stochorder::stackelberg::*;
use stochorder::{Error, Rational, Scalar};

fn line(xs: &[f64]) -> Arc<Grid> {
    Arc::new(Grid::from_values(xs).unwrap())
}

fn unit(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
}

/// Vertices of `{η : mean η = x}` on a line, written out by hand: the Dirac at `x` and
/// every two-point split straddling `x`.
fn mps_vertices(xs: &[f64], x: usize) -> Vec<Vec<f64>> {
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

fn integ(w: &[f64], g: &[f64]) -> f64 {
    w.iter().zip(g).map(|(a, b)| a * b).sum()
}

/// Leader-preferred follower value at `δ_x` by enumeration.
fn two_level(xs: &[f64], f: &[f64], wb: &[f64], x: usize) -> (f64, f64) {
    let vs = mps_vertices(xs, x);
    let best = vs.iter().map(|e| integ(e, f)).fold(f64::NEG_INFINITY, f64::max);
    let lead = vs.iter().filter(|e| integ(e, f) >= best - 1e-9).map(|e| integ(e, wb)).fold(f64::NEG_INFINITY, f64::max);
    (best, lead)
}

#[test]
fn trivial_leader_weights() {
    let g = unit(5);
    let f = vec![0.3, -0.2, 0.5, 0.1, 0.0];
    let mut p = StackelbergProblem {
        grid: g.clone(),
        leader_set: LeaderSet::Simplex,
        follower_cone: ConeSpec::concave(),
        f: f.clone(),
        w_a: vec![1.0, 0.0, 2.0, 0.0, 0.5],
        w_b: vec![0.0; 5],
    };
    let m = modified_objective(&p).unwrap();
    assert!(m.w_b_star.iter().all(|v| v.abs() < 1e-12));
    let r = solve_stackelberg(&p).unwrap();
    assert!((r.leader_value - 2.0).abs() < 1e-12);
    assert_eq!(r.mu_star.is_dirac(1e-12), Some(2));

    p.w_b = f.clone();
    let m = modified_objective(&p).unwrap();
    let fbar = c_envelope(&f, &ConeSpec::concave(), &g).unwrap().fbar;
    for x in 0..5 {
        assert!((m.w_b_star[x] - fbar[x]).abs() < 1e-9);
    }
}

#[test]
fn robust_modified_objective_is_lower_convex_envelope() {
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let g = line(&xs);
    let v = vec![0.4, 1.0, 0.2, 0.9, 0.6];
    let p = robust_persuasion(g.clone(), v.clone(), 2);
    let m = modified_objective(&p).unwrap();
    let lcx = lower_convex_envelope(&v, &g).unwrap();
    for x in 0..5 {
        let (_, lead) = two_level(&xs, &p.f, &p.w_b, x);
        assert!((m.w_b_star[x] - lead).abs() < 1e-9);
        assert!((m.w_b_star[x] - lcx[x]).abs() < 1e-9);
    }
}

#[test]
fn robust_persuasion_value_is_full_information() {
    let g = unit(11);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let v: Vec<f64> = (0..11).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let prior = 1 + trial % 9;
        let r = solve_stackelberg(&robust_persuasion(g.clone(), v.clone(), prior)).unwrap();
        let x0 = g.point(prior)[0];
        let full = (1.0 - x0) * v[0] + x0 * v[10];
        assert!((r.leader_value - full).abs() <= 1e-8, "trial {trial}: {} vs {full}", r.leader_value);
    }
}

fn action(x: f64) -> usize {
    if x < 0.4 {
        0
    } else if x < 0.7 {
        1
    } else {
        2
    }
}

#[test]
fn sequential_persuasion_matches_two_chain_enumeration() {
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let g = line(&xs);
    // the first sender wants any action above 0, the second wants the top action but
    // dislikes the middle one
    let first: Vec<f64> = xs.iter().map(|&x| if action(x) >= 1 { 1.0 } else { 0.0 }).collect();
    let second: Vec<f64> = xs.iter().map(|&x| [0.0, -0.2, 1.0][action(x)]).collect();
    for prior in 1..4 {
        let p = sequential_persuasion(g.clone(), prior, first.clone(), second.clone());
        let r = solve_stackelberg(&p).unwrap();

        let mut oracle = f64::NEG_INFINITY;
        for mu in mps_vertices(&xs, prior) {
            let sup: Vec<usize> = (0..5).filter(|&i| mu[i] > 0.0).collect();
            let rows: Vec<Vec<Vec<f64>>> = sup.iter().map(|&x| mps_vertices(&xs, x)).collect();
            let mut best_f = f64::NEG_INFINITY;
            let mut best_w = f64::NEG_INFINITY;
            let mut idx = vec![0usize; sup.len()];
            loop {
                let mut nu = vec![0.0; 5];
                for (k, &x) in sup.iter().enumerate() {
                    for j in 0..5 {
                        nu[j] += mu[x] * rows[k][idx[k]][j];
                    }
                }
                let (fv, wv) = (integ(&nu, &second), integ(&nu, &first));
                if fv > best_f + 1e-9 {
                    best_f = fv;
                    best_w = wv;
                } else if fv > best_f - 1e-9 {
                    best_w = best_w.max(wv);
                }
                let mut k = 0;
                while k < idx.len() {
                    idx[k] += 1;
                    if idx[k] < rows[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == idx.len() {
                    break;
                }
            }
            oracle = oracle.max(best_w);
        }
        assert!((r.leader_value - oracle).abs() < 1e-9, "prior {prior}: {} vs {oracle}", r.leader_value);
        assert!(r.mu_extreme && r.nu_extreme);
        assert!(r.mu_star.support().len() <= 2);
        for x in r.mu_star.support() {
            assert!(r.kernel.row(x).iter().filter(|v| **v > 1e-12).count() <= 2);
        }
        let q = solve_quasi_convex(&p, |mu, nu| integ(mu.weights(), &p.w_a) + integ(nu.weights(), &p.w_b), 64).unwrap();
        assert!(!q.truncated);
        assert!((q.value - r.leader_value).abs() < 1e-9);
    }
}

fn option_fixture() -> OptionToOwn {
    let v: serde_json::Value = serde_json::from_str(include_str!("../../../fixtures/option_to_own.json")).unwrap();
    serde_json::from_value(v["payload"]["option_to_own"].clone()).unwrap()
}

#[test]
fn option_to_own_structure() {
    let inst = option_fixture();
    let p = inst.problem().unwrap();
    let r = solve_stackelberg(&p).unwrap();
    assert!(r.mu_star.is_dirac(1e-9).is_some());
    assert!(r.mu_extreme && r.nu_extreme);
    assert!(r.nu_star.support().len() <= 2);

    // exhaustive: Dirac outside options, follower vertices are Diracs below the option
    // price and two-point lotteries with mean equal to it
    let ps = inst.prices();
    let n = ps.len();
    let mut oracle = f64::NEG_INFINITY;
    for k in 0..n {
        let mut cands: Vec<Vec<f64>> = (0..=k).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        for a in 0..k {
            for b in k + 1..n {
                let w = (ps[k] - ps[a]) / (ps[b] - ps[a]);
                let mut e = vec![0.0; n];
                e[a] = 1.0 - w;
                e[b] = w;
                cands.push(e);
            }
        }
        let best = cands.iter().map(|e| integ(e, &p.f)).fold(f64::NEG_INFINITY, f64::max);
        let lead = cands.iter().filter(|e| integ(e, &p.f) >= best - 1e-9).map(|e| integ(e, &p.w_b)).fold(f64::NEG_INFINITY, f64::max);
        oracle = oracle.max(lead);
    }
    assert!((r.leader_value - oracle).abs() < 1e-9, "{} vs {oracle}", r.leader_value);
}

#[test]
fn orbit_leader_value_is_envelope_of_modified_objective() {
    let g = unit(6);
    let gamma = Measure::new(g.clone(), vec![0.1, 0.3, 0.0, 0.2, 0.3, 0.1]).unwrap();
    let cone_a = ConeSpec::nondecreasing();
    let p = StackelbergProblem {
        grid: g.clone(),
        leader_set: LeaderSet::OrbitOf { gamma: gamma.clone(), cone: cone_a.clone() },
        follower_cone: ConeSpec::concave(),
        f: vec![0.0, 0.7, 0.1, 0.5, 0.2, 0.9],
        w_a: vec![0.2, 0.0, 0.4, 0.1, 0.0, 0.3],
        w_b: vec![1.0, 0.0, -0.5, 0.3, 0.8, 0.0],
    };
    let r = solve_stackelberg(&p).unwrap();
    let m = modified_objective(&p).unwrap();
    let env = c_envelope(&m.total, &cone_a, &g).unwrap().fbar;
    assert!((r.leader_value - gamma.integrate(&env).unwrap()).abs() < 1e-9);
    for x in r.mu_star.support() {
        assert!((env[x] - m.total[x]).abs() < 1e-8);
    }
}

#[test]
fn non_min_closed_follower_is_unsupported() {
    let g = unit(4);
    let p = StackelbergProblem {
        grid: g,
        leader_set: LeaderSet::Simplex,
        follower_cone: ConeSpec::convex(),
        f: vec![0.0, 1.0, 0.0, 1.0],
        w_a: vec![0.0; 4],
        w_b: vec![0.0; 4],
    };
    assert!(matches!(modified_objective(&p).unwrap_err(), Error::Unsupported(_)));
}

fn exact_line(xs: &[(i64, i64)]) -> Arc<Grid<Rational>> {
    let vals: Vec<Rational> = xs.iter().map(|&(a, b)| Rational::from_ratio(a, b)).collect();
    Arc::new(Grid::from_values(&vals).unwrap())
}

fn q(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

#[test]
fn trapezoid_on_three_points_exact() {
    let g = exact_line(&[(0, 1), (1, 2), (1, 1)]);
    for (f, cone) in [
        (vec![q(0, 1), q(1, 1), q(0, 1)], ConeSpec::concave()),
        (vec![q(1, 1), q(0, 1), q(2, 1)], ConeSpec::concave()),
        (vec![q(1, 1), q(0, 1), q(1, 2)], ConeSpec::nondecreasing()),
        (vec![q(0, 1), q(0, 1), q(0, 1)], ConeSpec::concave()),
    ] {
        let p = StackelbergProblem {
            grid: g.clone(),
            leader_set: LeaderSet::Simplex,
            follower_cone: cone,
            f,
            w_a: vec![q(0, 1); 3],
            w_b: vec![q(0, 1); 3],
        };
        let r = trapezoid_verify(&p, 8).unwrap();
        assert!(r.holds && r.graph_vertices > 0, "{:?}", r.failures);
        assert_eq!(r.decomposed, r.graph_vertices);
    }
}

#[test]
fn trapezoid_with_single_leader_measure() {
    let g = exact_line(&[(0, 1), (1, 3), (2, 3), (1, 1)]);
    let mu = vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)];
    let f = vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1)];
    let eq: Vec<(Vec<Rational>, Rational)> =
        (0..4).map(|i| ((0..4).map(|j| if i == j { q(1, 1) } else { q(0, 1) }).collect(), mu[i].clone())).collect();
    let p = StackelbergProblem {
        grid: g.clone(),
        leader_set: LeaderSet::CustomPolytope { eq, le: Vec::new() },
        follower_cone: ConeSpec::concave(),
        f: f.clone(),
        w_a: vec![q(0, 1); 4],
        w_b: vec![q(0, 1); 4],
    };
    let r = trapezoid_verify(&p, 8).unwrap();
    assert!(r.holds);
    let face = solution_set_vertices(&f, &Measure::new(g.clone(), mu).unwrap(), &ConeSpec::concave(), 100, 0).unwrap();
    assert!(!face.truncated);
    assert_eq!(r.graph_vertices, face.vertices.len());
}

#[test]
fn trapezoid_size_cap_and_convex_witness() {
    let g = unit(5);
    let hinge: Vec<f64> = g.points().iter().map(|p| -(p[0] - 0.5).abs()).collect();
    let mut p = StackelbergProblem {
        grid: g.clone(),
        leader_set: LeaderSet::Simplex,
        follower_cone: ConeSpec::convex(),
        f: hinge,
        w_a: vec![0.0; 5],
        w_b: vec![0.0; 5],
    };
    assert!(matches!(trapezoid_verify(&p, 4).unwrap_err(), Error::Size(_)));
    let r = trapezoid_verify(&p, 8).unwrap();
    assert!(!r.holds);
    let w = r.non_convex_witness.unwrap();
    assert!(w.mid_value > w.mid_attained + 1e-9);
    p.follower_cone = ConeSpec::concave();
    assert!(trapezoid_verify(&p, 8).unwrap().non_convex_witness.is_none());
}

#[test]
fn ambiguity_checks() {
    let g = unit(6);
    let u = vec![0.3, -0.4, 0.9, 0.1, -0.2, 0.5];
    for cone in [ConeSpec::concave(), ConeSpec::nondecreasing(), ConeSpec::increasing_concave()] {
        for alpha in [0.0, 0.3, 1.0] {
            let r = ambiguity_representation_check(&cone, &g, &u, &alpha, 12, 4).unwrap();
            assert!(r.eu_representable, "{} α={alpha}: {}", cone.label(), r.max_deviation);
            let (a, b) = (r.u_hat.unwrap(), r.u_hat_envelope.unwrap());
            for x in 0..6 {
                assert!((a[x] - b[x]).abs() < 1e-9);
            }
        }
    }
    let tent: Vec<f64> = g.points().iter().map(|p| -(p[0] - 0.5).abs()).collect();
    let r = ambiguity_representation_check(&ConeSpec::convex(), &g, &tent, &1.0, 0, 0).unwrap();
    assert!(!r.eu_representable && r.witness.is_some() && r.max_deviation > 1e-3);
    let r = ambiguity_representation_check(&ConeSpec::convex(), &g, &[2.0; 6], &0.4, 8, 1).unwrap();
    assert!(r.eu_representable && r.max_deviation < 1e-12);
}

fn cones() -> Vec<ConeSpec> {
    vec![ConeSpec::concave(), ConeSpec::nondecreasing(), ConeSpec::nonincreasing(), ConeSpec::increasing_concave()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leader_value_matches_vertex_pairs(
        f in prop::collection::vec(-1.0f64..1.0, 4),
        wa in prop::collection::vec(-1.0f64..1.0, 4),
        wb in prop::collection::vec(-1.0f64..1.0, 4),
        k in 0usize..4,
    ) {
        let g = line(&[0.0, 0.2, 0.7, 1.0]);
        let p = StackelbergProblem { grid: g, leader_set: LeaderSet::Simplex, follower_cone: cones()[k].clone(), f, w_a: wa, w_b: wb };
        let r = solve_stackelberg(&p).unwrap();
        let e = solve_quasi_convex(&p, |mu, nu| integ(mu.weights(), &p.w_a) + integ(nu.weights(), &p.w_b), 200).unwrap();
        prop_assert!(!e.truncated);
        prop_assert!((r.leader_value - e.value).abs() <= 1e-8);
        prop_assert!(r.mu_extreme && r.nu_extreme);
    }
}
