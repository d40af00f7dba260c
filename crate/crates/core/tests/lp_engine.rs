use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochorder::lp::{
    certify, enumerate_vertices, exact_mode_solve, exact_mode_solve_capped, farkas_margin, solve_lp, vertex_test,
    LinearProgram, LpStatus,
};
use stochorder::{Error, Rational, Scalar};

fn r(a: i64, b: i64) -> Rational {
    Rational::from_ratio(a, b)
}

#[test]
fn single_bound() {
    let mut lp: LinearProgram = LinearProgram::maximize(vec![1.0]);
    lp.add_le(vec![1.0], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.value.unwrap() - 1.0).abs() < 1e-12);
    assert!(certify(&lp, &s).unwrap().max_residual() < 1e-12);
}

#[test]
fn simplex_picks_largest_coordinate() {
    let f = vec![0.3, -1.0, 2.5, 0.7];
    let mut lp: LinearProgram = LinearProgram::maximize(f.clone());
    lp.add_eq(vec![1.0; 4], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert!((s.value.unwrap() - 2.5).abs() < 1e-12);
    assert!((s.primal[2] - 1.0).abs() < 1e-12);
    let mut lp: LinearProgram = LinearProgram::minimize(f);
    lp.add_eq(vec![1.0; 4], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert!((s.value.unwrap() + 1.0).abs() < 1e-12);
    assert!(certify(&lp, &s).unwrap().max_residual() < 1e-12);
}

#[test]
fn two_by_two_transport() {
    // cost c[i][j], supplies (0.6, 0.4), demands (0.5, 0.5)
    let c = [[1.0, 3.0], [2.0, 1.0]];
    let mut lp: LinearProgram = LinearProgram::minimize(vec![c[0][0], c[0][1], c[1][0], c[1][1]]);
    lp.add_eq(vec![1.0, 1.0, 0.0, 0.0], 0.6);
    lp.add_eq(vec![0.0, 0.0, 1.0, 1.0], 0.4);
    lp.add_eq(vec![1.0, 0.0, 1.0, 0.0], 0.5);
    lp.add_eq(vec![0.0, 1.0, 0.0, 1.0], 0.5);
    let s = solve_lp(&lp).unwrap();
    // hand solution: x00 = .5, x01 = .1, x11 = .4 → .5 + .3 + .4
    assert!((s.value.unwrap() - 1.2).abs() < 1e-12);
    let cert = certify(&lp, &s).unwrap();
    assert!(cert.max_residual() < 1e-10, "{cert:?}");
}

#[test]
fn degenerate_program_solves_exactly() {
    // classic cycling example under the textbook largest-coefficient rule
    let mut lp: LinearProgram<Rational> = LinearProgram::maximize(vec![r(3, 4), r(-150, 1), r(1, 50), r(-6, 1)]);
    lp.add_le(vec![r(1, 4), r(-60, 1), r(-1, 25), r(9, 1)], r(0, 1));
    lp.add_le(vec![r(1, 2), r(-90, 1), r(-1, 50), r(3, 1)], r(0, 1));
    lp.add_le(vec![r(0, 1), r(0, 1), r(1, 1), r(0, 1)], r(1, 1));
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.value.clone().unwrap(), r(1, 20));
    assert!(certify(&lp, &s).unwrap().max_residual() == r(0, 1));
}

#[test]
fn infeasible_program_carries_farkas() {
    let mut lp: LinearProgram = LinearProgram::maximize(vec![1.0, 1.0]);
    lp.add_eq(vec![1.0, 1.0], 1.0);
    lp.add_ge(vec![1.0, 0.0], 0.7);
    lp.add_ge(vec![0.0, 1.0], 0.7);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
    let m = farkas_margin(&lp, s.farkas.as_ref().unwrap()).unwrap();
    assert!(m > 1e-6, "margin {m}");
}

#[test]
fn unbounded_program_carries_ray() {
    let mut lp: LinearProgram = LinearProgram::maximize(vec![1.0, 0.0]);
    lp.add_le(vec![-1.0, 1.0], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Unbounded);
    let ray = s.ray.unwrap();
    assert!(ray[0] > 0.0 && -ray[0] + ray[1] <= 1e-12);
}

#[test]
fn free_variables_and_upper_bounds() {
    // max x - y, x free in [-2, 3], y >= -1, x + y <= 1; optimum (2, -1)
    let mut lp: LinearProgram = LinearProgram::maximize(vec![1.0, -1.0]);
    lp.set_free(0).set_upper(0, 3.0).set_lower(1, -1.0);
    lp.add_ge(vec![1.0, 0.0], -2.0);
    lp.add_le(vec![1.0, 1.0], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert!((s.value.unwrap() - 3.0).abs() < 1e-12, "{:?}", s.primal);
    assert!(certify(&lp, &s).unwrap().max_residual() < 1e-12);
}

#[test]
fn exact_cap_is_enforced() {
    let lp: LinearProgram = LinearProgram::maximize(vec![1.0; 10]);
    assert!(matches!(exact_mode_solve_capped(&lp, 5), Err(Error::Size(_))));
}

#[test]
fn redundant_equalities_are_tolerated() {
    let mut lp: LinearProgram = LinearProgram::maximize(vec![1.0, 2.0, 3.0]);
    lp.add_eq(vec![1.0, 1.0, 1.0], 1.0);
    lp.add_eq(vec![2.0, 2.0, 2.0], 2.0);
    lp.add_eq(vec![0.0, 1.0, 2.0], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert!((s.value.unwrap() - 2.0).abs() < 1e-12);
    assert!(certify(&lp, &s).unwrap().max_residual() < 1e-10);
    let e = exact_mode_solve(&lp).unwrap();
    assert_eq!(e.value.unwrap(), r(2, 1));
}

/// Random bounded polytope `{x >= 0, A x <= b}` with a box row.
fn random_polytope(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram<f64> {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let mut lp: LinearProgram = LinearProgram::maximize(c);
    lp.add_le(vec![1.0; n], rng.gen_range(2..=6) as f64);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=4) as f64 / 2.0).collect();
        lp.add_le(row, rng.gen_range(1..=8) as f64 / 2.0);
    }
    if rng.gen_bool(0.3) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=2) as f64).collect();
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            lp.add_eq(row, s / 4.0);
        }
    }
    lp
}

#[test]
fn optimum_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..60 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=4);
        let lp = random_polytope(&mut rng, n, m);
        let verts = enumerate_vertices(&lp, 1_000_000).unwrap();
        let s = solve_lp(&lp).unwrap();
        if verts.is_empty() {
            assert_eq!(s.status, LpStatus::Infeasible);
            continue;
        }
        let best = verts.iter().map(|v| lp.objective_value(v)).fold(f64::NEG_INFINITY, f64::max);
        assert!((s.value.unwrap() - best).abs() < 1e-9);
        assert!(vertex_test(&lp, &s.primal).unwrap().is_vertex);
        let e = exact_mode_solve(&lp).unwrap();
        assert!((e.value.unwrap().to_f64_lossy() - best).abs() < 1e-9);
    }
}

#[test]
fn vertex_test_rejects_infeasible_points() {
    let mut lp: LinearProgram = LinearProgram::maximize(vec![0.0, 0.0]);
    lp.add_le(vec![1.0, 1.0], 1.0);
    assert!(matches!(vertex_test(&lp, &[1.0, 1.0]), Err(Error::Precondition(_))));
    assert!(vertex_test(&lp, &[1.0, 0.0]).unwrap().is_vertex);
    assert!(!vertex_test(&lp, &[0.5, 0.5]).unwrap().is_vertex);
    assert!(!vertex_test(&lp, &[0.2, 0.2]).unwrap().is_vertex);
}

/// Refactoring must not divide by round-off left in eliminated columns.
#[test]
fn refactor_after_many_pivots_keeps_feasibility() {
    use stochorder::cone::{generators, ConeSpec};
    use stochorder::measure::Grid;
    let g = Grid::interval(0.0, 1.0, 7).unwrap();
    let f = [0.3, -0.2, 0.9, 0.1, 0.4, 1.2, 0.0];
    let w = [0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.1];
    let gens = generators(&ConeSpec::concave(), &g).unwrap();
    let obj: Vec<f64> = gens.iter().map(|h| h.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    let mut lp: LinearProgram = LinearProgram::minimize(obj);
    for x in 0..7 {
        lp.add_ge(gens.iter().map(|h| h[x]).collect(), f[x]);
    }
    let sol = solve_lp(&lp).unwrap();
    assert!(lp.max_violation(&sol.primal) < 1e-9);
    let exact = exact_mode_solve(&lp).unwrap();
    let v = exact.value.unwrap().to_f64_lossy();
    assert!((sol.value.unwrap() - v).abs() < 1e-9);
    assert!(certify(&lp, &sol).unwrap().max_residual() < 1e-8);
}
