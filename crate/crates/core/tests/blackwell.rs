use std::sync::Arc;

use proptest::prelude::*;
use stochorder::blackwell::*;
use stochorder::cone::{dirac_orbit, sample_member, slices_by_coordinate, ConeSpec};
use stochorder::envelope::concavification;
use stochorder::measure::{Grid, Kernel, Measure};
use stochorder::Error;

fn line(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
}

fn mean(g: &Grid, eta: &[f64]) -> f64 {
    eta.iter().enumerate().map(|(i, w)| w * g.point(i)[0]).sum()
}

#[test]
fn psi_of_convex_is_martingale_rows() {
    let g = line(5);
    let fam = psi(&ConeSpec::convex(), &g).unwrap();
    assert!(fam.contains_identity());
    // split from the midpoint to the endpoints keeps the mean
    assert!(fam.contains_row(2, &[0.5, 0.0, 0.0, 0.0, 0.5]));
    assert!(!fam.contains_row(2, &[0.6, 0.0, 0.0, 0.0, 0.4]));
    for x in 0..5 {
        let (hi, eta) = fam.row_max(x, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!((hi - g.point(x)[0]).abs() < 1e-12);
        assert!((mean(&g, &eta) - g.point(x)[0]).abs() < 1e-12);
        let (lo, _) = fam.row_min(x, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert!((lo - g.point(x)[0]).abs() < 1e-12);
    }
    assert!(family_distance(&fam, &KernelFamily::martingale(g.clone())).unwrap() < 1e-12);
}

#[test]
fn psi_of_nondecreasing_is_upper_sets() {
    let g = line(4);
    let fam = psi(&ConeSpec::nondecreasing(), &g).unwrap();
    for x in 0..4 {
        let sup = fam.per_point_sets[x].support();
        assert_eq!(sup, (x..4).collect::<Vec<_>>());
    }
    assert!(fam.contains_row(1, &[0.0, 0.2, 0.0, 0.8]));
    assert!(!fam.contains_row(1, &[0.1, 0.1, 0.0, 0.8]));
}

#[test]
fn privacy_rows_stay_in_their_cell_and_keep_the_barycenter() {
    let grid = Arc::new(Grid::<f64>::simplex(3, 6).unwrap());
    let cells = slices_by_coordinate(&grid, 0);
    let fam = KernelFamily::privacy(grid.clone(), cells.clone()).unwrap();
    let mut rng = rand_chacha_rng(3);
    for (x, p) in fam.per_point_sets.iter().enumerate() {
        let cell = cells.iter().find(|c| c.contains(&x)).unwrap();
        for y in p.support() {
            assert!(cell.contains(&y));
        }
        // any maximizing row has barycenter x
        let obj: Vec<f64> = (0..grid.len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let (_, eta) = fam.row_max(x, &obj).unwrap();
        for k in 0..3 {
            let b: f64 = eta.iter().enumerate().map(|(i, w)| w * grid.point(i)[k]).sum();
            assert!((b - grid.point(x)[k]).abs() < 1e-9);
        }
    }
}

fn rand_chacha_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

#[test]
fn phi_membership_cases() {
    let g = line(6);
    let mart = KernelFamily::martingale(g.clone());
    assert!(phi_membership(&[2.5; 6], &mart).unwrap().member);
    let convex: Vec<f64> = g.points().iter().map(|p| (p[0] - 0.3).powi(2)).collect();
    assert!(phi_membership(&convex, &mart).unwrap().member);
    let concave: Vec<f64> = g.points().iter().map(|p| -(p[0] - 0.3).powi(2)).collect();
    let r = phi_membership(&concave, &mart).unwrap();
    assert!(!r.member && r.slack < 0.0);
    let (x, eta) = r.witness.unwrap();
    assert!(x > 0 && x < 5);
    // witness row is a martingale row that lowers the expectation
    assert!(mart.contains_row(x, &eta));
    let v: f64 = eta.iter().zip(&concave).map(|(a, b)| a * b).sum();
    assert!(v < concave[x] - 1e-9);
}

#[test]
fn composition_closure_of_named_families() {
    let g = line(6);
    assert!(composition_closure_check(&KernelFamily::martingale(g.clone()), 20, 1).unwrap().closed);
    let grid = Arc::new(Grid::<f64>::simplex(3, 6).unwrap());
    let fam = KernelFamily::privacy(grid.clone(), slices_by_coordinate(&grid, 0)).unwrap();
    assert!(composition_closure_check(&fam, 20, 1).unwrap().closed);

    let g = line(11);
    let drift = KernelFamily::bounded_drift(g.clone(), 0.1).unwrap();
    let r = composition_closure_check(&drift, 20, 1).unwrap();
    assert!(!r.closed);
    let w = r.witness.unwrap();
    assert!(drift.contains(&w.first) && drift.contains(&w.second));
    let shift = (mean(&g, &w.row) - g.point(w.x)[0]).abs();
    assert!(shift > 0.1 + 1e-9);
}

#[test]
fn convex_martingale_pair_is_consistent() {
    let g = line(5);
    let r = consistency_check(&ConeSpec::convex(), &KernelFamily::martingale(g.clone()), 24, 5).unwrap();
    assert!(r.max_closed && r.composition.closed);
    assert!(r.psi_residual.abs() < 1e-12);
    assert_eq!(r.phi_disagreements, 0);
    assert_eq!(r.order_disagreements, 0);
    assert!(r.order_samples > 0 && r.phi_samples > 0);
    assert!(r.consistent);
}

#[test]
fn concave_cone_is_not_max_closed() {
    let g = line(5);
    let cone = ConeSpec::concave();
    let fam = psi(&cone, &g).unwrap();
    let r = consistency_check(&cone, &fam, 16, 2).unwrap();
    assert!(!r.max_closed && !r.consistent);
    let (a, b) = r.max_witness.unwrap();
    let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
    assert!(!stochorder::cone::membership(&m, &cone, &g).unwrap());
}

#[test]
fn privacy_pair_is_consistent_at_resolution_six() {
    let grid = Arc::new(Grid::<f64>::simplex(3, 6).unwrap());
    let cells = slices_by_coordinate(&grid, 0);
    let cone = ConeSpec::partition_concave(cells.clone()).negate();
    let fam = KernelFamily::privacy(grid.clone(), cells).unwrap();
    let r = consistency_check(&cone, &fam, 12, 9).unwrap();
    assert!(r.psi_residual <= 1e-8);
    assert_eq!(r.phi_disagreements, 0);
    assert_eq!(r.order_disagreements, 0);
    assert!(r.consistent);
}

#[test]
fn martingale_design_is_concavification() {
    let g = line(9);
    let f: Vec<f64> = g.points().iter().map(|p| (6.0 * p[0]).sin() + p[0]).collect();
    let cav = concavification(&f, &g).unwrap();
    let fam = KernelFamily::martingale(g.clone());
    for prior in 0..9 {
        let r = constrained_design(&f, prior, &fam, 8).unwrap();
        assert!((r.value - cav[prior]).abs() < 1e-9);
        assert!(r.composition_closed && r.converged);
        assert!(r.certificate.support_in_contact && r.certificate.value_gap < 1e-9);
    }
}

#[test]
fn privacy_design_value() {
    let grid = Arc::new(Grid::<f64>::simplex(3, 10).unwrap());
    let f: Vec<f64> = grid.points().iter().map(|p| if p[2] >= p[0] - 1e-12 { 1.0 } else { 0.0 }).collect();
    let prior = grid.index_of(&[0.4, 0.3, 0.3], 1e-9).unwrap();
    let fam = KernelFamily::privacy(grid.clone(), slices_by_coordinate(&grid, 0)).unwrap();
    let r = constrained_design(&f, prior, &fam, 8).unwrap();
    assert!((r.value - 0.75).abs() < 1e-9);
    assert!(r.certificate.support_in_contact && r.certificate.value_gap < 1e-9);
    let kg = constrained_design(&f, prior, &KernelFamily::martingale(grid.clone()), 8).unwrap();
    assert!((kg.value - 0.9).abs() < 1e-9);
    let p = grid.point(prior);
    assert!((kg.value - (1.0f64).min(1.0 - p[0] + p[2])).abs() < 1e-9);
}

#[test]
fn identity_design_gives_no_information() {
    let g = line(5);
    let f = [0.3, -1.0, 2.0, 0.0, 0.5];
    let fam = KernelFamily::identity(g.clone());
    for prior in 0..5 {
        let r = constrained_design(&f, prior, &fam, 4).unwrap();
        assert_eq!(r.value, f[prior]);
        assert!(r.posterior.approx_eq(&Measure::dirac(g.clone(), prior), 0.0));
    }
}

#[test]
fn non_closed_family_iterates_to_depth() {
    let g = line(11);
    let f: Vec<f64> = g.points().iter().map(|p| if p[0] >= 0.85 { 1.0 } else { 0.0 }).collect();
    let fam = KernelFamily::bounded_drift(g.clone(), 0.1).unwrap();
    let one = constrained_design(&f, 2, &fam, 1).unwrap();
    let many = constrained_design(&f, 2, &fam, 32).unwrap();
    assert!(!many.composition_closed);
    assert!(many.value >= one.value - 1e-12);
    assert!(many.value > one.value + 1e-6);
    assert!(many.certificate.value_gap < 1e-9);
}

fn absorbing_walk() -> Kernel {
    let g = line(5);
    let mut rows = vec![vec![0.0; 5]; 5];
    rows[0][0] = 1.0;
    rows[4][4] = 1.0;
    for x in 1..4 {
        rows[x][x - 1] = 0.5;
        rows[x][x + 1] = 0.5;
    }
    Kernel::new(g, rows).unwrap()
}

#[test]
fn dynkin_stopping_matches_excessive_majorant() {
    let q = absorbing_walk();
    for f in [[0.0, 1.0, 0.2, 0.9, 0.1], [1.0, 0.0, 0.0, 0.0, 0.4], [0.0, 0.3, 1.0, 0.3, 0.0]] {
        let r = dynkin_check(&f, &q, 64).unwrap();
        assert!(r.max_gap < 1e-6, "{:?} vs {:?}", r.iterated, r.majorant);
        for x in 0..5 {
            assert!(r.majorant[x] >= f[x] - 1e-9);
        }
    }
    // on a line the majorant is the concave hull, the optimal stopping value of a fair walk
    let f = [0.0, 1.0, 0.2, 0.9, 0.1];
    let g = q.grid().clone();
    let cav = concavification(&f, &g).unwrap();
    let r = dynkin_check(&f, &q, 64).unwrap();
    for x in 0..5 {
        assert!((r.majorant[x] - cav[x]).abs() < 1e-6);
    }
}

#[test]
fn stopping_family_rows() {
    let q = absorbing_walk();
    let fam = KernelFamily::stop_or_continue(&q);
    assert!(fam.contains_identity());
    assert!(fam.contains_row(2, &[0.0, 0.5, 0.0, 0.5, 0.0]));
    assert!(fam.contains_row(2, &[0.0, 0.2, 0.6, 0.2, 0.0]));
    assert!(!fam.contains_row(2, &[0.0, 0.3, 0.6, 0.1, 0.0]));
    assert!(fam.per_point_sets[0].support() == vec![0]);
}

fn threshold(g: &Grid) -> Vec<f64> {
    g.points().iter().map(|p| if p[0] >= 0.5 - 1e-12 { 1.0 } else { 0.0 }).collect()
}

#[test]
fn binary_privacy_without_value_elimination_is_not_dominated() {
    let g = line(11);
    let f = threshold(&g);
    let lo: Vec<usize> = (0..=6).collect();
    let hi: Vec<usize> = (7..=10).collect();
    let fam = KernelFamily::privacy(g.clone(), vec![lo, hi]).unwrap();
    let v = constrained_vs_kg(&f, 3, &fam, 8).unwrap();
    assert!(v.composition_closed);
    assert!(v.value_eliminating.is_none());
    assert!(v.unconstrained_dominates && v.constrained_dominates);
    assert!(!v.strictly_dominated && v.holds);
}

#[test]
fn binary_privacy_with_value_elimination() {
    let g = line(11);
    let f = threshold(&g);
    let fam = KernelFamily::privacy(g.clone(), vec![(0..=3).collect(), (4..=10).collect()]).unwrap();
    let v = constrained_vs_kg(&f, 3, &fam, 8).unwrap();
    // 0.1 lies in the low cell where f vanishes, yet a split to {0, 0.5} pays off
    assert_eq!(v.value_eliminating, Some(1));
    assert!(v.holds);
}

#[test]
fn full_martingale_family_matches_kg() {
    let g = line(11);
    let f = threshold(&g);
    let v = constrained_vs_kg(&f, 3, &KernelFamily::martingale(g.clone()), 8).unwrap();
    assert!(v.constrained.approx_eq(&v.unconstrained, 1e-9));
    assert!(v.constrained_dominates && v.unconstrained_dominates && v.holds);
}

#[test]
fn ball_family_is_flagged() {
    let g = line(11);
    let f = threshold(&g);
    let fam = KernelFamily::ball(g.clone(), 0.2);
    let v = constrained_vs_kg(&f, 3, &fam, 16).unwrap();
    assert!(!v.composition_closed);
    // iterating radius-0.2 steps creeps toward the unconstrained split {0, 0.5}
    assert!(*v.constrained.weight(5) > 0.0);
    let value: f64 = v.constrained.integrate(&f).unwrap();
    assert!(value < 0.6 && value > 0.6 - 1e-5);
}

#[test]
fn non_unique_kg_is_inapplicable() {
    let g = line(5);
    let f = [0.0; 5];
    let err = constrained_vs_kg(&f, 2, &KernelFamily::martingale(g.clone()), 4).unwrap_err();
    assert!(matches!(err, Error::Inapplicable(_)));
}

#[test]
fn ternary_privacy_is_not_strictly_dominated() {
    let grid = Arc::new(Grid::<f64>::simplex(3, 6).unwrap());
    let f: Vec<f64> = grid
        .points()
        .iter()
        .map(|p| if p[2] >= p[0] + 1e-9 { 1.0 + p[1] } else { 0.5 * p[1] })
        .collect();
    let fam = KernelFamily::privacy(grid.clone(), slices_by_coordinate(&grid, 0)).unwrap();
    let mut checked = 0;
    for prior in 0..grid.len() {
        match constrained_vs_kg(&f, prior, &fam, 8) {
            Ok(v) => {
                checked += 1;
                assert!(v.holds, "prior {prior}");
                assert!(!v.strictly_dominated || v.value_eliminating.is_some());
            }
            Err(Error::Inapplicable(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(checked > 0);
}

#[test]
fn reaches_agrees_with_dirac_orbit() {
    let g = line(5);
    let fam = KernelFamily::martingale(g.clone());
    let mu = Measure::dirac(g.clone(), 2);
    let nu = Measure::new(g.clone(), vec![0.25, 0.0, 0.5, 0.0, 0.25]).unwrap();
    let k = fam.reaches(&mu, &nu).unwrap().unwrap();
    assert!(k.push(&mu).unwrap().approx_eq(&nu, 1e-12));
    let far = Measure::dirac(g.clone(), 3);
    assert!(fam.reaches(&mu, &far).unwrap().is_none());
    let orbit = dirac_orbit(&ConeSpec::concave(), &g, 2).unwrap();
    assert_eq!(orbit.violation(nu.weights()), 0.0);
}

fn named_cones() -> Vec<ConeSpec> {
    vec![
        ConeSpec::convex(),
        ConeSpec::concave(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::partition_concave(vec![vec![0, 1, 2], vec![3, 4, 5]]),
        ConeSpec::partition_concave(vec![vec![0, 1, 2], vec![3, 4, 5]]).negate(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_and_constants(k in 0usize..6, c in -3.0f64..3.0) {
        let g = line(6);
        let fam = psi(&named_cones()[k], &g).unwrap();
        prop_assert!(fam.contains_identity());
        prop_assert!(phi_membership(&[c; 6], &fam).unwrap().member);
    }

    #[test]
    fn members_pass_phi_of_psi(k in 0usize..6, seed in 0u64..1000) {
        let g = line(6);
        let cone = &named_cones()[k];
        let fam = psi(cone, &g).unwrap();
        let mut rng = rand_chacha_rng(seed);
        let m = sample_member(cone, &g, &mut rng).unwrap();
        let r = phi_membership(&m, &fam).unwrap();
        prop_assert!(r.member, "slack {}", r.slack);
    }

    #[test]
    fn max_closed_cones_give_composition_closed_families(k in 0usize..6, seed in 0u64..1000) {
        let cone = &named_cones()[k];
        if cone.known_max_closed() == Some(true) {
            let g = line(6);
            let fam = psi(cone, &g).unwrap();
            prop_assert!(composition_closure_check(&fam, 12, seed).unwrap().closed);
        }
    }
}
