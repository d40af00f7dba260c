use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochorder::cone::*;
use stochorder::measure::{Grid, Measure};
use stochorder::Rational;

fn line(xs: &[f64]) -> Arc<Grid> {
    Arc::new(Grid::from_values(xs).unwrap())
}

fn m(grid: &Arc<Grid>, w: &[f64]) -> Measure {
    Measure::new(grid.clone(), w.to_vec()).unwrap()
}

#[test]
fn orbit_examples() {
    let g = line(&[0.0, 0.5, 1.0]);
    let o = dirac_orbit(&ConeSpec::concave(), &g, 1).unwrap();
    assert_eq!(o.eq, vec![(vec![0.0, 0.5, 1.0], 0.5)]);
    assert_eq!(o.violation(&[0.0, 1.0, 0.0]), 0.0);

    let sq = Grid::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let o = dirac_orbit(&ConeSpec::nondecreasing(), &sq, 1).unwrap();
    assert_eq!(o.support(), vec![0, 1]);

    let o = dirac_orbit(&ConeSpec::convex(), &g, 2).unwrap();
    assert_eq!(o.support(), vec![2]);
}

#[test]
fn orbits_contain_their_dirac() {
    let g = line(&[0.0, 0.2, 0.5, 0.7, 1.0]);
    let cones = [
        ConeSpec::concave(),
        ConeSpec::convex(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
        ConeSpec::increasing_concave().negate(),
        ConeSpec::partition_concave(vec![vec![0, 1, 2], vec![3, 4]]),
        ConeSpec::custom(vec![vec![0.0, 0.04, 0.25, 0.49, 1.0]]),
    ];
    for c in &cones {
        for x in 0..g.len() {
            let mut d = vec![0.0; g.len()];
            d[x] = 1.0;
            assert!(dirac_orbit(c, &g, x).unwrap().violation(&d) <= 1e-12, "{} at {x}", c.label());
        }
    }
}

#[test]
fn order_examples() {
    let g = line(&[0.0, 0.5, 1.0]);
    let spread = m(&g, &[0.5, 0.0, 0.5]);
    let mid = m(&g, &[0.0, 1.0, 0.0]);

    let v = order_leq(&mid, &mid, &ConeSpec::concave()).unwrap();
    assert!(v.holds);
    assert!(matches!(v.certificate, OrderCertificate::Coupling(_)));

    let v = order_leq(&spread, &mid, &ConeSpec::concave()).unwrap();
    assert!(v.holds && v.exact && v.method == OrderMethod::Coupling);

    let v = order_leq(&mid, &spread, &ConeSpec::convex()).unwrap();
    assert!(v.holds && v.method == OrderMethod::Generators);
    let v = order_leq(&spread, &mid, &ConeSpec::convex()).unwrap();
    assert!(!v.holds);
    match v.certificate {
        OrderCertificate::Violation { g: h, gap } => {
            // direct summation of the violating generator
            let lhs: f64 = h.iter().zip(spread.weights()).map(|(a, b)| a * b).sum();
            let rhs: f64 = h.iter().zip(mid.weights()).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs - gap).abs() < 1e-12 && gap > 0.0);
        }
        other => panic!("expected a violated generator, got {other:?}"),
    }

    // concave order fails the other way; separator must witness it
    let v = order_leq(&mid, &spread, &ConeSpec::concave()).unwrap();
    assert!(!v.holds);
    assert!(matches!(v.certificate, OrderCertificate::Separator { margin, .. } if margin > 0.0));
}

#[test]
fn convex_order_in_two_dimensions_uses_reverse_coupling() {
    let grid = Arc::new(Grid::<f64>::simplex(3, 2).unwrap());
    let n = grid.len();
    let centre = grid.index_of(&[0.5, 0.5, 0.0], 1e-12).unwrap();
    let a = grid.index_of(&[1.0, 0.0, 0.0], 1e-12).unwrap();
    let b = grid.index_of(&[0.0, 1.0, 0.0], 1e-12).unwrap();
    let mut w = vec![0.0; n];
    w[a] = 0.5;
    w[b] = 0.5;
    let spread = Measure::new(grid.clone(), w).unwrap();
    let mid = Measure::dirac(grid.clone(), centre);
    let v = order_leq(&mid, &spread, &ConeSpec::convex()).unwrap();
    assert!(v.holds && v.exact && v.method == OrderMethod::ReverseCoupling);
    let v = order_leq(&spread, &mid, &ConeSpec::convex()).unwrap();
    assert!(!v.holds);
    let s = order_leq_sampled(&spread, &mid, &ConeSpec::convex(), 64, 1).unwrap();
    assert!(!s.holds && !s.exact);
}

#[test]
fn membership_examples() {
    let g5 = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
    let cones = [
        ConeSpec::concave(),
        ConeSpec::convex(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
        ConeSpec::partition_concave(vec![vec![0, 1], vec![2, 3, 4]]),
        ConeSpec::custom(vec![]),
    ];
    for c in &cones {
        assert!(membership(&[2.0; 5], c, &g5).unwrap(), "{}", c.label());
    }
    let bump: Vec<f64> = g5.points().iter().map(|p| -(p[0] - 0.5).powi(2)).collect();
    assert!(membership(&bump, &ConeSpec::concave(), &g5).unwrap());
    assert!(!membership(&bump, &ConeSpec::nondecreasing(), &g5).unwrap());

    let g3 = line(&[0.0, 0.5, 1.0]);
    let tent = [0.0, 1.0, 0.0];
    let upside = [0.0, -1.0, 0.0];
    // hull over all two-point mixtures: the chord from 0 to 1 sits at 0 under the tent,
    // so the dip is not concave, and the tent is
    let chord_at_mid = 0.5 * upside[0] + 0.5 * upside[2];
    assert!(upside[1] < chord_at_mid);
    assert!(!membership(&upside, &ConeSpec::concave(), &g3).unwrap());
    assert!(membership(&tent, &ConeSpec::concave(), &g3).unwrap());
    assert!(membership(&upside, &ConeSpec::custom(vec![upside.to_vec()]), &g3).unwrap());
    assert!(!membership(&tent, &ConeSpec::custom(vec![upside.to_vec()]), &g3).unwrap());
}

#[test]
fn concave_membership_on_simplex_grid() {
    let grid = Grid::<f64>::simplex(3, 4).unwrap();
    let f: Vec<f64> = grid.points().iter().map(|p| p[0].min(p[1]) + 0.3 * p[2]).collect();
    assert!(membership(&f, &ConeSpec::concave(), &grid).unwrap());
    let f: Vec<f64> = grid.points().iter().map(|p| p[0].max(p[1])).collect();
    assert!(!membership(&f, &ConeSpec::concave(), &grid).unwrap());
    assert!(membership(&f, &ConeSpec::convex(), &grid).unwrap());
}

#[test]
fn closure_classification() {
    let g3 = line(&[0.0, 0.5, 1.0]);
    let r = closure_classify(&ConeSpec::concave(), &g3, 32, 3).unwrap();
    assert!(r.min_closed && !r.max_closed && !r.sampled);
    assert!(r.max_witness.is_some());

    let r = closure_classify(&ConeSpec::convex(), &g3, 32, 3).unwrap();
    assert!(r.max_closed && !r.min_closed);
    let (a, b) = r.min_witness.clone().expect("a witness pair");
    let low: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    assert!(!membership(&low, &ConeSpec::convex(), &g3).unwrap());

    let r = closure_classify(&ConeSpec::nondecreasing(), &g3, 8, 3).unwrap();
    assert!(r.min_closed && r.max_closed);
}

/// Oracle: brute force over nonnegative combinations `a x + b x² + c` with `a` free
/// and coefficient steps of 1/4.
fn in_quadratic_cone(g: &[f64], xs: &[f64]) -> bool {
    // fit through the three points exactly when the grid has three points
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let base = [[1.0, x0, x0 * x0], [1.0, x1, x1 * x1], [1.0, x2, x2 * x2]];
    let d = det(base);
    let mut col = base;
    for r in 0..3 {
        col[r][2] = g[r];
    }
    let quad = det(col) / d;
    quad >= -1e-9
}

#[test]
fn custom_quadratic_cone_closure() {
    let xs = [0.0, 0.5, 1.0];
    let g3 = line(&xs);
    let cone = ConeSpec::custom(vec![
        xs.to_vec(),
        xs.iter().map(|x| -x).collect(),
        xs.iter().map(|x| x * x).collect(),
    ]);
    let r = closure_classify(&cone, &g3, 64, 11).unwrap();
    assert!(r.sampled);
    // on three points the cone is {g: second difference >= 0}, i.e. the convex functions
    assert!(r.max_closed && !r.min_closed);
    let (a, b) = r.min_witness.unwrap();
    let low: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
    assert!(!in_quadratic_cone(&low, &xs));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let g = sample_member(&cone, &g3, &mut rng).unwrap();
        assert!(in_quadratic_cone(&g, &xs));
        assert_eq!(membership(&g, &cone, &g3).unwrap(), in_quadratic_cone(&g, &xs));
    }
}

#[test]
fn generators_belong_to_their_cone() {
    let g = line(&[0.0, 0.1, 0.4, 0.6, 1.0]);
    let cones = [
        ConeSpec::concave(),
        ConeSpec::convex(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
        ConeSpec::increasing_concave().negate(),
        ConeSpec::partition_concave(vec![vec![0, 1, 2], vec![3, 4]]),
    ];
    for c in &cones {
        for h in generators(c, &g).unwrap() {
            assert!(membership(&h, c, &g).unwrap(), "{} {h:?}", c.label());
        }
    }
}

#[test]
fn exact_order_on_rationals() {
    let grid: Arc<Grid<Rational>> = Arc::new(Grid::from_values(&[
        Rational::from_integer(0.into()),
        Rational::new(1.into(), 3.into()),
        Rational::from_integer(1.into()),
    ])
    .unwrap());
    let third = Rational::new(1.into(), 3.into());
    let two_thirds = Rational::new(2.into(), 3.into());
    let zero = Rational::from_integer(0.into());
    let spread = Measure::new(grid.clone(), vec![two_thirds, zero.clone(), third]).unwrap();
    let mid = Measure::dirac(grid.clone(), 1);
    assert!(order_leq(&spread, &mid, &ConeSpec::concave()).unwrap().holds);
    assert!(!order_leq(&mid, &spread, &ConeSpec::concave()).unwrap().holds);
}

fn named_cones() -> Vec<ConeSpec> {
    vec![
        ConeSpec::concave(),
        ConeSpec::convex(),
        ConeSpec::nondecreasing(),
        ConeSpec::nonincreasing(),
        ConeSpec::increasing_concave(),
        ConeSpec::partition_concave(vec![vec![0, 1], vec![2, 3, 4]]),
    ]
}

fn measure_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u8..4, 5).prop_filter("nonzero", |w| w.iter().any(|&v| v > 0)).prop_map(|w| {
        let s: f64 = w.iter().map(|&v| v as f64).sum();
        w.iter().map(|&v| v as f64 / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn negation_reverses_the_order(a in measure_strategy(), b in measure_strategy(), k in 0usize..6) {
        let g = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let cone = named_cones()[k].clone();
        let (nu, mu) = (m(&g, &a), m(&g, &b));
        let fwd = order_leq(&nu, &mu, &cone).unwrap().holds;
        let back = order_leq(&mu, &nu, &cone.negate()).unwrap().holds;
        prop_assert_eq!(fwd, back);
    }

    #[test]
    fn coupling_and_generators_agree(a in measure_strategy(), b in measure_strategy(), k in 0usize..6) {
        let g = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let cone = named_cones()[k].clone();
        let (nu, mu) = (m(&g, &a), m(&g, &b));
        let gens = generators(&cone, &g).unwrap();
        let by_gens = gens.iter().all(|h| {
            let d: f64 = h.iter().zip(a.iter().zip(&b)).map(|(h, (x, y))| h * (x - y)).sum();
            d <= 1e-9
        });
        prop_assert_eq!(order_leq(&nu, &mu, &cone).unwrap().holds, by_gens);
    }

    #[test]
    fn order_is_reflexive_and_transitive(a in measure_strategy(), b in measure_strategy(), c in measure_strategy(), k in 0usize..6) {
        let g = line(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let cone = named_cones()[k].clone();
        let (x, y, z) = (m(&g, &a), m(&g, &b), m(&g, &c));
        prop_assert!(order_leq(&x, &x, &cone).unwrap().holds);
        if order_leq(&x, &y, &cone).unwrap().holds && order_leq(&y, &z, &cone).unwrap().holds {
            prop_assert!(order_leq(&x, &z, &cone).unwrap().holds);
        }
    }
}
