use mixcharts::charts::{jacobian, DEFAULT_FD_STEP};
use mixcharts::matrix::{dense_rank, DEFAULT_RANK_TOL, DEFAULT_SUM_TOL};
use mixcharts::random::{random_interior_point, random_mixture};
use mixcharts::{
    chart_dim, chart_forward, chart_inverse, chart_inverse_with_branch, classify,
    column_combination, in_domain, mixture_to_matrix, numerical_rank, select_charts,
    validate_probability, ChartId, ChartPoint, Error, InverseBranch, PointFlag, ProbabilityMatrix,
    Shape,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn random_chart<R: Rng>(rng: &mut R, cols: usize) -> ChartId {
    let all = ChartId::all(cols);
    all[rng.random_range(0..all.len())]
}

/// Direct evaluation of alpha * A u^T + (1 - alpha) * C v^T.
fn forward_oracle(pt: &ChartPoint) -> Vec<f64> {
    let Shape { rows, cols } = pt.shape();
    let chart = pt.chart();
    let close = |v: &[f64]| {
        let mut out = v.to_vec();
        out.push(1.0 - v.iter().sum::<f64>());
        out
    };
    let a = close(pt.a());
    let c = close(pt.c());
    let others: Vec<usize> = (0..cols)
        .filter(|&j| j != chart.j1 && j != chart.j2)
        .collect();
    let mut u = vec![0.0; cols];
    let mut v = vec![0.0; cols];
    for (k, &j) in others.iter().enumerate() {
        u[j] = pt.b()[k];
        v[j] = pt.d()[k];
    }
    u[chart.j1] = 1.0 - pt.b().iter().sum::<f64>();
    v[chart.j2] = 1.0 - pt.d().iter().sum::<f64>();
    let al = pt.alpha();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(al * a[i] * u[j] + (1.0 - al) * c[i] * v[j]);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_matches_definition(rows in 2usize..=8, cols in 2usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Shape::new(rows, cols).unwrap();
        let chart = random_chart(&mut rng, cols);
        let pt = random_interior_point(&mut rng, chart, s).unwrap();
        let p = chart_forward(&pt).unwrap();
        let want = forward_oracle(&pt);
        let err = p.entries().iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-14, "error {err:e}");
    }
}

#[test]
fn forward_image_is_in_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for rows in 2..=8 {
        for cols in 2..=10 {
            let s = Shape::new(rows, cols).unwrap();
            for _ in 0..1000 {
                let chart = random_chart(&mut rng, cols);
                let pt = random_interior_point(&mut rng, chart, s).unwrap();
                let p = chart_forward(&pt).unwrap();
                assert!(validate_probability(s, p.entries(), DEFAULT_SUM_TOL).is_ok());
                assert!(numerical_rank(&p, DEFAULT_RANK_TOL) <= 2, "{s}");
            }
        }
    }
}

#[test]
fn round_trip_point_matrix_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..1000 {
        let s = Shape::new(2 + k % 4, 2 + k % 7).unwrap();
        let chart = random_chart(&mut rng, s.cols);
        let pt = random_interior_point(&mut rng, chart, s).unwrap();
        let (back, branch) =
            chart_inverse_with_branch(chart, &chart_forward(&pt).unwrap(), TOL).unwrap();
        assert_eq!(branch, InverseBranch::BothColumns);
        assert!(
            back.max_abs_diff(&pt) <= 1e-10,
            "case {k}: {:e}",
            back.max_abs_diff(&pt)
        );
    }
}

#[test]
fn round_trip_matrix_point_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inverted = 0;
    for k in 0..1000 {
        let s = Shape::new(2 + k % 4, 2 + k % 5).unwrap();
        let p = mixture_to_matrix(&random_mixture(&mut rng, s, 2));
        for chart in ChartId::all(s.cols) {
            if let Ok(pt) = chart_inverse(chart, &p, TOL) {
                inverted += 1;
                assert!(in_domain(&pt));
                let q = chart_forward(&pt).unwrap();
                assert!(q.max_abs_diff(&p) <= 1e-10, "case {k} chart {chart}");
            }
        }
    }
    assert!(inverted >= 1000);
}

#[test]
fn rank_two_matrices_are_covered() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..1000 {
        let s = Shape::new(2 + k % 5, 2 + k % 6).unwrap();
        let p = mixture_to_matrix(&random_mixture(&mut rng, s, 2));
        let sel = select_charts(&p, TOL).unwrap();
        assert!(!sel.is_empty(), "case {k} on {s}");
        let listed: Vec<ChartId> = sel.iter().map(|c| c.chart).collect();
        let mut sorted = listed.clone();
        sorted.sort();
        assert_eq!(listed, sorted);
        // the selection is exactly the set of charts whose inverse works
        for chart in ChartId::all(s.cols) {
            assert_eq!(
                chart_inverse(chart, &p, TOL).is_ok(),
                listed.contains(&chart)
            );
        }
    }
}

#[test]
fn interior_points_have_positive_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..1000 {
        let s = Shape::new(2 + k % 5, 3 + k % 6).unwrap();
        let chart = random_chart(&mut rng, s.cols);
        let pt = random_interior_point(&mut rng, chart, s).unwrap();
        let flags = classify(&pt, TOL).unwrap();
        assert!(flags.contains(&PointFlag::Interior));
        let comb =
            column_combination(&chart_forward(&pt).unwrap(), chart.j1, chart.j2, TOL).unwrap();
        assert!(
            comb.coeffs.iter().all(|&(_, t, s)| t > 0.0 && s > 0.0),
            "case {k}"
        );
    }
}

#[test]
fn jacobian_has_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (r, c) in [(2, 2), (2, 3), (3, 3), (3, 5), (4, 4)] {
        let s = Shape::new(r, c).unwrap();
        let dim = chart_dim(s).unwrap();
        for _ in 0..50 {
            let chart = random_chart(&mut rng, c);
            let pt = random_interior_point(&mut rng, chart, s).unwrap();
            let j = jacobian(&pt, DEFAULT_FD_STEP).unwrap();
            assert_eq!((j.nrows(), j.ncols()), (r * c, dim));
            assert_eq!(dense_rank(&j, 1e-6), dim, "{s}");
        }
    }
}

#[test]
fn jacobian_requires_interior() {
    let chart = ChartId::new(0, 1).unwrap();
    let pt = ChartPoint::new(chart, vec![0.4], vec![], vec![0.3], vec![], 0.0).unwrap();
    assert!(matches!(
        jacobian(&pt, DEFAULT_FD_STEP),
        Err(Error::NotInterior)
    ));
}

#[test]
fn inverse_branches() {
    let chart = ChartId::new(0, 1).unwrap();
    let p = ProbabilityMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
    let (pt, branch) = chart_inverse_with_branch(chart, &p, TOL).unwrap();
    assert_eq!(branch, InverseBranch::BothColumns);
    assert_eq!((pt.a(), pt.c(), pt.alpha()), (&[1.0][..], &[0.0][..], 0.5));

    let p = ProbabilityMatrix::from_rows(&[[0.5, 0.0, 0.5], [0.0, 0.0, 0.0]]).unwrap();
    let (pt, branch) = chart_inverse_with_branch(chart, &p, TOL).unwrap();
    assert_eq!(branch, InverseBranch::SecondColumnZero);
    assert_eq!(pt.alpha(), 1.0);
    assert!(pt.c().iter().chain(pt.d()).all(|&v| v == 0.0));
    assert!(chart_forward(&pt).unwrap().max_abs_diff(&p) <= 1e-12);

    let p = ProbabilityMatrix::from_rows(&[[0.0, 0.3, 0.3], [0.0, 0.2, 0.2]]).unwrap();
    let (pt, branch) = chart_inverse_with_branch(chart, &p, TOL).unwrap();
    assert_eq!(branch, InverseBranch::FirstColumnZero);
    assert_eq!(pt.alpha(), 0.0);
    assert!(chart_forward(&pt).unwrap().max_abs_diff(&p) <= 1e-12);
}

#[test]
fn matrices_outside_the_image_are_rejected() {
    let rank3 =
        ProbabilityMatrix::from_rows(&[[0.2, 0.0, 0.0], [0.0, 0.3, 0.0], [0.0, 0.0, 0.5]]).unwrap();
    assert!(matches!(
        select_charts(&rank3, TOL),
        Err(Error::RankTooHigh { rank: 3 })
    ));
    for chart in ChartId::all(3) {
        assert!(matches!(
            chart_inverse(chart, &rank3, TOL),
            Err(Error::NotInChartImage { .. })
        ));
    }
    // column 2 lies outside the cone of columns 1 and 3
    let p = ProbabilityMatrix::from_rows(&[[0.2, 0.2, 0.0], [0.0, 0.2, 0.4]]).unwrap();
    assert!(chart_inverse(ChartId::new(0, 1).unwrap(), &p, TOL).is_err());
    assert!(chart_inverse(ChartId::new(0, 2).unwrap(), &p, TOL).is_ok());
}

#[test]
fn classification_follows_the_boundary_rules() {
    let chart = ChartId::new(0, 2).unwrap();
    let pt = |a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>, al: f64| {
        ChartPoint::new(chart, a, b, c, d, al).unwrap()
    };
    let flags = |p: &ChartPoint| classify(p, TOL).unwrap();
    let base = pt(vec![0.1, 0.1], vec![0.1], vec![0.1, 0.1], vec![0.1], 0.1);
    assert_eq!(
        flags(&base).into_iter().collect::<Vec<_>>(),
        vec![PointFlag::Interior]
    );
    assert!(flags(&pt(
        vec![0.1, 0.1],
        vec![0.1],
        vec![0.1, 0.1],
        vec![0.1],
        0.0
    ))
    .contains(&PointFlag::RankOne));
    assert!(flags(&pt(
        vec![0.1, 0.1],
        vec![0.0],
        vec![0.1, 0.1],
        vec![0.1],
        0.3
    ))
    .contains(&PointFlag::ProportionalColumns));
    assert!(flags(&pt(
        vec![0.0, 0.1],
        vec![0.1],
        vec![0.1, 0.1],
        vec![0.1],
        0.3
    ))
    .contains(&PointFlag::BoundaryOfM));
    let sum_b = flags(&pt(
        vec![0.1, 0.1],
        vec![1.0],
        vec![0.1, 0.1],
        vec![0.1],
        0.3,
    ));
    assert!(
        sum_b.contains(&PointFlag::BoundaryOfM) && sum_b.contains(&PointFlag::ProportionalColumns)
    );
    let outside = ChartPoint::new(
        chart,
        vec![0.7, 0.7],
        vec![0.1],
        vec![0.1, 0.1],
        vec![0.1],
        0.3,
    )
    .unwrap();
    assert!(!in_domain(&outside));
    assert!(matches!(classify(&outside, TOL), Err(Error::OutOfDomain)));
}

#[test]
fn point_json_uses_one_based_columns() {
    let chart = ChartId::new(0, 2).unwrap();
    let pt = ChartPoint::new(chart, vec![0.5], vec![0.25], vec![0.5], vec![0.5], 0.5).unwrap();
    let text = serde_json::to_string(&pt).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["j1"], 1);
    assert_eq!(v["j2"], 3);
    assert_eq!(v["b"][0]["col"], 2);
    let back: ChartPoint = serde_json::from_str(&text).unwrap();
    assert_eq!(back, pt);
    assert_eq!(chart.to_string(), "1,3");
    assert_eq!("1,3".parse::<ChartId>().unwrap(), chart);
}
