//! Seeded generators for random probability vectors, mixtures and chart
//! points. Used by the fuzz suites, the multistart optimizer and tests.

use rand::Rng;

use crate::charts::{chart_dim, ChartId, ChartPoint};
use crate::error::Result;
use crate::factor::MixtureRepresentation;
use crate::matrix::Shape;

/// Uniform draw from the probability simplex of dimension `len`, with every
/// coordinate at least `floor / len` (translated Dirichlet(1)).
pub fn simplex_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, floor: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = v.iter().sum();
    let spread = 1.0 - floor;
    v.iter_mut()
        .for_each(|x| *x = floor / len as f64 + spread * *x / sum);
    v
}

/// Random `k`-component mixture with strictly positive factors.
pub fn random_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    shape: Shape,
    k: usize,
) -> MixtureRepresentation {
    let weights = simplex_vector(rng, k, 0.1);
    let cols = (0..k)
        .map(|_| simplex_vector(rng, shape.rows, 0.0))
        .collect();
    let rows = (0..k)
        .map(|_| simplex_vector(rng, shape.cols, 0.0))
        .collect();
    MixtureRepresentation::new(weights, cols, rows).expect("simplex draws")
}

/// Chart point with every coordinate and slack bounded away from zero, and
/// `alpha` in `[0.05, 0.95]`.
pub fn random_interior_point<R: Rng + ?Sized>(
    rng: &mut R,
    chart: ChartId,
    shape: Shape,
) -> Result<ChartPoint> {
    chart_dim(shape)?;
    let mut block = |len: usize| {
        let v = simplex_vector(rng, len + 1, 0.2);
        v[..len].to_vec()
    };
    let a = block(shape.rows - 1);
    let b = block(shape.cols - 2);
    let c = block(shape.rows - 1);
    let d = block(shape.cols - 2);
    let alpha = 0.05 + 0.9 * rng.random::<f64>();
    ChartPoint::new(chart, a, b, c, d, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{classify, in_domain, is_interior};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_draws_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in 1..8 {
            let v = simplex_vector(&mut rng, len, 0.2);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(v.iter().all(|&x| x >= 0.2 / len as f64 - 1e-15));
        }
    }

    #[test]
    fn interior_points_classify_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = Shape::new(3, 4).unwrap();
        for chart in ChartId::all(4) {
            let p = random_interior_point(&mut rng, chart, shape).unwrap();
            assert!(in_domain(&p));
            assert!(is_interior(&classify(&p, 1e-9).unwrap()));
        }
    }
}
