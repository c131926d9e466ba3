//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use drnm::harness::balanced_grid_gamma;
use drnm::metric::{euclidean_metric, gen_euclidean, gen_tree, tree_metric, MetricSpace, Tree};
use drnm::partition::{wshp_euclidean, wshp_general, wshp_tree, wshp_uniform, Wshp};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Random rational in `[0, hi]` with denominator at most `max_den`.
pub fn small_rational(rng: &mut ChaCha8Rng, hi: i64, max_den: i64) -> BigRational {
    let den = rng.random_range(1..=max_den);
    rat(rng.random_range(0..=hi * den), den)
}

/// Random tree with at least two leaves.
pub fn random_tree(rng: &mut ChaCha8Rng, max_levels: usize) -> (MetricSpace, Tree) {
    loop {
        let k = rng.random_range(2..=max_levels);
        let c = rng.random_range(0.5..20.0);
        let lambda = rng.random_range(1.1..4.0);
        let spec = gen_tree(k, 1, 3, c, lambda, rng.random()).unwrap();
        let (m, t) = tree_metric(&spec).unwrap();
        if m.n() >= 2 {
            return (m, t);
        }
    }
}

/// Shortest-path closure of random edge weights.
pub fn random_general_metric(rng: &mut ChaCha8Rng, n: usize) -> MetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.random_range(1.0..100.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    MetricSpace::new(d).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Uniform,
    Euclidean,
    General,
    Tree,
}

pub const SHAPES: [Shape; 4] = [Shape::Uniform, Shape::Euclidean, Shape::General, Shape::Tree];

/// A metric with one of the hierarchy constructions on it. Euclidean grids
/// use the balanced-policy γ.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: Shape, max_n: usize) -> (MetricSpace, Wshp) {
    match shape {
        Shape::Uniform => {
            let n = rng.random_range(2..=max_n);
            let m = MetricSpace::uniform(n, rng.random_range(1.0..100.0)).unwrap();
            let h = wshp_uniform(&m, 2.0, 3.0).unwrap();
            (m, h)
        }
        Shape::Euclidean => {
            let n = rng.random_range(2..=max_n);
            let pts = gen_euclidean(n, 2, 70.0, rng.random());
            let m = euclidean_metric(&pts).unwrap();
            let h = wshp_euclidean(&pts, 3.0, balanced_grid_gamma(n, 3.0)).unwrap();
            (m, h)
        }
        Shape::General => {
            let n = rng.random_range(2..=max_n);
            let m = random_general_metric(rng, n);
            let h = wshp_general(&m, None).unwrap();
            (m, h)
        }
        Shape::Tree => loop {
            let (m, t) = random_tree(rng, 4);
            if m.n() <= max_n {
                let h = wshp_tree(&t, &m).unwrap();
                return (m, h);
            }
        },
    }
}
