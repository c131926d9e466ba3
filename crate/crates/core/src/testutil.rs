//! Shared generators for unit tests.

use proptest::prelude::*;

/// Random metric as the shortest-path closure of random positive edge weights.
pub fn arb_metric() -> impl Strategy<Value = Vec<Vec<f64>>> {
    arb_metric_sized(2, 8)
}

pub fn arb_metric_sized(lo: usize, hi: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (lo..hi).prop_flat_map(|n| {
        proptest::collection::vec(1.0f64..500.0, n * n).prop_map(move |w| {
            let mut d = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        d[i][j] = w[i.min(j) * n + i.max(j)];
                    }
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
            d
        })
    })
}

