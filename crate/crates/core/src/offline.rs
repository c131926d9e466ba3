//! Offline fulfillment: the optimal cost `C(q, d)` of serving a realised
//! demand vector from fixed inventory, plus the hierarchical heuristic and the
//! bounds built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{CostParams, MetricSpace, Tree};
use crate::partition::Wshp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shipment {
    pub from: usize,
    pub to: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FulfillmentPlan {
    pub shipments: Vec<Shipment>,
    /// Inventory left unused.
    pub overage: f64,
    /// Demand left unserved.
    pub underage: f64,
    pub shipping_cost: f64,
    pub total_cost: f64,
}

fn check_vectors(n: usize, q: &[f64], d: &[f64]) -> Result<()> {
    if q.len() != n || d.len() != n {
        return Err(Error::Structure(format!(
            "expected vectors of length {n}, got q: {}, d: {}",
            q.len(),
            d.len()
        )));
    }
    for (name, v) in [("inventory", q), ("demand", d)] {
        if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && x.is_finite())) {
            return Err(Error::Input(format!("{name} at location {i} is {x}, must be finite and >= 0")));
        }
    }
    Ok(())
}

fn zero_threshold(q: &[f64], d: &[f64]) -> f64 {
    let scale = q.iter().chain(d).fold(1.0f64, |m, x| m.max(x.abs()));
    1e-12 * scale
}

/// Minimum-cost shipment of `min(q_X, d_X)` units (successive shortest paths
/// with potentials on the dense bipartite graph). Returns the flow matrix.
fn transport(m: &MetricSpace, q: &[f64], d: &[f64], eps: f64) -> Vec<Vec<f64>> {
    let n = q.len();
    let mut flow = vec![vec![0.0; n]; n];
    let mut sup = q.to_vec();
    let mut dem = d.to_vec();
    // serving demand where it sits is always part of some optimum
    for i in 0..n {
        let a = sup[i].min(dem[i]);
        flow[i][i] = a;
        sup[i] -= a;
        dem[i] -= a;
    }
    // nodes: 0..n sources, n..2n sinks, 2n = s, 2n+1 = t
    let (s, t) = (2 * n, 2 * n + 1);
    let v = 2 * n + 2;
    let mut pot = vec![0.0f64; v];
    let mut dist = vec![0.0f64; v];
    let mut prev = vec![usize::MAX; v];
    let mut done = vec![false; v];
    loop {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        dist[s] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..v {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    u = x;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let mut relax = |to: usize, cost: f64, dist: &mut Vec<f64>| {
                let nd = dist[u] + (cost + pot[u] - pot[to]).max(0.0);
                if nd < dist[to] {
                    dist[to] = nd;
                    prev[to] = u;
                }
            };
            if u == s {
                for i in 0..n {
                    if sup[i] > eps {
                        relax(i, 0.0, &mut dist);
                    }
                }
            } else if u < n {
                for j in 0..n {
                    relax(n + j, m.d(u, j), &mut dist);
                }
            } else if u < 2 * n {
                let j = u - n;
                for i in 0..n {
                    if flow[i][j] > eps {
                        relax(i, -m.d(i, j), &mut dist);
                    }
                }
                if dem[j] > eps {
                    relax(t, 0.0, &mut dist);
                }
            }
        }
        if !dist[t].is_finite() {
            break;
        }
        for x in 0..v {
            pot[x] += dist[x].min(dist[t]);
        }
        // bottleneck along the path
        let mut amount = f64::INFINITY;
        let mut x = t;
        while x != s {
            let p = prev[x];
            if x == t {
                amount = amount.min(dem[p - n]);
            } else if p == s {
                amount = amount.min(sup[x]);
            } else if p >= n {
                amount = amount.min(flow[x][p - n]);
            }
            x = p;
        }
        let mut x = t;
        while x != s {
            let p = prev[x];
            if x == t {
                dem[p - n] -= amount;
            } else if p == s {
                sup[x] -= amount;
            } else if p < n {
                flow[p][x - n] += amount;
            } else {
                flow[x][p - n] -= amount;
            }
            x = p;
        }
    }
    flow
}

fn plan_from_flow(m: &MetricSpace, p: &CostParams, q: &[f64], d: &[f64], flow: &[Vec<f64>], eps: f64) -> FulfillmentPlan {
    let mut shipments = Vec::new();
    let mut shipped = 0.0;
    let mut shipping = 0.0;
    for (i, row) in flow.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a > eps {
                shipments.push(Shipment { from: i, to: j, amount: a });
                shipped += a;
                shipping += a * m.d(i, j);
            }
        }
    }
    let qx: f64 = q.iter().sum();
    let dx: f64 = d.iter().sum();
    let overage = (qx - shipped).max(0.0);
    let underage = (dx - shipped).max(0.0);
    FulfillmentPlan {
        shipments,
        overage,
        underage,
        shipping_cost: shipping,
        total_cost: p.h * overage + p.b * underage + shipping,
    }
}

/// Evaluates `C(q, d)` repeatedly on one metric, truncated once at `b + h`.
///
/// Truncation does not change the optimal value: an edge longer than `b + h`
/// is never worth using. Reported shipping costs are under the truncated
/// metric, so the total equals `C(q, d)` on the original one.
#[derive(Debug, Clone)]
pub struct OfflineEvaluator {
    metric: MetricSpace,
    params: CostParams,
}

impl OfflineEvaluator {
    pub fn new(m: &MetricSpace, p: &CostParams) -> Self {
        Self { metric: m.truncate(p), params: *p }
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn plan(&self, q: &[f64], d: &[f64]) -> Result<FulfillmentPlan> {
        check_vectors(self.metric.n(), q, d)?;
        let eps = zero_threshold(q, d);
        let flow = transport(&self.metric, q, d, eps);
        Ok(plan_from_flow(&self.metric, &self.params, q, d, &flow, eps))
    }

    pub fn cost(&self, q: &[f64], d: &[f64]) -> Result<f64> {
        Ok(self.plan(q, d)?.total_cost)
    }

    /// Cost together with a subgradient with respect to `q`.
    ///
    /// An extra unit at `i` either stays unused (`+h`) or starts an
    /// augmenting path in the residual graph with edge costs `ℓ − b − h`,
    /// ending at a location with unmet demand or at a source whose shipment
    /// it displaces. The subgradient is `h` plus the cheapest such path
    /// (or `h` alone when every path has nonnegative cost).
    pub fn cost_and_subgradient(&self, q: &[f64], d: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_vectors(self.metric.n(), q, d)?;
        let n = q.len();
        let eps = zero_threshold(q, d);
        let flow = transport(&self.metric, q, d, eps);
        let plan = plan_from_flow(&self.metric, &self.params, q, d, &flow, eps);
        let bh = self.params.b + self.params.h;
        let c = |i: usize, j: usize| self.metric.d(i, j) - bh;
        let served: Vec<f64> = (0..n).map(|j| (0..n).map(|i| flow[i][j]).sum()).collect();
        // f_src[i], f_snk[j]: cheapest path cost to a valid end point
        let mut f_src = vec![0.0f64; n];
        let mut f_snk: Vec<f64> =
            (0..n).map(|j| if d[j] - served[j] > eps { 0.0 } else { f64::INFINITY }).collect();
        for _ in 0..2 * n + 2 {
            let mut changed = false;
            for j in 0..n {
                for i in 0..n {
                    if flow[i][j] > eps {
                        let cand = -c(i, j) + f_src[i];
                        if cand < f_snk[j] - 1e-12 {
                            f_snk[j] = cand;
                            changed = true;
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let cand = c(i, j) + f_snk[j];
                    if cand < f_src[i] - 1e-12 {
                        f_src[i] = cand;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let grad = f_src.iter().map(|f| self.params.h + f.min(0.0)).collect();
        Ok((plan.total_cost, grad))
    }
}

/// Optimal fulfillment plan and cost `C(q, d)`.
pub fn offline_cost(m: &MetricSpace, p: &CostParams, q: &[f64], d: &[f64]) -> Result<FulfillmentPlan> {
    OfflineEvaluator::new(m, p).plan(q, d)
}

/// Pure shipping cost of optimally matching inventory `u` to demand `w`.
pub fn matching_cost(m: &MetricSpace, u: &[f64], w: &[f64]) -> Result<f64> {
    check_vectors(m.n(), u, w)?;
    let eps = zero_threshold(u, w);
    let flow = transport(m, u, w, eps);
    Ok(flow
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, a)| a * m.d(i, j)))
        .sum())
}

/// Serves demand in place, then inside ever larger clusters of the hierarchy.
/// Within a cluster, suppliers and demand points are matched greedily in
/// index order, which moves `min(remaining q_C, remaining d_C)` units.
pub fn hierarchical_fulfillment(
    m: &MetricSpace,
    h: &Wshp,
    p: &CostParams,
    q: &[f64],
    d: &[f64],
) -> Result<FulfillmentPlan> {
    check_vectors(m.n(), q, d)?;
    if h.n != m.n() {
        return Err(Error::Structure("hierarchy and metric sizes differ".into()));
    }
    let eps = zero_threshold(q, d);
    let n = q.len();
    let mut sup = q.to_vec();
    let mut dem = d.to_vec();
    let mut flow = vec![vec![0.0; n]; n];
    for i in 0..n {
        let a = sup[i].min(dem[i]);
        flow[i][i] += a;
        sup[i] -= a;
        dem[i] -= a;
    }
    for r in 1..=h.depth() {
        for c in h.level_clusters(r) {
            let members = &h.clusters[c].members;
            let mut k = 0;
            for &i in members {
                while dem[i] > eps && k < members.len() {
                    let j = members[k];
                    if sup[j] <= eps {
                        k += 1;
                        continue;
                    }
                    let a = sup[j].min(dem[i]);
                    flow[j][i] += a;
                    sup[j] -= a;
                    dem[i] -= a;
                }
            }
        }
    }
    Ok(plan_from_flow(m, p, q, d, &flow, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    /// Set when some `q_i < μ_i`; the bound is only guaranteed for `q ≥ μ`.
    pub below_mean: bool,
}

/// Hierarchical upper bound on `C(q, d)`: overage and underage at the top,
/// `diam_p(C)·(d_C − q_C)⁺` for every cluster below the top, and
/// `(diam(X)/n)·Σ(d_i − q_i)⁺` for moves inside level-1 clusters.
pub fn cost_upper_bound_ch(h: &Wshp, p: &CostParams, q: &[f64], d: &[f64], mu: Option<&[f64]>) -> Result<UpperBound> {
    check_vectors(h.n, q, d)?;
    let qx: f64 = q.iter().sum();
    let dx: f64 = d.iter().sum();
    let mut value = p.h * (qx - dx).max(0.0) + p.b * (dx - qx).max(0.0);
    for r in 1..h.depth() {
        for c in h.level_clusters(r) {
            let members = &h.clusters[c].members;
            let excess: f64 = members.iter().map(|&i| d[i] - q[i]).sum();
            if excess > 0.0 {
                value += h.parent_diameter(c).unwrap_or(0.0) * excess;
            }
        }
    }
    let top_diam = h.diameters[h.top()];
    value += top_diam / h.n as f64 * q.iter().zip(d).map(|(a, b)| (b - a).max(0.0)).sum::<f64>();
    let below_mean = mu.is_some_and(|mu| q.iter().zip(mu).any(|(a, m)| a < m));
    Ok(UpperBound { value, below_mean })
}

/// Closed-form `C(q, d)` on a tree metric, valid when `b + h` is at least the
/// tree diameter (no truncation):
/// `h(q_X−d_X)⁺ + b(d_X−q_X)⁺ + 2c Σ_r λ^r (Σ_{v∈L_r}(d_v−q_v)⁺ − Σ_{w∈L_{r+1}}(d_w−q_w)⁺)`.
pub fn tree_closed_form_cost(tree: &Tree, p: &CostParams, q: &[f64], d: &[f64]) -> Result<f64> {
    check_vectors(tree.n_leaves(), q, d)?;
    let k = tree.spec.levels;
    let (c, lambda) = (tree.spec.c, tree.spec.lambda);
    // two leaves are farthest apart when their common ancestor is the highest branching node
    let diam = tree
        .nodes
        .iter()
        .filter(|v| v.children.len() > 1)
        .map(|v| 2.0 * c * lambda.powi(v.level as i32 - 1))
        .fold(0.0, f64::max);
    if p.b + p.h < diam * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "closed form needs b + h >= tree diameter ({} < {diam})",
            p.b + p.h
        )));
    }
    let excess = |v: usize| -> f64 {
        tree.nodes[v].leaves.iter().map(|&i| d[i] - q[i]).sum::<f64>().max(0.0)
    };
    let level_sum = |r: usize| -> f64 { tree.level(r).iter().map(|&v| excess(v)).sum() };
    let qx: f64 = q.iter().sum();
    let dx: f64 = d.iter().sum();
    let mut total = p.h * (qx - dx).max(0.0) + p.b * (dx - qx).max(0.0);
    for r in 1..k {
        total += 2.0 * c * lambda.powi(r as i32) * (level_sum(r) - level_sum(r + 1));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearProgram, Relation};
    use crate::metric::{gen_tree, tree_metric, TreeMetricSpec};
    use crate::partition::{wshp_general, wshp_uniform};
    use crate::testutil::arb_metric_sized;
    use proptest::prelude::*;

    fn params(b: f64, h: f64) -> CostParams {
        CostParams::new(b, h).unwrap()
    }

    /// The cost LP written out in full and handed to the dense simplex.
    fn lp_cost(m: &MetricSpace, p: &CostParams, q: &[f64], d: &[f64]) -> f64 {
        let n = q.len();
        let mut obj = Vec::new();
        for i in 0..n {
            for j in 0..n {
                obj.push(m.d(i, j) - p.b - p.h);
            }
        }
        let mut lp = LinearProgram::new(obj);
        for i in 0..n {
            lp.add_sparse(&(0..n).map(|j| (i * n + j, 1.0)).collect::<Vec<_>>(), Relation::Le, q[i]);
        }
        for j in 0..n {
            lp.add_sparse(&(0..n).map(|i| (i * n + j, 1.0)).collect::<Vec<_>>(), Relation::Le, d[j]);
        }
        let s = lp.solve().unwrap();
        s.objective + p.h * q.iter().sum::<f64>() + p.b * d.iter().sum::<f64>()
    }

    #[test]
    fn equal_vectors_cost_nothing() {
        let m = MetricSpace::uniform(3, 7.0).unwrap();
        let q = [1.0, 2.0, 3.0];
        assert_eq!(offline_cost(&m, &params(10.0, 1.0), &q, &q).unwrap().total_cost, 0.0);
    }

    #[test]
    fn single_location() {
        let m = MetricSpace::new(vec![vec![0.0]]).unwrap();
        let p = params(100.0, 5.0);
        assert_eq!(offline_cost(&m, &p, &[3.0], &[1.0]).unwrap().total_cost, 10.0);
        assert_eq!(offline_cost(&m, &p, &[1.0], &[3.0]).unwrap().total_cost, 200.0);
    }

    #[test]
    fn two_location_reference() {
        let m = MetricSpace::new(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let plan = offline_cost(&m, &params(100.0, 5.0), &[2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(plan.total_cost, 8.0);
        assert_eq!(plan.shipments, vec![Shipment { from: 0, to: 1, amount: 1.0 }]);
        assert_eq!(plan.overage, 1.0);
    }

    #[test]
    fn far_edges_are_never_worth_it() {
        let m = MetricSpace::new(vec![vec![0.0, 500.0], vec![500.0, 0.0]]).unwrap();
        let p = params(100.0, 5.0);
        let plan = offline_cost(&m, &p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(plan.total_cost, 105.0);
    }

    #[test]
    fn negative_input_rejected() {
        let m = MetricSpace::uniform(2, 1.0).unwrap();
        assert!(matches!(offline_cost(&m, &params(2.0, 1.0), &[-1.0, 0.0], &[0.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn hierarchical_uniform_trace() {
        let m = MetricSpace::uniform(2, 6.0).unwrap();
        let h = wshp_uniform(&m, 2.0, 3.0).unwrap();
        let plan = hierarchical_fulfillment(&m, &h, &params(100.0, 5.0), &[2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(plan.shipping_cost, 6.0);
        assert_eq!(plan.shipments, vec![Shipment { from: 0, to: 1, amount: 1.0 }]);
    }

    #[test]
    fn ch_examples() {
        let m = MetricSpace::uniform(2, 1.0).unwrap();
        let h = wshp_uniform(&m, 2.0, 3.0).unwrap();
        let p = params(100.0, 5.0);
        let ub = cost_upper_bound_ch(&h, &p, &[1.0, 1.0], &[2.0, 0.0], None).unwrap();
        assert_eq!(ub.value, 1.5);
        let ub = cost_upper_bound_ch(&h, &p, &[3.0, 2.0], &[1.0, 1.0], Some(&[2.0, 2.0])).unwrap();
        assert_eq!(ub.value, 15.0);
        assert!(!ub.below_mean);
        let ub = cost_upper_bound_ch(&h, &p, &[1.0, 2.0], &[1.0, 1.0], Some(&[2.0, 2.0])).unwrap();
        assert!(ub.below_mean);
    }

    #[test]
    fn tree_closed_form_reference() {
        let (m, t) = tree_metric(&TreeMetricSpec::uniform(2, &[2], 1.0, 2.0)).unwrap();
        let p = params(100.0, 5.0);
        let (q, d) = ([2.0, 0.0], [0.0, 1.0]);
        assert_eq!(tree_closed_form_cost(&t, &p, &q, &d).unwrap(), 9.0);
        assert_eq!(offline_cost(&m, &p, &q, &d).unwrap().total_cost, 9.0);
        assert_eq!(tree_closed_form_cost(&t, &p, &q, &q).unwrap(), 0.0);
    }

    #[test]
    fn tree_closed_form_needs_large_b_plus_h() {
        let (_, t) = tree_metric(&TreeMetricSpec::uniform(3, &[2, 2], 10.0, 2.0)).unwrap();
        assert!(tree_closed_form_cost(&t, &params(50.0, 5.0), &[1.0; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn subgradient_single_location() {
        let m = MetricSpace::new(vec![vec![0.0]]).unwrap();
        let e = OfflineEvaluator::new(&m, &params(100.0, 5.0));
        assert_eq!(e.cost_and_subgradient(&[1.0], &[3.0]).unwrap().1, vec![-100.0]);
        assert_eq!(e.cost_and_subgradient(&[4.0], &[3.0]).unwrap().1, vec![5.0]);
    }

    fn vecs(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (proptest::collection::vec(0.0f64..50.0, n), proptest::collection::vec(0.0f64..50.0, n))
    }

    fn metric_and_vectors(lo: usize, hi: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
        arb_metric_sized(lo, hi).prop_flat_map(|rows| {
            let n = rows.len();
            (Just(rows), vecs(n)).prop_map(|(r, (q, d))| (r, q, d))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn matches_lp_oracle((rows, q, d) in metric_and_vectors(1, 7), b in 5.0f64..400.0, h in 0.5f64..5.0) {
            let m = MetricSpace::new(rows).unwrap();
            let p = params(b, h);
            let plan = offline_cost(&m, &p, &q, &d).unwrap();
            let oracle = lp_cost(&m.truncate(&p), &p, &q, &d);
            prop_assert!((plan.total_cost - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
            // normal form: never both leftover inventory and unmet demand
            prop_assert!(plan.overage <= 1e-9 || plan.underage <= 1e-9);
            for i in 0..m.n() {
                let out: f64 = plan.shipments.iter().filter(|s| s.from == i).map(|s| s.amount).sum();
                let inn: f64 = plan.shipments.iter().filter(|s| s.to == i).map(|s| s.amount).sum();
                prop_assert!(out <= q[i] + 1e-9 && inn <= d[i] + 1e-9);
            }
        }

        #[test]
        fn matching_cost_triangle((rows, u, v) in metric_and_vectors(2, 7), w0 in proptest::collection::vec(0.0f64..50.0, 7)) {
            let m = MetricSpace::new(rows).unwrap();
            let n = m.n();
            let mut w = w0[..n].to_vec();
            // rescale so all three vectors share one total
            let target: f64 = u.iter().sum();
            let scale = |x: &mut Vec<f64>| {
                let s: f64 = x.iter().sum();
                if s > 0.0 { x.iter_mut().for_each(|a| *a *= target / s); }
            };
            let mut v = v;
            scale(&mut v);
            scale(&mut w);
            prop_assume!(target > 0.0 && (v.iter().sum::<f64>() - target).abs() < 1e-9 && (w.iter().sum::<f64>() - target).abs() < 1e-9);
            let uw = matching_cost(&m, &u, &w).unwrap();
            let uv = matching_cost(&m, &u, &v).unwrap();
            let vw = matching_cost(&m, &v, &w).unwrap();
            prop_assert!(uw <= uv + vw + 1e-7 * (1.0 + uw));
        }

        #[test]
        fn ch_depends_only_on_difference((q, d) in vecs(5), shift in proptest::collection::vec(0.0f64..20.0, 5)) {
            let m = MetricSpace::uniform(5, 3.0).unwrap();
            let h = wshp_uniform(&m, 2.0, 3.0).unwrap();
            let p = params(10.0, 1.0);
            let a = cost_upper_bound_ch(&h, &p, &q, &d, None).unwrap().value;
            let q2: Vec<f64> = q.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let d2: Vec<f64> = d.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let b = cost_upper_bound_ch(&h, &p, &q2, &d2, None).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn hierarchical_between_optimum_and_bound((rows, q, d) in metric_and_vectors(2, 10), b in 5.0f64..400.0, h in 0.5f64..5.0) {
            let m = MetricSpace::new(rows).unwrap();
            let w = wshp_general(&m, None).unwrap();
            let p = params(b, h);
            let opt = offline_cost(&m, &p, &q, &d).unwrap().total_cost;
            let heur = hierarchical_fulfillment(&m, &w, &p, &q, &d).unwrap().total_cost;
            let ub = cost_upper_bound_ch(&w, &p, &q, &d, None).unwrap().value;
            prop_assert!(opt <= heur + 1e-9 * heur.max(1.0));
            prop_assert!(heur <= ub + 1e-9 * ub.max(1.0));
        }

        #[test]
        fn tree_closed_form_matches_transport(levels in 2usize..=4, seed in any::<u64>(), (q, d) in vecs(40)) {
            let spec = gen_tree(levels, 1, 3, 1.0, 2.0, seed).unwrap();
            let (m, t) = tree_metric(&spec).unwrap();
            let n = m.n();
            let p = params(2.0 * m.max_distance() + 1.0, 1.0);
            let closed = tree_closed_form_cost(&t, &p, &q[..n], &d[..n]).unwrap();
            let flow = offline_cost(&m, &p, &q[..n], &d[..n]).unwrap().total_cost;
            prop_assert!((closed - flow).abs() <= 1e-9 * flow.abs().max(1.0));
        }

        #[test]
        fn subgradient_inequality((rows, q, d) in metric_and_vectors(1, 6), q2 in proptest::collection::vec(0.0f64..50.0, 6)) {
            let m = MetricSpace::new(rows).unwrap();
            let e = OfflineEvaluator::new(&m, &params(40.0, 2.0));
            let (c1, g) = e.cost_and_subgradient(&q, &d).unwrap();
            let q2 = &q2[..m.n()];
            let c2 = e.cost(q2, &d).unwrap();
            let lin: f64 = c1 + g.iter().zip(q2.iter().zip(&q)).map(|(gi, (a, b))| gi * (a - b)).sum::<f64>();
            prop_assert!(c2 >= lin - 1e-7 * c2.abs().max(1.0));
        }
    }
}
