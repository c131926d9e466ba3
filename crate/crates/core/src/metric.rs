//! Finite metric spaces and the instance families used throughout the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for metric-axiom checks (Euclidean roundoff).
pub const METRIC_TOL: f64 = 1e-9;

/// Per-unit underage and overage costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub b: f64,
    pub h: f64,
}

impl CostParams {
    pub fn new(b: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && b.is_finite()) || h <= 0.0 {
            return Err(Error::Parameter(format!("overage cost h must be positive, got {h}")));
        }
        if b < h {
            return Err(Error::Parameter(format!("underage cost b={b} must be at least h={h}")));
        }
        Ok(Self { b, h })
    }
}

/// A single violated metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricViolation {
    NonFinite { i: usize, j: usize },
    Diagonal { i: usize, value: f64 },
    Asymmetric { i: usize, j: usize },
    NonPositive { i: usize, j: usize },
    /// `dist[i][j] > dist[i][via] + dist[via][j]`
    Triangle { i: usize, j: usize, via: usize },
}

/// Checks every metric axiom on a raw matrix. Only structural problems are errors;
/// axiom violations are returned as a list.
pub fn validate_metric(dist: &[Vec<f64>]) -> Result<Vec<MetricViolation>> {
    let n = dist.len();
    if let Some((row, r)) = dist.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Structure(format!(
            "distance matrix is not square: row {row} has {} entries, expected {n}",
            r.len()
        )));
    }
    let mut out = Vec::new();
    let scale = dist
        .iter()
        .flatten()
        .filter(|x| x.is_finite())
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = METRIC_TOL * scale;
    for i in 0..n {
        for j in 0..n {
            if !dist[i][j].is_finite() {
                out.push(MetricViolation::NonFinite { i, j });
            }
        }
    }
    if !out.is_empty() {
        return Ok(out);
    }
    for i in 0..n {
        if dist[i][i].abs() > tol {
            out.push(MetricViolation::Diagonal { i, value: dist[i][i] });
        }
        for j in i + 1..n {
            if (dist[i][j] - dist[j][i]).abs() > tol {
                out.push(MetricViolation::Asymmetric { i, j });
            }
            if dist[i][j] <= 0.0 || dist[j][i] <= 0.0 {
                out.push(MetricViolation::NonPositive { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                if k != i && k != j && dist[i][j] > dist[i][k] + dist[k][j] + tol {
                    out.push(MetricViolation::Triangle { i, j, via: k });
                }
            }
        }
    }
    Ok(out)
}

/// `n` locations with a symmetric distance matrix satisfying the triangle inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    n: usize,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<RawMatrix> for MetricSpace {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        if raw.dist.len() != raw.n {
            return Err(Error::Structure(format!(
                "declared n={} but matrix has {} rows",
                raw.n,
                raw.dist.len()
            )));
        }
        MetricSpace::new(raw.dist)
    }
}

impl From<MetricSpace> for RawMatrix {
    fn from(m: MetricSpace) -> Self {
        RawMatrix { n: m.n, dist: m.to_rows() }
    }
}

impl MetricSpace {
    /// Builds a metric from a full matrix, rejecting anything that fails [`validate_metric`].
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let violations = validate_metric(&dist)?;
        if !violations.is_empty() {
            return Err(Error::Input(format!("not a metric: {violations:?}")));
        }
        if dist.is_empty() {
            return Err(Error::Input("metric needs at least one location".into()));
        }
        Ok(Self::from_rows_unchecked(dist))
    }

    fn from_rows_unchecked(dist: Vec<Vec<f64>>) -> Self {
        let n = dist.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                // symmetrize roundoff so downstream code can rely on d(i,j) == d(j,i)
                flat.push(if i == j { 0.0 } else { 0.5 * (x + dist[j][i]) });
            }
        }
        Self { n, dist: flat }
    }

    /// Uniform metric with every off-diagonal distance equal to `ell`.
    pub fn uniform(n: usize, ell: f64) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { ell }).collect())
            .collect();
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).filter(move |&j| j != i).map(move |j| self.d(i, j)))
    }

    /// Largest distance; zero for a single point.
    pub fn max_distance(&self) -> f64 {
        self.off_diagonal().fold(0.0, f64::max)
    }

    /// Smallest off-diagonal distance; `None` for a single point.
    pub fn min_distance(&self) -> Option<f64> {
        self.off_diagonal().reduce(f64::min)
    }

    /// Ratio of largest to smallest off-diagonal distance (1 for n < 2).
    pub fn aspect_ratio(&self) -> f64 {
        match self.min_distance() {
            Some(lo) => self.max_distance() / lo,
            None => 1.0,
        }
    }

    pub fn diameter(&self, set: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                best = best.max(self.d(i, j));
            }
        }
        best
    }

    /// `min_{i∈s, j∈t} d(i,j)`; infinite when either set is empty.
    pub fn set_distance(&self, s: &[usize], t: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &i in s {
            for &j in t {
                best = best.min(self.d(i, j));
            }
        }
        best
    }

    pub fn is_uniform(&self) -> bool {
        match self.min_distance() {
            Some(lo) => self.max_distance() - lo <= METRIC_TOL * self.max_distance(),
            None => true,
        }
    }

    /// Caps every distance at `b + h`. Shipping farther than that never beats
    /// paying overage at the source and underage at the destination, so the
    /// fulfillment LP value is unchanged.
    pub fn truncate(&self, p: &CostParams) -> MetricSpace {
        let cap = p.b + p.h;
        MetricSpace { n: self.n, dist: self.dist.iter().map(|&x| x.min(cap)).collect() }
    }
}

/// Pairwise Euclidean distances; points must be distinct and share one dimension.
pub fn euclidean_metric(points: &[Vec<f64>]) -> Result<MetricSpace> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Input("no points".into()));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::Structure("points must share one positive dimension".into()));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d == 0.0 {
                return Err(Error::Input(format!("points {i} and {j} coincide")));
            }
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    MetricSpace::new(rows)
}

/// Branching of one tree level: either every node has the same number of
/// children, or the count is listed node by node (left to right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelBranching {
    Uniform(usize),
    PerNode(Vec<usize>),
}

/// Rooted tree whose leaves form the metric.
///
/// Levels are numbered from the leaves (1) to the root (`K`). `children[0]`
/// describes the root, `children[K-2]` the nodes just above the leaves. The
/// edge from level `r` to `r+1` weighs `c·λ` for `r = 1` and `c(λ^r − λ^{r−1})`
/// above, so two leaves whose lowest common ancestor sits at level `r` are
/// `2cλ^{r−1}` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeMetricSpec {
    #[serde(rename = "K")]
    pub levels: usize,
    pub children: Vec<LevelBranching>,
    pub c: f64,
    pub lambda: f64,
}

impl TreeMetricSpec {
    pub fn uniform(levels: usize, branching: &[usize], c: f64, lambda: f64) -> Self {
        Self {
            levels,
            children: branching.iter().map(|&k| LevelBranching::Uniform(k)).collect(),
            c,
            lambda,
        }
    }

    /// Weight of the edge joining a level-`r` node to its parent.
    pub fn edge_weight(&self, r: usize) -> f64 {
        if r == 1 {
            self.c * self.lambda
        } else {
            self.c * (self.lambda.powi(r as i32) - self.lambda.powi(r as i32 - 1))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Leaf (location) indices below this node, ascending.
    pub leaves: Vec<usize>,
}

/// Tree structure retained alongside a tree metric, including internal nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub spec: TreeMetricSpec,
    pub nodes: Vec<TreeNode>,
    /// `level_sets[r-1]` holds the node ids of level `r`.
    pub level_sets: Vec<Vec<usize>>,
    /// Node id of each leaf, indexed by location.
    pub leaf_nodes: Vec<usize>,
}

impl Tree {
    pub fn root(&self) -> usize {
        self.level_sets[self.spec.levels - 1][0]
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    /// Nodes of level `r` (1-based).
    pub fn level(&self, r: usize) -> &[usize] {
        &self.level_sets[r - 1]
    }
}

/// Builds the leaf metric of a weighted rooted tree together with the tree itself.
pub fn tree_metric(spec: &TreeMetricSpec) -> Result<(MetricSpace, Tree)> {
    let k = spec.levels;
    if k < 2 {
        return Err(Error::Parameter(format!("tree needs K >= 2 levels, got {k}")));
    }
    if !(spec.c > 0.0 && spec.c.is_finite()) {
        return Err(Error::Parameter(format!("tree scale c must be positive, got {}", spec.c)));
    }
    if !(spec.lambda > 1.0 && spec.lambda.is_finite()) {
        return Err(Error::Parameter(format!("tree ratio lambda must exceed 1, got {}", spec.lambda)));
    }
    if spec.children.len() != k - 1 {
        return Err(Error::Structure(format!(
            "expected {} branching entries for K={k}, got {}",
            k - 1,
            spec.children.len()
        )));
    }
    let mut nodes = vec![TreeNode { level: k, parent: None, children: vec![], leaves: vec![] }];
    let mut level_sets = vec![Vec::new(); k];
    level_sets[k - 1].push(0);
    for (depth, branching) in spec.children.iter().enumerate() {
        let level = k - depth;
        let parents = level_sets[level - 1].clone();
        let counts: Vec<usize> = match branching {
            LevelBranching::Uniform(c) => vec![*c; parents.len()],
            LevelBranching::PerNode(v) => {
                if v.len() != parents.len() {
                    return Err(Error::Structure(format!(
                        "level {level} has {} nodes but {} branching counts",
                        parents.len(),
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        for (&p, &count) in parents.iter().zip(&counts) {
            if count == 0 {
                return Err(Error::Structure(format!("node at level {level} has no children")));
            }
            for _ in 0..count {
                let id = nodes.len();
                nodes.push(TreeNode { level: level - 1, parent: Some(p), children: vec![], leaves: vec![] });
                nodes[p].children.push(id);
                level_sets[level - 2].push(id);
            }
        }
    }
    let leaf_nodes = level_sets[0].clone();
    for (leaf, &node) in leaf_nodes.iter().enumerate() {
        let mut cur = Some(node);
        while let Some(v) = cur {
            nodes[v].leaves.push(leaf);
            cur = nodes[v].parent;
        }
    }
    let n = leaf_nodes.len();
    let mut rows = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            // walk both leaves up in lockstep (they sit on the same level) and sum edges
            let (mut u, mut v) = (leaf_nodes[a], leaf_nodes[b]);
            let mut total = 0.0;
            while u != v {
                let w = spec.edge_weight(nodes[u].level);
                total += 2.0 * w;
                u = nodes[u].parent.expect("non-root node has a parent");
                v = nodes[v].parent.expect("non-root node has a parent");
            }
            rows[a][b] = total;
            rows[b][a] = total;
        }
    }
    let tree = Tree { spec: spec.clone(), nodes, level_sets, leaf_nodes };
    Ok((MetricSpace::new(rows)?, tree))
}

/// Random tree with per-node branching drawn uniformly from `min_children..=max_children`.
pub fn gen_tree(
    levels: usize,
    min_children: usize,
    max_children: usize,
    c: f64,
    lambda: f64,
    seed: u64,
) -> Result<TreeMetricSpec> {
    if min_children == 0 || max_children < min_children {
        return Err(Error::Parameter("need 1 <= min_children <= max_children".into()));
    }
    if levels < 2 {
        return Err(Error::Parameter(format!("tree needs K >= 2 levels, got {levels}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut width = 1usize;
    let mut children = Vec::with_capacity(levels - 1);
    for _ in 0..levels - 1 {
        let counts: Vec<usize> =
            (0..width).map(|_| rng.random_range(min_children..=max_children)).collect();
        width = counts.iter().sum();
        children.push(LevelBranching::PerNode(counts));
    }
    Ok(TreeMetricSpec { levels, children, c, lambda })
}

/// `n` points drawn uniformly from the cube `[0, side]^dim`.
pub fn gen_euclidean(n: usize, dim: usize, side: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>() * side).collect()).collect()
}

/// Geometry part of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Geometry {
    Matrix { n: usize, dist: Vec<Vec<f64>> },
    Points { points: Vec<Vec<f64>> },
    Tree { tree: TreeMetricSpec },
}

/// JSON instance: `{"n", "dist"}`, `{"points"}` or `{"tree"}`, optionally with
/// `"mu"`/`"sigma"` demand moments attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(flatten)]
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

/// A materialized instance: the metric plus whichever structure produced it.
#[derive(Debug, Clone)]
pub struct ResolvedInstance {
    pub metric: MetricSpace,
    pub points: Option<Vec<Vec<f64>>>,
    pub tree: Option<Tree>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self) -> Result<ResolvedInstance> {
        match &self.geometry {
            Geometry::Matrix { n, dist } => {
                if dist.len() != *n {
                    return Err(Error::Structure(format!(
                        "declared n={n} but matrix has {} rows",
                        dist.len()
                    )));
                }
                Ok(ResolvedInstance { metric: MetricSpace::new(dist.clone())?, points: None, tree: None })
            }
            Geometry::Points { points } => Ok(ResolvedInstance {
                metric: euclidean_metric(points)?,
                points: Some(points.clone()),
                tree: None,
            }),
            Geometry::Tree { tree } => {
                let (metric, t) = tree_metric(tree)?;
                Ok(ResolvedInstance { metric, points: None, tree: Some(t) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::arb_metric;
    use proptest::prelude::*;

    #[test]
    fn smallest_valid_metric() {
        assert!(validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap().is_empty());
    }

    #[test]
    fn asymmetric_matrix_flagged() {
        let v = validate_metric(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(v, vec![MetricViolation::Asymmetric { i: 0, j: 1 }]);
    }

    #[test]
    fn triangle_violation_flagged() {
        let m = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let v = validate_metric(&m).unwrap();
        assert_eq!(v, vec![MetricViolation::Triangle { i: 0, j: 2, via: 1 }]);
    }

    #[test]
    fn non_square_is_structural() {
        assert!(matches!(validate_metric(&[vec![0.0, 1.0], vec![1.0]]), Err(Error::Structure(_))));
    }

    #[test]
    fn cost_params_reject_bad_values() {
        assert!(CostParams::new(100.0, 5.0).is_ok());
        assert!(CostParams::new(5.0, 0.0).is_err());
        assert!(CostParams::new(4.0, 5.0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let p = CostParams::new(100.0, 5.0).unwrap();
        let u = MetricSpace::uniform(4, 200.0).unwrap().truncate(&p);
        assert_eq!(u, MetricSpace::uniform(4, 105.0).unwrap());

        let small = MetricSpace::uniform(3, 50.0).unwrap();
        assert_eq!(small.truncate(&p), small);

        let m = MetricSpace::new(vec![
            vec![0.0, 50.0, 300.0],
            vec![50.0, 0.0, 260.0],
            vec![300.0, 260.0, 0.0],
        ])
        .unwrap();
        let t = m.truncate(&p);
        assert_eq!(
            t.to_rows(),
            vec![vec![0.0, 50.0, 105.0], vec![50.0, 0.0, 105.0], vec![105.0, 105.0, 0.0]]
        );
        assert!(validate_metric(&t.to_rows()).unwrap().is_empty());
    }

    #[test]
    fn two_level_tree_is_uniform() {
        let (m, tree) = tree_metric(&TreeMetricSpec::uniform(2, &[3], 1.0, 2.0)).unwrap();
        assert_eq!(m.n(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.d(i, j), if i == j { 0.0 } else { 4.0 });
            }
        }
        assert_eq!(tree.level(2).len(), 1);
        assert_eq!(tree.nodes[tree.root()].leaves, vec![0, 1, 2]);
    }

    #[test]
    fn three_level_tree_distances() {
        let (m, tree) = tree_metric(&TreeMetricSpec::uniform(3, &[2, 2], 1.0, 2.0)).unwrap();
        assert_eq!(m.n(), 4);
        assert_eq!(m.d(0, 1), 4.0);
        assert_eq!(m.d(0, 2), 8.0);
        assert_eq!(m.d(1, 3), 8.0);
        assert_eq!(m.d(2, 2), 0.0);
        assert_eq!(tree.level(2).len(), 2);
    }

    #[test]
    fn tree_rejects_single_level() {
        let spec = TreeMetricSpec { levels: 1, children: vec![], c: 1.0, lambda: 2.0 };
        assert!(matches!(tree_metric(&spec), Err(Error::Parameter(_))));
    }

    #[test]
    fn euclidean_examples() {
        let m = euclidean_metric(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.d(0, 1), 5.0);
        let m = euclidean_metric(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.d(0, 1), 1.0);
        assert_eq!(m.d(0, 2), 1.0);
        assert!((m.d(1, 2) - 2f64.sqrt()).abs() < 1e-15);
        let sq = euclidean_metric(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(sq.d(0, 1), 1.0);
        assert!((sq.d(0, 2) - 2f64.sqrt()).abs() < 1e-15);
        assert!(euclidean_metric(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn instance_json_forms() {
        let a = Instance::from_json(r#"{"n":2,"dist":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(a.resolve().unwrap().metric.n(), 2);
        let b = Instance::from_json(r#"{"points":[[0,0],[3,4]],"mu":[1,2],"sigma":[1,1]}"#).unwrap();
        assert_eq!(b.resolve().unwrap().metric.d(0, 1), 5.0);
        assert_eq!(b.mu, Some(vec![1.0, 2.0]));
        let c = Instance::from_json(r#"{"tree":{"K":3,"children":[2,[1,3]],"c":1,"lambda":2}}"#)
            .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.metric.n(), 4);
        assert!(r.tree.is_some());
    }

    proptest! {
        #[test]
        fn truncation_preserves_metric(rows in arb_metric(), b in 5.0f64..300.0, h in 0.5f64..5.0) {
            let m = MetricSpace::new(rows).unwrap();
            let t = m.truncate(&CostParams::new(b, h).unwrap());
            prop_assert!(validate_metric(&t.to_rows()).unwrap().is_empty());
            prop_assert!(t.max_distance() <= b + h);
        }

        #[test]
        fn aspect_ratio_at_least_one(rows in arb_metric()) {
            prop_assert!(MetricSpace::new(rows).unwrap().aspect_ratio() >= 1.0);
        }

        #[test]
        fn random_trees_are_metrics(
            levels in 2usize..=5,
            lambda in 1.01f64..4.0,
            c in 0.1f64..10.0,
            seed in any::<u64>(),
        ) {
            let spec = gen_tree(levels, 1, 3, c, lambda, seed).unwrap();
            let (m, tree) = tree_metric(&spec).unwrap();
            prop_assert!(validate_metric(&m.to_rows()).unwrap().is_empty() || m.n() == 1);
            // leaf distance depends only on the level of the lowest common ancestor
            for a in 0..m.n() {
                for b in a + 1..m.n() {
                    let (mut u, mut v) = (tree.leaf_nodes[a], tree.leaf_nodes[b]);
                    while u != v {
                        u = tree.nodes[u].parent.unwrap();
                        v = tree.nodes[v].parent.unwrap();
                    }
                    let lvl = tree.nodes[u].level as i32;
                    let expect = 2.0 * c * lambda.powi(lvl - 1);
                    prop_assert!((m.d(a, b) - expect).abs() <= 1e-9 * expect);
                }
            }
        }
    }
}
