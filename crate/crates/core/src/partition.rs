//! Well-separated hierarchical partitions (WSHPs).
//!
//! A WSHP is a ladder of partitions `P_1, …, P_R` of the locations. Level `r`
//! is split into at most `β` families; clusters inside one family are more than
//! `Δ_r` apart and every cluster has diameter below `α·Δ_r`. Each level
//! coarsens the one below it and the top level is the whole space.
//!
//! Four constructions are provided: uniform metrics, Euclidean grids, the
//! greedy ball-growing procedure for arbitrary metrics, and the natural
//! partition of a tree metric.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{CostParams, MetricSpace, Tree};

/// Relative tolerance used when comparing margins, diameters and schedules.
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    /// 1-based level.
    pub level: usize,
    /// Family index within the level.
    pub family: usize,
    /// Location indices, ascending.
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A hierarchy of well-separated partitions with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WshpFile", into = "WshpFile")]
pub struct Wshp {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `deltas[r-1]` is the margin of level `r`.
    pub deltas: Vec<f64>,
    /// `levels[r-1][f]` lists the cluster ids of family `f` at level `r`.
    pub levels: Vec<Vec<Vec<usize>>>,
    pub clusters: Vec<Cluster>,
    /// Diameter of each cluster under the metric the hierarchy was built on.
    pub diameters: Vec<f64>,
    /// Accept margins equal to `Δ_r` (limit of a family of valid partitions).
    pub limit_slack: bool,
    /// `location_cluster[r-1][i]` is the level-`r` cluster holding location `i`.
    location_cluster: Vec<Vec<usize>>,
}

/// On-disk form: member lists only, links are rebuilt on load.
#[derive(Serialize, Deserialize)]
struct WshpFile {
    n: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    #[serde(rename = "Delta")]
    deltas: Vec<f64>,
    #[serde(default)]
    limit_slack: bool,
    /// levels → families → clusters → member indices
    levels: Vec<Vec<Vec<Vec<usize>>>>,
    /// Same nesting as `levels`, one diameter per cluster.
    diameters: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<WshpFile> for Wshp {
    type Error = Error;
    fn try_from(f: WshpFile) -> Result<Self> {
        let shape_ok = f.levels.len() == f.diameters.len()
            && f.levels.iter().zip(&f.diameters).all(|(l, d)| {
                l.len() == d.len() && l.iter().zip(d).all(|(fa, fd)| fa.len() == fd.len())
            });
        if !shape_ok {
            return Err(Error::Structure("diameters do not match the level layout".into()));
        }
        let diams: Vec<f64> = f.diameters.into_iter().flatten().flatten().collect();
        let mut h = Wshp::assemble(f.n, f.alpha, f.beta, f.gamma, f.deltas, f.levels, |_| 0.0)?;
        h.diameters = diams;
        h.limit_slack = f.limit_slack;
        Ok(h)
    }
}

impl From<Wshp> for WshpFile {
    fn from(h: Wshp) -> Self {
        let levels = h
            .levels
            .iter()
            .map(|fams| {
                fams.iter()
                    .map(|fam| fam.iter().map(|&c| h.clusters[c].members.clone()).collect())
                    .collect()
            })
            .collect();
        let diameters = h
            .levels
            .iter()
            .map(|fams| fams.iter().map(|fam| fam.iter().map(|&c| h.diameters[c]).collect()).collect())
            .collect();
        WshpFile {
            n: h.n,
            alpha: h.alpha,
            beta: h.beta,
            gamma: h.gamma,
            deltas: h.deltas,
            limit_slack: h.limit_slack,
            levels,
            diameters,
        }
    }
}

impl Wshp {
    /// Builds cluster records and parent/child links from nested member lists.
    /// A cluster's parent is the next-level cluster holding its lowest member.
    fn assemble(
        n: usize,
        alpha: f64,
        beta: f64,
        gamma: f64,
        deltas: Vec<f64>,
        member_levels: Vec<Vec<Vec<Vec<usize>>>>,
        diameter: impl Fn(&[usize]) -> f64,
    ) -> Result<Self> {
        if member_levels.is_empty() {
            return Err(Error::Structure("hierarchy has no levels".into()));
        }
        let mut clusters = Vec::new();
        let mut levels = Vec::with_capacity(member_levels.len());
        let mut location_cluster = Vec::with_capacity(member_levels.len());
        for (li, fams) in member_levels.into_iter().enumerate() {
            let mut owner = vec![usize::MAX; n];
            let mut fam_ids = Vec::with_capacity(fams.len());
            for (fi, fam) in fams.into_iter().enumerate() {
                let mut ids = Vec::with_capacity(fam.len());
                for mut members in fam {
                    members.sort_unstable();
                    members.dedup();
                    if let Some(&bad) = members.iter().find(|&&i| i >= n) {
                        return Err(Error::Structure(format!("location {bad} out of range (n={n})")));
                    }
                    let id = clusters.len();
                    for &i in &members {
                        if owner[i] == usize::MAX {
                            owner[i] = id;
                        }
                    }
                    clusters.push(Cluster {
                        id,
                        level: li + 1,
                        family: fi,
                        members,
                        parent: None,
                        children: vec![],
                    });
                    ids.push(id);
                }
                fam_ids.push(ids);
            }
            levels.push(fam_ids);
            location_cluster.push(owner);
        }
        for r in 0..levels.len().saturating_sub(1) {
            for &c in levels[r].iter().flatten() {
                let Some(&first) = clusters[c].members.first() else { continue };
                let p = location_cluster[r + 1][first];
                if p != usize::MAX {
                    clusters[c].parent = Some(p);
                    clusters[p].children.push(c);
                }
            }
        }
        let diameters = clusters.iter().map(|c| diameter(&c.members)).collect();
        Ok(Self {
            n,
            alpha,
            beta,
            gamma,
            deltas,
            levels,
            clusters,
            diameters,
            limit_slack: false,
            location_cluster,
        })
    }

    fn from_member_levels(
        m: &MetricSpace,
        params: (f64, f64, f64),
        deltas: Vec<f64>,
        member_levels: Vec<Vec<Vec<Vec<usize>>>>,
    ) -> Result<Self> {
        let (alpha, beta, gamma) = params;
        Self::assemble(m.n(), alpha, beta, gamma, deltas, member_levels, |s| m.diameter(s))
    }

    /// Number of levels `R`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> usize {
        self.levels[self.depth() - 1][0][0]
    }

    /// Cluster ids of level `r` (1-based), family by family.
    pub fn level_clusters(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.levels[r - 1].iter().flatten().copied()
    }

    /// The level-`r` cluster containing location `i`.
    pub fn cluster_of(&self, r: usize, i: usize) -> usize {
        self.location_cluster[r - 1][i]
    }

    /// `diam_p(C)`: diameter of the parent cluster, `None` at the top level.
    pub fn parent_diameter(&self, c: usize) -> Option<f64> {
        self.clusters[c].parent.map(|p| self.diameters[p])
    }

    /// The online policy's partition requirement `γ > log2(n)·α`.
    pub fn satisfies_hb_condition(&self) -> bool {
        self.gamma > log2n(self.n) * self.alpha
    }

    /// Checks that every id referenced by the hierarchy exists.
    pub fn check_structure(&self) -> Result<()> {
        let k = self.clusters.len();
        for (r, fams) in self.levels.iter().enumerate() {
            for &c in fams.iter().flatten() {
                if c >= k {
                    return Err(Error::Structure(format!("level {} references missing cluster {c}", r + 1)));
                }
            }
        }
        for c in &self.clusters {
            if c.parent.is_some_and(|p| p >= k) || c.children.iter().any(|&x| x >= k) {
                return Err(Error::Structure(format!("cluster {} has a dangling link", c.id)));
            }
            if c.members.iter().any(|&i| i >= self.n) {
                return Err(Error::Structure(format!("cluster {} has an out-of-range member", c.id)));
            }
        }
        if self.diameters.len() != k {
            return Err(Error::Structure("diameter table length mismatch".into()));
        }
        Ok(())
    }
}

pub(crate) fn log2n(n: usize) -> f64 {
    (n as f64).log2()
}

fn check_params(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be >= 1, got {alpha}")));
    }
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::Parameter(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(())
}

fn schedule(m: &MetricSpace, alpha: f64, gamma: f64, limit: bool) -> Result<Vec<f64>> {
    check_params(alpha, gamma)?;
    let lo = m
        .min_distance()
        .ok_or_else(|| Error::Input("margin schedule needs at least two locations".into()))?;
    let hi = m.max_distance();
    if hi <= 0.0 {
        return Err(Error::Input("degenerate metric: all distances are zero".into()));
    }
    let delta1 = lo.max(hi / m.n() as f64) / alpha;
    let mut x = (hi / delta1).ln() / gamma.ln();
    if (x - x.round()).abs() < TOL {
        x = x.round();
    }
    let levels = if limit { x.floor() as i64 + 2 } else { x.ceil() as i64 + 1 }.max(1) as usize;
    Ok((0..levels).map(|r| delta1 * gamma.powi(r as i32)).collect())
}

/// Margins `Δ_1..Δ_R`; `R` is the vector length.
pub fn delta_schedule(m: &MetricSpace, alpha: f64, gamma: f64) -> Result<Vec<f64>> {
    schedule(m, alpha, gamma, false)
}

/// Schedule for a hierarchy that is valid for `α(1+ε)`, `γ(1+ε)` with `ε → 0`.
/// The level count is `⌊x⌋ + 2` rather than `⌈x⌉ + 1`, which differ only
/// when `x = log(max ℓ/Δ_1)/log γ` is an integer.
pub fn delta_schedule_limit(m: &MetricSpace, alpha: f64, gamma: f64) -> Result<Vec<f64>> {
    schedule(m, alpha, gamma, true)
}

/// Uniform metric: singletons, then the whole space.
pub fn wshp_uniform(m: &MetricSpace, alpha: f64, gamma: f64) -> Result<Wshp> {
    if m.n() < 2 {
        return Err(Error::Input("uniform partition needs n >= 2".into()));
    }
    if !m.is_uniform() {
        return Err(Error::Input("metric is not uniform".into()));
    }
    if alpha <= 1.0 {
        return Err(Error::Parameter(format!("uniform partition needs alpha > 1, got {alpha}")));
    }
    if gamma <= alpha {
        return Err(Error::Parameter(format!("uniform partition needs gamma > alpha, got {gamma} <= {alpha}")));
    }
    let deltas = delta_schedule(m, alpha, gamma)?;
    debug_assert_eq!(deltas.len(), 2);
    let n = m.n();
    let levels = vec![vec![(0..n).map(|i| vec![i]).collect()], vec![vec![(0..n).collect()]]];
    Wshp::from_member_levels(m, (alpha, 1.0, gamma), deltas, levels)
}

/// Nested-grid partition of points in `R^d`.
///
/// Level `r < R` cuts a hypercube of side `Δ_R` into cells of width `2Δ_r`;
/// cells whose indices share a parity pattern form one family.
pub fn wshp_euclidean(points: &[Vec<f64>], alpha: f64, gamma: f64) -> Result<Wshp> {
    let m = crate::metric::euclidean_metric(points)?;
    let dim = points[0].len();
    if alpha <= 2.0 * (dim as f64).sqrt() {
        return Err(Error::Parameter(format!("grid partition in dimension {dim} needs alpha > 2*sqrt(d)")));
    }
    if gamma < 2.0 || gamma.fract() != 0.0 || (gamma as u64) % 2 != 0 {
        return Err(Error::Parameter(format!("grid partition needs an even integer gamma, got {gamma}")));
    }
    let deltas = delta_schedule(&m, alpha, gamma)?;
    let levels_n = deltas.len();
    let g = gamma as u64;
    let origin: Vec<f64> =
        (0..dim).map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();

    // finest cell index per coordinate; coarser indices are integer quotients so grids nest exactly
    let cells_at = |r: usize| -> u64 { g.pow((levels_n - r) as u32) / 2 };
    let fine: Vec<Vec<u64>> = if levels_n > 1 {
        let width = 2.0 * deltas[0];
        let count = cells_at(1);
        points
            .iter()
            .map(|p| {
                (0..dim)
                    .map(|k| (((p[k] - origin[k]) / width).floor().max(0.0) as u64).min(count - 1))
                    .collect()
            })
            .collect()
    } else {
        vec![]
    };

    let mut member_levels = Vec::with_capacity(levels_n);
    for r in 1..levels_n {
        let div = g.pow((r - 1) as u32);
        let mut fams: BTreeMap<Vec<u64>, BTreeMap<Vec<u64>, Vec<usize>>> = BTreeMap::new();
        for (i, idx) in fine.iter().enumerate() {
            // labels are 1-based along each side
            let cell: Vec<u64> = idx.iter().map(|&x| x / div + 1).collect();
            let parity: Vec<u64> = cell.iter().map(|x| x % 2).collect();
            fams.entry(parity).or_default().entry(cell).or_default().push(i);
        }
        member_levels.push(fams.into_values().map(|cells| cells.into_values().collect()).collect());
    }
    member_levels.push(vec![vec![(0..m.n()).collect()]]);
    let beta = 2f64.powi(dim as i32);
    Wshp::from_member_levels(&m, (alpha, beta, gamma), deltas, member_levels)
}

/// Result of the greedy construction together with its phase counts.
#[derive(Debug, Clone)]
pub struct GeneralWshp {
    pub wshp: Wshp,
    /// Number of phases (families) used at each level below the top.
    pub phases: Vec<usize>,
}

/// `α = 6·log2(n) + 1` for the greedy construction.
pub fn general_alpha(n: usize) -> f64 {
    6.0 * log2n(n) + 1.0
}

/// Smallest integer strictly above `12·log2(n) + 2`.
pub fn general_gamma(n: usize) -> f64 {
    (12.0 * log2n(n) + 2.0).floor() + 1.0
}

/// Greedy ball-growing partition for an arbitrary metric; `gamma` defaults to
/// [`general_gamma`].
pub fn wshp_general(m: &MetricSpace, gamma: Option<f64>) -> Result<Wshp> {
    Ok(wshp_general_detailed(m, gamma)?.wshp)
}

/// Units are groups of locations (singletons at level 1, previous-level
/// clusters above). Each phase repeatedly takes the lowest remaining unit,
/// grows a ball around it until doubling fails, keeps the ball as a cluster
/// and defers the boundary ring to the next phase.
fn grow_phases(units: &[Vec<usize>], dist: impl Fn(usize, usize) -> f64, step: f64) -> Vec<Vec<Vec<usize>>> {
    let mut families = Vec::new();
    let mut pending: Vec<usize> = (0..units.len()).collect();
    while !pending.is_empty() {
        let mut remaining: BTreeSet<usize> = pending.iter().copied().collect();
        let mut marked = Vec::new();
        let mut family = Vec::new();
        while let Some(&x) = remaining.iter().next() {
            let ball = |s: usize| -> Vec<usize> {
                remaining.iter().copied().filter(|&y| dist(x, y) <= s as f64 * step).collect()
            };
            let mut s = 0usize;
            let (inner, outer) = loop {
                let inner = ball(s);
                let outer = ball(s + 1);
                if outer.len() < 2 * inner.len() {
                    break (inner, outer);
                }
                s += 1;
            };
            let mut members: Vec<usize> = inner.iter().flat_map(|&u| units[u].iter().copied()).collect();
            members.sort_unstable();
            family.push(members);
            for u in &outer {
                remaining.remove(u);
                if !inner.contains(u) {
                    marked.push(*u);
                }
            }
        }
        families.push(family);
        marked.sort_unstable();
        pending = marked;
    }
    families
}

pub fn wshp_general_detailed(m: &MetricSpace, gamma: Option<f64>) -> Result<GeneralWshp> {
    let n = m.n();
    if n < 2 {
        return Err(Error::Input("general partition needs n >= 2".into()));
    }
    let alpha = general_alpha(n);
    let gamma = gamma.unwrap_or_else(|| general_gamma(n));
    let deltas = delta_schedule(m, alpha, gamma)?;
    let top = deltas.len();
    let mut member_levels: Vec<Vec<Vec<Vec<usize>>>> = Vec::with_capacity(top);
    let mut phases = Vec::new();
    if top > 1 {
        let singletons: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let fams = grow_phases(&singletons, |a, b| m.d(a, b), deltas[0]);
        phases.push(fams.len());
        member_levels.push(fams);
    }
    for r in 2..top {
        let units: Vec<Vec<usize>> = member_levels[r - 2].iter().flatten().cloned().collect();
        // lowest member represents its cluster
        let reps: Vec<usize> = units.iter().map(|u| u[0]).collect();
        let fams = grow_phases(&units, |a, b| m.d(reps[a], reps[b]), 3.0 * deltas[r - 1]);
        phases.push(fams.len());
        member_levels.push(fams);
    }
    member_levels.push(vec![vec![(0..n).collect()]]);
    let beta = log2n(n).ceil().max(1.0);
    let wshp = Wshp::from_member_levels(m, (alpha, beta, gamma), deltas, member_levels)?;
    Ok(GeneralWshp { wshp, phases })
}

/// Natural partition of a tree metric: the level-`r` clusters are the leaf
/// sets of the tree nodes `r0 - 1` levels higher, where `r0` is the highest
/// level whose nodes (and all nodes between it and the leaves) have one child.
///
/// The hierarchy is valid for `α = (1+ε)^{K−r0}`, `γ = (1+ε)λ` and every small
/// `ε > 0`; it is stored at the limit `α = 1`, `γ = λ` with `limit_slack` set.
pub fn wshp_tree(tree: &Tree, m: &MetricSpace) -> Result<Wshp> {
    let k = tree.spec.levels;
    if tree.n_leaves() != m.n() {
        return Err(Error::Structure("tree and metric disagree on the number of leaves".into()));
    }
    if m.n() < 2 {
        return Err(Error::Input("tree partition needs at least two leaves".into()));
    }
    let mut r0 = 1;
    while r0 < k && tree.level(r0 + 1).iter().all(|&v| tree.nodes[v].children.len() == 1) {
        r0 += 1;
    }
    let lambda = tree.spec.lambda;
    let sched = delta_schedule_limit(m, 1.0, lambda)?;
    let levels_n = k - r0 + 1;
    let deltas: Vec<f64> = (0..levels_n).map(|r| sched[0] * lambda.powi(r as i32)).collect();
    let member_levels = (1..=levels_n)
        .map(|r| vec![tree.level(r + r0 - 1).iter().map(|&v| tree.nodes[v].leaves.clone()).collect()])
        .collect();
    let mut h = Wshp::from_member_levels(m, (1.0, 1.0, lambda), deltas, member_levels)?;
    h.limit_slack = true;
    Ok(h)
}

/// One failed requirement of the WSHP definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WshpViolation {
    Schedule { level: usize, expected: f64, found: f64 },
    LevelCount { expected: usize, found: usize },
    FamilyCount { level: usize, families: usize, beta: f64 },
    Margin { level: usize, family: usize, a: usize, b: usize, distance: f64, delta: f64 },
    Diameter { cluster: usize, diameter: f64, bound: f64 },
    Partition { level: usize, location: usize, count: usize },
    EmptyCluster { cluster: usize },
    Coarsening { cluster: usize },
    TopLevel,
}

/// Lists every way `h` fails to be an `(alpha, beta, gamma)`-WSHP of `m`.
/// An empty list means the hierarchy is valid.
pub fn verify_wshp(m: &MetricSpace, h: &Wshp, alpha: f64, beta: f64, gamma: f64) -> Result<Vec<WshpViolation>> {
    h.check_structure()?;
    if h.n != m.n() {
        return Err(Error::Structure(format!("hierarchy covers {} locations, metric has {}", h.n, m.n())));
    }
    let mut out = Vec::new();
    let expected = if h.limit_slack {
        delta_schedule_limit(m, alpha, gamma)?
    } else {
        delta_schedule(m, alpha, gamma)?
    };
    if expected.len() != h.depth() {
        out.push(WshpViolation::LevelCount { expected: expected.len(), found: h.depth() });
    }
    if h.deltas.len() != h.depth() {
        out.push(WshpViolation::LevelCount { expected: h.depth(), found: h.deltas.len() });
    }
    for (r, (&e, &f)) in expected.iter().zip(&h.deltas).enumerate() {
        if (e - f).abs() > TOL * e {
            out.push(WshpViolation::Schedule { level: r + 1, expected: e, found: f });
        }
    }
    for (r, fams) in h.levels.iter().enumerate() {
        let level = r + 1;
        let delta = h.deltas.get(r).copied().unwrap_or(f64::INFINITY);
        if fams.len() as f64 > beta + TOL {
            out.push(WshpViolation::FamilyCount { level, families: fams.len(), beta });
        }
        let mut count = vec![0usize; h.n];
        for &c in fams.iter().flatten() {
            for &i in &h.clusters[c].members {
                count[i] += 1;
            }
            if h.clusters[c].members.is_empty() {
                out.push(WshpViolation::EmptyCluster { cluster: c });
            }
            let diam = m.diameter(&h.clusters[c].members);
            let bound = alpha * delta;
            let ok = if h.limit_slack { diam <= bound * (1.0 + TOL) } else { diam < bound };
            if !ok {
                out.push(WshpViolation::Diameter { cluster: c, diameter: diam, bound });
            }
        }
        for (location, &cnt) in count.iter().enumerate() {
            if cnt != 1 {
                out.push(WshpViolation::Partition { level, location, count: cnt });
            }
        }
        for (f, fam) in fams.iter().enumerate() {
            for (x, &a) in fam.iter().enumerate() {
                for &b in &fam[x + 1..] {
                    let dist = m.set_distance(&h.clusters[a].members, &h.clusters[b].members);
                    let ok = if h.limit_slack { dist >= delta * (1.0 - TOL) } else { dist > delta };
                    if !ok {
                        out.push(WshpViolation::Margin { level, family: f, a, b, distance: dist, delta });
                    }
                }
            }
        }
    }
    for r in 0..h.depth().saturating_sub(1) {
        for &c in h.levels[r].iter().flatten() {
            let cl = &h.clusters[c];
            let linked = cl.parent.is_some_and(|p| {
                let par = &h.clusters[p];
                par.level == r + 2
                    && par.children.contains(&c)
                    && cl.members.iter().all(|i| par.members.binary_search(i).is_ok())
            });
            if !linked {
                out.push(WshpViolation::Coarsening { cluster: c });
            }
        }
    }
    let top_ok = h.levels.last().is_some_and(|fams| {
        fams.len() == 1 && fams[0].len() == 1 && h.clusters[fams[0][0]].members.len() == h.n
    });
    if !top_ok {
        out.push(WshpViolation::TopLevel);
    }
    Ok(out)
}

/// Clusters below the top whose parent diameter is at least `2h`, with their
/// virtual underage cost `b_C = diam_p(C) − h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub members: BTreeSet<usize>,
    pub virtual_underage: BTreeMap<usize, f64>,
}

pub fn gamma_set(h: &Wshp, p: &CostParams) -> GammaSet {
    gamma_set_capped(h, p, f64::INFINITY)
}

/// [`gamma_set`] with parent diameters measured in the truncated metric,
/// i.e. capped at `b + h`, so that `b_C ≤ b`.
pub fn truncated_gamma_set(h: &Wshp, p: &CostParams) -> GammaSet {
    gamma_set_capped(h, p, p.b + p.h)
}

fn gamma_set_capped(h: &Wshp, p: &CostParams, cap: f64) -> GammaSet {
    let mut members = BTreeSet::new();
    let mut virtual_underage = BTreeMap::new();
    for c in &h.clusters {
        if c.level >= h.depth() {
            continue;
        }
        if let Some(dp) = h.parent_diameter(c.id) {
            let dp = dp.min(cap);
            if dp >= 2.0 * p.h {
                members.insert(c.id);
                virtual_underage.insert(c.id, dp - p.h);
            }
        }
    }
    GammaSet { members, virtual_underage }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{euclidean_metric, gen_euclidean, gen_tree, tree_metric, TreeMetricSpec};
    use crate::testutil::arb_metric_sized;
    use proptest::prelude::*;

    fn members_by_level(h: &Wshp) -> Vec<Vec<Vec<Vec<usize>>>> {
        h.levels
            .iter()
            .map(|f| f.iter().map(|fam| fam.iter().map(|&c| h.clusters[c].members.clone()).collect()).collect())
            .collect()
    }

    #[test]
    fn schedule_examples() {
        let u = MetricSpace::uniform(5, 1.0).unwrap();
        assert_eq!(delta_schedule(&u, 2.0, 3.0).unwrap(), vec![0.5, 1.5]);

        // max 100, min 1, n = 10
        let mut d = vec![vec![0.0; 10]; 10];
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    d[i][j] = if i == 0 && j == 1 || i == 1 && j == 0 { 1.0 } else { 99.0 };
                }
            }
        }
        d[0][9] = 100.0;
        d[9][0] = 100.0;
        let m = MetricSpace::new(d).unwrap();
        let s = delta_schedule(&m, 1.0, 10.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_rejects_single_point_and_bad_params() {
        let one = MetricSpace::new(vec![vec![0.0]]).unwrap();
        assert!(delta_schedule(&one, 2.0, 3.0).is_err());
        let u = MetricSpace::uniform(3, 1.0).unwrap();
        assert!(matches!(delta_schedule(&u, 0.5, 3.0), Err(Error::Parameter(_))));
        assert!(matches!(delta_schedule(&u, 2.0, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn uniform_shape() {
        let m = MetricSpace::uniform(4, 1.0).unwrap();
        let h = wshp_uniform(&m, 2.0, 3.0).unwrap();
        assert_eq!(
            members_by_level(&h),
            vec![vec![vec![vec![0], vec![1], vec![2], vec![3]]], vec![vec![vec![0, 1, 2, 3]]]]
        );
        assert!(verify_wshp(&m, &h, 2.0, 1.0, 3.0).unwrap().is_empty());
        assert!(matches!(wshp_uniform(&m, 2.0, 2.0), Err(Error::Parameter(_))));
        let one = MetricSpace::new(vec![vec![0.0]]).unwrap();
        assert!(wshp_uniform(&one, 2.0, 3.0).is_err());
    }

    #[test]
    fn euclidean_line_example() {
        let pts = vec![vec![0.0], vec![10.0]];
        let h = wshp_euclidean(&pts, 3.0, 2.0).unwrap();
        let m = euclidean_metric(&pts).unwrap();
        assert_eq!(h.depth(), 3);
        assert_eq!(members_by_level(&h)[2], vec![vec![vec![0, 1]]]);
        assert_eq!(h.levels[0].len(), 2);
        assert!(h.levels.iter().all(|l| l.len() <= 2));
        assert!(verify_wshp(&m, &h, 3.0, 2.0, 2.0).unwrap().is_empty());
        assert!(matches!(wshp_euclidean(&pts, 3.0, 3.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn euclidean_random_plane() {
        let pts = gen_euclidean(10, 2, 50.0, 7);
        let m = euclidean_metric(&pts).unwrap();
        let h = wshp_euclidean(&pts, 3.0, 2.0).unwrap();
        assert_eq!(verify_wshp(&m, &h, 3.0, 4.0, 2.0).unwrap(), vec![]);
    }

    #[test]
    fn general_on_uniform_gives_singletons() {
        let m = MetricSpace::uniform(6, 5.0).unwrap();
        let g = wshp_general_detailed(&m, None).unwrap();
        let first = &g.wshp.levels[0];
        assert_eq!(first.len(), 1);
        assert!(first[0].iter().all(|&c| g.wshp.clusters[c].members.len() == 1));
        assert_eq!(g.phases[0], 1);
    }

    #[test]
    fn general_two_points() {
        let m = MetricSpace::new(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let h = wshp_general(&m, None).unwrap();
        assert_eq!(members_by_level(&h)[0], vec![vec![vec![0], vec![1]]]);
        assert_eq!(h.clusters[h.top()].members, vec![0, 1]);
        assert!(verify_wshp(&m, &h, h.alpha, h.beta, h.gamma).unwrap().is_empty());
    }

    #[test]
    fn general_gamma_default() {
        // 12·log2(8) + 2 = 38, so the smallest integer above it is 39
        assert_eq!(general_gamma(8), 39.0);
        assert_eq!(general_alpha(8), 19.0);
    }

    #[test]
    fn tree_two_levels_matches_uniform() {
        let (m, t) = tree_metric(&TreeMetricSpec::uniform(2, &[4], 1.0, 2.0)).unwrap();
        let h = wshp_tree(&t, &m).unwrap();
        let u = wshp_uniform(&m, 2.0, 3.0).unwrap();
        assert_eq!(members_by_level(&h), members_by_level(&u));
        assert!(verify_wshp(&m, &h, 1.0, 1.0, 2.0).unwrap().is_empty());
    }

    #[test]
    fn tree_three_levels() {
        let (m, t) = tree_metric(&TreeMetricSpec::uniform(3, &[2, 2], 1.0, 2.0)).unwrap();
        let h = wshp_tree(&t, &m).unwrap();
        assert_eq!(
            members_by_level(&h),
            vec![
                vec![vec![vec![0], vec![1], vec![2], vec![3]]],
                vec![vec![vec![0, 1], vec![2, 3]]],
                vec![vec![vec![0, 1, 2, 3]]],
            ]
        );
        // level-2 clusters sit 2cλ² = 8 apart, at least the margin Δ_2
        let a = &h.clusters[h.levels[1][0][0]].members;
        let b = &h.clusters[h.levels[1][0][1]].members;
        assert_eq!(m.set_distance(a, b), 8.0);
        assert!(m.set_distance(a, b) >= h.deltas[1]);
    }

    #[test]
    fn tree_with_single_child_bottom_skips_levels() {
        // leaves each hang below their own level-2 node: r0 = 2
        let spec = TreeMetricSpec::uniform(3, &[3, 1], 1.0, 2.0);
        let (m, t) = tree_metric(&spec).unwrap();
        let h = wshp_tree(&t, &m).unwrap();
        assert_eq!(h.depth(), 2);
        assert!(verify_wshp(&m, &h, 1.0, 1.0, 2.0).unwrap().is_empty());
    }

    #[test]
    fn verify_flags_margin_and_coarsening() {
        let m = MetricSpace::uniform(4, 1.0).unwrap();
        let mut h = wshp_uniform(&m, 2.0, 3.0).unwrap();
        // singletons exactly Δ_1 apart no longer clear the margin
        let mut bad = h.clone();
        bad.deltas[0] = 1.0;
        let v = verify_wshp(&m, &bad, 2.0, 1.0, 3.0).unwrap();
        assert!(v.iter().any(|x| matches!(x, WshpViolation::Margin { .. })));

        h.clusters[0].parent = None;
        let v = verify_wshp(&m, &h, 2.0, 1.0, 3.0).unwrap();
        assert_eq!(v, vec![WshpViolation::Coarsening { cluster: 0 }]);

        h.clusters[1].parent = Some(99);
        assert!(matches!(verify_wshp(&m, &h, 2.0, 1.0, 3.0), Err(Error::Structure(_))));
    }

    #[test]
    fn gamma_set_examples() {
        let p = CostParams::new(100.0, 5.0).unwrap();
        let h = wshp_uniform(&MetricSpace::uniform(3, 30.0).unwrap(), 2.0, 3.0).unwrap();
        let g = gamma_set(&h, &p);
        assert_eq!(g.members.len(), 3);
        assert!(g.virtual_underage.values().all(|&b| b == 25.0));

        let h = wshp_uniform(&MetricSpace::uniform(3, 8.0).unwrap(), 2.0, 3.0).unwrap();
        assert!(gamma_set(&h, &p).members.is_empty());

        let (m, t) = tree_metric(&TreeMetricSpec::uniform(3, &[2, 2], 1.0, 2.0)).unwrap();
        let h = wshp_tree(&t, &m).unwrap();
        let g = gamma_set(&h, &CostParams::new(1.0, 1.0).unwrap());
        for c in h.level_clusters(1) {
            assert_eq!(g.virtual_underage[&c], 3.0);
        }
        for c in h.level_clusters(2) {
            assert_eq!(g.virtual_underage[&c], 7.0);
        }
        assert!(!g.members.contains(&h.top()));

        // with b = h the cap leaves only zero-stock constraints
        let g = truncated_gamma_set(&h, &CostParams::new(1.0, 1.0).unwrap());
        assert!(g.virtual_underage.values().all(|&b| b == 1.0));
    }

    #[test]
    fn json_round_trip() {
        let pts = gen_euclidean(8, 2, 40.0, 3);
        let h = wshp_euclidean(&pts, 3.0, 2.0).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        let back: Wshp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn hb_condition_flag() {
        let m = MetricSpace::uniform(4, 1.0).unwrap();
        // log2(4)·2 = 4
        assert!(!wshp_uniform(&m, 2.0, 3.0).unwrap().satisfies_hb_condition());
        assert!(wshp_uniform(&m, 2.0, 5.0).unwrap().satisfies_hb_condition());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn general_is_valid(rows in arb_metric_sized(2, 40)) {
            let m = MetricSpace::new(rows).unwrap();
            let g = wshp_general_detailed(&m, None).unwrap();
            let h = &g.wshp;
            prop_assert_eq!(verify_wshp(&m, h, h.alpha, h.beta, h.gamma).unwrap(), vec![]);
            let bound = log2n(m.n()).ceil().max(1.0) as usize;
            prop_assert!(g.phases.iter().all(|&p| p <= bound));
        }

        #[test]
        fn general_is_valid_with_lower_gamma(rows in arb_metric_sized(2, 20), extra in 0.5f64..5.0) {
            // any γ above 2α keeps the separation argument intact
            let m = MetricSpace::new(rows).unwrap();
            let gamma = 2.0 * general_alpha(m.n()) + extra;
            let h = wshp_general(&m, Some(gamma)).unwrap();
            prop_assert_eq!(verify_wshp(&m, &h, h.alpha, h.beta, gamma).unwrap(), vec![]);
        }

        #[test]
        fn euclidean_is_valid(n in 2usize..30, seed in any::<u64>(), half_gamma in 1u32..4, side in 1.0f64..1000.0) {
            let pts = gen_euclidean(n, 2, side, seed);
            let m = euclidean_metric(&pts).unwrap();
            let gamma = 2.0 * half_gamma as f64;
            let h = wshp_euclidean(&pts, 3.0, gamma).unwrap();
            prop_assert_eq!(verify_wshp(&m, &h, 3.0, 4.0, gamma).unwrap(), vec![]);
        }

        #[test]
        fn schedule_covers_diameter(rows in arb_metric_sized(2, 12), alpha in 1.0f64..10.0, gamma in 1.1f64..20.0) {
            let m = MetricSpace::new(rows).unwrap();
            let s = delta_schedule(&m, alpha, gamma).unwrap();
            prop_assert!(*s.last().unwrap() >= m.max_distance() * (1.0 - 1e-12));
        }

        #[test]
        fn gamma_members_have_underage_at_least_h(
            levels in 2usize..=4, seed in any::<u64>(), h in 0.1f64..20.0
        ) {
            let spec = gen_tree(levels, 2, 3, 1.0, 2.0, seed).unwrap();
            let (m, t) = tree_metric(&spec).unwrap();
            let w = wshp_tree(&t, &m).unwrap();
            let g = gamma_set(&w, &CostParams::new(h * 3.0, h).unwrap());
            prop_assert!(g.virtual_underage.values().all(|&b| b >= h));
        }
    }
}
