//! Hierarchical Balance online fulfillment.
//!
//! Demand arrives in parts. Each unit is served in place when possible,
//! otherwise from the smallest enclosing cluster that still holds inventory,
//! drawing equally from every inventory-bearing child at each level of the
//! cluster chain. The session keeps a full ledger so that both cost views
//! (true metric and cluster diameters) and the per-cluster θ tallies are
//! reconstructed from one record.
//!
//! The policy runs over any [`Quantity`]: exact [`BigRational`] is the
//! canonical mode, `f64` with a `1e-9` emptiness threshold is the fast one.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::rational;
use crate::error::{Error, Result};
use crate::metric::{CostParams, MetricSpace};
use crate::partition::Wshp;

/// Zero threshold of the float mode.
pub const FLOAT_EPS: f64 = 1e-9;

/// Arithmetic used by the simulator.
pub trait Quantity:
    Clone
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn zero() -> Self;
    fn from_f64(x: f64) -> Result<Self>;
    fn from_count(k: usize) -> Self;
    fn to_f64(&self) -> f64;
    /// True when the value counts as available inventory or open demand.
    fn is_positive(&self) -> bool;
}

impl Quantity for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Input(format!("non-finite quantity {x}")));
        }
        Ok(rational(x))
    }

    fn from_count(k: usize) -> Self {
        BigRational::from_integer(BigInt::from(k))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

impl Quantity for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Input(format!("non-finite quantity {x}")));
        }
        Ok(x)
    }

    fn from_count(k: usize) -> Self {
        k as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
}

fn min_q<Q: Quantity>(a: Q, b: Q) -> Q {
    if b < a {
        b
    } else {
        a
    }
}

fn sum_q<'a, Q: Quantity + 'a>(it: impl IntoIterator<Item = &'a Q>) -> Q {
    it.into_iter().fold(Q::zero(), |acc, x| acc + x.clone())
}

/// A sub-cluster key in the θ tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum VKey {
    /// Demand arriving outside the cluster.
    Virtual,
    /// A child cluster (clusters at level ≥ 2).
    Child(usize),
    /// A location (children of a level-1 cluster).
    Location(usize),
}

impl Display for VKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VKey::Virtual => write!(f, "virtual"),
            VKey::Child(c) => write!(f, "cluster:{c}"),
            VKey::Location(i) => write!(f, "location:{i}"),
        }
    }
}

/// One fulfillment action.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStep<Q> {
    pub location: usize,
    pub portion: Q,
    /// `(j, δd/k_j)`; a single `(i, portion)` entry for in-place service.
    pub sources: Vec<(usize, Q)>,
    /// 0 for in-place service, otherwise the level of `cluster`.
    pub level: usize,
    pub cluster: Option<usize>,
}

/// Serializable view of a [`SimStep`]; amounts are given exactly and as floats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub location: usize,
    pub portion: String,
    pub portion_value: f64,
    pub sources: Vec<SourceRecord>,
    pub level: usize,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceRecord {
    pub from: usize,
    pub amount: String,
    pub value: f64,
}

impl<Q: Quantity> SimStep<Q> {
    pub fn record(&self) -> StepRecord {
        StepRecord {
            location: self.location,
            portion: self.portion.to_string(),
            portion_value: self.portion.to_f64(),
            sources: self
                .sources
                .iter()
                .map(|(j, a)| SourceRecord { from: *j, amount: a.to_string(), value: a.to_f64() })
                .collect(),
            level: self.level,
            cluster: self.cluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub underage_units: f64,
    pub overage_units: f64,
    pub underage_cost: f64,
    pub overage_cost: f64,
    /// Shipping under the true metric.
    pub shipping: f64,
    /// Shipping when each pair is charged the diameter of its smallest common cluster.
    pub shipping_hierarchical: f64,
    pub total: f64,
    pub total_hierarchical: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaRow {
    pub cluster: usize,
    pub level: usize,
    pub child: VKey,
    pub online: f64,
    pub offline: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionSummary {
    pub costs: CostSummary,
    pub steps: usize,
    pub theta: Vec<ThetaRow>,
}

/// Mutable state of the online policy for one season.
#[derive(Debug, Clone)]
pub struct SimSession<'a, Q> {
    h: &'a Wshp,
    m: &'a MetricSpace,
    p: CostParams,
    initial: Vec<Q>,
    q_curr: Vec<Q>,
    ledger: Vec<SimStep<Q>>,
    theta_online: Vec<BTreeMap<VKey, Q>>,
    served_into: Vec<BTreeMap<VKey, Q>>,
    underage_units: Q,
    shipped: Q,
    /// Diameter of every cluster under `m`.
    diam: Vec<f64>,
    finalized: bool,
}

impl<'a, Q: Quantity> SimSession<'a, Q> {
    pub fn new(h: &'a Wshp, m: &'a MetricSpace, p: CostParams, q: Vec<Q>) -> Result<Self> {
        if h.n != m.n() || q.len() != m.n() {
            return Err(Error::Structure(format!(
                "sizes disagree: hierarchy {}, metric {}, plan {}",
                h.n,
                m.n(),
                q.len()
            )));
        }
        if q.iter().any(|x| *x < Q::zero()) {
            return Err(Error::Input("inventory must be nonnegative".into()));
        }
        let k = h.clusters.len();
        let diam = h.clusters.iter().map(|c| m.diameter(&c.members)).collect();
        Ok(Self {
            h,
            m,
            p,
            initial: q.clone(),
            q_curr: q,
            ledger: Vec::new(),
            theta_online: vec![BTreeMap::new(); k],
            served_into: vec![BTreeMap::new(); k],
            underage_units: Q::zero(),
            shipped: Q::zero(),
            diam,
            finalized: false,
        })
    }

    /// Session over a float plan; values are converted exactly.
    pub fn from_plan(h: &'a Wshp, m: &'a MetricSpace, p: CostParams, q: &[f64]) -> Result<Self> {
        let q = q.iter().map(|&x| Q::from_f64(x)).collect::<Result<Vec<_>>>()?;
        Self::new(h, m, p, q)
    }

    pub fn inventory(&self) -> &[Q] {
        &self.q_curr
    }

    pub fn initial_inventory(&self) -> &[Q] {
        &self.initial
    }

    pub fn ledger(&self) -> &[SimStep<Q>] {
        &self.ledger
    }

    /// Total inventory consumed so far, in place or shipped.
    pub fn consumed(&self) -> &Q {
        &self.shipped
    }

    pub fn underage_units(&self) -> &Q {
        &self.underage_units
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    fn has_inventory(&self, c: usize) -> bool {
        self.h.clusters[c].members.iter().any(|&j| self.q_curr[j].is_positive())
    }

    /// Inventory-bearing locations of cluster `c` with their split factors `k_j`.
    fn split(&self, c: usize) -> Vec<(usize, Q)> {
        let cl = &self.h.clusters[c];
        if cl.level == 1 {
            let active: Vec<usize> = cl.members.iter().copied().filter(|&j| self.q_curr[j].is_positive()).collect();
            let k = Q::from_count(active.len());
            return active.into_iter().map(|j| (j, k.clone())).collect();
        }
        let active: Vec<usize> = cl.children.iter().copied().filter(|&ch| self.has_inventory(ch)).collect();
        let k = Q::from_count(active.len());
        let mut out = Vec::new();
        for ch in active {
            for (j, kj) in self.split(ch) {
                out.push((j, kj * k.clone()));
            }
        }
        out
    }

    /// Processes one arriving demand vector and returns the steps taken.
    pub fn arrive(&mut self, d: &[Q]) -> Result<Vec<SimStep<Q>>> {
        if self.finalized {
            return Err(Error::State("session already finalized".into()));
        }
        if d.len() != self.q_curr.len() {
            return Err(Error::Structure(format!("demand has {} entries, expected {}", d.len(), self.q_curr.len())));
        }
        if d.iter().any(|x| *x < Q::zero()) {
            return Err(Error::Input("demand must be nonnegative".into()));
        }
        let start = self.ledger.len();
        for (i, di) in d.iter().enumerate() {
            let mut rem = di.clone();
            while rem.is_positive() {
                let step = if self.q_curr[i].is_positive() {
                    let x = min_q(rem.clone(), self.q_curr[i].clone());
                    SimStep { location: i, portion: x.clone(), sources: vec![(i, x)], level: 0, cluster: None }
                } else {
                    let Some(r) = (1..=self.h.depth()).find(|&r| self.has_inventory(self.h.cluster_of(r, i))) else {
                        break;
                    };
                    let c = self.h.cluster_of(r, i);
                    let split = self.split(c);
                    let mut delta = rem.clone();
                    for (j, kj) in &split {
                        delta = min_q(delta, kj.clone() * self.q_curr[*j].clone());
                    }
                    let sources = split.into_iter().map(|(j, kj)| (j, delta.clone() / kj)).collect();
                    SimStep { location: i, portion: delta, sources, level: r, cluster: Some(c) }
                };
                rem = rem - step.portion.clone();
                self.apply(&step);
                self.ledger.push(step);
            }
            if rem.is_positive() {
                self.underage_units = self.underage_units.clone() + rem;
            }
        }
        Ok(self.ledger[start..].to_vec())
    }

    fn apply(&mut self, step: &SimStep<Q>) {
        let i = step.location;
        for (j, a) in &step.sources {
            let j = *j;
            self.q_curr[j] = self.q_curr[j].clone() - a.clone();
            self.shipped = self.shipped.clone() + a.clone();
            for t in 1..=self.h.depth() {
                let outer = self.h.cluster_of(t, j);
                let key = if self.h.cluster_of(t, i) != outer {
                    VKey::Virtual
                } else if t == 1 {
                    VKey::Location(i)
                } else {
                    VKey::Child(self.h.cluster_of(t - 1, i))
                };
                let crosses = match key {
                    VKey::Virtual => true,
                    VKey::Location(_) => j != i,
                    VKey::Child(c) => self.h.cluster_of(t - 1, j) != c,
                };
                let served = self.served_into[outer].entry(key).or_insert_with(Q::zero);
                *served = served.clone() + a.clone();
                if crosses {
                    let on = self.theta_online[outer].entry(key).or_insert_with(Q::zero);
                    *on = on.clone() + a.clone();
                }
            }
        }
    }

    /// Smallest-common-cluster diameter `ℓ^H_ij`.
    pub fn hierarchical_distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let r = (1..=self.h.depth()).find(|&r| self.h.cluster_of(r, i) == self.h.cluster_of(r, j)).unwrap_or(self.h.depth());
        self.diam[self.h.cluster_of(r, i)]
    }

    fn cost_summary(&self) -> CostSummary {
        let under = self.underage_units.to_f64();
        let over = sum_q(&self.q_curr).to_f64();
        let (mut ship, mut ship_h) = (0.0, 0.0);
        for s in &self.ledger {
            for (j, a) in &s.sources {
                let a = a.to_f64();
                ship += a * self.m.d(*j, s.location);
                ship_h += a * self.hierarchical_distance(*j, s.location);
            }
        }
        let underage_cost = self.p.b * under;
        let overage_cost = self.p.h * over;
        CostSummary {
            underage_units: under,
            overage_units: over,
            underage_cost,
            overage_cost,
            shipping: ship,
            shipping_hierarchical: ship_h,
            total: underage_cost + overage_cost + ship,
            total_hierarchical: underage_cost + overage_cost + ship_h,
        }
    }

    /// Closes the season and charges leftover inventory as overage.
    pub fn finalize(&mut self) -> Result<CostSummary> {
        if self.finalized {
            return Err(Error::State("session already finalized".into()));
        }
        self.finalized = true;
        let s = self.cost_summary();
        debug_assert!(s.shipping <= s.shipping_hierarchical + 1e-9 * s.shipping_hierarchical.abs().max(1.0));
        Ok(s)
    }

    fn check_cluster(&self, c: usize) -> Result<()> {
        if c >= self.h.clusters.len() {
            return Err(Error::Input(format!("unknown cluster {c}")));
        }
        Ok(())
    }

    /// Amount served from inside `c` to demand arriving in a different sub-cluster.
    pub fn theta_online(&self, c: usize) -> Result<BTreeMap<VKey, Q>> {
        self.check_cluster(c)?;
        Ok(self.theta_online[c].clone())
    }

    /// `(served from inside c to C′ − q_{C′})⁺` per sub-cluster, with `q = 0`
    /// for the virtual cluster.
    pub fn theta_offline(&self, c: usize) -> Result<BTreeMap<VKey, Q>> {
        self.check_cluster(c)?;
        if !self.finalized {
            return Err(Error::State("theta_offline needs a finalized session".into()));
        }
        let mut out = BTreeMap::new();
        for (key, served) in &self.served_into[c] {
            let cap = match key {
                VKey::Virtual => Q::zero(),
                VKey::Location(i) => self.initial[*i].clone(),
                VKey::Child(ch) => sum_q(self.h.clusters[*ch].members.iter().map(|&i| &self.initial[i])),
            };
            let v = served.clone() - cap;
            out.insert(*key, if v > Q::zero() { v } else { Q::zero() });
        }
        Ok(out)
    }

    pub fn summary(&self) -> Result<SessionSummary> {
        if !self.finalized {
            return Err(Error::State("summary needs a finalized session".into()));
        }
        let mut theta = Vec::new();
        for c in 0..self.h.clusters.len() {
            let on = &self.theta_online[c];
            let off = self.theta_offline(c)?;
            let mut keys: Vec<VKey> = on.keys().chain(off.keys()).copied().collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                let online = on.get(&k).map_or(0.0, Quantity::to_f64);
                let offline = off.get(&k).map_or(0.0, Quantity::to_f64);
                if online > 0.0 || offline > 0.0 {
                    theta.push(ThetaRow { cluster: c, level: self.h.clusters[c].level, child: k, online, offline });
                }
            }
        }
        Ok(SessionSummary { costs: self.cost_summary(), steps: self.ledger.len(), theta })
    }
}

impl SimSession<'_, BigRational> {
    /// Whether every inventory, demand and ledger denominator divides
    /// `(n!)^{L·n}·M`, where `L` is the number of steps so far.
    pub fn denominators_within(&self, input_lcm: &BigInt) -> bool {
        let bound = denominator_bound(self.q_curr.len(), self.ledger.len(), input_lcm);
        let fits = |x: &BigRational| bound.is_multiple_of(x.denom());
        self.q_curr.iter().all(fits)
            && fits(&self.underage_units)
            && self.ledger.iter().all(|s| fits(&s.portion) && s.sources.iter().all(|(_, a)| fits(a)))
    }
}

/// `(n!)^{steps·n}·M`.
pub fn denominator_bound(n: usize, steps: usize, input_lcm: &BigInt) -> BigInt {
    let fact: BigInt = (1..=n.max(1)).map(BigInt::from).product();
    num_traits::pow(fact, steps * n) * input_lcm
}

/// Least common multiple of the denominators of the given values.
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// How the season's demand is split into arriving parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ArrivalMode {
    AllAtOnce,
    PerLocation,
    PerLocationShuffled,
    /// Round-robin chunks of at most `chunk` units per location.
    UnitChunks { chunk: f64 },
    /// Heuristic adversary: each chunk goes to the open location whose nearest
    /// remaining inventory is farthest away. Not the true worst case.
    GreedyAdversarial { chunk: f64 },
}

impl ArrivalMode {
    pub fn name(&self) -> &'static str {
        match self {
            ArrivalMode::AllAtOnce => "all_at_once",
            ArrivalMode::PerLocation => "per_location",
            ArrivalMode::PerLocationShuffled => "per_location_shuffled",
            ArrivalMode::UnitChunks { .. } => "unit_chunks",
            ArrivalMode::GreedyAdversarial { .. } => "greedy_adversarial",
        }
    }
}

impl FromStr for ArrivalMode {
    type Err = Error;

    /// Accepts a mode name, optionally followed by `:chunk` for the chunked modes.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let chunk = match arg {
            Some(a) => a.parse::<f64>().map_err(|e| Error::Parameter(format!("bad chunk size '{a}': {e}")))?,
            None => 1.0,
        };
        if !(chunk > 0.0 && chunk.is_finite()) {
            return Err(Error::Parameter(format!("chunk size must be positive, got {chunk}")));
        }
        let mode = match name {
            "all_at_once" => ArrivalMode::AllAtOnce,
            "per_location" => ArrivalMode::PerLocation,
            "per_location_shuffled" => ArrivalMode::PerLocationShuffled,
            "unit_chunks" => ArrivalMode::UnitChunks { chunk },
            "greedy_adversarial" => ArrivalMode::GreedyAdversarial { chunk },
            other => return Err(Error::Parameter(format!("unknown arrival mode '{other}'"))),
        };
        if arg.is_some() && !matches!(mode, ArrivalMode::UnitChunks { .. } | ArrivalMode::GreedyAdversarial { .. }) {
            return Err(Error::Parameter(format!("mode '{name}' takes no chunk size")));
        }
        Ok(mode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSequence<Q> {
    pub parts: Vec<Vec<Q>>,
}

impl<Q: Quantity> ArrivalSequence<Q> {
    /// Componentwise sum of all parts.
    pub fn total(&self, n: usize) -> Vec<Q> {
        let mut t = vec![Q::zero(); n];
        for p in &self.parts {
            for (a, b) in t.iter_mut().zip(p) {
                *a = a.clone() + b.clone();
            }
        }
        t
    }
}

fn unit<Q: Quantity>(n: usize, i: usize, x: Q) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = x;
    v
}

/// Splits `d` into an arrival sequence. `GreedyAdversarial` needs the metric
/// and the starting inventory.
pub fn adversary_sequence<Q: Quantity>(
    d: &[Q],
    mode: ArrivalMode,
    seed: u64,
    inventory: Option<(&MetricSpace, &[Q])>,
) -> Result<ArrivalSequence<Q>> {
    if d.iter().any(|x| *x < Q::zero()) {
        return Err(Error::Input("demand must be nonnegative".into()));
    }
    let n = d.len();
    let parts = match mode {
        ArrivalMode::AllAtOnce => vec![d.to_vec()],
        ArrivalMode::PerLocation => (0..n).map(|i| unit(n, i, d[i].clone())).collect(),
        ArrivalMode::PerLocationShuffled => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            order.into_iter().map(|i| unit(n, i, d[i].clone())).collect()
        }
        ArrivalMode::UnitChunks { chunk } => {
            let chunk = Q::from_f64(chunk)?;
            let mut rem = d.to_vec();
            let mut parts = Vec::new();
            while rem.iter().any(|x| x.is_positive()) {
                for i in 0..n {
                    if rem[i].is_positive() {
                        let x = min_q(chunk.clone(), rem[i].clone());
                        rem[i] = rem[i].clone() - x.clone();
                        parts.push(unit(n, i, x));
                    }
                }
            }
            parts
        }
        ArrivalMode::GreedyAdversarial { chunk } => {
            let (m, q) = inventory.ok_or_else(|| Error::Input("greedy_adversarial needs the metric and inventory".into()))?;
            if m.n() != n || q.len() != n {
                return Err(Error::Structure("demand, metric and inventory sizes disagree".into()));
            }
            greedy_adversarial(d, Q::from_f64(chunk)?, m, q)
        }
    };
    Ok(ArrivalSequence { parts })
}

fn greedy_adversarial<Q: Quantity>(d: &[Q], chunk: Q, m: &MetricSpace, q: &[Q]) -> Vec<Vec<Q>> {
    let n = d.len();
    let mut rem = d.to_vec();
    let mut stock = q.to_vec();
    let mut parts = Vec::new();
    loop {
        let nearest = |i: usize, stock: &[Q]| -> f64 {
            (0..n).filter(|&j| stock[j].is_positive()).map(|j| m.d(i, j)).fold(f64::INFINITY, f64::min)
        };
        let mut pick: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| rem[i].is_positive()) {
            let dist = nearest(i, &stock);
            if pick.is_none_or(|(_, best)| dist > best) {
                pick = Some((i, dist));
            }
        }
        let Some((i, _)) = pick else { break };
        let x = min_q(chunk.clone(), rem[i].clone());
        rem[i] = rem[i].clone() - x.clone();
        parts.push(unit(n, i, x.clone()));
        // deplete the simulated stock nearest-first
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| m.d(i, a).total_cmp(&m.d(i, b)).then(a.cmp(&b)));
        let mut need = x;
        for j in order {
            if !need.is_positive() {
                break;
            }
            if stock[j].is_positive() {
                let take = min_q(need.clone(), stock[j].clone());
                stock[j] = stock[j].clone() - take.clone();
                need = need - take;
            }
        }
    }
    parts
}

/// Runs every part of `seq` through a fresh session and finalizes it.
pub fn simulate<'a, Q: Quantity>(
    h: &'a Wshp,
    m: &'a MetricSpace,
    p: CostParams,
    q: Vec<Q>,
    seq: &ArrivalSequence<Q>,
) -> Result<(SimSession<'a, Q>, CostSummary)> {
    let mut s = SimSession::new(h, m, p, q)?;
    for part in &seq.parts {
        s.arrive(part)?;
    }
    let cost = s.finalize()?;
    Ok((s, cost))
}

/// Float-mode season cost of plan `q` against demand `d`.
pub fn online_cost(h: &Wshp, m: &MetricSpace, p: CostParams, q: &[f64], d: &[f64], mode: ArrivalMode, seed: u64) -> Result<CostSummary> {
    let seq = adversary_sequence(d, mode, seed, Some((m, q)))?;
    Ok(simulate(h, m, p, q.to_vec(), &seq)?.1)
}
