//! Inventory planning: the laminar covering LP that sets per-location
//! safety stock, its simplex cross-check, and a sample-average baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::demand::{safety_stock, DemandModel};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::metric::{CostParams, MetricSpace};
use crate::offline::OfflineEvaluator;
use crate::partition::{GammaSet, Wshp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryPlan {
    pub q: Vec<f64>,
}

impl InventoryPlan {
    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }
}

/// Right-hand sides of the covering constraints, expressed as required
/// safety stock `q_S − μ_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringRhs {
    pub cluster_rhs: BTreeMap<usize, f64>,
    pub location_rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Constraint {
    Cluster(usize),
    Location(usize),
}

pub fn gsm_rhs(h: &Wshp, g: &GammaSet, model: &DemandModel, p: &CostParams) -> Result<CoveringRhs> {
    if model.n() != h.n {
        return Err(Error::Structure(format!("model has {} locations, hierarchy {}", model.n(), h.n)));
    }
    let mut cluster_rhs = BTreeMap::new();
    for (&c, &bc) in &g.virtual_underage {
        let cl = h
            .clusters
            .get(c)
            .ok_or_else(|| Error::Structure(format!("cluster {c} not in hierarchy")))?;
        cluster_rhs.insert(c, safety_stock(model.sigma_set(&cl.members), bc, p.h));
    }
    let all: Vec<usize> = (0..h.n).collect();
    let total_sigma: f64 = model.sigma.iter().sum();
    let global = safety_stock(model.sigma_set(&all), p.b, p.h);
    let location_rhs = model.sigma.iter().map(|s| s / total_sigma * global).collect();
    Ok(CoveringRhs { cluster_rhs, location_rhs })
}

/// Signed slack of every constraint at `q` (negative means violated).
pub fn constraint_slacks(h: &Wshp, rhs: &CoveringRhs, model: &DemandModel, q: &[f64]) -> Vec<(Constraint, f64)> {
    let mut out = Vec::with_capacity(rhs.cluster_rhs.len() + q.len());
    for (&c, &r) in &rhs.cluster_rhs {
        let stock: f64 = h.clusters[c].members.iter().map(|&i| q[i] - model.mu[i]).sum();
        out.push((Constraint::Cluster(c), stock - r));
    }
    for (i, &r) in rhs.location_rhs.iter().enumerate() {
        out.push((Constraint::Location(i), q[i] - model.mu[i] - r));
    }
    out
}

/// Minimal covering plan, built bottom-up: start every location at its own
/// requirement, then top up each deficient cluster, spreading the deficit in
/// proportion to `σ_i`. Because the clusters form a laminar family, stock
/// added inside a cluster also counts for all its ancestors, so the total is
/// optimal.
pub fn solve_gsm(h: &Wshp, g: &GammaSet, model: &DemandModel, p: &CostParams) -> Result<InventoryPlan> {
    let rhs = gsm_rhs(h, g, model, p)?;
    Ok(solve_covering(h, &rhs, model))
}

pub fn solve_covering(h: &Wshp, rhs: &CoveringRhs, model: &DemandModel) -> InventoryPlan {
    let mut q: Vec<f64> = model.mu.iter().zip(&rhs.location_rhs).map(|(m, r)| m + r).collect();
    let mut order: Vec<usize> = rhs.cluster_rhs.keys().copied().collect();
    order.sort_by_key(|&c| (h.clusters[c].level, c));
    for c in order {
        let members = &h.clusters[c].members;
        let stock: f64 = members.iter().map(|&i| q[i] - model.mu[i]).sum();
        let deficit = rhs.cluster_rhs[&c] - stock;
        if deficit > 0.0 {
            let weight: f64 = members.iter().map(|&i| model.sigma[i]).sum();
            for &i in members {
                q[i] += deficit * model.sigma[i] / weight;
            }
        }
    }
    InventoryPlan { q }
}

/// `h·(q_X − μ_X)`, the covering LP objective.
pub fn safety_stock_cost(q: &[f64], model: &DemandModel, p: &CostParams) -> f64 {
    p.h * (q.iter().sum::<f64>() - model.mu.iter().sum::<f64>())
}

/// Constraints that hold with equality (relative tolerance 1e-9).
pub fn binding_constraints(h: &Wshp, rhs: &CoveringRhs, model: &DemandModel, q: &[f64]) -> Vec<Constraint> {
    let scale = model.mu.iter().fold(1.0f64, |a, b| a.max(*b));
    constraint_slacks(h, rhs, model, q)
        .into_iter()
        .filter(|(_, s)| s.abs() <= 1e-9 * scale)
        .map(|(c, _)| c)
        .collect()
}

/// Solves the same covering LP with the general dense simplex.
pub fn lp_oracle_gsm(h: &Wshp, g: &GammaSet, model: &DemandModel, p: &CostParams) -> Result<InventoryPlan> {
    let rhs = gsm_rhs(h, g, model, p)?;
    let n = h.n;
    // variables are the safety stocks s_i = q_i − μ_i ≥ 0
    let mut lp = LinearProgram::new(vec![p.h; n]);
    for (&c, &r) in &rhs.cluster_rhs {
        let terms: Vec<(usize, f64)> = h.clusters[c].members.iter().map(|&i| (i, 1.0)).collect();
        lp.add_sparse(&terms, Relation::Ge, r);
    }
    for (i, &r) in rhs.location_rhs.iter().enumerate() {
        lp.add_sparse(&[(i, 1.0)], Relation::Ge, r);
    }
    let sol = lp.solve()?;
    Ok(InventoryPlan { q: sol.x.iter().zip(&model.mu).map(|(s, m)| s + m).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    pub plan: InventoryPlan,
    /// Mean offline cost of the plan over the training samples.
    pub objective: f64,
    pub iterations: usize,
    /// False when the best value was still moving at the end of the budget.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineOptions {
    pub iterations: usize,
    /// Step scale `c` in `c/√t`; `None` uses a tenth of the mean sample demand.
    pub step: Option<f64>,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { iterations: 2000, step: None }
    }
}

fn mean_cost_and_subgradient(eval: &OfflineEvaluator, q: &[f64], samples: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = q.len();
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, Vec<f64>)> = {
        use rayon::prelude::*;
        samples.par_iter().map(|d| eval.cost_and_subgradient(q, d)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, Vec<f64>)> = samples.iter().map(|d| eval.cost_and_subgradient(q, d)).collect::<Result<_>>()?;
    let m = samples.len() as f64;
    let mut grad = vec![0.0; n];
    let mut cost = 0.0;
    for (c, g) in parts {
        cost += c;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|x| *x /= m);
    Ok((cost / m, grad))
}

/// Plan minimising the empirical mean of `C(q, d)` over the samples, by
/// projected subgradient descent with normalised steps `c/√t`, started at the
/// sample means. Returns the best iterate seen.
pub fn saa_optimal_baseline(
    m: &MetricSpace,
    p: &CostParams,
    samples: &[Vec<f64>],
    opts: BaselineOptions,
) -> Result<BaselineResult> {
    if samples.is_empty() {
        return Err(Error::Input("baseline needs at least one sample".into()));
    }
    let n = m.n();
    if let Some(bad) = samples.iter().position(|d| d.len() != n) {
        return Err(Error::Structure(format!("sample {bad} has the wrong length")));
    }
    let eval = OfflineEvaluator::new(m, p);
    let cnt = samples.len() as f64;
    let mut q: Vec<f64> = (0..n).map(|i| samples.iter().map(|d| d[i]).sum::<f64>() / cnt).collect();
    let step = opts.step.unwrap_or_else(|| 0.1 * q.iter().sum::<f64>() / n as f64).max(f64::MIN_POSITIVE);
    let mut best_q = q.clone();
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    let budget = opts.iterations.max(1);
    let checkpoint = budget * 3 / 4;
    let mut best_at_checkpoint = f64::INFINITY;
    for t in 1..=budget {
        iterations = t;
        let (cost, g) = mean_cost_and_subgradient(&eval, &q, samples)?;
        if cost < best {
            best = cost;
            best_q = q.clone();
        }
        if t == checkpoint {
            best_at_checkpoint = best;
        }
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Ok(BaselineResult { plan: InventoryPlan { q }, objective: cost, iterations, converged: true });
        }
        let eta = step / (t as f64).sqrt() / norm;
        for (qi, gi) in q.iter_mut().zip(&g) {
            *qi = (*qi - eta * gi).max(0.0);
        }
    }
    let final_cost = eval_mean(&eval, &q, samples)?;
    if final_cost < best {
        best = final_cost;
        best_q = q;
    }
    // settled when the last quarter of the budget improved the best value by under 1e-4
    let converged = best_at_checkpoint - best <= 1e-4 * best.abs().max(1e-12);
    Ok(BaselineResult { plan: InventoryPlan { q: best_q }, objective: best, iterations, converged })
}

fn eval_mean(eval: &OfflineEvaluator, q: &[f64], samples: &[Vec<f64>]) -> Result<f64> {
    let mut s = 0.0;
    for d in samples {
        s += eval.cost(q, d)?;
    }
    Ok(s / samples.len() as f64)
}
