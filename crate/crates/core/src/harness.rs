//! Experiment drivers: sample-average evaluation, the offline and online gap
//! studies, the inflated-estimate sweep, demand routing to warehouses, and
//! CSV/gnuplot output.
//!
//! Every experiment is a pure function of its config. Repetition `k` draws
//! all of its randomness from a stream seeded with `seed + k`, and rows come
//! back in repetition order regardless of how many workers ran them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{sample_parametric, DemandModel, Family};
use crate::error::{Error, Result};
use crate::metric::{euclidean_metric, gen_euclidean, gen_tree, tree_metric, CostParams, MetricSpace, TreeMetricSpec};
use crate::offline::OfflineEvaluator;
use crate::online::{online_cost, ArrivalMode};
use crate::partition::{truncated_gamma_set, wshp_euclidean, wshp_tree, Wshp};
use crate::planner::{constraint_slacks, gsm_rhs, saa_optimal_baseline, solve_gsm, BaselineOptions};

/// Version tag written into every CSV header comment.
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaaEvaluation {
    pub mean: f64,
    pub per_sample: Vec<f64>,
}

/// Mean offline cost of a fixed plan over the samples. With `q` fixed the
/// sample-average LP splits into one transportation problem per sample.
pub fn saa_evaluate(m: &MetricSpace, p: &CostParams, q: &[f64], samples: &[Vec<f64>]) -> Result<SaaEvaluation> {
    if samples.is_empty() {
        return Err(Error::Input("no samples to evaluate".into()));
    }
    let eval = OfflineEvaluator::new(m, p);
    #[cfg(feature = "parallel")]
    let per_sample: Vec<f64> = {
        use rayon::prelude::*;
        samples.par_iter().map(|d| eval.cost(q, d)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_sample: Vec<f64> = samples.iter().map(|d| eval.cost(q, d)).collect::<Result<_>>()?;
    let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    Ok(SaaEvaluation { mean, per_sample })
}

/// Instance family of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    /// The same tree in every repetition.
    Tree(TreeMetricSpec),
    /// A fresh tree per repetition, branching drawn from `min_children..=max_children`.
    RandomTree {
        levels: usize,
        min_children: usize,
        max_children: usize,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Fresh uniform points in `[0, side]^dim` per repetition.
    Euclidean {
        n: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
}

fn default_c() -> f64 {
    10.0
}
fn default_lambda() -> f64 {
    2.0
}
fn default_dim() -> usize {
    2
}
fn default_side() -> f64 {
    70.0
}
fn default_b() -> f64 {
    100.0
}
fn default_h() -> f64 {
    5.0
}
fn default_m() -> usize {
    1000
}
fn default_reps() -> usize {
    50
}
fn default_families() -> Vec<Family> {
    Family::ALL.to_vec()
}
fn default_mean_range() -> (f64, f64) {
    (200.0, 1500.0)
}
fn default_cv_range() -> (f64, f64) {
    (0.3, 0.8)
}
fn default_arrival() -> String {
    "per_location".into()
}
fn default_deltas() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.2]
}
fn default_iterations() -> usize {
    2000
}
fn default_alpha() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Samples per evaluation set (and per baseline training set).
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_reps", alias = "N")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default = "default_mean_range")]
    pub mean_range: (f64, f64),
    /// Range of `σ_i/μ_i`.
    #[serde(default = "default_cv_range")]
    pub cv_range: (f64, f64),
    #[serde(default = "default_arrival")]
    pub arrival: String,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub baseline_iterations: usize,
    /// Grid separation factor for Euclidean instances.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl ExperimentConfig {
    /// Config with the standard parameters (b = 100, h = 5, m = 1000, N = 50).
    pub fn new(instance: InstanceSpec) -> Self {
        Self {
            instance,
            b: default_b(),
            h: default_h(),
            m: default_m(),
            repetitions: default_reps(),
            seed: 0,
            families: default_families(),
            mean_range: default_mean_range(),
            cv_range: default_cv_range(),
            arrival: default_arrival(),
            deltas: default_deltas(),
            baseline_iterations: default_iterations(),
            alpha: default_alpha(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<CostParams> {
        CostParams::new(self.b, self.h)
    }

    pub fn arrival_mode(&self) -> Result<ArrivalMode> {
        self.arrival.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        self.params()?;
        self.arrival_mode()?;
        if self.m == 0 || self.repetitions == 0 {
            return bad("m and repetitions must be at least 1".into());
        }
        let (lo, hi) = self.mean_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("mean range ({lo}, {hi}) must be positive and ordered"));
        }
        let (lo, hi) = self.cv_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return bad(format!("cv range ({lo}, {hi}) must lie in (0, 1]"));
        }
        if self.families.is_empty() {
            return bad("no demand families selected".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return bad(format!("delta {d} must be >= 0"));
        }
        match &self.instance {
            InstanceSpec::Euclidean { n, dim, side } => {
                if *n < 2 || *dim == 0 || !(*side > 0.0) {
                    return bad("euclidean instances need n >= 2, dim >= 1, side > 0".into());
                }
                if !(self.alpha > 2.0 * (*dim as f64).sqrt()) {
                    return bad(format!("alpha must exceed 2*sqrt(dim), got {}", self.alpha));
                }
            }
            InstanceSpec::RandomTree { levels, min_children, max_children, .. } => {
                if *levels < 2 || *min_children == 0 || max_children < min_children {
                    return bad("random trees need levels >= 2 and 1 <= min_children <= max_children".into());
                }
            }
            InstanceSpec::Tree(_) => {}
        }
        Ok(())
    }
}

/// Smallest even integer strictly above `log2(n)·α`.
pub fn balanced_grid_gamma(n: usize, alpha: f64) -> f64 {
    let bound = (n as f64).log2() * alpha;
    let mut g = 2.0 * (bound / 2.0).floor();
    while g <= bound {
        g += 2.0;
    }
    g.max(2.0)
}

/// Everything one repetition needs, drawn from its own stream.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub metric: MetricSpace,
    pub wshp: Wshp,
    pub model: DemandModel,
    /// `(training seed, evaluation seed)` for each family.
    seeds: BTreeMap<&'static str, (u64, u64)>,
}

impl Replicate {
    pub fn new(cfg: &ExperimentConfig, rep: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(rep as u64));
        let instance_seed: u64 = rng.random();
        let (metric, wshp) = match &cfg.instance {
            InstanceSpec::Tree(spec) => {
                let (m, t) = tree_metric(spec)?;
                let h = wshp_tree(&t, &m)?;
                (m, h)
            }
            InstanceSpec::RandomTree { levels, min_children, max_children, c, lambda } => {
                let spec = gen_tree(*levels, *min_children, *max_children, *c, *lambda, instance_seed)?;
                let (m, t) = tree_metric(&spec)?;
                let h = wshp_tree(&t, &m)?;
                (m, h)
            }
            InstanceSpec::Euclidean { n, dim, side } => {
                let pts = gen_euclidean(*n, *dim, *side, instance_seed);
                let m = euclidean_metric(&pts)?;
                let h = wshp_euclidean(&pts, cfg.alpha, balanced_grid_gamma(*n, cfg.alpha))?;
                (m, h)
            }
        };
        let n = metric.n();
        let (mlo, mhi) = cfg.mean_range;
        let (clo, chi) = cfg.cv_range;
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(mlo..=mhi)).collect();
        let sigma: Vec<f64> = mu.iter().map(|m| m * rng.random_range(clo..=chi)).collect();
        let model = DemandModel::new(mu, sigma)?;
        let seeds = Family::ALL.iter().map(|f| (f.name(), (rng.random(), rng.random()))).collect();
        Ok(Self { metric, wshp, model, seeds })
    }

    fn draw(&self, model: &DemandModel, family: Family, m: usize, training: bool) -> Result<Vec<Vec<f64>>> {
        let (train, eval) = self.seeds[family.name()];
        Ok(sample_parametric(model, family, m, if training { train } else { eval })?.rows)
    }

    /// Evaluation samples drawn from the true moments.
    pub fn eval_samples(&self, family: Family, m: usize) -> Result<Vec<Vec<f64>>> {
        self.draw(&self.model, family, m, false)
    }

    pub fn training_samples(&self, family: Family, m: usize) -> Result<Vec<Vec<f64>>> {
        self.draw(&self.model, family, m, true)
    }

    pub fn gsm_plan(&self, model: &DemandModel, p: &CostParams) -> Result<Vec<f64>> {
        let g = truncated_gamma_set(&self.wshp, p);
        Ok(solve_gsm(&self.wshp, &g, model, p)?.q)
    }
}

/// Runs `f` for every repetition on a worker pool capped by `DRNM_THREADS`
/// and returns results in repetition order.
pub fn run_repetitions<T, F>(repetitions: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(k) = thread_cap()? {
            builder = builder.num_threads(k);
        }
        let pool = builder.build().map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
        pool.install(|| (0..repetitions).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..repetitions).map(f).collect()
    }
}

#[cfg(feature = "parallel")]
fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("DRNM_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Parameter(format!("DRNM_THREADS must be a positive integer, got '{v}'"))),
        },
        _ => Ok(None),
    }
}

fn relative_gap(candidate: f64, base: f64) -> f64 {
    (candidate - base) / base
}

/// One (repetition, family) comparison of the GSM plan against the
/// sample-average baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub repetition: usize,
    pub family: String,
    pub n: usize,
    pub cost_candidate: f64,
    pub cost_baseline: f64,
    pub relative_gap: f64,
    pub baseline_converged: bool,
}

pub fn experiment_offline_gap(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let p = cfg.params()?;
    let per_rep = run_repetitions(cfg.repetitions, |rep| {
        let r = Replicate::new(cfg, rep)?;
        let q_gsm = r.gsm_plan(&r.model, &p)?;
        let mut rows = Vec::new();
        for &fam in &cfg.families {
            let train = r.training_samples(fam, cfg.m)?;
            let eval = r.eval_samples(fam, cfg.m)?;
            let opts = BaselineOptions { iterations: cfg.baseline_iterations, ..Default::default() };
            let base = saa_optimal_baseline(&r.metric, &p, &train, opts)?;
            let cost_candidate = saa_evaluate(&r.metric, &p, &q_gsm, &eval)?.mean;
            let cost_baseline = saa_evaluate(&r.metric, &p, &base.plan.q, &eval)?.mean;
            rows.push(ResultRow {
                repetition: rep,
                family: fam.name().into(),
                n: r.metric.n(),
                cost_candidate,
                cost_baseline,
                relative_gap: relative_gap(cost_candidate, cost_baseline),
                baseline_converged: base.converged,
            });
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineGapRow {
    pub repetition: usize,
    pub family: String,
    pub n: usize,
    pub online_cost: f64,
    pub offline_cost: f64,
    pub relative_gap: f64,
}

/// Mean online (Hierarchical Balance) cost against the offline optimum for
/// the same plan, per repetition and family.
pub fn experiment_online_gap(cfg: &ExperimentConfig) -> Result<Vec<OnlineGapRow>> {
    cfg.validate()?;
    let p = cfg.params()?;
    let mode = cfg.arrival_mode()?;
    let per_rep = run_repetitions(cfg.repetitions, |rep| {
        let r = Replicate::new(cfg, rep)?;
        let q = r.gsm_plan(&r.model, &p)?;
        let eval = OfflineEvaluator::new(&r.metric, &p);
        let mut rows = Vec::new();
        for &fam in &cfg.families {
            let samples = r.eval_samples(fam, cfg.m)?;
            let (mut on_sum, mut off_sum) = (0.0, 0.0);
            for (k, d) in samples.iter().enumerate() {
                let on = online_cost(&r.wshp, &r.metric, p, &q, d, mode, cfg.seed.wrapping_add(k as u64))?.total;
                let off = eval.cost(&q, d)?;
                if on < off - 1e-6 * off.max(1.0) {
                    return Err(Error::State(format!(
                        "repetition {rep}, sample {k}: online cost {on} below the offline optimum {off}"
                    )));
                }
                on_sum += on;
                off_sum += off;
            }
            let cnt = samples.len() as f64;
            let (online_cost, offline_cost) = (on_sum / cnt, off_sum / cnt);
            rows.push(OnlineGapRow {
                repetition: rep,
                family: fam.name().into(),
                n: r.metric.n(),
                online_cost,
                offline_cost,
                relative_gap: relative_gap(online_cost, offline_cost),
            });
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecRow {
    pub repetition: usize,
    pub family: String,
    pub n: usize,
    pub delta: f64,
    pub cost_inflated: f64,
    pub cost_true: f64,
    pub relative_extra: f64,
    /// Whether the inflated plan meets every true-parameter covering constraint.
    pub feasible: bool,
}

/// Plans from `(1+δ)`-inflated moments, evaluated on demand drawn from the
/// true moments, next to the plan from the true moments.
pub fn misspecification_sweep(cfg: &ExperimentConfig, deltas: &[f64]) -> Result<Vec<MisspecRow>> {
    cfg.validate()?;
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::Parameter(format!("delta {d} must be >= 0")));
    }
    let p = cfg.params()?;
    let per_rep = run_repetitions(cfg.repetitions, |rep| {
        let r = Replicate::new(cfg, rep)?;
        let g = truncated_gamma_set(&r.wshp, &p);
        let true_rhs = gsm_rhs(&r.wshp, &g, &r.model, &p)?;
        let q_true = r.gsm_plan(&r.model, &p)?;
        let plans = deltas
            .iter()
            .map(|&d| r.gsm_plan(&r.model.scaled(1.0 + d)?, &p))
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for &fam in &cfg.families {
            let samples = r.eval_samples(fam, cfg.m)?;
            let cost_true = saa_evaluate(&r.metric, &p, &q_true, &samples)?.mean;
            for (&delta, q) in deltas.iter().zip(&plans) {
                let cost_inflated = saa_evaluate(&r.metric, &p, q, &samples)?.mean;
                let feasible = constraint_slacks(&r.wshp, &true_rhs, &r.model, q).iter().all(|(_, s)| *s >= -1e-9);
                rows.push(MisspecRow {
                    repetition: rep,
                    family: fam.name().into(),
                    n: r.metric.n(),
                    delta,
                    cost_inflated,
                    cost_true,
                    relative_extra: relative_gap(cost_inflated, cost_true),
                    feasible,
                });
            }
        }
        Ok(rows)
    })?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Mean of `value` per family, in first-seen order.
pub fn mean_by_family<T>(rows: &[T], family: impl Fn(&T) -> &str, value: impl Fn(&T) -> f64) -> Vec<(String, f64)> {
    let mut acc: Vec<(String, f64, usize)> = Vec::new();
    for r in rows {
        let f = family(r);
        match acc.iter_mut().find(|a| a.0 == f) {
            Some(a) => {
                a.1 += value(r);
                a.2 += 1;
            }
            None => acc.push((f.to_string(), value(r), 1)),
        }
    }
    acc.into_iter().map(|(f, s, k)| (f, s / k as f64)).collect()
}

/// Aggregated moments per warehouse and the warehouse each demand point routes to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Routing {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub assignment: Vec<usize>,
}

impl Routing {
    /// Fails when some warehouse receives no demand (zero moments).
    pub fn model(&self) -> Result<DemandModel> {
        DemandModel::new(self.mu.clone(), self.sigma.clone())
    }
}

/// Routes each demand point to its nearest warehouse (lowest index on ties)
/// and adds up means and variances per warehouse.
///
/// `distances[k][w]` is the distance from demand point `k` to warehouse `w`.
pub fn map_demand_to_warehouses(
    warehouses: &MetricSpace,
    distances: &[Vec<f64>],
    mu: &[f64],
    sigma: &[f64],
) -> Result<Routing> {
    let nw = warehouses.n();
    if nw == 0 {
        return Err(Error::Input("no warehouses".into()));
    }
    if distances.len() != mu.len() || mu.len() != sigma.len() {
        return Err(Error::Structure("distances, mu and sigma must have one entry per demand point".into()));
    }
    let mut agg_mu = vec![0.0; nw];
    let mut agg_var = vec![0.0; nw];
    let mut assignment = Vec::with_capacity(mu.len());
    for (k, row) in distances.iter().enumerate() {
        if row.len() != nw {
            return Err(Error::Structure(format!("demand point {k} has {} distances, expected {nw}", row.len())));
        }
        let mut best = 0;
        for w in 1..nw {
            if row[w] < row[best] {
                best = w;
            }
        }
        agg_mu[best] += mu[k];
        agg_var[best] += sigma[k] * sigma[k];
        assignment.push(best);
    }
    Ok(Routing { mu: agg_mu, sigma: agg_var.into_iter().map(f64::sqrt).collect(), assignment })
}

/// Distances from each point to each warehouse, both given as coordinates.
pub fn coordinate_distances(warehouses: &[Vec<f64>], points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| warehouses.iter().map(|w| p.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).collect())
        .collect()
}

/// Which experiment produced a CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultKind {
    OfflineGap,
    OnlineGap,
    Misspec,
}

impl ResultKind {
    pub fn name(self) -> &'static str {
        match self {
            ResultKind::OfflineGap => "offline-gap",
            ResultKind::OnlineGap => "online-gap",
            ResultKind::Misspec => "misspec",
        }
    }

    fn metadata(self) -> &'static str {
        match self {
            ResultKind::OfflineGap => {
                "baseline=sample-average optimum (projected subgradient on a training set disjoint from the evaluation set)"
            }
            ResultKind::OnlineGap => "offline=optimal transportation cost for the same plan and sample",
            ResultKind::Misspec => "plans from (1+delta)-inflated moments; demand drawn from the true moments",
        }
    }
}

/// Writes `# drnm <kind> v<version> ...` followed by a headed CSV.
pub fn write_results_csv<W: Write, T: Serialize>(mut out: W, kind: ResultKind, rows: &[T]) -> Result<()> {
    writeln!(out, "# drnm {} v{CSV_VERSION}; {}", kind.name(), kind.metadata())?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the header comment of a results CSV.
pub fn detect_result_kind(first_line: &str) -> Result<ResultKind> {
    let rest = first_line
        .strip_prefix("# drnm ")
        .ok_or_else(|| Error::Input("missing '# drnm <kind> v<version>' header".into()))?;
    let mut words = rest.split_whitespace();
    let kind = match words.next() {
        Some("offline-gap") => ResultKind::OfflineGap,
        Some("online-gap") => ResultKind::OnlineGap,
        Some("misspec") => ResultKind::Misspec,
        other => return Err(Error::Input(format!("unknown result kind {other:?}"))),
    };
    let version = words.next().and_then(|v| v.trim_end_matches(';').strip_prefix('v')).and_then(|v| v.parse::<u32>().ok());
    if version != Some(CSV_VERSION) {
        return Err(Error::Input(format!("unsupported CSV version {version:?}, expected {CSV_VERSION}")));
    }
    Ok(kind)
}

fn read_column(path: &Path, kind: ResultKind) -> Result<Vec<(String, f64, f64)>> {
    // (family, x, y): x is delta for the sweep, 0 otherwise
    let file = std::fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Input(format!("column '{name}' missing")))
    };
    let fam = col("family")?;
    let y = match kind {
        ResultKind::OfflineGap | ResultKind::OnlineGap => col("relative_gap")?,
        ResultKind::Misspec => col("relative_extra")?,
    };
    let x = match kind {
        ResultKind::Misspec => Some(col("delta")?),
        _ => None,
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Input(format!("bad number '{s}': {e}")));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let xv = match x {
            Some(i) => num(&rec[i])?,
            None => 0.0,
        };
        out.push((rec[fam].to_string(), xv, num(&rec[y])?));
    }
    Ok(out)
}

/// Writes a gnuplot script plus one data file per family next to `out_stem`
/// and returns the paths written. Nothing is plotted in-process.
pub fn emit_plots(csv_path: &Path, out_stem: &Path) -> Result<Vec<PathBuf>> {
    let first = {
        let f = std::fs::File::open(csv_path)?;
        let mut line = String::new();
        std::io::BufReader::new(f).read_line(&mut line)?;
        line
    };
    let kind = detect_result_kind(first.trim_end())?;
    let data = read_column(csv_path, kind)?;
    if data.is_empty() {
        return Err(Error::Input("results file has no rows".into()));
    }
    let mut families: Vec<String> = Vec::new();
    for (f, _, _) in &data {
        if !families.contains(f) {
            families.push(f.clone());
        }
    }
    let stem = out_stem.file_name().and_then(|s| s.to_str()).unwrap_or("plot").to_string();
    let dir = out_stem.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut written = Vec::new();
    let mut files = Vec::new();
    for (k, fam) in families.iter().enumerate() {
        let name = format!("{stem}_{fam}.dat");
        let mut text = String::new();
        match kind {
            ResultKind::Misspec => {
                // mean extra cost per delta
                let mut by_delta: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
                for (_, x, y) in data.iter().filter(|d| &d.0 == fam) {
                    let e = by_delta.entry(x.to_bits()).or_insert((*x, 0.0, 0));
                    e.1 += y;
                    e.2 += 1;
                }
                let mut pts: Vec<(f64, f64)> = by_delta.values().map(|(x, s, c)| (*x, s / *c as f64)).collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (x, y) in pts {
                    let _ = writeln!(text, "{x} {y}");
                }
            }
            _ => {
                for (_, _, y) in data.iter().filter(|d| &d.0 == fam) {
                    let _ = writeln!(text, "{} {y}", k + 1);
                }
            }
        }
        let path = dir.join(&name);
        std::fs::write(&path, text)?;
        written.push(path);
        files.push((fam.clone(), name));
    }
    let mut gp = String::new();
    let _ = writeln!(gp, "# generated from {}", csv_path.display());
    let _ = writeln!(gp, "set terminal pngcairo size 900,600");
    let _ = writeln!(gp, "set output '{stem}.png'");
    let _ = writeln!(gp, "set grid ytics");
    match kind {
        ResultKind::Misspec => {
            let _ = writeln!(gp, "set xlabel 'delta'\nset ylabel 'relative extra cost'");
            let plots: Vec<String> =
                files.iter().map(|(f, n)| format!("'{n}' using 1:2 with linespoints title '{f}'")).collect();
            let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
        }
        _ => {
            let label = if kind == ResultKind::OfflineGap { "relative gap to baseline" } else { "online vs offline gap" };
            let _ = writeln!(gp, "set style data boxplot\nset style boxplot outliers pointtype 7\nset style fill solid 0.3");
            let _ = writeln!(gp, "set ylabel '{label}'\nunset key");
            let tics: Vec<String> = files.iter().enumerate().map(|(k, (f, _))| format!("'{f}' {}", k + 1)).collect();
            let _ = writeln!(gp, "set xtics ({})", tics.join(", "));
            let _ = writeln!(gp, "set xrange [0.5:{}.5]", files.len());
            let plots: Vec<String> = files.iter().map(|(_, n)| format!("'{n}' using 1:2")).collect();
            let _ = writeln!(gp, "plot {}", plots.join(", \\\n     "));
        }
    }
    let script = dir.join(format!("{stem}.gp"));
    std::fs::write(&script, gp)?;
    written.push(script);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::offline_cost;

    fn params() -> CostParams {
        CostParams::new(100.0, 5.0).unwrap()
    }

    #[test]
    fn saa_basics() {
        let m = MetricSpace::uniform(3, 10.0).unwrap();
        let q = vec![5.0, 1.0, 2.0];
        let z = saa_evaluate(&m, &params(), &q, &vec![q.clone(); 4]).unwrap();
        assert_eq!(z.mean, 0.0);
        let d = vec![1.0, 4.0, 0.0];
        let one = saa_evaluate(&m, &params(), &q, &[d.clone()]).unwrap();
        assert_eq!(one.mean, offline_cost(&m, &params(), &q, &d).unwrap().total_cost);
        let two = saa_evaluate(&m, &params(), &q, &[d, vec![9.0, 0.0, 0.0]]).unwrap();
        assert!((two.mean - (two.per_sample[0] + two.per_sample[1]) / 2.0).abs() < 1e-12);
        assert!(saa_evaluate(&m, &params(), &q, &[]).is_err());
    }

    #[test]
    fn grid_gamma_is_even_and_above_bound() {
        for n in [2usize, 10, 15, 20, 25, 64] {
            let g = balanced_grid_gamma(n, 3.0);
            assert_eq!(g % 2.0, 0.0);
            assert!(g > (n as f64).log2() * 3.0);
            assert!(g - 2.0 <= (n as f64).log2() * 3.0);
        }
        assert_eq!(balanced_grid_gamma(10, 3.0), 10.0);
    }

    #[test]
    fn routing_examples() {
        let w = MetricSpace::uniform(2, 5.0).unwrap();
        // coincident points
        let r = map_demand_to_warehouses(&w, &[vec![0.0, 5.0], vec![5.0, 0.0]], &[3.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.mu, r.sigma, r.assignment), (vec![3.0, 4.0], vec![1.0, 2.0], vec![0, 1]));
        // two unit points into one warehouse
        let r = map_demand_to_warehouses(&w, &[vec![1.0, 2.0], vec![0.5, 3.0]], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.mu, vec![2.0, 0.0]);
        assert!((r.sigma[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.model().is_err());
        // tie goes to the lower index
        let r = map_demand_to_warehouses(&w, &[vec![2.0, 2.0]], &[1.0], &[1.0]).unwrap();
        assert_eq!(r.assignment, vec![0]);
        let d = coordinate_distances(&[vec![0.0, 0.0], vec![4.0, 0.0]], &[vec![2.0, 0.0]]);
        assert_eq!(d, vec![vec![2.0, 2.0]]);
    }

    fn small_tree_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(InstanceSpec::Tree(TreeMetricSpec::uniform(2, &[3], 10.0, 2.0)));
        cfg.m = 20;
        cfg.repetitions = 2;
        cfg.seed = 7;
        cfg.baseline_iterations = 100;
        cfg
    }

    #[test]
    fn offline_gap_rows_and_determinism() {
        let cfg = small_tree_cfg();
        let a = experiment_offline_gap(&cfg).unwrap();
        assert_eq!(a.len(), 2 * 3);
        assert!(a.iter().all(|r| r.cost_candidate >= 0.0 && r.cost_baseline > 0.0));
        let b = experiment_offline_gap(&cfg).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_results_csv(&mut x, ResultKind::OfflineGap, &a).unwrap();
        write_results_csv(&mut y, ResultKind::OfflineGap, &b).unwrap();
        assert_eq!(x, y);
        let text = String::from_utf8(x).unwrap();
        assert!(text.starts_with("# drnm offline-gap v1;"));
        assert_eq!(detect_result_kind(text.lines().next().unwrap()).unwrap(), ResultKind::OfflineGap);
    }

    #[test]
    fn equal_costs_plan_the_means() {
        let mut cfg = small_tree_cfg();
        cfg.b = 5.0;
        let p = cfg.params().unwrap();
        let r = Replicate::new(&cfg, 0).unwrap();
        assert_eq!(r.gsm_plan(&r.model, &p).unwrap(), r.model.mu);
    }

    #[test]
    fn replicates_differ_but_repeat() {
        let cfg = small_tree_cfg();
        let a = Replicate::new(&cfg, 0).unwrap();
        let b = Replicate::new(&cfg, 1).unwrap();
        assert_ne!(a.model, b.model);
        assert_eq!(a.model, Replicate::new(&cfg, 0).unwrap().model);
        assert_ne!(a.training_samples(Family::Gamma, 3).unwrap(), a.eval_samples(Family::Gamma, 3).unwrap());
    }

    #[test]
    fn online_gap_is_nonnegative() {
        let mut cfg = ExperimentConfig::new(InstanceSpec::Euclidean { n: 6, dim: 2, side: 70.0 });
        cfg.m = 10;
        cfg.repetitions = 2;
        let rows = experiment_online_gap(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.relative_gap >= -1e-9));
    }

    #[test]
    fn misspec_zero_delta_matches_true_plan() {
        let mut cfg = ExperimentConfig::new(InstanceSpec::Euclidean { n: 5, dim: 2, side: 70.0 });
        cfg.m = 10;
        cfg.repetitions = 2;
        let rows = misspecification_sweep(&cfg, &[0.0, 0.1]).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2);
        for r in &rows {
            assert!(r.feasible);
            if r.delta == 0.0 {
                assert_eq!(r.cost_inflated, r.cost_true);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_tree_cfg();
        cfg.cv_range = (0.3, 1.2);
        assert!(cfg.validate().is_err());
        let mut cfg = small_tree_cfg();
        cfg.arrival = "teleport".into();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(r#"{"instance": {"kind": "euclidean", "n": 10}, "N": 3, "m": 5}"#).unwrap();
        assert_eq!((cfg.repetitions, cfg.b, cfg.h), (3, 100.0, 5.0));
        let cfg = ExperimentConfig::from_json(
            r#"{"instance": {"kind": "tree", "K": 3, "children": [2, 2], "c": 10, "lambda": 2}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.instance, InstanceSpec::Tree(_)));
    }

    #[test]
    fn plots_for_each_kind() {
        let dir = std::env::temp_dir().join(format!("drnm-plots-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rows = vec![
            MisspecRow { repetition: 0, family: "normal".into(), n: 2, delta: 0.0, cost_inflated: 1.0, cost_true: 1.0, relative_extra: 0.0, feasible: true },
            MisspecRow { repetition: 0, family: "normal".into(), n: 2, delta: 0.1, cost_inflated: 1.1, cost_true: 1.0, relative_extra: 0.1, feasible: true },
        ];
        let csv_path = dir.join("m.csv");
        let mut buf = Vec::new();
        write_results_csv(&mut buf, ResultKind::Misspec, &rows).unwrap();
        std::fs::write(&csv_path, buf).unwrap();
        let out = emit_plots(&csv_path, &dir.join("m")).unwrap();
        let script = std::fs::read_to_string(out.last().unwrap()).unwrap();
        assert!(script.contains("'m_normal.dat' using 1:2 with linespoints"));
        assert_eq!(std::fs::read_to_string(&out[0]).unwrap(), "0 0\n0.1 0.1\n");

        std::fs::write(&csv_path, "repetition,family\n0,normal\n").unwrap();
        assert!(emit_plots(&csv_path, &dir.join("m")).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
