use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use drnm::demand::{
    read_samples_csv, sample_parametric, tail_lambda, worst_case_distribution, write_samples_csv, DemandModel, Family,
};
use drnm::harness::{
    emit_plots, experiment_offline_gap, experiment_online_gap, misspecification_sweep, write_results_csv, ExperimentConfig,
    ResultKind,
};
use drnm::metric::{gen_euclidean, gen_tree, validate_metric, CostParams, Geometry, Instance, LevelBranching, ResolvedInstance, TreeMetricSpec};
use drnm::offline::{cost_upper_bound_ch, offline_cost, tree_closed_form_cost};
use drnm::online::{adversary_sequence, ArrivalMode, Quantity, SimSession};
use drnm::partition::{
    gamma_set, general_gamma, truncated_gamma_set, verify_wshp, wshp_euclidean, wshp_general, wshp_tree, wshp_uniform, Wshp,
};
use drnm::planner::{binding_constraints, gsm_rhs, solve_gsm, InventoryPlan};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "drnm", version, about = "Robust multi-location inventory planning and fulfillment on a metric")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate or generate metric instances.
    #[command(subcommand)]
    Metric(MetricCmd),
    /// Build or check hierarchical partitions.
    #[command(subcommand)]
    Partition(PartitionCmd),
    /// Draw demand samples.
    #[command(subcommand)]
    Demand(DemandCmd),
    /// Compute inventory plans.
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Evaluate a plan against demand.
    #[command(subcommand)]
    Cost(CostCmd),
    /// Run the online fulfillment policy over demand samples.
    Simulate(SimulateArgs),
    /// Run experiments and render their results.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Subcommand)]
enum MetricCmd {
    /// Check the metric axioms of an instance file.
    Validate { instance: PathBuf },
    /// Generate a tree-metric instance.
    GenTree(GenTreeArgs),
    /// Generate uniform random points.
    GenEuclidean(GenEuclideanArgs),
}

#[derive(Args)]
struct GenTreeArgs {
    /// Number of levels K (leaves are level 1).
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Fixed branching per level, top-down, e.g. "2,3". Overrides the random range.
    #[arg(long, value_delimiter = ',')]
    children: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2)]
    min_children: usize,
    #[arg(long, default_value_t = 3)]
    max_children: usize,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenEuclideanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 70.0)]
    side: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum PartitionKind {
    Uniform,
    Euclidean,
    General,
    Tree,
}

#[derive(Subcommand)]
enum PartitionCmd {
    /// Build a hierarchy for an instance.
    Build {
        instance: PathBuf,
        /// Construction; defaults to tree for tree instances, euclidean for points, general otherwise.
        #[arg(long, value_enum)]
        kind: Option<PartitionKind>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a hierarchy against the separation conditions.
    Verify {
        instance: PathBuf,
        partition: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Subcommand)]
enum DemandCmd {
    /// Sample demand vectors matched to the instance's mu and sigma.
    Sample {
        instance: PathBuf,
        /// normal, lognormal, gamma or worst-case
        #[arg(long, default_value = "normal")]
        family: String,
        /// Tail level for the worst-case distribution.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct CostArgs {
    /// Per-unit underage cost.
    #[arg(long, default_value_t = 100.0)]
    b: f64,
    /// Per-unit overage cost.
    #[arg(long, default_value_t = 5.0)]
    h: f64,
}

impl CostArgs {
    fn params(self) -> Result<CostParams> {
        Ok(CostParams::new(self.b, self.h)?)
    }
}

#[derive(Subcommand)]
enum PlanCmd {
    /// Covering-LP plan from the instance's mu and sigma.
    Gsm {
        instance: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[command(flatten)]
        costs: CostArgs,
        /// Cap parent diameters at b + h when pricing clusters.
        #[arg(long)]
        truncate: bool,
        /// Plan from moments inflated by (1 + delta).
        #[arg(long, default_value_t = 0.0)]
        inflate: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CostInputs {
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// CSV with one demand vector per row.
    #[arg(long)]
    demand: PathBuf,
    #[command(flatten)]
    costs: CostArgs,
}

#[derive(Subcommand)]
enum CostCmd {
    /// Optimal offline fulfillment cost.
    Offline(CostInputs),
    /// Hierarchical upper bound C^H.
    Ch {
        #[command(flatten)]
        inputs: CostInputs,
        #[arg(long)]
        partition: PathBuf,
    },
    /// Closed-form cost on a tree instance.
    Tree(CostInputs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// CSV with one demand vector per row; each row is one season.
    #[arg(long)]
    demand: PathBuf,
    /// all_at_once, per_location, per_location_shuffled, unit_chunks[:size], greedy_adversarial[:size]
    #[arg(long, default_value = "per_location")]
    mode: ArrivalMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use floating point instead of exact rationals.
    #[arg(long)]
    float: bool,
    #[command(flatten)]
    costs: CostArgs,
    /// JSON-lines trace, one line per fulfillment step.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Where to write the summary JSON (stdout by default).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// GSM plan against the sample-average baseline.
    OfflineGap(ExperimentArgs),
    /// Online policy against the offline optimum.
    OnlineGap(ExperimentArgs),
    /// Plans from inflated estimates.
    Misspec(ExperimentArgs),
    /// Write a gnuplot script and data files for a results CSV.
    Plot {
        results: PathBuf,
        /// Output stem; files are written as <stem>.gp and <stem>_<family>.dat.
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<(Instance, ResolvedInstance)> {
    let inst = Instance::from_json(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let resolved = inst.resolve().with_context(|| format!("building the metric of {}", path.display()))?;
    Ok((inst, resolved))
}

fn load_partition(path: &Path) -> Result<Wshp> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing partition {}", path.display()))
}

fn load_plan(path: &Path) -> Result<InventoryPlan> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing plan {}", path.display()))
}

fn load_demand(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = read_samples_csv(File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
    if rows.is_empty() {
        bail!("{} has no demand rows", path.display());
    }
    Ok(rows)
}

fn model_of(inst: &Instance) -> Result<DemandModel> {
    match (&inst.mu, &inst.sigma) {
        (Some(mu), Some(sigma)) => Ok(DemandModel::new(mu.clone(), sigma.clone())?),
        _ => bail!("the instance file needs \"mu\" and \"sigma\" arrays"),
    }
}

/// Opens `path`, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn metric_cmd(cmd: MetricCmd) -> Result<ExitCode> {
    match cmd {
        MetricCmd::Validate { instance } => {
            let inst = Instance::from_json(&read_text(&instance)?)?;
            let violations = match &inst.geometry {
                Geometry::Matrix { n, dist } => {
                    if dist.len() != *n {
                        bail!("declared n={n} but the matrix has {} rows", dist.len());
                    }
                    validate_metric(dist)?
                }
                _ => validate_metric(&inst.resolve()?.metric.to_rows())?,
            };
            let valid = violations.is_empty();
            write_json(None, &json!({ "valid": valid, "violations": violations }))?;
            Ok(if valid { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        MetricCmd::GenTree(a) => {
            let spec = match a.children {
                Some(ch) => TreeMetricSpec {
                    levels: a.levels,
                    children: ch.into_iter().map(LevelBranching::Uniform).collect(),
                    c: a.c,
                    lambda: a.lambda,
                },
                None => gen_tree(a.levels, a.min_children, a.max_children, a.c, a.lambda, a.seed)?,
            };
            let inst = Instance { geometry: Geometry::Tree { tree: spec }, mu: None, sigma: None };
            inst.resolve().context("generated tree is invalid")?;
            write_json(a.output.as_deref(), &inst)?;
            Ok(ExitCode::SUCCESS)
        }
        MetricCmd::GenEuclidean(a) => {
            let points = gen_euclidean(a.n, a.dim, a.side, a.seed);
            let inst = Instance { geometry: Geometry::Points { points }, mu: None, sigma: None };
            write_json(a.output.as_deref(), &inst)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn partition_cmd(cmd: PartitionCmd) -> Result<ExitCode> {
    match cmd {
        PartitionCmd::Build { instance, kind, alpha, gamma, output } => {
            let (_, r) = load_instance(&instance)?;
            let kind = kind.unwrap_or(if r.tree.is_some() {
                PartitionKind::Tree
            } else if r.points.is_some() {
                PartitionKind::Euclidean
            } else {
                PartitionKind::General
            });
            let h = match kind {
                PartitionKind::Uniform => wshp_uniform(&r.metric, alpha.unwrap_or(2.0), gamma.unwrap_or(3.0))?,
                PartitionKind::Euclidean => {
                    let pts = r.points.as_ref().ok_or_else(|| anyhow!("euclidean partitions need a points instance"))?;
                    let alpha = alpha.unwrap_or(3.0);
                    let gamma = gamma.unwrap_or_else(|| drnm::harness::balanced_grid_gamma(pts.len(), alpha));
                    wshp_euclidean(pts, alpha, gamma)?
                }
                PartitionKind::General => {
                    if alpha.is_some() {
                        bail!("the general construction fixes alpha; pass only --gamma");
                    }
                    wshp_general(&r.metric, gamma)?
                }
                PartitionKind::Tree => {
                    let t = r.tree.as_ref().ok_or_else(|| anyhow!("tree partitions need a tree instance"))?;
                    wshp_tree(t, &r.metric)?
                }
            };
            write_json(output.as_deref(), &h)?;
            Ok(ExitCode::SUCCESS)
        }
        PartitionCmd::Verify { instance, partition, alpha, beta, gamma } => {
            let (_, r) = load_instance(&instance)?;
            let h = load_partition(&partition)?;
            let (a, b, g) = (alpha.unwrap_or(h.alpha), beta.unwrap_or(h.beta), gamma.unwrap_or(h.gamma));
            let violations = verify_wshp(&r.metric, &h, a, b, g)?;
            let valid = violations.is_empty();
            write_json(
                None,
                &json!({
                    "valid": valid,
                    "alpha": a, "beta": b, "gamma": g,
                    "levels": h.depth(),
                    "balanced_policy_condition": h.satisfies_hb_condition(),
                    "general_gamma_default": general_gamma(h.n),
                    "violations": violations,
                }),
            )?;
            Ok(if valid { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn demand_cmd(cmd: DemandCmd) -> Result<ExitCode> {
    let DemandCmd::Sample { instance, family, alpha, m, seed, output } = cmd;
    let (inst, _) = load_instance(&instance)?;
    let model = model_of(&inst)?;
    let rows = if family == "worst-case" {
        if !(alpha >= 0.0) {
            bail!("--alpha must be >= 0");
        }
        let all: Vec<usize> = (0..model.n()).collect();
        let lambda = tail_lambda(alpha, model.nu());
        worst_case_distribution(&model, &all, lambda)?.sample(m, seed)
    } else {
        let s = sample_parametric(&model, family.parse::<Family>()?, m, seed)?;
        if s.clipped > 0 {
            eprintln!("note: {} negative normal draws were clipped to 0", s.clipped);
        }
        s.rows
    };
    let mut out = sink(output.as_deref())?;
    write_samples_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn plan_cmd(cmd: PlanCmd) -> Result<ExitCode> {
    let PlanCmd::Gsm { instance, partition, costs, truncate, inflate, output } = cmd;
    let (inst, r) = load_instance(&instance)?;
    let h = load_partition(&partition)?;
    if h.n != r.metric.n() {
        bail!("partition covers {} locations, instance has {}", h.n, r.metric.n());
    }
    let p = costs.params()?;
    if !(inflate >= 0.0) {
        bail!("--inflate must be >= 0");
    }
    let model = model_of(&inst)?.scaled(1.0 + inflate)?;
    let g = if truncate { truncated_gamma_set(&h, &p) } else { gamma_set(&h, &p) };
    let plan = solve_gsm(&h, &g, &model, &p)?;
    let rhs = gsm_rhs(&h, &g, &model, &p)?;
    let binding = binding_constraints(&h, &rhs, &model, &plan.q);
    write_json(
        output.as_deref(),
        &json!({
            "q": plan.q,
            "total": plan.total(),
            "safety_stock_cost": p.h * (plan.total() - model.mu.iter().sum::<f64>()),
            "gamma": g.virtual_underage,
            "binding": binding,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Breakdown {
    overage: f64,
    underage: f64,
    shipping: f64,
    total: f64,
}

fn cost_cmd(cmd: CostCmd) -> Result<ExitCode> {
    let (inputs, partition, which) = match cmd {
        CostCmd::Offline(i) => (i, None, "offline"),
        CostCmd::Ch { inputs, partition } => (inputs, Some(partition), "ch"),
        CostCmd::Tree(i) => (i, None, "tree"),
    };
    let (inst, r) = load_instance(&inputs.instance)?;
    let plan = load_plan(&inputs.plan)?;
    let rows = load_demand(&inputs.demand)?;
    let p = inputs.costs.params()?;
    let q = &plan.q;
    let mut per_sample = Vec::with_capacity(rows.len());
    let mut below_mean = false;
    for d in &rows {
        let qx: f64 = q.iter().sum();
        let dx: f64 = d.iter().sum();
        let over = (qx - dx).max(0.0);
        let under = (dx - qx).max(0.0);
        let b = match which {
            "offline" => {
                let f = offline_cost(&r.metric, &p, q, d)?;
                Breakdown { overage: p.h * f.overage, underage: p.b * f.underage, shipping: f.shipping_cost, total: f.total_cost }
            }
            "ch" => {
                let h = load_partition(partition.as_ref().unwrap())?;
                let ub = cost_upper_bound_ch(&h, &p, q, d, inst.mu.as_deref())?;
                below_mean |= ub.below_mean;
                let base = p.h * over + p.b * under;
                Breakdown { overage: p.h * over, underage: p.b * under, shipping: ub.value - base, total: ub.value }
            }
            _ => {
                let t = r.tree.as_ref().ok_or_else(|| anyhow!("the tree cost needs a tree instance"))?;
                let total = tree_closed_form_cost(t, &p, q, d)?;
                let base = p.h * over + p.b * under;
                Breakdown { overage: p.h * over, underage: p.b * under, shipping: total - base, total }
            }
        };
        per_sample.push(b);
    }
    let k = per_sample.len() as f64;
    let mean = Breakdown {
        overage: per_sample.iter().map(|b| b.overage).sum::<f64>() / k,
        underage: per_sample.iter().map(|b| b.underage).sum::<f64>() / k,
        shipping: per_sample.iter().map(|b| b.shipping).sum::<f64>() / k,
        total: per_sample.iter().map(|b| b.total).sum::<f64>() / k,
    };
    let mut out = json!({ "kind": which, "mean": mean, "samples": per_sample });
    if which == "ch" {
        out["below_mean"] = json!(below_mean);
        if below_mean {
            eprintln!("warning: plan is below the mean somewhere; C^H is not guaranteed to bound the cost");
        }
    }
    write_json(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_seasons<Q: Quantity>(a: &SimulateArgs, r: &ResolvedInstance, h: &Wshp, plan: &InventoryPlan, rows: &[Vec<f64>]) -> Result<()> {
    let p = a.costs.params()?;
    let mut trace = match &a.output {
        Some(path) => Some(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
        None => None,
    };
    let mut seasons = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let q = plan.q.iter().map(|&x| Q::from_f64(x)).collect::<drnm::Result<Vec<Q>>>()?;
        let d = row.iter().map(|&x| Q::from_f64(x)).collect::<drnm::Result<Vec<Q>>>()?;
        let seq = adversary_sequence(&d, a.mode, a.seed.wrapping_add(k as u64), Some((&r.metric, &q)))?;
        let mut s = SimSession::new(h, &r.metric, p, q)?;
        for (t, part) in seq.parts.iter().enumerate() {
            let steps = s.arrive(part)?;
            if let Some(w) = trace.as_mut() {
                for st in steps {
                    serde_json::to_writer(&mut *w, &json!({ "sample": k, "part": t, "step": st.record() }))?;
                    writeln!(w)?;
                }
            }
        }
        s.finalize()?;
        seasons.push(json!({ "sample": k, "summary": s.summary()? }));
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }
    write_json(
        a.summary.as_deref(),
        &json!({ "mode": a.mode.name(), "arithmetic": if a.float { "float" } else { "exact" }, "seasons": seasons }),
    )
}

fn simulate_cmd(a: SimulateArgs) -> Result<ExitCode> {
    let (_, r) = load_instance(&a.instance)?;
    let h = load_partition(&a.partition)?;
    let plan = load_plan(&a.plan)?;
    let rows = load_demand(&a.demand)?;
    if plan.q.len() != r.metric.n() || h.n != r.metric.n() {
        bail!("instance, plan and partition sizes disagree");
    }
    if a.float {
        run_seasons::<f64>(&a, &r, &h, &plan, &rows)?;
    } else {
        run_seasons::<BigRational>(&a, &r, &h, &plan, &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment_cmd(cmd: ExperimentCmd) -> Result<ExitCode> {
    let load = |path: &Path| -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&read_text(path)?).with_context(|| format!("config {}", path.display()))
    };
    match cmd {
        ExperimentCmd::OfflineGap(a) => {
            let rows = experiment_offline_gap(&load(&a.config)?)?;
            write_results_csv(sink(a.output.as_deref())?, ResultKind::OfflineGap, &rows)?;
        }
        ExperimentCmd::OnlineGap(a) => {
            let rows = experiment_online_gap(&load(&a.config)?)?;
            write_results_csv(sink(a.output.as_deref())?, ResultKind::OnlineGap, &rows)?;
        }
        ExperimentCmd::Misspec(a) => {
            let cfg = load(&a.config)?;
            let rows = misspecification_sweep(&cfg, &cfg.deltas)?;
            write_results_csv(sink(a.output.as_deref())?, ResultKind::Misspec, &rows)?;
        }
        ExperimentCmd::Plot { results, output } => {
            for path in emit_plots(&results, &output)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Metric(c) => metric_cmd(c),
        Command::Partition(c) => partition_cmd(c),
        Command::Demand(c) => demand_cmd(c),
        Command::Plan(c) => plan_cmd(c),
        Command::Cost(c) => cost_cmd(c),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Experiment(c) => experiment_cmd(c),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
