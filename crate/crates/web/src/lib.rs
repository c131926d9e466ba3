//! Browser bindings: random warehouses on a square, their hierarchy, a
//! covering-LP stock plan and one season of online fulfillment.

use drnm::demand::{sample_parametric, DemandModel, Family};
use drnm::harness::balanced_grid_gamma;
use drnm::metric::{euclidean_metric, gen_euclidean, CostParams, MetricSpace};
use drnm::offline::offline_cost;
use drnm::online::{adversary_sequence, ArrivalMode, SimSession};
use drnm::partition::{truncated_gamma_set, wshp_euclidean, Wshp};
use drnm::planner::solve_gsm;
use serde_json::json;
use wasm_bindgen::prelude::*;

const SIDE: f64 = 70.0;
const ALPHA: f64 = 3.0;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    points: Vec<Vec<f64>>,
    metric: MetricSpace,
    wshp: Wshp,
    model: Option<DemandModel>,
    params: CostParams,
    q: Option<Vec<f64>>,
}

impl Demo {
    pub fn create(n: usize, seed: u64) -> Result<Demo, String> {
        if !(2..=200).contains(&n) {
            return Err(format!("pick between 2 and 200 warehouses, got {n}"));
        }
        let points = gen_euclidean(n, 2, SIDE, seed);
        let metric = euclidean_metric(&points).map_err(|e| e.to_string())?;
        let wshp = wshp_euclidean(&points, ALPHA, balanced_grid_gamma(n, ALPHA)).map_err(|e| e.to_string())?;
        let params = CostParams::new(100.0, 5.0).unwrap();
        Ok(Demo { points, metric, wshp, model: None, params, q: None })
    }

    /// Points plus every cluster (level, members) as JSON.
    pub fn layout(&self) -> String {
        let clusters: Vec<_> = self
            .wshp
            .clusters
            .iter()
            .map(|c| json!({ "level": c.level, "members": c.members }))
            .collect();
        json!({ "side": SIDE, "points": self.points, "levels": self.wshp.depth(), "clusters": clusters }).to_string()
    }

    /// Draws means in `[200, 1500]` and plans stock for coefficient of variation `cv`.
    pub fn make_plan(&mut self, b: f64, h: f64, cv: f64, seed: u64) -> Result<String, String> {
        let params = CostParams::new(b, h).map_err(|e| e.to_string())?;
        if !(cv > 0.0 && cv.is_finite()) {
            return Err("coefficient of variation must be positive".into());
        }
        let n = self.points.len();
        let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mu: Vec<f64> = (0..n)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                200.0 + 1300.0 * (x >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let sigma = mu.iter().map(|m| m * cv).collect();
        let model = DemandModel::new(mu, sigma).map_err(|e| e.to_string())?;
        let g = truncated_gamma_set(&self.wshp, &params);
        let plan = solve_gsm(&self.wshp, &g, &model, &params).map_err(|e| e.to_string())?;
        let out = json!({ "mu": model.mu, "q": plan.q, "total": plan.total(), "mean_total": model.mu.iter().sum::<f64>() });
        self.model = Some(model);
        self.params = params;
        self.q = Some(plan.q);
        Ok(out.to_string())
    }

    /// One season: sampled demand, the online policy's shipments and both costs.
    pub fn run_season(&self, family: &str, mode: &str, seed: u64) -> Result<String, String> {
        let (model, q) = match (&self.model, &self.q) {
            (Some(m), Some(q)) => (m, q),
            _ => return Err("make a plan first".into()),
        };
        let family: Family = family.parse().map_err(|e: drnm::Error| e.to_string())?;
        let mode: ArrivalMode = mode.parse().map_err(|e: drnm::Error| e.to_string())?;
        let d = sample_parametric(model, family, 1, seed).map_err(|e| e.to_string())?.rows.remove(0);
        let seq = adversary_sequence(&d, mode, seed, Some((&self.metric, q.as_slice()))).map_err(|e| e.to_string())?;
        let mut s = SimSession::new(&self.wshp, &self.metric, self.params, q.clone()).map_err(|e| e.to_string())?;
        let mut moves = Vec::new();
        for part in &seq.parts {
            for step in s.arrive(part).map_err(|e| e.to_string())? {
                for (from, amt) in &step.sources {
                    if *from != step.location {
                        moves.push(json!({ "from": from, "to": step.location, "amount": amt, "level": step.level }));
                    }
                }
            }
        }
        let online = s.finalize().map_err(|e| e.to_string())?;
        let offline = offline_cost(&self.metric, &self.params, q, &d).map_err(|e| e.to_string())?;
        Ok(json!({
            "demand": d,
            "moves": moves,
            "online": online,
            "offline": { "total": offline.total_cost, "shipping": offline.shipping_cost },
            "gap": online.total / offline.total_cost.max(f64::MIN_POSITIVE) - 1.0,
        })
        .to_string())
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, seed: u32) -> Result<Demo, JsError> {
        Demo::create(n, seed as u64).map_err(js_err)
    }

    #[wasm_bindgen(js_name = layoutJson)]
    pub fn layout_json(&self) -> String {
        self.layout()
    }

    #[wasm_bindgen(js_name = plan)]
    pub fn plan_js(&mut self, b: f64, h: f64, cv: f64, seed: u32) -> Result<String, JsError> {
        self.make_plan(b, h, cv, seed as u64).map_err(js_err)
    }

    #[wasm_bindgen(js_name = season)]
    pub fn season_js(&self, family: &str, mode: &str, seed: u32) -> Result<String, JsError> {
        self.run_season(family, mode, seed as u64).map_err(js_err)
    }
}
