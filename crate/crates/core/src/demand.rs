//! Demand models, the single-location robust order quantity, parametric
//! samplers and the discrete worst-case moment distribution.

use std::io::{Read, Write};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::CostParams;

/// Per-location mean and standard deviation; demand is independent across locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DemandModel {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::Structure(format!("mu has {} entries, sigma {}", mu.len(), sigma.len())));
        }
        if mu.is_empty() {
            return Err(Error::Input("demand model needs at least one location".into()));
        }
        for (i, (&m, &s)) in mu.iter().zip(&sigma).enumerate() {
            if !(m > 0.0 && m.is_finite()) || !(s > 0.0 && s.is_finite()) {
                return Err(Error::Input(format!("location {i}: need mu > 0 and sigma > 0, got ({m}, {s})")));
            }
        }
        Ok(Self { mu, sigma })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Largest coefficient of variation `σ_i/μ_i`.
    pub fn nu(&self) -> f64 {
        self.nu_over(&(0..self.n()).collect::<Vec<_>>())
    }

    pub fn nu_over(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.sigma[i] / self.mu[i]).fold(0.0, f64::max)
    }

    /// `σ_S = sqrt(Σ_{i∈S} σ_i²)`.
    pub fn sigma_set(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.sigma[i] * self.sigma[i]).sum::<f64>().sqrt()
    }

    pub fn mu_set(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.mu[i]).sum()
    }

    /// Both moments multiplied by `factor` (inflated estimates).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.mu.iter().map(|m| m * factor).collect(),
            self.sigma.iter().map(|s| s * factor).collect(),
        )
    }
}

/// Safety stock `(σ/2)(√(b/h) − √(h/b))` for underage `b` and overage `h`.
pub fn safety_stock(sigma: f64, b: f64, h: f64) -> f64 {
    0.5 * sigma * ((b / h).sqrt() - (h / b).sqrt())
}

/// Worst-case expected cost of stocking `q` against every distribution with
/// mean `mu` and standard deviation `sigma`.
pub fn scarf_worst_case_cost(q: f64, mu: f64, sigma: f64, p: &CostParams) -> f64 {
    let x = q - mu;
    p.h * x + 0.5 * (p.b + p.h) * ((sigma * sigma + x * x).sqrt() - x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScarfSolution {
    pub q: f64,
    pub worst_case_cost: f64,
}

/// Single-location robust order quantity: the interior optimum or zero,
/// whichever has the lower worst-case cost.
pub fn scarf_quantity(mu: f64, sigma: f64, p: &CostParams) -> Result<ScarfSolution> {
    if p.h <= 0.0 {
        return Err(Error::Parameter(format!("overage cost must be positive, got {}", p.h)));
    }
    if !(mu > 0.0 && sigma > 0.0) {
        return Err(Error::Input(format!("need mu > 0 and sigma > 0, got ({mu}, {sigma})")));
    }
    let q1 = mu + safety_stock(sigma, p.b, p.h);
    let c1 = scarf_worst_case_cost(q1, mu, sigma, p);
    let c0 = scarf_worst_case_cost(0.0, mu, sigma, p);
    Ok(if c0 < c1 {
        ScarfSolution { q: 0.0, worst_case_cost: c0 }
    } else {
        ScarfSolution { q: q1, worst_case_cost: c1 }
    })
}

/// Finitely supported demand distribution with exact rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub atoms: Vec<(BigRational, Vec<f64>)>,
}

impl DiscreteDistribution {
    pub fn total_mass(&self) -> BigRational {
        self.atoms.iter().map(|(p, _)| p.clone()).sum()
    }

    /// Draws `m` atoms independently.
    pub fn sample(&self, m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cum = Vec::with_capacity(self.atoms.len());
        let mut acc = 0.0;
        for (p, _) in &self.atoms {
            acc += p.to_f64().unwrap_or(0.0);
            cum.push(acc);
        }
        (0..m)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cum.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
                self.atoms[k].1.clone()
            })
            .collect()
    }
}

/// The parameter `ε` of the worst-case construction.
pub fn worst_case_epsilon(lambda: f64, nu: f64) -> f64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let b = lambda / (2f64.sqrt() * (1.0 + (1.0 + lambda * lambda).sqrt())) / nu;
    a.min(b)
}

/// `λ` making the top atom reach the tail threshold at level `alpha`:
/// `λ = α / C` with `C = √2·ε(1)`. Since `ε` grows with `λ`, this gives
/// `√2·λ·ε(λ) ≥ α`.
pub fn tail_lambda(alpha: f64, nu: f64) -> f64 {
    let c = 2f64.sqrt() * worst_case_epsilon(1.0, nu);
    (alpha / c).max(1.0)
}

/// `p_0 = 1/(2(1+λ²))`, the mass placed on the top atom.
pub fn top_atom_mass(lambda: f64) -> f64 {
    1.0 / (2.0 * (1.0 + lambda * lambda))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

/// Nonnegative distribution on `S` with mean `μ_S` and covariance
/// `diag(σ_S²)` that puts mass `1/(2(1+λ²))` on a point far in the upper tail.
///
/// The returned vectors are indexed like `set`. Coordinates are built on a
/// standardized scale and mapped by `d = μ + diag(σ)·x`.
pub fn worst_case_distribution(model: &DemandModel, set: &[usize], lambda: f64) -> Result<DiscreteDistribution> {
    if set.is_empty() {
        return Err(Error::Input("location set is empty".into()));
    }
    if let Some(&bad) = set.iter().find(|&&i| i >= model.n()) {
        return Err(Error::Structure(format!("location {bad} out of range")));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda must be >= 1, got {lambda}")));
    }
    let m = set.len();
    let mf = m as f64;
    let nu = model.nu_over(set);
    let eps = worst_case_epsilon(lambda, nu);
    let eta = nu * (2.0 * (1.0 - eps * eps)).sqrt();
    let sig: Vec<f64> = set.iter().map(|&i| model.sigma[i]).collect();
    let mu: Vec<f64> = set.iter().map(|&i| model.mu[i]).collect();
    let s_set = model.sigma_set(set);
    let l2 = lambda * lambda;
    let root = (1.0 + l2).sqrt();

    for (k, &i) in set.iter().enumerate() {
        let need_a = 2f64.sqrt() * (1.0 + root) / lambda * eps / s_set * sig[k] * sig[k];
        let need_b = (2.0 * (1.0 - eps * eps)).sqrt() / eta * sig[k];
        let need = need_a.max(need_b);
        if mu[k] < need * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!(
                "location {i}: mean {} is below {need}, an atom would be negative",
                mu[k]
            )));
        }
    }

    let to_demand = |x: &[f64]| -> Result<Vec<f64>> {
        x.iter()
            .enumerate()
            .map(|(k, &xk)| {
                let d = mu[k] + sig[k] * xk;
                if d < -1e-12 {
                    Err(Error::Precondition(format!("location {}: atom coordinate {d} is negative", set[k])))
                } else {
                    Ok(d.max(0.0))
                }
            })
            .collect()
    };

    // Probabilities are exact rationals in λ, σ and η²; the two halves
    // (top and shifted atoms, then the axis atoms) each sum to 1/2.
    let one = BigRational::one();
    let two = BigRational::from_integer(2.into());
    let lam = exact(lambda);
    let l2q = &lam * &lam;
    let half_tail = &two * (&one + &l2q);
    let sig_q: Vec<BigRational> = sig.iter().map(|&s| exact(s)).collect();
    let s2_q: BigRational = sig_q.iter().map(|s| s * s).sum();
    let eta2 = exact(eta * eta);
    let mq = BigRational::from_integer(m.into());
    let denom_q = &one + &mq * &eta2;

    let mut atoms: Vec<(BigRational, Vec<f64>)> = Vec::with_capacity(3 * m + 1);
    let top = 2f64.sqrt() * lambda * eps / s_set;
    atoms.push((&one / &half_tail, to_demand(&sig.iter().map(|s| top * s).collect::<Vec<_>>())?));
    let shift = 2f64.sqrt() * (1.0 + root) / lambda * eps / s_set;
    for k in 0..m {
        let p = &l2q / &half_tail * (&sig_q[k] * &sig_q[k]) / &s2_q;
        let mut v: Vec<f64> = sig.iter().map(|s| -shift * s).collect();
        v[k] += eps * (2.0 * (1.0 + l2)).sqrt() / lambda * s_set / sig[k];
        atoms.push((p, to_demand(&v)?));
    }
    for k in 0..m {
        let mut w = vec![0.0; m];
        w[k] = mf * eta * (2.0 * (1.0 - eps * eps)).sqrt();
        atoms.push((&one / (&two * &mq * &denom_q), to_demand(&w)?));
    }
    for k in 0..m {
        let mut t = vec![0.0; m];
        t[k] = -(2.0 * (1.0 - eps * eps)).sqrt() / eta;
        atoms.push((&eta2 / (&two * &denom_q), to_demand(&t)?));
    }
    debug_assert!(atoms.iter().map(|a| &a.0).sum::<BigRational>().is_one());
    Ok(DiscreteDistribution { atoms })
}

/// Exact mass of `{d : d_i ≥ μ_i + (α/σ_S)·σ_i² for all i ∈ S}`, where atoms
/// are indexed like `set`.
pub fn tail_event_mass(dist: &DiscreteDistribution, model: &DemandModel, set: &[usize], alpha: f64) -> BigRational {
    let s_set = model.sigma_set(set);
    let mut mass = BigRational::zero();
    for (p, v) in &dist.atoms {
        let hit = set.iter().enumerate().all(|(k, &i)| {
            let thr = model.mu[i] + alpha / s_set * model.sigma[i] * model.sigma[i];
            v[k] >= thr - 1e-9 * thr.abs().max(1.0)
        });
        if hit {
            mass += p;
        }
    }
    mass
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    LogNormal,
    Gamma,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Normal, Family::LogNormal, Family::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::LogNormal => "lognormal",
            Family::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "lognormal" | "log-normal" => Ok(Family::LogNormal),
            "gamma" => Ok(Family::Gamma),
            other => Err(Error::Parameter(format!("unknown demand family '{other}'"))),
        }
    }
}

/// Independent draws matched to each location's mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub rows: Vec<Vec<f64>>,
    /// Number of normal draws that were negative and clipped to zero.
    pub clipped: usize,
}

/// Shape and scale of the gamma law with the given mean and standard deviation.
pub fn gamma_params(mu: f64, sigma: f64) -> (f64, f64) {
    ((mu / sigma).powi(2), sigma * sigma / mu)
}

/// Location and scale of the underlying normal of a log-normal law.
pub fn lognormal_params(mu: f64, sigma: f64) -> (f64, f64) {
    let s2 = (1.0 + sigma * sigma / (mu * mu)).ln();
    (mu.ln() - 0.5 * s2, s2.sqrt())
}

enum Sampler {
    Normal(Normal<f64>),
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
}

pub fn sample_parametric(model: &DemandModel, family: Family, m: usize, seed: u64) -> Result<Samples> {
    if m == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let bad = |e: &dyn std::fmt::Display| Error::Parameter(format!("sampler: {e}"));
    let samplers: Vec<Sampler> = model
        .mu
        .iter()
        .zip(&model.sigma)
        .map(|(&mu, &s)| {
            Ok(match family {
                Family::Normal => Sampler::Normal(Normal::new(mu, s).map_err(|e| bad(&e))?),
                Family::LogNormal => {
                    let (loc, scale) = lognormal_params(mu, s);
                    Sampler::LogNormal(LogNormal::new(loc, scale).map_err(|e| bad(&e))?)
                }
                Family::Gamma => {
                    let (k, theta) = gamma_params(mu, s);
                    Sampler::Gamma(Gamma::new(k, theta).map_err(|e| bad(&e))?)
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clipped = 0;
    let rows = (0..m)
        .map(|_| {
            samplers
                .iter()
                .map(|s| match s {
                    Sampler::Normal(d) => {
                        let x = d.sample(&mut rng);
                        if x < 0.0 {
                            clipped += 1;
                            0.0
                        } else {
                            x
                        }
                    }
                    Sampler::LogNormal(d) => d.sample(&mut rng),
                    Sampler::Gamma(d) => d.sample(&mut rng),
                })
                .collect()
        })
        .collect();
    Ok(Samples { rows, clipped })
}

/// Writes one row per sample and one column per location, with a `d0,d1,…` header.
pub fn write_samples_csv<W: Write>(out: W, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = rows.first() {
        w.write_record((0..first.len()).map(|i| format!("d{i}")))?;
    }
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format produced by [`write_samples_csv`]. A header row is
/// optional: it is skipped when its first field is not a number.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(input);
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if k == 0 && rec.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Input(format!("bad number '{f}': {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
            if first != row.len() {
                return Err(Error::Structure(format!("row {k} has {} columns, expected {first}", row.len())));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Exact rational value of an `f64` (every finite float is a dyadic rational).
pub fn rational(x: f64) -> BigRational {
    exact(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(b: f64, h: f64) -> CostParams {
        CostParams::new(b, h).unwrap()
    }

    #[test]
    fn scarf_equal_costs_returns_mean() {
        let s = scarf_quantity(123.5, 40.0, &params(7.0, 7.0)).unwrap();
        assert_eq!(s.q, 123.5);
    }

    #[test]
    fn scarf_reference_value() {
        let s = scarf_quantity(100.0, 20.0, &params(100.0, 5.0)).unwrap();
        let expect = 100.0 + 10.0 * (20f64.sqrt() - 0.05f64.sqrt());
        assert_relative_eq!(s.q, expect, max_relative = 1e-12);
        assert!((s.q - 142.485).abs() < 1e-3);
    }

    #[test]
    fn scarf_rejects_zero_h() {
        let p = CostParams { b: 1.0, h: 0.0 };
        assert!(matches!(scarf_quantity(1.0, 1.0, &p), Err(Error::Parameter(_))));
    }

    #[test]
    fn scarf_beats_grid() {
        let p = params(100.0, 5.0);
        let (mu, sigma) = (250.0, 150.0);
        let s = scarf_quantity(mu, sigma, &p).unwrap();
        let hi = 4.0 * mu;
        let step = hi / 10_000.0;
        let (mut best_q, mut best) = (0.0, f64::INFINITY);
        for k in 0..=10_000 {
            let q = k as f64 * step;
            let w = scarf_worst_case_cost(q, mu, sigma, &p);
            if w < best {
                best = w;
                best_q = q;
            }
        }
        assert!((best_q - s.q).abs() <= step);
        assert!(s.worst_case_cost <= best + 1e-9);
    }

    #[test]
    fn top_atom_mass_at_lambda_one() {
        let m = DemandModel::new(vec![100.0, 80.0], vec![20.0, 30.0]).unwrap();
        let d = worst_case_distribution(&m, &[0, 1], 1.0).unwrap();
        assert_eq!(d.atoms.len(), 7);
        assert!((d.atoms[0].0.to_f64().unwrap() - 0.25).abs() < 1e-15);
        assert!(d.total_mass().is_one());
    }

    #[test]
    fn one_location_tail_mass_is_quarter() {
        // ν = 0.3 keeps √2·ε(1) = 1, so λ = 1 reaches the α = 1 tail
        let m = DemandModel::new(vec![100.0], vec![30.0]).unwrap();
        assert_eq!(tail_lambda(1.0, m.nu()), 1.0);
        let d = worst_case_distribution(&m, &[0], 1.0).unwrap();
        let mass = tail_event_mass(&d, &m, &[0], 1.0);
        assert_eq!(mass, d.atoms[0].0);
        assert!((mass.to_f64().unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn worst_case_rejects_bad_lambda() {
        let m = DemandModel::new(vec![100.0], vec![30.0]).unwrap();
        assert!(worst_case_distribution(&m, &[0], 0.5).is_err());
    }

    #[test]
    fn gamma_and_lognormal_parameters() {
        assert_eq!(gamma_params(100.0, 50.0), (4.0, 25.0));
        let (loc, scale) = lognormal_params(100.0, 50.0);
        let s2 = 1.25f64.ln();
        assert_relative_eq!(scale * scale, s2, max_relative = 1e-14);
        assert_relative_eq!(loc, 100f64.ln() - s2 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_spread_concentrates() {
        let m = DemandModel::new(vec![100.0, 300.0], vec![1e-4, 3e-4]).unwrap();
        for fam in Family::ALL {
            let s = sample_parametric(&m, fam, 200, 5).unwrap();
            for row in &s.rows {
                for (x, mu) in row.iter().zip(&m.mu) {
                    assert!((x - mu).abs() <= 1e-4 * mu, "{fam:?}: {x} vs {mu}");
                }
            }
        }
    }

    #[test]
    fn lognormal_moments_match() {
        let m = DemandModel::new(vec![100.0], vec![50.0]).unwrap();
        let s = sample_parametric(&m, Family::LogNormal, 100_000, 11).unwrap();
        let xs: Vec<f64> = s.rows.iter().map(|r| r[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 100.0).abs() <= 3.0 * 50.0 / n.sqrt());
        // standard error of the sample variance uses the fourth central moment
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let se_var = ((m4 - var * var) / n).sqrt();
        assert!((var - 2500.0).abs() <= 3.0 * se_var);
    }

    #[test]
    fn samples_are_reproducible() {
        let m = DemandModel::new(vec![100.0, 50.0], vec![30.0, 40.0]).unwrap();
        let a = sample_parametric(&m, Family::Normal, 50, 9).unwrap();
        let b = sample_parametric(&m, Family::Normal, 50, 9).unwrap();
        let bits = |s: &Samples| s.rows.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(sample_parametric(&m, Family::Normal, 0, 9).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![vec![1.5, 2.0], vec![0.0, 3.25]];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_samples_csv(buf.as_slice()).unwrap(), rows);
        assert_eq!(read_samples_csv("1,2\n3,4\n".as_bytes()).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    proptest! {
        #[test]
        fn worst_case_mass_and_moments(
            moments in proptest::collection::vec((10.0f64..1000.0, 0.05f64..1.0), 1..6),
            lambda in 1.0f64..6.0,
        ) {
            let mu: Vec<f64> = moments.iter().map(|m| m.0).collect();
            let sigma: Vec<f64> = moments.iter().map(|m| m.0 * m.1).collect();
            let model = DemandModel::new(mu.clone(), sigma.clone()).unwrap();
            let set: Vec<usize> = (0..mu.len()).collect();
            let d = worst_case_distribution(&model, &set, lambda).unwrap();
            prop_assert!(d.total_mass().is_one());
            prop_assert!(d.atoms.iter().all(|(_, v)| v.iter().all(|&x| x >= 0.0)));
            for k in 0..mu.len() {
                let mean: f64 = d.atoms.iter().map(|(p, v)| p.to_f64().unwrap() * v[k]).sum();
                prop_assert!((mean - mu[k]).abs() <= 1e-9 * mu[k]);
                let var: f64 = d.atoms.iter().map(|(p, v)| p.to_f64().unwrap() * (v[k] - mu[k]).powi(2)).sum();
                prop_assert!((var - sigma[k] * sigma[k]).abs() <= 1e-9 * sigma[k] * sigma[k]);
            }
        }

        #[test]
        fn tail_mass_nonincreasing_in_alpha(
            moments in proptest::collection::vec((10.0f64..1000.0, 0.05f64..1.0), 1..5),
            lambda in 1.0f64..6.0,
            a1 in 0.0f64..5.0,
            gap in 0.0f64..5.0,
        ) {
            let mu: Vec<f64> = moments.iter().map(|m| m.0).collect();
            let sigma: Vec<f64> = moments.iter().map(|m| m.0 * m.1).collect();
            let model = DemandModel::new(mu, sigma).unwrap();
            let set: Vec<usize> = (0..model.n()).collect();
            let d = worst_case_distribution(&model, &set, lambda).unwrap();
            prop_assert!(tail_event_mass(&d, &model, &set, a1) >= tail_event_mass(&d, &model, &set, a1 + gap));
        }

        #[test]
        fn scarf_equal_costs_exact(mu in 1.0f64..1e4, cv in 0.01f64..2.0, c in 0.1f64..100.0) {
            prop_assert_eq!(scarf_quantity(mu, mu * cv, &params(c, c)).unwrap().q, mu);
        }
    }
}
