//! Data generation from the Bivariate Bernoulli model and the replication
//! study runner.
//!
//! Every replicate draws from its own ChaCha stream (`seed`, stream =
//! replicate index), so serial and parallel runs agree exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::estimate::{estimate, EstimatorOptions};
use crate::mle::ModelKind;
use crate::model::{cell_probabilities, p2_from_marginal, DependenceSign};
use crate::numeric::{central_interval_95, compensated_sum, mean, std_dev};
use crate::params::BbmParams;
use crate::result::{EstimateResult, Method};
use crate::table::{DrsTable, StratumPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SamplingMode {
    /// One multinomial draw over the four cells.
    #[default]
    Multinomial,
    /// Individual-level draws of the mixture, then tabulation.
    Individual,
}

/// `(p1., p.1)` capture-probability designs.
pub const PRESETS: [(&str, f64, f64); 6] = [
    ("P1", 0.60, 0.80),
    ("P2", 0.60, 0.70),
    ("P3", 0.80, 0.55),
    ("P4", 0.80, 0.70),
    ("P5", 0.50, 0.75),
    ("P6", 0.50, 0.60),
];

pub fn preset(name: &str) -> Result<(f64, f64)> {
    PRESETS
        .iter()
        .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, a, b)| (a, b))
        .ok_or_else(|| {
            DrsError::Parse(format!(
                "unknown preset '{name}'; valid presets: {}",
                PRESETS.map(|p| p.0).join(", ")
            ))
        })
}

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws one stratum of `round(params.n)` individuals.
pub fn generate_stratum<R: Rng + ?Sized>(
    params: &BbmParams,
    sign: DependenceSign,
    mode: SamplingMode,
    rng: &mut R,
) -> DrsTable {
    let n = params.n.round().max(0.0) as u64;
    match mode {
        SamplingMode::Multinomial => {
            let c = cell_probabilities(params, sign);
            let mut remaining = n;
            let mut mass = 1.0;
            let mut draw = |p: f64, rng: &mut R| -> u64 {
                let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
                let k = binomial(remaining, q, rng);
                remaining -= k;
                mass -= p;
                k
            };
            let x11 = draw(c.p11, rng);
            let x10 = draw(c.p10, rng);
            let x01 = draw(c.p01, rng);
            DrsTable { x11, x10, x01 }
        }
        SamplingMode::Individual => {
            let mut t = DrsTable { x11: 0, x10: 0, x01: 0 };
            for _ in 0..n {
                let dependent = rng.random::<f64>() < params.alpha;
                let y = rng.random::<f64>() < params.p1;
                let z = match (dependent, sign) {
                    (true, DependenceSign::Positive) => y,
                    (true, DependenceSign::Negative) => !y,
                    (false, _) => rng.random::<f64>() < params.p2,
                };
                match (y, z) {
                    (true, true) => t.x11 += 1,
                    (true, false) => t.x10 += 1,
                    (false, true) => t.x01 += 1,
                    (false, false) => {}
                }
            }
            t
        }
    }
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Draws `(x11, x10, x01)` from a multinomial of size `n` over the given
/// cell weights (which need not sum to one).
pub(crate) fn multinomial3<R: Rng + ?Sized>(n: u64, weights: [f64; 3], rng: &mut R) -> DrsTable {
    let total: f64 = weights.iter().sum();
    let mut remaining = n;
    let mut mass = total;
    let mut out = [0u64; 3];
    for (i, w) in weights.iter().enumerate() {
        let k = if i == 2 {
            remaining
        } else {
            let q = if mass > 0.0 { (w / mass).clamp(0.0, 1.0) } else { 0.0 };
            binomial(remaining, q, rng)
        };
        out[i] = k;
        remaining -= k;
        mass -= w;
    }
    DrsTable {
        x11: out[0],
        x10: out[1],
        x01: out[2],
    }
}

/// How a preset's probability pair is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PresetReading {
    /// `(p1, p2)` are the model's capture probabilities.
    #[default]
    Direct,
    /// `(p1., p.1)` are marginal capture probabilities; `p2` is recovered
    /// from the List-2 marginal and `alpha`.
    Marginal,
}

/// One simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub name: String,
    pub p1_a: f64,
    pub p2_a: f64,
    pub p1_b: f64,
    pub p2_b: f64,
    /// `alpha_A` under Model I, the shared `alpha0` under Model II.
    pub alpha: f64,
    pub n_a: u64,
    pub n_b: u64,
    pub model: ModelKind,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub sign: DependenceSign,
    #[serde(default)]
    pub mode: SamplingMode,
}

impl DesignPoint {
    /// A design with the same preset probabilities in both strata.
    #[allow(clippy::too_many_arguments)]
    pub fn from_preset(
        name: &str,
        reading: PresetReading,
        model: ModelKind,
        n_a: u64,
        n_b: u64,
        alpha: f64,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let (first, second) = preset(name)?;
        let alpha_b = match model {
            ModelKind::I => 0.0,
            ModelKind::II => alpha,
        };
        let (p2_a, p2_b) = match reading {
            PresetReading::Direct => (second, second),
            PresetReading::Marginal => (
                p2_from_marginal(second, first, alpha)?,
                p2_from_marginal(second, first, alpha_b)?,
            ),
        };
        let d = DesignPoint {
            name: name.to_ascii_uppercase(),
            p1_a: first,
            p2_a,
            p1_b: first,
            p2_b,
            alpha,
            n_a,
            n_b,
            model,
            replicates,
            seed,
            sign: DependenceSign::Positive,
            mode: SamplingMode::Multinomial,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn true_ratio(&self) -> f64 {
        self.n_a as f64 / self.n_b as f64
    }

    /// Data-generating parameters of both strata. Stratum B is independent
    /// under Model I.
    pub fn stratum_params(&self) -> Result<(BbmParams, BbmParams)> {
        let alpha_b = match self.model {
            ModelKind::I => 0.0,
            ModelKind::II => self.alpha,
        };
        Ok((
            BbmParams::new(self.p1_a, self.p2_a, self.alpha, self.n_a as f64)?,
            BbmParams::new(self.p1_b, self.p2_b, alpha_b, self.n_b as f64)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 || self.n_b == 0 {
            return Err(DrsError::InvalidParams("population sizes must be positive".into()));
        }
        if self.replicates == 0 {
            return Err(DrsError::InvalidParams("replicates must be positive".into()));
        }
        self.stratum_params().map(|_| ())
    }

    /// The data of replicate `index`.
    pub fn simulate(&self, index: u64) -> Result<StratumPair> {
        let (pa, pb) = self.stratum_params()?;
        let mut rng = rng_stream(self.seed, index);
        let a = generate_stratum(&pa, self.sign, self.mode, &mut rng);
        let b = generate_stratum(&pb, self.sign, self.mode, &mut rng);
        StratumPair::new(a, b)
    }
}

/// Replicate statistics of one estimator; population sizes are averaged
/// unrounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateStats {
    pub mean_na: f64,
    pub sd_na: f64,
    pub rrmse_na: f64,
    pub ci_na: (f64, f64),
    pub mean_nb: f64,
    pub rrmse_nb: f64,
    pub ci_nb: (f64, f64),
    pub mean_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub method: Method,
    pub successes: usize,
    pub failures: usize,
    /// `None` when every replicate failed.
    pub stats: Option<ReplicateStats>,
}

impl EstimatorSummary {
    pub fn stats(&self) -> Result<&ReplicateStats> {
        self.stats.as_ref().ok_or_else(|| DrsError::AllReplicatesFailed {
            method: self.method.to_string(),
            count: self.failures,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub design: DesignPoint,
    pub estimators: Vec<EstimatorSummary>,
}

impl StudySummary {
    pub fn get(&self, method: Method) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.method == method)
    }

    /// First estimator whose replicates all failed, as an error.
    pub fn check(&self) -> Result<()> {
        self.estimators.iter().try_for_each(|e| e.stats().map(|_| ()))
    }
}

/// Root of the mean squared deviation from `truth`, relative to `truth`.
pub fn rrmse(values: &[f64], truth: f64) -> f64 {
    let mse = compensated_sum(values.iter().map(|v| (v - truth) * (v - truth))) / values.len() as f64;
    mse.sqrt() / truth
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n_a: f64,
    n_b: f64,
    alpha: Option<f64>,
}

fn replicate_point(r: &EstimateResult) -> Result<Point> {
    if r.diagnostics.converged == Some(false) {
        return Err(DrsError::DidNotConverge {
            iterations: r.diagnostics.iterations.unwrap_or(0),
        });
    }
    let n_a = r.get("n_a").ok_or_else(|| DrsError::Infeasible("no n_a estimate".into()))?;
    let n_b = r.get("n_b").ok_or_else(|| DrsError::Infeasible("no n_b estimate".into()))?;
    if !(n_a.is_finite() && n_b.is_finite()) {
        return Err(DrsError::Infeasible("non-finite estimate".into()));
    }
    Ok(Point {
        n_a,
        n_b,
        alpha: r.alpha(),
    })
}

/// Runs every estimator on `design.replicates` simulated data sets.
///
/// Wolter estimators receive the true ratio `n_a / n_b`. Failed replicates
/// (infeasible, condition violated, not converged) are dropped from the
/// aggregates and counted.
pub fn run_study(
    design: &DesignPoint,
    estimators: &[Method],
    opts: &EstimatorOptions,
) -> Result<StudySummary> {
    design.validate()?;
    let mut opts = *opts;
    if opts.ratio.is_none() {
        opts.ratio = Some(design.true_ratio());
    }

    let per_replicate: Vec<Vec<Option<Point>>> = (0..design.replicates as u64)
        .into_par_iter()
        .map(|i| {
            let data = design.simulate(i);
            estimators
                .iter()
                .map(|&m| {
                    let data = data.as_ref().ok()?;
                    let mut o = opts;
                    o.fit.seed = opts.fit.seed.wrapping_add(i);
                    estimate(m, data, &o).and_then(|r| replicate_point(&r)).ok()
                })
                .collect()
        })
        .collect();

    let summaries = estimators
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let points: Vec<Point> = per_replicate.iter().filter_map(|row| row[k]).collect();
            summarize(method, design, &points)
        })
        .collect();

    Ok(StudySummary {
        design: design.clone(),
        estimators: summaries,
    })
}

fn summarize(method: Method, design: &DesignPoint, points: &[Point]) -> EstimatorSummary {
    let failures = design.replicates - points.len();
    if points.is_empty() {
        return EstimatorSummary {
            method,
            successes: 0,
            failures,
            stats: None,
        };
    }
    let na: Vec<f64> = points.iter().map(|p| p.n_a).collect();
    let nb: Vec<f64> = points.iter().map(|p| p.n_b).collect();
    let alphas: Vec<f64> = points.iter().filter_map(|p| p.alpha).collect();
    EstimatorSummary {
        method,
        successes: points.len(),
        failures,
        stats: Some(ReplicateStats {
            mean_na: mean(&na),
            sd_na: std_dev(&na),
            rrmse_na: rrmse(&na, design.n_a as f64),
            ci_na: central_interval_95(&na),
            mean_nb: mean(&nb),
            rrmse_nb: rrmse(&nb, design.n_b as f64),
            ci_nb: central_interval_95(&nb),
            mean_alpha: (!alphas.is_empty()).then(|| mean(&alphas)),
        }),
    }
}

/// CSV header for study rows.
pub const STUDY_CSV_HEADER: [&str; 8] = [
    "design",
    "estimator",
    "mean_na",
    "rrmse_na",
    "ci_lo",
    "ci_hi",
    "mean_alpha",
    "failures",
];

impl StudySummary {
    /// One CSV record per estimator, columns as in [`STUDY_CSV_HEADER`].
    pub fn csv_records(&self) -> Vec<[String; 8]> {
        let label = format!(
            "{}|model={:?}|na={}|nb={}|alpha={}",
            self.design.name, self.design.model, self.design.n_a, self.design.n_b, self.design.alpha
        );
        self.estimators
            .iter()
            .map(|e| {
                let (mean_na, rrmse, lo, hi, alpha) = match &e.stats {
                    Some(s) => (
                        format!("{:.4}", s.mean_na),
                        format!("{:.6}", s.rrmse_na),
                        format!("{:.4}", s.ci_na.0),
                        format!("{:.4}", s.ci_na.1),
                        s.mean_alpha.map(|a| format!("{a:.6}")).unwrap_or_default(),
                    ),
                    None => Default::default(),
                };
                [
                    label.clone(),
                    e.method.tag().to_string(),
                    mean_na,
                    rrmse,
                    lo,
                    hi,
                    alpha,
                    e.failures.to_string(),
                ]
            })
            .collect()
    }
}
