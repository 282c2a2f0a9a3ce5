//! Bootstrap standard errors and percentile intervals for any estimator.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::estimate::{estimate, EstimatorOptions};
use crate::model::DependenceSign;
use crate::numeric::{central_interval_95, std_dev};
use crate::params::BbmParams;
use crate::result::{EstimateResult, Method};
use crate::sim::{generate_stratum, multinomial3, rng_stream, SamplingMode};
use crate::table::{DrsTable, StratumPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BootstrapScheme {
    /// Resample from the fitted model.
    #[default]
    Parametric,
    /// Resample the observed cells, keeping each stratum's `x0`.
    Nonparametric,
}

const PROB_CLIP: f64 = 1e-9;
const KEYS: [&str; 3] = ["n_a", "n_b", "alpha"];

/// Fits `method` and attaches bootstrap standard errors and 95% percentile
/// intervals for `n_a`, `n_b` and, where estimated, `alpha`.
pub fn bootstrap(
    data: &StratumPair,
    method: Method,
    scheme: BootstrapScheme,
    resamples: usize,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    let streams: Vec<u64> = (0..resamples as u64).collect();
    bootstrap_with_streams(data, method, scheme, seed, &streams, opts)
}

/// As [`bootstrap`], with resample `i` drawn from RNG stream `streams[i]`.
pub fn bootstrap_with_streams(
    data: &StratumPair,
    method: Method,
    scheme: BootstrapScheme,
    seed: u64,
    streams: &[u64],
    opts: &EstimatorOptions,
) -> Result<EstimateResult> {
    if streams.len() < 2 {
        return Err(DrsError::InvalidParams("at least two bootstrap resamples are needed".into()));
    }
    let mut fit = estimate(method, data, opts)?;
    let generator = Generator::new(method, data, &fit)?;

    let draws: Vec<Option<[Option<f64>; 3]>> = streams
        .par_iter()
        .map(|&s| {
            let mut rng = rng_stream(seed, s);
            let sample = match scheme {
                BootstrapScheme::Parametric => generator.parametric(&mut rng),
                BootstrapScheme::Nonparametric => nonparametric(data, &mut rng),
            };
            let r = estimate(method, &sample.ok()?, opts).ok()?;
            if r.diagnostics.converged == Some(false) {
                return None;
            }
            Some([r.get("n_a"), r.get("n_b"), r.alpha()])
        })
        .collect();

    let ok: Vec<[Option<f64>; 3]> = draws.iter().flatten().copied().collect();
    let failures = draws.len() - ok.len();
    if ok.is_empty() {
        return Err(DrsError::AllResamplesFailed {
            method: method.to_string(),
            count: failures,
        });
    }

    let mut se = BTreeMap::new();
    let mut ci = BTreeMap::new();
    for (k, key) in KEYS.iter().enumerate() {
        let values: Vec<f64> = ok.iter().filter_map(|d| d[k]).filter(|v| v.is_finite()).collect();
        if values.len() < 2 {
            continue;
        }
        se.insert(key.to_string(), std_dev(&values));
        ci.insert(key.to_string(), central_interval_95(&values));
    }
    fit.se = Some(se);
    fit.ci = Some(ci);
    fit.diagnostics.failures = Some(failures);
    fit.diagnostics.values.insert("bootstrap_resamples".into(), streams.len() as f64);
    Ok(fit)
}

fn nonparametric<R: Rng + ?Sized>(data: &StratumPair, rng: &mut R) -> Result<StratumPair> {
    let draw = |t: &DrsTable, rng: &mut R| {
        let w = t.cells().map(|c| c as f64);
        multinomial3(t.x0(), w, rng)
    };
    let a = draw(&data.a, rng);
    let b = draw(&data.b, rng);
    StratumPair::labeled(a, b, data.label_a.clone(), data.label_b.clone())
}

/// Data-generating parameters implied by a fit.
struct Generator {
    a: BbmParams,
    b: BbmParams,
    labels: (String, String),
}

impl Generator {
    fn new(method: Method, data: &StratumPair, fit: &EstimateResult) -> Result<Self> {
        let need = |key: &str| {
            fit.get(key)
                .ok_or_else(|| DrsError::InvalidParams(format!("{method} fit has no {key}")))
        };
        let n_a = need("n_a")?;
        let n_b = need("n_b")?;
        let (a, b) = match method {
            Method::MmeI | Method::MleI | Method::MmeII | Method::MleII => {
                let p1 = need("p1")?;
                let (alpha_a, alpha_b) = match method {
                    Method::MmeI | Method::MleI => (need("alpha_a")?, 0.0),
                    _ => {
                        let a0 = need("alpha0")?;
                        (a0, a0)
                    }
                };
                (
                    params(p1, need("p2a")?, alpha_a, n_a),
                    params(p1, need("p2b")?, alpha_b, n_b),
                )
            }
            Method::Lp | Method::Nour | Method::Wolter1 | Method::Wolter2 => (
                independent(&data.a, n_a),
                independent(&data.b, n_b),
            ),
        };
        Ok(Generator {
            a: a?,
            b: b?,
            labels: (data.label_a.clone(), data.label_b.clone()),
        })
    }

    fn parametric<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StratumPair> {
        let a = generate_stratum(&self.a, DependenceSign::Positive, SamplingMode::Multinomial, rng);
        let b = generate_stratum(&self.b, DependenceSign::Positive, SamplingMode::Multinomial, rng);
        StratumPair::labeled(a, b, self.labels.0.clone(), self.labels.1.clone())
    }
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

fn params(p1: f64, p2: f64, alpha: f64, n: f64) -> Result<BbmParams> {
    BbmParams::new(clip(p1), clip(p2), alpha.clamp(0.0, 1.0), n.round().max(1.0))
}

fn independent(t: &DrsTable, n: f64) -> Result<BbmParams> {
    params(t.x1dot() as f64 / n, t.xdot1() as f64 / n, 0.0, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams_give_zero_spread() {
        let data = StratumPair::from_counts((46, 20, 11), (54, 5, 13)).unwrap();
        let r = bootstrap_with_streams(
            &data,
            Method::MmeI,
            BootstrapScheme::Parametric,
            4,
            &[7, 7],
            &EstimatorOptions::default(),
        )
        .unwrap();
        assert_eq!(r.se.unwrap()["n_b"], 0.0);
    }

    #[test]
    fn single_resample_is_rejected() {
        let data = StratumPair::from_counts((46, 20, 11), (54, 5, 13)).unwrap();
        assert!(bootstrap(&data, Method::Lp, BootstrapScheme::Parametric, 1, 0, &Default::default()).is_err());
    }
}
