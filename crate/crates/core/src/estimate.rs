//! Uniform entry point: apply any [`Method`] to a stratum pair.

use serde::{Deserialize, Serialize};

use crate::classical::{lincoln_petersen_value, nour_value, wolter_model1, wolter_model2};
use crate::error::{DrsError, Result};
use crate::mle::{mle_model_i, mle_model_ii, FitConfig};
use crate::mme::{mme_model_i, mme_model_ii};
use crate::result::{EstimateResult, Method};
use crate::table::StratumPair;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Known `n_a / n_b`; required by the Wolter estimators and passed to
    /// the likelihood fits as a constraint when `fit.known_ratio` is set.
    pub ratio: Option<f64>,
    pub fit: FitConfig,
}

impl EstimatorOptions {
    pub fn with_ratio(ratio: f64) -> Self {
        EstimatorOptions {
            ratio: Some(ratio),
            ..Default::default()
        }
    }
}

/// Applies `method` to both strata. Single-table estimators (LP, Nour) are
/// applied to each stratum separately and fail if either stratum fails.
pub fn estimate(method: Method, data: &StratumPair, opts: &EstimatorOptions) -> Result<EstimateResult> {
    match method {
        Method::MmeI => mme_model_i(data),
        Method::MmeII => mme_model_ii(data),
        Method::MleI => mle_model_i(data, &opts.fit),
        Method::MleII => mle_model_ii(data, &opts.fit),
        Method::Lp => per_stratum(method, data, lincoln_petersen_value),
        Method::Nour => per_stratum(method, data, nour_value),
        Method::Wolter1 | Method::Wolter2 => {
            let r = opts.ratio.ok_or_else(|| {
                DrsError::InvalidParams(format!("{method} requires the sub-population ratio r"))
            })?;
            if method == Method::Wolter1 {
                wolter_model1(data, r)
            } else {
                wolter_model2(data, r)
            }
        }
    }
}

fn per_stratum(
    method: Method,
    data: &StratumPair,
    f: fn(&crate::table::DrsTable) -> Result<f64>,
) -> Result<EstimateResult> {
    let n_a = f(&data.a).map_err(|e| tag_stratum(e, &data.label_a))?;
    let n_b = f(&data.b).map_err(|e| tag_stratum(e, &data.label_b))?;
    let mut r = EstimateResult::new(method).with("n_a", n_a).with("n_b", n_b);
    for (key, t, n) in [("a", &data.a, n_a), ("b", &data.b, n_b)] {
        r.set(&format!("p1dot_{key}"), t.x1dot() as f64 / n);
        r.set(&format!("pdot1_{key}"), t.xdot1() as f64 / n);
    }
    Ok(r)
}

fn tag_stratum(e: DrsError, label: &str) -> DrsError {
    match e {
        DrsError::ConditionViolated(m) => DrsError::ConditionViolated(format!("{label}: {m}")),
        DrsError::DivisionByZero(m) => DrsError::DivisionByZero(format!("{m} in stratum {label}")),
        other => other,
    }
}
