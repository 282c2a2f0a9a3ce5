//! Parameter types for the Bivariate Bernoulli model and its M_tb
//! counterpart.

use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};

pub const SIMPLEX_TOL: f64 = 1e-12;

/// Parameters of one stratum under the Bivariate Bernoulli model.
///
/// A fraction `alpha` of individuals have identical List-1 and List-2
/// outcomes (complementary ones under negative dependence); the rest are
/// captured independently with probabilities `p1` and `p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbmParams {
    pub p1: f64,
    pub p2: f64,
    pub alpha: f64,
    pub n: f64,
}

impl BbmParams {
    pub fn new(p1: f64, p2: f64, alpha: f64, n: f64) -> Result<Self> {
        let p = BbmParams { p1, p2, alpha, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.p1) || !open(self.p2) {
            return Err(DrsError::InvalidParams(format!(
                "capture probabilities must lie in (0, 1): p1 = {}, p2 = {}",
                self.p1, self.p2
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DrsError::InvalidParams(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.n > 0.0) || !self.n.is_finite() {
            return Err(DrsError::InvalidParams(format!(
                "population size must be positive, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Probabilities of the four cells (in both, List 1 only, List 2 only,
/// neither).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbabilities {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CellProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }

    pub fn total(&self) -> f64 {
        self.p11 + self.p10 + self.p01 + self.p00
    }

    pub fn is_valid(&self) -> bool {
        self.as_array()
            .iter()
            .all(|p| (-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(p))
            && (self.total() - 1.0).abs() <= SIMPLEX_TOL
    }

    /// Probability of being observed in at least one list.
    pub fn observed(&self) -> f64 {
        self.p11 + self.p10 + self.p01
    }
}

/// The M_tb parametrization: initial capture probability, capture
/// probability for those missed by List 1, recapture probability and the
/// behavioral response effect `phi = c / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MtbParams {
    pub p1dot: f64,
    pub p: f64,
    pub c: f64,
    pub phi: f64,
}
