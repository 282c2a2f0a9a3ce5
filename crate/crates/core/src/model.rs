//! The Bivariate Bernoulli model for a dual-record system.
//!
//! Each individual's pair of list outcomes `(Y, Z)` is, with probability
//! `1 - alpha`, a pair of independent Bernoulli draws `(X1, X2)`, and with
//! probability `alpha` the dependent pair `(X1, X1)` (positive dependence)
//! or `(X1, 1 - X1)` (negative dependence).
//!
//! Model I fits stratum A under this model and stratum B under independence,
//! sharing the List-1 probability `p1`. Model II fits both strata under the
//! model with shared `p1` and shared `alpha0`. Only the positive variant is
//! fitted.

use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::numeric::{xlny, LogFactorial};
use crate::params::{BbmParams, CellProbabilities, MtbParams};
use crate::table::{DrsTable, StratumPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DependenceSign {
    #[default]
    Positive,
    Negative,
}

pub fn cell_probabilities(params: &BbmParams, sign: DependenceSign) -> CellProbabilities {
    cells(params.p1, params.p2, params.alpha, sign)
}

pub(crate) fn cells(p1: f64, p2: f64, alpha: f64, sign: DependenceSign) -> CellProbabilities {
    let ind = 1.0 - alpha;
    let q1 = 1.0 - p1;
    let q2 = 1.0 - p2;
    match sign {
        DependenceSign::Positive => CellProbabilities {
            p11: alpha * p1 + ind * p1 * p2,
            p10: ind * p1 * q2,
            p01: ind * q1 * p2,
            p00: alpha * q1 + ind * q1 * q2,
        },
        DependenceSign::Negative => CellProbabilities {
            p11: ind * p1 * p2,
            p10: alpha * p1 + ind * p1 * q2,
            p01: alpha * q1 + ind * q1 * p2,
            p00: ind * q1 * q2,
        },
    }
}

/// Marginal List-1 and List-2 capture probabilities and `Cov(Y, Z)`.
pub fn marginals_and_covariance(params: &BbmParams, sign: DependenceSign) -> (f64, f64, f64) {
    let BbmParams { p1, p2, alpha, .. } = *params;
    let spread = alpha * p1 * (1.0 - p1);
    match sign {
        DependenceSign::Positive => (p1, alpha * p1 + (1.0 - alpha) * p2, spread),
        DependenceSign::Negative => (p1, alpha * (1.0 - p1) + (1.0 - alpha) * p2, -spread),
    }
}

/// Maps positive-dependence parameters onto the M_tb parametrization.
pub fn to_mtb(params: &BbmParams) -> Result<MtbParams> {
    params.validate()?;
    if params.alpha >= 1.0 {
        return Err(DrsError::DegenerateDependence);
    }
    let p = (1.0 - params.alpha) * params.p2;
    let phi = 1.0 + params.alpha / p;
    Ok(MtbParams {
        p1dot: params.p1,
        p,
        c: phi * p,
        phi,
    })
}

/// Inverse of [`to_mtb`] for `phi >= 1`: `alpha = c - p = (phi - 1) p`,
/// `p2 = p / (1 - alpha)`.
pub fn from_mtb(mtb: &MtbParams, n: f64) -> Result<BbmParams> {
    if mtb.phi < 1.0 {
        return Err(DrsError::InvalidParams(format!(
            "phi = {} < 1 has no positive-dependence counterpart",
            mtb.phi
        )));
    }
    let alpha = (mtb.phi - 1.0) * mtb.p;
    if alpha >= 1.0 {
        return Err(DrsError::InvalidParams(format!(
            "(phi - 1) p = {alpha} must be below 1"
        )));
    }
    BbmParams::new(mtb.p1dot, mtb.p / (1.0 - alpha), alpha, n)
}

/// Recovers `p2` from the marginal List-2 probability `p_dot1` under
/// positive dependence.
pub fn p2_from_marginal(p_dot1: f64, p1: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(DrsError::InvalidParams(format!(
            "alpha = {alpha} must lie in [0, 1)"
        )));
    }
    let p2 = (p_dot1 - alpha * p1) / (1.0 - alpha);
    if p2 > 0.0 && p2 < 1.0 {
        Ok(p2)
    } else {
        Err(DrsError::OutOfRange {
            value: p2,
            context: format!("p2 implied by p.1 = {p_dot1}, p1 = {p1}, alpha = {alpha}"),
        })
    }
}

/// `theta = (n_a, n_b, alpha_a, p1, p2a, p2b)` for Model I.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelIParams {
    pub n_a: f64,
    pub n_b: f64,
    pub alpha_a: f64,
    pub p1: f64,
    pub p2a: f64,
    pub p2b: f64,
}

/// `theta = (n_a, n_b, alpha0, p1, p2a, p2b)` for Model II.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelIIParams {
    pub n_a: f64,
    pub n_b: f64,
    pub alpha0: f64,
    pub p1: f64,
    pub p2a: f64,
    pub p2b: f64,
}

/// Coordinate order used by gradients, profiles and the optimizer.
pub const THETA_NAMES_I: [&str; 6] = ["n_a", "n_b", "alpha_a", "p1", "p2a", "p2b"];
pub const THETA_NAMES_II: [&str; 6] = ["n_a", "n_b", "alpha0", "p1", "p2a", "p2b"];

impl ModelIParams {
    pub fn to_array(&self) -> [f64; 6] {
        [self.n_a, self.n_b, self.alpha_a, self.p1, self.p2a, self.p2b]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        ModelIParams {
            n_a: v[0],
            n_b: v[1],
            alpha_a: v[2],
            p1: v[3],
            p2a: v[4],
            p2b: v[5],
        }
    }
}

impl ModelIIParams {
    pub fn to_array(&self) -> [f64; 6] {
        [self.n_a, self.n_b, self.alpha0, self.p1, self.p2a, self.p2b]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        ModelIIParams {
            n_a: v[0],
            n_b: v[1],
            alpha0: v[2],
            p1: v[3],
            p2a: v[4],
            p2b: v[5],
        }
    }
}

fn check_n(stratum: char, n: f64, t: &DrsTable) -> Result<()> {
    if !(n >= t.x0() as f64) || !n.is_finite() {
        return Err(DrsError::InfeasibleN {
            stratum,
            n,
            x0: t.x0(),
        });
    }
    Ok(())
}

fn check_probabilities(values: &[(&str, f64)], alpha: (&str, f64)) -> Result<()> {
    for &(name, v) in values {
        if !(v > 0.0 && v < 1.0) {
            return Err(DrsError::InvalidParams(format!("{name} = {v} outside (0, 1)")));
        }
    }
    if !(0.0..=1.0).contains(&alpha.1) {
        return Err(DrsError::InvalidParams(format!(
            "{} = {} outside [0, 1]",
            alpha.0, alpha.1
        )));
    }
    Ok(())
}

/// Log-likelihood of one stratum with `n` individuals, its gradient with
/// respect to `(n, p1, p2, alpha)`.
///
/// `ln n! - ln (n - x0)! + sum_c x_c ln p_c + (n - x0) ln p00`; the
/// `x_c!` terms are free of both the parameters and `n` and are omitted.
fn stratum_terms(
    t: &DrsTable,
    n: f64,
    p1: f64,
    p2: f64,
    alpha: f64,
    lf: LogFactorial,
) -> (f64, [f64; 4]) {
    let c = cells(p1, p2, alpha, DependenceSign::Positive);
    let [x11, x10, x01] = t.cells().map(|x| x as f64);
    let missed = n - t.x0() as f64;

    let value = lf.eval_unchecked(n) - lf.eval_unchecked(missed)
        + xlny(x11, c.p11)
        + xlny(x10, c.p10)
        + xlny(x01, c.p01)
        + xlny(missed, c.p00);

    let ind = 1.0 - alpha;
    let (q1, q2) = (1.0 - p1, 1.0 - p2);
    // Partial derivatives of (p11, p10, p01, p00) w.r.t. p1, p2, alpha.
    let d_p1 = [alpha + ind * p2, ind * q2, -ind * p2, -alpha - ind * q2];
    let d_p2 = [ind * p1, -ind * p1, ind * q1, -ind * q1];
    let d_alpha = [p1 * q2, -p1 * q2, -q1 * p2, q1 * p2];
    let weights = [
        ratio(x11, c.p11),
        ratio(x10, c.p10),
        ratio(x01, c.p01),
        ratio(missed, c.p00),
    ];
    let dot = |d: [f64; 4]| weights.iter().zip(d).map(|(w, d)| w * d).sum::<f64>();

    let d_n = lf.derivative(n) - lf.derivative(missed) + c.p00.ln();
    (value, [d_n, dot(d_p1), dot(d_p2), dot(d_alpha)])
}

fn ratio(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / p
    }
}

pub fn loglik_model_i(theta: &ModelIParams, data: &StratumPair) -> Result<f64> {
    loglik_model_i_with(theta, data, LogFactorial::Exact)
}

pub fn loglik_model_i_with(
    theta: &ModelIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> Result<f64> {
    Ok(model_i_terms(theta, data, lf)?.0)
}

/// Gradient of the Model-I log-likelihood in the order of [`THETA_NAMES_I`].
pub fn grad_model_i(theta: &ModelIParams, data: &StratumPair, lf: LogFactorial) -> Result<[f64; 6]> {
    Ok(model_i_terms(theta, data, lf)?.1)
}

fn model_i_terms(
    theta: &ModelIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> Result<(f64, [f64; 6])> {
    check_n('A', theta.n_a, &data.a)?;
    check_n('B', theta.n_b, &data.b)?;
    check_probabilities(
        &[("p1", theta.p1), ("p2a", theta.p2a), ("p2b", theta.p2b)],
        ("alpha_a", theta.alpha_a),
    )?;
    Ok(model_i_terms_unchecked(theta, data, lf))
}

pub(crate) fn model_i_terms_unchecked(
    theta: &ModelIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> (f64, [f64; 6]) {
    let (la, ga) = stratum_terms(&data.a, theta.n_a, theta.p1, theta.p2a, theta.alpha_a, lf);
    let (lb, gb) = stratum_terms(&data.b, theta.n_b, theta.p1, theta.p2b, 0.0, lf);
    (la + lb, [ga[0], gb[0], ga[3], ga[1] + gb[1], ga[2], gb[2]])
}

pub fn loglik_model_ii(theta: &ModelIIParams, data: &StratumPair) -> Result<f64> {
    loglik_model_ii_with(theta, data, LogFactorial::Exact)
}

pub fn loglik_model_ii_with(
    theta: &ModelIIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> Result<f64> {
    Ok(model_ii_terms(theta, data, lf)?.0)
}

/// Gradient of the Model-II log-likelihood in the order of [`THETA_NAMES_II`].
pub fn grad_model_ii(
    theta: &ModelIIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> Result<[f64; 6]> {
    Ok(model_ii_terms(theta, data, lf)?.1)
}

fn model_ii_terms(
    theta: &ModelIIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> Result<(f64, [f64; 6])> {
    check_n('A', theta.n_a, &data.a)?;
    check_n('B', theta.n_b, &data.b)?;
    check_probabilities(
        &[("p1", theta.p1), ("p2a", theta.p2a), ("p2b", theta.p2b)],
        ("alpha0", theta.alpha0),
    )?;
    Ok(model_ii_terms_unchecked(theta, data, lf))
}

pub(crate) fn model_ii_terms_unchecked(
    theta: &ModelIIParams,
    data: &StratumPair,
    lf: LogFactorial,
) -> (f64, [f64; 6]) {
    let (la, ga) = stratum_terms(&data.a, theta.n_a, theta.p1, theta.p2a, theta.alpha0, lf);
    let (lb, gb) = stratum_terms(&data.b, theta.n_b, theta.p1, theta.p2b, theta.alpha0, lf);
    (
        la + lb,
        [ga[0], gb[0], ga[3] + gb[3], ga[1] + gb[1], ga[2], gb[2]],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bbm(p1: f64, p2: f64, alpha: f64) -> BbmParams {
        BbmParams::new(p1, p2, alpha, 100.0).unwrap()
    }

    fn children_death() -> StratumPair {
        StratumPair::from_counts((30, 153, 8), (15, 173, 7)).unwrap()
    }

    #[test]
    fn independence_gives_quarters() {
        let c = cell_probabilities(&bbm(0.5, 0.5, 0.0), DependenceSign::Positive);
        for p in c.as_array() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn positive_cells_at_reference_point() {
        let c = cell_probabilities(&bbm(0.6, 0.8, 0.4), DependenceSign::Positive);
        assert_abs_diff_eq!(c.p11, 0.528, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p10, 0.072, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p01, 0.192, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p00, 0.208, epsilon = 1e-12);
    }

    #[test]
    fn perfect_dependence() {
        let c = cell_probabilities(&bbm(0.6, 0.8, 1.0), DependenceSign::Positive);
        assert_abs_diff_eq!(c.p11, 0.6, epsilon = 1e-15);
        assert_eq!(c.p10, 0.0);
        assert_eq!(c.p01, 0.0);
        assert_abs_diff_eq!(c.p00, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn marginals_at_reference_point() {
        let params = bbm(0.6, 0.8, 0.4);
        let (py, pz, cov) = marginals_and_covariance(&params, DependenceSign::Positive);
        assert_abs_diff_eq!(py, 0.6);
        assert_abs_diff_eq!(pz, 0.72, epsilon = 1e-12);
        assert_abs_diff_eq!(cov, 0.096, epsilon = 1e-12);
        let c = cell_probabilities(&params, DependenceSign::Positive);
        assert_abs_diff_eq!(c.p11 + c.p01, pz, epsilon = 1e-12);
        assert_abs_diff_eq!(c.p11 - py * pz, cov, epsilon = 1e-12);

        let (_, pz, cov) = marginals_and_covariance(&bbm(0.3, 0.9, 0.0), DependenceSign::Negative);
        assert_abs_diff_eq!(cov, 0.0);
        assert_abs_diff_eq!(pz, 0.9);
        let (py, pz, _) = marginals_and_covariance(&bbm(0.6, 0.8, 1.0), DependenceSign::Positive);
        assert_abs_diff_eq!(pz, py);
    }

    #[test]
    fn mtb_mapping() {
        let m = to_mtb(&bbm(0.6, 0.8, 0.0)).unwrap();
        assert_eq!(m.phi, 1.0);
        assert_eq!(m.p, 0.8);
        assert_eq!(m.c, 0.8);

        let params = bbm(0.6, 0.8, 0.4);
        let m = to_mtb(&params).unwrap();
        assert_abs_diff_eq!(m.p, 0.48, epsilon = 1e-12);
        assert_abs_diff_eq!(m.phi, 1.0 + 0.4 / 0.48, epsilon = 1e-12);
        assert_abs_diff_eq!(m.c, 0.88, epsilon = 1e-12);
        let c = cell_probabilities(&params, DependenceSign::Positive);
        assert_abs_diff_eq!(m.c, c.p11 / params.p1, epsilon = 1e-12);

        assert_eq!(to_mtb(&bbm(0.6, 0.8, 1.0)), Err(DrsError::DegenerateDependence));

        let back = from_mtb(&m, 100.0).unwrap();
        assert_abs_diff_eq!(back.alpha, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(back.p2, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn p2_inversion() {
        assert_abs_diff_eq!(p2_from_marginal(0.72, 0.6, 0.4).unwrap(), 0.8, epsilon = 1e-12);
        assert_eq!(p2_from_marginal(0.55, 0.2, 0.0).unwrap(), 0.55);
        match p2_from_marginal(0.5, 0.8, 0.8) {
            Err(DrsError::OutOfRange { value, .. }) => assert_abs_diff_eq!(value, -0.7, epsilon = 1e-12),
            other => panic!("expected OutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_population_size_is_signaled() {
        let data = children_death();
        let theta = ModelIParams {
            n_a: data.a.x0() as f64 - 1.0,
            n_b: 300.0,
            alpha_a: 0.1,
            p1: 0.6,
            p2a: 0.3,
            p2b: 0.3,
        };
        assert!(matches!(
            loglik_model_i(&theta, &data),
            Err(DrsError::InfeasibleN { stratum: 'A', .. })
        ));
        let theta = ModelIIParams {
            n_a: 300.0,
            n_b: data.b.x0() as f64 - 0.5,
            alpha0: 0.1,
            p1: 0.6,
            p2a: 0.3,
            p2b: 0.3,
        };
        assert!(matches!(
            loglik_model_ii(&theta, &data),
            Err(DrsError::InfeasibleN { stratum: 'B', .. })
        ));
    }

    #[test]
    fn boundary_population_is_feasible() {
        let data = children_death();
        let theta = ModelIParams {
            n_a: data.a.x0() as f64,
            n_b: data.b.x0() as f64,
            alpha_a: 0.1,
            p1: 0.6,
            p2a: 0.3,
            p2b: 0.3,
        };
        assert!(loglik_model_i(&theta, &data).unwrap().is_finite());
    }
}
