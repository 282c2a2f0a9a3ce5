//! Closed-form method-of-moments estimators for Models I and II.

use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::result::{Clamp, EstimateResult, Method};
use crate::table::StratumPair;

fn nonzero(value: i128, what: &str) -> Result<f64> {
    if value == 0 {
        Err(DrsError::DivisionByZero(what.to_string()))
    } else {
        Ok(value as f64)
    }
}

/// Model I: stratum B independent (Lincoln-Petersen), stratum A under the
/// Bivariate Bernoulli model with the List-1 probability shared with B.
///
/// The dependence fraction is clamped to [0, 1]; `p2a` is then recomputed
/// from `p2a (1 - alpha) = x01A x11B / (x01B x1.A)` with the clamped value,
/// so the observed count `x0A` is still matched exactly.
pub fn mme_model_i(data: &StratumPair) -> Result<EstimateResult> {
    let (a, b) = (&data.a, &data.b);
    let [x11a, x10a, x01a] = a.cells().map(i128::from);
    let [x11b, _, x01b] = b.cells().map(i128::from);
    let (x1a, x1b, xd1b) = (
        i128::from(a.x1dot()),
        i128::from(b.x1dot()),
        i128::from(b.xdot1()),
    );

    let x11b_f = nonzero(x11b, "x11B")?;
    let x01b_f = nonzero(x01b, "x01B")?;
    let x1a_f = nonzero(x1a, "x1.A")?;

    let p1 = x11b_f / xd1b as f64;
    let p2b = x11b_f / x1b as f64;
    let n_b = (x1b * xd1b) as f64 / x11b_f;
    let n_a = (x1a * xd1b) as f64 / x11b_f;

    // p2a (1 - alpha): product of the "missed by List 1" rates.
    let missed_share = (x01a * x11b) as f64 / (x01b_f * x1a_f);
    let alpha_raw = (x11a * x01b - x01a * x11b) as f64 / (x01b_f * x1a_f);
    let alpha = alpha_raw.clamp(0.0, 1.0);
    let clamp = if alpha_raw < 0.0 {
        Clamp::Lower
    } else if alpha_raw > 1.0 {
        Clamp::Upper
    } else {
        Clamp::None
    };

    let p2a_denominator = x10a * x01b + x01a * x11b;
    let p2a_unclamped = (x01a * x11b) as f64 / nonzero(p2a_denominator, "x10A*x01B + x01A*x11B")?;
    let p2a = if alpha < 1.0 {
        (missed_share / (1.0 - alpha)).min(1.0)
    } else {
        p2a_unclamped
    };

    let mut r = EstimateResult::new(Method::MmeI)
        .with("n_a", n_a)
        .with("n_b", n_b)
        .with("p1", p1)
        .with("p2a", p2a)
        .with("p2b", p2b)
        .with("alpha_a", alpha);
    r.diagnostics.alpha_clamp = Some(clamp);
    r.diagnostics.values.insert("alpha_a_unclamped".into(), alpha_raw);
    r.diagnostics.values.insert("p2a_unclamped".into(), p2a_unclamped);
    if clamp != Clamp::None {
        r.note(format!("alpha_a clamped from {alpha_raw:.6}"));
    }
    Ok(r)
}

/// Model II: both strata under the Bivariate Bernoulli model with shared
/// `p1` and shared `alpha0`. Frequently infeasible; the likelihood fit is
/// preferred.
pub fn mme_model_ii(data: &StratumPair) -> Result<EstimateResult> {
    let (a, b) = (&data.a, &data.b);
    let [_, x10a, x01a] = a.cells().map(i128::from);
    let [_, x10b, x01b] = b.cells().map(i128::from);
    let (x1a, x1b) = (i128::from(a.x1dot()), i128::from(b.x1dot()));

    let cross = nonzero(x01a * x10b - x10a * x01b, "x01A*x10B - x10A*x01B")?;
    let lead = nonzero(x1a * x10b - x1b * x10a, "x1.A*x10B - x1.B*x10A")?;
    let x1a_f = nonzero(x1a, "x1.A")?;
    let x1b_f = nonzero(x1b, "x1.B")?;
    let x10a_f = nonzero(x10a, "x10A")?;

    // Solving the moment equations, the ratio x01A x1.B / (x1.A x01B)
    // equals p2A / p2B, which pins the x01A-led expression to stratum A.
    let p2a = x01a as f64 * lead / (x1a_f * cross);
    let p2b = x01b as f64 * lead / (x1b_f * cross);
    let alpha0 = 1.0 - (x10a_f / x1a_f) / (1.0 - p2a);
    let p1 = 1.0 / (1.0 + (x01a as f64 / x10a_f) * (1.0 / p2a - 1.0));
    let n_a = x1a_f / p1;
    let n_b = x1b_f / p1;

    if x01a != x10a {
        let bound = x01a as f64 / (x01a - x10a) as f64;
        if x01a > x10a && p2a > bound {
            return Err(DrsError::Infeasible(format!(
                "p2A = {p2a:.4} exceeds x01A/(x01A - x10A) = {bound:.4}; p1, N_A and N_B turn negative"
            )));
        }
    }
    for (name, v) in [("p1", p1), ("p2a", p2a), ("p2b", p2b)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(DrsError::Infeasible(format!("{name} = {v:.4} outside (0, 1)")));
        }
    }
    if !(0.0..=1.0).contains(&alpha0) {
        return Err(DrsError::Infeasible(format!("alpha0 = {alpha0:.4} outside [0, 1]")));
    }
    if !(n_a > 0.0 && n_b > 0.0) {
        return Err(DrsError::Infeasible(format!(
            "nonpositive population estimate (N_A = {n_a:.2}, N_B = {n_b:.2})"
        )));
    }

    let mut r = EstimateResult::new(Method::MmeII)
        .with("n_a", n_a)
        .with("n_b", n_b)
        .with("p1", p1)
        .with("p2a", p2a)
        .with("p2b", p2b)
        .with("alpha0", alpha0);
    r.note("not recommended: moment estimates under Model II are unstable; prefer MLE-II");
    Ok(r)
}

/// Large-sample mean and variance of the Model-I estimator of `N_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormMoments {
    pub mean: f64,
    pub variance: f64,
    pub ratio_r: f64,
}

/// `E ≈ N_A + r p01B / (p1 p.1B²)` and
/// `V ≈ N_A (1 - p1) + r p01B (1 + p1) / (p1² p.1B²)` with `r = N_A / N_B`.
pub fn closed_form_moments(
    n_a: f64,
    r: f64,
    p1: f64,
    p_dot1b: f64,
    p01b: f64,
) -> Result<ClosedFormMoments> {
    for (name, v) in [("p1", p1), ("p.1B", p_dot1b), ("p01B", p01b)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(DrsError::Domain(format!("{name} = {v} outside (0, 1)")));
        }
    }
    if !(n_a > 0.0) || !(r >= 0.0) {
        return Err(DrsError::Domain(format!(
            "need n_a > 0 and r >= 0, got n_a = {n_a}, r = {r}"
        )));
    }
    let denom = p_dot1b * p_dot1b;
    Ok(ClosedFormMoments {
        mean: n_a + r * p01b / (p1 * denom),
        variance: n_a * (1.0 - p1) + r * p01b * (1.0 + p1) / (p1 * p1 * denom),
        ratio_r: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(a: (i64, i64, i64), b: (i64, i64, i64)) -> StratumPair {
        StratumPair::from_counts(a, b).unwrap()
    }

    #[test]
    fn children_death_model_i() {
        let r = mme_model_i(&pair((30, 153, 8), (15, 173, 7))).unwrap();
        assert_eq!(r.n_a(), Some(268));
        assert_eq!(r.n_b(), Some(275));
        let alpha = r.get("alpha_a").unwrap();
        assert!((0.069..=0.071).contains(&alpha), "alpha = {alpha}");
        assert_eq!(r.diagnostics.alpha_clamp, Some(Clamp::None));
    }

    #[test]
    fn voles_model_i_population_sizes() {
        let r = mme_model_i(&pair((46, 20, 11), (54, 5, 13))).unwrap();
        // 66 * 67 / 54 = 81.89; see the integration tests for the rounding
        // discussion around the published value 82.
        assert_abs_diff_eq!(r.get("n_a").unwrap(), 4422.0 / 54.0, epsilon = 1e-12);
        assert_eq!(r.n_b(), Some(73));
    }

    #[test]
    fn clamp_fires_at_lower_boundary() {
        // x01A xd1B / (x01B x1A) >= xd1A / x1A.
        let r = mme_model_i(&pair((5, 50, 40), (30, 30, 10))).unwrap();
        assert_eq!(r.get("alpha_a"), Some(0.0));
        assert_eq!(r.diagnostics.alpha_clamp, Some(Clamp::Lower));
        assert!(r.diagnostics.values["alpha_a_unclamped"] < 0.0);
    }

    #[test]
    fn identical_strata_reduce_to_lincoln_petersen() {
        let r = mme_model_i(&pair((40, 25, 17), (40, 25, 17))).unwrap();
        assert_eq!(r.get("alpha_a"), Some(0.0));
        assert_abs_diff_eq!(r.get("n_a").unwrap(), 65.0 * 57.0 / 40.0, epsilon = 1e-12);
    }

    #[test]
    fn model_i_zero_denominators_name_the_cell() {
        let err = mme_model_i(&pair((1, 2, 3), (0, 4, 5))).unwrap_err();
        assert_eq!(err, DrsError::DivisionByZero("x11B".into()));
        let err = mme_model_i(&pair((1, 2, 3), (4, 4, 0))).unwrap_err();
        assert_eq!(err, DrsError::DivisionByZero("x01B".into()));
    }

    #[test]
    fn model_ii_degenerate_cross_term() {
        // x01A x10B = x10A x01B
        let err = mme_model_ii(&pair((10, 4, 6), (12, 2, 3))).unwrap_err();
        assert!(matches!(err, DrsError::DivisionByZero(_)));
    }

    #[test]
    fn model_ii_encephalitis_is_infeasible() {
        assert!(matches!(
            mme_model_ii(&pair((39, 290, 39), (20, 78, 15))),
            Err(DrsError::Infeasible(_))
        ));
    }

    #[test]
    fn closed_form_reference_values() {
        let t = closed_form_moments(1200.0, 1.2, 0.6, 0.8, 0.32).unwrap();
        assert_abs_diff_eq!(t.mean, 1201.0, epsilon = 1e-9);
        assert_abs_diff_eq!(t.variance, 480.0 + 0.6144 / 0.2304, epsilon = 1e-9);
        assert_abs_diff_eq!(t.variance, 482.6667, epsilon = 1e-4);
    }

    #[test]
    fn closed_form_limits() {
        let t = closed_form_moments(500.0, 0.0, 0.3, 0.7, 0.2).unwrap();
        assert_eq!(t.mean, 500.0);
        assert_abs_diff_eq!(t.variance, 500.0 * 0.7, epsilon = 1e-12);

        let (r, p01, pd) = (1.5, 0.3, 0.6);
        let near_one = closed_form_moments(10.0, r, 1.0 - 1e-9, pd, p01).unwrap();
        assert_abs_diff_eq!(near_one.variance, r * p01 * 2.0 / (pd * pd), epsilon = 1e-6);
    }

    #[test]
    fn closed_form_rejects_bad_probabilities() {
        assert!(matches!(
            closed_form_moments(10.0, 1.0, 1.2, 0.5, 0.2),
            Err(DrsError::Domain(_))
        ));
    }
}
