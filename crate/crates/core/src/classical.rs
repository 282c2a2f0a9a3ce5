//! Comparator estimators: Lincoln-Petersen, Nour, and Wolter's two
//! sex-ratio models.

use crate::error::{DrsError, Result};
use crate::result::{EstimateResult, Method};
use crate::table::{DrsTable, StratumPair};

/// Unrounded `x1. x.1 / x11`.
pub fn lincoln_petersen_value(t: &DrsTable) -> Result<f64> {
    if t.x11 == 0 {
        return Err(DrsError::DivisionByZero("x11".into()));
    }
    Ok((t.x1dot() as f64 * t.xdot1() as f64) / t.x11 as f64)
}

/// Lincoln-Petersen estimate for a single table, reported floored.
pub fn lincoln_petersen(t: &DrsTable) -> Result<EstimateResult> {
    let n = lincoln_petersen_value(t)?;
    Ok(EstimateResult::new(Method::Lp)
        .with("n", n)
        .with("p1dot", t.x1dot() as f64 / n)
        .with("pdot1", t.xdot1() as f64 / n))
}

/// Unrounded Nour estimate:
/// `x0 + x10 x01 x1. x.1 / (x11 (x11² - x10 x01))`.
///
/// The closed form is not printed alongside the Bivariate Bernoulli work;
/// it is the positive-dependence vital-registration estimator of Nour
/// (1982), checked against the published voles values (86 and 74) and the
/// published inapplicability of the encephalitis and child-mortality strata.
pub fn nour_value(t: &DrsTable) -> Result<f64> {
    let x11 = t.x11 as f64;
    let cross = t.x10 as f64 * t.x01 as f64;
    let gap = x11 * x11 - cross;
    if !(gap > 0.0) {
        return Err(DrsError::ConditionViolated(format!(
            "Nour requires x11^2 > x10*x01, got {}^2 = {} <= {} * {} = {}",
            t.x11,
            x11 * x11,
            t.x10,
            t.x01,
            cross
        )));
    }
    Ok(t.x0() as f64 + cross * t.x1dot() as f64 * t.xdot1() as f64 / (x11 * gap))
}

/// Nour estimate for a single table, rounded half up.
pub fn nour(t: &DrsTable) -> Result<EstimateResult> {
    Ok(EstimateResult::new(Method::Nour).with("n", nour_value(t)?))
}

/// Wolter's cross-product ratio `K` for the equal-dependence model.
pub fn wolter_k(data: &StratumPair) -> Result<f64> {
    let (a, b) = (&data.a, &data.b);
    let factors = [
        (a.x1dot() - a.x11, "x1.A - x11A"),
        (a.xdot1() - a.x11, "x.1A - x11A"),
        (a.x11, "x11A"),
        (b.x1dot() - b.x11, "x1.B - x11B"),
        (b.xdot1() - b.x11, "x.1B - x11B"),
        (b.x11, "x11B"),
    ];
    if let Some((_, name)) = factors.iter().find(|(v, _)| *v == 0) {
        return Err(DrsError::DivisionByZero(format!("{name} (factor of K)")));
    }
    let f = factors.map(|(v, _)| v as f64);
    Ok(f[5] * f[0] * f[1] / (f[2] * f[3] * f[4]))
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(DrsError::InvalidParams(format!("sex ratio r = {r} must be positive")))
    }
}

/// Wolter Model 1: equal but unknown cross-product ratios in both strata,
/// with known `r = N_A / N_B`.
pub fn wolter_model1(data: &StratumPair, r: f64) -> Result<EstimateResult> {
    check_ratio(r)?;
    let k = wolter_k(data)?;
    if k <= r {
        return Err(DrsError::Infeasible(format!("Wolter Model 1 requires K > r, got K = {k:.4} <= r = {r}")));
    }
    let n_b = (k * data.b.x0() as f64 - data.a.x0() as f64) / (k - r);
    let mut out = EstimateResult::new(Method::Wolter1)
        .with("n_a", r * n_b)
        .with("n_b", n_b);
    out.diagnostics.values.insert("K".into(), k);
    out.diagnostics.values.insert("r".into(), r);
    Ok(out)
}

/// Wolter Model 2: stratum B independent, `N_A = r N_B`.
pub fn wolter_model2(data: &StratumPair, r: f64) -> Result<EstimateResult> {
    check_ratio(r)?;
    let n_b = lincoln_petersen_value(&data.b)
        .map_err(|_| DrsError::DivisionByZero("x11B".into()))?;
    let mut out = EstimateResult::new(Method::Wolter2)
        .with("n_a", r * n_b)
        .with("n_b", n_b);
    out.diagnostics.values.insert("r".into(), r);
    Ok(out)
}
