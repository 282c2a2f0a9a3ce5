use drs_core::mle::{ModelKind, Problem};
use drs_core::model::{
    cell_probabilities, from_mtb, grad_model_i, grad_model_ii, loglik_model_i_with, marginals_and_covariance,
    to_mtb, DependenceSign, ModelIIParams, ModelIParams,
};
use drs_core::{BbmParams, LogFactorial, StratumPair};
use proptest::prelude::*;

const SIGNS: [DependenceSign; 2] = [DependenceSign::Positive, DependenceSign::Negative];

fn unit() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn cells_normalize_and_match_moments(p1 in unit(), p2 in unit(), alpha in 0.0f64..=1.0) {
        let params = BbmParams::new(p1, p2, alpha, 100.0).unwrap();
        for sign in SIGNS {
            let c = cell_probabilities(&params, sign);
            prop_assert!((c.total() - 1.0).abs() < 1e-12);
            prop_assert!(c.as_array().iter().all(|&p| p >= 0.0));
            let (m1, m2, cov) = marginals_and_covariance(&params, sign);
            prop_assert!((c.p11 + c.p10 - m1).abs() < 1e-12);
            prop_assert!((c.p11 + c.p01 - m2).abs() < 1e-12);
            // Cov(Y, Z) = p11 - p1. p.1
            prop_assert!((c.p11 - m1 * m2 - cov).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn mtb_round_trip(p1 in unit(), p2 in unit(), alpha in 0.0f64..0.95) {
        let params = BbmParams::new(p1, p2, alpha, 500.0).unwrap();
        let mtb = to_mtb(&params).unwrap();
        prop_assert!(mtb.phi >= 1.0);
        let back = from_mtb(&mtb, 500.0).unwrap();
        prop_assert!((back.p2 - p2).abs() < 1e-9);
        prop_assert!((back.alpha - alpha).abs() < 1e-9);
    }

    #[test]
    fn stirling_tracks_exact(n in 100.0f64..1e6) {
        let exact = LogFactorial::Exact.eval(n).unwrap();
        let stirling = LogFactorial::Stirling.eval(n).unwrap();
        prop_assert!((exact - stirling).abs() < 1e-3);
    }
}

#[test]
fn alpha_one_has_no_mtb_form() {
    let params = BbmParams::new(0.5, 0.5, 1.0, 10.0).unwrap();
    assert!(to_mtb(&params).is_err());
}

#[test]
fn expected_cells_at_reference_point() {
    let c = cell_probabilities(&BbmParams::new(0.6, 0.8, 0.4, 1.0).unwrap(), DependenceSign::Positive);
    assert!((c.p11 - 0.528).abs() < 1e-15);
    assert!((c.p10 - 0.072).abs() < 1e-15);
    assert!((c.p01 - 0.192).abs() < 1e-15);
    assert!((c.p00 - 0.208).abs() < 1e-15);
}

fn data() -> StratumPair {
    StratumPair::from_counts((30, 153, 8), (15, 173, 7)).unwrap()
}

fn fd_check(model: ModelKind, theta: [f64; 6]) -> Result<(), TestCaseError> {
    let d = data();
    let problem = Problem::new(model, &d, LogFactorial::Exact, None);
    let u = problem.encode(theta);
    let analytic = problem.gradient(&u);
    let h = 1e-6;
    for i in 0..u.len() {
        let mut up = u.clone();
        let mut down = u.clone();
        up[i] += h;
        down[i] -= h;
        let fd = (problem.loglik(&up) - problem.loglik(&down)) / (2.0 * h);
        let scale = analytic[i].abs().max(1.0);
        prop_assert!(
            (fd - analytic[i]).abs() / scale < 1e-4,
            "coordinate {i}: fd {fd}, analytic {}",
            analytic[i]
        );
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_model_i(
        extra_a in 1.0f64..400.0, extra_b in 1.0f64..400.0, alpha in 0.02f64..0.98,
        p1 in 0.02f64..0.98, p2a in 0.02f64..0.98, p2b in 0.02f64..0.98,
    ) {
        let d = data();
        fd_check(ModelKind::I, [d.a.x0() as f64 + extra_a, d.b.x0() as f64 + extra_b, alpha, p1, p2a, p2b])?;
    }

    #[test]
    fn gradient_model_ii(
        extra_a in 1.0f64..400.0, extra_b in 1.0f64..400.0, alpha in 0.02f64..0.98,
        p1 in 0.02f64..0.98, p2a in 0.02f64..0.98, p2b in 0.02f64..0.98,
    ) {
        let d = data();
        fd_check(ModelKind::II, [d.a.x0() as f64 + extra_a, d.b.x0() as f64 + extra_b, alpha, p1, p2a, p2b])?;
    }
}

#[test]
fn natural_scale_gradients_agree_with_transformed() {
    let d = data();
    let theta = ModelIParams::from_array([300.0, 290.0, 0.1, 0.6, 0.12, 0.09]);
    let g = grad_model_i(&theta, &d, LogFactorial::Exact).unwrap();
    let h = 1e-5;
    let mut up = theta;
    up.n_a += h;
    let mut down = theta;
    down.n_a -= h;
    let fd = (loglik_model_i_with(&up, &d, LogFactorial::Exact).unwrap()
        - loglik_model_i_with(&down, &d, LogFactorial::Exact).unwrap())
        / (2.0 * h);
    assert!((fd - g[0]).abs() < 1e-6, "{fd} vs {}", g[0]);

    let theta = ModelIIParams::from_array([300.0, 290.0, 0.1, 0.6, 0.12, 0.09]);
    assert!(grad_model_ii(&theta, &d, LogFactorial::Exact).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn population_below_observed_is_infeasible() {
    let d = data();
    let theta = ModelIParams::from_array([100.0, 290.0, 0.1, 0.6, 0.12, 0.09]);
    assert!(matches!(
        loglik_model_i_with(&theta, &d, LogFactorial::Exact),
        Err(drs_core::DrsError::InfeasibleN { stratum: 'A', .. })
    ));
}
