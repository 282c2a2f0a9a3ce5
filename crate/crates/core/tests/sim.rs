use drs_core::model::DependenceSign;
use drs_core::sim::{generate_stratum, rng_stream, SamplingMode};
use drs_core::{
    run_study, BbmParams, DesignPoint, DrsError, EstimatorOptions, Method, ModelKind, PresetReading,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn design(preset: &str, model: ModelKind, na: u64, nb: u64, alpha: f64, reps: usize, seed: u64) -> DesignPoint {
    DesignPoint::from_preset(preset, PresetReading::Direct, model, na, nb, alpha, reps, seed).unwrap()
}

#[test]
fn sampling_modes_agree() {
    let params = BbmParams::new(0.6, 0.8, 0.4, 240.0).unwrap();
    let mut pooled = [[0u64; 4]; 2];
    for (k, mode) in [SamplingMode::Multinomial, SamplingMode::Individual].into_iter().enumerate() {
        let mut rng = rng_stream(2026, k as u64);
        for _ in 0..10_000 {
            let t = generate_stratum(&params, DependenceSign::Positive, mode, &mut rng);
            pooled[k][0] += t.x11;
            pooled[k][1] += t.x10;
            pooled[k][2] += t.x01;
            pooled[k][3] += 240 - t.x0();
        }
    }
    let total: f64 = pooled.iter().flatten().map(|&v| v as f64).sum();
    let rows: Vec<f64> = pooled.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let mut stat = 0.0;
    for j in 0..4 {
        let col = (pooled[0][j] + pooled[1][j]) as f64;
        for (i, row) in rows.iter().enumerate() {
            let e = row * col / total;
            stat += (pooled[i][j] as f64 - e).powi(2) / e;
        }
    }
    let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

#[test]
fn multinomial_concentrates_on_cell_probability() {
    let params = BbmParams::new(0.6, 0.8, 0.4, 1e6).unwrap();
    let t = generate_stratum(&params, DependenceSign::Positive, SamplingMode::Multinomial, &mut rng_stream(5, 0));
    let tol = 3.0 * (0.528f64 * 0.472 / 1e6).sqrt();
    assert!((t.x11 as f64 / 1e6 - 0.528).abs() < tol);
}

#[test]
fn studies_rerun_bit_identically() {
    let d = design("P2", ModelKind::I, 240, 200, 0.4, 200, 77);
    let methods = [Method::MmeI, Method::Lp, Method::Nour, Method::Wolter2];
    let a = run_study(&d, &methods, &EstimatorOptions::default()).unwrap();
    let b = run_study(&d, &methods, &EstimatorOptions::default()).unwrap();
    assert_eq!(a, b);
    let threads = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = threads.install(|| run_study(&d, &methods, &EstimatorOptions::default()).unwrap());
    assert_eq!(a, c);
}

#[test]
fn moment_estimator_nearly_unbiased_across_presets() {
    for preset in ["P1", "P2", "P3", "P4", "P5", "P6"] {
        let d = design(preset, ModelKind::I, 1200, 1000, 0.4, 1000, 3);
        let s = run_study(&d, &[Method::MmeI], &EstimatorOptions::default()).unwrap();
        let mean = s.get(Method::MmeI).unwrap().stats().unwrap().mean_na;
        assert!((mean - 1200.0).abs() / 1200.0 < 0.01, "{preset}: {mean}");
    }
}

#[test]
fn nour_biased_down_under_strong_dependence() {
    let d = design("P1", ModelKind::I, 240, 200, 0.8, 1000, 8);
    let s = run_study(&d, &[Method::Nour], &EstimatorOptions::default()).unwrap();
    assert!(s.get(Method::Nour).unwrap().stats().unwrap().mean_na < 240.0);
}

#[test]
fn dependence_inflates_lincoln_petersen_error() {
    let run = |alpha| {
        let d = design("P1", ModelKind::I, 240, 200, alpha, 1000, 21);
        run_study(&d, &[Method::Lp], &EstimatorOptions::default())
            .unwrap()
            .get(Method::Lp)
            .unwrap()
            .stats()
            .unwrap()
            .rrmse_na
    };
    assert!(run(0.0) <= run(0.8));
}

#[test]
fn all_failed_estimator_is_reported() {
    let d = DesignPoint {
        name: "sparse".into(),
        p1_a: 0.1,
        p2_a: 0.1,
        p1_b: 0.1,
        p2_b: 0.1,
        alpha: 0.0,
        n_a: 200,
        n_b: 200,
        model: ModelKind::I,
        replicates: 50,
        seed: 1,
        sign: DependenceSign::Positive,
        mode: SamplingMode::Multinomial,
    };
    let s = run_study(&d, &[Method::Nour, Method::Lp], &EstimatorOptions::default()).unwrap();
    let nour = s.get(Method::Nour).unwrap();
    assert!(matches!(nour.stats(), Err(DrsError::AllReplicatesFailed { count: 50, .. })));
    assert!(s.check().is_err());
}

#[test]
fn marginal_reading_recovers_marginals() {
    let d = DesignPoint::from_preset("P4", PresetReading::Marginal, ModelKind::I, 1200, 1000, 0.4, 10, 1).unwrap();
    let (a, _) = d.stratum_params().unwrap();
    assert!((a.alpha * a.p1 + (1.0 - a.alpha) * a.p2 - 0.7).abs() < 1e-12);
}

#[test]
fn model_ii_strong_dependence_completes() {
    let d = design("P6", ModelKind::II, 240, 200, 0.8, 100, 1);
    let s = run_study(&d, &[Method::MleII], &EstimatorOptions::default()).unwrap();
    let st = s.get(Method::MleII).unwrap().stats().unwrap();
    assert!(st.mean_na.is_finite() && st.ci_na.0 <= st.ci_na.1);
}

fn moment_estimator_spread() -> (f64, f64) {
    let d = DesignPoint {
        name: "spread".into(),
        p1_a: 0.6,
        p2_a: 0.8,
        p1_b: 0.6,
        p2_b: 0.8,
        alpha: 0.4,
        n_a: 1200,
        n_b: 1000,
        model: ModelKind::I,
        replicates: 100_000,
        seed: 404,
        sign: DependenceSign::Positive,
        mode: SamplingMode::Multinomial,
    };
    let s = run_study(&d, &[Method::MmeI], &EstimatorOptions::default()).unwrap();
    let st = s.get(Method::MmeI).unwrap().stats().unwrap().clone();
    (st.mean_na, st.sd_na * st.sd_na)
}

#[test]
fn moment_estimator_variance_matches_delta_method() {
    // N_A = x1.A / p1_hat with p1_hat = x11B / x.1B:
    // Var ~ N_A (1 - p1) / p1 + N_A r (1 - p1) / (p1 p.1B).
    let (na, r, p1, pd1b) = (1200.0, 1.2, 0.6, 0.8);
    let delta = na * (1.0 - p1) / p1 + na * r * (1.0 - p1) / (p1 * pd1b);
    let (_, var) = moment_estimator_spread();
    assert!((var - delta).abs() / delta < 0.10, "{var} vs {delta}");
}

#[test]
fn moment_estimator_variance_matches_closed_form() {
    let t = drs_core::mme::closed_form_moments(1200.0, 1.2, 0.6, 0.8, 0.32).unwrap();
    let (mean, var) = moment_estimator_spread();
    assert!((mean - t.mean).abs() < 1.0, "{mean} vs {}", t.mean);
    assert!((var - t.variance).abs() / t.variance < 0.10, "{var} vs {}", t.variance);
}
