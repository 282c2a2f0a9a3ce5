//! Maximum-likelihood fitting of Models I and II.
//!
//! The likelihood is maximized with Nelder-Mead on a transformed space:
//! `n_k = lower_k + exp(u)` for population sizes and logits for the
//! probabilities and the dependence fraction. A known sub-population ratio
//! `r = n_a / n_b` removes `n_b` from the free coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};
use crate::mme::{mme_model_i, mme_model_ii};
use crate::model::{
    loglik_model_i_with, loglik_model_ii_with, model_i_terms_unchecked, model_ii_terms_unchecked,
    ModelIIParams, ModelIParams, THETA_NAMES_I, THETA_NAMES_II,
};
use crate::numeric::{expit, logit, LogFactorial};
use crate::optim::{minimize, polish, Minimum, NelderMeadOptions};
use crate::result::{EstimateResult, Method};
use crate::table::StratumPair;

const PROB_FLOOR: f64 = 1e-8;
const START_MARGIN: f64 = 1e-4;
const JITTER_N: f64 = 0.20;
const POLISH_ITERATIONS: usize = 200;
const POLISH_GTOL: f64 = 1e-7;
const JITTER_LOGIT: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    I,
    II,
}

impl ModelKind {
    pub fn names(self) -> [&'static str; 6] {
        match self {
            ModelKind::I => THETA_NAMES_I,
            ModelKind::II => THETA_NAMES_II,
        }
    }

    pub fn alpha_name(self) -> &'static str {
        self.names()[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Absolute change in log-likelihood.
    pub objective_tolerance: f64,
    /// On the transformed scale.
    pub parameter_tolerance: f64,
    pub multistart: usize,
    /// Known `n_a / n_b`.
    pub known_ratio: Option<f64>,
    pub seed: u64,
    pub log_factorial: LogFactorial,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 2000,
            objective_tolerance: 1e-9,
            parameter_tolerance: 1e-8,
            multistart: 5,
            known_ratio: None,
            seed: 0,
            log_factorial: LogFactorial::Exact,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || self.multistart == 0
            || !(self.objective_tolerance > 0.0)
            || !(self.parameter_tolerance > 0.0)
        {
            return Err(DrsError::InvalidParams(
                "fit configuration values must be positive".into(),
            ));
        }
        if let Some(r) = self.known_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(DrsError::InvalidParams(format!("known ratio r = {r} must be positive")));
            }
        }
        Ok(())
    }
}

/// A parameter vector for either model, in the coordinate order of
/// [`ModelKind::names`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Theta {
    I(ModelIParams),
    II(ModelIIParams),
}

impl Theta {
    pub fn model(&self) -> ModelKind {
        match self {
            Theta::I(_) => ModelKind::I,
            Theta::II(_) => ModelKind::II,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        match self {
            Theta::I(t) => t.to_array(),
            Theta::II(t) => t.to_array(),
        }
    }

    pub fn from_array(model: ModelKind, v: [f64; 6]) -> Theta {
        match model {
            ModelKind::I => Theta::I(ModelIParams::from_array(v)),
            ModelKind::II => Theta::II(ModelIIParams::from_array(v)),
        }
    }

    pub fn loglik(&self, data: &StratumPair, lf: LogFactorial) -> Result<f64> {
        match self {
            Theta::I(t) => loglik_model_i_with(t, data, lf),
            Theta::II(t) => loglik_model_ii_with(t, data, lf),
        }
    }
}

/// The optimization problem in transformed coordinates.
pub struct Problem<'a> {
    model: ModelKind,
    data: &'a StratumPair,
    lf: LogFactorial,
    ratio: Option<f64>,
    lower_a: f64,
    lower_b: f64,
}

impl<'a> Problem<'a> {
    pub fn new(
        model: ModelKind,
        data: &'a StratumPair,
        lf: LogFactorial,
        ratio: Option<f64>,
    ) -> Self {
        let x0a = data.a.x0() as f64;
        let x0b = data.b.x0() as f64;
        let lower_a = match ratio {
            Some(r) => x0a.max(r * x0b),
            None => x0a,
        };
        Problem {
            model,
            data,
            lf,
            ratio,
            lower_a,
            lower_b: x0b,
        }
    }

    pub fn dim(&self) -> usize {
        if self.ratio.is_some() {
            5
        } else {
            6
        }
    }

    fn prob_slots(&self) -> std::ops::Range<usize> {
        self.dim() - 4..self.dim()
    }

    /// Transformed coordinates to `[n_a, n_b, alpha, p1, p2a, p2b]`.
    pub fn decode(&self, u: &[f64]) -> [f64; 6] {
        let n_a = self.lower_a + u[0].exp();
        let n_b = match self.ratio {
            Some(r) => n_a / r,
            None => self.lower_b + u[1].exp(),
        };
        let probs = self.prob_slots().map(|i| clip(expit(u[i])));
        let mut out = [n_a, n_b, 0.0, 0.0, 0.0, 0.0];
        for (slot, p) in out[2..].iter_mut().zip(probs) {
            *slot = p;
        }
        out
    }

    /// Inverse of [`Problem::decode`], nudging boundary values into the
    /// interior.
    pub fn encode(&self, theta: [f64; 6]) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.dim());
        u.push((theta[0] - self.lower_a).max(START_MARGIN).ln());
        if self.ratio.is_none() {
            u.push((theta[1] - self.lower_b).max(START_MARGIN).ln());
        }
        for &p in &theta[2..] {
            u.push(logit(p.clamp(START_MARGIN, 1.0 - START_MARGIN)));
        }
        u
    }

    /// Inverse of [`Problem::decode`] for points already inside the
    /// optimizer's domain, such as a fitted optimum.
    pub fn encode_exact(&self, theta: [f64; 6]) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.dim());
        u.push((theta[0] - self.lower_a).ln());
        if self.ratio.is_none() {
            u.push((theta[1] - self.lower_b).ln());
        }
        for &p in &theta[2..] {
            u.push(logit(clip(p)));
        }
        u
    }

    fn terms(&self, theta: &[f64; 6]) -> (f64, [f64; 6]) {
        match self.model {
            ModelKind::I => model_i_terms_unchecked(&ModelIParams::from_array(*theta), self.data, self.lf),
            ModelKind::II => {
                model_ii_terms_unchecked(&ModelIIParams::from_array(*theta), self.data, self.lf)
            }
        }
    }

    pub fn loglik(&self, u: &[f64]) -> f64 {
        self.terms(&self.decode(u)).0
    }

    /// Analytic gradient of the log-likelihood with respect to the
    /// transformed coordinates.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let theta = self.decode(u);
        let (_, g) = self.terms(&theta);
        let mut out = Vec::with_capacity(self.dim());
        let jac_a = theta[0] - self.lower_a;
        match self.ratio {
            Some(r) => out.push(jac_a * (g[0] + g[1] / r)),
            None => {
                out.push(jac_a * g[0]);
                out.push((theta[1] - self.lower_b) * g[1]);
            }
        }
        for (i, slot) in self.prob_slots().enumerate() {
            let p = theta[2 + i];
            let raw = expit(u[slot]);
            let jac = if raw == p { p * (1.0 - p) } else { 0.0 };
            out.push(jac * g[2 + i]);
        }
        out
    }
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

pub fn mle_model_i(data: &StratumPair, cfg: &FitConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let mut notes = Vec::new();
    let start = match mme_model_i(data) {
        Ok(m) => [
            m.get("n_a").unwrap(),
            m.get("n_b").unwrap(),
            m.get("alpha_a").unwrap(),
            m.get("p1").unwrap(),
            m.get("p2a").unwrap(),
            m.get("p2b").unwrap(),
        ],
        Err(e) => {
            notes.push(format!("moment start unavailable ({e}); using neutral start"));
            neutral_start(data)
        }
    };
    fit(ModelKind::I, data, cfg, vec![start], notes)
}

pub fn mle_model_ii(data: &StratumPair, cfg: &FitConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let mut starts = Vec::new();
    let mut notes = Vec::new();
    if let Ok(m) = mme_model_ii(data) {
        starts.push([
            m.get("n_a").unwrap(),
            m.get("n_b").unwrap(),
            m.get("alpha0").unwrap(),
            m.get("p1").unwrap(),
            m.get("p2a").unwrap(),
            m.get("p2b").unwrap(),
        ]);
    }
    starts.push(default_model_ii_start(data));
    if starts.len() == 1 {
        notes.push("moment start infeasible; using default start".to_string());
    }
    fit(ModelKind::II, data, cfg, starts, notes)
}

fn neutral_start(data: &StratumPair) -> [f64; 6] {
    [
        2.0 * data.a.x0() as f64,
        2.0 * data.b.x0() as f64,
        0.1,
        0.5,
        0.5,
        0.5,
    ]
}

fn lincoln_petersen_or(t: &crate::table::DrsTable) -> f64 {
    if t.x11 > 0 {
        (t.x1dot() * t.xdot1()) as f64 / t.x11 as f64
    } else {
        2.0 * t.x0() as f64
    }
}

fn default_model_ii_start(data: &StratumPair) -> [f64; 6] {
    let b = &data.b;
    let p1 = if b.xdot1() > 0 {
        b.x11 as f64 / b.xdot1() as f64
    } else {
        0.5
    };
    [
        lincoln_petersen_or(&data.a),
        lincoln_petersen_or(b),
        0.1,
        p1,
        0.5,
        0.5,
    ]
}

fn fit(
    model: ModelKind,
    data: &StratumPair,
    cfg: &FitConfig,
    mut starts: Vec<[f64; 6]>,
    notes: Vec<String>,
) -> Result<EstimateResult> {
    let problem = Problem::new(model, data, cfg.log_factorial, cfg.known_ratio);
    if let Some(r) = cfg.known_ratio {
        for s in &mut starts {
            s[0] = s[0].max(problem.lower_a);
            s[1] = s[0] / r;
        }
    }

    let mut encoded: Vec<Vec<f64>> = starts.iter().map(|s| problem.encode(*s)).collect();
    let start_loglik = problem.loglik(&encoded[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = encoded[0].clone();
    let n_slots = problem.dim() - 4;
    while encoded.len() < cfg.multistart.max(starts.len()) {
        let mut u = base.clone();
        for (i, v) in u.iter_mut().enumerate() {
            if i < n_slots {
                // Multiplicative jitter on the offset above the lower bound.
                *v += (1.0 + rng.random_range(-JITTER_N..JITTER_N)).ln();
            } else {
                *v += rng.random_range(-JITTER_LOGIT..JITTER_LOGIT);
            }
        }
        encoded.push(u);
    }

    let opts = NelderMeadOptions {
        max_iterations: cfg.max_iterations,
        f_tol: cfg.objective_tolerance,
        x_tol: cfg.parameter_tolerance,
        ..Default::default()
    };
    let objective = |u: &[f64]| -problem.loglik(u);
    let best = encoded
        .iter()
        .map(|u| minimize(objective, u, &opts))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    // The simplex stalls on flat ridges and where a probability sits on its
    // clip; finish with the analytic gradient.
    let gradient = |u: &[f64]| problem.gradient(u).into_iter().map(|v| -v).collect::<Vec<f64>>();
    let refined = polish(objective, gradient, &best.x, best.value, POLISH_ITERATIONS, POLISH_GTOL);
    let polish_iterations = refined.iterations;
    let best = if refined.value <= best.value {
        Minimum {
            x: refined.x,
            value: refined.value,
            ..best
        }
    } else {
        best
    };

    let theta = problem.decode(&best.x);
    let method = match model {
        ModelKind::I => Method::MleI,
        ModelKind::II => Method::MleII,
    };
    let mut r = EstimateResult::new(method);
    for (name, value) in model.names().iter().zip(theta) {
        r.set(name, value);
    }
    r.diagnostics.converged = Some(best.converged);
    r.diagnostics.iterations = Some(best.iterations);
    r.diagnostics.objective = Some(-best.value);
    r.diagnostics.values.insert("start_loglik".into(), start_loglik);
    r.diagnostics.values.insert("polish_iterations".into(), polish_iterations as f64);
    if let Some(ratio) = cfg.known_ratio {
        r.diagnostics.values.insert("known_ratio".into(), ratio);
    }
    for n in notes {
        r.note(n);
    }
    if !best.converged {
        r.note(DrsError::DidNotConverge { iterations: best.iterations }.to_string());
    }
    Ok(r)
}

/// Log-likelihood along `grid` for one coordinate of `theta`, the others
/// held fixed.
pub fn profile_objective(
    theta: &Theta,
    data: &StratumPair,
    component: &str,
    grid: &[f64],
    lf: LogFactorial,
) -> Result<Vec<(f64, f64)>> {
    let model = theta.model();
    let index = model
        .names()
        .iter()
        .position(|n| *n == component)
        .ok_or_else(|| {
            DrsError::InvalidParams(format!(
                "unknown coordinate '{component}'; expected one of {:?}",
                model.names()
            ))
        })?;
    grid.iter()
        .map(|&value| {
            let mut v = theta.to_array();
            v[index] = value;
            Theta::from_array(model, v)
                .loglik(data, lf)
                .map(|ll| (value, ll))
        })
        .collect()
}

/// Extracts the fitted parameter vector from an MLE or MME result.
pub fn theta_from_result(model: ModelKind, r: &EstimateResult) -> Option<Theta> {
    let mut v = [0.0; 6];
    for (slot, name) in v.iter_mut().zip(model.names()) {
        *slot = r.get(name)?;
    }
    Some(Theta::from_array(model, v))
}
