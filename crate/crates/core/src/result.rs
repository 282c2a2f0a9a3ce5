//! Estimator output shared by every method.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DrsError;
use crate::numeric::round_half_even;

/// Estimator tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "MME-I")]
    MmeI,
    #[serde(rename = "MLE-I")]
    MleI,
    #[serde(rename = "MME-II")]
    MmeII,
    #[serde(rename = "MLE-II")]
    MleII,
    #[serde(rename = "NOUR")]
    Nour,
    #[serde(rename = "WOLTER-1")]
    Wolter1,
    #[serde(rename = "WOLTER-2")]
    Wolter2,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::MmeI,
        Method::MleI,
        Method::MmeII,
        Method::MleII,
        Method::Lp,
        Method::Nour,
        Method::Wolter1,
        Method::Wolter2,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Lp => "LP",
            Method::MmeI => "MME-I",
            Method::MleI => "MLE-I",
            Method::MmeII => "MME-II",
            Method::MleII => "MLE-II",
            Method::Nour => "NOUR",
            Method::Wolter1 => "WOLTER-1",
            Method::Wolter2 => "WOLTER-2",
        }
    }

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Lp => "lp",
            Method::MmeI => "mme1",
            Method::MleI => "mle1",
            Method::MmeII => "mme2",
            Method::MleII => "mle2",
            Method::Nour => "nour",
            Method::Wolter1 => "wolter1",
            Method::Wolter2 => "wolter2",
        }
    }

    /// How reported population sizes are rounded.
    pub fn rounding(self) -> Rounding {
        match self {
            Method::MleI | Method::MleII => Rounding::HalfEven,
            Method::Nour => Rounding::HalfUp,
            _ => Rounding::Floor,
        }
    }

    pub fn needs_ratio(self) -> bool {
        matches!(self, Method::Wolter1 | Method::Wolter2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = DrsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == lower || m.tag().eq_ignore_ascii_case(&lower))
            .ok_or_else(|| {
                DrsError::Parse(format!(
                    "unknown method '{s}'; expected one of {}",
                    Method::ALL.map(|m| m.cli_name()).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rounding {
    Floor,
    HalfEven,
    HalfUp,
}

impl Rounding {
    pub fn apply(self, x: f64) -> i64 {
        let r = match self {
            Rounding::Floor => x.floor(),
            Rounding::HalfEven => round_half_even(x),
            Rounding::HalfUp => (x + 0.5).floor(),
        };
        r as i64
    }
}

/// Which side of [0, 1] an alpha estimate was clamped to, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clamp {
    None,
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub objective: Option<f64>,
    pub alpha_clamp: Option<Clamp>,
    /// Number of failed bootstrap resamples or replicates.
    pub failures: Option<usize>,
    /// Method-specific scalars (unclamped alpha, Wolter's K, ...).
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub method: Method,
    /// Continuous point estimates, population sizes unrounded.
    pub estimates: BTreeMap<String, f64>,
    /// Population sizes after the method's rounding rule.
    pub reported: BTreeMap<String, i64>,
    pub se: Option<BTreeMap<String, f64>>,
    pub ci: Option<BTreeMap<String, (f64, f64)>>,
    pub diagnostics: Diagnostics,
}

impl EstimateResult {
    pub fn new(method: Method) -> Self {
        EstimateResult {
            method,
            estimates: BTreeMap::new(),
            reported: BTreeMap::new(),
            se: None,
            ci: None,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    /// Stores an estimate. `n` and names starting with `n_` are population
    /// sizes and also get a rounded entry in `reported`.
    pub fn set(&mut self, name: &str, value: f64) {
        if name == "n" || name.starts_with("n_") {
            self.reported
                .insert(name.to_string(), self.method.rounding().apply(value));
        }
        self.estimates.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.estimates.get(name).copied()
    }

    pub fn reported(&self, name: &str) -> Option<i64> {
        self.reported.get(name).copied()
    }

    pub fn n_a(&self) -> Option<i64> {
        self.reported("n_a")
    }

    pub fn n_b(&self) -> Option<i64> {
        self.reported("n_b")
    }

    pub fn alpha(&self) -> Option<f64> {
        self.get("alpha_a").or_else(|| self.get("alpha0"))
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.diagnostics.notes.push(msg.into());
    }
}
