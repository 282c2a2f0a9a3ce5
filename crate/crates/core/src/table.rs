//! Observed 2x2 dual-record tables.
//!
//! The cell of individuals missed by both lists (`x00`) is never observed,
//! so it has no field here. Neither does the population size.

use serde::{Deserialize, Serialize};

use crate::error::{DrsError, Result};

/// Counts for one stratum: in both lists, in List 1 only, in List 2 only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DrsTable {
    pub x11: u64,
    pub x10: u64,
    pub x01: u64,
}

impl DrsTable {
    /// Validating constructor. Rejects negative counts and the all-zero table.
    pub fn new(x11: i64, x10: i64, x01: i64) -> Result<Self> {
        for (cell, value) in [("x11", x11), ("x10", x10), ("x01", x01)] {
            if value < 0 {
                return Err(DrsError::NegativeCount { cell, value });
            }
        }
        validate_table(DrsTable {
            x11: x11 as u64,
            x10: x10 as u64,
            x01: x01 as u64,
        })
    }

    /// Captured in List 1.
    pub fn x1dot(&self) -> u64 {
        self.x11 + self.x10
    }

    /// Captured in List 2.
    pub fn xdot1(&self) -> u64 {
        self.x11 + self.x01
    }

    /// Distinct individuals observed in at least one list.
    pub fn x0(&self) -> u64 {
        self.x11 + self.x10 + self.x01
    }

    pub fn cells(&self) -> [u64; 3] {
        [self.x11, self.x10, self.x01]
    }
}

pub fn validate_table(t: DrsTable) -> Result<DrsTable> {
    if t.x0() == 0 {
        return Err(DrsError::EmptyTable);
    }
    Ok(t)
}

/// The two sub-population tables. `a` is the stratum allowed to carry
/// behavioral dependence, `b` the reference stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumPair {
    pub a: DrsTable,
    pub b: DrsTable,
    pub label_a: String,
    pub label_b: String,
}

impl StratumPair {
    pub fn new(a: DrsTable, b: DrsTable) -> Result<Self> {
        Self::labeled(a, b, "A", "B")
    }

    pub fn labeled(
        a: DrsTable,
        b: DrsTable,
        label_a: impl Into<String>,
        label_b: impl Into<String>,
    ) -> Result<Self> {
        Ok(StratumPair {
            a: validate_table(a)?,
            b: validate_table(b)?,
            label_a: label_a.into(),
            label_b: label_b.into(),
        })
    }

    /// Builds a pair from raw counts without labels; panics are avoided by
    /// returning the validation error.
    pub fn from_counts(a: (i64, i64, i64), b: (i64, i64, i64)) -> Result<Self> {
        Self::new(DrsTable::new(a.0, a.1, a.2)?, DrsTable::new(b.0, b.1, b.2)?)
    }

    pub fn swapped(&self) -> StratumPair {
        StratumPair {
            a: self.b,
            b: self.a,
            label_a: self.label_b.clone(),
            label_b: self.label_a.clone(),
        }
    }
}
