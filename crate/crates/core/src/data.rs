//! Observation rows and datasets.
//!
//! An outcome is stored as an explicit option that is present exactly when
//! the unit survived. Estimator code must never look at the outcome of a
//! censored row; the checked accessor counts (and panics on) any such read
//! so the contract is enforceable in tests.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::DataError;

static CENSORED_OUTCOME_READS: AtomicU64 = AtomicU64::new(0);

/// Number of attempted outcome reads on censored rows since process start.
///
/// Stays at zero for any correct estimator path.
pub fn censored_outcome_reads() -> u64 {
    CENSORED_OUTCOME_READS.load(Ordering::SeqCst)
}

/// One observed unit: covariates, binary instrument, binary treatment,
/// survival indicator, and the outcome when it exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRow {
    x: Vec<f64>,
    z: bool,
    d: bool,
    s: bool,
    y: Option<f64>,
}

impl ObservationRow {
    /// Build a row, enforcing that `y` is present iff `s` is true and that
    /// all numeric fields are finite. `row` is only used for error reporting.
    pub fn new(x: Vec<f64>, z: bool, d: bool, s: bool, y: Option<f64>) -> Result<Self, DataError> {
        Self::new_at(0, x, z, d, s, y)
    }

    pub(crate) fn new_at(
        row: usize,
        x: Vec<f64>,
        z: bool,
        d: bool,
        s: bool,
        y: Option<f64>,
    ) -> Result<Self, DataError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteCovariate { row });
        }
        if s != y.is_some() {
            return Err(DataError::CensoringViolation { row });
        }
        if let Some(v) = y {
            if !v.is_finite() {
                return Err(DataError::NonFiniteOutcome { row });
            }
        }
        Ok(Self { x, z, d, s, y })
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn instrument(&self) -> bool {
        self.z
    }

    pub fn treatment(&self) -> bool {
        self.d
    }

    pub fn survived(&self) -> bool {
        self.s
    }

    /// Outcome if the unit survived.
    pub fn outcome(&self) -> Option<f64> {
        self.y
    }

    /// Outcome of a surviving row.
    ///
    /// Panics (and bumps the global violation counter) when called on a
    /// censored row; callers must gate on `survived()`.
    pub fn observed_outcome(&self) -> f64 {
        match self.y {
            Some(v) => v,
            None => {
                CENSORED_OUTCOME_READS.fetch_add(1, Ordering::SeqCst);
                panic!("outcome read on a censored row");
            }
        }
    }
}

/// An immutable sample of observation rows with a common covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<ObservationRow>,
    p: usize,
}

impl Dataset {
    pub fn new(rows: Vec<ObservationRow>) -> Result<Self, DataError> {
        let p = match rows.first() {
            Some(first) => first.x.len(),
            None => return Err(DataError::EmptyDataset),
        };
        for (i, row) in rows.iter().enumerate() {
            if row.x.len() != p {
                return Err(DataError::RowLength {
                    row: i,
                    expected: p,
                    got: row.x.len(),
                });
            }
        }
        Ok(Self { rows, p })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Covariate dimension (without the intercept column fits prepend).
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn rows(&self) -> &[ObservationRow] {
        &self.rows
    }

    /// Whether both instrument arms are present; fits are degenerate otherwise.
    pub fn has_both_arms(&self) -> bool {
        let mut saw_encouraged = false;
        let mut saw_unencouraged = false;
        for row in &self.rows {
            if row.z {
                saw_encouraged = true;
            } else {
                saw_unencouraged = true;
            }
            if saw_encouraged && saw_unencouraged {
                return true;
            }
        }
        false
    }

    /// Resample rows with replacement using the supplied index source.
    pub(crate) fn resample(&self, indices: &[usize]) -> Dataset {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        Dataset { rows, p: self.p }
    }
}
