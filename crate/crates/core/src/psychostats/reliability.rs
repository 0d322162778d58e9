use serde::{Deserialize, Serialize};

use super::{ensure_finite, variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityResult {
    pub scale: String,
    pub alpha: f64,
    pub items: usize,
    /// Correlation between two administrations, when available.
    pub test_retest: Option<f64>,
}

/// Cronbach's alpha of a persons x items matrix (one row per person).
///
/// Negative values are returned as computed.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let persons = rows.len();
    if persons < 2 {
        return Err(Error::InsufficientData("alpha needs at least two persons".into()));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::InsufficientData("alpha needs at least two items".into()));
    }
    for row in rows {
        if row.len() != k {
            return Err(Error::Dimension { expected: k, actual: row.len() });
        }
        ensure_finite(row, "item matrix")?;
    }
    let item_var_sum: f64 = (0..k)
        .map(|j| variance(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let total_var = variance(&totals);
    if total_var == 0.0 {
        return Err(Error::Undefined("total score has zero variance".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var_sum / total_var))
}
