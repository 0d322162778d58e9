use serde::{Deserialize, Serialize};

use super::special::p_value_t;
use super::{ensure_finite, mean, variance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TTestMethod {
    /// Equal-variance Student test.
    Pooled,
    /// Unequal-variance test with Satterthwaite degrees of freedom.
    #[default]
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub method: TTestMethod,
}

/// Independent two-sample t-test. Positive `t` means `b` has the larger mean.
pub fn t_test(sample_a: &[f64], sample_b: &[f64], method: TTestMethod) -> Result<TTestResult> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::InsufficientData("t-test needs at least two values per sample".into()));
    }
    ensure_finite(sample_a, "t-test sample")?;
    ensure_finite(sample_b, "t-test sample")?;
    t_test_from_summary(
        mean(sample_a),
        variance(sample_a).sqrt(),
        sample_a.len(),
        mean(sample_b),
        variance(sample_b).sqrt(),
        sample_b.len(),
        method,
    )
}

pub fn t_test_from_summary(
    mean_a: f64,
    sd_a: f64,
    n_a: usize,
    mean_b: f64,
    sd_b: f64,
    n_b: usize,
    method: TTestMethod,
) -> Result<TTestResult> {
    if n_a < 2 || n_b < 2 {
        return Err(Error::InsufficientData("t-test needs n >= 2 per group".into()));
    }
    if !(sd_a >= 0.0 && sd_b >= 0.0) {
        return Err(Error::Domain("standard deviations must be non-negative".into()));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let (va, vb) = (sd_a * sd_a, sd_b * sd_b);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::Undefined("both samples have zero variance".into()));
    }
    let diff = mean_b - mean_a;
    let (se, df) = match method {
        TTestMethod::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestMethod::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
            ((qa + qb).sqrt(), df)
        }
    };
    let t = diff / se;
    Ok(TTestResult {
        t,
        df,
        p: p_value_t(t, df)?,
        method,
    })
}
