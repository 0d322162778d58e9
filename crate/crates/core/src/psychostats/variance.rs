use serde::{Deserialize, Serialize};

use super::special::p_value_f;
use super::{ensure_finite, mean};
use crate::error::{Error, Result};

/// One line of a one-way ANOVA table. `eta_squared` is SS_h / (SS_h + SS_e).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub ss_hypothesis: f64,
    pub ss_error: f64,
    pub df_hypothesis: f64,
    pub df_error: f64,
    pub ms_hypothesis: f64,
    pub ms_error: f64,
    pub f: f64,
    pub p: f64,
    pub eta_squared: f64,
}

impl AnovaRow {
    /// Completes a table row from its sums of squares and degrees of freedom.
    pub fn from_sums(ss_hypothesis: f64, ss_error: f64, df_hypothesis: f64, df_error: f64) -> Result<Self> {
        if !(ss_error > 0.0) {
            return Err(Error::Undefined("error sum of squares is zero".into()));
        }
        if !(df_hypothesis > 0.0 && df_error > 0.0) {
            return Err(Error::Domain("degrees of freedom must be positive".into()));
        }
        let ms_hypothesis = ss_hypothesis / df_hypothesis;
        let ms_error = ss_error / df_error;
        let f = ms_hypothesis / ms_error;
        Ok(AnovaRow {
            ss_hypothesis,
            ss_error,
            df_hypothesis,
            df_error,
            ms_hypothesis,
            ms_error,
            f,
            p: p_value_f(f, df_hypothesis, df_error)?,
            eta_squared: ss_hypothesis / (ss_hypothesis + ss_error),
        })
    }
}

fn check_groups(groups: &[Vec<f64>], what: &str) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!("{what} needs at least two groups")));
    }
    for g in groups {
        if g.len() < 2 {
            return Err(Error::InsufficientData(format!("{what} needs at least two values per group")));
        }
        ensure_finite(g, what)?;
    }
    Ok(())
}

/// One-way analysis of variance of a single dependent variable.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaRow> {
    check_groups(groups, "ANOVA")?;
    let n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_h = 0.0;
    let mut ss_e = 0.0;
    for g in groups {
        let m = mean(g);
        ss_h += g.len() as f64 * (m - grand) * (m - grand);
        ss_e += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let k = groups.len() as f64;
    AnovaRow::from_sums(ss_h, ss_e, k - 1.0, n as f64 - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeveneResult {
    pub w: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
}

/// Levene's test for equal variances, centred on group means.
pub fn levene_w(groups: &[Vec<f64>]) -> Result<LeveneResult> {
    check_groups(groups, "Levene test")?;
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len() as f64;
    let (df1, df2) = (k - 1.0, n as f64 - k);
    let grand = deviations.iter().flatten().sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for z in &deviations {
        let m = mean(z);
        between += z.len() as f64 * (m - grand) * (m - grand);
        within += z.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let scale = grand.abs().max(1.0);
    if within <= 1e-24 * scale * scale {
        if between <= 1e-24 * scale * scale {
            return Ok(LeveneResult { w: 0.0, df1, df2, p: 1.0 });
        }
        return Err(Error::Undefined(
            "absolute deviations are constant within every group but differ between groups".into(),
        ));
    }
    let w = df2 / df1 * between / within;
    Ok(LeveneResult {
        w,
        df1,
        df2,
        p: p_value_f(w, df1, df2)?,
    })
}
