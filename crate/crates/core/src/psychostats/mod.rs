//! Statistical procedures for analysing student cohorts.
//!
//! Everything here is a pure function over borrowed slices. p-values come
//! from the regularized incomplete beta function in [`special`].

pub mod correlation;
pub mod factor;
pub mod manova;
pub mod reliability;
pub mod special;
pub mod ttest;
pub mod variance;

pub use correlation::{partial_r, pearson_r};
pub use factor::{pca_varimax, varimax, varimax_criterion, FactorInput, FactorSolution, Retention};
pub use manova::{manova_wilks, ManovaResult};
pub use reliability::{cronbach_alpha, ReliabilityResult};
pub use special::{p_value_f, p_value_t, reg_inc_beta};
pub use ttest::{t_test, t_test_from_summary, TTestMethod, TTestResult};
pub use variance::{anova_oneway, levene_w, AnovaRow, LeveneResult};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// `*` at p < 0.05, `**` at p < 0.01.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub(crate) fn ensure_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} contains non-finite values")))
    }
}
