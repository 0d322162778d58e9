use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::special::p_value_f;
use crate::error::{Error, Result};
use crate::linalg::ln_det_spd;

/// Two-group one-way MANOVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManovaResult {
    pub wilks_lambda: f64,
    pub f: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    /// Multivariate effect size `1 - lambda`.
    pub eta_squared: f64,
}

/// Wilks' lambda `det(E) / det(E + H)` for two groups of observations
/// (each group is persons x variables) with the exact F transformation.
pub fn manova_wilks(groups: &[Vec<Vec<f64>>]) -> Result<ManovaResult> {
    if groups.len() != 2 {
        return Err(Error::Config(format!(
            "exact MANOVA F is implemented for two groups, got {}",
            groups.len()
        )));
    }
    let p = groups
        .iter()
        .flat_map(|g| g.first())
        .map(Vec::len)
        .next()
        .ok_or_else(|| Error::InsufficientData("empty group".into()))?;
    if p == 0 {
        return Err(Error::InsufficientData("no dependent variables".into()));
    }
    let mut n_total = 0usize;
    let mut group_means = Vec::with_capacity(2);
    for g in groups {
        if g.is_empty() {
            return Err(Error::InsufficientData("empty group".into()));
        }
        let mut m = vec![0.0; p];
        for row in g {
            if row.len() != p {
                return Err(Error::Dimension { expected: p, actual: row.len() });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("MANOVA input contains non-finite values".into()));
            }
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m.iter_mut().for_each(|v| *v /= g.len() as f64);
        n_total += g.len();
        group_means.push(m);
    }
    if n_total < p + 2 {
        return Err(Error::InsufficientData(format!(
            "{n_total} observations are too few for {p} variables"
        )));
    }
    let grand: Vec<f64> = (0..p)
        .map(|j| {
            groups
                .iter()
                .zip(&group_means)
                .map(|(g, m)| g.len() as f64 * m[j])
                .sum::<f64>()
                / n_total as f64
        })
        .collect();

    let mut e = DMatrix::<f64>::zeros(p, p);
    let mut h = DMatrix::<f64>::zeros(p, p);
    for (g, m) in groups.iter().zip(&group_means) {
        for row in g {
            for a in 0..p {
                for b in 0..p {
                    e[(a, b)] += (row[a] - m[a]) * (row[b] - m[b]);
                }
            }
        }
        let w = g.len() as f64;
        for a in 0..p {
            for b in 0..p {
                h[(a, b)] += w * (m[a] - grand[a]) * (m[b] - grand[b]);
            }
        }
    }

    let ln_det_e = ln_det_spd(&e).map_err(|_| {
        Error::Singular(
            "within-group scatter matrix is singular; remove collinear or constant variables".into(),
        )
    })?;
    let ln_det_t = ln_det_spd(&(&e + &h))?;
    let lambda = (ln_det_e - ln_det_t).exp().min(1.0);
    let (pf, nf) = (p as f64, n_total as f64);
    let (df1, df2) = (pf, nf - pf - 1.0);
    let f = (df2 / df1) * (1.0 - lambda) / lambda;
    Ok(ManovaResult {
        wilks_lambda: lambda,
        f,
        df1,
        df2,
        p: p_value_f(f, df1, df2)?,
        eta_squared: 1.0 - lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psychostats::anova_oneway;
    use rand::Rng;

    #[test]
    fn equal_mean_vectors() {
        let a = vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![2.0, 3.0]];
        let b = vec![vec![3.0, 2.0], vec![1.0, 3.0], vec![2.0, 1.0]];
        let r = manova_wilks(&[a, b]).unwrap();
        assert!((r.wilks_lambda - 1.0).abs() < 1e-12);
        assert!(r.f.abs() < 1e-10);
        assert!(r.eta_squared.abs() < 1e-12);
    }

    #[test]
    fn single_variable_reduces_to_anova() {
        let mut rng = crate::seed::rng(17);
        for _ in 0..50 {
            let a: Vec<f64> = (0..rng.random_range(3..30)).map(|_| rng.random_range(0.0..10.0)).collect();
            let b: Vec<f64> = (0..rng.random_range(3..30)).map(|_| rng.random_range(1.0..12.0)).collect();
            let anova = anova_oneway(&[a.clone(), b.clone()]).unwrap();
            let wrap = |v: &[f64]| v.iter().map(|&x| vec![x]).collect::<Vec<_>>();
            let manova = manova_wilks(&[wrap(&a), wrap(&b)]).unwrap();
            assert!((manova.f - anova.f).abs() <= 1e-9 * anova.f.abs().max(1.0));
            assert!((manova.eta_squared - anova.eta_squared).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_is_one_minus_lambda() {
        let mut rng = crate::seed::rng(3);
        let draw = |rng: &mut crate::seed::StageRng, shift: f64| -> Vec<Vec<f64>> {
            (0..20)
                .map(|_| (0..3).map(|j| rng.random_range(0.0..1.0) + shift * j as f64).collect())
                .collect()
        };
        let r = manova_wilks(&[draw(&mut rng, 0.0), draw(&mut rng, 0.3)]).unwrap();
        assert_eq!(r.eta_squared, 1.0 - r.wilks_lambda);
        assert!(r.wilks_lambda > 0.0 && r.wilks_lambda <= 1.0);
        assert_eq!((r.df1, r.df2), (3.0, 36.0));
    }

    #[test]
    fn singular_scatter_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let b = vec![vec![2.0, 4.0], vec![4.0, 8.0], vec![5.0, 10.0]];
        assert!(matches!(manova_wilks(&[a, b]), Err(Error::Singular(_))));
    }

    #[test]
    fn requires_two_groups() {
        let a = vec![vec![1.0], vec![2.0]];
        assert!(manova_wilks(&[a.clone()]).is_err());
        assert!(manova_wilks(&[a.clone(), a.clone(), a]).is_err());
    }
}
