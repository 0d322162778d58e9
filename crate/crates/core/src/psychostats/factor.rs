//! Principal-components factor extraction with varimax rotation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{mean, std_dev};
use crate::error::{Error, Result};
use crate::linalg::sorted_eigen;

/// Loadings with magnitude below this are blanked in printed tables.
pub const DISPLAY_THRESHOLD: f64 = 0.3;

const VARIMAX_TOLERANCE: f64 = 1e-10;
const VARIMAX_MAX_SWEEPS: usize = 1000;

pub enum FactorInput<'a> {
    Correlation(&'a DMatrix<f64>),
    /// Persons x items.
    Data(&'a [Vec<f64>]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retention {
    /// Guttman-Kaiser: keep factors with eigenvalue above 1.
    EigenvalueAboveOne,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSolution {
    pub factors: usize,
    /// Items x factors, after rotation.
    pub loadings: Vec<Vec<f64>>,
    /// Full spectrum of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Per rotated factor: sum of squared loadings.
    pub rotated_ss: Vec<f64>,
    /// Per rotated factor: `100 * rotated_ss / items`.
    pub variance_percent: Vec<f64>,
    pub communalities: Vec<f64>,
    pub warning: Option<String>,
}

impl FactorSolution {
    /// Loadings with `|loading| < threshold` replaced by `None`.
    pub fn salient(&self, threshold: f64) -> Vec<Vec<Option<f64>>> {
        self.loadings
            .iter()
            .map(|row| row.iter().map(|&l| (l.abs() >= threshold).then_some(l)).collect())
            .collect()
    }
}

fn correlation_of(data: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if data.len() < 3 {
        return Err(Error::InsufficientData("factor analysis needs at least three persons".into()));
    }
    let k = data[0].len();
    if k < 2 {
        return Err(Error::InsufficientData("factor analysis needs at least two items".into()));
    }
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            data.iter()
                .map(|r| {
                    r.get(j).copied().ok_or(Error::Dimension { expected: k, actual: r.len() })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let z: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let (m, s) = (mean(c), std_dev(c));
            if s == 0.0 {
                Err(Error::Undefined("constant item".into()))
            } else {
                Ok(c.iter().map(|x| (x - m) / s).collect())
            }
        })
        .collect::<Result<_>>()?;
    let n = data.len() as f64;
    Ok(DMatrix::from_fn(k, k, |a, b| {
        if a == b {
            1.0
        } else {
            z[a].iter().zip(&z[b]).map(|(x, y)| x * y).sum::<f64>() / (n - 1.0)
        }
    }))
}

pub fn pca_varimax(input: FactorInput<'_>, retention: Retention) -> Result<FactorSolution> {
    let owned;
    let corr = match input {
        FactorInput::Correlation(m) => m,
        FactorInput::Data(rows) => {
            owned = correlation_of(rows)?;
            &owned
        }
    };
    let k = corr.nrows();
    if corr.ncols() != k || k < 2 {
        return Err(Error::Config("correlation matrix must be square with at least two items".into()));
    }
    for i in 0..k {
        if (corr[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("diagonal entry {i} is not 1")));
        }
        for j in 0..i {
            if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-9 {
                return Err(Error::Config("correlation matrix is not symmetric".into()));
            }
        }
    }
    let (eigenvalues, vectors) = sorted_eigen(corr);
    if let Some(&min) = eigenvalues.last() {
        if min < -1e-8 {
            return Err(Error::Domain(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
    }

    let mut warning = None;
    let factors = match retention {
        Retention::Fixed(m) => {
            if m == 0 || m > k {
                return Err(Error::Config(format!("cannot retain {m} of {k} factors")));
            }
            m
        }
        Retention::EigenvalueAboveOne => {
            let m = eigenvalues.iter().filter(|&&v| v > 1.0).count();
            if m == 0 {
                warning = Some("no eigenvalue exceeds 1; retaining one factor".to_string());
                1
            } else {
                m
            }
        }
    };

    let mut loadings: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..factors)
                .map(|f| vectors[(i, f)] * eigenvalues[f].max(0.0).sqrt())
                .collect()
        })
        .collect();
    if factors > 1 {
        loadings = varimax(&loadings);
    }
    orient_and_order(&mut loadings);

    let rotated_ss: Vec<f64> = (0..factors)
        .map(|f| loadings.iter().map(|r| r[f] * r[f]).sum())
        .collect();
    let variance_percent = rotated_ss.iter().map(|s| 100.0 * s / k as f64).collect();
    let communalities = loadings.iter().map(|r| r.iter().map(|l| l * l).sum()).collect();
    Ok(FactorSolution {
        factors,
        loadings,
        eigenvalues,
        rotated_ss,
        variance_percent,
        communalities,
        warning,
    })
}

/// Raw varimax criterion: sum over factors of the variance of the squared
/// loadings, `sum_j [n * sum_i l_ij^4 - (sum_i l_ij^2)^2] / n^2`.
pub fn varimax_criterion(loadings: &[Vec<f64>]) -> f64 {
    let n = loadings.len() as f64;
    let m = loadings.first().map_or(0, Vec::len);
    (0..m)
        .map(|j| {
            let (s2, s4) = loadings.iter().fold((0.0, 0.0), |(s2, s4), r| {
                let sq = r[j] * r[j];
                (s2 + sq, s4 + sq * sq)
            });
            (n * s4 - s2 * s2) / (n * n)
        })
        .sum()
}

/// Kaiser-normalized varimax rotation by pairwise planar rotations.
///
/// Rows are scaled to unit length before rotating and scaled back after,
/// so communalities are unchanged.
pub fn varimax(loadings: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = loadings.len();
    let m = loadings.first().map_or(0, Vec::len);
    let norms: Vec<f64> = loadings
        .iter()
        .map(|r| r.iter().map(|l| l * l).sum::<f64>().sqrt())
        .collect();
    let mut x: Vec<Vec<f64>> = loadings
        .iter()
        .zip(&norms)
        .map(|(r, &h)| if h > 0.0 { r.iter().map(|l| l / h).collect() } else { r.clone() })
        .collect();
    let nf = n as f64;
    let mut criterion = varimax_criterion(&x);
    for _ in 0..VARIMAX_MAX_SWEEPS {
        for j in 0..m {
            for k in j + 1..m {
                let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
                for row in &x {
                    let u = row[j] * row[j] - row[k] * row[k];
                    let v = 2.0 * row[j] * row[k];
                    a += u;
                    b += v;
                    c += u * u - v * v;
                    d += 2.0 * u * v;
                }
                let numerator = d - 2.0 * a * b / nf;
                let denominator = c - (a * a - b * b) / nf;
                let phi = numerator.atan2(denominator) / 4.0;
                if phi.abs() < 1e-15 {
                    continue;
                }
                let (s, co) = phi.sin_cos();
                for row in x.iter_mut() {
                    let (xj, xk) = (row[j], row[k]);
                    row[j] = co * xj + s * xk;
                    row[k] = -s * xj + co * xk;
                }
            }
        }
        let next = varimax_criterion(&x);
        let gain = next - criterion;
        criterion = next;
        if gain < VARIMAX_TOLERANCE {
            break;
        }
    }
    x.iter()
        .zip(&norms)
        .map(|(r, &h)| if h > 0.0 { r.iter().map(|l| l * h).collect() } else { r.clone() })
        .collect()
}

/// Orders factors by descending sum of squared loadings and flips signs so
/// each column sums to a non-negative value.
fn orient_and_order(loadings: &mut [Vec<f64>]) {
    let m = loadings.first().map_or(0, Vec::len);
    let ss: Vec<f64> = (0..m).map(|f| loadings.iter().map(|r| r[f] * r[f]).sum()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ss[b].total_cmp(&ss[a]));
    let signs: Vec<f64> = (0..m)
        .map(|f| if loadings.iter().map(|r| r[f]).sum::<f64>() < 0.0 { -1.0 } else { 1.0 })
        .collect();
    for row in loadings.iter_mut() {
        let reordered: Vec<f64> = order.iter().map(|&f| row[f] * signs[f]).collect();
        *row = reordered;
    }
}
