use super::{ensure_finite, mean};
use crate::error::{Error, Result};

/// Pearson product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData("correlation needs at least three pairs".into()));
    }
    ensure_finite(x, "correlation input")?;
    ensure_finite(y, "correlation input")?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with a constant variable".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// First-order partial correlation of `x` and `y` controlling for `z`.
pub fn partial_r(x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let rxy = pearson_r(x, y)?;
    let rxz = pearson_r(x, z)?;
    let ryz = pearson_r(y, z)?;
    let denom = (1.0 - rxz * rxz) * (1.0 - ryz * ryz);
    if denom <= 1e-15 {
        return Err(Error::Undefined("control variable is perfectly correlated with an input".into()));
    }
    Ok(((rxy - rxz * ryz) / denom.sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Residuals of the least-squares regression of `v` on `z`.
    fn residuals(v: &[f64], z: &[f64]) -> Vec<f64> {
        let n = v.len() as f64;
        let mz = z.iter().sum::<f64>() / n;
        let mv = v.iter().sum::<f64>() / n;
        let szz: f64 = z.iter().map(|a| (a - mz) * (a - mz)).sum();
        let szv: f64 = z.iter().zip(v).map(|(a, b)| (a - mz) * (b - mv)).sum();
        let slope = szv / szz;
        v.iter().zip(z).map(|(b, a)| b - mv - slope * (a - mz)).collect()
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn perfect_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.5];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_r(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_r(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 1.0, 4.0, 3.0];
        let z = [1.0, 1.0, 2.0, 2.0];
        assert!((pearson_r(&x, &y).unwrap() - 0.6).abs() < 1e-12);
        assert!((partial_r(&x, &y, &z).unwrap() + 1.0).abs() < 1e-12);
        // The residuals alternate +-0.5 with opposite signs.
        assert!((cosine(&residuals(&x, &z), &residuals(&y, &z)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_control_collapses_to_plain_r() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let z = [1.0, -1.0, -1.0, 1.0];
        assert!(pearson_r(&x, &z).unwrap().abs() < 1e-15);
        assert!(pearson_r(&y, &z).unwrap().abs() < 1e-15);
        assert!((partial_r(&x, &y, &z).unwrap() - pearson_r(&x, &y).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_residual_regression() {
        let mut rng = crate::seed::rng(99);
        for _ in 0..1000 {
            let n = rng.random_range(5..40);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x: Vec<f64> = z.iter().map(|v| 0.7 * v + rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = z.iter().map(|v| -0.4 * v + rng.random_range(-2.0..2.0)).collect();
            let oracle = cosine(&residuals(&x, &z), &residuals(&y, &z));
            assert!((partial_r(&x, &y, &z).unwrap() - oracle).abs() <= 1e-10);
        }
    }

    #[test]
    fn errors() {
        assert!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(partial_r(&x, &[2.0, 1.0, 4.0, 3.0], &x).is_err());
    }
}
