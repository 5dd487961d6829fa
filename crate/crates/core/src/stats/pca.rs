use super::{mean, std_dev, StatsError};

const TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// First principal component of standardized columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Unit-norm top eigenvector of the correlation matrix, one entry per
    /// input column. Oriented so the first column's loading is non-negative
    /// (the first non-zero loading is positive if that one is zero).
    pub loadings: Vec<f64>,
    /// Standardized data times loadings, one per row.
    pub scores: Vec<f64>,
    /// Largest eigenvalue of the correlation matrix; equals the sample
    /// variance of `scores`.
    pub eigenvalue: f64,
}

/// Standardizes each column (sample mean/SD), forms the correlation matrix,
/// and extracts its top eigenpair with cyclic Jacobi rotations.
///
/// ```
/// use atlas_core::stats::pca_first_component;
///
/// let x = [1.0, 2.0, 4.0, 3.0, 7.0, 5.0];
/// let pca = pca_first_component(&[&x, &x, &x, &x]).unwrap();
/// assert!((pca.eigenvalue - 4.0).abs() < 1e-12);
/// assert!(pca.loadings.iter().all(|l| (l - 0.5).abs() < 1e-12));
/// ```
pub fn pca_first_component(columns: &[&[f64]]) -> Result<PcaResult, StatsError> {
    let p = columns.len();
    if p == 0 {
        return Err(StatsError::Empty);
    }
    let n = columns[0].len();
    for c in columns {
        if c.len() != n {
            return Err(StatsError::LengthMismatch { left: n, right: c.len() });
        }
    }
    if n < 5 {
        return Err(StatsError::TooFew { needed: 5, got: n });
    }

    let mut z: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (k, c) in columns.iter().enumerate() {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(format!("column {k}")));
        }
        let (m, s) = (mean(c)?, std_dev(c)?);
        if s == 0.0 {
            return Err(StatsError::ZeroVariance(format!("column {k}")));
        }
        z.push(c.iter().map(|v| (v - m) / s).collect());
    }

    let mut corr = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let r = if i == j {
                1.0
            } else {
                z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64
            };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }

    let (values, vectors) = jacobi_eigen(corr)?;
    // ties resolve to the lowest index
    let top = (0..p).fold(0, |best, k| if values[k] > values[best] { k } else { best });
    let mut loadings: Vec<f64> = (0..p).map(|i| vectors[i][top]).collect();
    let norm = loadings.iter().map(|v| v * v).sum::<f64>().sqrt();
    loadings.iter_mut().for_each(|v| *v /= norm);
    let lead = loadings.iter().copied().find(|v| *v != 0.0).unwrap_or(0.0);
    if lead < 0.0 {
        loadings.iter_mut().for_each(|v| *v = -*v);
    }

    let scores = (0..n)
        .map(|r| (0..p).map(|k| z[k][r] * loadings[k]).sum())
        .collect();
    Ok(PcaResult { loadings, scores, eigenvalue: values[top].max(0.0) })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
/// Returns eigenvalues and the eigenvector matrix (column k pairs with value k).
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>), StatsError> {
    let p = a.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let off = |a: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for i in 0..p {
            for j in (i + 1)..p {
                s += a[i][j] * a[i][j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > TOLERANCE {
        if sweeps == MAX_SWEEPS {
            return Err(StatsError::NonConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for i in 0..p {
            for j in (i + 1)..p {
                let aij = a[i][j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (a[j][j] - a[i][i]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (aki, akj) = (a[k][i], a[k][j]);
                    a[k][i] = c * aki - s * akj;
                    a[k][j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let (aik, ajk) = (a[i][k], a[j][k]);
                    a[i][k] = c * aik - s * ajk;
                    a[j][k] = s * aik + c * ajk;
                }
                a[i][j] = 0.0;
                a[j][i] = 0.0;
                for row in v.iter_mut() {
                    let (vi, vj) = (row[i], row[j]);
                    row[i] = c * vi - s * vj;
                    row[j] = s * vi + c * vj;
                }
            }
        }
    }
    Ok(((0..p).map(|i| a[i][i]).collect(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_identical_columns() {
        // x and y are centered and orthogonal
        let x = [1.0, -1.0, 1.0, -1.0, 2.0, -2.0];
        let y = [1.0, 1.0, -1.0, -1.0, 0.0, 0.0];
        let pca = pca_first_component(&[&x, &x, &y, &y]).unwrap();
        assert!((pca.eigenvalue - 2.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let on_first = (pca.loadings[0] - h).abs() < 1e-12 && (pca.loadings[1] - h).abs() < 1e-12;
        let on_second = (pca.loadings[2].abs() - h).abs() < 1e-12
            && (pca.loadings[3] - pca.loadings[2]).abs() < 1e-12;
        assert!(on_first || on_second, "{:?}", pca.loadings);
    }

    #[test]
    fn sign_convention_and_zero_mean_scores() {
        let a = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let b: Vec<f64> = a.iter().map(|v: &f64| -v + 0.3 * v.sin()).collect();
        let c = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0];
        let d = [1.0, 4.0, 1.0, 4.0, 2.0, 1.0, 3.0, 5.0];
        let pca = pca_first_component(&[&b, &a, &c, &d]).unwrap();
        assert!(pca.loadings[0] >= 0.0);
        let norm: f64 = pca.loadings.iter().map(|l| l * l).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let m = pca.scores.iter().sum::<f64>() / pca.scores.len() as f64;
        assert!(m.abs() < 1e-9);
        let var = crate::stats::variance(&pca.scores).unwrap();
        assert!((var - pca.eigenvalue).abs() < 1e-8);
    }

    #[test]
    fn errors() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let k = [1.0; 5];
        assert!(matches!(pca_first_component(&[&x, &k]), Err(StatsError::ZeroVariance(_))));
        assert!(matches!(
            pca_first_component(&[&x[..4], &x[..4]]),
            Err(StatsError::TooFew { .. })
        ));
    }
}
