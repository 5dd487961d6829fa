use super::StatsError;
use crate::geo::SpatialWeights;

/// Global Moran's I:
/// `I = (n / S0) * sum_i sum_j w_ij z_i z_j / sum_i z_i^2`, `z = x - mean(x)`.
///
/// Islands add nothing to the numerator but still count in `n` and the
/// denominator.
///
/// ```
/// use atlas_core::geo::{row_standardize, SpatialWeights};
/// use atlas_core::stats::morans_i;
///
/// // 2x2 rook lattice: 0-1, 0-2, 1-3, 2-3
/// let w = SpatialWeights::from_adjacency(vec![vec![1, 2], vec![0, 3], vec![0, 3], vec![1, 2]]);
/// let i = morans_i(&[1.0, 0.0, 0.0, 1.0], &row_standardize(&w)).unwrap();
/// assert!((i + 1.0).abs() < 1e-12);
/// ```
pub fn morans_i(x: &[f64], w: &SpatialWeights) -> Result<f64, StatsError> {
    let n = x.len();
    if n != w.n() {
        return Err(StatsError::LengthMismatch { left: n, right: w.n() });
    }
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("Moran's I input".into()));
    }
    if !(w.s0() > 0.0) {
        return Err(StatsError::NoLinks);
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = z.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(StatsError::ZeroVariance("Moran's I input".into()));
    }
    let num: f64 = w
        .rows()
        .zip(&z)
        .map(|(row, zi)| zi * row.iter().map(|&(j, wij)| wij * z[j]).sum::<f64>())
        .sum();
    Ok(n as f64 / w.s0() * num / denom)
}
