use super::StatsError;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("correlation input".into()));
    }
    Ok(())
}

/// Product-moment correlation from centered sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y".into()));
    }
    // sqrt of the product keeps identical inputs at exactly 1
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // centered: dx = (-1,0,1), dy = (-11/3,-2/3,13/3); sxy = 8, sxx = 2, syy = 98/3
        let expected = 8.0 / (2.0f64 * 98.0 / 3.0).sqrt();
        let r = pearson(&x, &[1.0, 4.0, 9.0]).unwrap();
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.9897).abs() < 1e-4);
        assert_eq!(pearson(&x, &[2.0, 2.0, 2.0]), Err(StatsError::ZeroVariance("y".into())));
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(spearman(&x, &[1.0, 4.0, 9.0]).unwrap(), 1.0);
        assert_eq!(average_ranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
        // ranks x = (1.5, 1.5, 3), y = (1, 3, 2): centered (-.5, -.5, 1) . (-1, 1, 0) = 0
        assert_eq!(spearman(&[1.0, 1.0, 2.0], &[3.0, 5.0, 4.0]).unwrap(), 0.0);
        // x = (1, 2, 4, 4), y = (1, 3, 2, 4): ranks (1, 2, 3.5, 3.5) vs (1, 3, 2, 4)
        let r = spearman(&[1.0, 2.0, 4.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 3.0 / (4.5f64 * 5.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn pearson_positive_affine_invariance(
            xs in prop::collection::vec(-100.0f64..100.0, 5..40),
            a in 0.1f64..10.0,
            c in -50.0f64..50.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + i as f64 * 0.1).collect();
            if let (Ok(r1), Ok(r2)) = (
                pearson(&xs, &ys),
                pearson(&xs.iter().map(|x| a * x + c).collect::<Vec<_>>(), &ys),
            ) {
                prop_assert!((r1 - r2).abs() < 1e-9);
            }
        }

        #[test]
        fn spearman_monotone_invariance(xs in prop::collection::vec(-5.0f64..5.0, 5..40)) {
            let ys: Vec<f64> = xs.iter().map(|x| x * x + x.cos()).collect();
            let mapped: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            if let (Ok(r1), Ok(r2)) = (spearman(&xs, &ys), spearman(&mapped, &ys)) {
                prop_assert_eq!(r1, r2);
            }
        }
    }
}
