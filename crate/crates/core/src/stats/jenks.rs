//! Exact Fisher-Jenks natural breaks.
//!
//! The dynamic program runs over the distinct sorted values weighted by
//! multiplicity, so equal values always land in the same class and the
//! reported breaks are strictly increasing. An optimal partition never needs
//! to split a run of equal values, so this loses nothing against partitions
//! of the raw sorted list.

use super::StatsError;

struct Prefix {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Prefix {
    fn new(values: &[f64], weights: &[f64]) -> Prefix {
        // shift by the mean to limit cancellation in s2 - s1^2 / w
        let total: f64 = weights.iter().sum();
        let shift = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
        let mut p = Prefix { w: vec![0.0], s1: vec![0.0], s2: vec![0.0] };
        for (v, w) in values.iter().zip(weights) {
            let d = v - shift;
            p.w.push(p.w.last().unwrap() + w);
            p.s1.push(p.s1.last().unwrap() + w * d);
            p.s2.push(p.s2.last().unwrap() + w * d * d);
        }
        p
    }

    /// Within-class sum of squared deviations of distinct values `i..j`.
    fn ssd(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j] - self.w[i];
        let s1 = self.s1[j] - self.s1[i];
        let s2 = self.s2[j] - self.s2[i];
        (s2 - s1 * s1 / w).max(0.0)
    }
}

/// Upper bounds of the first `k - 1` classes of the optimal `k`-class
/// partition (the last class is open-ended).
///
/// Among partitions with equal total SSD the one with the smallest first
/// class wins, then the smallest second class, and so on.
///
/// ```
/// use atlas_core::stats::jenks_breaks;
/// assert_eq!(jenks_breaks(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], 2).unwrap(), vec![3.0]);
/// assert!(jenks_breaks(&[4.0, 4.0], 1).unwrap().is_empty());
/// ```
pub fn jenks_breaks(xs: &[f64], k: usize) -> Result<Vec<f64>, StatsError> {
    if k == 0 {
        return Err(StatsError::ZeroClasses);
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("natural breaks input".into()));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for v in sorted {
        if values.last() == Some(&v) {
            *weights.last_mut().unwrap() += 1.0;
        } else {
            values.push(v);
            weights.push(1.0);
        }
    }
    let m = values.len();
    if m < k {
        return Err(StatsError::TooFewDistinct { classes: k, distinct: m });
    }
    if k == 1 {
        return Ok(Vec::new());
    }

    let prefix = Prefix::new(&values, &weights);
    // cost[c][i]: best SSD splitting values[i..] into c classes; next[c][i]: end of the first of those
    let mut cost = vec![vec![f64::INFINITY; m + 1]; k + 1];
    let mut next = vec![vec![0usize; m + 1]; k + 1];
    for i in 0..m {
        cost[1][i] = prefix.ssd(i, m);
        next[1][i] = m;
    }
    for c in 2..=k {
        // need at least c values in i..m
        for i in 0..=(m - c) {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for e in (i + 1)..=(m - c + 1) {
                let total = prefix.ssd(i, e) + cost[c - 1][e];
                if total < best {
                    best = total;
                    arg = e;
                }
            }
            cost[c][i] = best;
            next[c][i] = arg;
        }
    }

    let mut breaks = Vec::with_capacity(k - 1);
    let mut i = 0;
    for c in (2..=k).rev() {
        let e = next[c][i];
        breaks.push(values[e - 1]);
        i = e;
    }
    Ok(breaks)
}

/// Class index for `value` given class upper bounds: the number of breaks
/// strictly below it. A value equal to a break belongs to the lower class.
pub fn classify(value: f64, breaks: &[f64]) -> usize {
    breaks.iter().filter(|&&b| b < value).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_cases() {
        assert!(jenks_breaks(&[1.0, 2.0], 1).unwrap().is_empty());
        assert_eq!(jenks_breaks(&[1.0, 2.0, 3.0, 10.0, 11.0, 12.0], 2).unwrap(), vec![3.0]);
        assert_eq!(
            jenks_breaks(&[1.0, 1.0, 2.0], 3),
            Err(StatsError::TooFewDistinct { classes: 3, distinct: 2 })
        );
        assert_eq!(jenks_breaks(&[1.0], 0), Err(StatsError::ZeroClasses));
        assert_eq!(jenks_breaks(&[3.0, 1.0, 2.0], 3).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn equal_values_stay_together() {
        let b = jenks_breaks(&[0.0, 0.0, 0.0, 1.0, 1.0, 5.0, 5.0], 3).unwrap();
        assert_eq!(b, vec![0.0, 1.0]);
    }

    #[test]
    fn tie_prefers_small_first_class() {
        // {0},{1,2} and {0,1},{2} have equal SSD
        assert_eq!(jenks_breaks(&[0.0, 1.0, 2.0], 2).unwrap(), vec![0.0]);
    }

    #[test]
    fn classify_boundaries() {
        let b = [1.0, 2.0];
        assert_eq!(classify(0.5, &b), 0);
        assert_eq!(classify(1.0, &b), 0);
        assert_eq!(classify(1.5, &b), 1);
        assert_eq!(classify(2.0, &b), 1);
        assert_eq!(classify(9.0, &b), 2);
    }
}
