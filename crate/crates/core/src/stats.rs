//! Five-number summaries with Tukey fences.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation at position `p * (n - 1)` of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Box-plot statistics; `None` for an empty sample.
///
/// Outliers are the samples beyond `Q1 - 1.5 IQR` or `Q3 + 1.5 IQR`; each
/// whisker sits on the most extreme sample still inside its fence.
pub fn boxplot_stats(samples: &[f64]) -> Option<BoxStats> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || sorted.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence);
    // Q1 and Q3 lie between order statistics, so the fenced range is never empty.
    let whisker_low = inside().next().unwrap_or(q1);
    let whisker_high = inside().next_back().unwrap_or(q3);
    let outliers = sorted.iter().copied().filter(|&x| x < lo_fence || x > hi_fence).collect();
    Some(BoxStats {
        n: sorted.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        whisker_low,
        whisker_high,
        outliers,
    })
}

pub fn mean(samples: &[f64]) -> Option<f64> {
    (!samples.is_empty()).then(|| samples.iter().sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_values() {
        let b = boxplot_stats(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (1.5, 2.0, 2.5));
    }

    #[test]
    fn far_outlier() {
        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.q3), (2.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 4.0);
        assert_eq!(b.whisker_low, 1.0);
    }

    #[test]
    fn singleton_and_constant() {
        let b = boxplot_stats(&[5.0]).unwrap();
        assert_eq!((b.min, b.q1, b.median, b.q3, b.max), (5.0, 5.0, 5.0, 5.0, 5.0));
        assert!(b.outliers.is_empty());
        let c = boxplot_stats(&[7.0; 4]).unwrap();
        assert_eq!(c.q3 - c.q1, 0.0);
        assert!(c.outliers.is_empty());
        assert!(boxplot_stats(&[]).is_none());
    }

    #[test]
    fn zeros_then_ten() {
        // Q1 = 0, Q3 = 2.5, so the upper fence is 6.25
        let b = boxplot_stats(&[0.0, 0.0, 0.0, 10.0]).unwrap();
        assert_eq!(b.q3, 2.5);
        assert_eq!(b.outliers, vec![10.0]);
        assert_eq!(b.whisker_high, 0.0);
    }

    #[test]
    fn whisker_above_q1_when_the_low_tail_is_an_outlier() {
        // Q1 = -28, lower fence = -534.25
        let b = boxplot_stats(&[-535.0, 141.0, 271.0, 425.0]).unwrap();
        assert_eq!(b.q1, -28.0);
        assert_eq!(b.outliers, vec![-535.0]);
        assert_eq!(b.whisker_low, 141.0);
        assert_eq!(b.whisker_high, 425.0);
    }

    proptest! {
        #[test]
        fn ordering_invariants(mut xs in prop::collection::vec(-1000i32..1000, 1..60)) {
            let samples: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            let b = boxplot_stats(&samples).unwrap();
            prop_assert!(b.min <= b.whisker_low && b.whisker_low <= b.whisker_high && b.whisker_high <= b.max);
            prop_assert!(b.q1 <= b.median && b.median <= b.q3);
            let iqr = b.q3 - b.q1;
            let (lo, hi) = (b.q1 - 1.5 * iqr, b.q3 + 1.5 * iqr);
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            let (kept, expected): (Vec<f64>, Vec<f64>) = sorted.into_iter().partition(|&x| x >= lo && x <= hi);
            prop_assert_eq!(&b.outliers, &expected);
            // whiskers are the extreme kept samples; they need not reach Q1 or Q3
            prop_assert_eq!(b.whisker_low, kept[0]);
            prop_assert_eq!(b.whisker_high, kept[kept.len() - 1]);
            xs.reverse();
            let rev: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            prop_assert_eq!(boxplot_stats(&rev).unwrap(), b);
        }
    }
}
