//! Sliding-window maxima and sums over fixed-length windows.

use std::collections::VecDeque;

/// `out[s] = max(values[s..s + len])` for every full window, in O(n).
pub fn sliding_max(values: &[f64], len: usize, out: &mut Vec<f64>) {
    out.clear();
    if len == 0 || len > values.len() {
        return;
    }
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(len);
    for (i, &v) in values.iter().enumerate() {
        while dq.back().is_some_and(|&j| values[j] <= v) {
            dq.pop_back();
        }
        dq.push_back(i);
        if dq[0] + len <= i {
            dq.pop_front();
        }
        if i + 1 >= len {
            out.push(values[dq[0]]);
        }
    }
}

/// `out[s] = sum(values[s..s + len])` for every full window.
pub fn sliding_sum(values: &[f64], len: usize, out: &mut Vec<f64>) {
    out.clear();
    if len == 0 || len > values.len() {
        return;
    }
    // Direct running sums drift when terms span many magnitudes; prefix sums
    // of nonnegative terms only lose the absolute error of the largest prefix.
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    for s in 0..=values.len() - len {
        out.push(prefix[s + len] - prefix[s]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(values in proptest::collection::vec(-10f64..10.0, 1..60), len in 1usize..20) {
            let mut m = Vec::new();
            let mut s = Vec::new();
            sliding_max(&values, len, &mut m);
            sliding_sum(&values, len, &mut s);
            if len > values.len() {
                prop_assert!(m.is_empty() && s.is_empty());
            } else {
                for start in 0..=values.len() - len {
                    let w = &values[start..start + len];
                    prop_assert_eq!(m[start], w.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                    prop_assert!((s[start] - w.iter().sum::<f64>()).abs() < 1e-9);
                }
            }
        }
    }
}
