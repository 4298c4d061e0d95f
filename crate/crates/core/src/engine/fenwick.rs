//! Fenwick-tree cumulative rate index.
//!
//! Keeps per-entry non-negative rates with O(log n) point updates, prefix
//! sums and weighted selection. Entry values are mirrored in a flat array so
//! `set` can compute exact deltas and callers can read entries in O(1).

#[derive(Debug, Clone)]
pub struct RateIndex {
    tree: Vec<f64>,   // 1-based
    values: Vec<f64>, // 0-based mirror of the current entries
}

impl RateIndex {
    pub fn new(len: usize) -> Self {
        RateIndex {
            tree: vec![0.0; len + 1],
            values: vec![0.0; len],
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut idx = RateIndex::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            idx.set(i, v);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Replace entry `i` with `v ≥ 0`.
    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(v >= 0.0);
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of entries `0..=i`.
    pub fn prefix_sum(&self, i: usize) -> f64 {
        let mut j = i + 1;
        let mut acc = 0.0;
        while j > 0 {
            acc += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        acc
    }

    pub fn total(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.prefix_sum(self.values.len() - 1)
        }
    }

    /// Weighted selection: the entry whose cumulative range covers `target`.
    ///
    /// For `target` in `[prefix(i−1), prefix(i))` returns `i`; zero-weight
    /// entries are never selected for targets strictly inside the total.
    pub fn select(&self, target: f64) -> usize {
        let len = self.values.len();
        let mut mask = len.next_power_of_two();
        let mut idx = 0usize; // 1-based count of entries confirmed below target
        let mut rem = target;
        while mask > 0 {
            let next = idx + mask;
            if next < self.tree.len() && self.tree[next] <= rem {
                idx = next;
                rem -= self.tree[next];
            }
            mask >>= 1;
        }
        // idx entries have cumulative sum ≤ target; the selected one is idx
        // (0-based), skipping any zero-weight run it may have landed on.
        let mut sel = idx.min(len - 1);
        while sel + 1 < len && self.values[sel] == 0.0 {
            sel += 1;
        }
        sel
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_select(values: &[f64], target: f64) -> usize {
        let mut acc = 0.0;
        for (i, &v) in values.iter().enumerate() {
            acc += v;
            if target < acc {
                return i;
            }
        }
        values.len() - 1
    }

    #[test]
    fn basic_updates_and_prefix_sums() {
        let mut idx = RateIndex::from_values(&[2.0, 4.0, 1.0, 0.0, 1.2]);
        assert!((idx.total() - 8.2).abs() < 1e-12);
        assert!((idx.prefix_sum(1) - 6.0).abs() < 1e-12);
        idx.set(1, 0.5);
        assert!((idx.prefix_sum(1) - 2.5).abs() < 1e-12);
        assert!((idx.total() - 4.7).abs() < 1e-12);
        assert_eq!(idx.value(1), 0.5);
    }

    #[test]
    fn selection_matches_cumulative_ranges() {
        let idx = RateIndex::from_values(&[1.0, 0.0, 2.0, 1.0]);
        assert_eq!(idx.select(0.0), 0);
        assert_eq!(idx.select(0.999), 0);
        assert_eq!(idx.select(1.0), 2); // skips the zero-weight entry
        assert_eq!(idx.select(2.9), 2);
        assert_eq!(idx.select(3.5), 3);
    }

    proptest! {
        #[test]
        fn prefix_sums_match_naive(values in proptest::collection::vec(0.0f64..10.0, 1..80)) {
            let idx = RateIndex::from_values(&values);
            let mut acc = 0.0;
            for (i, &v) in values.iter().enumerate() {
                acc += v;
                prop_assert!((idx.prefix_sum(i) - acc).abs() < 1e-9);
            }
        }

        #[test]
        fn select_matches_naive(
            values in proptest::collection::vec(0.0f64..10.0, 1..40),
            frac in 0.0f64..1.0,
        ) {
            let total: f64 = values.iter().sum();
            prop_assume!(total > 0.0);
            let idx = RateIndex::from_values(&values);
            let target = frac * total * 0.999_999;
            prop_assert_eq!(idx.select(target), naive_select(&values, target));
        }
    }
}
