//! In-place quicksort on the join key.
//!
//! Median-of-three pivot, Hoare partitioning and an insertion-sort cutoff for
//! short segments. Pending segments live on an explicit stack; the larger half
//! is deferred, so the stack never holds more than O(log n) segments.

use crate::relation::Tuple;

/// Segments of at most this many elements are finished with insertion sort.
pub const INSERTION_CUTOFF: usize = 16;

pub fn quicksort_by_key(tuples: &mut [Tuple]) {
    quicksort_by(tuples, |t| t.key);
}

pub fn is_sorted_by_key(tuples: &[Tuple]) -> bool {
    tuples.windows(2).all(|w| w[0].key <= w[1].key)
}

/// Sorts `items` by the integer returned from `key`, returning the number of
/// key comparisons performed. Not stable.
pub fn quicksort_by<T, F>(items: &mut [T], key: F) -> u64
where
    F: Fn(&T) -> i64,
{
    let mut comparisons = 0u64;
    if items.len() < 2 {
        return 0;
    }
    // Inclusive bounds of segments still to sort.
    let mut pending: Vec<(usize, usize)> = vec![(0, items.len() - 1)];
    while let Some((mut lo, mut hi)) = pending.pop() {
        loop {
            if hi - lo < INSERTION_CUTOFF {
                comparisons += insertion_sort(&mut items[lo..=hi], &key);
                break;
            }
            let split = partition(items, lo, hi, &key, &mut comparisons);
            // [lo, split] and [split + 1, hi] are both non-empty.
            if split - lo < hi - split {
                pending.push((split + 1, hi));
                hi = split;
            } else {
                pending.push((lo, split));
                lo = split + 1;
            }
        }
    }
    comparisons
}

fn insertion_sort<T, F: Fn(&T) -> i64>(items: &mut [T], key: &F) -> u64 {
    let mut comparisons = 0;
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 {
            comparisons += 1;
            if key(&items[j - 1]) <= key(&items[j]) {
                break;
            }
            items.swap(j - 1, j);
            j -= 1;
        }
    }
    comparisons
}

fn partition<T, F: Fn(&T) -> i64>(
    items: &mut [T],
    lo: usize,
    hi: usize,
    key: &F,
    comparisons: &mut u64,
) -> usize {
    let mid = lo + (hi - lo) / 2;
    // Order first, middle and last so the median sits in the middle slot.
    if key(&items[mid]) < key(&items[lo]) {
        items.swap(mid, lo);
    }
    if key(&items[hi]) < key(&items[lo]) {
        items.swap(hi, lo);
    }
    if key(&items[hi]) < key(&items[mid]) {
        items.swap(hi, mid);
    }
    *comparisons += 3;
    let pivot = key(&items[mid]);

    let (mut i, mut j) = (lo, hi);
    loop {
        while {
            *comparisons += 1;
            key(&items[i]) < pivot
        } {
            i += 1;
        }
        while {
            *comparisons += 1;
            key(&items[j]) > pivot
        } {
            j -= 1;
        }
        if i >= j {
            return j;
        }
        items.swap(i, j);
        i += 1;
        j -= 1;
    }
}
