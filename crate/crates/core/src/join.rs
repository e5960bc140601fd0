//! Pairwise equi-joins on the tuple key.
//!
//! Every algorithm produces the same multiset: for each pair of an outer tuple
//! `(v, pr)` and an inner tuple `(v, ps)` with equal keys, one output tuple
//! `(v, pr ‖ ps)`. They differ in how they find the pairs and in the work they
//! report through [`CostCounters`].
//!
//! Page reads are simulated. A relation of `n` tuples spans
//! `⌈n / page_size⌉` pages and a page is counted each time it is fetched into
//! the (single) buffer slot of its side:
//!
//! | algorithm | page reads |
//! |-----------|------------|
//! | nested    | `pages(R) + ‖R‖·pages(S)` |
//! | block     | `pages(R) + pages(R)·pages(S)` |
//! | rocking   | `pages(R) + pages(S) + (pages(R)−1)·(pages(S)−1)` when `pages(S) ≥ 1` |
//! | hash      | `pages(S) + pages(R)` |
//! | sortmerge | `pages(R) + pages(S)` |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::relation::Relation;
use crate::sort::quicksort_by;

pub const DEFAULT_MAX_OUTPUT_TUPLES: usize = 10_000_000;
pub const DEFAULT_PAGE_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinResultPolicy {
    pub max_output_tuples: usize,
}

impl Default for JoinResultPolicy {
    fn default() -> Self {
        Self {
            max_output_tuples: DEFAULT_MAX_OUTPUT_TUPLES,
        }
    }
}

/// Work done by one or more joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostCounters {
    pub tuple_comparisons: u64,
    pub page_reads: u64,
    /// Tuples per simulated page.
    pub page_size: usize,
}

impl Default for CostCounters {
    fn default() -> Self {
        Self::with_page_size(DEFAULT_PAGE_SIZE)
    }
}

impl CostCounters {
    pub fn with_page_size(page_size: usize) -> Self {
        assert!(page_size > 0, "page size must be positive");
        Self {
            tuple_comparisons: 0,
            page_reads: 0,
            page_size,
        }
    }

    /// Number of simulated pages spanned by `tuples` tuples.
    pub fn pages(&self, tuples: usize) -> usize {
        tuples.div_ceil(self.page_size)
    }

    /// A zeroed counter with the same page size.
    pub fn fresh(&self) -> Self {
        Self::with_page_size(self.page_size)
    }

    pub fn absorb(&mut self, other: &CostCounters) {
        self.tuple_comparisons += other.tuple_comparisons;
        self.page_reads += other.page_reads;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinAlgorithm {
    SortMerge,
    Nested,
    Block,
    Rocking,
    Hash,
}

impl JoinAlgorithm {
    pub const ALL: [JoinAlgorithm; 5] = [
        JoinAlgorithm::SortMerge,
        JoinAlgorithm::Nested,
        JoinAlgorithm::Block,
        JoinAlgorithm::Rocking,
        JoinAlgorithm::Hash,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JoinAlgorithm::SortMerge => "sortmerge",
            JoinAlgorithm::Nested => "nested",
            JoinAlgorithm::Block => "block",
            JoinAlgorithm::Rocking => "rocking",
            JoinAlgorithm::Hash => "hash",
        }
    }

    pub fn join(
        self,
        outer: &Relation,
        inner: &Relation,
        policy: &JoinResultPolicy,
        counters: &mut CostCounters,
    ) -> Result<Relation> {
        match self {
            JoinAlgorithm::SortMerge => sort_merge_join(outer, inner, policy, counters),
            JoinAlgorithm::Nested => nested_loop_join(outer, inner, policy, counters),
            JoinAlgorithm::Block => block_nested_loop_join(outer, inner, policy, counters),
            JoinAlgorithm::Rocking => rocking_nested_loop_join(outer, inner, policy, counters),
            JoinAlgorithm::Hash => hash_join(outer, inner, policy, counters),
        }
    }
}

impl fmt::Display for JoinAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JoinAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        JoinAlgorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown join algorithm '{s}'"))
    }
}

/// Name of a join result: first base name of the outer, last of the inner.
/// Joining `R1..R3` with `R4` gives `R1..R4`.
fn joined_name(outer: &str, inner: &str) -> String {
    let first = outer.split("..").next().unwrap_or(outer);
    let last = inner.rsplit("..").next().unwrap_or(inner);
    format!("{first}..{last}")
}

/// Output relation that refuses to grow past the policy limit.
struct Output<'a> {
    relation: Relation,
    limit: usize,
    outer: &'a Relation,
    inner: &'a Relation,
}

impl<'a> Output<'a> {
    fn new(outer: &'a Relation, inner: &'a Relation, policy: &JoinResultPolicy) -> Self {
        Self {
            relation: Relation::new(
                joined_name(outer.name(), inner.name()),
                outer.arity() + inner.arity(),
            ),
            limit: policy.max_output_tuples,
            outer,
            inner,
        }
    }

    fn reserve(&mut self, expected: usize) -> Result<()> {
        if expected > self.limit {
            return Err(Error::CardinalityLimit { limit: self.limit });
        }
        let mut relation =
            Relation::with_capacity(self.relation.name(), self.relation.arity(), expected);
        std::mem::swap(&mut relation, &mut self.relation);
        Ok(())
    }

    #[inline]
    fn emit(&mut self, outer_row: usize, inner_row: usize) -> Result<()> {
        if self.relation.cardinality() >= self.limit {
            return Err(Error::CardinalityLimit { limit: self.limit });
        }
        self.relation.push_concat(
            self.outer.key(outer_row),
            self.outer.payload(outer_row),
            self.inner.payload(inner_row),
        );
        Ok(())
    }

    fn finish(self) -> Relation {
        self.relation
    }
}

/// Tuple-at-a-time nested loops: the inner relation is rescanned for every
/// outer tuple.
pub fn nested_loop_join(
    outer: &Relation,
    inner: &Relation,
    policy: &JoinResultPolicy,
    counters: &mut CostCounters,
) -> Result<Relation> {
    let mut out = Output::new(outer, inner, policy);
    counters.page_reads += counters.pages(outer.cardinality()) as u64;
    let inner_pages = counters.pages(inner.cardinality()) as u64;
    let inner_keys = inner.keys();
    for (r, &key) in outer.keys().iter().enumerate() {
        counters.page_reads += inner_pages;
        counters.tuple_comparisons += inner_keys.len() as u64;
        for (s, &inner_key) in inner_keys.iter().enumerate() {
            if key == inner_key {
                out.emit(r, s)?;
            }
        }
    }
    Ok(out.finish())
}

/// Joins one outer page against one inner page.
fn join_pages(
    out: &mut Output<'_>,
    outer_rows: std::ops::Range<usize>,
    inner_rows: std::ops::Range<usize>,
    counters: &mut CostCounters,
) -> Result<()> {
    let outer_keys = out.outer.keys();
    let inner_keys = out.inner.keys();
    counters.tuple_comparisons += (outer_rows.len() * inner_rows.len()) as u64;
    for r in outer_rows {
        let key = outer_keys[r];
        for s in inner_rows.clone() {
            if key == inner_keys[s] {
                out.emit(r, s)?;
            }
        }
    }
    Ok(())
}

fn page_rows(page: usize, page_size: usize, len: usize) -> std::ops::Range<usize> {
    let start = page * page_size;
    start..(start + page_size).min(len)
}

/// Nested loops over pages: one full inner pass per outer page.
pub fn block_nested_loop_join(
    outer: &Relation,
    inner: &Relation,
    policy: &JoinResultPolicy,
    counters: &mut CostCounters,
) -> Result<Relation> {
    let mut out = Output::new(outer, inner, policy);
    let page_size = counters.page_size;
    let outer_pages = counters.pages(outer.cardinality());
    let inner_pages = counters.pages(inner.cardinality());
    for op in 0..outer_pages {
        counters.page_reads += 1;
        let outer_rows = page_rows(op, page_size, outer.cardinality());
        for ip in 0..inner_pages {
            counters.page_reads += 1;
            let inner_rows = page_rows(ip, page_size, inner.cardinality());
            join_pages(&mut out, outer_rows.clone(), inner_rows, counters)?;
        }
    }
    Ok(out.finish())
}

/// Block nested loops whose inner scan alternates direction between outer
/// pages. The inner page at the turning point is still buffered and is not
/// fetched again.
pub fn rocking_nested_loop_join(
    outer: &Relation,
    inner: &Relation,
    policy: &JoinResultPolicy,
    counters: &mut CostCounters,
) -> Result<Relation> {
    let mut out = Output::new(outer, inner, policy);
    let page_size = counters.page_size;
    let outer_pages = counters.pages(outer.cardinality());
    let inner_pages = counters.pages(inner.cardinality());
    let mut buffered: Option<usize> = None;
    for op in 0..outer_pages {
        counters.page_reads += 1;
        let outer_rows = page_rows(op, page_size, outer.cardinality());
        let forward = op % 2 == 0;
        for step in 0..inner_pages {
            let ip = if forward {
                step
            } else {
                inner_pages - 1 - step
            };
            if buffered != Some(ip) {
                counters.page_reads += 1;
                buffered = Some(ip);
            }
            let inner_rows = page_rows(ip, page_size, inner.cardinality());
            join_pages(&mut out, outer_rows.clone(), inner_rows, counters)?;
        }
    }
    Ok(out.finish())
}

const EMPTY: u32 = u32::MAX;

/// Chained hash table over the inner relation's keys. Each bucket is a linked
/// list of row indices threaded through `next`; duplicate keys share a chain.
struct ChainedTable {
    heads: Vec<u32>,
    next: Vec<u32>,
    mask: u64,
}

impl ChainedTable {
    fn build(keys: &[i64]) -> Self {
        assert!(keys.len() < EMPTY as usize, "inner relation too large");
        let buckets = keys.len().max(1).next_power_of_two();
        let mut table = Self {
            heads: vec![EMPTY; buckets],
            next: vec![EMPTY; keys.len()],
            mask: buckets as u64 - 1,
        };
        // Insert in reverse so each chain lists rows in ascending order.
        for (row, &key) in keys.iter().enumerate().rev() {
            let bucket = table.bucket(key);
            table.next[row] = table.heads[bucket];
            table.heads[bucket] = row as u32;
        }
        table
    }

    #[inline]
    fn bucket(&self, key: i64) -> usize {
        // Fibonacci hashing; the high bits are the well-mixed ones.
        let h = (key as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        ((h >> 32) & self.mask) as usize
    }
}

/// Build on the inner relation, probe with each outer tuple.
pub fn hash_join(
    outer: &Relation,
    inner: &Relation,
    policy: &JoinResultPolicy,
    counters: &mut CostCounters,
) -> Result<Relation> {
    let mut out = Output::new(outer, inner, policy);
    if outer.is_empty() || inner.is_empty() {
        return Ok(out.finish());
    }
    counters.page_reads += counters.pages(inner.cardinality()) as u64;
    let table = ChainedTable::build(inner.keys());
    let inner_keys = inner.keys();

    counters.page_reads += counters.pages(outer.cardinality()) as u64;
    for (r, &key) in outer.keys().iter().enumerate() {
        let mut row = table.heads[table.bucket(key)];
        while row != EMPTY {
            counters.tuple_comparisons += 1;
            if inner_keys[row as usize] == key {
                out.emit(r, row as usize)?;
            }
            row = table.next[row as usize];
        }
    }
    Ok(out.finish())
}

/// Sorts `(key, row)` copies of both inputs with quicksort, then merges with
/// two cursors. Equal-key runs produce their full cross product.
pub fn sort_merge_join(
    outer: &Relation,
    inner: &Relation,
    policy: &JoinResultPolicy,
    counters: &mut CostCounters,
) -> Result<Relation> {
    let mut out = Output::new(outer, inner, policy);
    if outer.is_empty() || inner.is_empty() {
        return Ok(out.finish());
    }
    counters.page_reads +=
        (counters.pages(outer.cardinality()) + counters.pages(inner.cardinality())) as u64;

    let sorted_outer = sorted_index(outer, counters);
    let sorted_inner = sorted_index(inner, counters);

    let runs = matching_runs(&sorted_outer, &sorted_inner, counters);
    let total = runs.iter().try_fold(0usize, |acc, run| {
        run.outer
            .len()
            .checked_mul(run.inner.len())
            .and_then(|n| acc.checked_add(n))
    });
    out.reserve(total.unwrap_or(usize::MAX))?;

    for run in runs {
        // The inner run is rescanned once per outer tuple of the run.
        for &(_, r) in &sorted_outer[run.outer.clone()] {
            for &(_, s) in &sorted_inner[run.inner.clone()] {
                out.emit(r as usize, s as usize)?;
            }
        }
    }
    Ok(out.finish())
}

fn sorted_index(relation: &Relation, counters: &mut CostCounters) -> Vec<(i64, u32)> {
    assert!(
        relation.cardinality() <= u32::MAX as usize,
        "relation too large"
    );
    let mut index: Vec<(i64, u32)> = relation
        .keys()
        .iter()
        .enumerate()
        .map(|(row, &key)| (key, row as u32))
        .collect();
    counters.tuple_comparisons += quicksort_by(&mut index, |&(key, _)| key);
    index
}

/// A pair of equal-key runs, as index ranges into the two sorted inputs.
struct Run {
    outer: std::ops::Range<usize>,
    inner: std::ops::Range<usize>,
}

fn matching_runs(
    outer: &[(i64, u32)],
    inner: &[(i64, u32)],
    counters: &mut CostCounters,
) -> Vec<Run> {
    let mut runs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < outer.len() && j < inner.len() {
        let (a, b) = (outer[i].0, inner[j].0);
        counters.tuple_comparisons += 1;
        if a < b {
            i += 1;
        } else if a > b {
            j += 1;
        } else {
            let outer_end = run_end(outer, i, counters);
            let inner_end = run_end(inner, j, counters);
            runs.push(Run {
                outer: i..outer_end,
                inner: j..inner_end,
            });
            i = outer_end;
            j = inner_end;
        }
    }
    runs
}

fn run_end(sorted: &[(i64, u32)], start: usize, counters: &mut CostCounters) -> usize {
    let key = sorted[start].0;
    let mut end = start + 1;
    while end < sorted.len() {
        counters.tuple_comparisons += 1;
        if sorted[end].0 != key {
            break;
        }
        end += 1;
    }
    end
}

/// `Σ_v hR(v)·hS(v)`: the size of the equi-join of relations with these key
/// histograms.
pub fn expected_join_cardinality(
    outer: &BTreeMap<i64, usize>,
    inner: &BTreeMap<i64, usize>,
) -> u128 {
    outer
        .iter()
        .filter_map(|(key, &count)| inner.get(key).map(|&other| count as u128 * other as u128))
        .sum()
}
