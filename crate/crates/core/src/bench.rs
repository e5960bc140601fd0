//! Timing sweeps over a tuples × relations grid for linear and bushy plans.
//!
//! Each grid cell gets its own catalog `R1..Rk`, generated from a seed derived
//! from the base seed and the cell coordinates, and shared by every shape
//! measured in that cell. Only plan evaluation is timed.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{eval_rpn, EvalContext, EvalMode};
use crate::join::{JoinAlgorithm, JoinResultPolicy};
use crate::plan::{make_bushy_plan, make_linear_plan, PlanTree};
use crate::relation::{generate_relation, Catalog};

pub const RESULTS_HEADER: &str =
    "shape,algorithm,tuples,relations,key_lo,key_hi,seed,median_ms,result_cardinality,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Linear,
    Bushy,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Linear => "linear",
            Shape::Bushy => "bushy",
        }
    }

    pub fn build<S: AsRef<str>>(self, names: &[S]) -> Result<PlanTree> {
        match self {
            Shape::Linear => make_linear_plan(names),
            Shape::Bushy => make_bushy_plan(names),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Shape::Linear),
            "bushy" => Ok(Shape::Bushy),
            _ => Err(format!("unknown plan shape '{s}'")),
        }
    }
}

/// How the tuple and relation lists combine into grid cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GridLayout {
    /// Zip the two lists; they must have equal length.
    #[default]
    Paired,
    /// Every tuple count with every relation count.
    Cross,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KeyRange {
    /// `[0, max(1, tuples / 10))`, about ten tuples per key.
    #[default]
    PerCell,
    Fixed {
        lo: i64,
        hi: i64,
    },
}

impl KeyRange {
    pub fn for_tuples(self, tuples: usize) -> (i64, i64) {
        match self {
            KeyRange::PerCell => (0, (tuples / 10).max(1) as i64),
            KeyRange::Fixed { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub tuples_per_relation: Vec<usize>,
    pub relation_counts: Vec<usize>,
    pub layout: GridLayout,
    pub key_range: KeyRange,
    pub seed: u64,
    pub shapes: Vec<Shape>,
    pub algorithm: JoinAlgorithm,
    pub repetitions: usize,
    pub warmup: usize,
    pub policy: JoinResultPolicy,
    pub mode: EvalMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tuples_per_relation: vec![100],
            relation_counts: vec![2],
            layout: GridLayout::Paired,
            key_range: KeyRange::PerCell,
            seed: 0,
            shapes: vec![Shape::Linear, Shape::Bushy],
            algorithm: JoinAlgorithm::SortMerge,
            repetitions: 5,
            warmup: 1,
            policy: JoinResultPolicy::default(),
            mode: EvalMode::Sequential,
        }
    }
}

impl BenchConfig {
    /// The ten paired cells of the reference sweep, 300/4 through 1400/15.
    pub fn reference_grid() -> Self {
        Self {
            tuples_per_relation: vec![300, 500, 600, 700, 800, 900, 1000, 1100, 1200, 1400],
            relation_counts: vec![4, 6, 7, 8, 9, 10, 11, 12, 13, 15],
            ..Self::default()
        }
    }

    /// Grid cells as `(tuples, relations)`, validating the configuration.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        let invalid = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.tuples_per_relation.is_empty() || self.relation_counts.is_empty() {
            return invalid("tuple and relation lists must be non-empty");
        }
        if self.tuples_per_relation.contains(&0) {
            return invalid("tuple counts must be positive");
        }
        if self.relation_counts.iter().any(|&k| k < 2) {
            return invalid("relation counts must be at least 2");
        }
        if self.shapes.is_empty() {
            return invalid("at least one shape is required");
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be positive");
        }
        if let KeyRange::Fixed { lo, hi } = self.key_range {
            if lo >= hi {
                return Err(Error::InvalidRange { lo, hi });
            }
        }
        match self.layout {
            GridLayout::Paired => {
                if self.tuples_per_relation.len() != self.relation_counts.len() {
                    return invalid("paired layout needs tuple and relation lists of equal length");
                }
                Ok(self
                    .tuples_per_relation
                    .iter()
                    .copied()
                    .zip(self.relation_counts.iter().copied())
                    .collect())
            }
            GridLayout::Cross => Ok(self
                .tuples_per_relation
                .iter()
                .flat_map(|&t| self.relation_counts.iter().map(move |&k| (t, k)))
                .collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Ok,
    CapExceeded,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::CapExceeded => "cap_exceeded",
        }
    }
}

/// One measured (cell, shape) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub shape: Shape,
    pub algorithm: JoinAlgorithm,
    pub tuples: usize,
    pub relations: usize,
    pub key_lo: i64,
    pub key_hi: i64,
    /// Base seed of the run; per-cell seeds derive from it.
    pub seed: u64,
    /// Median of the timed repetitions. For a capped cell, the time until the
    /// first run hit the cap.
    pub median_ms: f64,
    /// Zero when the cap was exceeded.
    pub result_cardinality: u64,
    pub status: RecordStatus,
}

impl BenchRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{},{}",
            self.shape,
            self.algorithm,
            self.tuples,
            self.relations,
            self.key_lo,
            self.key_hi,
            self.seed,
            self.median_ms,
            self.result_cardinality,
            self.status.as_str()
        )
    }

    fn order_key(&self) -> (usize, usize, Shape) {
        (self.tuples, self.relations, self.shape)
    }
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one grid cell: the base seed xor a hash of the coordinates.
pub fn cell_seed(seed: u64, tuples: usize, relations: usize) -> u64 {
    seed ^ mix64(((tuples as u64) << 32) ^ relations as u64)
}

/// Relations `R1..Rk` for one cell.
pub fn cell_catalog(
    seed: u64,
    tuples: usize,
    relations: usize,
    lo: i64,
    hi: i64,
) -> Result<Catalog> {
    let base = cell_seed(seed, tuples, relations);
    let relations = (1..=relations)
        .map(|i| {
            generate_relation(
                format!("R{i}"),
                tuples,
                lo,
                hi,
                mix64(base.wrapping_add(i as u64)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Catalog::from_relations(relations)
}

pub fn relation_names(relations: usize) -> Vec<String> {
    (1..=relations).map(|i| format!("R{i}")).collect()
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Measures every shape in every cell. A cell whose joins exceed the output
/// cap is recorded with [`RecordStatus::CapExceeded`] and the sweep goes on.
/// Records come back ordered by `(tuples, relations, shape)`.
pub fn run_benchmark(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let cells = config.cells()?;
    let mut shapes = config.shapes.clone();
    shapes.sort();
    shapes.dedup();

    let generate = |&(tuples, relations): &(usize, usize)| {
        let (lo, hi) = config.key_range.for_tuples(tuples);
        cell_catalog(config.seed, tuples, relations, lo, hi)
    };
    #[cfg(feature = "parallel")]
    let catalogs: Vec<Result<Catalog>> = cells.par_iter().map(generate).collect();
    #[cfg(not(feature = "parallel"))]
    let catalogs: Vec<Result<Catalog>> = cells.iter().map(generate).collect();

    let mut records = Vec::with_capacity(cells.len() * shapes.len());
    for (&(tuples, relations), catalog) in cells.iter().zip(catalogs) {
        let catalog = catalog?;
        let (key_lo, key_hi) = config.key_range.for_tuples(tuples);
        let names = relation_names(relations);
        for &shape in &shapes {
            let program = shape.build(&names)?.to_rpn();
            let mut samples = Vec::with_capacity(config.repetitions);
            let mut cardinality = 0u64;
            let mut status = RecordStatus::Ok;
            for run in 0..config.warmup + config.repetitions {
                let mut ctx = EvalContext::new(&catalog, config.algorithm)
                    .with_policy(config.policy)
                    .with_mode(config.mode);
                let start = Instant::now();
                let outcome = eval_rpn(&program, &mut ctx);
                let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                match outcome {
                    Ok(result) => {
                        cardinality = result.cardinality() as u64;
                        if run >= config.warmup {
                            samples.push(elapsed_ms);
                        }
                    }
                    Err(Error::CardinalityLimit { .. }) => {
                        status = RecordStatus::CapExceeded;
                        samples = vec![elapsed_ms];
                        cardinality = 0;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            records.push(BenchRecord {
                shape,
                algorithm: config.algorithm,
                tuples,
                relations,
                key_lo,
                key_hi,
                seed: config.seed,
                median_ms: median(&mut samples),
                result_cardinality: cardinality,
                status,
            });
        }
    }
    records.sort_by_key(BenchRecord::order_key);
    Ok(records)
}

/// Writes the results CSV, rows ordered by `(tuples, relations, shape)`.
pub fn write_results(records: &[BenchRecord], writer: impl Write) -> Result<()> {
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.order_key());
    let mut out = BufWriter::new(writer);
    writeln!(out, "{RESULTS_HEADER}")?;
    for record in sorted {
        writeln!(out, "{}", record.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_results_csv(records: &[BenchRecord], path: impl AsRef<Path>) -> Result<()> {
    write_results(records, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(tuples: Vec<usize>, relations: Vec<usize>) -> BenchConfig {
        BenchConfig {
            tuples_per_relation: tuples,
            relation_counts: relations,
            repetitions: 1,
            warmup: 0,
            seed: 11,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn median_of_samples() {
        assert_eq!(median(&mut [3.0]), 3.0);
        assert_eq!(median(&mut [5.0, 1.0, 3.0]), 3.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn layouts() {
        let mut c = quick(vec![10, 20], vec![2, 3]);
        assert_eq!(c.cells().unwrap(), vec![(10, 2), (20, 3)]);
        c.layout = GridLayout::Cross;
        assert_eq!(c.cells().unwrap(), vec![(10, 2), (10, 3), (20, 2), (20, 3)]);
        c.layout = GridLayout::Paired;
        c.relation_counts = vec![2];
        assert!(matches!(c.cells(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn invalid_configs() {
        assert!(quick(vec![10], vec![1]).cells().is_err());
        assert!(quick(vec![0], vec![2]).cells().is_err());
        assert!(quick(vec![], vec![]).cells().is_err());
        let mut c = quick(vec![10], vec![2]);
        c.repetitions = 0;
        assert!(c.cells().is_err());
        let mut c = quick(vec![10], vec![2]);
        c.key_range = KeyRange::Fixed { lo: 3, hi: 3 };
        assert!(matches!(c.cells(), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn default_key_range() {
        assert_eq!(KeyRange::PerCell.for_tuples(300), (0, 30));
        assert_eq!(KeyRange::PerCell.for_tuples(5), (0, 1));
    }

    #[test]
    fn single_cell() {
        let mut c = quick(vec![100], vec![2]);
        c.shapes = vec![Shape::Linear];
        let records = run_benchmark(&c).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!((r.tuples, r.relations, r.shape), (100, 2, Shape::Linear));
        assert_eq!(r.status, RecordStatus::Ok);
        assert!(r.median_ms.is_finite() && r.median_ms > 0.0);
        let again = run_benchmark(&c).unwrap();
        assert_eq!(again[0].result_cardinality, r.result_cardinality);
    }

    #[test]
    fn shapes_agree_on_cardinality() {
        let c = quick(vec![60, 80], vec![3, 5]);
        let records = run_benchmark(&c).unwrap();
        assert_eq!(records.len(), 4);
        for pair in records.chunks(2) {
            assert_eq!(pair[0].shape, Shape::Linear);
            assert_eq!(pair[1].shape, Shape::Bushy);
            assert_eq!(pair[0].result_cardinality, pair[1].result_cardinality);
        }
    }

    #[test]
    fn cap_is_recorded_not_fatal() {
        let mut c = quick(vec![200, 20], vec![4, 2]);
        c.policy = JoinResultPolicy {
            max_output_tuples: 500,
        };
        let records = run_benchmark(&c).unwrap();
        assert_eq!(records.len(), 4);
        // ordered by tuples: the small cell first
        assert_eq!(records[0].tuples, 20);
        assert_eq!(records[0].status, RecordStatus::Ok);
        assert!(records[2..]
            .iter()
            .all(|r| r.status == RecordStatus::CapExceeded));
        assert!(records[2..].iter().all(|r| r.result_cardinality == 0));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_results(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{RESULTS_HEADER}\n")
        );

        let record = BenchRecord {
            shape: Shape::Bushy,
            algorithm: JoinAlgorithm::SortMerge,
            tuples: 300,
            relations: 4,
            key_lo: 0,
            key_hi: 30,
            seed: 1,
            median_ms: 1.23456,
            result_cardinality: 42,
            status: RecordStatus::Ok,
        };
        let mut buf = Vec::new();
        write_results(&[record], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{RESULTS_HEADER}\nbushy,sortmerge,300,4,0,30,1,1.235,42,ok\n")
        );
    }

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(1, 300, 4), cell_seed(1, 500, 6));
        assert_ne!(cell_seed(1, 300, 4), cell_seed(2, 300, 4));
        assert_eq!(cell_seed(1, 300, 4), cell_seed(1, 300, 4));
    }
}
