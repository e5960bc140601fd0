//! Tuples, relations and the catalog that names them.
//!
//! A [`Relation`] stores its tuples column-wise: one key vector and one flat
//! payload vector with `arity` values per tuple. [`Tuple`] is the owned row
//! form used at API boundaries.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One row: the join key and the provenance payload.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    pub key: i64,
    pub payload: Vec<i64>,
}

impl Tuple {
    pub fn new(key: i64, payload: Vec<i64>) -> Self {
        Self { key, payload }
    }
}

/// Borrowed view of one row of a [`Relation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleRef<'a> {
    pub key: i64,
    pub payload: &'a [i64],
}

impl TupleRef<'_> {
    pub fn to_owned(self) -> Tuple {
        Tuple::new(self.key, self.payload.to_vec())
    }
}

/// A named multiset of tuples sharing one payload arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    arity: usize,
    keys: Vec<i64>,
    payloads: Vec<i64>,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Self {
            name: name.into(),
            arity,
            keys: Vec::new(),
            payloads: Vec::new(),
        }
    }

    pub fn with_capacity(name: impl Into<String>, arity: usize, capacity: usize) -> Self {
        Self {
            name: name.into(),
            arity,
            keys: Vec::with_capacity(capacity),
            payloads: Vec::with_capacity(capacity * arity),
        }
    }

    pub fn from_tuples(
        name: impl Into<String>,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self> {
        let mut relation = Self::new(name, arity);
        for tuple in tuples {
            relation.push(tuple.key, &tuple.payload)?;
        }
        Ok(relation)
    }

    /// Relation with arity 1 whose payloads are the row serials `0..keys.len()`.
    pub fn from_keys(name: impl Into<String>, keys: &[i64]) -> Self {
        Self {
            name: name.into(),
            arity: 1,
            keys: keys.to_vec(),
            payloads: (0..keys.len() as i64).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cardinality(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[i64] {
        &self.keys
    }

    pub fn key(&self, row: usize) -> i64 {
        self.keys[row]
    }

    pub fn payload(&self, row: usize) -> &[i64] {
        &self.payloads[row * self.arity..(row + 1) * self.arity]
    }

    pub fn get(&self, row: usize) -> TupleRef<'_> {
        TupleRef {
            key: self.keys[row],
            payload: self.payload(row),
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = TupleRef<'_>> + '_ {
        (0..self.keys.len()).map(move |row| self.get(row))
    }

    pub fn to_tuples(&self) -> Vec<Tuple> {
        self.iter().map(TupleRef::to_owned).collect()
    }

    pub fn push(&mut self, key: i64, payload: &[i64]) -> Result<()> {
        if payload.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: payload.len(),
            });
        }
        self.keys.push(key);
        self.payloads.extend_from_slice(payload);
        Ok(())
    }

    /// Appends `key` with the payload `left ‖ right`; the caller guarantees
    /// `left.len() + right.len() == arity`.
    pub(crate) fn push_concat(&mut self, key: i64, left: &[i64], right: &[i64]) {
        debug_assert_eq!(left.len() + right.len(), self.arity);
        self.keys.push(key);
        self.payloads.extend_from_slice(left);
        self.payloads.extend_from_slice(right);
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Deterministically generates `count` tuples with keys uniform in `[lo, hi)`.
///
/// Payloads are the row serials `0..count` (arity 1). The generator is
/// ChaCha8 seeded with `seed`, so equal arguments give identical relations.
pub fn generate_relation(
    name: impl Into<String>,
    count: usize,
    lo: i64,
    hi: i64,
    seed: u64,
) -> Result<Relation> {
    if lo >= hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<i64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
    Ok(Relation::from_keys(name, &keys))
}

fn sorted_rows(r: &Relation) -> Vec<TupleRef<'_>> {
    let mut rows: Vec<_> = r.iter().collect();
    rows.sort_unstable_by(|a, b| (a.key, a.payload).cmp(&(b.key, b.payload)));
    rows
}

/// Multiset equality over `(key, payload)` rows, ignoring order and names.
pub fn multiset_equal(a: &Relation, b: &Relation) -> bool {
    a.cardinality() == b.cardinality() && sorted_rows(a) == sorted_rows(b)
}

/// Rows with each payload sorted, then the rows themselves sorted.
///
/// Two relations that differ only in payload column order have equal normal
/// forms.
pub fn sorted_payload_normal_form(r: &Relation) -> Vec<Tuple> {
    let mut rows: Vec<Tuple> = r
        .iter()
        .map(|t| {
            let mut payload = t.payload.to_vec();
            payload.sort_unstable();
            Tuple::new(t.key, payload)
        })
        .collect();
    rows.sort_unstable();
    rows
}

pub fn key_histogram(r: &Relation) -> BTreeMap<i64, usize> {
    let mut histogram = BTreeMap::new();
    for &key in r.keys() {
        *histogram.entry(key).or_insert(0) += 1;
    }
    histogram
}

/// Parses the relation CSV format: a `key,p0,...,p{n-1}` header followed by
/// one decimal row per tuple.
pub fn read_relation_csv(name: impl Into<String>, reader: impl Read) -> Result<Relation> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = reader.headers().map_err(|e| csv_error(1, e))?;
    if header.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "missing header".into(),
        });
    }
    let arity = parse_header(header)?;

    let mut relation = Relation::new(name, arity);
    let mut payload = Vec::with_capacity(arity);
    let mut record = csv::StringRecord::new();
    loop {
        let line_no = reader.position().line() as usize;
        if !reader
            .read_record(&mut record)
            .map_err(|e| csv_error(line_no, e))?
        {
            break;
        }
        let line_no = record.position().map_or(line_no, |p| p.line() as usize);
        if record.len() != arity + 1 {
            return Err(Error::Csv {
                line: line_no,
                message: format!("expected {} columns, found {}", arity + 1, record.len()),
            });
        }
        let mut values = record.iter().map(|field| {
            field.parse::<i64>().map_err(|_| Error::Csv {
                line: line_no,
                message: format!("'{field}' is not an integer"),
            })
        });
        let key = values.next().expect("at least one column")?;
        payload.clear();
        for value in values {
            payload.push(value?);
        }
        relation.push(key, &payload)?;
    }
    Ok(relation)
}

fn csv_error(line: usize, err: csv::Error) -> Error {
    if !err.is_io_error() {
        return Error::Csv {
            line,
            message: err.to_string(),
        };
    }
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        _ => unreachable!("checked is_io_error"),
    }
}

fn parse_header(header: &csv::StringRecord) -> Result<usize> {
    let bad = |message: String| Error::Csv { line: 1, message };
    let mut columns = header.iter();
    if columns.next() != Some("key") {
        return Err(bad(format!(
            "header must start with 'key', got '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut arity = 0;
    for column in columns {
        if column != format!("p{arity}") {
            return Err(bad(format!("expected column 'p{arity}', found '{column}'")));
        }
        arity += 1;
    }
    Ok(arity)
}

pub fn write_relation_csv(r: &Relation, writer: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut fields = Vec::with_capacity(r.arity() + 1);
    fields.push("key".to_owned());
    fields.extend((0..r.arity()).map(|i| format!("p{i}")));
    out.write_record(&fields).map_err(|e| csv_error(0, e))?;
    for t in r.iter() {
        fields.clear();
        fields.push(t.key.to_string());
        fields.extend(t.payload.iter().map(i64::to_string));
        out.write_record(&fields).map_err(|e| csv_error(0, e))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a relation CSV file; the relation is named after the file stem.
pub fn relation_from_csv(path: impl AsRef<Path>) -> Result<Relation> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_relation_csv(name, File::open(path)?)
}

pub fn relation_to_csv(r: &Relation, path: impl AsRef<Path>) -> Result<()> {
    write_relation_csv(r, File::create(path)?)
}

/// Relations by name. Lookups of absent names fail.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    relations: BTreeMap<String, Arc<Relation>>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_relations(relations: impl IntoIterator<Item = Relation>) -> Result<Self> {
        let mut catalog = Self::new();
        for relation in relations {
            catalog.insert(relation)?;
        }
        Ok(catalog)
    }

    /// Registers `relation` under its own name.
    pub fn insert(&mut self, relation: Relation) -> Result<()> {
        match self.relations.entry(relation.name().to_owned()) {
            Entry::Occupied(e) => Err(Error::DuplicateRelation(e.key().clone())),
            Entry::Vacant(e) => {
                e.insert(Arc::new(relation));
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Result<&Arc<Relation>> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_owned()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }
}
