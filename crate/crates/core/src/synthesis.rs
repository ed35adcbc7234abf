//! Task construction: picking a ground-truth pipeline and injecting noise
//! that a known cleaning operator provably removes.
//!
//! A corruption is kept only when running its paired cleaner on the
//! corrupted state gives back the exact prior state. Cleaners are emitted in
//! reverse corruption order, so a stack of accepted corruptions unwinds one
//! layer at a time.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canon::tables_equal;
use crate::datetime;
use crate::expr::{Expr, Func};
use crate::io::{self, Format, IoError};
use crate::ops::{execute_operator, Keep, NaHow, Operator};
use crate::pipeline::{final_table, parse_pipeline, run_pipeline_with, serialize_pipeline, ExecutionTrace};
use crate::table::{Schema, Table, TableSet};
use crate::value::{DType, Value};

pub const DEDUP_INVERSE: &str = "dedup_inverse";
pub const DROPNA_INVERSE: &str = "dropna_inverse";
pub const DATETIME_INVERSE: &str = "datetime_inverse";
pub const CASING_INVERSE: &str = "casing_inverse";
pub const TYPE_INVERSE: &str = "type_inverse";

/// One planned corruption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub kind: String,
    pub table: String,
    /// Column to corrupt. Transforms that need one pick the first eligible
    /// column when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Fraction of rows or cells touched, in (0, 1].
    pub intensity: f64,
    pub seed: u64,
}

/// A corruption together with the operator that undoes it.
pub trait InverseTransform: Send + Sync {
    fn kind(&self) -> &str;

    /// Returns the corrupted state and the paired cleaner, or a reason the
    /// corruption does not apply.
    fn corrupt(&self, state: &TableSet, c: &Corruption, rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String>;
}

/// The set of known inverse transforms, keyed by kind.
pub struct CorruptionLibrary {
    transforms: BTreeMap<String, Box<dyn InverseTransform>>,
}

impl Default for CorruptionLibrary {
    fn default() -> Self {
        let mut lib = CorruptionLibrary { transforms: BTreeMap::new() };
        lib.register(Box::new(DedupInverse));
        lib.register(Box::new(DropnaInverse));
        lib.register(Box::new(DatetimeInverse));
        lib.register(Box::new(CasingInverse));
        lib.register(Box::new(TypeInverse));
        lib
    }
}

impl CorruptionLibrary {
    /// Adds or replaces a transform. Extra kinds still go through the
    /// restore check.
    pub fn register(&mut self, t: Box<dyn InverseTransform>) {
        self.transforms.insert(t.kind().to_string(), t);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.transforms.keys().map(String::as_str)
    }

    pub fn get(&self, kind: &str) -> Option<&dyn InverseTransform> {
        self.transforms.get(kind).map(|b| b.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Rejected {
    #[error("unknown corruption kind {0}")]
    UnknownKind(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("cleaner {cleaner} failed: {message}")]
    CleanerFailed { cleaner: String, message: String },
    #[error("cleaner {0} does not restore the previous state")]
    NotRestored(String),
}

/// Applies `c` and keeps it only if its paired cleaner restores `state`.
pub fn corrupt_reversibly(
    lib: &CorruptionLibrary,
    state: &TableSet,
    c: &Corruption,
) -> Result<(TableSet, Operator), Rejected> {
    let t = lib.get(&c.kind).ok_or_else(|| Rejected::UnknownKind(c.kind.clone()))?;
    if !(c.intensity > 0.0 && c.intensity <= 1.0) {
        return Err(Rejected::NotApplicable(format!("intensity {} outside (0, 1]", c.intensity)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let (corrupted, cleaner) = t.corrupt(state, c, &mut rng).map_err(Rejected::NotApplicable)?;
    let restored = execute_operator(&cleaner, &corrupted)
        .map_err(|e| Rejected::CleanerFailed { cleaner: cleaner.to_string(), message: e.message })?;
    if restored.equivalent(state) {
        Ok((corrupted, cleaner))
    } else {
        Err(Rejected::NotRestored(cleaner.to_string()))
    }
}

/// Target table of a finished trace: the single remaining table, or the one
/// named `name`.
fn output_of(trace: &ExecutionTrace, name: &str) -> Option<Table> {
    final_table(trace, None).or_else(|_| final_table(trace, Some(name))).ok()
}

/// Among candidates reproducing `target` exactly, the shortest; ties go to
/// the earliest candidate.
pub fn select_shortest_valid_pipeline<'a>(
    candidates: &'a [Vec<Operator>],
    sources: &TableSet,
    target: &Table,
) -> Option<&'a [Operator]> {
    let engine = crate::ops::Engine::default();
    candidates
        .iter()
        .filter(|ops| {
            let trace = run_pipeline_with(&engine, sources, ops);
            output_of(&trace, target.name()).is_some_and(|t| tables_equal(&t, target))
        })
        .min_by_key(|ops| ops.len())
        .map(Vec::as_slice)
}

/// Produces the natural-language description of the target schema.
pub trait SchemaDescriber {
    fn describe(&self, schema: &Schema) -> String;
}

/// Deterministic template naming the table and its typed columns.
pub struct TemplateDescriber;

impl SchemaDescriber for TemplateDescriber {
    fn describe(&self, schema: &Schema) -> String {
        let cols: Vec<String> = schema.columns.iter().map(|c| format!("{} ({})", c.name, c.dtype)).collect();
        format!("Produce table {} with columns: {}.", schema.table_name, cols.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub id: String,
    #[serde(flatten)]
    pub corruption: Corruption,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cleaner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub task_id: String,
    pub seed: u64,
    pub corruptions: Vec<CorruptionRecord>,
}

#[derive(Debug, Clone)]
pub struct TaskBundle {
    pub task_id: String,
    pub sources: TableSet,
    /// Carries the target description.
    pub target_schema: Schema,
    pub target_table: Table,
    pub gt_pipeline: Vec<Operator>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthesisError {
    #[error("task pipeline fails on the clean sources: {0}")]
    TaskPipeline(String),
    #[error("bundle invariant broken after corruption {id}: {message}")]
    Invariant { id: String, message: String },
}

pub struct SynthesisInput<'a> {
    pub task_id: &'a str,
    pub clean_sources: &'a TableSet,
    pub task_pipeline: &'a [Operator],
    pub corruptions: &'a [Corruption],
    pub seed: u64,
}

/// Checks that the ground-truth pipeline reproduces the target exactly.
pub fn verify_bundle(b: &TaskBundle) -> Result<(), String> {
    check_reproduces(&b.sources, &b.gt_pipeline, &b.target_table)
}

fn check_reproduces(sources: &TableSet, ops: &[Operator], target: &Table) -> Result<(), String> {
    let trace = run_pipeline_with(&crate::ops::Engine::default(), sources, ops);
    if let Some((i, e)) = &trace.failure {
        return Err(format!("operator {} ({}) failed: {}", i + 1, ops[*i], e.message));
    }
    match output_of(&trace, target.name()) {
        Some(t) if tables_equal(&t, target) => Ok(()),
        Some(_) => Err("final table differs from the target".into()),
        None => Err(format!("final state has no unique table or table named {}", target.name())),
    }
}

pub fn synthesize_task(
    input: &SynthesisInput<'_>,
    lib: &CorruptionLibrary,
    describer: &dyn SchemaDescriber,
) -> Result<TaskBundle, SynthesisError> {
    let engine = crate::ops::Engine::default();
    let trace = run_pipeline_with(&engine, input.clean_sources, input.task_pipeline);
    let target = match &trace.failure {
        Some((_, e)) => return Err(SynthesisError::TaskPipeline(e.message.clone())),
        None => final_table(&trace, None).map_err(|e| SynthesisError::TaskPipeline(e.to_string()))?,
    };

    let mut state = input.clean_sources.clone();
    let mut cleaners: Vec<Operator> = Vec::new();
    let mut records = Vec::with_capacity(input.corruptions.len());
    for (i, c) in input.corruptions.iter().enumerate() {
        let id = format!("c{i}:{}", c.kind);
        let mut record = CorruptionRecord { id: id.clone(), corruption: c.clone(), accepted: false, cleaner: None, reason: None };
        match corrupt_reversibly(lib, &state, c) {
            Ok((next, cleaner)) => {
                let mut gt: Vec<Operator> = std::iter::once(cleaner.clone()).chain(cleaners.iter().rev().cloned()).collect();
                gt.extend_from_slice(input.task_pipeline);
                check_reproduces(&next, &gt, &target).map_err(|message| SynthesisError::Invariant { id, message })?;
                record.accepted = true;
                record.cleaner = Some(cleaner.to_string());
                cleaners.push(cleaner);
                state = next;
            }
            Err(r) => record.reason = Some(r.to_string()),
        }
        records.push(record);
    }

    let mut gt_pipeline: Vec<Operator> = cleaners.into_iter().rev().collect();
    gt_pipeline.extend_from_slice(input.task_pipeline);
    let mut target_schema = target.schema().clone();
    target_schema.description = Some(describer.describe(&target_schema));
    let bundle = TaskBundle {
        task_id: input.task_id.to_string(),
        sources: state,
        target_schema,
        target_table: target,
        gt_pipeline,
        provenance: Provenance { task_id: input.task_id.to_string(), seed: input.seed, corruptions: records },
    };
    verify_bundle(&bundle).map_err(|message| SynthesisError::Invariant {
        id: bundle.provenance.corruptions.iter().rev().find(|r| r.accepted).map_or("task".into(), |r| r.id.clone()),
        message,
    })?;
    Ok(bundle)
}

#[derive(Debug, thiserror::Error)]
pub enum BundleIoError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("gt_pipeline.txt: {0}")]
    Pipeline(#[from] crate::pipeline::PipelineParseError),
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleIoError + '_ {
    move |source| BundleIoError::Fs { path: path.display().to_string(), source }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BundleIoError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| BundleIoError::Json { path: path.display().to_string(), source })?;
    fs::write(path, text + "\n").map_err(fs_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, BundleIoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    serde_json::from_str(&text).map_err(|source| BundleIoError::Json { path: path.display().to_string(), source })
}

/// Writes the bundle layout: `sources/*.csv` with sidecars,
/// `target_schema.json`, `target_table.csv`, `gt_pipeline.txt`,
/// `provenance.json`.
pub fn write_bundle(dir: &Path, b: &TaskBundle) -> Result<(), BundleIoError> {
    let src_dir = dir.join("sources");
    fs::create_dir_all(&src_dir).map_err(fs_err(&src_dir))?;
    for t in b.sources.iter() {
        io::write_table(&src_dir.join(format!("{}.csv", t.name())), t, Format::Csv)?;
    }
    write_json(&dir.join("target_schema.json"), &b.target_schema)?;
    io::write_table(&dir.join("target_table.csv"), &b.target_table, Format::Csv)?;
    let gt = dir.join("gt_pipeline.txt");
    fs::write(&gt, serialize_pipeline(&b.gt_pipeline)).map_err(fs_err(&gt))?;
    write_json(&dir.join("provenance.json"), &b.provenance)
}

pub fn read_bundle(dir: &Path) -> Result<TaskBundle, BundleIoError> {
    let sources = io::read_table_dir(&dir.join("sources"))?;
    let target_schema: Schema = read_json(&dir.join("target_schema.json"))?;
    let target_table = io::read_table(&dir.join("target_table.csv"), Format::Csv)?.with_name(target_schema.table_name.clone());
    let gt = dir.join("gt_pipeline.txt");
    let gt_pipeline = parse_pipeline(&fs::read_to_string(&gt).map_err(fs_err(&gt))?)?;
    let provenance: Provenance = read_json(&dir.join("provenance.json"))?;
    Ok(TaskBundle { task_id: provenance.task_id.clone(), sources, target_schema, target_table, gt_pipeline, provenance })
}

// ---- built-in inverse transforms ----

fn table_of<'a>(state: &'a TableSet, c: &Corruption) -> Result<&'a Table, String> {
    state.get(&c.table).ok_or_else(|| format!("no table {}", c.table))
}

fn pick_count(n: usize, intensity: f64) -> usize {
    ((n as f64 * intensity).round() as usize).clamp(1, n.max(1))
}

fn with_rows(t: &Table, rows: Vec<Vec<Value>>) -> Result<Table, String> {
    Table::new(t.schema().clone(), rows).map_err(|e| e.to_string())
}

fn replaced(state: &TableSet, t: Table) -> TableSet {
    let mut next = state.clone();
    next.insert(t);
    next
}

/// Copies of some rows, each placed right after its original.
struct DedupInverse;

impl InverseTransform for DedupInverse {
    fn kind(&self) -> &str {
        DEDUP_INVERSE
    }

    fn corrupt(&self, state: &TableSet, c: &Corruption, rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String> {
        let t = table_of(state, c)?;
        if t.num_rows() == 0 {
            return Err("table is empty".into());
        }
        let subset: Vec<String> = match &c.column {
            Some(col) if t.column_index(col).is_none() => return Err(format!("no column {col}")),
            Some(col) => vec![col.clone()],
            None => Vec::new(),
        };
        let mut picked: Vec<usize> = (0..t.num_rows()).collect();
        picked.shuffle(rng);
        picked.truncate(pick_count(t.num_rows(), c.intensity));
        let mut rows = Vec::with_capacity(t.num_rows() + picked.len());
        for (r, row) in t.rows().iter().enumerate() {
            rows.push(row.clone());
            if picked.contains(&r) {
                rows.push(row.clone());
            }
        }
        let cleaner = Operator::Deduplicate { table: c.table.clone(), subset, keep: Keep::First };
        Ok((replaced(state, with_rows(t, rows)?), cleaner))
    }
}

/// All-null junk rows at random positions.
struct DropnaInverse;

impl InverseTransform for DropnaInverse {
    fn kind(&self) -> &str {
        DROPNA_INVERSE
    }

    fn corrupt(&self, state: &TableSet, c: &Corruption, rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String> {
        let t = table_of(state, c)?;
        if t.num_cols() == 0 {
            return Err("table has no columns".into());
        }
        let junk = pick_count(t.num_rows().max(1), c.intensity);
        let mut rows = t.rows().to_vec();
        for _ in 0..junk {
            let at = rng.gen_range(0..=rows.len());
            rows.insert(at, vec![Value::Null; t.num_cols()]);
        }
        let cleaner = Operator::DropNA { table: c.table.clone(), subset: Vec::new(), how: NaHow::All };
        Ok((replaced(state, with_rows(t, rows)?), cleaner))
    }
}

const DATE_VARIANTS: [&str; 6] = ["%m/%d/%y", "%Y/%m/%d", "%m/%d/%Y", "%d-%m-%Y", "%B %d, %Y", "%d %b %Y"];

fn is_iso_date_column(t: &Table, i: usize) -> bool {
    t.columns()[i].dtype == DType::Text
        && t.column_values(i).any(|v| !v.is_null())
        && t.column_values(i).all(|v| match v {
            Value::Null => true,
            Value::Text(s) => datetime::parse_with(s, "%Y-%m-%d")
                .is_some_and(|(dt, _)| dt.format("%Y-%m-%d").to_string() == *s),
            _ => false,
        })
}

/// ISO dates re-rendered in assorted common formats.
struct DatetimeInverse;

impl InverseTransform for DatetimeInverse {
    fn kind(&self) -> &str {
        DATETIME_INVERSE
    }

    fn corrupt(&self, state: &TableSet, c: &Corruption, rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String> {
        let t = table_of(state, c)?;
        let i = match &c.column {
            Some(col) => t.column_index(col).filter(|&i| is_iso_date_column(t, i)),
            None => (0..t.num_cols()).find(|&i| is_iso_date_column(t, i)),
        }
        .ok_or("no column of ISO dates")?;
        let mut cells: Vec<usize> = (0..t.num_rows()).filter(|&r| !t.rows()[r][i].is_null()).collect();
        cells.shuffle(rng);
        cells.truncate(pick_count(cells.len(), c.intensity));
        let mut rows = t.rows().to_vec();
        for r in cells {
            let Value::Text(s) = &rows[r][i] else { continue };
            let (dt, _) = datetime::parse_with(s, "%Y-%m-%d").expect("checked ISO column");
            let fmt = DATE_VARIANTS[rng.gen_range(0..DATE_VARIANTS.len())];
            rows[r][i] = Value::Text(dt.format(fmt).to_string());
        }
        let cleaner = Operator::StandardizeDatetime {
            table: c.table.clone(),
            column: t.columns()[i].name.clone(),
            format: "%Y-%m-%d".into(),
        };
        Ok((replaced(state, with_rows(t, rows)?), cleaner))
    }
}

fn title_case(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut start = true;
    for ch in s.chars() {
        if start {
            out.extend(ch.to_uppercase());
        } else {
            out.extend(ch.to_lowercase());
        }
        start = !ch.is_alphanumeric();
    }
    out
}

/// Random re-casing of text cells. The cleaner folds to whichever case the
/// column mostly uses; columns mixing cases fail the restore check.
struct CasingInverse;

impl InverseTransform for CasingInverse {
    fn kind(&self) -> &str {
        CASING_INVERSE
    }

    fn corrupt(&self, state: &TableSet, c: &Corruption, rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String> {
        let t = table_of(state, c)?;
        let has_letters = |i: usize| {
            t.column_values(i).any(|v| v.as_str().is_some_and(|s| s.chars().any(char::is_alphabetic)))
        };
        let i = match &c.column {
            Some(col) => t.column_index(col).filter(|&i| t.columns()[i].dtype == DType::Text),
            None => (0..t.num_cols()).find(|&i| t.columns()[i].dtype == DType::Text && has_letters(i)),
        }
        .ok_or("no text column")?;
        let texts: Vec<&str> = t.column_values(i).filter_map(Value::as_str).collect();
        let lower = texts.iter().filter(|s| s.to_lowercase() == **s).count();
        let upper = texts.iter().filter(|s| s.to_uppercase() == **s).count();
        let fold = if upper > lower { Func::Upper } else { Func::Lower };

        let mut cells: Vec<usize> = (0..t.num_rows()).filter(|&r| t.rows()[r][i].as_str().is_some()).collect();
        cells.shuffle(rng);
        cells.truncate(pick_count(cells.len(), c.intensity));
        let mut rows = t.rows().to_vec();
        for r in cells {
            let Value::Text(s) = &rows[r][i] else { continue };
            let variant = match rng.gen_range(0..3) {
                0 => s.to_uppercase(),
                1 => s.to_lowercase(),
                _ => title_case(s),
            };
            rows[r][i] = Value::Text(variant);
        }
        let name = t.columns()[i].name.clone();
        let cleaner = Operator::ValueTransform {
            table: c.table.clone(),
            column: name.clone(),
            func: Expr::Call(fold, vec![Expr::col(name)]),
        };
        Ok((replaced(state, with_rows(t, rows)?), cleaner))
    }
}

/// A numeric column rendered as text. Columns hold one dtype, so the whole
/// column is converted regardless of intensity.
struct TypeInverse;

impl InverseTransform for TypeInverse {
    fn kind(&self) -> &str {
        TYPE_INVERSE
    }

    fn corrupt(&self, state: &TableSet, c: &Corruption, _rng: &mut ChaCha8Rng) -> Result<(TableSet, Operator), String> {
        let t = table_of(state, c)?;
        let numeric = |i: usize| matches!(t.columns()[i].dtype, DType::Int | DType::Real);
        let i = match &c.column {
            Some(col) => t.column_index(col).filter(|&i| numeric(i)),
            None => (0..t.num_cols()).find(|&i| numeric(i)),
        }
        .ok_or("no numeric column")?;
        let dtype = t.columns()[i].dtype;
        let rows: Vec<Vec<Value>> = t
            .rows()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if !r[i].is_null() {
                    r[i] = Value::Text(r[i].render());
                }
                r
            })
            .collect();
        let mut schema = t.schema().clone();
        schema.columns[i].dtype = DType::Text;
        let corrupted = Table::new(schema, rows).map_err(|e| e.to_string())?;
        let cleaner = Operator::CastType { table: c.table.clone(), column: t.columns()[i].name.clone(), dtype };
        Ok((replaced(state, corrupted), cleaner))
    }
}
