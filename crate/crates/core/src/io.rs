//! On-disk formats and raw-log preparation.
//!
//! - Curves: CSV with header `algorithm,step,task,performance`, one row per
//!   observed cell; `step` is the 0-based curriculum index. Absent rows are
//!   unobserved cells.
//! - Curriculum: JSON `{"tasks": [...], "curriculum": [...]}` using task names.
//! - Params: JSON with `tasks`, `transfer_matrix`, `difficulty` and
//!   `algorithms` (each `name`, `gamma`, `h`, `lambda`). Unknown fields are
//!   rejected.
//! - Raw logs: CSV `algorithm,global_step,task,metric`; boundaries CSV
//!   `global_step,task` listing the start of each curriculum phase.
//!
//! Floats are written in shortest round-trip form, so reading a written file
//! reproduces every value bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AlgorithmProperties, Curriculum, PerformanceMatrix, ScenarioParams, TaskProperties, TaskSet,
};

pub const CURVES_HEADER: [&str; 4] = ["algorithm", "step", "task", "performance"];
pub const RAW_HEADER: [&str; 4] = ["algorithm", "global_step", "task", "metric"];
pub const BOUNDARIES_HEADER: [&str; 2] = ["global_step", "task"];

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

// --- curriculum -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurriculumFile {
    tasks: Vec<String>,
    curriculum: Vec<String>,
}

pub fn curriculum_from_json(text: &str) -> Result<(TaskSet, Curriculum)> {
    let file: CurriculumFile =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("curriculum: {e}")))?;
    let tasks = TaskSet::new(file.tasks)?;
    let entries = file
        .curriculum
        .iter()
        .map(|name| {
            tasks.index_of(name).ok_or_else(|| {
                Error::Schema(format!("curriculum names unknown task `{name}`"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curriculum = Curriculum::new(entries, tasks.len())?;
    Ok((tasks, curriculum))
}

pub fn curriculum_to_json(tasks: &TaskSet, curriculum: &Curriculum) -> String {
    let file = CurriculumFile {
        tasks: tasks.names().to_vec(),
        curriculum: curriculum
            .entries()
            .iter()
            .map(|&i| tasks.name(i).to_string())
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serialises") + "\n"
}

pub fn read_curriculum(path: impl AsRef<Path>) -> Result<(TaskSet, Curriculum)> {
    let path = path.as_ref();
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    curriculum_from_json(&text)
}

pub fn write_curriculum(
    path: impl AsRef<Path>,
    tasks: &TaskSet,
    curriculum: &Curriculum,
) -> Result<()> {
    let path = path.as_ref();
    create(path)?
        .write_all(curriculum_to_json(tasks, curriculum).as_bytes())
        .map_err(|e| Error::io(path, e))
}

// --- params ---------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmEntry {
    name: String,
    gamma: f64,
    h: f64,
    lambda: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    tasks: Vec<String>,
    transfer_matrix: Vec<Vec<f64>>,
    difficulty: Vec<f64>,
    algorithms: Vec<AlgorithmEntry>,
}

/// Parses and validates a params document. Box constraints are enforced.
pub fn params_from_json(text: &str) -> Result<(TaskSet, ScenarioParams)> {
    let file: ParamsFile =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("params: {e}")))?;
    let tasks = TaskSet::new(file.tasks)?;
    let params = ScenarioParams {
        tasks: TaskProperties {
            transfer: file.transfer_matrix,
            difficulty: file.difficulty,
        },
        algorithms: file
            .algorithms
            .into_iter()
            .map(|a| AlgorithmProperties::new(a.name, a.gamma, a.h, a.lambda))
            .collect(),
    };
    if params.n_tasks() != tasks.len() {
        return Err(Error::Schema(format!(
            "params list {} tasks but difficulty has {} entries",
            tasks.len(),
            params.n_tasks()
        )));
    }
    params.validate()?;
    Ok((tasks, params))
}

pub fn params_to_json(tasks: &TaskSet, params: &ScenarioParams) -> String {
    let file = ParamsFile {
        tasks: tasks.names().to_vec(),
        transfer_matrix: params.tasks.transfer.clone(),
        difficulty: params.tasks.difficulty.clone(),
        algorithms: params
            .algorithms
            .iter()
            .map(|a| AlgorithmEntry {
                name: a.name.clone(),
                gamma: a.transfer_efficiency,
                h: a.experience_retention,
                lambda: a.expertise_translation,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("plain data serialises") + "\n"
}

pub fn parse_params(path: impl AsRef<Path>) -> Result<(TaskSet, ScenarioParams)> {
    let path = path.as_ref();
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    params_from_json(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_params(path: impl AsRef<Path>, tasks: &TaskSet, params: &ScenarioParams) -> Result<()> {
    let path = path.as_ref();
    create(path)?
        .write_all(params_to_json(tasks, params).as_bytes())
        .map_err(|e| Error::io(path, e))
}

// --- curves ---------------------------------------------------------------

/// Writes observed cells in algorithm, step, task order.
pub fn write_curves_to<W: Write>(
    out: W,
    tasks: &TaskSet,
    matrices: &[PerformanceMatrix],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::invalid(format!("writing curves: {e}"));
    w.write_record(CURVES_HEADER).map_err(wrap)?;
    for m in matrices {
        m.check_shape(tasks.len(), m.n_steps())?;
        for l in 0..m.n_steps() {
            for j in 0..m.n_tasks() {
                if let Some(v) = m.get(j, l) {
                    w.write_record([
                        m.algorithm.as_str(),
                        &l.to_string(),
                        tasks.name(j),
                        &format_float(v),
                    ])
                    .map_err(wrap)?;
                }
            }
        }
    }
    w.flush()
        .map_err(|e| Error::invalid(format!("writing curves: {e}")))
}

pub fn curves_to_string(tasks: &TaskSet, matrices: &[PerformanceMatrix]) -> Result<String> {
    let mut buf = Vec::new();
    write_curves_to(&mut buf, tasks, matrices)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_curves(
    path: impl AsRef<Path>,
    tasks: &TaskSet,
    matrices: &[PerformanceMatrix],
) -> Result<()> {
    let path = path.as_ref();
    write_curves_to(create(path)?, tasks, matrices)
}

fn check_header(path: &str, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if got.iter().map(str::trim).eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(parse_err(
            path,
            1,
            format!("expected header `{}`", want.join(",")),
        ))
    }
}

/// Reads curves for a known task set and curriculum length. Algorithms are
/// returned in order of first appearance.
pub fn read_curves_from<R: Read>(
    input: R,
    source: &str,
    tasks: &TaskSet,
    n_steps: usize,
) -> Result<Vec<PerformanceMatrix>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    check_header(source, &header, &CURVES_HEADER)?;

    let mut order: Vec<PerformanceMatrix> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(parse_err(
                source,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let algorithm = rec[0].trim();
        if algorithm.is_empty() {
            return Err(parse_err(source, line, "empty algorithm name"));
        }
        let step: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(source, line, format!("invalid step `{}`", &rec[1])))?;
        if step >= n_steps {
            return Err(parse_err(
                source,
                line,
                format!("step {step} beyond curriculum length {n_steps}"),
            ));
        }
        let task_name = rec[2].trim();
        let task = tasks.index_of(task_name).ok_or_else(|| {
            parse_err(
                source,
                line,
                format!("task `{task_name}` is not in the curriculum task set"),
            )
        })?;
        let value: f64 = rec[3].trim().parse().map_err(|_| {
            parse_err(source, line, format!("invalid performance `{}`", &rec[3]))
        })?;
        if !value.is_finite() {
            return Err(parse_err(source, line, "performance must be finite"));
        }
        let slot = *index.entry(algorithm.to_string()).or_insert_with(|| {
            order.push(PerformanceMatrix::empty(algorithm, tasks.len(), n_steps));
            order.len() - 1
        });
        let m = &mut order[slot];
        if m.mask[task][step] {
            return Err(parse_err(
                source,
                line,
                format!("duplicate cell ({algorithm}, {step}, {task_name})"),
            ));
        }
        m.set(task, step, value);
    }
    if order.is_empty() {
        return Err(parse_err(source, 1, "no data rows"));
    }
    Ok(order)
}

pub fn read_curves(
    path: impl AsRef<Path>,
    tasks: &TaskSet,
    n_steps: usize,
) -> Result<Vec<PerformanceMatrix>> {
    let path = path.as_ref();
    read_curves_from(open(path)?, &path.display().to_string(), tasks, n_steps)
}

/// Everything a fit needs: task names, curriculum and observed curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub tasks: TaskSet,
    pub curriculum: Curriculum,
    pub observed: Vec<PerformanceMatrix>,
}

/// Loads a curves CSV against the task set and curriculum in a curriculum
/// file.
pub fn load_dataset(curves: impl AsRef<Path>, curriculum: impl AsRef<Path>) -> Result<Dataset> {
    let (tasks, curriculum) = read_curriculum(curriculum)?;
    let observed = read_curves(curves, &tasks, curriculum.len())?;
    Ok(Dataset {
        tasks,
        curriculum,
        observed,
    })
}

// --- raw logs ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub global_step: u64,
    pub task: String,
    pub metric: f64,
}

/// Dense evaluation log for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RawLog {
    pub algorithm: String,
    /// Sorted by `global_step`.
    pub records: Vec<RawRecord>,
    /// `(global_step, trained_task)` at the start of each phase, strictly
    /// increasing.
    pub boundaries: Vec<(u64, String)>,
}

impl RawLog {
    pub fn new(
        algorithm: impl Into<String>,
        mut records: Vec<RawRecord>,
        boundaries: Vec<(u64, String)>,
    ) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::invalid("at least one phase boundary is required"));
        }
        if boundaries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("phase boundaries must be strictly increasing"));
        }
        records.sort_by_key(|r| r.global_step);
        Ok(Self {
            algorithm: algorithm.into(),
            records,
            boundaries,
        })
    }
}

pub fn read_boundaries_from<R: Read>(input: R, source: &str) -> Result<Vec<(u64, String)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    check_header(source, &header, &BOUNDARIES_HEADER)?;
    let mut out: Vec<(u64, String)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(source, 0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(source, line, "expected 2 fields"));
        }
        let step: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(source, line, format!("invalid step `{}`", &rec[0])))?;
        if out.last().is_some_and(|(prev, _)| *prev >= step) {
            return Err(parse_err(source, line, "boundaries must be strictly increasing"));
        }
        let task = rec[1].trim();
        if task.is_empty() {
            return Err(parse_err(source, line, "empty task name"));
        }
        out.push((step, task.to_string()));
    }
    if out.is_empty() {
        return Err(parse_err(source, 1, "no boundaries"));
    }
    Ok(out)
}

pub fn read_boundaries(path: impl AsRef<Path>) -> Result<Vec<(u64, String)>> {
    let path = path.as_ref();
    read_boundaries_from(open(path)?, &path.display().to_string())
}

/// Reads a raw log CSV, grouping records per algorithm (first-appearance
/// order) and attaching the shared boundaries.
pub fn read_raw_from<R: Read>(
    input: R,
    source: &str,
    boundaries: &[(u64, String)],
) -> Result<Vec<RawLog>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(source, 1, e.to_string()))?
        .clone();
    check_header(source, &header, &RAW_HEADER)?;
    let mut groups: Vec<(String, Vec<RawRecord>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(source, 0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(parse_err(source, line, "expected 4 fields"));
        }
        let global_step: u64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(source, line, format!("invalid step `{}`", &rec[1])))?;
        let metric: f64 = rec[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(source, line, format!("invalid metric `{}`", &rec[3])))?;
        if !metric.is_finite() {
            return Err(parse_err(source, line, "metric must be finite"));
        }
        let algorithm = rec[0].trim().to_string();
        let record = RawRecord {
            global_step,
            task: rec[2].trim().to_string(),
            metric,
        };
        match groups.iter_mut().find(|(a, _)| *a == algorithm) {
            Some((_, v)) => v.push(record),
            None => groups.push((algorithm, vec![record])),
        }
    }
    groups
        .into_iter()
        .map(|(a, r)| RawLog::new(a, r, boundaries.to_vec()))
        .collect()
}

pub fn read_raw(path: impl AsRef<Path>, boundaries: &[(u64, String)]) -> Result<Vec<RawLog>> {
    let path = path.as_ref();
    read_raw_from(open(path)?, &path.display().to_string(), boundaries)
}

/// Task set and curriculum implied by phase boundaries. Tasks are ordered by
/// first appearance in the boundaries, then in `extra` (e.g. evaluated but
/// never trained tasks).
pub fn curriculum_from_boundaries<'a>(
    boundaries: &'a [(u64, String)],
    extra: impl IntoIterator<Item = &'a str>,
) -> Result<(TaskSet, Curriculum)> {
    let mut names: Vec<String> = Vec::new();
    for name in boundaries.iter().map(|(_, t)| t.as_str()).chain(extra) {
        if !names.iter().any(|n| n == name) {
            names.push(name.to_string());
        }
    }
    let tasks = TaskSet::new(names)?;
    let entries = boundaries
        .iter()
        .map(|(_, t)| tasks.index_of(t).expect("inserted above"))
        .collect();
    let curriculum = Curriculum::new(entries, tasks.len())?;
    Ok((tasks, curriculum))
}

/// Samples a dense log at phase ends.
///
/// Phase `l` spans `[boundary_l, boundary_{l+1}]`; the last phase runs to the
/// end of the log. Cell `(j, l)` takes the latest record of task `j` inside
/// that window, so a record exactly on a boundary step is the value at the end
/// of the phase it closes. Windows with no record stay unobserved.
pub fn downsample_to_boundaries(
    raw: &RawLog,
    tasks: &TaskSet,
    curriculum: &Curriculum,
) -> Result<PerformanceMatrix> {
    let m = curriculum.len();
    if raw.boundaries.len() != m {
        return Err(Error::shape(format!(
            "{} boundaries for a curriculum of length {m}",
            raw.boundaries.len()
        )));
    }
    if raw.records.is_empty() {
        return Err(Error::invalid(format!(
            "raw log for `{}` has no records",
            raw.algorithm
        )));
    }
    let mut task_of = Vec::with_capacity(raw.records.len());
    for r in &raw.records {
        task_of.push(tasks.index_of(&r.task).ok_or_else(|| {
            Error::invalid(format!("raw log task `{}` is not in the task set", r.task))
        })?);
    }
    let mut out = PerformanceMatrix::empty(raw.algorithm.clone(), tasks.len(), m);
    for l in 0..m {
        let start = raw.boundaries[l].0;
        let end = raw.boundaries.get(l + 1).map_or(u64::MAX, |b| b.0);
        // Records are sorted, so the last hit per task is the latest one.
        for (r, &j) in raw.records.iter().zip(&task_of) {
            if r.global_step >= start && r.global_step <= end {
                out.set(j, l, r.metric);
            }
        }
    }
    Ok(out)
}

/// Affinely maps observed entries to `[0, 1]`, per task row or over the whole
/// matrix. Unobserved entries, fully unobserved rows and the mask are left
/// alone.
pub fn normalize_minmax(
    matrix: &PerformanceMatrix,
    tasks: &TaskSet,
    per_task: bool,
) -> Result<PerformanceMatrix> {
    let mut out = matrix.clone();
    let groups: Vec<(String, Vec<usize>)> = if per_task {
        (0..matrix.n_tasks())
            .map(|j| (tasks.name(j).to_string(), vec![j]))
            .collect()
    } else {
        vec![("all tasks".to_string(), (0..matrix.n_tasks()).collect())]
    };
    for (label, rows) in groups {
        let observed = || {
            rows.iter().flat_map(|&j| {
                (0..matrix.n_steps()).filter_map(move |l| matrix.get(j, l))
            })
        };
        let lo = observed().fold(f64::INFINITY, f64::min);
        let hi = observed().fold(f64::NEG_INFINITY, f64::max);
        let group = format!("{} / {label}", matrix.algorithm);
        if lo.is_infinite() {
            // A never-evaluated task row has nothing to rescale.
            if per_task {
                continue;
            }
            return Err(Error::invalid(format!("{group}: no observed values")));
        }
        if lo == hi {
            return Err(Error::ConstantGroup { group, value: lo });
        }
        let span = hi - lo;
        for &j in &rows {
            for l in 0..matrix.n_steps() {
                if matrix.mask[j][l] {
                    out.values[j][l] = (matrix.values[j][l] - lo) / span;
                }
            }
        }
    }
    Ok(out)
}

/// Writes any serialisable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).expect("plain data serialises") + "\n";
    create(path)?
        .write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Per-algorithm metrics document written next to fit outputs.
pub fn metrics_json(per_algorithm: &[(String, f64)], total: f64) -> serde_json::Value {
    let per: BTreeMap<&str, f64> = per_algorithm.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    serde_json::json!({ "mse_total": total, "mse_per_algorithm": per })
}
