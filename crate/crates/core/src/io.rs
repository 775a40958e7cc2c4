//! Plain-text dataset and artifact serialization: whitespace edge lists,
//! headerless CSV feature/label tables, JSON splits and streams, JSONL
//! provenance, and headered CSV metric tables. All float output goes through
//! one pinned formatter so artifacts are byte-stable across platforms.

use crate::condense::{CentroidProvenance, CondenseReport, CondensedGraph};
use crate::error::{Error, Result};
use crate::evolve::{StepMode, StepRecord};
use crate::eval::{BoundReport, SkippedInstance};
use crate::features::FeatureMatrix;
use crate::graph::{BatchStream, LabelSet, SparseGraph};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write as IoWrite};
use std::path::Path;

/// Pinned decimal formatting: 9 significant digits, scientific notation.
/// Rust's own float formatter is locale-free, so the output is identical
/// across platforms.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e)
}

fn parse_err(path: &Path, line: usize, what: impl std::fmt::Display) -> Error {
    Error::parse(path, line, what.to_string())
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(BufReader::new(file).lines())
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| io_err(path, e))?,
    ))
}

// ---------------------------------------------------------------------------
// Dataset readers
// ---------------------------------------------------------------------------

/// Reads a whitespace-separated, 0-indexed edge list, one `u v` pair per
/// line. Blank lines are skipped.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v)) = (parts.next(), parts.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(path, i + 1, "expected two node ids"));
        };
        if parts.next().is_some() {
            return Err(parse_err(path, i + 1, "expected exactly two node ids"));
        }
        let u: usize = u
            .parse()
            .map_err(|e| parse_err(path, i + 1, format!("bad node id {u:?}: {e}")))?;
        let v: usize = v
            .parse()
            .map_err(|e| parse_err(path, i + 1, format!("bad node id {v:?}: {e}")))?;
        edges.push((u, v));
    }
    Ok(edges)
}

/// Reads a headerless CSV of decimal floats; row i is node i's feature row.
pub fn read_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, i + 1, format!("bad float {cell:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    FeatureMatrix::from_rows(&rows)
}

/// Reads one class label (non-negative integer) per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(
            t.parse::<usize>()
                .map_err(|e| parse_err(path, i + 1, format!("bad label {t:?}: {e}")))?,
        );
    }
    Ok(labels)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn read_splits(path: &Path) -> Result<SplitSpec> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e))
}

pub fn read_stream(path: &Path) -> Result<BatchStream> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e))
}

/// A dataset assembled from its on-disk parts, validated for mutual
/// consistency.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseGraph,
    pub features: FeatureMatrix,
    pub labels: LabelSet,
    pub stream: Option<BatchStream>,
}

pub fn load_dataset(
    graph_path: &Path,
    features_path: &Path,
    labels_path: &Path,
    splits_path: &Path,
    stream_path: Option<&Path>,
) -> Result<Dataset> {
    let features = read_features_csv(features_path)?;
    let n = features.rows();
    let graph = SparseGraph::from_edges(n, &read_edges(graph_path)?)?;
    let classes = read_labels(labels_path)?;
    if classes.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} feature rows",
            classes.len()
        )));
    }
    let splits = read_splits(splits_path)?;
    let num_classes = classes.iter().copied().max().map_or(0, |m| m + 1);
    let labels = LabelSet {
        labels: classes,
        num_classes,
        train_idx: splits.train,
        val_idx: splits.val,
        test_idx: splits.test,
    };
    labels.validate(n)?;
    let stream = match stream_path {
        Some(p) => {
            let s = read_stream(p)?;
            s.validate(n)?;
            Some(s)
        }
        None => None,
    };
    Ok(Dataset {
        graph,
        features,
        labels,
        stream,
    })
}

// ---------------------------------------------------------------------------
// Dataset writers
// ---------------------------------------------------------------------------

/// Writes the undirected edge list, one `u v` per line with u ≤ v, ascending.
pub fn write_edges(path: &Path, graph: &SparseGraph) -> Result<()> {
    let mut w = writer(path)?;
    for (u, v) in graph.to_edge_list() {
        writeln!(w, "{u} {v}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes a headerless CSV; row i is node i.
pub fn write_features_csv(path: &Path, f: &FeatureMatrix) -> Result<()> {
    let mut w = writer(path)?;
    for i in 0..f.rows() {
        let cells: Vec<String> = f.row(i).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = writer(path)?;
    for l in labels {
        writeln!(w, "{l}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_splits(path: &Path, labels: &LabelSet) -> Result<()> {
    let spec = SplitSpec {
        train: labels.train_idx.clone(),
        val: labels.val_idx.clone(),
        test: labels.test_idx.clone(),
    };
    let text = serde_json::to_string_pretty(&spec)
        .map_err(|e| Error::Internal(format!("serializing splits: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn write_stream(path: &Path, stream: &BatchStream) -> Result<()> {
    let text = serde_json::to_string_pretty(stream)
        .map_err(|e| Error::Internal(format!("serializing stream: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

/// Writes one provenance object per line:
/// `{"centroid":int,"class":int,"members":[[node,weight],...]}`.
pub fn write_provenance_jsonl(path: &Path, provenance: &[CentroidProvenance]) -> Result<()> {
    let mut w = writer(path)?;
    for p in provenance {
        let line = serde_json::to_string(p)
            .map_err(|e| Error::Internal(format!("serializing provenance: {e}")))?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_provenance_jsonl(path: &Path) -> Result<Vec<CentroidProvenance>> {
    let mut out = Vec::new();
    for (i, line) in open_lines(path)?.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| parse_err(path, i + 1, format!("bad provenance object: {e}")))?,
        );
    }
    Ok(out)
}

/// Writes the full condensed artifact set (features, labels, provenance)
/// into `dir`, creating it if needed.
pub fn write_condensed(dir: &Path, cg: &CondensedGraph) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_features_csv(&dir.join("condensed_features.csv"), &cg.features)?;
    write_labels(&dir.join("condensed_labels.txt"), &cg.labels)?;
    write_provenance_jsonl(&dir.join("provenance.jsonl"), &cg.provenance)
}

/// Reads a condensed artifact set back from `dir`.
pub fn read_condensed(dir: &Path) -> Result<CondensedGraph> {
    let features = read_features_csv(&dir.join("condensed_features.csv"))?;
    let labels = read_labels(&dir.join("condensed_labels.txt"))?;
    let provenance = read_provenance_jsonl(&dir.join("provenance.jsonl"))?;
    if labels.len() != features.rows() || provenance.len() != features.rows() {
        return Err(Error::Dimension(format!(
            "condensed artifact set in {} disagrees on size: {} feature rows, {} labels, {} provenance records",
            dir.display(),
            features.rows(),
            labels.len(),
            provenance.len()
        )));
    }
    Ok(CondensedGraph {
        features,
        labels,
        provenance,
    })
}

pub const REPORT_HEADER: &str = "class,n_k,m_k,warm,warm_was_selected,iterations,j,sse,penalty,seconds_propagate,seconds_cluster,repr_dist_raw,repr_dist_mean";

/// Writes one row per class; propagation wall-clock is a per-stage value and
/// repeats identically on each class row.
pub fn write_report_csv(path: &Path, report: &CondenseReport) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{REPORT_HEADER}").map_err(|e| io_err(path, e))?;
    for c in &report.per_class {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.class,
            c.n_k,
            c.m_k,
            c.warm,
            c.warm_was_selected,
            c.iterations,
            fmt_f64(c.j),
            fmt_f64(c.sse),
            fmt_f64(c.penalty),
            fmt_f64(report.seconds_propagate),
            fmt_f64(c.seconds_cluster),
            fmt_f64(c.repr_dist_raw),
            fmt_f64(c.repr_dist_mean),
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub const LEDGER_HEADER: &str =
    "step,class,mode,iterations,J,sse,penalty,seconds_propagate,seconds_cluster,condensed_size";

pub fn write_ledger_csv(path: &Path, ledger: &[StepRecord]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{LEDGER_HEADER}").map_err(|e| io_err(path, e))?;
    for r in ledger {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.class,
            r.mode.as_str(),
            r.iterations,
            fmt_f64(r.j),
            fmt_f64(r.sse),
            fmt_f64(r.penalty),
            fmt_f64(r.seconds_propagate),
            fmt_f64(r.seconds_cluster),
            r.condensed_size,
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_ledger_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut lines = open_lines(path)?.enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty ledger"));
    };
    let header = header.map_err(|e| io_err(path, e))?;
    if header.trim() != LEDGER_HEADER {
        return Err(parse_err(path, 1, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 10 {
            return Err(parse_err(path, i + 1, "expected 10 columns"));
        }
        let field = |j: usize, name: &str| -> Result<f64> {
            cells[j]
                .parse::<f64>()
                .map_err(|e| parse_err(path, i + 1, format!("bad {name} {:?}: {e}", cells[j])))
        };
        let int = |j: usize, name: &str| -> Result<usize> {
            cells[j]
                .parse::<usize>()
                .map_err(|e| parse_err(path, i + 1, format!("bad {name} {:?}: {e}", cells[j])))
        };
        let mode = match cells[2] {
            "warm" => StepMode::Warm,
            "cold" => StepMode::Cold,
            other => return Err(parse_err(path, i + 1, format!("bad mode {other:?}"))),
        };
        out.push(StepRecord {
            step: int(0, "step")?,
            class: int(1, "class")?,
            mode,
            iterations: int(3, "iterations")?,
            j: field(4, "J")?,
            sse: field(5, "sse")?,
            penalty: field(6, "penalty")?,
            seconds_propagate: field(7, "seconds_propagate")?,
            seconds_cluster: field(8, "seconds_cluster")?,
            condensed_size: int(9, "condensed_size")?,
        });
    }
    Ok(out)
}

pub const BOUNDS_HEADER: &str = "instance,lhs,rhs,pass";

pub fn write_bounds_csv(path: &Path, report: &BoundReport) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{BOUNDS_HEADER}").map_err(|e| io_err(path, e))?;
    for c in &report.checks {
        writeln!(
            w,
            "{},{},{},{}",
            c.instance,
            fmt_f64(c.lhs),
            fmt_f64(c.rhs),
            c.pass
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One row of a bounds table as written by `write_bounds_csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub instance: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn read_bounds_csv(path: &Path) -> Result<Vec<BoundsRow>> {
    let mut lines = open_lines(path)?.enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty bounds table"));
    };
    let header = header.map_err(|e| io_err(path, e))?;
    if header.trim() != BOUNDS_HEADER {
        return Err(parse_err(path, 1, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(parse_err(path, i + 1, "expected 4 columns"));
        }
        out.push(BoundsRow {
            instance: cells[0]
                .parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad instance: {e}")))?,
            lhs: cells[1]
                .parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad lhs: {e}")))?,
            rhs: cells[2]
                .parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad rhs: {e}")))?,
            pass: cells[3]
                .parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad pass flag: {e}")))?,
        });
    }
    Ok(out)
}

pub const BOUNDS_SKIPPED_HEADER: &str = "instance,reason";

pub fn write_bounds_skipped_csv(path: &Path, skipped: &[SkippedInstance]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{BOUNDS_SKIPPED_HEADER}").map_err(|e| io_err(path, e))?;
    for s in skipped {
        // Reasons are single-phrase diagnostics; keep the CSV comma-safe.
        writeln!(w, "{},{}", s.instance, s.reason.replace(',', ";"))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub const EVAL_HEADER: &str = "step,accuracy";

/// Per-step downstream accuracy table emitted by the evolve pipeline.
pub fn write_eval_csv(path: &Path, rows: &[(usize, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{EVAL_HEADER}").map_err(|e| io_err(path, e))?;
    for (step, acc) in rows {
        writeln!(w, "{step},{}", fmt_f64(*acc)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut lines = open_lines(path)?.enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty eval table"));
    };
    let header = header.map_err(|e| io_err(path, e))?;
    if header.trim() != EVAL_HEADER {
        return Err(parse_err(path, 1, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (step, acc) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, i + 1, "expected 2 columns"))?;
        out.push((
            step.parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad step {step:?}: {e}")))?,
            acc.parse()
                .map_err(|e| parse_err(path, i + 1, format!("bad accuracy {acc:?}: {e}")))?,
        ));
    }
    Ok(out)
}
