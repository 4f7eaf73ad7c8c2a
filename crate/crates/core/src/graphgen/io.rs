//! Plain-text graph and node-data files.
//!
//! * Graph: one undirected edge per line as `src,dst,weight` (0-based, each
//!   edge listed once). Lines starting with `#` are comments; a comment of
//!   the form `# nodes=N` fixes the node count so isolated trailing nodes
//!   survive a round trip. Without it, `N = max index + 1`.
//! * Matrices (features, checkpoints): CSV with a header row of column
//!   names, one row per matrix row.
//! * Labels: CSV with header `node,label`, one row per node.
//! * Masks: CSV with header `node,split`, split one of `train`, `val`,
//!   `test`; unlisted nodes belong to no split.
//!
//! Every loader validates its input and reports the offending line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::Dense;

use super::graph::Graph;
use super::split::SplitMask;

fn parse_err(source_name: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_field<V: FromStr>(source_name: &str, line: u64, field: &str, what: &str) -> Result<V> {
    field.trim().parse().map_err(|_| {
        parse_err(
            source_name,
            line,
            format!("cannot parse {what} from {field:?}"),
        )
    })
}

pub fn write_graph<T: Scalar>(g: &Graph<T>, mut out: impl Write) -> Result<()> {
    writeln!(out, "# nodes={}", g.n_nodes())?;
    for (i, j, w) in g.edges() {
        writeln!(out, "{i},{j},{w}")?;
    }
    Ok(())
}

pub fn read_graph<T: Scalar + FromStr>(input: impl Read, source_name: &str) -> Result<Graph<T>> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("nodes=") {
                declared = Some(parse_field::<usize>(source_name, line_no, n, "node count")?);
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                source_name,
                line_no,
                format!(
                    "expected src,dst,weight but found {} field(s)",
                    fields.len()
                ),
            ));
        }
        let i: usize = parse_field(source_name, line_no, fields[0], "source node")?;
        let j: usize = parse_field(source_name, line_no, fields[1], "target node")?;
        let w: T = parse_field(source_name, line_no, fields[2], "weight")?;
        edges.push((line_no, i, j, w));
    }
    let n = declared.unwrap_or_else(|| {
        edges
            .iter()
            .map(|&(_, i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(0)
    });
    // validate edge by edge so errors carry a line number
    let mut seen = std::collections::HashSet::new();
    for &(line_no, i, j, w) in &edges {
        if i >= n || j >= n {
            return Err(parse_err(
                source_name,
                line_no,
                format!("node index outside 0..{n}"),
            ));
        }
        if i == j {
            return Err(parse_err(source_name, line_no, "self-loop"));
        }
        if !(w > T::zero()) || !w.is_finite() {
            return Err(parse_err(
                source_name,
                line_no,
                format!("weight {w} is not positive"),
            ));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(parse_err(source_name, line_no, "edge listed twice"));
        }
    }
    Graph::from_edges(n, edges.into_iter().map(|(_, i, j, w)| (i, j, w)))
}

pub fn save_graph<T: Scalar>(g: &Graph<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_graph<T: Scalar + FromStr>(path: &Path) -> Result<Graph<T>> {
    read_graph(File::open(path)?, &path.display().to_string())
}

/// Writes a matrix as CSV with header `{prefix}0,{prefix}1,…`.
pub fn write_matrix<T: Scalar>(m: &Dense<T>, prefix: &str, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..m.n_cols()).map(|j| format!("{prefix}{j}")))?;
    for i in 0..m.n_rows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<T: Scalar + FromStr>(input: impl Read, source_name: &str) -> Result<Dense<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let n_cols = reader.headers()?.len();
    let mut values = Vec::new();
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source_name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n_cols {
            return Err(parse_err(
                source_name,
                line,
                format!("expected {n_cols} columns, found {}", record.len()),
            ));
        }
        for field in record.iter() {
            let v: T = parse_field(source_name, line, field, "number")?;
            if !v.is_finite() {
                return Err(parse_err(source_name, line, "non-finite value"));
            }
            values.push(v);
        }
        n_rows += 1;
    }
    Dense::from_vec(n_rows, n_cols, values)
}

pub fn load_matrix<T: Scalar + FromStr>(path: &Path) -> Result<Dense<T>> {
    read_matrix(File::open(path)?, &path.display().to_string())
}

pub fn save_matrix<T: Scalar>(m: &Dense<T>, prefix: &str, path: &Path) -> Result<()> {
    write_matrix(m, prefix, File::create(path)?)
}

pub fn write_labels(labels: &[usize], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "label"])?;
    for (v, l) in labels.iter().enumerate() {
        w.write_record([v.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `node,label` rows; every node in `0..N` must appear exactly once.
pub fn read_labels(input: impl Read, source_name: &str) -> Result<Vec<usize>> {
    let rows = read_pairs(input, source_name, ["node", "label"])?;
    let n = rows.len();
    let mut labels = vec![None; n];
    for (line, node, label) in rows {
        let node: usize = parse_field(source_name, line, &node, "node index")?;
        let label: usize = parse_field(source_name, line, &label, "label")?;
        if node >= n {
            return Err(parse_err(
                source_name,
                line,
                format!("node {node} outside 0..{n}"),
            ));
        }
        if labels[node].replace(label).is_some() {
            return Err(parse_err(
                source_name,
                line,
                format!("node {node} labelled twice"),
            ));
        }
    }
    Ok(labels
        .into_iter()
        .map(|l| l.expect("every slot filled"))
        .collect())
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(File::open(path)?, &path.display().to_string())
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    write_labels(labels, File::create(path)?)
}

pub fn write_masks(mask: &SplitMask, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "split"])?;
    for v in 0..mask.n_nodes() {
        let name = if mask.train[v] {
            "train"
        } else if mask.val[v] {
            "val"
        } else if mask.test[v] {
            "test"
        } else {
            continue;
        };
        w.write_record([v.to_string(), name.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_masks(input: impl Read, n_nodes: usize, source_name: &str) -> Result<SplitMask> {
    let mut train = vec![false; n_nodes];
    let mut val = vec![false; n_nodes];
    let mut test = vec![false; n_nodes];
    for (line, node, split) in read_pairs(input, source_name, ["node", "split"])? {
        let node: usize = parse_field(source_name, line, &node, "node index")?;
        if node >= n_nodes {
            return Err(parse_err(
                source_name,
                line,
                format!("node {node} outside 0..{n_nodes}"),
            ));
        }
        if train[node] || val[node] || test[node] {
            return Err(parse_err(
                source_name,
                line,
                format!("node {node} assigned twice"),
            ));
        }
        match split.as_str() {
            "train" => train[node] = true,
            "val" => val[node] = true,
            "test" => test[node] = true,
            other => {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("unknown split {other:?}"),
                ))
            }
        }
    }
    SplitMask::new(train, val, test)
}

pub fn load_masks(path: &Path, n_nodes: usize) -> Result<SplitMask> {
    read_masks(File::open(path)?, n_nodes, &path.display().to_string())
}

pub fn save_masks(mask: &SplitMask, path: &Path) -> Result<()> {
    write_masks(mask, File::create(path)?)
}

fn read_pairs(
    input: impl Read,
    source_name: &str,
    header: [&str; 2],
) -> Result<Vec<(u64, String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(parse_err(
            source_name,
            1,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(source_name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(source_name, line, "expected two columns"));
        }
        rows.push((line, record[0].to_string(), record[1].to_string()));
    }
    Ok(rows)
}
