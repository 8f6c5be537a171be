//! Readers and writers for the on-disk formats.
//!
//! * edge lists: one `u v [w]` per line, TAB or space separated, `#`
//!   comments, optional `N <count>` header for trailing isolated nodes;
//! * features: CSV (one row per node) or little-endian `f32` binary with an
//!   8-byte `(N, d)` header of two `u32`s, row-major;
//! * labels: `node_id<TAB>class_id` lines;
//! * splits: a directory holding `train.txt`, `val.txt` and `test.txt`, one
//!   node id per line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

struct RawEdges {
    declared_nodes: Option<usize>,
    edges: Vec<(u64, u64, f64)>,
}

fn parse_id(tok: &str, path: &Path, line: usize) -> Result<u64> {
    if tok.starts_with('-') && tok[1..].parse::<u64>().is_ok() {
        return Err(Error::domain(format!(
            "{}:{line}: negative node id {tok}",
            path.display()
        )));
    }
    tok.parse::<u64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("invalid node id {tok:?}"),
    })
}

fn read_raw_edges(path: &Path) -> Result<RawEdges> {
    let reader = open(path)?;
    let mut declared_nodes = None;
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg,
        };
        if toks[0] == "N" {
            if toks.len() != 2 || declared_nodes.is_some() || !edges.is_empty() {
                return Err(parse_err("malformed or misplaced `N <count>` header".into()));
            }
            let n = toks[1]
                .parse::<usize>()
                .map_err(|_| parse_err(format!("invalid node count {:?}", toks[1])))?;
            declared_nodes = Some(n);
            continue;
        }
        if toks.len() < 2 || toks.len() > 3 {
            return Err(parse_err(format!("expected `u v [w]`, found {} fields", toks.len())));
        }
        let u = parse_id(toks[0], path, lineno)?;
        let v = parse_id(toks[1], path, lineno)?;
        let w = match toks.get(2) {
            Some(tok) => tok
                .parse::<f64>()
                .map_err(|_| parse_err(format!("invalid weight {tok:?}")))?,
            None => 1.0,
        };
        if !w.is_finite() || w < 0.0 {
            return Err(Error::domain(format!(
                "{}:{lineno}: edge weight must be finite and nonnegative, got {w}",
                path.display()
            )));
        }
        edges.push((u, v, w));
    }
    Ok(RawEdges {
        declared_nodes,
        edges,
    })
}

/// Loads an edge list with dense `0..N` ids. `N` is the declared header
/// count, or one past the largest id seen.
pub fn load_edge_list(path: &Path, symmetrize: bool) -> Result<SparseGraph> {
    let raw = read_raw_edges(path)?;
    let max_id = raw.edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0) as usize;
    let n = match raw.declared_nodes {
        Some(n) if max_id > n => {
            return Err(Error::domain(format!(
                "{}: node id {} exceeds declared count {n}",
                path.display(),
                max_id - 1
            )))
        }
        Some(n) => n,
        None => max_id,
    };
    let edges: Vec<_> = raw
        .edges
        .into_iter()
        .map(|(u, v, w)| (u as usize, v as usize, w))
        .collect();
    SparseGraph::from_edges(n, &edges, symmetrize)
}

/// Loads an edge list with arbitrary (sparse) integer ids, relabelling them
/// to `0..N` in ascending order of the original id. Returns the graph and
/// the original id of every new node.
pub fn load_edge_list_remapped(path: &Path, symmetrize: bool) -> Result<(SparseGraph, Vec<u64>)> {
    let raw = read_raw_edges(path)?;
    let mut ids: BTreeMap<u64, usize> = BTreeMap::new();
    for &(u, v, _) in &raw.edges {
        ids.insert(u, 0);
        ids.insert(v, 0);
    }
    let original: Vec<u64> = ids.keys().copied().collect();
    for (new, slot) in ids.values_mut().enumerate() {
        *slot = new;
    }
    let edges: Vec<_> = raw
        .edges
        .iter()
        .map(|&(u, v, w)| (ids[&u], ids[&v], w))
        .collect();
    let graph = SparseGraph::from_edges(original.len(), &edges, symmetrize)?;
    Ok((graph, original))
}

pub fn write_id_map(path: &Path, original: &[u64]) -> Result<()> {
    let mut out = create(path)?;
    let res: std::io::Result<()> = (|| {
        for (new, old) in original.iter().enumerate() {
            writeln!(out, "{new}\t{old}")?;
        }
        out.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Writes `graph` so that [`load_edge_list`] with the same directedness
/// reproduces it exactly.
pub fn write_edge_list(path: &Path, graph: &SparseGraph) -> Result<()> {
    let mut out = create(path)?;
    let res: std::io::Result<()> = (|| {
        writeln!(out, "N {}", graph.num_nodes())?;
        for (u, v, w) in graph.edges() {
            if w == 1.0 {
                writeln!(out, "{u}\t{v}")?;
            } else {
                writeln!(out, "{u}\t{v}\t{w}")?;
            }
        }
        out.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

fn is_binary_features(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("bin") | Some("f32")
    )
}

/// Loads a dense feature matrix; `.bin`/`.f32` files use the binary layout,
/// anything else is read as headerless CSV.
pub fn load_features(path: &Path) -> Result<Array2<f64>> {
    if is_binary_features(path) {
        load_features_binary(path)
    } else {
        load_features_csv(path)
    }
}

fn load_features_csv(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut data = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let lineno = idx + 1;
        let row: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: format!("invalid feature value: {e}"),
        })?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    msg: format!("expected {w} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        data.extend(row);
    }
    let d = width.unwrap_or(0);
    let n = if d == 0 { 0 } else { data.len() / d };
    Ok(Array2::from_shape_vec((n, d), data).expect("row widths checked"))
}

fn load_features_binary(path: &Path) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    if bytes.len() < 8 {
        return Err(bad("binary feature file shorter than its 8-byte header".into()));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != n * d * 4 {
        return Err(bad(format!(
            "header declares {n}x{d} values but body holds {} bytes",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Array2::from_shape_vec((n, d), data).expect("size checked"))
}

pub fn write_features(path: &Path, features: &Array2<f64>) -> Result<()> {
    let mut out = create(path)?;
    let res: std::io::Result<()> = (|| {
        if is_binary_features(path) {
            out.write_all(&(features.nrows() as u32).to_le_bytes())?;
            out.write_all(&(features.ncols() as u32).to_le_bytes())?;
            for &x in features.iter() {
                out.write_all(&(x as f32).to_le_bytes())?;
            }
        } else {
            for row in features.rows() {
                let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        out.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Node labels; unlabeled nodes are `None`.
pub type Labels = Vec<Option<usize>>;

pub fn load_labels(path: &Path, num_nodes: usize) -> Result<Labels> {
    let reader = open(path)?;
    let mut labels = vec![None; num_nodes];
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let parsed = match toks.as_slice() {
            [node, class] => node.parse::<usize>().ok().zip(class.parse::<usize>().ok()),
            _ => None,
        };
        let (node, class) = parsed.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: "expected `node_id<TAB>class_id`".into(),
        })?;
        if node >= num_nodes {
            return Err(Error::domain(format!(
                "{}:{lineno}: labelled node {node} outside 0..{num_nodes}",
                path.display()
            )));
        }
        labels[node] = Some(class);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = create(path)?;
    let res: std::io::Result<()> = (|| {
        for (node, class) in labels.iter().enumerate() {
            writeln!(out, "{node}\t{class}")?;
        }
        out.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

impl Splits {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut owner = vec![None; num_nodes];
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &u in ids {
                if u >= num_nodes {
                    return Err(Error::domain(format!("{name} split node {u} outside 0..{num_nodes}")));
                }
                if let Some(prev) = owner[u].replace(name) {
                    return Err(Error::domain(format!("node {u} appears in both {prev} and {name} splits")));
                }
            }
        }
        Ok(())
    }
}

fn split_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.txt"))
}

fn load_id_list(path: &Path) -> Result<Vec<NodeId>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = open(path)?;
    let mut ids = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        ids.push(content.parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("invalid node id {content:?}"),
        })?);
    }
    Ok(ids)
}

/// Reads `train.txt`, `val.txt` and `test.txt` from `dir`; a missing file
/// is an empty split.
pub fn load_splits(dir: &Path, num_nodes: usize) -> Result<Splits> {
    let splits = Splits {
        train: load_id_list(&split_path(dir, "train"))?,
        val: load_id_list(&split_path(dir, "val"))?,
        test: load_id_list(&split_path(dir, "test"))?,
    };
    splits.validate(num_nodes)?;
    Ok(splits)
}

pub fn write_splits(dir: &Path, splits: &Splits) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, ids) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        let path = split_path(dir, name);
        let mut out = create(&path)?;
        let res: std::io::Result<()> = (|| {
            for u in ids {
                writeln!(out, "{u}")?;
            }
            out.flush()
        })();
        res.map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
