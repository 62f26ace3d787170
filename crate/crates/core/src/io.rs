//! File formats: JSON graphs (1-based), cutset indicators, dense TSV
//! matrices, and a JSON writer with round-trip precision for doubles.

use std::io;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::resistance::ResistanceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopRecord {
    pub i: usize,
    pub w: f64,
}

/// `{"n", "edges", "loops", "p"?}` with 1-based node labels and `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub loops: Vec<LoopRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("graph JSON: {e}")))
    }

    pub fn from_graph(g: &WeightedGraph, p: Option<Vec<f64>>) -> Self {
        GraphFile {
            n: g.n(),
            edges: g
                .edges()
                .into_iter()
                .map(|(i, j, w)| EdgeRecord { i: i + 1, j: j + 1, w })
                .collect(),
            loops: g.loops().into_iter().map(|(i, w)| LoopRecord { i: i + 1, w }).collect(),
            p,
        }
    }

    pub fn to_graph(&self) -> Result<WeightedGraph> {
        let label = |i: usize| {
            if i == 0 || i > self.n {
                Err(Error::Validation(format!("node {i} outside 1..={}", self.n)))
            } else {
                Ok(i - 1)
            }
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.i >= e.j {
                return Err(Error::Validation(format!(
                    "edge ({},{}) must be listed with i < j",
                    e.i, e.j
                )));
            }
            edges.push((label(e.i)?, label(e.j)?, e.w));
        }
        let loops = self
            .loops
            .iter()
            .map(|l| Ok((label(l.i)?, l.w)))
            .collect::<Result<Vec<_>>>()?;
        WeightedGraph::from_edges(self.n, &edges, &loops)
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// `{"sigma": [0/1...]}` over the sorted boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutsetFile {
    pub sigma: Vec<u8>,
}

impl CutsetFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("cutset JSON: {e}")))
    }

    pub fn indicator(&self) -> Result<Vec<bool>> {
        self.sigma
            .iter()
            .map(|&s| match s {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Validation(format!("sigma entries must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct PreciseFormatter(PrettyFormatter<'static>);

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with 17 significant digits per float and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Row-major nested vectors, the JSON shape used for matrices.
pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Dense TSV: header `n=<rows>` (plus `\tm=<cols>` when rectangular), then one
/// tab-separated row per line.
pub fn matrix_to_tsv(m: &DMatrix<f64>) -> String {
    let mut out = if m.is_square() {
        format!("n={}\n", m.nrows())
    } else {
        format!("n={}\tm={}\n", m.nrows(), m.ncols())
    };
    for r in m.row_iter() {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub fn matrix_from_tsv(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation("empty TSV".into()))?;
    let mut n = None;
    let mut m = None;
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("bad TSV header {header:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::Validation(format!("bad TSV header {header:?}")))?;
        match key {
            "n" => n = Some(value),
            "m" => m = Some(value),
            _ => return Err(Error::Validation(format!("bad TSV header {header:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::Validation(format!("TSV header {header:?} lacks n=")))?;
    let m = m.unwrap_or(n);
    let mut data = Vec::with_capacity(n * m);
    let mut count = 0;
    for line in lines {
        let row: Vec<f64> = line
            .split('\t')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad TSV number {c:?}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != m {
            return Err(Error::Validation(format!("TSV row {} has {} entries, expected {m}", count + 1, row.len())));
        }
        data.extend(row);
        count += 1;
    }
    if count != n {
        return Err(Error::Validation(format!("TSV has {count} rows, header says {n}")));
    }
    Ok(DMatrix::from_row_slice(n, m, &data))
}

pub fn resistance_from_tsv(text: &str) -> Result<ResistanceMatrix> {
    ResistanceMatrix::new(matrix_from_tsv(text)?)
}
