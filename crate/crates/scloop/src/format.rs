//! On-disk formats: protograph JSON, sparse parity-check text and CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use scloop_core::lift::SparseParityCheck;
use scloop_core::{Position, ProtoEdge, Protograph};
use serde::{Deserialize, Serialize};

pub const PROTOGRAPH_VERSION: u32 = 1;

/// Serialized protograph. Indices are 0-based; `positions` maps a variable
/// index (as a string key) to `[chain, position]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtographFile {
    pub version: u32,
    pub name: String,
    pub num_checks: usize,
    pub num_vars: usize,
    pub edges: Vec<[i64; 3]>,
    #[serde(default)]
    pub punctured: Vec<usize>,
    #[serde(default)]
    pub positions: BTreeMap<String, [u32; 2]>,
}

impl From<&Protograph> for ProtographFile {
    fn from(p: &Protograph) -> Self {
        ProtographFile {
            version: PROTOGRAPH_VERSION,
            name: p.name().to_string(),
            num_checks: p.num_checks(),
            num_vars: p.num_vars(),
            edges: p
                .edges()
                .iter()
                .map(|e| [e.check as i64, e.var as i64, i64::from(e.mult)])
                .collect(),
            punctured: p.punctured().iter().copied().collect(),
            positions: p
                .positions()
                .iter()
                .map(|(v, pos)| (v.to_string(), [pos.chain, pos.index]))
                .collect(),
        }
    }
}

impl ProtographFile {
    pub fn into_protograph(self) -> Result<Protograph> {
        if self.version != PROTOGRAPH_VERSION {
            bail!("unsupported protograph file version {}", self.version);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for [c, v, m] in self.edges {
            if c < 0 || v < 0 || m < 1 || m > i64::from(u32::MAX) {
                bail!("invalid edge [{c}, {v}, {m}]: indices must be >= 0 and multiplicity >= 1");
            }
            edges.push(ProtoEdge {
                check: c as usize,
                var: v as usize,
                mult: m as u32,
            });
        }
        let mut positions = Vec::with_capacity(self.positions.len());
        for (k, [chain, index]) in self.positions {
            let v: usize = k.parse().with_context(|| format!("bad position key `{k}`"))?;
            positions.push((v, Position { chain, index }));
        }
        let p = Protograph::new(
            self.name,
            self.num_checks,
            self.num_vars,
            edges,
            self.punctured,
            positions,
        )?;
        Ok(p)
    }
}

pub fn protograph_to_json(p: &Protograph) -> String {
    serde_json::to_string_pretty(&ProtographFile::from(p)).expect("protograph serializes")
}

pub fn protograph_from_json(text: &str) -> Result<Protograph> {
    let file: ProtographFile = serde_json::from_str(text).context("malformed protograph file")?;
    file.into_protograph()
}

pub fn save_protograph(path: &Path, p: &Protograph) -> Result<()> {
    fs::write(path, protograph_to_json(p) + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn load_protograph(path: &Path) -> Result<Protograph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    protograph_from_json(&text).with_context(|| format!("loading {}", path.display()))
}

/// `n m` header, then one line per row with its 0-based column indices.
pub fn parity_check_to_text(h: &SparseParityCheck) -> String {
    let mut out = String::with_capacity(h.num_edges() * 6);
    writeln!(out, "{} {}", h.n(), h.m()).unwrap();
    for row in h.rows() {
        let mut first = true;
        for c in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parity_check_from_text(text: &str) -> Result<SparseParityCheck> {
    let mut lines = text.lines();
    let header = lines.next().context("empty parity-check file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .context("bad header")?;
    let [n, m] = dims[..] else {
        bail!("header must be `n m`");
    };
    let rows: Vec<Vec<u32>> = lines
        .take(m)
        .map(|l| l.split_whitespace().map(str::parse).collect())
        .collect::<std::result::Result<_, _>>()
        .context("bad row")?;
    if rows.len() != m {
        bail!("expected {m} rows, found {}", rows.len());
    }
    Ok(SparseParityCheck::from_rows(n, rows)?)
}

/// Minimal CSV table with a fixed header; values are preformatted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-tripping float text.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use scloop_core::ensembles::{build_chain, build_uncoupled};

    #[test]
    fn round_trip_chain() {
        let p = build_chain(3, 6, 8).unwrap();
        assert_eq!(protograph_from_json(&protograph_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn hand_written_uncoupled() {
        let text = r#"{"version":1,"name":"(3,6)","num_checks":1,"num_vars":2,
            "edges":[[0,0,3],[0,1,3]]}"#;
        let p = protograph_from_json(text).unwrap();
        let q = build_uncoupled(3, 6).unwrap();
        assert_eq!(p.edges(), q.edges());
        assert_eq!((p.num_checks(), p.num_vars()), (q.num_checks(), q.num_vars()));
    }

    #[test]
    fn rejects_bad_files() {
        let neg = r#"{"version":1,"name":"x","num_checks":1,"num_vars":1,"edges":[[0,0,-2]]}"#;
        assert!(protograph_from_json(neg).is_err());
        let ver = r#"{"version":2,"name":"x","num_checks":1,"num_vars":1,"edges":[[0,0,1]]}"#;
        assert!(protograph_from_json(ver).is_err());
        assert!(protograph_from_json("{").is_err());
        let extra = r#"{"version":1,"name":"x","num_checks":1,"num_vars":1,"edges":[[0,0,1]],"foo":1}"#;
        assert!(protograph_from_json(extra).is_err());
    }

    #[test]
    fn parity_check_text_round_trip() {
        let h = SparseParityCheck::from_rows(4, vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        let text = parity_check_to_text(&h);
        assert_eq!(text, "4 2\n0 1 2\n2 3\n");
        assert_eq!(parity_check_from_text(&text).unwrap().rows(), h.rows());
    }
}
