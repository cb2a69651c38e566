//! Artifact files: embeddings, history, metrics, pools and predictions.
//!
//! All formats are tab-separated text with `#` header lines. Writes go to a
//! temporary sibling first and are renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::ensemble::EmbeddingTable;
use crate::error::{Error, Result};
use crate::evolution::{HistoryRecord, RunHistory};
use crate::sampling::{Pool, SubNetwork};

pub const HISTORY_HEADER: &str = "generation\tbest_loss\tmean_loss\tdelta_Lc";

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

pub fn format_embeddings(table: &EmbeddingTable) -> String {
    let mut out = String::with_capacity(table.len() * (table.dimension() * 16 + 8));
    let _ = writeln!(out, "# nodes={} dim={}", table.len(), table.dimension());
    for (id, row) in table.iter() {
        let _ = write!(out, "{id}");
        for v in row {
            let _ = write!(out, "\t{v:.8e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    write_atomic(path, &format_embeddings(table))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&fs::read_to_string(path)?)
}

fn header_field(header: &str, name: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(name)?.strip_prefix('=')?.parse().ok())
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| format_err(1, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| format_err(1, "missing `# nodes=N dim=D` header"))?;
    let (Some(nodes), Some(dim)) = (header_field(header, "nodes"), header_field(header, "dim")) else {
        return Err(format_err(1, "header must give nodes=N and dim=D"));
    };
    if !text.ends_with('\n') {
        return Err(format_err(
            text.lines().count(),
            "last row is not newline-terminated (truncated file?)",
        ));
    }
    let mut table = EmbeddingTable::new(dim);
    let mut row = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id: u64 = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| format_err(line_no, "row does not start with a node id"))?;
        row.clear();
        for f in fields {
            row.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| format_err(line_no, format!("`{f}` is not a number")))?,
            );
        }
        if row.len() != dim {
            return Err(format_err(line_no, format!("{} values, header says {dim}", row.len())));
        }
        table.push(id, &row).map_err(|e| format_err(line_no, e.to_string()))?;
    }
    if table.len() != nodes {
        return Err(format_err(
            text.lines().count() + 1,
            format!("file ends after {} rows, header says {nodes}", table.len()),
        ));
    }
    Ok(table)
}

pub fn format_history(history: &RunHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in &history.records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.generation, r.best_loss, r.mean_loss, r.delta_proximity
        );
    }
    out
}

pub fn write_history(history: &RunHistory, path: &Path) -> Result<()> {
    if history.is_empty() {
        return Err(Error::Evaluation("history is empty".into()));
    }
    write_atomic(path, &format_history(history))
}

/// Generation, best loss, mean loss and delta_Lc of each row.
pub fn parse_history(text: &str) -> Result<Vec<(usize, f64, f64, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HISTORY_HEADER => {}
        _ => return Err(format_err(1, format!("expected header `{HISTORY_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(format_err(i + 1, format!("{} columns, expected 4", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| format_err(i + 1, format!("`{s}` is not a number")))
        };
        let generation = f[0]
            .parse()
            .map_err(|_| format_err(i + 1, format!("`{}` is not a generation index", f[0])))?;
        out.push((generation, num(f[1])?, num(f[2])?, num(f[3])?));
    }
    Ok(out)
}

/// Ordered `key\tvalue` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsFile {
    pub entries: Vec<(String, String)>,
}

impl MetricsFile {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_real(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:.6}"));
    }

    /// Wall times are written with 3 decimals.
    pub fn push_seconds(&mut self, key: &str, seconds: f64) {
        self.push(key, format!("{seconds:.3}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = MetricsFile::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| format_err(i + 1, "expected `key<TAB>value`"))?;
            m.push(k, v);
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }
}

/// One line per sub-network: index, comma-separated node ids, and the local
/// edge list as `i-k` pairs.
pub fn format_pool(pool: &Pool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# pool size={} sub_network_size={} memory_bytes={}",
        pool.len(),
        pool.sub_network_size(),
        pool.memory_bytes()
    );
    for (t, g) in pool.iter().enumerate() {
        let ids: Vec<String> = g.nodes().iter().map(u64::to_string).collect();
        let mut edges = Vec::new();
        for i in 0..g.len() {
            for k in (i + 1)..g.len() {
                if g.adjacent(i, k) {
                    edges.push(format!("{i}-{k}"));
                }
            }
        }
        let _ = writeln!(out, "{t}\t{}\t{}", ids.join(","), edges.join(" "));
    }
    out
}

pub fn parse_pool(text: &str) -> Result<Pool> {
    let mut members = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(format_err(line_no, format!("{} columns, expected 3", f.len())));
        }
        let ids = f[1]
            .split(',')
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| format_err(line_no, format!("bad node id `{s}`")))
            })
            .collect::<Result<Vec<u64>>>()?;
        let n = ids.len();
        let mut adjacency = vec![0u8; n * n];
        for pair in f[2].split_whitespace() {
            let (i, k) = pair
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .filter(|&(i, k)| i < n && k < n)
                .ok_or_else(|| format_err(line_no, format!("bad local edge `{pair}`")))?;
            adjacency[i * n + k] = 1;
            adjacency[k * n + i] = 1;
        }
        members.push(SubNetwork::from_adjacency(ids, adjacency).map_err(|e| format_err(line_no, e.to_string()))?);
    }
    Pool::new(members)
}

/// Row index, predicted class and true class per test row.
pub fn format_predictions(rows: &[usize], predicted: &[usize], truth: &[usize], class_names: &[String]) -> String {
    let mut out = String::from("row\tpredicted\ttruth\n");
    for ((r, &p), &t) in rows.iter().zip(predicted).zip(truth) {
        let _ = writeln!(out, "{r}\t{}\t{}", class_names[p], class_names[t]);
    }
    out
}

/// Last record's fields, for quick summaries.
pub fn summarize(record: &HistoryRecord) -> String {
    format!(
        "generation {}: best {:.4}, mean {:.4}, delta_Lc {:.4}",
        record.generation, record.best_loss, record.mean_loss, record.delta_proximity
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3);
        t.push(4, &[0.1, -2.5e-7, 1.0 / 3.0]).unwrap();
        t.push(9, &[123456.789, 0.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn embeddings_round_trip() {
        let t = table();
        let text = format_embeddings(&t);
        assert!(text.starts_with("# nodes=2 dim=3\n"));
        let back = parse_embeddings(&text).unwrap();
        assert_eq!(back.node_ids(), t.node_ids());
        for (id, row) in t.iter() {
            for (a, b) in row.iter().zip(back.get(id).unwrap()) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300), "{a} {b}");
            }
        }
    }

    #[test]
    fn truncated_embeddings_fail() {
        let text = format_embeddings(&table());
        let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        let e = parse_embeddings(&cut).unwrap_err();
        assert!(matches!(e, Error::Format { line: 3, .. }), "{e}");
        let partial = &text[..text.len() - 6];
        assert!(matches!(parse_embeddings(partial), Err(Error::Format { line: 3, .. })));
    }

    #[test]
    fn history_format() {
        let rec = |g, d| HistoryRecord {
            generation: g,
            best_loss: -1.5,
            mean_loss: 2.0,
            proximity: 0.0,
            delta_proximity: d,
            best_so_far: -1.5,
        };
        let h = RunHistory {
            records: vec![rec(1, 0.0), rec(2, -3.25)],
        };
        let text = format_history(&h);
        assert_eq!(text.lines().count(), 3);
        let rows = parse_history(&text).unwrap();
        assert_eq!(rows[0], (1, -1.5, 2.0, 0.0));
        assert_eq!(rows[1].3, -3.25);
        assert!(write_history(&RunHistory::default(), Path::new("unused")).is_err());
    }

    #[test]
    fn pool_round_trip() {
        let a = SubNetwork::from_adjacency(vec![7, 3, 5], vec![0, 1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        let b = SubNetwork::from_adjacency(vec![1, 2, 3], vec![0; 9]).unwrap();
        let pool = Pool::new(vec![a, b]).unwrap();
        assert_eq!(parse_pool(&format_pool(&pool)).unwrap(), pool);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
