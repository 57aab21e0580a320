use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{Graph, GraphError};

/// Parses a whitespace-separated edge list. Lines starting with `#` and
/// blank lines are skipped; node ids are compacted to `0..N` in order of
/// first appearance.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut edges = Vec::new();
    let intern = |raw: i64, ids: &mut HashMap<i64, usize>| {
        let next = ids.len();
        *ids.entry(raw).or_insert(next)
    };
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let parsed = match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => a.parse::<i64>().ok().zip(b.parse::<i64>().ok()),
            _ => None,
        };
        let Some((a, b)) = parsed else {
            return Err(GraphError::Parse {
                line: lineno + 1,
                found: trimmed.to_string(),
            });
        };
        let u = intern(a, &mut ids);
        let v = intern(b, &mut ids);
        edges.push((u, v));
    }
    Graph::from_edges(ids.len(), edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

/// Serializes edges as `min max` lines in lexicographic order, preceded by
/// optional `#` header lines.
pub fn write_edge_list(graph: &Graph, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}
