//! Data model and I/O: interactions, knowledge graph, external content
//! embeddings, dense id maps, splitting and sampling.

mod embeddings;
mod graph;
mod idmap;
mod interactions;
mod sampling;
mod split;

pub use embeddings::{load_embeddings, write_embeddings, ExternalEmbeddingTable};
pub use graph::{load_kg, load_kg_with_counts, write_kg, KnowledgeGraph, LoadedGraph, Triple};
pub use idmap::IdMap;
pub use interactions::{
    load_interactions, read_split_file, write_split_file, Interaction, InteractionSet, LoadedInteractions,
};
pub use sampling::{neighbor_sample, sample_user_negatives};
pub use split::{split_dataset, SplitSpec};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a text file and yields `(line_number, trimmed_line)` for every line
/// that is neither blank nor a `#` comment. Line numbers are 1-based.
pub(crate) fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim_end_matches('\r');
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                None
            } else {
                Some((i + 1, line.to_string()))
            }
        })
        .collect())
}

pub(crate) fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} `{field}`")))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}
