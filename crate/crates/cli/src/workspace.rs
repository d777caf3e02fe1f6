//! Files under the output directory and the raw inputs that feed them.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use kgcl_core::data::{
    load_embeddings, load_kg_with_counts, read_split_file, ExternalEmbeddingTable, IdMap, Interaction, InteractionSet,
    KnowledgeGraph,
};
use kgcl_core::pairs::{read_pairs, ContentMetadata, PairSets};
use kgcl_core::{Error, Result};
use log::{info, warn};

use crate::config::RunConfig;

pub const TRAIN: &str = "train.tsv";
pub const EVAL: &str = "eval.tsv";
pub const TEST: &str = "test.tsv";
pub const USERS: &str = "user_ids.tsv";
pub const CONTENTS: &str = "content_ids.tsv";
pub const ENTITIES: &str = "entity_ids.tsv";
pub const RELATIONS: &str = "relation_ids.tsv";
pub const KG: &str = "kg.tsv";
pub const PAIRS: &str = "pairs.tsv";
pub const CHECKPOINT: &str = "model.ckpt";
pub const TRAIN_LOG: &str = "train_log.tsv";
pub const METRICS_TSV: &str = "metrics.tsv";
pub const METRICS_JSON: &str = "metrics.json";
pub const COLD_START: &str = "cold_start.tsv";
pub const RECOMMENDATIONS: &str = "recommendations.tsv";

/// Output of `prepare`, read back in dense ids.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub users: IdMap,
    /// Contents hold entity ids `0..contents.len()`.
    pub contents: IdMap,
    pub graph: KnowledgeGraph,
    pub train: InteractionSet,
    pub eval: InteractionSet,
    pub test: InteractionSet,
}

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Data(format!(
            "{} is missing; run `kgcl prepare` first",
            path.display()
        )))
    }
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Self> {
        let users = IdMap::read(&require(dir, USERS)?)?;
        let contents = IdMap::read(&require(dir, CONTENTS)?)?;
        let entities = IdMap::read(&require(dir, ENTITIES)?)?;
        let relations = IdMap::read(&require(dir, RELATIONS)?)?;
        let dense = load_kg_with_counts(&require(dir, KG)?, entities.len(), relations.len())?;
        let graph = KnowledgeGraph::from_triples(
            dense.triples().to_vec(),
            entities.len(),
            relations.len(),
            Some((0..contents.len()).collect()),
        )?;
        let split = |name: &str| -> Result<InteractionSet> {
            let path = require(dir, name)?;
            let set = read_split_file(&path)?;
            if let Some(r) = set
                .records()
                .iter()
                .find(|r| r.user >= users.len() || r.content >= contents.len())
            {
                return Err(Error::Data(format!(
                    "{}: (user {}, content {}) outside the id maps",
                    path.display(),
                    r.user,
                    r.content
                )));
            }
            Ok(set)
        };
        Ok(Self {
            train: split(TRAIN)?,
            eval: split(EVAL)?,
            test: split(TEST)?,
            users,
            contents,
            graph,
        })
    }

    pub fn split(&self, name: &str) -> Result<&InteractionSet> {
        match name {
            "train" => Ok(&self.train),
            "eval" => Ok(&self.eval),
            "test" => Ok(&self.test),
            other => Err(Error::Config(format!("unknown split `{other}` (train, eval or test)"))),
        }
    }
}

/// Records of several disjoint splits as one set.
pub fn union(sets: &[&InteractionSet]) -> Result<InteractionSet> {
    let records: Vec<Interaction> = sets.iter().flat_map(|s| s.records().iter().copied()).collect();
    InteractionSet::from_records(records)
}

pub fn positive_sets(sets: &[&InteractionSet]) -> HashMap<usize, HashSet<usize>> {
    let mut out: HashMap<usize, HashSet<usize>> = HashMap::new();
    for s in sets {
        for (&u, items) in s.user_index() {
            out.entry(u).or_default().extend(items.iter().copied());
        }
    }
    out
}

/// Synopsis embeddings in dense content ids, when the config asks for them.
pub fn external_table(cfg: &RunConfig, contents: &IdMap) -> Result<Option<ExternalEmbeddingTable>> {
    if !cfg.use_embeddings() {
        if cfg.embeddings.is_some() {
            warn!("semantic_text = false, ignoring the embeddings file");
        }
        return Ok(None);
    }
    let Some(path) = &cfg.embeddings else {
        return Ok(None);
    };
    let raw = load_embeddings(path)?;
    let (table, dropped) = raw.to_dense(contents);
    if dropped > 0 {
        warn!("{dropped} embedding rows name contents without interactions and were dropped");
    }
    info!(
        "{} of {} contents carry a {}-d text embedding",
        table.len(),
        contents.len(),
        table.dim()
    );
    Ok(Some(table))
}

/// The pair file the config points to, or the one `sample-pairs` wrote.
pub fn pair_file(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.pairs.clone().or_else(|| {
        let default = cfg.out_dir.join(PAIRS);
        default.exists().then_some(default)
    })
}

/// Reads a raw-id pair file into dense content ids.
pub fn load_dense_pairs(path: &Path, cfg: &RunConfig, contents: &IdMap) -> Result<PairSets> {
    let mode = cfg.contrastive.unwrap_or(kgcl_core::pairs::PairMode::Genre);
    read_pairs(path, mode)?.map_ids(|c| contents.dense(c))
}

/// Reads the metadata CSV: a header row naming at least `content_id` and
/// `genres` (`|`-separated); `title`, `year` and `synopsis` are optional.
pub fn read_metadata(path: &Path) -> Result<Vec<ContentMetadata>> {
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: e.to_string(),
        }
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Data(format!("{}: {e}", path.display())),
            _ => csv_err(e),
        })?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = column("content_id").ok_or_else(|| Error::parse_at(path, 1, "missing `content_id` column"))?;
    let genre_col = column("genres").ok_or_else(|| Error::parse_at(path, 1, "missing `genres` column"))?;
    let (title_col, year_col, synopsis_col) = (column("title"), column("year"), column("synopsis"));

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |c: Option<usize>| c.and_then(|c| record.get(c)).unwrap_or("");
        let content_id: usize = field(Some(id_col))
            .parse()
            .map_err(|_| Error::parse_at(path, line, format!("invalid content id `{}`", field(Some(id_col)))))?;
        if !seen.insert(content_id) {
            return Err(Error::parse_at(path, line, format!("duplicate content {content_id}")));
        }
        let year = match field(year_col) {
            "" => None,
            y => Some(
                y.parse()
                    .map_err(|_| Error::parse_at(path, line, format!("invalid year `{y}`")))?,
            ),
        };
        let synopsis = Some(field(synopsis_col).to_string()).filter(|s| !s.is_empty());
        out.push(ContentMetadata {
            content_id,
            title: field(title_col).to_string(),
            year,
            genres: field(Some(genre_col))
                .split('|')
                .map(str::trim)
                .filter(|g| !g.is_empty())
                .map(String::from)
                .collect(),
            synopsis,
        });
    }
    Ok(out)
}

/// Writes the metadata CSV that [`read_metadata`] reads.
pub fn write_metadata(path: &Path, rows: &[ContentMetadata]) -> Result<()> {
    let io = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["content_id", "title", "year", "genres", "synopsis"])
        .map_err(io)?;
    for m in rows {
        w.write_record([
            m.content_id.to_string(),
            m.title.clone(),
            m.year.map(|y| y.to_string()).unwrap_or_default(),
            m.genres.join("|"),
            m.synopsis.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

trait ParseAt {
    fn parse_at(path: &Path, line: usize, msg: impl Into<String>) -> Self;
}

impl ParseAt for Error {
    fn parse_at(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
