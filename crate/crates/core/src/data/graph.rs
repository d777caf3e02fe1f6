use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{data_lines, parse_field, write_text, IdMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self { head, relation, tail }
    }
}

/// Knowledge graph stored as an undirected adjacency list: every triple
/// `(h, r, t)` contributes `(r, t)` to `h` and `(r, h)` to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    num_entities: usize,
    num_relations: usize,
    adjacency: Vec<Vec<(usize, usize)>>,
    content_ids: BTreeSet<usize>,
    triples: Vec<Triple>,
}

impl KnowledgeGraph {
    /// Builds the graph. When `contents` is `None`, the distinct heads are
    /// taken as the content set.
    pub fn from_triples(
        triples: Vec<Triple>,
        num_entities: usize,
        num_relations: usize,
        contents: Option<BTreeSet<usize>>,
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::Data("knowledge graph has no triples".into()));
        }
        let mut adjacency = vec![Vec::new(); num_entities];
        for t in &triples {
            for id in [t.head, t.tail] {
                if id >= num_entities {
                    return Err(Error::Data(format!(
                        "entity id {id} out of range (num_entities = {num_entities})"
                    )));
                }
            }
            if t.relation >= num_relations {
                return Err(Error::Data(format!(
                    "relation id {} out of range (num_relations = {num_relations})",
                    t.relation
                )));
            }
            adjacency[t.head].push((t.relation, t.tail));
            adjacency[t.tail].push((t.relation, t.head));
        }
        let content_ids = contents.unwrap_or_else(|| triples.iter().map(|t| t.head).collect());
        for &c in &content_ids {
            if c >= num_entities || adjacency[c].is_empty() {
                return Err(Error::Data(format!(
                    "content {c} has no neighbor in the knowledge graph"
                )));
            }
        }
        Ok(Self {
            num_entities,
            num_relations,
            adjacency,
            content_ids,
            triples,
        })
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn neighbors(&self, entity: usize) -> &[(usize, usize)] {
        &self.adjacency[entity]
    }

    pub fn degree(&self, entity: usize) -> usize {
        self.adjacency[entity].len()
    }

    pub fn content_ids(&self) -> &BTreeSet<usize> {
        &self.content_ids
    }

    pub fn is_content(&self, entity: usize) -> bool {
        self.content_ids.contains(&entity)
    }

    /// Content ids in ascending order.
    pub fn contents(&self) -> Vec<usize> {
        self.content_ids.iter().copied().collect()
    }
}

/// A graph plus the maps from raw file ids to dense ids.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: KnowledgeGraph,
    pub entities: IdMap,
    pub relations: IdMap,
}

fn read_raw_triples(path: &Path) -> Result<Vec<(usize, Triple)>> {
    let mut out = Vec::new();
    for (line, text) in data_lines(path)? {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, line, "expected `head \\t relation \\t tail`"));
        }
        out.push((
            line,
            Triple::new(
                parse_field(path, line, fields[0], "head id")?,
                parse_field(path, line, fields[1], "relation id")?,
                parse_field(path, line, fields[2], "tail id")?,
            ),
        ));
    }
    if out.is_empty() {
        return Err(Error::parse(path, 0, "knowledge graph file is empty"));
    }
    Ok(out)
}

/// Loads a triple file, re-indexing entities and relations densely.
///
/// Raw KG ids share the namespace of raw content ids. When `contents` is
/// given, those contents keep their dense ids `0..contents.len()` and every
/// one of them must have at least one incident triple; other entities are
/// appended in order of first appearance. Without it, contents are the
/// distinct heads.
pub fn load_kg(path: &Path, contents: Option<&IdMap>) -> Result<LoadedGraph> {
    let raw = read_raw_triples(path)?;
    let mut entities = contents.cloned().unwrap_or_default();
    let mut relations = IdMap::new();
    let triples: Vec<Triple> = raw
        .iter()
        .map(|(_, t)| {
            let head = entities.get_or_insert(t.head);
            let relation = relations.get_or_insert(t.relation);
            let tail = entities.get_or_insert(t.tail);
            Triple::new(head, relation, tail)
        })
        .collect();
    let content_set = contents.map(|m| (0..m.len()).collect());
    let graph =
        KnowledgeGraph::from_triples(triples, entities.len(), relations.len(), content_set).map_err(|e| match e {
            Error::Data(msg) => Error::parse(path, 0, msg),
            other => other,
        })?;
    Ok(LoadedGraph {
        graph,
        entities,
        relations,
    })
}

/// Loads a triple file whose ids are already dense, validating them against
/// declared counts. Contents are the distinct heads.
pub fn load_kg_with_counts(path: &Path, num_entities: usize, num_relations: usize) -> Result<KnowledgeGraph> {
    let raw = read_raw_triples(path)?;
    for (line, t) in &raw {
        if t.head >= num_entities || t.tail >= num_entities {
            return Err(Error::parse(
                path,
                *line,
                format!("dangling entity id (declared entity count {num_entities})"),
            ));
        }
        if t.relation >= num_relations {
            return Err(Error::parse(
                path,
                *line,
                format!("dangling relation id (declared relation count {num_relations})"),
            ));
        }
    }
    KnowledgeGraph::from_triples(
        raw.into_iter().map(|(_, t)| t).collect(),
        num_entities,
        num_relations,
        None,
    )
}

/// Writes the graph's triples in dense ids.
pub fn write_kg(path: &Path, graph: &KnowledgeGraph) -> Result<()> {
    let mut out = String::new();
    for t in graph.triples() {
        writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail).unwrap();
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg_file(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.tsv");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn single_triple_is_symmetric() {
        let (_d, path) = kg_file("0\t0\t1\n");
        let g = load_kg(&path, None).unwrap().graph;
        assert_eq!(g.neighbors(0), &[(0, 1)]);
        assert_eq!(g.neighbors(1), &[(0, 0)]);
    }

    #[test]
    fn two_triples_from_one_head() {
        let (_d, path) = kg_file("0\t0\t1\n0\t1\t2\n");
        let g = load_kg(&path, None).unwrap().graph;
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.num_relations(), 2);
    }

    #[test]
    fn star_graph_degrees() {
        let body: String = (1..=5).map(|t| format!("0\t0\t{t}\n")).collect();
        let (_d, path) = kg_file(&body);
        let g = load_kg(&path, None).unwrap().graph;
        assert_eq!(g.degree(0), 5);
        for t in 1..=5 {
            assert_eq!(g.degree(t), 1);
        }
        assert_eq!(g.contents(), vec![0]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let (_d, path) = kg_file("# nothing here\n");
        assert!(load_kg(&path, None).is_err());
    }

    #[test]
    fn dangling_id_against_declared_count() {
        let (_d, path) = kg_file("0\t0\t1\n0\t0\t7\n");
        assert!(matches!(
            load_kg_with_counts(&path, 3, 1),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(load_kg_with_counts(&path, 8, 1).is_ok());
    }

    #[test]
    fn content_map_pins_dense_ids() {
        // raw ids: contents 50 and 60, attributes 900 and 901
        let (_d, path) = kg_file("60\t3\t900\n50\t3\t901\n50\t4\t900\n");
        let mut contents = IdMap::new();
        contents.get_or_insert(50);
        contents.get_or_insert(60);
        let loaded = load_kg(&path, Some(&contents)).unwrap();
        assert_eq!(loaded.entities.dense(50), Some(0));
        assert_eq!(loaded.entities.dense(60), Some(1));
        assert_eq!(loaded.entities.dense(900), Some(2));
        assert_eq!(loaded.graph.contents(), vec![0, 1]);
        assert_eq!(loaded.graph.degree(0), 2);
        assert_eq!(loaded.graph.degree(2), 2);
    }

    #[test]
    fn content_without_neighbors_is_rejected() {
        let (_d, path) = kg_file("50\t0\t900\n");
        let mut contents = IdMap::new();
        contents.get_or_insert(50);
        contents.get_or_insert(51);
        assert!(load_kg(&path, Some(&contents)).is_err());
    }

    #[test]
    fn adjacency_symmetry_holds() {
        let (_d, path) = kg_file("0\t0\t3\n1\t1\t3\n2\t0\t4\n0\t1\t4\n");
        let g = load_kg(&path, None).unwrap().graph;
        for h in 0..g.num_entities() {
            for &(r, t) in g.neighbors(h) {
                assert!(g.neighbors(t).contains(&(r, h)));
            }
        }
    }
}
