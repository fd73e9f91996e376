//! Relation graph construction, Kosaraju SCC extraction, and seed selection.
//!
//! Every synset becomes a node; the relations whose kind is selected become
//! directed edges. One node per sufficiently large strongly connected
//! component is enough to label the whole component during expansion, which
//! is what makes the seed list minimal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{Ontology, RelationKind};

#[derive(Debug, Error)]
pub enum SeedGraphError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("seed id `{id}` is not a node of the graph")]
    UnknownSeed { id: String },
    #[error("edge references unknown node `{id}`")]
    UnknownNode { id: String },
}

/// Directed graph over synset ids with relation-kind edge labels.
#[derive(Debug, Clone)]
pub struct PolarityGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    edges: Vec<(usize, usize, RelationKind)>,
    adjacency: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
    symmetrized: bool,
    kinds: BTreeSet<RelationKind>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<(String, String, RelationKind)>,
    symmetrized: bool,
    kinds: BTreeSet<RelationKind>,
}

impl PolarityGraph {
    /// Build the graph over all synsets, keeping only relations whose kind
    /// is in `kinds`. With `symmetrize` on, every kept edge also exists in
    /// the reverse direction under the mirrored kind.
    pub fn build(ontology: &Ontology, kinds: &BTreeSet<RelationKind>, symmetrize: bool) -> Self {
        let nodes: Vec<String> = ontology.ids().map(str::to_string).collect();
        let index: BTreeMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        let mut edge_set: BTreeSet<(usize, usize, RelationKind)> = BTreeSet::new();
        for synset in ontology.synsets() {
            let source = index[&synset.id];
            for rel in &synset.relations {
                if !kinds.contains(&rel.kind) {
                    continue;
                }
                let target = index[&rel.target];
                edge_set.insert((source, target, rel.kind));
                if symmetrize {
                    edge_set.insert((target, source, rel.kind.mirrored()));
                }
            }
        }

        Self::from_dense(nodes, index, edge_set.into_iter().collect(), symmetrize, kinds.clone())
    }

    /// Rebuild a graph from explicit parts (used by file loading).
    pub fn from_parts(
        nodes: Vec<String>,
        edges: Vec<(String, String, RelationKind)>,
        symmetrized: bool,
        kinds: BTreeSet<RelationKind>,
    ) -> Result<Self, SeedGraphError> {
        let mut sorted = nodes;
        sorted.sort();
        sorted.dedup();
        let index: BTreeMap<String, usize> = sorted
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let mut edge_set = BTreeSet::new();
        for (src, dst, kind) in edges {
            let s = *index
                .get(&src)
                .ok_or(SeedGraphError::UnknownNode { id: src.clone() })?;
            let d = *index
                .get(&dst)
                .ok_or(SeedGraphError::UnknownNode { id: dst.clone() })?;
            edge_set.insert((s, d, kind));
        }
        Ok(Self::from_dense(
            sorted,
            index,
            edge_set.into_iter().collect(),
            symmetrized,
            kinds,
        ))
    }

    fn from_dense(
        nodes: Vec<String>,
        index: BTreeMap<String, usize>,
        edges: Vec<(usize, usize, RelationKind)>,
        symmetrized: bool,
        kinds: BTreeSet<RelationKind>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut reverse = vec![Vec::new(); nodes.len()];
        for &(s, d, _) in &edges {
            adjacency[s].push(d);
            reverse[d].push(s);
        }
        PolarityGraph {
            nodes,
            index,
            edges,
            adjacency,
            reverse,
            symmetrized,
            kinds,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|s| s.as_str())
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, RelationKind)> {
        self.edges
            .iter()
            .map(|&(s, d, k)| (self.nodes[s].as_str(), self.nodes[d].as_str(), k))
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn kinds(&self) -> &BTreeSet<RelationKind> {
        &self.kinds
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SeedGraphError> {
        let path = path.as_ref();
        let file = GraphFile {
            nodes: self.nodes.clone(),
            edges: self
                .edges()
                .map(|(s, d, k)| (s.to_string(), d.to_string(), k))
                .collect(),
            symmetrized: self.symmetrized,
            kinds: self.kinds.clone(),
        };
        let body = serde_json::to_string_pretty(&file).expect("graph serializes");
        fs::write(path, body).map_err(|source| SeedGraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SeedGraphError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| SeedGraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: GraphFile =
            serde_json::from_str(&body).map_err(|e| SeedGraphError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Self::from_parts(file.nodes, file.edges, file.symmetrized, file.kinds)
    }

    /// Kosaraju's algorithm: depth-first finish order on the graph, then a
    /// second depth-first sweep over the transposed graph in reverse finish
    /// order. Both passes are iterative.
    pub fn kosaraju(&self) -> SccPartition {
        let n = self.nodes.len();
        let mut visited = vec![false; n];
        let mut finish_order = Vec::with_capacity(n);

        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < self.adjacency[node].len() {
                    let child = self.adjacency[node][*next];
                    *next += 1;
                    if !visited[child] {
                        visited[child] = true;
                        stack.push((child, 0));
                    }
                } else {
                    finish_order.push(node);
                    stack.pop();
                }
            }
        }

        visited.fill(false);
        let mut raw_components: Vec<Vec<usize>> = Vec::new();
        for &root in finish_order.iter().rev() {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            let mut component = vec![root];
            let mut stack = vec![root];
            while let Some(node) = stack.pop() {
                for &prev in &self.reverse[node] {
                    if !visited[prev] {
                        visited[prev] = true;
                        component.push(prev);
                        stack.push(prev);
                    }
                }
            }
            raw_components.push(component);
        }

        let mut components: Vec<Vec<String>> = raw_components
            .into_iter()
            .map(|mut comp| {
                comp.sort();
                comp.into_iter().map(|i| self.nodes[i].clone()).collect()
            })
            .collect();
        components.sort_by(|a, b| a[0].cmp(&b[0]));
        SccPartition::from_components(components)
    }

    /// Forward-reachability check: every node of every component of size at
    /// least `min_size` must be reachable from the seed set.
    pub fn check_seed_coverage(
        &self,
        seeds: &[String],
        min_size: usize,
    ) -> Result<CoverageReport, SeedGraphError> {
        let min_size = min_size.max(1);
        let mut covered = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        for seed in seeds {
            let idx = *self
                .index
                .get(seed)
                .ok_or_else(|| SeedGraphError::UnknownSeed { id: seed.clone() })?;
            if !covered[idx] {
                covered[idx] = true;
                queue.push_back(idx);
            }
        }
        while let Some(node) = queue.pop_front() {
            for &next in &self.adjacency[node] {
                if !covered[next] {
                    covered[next] = true;
                    queue.push_back(next);
                }
            }
        }

        let partition = self.kosaraju();
        let mut uncovered = Vec::new();
        for component in partition.components() {
            if component.len() < min_size {
                continue;
            }
            for id in component {
                if !covered[self.index[id]] {
                    uncovered.push(id.clone());
                }
            }
        }
        uncovered.sort();

        let covered_ids = self
            .nodes
            .iter()
            .zip(&covered)
            .filter(|(_, &c)| c)
            .map(|(id, _)| id.clone())
            .collect();
        Ok(CoverageReport {
            covered: covered_ids,
            uncovered,
        })
    }
}

/// Result of `check_seed_coverage`.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    /// Forward-reachability closure of the seed list.
    pub covered: BTreeSet<String>,
    /// Nodes inside qualifying components that the closure misses.
    pub uncovered: Vec<String>,
}

impl CoverageReport {
    pub fn is_satisfied(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Disjoint strongly connected components covering the node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    components: Vec<Vec<String>>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    components: Vec<Vec<String>>,
}

/// Component-size buckets used for partition summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SizeBucket {
    #[serde(rename = "1")]
    Single,
    #[serde(rename = "2-5")]
    TwoToFive,
    #[serde(rename = "6-10")]
    SixToTen,
    #[serde(rename = "11-15")]
    ElevenToFifteen,
    #[serde(rename = "16+")]
    SixteenPlus,
}

impl SizeBucket {
    pub fn for_size(size: usize) -> SizeBucket {
        match size {
            0 | 1 => SizeBucket::Single,
            2..=5 => SizeBucket::TwoToFive,
            6..=10 => SizeBucket::SixToTen,
            11..=15 => SizeBucket::ElevenToFifteen,
            _ => SizeBucket::SixteenPlus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeBucket::Single => "1",
            SizeBucket::TwoToFive => "2-5",
            SizeBucket::SixToTen => "6-10",
            SizeBucket::ElevenToFifteen => "11-15",
            SizeBucket::SixteenPlus => "16+",
        }
    }
}

impl std::fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl SccPartition {
    fn from_components(components: Vec<Vec<String>>) -> Self {
        let mut index = BTreeMap::new();
        for (ordinal, component) in components.iter().enumerate() {
            for id in component {
                index.insert(id.clone(), ordinal);
            }
        }
        SccPartition { components, index }
    }

    pub fn components(&self) -> &[Vec<String>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Count of components per size bucket; zero buckets are omitted.
    pub fn histogram(&self) -> BTreeMap<SizeBucket, usize> {
        let mut histogram = BTreeMap::new();
        for component in &self.components {
            *histogram
                .entry(SizeBucket::for_size(component.len()))
                .or_insert(0) += 1;
        }
        histogram
    }

    /// One seed per component of size >= `min_size`: the lexicographically
    /// smallest member. Output is sorted.
    pub fn select_seeds(&self, min_size: usize) -> Vec<String> {
        let min_size = min_size.max(1);
        let mut seeds: Vec<String> = self
            .components
            .iter()
            .filter(|c| c.len() >= min_size)
            .map(|c| c[0].clone())
            .collect();
        seeds.sort();
        seeds
    }

    /// One uniformly random seed per qualifying component, deterministic for
    /// a given rng seed. Output is sorted.
    pub fn select_seeds_random(&self, min_size: usize, rng_seed: u64) -> Vec<String> {
        let min_size = min_size.max(1);
        let mut rng = StdRng::seed_from_u64(rng_seed);
        let mut seeds: Vec<String> = self
            .components
            .iter()
            .filter(|c| c.len() >= min_size)
            .map(|c| c[rng.random_range(0..c.len())].clone())
            .collect();
        seeds.sort();
        seeds
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SeedGraphError> {
        let path = path.as_ref();
        let file = PartitionFile {
            components: self.components.clone(),
        };
        let body = serde_json::to_string_pretty(&file).expect("partition serializes");
        fs::write(path, body).map_err(|source| SeedGraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SeedGraphError> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|source| SeedGraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: PartitionFile =
            serde_json::from_str(&body).map_err(|e| SeedGraphError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let mut components = file.components;
        for component in &mut components {
            component.sort();
        }
        components.sort_by(|a, b| a[0].cmp(&b[0]));
        Ok(Self::from_components(components))
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn antonym_kinds() -> BTreeSet<RelationKind> {
        [RelationKind::Antonym].into_iter().collect()
    }

    #[test]
    fn build_symmetrizes_single_direction_antonym() {
        let ontology = antonym_pair_ontology();
        let graph = PolarityGraph::build(&ontology, &antonym_kinds(), true);
        let edges: Vec<_> = graph.edges().collect();
        assert_eq!(
            edges,
            vec![
                ("adj.bad.01", "adj.good.01", RelationKind::Antonym),
                ("adj.good.01", "adj.bad.01", RelationKind::Antonym),
            ]
        );
    }

    #[test]
    fn build_without_symmetrization_keeps_stored_direction() {
        let ontology = antonym_pair_ontology();
        let graph = PolarityGraph::build(&ontology, &antonym_kinds(), false);
        let edges: Vec<_> = graph.edges().collect();
        assert_eq!(
            edges,
            vec![("adj.good.01", "adj.bad.01", RelationKind::Antonym)]
        );
    }

    #[test]
    fn kind_filter_can_exclude_every_edge() {
        let ontology = antonym_pair_ontology();
        let kinds: BTreeSet<_> = [RelationKind::Synonym].into_iter().collect();
        let graph = PolarityGraph::build(&ontology, &kinds, true);
        assert_eq!(graph.node_count(), 2);
        assert_eq!(graph.edge_count(), 0);
    }

    #[test]
    fn kosaraju_separates_cycle_from_tail() {
        let graph = graph_from_edges(&["a", "b", "c"], &[("a", "b"), ("b", "a"), ("b", "c")]);
        let partition = graph.kosaraju();
        assert_eq!(
            partition.components(),
            &[vec!["a".to_string(), "b".to_string()], vec!["c".to_string()]]
        );
        // Matches the brute-force oracle as well.
        let oracle = scc_oracle(
            &["a".into(), "b".into(), "c".into()],
            &[(0, 1), (1, 0), (1, 2)],
        );
        assert_eq!(partition.components(), &oracle[..]);
    }

    #[test]
    fn isolated_node_is_a_singleton_component() {
        let graph = graph_from_edges(&["n"], &[]);
        let partition = graph.kosaraju();
        assert_eq!(partition.components(), &[vec!["n".to_string()]]);
    }

    #[test]
    fn kosaraju_matches_oracle_on_random_digraphs() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..=10);
            let density: f64 = rng.random_range(0.0..0.5);
            let graph = random_digraph(&mut rng, n, density);
            let nodes: Vec<String> = graph.nodes().map(str::to_string).collect();
            let edge_idx: Vec<(usize, usize)> = graph
                .edges()
                .map(|(s, d, _)| {
                    (
                        nodes.iter().position(|x| x == s).unwrap(),
                        nodes.iter().position(|x| x == d).unwrap(),
                    )
                })
                .collect();
            let expected = scc_oracle(&nodes, &edge_idx);
            assert_eq!(graph.kosaraju().components(), &expected[..]);
        }
    }

    #[test]
    fn histogram_buckets() {
        let partition = SccPartition::from_components(vec![
            vec!["a".into(), "b".into()],
            vec!["c".into(), "d".into(), "e".into(), "f".into(), "g".into(), "h".into()],
        ]);
        let histogram = partition.histogram();
        assert_eq!(histogram[&SizeBucket::TwoToFive], 1);
        assert_eq!(histogram[&SizeBucket::SixToTen], 1);
        assert_eq!(histogram.len(), 2);

        let singletons = SccPartition::from_components(vec![
            vec!["a".into()],
            vec!["b".into()],
            vec!["c".into()],
        ]);
        assert_eq!(singletons.histogram()[&SizeBucket::Single], 3);
    }

    #[test]
    fn select_seeds_smallest_id_per_qualifying_component() {
        let partition = SccPartition::from_components(vec![
            vec!["a".into(), "b".into()],
            vec!["c".into()],
        ]);
        assert_eq!(partition.select_seeds(2), vec!["a".to_string()]);
        assert_eq!(
            partition.select_seeds(1),
            vec!["a".to_string(), "c".to_string()]
        );
        let empty = SccPartition::from_components(vec![]);
        assert!(empty.select_seeds(2).is_empty());
    }

    #[test]
    fn select_seeds_is_deterministic() {
        let graph = graph_from_edges(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")],
        );
        let partition = graph.kosaraju();
        assert_eq!(partition.select_seeds(2), partition.select_seeds(2));
        assert_eq!(
            partition.select_seeds_random(2, 9),
            partition.select_seeds_random(2, 9)
        );
    }

    #[test]
    fn random_selection_picks_members_of_each_component() {
        let partition = SccPartition::from_components(vec![
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into(), "y".into()],
        ]);
        for seed in 0..20u64 {
            let picks = partition.select_seeds_random(2, seed);
            assert_eq!(picks.len(), 2);
            assert!(picks.iter().any(|p| ["a", "b", "c"].contains(&p.as_str())));
            assert!(picks.iter().any(|p| ["x", "y"].contains(&p.as_str())));
        }
    }

    #[test]
    fn coverage_of_selected_seeds_is_complete() {
        let graph = graph_from_edges(
            &["a", "b", "c", "d", "e"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c"), ("b", "e")],
        );
        let seeds = graph.kosaraju().select_seeds(2);
        let report = graph.check_seed_coverage(&seeds, 2).unwrap();
        assert!(report.is_satisfied());
    }

    #[test]
    fn empty_seed_list_leaves_components_uncovered() {
        let graph = graph_from_edges(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let report = graph.check_seed_coverage(&[], 2).unwrap();
        assert_eq!(report.uncovered, vec!["a".to_string(), "b".to_string()]);
        assert!(!report.is_satisfied());
    }

    #[test]
    fn coverage_rejects_unknown_seed() {
        let graph = graph_from_edges(&["a"], &[]);
        let err = graph
            .check_seed_coverage(&["zz".to_string()], 2)
            .unwrap_err();
        assert!(matches!(err, SeedGraphError::UnknownSeed { .. }));
    }

    #[test]
    fn coverage_holds_on_random_graphs() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=10);
            let density: f64 = rng.random_range(0.0..0.5);
            let graph = random_digraph(&mut rng, n, density);
            let seeds = graph.kosaraju().select_seeds(2);
            let report = graph.check_seed_coverage(&seeds, 2).unwrap();
            assert!(report.is_satisfied(), "uncovered: {:?}", report.uncovered);
        }
    }

    #[test]
    fn symmetrized_antonym_pairs_form_multi_node_components() {
        let ontology = antonym_pair_ontology();
        let kinds = antonym_kinds();
        let graph = PolarityGraph::build(&ontology, &kinds, true);
        let partition = graph.kosaraju();
        assert_eq!(partition.len(), 1);
        assert_eq!(partition.components()[0].len(), 2);
    }

    #[test]
    fn graph_file_round_trip() {
        let graph = graph_from_edges(&["a", "b", "c"], &[("a", "b"), ("b", "a")]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.json");
        graph.save(&path).unwrap();
        let loaded = PolarityGraph::load(&path).unwrap();
        assert_eq!(
            graph.edges().collect::<Vec<_>>(),
            loaded.edges().collect::<Vec<_>>()
        );
        assert_eq!(
            graph.nodes().collect::<Vec<_>>(),
            loaded.nodes().collect::<Vec<_>>()
        );

        let partition = graph.kosaraju();
        let ppath = dir.path().join("partition.json");
        partition.save(&ppath).unwrap();
        assert_eq!(SccPartition::load(&ppath).unwrap(), partition);
    }
}
