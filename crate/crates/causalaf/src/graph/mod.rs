//! Graph-structured scenario representations and the causal mask operators.
//!
//! Two graphs cooperate during generation:
//!
//! - a [`CausalGraph`] is a type-level DAG supplied by an expert. Each node is
//!   an object *type* (autonomous vehicle, pedestrian, ...) and each edge a
//!   cause-effect relation between types.
//! - a [`BehavioralGraph`] is an instance-level graph produced by the
//!   generative model: one node per concrete object, plus typed, attributed
//!   edges describing the objects' actions and interactions.
//!
//! The causal graph constrains behavioral-graph generation through two masks:
//! the *order mask* ([`com_mask`]) zeroes node types whose causal parents have
//! not been generated yet, and the *visibility masks* ([`cvm_masks`]) hide
//! non-parent nodes from the conditioning context when a node's edges are
//! generated, together with a permutation that compacts the surviving nodes
//! into a contiguous prefix.

mod file;

pub use file::{load_causal_graph, save_causal_graph};

use std::collections::BTreeSet;
use std::fmt;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declaration of one object type, the unit of a causal-graph spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    /// Names of the causal parents of this type.
    #[serde(default)]
    pub parents: Vec<String>,
    /// Whether instances of this type become simulator objects. Outcome
    /// types (e.g. the collision node) are not physical.
    #[serde(default = "default_true")]
    pub physical: bool,
    /// Maximum number of instances of this type in one scenario.
    #[serde(default = "default_one")]
    pub max_count: usize,
    /// Minimum number of instances for a scenario to be complete. Types with
    /// `min_count == 0` are optional (irrelevant traffic, outcome types).
    #[serde(default = "default_one")]
    pub min_count: usize,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

impl TypeDecl {
    pub fn new(name: &str, parents: &[&str]) -> Self {
        TypeDecl {
            name: name.to_string(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            physical: true,
            max_count: 1,
            min_count: 1,
        }
    }

    pub fn non_physical(mut self) -> Self {
        self.physical = false;
        self.min_count = 0;
        self.max_count = 0;
        self
    }

    pub fn optional(mut self, max_count: usize) -> Self {
        self.min_count = 0;
        self.max_count = max_count;
        self
    }
}

/// Type-level DAG of cause-effect relations between scenario object types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    name: String,
    types: Vec<TypeDecl>,
    /// Parent sets resolved to type indices, one per type.
    parent_ids: Vec<BTreeSet<usize>>,
}

impl CausalGraph {
    /// Builds and validates a causal graph from a declaration list.
    ///
    /// Rejects empty specs, dangling parent references (`UnknownType`) and
    /// cyclic parent relations (`CyclicGraph`).
    pub fn build(name: &str, decls: Vec<TypeDecl>) -> Result<Self> {
        if decls.is_empty() {
            return Err(Error::Config("causal graph spec is empty".into()));
        }
        for (k, d) in decls.iter().enumerate() {
            if decls[..k].iter().any(|e| e.name == d.name) {
                return Err(Error::Config(format!("duplicate type `{}`", d.name)));
            }
        }
        let mut parent_ids = Vec::with_capacity(decls.len());
        for d in &decls {
            let mut set = BTreeSet::new();
            for p in &d.parents {
                match decls.iter().position(|e| &e.name == p) {
                    Some(id) => {
                        set.insert(id);
                    }
                    None => {
                        return Err(Error::UnknownType {
                            child: d.name.clone(),
                            parent: p.clone(),
                        })
                    }
                }
            }
            parent_ids.push(set);
        }
        let cg = CausalGraph {
            name: name.to_string(),
            types: decls,
            parent_ids,
        };
        cg.check_acyclic()?;
        Ok(cg)
    }

    /// Kahn's algorithm; reports a type on a cycle if one exists.
    fn check_acyclic(&self) -> Result<()> {
        let n = self.type_count();
        let mut indeg: Vec<usize> = self.parent_ids.iter().map(|p| p.len()).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&t| indeg[t] == 0).collect();
        let mut seen = 0usize;
        while let Some(t) = queue.pop() {
            seen += 1;
            for c in 0..n {
                if self.parent_ids[c].contains(&t) {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        queue.push(c);
                    }
                }
            }
        }
        if seen != n {
            let offender = (0..n).find(|&t| indeg[t] > 0).unwrap();
            return Err(Error::CyclicGraph(self.types[offender].name.clone()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn type_name(&self, id: usize) -> &str {
        &self.types[id].name
    }

    pub fn type_names(&self) -> Vec<&str> {
        self.types.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn type_id(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn parents(&self, id: usize) -> &BTreeSet<usize> {
        &self.parent_ids[id]
    }

    pub fn is_physical(&self, id: usize) -> bool {
        self.types[id].physical
    }

    pub fn max_count(&self, id: usize) -> usize {
        self.types[id].max_count
    }

    pub fn min_count(&self, id: usize) -> usize {
        self.types[id].min_count
    }

    pub fn decls(&self) -> &[TypeDecl] {
        &self.types
    }

    /// Maximum number of physical nodes a scenario can hold.
    pub fn max_nodes(&self) -> usize {
        self.types
            .iter()
            .filter(|t| t.physical)
            .map(|t| t.max_count)
            .sum()
    }

    /// Returns a copy with the directed edge `parent -> child` removed.
    /// Used for structural-distance probes.
    pub fn without_edge(&self, parent: &str, child: &str) -> Result<Self> {
        let p = self
            .type_id(parent)
            .ok_or_else(|| Error::Config(format!("unknown type `{parent}`")))?;
        let c = self
            .type_id(child)
            .ok_or_else(|| Error::Config(format!("unknown type `{child}`")))?;
        let mut out = self.clone();
        out.parent_ids[c].remove(&p);
        out.types[c].parents.retain(|x| x != parent);
        out.name = format!("{}-no-{}-{}", self.name, parent, child);
        Ok(out)
    }

    /// Structural Hamming distance: number of directed edges present in
    /// exactly one of the two graphs. Graphs must share a type list.
    pub fn shd(&self, other: &CausalGraph) -> usize {
        let n = self.type_count();
        let mut d = 0;
        for c in 0..n {
            d += self.parent_ids[c]
                .symmetric_difference(&other.parent_ids[c])
                .count();
        }
        d
    }
}

/// Per-type instance counts of the nodes generated so far.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeCounts(Vec<usize>);

impl TypeCounts {
    pub fn new(type_count: usize) -> Self {
        TypeCounts(vec![0; type_count])
    }

    pub fn from_labels(cg: &CausalGraph, labels: &[&str]) -> Self {
        let mut c = TypeCounts::new(cg.type_count());
        for l in labels {
            let id = cg.type_id(l).expect("unknown label");
            c.0[id] += 1;
        }
        c
    }

    pub fn count(&self, type_id: usize) -> usize {
        self.0[type_id]
    }

    pub fn record(&mut self, type_id: usize) {
        self.0[type_id] += 1;
    }

    pub fn contains(&self, type_id: usize) -> bool {
        self.0[type_id] > 0
    }
}

/// Set of node types that may legally be generated next: all causal parents
/// already present, the type is physical, and its instance cap is not
/// saturated. With nothing generated this is exactly the set of physical
/// roots of the causal graph.
pub fn valid_type_queue(cg: &CausalGraph, generated: &TypeCounts) -> BTreeSet<usize> {
    (0..cg.type_count())
        .filter(|&t| {
            cg.is_physical(t)
                && generated.count(t) < cg.max_count(t)
                && cg.parents(t).iter().all(|&p| generated.contains(p))
        })
        .collect()
}

/// Binary order mask over node types: 1 exactly at [`valid_type_queue`]
/// members. Errors with `EmptyMask` when no type is valid, which is the
/// generation-termination signal.
pub fn com_mask(cg: &CausalGraph, generated: &TypeCounts) -> Result<Array1<f64>> {
    let queue = valid_type_queue(cg, generated);
    if queue.is_empty() {
        let total: usize = (0..cg.type_count()).map(|t| generated.count(t)).sum();
        return Err(Error::EmptyMask { generated: total });
    }
    let mut mask = Array1::zeros(cg.type_count());
    for t in queue {
        mask[t] = 1.0;
    }
    Ok(mask)
}

/// Dimensions of a behavioral graph and of the flow operating on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDims {
    /// Maximum node count.
    pub max_nodes: usize,
    /// Number of node types.
    pub type_count: usize,
    /// Number of edge types (one-hot block width).
    pub edge_types: usize,
    /// Number of continuous edge attributes.
    pub attr_dim: usize,
}

impl GraphDims {
    pub fn new(max_nodes: usize, type_count: usize, edge_types: usize, attr_dim: usize) -> Self {
        GraphDims {
            max_nodes,
            type_count,
            edge_types,
            attr_dim,
        }
    }

    /// Edge slice width.
    pub fn edge_dim(&self) -> usize {
        self.edge_types + self.attr_dim
    }

    /// Length of a flattened conditioning context: all node rows plus all
    /// edge slices, ungenerated entries zero-padded.
    pub fn context_len(&self) -> usize {
        self.max_nodes * self.type_count + self.max_nodes * self.max_nodes * self.edge_dim()
    }
}

/// Instance-level scenario graph: a node matrix of one-hot type rows and a
/// lower-triangular edge tensor of one-hot edge types plus continuous
/// attributes. Nodes are stored in generation order; a graph may hold fewer
/// than `max_nodes` nodes while being built or when generation terminated
/// early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehavioralGraph {
    dims: GraphDims,
    node_count: usize,
    /// `max_nodes x type_count`; row i is one-hot once node i exists.
    nodes: Array2<f64>,
    /// `max_nodes x max_nodes x edge_dim`; slice (i, j) may be nonzero only
    /// for j <= i.
    edges: Array3<f64>,
    /// Type of each generated node, in generation order.
    type_of: Vec<usize>,
}

impl BehavioralGraph {
    pub fn new(dims: GraphDims) -> Self {
        BehavioralGraph {
            dims,
            node_count: 0,
            nodes: Array2::zeros((dims.max_nodes, dims.type_count)),
            edges: Array3::zeros((dims.max_nodes, dims.max_nodes, dims.edge_dim())),
            type_of: Vec::new(),
        }
    }

    pub fn dims(&self) -> GraphDims {
        self.dims
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_empty(&self) -> bool {
        self.node_count == 0
    }

    pub fn type_of(&self, node: usize) -> usize {
        self.type_of[node]
    }

    pub fn types(&self) -> &[usize] {
        &self.type_of
    }

    pub fn type_counts(&self) -> TypeCounts {
        let mut c = TypeCounts::new(self.dims.type_count);
        for &t in &self.type_of {
            c.record(t);
        }
        c
    }

    /// Appends a node of the given type as a one-hot row.
    pub fn push_node(&mut self, type_id: usize) {
        assert!(self.node_count < self.dims.max_nodes, "graph is full");
        assert!(type_id < self.dims.type_count, "type out of range");
        let i = self.node_count;
        self.nodes.row_mut(i).fill(0.0);
        self.nodes[(i, type_id)] = 1.0;
        self.type_of.push(type_id);
        self.node_count += 1;
    }

    pub fn node_row(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.nodes.row(i)
    }

    pub fn nodes(&self) -> &Array2<f64> {
        &self.nodes
    }

    pub fn edges(&self) -> &Array3<f64> {
        &self.edges
    }

    pub fn edge_slice(&self, i: usize, j: usize) -> ndarray::ArrayView1<'_, f64> {
        self.edges.slice(ndarray::s![i, j, ..])
    }

    /// Writes the full edge slice (i, j); requires j <= i < node_count.
    pub fn set_edge(&mut self, i: usize, j: usize, values: &Array1<f64>) {
        assert!(j <= i && i < self.node_count, "edge out of order");
        assert_eq!(values.len(), self.dims.edge_dim());
        self.edges
            .slice_mut(ndarray::s![i, j, ..])
            .assign(values);
    }

    /// True when the edge slice (i, j) holds any nonzero entry.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_slice(i, j).iter().any(|&v| v != 0.0)
    }

    /// Edge type of (i, j): index of the one-hot block maximum, or None when
    /// the slice is absent (all zero).
    pub fn edge_type(&self, i: usize, j: usize) -> Option<usize> {
        if !self.has_edge(i, j) {
            return None;
        }
        let slice = self.edge_slice(i, j);
        let block = &slice.as_slice().unwrap()[..self.dims.edge_types];
        let (idx, _) = block
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| {
                if v > acc.1 {
                    (k, v)
                } else {
                    acc
                }
            });
        Some(idx)
    }

    /// Continuous attribute tail of edge (i, j).
    pub fn edge_attrs(&self, i: usize, j: usize) -> Vec<f64> {
        self.edge_slice(i, j)
            .iter()
            .skip(self.dims.edge_types)
            .copied()
            .collect()
    }
}

/// Per-step generation masks for node `i`: the order mask over types, the
/// visibility masks over the node matrix and edge tensor, and the compaction
/// permutation over surviving node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationMasks {
    /// Length-n binary vector; 1 at currently valid node types.
    pub com: Array1<f64>,
    /// `max_nodes x type_count`; zero rows hide non-parent nodes.
    pub cvm_node: Array2<f64>,
    /// `max_nodes x max_nodes x edge_dim`; zero slices hide all edges that
    /// touch a non-parent node.
    pub cvm_edge: Array3<f64>,
    /// Surviving original node indices in generation order; position in this
    /// vector is the index after compaction. The last entry is node `i`
    /// itself.
    pub permutation: Vec<usize>,
}

impl GenerationMasks {
    /// Number of surviving nodes (parents of node i, plus node i).
    pub fn survivor_count(&self) -> usize {
        self.permutation.len()
    }

    /// Inverse of the compaction permutation: original index -> compacted
    /// position, when the node survives.
    pub fn compacted_position(&self, original: usize) -> Option<usize> {
        self.permutation.iter().position(|&o| o == original)
    }
}

/// Visibility masks and compaction permutation for generating the edges of
/// node `i`. A predecessor `j < i` survives iff its type is a causal parent
/// of node i's type; node i itself always survives and is moved to the slot
/// right after its surviving parents.
pub fn cvm_masks(cg: &CausalGraph, bg: &BehavioralGraph, i: usize) -> Result<GenerationMasks> {
    if i >= bg.node_count() {
        return Err(Error::IndexOutOfRange {
            index: i,
            count: bg.node_count(),
        });
    }
    let dims = bg.dims();
    let parents = cg.parents(bg.type_of(i));
    let mut survivors: Vec<usize> = (0..i).filter(|&j| parents.contains(&bg.type_of(j))).collect();
    survivors.push(i);

    let mut cvm_node = Array2::zeros((dims.max_nodes, dims.type_count));
    let mut cvm_edge = Array3::zeros((dims.max_nodes, dims.max_nodes, dims.edge_dim()));
    for &s in &survivors {
        cvm_node.row_mut(s).fill(1.0);
    }
    for &a in &survivors {
        for &b in &survivors {
            cvm_edge.slice_mut(ndarray::s![a, b, ..]).fill(1.0);
        }
    }

    // Order mask for this step, from the types generated before node i.
    let mut counts = TypeCounts::new(dims.type_count);
    for j in 0..i {
        counts.record(bg.type_of(j));
    }
    let com = com_mask(cg, &counts).unwrap_or_else(|_| Array1::zeros(dims.type_count));

    Ok(GenerationMasks {
        com,
        cvm_node,
        cvm_edge,
        permutation: survivors,
    })
}

/// A single well-formedness defect of a behavioral graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Node's type has a causal parent with no instance generated earlier.
    OrderViolation { node: usize, missing_parent: usize },
    /// More instances of a type than its cap allows.
    MultiplicityViolation { type_id: usize, count: usize, max: usize },
    /// A non-physical type was instantiated.
    NonPhysicalNode { node: usize, type_id: usize },
    /// A node row is not one-hot.
    MalformedNodeRow { node: usize },
    /// An edge exists above the diagonal.
    UpperTriangularEdge { i: usize, j: usize },
    /// An edge's type block is not one-hot.
    MalformedEdgeType { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OrderViolation { node, missing_parent } => write!(
                f,
                "node {node} generated before any instance of parent type {missing_parent}"
            ),
            Violation::MultiplicityViolation { type_id, count, max } => {
                write!(f, "type {type_id} has {count} instances (max {max})")
            }
            Violation::NonPhysicalNode { node, type_id } => {
                write!(f, "node {node} instantiates non-physical type {type_id}")
            }
            Violation::MalformedNodeRow { node } => write!(f, "node row {node} is not one-hot"),
            Violation::UpperTriangularEdge { i, j } => {
                write!(f, "edge ({i}, {j}) above the diagonal")
            }
            Violation::MalformedEdgeType { i, j } => {
                write!(f, "edge ({i}, {j}) type block is not one-hot")
            }
        }
    }
}

/// Checks a fully discretized behavioral graph against its causal graph:
/// topological node order, multiplicity caps, physicality, one-hot blocks
/// and lower-triangular edge structure. Returns all defects found.
pub fn validate_bg(bg: &BehavioralGraph, cg: &CausalGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let dims = bg.dims();
    let mut counts = TypeCounts::new(dims.type_count);

    for i in 0..bg.node_count() {
        let t = bg.type_of(i);
        if !cg.is_physical(t) {
            out.push(Violation::NonPhysicalNode { node: i, type_id: t });
        }
        for &p in cg.parents(t) {
            if !counts.contains(p) {
                out.push(Violation::OrderViolation {
                    node: i,
                    missing_parent: p,
                });
            }
        }
        counts.record(t);

        let row = bg.node_row(i);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != dims.type_count {
            out.push(Violation::MalformedNodeRow { node: i });
        }
    }

    for t in 0..dims.type_count {
        let c = counts.count(t);
        // Non-physical instantiation is reported separately above.
        if cg.is_physical(t) && c > cg.max_count(t) {
            out.push(Violation::MultiplicityViolation {
                type_id: t,
                count: c,
                max: cg.max_count(t),
            });
        }
    }

    for i in 0..dims.max_nodes {
        for j in 0..dims.max_nodes {
            if !bg.has_edge(i, j) {
                continue;
            }
            if j > i || i >= bg.node_count() {
                out.push(Violation::UpperTriangularEdge { i, j });
                continue;
            }
            let slice = bg.edge_slice(i, j);
            let block = &slice.as_slice().unwrap()[..dims.edge_types];
            let ones = block.iter().filter(|&&v| v == 1.0).count();
            let zeros = block.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != dims.edge_types {
                out.push(Violation::MalformedEdgeType { i, j });
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn pedestrian_cg() -> CausalGraph {
        scenarios::pedestrian_causal_graph(1)
    }

    #[test]
    fn builds_pedestrian_graph() {
        let cg = pedestrian_cg();
        assert_eq!(cg.type_count(), 5);
        let a = cg.type_id("A").unwrap();
        let s = cg.type_id("S").unwrap();
        assert!(cg.parents(a).contains(&s));
        let c = cg.type_id("C").unwrap();
        assert!(!cg.is_physical(c));
        assert_eq!(cg.parents(c).len(), 2);
    }

    #[test]
    fn single_type_no_parents_is_valid() {
        let cg = CausalGraph::build("solo", vec![TypeDecl::new("X", &[])]).unwrap();
        assert_eq!(cg.type_count(), 1);
        assert!(cg.parents(0).is_empty());
    }

    #[test]
    fn two_cycle_is_rejected() {
        let err = CausalGraph::build(
            "bad",
            vec![TypeDecl::new("A", &["P"]), TypeDecl::new("P", &["A"])],
        )
        .unwrap_err();
        assert!(matches!(err, Error::CyclicGraph(_)));
    }

    #[test]
    fn unknown_parent_is_rejected() {
        let err = CausalGraph::build("bad", vec![TypeDecl::new("A", &["Z"])]).unwrap_err();
        assert!(matches!(err, Error::UnknownType { .. }));
    }

    #[test]
    fn queue_from_empty_is_physical_roots() {
        let cg = pedestrian_cg();
        let queue = valid_type_queue(&cg, &TypeCounts::new(cg.type_count()));
        let names: Vec<&str> = queue.iter().map(|&t| cg.type_name(t)).collect();
        assert_eq!(names, vec!["S", "P", "I"]);
    }

    #[test]
    fn queue_after_s_admits_a() {
        let cg = pedestrian_cg();
        let generated = TypeCounts::from_labels(&cg, &["S"]);
        let queue = valid_type_queue(&cg, &generated);
        let names: Vec<&str> = queue.iter().map(|&t| cg.type_name(t)).collect();
        assert_eq!(names, vec!["A", "P", "I"]);
    }

    #[test]
    fn isolated_types_all_valid() {
        let cg = CausalGraph::build(
            "iso",
            vec![
                TypeDecl::new("X", &[]),
                TypeDecl::new("Y", &[]),
                TypeDecl::new("Z", &[]),
            ],
        )
        .unwrap();
        let queue = valid_type_queue(&cg, &TypeCounts::new(3));
        assert_eq!(queue.len(), 3);
    }

    #[test]
    fn com_matches_queue_on_pedestrian() {
        // Type order in the pedestrian graph is (A, P, S, I, C).
        let cg = scenarios::pedestrian_causal_graph_spec_order(1);
        let mask = com_mask(&cg, &TypeCounts::new(cg.type_count())).unwrap();
        assert_eq!(mask.to_vec(), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn com_all_ones_over_isolated_physical() {
        let cg = CausalGraph::build(
            "iso",
            vec![TypeDecl::new("X", &[]), TypeDecl::new("Y", &[])],
        )
        .unwrap();
        let mask = com_mask(&cg, &TypeCounts::new(2)).unwrap();
        assert_eq!(mask.to_vec(), vec![1.0, 1.0]);
    }

    #[test]
    fn com_errors_when_saturated() {
        let cg = pedestrian_cg();
        let mut generated = TypeCounts::new(cg.type_count());
        for t in 0..cg.type_count() {
            for _ in 0..cg.max_count(t) {
                generated.record(t);
            }
        }
        assert!(matches!(
            com_mask(&cg, &generated),
            Err(Error::EmptyMask { .. })
        ));
    }

    /// Three-node causal graph from a three-object scenario: a -> c, b
    /// isolated. Generating edges for c must hide b and compact c into b's
    /// former slot.
    #[test]
    fn cvm_hides_non_parent_and_compacts() {
        let cg = CausalGraph::build(
            "abc",
            vec![
                TypeDecl::new("a", &[]),
                TypeDecl::new("b", &[]),
                TypeDecl::new("c", &["a"]),
            ],
        )
        .unwrap();
        let dims = GraphDims::new(3, 3, 2, 2);
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(0);
        bg.push_node(1);
        bg.push_node(2);
        let masks = cvm_masks(&cg, &bg, 2).unwrap();
        assert_eq!(masks.permutation, vec![0, 2]);
        assert!(masks.cvm_node.row(0).iter().all(|&v| v == 1.0));
        assert!(masks.cvm_node.row(1).iter().all(|&v| v == 0.0));
        assert!(masks.cvm_node.row(2).iter().all(|&v| v == 1.0));
        // every edge slice touching b is hidden
        for k in 0..3 {
            assert!(masks
                .cvm_edge
                .slice(ndarray::s![1, k, ..])
                .iter()
                .all(|&v| v == 0.0));
            assert!(masks
                .cvm_edge
                .slice(ndarray::s![k, 1, ..])
                .iter()
                .all(|&v| v == 0.0));
        }
        assert!(masks
            .cvm_edge
            .slice(ndarray::s![2, 0, ..])
            .iter()
            .all(|&v| v == 1.0));
        assert_eq!(masks.compacted_position(2), Some(1));
    }

    #[test]
    fn cvm_at_first_node_is_identity() {
        let cg = pedestrian_cg();
        let dims = GraphDims::new(4, 5, 3, 4);
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(cg.type_id("S").unwrap());
        let masks = cvm_masks(&cg, &bg, 0).unwrap();
        assert_eq!(masks.permutation, vec![0]);
    }

    #[test]
    fn cvm_all_parents_keeps_everything() {
        let cg = CausalGraph::build(
            "chain",
            vec![
                TypeDecl::new("x", &[]),
                TypeDecl::new("y", &[]),
                TypeDecl::new("z", &["x", "y"]),
            ],
        )
        .unwrap();
        let dims = GraphDims::new(3, 3, 2, 1);
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(0);
        bg.push_node(1);
        bg.push_node(2);
        let masks = cvm_masks(&cg, &bg, 2).unwrap();
        assert_eq!(masks.permutation, vec![0, 1, 2]);
        for j in 0..3 {
            assert!(masks.cvm_node.row(j).iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn cvm_out_of_range_errors() {
        let cg = pedestrian_cg();
        let bg = BehavioralGraph::new(GraphDims::new(4, 5, 3, 4));
        assert!(matches!(
            cvm_masks(&cg, &bg, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn cvm_application_is_idempotent() {
        let cg = pedestrian_cg();
        let dims = GraphDims::new(4, 5, 3, 4);
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(cg.type_id("S").unwrap());
        bg.push_node(cg.type_id("P").unwrap());
        bg.push_node(cg.type_id("A").unwrap());
        let masks = cvm_masks(&cg, &bg, 2).unwrap();
        let once = &masks.cvm_node * bg.nodes();
        let twice = &masks.cvm_node * &once;
        assert_eq!(once, twice);
    }

    #[test]
    fn validate_flags_order_violation() {
        let cg = pedestrian_cg();
        let dims = GraphDims::new(4, 5, 3, 4);
        let mut bg = BehavioralGraph::new(dims);
        bg.push_node(cg.type_id("A").unwrap()); // A before S
        bg.push_node(cg.type_id("S").unwrap());
        let violations = validate_bg(&bg, &cg);
        assert_eq!(
            violations
                .iter()
                .filter(|v| matches!(v, Violation::OrderViolation { .. }))
                .count(),
            1
        );
    }

    #[test]
    fn validate_empty_graph_is_clean() {
        let cg = pedestrian_cg();
        let bg = BehavioralGraph::new(GraphDims::new(4, 5, 3, 4));
        assert!(validate_bg(&bg, &cg).is_empty());
    }

    #[test]
    fn shd_counts_edge_differences() {
        let cg = pedestrian_cg();
        let reduced = cg.without_edge("S", "A").unwrap();
        assert_eq!(cg.shd(&reduced), 1);
        assert_eq!(cg.shd(&cg), 0);
    }
}
