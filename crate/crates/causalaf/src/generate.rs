//! Behavioral-graph sampling: the loop that interleaves the order mask, node
//! sampling, the visibility masks and edge sampling, with optional
//! conditioning on a partial graph.
//!
//! The order mask is applied to the continuous node vector *before* the
//! argmax, with a large positive shift on valid entries, so the emitted type
//! is always a currently valid one. Visibility masking and compaction apply
//! to the conditioning context only; the stored graph always keeps every
//! generated node.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    self, context, discretize, FlowModel, SampleRecord, StepKind, StepRecord,
};
use crate::graph::{
    com_mask, cvm_masks, validate_bg, BehavioralGraph, CausalGraph, GraphDims, TypeCounts,
};

/// Shift added to valid type entries so the argmax can never pick a masked
/// type.
const MASK_SHIFT: f64 = 1.0e6;

/// Which causal masks the sampler applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskMode {
    /// No masks: free node types, every predecessor visible.
    Baseline,
    /// Order mask only: valid node order, unmasked edge contexts.
    OrderMask,
    /// Order mask plus visibility masks with compaction.
    Causal,
}

impl MaskMode {
    pub fn label(&self) -> &'static str {
        match self {
            MaskMode::Baseline => "baseline",
            MaskMode::OrderMask => "order-mask",
            MaskMode::Causal => "causal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(MaskMode::Baseline),
            "order-mask" | "com" => Ok(MaskMode::OrderMask),
            "causal" | "full" => Ok(MaskMode::Causal),
            other => Err(Error::Config(format!("unknown mask mode `{other}`"))),
        }
    }
}

/// Everything a sampling run needs besides the flow parameters.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub cg: CausalGraph,
    pub dims: GraphDims,
    pub temperature: f64,
    pub mask_mode: MaskMode,
    /// Optional partial graph to extend; must be consistent with the causal
    /// graph.
    pub condition: Option<BehavioralGraph>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(cg: CausalGraph, dims: GraphDims, temperature: f64, seed: u64) -> Self {
        SamplerConfig {
            cg,
            dims,
            temperature,
            mask_mode: MaskMode::Causal,
            condition: None,
            seed,
        }
    }

    pub fn with_mask_mode(mut self, mode: MaskMode) -> Self {
        self.mask_mode = mode;
        self
    }

    pub fn with_condition(mut self, condition: BehavioralGraph) -> Self {
        self.condition = Some(condition);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dims.max_nodes == 0 {
            return Err(Error::Config("max_nodes must be at least 1".into()));
        }
        if self.temperature <= 0.0 {
            return Err(Error::NonPositiveTemperature(self.temperature));
        }
        if self.dims.type_count != self.cg.type_count() {
            return Err(Error::ShapeMismatch(format!(
                "dims.type_count {} vs causal graph {}",
                self.dims.type_count,
                self.cg.type_count()
            )));
        }
        Ok(())
    }
}

/// Samples a behavioral graph and the record of every continuous draw along
/// the way. With a condition present this reduces to [`sample_conditional`].
pub fn sample_bg(flow: &FlowModel, cfg: &SamplerConfig) -> Result<(BehavioralGraph, SampleRecord)> {
    cfg.validate()?;
    if flow.dims() != cfg.dims {
        return Err(Error::ShapeMismatch(format!(
            "flow dims {:?} vs sampler dims {:?}",
            flow.dims(),
            cfg.dims
        )));
    }
    let mut bg = match &cfg.condition {
        Some(c) => {
            check_condition(c, cfg)?;
            c.clone()
        }
        None => BehavioralGraph::new(cfg.dims),
    };
    let mut record = SampleRecord::new(cfg.temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts = bg.type_counts();

    for i in bg.node_count()..cfg.dims.max_nodes {
        // Order mask: which types may come next.
        let com = match cfg.mask_mode {
            MaskMode::Baseline => Array1::ones(cfg.dims.type_count),
            _ => match com_mask(&cfg.cg, &counts) {
                Ok(m) => m,
                Err(Error::EmptyMask { generated }) => {
                    if mandatory_types_placed(&cfg.cg, &counts) {
                        break;
                    }
                    return Err(Error::EmptyMask { generated });
                }
                Err(e) => return Err(e),
            },
        };

        // Draw the node row.
        let ctx = context::node_context(&bg, i);
        let moments = flow.node_moments(&ctx);
        let latent = flow::draw_latent(cfg.dims.type_count, cfg.temperature, &mut rng)?;
        let value = flow::apply_layers(&moments, &latent);
        let (log_density, _) = flow::step_log_density(&moments, &value, cfg.temperature);
        record.steps.push(StepRecord {
            kind: StepKind::Node { index: i },
            context: ctx,
            layers: moments,
            latent,
            value: value.clone(),
            log_density,
        });

        let shifted = &com * &value + &com * MASK_SHIFT;
        let onehot = discretize(&shifted, cfg.dims.type_count);
        let type_id = onehot.iter().position(|&v| v == 1.0).unwrap();
        bg.push_node(type_id);
        counts.record(type_id);

        // Edge steps for node i.
        if cfg.dims.edge_dim() == 0 {
            continue;
        }
        match cfg.mask_mode {
            MaskMode::Causal => {
                let masks = cvm_masks(&cfg.cg, &bg, i)?;
                for target in 0..masks.permutation.len() {
                    let ctx = context::edge_context_masked(&bg, &masks, target);
                    sample_edge(flow, cfg, &mut bg, &mut record, &mut rng, i, masks.permutation[target], ctx)?;
                }
            }
            _ => {
                for j in 0..=i {
                    let ctx = context::edge_context(&bg, i, j);
                    sample_edge(flow, cfg, &mut bg, &mut record, &mut rng, i, j, ctx)?;
                }
            }
        }
    }

    Ok((bg, record))
}

fn sample_edge(
    flow: &FlowModel,
    cfg: &SamplerConfig,
    bg: &mut BehavioralGraph,
    record: &mut SampleRecord,
    rng: &mut ChaCha8Rng,
    i: usize,
    j: usize,
    ctx: Array1<f64>,
) -> Result<()> {
    let moments = flow.edge_moments(&ctx);
    let latent = flow::draw_latent(cfg.dims.edge_dim(), cfg.temperature, rng)?;
    let value = flow::apply_layers(&moments, &latent);
    let (log_density, _) = flow::step_log_density(&moments, &value, cfg.temperature);
    record.steps.push(StepRecord {
        kind: StepKind::Edge { from: i, to: j },
        context: ctx,
        layers: moments,
        latent,
        value: value.clone(),
        log_density,
    });
    let slice = discretize(&value, cfg.dims.edge_types);
    bg.set_edge(i, j, &slice);
    Ok(())
}

/// True when every type has reached its minimum instance count, so an empty
/// queue means the scenario is complete rather than stuck.
fn mandatory_types_placed(cg: &CausalGraph, counts: &TypeCounts) -> bool {
    (0..cg.type_count()).all(|t| counts.count(t) >= cg.min_count(t))
}

fn check_condition(condition: &BehavioralGraph, cfg: &SamplerConfig) -> Result<()> {
    if condition.dims() != cfg.dims {
        return Err(Error::InvalidCondition(format!(
            "condition dims {:?} vs sampler dims {:?}",
            condition.dims(),
            cfg.dims
        )));
    }
    let violations = validate_bg(condition, &cfg.cg);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidCondition(text.join("; ")));
    }
    Ok(())
}

/// Extends a partial behavioral graph: conditioned nodes and edges are
/// copied verbatim, the type queue is warm-started from the condition's
/// types, and sampling resumes at the first free index.
pub fn sample_conditional(
    flow: &FlowModel,
    cfg: &SamplerConfig,
    condition: &BehavioralGraph,
) -> Result<(BehavioralGraph, SampleRecord)> {
    let cfg = cfg.clone().with_condition(condition.clone());
    sample_bg(flow, &cfg)
}

/// Serialized behavioral-graph schema: a node list and an edge list with
/// explicit dims, versioned for forward compatibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BgFile {
    pub version: u32,
    pub dims: GraphDims,
    pub nodes: Vec<BgNode>,
    pub edges: Vec<BgEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BgNode {
    pub index: usize,
    pub type_id: usize,
    pub type_name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BgEdge {
    pub from: usize,
    pub to: usize,
    pub edge_type: usize,
    pub attributes: Vec<f64>,
}

pub const BG_FILE_VERSION: u32 = 1;

/// Converts a discretized behavioral graph to its file form. Absent edges
/// (all-zero slices) are omitted.
pub fn bg_to_file(bg: &BehavioralGraph, cg: &CausalGraph) -> BgFile {
    let mut nodes = Vec::with_capacity(bg.node_count());
    for i in 0..bg.node_count() {
        let t = bg.type_of(i);
        nodes.push(BgNode {
            index: i,
            type_id: t,
            type_name: cg.type_name(t).to_string(),
        });
    }
    let mut edges = Vec::new();
    for i in 0..bg.node_count() {
        for j in 0..=i {
            if let Some(edge_type) = bg.edge_type(i, j) {
                edges.push(BgEdge {
                    from: i,
                    to: j,
                    edge_type,
                    attributes: bg.edge_attrs(i, j),
                });
            }
        }
    }
    BgFile {
        version: BG_FILE_VERSION,
        dims: bg.dims(),
        nodes,
        edges,
    }
}

/// Rebuilds a behavioral graph from its file form.
pub fn bg_from_file(file: &BgFile) -> Result<BehavioralGraph> {
    if file.version != BG_FILE_VERSION {
        return Err(Error::Config(format!(
            "behavioral graph file version {} unsupported",
            file.version
        )));
    }
    let mut bg = BehavioralGraph::new(file.dims);
    let mut nodes = file.nodes.clone();
    nodes.sort_by_key(|n| n.index);
    for (k, node) in nodes.iter().enumerate() {
        if node.index != k || node.type_id >= file.dims.type_count {
            return Err(Error::Config(format!(
                "bad node entry (index {}, type {})",
                node.index, node.type_id
            )));
        }
        bg.push_node(node.type_id);
    }
    for e in &file.edges {
        if e.from >= bg.node_count() || e.to > e.from {
            return Err(Error::Config(format!("bad edge ({}, {})", e.from, e.to)));
        }
        if e.edge_type >= file.dims.edge_types || e.attributes.len() != file.dims.attr_dim {
            return Err(Error::Config(format!(
                "bad edge payload on ({}, {})",
                e.from, e.to
            )));
        }
        let mut slice = Array1::zeros(file.dims.edge_dim());
        slice[e.edge_type] = 1.0;
        for (k, &a) in e.attributes.iter().enumerate() {
            slice[file.dims.edge_types + k] = a;
        }
        bg.set_edge(e.from, e.to, &slice);
    }
    Ok(bg)
}

pub fn save_bg(bg: &BehavioralGraph, cg: &CausalGraph, path: &std::path::Path) -> Result<()> {
    let file = bg_to_file(bg, cg);
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_bg(path: &std::path::Path) -> Result<BehavioralGraph> {
    let text = std::fs::read_to_string(path)?;
    let file: BgFile = serde_json::from_str(&text)?;
    bg_from_file(&file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    fn setup() -> (FlowModel, SamplerConfig) {
        let cg = scenarios::pedestrian_causal_graph(1);
        let dims = GraphDims::new(4, cg.type_count(), 3, 4);
        let config = flow::FlowConfig::new(dims).with_hidden(&[16]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let flow = FlowModel::new(config, &mut rng);
        let cfg = SamplerConfig::new(cg, dims, 5.0, 7);
        (flow, cfg)
    }

    #[test]
    fn sampling_is_deterministic() {
        let (flow, cfg) = setup();
        let (bg1, rec1) = sample_bg(&flow, &cfg).unwrap();
        let (bg2, rec2) = sample_bg(&flow, &cfg).unwrap();
        assert_eq!(bg1, bg2);
        assert_eq!(rec1, rec2);
    }

    #[test]
    fn sampled_graphs_validate_clean() {
        let (flow, mut cfg) = setup();
        for seed in 0..200 {
            cfg.seed = seed;
            let (bg, _) = sample_bg(&flow, &cfg).unwrap();
            let violations = validate_bg(&bg, &cfg.cg);
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        }
    }

    #[test]
    fn single_root_single_node() {
        let cg = CausalGraph::build("solo", vec![crate::graph::TypeDecl::new("X", &[])]).unwrap();
        let dims = GraphDims::new(1, 1, 2, 2);
        let config = flow::FlowConfig::new(dims).with_hidden(&[8]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let flow = FlowModel::new(config, &mut rng);
        let cfg = SamplerConfig::new(cg, dims, 1.0, 0);
        let (bg, _) = sample_bg(&flow, &cfg).unwrap();
        assert_eq!(bg.node_count(), 1);
        assert_eq!(bg.type_of(0), 0);
    }

    #[test]
    fn complete_condition_returned_verbatim() {
        let (flow, cfg) = setup();
        let (bg, _) = sample_bg(&flow, &cfg).unwrap();
        assert_eq!(bg.node_count(), 4);
        let (again, record) = sample_conditional(&flow, &cfg, &bg).unwrap();
        assert_eq!(bg, again);
        assert_eq!(record.step_count(), 0);
        assert_eq!(record.log_likelihood(), 0.0);
    }

    #[test]
    fn empty_condition_reduces_to_unconditional() {
        let (flow, cfg) = setup();
        let (plain, rec_plain) = sample_bg(&flow, &cfg).unwrap();
        let empty = BehavioralGraph::new(cfg.dims);
        let (cond, rec_cond) = sample_conditional(&flow, &cfg, &empty).unwrap();
        assert_eq!(plain, cond);
        assert_eq!(rec_plain, rec_cond);
    }

    #[test]
    fn conditional_first_type_is_valid() {
        let (flow, mut cfg) = setup();
        let mut prefix = BehavioralGraph::new(cfg.dims);
        let s = cfg.cg.type_id("S").unwrap();
        prefix.push_node(s);
        // give S its self-loop edge so the prefix is fully formed
        let mut slice = Array1::zeros(cfg.dims.edge_dim());
        slice[1] = 1.0;
        prefix.set_edge(0, 0, &slice);

        let valid: std::collections::BTreeSet<usize> = {
            let mut counts = TypeCounts::new(cfg.cg.type_count());
            counts.record(s);
            crate::graph::valid_type_queue(&cfg.cg, &counts)
        };
        for seed in 0..100 {
            cfg.seed = seed;
            let (bg, _) = sample_conditional(&flow, &cfg, &prefix).unwrap();
            assert_eq!(bg.type_of(0), s);
            assert!(valid.contains(&bg.type_of(1)), "seed {seed}");
        }
    }

    #[test]
    fn invalid_condition_is_rejected() {
        let (flow, cfg) = setup();
        let mut bad = BehavioralGraph::new(cfg.dims);
        bad.push_node(cfg.cg.type_id("A").unwrap()); // A before S
        let err = sample_conditional(&flow, &cfg, &bad).unwrap_err();
        assert!(matches!(err, Error::InvalidCondition(_)));
    }

    #[test]
    fn graph_file_roundtrip() {
        let (flow, cfg) = setup();
        let (bg, _) = sample_bg(&flow, &cfg).unwrap();
        let file = bg_to_file(&bg, &cfg.cg);
        let back = bg_from_file(&file).unwrap();
        assert_eq!(bg, back);
    }

    #[test]
    fn stops_gracefully_when_types_exhausted() {
        // one mandatory root, cap 1, but room for three nodes
        let cg = CausalGraph::build("solo", vec![crate::graph::TypeDecl::new("X", &[])]).unwrap();
        let dims = GraphDims::new(3, 1, 2, 1);
        let config = flow::FlowConfig::new(dims).with_hidden(&[8]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let flow = FlowModel::new(config, &mut rng);
        let cfg = SamplerConfig::new(cg, dims, 1.0, 3);
        let (bg, _) = sample_bg(&flow, &cfg).unwrap();
        assert_eq!(bg.node_count(), 1);
    }
}
