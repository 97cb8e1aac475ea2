//! Construction of the three network variants as wired layer graphs.
//!
//! All variants share the same pattern: a convolutional trunk common to all
//! attributes, third conv blocks per attribute group (late groups share
//! one), then a fully connected path per group ending in one output unit
//! per attribute. The auxiliary variant appends a bias-free linear layer
//! over the concatenated attribute scores.

pub mod attributes;
pub mod check;
pub mod network;
pub mod params;

pub use attributes::{sanitize, AttributeVocab, GroupSpec, CELEBA_ATTRIBUTES, DEFAULT_GROUPS};
pub use network::{backward_full, forward_full, forward_full_cached, NetworkCache};
pub use params::{build_params, validate_params, FreezeMask, ParamSet, AUX_WEIGHT};

use crate::error::{Error, Result};
use crate::layers::LayerSpec;
use std::collections::BTreeMap;

/// Architecture dimensions and hyperparameters, enough to rebuild a
/// topology from a checkpoint header.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    /// Channels of the three conv stages.
    pub conv_channels: [usize; 3],
    pub conv_kernels: [usize; 3],
    pub conv_strides: [usize; 3],
    pub conv_pads: [usize; 3],
    pub pool_kernels: [usize; 3],
    pub pool_strides: [usize; 3],
    pub lrn_size: usize,
    pub lrn_alpha: f64,
    pub lrn_beta: f64,
    pub lrn_k: f64,
    pub fc_units: usize,
    pub dropout_rate: f64,
    /// (C, H, W) after cropping.
    pub input_shape: (usize, usize, usize),
    /// Feed sigmoid(scores) instead of raw scores into the auxiliary layer.
    pub aux_on_sigmoid: bool,
}

impl ArchConfig {
    /// Full-size configuration for 227x227 inputs.
    pub fn paper() -> Self {
        ArchConfig {
            conv_channels: [75, 200, 300],
            conv_kernels: [7, 5, 3],
            conv_strides: [4, 1, 1],
            conv_pads: [0, 2, 1],
            pool_kernels: [3, 3, 5],
            pool_strides: [2, 2, 5],
            lrn_size: 5,
            lrn_alpha: 1e-4,
            lrn_beta: 0.75,
            lrn_k: 2.0,
            fc_units: 512,
            dropout_rate: 0.5,
            input_shape: (3, 227, 227),
            aux_on_sigmoid: false,
        }
    }

    /// Desk-scale configuration for 16x16 inputs: same wiring, small dims.
    pub fn tiny() -> Self {
        ArchConfig {
            conv_channels: [8, 16, 24],
            conv_kernels: [3, 3, 3],
            conv_strides: [1, 1, 1],
            conv_pads: [1, 1, 1],
            pool_kernels: [2, 2, 2],
            pool_strides: [2, 2, 2],
            lrn_size: 5,
            lrn_alpha: 1e-4,
            lrn_beta: 0.75,
            lrn_k: 2.0,
            fc_units: 32,
            dropout_rate: 0.5,
            input_shape: (3, 16, 16),
            aux_on_sigmoid: false,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::Config(format!(
                "unknown scale `{}` (expected paper or tiny)",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Single-attribute network with one branch's architecture.
    Independent { attribute: usize },
    Mcnn,
    McnnAux,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Independent { .. } => "independent",
            Variant::Mcnn => "mcnn",
            Variant::McnnAux => "mcnn_aux",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeInput {
    Image,
    Node(usize),
}

/// A named layer wired to exactly one input.
#[derive(Debug, Clone, PartialEq)]
pub struct TopoNode {
    pub name: String,
    pub spec: LayerSpec,
    pub input: NodeInput,
}

/// The wired graph of layers for one network variant. Nodes are stored in
/// topological order (every node's input precedes it).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub variant: Variant,
    pub arch: ArchConfig,
    pub vocab: AttributeVocab,
    pub groups: GroupSpec,
    pub nodes: Vec<TopoNode>,
    /// Node index of each group's output layer.
    pub group_heads: Vec<usize>,
    /// Attribute index -> (group index, unit within the group head).
    pub output_map: Vec<(usize, usize)>,
}

struct Builder {
    nodes: Vec<TopoNode>,
}

impl Builder {
    fn push(&mut self, name: String, spec: LayerSpec, input: NodeInput) -> usize {
        self.nodes.push(TopoNode { name, spec, input });
        self.nodes.len() - 1
    }

    /// conv -> relu -> pool -> lrn block; returns the lrn node index.
    fn conv_block(&mut self, label: &str, stage: usize, arch: &ArchConfig, input: NodeInput) -> usize {
        let conv = self.push(
            label.to_string(),
            LayerSpec::Conv {
                out_channels: arch.conv_channels[stage],
                kernel: (arch.conv_kernels[stage], arch.conv_kernels[stage]),
                stride: arch.conv_strides[stage],
                pad: arch.conv_pads[stage],
            },
            input,
        );
        let relu = self.push(format!("{}_relu", label), LayerSpec::Relu, NodeInput::Node(conv));
        let pool = self.push(
            format!("{}_pool", label),
            LayerSpec::MaxPool {
                kernel: arch.pool_kernels[stage],
                stride: arch.pool_strides[stage],
            },
            NodeInput::Node(relu),
        );
        self.push(
            format!("{}_lrn", label),
            LayerSpec::Lrn {
                local_size: arch.lrn_size,
                alpha: arch.lrn_alpha,
                beta: arch.lrn_beta,
                k: arch.lrn_k,
            },
            NodeInput::Node(pool),
        )
    }

    /// fc1 -> relu -> dropout -> fc2 -> relu -> dropout -> output(units).
    fn fc_path(&mut self, group: &str, arch: &ArchConfig, input: usize, out_units: usize) -> usize {
        let mut prev = input;
        for fc in ["fc1", "fc2"] {
            let dense = self.push(
                format!("{}_{}", fc, group),
                LayerSpec::FullyConnected { units: arch.fc_units },
                NodeInput::Node(prev),
            );
            let relu = self.push(
                format!("{}_{}_relu", fc, group),
                LayerSpec::Relu,
                NodeInput::Node(dense),
            );
            prev = self.push(
                format!("{}_{}_drop", fc, group),
                LayerSpec::Dropout { rate: arch.dropout_rate },
                NodeInput::Node(relu),
            );
        }
        self.push(
            format!("out_{}", group),
            LayerSpec::FullyConnected { units: out_units },
            NodeInput::Node(prev),
        )
    }
}

fn build(
    variant: Variant,
    vocab: AttributeVocab,
    groups: GroupSpec,
    arch: ArchConfig,
) -> Result<NetworkTopology> {
    let mut b = Builder { nodes: Vec::new() };
    let trunk1 = b.conv_block("conv1", 0, &arch, NodeInput::Image);
    let trunk2 = b.conv_block("conv2", 1, &arch, NodeInput::Node(trunk1));

    // one third-conv block per distinct branch label
    let mut branch_nodes: BTreeMap<String, usize> = BTreeMap::new();
    for branch in groups.branches() {
        let node = b.conv_block(&format!("conv3_{}", branch), 2, &arch, NodeInput::Node(trunk2));
        branch_nodes.insert(branch, node);
    }

    let mut group_heads = Vec::with_capacity(groups.group_count());
    for g in 0..groups.group_count() {
        let branch = groups.branch_of(g);
        let conv3 = branch_nodes[&branch];
        let head = b.fc_path(&sanitize(groups.group_name(g)), &arch, conv3, groups.members(g).len());
        group_heads.push(head);
    }

    let outputs: usize = match variant {
        Variant::Independent { .. } => 1,
        _ => vocab.len(),
    };
    let mut output_map = vec![(usize::MAX, usize::MAX); outputs];
    for g in 0..groups.group_count() {
        for (unit, &attr) in groups.members(g).iter().enumerate() {
            let slot = match variant {
                Variant::Independent { attribute } => {
                    if attr != attribute {
                        return Err(Error::Config(
                            "independent variant grouping must contain exactly its attribute".into(),
                        ));
                    }
                    0
                }
                _ => attr,
            };
            output_map[slot] = (g, unit);
        }
    }
    if output_map.iter().any(|&(g, _)| g == usize::MAX) {
        return Err(Error::Config(
            "output map does not cover every attribute".into(),
        ));
    }

    let topo = NetworkTopology {
        variant,
        arch,
        vocab,
        groups,
        nodes: b.nodes,
        group_heads,
        output_map,
    };
    // surfaces bad dimensions (window larger than input et al) at build time
    topo.node_shapes(1)?;
    Ok(topo)
}

/// Multi-task network: shared trunk, per-group branches, one output unit
/// per attribute.
pub fn build_mcnn(
    vocab: &AttributeVocab,
    groups: &GroupSpec,
    arch: &ArchConfig,
) -> Result<NetworkTopology> {
    build(Variant::Mcnn, vocab.clone(), groups.clone(), arch.clone())
}

/// Single-attribute network with the same layer dimensions as one branch.
pub fn build_independent(
    vocab: &AttributeVocab,
    attribute: &str,
    arch: &ArchConfig,
) -> Result<NetworkTopology> {
    let idx = vocab
        .index(attribute)
        .ok_or_else(|| Error::Config(format!("unknown attribute `{}`", attribute)))?;
    let groups = GroupSpec::solo(vocab, attribute)?;
    build(
        Variant::Independent { attribute: idx },
        vocab.clone(),
        groups,
        arch.clone(),
    )
}

/// Appends the score-level auxiliary layer to a trained multi-task
/// topology. The caller freezes existing parameters via
/// [`FreezeMask::freeze_all_except_aux`] and initializes the new weight to
/// the identity with [`params::aux_identity`].
pub fn attach_aux(topology: &NetworkTopology) -> Result<NetworkTopology> {
    if topology.variant != Variant::Mcnn {
        return Err(Error::Contract(format!(
            "auxiliary layer attaches to the mcnn variant, got {}",
            topology.variant.tag()
        )));
    }
    let mut out = topology.clone();
    out.variant = Variant::McnnAux;
    Ok(out)
}

impl NetworkTopology {
    /// Shape of every node's output for the given batch size, in node order.
    pub fn node_shapes(&self, batch: usize) -> Result<Vec<Vec<usize>>> {
        let (c, h, w) = self.arch.input_shape;
        let image = vec![batch, c, h, w];
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let input = match node.input {
                NodeInput::Image => &image,
                NodeInput::Node(i) => &shapes[i],
            };
            let out = node.spec.output_shape(input).map_err(|e| {
                Error::Dimension(format!("node `{}`: {}", node.name, e))
            })?;
            shapes.push(out);
        }
        Ok(shapes)
    }

    /// Number of score columns this variant produces.
    pub fn output_count(&self) -> usize {
        self.output_map.len()
    }

    /// Parameter element count per named tensor, from shape inference.
    pub fn count_params(&self) -> Result<(usize, BTreeMap<String, usize>)> {
        let shapes = self.node_shapes(1)?;
        let (c, h, w) = self.arch.input_shape;
        let image = vec![1, c, h, w];
        let mut per_layer = BTreeMap::new();
        let mut total = 0usize;
        for (i, node) in self.nodes.iter().enumerate() {
            let input = match node.input {
                NodeInput::Image => &image,
                NodeInput::Node(j) => &shapes[j],
            };
            if let Some((wshape, bshape)) = node.spec.param_shapes(input)? {
                let n: usize =
                    wshape.iter().product::<usize>() + bshape.iter().product::<usize>();
                per_layer.insert(node.name.clone(), n);
                total += n;
            }
            let _ = i;
        }
        if self.variant == Variant::McnnAux {
            let n = self.output_count() * self.output_count();
            per_layer.insert(AUX_WEIGHT.to_string(), n);
            total += n;
        }
        Ok((total, per_layer))
    }
}
