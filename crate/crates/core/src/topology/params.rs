//! Central parameter storage, initialization and the freeze mask.

use crate::error::{Error, Result};
use crate::layers::init_params;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::{NetworkTopology, NodeInput, Variant};

/// Name of the auxiliary layer's weight tensor.
pub const AUX_WEIGHT: &str = "aux.weight";

/// Named parameter tensors, iterated in sorted-name order everywhere so
/// updates and serialization are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    map: BTreeMap<String, Tensor<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn empty() -> Self {
        ParamSet { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<T>) {
        self.map.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<T>> {
        self.map
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter tensor `{}`", name)))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.map
            .get_mut(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter tensor `{}`", name)))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.map.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor<T>)> {
        self.map.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn tensor_count(&self) -> usize {
        self.map.len()
    }

    /// Total element count over all tensors.
    pub fn element_count(&self) -> usize {
        self.map.values().map(|t| t.len()).sum()
    }

    /// Zero tensors with the same names and shapes.
    pub fn zeros_like(&self) -> Self {
        ParamSet {
            map: self
                .map
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            map: self.map.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }
}

/// Identity weight for a fresh auxiliary layer: the augmented network then
/// reproduces the base network's scores exactly.
pub fn aux_identity<T: Scalar>(outputs: usize) -> Tensor<T> {
    Tensor::identity(outputs)
}

/// Xavier-initialized parameters for every node, drawn from one stream in
/// node order; the auxiliary weight starts as the identity.
pub fn build_params<T: Scalar>(topology: &NetworkTopology, seed: u64) -> Result<ParamSet<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = topology.node_shapes(1)?;
    let (c, h, w) = topology.arch.input_shape;
    let image = vec![1, c, h, w];
    let mut params = ParamSet::empty();
    for node in &topology.nodes {
        let input = match node.input {
            NodeInput::Image => &image,
            NodeInput::Node(i) => &shapes[i],
        };
        if let Some(p) = init_params::<T>(&node.spec, input, &mut rng)? {
            params.insert(format!("{}.weight", node.name), p.weight);
            params.insert(format!("{}.bias", node.name), p.bias);
        }
    }
    if topology.variant == Variant::McnnAux {
        params.insert(AUX_WEIGHT, aux_identity(topology.output_count()));
    }
    Ok(params)
}

/// Checks that a parameter set has exactly the tensors the topology
/// expects, with matching shapes.
pub fn validate_params<T: Scalar>(topology: &NetworkTopology, params: &ParamSet<T>) -> Result<()> {
    let shapes = topology.node_shapes(1)?;
    let (c, h, w) = topology.arch.input_shape;
    let image = vec![1, c, h, w];
    let mut expected = 0usize;
    for node in &topology.nodes {
        let input = match node.input {
            NodeInput::Image => &image,
            NodeInput::Node(i) => &shapes[i],
        };
        if let Some((wshape, bshape)) = node.spec.param_shapes(input)? {
            for (suffix, shape) in [(".weight", wshape), (".bias", bshape)] {
                let name = format!("{}{}", node.name, suffix);
                let t = params.get(&name)?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::Checkpoint(format!(
                        "tensor `{}` has shape {:?}, topology expects {:?}",
                        name,
                        t.shape(),
                        shape
                    )));
                }
                expected += 1;
            }
        }
    }
    if topology.variant == Variant::McnnAux {
        let n = topology.output_count();
        let t = params.get(AUX_WEIGHT)?;
        if t.shape() != [n, n] {
            return Err(Error::Checkpoint(format!(
                "tensor `{}` has shape {:?}, topology expects {:?}",
                AUX_WEIGHT,
                t.shape(),
                [n, n]
            )));
        }
        expected += 1;
    }
    if expected != params.tensor_count() {
        let known: Vec<&String> = params.names().collect();
        return Err(Error::Checkpoint(format!(
            "parameter set has {} tensors, topology expects {} ({:?})",
            params.tensor_count(),
            expected,
            known
        )));
    }
    Ok(())
}

/// Per-tensor trainable flag. Frozen tensors receive zero-filled gradients
/// and are never touched by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeMask {
    frozen: BTreeMap<String, bool>,
}

impl FreezeMask {
    /// Everything trainable.
    pub fn none<T: Scalar>(params: &ParamSet<T>) -> Self {
        FreezeMask {
            frozen: params.names().map(|n| (n.clone(), false)).collect(),
        }
    }

    /// Everything frozen except the auxiliary weight: the second training
    /// stage.
    pub fn freeze_all_except_aux<T: Scalar>(params: &ParamSet<T>) -> Self {
        FreezeMask {
            frozen: params
                .names()
                .map(|n| (n.clone(), n != AUX_WEIGHT))
                .collect(),
        }
    }

    pub fn all_frozen<T: Scalar>(params: &ParamSet<T>) -> Self {
        FreezeMask {
            frozen: params.names().map(|n| (n.clone(), true)).collect(),
        }
    }

    pub fn is_frozen(&self, name: &str) -> bool {
        self.frozen.get(name).copied().unwrap_or(false)
    }

    pub fn set(&mut self, name: &str, frozen: bool) {
        self.frozen.insert(name.to_string(), frozen);
    }

    /// True when the auxiliary weight is the only trainable tensor, which
    /// lets backward skip the whole layer tree.
    pub fn only_aux_trainable(&self) -> bool {
        self.frozen
            .iter()
            .all(|(name, &frozen)| if name == AUX_WEIGHT { !frozen } else { frozen })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, bool)> {
        self.frozen.iter().map(|(k, &v)| (k, v))
    }
}
