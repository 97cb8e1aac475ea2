//! Whole-network forward and backward passes over a wired topology.

use crate::error::{Error, Result};
use crate::layers::{self, Cache, LayerParams, Mode};
use crate::scalar::Scalar;
use crate::tensor::{matmul, matmul_a_bt, matmul_at_b, Tensor};
use rand_chacha::ChaCha8Rng;

use super::params::{validate_params, ParamSet, AUX_WEIGHT};
use super::{FreezeMask, NetworkTopology, NodeInput, Variant};

/// Per-node caches from a train-mode forward pass, plus what the auxiliary
/// layer backward needs.
pub struct NetworkCache<T> {
    node_caches: Vec<Cache<T>>,
    /// Raw concatenated scores before the auxiliary layer.
    raw_scores: Option<Tensor<T>>,
    /// The tensor actually fed into the auxiliary layer (raw scores, or
    /// sigmoid of them when `aux_on_sigmoid` is set).
    aux_input: Option<Tensor<T>>,
    mode: Mode,
}

fn layer_params<T: Scalar>(
    params: &ParamSet<T>,
    node_name: &str,
    spec: &layers::LayerSpec,
) -> Result<Option<LayerParams<T>>> {
    match spec {
        layers::LayerSpec::Conv { .. } | layers::LayerSpec::FullyConnected { .. } => {
            let weight = params.get(&format!("{}.weight", node_name))?.clone();
            let bias = params.get(&format!("{}.bias", node_name))?.clone();
            Ok(Some(LayerParams { weight, bias }))
        }
        _ => Ok(None),
    }
}

fn check_batch<T: Scalar>(topology: &NetworkTopology, batch: &Tensor<T>) -> Result<usize> {
    let (c, h, w) = topology.arch.input_shape;
    if batch.rank() != 4 || batch.shape()[1..] != [c, h, w] {
        return Err(Error::Dimension(format!(
            "batch shape {:?} does not match input shape [N, {}, {}, {}]",
            batch.shape(),
            c,
            h,
            w
        )));
    }
    Ok(batch.shape()[0])
}

fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

/// Gathers group head outputs into the score matrix, columns in
/// vocabulary order.
fn assemble_scores<T: Scalar>(
    topology: &NetworkTopology,
    head_outputs: &[&Tensor<T>],
    n: usize,
) -> Tensor<T> {
    let outputs = topology.output_count();
    let mut scores = Tensor::zeros(&[n, outputs]);
    for (slot, &(g, unit)) in topology.output_map.iter().enumerate() {
        let head = head_outputs[g];
        let width = head.shape()[1];
        for row in 0..n {
            scores.data_mut()[row * outputs + slot] = head.data()[row * width + unit];
        }
    }
    scores
}

fn run_forward<T: Scalar>(
    topology: &NetworkTopology,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
    want_cache: bool,
) -> Result<(Tensor<T>, Option<NetworkCache<T>>)> {
    let n = check_batch(topology, batch)?;
    validate_params(topology, params)?;
    let mut outputs: Vec<Tensor<T>> = Vec::with_capacity(topology.nodes.len());
    let mut caches: Vec<Cache<T>> = Vec::with_capacity(if want_cache {
        topology.nodes.len()
    } else {
        0
    });
    for node in &topology.nodes {
        let input = match node.input {
            NodeInput::Image => batch,
            NodeInput::Node(i) => &outputs[i],
        };
        let p = layer_params(params, &node.name, &node.spec)?;
        let out = if want_cache {
            let (out, cache) =
                layers::forward_cached(&node.spec, p.as_ref(), input, mode, rng.as_deref_mut())?;
            caches.push(cache);
            out
        } else {
            layers::forward(&node.spec, p.as_ref(), input, mode, rng.as_deref_mut())?
        };
        outputs.push(out);
    }
    let head_refs: Vec<&Tensor<T>> = topology.group_heads.iter().map(|&i| &outputs[i]).collect();
    let raw = assemble_scores(topology, &head_refs, n);

    let (scores, raw_scores, aux_input) = if topology.variant == Variant::McnnAux {
        let aux_w = params.get(AUX_WEIGHT)?;
        let fed = if topology.arch.aux_on_sigmoid {
            raw.map(sigmoid)
        } else {
            raw.clone()
        };
        let scores = matmul_a_bt(&fed, aux_w)?;
        (scores, Some(raw), Some(fed))
    } else {
        (raw, None, None)
    };

    let cache = want_cache.then_some(NetworkCache {
        node_caches: caches,
        raw_scores,
        aux_input,
        mode,
    });
    Ok((scores, cache))
}

/// Eval or train forward pass; returns the [N x outputs] raw score matrix,
/// columns in vocabulary order, before any thresholding.
pub fn forward_full<T: Scalar>(
    topology: &NetworkTopology,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor<T>> {
    run_forward(topology, params, batch, mode, rng, false).map(|(s, _)| s)
}

/// Forward pass keeping every cache needed by [`backward_full`].
pub fn forward_full_cached<T: Scalar>(
    topology: &NetworkTopology,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor<T>, NetworkCache<T>)> {
    run_forward(topology, params, batch, mode, rng, true).map(|(s, c)| (s, c.unwrap()))
}

/// Gradients for every parameter tensor given the loss gradient w.r.t. the
/// final scores. Frozen tensors come back zero-filled; the shared trunk
/// accumulates contributions from every branch.
pub fn backward_full<T: Scalar>(
    topology: &NetworkTopology,
    params: &ParamSet<T>,
    cache: &NetworkCache<T>,
    grad_scores: &Tensor<T>,
    freeze: &FreezeMask,
) -> Result<ParamSet<T>> {
    if cache.mode != Mode::Train {
        return Err(Error::Contract(
            "backward requires a cache from a train-mode forward".into(),
        ));
    }
    if cache.node_caches.len() != topology.nodes.len() {
        return Err(Error::Contract(
            "cache does not match topology (wrong node count)".into(),
        ));
    }
    let n = grad_scores.shape()[0];
    let outputs = topology.output_count();
    if grad_scores.shape() != [n, outputs] {
        return Err(Error::Dimension(format!(
            "grad_scores shape {:?}, expected [{}, {}]",
            grad_scores.shape(),
            n,
            outputs
        )));
    }
    let mut grads = params.zeros_like();

    // auxiliary layer first: d/dW = gᵀ·fed, d/dfed = g·W
    let grad_raw = if topology.variant == Variant::McnnAux {
        let aux_w = params.get(AUX_WEIGHT)?;
        let fed = cache
            .aux_input
            .as_ref()
            .ok_or_else(|| Error::Contract("cache missing auxiliary input".into()))?;
        let gw = matmul_at_b(grad_scores, fed)?;
        *grads.get_mut(AUX_WEIGHT)? = gw;
        let mut g_fed = matmul(grad_scores, aux_w)?;
        if topology.arch.aux_on_sigmoid {
            let raw = cache
                .raw_scores
                .as_ref()
                .ok_or_else(|| Error::Contract("cache missing raw scores".into()))?;
            for (g, &s) in g_fed.data_mut().iter_mut().zip(raw.data()) {
                let p = sigmoid(s);
                *g *= p * (T::one() - p);
            }
        }
        g_fed
    } else {
        grad_scores.clone()
    };

    // with the whole tree frozen only the auxiliary weight needs gradients
    if topology.variant == Variant::McnnAux && freeze.only_aux_trainable() {
        return Ok(grads);
    }

    // scatter score columns back to the group heads
    let mut head_grads: Vec<Tensor<T>> = topology
        .group_heads
        .iter()
        .map(|&i| {
            let units = match &topology.nodes[i].spec {
                layers::LayerSpec::FullyConnected { units } => *units,
                _ => unreachable!("group heads are fully connected layers"),
            };
            Tensor::zeros(&[n, units])
        })
        .collect();
    for (slot, &(g, unit)) in topology.output_map.iter().enumerate() {
        let width = head_grads[g].shape()[1];
        for row in 0..n {
            head_grads[g].data_mut()[row * width + unit] = grad_raw.data()[row * outputs + slot];
        }
    }

    // reverse walk; consumers all have higher indices, so each node's
    // gradient is complete when we reach it
    let mut grad_acc: Vec<Option<Tensor<T>>> = vec![None; topology.nodes.len()];
    for (g, &head) in topology.group_heads.iter().enumerate() {
        let slot = grad_acc[head].take();
        grad_acc[head] = Some(match slot {
            None => head_grads[g].clone(),
            Some(mut t) => {
                t.add_assign(&head_grads[g])?;
                t
            }
        });
    }
    for idx in (0..topology.nodes.len()).rev() {
        let Some(grad_out) = grad_acc[idx].take() else {
            continue;
        };
        let node = &topology.nodes[idx];
        let p = layer_params(params, &node.name, &node.spec)?;
        let (grad_input, grad_params) =
            layers::backward(&node.spec, p.as_ref(), &cache.node_caches[idx], &grad_out)?;
        if let Some(gp) = grad_params {
            *grads.get_mut(&format!("{}.weight", node.name))? = gp.weight;
            *grads.get_mut(&format!("{}.bias", node.name))? = gp.bias;
        }
        if let NodeInput::Node(src) = node.input {
            match grad_acc[src].take() {
                None => grad_acc[src] = Some(grad_input),
                Some(mut t) => {
                    t.add_assign(&grad_input)?;
                    grad_acc[src] = Some(t);
                }
            }
        }
    }

    for (name, grad) in grads.iter_mut() {
        if freeze.is_frozen(name) {
            *grad = Tensor::zeros(grad.shape());
        }
    }
    Ok(grads)
}
