//! Finite-difference verification of layer gradients.
//!
//! The numeric side only ever calls `forward`, so it stays independent of
//! the backward implementations it checks. Always runs in 64-bit.

use crate::error::Result;
use crate::tensor::{rand_init_with, InitScheme, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{backward, forward, forward_cached, init_params, LayerParams, LayerSpec, Mode};

pub const EPSILON: f64 = 1e-5;

/// Relative error as used throughout the checks:
/// |a - n| / max(|a|, |n|, 1e-8).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Input with pairwise-distinct magnitudes (separation >= 1e-3) and random
/// signs. Keeps +-epsilon probes away from max-pool ties and the relu kink.
fn kink_safe_input(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let len: usize = shape.iter().product();
    let step = (0.9 / len as f64).max(1e-3);
    let mut values: Vec<f64> = (0..len).map(|i| 0.05 + i as f64 * step).collect();
    values.shuffle(rng);
    for v in values.iter_mut() {
        if rng.gen::<bool>() {
            *v = -*v;
        }
    }
    Tensor::from_vec(shape, values).unwrap()
}

fn uniform_input(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let len: usize = shape.iter().product();
    let values = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::from_vec(shape, values).unwrap()
}

/// Max relative error between analytic and central-difference gradients,
/// taken over every input entry and every parameter entry.
pub fn gradient_check(spec: &LayerSpec, input_shape: &[usize], seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init_params::<f64>(spec, input_shape, &mut rng)?;
    // a parameterless init draws nothing; keep conv/dense biases nonzero so
    // their gradient path is exercised off the trivial point
    if let Some(p) = params.as_mut() {
        p.bias = rand_init_with(p.bias.shape(), InitScheme::Gaussian(0.1), &mut rng);
    }
    let input = match spec {
        LayerSpec::MaxPool { .. } | LayerSpec::Relu => kink_safe_input(input_shape, &mut rng),
        _ => uniform_input(input_shape, &mut rng),
    };
    let out_shape = spec.output_shape(input_shape)?;
    let weighting = uniform_input(&out_shape, &mut rng);
    let dropout_seed = rng.gen::<u64>();

    // objective: sum(forward(input) * weighting); dropout masks are pinned
    // by reseeding the same stream for every evaluation
    let eval = |inp: &Tensor<f64>, prm: Option<&LayerParams<f64>>| -> Result<f64> {
        let mut drop_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let out = forward(spec, prm, inp, Mode::Train, Some(&mut drop_rng))?;
        Ok(out
            .data()
            .iter()
            .zip(weighting.data())
            .map(|(o, r)| o * r)
            .sum())
    };

    let mut drop_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (_, cache) = forward_cached(spec, params.as_ref(), &input, Mode::Train, Some(&mut drop_rng))?;
    let (grad_input, grad_params) = backward(spec, params.as_ref(), &cache, &weighting)?;

    let mut max_err: f64 = 0.0;

    let mut probe = input.clone();
    for i in 0..probe.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + EPSILON;
        let up = eval(&probe, params.as_ref())?;
        probe.data_mut()[i] = orig - EPSILON;
        let down = eval(&probe, params.as_ref())?;
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * EPSILON);
        max_err = max_err.max(relative_error(grad_input.data()[i], numeric));
    }

    if let (Some(p), Some(gp)) = (params.clone(), grad_params) {
        for (select_weight, grads) in [(true, &gp.weight), (false, &gp.bias)] {
            for i in 0..grads.len() {
                let mut perturbed = p.clone();
                let set = |prm: &mut LayerParams<f64>, v: f64| {
                    if select_weight {
                        prm.weight.data_mut()[i] = v;
                    } else {
                        prm.bias.data_mut()[i] = v;
                    }
                };
                let orig = if select_weight {
                    p.weight.data()[i]
                } else {
                    p.bias.data()[i]
                };
                set(&mut perturbed, orig + EPSILON);
                let up = eval(&input, Some(&perturbed))?;
                set(&mut perturbed, orig - EPSILON);
                let down = eval(&input, Some(&perturbed))?;
                let numeric = (up - down) / (2.0 * EPSILON);
                max_err = max_err.max(relative_error(grads.data()[i], numeric));
            }
        }
    }

    Ok(max_err)
}
