//! Whole-network finite-difference check: the loss gradient produced by
//! `backward_full` is compared against central differences over a random
//! sample of parameter coordinates. 64-bit only; the numeric side touches
//! nothing but `forward_full`.

use crate::error::Result;
use crate::layers::check::{relative_error, EPSILON};
use crate::layers::Mode;
use crate::loss::{sigmoid_ce, LabelMatrix};
use crate::tensor::{rand_init_with, InitScheme, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_params, forward_full, forward_full_cached, backward_full, FreezeMask, NetworkTopology, ParamSet};

/// Max relative error over `samples` randomly chosen parameter entries,
/// using a 2-image batch and random binary labels. Dropout masks are pinned
/// by reseeding the same stream for every evaluation.
pub fn whole_network_gradient_check(
    topology: &NetworkTopology,
    seed: u64,
    samples: usize,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: ParamSet<f64> = build_params(topology, rng.gen())?;
    let (c, h, w) = topology.arch.input_shape;
    let batch: Tensor<f64> = rand_init_with(&[2, c, h, w], InitScheme::Gaussian(1.0), &mut rng);
    let outputs = topology.output_count();
    let labels = LabelMatrix::new(
        2,
        outputs,
        (0..2 * outputs).map(|_| rng.gen_range(0..2u8)).collect(),
    )?;
    let dropout_seed: u64 = rng.gen();

    let eval = |p: &ParamSet<f64>| -> Result<f64> {
        let mut drop_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let scores = forward_full(topology, p, &batch, Mode::Train, Some(&mut drop_rng))?;
        Ok(sigmoid_ce(&scores, &labels)?.0)
    };

    let mut drop_rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (scores, cache) =
        forward_full_cached(topology, &params, &batch, Mode::Train, Some(&mut drop_rng))?;
    let (_, grad_scores) = sigmoid_ce(&scores, &labels)?;
    let freeze = FreezeMask::none(&params);
    let grads = backward_full(topology, &params, &cache, &grad_scores, &freeze)?;

    let names: Vec<String> = params.names().cloned().collect();
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        let name = &names[rng.gen_range(0..names.len())];
        let len = params.get(name)?.len();
        let idx = rng.gen_range(0..len);
        let mut probe = params.clone();
        let orig = probe.get(name)?.data()[idx];
        probe.get_mut(name)?.data_mut()[idx] = orig + EPSILON;
        let up = eval(&probe)?;
        probe.get_mut(name)?.data_mut()[idx] = orig - EPSILON;
        let down = eval(&probe)?;
        let numeric = (up - down) / (2.0 * EPSILON);
        let analytic = grads.get(name)?.data()[idx];
        max_err = max_err.max(relative_error(analytic, numeric));
    }
    Ok(max_err)
}
