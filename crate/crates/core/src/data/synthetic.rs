//! Synthetic correlated-attribute dataset generator.
//!
//! Labels come from a latent Gaussian copula: each record draws a
//! correlated normal vector, thresholds per-attribute at the quantile of
//! its prevalence, and optionally flips the observed label. The pairwise
//! correlations in the plan are targets for the *binary* labels, so each
//! pair's latent correlation is solved numerically first. Images are
//! a noise background plus one fixed glyph per positive attribute, so
//! labels are visually recoverable.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::topology::AttributeVocab;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Record, Split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPair {
    pub a: usize,
    pub b: usize,
    /// Target Pearson correlation of the binary labels.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub train_count: usize,
    pub val_count: usize,
    pub test_count: usize,
    /// Square images of this side length; needs (size/2)^2 cells >= attrs.
    pub image_size: usize,
    /// Background gaussian noise level.
    pub noise_sigma: f64,
    /// Per-attribute positive-label probability.
    pub prevalence: Vec<f64>,
    pub plan: Vec<CorrelationPair>,
    /// Probability that an observed label is flipped (label noise).
    pub label_flip_prob: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Balanced attributes, no planted correlations.
    pub fn basic(n_attrs: usize, train: usize, val: usize, test: usize, seed: u64) -> Self {
        SyntheticSpec {
            train_count: train,
            val_count: val,
            test_count: test,
            image_size: 16,
            noise_sigma: 0.1,
            prevalence: vec![0.5; n_attrs],
            plan: Vec::new(),
            label_flip_prob: 0.0,
            seed,
        }
    }

    fn validate(&self, n_attrs: usize) -> Result<()> {
        if self.prevalence.len() != n_attrs {
            return Err(Error::Config(format!(
                "{} prevalences for {} attributes",
                self.prevalence.len(),
                n_attrs
            )));
        }
        if self.prevalence.iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return Err(Error::Config("prevalences must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.label_flip_prob) {
            return Err(Error::Config("label flip probability must be in [0, 1)".into()));
        }
        for pair in &self.plan {
            if pair.a >= n_attrs || pair.b >= n_attrs || pair.a == pair.b {
                return Err(Error::Config(format!(
                    "bad correlation pair ({}, {})",
                    pair.a, pair.b
                )));
            }
            if pair.rho.abs() > 1.0 {
                return Err(Error::Config(format!("|rho| > 1 for pair ({}, {})", pair.a, pair.b)));
            }
        }
        let cells = (self.image_size / 2) * (self.image_size / 2);
        if cells < n_attrs {
            return Err(Error::Config(format!(
                "image size {} has {} glyph cells, need {}",
                self.image_size, cells, n_attrs
            )));
        }
        if self.train_count + self.val_count + self.test_count == 0 {
            return Err(Error::Config("no records requested".into()));
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse standard normal CDF by bisection (monotone, deterministic).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return Err(Error::Config(format!("quantile of p = {}", p)));
    }
    let (mut lo, mut hi) = (-12.0f64, 12.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// P(Z1 > t1, Z2 > t2) for standard bivariate normals with correlation r,
/// by Simpson integration of phi(z) * P(Z2 > (t2 - r z)/sqrt(1-r^2)).
fn orthant_prob(t1: f64, t2: f64, r: f64) -> f64 {
    if r >= 0.999_999 {
        return 1.0 - normal_cdf(t1.max(t2));
    }
    if r <= -0.999_999 {
        let p = (1.0 - normal_cdf(t1)) + (1.0 - normal_cdf(t2)) - 1.0;
        return p.max(0.0);
    }
    let denom = (1.0 - r * r).sqrt();
    let lo = t1;
    let hi = t1 + 12.0;
    let steps = 2000; // even
    let h = (hi - lo) / steps as f64;
    let f = |z: f64| normal_pdf(z) * (1.0 - normal_cdf((t2 - r * z) / denom));
    let mut sum = f(lo) + f(hi);
    for i in 1..steps {
        let z = lo + i as f64 * h;
        sum += f(z) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Pearson correlation of the two thresholded indicators under latent
/// correlation r.
fn binary_corr(r: f64, t1: f64, t2: f64, p1: f64, p2: f64) -> f64 {
    let p11 = orthant_prob(t1, t2, r);
    (p11 - p1 * p2) / (p1 * (1.0 - p1) * p2 * (1.0 - p2)).sqrt()
}

/// Latent correlation achieving the requested binary-label correlation,
/// by bisection (binary_corr is increasing in r).
fn solve_latent(rho: f64, t1: f64, t2: f64, p1: f64, p2: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-0.999_99f64, 0.999_99f64);
    let reachable = binary_corr(if rho > 0.0 { hi } else { lo }, t1, t2, p1, p2);
    if (rho > 0.0 && reachable < rho - 1e-3) || (rho < 0.0 && reachable > rho + 1e-3) {
        return Err(Error::Config(format!(
            "binary correlation {} unreachable at these prevalences (max {:.4})",
            rho, reachable
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if binary_corr(mid, t1, t2, p1, p2) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lower-triangular Cholesky factor; fails on non-positive-definite input.
fn cholesky(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 1e-12 {
                    return Err(Error::Config(
                        "correlation plan is not positive definite (infeasible)".into(),
                    ));
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Top-left pixel of attribute `a`'s 2x2 glyph block and its channel.
pub fn glyph_position(attr: usize, image_size: usize) -> (usize, usize, usize) {
    let cols = image_size / 2;
    (attr % 3, (attr / cols) * 2, (attr % cols) * 2)
}

/// Deterministically generates the dataset described by `spec`.
pub fn generate<T: Scalar>(spec: &SyntheticSpec, vocab: &AttributeVocab) -> Result<Dataset<T>> {
    let n_attrs = vocab.len();
    spec.validate(n_attrs)?;
    let thresholds: Vec<f64> = spec
        .prevalence
        .iter()
        .map(|&p| normal_quantile(1.0 - p))
        .collect::<Result<_>>()?;

    let mut corr = vec![0.0f64; n_attrs * n_attrs];
    for i in 0..n_attrs {
        corr[i * n_attrs + i] = 1.0;
    }
    for pair in &spec.plan {
        let r = solve_latent(
            pair.rho,
            thresholds[pair.a],
            thresholds[pair.b],
            spec.prevalence[pair.a],
            spec.prevalence[pair.b],
        )?;
        corr[pair.a * n_attrs + pair.b] = r;
        corr[pair.b * n_attrs + pair.a] = r;
    }
    let chol = cholesky(&corr, n_attrs)?;

    let total = spec.train_count + spec.val_count + spec.test_count;
    let size = spec.image_size;
    let sigma = T::of_f64(spec.noise_sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(total);
    let mut images = Vec::with_capacity(total);
    for idx in 0..total {
        let split = if idx < spec.train_count {
            Split::Train
        } else if idx < spec.train_count + spec.val_count {
            Split::Val
        } else {
            Split::Test
        };
        // correlated normals: z = L * g
        let g: Vec<f64> = (0..n_attrs)
            .map(|_| f64::standard_normal(&mut rng))
            .collect();
        let mut truth = vec![0u8; n_attrs];
        for (a, t) in truth.iter_mut().enumerate() {
            let mut z = 0.0;
            for (k, &gv) in g.iter().enumerate().take(a + 1) {
                z += chol[a * n_attrs + k] * gv;
            }
            *t = u8::from(z > thresholds[a]);
        }
        let mut observed = truth.clone();
        if spec.label_flip_prob > 0.0 {
            for l in observed.iter_mut() {
                if rng.gen::<f64>() < spec.label_flip_prob {
                    *l = 1 - *l;
                }
            }
        }
        let mut image = Tensor::zeros(&[3, size, size]);
        for v in image.data_mut().iter_mut() {
            *v = sigma * T::standard_normal(&mut rng);
        }
        for (a, &t) in truth.iter().enumerate() {
            if t == 0 {
                continue;
            }
            let (ch, y0, x0) = glyph_position(a, size);
            for dy in 0..2 {
                for dx in 0..2 {
                    image.data_mut()[ch * size * size + (y0 + dy) * size + x0 + dx] += T::one();
                }
            }
        }
        records.push(Record {
            id: format!("synth_{:06}", idx),
            labels: observed,
            split,
        });
        images.push(image);
    }
    Dataset::in_memory(vocab.clone(), records, images)
}
