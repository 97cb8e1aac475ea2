use super::*;
use crate::tensor::{rand_init, InitScheme};
use crate::topology::AttributeVocab;
use rand::SeedableRng;

fn toy_vocab(n: usize) -> AttributeVocab {
    AttributeVocab::new((0..n).map(|i| format!("Attr_{:02}", i)).collect()).unwrap()
}

fn const_image(shape: &[usize], v: f64) -> Tensor<f64> {
    Tensor::filled(shape, v)
}

fn tiny_dataset() -> Dataset<f64> {
    let vocab = toy_vocab(2);
    let records = vec![
        Record { id: "a".into(), labels: vec![1, 0], split: Split::Train },
        Record { id: "b".into(), labels: vec![0, 1], split: Split::Train },
        Record { id: "c".into(), labels: vec![1, 1], split: Split::Test },
    ];
    let images = vec![
        const_image(&[3, 4, 4], 2.0),
        const_image(&[3, 4, 4], 4.0),
        const_image(&[3, 4, 4], 9.0),
    ];
    Dataset::in_memory(vocab, records, images).unwrap()
}

#[test]
fn mean_of_constant_images() {
    let ds = tiny_dataset();
    let mean = compute_mean(&ds).unwrap();
    assert!(mean.data().iter().all(|&v| v == 3.0));
}

#[test]
fn mean_excludes_val_and_test_records() {
    let ds = tiny_dataset();
    let mean_a = compute_mean(&ds).unwrap();
    // changing the test image must not move the mean
    let vocab = ds.vocab.clone();
    let records = ds.records.clone();
    let images = vec![
        const_image(&[3, 4, 4], 2.0),
        const_image(&[3, 4, 4], 4.0),
        const_image(&[3, 4, 4], -100.0),
    ];
    let ds2 = Dataset::in_memory(vocab, records, images).unwrap();
    assert_eq!(mean_a, compute_mean(&ds2).unwrap());
}

#[test]
fn post_subtraction_train_mean_is_zero() {
    let vocab = toy_vocab(1);
    let mut records = Vec::new();
    let mut images = Vec::new();
    for i in 0..7 {
        records.push(Record {
            id: format!("r{}", i),
            labels: vec![1],
            split: Split::Train,
        });
        images.push(rand_init(&[3, 5, 5], InitScheme::Gaussian(2.0), i as u64));
    }
    let ds: Dataset<f64> = Dataset::in_memory(vocab, records, images).unwrap();
    let mean = compute_mean(&ds).unwrap();
    let mut acc = Tensor::<f64>::zeros(&[3, 5, 5]);
    for i in 0..7 {
        let p = preprocess(&ds.image(i).unwrap(), &mean, (5, 5), Mode::Eval, None).unwrap();
        acc.add_assign(&p).unwrap();
    }
    for v in acc.data() {
        assert!((v / 7.0).abs() < 1e-5);
    }
}

#[test]
fn preprocess_full_size_crop_is_subtraction_only() {
    let img: Tensor<f64> = rand_init(&[3, 6, 6], InitScheme::Gaussian(1.0), 1);
    let mean: Tensor<f64> = rand_init(&[3, 6, 6], InitScheme::Gaussian(1.0), 2);
    let out = preprocess(&img, &mean, (6, 6), Mode::Eval, None).unwrap();
    for i in 0..img.len() {
        assert_eq!(out.data()[i], img.data()[i] - mean.data()[i]);
    }
}

#[test]
fn preprocess_eval_is_deterministic() {
    let img: Tensor<f64> = rand_init(&[3, 8, 8], InitScheme::Gaussian(1.0), 3);
    let mean = Tensor::zeros(&[3, 8, 8]);
    let a = preprocess(&img, &mean, (5, 5), Mode::Eval, None).unwrap();
    let b = preprocess(&img, &mean, (5, 5), Mode::Eval, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn preprocess_rejects_oversized_crop() {
    let img = Tensor::<f64>::zeros(&[3, 4, 4]);
    let mean = Tensor::zeros(&[3, 4, 4]);
    assert!(preprocess(&img, &mean, (5, 5), Mode::Eval, None).is_err());
}

/// 99th-percentile chi-square critical value via the Wilson-Hilferty
/// approximation.
fn chi2_crit_p01(df: usize) -> f64 {
    let z = 2.3263478740408408f64;
    let d = df as f64;
    d * (1.0 - 2.0 / (9.0 * d) + z * (2.0 / (9.0 * d)).sqrt()).powi(3)
}

#[test]
fn random_crop_offsets_are_uniform() {
    // 7x7 image, 4x4 crop: 16 possible offsets
    let img: Tensor<f64> = {
        let mut t = Tensor::zeros(&[1, 7, 7]);
        for (i, v) in t.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        t
    };
    let mean = Tensor::zeros(&[1, 7, 7]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 16];
    let draws = 10_000;
    for _ in 0..draws {
        let out = preprocess(&img, &mean, (4, 4), Mode::Train, Some(&mut rng)).unwrap();
        // top-left value identifies the offset: v = oy*7 + ox
        let v = out.data()[0] as usize;
        let (oy, ox) = (v / 7, v % 7);
        assert!(oy < 4 && ox < 4);
        counts[oy * 4 + ox] += 1;
    }
    let expected = draws as f64 / 16.0;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let crit = chi2_crit_p01(15);
    assert!(stat < crit, "chi-square {} >= {}", stat, crit);
}

#[test]
fn jitter_default_grid_makes_nine_variants() {
    let rec = Record { id: "x".into(), labels: vec![1, 0, 1], split: Split::Train };
    let img: Tensor<f64> = rand_init(&[3, 6, 6], InitScheme::Gaussian(1.0), 8);
    let grid = default_jitter_grid(2);
    let variants = jitter_augment(&rec, &img, &grid);
    assert_eq!(variants.len(), 9);
    let identical = variants.iter().filter(|(_, im)| *im == img).count();
    assert!(identical >= 1);
    assert_eq!(variants[4].1, img); // the (0,0) offset
    for (r, _) in &variants {
        assert_eq!(r.labels, rec.labels);
    }
    // ids stay unique
    let ids: std::collections::HashSet<_> = variants.iter().map(|(r, _)| r.id.clone()).collect();
    assert_eq!(ids.len(), 9);
}

#[test]
fn jitter_translation_clamps_at_edges() {
    let mut img = Tensor::<f64>::zeros(&[1, 3, 3]);
    for (i, v) in img.data_mut().iter_mut().enumerate() {
        *v = i as f64;
    }
    let t = translate_clamped(&img, 1, 0); // shift down, top row clamps
    assert_eq!(&t.data()[0..3], &[0.0, 1.0, 2.0]);
    assert_eq!(&t.data()[3..6], &[0.0, 1.0, 2.0]);
    assert_eq!(&t.data()[6..9], &[3.0, 4.0, 5.0]);
}

#[test]
fn jitter_dataset_multiplies_train_only() {
    let ds = tiny_dataset();
    let grid = default_jitter_grid(1);
    let jittered = jitter_dataset(&ds, &grid).unwrap();
    assert_eq!(jittered.indices(Split::Train).len(), 2 * 9);
    assert_eq!(jittered.indices(Split::Test).len(), 1);
}

#[test]
fn synth_same_seed_is_bit_identical() {
    let vocab = toy_vocab(40);
    let spec = SyntheticSpec::basic(40, 20, 5, 5, 77);
    let a: Dataset<f32> = synth_generate(&spec, &vocab).unwrap();
    let b: Dataset<f32> = synth_generate(&spec, &vocab).unwrap();
    assert_eq!(a.records, b.records);
    for i in 0..a.len() {
        assert_eq!(a.image(i).unwrap(), b.image(i).unwrap());
    }
}

fn empirical_binary_corr(ds: &Dataset<f64>, a: usize, b: usize) -> f64 {
    let n = ds.len() as f64;
    let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
    for r in &ds.records {
        let (x, y) = (r.labels[a] as f64, r.labels[b] as f64);
        sa += x;
        sb += y;
        sab += x * y;
    }
    let (ma, mb) = (sa / n, sb / n);
    (sab / n - ma * mb) / ((ma * (1.0 - ma)).sqrt() * (mb * (1.0 - mb)).sqrt())
}

#[test]
fn synth_uncorrelated_attributes_stay_uncorrelated() {
    let vocab = toy_vocab(40);
    let mut spec = SyntheticSpec::basic(40, 10_000, 0, 0, 101);
    spec.image_size = 14;
    let ds: Dataset<f64> = synth_generate(&spec, &vocab).unwrap();
    for (a, b) in [(0, 1), (5, 17), (20, 39)] {
        let r = empirical_binary_corr(&ds, a, b);
        assert!(r.abs() < 0.05, "corr({},{}) = {}", a, b, r);
    }
}

#[test]
fn synth_planted_correlation_is_realized() {
    let vocab = toy_vocab(40);
    let mut spec = SyntheticSpec::basic(40, 10_000, 0, 0, 102);
    spec.image_size = 14;
    spec.plan = vec![
        CorrelationPair { a: 3, b: 7, rho: 0.9 },
        CorrelationPair { a: 10, b: 11, rho: -0.6 },
    ];
    let ds: Dataset<f64> = synth_generate(&spec, &vocab).unwrap();
    let r_pos = empirical_binary_corr(&ds, 3, 7);
    assert!((r_pos - 0.9).abs() < 0.1, "r = {}", r_pos);
    let r_neg = empirical_binary_corr(&ds, 10, 11);
    assert!((r_neg + 0.6).abs() < 0.1, "r = {}", r_neg);
}

#[test]
fn synth_rejects_infeasible_plans() {
    let vocab = toy_vocab(4);
    let mut spec = SyntheticSpec::basic(4, 10, 0, 0, 1);
    // extreme prevalences cap the reachable binary correlation well below 0.9
    spec.prevalence = vec![0.1, 0.9, 0.5, 0.5];
    spec.plan = vec![CorrelationPair { a: 0, b: 1, rho: 0.9 }];
    assert!(matches!(
        synth_generate::<f64>(&spec, &vocab),
        Err(crate::error::Error::Config(_))
    ));

    // cyclic contradictory constraints: not positive definite
    let mut spec2 = SyntheticSpec::basic(4, 10, 0, 0, 1);
    spec2.plan = vec![
        CorrelationPair { a: 0, b: 1, rho: 0.9 },
        CorrelationPair { a: 1, b: 2, rho: 0.9 },
        CorrelationPair { a: 0, b: 2, rho: -0.9 },
    ];
    assert!(matches!(
        synth_generate::<f64>(&spec2, &vocab),
        Err(crate::error::Error::Config(_))
    ));
}

#[test]
fn synth_labels_recoverable_by_linear_template_classifier() {
    // the glyph template is a linear functional of the pixels; on
    // noise-free data it must recover every label
    let vocab = toy_vocab(40);
    let mut spec = SyntheticSpec::basic(40, 200, 0, 0, 55);
    spec.noise_sigma = 0.0;
    let ds: Dataset<f64> = synth_generate(&spec, &vocab).unwrap();
    let size = spec.image_size;
    let mut correct = 0usize;
    let mut total = 0usize;
    for i in 0..ds.len() {
        let img = ds.image(i).unwrap();
        for a in 0..40 {
            let (ch, y0, x0) = synthetic::glyph_position(a, size);
            let mut s = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    s += img.data()[ch * size * size + (y0 + dy) * size + x0 + dx];
                }
            }
            let pred = u8::from(s > 2.0);
            correct += usize::from(pred == ds.records[i].labels[a]);
            total += 1;
        }
    }
    let acc = correct as f64 / total as f64;
    assert!(acc >= 0.95, "template accuracy {}", acc);
}

#[test]
fn normal_quantile_matches_known_values() {
    assert!((synthetic::normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-5);
    assert!((synthetic::normal_quantile(0.5).unwrap()).abs() < 1e-9);
    assert!((synthetic::normal_cdf(1.6448536) - 0.95).abs() < 1e-6);
}

#[test]
fn dataset_from_dir_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::create_dir(root.join("images")).unwrap();

    let vocab = AttributeVocab::celeba();
    let mut label_lines = vec!["2".to_string(), vocab.names().join(" ")];
    let mut part_lines = Vec::new();
    for (i, split_digit) in [(0usize, 0), (1usize, 2)] {
        let id = format!("img_{}.ppm", i);
        let img: Tensor<f32> = {
            let mut t = Tensor::zeros(&[3, 4, 4]);
            for (j, v) in t.data_mut().iter_mut().enumerate() {
                *v = ((i * 48 + j) % 256) as f32 / 255.0;
            }
            t
        };
        std::fs::write(
            root.join("images").join(&id),
            formats::write_ppm(&img).unwrap(),
        )
        .unwrap();
        let labels: Vec<&str> = (0..40).map(|a| if a % 2 == i { "1" } else { "-1" }).collect();
        label_lines.push(format!("{} {}", id, labels.join(" ")));
        part_lines.push(format!("{} {}", id, split_digit));
    }
    std::fs::write(root.join("labels.txt"), label_lines.join("\n") + "\n").unwrap();
    std::fs::write(root.join("partition.txt"), part_lines.join("\n") + "\n").unwrap();

    let ds: Dataset<f32> = Dataset::from_dir(root).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.indices(Split::Train), vec![0]);
    assert_eq!(ds.indices(Split::Test), vec![1]);
    let img = ds.image(0).unwrap();
    assert_eq!(img.shape(), &[3, 4, 4]);
    assert_eq!(ds.records[0].labels[0], 1);
    assert_eq!(ds.records[1].labels[0], 0);
}

#[test]
fn batch_assembly_shapes_and_labels() {
    let ds = tiny_dataset();
    let mean = compute_mean(&ds).unwrap();
    let (batch, labels) = make_batch(&ds, &[0, 1], &mean, (4, 4), Mode::Eval, None).unwrap();
    assert_eq!(batch.shape(), &[2, 3, 4, 4]);
    assert_eq!(labels.rows, 2);
    assert_eq!(labels.value(0, 0), 1);
    assert_eq!(labels.value(1, 0), 0);
}
