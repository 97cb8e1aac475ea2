//! Dataset ingestion, preprocessing (mean subtraction, cropping), jitter
//! augmentation and batch assembly.

pub mod formats;
pub mod labels;
pub mod synthetic;

pub use labels::{parse_label_file, parse_label_text, parse_partition_file, parse_partition_text};
pub use synthetic::{generate as synth_generate, CorrelationPair, SyntheticSpec};

use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::loss::LabelMatrix;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::topology::AttributeVocab;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    RawTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub labels: Vec<u8>,
    pub split: Split,
}

enum ImageStore<T> {
    Memory(Vec<Tensor<T>>),
    Disk { root: PathBuf },
}

/// A labeled image dataset, either fully in memory (synthetic data) or
/// backed by files under `<root>/images/`.
pub struct Dataset<T> {
    pub vocab: AttributeVocab,
    pub records: Vec<Record>,
    store: ImageStore<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn in_memory(
        vocab: AttributeVocab,
        records: Vec<Record>,
        images: Vec<Tensor<T>>,
    ) -> Result<Self> {
        if records.len() != images.len() {
            return Err(Error::Data(format!(
                "{} records but {} images",
                records.len(),
                images.len()
            )));
        }
        validate_records(&vocab, &records)?;
        Ok(Dataset {
            vocab,
            records,
            store: ImageStore::Memory(images),
        })
    }

    /// Loads `labels.txt` and `partition.txt` from a dataset directory;
    /// images are read lazily from `<root>/images/<id>`, with the format
    /// chosen by each id's extension (`.ppm` or `.tens`).
    pub fn from_dir(root: &Path) -> Result<Self> {
        let (vocab, labeled) = labels::parse_label_file(&root.join("labels.txt"))?;
        let partition = labels::parse_partition_file(&root.join("partition.txt"))?;
        let mut split_of = std::collections::HashMap::new();
        for (id, split) in partition {
            split_of.insert(id, split);
        }
        let mut records = Vec::with_capacity(labeled.len());
        for (id, labels) in labeled {
            let split = *split_of
                .get(&id)
                .ok_or_else(|| Error::Data(format!("id `{}` missing from partition file", id)))?;
            records.push(Record { id, labels, split });
        }
        validate_records(&vocab, &records)?;
        Ok(Dataset {
            vocab,
            records,
            store: ImageStore::Disk { root: root.to_path_buf() },
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn image(&self, idx: usize) -> Result<Tensor<T>> {
        match &self.store {
            ImageStore::Memory(images) => Ok(images[idx].clone()),
            ImageStore::Disk { root } => {
                let id = &self.records[idx].id;
                let path = root.join("images").join(id);
                if id.ends_with(".ppm") {
                    formats::read_ppm(&std::fs::read(&path)?)
                } else if id.ends_with(".tens") {
                    formats::read_raw_tensor_file(&path)
                } else {
                    Err(Error::Data(format!(
                        "cannot infer image format of `{}` (expected .ppm or .tens)",
                        id
                    )))
                }
            }
        }
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    /// Label matrix for the given record indices, fully masked present.
    pub fn label_matrix(&self, indices: &[usize]) -> Result<LabelMatrix> {
        let cols = self.vocab.len();
        let mut values = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            values.extend_from_slice(&self.records[i].labels);
        }
        LabelMatrix::new(indices.len(), cols, values)
    }

    /// Label matrix restricted to a single attribute column (independent
    /// networks train against [N x 1] labels).
    pub fn label_matrix_for(&self, indices: &[usize], attribute: usize) -> Result<LabelMatrix> {
        let values = indices
            .iter()
            .map(|&i| self.records[i].labels[attribute])
            .collect();
        LabelMatrix::new(indices.len(), 1, values)
    }
}

fn validate_records(vocab: &AttributeVocab, records: &[Record]) -> Result<()> {
    let mut ids = HashSet::new();
    for r in records {
        if r.labels.len() != vocab.len() {
            return Err(Error::Data(format!(
                "record `{}` has {} labels, vocabulary has {}",
                r.id,
                r.labels.len(),
                vocab.len()
            )));
        }
        if r.labels.iter().any(|&v| v > 1) {
            return Err(Error::Data(format!("record `{}` has non-binary labels", r.id)));
        }
        if !ids.insert(&r.id) {
            return Err(Error::Data(format!("duplicate record id `{}`", r.id)));
        }
    }
    Ok(())
}

/// Per-pixel mean image over the training split.
pub fn compute_mean<T: Scalar>(dataset: &Dataset<T>) -> Result<Tensor<T>> {
    let train = dataset.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::Data("train split is empty".into()));
    }
    let first = dataset.image(train[0])?;
    let mut acc: Tensor<f64> = Tensor::zeros(first.shape());
    for &i in &train {
        let img = dataset.image(i)?;
        if img.shape() != first.shape() {
            return Err(Error::Data(format!(
                "heterogeneous image sizes: {:?} vs {:?} (resizing is out of scope)",
                img.shape(),
                first.shape()
            )));
        }
        for (a, &v) in acc.data_mut().iter_mut().zip(img.data()) {
            *a += v.as_f64();
        }
    }
    let n = train.len() as f64;
    Ok(Tensor::from_vec(
        first.shape(),
        acc.data().iter().map(|&v| T::of_f64(v / n)).collect(),
    )?)
}

/// Mean subtraction followed by a crop: random top-left corner in train
/// mode, center crop in eval mode.
pub fn preprocess<T: Scalar>(
    image: &Tensor<T>,
    mean: &Tensor<T>,
    crop: (usize, usize),
    mode: Mode,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Tensor<T>> {
    if image.rank() != 3 {
        return Err(Error::Dimension(format!(
            "image must be [C,H,W], got {:?}",
            image.shape()
        )));
    }
    if mean.shape() != image.shape() {
        return Err(Error::Data(format!(
            "mean shape {:?} does not match image {:?}",
            mean.shape(),
            image.shape()
        )));
    }
    let (c, h, w) = (image.shape()[0], image.shape()[1], image.shape()[2]);
    let (ch, cw) = crop;
    if ch > h || cw > w {
        return Err(Error::Dimension(format!(
            "crop {}x{} larger than image {}x{}",
            ch, cw, h, w
        )));
    }
    let (oy, ox) = match mode {
        Mode::Train => {
            let rng = rng.ok_or_else(|| {
                Error::Contract("random crop in train mode requires an rng".into())
            })?;
            (rng.gen_range(0..=h - ch), rng.gen_range(0..=w - cw))
        }
        Mode::Eval => ((h - ch) / 2, (w - cw) / 2),
    };
    let mut out = Tensor::zeros(&[c, ch, cw]);
    for chan in 0..c {
        for y in 0..ch {
            let src = chan * h * w + (y + oy) * w + ox;
            let dst = chan * ch * cw + y * cw;
            for x in 0..cw {
                out.data_mut()[dst + x] = image.data()[src + x] - mean.data()[src + x];
            }
        }
    }
    Ok(out)
}

/// The 9-offset default jitter grid {-step, 0, +step} squared.
pub fn default_jitter_grid(step: usize) -> Vec<(isize, isize)> {
    let s = step as isize;
    let mut grid = Vec::with_capacity(9);
    for dy in [-s, 0, s] {
        for dx in [-s, 0, s] {
            grid.push((dy, dx));
        }
    }
    grid
}

/// Translates an image by (dy, dx) with clamp-to-edge padding.
pub fn translate_clamped<T: Scalar>(image: &Tensor<T>, dy: isize, dx: isize) -> Tensor<T> {
    let (c, h, w) = (image.shape()[0], image.shape()[1], image.shape()[2]);
    let mut out = Tensor::zeros(image.shape());
    for chan in 0..c {
        for y in 0..h {
            let sy = (y as isize - dy).clamp(0, h as isize - 1) as usize;
            for x in 0..w {
                let sx = (x as isize - dx).clamp(0, w as isize - 1) as usize;
                out.data_mut()[chan * h * w + y * w + x] =
                    image.data()[chan * h * w + sy * w + sx];
            }
        }
    }
    out
}

/// One record per grid offset: translated image, labels copied.
pub fn jitter_augment<T: Scalar>(
    record: &Record,
    image: &Tensor<T>,
    grid: &[(isize, isize)],
) -> Vec<(Record, Tensor<T>)> {
    grid.iter()
        .map(|&(dy, dx)| {
            let img = if dy == 0 && dx == 0 {
                image.clone()
            } else {
                translate_clamped(image, dy, dx)
            };
            let rec = Record {
                id: format!("{}~j{}_{}", record.id, dy, dx),
                labels: record.labels.clone(),
                split: record.split,
            };
            (rec, img)
        })
        .collect()
}

/// Expands the train split by the jitter grid; val and test records pass
/// through untouched. Returns an in-memory dataset.
pub fn jitter_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    grid: &[(isize, isize)],
) -> Result<Dataset<T>> {
    let mut records = Vec::new();
    let mut images = Vec::new();
    for (i, rec) in dataset.records.iter().enumerate() {
        let img = dataset.image(i)?;
        if rec.split == Split::Train {
            for (r, im) in jitter_augment(rec, &img, grid) {
                records.push(r);
                images.push(im);
            }
        } else {
            records.push(rec.clone());
            images.push(img);
        }
    }
    Dataset::in_memory(dataset.vocab.clone(), records, images)
}

/// Assembles a preprocessed batch tensor plus its labels.
pub fn make_batch<T: Scalar>(
    dataset: &Dataset<T>,
    indices: &[usize],
    mean: &Tensor<T>,
    crop: (usize, usize),
    mode: Mode,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Tensor<T>, LabelMatrix)> {
    if indices.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let c = mean.shape()[0];
    let mut batch = Tensor::zeros(&[indices.len(), c, crop.0, crop.1]);
    let item = c * crop.0 * crop.1;
    for (slot, &idx) in indices.iter().enumerate() {
        let img = dataset.image(idx)?;
        let processed = preprocess(&img, mean, crop, mode, rng.as_deref_mut())?;
        batch.data_mut()[slot * item..(slot + 1) * item].copy_from_slice(processed.data());
    }
    let labels = dataset.label_matrix(indices)?;
    Ok((batch, labels))
}

#[cfg(test)]
mod tests;
