//! Dense row-major tensors and the numeric kernels the layers are built from.
//!
//! Convention everywhere: row-major layout, channel-first (N, C, H, W)
//! ordering. Convolution is lowered to `im2col` + `matmul`; the naive
//! nested-loop convolution lives in test code as an independent oracle.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense n-dimensional array of scalars, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); len],
        }
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                len,
                data.len()
            )));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!(
                "shape {:?} has a zero dimension",
                shape
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// n-by-n identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Same buffer under a new shape with the same element count.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::Dimension(format!(
                "cannot reshape {:?} ({} elements) to {:?} ({})",
                self.shape,
                self.data.len(),
                shape,
                len
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn get2(&self, i: usize, j: usize) -> T {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.shape[1] + j]
    }

    pub fn set2(&mut self, i: usize, j: usize, v: T) {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.shape[1] + j] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// self += other, elementwise; shapes must match.
    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "elementwise add of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
        Ok(())
    }

    /// self += alpha * other.
    pub fn scaled_add(&mut self, alpha: T, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "scaled add of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: T) {
        for v in self.data.iter_mut() {
            *v *= alpha;
        }
    }

    pub fn transpose2(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::Dimension(format!(
                "transpose expects rank 2, got {:?}",
                self.shape
            )));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(&[n, m]);
        for i in 0..m {
            for j in 0..n {
                out.data[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Converts element type, e.g. to run a 64-bit check on 32-bit weights.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of_f64(v.as_f64())).collect(),
        }
    }
}

fn check_rank2<T: Scalar>(t: &Tensor<T>, name: &str) -> Result<()> {
    if t.rank() != 2 {
        return Err(Error::Dimension(format!(
            "{} must be rank 2, got shape {:?}",
            name,
            t.shape()
        )));
    }
    Ok(())
}

/// out += a·b on raw row-major buffers. a: [m×k], b: [k×n], out: [m×n].
pub(crate) fn gemm_nn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (kk, &aik) in a_row.iter().enumerate() {
            let b_row = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row.iter()) {
                *o += aik * bv;
            }
        }
    }
}

/// out += a·bᵀ. a: [m×k], b: [n×k], out: [m×n].
pub(crate) fn gemm_a_bt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (j, o) in o_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&av, &bv) in a_row.iter().zip(b_row.iter()) {
                acc = acc + av * bv;
            }
            *o += acc;
        }
    }
}

/// out += aᵀ·b. a: [r×m], b: [r×n], out: [m×n].
pub(crate) fn gemm_at_b<T: Scalar>(a: &[T], b: &[T], r: usize, m: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), r * m);
    debug_assert_eq!(b.len(), r * n);
    debug_assert_eq!(out.len(), m * n);
    for row in 0..r {
        let a_row = &a[row * m..(row + 1) * m];
        let b_row = &b[row * n..(row + 1) * n];
        for (i, &av) in a_row.iter().enumerate() {
            let o_row = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row.iter()) {
                *o += av * bv;
            }
        }
    }
}

/// Standard matrix product of row-major rank-2 tensors.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_rank2(a, "matmul lhs")?;
    check_rank2(b, "matmul rhs")?;
    let (m, k) = (a.shape[0], a.shape[1]);
    let (k2, n) = (b.shape[0], b.shape[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: {:?} x {:?}",
            a.shape, b.shape
        )));
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm_nn(&a.data, &b.data, m, k, n, &mut out.data);
    Ok(out)
}

/// a · bᵀ without materializing the transpose. a: [m×k], b: [n×k] → [m×n].
pub fn matmul_a_bt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_rank2(a, "matmul lhs")?;
    check_rank2(b, "matmul rhs")?;
    let (m, k) = (a.shape[0], a.shape[1]);
    let (n, k2) = (b.shape[0], b.shape[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: {:?} x transpose of {:?}",
            a.shape, b.shape
        )));
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm_a_bt(&a.data, &b.data, m, k, n, &mut out.data);
    Ok(out)
}

/// aᵀ · b without materializing the transpose. a: [r×m], b: [r×n] → [m×n].
pub fn matmul_at_b<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    check_rank2(a, "matmul lhs")?;
    check_rank2(b, "matmul rhs")?;
    let (r, m) = (a.shape[0], a.shape[1]);
    let (r2, n) = (b.shape[0], b.shape[1]);
    if r != r2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: transpose of {:?} x {:?}",
            a.shape, b.shape
        )));
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm_at_b(&a.data, &b.data, r, m, n, &mut out.data);
    Ok(out)
}

/// Spatial output size of a strided window: floor((len + 2*pad - kernel)/stride) + 1.
pub fn conv_output_len(len: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = len + 2 * pad;
    if kernel == 0 || stride == 0 {
        return Err(Error::Dimension(
            "kernel and stride must be at least 1".into(),
        ));
    }
    if padded < kernel {
        return Err(Error::Dimension(format!(
            "window {} does not fit input {} with pad {}",
            kernel, len, pad
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Slice-level im2col, writing every element of `out` (zeros for padding).
/// `out` must have length (c·kh·kw)·(ho·wo).
pub(crate) fn im2col_into<T: Scalar>(
    input: &[T],
    (c, h, w): (usize, usize, usize),
    (kh, kw): (usize, usize),
    stride: usize,
    pad: usize,
    (ho, wo): (usize, usize),
    out: &mut [T],
) {
    let cols_n = ho * wo;
    debug_assert_eq!(out.len(), c * kh * kw * cols_n);
    for ch in 0..c {
        let plane = &input[ch * h * w..(ch + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let out_row = &mut out[row * cols_n..(row + 1) * cols_n];
                for oi in 0..ho {
                    let seg = &mut out_row[oi * wo..(oi + 1) * wo];
                    let ii = (oi * stride + ki) as isize - pad as isize;
                    if ii < 0 || ii >= h as isize {
                        seg.fill(T::zero());
                        continue;
                    }
                    let in_row = &plane[ii as usize * w..(ii as usize + 1) * w];
                    for (oj, o) in seg.iter_mut().enumerate() {
                        let jj = (oj * stride + kj) as isize - pad as isize;
                        *o = if jj < 0 || jj >= w as isize {
                            T::zero()
                        } else {
                            in_row[jj as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Slice-level adjoint of [`im2col_into`]: scatter-adds into `out`.
pub(crate) fn col2im_into<T: Scalar>(
    cols: &[T],
    (c, h, w): (usize, usize, usize),
    (kh, kw): (usize, usize),
    stride: usize,
    pad: usize,
    (ho, wo): (usize, usize),
    out: &mut [T],
) {
    let cols_n = ho * wo;
    debug_assert_eq!(cols.len(), c * kh * kw * cols_n);
    debug_assert_eq!(out.len(), c * h * w);
    for ch in 0..c {
        let plane = &mut out[ch * h * w..(ch + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ch * kh + ki) * kw + kj;
                let col_row = &cols[row * cols_n..(row + 1) * cols_n];
                for oi in 0..ho {
                    let ii = (oi * stride + ki) as isize - pad as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    let row_base = ii as usize * w;
                    for oj in 0..wo {
                        let jj = (oj * stride + kj) as isize - pad as isize;
                        if jj < 0 || jj >= w as isize {
                            continue;
                        }
                        plane[row_base + jj as usize] += col_row[oi * wo + oj];
                    }
                }
            }
        }
    }
}

/// Lowers a [C×H×W] image to a [(C·kh·kw) × (Ho·Wo)] patch matrix.
///
/// Column j holds the receptive field of output position j, channel-major
/// then row-major within the patch; padding contributes zeros.
pub fn im2col<T: Scalar>(
    input: &Tensor<T>,
    kernel: (usize, usize),
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    if input.rank() != 3 {
        return Err(Error::Dimension(format!(
            "im2col expects [C,H,W], got {:?}",
            input.shape()
        )));
    }
    let (c, h, w) = (input.shape[0], input.shape[1], input.shape[2]);
    let (kh, kw) = kernel;
    let ho = conv_output_len(h, kh, stride, pad)?;
    let wo = conv_output_len(w, kw, stride, pad)?;
    let mut out = Tensor::zeros(&[c * kh * kw, ho * wo]);
    im2col_into(
        &input.data,
        (c, h, w),
        kernel,
        stride,
        pad,
        (ho, wo),
        &mut out.data,
    );
    Ok(out)
}

/// Adjoint of [`im2col`]: scatter-adds patch-matrix gradients back onto the
/// [C×H×W] input gradient.
pub fn col2im<T: Scalar>(
    cols: &Tensor<T>,
    input_shape: (usize, usize, usize),
    kernel: (usize, usize),
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>> {
    let (c, h, w) = input_shape;
    let (kh, kw) = kernel;
    let ho = conv_output_len(h, kh, stride, pad)?;
    let wo = conv_output_len(w, kw, stride, pad)?;
    let cols_n = ho * wo;
    if cols.shape() != [c * kh * kw, cols_n] {
        return Err(Error::Dimension(format!(
            "col2im expects [{}, {}], got {:?}",
            c * kh * kw,
            cols_n,
            cols.shape()
        )));
    }
    let mut out = Tensor::zeros(&[c, h, w]);
    col2im_into(
        &cols.data,
        input_shape,
        kernel,
        stride,
        pad,
        (ho, wo),
        &mut out.data,
    );
    Ok(out)
}

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    XavierUniform,
    /// Zero-mean gaussian with the given standard deviation.
    Gaussian(f64),
    Zeros,
}

impl InitScheme {
    /// Parses a scheme name as it appears in config files.
    pub fn parse(s: &str) -> Result<InitScheme> {
        let s = s.trim();
        if s == "xavier_uniform" {
            return Ok(InitScheme::XavierUniform);
        }
        if s == "zeros" {
            return Ok(InitScheme::Zeros);
        }
        if let Some(rest) = s.strip_prefix("gaussian(") {
            if let Some(num) = rest.strip_suffix(')') {
                let sigma: f64 = num
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad gaussian sigma in `{}`", s)))?;
                return Ok(InitScheme::Gaussian(sigma));
            }
        }
        Err(Error::Config(format!("unknown init scheme `{}`", s)))
    }
}

/// Fan-in/fan-out for xavier bounds: rank-2 weights are [in, out], rank-4
/// convolution weights are [out_c, in_c, kh, kw].
fn fans(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        2 => (shape[0], shape[1]),
        4 => {
            let receptive = shape[2] * shape[3];
            (shape[1] * receptive, shape[0] * receptive)
        }
        _ => {
            let n: usize = shape.iter().product();
            (n, n)
        }
    }
}

/// Deterministic tensor initialization from an explicit seed.
pub fn rand_init<T: Scalar>(shape: &[usize], scheme: InitScheme, seed: u64) -> Tensor<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand_init_with(shape, scheme, &mut rng)
}

/// Same as [`rand_init`] but drawing from a caller-owned stream.
pub fn rand_init_with<T: Scalar>(
    shape: &[usize],
    scheme: InitScheme,
    rng: &mut ChaCha8Rng,
) -> Tensor<T> {
    let mut t = Tensor::zeros(shape);
    match scheme {
        InitScheme::Zeros => {}
        InitScheme::XavierUniform => {
            let (fan_in, fan_out) = fans(shape);
            let bound = T::of_f64((6.0 / (fan_in + fan_out) as f64).sqrt());
            let two = T::of_f64(2.0);
            for v in t.data.iter_mut() {
                let u = T::uniform01(rng);
                *v = bound * (two * u - T::one());
            }
        }
        InitScheme::Gaussian(sigma) => {
            let s = T::of_f64(sigma);
            for v in t.data.iter_mut() {
                *v = s * T::standard_normal(rng);
            }
        }
    }
    t
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Independent oracle: plain triple-loop matrix product.
    fn matmul_oracle(a: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let n = b.shape()[1];
        let mut out = Tensor::zeros(&[m, n]);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += a.get2(i, kk) * b.get2(kk, j);
                }
                out.set2(i, j, acc);
            }
        }
        out
    }

    fn rand_mat(shape: &[usize], seed: u64) -> Tensor<f64> {
        rand_init(shape, InitScheme::Gaussian(1.0), seed)
    }

    #[test]
    fn matmul_identity() {
        let i = Tensor::<f64>::identity(2);
        let a = Tensor::from_vec(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(matmul(&i, &a).unwrap(), a);
        assert_eq!(matmul(&a, &i).unwrap(), a);
    }

    #[test]
    fn matmul_dot_product() {
        let a = Tensor::from_vec(&[1, 2], vec![1.0f64, 2.0]).unwrap();
        let b = Tensor::from_vec(&[2, 1], vec![3.0, 4.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.shape(), &[1, 1]);
        assert_eq!(c.data()[0], 11.0);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let a = rand_mat(&[7, 5], 11);
        let b = rand_mat(&[5, 3], 12);
        let got = matmul(&a, &b).unwrap();
        let want = matmul_oracle(&a, &b);
        for (g, w) in got.data().iter().zip(want.data()) {
            assert!((g - w).abs() < 1e-12, "{} vs {}", g, w);
        }
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::<f64>::zeros(&[2, 3]);
        let b = Tensor::<f64>::zeros(&[4, 2]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{}", msg);
    }

    #[test]
    fn matmul_transposed_variants_agree() {
        let a = rand_mat(&[4, 6], 1);
        let b = rand_mat(&[6, 5], 2);
        let plain = matmul(&a, &b).unwrap();
        let via_bt = matmul_a_bt(&a, &b.transpose2().unwrap()).unwrap();
        let via_at = matmul_at_b(&a.transpose2().unwrap(), &b).unwrap();
        for ((p, x), y) in plain.data().iter().zip(via_bt.data()).zip(via_at.data()) {
            assert!((p - x).abs() < 1e-12);
            assert!((p - y).abs() < 1e-12);
        }
    }

    #[test]
    fn im2col_whole_image_patch() {
        let input = Tensor::from_vec(&[1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let cols = im2col(&input, (2, 2), 1, 0).unwrap();
        assert_eq!(cols.shape(), &[4, 1]);
        assert_eq!(cols.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn im2col_pad_border_columns_are_zero() {
        let input = Tensor::from_vec(&[1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let cols = im2col(&input, (1, 1), 1, 1).unwrap();
        // 4x4 output grid; every border position reads from the zero padding.
        assert_eq!(cols.shape(), &[1, 16]);
        for oi in 0..4 {
            for oj in 0..4 {
                let v = cols.data()[oi * 4 + oj];
                if oi == 0 || oi == 3 || oj == 0 || oj == 3 {
                    assert_eq!(v, 0.0);
                } else {
                    assert_eq!(v, input.data()[(oi - 1) * 2 + (oj - 1)]);
                }
            }
        }
    }

    #[test]
    fn im2col_rejects_nonpositive_output() {
        let input = Tensor::<f64>::zeros(&[1, 3, 3]);
        assert!(matches!(
            im2col(&input, (5, 5), 1, 0),
            Err(Error::Dimension(_))
        ));
    }

    /// Independent oracle: direct nested-loop cross-correlation.
    pub(crate) fn conv_oracle(
        input: &Tensor<f64>,
        weight: &Tensor<f64>, // [out_c, in_c, kh, kw]
        stride: usize,
        pad: usize,
    ) -> Tensor<f64> {
        let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let (oc, kh, kw) = (weight.shape()[0], weight.shape()[2], weight.shape()[3]);
        let ho = conv_output_len(h, kh, stride, pad).unwrap();
        let wo = conv_output_len(w, kw, stride, pad).unwrap();
        let mut out = Tensor::zeros(&[oc, ho, wo]);
        for o in 0..oc {
            for oi in 0..ho {
                for oj in 0..wo {
                    let mut acc = 0.0;
                    for ch in 0..c {
                        for ki in 0..kh {
                            for kj in 0..kw {
                                let ii = (oi * stride + ki) as isize - pad as isize;
                                let jj = (oj * stride + kj) as isize - pad as isize;
                                if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                                    continue;
                                }
                                let x = input.data()[(ch * h + ii as usize) * w + jj as usize];
                                let k =
                                    weight.data()[((o * c + ch) * kh + ki) * kw + kj];
                                acc += x * k;
                            }
                        }
                    }
                    out.data_mut()[(o * ho + oi) * wo + oj] = acc;
                }
            }
        }
        out
    }

    fn conv_via_im2col(
        input: &Tensor<f64>,
        weight: &Tensor<f64>,
        stride: usize,
        pad: usize,
    ) -> Tensor<f64> {
        let (oc, ic, kh, kw) = (
            weight.shape()[0],
            weight.shape()[1],
            weight.shape()[2],
            weight.shape()[3],
        );
        let cols = im2col(input, (kh, kw), stride, pad).unwrap();
        let wmat = weight.clone().reshape(&[oc, ic * kh * kw]).unwrap();
        matmul(&wmat, &cols).unwrap()
    }

    #[test]
    fn im2col_conv_matches_nested_loop_oracle() {
        let input = rand_mat(&[1, 3, 3], 3);
        let weight = rand_mat(&[2, 1, 2, 2], 4);
        let cols = im2col(&input, (2, 2), 1, 0).unwrap();
        assert_eq!(cols.shape()[1], 4);
        let got = conv_via_im2col(&input, &weight, 1, 0);
        let want = conv_oracle(&input, &weight, 1, 0);
        for (g, w) in got.data().iter().zip(want.data()) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn rand_init_zeros() {
        let t: Tensor<f64> = rand_init(&[3, 4], InitScheme::Zeros, 0);
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rand_init_same_seed_is_bit_identical() {
        let a: Tensor<f32> = rand_init(&[64, 64], InitScheme::XavierUniform, 99);
        let b: Tensor<f32> = rand_init(&[64, 64], InitScheme::XavierUniform, 99);
        assert_eq!(a, b);
        let c: Tensor<f32> = rand_init(&[64, 64], InitScheme::Gaussian(0.1), 99);
        let d: Tensor<f32> = rand_init(&[64, 64], InitScheme::Gaussian(0.1), 99);
        assert_eq!(c, d);
    }

    #[test]
    fn xavier_bounds_and_mean() {
        let t: Tensor<f64> = rand_init(&[512, 512], InitScheme::XavierUniform, 7);
        let bound = (6.0 / 1024.0f64).sqrt();
        let max = t.data().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max <= bound);
        let n = t.len() as f64;
        let mean: f64 = t.data().iter().sum::<f64>() / n;
        // variance of U(-b, b) is b^2/3, so the sample mean has sigma = b/sqrt(3n)
        let sigma_mean = bound / (3.0 * n).sqrt();
        assert!(mean.abs() < 3.0 * sigma_mean, "mean {} vs 3sigma {}", mean, 3.0 * sigma_mean);
    }

    #[test]
    fn init_scheme_parse() {
        assert_eq!(
            InitScheme::parse("xavier_uniform").unwrap(),
            InitScheme::XavierUniform
        );
        assert_eq!(
            InitScheme::parse("gaussian(0.01)").unwrap(),
            InitScheme::Gaussian(0.01)
        );
        assert!(matches!(
            InitScheme::parse("lecun"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn from_vec_validates_length() {
        assert!(Tensor::from_vec(&[2, 2], vec![1.0f32; 3]).is_err());
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)> for random x, y: the defining
        // property of the adjoint, checked directly.
        let x = rand_mat(&[2, 5, 4], 21);
        let cols = im2col(&x, (3, 2), 2, 1).unwrap();
        let y = rand_mat(&[cols.shape()[0], cols.shape()[1]], 22);
        let lhs: f64 = cols.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let xt = col2im(&y, (2, 5, 4), (3, 2), 2, 1).unwrap();
        let rhs: f64 = x.data().iter().zip(xt.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
