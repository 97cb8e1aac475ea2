//! Codec-free image and tensor file formats: binary PPM/PGM and a raw
//! little-endian float tensor container. Everything round-trips bit-exactly.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::io::{Read, Write};
use std::path::Path;

pub const RAW_TENSOR_MAGIC: &[u8; 7] = b"MTTENS1";

/// Pixel values are mapped to [0, 1] on read (v / 255).
pub fn read_ppm<T: Scalar>(bytes: &[u8]) -> Result<Tensor<T>> {
    let (dims, rest) = parse_netpbm_header(bytes, b"P6")?;
    let (w, h, maxval) = (dims.0, dims.1, dims.2);
    if maxval != 255 {
        return Err(Error::Data(format!(
            "only 8-bit ppm supported, maxval {}",
            maxval
        )));
    }
    let need = w * h * 3;
    if rest.len() < need {
        return Err(Error::Data(format!(
            "ppm pixel data truncated: {} of {} bytes",
            rest.len(),
            need
        )));
    }
    let scale = T::of_f64(1.0 / 255.0);
    let mut t = Tensor::zeros(&[3, h, w]);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..3 {
                let v = rest[(y * w + x) * 3 + ch];
                t.data_mut()[ch * h * w + y * w + x] = T::of_f64(v as f64) * scale;
            }
        }
    }
    Ok(t)
}

/// Values are clamped to [0, 1] and quantized to 8 bits.
pub fn write_ppm<T: Scalar>(image: &Tensor<T>) -> Result<Vec<u8>> {
    if image.rank() != 3 || image.shape()[0] != 3 {
        return Err(Error::Dimension(format!(
            "ppm wants [3,H,W], got {:?}",
            image.shape()
        )));
    }
    let (h, w) = (image.shape()[1], image.shape()[2]);
    let mut out = format!("P6\n{} {}\n255\n", w, h).into_bytes();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..3 {
                let v = image.data()[ch * h * w + y * w + x].as_f64();
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    Ok(out)
}

/// Grayscale PGM with raw 8-bit samples and an optional `#` comment line.
pub fn write_pgm(width: usize, height: usize, pixels: &[u8], comment: &str) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::Dimension(format!(
            "pgm {}x{} needs {} pixels, got {}",
            width,
            height,
            width * height,
            pixels.len()
        )));
    }
    let mut out = Vec::new();
    out.extend_from_slice(b"P5\n");
    for line in comment.lines() {
        out.extend_from_slice(format!("# {}\n", line).as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", width, height).as_bytes());
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let (dims, rest) = parse_netpbm_header(bytes, b"P5")?;
    let (w, h, maxval) = dims;
    if maxval != 255 {
        return Err(Error::Data(format!(
            "only 8-bit pgm supported, maxval {}",
            maxval
        )));
    }
    if rest.len() < w * h {
        return Err(Error::Data("pgm pixel data truncated".into()));
    }
    Ok((w, h, rest[..w * h].to_vec()))
}

/// Reads magic, then three whitespace-separated integers, skipping `#`
/// comments; returns them plus the raw sample bytes.
fn parse_netpbm_header<'a>(
    bytes: &'a [u8],
    magic: &[u8],
) -> Result<((usize, usize, usize), &'a [u8])> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(Error::Data(format!(
            "not a {} file",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Data("malformed netpbm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Data("malformed netpbm header".into()))?;
    }
    // single whitespace byte separates header from samples
    if pos >= bytes.len() {
        return Err(Error::Data("netpbm file has no pixel data".into()));
    }
    pos += 1;
    Ok(((fields[0], fields[1], fields[2]), &bytes[pos..]))
}

/// Raw tensor container: magic, u32 rank, u32 dims, then little-endian
/// 32-bit floats row-major.
pub fn write_raw_tensor<T: Scalar, W: Write>(tensor: &Tensor<T>, mut out: W) -> Result<()> {
    out.write_all(RAW_TENSOR_MAGIC)?;
    out.write_all(&(tensor.rank() as u32).to_le_bytes())?;
    for &d in tensor.shape() {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    for &v in tensor.data() {
        out.write_all(&v.as_f32().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raw_tensor<T: Scalar, R: Read>(mut input: R) -> Result<Tensor<T>> {
    let mut magic = [0u8; 7];
    input.read_exact(&mut magic)?;
    if &magic != RAW_TENSOR_MAGIC {
        return Err(Error::Data("not a raw tensor file (bad magic)".into()));
    }
    let mut quad = [0u8; 4];
    input.read_exact(&mut quad)?;
    let rank = u32::from_le_bytes(quad) as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::Data(format!("implausible tensor rank {}", rank)));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        input.read_exact(&mut quad)?;
        shape.push(u32::from_le_bytes(quad) as usize);
    }
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        input.read_exact(&mut quad)?;
        data.push(T::of_f32(f32::from_le_bytes(quad)));
    }
    Tensor::from_vec(&shape, data)
}

pub fn read_raw_tensor_file<T: Scalar>(path: &Path) -> Result<Tensor<T>> {
    let file = std::fs::File::open(path)?;
    read_raw_tensor(std::io::BufReader::new(file))
}

pub fn write_raw_tensor_file<T: Scalar>(tensor: &Tensor<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_raw_tensor(tensor, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{rand_init, InitScheme};

    #[test]
    fn ppm_round_trip_is_exact_on_quantized_values() {
        // values that are exact multiples of 1/255 survive the round trip
        let mut img = Tensor::<f32>::zeros(&[3, 2, 2]);
        for (i, v) in img.data_mut().iter_mut().enumerate() {
            *v = (i as f32 * 13.0 % 256.0) / 255.0;
        }
        let bytes = write_ppm(&img).unwrap();
        let back: Tensor<f32> = read_ppm(&bytes).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn ppm_header_with_comment() {
        let bytes = b"P6\n# a comment\n2 1\n255\n\x01\x02\x03\x04\x05\x06";
        let img: Tensor<f64> = read_ppm(bytes).unwrap();
        assert_eq!(img.shape(), &[3, 1, 2]);
        assert!((img.data()[0] - 1.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_round_trip() {
        let pixels: Vec<u8> = (0..12).map(|i| (i * 21) as u8).collect();
        let bytes = write_pgm(4, 3, &pixels, "scale: test").unwrap();
        let (w, h, back) = read_pgm(&bytes).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(back, pixels);
    }

    #[test]
    fn raw_tensor_round_trip_bit_exact() {
        let t: Tensor<f32> = rand_init(&[2, 3, 4], InitScheme::Gaussian(1.0), 3);
        let mut buf = Vec::new();
        write_raw_tensor(&t, &mut buf).unwrap();
        let back: Tensor<f32> = read_raw_tensor(&buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn raw_tensor_rejects_bad_magic_and_truncation() {
        let t: Tensor<f32> = rand_init(&[4, 4], InitScheme::Gaussian(1.0), 4);
        let mut buf = Vec::new();
        write_raw_tensor(&t, &mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(read_raw_tensor::<f32, _>(&buf[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_raw_tensor::<f32, _>(&bad[..]).is_err());
    }
}
