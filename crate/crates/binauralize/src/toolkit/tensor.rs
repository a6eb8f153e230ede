//! The BTF1 tensor container: magic `BTF1`, u32 LE ndim, u32 LE dims,
//! row-major f32 LE payload. Round trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ComplexSpectrogram, StftConfig};
use crate::visual::FrameTensor;

pub const TENSOR_MAGIC: [u8; 4] = *b"BTF1";

/// Writes a tensor file. `data` must hold exactly the product of `dims`
/// elements.
pub fn write_tensor(path: &Path, dims: &[u32], data: &[f32]) -> Result<()> {
    let expected: u64 = dims.iter().map(|&d| d as u64).product();
    if expected != data.len() as u64 {
        return Err(Error::ShapeMismatch(format!(
            "dims {:?} imply {} elements, got {}",
            dims,
            expected,
            data.len()
        )));
    }
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&TENSOR_MAGIC)?;
    file.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        file.write_all(&d.to_le_bytes())?;
    }
    for v in data {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

fn read_u32(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| Error::Format("truncated tensor header".into()))?;
    Ok(u32::from_le_bytes(buf))
}

/// Reads a tensor file back as `(dims, data)`.
pub fn read_tensor(path: &Path) -> Result<(Vec<u32>, Vec<f32>)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated tensor header".into()))?;
    if magic != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected BTF1",
            magic
        )));
    }
    let ndim = read_u32(&mut reader)?;
    if ndim > 8 {
        return Err(Error::Format(format!("implausible ndim {}", ndim)));
    }
    let mut dims = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        dims.push(read_u32(&mut reader)?);
    }
    let count: u64 = dims.iter().map(|&d| d as u64).product();
    let mut payload = vec![0u8; (count * 4) as usize];
    reader
        .read_exact(&mut payload)
        .map_err(|_| Error::Format("truncated tensor payload".into()))?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((dims, data))
}

/// Frame as a `[3, H, W]` tensor.
pub fn write_frame(path: &Path, frame: &FrameTensor) -> Result<()> {
    let dims = [3, frame.height() as u32, frame.width() as u32];
    let data: Vec<f32> = frame.data().iter().map(|&v| v as f32).collect();
    write_tensor(path, &dims, &data)
}

/// Reads a `[3, H, W]` tensor as a frame, clamping f32 rounding into `[0, 1]`.
pub fn read_frame(path: &Path) -> Result<FrameTensor> {
    let (dims, data) = read_tensor(path)?;
    if dims.len() != 3 || dims[0] != 3 {
        return Err(Error::Format(format!(
            "frame tensor expects dims [3, H, W], got {:?}",
            dims
        )));
    }
    let values = data
        .iter()
        .map(|&v| (v as f64).clamp(0.0, 1.0))
        .collect();
    FrameTensor::new(dims[1] as usize, dims[2] as usize, values)
}

/// Spectrogram as a `[2, F, U]` tensor (channel 0 real, channel 1 imaginary).
pub fn write_spectrogram(path: &Path, spec: &ComplexSpectrogram) -> Result<()> {
    let (f, u) = (spec.freq_bins(), spec.frames());
    let mut data = Vec::with_capacity(2 * f * u);
    for i in 0..f {
        for j in 0..u {
            data.push(spec.at(i, j).re as f32);
        }
    }
    for i in 0..f {
        for j in 0..u {
            data.push(spec.at(i, j).im as f32);
        }
    }
    write_tensor(path, &[2, f as u32, u as u32], &data)
}

/// Reads a `[2, F, U]` tensor as a spectrogram under the given config.
pub fn read_spectrogram(
    path: &Path,
    cfg: StftConfig,
    sample_rate: u32,
) -> Result<ComplexSpectrogram> {
    let (dims, data) = read_tensor(path)?;
    if dims.len() != 3 || dims[0] != 2 {
        return Err(Error::Format(format!(
            "spectrogram tensor expects dims [2, F, U], got {:?}",
            dims
        )));
    }
    let (f, u) = (dims[1] as usize, dims[2] as usize);
    if f != cfg.freq_bins() {
        return Err(Error::Format(format!(
            "tensor has {} bins but config expects {}",
            f,
            cfg.freq_bins()
        )));
    }
    let mut spec = ComplexSpectrogram::zeros(cfg, sample_rate, u);
    for i in 0..f {
        for j in 0..u {
            let re = data[i * u + j] as f64;
            let im = data[f * u + i * u + j] as f64;
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite("spectrogram tensor"));
            }
            spec.set(i, j, Complex64::new(re, im));
        }
    }
    Ok(spec)
}

/// `H x W` map (e.g. a prior target) as a 2D tensor.
pub fn write_map(path: &Path, height: usize, width: usize, values: &[f64]) -> Result<()> {
    let data: Vec<f32> = values.iter().map(|&v| v as f32).collect();
    write_tensor(path, &[height as u32, width as u32], &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn header_arithmetic_gives_40_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.btf");
        write_tensor(&path, &[2, 3], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 40);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.btf");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f32> = (0..60).map(|_| rng.gen_range(-10.0..10.0)).collect();
        write_tensor(&path, &[3, 4, 5], &data).unwrap();
        let (dims, back) = read_tensor(&path).unwrap();
        assert_eq!(dims, vec![3, 4, 5]);
        assert_eq!(data.len(), back.len());
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn zero_dim_tensor_is_accepted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.btf");
        write_tensor(&path, &[0], &[]).unwrap();
        let (dims, data) = read_tensor(&path).unwrap();
        assert_eq!(dims, vec![0]);
        assert!(data.is_empty());
    }

    #[test]
    fn bad_magic_and_truncation_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.btf");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        assert!(matches!(read_tensor(&path), Err(Error::Format(_))));

        let path2 = dir.path().join("short.btf");
        write_tensor(&path2, &[4], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = std::fs::read(&path2).unwrap();
        std::fs::write(&path2, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_tensor(&path2), Err(Error::Format(_))));
    }

    #[test]
    fn dims_payload_mismatch_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.btf");
        assert!(write_tensor(&path, &[2, 2], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spectrogram_tensor_round_trip() {
        let cfg = StftConfig {
            window_len: 8,
            hop_len: 4,
            fft_len: 8,
            window_kind: crate::spectral::WindowKind::Hann,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<Complex64> = (0..cfg.freq_bins() * 6)
            .map(|_| {
                Complex64::new(
                    rng.gen_range(-1.0f32..1.0) as f64,
                    rng.gen_range(-1.0f32..1.0) as f64,
                )
            })
            .collect();
        let spec = ComplexSpectrogram::from_data(cfg, 16_000, 6, data).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("spec.btf");
        write_spectrogram(&path, &spec).unwrap();
        let back = read_spectrogram(&path, cfg, 16_000).unwrap();
        for (a, b) in spec.data().iter().zip(back.data()) {
            // Values were chosen representable in f32, so exact.
            assert_eq!(a, b);
        }
    }
}
