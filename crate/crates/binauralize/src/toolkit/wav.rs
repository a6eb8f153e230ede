//! Minimal RIFF/WAVE reader and writer: PCM16 and float32, mono or stereo,
//! with linear-interpolation resampling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::Waveform;

/// Sample encodings supported on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

/// Writes interleaved channels (1 or 2) sharing length and rate.
pub fn write_wav(path: &Path, channels: &[&Waveform], format: WavFormat) -> Result<()> {
    if channels.is_empty() || channels.len() > 2 {
        return Err(Error::InvalidArg(format!(
            "wav writer supports 1 or 2 channels, got {}",
            channels.len()
        )));
    }
    let len = channels[0].len();
    let rate = channels[0].sample_rate();
    for ch in channels {
        if ch.len() != len || ch.sample_rate() != rate {
            return Err(Error::ShapeMismatch(
                "wav channels must share length and sample rate".into(),
            ));
        }
    }

    let num_channels = channels.len() as u16;
    let (format_code, bits): (u16, u16) = match format {
        WavFormat::Pcm16 => (1, 16),
        WavFormat::Float32 => (3, 32),
    };
    let bytes_per_sample = (bits / 8) as u32;
    let byte_rate = rate * num_channels as u32 * bytes_per_sample;
    let block_align = num_channels * (bits / 8);
    let data_len = (len as u32) * num_channels as u32 * bytes_per_sample;
    // fmt(24) + data header(8) + payload, plus a fact chunk for float data.
    let fact_len = if format == WavFormat::Float32 { 12 } else { 0 };
    let riff_len = 4 + 24 + fact_len + 8 + data_len;

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"RIFF")?;
    out.write_all(&riff_len.to_le_bytes())?;
    out.write_all(b"WAVE")?;
    out.write_all(b"fmt ")?;
    out.write_all(&16u32.to_le_bytes())?;
    out.write_all(&format_code.to_le_bytes())?;
    out.write_all(&num_channels.to_le_bytes())?;
    out.write_all(&rate.to_le_bytes())?;
    out.write_all(&byte_rate.to_le_bytes())?;
    out.write_all(&block_align.to_le_bytes())?;
    out.write_all(&bits.to_le_bytes())?;
    if format == WavFormat::Float32 {
        out.write_all(b"fact")?;
        out.write_all(&4u32.to_le_bytes())?;
        out.write_all(&(len as u32).to_le_bytes())?;
    }
    out.write_all(b"data")?;
    out.write_all(&data_len.to_le_bytes())?;
    for i in 0..len {
        for ch in channels {
            let s = ch.samples()[i];
            match format {
                WavFormat::Pcm16 => {
                    let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    out.write_all(&q.to_le_bytes())?;
                }
                WavFormat::Float32 => {
                    out.write_all(&(s as f32).to_le_bytes())?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct FmtChunk {
    format_code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Reads a WAV file at its native rate, one waveform per channel.
pub fn read_wav(path: &Path) -> Result<Vec<Waveform>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated wav header".into()))?;
    if &header[0..4] != b"RIFF" || &header[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<Vec<u8>> = None;
    loop {
        let mut chunk_header = [0u8; 8];
        match reader.read_exact(&mut chunk_header) {
            Ok(()) => {}
            Err(_) => break,
        }
        let id = &chunk_header[0..4];
        let size = u32::from_le_bytes([
            chunk_header[4],
            chunk_header[5],
            chunk_header[6],
            chunk_header[7],
        ]) as usize;
        let mut payload = vec![0u8; size];
        reader
            .read_exact(&mut payload)
            .map_err(|_| Error::Format("truncated wav chunk".into()))?;
        if size % 2 == 1 {
            let mut pad = [0u8; 1];
            let _ = reader.read(&mut pad)?;
        }
        if id == b"fmt " {
            if size < 16 {
                return Err(Error::Format("fmt chunk too short".into()));
            }
            fmt = Some(FmtChunk {
                format_code: u16::from_le_bytes([payload[0], payload[1]]),
                channels: u16::from_le_bytes([payload[2], payload[3]]),
                sample_rate: u32::from_le_bytes([payload[4], payload[5], payload[6], payload[7]]),
                bits: u16::from_le_bytes([payload[14], payload[15]]),
            });
        } else if id == b"data" {
            data = Some(payload);
        }
    }

    let fmt = fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(Error::Format(format!(
            "unsupported channel count {}",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::Format("zero sample rate".into()));
    }

    let channels = fmt.channels as usize;
    let samples: Vec<f64> = match (fmt.format_code, fmt.bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        (code, bits) => {
            return Err(Error::Format(format!(
                "unsupported codec: format {} at {} bits",
                code, bits
            )))
        }
    };

    let frames = samples.len() / channels;
    let mut out = Vec::with_capacity(channels);
    for c in 0..channels {
        let ch: Vec<f64> = (0..frames).map(|i| samples[i * channels + c]).collect();
        out.push(Waveform::new(ch, fmt.sample_rate)?);
    }
    Ok(out)
}

/// Linear-interpolation resampling.
pub fn resample(wave: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::InvalidArg("target rate must be positive".into()));
    }
    if wave.sample_rate() == target_rate {
        return Ok(wave.clone());
    }
    let src = wave.samples();
    if src.is_empty() {
        return Waveform::new(Vec::new(), target_rate);
    }
    let ratio = wave.sample_rate() as f64 / target_rate as f64;
    let out_len = ((src.len() as f64) / ratio).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let pos = i as f64 * ratio;
        let i0 = (pos.floor() as usize).min(src.len() - 1);
        let i1 = (i0 + 1).min(src.len() - 1);
        let frac = pos - i0 as f64;
        out.push(src[i0] * (1.0 - frac) + src[i1] * frac);
    }
    Waveform::new(out, target_rate)
}

/// Reads a WAV file and resamples every channel to `target_rate`.
pub fn read_wav_at(path: &Path, target_rate: u32) -> Result<Vec<Waveform>> {
    read_wav(path)?
        .iter()
        .map(|ch| resample(ch, target_rate))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_wave(len: usize, rate: u32, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.gen_range(-0.9..0.9)).collect(), rate).unwrap()
    }

    #[test]
    fn float32_stereo_round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f32.wav");
        // Quantize through f32 first so the on-disk format is exact.
        let l = Waveform::new(
            random_wave(2000, 16_000, 1)
                .samples()
                .iter()
                .map(|&s| s as f32 as f64)
                .collect(),
            16_000,
        )
        .unwrap();
        let r = Waveform::new(
            random_wave(2000, 16_000, 2)
                .samples()
                .iter()
                .map(|&s| s as f32 as f64)
                .collect(),
            16_000,
        )
        .unwrap();
        write_wav(&path, &[&l, &r], WavFormat::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].sample_rate(), 16_000);
        assert_eq!(back[0].samples(), l.samples());
        assert_eq!(back[1].samples(), r.samples());
    }

    #[test]
    fn pcm16_full_scale_sine_error_within_quantization_bound() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("pcm.wav");
        let sine = Waveform::new(
            (0..4000)
                .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16_000.0).sin())
                .collect(),
            16_000,
        )
        .unwrap();
        write_wav(&path, &[&sine], WavFormat::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        let bound = 1.0 / 32768.0;
        for (a, b) in sine.samples().iter().zip(back[0].samples()) {
            assert!((a - b).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn resampling_48k_to_16k_scales_length_by_a_third() {
        let wave = random_wave(14_400, 48_000, 3);
        let down = resample(&wave, 16_000).unwrap();
        assert!((down.len() as i64 - 4800).abs() <= 1);
        assert_eq!(down.sample_rate(), 16_000);

        let dir = tempdir().unwrap();
        let path = dir.path().join("48k.wav");
        write_wav(&path, &[&wave], WavFormat::Float32).unwrap();
        let back = read_wav_at(&path, 16_000).unwrap();
        assert!((back[0].len() as i64 - 4800).abs() <= 1);
    }

    #[test]
    fn resampling_preserves_a_slow_ramp() {
        let ramp = Waveform::new((0..480).map(|i| i as f64 / 480.0).collect(), 48_000).unwrap();
        let down = resample(&ramp, 16_000).unwrap();
        for (i, v) in down.samples().iter().enumerate() {
            let expect = (i * 3) as f64 / 480.0;
            assert!((v - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.wav");
        std::fs::write(&path, b"RIFFxxxxNOPE").unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Format(_))));

        let path2 = dir.path().join("empty.wav");
        std::fs::write(&path2, b"RI").unwrap();
        assert!(matches!(read_wav(&path2), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_codec_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("alaw.wav");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&28u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&6u16.to_le_bytes()); // a-law
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&8000u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&8u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match read_wav(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("unsupported codec")),
            other => panic!("expected format error, got {:?}", other.map(|v| v.len())),
        }
    }
}
