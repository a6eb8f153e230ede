//! Parameter-set container: one BTF1 file per tensor plus an ordered
//! manifest, so encoder and network weights round-trip for reproducible
//! runs.

use std::path::Path;

use crate::error::{Error, Result};
use crate::toolkit::tensor::{read_tensor, write_tensor};

/// `(name, dims, row-major f32 data)` as produced by the parameter sets.
pub type NamedTensor = (String, Vec<u32>, Vec<f32>);

/// Writes every named tensor as `{name}.btf` and the ordering as
/// `manifest.txt`.
pub fn save_params(dir: &Path, tensors: &[NamedTensor]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (name, dims, data) in tensors {
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(Error::InvalidArg(format!("bad tensor name '{}'", name)));
        }
        write_tensor(&dir.join(format!("{name}.btf")), dims, data)?;
        manifest.push_str(name);
        manifest.push('\n');
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

/// Reads tensors back in manifest order.
pub fn load_params(dir: &Path) -> Result<Vec<NamedTensor>> {
    let manifest = std::fs::read_to_string(dir.join("manifest.txt"))?;
    let mut out = Vec::new();
    for name in manifest.lines().filter(|l| !l.trim().is_empty()) {
        let (dims, data) = read_tensor(&dir.join(format!("{name}.btf")))?;
        out.push((name.to_string(), dims, data));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audionet::{NetConfig, NetParams};
    use crate::spectral::{stft, StftConfig, Waveform};
    use crate::visual::{EncoderConfig, EncoderParams};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    #[test]
    fn encoder_parameters_round_trip() {
        let dir = tempdir().unwrap();
        let params = EncoderParams::new(EncoderConfig::default(), 17);
        let tensors = params.named_tensors();
        save_params(dir.path(), &tensors).unwrap();
        let loaded = load_params(dir.path()).unwrap();
        assert_eq!(tensors.len(), loaded.len());
        for ((n1, d1, v1), (n2, d2, v2)) in tensors.iter().zip(&loaded) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2);
            for (a, b) in v1.iter().zip(v2) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        let rebuilt = EncoderParams::from_named_tensors(EncoderConfig::default(), &loaded).unwrap();
        // A second serialization is a fixpoint.
        assert_eq!(rebuilt.named_tensors(), tensors);
    }

    #[test]
    fn network_parameters_round_trip_and_run() {
        let dir = tempdir().unwrap();
        let net = NetParams::new(NetConfig::default(), 23);
        save_params(dir.path(), &net.named_tensors()).unwrap();
        let loaded = load_params(dir.path()).unwrap();
        let rebuilt = NetParams::from_named_tensors(NetConfig::default(), &loaded).unwrap();
        assert_eq!(rebuilt.named_tensors(), net.named_tensors());

        // Two rebuilds drive the network identically.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wave = Waveform::new(
            (0..600).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            16_000,
        )
        .unwrap();
        let cfg = StftConfig {
            window_len: 32,
            hop_len: 8,
            fft_len: 32,
            window_kind: crate::spectral::WindowKind::Hann,
        };
        let spec = stft(&wave, cfg).unwrap();
        let stack = crate::audionet::RealSpectrogramStack::from_spectrogram(&spec);
        let desc = vec![0.2; 16];
        let rebuilt2 = NetParams::from_named_tensors(NetConfig::default(), &loaded).unwrap();
        let (a, _) = crate::audionet::unet_forward(&stack, &desc, &rebuilt).unwrap();
        let (b, _) = crate::audionet::unet_forward(&stack, &desc, &rebuilt2).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn mismatched_tensors_are_rejected() {
        let params = EncoderParams::new(EncoderConfig::default(), 3);
        let mut tensors = params.named_tensors();
        tensors[0].1 = vec![1, 2, 3];
        assert!(EncoderParams::from_named_tensors(EncoderConfig::default(), &tensors).is_err());
        let net_tensors = NetParams::new(NetConfig::default(), 3).named_tensors();
        assert!(NetParams::from_named_tensors(NetConfig::default(), &net_tensors[1..]).is_err());
    }
}
