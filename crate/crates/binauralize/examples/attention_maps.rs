//! Run the toy visual encoder on a synthetic scene and inspect the dual-head
//! attention maps and the modulated ear features.

use binauralize::toolkit::{synth_scene, SceneSpec};
use binauralize::visual::{
    dual_head_attention, encode_frame, modulate_lr, pool_descriptor, EncoderConfig, EncoderParams,
};

fn main() -> binauralize::Result<()> {
    let spec = SceneSpec {
        azimuth: -0.7,
        blob_radius: 60.0,
        frame_height: 224,
        frame_width: 448,
        ..SceneSpec::default()
    };
    let (frame, _, _, _) = synth_scene(&spec, 1)?;

    let params = EncoderParams::new(EncoderConfig::default(), 42);
    let v = encode_frame(&frame, &params)?;
    println!(
        "frame {}x{} -> features {} x {} x {}",
        frame.height(),
        frame.width(),
        v.channels(),
        v.height(),
        v.width()
    );

    let pair = dual_head_attention(&v, &params)?;
    println!(
        "attention masses: L sums to {:.6}, R sums to {:.6}",
        pair.attn_l.values().iter().sum::<f64>(),
        pair.attn_r.values().iter().sum::<f64>()
    );
    println!(
        "left-half mass:   L {:.3}, R {:.3} (untrained heads stay near 0.5)",
        pair.attn_l.left_half_mass(),
        pair.attn_r.left_half_mass()
    );

    let (v_l, v_r) = modulate_lr(&v, &pair)?;
    let mass = |m: &binauralize::visual::FeatureMap| -> f64 {
        m.data().iter().map(|x| x.abs()).sum::<f64>() / m.data().len() as f64
    };
    println!(
        "modulated feature mean |value|: shared {:.4}, left {:.6}, right {:.6}",
        mass(&v),
        mass(&v_l),
        mass(&v_r)
    );

    let descriptor = pool_descriptor(&v, &params)?;
    println!(
        "descriptor ({} dims), first four: {:?}",
        descriptor.len(),
        descriptor[..4]
            .iter()
            .map(|d| (d * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    Ok(())
}
