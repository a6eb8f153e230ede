//! Train the dual-head attention against the logistic spatial prior on
//! synthetic left-blob scenes and watch the left-half mass move.

use binauralize::losses::{train_prior_demo, DEMO_LEARNING_RATE};
use binauralize::priors::{AnnealSchedule, PriorConfig};
use binauralize::toolkit::{demo_scenes, synth_scene};
use binauralize::visual::FrameTensor;

fn main() -> binauralize::Result<()> {
    let scenes: Vec<FrameTensor> = demo_scenes()
        .iter()
        .map(|spec| synth_scene(spec, 0).map(|(frame, _, _, _)| frame))
        .collect::<binauralize::Result<_>>()?;

    let steps = 200;
    let sched = AnnealSchedule::new(2.0, steps / 4)?;
    let cfg = PriorConfig::for_grid(14, 28);
    println!(
        "training {} scenes for {} steps (lr {:.0e}, anneal over {})",
        scenes.len(),
        steps,
        DEMO_LEARNING_RATE,
        sched.t_anneal
    );

    let (_, trace) = train_prior_demo(&scenes, &cfg, &sched, steps, DEMO_LEARNING_RATE, 0)?;
    for record in trace.iter().step_by(20) {
        println!(
            "step {:>4}: loss {:.3e}  lambda {:.3}  left mass {:.3}",
            record.step, record.loss, record.lambda_t, record.left_mass
        );
    }
    let last = trace.last().unwrap();
    println!(
        "final: left mass {:.3} (targets put ~0.83 of their mass left of center)",
        last.left_mass
    );
    Ok(())
}
