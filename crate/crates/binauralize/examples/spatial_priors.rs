//! Visualize the logistic left/right target maps and the annealing schedule.

use binauralize::priors::{anneal_weight, logistic_targets, AnnealSchedule, PriorConfig};

fn main() -> binauralize::Result<()> {
    let cfg = PriorConfig::for_grid(14, 28);
    let (wl, wr) = logistic_targets(&cfg)?;

    println!(
        "14x28 targets, slope {:.3}, center {:.1}",
        cfg.slope, cfg.center
    );
    println!(
        "left map:  sum {:.6}, left-half mass {:.3}",
        wl.values().iter().sum::<f64>(),
        wl.left_half_mass()
    );
    println!(
        "right map: sum {:.6}, left-half mass {:.3}",
        wr.values().iter().sum::<f64>(),
        wr.left_half_mass()
    );

    // One row of each map as a bar sketch (values are row-constant).
    let sketch = |values: &[f64]| -> String {
        let max = values.iter().cloned().fold(0.0, f64::max);
        values
            .iter()
            .map(|v| {
                let level = (v / max * 4.0).round() as usize;
                [' ', '.', ':', '+', '#'][level]
            })
            .collect()
    };
    let row_l: Vec<f64> = (0..28).map(|x| wl.at(0, x)).collect();
    let row_r: Vec<f64> = (0..28).map(|x| wr.at(0, x)).collect();
    println!("W_L row: |{}|", sketch(&row_l));
    println!("W_R row: |{}|", sketch(&row_r));

    let sched = AnnealSchedule::new(2.0, 1000)?;
    println!("\nanneal weight (lambda_0 = 2, T = 1000):");
    for t in [0u64, 250, 500, 750, 1000, 1500] {
        println!("  t = {:>4}: lambda = {:.3}", t, anneal_weight(t, &sched));
    }
    Ok(())
}
