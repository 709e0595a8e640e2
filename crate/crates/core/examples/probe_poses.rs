// Scratch utility: run the canonical scenario at a given info weight and
// report the headline metrics.
use std::path::Path;
use std::time::Instant;

use nbtraj_core::config::load_scenario;
use nbtraj_core::sim::{run_scenario, NullObserver};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let w: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(1);
    let overrides = vec![
        ("planner.info_weight".to_string(), format!("{w}")),
        ("run.seed".to_string(), format!("{seed}")),
    ];
    let (_, scenario, _) =
        load_scenario(Path::new("configs/scenarios/demonstrator.toml"), &overrides).unwrap();
    let t0 = Instant::now();
    let metrics = run_scenario(&scenario, &mut NullObserver).unwrap();
    let wall = t0.elapsed().as_secs_f64();
    println!(
        "w_i={w} seed={seed} auc={:.4} travel={:.2} reached={} remaining={:.3} vr_final={:?} failures={} wall={:.1}s",
        metrics.auc,
        metrics.travel_time,
        metrics.reached_goal,
        metrics.remaining_ig,
        metrics.v_r_final(),
        metrics.planner_failures,
        wall
    );
    // Orientation trace summary: fraction of samples with O > 0.5.
    let frac = metrics.series.iter().filter(|s| s.orientation > 0.5).count() as f64
        / metrics.series.len() as f64;
    println!("  oriented_fraction={frac:.2} first_product={:.3} last_product={:.3}",
        metrics.series.first().map(|s| s.product).unwrap_or(0.0),
        metrics.series.last().map(|s| s.product).unwrap_or(0.0));
    if let (Some(first), Some(last)) = (metrics.v_r_series.first(), metrics.v_r_series.last()) {
        println!("  vr_first={:.1} vr_last={:.1}", first.1, last.1);
    }
}
