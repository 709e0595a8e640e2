// Scratch: dissect the first planning cycle of the canonical scenario.
use std::path::Path;
use nalgebra::DVector;
use nbtraj_core::config::load_scenario;
use nbtraj_core::planner::{optimize_horizon, PlannerContext};
use nbtraj_core::infodist::IdwParams;

fn main() {
    let overrides = vec![("planner.info_weight".to_string(), "0".to_string())];
    let (_, scn, _) =
        load_scenario(Path::new("configs/scenarios/demonstrator.toml"), &overrides).unwrap();
    let obstacles = scn.scene.primitives_at(0.0);
    let ctx = PlannerContext {
        chain: &scn.chain,
        obstacles: &obstacles,
        poi: scn.scene.poi,
        camera: scn.camera.model,
        buffer: None,
        idw: IdwParams::default(),
        goal: scn.goal.clone(),
        reference: None,
        previous_control: None,
        plan_start_time: 0.0,
    };
    for outers in [1usize, 2, 4, 6, 10, 16] {
        let mut cfg = scn.horizon.clone();
        cfg.max_outer_iterations = outers;
        cfg.max_inner_iterations = 100;
        let t0 = std::time::Instant::now();
        let plan = optimize_horizon(&ctx, &cfg, &scn.start, vec![DVector::zeros(6); cfg.steps]).unwrap();
        // Categorize violations on the returned plan.
        let mut worst_cl = f64::INFINITY;
        for x in &plan.states {
            worst_cl = worst_cl.min(scn.chain.min_obstacle_clearance(x, &obstacles).unwrap());
        }
        let mut worst_acc = 0.0f64;
        let mut prev = DVector::zeros(6);
        for u in &plan.controls {
            for j in 0..6 {
                let acc = ((u[j] - prev[j]) / cfg.dt).abs();
                let lim = scn.chain.limits()[j].acceleration.1;
                worst_acc = worst_acc.max(acc - lim);
            }
            prev = u.clone();
        }
        println!(
            "outers={outers:2} viol={:9.2e} warn={} |u0|={:5.3} goal_cost={:8.2} min_cl={:7.3} acc_excess={:7.3} wall={:.2}s",
            plan.max_violation, plan.warning, plan.controls[0].amax(), plan.cost.goal, worst_cl, worst_acc,
            t0.elapsed().as_secs_f64()
        );
    }
}
