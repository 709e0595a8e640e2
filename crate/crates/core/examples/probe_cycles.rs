// Scratch: trace per-cycle controls and clearances in the canonical scenario.
use std::path::Path;
use nalgebra::DVector;
use nbtraj_core::config::load_scenario;
use nbtraj_core::planner::{HorizonPlan, StageCosts};
use nbtraj_core::sim::{run_scenario, ScenarioObserver};

struct Trace {
    chain: nbtraj_core::kinematics::KinematicChain<f64>,
    obstacles: Vec<nbtraj_core::geom::Primitive<f64>>,
    count: usize,
}

impl ScenarioObserver<f64> for Trace {
    fn on_plan(&mut self, t: f64, plan: &HorizonPlan<f64>, _stages: &[StageCosts<f64>]) {
        if self.count < 12 || self.count % 20 == 0 {
            let u0 = &plan.controls[0];
            let cl = self
                .chain
                .min_obstacle_clearance(&plan.states[0], &self.obstacles)
                .unwrap();
            println!(
                "t={t:5.2} |u0|={:6.3} viol={:9.2e} warn={} cost(goal={:8.2} ctrl={:6.3} obs={:8.3}) cl={:6.3} terminal_goal_err={:5.2}",
                u0.amax(),
                plan.max_violation,
                plan.warning,
                plan.cost.goal,
                plan.cost.control,
                plan.cost.obstacle,
                cl,
                (plan.states.last().unwrap() - DVector::from_vec(vec![1.57, -0.75, 0.0, 0.0, 0.0, 0.0])).amax(),
            );
        }
        self.count += 1;
    }
}

fn main() {
    let overrides = vec![
        ("planner.info_weight".to_string(), "0".to_string()),
        ("run.duration".to_string(), "6.0".to_string()),
    ];
    let (_, scenario, _) =
        load_scenario(Path::new("configs/scenarios/demonstrator.toml"), &overrides).unwrap();
    let mut trace = Trace {
        chain: scenario.chain.clone(),
        obstacles: scenario.scene.primitives_at(0.0),
        count: 0,
    };
    let metrics = run_scenario(&scenario, &mut trace).unwrap();
    println!("reached={} travel={}", metrics.reached_goal, metrics.travel_time);
}
