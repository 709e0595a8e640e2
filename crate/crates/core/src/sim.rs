//! Synthetic environment, simulated depth camera, and the closed-loop
//! scenario runner.
//!
//! Scenes are analytic primitives (boxes, spheres, planes) plus scripted
//! rigid obstacles that translate along time-stamped waypoints. The depth
//! camera casts one ray per pixel and returns world-frame points on the
//! nearest surfaces. The scenario runner closes the loop: render, downsample,
//! integrate, compute the information distribution, plan one receding-horizon
//! step, execute it, and log the evaluation metrics.

use nalgebra::{DVector, Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Primitive};
use crate::ig::{
    compute_distribution, frustum_axes, CameraModel, ExecMode, IgConfig, PerspectiveGain,
};
use crate::infodist::{
    gain_at, orientation_factor, remaining_ig, CameraPose, DistributionBuffer, IdwParams,
};
use crate::kinematics::KinematicChain;
use crate::planner::{
    receding_horizon_step, stage_costs, HorizonConfig, HorizonPlan, PlannerContext, ReferencePath,
    StageCosts,
};
use crate::scalar::Real;
use crate::voxelmap::{downsample_cloud, OccupancyParams, VoxelMap};

/// A rigid primitive translating along time-stamped waypoints
/// (piecewise-linear, clamped at both ends). The primitive is authored at
/// offset zero.
#[derive(Debug, Clone)]
pub struct ScriptedObstacle<T: Real> {
    pub primitive: Primitive<T>,
    pub waypoints: Vec<(T, Vector3<T>)>,
}

impl<T: Real> ScriptedObstacle<T> {
    pub fn offset_at(&self, t: T) -> Vector3<T> {
        match self.waypoints.len() {
            0 => Vector3::zeros(),
            1 => self.waypoints[0].1,
            _ => {
                if t <= self.waypoints[0].0 {
                    return self.waypoints[0].1;
                }
                for pair in self.waypoints.windows(2) {
                    let (t0, p0) = pair[0];
                    let (t1, p1) = pair[1];
                    if t <= t1 {
                        let s = (t - t0) / (t1 - t0);
                        return p0 + (p1 - p0) * s;
                    }
                }
                self.waypoints.last().unwrap().1
            }
        }
    }

    pub fn at_time(&self, t: T) -> Primitive<T> {
        self.primitive.translated(&self.offset_at(t))
    }
}

/// Static and scripted geometry plus the observation target.
#[derive(Debug, Clone)]
pub struct Scene<T: Real> {
    pub statics: Vec<Primitive<T>>,
    pub scripted: Vec<ScriptedObstacle<T>>,
    /// Point of interest at the center of the object to observe.
    pub poi: Point3<T>,
    /// Region in which reconstruction is evaluated.
    pub roi: Aabb<T>,
}

impl<T: Real> Scene<T> {
    /// All primitives at time `t`.
    pub fn primitives_at(&self, t: T) -> Vec<Primitive<T>> {
        let mut out = self.statics.clone();
        out.extend(self.scripted.iter().map(|s| s.at_time(t)));
        out
    }
}

/// Depth camera: frustum model plus image resolution and optional range noise.
#[derive(Debug, Clone, Copy)]
pub struct SimCamera<T: Real> {
    pub model: CameraModel<T>,
    pub rows: usize,
    pub cols: usize,
    /// Standard deviation of Gaussian range noise (m).
    pub noise_sigma: Option<T>,
}

impl<T: Real> SimCamera<T> {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Validation("camera needs at least 2x2 pixels".into()));
        }
        Ok(())
    }
}

/// Renders a depth image as a world-frame point cloud: one ray per pixel
/// through the frustum, nearest primitive intersection within the camera
/// range; misses produce no point.
pub fn render_depth<T: Real>(
    primitives: &[Primitive<T>],
    pose: &CameraPose<T>,
    cam: &SimCamera<T>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Vec<Point3<T>> {
    let (h_axis, v_axis) = frustum_axes(&pose.optical_axis);
    let half = T::from_c(0.5);
    let tan_h = (cam.model.fov_h * half).tan();
    let tan_v = (cam.model.fov_v * half).tan();
    let axis = pose.optical_axis.into_inner();
    let mut points = Vec::new();
    for r in 0..cam.rows {
        let ndc_y = (T::from_usize(r).unwrap() + half) / T::from_usize(cam.rows).unwrap()
            * T::from_c(2.0)
            - T::one();
        for c in 0..cam.cols {
            let ndc_x = (T::from_usize(c).unwrap() + half) / T::from_usize(cam.cols).unwrap()
                * T::from_c(2.0)
                - T::one();
            let dir = (axis
                + h_axis.into_inner() * (tan_h * ndc_x)
                + v_axis.into_inner() * (tan_v * ndc_y))
                .normalize();
            let mut nearest = T::INF;
            for p in primitives {
                if let Some(t_hit) = p.ray_intersect(&pose.position, &dir) {
                    if t_hit < nearest {
                        nearest = t_hit;
                    }
                }
            }
            if nearest <= cam.model.range {
                let range = match (&mut rng, cam.noise_sigma) {
                    (Some(rng), Some(sigma)) if sigma > T::zero() => {
                        let n: f64 = Normal::new(0.0, sigma.to_c())
                            .expect("positive sigma")
                            .sample(*rng);
                        (nearest + T::from_c(n)).max(T::zero())
                    }
                    _ => nearest,
                };
                points.push(pose.position + dir * range);
            }
        }
    }
    points
}

/// Percentage difference in occupied-voxel count between a reconstructed map
/// and a reference map inside `roi`.
pub fn v_r<T: Real>(recon: &VoxelMap<T>, reference: &VoxelMap<T>, roi: &Aabb<T>) -> Result<T> {
    if recon.resolution() != reference.resolution() {
        return Err(Error::Validation(
            "maps must share a resolution for volumetric comparison".into(),
        ));
    }
    let n_recon = recon.occupied_volume(roi);
    let n_ref = reference.occupied_volume(roi);
    if n_ref == 0 {
        return Err(Error::EmptyReference);
    }
    Ok(
        T::from_c(100.0) * (T::from_usize(n_recon).unwrap() - T::from_usize(n_ref).unwrap())
            / T::from_usize(n_ref).unwrap(),
    )
}

/// Trapezoidal area under a sampled series with strictly increasing abscissa.
pub fn auc<T: Real>(series: &[(T, T)]) -> Result<T> {
    if series.len() < 2 {
        return Err(Error::Validation("area needs at least two samples".into()));
    }
    let mut total = T::zero();
    for pair in series.windows(2) {
        let (t0, y0) = pair[0];
        let (t1, y1) = pair[1];
        if t1 <= t0 {
            return Err(Error::Validation(
                "series must be strictly increasing in t".into(),
            ));
        }
        total += (t1 - t0) * (y0 + y1) * T::from_c(0.5);
    }
    Ok(total)
}

/// One time sample of the orientation/gain trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSample<T: Real> {
    pub t: T,
    pub orientation: T,
    pub gain: T,
    pub product: T,
}

/// Metrics of one closed-loop run.
#[derive(Debug, Clone)]
pub struct RunMetrics<T: Real> {
    pub series: Vec<MetricsSample<T>>,
    /// Trapezoidal area under the orientation-gain product.
    pub auc: T,
    /// Mean gain over the final buffer contents.
    pub remaining_ig: T,
    /// Volumetric reconstruction trace, one sample per sensor frame.
    pub v_r_series: Vec<(T, T)>,
    pub travel_time: T,
    pub reached_goal: bool,
    pub planner_failures: usize,
}

impl<T: Real> RunMetrics<T> {
    pub fn v_r_final(&self) -> Option<T> {
        self.v_r_series.last().map(|&(_, v)| v)
    }
}

/// Fully assembled closed-loop scenario.
#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub scene: Scene<T>,
    pub chain: KinematicChain<T>,
    pub start: DVector<T>,
    pub goal: DVector<T>,
    pub horizon: HorizonConfig<T>,
    pub ig: IgConfig<T>,
    pub idw: IdwParams<T>,
    pub buffer_capacity: usize,
    pub camera: SimCamera<T>,
    pub map_resolution: T,
    pub map_params: OccupancyParams<T>,
    pub sensor_hz: T,
    pub duration: T,
    pub goal_tolerance: T,
    pub seed: u64,
    pub exec_mode: ExecMode,
    pub workers: usize,
    pub reference: Option<ReferencePath<T>>,
    /// Stationary camera pose used to build the reference map for the
    /// volumetric-change metric. Without it the v_r trace stays empty.
    pub reference_pose: Option<CameraPose<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        let dof = self.chain.dof();
        if self.start.len() != dof || self.goal.len() != dof {
            return Err(Error::Validation(format!(
                "start and goal must have {dof} joints"
            )));
        }
        for (j, lim) in self.chain.limits().iter().enumerate() {
            if self.goal[j] < lim.position.0 || self.goal[j] > lim.position.1 {
                return Err(Error::Validation(format!(
                    "goal joint {j} outside position limits"
                )));
            }
        }
        self.horizon.validate(dof)?;
        self.ig.validate()?;
        self.camera.validate()?;
        if !(self.duration > T::zero()) {
            return Err(Error::Validation(
                "zero-duration run produces no metrics".into(),
            ));
        }
        if self.duration < T::from_c(2.0) * self.horizon.dt {
            return Err(Error::Validation(
                "run must span at least two planning cycles".into(),
            ));
        }
        if !(self.sensor_hz > T::zero()) {
            return Err(Error::Validation("sensor rate must be positive".into()));
        }
        if self.buffer_capacity < 1 {
            return Err(Error::Validation(
                "buffer capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Callbacks for per-cycle artifacts. All methods default to no-ops.
pub trait ScenarioObserver<T: Real> {
    /// A new information distribution was pushed at time `t`.
    fn on_distribution(&mut self, _t: T, _gains: &[PerspectiveGain<T>]) {}
    /// A plan was produced at time `t` with its per-step cost records.
    fn on_plan(&mut self, _t: T, _plan: &HorizonPlan<T>, _stages: &[StageCosts<T>]) {}
    /// The state advanced to `x` by executing `u` over one cycle.
    fn on_state(&mut self, _t: T, _x: &DVector<T>, _u: &DVector<T>) {}
    /// The run finished with this final map.
    fn on_finish(&mut self, _map: &VoxelMap<T>) {}
}

/// Observer that discards everything.
pub struct NullObserver;

impl<T: Real> ScenarioObserver<T> for NullObserver {}

/// Builds the reference map for the volumetric metric: the static scene
/// rendered once from the stationary reference pose, noiseless.
pub fn build_reference_map<T: Real>(
    scn: &Scenario<T>,
    pose: &CameraPose<T>,
) -> Result<VoxelMap<T>> {
    let mut map = VoxelMap::new(scn.map_resolution, scn.map_params)?;
    let cam = SimCamera {
        noise_sigma: None,
        ..scn.camera
    };
    let cloud = render_depth(&scn.scene.statics, pose, &cam, None);
    if !cloud.is_empty() {
        let points = downsample_cloud(&cloud, scn.map_resolution)?;
        map.integrate_cloud(&pose.position, &points)?;
    }
    Ok(map)
}

/// Runs the closed loop until the goal is reached (infinity-norm joint error
/// below the tolerance) or the duration elapses. Deterministic for a fixed
/// scenario: identical configs and seed give identical metrics.
pub fn run_scenario<T: Real>(
    scn: &Scenario<T>,
    observer: &mut dyn ScenarioObserver<T>,
) -> Result<RunMetrics<T>> {
    scn.validate()?;
    let dt = scn.horizon.dt;
    let cycles = (scn.duration / dt).ceil().to_c() as usize;
    let sensor_every = ((T::one() / (scn.sensor_hz * dt)).round().to_c() as usize).max(1);

    let reference_map = match &scn.reference_pose {
        Some(pose) => {
            let map = build_reference_map(scn, pose)?;
            if map.occupied_volume(&scn.scene.roi) == 0 {
                return Err(Error::EmptyReference);
            }
            Some(map)
        }
        None => None,
    };

    let pool = match scn.exec_mode {
        ExecMode::Parallel => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(scn.workers)
                .build()
                .map_err(|e| Error::Validation(format!("failed to build thread pool: {e}")))?,
        ),
        ExecMode::Sequential => None,
    };

    let mut map = VoxelMap::new(scn.map_resolution, scn.map_params)?;
    let mut buffer = DistributionBuffer::new(scn.buffer_capacity)?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(scn.seed);
    let mut x = scn.start.clone();
    let mut prev_plan: Option<HorizonPlan<T>> = None;
    let mut prev_control: Option<DVector<T>> = None;

    let mut series = Vec::with_capacity(cycles);
    let mut v_r_series = Vec::new();
    let mut planner_failures = 0usize;
    let mut reached_goal = false;
    let mut travel_time = scn.duration;

    for cycle in 0..cycles {
        let t = T::from_usize(cycle).unwrap() * dt;
        let obstacles = scn.scene.primitives_at(t);

        if cycle % sensor_every == 0 {
            let fk = scn.chain.forward_kinematics(&x)?;
            let cloud = render_depth(&obstacles, &fk.camera, &scn.camera, Some(&mut noise_rng));
            if !cloud.is_empty() {
                let points = downsample_cloud(&cloud, scn.map_resolution)?;
                map.integrate_cloud(&fk.camera.position, &points)?;
            }
            let ig_cfg = IgConfig {
                rng_seed: scn.seed.wrapping_add(cycle as u64),
                ..scn.ig
            };
            let gains = compute_distribution(
                &map,
                &ig_cfg,
                &scn.camera.model,
                scn.exec_mode,
                pool.as_ref(),
            )?;
            observer.on_distribution(t, &gains);
            buffer.push(gains);
            if let Some(reference) = &reference_map {
                v_r_series.push((t, v_r(&map, reference, &scn.scene.roi)?));
            }
        }

        let ctx = PlannerContext {
            chain: &scn.chain,
            obstacles: &obstacles,
            poi: scn.scene.poi,
            camera: scn.camera.model,
            buffer: Some(&buffer),
            idw: scn.idw,
            goal: scn.goal.clone(),
            reference: scn.reference.as_ref(),
            previous_control: prev_control.clone(),
            plan_start_time: t,
        };
        let u0 = match receding_horizon_step(&ctx, &scn.horizon, prev_plan.as_ref(), &x) {
            Ok((u0, plan)) => {
                let stages = stage_costs(&plan, &ctx, &scn.horizon)?;
                observer.on_plan(t, &plan, &stages);
                prev_plan = Some(plan);
                u0
            }
            Err(_) => {
                // The robot holds and the loop keeps running.
                planner_failures += 1;
                prev_plan = None;
                DVector::zeros(scn.chain.dof())
            }
        };

        let t_next = T::from_usize(cycle + 1).unwrap() * dt;
        x = &x + &u0 * dt;
        observer.on_state(t_next, &x, &u0);
        prev_control = Some(u0);

        let fk = scn.chain.forward_kinematics(&x)?;
        let orientation = match orientation_factor(&fk.camera, &scn.scene.poi, &scn.camera.model) {
            Ok(o) => o,
            Err(Error::UndefinedOrientation) => T::zero(),
            Err(e) => return Err(e),
        };
        let gain = gain_at(&buffer, &fk.camera.position, &scn.idw)?;
        series.push(MetricsSample {
            t: t_next,
            orientation,
            gain,
            product: orientation * gain,
        });

        travel_time = t_next;
        let err = (&x - &scn.goal).amax();
        if err < scn.goal_tolerance {
            reached_goal = true;
            break;
        }
    }

    let product_series: Vec<(T, T)> = series.iter().map(|s| (s.t, s.product)).collect();
    // A run that terminates on its first cycle has no area to integrate.
    let area = if product_series.len() < 2 {
        T::zero()
    } else {
        auc(&product_series)?
    };
    let metrics = RunMetrics {
        auc: area,
        remaining_ig: remaining_ig(&buffer)?,
        series,
        v_r_series,
        travel_time,
        reached_goal,
        planner_failures,
    };
    observer.on_finish(&map);
    Ok(metrics)
}
