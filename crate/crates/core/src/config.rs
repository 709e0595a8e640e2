//! Configuration files: schemas, the defaults tree, merging, and
//! dotted-path overrides.
//!
//! A scenario or benchmark config is assembled in three layers: the bundled
//! defaults, the user's TOML file, and any `key.path=value` overrides, merged
//! in that order before deserialization. The merged tree is also what gets
//! written into a run's output directory, so every effective parameter is
//! auditable.

use std::path::{Path, PathBuf};

use nalgebra::{DVector, Point3, UnitVector3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Plane, Primitive, Sphere};
use crate::ig::{CameraModel, ExecMode, IgConfig};
use crate::infodist::{CameraPose, IdwParams};
use crate::kinematics::KinematicChain;
use crate::planner::{HorizonConfig, ReferencePath};
use crate::sim::{Scenario, Scene, ScriptedObstacle, SimCamera};
use crate::voxelmap::{log_odds, OccupancyParams, VoxelMap};

/// The bundled defaults file, also shipped at `configs/defaults.toml`.
pub const DEFAULTS_TOML: &str = include_str!("../../../configs/defaults.toml");

/// Recursively merges `over` onto `base`: tables merge key-wise, everything
/// else replaces.
pub fn merge_toml(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets `value` at the dotted `path`, creating intermediate tables. The raw
/// value text is parsed as TOML (numbers, bools, arrays, quoted strings);
/// unparseable text is taken as a plain string.
pub fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("bad override path: {path}")));
    }
    for seg in &segments[..segments.len() - 1] {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {path} crosses a non-table")))?;
        cursor = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override path {path} crosses a non-table")))?;
    table.insert(segments.last().unwrap().to_string(), parsed);
    Ok(())
}

fn defaults_tree() -> toml::Value {
    toml::from_str(DEFAULTS_TOML).expect("bundled defaults parse")
}

/// Reads a config file, layers it over the defaults, and applies overrides.
/// Returns the merged tree; deserialize it into the concrete schema next.
pub fn load_merged(path: &Path, overrides: &[(String, String)]) -> Result<toml::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let user: toml::Value = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut merged = defaults_tree();
    merge_toml(&mut merged, user);
    for (k, v) in overrides {
        apply_override(&mut merged, k, v)?;
    }
    Ok(merged)
}

// --- scenario schema -------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ScenarioFile {
    /// Robot description path, relative to the scenario file.
    pub robot: String,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub scene: SceneCfg,
    pub map: MapCfg,
    pub ig: IgCfg,
    pub idw: IdwCfg,
    pub buffer: BufferCfg,
    pub planner: PlannerCfg,
    pub sim: SimCfg,
    pub run: RunCfg,
    #[serde(default)]
    pub reconstruction: Option<ReconstructionCfg>,
    #[serde(default)]
    pub waypoints: Option<WaypointsCfg>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SceneCfg {
    pub poi: [f64; 3],
    pub roi_min: [f64; 3],
    pub roi_max: [f64; 3],
    #[serde(default)]
    pub boxes: Vec<BoxCfg>,
    #[serde(default)]
    pub spheres: Vec<SphereCfg>,
    #[serde(default)]
    pub planes: Vec<PlaneCfg>,
    #[serde(default)]
    pub moving_boxes: Vec<MovingBoxCfg>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BoxCfg {
    pub center: [f64; 3],
    pub extents: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SphereCfg {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PlaneCfg {
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct MovingBoxCfg {
    pub center: [f64; 3],
    pub extents: [f64; 3],
    pub waypoints: Vec<MovingWaypointCfg>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct MovingWaypointCfg {
    pub t: f64,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct MapCfg {
    pub resolution: f64,
    pub p_hit: f64,
    pub p_miss: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub t_occ: f64,
    pub t_free: f64,
    pub max_range: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct IgCfg {
    pub sphere_radius: f64,
    pub perspectives: usize,
    pub grid_scaling: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct IdwCfg {
    pub power: f64,
    pub zero_dist_epsilon: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BufferCfg {
    pub capacity: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PlannerCfg {
    pub steps: usize,
    pub dt: f64,
    pub goal_weight: f64,
    pub control_weight: f64,
    pub obstacle_weight: f64,
    pub info_weight: f64,
    pub reference_weight: f64,
    pub epsilon: f64,
    pub clearance_margin: f64,
    pub constraint_tol: f64,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SimCfg {
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub range: f64,
    pub rows: usize,
    pub cols: usize,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct RunCfg {
    pub duration: f64,
    pub sensor_hz: f64,
    pub goal_tolerance: f64,
    pub seed: u64,
    pub workers: usize,
    pub mode: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ReconstructionCfg {
    pub camera_position: [f64; 3],
    pub camera_look_at: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct WaypointsCfg {
    pub dt: f64,
    pub joints: Vec<Vec<f64>>,
}

fn point(v: [f64; 3]) -> Point3<f64> {
    Point3::new(v[0], v[1], v[2])
}

fn vector(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

impl ScenarioFile {
    pub fn from_merged(merged: toml::Value) -> Result<Self> {
        merged
            .try_into()
            .map_err(|e| Error::Config(format!("scenario config: {e}")))
    }

    /// Resolves the robot path against the scenario file's directory and
    /// assembles the runnable scenario.
    pub fn build(&self, base_dir: &Path) -> Result<Scenario<f64>> {
        let robot_path = base_dir.join(&self.robot);
        let robot_text = std::fs::read_to_string(&robot_path).map_err(|_| {
            Error::Config(format!("robot file not found: {}", robot_path.display()))
        })?;
        let chain = KinematicChain::from_toml_str(&robot_text)?;
        let dof = chain.dof();

        let mut statics: Vec<Primitive<f64>> = Vec::new();
        for b in &self.scene.boxes {
            statics.push(Primitive::Box(Aabb::from_center(
                point(b.center),
                vector(b.extents),
            )));
        }
        for s in &self.scene.spheres {
            statics.push(Primitive::Sphere(Sphere::new(point(s.center), s.radius)));
        }
        for p in &self.scene.planes {
            let n = vector(p.normal);
            if n.norm() < 1e-12 {
                return Err(Error::Config("plane normal must be non-zero".into()));
            }
            statics.push(Primitive::Plane(Plane::new(
                UnitVector3::new_normalize(n),
                p.offset,
            )));
        }
        let scripted = self
            .scene
            .moving_boxes
            .iter()
            .map(|m| ScriptedObstacle {
                primitive: Primitive::Box(Aabb::from_center(point(m.center), vector(m.extents))),
                waypoints: m.waypoints.iter().map(|w| (w.t, vector(w.offset))).collect(),
            })
            .collect();
        let scene = Scene {
            statics,
            scripted,
            poi: point(self.scene.poi),
            roi: Aabb::new(point(self.scene.roi_min), point(self.scene.roi_max)),
        };

        let map_params = OccupancyParams::new(
            self.map.p_hit,
            self.map.p_miss,
            self.map.p_min,
            self.map.p_max,
            self.map.t_occ,
            self.map.t_free,
            self.map.max_range,
        )?;

        let camera = SimCamera {
            model: CameraModel::new(
                self.sim.fov_h_deg.to_radians(),
                self.sim.fov_v_deg.to_radians(),
                self.sim.range,
            )?,
            rows: self.sim.rows,
            cols: self.sim.cols,
            noise_sigma: (self.sim.noise_sigma > 0.0).then_some(self.sim.noise_sigma),
        };

        let horizon = HorizonConfig {
            steps: self.planner.steps,
            dt: self.planner.dt,
            goal_weight: DVector::from_element(dof, self.planner.goal_weight),
            control_weight: DVector::from_element(dof, self.planner.control_weight),
            obstacle_weight: self.planner.obstacle_weight,
            info_weight: self.planner.info_weight,
            reference_weight: self.planner.reference_weight,
            epsilon: self.planner.epsilon,
            clearance_margin: self.planner.clearance_margin,
            constraint_tol: self.planner.constraint_tol,
            max_outer_iterations: self.planner.max_outer_iterations,
            max_inner_iterations: self.planner.max_inner_iterations,
        };

        let reference = match &self.waypoints {
            Some(w) => {
                if w.joints.is_empty() {
                    return Err(Error::Config("waypoint list must not be empty".into()));
                }
                if w.joints.iter().any(|j| j.len() != dof) {
                    return Err(Error::Config(format!("waypoints must have {dof} joints")));
                }
                Some(ReferencePath {
                    waypoints: w
                        .joints
                        .iter()
                        .map(|j| DVector::from_vec(j.clone()))
                        .collect(),
                    dt: w.dt,
                })
            }
            None => None,
        };

        let reference_pose = match &self.reconstruction {
            Some(r) => {
                let position = point(r.camera_position);
                let dir = point(r.camera_look_at) - position;
                if dir.norm() < 1e-9 {
                    return Err(Error::Config(
                        "reconstruction camera must not sit on its look-at point".into(),
                    ));
                }
                Some(CameraPose {
                    position,
                    optical_axis: UnitVector3::new_normalize(dir),
                })
            }
            None => None,
        };

        let mode = parse_mode(&self.run.mode)?;
        let scenario = Scenario {
            scene,
            chain,
            start: DVector::from_vec(self.start.clone()),
            goal: DVector::from_vec(self.goal.clone()),
            horizon,
            ig: IgConfig {
                poi: point(self.scene.poi),
                sphere_radius: self.ig.sphere_radius,
                perspective_count: self.ig.perspectives,
                grid_scaling: self.ig.grid_scaling,
                rng_seed: self.run.seed,
            },
            idw: IdwParams {
                power: self.idw.power,
                zero_dist_epsilon: self.idw.zero_dist_epsilon,
            },
            buffer_capacity: self.buffer.capacity,
            camera,
            map_resolution: self.map.resolution,
            map_params,
            sensor_hz: self.run.sensor_hz,
            duration: self.run.duration,
            goal_tolerance: self.run.goal_tolerance,
            seed: self.run.seed,
            exec_mode: mode,
            workers: self.run.workers,
            reference,
            reference_pose,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn parse_mode(text: &str) -> Result<ExecMode> {
    match text {
        "sequential" => Ok(ExecMode::Sequential),
        "parallel" => Ok(ExecMode::Parallel),
        other => Err(Error::Config(format!(
            "mode must be \"sequential\" or \"parallel\", got {other:?}"
        ))),
    }
}

// --- benchmark schema ------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BenchFile {
    pub map: BenchMapCfg,
    pub camera: BenchCameraCfg,
    pub poi: [f64; 3],
    pub sphere_radius: f64,
    pub perspectives: Vec<usize>,
    pub grid_scalings: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BenchMapCfg {
    pub resolution: f64,
    /// World position of the occupied block's minimum corner.
    pub block_min: [f64; 3],
    /// Occupied voxel counts per axis.
    pub block_voxels: [usize; 3],
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct BenchCameraCfg {
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub range: f64,
}

impl BenchFile {
    pub fn from_merged(merged: toml::Value) -> Result<Self> {
        merged
            .try_into()
            .map_err(|e| Error::Config(format!("benchmark config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.perspectives.is_empty() || self.grid_scalings.is_empty() {
            return Err(Error::Config(
                "benchmark needs at least one perspective count and grid scaling".into(),
            ));
        }
        if self.iterations < 1 {
            return Err(Error::Config("benchmark needs at least one iteration".into()));
        }
        if self.grid_scalings.iter().any(|&s| s < 1.0) {
            return Err(Error::Config("grid scalings must be >= 1".into()));
        }
        self.camera_model().map(|_| ())
    }

    pub fn camera_model(&self) -> Result<CameraModel<f64>> {
        CameraModel::new(
            self.camera.fov_h_deg.to_radians(),
            self.camera.fov_v_deg.to_radians(),
            self.camera.range,
        )
    }

    /// Synthetic benchmark map: a solid block of occupied voxels.
    pub fn build_map(&self) -> Result<VoxelMap<f64>> {
        let mut map = VoxelMap::new(self.map.resolution, OccupancyParams::default())?;
        let base = map.key_of(&point(self.map.block_min));
        let l_occ = log_odds(0.9);
        for ix in 0..self.map.block_voxels[0] {
            for iy in 0..self.map.block_voxels[1] {
                for iz in 0..self.map.block_voxels[2] {
                    map.set_log_odds(
                        crate::voxelmap::VoxelKey::new(
                            base.ix + ix as i32,
                            base.iy + iy as i32,
                            base.iz + iz as i32,
                        ),
                        l_occ,
                        true,
                    );
                }
            }
        }
        Ok(map)
    }
}

/// Loads, merges, and builds a scenario in one call.
pub fn load_scenario(
    path: &Path,
    overrides: &[(String, String)],
) -> Result<(ScenarioFile, Scenario<f64>, toml::Value)> {
    let merged = load_merged(path, overrides)?;
    let file = ScenarioFile::from_merged(merged.clone())?;
    let base = path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let scenario = file.build(&base)?;
    Ok((file, scenario, merged))
}

/// Loads, merges, and validates a benchmark config.
pub fn load_bench(path: &Path, overrides: &[(String, String)]) -> Result<(BenchFile, toml::Value)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut merged: toml::Value = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    for (k, v) in overrides {
        apply_override(&mut merged, k, v)?;
    }
    let file = BenchFile::from_merged(merged.clone())?;
    file.validate()?;
    Ok((file, merged))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_file_parses() {
        let tree = defaults_tree();
        assert!(tree.get("map").is_some());
        assert_eq!(
            tree["planner"]["epsilon"].as_float().unwrap(),
            1e-7,
        );
    }

    #[test]
    fn merge_overrides_scalars_and_keeps_rest() {
        let mut base: toml::Value = toml::from_str("a = 1\n[t]\nx = 2\ny = 3").unwrap();
        let over: toml::Value = toml::from_str("[t]\nx = 9").unwrap();
        merge_toml(&mut base, over);
        assert_eq!(base["a"].as_integer(), Some(1));
        assert_eq!(base["t"]["x"].as_integer(), Some(9));
        assert_eq!(base["t"]["y"].as_integer(), Some(3));
    }

    #[test]
    fn dotted_override_touches_only_its_leaf() {
        let mut tree = defaults_tree();
        let before = tree.clone();
        apply_override(&mut tree, "planner.info_weight", "25").unwrap();
        assert_eq!(tree["planner"]["info_weight"].as_integer(), Some(25));
        // Integer overrides still deserialize into float fields.
        let as_float: f64 = tree["planner"]["info_weight"].clone().try_into().unwrap();
        assert_eq!(as_float, 25.0);
        // Everything else unchanged.
        let mut reverted = tree.clone();
        apply_override(
            &mut reverted,
            "planner.info_weight",
            &before["planner"]["info_weight"].to_string(),
        )
        .unwrap();
        assert_eq!(reverted, before);
    }

    #[test]
    fn override_parses_strings_and_arrays() {
        let mut tree: toml::Value = toml::from_str("").unwrap();
        apply_override(&mut tree, "run.mode", "\"sequential\"").unwrap();
        apply_override(&mut tree, "start", "[0.1, 0.2]").unwrap();
        apply_override(&mut tree, "name", "plain-text").unwrap();
        assert_eq!(tree["run"]["mode"].as_str(), Some("sequential"));
        assert_eq!(tree["start"].as_array().unwrap().len(), 2);
        assert_eq!(tree["name"].as_str(), Some("plain-text"));
    }

    #[test]
    fn bench_map_block_has_requested_volume() {
        let file = BenchFile {
            map: BenchMapCfg {
                resolution: 0.05,
                block_min: [0.0, 0.0, 0.0],
                block_voxels: [4, 5, 6],
            },
            camera: BenchCameraCfg {
                fov_h_deg: 75.0,
                fov_v_deg: 65.0,
                range: 2.0,
            },
            poi: [0.1, 0.1, 0.1],
            sphere_radius: 0.5,
            perspectives: vec![10],
            grid_scalings: vec![10.0],
            iterations: 1,
            seed: 0,
            workers: 1,
        };
        let map = file.build_map().unwrap();
        assert_eq!(map.len(), 4 * 5 * 6);
        let roi = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0));
        assert_eq!(map.occupied_volume(&roi), 4 * 5 * 6);
    }

    #[test]
    fn mode_strings_are_strict() {
        assert!(parse_mode("parallel").is_ok());
        assert!(parse_mode("sequential").is_ok());
        assert!(parse_mode("both").is_err());
    }
}
