//! Serial-manipulator kinematics: DH chains, forward kinematics to the
//! camera frame, the camera-point Jacobian, and sphere-proxy obstacle
//! clearance.
//!
//! Robot descriptions load from a TOML file listing DH rows, per-joint
//! limits, collision spheres, and the flange-to-camera mount transform. Two
//! models ship with the crate: a UR10-like 6-DoF arm and a planar 2-DoF test
//! chain.

use nalgebra::{
    DVector, Isometry3, Matrix3xX, Point3, Translation3, UnitQuaternion, UnitVector3, Vector3,
};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geom::Primitive;
use crate::infodist::CameraPose;
use crate::scalar::Real;

/// Clearance reported when there is nothing to collide with.
pub const NO_OBSTACLE_CLEARANCE: f64 = 1e6;

/// One standard (distal) DH row.
#[derive(Debug, Clone, Copy)]
pub struct DhRow<T: Real> {
    pub a: T,
    pub alpha: T,
    pub d: T,
    pub theta_offset: T,
}

/// Per-joint bounds. All pairs are `(lower, upper)` with `lower < upper`.
#[derive(Debug, Clone, Copy)]
pub struct JointLimits<T: Real> {
    pub position: (T, T),
    pub velocity: (T, T),
    pub acceleration: (T, T),
}

/// Collision proxy sphere expressed in its link frame.
#[derive(Debug, Clone, Copy)]
pub struct LinkSphere<T: Real> {
    pub offset: Vector3<T>,
    pub radius: T,
}

/// Joint state: one angle per degree of freedom (rad).
pub type JointState<T> = DVector<T>;

/// Serial chain description.
#[derive(Debug, Clone)]
pub struct KinematicChain<T: Real> {
    pub name: String,
    dh: Vec<DhRow<T>>,
    limits: Vec<JointLimits<T>>,
    link_spheres: Vec<Vec<LinkSphere<T>>>,
    camera_mount: Isometry3<T>,
}

/// Forward kinematics output: camera pose plus every cumulative link frame.
#[derive(Debug, Clone)]
pub struct FkResult<T: Real> {
    pub camera: CameraPose<T>,
    /// Full camera frame (flange composed with the mount).
    pub camera_frame: Isometry3<T>,
    /// Cumulative base-to-link transforms, one per joint.
    pub link_frames: Vec<Isometry3<T>>,
}

/// Geometric Jacobian of the camera point: linear and angular columns per joint.
#[derive(Debug, Clone)]
pub struct CameraJacobian<T: Real> {
    pub linear: Matrix3xX<T>,
    pub angular: Matrix3xX<T>,
}

impl<T: Real> KinematicChain<T> {
    pub fn new(
        name: impl Into<String>,
        dh: Vec<DhRow<T>>,
        limits: Vec<JointLimits<T>>,
        link_spheres: Vec<Vec<LinkSphere<T>>>,
        camera_mount: Isometry3<T>,
    ) -> Result<Self> {
        if dh.is_empty() {
            return Err(Error::Validation("a chain needs at least one joint".into()));
        }
        if limits.len() != dh.len() || link_spheres.len() != dh.len() {
            return Err(Error::Validation(
                "limits and link spheres must match the joint count".into(),
            ));
        }
        for (i, l) in limits.iter().enumerate() {
            let ordered = l.position.0 < l.position.1
                && l.velocity.0 < l.velocity.1
                && l.acceleration.0 < l.acceleration.1;
            if !ordered {
                return Err(Error::Validation(format!(
                    "joint {i}: every limit pair needs lower < upper"
                )));
            }
        }
        for (i, spheres) in link_spheres.iter().enumerate() {
            if spheres.iter().any(|s| !(s.radius > T::zero())) {
                return Err(Error::Validation(format!("joint {i}: sphere radii must be positive")));
            }
        }
        Ok(Self {
            name: name.into(),
            dh,
            limits,
            link_spheres,
            camera_mount,
        })
    }

    pub fn dof(&self) -> usize {
        self.dh.len()
    }

    pub fn limits(&self) -> &[JointLimits<T>] {
        &self.limits
    }

    pub fn link_spheres(&self) -> &[Vec<LinkSphere<T>>] {
        &self.link_spheres
    }

    pub fn camera_mount(&self) -> &Isometry3<T> {
        &self.camera_mount
    }

    fn joint_transform(row: &DhRow<T>, q: T) -> Isometry3<T> {
        let rot_z = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q + row.theta_offset);
        let rot_x = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), row.alpha);
        Isometry3::from_parts(Translation3::new(T::zero(), T::zero(), T::zero()), rot_z)
            * Isometry3::from_parts(Translation3::new(row.a, T::zero(), row.d), rot_x)
    }

    fn check_dims(&self, q: &JointState<T>) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::Validation(format!(
                "joint state has {} entries, chain has {} joints",
                q.len(),
                self.dof()
            )));
        }
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("joint state must be finite".into()));
        }
        Ok(())
    }

    /// Composes all joint transforms and the camera mount. The optical axis
    /// is the z axis of the camera frame.
    pub fn forward_kinematics(&self, q: &JointState<T>) -> Result<FkResult<T>> {
        self.check_dims(q)?;
        let mut cum = Isometry3::identity();
        let mut link_frames = Vec::with_capacity(self.dof());
        for (row, &qi) in self.dh.iter().zip(q.iter()) {
            cum *= Self::joint_transform(row, qi);
            link_frames.push(cum);
        }
        let camera_frame = cum * self.camera_mount;
        let axis = camera_frame.rotation * Vector3::z();
        Ok(FkResult {
            camera: CameraPose {
                position: Point3::from(camera_frame.translation.vector),
                optical_axis: UnitVector3::new_normalize(axis),
            },
            camera_frame,
            link_frames,
        })
    }

    /// Forward kinematics plus the geometric Jacobian of the camera point:
    /// column `i` holds `z_{i-1} x (p_cam - o_{i-1})` (linear) and `z_{i-1}`
    /// (angular) for revolute joint `i`.
    pub fn camera_jacobian(&self, q: &JointState<T>) -> Result<(FkResult<T>, CameraJacobian<T>)> {
        let fk = self.forward_kinematics(q)?;
        let p_cam = fk.camera.position.coords;
        let n = self.dof();
        let mut linear = Matrix3xX::zeros(n);
        let mut angular = Matrix3xX::zeros(n);
        for i in 0..n {
            let (z_prev, o_prev) = if i == 0 {
                (Vector3::z(), Vector3::zeros())
            } else {
                let f = &fk.link_frames[i - 1];
                (f.rotation * Vector3::z(), f.translation.vector)
            };
            linear.set_column(i, &z_prev.cross(&(p_cam - o_prev)));
            angular.set_column(i, &z_prev);
        }
        Ok((fk, CameraJacobian { linear, angular }))
    }

    /// Minimum surface-to-surface distance between any link sphere and any
    /// obstacle; negative when penetrating, `NO_OBSTACLE_CLEARANCE` when
    /// there is nothing to check.
    pub fn min_obstacle_clearance(
        &self,
        q: &JointState<T>,
        obstacles: &[Primitive<T>],
    ) -> Result<T> {
        let fk = self.forward_kinematics(q)?;
        Ok(self.clearance_from_fk(&fk, obstacles))
    }

    pub(crate) fn clearance_from_fk(&self, fk: &FkResult<T>, obstacles: &[Primitive<T>]) -> T {
        let mut min = T::from_c(NO_OBSTACLE_CLEARANCE);
        if obstacles.is_empty() {
            return min;
        }
        for (frame, spheres) in fk.link_frames.iter().zip(&self.link_spheres) {
            for sphere in spheres {
                let center = frame.transform_point(&Point3::from(sphere.offset));
                for obstacle in obstacles {
                    let d = obstacle.signed_distance(&center) - sphere.radius;
                    if d < min {
                        min = d;
                    }
                }
            }
        }
        min
    }

    /// Parses a robot description file.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: RobotFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("robot file: {e}")))?;
        let c = T::from_c;
        let mut dh = Vec::new();
        let mut limits = Vec::new();
        let mut spheres = Vec::new();
        for j in &file.joint {
            dh.push(DhRow {
                a: c(j.a),
                alpha: c(j.alpha),
                d: c(j.d),
                theta_offset: c(j.theta_offset),
            });
            if !(j.velocity > 0.0 && j.acceleration > 0.0) {
                return Err(Error::Validation(
                    "velocity and acceleration limits must be positive".into(),
                ));
            }
            limits.push(JointLimits {
                position: (c(j.position[0]), c(j.position[1])),
                velocity: (c(-j.velocity), c(j.velocity)),
                acceleration: (c(-j.acceleration), c(j.acceleration)),
            });
            spheres.push(
                j.spheres
                    .iter()
                    .map(|s| LinkSphere {
                        offset: Vector3::new(c(s.offset[0]), c(s.offset[1]), c(s.offset[2])),
                        radius: c(s.radius),
                    })
                    .collect(),
            );
        }
        let mount = match &file.camera_mount {
            Some(m) => {
                let t = Translation3::new(c(m.translation[0]), c(m.translation[1]), c(m.translation[2]));
                let r = UnitQuaternion::from_euler_angles(c(m.rpy[0]), c(m.rpy[1]), c(m.rpy[2]));
                Isometry3::from_parts(t, r)
            }
            None => Isometry3::identity(),
        };
        Self::new(file.name, dh, limits, spheres, mount)
    }

    /// The UR10-like 6-DoF arm shipped with the toolkit.
    pub fn ur10_like() -> Self {
        Self::from_toml_str(include_str!("../../../configs/robots/ur10_like.toml"))
            .expect("bundled ur10_like robot file is valid")
    }

    /// Planar 2-DoF chain used by the tests.
    pub fn planar2() -> Self {
        Self::from_toml_str(include_str!("../../../configs/robots/planar2.toml"))
            .expect("bundled planar2 robot file is valid")
    }
}

#[derive(Debug, Deserialize)]
struct RobotFile {
    name: String,
    camera_mount: Option<RobotMount>,
    joint: Vec<RobotJoint>,
}

#[derive(Debug, Deserialize)]
struct RobotJoint {
    a: f64,
    alpha: f64,
    d: f64,
    #[serde(default)]
    theta_offset: f64,
    position: [f64; 2],
    velocity: f64,
    acceleration: f64,
    #[serde(default)]
    spheres: Vec<RobotSphere>,
}

#[derive(Debug, Deserialize)]
struct RobotSphere {
    offset: [f64; 3],
    radius: f64,
}

#[derive(Debug, Deserialize)]
struct RobotMount {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}
