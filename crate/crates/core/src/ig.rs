//! Information-gain raycasting engine.
//!
//! Samples perspectives uniformly inside a sphere around the point of
//! interest, builds a grid of ray endpoints on each perspective's far frustum
//! plane, and scores every perspective by the mean information gain of its
//! rays over a voxel-map snapshot. Gains can be computed sequentially or
//! data-parallel across perspectives; both modes return identical values.

use std::time::Instant;

use nalgebra::{Point3, UnitVector3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::traversal::walk_segment;
use crate::voxelmap::{VoxelMap, VoxelState};

/// Pinhole camera frustum parameters used for gain estimation.
#[derive(Debug, Clone, Copy)]
pub struct CameraModel<T: Real> {
    /// Horizontal field of view (rad).
    pub fov_h: T,
    /// Vertical field of view (rad).
    pub fov_v: T,
    /// Distance of the far frustum plane (m).
    pub range: T,
}

impl<T: Real> CameraModel<T> {
    pub fn new(fov_h: T, fov_v: T, range: T) -> Result<Self> {
        let ok_fov = |f: T| f > T::zero() && f < T::pi();
        if !ok_fov(fov_h) || !ok_fov(fov_v) {
            return Err(Error::Validation("camera field of view must lie in (0, pi)".into()));
        }
        if !(range > T::zero()) || !range.is_finite() {
            return Err(Error::Validation("camera range must be positive".into()));
        }
        Ok(Self { fov_h, fov_v, range })
    }

    /// Half extents `(d_h, d_v)` of the far frustum plane.
    pub fn far_plane_half_extents(&self) -> (T, T) {
        let half = T::from_c(0.5);
        (
            self.range * (self.fov_h * half).tan(),
            self.range * (self.fov_v * half).tan(),
        )
    }
}

/// A sampled viewpoint: origin plus unit direction toward the point of interest.
#[derive(Debug, Clone, Copy)]
pub struct Perspective<T: Real> {
    pub origin: Point3<T>,
    pub direction: UnitVector3<T>,
}

/// Sampling and endpoint-grid configuration for one information distribution.
#[derive(Debug, Clone, Copy)]
pub struct IgConfig<T: Real> {
    /// Point of interest the perspectives are sampled around.
    pub poi: Point3<T>,
    /// Radius of the sampling sphere (m).
    pub sphere_radius: T,
    /// Number of perspectives per distribution.
    pub perspective_count: usize,
    /// Endpoint grid spacing in multiples of the voxel resolution.
    pub grid_scaling: T,
    pub rng_seed: u64,
}

impl<T: Real> IgConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.poi.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("point of interest must be finite".into()));
        }
        if !(self.sphere_radius > T::zero()) {
            return Err(Error::Validation("sampling sphere radius must be positive".into()));
        }
        if self.perspective_count < 1 {
            return Err(Error::Validation("at least one perspective is required".into()));
        }
        if self.grid_scaling < T::one() {
            return Err(Error::Validation("grid scaling factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gain of one perspective: the mean information gain over its rays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveGain<T: Real> {
    pub origin: Point3<T>,
    pub gain: T,
    pub ray_count: usize,
}

/// Gain computation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl ExecMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExecMode::Sequential => "sequential",
            ExecMode::Parallel => "parallel",
        }
    }
}

/// Builds one perspective from the raw sampling draws: a componentwise
/// standard-normal vector and a uniform radius fraction. The normal vector is
/// projected onto the unit sphere and scaled by the cube root of the radius
/// fraction so that points distribute uniformly inside the sphere. Returns
/// `None` for degenerate draws, which callers resample.
pub fn perspective_from_draw<T: Real>(
    raw_normal: Vector3<T>,
    radius_fraction: T,
    cfg: &IgConfig<T>,
) -> Option<Perspective<T>> {
    let norm = raw_normal.norm();
    if norm < T::from_c(1e-12) {
        return None;
    }
    let third = T::one() / T::from_c(3.0);
    let scale = cfg.sphere_radius * radius_fraction.powf(third) / norm;
    let offset = raw_normal * scale;
    if offset.norm() < T::from_c(1e-12) {
        return None;
    }
    Some(Perspective {
        origin: cfg.poi + offset,
        direction: UnitVector3::new_normalize(-offset),
    })
}

/// Samples `perspective_count` perspectives uniformly inside the sphere,
/// each oriented toward the point of interest. Deterministic for a fixed
/// seed.
pub fn sample_perspectives<T: Real>(cfg: &IgConfig<T>) -> Result<Vec<Perspective<T>>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::with_capacity(cfg.perspective_count);
    while out.len() < cfg.perspective_count {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let r: f64 = rng.gen();
        let raw = Vector3::new(T::from_c(x), T::from_c(y), T::from_c(z));
        if let Some(p) = perspective_from_draw(raw, T::from_c(r), cfg) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Orthonormal horizontal/vertical axes of the plane perpendicular to
/// `direction`, built with a +z up-hint (+x when the direction is vertical).
pub fn frustum_axes<T: Real>(direction: &UnitVector3<T>) -> (UnitVector3<T>, UnitVector3<T>) {
    let up_hint = if direction.cross(&Vector3::z()).norm() < T::from_c(1e-6) {
        Vector3::x()
    } else {
        Vector3::z()
    };
    let h = UnitVector3::new_normalize(direction.cross(&up_hint));
    let v = UnitVector3::new_normalize(h.cross(direction));
    (h, v)
}

/// Number of interior grid steps on each side of the frustum axis for the
/// given far-plane half extents and endpoint spacing.
pub fn endpoint_grid_size<T: Real>(d_h: T, d_v: T, spacing: T) -> (i64, i64) {
    (
        (d_h / spacing).floor().to_c() as i64,
        (d_v / spacing).floor().to_c() as i64,
    )
}

/// Ray endpoints on the far frustum plane: a regular grid centered on the
/// frustum axis with spacing `grid_scaling * voxel_resolution`, plus the four
/// frustum corner points, which are always included.
pub fn frustum_endpoints<T: Real>(
    persp: &Perspective<T>,
    cam: &CameraModel<T>,
    voxel_resolution: T,
    grid_scaling: T,
) -> Vec<Point3<T>> {
    let (d_h, d_v) = cam.far_plane_half_extents();
    let center = persp.origin + persp.direction.into_inner() * cam.range;
    let (h_axis, v_axis) = frustum_axes(&persp.direction);
    let spacing = grid_scaling * voxel_resolution;
    let (n_h, n_v) = endpoint_grid_size(d_h, d_v, spacing);

    let mut points = Vec::with_capacity(((2 * n_h + 1) * (2 * n_v + 1) + 4) as usize);
    for j in -n_v..=n_v {
        let dv = T::from_i64(j).unwrap() * spacing;
        for i in -n_h..=n_h {
            let dh = T::from_i64(i).unwrap() * spacing;
            points.push(center + h_axis.into_inner() * dh + v_axis.into_inner() * dv);
        }
    }
    for &(sh, sv) in &[(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        points.push(
            center
                + h_axis.into_inner() * (T::from_c(sh) * d_h)
                + v_axis.into_inner() * (T::from_c(sv) * d_v),
        );
    }
    points
}

/// Information gain of a single ray: traverses voxels from `origin` toward
/// `endpoint`, accumulating per-voxel gains (occupied: `1 - P`, free: `P`,
/// unknown: `1`) and stopping after the first occupied voxel or at the
/// endpoint voxel.
pub fn ray_gain<T: Real>(map: &VoxelMap<T>, origin: &Point3<T>, endpoint: &Point3<T>) -> Result<T> {
    if origin == endpoint {
        return Err(Error::Validation("ray endpoint must differ from its origin".into()));
    }
    let mut sum = T::zero();
    walk_segment(origin, endpoint, map.resolution(), |k| {
        let (state, p) = map.classify(&k);
        match state {
            VoxelState::Occupied => {
                sum += T::one() - p;
                false
            }
            VoxelState::Free => {
                sum += p;
                true
            }
            VoxelState::Unknown => {
                sum += T::one();
                true
            }
        }
    });
    Ok(sum)
}

fn perspective_gain<T: Real>(
    map: &VoxelMap<T>,
    persp: &Perspective<T>,
    cam: &CameraModel<T>,
    grid_scaling: T,
) -> Result<PerspectiveGain<T>> {
    let endpoints = frustum_endpoints(persp, cam, map.resolution(), grid_scaling);
    let mut sum = T::zero();
    for e in &endpoints {
        sum += ray_gain(map, &persp.origin, e)?;
    }
    Ok(PerspectiveGain {
        origin: persp.origin,
        gain: sum / T::from_usize(endpoints.len()).unwrap(),
        ray_count: endpoints.len(),
    })
}

/// Computes the gain of every perspective over an immutable map snapshot.
///
/// Parallelism is across perspectives with a fixed intra-perspective
/// summation order, so both modes return identical values per perspective.
pub fn compute_gains<T: Real>(
    map: &VoxelMap<T>,
    perspectives: &[Perspective<T>],
    cam: &CameraModel<T>,
    grid_scaling: T,
    mode: ExecMode,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<PerspectiveGain<T>>> {
    match mode {
        ExecMode::Sequential => perspectives
            .iter()
            .map(|p| perspective_gain(map, p, cam, grid_scaling))
            .collect(),
        ExecMode::Parallel => {
            let work = || {
                perspectives
                    .par_iter()
                    .map(|p| perspective_gain(map, p, cam, grid_scaling))
                    .collect::<Result<Vec<_>>>()
            };
            match pool {
                Some(pool) => pool.install(work),
                None => work(),
            }
        }
    }
}

/// Samples perspectives and computes their gains in one call.
pub fn compute_distribution<T: Real>(
    map: &VoxelMap<T>,
    cfg: &IgConfig<T>,
    cam: &CameraModel<T>,
    mode: ExecMode,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<PerspectiveGain<T>>> {
    let perspectives = sample_perspectives(cfg)?;
    compute_gains(map, &perspectives, cam, cfg.grid_scaling, mode, pool)
}

/// One measured benchmark cell.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub n_p: usize,
    pub s_g: f64,
    pub mode: ExecMode,
    pub mean_s: f64,
    pub std_s: f64,
}

/// Measures mean and standard deviation of the gain-computation wall time
/// over a grid of perspective counts and grid scaling factors, in both
/// execution modes. Perspective sampling and map construction are excluded
/// from the timed section; endpoint generation, raycasting, and averaging are
/// included.
pub fn benchmark<T: Real>(
    map: &VoxelMap<T>,
    cam: &CameraModel<T>,
    poi: Point3<T>,
    sphere_radius: T,
    perspective_counts: &[usize],
    grid_scalings: &[T],
    iterations: usize,
    rng_seed: u64,
    workers: usize,
) -> Result<Vec<BenchRecord>> {
    if iterations < 1 {
        return Err(Error::Validation("benchmark needs at least one iteration".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("failed to build thread pool: {e}")))?;

    let mut records = Vec::new();
    for &n_p in perspective_counts {
        let cfg = IgConfig {
            poi,
            sphere_radius,
            perspective_count: n_p,
            grid_scaling: T::one(),
            rng_seed,
        };
        let perspectives = sample_perspectives(&cfg)?;
        for &s_g in grid_scalings {
            for mode in [ExecMode::Sequential, ExecMode::Parallel] {
                let mut times = Vec::with_capacity(iterations);
                for _ in 0..iterations {
                    let start = Instant::now();
                    let gains = compute_gains(map, &perspectives, cam, s_g, mode, Some(&pool))?;
                    let dt = start.elapsed().as_secs_f64();
                    std::hint::black_box(gains);
                    times.push(dt);
                }
                let mean = times.iter().sum::<f64>() / times.len() as f64;
                let std = if times.len() > 1 {
                    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
                        / (times.len() - 1) as f64;
                    var.sqrt()
                } else {
                    0.0
                };
                records.push(BenchRecord {
                    n_p,
                    s_g: s_g.to_c(),
                    mode,
                    mean_s: mean,
                    std_s: std,
                });
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxelmap::{log_odds, OccupancyParams, VoxelKey};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn unknown_map(res: f64) -> VoxelMap<f64> {
        VoxelMap::new(res, OccupancyParams::default()).unwrap()
    }

    fn test_cfg(seed: u64, n: usize) -> IgConfig<f64> {
        IgConfig {
            poi: Point3::new(0.4, -0.2, 0.7),
            sphere_radius: 1.0,
            perspective_count: n,
            grid_scaling: 100.0,
            rng_seed: seed,
        }
    }

    #[test]
    fn forced_draw_lands_on_sphere_surface() {
        let cfg = IgConfig {
            poi: Point3::origin(),
            sphere_radius: 1.0,
            perspective_count: 1,
            grid_scaling: 1.0,
            rng_seed: 0,
        };
        let p = perspective_from_draw(Vector3::new(1.0, 0.0, 0.0), 1.0, &cfg).unwrap();
        assert_relative_eq!(p.origin, Point3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(
            p.direction.into_inner(),
            Vector3::new(-1.0, 0.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn degenerate_draws_are_rejected() {
        let cfg = test_cfg(0, 1);
        assert!(perspective_from_draw(Vector3::new(1e-15, 0.0, 0.0), 0.5, &cfg).is_none());
        assert!(perspective_from_draw(Vector3::new(1.0, 1.0, 1.0), 0.0, &cfg).is_none());
    }

    #[test]
    fn sampling_is_deterministic_and_inside_sphere() {
        let cfg = test_cfg(42, 5000);
        let a = sample_perspectives(&cfg).unwrap();
        let b = sample_perspectives(&cfg).unwrap();
        assert_eq!(a.len(), 5000);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.origin, pb.origin);
        }
        for p in &a {
            let r = (p.origin - cfg.poi).norm();
            assert!(r <= cfg.sphere_radius + 1e-12);
            // Direction points back at the point of interest.
            let toward = (cfg.poi - p.origin).normalize();
            assert_relative_eq!(p.direction.into_inner(), toward, epsilon = 1e-9);
        }
        // Radial cube-law spot check: an (r/r_S)^3 CDF puts 1/8 of the
        // samples inside half the radius.
        let inside = a
            .iter()
            .filter(|p| (p.origin - cfg.poi).norm() <= 0.5)
            .count();
        let frac = inside as f64 / a.len() as f64;
        assert!((frac - 0.125).abs() < 0.02, "fraction {frac}");
    }

    #[test]
    fn far_plane_half_extent_examples() {
        let cam = CameraModel::new(std::f64::consts::FRAC_PI_2, 1.0, 2.0).unwrap();
        assert_relative_eq!(cam.far_plane_half_extents().0, 2.0, epsilon = 1e-12);
        let cam = CameraModel::new(std::f64::consts::FRAC_PI_3, 1.0, 3.0).unwrap();
        assert_relative_eq!(cam.far_plane_half_extents().0, 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn endpoint_grid_count_includes_corners() {
        // d_h = d_v = 2 m, spacing 1 m: 5x5 interior grid plus 4 corners.
        let (n_h, n_v) = endpoint_grid_size(2.0, 2.0, 1.0);
        assert_eq!((n_h, n_v), (2, 2));
        let count = (2 * n_h + 1) * (2 * n_v + 1) + 4;
        assert_eq!(count, 29);
    }

    #[test]
    fn endpoints_lie_on_the_far_plane() {
        let fov = 2.0 * 1.0f64.atan();
        let cam = CameraModel::new(fov, fov, 2.0).unwrap();
        let (d_h, d_v) = cam.far_plane_half_extents();
        let persp = Perspective {
            origin: Point3::origin(),
            direction: UnitVector3::new_normalize(Vector3::new(1.0, 0.0, 0.0)),
        };
        let pts = frustum_endpoints(&persp, &cam, 0.01, 100.0);
        let (n_h, n_v) = endpoint_grid_size(d_h, d_v, 1.0);
        assert_eq!(pts.len() as i64, (2 * n_h + 1) * (2 * n_v + 1) + 4);
        let center = Point3::new(2.0, 0.0, 0.0);
        for e in &pts {
            let off = e - center;
            assert_relative_eq!(off.x, 0.0, epsilon = 1e-9);
            assert!(off.y.abs() <= d_h + 1e-9 && off.z.abs() <= d_v + 1e-9);
        }
        // The four corners close the list.
        let corner = pts[pts.len() - 1] - center;
        assert_relative_eq!(corner.y.abs(), d_h, epsilon = 1e-12);
        assert_relative_eq!(corner.z.abs(), d_v, epsilon = 1e-12);
    }

    #[test]
    fn vertical_direction_uses_fallback_up_hint() {
        let persp = Perspective {
            origin: Point3::origin(),
            direction: UnitVector3::new_normalize(Vector3::new(0.0, 0.0, 1.0)),
        };
        let (h, v) = frustum_axes(&persp.direction);
        assert_relative_eq!(h.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.dot(&v), 0.0, epsilon = 1e-12);
        assert_relative_eq!(h.dot(&persp.direction), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ray_through_unknown_voxels_scores_their_count() {
        let map = unknown_map(0.1);
        let gain = ray_gain(
            &map,
            &Point3::new(0.05, 0.05, 0.05),
            &Point3::new(0.95, 0.05, 0.05),
        )
        .unwrap();
        assert_eq!(gain, 10.0);
    }

    #[test]
    fn certain_occupied_first_voxel_scores_zero() {
        let mut map = unknown_map(0.1);
        // log-odds 40 saturates to probability 1.0 in f64.
        map.set_log_odds(VoxelKey::new(0, 0, 0), 40.0, true);
        let gain = ray_gain(
            &map,
            &Point3::new(0.05, 0.05, 0.05),
            &Point3::new(0.95, 0.05, 0.05),
        )
        .unwrap();
        assert_eq!(gain, 0.0);
    }

    #[test]
    fn occupied_voxel_stops_the_ray() {
        let mut map = unknown_map(0.1);
        map.set_log_odds(VoxelKey::new(4, 0, 0), log_odds(0.9), true);
        map.set_log_odds(VoxelKey::new(6, 0, 0), log_odds(0.9), true);
        let gain = ray_gain(
            &map,
            &Point3::new(0.05, 0.05, 0.05),
            &Point3::new(0.95, 0.05, 0.05),
        )
        .unwrap();
        // Four unknown voxels then the first occupied one: 4 + (1 - 0.9).
        assert_relative_eq!(gain, 4.1, epsilon = 1e-12);
    }

    #[test]
    fn flipping_a_free_voxel_to_unknown_raises_gain_by_its_complement() {
        let mut map = unknown_map(0.1);
        let p_free = 0.3;
        for ix in 0..10 {
            map.set_log_odds(VoxelKey::new(ix, 0, 0), log_odds(p_free), true);
        }
        let o = Point3::new(0.05, 0.05, 0.05);
        let e = Point3::new(0.95, 0.05, 0.05);
        let before = ray_gain(&map, &o, &e).unwrap();
        let mut flipped = map.clone();
        flipped.set_log_odds(VoxelKey::new(5, 0, 0), 0.0, false);
        let after = ray_gain(&flipped, &o, &e).unwrap();
        assert_relative_eq!(after - before, 1.0 - p_free, epsilon = 1e-12);
    }

    #[test]
    fn tiny_fov_mean_equals_single_ray_gain() {
        let map = unknown_map(0.1);
        let cam = CameraModel::new(1e-9, 1e-9, 0.6).unwrap();
        let persp = Perspective {
            origin: Point3::new(0.05, 0.05, 0.05),
            direction: UnitVector3::new_normalize(Vector3::new(1.0, 0.0, 0.0)),
        };
        let gains = compute_gains(&map, &[persp], &cam, 100.0, ExecMode::Sequential, None).unwrap();
        assert_eq!(gains.len(), 1);
        assert_eq!(gains[0].gain, 7.0);
    }

    #[test]
    fn parallel_equals_sequential_elementwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut map = unknown_map(0.05);
        for _ in 0..2000 {
            map.set_log_odds(
                VoxelKey::new(rng.gen_range(-20..20), rng.gen_range(-20..20), rng.gen_range(-20..20)),
                rng.gen_range(-2.0..3.0),
                rng.gen_bool(0.9),
            );
        }
        let cfg = IgConfig {
            poi: Point3::origin(),
            sphere_radius: 0.8,
            perspective_count: 50,
            grid_scaling: 8.0,
            rng_seed: 77,
        };
        let cam = CameraModel::new(1.2, 1.0, 2.0).unwrap();
        let seq = compute_distribution(&map, &cfg, &cam, ExecMode::Sequential, None).unwrap();
        let par = compute_distribution(&map, &cfg, &cam, ExecMode::Parallel, None).unwrap();
        assert_eq!(seq.len(), par.len());
        for (s, p) in seq.iter().zip(&par) {
            assert!((s.gain - p.gain).abs() <= 1e-9);
            assert_eq!(s.ray_count, p.ray_count);
        }
    }

    #[test]
    fn benchmark_smoke_produces_two_rows() {
        let map = unknown_map(0.1);
        let cam = CameraModel::new(1.0, 1.0, 1.0).unwrap();
        let records = benchmark(
            &map,
            &cam,
            Point3::origin(),
            0.5,
            &[10],
            &[50.0],
            1,
            1,
            1,
        )
        .unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert!(r.mean_s > 0.0);
            assert_eq!(r.std_s, 0.0);
        }
        assert_eq!(records[0].mode, ExecMode::Sequential);
        assert_eq!(records[1].mode, ExecMode::Parallel);
    }

    #[test]
    fn sequential_runtime_grows_with_perspective_count() {
        let map = unknown_map(0.02);
        let cam = CameraModel::new(1.2, 1.0, 2.0).unwrap();
        let records = benchmark(
            &map,
            &cam,
            Point3::origin(),
            0.8,
            &[20, 80, 320],
            &[20.0],
            3,
            5,
            1,
        )
        .unwrap();
        let seq: Vec<&BenchRecord> = records
            .iter()
            .filter(|r| r.mode == ExecMode::Sequential)
            .collect();
        // Least-squares slope over (n_p, mean_s) must be positive.
        let n = seq.len() as f64;
        let mx = seq.iter().map(|r| r.n_p as f64).sum::<f64>() / n;
        let my = seq.iter().map(|r| r.mean_s).sum::<f64>() / n;
        let slope: f64 = seq
            .iter()
            .map(|r| (r.n_p as f64 - mx) * (r.mean_s - my))
            .sum::<f64>()
            / seq.iter().map(|r| (r.n_p as f64 - mx).powi(2)).sum::<f64>();
        assert!(slope > 0.0, "slope {slope}");
    }
}
