//! Three-state probabilistic voxel occupancy map.
//!
//! The map stores log-odds occupancy for sparse voxel cells and explicitly
//! distinguishes unknown space: a cell that was never observed classifies as
//! [`VoxelState::Unknown`] with probability 0.5 no matter what is stored.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geom::Aabb;
use crate::scalar::Real;
use crate::traversal::walk_segment;

/// Signed integer grid index of a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelKey {
    pub ix: i32,
    pub iy: i32,
    pub iz: i32,
}

impl VoxelKey {
    pub fn new(ix: i32, iy: i32, iz: i32) -> Self {
        Self { ix, iy, iz }
    }

    /// Key of the half-open cell `[k*res, (k+1)*res)` containing `p`.
    pub fn of_point<T: Real>(p: &Point3<T>, resolution: T) -> Self {
        let f = |v: T| (v / resolution).floor().to_c() as i32;
        Self {
            ix: f(p.x),
            iy: f(p.y),
            iz: f(p.z),
        }
    }

    /// World coordinates of the cell center.
    pub fn center<T: Real>(&self, resolution: T) -> Point3<T> {
        let half = T::from_c(0.5);
        Point3::new(
            (T::from_i32(self.ix).unwrap() + half) * resolution,
            (T::from_i32(self.iy).unwrap() + half) * resolution,
            (T::from_i32(self.iz).unwrap() + half) * resolution,
        )
    }
}

/// Stored per-voxel state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelCell<T: Real> {
    pub log_odds: T,
    pub observed: bool,
}

/// Classification of a voxel by occupancy probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelState {
    Occupied,
    Free,
    Unknown,
}

/// Log-odds of a probability: `L(p) = ln(p / (1 - p))`.
pub fn log_odds<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Probability of a log-odds value: `P(L) = 1 / (1 + exp(-L))`.
pub fn probability<T: Real>(l: T) -> T {
    T::one() / (T::one() + (-l).exp())
}

/// Occupancy update model: hit/miss increments, clamps, and thresholds.
#[derive(Debug, Clone, Copy)]
pub struct OccupancyParams<T: Real> {
    pub p_hit: T,
    pub p_miss: T,
    pub p_min: T,
    pub p_max: T,
    pub t_occ: T,
    pub t_free: T,
    /// Rays longer than this are truncated and carve free space only.
    pub max_range: T,
    l_hit: T,
    l_miss: T,
    l_min: T,
    l_max: T,
}

impl<T: Real> OccupancyParams<T> {
    pub fn new(p_hit: T, p_miss: T, p_min: T, p_max: T, t_occ: T, t_free: T, max_range: T) -> Result<Self> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !(unit(p_hit) && unit(p_miss) && unit(p_min) && unit(p_max) && unit(t_occ) && unit(t_free)) {
            return Err(Error::Validation(
                "occupancy probabilities must lie strictly inside (0, 1)".into(),
            ));
        }
        if p_miss >= p_hit || p_min >= p_max {
            return Err(Error::Validation(
                "occupancy model requires p_miss < p_hit and p_min < p_max".into(),
            ));
        }
        if max_range <= T::zero() {
            return Err(Error::Validation("max integration range must be positive".into()));
        }
        Ok(Self {
            p_hit,
            p_miss,
            p_min,
            p_max,
            t_occ,
            t_free,
            max_range,
            l_hit: log_odds(p_hit),
            l_miss: log_odds(p_miss),
            l_min: log_odds(p_min),
            l_max: log_odds(p_max),
        })
    }

    pub fn log_odds_hit(&self) -> T {
        self.l_hit
    }

    pub fn log_odds_miss(&self) -> T {
        self.l_miss
    }

    fn clamp(&self, l: T) -> T {
        l.max(self.l_min).min(self.l_max)
    }
}

impl<T: Real> Default for OccupancyParams<T> {
    fn default() -> Self {
        Self::new(
            T::from_c(0.7),
            T::from_c(0.4),
            T::from_c(0.12),
            T::from_c(0.97),
            T::from_c(0.5),
            T::from_c(0.5),
            T::from_c(5.0),
        )
        .expect("default occupancy parameters are valid")
    }
}

/// Sparse three-state voxel occupancy map.
#[derive(Debug, Clone)]
pub struct VoxelMap<T: Real> {
    resolution: T,
    cells: HashMap<VoxelKey, VoxelCell<T>>,
    bounds: Option<Aabb<T>>,
    params: OccupancyParams<T>,
}

impl<T: Real> VoxelMap<T> {
    pub fn new(resolution: T, params: OccupancyParams<T>) -> Result<Self> {
        if !(resolution > T::zero()) || !resolution.is_finite() {
            return Err(Error::Validation("voxel resolution must be positive and finite".into()));
        }
        Ok(Self {
            resolution,
            cells: HashMap::new(),
            bounds: None,
            params,
        })
    }

    /// Restricts stored cells to keys whose centers lie inside `bounds`.
    pub fn with_bounds(mut self, bounds: Aabb<T>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn resolution(&self) -> T {
        self.resolution
    }

    pub fn params(&self) -> &OccupancyParams<T> {
        &self.params
    }

    pub fn bounds(&self) -> Option<&Aabb<T>> {
        self.bounds.as_ref()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn key_of(&self, p: &Point3<T>) -> VoxelKey {
        VoxelKey::of_point(p, self.resolution)
    }

    pub fn cell(&self, key: &VoxelKey) -> Option<&VoxelCell<T>> {
        self.cells.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VoxelKey, &VoxelCell<T>)> {
        self.cells.iter()
    }

    fn in_bounds(&self, key: &VoxelKey) -> bool {
        match &self.bounds {
            Some(b) => b.contains(&key.center(self.resolution)),
            None => true,
        }
    }

    /// Directly writes a cell, bypassing the update clamp. Used by map
    /// loading and synthetic map construction; sensor integration goes
    /// through [`VoxelMap::integrate_cloud`], which clamps.
    pub fn set_log_odds(&mut self, key: VoxelKey, l: T, observed: bool) {
        if !self.in_bounds(&key) {
            return;
        }
        self.cells.insert(key, VoxelCell { log_odds: l, observed });
    }

    fn apply(&mut self, key: VoxelKey, increment: T) {
        if !self.in_bounds(&key) {
            return;
        }
        let params = &self.params;
        let cell = self.cells.entry(key).or_insert(VoxelCell {
            log_odds: T::zero(),
            observed: false,
        });
        cell.log_odds = params.clamp(cell.log_odds + increment);
        cell.observed = true;
    }

    /// Integrates one sensor sweep: every point gets a hit update on its
    /// endpoint voxel and miss updates on all voxels the ray traverses before
    /// it. Points beyond the max integration range are truncated and carve
    /// free space only.
    pub fn integrate_cloud(&mut self, sensor_origin: &Point3<T>, points: &[Point3<T>]) -> Result<()> {
        if !sensor_origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("sensor origin must be finite".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!("point {i} has non-finite coordinates")));
            }
            let delta = p - sensor_origin;
            let dist = delta.norm();
            let (endpoint, truncated) = if dist > self.params.max_range {
                (sensor_origin + delta * (self.params.max_range / dist), true)
            } else {
                (*p, false)
            };
            let end_key = self.key_of(&endpoint);
            let mut misses: Vec<VoxelKey> = Vec::new();
            walk_segment(sensor_origin, &endpoint, self.resolution, |k| {
                if k != end_key {
                    misses.push(k);
                }
                true
            });
            let l_miss = self.params.log_odds_miss();
            let l_hit = self.params.log_odds_hit();
            for k in misses {
                self.apply(k, l_miss);
            }
            if truncated {
                self.apply(end_key, l_miss);
            } else {
                self.apply(end_key, l_hit);
            }
        }
        Ok(())
    }

    /// Classifies a voxel and reports its occupancy probability.
    pub fn classify(&self, key: &VoxelKey) -> (VoxelState, T) {
        match self.cells.get(key) {
            Some(cell) if cell.observed => {
                let p = probability(cell.log_odds);
                if p >= self.params.t_occ {
                    (VoxelState::Occupied, p)
                } else if p <= self.params.t_free {
                    (VoxelState::Free, p)
                } else {
                    (VoxelState::Unknown, p)
                }
            }
            _ => (VoxelState::Unknown, T::from_c(0.5)),
        }
    }

    pub fn classify_point(&self, p: &Point3<T>) -> (VoxelState, T) {
        self.classify(&self.key_of(p))
    }

    /// Counts voxels classified occupied whose centers lie inside `region`.
    pub fn occupied_volume(&self, region: &Aabb<T>) -> usize {
        self.cells
            .keys()
            .filter(|k| {
                region.contains(&k.center(self.resolution))
                    && self.classify(k).0 == VoxelState::Occupied
            })
            .count()
    }

    /// Writes the map in the line format `ix iy iz log_odds observed` under a
    /// `voxelmap v1 <resolution>` header. Cells are sorted by key so dumps are
    /// deterministic.
    pub fn dump<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "voxelmap v1 {}", self.resolution)?;
        let mut keys: Vec<&VoxelKey> = self.cells.keys().collect();
        keys.sort();
        for k in keys {
            let c = &self.cells[k];
            writeln!(
                w,
                "{} {} {} {} {}",
                k.ix,
                k.iy,
                k.iz,
                c.log_odds,
                if c.observed { 1 } else { 0 }
            )?;
        }
        Ok(())
    }

    /// Reads a map dumped by [`VoxelMap::dump`]. The occupancy model is not
    /// part of the format and must be supplied.
    pub fn load<R: BufRead>(r: R, params: OccupancyParams<T>) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty voxel map file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "voxelmap" || fields[1] != "v1" {
            return Err(Error::Parse(format!("unsupported voxel map header: {header}")));
        }
        let resolution: T = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad resolution: {}", fields[2])))?;
        let mut map = VoxelMap::new(resolution, params)?;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 fields", lineno + 2)));
            }
            let parse_i = |s: &str| {
                s.parse::<i32>()
                    .map_err(|_| Error::Parse(format!("line {}: bad index {s}", lineno + 2)))
            };
            let key = VoxelKey::new(parse_i(f[0])?, parse_i(f[1])?, parse_i(f[2])?);
            let l: T = f[3]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad log-odds {}", lineno + 2, f[3])))?;
            let observed = match f[4] {
                "1" => true,
                "0" => false,
                other => return Err(Error::Parse(format!("line {}: bad observed flag {other}", lineno + 2))),
            };
            map.cells.insert(key, VoxelCell { log_odds: l, observed });
        }
        Ok(map)
    }
}

/// Voxel-grid centroid downsampling: at most one point per leaf cell, each
/// the centroid of that cell's inputs. Output is ordered by leaf cell key.
pub fn downsample_cloud<T: Real>(points: &[Point3<T>], leaf: T) -> Result<Vec<Point3<T>>> {
    if !(leaf > T::zero()) || !leaf.is_finite() {
        return Err(Error::Validation("leaf size must be positive and finite".into()));
    }
    let mut cells: BTreeMap<(i64, i64, i64), (Vector3<T>, usize)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("point {i} has non-finite coordinates")));
        }
        let key = (
            (p.x / leaf).floor().to_c() as i64,
            (p.y / leaf).floor().to_c() as i64,
            (p.z / leaf).floor().to_c() as i64,
        );
        let entry = cells.entry(key).or_insert((Vector3::zeros(), 0));
        entry.0 += p.coords;
        entry.1 += 1;
    }
    Ok(cells
        .values()
        .map(|(sum, n)| Point3::from(*sum / T::from_usize(*n).unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_map(res: f64) -> VoxelMap<f64> {
        VoxelMap::new(res, OccupancyParams::default()).unwrap()
    }

    #[test]
    fn cube_corners_collapse_to_center() {
        let mut pts = Vec::new();
        for &dx in &[-0.25, 0.25] {
            for &dy in &[-0.25, 0.25] {
                for &dz in &[-0.25, 0.25] {
                    pts.push(Point3::new(1.0 + dx, 1.0 + dy, 1.0 + dz));
                }
            }
        }
        let out = downsample_cloud(&pts, 2.0).unwrap();
        assert_eq!(out.len(), 1);
        assert_relative_eq!(out[0], Point3::new(1.0, 1.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn single_point_survives_downsampling() {
        let p = Point3::new(0.3, -1.2, 5.5);
        let out = downsample_cloud(&[p], 0.7).unwrap();
        assert_eq!(out, vec![p]);
    }

    #[test]
    fn empty_input_gives_empty_output() {
        assert!(downsample_cloud::<f64>(&[], 0.1).unwrap().is_empty());
    }

    #[test]
    fn non_finite_points_are_rejected() {
        let pts = [Point3::new(0.0, f64::NAN, 0.0)];
        assert!(matches!(
            downsample_cloud(&pts, 0.1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn downsample_count_matches_bucketing_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3<f64>> = (0..1000)
            .map(|_| Point3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
            .collect();
        let leaf = 0.1;
        let out = downsample_cloud(&pts, leaf).unwrap();
        // Oracle: brute-force distinct occupied leaf cells.
        let mut occupied: Vec<(i64, i64, i64)> = pts
            .iter()
            .map(|p| {
                (
                    (p.x / leaf).floor() as i64,
                    (p.y / leaf).floor() as i64,
                    (p.z / leaf).floor() as i64,
                )
            })
            .collect();
        occupied.sort();
        occupied.dedup();
        assert_eq!(out.len(), occupied.len());
    }

    #[test]
    fn single_hit_yields_default_hit_probability() {
        let mut map = default_map(0.1);
        let origin = Point3::new(0.05, 0.05, 0.05);
        let target = Point3::new(1.05, 0.05, 0.05);
        map.integrate_cloud(&origin, &[target]).unwrap();
        let (state, p) = map.classify_point(&target);
        assert_eq!(state, VoxelState::Occupied);
        assert_relative_eq!(p, 0.7, epsilon = 1e-12);
        // Traversed voxels in front of the endpoint carve free space.
        let (state, p) = map.classify_point(&Point3::new(0.55, 0.05, 0.05));
        assert_eq!(state, VoxelState::Free);
        assert_relative_eq!(p, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn empty_cloud_leaves_map_unchanged() {
        let mut map = default_map(0.1);
        map.integrate_cloud(&Point3::origin(), &[]).unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn repeated_hits_saturate_at_clamp() {
        let mut map = default_map(0.1);
        let origin = Point3::new(0.05, 0.05, 0.05);
        let target = Point3::new(1.05, 0.05, 0.05);
        for _ in 0..50 {
            map.integrate_cloud(&origin, &[target]).unwrap();
        }
        let (_, p) = map.classify_point(&target);
        assert_relative_eq!(p, map.params().p_max, epsilon = 1e-12);
    }

    #[test]
    fn classify_unstored_is_unknown_prior() {
        let map = default_map(0.1);
        assert_eq!(
            map.classify(&VoxelKey::new(3, -2, 7)),
            (VoxelState::Unknown, 0.5)
        );
    }

    #[test]
    fn classify_high_probability_is_occupied() {
        let mut map = default_map(0.1);
        map.set_log_odds(VoxelKey::new(0, 0, 0), log_odds(0.97), true);
        let (state, p) = map.classify(&VoxelKey::new(0, 0, 0));
        assert_eq!(state, VoxelState::Occupied);
        assert_relative_eq!(p, 0.97, epsilon = 1e-12);
    }

    #[test]
    fn single_miss_classifies_free() {
        let mut map = default_map(0.1);
        let l = map.params().log_odds_miss();
        map.set_log_odds(VoxelKey::new(1, 1, 1), l, true);
        let (state, p) = map.classify(&VoxelKey::new(1, 1, 1));
        assert_eq!(state, VoxelState::Free);
        assert_relative_eq!(p, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn stored_but_unobserved_remains_unknown() {
        let mut map = default_map(0.1);
        map.set_log_odds(VoxelKey::new(0, 0, 0), 3.0, false);
        assert_eq!(
            map.classify(&VoxelKey::new(0, 0, 0)),
            (VoxelState::Unknown, 0.5)
        );
    }

    #[test]
    fn occupied_volume_counts_only_region() {
        let mut map = default_map(0.1);
        let l_occ = log_odds(0.9);
        // 3 occupied inside, 2 outside, 1 free inside.
        for k in [VoxelKey::new(0, 0, 0), VoxelKey::new(1, 0, 0), VoxelKey::new(0, 1, 0)] {
            map.set_log_odds(k, l_occ, true);
        }
        for k in [VoxelKey::new(50, 0, 0), VoxelKey::new(0, 50, 0)] {
            map.set_log_odds(k, l_occ, true);
        }
        map.set_log_odds(VoxelKey::new(1, 1, 0), log_odds(0.2), true);
        let region = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        assert_eq!(map.occupied_volume(&region), 3);
        assert_eq!(default_map(0.1).occupied_volume(&region), 0);
    }

    #[test]
    fn occupied_volume_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut map = default_map(0.2);
        for _ in 0..400 {
            let key = VoxelKey::new(
                rng.gen_range(-6..6),
                rng.gen_range(-6..6),
                rng.gen_range(-6..6),
            );
            map.set_log_odds(key, rng.gen_range(-3.0..3.0), rng.gen_bool(0.8));
        }
        let region = Aabb::new(Point3::new(-0.7, -0.7, -0.7), Point3::new(0.9, 0.9, 0.9));
        let oracle = map
            .iter()
            .filter(|(k, c)| {
                c.observed
                    && probability(c.log_odds) >= 0.5
                    && region.contains(&k.center(0.2))
            })
            .count();
        assert_eq!(map.occupied_volume(&region), oracle);
    }

    #[test]
    fn no_voxel_beyond_endpoint_is_touched() {
        let mut map = default_map(0.1);
        let origin = Point3::new(0.05, 0.05, 0.05);
        let target = Point3::new(1.05, 0.05, 0.05);
        map.integrate_cloud(&origin, &[target]).unwrap();
        for ix in 11..30 {
            assert!(map.cell(&VoxelKey::new(ix, 0, 0)).is_none());
        }
    }

    #[test]
    fn truncated_ray_carves_free_space_only() {
        let mut map = default_map(0.1);
        let origin = Point3::new(0.05, 0.05, 0.05);
        let far = Point3::new(9.05, 0.05, 0.05);
        map.integrate_cloud(&origin, &[far]).unwrap();
        assert_eq!(map.occupied_volume(&Aabb::new(
            Point3::new(-1.0, -1.0, -1.0),
            Point3::new(10.0, 1.0, 1.0),
        )), 0);
        // Free space reaches the max range but not beyond.
        let (state, _) = map.classify_point(&Point3::new(4.95, 0.05, 0.05));
        assert_eq!(state, VoxelState::Free);
        let (state, _) = map.classify_point(&Point3::new(5.55, 0.05, 0.05));
        assert_eq!(state, VoxelState::Unknown);
    }

    #[test]
    fn split_integration_equals_concatenated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let origin = Point3::new(0.02, 0.03, 0.04);
        let cloud: Vec<Point3<f64>> = (0..40)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let (a, b) = cloud.split_at(17);
        let mut split = default_map(0.1);
        split.integrate_cloud(&origin, a).unwrap();
        split.integrate_cloud(&origin, b).unwrap();
        let mut joint = default_map(0.1);
        joint.integrate_cloud(&origin, &cloud).unwrap();
        assert_eq!(split.len(), joint.len());
        for (k, c) in joint.iter() {
            let other = split.cell(k).expect("cell present in both maps");
            assert_eq!(c, other, "cell {k:?}");
        }
    }

    #[test]
    fn dump_load_roundtrip_is_exact() {
        let mut map = default_map(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            map.set_log_odds(
                VoxelKey::new(rng.gen_range(-9..9), rng.gen_range(-9..9), rng.gen_range(-9..9)),
                rng.gen_range(-1.9..3.4),
                rng.gen_bool(0.9),
            );
        }
        let mut buf = Vec::new();
        map.dump(&mut buf).unwrap();
        let loaded = VoxelMap::load(buf.as_slice(), OccupancyParams::default()).unwrap();
        assert_eq!(loaded.resolution(), map.resolution());
        assert_eq!(loaded.len(), map.len());
        for (k, c) in map.iter() {
            assert_eq!(loaded.cell(k), Some(c));
        }
    }

    #[test]
    fn bounds_reject_outside_updates() {
        let bounds = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0));
        let mut map = default_map(0.1).with_bounds(bounds);
        map.integrate_cloud(&Point3::new(0.05, 0.05, 0.05), &[Point3::new(2.5, 0.05, 0.05)])
            .unwrap();
        for (k, _) in map.iter() {
            assert!(bounds.contains(&k.center(0.1)));
        }
    }

    proptest! {
        #[test]
        fn probability_log_odds_roundtrip(p in 1e-6f64..=0.999999f64) {
            let l = log_odds(p);
            prop_assert!((probability(l) - p).abs() < 1e-12);
        }

        #[test]
        fn key_center_roundtrip(ix in -2000i32..2000, iy in -2000i32..2000, iz in -2000i32..2000) {
            let key = VoxelKey::new(ix, iy, iz);
            let res = 0.07f64;
            prop_assert_eq!(VoxelKey::of_point(&key.center(res), res), key);
        }
    }
}
