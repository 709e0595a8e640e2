//! Incremental voxel traversal along a segment (Amanatides & Woo style).

use nalgebra::Point3;

use crate::scalar::Real;
use crate::voxelmap::VoxelKey;

/// Walks every voxel the segment `origin -> end` passes through, in order,
/// starting with the voxel containing `origin` and ending with the voxel
/// containing `end`. The visitor returns `false` to stop early.
///
/// Grid cells are half-open boxes `[k*res, (k+1)*res)`, so a point exactly on
/// a boundary belongs to the higher-index cell. A segment crossing exactly
/// through an edge or corner steps all tied axes at once and does not visit
/// the side cells it only touches in a single point.
pub fn walk_segment<T: Real>(
    origin: &Point3<T>,
    end: &Point3<T>,
    resolution: T,
    mut visit: impl FnMut(VoxelKey) -> bool,
) {
    let mut key = VoxelKey::of_point(origin, resolution);
    let end_key = VoxelKey::of_point(end, resolution);
    let delta = end - origin;

    let mut step = [0i32; 3];
    let mut t_delta = [T::INF; 3];
    let mut t_max = [T::INF; 3];
    let idx = [key.ix, key.iy, key.iz];
    for a in 0..3 {
        if delta[a] > T::zero() {
            step[a] = 1;
            t_delta[a] = resolution / delta[a];
            let boundary = T::from_i32(idx[a] + 1).unwrap() * resolution;
            t_max[a] = (boundary - origin[a]) / delta[a];
        } else if delta[a] < T::zero() {
            step[a] = -1;
            t_delta[a] = -resolution / delta[a];
            let boundary = T::from_i32(idx[a]).unwrap() * resolution;
            t_max[a] = (boundary - origin[a]) / delta[a];
        }
    }

    // Failsafe against pathological floating-point states.
    let budget = (key.ix - end_key.ix).unsigned_abs() as u64
        + (key.iy - end_key.iy).unsigned_abs() as u64
        + (key.iz - end_key.iz).unsigned_abs() as u64
        + 3;

    for _ in 0..=budget {
        if !visit(key) || key == end_key {
            return;
        }
        let tm = t_max[0].min(t_max[1]).min(t_max[2]);
        for a in 0..3 {
            if t_max[a] == tm {
                match a {
                    0 => key.ix += step[0],
                    1 => key.iy += step[1],
                    _ => key.iz += step[2],
                }
                t_max[a] += t_delta[a];
            }
        }
    }
    visit(end_key);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference walk: collect all boundary-crossing parameters,
    /// then read off the voxel of each inter-crossing span midpoint.
    pub fn oracle_walk(origin: &Point3<f64>, end: &Point3<f64>, res: f64) -> Vec<VoxelKey> {
        let delta = end - origin;
        let mut params = vec![0.0f64, 1.0];
        for a in 0..3 {
            if delta[a] == 0.0 {
                continue;
            }
            let lo = origin[a].min(end[a]);
            let hi = origin[a].max(end[a]);
            let k_lo = (lo / res).floor() as i64;
            let k_hi = (hi / res).ceil() as i64;
            for k in k_lo..=k_hi {
                let t = (k as f64 * res - origin[a]) / delta[a];
                if t > 0.0 && t < 1.0 {
                    params.push(t);
                }
            }
        }
        params.sort_by(|x, y| x.partial_cmp(y).unwrap());
        params.dedup();

        let mut keys = Vec::new();
        for w in params.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let p = origin + delta * mid;
            let k = VoxelKey::of_point(&p, res);
            if keys.last() != Some(&k) {
                keys.push(k);
            }
        }
        let end_key = VoxelKey::of_point(end, res);
        if keys.last() != Some(&end_key) {
            keys.push(end_key);
        }
        let start_key = VoxelKey::of_point(origin, res);
        if keys.first() != Some(&start_key) {
            keys.insert(0, start_key);
        }
        keys
    }

    fn collect_walk(origin: &Point3<f64>, end: &Point3<f64>, res: f64) -> Vec<VoxelKey> {
        let mut out = Vec::new();
        walk_segment(origin, end, res, |k| {
            out.push(k);
            true
        });
        out
    }

    #[test]
    fn axis_aligned_segment_visits_ten_voxels() {
        let keys = collect_walk(
            &Point3::new(0.05, 0.05, 0.05),
            &Point3::new(0.95, 0.05, 0.05),
            0.1,
        );
        assert_eq!(keys.len(), 10);
        assert_eq!(keys[0], VoxelKey::new(0, 0, 0));
        assert_eq!(keys[9], VoxelKey::new(9, 0, 0));
    }

    #[test]
    fn degenerate_segment_visits_single_voxel() {
        let p = Point3::new(0.25, 0.25, 0.25);
        assert_eq!(collect_walk(&p, &p, 0.1), vec![VoxelKey::new(2, 2, 2)]);
    }

    #[test]
    fn exact_diagonal_cuts_the_corner() {
        let keys = collect_walk(&Point3::new(0.5, 0.5, 0.5), &Point3::new(2.5, 2.5, 0.5), 1.0);
        assert_eq!(
            keys,
            vec![
                VoxelKey::new(0, 0, 0),
                VoxelKey::new(1, 1, 0),
                VoxelKey::new(2, 2, 0)
            ]
        );
        assert_eq!(
            keys,
            oracle_walk(&Point3::new(0.5, 0.5, 0.5), &Point3::new(2.5, 2.5, 0.5), 1.0)
        );
    }

    #[test]
    fn random_segments_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let o = Point3::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            );
            let e = Point3::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            );
            let got = collect_walk(&o, &e, 0.05);
            let want = oracle_walk(&o, &e, 0.05);
            assert_eq!(got, want, "origin {o:?} end {e:?}");
        }
    }

    #[test]
    fn negative_coordinates_walk_consistently() {
        let keys = collect_walk(
            &Point3::new(-0.25, -0.05, 0.0),
            &Point3::new(0.25, -0.05, 0.0),
            0.1,
        );
        assert_eq!(keys.first(), Some(&VoxelKey::new(-3, -1, 0)));
        assert_eq!(keys.last(), Some(&VoxelKey::new(2, -1, 0)));
        assert_eq!(keys.len(), 6);
    }
}
