//! Buffered information distributions and gain interpolation.
//!
//! Keeps the most recent distributions in a ring buffer and evaluates an
//! interpolated gain for arbitrary camera positions by inverse-distance
//! weighting over each buffered distribution, recency-weighted so older
//! distributions have less impact. Also provides the orientation factor that
//! scores camera alignment with the point of interest.

use std::collections::VecDeque;

use nalgebra::{Point3, UnitVector3};

use crate::error::{Error, Result};
use crate::ig::{CameraModel, PerspectiveGain};
use crate::scalar::Real;

/// Ring buffer of the most recent information distributions, oldest first.
#[derive(Debug, Clone)]
pub struct DistributionBuffer<T: Real> {
    entries: VecDeque<Vec<PerspectiveGain<T>>>,
    capacity: usize,
}

impl<T: Real> DistributionBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity < 1 {
            return Err(Error::Validation("buffer capacity must be at least 1".into()));
        }
        Ok(Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a distribution as the newest entry, evicting the oldest when
    /// the buffer is at capacity.
    pub fn push(&mut self, distribution: Vec<PerspectiveGain<T>>) {
        debug_assert!(!distribution.is_empty(), "distributions must be non-empty");
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(distribution);
    }

    /// Entries oldest to newest.
    pub fn entries(&self) -> impl Iterator<Item = &Vec<PerspectiveGain<T>>> {
        self.entries.iter()
    }
}

/// Inverse-distance weighting parameters.
#[derive(Debug, Clone, Copy)]
pub struct IdwParams<T: Real> {
    /// Distance exponent.
    pub power: T,
    /// Queries closer than this to a perspective return its gain exactly.
    pub zero_dist_epsilon: T,
}

impl<T: Real> Default for IdwParams<T> {
    fn default() -> Self {
        Self {
            power: T::from_c(2.0),
            zero_dist_epsilon: T::from_c(1e-9),
        }
    }
}

/// Inverse-distance interpolation of one distribution's gains at `query`.
pub fn idw_single<T: Real>(
    entry: &[PerspectiveGain<T>],
    query: &Point3<T>,
    params: &IdwParams<T>,
) -> T {
    debug_assert!(!entry.is_empty(), "idw over an empty distribution");
    // Nearest zero-distance perspective wins exactly; the weight is singular there.
    let mut nearest: Option<(T, T)> = None;
    for g in entry {
        let d = (query - g.origin).norm();
        if d < params.zero_dist_epsilon {
            match nearest {
                Some((dn, _)) if dn <= d => {}
                _ => nearest = Some((d, g.gain)),
            }
        }
    }
    if let Some((_, gain)) = nearest {
        return gain;
    }
    let mut num = T::zero();
    let mut den = T::zero();
    for g in entry {
        let d = (query - g.origin).norm();
        let w = d.powf(-params.power);
        num += g.gain * w;
        den += w;
    }
    num / den
}

/// Interpolated gain over the whole buffer: each entry's inverse-distance
/// value weighted by the reciprocal of its distance from the newest entry
/// (the newest has weight 1, the one before 1/2, and so on). The weights are
/// intentionally not normalized; pass `normalize = true` to
/// [`gain_at_with`] to divide by their sum.
pub fn gain_at<T: Real>(
    buffer: &DistributionBuffer<T>,
    query: &Point3<T>,
    params: &IdwParams<T>,
) -> Result<T> {
    gain_at_with(buffer, query, params, false)
}

pub fn gain_at_with<T: Real>(
    buffer: &DistributionBuffer<T>,
    query: &Point3<T>,
    params: &IdwParams<T>,
    normalize: bool,
) -> Result<T> {
    if buffer.is_empty() {
        return Err(Error::NoDistribution);
    }
    let present = buffer.len();
    let mut sum = T::zero();
    let mut weight_sum = T::zero();
    for (i, entry) in buffer.entries().enumerate() {
        let w = T::one() / T::from_usize(present - i).unwrap();
        sum += w * idw_single(entry, query, params);
        weight_sum += w;
    }
    if normalize {
        Ok(sum / weight_sum)
    } else {
        Ok(sum)
    }
}

/// Camera pose reduced to what the gain terms need: position and boresight.
#[derive(Debug, Clone, Copy)]
pub struct CameraPose<T: Real> {
    pub position: Point3<T>,
    pub optical_axis: UnitVector3<T>,
}

/// Cosine alignment of the camera axis with the direction toward the point
/// of interest, zeroed outside the cone of half-angle `min(fov_h, fov_v)/2`.
/// Returns 1 exactly for perfect alignment.
pub fn orientation_factor<T: Real>(
    pose: &CameraPose<T>,
    poi: &Point3<T>,
    cam: &CameraModel<T>,
) -> Result<T> {
    let cutoff = cam.fov_h.min(cam.fov_v) * T::from_c(0.5);
    orientation_factor_with_cutoff(pose, poi, cutoff)
}

/// Same as [`orientation_factor`] with an explicit cone half-angle.
pub fn orientation_factor_with_cutoff<T: Real>(
    pose: &CameraPose<T>,
    poi: &Point3<T>,
    cutoff: T,
) -> Result<T> {
    let to_poi = poi - pose.position;
    let dist = to_poi.norm();
    if dist < T::from_c(1e-9) {
        return Err(Error::UndefinedOrientation);
    }
    let ideal = to_poi / dist;
    let cos_angle = pose.optical_axis.dot(&ideal).min(T::one()).max(-T::one());
    if cos_angle >= cutoff.cos() {
        Ok(cos_angle)
    } else {
        Ok(T::zero())
    }
}

/// Mean over the buffered distributions of each distribution's mean
/// perspective gain; the proxy for information still to be gathered.
pub fn remaining_ig<T: Real>(buffer: &DistributionBuffer<T>) -> Result<T> {
    if buffer.is_empty() {
        return Err(Error::NoDistribution);
    }
    let mut total = T::zero();
    for entry in buffer.entries() {
        let mean = entry.iter().map(|g| g.gain).fold(T::zero(), |a, b| a + b)
            / T::from_usize(entry.len()).unwrap();
        total += mean;
    }
    Ok(total / T::from_usize(buffer.len()).unwrap())
}
