//! Time-ordered snapshot stacks and the space-time cylinders evaluated on them.

use crate::error::{Error, Result};
use crate::grid::Ball;

/// Relative tolerance on snapshot spacing.
pub const CADENCE_TOL: f64 = 1e-6;

/// Snapshots aligned with strictly increasing instants at a uniform cadence.
///
/// A steady trajectory holds one snapshot that is valid at every instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    times: Vec<f64>,
    snapshots: Vec<T>,
    steady: bool,
}

impl<T> Trajectory<T> {
    pub fn new(times: Vec<f64>, snapshots: Vec<T>) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::InvalidInput(format!(
                "trajectory needs matching non-empty times and snapshots ({} vs {})",
                times.len(),
                snapshots.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("non-finite snapshot time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("snapshot times must increase strictly".into()));
        }
        if times.len() > 2 {
            let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > CADENCE_TOL * h) {
                return Err(Error::InvalidInput("snapshot cadence is not uniform".into()));
            }
        }
        Ok(Self {
            times,
            snapshots,
            steady: false,
        })
    }

    /// Time-independent data, valid on `(-inf, +inf)`.
    pub fn steady(snapshot: T) -> Self {
        Self {
            times: vec![0.0],
            snapshots: vec![snapshot],
            steady: true,
        }
    }

    pub fn is_steady(&self) -> bool {
        self.steady
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[T] {
        &self.snapshots
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn last(&self) -> &T {
        &self.snapshots[self.snapshots.len() - 1]
    }

    /// Spacing between consecutive snapshots; `None` for one snapshot.
    pub fn cadence(&self) -> Option<f64> {
        (self.len() > 1).then(|| (self.last_time() - self.first_time()) / (self.len() - 1) as f64)
    }

    fn slack(&self) -> f64 {
        1e-9 * self.cadence().unwrap_or(1.0).max(self.last_time().abs() * 1e-6)
    }

    /// Errors unless `[from, to]` lies inside the recorded span.
    pub fn covers(&self, from: f64, to: f64) -> Result<()> {
        if self.steady {
            return Ok(());
        }
        let eps = self.slack();
        if from < self.first_time() - eps || to > self.last_time() + eps {
            return Err(Error::Coverage {
                needed_from: from,
                needed_to: to,
                available_from: self.first_time(),
                available_to: self.last_time(),
            });
        }
        Ok(())
    }

    /// Indices of snapshots with `from < t <= to`, or all of them when steady.
    pub fn window(&self, from: f64, to: f64) -> Result<Vec<usize>> {
        self.covers(from, to)?;
        if self.steady {
            return Ok(vec![0]);
        }
        let eps = self.slack();
        let idx: Vec<usize> = (0..self.len())
            .filter(|&k| self.times[k] > from + eps && self.times[k] <= to + eps)
            .collect();
        if idx.is_empty() {
            // The window falls strictly between two snapshots: take the later one.
            let k = self.times.partition_point(|&t| t <= to + eps).min(self.len() - 1);
            return Ok(vec![k]);
        }
        Ok(idx)
    }

    /// Weights `w_k` with `∫_from^to f dt ≈ Σ w_k f(t_k)` for the piecewise-linear
    /// interpolant of the snapshots.
    pub fn time_weights(&self, from: f64, to: f64) -> Result<Vec<(usize, f64)>> {
        if !(to > from) {
            return Err(Error::InvalidInput(format!("empty time window [{from}, {to}]")));
        }
        self.covers(from, to)?;
        if self.steady || self.len() == 1 {
            return Ok(vec![(0, to - from)]);
        }
        let a = from.max(self.first_time());
        let b = to.min(self.last_time());
        let mut w = vec![0.0; self.len()];
        for k in 0..self.len() - 1 {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            let lo = a.max(t0);
            let hi = b.min(t1);
            if hi <= lo {
                continue;
            }
            let h = t1 - t0;
            // ∫ (t1 - t)/h and ∫ (t - t0)/h over [lo, hi].
            let s0 = ((t1 - lo).powi(2) - (t1 - hi).powi(2)) / (2.0 * h);
            let s1 = ((hi - t0).powi(2) - (lo - t0).powi(2)) / (2.0 * h);
            w[k] += s0;
            w[k + 1] += s1;
        }
        Ok(w.into_iter().enumerate().filter(|(_, x)| *x > 0.0).collect())
    }

    /// Linear-in-time interpolation weights at instant `t`.
    pub fn sample_weights(&self, t: f64) -> Result<[(usize, f64); 2]> {
        self.covers(t, t)?;
        if self.steady || self.len() == 1 {
            return Ok([(0, 1.0), (0, 0.0)]);
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok([(k - 1, 1.0 - s), (k, s)])
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Trajectory<U> {
        Trajectory {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect(),
            steady: self.steady,
        }
    }

    pub fn try_map<U>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Trajectory<U>> {
        Ok(Trajectory {
            times: self.times.clone(),
            snapshots: self.snapshots.iter().map(f).collect::<Result<_>>()?,
            steady: self.steady,
        })
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<T>) {
        (self.times, self.snapshots)
    }
}

/// `B_R(center) x (t0 - R², t0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicCylinder {
    pub center_r: f64,
    pub center_z: f64,
    pub t0: f64,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn axial(center_z: f64, t0: f64, radius: f64) -> Result<Self> {
        let c = Self {
            center_r: 0.0,
            center_z,
            t0,
            radius,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "cylinder radius",
                value: self.radius,
            });
        }
        Ok(())
    }

    pub fn ball(&self) -> Ball {
        Ball {
            center_r: self.center_r,
            center_z: self.center_z,
            radius: self.radius,
        }
    }

    pub fn t_from(&self) -> f64 {
        self.t0 - self.radius * self.radius
    }

    /// Same anchor, radius multiplied by `f`.
    pub fn shrunk(&self, f: f64) -> Self {
        Self {
            radius: self.radius * f,
            ..*self
        }
    }

    /// Space-time volume `|B_R| R²`.
    pub fn volume(&self) -> f64 {
        self.ball().volume() * self.radius * self.radius
    }
}
