//! Fixed-step history of a vector signal over a sliding window.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Snap tolerance, in units of the grid step, for matching times to grid points.
const GRID_SNAP: f64 = 1e-9;

/// Trapezoid nodes and weights on `[max(lo, 0), hi]` for the uniform grid
/// `k * dt`. Interior nodes are grid points; the end points are added as
/// extra nodes when they fall between grid points, so partial segments at
/// either end are integrated exactly for piecewise-linear data.
pub fn trapezoid_nodes(lo: f64, hi: f64, dt: f64) -> Vec<(f64, f64)> {
    let a = lo.max(0.0);
    if hi <= a {
        return Vec::new();
    }
    let mut xs = vec![a];
    let first = (a / dt + GRID_SNAP).floor() as i64 + 1;
    let last = (hi / dt - GRID_SNAP).ceil() as i64 - 1;
    for k in first..=last {
        xs.push(k as f64 * dt);
    }
    let tail = *xs.last().unwrap();
    if hi - tail > GRID_SNAP * dt {
        xs.push(hi);
    } else {
        *xs.last_mut().unwrap() = hi;
    }
    let n = xs.len();
    if n == 1 {
        return Vec::new();
    }
    (0..n)
        .map(|j| {
            let left = if j > 0 { xs[j] - xs[j - 1] } else { 0.0 };
            let right = if j + 1 < n { xs[j + 1] - xs[j] } else { 0.0 };
            (xs[j], 0.5 * (left + right))
        })
        .collect()
}

/// Ring of samples at times `k * dt`, `k = 0, 1, ...`, keeping enough of the
/// past to look up any time in `[t_latest - span, t_latest]`.
///
/// Values at negative times are exactly zero.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    dt: f64,
    span: f64,
    dim: usize,
    capacity: usize,
    first_index: usize,
    samples: VecDeque<CVec>,
}

impl DelayBuffer {
    pub fn new(dt: f64, span: f64, dim: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("buffer step must be positive (got {dt})")));
        }
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidParameter(format!("buffer span must be positive (got {span})")));
        }
        let capacity = (span / dt).ceil() as usize + 2;
        Ok(Self {
            dt,
            span,
            dim,
            capacity,
            first_index: 0,
            samples: VecDeque::with_capacity(capacity),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn span(&self) -> f64 {
        self.span
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn capacity(&self) -> usize {
        self.capacity
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn earliest_time(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.first_index as f64 * self.dt)
    }

    pub fn latest_time(&self) -> Option<f64> {
        (!self.is_empty()).then(|| (self.first_index + self.samples.len() - 1) as f64 * self.dt)
    }

    /// Appends the sample for the next grid time and returns that time.
    pub fn push(&mut self, value: CVec) -> Result<f64> {
        if value.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {}-vectors, got length {}",
                self.dim,
                value.len()
            )));
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
            self.first_index += 1;
        }
        self.samples.push_back(value);
        Ok(self.latest_time().unwrap())
    }

    /// Replaces the most recent sample.
    pub fn set_latest(&mut self, value: CVec) -> Result<()> {
        if value.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {}-vectors, got length {}",
                self.dim,
                value.len()
            )));
        }
        match self.samples.back_mut() {
            Some(last) => {
                *last = value;
                Ok(())
            }
            None => Err(Error::InvalidArgument("buffer is empty".into())),
        }
    }

    /// Linearly interpolated value at time `t`.
    pub fn at(&self, t: f64) -> Result<CVec> {
        if t < 0.0 {
            return Ok(CVec::zeros(self.dim));
        }
        let (Some(earliest), Some(latest)) = (self.earliest_time(), self.latest_time()) else {
            return Err(Error::HistoryUnderflow { requested: t, available: f64::NAN });
        };
        let s = t / self.dt;
        let first = self.first_index as f64;
        let last = (self.first_index + self.samples.len() - 1) as f64;
        if s < first - GRID_SNAP {
            return Err(Error::HistoryUnderflow { requested: t, available: earliest });
        }
        if s > last + GRID_SNAP {
            return Err(Error::InvalidArgument(format!(
                "requested t = {t} beyond latest sample at {latest}"
            )));
        }
        let s = s.clamp(first, last);
        let i = s.floor();
        let frac = s - i;
        let idx = i as usize - self.first_index;
        if frac < GRID_SNAP || idx + 1 == self.samples.len() {
            return Ok(self.samples[idx].clone());
        }
        if 1.0 - frac < GRID_SNAP {
            return Ok(self.samples[idx + 1].clone());
        }
        Ok(&self.samples[idx] * crate::linalg::c(1.0 - frac) + &self.samples[idx + 1] * crate::linalg::c(frac))
    }

    /// Trapezoid quadrature nodes on `[max(lo, 0), hi]` with the interpolated
    /// sample at each node.
    pub fn quadrature(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64, CVec)>> {
        trapezoid_nodes(lo, hi, self.dt)
            .into_iter()
            .map(|(s, w)| self.at(s).map(|v| (s, w, v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_vector};

    fn filled(dt: f64, span: f64, n: usize, f: impl Fn(f64) -> f64) -> DelayBuffer {
        let mut b = DelayBuffer::new(dt, span, 1).unwrap();
        for k in 0..n {
            b.push(real_vector(&[f(k as f64 * dt)])).unwrap();
        }
        b
    }

    #[test]
    fn capacity_and_eviction() {
        let b = filled(0.01, 0.1, 50, |t| t);
        assert_eq!(b.capacity(), 12);
        assert_eq!(b.len(), 12);
        assert!((b.latest_time().unwrap() - 0.49).abs() < 1e-12);
        assert!((b.at(0.49 - 0.1).unwrap()[0].re - 0.39).abs() < 1e-12);
        assert!(matches!(b.at(0.2), Err(Error::HistoryUnderflow { .. })));
        assert!(b.at(0.5).is_err());
    }

    #[test]
    fn zero_before_origin_and_interpolation() {
        let b = filled(0.1, 1.0, 5, |t| 1.0 + 2.0 * t);
        assert_eq!(b.at(-0.05).unwrap()[0], c(0.0));
        assert!((b.at(0.25).unwrap()[0].re - 1.5).abs() < 1e-12);
        assert!((b.at(0.4).unwrap()[0].re - 1.8).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_linear_data_with_fractional_ends() {
        let b = filled(0.1, 1.0, 11, |t| 3.0 - t);
        let nodes = b.quadrature(0.234, 0.871).unwrap();
        let integral: f64 = nodes.iter().map(|(_, w, v)| w * v[0].re).sum();
        let exact = |t: f64| 3.0 * t - 0.5 * t * t;
        assert!((integral - (exact(0.871) - exact(0.234))).abs() < 1e-13);
        let total: f64 = nodes.iter().map(|(_, w, _)| w).sum();
        assert!((total - (0.871 - 0.234)).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_clips_at_origin() {
        let nodes = trapezoid_nodes(-0.3, 0.2, 0.1);
        assert_eq!(nodes.len(), 3);
        assert!((nodes[0].0).abs() < 1e-15);
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((total - 0.2).abs() < 1e-15);
        assert!(trapezoid_nodes(-0.3, 0.0, 0.1).is_empty());
    }

    #[test]
    fn dimension_is_checked() {
        let mut b = DelayBuffer::new(0.1, 1.0, 2).unwrap();
        assert!(b.push(real_vector(&[1.0])).is_err());
        assert!(DelayBuffer::new(0.0, 1.0, 1).is_err());
    }
}
