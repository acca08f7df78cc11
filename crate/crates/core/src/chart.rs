//! Coordinate boxes and the points sampled inside them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};

/// Base finite-difference step as a fraction of each coordinate's width.
pub const STEP_FRACTION: f64 = 1e-2;
/// Interior margin in units of the base step.
pub const MARGIN_STEPS: f64 = 5.0;

/// An open box in R^n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartDomain {
    label: String,
    bounds: Vec<(f64, f64)>,
}

impl ChartDomain {
    pub fn new(label: impl Into<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() < 2 {
            return Err(LabError::InvalidDomain(format!(
                "dimension {} < 2",
                bounds.len()
            )));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(LabError::InvalidDomain(format!(
                    "coordinate {i} has interval ({lo}, {hi})"
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            bounds,
        })
    }

    /// The cube `(-half_width, half_width)^dim`.
    pub fn cube(label: impl Into<String>, dim: usize, half_width: f64) -> Result<Self> {
        Self::new(label, vec![(-half_width, half_width); dim])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Finite-difference base step along `axis`.
    pub fn step(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        STEP_FRACTION * (hi - lo)
    }

    pub fn margin(&self, axis: usize) -> f64 {
        MARGIN_STEPS * self.step(axis)
    }

    /// True when `p` sits inside the box with the stencil margin to spare.
    pub fn contains_with_margin(&self, p: &ChartPoint) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(&self.bounds)
                .enumerate()
                .all(|(axis, (&x, &(lo, hi)))| {
                    let m = self.margin(axis);
                    x.is_finite() && x >= lo + m && x <= hi - m
                })
    }

    pub fn check_interior(&self, p: &ChartPoint) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(LabError::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        if self.contains_with_margin(p) {
            Ok(())
        } else {
            Err(LabError::StencilOutOfDomain {
                point: p.coords().to_vec(),
            })
        }
    }

    /// Seeded uniform samples from the margin-shrunk box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let coords = self
                    .bounds
                    .iter()
                    .enumerate()
                    .map(|(axis, &(lo, hi))| {
                        let m = self.margin(axis);
                        rng.random_range((lo + m)..=(hi - m))
                    })
                    .collect();
                ChartPoint::new(coords)
            })
            .collect()
    }
}

/// Coordinates of a point in a chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for ChartPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for ChartPoint {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(ChartDomain::new("line", vec![(0.0, 1.0)]).is_err());
        assert!(ChartDomain::new("flat", vec![(0.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(ChartDomain::new("nan", vec![(0.0, 1.0), (0.0, f64::NAN)]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = ChartDomain::cube("unit", 3, 0.5).unwrap();
        assert_eq!(d.sample_points(10, 7), d.sample_points(10, 7));
        assert_ne!(d.sample_points(10, 7), d.sample_points(10, 8));
    }

    #[test]
    fn samples_respect_margin() {
        let d = ChartDomain::new("box", vec![(-1.0, 3.0), (0.5, 0.75), (10.0, 20.0)]).unwrap();
        for p in d.sample_points(100, 99) {
            d.check_interior(&p).unwrap();
        }
    }

    #[test]
    fn sample_mean_is_centered() {
        let d = ChartDomain::new("u", vec![(0.0, 1.0); 3]).unwrap();
        let pts = d.sample_points(1000, 1);
        for axis in 0..3 {
            let mean = pts.iter().map(|p| p.coords()[axis]).sum::<f64>() / 1000.0;
            assert!((mean - 0.5).abs() < 0.05, "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn boundary_points_are_rejected() {
        let d = ChartDomain::cube("c", 2, 1.0).unwrap();
        let err = d.check_interior(&ChartPoint::from([0.95, 0.0])).unwrap_err();
        assert!(matches!(err, LabError::StencilOutOfDomain { .. }));
        assert!(matches!(
            d.check_interior(&ChartPoint::from([0.0, 0.0, 0.0])),
            Err(LabError::DimensionMismatch { .. })
        ));
    }
}
