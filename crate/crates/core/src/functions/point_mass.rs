//! Deterministic losses and the point-mass distribution on one of them.

use alloc::vec::Vec;

use rand::RngCore;

use super::{Loss, LossDistribution, LossSample};
use crate::error::{config_err, Result};
use crate::math;

/// Wraps a closure as a [`Loss`].
pub struct FnLoss<F> {
    d: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnLoss<F> {
    pub fn new(d: usize, f: F) -> Self {
        FnLoss { d, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Loss for FnLoss<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        (self.f)(theta)
    }
}

/// `|theta - c| - |c|`: a cone with apex `c`, shifted so the origin maps to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    center: Vec<f64>,
    offset: f64,
}

impl Cone {
    pub fn new(center: Vec<f64>) -> Self {
        let offset = math::norm(&center);
        Cone { center, offset }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl Loss for Cone {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        math::dist(theta, &self.center) - self.offset
    }
}

/// Lower envelope of cones, `min_k (|theta - c_k| - depth_k)`, shifted to vanish at the origin.
///
/// Non-convex whenever two wells are present; the global minimum sits at the deepest well.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWell {
    centers: Vec<Vec<f64>>,
    depths: Vec<f64>,
    offset: f64,
}

impl MultiWell {
    pub fn new(centers: Vec<Vec<f64>>, depths: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || centers.len() != depths.len() {
            return Err(config_err!("multi-well needs one depth per center"));
        }
        let d = centers[0].len();
        if d == 0 || centers.iter().any(|c| c.len() != d) {
            return Err(config_err!("multi-well centers must share a positive dimension"));
        }
        let mut w = MultiWell {
            centers,
            depths,
            offset: 0.0,
        };
        w.offset = w.raw(&alloc::vec![0.0; d]);
        Ok(w)
    }

    fn raw(&self, theta: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.depths)
            .map(|(c, depth)| math::dist(theta, c) - depth)
            .fold(f64::INFINITY, f64::min)
    }

    /// Center of the deepest well (first on ties).
    pub fn deepest(&self) -> &[f64] {
        let mut best = 0;
        for (k, depth) in self.depths.iter().enumerate() {
            if *depth > self.depths[best] {
                best = k;
            }
        }
        &self.centers[best]
    }
}

impl Loss for MultiWell {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        self.raw(theta) - self.offset
    }
}

/// Every draw returns the same function, so `F = f`.
pub struct PointMass {
    f: LossSample,
    minimizer: Option<Vec<f64>>,
    name: &'static str,
}

impl PointMass {
    pub fn new(f: LossSample, minimizer: Option<Vec<f64>>, name: &'static str) -> Self {
        PointMass { f, minimizer, name }
    }

    pub fn cone(center: Vec<f64>) -> Self {
        let c = center.clone();
        PointMass::new(LossSample::new(Cone::new(center)), Some(c), "cone")
    }

    pub fn multi_well(w: MultiWell) -> Self {
        let c = w.deepest().to_vec();
        PointMass::new(LossSample::new(w), Some(c), "wells")
    }

    pub fn function(&self) -> &LossSample {
        &self.f
    }
}

impl LossDistribution for PointMass {
    fn name(&self) -> &'static str {
        self.name
    }

    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> LossSample {
        self.f.clone()
    }

    fn expected_loss(&self, theta: &[f64]) -> Option<f64> {
        Some(self.f.eval(theta))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        self.minimizer.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cone_vanishes_at_origin() {
        let c = Cone::new(vec![0.3, -0.4]);
        assert_eq!(c.eval(&[0.0, 0.0]), 0.0);
        assert!((c.eval(&[0.3, -0.4]) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn wells_minimum_at_deepest() {
        let w = MultiWell::new(vec![vec![-0.5, 0.5], vec![0.6, -0.2]], vec![0.1, 0.3]).unwrap();
        assert_eq!(w.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(w.deepest(), &[0.6, -0.2]);
        let pm = PointMass::multi_well(w.clone());
        let best = pm.min_value().unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let th = [-1.0 + 0.05 * i as f64, -1.0 + 0.05 * j as f64];
                assert!(w.eval(&th) >= best - 1e-12);
            }
        }
        assert!(MultiWell::new(vec![vec![0.0]], vec![]).is_err());
    }
}
