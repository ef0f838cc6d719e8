//! Two-layer ReLU regression, `y = w^T ReLU(A x) + noise` with `w = [1, -1]`.
//!
//! The search variable `theta` in `[-1, 1]^4` maps to `A = 2 * theta` (row-major),
//! covering the parameter box `[-2, 2]^4`. Each sample's loss is the squared
//! residual divided by a family-wide constant that makes it 1-Lipschitz in `theta`.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Loss, LossDistribution, LossSample};
use crate::error::{config_err, Result};
use crate::math;

/// Fixed output layer `[1, -1]`.
pub const RELU_OUTPUT_WEIGHTS: [f64; 2] = [1.0, -1.0];

const X_CLIP: f64 = 3.0;
const PARAM_SCALE: f64 = 2.0;
const SCALE_PAIRS: usize = 100_000;
const SCALE_SAFETY: f64 = 2.0;
const SCALE_SEED: u64 = 0x5eed_1a7e_0000_0001;
const FD_STEP: f64 = 1e-4;

/// `w^T ReLU(A x)` for a row-major 2x2 matrix `A`.
#[inline]
pub fn relu_forward(a: &[f64; 4], x: &[f64; 2]) -> f64 {
    let h0 = (a[0] * x[0] + a[1] * x[1]).max(0.0);
    let h1 = (a[2] * x[0] + a[3] * x[1]).max(0.0);
    RELU_OUTPUT_WEIGHTS[0] * h0 + RELU_OUTPUT_WEIGHTS[1] * h1
}

fn to_params(theta: &[f64]) -> [f64; 4] {
    [
        PARAM_SCALE * theta[0],
        PARAM_SCALE * theta[1],
        PARAM_SCALE * theta[2],
        PARAM_SCALE * theta[3],
    ]
}

/// One observation `(x, y)` and its scaled squared-error loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluSample {
    pub x: [f64; 2],
    pub y: f64,
    scale: f64,
}

impl ReluSample {
    pub fn new(x: [f64; 2], y: f64, scale: f64) -> Self {
        ReluSample { x, y, scale }
    }

    /// Unscaled squared residual.
    pub fn raw_loss(&self, theta: &[f64]) -> f64 {
        let r = self.y - relu_forward(&to_params(theta), &self.x);
        r * r
    }
}

impl Loss for ReluSample {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        self.raw_loss(theta) / self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluFamily {
    truth: [f64; 4],
    noise_var: f64,
    noise: Normal<f64>,
    scale: f64,
}

impl ReluFamily {
    /// `truth` is the first-layer matrix (row-major) in the parameter box `[-2, 2]^4`.
    pub fn new(truth: [f64; 4], noise_var: f64) -> Result<Self> {
        if truth.iter().any(|v| !(v.abs() <= PARAM_SCALE)) {
            return Err(config_err!("ReLU parameters must lie in [-2, 2]"));
        }
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(config_err!("noise variance must be non-negative, got {noise_var}"));
        }
        let noise =
            Normal::new(0.0, math::sqrt(noise_var)).map_err(|_| config_err!("invalid noise variance {noise_var}"))?;
        let mut fam = ReluFamily {
            truth,
            noise_var,
            noise,
            scale: 1.0,
        };
        fam.scale = fam.estimate_scale();
        Ok(fam)
    }

    /// Draws the true parameters uniformly from `[-2, 2]^4`.
    pub fn random<R: Rng + ?Sized>(noise_var: f64, rng: &mut R) -> Result<Self> {
        let mut truth = [0.0; 4];
        for v in truth.iter_mut() {
            *v = rng.random_range(-PARAM_SCALE..=PARAM_SCALE);
        }
        Self::new(truth, noise_var)
    }

    pub fn truth(&self) -> [f64; 4] {
        self.truth
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Lipschitz normalization constant applied to every sample.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ReluSample {
        let mut x = [0.0; 2];
        for v in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z.clamp(-X_CLIP, X_CLIP);
        }
        let y = relu_forward(&self.truth, &x) + self.noise.sample(rng);
        ReluSample {
            x,
            y,
            scale: self.scale,
        }
    }

    /// Largest finite-difference slope of the raw loss over random samples,
    /// points and directions, times a safety factor.
    fn estimate_scale(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SCALE_SEED);
        let mut max_slope: f64 = 0.0;
        for _ in 0..SCALE_PAIRS {
            let s = self.draw(&mut rng);
            let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let mut dir: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
            let len = math::norm(&dir);
            dir.iter_mut().for_each(|v| *v /= len);
            let moved: Vec<f64> = theta.iter().zip(&dir).map(|(a, b)| a + FD_STEP * b).collect();
            let slope = math::abs(s.raw_loss(&moved) - s.raw_loss(&theta)) / FD_STEP;
            max_slope = max_slope.max(slope);
        }
        SCALE_SAFETY * max_slope.max(f64::MIN_POSITIVE)
    }
}

impl LossDistribution for ReluFamily {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn dim(&self) -> usize {
        4
    }

    fn sample(&self, rng: &mut dyn RngCore) -> LossSample {
        LossSample::new(self.draw(rng))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.truth.iter().map(|v| v / PARAM_SCALE).collect())
    }

    /// At the true parameters the residual is pure noise.
    fn min_value(&self) -> Option<f64> {
        Some(self.noise_var / self.scale)
    }
}
