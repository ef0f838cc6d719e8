//! Signed-hat families: sums of disjoint cones `sigma(q) h(theta - q)` over a
//! regular grid, with one grid point carrying a biased sign.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Loss, LossDistribution, LossSample};
use crate::error::{config_err, Result};
use crate::math;

/// Hat of radius `r`: `r - |theta|` inside the ball, zero outside.
#[inline]
pub fn hat_function(theta: &[f64], r: f64) -> f64 {
    (r - math::norm(theta)).max(0.0)
}

/// Regular product grid with `side` points per axis and hats of half the spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct HatGrid {
    d: usize,
    side: usize,
    origin: f64,
    spacing: f64,
}

impl HatGrid {
    /// Grid of `mB` points with edge `2 / (mB)^{1/d}` covering `[-1, 1]^d`.
    ///
    /// Requires `(mB)^{1/d}` to be an integer.
    pub fn lower_bound(mb: u64, d: usize) -> Result<Self> {
        if d == 0 || mb == 0 {
            return Err(config_err!("grid needs d >= 1 and mB >= 1"));
        }
        let side = math::round(math::powf(mb as f64, 1.0 / d as f64)) as u64;
        let exact = side.checked_pow(d as u32).is_some_and(|v| v == mb);
        if !exact {
            return Err(config_err!("(mB)^(1/d) is not an integer for mB = {mb}, d = {d}"));
        }
        let side = side as usize;
        Ok(HatGrid {
            d,
            side,
            origin: -1.0 + 1.0 / side as f64,
            spacing: 2.0 / side as f64,
        })
    }

    /// The nine points `{-1, 0, 1}^2` with hats of radius 1/2.
    pub fn nine_point() -> Self {
        HatGrid {
            d: 2,
            side: 3,
            origin: -1.0,
            spacing: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Hat radius (half the grid spacing).
    pub fn radius(&self) -> f64 {
        self.spacing / 2.0
    }

    /// Coordinates of point `q` (first axis most significant).
    pub fn point(&self, q: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.d];
        let mut k = q;
        for slot in out.iter_mut().rev() {
            *slot = self.origin + (k % self.side) as f64 * self.spacing;
            k /= self.side;
        }
        out
    }

    /// Index of the grid point nearest to `theta`.
    pub fn nearest(&self, theta: &[f64]) -> usize {
        theta.iter().fold(0usize, |acc, &x| {
            let j = math::round((x - self.origin) / self.spacing);
            let j = j.clamp(0.0, (self.side - 1) as f64) as usize;
            acc * self.side + j
        })
    }
}

/// Sign assignment `sigma: grid -> {-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignFunction {
    signs: Vec<i8>,
}

impl SignFunction {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(config_err!("signs must be +1 or -1"));
        }
        Ok(SignFunction { signs })
    }

    #[inline]
    pub fn get(&self, q: usize) -> i8 {
        self.signs[q]
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

/// `f_sigma(theta) = sum_q sigma(q) h(theta - q)`, evaluated at the nearest grid point.
///
/// The hats have disjoint supports, so only the nearest point can contribute.
pub fn f_sigma(sigma: &SignFunction, grid: &HatGrid, theta: &[f64]) -> f64 {
    let q = grid.nearest(theta);
    let c = grid.point(q);
    let r = grid.radius();
    let dist = math::dist(theta, &c);
    if dist >= r {
        0.0
    } else {
        sigma.get(q) as f64 * (r - dist)
    }
}

/// One sampled signed-hat function.
#[derive(Debug, Clone)]
pub struct SignedHats {
    grid: Arc<HatGrid>,
    sigma: SignFunction,
}

impl SignedHats {
    pub fn new(grid: Arc<HatGrid>, sigma: SignFunction) -> Result<Self> {
        if sigma.len() != grid.len() {
            return Err(config_err!(
                "sign function has {} entries for a grid of {}",
                sigma.len(),
                grid.len()
            ));
        }
        Ok(SignedHats { grid, sigma })
    }

    pub fn sigma(&self) -> &SignFunction {
        &self.sigma
    }

    pub fn grid(&self) -> &HatGrid {
        &self.grid
    }
}

impl Loss for SignedHats {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn eval(&self, theta: &[f64]) -> f64 {
        f_sigma(&self.sigma, &self.grid, theta)
    }
}

/// Distribution over signed-hat functions: fair signs everywhere except at
/// `target`, whose sign is `+1` with probability `1/2 - coef/2`.
///
/// The expected loss is `-coef * h(theta - target)`, minimized at `target`.
#[derive(Debug, Clone)]
pub struct HatGridFamily {
    grid: Arc<HatGrid>,
    target: usize,
    coef: f64,
    name: &'static str,
}

impl HatGridFamily {
    /// Lower-bound family on the `mB`-point grid with coefficient `1 / (C sqrt(n) ln(mB))`.
    pub fn lower_bound(target: usize, c: f64, m: u64, n: u64, bits: u64, d: usize) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(config_err!("constant C must be at least 1, got {c}"));
        }
        let mb = m.checked_mul(bits).ok_or_else(|| config_err!("mB overflows"))?;
        if mb < 2 {
            return Err(config_err!("mB must be at least 2"));
        }
        let coef = 1.0 / (c * math::sqrt(n as f64) * math::ln(mb as f64));
        Self::build(Arc::new(HatGrid::lower_bound(mb, d)?), target, coef, "hat-grid")
    }

    /// Nine-point family with coefficient `1 / (2 sqrt(mn))`.
    pub fn nine_point(target: usize, mn: u64) -> Result<Self> {
        if mn < 4 {
            return Err(config_err!("nine-point family needs mn >= 4, got {mn}"));
        }
        let coef = 1.0 / (2.0 * math::sqrt(mn as f64));
        Self::build(Arc::new(HatGrid::nine_point()), target, coef, "nine-point")
    }

    fn build(grid: Arc<HatGrid>, target: usize, coef: f64, name: &'static str) -> Result<Self> {
        if target >= grid.len() {
            return Err(config_err!("target {target} outside a grid of {}", grid.len()));
        }
        // The biased sign has P(+1) = 1/2 - coef/2.
        if !(coef < 1.0) {
            return Err(config_err!("sign bias {} must be below 1/2", coef / 2.0));
        }
        Ok(HatGridFamily {
            grid,
            target,
            coef,
            name,
        })
    }

    pub fn grid(&self) -> &HatGrid {
        &self.grid
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Magnitude of `E[sigma(target)]`.
    pub fn coef(&self) -> f64 {
        self.coef
    }

    /// Probability that the target's sign is `+1`.
    pub fn target_plus_probability(&self) -> f64 {
        0.5 - self.coef / 2.0
    }

    /// Gap `F(theta) - F(target)` below which `theta` must lie in the target's hat.
    pub fn separation(&self) -> f64 {
        self.coef * self.grid.radius()
    }

    /// Draws a sign function from the family.
    pub fn sample_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> SignFunction {
        let p_plus = self.target_plus_probability();
        let signs = (0..self.grid.len())
            .map(|q| {
                let plus = if q == self.target {
                    rng.random::<f64>() < p_plus
                } else {
                    rng.random::<bool>()
                };
                if plus {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SignFunction { signs }
    }
}

impl LossDistribution for HatGridFamily {
    fn name(&self) -> &'static str {
        self.name
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> LossSample {
        let sigma = self.sample_sigma(rng);
        LossSample::new(SignedHats {
            grid: self.grid.clone(),
            sigma,
        })
    }

    fn expected_loss(&self, theta: &[f64]) -> Option<f64> {
        let p = self.grid.point(self.target);
        let diff: Vec<f64> = theta.iter().zip(&p).map(|(a, b)| a - b).collect();
        Some(-self.coef * hat_function(&diff, self.grid.radius()))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(self.grid.point(self.target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Full sum over every grid point, the defining formula.
    fn f_sigma_full(sigma: &SignFunction, grid: &HatGrid, theta: &[f64]) -> f64 {
        (0..grid.len())
            .map(|q| {
                let c = grid.point(q);
                let diff: Vec<f64> = theta.iter().zip(&c).map(|(a, b)| a - b).collect();
                sigma.get(q) as f64 * hat_function(&diff, grid.radius())
            })
            .sum()
    }

    #[test]
    fn hat_values() {
        let r = 16f64.powf(-0.5);
        assert_eq!(hat_function(&[0.0, 0.0], r), 0.25);
        assert_eq!(hat_function(&[0.3, 0.0], 0.25), 0.0);
        assert!((hat_function(&[0.06, 0.08], 0.25) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn grid_construction() {
        let g = HatGrid::lower_bound(16, 2).unwrap();
        assert_eq!(g.side(), 4);
        assert_eq!(g.radius(), 0.25);
        assert_eq!(g.point(0), vec![-0.75, -0.75]);
        assert_eq!(g.point(15), vec![0.75, 0.75]);
        assert!(HatGrid::lower_bound(15, 2).is_err());
        assert!(HatGrid::lower_bound(27, 3).is_ok());
        let g = HatGrid::nine_point();
        assert_eq!(g.point(4), vec![0.0, 0.0]);
        assert_eq!(g.radius(), 0.5);
    }

    #[test]
    fn f_sigma_examples() {
        let g = HatGrid::lower_bound(16, 2).unwrap();
        let mut signs = vec![1i8; 16];
        signs[5] = -1;
        let s = SignFunction::new(signs).unwrap();
        assert_eq!(f_sigma(&s, &g, &g.point(0)), 0.25);
        // boundary between points 0 and 1 on the second axis
        assert_eq!(f_sigma(&s, &g, &[-0.75, -0.5]), 0.0);
        let q = g.point(5);
        let theta = [q[0] + 0.06, q[1] - 0.08];
        assert!((f_sigma(&s, &g, &theta) + 0.15).abs() < 1e-15);
        assert!(SignFunction::new(vec![0, 1]).is_err());
    }

    #[test]
    fn nearest_shortcut_matches_full_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (mb, d) in [(16u64, 2usize), (64, 3), (256, 2), (8, 1), (256, 4)] {
            let g = HatGrid::lower_bound(mb, d).unwrap();
            for _ in 0..200 {
                let s = SignFunction {
                    signs: (0..g.len())
                        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                        .collect(),
                };
                let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let a = f_sigma(&s, &g, &theta);
                let b = f_sigma_full(&s, &g, &theta);
                assert!((a - b).abs() < 1e-14, "mb={mb} d={d}");
            }
        }
    }

    #[test]
    fn lower_bound_family_closed_form() {
        let (m, n, b, d, c) = (4u64, 9u64, 16u64, 2usize, 1.0);
        let fam = HatGridFamily::lower_bound(10, c, m, n, b, d).unwrap();
        let p = fam.minimizer().unwrap();
        let want = -1.0 / (c * 3.0 * 8.0 * (64f64).ln());
        assert!((fam.expected_loss(&p).unwrap() - want).abs() < 1e-15);
        assert_eq!(fam.expected_loss(&[p[0] + 0.125, p[1]]), Some(0.0));
        assert!(HatGridFamily::lower_bound(0, 0.5, m, n, b, d).is_err());
        // C sqrt(n) ln(mB) <= 1 makes the target sign bias reach 1/2
        assert!(HatGridFamily::lower_bound(0, 1.0, 2, 1, 1, 1).is_err());
    }

    #[test]
    fn fair_signs_away_from_target() {
        let fam = HatGridFamily::lower_bound(3, 1.0, 4, 4, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let mut sums = vec![0i64; fam.grid().len()];
        for _ in 0..draws {
            let s = fam.sample_sigma(&mut rng);
            for (q, acc) in sums.iter_mut().enumerate() {
                *acc += s.get(q) as i64;
            }
        }
        let se = 1.0 / (draws as f64).sqrt();
        for (q, s) in sums.iter().enumerate() {
            let mean = *s as f64 / draws as f64;
            let want = if q == 3 { -fam.coef() } else { 0.0 };
            assert!((mean - want).abs() < 4.0 * se, "q={q} mean={mean}");
        }
    }

    #[test]
    fn nine_point_family_values() {
        let mn = 400u64;
        for target in 0..9 {
            let fam = HatGridFamily::nine_point(target, mn).unwrap();
            let p = fam.minimizer().unwrap();
            assert!((fam.expected_loss(&p).unwrap() + 1.0 / (4.0 * 20.0)).abs() < 1e-15);
            assert_eq!(fam.expected_loss(&[p[0] + 0.5, p[1]]).unwrap(), 0.0);
        }
        assert!(HatGridFamily::nine_point(0, 3).is_err());
        assert!(HatGridFamily::nine_point(9, 100).is_err());
    }

    #[test]
    fn nine_point_minimum_at_target() {
        let fam = HatGridFamily::nine_point(7, 100).unwrap();
        let p = fam.minimizer().unwrap();
        let mut best = (f64::INFINITY, vec![0.0, 0.0]);
        for i in 0..=200 {
            for j in 0..=200 {
                let th = [-1.0 + 0.01 * i as f64, -1.0 + 0.01 * j as f64];
                let v = fam.expected_loss(&th).unwrap();
                if v < best.0 {
                    best = (v, th.to_vec());
                }
            }
        }
        assert!(math::dist(&best.1, &p) < 1e-9);
    }

    #[test]
    fn nine_point_monte_carlo_matches_closed_form() {
        let mn = 16u64;
        let fam = HatGridFamily::nine_point(4, mn).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let theta = [0.1, -0.05];
        let vals: Vec<f64> = (0..draws).map(|_| fam.sample(&mut rng).eval(&theta)).collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        let want = fam.expected_loss(&theta).unwrap();
        assert!((mean - want).abs() < 4.0 * se, "mean={mean} want={want}");
    }
}
