//! Dyadic grid hierarchy on `[-1, 1]^d`.
//!
//! Level `l` partitions the cube into `2^{ld}` sub-cubes of edge `2^{1-l}`;
//! a [`GridCoord`] names the center of one of them by its integer index.
//! Points are stored as integers so equality and ordering are exact.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::math;

/// Problem size: machines, samples per machine, bits per machine, dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    pub m: u64,
    pub n: u64,
    pub bits: u64,
    pub d: usize,
}

impl ProblemDims {
    /// Validates and builds dimensions.
    pub fn new(m: u64, n: u64, bits: u64, d: usize) -> Result<Self> {
        let dims = ProblemDims { m, n, bits, d };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(config_err!("m must be at least 1"));
        }
        if self.n < 2 {
            return Err(config_err!("n must be at least 2, got {}", self.n));
        }
        if self.d < 1 {
            return Err(config_err!("dimension must be at least 1"));
        }
        if self.mn() < 3.0 {
            return Err(config_err!("m*n must be at least 3, got {}", self.mn()));
        }
        let need = self.d as f64 * self.log2_mn();
        if (self.bits as f64) + 1e-9 < need {
            return Err(config_err!(
                "bit budget B = {} is below d*log2(mn) = {:.4}",
                self.bits,
                need
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn mn(&self) -> f64 {
        self.m as f64 * self.n as f64
    }

    #[inline]
    pub fn ln_mn(&self) -> f64 {
        math::ln(self.mn())
    }

    #[inline]
    pub fn log2_mn(&self) -> f64 {
        math::log2(self.mn())
    }

    /// Length budget of one sub-signal, `floor(d * log2(mn))` bits.
    pub fn sub_signal_bits(&self) -> u64 {
        math::floor(self.d as f64 * self.log2_mn() + 1e-9) as u64
    }

    /// Number of sub-signals per machine, `floor(B / (d * log2(mn)))`.
    pub fn sub_signal_count(&self) -> usize {
        math::floor(self.bits as f64 / (self.d as f64 * self.log2_mn()) + 1e-9) as usize
    }
}

/// Resolution of the grid hierarchy derived from the problem size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionParams {
    /// Edge scale, at most 1.
    pub delta: f64,
    /// Number of levels below the root.
    pub t: u32,
    /// Target precision `4 * delta * sqrt(d) * ln(mn) / sqrt(n)`.
    pub epsilon: f64,
}

impl ResolutionParams {
    /// Resolution from the problem size, clamping `delta` to 1.
    pub fn from_dims(dims: &ProblemDims) -> Result<Self> {
        dims.validate()?;
        Self::with_delta(dims, raw_delta(dims))
    }

    /// Resolution with an explicit edge scale (values above 1 are clamped).
    pub fn with_delta(dims: &ProblemDims, delta: f64) -> Result<Self> {
        dims.validate()?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(config_err!("delta must be positive and finite, got {delta}"));
        }
        let delta = delta.min(1.0);
        let t = levels_for(delta);
        let epsilon = 4.0 * delta * math::sqrt(dims.d as f64) * dims.ln_mn() / math::sqrt(dims.n as f64);
        Ok(ResolutionParams { delta, t, epsilon })
    }
}

/// Unclamped edge scale `ln(mn) * max(ln(mn) / (mB)^{1/d}, m^{-1/2})`.
pub fn raw_delta(dims: &ProblemDims) -> f64 {
    let ln_mn = dims.ln_mn();
    let mb = dims.m as f64 * dims.bits as f64;
    let a = ln_mn / math::powf(mb, 1.0 / dims.d as f64);
    let b = 1.0 / math::sqrt(dims.m as f64);
    ln_mn * a.max(b)
}

/// `ceil(log2(1/delta))`, with a small tolerance so exact powers of two are not bumped.
fn levels_for(delta: f64) -> u32 {
    if delta >= 1.0 {
        return 0;
    }
    let t = math::ceil(math::log2(1.0 / delta) - 1e-9);
    t.max(0.0) as u32
}

/// Edge-scale computation as a free function.
pub fn compute_delta(dims: &ProblemDims) -> Result<ResolutionParams> {
    ResolutionParams::from_dims(dims)
}

/// Probabilities of levels `1..=t`, proportional to `2^{(d-2) l}`.
///
/// Returns an empty vector for `t = 0`.
pub fn level_distribution(t: u32, d: usize) -> Vec<f64> {
    if t == 0 {
        return Vec::new();
    }
    let exponent = d as i32 - 2;
    // Weights relative to the heaviest level keep the sum in range for large t*d.
    let heaviest = if exponent >= 0 { t as i32 } else { 1 };
    let weights: Vec<f64> = (1..=t as i32).map(|l| math::exp2i(exponent * (l - heaviest))).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// A point of grid level `level`, identified by its integer index vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCoord {
    pub level: u32,
    pub index: Vec<u32>,
}

impl GridCoord {
    pub fn new(level: u32, index: Vec<u32>) -> Result<Self> {
        if level > 31 {
            return Err(config_err!("grid level {level} exceeds 31"));
        }
        let side = 1u64 << level;
        if index.iter().any(|&i| i as u64 >= side) {
            return Err(config_err!("index out of range for level {level}"));
        }
        Ok(GridCoord { level, index })
    }

    /// The single level-0 point at the origin.
    pub fn root(d: usize) -> Self {
        GridCoord {
            level: 0,
            index: vec![0; d],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Coordinate `j` of the center: `-1 + 2^{-l} (2 i_j + 1)`.
    pub fn center_coord(&self, j: usize) -> f64 {
        -1.0 + math::exp2i(-(self.level as i32)) * (2.0 * self.index[j] as f64 + 1.0)
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.center_coord(j)).collect()
    }

    /// Edge of the level's sub-cubes, `2^{1-l}`.
    pub fn edge(&self) -> f64 {
        math::exp2i(1 - self.level as i32)
    }

    pub fn parent(&self) -> Result<GridCoord> {
        if self.level == 0 {
            return Err(Error::NoParent);
        }
        Ok(GridCoord {
            level: self.level - 1,
            index: self.index.iter().map(|i| i / 2).collect(),
        })
    }

    /// The `2^d` points of the next level inside this point's cube.
    pub fn children(&self) -> Vec<GridCoord> {
        let d = self.dim();
        (0..1u64 << d)
            .map(|mask| GridCoord {
                level: self.level + 1,
                index: (0..d).map(|j| 2 * self.index[j] + ((mask >> j) & 1) as u32).collect(),
            })
            .collect()
    }

    /// Axis-aligned sub-cube of this level centered at the point.
    pub fn cube(&self) -> Cell {
        let half = self.edge() / 2.0;
        let c = self.center();
        Cell {
            lo: c.iter().map(|x| x - half).collect(),
            hi: c.iter().map(|x| x + half).collect(),
        }
    }
}

/// Every point of level `level` in dimension `d`, in index-lexicographic order.
pub fn level_points(level: u32, d: usize) -> Vec<GridCoord> {
    let side = 1u64 << level;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut index = vec![0u32; d];
            for slot in index.iter_mut().rev() {
                *slot = (k % side) as u32;
                k /= side;
            }
            GridCoord { level, index }
        })
        .collect()
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cell {
    /// The whole domain `[-1, 1]^d`.
    pub fn domain(d: usize) -> Self {
        Cell {
            lo: vec![-1.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    pub fn contains_strictly(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| *lo < *x && *x < *hi)
    }
}

/// Cube of edge `2 delta` centered at a finest-level point, clipped to the domain.
pub fn cell_bounds(p: &GridCoord, params: &ResolutionParams) -> Result<Cell> {
    if p.level != params.t {
        return Err(Error::WrongLevel {
            expected: params.t,
            actual: p.level,
        });
    }
    let c = p.center();
    Ok(Cell {
        lo: c.iter().map(|x| (x - params.delta).max(-1.0)).collect(),
        hi: c.iter().map(|x| (x + params.delta).min(1.0)).collect(),
    })
}

/// Draws a level from [`level_distribution`], then a uniform point of that level.
///
/// Panics if `t == 0`.
pub fn sample_grid_point<R: Rng + ?Sized>(t: u32, d: usize, rng: &mut R) -> GridCoord {
    assert!(t >= 1, "sampling requires at least one level");
    let probs = level_distribution(t, d);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut level = t;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            level = i as u32 + 1;
            break;
        }
    }
    let side = 1u32 << level;
    let index = (0..d).map(|_| rng.random_range(0..side)).collect();
    GridCoord { level, index }
}
