//! Exhaustive lattice search inside an axis-aligned box.
//!
//! Losses are only assumed Lipschitz, so minimization is brute force over a
//! lattice anchored at the box's nominal center. Along each axis the lattice
//! holds `center + j * s` for `|j| <= K` (with `s <= max_step`) that fall
//! inside the box, plus the box faces themselves.

use alloc::vec;
use alloc::vec::Vec;

use crate::grids::Cell;
use crate::math;

/// Cartesian product of per-axis coordinate lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    axes: Vec<Vec<f64>>,
}

impl Lattice {
    /// Lattice anchored at `center` with half-width `half_width` per axis,
    /// clipped to `bounds`, with per-axis spacing at most `max_step`.
    pub fn anchored(center: &[f64], half_width: f64, bounds: &Cell, max_step: f64) -> Self {
        let axes = center
            .iter()
            .zip(bounds.lo.iter().zip(&bounds.hi))
            .map(|(&c, (&lo, &hi))| axis_points(c, half_width, lo, hi, max_step))
            .collect();
        Lattice { axes }
    }

    /// Lattice over the whole domain `[-1, 1]^d`, anchored at the origin.
    pub fn domain(d: usize, max_step: f64) -> Self {
        Self::anchored(&vec![0.0; d], 1.0, &Cell::domain(d), max_step)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Total number of lattice points (saturating).
    pub fn len(&self) -> usize {
        self.axes.iter().fold(1usize, |acc, a| acc.saturating_mul(a.len()))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest gap between consecutive coordinates on any axis.
    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    /// Visits every point in lexicographic order (first axis most significant).
    pub fn for_each(&self, mut visit: impl FnMut(&[f64])) {
        let d = self.axes.len();
        if self.axes.iter().any(|a| a.is_empty()) {
            return;
        }
        let mut digits = vec![0usize; d];
        let mut point: Vec<f64> = self.axes.iter().map(|a| a[0]).collect();
        loop {
            visit(&point);
            let mut j = d;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                digits[j] += 1;
                if digits[j] < self.axes[j].len() {
                    point[j] = self.axes[j][digits[j]];
                    break;
                }
                digits[j] = 0;
                point[j] = self.axes[j][0];
            }
        }
    }

    /// Minimizer of `f` over the lattice; ties go to the lexicographically smallest point.
    pub fn argmin(&self, mut f: impl FnMut(&[f64]) -> f64) -> (Vec<f64>, f64) {
        let mut best: Option<(Vec<f64>, f64)> = None;
        self.for_each(|p| {
            let v = f(p);
            match &best {
                Some((_, bv)) if !(v < *bv) => {}
                _ => best = Some((p.to_vec(), v)),
            }
        });
        best.expect("lattice is never empty")
    }
}

fn axis_points(center: f64, half_width: f64, lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    let k = if max_step.is_finite() && max_step > 0.0 {
        (math::ceil(half_width / max_step) as i64).max(1)
    } else {
        1
    };
    let s = half_width / k as f64;
    let tol = 1e-12 * half_width.max(1.0);
    let mut pts: Vec<f64> = (-k..=k)
        .map(|j| center + j as f64 * s)
        .filter(|x| *x >= lo - tol && *x <= hi + tol)
        .map(|x| x.clamp(lo, hi))
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b) <= tol);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_includes_center_and_faces() {
        let cell = Cell {
            lo: vec![-0.5],
            hi: vec![0.5],
        };
        let lat = Lattice::anchored(&[0.0], 0.5, &cell, 0.2);
        let a = &lat.axes()[0];
        assert!(a.contains(&0.0));
        assert_eq!(a[0], -0.5);
        assert_eq!(*a.last().unwrap(), 0.5);
        assert!(lat.max_spacing() <= 0.2 + 1e-15);
    }

    #[test]
    fn clipped_axis_keeps_face() {
        // center -0.75 with half-width 0.5 is clipped at -1
        let cell = Cell {
            lo: vec![-1.0],
            hi: vec![-0.25],
        };
        let lat = Lattice::anchored(&[-0.75], 0.5, &cell, 0.3);
        let a = &lat.axes()[0];
        assert_eq!(a[0], -1.0);
        assert!(a.contains(&-0.75));
        assert_eq!(*a.last().unwrap(), -0.25);
        assert!(lat.max_spacing() <= 0.3);
    }

    #[test]
    fn argmin_breaks_ties_lexicographically() {
        let lat = Lattice::domain(2, 0.5);
        let (p, v) = lat.argmin(|_| 1.0);
        assert_eq!(p, vec![-1.0, -1.0]);
        assert_eq!(v, 1.0);
        let (p, _) = lat.argmin(|x| -(x[0] - 0.5).abs().min(0.0));
        assert_eq!(p, vec![-1.0, -1.0]);
    }

    #[test]
    fn visits_in_lexicographic_order() {
        let lat = Lattice::domain(2, 1.0);
        let mut seen = Vec::new();
        lat.for_each(|p| seen.push(p.to_vec()));
        assert_eq!(seen.len(), 9);
        assert!(seen.windows(2).all(|w| math::lex_cmp(&w[0], &w[1]).is_lt()));
    }
}
