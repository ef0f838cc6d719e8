//! Server side: redundancy elimination, loss-surface reconstruction on the
//! grid hierarchy, the final estimate, and the two naive baselines.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::encoder::{BitLayout, DecodedPacket, DecodedSubSignal, SignalPacket};
use crate::error::{Error, Result};
use crate::grids::GridCoord;
use crate::math;

/// A sub-signal that survived redundancy elimination, tagged with its sender.
#[derive(Debug, Clone, PartialEq)]
pub struct Survivor {
    pub machine: usize,
    pub sub: DecodedSubSignal,
}

/// Keeps at most one sub-signal per (machine, grid point), the first in packet order.
///
/// Output is ordered by machine id, then packet order.
pub fn redundancy_elimination(packets: &[DecodedPacket]) -> Vec<Survivor> {
    let mut order: Vec<&DecodedPacket> = packets.iter().collect();
    order.sort_by_key(|p| p.machine);
    let mut out = Vec::new();
    for pkt in order {
        let mut seen: Vec<&GridCoord> = Vec::new();
        for sub in &pkt.subs {
            if seen.contains(&&sub.point) {
                continue;
            }
            seen.push(&sub.point);
            out.push(Survivor {
                machine: pkt.machine,
                sub: sub.clone(),
            });
        }
    }
    out
}

/// `N_p` for every received point.
pub fn contributor_counts(survivors: &[Survivor]) -> BTreeMap<GridCoord, usize> {
    let mut counts = BTreeMap::new();
    for s in survivors {
        *counts.entry(s.sub.point.clone()).or_insert(0) += 1;
    }
    counts
}

/// Reconstructed value at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    /// Machines that contributed; zero for points filled in from their parent.
    pub count: usize,
}

/// A finest-level candidate minimizer and its reconstructed loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub theta: Vec<f64>,
    pub value: f64,
    pub machine: usize,
}

/// Reconstructed loss surface.
#[derive(Debug, Clone, PartialEq)]
pub struct FhatTable {
    points: BTreeMap<GridCoord, PointEstimate>,
    candidates: BTreeMap<GridCoord, Candidate>,
}

impl FhatTable {
    pub fn get(&self, p: &GridCoord) -> Option<&PointEstimate> {
        self.points.get(p)
    }

    pub fn points(&self) -> impl Iterator<Item = (&GridCoord, &PointEstimate)> {
        self.points.iter()
    }

    pub fn candidates(&self) -> impl Iterator<Item = (&GridCoord, &Candidate)> {
        self.candidates.iter()
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Adds `c` to every candidate value (used to probe shift invariance).
    pub fn shift_candidates(&mut self, c: f64) {
        for cand in self.candidates.values_mut() {
            cand.value += c;
        }
    }

    fn ensure(&mut self, p: &GridCoord) -> f64 {
        if let Some(e) = self.points.get(p) {
            return e.value;
        }
        // Unreceived interior point: inherit the parent's value.
        let value = match p.parent() {
            Ok(q) => self.ensure(&q),
            Err(_) => 0.0,
        };
        self.points.insert(p.clone(), PointEstimate { value, count: 0 });
        value
    }
}

/// Builds the reconstructed surface from deduplicated survivors.
///
/// Levels are processed in increasing order; the root is pinned at 0, each
/// received point gets its parent's value plus the mean of its `delta`s, and
/// each finest-level point yields one candidate from its smallest-id sender.
pub fn reconstruct(survivors: &[Survivor], d: usize, t: u32) -> FhatTable {
    let mut table = FhatTable {
        points: BTreeMap::new(),
        candidates: BTreeMap::new(),
    };
    table
        .points
        .insert(GridCoord::root(d), PointEstimate { value: 0.0, count: 0 });

    let mut by_point: BTreeMap<&GridCoord, Vec<&Survivor>> = BTreeMap::new();
    for s in survivors {
        by_point.entry(&s.sub.point).or_default().push(s);
    }
    // GridCoord orders by level first, so this walks levels in increasing order.
    for (p, group) in by_point.iter_mut() {
        if p.level == 0 || p.level > t {
            continue;
        }
        group.sort_by_key(|s| s.machine);
        let base = table.ensure(&p.parent().expect("level >= 1"));
        let mean = group.iter().map(|s| s.sub.delta).sum::<f64>() / group.len() as f64;
        let value = base + mean;
        table.points.insert(
            (*p).clone(),
            PointEstimate {
                value,
                count: group.len(),
            },
        );
        if p.level == t {
            let chosen = group
                .iter()
                .find_map(|s| s.sub.candidate.as_ref().map(|c| (s.machine, c)));
            if let Some((machine, (theta, eta))) = chosen {
                let cand = Candidate {
                    theta: theta.clone(),
                    value: value + eta,
                    machine,
                };
                table.candidates.insert((*p).clone(), cand);
            }
        }
    }
    table
}

/// The candidate with the smallest reconstructed loss; ties go to the
/// lexicographically smallest `theta`.
pub fn estimate(table: &FhatTable) -> Result<Vec<f64>> {
    table
        .candidates
        .values()
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| math::lex_cmp(&a.theta, &b.theta))
        })
        .map(|c| c.theta.clone())
        .ok_or(Error::EstimationFailed)
}

/// Decodes raw packets and runs the full server pipeline.
///
/// Returns the reconstruction even when no estimate can be formed.
pub fn aggregate(packets: &[SignalPacket], layout: &BitLayout) -> (FhatTable, Result<Vec<f64>>) {
    let decoded: Vec<DecodedPacket> = packets.iter().map(|p| p.decode(layout)).collect();
    let table = reconstruct(&redundancy_elimination(&decoded), layout.dim(), layout.levels());
    let theta = estimate(&table);
    (table, theta)
}

/// Coordinate-wise mean of the machines' own minimizers.
pub fn baseline_average(minimizers: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = minimizers.first().ok_or(Error::Empty("no minimizers to average"))?;
    let mut acc = alloc::vec![0.0; first.len()];
    for m in minimizers {
        for (a, v) in acc.iter_mut().zip(m) {
            *a += v;
        }
    }
    let k = minimizers.len() as f64;
    Ok(acc.into_iter().map(|a| a / k).collect())
}

/// One machine's minimizer, chosen uniformly at random.
pub fn baseline_single<R: Rng + ?Sized>(minimizers: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
    if minimizers.is_empty() {
        return Err(Error::Empty("no minimizers to choose from"));
    }
    Ok(minimizers[rng.random_range(0..minimizers.len())].clone())
}
