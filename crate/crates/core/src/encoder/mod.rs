//! Machine side: sub-signal construction, quantization and the packed wire format.
//!
//! A sub-signal is `(p, delta, theta_p, eta)`:
//! - `p` is a random grid point of level `1..=t`,
//! - `delta = F_i(p) - F_i(parent(p))`,
//! - on the finest level, `theta_p` minimizes `F_i` over the cell of `p` and
//!   `eta = F_i(theta_p) - F_i(p)`; coarser levels carry all-zero dummy fields.
//!
//! Wire format (no header; the layout follows from the problem parameters):
//! per sub-signal the fields `level - 1`, index, `delta`, `theta_p` offsets,
//! `eta`, each written most significant bit first; sub-signals are
//! concatenated and the packet is zero-padded to a byte boundary.

mod bits;
mod quantize;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub use bits::{BitReader, BitWriter};
pub use quantize::{QuantizerSpec, MAX_FIELD_BITS};

use crate::error::{config_err, Error, Result};
use crate::functions::{EmpiricalLoss, LossSample};
use crate::grids::{cell_bounds, sample_grid_point, GridCoord, ProblemDims, ResolutionParams};
use crate::lattice::Lattice;
use crate::math;

/// Refuse cell searches larger than this many lattice points.
pub const MAX_LATTICE_POINTS: usize = 20_000_000;

/// How quantizer widths are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantization {
    /// Widths from the precision targets; every sub-signal must fit the length budget.
    Budgeted,
    /// Fixed width for every scalar field, with no length budget enforced.
    Diagnostic { bits: u32 },
}

/// Field widths and quantizers of one sub-signal.
#[derive(Debug, Clone, PartialEq)]
pub struct BitLayout {
    d: usize,
    t: u32,
    level_bits: u32,
    delta: Option<QuantizerSpec>,
    theta: Option<QuantizerSpec>,
    eta: Option<QuantizerSpec>,
    count: usize,
    budget: u64,
    mode: Quantization,
}

impl BitLayout {
    pub fn new(dims: &ProblemDims, params: &ResolutionParams, mode: Quantization) -> Result<Self> {
        dims.validate()?;
        let d = dims.d;
        let t = params.t;
        let level_bits = math::ceil(math::log2(t.max(1) as f64)).max(1.0) as u32;
        let sqrt_d = math::sqrt(d as f64);
        let (qd, qt) = match mode {
            Quantization::Budgeted => {
                let qd = width_for(4.0 * t as f64 * sqrt_d / params.epsilon);
                let qt = width_for(8.0 * params.delta * sqrt_d / params.epsilon);
                (qd, qt)
            }
            Quantization::Diagnostic { bits } => (bits, bits),
        };
        let mut layout = BitLayout {
            d,
            t,
            level_bits,
            delta: None,
            theta: None,
            eta: None,
            count: dims.sub_signal_count(),
            budget: dims.sub_signal_bits(),
            mode,
        };
        if t == 0 {
            return Ok(layout);
        }
        if t > 31 || (t as usize) * d > 64 {
            return Err(config_err!(
                "grid index of {t} levels in {d} dimensions does not fit a field"
            ));
        }
        layout.delta = Some(QuantizerSpec::new(sqrt_d / 2.0, qd)?);
        layout.theta = Some(QuantizerSpec::new(params.delta, qt)?);
        layout.eta = Some(QuantizerSpec::new(sqrt_d * params.delta, qd)?);
        if mode == Quantization::Budgeted && layout.sub_signal_len() > layout.budget {
            return Err(config_err!(
                "sub-signal layout needs {} bits (level {}, index {}, delta {}, theta {}x{}, eta {}) \
                 but the per-sub-signal budget floor(d*log2(mn)) is {}",
                layout.sub_signal_len(),
                level_bits,
                t as usize * d,
                qd,
                d,
                qt,
                qd,
                layout.budget
            ));
        }
        Ok(layout)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn levels(&self) -> u32 {
        self.t
    }

    pub fn mode(&self) -> Quantization {
        self.mode
    }

    /// Sub-signals per packet (zero when there are no levels to sample).
    pub fn count(&self) -> usize {
        if self.t == 0 {
            0
        } else {
            self.count
        }
    }

    /// Per-sub-signal length budget `floor(d log2 mn)`.
    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn level_bits(&self) -> u32 {
        self.level_bits
    }

    pub fn index_bits(&self) -> u32 {
        self.t * self.d as u32
    }

    fn spec(q: &Option<QuantizerSpec>) -> &QuantizerSpec {
        q.as_ref().expect("quantizers exist whenever t >= 1")
    }

    pub fn delta_quantizer(&self) -> Option<&QuantizerSpec> {
        self.delta.as_ref()
    }

    pub fn theta_quantizer(&self) -> Option<&QuantizerSpec> {
        self.theta.as_ref()
    }

    pub fn eta_quantizer(&self) -> Option<&QuantizerSpec> {
        self.eta.as_ref()
    }

    /// Bits in one sub-signal.
    pub fn sub_signal_len(&self) -> u64 {
        if self.t == 0 {
            return 0;
        }
        let qd = Self::spec(&self.delta).bits() as u64;
        let qt = Self::spec(&self.theta).bits() as u64;
        let qe = Self::spec(&self.eta).bits() as u64;
        self.level_bits as u64 + self.index_bits() as u64 + qd + self.d as u64 * qt + qe
    }

    /// Bits in one packet before byte padding.
    pub fn packet_len(&self) -> u64 {
        self.count() as u64 * self.sub_signal_len()
    }

    /// Encoded byte length of a packet.
    pub fn packet_bytes(&self) -> usize {
        self.packet_len().div_ceil(8) as usize
    }

    fn write(&self, sub: &SubSignal, w: &mut BitWriter) {
        w.write((sub.point.level - 1) as u64, self.level_bits);
        for &i in &sub.point.index {
            w.write(i as u64, self.t);
        }
        w.write(sub.delta, Self::spec(&self.delta).bits());
        let qt = Self::spec(&self.theta).bits();
        for &c in &sub.theta {
            w.write(c, qt);
        }
        w.write(sub.eta, Self::spec(&self.eta).bits());
    }

    fn read(&self, r: &mut BitReader<'_>) -> Result<SubSignal> {
        let level = r.read(self.level_bits)? + 1;
        if level > self.t as u64 {
            return Err(Error::Decode(format!("level {level} exceeds {}", self.t)));
        }
        let level = level as u32;
        let mut index = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            let i = r.read(self.t)?;
            if i >> level != 0 {
                return Err(Error::Decode(format!("index {i} out of range for level {level}")));
            }
            index.push(i as u32);
        }
        let delta = r.read(Self::spec(&self.delta).bits())?;
        let qt = Self::spec(&self.theta).bits();
        let theta = (0..self.d).map(|_| r.read(qt)).collect::<Result<Vec<_>>>()?;
        let eta = r.read(Self::spec(&self.eta).bits())?;
        let sub = SubSignal {
            point: GridCoord { level, index },
            delta,
            theta,
            eta,
        };
        if level < self.t && (sub.eta != 0 || sub.theta.iter().any(|c| *c != 0)) {
            return Err(Error::Decode("non-zero dummy fields below the finest level".into()));
        }
        Ok(sub)
    }

    /// Packs one sub-signal on its own (byte-padded).
    pub fn pack(&self, sub: &SubSignal) -> Vec<u8> {
        let mut w = BitWriter::new();
        self.write(sub, &mut w);
        w.into_bytes()
    }

    pub fn unpack(&self, bytes: &[u8]) -> Result<SubSignal> {
        if self.t == 0 {
            return Err(Error::Decode("no sub-signals exist without grid levels".into()));
        }
        let mut r = BitReader::new(bytes);
        let sub = self.read(&mut r)?;
        r.finish()?;
        Ok(sub)
    }

    /// Dequantizes a sub-signal into real values.
    pub fn decode(&self, sub: &SubSignal) -> DecodedSubSignal {
        let delta = Self::spec(&self.delta).dequantize(sub.delta);
        let candidate = (sub.point.level == self.t).then(|| {
            let q = Self::spec(&self.theta);
            let theta = sub
                .theta
                .iter()
                .enumerate()
                .map(|(j, &c)| (sub.point.center_coord(j) + q.dequantize(c)).clamp(-1.0, 1.0))
                .collect();
            let eta = Self::spec(&self.eta).dequantize(sub.eta);
            (theta, eta)
        });
        DecodedSubSignal {
            point: sub.point.clone(),
            delta,
            candidate,
        }
    }
}

fn width_for(ratio: f64) -> u32 {
    let w = math::ceil(math::log2(ratio));
    if w.is_nan() || w < 1.0 {
        1
    } else {
        w as u32
    }
}

/// One quantized sub-signal (codes, not values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSignal {
    pub point: GridCoord,
    pub delta: u64,
    /// Per-axis offset codes of `theta_p` within the cell; zeros below the finest level.
    pub theta: Vec<u64>,
    /// Zero below the finest level.
    pub eta: u64,
}

/// A sub-signal after dequantization.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSubSignal {
    pub point: GridCoord,
    pub delta: f64,
    /// `(theta_p, eta)` for finest-level points.
    pub candidate: Option<(Vec<f64>, f64)>,
}

/// Everything one machine sends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalPacket {
    pub machine: usize,
    pub subs: Vec<SubSignal>,
}

impl SignalPacket {
    pub fn to_bytes(&self, layout: &BitLayout) -> Vec<u8> {
        let mut w = BitWriter::new();
        for s in &self.subs {
            layout.write(s, &mut w);
        }
        w.into_bytes()
    }

    pub fn from_bytes(machine: usize, bytes: &[u8], layout: &BitLayout) -> Result<Self> {
        let mut r = BitReader::new(bytes);
        let subs = (0..layout.count())
            .map(|_| layout.read(&mut r))
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(SignalPacket { machine, subs })
    }

    pub fn decode(&self, layout: &BitLayout) -> DecodedPacket {
        DecodedPacket {
            machine: self.machine,
            subs: self.subs.iter().map(|s| layout.decode(s)).collect(),
        }
    }
}

/// A packet after dequantization.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPacket {
    pub machine: usize,
    pub subs: Vec<DecodedSubSignal>,
}

/// Lattice minimizer of `objective` over the cell of a finest-level point.
///
/// Lattice spacing is at most `epsilon / (4 sqrt(d))`; ties go to the
/// lexicographically smallest point.
pub fn minimize_in_cell(
    objective: impl Fn(&[f64]) -> f64,
    p: &GridCoord,
    params: &ResolutionParams,
) -> Result<(Vec<f64>, f64)> {
    let cell = cell_bounds(p, params)?;
    let step = search_step(params, p.dim());
    let lattice = Lattice::anchored(&p.center(), params.delta, &cell, step);
    check_lattice(&lattice)?;
    Ok(lattice.argmin(objective))
}

/// A machine's own minimizer of its empirical loss over the whole domain,
/// on the same lattice resolution as the cell search.
pub fn local_minimizer(samples: &[LossSample], params: &ResolutionParams, d: usize) -> Result<Vec<f64>> {
    let f = EmpiricalLoss::first_half(samples)?;
    let lattice = Lattice::domain(d, search_step(params, d));
    check_lattice(&lattice)?;
    Ok(lattice.argmin(|th| f.eval(th)).0)
}

/// Per-axis lattice spacing for minimization, `epsilon / (4 sqrt(d))`.
pub fn search_step(params: &ResolutionParams, d: usize) -> f64 {
    params.epsilon / (4.0 * math::sqrt(d as f64))
}

fn check_lattice(l: &Lattice) -> Result<()> {
    if l.len() > MAX_LATTICE_POINTS {
        return Err(config_err!(
            "cell search lattice of {} points exceeds {MAX_LATTICE_POINTS}",
            l.len()
        ));
    }
    Ok(())
}

/// Builds one machine's packet from its `n` samples.
pub fn build_packet<R: Rng + ?Sized>(
    machine: usize,
    samples: &[LossSample],
    params: &ResolutionParams,
    layout: &BitLayout,
    rng: &mut R,
) -> Result<SignalPacket> {
    let f = EmpiricalLoss::first_half(samples)?;
    let d = layout.dim();
    if samples.iter().any(|s| s.dim() != d) {
        return Err(config_err!("sample dimension does not match d = {d}"));
    }
    if layout.levels() != params.t {
        return Err(config_err!("layout and resolution disagree on the level count"));
    }
    let mut subs = Vec::with_capacity(layout.count());
    for _ in 0..layout.count() {
        let p = sample_grid_point(params.t, d, rng);
        let center = p.center();
        let at_p = f.eval(&center);
        let at_parent = f.eval(&p.parent()?.center());
        let delta = BitLayout::spec(&layout.delta).quantize(at_p - at_parent);
        let (theta, eta) = if p.level == params.t {
            let (best, value) = minimize_in_cell(|th| f.eval(th), &p, params)?;
            let q = BitLayout::spec(&layout.theta);
            let codes = best.iter().zip(&center).map(|(b, c)| q.quantize(b - c)).collect();
            (codes, BitLayout::spec(&layout.eta).quantize(value - at_p))
        } else {
            (vec![0; d], 0)
        };
        subs.push(SubSignal {
            point: p,
            delta,
            theta,
            eta,
        });
    }
    Ok(SignalPacket { machine, subs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Cone, FnLoss};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(m: u64, n: u64, b: u64, d: usize) -> ProblemDims {
        ProblemDims::new(m, n, b, d).unwrap()
    }

    #[test]
    fn packet_for_reference_config() {
        let dm = dims(10_000, 100, 256, 2);
        // floor(256 / (2 * log2(1e6))) = floor(256 / 39.86) = 6
        assert_eq!(dm.sub_signal_count(), 6);
        let params = ResolutionParams::from_dims(&dm).unwrap();
        assert!(params.t >= 1);
        let layout = BitLayout::new(&dm, &params, Quantization::Budgeted).unwrap();
        let f = LossSample::new(Cone::new(vec![0.1, 0.2]));
        let samples = vec![f; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pkt = build_packet(0, &samples, &params, &layout, &mut rng).unwrap();
        assert_eq!(pkt.subs.len(), 6);
        let bytes = pkt.to_bytes(&layout);
        assert!(layout.packet_len() <= 256);
        assert!(bytes.len() * 8 < layout.packet_len() as usize + 8);
        assert_eq!(SignalPacket::from_bytes(0, &bytes, &layout).unwrap(), pkt);
    }

    #[test]
    fn no_levels_means_empty_packet() {
        let dm = dims(100, 100, 64, 2);
        let params = ResolutionParams::from_dims(&dm).unwrap();
        assert_eq!(params.t, 0);
        let layout = BitLayout::new(&dm, &params, Quantization::Budgeted).unwrap();
        let samples = vec![LossSample::new(Cone::new(vec![0.0, 0.0])); 4];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pkt = build_packet(3, &samples, &params, &layout, &mut rng).unwrap();
        assert!(pkt.subs.is_empty());
        assert!(pkt.to_bytes(&layout).is_empty());
    }

    #[test]
    fn over_budget_layout_is_a_config_error() {
        // t = 9 needs 9 index bits alone, over the 10-bit budget once the level field is added
        let dm = dims(64, 16, 80, 1);
        let params = ResolutionParams::with_delta(&dm, 1.0 / 512.0).unwrap();
        let err = BitLayout::new(&dm, &params, Quantization::Budgeted).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("budget"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
        assert!(BitLayout::new(&dm, &params, Quantization::Diagnostic { bits: 16 }).is_ok());
    }

    #[test]
    fn layout_length_is_sum_of_fields() {
        let dm = dims(10_000, 2, 64, 2);
        let params = ResolutionParams::from_dims(&dm).unwrap();
        let layout = BitLayout::new(&dm, &params, Quantization::Diagnostic { bits: 12 }).unwrap();
        let t = params.t as u64;
        let l = (t as f64).log2().ceil().max(1.0) as u64;
        assert_eq!(layout.sub_signal_len(), l + 2 * t + 12 + 2 * 12 + 12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let p = sample_grid_point(params.t, 2, &mut rng);
            let sub = SubSignal {
                point: p,
                delta: 7,
                theta: vec![0, 0],
                eta: 0,
            };
            if sub.point.level == params.t {
                let mut w = BitWriter::new();
                layout.write(&sub, &mut w);
                assert_eq!(w.len() as u64, layout.sub_signal_len());
            }
        }
    }

    #[test]
    fn delta_matches_point_mass_difference() {
        let dm = dims(10_000, 2, 64, 2);
        let params = ResolutionParams::from_dims(&dm).unwrap();
        let layout = BitLayout::new(&dm, &params, Quantization::Budgeted).unwrap();
        // f(p) - f(p') computed directly for every sub-signal
        let f = LossSample::new(FnLoss::new(2, |th: &[f64]| 0.3 * th[0] - 0.2 * th[1].abs()));
        let samples = vec![f.clone(); 2];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = layout.delta_quantizer().unwrap();
        for _ in 0..20 {
            let pkt = build_packet(0, &samples, &params, &layout, &mut rng).unwrap();
            for s in &pkt.subs {
                let want = f.eval(&s.point.center()) - f.eval(&s.point.parent().unwrap().center());
                let got = q.dequantize(s.delta);
                assert!((got - want).abs() <= q.step() / 2.0 + 1e-12);
                let bound = (2f64).sqrt() * 2f64.powi(-(s.point.level as i32)) + q.step();
                assert!(got.abs() <= bound);
            }
        }
    }

    #[test]
    fn cell_search_examples() {
        let dm = dims(10_000, 100, 256, 2);
        let params = ResolutionParams::with_delta(&dm, 0.125).unwrap();
        let p = GridCoord::new(3, vec![5, 2]).unwrap();
        let c = p.center();
        let (best, v) = minimize_in_cell(|th| crate::math::dist(th, &c), &p, &params).unwrap();
        assert_eq!(best, c);
        assert_eq!(v, 0.0);
        // decreasing along the first axis: the upper face, lowest corner on the other axis
        let (best, _) = minimize_in_cell(|th| -th[0], &p, &params).unwrap();
        let cell = cell_bounds(&p, &params).unwrap();
        assert_eq!(best[0], cell.hi[0]);
        assert_eq!(best[1], cell.lo[1]);
    }

    #[test]
    fn unpack_rejects_truncation_and_range_errors() {
        let dm = dims(10_000, 2, 64, 2);
        let params = ResolutionParams::from_dims(&dm).unwrap();
        let layout = BitLayout::new(&dm, &params, Quantization::Budgeted).unwrap();
        let p = GridCoord::new(1, vec![1, 0]).unwrap();
        let sub = SubSignal {
            point: p,
            delta: 3,
            theta: vec![0, 0],
            eta: 0,
        };
        let mut bytes = layout.pack(&sub);
        assert_eq!(layout.unpack(&bytes).unwrap(), sub);
        assert!(layout.unpack(&bytes[..bytes.len() - 1]).is_err());
        // set the top index bit of coordinate 0, which a level-1 point cannot use
        let l = layout.level_bits() as usize;
        bytes[l / 8] |= 0x80 >> (l % 8);
        assert!(layout.unpack(&bytes).is_err());
    }
}
