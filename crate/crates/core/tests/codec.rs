use mrenc_core::encoder::{build_packet, BitLayout, BitReader, BitWriter, Quantization, SignalPacket, SubSignal};
use mrenc_core::functions::{Cone, LossSample};
use mrenc_core::grids::{GridCoord, ProblemDims, ResolutionParams};
use mrenc_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn diag_layout(d: usize, delta: f64, bits: u32) -> (ProblemDims, ResolutionParams, BitLayout) {
    let dims = ProblemDims::new(1 << 12, 4, 4096, d).unwrap();
    let params = ResolutionParams::with_delta(&dims, delta).unwrap();
    let layout = BitLayout::new(&dims, &params, Quantization::Diagnostic { bits }).unwrap();
    (dims, params, layout)
}

fn random_sub(layout: &BitLayout, level: u32, idx_seed: &[u32], codes: &[u64]) -> SubSignal {
    let d = layout.dim();
    let t = layout.levels();
    let index = idx_seed.iter().take(d).map(|i| i % (1 << level)).collect();
    let max = layout.delta_quantizer().unwrap().max_code();
    let tmax = layout.theta_quantizer().unwrap().max_code();
    let finest = level == t;
    SubSignal {
        point: GridCoord::new(level, index).unwrap(),
        delta: codes[0] % (max + 1),
        theta: (0..d)
            .map(|j| if finest { codes[1 + j] % (tmax + 1) } else { 0 })
            .collect(),
        eta: if finest { codes[5] % (max + 1) } else { 0 },
    }
}

proptest! {
    #[test]
    fn bit_stream_round_trip(fields in prop::collection::vec((any::<u64>(), 1u32..=64), 0..40)) {
        let mut w = BitWriter::new();
        for (v, width) in &fields {
            let v = if *width == 64 { *v } else { v & ((1u64 << width) - 1) };
            w.write(v, *width);
        }
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for (v, width) in &fields {
            let v = if *width == 64 { *v } else { v & ((1u64 << width) - 1) };
            prop_assert_eq!(r.read(*width).unwrap(), v);
        }
        prop_assert!(r.finish().is_ok());
    }

    #[test]
    fn sub_signal_round_trip(
        d in 1usize..=4,
        delta_exp in 1u32..=6,
        bits in 1u32..=20,
        level_seed in any::<u32>(),
        idx in prop::collection::vec(any::<u32>(), 4),
        codes in prop::collection::vec(any::<u64>(), 6),
    ) {
        let (_, _, layout) = diag_layout(d, 2f64.powi(-(delta_exp as i32)), bits);
        let level = 1 + level_seed % layout.levels();
        let sub = random_sub(&layout, level, &idx, &codes);
        let bytes = layout.pack(&sub);
        prop_assert_eq!(bytes.len() as u64, layout.sub_signal_len().div_ceil(8));
        prop_assert_eq!(layout.unpack(&bytes).unwrap(), sub);
    }

    #[test]
    fn packet_round_trip(
        d in 1usize..=3,
        seeds in prop::collection::vec((any::<u32>(), prop::collection::vec(any::<u32>(), 4), prop::collection::vec(any::<u64>(), 6)), 1..6),
    ) {
        let (_, _, layout) = diag_layout(d, 0.125, 9);
        // Packets carry exactly layout.count() sub-signals.
        let subs: Vec<SubSignal> = (0..layout.count())
            .map(|i| {
                let (l, idx, codes) = &seeds[i % seeds.len()];
                random_sub(&layout, 1 + l % layout.levels(), idx, codes)
            })
            .collect();
        let pkt = SignalPacket { machine: 7, subs };
        let bytes = pkt.to_bytes(&layout);
        prop_assert_eq!(bytes.len(), layout.packet_bytes());
        prop_assert_eq!(SignalPacket::from_bytes(7, &bytes, &layout).unwrap(), pkt);
    }

    #[test]
    fn budgeted_packets_fit(
        log_m in 1u32..=20,
        n in 2u64..=24,
        d in 1usize..=3,
        extra in 0u64..=200,
        seed in any::<u64>(),
    ) {
        let m = 1u64 << log_m;
        let mn = (m * n) as f64;
        let bits = (d as f64 * mn.log2()).ceil() as u64 + extra;
        let dims = ProblemDims::new(m, n, bits, d).unwrap();
        let params = ResolutionParams::from_dims(&dims).unwrap();
        match BitLayout::new(&dims, &params, Quantization::Budgeted) {
            Err(Error::Config(msg)) => prop_assert!(msg.contains("budget")),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
            Ok(layout) => {
                let cone = LossSample::new(Cone::new(vec![0.1; d]));
                let samples = vec![cone; n as usize];
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pkt = build_packet(0, &samples, &params, &layout, &mut rng).unwrap();
                prop_assert!(layout.packet_len() <= bits);
                prop_assert!(layout.sub_signal_len() <= dims.sub_signal_bits());
                prop_assert_eq!(pkt.subs.len(), layout.count());
                prop_assert!(pkt.to_bytes(&layout).len() * 8 < bits as usize + 8);
            }
        }
    }
}

#[test]
fn diagnostic_delta_error_halves_per_bit() {
    let d = 2;
    let f = LossSample::new(Cone::new(vec![0.37, -0.61]));
    let samples = vec![f.clone(), f.clone()];
    let mut steps = Vec::new();
    for bits in [10u32, 11, 12] {
        let (_, params, layout) = diag_layout(d, 0.125, bits);
        let q = layout.delta_quantizer().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(bits as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let pkt = build_packet(0, &samples, &params, &layout, &mut rng).unwrap();
            for (raw, dec) in pkt.subs.iter().zip(pkt.decode(&layout).subs) {
                let exact = f.eval(&raw.point.center()) - f.eval(&raw.point.parent().unwrap().center());
                worst = worst.max((dec.delta - exact).abs());
            }
        }
        assert!(worst <= q.step() / 2.0 + 1e-12);
        steps.push(q.step());
    }
    for w in steps.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.49..0.51).contains(&ratio), "{ratio}");
    }
}

#[test]
fn sub_signal_marginals_match_level_law() {
    use mrenc_core::grids::{level_distribution, level_points};
    use std::collections::HashMap;

    let d = 2;
    let dims = ProblemDims::new(10_000, 2, 40, d).unwrap();
    let params = ResolutionParams::from_dims(&dims).unwrap();
    assert_eq!(params.t, 3);
    let layout = BitLayout::new(&dims, &params, Quantization::Diagnostic { bits: 8 }).unwrap();
    assert_eq!(layout.count(), 1);
    let f = LossSample::new(Cone::new(vec![0.0, 0.0]));
    let samples = vec![f.clone(), f];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let packets = 100_000;
    let mut hits: HashMap<GridCoord, usize> = HashMap::new();
    for _ in 0..packets {
        for s in build_packet(0, &samples, &params, &layout, &mut rng).unwrap().subs {
            *hits.entry(s.point).or_default() += 1;
        }
    }
    let probs = level_distribution(params.t, d);
    for (l, p_level) in (1..=params.t).zip(probs) {
        let pts = level_points(l, d);
        let p = p_level / pts.len() as f64;
        let se = (p * (1.0 - p) / packets as f64).sqrt();
        for q in pts {
            let freq = *hits.get(&q).unwrap_or(&0) as f64 / packets as f64;
            assert!((freq - p).abs() <= 4.0 * se, "{q:?}: {freq} vs {p}");
        }
    }
}
