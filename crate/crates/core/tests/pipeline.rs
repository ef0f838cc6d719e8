use mrenc_core::encoder::{build_packet, minimize_in_cell, search_step, BitLayout, Quantization, SignalPacket};
use mrenc_core::functions::{Cone, LossDistribution, LossSample, MultiWell, PointMass};
use mrenc_core::grids::{cell_bounds, level_points, GridCoord, ProblemDims, ResolutionParams};
use mrenc_core::lattice::Lattice;
use mrenc_core::server::aggregate;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run_point_mass(
    fam: &PointMass,
    dims: &ProblemDims,
    bits: u32,
    seed: u64,
) -> (ResolutionParams, BitLayout, Vec<SignalPacket>) {
    let params = ResolutionParams::from_dims(dims).unwrap();
    let layout = BitLayout::new(dims, &params, Quantization::Diagnostic { bits }).unwrap();
    let samples = vec![fam.function().clone(); dims.n as usize];
    let packets = (0..dims.m as usize)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64) << 20);
            let pkt = build_packet(i, &samples, &params, &layout, &mut rng).unwrap();
            // exercise the wire format on the way to the server
            SignalPacket::from_bytes(i, &pkt.to_bytes(&layout), &layout).unwrap()
        })
        .collect();
    (params, layout, packets)
}

fn noise_free_case(fam: PointMass, seed: u64) {
    let d = 2;
    let dims = ProblemDims::new(10_000, 2, 64, d).unwrap();
    let (params, layout, packets) = run_point_mass(&fam, &dims, 16, seed);
    assert_eq!(params.t, 4);
    let (table, theta) = aggregate(&packets, &layout);
    let f = fam.function();
    let root = f.eval(&GridCoord::root(d).center());
    let step = layout.delta_quantizer().unwrap().step();
    for l in 1..=params.t {
        for p in level_points(l, d) {
            let e = table.get(&p).expect("every point reconstructed");
            assert!(e.count > 0, "{p:?} not covered");
            let truth = f.eval(&p.center()) - root;
            assert!((e.value - truth).abs() <= 2.0 * params.t as f64 * step, "{p:?}");
        }
    }
    let theta = theta.unwrap();
    let star = fam.minimizer().unwrap();
    let gap = f.eval(&theta) - f.eval(&star);
    assert!(gap >= 0.0);
    assert!(gap <= params.epsilon, "gap {gap} vs eps {}", params.epsilon);
    // Tighter: lattice spacing plus telescoped quantization.
    let slack = search_step(&params, d) * (d as f64).sqrt() + 2.0 * (params.t as f64 + 1.0) * step;
    assert!(gap <= slack, "gap {gap} vs {slack}");
}

#[test]
fn noise_free_cone() {
    noise_free_case(PointMass::cone(vec![0.31, -0.47]), 1);
}

#[test]
fn noise_free_wells() {
    let w = MultiWell::new(
        vec![vec![0.6, 0.6], vec![-0.55, 0.1], vec![0.2, -0.8]],
        vec![0.1, 0.35, 0.2],
    )
    .unwrap();
    noise_free_case(PointMass::multi_well(w), 2);
}

#[test]
fn empty_packets_fail_explicitly() {
    let dims = ProblemDims::new(4, 10, 64, 4).unwrap();
    let params = ResolutionParams::from_dims(&dims).unwrap();
    assert_eq!(params.t, 0);
    let layout = BitLayout::new(&dims, &params, Quantization::Budgeted).unwrap();
    let f = LossSample::new(Cone::new(vec![0.0; 4]));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pkts: Vec<_> = (0..4)
        .map(|i| build_packet(i, &vec![f.clone(); 10], &params, &layout, &mut rng).unwrap())
        .collect();
    assert!(pkts.iter().all(|p| p.subs.is_empty() && p.to_bytes(&layout).is_empty()));
    let (table, theta) = aggregate(&pkts, &layout);
    assert_eq!(table.len(), 1);
    assert_eq!(theta, Err(mrenc_core::Error::EstimationFailed));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cell_search_is_lattice_optimal(
        delta_exp in 1u32..=4,
        idx in prop::collection::vec(any::<u32>(), 2),
        apex in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let dims = ProblemDims::new(1 << 14, 64, 1 << 12, 2).unwrap();
        let params = ResolutionParams::with_delta(&dims, 2f64.powi(-(delta_exp as i32))).unwrap();
        let p = GridCoord::new(params.t, idx.iter().map(|i| i % (1 << params.t)).collect()).unwrap();
        let f = Cone::new(apex);
        use mrenc_core::functions::Loss;
        let (theta, value) = minimize_in_cell(|x| f.eval(x), &p, &params).unwrap();
        let cell = cell_bounds(&p, &params).unwrap();
        prop_assert!(cell.contains(&theta));
        prop_assert_eq!(value, f.eval(&theta));
        let lattice = Lattice::anchored(&p.center(), params.delta, &cell, search_step(&params, 2));
        lattice.for_each(|x| assert!(value <= f.eval(x)));
    }

    #[test]
    fn approximate_minimizer_within_two_gamma(
        g in prop::collection::vec(-1_000_000i64..1_000_000, 1..60),
        gamma in 0i64..50_000,
        noise_seed in any::<u64>(),
    ) {
        use rand::Rng;
        // Dyadic values keep every sum exact.
        let scale = 2f64.powi(-20);
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let g: Vec<f64> = g.iter().map(|v| *v as f64 * scale).collect();
        let ghat: Vec<f64> = g
            .iter()
            .map(|v| v + rng.random_range(-gamma..=gamma) as f64 * scale)
            .collect();
        let gamma = gamma as f64 * scale;
        let w = (0..g.len()).min_by(|&a, &b| ghat[a].total_cmp(&ghat[b])).unwrap();
        let min_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(g[w] <= min_g + 2.0 * gamma);
    }
}
