//! Acceptance criteria, runnable from the CLI (`mrenc verify`) and the
//! `acceptance` test target.

use std::time::Instant;

use mrenc_core::bounds::{lower_bound_value, upper_bound_value};
use mrenc_core::coinflip::{
    deterministic_dominance_check, exact_mutual_information, lemma5_check, ml_nine_coin_test, random_alpha,
    random_distribution, signal_entropy, subadditivity_check, theorem1_conditions, Coding, CoinWorld,
};
use mrenc_core::encoder::{build_packet, BitLayout, Quantization, SignalPacket};
use mrenc_core::functions::{Cone, LossDistribution, LossSample, MultiWell, PointMass};
use mrenc_core::grids::{level_points, GridCoord, ProblemDims, ResolutionParams};
use mrenc_core::server::aggregate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::error::Result;
use crate::experiment::{run_experiment, ExperimentRecord, Status};

pub const SWEEP_CONFIG: &str = include_str!("../../../configs/relu_sweep.toml");
pub const REDUCTION_CONFIG: &str = include_str!("../../../configs/reduction.toml");

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {:<22} {:>7.2}s  {}", self.name, self.seconds, self.detail)
    }
}

pub struct Criterion {
    pub name: &'static str,
    run: fn() -> Result<(bool, String)>,
}

impl Criterion {
    pub fn run(&self) -> Outcome {
        let start = Instant::now();
        let (passed, detail) = match (self.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        Outcome {
            name: self.name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            name: "bit-budget",
            run: bit_budget,
        },
        Criterion {
            name: "noise-free-oracle",
            run: noise_free_oracle,
        },
        Criterion {
            name: "machine-sweep-trend",
            run: sweep_trend,
        },
        Criterion {
            name: "nine-coin-constants",
            run: nine_coin_constants,
        },
        Criterion {
            name: "weighted-entropy-inequality",
            run: weighted_entropy_inequality,
        },
        Criterion {
            name: "argmin-stability",
            run: argmin_stability,
        },
        Criterion {
            name: "deterministic-dominance",
            run: deterministic_dominance,
        },
        Criterion {
            name: "subadditivity",
            run: subadditivity,
        },
        Criterion {
            name: "condition-calculators",
            run: condition_calculators,
        },
        Criterion {
            name: "lower-bound-reduction",
            run: lower_bound_reduction,
        },
    ]
}

/// Runs the selected criteria (all when `only` is empty).
pub fn run_all(only: &[String]) -> Vec<Outcome> {
    criteria()
        .iter()
        .filter(|c| only.is_empty() || only.iter().any(|o| o == c.name))
        .map(Criterion::run)
        .collect()
}

fn bit_budget() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb17b);
    let (mut built, mut infeasible, mut violations) = (0, 0, 0);
    for _ in 0..1000 {
        let m = 1u64 << rng.random_range(1..=20);
        let n = rng.random_range(2..=64u64);
        let d = rng.random_range(1..=4usize);
        let floor = (d as f64 * ((m * n) as f64).log2()).ceil() as u64;
        let bits = rng.random_range(floor..=5 * floor);
        let dims = ProblemDims::new(m, n, bits, d)?;
        let params = ResolutionParams::from_dims(&dims)?;
        let layout = match BitLayout::new(&dims, &params, Quantization::Budgeted) {
            Ok(l) => l,
            Err(mrenc_core::Error::Config(_)) => {
                infeasible += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let apex: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let samples = vec![LossSample::new(Cone::new(apex)); n as usize];
        let pkt = build_packet(0, &samples, &params, &layout, &mut rng)?;
        let bytes = pkt.to_bytes(&layout);
        let sub_ok = pkt
            .subs
            .iter()
            .all(|s| layout.pack(s).len() as u64 * 8 < dims.sub_signal_bits() + 8)
            && layout.sub_signal_len() <= dims.sub_signal_bits();
        let pkt_ok = layout.packet_len() <= bits
            && bytes.len() as u64 == bits.min(layout.packet_len()).div_ceil(8)
            && SignalPacket::from_bytes(0, &bytes, &layout)? == pkt;
        if !(sub_ok && pkt_ok) {
            violations += 1;
        }
        built += 1;
    }
    Ok((
        violations == 0 && built > 0,
        format!("{built} packets built, {infeasible} configs rejected as over budget, {violations} violations"),
    ))
}

fn noise_free_case(fam: &PointMass, seed: u64) -> Result<(bool, String)> {
    let d = 2;
    let dims = ProblemDims::new(10_000, 2, 64, d)?;
    let params = ResolutionParams::from_dims(&dims)?;
    let layout = BitLayout::new(&dims, &params, Quantization::Diagnostic { bits: 16 })?;
    let samples = vec![fam.function().clone(); dims.n as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let packets = (0..dims.m as usize)
        .map(|i| build_packet(i, &samples, &params, &layout, &mut rng))
        .collect::<mrenc_core::Result<Vec<_>>>()?;
    let (table, theta) = aggregate(&packets, &layout);
    let f = fam.function();
    let root = f.eval(&GridCoord::root(d).center());
    let step = layout.delta_quantizer().expect("t >= 1").step();
    let bound = 2.0 * params.t as f64 * step;
    let mut worst: f64 = 0.0;
    let mut uncovered = 0;
    for l in 1..=params.t {
        for p in level_points(l, d) {
            match table.get(&p) {
                Some(e) if e.count > 0 => worst = worst.max((e.value - (f.eval(&p.center()) - root)).abs()),
                _ => uncovered += 1,
            }
        }
    }
    let theta = theta?;
    let gap = f.eval(&theta) - f.eval(&fam.minimizer().expect("point masses know their minimizer"));
    let ok = uncovered == 0 && worst <= bound && gap <= params.epsilon;
    Ok((
        ok,
        format!(
            "{}: t={} uncovered={uncovered} max|err|={worst:.2e} (bound {bound:.2e}) gap={gap:.2e} (eps {:.3})",
            fam.name(),
            params.t,
            params.epsilon
        ),
    ))
}

fn noise_free_oracle() -> Result<(bool, String)> {
    let wells = MultiWell::new(
        vec![vec![0.6, 0.6], vec![-0.55, 0.1], vec![0.2, -0.8]],
        vec![0.1, 0.35, 0.2],
    )?;
    let (a, da) = noise_free_case(&PointMass::cone(vec![0.31, -0.47]), 1)?;
    let (b, db) = noise_free_case(&PointMass::multi_well(wells), 2)?;
    Ok((a && b, format!("{da}; {db}")))
}

/// Median of the loss gaps (failed rows count as infinitely bad) and the
/// Monte Carlo error of that median's underlying estimates.
fn median_with_se(rows: &[&ExperimentRecord]) -> (f64, f64) {
    let mut v: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.loss_gap.unwrap_or(f64::INFINITY), r.loss_gap_se.unwrap_or(0.0)))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        let (a, b) = (v[k / 2 - 1], v[k / 2]);
        ((a.0 + b.0) / 2.0, (a.1 * a.1 + b.1 * b.1).sqrt() / 2.0)
    }
}

/// `a` beats `b` up to four combined standard errors.
fn below(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 + 4.0 * (a.1 * a.1 + b.1 * b.1).sqrt()
}

pub fn sweep_summary(records: &[ExperimentRecord]) -> (bool, String) {
    let group = |est: EstimatorKind, m: u64| -> Vec<&ExperimentRecord> {
        records.iter().filter(|r| r.estimator == est && r.m == m).collect()
    };
    let ms: Vec<u64> = {
        let mut v: Vec<u64> = records.iter().map(|r| r.m).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (lo, hi) = (ms[0], *ms.last().expect("non-empty sweep"));
    let mre_lo = median_with_se(&group(EstimatorKind::MreNc, lo));
    let mre_hi = median_with_se(&group(EstimatorKind::MreNc, hi));
    let single_hi = median_with_se(&group(EstimatorKind::Single, hi));
    let improves = below(mre_hi, mre_lo);
    let beats_single = below(mre_hi, single_hi);
    let mut detail = format!(
        "median gap: mre-nc m={lo} {:.3e}±{:.1e}, m={hi} {:.3e}±{:.1e}; single m={hi} {:.3e}±{:.1e}",
        mre_lo.0, mre_lo.1, mre_hi.0, mre_hi.1, single_hi.0, single_hi.1
    );
    if !improves {
        detail.push_str("; mre-nc does not improve with m");
    }
    if !beats_single {
        detail.push_str("; mre-nc does not beat single");
    }
    (improves && beats_single, detail)
}

fn sweep_trend() -> Result<(bool, String)> {
    let cfg = ExperimentConfig::from_toml_str(SWEEP_CONFIG)?;
    let records = run_experiment(&cfg)?;
    Ok(sweep_summary(&records))
}

fn nine_coin_constants() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9c01);
    let r = ml_nine_coin_test(350_000, 10_000, &mut rng)?;
    let a = r.biased_exceeds <= 0.3961 + 4.0 * r.biased_exceeds_se;
    let b = r.fair_below <= 0.8021 + 4.0 * r.fair_below_se;
    let c = r.error_rate >= 0.5 - 4.0 * r.error_se;
    Ok((
        a && b && c,
        format!(
            "Pr(biased>thr)={:.4}±{:.4} Pr(fair<=thr)={:.4}±{:.4} error={:.4}±{:.4}",
            r.biased_exceeds, r.biased_exceeds_se, r.fair_below, r.fair_below_se, r.error_rate, r.error_se
        ),
    ))
}

fn weighted_entropy_inequality() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e55);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for n in 1..=3u32 {
        let len = 1usize << n;
        for _ in 0..10_000 {
            let (lhs, rhs) = lemma5_check(&random_alpha(len, &mut rng), &random_distribution(len, &mut rng))?;
            worst = worst.max(lhs - rhs);
            if lhs > rhs + 1e-9 {
                failures += 1;
            }
        }
        // Antisymmetric weights sum to exactly zero, so the uniform case is exact.
        let half: Vec<f64> = (0..len / 2).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let alpha: Vec<f64> = half.iter().flat_map(|&a| [a, -a]).collect();
        let (lhs, rhs) = lemma5_check(&alpha, &vec![1.0 / len as f64; len])?;
        if lhs != 0.0 || rhs != 0.0 {
            failures += 1;
        }
    }
    Ok((
        failures == 0,
        format!("30000 draws, max(lhs-rhs)={worst:.3e}, {failures} failures"),
    ))
}

fn argmin_stability() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e66);
    // Dyadic values keep every comparison exact.
    let scale = 2f64.powi(-24);
    let mut failures = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..=200);
        let gamma_units = rng.random_range(0..=1i64 << 16);
        let g: Vec<f64> = (0..len)
            .map(|_| rng.random_range(-(1i64 << 22)..=1i64 << 22) as f64 * scale)
            .collect();
        let ghat: Vec<f64> = g
            .iter()
            .map(|v| v + rng.random_range(-gamma_units..=gamma_units) as f64 * scale)
            .collect();
        let gamma = gamma_units as f64 * scale;
        let w = (0..len)
            .min_by(|&a, &b| ghat[a].total_cmp(&ghat[b]))
            .expect("non-empty");
        let min_g = g.iter().cloned().fold(f64::INFINITY, f64::min);
        if g[w] > min_g + 2.0 * gamma {
            failures += 1;
        }
    }
    Ok((failures == 0, format!("10000 tables, {failures} failures")))
}

fn deterministic_dominance() -> Result<(bool, String)> {
    let world = CoinWorld::with_bias(2, 1, 1, 0.25)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e33);
    let r = deterministic_dominance_check(&world, 1, 1000, &mut rng)?;
    Ok((
        r.dominated(),
        format!(
            "{} deterministic codings, best {:.6}; best of {} randomized {:.6}",
            r.deterministic_codings, r.best_deterministic, r.randomized_trials, r.best_randomized
        ),
    ))
}

fn subadditivity() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ad0);
    let mut failures = 0;
    let mut max_joint: f64 = 0.0;
    for _ in 0..100 {
        let (k, n) = loop {
            let k = rng.random_range(2..=4usize);
            let n = rng.random_range(1..=4usize);
            if k * n <= 8 {
                break (k, n);
            }
        };
        let world = CoinWorld::with_bias(k, n, 2, rng.random_range(0.01..0.49))?;
        let outcomes = 1usize << world.cells();
        let codings = [
            Coding::random(1, outcomes, &mut rng)?,
            Coding::random(2, outcomes, &mut rng)?,
        ];
        let r = subadditivity_check(&world, &codings)?;
        max_joint = max_joint.max(r.joint);
        let log_k = (k as f64).log2();
        let mut bounded = true;
        for c in &codings {
            let i = exact_mutual_information(&world, c)?;
            bounded &= i <= signal_entropy(&world, c)?.min(log_k) + 1e-12;
        }
        if !(r.holds && bounded) {
            failures += 1;
        }
    }
    Ok((
        failures == 0,
        format!("100 worlds, largest joint I={max_joint:.4} bits, {failures} failures"),
    ))
}

fn condition_calculators() -> Result<(bool, String)> {
    let r = theorem1_conditions(1_000_000, 1, 64, 25.0)?;
    let reference_case = r.log_scale.holds && r.coin_count.holds && r.concentration.holds && r.information.holds;
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let mut violations = 0;
    for _ in 0..100 {
        let m = 10u64.pow(rng.random_range(1..=7));
        let n = 10u64.pow(rng.random_range(0..=4));
        let bits = 1u64 << rng.random_range(1..=10);
        let d = rng.random_range(1..=8usize);
        if upper_bound_value(m, n, bits, d)? < lower_bound_value(m, n, bits, d, 1.0)? {
            violations += 1;
        }
    }
    Ok((
        reference_case && violations == 0,
        format!(
            "(1e6, B=64, C=25): information term {:.4}; sweep violations {violations}/100",
            r.information.lhs
        ),
    ))
}

fn lower_bound_reduction() -> Result<(bool, String)> {
    let mut cfg = ExperimentConfig::from_toml_str(REDUCTION_CONFIG)?;
    cfg.seeds = (0..2000).collect();
    let records = run_experiment(&cfg)?;
    let (mut successes, mut wrong, mut failed) = (0, 0, 0);
    for r in &records {
        if r.status == Status::EstimationFailed {
            failed += 1;
            continue;
        }
        let (sep, target) = r.hat.expect("hat families carry their target");
        if r.loss_gap.expect("ok rows have a gap") < sep {
            successes += 1;
            let fam = mrenc_core::functions::HatGridFamily::lower_bound(
                target,
                cfg.hat_constant,
                r.m,
                cfg.n,
                cfg.bits,
                cfg.d,
            )?;
            if fam.grid().nearest(r.theta.as_ref().expect("ok rows have theta")) != target {
                wrong += 1;
            }
        }
    }
    Ok((
        successes > 0 && wrong == 0,
        format!(
            "{} trials, {successes} below separation, {wrong} misidentified, {failed} without estimate",
            records.len()
        ),
    ))
}
