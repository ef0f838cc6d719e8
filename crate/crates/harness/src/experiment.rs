//! Sweep runner: every (m, seed) job draws fresh data, runs each estimator
//! end to end and scores it against the true loss.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use mrenc_core::encoder::{build_packet, local_minimizer, BitLayout, Quantization, SignalPacket};
use mrenc_core::functions::LossSample;
use mrenc_core::grids::ResolutionParams;
use mrenc_core::server::{aggregate, baseline_average, baseline_single};
use rayon::prelude::*;

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::family::{build_problem, Problem};
use crate::oracle::loss_gap;
use crate::streams::{stream_rng, Stream};

pub const CSV_HEADER: [&str; 10] = [
    "estimator",
    "m",
    "n",
    "B",
    "d",
    "seed",
    "loss_gap",
    "loss_gap_se",
    "wall_ms",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    EstimationFailed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::EstimationFailed => "estimation-failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub estimator: EstimatorKind,
    pub m: u64,
    pub n: u64,
    pub bits: u64,
    pub d: usize,
    pub seed: u64,
    pub loss_gap: Option<f64>,
    pub loss_gap_se: Option<f64>,
    pub wall_ms: u64,
    pub status: Status,
    pub theta: Option<Vec<f64>>,
    /// Largest serialized packet, in bits, for MRE-NC rows.
    pub max_packet_bits: Option<u64>,
    /// Separation threshold and hidden point, for hat families.
    pub hat: Option<(f64, usize)>,
}

impl ExperimentRecord {
    fn csv_row(&self) -> [String; 10] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.estimator.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.bits.to_string(),
            self.d.to_string(),
            self.seed.to_string(),
            opt(self.loss_gap),
            opt(self.loss_gap_se),
            self.wall_ms.to_string(),
            self.status.to_string(),
        ]
    }
}

pub fn resolution(cfg: &ExperimentConfig, m: u64) -> Result<ResolutionParams> {
    let dims = cfg.dims(m)?;
    Ok(match cfg.delta {
        Some(delta) => ResolutionParams::with_delta(&dims, delta)?,
        None => ResolutionParams::from_dims(&dims)?,
    })
}

struct Job<'a> {
    cfg: &'a ExperimentConfig,
    m: u64,
    seed: u64,
    problem: Problem,
    params: ResolutionParams,
    samples: Vec<Vec<LossSample>>,
}

impl Job<'_> {
    fn record(&self, estimator: EstimatorKind, theta: Option<Vec<f64>>, started: Instant) -> Result<ExperimentRecord> {
        let wall_ms = if self.cfg.timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        // Same oracle stream for every estimator of the job.
        let mut rng = stream_rng(self.seed, Stream::Oracle, self.m, 0);
        let gap = match &theta {
            Some(th) => Some(loss_gap(self.problem.dist.as_ref(), th, self.cfg.mc_samples, &mut rng)?),
            None => None,
        };
        Ok(ExperimentRecord {
            estimator,
            m: self.m,
            n: self.cfg.n,
            bits: self.cfg.bits,
            d: self.cfg.d,
            seed: self.seed,
            loss_gap: gap.map(|g| g.mean),
            loss_gap_se: gap.map(|g| g.se),
            wall_ms,
            status: if theta.is_some() {
                Status::Ok
            } else {
                Status::EstimationFailed
            },
            theta,
            max_packet_bits: None,
            hat: self.problem.hat.as_ref().map(|h| (h.separation(), h.target())),
        })
    }

    fn run_mre_nc(&self) -> Result<ExperimentRecord> {
        let started = Instant::now();
        let dims = self.cfg.dims(self.m)?;
        let mode = self.cfg.quantization_mode();
        let layout = BitLayout::new(&dims, &self.params, mode)?;
        let mut packets = Vec::with_capacity(self.samples.len());
        let mut max_bits = 0u64;
        for (i, s) in self.samples.iter().enumerate() {
            let mut rng = stream_rng(self.seed, Stream::Packet, self.m, i as u64);
            let pkt = build_packet(i, s, &self.params, &layout, &mut rng)?;
            let bytes = pkt.to_bytes(&layout);
            let bits = layout.packet_len();
            if mode == Quantization::Budgeted && (bits > self.cfg.bits || bytes.len() as u64 * 8 >= bits + 8) {
                return Err(HarnessError::Runtime(format!(
                    "machine {i} produced a {bits}-bit packet over the {}-bit budget",
                    self.cfg.bits
                )));
            }
            max_bits = max_bits.max(bits);
            packets.push(SignalPacket::from_bytes(i, &bytes, &layout)?);
        }
        log::debug!(
            "m={} seed={} max packet {} bits (budget {})",
            self.m,
            self.seed,
            max_bits,
            self.cfg.bits
        );
        let (_, theta) = aggregate(&packets, &layout);
        let theta = match theta {
            Ok(t) => Some(t),
            Err(mrenc_core::Error::EstimationFailed) => None,
            Err(e) => return Err(e.into()),
        };
        let mut rec = self.record(EstimatorKind::MreNc, theta, started)?;
        rec.max_packet_bits = Some(max_bits);
        Ok(rec)
    }

    fn local_minimizers(&self) -> Result<Vec<Vec<f64>>> {
        self.samples
            .iter()
            .map(|s| Ok(local_minimizer(s, &self.params, self.cfg.d)?))
            .collect()
    }

    fn run(&self) -> Result<Vec<ExperimentRecord>> {
        let mut out = Vec::new();
        let mut minimizers = None;
        for &est in &self.cfg.estimators {
            let rec = match est {
                EstimatorKind::MreNc => self.run_mre_nc()?,
                EstimatorKind::Average | EstimatorKind::Single => {
                    let started = Instant::now();
                    if minimizers.is_none() {
                        minimizers = Some(self.local_minimizers()?);
                    }
                    let mins = minimizers.as_ref().expect("computed above");
                    let theta = if est == EstimatorKind::Average {
                        baseline_average(mins)?
                    } else {
                        let mut rng = stream_rng(self.seed, Stream::Single, self.m, 0);
                        baseline_single(mins, &mut rng)?
                    };
                    self.record(est, Some(theta), started)?
                }
            };
            out.push(rec);
        }
        Ok(out)
    }
}

fn run_job(cfg: &ExperimentConfig, m: u64, seed: u64) -> Result<Vec<ExperimentRecord>> {
    let problem = build_problem(cfg, m, seed)?;
    let params = resolution(cfg, m)?;
    let samples = (0..m)
        .map(|i| {
            // Machine i's data does not depend on m, so sweeps are nested.
            let mut rng = stream_rng(seed, Stream::Data, 0, i);
            (0..cfg.n).map(|_| problem.dist.sample(&mut rng)).collect()
        })
        .collect();
    Job {
        cfg,
        m,
        seed,
        problem,
        params,
        samples,
    }
    .run()
}

/// Runs every (m, seed) job; records are sorted by estimator, m, then seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let jobs: Vec<(u64, u64)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let nested = jobs
        .par_iter()
        .map(|&(m, seed)| run_job(cfg, m, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<ExperimentRecord> = nested.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.estimator, r.m, r.seed));
    let failed = records.iter().filter(|r| r.status == Status::EstimationFailed).count();
    if failed > 0 {
        log::warn!("{failed} of {} rows failed to produce an estimate", records.len());
    }
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush().map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(())
}

pub fn write_csv_file(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::Io {
        path: path.into(),
        source: e,
    })?;
    write_csv(records, std::io::BufWriter::new(file))
}
