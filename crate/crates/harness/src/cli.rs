//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mrenc_core::bounds::{assumption_check, lower_bound_value, upper_bound_value};
use mrenc_core::coinflip::{
    deterministic_dominance_check, exact_mutual_information, fano_bound, lemma5_check, min_machines, ml_nine_coin_test,
    random_alpha, random_distribution, signal_entropy, subadditivity_check, theorem1_conditions, Coding, CoinWorld,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::{config_err, HarnessError, Result};
use crate::experiment::{run_experiment, write_csv, write_csv_file};
use crate::verify;

#[derive(Debug, Parser)]
#[command(
    name = "mrenc",
    version,
    about = "Communication-constrained distributed minimization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment sweep and write one CSV row per (estimator, m, seed).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; falls back to the config's `output`, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Coin-flipping lower-bound tools.
    Coinflip {
        #[command(subcommand)]
        op: CoinOp,
    },
    /// Evaluate the lower and upper bounds and their side conditions.
    Bounds(BoundsArgs),
    /// Run the acceptance criteria.
    Verify {
        /// Restrict to the named criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// List criterion names and exit.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Debug, Args)]
pub struct WorldArgs {
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Bias of the special coin; overrides `--c`.
    #[arg(long)]
    pub bias: Option<f64>,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    pub c: f64,
}

impl WorldArgs {
    fn world(&self) -> Result<CoinWorld> {
        Ok(match self.bias {
            Some(b) => CoinWorld::with_bias(self.k, self.n, self.m, b)?,
            None => CoinWorld::new(self.k, self.n, self.m, self.c)?,
        })
    }

    fn describe(&self, w: &CoinWorld) -> String {
        format!("k={};n={};m={};bias={}", self.k, self.n, self.m, w.bias())
    }
}

#[derive(Debug, Subcommand)]
pub enum CoinOp {
    /// Maximum-likelihood test on nine coins.
    Ml {
        #[arg(long, default_value_t = 350_000)]
        mn: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact mutual information between the biased coin and one signal.
    Mi {
        #[command(flatten)]
        world: WorldArgs,
        /// Signal width; a random coding is drawn. Without it the signal is coin 0's first flip.
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fano lower bound on the error probability.
    Fano {
        #[arg(long)]
        info: f64,
        #[arg(long)]
        k: u64,
    },
    /// Randomized sweep of the weighted-sum inequality.
    Lemma5 {
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the best deterministic coding against random randomized ones.
    Dominance {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, default_value_t = 1)]
        bits: u32,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Joint information of independent machines against the sum of marginals.
    Subadditivity {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, default_value_t = 1)]
        bits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Lower-bound side conditions, optionally with the smallest passing m.
    Conditions {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long = "B", alias = "bits")]
        bits: u64,
        #[arg(long = "C", alias = "c", default_value_t = 25.0)]
        c: f64,
        /// Search bound for the smallest m satisfying every condition.
        #[arg(long)]
        search_max: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long = "B", alias = "bits")]
    pub bits: u64,
    #[arg(long)]
    pub d: usize,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    pub c: f64,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn io_err(e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::Simulate {
            config,
            out: path,
            threads,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = threads {
                if t == 0 {
                    return Err(config_err!("--threads must be positive"));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            }
            let records = run_experiment(&cfg)?;
            match path.or(cfg.output.clone()) {
                Some(p) => write_csv_file(&records, &p)?,
                None => write_csv(&records, &mut *out)?,
            }
            Ok(0)
        }
        Command::Coinflip { op } => {
            let rows = coinflip(op)?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["operation", "parameters", "value", "stderr"])?;
            for r in rows {
                w.write_record([r.0, r.1, fmt(r.2), r.3.map(fmt).unwrap_or_default()])?;
            }
            w.flush().map_err(io_err)?;
            Ok(0)
        }
        Command::Bounds(a) => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["quantity", "value", "holds"])?;
            w.write_record(["lower_bound", &fmt(lower_bound_value(a.m, a.n, a.bits, a.d, a.c)?), ""])?;
            w.write_record(["upper_bound", &fmt(upper_bound_value(a.m, a.n, a.bits, a.d)?), ""])?;
            let asm = assumption_check(a.m, a.n, a.d);
            for (name, c) in [
                ("assumption_machines", asm.machines),
                ("assumption_log_scale", asm.log_scale),
            ] {
                w.write_record([name, &fmt(c.lhs), &c.holds.to_string()])?;
            }
            let cond = theorem1_conditions(a.m, a.n, a.bits, a.c)?;
            for (name, c) in cond.checks() {
                w.write_record([&format!("condition_{name}"), &fmt(c.lhs), &c.holds.to_string()])?;
            }
            w.flush().map_err(io_err)?;
            Ok(0)
        }
        Command::Verify { only, list } => {
            let known: Vec<&str> = verify::criteria().iter().map(|c| c.name).collect();
            if list {
                for k in known {
                    writeln!(out, "{k}").map_err(io_err)?;
                }
                return Ok(0);
            }
            if let Some(bad) = only.iter().find(|o| !known.contains(&o.as_str())) {
                return Err(config_err!("unknown criterion `{bad}`"));
            }
            let mut all = true;
            for outcome in verify::run_all(&only) {
                writeln!(out, "{}", outcome.line()).map_err(io_err)?;
                all &= outcome.passed;
            }
            Ok(if all { 0 } else { 2 })
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

type Row = (String, String, f64, Option<f64>);

fn row(op: &str, params: String, value: f64, se: Option<f64>) -> Row {
    (op.to_string(), params, value, se)
}

fn coinflip(op: CoinOp) -> Result<Vec<Row>> {
    Ok(match op {
        CoinOp::Ml { mn, trials, seed } => {
            let r = ml_nine_coin_test(mn, trials, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let p = format!("mn={mn};trials={trials};seed={seed}");
            vec![
                row("ml_error", p.clone(), r.error_rate, Some(r.error_se)),
                row(
                    "ml_biased_exceeds",
                    p.clone(),
                    r.biased_exceeds,
                    Some(r.biased_exceeds_se),
                ),
                row("ml_fair_below", p, r.fair_below, Some(r.fair_below_se)),
            ]
        }
        CoinOp::Mi { world, bits, seed } => {
            let w = world.world()?;
            let outcomes = 1usize << w.cells();
            let coding = match bits {
                Some(b) => Coding::random(b, outcomes, &mut ChaCha8Rng::seed_from_u64(seed))?,
                None => Coding::coin_bit(&w, 0)?,
            };
            let p = format!(
                "{};bits={};seed={seed}",
                world.describe(&w),
                bits.map_or("coin".into(), |b| b.to_string())
            );
            vec![
                row(
                    "mutual_information",
                    p.clone(),
                    exact_mutual_information(&w, &coding)?,
                    None,
                ),
                row("signal_entropy", p, signal_entropy(&w, &coding)?, None),
            ]
        }
        CoinOp::Fano { info, k } => {
            vec![row(
                "fano_bound",
                format!("info={info};k={k}"),
                fano_bound(info, k)?,
                None,
            )]
        }
        CoinOp::Lemma5 { n, trials, seed } => {
            if !(1..=16).contains(&n) {
                return Err(config_err!("n must be in 1..=16"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let len = 1usize << n;
            let (mut worst, mut failures) = (f64::NEG_INFINITY, 0u64);
            for _ in 0..trials {
                let (lhs, rhs) = lemma5_check(&random_alpha(len, &mut rng), &random_distribution(len, &mut rng))?;
                worst = worst.max(lhs - rhs);
                failures += u64::from(lhs > rhs + 1e-9);
            }
            let p = format!("n={n};trials={trials};seed={seed}");
            vec![
                row("lemma5_max_excess", p.clone(), worst, None),
                row("lemma5_failures", p, failures as f64, None),
            ]
        }
        CoinOp::Dominance {
            world,
            bits,
            trials,
            seed,
        } => {
            let w = world.world()?;
            let r = deterministic_dominance_check(&w, bits, trials, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let p = format!("{};bits={bits};trials={trials};seed={seed}", world.describe(&w));
            vec![
                row("best_deterministic", p.clone(), r.best_deterministic, None),
                row("best_randomized", p.clone(), r.best_randomized, None),
                row("violations", p, r.violations as f64, None),
            ]
        }
        CoinOp::Subadditivity { world, bits, seed } => {
            let w = world.world()?;
            let outcomes = 1usize << w.cells();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let codings = (0..w.flippers())
                .map(|_| Coding::random(bits, outcomes, &mut rng))
                .collect::<mrenc_core::Result<Vec<_>>>()?;
            let r = subadditivity_check(&w, &codings)?;
            let p = format!("{};bits={bits};seed={seed}", world.describe(&w));
            vec![
                row("joint_information", p.clone(), r.joint, None),
                row("marginal_sum", p.clone(), r.marginal_sum(), None),
                row("subadditive", p, f64::from(u8::from(r.holds)), None),
            ]
        }
        CoinOp::Conditions {
            m,
            n,
            bits,
            c,
            search_max,
        } => {
            let r = theorem1_conditions(m, n, bits, c)?;
            let p = format!("m={m};n={n};B={bits};C={c}");
            let mut rows: Vec<Row> = r
                .checks()
                .iter()
                .map(|(name, chk)| {
                    row(
                        &format!("condition_{name}"),
                        format!("{p};threshold={}", chk.rhs),
                        chk.lhs,
                        None,
                    )
                })
                .collect();
            rows.push(row("all_hold", p, f64::from(u8::from(r.all_hold())), None));
            if let Some(max) = search_max {
                let found = min_machines(n, bits, c, max)?;
                rows.push(row(
                    "min_machines",
                    format!("n={n};B={bits};C={c};max={max}"),
                    found.map_or(f64::NAN, |v| v as f64),
                    None,
                ));
            }
            rows
        }
    })
}
