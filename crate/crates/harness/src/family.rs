use std::sync::Arc;

use mrenc_core::functions::{HatGridFamily, LossDistribution, MultiWell, PointMass, ReluFamily};
use rand::Rng;

use crate::config::{ExperimentConfig, FamilyKind};
use crate::error::Result;
use crate::streams::{stream_rng, Stream};

/// The loss distribution of one (m, seed) job.
#[derive(Clone)]
pub struct Problem {
    pub dist: Arc<dyn LossDistribution>,
    /// Present for the hat families, whose grid recovers the hidden point.
    pub hat: Option<HatGridFamily>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem").field("family", &self.dist.name()).finish()
    }
}

fn default_wells(d: usize) -> MultiWell {
    let a: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { 0.55 } else { -0.35 }).collect();
    let b: Vec<f64> = (0..d).map(|j| if j % 2 == 0 { -0.45 } else { 0.6 }).collect();
    MultiWell::new(vec![a, b], vec![0.1, 0.25]).expect("default wells are valid")
}

pub fn build_problem(cfg: &ExperimentConfig, m: u64, seed: u64) -> Result<Problem> {
    let mut rng = stream_rng(seed, Stream::Family, m, 0);
    let d = cfg.d;
    let problem = match cfg.family {
        FamilyKind::Relu => {
            // Drawn before anything m-dependent so every m sees the same truth.
            let mut truth_rng = stream_rng(seed, Stream::Family, 0, 0);
            let fam = match cfg.relu_truth {
                Some(t) => ReluFamily::new(t, cfg.noise_var)?,
                None => ReluFamily::random(cfg.noise_var, &mut truth_rng)?,
            };
            Problem {
                dist: Arc::new(fam),
                hat: None,
            }
        }
        FamilyKind::Cone => {
            let apex = cfg
                .cone_apex
                .clone()
                .unwrap_or_else(|| (0..d).map(|j| if j % 2 == 0 { 0.3 } else { -0.2 }).collect());
            Problem {
                dist: Arc::new(PointMass::cone(apex)),
                hat: None,
            }
        }
        FamilyKind::Wells => {
            let w = match (&cfg.well_centers, &cfg.well_depths) {
                (Some(c), Some(dp)) => MultiWell::new(c.clone(), dp.clone())?,
                _ => default_wells(d),
            };
            Problem {
                dist: Arc::new(PointMass::multi_well(w)),
                hat: None,
            }
        }
        FamilyKind::HatGrid => {
            let mb = (m * cfg.bits) as usize;
            let target = cfg.hat_target.unwrap_or_else(|| rng.random_range(0..mb));
            let fam = HatGridFamily::lower_bound(target, cfg.hat_constant, m, cfg.n, cfg.bits, d)?;
            Problem {
                dist: Arc::new(fam.clone()),
                hat: Some(fam),
            }
        }
        FamilyKind::NinePoint => {
            let target = cfg.hat_target.unwrap_or_else(|| rng.random_range(0..9));
            let fam = HatGridFamily::nine_point(target, m * cfg.n)?;
            Problem {
                dist: Arc::new(fam.clone()),
                hat: Some(fam),
            }
        }
    };
    Ok(problem)
}
