//! Builds a ready-to-optimize instance from a configuration and runs schemes on it.
//!
//! Channel gains are rescaled so that the noise power is one before any optimizer sees
//! them. Beamformers stay in physical units (sqrt(W)), and rates are unchanged by the
//! rescaling; only solver tolerances and penalty parameters become scale-free.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{mrt_beamformers, s3_run, zf_beamformers, S3Scheme};
use crate::beamformer::{BeamformerSet, Problem};
use crate::channel::{build_channel_stats, eval_subcarriers, ChannelStats, NoiseModel};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::isl::{latency_total, MessageLedger};
use crate::rate::{sum_rate, RateReport};
use crate::ring::run_ring;
use crate::scenario::{generate_scenario, Scenario};
use crate::schedule::{build_analog_beamformer, effective_channels, schedule_users, AnalogBeamformer, Schedule};
use crate::star::run_star;
use crate::wmmse::{run_central, StopRule, Trace};

#[derive(Debug, Clone)]
pub struct Instance {
    pub cfg: SystemConfig,
    pub scenario: Scenario,
    pub schedule: Schedule,
    pub analog: AnalogBeamformer,
    /// Physical-unit statistics with effective channels filled in.
    pub physical: ChannelStats,
    pub physical_noise: NoiseModel,
    /// Noise-normalized statistics used by every optimizer.
    pub stats: ChannelStats,
    pub noise: NoiseModel,
    pub budget_w: f64,
}

impl Instance {
    /// Scenario, schedule, analog stage and statistics on `k_eval` evenly spaced subcarriers.
    pub fn build(cfg: &SystemConfig, k_eval: usize) -> Result<Self> {
        cfg.validate()?;
        if k_eval == 0 || k_eval > cfg.num_subcarriers {
            return Err(Error::Validation {
                key: "k_eval".into(),
                reason: format!("must be in 1..={}, got {k_eval}", cfg.num_subcarriers),
            });
        }
        let scenario = generate_scenario(cfg);
        let schedule = schedule_users(&scenario, cfg);
        let analog = build_analog_beamformer(&scenario, &schedule, cfg);
        let mut physical = build_channel_stats(cfg, &scenario, &eval_subcarriers(cfg.num_subcarriers, k_eval));
        effective_channels(&mut physical, &analog);
        let physical_noise = NoiseModel::from_config(cfg);
        let (stats, noise) = physical.noise_normalized(&physical_noise);
        Ok(Instance {
            cfg: cfg.clone(),
            scenario,
            schedule,
            analog,
            physical,
            physical_noise,
            stats,
            noise,
            budget_w: cfg.power_per_subcarrier_w(),
        })
    }

    pub fn problem(&self) -> Problem<'_> {
        Problem {
            stats: &self.stats,
            schedule: &self.schedule,
            analog: &self.analog,
            noise: self.noise,
            budget_w: self.budget_w,
        }
    }

    pub fn run(&self, scheme: Scheme) -> Result<SchemeOutcome> {
        let problem = self.problem();
        let solver = &self.cfg.solver;
        let stop = StopRule::from_solver(solver);
        let plain = |bf: BeamformerSet, flagged: bool| -> Result<SchemeOutcome> {
            let report = sum_rate(&problem, &bf)?;
            Ok(SchemeOutcome {
                scheme,
                trace: Trace {
                    sum_rate: vec![report.objective],
                    utility: Vec::new(),
                },
                report,
                bf: Some(bf),
                iterations: 0,
                ledger: None,
                latency_units: 0,
                flagged,
            })
        };
        let iterative = |out: crate::wmmse::RunOutput| -> Result<SchemeOutcome> {
            let report = sum_rate(&problem, &out.bf)?;
            let latency_units = out.ledger.as_ref().map_or(0, |l| latency_total(l, out.iterations));
            Ok(SchemeOutcome {
                scheme,
                report,
                trace: out.trace,
                bf: Some(out.bf),
                iterations: out.iterations,
                ledger: out.ledger,
                latency_units,
                flagged: false,
            })
        };
        let s3 = |which: S3Scheme| -> Result<SchemeOutcome> {
            let out = s3_run(
                &self.cfg,
                &self.scenario,
                &self.stats,
                self.noise,
                self.budget_w,
                which,
                solver,
            )?;
            Ok(SchemeOutcome {
                scheme,
                trace: Trace {
                    sum_rate: vec![out.report.objective],
                    utility: Vec::new(),
                },
                report: out.report,
                bf: None,
                iterations: out.iterations,
                ledger: None,
                latency_units: 0,
                flagged: out.zf_regularized,
            })
        };
        match scheme {
            Scheme::Mrt => plain(mrt_beamformers(&problem), false),
            Scheme::Zf => {
                let (bf, reg) = zf_beamformers(&problem);
                plain(bf, reg)
            }
            Scheme::Central => iterative(run_central(&problem, &mrt_beamformers(&problem), stop, solver)?),
            Scheme::Ring => iterative(run_ring(&problem, &mrt_beamformers(&problem), stop, solver)?),
            Scheme::Star => iterative(run_star(
                &problem,
                &mrt_beamformers(&problem),
                stop,
                solver,
                &self.cfg.pdd,
                0,
            )?),
            Scheme::WmmseS3 => s3(S3Scheme::Wmmse),
            Scheme::MrtS3 => s3(S3Scheme::Mrt),
            Scheme::ZfS3 => s3(S3Scheme::Zf),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Central,
    Ring,
    Star,
    Mrt,
    Zf,
    WmmseS3,
    MrtS3,
    ZfS3,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::Central,
        Scheme::Ring,
        Scheme::Star,
        Scheme::Mrt,
        Scheme::Zf,
        Scheme::WmmseS3,
        Scheme::MrtS3,
        Scheme::ZfS3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Central => "central",
            Scheme::Ring => "ring",
            Scheme::Star => "star",
            Scheme::Mrt => "mrt",
            Scheme::Zf => "zf",
            Scheme::WmmseS3 => "wmmse_s3",
            Scheme::MrtS3 => "mrt_s3",
            Scheme::ZfS3 => "zf_s3",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub report: RateReport,
    pub trace: Trace,
    /// Networked schemes only; S3 beamformers live on their own analog stage.
    pub bf: Option<BeamformerSet>,
    pub iterations: usize,
    pub ledger: Option<MessageLedger>,
    pub latency_units: u64,
    /// ZF fell back to the regularized inverse.
    pub flagged: bool,
}
