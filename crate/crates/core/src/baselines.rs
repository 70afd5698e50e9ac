//! MRT and ZF networked beamformers and the single-satellite-service (S3) baselines.

use nalgebra::DMatrix;

use crate::beamformer::{BeamformerSet, Problem};
use crate::channel::{ChannelStats, NoiseModel};
use crate::config::{SolverConfig, SystemConfig};
use crate::error::Result;
use crate::rate::{sum_rate, RateReport};
use crate::scenario::Scenario;
use crate::schedule::{build_analog_beamformer, effective_channels, nearest_indices, AnalogBeamformer, Schedule};
use crate::wmmse::{run_central, StopRule};
use crate::C64;

/// Relative singular-value floor below which the ZF stack counts as rank deficient.
pub const ZF_RANK_TOL: f64 = 1e-12;
/// Tikhonov weight, relative to `||H||_F^2`, of the fallback regularized inverse.
pub const ZF_REGULARIZATION: f64 = 1e-9;

/// Scales `w` so that `tr(W^H G W) = budget`; zero stays zero.
fn scale_to_budget(w: &mut DMatrix<C64>, gram: &DMatrix<C64>, budget: f64) {
    if w.nrows() == 0 {
        return;
    }
    let p = (w.adjoint() * gram * &*w).trace().re;
    if p > 0.0 {
        *w *= C64::from((budget / p).sqrt());
    }
}

/// `w_{s,u} = zeta_s conj(g_{s,u})` for scheduled pairs, full budget per satellite.
pub fn mrt_beamformers(problem: &Problem) -> BeamformerSet {
    let mut bf = BeamformerSet::zeros(problem.schedule, problem.num_eval());
    for s in 0..problem.num_sats() {
        let mut w = DMatrix::zeros(problem.analog.f[s].ncols(), problem.num_uts());
        for &u in &problem.schedule.served[s] {
            w.set_column(u, &problem.stats.g(s, u).conjugate());
        }
        scale_to_budget(&mut w, &problem.analog.gram[s], problem.budget_w);
        for per_k in &mut bf.weights {
            per_k[s] = w.clone();
        }
    }
    bf
}

/// Zero-forcing per satellite via the pseudo-inverse of its scheduled channel rows, with a
/// common scale to the full budget. The flag reports whether any satellite fell back to
/// the regularized inverse.
pub fn zf_beamformers(problem: &Problem) -> (BeamformerSet, bool) {
    let mut bf = BeamformerSet::zeros(problem.schedule, problem.num_eval());
    let mut regularized = false;
    for s in 0..problem.num_sats() {
        let served = &problem.schedule.served[s];
        let t = problem.analog.f[s].ncols();
        let mut w = DMatrix::zeros(t, problem.num_uts());
        if !served.is_empty() {
            let h = DMatrix::from_fn(served.len(), t, |r, c| problem.stats.g(s, served[r])[c]);
            let (pinv, reg) = zf_inverse(&h);
            regularized |= reg;
            for (i, &u) in served.iter().enumerate() {
                w.set_column(u, &pinv.column(i));
            }
        }
        scale_to_budget(&mut w, &problem.analog.gram[s], problem.budget_w);
        for per_k in &mut bf.weights {
            per_k[s] = w.clone();
        }
    }
    (bf, regularized)
}

/// Right inverse of `h`; falls back to `h^H (h h^H + eps I)^{-1}` when rank deficient.
pub fn zf_inverse(h: &DMatrix<C64>) -> (DMatrix<C64>, bool) {
    let svd = h.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax > 0.0 && smin > ZF_RANK_TOL * smax && h.nrows() <= h.ncols() {
        let pinv = h
            .clone()
            .pseudo_inverse(ZF_RANK_TOL * smax)
            .expect("non-negative tolerance");
        return (pinv, false);
    }
    let eps = ZF_REGULARIZATION * h.norm_squared().max(f64::MIN_POSITIVE);
    let n = h.nrows();
    let m = h * h.adjoint() + DMatrix::<C64>::identity(n, n) * C64::from(eps);
    let inv = m.try_inverse().unwrap_or_else(|| DMatrix::zeros(n, n));
    (h.adjoint() * inv, true)
}

/// Nearest-satellite assignment, capped at the `N_RF` nearest users per satellite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct S3Assignment {
    /// Serving satellite per UT; `None` if dropped by the cap.
    pub serving: Vec<Option<usize>>,
    pub served: Vec<Vec<usize>>,
}

pub fn s3_assignment(scn: &Scenario, cfg: &SystemConfig) -> S3Assignment {
    let (ns, nu) = (scn.num_sats(), scn.num_uts());
    let nearest: Vec<usize> = (0..nu)
        .map(|u| nearest_indices(&(0..ns).map(|s| scn.distance(s, u)).collect::<Vec<_>>(), 1)[0])
        .collect();
    let mut serving = vec![None; nu];
    let served: Vec<Vec<usize>> = (0..ns)
        .map(|s| {
            let cand: Vec<usize> = (0..nu).filter(|&u| nearest[u] == s).collect();
            let d: Vec<f64> = cand.iter().map(|&u| scn.distance(s, u)).collect();
            let keep: Vec<usize> = nearest_indices(&d, cfg.num_rfc).into_iter().map(|i| cand[i]).collect();
            keep.iter().for_each(|&u| serving[u] = Some(s));
            keep
        })
        .collect();
    S3Assignment { serving, served }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S3Scheme {
    Wmmse,
    Mrt,
    Zf,
}

/// Outcome of an S3 baseline on the full network.
#[derive(Debug, Clone)]
pub struct S3Output {
    pub bf: BeamformerSet,
    pub report: RateReport,
    pub schedule: Schedule,
    pub analog: AnalogBeamformer,
    /// Largest per-satellite WMMSE iteration count.
    pub iterations: usize,
    pub zf_regularized: bool,
}

/// Each satellite designs beamformers for its assigned UTs alone, as if no other satellite
/// existed; rates are then evaluated on the full network with all interference.
#[allow(clippy::too_many_arguments)]
pub fn s3_run(
    cfg: &SystemConfig,
    scn: &Scenario,
    stats: &ChannelStats,
    noise: NoiseModel,
    budget_w: f64,
    scheme: S3Scheme,
    solver: &SolverConfig,
) -> Result<S3Output> {
    let assign = s3_assignment(scn, cfg);
    let schedule = Schedule::from_served(stats.num_uts, assign.served.clone());
    let analog = build_analog_beamformer(scn, &schedule, cfg);
    let mut stats = stats.clone();
    effective_channels(&mut stats, &analog);

    let mut bf = BeamformerSet::zeros(&schedule, stats.num_eval());
    let mut iterations = 0;
    let mut zf_regularized = false;
    for s in 0..stats.num_sats {
        let users = &schedule.served[s];
        if users.is_empty() {
            continue;
        }
        let sub_stats = stats.subset(&[s], users);
        let sub_sched = Schedule::from_served(users.len(), vec![(0..users.len()).collect()]);
        let sub_analog = AnalogBeamformer {
            f: vec![analog.f[s].clone()],
            gram: vec![analog.gram[s].clone()],
        };
        let sub = Problem {
            stats: &sub_stats,
            schedule: &sub_sched,
            analog: &sub_analog,
            noise,
            budget_w,
        };
        let sub_bf = match scheme {
            S3Scheme::Mrt => mrt_beamformers(&sub),
            S3Scheme::Zf => {
                let (b, reg) = zf_beamformers(&sub);
                zf_regularized |= reg;
                b
            }
            S3Scheme::Wmmse => {
                let out = run_central(&sub, &mrt_beamformers(&sub), StopRule::from_solver(solver), solver)?;
                iterations = iterations.max(out.iterations);
                out.bf
            }
        };
        for k in 0..stats.num_eval() {
            for (i, &u) in users.iter().enumerate() {
                bf.weights[k][s].set_column(u, &sub_bf.weights[k][0].column(i));
            }
        }
    }
    let full = Problem {
        stats: &stats,
        schedule: &schedule,
        analog: &analog,
        noise,
        budget_w,
    };
    let report = sum_rate(&full, &bf)?;
    Ok(S3Output {
        bf,
        report,
        schedule,
        analog,
        iterations,
        zf_regularized,
    })
}
