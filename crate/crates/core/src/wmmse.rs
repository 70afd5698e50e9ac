//! Centralized WMMSE: closed-form receiver/weight updates alternating with the coupled
//! multi-satellite beamformer QCQP.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::beamformer::{BeamformerSet, Problem};
use crate::config::SolverConfig;
use crate::error::Result;
use crate::isl::MessageLedger;
use crate::qcqp::{solve_multiblock_qcqp, ColumnQuadratic, CoupledQcqp, PowerConstraint, QcqpBlock, UserWeights};
use crate::rate::{self, sinr_terms, Projections, SinrTerms};
use crate::C64;

/// Relative-change stopping rule on the sum-rate trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub tol: f64,
    pub max_iters: usize,
}

impl StopRule {
    pub fn from_solver(cfg: &SolverConfig) -> Self {
        StopRule {
            tol: cfg.wmmse_tol,
            max_iters: cfg.wmmse_max_iters,
        }
    }

    /// Whether the last step of `trace` is below the tolerance.
    pub fn converged(&self, trace: &[f64]) -> bool {
        match trace {
            [.., prev, last] => (last - prev).abs() <= self.tol * prev.abs().max(f64::MIN_POSITIVE),
            _ => false,
        }
    }
}

/// Per-iteration traces; entry 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    /// Mean over evaluated subcarriers of `sum_u R_u`, bit/s/Hz.
    pub sum_rate: Vec<f64>,
    /// `sum_u (ln nu_u - nu_u Upsilon_u)` at the optimal receiver and weights.
    pub utility: Vec<f64>,
}

impl Trace {
    pub fn push(&mut self, problem: &Problem, bf: &BeamformerSet, approximate: bool) -> Result<()> {
        let report = rate::sum_rate(problem, bf)?;
        self.sum_rate.push(if approximate {
            report.objective_approx
        } else {
            report.objective
        });
        self.utility.push(rate::wmmse_utility(problem, bf, approximate));
        Ok(())
    }
}

/// Result of any iterative scheme.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub bf: BeamformerSet,
    pub trace: Trace,
    /// Completed iterations (Ring: full loops; Star: outer iterations).
    pub iterations: usize,
    pub ledger: Option<MessageLedger>,
}

/// Receivers `mu`, weights `nu` and MSEs `Upsilon`, indexed `[k][u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState {
    pub mu: Vec<Vec<C64>>,
    pub nu: Vec<Vec<f64>>,
    pub upsilon: Vec<Vec<f64>>,
}

impl AuxiliaryState {
    pub fn weights(&self, k: usize) -> Vec<UserWeights> {
        self.mu[k]
            .iter()
            .zip(&self.nu[k])
            .map(|(&mu, &nu)| UserWeights { mu, nu })
            .collect()
    }
}

/// `mu = conj(S) / (|S|^2 + Psi)` with `Psi` the noise-plus-interference term.
pub fn mu_from_terms(t: &SinrTerms, sigma2: f64) -> C64 {
    let psi = t.variance + t.iui_exact + sigma2;
    t.mean.conj() / (t.mean.norm_sqr() + psi)
}

pub fn upsilon_from_terms(mu: C64, t: &SinrTerms, sigma2: f64) -> f64 {
    let psi = t.variance + t.iui_exact + sigma2;
    (C64::new(1.0, 0.0) - mu * t.mean).norm_sqr() + mu.norm_sqr() * psi
}

pub fn update_mu(problem: &Problem, bf: &BeamformerSet, u: usize, k: usize) -> C64 {
    let proj = Projections::new(problem.stats, bf, k);
    mu_from_terms(&sinr_terms(problem.stats, &proj, u, k), problem.noise.sigma2)
}

pub fn update_nu(upsilon: f64) -> f64 {
    assert!(upsilon > 0.0, "MSE must be positive, got {upsilon}");
    1.0 / upsilon
}

/// Updates `mu`, then `Upsilon` and `nu`, for every user and subcarrier.
pub fn update_auxiliary(problem: &Problem, bf: &BeamformerSet) -> AuxiliaryState {
    let sigma2 = problem.noise.sigma2;
    let mut aux = AuxiliaryState {
        mu: Vec::new(),
        nu: Vec::new(),
        upsilon: Vec::new(),
    };
    for k in 0..problem.num_eval() {
        let proj = Projections::new(problem.stats, bf, k);
        let (mut mu, mut nu, mut ups) = (Vec::new(), Vec::new(), Vec::new());
        for u in 0..problem.num_uts() {
            let t = sinr_terms(problem.stats, &proj, u, k);
            let m = mu_from_terms(&t, sigma2);
            let y = upsilon_from_terms(m, &t, sigma2);
            mu.push(m);
            ups.push(y);
            nu.push(update_nu(y));
        }
        aux.mu.push(mu);
        aux.nu.push(nu);
        aux.upsilon.push(ups);
    }
    aux
}

/// Coupled QCQP minimizing `sum_u nu_u Upsilon_u` over the beamformers of subcarrier `k`.
pub fn central_qcqp(problem: &Problem, aux: &AuxiliaryState, k: usize) -> CoupledQcqp {
    let stats = problem.stats;
    let (ns, nu) = (stats.num_sats, stats.num_uts);
    let c: Vec<f64> = (0..nu).map(|u| aux.nu[k][u] * aux.mu[k][u].norm_sqr()).collect();
    let t = |s: usize| stats.g(s, 0).len();

    let blocks = (0..ns)
        .map(|s| {
            let mut a = DMatrix::zeros(t(s), t(s));
            for (u, &cu) in c.iter().enumerate() {
                let g = stats.g(s, u);
                a += g.conjugate() * g.transpose() * C64::from(cu * stats.link(s, u).gamma[k]);
            }
            let a = Arc::new(a);
            let columns = problem.schedule.served[s].clone();
            let cols = columns
                .iter()
                .map(|&l| {
                    let link = stats.link(s, l);
                    let coef = aux.mu[k][l].conj() * (aux.nu[k][l] * link.los_amplitude(k));
                    ColumnQuadratic {
                        a: a.clone(),
                        b: link.g_eff.conjugate() * coef,
                    }
                })
                .collect();
            QcqpBlock {
                columns,
                cols,
                con: PowerConstraint {
                    gram: problem.analog.gram[s].clone(),
                    budget: problem.budget_w,
                },
            }
        })
        .collect();

    let cross = (0..ns)
        .map(|s| {
            (0..ns)
                .map(|j| {
                    if j == s || t(s) == 0 || t(j) == 0 {
                        return None;
                    }
                    let mut m = DMatrix::zeros(t(s), t(j));
                    for (u, &cu) in c.iter().enumerate() {
                        let (ls, lj) = (stats.link(s, u), stats.link(j, u));
                        let coef = cu * ls.los_amplitude(k) * lj.los_amplitude(k);
                        m += ls.g_eff.conjugate() * lj.g_eff.transpose() * C64::from(coef);
                    }
                    Some(m)
                })
                .collect()
        })
        .collect();

    CoupledQcqp {
        num_columns: nu,
        blocks,
        cross,
    }
}

/// Beamformer step of one WMMSE iteration, warm-started from `current`.
pub fn central_beamformer_update(
    problem: &Problem,
    aux: &AuxiliaryState,
    current: &BeamformerSet,
    solver: &SolverConfig,
) -> Result<BeamformerSet> {
    let weights = (0..problem.num_eval())
        .into_par_iter()
        .map(|k| {
            let qp = central_qcqp(problem, aux, k);
            let sol = solve_multiblock_qcqp(
                &qp,
                current.weights[k].clone(),
                1e-12,
                solver.bisect_tol,
                solver.bcd_sweeps,
            )?;
            Ok(sol.w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamformerSet {
        weights,
        mask: current.mask.clone(),
    })
}

/// Centralized WMMSE from `init`. All subcarriers iterate in lockstep and stop together.
pub fn run_central(
    problem: &Problem,
    init: &BeamformerSet,
    stop: StopRule,
    solver: &SolverConfig,
) -> Result<RunOutput> {
    problem.check_dims(init)?;
    let mut bf = init.clone();
    let mut trace = Trace::default();
    trace.push(problem, &bf, false)?;
    let mut iterations = 0;
    while iterations < stop.max_iters {
        let aux = update_auxiliary(problem, &bf);
        bf = central_beamformer_update(problem, &aux, &bf, solver)?;
        trace.push(problem, &bf, false)?;
        iterations += 1;
        log::debug!("central iter {iterations}: {:.6}", trace.sum_rate[iterations]);
        if stop.converged(&trace.sum_rate) {
            break;
        }
    }
    Ok(RunOutput {
        bf,
        trace,
        iterations,
        ledger: None,
    })
}
