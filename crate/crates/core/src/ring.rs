//! Sequential decentralized WMMSE over a ring of satellites.
//!
//! Each satellite receives the network intermediates, removes its own contribution,
//! updates the receivers and weights from the approximate bound, solves its local QCQP,
//! adds its new contribution back and relays the result to the next satellite.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::beamformer::{BeamformerSet, Problem};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::intermediates::Intermediates;
use crate::isl::{record_message, MessageLedger, Topology};
use crate::qcqp::{solve_single_constraint_qcqp, ColumnQuadratic, PowerConstraint, UserWeights};
use crate::wmmse::{RunOutput, StopRule, Trace};
use crate::C64;

/// Negative values above this are rounding noise and are clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-9;

/// How negative entries of `global - own` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePolicy {
    /// Clamp small negatives, error on larger ones.
    Strict,
    /// Clamp every negative entry.
    Clamp,
}

/// `reference` is the magnitude the difference was formed from.
fn clamp_entry(x: f64, reference: f64, name: &'static str, user: usize, policy: NegativePolicy) -> Result<f64> {
    if x >= 0.0 {
        return Ok(x);
    }
    match policy {
        NegativePolicy::Strict if x < -NEGATIVE_SLACK * reference.max(1.0) => {
            Err(Error::NegativeIntermediate { name, user, value: x })
        }
        _ => Ok(0.0),
    }
}

/// Contribution of all satellites except `s`: `inter` minus what `w_s` produces.
pub fn extract_local_with(
    inter: &Intermediates,
    problem: &Problem,
    w_s: &DMatrix<C64>,
    s: usize,
    k: usize,
    policy: NegativePolicy,
) -> Result<Intermediates> {
    let own = Intermediates::contribution(problem.stats, w_s, s, k);
    let mut rest = inter.axpy(-1.0, &own);
    let nu = rest.num_uts();
    for u in 0..nu {
        rest.p[u] = clamp_entry(rest.p[u], inter.p[u], "P", u, policy)?;
        for l in 0..nu {
            rest.q[(u, l)] = if l == u {
                0.0
            } else {
                clamp_entry(rest.q[(u, l)], inter.q[(u, l)], "Q", u, policy)?
            };
        }
    }
    Ok(rest)
}

pub fn extract_local(
    inter: &Intermediates,
    problem: &Problem,
    w_s: &DMatrix<C64>,
    s: usize,
    k: usize,
) -> Result<Intermediates> {
    extract_local_with(inter, problem, w_s, s, k, NegativePolicy::Strict)
}

/// Receivers and weights from intermediates under the approximate bound.
pub fn weights_from_intermediates(inter: &Intermediates, sigma2: f64) -> Vec<UserWeights> {
    (0..inter.num_uts())
        .map(|u| {
            let f = inter.f[u];
            let den = inter.p[u] + inter.interference(u) + sigma2;
            let mu = f.conj() / (f.norm_sqr() + den);
            let ups = (C64::new(1.0, 0.0) - mu * f).norm_sqr() + mu.norm_sqr() * den;
            UserWeights {
                mu,
                nu: crate::wmmse::update_nu(ups),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LocalStep {
    pub w_s: DMatrix<C64>,
    pub weights: Vec<UserWeights>,
    /// `others + ` the new contribution of `s`.
    pub inter: Intermediates,
}

/// One local update at satellite `s` on subcarrier `k`. `inter` is the received network
/// state (used for `mu`, `nu`) and `others` the part not produced by `s`.
pub fn local_wmmse_step(
    problem: &Problem,
    inter: &Intermediates,
    others: &Intermediates,
    s: usize,
    k: usize,
    solver: &SolverConfig,
) -> Result<LocalStep> {
    let stats = problem.stats;
    let weights = weights_from_intermediates(inter, problem.noise.sigma2);
    let t = problem.analog.f[s].ncols();
    let nu = stats.num_uts;

    let mut a = DMatrix::zeros(t, t);
    for (u, w) in weights.iter().enumerate() {
        let g = stats.g(s, u);
        a += g.conjugate() * g.transpose() * C64::from(w.nu * w.mu.norm_sqr() * stats.link(s, u).gamma[k]);
    }
    let a = Arc::new(a);
    let served = &problem.schedule.served[s];
    let cols: Vec<ColumnQuadratic> = served
        .iter()
        .map(|&l| {
            let w = weights[l];
            let link = stats.link(s, l);
            let coef = (C64::new(1.0, 0.0) - w.mu * others.f[l]) * w.mu.conj() * (w.nu * link.los_amplitude(k));
            ColumnQuadratic {
                a: a.clone(),
                b: link.g_eff.conjugate() * coef,
            }
        })
        .collect();
    let con = PowerConstraint {
        gram: problem.analog.gram[s].clone(),
        budget: problem.budget_w,
    };
    let sol = solve_single_constraint_qcqp(&cols, &con, solver.bisect_tol)?;
    let mut w_s = DMatrix::zeros(t, nu);
    for (i, &l) in served.iter().enumerate() {
        w_s.set_column(l, &sol.w.column(i));
    }
    let inter = others.axpy(1.0, &Intermediates::contribution(stats, &w_s, s, k));
    Ok(LocalStep { w_s, weights, inter })
}

/// Ring WMMSE. One iteration is a full loop of `S` local steps; the trace uses the
/// approximate bound, which is what the ring optimizes.
pub fn run_ring(problem: &Problem, init: &BeamformerSet, stop: StopRule, solver: &SolverConfig) -> Result<RunOutput> {
    problem.check_dims(init)?;
    let ns = problem.num_sats();
    let ne = problem.num_eval();
    let mut ledger = MessageLedger::new(Topology::ring(ns), problem.num_uts());
    let mut bf = init.clone();
    let mut inter: Vec<Intermediates> = (0..ne)
        .map(|k| Intermediates::from_beamformers(problem.stats, &bf, k))
        .collect();
    let mut trace = Trace::default();
    trace.push(problem, &bf, true)?;
    let mut loops = 0;
    while loops < stop.max_iters {
        for s in 0..ns {
            for k in 0..ne {
                let others = extract_local(&inter[k], problem, bf.w(k, s), s, k)?;
                let step = local_wmmse_step(problem, &inter[k], &others, s, k, solver)?;
                bf.weights[k][s] = step.w_s;
                inter[k] = step.inter;
            }
            record_message(&mut ledger, loops, s, (s + 1) % ns, ne)?;
        }
        loops += 1;
        trace.push(problem, &bf, true)?;
        log::debug!("ring loop {loops}: {:.6}", trace.sum_rate[loops]);
        if stop.converged(&trace.sum_rate) {
            break;
        }
    }
    Ok(RunOutput {
        bf,
        trace,
        iterations: loops,
        ledger: Some(ledger),
    })
}
