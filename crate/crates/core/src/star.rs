//! Star-topology WMMSE: parallel local updates at every satellite against the same
//! broadcast intermediates, followed by PDD consensus at the centre.

use crate::beamformer::{BeamformerSet, Problem};
use crate::config::{PddConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::intermediates::Intermediates;
use crate::isl::{record_message, MessageLedger, Topology};
use crate::qcqp::{solve_separable_alp, UserWeights};
use crate::ring::{extract_local_with, local_wmmse_step, NegativePolicy};
use crate::wmmse::{RunOutput, StopRule, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct PddState {
    pub duals: Vec<Intermediates>,
    pub rho: f64,
    pub delta: f64,
    pub q: f64,
    pub h_prev: f64,
}

impl PddState {
    pub fn new(num_sats: usize, num_uts: usize, cfg: &PddConfig) -> Self {
        PddState {
            duals: vec![Intermediates::zeros(num_uts); num_sats],
            rho: cfg.rho0,
            delta: cfg.delta,
            q: cfg.q,
            h_prev: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PddOutcome {
    pub gamma: Intermediates,
    pub iterations: usize,
    /// Violation after each iteration.
    pub h_trace: Vec<f64>,
    pub converged: bool,
}

/// `h_s = ||Gamma - Gamma_s + Theta_s / rho||_inf` for every `s`.
pub fn violations(gamma: &Intermediates, locals: &[Intermediates], duals: &[Intermediates], rho: f64) -> Vec<f64> {
    locals
        .iter()
        .zip(duals)
        .map(|(g, t)| gamma.axpy(-1.0, g).axpy(1.0 / rho, t).norm_inf())
        .collect()
}

/// PDD consensus on the intermediates. The overall violation is `min_s h_s`.
pub fn pdd_consensus(
    weights: &[UserWeights],
    locals: &[Intermediates],
    state: &mut PddState,
    tol: f64,
    max_iters: usize,
) -> Result<PddOutcome> {
    if !(state.rho > 0.0) {
        return Err(Error::InvalidPenalty(state.rho));
    }
    let mut gamma = Intermediates::zeros(weights.len());
    let mut h_trace = Vec::new();
    for it in 1..=max_iters {
        gamma = solve_separable_alp(weights, locals, &state.duals, state.rho)?;
        if !gamma.is_finite() {
            return Err(Error::NonFinite("consensus intermediates"));
        }
        let h = violations(&gamma, locals, &state.duals, state.rho)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if !h.is_finite() {
            return Err(Error::NonFinite("consensus violation"));
        }
        h_trace.push(h);
        if h < tol {
            return Ok(PddOutcome {
                gamma,
                iterations: it,
                h_trace,
                converged: true,
            });
        }
        if h <= state.q * state.h_prev {
            for (t, g) in state.duals.iter_mut().zip(locals) {
                *t = t.axpy(state.rho, &gamma.axpy(-1.0, g));
            }
            if state.duals.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite("consensus duals"));
            }
        } else {
            state.rho *= state.delta;
            if !state.rho.is_finite() {
                return Err(Error::NonFinite("penalty"));
            }
        }
        state.h_prev = h;
    }
    Ok(PddOutcome {
        gamma,
        iterations: max_iters,
        h_trace,
        converged: false,
    })
}

/// Star WMMSE with centre `central`. PDD state is reset every outer iteration because
/// the local intermediates change between iterations.
pub fn run_star(
    problem: &Problem,
    init: &BeamformerSet,
    stop: StopRule,
    solver: &SolverConfig,
    pdd: &PddConfig,
    central: usize,
) -> Result<RunOutput> {
    problem.check_dims(init)?;
    let ns = problem.num_sats();
    let ne = problem.num_eval();
    let nu = problem.num_uts();
    if central >= ns {
        return Err(Error::Validation {
            key: "central".into(),
            reason: format!("{central} is not a satellite index (S = {ns})"),
        });
    }
    let mut ledger = MessageLedger::new(Topology::star(ns, central), nu);
    let mut bf = init.clone();
    let mut broadcast: Vec<Intermediates> = (0..ne)
        .map(|k| Intermediates::from_beamformers(problem.stats, &bf, k))
        .collect();
    let mut trace = Trace::default();
    trace.push(problem, &bf, true)?;
    let mut iters = 0;
    while iters < stop.max_iters {
        let mut next_bf = bf.clone();
        let mut next_broadcast = Vec::with_capacity(ne);
        for k in 0..ne {
            let mut locals = Vec::with_capacity(ns);
            let mut center_weights = Vec::new();
            for s in 0..ns {
                let others = extract_local_with(&broadcast[k], problem, bf.w(k, s), s, k, NegativePolicy::Clamp)?;
                let step = local_wmmse_step(problem, &broadcast[k], &others, s, k, solver)?;
                next_bf.weights[k][s] = step.w_s;
                if s == central {
                    center_weights = step.weights;
                }
                locals.push(step.inter);
            }
            if ns == 1 {
                next_broadcast.push(locals.pop().expect("one satellite"));
            } else {
                let mut state = PddState::new(ns, nu, pdd);
                let out = pdd_consensus(&center_weights, &locals, &mut state, pdd.tol, pdd.max_iters)?;
                log::trace!(
                    "star k={k}: pdd {} iters, h={:e}",
                    out.iterations,
                    out.h_trace.last().copied().unwrap_or(0.0)
                );
                next_broadcast.push(out.gamma);
            }
        }
        for s in (0..ns).filter(|&s| s != central) {
            record_message(&mut ledger, iters, s, central, ne)?;
        }
        for s in (0..ns).filter(|&s| s != central) {
            record_message(&mut ledger, iters, central, s, ne)?;
        }
        bf = next_bf;
        broadcast = next_broadcast;
        iters += 1;
        trace.push(problem, &bf, true)?;
        log::debug!("star iter {iters}: {:.6}", trace.sum_rate[iters]);
        if stop.converged(&trace.sum_rate) {
            break;
        }
    }
    Ok(RunOutput {
        bf,
        trace,
        iterations: iters,
        ledger: Some(ledger),
    })
}
