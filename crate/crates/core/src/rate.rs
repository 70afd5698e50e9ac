//! Hardening-bound rates, the decentralizable approximation and a Monte-Carlo reference.
//!
//! With `x_s = g_{s,u}^T w_{s,u}`, `y_{s,l} = g_{s,u}^T w_{s,l}`, LOS amplitude `a_s` and
//! scatter variance `v_s` (so `gamma_s = a_s^2 + v_s`), the bound for user `u` is
//!
//! ```text
//! SINR = |sum_s a_s x_s|^2 / (sum_s v_s |x_s|^2 + sum_{l != u} IUI_l + sigma^2)
//! IUI_l = sum_s v_s |y_{s,l}|^2 + |sum_s a_s y_{s,l}|^2      (exact, = w_l^H T_u w_l)
//! IUI_l ~ sum_s gamma_s |y_{s,l}|^2                          (approximate)
//! ```

use nalgebra::DMatrix;
use rand::Rng;

use crate::beamformer::{BeamformerSet, Problem};
use crate::channel::{sample_alpha, ChannelStats};
use crate::error::Result;
use crate::C64;

/// `g_{s,u}^T w_{s,l}` for all `(s, u, l)` on one subcarrier.
#[derive(Debug, Clone)]
pub struct Projections {
    num_uts: usize,
    y: Vec<C64>,
}

impl Projections {
    pub fn new(stats: &ChannelStats, bf: &BeamformerSet, k: usize) -> Self {
        let (ns, nu) = (stats.num_sats, stats.num_uts);
        let mut y = vec![C64::new(0.0, 0.0); ns * nu * nu];
        for s in 0..ns {
            let w = bf.w(k, s);
            if w.nrows() == 0 {
                continue;
            }
            for u in 0..nu {
                let row = stats.g(s, u).transpose() * w;
                for l in 0..nu {
                    y[(s * nu + u) * nu + l] = row[l];
                }
            }
        }
        Projections { num_uts: nu, y }
    }

    #[inline]
    pub fn get(&self, s: usize, u: usize, l: usize) -> C64 {
        self.y[(s * self.num_uts + u) * self.num_uts + l]
    }
}

/// Per-user terms of the bound on one subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTerms {
    /// `sum_s a_s x_s`
    pub mean: C64,
    /// `sum_s v_s |x_s|^2`
    pub variance: f64,
    pub iui_exact: f64,
    pub iui_approx: f64,
}

impl SinrTerms {
    pub fn sinr_exact(&self, sigma2: f64) -> f64 {
        self.mean.norm_sqr() / (self.variance + self.iui_exact + sigma2)
    }

    pub fn sinr_approx(&self, sigma2: f64) -> f64 {
        self.mean.norm_sqr() / (self.variance + self.iui_approx + sigma2)
    }
}

pub fn sinr_terms(stats: &ChannelStats, proj: &Projections, u: usize, k: usize) -> SinrTerms {
    let mut mean = C64::new(0.0, 0.0);
    let mut variance = 0.0;
    for s in 0..stats.num_sats {
        let link = stats.link(s, u);
        let x = proj.get(s, u, u);
        mean += x * link.los_amplitude(k);
        variance += link.scatter_variance(k) * x.norm_sqr();
    }
    let mut iui_exact = 0.0;
    let mut iui_approx = 0.0;
    for l in (0..stats.num_uts).filter(|&l| l != u) {
        let mut coh = C64::new(0.0, 0.0);
        for s in 0..stats.num_sats {
            let link = stats.link(s, u);
            let y = proj.get(s, u, l);
            let (a, v) = (link.los_amplitude(k), link.scatter_variance(k));
            coh += y * a;
            iui_exact += v * y.norm_sqr();
            iui_approx += link.gamma[k] * y.norm_sqr();
        }
        iui_exact += coh.norm_sqr();
    }
    SinrTerms {
        mean,
        variance,
        iui_exact,
        iui_approx,
    }
}

pub fn hardening_bound_exact(problem: &Problem, bf: &BeamformerSet, u: usize, k: usize) -> Result<f64> {
    problem.check_dims(bf)?;
    let proj = Projections::new(problem.stats, bf, k);
    Ok((1.0 + sinr_terms(problem.stats, &proj, u, k).sinr_exact(problem.noise.sigma2)).log2())
}

pub fn hardening_bound_approx(problem: &Problem, bf: &BeamformerSet, u: usize, k: usize) -> Result<f64> {
    problem.check_dims(bf)?;
    let proj = Projections::new(problem.stats, bf, k);
    Ok((1.0 + sinr_terms(problem.stats, &proj, u, k).sinr_approx(problem.noise.sigma2)).log2())
}

/// Offsets of each satellite's block in the stacked beamformer `[w_{1,l}; ...; w_{S,l}]`.
pub fn block_offsets(stats: &ChannelStats) -> Vec<usize> {
    let mut off = vec![0];
    for s in 0..stats.num_sats {
        off.push(off[s] + stats.g(s, 0).len());
    }
    off
}

/// Interference matrix `T_u[k]` on the stacked beamformer. Block `(i, j)` is
/// `a_i a_j conj(g_i) g_j^T` off the diagonal and `gamma_i conj(g_i) g_i^T` on it.
pub fn tu_matrix(stats: &ChannelStats, u: usize, k: usize) -> DMatrix<C64> {
    let off = block_offsets(stats);
    let n = off[stats.num_sats];
    let mut t = DMatrix::zeros(n, n);
    for i in 0..stats.num_sats {
        let li = stats.link(i, u);
        for j in 0..stats.num_sats {
            let lj = stats.link(j, u);
            let c = if i == j {
                li.gamma[k]
            } else {
                li.los_amplitude(k) * lj.los_amplitude(k)
            };
            let blk = li.g_eff.conjugate() * lj.g_eff.transpose() * C64::from(c);
            t.view_mut((off[i], off[j]), (blk.nrows(), blk.ncols())).copy_from(&blk);
        }
    }
    t
}

/// Mean and standard error of `log2(1 + SINR)` over instantaneous gain draws of the
/// equivalent-LOS channel.
pub fn mc_ergodic_rate<R: Rng + ?Sized>(
    problem: &Problem,
    bf: &BeamformerSet,
    u: usize,
    k: usize,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    problem.check_dims(bf)?;
    let stats = problem.stats;
    let proj = Projections::new(stats, bf, k);
    let ns = stats.num_sats;
    let mut alpha = vec![C64::new(0.0, 0.0); ns];
    // Welford accumulators
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..draws.max(1) {
        for (s, a) in alpha.iter_mut().enumerate() {
            *a = sample_alpha(stats.link(s, u), k, rng);
        }
        let sig: C64 = (0..ns).map(|s| alpha[s] * proj.get(s, u, u)).sum();
        let mut den = problem.noise.sigma2;
        for l in (0..stats.num_uts).filter(|&l| l != u) {
            den += (0..ns).map(|s| alpha[s] * proj.get(s, u, l)).sum::<C64>().norm_sqr();
        }
        let r = (1.0 + sig.norm_sqr() / den).log2();
        let d = r - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (r - mean);
    }
    let n = draws.max(1) as f64;
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Ok((mean, (var / n).sqrt()))
}

/// Rates over all evaluated subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `[k][u]`, bit/s/Hz.
    pub exact: Vec<Vec<f64>>,
    pub approx: Vec<Vec<f64>>,
    /// Mean over evaluated subcarriers of `sum_u R_u`.
    pub objective: f64,
    pub objective_approx: f64,
    /// `df * (K / K_eval) * sum_k sum_u R_u`.
    pub sum_rate_bps: f64,
}

pub fn sum_rate(problem: &Problem, bf: &BeamformerSet) -> Result<RateReport> {
    problem.check_dims(bf)?;
    let stats = problem.stats;
    let sigma2 = problem.noise.sigma2;
    let mut exact = Vec::with_capacity(stats.num_eval());
    let mut approx = Vec::with_capacity(stats.num_eval());
    for k in 0..stats.num_eval() {
        let proj = Projections::new(stats, bf, k);
        let (e, a): (Vec<f64>, Vec<f64>) = (0..stats.num_uts)
            .map(|u| {
                let t = sinr_terms(stats, &proj, u, k);
                (
                    (1.0 + t.sinr_exact(sigma2)).log2(),
                    (1.0 + t.sinr_approx(sigma2)).log2(),
                )
            })
            .unzip();
        exact.push(e);
        approx.push(a);
    }
    let n = stats.num_eval() as f64;
    let total: f64 = exact.iter().flatten().sum();
    let objective = total / n;
    let objective_approx = approx.iter().flatten().sum::<f64>() / n;
    let scale = stats.total_subcarriers as f64 / n;
    Ok(RateReport {
        exact,
        approx,
        objective,
        objective_approx,
        sum_rate_bps: stats.subcarrier_spacing_hz * scale * total,
    })
}

/// Per-subcarrier WMMSE utility at the optimal receiver and weights,
/// `sum_u (ln(1 + SINR_u) - 1)`, averaged over subcarriers.
pub fn wmmse_utility(problem: &Problem, bf: &BeamformerSet, approximate: bool) -> f64 {
    let stats = problem.stats;
    let mut acc = 0.0;
    for k in 0..stats.num_eval() {
        let proj = Projections::new(stats, bf, k);
        for u in 0..stats.num_uts {
            let t = sinr_terms(stats, &proj, u, k);
            let sinr = if approximate {
                t.sinr_approx(problem.noise.sigma2)
            } else {
                t.sinr_exact(problem.noise.sigma2)
            };
            acc += sinr.ln_1p() - 1.0;
        }
    }
    acc / stats.num_eval() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{LinkStats, NoiseModel};
    use crate::schedule::{AnalogBeamformer, Schedule};
    use nalgebra::DVector;

    fn scalar_link(alpha_bar: f64, beta: f64, g: C64) -> LinkStats {
        LinkStats {
            kappa: if beta == 0.0 {
                f64::INFINITY
            } else {
                alpha_bar * alpha_bar / beta
            },
            gamma: vec![2.0 * alpha_bar * alpha_bar + 2.0 * beta],
            alpha_bar: vec![alpha_bar],
            beta: vec![beta],
            gain: 1.0,
            array: DVector::from_element(1, C64::new(1.0, 0.0)),
            steering: DVector::from_element(1, C64::new(1.0, 0.0)),
            g_eff: DVector::from_element(1, g),
        }
    }

    #[test]
    fn single_link_pure_los() {
        let g = C64::new(0.6, -0.8) * 3.0;
        let ab = 0.7;
        let stats = ChannelStats::from_links(1, 1, vec![0], 1, 1.0, vec![scalar_link(ab, 0.0, g)]);
        let sched = Schedule::from_served(1, vec![vec![0]]);
        let analog = AnalogBeamformer::from_matrices(vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0))]);
        let p = 2.5;
        let sigma2 = 0.3;
        let problem = Problem {
            stats: &stats,
            schedule: &sched,
            analog: &analog,
            noise: NoiseModel::new(sigma2),
            budget_w: p,
        };
        let mut bf = BeamformerSet::zeros(&sched, 1);
        assert_eq!(hardening_bound_exact(&problem, &bf, 0, 0).unwrap(), 0.0);
        bf.weights[0][0][(0, 0)] = C64::from_polar(p.sqrt(), 0.4);
        let r = hardening_bound_exact(&problem, &bf, 0, 0).unwrap();
        let expect = (1.0 + ab * ab * 2.0 * g.norm_sqr() * p / sigma2).log2();
        assert!((r - expect).abs() < 1e-12);
    }
}
