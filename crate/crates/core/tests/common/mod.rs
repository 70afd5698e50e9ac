#![allow(dead_code)]

use leobf::beamformer::{BeamformerSet, Problem};
use leobf::channel::{rician_moments, ChannelStats, LinkStats};
use leobf::pipeline::Instance;
use leobf::schedule::{AnalogBeamformer, Schedule};
use leobf::{SystemConfig, C64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod oracles;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn<R: Rng>(r: &mut R) -> C64 {
    let n = rand_distr::StandardNormal;
    C64::new(r.sample::<f64, _>(n), r.sample::<f64, _>(n)) / 2f64.sqrt()
}

pub fn cvec<R: Rng>(r: &mut R, n: usize) -> DVector<C64> {
    DVector::from_fn(n, |_, _| cn(r))
}

pub fn cmat<R: Rng>(r: &mut R, m: usize, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(m, n, |_, _| cn(r))
}

/// Random Hermitian PSD matrix of the given rank.
pub fn psd<R: Rng>(r: &mut R, n: usize, rank: usize) -> DMatrix<C64> {
    let x = cmat(r, n, rank);
    &x * x.adjoint()
}

/// Reference config resized.
pub fn config(seed: u64, sats: usize, uts: usize, panel: (usize, usize), rfc: usize) -> SystemConfig {
    let mut cfg = SystemConfig::reference();
    cfg.rng_seed = seed;
    cfg.num_sats = sats;
    cfg.num_uts = uts;
    cfg.panel_dims = panel;
    cfg.num_rfc = rfc;
    cfg
}

pub fn instance(seed: u64, sats: usize, uts: usize, panel: (usize, usize), rfc: usize) -> Instance {
    Instance::build(&config(seed, sats, uts, panel, rfc), 1).unwrap()
}

/// Fully synthetic instance: random effective channels, Rician factors and analog Grams,
/// each satellite serving `t` random users.
pub struct Synthetic {
    pub stats: ChannelStats,
    pub schedule: Schedule,
    pub analog: AnalogBeamformer,
}

impl Synthetic {
    pub fn new<R: Rng>(r: &mut R, sats: usize, uts: usize, t: usize, num_eval: usize) -> Self {
        let n = 2 * t.max(1);
        let mut served = Vec::new();
        let mut fs = Vec::new();
        for _ in 0..sats {
            let mut users: Vec<usize> = (0..uts).collect();
            for i in (1..uts).rev() {
                users.swap(i, r.random_range(0..=i));
            }
            users.truncate(t);
            served.push(users);
            fs.push(DMatrix::from_fn(n, t, |_, _| {
                C64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU))
            }));
        }
        let schedule = Schedule::from_served(uts, served);
        let analog = AnalogBeamformer::from_matrices(fs);
        let mut links = Vec::new();
        for _ in 0..sats {
            for _ in 0..uts {
                let kappa = 10f64.powf(r.random_range(-0.5..2.0));
                let gamma: Vec<f64> = (0..num_eval).map(|_| r.random_range(0.2..2.0)).collect();
                let (alpha_bar, beta) = gamma.iter().map(|&g| rician_moments(kappa, g)).unzip();
                links.push(LinkStats {
                    kappa,
                    gamma,
                    alpha_bar,
                    beta,
                    gain: 1.0,
                    array: DVector::zeros(n),
                    steering: DVector::zeros(n),
                    g_eff: cvec(r, t),
                });
            }
        }
        let stats = ChannelStats::from_links(sats, uts, (0..num_eval).collect(), num_eval, 1.0, links);
        Synthetic {
            stats,
            schedule,
            analog,
        }
    }

    pub fn problem(&self, sigma2: f64, budget: f64) -> Problem<'_> {
        Problem {
            stats: &self.stats,
            schedule: &self.schedule,
            analog: &self.analog,
            noise: leobf::NoiseModel::new(sigma2),
            budget_w: budget,
        }
    }
}

/// Random masked beamformers, each satellite using `frac` of the budget.
pub fn random_bf<R: Rng>(r: &mut R, problem: &Problem, frac: f64) -> BeamformerSet {
    let mut bf = BeamformerSet::zeros(problem.schedule, problem.num_eval());
    for k in 0..problem.num_eval() {
        for s in 0..problem.num_sats() {
            let t = problem.analog.f[s].ncols();
            let mut w = DMatrix::zeros(t, problem.num_uts());
            for &u in &problem.schedule.served[s] {
                w.set_column(u, &cvec(r, t));
            }
            let p = (w.adjoint() * &problem.analog.gram[s] * &w).trace().re;
            if p > 0.0 {
                w *= C64::from((frac * problem.budget_w / p).sqrt());
            }
            bf.weights[k][s] = w;
        }
    }
    bf
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
