//! Aggregated per-subcarrier quantities exchanged over inter-satellite links.
//!
//! `F_u = sum_s a_{s,u} g_{s,u}^T w_{s,u}`, `P_u = sum_s v_{s,u} |g_{s,u}^T w_{s,u}|^2` and
//! `Q_{u,l} = sum_s gamma_{s,u} |g_{s,u}^T w_{s,l}|^2` for `l != u` (`Q_{u,u} = 0`).

use nalgebra::DMatrix;

use crate::beamformer::BeamformerSet;
use crate::channel::ChannelStats;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates {
    pub f: Vec<C64>,
    pub p: Vec<f64>,
    /// `q[(u, l)] = Q_{u,l}`.
    pub q: DMatrix<f64>,
}

impl Intermediates {
    pub fn zeros(num_uts: usize) -> Self {
        Intermediates {
            f: vec![C64::new(0.0, 0.0); num_uts],
            p: vec![0.0; num_uts],
            q: DMatrix::zeros(num_uts, num_uts),
        }
    }

    pub fn num_uts(&self) -> usize {
        self.f.len()
    }

    /// Scalar entries in one message: `U^2 + 2U`, complex `F_u` counted once.
    pub fn dims(num_uts: usize) -> u64 {
        let u = num_uts as u64;
        u * u + 2 * u
    }

    /// Interference seen by user `u`, `sum_{l != u} Q_{u,l}`.
    pub fn interference(&self, u: usize) -> f64 {
        (0..self.num_uts()).filter(|&l| l != u).map(|l| self.q[(u, l)]).sum()
    }

    /// `self + c * other`, entrywise.
    pub fn axpy(&self, c: f64, other: &Intermediates) -> Intermediates {
        Intermediates {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a + b * c).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a + b * c).collect(),
            q: &self.q + &other.q * c,
        }
    }

    /// Largest entry magnitude.
    pub fn norm_inf(&self) -> f64 {
        let f = self.f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let p = self.p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        f.max(p).max(self.q.amax())
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.p.iter().all(|x| x.is_finite())
            && self.q.iter().all(|x| x.is_finite())
    }

    /// Contribution of satellite `s` with beamformer `w_s` (`T_s x U`) on subcarrier `k`.
    pub fn contribution(stats: &ChannelStats, w_s: &DMatrix<C64>, s: usize, k: usize) -> Intermediates {
        let nu = stats.num_uts;
        let mut out = Intermediates::zeros(nu);
        if w_s.nrows() == 0 {
            return out;
        }
        for u in 0..nu {
            let link = stats.link(s, u);
            let row = link.g_eff.transpose() * w_s;
            out.f[u] = row[u] * link.los_amplitude(k);
            out.p[u] = link.scatter_variance(k) * row[u].norm_sqr();
            for l in (0..nu).filter(|&l| l != u) {
                out.q[(u, l)] = link.gamma[k] * row[l].norm_sqr();
            }
        }
        out
    }

    /// Network-wide intermediates of `bf` on subcarrier `k`.
    pub fn from_beamformers(stats: &ChannelStats, bf: &BeamformerSet, k: usize) -> Intermediates {
        (0..stats.num_sats).fold(Intermediates::zeros(stats.num_uts), |acc, s| {
            acc.axpy(1.0, &Intermediates::contribution(stats, bf.w(k, s), s, k))
        })
    }
}
