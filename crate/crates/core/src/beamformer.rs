//! Digital beamformers and the problem bundle shared by all schemes.

use nalgebra::{DMatrix, DVectorView};

use crate::channel::{ChannelStats, NoiseModel};
use crate::error::{Error, Result};
use crate::schedule::{AnalogBeamformer, Schedule};
use crate::C64;

/// Digital beamformers `W_s[k]`, stored as `T_s x U` matrices indexed `[k][s]`. Column `u`
/// is zero whenever satellite `s` does not serve `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub weights: Vec<Vec<DMatrix<C64>>>,
    pub mask: Vec<Vec<bool>>,
}

impl BeamformerSet {
    pub fn zeros(sched: &Schedule, num_eval: usize) -> Self {
        let u = sched.num_uts();
        let per_k: Vec<DMatrix<C64>> = (0..sched.num_sats())
            .map(|s| DMatrix::zeros(sched.num_slots(s), u))
            .collect();
        BeamformerSet {
            weights: vec![per_k; num_eval],
            mask: sched.mask.clone(),
        }
    }

    pub fn num_eval(&self) -> usize {
        self.weights.len()
    }

    pub fn num_sats(&self) -> usize {
        self.mask.len()
    }

    pub fn num_uts(&self) -> usize {
        self.mask.first().map_or(0, Vec::len)
    }

    pub fn w(&self, k: usize, s: usize) -> &DMatrix<C64> {
        &self.weights[k][s]
    }

    pub fn column(&self, k: usize, s: usize, u: usize) -> DVectorView<'_, C64> {
        self.weights[k][s].column(u)
    }

    /// Transmit power `tr(W^H G W)` of satellite `s` on subcarrier `k`.
    pub fn power(&self, k: usize, s: usize, gram: &DMatrix<C64>) -> f64 {
        let w = &self.weights[k][s];
        if w.nrows() == 0 {
            return 0.0;
        }
        (w.adjoint() * gram * w).trace().re
    }

    /// Errors if any unscheduled column is nonzero.
    pub fn check_mask(&self) -> Result<()> {
        for (k, per_k) in self.weights.iter().enumerate() {
            for (s, w) in per_k.iter().enumerate() {
                for u in 0..w.ncols() {
                    if !self.mask[s][u] && w.column(u).iter().any(|z| *z != C64::new(0.0, 0.0)) {
                        return Err(Error::Dimension(format!(
                            "unscheduled column (s={s}, u={u}) nonzero on subcarrier {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Errors if any satellite exceeds `budget * (1 + rel)`.
    pub fn check_power(&self, analog: &AnalogBeamformer, budget: f64, rel: f64) -> Result<()> {
        for k in 0..self.num_eval() {
            for s in 0..self.num_sats() {
                let p = self.power(k, s, &analog.gram[s]);
                if p > budget * (1.0 + rel) {
                    return Err(Error::Dimension(format!(
                        "satellite {s} uses {p:e} W on subcarrier {k}, budget {budget:e} W"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Scales every beamformer by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().flatten().for_each(|w| *w *= C64::from(c));
        out
    }
}

/// Everything a beamforming scheme needs for one scenario.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub stats: &'a ChannelStats,
    pub schedule: &'a Schedule,
    pub analog: &'a AnalogBeamformer,
    pub noise: NoiseModel,
    /// Per-satellite, per-subcarrier power budget in W.
    pub budget_w: f64,
}

impl Problem<'_> {
    pub fn num_sats(&self) -> usize {
        self.stats.num_sats
    }

    pub fn num_uts(&self) -> usize {
        self.stats.num_uts
    }

    pub fn num_eval(&self) -> usize {
        self.stats.num_eval()
    }

    pub fn check_dims(&self, bf: &BeamformerSet) -> Result<()> {
        if bf.num_eval() != self.num_eval() || bf.num_sats() != self.num_sats() || bf.num_uts() != self.num_uts() {
            return Err(Error::Dimension(format!(
                "beamformer set is {}x{}x{}, channel is {}x{}x{}",
                bf.num_eval(),
                bf.num_sats(),
                bf.num_uts(),
                self.num_eval(),
                self.num_sats(),
                self.num_uts()
            )));
        }
        for s in 0..self.num_sats() {
            let t = self.analog.f[s].ncols();
            if bf.weights.iter().any(|per_k| per_k[s].shape() != (t, self.num_uts())) {
                return Err(Error::Dimension(format!(
                    "satellite {s}: beamformer rows differ from {t} RF chains"
                )));
            }
        }
        Ok(())
    }
}
