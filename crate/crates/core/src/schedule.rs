//! Distance-based scheduling and the steering-vector analog beamformer.

use nalgebra::{DMatrix, DVector};

use crate::channel::{array_response, ChannelStats};
use crate::config::SystemConfig;
use crate::scenario::Scenario;
use crate::C64;

/// Served users per satellite, in ascending index order, plus the `S x U` mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub served: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
}

impl Schedule {
    /// Builds a schedule from per-satellite user lists (sorted and deduplicated here).
    pub fn from_served(num_uts: usize, served: Vec<Vec<usize>>) -> Self {
        let served: Vec<Vec<usize>> = served
            .into_iter()
            .map(|mut v| {
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mask = served
            .iter()
            .map(|v| {
                let mut m = vec![false; num_uts];
                v.iter().for_each(|&u| m[u] = true);
                m
            })
            .collect();
        Schedule { served, mask }
    }

    pub fn num_sats(&self) -> usize {
        self.served.len()
    }

    pub fn num_uts(&self) -> usize {
        self.mask.first().map_or(0, Vec::len)
    }

    /// Number of active RF chains at satellite `s`.
    pub fn num_slots(&self, s: usize) -> usize {
        self.served[s].len()
    }

    pub fn is_served(&self, s: usize, u: usize) -> bool {
        self.mask[s][u]
    }

    /// Column of `F_s` carrying user `u`, if scheduled.
    pub fn slot(&self, s: usize, u: usize) -> Option<usize> {
        self.served[s].binary_search(&u).ok()
    }
}

/// Indices of the `t` smallest values, ties to the lower index, returned ascending.
pub fn nearest_indices(distances: &[f64], t: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(t).collect();
    chosen.sort_unstable();
    chosen
}

/// Each satellite serves its `min(U, N_RF)` nearest UTs.
pub fn schedule_users(scn: &Scenario, cfg: &SystemConfig) -> Schedule {
    let t = cfg.served_per_sat();
    let served = (0..scn.num_sats())
        .map(|s| {
            let d: Vec<f64> = (0..scn.num_uts()).map(|u| scn.distance(s, u)).collect();
            nearest_indices(&d, t)
        })
        .collect();
    Schedule::from_served(scn.num_uts(), served)
}

/// Per-satellite phase-shifter matrices `F_s` (`N x T_s`) and Grams `F_s^H F_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBeamformer {
    pub f: Vec<DMatrix<C64>>,
    pub gram: Vec<DMatrix<C64>>,
}

impl AnalogBeamformer {
    pub fn from_matrices(f: Vec<DMatrix<C64>>) -> Self {
        let gram = f.iter().map(|m| m.adjoint() * m).collect();
        AnalogBeamformer { f, gram }
    }
}

/// Columns are the conjugated phase-only responses towards the scheduled users.
pub fn build_analog_beamformer(scn: &Scenario, sched: &Schedule, cfg: &SystemConfig) -> AnalogBeamformer {
    let n = cfg.num_antennas();
    let f = sched
        .served
        .iter()
        .enumerate()
        .map(|(s, users)| {
            let cols: Vec<DVector<C64>> = users
                .iter()
                .map(|&u| array_response(cfg.panel_dims, &scn.link_geometry(s, u).aod).conjugate())
                .collect();
            if cols.is_empty() {
                DMatrix::zeros(n, 0)
            } else {
                DMatrix::from_columns(&cols)
            }
        })
        .collect();
    AnalogBeamformer::from_matrices(f)
}

/// Fills `g_{s,u} = F_s^T a(s,u)` for every pair, scheduled or not.
pub fn effective_channels(stats: &mut ChannelStats, analog: &AnalogBeamformer) {
    for s in 0..stats.num_sats {
        for u in 0..stats.num_uts {
            let link = stats.link_mut(s, u);
            link.g_eff = analog.f[s].transpose() * &link.steering;
        }
    }
}
