//! Statistical CSI: large-scale gain, Rician moments and steering vectors.
//!
//! The composite gain `alpha` of each satellite-UT link has i.i.d. Gaussian real and
//! imaginary parts, each with mean `alpha_bar` and variance `beta`. The complex mean
//! therefore has magnitude `sqrt(2) * alpha_bar` and the complex variance is `2 * beta`;
//! [`LinkStats::los_amplitude`] and [`LinkStats::scatter_variance`] expose these, and they
//! are the quantities used by every rate expression.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ScintillationModel, SystemConfig};
use crate::rng;
use crate::scenario::{Aod, Scenario};
use crate::C64;

/// Linear noise power per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
}

impl NoiseModel {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        let psd_w_hz = 10f64.powf((cfg.noise_psd_dbm_hz + cfg.noise_figure_db) / 10.0 - 3.0);
        NoiseModel {
            sigma2: psd_w_hz * cfg.subcarrier_spacing_hz,
        }
    }

    pub fn new(sigma2: f64) -> Self {
        NoiseModel { sigma2 }
    }
}

/// Statistics of one satellite-UT link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// Linear Rician factor, shared by all subcarriers.
    pub kappa: f64,
    /// Per evaluated subcarrier.
    pub gamma: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub beta: Vec<f64>,
    /// Element radiation gain `G` towards the UT.
    pub gain: f64,
    /// Phase-only array response.
    pub array: DVector<C64>,
    /// `gain * array`.
    pub steering: DVector<C64>,
    /// Effective channel after the analog beamformer; empty until
    /// [`crate::schedule::effective_channels`] runs.
    pub g_eff: DVector<C64>,
}

impl LinkStats {
    /// Magnitude of the complex mean of `alpha`.
    pub fn los_amplitude(&self, k: usize) -> f64 {
        std::f64::consts::SQRT_2 * self.alpha_bar[k]
    }

    /// Variance of the complex gain `alpha`.
    pub fn scatter_variance(&self, k: usize) -> f64 {
        2.0 * self.beta[k]
    }
}

/// Statistical CSI for every `(s, u)` link over a set of evaluated subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub num_sats: usize,
    pub num_uts: usize,
    /// Absolute indices of the evaluated subcarriers; per-subcarrier vectors in
    /// [`LinkStats`] are indexed by position in this list.
    pub subcarriers: Vec<usize>,
    /// Total number of subcarriers `K` of the system.
    pub total_subcarriers: usize,
    pub subcarrier_spacing_hz: f64,
    links: Vec<LinkStats>,
}

impl ChannelStats {
    pub fn from_links(
        num_sats: usize,
        num_uts: usize,
        subcarriers: Vec<usize>,
        total_subcarriers: usize,
        subcarrier_spacing_hz: f64,
        links: Vec<LinkStats>,
    ) -> Self {
        assert_eq!(links.len(), num_sats * num_uts);
        assert!(links.iter().all(|l| l.gamma.len() == subcarriers.len()));
        ChannelStats {
            num_sats,
            num_uts,
            subcarriers,
            total_subcarriers,
            subcarrier_spacing_hz,
            links,
        }
    }

    pub fn num_eval(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn link(&self, s: usize, u: usize) -> &LinkStats {
        &self.links[s * self.num_uts + u]
    }

    pub fn link_mut(&mut self, s: usize, u: usize) -> &mut LinkStats {
        &mut self.links[s * self.num_uts + u]
    }

    /// Statistics restricted to the given satellites and users, in the given order.
    pub fn subset(&self, sats: &[usize], users: &[usize]) -> ChannelStats {
        let links = sats
            .iter()
            .flat_map(|&s| users.iter().map(move |&u| (s, u)))
            .map(|(s, u)| self.link(s, u).clone())
            .collect();
        ChannelStats::from_links(
            sats.len(),
            users.len(),
            self.subcarriers.clone(),
            self.total_subcarriers,
            self.subcarrier_spacing_hz,
            links,
        )
    }

    pub fn g(&self, s: usize, u: usize) -> &DVector<C64> {
        &self.link(s, u).g_eff
    }

    /// Rescales all gains so that the noise power becomes one. Rates are unchanged;
    /// optimizer intermediates become SNR-scaled quantities of order one.
    pub fn noise_normalized(&self, noise: &NoiseModel) -> (ChannelStats, NoiseModel) {
        let mut out = self.clone();
        let amp = noise.sigma2.sqrt();
        for l in &mut out.links {
            l.gamma.iter_mut().for_each(|g| *g /= noise.sigma2);
            l.beta.iter_mut().for_each(|b| *b /= noise.sigma2);
            l.alpha_bar.iter_mut().for_each(|a| *a /= amp);
        }
        (out, NoiseModel::new(1.0))
    }
}

pub fn free_space_path_loss_db(distance_m: f64, freq_hz: f64) -> f64 {
    20.0 * distance_m.log10() + 20.0 * freq_hz.log10() - 147.55
}

/// Scintillation loss of link `(s, u)` in dB.
pub fn scintillation_db(cfg: &SystemConfig, s: usize, u: usize) -> f64 {
    match cfg.scintillation {
        ScintillationModel::Constant { loss_db } => loss_db,
        ScintillationModel::LogNormal { sigma_db } => {
            if sigma_db == 0.0 {
                return 0.0;
            }
            let mut r = rng::substream(cfg.rng_seed, rng::SCINTILLATION, (s * cfg.num_uts + u) as u64);
            Normal::new(0.0, sigma_db).unwrap().sample(&mut r)
        }
    }
}

/// Linear large-scale gain `gamma` of link `(s, u)` on absolute subcarrier `k`.
/// Shadow fading and clutter loss are not modelled.
pub fn path_loss_gamma(cfg: &SystemConfig, scn: &Scenario, s: usize, u: usize, k: usize) -> f64 {
    let geo = scn.link_geometry(s, u);
    let freq = if cfg.flat_gamma {
        cfg.carrier_freq_hz
    } else {
        cfg.carrier_freq_hz + k as f64 * cfg.subcarrier_spacing_hz
    };
    let loss_db = free_space_path_loss_db(geo.distance_m, freq)
        + cfg.atmosphere.loss_db(geo.ground_elevation_rad)
        + scintillation_db(cfg, s, u);
    10f64.powf(-loss_db / 10.0)
}

/// Per-component mean and variance of a Rician gain with factor `kappa` and power `gamma`.
/// `kappa = inf` is the pure line-of-sight limit.
pub fn rician_moments(kappa: f64, gamma: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        return ((gamma / 2.0).sqrt(), 0.0);
    }
    let alpha_bar = (kappa * gamma / (2.0 * (1.0 + kappa))).sqrt();
    let beta = gamma / (2.0 * (1.0 + kappa));
    (alpha_bar, beta)
}

/// Rician factor of link `(s, u)`, uniform in dB over the configured range.
pub fn sample_kappa(cfg: &SystemConfig, s: usize, u: usize) -> f64 {
    let mut r = rng::substream(cfg.rng_seed, rng::RICIAN, (s * cfg.num_uts + u) as u64);
    let (lo, hi) = cfg.rician_range_db;
    let kappa_db = if hi > lo { r.random_range(lo..hi) } else { lo };
    10f64.powf(kappa_db / 10.0)
}

/// `(kappa, alpha_bar, beta)` for link `(s, u)` with power `gamma`.
pub fn rician_stats(cfg: &SystemConfig, gamma: f64, s: usize, u: usize) -> (f64, f64, f64) {
    let kappa = sample_kappa(cfg, s, u);
    let (alpha_bar, beta) = rician_moments(kappa, gamma);
    (kappa, alpha_bar, beta)
}

/// Element gain `sqrt(3 / 4pi) * cos(theta)`, with `theta` the angle off the panel
/// boresight (`pi/2 - aod.elevation`).
pub fn radiation_gain(aod: &Aod) -> f64 {
    (3.0 / (4.0 * PI)).sqrt() * aod.elevation.sin().max(0.0)
}

/// Phase-only UPA response for half-wavelength spacing, ordered with the vertical index
/// running fastest.
pub fn array_response(panel_dims: (usize, usize), aod: &Aod) -> DVector<C64> {
    let (nh, nv) = panel_dims;
    let spacing = 0.5;
    let phi_h = spacing * aod.azimuth.cos() * aod.elevation.cos();
    let phi_v = spacing * aod.azimuth.sin() * aod.elevation.cos();
    DVector::from_fn(nh * nv, |idx, _| {
        let (ih, iv) = (idx / nv, idx % nv);
        C64::from_polar(1.0, -2.0 * PI * (phi_h * ih as f64 + phi_v * iv as f64))
    })
}

/// Steering vector including the radiation gain.
pub fn steering_vector(cfg: &SystemConfig, aod: &Aod) -> DVector<C64> {
    array_response(cfg.panel_dims, aod) * C64::from(radiation_gain(aod))
}

/// One draw of the composite gain on evaluated subcarrier `k`.
pub fn sample_alpha<R: Rng + ?Sized>(link: &LinkStats, k: usize, rng: &mut R) -> C64 {
    let mean = link.alpha_bar[k];
    let var = link.beta[k];
    if var == 0.0 {
        return C64::new(mean, mean);
    }
    let n = Normal::new(mean, var.sqrt()).unwrap();
    C64::new(n.sample(rng), n.sample(rng))
}

/// Evenly spaced subcarrier subset of size `k_eval`, starting at subcarrier 0.
pub fn eval_subcarriers(total: usize, k_eval: usize) -> Vec<usize> {
    let k_eval = k_eval.clamp(1, total);
    (0..k_eval).map(|i| i * total / k_eval).collect()
}

/// Builds statistical CSI for all links on the given absolute subcarriers.
pub fn build_channel_stats(cfg: &SystemConfig, scn: &Scenario, subcarriers: &[usize]) -> ChannelStats {
    let mut links = Vec::with_capacity(scn.num_sats() * scn.num_uts());
    for s in 0..scn.num_sats() {
        for u in 0..scn.num_uts() {
            let geo = scn.link_geometry(s, u);
            let kappa = sample_kappa(cfg, s, u);
            let gamma: Vec<f64> = subcarriers
                .iter()
                .map(|&k| path_loss_gamma(cfg, scn, s, u, k))
                .collect();
            let (alpha_bar, beta) = gamma.iter().map(|&g| rician_moments(kappa, g)).unzip();
            let gain = radiation_gain(&geo.aod);
            let array = array_response(cfg.panel_dims, &geo.aod);
            let steering = &array * C64::from(gain);
            links.push(LinkStats {
                kappa,
                gamma,
                alpha_bar,
                beta,
                gain,
                array,
                steering,
                g_eff: DVector::zeros(0),
            });
        }
    }
    ChannelStats::from_links(
        scn.num_sats(),
        scn.num_uts(),
        subcarriers.to_vec(),
        cfg.num_subcarriers,
        cfg.subcarrier_spacing_hz,
        links,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, PanelFrame, Vec3};

    #[test]
    fn path_loss_anchor() {
        assert!((free_space_path_loss_db(1.0, 1.0) + 147.55).abs() < 1e-12);
        let gamma = 10f64.powf(147.55 / 10.0);
        assert!((10f64.powf(-free_space_path_loss_db(1.0, 1.0) / 10.0) / gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_loss_reference_link() {
        // 20 log10(5e5) = 113.9794, 20 log10(1.27e10) = 202.0761
        let pl = free_space_path_loss_db(5e5, 12.7e9);
        assert!((pl - 168.5055).abs() < 1e-3, "{pl}");
    }

    #[test]
    fn doubling_distance_costs_six_db() {
        let d = free_space_path_loss_db(1e6, 12.7e9) - free_space_path_loss_db(5e5, 12.7e9);
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((d - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn gamma_from_scenario_uses_distance_and_atmosphere() {
        let mut cfg = SystemConfig::reference();
        cfg.atmosphere = crate::config::AtmosphereModel::Constant { loss_db: 0.0 };
        let rs = cfg.earth_radius_m + cfg.orbit_height_m;
        let sat = Vec3::new(0.0, 0.0, rs);
        let scn = Scenario {
            sat_panel_frames: vec![PanelFrame::for_satellite(&sat)],
            sat_positions: vec![sat],
            ut_positions: vec![Vec3::new(0.0, 0.0, cfg.earth_radius_m)],
            rng_seed: 0,
        };
        let g = path_loss_gamma(&cfg, &scn, 0, 0, 0);
        assert!((-10.0 * g.log10() - 168.5055).abs() < 1e-3);
        // higher subcarriers see slightly more loss unless the band is flattened
        assert!(path_loss_gamma(&cfg, &scn, 0, 0, 1000) < g);
        cfg.flat_gamma = true;
        assert_eq!(path_loss_gamma(&cfg, &scn, 0, 0, 1000), g);
        cfg.atmosphere = crate::config::AtmosphereModel::ZenithScaled { zenith_loss_db: 0.5 };
        let ga = path_loss_gamma(&cfg, &scn, 0, 0, 0);
        assert!((10.0 * (g / ga).log10() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rician_limits() {
        let gamma = 3.0;
        let (a, b) = rician_moments(f64::INFINITY, gamma);
        assert_eq!(b, 0.0);
        assert!((2.0 * a * a - gamma).abs() < 1e-12);
        let (a, b) = rician_moments(1e12, gamma);
        assert!(b < 1e-11);
        assert!((2.0 * a * a - gamma).abs() < 1e-9);
        let (a, b) = rician_moments(0.0, gamma);
        assert_eq!(a, 0.0);
        assert_eq!(b, gamma / 2.0);
        for kappa in [0.5, 31.6, 100.0] {
            let (a, b) = rician_moments(kappa, gamma);
            assert!(((2.0 * a * a + 2.0 * b) - gamma).abs() <= 1e-9 * gamma);
        }
    }

    #[test]
    fn kappa_db_is_uniform_over_range() {
        let mut cfg = SystemConfig::reference();
        cfg.num_uts = 100;
        cfg.num_sats = 100;
        let mut sum = 0.0;
        let mut n = 0.0;
        for s in 0..100 {
            for u in 0..100 {
                let kdb = 10.0 * sample_kappa(&cfg, s, u).log10();
                assert!((15.0..=20.0).contains(&kdb));
                sum += kdb;
                n += 1.0;
            }
        }
        let mean = sum / n;
        assert!((mean - 17.5).abs() < 0.1, "{mean}");
        assert_eq!(sample_kappa(&cfg, 3, 4), sample_kappa(&cfg, 3, 4));
    }

    #[test]
    fn broadside_steering_is_flat() {
        let cfg = SystemConfig::reference();
        let a = steering_vector(&cfg, &Aod::BORESIGHT);
        let g = (3.0 / (4.0 * PI)).sqrt();
        for z in a.iter() {
            assert!((z - C64::new(g, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn two_element_quarter_phase() {
        // phi_h = 0.5 cos(az) cos(el) = 0.25 with az = 0, cos(el) = 0.5
        let aod = Aod {
            azimuth: 0.0,
            elevation: (0.5f64).acos(),
        };
        let a = array_response((2, 1), &aod);
        assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_norm() {
        let cfg = SystemConfig::reference();
        for (az, el) in [(0.3, 1.2), (-2.0, 0.4), (1.0, 1.5)] {
            let aod = Aod {
                azimuth: az,
                elevation: el,
            };
            let a = steering_vector(&cfg, &aod);
            let g = radiation_gain(&aod);
            assert!((a.norm_squared() - 256.0 * g * g).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_draws() {
        let link = LinkStats {
            kappa: f64::INFINITY,
            gamma: vec![2.0],
            alpha_bar: vec![1.0],
            beta: vec![0.0],
            gain: 1.0,
            array: DVector::zeros(1),
            steering: DVector::zeros(1),
            g_eff: DVector::zeros(0),
        };
        let mut r = rng::substream(1, rng::MONTE_CARLO, 0);
        assert_eq!(sample_alpha(&link, 0, &mut r), C64::new(1.0, 1.0));

        let gamma = 2.5;
        let (ab, b) = rician_moments(10.0, gamma);
        let link = LinkStats {
            kappa: 10.0,
            gamma: vec![gamma],
            alpha_bar: vec![ab],
            beta: vec![b],
            ..link
        };
        let n = 1_000_000;
        let mut r = rng::substream(1, rng::MONTE_CARLO, 1);
        let draws: Vec<f64> = (0..n).map(|_| sample_alpha(&link, 0, &mut r).norm_sqr()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - gamma).abs() < 3.0 * se, "mean {mean} se {se}");

        let mut r1 = rng::substream(9, rng::MONTE_CARLO, 2);
        let mut r2 = rng::substream(9, rng::MONTE_CARLO, 2);
        for _ in 0..10 {
            assert_eq!(sample_alpha(&link, 0, &mut r1), sample_alpha(&link, 0, &mut r2));
        }
    }

    #[test]
    fn stats_consistency_on_scenario() {
        let cfg = SystemConfig::reference();
        let scn = generate_scenario(&cfg);
        let stats = build_channel_stats(&cfg, &scn, &eval_subcarriers(cfg.num_subcarriers, 4));
        assert_eq!(stats.subcarriers, vec![0, 256, 512, 768]);
        for s in 0..cfg.num_sats {
            for u in 0..cfg.num_uts {
                let l = stats.link(s, u);
                for k in 0..4 {
                    let g = l.gamma[k];
                    assert!(((2.0 * l.alpha_bar[k].powi(2) + 2.0 * l.beta[k]) - g).abs() <= 1e-9 * g);
                    assert!((l.los_amplitude(k).powi(2) + l.scatter_variance(k) - g).abs() <= 1e-9 * g);
                }
                for z in l.steering.iter() {
                    assert!((z.norm() - l.gain).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gamma_non_increasing_in_distance() {
        let mut prev = f64::INFINITY;
        for d in [5e5, 6e5, 7e5, 1e6] {
            let g = 10f64.powf(-free_space_path_loss_db(d, 12.7e9) / 10.0);
            assert!(g <= prev);
            prev = g;
        }
    }

    #[test]
    fn noise_power_matches_formula() {
        let cfg = SystemConfig::reference();
        let n = NoiseModel::from_config(&cfg);
        let expect = 10f64.powf((-173.855 + 10.0) / 10.0 - 3.0) * 120e3;
        assert!((n.sigma2 / expect - 1.0).abs() < 1e-12);
    }
}
