//! Constellation and user geometry.
//!
//! Earth-centred Cartesian frame with the service-area centre on the +z axis. UTs are
//! area-uniform on a spherical cap of the Earth; satellites are area-uniform on the
//! parallel cap at orbit height.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;

use crate::config::SystemConfig;
use crate::rng;

pub type Vec3 = Vector3<f64>;

/// Local frame of a satellite panel. The array lies in the x-y plane; `z` points to the
/// Earth's core and `x` is normal to the (approximate) orbital plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelFrame {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl PanelFrame {
    /// Frame for a satellite at `position`. The orbital plane is taken as the plane through
    /// the satellite, the cap centre direction and the Earth's core.
    pub fn for_satellite(position: &Vec3) -> Self {
        let z = -position.normalize();
        let pole = Vec3::z();
        let normal = pole.cross(&position.normalize());
        let x = if normal.norm() < 1e-12 {
            Vec3::x()
        } else {
            normal.normalize()
        };
        let y = z.cross(&x);
        PanelFrame { x, y, z }
    }

    /// Expresses a world-frame vector in panel coordinates.
    pub fn to_local(&self, v: &Vec3) -> Vec3 {
        Vec3::new(self.x.dot(v), self.y.dot(v), self.z.dot(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sat_positions: Vec<Vec3>,
    pub sat_panel_frames: Vec<PanelFrame>,
    pub ut_positions: Vec<Vec3>,
    pub rng_seed: u64,
}

/// Angle of departure in the panel frame. `elevation` is measured from the panel plane, so
/// the panel boresight (towards nadir) has elevation `pi/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aod {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Aod {
    pub const BORESIGHT: Aod = Aod {
        azimuth: 0.0,
        elevation: PI / 2.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    /// Elevation of the satellite as seen from the UT's local horizon.
    pub ground_elevation_rad: f64,
    pub aod: Aod,
}

/// Area-uniform point on the cap of half-angle `max_angle` around +z at `radius`.
fn sample_cap<R: Rng>(rng: &mut R, radius: f64, max_angle: f64) -> Vec3 {
    let cos_min = max_angle.min(PI).cos();
    let u: f64 = rng.random();
    let cos_t = 1.0 - u * (1.0 - cos_min);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    Vec3::new(radius * sin_t * phi.cos(), radius * sin_t * phi.sin(), radius * cos_t)
}

pub fn generate_scenario(cfg: &SystemConfig) -> Scenario {
    let mut geo = rng::substream(cfg.rng_seed, rng::GEOMETRY, 0);
    let re = cfg.earth_radius_m;
    let rs = re + cfg.orbit_height_m;

    let ut_positions = (0..cfg.num_uts)
        .map(|_| sample_cap(&mut geo, re, cfg.service_area_radius_m / re))
        .collect();
    let sat_positions: Vec<Vec3> = (0..cfg.num_sats)
        .map(|_| sample_cap(&mut geo, rs, cfg.sat_area_radius_m / rs))
        .collect();
    let sat_panel_frames = sat_positions.iter().map(PanelFrame::for_satellite).collect();

    Scenario {
        sat_positions,
        sat_panel_frames,
        ut_positions,
        rng_seed: cfg.rng_seed,
    }
}

impl Scenario {
    pub fn num_sats(&self) -> usize {
        self.sat_positions.len()
    }

    pub fn num_uts(&self) -> usize {
        self.ut_positions.len()
    }

    pub fn distance(&self, s: usize, u: usize) -> f64 {
        (self.ut_positions[u] - self.sat_positions[s]).norm()
    }

    pub fn link_geometry(&self, s: usize, u: usize) -> LinkGeometry {
        let sat = self.sat_positions[s];
        let ut = self.ut_positions[u];
        let v = ut - sat;
        let distance_m = v.norm();
        let dir = v / distance_m;

        let up = ut.normalize();
        let ground_elevation_rad = (-dir).dot(&up).clamp(-1.0, 1.0).asin();

        let local = self.sat_panel_frames[s].to_local(&dir);
        let elevation = local.z.clamp(-1.0, 1.0).asin();
        let azimuth = if local.x.abs() < 1e-15 && local.y.abs() < 1e-15 {
            0.0
        } else {
            local.y.atan2(local.x)
        };

        LinkGeometry {
            distance_m,
            ground_elevation_rad,
            aod: Aod { azimuth, elevation },
        }
    }
}
