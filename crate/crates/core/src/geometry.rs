//! Two-dimensional Earth-centred scenario: satellites on a circular orbit of
//! radius `R_E + h`, users on the Earth surface, both placed by their angle
//! from the zenith (z) axis.

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

pub type Point = Vector2<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    /// ϑ_{s,l} [rad]
    pub sat_angles: Vec<f64>,
    /// ϑ_{u,k} [rad]
    pub ue_angles: Vec<f64>,
    pub sat_pos: Vec<Point>,
    pub ue_pos: Vec<Point>,
    /// Angle of departure φ_{l,k}, indexed `[l][k]`.
    pub aod: Vec<Vec<f64>>,
    /// Angle of arrival θ_{l,k}, indexed `[l][k]`.
    pub aoa: Vec<Vec<f64>>,
    /// d_{l,k} [m]
    pub dist: Vec<Vec<f64>>,
    /// Large-scale gain β_{l,k} [linear]
    pub beta: Vec<Vec<f64>>,
}

impl Geometry {
    pub fn num_sats(&self) -> usize {
        self.sat_angles.len()
    }

    pub fn num_users(&self) -> usize {
        self.ue_angles.len()
    }

    /// Builds the geometry for explicitly given satellite and user angles.
    pub fn from_angles(cfg: &ScenarioConfig, sat_angles: Vec<f64>, ue_angles: Vec<f64>) -> Result<Self> {
        let sat_r = cfg.earth_radius + cfg.altitude;
        let sat_pos: Vec<Point> = sat_angles.iter().map(|&a| position_of(a, sat_r)).collect();
        let ue_pos: Vec<Point> = ue_angles
            .iter()
            .map(|&a| position_of(a, cfg.earth_radius))
            .collect();

        let (l_count, k_count) = (sat_pos.len(), ue_pos.len());
        let mut aod = vec![vec![0.0; k_count]; l_count];
        let mut aoa = vec![vec![0.0; k_count]; l_count];
        let mut dist = vec![vec![0.0; k_count]; l_count];
        let mut beta = vec![vec![0.0; k_count]; l_count];
        for (l, ps) in sat_pos.iter().enumerate() {
            for (k, pu) in ue_pos.iter().enumerate() {
                let (phi, theta) = compute_angles(ps, pu)?;
                let d = (ps - pu).norm();
                aod[l][k] = phi;
                aoa[l][k] = theta;
                dist[l][k] = d;
                beta[l][k] = path_gain(d, cfg.carrier_freq, cfg.speed_of_light, cfg.sat_gain, cfg.ue_gain);
            }
        }
        Ok(Self {
            sat_angles,
            ue_angles,
            sat_pos,
            ue_pos,
            aod,
            aoa,
            dist,
            beta,
        })
    }
}

/// `count` angles evenly spaced over `[-half_range, half_range]`, endpoints
/// included. A single satellite sits at the zenith.
pub fn place_satellites(count: usize, half_range: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let step = 2.0 * half_range / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        half_range
                    } else {
                        -half_range + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// `count` i.i.d. angles uniform on `[-half_range, half_range]`.
pub fn place_users<R: Rng + ?Sized>(count: usize, half_range: f64, rng: &mut R) -> Vec<f64> {
    if half_range == 0.0 {
        return vec![0.0; count];
    }
    let dist = Uniform::new_inclusive(-half_range, half_range).expect("finite range");
    (0..count).map(|_| dist.sample(rng)).collect()
}

/// `[r·sin(angle), r·cos(angle)]` in the x–z plane.
pub fn position_of(angle: f64, radius: f64) -> Point {
    Point::new(radius * angle.sin(), radius * angle.cos())
}

/// Angle of departure at the satellite and angle of arrival at the user.
///
/// The satellite array faces the Earth centre (`s = -p_s/‖p_s‖`), the user
/// array faces the zenith (`u = p_u/‖p_u‖`). Both angles are measured from
/// boresight towards the perpendicular `[-z, x]`. A link whose boresight
/// projection is not positive is rejected as not visible.
pub fn compute_angles(p_sat: &Point, p_ue: &Point) -> Result<(f64, f64)> {
    let (ns, nu) = (p_sat.norm(), p_ue.norm());
    if ns == 0.0 || nu == 0.0 {
        return Err(Error::DegenerateGeometry("position at the Earth centre".into()));
    }
    let v_sat_to_ue = p_ue - p_sat;
    if v_sat_to_ue.norm() == 0.0 {
        return Err(Error::DegenerateGeometry(
            "satellite and user positions coincide".into(),
        ));
    }
    let v_ue_to_sat = -v_sat_to_ue;

    let s = -p_sat / ns;
    let s_perp = Point::new(-s.y, s.x);
    let u = p_ue / nu;
    let u_perp = Point::new(-u.y, u.x);

    let s_proj = s.dot(&v_sat_to_ue);
    if s_proj <= 0.0 {
        return Err(Error::NotVisible {
            side: "satellite",
            projection: s_proj,
        });
    }
    let u_proj = u.dot(&v_ue_to_sat);
    if u_proj <= 0.0 {
        return Err(Error::NotVisible {
            side: "user",
            projection: u_proj,
        });
    }
    let aod = (s_perp.dot(&v_sat_to_ue) / s_proj).atan();
    let aoa = (u_perp.dot(&v_ue_to_sat) / u_proj).atan();
    Ok((aod, aoa))
}

/// Free-space large-scale gain `G_s·G_u·(ν_c / (4π f_c d))²`.
pub fn path_gain(dist: f64, carrier_freq: f64, speed_of_light: f64, sat_gain: f64, ue_gain: f64) -> f64 {
    let r = speed_of_light / (4.0 * std::f64::consts::PI * carrier_freq * dist);
    sat_gain * ue_gain * r * r
}

/// Places satellites and users for one drop and evaluates every link.
pub fn build_geometry<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Geometry> {
    let sats = place_satellites(cfg.num_sats, cfg.theta_s);
    let ues = place_users(cfg.num_users, cfg.theta_u, rng);
    Geometry::from_angles(cfg, sats, ues)
}
