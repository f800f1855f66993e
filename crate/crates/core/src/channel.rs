//! Line-of-sight channel model. Each satellite–user link is the rank-one
//! matrix `γ_{l,k} · b_{l,k} a_{l,k}ᵀ`; the optimiser only ever sees the
//! deterministic effective part `√β_{l,k} · b_{l,k} a_{l,k}ᵀ`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::geometry::Geometry;
use crate::linalg::{hstack, singular_values, CMat, CVec, C64};
use crate::scenario::Kappa;

/// Rician factors at or above this value are treated as pure line of sight.
pub const KAPPA_LOS_ONLY: f64 = 1e12;

/// ULA response: entry `m` is `exp(j·2π·spacing·m·sin(angle))`.
pub fn ula_response(angle: f64, n_elems: usize, spacing: f64) -> CVec {
    let step = 2.0 * PI * spacing * angle.sin();
    CVec::from_iterator(n_elems, (0..n_elems).map(|m| C64::from_polar(1.0, step * m as f64)))
}

/// `√β · b aᵀ` (plain transpose).
pub fn effective_channel(beta: f64, b: &CVec, a: &CVec) -> CMat {
    (b * a.transpose()).scale(beta.sqrt())
}

/// Deterministic effective channels for every satellite–user pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveChannelSet {
    /// `H̃_{l,k}`, `M × N`, indexed `[l][k]`.
    pub h: Vec<Vec<CMat>>,
    /// User-side responses `b_{l,k}`.
    pub b: Vec<Vec<CVec>>,
    /// Satellite-side responses `a_{l,k}`.
    pub a: Vec<Vec<CVec>>,
    pub beta: Vec<Vec<f64>>,
}

impl EffectiveChannelSet {
    pub fn from_geometry(geom: &Geometry, user_antennas: usize, sat_antennas: usize, spacing: f64) -> Self {
        let b = geom
            .aoa
            .iter()
            .map(|row| row.iter().map(|&t| ula_response(t, user_antennas, spacing)).collect())
            .collect();
        let a = geom
            .aod
            .iter()
            .map(|row| row.iter().map(|&p| ula_response(p, sat_antennas, spacing)).collect())
            .collect();
        Self::from_parts(geom.beta.clone(), b, a)
    }

    /// Assembles a set from arbitrary gains and response vectors.
    pub fn from_parts(beta: Vec<Vec<f64>>, b: Vec<Vec<CVec>>, a: Vec<Vec<CVec>>) -> Self {
        let h = beta
            .iter()
            .zip(b.iter().zip(a.iter()))
            .map(|(beta_row, (b_row, a_row))| {
                beta_row
                    .iter()
                    .zip(b_row.iter().zip(a_row.iter()))
                    .map(|(&bt, (bv, av))| effective_channel(bt, bv, av))
                    .collect()
            })
            .collect();
        Self { h, b, a, beta }
    }

    pub fn num_sats(&self) -> usize {
        self.h.len()
    }

    pub fn num_users(&self) -> usize {
        self.h.first().map_or(0, |r| r.len())
    }

    /// M
    pub fn user_antennas(&self) -> usize {
        self.h[0][0].nrows()
    }

    /// N
    pub fn sat_antennas(&self) -> usize {
        self.h[0][0].ncols()
    }

    /// `[H̃_{1,k}, …, H̃_{L,k}]`, `M × LN`.
    pub fn stacked_for_user(&self, k: usize) -> CMat {
        let blocks: Vec<CMat> = self.h.iter().map(|row| row[k].clone()).collect();
        hstack(&blocks)
    }
}

/// One draw of `γ = √β (√(κ/(κ+1))·e^{jψ} + √(1/(κ+1))·z)`.
pub fn sample_gain<R: Rng + ?Sized>(beta: f64, kappa: f64, rng: &mut R) -> C64 {
    let psi = Uniform::new(0.0, 2.0 * PI).expect("valid range").sample(rng);
    let zr: f64 = StandardNormal.sample(rng);
    let zi: f64 = StandardNormal.sample(rng);
    let z = C64::new(zr, zi) * std::f64::consts::FRAC_1_SQRT_2;
    let los = C64::from_polar(1.0, psi);
    if kappa >= KAPPA_LOS_ONLY {
        return los * beta.sqrt();
    }
    let w_los = (kappa / (kappa + 1.0)).sqrt();
    let w_nlos = (1.0 / (kappa + 1.0)).sqrt();
    (los * w_los + z * w_nlos) * beta.sqrt()
}

/// Independent gains for every link, drawn satellite-major.
pub fn sample_gains<R: Rng + ?Sized>(beta: &[Vec<f64>], kappa: &Kappa, rng: &mut R) -> Vec<Vec<C64>> {
    beta.iter()
        .enumerate()
        .map(|(l, row)| {
            row.iter()
                .enumerate()
                .map(|(k, &b)| sample_gain(b, kappa.get(l, k), rng))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub gamma: Vec<Vec<C64>>,
    /// `H_{l,k} = γ_{l,k} b_{l,k} a_{l,k}ᵀ`
    pub h: Vec<Vec<CMat>>,
}

pub fn realize_channels<R: Rng + ?Sized>(eff: &EffectiveChannelSet, kappa: &Kappa, rng: &mut R) -> ChannelRealization {
    let gamma = sample_gains(&eff.beta, kappa, rng);
    let h = gamma
        .iter()
        .enumerate()
        .map(|(l, row)| {
            row.iter()
                .enumerate()
                .map(|(k, &g)| (&eff.b[l][k] * eff.a[l][k].transpose()) * g)
                .collect()
        })
        .collect();
    ChannelRealization { gamma, h }
}

/// `σ₂/σ₁` of the horizontally stacked channel blocks of one user; zero when
/// the stack has fewer than two rows or is identically zero.
pub fn stacked_singular_ratio(blocks: &[CMat]) -> f64 {
    if blocks.is_empty() || blocks[0].nrows() < 2 {
        return 0.0;
    }
    let s = singular_values(&hstack(blocks));
    if s[0] == 0.0 {
        return 0.0;
    }
    s.get(1).copied().unwrap_or(0.0) / s[0]
}
