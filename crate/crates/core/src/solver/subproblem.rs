//! The per-satellite precoder subproblem
//!
//! ```text
//! minimise  Σ_k Tr(W_kᴴ A W_k) − 2 Re Tr(B_kᴴ W_k)   subject to the satellite's budget
//! A   = Σ_i H̃_{l,i}ᴴ U_i C_i U_iᴴ H̃_{l,i}
//! B_k = H̃_{l,k}ᴴ U_k C_k J_l
//! ```
//!
//! where `J_l` picks the `M` columns of `U_k C_k` that belong to satellite `l`.
//! For a multiplier `μ` (scalar or per antenna) the minimiser is
//! `W_k(μ) = (A + diag μ)⁻¹ B_k`.

use nalgebra::{DVector, SymmetricEigen};

use crate::channel::EffectiveChannelSet;
use crate::error::Result;
use crate::linalg::{hermitian_part, identity, solve_hpd, solve_psd, split_columns, CMat, PINV_RTOL};

#[derive(Clone, Debug)]
pub struct SatSubproblem {
    /// `A`, `N × N` Hermitian PSD.
    pub gram: CMat,
    /// `[B_1 … B_K]`, `N × KM`.
    pub rhs: CMat,
    pub user_antennas: usize,
}

impl SatSubproblem {
    pub fn new(u: &[CMat], c: &[CMat], eff: &EffectiveChannelSet, l: usize) -> Self {
        let (k_count, m, n) = (eff.num_users(), eff.user_antennas(), eff.sat_antennas());
        let mut gram = CMat::zeros(n, n);
        let mut rhs = CMat::zeros(n, k_count * m);
        for k in 0..k_count {
            let h = &eff.h[l][k];
            let uc = &u[k] * &c[k];
            let ucu = &uc * u[k].adjoint();
            gram += h.adjoint() * ucu * h;
            let block = h.adjoint() * uc.columns(l * m, m);
            rhs.view_mut((0, k * m), (n, m)).copy_from(&block);
        }
        Self {
            gram: hermitian_part(&gram),
            rhs,
            user_antennas: m,
        }
    }

    pub fn sat_antennas(&self) -> usize {
        self.gram.nrows()
    }

    /// `W(μ)` for a common multiplier; fails when `A + μI` is singular.
    pub fn solve_uniform(&self, mu: f64) -> Result<Vec<CMat>> {
        let reg = &self.gram + identity(self.sat_antennas()).scale(mu);
        let w = solve_hpd(&reg, &self.rhs, "per-satellite precoder system")?;
        Ok(split_columns(&w, self.user_antennas))
    }

    /// `W(μ)` for per-antenna multipliers (negative entries are clipped to
    /// zero). A singular system falls back to the minimum-norm solution.
    pub fn solve_diagonal(&self, mu: &[f64]) -> Vec<CMat> {
        split_columns(&self.solve_diagonal_stacked(mu), self.user_antennas)
    }

    /// `[W_1(μ) … W_K(μ)]` as one `N × KM` matrix.
    pub(crate) fn solve_diagonal_stacked(&self, mu: &[f64]) -> CMat {
        let mut reg = self.gram.clone();
        for (i, &m) in mu.iter().enumerate() {
            reg[(i, i)] += m.max(0.0);
        }
        solve_psd(&reg, &self.rhs)
    }

    /// `Σ_k Tr(W_kᴴ A W_k) − 2 Re Tr(B_kᴴ W_k)`.
    pub fn objective(&self, w: &[CMat]) -> f64 {
        let m = self.user_antennas;
        w.iter()
            .enumerate()
            .map(|(k, wk)| {
                let quad = (wk.adjoint() * &self.gram * wk).trace().re;
                let lin = (self.rhs.columns(k * m, m).adjoint() * wk).trace().re;
                quad - 2.0 * lin
            })
            .sum()
    }

    /// `−min_W objective = Tr(Bᴴ A⁺ B)`; bounds `Σ_n μ*_n ρ_n` from above.
    pub fn unconstrained_gain(&self) -> f64 {
        let spec = SpectralSubproblem::new(self);
        spec.gain()
    }
}

/// Eigen-decomposed form of the subproblem used by the scalar multiplier
/// search: with `A = V Λ Vᴴ` and `B̂ = Vᴴ B`, the power at `μ` is
/// `Σ_j ‖B̂_j‖² / (λ_j + μ)²`. Directions in the numerical null space of `A`
/// carry no right-hand side and are dropped, so `μ = 0` yields the
/// minimum-norm minimiser.
#[derive(Clone, Debug)]
pub struct SpectralSubproblem {
    vectors: CMat,
    values: DVector<f64>,
    projected: CMat,
    row_energy: Vec<f64>,
    in_range: Vec<bool>,
    user_antennas: usize,
}

impl SpectralSubproblem {
    pub fn new(sub: &SatSubproblem) -> Self {
        let eig = SymmetricEigen::new(sub.gram.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let in_range: Vec<bool> = eig
            .eigenvalues
            .iter()
            .map(|&v| v > 0.0 && v > PINV_RTOL * lmax)
            .collect();
        let projected = eig.eigenvectors.adjoint() * &sub.rhs;
        let row_energy = projected.row_iter().map(|r| r.norm_squared()).collect();
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
            projected,
            row_energy,
            in_range,
            user_antennas: sub.user_antennas,
        }
    }

    fn inverse_weights(&self, mu: f64) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.in_range).map(move |(&lam, &ok)| {
            if ok {
                1.0 / (lam + mu)
            } else {
                0.0
            }
        })
    }

    pub fn power(&self, mu: f64) -> f64 {
        self.inverse_weights(mu)
            .zip(&self.row_energy)
            .map(|(w, e)| w * w * e)
            .sum()
    }

    pub fn precoders(&self, mu: f64) -> Vec<CMat> {
        let mut scaled = self.projected.clone();
        for (j, w) in self.inverse_weights(mu).enumerate() {
            scaled.row_mut(j).scale_mut(w);
        }
        split_columns(&(&self.vectors * scaled), self.user_antennas)
    }

    fn gain(&self) -> f64 {
        self.inverse_weights(0.0)
            .zip(&self.row_energy)
            .map(|(w, e)| w * e)
            .sum()
    }
}
