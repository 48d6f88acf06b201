//! Randomized truncated SVD of a matrix-free operator.
//!
//! Range finder with a Gaussian test matrix, `q` rounds of subspace
//! iteration, and a thin QR after every block of operator applications.
//! Cost: `(2q + 2)(k + p)` applies (forward and adjoint combined).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_svd, orthonormalize, RANK_TOL};
use crate::operator::{densify, LinearOperator};

/// Truncated factors `A ≈ U_k Σ_k V_kᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `n × k`, orthonormal columns.
    pub u_k: DMatrix<f64>,
    /// Nonincreasing, length `k`.
    pub sigma_k: Vec<f64>,
    /// `m × k`, orthonormal columns.
    pub v_k: DMatrix<f64>,
    /// Singular values of the discarded part, when known.
    pub residual_sigma: Option<Vec<f64>>,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma_k.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&DVector::from_column_slice(&self.sigma_k));
        &self.u_k * s * self.v_k.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchConfig {
    pub k: usize,
    #[serde(default = "default_oversampling")]
    pub p: usize,
    #[serde(default = "default_power_iters")]
    pub q: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_oversampling() -> usize {
    20
}

fn default_power_iters() -> usize {
    1
}

impl SketchConfig {
    pub fn new(k: usize) -> Self {
        Self { k, p: default_oversampling(), q: default_power_iters(), seed: 0 }
    }

    pub fn with_p(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Operator applies consumed by [`randomized_svd`].
    pub fn apply_cost(&self) -> u64 {
        ((2 * self.q + 2) * (self.k + self.p)) as u64
    }
}

/// `rows × cols` matrix of i.i.d. `N(0, variance)` entries. Column `j` is
/// drawn from its own ChaCha stream, so results do not depend on the
/// order in which columns are generated or consumed.
pub fn gaussian_matrix(rows: usize, cols: usize, variance: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::Domain(format!("variance must be positive, got {variance}")));
    }
    let sd = variance.sqrt();
    let columns: Vec<DVector<f64>> = (0..cols)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            DVector::from_fn(rows, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
        })
        .collect();
    if cols == 0 {
        return Ok(DMatrix::zeros(rows, 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

pub(crate) fn apply_block(op: &LinearOperator, x: &DMatrix<f64>, adjoint: bool) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let v = x.column(j).into_owned();
            if adjoint {
                op.apply_adjoint(&v)
            } else {
                op.apply(&v)
            }
        })
        .collect();
    DMatrix::from_columns(&cols)
}

pub fn randomized_svd(op: &LinearOperator, cfg: &SketchConfig) -> Result<SvdFactors> {
    let (n, m) = (op.out_dim(), op.in_dim());
    let l = cfg.k + cfg.p;
    if cfg.k == 0 {
        return Err(Error::Domain("target rank k must be at least 1".into()));
    }
    if l > n.min(m) {
        return Err(Error::Dimension(format!(
            "k + p = {l} exceeds min(out_dim, in_dim) = {}",
            n.min(m)
        )));
    }
    let omega = gaussian_matrix(m, l, 1.0, cfg.seed)?;
    let mut q = orthonormalize(&apply_block(op, &omega, false));
    for _ in 0..cfg.q {
        let z = orthonormalize(&apply_block(op, &q, true));
        q = orthonormalize(&apply_block(op, &z, false));
    }
    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ
    let bt = apply_block(op, &q, true);
    let small = dense_svd(&bt.transpose());
    let k = cfg.k;
    let sigma_k: Vec<f64> = small.sigma.iter().take(k).copied().collect();
    if !(sigma_k[0] > 0.0) || sigma_k[k - 1] <= RANK_TOL * sigma_k[0] {
        return Err(Error::RankDeficient(format!(
            "sketch has numerical rank below k = {k} (sigma_k = {:e})",
            sigma_k[k - 1]
        )));
    }
    let u_k = &q * small.u.columns(0, k);
    let v_k = small.v.columns(0, k).into_owned();
    Ok(SvdFactors { u_k, sigma_k, v_k, residual_sigma: None })
}

/// Exact truncated SVD by densifying `op` (desk scale only). The residual
/// spectrum is filled in from the same decomposition.
pub fn exact_svd(op: &LinearOperator, k: usize) -> Result<SvdFactors> {
    let dense = densify(op)?;
    exact_svd_dense(&dense, k)
}

pub fn exact_svd_dense(a: &DMatrix<f64>, k: usize) -> Result<SvdFactors> {
    let r = a.nrows().min(a.ncols());
    if k == 0 || k > r {
        return Err(Error::Dimension(format!("k = {k} must lie in 1..={r}")));
    }
    let svd = dense_svd(a);
    let s = svd.sigma.as_slice();
    if !(s[0] > 0.0) || s[k - 1] <= RANK_TOL * s[0] {
        return Err(Error::RankDeficient(format!(
            "operator has numerical rank below k = {k}"
        )));
    }
    Ok(SvdFactors {
        u_k: svd.u.columns(0, k).into_owned(),
        sigma_k: s[..k].to_vec(),
        v_k: svd.v.columns(0, k).into_owned(),
        residual_sigma: Some(s[k..].to_vec()),
    })
}

/// Singular values of `A − U_kΣ_kV_kᵀ` by densification; returns the
/// leading `min(n, m) − k` values.
pub fn residual_spectrum(op: &LinearOperator, factors: &SvdFactors) -> Result<Vec<f64>> {
    let dense = densify(op)?;
    Ok(residual_spectrum_dense(&dense, factors))
}

pub fn residual_spectrum_dense(a: &DMatrix<f64>, factors: &SvdFactors) -> Vec<f64> {
    let resid = a - factors.reconstruct();
    let r = a.nrows().min(a.ncols());
    let keep = r.saturating_sub(factors.rank());
    crate::linalg::singular_values(&resid).into_iter().take(keep).collect()
}
