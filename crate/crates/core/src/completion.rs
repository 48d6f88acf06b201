//! Data completion with the interpolatory projector `P = V_k (SᵀV_k)⁻¹ Sᵀ`
//! and MAP estimation for linear-Gaussian models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::criteria::select_columns;
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::operator::{compose_preconditioned, densify, densify_by_rows, LinearOperator, PreconditionedOperator};

/// `d = F m + ε` with `m ~ N(μ_pr, GGᵀ)` and `ε ~ N(0, η² I)`.
#[derive(Debug, Clone)]
pub struct BayesModel {
    pub forward: LinearOperator,
    pub prior_factor: LinearOperator,
    pub prior_precision: LinearOperator,
    pub mu_pr: DVector<f64>,
    pub eta: f64,
}

impl BayesModel {
    pub fn new(
        forward: LinearOperator,
        prior_factor: LinearOperator,
        prior_precision: LinearOperator,
        mu_pr: DVector<f64>,
        eta: f64,
    ) -> Result<Self> {
        let n = forward.in_dim();
        if prior_factor.out_dim() != n || prior_factor.in_dim() != n {
            return Err(Error::Dimension(format!(
                "prior factor is {}x{}, expected {n}x{n}",
                prior_factor.out_dim(),
                prior_factor.in_dim()
            )));
        }
        if prior_precision.out_dim() != n || prior_precision.in_dim() != n {
            return Err(Error::Dimension("prior precision does not match parameter dimension".into()));
        }
        if mu_pr.len() != n {
            return Err(Error::Dimension(format!("prior mean has length {}, expected {n}", mu_pr.len())));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("noise level must be positive, got {eta}")));
        }
        Ok(Self { forward, prior_factor, prior_precision, mu_pr, eta })
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("noise level must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.forward.in_dim()
    }

    pub fn m(&self) -> usize {
        self.forward.out_dim()
    }

    /// `A = η⁻¹ G Fᵀ`.
    pub fn preconditioned(&self) -> Result<PreconditionedOperator> {
        compose_preconditioned(&self.forward, &self.prior_factor, self.eta)
    }

    /// `‖x‖_{Γ_pr⁻¹}`.
    pub fn prior_norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.prior_precision.apply(x)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub completed: Vec<f64>,
    pub selected_values: Vec<f64>,
    pub rel_error: Option<f64>,
    pub bound_value: Option<f64>,
}

/// `P d` from the observed entries `Sᵀd` alone.
pub fn bdeim_project(v_k: &DMatrix<f64>, indices: &[usize], observed: &DVector<f64>) -> Result<CompletionResult> {
    let k = v_k.ncols();
    if indices.len() != k {
        return Err(Error::Dimension(format!("{} indices for a rank-{k} basis", indices.len())));
    }
    if observed.len() != k {
        return Err(Error::Dimension(format!("{} observations for {k} indices", observed.len())));
    }
    let s_v = select_columns(&v_k.transpose(), indices)?.transpose();
    let sv = singular_values(&s_v);
    if sv.last().is_none_or(|&s| s <= 1e-12) {
        return Err(Error::Singular(
            "SᵀV_k is singular; the selected sensors cannot interpolate this basis, re-select".into(),
        ));
    }
    let coeffs = s_v
        .lu()
        .solve(observed)
        .ok_or_else(|| Error::Singular("SᵀV_k is singular; re-select sensors".into()))?;
    let completed = v_k * coeffs;
    Ok(CompletionResult {
        completed: completed.iter().copied().collect(),
        selected_values: observed.iter().copied().collect(),
        rel_error: None,
        bound_value: None,
    })
}

/// Completes `d` from its entries at `indices` and records `‖d − Pd‖/‖d‖`.
pub fn complete_data(v_k: &DMatrix<f64>, indices: &[usize], d: &DVector<f64>) -> Result<CompletionResult> {
    for &i in indices {
        if i >= d.len() {
            return Err(Error::IndexOutOfRange { index: i, len: d.len() });
        }
    }
    if v_k.nrows() != d.len() {
        return Err(Error::Dimension(format!("basis has {} rows, data has {}", v_k.nrows(), d.len())));
    }
    let observed = DVector::from_iterator(indices.len(), indices.iter().map(|&i| d[i]));
    let mut res = bdeim_project(v_k, indices, &observed)?;
    let pd = DVector::from_column_slice(&res.completed);
    res.rel_error = Some(relative_error(&pd, d)?);
    Ok(res)
}

/// MAP point from `(η⁻²FᵀF + Γ_pr⁻¹) m = η⁻²Fᵀd + Γ_pr⁻¹μ_pr`, assembled
/// densely and solved by Cholesky.
pub fn map_estimate(model: &BayesModel, data: &DVector<f64>) -> Result<DVector<f64>> {
    if data.len() != model.m() {
        return Err(Error::Dimension(format!("data has length {}, expected {}", data.len(), model.m())));
    }
    let f = densify_by_rows(&model.forward)?;
    let precision = densify(&model.prior_precision)?;
    let inv_eta2 = model.eta.powi(-2);
    let mut hessian = f.tr_mul(&f) * inv_eta2 + &precision;
    // symmetrize away roundoff from the matrix-free precision
    hessian = (&hessian + hessian.transpose()) * 0.5;
    let rhs = f.tr_mul(data) * inv_eta2 + &precision * &model.mu_pr;
    let chol = hessian
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("posterior Hessian is not positive definite".into()))?;
    let m = chol.solve(&rhs);
    let resid = (&hessian * &m - &rhs).norm();
    if resid > 1e-8 * rhs.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Convergence(format!("normal-equation residual {resid:.3e} too large")));
    }
    Ok(m)
}

/// Data-space form of the MAP point,
/// `μ_pr + Γ_pr Fᵀ (F Γ_pr Fᵀ + η² I)⁻¹ (d − F μ_pr)`.
///
/// Setup costs `m` adjoint and `m` forward solves; afterwards the MAP point
/// for any sensor subset costs only dense work of size `n × |subset|`.
#[derive(Debug, Clone)]
pub struct DataSpaceMap {
    gamma_ft: DMatrix<f64>,
    data_cov: DMatrix<f64>,
    f_mu: DVector<f64>,
    mu_pr: DVector<f64>,
    eta: f64,
}

impl DataSpaceMap {
    pub fn new(model: &BayesModel) -> Result<Self> {
        let (n, m) = (model.n(), model.m());
        let mut gamma_ft = DMatrix::zeros(n, m);
        let mut data_cov = DMatrix::zeros(m, m);
        for i in 0..m {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            let col = model.prior_factor.apply(&model.prior_factor.apply_adjoint(&model.forward.apply_adjoint(&e)));
            data_cov.set_column(i, &model.forward.apply(&col));
            gamma_ft.set_column(i, &col);
        }
        let data_cov = (&data_cov + data_cov.transpose()) * 0.5;
        Ok(Self { gamma_ft, data_cov, f_mu: model.forward.apply(&model.mu_pr), mu_pr: model.mu_pr.clone(), eta: model.eta })
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("noise level must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn estimate(&self, data: &DVector<f64>) -> Result<DVector<f64>> {
        let all: Vec<usize> = (0..self.f_mu.len()).collect();
        self.estimate_subset(&all, data)
    }

    /// MAP point using only the sensors in `indices`; `observed[i]` is the
    /// reading of sensor `indices[i]`.
    pub fn estimate_subset(&self, indices: &[usize], observed: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.f_mu.len();
        if observed.len() != indices.len() {
            return Err(Error::Dimension(format!("{} readings for {} sensors", observed.len(), indices.len())));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::IndexOutOfRange { index: bad, len: m });
        }
        let k = indices.len();
        let mut sub = DMatrix::from_fn(k, k, |a, b| self.data_cov[(indices[a], indices[b])]);
        for a in 0..k {
            sub[(a, a)] += self.eta * self.eta;
        }
        let chol = sub
            .cholesky()
            .ok_or_else(|| Error::Singular("data-space covariance is not positive definite".into()))?;
        let resid = DVector::from_fn(k, |a, _| observed[a] - self.f_mu[indices[a]]);
        let w = chol.solve(&resid);
        let mut out = self.mu_pr.clone();
        for (a, &i) in indices.iter().enumerate() {
            out.axpy(w[a], &self.gamma_ft.column(i), 1.0);
        }
        Ok(out)
    }
}

/// MAP point computed from the completed data `Pd`.
pub fn approx_map_estimate(
    model: &BayesModel,
    v_k: &DMatrix<f64>,
    indices: &[usize],
    observed: &DVector<f64>,
) -> Result<DVector<f64>> {
    let res = bdeim_project(v_k, indices, observed)?;
    map_estimate(model, &DVector::from_column_slice(&res.completed))
}

/// `amp · (‖Σ_⊥‖_F + ‖Σ_⊥‖₂ ‖μ_pr‖_{Γ_pr⁻¹} + √(m − k))`, bounding the
/// expected completion error in the `η⁻¹‖·‖₂` norm.
pub fn completion_bound(
    residual_sigma: &[f64],
    amplification: f64,
    mu_prior_norm: f64,
    m: usize,
    k: usize,
) -> Result<f64> {
    if k >= m {
        return Err(Error::Domain(format!("completion bound needs k < m, got k={k}, m={m}")));
    }
    if !(amplification >= 1.0 - 1e-10) {
        return Err(Error::Domain(format!("amplification factor must be >= 1, got {amplification}")));
    }
    if !(mu_prior_norm >= 0.0) {
        return Err(Error::Domain(format!("prior-mean norm must be nonnegative, got {mu_prior_norm}")));
    }
    if residual_sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Domain("residual singular values must be nonnegative".into()));
    }
    let frob = residual_sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    let spec = residual_sigma.iter().copied().fold(0.0, f64::max);
    Ok(amplification * (frob + spec * mu_prior_norm + ((m - k) as f64).sqrt()))
}

pub fn relative_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension(format!("lengths {} and {} differ", estimate.len(), truth.len())));
    }
    let norm = truth.norm();
    if norm == 0.0 {
        return Err(Error::Domain("relative error against a zero reference".into()));
    }
    Ok((estimate - truth).norm() / norm)
}
