//! D-optimality of designs and the structural bounds on it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse_spectral_norm, phi_d, phi_d_of_matrix, qf_factor};
use crate::rsvd::SvdFactors;
use crate::selection::v11;

/// Slack used when re-checking bound inequalities.
pub const BOUND_SLACK: f64 = 1e-8;

/// Columns of `a` at `indices`.
pub fn select_columns(a: &DMatrix<f64>, indices: &[usize]) -> Result<DMatrix<f64>> {
    for &i in indices {
        if i >= a.ncols() {
            return Err(Error::IndexOutOfRange { index: i, len: a.ncols() });
        }
    }
    let mut c = DMatrix::zeros(a.nrows(), indices.len());
    for (dst, &src) in indices.iter().enumerate() {
        c.set_column(dst, &a.column(src));
    }
    Ok(c)
}

/// `φ_D(C) = logdet(I + CCᵀ)` for `C = A[:, indices]`.
pub fn evaluate_design(a: &DMatrix<f64>, indices: &[usize]) -> Result<f64> {
    phi_d_of_matrix(&select_columns(a, indices)?)
}

/// `φ_D(Σ_k/ν)`; zero when `ν = ∞`.
pub fn gks_lower_bound(sigma_k: &[f64], v11_inv_norm: f64) -> Result<f64> {
    if v11_inv_norm.is_nan() || v11_inv_norm < 1.0 - 1e-10 {
        return Err(Error::Domain(format!(
            "‖V₁₁⁻¹‖₂ must be at least 1, got {v11_inv_norm}"
        )));
    }
    if v11_inv_norm.is_infinite() {
        return Ok(0.0);
    }
    let scaled: Vec<f64> = sigma_k.iter().map(|s| s / v11_inv_norm).collect();
    phi_d(&scaled)
}

/// Per-singular-value combination of the leading-principal-submatrix bound
/// and the whole-block bound: `φ_D(Σ_k D)` with
/// `d_j = 1/min(‖V₍ⱼ,ⱼ₎⁻¹‖₂, ‖V₁₁⁻¹‖₂)`.
pub fn combined_lower_bound(sigma_k: &[f64], v11: &DMatrix<f64>) -> Result<f64> {
    let k = v11.nrows();
    if v11.ncols() != k || sigma_k.len() != k {
        return Err(Error::Dimension(format!(
            "need a {0}x{0} block and {0} singular values, got {1}x{2} and {3}",
            k,
            v11.nrows(),
            v11.ncols(),
            sigma_k.len()
        )));
    }
    Ok(combined_scales(v11)?
        .iter()
        .zip(sigma_k)
        .map(|(d, s)| (s * s * d * d).ln_1p())
        .sum())
}

/// The `d_j` factors of [`combined_lower_bound`].
pub fn combined_scales(v11: &DMatrix<f64>) -> Result<Vec<f64>> {
    let k = v11.nrows();
    let whole = inverse_spectral_norm(v11)?;
    (1..=k)
        .map(|j| {
            let lead = inverse_spectral_norm(&v11.view((0, 0), (j, j)).into_owned())?;
            let nu = lead.min(whole);
            Ok(if nu.is_infinite() { 0.0 } else { 1.0 / nu })
        })
        .collect()
}

/// `C_g = (e√d/(p+1)) (2/δ)^{1/(p+1)} (√n + √d + √(2 log(2/δ)))`.
pub fn raf_constant(n: usize, d: usize, p: usize, delta: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("oversampling p must be >= 2, got {p}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (n, d, p1) = (n as f64, d as f64, (p + 1) as f64);
    let lead = std::f64::consts::E * d.sqrt() / p1;
    let tail = (2.0 / delta).powf(1.0 / p1);
    let spread = n.sqrt() + d.sqrt() + (2.0 * (2.0 / delta).ln()).sqrt();
    Ok(lead * tail * spread)
}

/// `q_f^U(m, s, k) = q_f(s, k) √(2m / (s(1 − ε)))`.
pub fn hybrid_factor(m: usize, s: usize, k: usize, f: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if s < k {
        return Err(Error::Dimension(format!("need s >= k, got s = {s}, k = {k}")));
    }
    Ok(qf_factor(s, k, f)? * (2.0 * m as f64 / (s as f64 * (1.0 - eps))).sqrt())
}

/// Minimum sample count `⌈4kε⁻²log(k/δ)⌉` for the hybrid guarantee.
pub fn hybrid_min_samples(k: usize, eps: f64, delta: f64) -> usize {
    let k = k as f64;
    (4.0 * k / (eps * eps) * (k / delta).ln()).ceil() as usize
}

/// Best `k`-subset by exhaustive enumeration (ties: lexicographically first).
/// Only feasible for small `m`.
pub fn exhaustive_optimum(a: &DMatrix<f64>, k: usize) -> Result<(Vec<usize>, f64)> {
    let m = a.ncols();
    if k > m {
        return Err(Error::Dimension(format!("k = {k} exceeds m = {m}")));
    }
    if m > 24 {
        return Err(Error::SizeGuard(format!("exhaustive search over {m} candidates")));
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let v = evaluate_design(a, &idx)?;
        if v > best.1 {
            best = (idx.clone(), v);
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Which inequalities of the bound chain held (with [`BOUND_SLACK`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundChecks {
    /// `φ_D(Σ_k/‖V₁₁⁻¹‖₂) ≤ φ_D(C)`
    pub lower_gks: bool,
    /// `φ_D(Σ_k D) ≤ φ_D(C)`
    pub lower_combined: bool,
    /// `φ_D(C) ≤ φ_D(Σ_k)`
    pub selected_le_sigma_k: bool,
    /// `φ_D(Σ_k) ≤ φ_D(A)`
    pub sigma_k_le_full: bool,
    /// `φ_D(Σ_k/q_f) ≤ φ_D(C)` when a worst-case factor is supplied.
    pub lower_qf: bool,
}

impl BoundChecks {
    pub fn all(&self) -> bool {
        self.lower_gks && self.lower_combined && self.selected_le_sigma_k && self.sigma_k_le_full && self.lower_qf
    }
}

/// Every bound evaluated from exact dense spectra for one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub phi_full: f64,
    pub phi_sigma_k: f64,
    pub phi_selected: f64,
    pub v11_inv_norm: f64,
    pub phi_lower_gks: f64,
    pub phi_lower_combined: f64,
    pub q_f: Option<f64>,
    pub phi_lower_qf: Option<f64>,
    pub c_g: Option<f64>,
    pub q_f_u: Option<f64>,
    pub holds: BoundChecks,
}

impl BoundReport {
    /// Bounds for `indices` (in selection order) against the exact
    /// factorization of the dense operator `a`. `exact` must carry the
    /// full residual spectrum so that `φ_D(A)` is available.
    ///
    /// `worst_case` is the amplification factor to test as a lower bound,
    /// e.g. `q_f(m,k)` for sRRQR, `q_f C_g` for RAF or `q_f^U` for hybrid.
    pub fn evaluate(
        a: &DMatrix<f64>,
        exact: &SvdFactors,
        indices: &[usize],
        worst_case: Option<f64>,
    ) -> Result<Self> {
        let k = exact.rank();
        if indices.len() != k {
            return Err(Error::Dimension(format!(
                "design has {} columns, factorization rank is {k}",
                indices.len()
            )));
        }
        let resid = exact
            .residual_sigma
            .as_ref()
            .ok_or_else(|| Error::Contract("bound report needs the residual spectrum".into()))?;
        let phi_sigma_k = phi_d(&exact.sigma_k)?;
        let phi_full = phi_sigma_k + phi_d(resid)?;
        let phi_selected = evaluate_design(a, indices)?;
        let block = v11(&exact.v_k, indices);
        let nu = inverse_spectral_norm(&block)?;
        let phi_lower_gks = gks_lower_bound(&exact.sigma_k, nu)?;
        let phi_lower_combined = combined_lower_bound(&exact.sigma_k, &block)?;
        let phi_lower_qf = match worst_case {
            Some(q) => Some(gks_lower_bound(&exact.sigma_k, q)?),
            None => None,
        };
        let le = |x: f64, y: f64| x <= y + BOUND_SLACK * (1.0 + y.abs());
        let holds = BoundChecks {
            lower_gks: le(phi_lower_gks, phi_selected),
            lower_combined: le(phi_lower_combined, phi_selected),
            selected_le_sigma_k: le(phi_selected, phi_sigma_k),
            sigma_k_le_full: le(phi_sigma_k, phi_full),
            lower_qf: phi_lower_qf.is_none_or(|b| le(b, phi_selected)),
        };
        Ok(Self {
            phi_full,
            phi_sigma_k,
            phi_selected,
            v11_inv_norm: nu,
            phi_lower_gks,
            phi_lower_combined,
            q_f: worst_case,
            phi_lower_qf,
            c_g: None,
            q_f_u: None,
            holds,
        })
    }
}
