//! Sensor selection as column subset selection on `A` (`n × m`, one column
//! per candidate sensor).
//!
//! * GKS: truncated SVD, then pivoted QR on `V_kᵀ`.
//! * RAF: pivoted QR on a Gaussian sketch `ΩA`; uses only `Aᵀ` applies,
//!   i.e. forward solves with the measurement model and no adjoints.
//! * Hybrid: leverage-score sampling with replacement followed by pivoted
//!   QR on the weighted sample `V_kᵀSD`.
//! * Greedy: one column at a time, maximizing `logdet(I + XXᵀ)`.
//! * Random: uniform `k`-subset baseline.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse_spectral_norm, qrcp, singular_values, srrqr, PivotedQr};
use crate::operator::{ApplyCounts, LinearOperator};
use crate::rsvd::{apply_block, exact_svd, gaussian_matrix, randomized_svd, SketchConfig, SvdFactors};

/// Column pivoting strategy for the QR stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum PivotRule {
    #[default]
    Qrcp,
    Srrqr { f: f64 },
}

impl PivotRule {
    pub fn factor(&self, m: &DMatrix<f64>, k: usize) -> Result<PivotedQr> {
        match *self {
            PivotRule::Qrcp => qrcp(m, k),
            PivotRule::Srrqr { f } => srrqr(m, k, f),
        }
    }

    pub fn f(&self) -> Option<f64> {
        match *self {
            PivotRule::Qrcp => None,
            PivotRule::Srrqr { f } => Some(f),
        }
    }
}

/// Where the right singular vectors come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvdBackend {
    Randomized(SketchConfig),
    /// Dense SVD after densification (desk scale).
    Exact,
}

impl SvdBackend {
    pub fn factors(&self, a: &LinearOperator, k: usize) -> Result<SvdFactors> {
        match *self {
            SvdBackend::Randomized(cfg) => randomized_svd(a, &SketchConfig { k, ..cfg }),
            SvdBackend::Exact => exact_svd(a, k),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            SvdBackend::Randomized(cfg) => Some(cfg.seed),
            SvdBackend::Exact => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gks,
    Raf,
    Hybrid,
    Greedy,
    Random,
    Full,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gks => "gks",
            Method::Raf => "raf",
            Method::Hybrid => "hybrid",
            Method::Greedy => "greedy",
            Method::Random => "random",
            Method::Full => "full",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gks" => Method::Gks,
            "raf" => Method::Raf,
            "hybrid" => Method::Hybrid,
            "greedy" => Method::Greedy,
            "random" => Method::Random,
            "full" => Method::Full,
            other => return Err(Error::Domain(format!("unknown method '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// `‖V₁₁⁻¹‖₂` for the basis used by the method, `∞` if singular.
    pub v11_inv_norm: Option<f64>,
    pub sigma_k: Vec<f64>,
    /// Applies of the operator handed to the selector.
    pub applies: ApplyCounts,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub f: Option<f64>,
    pub beta: Option<f64>,
    /// `σ_k(V_kᵀSD)` of the weighted hybrid sample.
    pub sample_sigma_min: Option<f64>,
    /// Hybrid only: the stage-1 draws, with repetition, in draw order.
    pub sampled: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Distinct candidate indices in selection order.
    pub indices: Vec<usize>,
    /// Hybrid only: diagonal of `D₁`, aligned with `indices`.
    pub weights: Option<Vec<f64>>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// `V_kᵀ` restricted to `indices`, i.e. `V₁₁`.
pub fn v11(v_k: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    let k = v_k.ncols();
    DMatrix::from_fn(k, indices.len(), |i, j| v_k[(indices[j], i)])
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::Dimension(format!("k = {k} must lie in 1..={m}")));
    }
    Ok(())
}

/// Pivoted QR on `V_kᵀ` of a precomputed basis.
pub fn gks_from_factors(factors: &SvdFactors, pivot: PivotRule) -> Result<SelectionResult> {
    let k = factors.rank();
    let vt = factors.v_k.transpose();
    let fact = pivot.factor(&vt, k)?;
    let indices = fact.leading(k);
    let nu = inverse_spectral_norm(&v11(&factors.v_k, &indices))?;
    Ok(SelectionResult {
        indices,
        weights: None,
        method: Method::Gks,
        diagnostics: Diagnostics {
            v11_inv_norm: Some(nu),
            sigma_k: factors.sigma_k.clone(),
            f: pivot.f(),
            ..Default::default()
        },
    })
}

pub fn gks_select(
    a: &LinearOperator,
    k: usize,
    svd: &SvdBackend,
    pivot: PivotRule,
) -> Result<SelectionResult> {
    check_k(k, a.in_dim())?;
    let before = a.counts();
    let factors = svd.factors(a, k)?;
    let mut out = gks_from_factors(&factors, pivot)?;
    out.diagnostics.applies = a.counts().since(before);
    out.diagnostics.seed = svd.seed();
    Ok(out)
}

/// Gaussian sketch `Y = ΩA` (`(k+p) × m`) with `Ω` entries `N(0, 1/(k+p))`,
/// then pivoted QR on `Y`. Consumes exactly `k + p` adjoint applies of `A`
/// and no forward applies.
pub fn raf_select(
    a: &LinearOperator,
    k: usize,
    p: usize,
    seed: u64,
    pivot: PivotRule,
) -> Result<SelectionResult> {
    let (n, m) = (a.out_dim(), a.in_dim());
    check_k(k, m)?;
    let d = k + p;
    let before = a.counts();
    let omega_t = gaussian_matrix(n, d, 1.0 / d as f64, seed)?;
    let y = apply_block(a, &omega_t, true).transpose();
    let fact = pivot.factor(&y, k).map_err(|e| match e {
        Error::Dimension(msg) => Error::Dimension(msg),
        Error::Singular(msg) => Error::RankDeficient(format!("sketch: {msg}")),
        other => other,
    })?;
    if fact.r[(k - 1, k - 1)] == 0.0 {
        return Err(Error::RankDeficient("sketch has rank below k".into()));
    }
    Ok(SelectionResult {
        indices: fact.leading(k),
        weights: None,
        method: Method::Raf,
        diagnostics: Diagnostics {
            applies: a.counts().since(before),
            seed: Some(seed),
            f: pivot.f(),
            ..Default::default()
        },
    })
}

/// Squared row norms of a basis with orthonormal columns; they sum to `k`.
pub fn leverage_scores(v_k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let k = v_k.ncols();
    let defect = (v_k.tr_mul(v_k) - DMatrix::identity(k, k)).amax();
    if defect > 1e-8 {
        return Err(Error::Contract(format!(
            "leverage scores need orthonormal columns (defect {defect:e})"
        )));
    }
    Ok(v_k.row_iter().map(|r| r.norm_squared()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    pub probabilities: Vec<f64>,
    pub leverage: Vec<f64>,
}

/// `π_j = β τ_j / k + (1 − β)/m`; `β = ½` is the even mixture of leverage
/// and uniform sampling.
pub fn sampling_distribution(tau: &[f64], k: usize, beta: f64) -> Result<SamplingDistribution> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1], got {beta}")));
    }
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let m = tau.len() as f64;
    let probabilities = tau
        .iter()
        .map(|t| beta * t / k as f64 + (1.0 - beta) / m)
        .collect();
    Ok(SamplingDistribution { probabilities, leverage: tau.to_vec() })
}

/// `s = min(⌈k log k⌉, m)`, raised to `k` when `k log k < k`.
pub fn default_samples(k: usize, m: usize) -> usize {
    let kf = k as f64;
    let s = (kf * kf.ln()).ceil() as usize;
    s.max(k).min(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    /// Number of samples drawn with replacement; `None` uses [`default_samples`].
    pub samples: Option<usize>,
    pub beta: f64,
    pub pivot: PivotRule,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self { samples: None, beta: 0.9, pivot: PivotRule::Qrcp }
    }
}

/// Hybrid stages 1 and 2 on a precomputed basis `V_k` (`m × k`).
pub fn hybrid_from_basis(
    v_k: &DMatrix<f64>,
    cfg: &HybridConfig,
    seed: u64,
) -> Result<SelectionResult> {
    let (m, k) = v_k.shape();
    check_k(k, m)?;
    let s = cfg.samples.unwrap_or_else(|| default_samples(k, m));
    if s < k {
        return Err(Error::Domain(format!("need s >= k, got s = {s}, k = {k}")));
    }
    let tau = leverage_scores(v_k)?;
    let dist = sampling_distribution(&tau, k, cfg.beta)?;
    let sampler = WeightedIndex::new(&dist.probabilities)
        .map_err(|e| Error::Domain(format!("invalid sampling probabilities: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<usize> = (0..s).map(|_| sampler.sample(&mut rng)).collect();
    let distinct: HashSet<usize> = sampled.iter().copied().collect();
    if distinct.len() < k {
        return Err(Error::Resample { distinct: distinct.len(), needed: k });
    }
    let weights: Vec<f64> = sampled
        .iter()
        .map(|&i| 1.0 / (s as f64 * dist.probabilities[i]).sqrt())
        .collect();
    let weighted = DMatrix::from_fn(k, s, |r, c| v_k[(sampled[c], r)] * weights[c]);
    let sample_sigma_min = singular_values(&weighted).get(k - 1).copied();

    let fact = cfg.pivot.factor(&weighted, k)?;
    let picked = fact.leading(k);
    let indices: Vec<usize> = picked.iter().map(|&c| sampled[c]).collect();
    let unique: HashSet<usize> = indices.iter().copied().collect();
    if unique.len() < k {
        return Err(Error::Resample { distinct: unique.len(), needed: k });
    }
    let nu = inverse_spectral_norm(&v11(v_k, &indices))?;
    Ok(SelectionResult {
        indices,
        weights: Some(picked.iter().map(|&c| weights[c]).collect()),
        method: Method::Hybrid,
        diagnostics: Diagnostics {
            v11_inv_norm: Some(nu),
            seed: Some(seed),
            samples: Some(s),
            f: cfg.pivot.f(),
            beta: Some(cfg.beta),
            sample_sigma_min,
            sampled: Some(sampled),
            ..Default::default()
        },
    })
}

pub fn hybrid_select(
    a: &LinearOperator,
    k: usize,
    svd: &SvdBackend,
    cfg: &HybridConfig,
    seed: u64,
) -> Result<SelectionResult> {
    check_k(k, a.in_dim())?;
    let before = a.counts();
    let factors = svd.factors(a, k)?;
    let mut out = hybrid_from_basis(&factors.v_k, cfg, seed)?;
    out.diagnostics.sigma_k = factors.sigma_k;
    out.diagnostics.applies = a.counts().since(before);
    Ok(out)
}

/// Incremental Cholesky factor of `I + XᵀX` for the greedy search.
struct GramFactor {
    cols: Vec<DVector<f64>>,
    l: DMatrix<f64>,
}

impl GramFactor {
    fn new() -> Self {
        Self { cols: Vec::new(), l: DMatrix::zeros(0, 0) }
    }

    /// Schur complement `1 + aᵀa − ‖L⁻¹Xᵀa‖²` and the solve `L⁻¹Xᵀa`.
    fn schur(&self, a: &DVector<f64>) -> (f64, DVector<f64>) {
        let b = DVector::from_iterator(self.cols.len(), self.cols.iter().map(|c| c.dot(a)));
        let w = self
            .l
            .solve_lower_triangular(&b)
            .expect("Cholesky factor of I + XᵀX has a positive diagonal");
        (1.0 + a.norm_squared() - w.norm_squared(), w)
    }

    fn push(&mut self, a: DVector<f64>, schur: f64, w: DVector<f64>) {
        let t = self.cols.len();
        self.cols.push(a);
        if schur >= 1.0 - 1e-10 {
            let mut l = self.l.clone().resize(t + 1, t + 1, 0.0);
            for j in 0..t {
                l[(t, j)] = w[j];
            }
            l[(t, t)] = schur.max(1.0).sqrt();
            self.l = l;
        } else {
            self.refactor();
        }
    }

    fn refactor(&mut self) {
        let x = DMatrix::from_columns(&self.cols);
        let t = self.cols.len();
        let gram = x.tr_mul(&x) + DMatrix::identity(t, t);
        self.l = gram
            .cholesky()
            .expect("I + XᵀX is positive definite")
            .l();
    }
}

/// Greedy D-optimal selection over columns produced by `column(j)`.
/// Every step re-extracts each remaining candidate column.
fn greedy_with<F>(m: usize, k: usize, mut column: F) -> Vec<usize>
where
    F: FnMut(usize) -> DVector<f64>,
{
    let mut gram = GramFactor::new();
    let mut selected = Vec::with_capacity(k);
    let mut taken = vec![false; m];
    for _ in 0..k {
        let mut best: Option<(usize, f64, DVector<f64>, DVector<f64>)> = None;
        for j in 0..m {
            if taken[j] {
                continue;
            }
            let a = column(j);
            let (s, w) = gram.schur(&a);
            if best.as_ref().is_none_or(|b| s > b.1) {
                best = Some((j, s, a, w));
            }
        }
        let (j, s, a, w) = best.expect("k <= m leaves a candidate");
        taken[j] = true;
        selected.push(j);
        gram.push(a, s, w);
    }
    selected
}

/// Column extractions consumed by [`greedy_select`] on an operator.
pub fn greedy_extraction_count(m: usize, k: usize) -> u64 {
    (m * k - k * (k - 1) / 2) as u64
}

/// Greedy selection on a matrix-free operator; each candidate column is
/// one forward apply of `A`.
pub fn greedy_select(a: &LinearOperator, k: usize) -> Result<SelectionResult> {
    let m = a.in_dim();
    check_k(k, m)?;
    let before = a.counts();
    let indices = greedy_with(m, k, |j| a.column(j));
    Ok(SelectionResult {
        indices,
        weights: None,
        method: Method::Greedy,
        diagnostics: Diagnostics { applies: a.counts().since(before), ..Default::default() },
    })
}

pub fn greedy_select_dense(a: &DMatrix<f64>, k: usize) -> Result<SelectionResult> {
    let m = a.ncols();
    check_k(k, m)?;
    let indices = greedy_with(m, k, |j| a.column(j).into_owned());
    Ok(SelectionResult {
        indices,
        weights: None,
        method: Method::Greedy,
        diagnostics: Diagnostics::default(),
    })
}

/// Uniform `k`-subset of `0..m` without replacement.
pub fn random_select(m: usize, k: usize, seed: u64) -> Result<SelectionResult> {
    if k > m {
        return Err(Error::Dimension(format!("k = {k} exceeds m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = rand::seq::index::sample(&mut rng, m, k).into_vec();
    Ok(SelectionResult {
        indices,
        weights: None,
        method: Method::Random,
        diagnostics: Diagnostics { seed: Some(seed), ..Default::default() },
    })
}
