//! Dense kernels: pivoted QR (Businger–Golub and strong rank-revealing),
//! sorted SVD helpers, and the D-optimality log-determinant.
//!
//! Matrices are `nalgebra::DMatrix<f64>` (column-major). All routines are
//! pure and allocate their outputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cutoff used for "rank >= k" checks.
pub const RANK_TOL: f64 = 1e-12;

/// Relative cutoff below which `1/sigma_min` is reported as infinite.
pub const INF_NORM_TOL: f64 = 1e-14;

/// Thin SVD with singular values sorted in nonincreasing order.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    /// Right singular vectors stored as columns (`V`, not `Vᵀ`).
    pub v: DMatrix<f64>,
}

pub fn dense_svd(m: &DMatrix<f64>) -> DenseSvd {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return DenseSvd {
            u: DMatrix::zeros(rows, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let vt = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut su = DMatrix::zeros(rows, r);
    let mut sv = DMatrix::zeros(cols, r);
    let mut ss = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &vt.row(src).transpose());
        ss[dst] = svd.singular_values[src];
    }
    DenseSvd { u: su, sigma: ss, v: sv }
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis for the column space of `m` (thin Householder Q).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Pivoted QR factorization `M Π = Q R`.
///
/// `q` is `rows × r` with orthonormal columns, `r` is `r × cols` upper
/// triangular with nonnegative diagonal, `r = min(rows, cols)`.
/// `permutation[j]` is the original column placed at position `j`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub permutation: Vec<usize>,
}

impl PivotedQr {
    /// Original indices of the first `k` pivoted columns.
    pub fn leading(&self, k: usize) -> Vec<usize> {
        self.permutation[..k].to_vec()
    }

    pub fn r11(&self, k: usize) -> DMatrix<f64> {
        self.r.view((0, 0), (k, k)).into_owned()
    }

    pub fn r12(&self, k: usize) -> DMatrix<f64> {
        let cols = self.r.ncols();
        self.r.view((0, k), (k, cols - k)).into_owned()
    }

    /// `R₁₁⁻¹R₁₂`, the interpolation coefficients bounded by `f` in sRRQR.
    pub fn interpolation_coefficients(&self, k: usize) -> Result<DMatrix<f64>> {
        let r11 = self.r11(k);
        let r12 = self.r12(k);
        r11.solve_upper_triangular(&r12)
            .ok_or_else(|| Error::Singular("R11 has a zero diagonal entry".into()))
    }
}

fn permute_columns(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), perm.len());
    for (dst, &src) in perm.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Householder QR of `a` in place with optional greedy column pivoting.
/// On return `a` holds R above the diagonal and is otherwise discarded.
fn householder_qr(mut a: DMatrix<f64>, mut perm: Vec<usize>, pivot: bool) -> PivotedQr {
    let (rows, cols) = a.shape();
    let r = rows.min(cols);
    let mut reflectors: Vec<(DVector<f64>, f64)> = Vec::with_capacity(r);

    for j in 0..r {
        if pivot {
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..cols {
                let norm = a.view((j, c), (rows - j, 1)).norm_squared();
                let better = norm > best_norm || (norm == best_norm && perm[c] < perm[best]);
                if better {
                    best = c;
                    best_norm = norm;
                }
            }
            if best != j {
                a.swap_columns(j, best);
                perm.swap(j, best);
            }
        }

        let x = a.view((j, j), (rows - j, 1)).into_owned();
        let alpha = x[0];
        let xnorm = x.norm();
        if xnorm == 0.0 {
            reflectors.push((DVector::zeros(rows - j), 0.0));
            continue;
        }
        let beta = if alpha >= 0.0 { -xnorm } else { xnorm };
        let tau = (beta - alpha) / beta;
        let mut v = x.column(0).into_owned();
        let scale = 1.0 / (alpha - beta);
        v[0] = 1.0;
        for i in 1..v.len() {
            v[i] *= scale;
        }
        // apply H = I - tau v vᵀ to the trailing block
        for c in j..cols {
            let mut col = a.column_mut(c);
            let mut col = col.rows_mut(j, rows - j);
            let dot = v.dot(&col);
            col.axpy(-tau * dot, &v, 1.0);
        }
        a[(j, j)] = beta;
        for i in (j + 1)..rows {
            a[(i, j)] = 0.0;
        }
        reflectors.push((v, tau));
    }

    let mut q = DMatrix::<f64>::identity(rows, r);
    for (j, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == 0.0 {
            continue;
        }
        for c in 0..r {
            let mut col = q.column_mut(c);
            let mut col = col.rows_mut(j, rows - j);
            let dot = v.dot(&col);
            col.axpy(-tau * dot, v, 1.0);
        }
    }

    let mut rmat = a.rows(0, r).into_owned();
    for i in 0..r {
        if rmat[(i, i)] < 0.0 {
            rmat.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    PivotedQr { q, r: rmat, permutation: perm }
}

fn check_rank_arg(m: &DMatrix<f64>, k: usize) -> Result<()> {
    let r = m.nrows().min(m.ncols());
    if k > r {
        return Err(Error::Dimension(format!(
            "k = {k} exceeds min(rows, cols) = {r}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// QR with column pivoting (Businger–Golub). At every step the trailing
/// column of largest residual norm moves to the front; exact ties go to
/// the lowest original column index.
pub fn qrcp(m: &DMatrix<f64>, k: usize) -> Result<PivotedQr> {
    check_rank_arg(m, k)?;
    Ok(householder_qr(m.clone(), (0..m.ncols()).collect(), true))
}

/// Unpivoted Householder QR of `m` with columns taken in `perm` order.
pub fn qr_with_permutation(m: &DMatrix<f64>, perm: &[usize]) -> PivotedQr {
    householder_qr(permute_columns(m, perm), perm.to_vec(), false)
}

/// Strong rank-revealing QR with parameter `f >= 1`.
///
/// Starts from QRCP and swaps a leading column `i` with a trailing column
/// `j` while `(R₁₁⁻¹R₁₂)²ᵢⱼ + (γⱼ(R₂₂)/ωᵢ(R₁₁))² > f²`, i.e. while some swap
/// grows `|det R₁₁|` by more than `f`. On exit every entry of `R₁₁⁻¹R₁₂` is
/// bounded by `f` in magnitude.
pub fn srrqr(m: &DMatrix<f64>, k: usize, f: f64) -> Result<PivotedQr> {
    check_rank_arg(m, k)?;
    if !(f >= 1.0) {
        return Err(Error::Domain(format!("sRRQR requires f >= 1, got {f}")));
    }
    let mut fact = qrcp(m, k)?;
    let cols = m.ncols();
    if k == 0 || k == cols {
        ensure_leading_nonsingular(&fact, k)?;
        return Ok(fact);
    }
    let r_all = fact.r.nrows();
    let max_iter = 10 * k * cols;
    let f2 = f * f;
    let mut iter = 0;
    loop {
        ensure_leading_nonsingular(&fact, k)?;
        let r11 = fact.r11(k);
        let r11_inv = r11
            .clone()
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| Error::Singular("R11 has a zero diagonal entry".into()))?;
        let coeffs = &r11_inv * fact.r12(k);
        let inv_row_norms: Vec<f64> = (0..k).map(|i| r11_inv.row(i).norm()).collect();
        let trailing_norms: Vec<f64> = (0..cols - k)
            .map(|j| {
                if r_all > k {
                    fact.r.view((k, k + j), (r_all - k, 1)).norm()
                } else {
                    0.0
                }
            })
            .collect();

        let mut best = (0usize, 0usize, f2);
        let mut found = false;
        for j in 0..cols - k {
            for i in 0..k {
                let g = trailing_norms[j] * inv_row_norms[i];
                let rho2 = coeffs[(i, j)].powi(2) + g * g;
                if rho2 > best.2 {
                    best = (i, j, rho2);
                    found = true;
                }
            }
        }
        if !found {
            return Ok(fact);
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::Convergence(format!(
                "sRRQR swap loop exceeded {max_iter} iterations"
            )));
        }
        let mut perm = fact.permutation.clone();
        perm.swap(best.0, k + best.1);
        fact = qr_with_permutation(m, &perm);
    }
}

fn ensure_leading_nonsingular(fact: &PivotedQr, k: usize) -> Result<()> {
    if k == 0 {
        return Ok(());
    }
    let scale = fact.r[(0, 0)].abs();
    let smin = singular_values(&fact.r11(k)).last().copied().unwrap_or(0.0);
    if scale == 0.0 || smin <= RANK_TOL * scale {
        return Err(Error::Singular(format!(
            "leading {k}x{k} block is numerically rank deficient (sigma_min = {smin:e})"
        )));
    }
    Ok(())
}

/// `Σᵢ log(1 + σᵢ²)`, the D-optimality of a matrix with singular values `sigma`.
pub fn phi_d(sigma: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for &s in sigma {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("singular value {s} is not a finite nonnegative number")));
        }
        acc += (s * s).ln_1p();
    }
    Ok(acc)
}

/// `logdet(I + CCᵀ)` evaluated on the smaller Gram side through a Cholesky
/// factor of `I + CᵀC` or `I + CCᵀ`.
pub fn phi_d_of_matrix(c: &DMatrix<f64>) -> Result<f64> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let (rows, cols) = c.shape();
    if rows == 0 || cols == 0 {
        return Ok(0.0);
    }
    let gram = if cols <= rows { c.tr_mul(c) } else { c * c.transpose() };
    let dim = gram.nrows();
    let shifted = gram + DMatrix::identity(dim, dim);
    match shifted.clone().cholesky() {
        Some(ch) => Ok(2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()),
        None => {
            // Gram matrices shifted by I are SPD; fall back to eigenvalues
            // if rounding broke the factorization.
            let eig = shifted.symmetric_eigenvalues();
            Ok(eig.iter().map(|l| l.max(1.0).ln()).sum())
        }
    }
}

/// `‖M⁻¹‖₂ = 1/σ_min(M)`, or `+∞` when `σ_min <= 1e-14 σ_max`.
pub fn inverse_spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "inverse norm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    let s = singular_values(m);
    let smax = s[0];
    let smin = *s.last().unwrap();
    if smax == 0.0 || smin <= INF_NORM_TOL * smax {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / smin)
}

/// `q_f(m, k) = √(1 + f²k(m−k))`.
pub fn qf_factor(m: usize, k: usize, f: f64) -> Result<f64> {
    if k > m {
        return Err(Error::Dimension(format!("k = {k} exceeds m = {m}")));
    }
    if !(f >= 1.0) {
        return Err(Error::Domain(format!("f must be >= 1, got {f}")));
    }
    let (m, k) = (m as f64, k as f64);
    Ok((1.0 + f * f * k * (m - k)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn check_factorization(m: &DMatrix<f64>, f: &PivotedQr) {
        let r = f.q.ncols();
        let qtq = f.q.tr_mul(&f.q) - DMatrix::identity(r, r);
        assert!(qtq.norm() <= 1e-10 * m.ncols() as f64);
        let mp = permute_columns(m, &f.permutation);
        let rel = (&mp - &f.q * &f.r).norm() / m.norm().max(1e-300);
        assert!(rel <= 1e-10, "reconstruction {rel}");
        for i in 0..r {
            assert!(f.r[(i, i)] >= 0.0);
            for j in 0..i.min(f.r.ncols()) {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
        let mut sorted = f.permutation.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..m.ncols()).collect::<Vec<_>>());
    }

    #[test]
    fn qrcp_identity_keeps_order() {
        let m = DMatrix::<f64>::identity(3, 3);
        let f = qrcp(&m, 3).unwrap();
        assert_eq!(f.permutation, vec![0, 1, 2]);
        assert!((&f.r - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
        check_factorization(&m, &f);
    }

    #[test]
    fn qrcp_picks_only_nonzero_column() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let f = qrcp(&m, 1).unwrap();
        assert_eq!(f.permutation[0], 1);
    }

    #[test]
    fn qrcp_rejects_large_k() {
        let m = DMatrix::<f64>::identity(3, 4);
        assert!(matches!(qrcp(&m, 4), Err(Error::Dimension(_))));
    }

    #[test]
    fn qrcp_rectangular_factorizations() {
        for (rows, cols, seed) in [(4, 9, 1), (9, 4, 2), (5, 5, 3), (1, 6, 4)] {
            let m = random(rows, cols, seed);
            let f = qrcp(&m, rows.min(cols)).unwrap();
            check_factorization(&m, &f);
            let d: Vec<f64> = (0..rows.min(cols)).map(|i| f.r[(i, i)]).collect();
            assert!(d.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    #[test]
    fn srrqr_orthonormal_rows_keep_leading_block() {
        let mut m = DMatrix::zeros(3, 7);
        for i in 0..3 {
            m[(i, i)] = 1.0;
        }
        let f = srrqr(&m, 3, 1.0).unwrap();
        let mut lead = f.leading(3);
        lead.sort_unstable();
        assert_eq!(lead, vec![0, 1, 2]);
        assert!(f.interpolation_coefficients(3).unwrap().amax() == 0.0);
    }

    #[test]
    fn srrqr_rejects_rank_deficient_leading_block() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(srrqr(&m, 2, 2.0), Err(Error::Singular(_))));
    }

    #[test]
    fn srrqr_rejects_small_f() {
        let m = random(3, 5, 0);
        assert!(matches!(srrqr(&m, 2, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_d_values() {
        assert_eq!(phi_d(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let ones = phi_d(&[1.0; 6]).unwrap();
        assert!((ones - 6.0 * 2f64.ln()).abs() < 1e-14);
        assert!((phi_d(&[2.0, 1.0]).unwrap() - 10f64.ln()).abs() < 1e-14);
        assert!(matches!(phi_d(&[1.0, -0.1]), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_d_of_matrix_values() {
        assert_eq!(phi_d_of_matrix(&DMatrix::zeros(5, 3)).unwrap(), 0.0);
        let mut c = DMatrix::zeros(6, 4);
        for i in 0..4 {
            c[(i + 1, i)] = 1.0;
        }
        assert!((phi_d_of_matrix(&c).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-13);
        let c = random(7, 3, 11);
        let via_svd = phi_d(&singular_values(&c)).unwrap();
        let direct = phi_d_of_matrix(&c).unwrap();
        assert!((via_svd - direct).abs() <= 1e-10 * via_svd.abs());
    }

    #[test]
    fn inverse_norm_values() {
        assert!((inverse_spectral_norm(&DMatrix::identity(4, 4)).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        assert!((inverse_spectral_norm(&d).unwrap() - 2.0).abs() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(inverse_spectral_norm(&s).unwrap(), f64::INFINITY);
        assert!(matches!(
            inverse_spectral_norm(&DMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn qf_values() {
        assert_eq!(qf_factor(7, 7, 1.0).unwrap(), 1.0);
        assert!((qf_factor(100, 30, 1.0).unwrap() - 2101f64.sqrt()).abs() < 1e-12);
        let expected = (1.0 + 4.0 * 50.0 * 206.0f64).sqrt();
        assert!((qf_factor(256, 50, 2.0).unwrap() - expected).abs() < 1e-10);
        assert!(matches!(qf_factor(3, 4, 1.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn dense_svd_sorted_and_reconstructs() {
        let m = random(6, 4, 9);
        let s = dense_svd(&m);
        assert!(s.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
        let rebuilt = &s.u * DMatrix::from_diagonal(&s.sigma) * s.v.transpose();
        assert!((rebuilt - m).norm() < 1e-12);
    }
}
