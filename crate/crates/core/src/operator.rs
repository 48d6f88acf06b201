//! Matrix-free linear operators with adjoints and apply counters.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest `rows * cols` that [`densify`] will materialize.
pub const MAX_DENSE_ENTRIES: usize = 10_000_000;

/// A linear map `R^in_dim -> R^out_dim` together with its transpose.
///
/// Implementations must be stateless with respect to application so that
/// columns of a sketch may be applied concurrently.
pub trait LinearMap: Send + Sync {
    fn out_dim(&self) -> usize;
    fn in_dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64>;
}

/// Snapshot of forward/adjoint application counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ApplyCounts {
    pub forward: u64,
    pub adjoint: u64,
}

impl ApplyCounts {
    pub fn total(&self) -> u64 {
        self.forward + self.adjoint
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: ApplyCounts) -> ApplyCounts {
        ApplyCounts {
            forward: self.forward - earlier.forward,
            adjoint: self.adjoint - earlier.adjoint,
        }
    }
}

#[derive(Default)]
struct Counters {
    forward: AtomicU64,
    adjoint: AtomicU64,
}

/// Shared handle to a [`LinearMap`] with atomic apply counters.
///
/// Clones share the map and the counters, so a composed operator and the
/// model that owns the original see the same counts.
#[derive(Clone)]
pub struct LinearOperator {
    map: Arc<dyn LinearMap>,
    counters: Arc<Counters>,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("out_dim", &self.out_dim())
            .field("in_dim", &self.in_dim())
            .field("counts", &self.counts())
            .finish()
    }
}

impl LinearOperator {
    pub fn new(map: impl LinearMap + 'static) -> Self {
        Self {
            map: Arc::new(map),
            counters: Arc::new(Counters::default()),
        }
    }

    pub fn from_dense(m: DMatrix<f64>) -> Self {
        Self::new(DenseMap(m))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_dense(DMatrix::identity(n, n))
    }

    pub fn out_dim(&self) -> usize {
        self.map.out_dim()
    }

    pub fn in_dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.in_dim(), "apply: input length mismatch");
        self.counters.forward.fetch_add(1, Ordering::Relaxed);
        self.map.apply(x)
    }

    pub fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.out_dim(), "apply_adjoint: input length mismatch");
        self.counters.adjoint.fetch_add(1, Ordering::Relaxed);
        self.map.apply_adjoint(y)
    }

    pub fn counts(&self) -> ApplyCounts {
        ApplyCounts {
            forward: self.counters.forward.load(Ordering::Relaxed),
            adjoint: self.counters.adjoint.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counts(&self) {
        self.counters.forward.store(0, Ordering::Relaxed);
        self.counters.adjoint.store(0, Ordering::Relaxed);
    }

    /// `e_j`-column of the operator (one forward apply).
    pub fn column(&self, j: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.in_dim());
        e[j] = 1.0;
        self.apply(&e)
    }

    /// Operator with forward and adjoint exchanged. Counters are fresh and
    /// the underlying map's counters still tick.
    pub fn transpose(&self) -> LinearOperator {
        LinearOperator::new(Transposed(self.clone()))
    }

    /// Scaled copy `c·A` with its own counters that also tick the original's.
    pub fn scaled(&self, c: f64) -> LinearOperator {
        LinearOperator::new(Scaled { inner: self.clone(), c })
    }
}

/// Dense matrix as an operator.
#[derive(Debug, Clone)]
pub struct DenseMap(pub DMatrix<f64>);

impl LinearMap for DenseMap {
    fn out_dim(&self) -> usize {
        self.0.nrows()
    }
    fn in_dim(&self) -> usize {
        self.0.ncols()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(y)
    }
}

struct Transposed(LinearOperator);

impl LinearMap for Transposed {
    fn out_dim(&self) -> usize {
        self.0.in_dim()
    }
    fn in_dim(&self) -> usize {
        self.0.out_dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.apply_adjoint(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.0.apply(y)
    }
}

struct Scaled {
    inner: LinearOperator,
    c: f64,
}

impl LinearMap for Scaled {
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.apply(x) * self.c
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.inner.apply_adjoint(y) * self.c
    }
}

struct Preconditioned {
    forward: LinearOperator,
    prior_factor: LinearOperator,
    inv_eta: f64,
}

impl LinearMap for Preconditioned {
    fn out_dim(&self) -> usize {
        self.prior_factor.out_dim()
    }
    fn in_dim(&self) -> usize {
        self.forward.out_dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.prior_factor.apply(&self.forward.apply_adjoint(x)) * self.inv_eta
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.forward.apply(&self.prior_factor.apply_adjoint(y)) * self.inv_eta
    }
}

/// `A = η⁻¹ G Fᵀ` (`n × m`), whose columns correspond to candidate sensors.
///
/// Keeps handles to `F` and `G` so callers can read solve counts of the
/// forward model: a forward apply of `A` is one adjoint solve with `F`, an
/// adjoint apply of `A` is one forward solve with `F`.
#[derive(Debug, Clone)]
pub struct PreconditionedOperator {
    pub op: LinearOperator,
    pub forward: LinearOperator,
    pub prior_factor: LinearOperator,
    pub eta: f64,
}

impl PreconditionedOperator {
    /// Solve counts of the forward model `F` (the cost currency).
    pub fn model_counts(&self) -> ApplyCounts {
        self.forward.counts()
    }
}

pub fn compose_preconditioned(
    forward: &LinearOperator,
    prior_factor: &LinearOperator,
    eta: f64,
) -> Result<PreconditionedOperator> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("noise level must be positive, got {eta}")));
    }
    if prior_factor.in_dim() != forward.in_dim() {
        return Err(Error::Dimension(format!(
            "prior factor maps R^{} but forward model expects parameters in R^{}",
            prior_factor.in_dim(),
            forward.in_dim()
        )));
    }
    let op = LinearOperator::new(Preconditioned {
        forward: forward.clone(),
        prior_factor: prior_factor.clone(),
        inv_eta: 1.0 / eta,
    });
    Ok(PreconditionedOperator {
        op,
        forward: forward.clone(),
        prior_factor: prior_factor.clone(),
        eta,
    })
}

fn guard(rows: usize, cols: usize) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_DENSE_ENTRIES => Ok(()),
        _ => Err(Error::SizeGuard(format!(
            "densifying a {rows}x{cols} operator exceeds {MAX_DENSE_ENTRIES} entries"
        ))),
    }
}

/// Dense matrix of `op`, one forward apply per column.
pub fn densify(op: &LinearOperator) -> Result<DMatrix<f64>> {
    guard(op.out_dim(), op.in_dim())?;
    let mut out = DMatrix::zeros(op.out_dim(), op.in_dim());
    for j in 0..op.in_dim() {
        out.set_column(j, &op.column(j));
    }
    Ok(out)
}

/// Dense matrix of `op` assembled row by row from adjoint applies.
/// Cheaper than [`densify`] when `out_dim < in_dim`.
pub fn densify_by_rows(op: &LinearOperator) -> Result<DMatrix<f64>> {
    guard(op.out_dim(), op.in_dim())?;
    let mut out = DMatrix::zeros(op.out_dim(), op.in_dim());
    for i in 0..op.out_dim() {
        let mut e = DVector::zeros(op.out_dim());
        e[i] = 1.0;
        out.set_row(i, &op.apply_adjoint(&e).transpose());
    }
    Ok(out)
}

/// Largest relative defect `|⟨Ax,y⟩ − ⟨x,Aᵀy⟩| / (‖Ax‖‖y‖)` over seeded
/// Gaussian probes.
pub fn adjoint_consistency_check(op: &LinearOperator, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let x = DVector::from_fn(op.in_dim(), |_, _| StandardNormal.sample(&mut rng));
        let y = DVector::from_fn(op.out_dim(), |_, _| StandardNormal.sample(&mut rng));
        let ax = op.apply(&x);
        let aty = op.apply_adjoint(&y);
        let scale = ax.norm() * y.norm();
        if scale == 0.0 {
            continue;
        }
        worst = worst.max((ax.dot(&y) - x.dot(&aty)).abs() / scale);
    }
    worst
}
